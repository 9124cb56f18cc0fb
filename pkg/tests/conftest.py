import numpy as np
import pytest
from pathlib import Path

from hyperddc import ChoiceData, load_model, load_restrictions, simulate_panel

SPECS = Path(__file__).parent.parent / "specs"


@pytest.fixture(scope="session")
def sixstate_spec():
    return load_model(SPECS / "sixstate.json")


@pytest.fixture(scope="session")
def sixstate_restrictions(sixstate_spec):
    return load_restrictions(SPECS / "sixstate_restrictions.json", sixstate_spec)


@pytest.fixture(scope="session")
def sixstate_restrictions_t2(sixstate_spec):
    return load_restrictions(SPECS / "sixstate_restrictions_t2.json", sixstate_spec)


@pytest.fixture(scope="session")
def sixstate_data(sixstate_spec):
    return ChoiceData.exact(sixstate_spec.model, sixstate_spec.discount)


@pytest.fixture(scope="session")
def stationary3_spec():
    return load_model(SPECS / "stationary3.json")


@pytest.fixture(scope="session")
def panel_1m(sixstate_spec):
    """One million simulated agents from the six-state model, shared across tests."""
    return simulate_panel(
        sixstate_spec.model, sixstate_spec.discount, n_agents=1_000_000, seed=42
    )


def pytest_addoption(parser):
    parser.addoption(
        "--regen-oracles",
        action="store_true",
        default=False,
        help="regenerate frozen Monte Carlo oracle tables before running",
    )
