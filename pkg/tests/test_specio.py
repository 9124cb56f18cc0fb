import json

import numpy as np
import pytest

from hyperddc import SpecError, load_model, load_restrictions


def write(tmp_path, name, doc):
    path = tmp_path / name
    path.write_text(json.dumps(doc, indent=1) if not isinstance(doc, str) else doc)
    return path


def valid_finite_doc():
    return {
        "horizon": 2,
        "choices": ["a", "b"],
        "states": ["x", "y"],
        "utilities": {"a": [[1.0, 0.5], [0.0, -0.5]]},
        "transitions": {
            "a": [[0.5, 0.5], [0.25, 0.75]],
            "b": [[0.9, 0.1], [0.4, 0.6]],
        },
        "discount": {"beta": 0.9, "delta": 0.5},
    }


class TestLoadModel:
    def test_round_trip(self, tmp_path):
        path = write(tmp_path, "m.json", valid_finite_doc())
        spec = load_model(path)
        assert spec.model.horizon == 2
        assert spec.model.n_states == 2
        assert spec.model.utilities[0, 0, 0] == 1.0  # choice a, period 1, state x
        assert spec.model.utilities[0, 1, 1] == -0.5
        assert spec.discount.beta == 0.9

    def test_syntax_error_reports_line(self, tmp_path):
        path = write(tmp_path, "bad.json", '{\n "horizon": 2,\n "choices": [,]\n}')
        with pytest.raises(SpecError, match=r"line 3"):
            load_model(path)

    def test_nonstochastic_row_rejected(self, tmp_path):
        doc = valid_finite_doc()
        doc["transitions"]["a"][0] = [0.6, 0.6]
        path = write(tmp_path, "m.json", doc)
        with pytest.raises(SpecError, match="row 0 sums to 1.2"):
            load_model(path)

    def test_reference_utilities_rejected(self, tmp_path):
        doc = valid_finite_doc()
        doc["utilities"]["b"] = [[0.0, 0.0], [0.0, 0.0]]
        path = write(tmp_path, "m.json", doc)
        with pytest.raises(SpecError, match="reference"):
            load_model(path)

    def test_wrong_grid_shape_rejected(self, tmp_path):
        doc = valid_finite_doc()
        doc["utilities"]["a"] = [[1.0], [0.0]]
        path = write(tmp_path, "m.json", doc)
        with pytest.raises(SpecError, match="2 states x 2 periods"):
            load_model(path)

    def test_overrides_replace_discount(self, tmp_path):
        path = write(tmp_path, "m.json", valid_finite_doc())
        spec = load_model(path, beta=0.5, delta=0.25)
        assert spec.discount.beta == 0.5
        assert spec.discount.delta == 0.25

    def test_stationary_without_discount_rejected(self, tmp_path):
        doc = valid_finite_doc()
        del doc["horizon"]
        del doc["discount"]
        doc["utilities"] = {"a": [1.0, -1.0]}
        path = write(tmp_path, "m.json", doc)
        with pytest.raises(SpecError, match="discount"):
            load_model(path)

    def test_stationary_delta_domain_enforced(self, tmp_path):
        doc = valid_finite_doc()
        del doc["horizon"]
        doc["utilities"] = {"a": [1.0, -1.0]}
        doc["discount"] = {"beta": 0.9, "delta": 1.0}
        path = write(tmp_path, "m.json", doc)
        with pytest.raises(SpecError, match="delta < 1"):
            load_model(path)


class TestLoadRestrictions:
    def test_labels_resolve(self, tmp_path):
        mpath = write(tmp_path, "m.json", valid_finite_doc())
        spec = load_model(mpath)
        rpath = write(
            tmp_path,
            "r.json",
            [{"choice": "a", "period": 1, "states": ["x", "y"]}],
        )
        (r,) = load_restrictions(rpath, spec)
        assert r.choice == 0
        assert r.periods == (0, 0)
        assert r.states == (0, 1)

    def test_unknown_state_label(self, tmp_path):
        mpath = write(tmp_path, "m.json", valid_finite_doc())
        spec = load_model(mpath)
        rpath = write(
            tmp_path, "r.json", [{"choice": "a", "period": 1, "states": ["x", "zz"]}]
        )
        with pytest.raises(SpecError, match="zz"):
            load_restrictions(rpath, spec)

    def test_terminal_period_rejected(self, tmp_path):
        mpath = write(tmp_path, "m.json", valid_finite_doc())
        spec = load_model(mpath)
        rpath = write(
            tmp_path, "r.json", [{"choice": "a", "period": 2, "states": ["x", "y"]}]
        )
        with pytest.raises(SpecError, match=r"\[1, 1\]"):
            load_restrictions(rpath, spec)

    def test_reference_choice_rejected(self, tmp_path):
        mpath = write(tmp_path, "m.json", valid_finite_doc())
        spec = load_model(mpath)
        rpath = write(
            tmp_path, "r.json", [{"choice": "b", "period": 1, "states": ["x", "y"]}]
        )
        with pytest.raises(SpecError, match="reference"):
            load_restrictions(rpath, spec)

    def test_bundled_specs_load(self, sixstate_spec, stationary3_spec):
        assert sixstate_spec.model.horizon == 3
        assert np.allclose(
            sixstate_spec.model.transitions.sum(axis=2), 1.0, atol=1e-12
        )
        assert stationary3_spec.discount.delta < 1.0
