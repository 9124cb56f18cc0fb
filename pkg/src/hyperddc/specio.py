"""Model-spec and restriction file loading.

Model specs are JSON documents with labeled choices and states; the loader
maps labels to contiguous 0-based indices, validates every model invariant,
and rejects bad files with diagnostics that carry the line (for syntax
errors) or the field path (for schema and invariant violations).
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass

import numpy as np

from .core import DiscountPair, FiniteModel, StationaryModel, validate_model
from .identify import ExclusionRestriction


class SpecError(ValueError):
    """A model-spec or restrictions file failed to parse or validate."""


def _find_line(text, field):
    """Best-effort line number of a top-level field, for diagnostics."""
    pattern = re.compile(r'"' + re.escape(field) + r'"\s*:')
    for lineno, line in enumerate(text.splitlines(), start=1):
        if pattern.search(line):
            return lineno
    return None


@dataclass(frozen=True)
class ModelSpec:
    """A loaded model with its label maps and any discount block."""

    model: object
    discount: DiscountPair
    choice_labels: tuple
    state_labels: tuple

    @property
    def is_stationary(self):
        return isinstance(self.model, StationaryModel)

    def state_index(self, label):
        try:
            return self.state_labels.index(label)
        except ValueError:
            raise SpecError(f"unknown state label {label!r}") from None

    def choice_index(self, label):
        try:
            return self.choice_labels.index(label)
        except ValueError:
            raise SpecError(f"unknown choice label {label!r}") from None


def _require(doc, field, kind, text, path):
    if field not in doc:
        raise SpecError(f"{path}: missing required field {field!r}")
    value = doc[field]
    if not isinstance(value, kind):
        line = _find_line(text, field)
        where = f"line {line}" if line else f"field {field!r}"
        raise SpecError(f"{path}: {where}: {field!r} has the wrong type")
    return value


def load_model(path, *, beta=None, delta=None):
    """Load a model-spec file, applying optional discount overrides.

    A ``horizon`` field marks a finite-horizon model whose utilities are
    given per choice as a states-by-periods grid; without it the model is
    stationary with one utility per state.  The reference choice is the last
    label in ``choices`` and must not appear in ``utilities``; transitions
    must cover every choice with row-stochastic matrices.
    """
    with open(path) as fh:
        text = fh.read()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as err:
        raise SpecError(f"{path}: line {err.lineno}, column {err.colno}: {err.msg}") from None
    if not isinstance(doc, dict):
        raise SpecError(f"{path}: top level must be a JSON object")

    choices = _require(doc, "choices", list, text, path)
    states = _require(doc, "states", list, text, path)
    if len(choices) < 2:
        raise SpecError(f"{path}: need at least two choice labels")
    if len(set(choices)) != len(choices) or len(set(states)) != len(states):
        raise SpecError(f"{path}: choice and state labels must be unique")
    k, j = len(choices), len(states)
    reference = choices[-1]

    utilities = _require(doc, "utilities", dict, text, path)
    if reference in utilities:
        raise SpecError(
            f"{path}: utilities must omit the reference choice {reference!r}, "
            "whose flow utility is fixed at zero"
        )
    missing = [c for c in choices[:-1] if c not in utilities]
    if missing:
        raise SpecError(f"{path}: utilities missing for choices {missing}")
    extra = [c for c in utilities if c not in choices]
    if extra:
        raise SpecError(f"{path}: utilities given for unknown choices {extra}")

    transitions_doc = _require(doc, "transitions", dict, text, path)
    missing = [c for c in choices if c not in transitions_doc]
    if missing:
        raise SpecError(f"{path}: transitions missing for choices {missing}")

    try:
        transitions = np.array([transitions_doc[c] for c in choices], dtype=float)
    except (TypeError, ValueError):
        raise SpecError(f"{path}: transitions must be numeric J x J matrices") from None
    if transitions.shape != (k, j, j):
        line = _find_line(text, "transitions")
        raise SpecError(
            f"{path}: line {line}: transitions must be {j} x {j} per choice, "
            f"got shape {transitions.shape[1:]}"
        )

    horizon = doc.get("horizon")
    if horizon is not None:
        if not isinstance(horizon, int) or horizon < 2:
            raise SpecError(f"{path}: horizon must be an integer >= 2")
        try:
            grids = np.array([utilities[c] for c in choices[:-1]], dtype=float)
        except (TypeError, ValueError):
            raise SpecError(f"{path}: utilities must be numeric grids") from None
        if grids.shape != (k - 1, j, horizon):
            line = _find_line(text, "utilities")
            raise SpecError(
                f"{path}: line {line}: each finite-horizon utility grid must be "
                f"{j} states x {horizon} periods, got {grids.shape[1:]}"
            )
        model = FiniteModel(utilities=grids.transpose(0, 2, 1), transitions=transitions)
    else:
        try:
            rows = np.array([utilities[c] for c in choices[:-1]], dtype=float)
        except (TypeError, ValueError):
            raise SpecError(f"{path}: utilities must be numeric vectors") from None
        if rows.shape != (k - 1, j):
            line = _find_line(text, "utilities")
            raise SpecError(
                f"{path}: line {line}: each stationary utility vector must have "
                f"{j} entries, got shape {rows.shape[1:]}"
            )
        model = None  # built after the discount block below

    block = doc.get("discount", {})
    if not isinstance(block, dict):
        raise SpecError(f"{path}: discount must be an object with beta and delta")
    beta = beta if beta is not None else block.get("beta")
    delta = delta if delta is not None else block.get("delta")
    disc = None
    if beta is not None and delta is not None:
        disc = DiscountPair(beta=float(beta), delta=float(delta))
    elif beta is not None or delta is not None:
        raise SpecError(f"{path}: discount needs both beta and delta")

    if horizon is None:
        if disc is None:
            raise SpecError(
                f"{path}: stationary models need a discount block (or --beta/--delta)"
            )
        model = StationaryModel(utilities=rows, transitions=transitions, discount=disc)

    report = validate_model(model, disc if horizon is not None else None)
    if not report.ok:
        raise SpecError(f"{path}: " + "; ".join(report.violations))
    return ModelSpec(
        model=model,
        discount=disc,
        choice_labels=tuple(choices),
        state_labels=tuple(states),
    )


def load_restrictions(path, spec):
    """Load exclusion restrictions, resolving labels against a model spec.

    Each entry names a choice, a state pair, and (for finite-horizon models)
    a 1-based period; omitting the period marks a stationary restriction.
    """
    with open(path) as fh:
        text = fh.read()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as err:
        raise SpecError(f"{path}: line {err.lineno}, column {err.colno}: {err.msg}") from None
    if not isinstance(doc, list) or not doc:
        raise SpecError(f"{path}: expected a non-empty JSON list of restrictions")

    out = []
    for i, entry in enumerate(doc):
        where = f"{path}: restriction {i + 1}"
        if not isinstance(entry, dict):
            raise SpecError(f"{where}: must be an object")
        for fieldname in ("choice", "states"):
            if fieldname not in entry:
                raise SpecError(f"{where}: missing {fieldname!r}")
        choice = spec.choice_index(entry["choice"])
        if choice == len(spec.choice_labels) - 1:
            raise SpecError(f"{where}: the reference choice carries no restriction")
        states = entry["states"]
        if not isinstance(states, list) or len(states) != 2:
            raise SpecError(f"{where}: states must be a pair of labels")
        x1, x2 = (spec.state_index(s) for s in states)
        period = entry.get("period")
        if spec.is_stationary:
            if period is not None:
                raise SpecError(f"{where}: stationary restriction cannot carry a period")
            out.append(ExclusionRestriction.stationary(choice, x1, x2))
        else:
            if period is None:
                raise SpecError(f"{where}: finite-horizon restriction needs a period")
            horizon = spec.model.horizon
            if not isinstance(period, int) or not 1 <= period <= horizon - 1:
                raise SpecError(
                    f"{where}: period must be a 1-based integer in [1, {horizon - 1}]"
                )
            out.append(ExclusionRestriction.single_period(choice, period - 1, x1, x2))
    return out
