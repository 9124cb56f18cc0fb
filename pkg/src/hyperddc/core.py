"""Model primitives and finite-horizon machinery.

Domain types with validation, the backward-induction equilibrium solver for
sophisticated beta-delta discounting, log-odds inversion of conditional choice
probabilities, perceived-value reconstruction from data, and nonparametric
utility recovery.

Indexing convention: choices, periods and states are 0-based throughout the
Python API (the last choice ``K-1`` is the reference with flow utility fixed
at zero); file formats use explicit labels that the loader maps to indices.

Surplus convention: the expected-maximum surplus is taken as ``-ln s_K``,
dropping the additive Euler-Mascheroni constant of the extreme-value
expectation.  Choice probabilities and all differenced identification objects
are invariant to this shift, and recovered utilities are unique under it.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

SIMPLEX_TOL = 1e-12
STOCHASTIC_TOL = 1e-12
PROB_FLOOR = 1e-300


class InvalidModelError(ValueError):
    """A solver was handed a model or discount pair violating its invariants."""


@dataclass(frozen=True)
class DiscountPair:
    """Present-bias factor and standard discount factor.

    ``beta`` lives in (0, 1], bounded away from zero to keep present bias
    distinct from myopia; ``delta`` is non-negative and finite, and must be
    strictly below one in stationary settings.  ``gamma`` is the product,
    the factor applied to the first future period.
    """

    beta: float
    delta: float

    @property
    def gamma(self):
        return self.beta * self.delta

    def violations(self, stationary=False):
        out = []
        if not np.isfinite(self.beta) or not (0.0 < self.beta <= 1.0):
            out.append(
                f"present-bias factor beta={self.beta} outside (0, 1]; it is "
                "bounded away from zero to distinguish present bias from myopia"
            )
        if not np.isfinite(self.delta) or self.delta < 0.0:
            out.append(f"discount factor delta={self.delta} must be finite and >= 0")
        elif stationary and self.delta >= 1.0:
            out.append(f"stationary models require delta < 1, got {self.delta}")
        return out


@dataclass(frozen=True)
class FiniteModel:
    """Finite-horizon primitives: utilities u[k, t, x] and transitions Q[k].

    ``utilities`` has shape (K-1, T, J); the reference choice K-1 has utility
    identically zero and is not stored.  ``transitions`` has shape (K, J, J)
    with row-stochastic rows, one matrix per choice.
    """

    utilities: np.ndarray
    transitions: np.ndarray

    def __post_init__(self):
        u = np.asarray(self.utilities, dtype=float)
        q = np.asarray(self.transitions, dtype=float)
        if q.ndim != 3 or q.shape[1] != q.shape[2]:
            raise ValueError(f"transitions must be (K, J, J), got {q.shape}")
        k, j = q.shape[0], q.shape[1]
        if u.ndim != 3 or u.shape[0] != k - 1 or u.shape[2] != j:
            raise ValueError(
                f"utilities must be (K-1, T, J) = ({k - 1}, T, {j}), got {u.shape}"
            )
        object.__setattr__(self, "utilities", u)
        object.__setattr__(self, "transitions", q)

    @property
    def n_choices(self):
        return self.transitions.shape[0]

    @property
    def horizon(self):
        return self.utilities.shape[1]

    @property
    def n_states(self):
        return self.transitions.shape[1]

    def full_utilities(self):
        """Utilities including the zero row for the reference choice, (K, T, J)."""
        k, t, j = self.n_choices, self.horizon, self.n_states
        u = np.zeros((k, t, j))
        u[: k - 1] = self.utilities
        return u


@dataclass(frozen=True)
class StationaryModel:
    """Stationary primitives: time-invariant u[k, x], transitions, and discounting."""

    utilities: np.ndarray
    transitions: np.ndarray
    discount: DiscountPair

    def __post_init__(self):
        u = np.asarray(self.utilities, dtype=float)
        q = np.asarray(self.transitions, dtype=float)
        if q.ndim != 3 or q.shape[1] != q.shape[2]:
            raise ValueError(f"transitions must be (K, J, J), got {q.shape}")
        k, j = q.shape[0], q.shape[1]
        if u.ndim != 2 or u.shape != (k - 1, j):
            raise ValueError(f"utilities must be (K-1, J) = ({k - 1}, {j}), got {u.shape}")
        object.__setattr__(self, "utilities", u)
        object.__setattr__(self, "transitions", q)

    @property
    def n_choices(self):
        return self.transitions.shape[0]

    @property
    def n_states(self):
        return self.transitions.shape[1]

    def full_utilities(self):
        k, j = self.n_choices, self.n_states
        u = np.zeros((k, j))
        u[: k - 1] = self.utilities
        return u


@dataclass(frozen=True)
class ValidationReport:
    violations: list = field(default_factory=list)

    @property
    def ok(self):
        return not self.violations

    def __bool__(self):
        return self.ok


def _stochasticity_violations(transitions):
    out = []
    q = np.asarray(transitions, dtype=float)
    for k in range(q.shape[0]):
        if np.any(q[k] < 0.0):
            bad = np.argwhere(q[k] < 0.0)[0]
            out.append(f"transition matrix {k}: negative entry at row {bad[0]}")
        rowsums = q[k].sum(axis=1)
        off = np.abs(rowsums - 1.0)
        if np.any(off > STOCHASTIC_TOL):
            r = int(np.argmax(off))
            out.append(
                f"transition matrix {k}: row {r} sums to {rowsums[r]:.15g}, "
                f"off by {off[r]:.2e} (tolerance {STOCHASTIC_TOL})"
            )
    return out


def validate_model(model, disc=None):
    """Report every violated invariant of a model (and optional discount pair).

    Returns a ValidationReport rather than raising, so loaders and callers can
    surface all problems at once.
    """
    out = []
    if model.n_choices < 2:
        out.append(f"need at least 2 choices, got {model.n_choices}")
    if model.n_states < 1:
        out.append(f"need at least 1 state, got {model.n_states}")
    if isinstance(model, FiniteModel) and model.horizon < 2:
        out.append(f"need horizon >= 2, got {model.horizon}")
    if not np.all(np.isfinite(model.utilities)):
        out.append("utilities contain non-finite values")
    out.extend(_stochasticity_violations(model.transitions))
    if isinstance(model, StationaryModel):
        out.extend(model.discount.violations(stationary=True))
    if disc is not None:
        out.extend(disc.violations(stationary=isinstance(model, StationaryModel)))
    return ValidationReport(out)


def _require_valid(model, disc=None):
    report = validate_model(model, disc)
    if not report.ok:
        raise InvalidModelError("; ".join(report.violations))


@dataclass(frozen=True)
class ChoiceProbabilities:
    """Conditional choice probabilities on the simplex.

    ``values`` has shape (K, T, J) in the finite case or (K, J) in the
    stationary case.  Entries must be strictly inside (0, 1) (a logit
    equilibrium has full support) and sum to one over choices; entries below
    1e-300 are rejected rather than clamped, since clamping corrupts
    log-odds.
    """

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim not in (2, 3):
            raise ValueError(f"expected (K, T, J) or (K, J) array, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("choice probabilities contain non-finite values")
        if np.any(v < PROB_FLOOR):
            raise ValueError(
                f"choice probabilities below the {PROB_FLOOR} floor; refusing to "
                "clamp because downstream log-odds would be corrupted"
            )
        if np.any(v >= 1.0):
            raise ValueError("choice probabilities must be strictly below 1")
        sums = v.sum(axis=0)
        if np.max(np.abs(sums - 1.0)) > SIMPLEX_TOL:
            raise ValueError(
                f"choice probabilities sum off the simplex by "
                f"{np.max(np.abs(sums - 1.0)):.2e} (tolerance {SIMPLEX_TOL})"
            )
        object.__setattr__(self, "values", v)

    @property
    def is_stationary(self):
        return self.values.ndim == 2

    @property
    def n_choices(self):
        return self.values.shape[0]

    @property
    def n_states(self):
        return self.values.shape[-1]

    @property
    def horizon(self):
        if self.is_stationary:
            raise ValueError("stationary probabilities have no horizon")
        return self.values.shape[1]

    def period(self, t):
        """The (K, J) slice at period t (finite case only)."""
        if self.is_stationary:
            raise ValueError("stationary probabilities have no period slices")
        return self.values[:, t, :]


@dataclass(frozen=True)
class ValueBundle:
    """Choice-specific values w[k, t, x] and perceived long-run values v[t, x].

    The terminal condition w[k, T-1, x] = u[k, T-1, x] holds exactly.
    """

    w: np.ndarray
    v: np.ndarray


def _softmax_probs(w):
    """Logit probabilities over axis 0, stabilized by the column max."""
    z = w - w.max(axis=0)
    e = np.exp(z)
    return e / e.sum(axis=0)


def average_transition(s_t, transitions):
    """Behavior-weighted transition matrix: rows mix Q_k by the CCPs at a period."""
    return np.einsum("kx,kxy->xy", s_t, transitions)


def pb_transition(beta, s_t, transitions):
    """Present-bias transition mixture for one period.

    Blends the reference-choice transition with the behavior-weighted average
    transition: beta * Q_K + (1 - beta) * Qbar.  Row-stochastic whenever the
    inputs are.
    """
    s_t = np.asarray(s_t, dtype=float)
    q = np.asarray(transitions, dtype=float)
    if s_t.shape != (q.shape[0], q.shape[1]):
        raise ValueError(f"CCP slice shape {s_t.shape} does not match transitions")
    return beta * q[-1] + (1.0 - beta) * average_transition(s_t, q)


def solve_finite(model, disc):
    """Backward-induction equilibrium of the finite-horizon model.

    Works from the terminal period down: choice-specific values add flow
    utility and beta*delta times the expected perceived long-run value, logit
    probabilities follow from the value contrasts, and the perceived values
    recurse through the present-bias transition mixture.  Returns the
    equilibrium choice probabilities and the value bundle.
    """
    _require_valid(model, disc)
    q = model.transitions
    u = model.full_utilities()
    k, horizon, j = u.shape
    beta, delta = disc.beta, disc.delta
    w = np.empty((k, horizon, j))
    s = np.empty((k, horizon, j))
    v = np.empty((horizon, j))
    for t in reversed(range(horizon)):
        if t == horizon - 1:
            w[:, t] = u[:, t]
        else:
            w[:, t] = u[:, t] + beta * delta * (q @ v[t + 1])
        s[:, t] = _softmax_probs(w[:, t])
        m_t = -np.log(s[k - 1, t])
        if t == horizon - 1:
            v[t] = m_t
        else:
            v[t] = m_t + delta * (pb_transition(beta, s[:, t], q) @ v[t + 1])
    return ChoiceProbabilities(s), ValueBundle(w=w, v=v)


def log_odds(s, k, t=None, x=None):
    """Log probability ratio of choice k against the reference choice.

    Under extreme-value shocks this equals the choice-specific value contrast
    w_k - w_K, the data side of the inversion.  ``t`` is omitted for
    stationary probabilities; omitting ``x`` returns the whole state vector.
    """
    v = s.values
    ref = s.n_choices - 1
    if not 0 <= k < ref:
        raise ValueError(f"choice index {k} must be a non-reference choice in [0, {ref})")
    if s.is_stationary:
        num, den = v[k], v[ref]
    else:
        if t is None:
            raise ValueError("finite-horizon probabilities need a period index")
        num, den = v[k, t], v[ref, t]
    out = np.log(num) - np.log(den)
    return out if x is None else float(out[x])


def surplus(s, t=None):
    """Expected-maximum surplus vector m = -ln s_K for one period.

    Uses the convention that drops the additive Euler-Mascheroni constant;
    every identification object differences it out.
    """
    v = s.values
    ref = s.n_choices - 1
    if s.is_stationary:
        return -np.log(v[ref])
    if t is None:
        raise ValueError("finite-horizon probabilities need a period index")
    return -np.log(v[ref, t])


def perceived_values_from_data(s, transitions, disc):
    """Perceived long-run values expressed through discounting and data alone.

    For each period a, v_a = m_a + sum over later periods tau of
    delta^(tau-a) times the ordered product of present-bias mixtures from a
    through tau-1 applied to m_tau.  Matrix products are taken in increasing
    period order.  Returns an array of shape (T, J).
    """
    v_all = s.values
    k, horizon, j = v_all.shape
    q = np.asarray(transitions, dtype=float)
    beta, delta = disc.beta, disc.delta
    m = -np.log(v_all[k - 1])
    qpb = [pb_transition(beta, v_all[:, t], q) for t in range(horizon)]
    v = np.empty((horizon, j))
    for a in range(horizon):
        acc = m[a].copy()
        prod = np.eye(j)
        for tau in range(a + 1, horizon):
            prod = prod @ qpb[tau - 1]
            acc += delta ** (tau - a) * (prod @ m[tau])
        v[a] = acc
    return v


def recover_utilities_finite(s, transitions, disc):
    """Unique utilities rationalizing finite-horizon choice probabilities.

    Backward construction: terminal utilities equal terminal log-odds; for
    earlier periods the continuation term, built from perceived values that
    are themselves functions of the data and the discount pair, is subtracted
    from the log-odds.  The reference choice keeps utility zero.  Any valid
    discount pair yields some rationalizing utilities, which is exactly why
    the discount parameters need exclusion restrictions to be identified.
    """
    vals = s.values
    k, horizon, j = vals.shape
    q = np.asarray(transitions, dtype=float)
    beta, delta = disc.beta, disc.delta
    lo = np.log(vals[: k - 1]) - np.log(vals[k - 1])[None, :, :]
    v = perceived_values_from_data(s, q, disc)
    u = np.empty((k - 1, horizon, j))
    u[:, horizon - 1] = lo[:, horizon - 1]
    dq = q[: k - 1] - q[k - 1]
    for t in range(horizon - 1):
        u[:, t] = lo[:, t] - beta * delta * (dq @ v[t + 1])
    return FiniteModel(utilities=u, transitions=q)


@dataclass(frozen=True)
class ChoiceData:
    """Choice probabilities plus transition matrices, the inputs to identification."""

    ccps: ChoiceProbabilities
    transitions: np.ndarray

    def __post_init__(self):
        q = np.asarray(self.transitions, dtype=float)
        if q.ndim != 3 or q.shape[0] != self.ccps.n_choices or q.shape[1] != q.shape[2]:
            raise ValueError(
                f"transitions shape {q.shape} does not match probabilities "
                f"({self.ccps.n_choices} choices, {self.ccps.n_states} states)"
            )
        object.__setattr__(self, "transitions", q)

    @property
    def is_stationary(self):
        return self.ccps.is_stationary

    @classmethod
    def exact(cls, model, disc=None):
        """Model-implied data: the exact equilibrium probabilities, no sampling."""
        from . import stationary as _stationary

        if isinstance(model, StationaryModel):
            eq = _stationary.solve_stationary(model)
            return cls(ccps=eq.s_star, transitions=model.transitions)
        if disc is None:
            raise ValueError("finite models need an explicit discount pair")
        s, _ = solve_finite(model, disc)
        return cls(ccps=s, transitions=model.transitions)
