"""Identification of the discount parameters from exclusion restrictions.

Each exclusion restriction on flow utility turns the concentrated choice
equation into one bivariate polynomial in (beta, delta) whose coefficients
are functions of the choice and transition probabilities alone.  With two
restrictions, eliminating beta through the resultant and back-substituting
its real roots enumerates the identified set; a brute-force lattice search
with Newton polishing serves as an independent oracle for the same set.
"""
from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import chebyshev as npcheb
from numpy.polynomial import polynomial as nppoly

from .core import ChoiceData, average_transition
from .polyalg import (
    BivariatePoly,
    CommonFactorResult,
    DegenerateInputError,
    IdenticallyZeroError,
    UnivariatePoly,
    common_factor_test,
    deflate_linear,
    resultant,
    uni_roots,
)

BDVARS = ("beta", "delta")


class UninformativeRestrictionWarning(UserWarning):
    """A restriction produced a numerically zero moment polynomial."""


class NonidentificationError(ValueError):
    """The geometric moment polynomial is identically zero."""


@dataclass(frozen=True)
class ExclusionRestriction:
    """Equality of one choice's flow utility across two (period, state) points.

    Indices are 0-based.  ``periods`` is None for stationary restrictions; in
    the finite case the two periods may coincide, in which case the states
    must differ.  Periods must lie strictly before the terminal period, which
    carries no continuation value to identify anything with.
    """

    choice: int
    states: tuple
    periods: tuple = None

    def __post_init__(self):
        object.__setattr__(self, "states", tuple(int(x) for x in self.states))
        if self.periods is not None:
            object.__setattr__(self, "periods", tuple(int(t) for t in self.periods))
            if len(self.periods) != 2:
                raise ValueError("need exactly two periods")
        if len(self.states) != 2:
            raise ValueError("need exactly two states")
        same_period = self.periods is None or self.periods[0] == self.periods[1]
        if same_period and self.states[0] == self.states[1]:
            raise ValueError("the two restriction points must be distinct")

    @classmethod
    def single_period(cls, choice, period, x1, x2):
        return cls(choice=choice, states=(x1, x2), periods=(period, period))

    @classmethod
    def stationary(cls, choice, x1, x2):
        return cls(choice=choice, states=(x1, x2), periods=None)

    @property
    def is_stationary(self):
        return self.periods is None


def _check_restriction(r, data):
    k, j = data.ccps.n_choices, data.ccps.n_states
    if not 0 <= r.choice < k - 1:
        raise ValueError(f"choice {r.choice} is not a non-reference choice (K={k})")
    for x in r.states:
        if not 0 <= x < j:
            raise ValueError(f"state {x} out of range (J={j})")
    if r.is_stationary:
        if not data.is_stationary:
            raise ValueError("stationary restriction applied to finite-horizon data")
        return
    if data.is_stationary:
        raise ValueError("finite-horizon restriction applied to stationary data")
    horizon = data.ccps.horizon
    for t in r.periods:
        if not 0 <= t <= horizon - 2:
            raise ValueError(
                f"restriction period {t} must lie in [0, {horizon - 2}]; the "
                "terminal period has no continuation value"
            )


def _qpb_poly_matrix(s_t, transitions):
    """Present-bias mixture as a J x J matrix of polynomials affine in beta."""
    q = np.asarray(transitions, dtype=float)
    qbar = average_transition(s_t, q)
    slope = q[-1] - qbar
    j = q.shape[1]
    return [
        [
            BivariatePoly(np.array([[qbar[a, b]], [slope[a, b]]]), BDVARS)
            for b in range(j)
        ]
        for a in range(j)
    ]


def _row_times_matrix(row, mat):
    j = len(mat)
    return [sum((row[a] * mat[a][b] for a in range(j)), BivariatePoly.constant(0.0, BDVARS)) for b in range(j)]


def _row_dot(row, vec):
    return sum(
        (row[a] * float(vec[a]) for a in range(len(vec))),
        BivariatePoly.constant(0.0, BDVARS),
    )


def _continuation_for_row(data, t, row_num):
    """Polynomial form of a transition row applied to the perceived value at t+1.

    Expands the surplus recursion with the present-bias mixtures kept as
    matrices of beta-affine polynomials; matrix products are accumulated in
    increasing period order.
    """
    s = data.ccps.values
    q = data.transitions
    k, horizon, _ = s.shape
    m = -np.log(s[k - 1])
    a = t + 1
    row = [BivariatePoly.constant(c, BDVARS) for c in row_num]
    acc = _row_dot(row, m[a])
    delta_mono = BivariatePoly.monomial(0, 1, 1.0, BDVARS)
    delta_power = BivariatePoly.constant(1.0, BDVARS)
    for tau in range(a + 1, horizon):
        row = _row_times_matrix(row, _qpb_poly_matrix(s[:, tau - 1], q))
        delta_power = delta_power * delta_mono
        acc = acc + delta_power * _row_dot(row, m[tau])
    return acc


def build_finite_moment(data, r):
    """Moment polynomial in (beta, delta) for one finite-horizon restriction.

    The polynomial is the model side minus the data side: beta*delta times
    the differenced continuation expression across the two restriction
    points, minus the observed log-odds contrast, so its constant term is
    minus that contrast and it vanishes at parameter values consistent with
    the data.
    """
    _check_restriction(r, data)
    s = data.ccps.values
    q = data.transitions
    k = s.shape[0]
    (t1, t2), (x1, x2) = r.periods, r.states
    gamma_mono = BivariatePoly.monomial(1, 1, 1.0, BDVARS)
    dq1 = q[r.choice, x1] - q[k - 1, x1]
    dq2 = q[r.choice, x2] - q[k - 1, x2]
    cont = _continuation_for_row(data, t1, dq1) - _continuation_for_row(data, t2, dq2)
    lo = np.log(s[r.choice]) - np.log(s[k - 1])
    contrast = float(lo[t1, x1] - lo[t2, x2])
    poly = gamma_mono * cont - BivariatePoly.constant(contrast, BDVARS)
    if poly.max_abs <= 1e-14:
        warnings.warn(
            f"restriction {r} produced a numerically zero moment polynomial",
            UninformativeRestrictionWarning,
        )
    return poly


def _stationary_moment_values(s_values, transitions, c_row, d_contrast, bb, dd):
    """Numeric evaluation of the stationary moment at points (bb, dd).

    Uses det(A + m c) - det(A) for the adjugate row product, which avoids any
    matrix inversion and is defined at every evaluation node.
    """
    q = np.asarray(transitions, dtype=float)
    j = q.shape[1]
    eye = np.eye(j)
    mixbar = np.einsum("kx,kxy->xy", s_values, q)
    m = -np.log(s_values[-1])
    outer = np.outer(m, c_row)
    bb = np.asarray(bb, dtype=float)
    dd = np.asarray(dd, dtype=float)
    out = np.empty(np.broadcast(bb, dd).shape)
    it = np.nditer([np.broadcast_to(bb, out.shape), np.broadcast_to(dd, out.shape)], flags=["multi_index"])
    for b, d in it:
        a = eye - d * (b * q[-1] + (1.0 - b) * mixbar)
        det_a = np.linalg.det(a)
        adj_term = np.linalg.det(a + outer) - det_a
        out[it.multi_index] = det_a * d_contrast - b * d * adj_term
    return out if out.shape else float(out)


def _stationary_moment_poly(s_values, transitions, c_row, d_contrast):
    """Fit the stationary moment as a polynomial of degree J in each variable.

    Evaluates on a (J+1) x (J+1) tensor grid of Chebyshev points and fits the
    tensor-product interpolant, then converts to monomial coefficients.
    """
    j = np.asarray(transitions).shape[1]
    nodes = npcheb.chebpts1(j + 1)
    vals = _stationary_moment_values(
        s_values, transitions, c_row, d_contrast, nodes[:, None], nodes[None, :]
    )
    # tensor Chebyshev fit: fit along beta for each delta node, then along delta
    c_beta = npcheb.chebfit(nodes, vals, j)  # (j+1, n_delta)
    c_both = npcheb.chebfit(nodes, c_beta.T, j).T  # rows beta-coeff, cols delta-coeff
    mono = np.zeros_like(c_both)
    for col in range(c_both.shape[1]):
        mono[: c_both.shape[0], col] = _padded(npcheb.cheb2poly(c_both[:, col]), c_both.shape[0])
    for row in range(mono.shape[0]):
        mono[row, :] = _padded(npcheb.cheb2poly(mono[row, :]), mono.shape[1])
    poly = BivariatePoly(mono, BDVARS)
    scale = float(np.max(np.abs(vals)))
    entry_bound = 2.0 + float(np.max(np.abs(np.outer(-np.log(s_values[-1]), c_row))))
    noise_floor = 1e-13 * j * entry_bound**j * max(1.0, abs(d_contrast))
    if scale > noise_floor:
        rng = np.random.default_rng(1234)
        pb = rng.uniform(-1.0, 1.0, 6)
        pd = rng.uniform(-1.0, 1.0, 6)
        direct = _stationary_moment_values(s_values, transitions, c_row, d_contrast, pb, pd)
        rel = float(np.max(np.abs(poly(pb, pd) - direct))) / scale
        if rel > 1e-8:
            from .polyalg import InterpolationError

            raise InterpolationError(
                f"stationary moment interpolation residual {rel:.2e} exceeds 1e-8"
            )
    return poly


def _padded(c, n):
    out = np.zeros(n)
    out[: len(c)] = c
    return out


def build_stationary_moment(data, r):
    """Moment polynomial in (beta, delta) for one stationary restriction.

    Clears the value-matrix inverse by multiplying through with its
    determinant: det(A) times the log-odds contrast minus beta*delta times
    the differenced transition row applied to the adjugate and the surplus
    vector.  Degree is at most J in each variable.
    """
    _check_restriction(r, data)
    s = data.ccps.values
    q = data.transitions
    k = s.shape[0]
    x1, x2 = r.states
    c_row = (q[r.choice, x1] - q[k - 1, x1]) - (q[r.choice, x2] - q[k - 1, x2])
    lo = np.log(s[r.choice]) - np.log(s[k - 1])
    d_contrast = float(lo[x1] - lo[x2])
    poly = _stationary_moment_poly(s, q, c_row, d_contrast)
    if poly.max_abs <= 1e-14:
        warnings.warn(
            f"restriction {r} produced a numerically zero moment polynomial",
            UninformativeRestrictionWarning,
        )
    return poly


@dataclass(frozen=True)
class MomentSystem:
    """Moment polynomials paired with the restrictions that generated them."""

    polys: tuple
    restrictions: tuple
    horizon: int = None
    n_states: int = None

    @property
    def is_stationary(self):
        return self.horizon is None

    def bezout_bound(self):
        """Upper bound on the number of isolated common zeros of the first two."""
        if self.is_stationary:
            return self.n_states**2
        orders = []
        for r in self.restrictions[:2]:
            t_min = min(r.periods)
            orders.append(self.horizon - 1 - t_min)
        return orders[0] * orders[1]


def build_moment_system(data, restrictions):
    """Build one moment polynomial per restriction against the same data."""
    restrictions = tuple(restrictions)
    if not restrictions:
        raise ValueError("need at least one restriction")
    stationary = data.is_stationary
    polys = []
    for r in restrictions:
        if r.is_stationary != stationary:
            raise ValueError("restriction kind does not match the data")
        builder = build_stationary_moment if stationary else build_finite_moment
        polys.append(builder(data, r))
    return MomentSystem(
        polys=tuple(polys),
        restrictions=restrictions,
        horizon=None if stationary else data.ccps.horizon,
        n_states=data.ccps.n_states,
    )


@dataclass(frozen=True)
class SearchDomain:
    """Search box for candidate parameters: beta in (0, 1], delta in an interval."""

    delta_min: float = 0.0
    delta_max: float = 2.0
    beta_min: float = 1e-8

    @classmethod
    def default_for(cls, ms):
        if ms.is_stationary:
            return cls(delta_min=0.0, delta_max=1.0 - 1e-6)
        return cls()


@dataclass(frozen=True)
class Candidate:
    beta: float
    delta: float
    residuals: tuple

    @property
    def gamma(self):
        return self.beta * self.delta


@dataclass(frozen=True)
class IdentifiedSet:
    """Candidate discount pairs consistent with every moment polynomial.

    An empty candidate list with no common factor means the model is
    rejected: no parameters rationalize the data.  A common factor means the
    zero set is a curve, so the set is not finite; when both leading moments
    are linear in the product beta*delta, that product is still pinned down
    and reported.
    """

    candidates: tuple
    bound: int
    common_factor_detected: bool = False
    empty_model_rejected: bool = False
    identified_product: float = None
    resultant_poly: UnivariatePoly = None

    def to_dict(self):
        return {
            "candidates": [
                {
                    "beta": c.beta,
                    "delta": c.delta,
                    "gamma": c.gamma,
                    "residuals": list(c.residuals),
                }
                for c in self.candidates
            ],
            "cardinality_bound": self.bound,
            "common_factor_detected": self.common_factor_detected,
            "model_rejected": self.empty_model_rejected,
            "identified_product": self.identified_product,
            "resultant_coefficients": None
            if self.resultant_poly is None
            else list(self.resultant_poly.coeffs),
        }


def _gamma_linear_value(p):
    """If p = c11 * beta * delta + c00, return -c00 / c11, else None."""
    c = p.coeffs
    if c.shape[0] > 2 or c.shape[1] > 2:
        return None
    scale = max(p.max_abs, 1e-300)
    grid = np.zeros((2, 2))
    grid[: c.shape[0], : c.shape[1]] = c
    if abs(grid[0, 1]) > 1e-10 * scale or abs(grid[1, 0]) > 1e-10 * scale:
        return None
    if abs(grid[1, 1]) <= 1e-10 * scale:
        return None
    return -grid[0, 0] / grid[1, 1]


def _residuals(polys, b, d):
    return tuple(float(p(b, d)) for p in polys)


def _within_tol(polys, b, d, membership_tol):
    return all(
        abs(val) <= membership_tol * max(p.max_abs, 1e-300)
        for p, val in zip(polys, _residuals(polys, b, d))
    )


def _polish_pair(fa, fb, b, d, domain, iters=40, grads=None):
    """Gauss-Newton polish of a candidate root of the two leading moments."""
    if grads is None:
        grads = [
            (fa.derivative("beta"), fa.derivative("delta")),
            (fb.derivative("beta"), fb.derivative("delta")),
        ]
    for _ in range(iters):
        f = np.array([fa(b, d), fb(b, d)])
        jac = np.array([[g[0](b, d), g[1](b, d)] for g in grads])
        step, *_ = np.linalg.lstsq(jac, -f, rcond=None)
        if not np.all(np.isfinite(step)):
            break
        b += step[0]
        d += step[1]
        if np.max(np.abs(step)) < 1e-14:
            break
    slack = 1e-7
    if not (domain.beta_min - slack <= b <= 1.0 + slack):
        return None
    if not (domain.delta_min - slack <= d <= domain.delta_max + slack):
        return None
    return min(max(b, domain.beta_min), 1.0), min(max(d, domain.delta_min), domain.delta_max)


def _working_polys(ms):
    """Moment polynomials with structural factors stripped.

    Every stationary moment vanishes along delta = 1: the value matrix turns
    singular there because its transition mixture is stochastic, and the
    adjugate term inherits the same zero through the differenced transition
    row.  That line lies outside the delta < 1 domain, so the factor carries
    no information and is divided out before elimination.
    """
    if not ms.is_stationary:
        return ms.polys
    return tuple(deflate_linear(p, "delta", 1.0) for p in ms.polys)


def solve_identified_set(ms, domain=None, *, membership_tol=1e-6, polish=True):
    """Enumerate the identified set of (beta, delta) by resultant elimination.

    Tests the two leading moment polynomials for a common factor first; when
    one is present the set is a curve rather than a finite collection, and
    only the product beta*delta is reported when both moments are linear in
    it.  Otherwise real delta-roots of the resultant are back-substituted,
    beta-roots of both slices are collected, and every candidate must satisfy
    all moment polynomials (including overidentifying ones) at the membership
    tolerance, which is relative to each polynomial's coefficient scale.
    Stationary systems are first deflated by their structural delta = 1
    factor, which lies outside the search domain.
    """
    if len(ms.polys) < 2:
        raise ValueError("need at least two moment polynomials")
    if domain is None:
        domain = SearchDomain.default_for(ms)
    work = _working_polys(ms)
    fa, fb = work[0], work[1]
    if fa.is_zero or fb.is_zero:
        raise DegenerateInputError(
            "a leading moment polynomial is identically zero; reorder the "
            "restrictions or drop the uninformative one"
        )
    bound = ms.bezout_bound()
    verdict = common_factor_test(fa, fb)
    res = None
    try:
        res = resultant(fa, fb, eliminate="beta")
    except DegenerateInputError:
        pass
    if verdict is CommonFactorResult.COMMON_FACTOR or (res is not None and res.is_zero):
        vals = [v for v in (_gamma_linear_value(fa), _gamma_linear_value(fb)) if v is not None]
        product = vals[0] if len(vals) == len(ms.polys[:2]) else None
        return IdentifiedSet(
            candidates=(),
            bound=bound,
            common_factor_detected=True,
            identified_product=product,
            resultant_poly=res,
        )
    if res is None:
        raise DegenerateInputError("cannot eliminate beta from the moment system")

    try:
        delta_roots = uni_roots(res, domain.delta_min, domain.delta_max)
    except IdenticallyZeroError:
        return IdentifiedSet(
            candidates=(), bound=bound, common_factor_detected=True, resultant_poly=res
        )

    pairs = []
    for d_hat in delta_roots:
        beta_cands = []
        for f in (fa, fb):
            slice_f = f.substitute("delta", d_hat)
            try:
                beta_cands.extend(uni_roots(slice_f, domain.beta_min, 1.0))
            except IdenticallyZeroError:
                continue
        for b_hat in beta_cands:
            if polish:
                polished = _polish_pair(fa, fb, b_hat, d_hat, domain)
                if polished is None:
                    continue
                b_hat, d_use = polished
            else:
                d_use = d_hat
            if _within_tol(work, b_hat, d_use, membership_tol):
                pairs.append((b_hat, d_use))

    pairs.sort()
    unique = []
    for b, d in pairs:
        if all(max(abs(b - b0), abs(d - d0)) > 1e-6 for b0, d0 in unique):
            unique.append((b, d))
    candidates = tuple(
        Candidate(beta=b, delta=d, residuals=_residuals(ms.polys, b, d))
        for b, d in unique
    )
    return IdentifiedSet(
        candidates=candidates,
        bound=bound,
        empty_model_rejected=not candidates,
        resultant_poly=res,
    )


def grid_oracle(ms, domain=None, grid_n=200, *, membership_tol=1e-6, seed_level=0.05):
    """Independent lattice check of the identified set.

    Scans the normalized worst-case moment residual on a grid_n x grid_n
    lattice, Gauss-Newton polishes every local minimum below ``seed_level``
    against the two leading moments, and keeps polished points that satisfy
    every moment at the membership tolerance.  Shares no code path with the
    resultant elimination (only the same structural deflation of stationary
    systems).
    """
    if domain is None:
        domain = SearchDomain.default_for(ms)
    work = _working_polys(ms)
    betas = np.linspace(max(domain.beta_min, 1.0 / grid_n), 1.0, grid_n)
    deltas = np.linspace(domain.delta_min, domain.delta_max, grid_n)
    worst = np.zeros((grid_n, grid_n))
    for p in work:
        vals = nppoly.polygrid2d(betas, deltas, p.coeffs)
        np.maximum(worst, np.abs(vals) / max(p.max_abs, 1e-300), out=worst)
    padded = np.pad(worst, 1, constant_values=np.inf)
    neighbor_min = np.full_like(worst, np.inf)
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            if (di, dj) == (0, 0):
                continue
            shifted = padded[1 + di : 1 + di + grid_n, 1 + dj : 1 + dj + grid_n]
            np.minimum(neighbor_min, shifted, out=neighbor_min)
    is_min = (worst <= neighbor_min) & (worst <= seed_level)
    fa, fb = work[0], work[1]
    grads = [
        (fa.derivative("beta"), fa.derivative("delta")),
        (fb.derivative("beta"), fb.derivative("delta")),
    ]
    found = []
    for i, j in zip(*np.nonzero(is_min)):
        polished = _polish_pair(
            fa, fb, float(bb[i, j]), float(dd[i, j]), domain, grads=grads
        )
        if polished is None:
            continue
        b, d = polished
        if _within_tol(work, b, d, membership_tol):
            found.append((b, d))
    found.sort()
    unique = []
    for b, d in found:
        if all(max(abs(b - b0), abs(d - d0)) > 1e-6 for b0, d0 in unique):
            unique.append((b, d))
    return unique


def geometric_identified_set(data, r, domain=None):
    """Identified discount factors for the geometric special case (beta = 1).

    Slices the restriction's moment polynomial at beta = 1 and returns its
    real roots in the delta domain; with J states the stationary count never
    exceeds J.  An identically zero slice means the restriction carries no
    identifying content, which is an error distinct from an empty root list.
    """
    if r.is_stationary:
        poly = build_stationary_moment(data, r)
        if domain is None:
            domain = SearchDomain(delta_min=0.0, delta_max=1.0 - 1e-6)
    else:
        poly = build_finite_moment(data, r)
        if domain is None:
            domain = SearchDomain()
    slice_poly = poly.substitute("beta", 1.0)
    if slice_poly.is_zero or slice_poly.max_abs <= 1e-14 * max(poly.max_abs, 1e-300):
        raise NonidentificationError(
            "the geometric moment polynomial is numerically zero; the "
            "restriction does not identify the discount factor"
        )
    return uni_roots(slice_poly, domain.delta_min, domain.delta_max)


@dataclass(frozen=True)
class ThreePeriodCoefficients:
    """Named coefficients of the two moment conditions of a three-period model,
    reparametrized in (gamma, delta) with gamma = beta * delta.

    ``f_late`` (degree 1 in gamma) comes from a next-to-terminal restriction,
    ``f_early`` (degree 2 in gamma, 1 in delta) from a first-period one.
    """

    a0: float
    a1: float
    b0: float
    b11: float
    b12: float
    b2: float

    @property
    def f_late(self):
        return BivariatePoly(np.array([[self.a0], [self.a1]]), ("gamma", "delta"))

    @property
    def f_early(self):
        grid = np.array([[self.b0, 0.0], [self.b12, self.b11], [self.b2, 0.0]])
        return BivariatePoly(grid, ("gamma", "delta"))


def three_period_system(data, r_late, r_early):
    """Coefficients of the (gamma, delta) moment pair for a T=3 model.

    ``r_late`` must restrict utilities at the middle period (t=1, 0-based)
    and ``r_early`` at the first period (t=0).
    """
    if data.ccps.horizon != 3:
        raise ValueError("the closed-form system needs a three-period model")
    if r_late.periods != (1, 1) or r_early.periods != (0, 0):
        raise ValueError("restrictions must sit at periods (1,1) and (0,0)")
    s = data.ccps.values
    q = data.transitions
    k = s.shape[0]
    m = -np.log(s[k - 1])
    lo = np.log(s[r_late.choice]) - np.log(s[k - 1])
    lo_e = np.log(s[r_early.choice]) - np.log(s[k - 1])
    qbar = average_transition(s[:, 1], q)

    def drow(choice, x1, x2):
        return (q[choice, x1] - q[k - 1, x1]) - (q[choice, x2] - q[k - 1, x2])

    xa1, xa2 = r_late.states
    xb1, xb2 = r_early.states
    row_a = drow(r_late.choice, xa1, xa2)
    row_b = drow(r_early.choice, xb1, xb2)
    return ThreePeriodCoefficients(
        a1=float(row_a @ m[2]),
        a0=-float(lo[1, xa1] - lo[1, xa2]),
        b2=float(row_b @ (q[k - 1] - qbar) @ m[2]),
        b11=float(row_b @ qbar @ m[2]),
        b12=float(row_b @ m[1]),
        b0=-float(lo_e[0, xb1] - lo_e[0, xb2]),
    )


@dataclass(frozen=True)
class StateStructure:
    """Factorized state space for enumerating exclusion restrictions.

    ``components`` lists (name, levels) pairs; a state is a tuple of
    component values and its index follows C order (first component slowest).
    ``utility_deps`` maps each non-reference choice to the component names
    its flow utility depends on.  ``controlled`` names the component whose
    transition is set by the choice (its levels enumerate the non-reference
    choices); every other component evolves exogenously.
    """

    components: tuple
    utility_deps: dict
    controlled: str = None

    def __post_init__(self):
        object.__setattr__(self, "components", tuple((str(n), int(l)) for n, l in self.components))
        names = [n for n, _ in self.components]
        if len(set(names)) != len(names):
            raise ValueError("component names must be unique")
        if self.controlled is not None and self.controlled not in names:
            raise ValueError(f"controlled component {self.controlled!r} not declared")
        for k, deps in self.utility_deps.items():
            unknown = set(deps) - set(names)
            if unknown:
                raise ValueError(f"choice {k} depends on unknown components {unknown}")

    @property
    def n_states(self):
        out = 1
        for _, levels in self.components:
            out *= levels
        return out

    def state_index(self, assignment):
        dims = [levels for _, levels in self.components]
        return int(np.ravel_multi_index(tuple(assignment), dims))


def enumerate_exclusion_pairs(structure):
    """All informative stationary exclusion restrictions implied by a structure.

    For each choice, pairs states that agree on every utility-relevant
    component and differ somewhere else, then drops pairs whose shared
    controlled-component value coincides with the choice itself: there the
    choice and the reference move the controlled state identically and the
    differenced transition row is zero, so the restriction holds but its
    moment condition is uninformative.
    """
    names = [n for n, _ in structure.components]
    levels = [l for _, l in structure.components]
    all_states = list(itertools.product(*[range(l) for l in levels]))
    out = []
    for choice, deps in sorted(structure.utility_deps.items()):
        deps = set(deps)
        rel_idx = [i for i, n in enumerate(names) if n in deps]
        groups = {}
        for assignment in all_states:
            key = tuple(assignment[i] for i in rel_idx)
            groups.setdefault(key, []).append(assignment)
        ctrl_idx = names.index(structure.controlled) if structure.controlled else None
        for members in groups.values():
            for s1, s2 in itertools.combinations(members, 2):
                if ctrl_idx is not None:
                    v1, v2 = s1[ctrl_idx], s2[ctrl_idx]
                    if v1 == v2 == choice:
                        continue
                out.append(
                    ExclusionRestriction.stationary(
                        choice,
                        structure.state_index(s1),
                        structure.state_index(s2),
                    )
                )
    return out
