"""Dense real polynomial algebra in one and two variables.

Coefficient grids are the currency of the identification machinery: moment
conditions are bivariate polynomials in the discount parameters, Sylvester
determinants eliminate one variable to produce a univariate resultant, and
companion-matrix root finding turns resultants into candidate parameter
values.  Resultants and other matrix-polynomial determinants are computed by
evaluation at Chebyshev nodes followed by interpolation, which is stable for
the moderate degrees (up to roughly 40) that arise here.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from numpy.polynomial import chebyshev as npcheb
from numpy.polynomial import polynomial as nppoly

# Trailing coefficients below this fraction of the largest coefficient are
# treated as zero when tightening degrees.  Relative, not absolute: moment
# coefficients vary over orders of magnitude with the horizon.
TRIM_RTOL = 1e-13


class DegenerateInputError(ValueError):
    """A polynomial is zero, or constant in the variable to be eliminated."""


class IdenticallyZeroError(ValueError):
    """Root finding was asked for the roots of the zero polynomial."""


class InterpolationError(RuntimeError):
    """Evaluation-interpolation produced a fit with excessive residual."""


def _trim1d(c):
    c = np.atleast_1d(np.asarray(c, dtype=float))
    if c.ndim != 1:
        raise ValueError("univariate coefficients must be one-dimensional")
    scale = np.max(np.abs(c)) if c.size else 0.0
    if scale == 0.0:
        return np.zeros(1)
    keep = np.nonzero(np.abs(c) > TRIM_RTOL * scale)[0]
    return c[: keep[-1] + 1].copy()


def _trim2d(c):
    c = np.atleast_2d(np.asarray(c, dtype=float))
    if c.ndim != 2:
        raise ValueError("bivariate coefficients must be a 2-d grid")
    scale = np.max(np.abs(c)) if c.size else 0.0
    if scale == 0.0:
        return np.zeros((1, 1))
    mask = np.abs(c) > TRIM_RTOL * scale
    rows = np.nonzero(mask.any(axis=1))[0]
    cols = np.nonzero(mask.any(axis=0))[0]
    return c[: rows[-1] + 1, : cols[-1] + 1].copy()


@dataclass(frozen=True)
class UnivariatePoly:
    """Polynomial in one variable, coefficients in ascending powers."""

    coeffs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "coeffs", _trim1d(self.coeffs))

    @property
    def degree(self):
        return len(self.coeffs) - 1

    @property
    def is_zero(self):
        return self.degree == 0 and self.coeffs[0] == 0.0

    @property
    def max_abs(self):
        return float(np.max(np.abs(self.coeffs)))

    def __call__(self, x):
        if isinstance(x, (float, int)):
            acc = 0.0
            for c in self.coeffs[::-1]:
                acc = acc * x + c
            return acc
        return nppoly.polyval(x, self.coeffs)

    def derivative(self):
        return UnivariatePoly(nppoly.polyder(self.coeffs))

    def __add__(self, other):
        other = _as_uni(other)
        return UnivariatePoly(nppoly.polyadd(self.coeffs, other.coeffs))

    def __sub__(self, other):
        other = _as_uni(other)
        return UnivariatePoly(nppoly.polysub(self.coeffs, other.coeffs))

    def __mul__(self, other):
        if np.isscalar(other):
            return UnivariatePoly(self.coeffs * float(other))
        return UnivariatePoly(nppoly.polymul(self.coeffs, other.coeffs))

    __rmul__ = __mul__

    def __neg__(self):
        return UnivariatePoly(-self.coeffs)


def _as_uni(p):
    if isinstance(p, UnivariatePoly):
        return p
    return UnivariatePoly(np.atleast_1d(np.asarray(p, dtype=float)))


@dataclass(frozen=True)
class BivariatePoly:
    """Polynomial in two variables on a dense coefficient grid.

    ``coeffs[i, j]`` multiplies ``vars[0]**i * vars[1]**j``.  Degrees are kept
    tight: trailing rows and columns that are zero relative to the largest
    coefficient are trimmed at construction.
    """

    coeffs: np.ndarray
    vars: tuple = ("beta", "delta")

    def __post_init__(self):
        object.__setattr__(self, "coeffs", _trim2d(self.coeffs))
        object.__setattr__(self, "vars", tuple(self.vars))
        if len(self.vars) != 2 or self.vars[0] == self.vars[1]:
            raise ValueError("need two distinct variable names")

    @classmethod
    def constant(cls, value, vars=("beta", "delta")):
        return cls(np.array([[float(value)]]), vars)

    @classmethod
    def monomial(cls, i, j, value=1.0, vars=("beta", "delta")):
        c = np.zeros((i + 1, j + 1))
        c[i, j] = value
        return cls(c, vars)

    @property
    def degrees(self):
        return (self.coeffs.shape[0] - 1, self.coeffs.shape[1] - 1)

    @property
    def total_degree(self):
        mask = np.abs(self.coeffs) > TRIM_RTOL * max(self.max_abs, 1e-300)
        ii, jj = np.nonzero(mask)
        return int(np.max(ii + jj)) if ii.size else 0

    @property
    def is_zero(self):
        return self.coeffs.shape == (1, 1) and self.coeffs[0, 0] == 0.0

    @property
    def max_abs(self):
        return float(np.max(np.abs(self.coeffs)))

    def __call__(self, x1, x2):
        if isinstance(x1, (float, int)) and isinstance(x2, (float, int)):
            acc = 0.0
            for row in self.coeffs[::-1]:
                inner = 0.0
                for c in row[::-1]:
                    inner = inner * x2 + c
                acc = acc * x1 + inner
            return acc
        return nppoly.polyval2d(x1, x2, self.coeffs)

    def _check_vars(self, other):
        if self.vars != other.vars:
            raise ValueError(f"variable labels differ: {self.vars} vs {other.vars}")

    def __add__(self, other):
        if np.isscalar(other):
            other = BivariatePoly.constant(other, self.vars)
        self._check_vars(other)
        d1 = max(self.coeffs.shape[0], other.coeffs.shape[0])
        d2 = max(self.coeffs.shape[1], other.coeffs.shape[1])
        c = np.zeros((d1, d2))
        c[: self.coeffs.shape[0], : self.coeffs.shape[1]] += self.coeffs
        c[: other.coeffs.shape[0], : other.coeffs.shape[1]] += other.coeffs
        return BivariatePoly(c, self.vars)

    __radd__ = __add__

    def __sub__(self, other):
        if np.isscalar(other):
            other = BivariatePoly.constant(other, self.vars)
        return self + (-other)

    def __neg__(self):
        return BivariatePoly(-self.coeffs, self.vars)

    def __mul__(self, other):
        if np.isscalar(other):
            return BivariatePoly(self.coeffs * float(other), self.vars)
        self._check_vars(other)
        a, b = self.coeffs, other.coeffs
        c = np.zeros((a.shape[0] + b.shape[0] - 1, a.shape[1] + b.shape[1] - 1))
        for i in range(a.shape[0]):
            for j in range(a.shape[1]):
                if a[i, j] != 0.0:
                    c[i : i + b.shape[0], j : j + b.shape[1]] += a[i, j] * b
        return BivariatePoly(c, self.vars)

    __rmul__ = __mul__

    def derivative(self, var):
        ax = self._axis(var)
        c = nppoly.polyder(self.coeffs, axis=ax)
        return BivariatePoly(c, self.vars)

    def _axis(self, var):
        if var not in self.vars:
            raise ValueError(f"unknown variable {var!r}, have {self.vars}")
        return self.vars.index(var)

    def substitute(self, var, value):
        """Fix one variable at a numeric value; univariate poly in the other."""
        ax = self._axis(var)
        if ax == 0:
            powers = float(value) ** np.arange(self.coeffs.shape[0])
            return UnivariatePoly(powers @ self.coeffs)
        powers = float(value) ** np.arange(self.coeffs.shape[1])
        return UnivariatePoly(self.coeffs @ powers)

    def coeffs_in(self, var):
        """Coefficients of powers of ``var``, as polynomials in the other variable."""
        ax = self._axis(var)
        if ax == 0:
            return [UnivariatePoly(row) for row in self.coeffs]
        return [UnivariatePoly(col) for col in self.coeffs.T]

    def degree_in(self, var):
        return self.degrees[self._axis(var)]

    def other_var(self, var):
        return self.vars[1 - self._axis(var)]


@dataclass(frozen=True)
class SylvesterMatrix:
    """Square band matrix of univariate polynomials in the base variable.

    Column ``j`` for ``j < m`` carries the coefficients of the first input
    (degree ``l`` in the eliminated variable) running downward from the
    leading one; columns ``m`` onward carry the second input's coefficients
    the same way.  Blanks are zeros and the dimension is ``l + m``.
    """

    entries: tuple
    base_var: str
    l: int
    m: int

    @property
    def size(self):
        return self.l + self.m

    def evaluate(self, x):
        n = self.size
        out = np.empty((n, n))
        for i in range(n):
            for j in range(n):
                out[i, j] = self.entries[i][j](x)
        return out

    def degree_bound(self):
        degs = np.array(
            [[e.degree if not e.is_zero else 0 for e in row] for row in self.entries]
        )
        return int(min(degs.max(axis=0).sum(), degs.max(axis=1).sum()))


def sylvester(qa, qb, base):
    """Sylvester matrix of two bivariate polynomials with the given base variable.

    Entries are polynomials in ``base``; the other variable is the one being
    eliminated and both inputs must actually depend on it.
    """
    if qa.is_zero or qb.is_zero:
        raise DegenerateInputError("Sylvester matrix of a zero polynomial")
    qa._check_vars(qb)
    if base not in qa.vars:
        raise ValueError(f"unknown base variable {base!r}")
    elim = qa.other_var(base)
    l = qa.degree_in(elim)
    m = qb.degree_in(elim)
    if l < 1 or m < 1:
        raise DegenerateInputError(
            f"both polynomials must be nonzero in {elim!r} (degrees {l}, {m})"
        )
    a = qa.coeffs_in(elim)
    b = qb.coeffs_in(elim)
    zero = UnivariatePoly([0.0])
    n = l + m
    rows = []
    for i in range(n):
        row = []
        for j in range(n):
            if j < m:
                k = l - i + j
                row.append(a[k] if 0 <= k <= l else zero)
            else:
                k = j - i
                row.append(b[k] if 0 <= k <= m else zero)
        rows.append(tuple(row))
    return SylvesterMatrix(tuple(rows), base, l, m)


def _det_interpolate(matrix_eval, degree_bound, noise_floor=0.0, check_points=9):
    """Fit the determinant of a matrix of polynomials by Chebyshev interpolation.

    ``matrix_eval(x)`` must return the numeric matrix at ``x``.  Returns the
    monomial coefficients (ascending).  Raises InterpolationError when the fit
    fails to reproduce held-out determinant values to 1e-8 relative; values no
    larger than ``noise_floor`` are rounding residue of a determinant that is
    identically zero, for which any fit is accepted.
    """
    d = int(degree_bound)
    if d == 0:
        return np.array([float(np.linalg.det(matrix_eval(0.0)))])
    nodes = npcheb.chebpts1(d + 1)
    vals = np.array([np.linalg.det(matrix_eval(x)) for x in nodes])
    scale = float(np.max(np.abs(vals)))
    if scale == 0.0:
        return np.zeros(1)
    cheb = npcheb.chebfit(nodes, vals, d)
    mono = npcheb.cheb2poly(cheb)
    if scale <= noise_floor:
        return mono
    probes = np.linspace(-0.97, 0.97, check_points)
    direct = np.array([np.linalg.det(matrix_eval(x)) for x in probes])
    fitted = nppoly.polyval(probes, mono)
    rel = float(np.max(np.abs(fitted - direct))) / scale
    if rel > 1e-8:
        raise InterpolationError(
            f"determinant interpolation residual {rel:.2e} exceeds 1e-8"
        )
    return mono


def resultant(qa, qb, eliminate):
    """Resultant of two bivariate polynomials, eliminating the named variable.

    Returns the determinant of the Sylvester matrix as a univariate polynomial
    in the remaining variable.  Every root of the resultant is the remaining
    coordinate of a common zero of the two inputs.
    """
    if eliminate not in qa.vars:
        raise ValueError(f"unknown variable {eliminate!r}")
    base = qa.other_var(eliminate)
    syl = sylvester(qa, qb, base)
    entry_scale = max(
        max(e.max_abs for e in row) for row in syl.entries
    )
    noise_floor = 1e-13 * syl.size * max(entry_scale, 1e-300) ** syl.size
    mono = _det_interpolate(syl.evaluate, syl.degree_bound(), noise_floor)
    return UnivariatePoly(mono)


def uni_roots(p, lo, hi, *, imag_tol=1e-8, dedupe_tol=1e-8):
    """All real roots of ``p`` in ``[lo, hi]``.

    Companion-matrix eigenvalues with imaginary parts up to ``imag_tol`` are
    accepted as real, Newton-polished, kept when the polished residual is at
    the 1e-12 level relative to the evaluation scale, and deduplicated.
    Raises IdenticallyZeroError for the zero polynomial, which is a different
    outcome than a polynomial without roots.
    """
    p = _as_uni(p)
    if p.is_zero:
        raise IdenticallyZeroError("zero polynomial: every point is a root")
    if p.degree == 0:
        return []
    cand = nppoly.polyroots(p.coeffs)
    dp = p.derivative()
    abs_coeffs = np.abs(p.coeffs)
    out = []
    for z in cand:
        if abs(z.imag) > imag_tol:
            continue
        x = float(z.real)
        for _ in range(50):
            fx = p(x)
            fpx = dp(x)
            if fpx == 0.0:
                break
            step = fx / fpx
            x -= step
            if abs(step) <= 1e-15 * max(1.0, abs(x)):
                break
        eval_scale = nppoly.polyval(max(1.0, abs(x)), abs_coeffs)
        if abs(p(x)) > 1e-12 * eval_scale:
            continue
        if lo - 1e-12 <= x <= hi + 1e-12:
            out.append(min(max(x, lo), hi))
    out.sort()
    dedup = []
    for x in out:
        if not dedup or abs(x - dedup[-1]) > dedupe_tol:
            dedup.append(x)
    return dedup


def deflate_linear(p, var, root, rel_tol=1e-8):
    """Divide out a linear factor (var - root) when it divides exactly.

    Synthetic division along the ``var`` axis; if the remainder is not
    negligible relative to the coefficient scale the polynomial is returned
    unchanged.  Used to strip structural factors whose zero set lies outside
    the parameter domain.
    """
    ax = p._axis(var)
    c = p.coeffs if ax == 1 else p.coeffs.T
    if c.shape[1] < 2:
        return p
    quo = np.zeros((c.shape[0], c.shape[1] - 1))
    rem = np.zeros(c.shape[0])
    for i in range(c.shape[0]):
        acc = 0.0
        for k in range(c.shape[1] - 1, 0, -1):
            acc = c[i, k] + root * acc
            quo[i, k - 1] = acc
        rem[i] = c[i, 0] + root * acc
    if np.max(np.abs(rem)) > rel_tol * max(p.max_abs, 1e-300):
        return p
    return BivariatePoly(quo if ax == 1 else quo.T, p.vars)


class CommonFactorResult(Enum):
    NONE = "none"
    COMMON_FACTOR = "common_factor"
    DEGENERATE = "degenerate"


def _slices_share_root(qa, qb, var, base_value, rel_tol=1e-6):
    """Whether the two polynomials, frozen at a base value, share a ``var`` root.

    Roots are compared over the complex numbers; a slice that degenerates to
    zero shares everything.
    """
    base = qa.other_var(var)
    sa = qa.substitute(base, base_value)
    sb = qb.substitute(base, base_value)
    if sa.is_zero or sb.is_zero:
        return True
    if sa.degree == 0 or sb.degree == 0:
        return False
    ra = nppoly.polyroots(sa.coeffs)
    rb = nppoly.polyroots(sb.coeffs)
    gap = min(abs(x - y) for x in ra for y in rb)
    return gap <= rel_tol * (1.0 + min(max(abs(ra).max(), 1.0), 1e6))


def common_factor_test(qa, qb):
    """Detect a shared polynomial factor between two bivariate polynomials.

    Computes the resultant eliminating each variable in turn (where both
    inputs depend on it).  A resultant that is numerically zero relative to
    the input coefficient scale claims a common factor; because structural
    cancellation can push a genuine resultant far below any magnitude-based
    threshold, the claim is confirmed by checking that the two polynomials
    share a (possibly complex) root of the eliminated variable at several
    probe values of the remaining one, which characterizes an identically
    zero resultant.  A polynomial that is zero relative to its partner
    (coefficients at rounding-residue size) has lost its identifying content
    the same way and is classified as a common factor; an exactly zero input
    is degenerate.
    """
    qa._check_vars(qb)
    if qa.is_zero or qb.is_zero:
        return CommonFactorResult.DEGENERATE
    scales = (qa.max_abs, qb.max_abs)
    if min(scales) <= 1e-10 * max(scales):
        return CommonFactorResult.COMMON_FACTOR
    probes = np.linspace(-0.83, 0.79, 5)
    for var in qa.vars:
        la, lb = qa.degree_in(var), qb.degree_in(var)
        if la < 1 or lb < 1:
            continue
        res = resultant(qa, qb, eliminate=var)
        threshold = 1e-10 * max(scales) ** (la + lb)
        if res.max_abs <= threshold and all(
            _slices_share_root(qa, qb, var, x0) for x0 in probes
        ):
            return CommonFactorResult.COMMON_FACTOR
    return CommonFactorResult.NONE
