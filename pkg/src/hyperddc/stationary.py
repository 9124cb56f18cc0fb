"""Infinite-horizon stationary equilibrium.

The perceived long-run value solves a linear system whose matrix mixes the
reference-choice transition with the behavior-weighted one; composing it with
the logit map gives a self-map on the CCP simplex whose fixed points are the
stationary equilibria.  Existence is guaranteed (Brouwer), uniqueness is not,
so the solver runs from multiple starts and surfaces every distinct fixed
point it finds.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import (
    ChoiceProbabilities,
    DiscountPair,
    StationaryModel,
    _require_valid,
    _softmax_probs,
)


class NonConvergenceError(RuntimeError):
    """The damped fixed-point iteration hit max_iter at every start."""


@dataclass(frozen=True)
class AMatrix:
    """The J x J matrix I - delta * (beta Q_K + (1-beta) sum_k S_k Q_k).

    Invertible for beta in (0, 1] and delta in [0, 1) because the bracketed
    mixture is row-stochastic.  Linear solves go through factorization, never
    an explicit inverse.
    """

    values: np.ndarray

    @classmethod
    def from_ccps(cls, s_values, transitions, beta, delta):
        s_values = np.asarray(s_values, dtype=float)
        q = np.asarray(transitions, dtype=float)
        j = q.shape[1]
        mix = beta * q[-1] + (1.0 - beta) * np.einsum("kx,kxy->xy", s_values, q)
        return cls(np.eye(j) - delta * mix)

    def solve(self, rhs):
        return np.linalg.solve(self.values, rhs)


def _omega_values(s_values, utilities, transitions, beta, delta):
    a = AMatrix.from_ccps(s_values, transitions, beta, delta)
    v = a.solve(-np.log(s_values[-1]))
    return utilities + beta * delta * (transitions @ v), v


def omega(s_tilde, model):
    """Choice-specific values implied by perceived future choice probabilities.

    w_k = u_k + beta*delta * Q_k A(s)^{-1} (-ln s_K), a function of the
    perceived probabilities only.  Returns a (K, J) array.
    """
    s_values = s_tilde.values if isinstance(s_tilde, ChoiceProbabilities) else np.asarray(s_tilde, dtype=float)
    disc = model.discount
    w, _ = _omega_values(
        s_values, model.full_utilities(), model.transitions, disc.beta, disc.delta
    )
    return w


def pi_map(s_tilde, model):
    """Best-response map on the CCP simplex: logit transform of the omega values."""
    w = omega(s_tilde, model)
    return ChoiceProbabilities(_softmax_probs(w))


@dataclass(frozen=True)
class StationaryEquilibrium:
    """A fixed point of the best-response map with its diagnostics.

    ``alternates`` lists other distinct fixed points found across starts;
    which equilibrium generated observed data is the caller's call, never
    guessed here.
    """

    s_star: ChoiceProbabilities
    v_star: np.ndarray
    iterations: int
    residual: float
    alternates: tuple = ()


def solve_stationary(model, *, tol=1e-12, max_iter=10_000, damping=0.5, n_starts=1, seed=0):
    """Damped successive approximation to a stationary equilibrium.

    Iterates s <- (1 - damping) * s + damping * pi(s) and accepts the mapped
    point once its own image moves by at most ``tol`` in sup norm.  With
    ``n_starts`` > 1 the iteration also runs from random simplex points and
    every distinct fixed point (sup distance > 1e-6) is reported, sorted
    lexicographically; the first is returned with the rest as alternates.
    """
    _require_valid(model)
    u = model.full_utilities()
    q = model.transitions
    beta, delta = model.discount.beta, model.discount.delta
    k, j = u.shape

    def pi(s_values):
        w, _ = _omega_values(s_values, u, q, beta, delta)
        return _softmax_probs(w)

    rng = np.random.default_rng(seed)
    starts = [np.full((k, j), 1.0 / k)]
    for _ in range(max(0, n_starts - 1)):
        raw = rng.dirichlet(np.ones(k), size=j).T
        starts.append(np.clip(raw, 1e-12, None) / np.clip(raw, 1e-12, None).sum(0))

    solutions = []
    for s0 in starts:
        s = s0
        converged = False
        for it in range(1, max_iter + 1):
            p = pi(s)
            residual = float(np.max(np.abs(pi(p) - p)))
            if residual <= tol:
                converged = True
                break
            s = (1.0 - damping) * s + damping * p
        if converged:
            solutions.append((p, it, residual))

    if not solutions:
        raise NonConvergenceError(
            f"no start converged within {max_iter} iterations (tol={tol}); "
            "possible cycling, consider increasing damping"
        )

    distinct = []
    for sol in solutions:
        if all(np.max(np.abs(sol[0] - d[0])) > 1e-6 for d in distinct):
            distinct.append(sol)
    distinct.sort(key=lambda sol: tuple(sol[0].ravel()))

    def to_equilibrium(sol, alternates=()):
        s_vals, its, res = sol
        a = AMatrix.from_ccps(s_vals, q, beta, delta)
        v = a.solve(-np.log(s_vals[-1]))
        return StationaryEquilibrium(
            s_star=ChoiceProbabilities(s_vals),
            v_star=v,
            iterations=its,
            residual=res,
            alternates=alternates,
        )

    alternates = tuple(to_equilibrium(sol) for sol in distinct[1:])
    return to_equilibrium(distinct[0], alternates)


def recover_utilities_stationary(s, transitions, disc):
    """Unique stationary utilities rationalizing the given choice probabilities.

    v solves A(beta, delta) v = -ln s_K; the reference value is w_K =
    beta*delta Q_K v, other values follow from log-odds contrasts, and
    utilities strip the continuation term back off.
    """
    vals = s.values if isinstance(s, ChoiceProbabilities) else np.asarray(s, dtype=float)
    q = np.asarray(transitions, dtype=float)
    for message in disc.violations(stationary=True):
        raise ValueError(message)
    k = vals.shape[0]
    a = AMatrix.from_ccps(vals, q, disc.beta, disc.delta)
    v = a.solve(-np.log(vals[-1]))
    w_ref = disc.beta * disc.delta * (q[-1] @ v)
    log_contrast = np.log(vals[: k - 1]) - np.log(vals[-1])[None, :]
    w = w_ref[None, :] + log_contrast
    u = w - disc.beta * disc.delta * (q[: k - 1] @ v)
    return StationaryModel(utilities=u, transitions=q, discount=disc)
