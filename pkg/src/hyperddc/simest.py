"""Panel simulation, frequency estimation, and minimum-distance estimation.

Panels are drawn from the equilibrium values with independent Gumbel shocks,
choice and transition probabilities are recovered by cell frequencies, and
the discount parameters are estimated by minimizing a quadratic form in the
moment-condition violations, with a Monte Carlo harness for replication
studies and a dense criterion-surface export.
"""
from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize, minimize_scalar

from .core import ChoiceData, ChoiceProbabilities, FiniteModel, StationaryModel, solve_finite
from .identify import build_moment_system
from .stationary import omega, solve_stationary


class EmptyCellError(ValueError):
    """A frequency estimate was requested for a cell with no observations."""


@dataclass(frozen=True)
class Panel:
    """Simulated agent histories: states and choices per agent and period.

    Transition draws are consistent with the chosen transition matrix by
    construction, and the whole object is a deterministic function of the
    seed.
    """

    states: np.ndarray
    choices: np.ndarray
    seed: int
    n_states: int
    n_choices: int
    stationary: bool = False

    @property
    def n_agents(self):
        return self.states.shape[0]

    @property
    def n_periods(self):
        return self.states.shape[1]


def _draw_categorical(rng, cumulative_rows):
    """One draw per row from categorical distributions given their cumsums."""
    u = rng.random(cumulative_rows.shape[0])
    idx = (cumulative_rows <= u[:, None]).sum(axis=1)
    return np.minimum(idx, cumulative_rows.shape[1] - 1)


def simulate_panel(model, disc=None, *, n_agents, seed, initial_dist=None, n_periods=None):
    """Draw a panel of agent histories from the model's equilibrium.

    Per agent and period: draw one Gumbel shock per choice via -ln(-ln(U)),
    pick the choice maximizing value plus shock (exact floating ties resolve
    to the lowest index), then step the state with the chosen transition
    matrix.  ``n_periods`` defaults to the horizon for finite models and is
    required for stationary ones.
    """
    if isinstance(model, StationaryModel):
        if n_periods is None:
            raise ValueError("stationary simulation needs n_periods")
        eq = solve_stationary(model)
        w_by_period = None
        w_flat = omega(eq.s_star, model)
        horizon = int(n_periods)
        stationary = True
    else:
        if disc is None:
            raise ValueError("finite-horizon simulation needs a discount pair")
        _, values = solve_finite(model, disc)
        w_by_period = values.w
        w_flat = None
        horizon = model.horizon if n_periods is None else int(n_periods)
        if horizon != model.horizon:
            raise ValueError("finite panels cover exactly the model horizon")
        stationary = False

    q = model.transitions
    k, j = model.n_choices, model.n_states
    if initial_dist is None:
        initial_dist = np.full(j, 1.0 / j)
    initial_dist = np.asarray(initial_dist, dtype=float)
    if initial_dist.shape != (j,) or abs(initial_dist.sum() - 1.0) > 1e-9:
        raise ValueError("initial distribution must be a length-J simplex point")

    rng = np.random.default_rng(seed)
    cum_q = np.cumsum(q, axis=2)
    cum_init = np.cumsum(initial_dist)

    states = np.empty((n_agents, horizon), dtype=np.int32)
    choices = np.empty((n_agents, horizon), dtype=np.int32)
    x = _draw_categorical(rng, np.broadcast_to(cum_init, (n_agents, j)))
    for t in range(horizon):
        states[:, t] = x
        u = rng.random((n_agents, k))
        eps = -np.log(-np.log(u))
        w_t = w_by_period[:, t] if w_by_period is not None else w_flat
        util = w_t[:, x].T + eps
        d = np.argmax(util, axis=1).astype(np.int32)
        choices[:, t] = d
        if t < horizon - 1:
            x = _draw_categorical(rng, cum_q[d, x])
    return Panel(
        states=states,
        choices=choices,
        seed=int(seed),
        n_states=j,
        n_choices=k,
        stationary=stationary,
    )


@dataclass(frozen=True)
class CCPEstimate:
    """Frequency-estimated choice probabilities with their cell counts.

    ``probs`` is (K, T, J) or (K, J); cells with no visits hold NaN and are
    listed in ``empty_cells``.  With smoothing lambda, cell frequencies are
    (count + lambda) / (visits + lambda * K).
    """

    probs: np.ndarray
    visits: np.ndarray
    choice_counts: np.ndarray
    empty_cells: tuple
    smoothing: float = 0.0

    def to_choice_probabilities(self):
        if self.empty_cells:
            raise EmptyCellError(
                f"cells without observations: {list(self.empty_cells)[:5]}"
                f"{'...' if len(self.empty_cells) > 5 else ''}"
            )
        if np.any(self.probs <= 0.0):
            raise EmptyCellError(
                "some choices were never taken in a visited cell; use smoothing "
                "or more data before forming log-odds"
            )
        return ChoiceProbabilities(self.probs)


def estimate_ccp(panel, *, smoothing=0.0):
    """Cell-frequency estimator of the conditional choice probabilities."""
    k, j = panel.n_choices, panel.n_states
    if panel.stationary:
        counts = np.zeros((k, j))
        np.add.at(counts, (panel.choices.ravel(), panel.states.ravel()), 1.0)
        visits = counts.sum(axis=0)
        probs = (counts + smoothing) / np.where(
            visits + smoothing * k > 0, visits + smoothing * k, np.nan
        )
        empty = tuple(int(x) for x in np.nonzero(visits == 0)[0])
    else:
        horizon = panel.n_periods
        counts = np.zeros((k, horizon, j))
        t_idx = np.broadcast_to(np.arange(horizon), panel.states.shape)
        np.add.at(
            counts, (panel.choices.ravel(), t_idx.ravel(), panel.states.ravel()), 1.0
        )
        visits = counts.sum(axis=0)
        probs = (counts + smoothing) / np.where(
            visits + smoothing * k > 0, visits + smoothing * k, np.nan
        )
        empty = tuple((int(t), int(x)) for t, x in zip(*np.nonzero(visits == 0)))
    return CCPEstimate(
        probs=probs,
        visits=visits,
        choice_counts=counts,
        empty_cells=empty,
        smoothing=smoothing,
    )


@dataclass(frozen=True)
class TransitionEstimate:
    """Frequency-estimated transition matrices with (choice, state) cell counts."""

    values: np.ndarray
    counts: np.ndarray
    empty_cells: tuple

    def require_complete(self):
        if self.empty_cells:
            raise EmptyCellError(
                f"(choice, state) cells without observed transitions: "
                f"{list(self.empty_cells)[:5]}{'...' if len(self.empty_cells) > 5 else ''}"
            )
        return self.values


def estimate_transitions(panel, *, smoothing=0.0):
    """Pooled frequency estimator of the controlled transition matrices."""
    k, j = panel.n_choices, panel.n_states
    counts = np.zeros((k, j, j))
    d = panel.choices[:, :-1].ravel()
    x = panel.states[:, :-1].ravel()
    x_next = panel.states[:, 1:].ravel()
    np.add.at(counts, (d, x, x_next), 1.0)
    row_tot = counts.sum(axis=2)
    values = (counts + smoothing) / np.where(
        (row_tot + smoothing * j) > 0, (row_tot + smoothing * j), np.nan
    )[:, :, None]
    empty = tuple((int(a), int(b)) for a, b in zip(*np.nonzero(row_tot == 0)))
    return TransitionEstimate(values=values, counts=row_tot, empty_cells=empty)


@dataclass(frozen=True)
class LocalMinimum:
    beta: float
    delta: float
    criterion: float
    converged: bool


@dataclass(frozen=True)
class EstimationResult:
    """Minimum-distance estimate with the local minima found across starts."""

    beta_hat: float
    delta_hat: float
    criterion_value: float
    converged: bool
    starts: tuple
    weight_matrix: str

    @property
    def gamma_hat(self):
        return self.beta_hat * self.delta_hat


def _fd_newton_polish(fun, x0, bounds, iters=25, rel_step=1e-6):
    """Newton refinement on central finite-difference gradients and Hessians."""
    x = np.array(x0, dtype=float)
    lo = np.array([b[0] for b in bounds])
    hi = np.array([b[1] for b in bounds])
    n = len(x)
    for _ in range(iters):
        h = rel_step * np.maximum(np.abs(x), 1.0)
        grad = np.empty(n)
        hess = np.empty((n, n))
        f0 = fun(x)
        for i in range(n):
            e = np.zeros(n)
            e[i] = h[i]
            fp, fm = fun(x + e), fun(x - e)
            grad[i] = (fp - fm) / (2 * h[i])
            hess[i, i] = (fp - 2 * f0 + fm) / h[i] ** 2
        for i in range(n):
            for jj in range(i + 1, n):
                ei = np.zeros(n)
                ej = np.zeros(n)
                ei[i] = h[i]
                ej[jj] = h[jj]
                cross = (
                    fun(x + ei + ej) - fun(x + ei - ej) - fun(x - ei + ej) + fun(x - ei - ej)
                ) / (4 * h[i] * h[jj])
                hess[i, jj] = hess[jj, i] = cross
        try:
            step = np.linalg.solve(hess, -grad)
        except np.linalg.LinAlgError:
            break
        if not np.all(np.isfinite(step)):
            break
        x_new = np.clip(x + step, lo, hi)
        if fun(x_new) > f0:
            break
        x = x_new
        if np.max(np.abs(step)) < 1e-13:
            break
    return x


def minimum_distance(
    data,
    restrictions,
    weight=None,
    *,
    geometric=False,
    n_starts=9,
    bounds=None,
    seed=0,
    polish=True,
):
    """Minimum-distance estimation of the discount parameters.

    Builds the moment polynomials once from the data, then minimizes
    S(beta, delta) = psi' W psi over the parameter box by multistart
    Nelder-Mead, each local solution refined by Newton steps on central
    finite-difference derivatives.  ``geometric`` pins beta at one and
    minimizes over delta alone; it needs a single restriction where the
    hyperbolic model needs two.  W defaults to the identity.
    """
    restrictions = tuple(restrictions)
    needed = 1 if geometric else 2
    if len(restrictions) < needed:
        raise ValueError(f"need at least {needed} restrictions")
    ms = build_moment_system(data, restrictions)
    n_mom = len(ms.polys)
    if weight is None:
        w_matrix = np.eye(n_mom)
        w_label = "identity"
    else:
        w_matrix = np.asarray(weight, dtype=float)
        if w_matrix.shape != (n_mom, n_mom):
            raise ValueError(f"weight matrix must be {n_mom} x {n_mom}")
        w_label = "custom"
    if bounds is None:
        delta_hi = 1.0 - 1e-6 if ms.is_stationary else 2.0
        bounds = ((1e-6, 1.0), (0.0, delta_hi))

    def criterion(theta):
        b, d = theta
        psi = np.array([p(b, d) for p in ms.polys])
        return float(psi @ w_matrix @ psi)

    rng = np.random.default_rng(seed)
    locals_found = []
    if geometric:
        lo, hi = bounds[1]
        grid = np.linspace(lo, hi, 2001)
        vals = np.array([criterion((1.0, d)) for d in grid])
        interior = np.nonzero(
            (vals <= np.roll(vals, 1)) & (vals <= np.roll(vals, -1))
        )[0]
        seeds = {0, len(grid) - 1, int(vals.argmin())} | set(
            int(i) for i in interior if 0 < i < len(grid) - 1
        )
        for i in sorted(seeds):
            b_lo = grid[max(i - 1, 0)]
            b_hi = grid[min(i + 1, len(grid) - 1)]
            if b_hi <= b_lo:
                continue
            res = minimize_scalar(
                lambda d: criterion((1.0, d)),
                bounds=(b_lo, b_hi),
                method="bounded",
                options={"xatol": 1e-13},
            )
            locals_found.append(
                LocalMinimum(1.0, float(res.x), float(res.fun), bool(res.success))
            )
    else:
        starts = [np.array([0.5, 0.5 * (bounds[1][0] + bounds[1][1])])]
        while len(starts) < n_starts:
            starts.append(
                np.array(
                    [
                        rng.uniform(max(bounds[0][0], 0.05), bounds[0][1]),
                        rng.uniform(bounds[1][0], bounds[1][1]),
                    ]
                )
            )
        for x0 in starts:
            res = minimize(
                criterion,
                x0,
                method="Nelder-Mead",
                bounds=bounds,
                options={"xatol": 1e-10, "fatol": 1e-18, "maxiter": 2000},
            )
            x = res.x
            if polish:
                x = _fd_newton_polish(criterion, x, bounds)
            locals_found.append(
                LocalMinimum(float(x[0]), float(x[1]), criterion(x), bool(res.success))
            )

    dedup = []
    for lm in sorted(locals_found, key=lambda lm: lm.criterion):
        if all(
            max(abs(lm.beta - o.beta), abs(lm.delta - o.delta)) > 1e-6 for o in dedup
        ):
            dedup.append(lm)
    best = dedup[0]
    return EstimationResult(
        beta_hat=best.beta,
        delta_hat=best.delta,
        criterion_value=best.criterion,
        converged=best.converged,
        starts=tuple(dedup),
        weight_matrix=w_label,
    )


@dataclass(frozen=True)
class ReplicationRow:
    rep: int
    beta_hat: float
    delta_hat: float
    gamma_hat: float
    criterion: float
    converged: bool


@dataclass(frozen=True)
class MonteCarloTable:
    rows: tuple
    summary: dict

    def column(self, name):
        return np.array([getattr(r, name) for r in self.rows])


def _one_replication(args):
    (model, disc, restrictions, n_agents, seed, use_true_transitions, geometric) = args
    try:
        panel = simulate_panel(model, disc, n_agents=n_agents, seed=seed)
        ccps = estimate_ccp(panel).to_choice_probabilities()
        if use_true_transitions:
            transitions = model.transitions
        else:
            transitions = estimate_transitions(panel).require_complete()
        data = ChoiceData(ccps=ccps, transitions=transitions)
        result = minimum_distance(data, restrictions, geometric=geometric)
        return (
            result.beta_hat,
            result.delta_hat,
            result.gamma_hat,
            result.criterion_value,
            result.converged,
        )
    except Exception:
        return (np.nan, np.nan, np.nan, np.nan, False)


def resolve_n_jobs(n_jobs=None):
    """Parallel worker count, capped by the HYPERDDC_THREADS environment variable."""
    cap = os.environ.get("HYPERDDC_THREADS")
    cap = int(cap) if cap else 1
    if n_jobs is None:
        n_jobs = cap
    return max(1, min(int(n_jobs), cap, os.cpu_count() or 1))


def monte_carlo(
    model,
    disc,
    restrictions,
    *,
    n_agents,
    n_reps,
    seed0=0,
    use_true_transitions=False,
    geometric=False,
    n_jobs=None,
):
    """Replicated simulation and estimation from one data-generating process.

    Replication r uses seed seed0 + r, so the table is reproducible and
    order-independent under parallel execution.  Failed replications are
    recorded as NaN rows rather than aborting the run.
    """
    jobs = [
        (model, disc, restrictions, n_agents, seed0 + r + 1, use_true_transitions, geometric)
        for r in range(n_reps)
    ]
    n_jobs = resolve_n_jobs(n_jobs)
    if n_jobs > 1:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            outcomes = list(pool.map(_one_replication, jobs))
    else:
        outcomes = [_one_replication(job) for job in jobs]
    rows = tuple(
        ReplicationRow(r + 1, *outcome) for r, outcome in enumerate(outcomes)
    )
    ok = [row for row in rows if np.isfinite(row.beta_hat)]

    def stats(name):
        vals = np.array([getattr(r, name) for r in ok])
        return {
            "mean": float(vals.mean()) if vals.size else np.nan,
            "sd": float(vals.std(ddof=1)) if vals.size > 1 else np.nan,
        }

    summary = {
        "n_reps": n_reps,
        "n_converged": len(ok),
        "beta_hat": stats("beta_hat"),
        "delta_hat": stats("delta_hat"),
        "gamma_hat": stats("gamma_hat"),
    }
    return MonteCarloTable(rows=rows, summary=summary)


def criterion_surface(data, restrictions, beta_grid, delta_grid, weight=None):
    """Dense evaluation of the minimum-distance criterion on a parameter grid.

    Returns the (len(beta_grid), len(delta_grid)) matrix of S values; the
    moment polynomials are built once and evaluated vectorized.
    """
    ms = build_moment_system(data, restrictions)
    n_mom = len(ms.polys)
    w_matrix = np.eye(n_mom) if weight is None else np.asarray(weight, dtype=float)
    bb, dd = np.meshgrid(
        np.asarray(beta_grid, dtype=float), np.asarray(delta_grid, dtype=float), indexing="ij"
    )
    psi = np.stack([p(bb, dd) for p in ms.polys])
    return np.einsum("ixy,ij,jxy->xy", psi, w_matrix, psi)


def _fmt(x):
    return f"{x:.17g}"


def write_replications_csv(path, table):
    with open(path, "w") as fh:
        fh.write("rep,beta_hat,delta_hat,gamma_hat,criterion,converged\n")
        for r in table.rows:
            fh.write(
                f"{r.rep},{_fmt(r.beta_hat)},{_fmt(r.delta_hat)},{_fmt(r.gamma_hat)},"
                f"{_fmt(r.criterion)},{int(r.converged)}\n"
            )


def write_surface_csv(path, beta_grid, delta_grid, surface):
    with open(path, "w") as fh:
        fh.write("beta,delta,criterion\n")
        for i, b in enumerate(beta_grid):
            for j, d in enumerate(delta_grid):
                fh.write(f"{_fmt(b)},{_fmt(d)},{_fmt(surface[i, j])}\n")


def write_ccp_csv(path, ccps, state_labels=None, choice_labels=None):
    v = ccps.values
    k = v.shape[0]
    j = v.shape[-1]
    state_labels = state_labels or [str(x) for x in range(j)]
    choice_labels = choice_labels or [str(c) for c in range(k)]
    with open(path, "w") as fh:
        fh.write("period,state,choice,probability\n")
        if ccps.is_stationary:
            for c in range(k):
                for x in range(j):
                    fh.write(f"stationary,{state_labels[x]},{choice_labels[c]},{_fmt(v[c, x])}\n")
        else:
            for c in range(k):
                for t in range(v.shape[1]):
                    for x in range(j):
                        fh.write(
                            f"{t + 1},{state_labels[x]},{choice_labels[c]},{_fmt(v[c, t, x])}\n"
                        )
