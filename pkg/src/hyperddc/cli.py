"""Command-line front end.

Thin wrappers around the library: load a model spec, dispatch one subcommand,
and write CSV/JSON outputs.  Exit codes: 0 for success (model rejection and
common-factor outcomes are findings, not errors), 1 for numeric failure, 2
for input errors.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .core import ChoiceData, FiniteModel, solve_finite
from .identify import SearchDomain, build_moment_system, solve_identified_set
from .simest import (
    criterion_surface,
    minimum_distance,
    monte_carlo,
    simulate_panel,
    estimate_ccp,
    estimate_transitions,
    write_ccp_csv,
    write_replications_csv,
    write_surface_csv,
)
from .specio import SpecError, load_model, load_restrictions
from .stationary import NonConvergenceError, solve_stationary


def _fmt(x):
    return f"{x:.17g}"


def _add_common(p, *, restrictions=False):
    p.add_argument("--spec", required=True, help="model-spec JSON file")
    p.add_argument("--beta", type=float, help="override the spec's present-bias factor")
    p.add_argument("--delta", type=float, help="override the spec's discount factor")
    p.add_argument("--out", default=".", help="output directory (default: current)")
    p.add_argument("--tol", type=float, help="tolerance override for the subcommand")
    if restrictions:
        p.add_argument("--restrictions", required=True, help="restrictions JSON file")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="hyperddc",
        description=(
            "Dynamic discrete choice with quasi-hyperbolic discounting: solve, "
            "identify, estimate, replicate, and export criterion surfaces."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve the model and write CCP/value tables")
    _add_common(p)

    p = sub.add_parser("identify", help="enumerate the identified set of (beta, delta)")
    _add_common(p, restrictions=True)
    p.add_argument("--delta-max", type=float, default=None, help="upper end of the delta search box")

    p = sub.add_parser("estimate", help="minimum-distance estimation of (beta, delta)")
    _add_common(p, restrictions=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n-agents", type=int, default=100_000)
    p.add_argument("--exact", action="store_true", help="use model-implied probabilities, no sampling")
    p.add_argument("--geometric", action="store_true", help="pin beta at 1 and estimate delta alone")

    p = sub.add_parser("replicate", help="Monte Carlo replication table")
    _add_common(p, restrictions=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n-agents", type=int, default=100_000)
    p.add_argument("--replications", type=int, default=50)
    p.add_argument("--paper-scale", action="store_true", help="run 100 replications of 1e6 agents")
    p.add_argument("--geometric", action="store_true")

    p = sub.add_parser("surface", help="criterion surface on a (beta, delta) grid")
    _add_common(p, restrictions=True)
    p.add_argument("--grid", default="101", help="grid size, N or NBxND")
    p.add_argument("--delta-max", type=float, default=None)

    return parser


def _load(args, *, need_restrictions=False):
    spec = load_model(args.spec, beta=args.beta, delta=args.delta)
    restrictions = None
    if need_restrictions:
        restrictions = load_restrictions(args.restrictions, spec)
    return spec, restrictions


def _exact_data(spec):
    if spec.is_stationary:
        return ChoiceData.exact(spec.model)
    if spec.discount is None:
        raise SpecError("this subcommand needs a discount pair (spec block or flags)")
    return ChoiceData.exact(spec.model, spec.discount)


def cmd_solve(args):
    spec, _ = _load(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if spec.is_stationary:
        tol = args.tol if args.tol else 1e-12
        eq = solve_stationary(spec.model, tol=tol)
        write_ccp_csv(out / "ccp.csv", eq.s_star, spec.state_labels, spec.choice_labels)
        with open(out / "values.csv", "w") as fh:
            fh.write("state,perceived_value\n")
            for x, label in enumerate(spec.state_labels):
                fh.write(f"{label},{_fmt(eq.v_star[x])}\n")
        print(f"fixed point found in {eq.iterations} iterations, residual {eq.residual:.3e}")
        if eq.alternates:
            print(f"warning: {len(eq.alternates)} additional distinct fixed points found")
    else:
        if spec.discount is None:
            raise SpecError("solving a finite model needs beta and delta")
        ccps, values = solve_finite(spec.model, spec.discount)
        write_ccp_csv(out / "ccp.csv", ccps, spec.state_labels, spec.choice_labels)
        with open(out / "values.csv", "w") as fh:
            fh.write("period,state,choice,w,perceived_value\n")
            for t in range(spec.model.horizon):
                for x, xlab in enumerate(spec.state_labels):
                    for c, clab in enumerate(spec.choice_labels):
                        fh.write(
                            f"{t + 1},{xlab},{clab},{_fmt(values.w[c, t, x])},"
                            f"{_fmt(values.v[t, x])}\n"
                        )
        print(f"wrote CCP and value tables for horizon {spec.model.horizon}")
    return 0


def cmd_identify(args):
    spec, restrictions = _load(args, need_restrictions=True)
    data = _exact_data(spec)
    ms = build_moment_system(data, restrictions)
    domain = SearchDomain.default_for(ms)
    if args.delta_max is not None:
        domain = SearchDomain(delta_min=domain.delta_min, delta_max=args.delta_max)
    tol = args.tol if args.tol else 1e-6
    ident = solve_identified_set(ms, domain, membership_tol=tol)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    report = ident.to_dict()
    with open(out / "identified_set.json", "w") as fh:
        json.dump(report, fh, indent=2)
    if ident.common_factor_detected:
        print("common factor detected: the identified set is not finite")
        if ident.identified_product is not None:
            print(f"identified product beta*delta = {ident.identified_product:.10g}")
    elif ident.empty_model_rejected:
        print("model rejected: no (beta, delta) satisfies the moment conditions")
    else:
        for c in ident.candidates:
            print(f"candidate beta={c.beta:.10g} delta={c.delta:.10g}")
    print(f"cardinality bound {ident.bound}; report in {out / 'identified_set.json'}")
    return 0


def _estimation_data(spec, args):
    if args.exact:
        return _exact_data(spec)
    model = spec.model
    disc = spec.discount
    panel = simulate_panel(
        model,
        disc,
        n_agents=args.n_agents,
        seed=args.seed,
        n_periods=None if isinstance(model, FiniteModel) else 200,
    )
    ccps = estimate_ccp(panel).to_choice_probabilities()
    transitions = estimate_transitions(panel).require_complete()
    return ChoiceData(ccps=ccps, transitions=transitions)


def cmd_estimate(args):
    spec, restrictions = _load(args, need_restrictions=True)
    data = _estimation_data(spec, args)
    result = minimum_distance(data, restrictions, geometric=args.geometric)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    payload = {
        "beta_hat": result.beta_hat,
        "delta_hat": result.delta_hat,
        "gamma_hat": result.gamma_hat,
        "criterion": result.criterion_value,
        "converged": result.converged,
        "weight_matrix": result.weight_matrix,
        "local_minima": [
            {"beta": lm.beta, "delta": lm.delta, "criterion": lm.criterion}
            for lm in result.starts
        ],
    }
    with open(out / "estimate.json", "w") as fh:
        json.dump(payload, fh, indent=2)
    if args.geometric:
        print(f"geometric estimate delta_hat = {result.delta_hat:.10g}")
    else:
        print(
            f"estimate beta_hat = {result.beta_hat:.10g}, "
            f"delta_hat = {result.delta_hat:.10g}"
        )
    print(f"criterion {result.criterion_value:.3e}; report in {out / 'estimate.json'}")
    return 0


def cmd_replicate(args):
    spec, restrictions = _load(args, need_restrictions=True)
    n_agents = 1_000_000 if args.paper_scale else args.n_agents
    n_reps = 100 if args.paper_scale else args.replications
    if spec.is_stationary:
        raise SpecError("replication currently targets finite-horizon specs")
    if spec.discount is None:
        raise SpecError("replication needs the data-generating beta and delta")
    table = monte_carlo(
        spec.model,
        spec.discount,
        restrictions,
        n_agents=n_agents,
        n_reps=n_reps,
        seed0=args.seed,
        geometric=args.geometric,
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_replications_csv(out / "replications.csv", table)
    with open(out / "replication_summary.json", "w") as fh:
        json.dump(table.summary, fh, indent=2)
    s = table.summary
    print(
        f"{s['n_converged']}/{s['n_reps']} replications converged; "
        f"mean gamma_hat = {s['gamma_hat']['mean']:.6g} "
        f"(sd {s['gamma_hat']['sd']:.3g})"
    )
    return 0


def cmd_surface(args):
    spec, restrictions = _load(args, need_restrictions=True)
    data = _exact_data(spec)
    if "x" in args.grid:
        nb, nd = (int(part) for part in args.grid.lower().split("x"))
    else:
        nb = nd = int(args.grid)
    delta_max = args.delta_max if args.delta_max is not None else 1.0
    beta_grid = np.linspace(0.01, 1.0, nb)
    delta_grid = np.linspace(0.0, delta_max, nd)
    surface = criterion_surface(data, restrictions, beta_grid, delta_grid)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_surface_csv(out / "surface.csv", beta_grid, delta_grid, surface)
    i, j = np.unravel_index(np.argmin(surface), surface.shape)
    print(
        f"surface minimum {surface[i, j]:.3e} at beta={beta_grid[i]:.6g}, "
        f"delta={delta_grid[j]:.6g}; grid in {out / 'surface.csv'}"
    )
    return 0


COMMANDS = {
    "solve": cmd_solve,
    "identify": cmd_identify,
    "estimate": cmd_estimate,
    "replicate": cmd_replicate,
    "surface": cmd_surface,
}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (SpecError, FileNotFoundError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except (NonConvergenceError, np.linalg.LinAlgError) as err:
        print(f"numeric failure: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
