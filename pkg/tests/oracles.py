"""Independent oracles the library is checked against.

Each oracle implements its target from scratch through a different route
than the library: textbook geometric backward induction and value iteration
with integrated (log-sum-exp) values, and a Monte Carlo simulator of the
equilibrium definition that estimates choice frequencies and continuation
values purely from Gumbel draws, never through the logit formula.

Run ``python tests/oracles.py`` to regenerate the frozen Monte Carlo table
used by the solver fidelity test (tests/data/mc_ccp_sixstate.json).
"""
import json
from pathlib import Path

import numpy as np

DATA_DIR = Path(__file__).parent / "data"


def geometric_finite(model, delta):
    """Textbook backward induction for geometric discounting.

    Integrated values V_t = logsumexp_k(u_k + delta Q_k V_{t+1}); choice
    probabilities are the softmax of the choice-specific values.
    """
    u = model.full_utilities()
    q = model.transitions
    k, horizon, j = u.shape
    v = np.zeros((horizon, j))
    w = np.empty((k, horizon, j))
    s = np.empty((k, horizon, j))
    for t in reversed(range(horizon)):
        w[:, t] = u[:, t] if t == horizon - 1 else u[:, t] + delta * (q @ v[t + 1])
        peak = w[:, t].max(axis=0)
        v[t] = peak + np.log(np.exp(w[:, t] - peak).sum(axis=0))
        s[:, t] = np.exp(w[:, t] - v[t])
    return s, w, v


def geometric_stationary(model, tol=1e-13, max_iter=500_000):
    """Standard value iteration for the stationary geometric model."""
    u = model.full_utilities()
    q = model.transitions
    delta = model.discount.delta
    j = model.n_states
    v = np.zeros(j)
    for _ in range(max_iter):
        w = u + delta * (q @ v)
        peak = w.max(axis=0)
        v_new = peak + np.log(np.exp(w - peak).sum(axis=0))
        if np.max(np.abs(v_new - v)) < tol:
            v = v_new
            break
        v = v_new
    w = u + delta * (q @ v)
    peak = w.max(axis=0)
    s = np.exp(w - (peak + np.log(np.exp(w - peak).sum(axis=0))))
    return s, v


def mc_equilibrium_ccps(model, disc, n_draws=10_000_000, seed=20240817, chunk=1_000_000):
    """Monte Carlo simulation of the equilibrium definition itself.

    Works backward in time.  At each (t, x): draw Gumbel vectors, choose the
    value-plus-shock maximizer, and estimate both the choice frequencies and
    the perceived continuation value (flow utility of the chosen action plus
    its shock plus delta times the chosen transition's continuation) by
    sample means.  Earlier periods use the estimated continuation values, so
    nothing here touches the closed-form logit expressions.
    """
    u = model.full_utilities()
    q = model.transitions
    k, horizon, j = u.shape
    beta, delta = disc.beta, disc.delta
    rng = np.random.default_rng(seed)
    v_hat = np.zeros((horizon, j))
    s_hat = np.zeros((k, horizon, j))
    for t in reversed(range(horizon)):
        for x in range(j):
            if t == horizon - 1:
                w = u[:, t, x].copy()
            else:
                w = u[:, t, x] + beta * delta * (q[:, x] @ v_hat[t + 1])
            counts = np.zeros(k)
            value_sum = 0.0
            done = 0
            while done < n_draws:
                size = min(chunk, n_draws - done)
                eps = -np.log(-np.log(rng.random((size, k))))
                chosen = np.argmax(w[None, :] + eps, axis=1)
                counts += np.bincount(chosen, minlength=k)
                draw_value = u[chosen, t, x] + eps[np.arange(size), chosen]
                if t < horizon - 1:
                    draw_value = draw_value + delta * (q[chosen, x] @ v_hat[t + 1])
                value_sum += draw_value.sum()
                done += size
            s_hat[:, t, x] = counts / n_draws
            v_hat[t, x] = value_sum / n_draws
    se = np.sqrt(s_hat * (1.0 - s_hat) / n_draws)
    return s_hat, se


def frozen_mc_table():
    with open(DATA_DIR / "mc_ccp_sixstate.json") as fh:
        doc = json.load(fh)
    return np.array(doc["ccps"]), np.array(doc["se"]), doc


def main():
    import sys

    sys.path.insert(0, str(Path(__file__).parent))
    from hyperddc import load_model

    spec = load_model(Path(__file__).parent.parent / "specs" / "sixstate.json")
    n_draws = 10_000_000
    seed = 20240817
    s_hat, se = mc_equilibrium_ccps(spec.model, spec.discount, n_draws=n_draws, seed=seed)
    DATA_DIR.mkdir(exist_ok=True)
    with open(DATA_DIR / "mc_ccp_sixstate.json", "w") as fh:
        json.dump(
            {
                "n_draws": n_draws,
                "seed": seed,
                "ccps": s_hat.tolist(),
                "se": se.tolist(),
            },
            fh,
            indent=1,
        )
    print(f"froze Monte Carlo CCP table ({n_draws} draws per cell)")


if __name__ == "__main__":
    main()
