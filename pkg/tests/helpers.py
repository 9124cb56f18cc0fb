"""Shared test utilities: random model factories and identified instances."""
import numpy as np

from hyperddc import (
    ChoiceData,
    DiscountPair,
    ExclusionRestriction,
    FiniteModel,
    StationaryModel,
)


def random_finite_model(rng, n_states=None, horizon=None, n_choices=None, u_range=5.0):
    j = int(n_states or rng.integers(2, 9))
    t = int(horizon or rng.integers(2, 7))
    k = int(n_choices or rng.integers(2, 5))
    u = rng.uniform(-u_range, u_range, (k - 1, t, j))
    q = rng.dirichlet(np.ones(j), size=(k, j))
    return FiniteModel(utilities=u, transitions=q)


def random_finite_disc(rng, delta_max=1.5):
    return DiscountPair(beta=float(rng.uniform(0.05, 1.0)), delta=float(rng.uniform(0.0, delta_max)))


def random_stationary_model(rng, n_states=None, n_choices=None, u_range=5.0, delta_max=0.95):
    j = int(n_states or rng.integers(2, 9))
    k = int(n_choices or rng.integers(2, 5))
    u = rng.uniform(-u_range, u_range, (k - 1, j))
    q = rng.dirichlet(np.ones(j), size=(k, j))
    disc = DiscountPair(
        beta=float(rng.uniform(0.05, 1.0)), delta=float(rng.uniform(0.0, delta_max))
    )
    return StationaryModel(utilities=u, transitions=q, discount=disc)


def _impose_equalities(u_slice, pairs):
    """Force equality of u_slice at each pair of index tuples, propagating
    through overlaps so every constraint holds simultaneously."""
    parent = {}

    def find(p):
        parent.setdefault(p, p)
        while parent[p] != p:
            parent[p] = parent[parent[p]]
            p = parent[p]
        return p

    for a, b in pairs:
        parent[find(a)] = find(b)
    groups = {}
    for p in list(parent):
        groups.setdefault(find(p), []).append(p)
    for members in groups.values():
        value = u_slice[members[0]]
        for p in members:
            u_slice[p] = value


def random_interior_ccps(rng, shape):
    """Strictly interior simplex draws over the first axis."""
    k = shape[0]
    rest = shape[1:]
    raw = rng.dirichlet(np.ones(k), size=rest)
    raw = np.moveaxis(raw, -1, 0)
    raw = np.clip(raw, 1e-9, None)
    return raw / raw.sum(axis=0)


def finite_identified_instance(rng, u_range=3.0):
    """Random finite model with two true exclusion restrictions imposed.

    The first restriction sits strictly before the next-to-terminal period so
    the leading moment has degree at least two and the pair is generically
    free of common factors.  Returns (model, disc, restrictions, data).
    """
    j = int(rng.integers(2, 6))
    horizon = int(rng.integers(3, 5))
    k = int(rng.integers(2, 4))
    model = random_finite_model(rng, n_states=j, horizon=horizon, n_choices=k, u_range=u_range)
    choice = int(rng.integers(0, k - 1))
    t1 = int(rng.integers(0, horizon - 2))
    while True:
        t2 = int(rng.integers(0, horizon - 1))
        x1, x2 = (int(v) for v in rng.choice(j, size=2, replace=False))
        x3, x4 = (int(v) for v in rng.choice(j, size=2, replace=False))
        if (t1, frozenset((x1, x2))) != (t2, frozenset((x3, x4))):
            break
    r1 = ExclusionRestriction.single_period(choice, t1, x1, x2)
    r2 = ExclusionRestriction.single_period(choice, t2, x3, x4)
    u = model.utilities.copy()
    _impose_equalities(u[choice], [((t1, x1), (t1, x2)), ((t2, x3), (t2, x4))])
    model = FiniteModel(utilities=u, transitions=model.transitions)
    disc = DiscountPair(
        beta=float(rng.uniform(0.15, 1.0)), delta=float(rng.uniform(0.05, 1.2))
    )
    data = ChoiceData.exact(model, disc)
    return model, disc, (r1, r2), data


def stationary_identified_instance(rng, u_range=2.0, max_states=4):
    """Random stationary model with two true exclusion restrictions imposed.

    The two restrictions never tie all utilities of one choice together
    (that collapses the equilibrium values to a constant vector and makes
    every moment identically zero): with three or more choices the
    restrictions sit on different choices, otherwise the state pairs are
    disjoint, which needs at least four states.
    """
    k = int(rng.integers(2, 4))
    j = int(rng.integers(4 if k == 2 else 3, max_states + 1))
    base = random_stationary_model(rng, n_states=j, n_choices=k, u_range=u_range)
    if k == 2:
        choices = (0, 0)
        x1, x2, x3, x4 = (int(v) for v in rng.choice(j, size=4, replace=False))
    else:
        choices = (0, 1)
        x1, x2 = (int(v) for v in rng.choice(j, size=2, replace=False))
        x3, x4 = (int(v) for v in rng.choice(j, size=2, replace=False))
    r1 = ExclusionRestriction.stationary(choices[0], x1, x2)
    r2 = ExclusionRestriction.stationary(choices[1], x3, x4)
    u = base.utilities.copy()
    _impose_equalities(u[choices[0]], [((x1,), (x2,))])
    _impose_equalities(u[choices[1]], [((x3,), (x4,))])
    disc = DiscountPair(
        beta=float(rng.uniform(0.15, 1.0)), delta=float(rng.uniform(0.05, 0.9))
    )
    model = StationaryModel(utilities=u, transitions=base.transitions, discount=disc)
    data = ChoiceData.exact(model)
    return model, disc, (r1, r2), data
