"""Seeded random models for property tests.

Drawn parameters are rationals with denominators at most 12; spaces have at
most six states. Pass a :class:`random.Random` so that streams are
reproducible.
"""

import random
from fractions import Fraction

from .core import StateSpace, StateSubset
from .procedural import (
    MgdModel,
    PtModel,
    RmcModel,
    TabularSequentialModel,
    UniformNoiseModel,
    induce_mgd,
    induce_pt,
)

MAX_STATES = 6
MAX_DEN = 12


def random_space(rng: random.Random, lo: int = 2, hi: int = MAX_STATES) -> StateSpace:
    n = rng.randint(lo, hi)
    return StateSpace(tuple("abcdef"[:n]))


def random_weights(rng: random.Random, keys, allow_zero: bool = False) -> dict:
    """A distribution over ``keys`` from integer weights in 0..12 (or 1..12)."""
    keys = list(keys)
    while True:
        w = [rng.randint(0 if allow_zero else 1, MAX_DEN) for _ in keys]
        if sum(w):
            break
    total = sum(w)
    return {k: Fraction(v, total) for k, v in zip(keys, w)}


def random_px(rng: random.Random, space: StateSpace, full_support: bool = False) -> dict:
    return random_weights(rng, space.states, allow_zero=not full_support and rng.random() < 0.3)


def random_subset(rng: random.Random, within: StateSubset) -> StateSubset:
    members = list(within)
    k = rng.randint(1, len(members))
    return within.space.subset(rng.sample(members, k))


def random_partition(rng: random.Random, space: StateSpace) -> tuple:
    blocks = rng.randint(1, len(space))
    labels = [rng.randrange(blocks) for _ in space.states]
    groups = {}
    for s, b in zip(space.states, labels):
        groups.setdefault(b, []).append(s)
    return tuple(sorted((space.subset(g) for g in groups.values()), key=StateSubset.order_key))


def random_mgd(rng: random.Random, space=None, full_support: bool = False) -> MgdModel:
    space = space or random_space(rng)
    k = rng.randint(1, 4)
    parts = [random_partition(rng, space) for _ in range(k)]
    lams = list(random_weights(rng, range(k)).values())
    return MgdModel(space, parts, lams, random_px(rng, space, full_support))


def random_rmc(rng: random.Random, space=None, full_support: bool = False) -> RmcModel:
    space = space or random_space(rng, hi=5)
    tree = {}

    def grow(a, depth):
        if len(a) == 1 or a in tree:
            return
        fan = rng.randint(0, 3)
        splits = []
        seen = set()
        for _ in range(fan):
            h = random_subset(rng, a)
            if h == a or h in seen:
                continue
            seen.add(h)
            splits.append(h)
        keys = ["stop"] + splits
        w = [rng.randint(0 if splits else 1, MAX_DEN) if k == "stop" else rng.randint(1, MAX_DEN) for k in keys]
        total = sum(w)
        tree[a] = (Fraction(w[0], total), [(h, Fraction(v, total)) for h, v in zip(splits, w[1:])])
        for h in splits:
            grow(h, depth + 1)
            grow(a - h, depth + 1)

    grow(space.full(), 0)
    return RmcModel(space, random_px(rng, space, full_support), tree)


def random_noise(rng: random.Random, space=None, full_support: bool = False) -> UniformNoiseModel:
    space = space or random_space(rng)
    steps = [Fraction(rng.randint(0, MAX_DEN), MAX_DEN) for _ in range(rng.randint(0, 3))]
    return UniformNoiseModel(space, random_px(rng, space, full_support), steps)


def random_pt(rng: random.Random, space=None, full_support: bool = False) -> PtModel:
    """Random subsets with random weights, topped up with singletons until unbiased."""
    space = space or random_space(rng)
    weights = {}
    for _ in range(rng.randint(1, 4)):
        u = random_subset(rng, space.full())
        weights[u] = weights.get(u, 0) + rng.randint(1, MAX_DEN)
    mass = {x: sum(w for u, w in weights.items() if x in u) for x in space.states}
    top = max(mass.values())
    for x, m in mass.items():
        if m < top:
            s = space.singleton(x)
            weights[s] = weights.get(s, 0) + top - m
    total = sum(weights.values())
    proposal = {u: Fraction(w, total) for u, w in weights.items()}
    return PtModel(space, random_px(rng, space, full_support), proposal)


def random_tabular(rng: random.Random, space=None, full_support: bool = False) -> TabularSequentialModel:
    """Up to two steps with up to three values each; kernel rows and f drawn per history."""
    space = space or random_space(rng, hi=4)
    steps = rng.randint(0, 2)
    local = random.Random(rng.getrandbits(64))
    gammas = [tuple(f"v{j}" for j in range(rng.randint(1, 3))) for _ in range(steps)]
    rows = {}
    fs = {}

    def kernel(i, x, hist):
        key = (i, x, hist)
        if key not in rows:
            # an x-blind row half of the time, so copies get shared
            blind = (i, "*", hist)
            if local.random() < 0.5:
                rows.setdefault(blind, random_weights(local, gammas[i], allow_zero=True))
                rows[key] = rows[blind]
            else:
                rows[key] = random_weights(local, gammas[i], allow_zero=True)
        return rows[key]

    def f(x, gs):
        key = (x, gs)
        if key not in fs:
            fs[key] = random_subset(local, space.full()) | space.singleton(x)
        return fs[key]

    return TabularSequentialModel(space, random_px(rng, space, full_support), gammas, kernel, f)


def random_car_distribution(rng: random.Random):
    """A d-car distribution, induced by a random unbiased P&T model."""
    return induce_pt(random_pt(rng))


def random_ccar_distribution(rng: random.Random):
    return induce_mgd(random_mgd(rng))
