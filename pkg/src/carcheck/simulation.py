"""Monte Carlo runs of procedural models, checked against exact induction.

Samples are processed in fixed-size chunks; chunk ``c`` draws from a Philox
generator seeded with ``(seed, c)``, so counts depend only on the seed and
the sample count.
"""

import bisect
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .bernoulli import BernoulliModel
from .core import CoarseDistribution, StateSubset
from .errors import InputError
from .procedural import MgdModel, PtModel, RmcModel, TabularSequentialModel, UniformNoiseModel

CHUNK = 1024
MAX_PT_RETRIES = 10**4


class _Categorical:
    __slots__ = ("keys", "cum")

    def __init__(self, dist):
        self.keys = list(dist)
        total = 0.0
        self.cum = []
        for k in self.keys:
            total += float(dist[k])
            self.cum.append(total)

    def draw(self, rng):
        i = bisect.bisect_right(self.cum, rng.random() * self.cum[-1])
        return self.keys[min(i, len(self.keys) - 1)]


class _PtAbort(Exception):
    pass


def _mgd_sampler(m: MgdModel):
    pick = _Categorical(dict(enumerate(m.lambdas)))
    return lambda rng, x: m.block(pick.draw(rng), x)


def _rmc_sampler(m: RmcModel):
    nodes = {}

    def step(a):
        if a not in nodes:
            node = m.node(a)
            opts = {None: node.stop} if node.stop else {}
            for h, p in node.splits:
                if p:
                    opts[h] = p
            nodes[a] = _Categorical(opts)
        return nodes[a]

    def sample(rng, x):
        a = m.space.full()
        while True:
            h = step(a).draw(rng)
            if h is None:
                return a
            a = h if x in h else a - h

    return sample


def _noise_sampler(m: UniformNoiseModel):
    hs = [_Categorical(h) for h in m.h_weights]
    ps = [float(p) for p in m.steps]

    def sample(rng, x):
        mask = 1 << m.space.index(x)
        for p, h in zip(ps, hs):
            if rng.random() < p:
                mask |= 1 << m.space.index(h.draw(rng))
        return StateSubset(m.space, mask)

    return sample


def _pt_sampler(m: PtModel):
    prefix = [_Categorical(q) for q in m.prefix]
    tail = _Categorical(m.proposal)

    def sample(rng, x):
        for q in prefix:
            u = q.draw(rng)
            if x in u:
                return u
        for _ in range(MAX_PT_RETRIES):
            u = tail.draw(rng)
            if x in u:
                return u
        raise _PtAbort

    return sample


def _tabular_sampler(m: TabularSequentialModel):
    rows = {}

    def sample(rng, x):
        hist = ()
        for i in range(len(m.gammas)):
            key = (i, x, hist)
            if key not in rows:
                rows[key] = _Categorical(m.row(i, x, hist))
            hist += (rows[key].draw(rng),)
        u = m.f(x, hist)
        return u if isinstance(u, StateSubset) else m.space.subset(u)

    return sample


class _LazyDraw:
    __slots__ = ("rng", "values", "dists")

    def __init__(self, rng, dists):
        self.rng = rng
        self.values = {}
        self.dists = dists

    def __getitem__(self, i):
        if i not in self.values:
            self.values[i] = self.dists[i].draw(self.rng)
        return self.values[i]

    def __len__(self):
        return len(self.dists)


def _bernoulli_sampler(b: BernoulliModel):
    dists = [_Categorical(mg) for mg in b.marginals]

    def sample(rng, x):
        u = b.f(x, _LazyDraw(rng, dists))
        return u if isinstance(u, StateSubset) else b.space.subset(u)

    return sample


def _sampler(model):
    for kind, make in (
        (MgdModel, _mgd_sampler),
        (RmcModel, _rmc_sampler),
        (UniformNoiseModel, _noise_sampler),
        (PtModel, _pt_sampler),
        (TabularSequentialModel, _tabular_sampler),
        (BernoulliModel, _bernoulli_sampler),
    ):
        if isinstance(model, kind):
            return make(model)
    raise InputError(f"cannot simulate a {type(model).__name__}")


@dataclass
class EmpiricalTable:
    """Counts of simulated (x, U) pairs."""

    counts: dict
    n_samples: int
    seed: int
    aborted: int = 0

    def row_totals(self) -> dict:
        totals = {}
        for (x, _), c in self.counts.items():
            totals[x] = totals.get(x, 0) + c
        return totals


def generator(seed: int, chunk: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, chunk])))


def simulate(model, n_samples: int, seed: int) -> EmpiricalTable:
    if n_samples < 1:
        raise InputError("n_samples must be at least 1")
    sample = _sampler(model)
    pick_x = _Categorical(model.px)
    counts = {}
    aborted = 0
    for c, start in enumerate(range(0, n_samples, CHUNK)):
        rng = generator(seed, c)
        for _ in range(min(CHUNK, n_samples - start)):
            x = pick_x.draw(rng)
            try:
                u = sample(rng, x)
            except _PtAbort:
                aborted += 1
                continue
            counts[(x, u)] = counts.get((x, u), 0) + 1
    ordered = dict(sorted(counts.items(), key=lambda kv: (model.space.index(kv[0][0]), kv[0][1].order_key())))
    return EmpiricalTable(ordered, n_samples, seed, aborted)


@dataclass(frozen=True)
class EmpiricalComparison:
    gap: float
    at: Optional[tuple]
    tolerance: float
    passed: bool
    frequencies: dict = field(repr=False, default_factory=dict)


def compare_empirical(exact: CoarseDistribution, table: EmpiricalTable, tolerance: float = 0.01) -> EmpiricalComparison:
    """Largest |empirical - exact| conditional over states that were sampled."""
    totals = table.row_totals()
    keys = set(table.counts)
    keys.update(k for k in exact.cond if k[0] in totals)
    gap, at = 0.0, None
    freqs = {}
    for x, u in sorted(keys, key=lambda k: (exact.space.index(k[0]), k[1].order_key())):
        if u.space != exact.space:
            raise InputError("empirical table and distribution use different state spaces")
        f = table.counts.get((x, u), 0) / totals[x]
        freqs[(x, u)] = f
        d = abs(f - float(exact.p_cond(x, u)))
        if d > gap:
            gap, at = d, (x, u)
    return EmpiricalComparison(gap, at, tolerance, gap <= tolerance, freqs)
