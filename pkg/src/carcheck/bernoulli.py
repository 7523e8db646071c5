"""Bernoulli models: X and every G component mutually independent.

The observation function ``f(x, g)`` is an ordinary Python callable that
reads components of ``g`` by index. Evaluation is lazy: whenever ``f``
touches a component that has not been fixed yet, the explorer branches over
that component's positive-probability values. Only the components that
actually influence the outcome are ever enumerated, which keeps the
transforms of sequential models (many mostly unused copies) tractable.
"""

import math
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterator, Mapping, Optional, Sequence

from .car import check_d_car, check_d_ccar
from .core import CoarseDistribution, StateSpace, StateSubset
from .errors import (
    CarError,
    CoarseningError,
    InputError,
    InternalInconsistency,
    NormalizationError,
    NotHonest,
    PartitionFailure,
    StateExplosion,
)
from .procedural import (
    MgdModel,
    RmcModel,
    TabularSequentialModel,
    UniformNoiseModel,
    induce_mgd,
    rmc_as_tabular,
)

ZERO = Fraction(0)
ONE = Fraction(1)
DEFAULT_MAX_LEAVES = 10**6
DEFAULT_MAX_COPIES = 10**5
PROBE_GRID = 24


class _Unassigned(Exception):
    def __init__(self, index):
        self.index = index


class _Partial:
    """Read-only view of a partial assignment; unknown reads raise :class:`_Unassigned`."""

    __slots__ = ("_values", "_n")

    def __init__(self, values: dict, n: int):
        self._values = values
        self._n = n

    def __getitem__(self, i):
        if not 0 <= i < self._n:
            raise IndexError(i)
        try:
            return self._values[i]
        except KeyError:
            raise _Unassigned(i) from None

    def __len__(self):
        return self._n


class BernoulliModel:
    """Independent X ~ ``px`` and G_i ~ ``marginals[i]`` over ``gammas[i]``.

    ``f(x, g)`` must return a nonempty subset containing x for every
    positive-probability x and positive-probability g.
    """

    def __init__(self, space: StateSpace, px: Mapping, gammas: Sequence, marginals: Sequence, f: Callable,
                 names: Optional[Sequence[str]] = None, max_leaves: int = DEFAULT_MAX_LEAVES):
        self.space = space
        px_d = {}
        for x, p in px.items():
            space.index(x)
            p = Fraction(p)
            if p < 0:
                raise InputError(f"negative probability for state {x!r}")
            if p:
                px_d[x] = p
        if sum(px_d.values(), ZERO) != 1:
            raise NormalizationError("marginal P(X)", 1 - sum(px_d.values(), ZERO))
        self.px = {x: px_d[x] for x in space.states if x in px_d}
        self.gammas = tuple(tuple(str(g) for g in gam) for gam in gammas)
        if len(marginals) != len(self.gammas):
            raise CoarseningError("need one marginal per G component")
        self.marginals = tuple(self._marginal(i, m) for i, m in enumerate(marginals))
        self.names = tuple(names) if names is not None else tuple(f"G{i + 1}" for i in range(len(self.gammas)))
        if len(self.names) != len(self.gammas):
            raise CoarseningError("need one name per G component")
        self.f = f
        self.max_leaves = max_leaves
        for x in self.px:
            for _ in self.explore([x]):
                pass

    def _marginal(self, i, m) -> dict:
        out = {}
        for g, p in m.items():
            g = str(g)
            if g not in self.gammas[i]:
                raise CoarseningError(f"marginal {i + 1} mentions unknown value {g!r}")
            p = Fraction(p)
            if p < 0:
                raise CoarseningError(f"negative probability in marginal {i + 1}")
            if p:
                out[g] = p
        total = sum(out.values(), ZERO)
        if total != 1:
            raise NormalizationError(f"marginal of G{i + 1}", 1 - total)
        return {g: out[g] for g in self.gammas[i] if g in out}

    def __len__(self):
        return len(self.gammas)

    def evaluate(self, x, g: Sequence) -> StateSubset:
        """f at a complete assignment."""
        u = self.f(x, _Partial(dict(enumerate(g)), len(self.gammas)))
        return u if isinstance(u, StateSubset) else self.space.subset(u)

    def probability(self, g: Sequence) -> Fraction:
        prob = ONE
        for m, v in zip(self.marginals, g):
            prob *= m.get(v, ZERO)
        return prob

    def complete(self, assignment: Mapping) -> tuple:
        """Fill unread components with their first positive-probability value."""
        return tuple(assignment.get(i, next(iter(m))) for i, m in enumerate(self.marginals))

    def explore(self, xs: Sequence) -> Iterator:
        """Yield ``(assignment, probability, observations)`` for all outcomes of f on ``xs``.

        Leaves come in lexicographic order of the values of the components in
        the order they are first read.
        """
        n = len(self.gammas)
        count = 0
        stack = [({}, ONE)]
        while stack:
            values, prob = stack.pop()
            outs = []
            need = None
            view = _Partial(values, n)
            for x in xs:
                try:
                    u = self.f(x, view)
                except _Unassigned as e:
                    need = e.index
                    break
                u = u if isinstance(u, StateSubset) else self.space.subset(u)
                if not u:
                    raise CoarseningError(f"f({x!r}, .) returned the empty set")
                if x in self.px and x not in u:
                    raise CoarseningError(f"{x!r} is not a member of its observation {u}")
                outs.append(u)
            if need is None:
                count += 1
                if count > self.max_leaves:
                    raise StateExplosion(f"more than {self.max_leaves} distinct G outcomes")
                yield values, prob, tuple(outs)
                continue
            for v, p in reversed(list(self.marginals[need].items())):
                nxt = dict(values)
                nxt[need] = v
                stack.append((nxt, prob * p))

    def parameters(self) -> list:
        return [("px", dict(self.px))] + [(name, dict(m)) for name, m in zip(self.names, self.marginals)]

    def with_parameter(self, name, dist) -> "BernoulliModel":
        px, marginals = self.px, list(self.marginals)
        if name == "px":
            px = dist
        else:
            marginals[self.names.index(name)] = dist
        return BernoulliModel(self.space, px, self.gammas, marginals, self.f, self.names, self.max_leaves)

    def induce(self) -> CoarseDistribution:
        return induce_bernoulli(self)


def induce_bernoulli(b: BernoulliModel) -> CoarseDistribution:
    cond = {}
    for x in b.px:
        for _, p, (u,) in b.explore([x]):
            cond[(x, u)] = cond.get((x, u), ZERO) + p
    return CoarseDistribution(b.space, b.px, cond)


# -- transform ---------------------------------------------------------------


def bernoulli_transform(m: TabularSequentialModel, max_leaves: int = DEFAULT_MAX_LEAVES,
                        max_copies: int = DEFAULT_MAX_COPIES) -> BernoulliModel:
    """Replace each sampling step by independent copies, one per program state.

    A program state at step i is the history g_<i together with the
    distribution the step samples from; states that agree on both share a
    copy. Only program states reachable from a positive-probability x get
    copies. The transformed f reads, at each step, the copy for the current
    program state.
    """
    copies = {}
    gammas, marginals, names = [], [], []
    per_step = [0] * len(m.gammas)

    def key(i, x, hist):
        row = m.row(i, x, hist)
        return (i, hist, tuple(row.items())), row

    for x in m.px:
        stack = [()]
        while stack:
            hist = stack.pop()
            i = len(hist)
            if i == len(m.gammas):
                continue
            k, row = key(i, x, hist)
            if k not in copies:
                if len(copies) >= max_copies:
                    raise StateExplosion(f"more than {max_copies} program states")
                copies[k] = len(gammas)
                per_step[i] += 1
                gammas.append(m.gammas[i])
                marginals.append(row)
                names.append(f"G{i + 1}.{per_step[i]}")
            for g in reversed(list(row)):
                stack.append(hist + (g,))

    def f(x, g):
        hist = ()
        for i in range(len(m.gammas)):
            k, _ = key(i, x, hist)
            hist += (g[copies[k]],)
        return m.f(x, hist)

    return BernoulliModel(m.space, m.px, gammas, marginals, f, names, max_leaves)


# -- natural Bernoulli forms -------------------------------------------------


def mgd_bernoulli(m: MgdModel) -> BernoulliModel:
    labels = tuple(str(i + 1) for i in range(len(m.lambdas)))
    space = m.space

    def f(x, g):
        u = next((u for u in m.partitions[int(g[0]) - 1] if x in u), None)
        return u if u is not None else space.singleton(x)

    return BernoulliModel(space, m.px, [labels], [dict(zip(labels, m.lambdas))], f, names=["G"])


def noise_bernoulli(m: UniformNoiseModel) -> BernoulliModel:
    """Components N_1..N_k (flags) followed by H_1..H_k (added states)."""
    k = len(m.steps)
    states = m.space.states
    gammas = [("0", "1")] * k + [states] * k
    marginals = [{"0": 1 - p, "1": p} for p in m.steps] + list(m.h_weights)
    names = [f"N{i + 1}" for i in range(k)] + [f"H{i + 1}" for i in range(k)]

    def f(x, g):
        mask = 1 << m.space.index(x)
        for i in range(k):
            if g[i] == "1":
                mask |= 1 << m.space.index(g[k + i])
        return StateSubset(m.space, mask)

    return BernoulliModel(m.space, m.px, gammas, marginals, f, names)


def as_bernoulli(model, max_leaves: int = DEFAULT_MAX_LEAVES, max_copies: int = DEFAULT_MAX_COPIES) -> BernoulliModel:
    """Natural Bernoulli form of a model, via the transform for sequential ones."""
    if isinstance(model, BernoulliModel):
        return model
    if isinstance(model, MgdModel):
        return mgd_bernoulli(model)
    if isinstance(model, UniformNoiseModel):
        return noise_bernoulli(model)
    if isinstance(model, RmcModel):
        return bernoulli_transform(rmc_as_tabular(model), max_leaves, max_copies)
    if isinstance(model, TabularSequentialModel):
        return bernoulli_transform(model, max_leaves, max_copies)
    raise InputError(f"no Bernoulli form for {type(model).__name__}")


# -- honesty -----------------------------------------------------------------


@dataclass(frozen=True)
class HonestyVerdict:
    honest: bool
    violation: Optional[tuple] = None  # (x, x', U, g)


def check_honest(b: BernoulliModel) -> HonestyVerdict:
    """Search state pairs in state order and G outcomes in exploration order."""
    supp = list(b.px)
    for x in supp:
        for x2 in supp:
            if x2 == x:
                continue
            for values, _, (u, u2) in b.explore([x, x2]):
                if x2 in u and u2 != u:
                    g = b.complete(values)
                    verdict = HonestyVerdict(False, (x, x2, u, g))
                    if not verify_violation(b, verdict.violation):
                        raise InternalInconsistency("honesty violation does not re-verify")
                    return verdict
    return HonestyVerdict(True)


def verify_violation(b: BernoulliModel, violation) -> bool:
    x, x2, u, g = violation
    if b.probability(g) <= 0 or b.px.get(x, ZERO) <= 0 or b.px.get(x2, ZERO) <= 0:
        return False
    return b.evaluate(x, g) == u and x2 in u and b.evaluate(x2, g) != u


def extract_mgd(b: BernoulliModel) -> MgdModel:
    """Group G outcomes by the observation map they induce; each group is a partition."""
    if not check_honest(b).honest:
        raise NotHonest("the model is not honest")
    supp = list(b.px)
    supp_set = b.space.subset(supp)
    classes = {}
    for _, p, outs in b.explore(supp):
        blocks = tuple(sorted(set(outs), key=StateSubset.order_key))
        covered = 0
        for u in blocks:
            m = (u & supp_set).mask
            if covered & m:
                raise PartitionFailure(f"overlapping blocks {list(map(str, blocks))}")
            covered |= m
        if covered != supp_set.mask:
            raise PartitionFailure("blocks do not cover the support")
        for x, u in zip(supp, outs):
            if next(v for v in blocks if x in v) != u:
                raise PartitionFailure(f"{x!r} is not mapped to its own block")
        classes[blocks] = classes.get(blocks, ZERO) + p
    order = sorted(classes, key=lambda bl: [u.order_key() for u in bl])
    result = MgdModel(b.space, order, [classes[k] for k in order], b.px)
    if induce_mgd(result) != induce_bernoulli(b):
        raise InternalInconsistency("extracted MGD model does not reproduce the distribution")
    return result


# -- robustness probe --------------------------------------------------------


@dataclass(frozen=True)
class ProbeVerdict:
    robust: bool
    mode: str
    checked: int
    stage: Optional[str] = None  # "sweep" or "random"
    component: Optional[str] = None
    perturbation: Optional[dict] = None
    induced: Optional[CoarseDistribution] = None

    @property
    def broken(self) -> bool:
        return not self.robust


def _holds(d: CoarseDistribution, mode: str) -> bool:
    if mode == "car":
        return check_d_car(d).holds
    return check_d_ccar(d).holds


def _grid_neighbours(v: Fraction, grid: int):
    scaled = v * grid
    lo = Fraction(math.floor(scaled), grid)
    hi = Fraction(math.ceil(scaled), grid)
    if lo == v:
        lo -= Fraction(1, grid)
    if hi == v:
        hi += Fraction(1, grid)
    return hi, lo


def sweep_perturbations(dist: Mapping, grid: int = PROBE_GRID) -> Iterator[dict]:
    """Move one positive entry to each grid neighbour, rescaling the others."""
    keys = [k for k, v in dist.items() if v > 0]
    if len(keys) < 2:
        return
    for k in keys:
        v = dist[k]
        for nv in _grid_neighbours(v, grid):
            if not 0 < nv < 1:
                continue
            scale = (1 - nv) / (1 - v)
            yield {j: (nv if j == k else dist[j] * scale) for j in keys}


def random_perturbation(dist: Mapping, rng: random.Random, grid: int = PROBE_GRID) -> dict:
    keys = [k for k, v in dist.items() if v > 0]
    weights = [rng.randint(1, grid) for _ in keys]
    total = sum(weights)
    return {k: Fraction(w, total) for k, w in zip(keys, weights)}


def robustness_probe(model, mode: str = "car", trials: int = 100, seed: int = 0,
                     grid: int = PROBE_GRID) -> ProbeVerdict:
    """Search support-preserving reparameterizations that break car or ccar.

    ``model`` needs ``parameters()``, ``with_parameter(name, dist)`` and
    ``induce()``. A deterministic single-entry sweep runs first, then
    ``trials`` seeded random redraws of every parameter at once. A broken
    verdict is conclusive; a robust one only covers the trials run.
    """
    if mode not in ("car", "ccar"):
        raise InputError(f"unknown mode {mode!r}")
    if not _holds(model.induce(), mode):
        raise InputError(f"the unperturbed model is not {mode}")
    params = model.parameters()
    checked = 0

    def attempt(name, dist):
        try:
            candidate = model.with_parameter(name, dist)
            d = candidate.induce()
        except CarError as e:  # a perturbation can only be rejected as a bug
            raise InternalInconsistency(f"support-preserving perturbation rejected: {e}") from e
        return d, _holds(d, mode)

    for name, dist in params:
        for new in sweep_perturbations(dist, grid):
            checked += 1
            d, ok = attempt(name, new)
            if not ok:
                return ProbeVerdict(False, mode, checked, "sweep", name, new, d)

    rng = random.Random(seed)
    for _ in range(trials):
        changes = [(name, random_perturbation(dist, rng, grid)) for name, dist in params]
        checked += 1
        candidate = model
        for name, new in changes:
            candidate = candidate.with_parameter(name, new)
        d = candidate.induce()
        if _holds(d, mode):
            continue
        for name, new in changes:
            d1, ok = attempt(name, new)
            if not ok:
                return ProbeVerdict(False, mode, checked, "random", name, new, d1)
        return ProbeVerdict(False, mode, checked, "random", "joint", dict(changes), d)
    return ProbeVerdict(True, mode, checked)
