"""Procedural coarsening models and their exact induced distributions.

Five model kinds are supported: multiple grouped data (MGD), randomized
monotone coarsening (RMC), uniform noise, propose-and-test (P&T) and general
tabular sequential models. Each has an exact ``induce_*`` function; the
``build_*`` functions go the other way, from a distribution to a model.
"""

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Mapping, Optional, Sequence

from .car import CoarseningVariable, check_d_car, check_d_ccar
from .core import MISSING, CoarseDistribution, StateSpace, StateSubset
from .errors import (
    CoarseningError,
    InputError,
    NonterminatingSpec,
    NormalizationError,
    NotCar,
    NotCcar,
    StateExplosion,
    UnbiasednessViolation,
)

ZERO = Fraction(0)
ONE = Fraction(1)
DEFAULT_MAX_STATES = 10**6


def _marginal(space: StateSpace, px: Mapping) -> dict:
    out = {}
    for x, p in px.items():
        space.index(x)
        p = Fraction(p)
        if p < 0:
            raise InputError(f"negative probability for state {x!r}")
        if p:
            out[x] = p
    total = sum(out.values(), ZERO)
    if total != 1:
        raise NormalizationError("marginal P(X)", 1 - total)
    return {x: out[x] for x in space.states if x in out}


def _distribution(what: str, weights: Mapping) -> dict:
    out = {}
    for k, p in weights.items():
        p = Fraction(p)
        if p < 0:
            raise InputError(f"negative probability in {what}")
        if p:
            out[k] = p
    total = sum(out.values(), ZERO)
    if total != 1:
        raise NormalizationError(what, 1 - total)
    return out


def _subset(space, u) -> StateSubset:
    return u if isinstance(u, StateSubset) else space.subset(u)


def _add(cond, key, p):
    cond[key] = cond.get(key, ZERO) + p


# -- MGD ---------------------------------------------------------------------


class MgdModel:
    """Pick partition i with probability lambda_i, report the block containing x.

    Partitions only need to be exact on the support of ``px``; blocks may
    carry extra zero-probability states.
    """

    def __init__(self, space: StateSpace, partitions: Sequence, lambdas: Sequence, px: Mapping):
        self.space = space
        self.px = _marginal(space, px)
        if len(partitions) != len(lambdas) or not partitions:
            raise CoarseningError("need one positive weight per partition")
        self.partitions = tuple(tuple(_subset(space, u) for u in part) for part in partitions)
        self.lambdas = tuple(Fraction(v) for v in lambdas)
        if any(v <= 0 for v in self.lambdas):
            raise CoarseningError("partition weights must be strictly positive")
        total = sum(self.lambdas, ZERO)
        if total != 1:
            raise NormalizationError("partition weights", 1 - total)
        supp = space.subset(self.px)
        for i, part in enumerate(self.partitions):
            covered = 0
            for u in part:
                if not u:
                    raise CoarseningError(f"partition {i + 1} has an empty block")
                m = (u & supp).mask
                if covered & m:
                    raise CoarseningError(f"blocks of partition {i + 1} overlap on the support")
                covered |= m
            if covered != supp.mask:
                raise CoarseningError(f"partition {i + 1} does not cover the support")

    def block(self, i: int, x) -> StateSubset:
        return next(u for u in self.partitions[i] if x in u)

    def parameters(self) -> list:
        return [("px", dict(self.px)), ("lambda", dict(enumerate(self.lambdas)))]

    def with_parameter(self, name, dist) -> "MgdModel":
        if name == "px":
            return MgdModel(self.space, self.partitions, self.lambdas, dist)
        lambdas = [dist.get(i, ZERO) for i in range(len(self.lambdas))]
        return MgdModel(self.space, self.partitions, lambdas, self.px)

    def induce(self) -> CoarseDistribution:
        return induce_mgd(self)


def induce_mgd(m: MgdModel) -> CoarseDistribution:
    cond = {}
    for x in m.px:
        for i, lam in enumerate(m.lambdas):
            _add(cond, (x, m.block(i, x)), lam)
    return CoarseDistribution(m.space, m.px, cond)


# -- RMC ---------------------------------------------------------------------


@dataclass(frozen=True)
class RmcNode:
    stop: Fraction
    splits: tuple  # of (H, prob)


class RmcModel:
    """Randomized monotone coarsening.

    ``tree`` maps a current set A to ``(stop_prob, [(H, prob), ...])``. A set
    with no entry stops with probability 1, as does every singleton.
    """

    def __init__(self, space: StateSpace, px: Mapping, tree: Mapping):
        self.space = space
        self.px = _marginal(space, px)
        self.tree = {}
        for a, spec in tree.items():
            a = _subset(space, a)
            stop, splits = spec if not isinstance(spec, RmcNode) else (spec.stop, spec.splits)
            splits = tuple((_subset(space, h), Fraction(p)) for h, p in splits)
            self.tree[a] = RmcNode(Fraction(stop), splits)
        self._validate()

    def node(self, a: StateSubset) -> RmcNode:
        return self.tree.get(a, RmcNode(ONE, ()))

    def reachable(self) -> list:
        full = self.space.full()
        seen = {full}
        stack = [full]
        while stack:
            a = stack.pop()
            for h, p in self.node(a).splits:
                if p:
                    for child in (h, a - h):
                        if child not in seen:
                            seen.add(child)
                            stack.append(child)
        return sorted(seen, key=StateSubset.order_key)

    def _validate(self):
        for a in self.reachable():
            node = self.node(a)
            if node.stop < 0 or any(p < 0 for _, p in node.splits):
                raise CoarseningError(f"negative probability at current set {a}")
            total = node.stop + sum((p for _, p in node.splits), ZERO)
            if total == 0:
                raise NonterminatingSpec(f"current set {a} has neither stop mass nor splits")
            if total != 1:
                raise NormalizationError(f"split distribution at {a}", 1 - total)
            for h, p in node.splits:
                if not h or h == a or not h.issubset(a):
                    raise CoarseningError(f"split {h} is not a proper nonempty subset of {a}")

    def walk(self, x):
        """Yield ``(final set, probability)`` over all stopping paths for x."""
        stack = [(self.space.full(), ONE)]
        while stack:
            a, prob = stack.pop()
            node = self.node(a)
            if node.stop:
                yield a, prob * node.stop
            for h, p in node.splits:
                if p:
                    stack.append((h if x in h else a - h, prob * p))

    def with_px(self, px) -> "RmcModel":
        return RmcModel(self.space, px, self.tree)


def induce_rmc(m: RmcModel) -> CoarseDistribution:
    cond = {}
    for x in m.px:
        for a, p in m.walk(x):
            _add(cond, (x, a), p)
    return CoarseDistribution(m.space, m.px, cond)


# -- uniform noise -----------------------------------------------------------


class UniformNoiseModel:
    """Observe {x} plus each H_i whose noise flag N_i fired.

    ``h_weights`` overrides the per-step law of H_i (uniform over W by
    default); only the uniform law is guaranteed to give d-car output.
    """

    def __init__(self, space: StateSpace, px: Mapping, steps: Sequence, h_weights: Optional[Sequence] = None):
        self.space = space
        self.px = _marginal(space, px)
        self.steps = tuple(Fraction(p) for p in steps)
        for p in self.steps:
            if not 0 <= p <= 1:
                raise InputError(f"noise probability {p} outside [0, 1]")
        if h_weights is None:
            uniform = {s: Fraction(1, len(space)) for s in space.states}
            h_weights = [uniform] * len(self.steps)
        if len(h_weights) != len(self.steps):
            raise InputError("need one H distribution per noise step")
        for h in h_weights:
            for s in h:
                space.index(s)
        self.h_weights = tuple(_distribution(f"H_{i + 1}", h) for i, h in enumerate(h_weights))

    def noise_set_law(self) -> dict:
        """Exact law of S = {h_i : n_i = 1} as ``{mask: prob}``."""
        law = {0: ONE}
        for p, h in zip(self.steps, self.h_weights):
            nxt = {}
            for s, q in law.items():
                if p != 1:
                    _add(nxt, s, q * (1 - p))
                if p:
                    for state, w in h.items():
                        _add(nxt, s | 1 << self.space.index(state), q * p * w)
            law = nxt
        return law


def induce_noise(m: UniformNoiseModel) -> CoarseDistribution:
    law = m.noise_set_law()
    cond = {}
    for x in m.px:
        bit = 1 << m.space.index(x)
        for s, q in law.items():
            _add(cond, (x, StateSubset(m.space, s | bit)), q)
    return CoarseDistribution(m.space, m.px, cond)


# -- propose and test --------------------------------------------------------


class PtModel:
    """Draw subsets until one contains x.

    Draws after the optional ``prefix`` all follow ``proposal``; each entry of
    ``prefix`` is the law of one early draw. The unbiasedness condition (equal
    acceptance mass for every support state) is enforced on ``proposal``
    unless ``require_unbiased`` is false.
    """

    def __init__(self, space: StateSpace, px: Mapping, proposal: Mapping,
                 prefix: Sequence = (), require_unbiased: bool = True):
        self.space = space
        self.px = _marginal(space, px)
        self.proposal = self._law("proposal", proposal)
        self.prefix = tuple(self._law(f"draw {i + 1}", q) for i, q in enumerate(prefix))
        if require_unbiased:
            masses = {x: self.acceptance(self.proposal, x) for x in self.px}
            values = set(masses.values())
            if len(values) != 1 or not next(iter(values)):
                detail = ", ".join(f"{x}: {v}" for x, v in masses.items())
                raise UnbiasednessViolation(f"acceptance mass is not a positive constant ({detail})")

    def _law(self, what, q) -> dict:
        q = _distribution(what, {_subset(self.space, u): p for u, p in q.items()})
        if any(not u for u in q):
            raise InputError(f"{what} proposes the empty set")
        return dict(sorted(q.items(), key=lambda kv: kv[0].order_key()))

    @staticmethod
    def acceptance(q: Mapping, x) -> Fraction:
        return sum((p for u, p in q.items() if x in u), ZERO)

    def normalizer(self) -> Fraction:
        """c such that every support state accepts a tail draw with probability 1/c."""
        masses = {self.acceptance(self.proposal, x) for x in self.px}
        if len(masses) != 1:
            raise UnbiasednessViolation("acceptance mass differs between states")
        return 1 / masses.pop()

    def parameters(self) -> list:
        first = self.prefix[0] if self.prefix else self.proposal
        return [("px", dict(self.px)), ("G1", dict(first))]

    def with_parameter(self, name, dist) -> "PtModel":
        if name == "px":
            return PtModel(self.space, dist, self.proposal, self.prefix, require_unbiased=False)
        prefix = (dist,) + self.prefix[1:]
        return PtModel(self.space, self.px, self.proposal, prefix, require_unbiased=False)

    def induce(self) -> CoarseDistribution:
        return induce_pt(self)


def induce_pt(m: PtModel) -> CoarseDistribution:
    cond = {}
    for x in m.px:
        survive = ONE
        for q in m.prefix:
            for u, p in q.items():
                if x in u:
                    _add(cond, (x, u), survive * p)
            survive *= 1 - m.acceptance(q, x)
        if survive:
            accept = m.acceptance(m.proposal, x)
            if not accept:
                raise NonterminatingSpec(f"no proposal ever contains {x!r}")
            for u, p in m.proposal.items():
                if x in u:
                    _add(cond, (x, u), survive * p / accept)
    return CoarseDistribution(m.space, m.px, cond)


# -- tabular sequential models -----------------------------------------------


def _matches(pattern, value) -> bool:
    return pattern == MISSING or pattern == value


@dataclass(frozen=True)
class KernelRow:
    """P(G_i = . | X = x, G_<i = given); ``"*"`` matches anything."""

    x: str
    given: tuple
    dist: dict

    def matches(self, x, hist) -> bool:
        return _matches(self.x, x) and len(self.given) == len(hist) and all(
            _matches(p, h) for p, h in zip(self.given, hist)
        )


@dataclass(frozen=True)
class FRow:
    x: str
    g: tuple
    u: StateSubset

    def matches(self, x, gs) -> bool:
        return _matches(self.x, x) and len(self.g) == len(gs) and all(_matches(p, v) for p, v in zip(self.g, gs))


def table_kernel(rows_per_step: Sequence[Sequence[KernelRow]]) -> Callable:
    """Kernel callable from rows; the first matching row wins."""

    def kernel(i, x, hist):
        for row in rows_per_step[i]:
            if row.matches(x, hist):
                return row.dist
        raise CoarseningError(f"no kernel row for step {i + 1}, x={x!r}, history={list(hist)}")

    return kernel


def table_f(rows: Sequence[FRow]) -> Callable:
    def f(x, gs):
        for row in rows:
            if row.matches(x, gs):
                return row.u
        raise CoarseningError(f"f is undefined at x={x!r}, g={list(gs)}")

    return f


class TabularSequentialModel:
    """X, then G_1, ..., G_m each drawn from a kernel given x and the earlier values.

    ``kernel(i, x, history)`` returns ``{g: p}`` for step i (0-based);
    ``f(x, gs)`` returns the observation. Both may be plain callables or be
    built from rows with :func:`table_kernel` and :func:`table_f`.
    """

    def __init__(self, space: StateSpace, px: Mapping, gammas: Sequence, kernel: Callable, f: Callable,
                 max_states: int = DEFAULT_MAX_STATES):
        self.space = space
        self.px = _marginal(space, px)
        self.gammas = tuple(tuple(str(g) for g in gam) for gam in gammas)
        for gam in self.gammas:
            if not gam or len(set(gam)) != len(gam):
                raise CoarseningError("every G state space needs distinct labels")
        size = 1
        for gam in self.gammas:
            size *= len(gam)
        if size > max_states:
            raise StateExplosion(f"joint G space has {size} states, cap is {max_states}")
        self.max_states = max_states
        self.kernel = kernel
        self.f = f
        self._paths = {x: list(self._enumerate(x)) for x in self.px}

    def row(self, i, x, hist) -> dict:
        raw = self.kernel(i, x, tuple(hist))
        row = {}
        for g, p in raw.items():
            if g not in self.gammas[i]:
                raise CoarseningError(f"kernel of step {i + 1} mentions unknown value {g!r}")
            p = Fraction(p)
            if p < 0:
                raise CoarseningError(f"negative kernel entry at step {i + 1}")
            if p:
                row[g] = p
        total = sum(row.values(), ZERO)
        if total != 1:
            raise NormalizationError(f"kernel of step {i + 1} at x={x!r}, history={list(hist)}", 1 - total)
        return {g: row[g] for g in self.gammas[i] if g in row}

    def _enumerate(self, x):
        stack = [((), ONE)]
        while stack:
            hist, prob = stack.pop()
            i = len(hist)
            if i == len(self.gammas):
                u = self.f(x, hist)
                u = _subset(self.space, u)
                if not u:
                    raise CoarseningError(f"f({x!r}, {list(hist)}) is empty")
                if x not in u:
                    raise CoarseningError(f"{x!r} is not a member of f({x!r}, {list(hist)}) = {u}")
                yield hist, prob, u
                continue
            for g, p in reversed(list(self.row(i, x, hist).items())):
                stack.append((hist + (g,), prob * p))

    def paths(self, x) -> list:
        """Positive-probability ``(history, probability, observation)`` triples in lexicographic order."""
        return self._paths[x]

    def with_px(self, px) -> "TabularSequentialModel":
        return TabularSequentialModel(self.space, px, self.gammas, self.kernel, self.f, self.max_states)

    def to_coarsening_variable(self) -> CoarseningVariable:
        if len(self.gammas) != 1:
            raise CoarseningError("only single-step models are coarsening variables")
        (gam,) = self.gammas
        f = {(x, g): _subset(self.space, self.f(x, (g,))) for x in self.space.states for g in gam}
        kernel = {x: self.row(0, x, ()) for x in self.px}
        return CoarseningVariable.from_kernel(self.space, gam, f, self.px, kernel)


def induce_tabular(m: TabularSequentialModel) -> CoarseDistribution:
    cond = {}
    for x in m.px:
        for _, p, u in m.paths(x):
            _add(cond, (x, u), p)
    return CoarseDistribution(m.space, m.px, cond)


def tabular_from_coarsening_variable(v: CoarseningVariable) -> TabularSequentialModel:
    rows = {x: {g: v.p_g_given_x(g, x) for g in v.gamma if v.joint.get((x, g))} for x in v.px}
    return TabularSequentialModel(
        v.space, v.px, [v.gamma],
        kernel=lambda i, x, hist: rows[x],
        f=lambda x, gs: v.f[(x, gs[0])],
    )


# -- encodings of MGD and RMC as tabular models ------------------------------


def mgd_as_tabular(m: MgdModel) -> TabularSequentialModel:
    labels = [str(i + 1) for i in range(len(m.lambdas))]
    row = dict(zip(labels, m.lambdas))
    space = m.space

    def f(x, gs):
        u = next((u for u in m.partitions[int(gs[0]) - 1] if x in u), None)
        return u if u is not None else space.singleton(x)

    return TabularSequentialModel(space, m.px, [labels], kernel=lambda i, x, hist: row, f=f)


RMC_STOP = "stop"


def rmc_as_tabular(m: RmcModel) -> TabularSequentialModel:
    """n - 1 steps; each picks "stop" or a split label given the current set."""
    labels = {}
    for a in m.reachable():
        for h, _ in m.node(a).splits:
            labels.setdefault(str(h), h)
    gamma = (RMC_STOP,) + tuple(sorted(labels, key=lambda s: labels[s].order_key()))
    steps = max(len(m.space) - 1, 0)

    def current(x, hist):
        a = m.space.full()
        for g in hist:
            if g == RMC_STOP:
                return a, True
            h = labels[g]
            a = h if x in h else a - h
        return a, False

    def kernel(i, x, hist):
        a, stopped = current(x, hist)
        if stopped:
            return {RMC_STOP: ONE}
        node = m.node(a)
        row = {}
        if node.stop:
            row[RMC_STOP] = node.stop
        for h, p in node.splits:
            if p:
                row[str(h)] = p
        return row

    def f(x, gs):
        return current(x, gs)[0]

    return TabularSequentialModel(m.space, m.px, [gamma] * steps, kernel, f)


# -- builders ----------------------------------------------------------------


def build_direct(p: CoarseDistribution) -> TabularSequentialModel:
    """One G over the observed subsets, kernel equal to P(Y | X)."""
    verdict = check_d_car(p)
    if not verdict.holds:
        u, x, x2 = verdict.violation
        raise NotCar(f"not d-car: P(Y={u} | X={x}) != P(Y={u} | X={x2})")
    obs = p.observations()
    by_label = {str(u): u for u in obs}
    rows = {x: {str(u): c for u, c in p.row(x).items()} for x in p.support()}
    space = p.space

    def f(x, gs):
        u = by_label[gs[0]]
        return u if x in u else space.full() - u

    return TabularSequentialModel(space, p.px, [tuple(by_label)], kernel=lambda i, x, hist: rows[x], f=f)


def build_pt(p: CoarseDistribution) -> PtModel:
    verdict = check_d_car(p)
    if not verdict.holds:
        raise NotCar("not d-car")
    nu = verdict.witness
    c = sum(nu.values(), ZERO)
    return PtModel(p.space, p.px, {u: v / c for u, v in nu.items()})


def build_mgd(p: CoarseDistribution, max_covers: Optional[int] = None) -> MgdModel:
    verdict = check_d_ccar(p) if max_covers is None else check_d_ccar(p, max_covers=max_covers)
    if not verdict.holds:
        raise NotCcar(verdict.reason or "not d-ccar")
    parts = [blocks for blocks, _ in verdict.witness]
    lams = [lam for _, lam in verdict.witness]
    return MgdModel(p.space, parts, lams, p.px)


def induce(model) -> CoarseDistribution:
    """Exact induced distribution of any supported model kind."""
    if isinstance(model, MgdModel):
        return induce_mgd(model)
    if isinstance(model, RmcModel):
        return induce_rmc(model)
    if isinstance(model, UniformNoiseModel):
        return induce_noise(model)
    if isinstance(model, PtModel):
        return induce_pt(model)
    if isinstance(model, TabularSequentialModel):
        return induce_tabular(model)
    if hasattr(model, "induce"):
        return model.induce()
    raise InputError(f"cannot induce a distribution from {type(model).__name__}")
