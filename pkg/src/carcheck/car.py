"""Deciding car / ccar for coarse-data distributions and coarsening variables."""

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Optional

from .core import (
    CoarseDistribution,
    ProductSpace,
    StateSpace,
    StateSubset,
    marginal_y,
    missingness_mapping,
    naive_condition,
    update_posterior,
)
from .errors import (
    CoarseningError,
    CoverExplosion,
    InternalInconsistency,
    NormalizationError,
    ShapeError,
    ZeroMarginal,
)
from .feasibility import FeasibilityOutcome, solve_exact_feasibility

ZERO = Fraction(0)
DEFAULT_MAX_COVERS = 10**6


# -- coarsening variables ----------------------------------------------------


class CoarseningVariable:
    """A pair (G, f) together with the joint law P(X, G).

    ``f`` maps every ``(x, g)`` to a nonempty :class:`StateSubset` and ``joint``
    maps ``(x, g)`` to P(X = x, G = g). Construction validates the membership
    and Cartesian conditions for positive-probability states.
    """

    def __init__(self, space: StateSpace, gamma, f: Mapping, joint: Mapping):
        self.space = space
        self.gamma = tuple(str(g) for g in gamma)
        if not self.gamma or len(set(self.gamma)) != len(self.gamma):
            raise CoarseningError("gamma must be a nonempty list of distinct labels")
        self.f = {}
        for x in space.states:
            for g in self.gamma:
                try:
                    u = f[(x, g)]
                except KeyError:
                    raise CoarseningError(f"f is undefined at ({x!r}, {g!r})") from None
                if not isinstance(u, StateSubset):
                    u = space.subset(u)
                if not u:
                    raise CoarseningError(f"f({x!r}, {g!r}) is empty")
                self.f[(x, g)] = u
        self.joint = {}
        for (x, g), p in joint.items():
            space.index(x)
            if g not in self.gamma:
                raise CoarseningError(f"unknown G value {g!r}")
            p = Fraction(p)
            if p < 0:
                raise CoarseningError(f"negative joint probability at ({x!r}, {g!r})")
            if p:
                self.joint[(x, g)] = p
        total = sum(self.joint.values(), ZERO)
        if total != 1:
            raise NormalizationError("joint P(X, G)", 1 - total)
        self.px = {}
        for (x, g), p in self.joint.items():
            self.px[x] = self.px.get(x, ZERO) + p
        self.px = {x: self.px[x] for x in space.states if x in self.px}
        self._validate()

    @classmethod
    def from_kernel(cls, space, gamma, f, px, kernel):
        """Build from P(X) and P(G = g | X = x) given as ``{x: {g: p}}``."""
        joint = {}
        for x, p in px.items():
            p = Fraction(p)
            if not p:
                continue
            row = kernel.get(x, {})
            s = sum((Fraction(v) for v in row.values()), ZERO)
            if s != 1:
                raise NormalizationError("kernel P(G | X)", 1 - s, state=x)
            for g, q in row.items():
                joint[(x, g)] = p * Fraction(q)
        return cls(space, gamma, f, joint)

    def _validate(self):
        supp = [x for x in self.px]
        for x in supp:
            for g in self.gamma:
                if x not in self.f[(x, g)]:
                    raise CoarseningError(f"{x!r} is not a member of f({x!r}, {g!r}) = {self.f[(x, g)]}")
        for g in self.gamma:
            for x in supp:
                u = self.f[(x, g)]
                for x2 in supp:
                    if x2 in u and self.f[(x2, g)] != u:
                        raise CoarseningError(
                            f"Cartesian condition fails: f({x!r},{g!r}) = {u} contains {x2!r} "
                            f"but f({x2!r},{g!r}) = {self.f[(x2, g)]}"
                        )

    def p_g_given_x(self, g, x) -> Fraction:
        px = self.px.get(x, ZERO)
        if not px:
            raise ZeroMarginal(f"P(X = {x!r}) = 0")
        return self.joint.get((x, g), ZERO) / px

    def support(self) -> tuple:
        return tuple(self.px)


@dataclass(frozen=True)
class MissingnessScaffold:
    """Gamma = {0,1}^k and the deterministic f of a missingness indicator."""

    product: ProductSpace
    gamma: tuple
    f: dict

    @property
    def space(self) -> StateSpace:
        return self.product.space

    def with_kernel(self, px, kernel) -> CoarseningVariable:
        return CoarseningVariable.from_kernel(self.space, self.gamma, self.f, px, kernel)


def missingness_coarsening_variable(shape) -> MissingnessScaffold:
    product = shape if isinstance(shape, ProductSpace) else ProductSpace(tuple(shape))
    gamma, f = missingness_mapping(product)
    return MissingnessScaffold(product, gamma, f)


def induced_distribution(v: CoarseningVariable) -> CoarseDistribution:
    cond = {}
    for (x, g), p in v.joint.items():
        key = (x, v.f[(x, g)])
        cond[key] = cond.get(key, ZERO) + p / v.px[x]
    return CoarseDistribution(v.space, v.px, cond)


# -- verdicts ----------------------------------------------------------------


@dataclass(frozen=True)
class CarVerdict:
    holds: bool
    witness: Optional[dict] = None
    violation: Optional[tuple] = None


@dataclass(frozen=True)
class GCarVerdict:
    """Verdict for G-car (keys ``(U, g)``) or G-ccar (keys ``g``)."""

    holds: bool
    witness: Optional[dict] = None
    violation: Optional[tuple] = None


@dataclass(frozen=True)
class CcarVerdict:
    holds: bool
    car: CarVerdict
    witness: Optional[list] = None
    reason: Optional[str] = None
    cover_count: Optional[int] = None
    certificate: Optional[tuple] = None
    covers: Optional[list] = field(default=None, repr=False)


def check_d_car(p: CoarseDistribution) -> CarVerdict:
    supp = p.support()
    witness = {}
    for u in p.observations():
        members = [x for x in supp if x in u]
        base = p.p_cond(members[0], u)
        for x2 in members[1:]:
            if p.p_cond(x2, u) != base:
                return CarVerdict(False, violation=(u, members[0], x2))
        witness[u] = base
    for x in supp:
        if sum((nu for u, nu in witness.items() if x in u), ZERO) != 1:
            raise InternalInconsistency(f"car witness does not normalise at {x!r}")
    return CarVerdict(True, witness=witness)


def exact_covers(universe: int, blocks, cap: int = DEFAULT_MAX_COVERS) -> list:
    """All exact covers of the bit set ``universe`` by the given block masks.

    Returns sorted tuples of block indices. Branches on the uncovered element
    with the fewest admissible blocks (lowest bit on ties).
    """
    by_elem = {}
    for i, m in enumerate(blocks):
        if m == 0 or m & ~universe:
            raise ValueError("blocks must be nonempty subsets of the universe")
        b = m
        while b:
            low = b & -b
            by_elem.setdefault(low, []).append(i)
            b ^= low
    out = []

    def search(covered, chosen):
        if covered == universe:
            out.append(tuple(sorted(chosen)))
            if len(out) > cap:
                raise CoverExplosion(f"more than {cap} exact covers")
            return
        best = None
        rest = universe & ~covered
        while rest:
            low = rest & -rest
            rest ^= low
            opts = [i for i in by_elem.get(low, ()) if blocks[i] & covered == 0]
            if best is None or len(opts) < len(best):
                best = opts
                if not opts:
                    return
        for i in best:
            chosen.append(i)
            search(covered | blocks[i], chosen)
            chosen.pop()

    search(0, [])
    out.sort()
    return out


def check_d_ccar(p: CoarseDistribution, max_covers: int = DEFAULT_MAX_COVERS) -> CcarVerdict:
    car = check_d_car(p)
    if not car.holds:
        return CcarVerdict(False, car=car, reason="not d-car")
    supp = p.support_subset()
    obs = list(car.witness)
    extents = [(u & supp).mask for u in obs]
    covers = exact_covers(supp.mask, extents, cap=max_covers)
    # rows: one per observation plus sum(lambda) = 1; last column holds -rhs
    rows = []
    for j, u in enumerate(obs):
        rows.append([Fraction(int(j in c)) for c in covers] + [-car.witness[u]])
    rows.append([Fraction(1)] * len(covers) + [Fraction(-1)])
    outcome: FeasibilityOutcome = solve_exact_feasibility(rows, strict=False)
    if not outcome.feasible:
        return CcarVerdict(
            False,
            car=car,
            reason="no partition mixture",
            cover_count=len(covers),
            certificate=outcome.certificate,
            covers=covers,
        )
    witness = []
    for c, lam in zip(covers, outcome.witness):
        if lam > 0:
            witness.append((tuple(obs[j] for j in c), lam))
    _verify_partition_mixture(p, witness)
    return CcarVerdict(True, car=car, witness=witness, cover_count=len(covers), covers=covers)


def _verify_partition_mixture(p: CoarseDistribution, witness) -> None:
    supp = p.support_subset()
    if sum((lam for _, lam in witness), ZERO) != 1:
        raise InternalInconsistency("partition weights do not sum to 1")
    for blocks, lam in witness:
        if lam <= 0:
            raise InternalInconsistency("non-positive partition weight")
        cover = 0
        for u in blocks:
            m = (u & supp).mask
            if cover & m:
                raise InternalInconsistency("overlapping blocks in witness partition")
            cover |= m
        if cover != supp.mask:
            raise InternalInconsistency("witness partition does not cover the support")
    for x in p.support():
        for u in p.observations():
            if x not in u:
                continue
            rhs = sum((lam for blocks, lam in witness if u in blocks), ZERO)
            if rhs != p.p_cond(x, u):
                raise InternalInconsistency(f"partition mixture fails at ({x!r}, {u})")


def check_g_car(v: CoarseningVariable) -> GCarVerdict:
    supp = v.support()
    images = sorted({v.f[(x, g)] for x in supp for g in v.gamma}, key=StateSubset.order_key)
    witness = {}
    for u in images:
        for g in v.gamma:
            members = [x for x in supp if v.f[(x, g)] == u]
            if not members:
                continue
            base = v.p_g_given_x(g, members[0])
            for x2 in members[1:]:
                if v.p_g_given_x(g, x2) != base:
                    return GCarVerdict(False, violation=(u, g, members[0], x2))
            witness[(u, g)] = base
    return GCarVerdict(True, witness=witness)


def check_g_ccar(v: CoarseningVariable) -> GCarVerdict:
    supp = v.support()
    witness = {}
    for g in v.gamma:
        base = v.p_g_given_x(g, supp[0])
        for x2 in supp[1:]:
            if v.p_g_given_x(g, x2) != base:
                return GCarVerdict(False, violation=(g, supp[0], x2))
        witness[g] = base
    return GCarVerdict(True, witness=witness)


def check_invertible(v: CoarseningVariable):
    """Return ``(True, h)`` with h: observation -> G value, or ``(False, None)``."""
    supp = v.support()
    producers = {}
    for x in supp:
        for g in v.gamma:
            producers.setdefault(v.f[(x, g)], set()).add(g)
    h = {}
    for u in sorted(producers, key=StateSubset.order_key):
        gs = producers[u]
        if len(gs) != 1:
            return False, None
        (g,) = gs
        if any(v.f[(x, g)] != u for x in supp if x in u):
            return False, None
        h[u] = g
    return True, h


def _require_bit_gamma(v: CoarseningVariable):
    k = len(v.gamma[0])
    expected = {format(i, f"0{k}b") for i in range(2**k)}
    if set(v.gamma) != expected:
        raise ShapeError("G must range over the bit vectors {0,1}^k")


def check_m_mar(v: CoarseningVariable) -> GCarVerdict:
    _require_bit_gamma(v)
    return check_g_car(v)


def check_m_mcar(v: CoarseningVariable) -> GCarVerdict:
    _require_bit_gamma(v)
    return check_g_ccar(v)


# -- ignorability ------------------------------------------------------------


@dataclass(frozen=True)
class IgnorabilityReport:
    d_car: bool
    posterior_equals_naive: bool
    ratio_identity: bool
    max_gap: Fraction
    gap_at: Optional[StateSubset]
    details: list

    @property
    def ignorable(self) -> bool:
        return self.d_car


def total_variation(a: Mapping, b: Mapping) -> Fraction:
    keys = set(a) | set(b)
    return sum((abs(a.get(k, ZERO) - b.get(k, ZERO)) for k in keys), ZERO) / 2


def ignorability_report(p: CoarseDistribution) -> IgnorabilityReport:
    car = check_d_car(p).holds
    posterior_ok = True
    ratio_ok = True
    max_gap = ZERO
    gap_at = None
    details = []
    for u in p.observations():
        post = update_posterior(p, u)
        naive = naive_condition(p, u)
        gap = total_variation(post, naive)
        if post != naive:
            posterior_ok = False
        ratio = marginal_y(p, u) / p.prob_in(u)
        bad = [x for x in p.support() if x in u and p.p_cond(x, u) != ratio]
        if bad:
            ratio_ok = False
        if gap > max_gap:
            max_gap, gap_at = gap, u
        details.append({"observation": u, "posterior": post, "naive": naive, "gap": gap})
    if not (car == posterior_ok == ratio_ok):
        raise InternalInconsistency(
            f"ignorability conditions disagree: car={car}, posterior={posterior_ok}, ratio={ratio_ok}"
        )
    return IgnorabilityReport(car, posterior_ok, ratio_ok, max_gap, gap_at, details)
