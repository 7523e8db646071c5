"""State spaces, subsets and exact coarse-data distributions.

Everything here works with :class:`fractions.Fraction`; no floating point
ever enters a decision.
"""

import itertools
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Iterator, Mapping, Sequence

from .errors import (
    EmptyObservation,
    InputError,
    MembershipError,
    NormalizationError,
    SpaceMismatch,
    ZeroEvent,
    ZeroObservation,
)

MAX_STATES = 63
MISSING = "*"

_RATIONAL_RE = re.compile(r"^\s*(-?\d+)(?:\s*/\s*(\d+))?\s*$")


def parse_rational(text) -> Fraction:
    """Parse ``"p/q"`` or ``"p"`` (decimal integers, q > 0) exactly.

    Integers and Fractions pass through unchanged. Decimal notation such as
    ``"0.5"`` is rejected so that no value is ever silently rounded.
    """
    if isinstance(text, Fraction):
        return text
    if isinstance(text, int) and not isinstance(text, bool):
        return Fraction(text)
    if not isinstance(text, str):
        raise InputError(f"not a rational literal: {text!r}")
    m = _RATIONAL_RE.match(text)
    if m is None:
        raise InputError(f"not a rational literal: {text!r}")
    num = int(m.group(1))
    den = int(m.group(2)) if m.group(2) is not None else 1
    if den == 0:
        raise InputError(f"zero denominator in {text!r}")
    return Fraction(num, den)


def format_rational(value) -> str:
    value = Fraction(value)
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


@dataclass(frozen=True)
class StateSpace:
    """An ordered, finite set of distinct state labels."""

    states: tuple
    _index: dict = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        states = tuple(str(s) for s in self.states)
        if not states:
            raise InputError("a state space needs at least one state")
        if len(set(states)) != len(states):
            raise InputError("state labels must be pairwise distinct")
        if len(states) > MAX_STATES:
            raise InputError(f"at most {MAX_STATES} states are supported, got {len(states)}")
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "_index", {s: i for i, s in enumerate(states)})

    def __len__(self):
        return len(self.states)

    def __iter__(self):
        return iter(self.states)

    def __contains__(self, label):
        return label in self._index

    def index(self, label) -> int:
        try:
            return self._index[label]
        except KeyError:
            raise InputError(f"unknown state {label!r}") from None

    def subset(self, labels: Iterable[str]) -> "StateSubset":
        mask = 0
        for s in labels:
            mask |= 1 << self.index(s)
        return StateSubset(self, mask)

    def singleton(self, label) -> "StateSubset":
        return StateSubset(self, 1 << self.index(label))

    def full(self) -> "StateSubset":
        return StateSubset(self, (1 << len(self.states)) - 1)

    def empty(self) -> "StateSubset":
        return StateSubset(self, 0)

    def nonempty_subsets(self) -> list:
        """All nonempty subsets in canonical order."""
        n = len(self.states)
        return sorted((StateSubset(self, m) for m in range(1, 1 << n)), key=StateSubset.order_key)


@dataclass(frozen=True)
class StateSubset:
    """A subset of a :class:`StateSpace`, stored as a bit mask (bit i = state i)."""

    space: StateSpace
    mask: int

    def __post_init__(self):
        if self.mask < 0 or self.mask >> len(self.space.states):
            raise InputError(f"mask {self.mask:#x} out of range for {len(self.space)} states")

    def _check(self, other):
        if other.space != self.space:
            raise SpaceMismatch("subsets belong to different state spaces")

    def __contains__(self, label) -> bool:
        return bool(self.mask >> self.space.index(label) & 1)

    def __iter__(self) -> Iterator[str]:
        return (s for i, s in enumerate(self.space.states) if self.mask >> i & 1)

    def __len__(self):
        return bin(self.mask).count("1")

    def __bool__(self):
        return self.mask != 0

    def __and__(self, other):
        self._check(other)
        return StateSubset(self.space, self.mask & other.mask)

    def __or__(self, other):
        self._check(other)
        return StateSubset(self.space, self.mask | other.mask)

    def __sub__(self, other):
        self._check(other)
        return StateSubset(self.space, self.mask & ~other.mask)

    def complement(self):
        return self.space.full() - self

    def issubset(self, other) -> bool:
        self._check(other)
        return self.mask & ~other.mask == 0

    def issuperset(self, other) -> bool:
        return other.issubset(self)

    def isdisjoint(self, other) -> bool:
        self._check(other)
        return self.mask & other.mask == 0

    @property
    def members(self) -> tuple:
        return tuple(self)

    def order_key(self):
        # (size, state-order bit string read with the first state most significant)
        n = len(self.space.states)
        rev = 0
        for i in range(n):
            if self.mask >> i & 1:
                rev |= 1 << (n - 1 - i)
        return (len(self), rev)

    def __lt__(self, other):
        return self.order_key() < other.order_key()

    def __str__(self):
        return "{" + ",".join(self) + "}"

    def __repr__(self):
        return f"StateSubset({str(self)})"


def _as_subset(space, value) -> StateSubset:
    if isinstance(value, StateSubset):
        if value.space != space:
            raise SpaceMismatch(f"subset {value} belongs to a different state space")
        return value
    if isinstance(value, str):
        return space.singleton(value)
    return space.subset(value)


class CoarseDistribution:
    """Exact joint law of a true state X and an observation Y on Omega(W).

    ``px`` maps states to P(X = x); ``cond`` maps ``(x, U)`` to P(Y = U | X = x).
    Missing entries are zero and zero entries are dropped. Instances are
    treated as immutable.
    """

    __slots__ = ("space", "_px", "_cond")

    def __init__(self, space: StateSpace, px: Mapping, cond: Mapping):
        self.space = space
        pxd = {}
        for x, p in px.items():
            space.index(x)
            p = parse_rational(p)
            if p:
                pxd[x] = p
        condd = {}
        for (x, u), p in cond.items():
            space.index(x)
            u = _as_subset(space, u)
            p = parse_rational(p)
            if p:
                condd[(x, u)] = condd.get((x, u), Fraction(0)) + p
        self._px = {x: pxd[x] for x in space.states if x in pxd}
        self._cond = dict(sorted(condd.items(), key=lambda kv: (space.index(kv[0][0]), kv[0][1].order_key())))

    @property
    def px(self) -> dict:
        return dict(self._px)

    @property
    def cond(self) -> dict:
        return dict(self._cond)

    def p_x(self, x) -> Fraction:
        return self._px.get(x, Fraction(0))

    def p_cond(self, x, u) -> Fraction:
        return self._cond.get((x, _as_subset(self.space, u)), Fraction(0))

    def support(self) -> tuple:
        """States with positive probability, in state order."""
        return tuple(self._px)

    def support_subset(self) -> StateSubset:
        return self.space.subset(self._px)

    def observations(self) -> list:
        """Distinct U with P(Y = U) > 0 in canonical order."""
        seen = {u for (x, u) in self._cond if x in self._px}
        return sorted(seen, key=StateSubset.order_key)

    def row(self, x) -> dict:
        """P(Y = . | X = x) as ``{U: p}``."""
        return {u: p for (y, u), p in self._cond.items() if y == x}

    def prob_in(self, u) -> Fraction:
        """P(X in U)."""
        u = _as_subset(self.space, u)
        return sum((p for x, p in self._px.items() if x in u), Fraction(0))

    def __eq__(self, other):
        if not isinstance(other, CoarseDistribution):
            return NotImplemented
        return self.space == other.space and self._px == other._px and self._cond == other._cond

    def __repr__(self):
        return f"CoarseDistribution(states={list(self.space.states)}, entries={len(self._cond)})"

    def restricted(self) -> "CoarseDistribution":
        """Copy keeping only conditionals of positive-probability states."""
        cond = {k: v for k, v in self._cond.items() if k[0] in self._px}
        return CoarseDistribution(self.space, self._px, cond)

    def joint(self) -> dict:
        """P(X = x, Y = U) for positive-probability x."""
        return {(x, u): self._px[x] * p for (x, u), p in self._cond.items() if x in self._px}


def same_on_support(p: CoarseDistribution, q: CoarseDistribution) -> bool:
    """Exact equality of marginals and of conditionals on supp(X)."""
    if p.space != q.space or p.px != q.px:
        return False
    return p.restricted().cond == q.restricted().cond


def validate_distribution(p: CoarseDistribution) -> None:
    total = sum(p.px.values(), Fraction(0))
    if total != 1:
        raise NormalizationError("marginal P(X)", 1 - total)
    rows = {}
    for (x, u), c in p.cond.items():
        if not u:
            raise EmptyObservation(f"empty observation recorded for state {x!r}")
        if c < 0:
            raise InputError(f"negative conditional for ({x!r}, {u})")
        if x not in u:
            raise MembershipError(x, u)
        rows[x] = rows.get(x, Fraction(0)) + c
    for x, q in p.px.items():
        if q < 0:
            raise InputError(f"negative probability for state {x!r}")
        s = rows.get(x, Fraction(0))
        if s != 1:
            raise NormalizationError("conditional P(Y | X)", 1 - s, state=x)


def marginal_y(p: CoarseDistribution, u) -> Fraction:
    """P(Y = U)."""
    u = _as_subset(p.space, u)
    return sum((px * p.p_cond(x, u) for x, px in p.px.items()), Fraction(0))


def update_posterior(p: CoarseDistribution, u) -> dict:
    """P(X = x | Y = U) for x in U."""
    u = _as_subset(p.space, u)
    py = marginal_y(p, u)
    if py == 0:
        raise ZeroObservation(f"P(Y = {u}) = 0")
    return {x: p.p_x(x) * p.p_cond(x, u) / py for x in u}


def naive_condition(p: CoarseDistribution, u) -> dict:
    """P(X = x | X in U) for x in U."""
    u = _as_subset(p.space, u)
    mass = p.prob_in(u)
    if mass == 0:
        raise ZeroEvent(f"P(X in {u}) = 0")
    return {x: p.p_x(x) / mass for x in u}


# -- missing data view -------------------------------------------------------


def _tuple_label(values) -> str:
    return "(" + ",".join(values) + ")"


@dataclass(frozen=True)
class ProductSpace:
    """The state space V_1 x ... x V_k whose states are labelled ``(v1,...,vk)``."""

    shape: tuple
    space: StateSpace = field(init=False)
    _tuples: dict = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        shape = tuple(tuple(str(v) for v in vs) for vs in self.shape)
        if not shape or any(not vs for vs in shape):
            raise InputError("every component needs at least one value")
        for vs in shape:
            if MISSING in vs or len(set(vs)) != len(vs):
                raise InputError(f"invalid component values {vs!r}")
        tuples = list(itertools.product(*shape))
        object.__setattr__(self, "shape", shape)
        object.__setattr__(self, "space", StateSpace(tuple(_tuple_label(t) for t in tuples)))
        object.__setattr__(self, "_tuples", {_tuple_label(t): t for t in tuples})

    def values(self, label) -> tuple:
        return self._tuples[label]

    def label(self, values) -> str:
        lab = _tuple_label(tuple(values))
        self.space.index(lab)
        return lab


@dataclass(frozen=True)
class MissingnessRecord:
    """An incomplete observation (y_1, ..., y_k); ``"*"`` marks a missing value."""

    product: ProductSpace
    values: tuple

    def __post_init__(self):
        values = tuple(str(v) for v in self.values)
        if len(values) != len(self.product.shape):
            raise InputError("record length does not match the product shape")
        for v, vs in zip(values, self.product.shape):
            if v != MISSING and v not in vs:
                raise InputError(f"value {v!r} not in {vs!r}")
        object.__setattr__(self, "values", values)


def observation_set(y: MissingnessRecord) -> StateSubset:
    """All complete tuples consistent with the record."""
    space = y.product.space
    mask = 0
    for label in space.states:
        t = y.product.values(label)
        if all(v == MISSING or v == xi for v, xi in zip(y.values, t)):
            mask |= 1 << space.index(label)
    return StateSubset(space, mask)


def missingness_indicator(y: MissingnessRecord) -> tuple:
    return tuple(int(v == MISSING) for v in y.values)


def apply_missingness(product: ProductSpace, x, m: Sequence[int]) -> MissingnessRecord:
    """y = f(x, m): keep x_i where m_i = 0, mask it where m_i = 1."""
    t = product.values(x)
    if len(m) != len(t):
        raise InputError("indicator length does not match the product shape")
    return MissingnessRecord(product, tuple(MISSING if mi else xi for xi, mi in zip(t, m)))


def bit_label(m: Sequence[int]) -> str:
    return "".join(str(int(b)) for b in m)


def missingness_mapping(product: ProductSpace) -> tuple:
    """Gamma = {0,1}^k and the deterministic f(x, m) = U(y(x, m)).

    Returns ``(gamma, f)`` with gamma labels such as ``"01"`` and ``f`` a dict
    keyed by ``(x, label)``.
    """
    k = len(product.shape)
    gamma = tuple(bit_label(m) for m in itertools.product((0, 1), repeat=k))
    f = {}
    for x in product.space.states:
        for lab in gamma:
            m = tuple(int(c) for c in lab)
            f[(x, lab)] = observation_set(apply_missingness(product, x, m))
    return gamma, f
