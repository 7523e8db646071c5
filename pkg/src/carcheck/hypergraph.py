"""Support hypergraphs: nodes are possible observations, edges possible states."""

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Optional, Sequence

from .core import CoarseDistribution, StateSpace, StateSubset, marginal_y
from .errors import (
    EmptyEdge,
    EmptySupport,
    InputError,
    InternalInconsistency,
    LimitExceeded,
    UncoveredNode,
)
from .feasibility import solve_exact_feasibility

MAX_ENUM_NODES = 4
MAX_ENUM_EDGES = 6


class SupportHypergraph:
    """Nodes carry observation extents over ``space``; edges are states of ``space``.

    The incidence matrix has one row per edge and one column per node, with a
    one wherever the edge state lies in the node's extent.
    """

    def __init__(self, space: StateSpace, nodes: Sequence, edges: Sequence[str]):
        self.space = space
        labels = []
        extents = []
        for label, extent in nodes:
            if not isinstance(extent, StateSubset):
                extent = space.subset(extent)
            labels.append(str(label))
            extents.append(extent)
        if len(set(labels)) != len(labels):
            raise InputError("node labels must be distinct")
        if len(set(extents)) != len(extents):
            raise InputError("two nodes share the same extent; distinct observations need distinct sets")
        for e in edges:
            space.index(e)
        if len(set(edges)) != len(edges):
            raise InputError("edge labels must be distinct")
        self.node_labels = tuple(labels)
        self.extents = tuple(extents)
        self.edges = tuple(edges)

    @property
    def incidence(self) -> list:
        return [[int(x in u) for u in self.extents] for x in self.edges]

    def node_set(self, edge) -> frozenset:
        """Indices of the nodes contained in ``edge``."""
        return frozenset(j for j, u in enumerate(self.extents) if edge in u)

    def edge_masks(self) -> list:
        """Each edge as a bit mask over node indices."""
        return [sum(1 << j for j, u in enumerate(self.extents) if x in u) for x in self.edges]

    def __repr__(self):
        return f"SupportHypergraph(nodes={list(self.node_labels)}, edges={list(self.edges)})"

    @classmethod
    def from_incidence(cls, matrix, edge_labels=None, node_labels=None) -> "SupportHypergraph":
        """Build from a 0/1 matrix (rows = edges, columns = nodes).

        Nodes whose column is empty or duplicates an earlier column get an
        extra zero-probability state so that every node stays a distinct,
        nonempty observation.
        """
        k = len(matrix)
        l = len(matrix[0]) if k else 0
        edge_labels = list(edge_labels or [f"x{i + 1}" for i in range(k)])
        node_labels = list(node_labels or [f"U{j + 1}" for j in range(l)])
        columns = [tuple(int(matrix[i][j]) for i in range(k)) for j in range(l)]
        phantoms = {}
        seen = set()
        for j, col in enumerate(columns):
            if not any(col) or col in seen:
                phantoms[j] = f"~{node_labels[j]}"
            seen.add(col)
        space = StateSpace(tuple(edge_labels) + tuple(phantoms.values()))
        nodes = []
        for j, col in enumerate(columns):
            members = [edge_labels[i] for i in range(k) if col[i]]
            if j in phantoms:
                members.append(phantoms[j])
            nodes.append((node_labels[j], space.subset(members)))
        return cls(space, nodes, edge_labels)


def from_distribution(p: CoarseDistribution) -> SupportHypergraph:
    edges = p.support()
    if not edges:
        raise EmptySupport("no state has positive probability")
    nodes = [(str(u), u) for u in p.observations() if marginal_y(p, u) > 0]
    return SupportHypergraph(p.space, nodes, edges)


def validate(h: SupportHypergraph) -> None:
    edge_set = set(h.edges)
    for label, u in zip(h.node_labels, h.extents):
        if not any(x in edge_set for x in u):
            raise UncoveredNode(label)
    for x in h.edges:
        if not any(x in u for u in h.extents):
            raise EmptyEdge(x)


def realize(h: SupportHypergraph) -> CoarseDistribution:
    """Uniform P(X) over edges, and for each edge uniform P(Y | X) over its nodes."""
    validate(h)
    px = {x: Fraction(1, len(h.edges)) for x in h.edges}
    cond = {}
    for x in h.edges:
        nodes = [u for u in h.extents if x in u]
        for u in nodes:
            cond[(x, u)] = Fraction(1, len(nodes))
    return CoarseDistribution(h.space, px, cond)


def realize_with(h: SupportHypergraph, nu: dict, px: Optional[dict] = None) -> CoarseDistribution:
    """The d-car distribution with P(Y = U | X = x) = nu(U) for the given node weights."""
    validate(h)
    if px is None:
        px = {x: Fraction(1, len(h.edges)) for x in h.edges}
    cond = {}
    for x in h.edges:
        for label, u in zip(h.node_labels, h.extents):
            if x in u:
                cond[(x, u)] = nu[label]
    return CoarseDistribution(h.space, px, cond)


def nested_edges_screen(h: SupportHypergraph) -> Optional[tuple]:
    """First pair (x, x') whose node sets are properly nested, or None."""
    validate(h)
    sets = [h.node_set(x) for x in h.edges]
    for i, a in enumerate(sets):
        for j, b in enumerate(sets):
            if i != j and a < b:
                return (h.edges[i], h.edges[j])
    return None


@dataclass(frozen=True)
class CompatibilityVerdict:
    compatible: bool
    nu: Optional[dict] = None
    certificate: Optional[tuple] = None
    sequences: Optional[tuple] = None
    violated: Optional[str] = None
    nested_pair: Optional[tuple] = None


def indicator(h: SupportHypergraph, seq) -> tuple:
    """Number of edges in ``seq`` containing each node."""
    counts = [0] * len(h.extents)
    for x in seq:
        for j, u in enumerate(h.extents):
            if x in u:
                counts[j] += 1
    return tuple(counts)


def sequence_violation(h: SupportHypergraph, xs, xs2) -> Optional[str]:
    """Name of the length condition the pair of edge sequences violates, if any."""
    a, b = indicator(h, xs), indicator(h, xs2)
    if a == b and len(xs) != len(xs2):
        return "equal-indicator"
    if all(p <= q for p, q in zip(a, b)) and a != b and len(xs) >= len(xs2):
        return "dominated-indicator"
    return None


def check_car_compatible(h: SupportHypergraph) -> CompatibilityVerdict:
    validate(h)
    outcome = solve_exact_feasibility(h.incidence, strict=True)
    nested = nested_edges_screen(h)
    if outcome.feasible:
        nu = dict(zip(h.node_labels, outcome.witness))
        return CompatibilityVerdict(True, nu=nu, nested_pair=nested)
    z = outcome.certificate
    xs = tuple(x for x, c in zip(h.edges, z) for _ in range(max(c, 0)))
    xs2 = tuple(x for x, c in zip(h.edges, z) for _ in range(max(-c, 0)))
    kind = sequence_violation(h, xs, xs2)
    if kind is None:
        raise InternalInconsistency("certificate does not decode to violating sequences")
    return CompatibilityVerdict(
        False, certificate=z, sequences=(xs, xs2), violated=kind, nested_pair=nested
    )


# -- canonical forms and enumeration ----------------------------------------


def _permute_mask(mask, perm):
    out = 0
    for j, pj in enumerate(perm):
        if mask >> j & 1:
            out |= 1 << pj
    return out


def canonical_masks(masks: Sequence[int], n_nodes: int) -> tuple:
    """Lexicographically least sorted edge-mask tuple over all node relabelings."""
    best = None
    for perm in itertools.permutations(range(n_nodes)):
        cand = tuple(sorted(_permute_mask(m, perm) for m in masks))
        if best is None or cand < best:
            best = cand
    return (n_nodes, best)


def canonical_form(h: SupportHypergraph, collapse_duplicates: bool = False) -> tuple:
    masks = h.edge_masks()
    if collapse_duplicates:
        masks = sorted(set(masks))
    return canonical_masks(masks, len(h.extents))


def from_masks(masks: Sequence[int], n_nodes: int) -> SupportHypergraph:
    matrix = [[m >> j & 1 for j in range(n_nodes)] for m in masks]
    return SupportHypergraph.from_incidence(matrix)


def has_nested_masks(masks: Sequence[int]) -> bool:
    return any(a != b and a & b == a for a in masks for b in masks)


def enumerate_hypergraphs(max_nodes: int, max_edges: int, n_nodes: Optional[int] = None) -> Iterator:
    """Every valid hypergraph with at most ``max_nodes`` nodes and at most
    ``max_edges`` pairwise distinct edges, once per isomorphism class.

    Pass ``n_nodes`` to restrict to exactly that many nodes.
    """
    if max_nodes > MAX_ENUM_NODES or max_edges > MAX_ENUM_EDGES:
        raise LimitExceeded(f"enumeration is limited to {MAX_ENUM_NODES} nodes and {MAX_ENUM_EDGES} edges")
    if max_nodes < 1 or max_edges < 1:
        return
    sizes = [n_nodes] if n_nodes is not None else range(1, max_nodes + 1)
    for n in sizes:
        full = (1 << n) - 1
        types = range(1, full + 1)
        for e in range(1, max_edges + 1):
            for combo in itertools.combinations(types, e):
                union = 0
                for m in combo:
                    union |= m
                if union != full:
                    continue
                if canonical_masks(combo, n)[1] != combo:
                    continue
                yield from_masks(combo, n)


def compatible_catalogue(n_nodes: int, max_edges: int = MAX_ENUM_EDGES) -> list:
    """Canonical edge-mask tuples of the car-compatible hypergraphs with exactly ``n_nodes`` nodes."""
    out = []
    for h in enumerate_hypergraphs(n_nodes, max_edges, n_nodes=n_nodes):
        if check_car_compatible(h).compatible:
            out.append(canonical_form(h))
    return out
