from fractions import Fraction

import pytest
from hypothesis import assume, given, settings, strategies as st

from carcheck import io
from carcheck.car import check_d_car
from carcheck.core import StateSpace, validate_distribution
from carcheck.errors import EmptyEdge, InputError, LimitExceeded, UncoveredNode
from carcheck.hypergraph import (
    SupportHypergraph,
    canonical_form,
    canonical_masks,
    check_car_compatible,
    compatible_catalogue,
    enumerate_hypergraphs,
    from_distribution,
    from_masks,
    indicator,
    nested_edges_screen,
    realize,
    realize_with,
    sequence_violation,
    validate,
)


@st.composite
def hypergraphs(draw):
    n = draw(st.integers(1, 4))
    full = (1 << n) - 1
    masks = draw(st.lists(st.integers(1, full), min_size=1, max_size=6, unique=True))
    union = 0
    for m in masks:
        union |= m
    assume(union == full)
    return from_masks(masks, n)


def test_figure3_indicator_identities():
    h = io.load_model("figure3")
    assert indicator(h, ("x1", "x2")) == indicator(h, ("x3", "x4", "x5")) == (1,) * 6
    assert indicator(h, ("x1", "x3", "x4", "x5")) == (2, 2, 2, 1, 1, 1)
    assert sequence_violation(h, ("x1", "x2"), ("x3", "x4", "x5")) == "equal-indicator"


def test_figure3_verdict():
    v = check_car_compatible(io.load_model("figure3"))
    assert not v.compatible and v.violated == "equal-indicator"
    assert v.sequences == (("x1", "x2"), ("x3", "x4", "x5"))
    assert v.nested_pair is None


def test_figure2a_nested():
    h = io.load_model("figure2a")
    v = check_car_compatible(h)
    assert nested_edges_screen(h) == ("B", "A")
    assert not v.compatible and v.nested_pair == ("B", "A")
    assert v.violated in ("equal-indicator", "dominated-indicator")


def test_figure2b_compatible():
    h = io.load_model("figure2b")
    v = check_car_compatible(h)
    assert v.compatible
    p = realize_with(h, v.nu)
    validate_distribution(p)
    assert check_d_car(p).holds


def test_validation_errors():
    s = StateSpace(("a", "b", "c"))
    with pytest.raises(UncoveredNode):
        validate(SupportHypergraph(s, [("U", ["c"]), ("V", ["a", "b"])], ["a", "b"]))
    with pytest.raises(EmptyEdge):
        validate(SupportHypergraph(s, [("U", ["a"])], ["a", "b"]))
    with pytest.raises(InputError):
        SupportHypergraph(s, [("U", ["a"]), ("V", ["a"])], ["a"])


def test_from_incidence_phantoms():
    h = SupportHypergraph.from_incidence([[1, 1, 0], [1, 1, 1]])
    assert h.incidence == [[1, 1, 0], [1, 1, 1]]
    assert "~U2" in h.space.states


def test_enumeration_limits_and_counts():
    assert len(list(enumerate_hypergraphs(1, 1))) == 1
    assert len(list(enumerate_hypergraphs(2, 6, n_nodes=2))) == 4
    with pytest.raises(LimitExceeded):
        list(enumerate_hypergraphs(5, 2))
    with pytest.raises(LimitExceeded):
        list(enumerate_hypergraphs(2, 7))


def test_three_node_catalogue():
    cat = compatible_catalogue(3)
    assert len(cat) == 5 and len(set(cat)) == 5
    # the partition {1},{2},{3} viewed edgewise: one edge covering all nodes
    assert (3, (7,)) in cat


def test_canonical_masks_invariant_under_relabeling():
    assert canonical_masks([0b011, 0b100], 3) == canonical_masks([0b110, 0b001], 3)
    assert canonical_masks([0b011], 3) != canonical_masks([0b111], 3)


@settings(max_examples=80, deadline=None)
@given(hypergraphs())
def test_realize_round_trip(h):
    p = realize(h)
    validate_distribution(p)
    assert canonical_form(from_distribution(p)) == canonical_form(h)


@settings(max_examples=80, deadline=None)
@given(hypergraphs())
def test_nested_screen_is_sound(h):
    if nested_edges_screen(h) is not None:
        assert not check_car_compatible(h).compatible


@settings(max_examples=80, deadline=None)
@given(hypergraphs())
def test_decision_coherence(h):
    v = check_car_compatible(h)
    if v.compatible:
        assert all(w > 0 for w in v.nu.values())
        p = realize_with(h, v.nu)
        validate_distribution(p)
        assert check_d_car(p).holds
        assert canonical_form(from_distribution(p)) == canonical_form(h)
    else:
        xs, xs2 = v.sequences
        assert sequence_violation(h, xs, xs2) == v.violated
        z = v.certificate
        assert sum(Fraction(c) for c in z) != 0 or any(
            sum(z[i] * h.incidence[i][j] for i in range(len(z))) != 0 for j in range(len(h.extents))
        )
