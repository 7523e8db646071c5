import random
from fractions import Fraction

import pytest

from carcheck import io
from carcheck.car import (
    CoarseningVariable,
    check_d_car,
    check_d_ccar,
    check_g_car,
    check_g_ccar,
    check_invertible,
    check_m_mar,
    check_m_mcar,
    exact_covers,
    ignorability_report,
    induced_distribution,
    missingness_coarsening_variable,
    total_variation,
)
from carcheck.core import CoarseDistribution, StateSpace
from carcheck.errors import CoarseningError, CoverExplosion, NormalizationError, ShapeError
from carcheck.generators import random_car_distribution, random_ccar_distribution

F = Fraction
half = F(1, 2)


def test_monty_2_16_violation(monty16):
    v = check_d_car(monty16)
    u, x, x2 = v.violation
    assert str(u) == "{A,C}" and (x, x2) == ("A", "C")
    assert monty16.p_cond("A", u) == half and monty16.p_cond("C", u) == 1


def test_monty_2_17_car_not_ccar(monty17):
    v = check_d_ccar(monty17)
    assert v.car.holds and not v.holds
    assert v.reason == "no partition mixture" and v.cover_count == 0


def test_ccar_implies_car_and_fails_early(monty16):
    v = check_d_ccar(monty16)
    assert not v.holds and v.reason == "not d-car"


def test_tests_2_2_ccar(tests22):
    v = check_d_ccar(tests22)
    assert v.holds
    (blocks, lam), = v.witness
    assert lam == 1 and [str(b) for b in blocks] == ["{(p,p)}", "{(p,n)}", "{(n,n),(n,p)}"]


def test_exact_covers():
    # universe {0,1,2}; blocks {0},{1},{2},{0,1},{1,2}
    covers = exact_covers(0b111, [0b001, 0b010, 0b100, 0b011, 0b110])
    assert covers == [(0, 1, 2), (0, 4), (2, 3)]
    with pytest.raises(CoverExplosion):
        exact_covers(0b111, [0b001, 0b010, 0b100, 0b011, 0b110], cap=2)
    with pytest.raises(ValueError):
        exact_covers(0b011, [0b100])


def test_cover_cap_surfaces_from_ccar(tests22):
    with pytest.raises(CoverExplosion):
        check_d_ccar(tests22, max_covers=0)


def test_g_car_and_invertibility():
    g1, g2 = io.load_model("g1_2_10"), io.load_model("g2_2_10")
    assert check_g_car(g1).holds and check_invertible(g1)[0]
    assert not check_g_car(g2).holds
    assert check_invertible(g2) == (False, None)
    # the induced distribution of G2 is nevertheless d-car
    assert check_d_car(induced_distribution(g2)).holds


def test_m_checks():
    m = io.load_model("m_2_1")
    assert check_m_mar(m).holds
    v = check_m_mcar(m)
    assert not v.holds and v.violation[0] == "00"
    ok, h = check_invertible(m)
    assert ok and set(h.values()) <= set(m.gamma)


def test_m_checks_need_bit_gamma():
    g1 = io.load_model("g1_2_10")
    with pytest.raises(ShapeError):
        check_m_mcar(g1)


def test_g_ccar_constant_kernel():
    scaffold = missingness_coarsening_variable([("a", "b")])
    v = scaffold.with_kernel({"(a)": half, "(b)": half}, {"(a)": {"0": half, "1": half}, "(b)": {"0": half, "1": half}})
    assert check_g_ccar(v).holds and check_m_mcar(v).holds
    assert check_d_ccar(induced_distribution(v)).holds


def test_coarsening_variable_validation():
    s = StateSpace(("a", "b"))
    ab = s.full()
    a, b = s.subset("a"), s.subset("b")
    with pytest.raises(CoarseningError):  # membership
        CoarseningVariable(s, ["g"], {("a", "g"): b, ("b", "g"): b}, {("a", "g"): 1})
    with pytest.raises(CoarseningError):  # Cartesian
        CoarseningVariable(s, ["g"], {("a", "g"): ab, ("b", "g"): b}, {("a", "g"): half, ("b", "g"): half})
    with pytest.raises(NormalizationError):
        CoarseningVariable(s, ["g"], {("a", "g"): a, ("b", "g"): b}, {("a", "g"): half})
    with pytest.raises(CoarseningError):
        CoarseningVariable(s, ["g"], {("a", "g"): a}, {("a", "g"): 1})


def test_ignorability_report_on_monty(monty16, monty17):
    bad = ignorability_report(monty16)
    assert not bad.ignorable and bad.max_gap == F(1, 6) and str(bad.gap_at) == "{A,C}"
    good = ignorability_report(monty17)
    assert good.ignorable and good.max_gap == 0


def test_total_variation():
    assert total_variation({"a": half, "b": half}, {"a": F(1)}) == half


@pytest.mark.parametrize("seed", range(20))
def test_random_car_and_ccar_corpora(seed):
    rng = random.Random(seed)
    assert check_d_car(random_car_distribution(rng)).holds
    assert check_d_ccar(random_ccar_distribution(rng)).holds


def test_car_witness_normalises():
    s = StateSpace(("a", "b", "c"))
    p = CoarseDistribution(s, {"a": half, "b": half},
                           {("a", s.subset("ab")): half, ("a", s.subset("a")): half,
                            ("b", s.subset("ab")): half, ("b", s.subset("b")): half})
    v = check_d_car(p)
    assert v.holds and v.witness[s.subset("ab")] == half
