import random
from fractions import Fraction

import pytest

from carcheck import io
from carcheck.car import check_d_car, check_d_ccar, induced_distribution
from carcheck.core import StateSpace, same_on_support, validate_distribution
from carcheck.errors import (
    CoarseningError,
    InputError,
    NonterminatingSpec,
    NormalizationError,
    NotCar,
    NotCcar,
    StateExplosion,
    UnbiasednessViolation,
)
from carcheck.generators import random_mgd, random_noise, random_pt, random_rmc, random_tabular
from carcheck.procedural import (
    FRow,
    KernelRow,
    MgdModel,
    PtModel,
    RmcModel,
    TabularSequentialModel,
    UniformNoiseModel,
    build_direct,
    build_mgd,
    build_pt,
    induce,
    induce_mgd,
    induce_noise,
    induce_pt,
    induce_rmc,
    induce_tabular,
    mgd_as_tabular,
    rmc_as_tabular,
    table_f,
    table_kernel,
    tabular_from_coarsening_variable,
)

F = Fraction
half, third = F(1, 2), F(1, 3)
UNIFORM3 = {"A": third, "B": third, "C": third}


def test_mgd_two_partition(abc):
    m = io.load_model("mgd_two_partition")
    p = induce_mgd(m)
    validate_distribution(p)
    assert p.p_cond("C", abc.subset("BC")) == half
    assert p.p_cond("C", abc.subset("AC")) == half
    assert p.p_cond("A", abc.subset("A")) == half
    assert str(m.block(1, "A")) == "{A,C}"
    assert check_d_ccar(p).holds


def test_mgd_validation(abc):
    a, b, c, bc = (abc.subset(s) for s in ("A", "B", "C", "BC"))
    with pytest.raises(CoarseningError):
        MgdModel(abc, [[a, b]], [1], UNIFORM3)  # C uncovered
    with pytest.raises(CoarseningError):
        MgdModel(abc, [[a, bc, c]], [1], UNIFORM3)  # overlap
    with pytest.raises(NormalizationError):
        MgdModel(abc, [[a, b, c]], [half], UNIFORM3)
    # blocks only need to partition the support
    m = MgdModel(abc, [[a, b]], [1], {"A": half, "B": half})
    assert induce_mgd(m).p_cond("A", a) == 1


def test_rmc_two_split(abc):
    m = io.load_model("rmc_two_split")
    p = induce_rmc(m)
    assert p.p_cond("C", abc.subset("BC")) == half
    assert p.p_cond("C", abc.subset("AC")) == half
    assert p.p_cond("A", abc.subset("A")) == half
    assert [str(a) for a in m.reachable()] == ["{B}", "{A}", "{B,C}", "{A,C}", "{A,B,C}"]
    assert sorted(p for _, p in m.walk("C")) == [half, half]


def test_rmc_validation(abc):
    full = abc.full()
    with pytest.raises(NonterminatingSpec):
        RmcModel(abc, UNIFORM3, {full: (0, [])})
    with pytest.raises(NormalizationError):
        RmcModel(abc, UNIFORM3, {full: (half, [(abc.subset("A"), third)])})
    with pytest.raises(CoarseningError):
        RmcModel(abc, UNIFORM3, {full: (0, [(full, 1)])})


def test_noise_model():
    m = io.load_model("noise_2state")
    p = induce_noise(m)
    s = m.space
    # N fires with 1/2 and H is uniform: {x} alone with 3/4, {a,b} with 1/4
    assert p.p_cond("a", s.subset("a")) == F(3, 4)
    assert p.p_cond("a", s.full()) == F(1, 4)
    assert sum(m.noise_set_law().values()) == 1
    with pytest.raises(InputError):
        UniformNoiseModel(s, m.px, [F(3, 2)])
    with pytest.raises(InputError):
        UniformNoiseModel(s, m.px, [half], [{"a": half, "b": half}] * 2)


def test_pt_triangle_is_monty_2_17(monty17):
    m = io.load_model("pt_triangle")
    assert m.normalizer() == F(3, 2)
    assert induce_pt(m) == monty17


def test_pt_unbiasedness(abc):
    balanced = PtModel(abc, UNIFORM3, {abc.subset("AB"): half, abc.subset("C"): half})
    assert balanced.normalizer() == 2
    skewed = {abc.subset("AB"): half, abc.subset("AC"): half}
    with pytest.raises(UnbiasednessViolation):
        PtModel(abc, UNIFORM3, skewed)
    assert not check_d_car(induce_pt(PtModel(abc, UNIFORM3, skewed, require_unbiased=False))).holds
    with pytest.raises(NonterminatingSpec):
        induce_pt(PtModel(abc, UNIFORM3, {abc.subset("AB"): 1}, require_unbiased=False))


def test_pt_prefix_perturbs_first_draw(abc):
    m = io.load_model("pt_triangle")
    skew = {abc.subset("AB"): half, abc.subset("AC"): F(1, 4), abc.subset("BC"): F(1, 4)}
    p = induce_pt(m.with_parameter("G1", skew))
    validate_distribution(p)
    assert not check_d_car(p).holds


def kernel_rows():
    return [[KernelRow("*", (), {"h": half, "t": half})], [KernelRow("*", ("h",), {"h": 1}),
                                                            KernelRow("*", ("t",), {"h": half, "t": half})]]


def test_tabular_rows_and_wildcards():
    s = StateSpace(("a", "b"))
    f = table_f([FRow("*", ("t", "t"), s.full()), FRow("a", ("*", "*"), s.subset("a")),
                 FRow("b", ("*", "*"), s.subset("b"))])
    m = TabularSequentialModel(s, {"a": half, "b": half}, [("h", "t"), ("h", "t")], table_kernel(kernel_rows()), f)
    assert [h for h, _, _ in m.paths("a")] == [("h", "h"), ("t", "h"), ("t", "t")]
    p = induce_tabular(m)
    assert p.p_cond("a", s.full()) == F(1, 4)
    with pytest.raises(CoarseningError):
        table_kernel([[KernelRow("a", (), {"h": 1})]])(0, "b", ())


def test_tabular_errors():
    s = StateSpace(("a", "b"))
    with pytest.raises(StateExplosion):
        TabularSequentialModel(s, {"a": 1}, [("0", "1")] * 5, lambda i, x, h: {"0": 1},
                               lambda x, g: s.subset("a"), max_states=16)
    with pytest.raises(NormalizationError):
        TabularSequentialModel(s, {"a": 1}, [("0", "1")], lambda i, x, h: {"0": half}, lambda x, g: s.full())
    with pytest.raises(CoarseningError):
        TabularSequentialModel(s, {"a": 1}, [("0",)], lambda i, x, h: {"0": 1}, lambda x, g: s.subset("b"))


def test_table1_fair_coin_models(monty16, monty17):
    assert induce(io.load_model("table1_2_16")) == monty16
    assert induce(io.load_model("table1_2_17")) == monty17


def test_tabular_coarsening_variable_round_trip():
    v = io.load_model("g1_2_10")
    t = tabular_from_coarsening_variable(v)
    assert induce_tabular(t) == induced_distribution(v)
    assert induced_distribution(t.to_coarsening_variable()) == induced_distribution(v)


@pytest.mark.parametrize("seed", range(25))
def test_encodings_preserve_induction(seed):
    rng = random.Random(seed)
    m = random_mgd(rng)
    assert induce_tabular(mgd_as_tabular(m)) == induce_mgd(m)
    r = random_rmc(rng)
    assert induce_tabular(rmc_as_tabular(r)) == induce_rmc(r)


@pytest.mark.parametrize("seed", range(25))
def test_builders_round_trip(seed):
    rng = random.Random(100 + seed)
    p = induce(random_pt(rng))
    assert same_on_support(induce(build_pt(p)), p)
    assert same_on_support(induce(build_direct(p)), p)
    q = induce(random_mgd(rng))
    assert same_on_support(induce(build_mgd(q)), q)


@pytest.mark.parametrize("seed", range(25))
def test_procedural_families_are_car(seed):
    rng = random.Random(200 + seed)
    for gen in (random_rmc, random_noise, random_pt, random_mgd):
        assert check_d_car(induce(gen(rng))).holds
    validate_distribution(induce(random_tabular(rng)))


def test_builders_reject(monty16, monty17):
    with pytest.raises(NotCar):
        build_direct(monty16)
    with pytest.raises(NotCar):
        build_pt(monty16)
    with pytest.raises(NotCcar):
        build_mgd(monty17)


def test_induce_rejects_unknown():
    with pytest.raises(InputError):
        induce(object())
