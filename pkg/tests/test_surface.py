import math
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from ftqc import surface as sf
from ftqc.errors import InfeasibleError, RejectedInputError
from ftqc.gates import GateCounts


def test_logical_error_rate_examples():
    assert sf.logical_error_rate(0.1, 3) == pytest.approx(4.3e-4, rel=1e-12)
    assert sf.logical_error_rate(0.1, 5) == pytest.approx(4.3e-5, rel=1e-12)
    rates = [sf.logical_error_rate(0.3, d) for d in range(1, 30, 2)]
    assert all(b < a for a, b in zip(rates, rates[1:]))


@pytest.mark.parametrize("bad", [1.0, 1.5, 0.0, -0.1])
def test_logical_error_rate_rejects(bad):
    with pytest.raises(RejectedInputError):
        sf.logical_error_rate(bad, 3)


def test_s_r():
    assert sf.s_r(GateCounts(10, 5, 8), 3) == 547.5
    assert sf.s_r((0, 0, 0), 7) == 0
    c = GateCounts(13, 2, 21)
    assert sf.s_r(c, 14) == 2 * sf.s_r(c, 7)
    with pytest.raises(RejectedInputError):
        sf.s_r((-1, 0, 0), 3)


def test_total_cycles_single_bit():
    assert sf.total_cycles(1, 1, 100.0, 5) == 13 * 100 + 40 * 5
    assert sf.total_cycles_explicit(1, 1, 100.0, 5) == 13 * 100 + 40 * 5


@pytest.mark.parametrize("M", range(1, 21))
def test_total_cycles_sum_identity(M):
    for k0, s, d in ((1, 4912.5, 15), (7, 1.0e6, 29), (3, 0.0, 3)):
        closed = (2**M - 1) * k0 * (9 * s + 30 * d) + 4 * M * (s + 2.5 * d)
        assert sf.total_cycles_explicit(M, k0, s, d) == pytest.approx(closed, rel=1e-12)
        assert sf.total_cycles(M, k0, s, d) == pytest.approx(closed, rel=1e-12)


def test_total_cycles_doubles_and_half_form():
    a, b = sf.total_cycles(19, 2, 1e5, 21), sf.total_cycles(20, 2, 1e5, 21)
    assert b / a == pytest.approx(2, rel=1e-3)
    ratio = sf.total_cycles(20, 2, 1e5, 21) / sf.total_cycles(20, 2, 1e5, 21, form="half")
    assert ratio == pytest.approx(2, rel=1e-4)


def test_logical_qubits():
    assert sf.logical_qubits(100) == 306
    assert sf.logical_qubits(1) == 9
    assert sf.logical_qubits(40) - sf.logical_qubits(20) == 60


def test_distillation_examples():
    level, err = sf.distillation_level(0.01, 1e-4)
    assert (level, err) == (1, pytest.approx(3.5e-5, rel=1e-12))
    level, err = sf.distillation_level(0.01, 1e-11)
    assert level == 2 and err == pytest.approx(1.5006e-12, rel=1e-4)
    assert sf.distillation_level(0.01, 0.02) == (0, 0.01)


def test_distillation_recursion_exact():
    p = Fraction(1, 100)
    _, e1 = sf.distillation_level(p, Fraction(1, 10**4))
    _, e2 = sf.distillation_level(p, Fraction(1, 10**11))
    assert e1 == 35 * p**3
    assert e2 == 35**4 * p**9


@given(st.floats(1e-6, 0.16), st.floats(1e-30, 1e-3))
def test_distillation_minimal(p, target):
    level, err = sf.distillation_level(p, target)
    assert err <= target
    if level:
        prev = p
        for _ in range(level - 1):
            prev = 35 * prev**3
        assert prev > target


def test_distillation_rejects_divergent_input():
    with pytest.raises(RejectedInputError):
        sf.distillation_level(0.17, 1e-9)


def test_factory_level2():
    f = sf.factory_requirements(100, 25, 2)
    assert f.factory_logical_qubits == 691
    assert float(f.rate) == pytest.approx(100 / 11)
    for n in (1, 7, 100, 333):
        assert sf.factory_requirements(n, 9, 2).volume_rate / n == pytest.approx(13.82, abs=1e-12)


def test_factory_level1_and_0():
    f1 = sf.factory_requirements(11, 9, 1)
    assert f1.volume_rate == pytest.approx(32.0)
    assert f1.factory_logical_qubits == 16
    assert sf.factory_requirements(50, 9, 0).factory_logical_qubits == 0
    with pytest.raises(RejectedInputError):
        sf.factory_requirements(50, 9, 3)


def test_physical_qubits():
    assert sf.physical_qubits(100, 25) == 7_789_063
    assert sf.physical_qubits_simplified(100, 9) == 1_003_388
    assert sf.physical_qubits_simplified(100, 4) == 4 * sf.physical_qubits_simplified(100, 2)


def test_wall_time():
    assert sf.wall_time(1e11, 20e-9) == pytest.approx(1.6e4)
    assert sf.wall_time(0, 20e-9) == 0
    assert sf.wall_time(2e5, 3e-9) == pytest.approx(2 * sf.wall_time(1e5, 3e-9))


@pytest.mark.parametrize(
    "kwargs",
    [dict(r=0), dict(r=1.5), dict(p_ratio=1.0), dict(N=1), dict(M=0), dict(tau=-1.0), dict(cycles_form="x")],
)
def test_problem_validation(kwargs):
    base = dict(N=100, M=10)
    base.update(kwargs)
    with pytest.raises(RejectedInputError):
        sf.TimProblem(**base)


@given(
    st.integers(2, 200), st.integers(1, 16), st.integers(1, 50),
    st.sampled_from([0.1, 0.5, 1.0]), st.floats(0.01, 0.5),
    st.integers(0, 10**5), st.integers(0, 10**4), st.integers(0, 10**5),
)
@settings(max_examples=60, deadline=None)
def test_solve_distance_minimal_and_odd(n, m, k0, r, p_ratio, nt, ns, nh):
    problem = sf.TimProblem(N=n, M=m, r=r, p_ratio=p_ratio)
    counts = GateCounts(nt, ns, nh)
    d, K, p_l = sf.solve_distance(problem, k0, counts)
    q = sf.logical_qubits(n)
    assert d % 2 == 1 and d >= 3
    assert p_l * K * q <= r
    if d > 3:
        assert not sf.budget_ok(p_ratio, d - 2, m, k0, counts, q, r)


def test_solve_distance_cap():
    problem = sf.TimProblem(N=100, M=16, r=0.1, p_ratio=0.9)
    with pytest.raises(InfeasibleError) as info:
        sf.solve_distance(problem, 10, GateCounts(10**5, 0, 0), d_cap=11)
    assert info.value.exit_code == 3
    assert "d <= 11" in str(info.value)


def test_required_angles_and_budget():
    angles = sf.required_angles(3, 0.5, 2)
    assert angles[:4] == [0.125, -0.125, 0.25, -0.25]
    assert angles[4:] == pytest.approx([-math.pi, -math.pi / 2, -math.pi / 4])
    assert sf.sk_budget(10, 4) == 2.0**-10 / 4
    assert sf.sk_budget(10, 4, N=100, strict=True) == 2.0**-10 / 4 / 900


@pytest.fixture(scope="module")
def report_m10(net):
    return sf.estimate_surface(sf.TimProblem(N=100, M=10, r=1, p_ratio=0.1, t_phys=20e-9), net)


def test_estimate_invariants(report_m10):
    rep = report_m10
    p = rep.problem
    assert rep.d % 2 == 1 and rep.d >= 3
    assert rep.p_L * rep.K * rep.Q <= p.r
    assert not sf.budget_ok(p.p_ratio, rep.d - 2, p.M, rep.k0, rep.counts, rep.Q, p.r)
    assert sf.s_r(rep.counts, rep.d) == rep.S_R
    assert rep.wall_seconds == rep.K * 8 * p.t_phys
    assert rep.total_logical_qubits == rep.Q + rep.factory_logical_qubits
    assert rep.distill_level == 2
    assert rep.factory_logical_qubits == 691
    assert 20 <= rep.d <= 26
    assert 1e6 <= rep.physical_qubits <= 1e8
    assert 1.8e3 <= rep.wall_seconds <= 1.8e5


def test_estimate_csv_row_order(report_m10):
    assert tuple(report_m10.csv_row()) == sf.SURFACE_CSV_COLUMNS


def test_strict_budget_costs_more(net, report_m10):
    strict = sf.estimate_surface(
        sf.TimProblem(N=100, M=6, r=1, p_ratio=0.1, strict_sk_budget=True), net
    )
    loose = sf.estimate_surface(sf.TimProblem(N=100, M=6, r=1, p_ratio=0.1), net)
    assert strict.eps_sk < loose.eps_sk
    assert strict.counts.weighted() >= loose.counts.weighted()
