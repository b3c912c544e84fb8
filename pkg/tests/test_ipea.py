import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ftqc import ipea, tim
from ftqc.errors import RejectedInputError, ResourceLimitError

TAU = math.pi / 4
E0 = -math.sqrt(5)


def test_controlled_u_basics():
    np.testing.assert_allclose(ipea.controlled_u(np.eye(4)), np.eye(8))
    cz = ipea.controlled_u(np.diag([1.0, -1.0]))
    assert np.allclose(cz @ cz.conj().T, np.eye(4), atol=1e-12)
    state = np.zeros(4)
    state[3] = 1.0  # |1>|1>
    np.testing.assert_allclose(cz @ state, -state)


def test_controlled_u_caps():
    with pytest.raises(ResourceLimitError):
        ipea.controlled_u(np.eye(2**9))
    with pytest.raises(RejectedInputError):
        ipea.controlled_u(np.eye(3))


def test_feedback_angle():
    assert ipea.feedback_angle([]) == 0
    assert ipea.feedback_angle([1]) == pytest.approx(-math.pi / 2)
    assert ipea.feedback_angle([0, 1]) == pytest.approx(-math.pi / 4)
    assert ipea.feedback_angle([1, 1]) == pytest.approx(-3 * math.pi / 4)
    with pytest.raises(RejectedInputError):
        ipea.feedback_angle([2])


def test_synthetic_three_bit_phase():
    u = np.diag(np.exp(-2j * math.pi * np.array([0.625])))
    for seed in range(10):
        bits, probs, norm_err = ipea.run_ipea_on_unitary(u, np.array([1.0]), 3, seed=seed)
        assert bits == [1, 0, 1]
        assert ipea.bits_to_phase(bits) == 0.625
        assert all(min(p, 1 - p) < 1e-10 for p in probs)
        assert norm_err < 1e-10


@given(st.integers(1, 10), st.data())
@settings(max_examples=30, deadline=None)
def test_exact_binary_phase_is_deterministic(m, data):
    x = data.draw(st.integers(0, 2**m - 1))
    seed = data.draw(st.integers(0, 2**31))
    phi = x / 2**m
    # eigenstate of a 2-level diagonal unitary, other eigenphase arbitrary
    u = np.diag(np.exp(-2j * math.pi * np.array([phi, 0.123])))
    bits, probs, _ = ipea.run_ipea_on_unitary(u, np.array([1.0, 0.0]), m, seed=seed)
    assert ipea.bits_to_phase(bits) == phi
    assert all(min(p, 1 - p) < 1e-10 for p in probs)


def test_unwrap_convention():
    assert ipea.unwrap_phase(0.0) == 0.0
    assert ipea.unwrap_phase(0.75) == pytest.approx(0.25)
    assert ipea.unwrap_phase(0.25) == pytest.approx(-0.25)
    assert ipea.unwrap_phase(0.5) == pytest.approx(-0.5)


def test_exact_mode_run_fields():
    run = ipea.ipea_run(2, 8, TAU, "exact", seed=0)
    assert run.phase_estimate == sum(b * 2.0 ** -(j + 1) for j, b in enumerate(run.bits))
    assert run.energy_estimate == pytest.approx(-2 * math.pi * run.phase_unwrapped / TAU)
    assert run.max_norm_error < 1e-10
    assert len(run.round_probabilities) == 8


def test_exact_mode_energy_within_grid_step():
    step = 2 * math.pi / (TAU * 2**8)
    for seed in range(10):
        run = ipea.ipea_run(2, 8, TAU, "exact", seed=seed)
        assert abs(run.energy_estimate - E0) <= step


def _fejer(phi, m):
    x = np.arange(2**m)
    k = np.arange(2**m)
    amp = np.exp(2j * math.pi * np.outer(phi - x / 2**m, k)).sum(axis=1) / 2**m
    return np.abs(amp) ** 2


def _as_vector(dist, m):
    out = np.zeros(2**m)
    for bits, p in dist.items():
        out[int(round(ipea.bits_to_phase(bits) * 2**m))] += p
    return out


@pytest.mark.parametrize("m", [3, 6, 8])
def test_distribution_matches_textbook_phase_estimation(m):
    phi = (E0 * TAU / (2 * math.pi)) % 1.0
    got = _as_vector(ipea.ipea_distribution(2, m, TAU, "exact"), m)
    np.testing.assert_allclose(got, _fejer(phi, m), atol=1e-10)


def test_sampling_follows_distribution():
    m = 4
    exact = _as_vector(ipea.ipea_distribution(2, m, TAU, "exact"), m)
    counts = np.zeros(2**m)
    for seed in range(1000):
        run = ipea.ipea_run(2, m, TAU, "exact", seed=seed)
        counts[int(round(run.phase_estimate * 2**m))] += 1
    tv = 0.5 * np.abs(counts / 1000 - exact).sum()
    assert tv < 0.05


def test_trotter_mode_converges_to_exact():
    m = 4
    exact = _as_vector(ipea.ipea_distribution(2, m, TAU, "exact"), m)
    tvs = []
    for k0 in (1, 2, 4, 8, 16):
        trot = _as_vector(ipea.ipea_distribution(2, m, TAU, "trotter", k0=k0), m)
        tvs.append(0.5 * np.abs(trot - exact).sum())
    assert all(b < a for a, b in zip(tvs, tvs[1:])), tvs


@pytest.mark.parametrize("m", [4, 6])
def test_trotter_matches_exact_bits(m):
    same = sum(
        ipea.ipea_run(2, m, TAU, "trotter", seed=s).bits == ipea.ipea_run(2, m, TAU, "exact", seed=s).bits
        for s in range(20)
    )
    assert same >= 18


def test_trotter_k0_from_solver():
    run = ipea.ipea_run(2, 6, TAU, "trotter", seed=0)
    assert run.k0 == tim.solve_k0(2, 6, TAU, "exact")


@pytest.mark.parametrize("n", [2, 3])
@pytest.mark.parametrize("theta", [0.3, -1.1, 2.0])
def test_controlled_step_circuit_identity(n, theta):
    circuit = ipea.controlled_trotter_step(n, theta)
    np.testing.assert_allclose(circuit, ipea.controlled_u(tim.trotter_step(n, theta)), atol=1e-13)


def _tv(a, b):
    return 0.5 * sum(abs(a.get(k, 0) - b.get(k, 0)) for k in set(a) | set(b))


def test_trotter_sk_mode(net):
    m = 4
    run = ipea.ipea_run(2, m, TAU, "trotter_sk", seed=0, net=net)
    assert run.max_norm_error < 1e-10
    trot = ipea.ipea_distribution(2, m, TAU, "trotter")
    compiled = ipea.ipea_distribution(2, m, TAU, "trotter_sk", net=net)
    assert _tv(trot, compiled) < 0.05


def test_unsplit_sk_budget_is_too_loose(net):
    # one 2^-M/k0 allowance per rotation lets the 6N-2 rotation errors of a step add up
    m = 4
    k0 = tim.solve_k0(2, m, TAU, "exact")
    trot = ipea.ipea_distribution(2, m, TAU, "trotter")
    split = ipea.ipea_distribution(2, m, TAU, "trotter_sk", net=net)
    loose = ipea.ipea_distribution(2, m, TAU, "trotter_sk", net=net, eps_sk=2.0**-m / k0)
    assert _tv(trot, loose) > 3 * _tv(trot, split)
    assert ipea.default_eps_sk(2, m, k0) == 2.0**-m / k0 / 10


def test_trotter_sk_needs_net():
    with pytest.raises(RejectedInputError):
        ipea.ipea_run(2, 3, TAU, "trotter_sk")


def test_caps():
    with pytest.raises(ResourceLimitError):
        ipea.ipea_run(9, 4)
    with pytest.raises(ResourceLimitError):
        ipea.ipea_run(5, 4, oracle_mode="trotter_sk")
    with pytest.raises(ResourceLimitError):
        ipea.ipea_run(2, 17)
    with pytest.raises(RejectedInputError):
        ipea.ipea_run(2, 4, oracle_mode="magic")


def test_depolarized_input():
    full = ipea.ipea_run(2, 6, TAU, input_state_mode="depolarized", overlap=1.0, seed=4)
    ground = ipea.ipea_run(2, 6, TAU, seed=4)
    assert full.max_norm_error < 1e-10
    random_in = ipea.ipea_run(3, 6, input_state_mode="depolarized", overlap=0.0, seed=1)
    assert random_in.max_norm_error < 1e-10
    with pytest.raises(RejectedInputError):
        ipea.ipea_run(2, 4, input_state_mode="depolarized", overlap=1.5)
    assert isinstance(ground.bits, list)


def test_runs_are_reproducible():
    a = ipea.ipea_run(3, 7, oracle_mode="trotter", seed=11)
    b = ipea.ipea_run(3, 7, oracle_mode="trotter", seed=11)
    assert a.to_dict() == b.to_dict()
