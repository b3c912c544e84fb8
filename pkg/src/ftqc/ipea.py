"""State-vector simulation of iterative phase estimation on small TIM chains.

Phase convention: the register eigenvalue is written ``exp(-2 pi i phi)`` and
the ancilla reads out ``phi = 0.x1 x2 ... xM`` least significant bit first.
For ``U = exp(-i H tau)`` this means ``phi = E tau / 2pi (mod 1)``; the
reported ``phase_unwrapped`` is ``-E tau / 2pi`` folded into ``[-1/2, 1/2)``
so that ``energy_estimate = -2 pi phase_unwrapped / tau``.

Qubit 0 is the ancilla (most significant index bit); spins are qubits 1..N.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Literal, Sequence

import numpy as np

from . import tim
from .errors import RejectedInputError, ResourceLimitError, with_stage, FtqcError
from .gates import basis_gate, rz, seq_to_matrix

OracleMode = Literal["exact", "trotter", "trotter_sk"]

MAX_N = 8
MAX_N_SK = 4
MAX_M = 16
NORM_ATOL = 1e-10

_H = basis_gate("H")


def nearest_unitary(a: np.ndarray) -> np.ndarray:
    """Polar projection; strips the ~1e-13 rounding drift of long gate products."""
    w, _, vh = np.linalg.svd(a)
    return w @ vh


def controlled_u(u: np.ndarray) -> np.ndarray:
    """Block-diagonal ``I (+) U``: control qubit is the leading index bit."""
    u = np.asarray(u, dtype=complex)
    dim = u.shape[0]
    if u.shape != (dim, dim) or dim & (dim - 1):
        raise RejectedInputError("controlled_u needs a square power-of-two matrix")
    if dim > 2**MAX_N:
        raise ResourceLimitError(f"register dimension {dim} exceeds 2^{MAX_N}")
    out = np.zeros((2 * dim, 2 * dim), dtype=complex)
    out[:dim, :dim] = np.eye(dim)
    out[dim:, dim:] = u
    return out


def feedback_angle(bits: Sequence[int]) -> float:
    """``-2 pi * 0.0 b1 b2 ...`` for the already measured, less significant bits.

    ``bits[0]`` is the bit one position below the one being measured (the
    most recently measured), ``bits[1]`` the next one down, and so on.
    """
    total = 0.0
    for j, b in enumerate(bits, start=1):
        if b not in (0, 1):
            raise RejectedInputError(f"bits must be 0/1, got {b!r}")
        total += b * 2.0 ** -(j + 1)
    return -2.0 * math.pi * total


# -- small circuit toolkit acting on operators (dim x cols) --------------------


def apply_1q(state: np.ndarray, gate: np.ndarray, qubit: int, nq: int) -> np.ndarray:
    cols = state.shape[1] if state.ndim == 2 else 1
    view = state.reshape(2**qubit, 2, 2 ** (nq - qubit - 1), cols)
    out = np.einsum("ab,ibjc->iajc", gate, view)
    return out.reshape(state.shape)


def apply_cnot(state: np.ndarray, control: int, targets: Sequence[int], nq: int) -> np.ndarray:
    """Single-control multi-target CNOT (a row permutation)."""
    idx = np.arange(2**nq)
    mask = 0
    for t in targets:
        mask |= 1 << (nq - 1 - t)
    on = (idx >> (nq - 1 - control)) & 1
    return state[np.where(on == 1, idx ^ mask, idx)]


def controlled_trotter_step(
    n: int, theta: float, rz_gate: Callable[[float], np.ndarray] = rz
) -> np.ndarray:
    """Controlled ``U_x(theta) U_zz(2 theta) U_x(theta)`` from R_z, H and CNOT.

    Controlled ``U_x``: each spin gets ``H . cRz(-theta) . H`` with
    ``cRz(a) = Rz(a/2), CNOT, Rz(-a/2), CNOT`` and one multi-target CNOT per
    layer.  Controlled ``U_zz``: per bond, ``CNOT(j, j+1) . cRz_{j+1}(-2 theta)
    . CNOT(j, j+1)``.  Only uncontrolled single-qubit rotations appear, so any
    global phase of ``rz_gate`` stays global.
    """
    nq = n + 1
    spins = list(range(1, nq))
    op = np.eye(2**nq, dtype=complex)

    def cux(op):
        for q in spins:
            op = apply_1q(op, _H, q, nq)
        lo, hi = rz_gate(-theta / 2), rz_gate(theta / 2)
        for q in spins:
            op = apply_1q(op, lo, q, nq)
        op = apply_cnot(op, 0, spins, nq)
        for q in spins:
            op = apply_1q(op, hi, q, nq)
        op = apply_cnot(op, 0, spins, nq)
        for q in spins:
            op = apply_1q(op, _H, q, nq)
        return op

    op = cux(op)
    lo, hi = rz_gate(-theta), rz_gate(theta)
    for j in spins[:-1]:
        op = apply_cnot(op, j, [j + 1], nq)
        op = apply_1q(op, lo, j + 1, nq)
        op = apply_cnot(op, 0, [j + 1], nq)
        op = apply_1q(op, hi, j + 1, nq)
        op = apply_cnot(op, 0, [j + 1], nq)
        op = apply_cnot(op, j, [j + 1], nq)
    return cux(op)


def rotations_per_step(n: int) -> int:
    """R_z gates in one controlled Trotter step: 4N for the two x layers, 2(N-1) for zz."""
    return 6 * n - 2


def default_eps_sk(n: int, m_bits: int, k0: int) -> float:
    """``2^-M / k0`` shared among the rotations of a step.

    The per-rotation budget ``2^-M / k0`` alone lets the errors of the
    ``6N - 2`` rotations in every step add up; splitting it keeps the whole
    controlled ``U(2^m tau)`` within its ``2^-(M-m)`` allowance.
    """
    return 2.0**-m_bits / k0 / rotations_per_step(n)


# -- runs ----------------------------------------------------------------------


@dataclass
class IpeaRun:
    n: int
    m_bits: int
    tau: float
    oracle_mode: str
    seed: int
    bits: list[int]
    phase_estimate: float
    phase_unwrapped: float
    energy_estimate: float
    k0: int | None = None
    round_probabilities: list[float] = field(default_factory=list)
    max_norm_error: float = 0.0

    def to_dict(self) -> dict:
        return asdict(self)


def bits_to_phase(bits: Sequence[int]) -> float:
    """``0.x1 x2 ... xM`` in binary; exact in double precision for M <= 52."""
    return sum(b * 2.0 ** -(j + 1) for j, b in enumerate(bits))


def unwrap_phase(phase: float) -> float:
    """Fold ``-phase`` into ``[-1/2, 1/2)`` (ground energies in ``(-pi/tau, 0]``)."""
    u = (-phase) % 1.0
    return u - 1.0 if u >= 0.5 else u


class _Oracle:
    """Controlled ``U(2^m tau)`` factory for one run."""

    def __init__(self, n, m_bits, tau, mode, k0, net, eps_sk):
        self.n, self.tau, self.mode = n, tau, mode
        self.k0 = k0
        self._rz_cache: dict[float, np.ndarray] = {}
        self._step = None
        if mode == "trotter_sk":
            if net is None:
                raise RejectedInputError("trotter_sk mode needs a base net")
            self.net = net
            self.eps_sk = eps_sk if eps_sk is not None else default_eps_sk(n, m_bits, k0)

    def compiled_rz(self, angle: float) -> np.ndarray:
        from .sk import compile_rz

        hit = self._rz_cache.get(angle)
        if hit is None:
            try:
                hit = nearest_unitary(seq_to_matrix(compile_rz(angle, self.eps_sk, self.net).seq))
            except FtqcError as exc:
                raise with_stage(exc, "trotter_sk")
            self._rz_cache[angle] = hit
        return hit

    def power(self, m: int) -> np.ndarray:
        t = 2**m * self.tau
        if self.mode == "exact":
            return controlled_u(tim.exact_evolution(self.n, t))
        if self.mode == "trotter":
            return controlled_u(tim.trotter_product(self.n, t, 2**m * self.k0))
        if self._step is None:
            step = controlled_trotter_step(self.n, self.tau / self.k0, self.compiled_rz)
            self._step = nearest_unitary(step)
        return np.linalg.matrix_power(self._step, 2**m * self.k0)

    def phase_gate(self, angle: float) -> np.ndarray:
        """Ancilla gate ``diag(1, e^{i angle})``, or its compiled R_z stand-in."""
        if self.mode == "trotter_sk":
            return self.compiled_rz(angle)
        return np.diag([1.0, np.exp(1j * angle)])


def _validate(n, m_bits, mode):
    if mode not in ("exact", "trotter", "trotter_sk"):
        raise RejectedInputError(f"unknown oracle mode {mode!r}")
    cap = MAX_N_SK if mode == "trotter_sk" else MAX_N
    if not 2 <= n <= cap:
        raise ResourceLimitError(f"N={n} outside the simulator cap 2..{cap} for mode {mode}")
    if not 1 <= m_bits <= MAX_M:
        raise ResourceLimitError(f"M={m_bits} outside 1..{MAX_M}")


def _round(full_cu, phase, psi):
    """One IPEA round: returns the two unnormalized post-measurement branches."""
    dim = psi.shape[0]
    plus = np.concatenate([psi, psi]) / math.sqrt(2.0)
    out = full_cu @ plus
    out[dim:] *= phase[1, 1] / phase[0, 0] if phase[0, 0] != 0 else 1.0
    # ancilla Hadamard
    a, b = out[:dim], out[dim:]
    return (a + b) / math.sqrt(2.0), (a - b) / math.sqrt(2.0)


def _initial_state(n, input_state_mode, overlap, rng):
    _, g = tim.ground_state(n)
    if input_state_mode == "ground":
        return g
    if input_state_mode == "depolarized":
        if not 0.0 <= overlap <= 1.0:
            raise RejectedInputError("overlap must lie in [0, 1]")
        if rng.random() < overlap:
            return g
        v = rng.normal(size=g.shape) + 1j * rng.normal(size=g.shape)
        return v / np.linalg.norm(v)
    raise RejectedInputError(f"unknown input_state_mode {input_state_mode!r}")


def resolve_k0(n: int, m_bits: int, tau: float, k0: int | None) -> int:
    return int(k0) if k0 is not None else tim.solve_k0(n, m_bits, tau, tim.default_error_mode(n))


def run_ipea_on_unitary(
    u: np.ndarray,
    psi: np.ndarray,
    m_bits: int,
    seed: int = 0,
) -> tuple[list[int], list[float], float]:
    """IPEA with a fixed unitary ``u`` (powers by repeated squaring).

    Returns ``(bits x1..xM, per-round P(1), max norm deviation)``.
    """
    rng = np.random.default_rng(seed)
    powers = {0: np.asarray(u, dtype=complex)}
    for m in range(1, m_bits):
        powers[m] = powers[m - 1] @ powers[m - 1]
    return _iterate(lambda m: controlled_u(powers[m]), lambda a: np.diag([1.0, np.exp(1j * a)]), psi, m_bits, rng)


def _iterate(cu_of, phase_of, psi, m_bits, rng):
    psi = np.asarray(psi, dtype=complex)
    psi = psi / np.linalg.norm(psi)
    measured: list[int] = []  # least significant first: x_M, x_{M-1}, ...
    probs: list[float] = []
    worst = 0.0
    for m in range(m_bits - 1, -1, -1):
        # eigenvalue exp(-2 pi i phi): cancel the known lower bits with +|omega|
        omega = feedback_angle(measured[::-1])
        b0, b1 = _round(cu_of(m), phase_of(-omega), psi)
        p0, p1 = float(np.vdot(b0, b0).real), float(np.vdot(b1, b1).real)
        worst = max(worst, abs(p0 + p1 - 1.0))
        bit = int(rng.random() < p1)
        branch, p = (b1, p1) if bit else (b0, p0)
        psi = branch / math.sqrt(p)
        measured.append(bit)
        probs.append(p1)
    if worst > NORM_ATOL:
        raise FtqcError(f"state norm drifted by {worst:.2e}", stage="ipea")
    return measured[::-1], probs[::-1], worst


def ipea_run(
    n: int,
    m_bits: int,
    tau: float | None = None,
    oracle_mode: OracleMode = "exact",
    seed: int = 0,
    input_state_mode: str = "ground",
    overlap: float = 1.0,
    k0: int | None = None,
    net=None,
    eps_sk: float | None = None,
) -> IpeaRun:
    """Iterative phase estimation of ``exp(-i H tau)`` on the TIM ground state.

    Rounds run ``m = M-1 .. 0``: ancilla in ``|+>``, controlled ``U(2^m tau)``
    (exact, Trotterized, or Trotterized with SK-compiled rotations), the
    feedback phase for the bits already known, Hadamard, then a Born-rule
    draw from ``numpy.random.default_rng(seed)``.
    """
    n, m_bits = int(n), int(m_bits)
    _validate(n, m_bits, oracle_mode)
    tau = tim.default_tau(n) if tau is None else float(tau)
    kk = None if oracle_mode == "exact" else resolve_k0(n, m_bits, tau, k0)
    oracle = _Oracle(n, m_bits, tau, oracle_mode, kk, net, eps_sk)
    rng = np.random.default_rng(seed)
    psi = _initial_state(n, input_state_mode, overlap, rng)
    bits, probs, worst = _iterate(oracle.power, oracle.phase_gate, psi, m_bits, rng)
    phase = bits_to_phase(bits)
    unwrapped = unwrap_phase(phase)
    return IpeaRun(
        n=n,
        m_bits=m_bits,
        tau=tau,
        oracle_mode=oracle_mode,
        seed=int(seed),
        bits=bits,
        phase_estimate=phase,
        phase_unwrapped=unwrapped,
        energy_estimate=-2.0 * math.pi * unwrapped / tau,
        k0=kk,
        round_probabilities=probs,
        max_norm_error=worst,
    )


def ipea_distribution(
    n: int,
    m_bits: int,
    tau: float | None = None,
    oracle_mode: OracleMode = "exact",
    k0: int | None = None,
    net=None,
    eps_sk: float | None = None,
) -> dict[tuple[int, ...], float]:
    """Exact probability of every bit string ``(x1..xM)`` for the ground-state input."""
    n, m_bits = int(n), int(m_bits)
    _validate(n, m_bits, oracle_mode)
    tau = tim.default_tau(n) if tau is None else float(tau)
    kk = None if oracle_mode == "exact" else resolve_k0(n, m_bits, tau, k0)
    oracle = _Oracle(n, m_bits, tau, oracle_mode, kk, net, eps_sk)
    cus = {m: oracle.power(m) for m in range(m_bits)}
    _, g = tim.ground_state(n)
    out: dict[tuple[int, ...], float] = {}

    def branch(m, measured, psi, weight):
        if m < 0:
            out[tuple(measured[::-1])] = weight
            return
        omega = feedback_angle(measured[::-1])
        for bit, vec in enumerate(_round(cus[m], oracle.phase_gate(-omega), psi)):
            p = float(np.vdot(vec, vec).real)
            if p > 1e-300:
                branch(m - 1, measured + [bit], vec / math.sqrt(p), weight * p)

    branch(m_bits - 1, [], g, 1.0)
    return out
