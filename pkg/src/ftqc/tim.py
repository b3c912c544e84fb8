"""Open-chain transverse Ising model: dense Hamiltonian, second-order Trotter
steps, their error (exact and bounded) and the base Trotter number solver.

Qubit ``j = 1..N`` is bit ``N - j`` of the computational-basis index, so site
1 is the leftmost factor in Kronecker products.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Literal

import numpy as np
import scipy.linalg

from .errors import RejectedInputError, ResourceLimitError

MAX_DENSE_N = 12
MAX_EVOLUTION_N = 8
DEFAULT_K0_CAP = 10**9

ErrorMode = Literal["bound", "exact"]


def default_tau(n: int) -> float:
    """``pi / (2N)``: keeps ``|E| tau < pi`` since ``||H|| <= 2N - 1``."""
    return math.pi / (2 * n)


def _check_n(n: int, cap: int) -> int:
    n = int(n)
    if n < 2 or n > cap:
        raise ResourceLimitError(f"N={n} outside the dense-matrix range 2..{cap}")
    return n


@lru_cache(maxsize=None)
def _zz_diagonal(n: int) -> np.ndarray:
    idx = np.arange(2**n)
    z = 1 - 2 * ((idx[:, None] >> (n - 1 - np.arange(n))[None, :]) & 1)
    out = np.sum(z[:, :-1] * z[:, 1:], axis=1).astype(float)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class TimHamiltonian:
    n: int
    matrix: np.ndarray


def build_hamiltonian(n: int) -> TimHamiltonian:
    """``H = -sum_j X_j - sum_j Z_j Z_{j+1}`` as a real symmetric dense matrix."""
    n = _check_n(n, MAX_DENSE_N)
    dim = 2**n
    h = np.diag(-_zz_diagonal(n))
    rows = np.arange(dim)
    for j in range(n):
        h[rows, rows ^ (1 << j)] -= 1.0
    return TimHamiltonian(n, h)


def ground_energy_exact(n: int) -> float:
    h = build_hamiltonian(n).matrix
    return float(scipy.linalg.eigh(h, eigvals_only=True, subset_by_index=[0, 0])[0])


def ground_state(n: int) -> tuple[float, np.ndarray]:
    h = build_hamiltonian(n).matrix
    w, v = scipy.linalg.eigh(h, subset_by_index=[0, 0])
    return float(w[0]), v[:, 0].astype(complex)


@lru_cache(maxsize=32)
def _eig(n: int) -> tuple[np.ndarray, np.ndarray]:
    w, v = np.linalg.eigh(build_hamiltonian(n).matrix)
    return w, v


def exact_evolution(n: int, t: float) -> np.ndarray:
    """``exp(-i H t)`` via the eigendecomposition."""
    n = _check_n(n, MAX_EVOLUTION_N)
    w, v = _eig(n)
    return (v * np.exp(-1j * w * t)) @ v.T


def x_layer(n: int, theta: float) -> np.ndarray:
    """``U_x(theta) = prod_j exp(i theta X_j / 2)``."""
    c, s = math.cos(0.5 * theta), math.sin(0.5 * theta)
    single = np.array([[c, 1j * s], [1j * s, c]])
    out = np.array([[1.0 + 0j]])
    for _ in range(n):
        out = np.kron(out, single)
    return out


def zz_layer(n: int, theta: float) -> np.ndarray:
    """``U_zz(theta) = prod_j exp(i theta Z_j Z_{j+1} / 2)`` (diagonal)."""
    return np.diag(np.exp(0.5j * theta * _zz_diagonal(n)))


def trotter_step(n: int, theta: float) -> np.ndarray:
    ux = x_layer(n, theta)
    return ux @ zz_layer(n, 2 * theta) @ ux


def trotter_product(n: int, t: float, k: int) -> np.ndarray:
    """``[U_x(theta) U_zz(2 theta) U_x(theta)]^k`` with ``theta = t / k``."""
    n = _check_n(n, MAX_EVOLUTION_N)
    k = int(k)
    if k < 1:
        raise RejectedInputError("k must be >= 1")
    return np.linalg.matrix_power(trotter_step(n, t / k), k)


def trotter_error_exact(n: int, t: float, k: int) -> float:
    """Spectral norm of ``exp(-iHt) - trotter_product``; no phase is quotiented."""
    diff = exact_evolution(n, t) - trotter_product(n, t, k)
    return float(np.linalg.norm(diff, 2))


def commutator_bounds(n: int) -> tuple[int, int]:
    """Upper bounds ``(C1, C2)`` on ``||[B,[B,A]]||`` and ``||[A,[A,B]]||``.

    ``A = -sum X_j`` and ``B = -sum Z_j Z_{j+1}``.  Expanding the nested
    commutators in Pauli strings: ``[Z_i Z_{i+1}, X_j]`` is nonzero only for
    ``j in {i, i+1}`` and gives ``2i Y_i Z_{i+1}`` or ``2i Z_i Y_{i+1}``;
    commuting once more with the bond terms and collecting equal strings
    leaves coefficient l1-norms ``16N - 24`` and ``16(N - 1)``.  Each string
    has unit norm, so these bound the spectral norms.
    """
    n = int(n)
    if n < 2:
        return 0, 0
    return 16 * n - 24, 16 * (n - 1)


def trotter_error_bound(n: int, t: float, k: int) -> float:
    """``t^3/k^2 * (C1/12 + C2/24)``: second-order splitting bound, x-layer outside."""
    k = int(k)
    if k < 1:
        raise RejectedInputError("k must be >= 1")
    c1, c2 = commutator_bounds(n)
    return abs(t) ** 3 / k**2 * (c1 / 12 + c2 / 24)


def trotter_error(n: int, t: float, k: int, mode: ErrorMode = "bound") -> float:
    if mode == "bound":
        return trotter_error_bound(n, t, k)
    if mode == "exact":
        return trotter_error_exact(n, t, k)
    raise RejectedInputError(f"unknown Trotter error mode {mode!r}")


def default_error_mode(n: int) -> ErrorMode:
    return "exact" if n <= MAX_EVOLUTION_N else "bound"


def solve_k0(
    n: int,
    m_bits: int,
    tau: float,
    mode: ErrorMode | None = None,
    cap: int = DEFAULT_K0_CAP,
) -> int:
    """Smallest ``k0 >= 1`` with Trotter error at ``(tau, k0)`` below ``2^-M``.

    Doubling finds a feasible bracket, bisection narrows it.  In exact mode a
    short downward scan below the bisection result guards against the small
    non-monotone wiggles of the true error at low ``k``.
    """
    if int(m_bits) < 1:
        raise RejectedInputError("M must be >= 1")
    mode = mode or default_error_mode(n)
    if mode == "exact" and n > MAX_EVOLUTION_N:
        raise ResourceLimitError(f"exact Trotter error needs N <= {MAX_EVOLUTION_N}")
    target = 2.0 ** -int(m_bits)

    def ok(k: int) -> bool:
        return trotter_error(n, tau, k, mode) < target

    if ok(1):
        return 1
    lo, hi = 1, 2
    while not ok(hi):
        lo, hi = hi, hi * 2
        if lo >= cap:
            raise ResourceLimitError(f"Trotter number exceeds cap {cap} for M={m_bits}")
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if ok(mid):
            hi = mid
        else:
            lo = mid
    if mode == "exact":
        k = hi - 1
        while k >= 1 and k > hi // 2 and ok(k):
            hi = k
            k -= 1
    if hi > cap:
        raise ResourceLimitError(f"Trotter number {hi} exceeds cap {cap} for M={m_bits}")
    return hi


@dataclass(frozen=True)
class TrotterPlan:
    """Trotter schedule for the controlled ``U(2^m tau)`` of bit index ``m``."""

    m: int
    tau: float
    k0: int

    @property
    def k(self) -> int:
        return 2**self.m * self.k0

    @property
    def theta(self) -> float:
        return 2**self.m * self.tau / self.k
