"""Surface-code resource model for the TIM phase-estimation circuit.

Pipeline: Trotter number -> SK compilation of every rotation angle ->
smallest odd code distance meeting the failure budget -> distillation
level and factory footprint -> physical qubits and wall-clock time.
"""

from __future__ import annotations

import math
from functools import lru_cache
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Literal, Sequence

from . import tim
from .errors import FtqcError, InfeasibleError, RejectedInputError, with_stage
from .gates import COST_H, COST_S, COST_T, GateCounts
from .sk import BaseNet, CompiledRotation, compile_rz

P_TH = 0.0057
T_PHYS = 20e-9
STEPS_PER_CYCLE = 8
PL_PREFACTOR = 0.043
D_CAP = 999
DISTILL_FACTOR = 35
DISTILL_MAX_P = 35**-0.5
PHYS_PER_LOGICAL_D2 = Fraction(25, 2)
UNIT_TIME_D = Fraction(5, 4)  # one unit time = 1.25 d cycles

CyclesForm = Literal["sum", "half"]

SURFACE_CSV_COLUMNS = (
    "N", "M", "r", "p_ratio", "k0", "N_T", "N_S", "N_H", "d", "S_R", "K", "Q",
    "distill_level", "factory_logical_qubits", "physical_qubits", "wall_seconds",
)


@dataclass(frozen=True)
class TimProblem:
    """Inputs of one surface-code estimate; ``tau=None`` means ``pi/(2N)``."""

    N: int
    M: int
    tau: float | None = None
    r: float = 1.0
    p_ratio: float = 0.1
    p_th: float = P_TH
    t_phys: float = T_PHYS
    p_inject: float | None = None
    strict_sk_budget: bool = False
    cycles_form: CyclesForm = "sum"

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 2:
            raise RejectedInputError(f"N must be an integer >= 2, got {self.N}")
        if int(self.M) != self.M or self.M < 1:
            raise RejectedInputError(f"M must be an integer >= 1, got {self.M}")
        if not 0.0 < self.r <= 1.0:
            raise RejectedInputError(f"r must lie in (0, 1], got {self.r}")
        if not 0.0 < self.p_ratio < 1.0:
            raise RejectedInputError(f"p_ratio must lie in (0, 1), got {self.p_ratio}")
        if self.tau is not None and not (math.isfinite(self.tau) and self.tau > 0):
            raise RejectedInputError(f"tau must be positive, got {self.tau}")
        if not (self.p_th > 0 and self.t_phys > 0):
            raise RejectedInputError("p_th and t_phys must be positive")
        if self.p_inject is not None and not 0.0 < self.p_inject < 1.0:
            raise RejectedInputError(f"p_inject must lie in (0, 1), got {self.p_inject}")
        if self.cycles_form not in ("sum", "half"):
            raise RejectedInputError(f"unknown cycles_form {self.cycles_form!r}")

    @property
    def tau_value(self) -> float:
        return tim.default_tau(self.N) if self.tau is None else float(self.tau)

    @property
    def p_in(self) -> float:
        return self.p_ratio * self.p_th if self.p_inject is None else self.p_inject


@dataclass
class SurfaceReport:
    d: int
    k0: int
    counts: GateCounts
    S_R: float
    K: float
    Q: int
    distill_level: int
    factory_logical_qubits: int
    total_logical_qubits: int
    physical_qubits: int
    physical_qubits_simplified: int
    wall_seconds: float
    p_L: float
    eps_sk: float = 0.0
    sk_depth: int = 0
    problem: TimProblem | None = field(default=None, repr=False)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["counts"] = {"N_T": self.counts.n_t, "N_S": self.counts.n_s, "N_H": self.counts.n_h}
        if self.problem is not None:
            out["problem"] = asdict(self.problem)
            out["problem"]["tau"] = self.problem.tau_value
        return out

    def csv_row(self) -> dict:
        p = self.problem
        return {
            "N": p.N, "M": p.M, "r": p.r, "p_ratio": p.p_ratio, "k0": self.k0,
            "N_T": self.counts.n_t, "N_S": self.counts.n_s, "N_H": self.counts.n_h,
            "d": self.d, "S_R": self.S_R, "K": self.K, "Q": self.Q,
            "distill_level": self.distill_level,
            "factory_logical_qubits": self.factory_logical_qubits,
            "physical_qubits": self.physical_qubits, "wall_seconds": self.wall_seconds,
        }


def logical_error_rate(p_ratio: float, d: int) -> float:
    """``0.043 (p/p_th)^((d+1)/2)`` per logical qubit per cycle."""
    if not 0.0 < p_ratio < 1.0:
        raise RejectedInputError(f"p/p_th must lie in (0, 1) for the scaling law, got {p_ratio}")
    if d < 1:
        raise RejectedInputError(f"d must be >= 1, got {d}")
    return PL_PREFACTOR * p_ratio ** ((d + 1) / 2)


def s_r(counts: GateCounts | Sequence[int], d: float) -> float:
    """Cycles for one compiled rotation at distance ``d`` (reals, no rounding)."""
    n_t, n_s, n_h = counts
    if min(n_t, n_s, n_h) < 0:
        raise RejectedInputError("gate counts must be non-negative")
    return COST_T * d * n_t + COST_S * d * n_s + COST_H * d * n_h


def total_cycles_explicit(M: int, k0: int, S_R: float, d: float) -> float:
    """Term-by-term sum over bit indices ``m = 0..M-1``."""
    _check_mk(M, k0)
    total = 0.0
    for m in range(M):
        total += 2**m * k0 * (9 * S_R + 30 * d) + 3 * S_R + 10 * d + S_R
    return total


def total_cycles(M: int, k0: int, S_R: float, d: float, form: CyclesForm = "sum") -> float:
    """Total surface-code cycles ``K`` of the circuit.

    ``form="sum"`` is the closed form of the per-bit sum,
    ``(2^M - 1) k0 (9 S_R + 30 d) + M (4 S_R + 10 d)``.  ``form="half"``
    uses the leading factor ``2^(M-1)`` instead of ``2^M - 1``; it is a
    comparison mode only and undercounts the sum by about 2x.
    """
    _check_mk(M, k0)
    lead = (2.0**M - 1.0) if form == "sum" else 2.0 ** (M - 1)
    return lead * k0 * (9 * S_R + 30 * d) + M * (4 * S_R + 10 * d)


def _check_mk(M, k0):
    if M < 1 or k0 < 1:
        raise RejectedInputError(f"need M >= 1 and k0 >= 1, got M={M}, k0={k0}")


def logical_qubits(N: int) -> int:
    """``3(N + 2)``: register, ancilla, CNOT patches and T/S helper qubits."""
    if N < 1:
        raise RejectedInputError("N must be >= 1")
    return 3 * (N + 2)


def distillation_level(p_in: float, target: float) -> tuple[int, float]:
    """Smallest number of 15-to-1 rounds ``L`` with ``e_L <= target``.

    ``e_0 = p_in`` and ``e_{L+1} = 35 e_L^3``.
    """
    if not 0.0 <= p_in < DISTILL_MAX_P:
        raise RejectedInputError(
            f"injected error {p_in} must be below 35^-1/2 ~ 0.169 for distillation to converge"
        )
    if target <= 0:
        raise RejectedInputError("distillation target must be positive")
    level, err = 0, p_in
    while err > target:
        err = DISTILL_FACTOR * err**3
        level += 1
        if level > 64:  # only reachable when err underflows towards a denormal target
            raise InfeasibleError(f"distillation cannot reach target {target:g}")
    return level, err


@dataclass(frozen=True)
class FactoryRequirements:
    rate: Fraction
    volume_rate: float
    factory_logical_qubits: int
    qubits_exact: Fraction


def factory_requirements(N: int, d: int | None = None, level: int = 2) -> FactoryRequirements:
    """Magic-state factory size for ``N`` T gates every 13.75d cycles.

    Demand is ``N / 11`` states per unit time (a T gate plus an H gate take
    ``13.75 d = 11 * 1.25 d`` cycles).  A level-2 factory needs volume
    ``192/6 + 192*15/(8*3)`` per state per unit time, a single round only the
    first term (an extrapolation of the same bookkeeping).  Two units of
    volume per unit time occupy one double-defect logical qubit.  ``d`` does
    not enter: everything is per unit time.
    """
    if N < 1:
        raise RejectedInputError("N must be >= 1")
    rate = Fraction(N, 11)
    if level == 0:
        return FactoryRequirements(rate, 0.0, 0, Fraction(0))
    if level == 1:
        per_state = Fraction(192, 6)
    elif level == 2:
        per_state = Fraction(192, 6) + Fraction(192 * 15, 8 * 3)
    else:
        raise RejectedInputError(f"factory model covers distillation levels 0..2, got {level}")
    volume_per_n = per_state / 11
    if level == 2:
        # volume per spin is carried at two decimals: 152/11 = 13.818.. -> 13.82
        volume_per_n = Fraction(round(float(volume_per_n) * 100), 100)
    volume = volume_per_n * N
    qubits = volume / 2
    return FactoryRequirements(rate, float(volume), math.ceil(qubits), qubits)


def physical_qubits(N: int, d: int, level: int = 2) -> int:
    """``ceil((3(N+2) + factory) * 12.5 d^2)`` with the exact factory fraction."""
    factory = factory_requirements(N, d, level).qubits_exact
    return math.ceil((logical_qubits(N) + factory) * PHYS_PER_LOGICAL_D2 * d * d)


def physical_qubits_simplified(N: int, d: int) -> int:
    """``9.91 N * 12.5 d^2``: drops the constant 6 of ``3(N+2)``."""
    return math.ceil(Fraction(991, 100) * N * PHYS_PER_LOGICAL_D2 * d * d)


def wall_time(K: float, t_phys: float = T_PHYS) -> float:
    if K < 0:
        raise RejectedInputError("K must be non-negative")
    return K * STEPS_PER_CYCLE * t_phys


# -- angle compilation shared with the concatenated-code model -----------------


def sk_budget(M: int, k0: int, N: int = 1, strict: bool = False) -> float:
    """Per-rotation SK precision ``2^-M / k0`` (optionally split over 9N rotations)."""
    eps = 2.0**-M / k0
    return eps / (9 * N) if strict else eps


def required_angles(M: int, tau: float, k0: int) -> list[float]:
    """R_z angles of the controlled Trotter step and the phase-feedback rotations.

    A controlled step ``U_x(th) U_zz(2 th) U_x(th)`` with ``th = tau / k0``
    uses ``R_z(+-th/2)`` (controlled ``U_x``) and ``R_z(+-th)`` (controlled
    ``U_zz``).  Feedback uses ``R_z(-2 pi / 2^j)`` for ``j = 1..M``.
    """
    th = tau / k0
    trotter = [th / 2, -th / 2, th, -th]
    feedback = [-2.0 * math.pi / 2**j for j in range(1, M + 1)]
    return trotter + feedback


@lru_cache(maxsize=4096)
def _compile_cached(angle: float, eps: float, net: BaseNet, max_depth: int | None) -> CompiledRotation:
    # sweeps over r recompile identical (angle, eps) pairs; the net is immutable
    kwargs = {} if max_depth is None else {"max_depth": max_depth}
    return compile_rz(angle, eps, net, **kwargs)


def compile_worst_rotation(
    angles: Sequence[float], eps: float, net: BaseNet, max_depth: int | None = None
) -> tuple[CompiledRotation, list[CompiledRotation]]:
    """Compile every angle; return the costliest one (weighted at ``d = 1``) and all."""
    try:
        compiled = [_compile_cached(float(a), float(eps), net, max_depth) for a in angles]
    except FtqcError as exc:
        raise with_stage(exc, "sk_compile")
    worst = max(compiled, key=lambda c: (c.counts.weighted(1.0), c.counts.total))
    return worst, compiled


def budget_ok(p_ratio: float, d: int, M: int, k0: int, counts: GateCounts, Q: int, r: float,
              form: CyclesForm = "sum") -> bool:
    p_l = logical_error_rate(p_ratio, d)
    return p_l * total_cycles(M, k0, s_r(counts, d), d, form) * Q <= r


def solve_distance(
    problem: TimProblem, k0: int, counts: GateCounts, d_cap: int = D_CAP
) -> tuple[int, float, float]:
    """Smallest odd ``d >= 3`` with ``p_L(d) K(d) Q <= r``; returns ``(d, K, p_L)``."""
    Q = logical_qubits(problem.N)
    for d in range(3, d_cap + 1, 2):
        K = total_cycles(problem.M, k0, s_r(counts, d), d, problem.cycles_form)
        p_l = logical_error_rate(problem.p_ratio, d)
        if p_l * K * Q <= problem.r:
            return d, K, p_l
    raise with_stage(
        InfeasibleError(
            f"no odd d <= {d_cap} satisfies p_L*K*Q <= r={problem.r} "
            f"(p_ratio={problem.p_ratio}, M={problem.M}, k0={k0})"
        ),
        "distance",
    )


def estimate_surface(problem: TimProblem, net: BaseNet, max_depth: int | None = None) -> SurfaceReport:
    N, M = problem.N, problem.M
    tau = problem.tau_value
    try:
        k0 = tim.solve_k0(N, M, tau, tim.default_error_mode(N))
    except FtqcError as exc:
        raise with_stage(exc, "trotter")
    eps = sk_budget(M, k0, N, problem.strict_sk_budget)
    worst, _ = compile_worst_rotation(required_angles(M, tau, k0), eps, net, max_depth)
    counts = worst.counts
    d, K, p_l = solve_distance(problem, k0, counts)
    Q = logical_qubits(N)
    try:
        level, _ = distillation_level(problem.p_in, problem.r / (K * Q))
        factory = factory_requirements(N, d, level)
    except FtqcError as exc:
        raise with_stage(exc, "distillation")
    phys = math.ceil((Q + factory.qubits_exact) * PHYS_PER_LOGICAL_D2 * d * d)
    return SurfaceReport(
        d=d,
        k0=k0,
        counts=counts,
        S_R=s_r(counts, d),
        K=K,
        Q=Q,
        distill_level=level,
        factory_logical_qubits=factory.factory_logical_qubits,
        total_logical_qubits=Q + factory.factory_logical_qubits,
        physical_qubits=phys,
        physical_qubits_simplified=physical_qubits_simplified(N, d),
        wall_seconds=wall_time(K, problem.t_phys),
        p_L=p_l,
        eps_sk=eps,
        sk_depth=worst.depth,
        problem=problem,
    )
