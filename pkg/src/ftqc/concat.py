"""Concatenated Steane-code comparison model.

Cycle count of the same phase-estimation circuit when every logical gate
is one time step, the rule deciding whether error correction is needed at
all, the concatenation level, and the footprint/time figures.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

from . import tim
from .errors import FtqcError, RejectedInputError, with_stage
from .sk import BaseNet
from .surface import compile_worst_rotation, required_angles, sk_budget

P_PHYS = 1e-7
EPS_THRESHOLD = 3.1e-6
T_PHYS = 1e-5
QUBITS_PER_LEVEL = 21
# Calibration constants (not derived): see ConcatConfig.
TAU = 1.0
LEVEL_OVERHEAD_BASE = 1.2

CONCAT_CSV_COLUMNS = (
    "N", "M", "k0", "ec_needed", "level", "S_R", "K", "physical_qubits", "wall_seconds",
)


@dataclass(frozen=True)
class ConcatConfig:
    """Hardware and calibration parameters of the concatenated-code model.

    ``tau`` and ``level_overhead_base`` are calibration constants.  ``tau``
    sets the Trotter number and therefore ``K``; its default puts the onset
    of error correction for ``N = 100`` at ``M = 5``.  The overhead base is
    the physical-step multiplier per concatenation level; its default puts
    the ``M = 10`` runtime near 10^2 days.
    """

    p_phys: float = P_PHYS
    eps_threshold: float = EPS_THRESHOLD
    t_phys: float = T_PHYS
    q_logical: int | None = None
    level_overhead_base: float = LEVEL_OVERHEAD_BASE
    tau: float = TAU

    def __post_init__(self):
        for name in ("p_phys", "eps_threshold", "t_phys", "level_overhead_base", "tau"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise RejectedInputError(f"{name} must be positive, got {value}")
        if self.q_logical is not None and self.q_logical < 1:
            raise RejectedInputError("q_logical must be >= 1")

    def logical_qubits(self, n: int) -> int:
        return 4 * n if self.q_logical is None else int(self.q_logical)


@dataclass
class ConcatReport:
    N: int
    M: int
    k0: int
    K: float
    ec_needed: bool
    level: int
    S_R: int
    physical_qubits: int
    wall_seconds: float
    K_no_ec: float = 0.0
    sk_depth: int = 0
    config: ConcatConfig | None = field(default=None, repr=False)

    def to_dict(self) -> dict:
        out = asdict(self)
        if self.config is not None:
            out["config"] = asdict(self.config)
        return out

    def csv_row(self) -> dict:
        return {
            "N": self.N, "M": self.M, "k0": self.k0, "ec_needed": self.ec_needed,
            "level": self.level, "S_R": self.S_R, "K": self.K,
            "physical_qubits": self.physical_qubits, "wall_seconds": self.wall_seconds,
        }


def total_cycles_concat(M: int, k0: int, S_R: float) -> float:
    """``(2^M - 1) k0 (9 S_R + 11) + M (4 S_R + 4)`` logical time steps."""
    if M < 1 or k0 < 1:
        raise RejectedInputError(f"need M >= 1 and k0 >= 1, got M={M}, k0={k0}")
    return (2.0**M - 1.0) * k0 * (9 * S_R + 11) + M * (4 * S_R + 4)


def ec_needed(K: float, Q: int, p_phys: float) -> bool:
    """Error correction is needed when the per-gate budget ``1/(KQ)`` is below ``p_phys``."""
    if K <= 0 or Q <= 0:
        raise RejectedInputError("K and Q must be positive")
    return 1.0 / (K * Q) < p_phys


def level_error(p_phys: float, eps_threshold: float, level: int) -> float:
    return eps_threshold * (p_phys / eps_threshold) ** (2**level)


def concat_level(p_phys: float, eps_threshold: float, target: float, cap: int = 16) -> int:
    """Smallest ``L >= 1`` with ``eps_th (p/eps_th)^(2^L) <= target``."""
    if not 0 < p_phys < eps_threshold:
        raise RejectedInputError(
            f"p_phys={p_phys} must be below the threshold {eps_threshold} for concatenation to help"
        )
    if target <= 0:
        raise RejectedInputError("target must be positive")
    for level in range(1, cap + 1):
        if level_error(p_phys, eps_threshold, level) <= target:
            return level
    raise RejectedInputError(f"target {target:g} unreachable within {cap} levels")


def estimate_concat(
    N: int,
    M: int,
    tau: float | None = None,
    config: ConcatConfig | None = None,
    net: BaseNet | None = None,
    max_depth: int | None = None,
) -> ConcatReport:
    """Cycles, level, qubits and runtime under the concatenated code.

    Without error correction rotations are native (``S_R = 1``).  When the
    per-gate budget at that ``K`` is tighter than ``p_phys``, rotations are
    SK-compiled at ``2^-M / k0``, ``S_R`` becomes the longest sequence's
    H/S/T count, ``K`` is recomputed and the level is chosen for ``1/(KQ)``.
    """
    config = config or ConcatConfig()
    if int(N) != N or N < 2 or int(M) != M or M < 1:
        raise RejectedInputError(f"need integer N >= 2 and M >= 1, got N={N}, M={M}")
    tau = config.tau if tau is None else float(tau)
    try:
        k0 = tim.solve_k0(N, M, tau, tim.default_error_mode(N))
    except FtqcError as exc:
        raise with_stage(exc, "trotter")
    Q = config.logical_qubits(N)
    k_plain = total_cycles_concat(M, k0, 1)
    if not ec_needed(k_plain, Q, config.p_phys):
        return ConcatReport(
            N=N, M=M, k0=k0, K=k_plain, ec_needed=False, level=0, S_R=1,
            physical_qubits=Q, wall_seconds=k_plain * config.t_phys,
            K_no_ec=k_plain, config=config,
        )
    if net is None:
        raise RejectedInputError("error correction needed: a base net is required for SK compilation")
    worst, _ = compile_worst_rotation(required_angles(M, tau, k0), sk_budget(M, k0), net, max_depth)
    s_r = worst.counts.total
    K = total_cycles_concat(M, k0, s_r)
    try:
        level = concat_level(config.p_phys, config.eps_threshold, 1.0 / (K * Q))
    except FtqcError as exc:
        raise with_stage(exc, "concat_level")
    return ConcatReport(
        N=N, M=M, k0=k0, K=K, ec_needed=True, level=level, S_R=s_r,
        physical_qubits=QUBITS_PER_LEVEL**level * Q,
        wall_seconds=K * config.t_phys * config.level_overhead_base**level,
        K_no_ec=k_plain, sk_depth=worst.depth, config=config,
    )
