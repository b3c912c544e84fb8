"""Single-qubit gate algebra over 2x2 complex matrices.

Conventions used throughout the package:

* A gate sequence is listed in circuit order: ``gates[0]`` is applied first,
  so the matrix of ``(g0, g1, ..., gn)`` is ``G_n @ ... @ G_1 @ G_0``.
* Inverse gates are spelled ``Sdg`` and ``Tdg``; ``S†``/``T†`` are accepted
  on input and normalized.
* Distances between unitaries ignore global phase (see :func:`dist`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .errors import RejectedInputError

UNITARY_ATOL = 1e-12

_SQ2 = 1.0 / math.sqrt(2.0)
_W = complex(math.cos(math.pi / 4), math.sin(math.pi / 4))

_MATRICES = {
    "I": np.array([[1, 0], [0, 1]], dtype=complex),
    "H": np.array([[_SQ2, _SQ2], [_SQ2, -_SQ2]], dtype=complex),
    "S": np.array([[1, 0], [0, 1j]], dtype=complex),
    "Sdg": np.array([[1, 0], [0, -1j]], dtype=complex),
    "T": np.array([[1, 0], [0, _W]], dtype=complex),
    "Tdg": np.array([[1, 0], [0, _W.conjugate()]], dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}
for _m in _MATRICES.values():
    _m.setflags(write=False)

LABELS = tuple(_MATRICES)
PAULIS = frozenset({"I", "X", "Y", "Z"})

_ALIASES = {
    "S†": "Sdg",
    "T†": "Tdg",
    "SDG": "Sdg",
    "TDG": "Tdg",
    "S_DAG": "Sdg",
    "T_DAG": "Tdg",
}

_DAGGER = {"Sdg": "S", "S": "Sdg", "Tdg": "T", "T": "Tdg"}

# diagonal gates as powers of T: diag(1, exp(i*pi*k/4))
_T_POWER = {"I": 0, "T": 1, "S": 2, "Z": 4, "Sdg": 6, "Tdg": 7}
_T_POWER_WORD = {
    0: (),
    1: ("T",),
    2: ("S",),
    3: ("Z", "Tdg"),
    4: ("Z",),
    5: ("Z", "T"),
    6: ("Sdg",),
    7: ("Tdg",),
}

# Surface-code cycles per gate, per unit code distance.
COST_T = 11.25
COST_S = 10.0
COST_H = 2.5


def canonical_label(label: str) -> str:
    if label in _MATRICES:
        return label
    key = str(label).strip()
    if key in _MATRICES:
        return key
    alias = _ALIASES.get(key.upper())
    if alias is not None:
        return alias
    upper = key.upper()
    if upper in _MATRICES:
        return upper
    raise RejectedInputError(f"unknown gate label {label!r}; expected one of {', '.join(LABELS)}")


def basis_gate(label: str) -> np.ndarray:
    """Return a fresh copy of the standard matrix for ``label``."""
    return _MATRICES[canonical_label(label)].copy()


def rz(theta: float) -> np.ndarray:
    """``diag(exp(-i theta/2), exp(i theta/2))``."""
    theta = _finite(theta)
    half = 0.5 * theta
    return np.array(
        [[complex(math.cos(half), -math.sin(half)), 0], [0, complex(math.cos(half), math.sin(half))]],
        dtype=complex,
    )


def rx(theta: float) -> np.ndarray:
    theta = _finite(theta)
    c, s = math.cos(0.5 * theta), math.sin(0.5 * theta)
    return np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)


def ry(theta: float) -> np.ndarray:
    theta = _finite(theta)
    c, s = math.cos(0.5 * theta), math.sin(0.5 * theta)
    return np.array([[c, -s], [s, c]], dtype=complex)


def _finite(theta) -> float:
    try:
        value = float(theta)
    except (TypeError, ValueError) as exc:
        raise RejectedInputError(f"rotation angle must be a real number, got {theta!r}") from exc
    if not math.isfinite(value):
        raise RejectedInputError(f"rotation angle must be finite, got {theta!r}")
    return value


def is_unitary(u: np.ndarray, atol: float = UNITARY_ATOL) -> bool:
    u = np.asarray(u)
    if u.shape != (2, 2) or not np.all(np.isfinite(u)):
        return False
    err = np.max(np.abs(u @ u.conj().T - np.eye(2)))
    return bool(err <= atol and abs(abs(np.linalg.det(u)) - 1.0) <= atol)


def check_unitary(u: np.ndarray, atol: float = UNITARY_ATOL, name: str = "matrix") -> np.ndarray:
    u = np.asarray(u, dtype=complex)
    if not is_unitary(u, atol):
        raise RejectedInputError(f"{name} is not a 2x2 unitary within {atol:g}")
    return u


def to_su2(u: np.ndarray) -> np.ndarray:
    """Divide out ``sqrt(det u)``; the result is in SU(2) up to an overall sign."""
    u = np.asarray(u, dtype=complex)
    det = u[..., 0, 0] * u[..., 1, 1] - u[..., 0, 1] * u[..., 1, 0]
    return u / np.sqrt(det)[..., None, None]


def dist(a: np.ndarray, b: np.ndarray) -> np.ndarray | float:
    """Global-phase-invariant spectral distance ``min_phi ||a - e^{i phi} b||``.

    For 2x2 unitaries with ``a^dag b`` having eigenphases separated by
    ``delta`` (reduced to ``[0, pi]``) the minimum is ``2 sin(delta / 4)``.
    The half-angle is computed from the scalar and vector parts of the SU(2)
    representative, which keeps full relative precision near zero.
    Broadcasts over leading axes.
    """
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    w = to_su2(np.swapaxes(a.conj(), -1, -2) @ b)
    scalar = np.abs(0.5 * (w[..., 0, 0] + w[..., 1, 1]).real)
    # anti-Hermitian part of an SU(2) element is -i sin(h) n.sigma
    vec_sq = (
        (0.5 * (w[..., 0, 0] - w[..., 1, 1]).imag) ** 2
        + np.abs(0.5 * (w[..., 0, 1] - w[..., 1, 0].conj())) ** 2
    )
    half = np.arctan2(np.sqrt(vec_sq), scalar)
    out = 2.0 * np.sin(0.5 * half)
    return float(out) if np.ndim(out) == 0 else out


class GateCounts(NamedTuple):
    n_t: int
    n_s: int
    n_h: int

    @property
    def total(self) -> int:
        return self.n_t + self.n_s + self.n_h

    def weighted(self, d: float = 1.0) -> float:
        """Surface-code cycles for these counts at code distance ``d``."""
        return COST_T * d * self.n_t + COST_S * d * self.n_s + COST_H * d * self.n_h


def count_gates(gates: Iterable[str]) -> GateCounts:
    n_t = n_s = n_h = 0
    for g in gates:
        if g in ("T", "Tdg"):
            n_t += 1
        elif g in ("S", "Sdg"):
            n_s += 1
        elif g == "H":
            n_h += 1
    return GateCounts(n_t, n_s, n_h)


@dataclass(frozen=True)
class GateSeq:
    """Ordered gate labels (circuit order) with their Clifford+T counts."""

    gates: tuple[str, ...] = ()
    counts: GateCounts = field(default=None, compare=False)  # type: ignore[assignment]

    def __post_init__(self):
        gates = tuple(canonical_label(g) for g in self.gates)
        object.__setattr__(self, "gates", gates)
        object.__setattr__(self, "counts", count_gates(gates))

    def __len__(self) -> int:
        return len(self.gates)

    def __add__(self, other: "GateSeq") -> "GateSeq":
        return GateSeq(self.gates + other.gates)

    @property
    def cost(self) -> float:
        """Cycle cost at unit distance; the net's tie-break weight."""
        return self.counts.weighted(1.0)

    def to_string(self) -> str:
        return " ".join(self.gates)

    @classmethod
    def from_string(cls, text: str) -> "GateSeq":
        return cls(tuple(text.split()))


def normalize_counts(seq: GateSeq | Sequence[str]) -> GateSeq:
    """Recompute counts from labels: T/Tdg -> N_T, S/Sdg -> N_S, H -> N_H, Paulis free."""
    gates = seq.gates if isinstance(seq, GateSeq) else tuple(seq)
    return GateSeq(gates)


def adjoint(seq: GateSeq) -> GateSeq:
    return GateSeq(tuple(_DAGGER.get(g, g) for g in reversed(seq.gates)))


def simplify(seq: GateSeq | Sequence[str]) -> GateSeq:
    """Exact peephole rewrite: merge runs of diagonal gates, cancel ``H H``.

    A run of diagonal gates is a power ``T^k``; it is rewritten to at most one
    non-Pauli gate (``T^2 -> S``, ``T^3 -> Z Tdg`` and so on).  The rewrite
    preserves the matrix exactly, global phase included.
    """
    gates = seq.gates if isinstance(seq, GateSeq) else tuple(canonical_label(g) for g in seq)
    stack: list = []  # entries: int (a T power) or a label
    for g in gates:
        k = _T_POWER.get(g)
        if k is not None:
            if stack and isinstance(stack[-1], int):
                k = (stack.pop() + k) % 8
            if k:
                stack.append(k)
        elif g == "H" and stack and stack[-1] == "H":
            stack.pop()
        else:
            stack.append(g)
    out: list[str] = []
    for item in stack:
        if isinstance(item, int):
            out.extend(_T_POWER_WORD[item])
        else:
            out.append(item)
    return GateSeq(tuple(out))


_X_CONJ = {"H": ("Z", "H", "Z"), "T": ("Tdg",), "Tdg": ("T",), "S": ("Sdg",), "Sdg": ("S",)}


def x_conjugate(seq: GateSeq) -> GateSeq:
    """Sequence for ``X U X`` up to global phase, with identical counts.

    Uses ``X T X ~ Tdg``, ``X S X ~ Sdg`` and ``X H X ~ Z H Z``.
    """
    out: list[str] = []
    for g in seq.gates:
        out.extend(_X_CONJ.get(g, (g,)))
    return simplify(out)


_LABEL_INDEX = {g: i for i, g in enumerate(LABELS)}
_STACKED = np.stack([_MATRICES[g] for g in LABELS])


def seq_to_matrix(seq: GateSeq | Sequence[str]) -> np.ndarray:
    """Ordered product of a gate sequence (index 0 applied first).

    Multiplies by pairwise tree reduction, which is fast for long sequences
    and keeps rounding growth logarithmic in the length.
    """
    gates = seq.gates if isinstance(seq, GateSeq) else tuple(canonical_label(g) for g in seq)
    if not gates:
        return np.eye(2, dtype=complex)
    mats = _STACKED[[_LABEL_INDEX[g] for g in gates]]
    while len(mats) > 1:
        if len(mats) % 2:
            mats = np.concatenate([mats, np.eye(2, dtype=complex)[None]])
        mats = mats[1::2] @ mats[0::2]
    return mats[0].copy()
