"""Solovay-Kitaev synthesis of z rotations over {H, S, T}.

The base approximations live in a :class:`BaseNet`: every distinct product of
generator words up to ``max_len`` letters, deduplicated under :func:`dist`.
Nearest-neighbour lookups are exact: an SU(2) element maps to a unit
quaternion ``q`` (sign ambiguous), and the phase-invariant distance between
two unitaries equals ``min(|q - p|, |q + p|)``, so a k-d tree over the
quaternions answers the query in the package metric directly.
"""

from __future__ import annotations

import json
import logging
import math
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy.spatial import cKDTree

from .errors import ConvergenceError, RejectedInputError, ResourceLimitError
from .gates import (
    GateCounts,
    GateSeq,
    adjoint,
    basis_gate,
    canonical_label,
    check_unitary,
    dist,
    rx,
    ry,
    rz,
    seq_to_matrix,
    simplify,
    to_su2,
    x_conjugate,
)

logger = logging.getLogger(__name__)

NET_FORMAT = "ftqc-base-net"
NET_FORMAT_VERSION = 1

DEFAULT_GENERATORS = ("H", "T")
DEFAULT_MAX_LEN = 16
DEFAULT_DEDUP_TOL = 1e-7
DEFAULT_ENTRY_BUDGET = 1_000_000
DEFAULT_MAX_DEPTH = 12

ALLOWED_GENERATORS = ("H", "S", "Sdg", "T", "Tdg")

# sup over rotation angles in [0, pi] of dist(V, I) / sqrt(dist(U, I)) for the
# balanced commutator below; the ratio tends to 1/sqrt(2) for small angles and
# peaks at ~0.806 for a pi rotation.
C_GC = 0.81

DEFAULT_MAX_LENGTH = 4_000_000
_GROWTH = 5  # sequence length ratio between consecutive depths


def quaternion(u: np.ndarray) -> np.ndarray:
    """Unit quaternion(s) of the SU(2) representative, sign fixed so q[0] >= 0."""
    su = to_su2(u)
    a = su[..., 0, 0]
    b = su[..., 1, 0]
    q = np.stack([a.real, a.imag, b.real, b.imag], axis=-1)
    sign = np.where(q[..., :1] < 0, -1.0, 1.0)
    return q * sign


def _seq_key(seq: GateSeq) -> tuple:
    return (seq.cost, len(seq), seq.gates)


class BaseNet:
    """Immutable epsilon-net of short gate sequences with exact nearest lookup."""

    def __init__(
        self,
        generator_set: Sequence[str],
        max_len: int,
        dedup_tol: float,
        seqs: Sequence[GateSeq],
    ):
        self.generator_set = tuple(generator_set)
        self.max_len = int(max_len)
        self.dedup_tol = float(dedup_tol)
        self.seqs = tuple(seqs)
        if not self.seqs:
            raise RejectedInputError("a base net needs at least one entry")
        self.matrices = np.stack([seq_to_matrix(s) for s in self.seqs])
        self.matrices.setflags(write=False)
        self._quats = quaternion(self.matrices)
        self._tree = cKDTree(self._quats)

    def __len__(self) -> int:
        return len(self.seqs)

    @property
    def entries(self) -> list[tuple[GateSeq, np.ndarray]]:
        return list(zip(self.seqs, self.matrices))

    def nearest(self, u: np.ndarray, k: int = 4) -> tuple[GateSeq, float]:
        """Closest entry to ``u``; ties broken by length then label order."""
        q = quaternion(np.asarray(u, dtype=complex))
        k = min(k, len(self))
        idx = set()
        for sign in (1.0, -1.0):
            _, found = self._tree.query(sign * q, k=k)
            idx.update(np.atleast_1d(found).tolist())
        idx = sorted(idx)
        ds = dist(self.matrices[idx], u)
        ds = np.atleast_1d(ds)
        best = float(np.min(ds))
        ties = [i for i, d in zip(idx, ds) if d <= best + 1e-12]
        pick = min(ties, key=lambda i: (len(self.seqs[i]), self.seqs[i].gates))
        return self.seqs[pick], float(dist(self.matrices[pick], u))

    def covering_radius_estimate(self, samples: int = 2000, seed: int = 0) -> float:
        """Largest nearest-entry distance over Haar-random probes."""
        rng = np.random.default_rng(seed)
        q = rng.normal(size=(samples, 4))
        q /= np.linalg.norm(q, axis=1, keepdims=True)
        d1, _ = self._tree.query(q)
        d2, _ = self._tree.query(-q)
        return float(np.max(np.minimum(d1, d2)))

    # -- cache file --------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "format": NET_FORMAT,
            "format_version": NET_FORMAT_VERSION,
            "generator_set": list(self.generator_set),
            "max_len": self.max_len,
            "dedup_tol": self.dedup_tol,
            "entries": [s.to_string() for s in self.seqs],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "BaseNet":
        if data.get("format") != NET_FORMAT:
            raise RejectedInputError("not a base-net cache file")
        if data.get("format_version") != NET_FORMAT_VERSION:
            raise RejectedInputError(
                f"net cache format version {data.get('format_version')} != {NET_FORMAT_VERSION}"
            )
        seqs = [GateSeq.from_string(s) for s in data["entries"]]
        return cls(data["generator_set"], data["max_len"], data["dedup_tol"], seqs)

    def save(self, path: str | os.PathLike) -> Path:
        """Write the cache atomically (temp file + rename)."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(prefix=path.name, suffix=".tmp", dir=path.parent)
        try:
            with os.fdopen(fd, "w") as fh:
                json.dump(self.to_dict(), fh, separators=(",", ":"))
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
        return path

    @classmethod
    def load(cls, path: str | os.PathLike) -> "BaseNet":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def build_net(
    generator_set: Iterable[str] = DEFAULT_GENERATORS,
    max_len: int = DEFAULT_MAX_LEN,
    dedup_tol: float = DEFAULT_DEDUP_TOL,
    entry_budget: int = DEFAULT_ENTRY_BUDGET,
) -> BaseNet:
    """Breadth-first enumeration of generator words up to ``max_len`` letters.

    Words whose product lies within ``dedup_tol`` of an existing entry are
    dropped; when the newcomer is cheaper (unit-distance cycle cost, then
    length, then labels) it takes over the entry.  Each word is stored in its
    :func:`simplify` form, so ``T T`` is kept as ``S``.
    """
    gens = []
    for g in generator_set:
        g = canonical_label(g)
        if g not in ALLOWED_GENERATORS:
            raise RejectedInputError(f"generator {g} not in {ALLOWED_GENERATORS}")
        if g not in gens:
            gens.append(g)
    if not gens:
        raise RejectedInputError("empty generator set")
    if int(max_len) < 1:
        raise RejectedInputError("max_len must be >= 1")
    if not dedup_tol > 0:
        raise RejectedInputError("dedup_tol must be positive")

    gen_mats = {g: basis_gate(g) for g in gens}
    seqs: list[GateSeq] = [GateSeq(())]
    mats = np.eye(2, dtype=complex)[None].copy()
    frontier = np.array([0])

    for level in range(1, int(max_len) + 1):
        if not len(frontier):
            break
        cand_seqs: list[GateSeq] = []
        cand_mats = []
        for g in gens:
            cand_mats.append(gen_mats[g] @ mats[frontier])
            cand_seqs.extend(simplify(seqs[i].gates + (g,)) for i in frontier)
        cand_mats = np.concatenate(cand_mats)
        order = sorted(range(len(cand_seqs)), key=lambda i: _seq_key(cand_seqs[i]))
        cand_seqs = [cand_seqs[i] for i in order]
        cand_mats = cand_mats[order]
        cand_q = quaternion(cand_mats)

        # collisions with entries from earlier levels
        tree = cKDTree(quaternion(mats))
        d_pos, j_pos = tree.query(cand_q, distance_upper_bound=dedup_tol)
        d_neg, j_neg = tree.query(-cand_q, distance_upper_bound=dedup_tol)
        hit = np.where(d_pos <= d_neg, j_pos, j_neg)
        collided = np.minimum(d_pos, d_neg) < dedup_tol
        for i in np.flatnonzero(collided):
            j = int(hit[i])
            if _seq_key(cand_seqs[i]) < _seq_key(seqs[j]):
                seqs[j] = cand_seqs[i]
                mats[j] = cand_mats[i]

        # collisions among this level's newcomers; keep the cheapest of a cluster
        fresh = np.flatnonzero(~collided)
        keep = np.ones(len(fresh), dtype=bool)
        if len(fresh) > 1:
            pts = cand_q[fresh]
            pair_tree = cKDTree(np.concatenate([pts, -pts]))
            n = len(fresh)
            neighbours: dict[int, set[int]] = {}
            for a, b in pair_tree.query_pairs(dedup_tol):
                a, b = a % n, b % n
                if a != b:
                    neighbours.setdefault(a, set()).add(b)
                    neighbours.setdefault(b, set()).add(a)
            for a in sorted(neighbours):  # fresh is already in key order
                if keep[a]:
                    for b in neighbours[a]:
                        if b > a:
                            keep[b] = False
        accepted = fresh[keep]
        start = len(seqs)
        seqs.extend(cand_seqs[i] for i in accepted)
        mats = np.concatenate([mats, cand_mats[accepted]])
        frontier = np.arange(start, len(seqs))
        logger.debug("net level %d: %d new, %d total", level, len(accepted), len(seqs))
        if len(seqs) > entry_budget:
            raise ResourceLimitError(
                f"base net exceeds entry budget {entry_budget} at word length {level}"
            )

    return BaseNet(gens, max_len, dedup_tol, seqs)


def nearest(net: BaseNet, u: np.ndarray) -> tuple[GateSeq, float]:
    return net.nearest(u)


def default_net_cache_path(
    generator_set: Sequence[str] = DEFAULT_GENERATORS,
    max_len: int = DEFAULT_MAX_LEN,
    dedup_tol: float = DEFAULT_DEDUP_TOL,
) -> Path:
    root = Path(os.environ.get("XDG_CACHE_HOME", Path.home() / ".cache")) / "ftqc"
    gens = "-".join(canonical_label(g) for g in generator_set)
    return root / f"net_{gens}_L{int(max_len)}_tol{float(dedup_tol):g}.json"


def load_or_build_net(
    path: str | os.PathLike | None = None,
    *,
    build: bool = True,
    generator_set: Sequence[str] = DEFAULT_GENERATORS,
    max_len: int = DEFAULT_MAX_LEN,
    dedup_tol: float = DEFAULT_DEDUP_TOL,
    entry_budget: int = DEFAULT_ENTRY_BUDGET,
) -> BaseNet:
    """Load the net cache at ``path``; build and persist it if absent and allowed."""
    path = Path(path) if path else default_net_cache_path(generator_set, max_len, dedup_tol)
    if path.exists():
        net = BaseNet.load(path)
        wanted = (tuple(canonical_label(g) for g in generator_set), int(max_len), float(dedup_tol))
        if (net.generator_set, net.max_len, net.dedup_tol) == wanted:
            return net
        if not build:
            return net
        logger.info("net cache %s has different parameters; rebuilding", path)
    elif not build:
        raise FileNotFoundError(
            f"net cache not found at {path} (set net_cache_path or pass --build-net)"
        )
    net = build_net(generator_set, max_len, dedup_tol, entry_budget)
    net.save(path)
    return net


# -- group commutator ----------------------------------------------------------


def _axis_angle(su: np.ndarray) -> tuple[np.ndarray, float]:
    """Rotation axis and angle in [0, pi] of an SU(2) element (sign-normalized)."""
    c = 0.5 * (su[0, 0] + su[1, 1]).real
    if c < 0:
        su = -su
        c = -c
    half_diag = 0.5 * (su[0, 0] - su[1, 1])
    half_off = 0.5 * (su[0, 1] - np.conj(su[1, 0]))
    v = np.array([-half_off.imag, -half_off.real, -half_diag.imag])
    s = float(np.linalg.norm(v))
    angle = 2.0 * math.atan2(s, c)
    axis = v / s if s > 0 else np.array([0.0, 0.0, 1.0])
    return axis, angle


def _rotation(axis: np.ndarray, angle: float) -> np.ndarray:
    nx, ny, nz = axis
    c, s = math.cos(0.5 * angle), math.sin(0.5 * angle)
    return np.array(
        [[c - 1j * s * nz, -1j * s * nx - s * ny], [-1j * s * nx + s * ny, c + 1j * s * nz]],
        dtype=complex,
    )


def _aligning_rotation(src: np.ndarray, dst: np.ndarray) -> np.ndarray:
    """SU(2) element whose adjoint action takes unit vector ``src`` to ``dst``."""
    cross = np.cross(src, dst)
    dot = float(np.clip(np.dot(src, dst), -1.0, 1.0))
    norm = float(np.linalg.norm(cross))
    if norm < 1e-15:
        if dot > 0:
            return np.eye(2, dtype=complex)
        perp = np.cross(src, [1.0, 0.0, 0.0])
        if np.linalg.norm(perp) < 1e-8:
            perp = np.cross(src, [0.0, 1.0, 0.0])
        return _rotation(perp / np.linalg.norm(perp), math.pi)
    return _rotation(cross / norm, math.atan2(norm, dot))


def gc_decompose(u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Balanced group commutator: ``u ~ V W V^dag W^dag`` up to global phase.

    For a rotation by ``theta`` take ``V = Rx(phi)``, ``W = Ry(phi)`` with
    ``sin^2(phi/2) = sin(theta/4)``; their commutator is a rotation by
    ``theta`` about some axis ``m``, and conjugating both factors by the
    rotation taking ``m`` to the axis of ``u`` finishes the job.  Sign
    normalization puts every input angle in ``[0, pi]``, the range where the
    construction is valid, and ``dist(V, I) <= C_GC * sqrt(dist(u, I))``.
    """
    u = check_unitary(u, atol=1e-9, name="gc_decompose input")
    axis, theta = _axis_angle(to_su2(u))
    if not 0.0 <= theta <= math.pi + 1e-12:
        raise RejectedInputError(f"rotation angle {theta} outside [0, pi]")
    if theta == 0.0:
        return np.eye(2, dtype=complex), np.eye(2, dtype=complex)
    phi = 2.0 * math.asin(math.sqrt(math.sin(0.25 * min(theta, math.pi))))
    v = rx(phi)
    w = ry(phi)
    comm = v @ w @ v.conj().T @ w.conj().T
    comm_axis, _ = _axis_angle(comm)
    s = _aligning_rotation(comm_axis, axis)
    return s @ v @ s.conj().T, s @ w @ s.conj().T


# -- recursion ------------------------------------------------------------------


def _sk(u: np.ndarray, depth: int, net: BaseNet, memo: dict) -> tuple[GateSeq, np.ndarray]:
    key = (u.tobytes(), depth)
    hit = memo.get(key)
    if hit is not None:
        return hit
    if depth == 0:
        seq, _ = net.nearest(u)
        out = (seq, seq_to_matrix(seq))
    else:
        prev, prev_m = _sk(u, depth - 1, net, memo)
        v, w = gc_decompose(u @ prev_m.conj().T)
        vs, vm = _sk(v, depth - 1, net, memo)
        ws, wm = _sk(w, depth - 1, net, memo)
        # matrix V W V^dag W^dag U_prev, so U_prev runs first in circuit order
        seq = simplify(prev + adjoint(ws) + adjoint(vs) + ws + vs)
        out = (seq, vm @ wm @ vm.conj().T @ wm.conj().T @ prev_m)
    memo[key] = out
    return out


def sk(u: np.ndarray, depth: int, net: BaseNet) -> tuple[GateSeq, float]:
    """Depth-``depth`` Solovay-Kitaev approximation and its re-verified distance."""
    if int(depth) < 0:
        raise RejectedInputError("depth must be >= 0")
    u = check_unitary(u, atol=1e-9, name="sk target")
    seq, _ = _sk(u, int(depth), net, {})
    return seq, float(dist(u, seq_to_matrix(seq)))


@dataclass(frozen=True)
class CompiledRotation:
    target_angle: float
    seq: GateSeq
    achieved_eps: float
    depth: int

    @property
    def counts(self) -> GateCounts:
        return self.seq.counts

    def verify(self) -> float:
        """Re-multiply the sequence and return its distance to the target."""
        return float(dist(rz(self.target_angle), seq_to_matrix(self.seq)))

    def to_dict(self, include_sequence: bool = False) -> dict:
        out = {
            "angle": self.target_angle,
            "N_T": self.counts.n_t,
            "N_S": self.counts.n_s,
            "N_H": self.counts.n_h,
            "length": len(self.seq),
            "achieved_eps": self.achieved_eps,
            "depth": self.depth,
        }
        if include_sequence:
            out["sequence"] = self.seq.to_string()
        return out


def compile_rz(
    theta: float,
    eps: float,
    net: BaseNet,
    max_depth: int = DEFAULT_MAX_DEPTH,
    max_length: int = DEFAULT_MAX_LENGTH,
) -> CompiledRotation:
    """Shortest-depth SK sequence whose verified distance to ``rz(theta)`` is <= eps.

    Angles are reduced to ``(-pi, pi]``; negative angles are compiled as
    ``X rz(|theta|) X`` so that ``theta`` and ``-theta`` always get sequences
    with identical counts.  Deeper levels are not attempted once the next
    sequence would be expected to exceed ``max_length`` gates (lengths grow
    about fivefold per level); that also ends in :class:`ConvergenceError`.
    """
    target = rz(theta)
    if not eps > 0:
        raise RejectedInputError("eps must be positive")
    reduced = math.remainder(float(theta), 2.0 * math.pi)
    mirror = reduced < 0
    base = rz(abs(reduced))
    memo: dict = {}
    best = math.inf
    for depth in range(int(max_depth) + 1):
        seq, _ = _sk(base, depth, net, memo)
        if mirror:
            seq = x_conjugate(seq)
        achieved = float(dist(target, seq_to_matrix(seq)))
        if achieved <= eps:
            return CompiledRotation(float(theta), seq, achieved, depth)
        best = min(best, achieved)
        if len(seq) * _GROWTH > max_length:
            break
    raise ConvergenceError(
        f"rz({theta}) not compiled to eps={eps:g}; best achieved {best:.3g}",
        best=best,
        stage="sk",
    )
