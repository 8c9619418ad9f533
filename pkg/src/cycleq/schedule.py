"""Cyclic eigenstate schedules and entanglement partitions.

A schedule lays the nonzero-amplitude basis states of a (group) wave
function end to end over one cycle of unit length; each segment's dwell
is its squared amplitude. Qubits whose oscillations are synchronized by an
entangling gate share one joint schedule, and the partition tracks which
qubits are grouped together.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from itertools import combinations
from typing import Iterable, Sequence

import numpy as np

from .state import Gate, StateError, StateVector

PRUNE_TOL = 1e-12
PRODUCT_TOL = 1e-10
# subset search is exhaustive up to this group width, greedy beyond it
FULL_SEARCH_MAX = 10


class PartitionMismatchError(StateError):
    """The global state does not factor the way the partition claims."""


@dataclass(frozen=True)
class OrderingPolicy:
    """Segment order: ascending basis label, or a seeded permutation."""

    seed: int | None = None

    @property
    def canonical(self) -> bool:
        return self.seed is None

    def __str__(self) -> str:
        return "canonical" if self.seed is None else f"shuffled({self.seed})"


CANONICAL = OrderingPolicy()


def shuffled(seed: int) -> OrderingPolicy:
    return OrderingPolicy(int(seed))


@dataclass(frozen=True)
class Segment:
    label: int
    amplitude: complex
    dwell: float


@dataclass(frozen=True)
class BasisRotation:
    qubit: int
    theta: float


@dataclass(frozen=True)
class CycleSchedule:
    """Ordered segments over the joint basis of ``qubits``.

    ``angles`` holds the basis rotation per qubit (0 means computational);
    segment labels are read in that basis, first qubit most significant.
    """

    qubits: tuple[int, ...]
    segments: tuple[Segment, ...]
    angles: tuple[float, ...] = ()
    policy: OrderingPolicy = CANONICAL

    def __post_init__(self):
        if not self.angles:
            object.__setattr__(self, "angles", (0.0,) * len(self.qubits))

    @property
    def width(self) -> int:
        return len(self.qubits)

    @cached_property
    def edges(self) -> np.ndarray:
        """Cumulative segment end points; the last is 1 up to rounding."""
        return np.cumsum([s.dwell for s in self.segments])

    @property
    def starts(self) -> np.ndarray:
        e = self.edges
        return np.concatenate(([0.0], e[:-1]))

    @cached_property
    def labels(self) -> np.ndarray:
        return np.array([s.label for s in self.segments], dtype=np.int64)

    def locate(self, u):
        """Index of the segment covering instant ``u`` (scalar or array)."""
        idx = np.searchsorted(self.edges, u, side="right")
        return np.minimum(idx, len(self.segments) - 1)

    def segment_at(self, u: float) -> Segment:
        return self.segments[int(self.locate(u))]

    def vector(self) -> np.ndarray:
        v = np.zeros(1 << self.width, dtype=complex)
        for s in self.segments:
            v[s.label] = s.amplitude
        return v

    def bits(self, label: int) -> str:
        return format(label, f"0{self.width}b")

    def trace_record(self) -> dict:
        return {
            "qubits": list(self.qubits),
            "segments": [
                {"label": self.bits(s.label), "dwell": s.dwell, "start": float(start)}
                for s, start in zip(self.segments, self.starts)
            ],
        }


def _order(n: int, policy: OrderingPolicy, epoch: int, qubits: Sequence[int]) -> np.ndarray:
    if policy.canonical:
        return np.arange(n)
    rng = np.random.default_rng([policy.seed, epoch, *qubits])
    return rng.permutation(n)


def schedule_from_vector(
    vec: np.ndarray,
    qubits: Sequence[int],
    *,
    angles: Sequence[float] | None = None,
    policy: OrderingPolicy = CANONICAL,
    epoch: int = 0,
) -> CycleSchedule:
    qubits = tuple(qubits)
    vec = np.asarray(vec, dtype=complex)
    if vec.size != 1 << len(qubits):
        raise StateError(f"vector of size {vec.size} does not cover {len(qubits)} qubits")
    p = vec.real**2 + vec.imag**2
    keep = np.flatnonzero(p >= PRUNE_TOL)
    if keep.size == 0:
        raise StateError("no segment survives pruning")
    dwell = p[keep]
    if keep.size != p.size and not np.all(p[p < PRUNE_TOL] == 0.0):
        # dust removed: renormalize, summing in ascending label order
        dwell = dwell / math.fsum(dwell)
    order = _order(keep.size, policy, epoch, qubits)
    segs = tuple(Segment(int(keep[i]), complex(vec[keep[i]]), float(dwell[i])) for i in order)
    return CycleSchedule(qubits, segs, tuple(angles) if angles is not None else (), policy)


def build_schedule(
    state: StateVector,
    policy: OrderingPolicy = CANONICAL,
    *,
    qubits: Sequence[int] | None = None,
    epoch: int = 0,
) -> CycleSchedule:
    """One segment per nonzero amplitude of ``state``, dwell = |amp|^2.

    ``qubits`` names the register positions the schedule covers (defaults
    to ``0..n-1``). ``epoch`` feeds the seeded permutation so that each
    rebuild event may pick a fresh order.
    """
    qs = tuple(range(state.n_qubits)) if qubits is None else tuple(qubits)
    return schedule_from_vector(state.amps, qs, policy=policy, epoch=epoch)


def schedule_distribution(schedule: CycleSchedule) -> dict[int, float]:
    return {s.label: s.dwell for s in sorted(schedule.segments, key=lambda s: s.label)}


def rotate_schedule(schedule: CycleSchedule, rot: BasisRotation, *, epoch: int = 0) -> CycleSchedule:
    """Relabel ``schedule`` into the basis rotated anticlockwise by ``rot.theta``.

    For each pair of labels differing only in the rotated qubit, with
    amplitudes (a, b) on the 0/1 members, the new amplitudes are
    ``a cos - b sin`` on |x> and ``a sin + b cos`` on |y>.
    """
    try:
        pos = schedule.qubits.index(rot.qubit)
    except ValueError:
        raise StateError(f"qubit {rot.qubit} is not covered by schedule over {schedule.qubits}") from None
    if rot.theta == 0.0:
        return schedule
    k = schedule.width
    c, s = math.cos(rot.theta), math.sin(rot.theta)
    vec = schedule.vector()
    out = np.empty_like(vec)
    bit = 1 << (k - 1 - pos)
    for l0 in range(1 << k):
        if l0 & bit:
            continue
        a, b = vec[l0], vec[l0 | bit]
        out[l0] = a * c - b * s
        out[l0 | bit] = a * s + b * c
    angles = list(schedule.angles)
    angles[pos] += rot.theta
    return schedule_from_vector(out, schedule.qubits, angles=angles, policy=schedule.policy, epoch=epoch)


# factorization ---------------------------------------------------------------


def _split(state: StateVector, subset: Sequence[int]) -> np.ndarray:
    n = state.n_qubits
    rest = [q for q in range(n) if q not in subset]
    t = np.transpose(state.tensor(), list(subset) + rest)
    return t.reshape(1 << len(subset), -1)


def factor(state: StateVector, subset: Sequence[int]) -> tuple[np.ndarray, float]:
    """Best unit vector for ``subset`` and the max deviation from a product.

    The amplitude matrix (subset x rest) of a product state has rank one;
    the returned deviation is the largest entry of its residual after
    removing the rank-one part spanned by its heaviest column.
    """
    m = _split(state, subset)
    norms = np.sum(m.real**2 + m.imag**2, axis=0)
    j = int(np.argmax(norms))
    v = m[:, j] / math.sqrt(norms[j])
    resid = m - np.outer(v, v.conj() @ m)
    return v, float(np.max(np.abs(resid)))


def refine(state: StateVector, qubits: Iterable[int]) -> list[tuple[int, ...]]:
    """Finest split of ``qubits`` into blocks that factor out of ``state``.

    Assumes ``qubits`` as a whole already factors from the rest.
    """
    remaining = sorted(qubits)
    blocks: list[tuple[int, ...]] = []
    while remaining:
        first, others = remaining[0], remaining[1:]
        found = None
        if not others:
            found = (first,)
        elif len(remaining) <= FULL_SEARCH_MAX:
            # smallest block holding `first` is irreducible
            for size in range(len(others)):
                for combo in combinations(others, size):
                    cand = (first, *combo)
                    if factor(state, cand)[1] <= PRODUCT_TOL:
                        found = cand
                        break
                if found:
                    break
        else:
            if factor(state, (first,))[1] <= PRODUCT_TOL:
                found = (first,)
        if found is None:
            found = tuple(remaining)
        blocks.append(found)
        remaining = [q for q in remaining if q not in found]
    return blocks


@dataclass(frozen=True)
class EntanglementPartition:
    """Disjoint groups covering the register, each with one joint schedule."""

    n_qubits: int
    groups: tuple[CycleSchedule, ...]
    policy: OrderingPolicy = field(default=CANONICAL)

    def __post_init__(self):
        groups = tuple(sorted(self.groups, key=lambda g: g.qubits[0]))
        object.__setattr__(self, "groups", groups)
        seen = [q for g in groups for q in g.qubits]
        if sorted(seen) != list(range(self.n_qubits)):
            raise StateError(f"groups {[g.qubits for g in groups]} do not partition {self.n_qubits} qubits")

    def group_index(self, qubit: int) -> int:
        for i, g in enumerate(self.groups):
            if qubit in g.qubits:
                return i
        raise StateError(f"qubit {qubit} out of range for {self.n_qubits}-qubit partition")

    def group_of(self, qubit: int) -> CycleSchedule:
        return self.groups[self.group_index(qubit)]

    @property
    def blocks(self) -> list[tuple[int, ...]]:
        return [g.qubits for g in self.groups]

    def joint_distribution(self) -> np.ndarray:
        """Product of the group dwell laws over the full register."""
        n = self.n_qubits
        full = np.ones((2,) * n)
        for g in self.groups:
            dense = np.zeros(1 << g.width)
            for label, d in schedule_distribution(g).items():
                dense[label] = d
            t = dense.reshape((2,) * g.width)
            order = np.argsort(g.qubits)
            t = np.transpose(t, order)
            shape = [2 if q in g.qubits else 1 for q in range(n)]
            full = full * t.reshape(shape)
        return full.reshape(-1)

    def trace_record(self) -> list[dict]:
        return [g.trace_record() for g in self.groups]


def _group_schedules(state, blocks, policy, epoch) -> list[CycleSchedule]:
    out = []
    for block in blocks:
        vec, _ = factor(state, block)
        out.append(schedule_from_vector(vec, block, policy=policy, epoch=epoch))
    return out


def partition_from_state(state: StateVector, policy: OrderingPolicy = CANONICAL, *, epoch: int = 0) -> EntanglementPartition:
    blocks = refine(state, range(state.n_qubits))
    return EntanglementPartition(state.n_qubits, tuple(_group_schedules(state, blocks, policy, epoch)), policy)


def resync(partition: EntanglementPartition, state: StateVector, qubits: Iterable[int], *, epoch: int = 0) -> EntanglementPartition:
    """Merge the groups holding ``qubits``, re-split them, rebuild their schedules.

    Groups not touching ``qubits`` keep their existing schedule objects.
    """
    if state.n_qubits != partition.n_qubits:
        raise PartitionMismatchError(f"{state.n_qubits}-qubit state for a {partition.n_qubits}-qubit partition")
    touched = sorted({partition.group_index(q) for q in qubits})
    merged = sorted(q for i in touched for q in partition.groups[i].qubits)
    if len(merged) < state.n_qubits and factor(state, merged)[1] > PRODUCT_TOL:
        raise PartitionMismatchError(f"qubits {merged} are entangled with qubits outside the touched groups")
    kept = [g for i, g in enumerate(partition.groups) if i not in touched]
    rebuilt = _group_schedules(state, refine(state, merged), partition.policy, epoch)
    return EntanglementPartition(partition.n_qubits, tuple(kept + rebuilt), partition.policy)


def resync_after_unitary(partition: EntanglementPartition, gate: Gate, state: StateVector, *, epoch: int = 0) -> EntanglementPartition:
    """Partition after ``gate`` produced ``state``.

    A multi-qubit gate merges (synchronizes) the groups it touches; the
    merged group is split again wherever its state factors exactly.
    """
    return resync(partition, state, gate.targets, epoch=epoch)
