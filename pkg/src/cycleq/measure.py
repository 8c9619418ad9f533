"""The measuring apparatus: pick an instant, read the schedule, collapse.

Each synchronized group oscillates on its own phase, so a measurement
touching several groups reads each of them at an independent instant.
The default mode is projective in computational or per-qubit rotated
bases. ``MeasurementMode.PAPER_LITERAL`` enables the axis-tagged
non-commuting toy model, where a reading along the wrong axis is a
:data:`NULL_RESULT`.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .rng import RandomSource, draw_instant
from .schedule import (
    BasisRotation,
    CANONICAL,
    CycleSchedule,
    EntanglementPartition,
    OrderingPolicy,
    partition_from_state,
    resync,
    resync_after_unitary,
    rotate_schedule,
)
from .state import Gate, StateError, StateVector, apply_gate, format_pattern, project


class MeasurementMode(enum.Enum):
    STANDARD = "standard"
    PAPER_LITERAL = "paper-literal"


class ModeError(StateError):
    pass


@dataclass(frozen=True)
class MeasurementSpec:
    qubits: tuple[int, ...]
    angles: tuple[float, ...] = ()
    mode: MeasurementMode = MeasurementMode.STANDARD
    axis: str | None = None

    def __post_init__(self):
        qs = tuple(int(q) for q in self.qubits)
        object.__setattr__(self, "qubits", qs)
        if not qs:
            raise StateError("a measurement needs at least one qubit")
        if len(set(qs)) != len(qs):
            raise StateError(f"qubit measured twice in one measurement: {qs}")
        if not self.angles:
            object.__setattr__(self, "angles", (0.0,) * len(qs))
        elif len(self.angles) != len(qs):
            raise StateError("one basis angle per measured qubit")
        else:
            object.__setattr__(self, "angles", tuple(float(a) for a in self.angles))

    @property
    def rotations(self) -> list[BasisRotation]:
        return [BasisRotation(q, a) for q, a in zip(self.qubits, self.angles)]


def touched_groups(partition: EntanglementPartition, qubits: Sequence[int]) -> list[int]:
    return sorted({partition.group_index(q) for q in qubits})


def reading_schedule(group: CycleSchedule, spec: MeasurementSpec, epoch: int = 0) -> CycleSchedule:
    """``group`` relabeled into the measurement basis of its measured qubits."""
    sched = group
    for rot in spec.rotations:
        if rot.qubit in group.qubits and rot.theta != 0.0:
            sched = rotate_schedule(sched, rot, epoch=epoch)
    return sched


def read_outcomes(partition: EntanglementPartition, spec: MeasurementSpec, instants: np.ndarray, epoch: int = 0) -> np.ndarray:
    """Outcome pattern index per shot.

    ``instants`` has one row per touched group (ascending by first qubit)
    and one column per shot.
    """
    qs = spec.qubits
    k = len(qs)
    groups = touched_groups(partition, qs)
    instants = np.atleast_2d(np.asarray(instants, dtype=float))
    if instants.shape[0] != len(groups):
        raise StateError(f"need {len(groups)} instants per shot, got {instants.shape[0]}")
    codes = np.zeros(instants.shape[1], dtype=np.int64)
    for row, gi in enumerate(groups):
        sched = reading_schedule(partition.groups[gi], spec, epoch)
        labels = sched.labels[sched.locate(instants[row])]
        w = sched.width
        for j, q in enumerate(qs):
            if q in sched.qubits:
                pos = sched.qubits.index(q)
                bit = (labels >> (w - 1 - pos)) & 1
                codes |= bit << (k - 1 - j)
    return codes


def outcome_distribution(partition: EntanglementPartition, spec: MeasurementSpec) -> np.ndarray:
    """Analytic law of :func:`read_outcomes`: overlap of each outcome with the cycle.

    Groups are read independently, so the joint law is the product of
    the per-group marginals.
    """
    qs = spec.qubits
    k = len(qs)
    dist = np.zeros(1 << k)
    dist[0] = 1.0
    for gi in touched_groups(partition, qs):
        sched = reading_schedule(partition.groups[gi], spec)
        w = sched.width
        local: dict[int, float] = {}
        for seg in sched.segments:
            code = 0
            for j, q in enumerate(qs):
                if q in sched.qubits:
                    code |= ((seg.label >> (w - 1 - sched.qubits.index(q))) & 1) << (k - 1 - j)
            local[code] = local.get(code, 0.0) + seg.dwell
        new = np.zeros_like(dist)
        for a in np.flatnonzero(dist):
            for code, d in local.items():
                # bit sets of different groups are disjoint
                new[a | code] += dist[a] * d
        dist = new
    return dist


def collapse(
    partition: EntanglementPartition,
    state: StateVector,
    spec: MeasurementSpec,
    code: int,
    epoch: int = 0,
) -> tuple[StateVector, EntanglementPartition]:
    """Post-measurement state and partition for outcome ``code``.

    The projection only acts inside the touched groups, so every other
    group keeps its schedule untouched.
    """
    post = project(state, spec.qubits, code, spec.angles)
    return post, resync(partition, post, spec.qubits, epoch=epoch)


def schedule_measure(
    partition: EntanglementPartition,
    state: StateVector,
    spec: MeasurementSpec,
    rng: RandomSource,
    *,
    epoch: int = 0,
) -> tuple[str, StateVector, EntanglementPartition]:
    """Measure ``spec.qubits`` by reading the schedules at random instants.

    Returns ``(pattern, post_state, post_partition)``; ``pattern`` lists
    bits in the order of ``spec.qubits``.
    """
    if spec.mode is not MeasurementMode.STANDARD:
        raise ModeError("schedule_measure runs in standard mode; use paper_literal_noncommuting_measure")
    groups = touched_groups(partition, spec.qubits)
    instants = np.array([[draw_instant(rng)] for _ in groups])
    code = int(read_outcomes(partition, spec, instants, epoch)[0])
    post, post_partition = collapse(partition, state, spec, code, epoch)
    return format_pattern(code, len(spec.qubits)), post, post_partition


class ScheduleMachine:
    """A register evolving under the cycle model.

    The only ways to change the schedules are :meth:`apply` and
    :meth:`measure`; there is deliberately no method that reorders or
    rebuilds them in between.
    """

    def __init__(self, state: StateVector, policy: OrderingPolicy = CANONICAL):
        self._state = state
        self._epoch = 0
        self._partition = partition_from_state(state, policy, epoch=0)

    @property
    def state(self) -> StateVector:
        return self._state

    @property
    def partition(self) -> EntanglementPartition:
        return self._partition

    @property
    def epoch(self) -> int:
        return self._epoch

    def apply(self, gate: Gate) -> None:
        self._epoch += 1
        self._state = apply_gate(self._state, gate)
        self._partition = resync_after_unitary(self._partition, gate, self._state, epoch=self._epoch)

    def measure(self, spec: MeasurementSpec, rng: RandomSource) -> str:
        self._epoch += 1
        pattern, self._state, self._partition = schedule_measure(
            self._partition, self._state, spec, rng, epoch=self._epoch
        )
        return pattern


# paper-literal non-commuting model -----------------------------------------


class NullResult:
    """Reading taken along an axis the system is not oscillating on."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "NULL_RESULT"

    def __bool__(self) -> bool:
        return False


NULL_RESULT = NullResult()


@dataclass(frozen=True)
class AxisSegment:
    axis: str
    label: int
    dwell: float


@dataclass(frozen=True)
class AxisOutcome:
    axis: str
    pattern: str

    def __str__(self) -> str:
        return f"{self.pattern}{self.axis}"


@dataclass(frozen=True)
class AxisSchedule:
    """Joint schedule whose segments are tagged with a spin axis."""

    qubits: tuple[int, ...]
    segments: tuple[AxisSegment, ...]
    edges: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        total = sum(s.dwell for s in self.segments)
        if not self.segments or abs(total - 1.0) > 1e-12:
            raise StateError(f"axis schedule dwells sum to {total}")
        object.__setattr__(self, "edges", np.cumsum([s.dwell for s in self.segments]))

    def segment_at(self, u: float) -> AxisSegment:
        i = min(int(np.searchsorted(self.edges, u, side="right")), len(self.segments) - 1)
        return self.segments[i]


def entangled_two_axis_schedule(qubits: tuple[int, int] = (0, 1)) -> AxisSchedule:
    """Pair oscillating through |00>_x, |11>_x, |00>_y, |11>_y, a quarter cycle each."""
    return AxisSchedule(
        tuple(qubits),
        (
            AxisSegment("x", 0b00, 0.25),
            AxisSegment("x", 0b11, 0.25),
            AxisSegment("y", 0b00, 0.25),
            AxisSegment("y", 0b11, 0.25),
        ),
    )


def paper_literal_noncommuting_measure(
    schedule: AxisSchedule, spec: MeasurementSpec, rng: RandomSource
) -> tuple[AxisOutcome | NullResult, AxisSchedule]:
    """Read ``schedule`` along ``spec.axis``.

    If the segment under the sampled instant lies on that axis the pair
    collapses onto it and the outcome is returned; otherwise the result
    is :data:`NULL_RESULT` and the schedule is returned unchanged.
    """
    if spec.mode is not MeasurementMode.PAPER_LITERAL:
        raise ModeError("axis-tagged measurement requires paper-literal mode")
    if spec.axis is None:
        raise StateError("paper-literal measurement needs an axis")
    if set(spec.qubits) != set(schedule.qubits):
        raise StateError(f"measured qubits {spec.qubits} differ from schedule qubits {schedule.qubits}")
    seg = schedule.segment_at(draw_instant(rng))
    if seg.axis != spec.axis:
        return NULL_RESULT, schedule
    # report bits in the order requested
    w = len(schedule.qubits)
    bits = "".join(str((seg.label >> (w - 1 - schedule.qubits.index(q))) & 1) for q in spec.qubits)
    post = AxisSchedule(schedule.qubits, (AxisSegment(seg.axis, seg.label, 1.0),))
    return AxisOutcome(seg.axis, bits), post
