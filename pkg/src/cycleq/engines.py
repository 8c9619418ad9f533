"""Shot execution for the schedule engine and the state-vector oracle.

Shots are run as a branching tree: every shot starts at the root, gates
are applied once per branch, and at each measurement the shots of a
branch are split by outcome. Shot ``i`` always uses random stream ``i``
with a draw counter that depends only on its path, so the results are
the same as running the shots one at a time, in any grouping or order.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, NamedTuple, Sequence

import numpy as np

from .dsl import Circuit
from .measure import MeasurementSpec, collapse, read_outcomes, reading_schedule, touched_groups
from .rng import DOMAIN_ORACLE, DOMAIN_SCHEDULE, uniforms
from .schedule import (
    CANONICAL,
    PRUNE_TOL,
    EntanglementPartition,
    OrderingPolicy,
    partition_from_state,
    resync_after_unitary,
)
from .state import (
    Gate,
    StateVector,
    apply_gate,
    format_pattern,
    outcome_probabilities,
    project,
    sample_index,
)

# program ---------------------------------------------------------------------


@dataclass(frozen=True)
class GateStep:
    gate: Gate


@dataclass(frozen=True)
class MeasureStep:
    qubits: tuple[int, ...]
    angles: tuple[float, ...]

    @property
    def spec(self) -> MeasurementSpec:
        return MeasurementSpec(self.qubits, self.angles)


@dataclass(frozen=True)
class Program:
    initial: StateVector
    steps: tuple[GateStep | MeasureStep, ...]

    @property
    def n_qubits(self) -> int:
        return self.initial.n_qubits

    @classmethod
    def from_circuit(cls, circuit: Circuit, initial: StateVector | None = None) -> "Program":
        """Lower a parsed circuit; ``rotbasis`` is folded into later measurements."""
        n = circuit.n_qubits
        state = initial
        angles = [0.0] * n
        steps: list[GateStep | MeasureStep] = []
        for instr in circuit.instructions:
            op = instr.opcode
            if op == "init":
                if initial is not None:
                    raise ValueError("circuit has 'init' but an initial state was also given")
                state = StateVector.basis(instr.bits)
            elif op == "rotbasis":
                angles[instr.qubits[0]] = instr.params[0]
            elif op in ("measure", "measure_all"):
                qs = tuple(range(n)) if op == "measure_all" else instr.qubits
                steps.append(MeasureStep(qs, tuple(angles[q] for q in qs)))
            else:
                steps.append(GateStep(instr.to_gate()))
        if state is None:
            state = StateVector.zeros(n)
        if state.n_qubits != n:
            raise ValueError(f"initial state has {state.n_qubits} qubits, circuit declares {n}")
        return cls(state, tuple(steps))


# engines ---------------------------------------------------------------------


class StateVectorEngine:
    """Reference semantics: Born probabilities and projective collapse."""

    name = "statevector"
    domain = DOMAIN_ORACLE

    def prepare(self, state: StateVector) -> StateVector:
        return state

    def apply(self, node: StateVector, gate: Gate, epoch: int) -> StateVector:
        return apply_gate(node, gate)

    def draws(self, node: StateVector, step: MeasureStep) -> int:
        return 1

    def read(self, node: StateVector, step: MeasureStep, instants: np.ndarray, epoch: int) -> np.ndarray:
        p = outcome_probabilities(node, step.qubits, step.angles)
        codes = sample_index(np.cumsum(p), instants[0])
        # clamped draws can land on trailing empty cells
        empty = p[codes] == 0.0
        while np.any(empty):
            codes[empty] -= 1
            empty = p[codes] == 0.0
        return codes

    def collapse(self, node: StateVector, step: MeasureStep, code: int, epoch: int) -> StateVector:
        return project(node, step.qubits, code, step.angles)

    def state(self, node: StateVector) -> StateVector:
        return node

    def trace(self, node, **kw) -> None:
        return None


class ScheduleNode(NamedTuple):
    state: StateVector
    partition: EntanglementPartition


class ScheduleEngine:
    """The cycle model: read each touched group's schedule at a random instant."""

    name = "schedule"
    domain = DOMAIN_SCHEDULE

    def __init__(self, policy: OrderingPolicy = CANONICAL):
        self.policy = policy

    def prepare(self, state: StateVector) -> ScheduleNode:
        return ScheduleNode(state, partition_from_state(state, self.policy, epoch=0))

    def apply(self, node: ScheduleNode, gate: Gate, epoch: int) -> ScheduleNode:
        post = apply_gate(node.state, gate)
        return ScheduleNode(post, resync_after_unitary(node.partition, gate, post, epoch=epoch))

    def draws(self, node: ScheduleNode, step: MeasureStep) -> int:
        return len(touched_groups(node.partition, step.qubits))

    def read(self, node: ScheduleNode, step: MeasureStep, instants: np.ndarray, epoch: int) -> np.ndarray:
        return read_outcomes(node.partition, step.spec, instants, epoch)

    def collapse(self, node: ScheduleNode, step: MeasureStep, code: int, epoch: int) -> ScheduleNode:
        return ScheduleNode(*collapse(node.partition, node.state, step.spec, code, epoch))

    def state(self, node: ScheduleNode) -> StateVector:
        return node.state

    def reading_groups(self, node: ScheduleNode, step: MeasureStep, epoch: int) -> list[dict]:
        spec = step.spec
        return [
            reading_schedule(node.partition.groups[gi], spec, epoch).trace_record()
            for gi in touched_groups(node.partition, step.qubits)
        ]


def make_engine(name: str, policy: OrderingPolicy = CANONICAL):
    if name == "schedule":
        return ScheduleEngine(policy)
    if name == "statevector":
        return StateVectorEngine()
    raise ValueError(f"unknown engine {name!r}")


# tracing ---------------------------------------------------------------------


@dataclass
class TraceRecorder:
    """Collects schedule events; records are emitted grouped by shot."""

    entries: list[tuple[np.ndarray, dict, dict]] = field(default_factory=list)

    def add(self, shots: np.ndarray, record: dict, per_shot: dict[str, Any] | None = None) -> None:
        self.entries.append((shots, record, per_shot or {}))

    def extend(self, other: "TraceRecorder") -> None:
        self.entries.extend(other.entries)

    def records(self) -> list[dict]:
        by_shot: dict[int, list[dict]] = {}
        for shots, record, per_shot in self.entries:
            for j, s in enumerate(shots.tolist()):
                rec = {"shot": s, **record}
                for key, values in per_shot.items():
                    rec[key] = values[j]
                by_shot.setdefault(s, []).append(rec)
        return [r for s in sorted(by_shot) for r in by_shot[s]]

    def write(self, fh) -> None:
        for rec in self.records():
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


# runner ------------------------------------------------------------------------


@dataclass
class Branch:
    """Shots sharing one outcome history, and the node they ended in."""

    history: tuple[str, ...]
    shots: np.ndarray
    node: Any

    @property
    def pattern(self) -> str:
        return "".join(self.history)

    @property
    def count(self) -> int:
        return int(self.shots.size)


def _run_chunk(program: Program, engine, shots: np.ndarray, seed: int, trace: TraceRecorder | None) -> list[Branch]:
    root = engine.prepare(program.initial)
    traced = trace is not None and isinstance(engine, ScheduleEngine)
    if traced:
        trace.add(shots, {"event": "rebuild", "epoch": 0, "groups": root.partition.trace_record(), "u": None})
    leaves: list[Branch] = []
    # (next step, node, shots, draw counter, history)
    stack = [(0, root, shots, 0, ())]
    while stack:
        i, node, idx, counter, history = stack.pop()
        while i < len(program.steps) and isinstance(program.steps[i], GateStep):
            node = engine.apply(node, program.steps[i].gate, i + 1)
            if traced:
                trace.add(idx, {"event": "rebuild", "epoch": i + 1, "groups": node.partition.trace_record(), "u": None})
            i += 1
        if i == len(program.steps):
            leaves.append(Branch(history, idx, node))
            continue
        step = program.steps[i]
        epoch = i + 1
        k = engine.draws(node, step)
        instants = np.stack([uniforms(seed, idx, counter + r, engine.domain) for r in range(k)])
        codes = engine.read(node, step, instants, epoch)
        width = len(step.qubits)
        if traced:
            trace.add(
                idx,
                {"event": "measure", "epoch": epoch, "qubits": list(step.qubits), "groups": engine.reading_groups(node, step, epoch)},
                {"u": instants.T.tolist(), "outcome": [format_pattern(int(c), width) for c in codes]},
            )
        children = []
        for code in np.unique(codes):
            sub = idx[codes == code]
            child = engine.collapse(node, step, int(code), epoch)
            pattern = format_pattern(int(code), width)
            if traced:
                trace.add(sub, {"event": "collapse", "epoch": epoch, "groups": child.partition.trace_record(), "u": None})
            children.append((i + 1, child, sub, counter + k, history + (pattern,)))
        # reversed so branches are explored in ascending outcome order
        stack.extend(reversed(children))
    return leaves


def _merge(chunks: Sequence[list[Branch]]) -> list[Branch]:
    merged: dict[tuple[str, ...], Branch] = {}
    for leaves in chunks:
        for b in leaves:
            if b.history in merged:
                m = merged[b.history]
                merged[b.history] = Branch(b.history, np.concatenate([m.shots, b.shots]), m.node)
            else:
                merged[b.history] = b
    return [merged[h] for h in sorted(merged)]


def run_program(
    program: Program,
    engine,
    shots: int,
    seed: int,
    *,
    parallel: int = 1,
    trace: TraceRecorder | None = None,
) -> list[Branch]:
    """Run ``shots`` shots; returns one :class:`Branch` per outcome history.

    ``parallel`` splits the shots into that many contiguous chunks run on
    a thread pool. The result does not depend on it.
    """
    if shots < 1:
        raise ValueError("shots must be >= 1")
    all_shots = np.arange(shots, dtype=np.int64)
    parallel = max(1, min(int(parallel), shots))
    parts = np.array_split(all_shots, parallel)
    recorders = [TraceRecorder() if trace is not None else None for _ in parts]
    if parallel == 1:
        results = [_run_chunk(program, engine, parts[0], seed, recorders[0])]
    else:
        with ThreadPoolExecutor(max_workers=parallel) as pool:
            results = list(pool.map(lambda a: _run_chunk(program, engine, a[0], seed, a[1]), zip(parts, recorders)))
    if trace is not None:
        for r in recorders:
            trace.extend(r)
    return _merge(results)


def counts(branches: Sequence[Branch]) -> dict[str, int]:
    out: dict[str, int] = {}
    for b in branches:
        out[b.pattern] = out.get(b.pattern, 0) + b.count
    return dict(sorted(out.items()))


def exact_distribution(program: Program, cutoff: float = PRUNE_TOL) -> dict[str, float]:
    """Outcome-history law by exhaustive Born-rule expansion.

    Branches whose probability falls below ``cutoff`` are dropped.
    """
    out: dict[str, float] = {}
    stack = [(0, program.initial, 1.0, "")]
    while stack:
        i, state, weight, pattern = stack.pop()
        while i < len(program.steps) and isinstance(program.steps[i], GateStep):
            state = apply_gate(state, program.steps[i].gate)
            i += 1
        if i == len(program.steps):
            out[pattern] = out.get(pattern, 0.0) + weight
            continue
        step = program.steps[i]
        p = outcome_probabilities(state, step.qubits, step.angles)
        for code in np.flatnonzero(p):
            w = weight * float(p[code])
            if w < cutoff:
                continue
            post = project(state, step.qubits, int(code), step.angles)
            stack.append((i + 1, post, w, pattern + format_pattern(int(code), len(step.qubits))))
    return dict(sorted(out.items()))
