"""Worked examples: Bell correlations, the two-bit adder, teleportation,
and the axis-tagged non-commuting toy model."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .dsl import parse
from .engines import Program, TraceRecorder, counts, exact_distribution, make_engine, run_program
from .measure import (
    NULL_RESULT,
    MeasurementMode,
    MeasurementSpec,
    entangled_two_axis_schedule,
    paper_literal_noncommuting_measure,
)
from .rng import DOMAIN_LITERAL, RandomSource
from .schedule import CANONICAL, OrderingPolicy, factor
from .state import Gate, StateError, StateVector, apply_gate, fidelity, tensor

FIDELITY_TOL = 1e-10

BELL_PSI1 = """\
qubits 2
h 0
cx 0 1
measure 0 1
"""

BELL_PSI2 = """\
qubits 2
x 1
h 0
cx 0 1
measure 0 1
"""

ADDER = """\
qubits 3
h 0
h 1
ccx 0 1 2
cx 0 1
measure_all
"""

TELEPORT = """\
qubits 3
cx 0 1
h 0
measure 0 1
"""

# Bob's correction per combined outcome of qubits 0 and 1
DECODERS = {
    "00": np.array([[0, 1], [-1, 0]], dtype=complex),  # |0> -> -|1>, |1> -> |0>
    "01": np.array([[1, 0], [0, -1]], dtype=complex),
    "10": np.array([[0, 1], [1, 0]], dtype=complex),
    "11": np.eye(2, dtype=complex),
}


@dataclass
class Assertion:
    description: str
    passed: bool
    value: object = None

    def to_dict(self) -> dict:
        return {"description": self.description, "passed": bool(self.passed), "value": self.value}


@dataclass
class ScenarioResult:
    name: str
    engine: str
    shots: int
    seed: int
    counts: dict[str, int]
    expected: dict[str, float] = field(default_factory=dict)
    assertions: list[Assertion] = field(default_factory=list)
    fidelity: float | None = None

    def __post_init__(self):
        if sum(self.counts.values()) != self.shots:
            raise ValueError("scenario counts do not sum to the shot count")

    @property
    def passed(self) -> bool:
        return all(a.passed for a in self.assertions)

    def check(self, description: str, passed: bool, value=None) -> None:
        self.assertions.append(Assertion(description, bool(passed), value))

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "engine": self.engine,
            "shots": self.shots,
            "seed": self.seed,
            "counts": self.counts,
            "expected": self.expected,
            "assertions": [a.to_dict() for a in self.assertions],
            "fidelity": self.fidelity,
        }


def five_sigma(p: float, n: int) -> float:
    return 5.0 * math.sqrt(p * (1.0 - p) / n)


def _check_frequencies(result: ScenarioResult, expected: dict[str, float], tol: float | None = None) -> None:
    n = result.shots
    for key, p in sorted(expected.items()):
        f = result.counts.get(key, 0) / n
        bound = five_sigma(p, n) if tol is None else tol
        result.check(f"freq({key}) within {p} +/- {bound:.6f}", abs(f - p) <= bound, f)


def _check_support(result: ScenarioResult, allowed: set[str]) -> None:
    stray = sum(c for k, c in result.counts.items() if k not in allowed)
    result.check(f"no counts outside {sorted(allowed)}", stray == 0, stray)


def run_bell_commuting(
    variant: str = "psi1",
    shots: int = 100_000,
    seed: int = 0,
    *,
    engine: str = "schedule",
    policy: OrderingPolicy = CANONICAL,
    parallel: int = 1,
    trace: TraceRecorder | None = None,
) -> ScenarioResult:
    """Measure both qubits of a Bell pair along the same axis."""
    if variant == "psi1":
        source, allowed = BELL_PSI1, {"00", "11"}
    elif variant == "psi2":
        source, allowed = BELL_PSI2, {"01", "10"}
    else:
        raise ValueError(f"unknown Bell variant {variant!r}")
    program = Program.from_circuit(parse(source))
    branches = run_program(program, make_engine(engine, policy), shots, seed, parallel=parallel, trace=trace)
    res = ScenarioResult(f"bell-{variant}", engine, shots, seed, counts(branches), exact_distribution(program))
    _check_support(res, allowed)
    _check_frequencies(res, {k: 0.5 for k in sorted(allowed)})
    return res


def decode_adder(pattern: str) -> dict[str, int]:
    """Recover inputs and outputs from an adder readout ``a s c``.

    The second qubit held ``b`` before the final CNOT replaced it by
    ``a xor b``, so ``b = a xor s``.
    """
    a, s, c = (int(ch) for ch in pattern)
    b = a ^ s
    return {"a": a, "b": b, "sum": s, "carry": c}


def adder_decode_ok(pattern: str) -> bool:
    d = decode_adder(pattern)
    return d["sum"] == d["a"] ^ d["b"] and d["carry"] == d["a"] & d["b"]


def run_adder(
    shots: int = 100_000,
    seed: int = 0,
    *,
    engine: str = "schedule",
    policy: OrderingPolicy = CANONICAL,
    parallel: int = 1,
    trace: TraceRecorder | None = None,
) -> ScenarioResult:
    program = Program.from_circuit(parse(ADDER))
    branches = run_program(program, make_engine(engine, policy), shots, seed, parallel=parallel, trace=trace)
    res = ScenarioResult("adder", engine, shots, seed, counts(branches), exact_distribution(program))
    allowed = {"000", "010", "110", "101"}
    _check_support(res, allowed)
    _check_frequencies(res, {k: 0.25 for k in sorted(allowed)})
    good = sum(c for k, c in res.counts.items() if adder_decode_ok(k))
    res.check("sum = a xor b and carry = a and b on every shot", good == shots, good)
    return res


def teleport_states(alpha: complex, beta: complex) -> tuple[StateVector, StateVector, StateVector]:
    """Initial state, after Alice's CNOT, and after her Hadamard."""
    phi = _input_qubit(alpha, beta)
    chi = StateVector(np.array([0, 1, -1, 0]) / math.sqrt(2))
    psi0 = tensor(phi, chi)
    psi1 = apply_gate(psi0, Gate.cnot(0, 1))
    psi2 = apply_gate(psi1, Gate.h(0))
    return psi0, psi1, psi2


def table_bob_state(pattern: str, alpha: complex, beta: complex) -> StateVector:
    """Bob's qubit right after Alice's readout, as listed per outcome."""
    a, b = alpha, beta
    vec = {"00": [-b, a], "01": [a, -b], "10": [b, a], "11": [a, b]}[pattern]
    return StateVector(vec)


def _input_qubit(alpha: complex, beta: complex) -> StateVector:
    norm = abs(alpha) ** 2 + abs(beta) ** 2
    if abs(norm - 1.0) > 1e-12:
        raise StateError(f"|alpha|^2 + |beta|^2 = {norm!r}, expected 1")
    return StateVector([alpha, beta])


def bob_qubit(state: StateVector) -> StateVector:
    vec, dev = factor(state, (2,))
    if dev > 1e-10:
        raise StateError("Bob's qubit is still entangled after the readout")
    return StateVector(vec, normalize=True)


def run_teleportation(
    alpha: complex,
    beta: complex,
    shots: int = 100_000,
    seed: int = 0,
    *,
    engine: str = "schedule",
    policy: OrderingPolicy = CANONICAL,
    parallel: int = 1,
    trace: TraceRecorder | None = None,
) -> ScenarioResult:
    phi = _input_qubit(alpha, beta)
    psi0, _, _ = teleport_states(alpha, beta)
    program = Program.from_circuit(parse(TELEPORT), initial=psi0)
    eng = make_engine(engine, policy)
    branches = run_program(program, eng, shots, seed, parallel=parallel, trace=trace)
    res = ScenarioResult("teleport", engine, shots, seed, counts(branches), exact_distribution(program))
    worst = 1.0
    for br in branches:
        post = eng.state(br.node)
        before = bob_qubit(post)
        res.check(
            f"outcome {br.pattern}: Bob holds the listed pre-decode state",
            fidelity(before, table_bob_state(br.pattern, alpha, beta)) >= 1 - FIDELITY_TOL,
        )
        decoded = bob_qubit(apply_gate(post, Gate.custom((2,), DECODERS[br.pattern])))
        f = fidelity(decoded, phi)
        worst = min(worst, f)
        res.check(f"outcome {br.pattern}: decoded fidelity >= 1 - {FIDELITY_TOL} on {br.count} shots", f >= 1 - FIDELITY_TOL, f)
    res.fidelity = worst
    _check_frequencies(res, {k: 0.25 for k in DECODERS})
    return res


def run_noncommuting_demo(shots: int = 100_000, seed: int = 0, *, trace: TraceRecorder | None = None) -> ScenarioResult:
    """x-axis reading on the four-segment pair, followed by a y-axis reading."""
    spec_x = MeasurementSpec((0, 1), mode=MeasurementMode.PAPER_LITERAL, axis="x")
    spec_y = MeasurementSpec((0, 1), mode=MeasurementMode.PAPER_LITERAL, axis="y")
    fresh = entangled_two_axis_schedule()
    tally: dict[str, int] = {}
    y_null = 0
    non_null = 0
    for s in range(shots):
        rng = RandomSource(seed, s, DOMAIN_LITERAL)
        out, post = paper_literal_noncommuting_measure(fresh, spec_x, rng)
        if out is NULL_RESULT:
            key = "null"
        else:
            non_null += 1
            key = str(out)
            out_y, after = paper_literal_noncommuting_measure(post, spec_y, rng)
            if out_y is NULL_RESULT and after == post:
                y_null += 1
        tally[key] = tally.get(key, 0) + 1
        if trace is not None:
            trace.add(np.array([s]), {"event": "measure", "axis": "x", "outcome": key})
    res = ScenarioResult(
        "noncommuting", "schedule", shots, seed, dict(sorted(tally.items())), {"00x": 0.25, "11x": 0.25, "null": 0.5}
    )
    f = non_null / shots
    bound = five_sigma(0.5, shots)
    res.check(f"non-null x fraction within 0.5 +/- {bound:.6f}", abs(f - 0.5) <= bound, f)
    res.check("y after x-collapse is null on every shot", y_null == non_null, y_null)
    return res


SCENARIOS: dict[str, Callable[..., ScenarioResult]] = {
    "bell-psi1": lambda **kw: run_bell_commuting("psi1", **kw),
    "bell-psi2": lambda **kw: run_bell_commuting("psi2", **kw),
    "adder": run_adder,
    "teleport": run_teleportation,
    "noncommuting": run_noncommuting_demo,
}
