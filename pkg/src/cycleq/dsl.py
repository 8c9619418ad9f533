"""Line-oriented ``.cyq`` circuit files.

Example::

    # two-bit adder
    qubits 3
    h 0
    h 1
    ccx 0 1 2
    cx 0 1
    measure_all

One instruction per line, ``#`` starts a comment, the first instruction
must be ``qubits N``. Angles are decimal radians.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .state import Gate

# opcode -> (qubit operands, angle operands); None means "one or more"
OPCODES: dict[str, tuple[int | None, int]] = {
    "init": (0, 0),
    "h": (1, 0),
    "x": (1, 0),
    "y": (1, 0),
    "z": (1, 0),
    "phase": (1, 1),
    "rot": (1, 1),
    "cx": (2, 0),
    "ccx": (3, 0),
    "rotbasis": (1, 1),
    "measure": (None, 0),
    "measure_all": (0, 0),
}
GATE_OPCODES = frozenset({"h", "x", "y", "z", "phase", "rot", "cx", "ccx"})


@dataclass(frozen=True)
class Diagnostic:
    line: int
    code: str
    message: str
    severity: str = "error"

    def __str__(self) -> str:
        return f"line {self.line}: {self.severity}: {self.message} [{self.code}]"


class ParseError(ValueError):
    def __init__(self, diagnostic: Diagnostic):
        super().__init__(str(diagnostic))
        self.diagnostic = diagnostic

    @property
    def line(self) -> int:
        return self.diagnostic.line

    @property
    def code(self) -> str:
        return self.diagnostic.code


@dataclass(frozen=True)
class Instruction:
    opcode: str
    qubits: tuple[int, ...] = ()
    params: tuple[float, ...] = ()
    bits: str | None = None

    def to_gate(self) -> Gate:
        op, qs = self.opcode, self.qubits
        if op == "h":
            return Gate.h(qs[0])
        if op == "x":
            return Gate.x(qs[0])
        if op == "y":
            return Gate.y(qs[0])
        if op == "z":
            return Gate.z(qs[0])
        if op == "phase":
            return Gate.phase(qs[0], self.params[0])
        if op == "rot":
            return Gate.rot(qs[0], self.params[0])
        if op == "cx":
            return Gate.cnot(*qs)
        if op == "ccx":
            return Gate.toffoli(*qs)
        raise ValueError(f"{op} is not a gate")

    def __str__(self) -> str:
        parts = [self.opcode]
        if self.bits is not None:
            parts.append(self.bits)
        parts.extend(str(q) for q in self.qubits)
        parts.extend(repr(p) for p in self.params)
        return " ".join(parts)


@dataclass(frozen=True)
class Circuit:
    n_qubits: int
    instructions: tuple[Instruction, ...]
    source_map: tuple[int, ...] = field(default=(), compare=False)
    header_line: int = field(default=1, compare=False)

    def __iter__(self):
        return iter(self.instructions)

    def __len__(self) -> int:
        return len(self.instructions)


def _fail(line: int, code: str, message: str):
    raise ParseError(Diagnostic(line, code, message))


def _qubit(tok: str, n: int, line: int) -> int:
    try:
        q = int(tok, 10)
    except ValueError:
        _fail(line, "bad-number", f"qubit index {tok!r} is not an integer")
    if not 0 <= q < n:
        _fail(line, "qubit-range", f"qubit {q} out of range for {n} qubits")
    return q


def _angle(tok: str, line: int) -> float:
    try:
        a = float(tok)
    except ValueError:
        _fail(line, "bad-number", f"angle {tok!r} is not a decimal number")
    if not math.isfinite(a):
        _fail(line, "bad-number", f"angle {tok!r} is not finite")
    return a


def parse(text: str) -> Circuit:
    """Parse circuit source; raises :class:`ParseError` naming the line."""
    n = None
    header_line = 0
    instrs: list[Instruction] = []
    lines: list[int] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        toks = raw.split("#", 1)[0].split()
        if not toks:
            continue
        op, args = toks[0].lower(), toks[1:]
        if n is None:
            if op != "qubits":
                _fail(lineno, "missing-header", "first instruction must be 'qubits N'")
            if len(args) != 1:
                _fail(lineno, "arity", "'qubits' takes exactly one count")
            try:
                n = int(args[0], 10)
            except ValueError:
                _fail(lineno, "bad-number", f"qubit count {args[0]!r} is not an integer")
            if n < 1:
                _fail(lineno, "qubit-range", "qubit count must be positive")
            header_line = lineno
            continue
        if op == "qubits":
            _fail(lineno, "duplicate-header", f"'qubits' already declared on line {header_line}")
        if op not in OPCODES:
            _fail(lineno, "unknown-opcode", f"unknown opcode {toks[0]!r}")
        n_q, n_a = OPCODES[op]

        if op == "init":
            if len(args) != 1:
                _fail(lineno, "arity", "'init' takes one bit string")
            bits = args[0]
            if set(bits) - {"0", "1"} or len(bits) != n:
                _fail(lineno, "bad-number", f"init needs a {n}-bit string of 0/1, got {bits!r}")
            if instrs:
                _fail(lineno, "init-position", "'init' must come before every other instruction")
            instrs.append(Instruction("init", bits=bits))
            lines.append(lineno)
            continue

        if n_q is None:
            if not args:
                _fail(lineno, "arity", "'measure' needs at least one qubit")
            qs = tuple(_qubit(t, n, lineno) for t in args)
            params: tuple[float, ...] = ()
        else:
            if len(args) != n_q + n_a:
                _fail(lineno, "arity", f"'{op}' takes {n_q + n_a} operand(s), got {len(args)}")
            qs = tuple(_qubit(t, n, lineno) for t in args[:n_q])
            params = tuple(_angle(t, lineno) for t in args[n_q:])
        if len(set(qs)) != len(qs):
            _fail(lineno, "duplicate-qubit", f"qubit repeated in '{op}': {qs}")
        instrs.append(Instruction(op, qs, params))
        lines.append(lineno)
    if n is None:
        _fail(max(1, len(text.splitlines())), "missing-header", "no 'qubits N' declaration")
    return Circuit(n, tuple(instrs), tuple(lines), header_line)


def format_circuit(circuit: Circuit) -> str:
    """Canonical text: lowercase opcodes, single spaces, exact angle literals."""
    out = [f"qubits {circuit.n_qubits}"]
    out.extend(str(i) for i in circuit.instructions)
    return "\n".join(out) + "\n"


def validate(circuit: Circuit) -> list[Diagnostic]:
    """Semantic warnings; an empty list means nothing looks suspicious."""
    diags: list[Diagnostic] = []
    used: set[int] = set()
    measured_clean: set[int] = set()
    lines = circuit.source_map or tuple(range(2, len(circuit) + 2))
    for instr, line in zip(circuit.instructions, lines):
        op = instr.opcode
        if op == "init":
            continue
        qs = tuple(range(circuit.n_qubits)) if op == "measure_all" else instr.qubits
        used.update(qs)
        if op in ("measure", "measure_all"):
            again = sorted(q for q in qs if q in measured_clean)
            if again:
                diags.append(
                    Diagnostic(line, "remeasure", f"qubit(s) {again} measured again with no gate in between", "warning")
                )
            measured_clean.update(qs)
        else:
            # gates and basis changes both make a fresh measurement meaningful
            measured_clean.difference_update(qs)
    unused = sorted(set(range(circuit.n_qubits)) - used)
    if unused:
        diags.append(Diagnostic(circuit.header_line, "unused-qubit", f"qubit(s) {unused} never used", "warning"))
    return diags
