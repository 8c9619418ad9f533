"""Dense state vectors, gates, and the reference (oracle) measurement rule.

Qubit 0 is the leftmost label in ket notation, so for an ``n``-qubit
register the bit of qubit ``q`` in basis index ``i`` is
``(i >> (n - 1 - q)) & 1``. Patterns are printed most-significant first.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

MAX_QUBITS = 20
NORM_TOL = 1e-12
UNITARY_TOL = 1e-10


class StateError(ValueError):
    pass


class ZeroProbabilityError(StateError):
    """Projection onto an outcome the state assigns no weight to."""


class StateVector:
    """Normalized complex amplitudes over the ``2**n`` computational basis.

    Instances are immutable; the amplitude array is flagged read-only.
    """

    __slots__ = ("_amps", "_n")

    def __init__(self, amps: Iterable[complex], *, normalize: bool = False):
        arr = np.array(amps, dtype=complex).reshape(-1)
        size = arr.size
        n = size.bit_length() - 1
        if size < 2 or (1 << n) != size:
            raise StateError(f"amplitude count {size} is not a power of two >= 2")
        if n > MAX_QUBITS:
            raise StateError(f"{n} qubits exceeds the cap of {MAX_QUBITS}")
        if not np.all(np.isfinite(arr)):
            raise StateError("amplitudes must be finite")
        norm = float(np.sum(arr.real**2 + arr.imag**2))
        if normalize:
            if norm == 0.0:
                raise StateError("cannot normalize the zero vector")
            arr = arr / math.sqrt(norm)
        elif abs(norm - 1.0) > NORM_TOL:
            raise StateError(f"state is not normalized (norm^2 = {norm!r})")
        arr.setflags(write=False)
        self._amps = arr
        self._n = n

    @classmethod
    def basis(cls, bits: str) -> "StateVector":
        """Computational basis state from a bit string such as ``"010"``."""
        if not bits or set(bits) - {"0", "1"}:
            raise StateError(f"invalid bit string {bits!r}")
        amps = np.zeros(1 << len(bits), dtype=complex)
        amps[int(bits, 2)] = 1.0
        return cls(amps)

    @classmethod
    def zeros(cls, n_qubits: int) -> "StateVector":
        return cls.basis("0" * n_qubits)

    @classmethod
    def qubit(cls, alpha: complex, beta: complex) -> "StateVector":
        return cls([alpha, beta])

    @property
    def amps(self) -> np.ndarray:
        return self._amps

    @property
    def n_qubits(self) -> int:
        return self._n

    def probabilities(self) -> np.ndarray:
        a = self._amps
        return a.real**2 + a.imag**2

    def tensor(self) -> np.ndarray:
        """Amplitudes reshaped to one axis per qubit."""
        return self._amps.reshape((2,) * self._n)

    def allclose(self, other: "StateVector", atol: float = 1e-10) -> bool:
        return self._n == other._n and bool(np.allclose(self._amps, other._amps, rtol=0, atol=atol))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, StateVector):
            return NotImplemented
        return self._n == other._n and bool(np.array_equal(self._amps, other._amps))

    def __hash__(self) -> int:
        return hash(self._amps.tobytes())

    def __repr__(self) -> str:
        terms = []
        for i, a in enumerate(self._amps):
            if abs(a) > 1e-12:
                terms.append(f"({a:.6g})|{i:0{self._n}b}>")
        return "StateVector(" + " + ".join(terms) + ")"


def fidelity(a: StateVector, b: StateVector) -> float:
    """|<a|b>|^2, insensitive to global phase."""
    if a.n_qubits != b.n_qubits:
        raise StateError("fidelity between states of different width")
    return float(abs(np.vdot(a.amps, b.amps)) ** 2)


def tensor(a: StateVector, b: StateVector) -> StateVector:
    """Composite state a (x) b; qubits of ``a`` come first."""
    return StateVector(np.kron(a.amps, b.amps), normalize=True)


# gates ---------------------------------------------------------------------


class GateKind(enum.Enum):
    X = "x"
    Y = "y"
    Z = "z"
    H = "h"
    PHASE = "phase"
    ROT = "rot"
    CNOT = "cx"
    TOFFOLI = "ccx"
    CUSTOM = "custom"


_ARITY = {
    GateKind.X: 1,
    GateKind.Y: 1,
    GateKind.Z: 1,
    GateKind.H: 1,
    GateKind.PHASE: 1,
    GateKind.ROT: 1,
    GateKind.CNOT: 2,
    GateKind.TOFFOLI: 3,
}

_S2 = 1 / math.sqrt(2)
_FIXED = {
    GateKind.X: np.array([[0, 1], [1, 0]], dtype=complex),
    GateKind.Y: np.array([[0, -1j], [1j, 0]], dtype=complex),
    GateKind.Z: np.array([[1, 0], [0, -1]], dtype=complex),
    GateKind.H: np.array([[_S2, _S2], [_S2, -_S2]], dtype=complex),
}


def rotation_matrix(theta: float) -> np.ndarray:
    """Real rotation [[cos, -sin], [sin, cos]].

    Applied to a qubit's amplitudes (a, b) it yields the coordinates
    (a cos - b sin, a sin + b cos) in the basis |x> = cos|0> - sin|1>,
    |y> = sin|0> + cos|1>, i.e. it undoes the basis change.
    """
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]], dtype=complex)


def _controlled_not(n_controls: int) -> np.ndarray:
    dim = 1 << (n_controls + 1)
    m = np.eye(dim, dtype=complex)
    m[[dim - 2, dim - 1]] = m[[dim - 1, dim - 2]]
    return m


def _is_unitary(m: np.ndarray) -> bool:
    return bool(np.allclose(m.conj().T @ m, np.eye(m.shape[0]), rtol=0, atol=UNITARY_TOL))


@dataclass(frozen=True, eq=False)
class Gate:
    """A unitary acting on ``targets``.

    Multi-qubit gates list controls before the target, e.g. ``CNOT`` is
    ``(control, target)`` and ``TOFFOLI`` is ``(c1, c2, target)``.
    """

    kind: GateKind
    targets: tuple[int, ...]
    param: float | None = None
    unitary: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "targets", tuple(int(t) for t in self.targets))
        if len(set(self.targets)) != len(self.targets):
            raise StateError(f"gate targets must be distinct: {self.targets}")
        if any(t < 0 for t in self.targets):
            raise StateError(f"negative qubit index in {self.targets}")
        if self.kind is GateKind.CUSTOM:
            if self.unitary is None:
                raise StateError("custom gate needs a matrix")
            m = np.array(self.unitary, dtype=complex)
            dim = 1 << len(self.targets)
            if m.shape != (dim, dim):
                raise StateError(f"custom matrix shape {m.shape} does not match {len(self.targets)} targets")
            if not np.all(np.isfinite(m)) or not _is_unitary(m):
                raise StateError("custom matrix is not unitary")
            m.setflags(write=False)
            object.__setattr__(self, "unitary", m)
            return
        if len(self.targets) != _ARITY[self.kind]:
            raise StateError(f"{self.kind.value} takes {_ARITY[self.kind]} qubit(s), got {len(self.targets)}")
        if self.kind in (GateKind.PHASE, GateKind.ROT):
            if self.param is None or not math.isfinite(self.param):
                raise StateError(f"{self.kind.value} needs a finite angle")
            object.__setattr__(self, "param", float(self.param))

    def matrix(self) -> np.ndarray:
        k = self.kind
        if k is GateKind.CUSTOM:
            return self.unitary
        if k in _FIXED:
            return _FIXED[k]
        if k is GateKind.PHASE:
            return np.array([[1, 0], [0, np.exp(1j * self.param)]], dtype=complex)
        if k is GateKind.ROT:
            return rotation_matrix(self.param)
        if k is GateKind.CNOT:
            return _controlled_not(1)
        return _controlled_not(2)

    def inverse(self) -> "Gate":
        return Gate(GateKind.CUSTOM, self.targets, unitary=self.matrix().conj().T)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Gate):
            return NotImplemented
        return (
            self.kind == other.kind
            and self.targets == other.targets
            and self.param == other.param
            and np.array_equal(self.matrix(), other.matrix())
        )

    def __hash__(self) -> int:
        return hash((self.kind, self.targets, self.param))

    # convenience constructors
    @classmethod
    def x(cls, q: int) -> "Gate":
        return cls(GateKind.X, (q,))

    @classmethod
    def y(cls, q: int) -> "Gate":
        return cls(GateKind.Y, (q,))

    @classmethod
    def z(cls, q: int) -> "Gate":
        return cls(GateKind.Z, (q,))

    @classmethod
    def h(cls, q: int) -> "Gate":
        return cls(GateKind.H, (q,))

    @classmethod
    def phase(cls, q: int, phi: float) -> "Gate":
        return cls(GateKind.PHASE, (q,), phi)

    @classmethod
    def rot(cls, q: int, theta: float) -> "Gate":
        return cls(GateKind.ROT, (q,), theta)

    @classmethod
    def cnot(cls, control: int, target: int) -> "Gate":
        return cls(GateKind.CNOT, (control, target))

    @classmethod
    def toffoli(cls, c1: int, c2: int, target: int) -> "Gate":
        return cls(GateKind.TOFFOLI, (c1, c2, target))

    @classmethod
    def custom(cls, targets: Sequence[int], unitary) -> "Gate":
        return cls(GateKind.CUSTOM, tuple(targets), unitary=np.asarray(unitary))


def apply_matrix(state: StateVector, matrix: np.ndarray, targets: Sequence[int]) -> np.ndarray:
    """Raw amplitudes of ``matrix`` applied to ``targets`` (no normalization check)."""
    n = state.n_qubits
    k = len(targets)
    psi = state.tensor()
    u = np.asarray(matrix).reshape((2,) * (2 * k))
    out = np.tensordot(u, psi, axes=(list(range(k, 2 * k)), list(targets)))
    # tensordot puts the gate's output axes first
    out = np.moveaxis(out, list(range(k)), list(targets))
    return out.reshape(1 << n)


def apply_gate(state: StateVector, gate: Gate) -> StateVector:
    n = state.n_qubits
    for t in gate.targets:
        if t >= n:
            raise StateError(f"qubit {t} out of range for {n}-qubit state")
    return StateVector(apply_matrix(state, gate.matrix(), gate.targets), normalize=True)


# reference measurement -----------------------------------------------------


def _check_qubits(qubits: Sequence[int], n: int) -> tuple[int, ...]:
    qs = tuple(int(q) for q in qubits)
    if not qs:
        raise StateError("no qubits to measure")
    if len(set(qs)) != len(qs):
        raise StateError(f"qubits measured twice in one measurement: {qs}")
    for q in qs:
        if not 0 <= q < n:
            raise StateError(f"qubit {q} out of range for {n}-qubit state")
    return qs


def _basis_vectors(theta: float) -> np.ndarray:
    """Rows are the rotated basis kets |x>, |y> for angle ``theta``."""
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]], dtype=complex)


def outcome_amplitudes(state: StateVector, qubits: Sequence[int], angles: Sequence[float] | None = None) -> np.ndarray:
    """Amplitudes with ``qubits`` expressed in their (rotated) measurement basis.

    Returns a tensor with the measured qubits as the leading axes in the
    given order, followed by the untouched qubits in ascending order.
    """
    n = state.n_qubits
    qs = _check_qubits(qubits, n)
    angles = tuple(angles) if angles is not None else (0.0,) * len(qs)
    if len(angles) != len(qs):
        raise StateError("one basis angle per measured qubit")
    psi = state.tensor()
    for q, theta in zip(qs, angles):
        if theta != 0.0:
            # <b_k| psi> contracted over axis q
            proj = _basis_vectors(theta).conj()
            psi = np.moveaxis(np.tensordot(proj, psi, axes=([1], [q])), 0, q)
    rest = [q for q in range(n) if q not in qs]
    return np.transpose(psi, list(qs) + rest)


def outcome_probabilities(state: StateVector, qubits: Sequence[int], angles: Sequence[float] | None = None) -> np.ndarray:
    """p(m) for every pattern m over ``qubits`` (declared order, MSB first)."""
    t = outcome_amplitudes(state, qubits, angles)
    k = len(tuple(qubits))
    w = (t.real**2 + t.imag**2).reshape(1 << k, -1)
    return w.sum(axis=1)


def born_distribution(state: StateVector) -> np.ndarray:
    return state.probabilities()


def project(state: StateVector, qubits: Sequence[int], outcome: int, angles: Sequence[float] | None = None) -> StateVector:
    """Renormalized projection of ``state`` onto ``outcome`` for ``qubits``.

    ``outcome`` is the pattern index over ``qubits`` in declared order. With
    rotated bases the collapsed qubits end up in the rotated basis kets.
    """
    n = state.n_qubits
    qs = _check_qubits(qubits, n)
    k = len(qs)
    if not 0 <= outcome < (1 << k):
        raise StateError(f"outcome {outcome} out of range for {k} qubits")
    angles = tuple(angles) if angles is not None else (0.0,) * k
    psi = state.tensor()
    for j, (q, theta) in enumerate(zip(qs, angles)):
        bit = (outcome >> (k - 1 - j)) & 1
        ket = _basis_vectors(theta)[bit]
        # |b><b| on axis q
        proj = np.outer(ket, ket.conj())
        psi = np.moveaxis(np.tensordot(proj, psi, axes=([1], [q])), 0, q)
    amps = psi.reshape(-1)
    weight = float(np.sum(amps.real**2 + amps.imag**2))
    if weight < 1e-300:
        raise ZeroProbabilityError(f"outcome {outcome:0{k}b} on qubits {qs} has zero probability")
    return StateVector(amps / math.sqrt(weight), normalize=True)


def format_pattern(index: int, width: int) -> str:
    return format(index, f"0{width}b")


def sample_index(cdf: np.ndarray, u):
    """Inverse-CDF lookup; ``u`` past the final edge clamps to the last cell."""
    idx = np.searchsorted(cdf, u, side="right")
    return np.minimum(idx, len(cdf) - 1)


def oracle_measure(state: StateVector, qubits: Sequence[int], rng, angles: Sequence[float] | None = None):
    """Sample a projective measurement outcome and collapse the state.

    ``rng`` is anything with a ``draw()`` method returning a float in
    [0, 1). Returns ``(pattern, post_state)`` where ``pattern`` is the bit
    string over ``qubits`` in declared order.
    """
    qs = _check_qubits(qubits, state.n_qubits)
    p = outcome_probabilities(state, qs, angles)
    cdf = np.cumsum(p)
    # zero-probability cells are skipped by side="right" unless they trail
    m = int(sample_index(cdf, rng.draw()))
    while p[m] == 0.0:
        m -= 1
    return format_pattern(m, len(qs)), project(state, qs, m, angles)
