"""Dense statevector engine for a processing register plus an optional memory qubit.

Amplitudes are stored as a tensor of shape (2,) * m. Axis q is qubit q and qubit 0
is the most significant bit of the flattened index, so a Pauli string "XZ" is
kron(X, Z). When present, the memory qubit is the last axis (index n).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .pauli import apply_string, check_string

SINGLE = ("H", "X", "Y", "Z", "S", "SDG", "RX", "RY", "RZ")
ROTATIONS = ("RX", "RY", "RZ")
PROTOCOL_ONLY = ("REFLECT", "CREFLECT", "CPAULI")

_SQ2 = 1 / np.sqrt(2)
_FIXED = {
    "H": np.array([[_SQ2, _SQ2], [_SQ2, -_SQ2]], dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
    "S": np.array([[1, 0], [0, 1j]], dtype=complex),
    "SDG": np.array([[1, 0], [0, -1j]], dtype=complex),
}


class CircuitError(ValueError):
    pass


def gate_matrix(kind: str, angle: float = 0.0) -> np.ndarray:
    if kind in _FIXED:
        return _FIXED[kind].copy()
    c, s = np.cos(angle / 2), np.sin(angle / 2)
    if kind == "RX":
        return np.array([[c, -1j * s], [-1j * s, c]])
    if kind == "RY":
        return np.array([[c, -s], [s, c]], dtype=complex)
    if kind == "RZ":
        return np.array([[np.exp(-0.5j * angle), 0], [0, np.exp(0.5j * angle)]])
    raise CircuitError(f"{kind} is not a single-qubit gate")


@dataclass(frozen=True)
class Gate:
    """kind in SINGLE, CNOT, CPAULI (memory-controlled string), REFLECT, CREFLECT."""

    kind: str
    targets: tuple[int, ...] = ()
    angle: float = 0.0
    string: str = ""

    def __post_init__(self):
        kind = self.kind.upper()
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "targets", tuple(int(t) for t in self.targets))
        if kind in SINGLE:
            if len(self.targets) != 1:
                raise CircuitError(f"{kind} takes one target")
        elif kind == "CNOT":
            if len(self.targets) != 2 or self.targets[0] == self.targets[1]:
                raise CircuitError("CNOT takes distinct control and target")
        elif kind == "CPAULI":
            check_string(self.string)
        elif kind not in ("REFLECT", "CREFLECT"):
            raise CircuitError(f"unknown gate kind {self.kind!r}")

    def inverse(self) -> "Gate":
        if self.kind in ROTATIONS:
            return Gate(self.kind, self.targets, -self.angle)
        if self.kind == "S":
            return Gate("SDG", self.targets)
        if self.kind == "SDG":
            return Gate("S", self.targets)
        return self

    def to_line(self) -> str:
        if self.kind in ROTATIONS:
            return f"{self.kind} {self.targets[0]} {self.angle!r}"
        return " ".join([self.kind, *map(str, self.targets)])


@dataclass(frozen=True)
class PrepCircuit:
    """The preparation unitary V as an ordered gate list on processing qubits."""

    gates: tuple[Gate, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        for g in self.gates:
            if g.kind in PROTOCOL_ONLY:
                raise CircuitError(f"{g.kind} may not appear in a preparation circuit")

    def inverse(self) -> "PrepCircuit":
        return PrepCircuit(tuple(g.inverse() for g in reversed(self.gates)))

    def max_qubit(self) -> int:
        return max((max(g.targets) for g in self.gates), default=-1)

    def to_text(self) -> str:
        return "".join(g.to_line() + "\n" for g in self.gates)

    def __len__(self):
        return len(self.gates)


def parse_circuit(text: str) -> PrepCircuit:
    gates = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        kind = parts[0].upper()
        try:
            if kind in ROTATIONS:
                if len(parts) != 3:
                    raise CircuitError(f"{kind} needs a target and an angle")
                gates.append(Gate(kind, (int(parts[1]),), float(parts[2])))
            else:
                gates.append(Gate(kind, tuple(int(p) for p in parts[1:])))
        except (CircuitError, ValueError) as exc:
            raise CircuitError(f"line {lineno}: {exc}") from None
    return PrepCircuit(tuple(gates))


def load_circuit(path) -> PrepCircuit:
    with open(path) as fh:
        return parse_circuit(fh.read())


def random_circuit(n: int, num_gates: int, rng) -> PrepCircuit:
    """Random circuit of H/S/rotations/CNOT; used for tests and generated instances."""
    kinds = ["H", "S", "X", "RX", "RY", "RZ"] + (["CNOT"] * 2 if n > 1 else [])
    gates = []
    for _ in range(num_gates):
        kind = kinds[rng.integers(len(kinds))]
        if kind == "CNOT":
            c, t = rng.choice(n, size=2, replace=False)
            gates.append(Gate("CNOT", (int(c), int(t))))
        elif kind in ROTATIONS:
            gates.append(Gate(kind, (int(rng.integers(n)),), float(rng.uniform(-np.pi, np.pi))))
        else:
            gates.append(Gate(kind, (int(rng.integers(n)),)))
    return PrepCircuit(tuple(gates))


class StateVector:
    """Mutable amplitude tensor; operations act in place and return self."""

    def __init__(self, tensor: np.ndarray, n: int, has_memory: bool):
        self.tensor = tensor
        self.n = int(n)
        self.has_memory = bool(has_memory)
        m = self.n + int(self.has_memory)
        if tensor.shape != (2,) * m:
            raise CircuitError(f"tensor shape {tensor.shape} does not match {m} qubits")

    @classmethod
    def zeros(cls, n: int, with_memory: bool = False) -> "StateVector":
        m = n + int(with_memory)
        t = np.zeros((2,) * m, dtype=complex)
        t[(0,) * m] = 1.0
        return cls(t, n, with_memory)

    @classmethod
    def from_amplitudes(cls, amps, n: int, with_memory: bool = False) -> "StateVector":
        amps = np.asarray(amps, dtype=complex)
        m = n + int(with_memory)
        if amps.size != 2**m:
            raise CircuitError(f"{amps.size} amplitudes for {m} qubits")
        return cls(amps.reshape((2,) * m).copy(), n, with_memory)

    @property
    def num_qubits(self) -> int:
        return self.n + int(self.has_memory)

    @property
    def memory(self) -> int:
        if not self.has_memory:
            raise CircuitError("state has no memory qubit")
        return self.n

    @property
    def amplitudes(self) -> np.ndarray:
        return self.tensor.reshape(-1)

    def copy(self) -> "StateVector":
        return StateVector(self.tensor.copy(), self.n, self.has_memory)

    def norm2(self) -> float:
        return float(np.vdot(self.tensor, self.tensor).real)

    def _check(self, q: int):
        if not 0 <= q < self.num_qubits:
            raise CircuitError(f"qubit {q} out of range for {self.num_qubits} qubits")

    def apply_matrix(self, u: np.ndarray, q: int) -> "StateVector":
        self._check(q)
        t = np.tensordot(u, self.tensor, axes=([1], [q]))
        self.tensor = np.moveaxis(t, 0, q)
        return self

    def cnot(self, c: int, t: int) -> "StateVector":
        self._check(c)
        self._check(t)
        if c == t:
            raise CircuitError("CNOT control equals target")
        idx = [slice(None)] * self.num_qubits
        idx[c] = 1
        sub = self.tensor[tuple(idx)]
        tt = t if t < c else t - 1
        self.tensor[tuple(idx)] = np.flip(sub, axis=tt)
        return self

    def reflect(self, controlled: bool = False) -> "StateVector":
        """Pi0 = I - 2|0..0><0..0| on the processing register, optionally memory-controlled."""
        if controlled:
            self.tensor[(0,) * self.n + (1,)] *= -1
        else:
            self.tensor[(0,) * self.n] *= -1
        return self

    def pauli(self, string: str, controlled: bool = False) -> "StateVector":
        if len(string) != self.n:
            raise CircuitError(f"string {string!r} does not act on {self.n} qubits")
        if controlled:
            m = self.memory
            idx = (slice(None),) * m + (1,)
            self.tensor[idx] = apply_string(self.tensor[idx], string)
        else:
            self.tensor = apply_string(self.tensor, string)
        return self

    def memory_sign(self) -> "StateVector":
        """Memory-controlled global -1, i.e. Z on the memory qubit."""
        self.tensor[(slice(None),) * self.memory + (1,)] *= -1
        return self

    def memory_density(self) -> np.ndarray:
        """Reduced 2x2 density matrix of the memory qubit."""
        t = self.tensor.reshape(-1, 2)
        return t.T @ t.conj()


def apply_gate(state: StateVector, gate: Gate) -> StateVector:
    k = gate.kind
    if k in SINGLE:
        return state.apply_matrix(gate_matrix(k, gate.angle), gate.targets[0])
    if k == "CNOT":
        return state.cnot(*gate.targets)
    if k == "REFLECT":
        return state.reflect(False)
    if k == "CREFLECT":
        return state.reflect(True)
    if k == "CPAULI":
        return state.pauli(gate.string, controlled=True)
    raise CircuitError(f"unknown gate {k}")


def apply_circuit(state: StateVector, circuit: PrepCircuit | Iterable[Gate]) -> StateVector:
    gates = circuit.gates if isinstance(circuit, PrepCircuit) else circuit
    for g in gates:
        if max(g.targets, default=-1) >= state.n:
            raise CircuitError(f"gate {g.to_line()!r} touches a qubit outside the processing register")
        apply_gate(state, g)
    return state


def prepare(circuit: PrepCircuit, n: int, with_memory: bool = False) -> StateVector:
    if circuit.max_qubit() >= n:
        raise CircuitError(f"circuit uses qubit {circuit.max_qubit()} but n = {n}")
    return apply_circuit(StateVector.zeros(n, with_memory), circuit)


def apply_U_Pj(state: StateVector, V: PrepCircuit, P: str, controlled: bool = False,
               inverse: bool = False) -> StateVector:
    """U = V Pi0 V^dag P: apply P, V^dag, Pi0, V. Only P and Pi0 carry the memory control.

    With inverse=True applies U^dag = P V Pi0 V^dag in the mirrored order.
    """
    Vd = V.inverse()
    if inverse:
        apply_circuit(state, Vd)
        state.reflect(controlled)
        apply_circuit(state, V)
        state.pauli(P, controlled)
    else:
        state.pauli(P, controlled)
        apply_circuit(state, Vd)
        state.reflect(controlled)
        apply_circuit(state, V)
    return state


def principal_angle(V: PrepCircuit, P: str, n: int | None = None) -> float:
    n = len(P) if n is None else n
    psi = prepare(V, n)
    val = np.vdot(psi.tensor, apply_string(psi.tensor, P)).real
    return float(np.arccos(np.clip(abs(val), 0.0, 1.0)))


_BASIS_ROTATION = {"Z": (), "X": ("H",), "Y": ("SDG", "H")}


def basis_probability(state: StateVector, qubit: int, basis: str = "Z") -> float:
    """Probability of outcome 0 (the +1 eigenstate of the basis Pauli) on one qubit."""
    s = state.copy()
    for k in _BASIS_ROTATION[basis]:
        s.apply_matrix(_FIXED[k], qubit)
    idx = [slice(None)] * s.num_qubits
    idx[qubit] = 0
    sub = s.tensor[tuple(idx)]
    return float(np.vdot(sub, sub).real / s.norm2())


def measure(state: StateVector, qubit: int, basis: str, rng) -> tuple[int, StateVector]:
    """Projective measurement; outcome 0 is the +1 eigenstate. Returns the collapsed copy."""
    basis = basis.upper()
    if basis not in _BASIS_ROTATION:
        raise CircuitError(f"unknown basis {basis!r}")
    s = state.copy()
    s._check(qubit)
    for k in _BASIS_ROTATION[basis]:
        s.apply_matrix(_FIXED[k], qubit)
    idx = [slice(None)] * s.num_qubits
    idx[qubit] = 0
    p0 = float(np.vdot(s.tensor[tuple(idx)], s.tensor[tuple(idx)]).real / s.norm2())
    bit = int(rng.random() >= p0)
    keep = p0 if bit == 0 else 1 - p0
    if keep < 1e-14:
        raise RuntimeError("measurement collapsed onto a zero-norm branch")
    idx[qubit] = 1 - bit
    s.tensor[tuple(idx)] = 0
    s.tensor /= np.sqrt(keep * state.norm2())
    for k in reversed(_BASIS_ROTATION[basis]):
        s.apply_matrix(_FIXED[k].conj().T, qubit)
    return bit, s


def string_plus_probability(state: StateVector, string: str) -> float:
    """Probability that measuring a Pauli string returns +1.

    Measurement is realized as single-qubit basis rotations followed by Z readout;
    the eigenvalue is the parity of the non-identity positions.
    """
    s = state.copy()
    for q, c in enumerate(string):
        if c != "I":
            for k in _BASIS_ROTATION[c]:
                s.apply_matrix(_FIXED[k], q)
    probs = np.abs(s.tensor) ** 2
    if s.has_memory:
        probs = probs.sum(axis=-1)
    parity = np.zeros(probs.shape, dtype=np.int8)
    for q, c in enumerate(string):
        if c != "I":
            shape = [1] * probs.ndim
            shape[q] = 2
            parity = parity ^ np.arange(2, dtype=np.int8).reshape(shape)
    p_plus = float(probs[parity == 0].sum() / probs.sum())
    return min(max(p_plus, 0.0), 1.0)


def sample_string(state: StateVector, string: str, shots: int, rng) -> int:
    """Number of +1 outcomes in `shots` fresh-preparation measurements of a Pauli string."""
    return int(rng.binomial(shots, string_plus_probability(state, string)))
