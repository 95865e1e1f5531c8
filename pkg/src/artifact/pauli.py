"""Weighted Pauli-string observables: parsing, generation and exact evaluation."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

AXES = "IXYZ"

_MATRICES = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


_PHASES = {
    # Z|b> = (-1)^b |b>; Y = i X Z, applied after the flip: Y|b> = i(-1)^b |1-b>
    "Z": np.array([1, -1], dtype=complex),
    "Y": np.array([-1j, 1j], dtype=complex),
}


class ObservableError(ValueError):
    pass


def pauli_matrix(letter: str) -> np.ndarray:
    return _MATRICES[letter].copy()


def check_string(string: str) -> str:
    if not string:
        raise ObservableError("empty Pauli string")
    bad = [c for c in string if c not in AXES]
    if bad:
        raise ObservableError(f"unknown Pauli letter {bad[0]!r} in {string!r}")
    return string


@dataclass(frozen=True)
class Observable:
    """O = sum_j coeffs[j] * strings[j]; strings use qubit 0 as the leftmost letter."""

    coeffs: tuple[float, ...]
    strings: tuple[str, ...]
    duplicates: tuple[int, ...] = field(default=(), compare=False)

    def __post_init__(self):
        if len(self.coeffs) != len(self.strings):
            raise ObservableError("coefficient and string counts differ")
        if not self.strings:
            raise ObservableError("observable has no terms")
        n = len(self.strings[0])
        for s in self.strings:
            check_string(s)
            if len(s) != n:
                raise ObservableError(f"string length mismatch: {s!r} vs {n} qubits")
        coeffs = tuple(float(c) for c in self.coeffs)
        if not all(np.isfinite(coeffs)):
            raise ObservableError("non-finite coefficient")
        object.__setattr__(self, "coeffs", coeffs)
        object.__setattr__(self, "strings", tuple(self.strings))
        seen: dict[str, int] = {}
        dup = []
        for j, s in enumerate(self.strings):
            if s in seen:
                dup.append(j)
            seen.setdefault(s, j)
        object.__setattr__(self, "duplicates", tuple(dup))

    @property
    def n(self) -> int:
        return len(self.strings[0])

    @property
    def N(self) -> int:
        return len(self.strings)

    @property
    def terms(self) -> list[tuple[float, str]]:
        return list(zip(self.coeffs, self.strings))

    def scaled(self, c: float) -> "Observable":
        return Observable(tuple(c * a for a in self.coeffs), self.strings)

    def subset(self, indices: Iterable[int]) -> "Observable":
        idx = list(indices)
        return Observable(tuple(self.coeffs[i] for i in idx), tuple(self.strings[i] for i in idx))

    def matrix(self) -> np.ndarray:
        """Dense 2^n x 2^n matrix; only sensible for small n."""
        out = np.zeros((2**self.n, 2**self.n), dtype=complex)
        for a, s in self.terms:
            out += a * string_matrix(s)
        return out


@dataclass(frozen=True)
class ObservableStats:
    weight_l1: float
    weight_max: float
    N: int
    n: int


def stats(obs: Observable) -> ObservableStats:
    a = np.abs(np.asarray(obs.coeffs))
    return ObservableStats(float(a.sum()), float(a.max()), obs.N, obs.n)


def string_matrix(string: str) -> np.ndarray:
    out = np.ones((1, 1), dtype=complex)
    for c in string:
        out = np.kron(out, _MATRICES[c])
    return out


def parse_observable(text: str) -> Observable:
    coeffs, strings = [], []
    n = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ObservableError(f"line {lineno}: expected '<coefficient> <string>', got {raw!r}")
        try:
            a = float(parts[0])
        except ValueError:
            raise ObservableError(f"line {lineno}: coefficient {parts[0]!r} is not a real number") from None
        s = parts[1].upper()
        try:
            check_string(s)
        except ObservableError as exc:
            raise ObservableError(f"line {lineno}: {exc}") from None
        if n is None:
            n = len(s)
        elif len(s) != n:
            raise ObservableError(f"line {lineno}: string length {len(s)} does not match {n}")
        coeffs.append(a)
        strings.append(s)
    if not strings:
        raise ObservableError("observable has no terms")
    return Observable(tuple(coeffs), tuple(strings))


def serialize_observable(obs: Observable) -> str:
    return "".join(f"{a:.17g} {s}\n" for a, s in obs.terms)


def load_observable(path) -> Observable:
    with open(path) as fh:
        return parse_observable(fh.read())


def random_observable(n: int, N: int, coeff_scale: float = 1.0, seed=None) -> Observable:
    if n < 1 or N < 1:
        raise ObservableError("need n >= 1 and N >= 1")
    if coeff_scale <= 0:
        raise ObservableError("coeff_scale must be positive")
    rng = np.random.default_rng(seed)
    strings = []
    for _ in range(N):
        while True:
            s = "".join(AXES[i] for i in rng.integers(0, 4, size=n))
            if s != "I" * n:
                break
        strings.append(s)
    coeffs = rng.uniform(-coeff_scale, coeff_scale, size=N)
    return Observable(tuple(coeffs), tuple(strings))


def apply_string(tensor: np.ndarray, string: str) -> np.ndarray:
    """Apply a Pauli string to the leading len(string) axes of an amplitude tensor."""
    out = tensor
    for q, c in enumerate(string):
        if c == "I":
            continue
        if c in "XY":
            out = np.flip(out, axis=q)
        if c in "YZ":
            shape = [1] * out.ndim
            shape[q] = 2
            out = out * _PHASES[c].reshape(shape)
    return np.array(out, dtype=complex, copy=True)


def string_expectation(tensor: np.ndarray, string: str) -> float:
    val = np.vdot(tensor, apply_string(tensor, string))
    if abs(val.imag) > 1e-10:
        raise ObservableError("Pauli expectation has a non-negligible imaginary part")
    return float(val.real)


def _processing_tensor(state, n: int) -> np.ndarray:
    amps = getattr(state, "tensor", None)
    if amps is None:
        amps = np.asarray(state, dtype=complex)
    if getattr(state, "has_memory", False):
        raise ObservableError("expectation_exact needs a processing-only state")
    if amps.size != 2**n:
        raise ObservableError(f"state has {amps.size} amplitudes, observable acts on {n} qubits")
    return amps.reshape((2,) * n)


def term_expectations(obs: Observable, state) -> np.ndarray:
    t = _processing_tensor(state, obs.n)
    norm = float(np.vdot(t, t).real)
    if abs(norm - 1) > 1e-8:
        raise ObservableError(f"state is not normalized (norm^2 = {norm})")
    cache: dict[str, float] = {}
    out = np.empty(obs.N)
    for j, s in enumerate(obs.strings):
        if s not in cache:
            cache[s] = string_expectation(t, s)
        out[j] = cache[s]
    return out


def expectation_exact(obs: Observable, state) -> float:
    return float(np.dot(obs.coeffs, term_expectations(obs, state)))


def string_weights(strings: Sequence[str]) -> list[int]:
    return [sum(c != "I" for c in s) for s in strings]
