"""Baseline estimator: sample every Pauli string independently and sum classically."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .cps import term_means
from .pauli import Observable
from .statevector import PrepCircuit


class AllocationError(ValueError):
    pass


@dataclass
class QeeResult:
    estimate: float
    per_term_means: tuple[float, ...]
    per_term_shots: tuple[int, ...]
    variance_analytic: float
    T: int

    def to_dict(self) -> dict:
        d = asdict(self)
        d["per_term_means"] = list(self.per_term_means)
        d["per_term_shots"] = list(self.per_term_shots)
        return d


def allocate(obs: Observable, total_shots: int, allocation: str = "uniform") -> np.ndarray:
    total_shots = int(total_shots)
    if total_shots < obs.N:
        raise AllocationError(f"{total_shots} shots cannot cover {obs.N} terms")
    if allocation == "uniform":
        shots = np.full(obs.N, total_shots // obs.N)
    elif allocation == "weighted":
        a = np.abs(np.asarray(obs.coeffs))
        if a.sum() == 0:
            raise AllocationError("weighted allocation needs a nonzero coefficient")
        shots = np.floor(total_shots * a / a.sum()).astype(int)
    else:
        raise AllocationError(f"unknown allocation {allocation!r}")
    if np.any(shots == 0):
        raise AllocationError(f"terms {np.flatnonzero(shots == 0).tolist()} receive no shots")
    return shots


def qee_estimate(obs: Observable, V: PrepCircuit | None, total_shots: int, rng,
                 allocation: str = "uniform", p_shot: float = 0.0, exact_means=None) -> QeeResult:
    """Weighted sum of empirical string means.

    p_shot depolarizes each shot's outcome (a uniformly random +-1 with probability
    p_shot), which scales every string's mean by (1 - p_shot).
    """
    if exact_means is None:
        exact_means = term_means(obs, V)
    shots = allocate(obs, total_shots, allocation)
    mean = (1 - p_shot) * np.asarray(exact_means, dtype=float)
    plus = rng.binomial(shots, np.clip((1 + mean) / 2, 0, 1))
    m = 2 * plus / shots - 1
    a = np.asarray(obs.coeffs)
    # Bernoulli variance of each +-1 outcome is 1 - <P>^2
    var = float(np.sum(a**2 * (1 - m**2) / shots))
    return QeeResult(float(np.dot(a, m)), tuple(float(x) for x in m), tuple(int(s) for s in shots),
                     var, int(shots.sum()))
