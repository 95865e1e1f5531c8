"""Depolarized readout distributions and the analytic resource budgets of both methods."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from .qsp import query_count_floor

ROBUST_ADDITIVE_LIMIT = 1 / math.sqrt(8)


@dataclass(frozen=True)
class NoiseModel:
    p1: float = 0.0
    n: int = 1
    additive: float = 0.0

    def __post_init__(self):
        if not 0 <= self.p1 <= 1:
            raise ValueError("p1 must lie in [0, 1]")
        if self.additive < 0:
            raise ValueError("additive error magnitude must be non-negative")

    @property
    def per_round_p(self) -> float:
        return min(1.0, 3 * self.p1 * self.n)

    @property
    def within_robust_regime(self) -> bool:
        return self.additive < ROBUST_ADDITIVE_LIMIT


def depolarized_distributions(phi_a: float, p: float) -> tuple[float, float]:
    if not 0 <= p <= 1:
        raise ValueError("p must lie in [0, 1]")
    px = (1 - p) * (1 + math.cos(2 * phi_a)) / 2 + p / 2
    py = (1 - p) * (1 - math.sin(2 * phi_a)) / 2 + p / 2
    return px, py


def noisy_angle_bias(phi_a: float, p: float, M_q: int, rng):
    """Monte Carlo tan estimator under depolarization.

    Returns (Phi_hat, bias, sigma): Phi_hat from all M_q shots per basis, bias =
    |Q_hat - tan 2 Phi_a| with Q_hat = (1 - 2 P(Y=0)) / (2 P(X=0) - 1), and sigma the
    delta-method standard error of Q_hat.
    """
    px, py = depolarized_distributions(phi_a, p)
    kx = rng.binomial(M_q, px)
    ky = rng.binomial(M_q, py)
    shots = M_q
    fx, fy = kx / shots, ky / shots
    c, s = 2 * fx - 1, 1 - 2 * fy
    q_hat = s / c
    q_true = math.tan(2 * phi_a)
    # Var(c) = 4 px(1-px)/M, Var(s) = 4 py(1-py)/M
    var = (4 * py * (1 - py) / shots) / c**2 + (s**2 / c**4) * (4 * px * (1 - px) / shots)
    return 0.5 * math.atan2(s, c), abs(q_hat - q_true), math.sqrt(var)


@dataclass(frozen=True)
class ResourceEstimate:
    method: str
    N: int
    n: int
    eta: float
    n_qsp: float
    T: float
    p1_max: float
    processing_coherence: float
    memory_coherence: float
    cost_model: str = "linear"
    controlled_reflection_gates: int = 0

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ResourceEstimate":
        return cls(**json.loads(text))


def reflection_cost(n: int, cost_model: str) -> int:
    """Gate count of one controlled reflection: O(n) with native multi-controlled Z, else O(n^2)."""
    if cost_model == "linear":
        return n + 1
    if cost_model == "quadratic":
        return (n + 1) ** 2
    raise ValueError(f"unknown cost model {cost_model!r}")


def budget_cps(N: int, n: int, eta: float, cost_model: str = "linear") -> ResourceEstimate:
    if N < 2:
        raise ValueError("the CPS budget needs N >= 2")
    n_qsp = query_count_floor(N, eta)
    T = round(N / eta * n_qsp)
    p1_max = math.sqrt(eta) / (3 * N * n_qsp * n)
    return ResourceEstimate("CPS", N, n, eta, n_qsp, T, p1_max, n_qsp, N * n_qsp, cost_model,
                            reflection_cost(n, cost_model))


def budget_qee(N: int, n: int, eta: float) -> ResourceEstimate:
    if N < 1 or eta <= 0:
        raise ValueError("need N >= 1 and eta > 0")
    T = N**2 / eta
    if float(T).is_integer():
        T = int(T)
    p1_max = math.sqrt(eta) / (N * n)
    return ResourceEstimate("QEE", N, n, eta, 1.0, T, p1_max, 1.0, 0.0, "none", 0)


def variance_ratio(N: int, eta: float) -> float:
    return query_count_floor(N, eta) / N


def budget_table(N: int, n: int, eta: float, cost_model: str = "linear") -> list[dict]:
    return [budget_qee(N, n, eta).to_dict(), budget_cps(N, n, eta, cost_model).to_dict()]
