"""Coherent Pauli summation: sign estimation, phase encoding, tomography and the ladder.

Memory conventions. The memory qubit starts in |0> = (|+> + |->)/sqrt(2). Encoding
a term multiplies the |+> amplitude by exp(+i tau cos theta) and the |-> amplitude
by exp(-i tau cos theta). After a total phase Phi the memory is
cos(Phi)|0> + i sin(Phi)|1>, and the two readouts are
    P(X=0) = (1 + cos 2Phi)/2    (outcome |0> of the computational readout)
    P(Y=0) = (1 - sin 2Phi)/2    (outcome |-i> of the Y readout)
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, asdict
from typing import Callable, Sequence

import numpy as np

from . import qsp
from .pauli import Observable, stats
from .statevector import (PrepCircuit, StateVector, apply_U_Pj, gate_matrix, prepare,
                          string_plus_probability)

_H = gate_matrix("H")


class LadderError(RuntimeError):
    def __init__(self, message: str, level: int):
        super().__init__(message)
        self.level = level


class DegenerateSampleError(ValueError):
    pass


# ---------------------------------------------------------------- step 1: signs

@dataclass(frozen=True)
class SignEstimate:
    signs: tuple[int, ...]
    shots_per_string: int
    means: tuple[float, ...]
    flagged_near_zero: tuple[int, ...]

    def string_signs(self, coeffs) -> np.ndarray:
        """Estimated sign of <P_j> itself: s_j * sign(a_j), with sign(0) taken as +1."""
        a = np.sign(np.asarray(coeffs, dtype=float))
        a[a == 0] = 1
        return np.asarray(self.signs) * a


def default_n1(N: int, eta: float) -> int:
    return max(1, math.ceil(4 * math.log(max(N / math.sqrt(eta), math.e))))


def term_means(obs: Observable, V: PrepCircuit) -> np.ndarray:
    """Exact <P_j> on V|0>, computed once per instance and reused by the samplers."""
    psi = prepare(V, obs.n)
    return np.array([2 * string_plus_probability(psi, s) - 1 for s in obs.strings])


def estimate_signs(obs: Observable, V: PrepCircuit | None, n1: int, rng,
                   exact_means: np.ndarray | None = None) -> SignEstimate:
    if n1 < 1:
        raise ValueError("n1 must be at least 1")
    if exact_means is None:
        exact_means = term_means(obs, V)
    p_plus = np.clip((1 + np.asarray(exact_means)) / 2, 0, 1)
    plus = rng.binomial(n1, p_plus)
    means = 2 * plus / n1 - 1
    prod = np.sign(np.asarray(obs.coeffs) * means)
    signs = np.where(prod == 0, 1, prod).astype(int)
    threshold = 2 / math.sqrt(n1)
    flagged = tuple(int(j) for j in np.flatnonzero((np.abs(means) < threshold) | (means == 0)))
    return SignEstimate(tuple(int(s) for s in signs), int(n1), tuple(float(m) for m in means), flagged)


def exact_signs(obs: Observable, exact_means) -> SignEstimate:
    prod = np.sign(np.asarray(obs.coeffs) * np.asarray(exact_means))
    signs = np.where(prod == 0, 1, prod).astype(int)
    return SignEstimate(tuple(int(s) for s in signs), 0, tuple(float(m) for m in exact_means), ())


# ---------------------------------------------------------------- readout

def memory_readout(a0: complex, a1: complex) -> tuple[float, float]:
    """(P(X=0), P(Y=0)) for memory amplitudes in the computational basis."""
    norm = abs(a0) ** 2 + abs(a1) ** 2
    px = abs(a0) ** 2 / norm
    y = 2 * (a1 * np.conj(a0)).imag / norm
    return float(px), float((1 - y) / 2)


def density_readout(rho: np.ndarray) -> tuple[float, float]:
    tr = rho[0, 0].real + rho[1, 1].real
    px = rho[0, 0].real / tr
    y = 2 * rho[1, 0].imag / tr
    return float(px), float((1 - y) / 2)


def ideal_probabilities(phi_a: float) -> tuple[float, float]:
    return (1 + math.cos(2 * phi_a)) / 2, (1 - math.sin(2 * phi_a)) / 2


def sample_phase(probabilities: tuple[float, float], shots: int, rng) -> tuple[int, int]:
    """Counts of X=0 and Y=0 outcomes over `shots` fresh encodings per basis."""
    if shots < 1:
        raise ValueError("shots must be at least 1")
    px, py = (min(max(p, 0.0), 1.0) for p in probabilities)
    return int(rng.binomial(shots, px)), int(rng.binomial(shots, py))


def estimate_angle(counts_x: int, counts_y: int, shots_x: int, shots_y: int | None = None):
    """Return (Phi_hat, cos_hat, sin_hat) with 2 Phi_hat = atan2(sin_hat, cos_hat) in (-pi, pi].

    cos_hat = 2 P(X=0) - 1 and sin_hat = 1 - 2 P(Y=0). Their ratio is the tan(2 Phi)
    estimator; the pair fixes the quadrant.
    """
    shots_y = shots_x if shots_y is None else shots_y
    if shots_x < 1 or shots_y < 1:
        raise ValueError("need at least one shot in each basis")
    c = 2 * counts_x / shots_x - 1
    s = 1 - 2 * counts_y / shots_y
    return angle_from_estimates(c, s)


def angle_from_estimates(c: float, s: float):
    if abs(c) < 1e-12 and abs(s) < 1e-12:
        raise DegenerateSampleError("cos and sin estimates both vanish; angle undefined")
    two_phi = math.atan2(s, c)
    if two_phi == -math.pi:
        two_phi = math.pi
    return two_phi / 2, c, s


# ---------------------------------------------------------------- encoding backends

@dataclass(frozen=True)
class Injection:
    """Additive QSP error r exp(+-i delta) on the two memory branches of each term."""

    r: Sequence[float]
    delta: Sequence[float]


def encode_round_spectral(memory, tau: float, theta: float, injected: tuple[float, float] | None = None):
    """memory = (alpha, beta) amplitudes on |+>, |->; returns the updated pair."""
    alpha, beta = memory
    ph = tau * math.cos(theta)
    fp, fm = np.exp(1j * ph), np.exp(-1j * ph)
    if injected is not None:
        r, d = injected
        fp = fp + r * np.exp(1j * d)
        fm = fm + r * np.exp(-1j * d)
    # not renormalized: an injected error shows up as the (1 + r)^N amplitude growth,
    # and the readout divides by the norm
    return alpha * fp, beta * fm


def pm_to_computational(memory):
    alpha, beta = memory
    return (alpha + beta) / math.sqrt(2), (alpha - beta) / math.sqrt(2)


def taus(obs: Observable, signs: SignEstimate, epsilon: float) -> np.ndarray:
    return np.asarray(signs.signs) * epsilon * np.abs(np.asarray(obs.coeffs))


class SpectralBackend:
    """Each term acts on the memory as its ideal (or error-injected) eigenphase pair."""

    name = "spectral"

    def __init__(self, obs: Observable, exact_means, injection: Injection | None = None):
        self.obs = obs
        self.thetas = np.arccos(np.clip(np.abs(np.asarray(exact_means, dtype=float)), 0, 1))
        self.injection = injection

    def encode(self, signs: SignEstimate, epsilon: float):
        mem = (1 / math.sqrt(2) + 0j, 1 / math.sqrt(2) + 0j)
        for j, (tau, th) in enumerate(zip(taus(self.obs, signs, epsilon), self.thetas)):
            inj = None
            if self.injection is not None:
                inj = (self.injection.r[j], self.injection.delta[j])
            mem = encode_round_spectral(mem, float(tau), float(th), inj)
        return mem

    def probabilities(self, signs: SignEstimate, epsilon: float) -> tuple[float, float]:
        return memory_readout(*pm_to_computational(self.encode(signs, epsilon)))

    def rounds(self, signs: SignEstimate, epsilon: float, n_qsp: float) -> float:
        return self.obs.N * n_qsp

    def phase(self, signs: SignEstimate, epsilon: float) -> float:
        """Accumulated Phi for the error-free encoding: sum_j tau_j cos theta_j."""
        return float(np.dot(taus(self.obs, signs, epsilon), np.cos(self.thetas)))


def encode_round_circuit(state: StateVector, plan: qsp.QspPhasePlan, V: PrepCircuit, P: str,
                         string_sign: int = 1) -> StateVector:
    """One term of the controlled QSP sequence acting on the joint register + memory state.

    Inside the Hadamard frame of the memory, step i applies
    exp(-i psi Z/2) H c-(sigma U)^(+-1) H exp(i psi Z/2), with U = V Pi0 V^dag P and
    sigma = -string_sign the controlled global sign that makes the eigenvalues
    exp(+-i theta). Odd steps use U with psi = phi_i, even steps U^dag with
    psi = phi_i - pi, so the eigenphase prefactors exp(+-i theta/2) cancel in pairs.
    A final exp(i tau Z) completes exp(i tau (cos theta - 1)) to exp(i tau cos theta).
    """
    if plan.n_qsp % 2:
        raise ValueError("plan length must be even")
    if len(P) != state.n:
        raise ValueError(f"string {P!r} does not match the {state.n}-qubit register")
    if plan.n_qsp == 0:
        return state
    m = state.memory
    flip = string_sign > 0
    state.apply_matrix(_H, m)
    for i, phi in enumerate(plan.phases):
        inverse = i % 2 == 1
        psi = phi - math.pi if inverse else phi
        state.apply_matrix(gate_matrix("RZ", -psi), m)
        state.apply_matrix(_H, m)
        apply_U_Pj(state, V, P, controlled=True, inverse=inverse)
        if flip:
            state.memory_sign()
        state.apply_matrix(_H, m)
        state.apply_matrix(gate_matrix("RZ", psi), m)
    state.apply_matrix(gate_matrix("RZ", -2 * plan.tau), m)
    state.apply_matrix(_H, m)
    return state


class CircuitBackend:
    """Full statevector simulation of the controlled QSP sequences."""

    name = "circuit"

    def __init__(self, obs: Observable, V: PrepCircuit, eps_qsp: float, seed=0):
        self.obs = obs
        self.V = V
        self.eps_qsp = eps_qsp
        self.seed = seed
        self.plans: dict = {}

    def plan(self, tau: float) -> qsp.QspPhasePlan:
        return qsp.plan_for(float(tau), self.eps_qsp, self.seed)

    def encode(self, signs: SignEstimate, epsilon: float) -> StateVector:
        state = prepare(self.V, self.obs.n, with_memory=True)
        string_signs = signs.string_signs(self.obs.coeffs)
        for j, tau in enumerate(taus(self.obs, signs, epsilon)):
            plan = self.plan(tau)
            self.plans[j] = plan
            encode_round_circuit(state, plan, self.V, self.obs.strings[j], int(string_signs[j]))
        return state

    def probabilities(self, signs: SignEstimate, epsilon: float) -> tuple[float, float]:
        return density_readout(self.encode(signs, epsilon).memory_density())

    def rounds(self, signs: SignEstimate, epsilon: float, n_qsp=None) -> float:
        return float(sum(self.plan(t).n_qsp for t in taus(self.obs, signs, epsilon)))


class InjectedPhaseBackend:
    """Skips encoding: the memory carries exactly Phi = epsilon * p_sum."""

    name = "injected"

    def __init__(self, p_sum: float):
        self.p_sum = p_sum

    def probabilities(self, signs, epsilon: float) -> tuple[float, float]:
        return ideal_probabilities(epsilon * self.p_sum)


# ---------------------------------------------------------------- noise at the readout level

@dataclass(frozen=True)
class ReadoutNoise:
    """Depolarizing probability per encoding and additive tomography errors.

    additive: sup-magnitude delta; each level draws delta_x, delta_y uniformly from
    [-delta, delta] unless `additive_mode` is "fixed" (both equal to +delta).
    """

    depolarizing: float = 0.0
    additive: float = 0.0
    additive_mode: str = "uniform"

    def apply(self, probs: tuple[float, float], rng) -> tuple[float, float]:
        p = self.depolarizing
        px, py = ((1 - p) * q + p / 2 for q in probs)
        if self.additive:
            if self.additive_mode == "fixed":
                dx = dy = self.additive
            else:
                dx, dy = rng.uniform(-self.additive, self.additive, size=2)
            px, py = px + dx, py + dy
        return min(max(px, 0.0), 1.0), min(max(py, 0.0), 1.0)


# ---------------------------------------------------------------- ladder

@dataclass(frozen=True)
class LadderSchedule:
    eps0: float
    d_L: int
    alpha: int = 3
    gamma: int = 3

    def __post_init__(self):
        if self.d_L < 1:
            raise ValueError("d_L must be at least 1")
        if self.eps0 <= 0:
            raise ValueError("eps0 must be positive")
        if min(self.shots) < 1:
            raise ValueError("every level needs at least one shot")

    @property
    def shots(self) -> list[int]:
        return [self.alpha + self.gamma * (self.d_L - l) for l in range(1, self.d_L + 1)]

    @property
    def M_q(self) -> int:
        return sum(self.shots)

    @property
    def encodings(self) -> int:
        """Encoding repetitions: every level measures M_l shots in each of two bases."""
        return 2 * self.M_q

    def scale(self, l: int) -> float:
        return 2**l * self.eps0

    @property
    def final_half_width(self) -> float:
        """Half-width pi / 2^d_L of the last window, in units of P_sum."""
        return math.pi / 2**self.d_L / (2 * self.eps0)


def depth_for(eta: float) -> int:
    if not 0 < eta < 1:
        raise ValueError("eta must lie in (0, 1)")
    return max(1, int(math.floor(math.log2(1 / eta))))


def default_eps0(d_L: int, weight_l1: float) -> float:
    """min(pi / 2^(d_L+1), pi / (8 sum|a|)): the second term keeps level 1 unambiguous."""
    return min(math.pi / 2 ** (d_L + 1), math.pi / (8 * weight_l1))


def schedule_for(obs: Observable, eta: float, alpha: int = 3, gamma: int = 3,
                 eps0: float | None = None) -> LadderSchedule:
    d = depth_for(eta)
    if eps0 is None:
        eps0 = default_eps0(d, stats(obs).weight_l1)
    return LadderSchedule(float(eps0), d, int(alpha), int(gamma))


def _wrap(x: float) -> float:
    """Map to [-pi, pi)."""
    return (x + math.pi) % (2 * math.pi) - math.pi


@dataclass
class LevelRecord:
    l: int
    M_l: int
    xi_hat: float | None
    window_center: float
    estimate: float
    degenerate: bool = False


def ladder_estimate(schedule: LadderSchedule, probabilities: Callable[[float], tuple[float, float]],
                    rng, noise: ReadoutNoise | None = None):
    """Phase-wrapping estimate of P_sum.

    The ladder runs on the doubled angle y = 2 eps0 P_sum. Level l encodes at scale
    2^l eps0, so its readout angle xi_l is 2^l y mod 2pi. Level 1 needs |2y| < pi and
    sets y_1 = xi_1 / 2. Later levels take the unique y_l in
    [y_(l-1) - pi/2^l, y_(l-1) + pi/2^l) with 2^l y_l = xi_l mod 2pi. The result is
    y_dL / (2 eps0). A level whose cos and sin estimates both vanish keeps the
    previous value and is flagged.
    """
    y = 0.0
    records = []
    for l, M in enumerate(schedule.shots, start=1):
        probs = probabilities(schedule.scale(l))
        if noise is not None:
            probs = noise.apply(probs, rng)
        cx, cy = sample_phase(probs, M, rng)
        center = y
        try:
            phi, _, _ = angle_from_estimates(2 * cx / M - 1, 1 - 2 * cy / M)
            xi = 2 * phi
        except DegenerateSampleError:
            records.append(LevelRecord(l, M, None, center, y, True))
            continue
        if l == 1:
            y = xi / 2
        else:
            y = center + _wrap(xi - 2**l * center) / 2**l
        records.append(LevelRecord(l, M, xi, center, y))
    return y / (2 * schedule.eps0), records


# ---------------------------------------------------------------- full protocol

def spectral_query_count(N: int, eta: float) -> float:
    """Per-string QSP queries charged to the spectral backend (log-log formula, floor of 2)."""
    return qsp.query_count_floor(N, eta)


def encoding_depolarization(p1: float, n: int, rounds: float) -> float:
    """Memory depolarization after `rounds` QSP rounds at p = 3 p1 n each."""
    p_round = min(1.0, 3 * p1 * n)
    return 1 - (1 - p_round) ** rounds


def state_preparations(N: int, n_qsp: float, M_q: int, n1: int) -> float:
    """T = N (n_qsp M_q + n1)."""
    return N * (n_qsp * M_q + n1)


@dataclass
class CpsResult:
    estimate: float
    variance: float | None
    T: float
    d_L: int
    alpha: int
    gamma: int
    eps0: float
    n1: int
    n_qsp: float
    backend: str
    signs: tuple[int, ...]
    flagged_terms: tuple[int, ...]
    flagged_bias_bound: float
    per_level: list = field(default_factory=list)
    degenerate_levels: int = 0

    def to_dict(self) -> dict:
        d = asdict(self)
        d["signs"] = list(self.signs)
        d["flagged_terms"] = list(self.flagged_terms)
        return d


def cps_estimate(obs: Observable, V: PrepCircuit, eta: float, rng, backend: str = "spectral",
                 n1: int | None = None, alpha: int = 3, gamma: int = 3, eps0: float | None = None,
                 eps_qsp: float | None = None, noise: ReadoutNoise | None = None,
                 p1: float = 0.0, exact_means=None, forced_signs: SignEstimate | None = None,
                 injection: Injection | None = None) -> CpsResult:
    """Signs, schedule, ladder. `p1` adds depolarization 3 p1 n per QSP round on the memory."""
    if exact_means is None:
        exact_means = term_means(obs, V)
    N = obs.N
    n1 = default_n1(N, eta) if n1 is None else int(n1)
    schedule = schedule_for(obs, eta, alpha, gamma, eps0)
    signs = forced_signs or estimate_signs(obs, V, n1, rng, exact_means)
    if eps_qsp is None:
        eps_qsp = min(0.1, math.sqrt(eta) / N)
    n_qsp = None
    if backend == "spectral":
        engine = SpectralBackend(obs, exact_means, injection)
        n_qsp = spectral_query_count(N, eta)
    elif backend == "circuit":
        engine = CircuitBackend(obs, V, eps_qsp)
    else:
        raise ValueError(f"unknown backend {backend!r}")

    def probabilities(eps):
        probs = engine.probabilities(signs, eps)
        if p1:
            p_enc = encoding_depolarization(p1, obs.n, engine.rounds(signs, eps, n_qsp))
            probs = ReadoutNoise(p_enc).apply(probs, rng)
        return probs

    est, records = ladder_estimate(schedule, probabilities, rng, noise)
    if n_qsp is None:
        lengths = [p.n_qsp for p in engine.plans.values()]
        n_qsp = float(np.mean(lengths)) if lengths else 0.0
    a = np.abs(np.asarray(obs.coeffs))
    means = np.abs(np.asarray(exact_means))
    bias = float(sum(2 * a[j] * means[j] for j in signs.flagged_near_zero))
    return CpsResult(
        estimate=float(est), variance=None,
        T=state_preparations(N, n_qsp, schedule.encodings, signs.shots_per_string),
        d_L=schedule.d_L, alpha=schedule.alpha, gamma=schedule.gamma, eps0=schedule.eps0,
        n1=signs.shots_per_string, n_qsp=float(n_qsp), backend=backend, signs=signs.signs,
        flagged_terms=signs.flagged_near_zero, flagged_bias_bound=bias,
        per_level=[asdict(r) for r in records],
        degenerate_levels=sum(r.degenerate for r in records),
    )
