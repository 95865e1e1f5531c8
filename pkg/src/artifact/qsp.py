"""Quantum signal processing: Jacobi-Anger series, truncation order, phase synthesis.

Rotation convention: R_phi(theta) = exp(-i theta/2 (X cos phi + Y sin phi)). A
product of rotations is decomposed as W = A I + i B Z + i C X + i D Y with real
A, B, C, D.

Since Z R_phi(theta) Z = R_phi(-theta), A and B are even in theta while C and D
are odd, and every sequence gives W(0) = I. An even target such as
exp(i tau cos theta) therefore cannot sit in A + iC. Synthesis instead fits the
diagonal entry A + iB to exp(i tau (cos theta - 1)). The protocol restores the
missing constant with a memory rotation exp(i tau Z), so that a memory qubit in
|0> (|1>) picks up exp(+i tau cos theta) (exp(-i tau cos theta)).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares

CERT_GRID = 2048


class SynthesisError(RuntimeError):
    def __init__(self, message: str, best_error: float, best_phases=None):
        super().__init__(message)
        self.best_error = best_error
        self.best_phases = best_phases


def bessel_j(m: int, tau: float) -> float:
    """J_m(tau) from the ascending series, stopping once terms fall below 1e-16 relative."""
    m = int(m)
    if m < 0:
        raise ValueError("order must be non-negative")
    if abs(tau) > 4:
        raise ValueError(f"|tau| = {abs(tau)} outside the supported range |tau| <= 4")
    if tau == 0:
        return 1.0 if m == 0 else 0.0
    half = tau / 2
    term = half**m / math.factorial(m)
    total = term
    q = -half * half
    k = 0
    while True:
        k += 1
        term *= q / (k * (k + m))
        total += term
        if abs(term) <= 1e-16 * abs(total):
            break
    return total


def tail_bound(tau: float, k: int) -> float:
    """Upper bound 4 |e tau / (2(k+1))|^(k+1) on the dropped Jacobi-Anger tail 2 sum_{m>k} |J_m|."""
    return 4.0 * abs(math.e * tau / (2 * (k + 1))) ** (k + 1)


def truncation_order(tau: float, eps_target: float) -> int:
    if not 0 < eps_target < 1:
        raise ValueError("eps_target must lie in (0, 1)")
    k = max(1, math.ceil(abs(tau)))
    while tail_bound(tau, k) > eps_target:
        k += 1
    return k


@dataclass(frozen=True)
class JacobiAngerSeries:
    """Truncated cos(tau cos t) + i sin(tau cos t), keeping Bessel orders <= k.

    cos_coeffs[m] multiplies cos(2m t) in A (m = 0..k//2); sin_series_coeffs[m-1]
    multiplies cos((2m-1) t) in C (m = 1..(k+1)//2). Both already include `rescale`.
    """

    tau: float
    order_k: int
    cos_coeffs: tuple[float, ...]
    sin_series_coeffs: tuple[float, ...]
    rescale: float

    def A(self, theta):
        theta = np.asarray(theta, dtype=float)
        return sum(c * np.cos(2 * m * theta) for m, c in enumerate(self.cos_coeffs))

    def C(self, theta):
        theta = np.asarray(theta, dtype=float)
        out = np.zeros_like(theta)
        for m, c in enumerate(self.sin_series_coeffs, start=1):
            out = out + c * np.cos((2 * m - 1) * theta)
        return out

    def value(self, theta):
        return self.A(theta) + 1j * self.C(theta)

    @property
    def tail(self) -> float:
        return tail_bound(self.tau, self.order_k)


def target_series(tau: float, k: int) -> JacobiAngerSeries:
    if k < abs(tau):
        raise ValueError(f"order k = {k} is smaller than |tau| = {abs(tau)}")
    scale = 1.0 / (1.0 + tail_bound(tau, k))
    a = [bessel_j(0, tau)] + [2 * (-1) ** m * bessel_j(2 * m, tau) for m in range(1, k // 2 + 1)]
    c = [-2 * (-1) ** m * bessel_j(2 * m - 1, tau) for m in range(1, (k + 1) // 2 + 1)]
    return JacobiAngerSeries(float(tau), int(k), tuple(scale * x for x in a), tuple(scale * x for x in c), scale)


def _rotations(phases: np.ndarray, theta: np.ndarray):
    c = np.cos(theta / 2)[None, :]
    s = np.sin(theta / 2)[None, :]
    e = np.exp(1j * phases)[:, None]
    R = np.empty((len(phases), len(theta), 2, 2), dtype=complex)
    R[..., 0, 0] = c
    R[..., 1, 1] = c
    R[..., 0, 1] = -1j * s / e
    R[..., 1, 0] = -1j * s * e
    dR = np.zeros_like(R)
    dR[..., 0, 1] = -s / e
    dR[..., 1, 0] = s * e
    return R, dR


def _decompose(M: np.ndarray):
    A = ((M[:, 0, 0] + M[:, 1, 1]) / 2).real
    B = ((M[:, 0, 0] - M[:, 1, 1]) / 2).imag
    C = ((M[:, 0, 1] + M[:, 1, 0]) / 2).imag
    D = ((M[:, 0, 1] - M[:, 1, 0]) / 2).real
    return A, B, C, D


def sequence_matrices(phases, theta) -> np.ndarray:
    """R_{phi_n}(theta) ... R_{phi_1}(theta) for every theta, shape (len(theta), 2, 2)."""
    phases = np.asarray(phases, dtype=float).reshape(-1)
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    W = np.broadcast_to(np.eye(2, dtype=complex), (len(theta), 2, 2)).copy()
    if len(phases):
        R, _ = _rotations(phases, theta)
        for i in range(len(phases)):
            W = R[i] @ W
    return W


def evaluate_sequence(phases, theta):
    """(A, B, C, D) of the rotation product at each theta."""
    scalar = np.ndim(theta) == 0
    out = _decompose(sequence_matrices(phases, theta))
    if scalar:
        return tuple(float(x[0]) for x in out)
    return out


class _Fit:
    """Residual and analytic Jacobian of (A + iB)(theta) - target, with a one-entry cache."""

    def __init__(self, theta, target):
        self.theta = theta
        self.target = target
        self._key = None

    def _eval(self, phases):
        key = phases.tobytes()
        if key == self._key:
            return self._val
        n = len(phases)
        R, dR = _rotations(phases, self.theta)
        eye = np.broadcast_to(np.eye(2, dtype=complex), (len(self.theta), 2, 2))
        pre = [eye]
        for i in range(n):
            pre.append(R[i] @ pre[-1])
        suf = [None] * n
        acc = eye
        for i in range(n - 1, -1, -1):
            suf[i] = acc
            acc = acc @ R[i]
        diag = lambda M: ((M[:, 0, 0] + M[:, 1, 1]) / 2).real + 1j * ((M[:, 0, 0] - M[:, 1, 1]) / 2).imag
        d = diag(pre[n]) - self.target
        J = np.empty((2 * len(self.theta), n))
        for i in range(n):
            g = diag(suf[i] @ dR[i] @ pre[i])
            J[: len(self.theta), i] = g.real
            J[len(self.theta):, i] = g.imag
        self._key = key
        self._val = (np.concatenate([d.real, d.imag]), J)
        return self._val

    def residual(self, phases):
        return self._eval(phases)[0]

    def jacobian(self, phases):
        return self._eval(phases)[1]


@dataclass(frozen=True)
class QspPhasePlan:
    phases: tuple[float, ...]
    tau: float
    eps_certified: float
    order_k: int = 0
    diagnostics: dict = field(default_factory=dict, compare=False)

    @property
    def n_qsp(self) -> int:
        return len(self.phases)

    def response(self, theta):
        """exp(i tau) (A + iB)(theta): the approximation to exp(i tau cos theta)."""
        A, B, _, _ = evaluate_sequence(self.phases, np.atleast_1d(theta))
        return np.exp(1j * self.tau) * (A + 1j * B)

    def to_dict(self) -> dict:
        return {"tau": self.tau, "phases": list(self.phases), "eps_certified": self.eps_certified,
                "n_qsp": self.n_qsp, "order_k": self.order_k}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, d: dict) -> "QspPhasePlan":
        plan = cls(tuple(float(p) for p in d["phases"]), float(d["tau"]), float(d["eps_certified"]),
                   int(d.get("order_k", 0)))
        if plan.n_qsp != int(d.get("n_qsp", plan.n_qsp)):
            raise ValueError("n_qsp does not match the phase vector length")
        return plan


def certify(phases, tau: float, grid: int = CERT_GRID) -> float:
    """max over a uniform grid on [0, pi] of |exp(i tau)(A + iB) - exp(i tau cos theta)|."""
    theta = np.linspace(0.0, np.pi, grid)
    A, B, _, _ = evaluate_sequence(phases, theta)
    return float(np.max(np.abs(np.exp(1j * tau) * (A + 1j * B) - np.exp(1j * tau * np.cos(theta)))))


def _least_squares(x0, fit: _Fit, max_nfev: int):
    res = least_squares(fit.residual, x0, jac=fit.jacobian, method="lm",
                        xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=max_nfev)
    return res.x


def synthesize_phases(series: JacobiAngerSeries, eps_target: float | None = None, seed=0,
                      restarts: int = 8, extra_pairs: int = 6, perturbation: float = 0.3,
                      max_nfev: int = 300) -> QspPhasePlan:
    """Multi-start Levenberg-Marquardt fit of the phase vector, certified on a dense grid.

    Starts at n = 2k phases; if no start certifies below the tolerance, the sequence
    is lengthened by one pair at a time, up to `extra_pairs` extra pairs. The
    tolerance is eps_target when given, else 4x the tail bound.
    """
    tau, k = series.tau, series.order_k
    if tau == 0:
        return QspPhasePlan((), 0.0, 0.0, k, {"starts": 0})
    tol = eps_target if eps_target is not None else 4 * series.tail
    if abs(tau) != tau:
        plan = synthesize_phases(target_series(-tau, k), tol, seed, restarts, extra_pairs,
                                 perturbation, max_nfev)
        # complex conjugation of the product maps phi -> pi - phi and A + iB -> A - iB
        phases = tuple(float(np.pi - p) for p in plan.phases)
        return QspPhasePlan(phases, tau, certify(phases, tau), k, dict(plan.diagnostics))
    rng = np.random.default_rng(seed)
    best_err, best_x, starts = np.inf, None, 0
    for n in range(2 * k, 2 * (k + extra_pairs) + 1, 2):
        theta = np.linspace(0.0, np.pi, max(96, 8 * n))
        fit = _Fit(theta, np.exp(1j * tau * (np.cos(theta) - 1)))
        for _ in range(restarts):
            starts += 1
            x = _least_squares(perturbation * rng.standard_normal(n), fit, max_nfev)
            x = np.mod(x, 2 * np.pi)
            err = certify(x, tau)
            if err < best_err:
                best_err, best_x = err, x
            if err <= tol:
                return QspPhasePlan(tuple(float(p) for p in x), float(tau), err, k,
                                    {"starts": starts, "tolerance": tol})
    raise SynthesisError(f"no phase vector certified below {tol:.3g} for tau={tau}, k={k}; "
                         f"best {best_err:.3g}", best_err, best_x)


_PLAN_CACHE: dict = {}


def plan_for(tau: float, eps_target: float, seed=0) -> QspPhasePlan:
    """Cached synthesis at the truncation order implied by eps_target."""
    key = (float(tau), float(eps_target), seed)
    if key not in _PLAN_CACHE:
        k = truncation_order(tau, eps_target)
        _PLAN_CACHE[key] = synthesize_phases(target_series(tau, k), eps_target, seed=seed)
    return _PLAN_CACHE[key]


def qsp_query_count(N: int, eta: float) -> float:
    """ln(N / sqrt(eta)) / ln ln(N / sqrt(eta)), natural logarithms."""
    if N < 1 or eta <= 0:
        raise ValueError("need N >= 1 and eta > 0")
    L = math.log(N / math.sqrt(eta))
    if L <= 1:
        raise ValueError(f"N / sqrt(eta) = {N / math.sqrt(eta):.4g} must exceed e for the log-log form")
    return L / math.log(L)


def query_count_floor(N: int, eta: float, floor: float = 2.0) -> float:
    """qsp_query_count where the log-log form is defined, else the shortest even sequence length.

    Wherever the form is defined its value is at least e, so the floor only covers the
    small-N domain edge.
    """
    try:
        return max(floor, qsp_query_count(N, eta))
    except ValueError:
        if N < 1 or eta <= 0:
            raise
        return floor
