"""Seeded, order-preserving trial execution and the estimator comparison sweep."""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import cps
from .pauli import Observable, random_observable
from .qee import qee_estimate
from .resources import variance_ratio
from .statevector import PrepCircuit, random_circuit

WORKERS_ENV = "ARTIFACT_WORKERS"


def default_workers() -> int:
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise ValueError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from None


def trial_seeds(seed: int, trials: int) -> list[np.random.SeedSequence]:
    return np.random.SeedSequence(seed).spawn(trials)


def run_trials(fn: Callable, payloads: Sequence, workers: int = 1) -> list:
    """Apply fn to each payload; results come back in payload order for any worker count."""
    if workers <= 1 or len(payloads) <= 1:
        return [fn(p) for p in payloads]
    chunk = max(1, len(payloads) // (4 * workers))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, payloads, chunksize=chunk))


@dataclass(frozen=True)
class Instance:
    obs: Observable
    V: PrepCircuit
    means: tuple[float, ...]

    @property
    def exact(self) -> float:
        return float(np.dot(self.obs.coeffs, self.means))


def make_instance(obs: Observable, V: PrepCircuit) -> Instance:
    return Instance(obs, V, tuple(float(m) for m in cps.term_means(obs, V)))


def random_instance(n: int, N: int, coeff_scale: float, seed: int, gates: int = 12) -> Instance:
    ss = np.random.SeedSequence([seed, n, N])
    obs_seed, circ_seed = ss.spawn(2)
    obs = random_observable(n, N, coeff_scale, np.random.default_rng(obs_seed))
    V = random_circuit(n, gates, np.random.default_rng(circ_seed))
    return make_instance(obs, V)


def cps_trial(payload) -> dict:
    inst, options, ss = payload
    rng = np.random.default_rng(ss)
    opts = dict(options)
    noise = None
    if opts.get("additive"):
        noise = cps.ReadoutNoise(0.0, opts["additive"])
    res = cps.cps_estimate(inst.obs, inst.V, opts["eta"], rng, backend=opts.get("backend", "spectral"),
                           n1=opts.get("n1"), alpha=opts.get("alpha", 3), gamma=opts.get("gamma", 3),
                           eps0=opts.get("eps0"), eps_qsp=opts.get("eps_qsp"), noise=noise,
                           p1=opts.get("p1", 0.0), exact_means=np.asarray(inst.means))
    return res.to_dict()


def qee_trial(payload) -> dict:
    inst, options, ss = payload
    rng = np.random.default_rng(ss)
    p_shot = inst.obs.n * options.get("p1", 0.0)
    res = qee_estimate(inst.obs, inst.V, options["total_shots"], rng,
                       allocation=options.get("allocation", "uniform"), p_shot=p_shot,
                       exact_means=np.asarray(inst.means))
    return res.to_dict()


def run_cps(inst: Instance, options: dict, trials: int, seed: int, workers: int = 1) -> list[dict]:
    return run_trials(cps_trial, [(inst, options, s) for s in trial_seeds(seed, trials)], workers)


def run_qee(inst: Instance, options: dict, trials: int, seed: int, workers: int = 1) -> list[dict]:
    return run_trials(qee_trial, [(inst, options, s) for s in trial_seeds(seed, trials)], workers)


@dataclass
class ComparePoint:
    N: int
    T: float
    var_cps: float
    var_qee: float
    ratio: float
    predicted_ratio: float
    instances: int
    note: str = ""


def compare_point(N: int, n: int, eta: float, trials: int, seed: int, instances: int = 4,
                  coeff_scale: float = 1.0, workers: int = 1, options: dict | None = None) -> ComparePoint:
    """Average, over random instances, of the CPS and QEE variances at matched T.

    For each instance the CPS cost T fixes the QEE shot budget. The ratio column
    is mean(var_cps) / mean(var_qee).
    """
    opts = {"eta": eta, **(options or {})}
    vc, vq, Ts = [], [], []
    for i in range(instances):
        inst = random_instance(n, N, coeff_scale, seed + 7919 * i)
        rc = run_cps(inst, opts, trials, seed + 2 * i, workers)
        T = rc[0]["T"]
        rq = run_qee(inst, {**opts, "total_shots": int(round(T))}, trials, seed + 2 * i + 1, workers)
        vc.append(np.var([r["estimate"] for r in rc], ddof=1))
        vq.append(np.var([r["estimate"] for r in rq], ddof=1))
        Ts.append(T)
    var_cps, var_qee = float(np.mean(vc)), float(np.mean(vq))
    return ComparePoint(N, float(np.mean(Ts)), var_cps, var_qee, var_cps / var_qee,
                        variance_ratio(N, eta), instances)


def compare_sweep(Ns: Sequence[int], n: int, eta: float, trials: int, seed: int, instances: int = 4,
                  coeff_scale: float = 1.0, workers: int = 1, options: dict | None = None) -> list[ComparePoint]:
    if not Ns:
        raise ValueError("the N sweep is empty")
    out = []
    for N in Ns:
        try:
            out.append(compare_point(int(N), n, eta, trials, seed + 104729 * int(N), instances,
                                     coeff_scale, workers, options))
        except ValueError as exc:
            nan = float("nan")
            out.append(ComparePoint(int(N), nan, nan, nan, nan, nan, instances, str(exc)))
    return out
