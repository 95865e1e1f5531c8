"""Command-line harness: estimate, compare, budget, synth, gen-observable.

Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import hashlib
import io
import json
import os
import sys
from importlib import metadata

import numpy as np

from . import experiments, qsp, resources
from .pauli import ObservableError, load_observable, random_observable, serialize_observable
from .statevector import CircuitError, PrepCircuit, load_circuit, random_circuit


class ConfigError(Exception):
    pass


def version_string() -> str:
    try:
        v = metadata.version("artifact")
    except metadata.PackageNotFoundError:
        v = "0.0.0"
    return f"v{v}"


def config_hash(cfg: dict) -> str:
    blob = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


# keys that may differ without changing any output bit
_NOT_HASHED = ("workers", "out")

DEFAULTS = {
    "method": "both",
    "eta": 0.01,
    "backend": "spectral",
    "trials": 20,
    "seed": 0,
    "observable": "",
    "n": 3,
    "N": 5,
    "coeff_scale": 1.0,
    "observable_seed": 0,
    "circuit": "",
    "gates": 12,
    "circuit_seed": 0,
    "p1": 0.0,
    "additive": 0.0,
    "alpha": 3,
    "gamma": 3,
    "n1": None,
    "eps_qsp": None,
    "Ns": "2,4,8",
    "instances": 4,
    "out": "results",
}

_TYPES = {"eta": float, "trials": int, "seed": int, "n": int, "N": int, "coeff_scale": float,
          "observable_seed": int, "gates": int, "circuit_seed": int, "p1": float, "additive": float,
          "alpha": int, "gamma": int, "n1": int, "eps_qsp": float, "instances": int, "workers": int}


def read_config(path: str | None) -> dict:
    """Flatten an INI file; section names only group keys, every key must be unique."""
    if not path:
        return {}
    if not os.path.exists(path):
        raise ConfigError(f"config file {path!r} not found")
    parser = configparser.ConfigParser()
    parser.optionxform = str
    try:
        parser.read(path)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from None
    flat = {}
    for section in parser.sections():
        for key, value in parser.items(section):
            if key not in DEFAULTS and key != "workers":
                raise ConfigError(f"unknown key {key!r} in section [{section}]")
            flat[key] = value
    return flat


def effective_config(args) -> dict:
    cfg = dict(DEFAULTS)
    cfg.update(read_config(getattr(args, "config", None)))
    for key in list(DEFAULTS) + ["workers"]:
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    for key, typ in _TYPES.items():
        if cfg.get(key) not in (None, ""):
            try:
                cfg[key] = typ(cfg[key])
            except (TypeError, ValueError):
                raise ConfigError(f"{key} = {cfg[key]!r} is not a valid {typ.__name__}") from None
        elif key in ("n1", "eps_qsp"):
            cfg[key] = None
    if cfg.get("workers") is None:
        cfg["workers"] = experiments.default_workers()
    if cfg["method"] not in ("cps", "qee", "both"):
        raise ConfigError(f"method must be cps, qee or both, not {cfg['method']!r}")
    if cfg["backend"] not in ("spectral", "circuit"):
        raise ConfigError(f"backend must be spectral or circuit, not {cfg['backend']!r}")
    if not 0 < cfg["eta"] < 1:
        raise ConfigError("eta must lie in (0, 1)")
    if cfg["trials"] < 2:
        raise ConfigError("trials must be at least 2")
    return cfg


def hashed(cfg: dict) -> dict:
    return {k: v for k, v in cfg.items() if k not in _NOT_HASHED}


def load_instance(cfg: dict) -> experiments.Instance:
    try:
        if cfg["observable"]:
            if not os.path.exists(cfg["observable"]):
                raise ConfigError(f"observable file {cfg['observable']!r} not found")
            obs = load_observable(cfg["observable"])
        else:
            obs = random_observable(cfg["n"], cfg["N"], cfg["coeff_scale"], cfg["observable_seed"])
        if cfg["circuit"]:
            if not os.path.exists(cfg["circuit"]):
                raise ConfigError(f"circuit file {cfg['circuit']!r} not found")
            V = load_circuit(cfg["circuit"])
        elif cfg["observable"] and cfg["gates"] == 0:
            V = PrepCircuit(())
        else:
            V = random_circuit(obs.n, cfg["gates"], np.random.default_rng(cfg["circuit_seed"]))
        if V.max_qubit() >= obs.n:
            raise ConfigError(f"circuit touches qubit {V.max_qubit()} but the observable has {obs.n}")
    except (ObservableError, CircuitError) as exc:
        raise ConfigError(str(exc)) from None
    return experiments.make_instance(obs, V)


def _fmt(x) -> str:
    return repr(float(x))


def _write(path: str, text: str):
    d = os.path.dirname(path)
    if d:
        os.makedirs(d, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(text)


def _summary(values: list[float]) -> dict:
    arr = np.asarray(values, dtype=float)
    return {"mean": float(arr.mean()), "variance": float(arr.var(ddof=1)), "trials": int(arr.size)}


def cmd_estimate(args) -> int:
    cfg = effective_config(args)
    inst = load_instance(cfg)
    header = {"config": hashed(cfg), "config_hash": config_hash(hashed(cfg)), "version": version_string()}
    options = {k: cfg[k] for k in ("eta", "backend", "alpha", "gamma", "n1", "eps_qsp", "p1", "additive")}
    result = {**header, "exact": inst.exact, "N": inst.obs.N, "n": inst.obs.n}
    rows = []
    cps_runs = []
    if cfg["method"] in ("cps", "both"):
        cps_runs = experiments.run_cps(inst, options, cfg["trials"], cfg["seed"], cfg["workers"])
        first = cps_runs[0]
        result["cps"] = {**_summary([r["estimate"] for r in cps_runs]), "T": first["T"],
                         "d_L": first["d_L"], "alpha": first["alpha"], "gamma": first["gamma"],
                         "eps0": first["eps0"], "n_qsp": first["n_qsp"], "n1": first["n1"],
                         "final_half_width": np.pi / 2 ** first["d_L"] / (2 * first["eps0"]),
                         "per_level": first["per_level"], "flagged_terms": first["flagged_terms"]}
        rows += [("cps", i, r["estimate"], r["T"]) for i, r in enumerate(cps_runs)]
    if cfg["method"] in ("qee", "both"):
        shots = int(round(cps_runs[0]["T"])) if cps_runs else 100 * inst.obs.N
        qee_runs = experiments.run_qee(inst, {**options, "total_shots": shots}, cfg["trials"],
                                       cfg["seed"] + 1, cfg["workers"])
        result["qee"] = {**_summary([r["estimate"] for r in qee_runs]), "T": qee_runs[0]["T"],
                         "variance_analytic": qee_runs[0]["variance_analytic"]}
        rows += [("qee", i, r["estimate"], r["T"]) for i, r in enumerate(qee_runs)]
    out = cfg["out"]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["# config_hash", header["config_hash"], "version", header["version"]])
    w.writerow(["method", "trial", "estimate", "T", "error"])
    for method, i, est, T in rows:
        w.writerow([method, i, _fmt(est), _fmt(T), _fmt(est - inst.exact)])
    _write(os.path.join(out, "trials.csv"), buf.getvalue())
    _write(os.path.join(out, "estimate.json"), json.dumps(result, indent=2, sort_keys=True) + "\n")
    for method in ("cps", "qee"):
        if method in result:
            r = result[method]
            print(f"{method}: mean {r['mean']:.6g}  variance {r['variance']:.4g}  T {r['T']:.6g}")
    print(f"exact: {inst.exact:.6g}")
    return 0


def _parse_Ns(text) -> list[int]:
    if isinstance(text, (list, tuple)):
        items = list(text)
    else:
        items = [t for t in str(text).replace(" ", "").split(",") if t]
    try:
        Ns = [int(t) for t in items]
    except ValueError:
        raise ConfigError(f"cannot parse N sweep {text!r}") from None
    if not Ns:
        raise ConfigError("the N sweep is empty")
    if min(Ns) < 1:
        raise ConfigError("every N must be positive")
    return Ns


def cmd_compare(args) -> int:
    cfg = effective_config(args)
    Ns = _parse_Ns(cfg["Ns"])
    options = {k: cfg[k] for k in ("backend", "alpha", "gamma", "n1", "eps_qsp", "p1", "additive")}
    points = experiments.compare_sweep(Ns, cfg["n"], cfg["eta"], cfg["trials"], cfg["seed"],
                                       cfg["instances"], cfg["coeff_scale"], cfg["workers"], options)
    h = config_hash(hashed(cfg))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["# config_hash", h, "version", version_string()])
    w.writerow(["N", "var_cps", "var_qee", "ratio", "predicted_ratio", "T", "note"])
    for p in points:
        w.writerow([p.N, _fmt(p.var_cps), _fmt(p.var_qee), _fmt(p.ratio), _fmt(p.predicted_ratio),
                    _fmt(p.T), p.note])
    path = cfg["out"] if cfg["out"].endswith(".csv") else os.path.join(cfg["out"], "compare.csv")
    _write(path, buf.getvalue())
    sys.stdout.write(buf.getvalue())
    return 0


def cmd_budget(args) -> int:
    if args.method == "cps":
        rows = [resources.budget_cps(args.N, args.n, args.eta, args.cost_model).to_dict()]
    elif args.method == "qee":
        rows = [resources.budget_qee(args.N, args.n, args.eta).to_dict()]
    else:
        rows = resources.budget_table(args.N, args.n, args.eta, args.cost_model)
    if args.json:
        print(json.dumps({"version": version_string(), "rows": rows}, indent=2, sort_keys=True))
        return 0
    print(f"{'method':<6} {'N':>6} {'n':>4} {'eta':>8} {'n_qsp':>8} {'T':>12} {'p1_max':>11} "
          f"{'proc_coh':>9} {'mem_coh':>9}")
    for r in rows:
        print(f"{r['method']:<6} {r['N']:>6} {r['n']:>4} {r['eta']:>8.3g} {r['n_qsp']:>8.4g} "
              f"{r['T']:>12.6g} {r['p1_max']:>11.4g} {r['processing_coherence']:>9.4g} "
              f"{r['memory_coherence']:>9.4g}")
    return 0


def cmd_synth(args) -> int:
    if not 0 < args.eps < 1:
        raise ConfigError("eps must lie in (0, 1)")
    if args.tau == 0:
        plan = qsp.QspPhasePlan((), 0.0, 0.0, 1)
    else:
        k = qsp.truncation_order(args.tau, args.eps)
        plan = qsp.synthesize_phases(qsp.target_series(args.tau, k), args.eps, seed=args.seed)
    doc = {**plan.to_dict(), "version": version_string()}
    text = json.dumps(doc, indent=2) + "\n"
    if args.out:
        _write(args.out, text)
    sys.stdout.write(text)
    return 0


def cmd_gen_observable(args) -> int:
    obs = random_observable(args.n, args.N, args.coeff_scale, args.seed)
    text = serialize_observable(obs)
    if args.out:
        _write(args.out, text)
    else:
        sys.stdout.write(text)
    if args.circuit_out:
        V = random_circuit(args.n, args.gates, np.random.default_rng(args.seed))
        _write(args.circuit_out, V.to_text())
    return 0


def _add_experiment_flags(p):
    p.add_argument("--config", help="INI config file; flags override its values")
    p.add_argument("--method", choices=["cps", "qee", "both"])
    p.add_argument("--eta", type=float)
    p.add_argument("--backend", choices=["spectral", "circuit"])
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int, help=f"worker processes (default ${experiments.WORKERS_ENV} or 1)")
    p.add_argument("--observable", help="observable text file")
    p.add_argument("--n", type=int, help="qubits of a generated observable")
    p.add_argument("--N", type=int, help="terms of a generated observable")
    p.add_argument("--coeff-scale", dest="coeff_scale", type=float)
    p.add_argument("--observable-seed", dest="observable_seed", type=int)
    p.add_argument("--circuit", help="preparation circuit text file")
    p.add_argument("--gates", type=int, help="gates of a generated preparation circuit")
    p.add_argument("--circuit-seed", dest="circuit_seed", type=int)
    p.add_argument("--p1", type=float, help="single-gate error probability")
    p.add_argument("--additive", type=float, help="additive tomography error magnitude")
    p.add_argument("--alpha", type=int)
    p.add_argument("--gamma", type=int)
    p.add_argument("--n1", type=int, help="sign-estimation shots per string")
    p.add_argument("--eps-qsp", dest="eps_qsp", type=float)
    p.add_argument("--out", help="output directory (compare also accepts a .csv path)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="artifact-bench", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=version_string())
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("estimate", help="run CPS and/or QEE trials on one instance")
    _add_experiment_flags(p)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("compare", help="variance ratio sweep over N")
    _add_experiment_flags(p)
    p.add_argument("--Ns", help="comma-separated N values")
    p.add_argument("--instances", type=int)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("budget", help="analytic resource budget")
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--eta", type=float, default=1.0)
    p.add_argument("--method", choices=["cps", "qee", "both"], default="both")
    p.add_argument("--cost-model", dest="cost_model", choices=["linear", "quadratic"], default="linear")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_budget)

    p = sub.add_parser("synth", help="synthesize and certify a QSP phase plan")
    p.add_argument("--tau", type=float, required=True)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("gen-observable", help="write a random observable file")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--coeff-scale", dest="coeff_scale", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.add_argument("--circuit-out", dest="circuit_out", help="also write a random preparation circuit")
    p.add_argument("--gates", type=int, default=12)
    p.set_defaults(func=cmd_gen_observable)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ObservableError, CircuitError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - top-level reporting
        print(f"runtime failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
