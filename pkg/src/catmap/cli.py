"""Command-line front end.

    catmap <command> [--config FILE] [--set KEY=VALUE ...] [common flags]

Commands: poincare, evolve, fit, sweep, gatecount, compare-oracle.
Configuration is a flat ``key = value`` file; flags override it. Every run
writes ``run.json`` (config digest, seed, version, outputs) next to its data.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (
    SWEEP_COLUMNS,
    FitError,
    InsufficientSpread,
    SweepCell,
    fit_damped_cosine,
    fit_scaling,
    gamma_sweep,
    initial_register,
)
from .circuit import compile_map, dump, gate_count
from .dynamics import MapParams, PhasePoint, poincare_section, write_section_csv
from .noise import NoiseModel, exact_iterate, run_ensemble
from .oracle import SplitOperator, evolve_oracle
from .qstate import StateVector, write_wa_csv, write_wx_csv

EXIT_CONFIG = 2
EXIT_NUMERIC = 3

DEFAULTS = {
    "K": 0.04,
    "a": 1.6,
    "n_q": 6,
    "iterations": 180,
    "stride": 1,
    "backend": "circuit",
    "expansion": "tuples",
    "init": "coherent",
    "epsilon": 0.0,
    "seed": 0,
    "realizations": 16,
    "exempt_work_qubit": False,
    "phase_only": False,
    "workers": 1,
    "record_wx": True,
    "poincare_iters": 2000,
    "poincare_starts": "0:1.3;0:-1.9;0:0.05",
    "wa_path": "",
    "sweep_cells": "6:0.04:1.6:1000;7:0.044:1.4:2000;8:0.056:1.64:2000",
    "sweep_epsilon": "0.005,0.01,0.02",
    "compare_iterations": 100,
    "dump_circuit": False,
}


class ConfigError(ValueError):
    pass


def _coerce(key, raw):
    default = DEFAULTS[key]
    if isinstance(raw, str):
        raw = raw.strip()
    try:
        if isinstance(default, bool):
            if isinstance(raw, bool):
                return raw
            low = str(raw).lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
    except ValueError:
        raise ConfigError(f"bad value for {key}: {raw!r}") from None
    return str(raw)


def read_config(path) -> dict:
    out = {}
    for n, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{n}: expected key = value")
        k, v = (s.strip() for s in line.split("=", 1))
        out[k] = v
    return out


def build_config(args) -> dict:
    cfg = dict(DEFAULTS)
    updates = {}
    if args.config:
        try:
            updates.update(read_config(args.config))
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
    for item in args.set or []:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        updates[k.strip()] = v
    for k in ("seed", "backend", "workers"):
        v = getattr(args, k, None)
        if v is not None:
            updates[k] = v
    for k, v in updates.items():
        if k not in DEFAULTS:
            raise ConfigError(f"unknown config key {k!r}")
        cfg[k] = _coerce(k, v)
    if cfg["backend"] not in ("circuit", "oracle"):
        raise ConfigError(f"backend must be circuit or oracle, got {cfg['backend']!r}")
    return cfg


def format_config(cfg) -> str:
    return "".join(f"{k} = {_fmt(cfg[k])}\n" for k in sorted(cfg))


def _fmt(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def config_digest(cfg) -> str:
    return hashlib.sha256(format_config(cfg).encode()).hexdigest()


def _params(cfg) -> MapParams:
    try:
        return MapParams(cfg["K"], cfg["a"], cfg["n_q"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _write_json(path, obj):
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _stamp(cfg, command, out_dir, outputs, extra=None):
    manifest = {
        "command": command,
        "version": __version__,
        "seed": cfg["seed"],
        "config_digest": config_digest(cfg),
        "config": {k: cfg[k] for k in sorted(cfg)},
        "outputs": sorted(outputs),
    }
    if extra:
        manifest.update(extra)
    _write_json(Path(out_dir) / "run.json", manifest)


# --------------------------------------------------------------------------
# commands

def cmd_poincare(cfg, out):
    params = _params(cfg)
    if cfg["poincare_iters"] < 1:
        raise ConfigError("poincare_iters must be >= 1")
    try:
        starts = []
        for item in cfg["poincare_starts"].split(";"):
            p, x = item.split(":")
            starts.append(PhasePoint(float(p), float(x)))
    except ValueError:
        raise ConfigError(f"bad poincare_starts {cfg['poincare_starts']!r}; use p:x;p:x") from None
    try:
        orbits = poincare_section(starts, params, cfg["poincare_iters"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    write_section_csv(orbits, out / "poincare.csv")
    return ["poincare.csv"], {}


def _evolve(cfg):
    params = _params(cfg)
    if cfg["iterations"] < 0 or cfg["stride"] < 1:
        raise ConfigError("need iterations >= 0 and stride >= 1")
    try:
        psi0 = initial_register(params, cfg["init"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    if cfg["backend"] == "oracle":
        if cfg["epsilon"] > 0:
            raise ConfigError("gate noise needs backend = circuit")
        times, wa, W = evolve_oracle(psi0, params, cfg["iterations"], stride=cfg["stride"])
        return params, times, wa, W
    if params.n_q < 5:
        raise ConfigError("the circuit backend needs n_q >= 5")
    circ = compile_map(params, cfg["expansion"])
    model = NoiseModel(cfg["epsilon"], cfg["exempt_work_qubit"], cfg["seed"],
                       phase_only=cfg["phase_only"])
    reps = cfg["realizations"] if cfg["epsilon"] > 0 else 1
    run = run_ensemble(circ, psi0, model, cfg["iterations"], reps, cfg["stride"],
                       record_distribution=True)
    return params, run.times, run.mean_w_alive, run.distribution


def cmd_evolve(cfg, out):
    params, times, wa, W = _evolve(cfg)
    outputs = ["wa.csv"]
    write_wa_csv(times, wa, out / "wa.csv")
    if cfg["record_wx"]:
        write_wx_csv(zip(times, W), params.grid(), out / "wx.csv")
        outputs.append("wx.csv")
    return outputs, {}


def read_wa_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows or "t" not in rows[0] or "W_a" not in rows[0]:
        raise ConfigError(f"{path}: expected columns t, W_a")
    return (np.array([float(r["t"]) for r in rows]), np.array([float(r["W_a"]) for r in rows]))


def cmd_fit(cfg, out):
    if cfg["wa_path"]:
        try:
            data = Path(cfg["wa_path"]).read_bytes()
        except OSError as exc:
            raise ConfigError(f"cannot read wa_path: {exc}") from None
        times, wa = read_wa_csv(cfg["wa_path"])
        digest = hashlib.sha256(data).hexdigest()
    else:
        _, times, wa, _ = _evolve({**cfg, "record_wx": False})
        digest = hashlib.sha256(np.ascontiguousarray(wa).tobytes()).hexdigest()
    fit = fit_damped_cosine(times, wa)
    result = asdict(fit)
    result.update(input_digest=digest, config_digest=config_digest(cfg), seed=cfg["seed"],
                  version=__version__)
    _write_json(out / "fit.json", result)
    return ["fit.json"], {"T_u": fit.T_u, "Gamma": fit.Gamma}


def sweep_cells_from(cfg):
    try:
        eps = [float(e) for e in cfg["sweep_epsilon"].split(",")]
        cells = []
        for item in cfg["sweep_cells"].split(";"):
            nq, K, a, its = item.split(":")
            for e in eps:
                cells.append(SweepCell(int(nq), float(K), float(a), e, seed=cfg["seed"],
                                       realizations=cfg["realizations"], iterations=int(its),
                                       exempt_work_qubit=cfg["exempt_work_qubit"],
                                       init=cfg["init"]))
    except ValueError:
        raise ConfigError("sweep_cells must be n_q:K:a:iterations;... and sweep_epsilon e1,e2,...") from None
    return cells


def _csv_value(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def cmd_sweep(cfg, out):
    records = gamma_sweep(sweep_cells_from(cfg), workers=cfg["workers"])
    with open(out / "sweep.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SWEEP_COLUMNS)
        for r in records:
            w.writerow([_csv_value(getattr(r, c)) for c in SWEEP_COLUMNS])
    outputs = ["sweep.csv"]
    extra = {"failed_cells": sum(r.status != "ok" for r in records)}
    try:
        sc = fit_scaling(records)
    except InsufficientSpread as exc:
        extra["scaling"] = f"skipped: {exc}"
    else:
        _write_json(out / "scaling.json", asdict(sc))
        outputs.append("scaling.json")
    return outputs, extra


def cmd_gatecount(cfg, out):
    params = _params(cfg)
    circ = compile_map(params, cfg["expansion"])
    counts = gate_count(circ)
    _write_json(out / "gatecount.json", counts)
    print(json.dumps(counts, sort_keys=True))
    outputs = ["gatecount.json"]
    if cfg["dump_circuit"]:
        (out / "circuit.txt").write_text(dump(circ))
        outputs.append("circuit.txt")
    return outputs, {}


def cmd_compare_oracle(cfg, out):
    params = _params(cfg)
    if params.n_q < 5:
        raise ConfigError("the circuit backend needs n_q >= 5")
    rng = np.random.default_rng(cfg["seed"])
    psi = rng.normal(size=params.N) + 1j * rng.normal(size=params.N)
    psi /= np.linalg.norm(psi)
    circ = compile_map(params, cfg["expansion"])
    op = SplitOperator(params)
    state = StateVector.from_register(psi, params.n_q)
    ref = psi.copy()
    worst = 1.0
    for _ in range(cfg["compare_iterations"]):
        exact_iterate(state, circ)
        ref = op.step(ref)
        worst = min(worst, abs(np.vdot(ref, state.register())) ** 2)
    report = {
        "n_q": params.n_q,
        "iterations": cfg["compare_iterations"],
        "final_fidelity": abs(np.vdot(ref, state.register())) ** 2,
        "min_fidelity": worst,
        "work_qubit_probability": float(np.sum(np.abs(state.amplitudes[params.N:]) ** 2)),
        "norm": state.norm(),
        "n_gates": len(circ),
    }
    _write_json(out / "compare_oracle.json", report)
    print(json.dumps(report, sort_keys=True))
    return ["compare_oracle.json"], {}


COMMANDS = {
    "poincare": cmd_poincare,
    "evolve": cmd_evolve,
    "fit": cmd_fit,
    "sweep": cmd_sweep,
    "gatecount": cmd_gatecount,
    "compare-oracle": cmd_compare_oracle,
}


def make_parser():
    ap = argparse.ArgumentParser(prog="catmap", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--config", help="flat key = value config file")
    ap.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config key")
    ap.add_argument("--seed", type=int)
    ap.add_argument("--out-dir", default=".", help="directory for output files")
    ap.add_argument("--backend", choices=("circuit", "oracle"))
    ap.add_argument("--workers", type=int)
    ap.add_argument("--show-config", action="store_true", help="print the merged config and exit")
    return ap


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        cfg = build_config(args)
        if args.show_config:
            sys.stdout.write(format_config(cfg))
            return 0
        out = Path(args.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        outputs, extra = COMMANDS[args.command](cfg, out)
        _stamp(cfg, args.command, out, outputs, extra)
    except ConfigError as exc:
        print(f"catmap: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (FitError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"catmap: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return 0


if __name__ == "__main__":
    sys.exit(main())
