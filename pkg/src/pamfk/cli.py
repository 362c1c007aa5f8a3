"""Command-line experiment runner.

    pamfk <command> --config FILE [--seed N] [--out FILE] [--format csv|json] [--workers N]

Commands: moment, derivative-moment, chaos, spde, validate. The config is a
JSON object (see README for the schema); a previously emitted record, or a
JSON array of records, is accepted as well and its echoed config is rerun.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import contextlib
import copy
import csv
import io
import json
import math
import os
import sys
import time
from typing import Any

import numpy as np

from .chaos import second_moment_series
from .covariance import CovarianceModel
from .errors import ConfigError, DomainError, NumericalError
from .kernels import Bounded, SignedMeasure, SubGaussian
from .moments import DerivativeSpec, MCConfig, moment_derivative, moment_u_bridge, moment_u_free
from .spde import INITIAL_DATA, SchemeParams, direct_moment

__all__ = ["main", "run_experiment", "load_config", "normalize_config", "DENSITIES", "SPECTRAL_DENSITIES", "SCHEMA_VERSION"]

SCHEMA_VERSION = 1
COMMANDS = ("moment", "derivative-moment", "chaos", "spde", "validate")
EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3
CSV_COLUMNS = (
    "schema_version",
    "command",
    "quantity",
    "mean",
    "standard_error",
    "samples",
    "ess",
    "ess_flagged",
    "oracle_value",
    "oracle_tail_bound",
    "agreement",
    "details",
    "config",
    "run",
)


def _cosine(p):
    a, b = float(p.get("amplitude", 0.5)), float(p.get("frequency", 1.0))
    return (lambda y: 1.0 + a * np.cos(b * y.sum(axis=1))), Bounded(1.0 + abs(a))


def _constant(p):
    c = float(p.get("value", 1.0))
    return (lambda y: np.full(y.shape[0], c)), Bounded(abs(c))


def _bump(p):
    s = float(p.get("scale", 1.0))
    return (lambda y: np.exp(-0.5 * np.sum(y * y, axis=1) / s)), Bounded(1.0)


def _exp_abs(p):
    a = float(p.get("rate", 1.0))
    return (lambda y: np.exp(a * np.sqrt(np.sum(y * y, axis=1)))), SubGaussian(1.0, a, 1.0)


# initial-data densities: name -> params -> (vectorized density, growth certificate)
DENSITIES = {"one": _constant, "constant": _constant, "cosine": _cosine, "gaussian_bump": _bump, "exp_abs": _exp_abs}

# radial spectral densities m(|xi|) for the radial_spectral covariance kind
SPECTRAL_DENSITIES = {
    "gaussian": lambda p: (lambda r, s=float(p.get("sigma", 1.0)): np.exp(-0.5 * s * np.asarray(r) ** 2)),
    "cauchy": lambda p: (lambda r, a=float(p.get("alpha", 1.0)): (1.0 + np.asarray(r) ** 2) ** (-a)),
}


@contextlib.contextmanager
def _field(name: str):
    try:
        yield
    except ConfigError:
        raise
    except (DomainError, ValueError, TypeError, KeyError, IndexError) as exc:
        raise ConfigError(str(exc) if not isinstance(exc, KeyError) else f"missing key {exc}", name) from exc


def _get(block: dict, key: str, where: str, default: Any = ...):
    if key in block:
        return block[key]
    if default is ...:
        raise ConfigError("required", f"{where}.{key}")
    return default


def load_config(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}", "config") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}", "config") from exc
    if isinstance(data, list):
        if not data:
            raise ConfigError("empty record array", "config")
        data = data[0]
    if isinstance(data, dict) and "config" in data and isinstance(data["config"], (dict, str)):
        data = data["config"] if isinstance(data["config"], dict) else json.loads(data["config"])
    if not isinstance(data, dict):
        raise ConfigError("top level must be a JSON object", "config")
    return data


def normalize_config(raw: dict, command: str | None = None) -> dict:
    """Fill defaults and check types; the result is what records echo."""
    cfg = copy.deepcopy(raw)
    cmd = command or cfg.get("command")
    if cmd not in COMMANDS:
        raise ConfigError(f"must be one of {COMMANDS}, got {cmd!r}", "command")
    if command and cfg.get("command", command) != command:
        raise ConfigError(f"config is for {cfg.get('command')!r} but {command!r} was requested", "command")
    cfg["command"] = cmd
    geo = cfg.setdefault("geometry", {})
    with _field("geometry.dimension"):
        d = int(geo.setdefault("dimension", 1))
        if d < 1:
            raise ConfigError("must be a positive integer", "geometry.dimension")
    with _field("geometry.t"):
        t = float(_get(geo, "t", "geometry"))
        if not (t > 0 and math.isfinite(t)):
            raise ConfigError("must be positive and finite", "geometry.t")
        geo["t"] = t
    with _field("geometry.x"):
        x = np.atleast_1d(np.asarray(geo.setdefault("x", [0.0] * d), dtype=float))
        if x.size == 1 and d > 1:
            x = np.full(d, x[0])
        if x.shape != (d,):
            raise ConfigError(f"must have {d} coordinates", "geometry.x")
        geo["x"] = x.tolist()
    if cmd != "spde":
        model = cfg.setdefault("model", {"kind": "zero"})
        model.setdefault("dimension", d)
        model.setdefault("eps", 0.0)
    mc = cfg.setdefault("mc", {})
    mc.setdefault("samples", 10_000)
    mc.setdefault("steps_per_segment", 64)
    mc.setdefault("seed", 0)
    mc.setdefault("block_size", 1024)
    mc.setdefault("tuple_cap", 4096)
    if cmd in ("moment", "validate"):
        mom = cfg.setdefault("moment", {})
        mom.setdefault("k", 2)
        mom.setdefault("representation", "free")
        if mom["representation"] not in ("free", "bridge"):
            raise ConfigError("must be 'free' or 'bridge'", "moment.representation")
    if cmd in ("moment", "derivative-moment", "validate"):
        cfg.setdefault("initial", {"density": "one"})
    if cmd == "derivative-moment":
        der = _get(cfg, "derivative", "config")
        if not isinstance(der, dict):
            raise ConfigError("must be an object", "derivative")
        der.setdefault("k", 2)
    if cmd in ("chaos", "validate"):
        ch = cfg.setdefault("chaos", {})
        ch.setdefault("n_max", 8)
        ch.setdefault("M", None)
    if cmd == "spde" or (cmd == "validate" and "spde" in cfg):
        sp = _get(cfg, "spde", "config")
        sp.setdefault("k", 2)
        sp.setdefault("u0", "one")
        sp.setdefault("reps", 10_000)
    out = cfg.setdefault("output", {})
    out.setdefault("format", "json")
    out.setdefault("path", None)
    return cfg


def _build_model(cfg: dict) -> CovarianceModel:
    m = cfg["model"]
    kind = _get(m, "kind", "model")
    d = int(m["dimension"])
    with _field("model"):
        if kind == "zero":
            return CovarianceModel.zero(d)
        if kind == "white_noise":
            return CovarianceModel.white_noise(d)
        if kind == "gaussian":
            return CovarianceModel.gaussian(float(_get(m, "sigma", "model")), d)
        if kind == "riesz":
            return CovarianceModel.riesz(float(_get(m, "beta", "model")), d)
        if kind == "radial_spectral":
            name = _get(m, "density", "model")
            if name not in SPECTRAL_DENSITIES:
                raise ConfigError(f"unknown spectral density {name!r}; known: {sorted(SPECTRAL_DENSITIES)}", "model.density")
            dens = SPECTRAL_DENSITIES[name](m.get("params", {}))
            return CovarianceModel.radial_spectral(dens, d, name=name)
    raise ConfigError(f"unknown covariance kind {kind!r}", "model.kind")


def _model_eps(cfg: dict, model: CovarianceModel):
    eps = cfg["model"]["eps"]
    with _field("model.eps"):
        arr = np.atleast_1d(np.asarray(eps, dtype=float))
        if arr.ndim != 1 or arr.size == 0:
            raise ConfigError("must be a number or a list of numbers", "model.eps")
        for e in arr:
            model.check_eps(e)
        if arr.size > 1 and (np.any(np.diff(arr) >= 0) or arr.size < 3):
            raise ConfigError("a ladder must have at least 3 strictly decreasing levels", "model.eps")
        return float(arr[0]) if isinstance(eps, (int, float)) else arr.tolist()


def _build_initial(cfg: dict) -> SignedMeasure:
    ini = cfg["initial"]
    d = int(cfg["geometry"]["dimension"])
    mu = None
    with _field("initial.atoms"):
        atoms = ini.get("atoms", [])
        if atoms:
            locs = np.array([np.broadcast_to(np.asarray(a["location"], dtype=float), (d,)) for a in atoms])
            weights = np.array([float(a["weight"]) for a in atoms])
            mu = SignedMeasure.atoms(locs, weights, d)
    name = ini.get("density")
    if name is not None:
        if name not in DENSITIES:
            raise ConfigError(f"unknown density {name!r}; known: {sorted(DENSITIES)}", "initial.density")
        with _field("initial.density_params"):
            fn, growth = DENSITIES[name](ini.get("density_params", {}))
        dens = SignedMeasure.constant(1.0, d) if name == "one" else SignedMeasure.from_density(fn, growth, d, name=name)
        mu = dens if mu is None else mu + dens
    if mu is None:
        raise ConfigError("needs atoms and/or a density", "initial")
    return mu


def _build_mc(cfg: dict, workers: int) -> MCConfig:
    m = cfg["mc"]
    with _field("mc"):
        return MCConfig(
            samples=int(m["samples"]),
            steps_per_segment=int(m["steps_per_segment"]),
            seed=int(m["seed"]),
            workers=workers,
            block_size=int(m["block_size"]),
            tuple_cap=int(m["tuple_cap"]),
        )


def _k(block: dict, where: str, minimum: int) -> int:
    with _field(f"{where}.k"):
        k = block["k"]
        if int(k) != k or k < minimum:
            raise ConfigError(f"must be an integer >= {minimum}", f"{where}.k")
        return int(k)


def _spde_params(cfg: dict):
    sp = cfg["spde"]
    with _field("spde"):
        params = SchemeParams(float(_get(sp, "dx", "spde")), float(_get(sp, "dt", "spde")), float(_get(sp, "L", "spde")))
        params.steps(float(cfg["geometry"]["t"]))
        params.node(float(cfg["geometry"]["x"][0]))
    if int(cfg["geometry"]["dimension"]) != 1:
        raise ConfigError("the finite-difference oracle is one-dimensional", "geometry.dimension")
    if sp["u0"] not in INITIAL_DATA:
        raise ConfigError(f"must be one of {INITIAL_DATA}", "spde.u0")
    if sp["k"] not in (1, 2, 3):
        raise ConfigError("must be 1, 2 or 3", "spde.k")
    return params


def _record(cfg: dict, quantity: str, est=None, **extra) -> dict:
    rec = {"schema_version": SCHEMA_VERSION, "command": cfg["command"], "quantity": quantity}
    if est is not None:
        r = est.to_record()
        rec.update(
            mean=r.pop("mean"),
            standard_error=r.pop("standard_error"),
            samples=r.pop("samples"),
            ess=r.pop("ess"),
            ess_flagged=r.pop("ess_flagged"),
        )
        rec["details"] = r
    rec.update(extra)
    rec["config"] = cfg
    return rec


def _moment_estimate(cfg: dict, workers: int, model=None, u0=None):
    model = model or _build_model(cfg)
    eps = _model_eps(cfg, model)
    u0 = u0 or _build_initial(cfg)
    mc = _build_mc(cfg, workers)
    mom = cfg["moment"]
    k = _k(mom, "moment", 1)
    g = cfg["geometry"]
    fn = moment_u_free if mom["representation"] == "free" else moment_u_bridge
    with _field("initial"):
        if fn is moment_u_free and (u0.n_atoms or not isinstance(u0.growth, Bounded)):
            raise ConfigError("the free representation needs a bounded density without atoms; use representation 'bridge'", "initial")
    try:
        return fn(k, g["t"], g["x"], u0, model, eps, mc)
    except DomainError as exc:
        raise ConfigError(str(exc), "moment") from exc


def run_experiment(cfg: dict, workers: int = 1) -> list[dict]:
    """Validate, compute and return result records (without timing metadata)."""
    cmd = cfg["command"]
    g = cfg["geometry"]
    if cmd == "moment":
        est = _moment_estimate(cfg, workers)
        return [_record(cfg, f"E[u^{cfg['moment']['k']}]", est)]
    if cmd == "derivative-moment":
        model = _build_model(cfg)
        eps = _model_eps(cfg, model)
        u0 = _build_initial(cfg)
        mc = _build_mc(cfg, workers)
        der = cfg["derivative"]
        k = _k(der, "derivative", 2)
        with _field("derivative.r"):
            r = [float(v) for v in _get(der, "r", "derivative")]
            if any(b <= a for a, b in zip(r, r[1:])) or not r or r[0] <= 0:
                raise ConfigError("must be strictly increasing and positive", "derivative.r")
            if r[-1] >= g["t"]:
                raise ConfigError("largest pin time must be below t", "derivative.r")
        with _field("derivative.z"):
            z = np.asarray(_get(der, "z", "derivative"), dtype=float).reshape(len(r), int(g["dimension"]))
        spec = DerivativeSpec(tuple(r), z, k)
        est = moment_derivative(spec, g["t"], g["x"], u0, model, eps, mc)
        return [_record(cfg, f"E[(D^{len(r)}u)^{k}]", est)]
    if cmd == "chaos":
        model = _build_model(cfg)
        ch = cfg["chaos"]
        with _field("chaos"):
            res = second_moment_series(g["t"], g["x"], model, int(ch["n_max"]), ch["M"])
        return [
            _record(
                cfg,
                "chaos E[u^2]",
                mean=res.value,
                standard_error=0.0,
                oracle_tail_bound=res.tail_bound,
                details={"quadrature_error": res.quadrature_error, "M": res.M, "C_M": res.C_M, "D_M": res.D_M, "terms": [tm.value for tm in res.terms]},
            )
        ]
    if cmd == "spde":
        params = _spde_params(cfg)
        sp = cfg["spde"]
        est = direct_moment(int(sp["k"]), g["t"], g["x"][0], params, sp["u0"], int(sp["reps"]), int(cfg["mc"]["seed"]), workers)
        return [_record(cfg, f"spde E[u^{sp['k']}]", est)]
    # validate: Monte Carlo second moment against the chaos oracle (u0 = 1)
    model = _build_model(cfg)
    if cfg["moment"]["k"] != 2:
        raise ConfigError("validate compares second moments; set k = 2", "moment.k")
    if cfg["initial"] != {"density": "one"}:
        raise ConfigError("the chaos oracle needs u0 = 1", "initial")
    est = _moment_estimate(cfg, workers, model=model, u0=SignedMeasure.constant(1.0, int(g["dimension"])))
    ch = cfg["chaos"]
    with _field("chaos"):
        res = second_moment_series(g["t"], g["x"], model, int(ch["n_max"]), ch["M"])
    tol = 3.0 * est.standard_error + res.tail_bound + res.quadrature_error
    records = [
        _record(
            cfg,
            "validate E[u^2]",
            est,
            oracle_value=res.value,
            oracle_tail_bound=res.tail_bound,
            agreement=bool(abs(est.mean - res.value) <= tol),
        )
    ]
    if "spde" in cfg:
        params = _spde_params(cfg)
        sp = cfg["spde"]
        sest = direct_moment(2, g["t"], g["x"][0], params, sp["u0"], int(sp["reps"]), int(cfg["mc"]["seed"]), workers)
        stol = 3.0 * sest.standard_error + res.tail_bound
        records.append(
            _record(cfg, "validate spde E[u^2]", sest, oracle_value=res.value, oracle_tail_bound=res.tail_bound, agreement=bool(abs(sest.mean - res.value) <= stol))
        )
    return records


def _finite_check(records: list[dict]) -> None:
    for rec in records:
        for key in ("mean", "standard_error"):
            v = rec.get(key)
            if v is not None and not math.isfinite(v):
                raise NumericalError(f"non-finite {key}", {"details": rec.get("details")})


def _csv_cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))  # shortest round-trip decimal
    if isinstance(v, (dict, list)):
        return json.dumps(v, sort_keys=True, default=_json_default)
    return str(v)


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.bool_):
        return bool(o)
    raise TypeError(f"cannot serialize {type(o).__name__}")


def write_records(records: list[dict], path: str | None, fmt: str) -> None:
    if fmt == "json":
        text = json.dumps(records, indent=2, default=_json_default) + "\n"
        if path:
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
        return
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    new = not path or not os.path.exists(path) or os.path.getsize(path) == 0
    if new:
        writer.writerow(CSV_COLUMNS)
    for rec in records:
        writer.writerow([_csv_cell(rec.get(c)) for c in CSV_COLUMNS])
    if path:
        with open(path, "a", encoding="utf-8", newline="") as fh:
            fh.write(buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pamfk", description="Feynman-Kac moment estimators and oracles for the parabolic Anderson model.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", required=True, help="JSON config, or a record emitted by an earlier run")
    p.add_argument("--seed", type=int, default=None, help="overrides mc.seed")
    p.add_argument("--out", default=None, help="output file (default: stdout)")
    p.add_argument("--format", choices=("csv", "json"), default=None)
    p.add_argument("--workers", type=int, default=1)
    return p


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    try:
        raw = load_config(args.config)
        cfg = normalize_config(raw, args.command)
        if args.seed is not None:
            cfg["mc"]["seed"] = int(args.seed)
        if args.format:
            cfg["output"]["format"] = args.format
        if args.out:
            cfg["output"]["path"] = args.out
        if args.workers < 1:
            raise ConfigError("must be positive", "--workers")
        t0 = time.perf_counter()
        records = run_experiment(cfg, args.workers)
        _finite_check(records)
        wall = time.perf_counter() - t0
        for rec in records:
            rec["run"] = {"wall_time": wall, "workers": args.workers}
        write_records(records, cfg["output"]["path"], cfg["output"]["format"])
    except ConfigError as exc:
        print(f"pamfk: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"pamfk: numerical failure: {exc}; diagnostics: {json.dumps(exc.diagnostics, default=str)}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
