"""Command-line front end: experiment presets, validated configs, reproducible reports.

Subcommands::

    movplane-lab list-presets
    movplane-lab validate-config --config cfg.json
    movplane-lab run [--preset NAME | --config cfg.json] [--out DIR] [--seed N] [--threads N]

Exit codes: 0 all checks PASS, 1 a check FAILed, 2 invalid configuration,
3 a hypothesis was not met (NOT-APPLICABLE) and nothing failed.
"""

from __future__ import annotations

import argparse
import copy
import csv
import hashlib
import io
import json
import logging
import os
import struct
import sys
import tempfile
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from threadpoolctl import threadpool_limits

from . import experiments as ex
from .evolve import Trajectory
from .fraclap import Field
from .grid import GridError, PlaneReflection, build_grid
from .movplane import FAIL, NA, PASS, SymmetryTols, w_lambda

log = logging.getLogger("movplane_lab")

SCHEMA = "movplane-lab/report/1"
DUMP_MAGIC = b"MPL1"
EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_HYPOTHESIS = 0, 1, 2, 3
MAX_NODES = 8192  # dense operator: 8192^2 doubles = 512 MB

PRESETS: dict[str, dict] = {
    "oracle-suite": {
        "description": "bump constancy, step law, sign check, Poisson-kernel evolution, xi decay bound",
        "checks": ["C1", "C2", "C4"],
        "config": {"dim": 1, "radius": 16.0, "h": 1 / 128, "s": 0.5,
                   "nonlinearity": {"id": "zero"}, "initial": {"id": "poisson", "params": {"t": 1.0}},
                   "T": 1.0, "snap_every": 0.25,
                   "tolerances": {"tol_const": 0.02, "tol_pk": 0.03, "tol_exp": 0.05, "tol_ode": 1e-6},
                   "options": {"h_oracle": 1 / 256, "n_sign": 10, "xi_T": 20.0}},
    },
    "principle-suite": {
        "description": "randomized discrete maximum principles plus deliberate hypothesis violations",
        "checks": ["C3"],
        "config": {"dim": 1, "radius": 2.0, "h": 1 / 16, "s": 0.5,
                   "nonlinearity": {"id": "zero"}, "initial": {"id": "ball-bumps"},
                   "T": 3.0, "snap_every": 0.25, "tolerances": {"tol_mp": 1e-10},
                   "options": {"instances": 20}},
    },
    "ball-symmetry": {
        "description": "asymptotic radial symmetry on the unit ball with f(u) = u - u^3, plus Hopf",
        "checks": ["C5", "C7"],
        "config": {"dim": 1, "radius": 1.0, "h": 1 / 128, "s": 0.2,
                   "nonlinearity": {"id": "ball-logistic"}, "initial": {"id": "ball-bumps"},
                   "T": 10.0, "snap_every": 0.5,
                   "tolerances": {"tol_omega": 1e-6, "tol_sym": 0.02, "tol_mono": 0.01},
                   "options": {"n_data": 3}},
    },
    "whole-space-symmetry": {
        "description": "truncated whole space with f(u) = 2(u^3 - u): Zero or Symmetric limit, plus Hopf",
        "checks": ["C6", "C7"],
        "config": {"dim": 1, "radius": 8.0, "h": 1 / 32, "s": 0.5,
                   "nonlinearity": {"id": "schrodinger-p3", "params": {"scale": 2.0, "sigma": 0.5}},
                   "initial": {"id": "shifted-bump", "params": {"center": 0.5, "amp": 0.3}},
                   "T": 5.0, "snap_every": 0.25,
                   "tolerances": {"tol_omega": 1e-6, "tol_sym": 0.02, "tol_mono": 0.01},
                   "options": {}},
    },
    "barrier-suite": {
        "description": "zeta residual, Psi, global lower bound, strong-max and boundary subsolutions",
        "checks": ["C8"],
        "config": {"dim": 1, "radius": 8.0, "h": 1 / 16, "s": 0.5,
                   "nonlinearity": {"id": "zero"}, "initial": {"id": "ball-bumps"},
                   "T": 1.0, "snap_every": 0.02, "tolerances": {"rel_tol_res": 1e-3},
                   "options": {}},
    },
}

CONFIG_KEYS = ("preset", "dim", "radius", "h", "s", "nonlinearity", "initial", "T", "snap_every",
               "tolerances", "seed", "out", "options")


class ConfigError(ValueError):
    """The experiment configuration is invalid."""


@dataclass(frozen=True)
class ExperimentConfig:
    preset: str
    dim: int
    radius: float
    h: float
    s: float
    nonlinearity: dict
    initial: dict
    T: float
    snap_every: float
    tolerances: dict
    seed: int = 0
    out: str | None = None
    options: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        """Preset defaults overlaid with ``data`` (one level deep for dict fields), then validated."""
        if not isinstance(data, dict):
            raise ConfigError("configuration must be a JSON object")
        unknown = sorted(set(data) - set(CONFIG_KEYS))
        if unknown:
            raise ConfigError(f"unknown configuration keys: {', '.join(unknown)}")
        preset = data.get("preset")
        if preset not in PRESETS:
            raise ConfigError(f"unknown preset {preset!r}; choose one of {', '.join(PRESETS)}")
        merged = copy.deepcopy(PRESETS[preset]["config"])
        for k, v in data.items():
            if k in ("tolerances", "options") and isinstance(v, dict):
                merged[k] = {**merged.get(k, {}), **v}
            else:
                merged[k] = v
        merged["preset"] = preset
        merged.setdefault("seed", 0)
        try:
            cfg = cls(**merged)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc
        cfg.validate()
        return cfg

    def validate(self) -> None:
        if self.dim not in (1, 2):
            raise ConfigError(f"dim must be 1 or 2, got {self.dim!r}")
        try:
            grid = build_grid(self.dim, float(self.radius), float(self.h))
        except (GridError, TypeError) as exc:
            raise ConfigError(f"invalid grid: {exc}") from exc
        if grid.size > MAX_NODES:
            raise ConfigError(f"{grid.size} nodes exceed the dense-operator limit of {MAX_NODES}")
        if not 0 < float(self.s) < 1:
            raise ConfigError(f"s must lie in (0, 1), got {self.s}")
        if not (float(self.T) > 0 and 0 < float(self.snap_every) <= float(self.T)):
            raise ConfigError("need T > 0 and 0 < snap_every <= T")
        for name, v in self.tolerances.items():
            if not (isinstance(v, (int, float)) and v > 0):
                raise ConfigError(f"tolerance {name} must be positive, got {v!r}")
        if not (isinstance(self.seed, int) and 0 <= self.seed < 2**64):
            raise ConfigError(f"seed must be an unsigned 64-bit integer, got {self.seed!r}")
        for kind, catalog in (("nonlinearity", ex.NONLINEARITIES), ("initial", ex.INITIAL_DATA)):
            spec = getattr(self, kind)
            if not isinstance(spec, dict) or spec.get("id") not in catalog:
                raise ConfigError(f"unknown {kind} preset {spec!r}; see list-presets")
            if not isinstance(spec.get("params", {}), dict):
                raise ConfigError(f"{kind} params must be an object")
        try:
            ex.make_nonlinearity(self.nonlinearity)
            ex.make_initial(self.initial, grid, np.random.default_rng(0))
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad preset parameters: {exc}") from exc
        if self.preset == "oracle-suite" and (self.dim != 1 or self.s != 0.5):
            raise ConfigError("oracle-suite needs dim = 1 and s = 0.5 (the Poisson-kernel oracle)")
        if self.preset in ("ball-symmetry",) and self.radius < 1.0:
            raise ConfigError("ball problems need radius >= 1")
        if self.preset in ("whole-space-symmetry", "barrier-suite") and self.dim != 1:
            raise ConfigError(f"{self.preset} is a 1D experiment")

    def echo(self) -> dict:
        """Configuration as recorded in the report (the output directory is not part of it)."""
        d = asdict(self)
        d.pop("out")
        return d


def load_config(path: str | None, preset: str | None) -> ExperimentConfig:
    data: dict = {}
    if path:
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if preset:
        data = {**data, "preset": preset}
    if "preset" not in data:
        raise ConfigError("no preset given (use --preset or a config with a 'preset' key)")
    return ExperimentConfig.from_dict(data)


# --- file formats ------------------------------------------------------------------


def atomic_write(path: Path, payload: bytes) -> None:
    """Write to a temporary file in the target directory, then rename over ``path``."""
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def encode_field(fld: Field, s: float) -> bytes:
    """``MPL1`` | dim u32 | shape u32 per axis | h f64 | s f64 | t f64 | row-major f64 values."""
    g = fld.grid
    head = DUMP_MAGIC + struct.pack("<I", g.dim) + struct.pack(f"<{g.dim}I", *g.shape)
    head += struct.pack("<ddd", g.h, s, float(fld.t))
    return head + np.ascontiguousarray(fld.values, dtype="<f8").tobytes()


def decode_field(payload: bytes) -> dict:
    if payload[:4] != DUMP_MAGIC:
        raise ValueError("not an MPL1 field dump")
    (dim,) = struct.unpack_from("<I", payload, 4)
    shape = struct.unpack_from(f"<{dim}I", payload, 8)
    off = 8 + 4 * dim
    h, s, t = struct.unpack_from("<ddd", payload, off)
    values = np.frombuffer(payload, dtype="<f8", offset=off + 24).reshape(shape)
    return {"dim": dim, "shape": tuple(shape), "h": h, "s": s, "t": t, "values": values}


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def series_csv(trajs: Sequence[Trajectory]) -> bytes:
    """Time series ``t, sup_norm, asymmetry, min_psi(lam)...`` over all snapshots of the runs."""
    grid = trajs[0].grid
    lams = sorted({round(-grid.radius * f / grid.h) * grid.h for f in (0.5, 0.25)})
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(["t", "sup_norm", "asymmetry"] + [f"min_psi[{lam:g}]" for lam in lams])
    last_t = -np.inf
    for tr in trajs:
        for k, t in enumerate(tr.times):
            if t <= last_t:
                continue
            last_t = t
            fld = tr.field(k)
            asym = np.max(np.abs(w_lambda(fld, PlaneReflection(0, 0.0)).values))
            mins = [w_lambda(fld, PlaneReflection(0, lam)).sigma_values.min() for lam in lams]
            wr.writerow([_fmt(t), _fmt(np.max(np.abs(fld.values))), _fmt(asym)] + [_fmt(m) for m in mins])
    return buf.getvalue().encode()


# --- orchestration -------------------------------------------------------------------


def _tols(cfg: ExperimentConfig) -> SymmetryTols:
    t = cfg.tolerances
    return SymmetryTols(tol_omega=t.get("tol_omega", 1e-6), tol_sym=t.get("tol_sym", 0.02),
                        tol_mono=t.get("tol_mono", 0.01))


def execute(cfg: ExperimentConfig) -> list[tuple[ex.CheckResult, float]]:
    """Run the preset pipeline; returns each check with its wall time."""
    rng = np.random.default_rng(cfg.seed)
    opt, tol = cfg.options, cfg.tolerances
    out: list[tuple[ex.CheckResult, float]] = []

    def timed(fn, *a, **kw):
        t0 = time.perf_counter()
        res = fn(*a, **kw)
        return res, time.perf_counter() - t0

    if cfg.preset == "oracle-suite":
        h_o = float(opt.get("h_oracle", 1 / 256))
        t0 = time.perf_counter()
        a = ex.oracle_bump(h=h_o, tol=tol.get("tol_const", 0.02))
        b = ex.oracle_step(h=h_o, tol_exp=tol.get("tol_exp", 0.05))
        c = ex.oracle_sign(rng, int(opt.get("n_sign", 10)))
        c1 = ex.CheckResult("C1", ex.combine([a["status"], b["status"], c["status"]]),
                            {"bump_constancy": a, "step_law": b, "sign_check": c})
        out.append((c1, time.perf_counter() - t0))
        out.append(timed(ex.check_poisson, cfg.radius, cfg.h, cfg.T, cfg.snap_every, tol.get("tol_pk", 0.03)))
        out.append(timed(ex.check_xi, float(opt.get("xi_T", 20.0)), tol.get("tol_ode", 1e-6)))
    elif cfg.preset == "principle-suite":
        out.append(timed(ex.check_principles, rng, int(opt.get("instances", 20)), tol.get("tol_mp", 1e-10),
                         cfg.h))
    elif cfg.preset == "ball-symmetry":
        t0 = time.perf_counter()
        c5, hopf = ex.check_ball([cfg.dim], cfg.s, {cfg.dim: cfg.h}, ex.make_nonlinearity(cfg.nonlinearity),
                                 rng, int(opt.get("n_data", 3)), cfg.T, cfg.snap_every, _tols(cfg),
                                 initial=cfg.initial, radius=cfg.radius)
        out.append((c5, time.perf_counter() - t0))
        out.append(timed(ex.check_hopf, hopf))
    elif cfg.preset == "whole-space-symmetry":
        t0 = time.perf_counter()
        c6, hopf = ex.check_whole_space(cfg.s, cfg.radius, cfg.h, ex.make_nonlinearity(cfg.nonlinearity),
                                        cfg.initial, rng, cfg.T, cfg.snap_every, _tols(cfg))
        out.append((c6, time.perf_counter() - t0))
        out.append(timed(ex.check_hopf, hopf))
    elif cfg.preset == "barrier-suite":
        out.append(timed(ex.check_barriers, cfg.radius, cfg.h, cfg.s))
    return out


def overall(statuses: Sequence[str]) -> tuple[str, int]:
    s = ex.combine(statuses)
    return s, {PASS: EXIT_OK, FAIL: EXIT_FAIL, NA: EXIT_HYPOTHESIS}[s]


def run(cfg: ExperimentConfig, out_dir: str | Path) -> tuple[dict, int]:
    """Execute ``cfg`` and write report, timing, time series and field dumps into ``out_dir``."""
    out_dir = Path(out_dir)
    t0 = time.perf_counter()
    results = execute(cfg)
    files: list[tuple[str, str, bytes]] = []
    for res, _ in results:
        for name, fld in sorted(res.artifacts.get("fields", {}).items()):
            files.append((f"{name}.mpl", "field", encode_field(fld, cfg.s)))
        trajs = res.artifacts.get("trajectories") or {}
        if isinstance(trajs, Trajectory):
            trajs = {res.id.lower(): trajs}
        for tag, tr in sorted(trajs.items()):
            files.append((f"series_{tag}.csv", "series", series_csv(tr if isinstance(tr, list) else [tr])))
        if "trajectory" in res.artifacts:
            files.append((f"series_{res.id.lower()}.csv", "series", series_csv([res.artifacts["trajectory"]])))
    checks = [res.to_json() for res, _ in results]
    status, code = overall([c["status"] for c in checks])
    truncation = {c["id"]: {k: v for k, v in c["stats"].items() if k.startswith(("ring_", "truncation_"))}
                  for c in checks}
    report = {
        "schema": SCHEMA,
        "config": ex.jsonable(cfg.echo()),
        "checks": checks,
        "truncation": {k: v for k, v in truncation.items() if v},
        "files": [{"name": n, "kind": k, "bytes": len(b), "sha256": hashlib.sha256(b).hexdigest()}
                  for n, k, b in files],
        "summary": {"status": status, "exit_code": code},
    }
    for name, _, payload in files:
        atomic_write(out_dir / name, payload)
    atomic_write(out_dir / "report.json", (json.dumps(report, indent=2, sort_keys=True) + "\n").encode())
    timing = {"checks": {res.id: round(dt, 6) for res, dt in results},
              "total_seconds": round(time.perf_counter() - t0, 6)}
    atomic_write(out_dir / "timing.json", (json.dumps(timing, indent=2, sort_keys=True) + "\n").encode())
    return report, code


def list_presets() -> dict:
    return {
        "experiments": {k: {"description": v["description"], "checks": v["checks"]} for k, v in PRESETS.items()},
        "nonlinearities": {k: doc for k, (_, doc) in ex.NONLINEARITIES.items()},
        "initial_data": {k: doc for k, (_, doc) in ex.INITIAL_DATA.items()},
    }


# --- entry point ----------------------------------------------------------------------


def _threads(arg: int | None) -> int | None:
    if arg is not None:
        return arg
    env = os.environ.get("MPL_THREADS")
    if env:
        try:
            return int(env)
        except ValueError:
            raise ConfigError(f"MPL_THREADS must be an integer, got {env!r}") from None
    return None


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="movplane-lab", description=__doc__.split("\n")[0])
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("list-presets", help="print the experiment, nonlinearity and initial-data catalogs")
    v = sub.add_parser("validate-config", help="check a configuration without running it")
    v.add_argument("--config", required=True)
    r = sub.add_parser("run", help="run one experiment preset")
    r.add_argument("--config")
    r.add_argument("--preset", choices=sorted(PRESETS))
    r.add_argument("--out")
    r.add_argument("--seed", type=int)
    r.add_argument("--threads", type=int)
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    if args.command == "list-presets":
        print(json.dumps(list_presets(), indent=2))
        return EXIT_OK
    try:
        if args.command == "validate-config":
            cfg = load_config(args.config, None)
            print(f"ok: preset {cfg.preset}")
            return EXIT_OK
        cfg = load_config(args.config, args.preset)
        if args.seed is not None:
            if not 0 <= args.seed < 2**64:
                raise ConfigError("seed must be an unsigned 64-bit integer")
            cfg = ExperimentConfig.from_dict({**asdict(cfg), "seed": args.seed})
        threads = _threads(args.threads)
        if threads is not None and threads < 1:
            raise ConfigError("thread count must be positive")
    except ConfigError as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out_dir = args.out or cfg.out or os.path.join("runs", cfg.preset)
    if threads is not None:
        with threadpool_limits(limits=threads):
            report, code = run(cfg, out_dir)
    else:
        report, code = run(cfg, out_dir)
    for c in report["checks"]:
        print(f"{c['id']} {c['status']}  {c['title']}")
    print(f"{report['summary']['status']} -> {out_dir}")
    return code


if __name__ == "__main__":
    sys.exit(main())
