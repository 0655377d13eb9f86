"""Command-line entry point.

Subcommands: factorize, density, sample, price, compare, converge. Options
come from an optional JSON config file plus flag overrides; every run
writes a metadata record with the fully resolved configuration so it can be
reproduced bit-exactly. Exit codes: 0 success, 1 numerical failure, 2 usage.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .engine import SimConfig, estimate_many, pair_sampler, stream_samples_csv, triple_sampler
from .factorization import factor_laws, law_to_json, locate_roots, validate_law
from .fourier import joint_density, marginal_density_xt
from .models import LevyModel, model_from_json, model_to_json
from .presets import PRESET_NAMES, parameter_set, preset_pricing
from .pricing import price_curve, price_double_no_touch_bounds

COMMANDS = ("factorize", "density", "sample", "price", "compare", "converge")


@dataclasses.dataclass
class RunConfig:
    command: str
    model: dict | None = None
    preset: str | None = None
    engine: str = "whmc"
    seed: int = 0
    paths: int = 100_000
    steps: int = 100
    truncation: int = 128
    lam: float | None = None
    t: float = 1.0
    workers: int = 1
    s_values: list | None = None
    n_list: list | None = None
    x_grid: list | None = None
    y_grid: list | None = None
    out: str = "whmc_out"
    paper_scale: bool = False

    def resolved_model(self) -> LevyModel:
        if self.model is not None:
            return model_from_json(self.model)
        if self.preset is not None:
            return preset_pricing(self.preset).model
        raise SystemExit2("either a model JSON or --preset is required")

    def sim_config(self) -> SimConfig:
        paths = 10_000_000 if self.paper_scale else self.paths
        return SimConfig(t=self.t, n_steps=self.steps, n_paths=paths,
                         seed=self.seed, truncation=self.truncation,
                         workers=self.workers)


class SystemExit2(SystemExit):
    def __init__(self, msg):
        print(f"error: {msg}", file=sys.stderr)
        super().__init__(2)


def _parser():
    p = argparse.ArgumentParser(prog="whmc", description=__doc__)
    p.add_argument("command", nargs="?", choices=COMMANDS)
    p.add_argument("--config", help="JSON config file; flags override its fields")
    p.add_argument("--preset", choices=PRESET_NAMES)
    p.add_argument("--model", help="inline model JSON document")
    p.add_argument("--engine", choices=("whmc", "baseline", "fourier"))
    p.add_argument("--seed", type=int)
    p.add_argument("--paths", type=int)
    p.add_argument("--steps", type=int)
    p.add_argument("--truncation", type=int)
    p.add_argument("--lam", type=float)
    p.add_argument("--t", type=float)
    p.add_argument("--workers", type=int)
    p.add_argument("--s-values", help="comma-separated spots for price curves")
    p.add_argument("--n-list", help="comma-separated step counts for converge")
    p.add_argument("--out")
    p.add_argument("--paper-scale", action="store_true", default=None,
                   help="raise the path count to 10^7")
    return p


def _load_config(args) -> RunConfig:
    data = {}
    if args.config:
        with open(args.config) as fh:
            data = json.load(fh)
    if args.command:
        data["command"] = args.command
    for name in ("preset", "engine", "seed", "paths", "steps", "truncation",
                 "lam", "t", "workers", "out"):
        v = getattr(args, name)
        if v is not None:
            data[name] = v
    if args.model is not None:
        data["model"] = json.loads(args.model)
    if args.s_values is not None:
        data["s_values"] = [float(x) for x in args.s_values.split(",")]
    if args.n_list is not None:
        data["n_list"] = [int(x) for x in args.n_list.split(",")]
    if args.paper_scale is not None:
        data["paper_scale"] = True
    if "command" not in data:
        raise SystemExit2("no command given (and none in the config file)")
    allowed = {f.name for f in dataclasses.fields(RunConfig)}
    unknown = set(data) - allowed
    if unknown:
        raise SystemExit2(f"unknown config fields: {sorted(unknown)}")
    try:
        return RunConfig(**data)
    except TypeError as exc:
        raise SystemExit2(str(exc))


def _write_metadata(cfg: RunConfig, outdir: Path, artifacts: list, model: LevyModel):
    meta = {
        "version": __version__,
        "config": dataclasses.asdict(cfg),
        "model": json.loads(model_to_json(model)),
        "model_hash": model.content_hash(),
        "artifacts": artifacts,
    }
    path = outdir / f"{cfg.command}_metadata.json"
    path.write_text(json.dumps(meta, indent=2, sort_keys=True))
    return path


def _csv(path: Path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)
    return path


# ----------------------------------------------------------------------- #

def _cmd_factorize(cfg: RunConfig, outdir: Path, model: LevyModel):
    lam = cfg.lam if cfg.lam is not None else cfg.steps / cfg.t
    ladder = locate_roots(model, lam, cfg.truncation)
    pair = factor_laws(model, lam, K=cfg.truncation)
    rows = [
        (n, ladder.plus_roots[n], ladder.plus_residuals[n],
         ladder.minus_roots[n], ladder.minus_residuals[n])
        for n in range(cfg.truncation + 1)
    ]
    arts = [str(_csv(outdir / "roots.csv",
                     ("n", "root_plus", "residual_plus", "root_minus", "residual_minus"),
                     rows))]
    for side, law in (("sup", pair.sup_law), ("inf", pair.inf_law)):
        p = outdir / f"law_{side}.json"
        p.write_text(law_to_json(law))
        arts.append(str(p))
        rep = validate_law(law)
        q = outdir / f"law_{side}_validation.json"
        q.write_text(json.dumps({"passed": rep.passed, "warn": rep.warn,
                                 "messages": list(rep.messages)}, indent=2))
        arts.append(str(q))
        if not rep.passed:
            raise ArithmeticError(f"{side} law failed validation: {rep.messages}")
    return arts


def _cmd_density(cfg: RunConfig, outdir: Path, model: LevyModel):
    if cfg.x_grid and cfg.y_grid:
        xg = np.asarray(cfg.x_grid, dtype=float)
        yg = np.asarray(cfg.y_grid, dtype=float)
        grid = joint_density(model, cfg.t, xg, yg)
        rows = [(x, y, grid.values[i, j])
                for i, x in enumerate(xg) for j, y in enumerate(yg)]
        return [str(_csv(outdir / "joint_density.csv", ("x", "y", "value"), rows))]
    x = np.linspace(-8.0, 8.0, 1601)
    dens = marginal_density_xt(model, cfg.t, x)
    return [str(_csv(outdir / "marginal_density.csv", ("x", "density"),
                     zip(x.tolist(), dens.tolist())))]


def _cmd_sample(cfg: RunConfig, outdir: Path, model: LevyModel):
    sim = cfg.sim_config()
    pair = factor_laws(model, sim.lam, K=cfg.truncation)
    path = outdir / "samples.csv"
    stream_samples_csv(triple_sampler(pair, sim.n_steps), sim, path)
    return [str(path)]


def _cmd_price(cfg: RunConfig, outdir: Path, model: LevyModel):
    if cfg.preset is None:
        raise SystemExit2("price requires --preset")
    preset = preset_pricing(cfg.preset)
    sim = dataclasses.replace(cfg.sim_config(), n_steps=cfg.steps or preset.n_steps)
    s_values = cfg.s_values or [2.0, 4.0, 6.0, 8.0, 9.5]
    arts = []
    if cfg.preset == "paper-dnt":
        rows = []
        for s in s_values:
            spec = dataclasses.replace(preset.spec, s=float(s))
            lo, hi = price_double_no_touch_bounds(model, spec, sim)
            rows.append((s, lo.value, lo.std_error, hi.value, hi.std_error))
        arts.append(str(_csv(outdir / "dnt_bounds.csv",
                             ("s", "lower", "lower_se", "upper", "upper_se"), rows)))
        return arts
    curve = price_curve(model, preset.spec, s_values, cfg.engine, sim)
    rows = [(s, e.value, e.std_error) for s, e in curve]
    arts.append(str(_csv(outdir / f"price_{cfg.engine}.csv",
                         ("s", "value", "std_error"), rows)))
    return arts


def _cmd_compare(cfg: RunConfig, outdir: Path, model: LevyModel):
    if cfg.preset is None:
        raise SystemExit2("compare requires --preset")
    preset = preset_pricing(cfg.preset)
    sim = cfg.sim_config()
    s_values = cfg.s_values or [2.0, 4.0, 6.0, 8.0, 9.5]
    results = {}
    for engine in ("whmc", "baseline", "fourier"):
        results[engine] = dict(price_curve(model, preset.spec, s_values, engine, sim))
    rows = []
    for s in s_values:
        s = float(s)
        rows.append((s,
                     results["whmc"][s].value, results["whmc"][s].std_error,
                     results["baseline"][s].value, results["baseline"][s].std_error,
                     results["fourier"][s].value))
    return [str(_csv(outdir / "compare.csv",
                     ("s", "whmc", "whmc_se", "baseline", "baseline_se", "fourier"),
                     rows))]


def _cmd_converge(cfg: RunConfig, outdir: Path, model: LevyModel):
    from .engine import convergence_study

    n_list = cfg.n_list or [20, 50, 100]
    s, k = 6.0, 5.0

    def payoff(batch):
        return np.maximum(s * np.exp(batch["V"]) - k, 0.0) * (
            s * np.exp(batch["J"]) < 10.0
        )

    rows = convergence_study(model, payoff, cfg.t, n_list, n_paths=cfg.paths,
                             seed=cfg.seed, truncation=cfg.truncation,
                             workers=cfg.workers)
    return [str(_csv(outdir / "convergence.csv", ("n", "value", "std_error"), rows))]


def run(cfg: RunConfig) -> int:
    """Execute one run; returns the exit status and writes artifacts."""
    outdir = Path(cfg.out)
    outdir.mkdir(parents=True, exist_ok=True)
    model = cfg.resolved_model()
    handler = {
        "factorize": _cmd_factorize,
        "density": _cmd_density,
        "sample": _cmd_sample,
        "price": _cmd_price,
        "compare": _cmd_compare,
        "converge": _cmd_converge,
    }[cfg.command]
    try:
        artifacts = handler(cfg, outdir, model)
    except (ArithmeticError, RuntimeError, ValueError) as exc:
        err = {"error": type(exc).__name__, "message": str(exc)}
        (outdir / "error.json").write_text(json.dumps(err, indent=2))
        print(json.dumps(err), file=sys.stderr)
        return 1
    meta = _write_metadata(cfg, outdir, artifacts, model)
    print(json.dumps({"status": "ok", "artifacts": artifacts, "metadata": str(meta)}))
    return 0


def main(argv=None) -> int:
    parser = _parser()
    args = parser.parse_args(argv)
    if args.command is None and not args.config:
        parser.print_usage()
        return 2
    try:
        cfg = _load_config(args)
    except SystemExit2 as exc:
        return int(exc.code)
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
