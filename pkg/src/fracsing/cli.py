"""Configuration-driven experiment runner.

``fracsing <experiment> --config path [--n --sigma --k --set --levels --seed --out]``

Writes ``results.csv``, ``summary.json`` and ``plotdata/*.tsv`` to the output
directory.  Exit status: 0 when every check passes, 1 when one fails, 2 when
the configuration is invalid.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields
from pathlib import Path

from .experiments import DEFAULTS, EXPERIMENTS, Outcome, Settings, run_experiment
from .lattice import parse_set

__all__ = ["RunConfig", "Diagnostic", "validate", "resolve", "run", "main", "EXPERIMENT_NAMES"]

EXPERIMENT_NAMES = tuple(EXPERIMENTS) + ("full-suite",)
SIGMA_RANGE = (0.05, 0.95)
# experiments whose probes are meaningful on the real line
ALLOW_N1 = {"constants", "extension-check", "poincare"}
MAX_N = {"extension-check": 2, "poincare": 2, "solve": 3, "capacity": 3, "equivalence": 3,
         "movesphere": 3, "blowup": 3}
CSV_FIELDS = ["experiment", "quantity", "n", "sigma", "k", "set", "level", "detail", "value"]
DEFAULT_OUT = "./out"


@dataclass
class RunConfig:
    experiment: str
    n: int | None = None
    sigma: float | None = None
    k: int | None = None
    set: str | None = None
    levels: int | None = None
    seed: int = 0
    output_dir: str | None = DEFAULT_OUT

    @classmethod
    def from_dict(cls, d: dict) -> tuple["RunConfig", list]:
        known = {f.name for f in fields(cls)}
        d = dict(d)
        if "out" in d and "output_dir" not in d:
            d["output_dir"] = d.pop("out")
        unknown = sorted(set(d) - known)
        cfg = cls(**{k: v for k, v in d.items() if k in known and v is not None or k == "output_dir"})
        return cfg, [Diagnostic(f"unknown config key '{u}'") for u in unknown]


@dataclass(frozen=True)
class Diagnostic:
    message: str
    fatal: bool = True

    def __str__(self) -> str:
        return self.message if self.fatal else f"note: {self.message}"


def _is_int(x) -> bool:
    return isinstance(x, int) and not isinstance(x, bool)


def validate(cfg: RunConfig) -> list[Diagnostic]:
    """Every problem with ``cfg``; notes (``fatal=False``) do not block a run."""
    out: list[Diagnostic] = []
    if cfg.experiment not in EXPERIMENT_NAMES:
        out.append(Diagnostic(f"unknown experiment '{cfg.experiment}'"))
    defaults = DEFAULTS.get(cfg.experiment, DEFAULTS["constants"])
    n = defaults["n"] if cfg.n is None else cfg.n
    sigma = defaults["sigma"] if cfg.sigma is None else cfg.sigma
    k = defaults["k"] if cfg.k is None else cfg.k
    n_ok = _is_int(n)
    if not n_ok:
        out.append(Diagnostic("n must be an integer"))
    else:
        low = 1 if cfg.experiment in ALLOW_N1 else 2
        if n < low:
            out.append(Diagnostic(f"n must be >= {low}"))
        cap = MAX_N.get(cfg.experiment)
        if cap is not None and n > cap:
            out.append(Diagnostic(f"n must be <= {cap} for {cfg.experiment}"))
    if not isinstance(sigma, (int, float)) or isinstance(sigma, bool):
        out.append(Diagnostic("sigma must be a number"))
    elif not 0.0 < sigma < 1.0:
        out.append(Diagnostic("sigma out of (0,1)"))
    elif not SIGMA_RANGE[0] <= sigma <= SIGMA_RANGE[1]:
        out.append(Diagnostic(f"sigma must lie in [{SIGMA_RANGE[0]}, {SIGMA_RANGE[1]}]"))
    elif n_ok and n <= 2 * sigma and cfg.experiment not in ("constants", "extension-check", "poincare"):
        out.append(Diagnostic("need n > 2 sigma"))
    if not _is_int(k) or k < 0:
        out.append(Diagnostic("k must be a nonnegative integer"))
    elif n_ok and k > n - 1:
        out.append(Diagnostic("k must be ≤ n−1"))
    if cfg.levels is not None and (not _is_int(cfg.levels) or cfg.levels < 1):
        out.append(Diagnostic("levels must be a positive integer"))
    if not _is_int(cfg.seed) or cfg.seed < 0:
        out.append(Diagnostic("seed must be a nonnegative integer"))
    if cfg.set is not None:
        if not isinstance(cfg.set, str):
            out.append(Diagnostic("set must be a string"))
        elif n_ok and n >= 1:
            try:
                parse_set(cfg.set, n)
            except (ValueError, TypeError) as e:
                out.append(Diagnostic(f"set: {e}"))
    if cfg.output_dir is None or str(cfg.output_dir).strip() == "":
        out.append(Diagnostic(f"output_dir empty; using {DEFAULT_OUT}", fatal=False))
    return out


def resolve(cfg: RunConfig, name: str | None = None) -> Settings:
    """Fill experiment defaults for unset fields."""
    name = name or cfg.experiment
    d = DEFAULTS[name]
    explicit = cfg.n is not None
    return Settings(
        experiment=name,
        n=cfg.n if explicit else d["n"],
        sigma=float(cfg.sigma if cfg.sigma is not None else d["sigma"]),
        k=cfg.k if cfg.k is not None else d["k"],
        set=cfg.set,
        levels=cfg.levels if cfg.levels is not None else d["levels"],
        seed=cfg.seed,
        explicit_n=explicit,
    )


def _suite_settings(cfg: RunConfig) -> list[Settings]:
    # the suite runs every experiment at its own defaults; only seed and levels carry over
    base = RunConfig("full-suite", levels=cfg.levels, seed=cfg.seed)
    return [resolve(base, name) for name in EXPERIMENTS]


def _run_all(settings: list[Settings], workers: int | None) -> list[Outcome]:
    workers = workers or os.cpu_count() or 1
    if workers <= 1 or len(settings) == 1:
        return [run_experiment(s) for s in settings]
    with ProcessPoolExecutor(max_workers=min(workers, len(settings))) as pool:
        return list(pool.map(run_experiment, settings))


def _csv_text(outcomes: list[Outcome]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CSV_FIELDS, lineterminator="\n")
    w.writeheader()
    for o in outcomes:
        for r in o.rows:
            w.writerow(r)
    return buf.getvalue()


def _write(out_dir: Path, cfg: RunConfig, outcomes: list[Outcome], diagnostics) -> bool:
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "results.csv").write_text(_csv_text(outcomes), encoding="utf-8")
    checks = [dict(c.to_dict(), experiment=o.experiment) for o in outcomes for c in o.checks]
    passed = all(c["pass"] for c in checks)
    summary = {
        "experiment": cfg.experiment,
        "config": asdict(cfg),
        "passed": passed,
        "failed": [f"{c['experiment']}:{c['name']}" for c in checks if not c["pass"]],
        "checks": checks,
        "notes": {o.experiment: o.notes for o in outcomes if o.notes},
        "runtime_s": {o.experiment: round(o.runtime, 3) for o in outcomes},
        "diagnostics": [str(d) for d in diagnostics],
    }
    (out_dir / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=False) + "\n",
                                          encoding="utf-8")
    plot_dir = out_dir / "plotdata"
    plot_dir.mkdir(exist_ok=True)
    for o in outcomes:
        for name, pts in o.plots.items():
            lines = ["# x\ty"] + [f"{x!r}\t{y!r}" for x, y in pts]
            (plot_dir / f"{o.experiment}__{name}.tsv").write_text("\n".join(lines) + "\n",
                                                                  encoding="utf-8")
    return passed


def run(cfg: RunConfig, workers: int | None = None, stream=None) -> int:
    stream = stream or sys.stderr
    diags = validate(cfg)
    fatal = [d for d in diags if d.fatal]
    for d in diags:
        print(str(d), file=stream)
    if fatal:
        return 2
    out_dir = Path(cfg.output_dir.strip() if cfg.output_dir and cfg.output_dir.strip() else DEFAULT_OUT)
    if cfg.experiment == "full-suite":
        settings = _suite_settings(cfg)
    else:
        settings = [resolve(cfg)]
    outcomes = _run_all(settings, workers)
    ok = _write(out_dir, cfg, outcomes, diags)
    for o in outcomes:
        for c in o.checks:
            if not c.passed:
                print(f"FAILED {o.experiment}:{c.name} measured={c.measured!r} target {c.target}",
                      file=stream)
    return 0 if ok else 1


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fracsing", description=__doc__.split("\n\n")[0])
    p.add_argument("experiment", choices=EXPERIMENT_NAMES)
    p.add_argument("--config", help="JSON file; command-line flags override its keys")
    p.add_argument("--n", type=int)
    p.add_argument("--sigma", type=float)
    p.add_argument("--k", type=int)
    p.add_argument("--set", dest="set", help="point(x,..) | ball(c,..;r) | strip(k;extent), joined by +")
    p.add_argument("--levels", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", dest="output_dir")
    p.add_argument("--workers", type=int, help="worker processes for full-suite")
    return p


def load_config(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise ValueError("config must be a JSON object")
    return data


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    base: dict = {}
    diags: list[Diagnostic] = []
    if args.config:
        try:
            base = load_config(args.config)
        except (OSError, ValueError) as e:
            print(f"config: {e}", file=sys.stderr)
            return 2
    base["experiment"] = args.experiment
    for key in ("n", "sigma", "k", "set", "levels", "seed", "output_dir"):
        val = getattr(args, key)
        if val is not None:
            base[key] = val
    try:
        cfg, diags = RunConfig.from_dict(base)
    except TypeError as e:
        print(f"config: {e}", file=sys.stderr)
        return 2
    if diags:
        for d in diags:
            print(str(d), file=sys.stderr)
        return 2
    return run(cfg, workers=args.workers)


if __name__ == "__main__":
    raise SystemExit(main())
