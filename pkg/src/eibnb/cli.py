"""Command-line harness for the four experiment families.

Subcommands: direct, longrun, study, derivplots.  Each reads an optional
``--config`` file of ``key = value`` lines (# comments allowed) and applies
flag overrides on top.  Exit code 0 on success, 1 with a diagnostic on an
experiment error.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

from eibnb.criteria import FeatureTarget
from eibnb.experiments import (
    ExperimentConfig,
    ExperimentError,
    emit_derivative_plots,
    run_direct_comparison,
    run_local_global_study,
    run_long_run,
)

_DEFAULTS = {
    "function": "branin",
    "target": "maxmin",
    "level_a": math.nan,
    "alpha": 2.0,
    "n0": "20",
    "n_new": 30,
    "replications": 10,
    "budget": 500,
    "seed": 0,
    "output_dir": "results",
    "band_lo": math.nan,
    "band_hi": math.nan,
}

_TARGET_NAMES = {
    "min": "min",
    "minimum": "min",
    "maxmin": "maxmin",
    "contour": "contour_mod",
    "contour_mod": "contour_mod",
    "contour_full": "contour_full",
}


def parse_config_file(path: str | Path) -> dict[str, str]:
    """key = value (or key: value) lines; blank lines and # comments skipped."""
    values: dict[str, str] = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        for sep in ("=", ":"):
            if sep in line:
                key, _, val = line.partition(sep)
                values[key.strip()] = val.strip()
                break
        else:
            raise ValueError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
    return values


def _build_target(raw: dict) -> FeatureTarget:
    name = str(raw["target"]).lower()
    if name not in _TARGET_NAMES:
        raise ValueError(f"unknown target {raw['target']!r}")
    kind = _TARGET_NAMES[name]
    if kind.startswith("contour"):
        level = float(raw["level_a"])
        if math.isnan(level):
            raise ValueError("contour targets need level_a")
        return FeatureTarget(kind, level, float(raw["alpha"]))
    return FeatureTarget(kind)


def build_config(experiment: str, args: argparse.Namespace) -> ExperimentConfig:
    raw = dict(_DEFAULTS)
    if args.config:
        raw.update(parse_config_file(args.config))
    for key, flag in (
        ("function", "function"),
        ("target", "target"),
        ("n0", "n0"),
        ("n_new", "n_new"),
        ("replications", "reps"),
        ("budget", "budget"),
        ("seed", "seed"),
        ("output_dir", "out"),
        ("level_a", "level"),
        ("alpha", "alpha"),
    ):
        val = getattr(args, flag, None)
        if val is not None:
            raw[key] = val
    band_flag = getattr(args, "band", None)
    if band_flag is not None:
        lo, _, hi = str(band_flag).partition(",")
        raw["band_lo"], raw["band_hi"] = lo, hi

    n0 = tuple(int(v) for v in str(raw["n0"]).split(",") if v.strip())
    band = None
    if not math.isnan(float(raw["band_lo"])) and not math.isnan(float(raw["band_hi"])):
        band = (float(raw["band_lo"]), float(raw["band_hi"]))
    return ExperimentConfig(
        experiment=experiment,
        function=str(raw["function"]),
        target=_build_target(raw),
        n0=n0,
        n_new=int(raw["n_new"]),
        replications=int(raw["replications"]),
        budget=int(raw["budget"]),
        seed=int(raw["seed"]),
        output_dir=str(raw["output_dir"]),
        band=band,
    )


def _add_common_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key = value config file")
    p.add_argument("--function", choices=["branin", "levy2", "levy4"])
    p.add_argument("--target", help="min | maxmin | contour_mod | contour_full")
    p.add_argument("--level", type=float, help="contour level a")
    p.add_argument("--alpha", type=float, help="contour neighbourhood multiplier")
    p.add_argument("--n0", help="initial design size(s), comma separated")
    p.add_argument("--n-new", dest="n_new", type=int, help="sequential points to add")
    p.add_argument("--reps", type=int, help="number of replications")
    p.add_argument("--budget", type=int, help="EI evaluation budget per optimizer run")
    p.add_argument("--seed", type=int, help="base RNG seed")
    p.add_argument("--out", help="output directory for CSVs and plots")
    p.add_argument("--band", help="band as lo,hi for the local/global study")


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="eibnb",
        description="Sequential-design experiments: BNB vs GA maximization "
        "of expected-improvement criteria.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("direct", "single-step EI maximization, BNB vs GA on shared fits"),
        ("longrun", "sequential runs vs static baseline, per-k curves"),
        ("study", "local/global proportions under full vs modified contour EI"),
        ("derivplots", "partial-derivative curves of the modified contour EI"),
    ):
        p = sub.add_parser(name, help=help_text)
        _add_common_flags(p)

    args = parser.parse_args(argv)
    try:
        cfg = build_config(args.command, args)
        if args.command == "direct":
            res = run_direct_comparison(cfg)
            _print_aggregates(res.aggregates)
        elif args.command == "longrun":
            res = run_long_run(cfg)
            _print_aggregates([r for r in res.aggregates if r.group == f"k={cfg.n_new}"])
        elif args.command == "study":
            res = run_local_global_study(cfg)
            _print_aggregates(res.aggregates)
        else:
            res = emit_derivative_plots(cfg)
            print(f"wrote {len(res.raw_rows)} derivative rows to {cfg.output_dir}")
        if cfg.output_dir:
            print(f"outputs written to {cfg.output_dir}/")
    except (ExperimentError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


def _print_aggregates(rows) -> None:
    for r in rows:
        se = "n/a" if math.isnan(r.stderr) else f"{r.stderr:.4g}"
        print(
            f"{r.method:>14} {r.group:>8} {r.metric:>10}: "
            f"mean={r.mean:.6g} se={se} n={r.n_included} excluded={r.n_excluded}"
        )


if __name__ == "__main__":
    sys.exit(main())
