"""Command-line entry point: ``run``, ``analyze`` and ``sweep``.

Output tree of ``run --out DIR``::

    DIR/manifest.json          resolved config, seeds, checksums of every run file
    DIR/summary.json           medians over seeds
    DIR/seed_<n>/config.txt    resolved config of that seed
    DIR/seed_<n>/{prices,avalanches,books,agents}.csv
    DIR/seed_<n>/run.json      buyer/seller fractions and conservation totals
    DIR/seed_<n>/{pdf.csv,summary.json}

Failures print one ``error: {json}`` line on stderr and exit nonzero.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import fields
from pathlib import Path
from typing import Sequence

from . import __version__, records
from .analysis import analyze_directory, ensemble_summary, write_json
from .config import SimConfig, coerce_value, config_from_mapping, parse_config, serialize_config
from .engine import Simulation
from .errors import ConfigError, InputError, MarketError

log = logging.getLogger("multiplex_market")

CONFIG_KEYS = [f.name for f in fields(SimConfig) if f.name != "seed"]
EXIT_CONFIG = 2
EXIT_INPUT = 3
EXIT_FAILURE = 1


def seed_dir(out: Path, seed: int) -> Path:
    return out / f"seed_{seed}"


def run_one(cfg: SimConfig, directory: Path) -> dict:
    """Simulate one configuration, write its files and analyze them."""
    directory.mkdir(parents=True, exist_ok=True)
    (directory / "config.txt").write_text(serialize_config(cfg), encoding="utf-8", newline="\n")
    record = Simulation(cfg).run()
    records.write_run(record, directory)
    money0, q1_0, q2_0 = record.initial_totals
    info = {
        "seed": cfg.seed,
        "steps_recorded": len(record),
        "fractions": record.buy_sell_fractions(),
        "totals": {
            "money_initial": money0, "money_final": float(record.final_money.sum()),
            "q1_initial": q1_0, "q1_final": int(record.final_holdings[:, 0].sum()),
            "q2_initial": q2_0, "q2_final": int(record.final_holdings[:, 1].sum()),
        },
    }
    write_json(directory / "run.json", info)
    return analyze_directory(directory)


def _run_one_job(args):
    cfg_dict, directory = args
    return run_one(config_from_mapping(cfg_dict), Path(directory))


def run_command(cfg: SimConfig, seeds: Sequence[int], out: str | Path, jobs: int = 1) -> dict:
    """Run every seed into its own directory under ``out`` and aggregate.

    Returns the manifest, which is also written to ``out/manifest.json``.
    """
    seeds = [int(s) for s in seeds]
    if not seeds:
        raise ConfigError("at least one seed is required", ["seed"])
    if len(set(seeds)) != len(seeds):
        raise ConfigError(f"duplicate seeds: {seeds}", ["seed"])
    out = Path(out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        probe = out / ".write-test"
        probe.write_text("", encoding="utf-8")
        probe.unlink()
    except OSError as exc:
        raise InputError(f"output directory not writable: {out} ({exc.strerror})") from None

    jobs_list = [(cfg.replace(seed=s).to_dict(), str(seed_dir(out, s))) for s in seeds]
    if jobs > 1 and len(seeds) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_one_job, jobs_list))
    else:
        results = []
        for job in jobs_list:
            log.info("running seed %s", job[0]["seed"])
            results.append(_run_one_job(job))

    summaries = {seed_dir(out, s).name: r for s, r in zip(seeds, results)}
    write_json(out / "summary.json", ensemble_summary(summaries))

    checksums = {}
    for s in seeds:
        d = seed_dir(out, s)
        for path in sorted(d.iterdir()):
            if path.is_file():
                checksums[f"{d.name}/{path.name}"] = records.sha256_file(path)
    checksums["summary.json"] = records.sha256_file(out / "summary.json")
    config = cfg.to_dict()
    config.pop("seed")
    manifest = {
        "version": __version__,
        "config": config,
        "seeds": seeds,
        "output_dir": str(out),
        "checksums": checksums,
    }
    write_json(out / "manifest.json", manifest)
    return manifest


def load_manifest(path: str | Path) -> tuple[dict, list[int]]:
    path = Path(path)
    if not path.is_file():
        raise InputError(f"manifest not found: {path}")
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}:{exc.lineno}: malformed manifest ({exc.msg})") from None
    if not isinstance(data, dict) or "config" not in data or "seeds" not in data:
        raise InputError(f"{path}: manifest needs 'config' and 'seeds'")
    return dict(data["config"]), [int(s) for s in data["seeds"]]


def analyze_command(run_dir: str | Path) -> dict:
    """Analyze one run directory, or every ``seed_*`` directory of an ensemble."""
    run_dir = Path(run_dir)
    if not run_dir.is_dir():
        raise InputError(f"run directory not found: {run_dir}")
    if (run_dir / "prices.csv").is_file():
        return analyze_directory(run_dir)
    seeds = sorted(p for p in run_dir.glob("seed_*") if (p / "prices.csv").is_file())
    if not seeds:
        raise InputError(f"missing input: no prices.csv in {run_dir}")
    summaries = {p.name: analyze_directory(p) for p in seeds}
    ens = ensemble_summary(summaries)
    write_json(run_dir / "summary.json", ens)
    return ens


def sweep_command(cfg: SimConfig, param: str, values: Sequence, seeds: Sequence[int],
                  out: str | Path, jobs: int = 1) -> dict:
    if param not in CONFIG_KEYS:
        raise ConfigError(f"cannot sweep unknown parameter {param!r}", [param])
    out = Path(out)
    results = {}
    for raw in values:
        value = coerce_value(param, raw)
        sub = out / f"{param}={value!r}"
        manifest = run_command(cfg.replace(**{param: value}), seeds, sub, jobs)
        summary = json.loads((sub / "summary.json").read_text(encoding="utf-8"))
        results[repr(value)] = {"dir": sub.name, "summary": summary,
                                "manifest_checksums": manifest["checksums"]}
    report = {"param": param, "values": [coerce_value(param, v) for v in values],
              "seeds": list(seeds), "results": results}
    write_json(out / "sweep.json", report)
    return report


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("configuration overrides")
    for key in CONFIG_KEYS:
        names = [f"--{key}"]
        if "_" in key:
            names.append(f"--{key.replace('_', '-')}")
        group.add_argument(*names, dest=f"cfg_{key}", metavar="X", default=None)


def _add_run_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="key = value configuration file")
    parser.add_argument("--manifest", help="re-run the config and seeds of a manifest.json")
    parser.add_argument("--seed", action="append", type=int, dest="seeds", metavar="N",
                        help="seed to run (repeatable); default: the config's seed")
    parser.add_argument("--out", default="runs", help="output directory (default: runs)")
    parser.add_argument("--jobs", type=int, default=1, help="seeds simulated in parallel")
    _add_config_flags(parser)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="multiplex-market",
                                     description="Two-asset multiplex market simulator.")
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="simulate one or more seeds")
    _add_run_options(run_p)

    an_p = sub.add_parser("analyze", help="return statistics and PDFs of a run directory")
    an_p.add_argument("--run", required=True, dest="run_dir", help="run or ensemble directory")

    sw_p = sub.add_parser("sweep", help="run an ensemble for each value of one parameter")
    sw_p.add_argument("--param", required=True)
    sw_p.add_argument("--values", required=True, help="comma-separated values")
    _add_run_options(sw_p)
    return parser


def resolve(args) -> tuple[SimConfig, list[int]]:
    overrides = {k: getattr(args, f"cfg_{k}") for k in CONFIG_KEYS
                 if getattr(args, f"cfg_{k}") is not None}
    if args.manifest:
        if args.config:
            raise ConfigError("--config and --manifest are mutually exclusive", ["config"])
        base, seeds = load_manifest(args.manifest)
        cfg = config_from_mapping({**base, **overrides})
    else:
        cfg = parse_config(args.config, overrides)
        seeds = [cfg.seed]
    if args.seeds:
        seeds = args.seeds
    return cfg, seeds


def _error_line(exc: Exception) -> str:
    payload = {"error": type(exc).__name__, "message": str(exc)}
    keys = getattr(exc, "keys", None)
    if keys:
        payload["keys"] = list(keys)
    return "error: " + json.dumps(payload, sort_keys=True)


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "analyze":
            result = analyze_command(args.run_dir)
        elif args.command == "run":
            cfg, seeds = resolve(args)
            result = run_command(cfg, seeds, args.out, args.jobs)
        else:
            cfg, seeds = resolve(args)
            values = [v.strip() for v in args.values.split(",") if v.strip()]
            if not values:
                raise ConfigError("--values is empty", [args.param])
            result = sweep_command(cfg, args.param, values, seeds, args.out, args.jobs)
    except ConfigError as exc:
        print(_error_line(exc), file=sys.stderr)
        return EXIT_CONFIG
    except InputError as exc:
        print(_error_line(exc), file=sys.stderr)
        return EXIT_INPUT
    except (MarketError, OSError) as exc:
        print(_error_line(exc), file=sys.stderr)
        return EXIT_FAILURE
    if args.verbose:
        log.info("done: %s", json.dumps(_headline(result), sort_keys=True))
    return 0


def _headline(result: dict) -> dict:
    series = result.get("series", {})
    return {name: {k: v for k, v in s.items() if k in ("median_q", "q")}
            for name, s in series.items()} if series else {}


if __name__ == "__main__":
    sys.exit(main())
