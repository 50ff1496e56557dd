"""Command-line front end: generate, run, sweep, report.

Exit codes: 0 success, 2 configuration error, 3 input-data error,
4 I/O error.  Batch parallelism is capped by AMMFEELAB_THREADS; the
kernel backend is picked by AMMFEELAB_BACKEND (numba or numpy).
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import sys
from pathlib import Path

from .config import (ConfigError, RunManifest, build_sim_config,
                     build_sweep_config, load_config, run_id)
from .engine import (POLICY_KINDS, HistoricalSource, SyntheticSource,
                     fee_sweep, run_batch)
from .metrics import (RESULTS_HEADER, BatchStats, LabeledBatch, batch_stats,
                      markdown_from_stats, markdown_tables, results_csv)
from .pricefeed import DataError, save_path


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ammfeelab",
        description="CPMM pool simulator comparing fixed and directional fee algorithms",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="TOML config file")
        p.add_argument("--seed", type=int, help="override the master seed")
        p.add_argument("--out", default="out", help="output directory (default: out)")
        p.add_argument("--set", dest="overrides", action="append", default=[],
                       metavar="KEY=VALUE", help="override a config key (repeatable)")
        p.add_argument("--format", choices=("csv", "md"), default="csv",
                       help="stdout summary format")

    p_gen = sub.add_parser("generate", help="write synthetic price path CSVs")
    common(p_gen)

    p_run = sub.add_parser("run", help="run the simulation batch")
    common(p_run)
    p_run.add_argument("--policies",
                       help="comma-separated fee policies to compare, e.g. fx,ba,da,ob")

    p_sweep = sub.add_parser("sweep", help="run the fee sweep experiment")
    common(p_sweep)

    p_report = sub.add_parser("report", help="merge results CSVs into comparison tables")
    common(p_report)
    p_report.add_argument("results", nargs="+", help="results CSV files")

    return parser


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _start_manifest(args, raw, command: str, rid: str) -> RunManifest:
    manifest = RunManifest(run_id=rid, command=command,
                           master_seed=raw["run"]["master_seed"], config=raw)
    if args.config:
        manifest.add_input(args.config)
    return manifest


def cmd_generate(args) -> int:
    raw = load_config(args.config, args.overrides, args.seed)
    sim = build_sim_config(raw)
    if not isinstance(sim.source, SyntheticSource):
        raise ConfigError("generate needs path_source.kind = 'synthetic'")
    out = _out_dir(args)
    paths_dir = out / "paths"
    paths_dir.mkdir(exist_ok=True)
    rid = run_id(raw, "generate")
    manifest = _start_manifest(args, raw, "generate", rid)
    for i in range(sim.source.n_paths):
        path = sim.source.make_path(sim.master_seed, i)
        file = paths_dir / f"path_{i:04d}.csv"
        save_path(path, file)
        manifest.add_output(file)
    manifest.write(out / "manifest.json")
    print(f"wrote {sim.source.n_paths} path files to {paths_dir}")
    return 0


def _policies(args, raw) -> list[str]:
    if getattr(args, "policies", None):
        kinds = [p.strip().lower() for p in args.policies.split(",") if p.strip()]
        for kind in kinds:
            if kind not in POLICY_KINDS:
                raise ConfigError(f"--policies: unknown policy {kind!r}")
        if not kinds:
            raise ConfigError("--policies given but empty")
        return kinds
    return [raw["fee_policy"]["kind"]]


def cmd_run(args) -> int:
    raw = load_config(args.config, args.overrides, args.seed)
    policies = _policies(args, raw)
    rid = run_id(raw, "run:" + ",".join(policies))
    base = build_sim_config(raw)

    batches = []
    for kind in policies:
        config = dataclasses.replace(
            base, policy=dataclasses.replace(base.policy, kind=kind))
        batch = run_batch(config)
        batches.append(LabeledBatch(run_id=rid, regime=config.regime_label,
                                    policy=kind, results=batch.results))

    out = _out_dir(args)
    results_file = out / "results.csv"
    results_file.write_text(results_csv(batches), encoding="utf-8")
    tables_file = out / "tables.md"
    tables_file.write_text(markdown_tables(batches), encoding="utf-8")

    manifest = _start_manifest(args, raw, "run", rid)
    if isinstance(base.source, HistoricalSource):
        for file in (base.source.file, base.source.file_a, base.source.file_b):
            if file is not None:
                manifest.add_input(file)
    manifest.add_output(results_file)
    manifest.add_output(tables_file)
    manifest.write(out / "manifest.json")

    if args.format == "md":
        print(markdown_tables(batches), end="")
    else:
        for batch in batches:
            stats = batch_stats(batch)
            cells = [f"{name}={stats.mean[name]:.2f}±{stats.std[name]:.2f}"
                     for name in ("iu_mo", "uu_mo", "lp_mo")]
            print(f"[{rid}] {stats.regime} {stats.policy}: " + " ".join(cells))
    print(f"results written to {results_file}")
    return 0


def cmd_sweep(args) -> int:
    raw = load_config(args.config, args.overrides, args.seed)
    cfg = build_sweep_config(raw)
    result = fee_sweep(cfg)
    out = _out_dir(args)
    sweep_file = out / "sweep.csv"
    lines = ["fee_pct,expected_lp_profit,mc_lp_profit,mc_std"]
    for i in range(len(result.fees)):
        lines.append(",".join([
            repr(float(result.fees[i] * 100.0)),
            repr(float(result.expected[i])),
            repr(float(result.mc[i])),
            repr(float(result.mc_se[i]))]))
    sweep_file.write_text("\n".join(lines) + "\n", encoding="utf-8")

    rid = run_id(raw, "sweep")
    manifest = _start_manifest(args, raw, "sweep", rid)
    manifest.master_seed = raw["sweep"]["seed"]
    manifest.add_output(sweep_file)
    manifest.write(out / "manifest.json")

    print(f"optimal fee {result.argmax_fee * 100.0:.2f}% "
          f"with expected LP profit {result.argmax_profit:.2f}")
    print(f"curve written to {sweep_file}")
    return 0


def _read_results(file) -> list[BatchStats]:
    path = Path(file)
    if not path.exists():
        raise DataError(f"{path}: file not found")
    with open(path, "r", encoding="utf-8", newline="") as handle:
        reader = csv.DictReader(handle)
        if reader.fieldnames is None or ",".join(reader.fieldnames) != RESULTS_HEADER:
            raise DataError(f"{path}: header does not match the results schema")
        rows = list(reader)
    groups: dict[tuple[str, str, str], dict] = {}
    for row in rows:
        key = (row["run_id"], row["regime"], row["policy"])
        group = groups.setdefault(key, {"n": 0, "mean": None, "std": None})
        if row["path_index"] == "aggregate":
            group["mean"] = row
        elif row["path_index"] == "aggregate_std":
            group["std"] = row
        else:
            group["n"] += 1
    stats = []
    metric_keys = ("iu_mo", "uu_mo", "lp_mo", "il_divergence", "il_hold")
    for (rid, regime, policy), group in groups.items():
        if group["mean"] is None or group["std"] is None:
            raise DataError(f"{path}: missing aggregate rows for {regime}/{policy}")
        try:
            mean = dict((k, float(group["mean"][k])) for k in metric_keys)
            std = dict((k, float(group["std"][k])) for k in metric_keys)
        except (TypeError, ValueError):
            raise DataError(f"{path}: malformed aggregate row for {regime}/{policy}") from None
        stats.append(BatchStats(run_id=rid, regime=regime, policy=policy,
                                n_paths=max(group["n"], 1), mean=mean, std=std))
    return stats


def cmd_report(args) -> int:
    stats: list[BatchStats] = []
    for file in args.results:
        stats.extend(_read_results(file))
    content = markdown_from_stats(stats)
    out = _out_dir(args)
    report_file = out / "comparison.md"
    report_file.write_text(content, encoding="utf-8")
    print(content, end="")
    print(f"report written to {report_file}")
    return 0


_COMMANDS = {
    "generate": cmd_generate,
    "run": cmd_run,
    "sweep": cmd_sweep,
    "report": cmd_report,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
