"""Command-line front end.

Subcommands:
  run       execute one config (or each method of a list) and write metrics
  sweep     execute a config's [sweep] section, optionally in parallel
  oracle    print/emit analytic routing oracles and codec efficiency tables
  validate  parse a config, report errors, echo the canonical form
  presets   list shipped preset names
"""

from __future__ import annotations

import argparse
import os
import sys
from typing import List, Optional

from . import codec, oracles
from .config import METHODS, ConfigError, ExperimentSpec, parse_config
from .engine import RngStreams
from .metrics import (
    collect_metrics,
    write_json,
    write_runs_csv,
    write_sweep_csv,
    write_timeline_csv,
)
from .methods import run_all_methods, run_sweep, with_method
from .presets import list_presets, preset_text
from .sim import Run


def _load_spec(args) -> ExperimentSpec:
    if args.preset:
        text = preset_text(args.preset)
    elif args.config:
        with open(args.config) as fh:
            text = fh.read()
    else:
        raise ConfigError("provide --preset NAME or --config FILE")
    spec = parse_config(text)
    run_kw = {}
    if args.seed is not None:
        run_kw["seed"] = args.seed
    if run_kw:
        spec = with_method(spec, spec.run.method, **run_kw)
    return spec


def _outpath(out: Optional[str], name: str) -> str:
    if not out:
        return name
    os.makedirs(out, exist_ok=True)
    return os.path.join(out, name)


def _cmd_run(args) -> int:
    spec = _load_spec(args)
    if args.method == "all":
        methods = list(METHODS)
    elif args.method:
        methods = [args.method]
    else:
        methods = [spec.run.method]

    rows = []
    for m in methods:
        mspec = with_method(spec, m)
        run = Run(mspec)
        metrics = run.execute()
        rows.append(metrics)
        print(
            f"{m:16s} total={metrics.total_ns / 1000.0:10.2f}us "
            f"events={metrics.events:9d} wire_eff={metrics.wire_efficiency:.4f}"
        )
        if mspec.run.collect_util:
            write_timeline_csv(_outpath(args.out, f"timeline_{m}.csv"), run)
        if args.format == "json":
            write_json(_outpath(args.out, f"run_{m}.json"), mspec, metrics)
    if args.format == "csv":
        write_runs_csv(_outpath(args.out, "runs.csv"), rows)
    return 0


def _cmd_sweep(args) -> int:
    spec = _load_spec(args)
    if spec.sweep is None:
        raise ConfigError("config has no [sweep] section")
    rows = run_sweep(spec, jobs=args.jobs)
    path = _outpath(args.out, "sweep.csv")
    write_sweep_csv(path, rows)
    for r in rows:
        print(
            f"{r['axis']}={r['value']!s:>8} {r['method']:16s} "
            f"total={float(r['total_ns']) / 1000.0:10.2f}us"
        )
    print(f"wrote {path} ({len(rows)} rows)")
    return 0


_CODEC_GRANULARITIES = (64, 128, 256, 512, 1024)


def _codec_rows() -> List[dict]:
    rows = []
    for transport in ("dymultimem", "explicit"):
        for g in _CODEC_GRANULARITIES:
            for n in range(2, 33):
                rows.append(
                    {
                        "transport": transport,
                        "granularity_bytes": g,
                        "n_targets": n,
                        "request_efficiency": codec.request_payload_efficiency(
                            transport, n, g
                        ),
                        "combined_efficiency": codec.combined_payload_efficiency(
                            transport, n, g
                        ),
                    }
                )
    return rows


def _cmd_oracle(args) -> int:
    spec = _load_spec(args)
    n, G = spec.model.n_experts, spec.system.n_gpu
    rows = []
    for topk in args.topk:
        d = oracles.mean_distinct_gpus(n, G, topk)
        rows.append(
            {
                "n_experts": n,
                "n_gpu": G,
                "topk": topk,
                "p_touch": oracles.p_touch(n, n // G, topk),
                "mean_distinct_gpus": d,
                "mean_remote_gpus": oracles.mean_remote_gpus(n, G, topk),
                "mean_remote_experts": oracles.mean_remote_experts(n, G, topk),
                "redundancy": oracles.redundancy_fraction(d),
                "ideal_speedup": oracles.ideal_speedup(d),
                "nvls_useless_ratio": oracles.nvls_useless_ratio(n, G, topk),
            }
        )
    for r in rows:
        print(
            f"topk={r['topk']:3d} d={r['mean_distinct_gpus']:.4f} "
            f"redundancy={r['redundancy']:.4f} ideal={r['ideal_speedup']:.4f} "
            f"nvls_useless={r['nvls_useless_ratio']:.4f}"
        )
    if args.mc_samples:
        streams = RngStreams(spec.run.seed)
        est = oracles.mc_distinct_gpus(n, G, spec.model.topk, args.mc_samples, streams)
        print(
            f"mc d (topk={spec.model.topk}, {args.mc_samples} samples): "
            f"{est.mean:.4f} +- {est.sem:.4f}"
        )
    if args.out:
        write_sweep_csv(_outpath(args.out, "oracle.csv"), rows)
        write_sweep_csv(_outpath(args.out, "codec.csv"), _codec_rows())
        print(f"wrote {args.out}/oracle.csv and {args.out}/codec.csv")
    return 0


def _cmd_validate(args) -> int:
    with open(args.config) as fh:
        text = fh.read()
    spec = parse_config(text)
    if args.echo:
        sys.stdout.write(spec.to_text())
    print(f"ok: {args.config} (hash {spec.config_hash()})")
    return 0


def _cmd_presets(args) -> int:
    for name in list_presets():
        print(name)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="moeswitchsim",
        description="Flit-level switch-centric MoE dispatch/combine simulator",
    )
    sub = ap.add_subparsers(dest="cmd", required=True)

    def add_spec_args(p):
        p.add_argument("--preset", help="shipped preset name (see `presets`)")
        p.add_argument("--config", help="config file path")
        p.add_argument("--seed", type=int, default=None, help="override seed")
        p.add_argument("--out", default=None, help="output directory")

    p = sub.add_parser("run", help="execute one configuration")
    add_spec_args(p)
    p.add_argument(
        "--method",
        choices=list(METHODS) + ["all"],
        default=None,
        help="override the config's method, or 'all'",
    )
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.set_defaults(fn=_cmd_run)

    p = sub.add_parser("sweep", help="execute the config's sweep section")
    add_spec_args(p)
    p.add_argument("--jobs", type=int, default=1, help="parallel workers")
    p.set_defaults(fn=_cmd_sweep)

    p = sub.add_parser("oracle", help="analytic oracles and codec tables")
    add_spec_args(p)
    p.add_argument(
        "--topk", type=int, nargs="+", default=[8, 16, 32], help="topk values"
    )
    p.add_argument(
        "--mc-samples", type=int, default=0, help="Monte-Carlo cross-check samples"
    )
    p.set_defaults(fn=_cmd_oracle)

    p = sub.add_parser("validate", help="check a config file")
    p.add_argument("config")
    p.add_argument("--echo", action="store_true", help="print the canonical form")
    p.set_defaults(fn=_cmd_validate)

    p = sub.add_parser("presets", help="list shipped presets")
    p.set_defaults(fn=_cmd_presets)
    return ap


def main(argv: Optional[List[str]] = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
