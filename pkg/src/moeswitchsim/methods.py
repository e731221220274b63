"""High-level entry points: single runs, method comparisons, sweeps."""

from __future__ import annotations

import dataclasses
from concurrent.futures import ProcessPoolExecutor
from typing import Dict, List, Optional, Sequence

from . import workload
from .config import METHODS, ExperimentSpec, parse_config
from .engine import RngStreams
from .metrics import RunMetrics
from .sim import Run


def with_method(spec: ExperimentSpec, method: str, **run_kw) -> ExperimentSpec:
    run = dataclasses.replace(spec.run, method=method, **run_kw)
    return dataclasses.replace(spec, run=run)


def run_method(spec: ExperimentSpec, routing=None) -> RunMetrics:
    return Run(spec, routing).execute()


def run_all_methods(
    spec: ExperimentSpec, methods: Optional[Sequence[str]] = None
) -> Dict[str, RunMetrics]:
    """Run several methods over the identical routing draw.

    Sharing the draw makes cross-method counters directly comparable: same
    tokens, same expert choices, same checksum words.
    """
    methods = list(methods) if methods is not None else list(METHODS)
    streams = RngStreams(spec.run.seed)
    routing = workload.build_routing(spec.model, spec.system, spec.dist, streams)
    out: Dict[str, RunMetrics] = {}
    for m in methods:
        out[m] = run_method(with_method(spec, m), routing)
    return out


def _sweep_tasks(base: ExperimentSpec) -> List[ExperimentSpec]:
    sw = base.sweep
    tasks = []
    for v in sw.values:
        varied = base.with_axis(sw.axis, v)
        for m in sw.methods:
            tasks.append(with_method(varied, m))
    return tasks


def _run_task(spec_text: str) -> RunMetrics:
    # specs travel as canonical text so pool workers rebuild them exactly
    return run_method(parse_config(spec_text))


def run_sweep(base: ExperimentSpec, jobs: int = 1) -> List[Dict[str, object]]:
    """Execute the spec's sweep; one row per (axis value, method).

    Results are ordered by task index regardless of jobs, so parallel output
    is byte-identical to serial.
    """
    base.sweep.validate()
    tasks = _sweep_tasks(base)
    texts = [t.to_text() for t in tasks]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_task, texts))
    else:
        results = [_run_task(s) for s in texts]
    rows: List[Dict[str, object]] = []
    sw = base.sweep
    i = 0
    for v in sw.values:
        for m in sw.methods:
            r = results[i]
            i += 1
            rows.append(
                {
                    "axis": sw.axis,
                    "value": v,
                    "method": m,
                    "total_ns": r.total_ns,
                    "dispatch_done_ns": r.dispatch_done_ns,
                    "up_data_bytes": r.up_data_bytes,
                    "down_data_bytes": r.down_data_bytes,
                    "tlb_hit_rate": r.tlb_hit_rate,
                    "eviction_rate": r.eviction_rate,
                    "wire_efficiency": r.wire_efficiency,
                    "comm_share": r.comm_share,
                    "purecomm_efficiency": r.purecomm_efficiency,
                    "events": r.events,
                    "config_hash": r.config_hash,
                }
            )
    return rows
