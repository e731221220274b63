"""Run configuration: system/model/compute/workload dataclasses, presets, and
the flat sectioned key-value config format.

Grammar (one statement per line):

    # comment (also ';')        blank lines ignored
    [section]                   section in {model, system, compute, workload, run, sweep}
    key = value                 value: int | float | bool | name | [v1, v2, ...]

Unknown sections or keys are rejected with the offending line number. A list
value is comma-separated inside square brackets. `preset = <name>` inside
[model]/[system] loads the named preset before the remaining keys override
individual fields.
"""

from __future__ import annotations

import dataclasses
import hashlib
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

METHODS = (
    "deepep",
    "nvls_workaround",
    "explicit",
    "comet_overlap",
    "dysharp_basic",
    "dysharp_comet",
    "fusion_only",
    "dysharp_full",
)

# schedule / transport per method; the simulator keys off these
METHOD_TRANSPORT = {
    "deepep": "unicast",
    "nvls_workaround": "static",
    "explicit": "explicit",
    "comet_overlap": "unicast",
    "dysharp_basic": "dymultimem",
    "dysharp_comet": "dymultimem",
    "fusion_only": "unicast",
    "dysharp_full": "dymultimem",
}

METHOD_SCHEDULE = {
    "deepep": "serial",
    "nvls_workaround": "serial",
    "explicit": "fused",
    "comet_overlap": "overlap",
    "dysharp_basic": "serial",
    "dysharp_comet": "overlap",
    "fusion_only": "fused",
    "dysharp_full": "fused",
}

COMBINE_WINDOW_DEFAULT = 2 * 1024 * 1024

SWEEP_AXES = (
    "topk",
    "n_gpu",
    "seq_len",
    "std",
    "alpha",
    "tlb_entries",
    "reduction_buffer_bytes",
    "tile_tokens",
)


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SystemConfig:
    """Fabric and per-GPU microarchitecture parameters.

    One logical switch connects n_gpu GPUs; each GPU has one up and one down
    link of link_bw_gbps each. spray_ways is accepted for parity with
    multi-plane configs but is identity at this abstraction level (the planes
    are already collapsed into the logical switch).
    """

    name: str = "nvl32"
    n_gpu: int = 32
    link_bw_gbps: float = 450.0
    link_latency_ns: float = 250.0
    flit_bytes: int = 16
    switch_latency_ns: float = 50.0
    vc_count: int = 16
    vc_depth: int = 256
    reduction_buffer_bytes: int = 64 * 1024
    multimemq_entries: int = 32
    tlb_entries: int = 512
    tlb_miss_ns: float = 400.0
    hub_service_ns: float = 10.0
    target_fetch_shared_ns: float = 30.0
    target_fetch_global_ns: float = 400.0
    target_fetch_mode: str = "shared"
    granularity_bytes: int = 256
    ts_entries: int = 1024
    or_entries: int = 1024
    table_spill_ns: float = 400.0
    poll_ns: float = 100.0
    phase_sync_ns: float = 1000.0
    combine_window_bytes: int = 0  # 0 -> reduction_buffer_bytes
    spray_ways: int = 1
    max_events: int = 50_000_000

    def validate(self) -> None:
        if self.n_gpu < 1:
            raise ConfigError("n_gpu must be >= 1")
        if self.flit_bytes != 16:
            raise ConfigError("flit_bytes is fixed at 16")
        if not (64 <= self.granularity_bytes <= 1024):
            raise ConfigError("granularity_bytes must be in [64, 1024]")
        if self.granularity_bytes % self.flit_bytes:
            raise ConfigError("granularity_bytes must be a multiple of flit_bytes")
        if self.link_bw_gbps <= 0 or self.link_latency_ns < 0:
            raise ConfigError("link parameters must be positive")
        if self.reduction_buffer_bytes < 1024:
            raise ConfigError("reduction_buffer_bytes must be >= 1024")
        if self.multimemq_entries < 1:
            raise ConfigError("multimemq_entries must be >= 1")
        if self.tlb_entries < 1:
            raise ConfigError("tlb_entries must be >= 1")
        if self.target_fetch_mode not in ("shared", "global"):
            raise ConfigError("target_fetch_mode must be 'shared' or 'global'")
        if self.spray_ways < 1:
            raise ConfigError("spray_ways must be >= 1")

    @property
    def effective_combine_window(self) -> int:
        """Outstanding pulled-combine bytes per source GPU.

        This paces read requests in flight, not switch memory: reduction
        slots are held only from first partial to fold. The default keeps
        arrival skew small enough that slots almost never evict; a pure
        bandwidth benchmark can raise it to hide the full read round trip.
        """
        return self.combine_window_bytes or COMBINE_WINDOW_DEFAULT


@dataclass(frozen=True)
class ModelConfig:
    """MoE layer geometry. token_bytes is the wire size of one token vector."""

    name: str = "L"
    hidden: int = 7168
    moe_hidden: int = 2048
    n_experts: int = 256
    topk: int = 8
    seq_len: int = 8192
    dtype_bytes: int = 1

    def validate(self, n_gpu: int) -> None:
        if self.topk < 1 or self.topk > self.n_experts:
            raise ConfigError("topk must be in [1, n_experts]")
        if self.n_experts % n_gpu:
            raise ConfigError(
                f"n_experts ({self.n_experts}) must divide evenly over {n_gpu} GPUs"
            )
        if self.seq_len % n_gpu:
            raise ConfigError(
                f"seq_len ({self.seq_len}) must divide evenly over {n_gpu} GPUs"
            )
        if self.dtype_bytes < 1:
            raise ConfigError("dtype_bytes must be >= 1")

    @property
    def token_bytes(self) -> int:
        return self.hidden * self.dtype_bytes


@dataclass(frozen=True)
class ComputeConfig:
    """Analytic GEMM model: duration = 2*m_q*n*k / (peak * efficiency), with m
    quantized up to whole tile rows of tile_tokens.

    peak*efficiency is a calibrated effective throughput chosen so the unicast
    baseline's communication share on the large model lands near its measured
    value; it is not a hardware datasheet number. SM counts partition the
    fused pipeline: the dispatch/combine issue kernels hold small fixed
    groups, GEMMs share the remainder.
    """

    peak_tflops: float = 4000.0
    efficiency: float = 0.95
    tile_tokens: int = 128
    sm_total: int = 132
    dispatch_sms: int = 8
    combine_sms: int = 8
    explicit_comm_overhead: float = 0.05
    explicit_compute_tax: float = 0.15

    def validate(self) -> None:
        if self.peak_tflops <= 0 or not (0 < self.efficiency <= 1.0):
            raise ConfigError("peak_tflops must be > 0 and efficiency in (0, 1]")
        if self.tile_tokens < 8 or self.tile_tokens > 1024:
            raise ConfigError("tile_tokens must be in [8, 1024]")
        if self.dispatch_sms + self.combine_sms >= self.sm_total:
            raise ConfigError("dispatch_sms + combine_sms must leave SMs for GEMMs")

    def gemm_fraction(self, schedule: str) -> float:
        """Fraction of peak available to the GEMM server under a schedule."""
        if schedule == "serial":
            return 1.0
        comm = self.dispatch_sms if schedule == "overlap" else (
            self.dispatch_sms + self.combine_sms
        )
        return (self.sm_total - comm) / self.sm_total


@dataclass(frozen=True)
class DistConfig:
    """Expert-popularity distribution used to draw per-token routing."""

    kind: str = "uniform"
    std: float = 0.032
    alpha: float = 1.5

    def validate(self) -> None:
        if self.kind not in ("uniform", "normal", "powerlaw"):
            raise ConfigError(f"unknown distribution kind {self.kind!r}")
        if self.kind == "normal" and self.std < 0:
            raise ConfigError("std must be >= 0")
        if self.kind == "powerlaw" and not (0.0 <= self.alpha <= 4.0):
            raise ConfigError("alpha must be in [0, 4]")


@dataclass(frozen=True)
class RunConfig:
    method: str = "dysharp_full"
    seed: int = 1
    pure_comm: bool = False
    collect_util: bool = False
    checks: bool = True

    def validate(self) -> None:
        if self.method not in METHODS:
            raise ConfigError(
                f"unknown method {self.method!r}; valid: {', '.join(METHODS)}"
            )


@dataclass(frozen=True)
class SweepConfig:
    axis: str = "topk"
    values: Tuple = ()
    methods: Tuple[str, ...] = ("deepep", "dysharp_full")

    def validate(self) -> None:
        if self.axis not in SWEEP_AXES:
            raise ConfigError(f"unknown sweep axis {self.axis!r}; valid: {SWEEP_AXES}")
        if not self.values:
            raise ConfigError("sweep values must be non-empty")
        for m in self.methods:
            if m not in METHODS:
                raise ConfigError(f"unknown sweep method {m!r}")


@dataclass(frozen=True)
class ExperimentSpec:
    model: ModelConfig = field(default_factory=ModelConfig)
    system: SystemConfig = field(default_factory=SystemConfig)
    compute: ComputeConfig = field(default_factory=ComputeConfig)
    dist: DistConfig = field(default_factory=DistConfig)
    run: RunConfig = field(default_factory=RunConfig)
    sweep: Optional[SweepConfig] = None

    def validate(self) -> "ExperimentSpec":
        self.system.validate()
        self.model.validate(self.system.n_gpu)
        self.compute.validate()
        self.dist.validate()
        self.run.validate()
        if self.sweep is not None:
            self.sweep.validate()
        # a reduction accumulator holds one token vector; it must fit the buffer
        if self.model.token_bytes > self.system.reduction_buffer_bytes:
            raise ConfigError(
                f"token vector ({self.model.token_bytes} B) exceeds reduction "
                f"buffer capacity ({self.system.reduction_buffer_bytes} B)"
            )
        return self

    def to_text(self) -> str:
        """Canonical config echo; re-parsing it yields an identical spec."""
        out: List[str] = []
        for section, cfg in (
            ("model", self.model),
            ("system", self.system),
            ("compute", self.compute),
            ("workload", self.dist),
            ("run", self.run),
        ):
            out.append(f"[{section}]")
            for f in dataclasses.fields(cfg):
                out.append(f"{f.name} = {_fmt_value(getattr(cfg, f.name))}")
            out.append("")
        if self.sweep is not None:
            out.append("[sweep]")
            out.append(f"axis = {self.sweep.axis}")
            out.append(f"values = {_fmt_value(list(self.sweep.values))}")
            out.append(f"methods = {_fmt_value(list(self.sweep.methods))}")
            out.append("")
        return "\n".join(out)

    def config_hash(self) -> str:
        return hashlib.sha256(self.to_text().encode()).hexdigest()[:12]

    def with_axis(self, axis: str, value) -> "ExperimentSpec":
        """Return a copy with one sweep axis set to a value."""
        if axis == "topk":
            return replace(self, model=replace(self.model, topk=int(value)))
        if axis == "seq_len":
            return replace(self, model=replace(self.model, seq_len=int(value)))
        if axis == "n_gpu":
            return replace(self, system=replace(self.system, n_gpu=int(value)))
        if axis == "std":
            return replace(self, dist=replace(self.dist, kind="normal", std=float(value)))
        if axis == "alpha":
            return replace(
                self, dist=replace(self.dist, kind="powerlaw", alpha=float(value))
            )
        if axis == "tlb_entries":
            return replace(self, system=replace(self.system, tlb_entries=int(value)))
        if axis == "reduction_buffer_bytes":
            return replace(
                self, system=replace(self.system, reduction_buffer_bytes=int(value))
            )
        if axis == "tile_tokens":
            return replace(self, compute=replace(self.compute, tile_tokens=int(value)))
        raise ConfigError(f"unknown sweep axis {axis!r}")


MODEL_PRESETS: Dict[str, ModelConfig] = {
    "S": ModelConfig("S", hidden=2048, moe_hidden=512, n_experts=64, topk=8, seq_len=2048),
    "M": ModelConfig("M", hidden=4096, moe_hidden=1024, n_experts=128, topk=8, seq_len=4096),
    "L": ModelConfig("L", hidden=7168, moe_hidden=2048, n_experts=256, topk=8, seq_len=8192),
    "gpt-oss-120b": ModelConfig(
        "gpt-oss-120b", hidden=2880, moe_hidden=2880, n_experts=64, topk=4, seq_len=4096
    ),
    "qwen3-235b": ModelConfig(
        "qwen3-235b", hidden=4096, moe_hidden=1536, n_experts=128, topk=8, seq_len=4096
    ),
}

SYSTEM_PRESETS: Dict[str, SystemConfig] = {
    "nvl32": SystemConfig(name="nvl32", n_gpu=32),
    "dgx-h100": SystemConfig(name="dgx-h100", n_gpu=8),
    "nvl64": SystemConfig(name="nvl64", n_gpu=64),
}

_SECTION_TYPES = {
    "model": ModelConfig,
    "system": SystemConfig,
    "compute": ComputeConfig,
    "workload": DistConfig,
    "run": RunConfig,
    "sweep": SweepConfig,
}

_SECTION_PRESETS = {"model": MODEL_PRESETS, "system": SYSTEM_PRESETS}


def _fmt_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_fmt_value(x) for x in v) + "]"
    return str(v)


def _parse_scalar(tok: str, lineno: int):
    t = tok.strip()
    if t.lower() in ("true", "false"):
        return t.lower() == "true"
    try:
        return int(t)
    except ValueError:
        pass
    try:
        return float(t)
    except ValueError:
        pass
    if not t:
        raise ConfigError(f"line {lineno}: empty value")
    return t


def _parse_value(raw: str, lineno: int):
    raw = raw.strip()
    if raw.startswith("["):
        if not raw.endswith("]"):
            raise ConfigError(f"line {lineno}: unterminated list")
        inner = raw[1:-1].strip()
        if not inner:
            return []
        return [_parse_scalar(p, lineno) for p in inner.split(",")]
    return _parse_scalar(raw, lineno)


def _coerce(value, ftype, key: str, lineno: int):
    if ftype is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"line {lineno}: {key} expects true/false")
        return value
    if ftype is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"line {lineno}: {key} expects an integer")
        return value
    if ftype is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"line {lineno}: {key} expects a number")
        return float(value)
    if ftype is str:
        if not isinstance(value, str):
            raise ConfigError(f"line {lineno}: {key} expects a name")
        return value
    return value


def parse_config(text: str) -> ExperimentSpec:
    """Parse config text into a validated ExperimentSpec.

    Unknown sections/keys raise ConfigError with the line number.
    """
    section: Optional[str] = None
    overrides: Dict[str, Dict[str, object]] = {s: {} for s in _SECTION_TYPES}
    presets: Dict[str, str] = {}
    seen_sweep = False

    for lineno, rawline in enumerate(text.splitlines(), start=1):
        line = rawline.split("#", 1)[0].split(";", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigError(f"line {lineno}: malformed section header")
            name = line[1:-1].strip()
            if name not in _SECTION_TYPES:
                raise ConfigError(
                    f"line {lineno}: unknown section [{name}]; "
                    f"valid: {', '.join(sorted(_SECTION_TYPES))}"
                )
            section = name
            seen_sweep = seen_sweep or name == "sweep"
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        if section is None:
            raise ConfigError(f"line {lineno}: key outside any [section]")
        key, _, rawval = line.partition("=")
        key = key.strip()
        value = _parse_value(rawval, lineno)

        if key == "preset":
            table = _SECTION_PRESETS.get(section)
            if table is None:
                raise ConfigError(f"line {lineno}: [{section}] has no presets")
            if value not in table:
                raise ConfigError(
                    f"line {lineno}: unknown {section} preset {value!r}; "
                    f"valid: {', '.join(sorted(table))}"
                )
            presets[section] = value
            continue

        cls = _SECTION_TYPES[section]
        fields = {f.name: f for f in dataclasses.fields(cls)}
        if key not in fields:
            raise ConfigError(
                f"line {lineno}: unknown key {key!r} in [{section}]; "
                f"valid: {', '.join(sorted(fields))}"
            )
        ftype = fields[key].type
        # dataclass field types arrive as strings under future-annotations
        typemap = {"int": int, "float": float, "bool": bool, "str": str}
        py_t = typemap.get(ftype if isinstance(ftype, str) else getattr(ftype, "__name__", ""))
        if py_t is not None:
            value = _coerce(value, py_t, key, lineno)
        elif key in ("values", "methods"):
            if not isinstance(value, list):
                raise ConfigError(f"line {lineno}: {key} expects a list")
            value = tuple(str(v) if key == "methods" else v for v in value)
        overrides[section][key] = value

    def build(section: str):
        base = None
        if section in presets:
            base = _SECTION_PRESETS[section][presets[section]]
        if base is None:
            base = _SECTION_TYPES[section]()
        ov = overrides[section]
        return replace(base, **ov) if ov else base

    sweep = None
    if seen_sweep or overrides["sweep"]:
        sweep = build("sweep")

    spec = ExperimentSpec(
        model=build("model"),
        system=build("system"),
        compute=build("compute"),
        dist=build("workload"),
        run=build("run"),
        sweep=sweep,
    )
    return spec.validate()
