"""Synthetic MoE routing workloads.

Per-token expert choices are drawn without replacement from a popularity
distribution using Gumbel-perturbed log-probabilities: taking the top-k of
log(p_e) + G_te is distributionally identical to sequential weighted sampling
without replacement, and it vectorizes. Three popularity families are
supported: uniform, truncated-normal per-expert popularity (spread set by
std), and a shuffled power law over popularity ranks (skew set by alpha).

Every token also carries deterministic 64-bit checksum material so a
simulated Combine can be checked for exactness: the dispatch payload word
depends only on the token (multicast replicas must be identical), the combine
partial depends on (token, expert), and the reference result is the wraparound
sum of the token's topk partials.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from . import kernels
from .config import DistConfig, ModelConfig, SystemConfig
from .engine import RngStreams

SALT_DISPATCH = 0xD15BA7C4
SALT_COMBINE = 0xC0B1AE77

PROB_FLOOR = 1e-12


@dataclass
class Routing:
    """One layer's routing decision for every token, plus checksum material."""

    experts: np.ndarray  # (seq, topk) int32, gate-weight descending
    weights: np.ndarray  # (seq, topk) float64, renormalized gate weights
    probs: np.ndarray  # (n_experts,) popularity used to draw
    seq_len: int
    n_experts: int
    topk: int
    n_gpu: int

    @property
    def tokens_per_gpu(self) -> int:
        return self.seq_len // self.n_gpu

    @property
    def experts_per_gpu(self) -> int:
        return self.n_experts // self.n_gpu

    def src_gpu(self, token: int) -> int:
        return token // self.tokens_per_gpu

    def gpu_of_expert(self, expert: int) -> int:
        return expert // self.experts_per_gpu

    def token_range(self, gpu: int) -> range:
        t = self.tokens_per_gpu
        return range(gpu * t, (gpu + 1) * t)

    def target_gpus(self, token: int) -> np.ndarray:
        """Distinct GPUs hosting this token's experts, ascending."""
        return np.unique(self.experts[token] // self.experts_per_gpu)

    def dispatch_word(self, token: int) -> int:
        return int(
            kernels.mix64(
                np.array([token]), np.array([0]), SALT_DISPATCH
            )[0]
        )

    def partial_word(self, token: int, expert: int) -> int:
        return int(
            kernels.mix64(
                np.array([token]), np.array([expert]), SALT_COMBINE
            )[0]
        )

    def reference_combine(self, token: int) -> int:
        """Exact expected Combine fold for one token."""
        toks = np.full(self.topk, token, dtype=np.int64)
        parts = kernels.mix64(toks, self.experts[token].astype(np.int64), SALT_COMBINE)
        return kernels.fold_u64(parts)

    def expert_counts(self) -> np.ndarray:
        return np.bincount(self.experts.ravel(), minlength=self.n_experts)

    def mean_distinct_gpus(self) -> float:
        """Mean distinct destination GPUs per token, local included."""
        g = self.experts // self.experts_per_gpu
        return float(np.mean([len(np.unique(row)) for row in g]))

    def mean_remote_gpus(self) -> float:
        ep = self.experts_per_gpu
        tpg = self.tokens_per_gpu
        total = 0
        for t in range(self.seq_len):
            src = t // tpg
            total += len(set(int(e) // ep for e in self.experts[t]) - {src})
        return total / self.seq_len

    def mean_remote_experts(self) -> float:
        ep = self.experts_per_gpu
        src = (np.arange(self.seq_len) // self.tokens_per_gpu)[:, None]
        return float(np.mean(np.sum(self.experts // ep != src, axis=1)))


def popularity(dist: DistConfig, n_experts: int, streams: RngStreams) -> np.ndarray:
    """Per-expert popularity vector, strictly positive, summing to 1."""
    if dist.kind == "uniform":
        p = np.full(n_experts, 1.0 / n_experts)
    elif dist.kind == "normal":
        rng = streams.stream("dist_normal")
        p = rng.normal(1.0 / n_experts, dist.std / n_experts, size=n_experts)
        p = np.maximum(p, PROB_FLOOR)
    else:  # powerlaw over shuffled ranks
        ranks = np.arange(1, n_experts + 1, dtype=np.float64)
        vals = ranks ** (-dist.alpha)
        perm = streams.stream("powerlaw_shuffle").permutation(n_experts)
        p = np.empty(n_experts)
        p[perm] = vals
    return p / p.sum()


def build_routing(
    model: ModelConfig,
    system: SystemConfig,
    dist: DistConfig,
    streams: RngStreams,
) -> Routing:
    seq, n, k = model.seq_len, model.n_experts, model.topk
    p = popularity(dist, n, streams)
    rng = streams.stream("route_gumbel")
    u = rng.random((seq, n))
    u = np.clip(u, 1e-300, 1.0 - 1e-16)
    keys = np.log(p)[None, :] - np.log(-np.log(u))
    experts = kernels.topk_select(keys, k)
    w = p[experts]
    weights = w / w.sum(axis=1, keepdims=True)
    return Routing(
        experts=experts,
        weights=weights,
        probs=p,
        seq_len=seq,
        n_experts=n,
        topk=k,
        n_gpu=system.n_gpu,
    )


def export_routing(r: Routing) -> str:
    """Columnar text: token, expert_1..k, weight_1..k."""
    buf = io.StringIO()
    cols = (
        ["token"]
        + [f"expert_{i + 1}" for i in range(r.topk)]
        + [f"weight_{i + 1}" for i in range(r.topk)]
    )
    buf.write(" ".join(cols) + "\n")
    for t in range(r.seq_len):
        parts: List[str] = [str(t)]
        parts += [str(int(e)) for e in r.experts[t]]
        parts += [format(float(w), ".17g") for w in r.weights[t]]
        buf.write(" ".join(parts) + "\n")
    return buf.getvalue()


def import_routing(text: str, n_experts: int, n_gpu: int) -> Routing:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    header = lines[0].split()
    if header[0] != "token":
        raise ValueError("routing table must start with a 'token' column")
    k = sum(1 for c in header if c.startswith("expert_"))
    if k == 0 or len(header) != 1 + 2 * k:
        raise ValueError("routing table header must list expert_i and weight_i columns")
    rows = lines[1:]
    seq = len(rows)
    experts = np.zeros((seq, k), dtype=np.int32)
    weights = np.zeros((seq, k), dtype=np.float64)
    for i, row in enumerate(rows):
        f = row.split()
        if len(f) != 1 + 2 * k:
            raise ValueError(f"routing row {i}: expected {1 + 2 * k} fields")
        if int(f[0]) != i:
            raise ValueError(f"routing row {i}: tokens must be dense and ordered")
        experts[i] = [int(x) for x in f[1 : 1 + k]]
        weights[i] = [float(x) for x in f[1 + k :]]
    if experts.min() < 0 or experts.max() >= n_experts:
        raise ValueError("expert id out of range")
    p = np.full(n_experts, 1.0 / n_experts)
    return Routing(
        experts=experts,
        weights=weights,
        probs=p,
        seq_len=seq,
        n_experts=n_experts,
        topk=k,
        n_gpu=n_gpu,
    )
