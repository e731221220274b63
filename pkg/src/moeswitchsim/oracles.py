"""Closed-form expectations for uniform top-k routing, plus Monte-Carlo
estimators used to cross-check them and the simulator.

With N experts spread m per GPU over G = N/m GPUs and each token drawing k
distinct experts uniformly, the probability that a given GPU holds at least
one of the k is

    p = 1 - C(N-m, k) / C(N, k)

Every aggregate below follows from p by linearity: expected distinct GPUs
touched per token is G*p, expected remote GPUs is (G-1)*p, expected remote
experts is k*(N-m)/N. The traffic redundancy fraction and the ideal dedup
speedup are expressed in units of token-vector crossings of the switch, with
d = G*p distinct destinations: a unicast baseline moves 2d up and 2d down per
token over both phases, dedup collapses the dispatch up-crossing and the
combine down-crossing to 1 each.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from . import kernels
from .engine import RngStreams


def p_touch(n_experts: int, experts_per_gpu: int, topk: int) -> float:
    """Probability one specific GPU is touched by a token's top-k draw."""
    n, m, k = n_experts, experts_per_gpu, topk
    if k > n:
        raise ValueError("topk cannot exceed n_experts")
    if k > n - m:
        return 1.0
    return 1.0 - math.comb(n - m, k) / math.comb(n, k)


def mean_distinct_gpus(n_experts: int, n_gpu: int, topk: int) -> float:
    """Expected distinct destination GPUs per token, local included."""
    m = n_experts // n_gpu
    return n_gpu * p_touch(n_experts, m, topk)


def mean_remote_gpus(n_experts: int, n_gpu: int, topk: int) -> float:
    m = n_experts // n_gpu
    return (n_gpu - 1) * p_touch(n_experts, m, topk)


def mean_remote_experts(n_experts: int, n_gpu: int, topk: int) -> float:
    m = n_experts // n_gpu
    return topk * (n_experts - m) / n_experts


def redundancy_fraction(d: float) -> float:
    """Removable share of baseline switch crossings: 2(d-1) of 4d."""
    if d < 1.0:
        raise ValueError("d must be >= 1")
    return 2.0 * (d - 1.0) / (4.0 * d)


def ideal_speedup(d: float) -> float:
    """Busiest-direction crossings 2d baseline vs 1+d deduplicated."""
    if d < 1.0:
        raise ValueError("d must be >= 1")
    return 2.0 * d / (1.0 + d)


def nvls_useless_ratio(n_experts: int, n_gpu: int, topk: int) -> float:
    """Static-multicast overhead: useless replica deliveries per useful one.

    A static group spans all G-1 remote GPUs; a delivery to a GPU holding
    none of the token's experts is useless. Expected useless/useful =
    (1-p)/p, independent of G cancelling. Returns a plain ratio (1.0 =
    100%). Degenerates to (N-m)/m at topk=1 and to 0 when every GPU is
    always touched (k > N-m).
    """
    m = n_experts // n_gpu
    p = p_touch(n_experts, m, topk)
    return (1.0 - p) / p


@dataclass
class McEstimate:
    mean: float
    sem: float

    def within(self, expected: float, n_sigma: float = 3.0) -> bool:
        return abs(self.mean - expected) <= n_sigma * max(self.sem, 1e-300)


def _draw_topk(n_experts: int, topk: int, n_samples: int, rng) -> np.ndarray:
    keys = rng.random((n_samples, n_experts))
    return kernels.topk_select(keys, topk)


def mc_distinct_gpus(
    n_experts: int,
    n_gpu: int,
    topk: int,
    n_samples: int,
    streams: RngStreams,
) -> McEstimate:
    m = n_experts // n_gpu
    rng = streams.stream("oracle_mc")
    experts = _draw_topk(n_experts, topk, n_samples, rng)
    g = np.sort(experts // m, axis=1)
    distinct = 1 + np.count_nonzero(np.diff(g, axis=1), axis=1)
    return McEstimate(float(distinct.mean()), float(distinct.std(ddof=1) / math.sqrt(n_samples)))


def mc_remote_stats(
    n_experts: int,
    n_gpu: int,
    topk: int,
    n_samples: int,
    streams: RngStreams,
) -> Tuple[McEstimate, McEstimate]:
    """(remote GPUs per token, useless/useful static-multicast ratio)."""
    m = n_experts // n_gpu
    rng = streams.stream("oracle_mc")
    experts = _draw_topk(n_experts, topk, n_samples, rng)
    src = rng.integers(0, n_gpu, size=n_samples)
    g = experts // m
    gs = np.sort(g, axis=1)
    distinct = 1 + np.count_nonzero(np.diff(gs, axis=1), axis=1)
    touched_src = np.any(g == src[:, None], axis=1)
    remote = distinct - touched_src.astype(np.int64)
    useless = (n_gpu - 1) - remote
    rem_est = McEstimate(
        float(remote.mean()), float(remote.std(ddof=1) / math.sqrt(n_samples))
    )
    ratio = useless.sum() / max(remote.sum(), 1)
    # delta-method error bar for the ratio of means
    rm, um = remote.mean(), useless.mean()
    cov = np.cov(useless.astype(float), remote.astype(float))
    var = (
        cov[0, 0] / rm**2
        + um**2 * cov[1, 1] / rm**4
        - 2 * um * cov[0, 1] / rm**3
    ) / n_samples
    ratio_est = McEstimate(float(ratio), float(math.sqrt(max(var, 0.0))))
    return rem_est, ratio_est
