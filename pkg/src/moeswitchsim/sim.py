"""The unified dispatch/compute/combine flow engine.

Every method runs the same machinery; what differs is the transport (how
stores address their targets), the schedule (how communication and GEMMs
share the GPU), and the combine direction (switch-reduced pull, expert push,
or static reduce-scatter):

  deepep           unicast   serial   push
  nvls_workaround  static    serial   reduce-scatter
  explicit         explicit  fused    pull
  comet_overlap    unicast   overlap  push (gated on dispatch completion)
  dysharp_basic    dym       serial   pull
  dysharp_comet    dym       overlap  pull (gated on dispatch completion)
  fusion_only      unicast   fused    push
  dysharp_full     dym       fused    pull

Dispatch streams token bursts up into the switch, which trims replicas per
destination. Hubs translate dynamic-multicast rows through the address-list
TLB, fill tiles, and feed the GEMM server; completed output tiles notify
token sources, whose outstanding-row table gates the combine. Pulled combines
open per-source reduction slots in the switch on first partial; pushes and
reduce-scatter partials travel as ordinary bursts. Every token carries 64-bit
checksum words end to end and the final fold is compared exactly against the
routing's reference value, every method, every run.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from . import codec, kernels, workload
from .config import (
    METHOD_SCHEDULE,
    METHOD_TRANSPORT,
    ExperimentSpec,
)
from .engine import ProtocolError, RngStreams, Simulator, ns_to_ps
from .fusion import ORTracker, TileTracker, expert_token_counts
from .gpu import CreditGate, GemmServer, Hub, MultimemQ
from .switchfab import MASK64, SwitchReduction
from .topology import Burst, Fabric, aggregate_shapes

INJECT_WINDOW = 32  # outstanding unicast/push bursts per GPU


@dataclass
class TokenState:
    src: int
    experts: Tuple[int, ...]
    local_experts: Tuple[int, ...]
    remote_experts: Tuple[int, ...]
    remote_gpus: Tuple[int, ...]
    experts_by_gpu: Dict[int, Tuple[int, ...]]
    expected_partials: int = 0
    folded_partials: int = 0
    remote_acc: int = 0
    local_acc: int = 0
    local_got: int = 0
    or_ready: bool = False
    window_held: int = 0
    issued: bool = False
    completed: bool = False
    completed_ps: int = 0


class Run:
    """One method execution over one routing draw."""

    def __init__(self, spec: ExperimentSpec, routing: Optional[workload.Routing] = None):
        spec.validate()
        self.spec = spec
        self.method = spec.run.method
        self.transport = METHOD_TRANSPORT[self.method]
        self.schedule = METHOD_SCHEDULE[self.method]
        self.combine_kind = (
            "pull"
            if self.transport in ("dymultimem", "explicit")
            else ("rs" if self.transport == "static" else "push")
        )
        self.use_tlb = self.transport == "dymultimem"
        self.pure_comm = spec.run.pure_comm
        self.checks = spec.run.checks

        self.streams = RngStreams(spec.run.seed)
        self.routing = routing or workload.build_routing(
            spec.model, spec.system, spec.dist, self.streams
        )
        self.G = spec.system.n_gpu
        self.seq = spec.model.seq_len
        self.topk = spec.model.topk
        self.token_bytes = spec.model.token_bytes

        self.sim = Simulator(max_events=spec.system.max_events)
        tx_scale = (
            1.0 + spec.compute.explicit_comm_overhead if self.method == "explicit" else 1.0
        )
        self.fabric = Fabric(
            self.sim,
            spec.system,
            self._switch_arrive,
            self._gpu_arrive,
            collect_util=spec.run.collect_util,
            tx_scale=tx_scale,
        )
        self.fabric.depart_hooks.append(self._on_depart)

        self._build_checksums()
        self._build_tokens()
        self._build_shapes()
        self._build_gpus()

        self.redux = SwitchReduction(spec.system.reduction_buffer_bytes, self.token_bytes)

        # global progress counters
        self.rows_total = self.seq * self.topk
        self.rows_delivered = 0
        self.down_deliveries = 0
        self.down_expected = self._expected_down_deliveries()
        self.dispatch_done = False
        self.dispatch_done_ps = 0
        self.gate_open = self.schedule != "overlap"
        self.g2_total = sum(
            sum(trk.n_tiles.values()) for trk in self.trackers
        )
        self.g2_done_count = 0
        self.compute_done_ps = 0
        self.tokens_done = 0
        self.t_end_ps = 0
        self.useful_ag = 0
        self.useless_ag = 0
        self.kind_counts: Dict[str, codec.FlitCounts] = {}

        s = self.sim
        s.register("kick", self._kick)
        s.register("hubrows", self._hub_rows)
        s.register("hubread", self._hub_read_done)
        s.register("phase_compute", self._phase_compute)
        s.register("phase_combine", self._phase_combine)
        s.register("gate_open", self._gate_open)
        s.register("g1_push", self._g1_push_ev)
        s.register("combine_tick", self._combine_tick)

    # ---------------- construction ----------------

    def _build_checksums(self) -> None:
        r = self.routing
        toks = np.repeat(np.arange(self.seq, dtype=np.int64), self.topk)
        exps = r.experts.astype(np.int64).ravel()
        self.part_words = kernels.mix64(toks, exps, workload.SALT_COMBINE).reshape(
            self.seq, self.topk
        )
        self.ref_folds = [
            int(v)
            for v in (
                self.part_words.astype(np.uint64).sum(axis=1, dtype=np.uint64)
            )
        ]

    def _build_tokens(self) -> None:
        r = self.routing
        ep = r.experts_per_gpu
        self.tokens: List[TokenState] = []
        for t in range(self.seq):
            src = r.src_gpu(t)
            experts = tuple(int(e) for e in r.experts[t])
            by_gpu: Dict[int, List[int]] = {}
            for e in experts:
                by_gpu.setdefault(e // ep, []).append(e)
            local = tuple(by_gpu.get(src, ()))
            remote_gpus = tuple(sorted(g for g in by_gpu if g != src))
            remote = tuple(e for g in remote_gpus for e in by_gpu[g])
            st = TokenState(
                src=src,
                experts=experts,
                local_experts=local,
                remote_experts=remote,
                remote_gpus=remote_gpus,
                experts_by_gpu={g: tuple(v) for g, v in by_gpu.items()},
            )
            st.expected_partials = (
                (self.G - 1) if self.combine_kind == "rs" else len(remote)
            )
            self.tokens.append(st)

    def _agg(self, per_frag_fn, *args) -> codec.PacketShape:
        sizes = codec.fragment_sizes(self.token_bytes, self.spec.system.granularity_bytes)
        full = per_frag_fn(*args, sizes[0])
        tail = per_frag_fn(*args, sizes[-1]) if sizes[-1] != sizes[0] else None
        n_full = len(sizes) - (1 if tail is not None else 0)
        return aggregate_shapes(full, n_full, tail)

    def _build_shapes(self) -> None:
        tr = self.transport
        sizes = codec.fragment_sizes(self.token_bytes, self.spec.system.granularity_bytes)
        self.n_frags = len(sizes)
        if tr in ("dymultimem", "explicit", "static"):
            self.disp_shape = self._agg(lambda p: codec.st_request(tr, self.topk, p))
        self.uni_shape = self._agg(lambda p: codec.st_request("unicast", 1, p))
        self.replica_shape = self._agg(codec.replica_down)
        self._explicit_replica: Dict[int, codec.PacketShape] = {}
        self.partial_shape = self._agg(codec.partial_up)
        self.resp_shape = self._agg(lambda p: codec.reduce_response(tr, self.topk, p))
        self.ldr_shape = codec.ldr_request(tr, self.topk) if self.combine_kind == "pull" else None
        self.read_shape = codec.PacketShape(header=1)
        self.meta_shape = codec.metadata_packet(self.routing.experts_per_gpu)

    def _explicit_replica_shape(self, n_exps: int) -> codec.PacketShape:
        shape = self._explicit_replica.get(n_exps)
        if shape is None:
            shape = self._agg(lambda p: codec.st_request("explicit", max(n_exps, 1), p))
            self._explicit_replica[n_exps] = shape
        return shape

    def _build_gpus(self) -> None:
        spec = self.spec
        sysc = spec.system
        frac = spec.compute.gemm_fraction(self.schedule)
        rate = spec.compute.peak_tflops * spec.compute.efficiency * frac
        flop_scale = (
            1.0 + spec.compute.explicit_compute_tax if self.method == "explicit" else 1.0
        )
        h, mh, ts = spec.model.hidden, spec.model.moe_hidden, spec.compute.tile_tokens
        self.gemm_flops = 2.0 * ts * h * mh * flop_scale  # per GEMM per tile
        counts = expert_token_counts(self.routing.experts, spec.model.n_experts)
        ep = self.routing.experts_per_gpu

        self.hubs = [
            Hub(sysc.tlb_entries, ns_to_ps(sysc.tlb_miss_ns), trace=self.checks)
            for _ in range(self.G)
        ]
        self.gemms = [GemmServer(self.sim, g, rate) for g in range(self.G)]
        self.mqs = [
            MultimemQ(sysc.multimemq_entries, spec.compute.dispatch_sms)
            for _ in range(self.G)
        ]
        self.inject_disp = [CreditGate(INJECT_WINDOW, "inject") for _ in range(self.G)]
        self.inject_part = [CreditGate(INJECT_WINDOW, "part") for _ in range(self.G)]
        self.window_cap = sysc.effective_combine_window
        self.window_used = [0] * self.G
        self.window_stall_count = 0
        self.trackers = [
            TileTracker(
                list(range(g * ep, (g + 1) * ep)),
                counts,
                spec.compute.tile_tokens,
                sysc.ts_entries,
            )
            for g in range(self.G)
        ]
        self.ors = [ORTracker(self.topk, sysc.or_entries) for _ in range(self.G)]

        self.disp_items: List[List] = [[] for _ in range(self.G)]
        self.part_items: List[List] = [[] for _ in range(self.G)]
        self.combine_q: List[List[int]] = [[] for _ in range(self.G)]
        self.push_pending: List[List] = [[] for _ in range(self.G)]
        self.ready_tiles: List[List] = [[] for _ in range(self.G)]
        self.rs_acc: List[Dict[int, int]] = [dict() for _ in range(self.G)]
        self.pending_eligible: List[int] = []
        self._disp_waiting = [False] * self.G
        self._part_waiting = [False] * self.G
        self._comb_pending = [False] * self.G
        self._next_ldr_ps = [0] * self.G
        self._push_open = [self.schedule == "fused"] * self.G
        # readiness-gate audit trail, keyed (gpu, expert, tile) / token
        self.audit_tile_ready: Dict = {}
        self.audit_g1_push: Dict = {}
        self.audit_or_full: Dict[int, int] = {}
        self.audit_ldr_issue: Dict[int, int] = {}
        self.first_combine_action_ps: Optional[int] = None
        # reads paced at the rate the fabric can serve one token's partials,
        # so arrival skew at the reduction buffer stays within a few slots
        self.ldr_pace_ps = max(
            1,
            round(
                self.routing.mean_remote_experts()
                * self.partial_shape.total
                * self.fabric.flit_ps
            ),
        )

        tpg = self.routing.tokens_per_gpu
        for g in range(self.G):
            toks = range(g * tpg, (g + 1) * tpg)
            if self.transport == "unicast":
                for t in toks:
                    for e in self.tokens[t].remote_experts:
                        self.disp_items[g].append((t, e))
            else:
                self.disp_items[g].extend(toks)

    def _expected_down_deliveries(self) -> int:
        if self.transport == "static":
            return self.seq * (self.G - 1)
        if self.transport == "unicast":
            return sum(len(tok.remote_experts) for tok in self.tokens)
        return sum(len(tok.remote_gpus) for tok in self.tokens)

    # ---------------- accounting ----------------

    def count(self, kind: str, shape: codec.PacketShape) -> None:
        fc = self.kind_counts.get(kind)
        if fc is None:
            fc = codec.FlitCounts()
            self.kind_counts[kind] = fc
        fc.add(shape)

    # ---------------- issue loops ----------------

    def execute(self):
        for g in range(self.G):
            self.sim.schedule_at(0, "kick", g)
        total_ps = self.sim.run_until_idle()
        self.t_end_ps = total_ps
        self._final_checks()
        from .metrics import collect_metrics

        return collect_metrics(self)

    def _kick(self, ev) -> None:
        g = ev.payload
        if self.method == "deepep":
            for dst in range(self.G):
                if dst != g:
                    b = Burst("meta", g, dst, self.meta_shape, {"t": -1})
                    self.count("meta", self.meta_shape)
                    self.fabric.send_up(g, b)
        # local rows never cross the switch; available from the start
        tpg = self.routing.tokens_per_gpu
        for t in range(g * tpg, (g + 1) * tpg):
            tok = self.tokens[t]
            if tok.local_experts:
                self._deliver_rows(g, t, tok.local_experts)
            if self.pure_comm:
                self._fold_local_all(t)
        if self.pure_comm:
            self._seed_pure_comm_combine(g)
        self._try_issue_dispatch(g)

    def _fold_local_all(self, t: int) -> None:
        tok = self.tokens[t]
        for e in tok.local_experts:
            kidx = tok.experts.index(e)
            tok.local_acc = (tok.local_acc + int(self.part_words[t, kidx])) & MASK64
            tok.local_got += 1

    def _seed_pure_comm_combine(self, g: int) -> None:
        tpg = self.routing.tokens_per_gpu
        if self.combine_kind == "pull":
            for t in range(g * tpg, (g + 1) * tpg):
                if self.tokens[t].expected_partials:
                    self.combine_q[g].append(t)
                else:
                    self._check_complete(t)
            self._try_issue_combine(g)
        elif self.combine_kind == "push":
            ep = self.routing.experts_per_gpu
            for t in range(self.seq):
                tok = self.tokens[t]
                if tok.src == g:
                    continue
                for e in tok.experts_by_gpu.get(g, ()):
                    kidx = tok.experts.index(e)
                    self.part_items[g].append((t, int(self.part_words[t, kidx])))
            self._try_issue_partials(g)
        else:  # rs
            for t in range(self.seq):
                tok = self.tokens[t]
                if tok.src == g:
                    continue
                acc = 0
                for e in tok.experts_by_gpu.get(g, ()):
                    kidx = tok.experts.index(e)
                    acc = (acc + int(self.part_words[t, kidx])) & MASK64
                self.part_items[g].append((t, acc))
            self._try_issue_partials(g)

    def _try_issue_dispatch(self, g: int) -> None:
        if self._disp_waiting[g]:
            return
        items = self.disp_items[g]
        multimem = self.transport in ("dymultimem", "static")
        gate = self.mqs[g] if multimem else self.inject_disp[g]
        need = self.n_frags if multimem else 1
        while items:
            if not gate.try_acquire(need, self._disp_granted(g, gate, need)):
                self._disp_waiting[g] = True
                return
            self._send_dispatch(g, items.pop(0), gate, need)

    def _disp_granted(self, g: int, gate: CreditGate, need: int):
        # the gate hands over the credits before calling back; send without
        # re-acquiring, then continue the loop
        def cb() -> None:
            self._disp_waiting[g] = False
            self._send_dispatch(g, self.disp_items[g].pop(0), gate, need)
            self._try_issue_dispatch(g)

        return cb

    def _send_dispatch(self, g: int, item, gate: CreditGate, need: int) -> None:
        if self.transport == "unicast":
            t, e = item
            dst = e // self.routing.experts_per_gpu
            shape = self.uni_shape
            b = Burst("uni", g, dst, shape, {"t": t, "e": e, "_rel": (gate, need)})
            self.count("uni", shape)
        else:
            t = item
            shape = self.disp_shape
            b = Burst("disp", g, -1, shape, {"t": t, "_rel": (gate, need)})
            self.count("disp", shape)
        self.fabric.send_up(g, b)

    def _try_issue_partials(self, g: int) -> None:
        if self._part_waiting[g]:
            return
        if not self._push_open[g] and self.combine_kind == "push" and not self.pure_comm:
            return
        items = self.part_items[g]
        gate = self.inject_part[g]
        while items:
            if not gate.try_acquire(1, self._part_granted(g, gate)):
                self._part_waiting[g] = True
                return
            self._send_partial(g, items.pop(0), gate)

    def _part_granted(self, g: int, gate: CreditGate):
        def cb() -> None:
            self._part_waiting[g] = False
            self._send_partial(g, self.part_items[g].pop(0), gate)
            self._try_issue_partials(g)

        return cb

    def _send_partial(self, g: int, item, gate: CreditGate) -> None:
        t, value = item
        shape = self.partial_shape
        kind = "part" if self.combine_kind in ("pull", "rs") else "pushpart"
        if kind == "pushpart" and self.first_combine_action_ps is None:
            self.first_combine_action_ps = self.sim.now_ps
        b = Burst(kind, g, self.tokens[t].src, shape, {"t": t, "v": value, "_rel": (gate, 1)})
        self.count(kind, shape)
        self.fabric.send_up(g, b)

    def _try_issue_combine(self, g: int) -> None:
        """Arm the paced ldr clock for this source if it can make progress."""
        if self._comb_pending[g] or not self.combine_q[g]:
            return
        if self.window_used[g] + self.token_bytes > self.window_cap:
            self.window_stall_count += 1
            return  # re-armed when a completion releases window bytes
        self._comb_pending[g] = True
        at = max(self.sim.now_ps, self._next_ldr_ps[g])
        self.sim.schedule_at(at, "combine_tick", g)

    def _combine_tick(self, ev) -> None:
        g = ev.payload
        self._comb_pending[g] = False
        q = self.combine_q[g]
        if not q or self.window_used[g] + self.token_bytes > self.window_cap:
            return
        t = q.pop(0)
        tok = self.tokens[t]
        self.window_used[g] += self.token_bytes
        tok.window_held = self.token_bytes
        tok.issued = True
        if self.checks:
            self.audit_ldr_issue[t] = self.sim.now_ps
        if self.first_combine_action_ps is None:
            self.first_combine_action_ps = self.sim.now_ps
        b = Burst("ldr", g, -1, self.ldr_shape, {"t": t})
        self.count("ldr", self.ldr_shape)
        self.fabric.send_up(g, b)
        self._next_ldr_ps[g] = self.sim.now_ps + self.ldr_pace_ps
        self._try_issue_combine(g)

    def _on_depart(self, link, burst: Burst) -> None:
        rel = burst.payload.pop("_rel", None)
        if rel is not None:
            gate, n = rel
            gate.release(n)

    # ---------------- switch side ----------------

    def _switch_arrive(self, burst: Burst) -> None:
        kind = burst.kind
        if kind == "disp":
            t = burst.payload["t"]
            tok = self.tokens[t]
            targets = (
                [g for g in range(self.G) if g != tok.src]
                if self.transport == "static"
                else list(tok.remote_gpus)
            )
            for rg in targets:
                exps = tok.experts_by_gpu.get(rg, ())
                if self.transport == "explicit":
                    shape = self._explicit_replica_shape(len(exps))
                else:
                    shape = self.replica_shape
                d = Burst("replica", tok.src, rg, shape, {"t": t, "exps": exps})
                self.count("replica", shape)
                self.fabric.send_down(rg, d)
        elif kind == "uni":
            d = Burst(
                "replica",
                burst.src,
                burst.dst,
                self.replica_shape,
                {"t": burst.payload["t"], "exps": (burst.payload["e"],)},
            )
            self.count("replica", self.replica_shape)
            self.fabric.send_down(burst.dst, d)
        elif kind == "ldr":
            t = burst.payload["t"]
            tok = self.tokens[t]
            for rg in tok.remote_gpus:
                d = Burst(
                    "read", tok.src, rg, self.read_shape,
                    {"t": t, "exps": tok.experts_by_gpu[rg]},
                )
                self.count("read", self.read_shape)
                self.fabric.send_down(rg, d)
        elif kind == "part":
            t = burst.payload["t"]
            tok = self.tokens[t]
            for act in self.redux.deliver(
                tok.src, t, burst.payload["v"], tok.expected_partials
            ):
                if act.kind in ("complete", "evict_flush"):
                    d = Burst(
                        "resp", -1, tok.src, self.resp_shape,
                        {"t": act.token, "v": act.value, "n": act.folded},
                    )
                    self.count("resp", self.resp_shape)
                    self.fabric.send_down(self.tokens[act.token].src, d)
                else:  # forward
                    d = Burst(
                        "fwd", -1, tok.src, self.partial_shape,
                        {"t": act.token, "v": act.value, "n": 1},
                    )
                    self.count("fwd", self.partial_shape)
                    self.fabric.send_down(self.tokens[act.token].src, d)
        elif kind in ("pushpart", "notif", "meta"):
            self.fabric.send_down(burst.dst, burst)
        else:
            raise ProtocolError(f"switch cannot route burst kind {kind!r}")

    # ---------------- GPU side ----------------

    def _gpu_arrive(self, burst: Burst) -> None:
        kind = burst.kind
        g = burst.dst
        sysc = self.spec.system
        if kind == "replica":
            t, exps = burst.payload["t"], burst.payload["exps"]
            delay = ns_to_ps(sysc.hub_service_ns)
            if self.use_tlb:
                for e in exps:
                    delay += self.hubs[g].translate_run(e, t, self.n_frags)
            if self.transport == "static":
                if exps:
                    self.useful_ag += 1
                else:
                    self.useless_ag += 1
            self.sim.schedule_in(delay, "hubrows", (g, t, exps))
        elif kind == "read":
            t, exps = burst.payload["t"], burst.payload["exps"]
            delay = ns_to_ps(sysc.hub_service_ns)
            if self.use_tlb:
                for e in exps:
                    delay += self.hubs[g].translate_run(e, t, self.n_frags)
            self.sim.schedule_in(delay, "hubread", (g, t, exps))
        elif kind in ("resp", "fwd"):
            t = burst.payload["t"]
            tok = self.tokens[t]
            tok.remote_acc = (tok.remote_acc + burst.payload["v"]) & MASK64
            tok.folded_partials += burst.payload["n"]
            if tok.folded_partials > tok.expected_partials:
                raise ProtocolError(f"token {t}: fold overrun")
            self._check_complete(t)
        elif kind == "pushpart":
            t = burst.payload["t"]
            tok = self.tokens[t]
            tok.remote_acc = (tok.remote_acc + burst.payload["v"]) & MASK64
            tok.folded_partials += 1
            self._check_complete(t)
        elif kind == "notif":
            for t in burst.payload["ts"]:
                if self.ors[g].inc(t):
                    self._token_eligible(t)
        elif kind == "meta":
            pass
        else:
            raise ProtocolError(f"gpu cannot take burst kind {kind!r}")

    def _hub_rows(self, ev) -> None:
        g, t, exps = ev.payload
        self.down_deliveries += 1
        if exps:
            self._deliver_rows(g, t, exps)
        else:
            self._check_dispatch_done()

    def _hub_read_done(self, ev) -> None:
        g, t, exps = ev.payload
        tok = self.tokens[t]
        for e in exps:
            kidx = tok.experts.index(e)
            self.part_items[g].append((t, int(self.part_words[t, kidx])))
        self._try_issue_partials(g)

    def _deliver_rows(self, g: int, t: int, exps) -> None:
        hub = self.hubs[g]
        trk = self.trackers[g]
        spill_ps = ns_to_ps(self.spec.system.table_spill_ns)
        for e in exps:
            lidx = hub.al.assign(e, t)
            hub.rows_written += 1
            self.rows_delivered += 1
            if self.pure_comm:
                continue
            before = trk.spills
            tile = trk.row_delivered(e, lidx, t)
            if tile is not None:
                if self.checks:
                    self.audit_tile_ready[(g, tile.expert, tile.tile)] = self.sim.now_ps
                if self.schedule == "serial":
                    self.ready_tiles[g].append(tile)
                else:
                    delay = spill_ps if trk.spills > before else 0
                    if delay:
                        self.sim.schedule_in(delay, "g1_push", (g, tile))
                    else:
                        self._push_g1(g, tile)
        self._check_dispatch_done()

    def _g1_push_ev(self, ev) -> None:
        g, tile = ev.payload
        self._push_g1(g, tile)

    def _check_dispatch_done(self) -> None:
        if self.dispatch_done:
            return
        if (
            self.rows_delivered == self.rows_total
            and self.down_deliveries == self.down_expected
        ):
            self.dispatch_done = True
            self.dispatch_done_ps = self.sim.now_ps
            sync = ns_to_ps(self.spec.system.phase_sync_ns)
            if self.pure_comm:
                return
            if self.schedule == "serial":
                self.sim.schedule_in(sync, "phase_compute", None)
            elif self.schedule == "overlap":
                self.sim.schedule_in(sync, "gate_open", None)

    # ---------------- compute ----------------

    def _phase_compute(self, ev) -> None:
        for g in range(self.G):
            for tile in self.ready_tiles[g]:
                self._push_g1(g, tile)
            self.ready_tiles[g] = []

    def _push_g1(self, g: int, tile) -> None:
        if self.checks:
            self.audit_g1_push[(g, tile.expert, tile.tile)] = self.sim.now_ps
        self.gemms[g].push(
            self.gemm_flops, lambda tile=tile, g=g: self._push_g2(g, tile)
        )

    def _push_g2(self, g: int, tile) -> None:
        self.gemms[g].push(
            self.gemm_flops, lambda tile=tile, g=g: self._g2_done(g, tile), prio=True
        )

    def _g2_done(self, g: int, tile) -> None:
        self.g2_done_count += 1
        by_src: Dict[int, List[int]] = {}
        for t in tile.tokens:
            tok = self.tokens[t]
            kidx = tok.experts.index(tile.expert)
            word = int(self.part_words[t, kidx])
            if tok.src == g:
                tok.local_acc = (tok.local_acc + word) & MASK64
                tok.local_got += 1
                if self.combine_kind == "pull" and self.schedule != "serial":
                    if self.ors[g].inc(t):
                        self._token_eligible(t)
                else:
                    self._check_complete(t)
            else:
                if self.combine_kind == "pull" and self.schedule != "serial":
                    by_src.setdefault(tok.src, []).append(t)
                elif self.combine_kind == "push":
                    self.part_items[g].append((t, word))
                elif self.combine_kind == "rs":
                    acc = self.rs_acc[g]
                    acc[t] = (acc.get(t, 0) + word) & MASK64
        for src, ts in by_src.items():
            shape = codec.notification(len(ts))
            b = Burst("notif", g, src, shape, {"ts": ts})
            self.count("notif", shape)
            self.fabric.send_up(g, b)
        if self.combine_kind == "push" and self.schedule == "fused":
            self._try_issue_partials(g)
        if self.g2_done_count == self.g2_total:
            self.compute_done_ps = self.sim.now_ps
            if self.schedule == "serial":
                sync = ns_to_ps(self.spec.system.phase_sync_ns)
                self.sim.schedule_in(sync, "phase_combine", None)

    def _gate_open(self, ev) -> None:
        """Overlap schedules release their combine traffic here."""
        self.gate_open = True
        for t in self.pending_eligible:
            self.combine_q[self.tokens[t].src].append(t)
        self.pending_eligible = []
        for g in range(self.G):
            self._push_open[g] = True
            if self.combine_kind == "push":
                self._try_issue_partials(g)
            else:
                self._try_issue_combine(g)

    def _phase_combine(self, ev) -> None:
        if self.combine_kind == "pull":
            for g in range(self.G):
                tpg = self.routing.tokens_per_gpu
                for t in range(g * tpg, (g + 1) * tpg):
                    if self.tokens[t].expected_partials:
                        self.combine_q[g].append(t)
                    else:
                        self._check_complete(t)
                self._try_issue_combine(g)
        elif self.combine_kind == "push":
            for g in range(self.G):
                self._push_open[g] = True
                self._try_issue_partials(g)
        else:  # rs: every GPU pushes one partial per foreign token, zeros included
            for g in range(self.G):
                self._push_open[g] = True
                for t in range(self.seq):
                    tok = self.tokens[t]
                    if tok.src == g:
                        continue
                    self.part_items[g].append((t, self.rs_acc[g].get(t, 0)))
                self._try_issue_partials(g)

    # ---------------- combine completion ----------------

    def _token_eligible(self, t: int) -> None:
        tok = self.tokens[t]
        tok.or_ready = True
        if self.checks:
            self.audit_or_full[t] = self.sim.now_ps
        if tok.expected_partials == 0:
            self._check_complete(t)
            return
        if not self.gate_open:
            self.pending_eligible.append(t)
            return
        g = tok.src
        self.combine_q[g].append(t)
        self._try_issue_combine(g)

    def _check_complete(self, t: int) -> None:
        tok = self.tokens[t]
        if tok.completed:
            return
        if tok.folded_partials != tok.expected_partials:
            return
        if tok.local_got != len(tok.local_experts):
            return
        if self.combine_kind == "pull" and not self.pure_comm:
            if self.schedule != "serial" and not tok.or_ready:
                return
        tok.completed = True
        tok.completed_ps = self.sim.now_ps
        total = (tok.remote_acc + tok.local_acc) & MASK64
        if total != self.ref_folds[t]:
            raise ProtocolError(
                f"token {t}: combine fold {total:#x} != reference {self.ref_folds[t]:#x}"
            )
        if tok.window_held:
            held, tok.window_held = tok.window_held, 0
            self.window_used[tok.src] -= held
            self._try_issue_combine(tok.src)
        self.tokens_done += 1

    # ---------------- verification ----------------

    def _final_checks(self) -> None:
        if self.tokens_done != self.seq:
            raise ProtocolError(
                f"run ended with {self.seq - self.tokens_done} incomplete tokens"
            )
        if not self.pure_comm and self.g2_done_count != self.g2_total:
            raise ProtocolError("not all tiles were computed")
        self.redux.assert_drained()
        if self.checks:
            for g in range(self.G):
                self.hubs[g].al.check_bijective()
            if not self.pure_comm:
                for trk in self.trackers:
                    trk.assert_drained()
                for orr in self.ors:
                    orr.assert_drained()


def run_spec(spec: ExperimentSpec, routing: Optional[workload.Routing] = None):
    return Run(spec, routing).execute()
