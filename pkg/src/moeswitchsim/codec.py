"""Wire formats: per-packet flit layouts for every transport and the payload
efficiency arithmetic derived from them.

All packets are built from 16-byte flits in six categories. Layout rules:

  data          ceil(payload / 16)
  byte_enable   ceil(payload / 128), one enable bit per payload byte
  header        1 for header-addressed formats; for explicit multi-address
                packets the first address flit doubles as the header, so an
                explicit request with t targets spends exactly t address flits
                (category: 1 header + (t-1) target_ext)
  target_ext    dynamic-multicast target extension, 8 target ids per flit:
                ceil(t / 8); explicit extra address flits also land here
  metadata      notification / bookkeeping words, 4 bytes each
  ack           single-flit write acknowledgements

Store requests carry payload up; reduce responses carry the folded payload
down and mirror their transport's addressing cost (the dynamic-multicast
response repeats the target extension so intermediate hops can trim, the
explicit response needs one control flit plus one return address). Load-reduce
requests carry no payload. Payload efficiency counts data flits over total
flits of payload-bearing packets only; pure-control packets (load-reduce
requests, acks) are accounted in traffic but not in the efficiency metric.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Tuple

FLIT_BYTES = 16
BE_BYTES_PER_FLIT = 128  # 16 bytes * 8 enable bits per byte
TARGETS_PER_EXT_FLIT = 8
METADATA_WORD_BYTES = 4

TRANSPORTS = ("dymultimem", "explicit", "unicast", "static")

CATEGORIES = ("header", "target_ext", "byte_enable", "data", "metadata", "ack")


@dataclass(frozen=True)
class PacketShape:
    """Flit counts of one packet, by category."""

    header: int = 0
    target_ext: int = 0
    byte_enable: int = 0
    data: int = 0
    metadata: int = 0
    ack: int = 0

    @property
    def total(self) -> int:
        return (
            self.header
            + self.target_ext
            + self.byte_enable
            + self.data
            + self.metadata
            + self.ack
        )

    @property
    def bytes(self) -> int:
        return self.total * FLIT_BYTES

    def efficiency(self) -> float:
        return self.data / self.total if self.total else 0.0


@dataclass
class FlitCounts:
    """Mutable per-category flit totals, used by link accounting."""

    header: int = 0
    target_ext: int = 0
    byte_enable: int = 0
    data: int = 0
    metadata: int = 0
    ack: int = 0

    def add(self, shape: PacketShape, times: int = 1) -> None:
        self.header += shape.header * times
        self.target_ext += shape.target_ext * times
        self.byte_enable += shape.byte_enable * times
        self.data += shape.data * times
        self.metadata += shape.metadata * times
        self.ack += shape.ack * times

    def merge(self, other: "FlitCounts") -> None:
        self.header += other.header
        self.target_ext += other.target_ext
        self.byte_enable += other.byte_enable
        self.data += other.data
        self.metadata += other.metadata
        self.ack += other.ack

    @property
    def total(self) -> int:
        return (
            self.header
            + self.target_ext
            + self.byte_enable
            + self.data
            + self.metadata
            + self.ack
        )

    @property
    def data_bytes(self) -> int:
        return self.data * FLIT_BYTES

    def as_dict(self) -> dict:
        return {c: getattr(self, c) for c in CATEGORIES}


def data_flits(payload_bytes: int) -> int:
    return -(-payload_bytes // FLIT_BYTES) if payload_bytes > 0 else 0


def be_flits(payload_bytes: int) -> int:
    return -(-payload_bytes // BE_BYTES_PER_FLIT) if payload_bytes > 0 else 0


def ext_flits(n_targets: int) -> int:
    return -(-n_targets // TARGETS_PER_EXT_FLIT)


def fragment_sizes(total_bytes: int, granularity: int) -> Tuple[int, ...]:
    """Split a token vector into store granules; last one may be short."""
    if total_bytes <= 0:
        return ()
    full, rem = divmod(total_bytes, granularity)
    sizes = [granularity] * full
    if rem:
        sizes.append(rem)
    return tuple(sizes)


def _check_transport(transport: str) -> None:
    if transport not in TRANSPORTS:
        raise ValueError(f"unknown transport {transport!r}; valid: {TRANSPORTS}")


def st_request(transport: str, n_targets: int, payload_bytes: int) -> PacketShape:
    """Multicast (or unicast) store carrying one payload granule up."""
    _check_transport(transport)
    d, be = data_flits(payload_bytes), be_flits(payload_bytes)
    if transport == "dymultimem":
        return PacketShape(header=1, target_ext=ext_flits(n_targets), byte_enable=be, data=d)
    if transport in ("explicit", "unicast"):
        t = 1 if transport == "unicast" else n_targets
        if t < 1:
            raise ValueError("explicit store needs at least one target")
        return PacketShape(header=1, target_ext=t - 1, byte_enable=be, data=d)
    # static multicast: the group id fits in the header
    return PacketShape(header=1, byte_enable=be, data=d)


def st_ack() -> PacketShape:
    return PacketShape(ack=1)


def replica_down(payload_bytes: int) -> PacketShape:
    """Per-port trimmed replica the switch forwards down: header-addressed."""
    d, be = data_flits(payload_bytes), be_flits(payload_bytes)
    return PacketShape(header=1, byte_enable=be, data=d)


def ldr_request(transport: str, n_targets: int) -> PacketShape:
    """Load-reduce gather request; no payload."""
    _check_transport(transport)
    if transport == "dymultimem":
        return PacketShape(header=1, target_ext=ext_flits(n_targets))
    if transport in ("explicit", "unicast"):
        t = 1 if transport == "unicast" else n_targets
        return PacketShape(header=1, target_ext=t - 1)
    return PacketShape(header=1)


def partial_up(payload_bytes: int) -> PacketShape:
    """One expert-side partial travelling up into the switch reduction."""
    d, be = data_flits(payload_bytes), be_flits(payload_bytes)
    return PacketShape(header=1, byte_enable=be, data=d)


def reduce_response(transport: str, n_targets: int, payload_bytes: int) -> PacketShape:
    """Folded result returned down to the requester."""
    _check_transport(transport)
    d, be = data_flits(payload_bytes), be_flits(payload_bytes)
    if transport == "dymultimem":
        return PacketShape(header=1, target_ext=ext_flits(n_targets), byte_enable=be, data=d)
    if transport in ("explicit", "unicast"):
        # one control flit plus one return-address flit
        return PacketShape(header=1, target_ext=1, byte_enable=be, data=d)
    return PacketShape(header=1, byte_enable=be, data=d)


def notification(n_entries: int) -> PacketShape:
    """Completion notification listing n_entries 4-byte record ids."""
    words_bytes = n_entries * METADATA_WORD_BYTES
    return PacketShape(header=1, metadata=-(-words_bytes // FLIT_BYTES))


def metadata_packet(n_words: int) -> PacketShape:
    """Generic counter/layout exchange packet of n_words 4-byte words."""
    words_bytes = n_words * METADATA_WORD_BYTES
    return PacketShape(header=1, metadata=-(-words_bytes // FLIT_BYTES))


def request_payload_efficiency(
    transport: str, n_targets: int, payload_bytes: int
) -> float:
    """Payload efficiency of the dispatch store request alone."""
    return st_request(transport, n_targets, payload_bytes).efficiency()


def combined_payload_efficiency(
    transport: str, n_targets: int, payload_bytes: int
) -> float:
    """Payload efficiency over the payload-bearing pair: store request up plus
    reduce response down."""
    req = st_request(transport, n_targets, payload_bytes)
    rsp = reduce_response(transport, n_targets, payload_bytes)
    return (req.data + rsp.data) / (req.total + rsp.total)
