"""Multicast membership, per-member fluid delivery and playback buffers."""

from __future__ import annotations

import math
from collections import deque
from collections.abc import Mapping
from dataclasses import dataclass, field
from typing import NamedTuple

from mcastsim.allocator.predict import predict_client_goodput
from mcastsim.content import VideoAsset
from mcastsim.errors import MembershipError, StateError
from mcastsim.topology import MulticastTree, Topology, shortest_path_tree

STARTUP = "startup"
PLAYING = "playing"
REBUFFERING = "rebuffering"
DONE = "done"

EPS = 1e-9


@dataclass
class ClientState:
    client_id: str
    node: str
    group_id: str
    asset: VideoAsset
    # highest tier the device can render; None means no limit
    max_tier: int | None = None
    startup_threshold_s: float = 1.0
    buffer_cap_s: float = 10.0
    window: int = 5

    buffer_s: float = 0.0
    phase: str = STARTUP
    startup_delay_s: float | None = None
    rebuffer_s: float = 0.0
    rebuffer_events: int = 0
    played_s: float = 0.0
    downloaded_s: float = 0.0
    delivered_total_s: float = 0.0
    age_s: float = 0.0
    last_quality: float = 0.0
    quality_trace: list[float] = field(default_factory=list)
    throughput_samples: deque = field(default=None)
    loss_samples: deque = field(default=None)

    def __post_init__(self):
        if self.throughput_samples is None:
            self.throughput_samples = deque(maxlen=self.window)
        if self.loss_samples is None:
            self.loss_samples = deque(maxlen=self.window)
        self._seg_acc = [0.0] * self.asset.n_segments
        self._next_seg = 0
        self._obs = [0.0, 0.0, 0]

    def observe(self, delivery: Delivery) -> None:
        """Accumulate one tick of delivery into the current feedback interval."""
        self._obs[0] += delivery.available_bps
        self._obs[1] += delivery.loss
        self._obs[2] += 1

    def close_interval(self) -> None:
        """Turn the accumulated interval into one goodput and one loss sample."""
        avail, loss, n = self._obs
        if n:
            self.throughput_samples.append(avail / n)
            self.loss_samples.append(loss / n)
        self._obs = [0.0, 0.0, 0]

    def perceived_tier(self, tier: int) -> int:
        return tier if self.max_tier is None else min(tier, self.max_tier)

    def perceived_quality(self, tier: int) -> float:
        return self.asset.ladder.quality(self.perceived_tier(tier))


@dataclass
class GroupState:
    group_id: str
    asset: VideoAsset
    # client id -> attachment node
    members: dict[str, str] = field(default_factory=dict)
    tree: MulticastTree | None = None
    current_tier: int = 0
    fec_fraction: float = 0.0

    @property
    def active(self) -> bool:
        return bool(self.members)


@dataclass(frozen=True)
class FeedbackReport:
    client_id: str
    buffer_s: float
    goodput_bps: float
    loss: float
    quality: float
    cold_start: bool
    predicted_goodput_bps: float
    max_tier: int | None = None
    phase: str = PLAYING


class Delivery(NamedTuple):
    content_s: float
    loss: float
    delivered_bps: float
    available_bps: float


def _retree(group: GroupState, topo: Topology) -> None:
    if group.members:
        group.tree = shortest_path_tree(topo, set(group.members.values()), group.group_id)
    else:
        group.tree = None


def join(group: GroupState, client: ClientState, topo: Topology) -> GroupState:
    if client.client_id in group.members:
        raise MembershipError(f"client {client.client_id!r} already in group {group.group_id!r}")
    group.members[client.client_id] = client.node
    try:
        _retree(group, topo)
    except Exception:
        del group.members[client.client_id]
        raise
    client.group_id = group.group_id
    client.phase = STARTUP
    return group


def leave(group: GroupState, client_id: str, topo: Topology) -> GroupState:
    if client_id not in group.members:
        raise MembershipError(f"client {client_id!r} is not a member of group {group.group_id!r}")
    del group.members[client_id]
    _retree(group, topo)
    return group


def deliver_tick(
    group: GroupState,
    topo: Topology,
    capacities: Mapping[str, float],
    loads: Mapping[str, float],
    dt: float,
) -> dict[str, Delivery]:
    """One tick of fluid delivery to every member of an active group.

    On each link the group keeps ``capacity / load`` of its stream when the link
    is oversubscribed. Residual link losses compound along the member's path;
    FEC redundancy absorbs loss up to ``fec_fraction`` and the excess reduces
    goodput one-for-one. ``available_bps`` is the rate the member's path could
    sustain for this group given the other groups' load.
    """
    if not group.active or group.tree is None:
        return {}
    bitrate = group.asset.ladder.bitrate(group.current_tier)
    fec = group.fec_fraction
    rate = bitrate * (1.0 + fec)
    by_node: dict[str, Delivery] = {}
    for node, path in group.tree.paths.items():
        share = 1.0
        headroom = math.inf
        keep = 1.0
        for lid in path:
            cap = capacities[lid]
            load = loads.get(lid, 0.0)
            if load > cap:
                share = min(share, cap / load)
            headroom = min(headroom, cap - load + rate)
            keep *= 1.0 - topo.links[lid].base_loss
        path_loss = 1.0 - keep
        loss = 1.0 - share * keep
        residual = max(0.0, loss - fec)
        avail = max(0.0, headroom) / (1.0 + fec) * (1.0 - max(0.0, path_loss - fec))
        by_node[node] = Delivery(
            content_s=(1.0 - residual) * dt,
            loss=loss,
            delivered_bps=bitrate * (1.0 - residual),
            available_bps=avail,
        )
    return {cid: by_node[node] for cid, node in group.members.items()}


def _record_download(client: ClientState, amount: float, quality: float) -> None:
    asset = client.asset
    pos = client.downloaded_s
    left = amount
    seg = min(int(pos / asset.segment_s + EPS), asset.n_segments - 1)
    while left > EPS and seg < asset.n_segments:
        seg_end = min((seg + 1) * asset.segment_s, asset.duration_s)
        take = min(left, seg_end - pos)
        if take > 0:
            client._seg_acc[seg] += take * quality
            pos += take
            left -= take
        seg += 1
    client.downloaded_s += amount


def _advance_trace(client: ClientState) -> None:
    asset = client.asset
    while client._next_seg < asset.n_segments:
        k = client._next_seg
        seg_end = min((k + 1) * asset.segment_s, asset.duration_s)
        if client.played_s < seg_end - 1e-7:
            break
        client.quality_trace.append(client._seg_acc[k] / asset.segment_length(k))
        client._next_seg += 1
    if client.played_s >= asset.duration_s - 1e-7:
        client.phase = DONE
        client.quality_trace.extend(
            client._seg_acc[k] / asset.segment_length(k)
            for k in range(client._next_seg, asset.n_segments)
        )
        client._next_seg = asset.n_segments


def _play(client: ClientState, span: float, incoming: float) -> None:
    """Play ``span`` seconds while ``incoming`` (already in the buffer) arrives uniformly."""
    if span <= EPS:
        return
    complete = client.downloaded_s >= client.asset.duration_s - EPS
    if client.buffer_s >= span - EPS:
        client.played_s += span
        client.buffer_s = max(0.0, client.buffer_s - span)
    else:
        # buffer (which includes `incoming`) runs dry before the span ends
        rate = incoming / span
        before = client.buffer_s - incoming
        tau = min(span, before / (1.0 - rate)) if rate < 1.0 else span
        client.played_s += tau
        stall = span - tau
        client.buffer_s = max(0.0, stall * rate)
        if not complete and stall > EPS:
            client.phase = REBUFFERING
            client.rebuffer_s += stall
            client.rebuffer_events += 1
    _advance_trace(client)


def step_playback(client: ClientState, delivered_s: float, dt: float, quality: float = 1.0) -> ClientState:
    """Advance one client by ``dt`` seconds after ``delivered_s`` content seconds arrived.

    ``quality`` is the perceived quality of the arriving content.
    """
    if not dt > 0:
        raise StateError(f"dt must be > 0, got {dt}")
    if client.phase == DONE:
        return client
    asset = client.asset
    room = min(client.buffer_cap_s - client.buffer_s, asset.duration_s - client.downloaded_s)
    got = min(max(delivered_s, 0.0), max(room, 0.0))
    client.delivered_total_s += max(delivered_s, 0.0)
    if got > 0:
        _record_download(client, got, quality)
        client.last_quality = quality

    if client.phase == PLAYING:
        client.buffer_s += got
        _play(client, dt, got)
    else:
        threshold = min(client.startup_threshold_s, asset.duration_s - client.played_s)
        if client.buffer_s + got >= threshold - EPS:
            frac = 0.0 if got <= 0 else min(1.0, max(0.0, (threshold - client.buffer_s) / got))
            if client.phase == STARTUP:
                client.startup_delay_s = client.age_s + frac * dt
            else:
                client.rebuffer_s += frac * dt
            client.buffer_s += got
            client.phase = PLAYING
            _play(client, (1.0 - frac) * dt, 0.0)
        else:
            client.buffer_s += got
            if client.phase == REBUFFERING:
                client.rebuffer_s += dt
    client.age_s += dt
    return client


def feedback(client: ClientState) -> FeedbackReport:
    samples = list(client.throughput_samples)
    losses = list(client.loss_samples)
    return FeedbackReport(
        client_id=client.client_id,
        buffer_s=client.buffer_s,
        goodput_bps=sum(samples) / len(samples) if samples else 0.0,
        loss=sum(losses) / len(losses) if losses else 0.0,
        quality=client.last_quality,
        cold_start=not samples,
        predicted_goodput_bps=predict_client_goodput(samples, client.window),
        max_tier=client.max_tier,
        phase=client.phase,
    )
