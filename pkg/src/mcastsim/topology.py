"""Network graph, two-state capacity modulation and multicast delivery trees."""

from __future__ import annotations

import heapq
import random
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field

from mcastsim.errors import ConfigError, RoutingError, StateError


@dataclass(frozen=True)
class Variability:
    """Gilbert-style capacity modulation: one good/bad state per link, stepped per tick."""

    good: float = 1.0
    bad: float = 0.5
    p_good_to_bad: float = 0.0
    p_bad_to_good: float = 1.0

    def __post_init__(self):
        if not (0.0 < self.bad <= self.good <= 1.0):
            raise ConfigError(
                f"variability multipliers need 0 < bad <= good <= 1, got good={self.good} bad={self.bad}"
            )
        for name in ("p_good_to_bad", "p_bad_to_good"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ConfigError(f"variability.{name} must lie in [0, 1], got {p}")


@dataclass(frozen=True)
class Link:
    id: str
    src: str
    dst: str
    capacity_bps: float
    latency_ms: float = 0.0
    base_loss: float = 0.0
    variability: Variability | None = None

    def __post_init__(self):
        if not self.capacity_bps > 0:
            raise ConfigError(f"link {self.id}: capacity_bps must be > 0, got {self.capacity_bps}")
        if self.latency_ms < 0:
            raise ConfigError(f"link {self.id}: latency_ms must be >= 0, got {self.latency_ms}")
        if not 0.0 <= self.base_loss < 1.0:
            raise ConfigError(f"link {self.id}: base_loss must lie in [0, 1), got {self.base_loss}")
        if self.src == self.dst:
            raise ConfigError(f"link {self.id}: self-loop at {self.src}")


@dataclass
class Topology:
    nodes: tuple[str, ...]
    links: dict[str, Link]
    server_node: str
    # link id -> True while the link sits in its bad state
    bad_state: dict[str, bool] = field(default_factory=dict)

    def __post_init__(self):
        self._out: dict[str, list[Link]] = {n: [] for n in self.nodes}
        for link in self.links.values():
            self._out[link.src].append(link)
        for out in self._out.values():
            out.sort(key=lambda l: (l.dst, l.id))

    def out_links(self, node: str) -> list[Link]:
        return self._out[node]

    def reachable(self) -> set[str]:
        seen = {self.server_node}
        stack = [self.server_node]
        while stack:
            for link in self._out[stack.pop()]:
                if link.dst not in seen:
                    seen.add(link.dst)
                    stack.append(link.dst)
        return seen

    def reset_capacity_state(self) -> None:
        self.bad_state = {lid: False for lid, l in self.links.items() if l.variability is not None}


@dataclass(frozen=True)
class MulticastTree:
    """Source-rooted delivery tree; ``paths`` maps each member node to its link ids."""

    group_id: str
    links: frozenset[str]
    paths: Mapping[str, tuple[str, ...]]

    @property
    def member_nodes(self) -> frozenset[str]:
        return frozenset(self.paths)


def _as_link(raw) -> Link:
    if isinstance(raw, Link):
        return raw
    raw = dict(raw)
    var = raw.pop("variability", None)
    if var is not None and not isinstance(var, Variability):
        var = Variability(**var)
    try:
        return Link(variability=var, **raw)
    except TypeError as exc:
        raise ConfigError(f"bad link description {raw!r}: {exc}") from None


def build_topology(spec: Mapping, client_nodes: Iterable[str] | None = None) -> Topology:
    """Validate a topology description.

    ``spec`` holds ``server``, ``nodes`` and ``links``. Every node in
    ``client_nodes`` (all nodes when omitted) must be reachable from the server.
    """
    try:
        server = spec["server"]
        nodes = tuple(spec["nodes"])
        raw_links = spec["links"]
    except KeyError as exc:
        raise ConfigError(f"topology is missing {exc.args[0]!r}") from None
    if len(set(nodes)) != len(nodes):
        raise ConfigError("topology lists a node twice")
    node_set = set(nodes)
    if server not in node_set:
        raise ConfigError(f"server node {server!r} is not in the node list")

    links: dict[str, Link] = {}
    pairs: set[tuple[str, str]] = set()
    for raw in raw_links:
        link = _as_link(raw)
        if link.id in links:
            raise ConfigError(f"duplicate link id {link.id!r}")
        if (link.src, link.dst) in pairs:
            raise ConfigError(f"duplicate link {link.src}->{link.dst}")
        for end in (link.src, link.dst):
            if end not in node_set:
                raise ConfigError(f"link {link.id} references unknown node {end!r}")
        pairs.add((link.src, link.dst))
        links[link.id] = link

    topo = Topology(nodes=nodes, links=links, server_node=server)
    topo.reset_capacity_state()
    wanted = node_set if client_nodes is None else set(client_nodes)
    unknown = wanted - node_set
    if unknown:
        raise ConfigError(f"client nodes not in topology: {sorted(unknown)}")
    missing = wanted - topo.reachable()
    if missing:
        raise ConfigError(f"nodes unreachable from server {server!r}: {sorted(missing)}")
    return topo


def _best_paths(topo: Topology) -> dict[str, tuple[float, int, tuple[str, ...], tuple[str, ...]]]:
    # label = (latency, hops, node path, link path); labels are totally ordered and
    # extension-monotone, so the per-node best labels form a tree
    start = (0.0, 0, (topo.server_node,), ())
    best = {topo.server_node: start}
    heap = [start]
    while heap:
        label = heapq.heappop(heap)
        lat, hops, npath, lpath = label
        node = npath[-1]
        if best[node] is not label:
            continue
        for link in topo.out_links(node):
            if link.dst in npath:
                continue
            cand = (lat + link.latency_ms, hops + 1, npath + (link.dst,), lpath + (link.id,))
            cur = best.get(link.dst)
            if cur is None or cand[:3] < cur[:3]:
                best[link.dst] = cand
                heapq.heappush(heap, cand)
    return best


def shortest_path_tree(topo: Topology, members: Iterable[str], group_id: str = "") -> MulticastTree:
    """Union of minimum-latency paths from the server to each member node.

    Ties go to fewer hops, then to the lexicographically smaller node sequence.
    """
    members = set(members)
    best = _best_paths(topo)
    paths = {}
    for node in sorted(members):
        if node not in best:
            raise RoutingError(f"group {group_id!r}: node {node!r} unreachable from {topo.server_node!r}")
        paths[node] = best[node][3]
    links = frozenset(lid for p in paths.values() for lid in p)
    return MulticastTree(group_id=group_id, links=links, paths=paths)


def link_load(
    trees: Mapping[str, MulticastTree],
    plan: Mapping[str, int],
    ladders: Mapping,
    fec: Mapping[str, float] | None = None,
    links: Iterable[str] = (),
) -> dict[str, float]:
    """Offered load per link: each group counts once on every link of its tree."""
    for gid in plan:
        if gid not in trees or gid not in ladders:
            raise StateError(f"plan references unknown group {gid!r}")
    for gid in trees:
        if gid not in plan:
            raise StateError(f"group {gid!r} owns a tree but has no tier in the plan")
    fec = fec or {}
    load = {lid: 0.0 for lid in links}
    for gid in sorted(plan):
        rate = ladders[gid].bitrate(plan[gid]) * (1.0 + fec.get(gid, 0.0))
        for lid in sorted(trees[gid].links):
            load[lid] = load.get(lid, 0.0) + rate
    return load


def step_capacity(topo: Topology, rng: random.Random) -> dict[str, float]:
    """Advance every variable link's two-state chain one tick; return effective capacities."""
    caps = {}
    for lid in sorted(topo.links):
        link = topo.links[lid]
        var = link.variability
        if var is None:
            caps[lid] = link.capacity_bps
            continue
        bad = topo.bad_state.get(lid, False)
        u = rng.random()
        if bad:
            bad = not (u < var.p_bad_to_good)
        else:
            bad = u < var.p_good_to_bad
        topo.bad_state[lid] = bad
        caps[lid] = link.capacity_bps * (var.bad if bad else var.good)
    return caps
