"""Scenario model, strict JSON parsing and semantic validation."""

from __future__ import annotations

import json
from collections.abc import Mapping
from dataclasses import asdict, dataclass, field, fields, replace
from functools import lru_cache
from importlib import resources
from pathlib import Path

import jsonschema

from mcastsim.allocator.params import GAParams, SAParams
from mcastsim.content import VideoAsset, validate_ladder
from mcastsim.errors import ConfigError, ParseError
from mcastsim.metrics import QoEWeights
from mcastsim.topology import Link, Variability, build_topology

METHODS = ("traditional", "proposed")
OPTIMIZERS = ("greedy", "ga", "sa", "exhaustive")


@dataclass(frozen=True)
class SessionParams:
    startup_threshold_s: float = 1.0
    buffer_cap_s: float = 10.0
    goodput_window: int = 5

    def __post_init__(self):
        if not self.startup_threshold_s > 0:
            raise ConfigError("startup_threshold_s must be > 0")
        if not self.buffer_cap_s >= self.startup_threshold_s:
            raise ConfigError("buffer_cap_s must be >= startup_threshold_s")
        if self.goodput_window < 1:
            raise ConfigError("goodput_window must be >= 1")


@dataclass(frozen=True)
class AllocatorParams:
    headroom: float = 0.95
    alpha: float = 0.3
    safety: float = 0.8
    low_water_s: float = 1.0
    fec_cap: float = 0.3
    fec_gain: float = 2.0

    def __post_init__(self):
        if not 0 < self.headroom <= 1:
            raise ConfigError("headroom must lie in (0, 1]")
        if not 0 < self.alpha <= 1:
            raise ConfigError("alpha must lie in (0, 1]")
        if not self.safety > 0:
            raise ConfigError("safety must be > 0")
        if self.low_water_s < 0:
            raise ConfigError("low_water_s must be >= 0")
        if not 0 <= self.fec_cap < 1:
            raise ConfigError("fec_cap must lie in [0, 1)")
        if self.fec_gain < 0:
            raise ConfigError("fec_gain must be >= 0")


@dataclass(frozen=True)
class TopologySpec:
    server: str
    nodes: tuple[str, ...]
    links: tuple[Link, ...]

    def as_mapping(self) -> dict:
        return {"server": self.server, "nodes": self.nodes, "links": self.links}


@dataclass(frozen=True)
class Event:
    t: float
    action: str
    client: str
    node: str | None = None
    group: str | None = None
    asset: str | None = None
    max_tier: int | None = None


@dataclass(frozen=True)
class Scenario:
    name: str
    seed: int | None
    topology: TopologySpec
    assets: tuple[VideoAsset, ...]
    schedule: tuple[Event, ...]
    duration_s: float
    demand: str = "custom"
    dt_s: float = 0.1
    epoch_s: float = 1.0
    method: str = "proposed"
    optimizer: str = "greedy"
    ga: GAParams = field(default_factory=GAParams)
    sa: SAParams = field(default_factory=SAParams)
    qoe: QoEWeights = field(default_factory=QoEWeights)
    session: SessionParams = field(default_factory=SessionParams)
    allocator: AllocatorParams = field(default_factory=AllocatorParams)

    @property
    def n_ticks(self) -> int:
        return round(self.duration_s / self.dt_s)

    @property
    def epoch_ticks(self) -> int:
        return round(self.epoch_s / self.dt_s)

    def asset(self, asset_id: str) -> VideoAsset:
        for a in self.assets:
            if a.id == asset_id:
                return a
        raise KeyError(asset_id)


def _build(path: str, factory, kwargs):
    try:
        return factory(**kwargs)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: {exc}") from None


def _asset_from(path: str, raw: Mapping) -> VideoAsset:
    try:
        ladder = validate_ladder(raw["ladder"])
    except ConfigError as exc:
        raise ConfigError(f"{path}.ladder: {exc}") from None
    return _build(
        path,
        VideoAsset,
        dict(id=raw["id"], duration_s=raw.get("duration_s", 15.0), segment_s=raw.get("segment_s", 1.0), ladder=ladder),
    )


def _link_from(path: str, raw: Mapping) -> Link:
    raw = dict(raw)
    var = raw.pop("variability", None)
    if var is not None:
        var = _build(f"{path}.variability", Variability, var)
    return _build(path, Link, dict(raw, variability=var))


def from_dict(raw: Mapping) -> Scenario:
    """Construct a Scenario from already-parsed JSON, filling defaults."""
    if "seed" not in raw or raw["seed"] is None:
        raise ConfigError("seed: an explicit seed is required for reproducibility")
    for key in ("name", "topology", "assets", "schedule", "duration_s"):
        if key not in raw:
            raise ConfigError(f"{key}: required field missing")
    topo_raw = raw["topology"]
    topology = TopologySpec(
        server=topo_raw["server"],
        nodes=tuple(topo_raw["nodes"]),
        links=tuple(_link_from(f"topology.links[{i}]", l) for i, l in enumerate(topo_raw["links"])),
    )
    assets = tuple(_asset_from(f"assets[{i}]", a) for i, a in enumerate(raw["assets"]))
    schedule = tuple(_build(f"schedule[{i}]", Event, e) for i, e in enumerate(raw["schedule"]))
    kwargs = dict(
        name=raw["name"],
        seed=raw["seed"],
        topology=topology,
        assets=assets,
        schedule=schedule,
        duration_s=raw["duration_s"],
    )
    for key in ("demand", "dt_s", "epoch_s", "method", "optimizer"):
        if key in raw:
            kwargs[key] = raw[key]
    for key, cls in (("ga", GAParams), ("sa", SAParams), ("qoe", QoEWeights), ("session", SessionParams), ("allocator", AllocatorParams)):
        if key in raw:
            kwargs[key] = _build(key, cls, raw[key])
    return Scenario(**kwargs)


def to_dict(scenario: Scenario) -> dict:
    """JSON-ready form that ``from_dict`` maps back to an equal Scenario."""
    links = []
    for l in scenario.topology.links:
        d = {k: v for k, v in asdict(l).items() if k != "variability"}
        if l.variability is not None:
            d["variability"] = asdict(l.variability)
        links.append(d)
    out = {
        "name": scenario.name,
        "demand": scenario.demand,
        "seed": scenario.seed,
        "dt_s": scenario.dt_s,
        "epoch_s": scenario.epoch_s,
        "duration_s": scenario.duration_s,
        "method": scenario.method,
        "optimizer": scenario.optimizer,
        "topology": {"server": scenario.topology.server, "nodes": list(scenario.topology.nodes), "links": links},
        "assets": [
            {
                "id": a.id,
                "duration_s": a.duration_s,
                "segment_s": a.segment_s,
                "ladder": [[t.bitrate_bps, t.quality] for t in a.ladder.tiers],
            }
            for a in scenario.assets
        ],
        "schedule": [{k: v for k, v in asdict(e).items() if v is not None} for e in scenario.schedule],
    }
    for key in ("ga", "sa", "qoe", "session", "allocator"):
        out[key] = asdict(getattr(scenario, key))
    return out


def validate(scenario: Scenario | Mapping) -> Scenario:
    """Check every cross-field invariant; raises ConfigError naming the field path."""
    if not isinstance(scenario, Scenario):
        scenario = from_dict(scenario)
    s = scenario
    if s.seed is None:
        raise ConfigError("seed: an explicit seed is required for reproducibility")
    if not isinstance(s.seed, int) or isinstance(s.seed, bool):
        raise ConfigError(f"seed: must be an integer, got {s.seed!r}")
    if not s.dt_s > 0:
        raise ConfigError("dt_s: must be > 0")
    if not s.epoch_s >= s.dt_s - 1e-12:
        raise ConfigError("epoch_s: must be >= dt_s")
    ratio = s.epoch_s / s.dt_s
    if abs(ratio - round(ratio)) > 1e-6:
        raise ConfigError(f"epoch_s: {s.epoch_s} is not a multiple of dt_s={s.dt_s}")
    ratio = s.duration_s / s.dt_s
    if abs(ratio - round(ratio)) > 1e-6:
        raise ConfigError(f"duration_s: {s.duration_s} is not a multiple of dt_s={s.dt_s}")
    if not s.duration_s >= s.epoch_s:
        raise ConfigError("duration_s: must be >= epoch_s")
    if s.method not in METHODS:
        raise ConfigError(f"method: must be one of {METHODS}, got {s.method!r}")
    if s.optimizer not in OPTIMIZERS:
        raise ConfigError(f"optimizer: must be one of {OPTIMIZERS}, got {s.optimizer!r}")

    assets = {}
    for i, a in enumerate(s.assets):
        if a.id in assets:
            raise ConfigError(f"assets[{i}].id: duplicate asset {a.id!r}")
        assets[a.id] = a

    joined: set[str] = set()
    group_asset: dict[str, str] = {}
    client_nodes = set()
    for i, e in enumerate(s.schedule):
        path = f"schedule[{i}]"
        if not 0 <= e.t <= s.duration_s:
            raise ConfigError(f"{path}.t: {e.t} outside [0, {s.duration_s}]")
        if e.action == "join":
            for key in ("node", "group", "asset"):
                if getattr(e, key) is None:
                    raise ConfigError(f"{path}.{key}: required for join")
            if e.client in joined:
                raise ConfigError(f"{path}.client: {e.client!r} joins twice")
            if e.asset not in assets:
                raise ConfigError(f"{path}.asset: unknown asset {e.asset!r}")
            if group_asset.setdefault(e.group, e.asset) != e.asset:
                raise ConfigError(f"{path}.asset: group {e.group!r} already streams {group_asset[e.group]!r}")
            if e.max_tier is not None and not 0 <= e.max_tier <= assets[e.asset].ladder.top:
                raise ConfigError(f"{path}.max_tier: {e.max_tier} outside the ladder")
            if e.node == s.topology.server:
                raise ConfigError(f"{path}.node: clients cannot attach at the server node")
            joined.add(e.client)
            client_nodes.add(e.node)
        elif e.action == "leave":
            if e.client not in joined:
                raise ConfigError(f"{path}.client: {e.client!r} leaves before joining")
        else:
            raise ConfigError(f"{path}.action: must be 'join' or 'leave', got {e.action!r}")
    try:
        build_topology(s.topology.as_mapping(), client_nodes)
    except ConfigError as exc:
        raise ConfigError(f"topology: {exc}") from None
    return s


@lru_cache(maxsize=1)
def _schema() -> dict:
    return json.loads(resources.files("mcastsim.schema").joinpath("scenario.schema.json").read_text())


def _schema_check(raw) -> None:
    validator = jsonschema.Draft202012Validator(_schema())
    errors = sorted(validator.iter_errors(raw), key=lambda e: list(e.absolute_path))
    for err in errors:
        if err.validator == "additionalProperties":
            loc = "/".join(str(p) for p in err.absolute_path) or "<root>"
            raise ParseError(f"{loc}: {err.message}")
    if errors:
        err = errors[0]
        loc = ".".join(str(p) for p in err.absolute_path) or "<root>"
        raise ConfigError(f"{loc}: {err.message}")


def parse_scenario_text(text: str, source: str = "<string>") -> Scenario:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{source}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    if not isinstance(raw, dict):
        raise ParseError(f"{source}: top level must be a JSON object")
    _schema_check(raw)
    return validate(from_dict(raw))


def bundled_scenarios() -> dict[str, Path]:
    root = resources.files("mcastsim.scenarios")
    return {p.name[: -len(".json")]: Path(str(p)) for p in root.iterdir() if p.name.endswith(".json")}


def resolve_scenario_path(name_or_path: str | Path) -> Path:
    """A filesystem path, or the name of a bundled preset (with or without ``.json``)."""
    p = Path(name_or_path)
    if p.exists():
        return p
    stem = p.name[:-5] if p.name.endswith(".json") else p.name
    bundled = bundled_scenarios()
    if stem in bundled:
        return bundled[stem]
    raise ConfigError(f"scenario {str(name_or_path)!r} not found (bundled: {sorted(bundled)})")


def parse_scenario(path: str | Path) -> Scenario:
    """Strictly parse a scenario file (or a bundled preset name)."""
    p = resolve_scenario_path(path)
    return parse_scenario_text(p.read_text(), source=str(p))


def with_overrides(scenario: Scenario, **changes) -> Scenario:
    """Copy with non-None overrides applied, re-validated."""
    changes = {k: v for k, v in changes.items() if v is not None}
    known = {f.name for f in fields(Scenario)}
    unknown = set(changes) - known
    if unknown:
        raise ConfigError(f"unknown scenario override(s): {sorted(unknown)}")
    return validate(replace(scenario, **changes))
