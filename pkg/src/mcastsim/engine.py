"""Tick-driven simulation loop closing the feedback -> prediction -> allocation cycle."""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from mcastsim.allocator import (
    AllocationProblem,
    GroupDemand,
    adapt_quality,
    exhaustive_allocate,
    fec_fraction,
    ga_allocate,
    greedy_allocate,
    predict_capacity,
    sa_allocate,
    traditional_allocate,
)
from mcastsim.errors import SimError
from mcastsim.metrics import (
    MetricsSummary,
    SessionTrace,
    bandwidth_utilization,
    offered_load_pct,
    percentile,
    session_qoe,
)
from mcastsim.scenario import Scenario, validate
from mcastsim.session import (
    DONE,
    ClientState,
    GroupState,
    deliver_tick,
    feedback,
    join,
    leave,
    step_playback,
)
from mcastsim.topology import build_topology, link_load, step_capacity

# capacity samples kept per link for the predictor; older ones carry < 1e-15 weight at alpha=0.3
HISTORY = 100


@dataclass
class SessionRecord:
    client_id: str
    group_id: str
    qoe: float
    started: bool
    completed: bool
    startup_delay_s: float
    rebuffer_s: float
    rebuffer_events: int
    watched_s: float
    quality_trace: list[float] = field(repr=False)


class Simulation:
    def __init__(self, scenario: Scenario, record_timeseries: bool = False, workers: int = 1):
        self.sc = scenario = validate(scenario)
        joins = [e for e in scenario.schedule if e.action == "join"]
        self.topo = build_topology(scenario.topology.as_mapping(), {e.node for e in joins})
        self.link_ids = sorted(self.topo.links)
        self.events = sorted(enumerate(scenario.schedule), key=lambda p: (p[1].t, p[0]))
        self.groups: dict[str, GroupState] = {}
        for e in joins:
            if e.group not in self.groups:
                self.groups[e.group] = GroupState(e.group, scenario.asset(e.asset))
        self.clients: dict[str, ClientState] = {}
        self.records: list[SessionRecord] = []
        self.workers = workers
        seed = scenario.seed
        # one stream per stochastic consumer so solver effort never perturbs channel noise
        self.rng_capacity = random.Random(f"{seed}:capacity")
        self.rng_ga = random.Random(f"{seed}:ga")
        self.rng_sa = random.Random(f"{seed}:sa")
        self.cap_history = {lid: [] for lid in self.link_ids}
        self.series_load = {lid: [] for lid in self.link_ids}
        self.series_cap = {lid: [] for lid in self.link_ids}
        self.record_timeseries = record_timeseries
        self.series_buffer: list[tuple[int, str, float]] = []
        self._loads: dict[str, float] | None = None
        # tiers installed at the last epoch, for groups active since then
        self.installed: dict[str, int] = {}
        self.tick = 0

    # -- plumbing ---------------------------------------------------------

    @property
    def proposed(self) -> bool:
        return self.sc.method == "proposed"

    def active_groups(self) -> list[GroupState]:
        return [self.groups[g] for g in sorted(self.groups) if self.groups[g].active]

    def loads(self) -> dict[str, float]:
        if self._loads is None:
            active = self.active_groups()
            self._loads = link_load(
                {g.group_id: g.tree for g in active},
                {g.group_id: g.current_tier for g in active},
                {g.group_id: g.asset.ladder for g in active},
                {g.group_id: g.fec_fraction for g in active},
                links=self.link_ids,
            )
        return self._loads

    def _apply_event(self, e) -> None:
        if e.action == "join":
            sp = self.sc.session
            client = ClientState(
                client_id=e.client,
                node=e.node,
                group_id=e.group,
                asset=self.groups[e.group].asset,
                max_tier=e.max_tier,
                startup_threshold_s=sp.startup_threshold_s,
                buffer_cap_s=sp.buffer_cap_s,
                window=sp.goodput_window,
            )
            group = self.groups[e.group]
            fresh = not group.active
            join(group, client, self.topo)
            if fresh:
                group.fec_fraction = 0.0
                group.current_tier = self._admission_tier(group, e.max_tier) if self.proposed else group.asset.ladder.top
            self.clients[e.client] = client
        else:
            client = self.clients.get(e.client)
            if client is not None:
                self._finish(client)
        self._loads = None

    def _admission_tier(self, group: GroupState, max_tier: int | None) -> int:
        """Highest tier that fits the spare predicted headroom along a new group's tree."""
        ladder = group.asset.ladder
        ap = self.sc.allocator
        nominal = {lid: l.capacity_bps for lid, l in self.topo.links.items()}
        predicted = predict_capacity(self.cap_history, ap.alpha, nominal)
        others = [g for g in self.active_groups() if g is not group]
        loads = link_load(
            {g.group_id: g.tree for g in others},
            {g.group_id: g.current_tier for g in others},
            {g.group_id: g.asset.ladder for g in others},
            {g.group_id: g.fec_fraction for g in others},
            links=self.link_ids,
        )
        spare = min(ap.headroom * predicted[lid] - loads[lid] for lid in group.tree.links)
        t = ladder.top if max_tier is None else min(max_tier, ladder.top)
        while t > 0 and ladder.bitrate(t) > spare:
            t -= 1
        return t

    def _finish(self, client: ClientState) -> None:
        group = self.groups[client.group_id]
        leave(group, client.client_id, self.topo)
        if not group.active:
            self.installed.pop(group.group_id, None)
        del self.clients[client.client_id]
        self._loads = None
        started = client.startup_delay_s is not None
        if started and client.played_s > 0:
            score = session_qoe(
                SessionTrace(client.quality_trace, client.rebuffer_s, client.startup_delay_s, client.played_s),
                self.sc.qoe,
            )
        else:
            # a viewer who never saw a frame
            score = 0.0
        self.records.append(
            SessionRecord(
                client_id=client.client_id,
                group_id=client.group_id,
                qoe=score,
                started=started,
                completed=client.phase == DONE,
                startup_delay_s=client.startup_delay_s if started else client.age_s,
                rebuffer_s=client.rebuffer_s,
                rebuffer_events=client.rebuffer_events,
                watched_s=client.played_s,
                quality_trace=list(client.quality_trace),
            )
        )

    # -- allocation epoch -------------------------------------------------

    def _optimize(self, problem: AllocationProblem):
        sc = self.sc
        if sc.optimizer == "greedy":
            return greedy_allocate(problem)
        if sc.optimizer == "ga":
            return ga_allocate(problem, sc.ga, seed=self.rng_ga.getrandbits(63), workers=self.workers)
        if sc.optimizer == "sa":
            return sa_allocate(problem, sc.sa, seed=self.rng_sa.getrandbits(63))
        return exhaustive_allocate(problem)

    def _epoch(self) -> None:
        for cid in sorted(self.clients):
            self.clients[cid].close_interval()
        active = self.active_groups()
        if not active:
            return
        if not self.proposed:
            plan = traditional_allocate({g.group_id: g.asset.ladder for g in active})
            for g in active:
                g.current_tier = plan[g.group_id]
            self._loads = None
            return

        ap = self.sc.allocator
        nominal = {lid: l.capacity_bps for lid, l in self.topo.links.items()}
        predicted = predict_capacity(self.cap_history, ap.alpha, nominal)
        reports = {
            g.group_id: [feedback(self.clients[cid]) for cid in sorted(g.members)] for g in active
        }
        demands = []
        for g in active:
            rs = reports[g.group_id]
            # redundancy sized for the worst receiver in the group
            g.fec_fraction = fec_fraction(max(r.loss for r in rs), ap.fec_cap, ap.fec_gain)
            ladder = g.asset.ladder
            caps = [ladder.top if r.max_tier is None else r.max_tier for r in rs]
            demands.append(
                GroupDemand(
                    group_id=g.group_id,
                    member_count=len(g.members),
                    ladder=ladder.truncated(max(caps)),
                    tree_links=g.tree.links,
                    fec_fraction=g.fec_fraction,
                )
            )
        problem = AllocationProblem(demands, predicted, ap.headroom)
        plan = self._optimize(problem)
        # a group activated since the last epoch has no previous tier to smooth against
        previous = {gid: t for gid, t in self.installed.items() if gid in plan}
        plan = adapt_quality(plan, reports, previous, problem, ap.low_water_s, ap.safety)
        for g in active:
            g.current_tier = plan[g.group_id]
        self.installed = dict(plan)
        self._loads = None

    # -- main loop --------------------------------------------------------

    def step(self) -> None:
        sc = self.sc
        dt = sc.dt_s
        clock = self.tick * dt
        while self.events and self.events[0][1].t <= clock + 1e-9:
            self._apply_event(self.events.pop(0)[1])

        caps = step_capacity(self.topo, self.rng_capacity)
        for lid in self.link_ids:
            hist = self.cap_history[lid]
            hist.append(caps[lid])
            if len(hist) > HISTORY:
                del hist[0]
        loads = self.loads()
        for lid in self.link_ids:
            self.series_load[lid].append(loads[lid])
            self.series_cap[lid].append(caps[lid])

        finished = []
        for group in self.active_groups():
            deliveries = deliver_tick(group, self.topo, caps, loads, dt)
            for cid in sorted(deliveries):
                d = deliveries[cid]
                client = self.clients[cid]
                client.observe(d)
                step_playback(client, d.content_s, dt, client.perceived_quality(group.current_tier))
                if client.phase == DONE:
                    finished.append(client)
        for client in finished:
            self._finish(client)
        if self.record_timeseries:
            for cid in sorted(self.clients):
                self.series_buffer.append((self.tick, cid, self.clients[cid].buffer_s))

        self.tick += 1
        if self.tick % sc.epoch_ticks == 0:
            self._epoch()

    def run(self) -> MetricsSummary:
        for _ in range(self.sc.n_ticks):
            try:
                self.step()
            except SimError as exc:
                raise type(exc)(f"tick {self.tick} (t={self.tick * self.sc.dt_s:.3f} s): {exc}") from exc
        for cid in sorted(self.clients):
            self._finish(self.clients[cid])
        return self.summary()

    def summary(self) -> MetricsSummary:
        sc = self.sc
        recs = self.records
        scores = [r.qoe for r in recs]
        watched = sum(r.watched_s for r in recs)
        segs = [q for r in recs for q in r.quality_trace]
        s = MetricsSummary(
            scenario=sc.name,
            demand=sc.demand,
            method=sc.method,
            optimizer=sc.optimizer if self.proposed else "none",
            seed=sc.seed,
            sessions=len(recs),
            completed_sessions=sum(r.completed for r in recs),
            qoe_mean=sum(scores) / len(scores) if scores else 0.0,
            qoe_p10=percentile(scores, 10),
            qoe_p50=percentile(scores, 50),
            qoe_p90=percentile(scores, 90),
            mean_quality=sum(segs) / len(segs) if segs else 0.0,
            bandwidth_utilization_pct=bandwidth_utilization(self.series_load, self.series_cap),
            offered_load_pct=offered_load_pct(self.series_load, self.series_cap),
            mean_startup_delay_s=sum(r.startup_delay_s for r in recs) / len(recs) if recs else 0.0,
            rebuffer_ratio=sum(r.rebuffer_s for r in recs) / watched if watched > 0 else 0.0,
            rebuffer_events_per_min=sum(r.rebuffer_events for r in recs) / (watched / 60.0) if watched > 0 else 0.0,
            ticks=self.tick,
        )
        s.series = {"load": self.series_load, "capacity": self.series_cap, "buffer": self.series_buffer}
        return s


def run(scenario: Scenario, record_timeseries: bool = False, workers: int = 1) -> MetricsSummary:
    """Simulate ``scenario`` end to end; identical (scenario, seed) gives identical output."""
    return Simulation(scenario, record_timeseries, workers).run()
