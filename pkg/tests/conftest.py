import math
import random
import time

import pytest
from hypothesis import settings

from mcastsim.allocator import AllocationProblem, GroupDemand
from mcastsim.content import VideoAsset, validate_ladder
from mcastsim.topology import build_topology

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")

M = 1_000_000


def ladder(*pairs):
    return validate_ladder(pairs)


def problem(groups, caps, headroom=1.0):
    """groups: iterable of (gid, members, ladder, links[, fec])."""
    return AllocationProblem(
        [GroupDemand(g[0], g[1], g[2], frozenset(g[3]), g[4] if len(g) > 4 else 0.0) for g in groups],
        caps,
        headroom,
    )


def two_group_6m():
    lad = ladder((1 * M, 0.4), (4 * M, 1.0))
    return problem([("g1", 1, lad, {"L"}), ("g2", 1, lad, {"L"})], {"L": 6 * M})


def random_instance(rng: random.Random, max_groups=4, max_tiers=3, max_links=6) -> AllocationProblem:
    """Small MCKP instance whose all-lowest plan is feasible."""
    while True:
        n_links = rng.randint(1, max_links)
        links = [f"l{i}" for i in range(n_links)]
        groups = []
        for g in range(rng.randint(1, max_groups)):
            n = rng.randint(1, max_tiers)
            rates = sorted(rng.sample(range(1, 21), n))
            quals = sorted(rng.sample(range(1, 101), n))
            lad = validate_ladder([(r * 0.5 * M, q / 100) for r, q in zip(rates, quals)])
            tree = rng.sample(links, rng.randint(1, n_links))
            groups.append(GroupDemand(f"g{g}", rng.randint(1, 20), lad, frozenset(tree)))
        caps = {lid: rng.uniform(2, 25) * M for lid in links}
        try:
            p = AllocationProblem(groups, caps, 1.0)
        except Exception:
            continue
        if p.feasible([0] * len(p.groups)):
            return p


def line_topology(caps=(10 * M, 10 * M), loss=0.0):
    links = []
    nodes = ["A", "B", "C", "D", "E"][: len(caps) + 1]
    for i, c in enumerate(caps):
        links.append({"id": f"{nodes[i]}{nodes[i + 1]}", "src": nodes[i], "dst": nodes[i + 1],
                      "capacity_bps": c, "base_loss": loss})
    return build_topology({"server": "A", "nodes": nodes, "links": links})


def asset(duration=15.0, segment=1.0, lad=None, id="v"):
    return VideoAsset(id, duration, segment, lad or ladder((1 * M, 0.4), (3 * M, 0.7), (5 * M, 1.0)))


@pytest.fixture
def rng():
    return random.Random(12345)


def tiny_scenario_dict(**overrides):
    """One server, one router, one cell; one client watching a 5 s clip."""
    d = {
        "name": "tiny",
        "demand": "custom",
        "seed": 1,
        "duration_s": 8.0,
        "topology": {
            "server": "s",
            "nodes": ["s", "r", "e"],
            "links": [
                {"id": "s-r", "src": "s", "dst": "r", "capacity_bps": 100 * M, "latency_ms": 1.0},
                {"id": "r-e", "src": "r", "dst": "e", "capacity_bps": 50 * M, "latency_ms": 1.0},
            ],
        },
        "assets": [{"id": "v", "duration_s": 5.0, "segment_s": 1.0,
                    "ladder": [[1 * M, 0.4], [3 * M, 0.7], [5 * M, 1.0]]}],
        "schedule": [{"t": 0.0, "action": "join", "client": "c1", "node": "e", "group": "g", "asset": "v"}],
    }
    d.update(overrides)
    return d


def ladder_instance(rng: random.Random, max_groups=4, max_tiers=3, max_links=6) -> AllocationProblem:
    """Instance with encoding-style ladders: rates step up 1.6-2.4x, quality grows with log rate.

    Each link's capacity lies between the summed lowest and 1.1x the summed top
    rates of the groups crossing it, so the capacity constraints bind.
    """
    while True:
        n_links = rng.randint(1, max_links)
        links = [f"l{i}" for i in range(n_links)]
        groups = []
        for g in range(rng.randint(1, max_groups)):
            n = rng.randint(1, max_tiers)
            rates = [rng.uniform(0.3, 1.0) * M]
            for _ in range(n - 1):
                rates.append(rates[-1] * rng.uniform(1.6, 2.4))
            q0 = rng.uniform(0.2, 0.45)
            top_q = rng.uniform(0.8, 1.0) if n > 1 else q0
            span = math.log(rates[-1] / rates[0]) or 1.0
            quals = [q0 + (top_q - q0) * math.log(x / rates[0]) / span for x in rates]
            tree = rng.sample(links, rng.randint(1, n_links))
            groups.append(GroupDemand(f"g{g}", rng.randint(1, 20), validate_ladder(list(zip(rates, quals))), frozenset(tree)))
        caps = {}
        for lid in links:
            lo = sum(g.ladder.bitrate(0) for g in groups if lid in g.tree_links)
            hi = sum(g.ladder.bitrate(g.ladder.top) for g in groups if lid in g.tree_links)
            caps[lid] = rng.uniform(lo, 1.1 * hi) if hi else rng.uniform(1, 10) * M
        try:
            p = AllocationProblem(groups, caps, 1.0)
        except Exception:
            continue
        if p.feasible([0] * len(p.groups)):
            return p


# -- acceptance reporting ------------------------------------------------------

ACCEPTANCE: dict[int, tuple[bool, str]] = {}
SUITE_BUDGET_S = 300.0
_t0 = time.perf_counter()


def record(criterion: int, ok: bool, detail: str) -> None:
    ACCEPTANCE[criterion] = (ok, detail)
    print(f"[criterion {criterion}] {'PASS' if ok else 'FAIL'}: {detail}")


def pytest_sessionfinish(session, exitstatus):
    if not ACCEPTANCE:
        return
    elapsed = time.perf_counter() - _t0
    ok = elapsed < SUITE_BUDGET_S
    ACCEPTANCE[9] = (ok, f"whole session {elapsed:.1f} s < {SUITE_BUDGET_S:.0f} s")
    if not ok:
        session.exitstatus = 1


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}")
