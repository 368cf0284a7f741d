"""Generate the bundled low/medium/high demand scenarios.

Twelve-node two-tier tree: server -> 3 core routers -> 8 wireless edge cells.
Each client slot sits in one cell and watches three short videos back to back,
picking a group by Zipf popularity each time.

    python scripts/make_presets.py [--out src/mcastsim/scenarios]
"""

import argparse
import json
import random
from pathlib import Path

MBPS = 1_000_000

LADDER = [
    [0.4 * MBPS, 0.30],
    [0.8 * MBPS, 0.50],
    [1.5 * MBPS, 0.68],
    [3.0 * MBPS, 0.84],
    [6.0 * MBPS, 1.00],
]
# device render limit (ladder index) and its share of clients
DEVICE_MIX = [(2, 0.25), (3, 0.35), (4, 0.40)]

PRESETS = {
    "low": dict(clients=20, groups=8),
    "medium": dict(clients=60, groups=16),
    "high": dict(clients=120, groups=24),
}

CORE = {"c1": 200, "c2": 250, "c3": 300}  # Mbit/s
EDGES = {  # cell -> (parent, Mbit/s)
    "e1": ("c1", 20), "e2": ("c1", 30), "e3": ("c1", 40),
    "e4": ("c2", 25), "e5": ("c2", 35), "e6": ("c2", 50),
    "e7": ("c3", 30), "e8": ("c3", 45),
}

DURATION_S = 60.0
SESSIONS_PER_SLOT = 3
SESSION_PERIOD_S = 18.0
FIRST_JOIN_S = 8.0


def topology():
    links = []
    for core, cap in CORE.items():
        links.append({"id": f"srv-{core}", "src": "srv", "dst": core,
                      "capacity_bps": cap * MBPS, "latency_ms": 5.0, "base_loss": 0.0})
    for i, (edge, (parent, cap)) in enumerate(EDGES.items()):
        links.append({
            "id": f"{parent}-{edge}", "src": parent, "dst": edge,
            "capacity_bps": cap * MBPS, "latency_ms": 10.0,
            "base_loss": 0.005 + 0.0025 * (i % 4),
            "variability": {"good": 1.0, "bad": 0.5, "p_good_to_bad": 0.02, "p_bad_to_good": 0.1},
        })
    return {"server": "srv", "nodes": ["srv", *CORE, *EDGES], "links": links}


def zipf_weights(n, s=0.8):
    return [1.0 / (k + 1) ** s for k in range(n)]


def build(demand, clients, groups, gen_seed):
    rng = random.Random(f"preset:{demand}:{gen_seed}")
    gids = [f"g{k:02d}" for k in range(groups)]
    weights = zipf_weights(groups)
    cells = sorted(EDGES)
    schedule = []
    for slot in range(clients):
        cell = rng.choice(cells)
        offset = round(rng.uniform(0.0, FIRST_JOIN_S), 1)
        for k in range(SESSIONS_PER_SLOT):
            g = rng.choices(range(groups), weights)[0]
            tier_cap = rng.choices([d for d, _ in DEVICE_MIX], [w for _, w in DEVICE_MIX])[0]
            schedule.append({
                "t": round(offset + k * SESSION_PERIOD_S, 1),
                "action": "join",
                "client": f"u{slot:03d}s{k}",
                "node": cell,
                "group": gids[g],
                "asset": f"v{g:02d}",
                "max_tier": tier_cap,
            })
    schedule.sort(key=lambda e: (e["t"], e["client"]))
    return {
        "name": f"{demand}_demand",
        "demand": demand,
        "seed": 1,
        "dt_s": 0.1,
        "epoch_s": 1.0,
        "duration_s": DURATION_S,
        "method": "proposed",
        "optimizer": "greedy",
        "topology": topology(),
        "assets": [{"id": f"v{g:02d}", "duration_s": 15.0, "segment_s": 1.0, "ladder": LADDER}
                   for g in range(groups)],
        "schedule": schedule,
        "session": {"startup_threshold_s": 1.0, "buffer_cap_s": 10.0, "goodput_window": 5},
        "allocator": {"headroom": 0.95, "alpha": 0.3, "safety": 0.8, "low_water_s": 0.2,
                      "fec_cap": 0.3, "fec_gain": 2.0},
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default=str(Path(__file__).resolve().parents[1] / "src/mcastsim/scenarios"))
    ap.add_argument("--gen-seed", type=int, default=7)
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for demand, size in PRESETS.items():
        sc = build(demand, size["clients"], size["groups"], args.gen_seed)
        path = out / f"{demand}_demand.json"
        path.write_text(json.dumps(sc, indent=1) + "\n")
        print(f"wrote {path} ({len(sc['schedule'])} events)")


if __name__ == "__main__":
    main()
