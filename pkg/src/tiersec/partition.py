"""Tier partitioning strategies: random, max-cut alternation along timing
paths, timing-aware thresholding, hierarchical, and the Trojan-aware
variant that keeps structure instances intact.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from .layout import BOTTOM, TOP
from .netlist import Netlist, NetlistError, sta_unit_delay


@dataclass(frozen=True)
class TierAssignment:
    tiers: dict[str, str]  # gate id -> Bottom | Top
    strategy: str
    seed: int
    notes: tuple[str, ...] = ()

    def __post_init__(self):
        bad = [t for t in self.tiers.values() if t not in (BOTTOM, TOP)]
        if bad:
            raise NetlistError(f"invalid tier labels {set(bad)}")

    def tier_of(self, gid: str) -> str:
        return self.tiers[gid]

    def count(self, tier: str) -> int:
        return sum(1 for t in self.tiers.values() if t == tier)

    def to_csv(self) -> str:
        lines = ["gate_id,tier"]
        lines += [f"{gid},{self.tiers[gid]}" for gid in sorted(self.tiers)]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_csv(cls, text: str, strategy="loaded", seed=0) -> "TierAssignment":
        tiers = {}
        for line in text.splitlines()[1:]:
            if line.strip():
                gid, tier = line.rsplit(",", 1)
                tiers[gid] = tier
        return cls(tiers, strategy, seed)


@dataclass(frozen=True)
class CutSet:
    nets: frozenset[str]

    @property
    def size(self) -> int:
        return len(self.nets)


def _check_total(n: Netlist, tiers: dict) -> None:
    missing = {g.id for g in n.gates} - tiers.keys()
    if missing:
        raise NetlistError(f"assignment not total, missing {sorted(missing)[:4]}")


def cut_set(n: Netlist, a: TierAssignment) -> CutSet:
    """Nets whose driver tier differs from at least one sink tier.

    One F2F via per cut net: RDL fan-out is not modeled, so a net counts
    once no matter how many opposite-tier sinks it has.  Nets driven by
    primary inputs never cut (primary I/O arrives by TSV, not F2F).
    """
    _check_total(n, a.tiers)
    cut = set()
    for g in n.gates:
        dt = a.tiers[g.id]
        for sink_id, _pin in n.sinks_of[g.fanout_net]:
            if a.tiers[sink_id] != dt:
                cut.add(g.fanout_net)
                break
    return CutSet(frozenset(cut))


def partition_random(n: Netlist, move_fraction: float, seed: int) -> TierAssignment:
    """Uniformly move ``round(move_fraction * gates)`` gates to the top."""
    if not 0.0 <= move_fraction <= 1.0:
        raise ValueError("move_fraction outside [0,1]")
    rng = random.Random(seed)
    gids = sorted(g.id for g in n.gates)
    k = round(move_fraction * len(gids))
    top = set(rng.sample(gids, k))
    tiers = {gid: TOP if gid in top else BOTTOM for gid in gids}
    return TierAssignment(tiers, "random", seed)


def _covering_paths(n: Netlist, order_key) -> list[list[str]]:
    """Maximal source-to-sink gate paths covering every combinational gate.

    Paths are walked in arrival order; each uncovered gate seeds one path
    extended to a source upstream and a sink downstream.
    """
    timing = order_key
    drivers = n.driver_of
    covered = set()
    paths = []
    for g in sorted(n.gates, key=lambda g: (timing.arrival[g.id], g.id)):
        if g.id in covered or g.cell.kind == "DFF":
            continue
        # extend upstream along max-arrival fanins
        path = [g]
        cur = g
        while True:
            preds = [
                drivers[f]
                for f in cur.fanins
                if f in drivers and drivers[f].cell.kind != "DFF"
            ]
            if not preds:
                break
            cur = max(preds, key=lambda p: (timing.arrival[p.id], p.id))
            path.insert(0, cur)
        cur = g
        while True:
            succs = [
                n.gate_by_id[s]
                for s, _ in n.sinks_of[cur.fanout_net]
                if n.gate_by_id[s].cell.kind != "DFF"
            ]
            if not succs:
                break
            cur = max(
                succs,
                key=lambda x: (timing.arrival[x.id] + timing.required[x.id], x.id),
            )
            if cur.id in (p.id for p in path):
                break  # defensive; DAG forbids this
            path.append(cur)
        paths.append([p.id for p in path])
        covered.update(p.id for p in path)
    return paths


def partition_max_cut(n: Netlist, seed: int) -> TierAssignment:
    """Alternate gates between tiers along timing paths, random phase per
    path; gates already placed by an earlier path keep their assignment."""
    rng = random.Random(seed)
    timing = sta_unit_delay(n)
    tiers: dict[str, str] = {}
    for path in _covering_paths(n, timing):
        phase = rng.random() < 0.5
        for i, gid in enumerate(path):
            if gid not in tiers:
                tiers[gid] = TOP if (i % 2 == 0) == phase else BOTTOM
    for g in n.gates:  # DFFs and anything path-walking missed
        if g.id not in tiers:
            tiers[g.id] = TOP if rng.random() < 0.5 else BOTTOM
    return TierAssignment(tiers, "max_cut", seed)


def partition_timing_aware(
    n: Netlist,
    slack_threshold: int | None = None,
    target_balance: float = 0.02,
    seed: int = 0,
) -> TierAssignment:
    """Critical gates (slack below threshold) stay on the bottom tier.

    The threshold is bisected over the slack distribution until tier
    utilizations agree within ``target_balance``; gates at the boundary
    slack value are tie-broken at random when no threshold balances.
    """
    rng = random.Random(seed)
    timing = sta_unit_delay(n)
    gids = sorted(g.id for g in n.gates)
    total = len(gids)
    notes = []
    by_slack = sorted(gids, key=lambda gid: (timing.slack[gid], gid))
    slacks = sorted({timing.slack[gid] for gid in gids})
    tol = max(1, int(target_balance * total))

    if slack_threshold is not None:
        thr = slack_threshold
    else:
        # bisection over distinct slack values on |Bottom| - |Top|
        lo, hi = 0, len(slacks)  # threshold index: bottom = slack < slacks[idx]
        thr = None
        while lo <= hi:
            mid = (lo + hi) // 2
            t = slacks[mid] if mid < len(slacks) else slacks[-1] + 1
            n_bot = sum(1 for gid in gids if timing.slack[gid] < t)
            if abs(n_bot - (total - n_bot)) <= tol:
                thr = t
                break
            if n_bot * 2 < total:
                lo = mid + 1
            else:
                hi = mid - 1
        if thr is None:
            half = total // 2
            thr = timing.slack[by_slack[half]] + 1 if total else 1
    tiers = {gid: BOTTOM if timing.slack[gid] < thr else TOP for gid in gids}

    # boundary classes are tie-broken at random until balance holds
    while True:
        n_bot = sum(1 for t in tiers.values() if t == BOTTOM)
        excess = abs(n_bot - (total - n_bot)) // 2
        if excess <= tol // 2 or abs(n_bot - (total - n_bot)) <= tol:
            break
        heavy_bottom = n_bot > total - n_bot
        if heavy_bottom:
            pool_slacks = [s for s in slacks
                           if any(tiers[g] == BOTTOM
                                  for g in gids if timing.slack[g] == s)]
            boundary = max(pool_slacks)
            pool = [g for g in gids
                    if timing.slack[g] == boundary and tiers[g] == BOTTOM]
            target = TOP
        else:
            pool_slacks = [s for s in slacks
                           if any(tiers[g] == TOP
                                  for g in gids if timing.slack[g] == s)]
            boundary = min(pool_slacks)
            pool = [g for g in gids
                    if timing.slack[g] == boundary and tiers[g] == TOP]
            target = BOTTOM
        rng.shuffle(pool)
        for gid in pool[: min(excess, len(pool))]:
            tiers[gid] = target
        notes.append("random_tie_break")
        if not pool:
            break
    final_thr = min(
        (timing.slack[g] for g in gids if tiers[g] == TOP),
        default=timing.critical_path_length + 1,
    )
    notes.append(f"final_threshold={final_thr}")
    return TierAssignment(tiers, "timing_aware", seed, tuple(notes))


def module_map_from_names(n: Netlist) -> dict[str, str]:
    """Module per gate from '/'-separated id prefixes; flat ids rejected."""
    out = {}
    for g in n.gates:
        if "/" not in g.id:
            raise NetlistError(
                f"flat gate id {g.id!r}: hierarchical strategy needs prefixes"
            )
        out[g.id] = g.id.split("/", 1)[0]
    return out


def partition_hierarchical(
    n: Netlist, module_map: dict[str, str] | None = None, seed: int = 0
) -> TierAssignment:
    """Separate the most-connected module pairs across tiers, then pack
    the rest for balance; modules never split.  Falls back to
    timing-aware for single-module designs."""
    rng = random.Random(seed)
    if module_map is None:
        module_map = module_map_from_names(n)
    missing = {g.id for g in n.gates} - module_map.keys()
    if missing:
        raise NetlistError(f"module map not total: {sorted(missing)[:4]}")
    modules = sorted(set(module_map.values()))
    if len(modules) < 2:
        ta = partition_timing_aware(n, seed=seed)
        return TierAssignment(
            ta.tiers, "hierarchical", seed, ta.notes + ("fallback_timing_aware",)
        )
    # inter-module net counts
    conn: dict[tuple[str, str], int] = {}
    for g in n.gates:
        dm = module_map[g.id]
        seen_mods = set()
        for sink_id, _ in n.sinks_of[g.fanout_net]:
            sm = module_map[sink_id]
            if sm != dm:
                seen_mods.add(sm)
        for sm in seen_mods:
            key = (min(dm, sm), max(dm, sm))
            conn[key] = conn.get(key, 0) + 1
    sizes = {m: 0 for m in modules}
    for gid, m in module_map.items():
        sizes[m] += 1

    side: dict[str, str] = {}
    load = {BOTTOM: 0, TOP: 0}

    def put(m, tier):
        side[m] = tier
        load[tier] += sizes[m]

    for (a, b), _cnt in sorted(conn.items(), key=lambda kv: (-kv[1], kv[0])):
        if a in side and b in side:
            continue
        if a in side:
            put(b, TOP if side[a] == BOTTOM else BOTTOM)
        elif b in side:
            put(a, TOP if side[b] == BOTTOM else BOTTOM)
        else:
            first = BOTTOM if load[BOTTOM] <= load[TOP] else TOP
            put(a, first)
            put(b, TOP if first == BOTTOM else BOTTOM)
    for m in sorted(set(modules) - side.keys(), key=lambda m: -sizes[m]):
        put(m, BOTTOM if load[BOTTOM] <= load[TOP] else TOP)

    tiers = {gid: side[module_map[gid]] for gid in module_map}
    return TierAssignment(tiers, "hierarchical", seed)


def partition_ht_aware(n: Netlist, instances, seed: int = 0) -> TierAssignment:
    """Trojan-aware split: every structure instance lands wholly on one
    tier; critical paths free of instances stay within a tier; everything
    else is random.  Instance constraints win over path constraints."""
    rng = random.Random(seed)
    timing = sta_unit_delay(n)
    notes = []

    parent: dict[str, str] = {}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def tie(gateset):
        it = iter(gateset)
        first = next(it)
        parent.setdefault(first, first)
        for gid in it:
            parent.setdefault(gid, gid)
            ra, rb = find(first), find(gid)
            if ra != rb:
                parent[rb] = ra

    instance_gates = set()
    for inst in instances:
        tie(inst.gate_ids)
        instance_gates.update(inst.gate_ids)

    # critical paths without instances are kept whole; overlapping paths
    # are demoted so the instance constraint wins
    for path in _covering_paths(n, timing):
        crit = [gid for gid in path if timing.slack[gid] == 0]
        if len(crit) < 2:
            continue
        if any(gid in instance_gates for gid in crit):
            notes.append("path_demoted_instance_overlap")
            continue
        tie(crit)

    tiers: dict[str, str] = {}
    root_tier: dict[str, str] = {}
    for g in sorted(n.gates, key=lambda g: g.id):
        if g.id in parent:
            r = find(g.id)
            if r not in root_tier:
                root_tier[r] = rng.choice((BOTTOM, TOP))
            tiers[g.id] = root_tier[r]
        else:
            tiers[g.id] = rng.choice((BOTTOM, TOP))
    return TierAssignment(tiers, "ht_aware", seed, tuple(notes))
