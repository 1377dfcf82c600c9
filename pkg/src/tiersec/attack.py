"""Fab-side adversary: recover the hidden driver-to-sink port pairing
from an exposure view.

Three heuristics drive the recovery: one-to-one mapping (assignment
instead of independent guesses), port proximity with an orientation
tie-break, and exclusion of pairings that would close combinational
loops.  A uniform random baseline quantifies the lift.
"""

from __future__ import annotations

import math
import random
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import linear_sum_assignment

from .f2f import B2T, T2B, ExposureView
from .layout import BOTTOM, TOP

GREEDY_THRESHOLD = 3000  # above this many ports per direction, skip Hungarian


@dataclass
class AttackOptions:
    use_loop_pruning: bool = True
    use_orientation: bool = True
    use_switchbox_groups: bool = True  # confine candidates within boxes
    ip_constraints: Optional[dict] = None  # driver id -> allowed sink ids
    greedy_threshold: int = GREEDY_THRESHOLD
    max_repair_rounds: int = 0  # 0: 4 * ports


@dataclass(frozen=True)
class CandidateEntry:
    sink_id: str
    distance: float
    loop_excluded: bool = False


@dataclass(frozen=True)
class CandidateTable:
    ranked: dict[str, tuple[CandidateEntry, ...]]  # driver id -> candidates
    ip_confined: frozenset[str]


@dataclass(frozen=True)
class RecoveredMapping:
    pairs: dict[str, str]
    confidence: dict[str, float]
    seed: int
    heuristics: tuple[str, ...]
    runtime_s: float
    relaxed: tuple[str, ...] = ()  # drivers where loop pruning was lifted

    @property
    def is_relaxed(self) -> bool:
        return bool(self.relaxed)


class _ViewGraph:
    """Combinational successor graph of the view with pluggable port
    pairings; used for loop exclusion."""

    def __init__(self, view: ExposureView):
        self.kind = {}
        self.succ_static: dict[str, list[str]] = {}
        self.port_sinks: dict[str, list[str]] = {}  # sink port id -> gate ids
        self.driver_gate_of_port: dict[str, str] = {}
        net_driver = {}
        for tier in (BOTTOM, TOP):
            for g in view.tier_gates[tier]:
                self.kind[g["id"]] = g["kind"]
                net_driver[g["fanout"].split(":", 1)[1]] = g["id"]
        for p in view.ports:
            if p["role"] == "driver":
                net = p["attached"].split(":", 1)[1]
                self.driver_gate_of_port[p["id"]] = net_driver[net]
        for tier in (BOTTOM, TOP):
            for g in view.tier_gates[tier]:
                if self.kind[g["id"]] == "DFF":
                    continue
                for ref in g["fanins"]:
                    kind, name = ref.split(":", 1)
                    if kind == "net":
                        d = net_driver.get(name)
                        if d is not None and self.kind[d] != "DFF":
                            self.succ_static.setdefault(d, []).append(g["id"])
                    else:
                        self.port_sinks.setdefault(name, []).append(g["id"])

    def find_cycle_pairs(self, pairs: dict[str, str]) -> Optional[set]:
        """Return the set of (driver,sink) pairs on some cycle, or None."""
        succ = {g: list(s) for g, s in self.succ_static.items()}
        edge_origin = {}
        for did, sid in pairs.items():
            src = self.driver_gate_of_port[did]
            if self.kind[src] == "DFF":
                continue
            for tgt in self.port_sinks.get(sid, ()):
                succ.setdefault(src, []).append(tgt)
                edge_origin[(src, tgt)] = (did, sid)
        # iterative DFS cycle detection
        WHITE, GREY, BLACK = 0, 1, 2
        color = {g: WHITE for g in self.kind}
        parent_edge = {}
        for root in sorted(self.kind):
            if color[root] != WHITE:
                continue
            stack = [(root, iter(succ.get(root, ())))]
            color[root] = GREY
            while stack:
                node, it = stack[-1]
                advanced = False
                for nxt in it:
                    if color.get(nxt, BLACK) == WHITE:
                        color[nxt] = GREY
                        parent_edge[nxt] = node
                        stack.append((nxt, iter(succ.get(nxt, ()))))
                        advanced = True
                        break
                    if color.get(nxt) == GREY:
                        # walk the grey stack back to nxt
                        cycle_nodes = [node]
                        cur = node
                        while cur != nxt:
                            cur = parent_edge[cur]
                            cycle_nodes.append(cur)
                        cycle_nodes.reverse()
                        cycle_nodes.append(node)
                        involved = set()
                        for a, b in zip(cycle_nodes, cycle_nodes[1:]):
                            if (a, b) in edge_origin:
                                involved.add(edge_origin[(a, b)])
                        # close the loop edge nxt-> is already included
                        return involved or None
                if not advanced:
                    color[node] = BLACK
                    stack.pop()
        return None


def _ports_by_direction(view: ExposureView):
    out = {B2T: ([], []), T2B: ([], [])}
    for p in view.ports:
        bucket = out[p["direction"]][0 if p["role"] == "driver" else 1]
        bucket.append((p["id"], tuple(p["site"])))
    for drivers, sinks in out.values():
        drivers.sort()
        sinks.sort()
    return out


def _orientation_scores(view, graph, drivers, sinks):
    """cosine of the angle between (port -> sink) and the driver's
    gate-to-port direction; used only to break distance ties."""
    gate_pos = {}
    for tier in (BOTTOM, TOP):
        gate_pos.update(view.placements[tier])
    scores = np.zeros((len(drivers), len(sinks)))
    net_driver_gate = graph.driver_gate_of_port
    for i, (did, dsite) in enumerate(drivers):
        g = net_driver_gate.get(did)
        if g is None or g not in gate_pos:
            continue
        gx, gy = gate_pos[g]
        vx, vy = dsite[0] - gx, dsite[1] - gy
        norm = math.hypot(vx, vy)
        if norm == 0:
            continue
        for j, (_sid, ssite) in enumerate(sinks):
            wx, wy = ssite[0] - dsite[0], ssite[1] - dsite[1]
            wn = math.hypot(wx, wy)
            if wn:
                scores[i, j] = (vx * wx + vy * wy) / (norm * wn)
    return scores


def _assign(cost: np.ndarray, greedy: bool):
    if not greedy:
        rows, cols = linear_sum_assignment(cost)
        return dict(zip(rows.tolist(), cols.tolist()))
    # row-wise nearest-first greedy for very large instances
    n = cost.shape[0]
    order = np.argsort(cost.min(axis=1), kind="stable")
    taken = set()
    out = {}
    for i in order.tolist():
        ranked = np.argsort(cost[i], kind="stable")
        for j in ranked.tolist():
            if j not in taken:
                taken.add(j)
                out[i] = j
                break
    return out


def proximity_attack(
    view: ExposureView, opts: AttackOptions | None = None, seed: int = 0
) -> tuple[RecoveredMapping, CandidateTable]:
    """Minimum-total-distance pairing per direction, then cycle repair.

    Switchbox membership, when present and enabled, confines candidates
    to within each box.  Deterministic for a fixed seed.
    """
    opts = opts or AttackOptions()
    t0 = time.perf_counter()
    graph = _ViewGraph(view)
    dirs = _ports_by_direction(view)
    heuristics = ["unique_mapping", "proximity"]
    if opts.use_orientation:
        heuristics.append("orientation")
    if opts.use_loop_pruning:
        heuristics.append("loop_exclusion")

    ip = opts.ip_constraints or {}
    if ip:
        heuristics.append("ip_confinement")
    groups: list[tuple[list, list]] = []
    grouped_drivers = set()
    if (
        opts.use_switchbox_groups
        and view.switchbox_membership
    ):
        heuristics.append("switchbox_confinement")
        site = {p["id"]: tuple(p["site"]) for p in view.ports}
        for m in view.switchbox_membership:
            g_drv = [(i, site[i]) for i in m["driver_port_ids"]]
            g_snk = [(i, site[i]) for i in m["sink_port_ids"]]
            groups.append((sorted(g_drv), sorted(g_snk)))
            grouped_drivers.update(i for i, _ in g_drv)
    for direction in (B2T, T2B):
        drivers, sinks = dirs[direction]
        rest_d = [d for d in drivers if d[0] not in grouped_drivers]
        rest_s_ids = {
            s[0]
            for group in groups
            for s in group[1]
        }
        rest_s = [s for s in sinks if s[0] not in rest_s_ids]
        if rest_d:
            groups.append((rest_d, rest_s))

    pairs: dict[str, str] = {}
    ranked_table: dict[str, list[CandidateEntry]] = {}
    confidence: dict[str, float] = {}
    alternatives: dict[str, list[tuple[float, str]]] = {}

    for drivers, sinks in groups:
        if not drivers:
            continue
        if len(drivers) != len(sinks):
            raise ValueError("driver/sink count mismatch within a group")
        cost = np.zeros((len(drivers), len(sinks)))
        for i, (_did, dsite) in enumerate(drivers):
            for j, (_sid, ssite) in enumerate(sinks):
                cost[i, j] = math.dist(dsite, ssite)
        if opts.use_orientation:
            cost = cost - 1e-9 * _orientation_scores(view, graph, drivers, sinks)
        for i, (did, _) in enumerate(drivers):
            if did in ip:
                allowed = ip[did]
                for j, (sid, _s) in enumerate(sinks):
                    if sid not in allowed:
                        cost[i, j] = 1e9
        assignment = _assign(cost, len(drivers) > opts.greedy_threshold)
        for i, (did, _dsite) in enumerate(drivers):
            row = sorted(
                (float(cost[i, j]), sinks[j][0]) for j in range(len(sinks))
            )
            ranked_table[did] = [
                CandidateEntry(sid, dist) for dist, sid in row
            ]
            alternatives[did] = row
            j = assignment[i]
            pairs[did] = sinks[j][0]
            chosen = float(cost[i, j])
            runner = next((d for d, s in row if s != sinks[j][0]), chosen)
            confidence[did] = max(
                0.0, min(1.0, (runner - chosen) / (runner + 1e-9))
            )

    relaxed: set[str] = set()
    if opts.use_loop_pruning:
        max_rounds = opts.max_repair_rounds or 4 * max(1, len(pairs))
        excluded: dict[str, set[str]] = {d: set() for d in pairs}
        for _ in range(max_rounds):
            on_cycle = graph.find_cycle_pairs(pairs)
            if not on_cycle:
                break
            # swap the cycle pairing with the cheapest repair
            best = None
            holder = {s: d for d, s in pairs.items()}
            for did, sid in sorted(on_cycle):
                cur_cost = next(
                    c for c, s in alternatives[did] if s == sid
                )
                for alt_cost, alt_sid in alternatives[did]:
                    if alt_sid == sid or alt_sid in excluded[did]:
                        continue
                    other = holder[alt_sid]
                    other_costs = dict(
                        (s, c) for c, s in alternatives[other]
                    )
                    if sid not in other_costs:
                        continue
                    delta = (
                        alt_cost
                        + other_costs[sid]
                        - cur_cost
                        - other_costs[alt_sid]
                    )
                    cand = (delta, did, sid, alt_sid, other)
                    if best is None or cand < best:
                        best = cand
                    break  # nearest non-excluded alternative only
            if best is None:
                # every pair on the cycle is stuck: relax pruning there
                relaxed.update(d for d, _ in on_cycle)
                break
            _, did, sid, alt_sid, other = best
            excluded[did].add(sid)
            pairs[did], pairs[other] = alt_sid, sid
        else:
            relaxed.update(d for d, _ in (graph.find_cycle_pairs(pairs) or ()))
        for did, sinks_excl in excluded.items():
            if sinks_excl:
                ranked_table[did] = [
                    CandidateEntry(e.sink_id, e.distance,
                                   e.sink_id in sinks_excl)
                    for e in ranked_table[did]
                ]

    table = CandidateTable(
        {d: tuple(v) for d, v in ranked_table.items()},
        frozenset(ip.keys()),
    )
    mapping = RecoveredMapping(
        pairs=pairs,
        confidence=confidence,
        seed=seed,
        heuristics=tuple(heuristics),
        runtime_s=time.perf_counter() - t0,
        relaxed=tuple(sorted(relaxed)),
    )
    return mapping, table


def random_guess_baseline(view: ExposureView, seed: int = 0) -> RecoveredMapping:
    """Uniform direction-respecting bijection; acyclicity not guaranteed."""
    t0 = time.perf_counter()
    rng = random.Random(seed)
    dirs = _ports_by_direction(view)
    pairs = {}
    for direction in (B2T, T2B):
        drivers, sinks = dirs[direction]
        sink_ids = [s[0] for s in sinks]
        rng.shuffle(sink_ids)
        for (did, _), sid in zip(drivers, sink_ids):
            pairs[did] = sid
    return RecoveredMapping(
        pairs=pairs,
        confidence={d: 0.0 for d in pairs},
        seed=seed,
        heuristics=("random_baseline",),
        runtime_s=time.perf_counter() - t0,
    )
