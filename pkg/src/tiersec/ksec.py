"""Trojan-prevention pipeline: vulnerability scoring, iterative
function-preserving rewriting toward structure templates, wire lifting,
and k-security computation under spanning-subgraph isomorphism.

A gate is k-secure when the exposed (post-lifting) graph admits at least
k same-type gates that some edge-preserving bijection onto the full
netlist could map to it; a targeted insertion then succeeds with
probability 1/k.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field, replace
from typing import Iterable, Optional

import numpy as np

from .equiv import check_equivalence
from .netlist import CellType, Gate, Netlist, NetlistError
from .sim import _eval_gate, _tail_mask, random_block
from .templates import (
    StructureInstance,
    StructureInstances,
    StructureTemplate,
    find_embeddings,
    mine_structures,
)


class KsecError(NetlistError):
    pass


# ---------------------------------------------------------------------------
# Vulnerability analysis
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class VulnerabilityReport:
    scores: dict[str, float]
    selected: tuple[str, ...]
    fraction: float
    patterns: int
    seed: int
    rarity: dict[str, float] = field(default_factory=dict)
    unobservability: dict[str, float] = field(default_factory=dict)


def vulnerability_score(
    n: Netlist,
    patterns: int = 4096,
    seed: int = 0,
    fraction: float = 0.10,
) -> VulnerabilityReport:
    """Rarity times unobservability, both estimated on one seeded block.

    Rarity is 1 - 2*min(p0, p1): balanced signals score zero, a stuck-at
    rare signal scores near one.  Unobservability is the fraction of
    patterns where toggling the gate output changes no observable.
    """
    blk = random_block(n.sim_inputs, patterns, seed)
    mask_words = blk.words
    values: dict[str, np.ndarray] = {
        name: blk.bits[i] for i, name in enumerate(blk.lanes)
    }
    mask = _tail_mask(patterns, mask_words)
    order = n.topo_order
    for g in order:
        if g.cell.kind == "DFF":
            continue
        values[g.fanout_net] = _eval_gate(g, [values[f] for f in g.fanins]) & mask

    def pop(a) -> int:
        return int(np.bitwise_count(a).sum())

    obs_targets = list(n.sim_outputs)
    topo_index = {g.id: i for i, g in enumerate(order)}

    scores = {}
    rarities = {}
    unobs = {}
    for g in n.gates:
        ones = pop(values[g.fanout_net])
        p1 = ones / patterns
        rarity = 1.0 - 2.0 * min(p1, 1.0 - p1)

        # toggle the output lane and push the flip through the cone
        changed: dict[str, np.ndarray] = {
            g.fanout_net: (~values[g.fanout_net]) & mask
        }
        for h in order[topo_index[g.id] + 1:]:
            if h.cell.kind == "DFF":
                continue
            if not any(f in changed for f in h.fanins):
                continue
            new = _eval_gate(
                h, [changed.get(f, values[f]) for f in h.fanins]
            ) & mask
            if not np.array_equal(new, values[h.fanout_net]):
                changed[h.fanout_net] = new
        diff_any = np.zeros(mask_words, dtype=np.uint64)
        for net in obs_targets:
            if net in changed:
                diff_any |= changed[net] ^ values[net]
        observability = pop(diff_any) / patterns
        rarities[g.id] = rarity
        unobs[g.id] = 1.0 - observability
        scores[g.id] = rarity * (1.0 - observability)

    k = round(fraction * len(n.gates))
    ranked = sorted(scores, key=lambda gid: (-scores[gid], gid))
    return VulnerabilityReport(
        scores, tuple(ranked[:k]), fraction, patterns, seed, rarities, unobs
    )


def coverage(n: Netlist, instances: StructureInstances) -> float:
    if not n.gates:
        return 0.0
    return len(instances.covered_gates() & {g.id for g in n.gates}) / len(n.gates)


# ---------------------------------------------------------------------------
# Function-preserving rewriting
# ---------------------------------------------------------------------------

class RewriteError(KsecError):
    pass


def _fresh(base: str, taken: set[str]) -> str:
    k = 0
    while f"{base}__r{k}" in taken:
        k += 1
    name = f"{base}__r{k}"
    taken.add(name)
    return name


def _rule_and_to_nand_inv(n, g, taken):
    if g.cell != CellType("AND", 2):
        return None
    t = _fresh(g.fanout_net, taken)
    return [
        Gate(t, CellType("NAND", 2), g.fanins, t),
        Gate(g.id, CellType("INV", 1), (t,), g.fanout_net),
    ]


def _rule_or_to_nor_inv(n, g, taken):
    if g.cell != CellType("OR", 2):
        return None
    t = _fresh(g.fanout_net, taken)
    return [
        Gate(t, CellType("NOR", 2), g.fanins, t),
        Gate(g.id, CellType("INV", 1), (t,), g.fanout_net),
    ]


def _rule_or_demorgan(n, g, taken):
    if g.cell != CellType("OR", 2):
        return None
    na, nb = _fresh(g.fanout_net, taken), _fresh(g.fanout_net, taken)
    return [
        Gate(na, CellType("INV", 1), (g.fanins[0],), na),
        Gate(nb, CellType("INV", 1), (g.fanins[1],), nb),
        Gate(g.id, CellType("NAND", 2), (na, nb), g.fanout_net),
    ]


def _rule_and_demorgan(n, g, taken):
    if g.cell != CellType("AND", 2):
        return None
    na, nb = _fresh(g.fanout_net, taken), _fresh(g.fanout_net, taken)
    return [
        Gate(na, CellType("INV", 1), (g.fanins[0],), na),
        Gate(nb, CellType("INV", 1), (g.fanins[1],), nb),
        Gate(g.id, CellType("NOR", 2), (na, nb), g.fanout_net),
    ]


def _rule_xor_nand_ladder(n, g, taken):
    if g.cell != CellType("XOR", 2):
        return None
    a, b = g.fanins
    n1 = _fresh(g.fanout_net, taken)
    n2 = _fresh(g.fanout_net, taken)
    n3 = _fresh(g.fanout_net, taken)
    return [
        Gate(n1, CellType("NAND", 2), (a, b), n1),
        Gate(n2, CellType("NAND", 2), (a, n1), n2),
        Gate(n3, CellType("NAND", 2), (b, n1), n3),
        Gate(g.id, CellType("NAND", 2), (n2, n3), g.fanout_net),
    ]


def _rule_xnor_nor_ladder(n, g, taken):
    if g.cell != CellType("XNOR", 2):
        return None
    a, b = g.fanins
    n1 = _fresh(g.fanout_net, taken)
    n2 = _fresh(g.fanout_net, taken)
    n3 = _fresh(g.fanout_net, taken)
    return [
        Gate(n1, CellType("NOR", 2), (a, b), n1),
        Gate(n2, CellType("NOR", 2), (a, n1), n2),
        Gate(n3, CellType("NOR", 2), (b, n1), n3),
        Gate(g.id, CellType("NOR", 2), (n2, n3), g.fanout_net),
    ]


def _rule_nand3_chain(n, g, taken):
    if g.cell != CellType("NAND", 3):
        return None
    a, b, c = g.fanins
    t = _fresh(g.fanout_net, taken)
    i = _fresh(g.fanout_net, taken)
    return [
        Gate(t, CellType("NAND", 2), (a, b), t),
        Gate(i, CellType("INV", 1), (t,), i),
        Gate(g.id, CellType("NAND", 2), (i, c), g.fanout_net),
    ]


def _rule_nor3_chain(n, g, taken):
    if g.cell != CellType("NOR", 3):
        return None
    a, b, c = g.fanins
    t = _fresh(g.fanout_net, taken)
    i = _fresh(g.fanout_net, taken)
    return [
        Gate(t, CellType("NOR", 2), (a, b), t),
        Gate(i, CellType("INV", 1), (t,), i),
        Gate(g.id, CellType("NOR", 2), (i, c), g.fanout_net),
    ]


def _rule_and3_chain(n, g, taken):
    if g.cell != CellType("AND", 3):
        return None
    a, b, c = g.fanins
    t = _fresh(g.fanout_net, taken)
    i = _fresh(g.fanout_net, taken)
    t2 = _fresh(g.fanout_net, taken)
    return [
        Gate(t, CellType("NAND", 2), (a, b), t),
        Gate(i, CellType("INV", 1), (t,), i),
        Gate(t2, CellType("NAND", 2), (i, c), t2),
        Gate(g.id, CellType("INV", 1), (t2,), g.fanout_net),
    ]


def _rule_aoi_nand_cone(n, g, taken):
    """OR(AND(a,b), AND(c,d)) -> NAND(NAND(a,b), NAND(c,d))."""
    if g.cell != CellType("OR", 2):
        return None
    l, r = (n.driver_of.get(f) for f in g.fanins)
    if (
        l is None or r is None or l.id == r.id
        or l.cell != CellType("AND", 2) or r.cell != CellType("AND", 2)
    ):
        return None
    t1 = _fresh(g.fanout_net, taken)
    t2 = _fresh(g.fanout_net, taken)
    return [
        Gate(t1, CellType("NAND", 2), l.fanins, t1),
        Gate(t2, CellType("NAND", 2), r.fanins, t2),
        Gate(g.id, CellType("NAND", 2), (t1, t2), g.fanout_net),
    ]


def _rule_oai_nor_cone(n, g, taken):
    """AND(OR(a,b), OR(c,d)) -> NOR(NOR(a,b), NOR(c,d))."""
    if g.cell != CellType("AND", 2):
        return None
    l, r = (n.driver_of.get(f) for f in g.fanins)
    if (
        l is None or r is None or l.id == r.id
        or l.cell != CellType("OR", 2) or r.cell != CellType("OR", 2)
    ):
        return None
    t1 = _fresh(g.fanout_net, taken)
    t2 = _fresh(g.fanout_net, taken)
    return [
        Gate(t1, CellType("NOR", 2), l.fanins, t1),
        Gate(t2, CellType("NOR", 2), r.fanins, t2),
        Gate(g.id, CellType("NOR", 2), (t1, t2), g.fanout_net),
    ]


# compound cone rules first: they match before their inputs decompose
REWRITE_RULES = (
    _rule_aoi_nand_cone,
    _rule_oai_nor_cone,
    _rule_xor_nand_ladder,
    _rule_xnor_nor_ladder,
    _rule_nand3_chain,
    _rule_nor3_chain,
    _rule_and3_chain,
    _rule_and_to_nand_inv,
    _rule_or_to_nor_inv,
    _rule_or_demorgan,
    _rule_and_demorgan,
)


def _apply_rewrite(n: Netlist, gate_id: str, new_gates: list[Gate]) -> Netlist:
    """Swap one gate for its replacement subgraph and sweep dangles."""
    gates = [g for g in n.gates if g.id != gate_id]
    gates.extend(new_gates)
    keep_nets = set(n.primary_outputs)
    # sweep gates whose output is never consumed (never touching DFFs)
    while True:
        consumed = set()
        for g in gates:
            consumed.update(g.fanins)
        dead = [
            g
            for g in gates
            if g.fanout_net not in consumed
            and g.fanout_net not in keep_nets
            and g.cell.kind != "DFF"
        ]
        if not dead:
            break
        dead_ids = {g.id for g in dead}
        gates = [g for g in gates if g.id not in dead_ids]
    return Netlist(n.name, tuple(gates), n.primary_inputs, n.primary_outputs)


@dataclass(frozen=True)
class RewriteCensus:
    iteration: int
    instance_counts: dict[str, int]
    coverage: float
    gate_count: int


def rewrite_iterate(
    n: Netlist,
    templates: list[StructureTemplate],
    vulnerable: Iterable[str],
    iterations: int,
    equivalence_mode: str | None = None,
) -> tuple[Netlist, StructureInstances, list[RewriteCensus]]:
    """Iteratively restructure logic outside preserved instances so that
    new template instances appear, favoring uncovered vulnerable gates.

    Every iteration widens the rewrite neighborhood by one hop around
    the uncovered vulnerable gates.  Instances, once mined, are locked
    verbatim; equivalence against the original is checked after every
    iteration and a violation is a hard error.
    """
    original = n
    vulnerable = set(vulnerable)
    if equivalence_mode is None:
        equivalence_mode = (
            "exhaustive" if len(n.sim_inputs) <= 14 else "random"
        )
    locked = mine_structures(n, templates)
    census_log = [
        RewriteCensus(0, locked.census(), coverage(n, locked), len(n.gates))
    ]
    for it in range(1, iterations + 1):
        locked_gates = locked.covered_gates()
        uncovered = [
            gid for gid in sorted(vulnerable)
            if gid in n.gate_by_id and gid not in locked_gates
        ]
        scope = _hop_neighborhood(n, uncovered, hops=it - 1) - locked_gates
        taken = {g.id for g in n.gates} | set(n.nets)
        for gid in sorted(scope):
            g = n.gate_by_id.get(gid)
            if g is None or g.id in locked_gates:
                continue
            for rule in REWRITE_RULES:
                new_gates = rule(n, g, set(taken))
                if new_gates is None:
                    continue
                consumed = {x.id for x in _cone_gates(n, g, new_gates)}
                if consumed & locked_gates:
                    continue  # a cone rule would swallow a preserved gate
                candidate = _apply_rewrite(n, g.id, new_gates)
                if _instances_gained(candidate, templates, locked, new_gates):
                    n = candidate
                    taken = {x.id for x in n.gates} | set(n.nets)
                    break
        locked = mine_structures(n, templates, locked=_still_valid(n, locked))
        verdict = check_equivalence(original, n, equivalence_mode,
                                    patterns=8192, seed=17)
        if verdict.status == "counterexample":
            raise RewriteError(
                f"iteration {it} broke equivalence on {verdict.counterexample}"
            )
        census_log.append(
            RewriteCensus(it, locked.census(), coverage(n, locked), len(n.gates))
        )
    return n, locked, census_log


def _still_valid(n: Netlist, instances: StructureInstances) -> StructureInstances:
    alive = {g.id for g in n.gates}
    return StructureInstances(
        inst for inst in instances if set(inst.gate_ids) <= alive
    )


def _cone_gates(n: Netlist, g: Gate, new_gates) -> list[Gate]:
    """Gates a compound rule absorbs: current fanin drivers that the
    replacement no longer references."""
    new_refs = {f for ng in new_gates for f in ng.fanins}
    out = []
    for f in g.fanins:
        d = n.driver_of.get(f)
        if d is not None and f not in new_refs:
            out.append(d)
    return out


def _instances_gained(candidate, templates, locked, new_gates) -> bool:
    new_ids = {g.id for g in new_gates}
    blocked = locked.covered_gates()
    for tpl in templates:
        for gid in sorted(new_ids):
            for emb in find_embeddings(candidate, tpl, anchor_gate=gid,
                                       forbidden=blocked):
                return True
    return False


def _hop_neighborhood(n: Netlist, seeds, hops: int) -> set[str]:
    out = set(seeds)
    frontier = set(seeds)
    for _ in range(hops):
        nxt = set()
        for gid in frontier:
            g = n.gate_by_id.get(gid)
            if g is None:
                continue
            for f in g.fanins:
                d = n.driver_of.get(f)
                if d is not None:
                    nxt.add(d.id)
            for s, _pin in n.sinks_of[g.fanout_net]:
                nxt.add(s)
        frontier = nxt - out
        out |= nxt
    return out


# ---------------------------------------------------------------------------
# Wire lifting and the exposed graph
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExposedGraph:
    netlist: Netlist
    lifted: frozenset[str]

    def __post_init__(self):
        extra = self.lifted - set(self.netlist.nets)
        if extra:
            raise KsecError(f"lifted nets not in design: {sorted(extra)[:4]}")

    def exposed_fanins(self, g: Gate) -> list[tuple[int, str]]:
        return [
            (pin, f) for pin, f in enumerate(g.fanins) if f not in self.lifted
        ]


def lift_boundaries(n: Netlist, instances: StructureInstances) -> ExposedGraph:
    lifted = set()
    for inst in instances:
        lifted.update(inst.boundary_nets)
    return ExposedGraph(n, frozenset(lifted))


def lift_wires(
    n: Netlist,
    instances: StructureInstances,
    extra_budget: int = 0,
    target_k: int | None = None,
    selected: Iterable[str] | None = None,
    scope: str = "local",
) -> tuple[ExposedGraph, int]:
    """Lift all instance boundary wires, then greedily lift the wire
    that most raises the minimum candidate count over the selected
    gates, until the target is reached or the budget runs out."""
    exposed = lift_boundaries(n, instances)
    sel = sorted(selected) if selected else sorted(g.id for g in n.gates)
    k_now = _min_candidates(n, exposed, sel)
    budget = extra_budget
    while budget > 0 and (target_k is None or k_now < target_k):
        best = None
        for net in _liftable(n, exposed, sel, scope):
            trial = ExposedGraph(n, exposed.lifted | {net})
            k_trial = _min_candidates(n, trial, sel)
            # maximize gain; ties resolved toward the lowest net name
            if best is None or k_trial > best[0] or (
                k_trial == best[0] and net < best[1]
            ):
                best = (k_trial, net, trial)
        if best is None:
            break
        k_now = best[0]
        exposed = best[2]
        budget -= 1
    return exposed, k_now


def _liftable(n: Netlist, exposed: ExposedGraph, selected, scope) -> list[str]:
    remaining = [x for x in n.nets if x not in exposed.lifted]
    if scope == "all":
        return sorted(remaining)
    near = _hop_neighborhood(n, selected, hops=2)
    out = []
    for net in remaining:
        d = n.driver_of.get(net)
        if d is not None and d.id in near:
            out.append(net)
            continue
        if any(s in near for s, _ in n.sinks_of[net]):
            out.append(net)
    return sorted(out)


# ---------------------------------------------------------------------------
# k-security computation
# ---------------------------------------------------------------------------

EXACT_SIZE_GUARD = 2000


def _edge_model(n: Netlist, exposed: Optional[ExposedGraph]):
    """Directed multigraph: gate->gate and pi->gate edge multiplicities.

    ``exposed=None`` yields the full-netlist edges (the embedding target).
    """
    gate_edges: dict[tuple[str, str], int] = {}
    pi_edges: dict[tuple[str, str], int] = {}
    pis = set(n.primary_inputs)
    for g in n.gates:
        fanins = (
            [f for _pin, f in exposed.exposed_fanins(g)]
            if exposed is not None
            else list(g.fanins)
        )
        for f in fanins:
            d = n.driver_of.get(f)
            if d is not None:
                key = (d.id, g.id)
                gate_edges[key] = gate_edges.get(key, 0) + 1
            elif f in pis:
                key = (f, g.id)
                pi_edges[key] = pi_edges.get(key, 0) + 1
    return gate_edges, pi_edges


class _Feasibility:
    """Pairwise u->g feasibility under iterated local consistency."""

    def __init__(self, n: Netlist, exposed: ExposedGraph):
        self.n = n
        self.gids = sorted(g.id for g in n.gates)
        self.type_of = {g.id: g.cell for g in n.gates}
        h_gate, h_pi = _edge_model(n, exposed)
        g_gate, g_pi = _edge_model(n, None)
        self.h_out: dict[str, dict[str, int]] = {x: {} for x in self.gids}
        self.h_in: dict[str, dict[str, int]] = {x: {} for x in self.gids}
        for (u, v), m in h_gate.items():
            self.h_out[u][v] = m
            self.h_in[v][u] = m
        self.g_out: dict[str, dict[str, int]] = {x: {} for x in self.gids}
        self.g_in: dict[str, dict[str, int]] = {x: {} for x in self.gids}
        for (u, v), m in g_gate.items():
            self.g_out[u][v] = m
            self.g_in[v][u] = m
        self.h_pi_in: dict[str, dict[str, int]] = {x: {} for x in self.gids}
        self.g_pi_in: dict[str, dict[str, int]] = {x: {} for x in self.gids}
        for (p, v), m in h_pi.items():
            self.h_pi_in[v][p] = m
        for (p, v), m in g_pi.items():
            self.g_pi_in[v][p] = m
        self.feasible: dict[str, set[str]] = {}
        for u in self.gids:
            self.feasible[u] = {
                g for g in self.gids if self.type_of[g] == self.type_of[u]
            }
        self._refine()

    def _neighbor_embeds(self, h_adj: dict[str, int], g_adj: dict[str, int]) -> bool:
        """Can the H-neighbor multiset inject into the G-neighbor multiset
        through currently-feasible images?  Kuhn's matching over expanded
        capacity units (all degrees are small)."""
        lefts = []
        for w, m in h_adj.items():
            lefts.extend([w] * m)
        if not lefts:
            return True
        units = []
        for w, m in g_adj.items():
            units.extend((w, k) for k in range(m))
        if len(lefts) > len(units):
            return False
        owner: dict[tuple[str, int], int] = {}

        def augment(i, visited):
            feas = self.feasible[lefts[i]]
            for unit in units:
                if unit[0] not in feas or unit in visited:
                    continue
                visited.add(unit)
                j = owner.get(unit)
                if j is None or augment(j, visited):
                    owner[unit] = i
                    return True
            return False

        for i in range(len(lefts)):
            if not augment(i, set()):
                return False
        return True

    def _ok(self, u: str, g: str) -> bool:
        # PIs are fixed points: exposed pi edges must exist at g
        for p, m in self.h_pi_in[u].items():
            if self.g_pi_in[g].get(p, 0) < m:
                return False
        return self._neighbor_embeds(
            self.h_out[u], self.g_out[g]
        ) and self._neighbor_embeds(self.h_in[u], self.g_in[g])

    def _refine(self):
        changed = True
        while changed:
            changed = False
            for u in self.gids:
                drop = [g for g in self.feasible[u] if not self._ok(u, g)]
                for g in drop:
                    self.feasible[u].remove(g)
                    changed = True

    def candidates_of(self) -> dict[str, set[str]]:
        """netlist gate g -> exposed gates u that may map onto it."""
        out: dict[str, set[str]] = {g: set() for g in self.gids}
        for u in self.gids:
            for g in self.feasible[u]:
                out[g].add(u)
        return out


def _complete_bijection(feas: _Feasibility, u0: str, g0: str) -> bool:
    """Backtracking search for a full embedding with u0 -> g0 pinned."""
    if g0 not in feas.feasible[u0]:
        return False
    order = sorted(feas.gids, key=lambda u: (len(feas.feasible[u]), u))
    order.remove(u0)
    order.insert(0, u0)
    assign: dict[str, str] = {}
    taken: set[str] = set()

    def consistent(u, g):
        for w, m in feas.h_out[u].items():
            if w in assign and feas.g_out[g].get(assign[w], 0) < m:
                return False
        for w, m in feas.h_in[u].items():
            if w in assign and feas.g_in[g].get(assign[w], 0) < m:
                return False
        return True

    def rec(i):
        if i == len(order):
            return True
        u = order[i]
        pool = [g0] if u == u0 else sorted(feas.feasible[u] - taken)
        for g in pool:
            if g in taken or not consistent(u, g):
                continue
            assign[u] = g
            taken.add(g)
            if rec(i + 1):
                return True
            del assign[u]
            taken.remove(g)
        return False

    return rec(0)


@dataclass(frozen=True)
class KSecurityReport:
    candidate_counts: dict[str, int]  # per selected gate
    candidate_sets: dict[str, tuple[str, ...]]
    k_exact: Optional[int]
    k_upper: Optional[int]
    method: str
    selected: tuple[str, ...]
    instances: StructureInstances = StructureInstances(())
    tier_census: dict[str, dict[str, int]] = field(default_factory=dict)
    coverage: float = 0.0

    @property
    def k(self) -> int:
        return self.k_exact if self.k_exact is not None else (self.k_upper or 0)

    def to_json(self) -> str:
        import json

        return json.dumps(
            {
                "k_exact": self.k_exact,
                "k_upper": self.k_upper,
                "method": self.method,
                "candidate_counts": dict(sorted(self.candidate_counts.items())),
                "selected": list(self.selected),
                "tier_census": self.tier_census,
                "coverage": self.coverage,
                "instance_census": self.instances.census(),
            },
            sort_keys=True,
            indent=1,
        )


def security_level(
    n: Netlist,
    exposed: ExposedGraph,
    selected: Iterable[str],
    mode: str = "refine",
    instances: StructureInstances = StructureInstances(()),
) -> KSecurityReport:
    """Candidate counts for the selected gates under spanning-subgraph
    isomorphism of the exposed graph into the full netlist.

    ``refine`` gives an upper bound from iterated local consistency;
    ``exact`` confirms each candidate with a backtracking embedding and
    refuses designs above the size guard.
    """
    selected = tuple(sorted(set(selected)))
    if exposed.netlist is not n:
        raise KsecError("exposed graph built from a different netlist")
    if mode not in ("refine", "exact"):
        raise ValueError(f"unknown mode {mode!r}")
    if mode == "exact" and len(n.gates) > EXACT_SIZE_GUARD:
        raise KsecError(
            f"{len(n.gates)} gates exceed the exact-mode guard "
            f"({EXACT_SIZE_GUARD}); use refine"
        )
    feas = _Feasibility(n, exposed)
    upper = feas.candidates_of()
    counts_upper = {g: len(upper[g]) for g in selected}
    if mode == "refine":
        sets = {g: tuple(sorted(upper[g])) for g in selected}
        k_upper = min(counts_upper.values(), default=0)
        return KSecurityReport(
            counts_upper, sets, None, k_upper, "refine", selected,
            instances, {}, coverage(n, instances),
        )
    counts = {}
    sets = {}
    for g in selected:
        confirmed = [
            u for u in sorted(upper[g]) if _complete_bijection(feas, u, g)
        ]
        counts[g] = len(confirmed)
        sets[g] = tuple(confirmed)
    k_exact = min(counts.values(), default=0)
    k_upper = min(counts_upper.values(), default=0)
    return KSecurityReport(
        counts, sets, k_exact, k_upper, "exact", selected,
        instances, {}, coverage(n, instances),
    )


def _min_candidates(n: Netlist, exposed: ExposedGraph, selected) -> int:
    feas = _Feasibility(n, exposed)
    cand = feas.candidates_of()
    return min((len(cand[g]) for g in selected), default=0)


def gate_type_census(n: Netlist) -> dict[str, int]:
    out: dict[str, int] = {}
    for g in n.gates:
        out[str(g.cell)] = out.get(str(g.cell), 0) + 1
    return dict(sorted(out.items()))


def type_count_bound(n: Netlist) -> int:
    """Fully-lifted upper bound: the scarcest cell type's count."""
    census = gate_type_census(n)
    return min(census.values(), default=0)


def ht_success_probability(
    report: KSecurityReport, trials: int = 10_000, seed: int = 0
) -> float:
    """Monte Carlo targeted-insertion adversary: pick a selected gate,
    guess uniformly among its candidates, succeed on the true gate."""
    if not report.selected:
        raise KsecError("no selected gates")
    if any(c < 1 for c in report.candidate_counts.values()):
        raise KsecError("zero-candidate gate; the identity embedding is missing")
    rng = random.Random(seed)
    hits = 0
    sel = list(report.selected)
    for _ in range(trials):
        g = sel[rng.randrange(len(sel))]
        cands = report.candidate_sets[g]
        if rng.choice(cands) == g:
            hits += 1
    return hits / trials


def tier_level(report: KSecurityReport, assignment) -> int:
    """Sum of the scarcest per-tier structure counts (bottom plus top)."""
    census: dict[str, dict[str, int]] = {}
    overall = report.instances.census()
    for inst in report.instances:
        tiers = {assignment.tiers[g] for g in inst.gate_ids}
        if len(tiers) != 1:
            raise KsecError(
                f"instance {inst.template_id}:{inst.gate_ids[0]} spans tiers"
            )
        tier = tiers.pop()
        census.setdefault(inst.template_id, {"Bottom": 0, "Top": 0})
        census[inst.template_id][tier] += 1
    if not overall:
        return 0
    for t in overall:
        census.setdefault(t, {"Bottom": 0, "Top": 0})
    bot = min(c["Bottom"] for c in census.values())
    top = min(c["Top"] for c in census.values())
    return bot + top
