"""End-user adversary: oracle-guided key recovery on obfuscated
switchboxes.

Each switchbox sink pin becomes a 4-way multiplexer over the box's
driver nets, keyed by two select bits; a full design therefore carries
eight key bits per box.  The attack iterates distinguishing input
patterns on a double-keyed miter until no key disagreement remains, then
verifies the recovered design against the oracle.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, Optional

from .cnf import VarPool, gate_clauses, mux2_clauses
from .equiv import check_equivalence
from .f2f import B2T, END_USER, ExposureView, F2FPlan, reassemble
from .layout import BOTTOM, TOP
from .netlist import Netlist
from .sat import CdclSolver


@dataclass(frozen=True)
class KeyedSwitchbox:
    box_id: int
    direction: str
    driver_port_ids: tuple[str, ...]  # 4 ids, canonical view order
    sink_port_ids: tuple[str, ...]

    @property
    def key_names(self) -> tuple[str, ...]:
        # two select bits per sink pin
        return tuple(
            f"k{self.box_id}_{j}_{b}" for j in range(4) for b in (0, 1)
        )


@dataclass(frozen=True)
class KeyedSwitchboxModel:
    """Locked view of the design: both tiers' logic plus keyed crossbars.

    ``resolved_pairs`` carries the driver->sink pairing for any via that
    is not inside a switchbox, reflecting the strong (conservative)
    assumption that the end-user resolves all plain RDL routing.
    """

    view: ExposureView
    boxes: tuple[KeyedSwitchbox, ...]
    resolved_pairs: dict[str, str]
    permutation_constraints: bool = True

    @property
    def key_names(self) -> tuple[str, ...]:
        return tuple(k for b in self.boxes for k in b.key_names)


def lock_from_view(
    view: ExposureView, resolved_pairs: Optional[dict] = None,
    permutation_constraints: bool = True,
) -> KeyedSwitchboxModel:
    if view.switchbox_membership is None:
        raise ValueError("switchbox membership missing: expose for EndUser")
    boxes = tuple(
        KeyedSwitchbox(
            i,
            m["direction"],
            tuple(m["driver_port_ids"]),
            tuple(m["sink_port_ids"]),
        )
        for i, m in enumerate(view.switchbox_membership)
    )
    boxed_drivers = {d for b in boxes for d in b.driver_port_ids}
    resolved = dict(resolved_pairs or {})
    all_drivers = {p["id"] for p in view.ports if p["role"] == "driver"}
    missing = all_drivers - boxed_drivers - resolved.keys()
    if missing:
        raise ValueError(
            f"unresolved vias outside switchboxes: {sorted(missing)[:4]}; "
            "pass resolved_pairs for the remainder"
        )
    return KeyedSwitchboxModel(view, boxes, resolved, permutation_constraints)


def _view_netlist_clauses(
    model: KeyedSwitchboxModel, pool: VarPool, prefix: str, key_prefix: str
):
    """Tseitin clauses for one locked-design copy.

    ``prefix`` namespaces the copy's wires; ``key_prefix`` selects which
    key vector the copy is driven by, so miter copies can carry distinct
    keys while constraint copies share them.
    """
    view = model.view
    clauses = []

    def v(name: str) -> int:
        return pool.var(prefix + name)

    def key_var(name: str) -> int:
        return pool.var(key_prefix + name)

    net_driver_port: dict[str, str] = {}  # driver port id -> net name
    for p in view.ports:
        if p["role"] == "driver":
            net_driver_port[p["id"]] = p["attached"].split(":", 1)[1]

    # sink-side port wires: either resolved buffers or keyed muxes
    for did, sid in model.resolved_pairs.items():
        clauses.extend(
            gate_clauses("BUF", v("port_wire:" + sid),
                         [v("net:" + net_driver_port[did])])
        )
    for box in model.boxes:
        driver_vars = [v("net:" + net_driver_port[d]) for d in box.driver_port_ids]
        for j, sid in enumerate(box.sink_port_ids):
            s0 = key_var(f"k{box.box_id}_{j}_0")
            s1 = key_var(f"k{box.box_id}_{j}_1")
            m0 = pool.fresh()
            m1 = pool.fresh()
            out = v("port_wire:" + sid)
            clauses.extend(mux2_clauses(m0, s0, driver_vars[0], driver_vars[1]))
            clauses.extend(mux2_clauses(m1, s0, driver_vars[2], driver_vars[3]))
            clauses.extend(mux2_clauses(out, s1, m0, m1))

    def ref_var(ref: str) -> int:
        kind, name = ref.split(":", 1)
        if kind == "net":
            return v("net:" + name)
        return v("port_wire:" + name)

    inputs = {}
    outputs = {}
    dff_q_nets = set()
    for tier in (BOTTOM, TOP):
        for g in view.tier_gates[tier]:
            if g["kind"] == "DFF":
                dff_q_nets.add(g["fanout"].split(":", 1)[1])
    for name in view.primary_inputs:
        inputs[name] = v("net:" + name)
    for name in sorted(dff_q_nets):
        inputs[name] = v("net:" + name)
    for tier in (BOTTOM, TOP):
        for g in view.tier_gates[tier]:
            if g["kind"] == "DFF":
                outputs[g["id"] + ".D"] = ref_var(g["fanins"][0])
                continue
            clauses.extend(
                gate_clauses(
                    g["kind"],
                    ref_var(g["fanout"]),
                    [ref_var(r) for r in g["fanins"]],
                )
            )
    for name in view.primary_outputs:
        outputs[name] = v("net:" + name)
    return inputs, outputs, clauses


def _perm_constraint_clauses(model: KeyedSwitchboxModel, pool: VarPool,
                             key_prefix: str):
    """Selects within a box must be pairwise distinct (keys encode S4)."""
    clauses = []
    for box in model.boxes:
        sels = [
            (pool.var(f"{key_prefix}k{box.box_id}_{j}_0"),
             pool.var(f"{key_prefix}k{box.box_id}_{j}_1"))
            for j in range(4)
        ]
        for a in range(4):
            for b in range(a + 1, 4):
                (a0, a1), (b0, b1) = sels[a], sels[b]
                # not (a0 == b0 and a1 == b1), via two fresh xor vars
                x0, x1 = pool.fresh(), pool.fresh()
                clauses.extend(gate_clauses("XOR", x0, [a0, b0]))
                clauses.extend(gate_clauses("XOR", x1, [a1, b1]))
                clauses.append([x0, x1])
    return clauses


@dataclass(frozen=True)
class SatAttackResult:
    status: str  # "key_found" | "timeout"
    key: Optional[dict[str, bool]]
    iterations: int
    runtime_s: float
    equivalence_verified: bool = False
    keyspace_bound: Optional[int] = None
    recovered_pairs: Optional[dict[str, str]] = None


def key_to_pairs(model: KeyedSwitchboxModel, key: dict[str, bool]) -> dict[str, str]:
    """Decode select bits into a driver->sink port mapping."""
    pairs = dict(model.resolved_pairs)
    for box in model.boxes:
        for j, sid in enumerate(box.sink_port_ids):
            s0 = key[f"k{box.box_id}_{j}_0"]
            s1 = key[f"k{box.box_id}_{j}_1"]
            idx = (2 if s1 else 0) + (1 if s0 else 0)
            pairs[box.driver_port_ids[idx]] = sid
    return pairs


def sat_attack(
    model: KeyedSwitchboxModel,
    oracle: Callable[[dict[str, int]], dict[str, int]],
    original: Netlist,
    plan: F2FPlan,
    max_iterations: int = 2000,
    time_budget_s: float = 600.0,
) -> SatAttackResult:
    """Oracle-guided iterative key pruning on a double-keyed miter.

    ``oracle`` answers input assignments (PIs plus DFF outputs) with
    observable outputs (POs plus DFF inputs).  The recovered key is
    verified by reassembling the design and checking equivalence.
    """
    t0 = time.perf_counter()
    pool = VarPool()
    solver = CdclSolver()

    in1, out1, cls1 = _view_netlist_clauses(model, pool, "c1:", "key1:")
    in2, out2, cls2 = _view_netlist_clauses(model, pool, "c2:", "key2:")
    for cl in cls1 + cls2:
        solver.add_clause(cl)
    if model.permutation_constraints:
        for kp in ("key1:", "key2:"):
            for cl in _perm_constraint_clauses(model, pool, kp):
                solver.add_clause(cl)
    # shared inputs
    for name in in1:
        solver.add_clause([-in1[name], in2[name]])
        solver.add_clause([in1[name], -in2[name]])
    # miter: some observable differs between the two keyed copies
    diff_lits = []
    for name in out1:
        x = pool.fresh()
        for cl in gate_clauses("XOR", x, [out1[name], out2[name]]):
            solver.add_clause(cl)
        diff_lits.append(x)
    # activation literal: assuming it forces some observable to differ
    miter_gate = pool.fresh()
    solver.add_clause([-miter_gate] + diff_lits)

    key_names = model.key_names
    n_boxes = len(model.boxes)
    iterations = 0

    def translate_response(resp: dict[str, int]) -> dict[str, int]:
        out = {name: resp[name] for name in model.view.primary_outputs}
        for g in original.dffs:
            out[g.id + ".D"] = resp[g.fanins[0]]
        return out

    while True:
        if time.perf_counter() - t0 > time_budget_s or iterations >= max_iterations:
            space = 24**n_boxes if model.permutation_constraints else 256**n_boxes
            return SatAttackResult(
                "timeout",
                None,
                iterations,
                time.perf_counter() - t0,
                keyspace_bound=max(1, space - iterations),
            )
        if not solver.solve(assumptions=[miter_gate]):
            break  # no distinguishing pattern remains
        iterations += 1
        dip = {name: int(solver.model[in1[name]]) for name in in1}
        response = translate_response(oracle(dip))
        # pin both key vectors to agree with the oracle on this pattern
        for tag, key_prefix in (("a", "key1:"), ("b", "key2:")):
            invars, outvars, clauses = _view_netlist_clauses(
                model, pool, f"dip{iterations}{tag}:", key_prefix
            )
            for cl in clauses:
                solver.add_clause(cl)
            for name, bit in dip.items():
                solver.add_clause([invars[name] if bit else -invars[name]])
            for name, bit in response.items():
                solver.add_clause([outvars[name] if bit else -outvars[name]])

    # extract any surviving key (copy 1)
    if not solver.solve():
        return SatAttackResult(
            "timeout", None, iterations, time.perf_counter() - t0,
            keyspace_bound=0,
        )
    key = {
        name: solver.model[pool.var("key1:" + name)] for name in key_names
    }
    pairs = key_to_pairs(model, key)
    res = reassemble(original, plan, pairs)
    verified = False
    if res.netlist is not None:
        n_inputs = len(original.sim_inputs)
        mode = "exhaustive" if n_inputs <= 16 else "random"
        verdict = check_equivalence(original, res.netlist, mode, patterns=20_000)
        verified = verdict.status == "equivalent" or (
            mode == "random" and verdict.status == "unknown"
        )
    return SatAttackResult(
        "key_found",
        key,
        iterations,
        time.perf_counter() - t0,
        equivalence_verified=verified,
        recovered_pairs=pairs,
    )


def make_oracle(n: Netlist) -> Callable[[dict[str, int]], dict[str, int]]:
    """Single-pattern query interface over the true design."""
    from .sim import simulate_naive

    def query(assignment: dict[str, int]) -> dict[str, int]:
        missing = set(n.sim_inputs) - assignment.keys()
        if missing:
            raise ValueError(f"oracle query missing inputs {sorted(missing)[:4]}")
        return simulate_naive(n, assignment)

    return query
