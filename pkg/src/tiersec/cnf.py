"""Tseitin encoding of gate-level netlists into CNF, plus miter assembly
for equivalence checking and key-recovery attacks.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .netlist import Netlist, NetlistError
from .sat import CdclSolver


@dataclass
class VarPool:
    next_var: int = 1
    names: dict = field(default_factory=dict)

    def var(self, name) -> int:
        v = self.names.get(name)
        if v is None:
            v = self.next_var
            self.next_var += 1
            self.names[name] = v
        return v

    def fresh(self) -> int:
        v = self.next_var
        self.next_var += 1
        return v


def gate_clauses(kind: str, out: int, ins: list[int]) -> list[list[int]]:
    """CNF for ``out = kind(ins)`` in standard Tseitin form."""
    if kind in ("BUF", "DFF"):
        return [[-ins[0], out], [ins[0], -out]]
    if kind == "INV":
        return [[ins[0], out], [-ins[0], -out]]
    if kind in ("AND", "NAND"):
        o = out if kind == "AND" else -out
        cl = [[x, -o] for x in ins]
        cl.append([-x for x in ins] + [o])
        return cl
    if kind in ("OR", "NOR"):
        o = out if kind == "OR" else -out
        cl = [[-x, o] for x in ins]
        cl.append([x for x in ins] + [-o])
        return cl
    if kind in ("XOR", "XNOR"):
        a, b = ins
        o = out if kind == "XOR" else -out
        return [
            [-a, -b, -o],
            [a, b, -o],
            [-a, b, o],
            [a, -b, o],
        ]
    raise NetlistError(f"no CNF encoding for {kind}")


def mux2_clauses(out: int, sel: int, a: int, b: int) -> list[list[int]]:
    """out = b when sel else a."""
    return [
        [sel, -a, out],
        [sel, a, -out],
        [-sel, -b, out],
        [-sel, b, -out],
        [-a, -b, out],
        [a, b, -out],
    ]


def encode_netlist(n: Netlist, pool: VarPool, prefix: str = ""):
    """Encode the combinational frame; returns (net name -> var, clauses).

    DFF output nets become free variables (pseudo-inputs); DFF input nets
    are observable like primary outputs.  ``prefix`` namespaces the copy.
    """
    net_var = {}
    for net in n.sim_inputs:
        net_var[net] = pool.var(prefix + net)
    for g in n.topo_order:
        if g.cell.kind == "DFF":
            continue
        net_var[g.fanout_net] = pool.var(prefix + g.fanout_net)
    clauses = []
    for g in n.topo_order:
        if g.cell.kind == "DFF":
            continue
        clauses.extend(
            gate_clauses(
                g.cell.kind,
                net_var[g.fanout_net],
                [net_var[f] for f in g.fanins],
            )
        )
    return net_var, clauses


def add_netlist(solver: CdclSolver, n: Netlist, pool: VarPool, prefix: str = ""):
    net_var, clauses = encode_netlist(n, pool, prefix)
    for cl in clauses:
        solver.add_clause(cl)
    return net_var


def xor_var(solver: CdclSolver, pool: VarPool, a: int, b: int) -> int:
    o = pool.fresh()
    for cl in gate_clauses("XOR", o, [a, b]):
        solver.add_clause(cl)
    return o


def or_clause(solver: CdclSolver, lits: list[int]) -> None:
    solver.add_clause(lits)


def build_miter(a: Netlist, b: Netlist):
    """Solver asserting 'some observable output differs' between a and b.

    Returns (solver, pool, shared input vars, per-output xor vars).
    Inputs are matched by name; a satisfying model is a counterexample.
    """
    if set(a.sim_inputs) != set(b.sim_inputs) or set(a.sim_outputs) != set(
        b.sim_outputs
    ):
        raise NetlistError("miter interface mismatch")
    solver = CdclSolver()
    pool = VarPool()
    va = add_netlist(solver, a, pool, "a:")
    vb = add_netlist(solver, b, pool, "b:")
    in_vars = {}
    for net in a.sim_inputs:
        # tie the two copies' inputs together
        solver.add_clause([-va[net], vb[net]])
        solver.add_clause([va[net], -vb[net]])
        in_vars[net] = va[net]
    diffs = []
    for net in a.sim_outputs:
        diffs.append(xor_var(solver, pool, va[net], vb[net]))
    solver.add_clause(diffs if diffs else [pool.fresh()])
    if not a.sim_outputs:
        solver.ok = False  # no observables: vacuously equivalent
    return solver, pool, in_vars, diffs
