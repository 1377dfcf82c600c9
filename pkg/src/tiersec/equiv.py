"""Functional equivalence checking between netlists.

Three modes: exhaustive enumeration (sound and complete up to 20 inputs),
seeded random vectors (counterexample or unknown), and a CNF miter
decided by the CDCL engine (complete).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .cnf import build_miter
from .netlist import Netlist, NetlistError
from .sim import exhaustive_block, random_block, simulate

EXHAUSTIVE_LIMIT = 20


@dataclass(frozen=True)
class EquivalenceVerdict:
    status: str  # "equivalent" | "counterexample" | "unknown"
    counterexample: Optional[dict[str, int]] = None
    mode: str = ""

    def __bool__(self):
        return self.status == "equivalent"


def _interface_check(a: Netlist, b: Netlist):
    if set(a.primary_inputs) != set(b.primary_inputs):
        raise NetlistError("primary input name sets differ")
    if set(a.primary_outputs) != set(b.primary_outputs):
        raise NetlistError("primary output name sets differ")
    if set(a.sim_inputs) != set(b.sim_inputs) or set(a.sim_outputs) != set(
        b.sim_outputs
    ):
        raise NetlistError("state element interfaces differ")


def _first_mismatch(a: Netlist, b: Netlist, block) -> Optional[dict[str, int]]:
    ya = simulate(a, block)
    yb = simulate(b, block)
    for net in a.sim_outputs:
        diff = ya.lane(net) ^ yb.lane(net)
        hot = np.flatnonzero(diff)
        if hot.size:
            w = int(hot[0])
            word = int(diff[w])
            b_off = (word & -word).bit_length() - 1  # lowest differing pattern
            return block.pattern(w * 64 + b_off)
    return None


def check_equivalence(
    a: Netlist,
    b: Netlist,
    mode: str = "exhaustive",
    patterns: int = 10_000,
    seed: int = 0,
) -> EquivalenceVerdict:
    _interface_check(a, b)
    lanes = a.sim_inputs
    if mode == "exhaustive":
        if len(lanes) > EXHAUSTIVE_LIMIT:
            raise NetlistError(
                f"exhaustive mode over {len(lanes)} inputs (limit "
                f"{EXHAUSTIVE_LIMIT}); use random or sat"
            )
        cex = _first_mismatch(a, b, exhaustive_block(lanes))
        if cex is None:
            return EquivalenceVerdict("equivalent", mode="exhaustive")
        return EquivalenceVerdict("counterexample", cex, mode="exhaustive")
    if mode == "random":
        cex = _first_mismatch(a, b, random_block(lanes, patterns, seed))
        if cex is None:
            return EquivalenceVerdict("unknown", mode="random")
        return EquivalenceVerdict("counterexample", cex, mode="random")
    if mode == "sat":
        solver, _pool, in_vars, _ = build_miter(a, b)
        if solver.solve():
            cex = {net: int(solver.model[v]) for net, v in in_vars.items()}
            return EquivalenceVerdict("counterexample", cex, mode="sat")
        return EquivalenceVerdict("equivalent", mode="sat")
    raise ValueError(f"unknown mode {mode!r}")
