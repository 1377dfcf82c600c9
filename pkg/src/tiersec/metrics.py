"""Attack scoring: correct connection rate, structural netlist recovery,
functional Hamming distance, and the randomization distance profile.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .f2f import F2FPlan
from .netlist import Netlist, NetlistError
from .sim import random_block, simulate


@dataclass(frozen=True)
class ScoreReport:
    ccr: float
    pnr: float
    hd: float
    pattern_count: int
    seed: int
    per_output_hd: dict[str, float]

    def __post_init__(self):
        for name in ("ccr", "pnr", "hd"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name}={v} outside [0,1]")

    def to_json(self) -> str:
        return json.dumps(
            {
                "ccr": self.ccr,
                "pnr": self.pnr,
                "hd": self.hd,
                "pattern_count": self.pattern_count,
                "seed": self.seed,
                "per_output_hd": dict(sorted(self.per_output_hd.items())),
            },
            sort_keys=True,
            indent=1,
        )


def ccr(guess: dict[str, str], truth: dict[str, str]) -> float:
    """Fraction of driver ports paired with their true sink."""
    if set(guess) != set(truth):
        raise NetlistError("guess and truth cover different port universes")
    if not truth:
        return 1.0
    hits = sum(1 for d, s in truth.items() if guess[d] == s)
    return hits / len(truth)


def pnr(recovered: Netlist, original: Netlist) -> float:
    """Fraction of gates whose ordered fanin drivers match the original.

    Net names may differ between the two netlists; comparison goes
    through each fanin's source (driving gate id, or the primary-input
    name), position by position.
    """
    if {g.id for g in recovered.gates} != {g.id for g in original.gates}:
        raise NetlistError("gate sets differ")
    if not original.gates:
        return 1.0

    def sources(n: Netlist, gate) -> tuple:
        out = []
        for f in gate.fanins:
            d = n.driver_of.get(f)
            out.append(("g", d.id) if d is not None else ("pi", f))
        return tuple(out)

    orig = {g.id: sources(original, g) for g in original.gates}
    hits = sum(
        1 for g in recovered.gates if sources(recovered, g) == orig[g.id]
    )
    return hits / len(original.gates)


def hd(
    a: Netlist,
    b: Netlist,
    patterns: int = 100_000,
    seed: int = 0,
) -> tuple[float, dict[str, float]]:
    """Mean output-bit disagreement under shared random patterns.

    Observables are the primary outputs plus DFF inputs; 0.5 is maximal
    obscurity.  Returns (overall, per-output).
    """
    if set(a.sim_inputs) != set(b.sim_inputs) or set(a.sim_outputs) != set(
        b.sim_outputs
    ):
        raise NetlistError("interface mismatch")
    blk = random_block(a.sim_inputs, patterns, seed)
    ya = simulate(a, blk)
    yb = simulate(b, blk)
    per = {}
    total = 0
    for net in a.sim_outputs:
        diff = ya.lane(net) ^ yb.lane(net)
        bits = int(np.bitwise_count(diff).sum()) if hasattr(np, "bitwise_count") \
            else int(sum(bin(int(w)).count("1") for w in diff))
        per[net] = bits / patterns
        total += bits
    overall = total / (patterns * max(1, len(a.sim_outputs)))
    return overall, per


def score(
    guess: dict[str, str],
    plan: F2FPlan,
    recovered: Netlist | None,
    original: Netlist,
    patterns: int = 100_000,
    seed: int = 0,
) -> ScoreReport:
    truth = plan.secret_mapping()
    c = ccr(guess, truth)
    p = pnr(recovered, original) if recovered is not None else 0.0
    if recovered is not None:
        h, per = hd(original, recovered, patterns, seed)
    else:
        h, per = 0.0, {}
    return ScoreReport(c, p, h, patterns, seed, per)


@dataclass(frozen=True)
class DistanceHistogram:
    bin_edges: tuple[float, ...]
    counts: tuple[int, ...]
    mean: float
    stdev: float
    n: int

    def to_csv(self) -> str:
        lines = ["bin_lo,bin_hi,count"]
        for i, c in enumerate(self.counts):
            lines.append(f"{self.bin_edges[i]:.6f},{self.bin_edges[i+1]:.6f},{c}")
        return "\n".join(lines) + "\n"


def f2f_distance_distribution(plan: F2FPlan, bins: int = 20) -> DistanceHistogram:
    """Per-net Euclidean distance between the driver-side port and its
    randomized counterpart, normalized by the grid diagonal."""
    if not plan.randomized():
        raise NetlistError("plan not randomized")
    diag = plan.spec.diagonal
    dists = [
        math.dist(p.true_port, p.randomized_port) / diag for p in plan.ports
    ]
    if not dists:
        return DistanceHistogram((0.0, 1.0), (0,), 0.0, 0.0, 0)
    counts, edges = np.histogram(dists, bins=bins, range=(0.0, 1.0))
    mean = float(np.mean(dists))
    stdev = float(np.std(dists))
    return DistanceHistogram(
        tuple(float(e) for e in edges),
        tuple(int(c) for c in counts),
        mean,
        stdev,
        len(dists),
    )
