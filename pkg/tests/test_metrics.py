import math
import statistics

import numpy as np
import pytest

from tiersec.f2f import B2T, F2FPlan, F2FPort, reassemble
from tiersec.flow import defend
from tiersec.layout import BOTTOM, TOP, GridSpec, Placement
from tiersec.metrics import (
    DistanceHistogram,
    ccr,
    f2f_distance_distribution,
    hd,
    pnr,
)
from tiersec.netlist import CellType, Gate, Netlist, NetlistError, parse_bench
from tiersec.partition import TierAssignment
from tiersec.synth import random_netlist


def test_ccr_basics():
    truth = {"D0": "S0", "D1": "S1", "D2": "S2", "D3": "S3", "D4": "S4"}
    assert ccr(dict(truth), truth) == 1.0
    derange = {"D0": "S1", "D1": "S0", "D2": "S3", "D3": "S2"}
    assert ccr(derange, {k: f"S{k[1]}" for k in derange}) == 0.0
    three_of_five = dict(truth)
    three_of_five["D0"] = "S1"
    three_of_five["D1"] = "S0"
    assert ccr(three_of_five, truth) == 0.6


def test_ccr_universe_mismatch():
    with pytest.raises(NetlistError):
        ccr({"D0": "S0"}, {"D1": "S1"})


def test_pnr_identity_and_swap():
    n = random_netlist(20, 5, 3, seed=2)
    assert pnr(n, n) == 1.0
    # swap one gate's fanins (pick a gate with two distinct fanins)
    gates = list(n.gates)
    idx = next(
        i for i, g in enumerate(gates)
        if g.cell.arity == 2 and g.fanins[0] != g.fanins[1]
    )
    g = gates[idx]
    gates[idx] = Gate(g.id, g.cell, (g.fanins[1], g.fanins[0]), g.fanout_net)
    swapped = Netlist(n.name, tuple(gates), n.primary_inputs, n.primary_outputs)
    assert pnr(swapped, n) == (len(gates) - 1) / len(gates)


def test_pnr_one_iff_structurally_identical_up_to_renaming():
    n = random_netlist(15, 4, 2, seed=4)
    renamed_gates = []
    rename = {net: f"w_{net}" for net in n.nets if net not in n.primary_inputs}
    for g in n.gates:
        fanins = tuple(rename.get(f, f) for f in g.fanins)
        renamed_gates.append(Gate(g.id, g.cell, fanins, rename[g.fanout_net]))
    renamed = Netlist(
        n.name,
        tuple(renamed_gates),
        n.primary_inputs,
        tuple(rename.get(p, p) for p in n.primary_outputs),
    )
    assert pnr(renamed, n) == 1.0


def test_hd_identity_zero_and_symmetry():
    n = random_netlist(30, 6, 3, seed=6)
    h, per = hd(n, n, patterns=4096, seed=1)
    assert h == 0.0
    m = random_netlist(30, 6, 3, seed=6)
    h1, _ = hd(n, m, patterns=4096, seed=2)
    h2, _ = hd(m, n, patterns=4096, seed=2)
    assert h1 == h2


def test_hd_single_inverted_output():
    src = "INPUT(a)\nINPUT(b)\nOUTPUT(y)\ny = AND(a,b)"
    inv = "INPUT(a)\nINPUT(b)\nOUTPUT(y)\nt = AND(a,b)\ny = INV(t)"
    h, per = hd(parse_bench(src), parse_bench(inv), patterns=2048, seed=0)
    assert h == 1.0
    assert per["y"] == 1.0


def test_hd_converges_with_pattern_count():
    a = random_netlist(40, 7, 4, seed=8)
    flipped = []
    swaps = {"AND": "NAND", "NAND": "AND", "OR": "NOR", "NOR": "OR",
             "XOR": "XNOR", "XNOR": "XOR", "INV": "BUF", "BUF": "INV"}
    for i, g in enumerate(a.gates):
        if i % 5 == 0 and g.cell.kind in swaps:
            flipped.append(Gate(g.id, CellType(swaps[g.cell.kind],
                                               g.cell.arity),
                                g.fanins, g.fanout_net))
        else:
            flipped.append(g)
    b = Netlist(a.name, tuple(flipped), a.primary_inputs, a.primary_outputs)
    h1, _ = hd(a, b, patterns=100_000, seed=3)
    h2, _ = hd(a, b, patterns=200_000, seed=4)
    assert h1 > 0
    assert abs(h1 - h2) < 0.005


def test_distribution_radius_zero_all_zero():
    n = random_netlist(30, 5, 3, seed=1)
    res = defend(n, seed=1, strategy="random", randomization="radius",
                 radius=0, switchboxes=False)
    hist = f2f_distance_distribution(res.plan)
    assert hist.mean == 0.0
    assert hist.counts[0] == hist.n


def test_distribution_full_has_spread():
    n = random_netlist(60, 6, 3, seed=2)
    res = defend(n, seed=2, strategy="random", switchboxes=False)
    hist = f2f_distance_distribution(res.plan)
    assert hist.stdev > 0.0
    assert hist.n == len(res.plan.ports)


def test_distribution_csv_shape():
    n = random_netlist(30, 5, 3, seed=3)
    res = defend(n, seed=3, strategy="random", switchboxes=False)
    csv = f2f_distance_distribution(res.plan, bins=10).to_csv()
    lines = csv.strip().splitlines()
    assert lines[0] == "bin_lo,bin_hi,count"
    assert len(lines) == 11


def test_distribution_uniform_center_analytic():
    # true ports pinned at the grid center, randomized uniform: the mean
    # normalized distance approaches 0.3826/sqrt(2) (uniform point to
    # center of the unit square, diagonal-normalized)
    side = 101
    spec = GridSpec(side, side, track_pitch=1)
    rng = np.random.default_rng(7)
    c = side // 2
    ports = []
    seen = set()
    for k in range(4000):
        site = (int(rng.integers(0, side)), int(rng.integers(0, side)))
        if site in seen:
            continue
        seen.add(site)
        ports.append(
            F2FPort(f"n{k}", B2T, (c, c), (c, c), site)
        )
    dists = [
        math.dist(p.true_port, p.randomized_port) / spec.diagonal
        for p in ports
    ]
    expected = 0.3826 / math.sqrt(2)
    assert abs(statistics.mean(dists) - expected) < 0.01
