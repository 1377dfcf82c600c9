import math

import pytest

from tiersec.layout import (
    BOTTOM,
    TOP,
    GridSpec,
    LayoutError,
    Placement,
    hpwl,
    nearest_track_site,
    place,
)
from tiersec.netlist import parse_bench
from tiersec.partition import TierAssignment, partition_random
from tiersec.synth import random_netlist

PAIR = "INPUT(a)\nOUTPUT(y)\nb = INV(a)\ny = INV(b)"


def _assign_all_bottom(n):
    return TierAssignment({g.id: BOTTOM for g in n.gates}, "random", 0)


def test_single_gate_placed_legally():
    n = parse_bench("INPUT(a)\nOUTPUT(y)\ny = INV(a)")
    spec = GridSpec(4, 4)
    p = place(n, _assign_all_bottom(n), spec, seed=1)
    tier, x, y = p.of("y")
    assert tier == BOTTOM and 0 <= x < 4 and 0 <= y < 4
    assert hpwl(n, p) == 0


def test_hpwl_two_pin():
    n = parse_bench(PAIR)
    spec = GridSpec(8, 8)
    p = Placement({"b": (BOTTOM, 0, 0), "y": (BOTTOM, 3, 4)}, spec)
    assert hpwl(n, p) == 7


def test_hpwl_three_pin():
    src = "INPUT(a)\nOUTPUT(o1)\nOUTPUT(o2)\nb = INV(a)\no1 = INV(b)\no2 = BUF(b)"
    n = parse_bench(src)
    spec = GridSpec(8, 8)
    p = Placement(
        {"b": (BOTTOM, 0, 0), "o1": (BOTTOM, 2, 1), "o2": (BOTTOM, 1, 3)}, spec
    )
    # net 'b' spans (0,0),(2,1),(1,3) -> 2+3; net a and o1/o2 have 1 pin
    assert hpwl(n, p) == 5


def test_placement_rejects_double_booking():
    spec = GridSpec(4, 4)
    with pytest.raises(LayoutError):
        Placement({"a": (BOTTOM, 1, 1), "b": (BOTTOM, 1, 1)}, spec)


def test_place_deterministic():
    n = random_netlist(30, 5, 3, seed=2)
    a = partition_random(n, 0.5, seed=3)
    spec = GridSpec.for_gate_count(30)
    p1 = place(n, a, spec, seed=42)
    p2 = place(n, a, spec, seed=42)
    assert p1.sites == p2.sites


def test_grid_too_small():
    n = random_netlist(30, 5, 3, seed=2)
    a = _assign_all_bottom(n)
    with pytest.raises(LayoutError):
        place(n, a, GridSpec(5, 5), seed=0)


def test_connected_pair_pulled_together():
    # two connected gates end up no farther than their random start
    n = parse_bench(PAIR)
    spec = GridSpec(10, 10)
    a = _assign_all_bottom(n)
    import random as _r

    closer = 0
    for seed in range(100):
        rng = _r.Random(seed)
        s1, s2 = rng.sample([(x, y) for x in range(10) for y in range(10)], 2)
        d0 = max(abs(s1[0] - s2[0]), abs(s1[1] - s2[1]))
        p = place(n, a, spec, seed=seed)
        (_, x1, y1), (_, x2, y2) = p.of("b"), p.of("y")
        d1 = max(abs(x1 - x2), abs(y1 - y2))
        if d1 <= max(d0, 1):
            closer += 1
    assert closer >= 95


def test_clique_beats_random_placement():
    # 5 mutually connected gates: annealed HPWL <= random-placement HPWL
    src = """
INPUT(a)
OUTPUT(y)
g1 = INV(a)
g2 = NAND(a,g1)
g3 = NAND(g1,g2)
g4 = NAND(g2,g3)
y = NAND(g3,g4)
"""
    n = parse_bench(src)
    a = _assign_all_bottom(n)
    spec = GridSpec(12, 12)
    import random as _r

    for seed in range(10):
        rng = _r.Random(seed)
        sites = rng.sample([(x, y) for x in range(12) for y in range(12)], 5)
        rand_p = Placement(
            {g.id: (BOTTOM, *s) for g, s in zip(n.gates, sites)}, spec
        )
        ann_p = place(n, a, spec, seed=seed)
        assert hpwl(n, ann_p) <= hpwl(n, rand_p)


def test_nearest_track_site_self():
    spec = GridSpec(16, 16, track_pitch=4)
    assert nearest_track_site((4, 3), spec, occupied=set()) == (4, 3)


def test_nearest_track_site_offtrack():
    spec = GridSpec(16, 16, track_pitch=4)
    assert nearest_track_site((5, 0), spec, occupied=set()) == (4, 0)


def test_nearest_track_site_occupied():
    spec = GridSpec(16, 16, track_pitch=4)
    got = nearest_track_site((4, 0), spec, occupied={(4, 0)})
    assert got == (4, 1)  # distance 1 beats (8,0) at distance 4


def test_nearest_track_site_exhaustive_minimality():
    spec = GridSpec(12, 12, track_pitch=3)
    occupied = {(0, 0), (3, 3), (6, 6)}
    for px in range(12):
        for py in range(12):
            got = nearest_track_site((px, py), spec, occupied)
            assert got[0] % 3 == 0 and got not in occupied
            best = min(
                (
                    (math.hypot(x - px, y - py), x, y)
                    for x in range(0, 12, 3)
                    for y in range(12)
                    if (x, y) not in occupied
                ),
            )
            assert math.isclose(math.hypot(got[0] - px, got[1] - py), best[0])


def test_nearest_track_site_threshold():
    spec = GridSpec(64, 64, track_pitch=2)
    occupied = {(x, y) for x in range(0, 64, 2) for y in range(64)}
    with pytest.raises(LayoutError):
        nearest_track_site((0, 0), spec, occupied, max_radius_tracks=4)


def test_placement_csv_roundtrip():
    n = random_netlist(12, 4, 2, seed=5)
    a = partition_random(n, 0.5, seed=1)
    spec = GridSpec.for_gate_count(12)
    p = place(n, a, spec, seed=7)
    again = Placement.from_csv(p.to_csv(), spec)
    assert again.sites == p.sites
