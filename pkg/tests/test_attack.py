import statistics

import pytest

from tiersec.attack import (
    AttackOptions,
    proximity_attack,
    random_guess_baseline,
)
from tiersec.f2f import (
    B2T,
    END_USER,
    FAB,
    F2FPlan,
    F2FPort,
    expose,
    group_switchboxes,
    plan_ports,
    randomize_ports,
    reassemble,
)
from tiersec.flow import defend
from tiersec.layout import BOTTOM, TOP, GridSpec, Placement, place
from tiersec.metrics import ccr
from tiersec.netlist import parse_bench
from tiersec.partition import TierAssignment
from tiersec.synth import random_netlist


def _separated_toy(k=4):
    """k B2T nets with wide, unambiguous geometry at radius zero."""
    lines = ["INPUT(a)"]
    tiers = {}
    for i in range(k):
        kind = "INV" if i % 2 == 0 else "BUF"
        lines += [f"OUTPUT(o{i})", f"d{i} = {kind}(a)", f"o{i} = BUF(d{i})"]
        tiers[f"d{i}"] = BOTTOM
        tiers[f"o{i}"] = TOP
    n = parse_bench("\n".join(lines))
    spec = GridSpec(4 * k + 4, 12, track_pitch=2)
    sites = {}
    for i in range(k):
        sites[f"d{i}"] = (BOTTOM, 4 * i, 2)
        sites[f"o{i}"] = (TOP, 4 * i, 4)
    pl = Placement(sites, spec)
    a = TierAssignment(tiers, "manual", 0)
    plan = plan_ports(n, a, pl, spec)
    plan = randomize_ports(plan, mode="radius", radius=0, seed=5)
    return n, plan


def test_radius_zero_full_recovery():
    n, plan = _separated_toy()
    view = expose(plan, FAB)
    mapping, table = proximity_attack(view)
    assert ccr(mapping.pairs, plan.secret_mapping()) == 1.0
    assert not mapping.is_relaxed


def test_attack_output_is_bijection():
    for seed in range(5):
        n = random_netlist(40, 6, 3, seed=seed)
        res = defend(n, seed=seed, strategy="random", switchboxes=False)
        mapping, _ = proximity_attack(res.fab_view)
        assert len(set(mapping.pairs.values())) == len(mapping.pairs)
        truth = res.plan.secret_mapping()
        assert set(mapping.pairs) == set(truth)


def test_no_relax_implies_acyclic():
    for seed in range(8):
        n = random_netlist(50, 6, 3, seed=seed + 50)
        res = defend(n, seed=seed, strategy="random", switchboxes=False)
        mapping, _ = proximity_attack(res.fab_view)
        if mapping.is_relaxed:
            continue
        rr = reassemble(n, res.plan, mapping.pairs)
        assert not rr.cyclic


def _loop_bait():
    """Two B2T and two T2B nets; the geometrically nearest pairing closes
    a combinational loop, the true one does not."""
    src = """
INPUT(pi1)
INPUT(pi2)
OUTPUT(tA)
OUTPUT(bD)
B = INV(pi1)
tB = BUF(B)
C = INV(tB)
bC = BUF(C)
A = INV(bC)
tA = BUF(A)
D = INV(pi2)
bD = BUF(D)
"""
    n = parse_bench(src)
    tiers = {
        "B": BOTTOM, "bC": BOTTOM, "A": BOTTOM, "bD": BOTTOM,
        "tB": TOP, "C": TOP, "tA": TOP, "D": TOP,
    }
    a = TierAssignment(tiers, "manual", 0)
    spec = GridSpec(16, 16, track_pitch=2)
    sites = {
        "A": (BOTTOM, 0, 1), "B": (BOTTOM, 4, 1), "bC": (BOTTOM, 1, 9),
        "bD": (BOTTOM, 9, 9), "tA": (TOP, 4, 3), "tB": (TOP, 0, 3),
        "C": (TOP, 1, 11), "D": (TOP, 9, 11),
    }
    pl = Placement(sites, spec)
    ports = (
        F2FPort("A", B2T, (0, 0), (0, 0), (4, 2)),
        F2FPort("B", B2T, (4, 0), (4, 0), (0, 2)),
        F2FPort("C", "T2B", (0, 10), (0, 10), (0, 12)),
        F2FPort("D", "T2B", (8, 10), (8, 10), (8, 12)),
    )
    plan = F2FPlan(n, a, pl, spec, ports, seed=0, mode="manual")
    return n, plan


def test_loop_exclusion_picks_acyclic_alternative():
    n, plan = _loop_bait()
    truth = plan.secret_mapping()
    view = expose(plan, FAB)

    # without loop pruning the nearest pairing wins and is cyclic
    naive, _ = proximity_attack(view, AttackOptions(use_loop_pruning=False))
    assert ccr(naive.pairs, truth) < 1.0
    assert reassemble(n, plan, naive.pairs).cyclic

    mapping, table = proximity_attack(view)
    assert ccr(mapping.pairs, truth) == 1.0
    assert not mapping.is_relaxed
    assert not reassemble(n, plan, mapping.pairs).cyclic
    # the excluded candidate is flagged in the table
    flags = [
        e.loop_excluded
        for entries in table.ranked.values()
        for e in entries
    ]
    assert any(flags)


def test_switchbox_confinement_restricts_candidates():
    n = random_netlist(80, 8, 4, seed=3)
    res = defend(n, seed=3, strategy="random", switchboxes=True)
    if not res.plan.switchboxes:
        pytest.skip("no boxes formed")
    view = res.end_user_view
    mapping, _ = proximity_attack(view)
    boxes = view.switchbox_membership
    for m in boxes:
        for d in m["driver_port_ids"]:
            assert mapping.pairs[d] in set(m["sink_port_ids"])


def test_ip_confinement_option():
    n, plan = _separated_toy()
    view = expose(plan, FAB)
    truth = plan.secret_mapping()
    some_driver = sorted(truth)[0]
    constraints = {some_driver: {truth[some_driver]}}
    mapping, table = proximity_attack(
        view, AttackOptions(ip_constraints=constraints)
    )
    assert mapping.pairs[some_driver] == truth[some_driver]
    assert some_driver in table.ip_confined


def test_baseline_single_port():
    n, plan = _separated_toy(k=1)
    view = expose(plan, FAB)
    base = random_guess_baseline(view, seed=0)
    assert ccr(base.pairs, plan.secret_mapping()) == 1.0


def test_baseline_quarter_expectation():
    n, plan = _separated_toy(k=4)
    view = expose(plan, FAB)
    truth = plan.secret_mapping()
    rates = [
        ccr(random_guess_baseline(view, seed=s).pairs, truth)
        for s in range(1000)
    ]
    mean = statistics.mean(rates)
    # E[CCR] = 1/4; MC error over 1000 seeds
    assert abs(mean - 0.25) < 0.05


def test_proximity_beats_baseline_at_radius():
    gains = []
    for seed in range(6):
        n = random_netlist(60, 6, 3, seed=seed + 10)
        res = defend(n, seed=seed, strategy="random",
                     randomization="radius", radius=2, switchboxes=False)
        truth = res.plan.secret_mapping()
        attack, _ = proximity_attack(res.fab_view)
        base = statistics.mean(
            ccr(random_guess_baseline(res.fab_view, seed=s).pairs, truth)
            for s in range(20)
        )
        gains.append((ccr(attack.pairs, truth), base))
    attack_mean = statistics.mean(g[0] for g in gains)
    base_mean = statistics.mean(g[1] for g in gains)
    assert attack_mean > base_mean
