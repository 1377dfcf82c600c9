import itertools

import pytest

from tiersec.equiv import check_equivalence
from tiersec.f2f import (
    END_USER,
    expose,
    group_switchboxes,
    plan_ports,
    randomize_ports,
    reassemble,
)
from tiersec.layout import BOTTOM, TOP, GridSpec, Placement
from tiersec.lock import (
    KeyedSwitchboxModel,
    key_to_pairs,
    lock_from_view,
    make_oracle,
    sat_attack,
)
from tiersec.netlist import parse_bench
from tiersec.partition import TierAssignment


def _boxed_design(n_nets, seed=1):
    """All-B2T design with n_nets cut nets: distinct driver functions on
    the bottom, pairwise-combining sinks on the top."""
    assert n_nets % 2 == 0
    kinds = ["INV", "BUF", "NAND", "NOR", "XOR", "AND", "OR", "XNOR"]
    lines = ["INPUT(a)", "INPUT(b)", "INPUT(c)"]
    tiers = {}
    srcs = ["a", "b", "c"]
    for i in range(n_nets):
        kind = kinds[i % len(kinds)]
        if kind in ("INV", "BUF"):
            lines.append(f"d{i} = {kind}({srcs[i % 3]})")
        else:
            lines.append(f"d{i} = {kind}({srcs[i % 3]},{srcs[(i + 1) % 3]})")
        tiers[f"d{i}"] = BOTTOM
    for j in range(n_nets // 2):
        kind = "NAND" if j % 2 == 0 else "NOR"
        lines.append(f"o{j} = {kind}(d{2 * j},d{2 * j + 1})")
        lines.append(f"OUTPUT(o{j})")
        tiers[f"o{j}"] = TOP
    n = parse_bench("\n".join(lines))
    a = TierAssignment(tiers, "manual", 0)
    side = max(12, 4 * n_nets)
    spec = GridSpec(side, side, track_pitch=2)
    sites = {}
    for i in range(n_nets):
        sites[f"d{i}"] = (BOTTOM, (2 * i) % side, 1 + 2 * ((2 * i) // side))
    for j in range(n_nets // 2):
        sites[f"o{j}"] = (TOP, (4 * j) % side, 5 + 2 * ((4 * j) // side))
    pl = Placement(sites, spec)
    plan = plan_ports(n, a, pl, spec)
    plan = randomize_ports(plan, mode="full", seed=seed)
    plan = group_switchboxes(plan, seed=seed + 1)
    return n, plan


def test_single_box_key_recovery_and_classes():
    n, plan = _boxed_design(4)
    assert len(plan.switchboxes) == 1
    view = expose(plan, END_USER)
    model = lock_from_view(view)
    result = sat_attack(model, make_oracle(n), n, plan)
    assert result.status == "key_found"
    assert result.equivalence_verified
    # brute force all 24 permutations: distinguishable classes bound the
    # number of oracle queries
    truth = plan.secret_mapping()
    drivers = sorted(truth)
    sinks = [truth[d] for d in drivers]
    classes = set()
    for perm in itertools.permutations(sinks):
        guess = dict(zip(drivers, perm))
        rr = reassemble(n, plan, guess)
        if rr.netlist is None:
            classes.add(("cyclic", perm))
            continue
        from tiersec.sim import exhaustive_block, simulate

        blk = exhaustive_block(n.sim_inputs)
        out = simulate(rr.netlist, blk)
        sig = tuple(
            int(x) for net in sorted(n.sim_outputs) for x in out.lane(net)
        )
        classes.add(sig)
    assert len(classes) <= 24
    assert result.iterations <= 24


def test_recovered_pairs_equivalent():
    n, plan = _boxed_design(8, seed=3)
    assert len(plan.switchboxes) == 2
    view = expose(plan, END_USER)
    model = lock_from_view(view)
    result = sat_attack(model, make_oracle(n), n, plan)
    assert result.status == "key_found"
    rr = reassemble(n, plan, result.recovered_pairs)
    assert rr.netlist is not None
    assert check_equivalence(n, rr.netlist, "exhaustive")


def test_zero_boxes_immediate():
    n, plan = _boxed_design(4)
    # strip the boxes: everything resolved by assumption
    from dataclasses import replace

    bare = replace(plan, switchboxes=())
    view = expose(bare, END_USER)
    model = lock_from_view(view, resolved_pairs=bare.secret_mapping())
    result = sat_attack(model, make_oracle(n), n, bare)
    assert result.status == "key_found"
    assert result.iterations == 0
    assert result.equivalence_verified


def test_budget_zero_times_out():
    n, plan = _boxed_design(4)
    view = expose(plan, END_USER)
    model = lock_from_view(view)
    result = sat_attack(model, make_oracle(n), n, plan, max_iterations=0)
    assert result.status == "timeout"
    assert result.keyspace_bound >= 1


def test_unresolved_remainder_rejected():
    n, plan = _boxed_design(6, seed=2)  # 6 nets -> 1 box + 2 remainder
    assert plan.remainder == 2
    view = expose(plan, END_USER)
    with pytest.raises(ValueError, match="unresolved vias"):
        lock_from_view(view)
    truth = plan.secret_mapping()
    boxed = {
        d for m in view.switchbox_membership for d in m["driver_port_ids"]
    }
    resolved = {d: s for d, s in truth.items() if d not in boxed}
    model = lock_from_view(view, resolved_pairs=resolved)
    result = sat_attack(model, make_oracle(n), n, plan)
    assert result.status == "key_found"
    assert result.equivalence_verified


def test_iterations_grow_with_boxes():
    iters = []
    for s in (1, 2, 3):
        n, plan = _boxed_design(4 * s, seed=7)
        view = expose(plan, END_USER)
        model = lock_from_view(view)
        result = sat_attack(model, make_oracle(n), n, plan)
        assert result.status == "key_found"
        iters.append(result.iterations)
    assert iters[0] <= iters[-1]
