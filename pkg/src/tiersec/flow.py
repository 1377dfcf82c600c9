"""End-to-end defend pipeline: parse -> place -> partition -> plan ->
randomize -> (switchboxes) -> expose.  Shared by the CLI, the scripts,
and the test harness.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .f2f import (
    END_USER,
    FAB,
    ExposureView,
    F2FPlan,
    expose,
    group_switchboxes,
    plan_ports,
    randomize_ports,
)
from .ksec import StructureInstances
from .layout import GridSpec, Placement, place
from .netlist import Netlist
from .partition import (
    TierAssignment,
    cut_set,
    partition_hierarchical,
    partition_ht_aware,
    partition_max_cut,
    partition_random,
    partition_timing_aware,
)


@dataclass(frozen=True)
class DefendResult:
    netlist: Netlist
    assignment: TierAssignment
    placement: Placement
    spec: GridSpec
    plan: F2FPlan
    fab_view: ExposureView
    end_user_view: ExposureView

    @property
    def cut_size(self) -> int:
        return len(self.plan.ports)


def run_partition(
    n: Netlist,
    strategy: str,
    seed: int,
    move_fraction: float = 0.5,
    balance: float = 0.02,
    instances: Optional[StructureInstances] = None,
) -> TierAssignment:
    if strategy == "random":
        return partition_random(n, move_fraction, seed)
    if strategy == "max_cut":
        return partition_max_cut(n, seed)
    if strategy == "timing_aware":
        return partition_timing_aware(n, target_balance=balance, seed=seed)
    if strategy == "hierarchical":
        return partition_hierarchical(n, seed=seed)
    if strategy == "ht_aware":
        return partition_ht_aware(n, instances or [], seed=seed)
    raise ValueError(f"unknown partition strategy {strategy!r}")


def defend(
    n: Netlist,
    seed: int,
    strategy: str = "timing_aware",
    move_fraction: float = 0.5,
    balance: float = 0.02,
    utilization: float = 0.4,
    track_pitch: int = 2,
    randomization: str = "full",
    radius: int = 0,
    switchboxes: bool = True,
    grid: Optional[GridSpec] = None,
    instances: Optional[StructureInstances] = None,
) -> DefendResult:
    assignment = run_partition(
        n, strategy, seed, move_fraction, balance, instances
    )
    cuts = cut_set(n, assignment)
    spec = grid or GridSpec.for_gate_count(
        max(assignment.count(t) for t in ("Bottom", "Top")) or 1,
        utilization=utilization,
        track_pitch=track_pitch,
        min_ports=cuts.size,
    )
    placement = place(n, assignment, spec, seed=seed + 1)
    plan = plan_ports(n, assignment, placement, spec)
    plan = randomize_ports(plan, mode=randomization, seed=seed + 2, radius=radius)
    if switchboxes:
        plan = group_switchboxes(plan, seed=seed + 3)
    return DefendResult(
        netlist=n,
        assignment=assignment,
        placement=placement,
        spec=spec,
        plan=plan,
        fab_view=expose(plan, FAB),
        end_user_view=expose(plan, END_USER),
    )
