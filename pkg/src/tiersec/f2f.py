"""F2F interconnect planning: port legalization, randomized top-of-stack
port placement, obfuscated switchbox grouping, attacker exposure views,
reassembly, and search-space accounting.

The plan holds the secret redistribution-layer bijection.  Everything an
adversary may consume must come from an ExposureView, never the plan.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import Optional

from .layout import BOTTOM, TOP, GridSpec, Placement, nearest_track_site
from .netlist import Gate, Netlist, NetlistError, _toposort
from .partition import CutSet, TierAssignment, cut_set

B2T = "B2T"  # driver on Bottom, via feeds Top
T2B = "T2B"

_OPPOSITE = {BOTTOM: TOP, TOP: BOTTOM}
_DRIVER_TIER = {B2T: BOTTOM, T2B: TOP}


class PlanError(NetlistError):
    pass


@dataclass(frozen=True)
class F2FPort:
    """One cut net's via: a fixed driver-side port and a sink-side port
    that randomization may move anywhere legal."""

    net: str
    direction: str
    true_port: tuple[int, int]
    preliminary_port: tuple[int, int]
    randomized_port: Optional[tuple[int, int]] = None

    @property
    def driver_tier(self) -> str:
        return _DRIVER_TIER[self.direction]

    @property
    def sink_tier(self) -> str:
        return _OPPOSITE[self.driver_tier]


@dataclass(frozen=True)
class SwitchBox:
    """Four same-direction vias behind one camouflaged crossbar."""

    direction: str
    driver_ports: tuple[tuple[int, int], ...]
    sink_ports: tuple[tuple[int, int], ...]
    internal_perm: tuple[int, ...]  # SECRET: driver i feeds sink perm[i]

    def __post_init__(self):
        if sorted(self.internal_perm) != [0, 1, 2, 3]:
            raise PlanError("switchbox permutation must be in S4")
        if len(self.driver_ports) != 4 or len(self.sink_ports) != 4:
            raise PlanError("switchbox is 4x4")


@dataclass(frozen=True)
class F2FPlan:
    """Complete defend-side artifact: the design context plus every via.

    Only ``to_public_json``/``expose`` output may reach an adversary.
    """

    netlist: Netlist
    assignment: TierAssignment
    placement: Placement
    spec: GridSpec
    ports: tuple[F2FPort, ...]
    seed: Optional[int] = None
    mode: Optional[str] = None
    switchboxes: tuple[SwitchBox, ...] = ()
    switchbox_seed: Optional[int] = None
    remainder: int = 0

    @property
    def design(self) -> str:
        return self.netlist.name

    # -- port identity: geometry-sorted, so ids leak nothing -------------

    def _ids(self, role: str) -> dict[str, str]:
        """net -> port id for one role ('D' or 'S'), per direction."""
        out = {}
        for direction in (B2T, T2B):
            members = [p for p in self.ports if p.direction == direction]
            if role == "D":
                members.sort(key=lambda p: (p.true_port, p.net))
            else:
                members.sort(key=lambda p: (p.randomized_port or
                                            p.preliminary_port, p.net))
            for i, p in enumerate(members):
                out[p.net] = f"{direction}:{role}{i:03d}"
        return out

    def driver_ids(self) -> dict[str, str]:
        return self._ids("D")

    def sink_ids(self) -> dict[str, str]:
        return self._ids("S")

    def secret_mapping(self) -> dict[str, str]:
        """driver port id -> sink port id (the RDL secret)."""
        d, s = self.driver_ids(), self.sink_ids()
        return {d[p.net]: s[p.net] for p in self.ports}

    def port_by_net(self) -> dict[str, F2FPort]:
        return {p.net: p for p in self.ports}

    def randomized(self) -> bool:
        return all(p.randomized_port is not None for p in self.ports)

    def to_public_json(self) -> str:
        """Ports, directions, membership; never the pairing or perms."""
        d, s = self.driver_ids(), self.sink_ids()
        sites_d = {d[p.net]: list(p.true_port) for p in self.ports}
        sites_s = {
            s[p.net]: list(p.randomized_port or p.preliminary_port)
            for p in self.ports
        }
        boxes = [
            {
                "direction": b.direction,
                "driver_ports": [list(x) for x in b.driver_ports],
                "sink_ports": [list(x) for x in b.sink_ports],
            }
            for b in self.switchboxes
        ]
        return json.dumps(
            {
                "design": self.design,
                "driver_ports": sites_d,
                "sink_ports": sites_s,
                "switchboxes": boxes,
                "remainder": self.remainder,
                "mode": self.mode,
            },
            sort_keys=True,
            indent=1,
        )

    def to_secret_json(self) -> str:
        """The sensitive half; store apart from public artifacts."""
        return json.dumps(
            {
                "design": self.design,
                "rdl_mapping": self.secret_mapping(),
                "per_net": {
                    p.net: {
                        "driver_id": self.driver_ids()[p.net],
                        "sink_id": self.sink_ids()[p.net],
                    }
                    for p in self.ports
                },
                "switchbox_perms": [list(b.internal_perm) for b in self.switchboxes],
                "seed": self.seed,
            },
            sort_keys=True,
            indent=1,
        )


def _net_centroid(n: Netlist, net: str, placement: Placement):
    pts = []
    driver = n.driver_of.get(net)
    if driver is not None and driver.id in placement.sites:
        _, x, y = placement.of(driver.id)
        pts.append((x, y))
    for sink_id, _pin in n.sinks_of[net]:
        if sink_id in placement.sites:
            _, x, y = placement.of(sink_id)
            pts.append((x, y))
    if not pts:
        raise PlanError(f"net {net} has no placed pins")
    cx = round(sum(p[0] for p in pts) / len(pts))
    cy = round(sum(p[1] for p in pts) / len(pts))
    return (cx, cy)


def plan_ports(
    n: Netlist,
    assignment: TierAssignment,
    placement: Placement,
    spec: GridSpec,
    cuts: Optional[CutSet] = None,
) -> F2FPlan:
    """Legalize a driver-side and a preliminary sink-side port for every
    cut net, both at the net's placed-instance centroid."""
    if cuts is None:
        cuts = cut_set(n, assignment)
    occupied = {BOTTOM: set(), TOP: set()}
    ports = []
    for net in sorted(cuts.nets):
        driver = n.driver_of[net]
        direction = B2T if assignment.tiers[driver.id] == BOTTOM else T2B
        centroid = _net_centroid(n, net, placement)
        d_tier = _DRIVER_TIER[direction]
        s_tier = _OPPOSITE[d_tier]
        true_port = nearest_track_site(centroid, spec, occupied[d_tier])
        occupied[d_tier].add(true_port)
        prelim = nearest_track_site(centroid, spec, occupied[s_tier])
        occupied[s_tier].add(prelim)
        ports.append(F2FPort(net, direction, true_port, prelim))
    return F2FPlan(n, assignment, placement, spec, tuple(ports))


def randomize_ports(
    plan: F2FPlan, mode: str = "full", seed: int = 0, radius: int = 0
) -> F2FPlan:
    """Draw each sink-side port fresh: uniformly over all free on-track
    sites ('full') or within a Chebyshev ball of the preliminary port
    ('radius').  The secret pairing is fixed here."""
    import random

    if mode not in ("full", "radius"):
        raise ValueError(f"unknown randomization mode {mode!r}")
    rng = random.Random(seed)
    spec = plan.spec
    occupied = {BOTTOM: set(), TOP: set()}
    for p in plan.ports:
        occupied[p.driver_tier].add(p.true_port)
        occupied[p.sink_tier].add(p.preliminary_port)
    new_ports = {}
    for p in sorted(plan.ports, key=lambda p: (p.direction, p.net)):
        tier = p.sink_tier
        occupied[tier].discard(p.preliminary_port)
        if mode == "full":
            pool = [s for s in spec.track_sites() if s not in occupied[tier]]
        else:
            px, py = p.preliminary_port
            pool = [
                (x, y)
                for x in range(0, spec.width, spec.track_pitch)
                for y in range(max(0, py - radius), min(spec.height, py + radius + 1))
                if abs(x - px) <= radius and (x, y) not in occupied[tier]
            ]
        if not pool:
            raise PlanError(f"site exhaustion while randomizing net {p.net}")
        site = pool[rng.randrange(len(pool))]
        occupied[tier].add(site)
        new_ports[p.net] = replace(p, randomized_port=site)
    ports = tuple(new_ports[p.net] for p in plan.ports)
    label = "full" if mode == "full" else f"radius:{radius}"
    return replace(plan, ports=ports, seed=seed, mode=label)


def group_switchboxes(plan: F2FPlan, seed: int = 0) -> F2FPlan:
    """Cluster same-direction vias into groups of four by driver-port
    proximity; shuffle each group's net-to-sink-pin association with a
    uniform permutation.  Leftover nets (count mod 4) stay ungrouped."""
    import random

    if not plan.randomized():
        raise PlanError("randomize_ports must run before switchbox grouping")
    rng = random.Random(seed)
    new_ports = {p.net: p for p in plan.ports}
    boxes = []
    remainder = 0
    for direction in (B2T, T2B):
        unassigned = sorted(
            (p for p in plan.ports if p.direction == direction),
            key=lambda p: (p.true_port, p.net),
        )
        while len(unassigned) >= 4:
            head = unassigned.pop(0)
            unassigned.sort(
                key=lambda p: (
                    math.dist(p.true_port, head.true_port),
                    p.true_port,
                    p.net,
                )
            )
            group = [head] + unassigned[:3]
            unassigned = sorted(
                unassigned[3:], key=lambda p: (p.true_port, p.net)
            )
            # the four sink pins are redealt among the member nets
            sink_sites = [p.randomized_port for p in group]
            deal = list(range(4))
            rng.shuffle(deal)
            for i, p in enumerate(group):
                new_ports[p.net] = replace(p, randomized_port=sink_sites[deal[i]])
            order_d = sorted(range(4), key=lambda i: group[i].true_port)
            driver_sites = tuple(group[i].true_port for i in order_d)
            ordered_sinks = sorted(sink_sites)
            perm = tuple(
                ordered_sinks.index(new_ports[group[i].net].randomized_port)
                for i in order_d
            )
            boxes.append(
                SwitchBox(direction, driver_sites, tuple(ordered_sinks), perm)
            )
        remainder += len(unassigned)
    ports = tuple(new_ports[p.net] for p in plan.ports)
    return replace(
        plan,
        ports=ports,
        switchboxes=tuple(boxes),
        switchbox_seed=seed,
        remainder=remainder,
    )


# ---------------------------------------------------------------------------
# Search space
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SearchSpace:
    count: int
    formula: str  # "plain" | "switchbox" | "switchbox_per_box"


def search_space(
    d_bot: int, d_top: int, with_switchboxes: bool = False,
    per_box_factor: bool = False,
) -> SearchSpace:
    """Count of candidate netlists an attacker must consider.

    Plain randomization admits d_bot! * d_top! one-to-one completions.
    With switchboxes the printed reduction is 4! * ((d_bot/4)! * (d_top/4)!);
    ``per_box_factor`` switches to (4!)**boxes instead of the single
    global 4! factor.
    """
    if d_bot < 0 or d_top < 0:
        raise ValueError("negative driver count")
    if not with_switchboxes:
        return SearchSpace(
            math.factorial(d_bot) * math.factorial(d_top), "plain"
        )
    if d_bot % 4 or d_top % 4:
        raise ValueError("switchbox counting needs driver counts divisible by 4")
    groups = math.factorial(d_bot // 4) * math.factorial(d_top // 4)
    if per_box_factor:
        boxes = d_bot // 4 + d_top // 4
        return SearchSpace(24**boxes * groups, "switchbox_per_box")
    return SearchSpace(24 * groups, "switchbox")


# ---------------------------------------------------------------------------
# Exposure views
# ---------------------------------------------------------------------------

FAB = "Fab"
END_USER = "EndUser"


@dataclass(frozen=True)
class ExposureView:
    """Exactly what one adversary sees.  Both tiers' logic, placements,
    and port sites are public; the RDL pairing and switchbox permutations
    never appear.  End-users additionally learn switchbox membership."""

    adversary: str
    design: str
    grid: GridSpec
    tier_gates: dict  # tier -> [{id, kind, fanins:[ref], fanout: ref}]
    placements: dict  # tier -> {gate id: [x, y]}
    ports: tuple  # ({id, tier, site, direction, role},)
    primary_inputs: tuple[str, ...]
    primary_outputs: tuple[str, ...]
    switchbox_membership: Optional[tuple] = None  # EndUser only

    def port_index(self) -> dict[str, dict]:
        return {p["id"]: p for p in self.ports}

    def to_json(self) -> str:
        payload = {
            "adversary": self.adversary,
            "design": self.design,
            "grid": [self.grid.width, self.grid.height, self.grid.track_pitch],
            "tier_gates": self.tier_gates,
            "placements": self.placements,
            "ports": list(self.ports),
            "primary_inputs": list(self.primary_inputs),
            "primary_outputs": list(self.primary_outputs),
        }
        if self.switchbox_membership is not None:
            payload["switchbox_membership"] = [
                dict(m) for m in self.switchbox_membership
            ]
        return json.dumps(payload, sort_keys=True, indent=1)


def expose(plan: F2FPlan, adversary: str) -> ExposureView:
    if adversary not in (FAB, END_USER):
        raise ValueError(f"unknown adversary {adversary!r}")
    if not plan.randomized():
        raise PlanError("cannot expose an unrandomized plan")
    n = plan.netlist
    tiers = plan.assignment.tiers
    d_ids, s_ids = plan.driver_ids(), plan.sink_ids()
    cut_nets = plan.port_by_net()

    def fanin_ref(gate_tier: str, net: str) -> str:
        if net in cut_nets and cut_nets[net].driver_tier != gate_tier:
            return f"port:{s_ids[net]}"
        return f"net:{net}"

    tier_gates = {BOTTOM: [], TOP: []}
    placements = {BOTTOM: {}, TOP: {}}
    for g in sorted(n.gates, key=lambda g: g.id):
        tier = tiers[g.id]
        tier_gates[tier].append(
            {
                "id": g.id,
                "kind": g.cell.kind,
                "fanins": [fanin_ref(tier, f) for f in g.fanins],
                "fanout": f"net:{g.fanout_net}",
            }
        )
        if g.id in plan.placement.sites:
            _, x, y = plan.placement.of(g.id)
            placements[tier][g.id] = [x, y]

    ports = []
    for p in plan.ports:
        ports.append(
            {
                "id": d_ids[p.net],
                "tier": p.driver_tier,
                "site": list(p.true_port),
                "direction": p.direction,
                "role": "driver",
                "attached": f"net:{p.net}",
            }
        )
        ports.append(
            {
                "id": s_ids[p.net],
                "tier": p.sink_tier,
                "site": list(p.randomized_port),
                "direction": p.direction,
                "role": "sink",
            }
        )
    ports.sort(key=lambda d: d["id"])

    membership = None
    if adversary == END_USER:
        site_to_d = {(p.direction, p.true_port): d_ids[p.net] for p in plan.ports}
        site_to_s = {
            (p.direction, p.randomized_port): s_ids[p.net] for p in plan.ports
        }
        membership = tuple(
            {
                "direction": b.direction,
                "driver_port_ids": [
                    site_to_d[(b.direction, s)] for s in b.driver_ports
                ],
                "sink_port_ids": [
                    site_to_s[(b.direction, s)] for s in b.sink_ports
                ],
            }
            for b in plan.switchboxes
        )

    return ExposureView(
        adversary=adversary,
        design=n.name,
        grid=plan.spec,
        tier_gates=tier_gates,
        placements=placements,
        ports=tuple(ports),
        primary_inputs=tuple(n.primary_inputs),
        primary_outputs=tuple(n.primary_outputs),
        switchbox_membership=membership,
    )


# ---------------------------------------------------------------------------
# Reassembly
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class _ProbeNetlist:
    """Shaped like a Netlist for _toposort, without invariant checks."""

    name: str
    gates: tuple[Gate, ...]
    primary_inputs: tuple[str, ...]
    primary_outputs: tuple[str, ...]


@dataclass(frozen=True)
class ReassemblyResult:
    netlist: Optional[Netlist]  # None when the guess induced a cycle
    cyclic: bool
    gates: tuple[Gate, ...]


def reassemble(n: Netlist, plan: F2FPlan, mapping_guess: dict) -> ReassemblyResult:
    """Rewire cross-tier sinks according to a guessed driver->sink-port
    bijection.  Cyclic results are flagged, not rejected: an attacker can
    produce them."""
    d_ids, s_ids = plan.driver_ids(), plan.sink_ids()
    net_of_d = {v: k for k, v in d_ids.items()}
    net_of_s = {v: k for k, v in s_ids.items()}
    if set(mapping_guess) != set(net_of_d):
        raise PlanError("guess does not cover the driver ports")
    if len(set(mapping_guess.values())) != len(mapping_guess) or set(
        mapping_guess.values()
    ) != set(net_of_s):
        raise PlanError("guess is not a bijection onto the sink ports")
    for did, sid in mapping_guess.items():
        if did.split(":")[0] != sid.split(":")[0]:
            raise PlanError(f"guess pairs {did} with {sid}: direction mismatch")

    # sink-side consumers of the port for net B are handed the guessed
    # driver's net instead
    rewire = {net_of_s[sid]: net_of_d[did] for did, sid in mapping_guess.items()}
    tiers = plan.assignment.tiers
    ports = plan.port_by_net()

    new_gates = []
    for g in n.gates:
        fanins = list(g.fanins)
        changed = False
        for i, f in enumerate(fanins):
            if f in rewire and tiers[g.id] == ports[f].sink_tier:
                fanins[i] = rewire[f]
                changed = True
        new_gates.append(
            Gate(g.id, g.cell, tuple(fanins), g.fanout_net) if changed else g
        )

    probe = _ProbeNetlist(n.name + "_reassembled", tuple(new_gates),
                          n.primary_inputs, n.primary_outputs)
    if _toposort(probe) is None:
        return ReassemblyResult(None, True, tuple(new_gates))
    return ReassemblyResult(
        Netlist(n.name + "_reassembled", tuple(new_gates),
                n.primary_inputs, n.primary_outputs),
        False,
        tuple(new_gates),
    )
