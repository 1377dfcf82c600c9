"""Abstract per-tier geometry: grid placement and routing-track sites.

Placement exists so that proximity has meaning: the annealer pulls
connected cells together, which is exactly the signal the proximity
attack exploits and the port randomization must destroy.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field

from .netlist import Netlist, NetlistError

BOTTOM = "Bottom"
TOP = "Top"


class LayoutError(NetlistError):
    pass


@dataclass(frozen=True)
class GridSpec:
    width: int
    height: int
    track_pitch: int = 2

    def __post_init__(self):
        if self.width < 1 or self.height < 1 or self.track_pitch < 1:
            raise LayoutError("degenerate grid")

    @property
    def diagonal(self) -> float:
        return math.hypot(self.width - 1, self.height - 1)

    def on_track(self, site) -> bool:
        return site[0] % self.track_pitch == 0

    def track_sites(self):
        for x in range(0, self.width, self.track_pitch):
            for y in range(self.height):
                yield (x, y)

    @classmethod
    def for_gate_count(cls, n_gates: int, utilization: float = 0.5,
                       track_pitch: int = 2, min_ports: int = 0) -> "GridSpec":
        """Square grid sized for the gates and, when given, for at least
        twice ``min_ports`` free on-track sites per tier."""
        side = max(2, math.ceil(math.sqrt(max(n_gates, 1) / utilization)))
        if min_ports:
            side = max(side, math.ceil(math.sqrt(2 * track_pitch * min_ports)))
        return cls(side, side, track_pitch)


@dataclass(frozen=True)
class Placement:
    """gate id -> (tier, x, y); no two gates share a site on a tier."""

    sites: dict[str, tuple[str, int, int]]
    spec: GridSpec

    def __post_init__(self):
        taken = set()
        for gid, (tier, x, y) in self.sites.items():
            if not (0 <= x < self.spec.width and 0 <= y < self.spec.height):
                raise LayoutError(f"{gid} at ({x},{y}) outside grid")
            if (tier, x, y) in taken:
                raise LayoutError(f"site ({tier},{x},{y}) double-booked")
            taken.add((tier, x, y))

    def of(self, gid: str) -> tuple[str, int, int]:
        return self.sites[gid]

    def occupied(self, tier: str) -> set[tuple[int, int]]:
        return {(x, y) for t, x, y in self.sites.values() if t == tier}

    def to_csv(self) -> str:
        lines = ["gate_id,tier,x,y"]
        for gid in sorted(self.sites):
            tier, x, y = self.sites[gid]
            lines.append(f"{gid},{tier},{x},{y}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_csv(cls, text: str, spec: GridSpec) -> "Placement":
        sites = {}
        for line in text.splitlines()[1:]:
            if not line.strip():
                continue
            gid, tier, x, y = line.rsplit(",", 3)
            sites[gid] = (tier, int(x), int(y))
        return cls(sites, spec)


def _net_pins(n: Netlist, placement_sites, tier=None):
    """net -> [(x, y)] of placed pins (driver + sinks), optionally one tier."""
    pins: dict[str, list[tuple[int, int]]] = {}
    for g in n.gates:
        entry = placement_sites.get(g.id)
        if entry is None:
            continue
        t, x, y = entry
        if tier is not None and t != tier:
            continue
        pins.setdefault(g.fanout_net, []).append((x, y))
        for f in g.fanins:
            pins.setdefault(f, []).append((x, y))
    return pins


def hpwl(n: Netlist, placement: Placement, plan=None) -> int:
    """Half-perimeter wirelength, cross-tier nets measured per tier.

    When an F2F plan is supplied, each tier's bounding box for a cut net
    also covers that tier's port site.
    """
    total = 0
    port_at = {}
    if plan is not None:
        for pp in plan.ports:
            port_at.setdefault(pp.net, []).append((pp.driver_tier, pp.true_port))
            port_at[pp.net].append((pp.sink_tier, pp.randomized_port))
    for tier in (BOTTOM, TOP):
        for net, pins in _net_pins(n, placement.sites, tier).items():
            pins = list(pins)
            for t, site in port_at.get(net, ()):
                if t == tier and site is not None:
                    pins.append(site)
            if len(pins) < 2:
                continue
            xs = [p[0] for p in pins]
            ys = [p[1] for p in pins]
            total += (max(xs) - min(xs)) + (max(ys) - min(ys))
    return total


def nearest_track_site(pt, spec: GridSpec, occupied, max_radius_tracks: int = 64):
    """Closest free on-track site to ``pt``; ties go to low (x, y).

    The search radius grows one track pitch at a time up to the
    threshold, mirroring stepwise legalization.
    """
    px, py = pt
    best = None
    for r_tracks in range(0, max_radius_tracks + 1):
        r = r_tracks * spec.track_pitch
        x_lo = max(0, (px - r) // spec.track_pitch * spec.track_pitch)
        candidates = []
        x = x_lo
        while x < min(spec.width, px + r + 1):
            if abs(x - px) <= r:
                for y in range(max(0, py - r), min(spec.height, py + r + 1)):
                    if (x, y) not in occupied:
                        candidates.append((x, y))
            x += spec.track_pitch
        if candidates:
            best = min(
                candidates,
                key=lambda s: (math.hypot(s[0] - px, s[1] - py), s[0], s[1]),
            )
            # a site in this ring could still be beaten by one a ring
            # further out only if it sits at the ring corner; the growth
            # loop guarantees minimality once a candidate lies within r
            if math.hypot(best[0] - px, best[1] - py) <= r or r_tracks == max_radius_tracks:
                return best
    if best is not None:
        return best
    raise LayoutError(
        f"no free on-track site within {max_radius_tracks} tracks of {pt}"
    )


def _hpwl_of_nets(nets, pins_by_net):
    total = 0
    for net in nets:
        pins = pins_by_net.get(net)
        if not pins or len(pins) < 2:
            continue
        xs = [p[0] for p in pins]
        ys = [p[1] for p in pins]
        total += (max(xs) - min(xs)) + (max(ys) - min(ys))
    return total


def place(n: Netlist, assignment, spec: GridSpec, seed: int) -> Placement:
    """Simulated-annealing placement, one tier at a time.

    Moves are relocations to free sites or swaps; cooling is geometric
    with a budget proportional to the tier's gate count.  Deterministic
    for a fixed seed.
    """
    rng = random.Random(seed)
    sites: dict[str, tuple[str, int, int]] = {}
    for tier in (BOTTOM, TOP):
        gids = sorted(gid for gid, t in assignment.tiers.items() if t == tier)
        if not gids:
            continue
        if len(gids) > spec.width * spec.height:
            raise LayoutError(
                f"{tier}: {len(gids)} gates exceed {spec.width}x{spec.height} grid"
            )
        tier_sites = _anneal_tier(n, gids, spec, rng)
        for gid, xy in tier_sites.items():
            sites[gid] = (tier, xy[0], xy[1])
    return Placement(sites, spec)


def _anneal_tier(n: Netlist, gids, spec: GridSpec, rng,
                 moves_per_gate: int = 160) -> dict:
    all_sites = [(x, y) for x in range(spec.width) for y in range(spec.height)]
    loc = dict(zip(gids, rng.sample(all_sites, len(gids))))
    gid_set = set(gids)

    # nets restricted to this tier, one pin per touching gate
    nets_of_gate: dict[str, list[str]] = {g: [] for g in gids}
    pins_of_net: dict[str, list[str]] = {}
    for g in n.gates:
        if g.id not in gid_set:
            continue
        for net in {g.fanout_net, *g.fanins}:
            pins_of_net.setdefault(net, []).append(g.id)
            nets_of_gate[g.id].append(net)

    def cost_of(nets) -> int:
        total = 0
        for net in nets:
            pins = pins_of_net[net]
            if len(pins) < 2:
                continue
            xs = [loc[p][0] for p in pins]
            ys = [loc[p][1] for p in pins]
            total += (max(xs) - min(xs)) + (max(ys) - min(ys))
        return total

    free = [s for s in all_sites if s not in set(loc.values())]
    budget = moves_per_gate * len(gids)
    temp = max(2.0, (spec.width + spec.height) / 4)
    cooling = 0.95
    n_stages = max(1, int(math.log(temp / 0.05) / -math.log(cooling)))
    steps_per_temp = max(1, budget // n_stages)
    while temp > 0.05:
        for _ in range(steps_per_temp):
            a = gids[rng.randrange(len(gids))]
            if free and rng.random() < 0.5:
                ti = rng.randrange(len(free))
                target = free[ti]
                affected = nets_of_gate[a]
                before = cost_of(affected)
                old = loc[a]
                loc[a] = target
                delta = cost_of(affected) - before
                if delta <= 0 or rng.random() < math.exp(-delta / temp):
                    free[ti] = old
                else:
                    loc[a] = old
            else:
                b = gids[rng.randrange(len(gids))]
                if a == b:
                    continue
                affected = list({*nets_of_gate[a], *nets_of_gate[b]})
                before = cost_of(affected)
                loc[a], loc[b] = loc[b], loc[a]
                delta = cost_of(affected) - before
                if not (delta <= 0 or rng.random() < math.exp(-delta / temp)):
                    loc[a], loc[b] = loc[b], loc[a]
        temp *= cooling
    return loc
