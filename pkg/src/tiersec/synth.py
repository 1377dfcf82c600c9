"""Seeded construction of gate-level netlists.

Two jobs live here: random DAGs for property tests, and the bundled
benchmark stand-ins.  The stand-ins carry the published primary I/O
interfaces of the circuits they are named after (and, for c432, the
INV/NAND2/NOR2 census of its 3-cell-library mapping), but they are
reconstructions generated by this module, not the original ISCAS-85 /
ITC-99 files; point TIERSEC_CORPUS at real BENCH files to run those.
"""

from __future__ import annotations

import random

from .netlist import CellType, Gate, Netlist

# kind pool for unconstrained random netlists
_RANDOM_KINDS = [
    ("INV", 1),
    ("BUF", 1),
    ("AND", 2),
    ("NAND", 2),
    ("OR", 2),
    ("NOR", 2),
    ("XOR", 2),
    ("XNOR", 2),
    ("NAND", 3),
    ("NOR", 3),
    ("AND", 3),
]


def build_netlist(
    name: str,
    n_inputs: int,
    n_outputs: int,
    cells: list[CellType],
    seed: int,
    n_dffs: int = 0,
    locality: float = 0.25,
    module_names: tuple[str, ...] = (),
    depth_factor: float = 1.3,
) -> Netlist:
    """Generate a connected random DAG with an exact cell census.

    Gates fill levels so the depth comes out near depth_factor*sqrt(n),
    matching the shape of technology-mapped logic.  First fanins come
    from the previous level (unused nets first, so little dangles);
    remaining fanins reach geometrically further back.  Primary outputs
    are taken from the deepest leftover nets.  When ``module_names`` is
    given, gate ids gain '/'-separated prefixes in contiguous blocks.
    """
    rng = random.Random(seed)
    cells = list(cells)
    rng.shuffle(cells)
    pis = [f"I{k}" for k in range(n_inputs)]
    dff_qs = [f"Q{k}" for k in range(n_dffs)]
    used = {x: 0 for x in pis + dff_qs}
    levels: list[list[str]] = [pis + dff_qs]
    unused_at: list[list[str]] = [list(levels[0])]

    n_gates = len(cells)
    n_levels = max(2, int(depth_factor * n_gates**0.5))

    def prefix_for(i: int) -> str:
        if not module_names:
            return ""
        block = n_gates // len(module_names) + 1
        return module_names[min(i // block, len(module_names) - 1)] + "/"

    def take(level: int, exclude) -> str:
        for lv in range(level, -1, -1):
            pool = [x for x in unused_at[lv] if x not in exclude]
            if pool:
                return pool[rng.randrange(len(pool))]
            pool = [x for x in levels[lv] if x not in exclude]
            if pool:
                return pool[rng.randrange(len(pool))]
        return levels[0][0]

    gates = []
    reach = max(1.0, 1.0 / max(locality, 0.02))
    reserve_p = min(0.2, 2.5 * n_outputs / n_gates)
    reserved: list[str] = []
    for i, cell in enumerate(cells):
        out = f"{prefix_for(i)}g{i}"
        lvl = min(1 + (i * n_levels) // n_gates, len(levels))
        back0 = 1 if rng.random() < 0.6 else 1 + min(
            int(rng.expovariate(1.0 / reach)), lvl - 1
        )
        fanins = [take(lvl - back0, ())]
        while len(fanins) < cell.arity:
            back = 1 + min(int(rng.expovariate(1.0 / reach)), lvl - 1)
            fanins.append(take(lvl - back, fanins))
        for f in fanins:
            used[f] += 1
            for ua in unused_at:
                if f in ua:
                    ua.remove(f)
                    break
        gates.append(Gate(out, cell, tuple(fanins), out))
        if lvl == len(levels):
            levels.append([])
            unused_at.append([])
        used[out] = 0
        if lvl < n_levels - 1 and rng.random() < reserve_p:
            reserved.append(out)  # cone terminates here: PO candidate
        else:
            levels[lvl].append(out)
            unused_at[lvl].append(out)

    unused = [x for ua in unused_at for x in ua] + reserved

    # outputs spread over depth: half from the deepest leftovers, the
    # rest sampled across the mid-to-deep band
    order_hint = {g.fanout_net: i for i, g in enumerate(gates)}
    cand = sorted(
        (x for x in unused if x not in pis and x not in dff_qs),
        key=order_hint.get,
    )
    deep = max(1, n_outputs - n_outputs // 2)
    pos = cand[-deep:]
    band = cand[len(cand) // 4 : -deep]
    if band and n_outputs > deep:
        step = max(1, len(band) // (n_outputs - deep))
        for x in band[::step]:
            if len(pos) < n_outputs:
                pos.append(x)
    pos = pos[:n_outputs]
    for x in pos:
        unused.remove(x)
    # rewire leftovers into later gates so nothing dangles
    order_of = {g.fanout_net: i for i, g in enumerate(gates)}
    for u in [x for x in unused if x not in pis and x not in dff_qs]:
        for j in range(order_of[u] + 1, len(gates)):
            g = gates[j]
            swappable = [
                p
                for p, f in enumerate(g.fanins)
                if used[f] >= 2 and f != u and u not in g.fanins
            ]
            if swappable:
                p = swappable[0]
                used[g.fanins[p]] -= 1
                used[u] += 1
                new_fanins = list(g.fanins)
                new_fanins[p] = u
                gates[j] = Gate(g.id, g.cell, tuple(new_fanins), g.fanout_net)
                break
    while len(pos) < n_outputs:
        # interface padding: deep nets may serve as POs even when consumed
        cand = gates[-1 - len(pos)].fanout_net
        if cand not in pos:
            pos.append(cand)
    # leftover primary inputs feed the widest gates
    for u in [x for x in pis + dff_qs if used[x] == 0]:
        for j in range(len(gates) - 1, -1, -1):
            g = gates[j]
            swappable = [
                p
                for p, f in enumerate(g.fanins)
                if used[f] >= 2 and u not in g.fanins
            ]
            if swappable:
                p = swappable[0]
                used[g.fanins[p]] -= 1
                used[u] += 1
                new_fanins = list(g.fanins)
                new_fanins[p] = u
                gates[j] = Gate(g.id, g.cell, tuple(new_fanins), g.fanout_net)
                break
    # state elements: Q was available as a source, D taps a deep net
    comb = list(gates)
    for k in range(n_dffs):
        d_net = comb[-((k * 7) % len(comb) + 1)].fanout_net
        gates.append(Gate(dff_qs[k], CellType("DFF", 1), (d_net,), dff_qs[k]))

    return Netlist(name, tuple(gates), tuple(pis), tuple(pos))


def random_netlist(n_gates: int, n_inputs: int, n_outputs: int, seed: int,
                   n_dffs: int = 0) -> Netlist:
    rng = random.Random(seed ^ 0x5EED)
    cells = [CellType(*rng.choice(_RANDOM_KINDS)) for _ in range(n_gates)]
    return build_netlist(
        f"rand{n_gates}_{seed}", n_inputs, n_outputs, cells, seed, n_dffs=n_dffs
    )


def _census(**kinds: int) -> list[CellType]:
    out = []
    for spec, count in kinds.items():
        kind = spec.rstrip("0123456789")
        arity = int(spec[len(kind):]) if spec[len(kind):] else 1
        out.extend([CellType(kind, arity)] * count)
    return out


# name -> (n_inputs, n_outputs, n_dffs, census, locality)
# I/O widths follow the published circuits; gate mixes are plausible
# reconstructions (c432 uses the exact lib-3 census 61/69/30).
BENCHMARK_SPECS = {
    "c432": (36, 7, 0, _census(NOR2=61, NAND2=69, INV=30), 0.22),
    "c880": (
        60, 26, 0,
        _census(AND2=100, NAND2=120, OR2=50, NOR2=60, INV=43, NAND3=6, NOR3=4),
        0.20,
    ),
    "c1355": (
        41, 32, 0,
        _census(NAND2=380, AND2=70, INV=56, NOR2=40),
        0.18,
    ),
    "c1908": (
        33, 25, 0,
        _census(NAND2=550, INV=180, AND2=80, NOR2=50, XOR2=20),
        0.16,
    ),
    "c3540": (
        50, 22, 0,
        _census(NAND2=700, AND2=250, OR2=160, NOR2=220, INV=260, XOR2=59,
                NAND3=12, AND3=8),
        0.14,
    ),
    # small sequential stand-ins at ITC-99 scale
    "b01s": (4, 2, 5, _census(NAND2=20, NOR2=10, INV=10), 0.35),
    "b02s": (3, 1, 4, _census(NAND2=12, NOR2=6, INV=5), 0.35),
    "b03s": (6, 4, 20, _census(NAND2=70, NOR2=35, AND2=20, INV=25), 0.25),
}

CORPUS_SEED = 20190815  # fixed so the bundled files are reproducible

ISCAS85 = ("c432", "c880", "c1355", "c1908", "c3540")
ITC99 = ("b01s", "b02s", "b03s")


def benchmark(name: str) -> Netlist:
    n_in, n_out, n_dffs, census, locality = BENCHMARK_SPECS[name]
    idx = list(BENCHMARK_SPECS).index(name)
    return build_netlist(
        name, n_in, n_out, census, CORPUS_SEED + 7919 * idx,
        n_dffs=n_dffs, locality=locality,
    )


C17_BENCH = """\
# c17 (ISCAS-85)
INPUT(1)
INPUT(2)
INPUT(3)
INPUT(6)
INPUT(7)
OUTPUT(22)
OUTPUT(23)
10 = NAND(1, 3)
11 = NAND(3, 6)
16 = NAND(2, 11)
19 = NAND(11, 7)
22 = NAND(10, 16)
23 = NAND(16, 19)
"""
