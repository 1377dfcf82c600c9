"""Gate-level netlist core: cell library, BENCH parsing/serialization,
topological utilities, and unit-delay static timing.

The netlist is the single source of truth for both the design under
protection and the oracle used to score attacks.  Sequential elements are
handled combinationally throughout: DFF outputs act as pseudo primary
inputs and DFF inputs as pseudo primary outputs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Optional

MAX_ARITY = 4

# kind -> (min_arity, max_arity)
_ARITY_RANGE = {
    "INV": (1, 1),
    "BUF": (1, 1),
    "DFF": (1, 1),
    "AND": (2, MAX_ARITY),
    "NAND": (2, MAX_ARITY),
    "OR": (2, MAX_ARITY),
    "NOR": (2, MAX_ARITY),
    "XOR": (2, 2),
    "XNOR": (2, 2),
}

_KIND_ALIASES = {"NOT": "INV", "BUFF": "BUF"}

# every multi-input kind in the library commutes over its inputs
SYMMETRIC_KINDS = frozenset({"AND", "NAND", "OR", "NOR", "XOR", "XNOR"})


class NetlistError(Exception):
    """Base class for structural netlist errors."""


class BenchSyntaxError(NetlistError):
    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        loc = ""
        if line is not None:
            loc = f" (line {line}" + (f", col {column})" if column is not None else ")")
        super().__init__(message + loc)


class CycleError(NetlistError):
    def __init__(self, cycle):
        self.cycle = list(cycle)
        super().__init__(f"combinational cycle: {' -> '.join(self.cycle)}")


@dataclass(frozen=True, order=True)
class CellType:
    kind: str
    arity: int

    def __post_init__(self):
        lo, hi = _ARITY_RANGE.get(self.kind, (None, None))
        if lo is None:
            raise NetlistError(f"unknown cell kind {self.kind!r}")
        if not lo <= self.arity <= hi:
            raise NetlistError(
                f"{self.kind} arity {self.arity} outside [{lo}, {hi}]"
            )

    @property
    def symmetric(self) -> bool:
        return self.kind in SYMMETRIC_KINDS

    def __str__(self):
        return f"{self.kind}{self.arity}" if self.arity > 1 else self.kind


@dataclass(frozen=True)
class Gate:
    id: str
    cell: CellType
    fanins: tuple[str, ...]
    fanout_net: str

    def __post_init__(self):
        if len(self.fanins) != self.cell.arity:
            raise NetlistError(
                f"gate {self.id}: {len(self.fanins)} fanins for {self.cell}"
            )


@dataclass(frozen=True)
class Netlist:
    """Immutable directed gate graph.

    ``nets`` holds every signal name (primary inputs plus each gate's
    fanout net).  Fanin order is significant and preserved by every
    transformation in the toolkit.
    """

    name: str
    gates: tuple[Gate, ...]
    primary_inputs: tuple[str, ...]
    primary_outputs: tuple[str, ...]

    def __post_init__(self):
        seen = set()
        for g in self.gates:
            if g.id in seen:
                raise NetlistError(f"duplicate gate id {g.id}")
            seen.add(g.id)
        defined = set(self.primary_inputs) | {g.fanout_net for g in self.gates}
        for g in self.gates:
            for f in g.fanins:
                if f not in defined:
                    raise NetlistError(f"gate {g.id}: undefined fanin net {f}")
        for po in self.primary_outputs:
            if po not in defined:
                raise NetlistError(f"undefined primary output {po}")
        # DFF-cut combinational graph must be a DAG
        order = _toposort(self)
        if order is None:
            raise NetlistError(f"netlist {self.name}: combinational cycle present")

    # -- derived indices (cached; the dataclass is frozen so these are safe) --

    @cached_property
    def nets(self) -> tuple[str, ...]:
        return tuple(self.primary_inputs) + tuple(
            g.fanout_net for g in self.gates
        )

    @cached_property
    def gate_by_id(self) -> dict[str, Gate]:
        return {g.id: g for g in self.gates}

    @cached_property
    def driver_of(self) -> dict[str, Gate]:
        """net name -> driving gate (absent for primary inputs)."""
        return {g.fanout_net: g for g in self.gates}

    @cached_property
    def sinks_of(self) -> dict[str, list[tuple[str, int]]]:
        """net name -> [(gate id, pin index)] consuming it."""
        sinks: dict[str, list[tuple[str, int]]] = {n: [] for n in self.nets}
        for g in self.gates:
            for pin, f in enumerate(g.fanins):
                sinks[f].append((g.id, pin))
        return sinks

    @cached_property
    def dffs(self) -> tuple[Gate, ...]:
        return tuple(g for g in self.gates if g.cell.kind == "DFF")

    @cached_property
    def topo_order(self) -> tuple[Gate, ...]:
        """Gates in combinational topological order (DFFs first as sources)."""
        order = _toposort(self)
        assert order is not None  # guaranteed by __post_init__
        return order

    @cached_property
    def sim_inputs(self) -> tuple[str, ...]:
        """Nets driven externally under the combinational frame."""
        return tuple(self.primary_inputs) + tuple(g.fanout_net for g in self.dffs)

    @cached_property
    def sim_outputs(self) -> tuple[str, ...]:
        """Observed nets: primary outputs plus DFF inputs (pseudo-POs)."""
        return tuple(self.primary_outputs) + tuple(g.fanins[0] for g in self.dffs)

    def stats(self) -> dict:
        census: dict[str, int] = {}
        for g in self.gates:
            census[str(g.cell)] = census.get(str(g.cell), 0) + 1
        return {
            "name": self.name,
            "gates": len(self.gates),
            "primary_inputs": len(self.primary_inputs),
            "primary_outputs": len(self.primary_outputs),
            "dffs": len(self.dffs),
            "census": dict(sorted(census.items())),
        }


def _combinational_fanins(g: Gate, drivers: dict[str, Gate]) -> Iterable[Gate]:
    """Fanin gates of ``g`` along combinational edges (stops at DFF outputs)."""
    if g.cell.kind == "DFF":
        return
    for f in g.fanins:
        d = drivers.get(f)
        if d is not None and d.cell.kind != "DFF":
            yield d


def _toposort(n: Netlist) -> Optional[tuple[Gate, ...]]:
    drivers = {g.fanout_net: g for g in n.gates}
    indeg = {}
    fanout: dict[str, list[Gate]] = {g.id: [] for g in n.gates}
    for g in n.gates:
        preds = list(_combinational_fanins(g, drivers))
        indeg[g.id] = len(preds)
        for p in preds:
            fanout[p.id].append(g)
    ready = [g for g in n.gates if indeg[g.id] == 0]
    order = []
    while ready:
        g = ready.pop()
        order.append(g)
        for s in fanout[g.id]:
            indeg[s.id] -= 1
            if indeg[s.id] == 0:
                ready.append(s)
    if len(order) != len(n.gates):
        return None
    return tuple(order)


def acyclicity_check(n: Netlist) -> Optional[list[str]]:
    """Return None when the combinational graph is acyclic, else a cycle.

    The cycle is reported as a gate-id list, shortest through the first
    unresolved gate found.  DFF boundaries break paths, so state loops
    are fine.
    """
    if _toposort(n) is not None:
        return None
    return _find_cycle(n)


def _find_cycle(n: Netlist) -> list[str]:
    drivers = n.driver_of
    # Kahn peeling: what survives lies on or feeds a cycle
    indeg = {}
    fanout: dict[str, list[Gate]] = {g.id: [] for g in n.gates}
    for g in n.gates:
        preds = list(_combinational_fanins(g, drivers))
        indeg[g.id] = len(preds)
        for p in preds:
            fanout[p.id].append(g)
    ready = [gid for gid, d in indeg.items() if d == 0]
    while ready:
        gid = ready.pop()
        for s in fanout[gid]:
            indeg[s.id] -= 1
            if indeg[s.id] == 0:
                ready.append(s.id)
    remaining = sorted(gid for gid, d in indeg.items() if d > 0)
    # shortest cycle through the first remaining gate, by BFS
    start = remaining[0]
    best = None
    succ = {gid: [s.id for s in fanout[gid] if indeg[s.id] > 0] for gid in remaining}
    from collections import deque

    parent = {start: None}
    q = deque([start])
    while q:
        u = q.popleft()
        for v in succ[u]:
            if v == start:
                cycle = [u]
                while parent[cycle[-1]] is not None:
                    cycle.append(parent[cycle[-1]])
                best = list(reversed(cycle))
                q.clear()
                break
            if v not in parent:
                parent[v] = u
                q.append(v)
    assert best is not None
    return best


# ---------------------------------------------------------------------------
# BENCH format
# ---------------------------------------------------------------------------

def parse_bench(text: str, name: str = "netlist") -> Netlist:
    """Parse a BENCH-format netlist.

    Grammar (keywords case-insensitive): '#' comment lines, INPUT(x),
    OUTPUT(x), and ``y = TYPE(a[,b[,c[,d]]])``.  NOT is an alias for INV
    and BUFF for BUF.  Gates wider than four inputs are rejected.
    """
    pis: list[str] = []
    pos: list[str] = []
    raw_gates: list[tuple[str, str, list[str], int]] = []
    defined: dict[str, int] = {}

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        upper = line.upper()
        if upper.startswith("INPUT(") or upper.startswith("OUTPUT("):
            kw_len = line.index("(")
            if not line.endswith(")"):
                raise BenchSyntaxError("missing ')'", lineno, len(line))
            sig = line[kw_len + 1 : -1].strip()
            if not sig:
                raise BenchSyntaxError("empty signal name", lineno, kw_len + 1)
            if upper.startswith("INPUT("):
                if sig in defined:
                    raise BenchSyntaxError(f"duplicate definition of {sig}", lineno)
                defined[sig] = lineno
                pis.append(sig)
            else:
                pos.append(sig)
            continue
        if "=" not in line:
            raise BenchSyntaxError(f"unrecognized line {line!r}", lineno, 1)
        lhs, rhs = line.split("=", 1)
        out = lhs.strip()
        rhs = rhs.strip()
        if not out:
            raise BenchSyntaxError("empty gate output name", lineno, 1)
        paren = rhs.find("(")
        if paren < 0 or not rhs.endswith(")"):
            raise BenchSyntaxError(f"malformed gate definition {rhs!r}", lineno)
        kind = rhs[:paren].strip().upper()
        kind = _KIND_ALIASES.get(kind, kind)
        if kind not in _ARITY_RANGE:
            raise BenchSyntaxError(f"unknown gate type {rhs[:paren].strip()!r}", lineno)
        args = [a.strip() for a in rhs[paren + 1 : -1].split(",")]
        if args == [""]:
            args = []
        if any(not a for a in args):
            raise BenchSyntaxError("empty fanin name", lineno)
        lo, hi = _ARITY_RANGE[kind]
        if not lo <= len(args) <= hi:
            raise BenchSyntaxError(
                f"{kind} with {len(args)} inputs (allowed {lo}..{hi})", lineno
            )
        if out in defined:
            raise BenchSyntaxError(f"duplicate definition of {out}", lineno)
        defined[out] = lineno
        raw_gates.append((out, kind, args, lineno))

    for out, kind, args, lineno in raw_gates:
        for a in args:
            if a not in defined:
                raise BenchSyntaxError(f"undefined signal {a!r}", lineno)
    for sig in pos:
        if sig not in defined:
            raise BenchSyntaxError(f"undefined output signal {sig!r}")

    gates = tuple(
        Gate(out, CellType(kind, len(args)), tuple(args), out)
        for out, kind, args, _ in raw_gates
    )
    try:
        return Netlist(name, gates, tuple(pis), tuple(pos))
    except NetlistError as e:
        raise BenchSyntaxError(str(e)) from e


def serialize_bench(n: Netlist) -> str:
    """Emit BENCH text: PIs first, then POs, then gates topologically."""
    lines = [f"# {n.name}"]
    lines += [f"INPUT({x})" for x in n.primary_inputs]
    lines += [f"OUTPUT({x})" for x in n.primary_outputs]
    for g in n.topo_order:
        lines.append(f"{g.fanout_net} = {g.cell.kind}({', '.join(g.fanins)})")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Unit-delay static timing
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TimingReport:
    arrival: dict[str, int]
    required: dict[str, int]
    slack: dict[str, int]
    critical_path_length: int


def sta_unit_delay(n: Netlist) -> TimingReport:
    """Unit delay per gate, zero wire delay.

    DFF outputs launch at time 0 and DFF inputs capture like primary
    outputs, so the analysis runs on the combinational frame.  Slack of a
    gate is the critical path length minus the longest path through it.
    """
    arrival: dict[str, int] = {}
    for g in n.topo_order:
        if g.cell.kind == "DFF":
            arrival[g.id] = 0
            continue
        a = 0
        for p in _combinational_fanins(g, n.driver_of):
            a = max(a, arrival[p.id])
        arrival[g.id] = a + 1
    cpl = max(arrival.values(), default=0)

    # longest downstream path to any observation point
    downstream: dict[str, int] = {g.id: 0 for g in n.gates}
    for g in reversed(n.topo_order):
        if g.cell.kind == "DFF":
            continue
        d = 0
        for sink_id, _pin in n.sinks_of[g.fanout_net]:
            sink = n.gate_by_id[sink_id]
            if sink.cell.kind == "DFF":
                continue
            d = max(d, downstream[sink_id] + 1)
        downstream[g.id] = d

    required = {}
    slack = {}
    for g in n.gates:
        if g.cell.kind == "DFF":
            required[g.id] = cpl
            slack[g.id] = cpl
            continue
        required[g.id] = cpl - downstream[g.id]
        slack[g.id] = required[g.id] - arrival[g.id]
        assert slack[g.id] >= 0
    return TimingReport(arrival, required, slack, cpl)
