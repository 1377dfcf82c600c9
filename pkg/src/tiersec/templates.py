"""Structure templates and subgraph mining.

A template is a small typed DAG with named boundary inputs.  Instances
are non-overlapping embeddings into a netlist; matched gates are later
preserved verbatim and their boundary wires lifted, so every instance of
one template is indistinguishable from the others once exposed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

from .netlist import CellType, Netlist, NetlistError, SYMMETRIC_KINDS

MAX_TEMPLATE_NODES = 8


class TemplateError(NetlistError):
    pass


@dataclass(frozen=True)
class TemplateNode:
    name: str
    cell: CellType
    pins: tuple[str, ...]  # boundary-input name, or "_" for edge/free


@dataclass(frozen=True)
class StructureTemplate:
    id: str
    nodes: tuple[TemplateNode, ...]
    edges: tuple[tuple[str, str, int], ...]  # (src node, dst node, pin)

    def __post_init__(self):
        if not 1 <= len(self.nodes) <= MAX_TEMPLATE_NODES:
            raise TemplateError(
                f"template {self.id}: {len(self.nodes)} nodes (max "
                f"{MAX_TEMPLATE_NODES})"
            )
        names = {n.name for n in self.nodes}
        if len(names) != len(self.nodes):
            raise TemplateError(f"template {self.id}: duplicate node names")
        for src, dst, pin in self.edges:
            if src not in names or dst not in names:
                raise TemplateError(f"template {self.id}: edge on unknown node")
            node = next(n for n in self.nodes if n.name == dst)
            if not 0 <= pin < node.cell.arity:
                raise TemplateError(f"template {self.id}: pin {pin} out of range")
        if len(self.nodes) > 1 and not self._connected():
            raise TemplateError(f"template {self.id}: not connected")

    def _connected(self) -> bool:
        adj: dict[str, set[str]] = {n.name: set() for n in self.nodes}
        for src, dst, _ in self.edges:
            adj[src].add(dst)
            adj[dst].add(src)
        # boundary-input sharing also connects nodes
        by_input: dict[str, list[str]] = {}
        for n in self.nodes:
            for p in n.pins:
                if p != "_":
                    by_input.setdefault(p, []).append(n.name)
        for group in by_input.values():
            for other in group[1:]:
                adj[group[0]].add(other)
                adj[other].add(group[0])
        seen = set()
        stack = [self.nodes[0].name]
        while stack:
            x = stack.pop()
            if x in seen:
                continue
            seen.add(x)
            stack.extend(adj[x])
        return len(seen) == len(self.nodes)

    @cached_property
    def internal_targets(self) -> dict[str, list[tuple[str, int]]]:
        """dst node -> [(src node, pin)]"""
        out: dict[str, list[tuple[str, int]]] = {n.name: [] for n in self.nodes}
        for src, dst, pin in self.edges:
            out[dst].append((src, pin))
        return out

    @cached_property
    def outputs(self) -> tuple[str, ...]:
        fed = {src for src, _, _ in self.edges}
        return tuple(n.name for n in self.nodes if n.name not in fed)

    @cached_property
    def topo_nodes(self) -> tuple[TemplateNode, ...]:
        """Nodes ordered so edge sources precede their targets."""
        incoming = {n.name: {s for s, d, _ in self.edges if d == n.name}
                    for n in self.nodes}
        done: list[TemplateNode] = []
        names_done: set[str] = set()
        pending = list(self.nodes)
        while pending:
            for i, n in enumerate(pending):
                if incoming[n.name] <= names_done:
                    done.append(pending.pop(i))
                    names_done.add(n.name)
                    break
            else:
                raise TemplateError(f"template {self.id}: cyclic")
        return tuple(done)


def _parse_cell(token: str) -> CellType:
    kind = token.rstrip("0123456789")
    arity = token[len(kind):]
    return CellType(kind.upper(), int(arity) if arity else 1)


def parse_templates(text: str) -> list[StructureTemplate]:
    """Line format::

        TEMPLATE a
        n1 NAND2 in:x,y
        n2 NAND2 in:x,_
        n1 -> n2.pin1
        END
    """
    templates = []
    cur_id = None
    nodes: list[TemplateNode] = []
    edges: list[tuple[str, str, int]] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.upper().startswith("TEMPLATE"):
            if cur_id is not None:
                raise TemplateError(f"line {lineno}: nested TEMPLATE")
            cur_id = line.split(None, 1)[1].strip()
            nodes, edges = [], []
        elif line.upper() == "END":
            if cur_id is None:
                raise TemplateError(f"line {lineno}: END without TEMPLATE")
            templates.append(StructureTemplate(cur_id, tuple(nodes), tuple(edges)))
            cur_id = None
        elif "->" in line:
            src, dst = (x.strip() for x in line.split("->", 1))
            if "." not in dst or not dst.rsplit(".", 1)[1].startswith("pin"):
                raise TemplateError(f"line {lineno}: edge needs '.pin<k>'")
            dname, pin = dst.rsplit(".", 1)
            edges.append((src, dname.strip(), int(pin[3:])))
        else:
            parts = line.split()
            if len(parts) < 2:
                raise TemplateError(f"line {lineno}: malformed node")
            name, cell_tok = parts[0], parts[1]
            cell = _parse_cell(cell_tok)
            pins = tuple(["_"] * cell.arity)
            if len(parts) > 2:
                if not parts[2].startswith("in:"):
                    raise TemplateError(f"line {lineno}: expected in:")
                pins = tuple(x.strip() for x in parts[2][3:].split(","))
                if len(pins) != cell.arity:
                    raise TemplateError(
                        f"line {lineno}: {len(pins)} pins for arity {cell.arity}"
                    )
            nodes.append(TemplateNode(name, cell, pins))
    if cur_id is not None:
        raise TemplateError("unterminated TEMPLATE block")
    return templates


# The seven stock templates: small NAND/NOR/INV shapes that the rewrite
# rules produce naturally.  Representative, not canonical; user template
# files override them.
DEFAULT_TEMPLATES_TEXT = """\
# stock structure templates (a)-(g)
TEMPLATE a
n1 NAND2 in:i0,i1
n2 NAND2 in:i2,i3
n3 NAND2
n1 -> n3.pin0
n2 -> n3.pin1
END

TEMPLATE b
n1 NAND2 in:x,y
n2 NAND2 in:x,_
n3 NAND2 in:y,_
n4 NAND2
n1 -> n2.pin1
n1 -> n3.pin1
n2 -> n4.pin0
n3 -> n4.pin1
END

TEMPLATE c
n1 NOR2 in:i0,i1
n2 NOR2 in:i2,i3
n3 NOR2
n1 -> n3.pin0
n2 -> n3.pin1
END

TEMPLATE d
n1 NAND2 in:a,b
n2 INV
n3 NAND2 in:_,c
n1 -> n2.pin0
n2 -> n3.pin0
END

TEMPLATE e
n1 INV in:a
n2 INV in:b
n3 NAND2
n1 -> n3.pin0
n2 -> n3.pin1
END

TEMPLATE f
n1 INV in:a
n2 INV in:b
n3 NOR2
n1 -> n3.pin0
n2 -> n3.pin1
END

TEMPLATE g
n1 NOR2 in:x,y
n2 NOR2 in:x,_
n3 NOR2 in:y,_
n4 NOR2
n1 -> n2.pin1
n1 -> n3.pin1
n2 -> n4.pin0
n3 -> n4.pin1
END
"""


def default_templates() -> list[StructureTemplate]:
    return parse_templates(DEFAULT_TEMPLATES_TEXT)


# ---------------------------------------------------------------------------
# Mining
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StructureInstance:
    template_id: str
    gate_ids: tuple[str, ...]
    boundary_nets: tuple[str, ...]


class StructureInstances(tuple):
    """Pairwise-disjoint instances with census helpers."""

    def census(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for inst in self:
            out[inst.template_id] = out.get(inst.template_id, 0) + 1
        return out

    def covered_gates(self) -> set[str]:
        out = set()
        for inst in self:
            out.update(inst.gate_ids)
        return out


def _match_node(n: Netlist, tpl: StructureTemplate, node: TemplateNode,
                gate, mapping: dict, bindings: dict) -> list[dict]:
    """All consistent pin bindings for placing ``gate`` on ``node``;
    each result is an updated boundary-binding dict (or None)."""
    # (kind, key): key is a mapped source gate id, or a boundary name
    needed: list[tuple[str, str]] = []
    for src, pin in tpl.internal_targets[node.name]:
        needed.append(("gate", mapping[src]))
    for p in node.pins:
        if p != "_":
            needed.append(("bound", p))

    fanin_sources = []
    for f in gate.fanins:
        d = n.driver_of.get(f)
        fanin_sources.append((f, d.id if d is not None else None))

    symmetric = gate.cell.kind in SYMMETRIC_KINDS or gate.cell.arity == 1

    if not symmetric:
        # positional pins: internal edges and names must sit exactly
        binds = dict(bindings)
        for src, pin in tpl.internal_targets[node.name]:
            net = gate.fanins[pin]
            d = n.driver_of.get(net)
            if d is None or d.id != mapping[src]:
                return []
        for pin, p in enumerate(node.pins):
            if p == "_":
                continue
            net = gate.fanins[pin]
            if p in binds and binds[p] != net:
                return []
            binds[p] = net
        return [binds]

    def backtrack(i, used, binds):
        if i == len(needed):
            return [binds]
        kind, key = needed[i]
        out = []
        for slot, (net, drv) in enumerate(fanin_sources):
            if slot in used:
                continue
            if kind == "gate":
                if drv != key:
                    continue
            else:
                if key in binds and binds[key] != net:
                    continue
            nb = binds if kind == "gate" else {**binds, key: net}
            out.extend(backtrack(i + 1, used | {slot}, nb))
            if out and kind == "gate":
                break  # same-driver slots are interchangeable
        return out

    results = backtrack(0, frozenset(), dict(bindings))
    # dedupe equivalent binding dicts
    uniq = []
    seen = set()
    for r in results:
        key = tuple(sorted(r.items()))
        if key not in seen:
            seen.add(key)
            uniq.append(r)
    return uniq


def find_embeddings(n: Netlist, tpl: StructureTemplate,
                    anchor_gate=None, forbidden: set | None = None):
    """Enumerate embeddings in canonical order.

    Yields dicts node name -> gate.  ``forbidden`` gates are skipped;
    when ``anchor_gate`` is given, only embeddings containing it are
    produced.
    """
    forbidden = forbidden or set()
    order = tpl.topo_nodes
    by_type: dict[CellType, list] = {}
    for g in n.gates:
        if g.id in forbidden:
            continue
        by_type.setdefault(g.cell, []).append(g)
    for v in by_type.values():
        v.sort(key=lambda g: g.id)

    def extend(i, mapping, bindings, used):
        if i == len(order):
            if anchor_gate is not None and anchor_gate not in used:
                return
            yield dict(mapping)
            return
        node = order[i]
        for gate in by_type.get(node.cell, ()):
            if gate.id in used:
                continue
            for binds in _match_node(n, tpl, node, gate, mapping, bindings):
                mapping[node.name] = gate.id
                yield from extend(i + 1, mapping, binds, used | {gate.id})
                del mapping[node.name]

    yield from extend(0, {}, {}, frozenset())


def _boundary_nets(n: Netlist, tpl: StructureTemplate, mapping: dict) -> tuple:
    gates = set(mapping.values())
    nets = set()
    for gid in gates:
        g = n.gate_by_id[gid]
        for f in g.fanins:
            d = n.driver_of.get(f)
            if d is None or d.id not in gates:
                nets.add(f)
        # the output crosses the boundary when consumed outside (or a PO)
        external = any(s not in gates for s, _ in n.sinks_of[g.fanout_net])
        if external or g.fanout_net in n.primary_outputs:
            nets.add(g.fanout_net)
    return tuple(sorted(nets))


def mine_structures(
    n: Netlist,
    templates: list[StructureTemplate],
    locked: StructureInstances | None = None,
) -> StructureInstances:
    """Greedy maximal non-overlapping matching, template by template in
    id order, candidate embeddings in lowest-gate-id order.  ``locked``
    instances are kept verbatim and their gates never reused."""
    instances = list(locked or ())
    used: set[str] = set()
    for inst in instances:
        used.update(inst.gate_ids)
    for tpl in sorted(templates, key=lambda t: t.id):
        for mapping in find_embeddings(n, tpl, forbidden=used):
            gates = set(mapping.values())
            if gates & used:
                continue
            used |= gates
            ordered = tuple(mapping[node.name] for node in tpl.nodes)
            instances.append(
                StructureInstance(tpl.id, ordered, _boundary_nets(n, tpl, mapping))
            )
    return StructureInstances(instances)
