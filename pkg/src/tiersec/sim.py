"""Bit-parallel logic simulation: 64 patterns per machine word, one lane
per net.  A naive single-pattern interpreter is kept alongside as the
oracle for the packed evaluator.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .netlist import Gate, Netlist, NetlistError

_WORD = 64


class LaneMismatch(NetlistError):
    pass


@dataclass(frozen=True)
class PatternBlock:
    """Packed bit-vectors: ``bits[lane, word]`` holds 64 patterns per word.

    Pattern count is recorded explicitly; spare bits in the last word are
    kept zero.
    """

    lanes: tuple[str, ...]
    n_patterns: int
    bits: np.ndarray  # shape (len(lanes), ceil(n/64)), dtype uint64

    def __post_init__(self):
        words = (self.n_patterns + _WORD - 1) // _WORD
        if self.bits.shape != (len(self.lanes), words):
            raise LaneMismatch(
                f"bits shape {self.bits.shape} vs {len(self.lanes)} lanes, "
                f"{words} words"
            )

    @property
    def words(self) -> int:
        return self.bits.shape[1]

    def lane(self, name: str) -> np.ndarray:
        return self.bits[self.lanes.index(name)]

    def pattern(self, i: int) -> dict[str, int]:
        if not 0 <= i < self.n_patterns:
            raise IndexError(i)
        w, b = divmod(i, _WORD)
        return {
            name: int((self.bits[j, w] >> np.uint64(b)) & np.uint64(1))
            for j, name in enumerate(self.lanes)
        }


def _tail_mask(n_patterns: int, words: int) -> np.ndarray:
    mask = np.full(words, ~np.uint64(0), dtype=np.uint64)
    rem = n_patterns % _WORD
    if rem:
        mask[-1] = np.uint64((1 << rem) - 1)
    return mask


def block_from_patterns(lanes, patterns) -> PatternBlock:
    """Build a block from an iterable of {lane: 0/1} dicts."""
    lanes = tuple(lanes)
    patterns = list(patterns)
    words = max(1, (len(patterns) + _WORD - 1) // _WORD) if patterns else 1
    bits = np.zeros((len(lanes), words), dtype=np.uint64)
    for i, pat in enumerate(patterns):
        w, b = divmod(i, _WORD)
        for j, name in enumerate(lanes):
            if pat[name]:
                bits[j, w] |= np.uint64(1) << np.uint64(b)
    return PatternBlock(lanes, len(patterns), bits)


def random_block(lanes, n_patterns: int, seed: int) -> PatternBlock:
    lanes = tuple(lanes)
    rng = np.random.default_rng(seed)
    words = max(1, (n_patterns + _WORD - 1) // _WORD)
    bits = rng.integers(0, 2**64, size=(len(lanes), words), dtype=np.uint64)
    bits &= _tail_mask(n_patterns, words)
    return PatternBlock(lanes, n_patterns, bits)


def exhaustive_block(lanes) -> PatternBlock:
    """All 2**k patterns; lane j toggles with period 2**(j+1)."""
    lanes = tuple(lanes)
    k = len(lanes)
    if k > 20:
        raise NetlistError(f"exhaustive block over {k} lanes refused (> 20)")
    n = 1 << k
    words = max(1, (n + _WORD - 1) // _WORD)
    idx = np.arange(words * _WORD, dtype=np.uint64)
    bits = np.zeros((k, words), dtype=np.uint64)
    for j in range(k):
        row = ((idx >> np.uint64(j)) & np.uint64(1)).astype(np.uint8)
        packed = np.packbits(row.reshape(-1, _WORD), axis=1, bitorder="little")
        bits[j] = packed.view("<u8").reshape(-1)
    bits &= _tail_mask(n, words)
    return PatternBlock(lanes, n, bits)


def _eval_gate(g: Gate, ins: list[np.ndarray]) -> np.ndarray:
    kind = g.cell.kind
    if kind in ("BUF", "DFF"):
        return ins[0].copy()
    if kind == "INV":
        return ~ins[0]
    acc = ins[0].copy()
    if kind in ("AND", "NAND"):
        for x in ins[1:]:
            acc &= x
        return ~acc if kind == "NAND" else acc
    if kind in ("OR", "NOR"):
        for x in ins[1:]:
            acc |= x
        return ~acc if kind == "NOR" else acc
    if kind in ("XOR", "XNOR"):
        for x in ins[1:]:
            acc ^= x
        return ~acc if kind == "XNOR" else acc
    raise NetlistError(f"unsimulatable cell {kind}")


def simulate(n: Netlist, inputs: PatternBlock, seed_state=None) -> PatternBlock:
    """Evaluate the combinational frame on a packed pattern block.

    ``inputs`` must cover the primary inputs, in any lane order, plus the
    DFF output nets when the design is sequential.  When only PI lanes
    are supplied, DFF lanes are synthesized: zeros for ``seed_state=None``
    or seeded-random for an integer ``seed_state``.  Output lanes are the
    primary outputs followed by DFF inputs.
    """
    want = n.sim_inputs
    have = set(inputs.lanes)
    if have == set(want):
        src = inputs
    elif have == set(n.primary_inputs) and n.dffs:
        extra = tuple(g.fanout_net for g in n.dffs)
        if seed_state is None:
            ebits = np.zeros((len(extra), inputs.words), dtype=np.uint64)
        else:
            ebits = random_block(extra, inputs.n_patterns, seed_state).bits
        src = PatternBlock(
            inputs.lanes + extra,
            inputs.n_patterns,
            np.vstack([inputs.bits, ebits]),
        )
    else:
        raise LaneMismatch(
            f"input lanes {sorted(have)} do not match required {sorted(want)}"
        )

    values: dict[str, np.ndarray] = {
        name: src.bits[i] for i, name in enumerate(src.lanes)
    }
    mask = _tail_mask(src.n_patterns, src.words)
    for g in n.topo_order:
        if g.cell.kind == "DFF":
            continue  # Q lane already supplied
        values[g.fanout_net] = _eval_gate(g, [values[f] for f in g.fanins]) & mask

    out_lanes = n.sim_outputs
    out = np.vstack([values[name] for name in out_lanes]) if out_lanes else np.zeros(
        (0, src.words), dtype=np.uint64
    )
    return PatternBlock(tuple(out_lanes), src.n_patterns, out & mask)


def simulate_naive(n: Netlist, assignment: dict[str, int]) -> dict[str, int]:
    """Single-pattern reference interpreter (oracle for ``simulate``)."""
    vals = dict(assignment)
    ops = {
        "INV": lambda xs: 1 - xs[0],
        "BUF": lambda xs: xs[0],
        "DFF": lambda xs: xs[0],
        "AND": lambda xs: int(all(xs)),
        "NAND": lambda xs: 1 - int(all(xs)),
        "OR": lambda xs: int(any(xs)),
        "NOR": lambda xs: 1 - int(any(xs)),
        "XOR": lambda xs: xs[0] ^ xs[1],
        "XNOR": lambda xs: 1 - (xs[0] ^ xs[1]),
    }
    for g in n.topo_order:
        if g.cell.kind == "DFF":
            continue
        vals[g.fanout_net] = ops[g.cell.kind]([vals[f] for f in g.fanins])
    return {name: vals[name] for name in n.sim_outputs}
