"""Gate-level building blocks for dual-rail adders.

Emitters (``emit_*``) add gates to an existing netlist and return the output
ports or nets. They always produce the RTZ form; the RTO form of any block is
its gate-for-gate dual (see :func:`qdilab.adders.dualize`). ``build_*``
functions wrap an emitter into a standalone netlist for a given protocol.

The constructions are canonical stand-ins for each indication class:

* STRONG: DIMS, every output waits for all inputs in both phases.
* WEAK: DIMS sum with a C-element majority carry.
* EARLY: AND/OR disjoint sum-of-products; outputs may set before carry-in
  arrives and reset as soon as one operand returns to spacer.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from itertools import product
from typing import Sequence

from qdilab.encoding import Protocol
from qdilab.netlist import Netlist, Port


class FullAdderFlavor(enum.Enum):
    STRONG = "STRONG"
    WEAK = "WEAK"
    EARLY = "EARLY"

    @classmethod
    def parse(cls, text: "str | FullAdderFlavor") -> "FullAdderFlavor":
        if isinstance(text, FullAdderFlavor):
            return text
        return cls(str(text).upper())


class UnsupportedBlockWidth(ValueError):
    pass


def c_element_eval(prev: int, inputs: Sequence[int]) -> int:
    """Next output of a Muller C-element: follow agreeing inputs, else hold."""
    if not inputs:
        raise ValueError("C-element needs at least one input")
    if all(inputs):
        return 1
    if not any(inputs):
        return 0
    return prev


def _standalone(protocol: Protocol, nl: Netlist) -> Netlist:
    return nl if protocol is Protocol.RTZ else nl.dual()


def tie_port(nl: Netlist, value: int, name: str) -> Port:
    """Dual-rail data constant (RTZ rail levels)."""
    return Port(name, nl.add_constant(value, f"{name}.1"),
                nl.add_constant(1 - value, f"{name}.0"))


# ---------------------------------------------------------------------------
# Completion detection
# ---------------------------------------------------------------------------

def emit_c_tree(nl: Netlist, nets: Sequence[int], name: str) -> int:
    """Synchronise ``nets`` with a tree of C3 (and at most one C2 per level)."""
    level = list(nets)
    depth = 0
    while len(level) > 1:
        depth += 1
        nxt = []
        i = 0
        while i < len(level):
            chunk = level[i:i + 3]
            if len(chunk) == 1:
                nxt.append(chunk[0])
            else:
                nxt.append(nl.gate("C", chunk, f"{name}/c{depth}_{len(nxt)}"))
            i += 3
        level = nxt
    return level[0]


def emit_completion_detector(nl: Netlist, ports: Sequence[Port], name: str) -> int:
    if not ports:
        raise ValueError("completion detector needs at least one rail pair")
    ors = [nl.gate("OR", p.rails, f"{name}/or_{p.name}") for p in ports]
    return emit_c_tree(nl, ors, name)


def build_completion_detector(width: int, protocol: Protocol) -> Netlist:
    """Standalone detector over ``width`` input pairs with a single ``ack`` output."""
    nl = Netlist(Protocol.RTZ, f"cd{width}")
    ports = [nl.add_input(f"x{i}") for i in range(width)]
    ack = emit_completion_detector(nl, ports, "cd")
    nl.set_ack("ack", ack)
    return _standalone(protocol, nl)


# ---------------------------------------------------------------------------
# Full adders
# ---------------------------------------------------------------------------

def _rail(port: Port, bit: int) -> int:
    return port.rail1 if bit else port.rail0


def _emit_dims_minterms(nl: Netlist, a: Port, b: Port, c: Port, name: str) -> dict:
    return {
        (x, y, z): nl.gate("C", (_rail(a, x), _rail(b, y), _rail(c, z)),
                           f"{name}/m{x}{y}{z}")
        for x, y, z in product((0, 1), repeat=3)
    }


def _emit_dims_sum(nl: Netlist, m: dict, name: str) -> Port:
    odd = [m[k] for k in sorted(m) if sum(k) % 2 == 1]
    even = [m[k] for k in sorted(m) if sum(k) % 2 == 0]
    return Port(f"{name}.sum", nl.gate("OR", odd, f"{name}/sum1"),
                nl.gate("OR", even, f"{name}/sum0"))


def emit_early_sum(nl: Netlist, p: int, e: int, c: Port, name: str) -> Port:
    """XOR of a differ/equal pair with a carry, as a two-term disjoint cover."""
    s1 = nl.gate("OR", (nl.gate("AND", (p, c.rail0), f"{name}/pc0"),
                        nl.gate("AND", (e, c.rail1), f"{name}/ec1")), f"{name}/sum1")
    s0 = nl.gate("OR", (nl.gate("AND", (p, c.rail1), f"{name}/pc1"),
                        nl.gate("AND", (e, c.rail0), f"{name}/ec0")), f"{name}/sum0")
    return Port(f"{name}.sum", s1, s0)


def emit_full_adder(nl: Netlist, flavor: FullAdderFlavor, a: Port, b: Port,
                    c: Port, name: str) -> tuple[Port, Port]:
    """Emit one full adder; returns ``(sum, cout)``."""
    flavor = FullAdderFlavor.parse(flavor)
    nl.add_instance(name, f"FA_{flavor.value}")
    if flavor is FullAdderFlavor.STRONG:
        m = _emit_dims_minterms(nl, a, b, c, name)
        s = _emit_dims_sum(nl, m, name)
        maj = [m[k] for k in sorted(m) if sum(k) >= 2]
        mino = [m[k] for k in sorted(m) if sum(k) < 2]
        cout = Port(f"{name}.cout", nl.gate("OR", maj, f"{name}/cout1"),
                    nl.gate("OR", mino, f"{name}/cout0"))
        return s, cout

    if flavor is FullAdderFlavor.WEAK:
        m = _emit_dims_minterms(nl, a, b, c, name)
        s = _emit_dims_sum(nl, m, name)
        rails = []
        for bit in (1, 0):
            x, y, z = _rail(a, bit), _rail(b, bit), _rail(c, bit)
            terms = (nl.gate("C", (x, y), f"{name}/ab{bit}"),
                     nl.gate("C", (y, z), f"{name}/bc{bit}"),
                     nl.gate("C", (x, z), f"{name}/ac{bit}"))
            rails.append(nl.gate("OR", terms, f"{name}/cout{bit}"))
        return s, Port(f"{name}.cout", *rails)

    # EARLY
    p = nl.gate("OR", (nl.gate("AND", (a.rail1, b.rail0), f"{name}/a1b0"),
                       nl.gate("AND", (a.rail0, b.rail1), f"{name}/a0b1")), f"{name}/p")
    e = nl.gate("OR", (nl.gate("AND", (a.rail1, b.rail1), f"{name}/a1b1"),
                       nl.gate("AND", (a.rail0, b.rail0), f"{name}/a0b0")), f"{name}/e")
    s = emit_early_sum(nl, p, e, c, name)
    co1 = nl.gate("OR", (nl.gate("AND", (a.rail1, b.rail1), f"{name}/g"),
                         nl.gate("AND", (p, c.rail1), f"{name}/pc1c")), f"{name}/cout1")
    co0 = nl.gate("OR", (nl.gate("AND", (a.rail0, b.rail0), f"{name}/k"),
                         nl.gate("AND", (p, c.rail0), f"{name}/pc0c")), f"{name}/cout0")
    return s, Port(f"{name}.cout", co1, co0)


def _adder_shell(width: int, name: str) -> tuple[Netlist, list[Port], list[Port], Port]:
    nl = Netlist(Protocol.RTZ, name)
    a = [nl.add_input(f"a{i}") for i in range(width)]
    b = [nl.add_input(f"b{i}") for i in range(width)]
    cin = nl.add_input("cin")
    return nl, a, b, cin


def _finish_adder(nl: Netlist, sums: Sequence[Port], cout: Port) -> None:
    for i, s in enumerate(sums):
        nl.add_output(f"sum{i}", s.rail1, s.rail0)
    nl.add_output("cout", cout.rail1, cout.rail0)


def build_full_adder(flavor: FullAdderFlavor, protocol: Protocol = Protocol.RTZ) -> Netlist:
    """Standalone full adder: inputs ``a0, b0, cin``; outputs ``sum0, cout``."""
    flavor = FullAdderFlavor.parse(flavor)
    nl, a, b, cin = _adder_shell(1, f"fa_{flavor.value.lower()}")
    s, co = emit_full_adder(nl, flavor, a[0], b[0], cin, "fa")
    _finish_adder(nl, [s], co)
    return _standalone(protocol, nl)


# ---------------------------------------------------------------------------
# Per-bit generate/kill/propagate and the dual-bit full adder
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BitSignals:
    """One-hot per-bit classification: exactly one of g, k, p is active on data.
    ``e`` (equal) is g + k."""
    g: int
    k: int
    p: int
    e: int


def emit_bit_signals(nl: Netlist, a: Port, b: Port, name: str,
                     family: str = "AND") -> BitSignals:
    """``family='AND'`` gives early-reset products, ``'C'`` gives indicating ones."""
    g = nl.gate(family, (a.rail1, b.rail1), f"{name}/g")
    k = nl.gate(family, (a.rail0, b.rail0), f"{name}/k")
    p = nl.gate("OR", (nl.gate(family, (a.rail1, b.rail0), f"{name}/a1b0"),
                       nl.gate(family, (a.rail0, b.rail1), f"{name}/a0b1")), f"{name}/p")
    e = nl.gate("OR", (g, k), f"{name}/e")
    return BitSignals(g, k, p, e)


def emit_early_carry(nl: Netlist, bit: BitSignals, c: Port, name: str) -> Port:
    c1 = nl.gate("OR", (bit.g, nl.gate("AND", (bit.p, c.rail1), f"{name}/pc1")), f"{name}/c1")
    c0 = nl.gate("OR", (bit.k, nl.gate("AND", (bit.p, c.rail0), f"{name}/pc0")), f"{name}/c0")
    return Port(f"{name}.c", c1, c0)


def emit_dbfa(nl: Netlist, a: Sequence[Port], b: Sequence[Port], c: Port,
              name: str) -> tuple[list[Port], Port]:
    """Early-output 2-bit adder whose carry-out bypasses the internal ripple."""
    nl.add_instance(name, "DBFA")
    lo = emit_bit_signals(nl, a[0], b[0], f"{name}/b0")
    hi = emit_bit_signals(nl, a[1], b[1], f"{name}/b1")
    s0 = emit_early_sum(nl, lo.p, lo.e, c, f"{name}/s0")
    c1 = emit_early_carry(nl, lo, c, f"{name}/c1")
    s1 = emit_early_sum(nl, hi.p, hi.e, c1, f"{name}/s1")
    g2 = nl.gate("OR", (hi.g, nl.gate("AND", (hi.p, lo.g), f"{name}/pg")), f"{name}/G")
    k2 = nl.gate("OR", (hi.k, nl.gate("AND", (hi.p, lo.k), f"{name}/pk")), f"{name}/K")
    p2 = nl.gate("AND", (hi.p, lo.p), f"{name}/P")
    co1 = nl.gate("OR", (g2, nl.gate("AND", (p2, c.rail1), f"{name}/Pc1")), f"{name}/cout1")
    co0 = nl.gate("OR", (k2, nl.gate("AND", (p2, c.rail0), f"{name}/Pc0")), f"{name}/cout0")
    return [s0, s1], Port(f"{name}.cout", co1, co0)


def build_dbfa(protocol: Protocol = Protocol.RTZ) -> Netlist:
    nl, a, b, cin = _adder_shell(2, "dbfa")
    sums, co = emit_dbfa(nl, a, b, cin, "dbfa")
    _finish_adder(nl, sums, co)
    return _standalone(protocol, nl)


# ---------------------------------------------------------------------------
# Multiplexer
# ---------------------------------------------------------------------------

def emit_mux2(nl: Netlist, s: Port, x: Port, y: Port, name: str) -> Port:
    """``z = y if s else x``; output stays spacer until the select is data."""
    z1 = nl.gate("OR", (nl.gate("C", (s.rail0, x.rail1), f"{name}/sx1"),
                        nl.gate("C", (s.rail1, y.rail1), f"{name}/sy1")), f"{name}/z1")
    z0 = nl.gate("OR", (nl.gate("C", (s.rail0, x.rail0), f"{name}/sx0"),
                        nl.gate("C", (s.rail1, y.rail0), f"{name}/sy0")), f"{name}/z0")
    return Port(f"{name}.z", z1, z0)


def build_mux2(protocol: Protocol = Protocol.RTZ) -> Netlist:
    nl = Netlist(Protocol.RTZ, "mux2")
    x, y, s = nl.add_input("x"), nl.add_input("y"), nl.add_input("s")
    z = emit_mux2(nl, s, x, y, "mux")
    nl.add_output("z", z.rail1, z.rail0)
    return _standalone(protocol, nl)


# ---------------------------------------------------------------------------
# Block carry lookahead
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BlockSignals:
    """Block-level one-hot generate / kill / propagate."""
    G: int
    K: int
    P: int


def emit_block_gkp(nl: Netlist, bits: Sequence[BitSignals], name: str) -> BlockSignals:
    """Disjoint AND/OR covers: G = g3 + p3 g2 + p3 p2 g1 + p3 p2 p1 g0, etc."""
    n = len(bits)
    out = {}
    for rail in ("g", "k"):
        terms = []
        for j in range(n - 1, -1, -1):
            lits = [bits[i].p for i in range(n - 1, j, -1)] + [getattr(bits[j], rail)]
            terms.append(nl.gate("AND", lits, f"{name}/{rail}{j}"))
        out[rail] = nl.gate("OR", terms, f"{name}/{rail.upper()}")
    P = nl.gate("AND", [b.p for b in reversed(bits)], f"{name}/P")
    return BlockSignals(out["g"], out["k"], P)


def emit_bclg_carry(nl: Netlist, blk: BlockSignals, c: Port, name: str) -> Port:
    """Non-redundant block carry: the C2 makes carry-in indication explicit."""
    c1 = nl.gate("OR", (blk.G, nl.gate("C", (blk.P, c.rail1), f"{name}/Pc1")), f"{name}/c1")
    c0 = nl.gate("OR", (blk.K, nl.gate("C", (blk.P, c.rail0), f"{name}/Pc0")), f"{name}/c0")
    return Port(f"{name}.c", c1, c0)


def emit_redundant_carry(nl: Netlist, hi: BlockSignals, lo: BlockSignals, c: Port,
                         name: str) -> Port:
    """Carry two blocks up from ``c``: G_hi + P_hi G_lo + (P_hi P_lo) c."""
    pp = nl.gate("AND", (hi.P, lo.P), f"{name}/PP")
    c1 = nl.gate("OR", (hi.G, nl.gate("AND", (hi.P, lo.G), f"{name}/PG"),
                        nl.gate("C", (pp, c.rail1), f"{name}/PPc1")), f"{name}/c1")
    c0 = nl.gate("OR", (hi.K, nl.gate("AND", (hi.P, lo.K), f"{name}/PK"),
                        nl.gate("C", (pp, c.rail0), f"{name}/PPc0")), f"{name}/c0")
    return Port(f"{name}.c", c1, c0)


def build_bclg(block_width: int = 4, protocol: Protocol = Protocol.RTZ,
               redundant: bool = False) -> Netlist:
    """Carry generator fragment.

    Non-redundant: one block, inputs ``a[4], b[4], cin``, output ``cout``.
    Redundant: two blocks (``a[8], b[8]``) whose carry-out is computed from
    ``cin`` by the flattened two-block recurrence. Block G/K/P nets are
    exposed as probes ``G0, K0, P0`` (and ``G1, K1, P1``).
    """
    if block_width != 4:
        raise UnsupportedBlockWidth(f"block width must be 4, got {block_width}")
    nblocks = 2 if redundant else 1
    width = block_width * nblocks
    nl, a, b, cin = _adder_shell(width, "bclgrc" if redundant else "bclg")
    blocks = []
    for k in range(nblocks):
        bits = [emit_bit_signals(nl, a[i], b[i], f"bit{i}")
                for i in range(k * block_width, (k + 1) * block_width)]
        blk = emit_block_gkp(nl, bits, f"blk{k}")
        blocks.append(blk)
        for tag in ("G", "K", "P"):
            nl.set_probe(f"{tag}{k}", getattr(blk, tag))
    if redundant:
        cout = emit_redundant_carry(nl, blocks[1], blocks[0], cin, "bclgrc")
    else:
        cout = emit_bclg_carry(nl, blocks[0], cin, "bclg")
    nl.add_output("cout", cout.rail1, cout.rail0)
    return _standalone(protocol, nl)


# ---------------------------------------------------------------------------
# Conventional (indicating) carry lookahead block
# ---------------------------------------------------------------------------

def emit_ccla_block(nl: Netlist, a: Sequence[Port], b: Sequence[Port], c: Port,
                    name: str) -> tuple[list[Port], Port]:
    """4-bit lookahead block built only from C-element products and
    exclusive ORs, so every net resets exactly as late as it was set.

    Multi-level products reuse the product terms of lower carries, so any
    partial product that fires is itself a term of an observed carry.
    """
    if len(a) != 4:
        raise UnsupportedBlockWidth(f"CCLA block width must be 4, got {len(a)}")
    nl.add_instance(name, "CCLA4")
    bits = [emit_bit_signals(nl, a[i], b[i], f"{name}/bit{i}", family="C") for i in range(4)]
    p = [bt.p for bt in bits]
    carries: list[list[int]] = [[], [], [], []]   # rail-ordered: [c1-rail, c0-rail] per position
    for rail, cr in ((1, c.rail1), (0, c.rail0)):
        gen = [bt.g if rail else bt.k for bt in bits]
        n = f"{name}/r{rail}"
        t1 = nl.gate("C", (p[0], cr), f"{n}/p0c")
        c1 = nl.gate("OR", (gen[0], t1), f"{n}/c1")
        u = nl.gate("C", (p[1], gen[0]), f"{n}/p1g0")
        t = nl.gate("C", (p[1], p[0], cr), f"{n}/p1p0c")
        c2 = nl.gate("OR", (gen[1], u, t), f"{n}/c2")
        c3 = nl.gate("OR", (gen[2],
                            nl.gate("C", (p[2], gen[1]), f"{n}/p2g1"),
                            nl.gate("C", (p[2], u), f"{n}/p2p1g0"),
                            nl.gate("C", (p[2], t), f"{n}/p2p1p0c")), f"{n}/c3")
        head = nl.gate("OR", (gen[3],
                              nl.gate("C", (p[3], gen[2]), f"{n}/p3g2"),
                              nl.gate("C", (p[3], p[2], gen[1]), f"{n}/p3p2g1"),
                              nl.gate("C", (p[3], p[2], u), f"{n}/p3p2p1g0")), f"{n}/c4h")
        c4 = nl.gate("OR", (head, nl.gate("C", (p[3], p[2], t), f"{n}/p3p2p1p0c")), f"{n}/c4")
        for pos, net in enumerate((c1, c2, c3, c4)):
            carries[pos].append(net)
    cin_ports = [c] + [Port(f"{name}.c{i + 1}", *carries[i]) for i in range(3)]
    sums = []
    for i, bt in enumerate(bits):
        ci = cin_ports[i]
        s1 = nl.gate("OR", (nl.gate("C", (bt.p, ci.rail0), f"{name}/s{i}pc0"),
                            nl.gate("C", (bt.e, ci.rail1), f"{name}/s{i}ec1")), f"{name}/s{i}_1")
        s0 = nl.gate("OR", (nl.gate("C", (bt.p, ci.rail1), f"{name}/s{i}pc1"),
                            nl.gate("C", (bt.e, ci.rail0), f"{name}/s{i}ec0")), f"{name}/s{i}_0")
        sums.append(Port(f"{name}.s{i}", s1, s0))
    return sums, Port(f"{name}.c4", *carries[3])
