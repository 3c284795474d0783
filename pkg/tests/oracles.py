"""Reference models that share no code with the simulator.

``phase_arrivals`` computes, for a monotone netlist, when every net settles
after a simultaneous input change at t=0. Each gate output moves at most
once, so its time follows directly from its inputs:

* the output reaches v when *any* input reaching v suffices (OR -> 1,
  AND -> 0): earliest such input + delay;
* otherwise (AND -> 1, OR -> 0, C-element -> v) it waits for the last
  changed input: latest input + delay.
"""

from __future__ import annotations

from qdilab.netlist import GateKind, Netlist


def _eval(kind: GateKind, vals, prev):
    fam = kind.family
    if fam == "AND":
        return int(all(vals))
    if fam == "OR":
        return int(any(vals))
    if fam == "NOT":
        return 1 - vals[0]
    if all(vals):
        return 1
    if not any(vals):
        return 0
    return prev


def spacer_state(nl: Netlist) -> list[int]:
    s = nl.protocol.spacer_level
    vals = [s] * len(nl.nets)
    for n, v in nl.constants.items():
        vals[n] = v
    for gid in nl.topo_order():
        g = nl.gates[gid]
        vals[g.output] = _eval(g.kind, [vals[i] for i in g.inputs], vals[g.output])
    return vals


def phase_arrivals(nl: Netlist, start: list[int], changes: dict[int, int],
                   delay) -> tuple[list[int], dict[int, tuple[int, int]]]:
    """Return the settled state and {net: (time, new value)} for changed nets."""
    vals = list(start)
    when: dict[int, tuple[int, int]] = {}
    for n, v in changes.items():
        if vals[n] != v:
            vals[n] = v
            when[n] = (0, v)
    for gid in nl.topo_order():
        g = nl.gates[gid]
        new = _eval(g.kind, [vals[i] for i in g.inputs], start[g.output])
        if new == start[g.output]:
            continue
        moved = [when[i][0] for i in g.inputs if i in when]
        fam = g.kind.family
        any_suffices = (fam == "OR" and new == 1) or (fam == "AND" and new == 0)
        if any_suffices:
            t = min(when[i][0] for i in g.inputs if i in when and when[i][1] == new)
        else:
            t = max(moved)
        vals[g.output] = new
        when[g.output] = (t + delay(g.kind), new)
    return vals, when


def adder_bits(a: int, b: int, cin: int, width: int) -> list[int]:
    return [(a >> i) & 1 for i in range(width)] + [(b >> i) & 1 for i in range(width)] + [cin]


def data_changes(nl: Netlist, bits) -> dict[int, int]:
    flip = nl.protocol.name == "RTO"
    out = {}
    for port, bit in zip(nl.inputs, bits):
        b = bit ^ flip
        out[port.rail1] = b
        out[port.rail0] = 1 - b
    return out


def spacer_changes(nl: Netlist) -> dict[int, int]:
    s = nl.protocol.spacer_level
    return {r: s for r in nl.input_rails}


def oracle_cycle(nl: Netlist, bits, delay):
    """(fl, rl, data arrivals, spacer arrivals) under the oracle."""
    s0 = spacer_state(nl)
    s1, data = phase_arrivals(nl, s0, data_changes(nl, bits), delay)
    s2, spacer = phase_arrivals(nl, s1, spacer_changes(nl), delay)
    outs = nl.output_rails
    fl = max(data[r][0] for r in outs if r in data)
    rl = max(spacer[r][0] for r in outs if r in spacer)
    return fl, rl, data, spacer, s0, s2
