"""Deliberately broken circuits and code sets, one per checker.

Each fixture comes with the stimulus that exposes it; the checkers must
report at least one violation of the matching kind.
"""

from __future__ import annotations

from dataclasses import dataclass

from qdilab.encoding import DualRailWord, Protocol, RailPair
from qdilab.netlist import GateKind, Netlist
from qdilab.qdicheck import CubeList


@dataclass(frozen=True)
class Fixture:
    name: str
    netlist: Netlist
    bits: tuple[int, ...]     # data values applied by run_handshake
    expect: str               # ViolationKind value


def glitch_netlist() -> Netlist:
    """``y.1 = AND2(x.1, NOT x.1)`` pulses when x.1 rises (static hazard)."""
    nl = Netlist(Protocol.RTZ, "glitch")
    x = nl.add_input("x")
    _, inv = nl.add_gate(GateKind.NOT, [x.rail1], "inv")
    _, y1 = nl.add_gate(GateKind.AND2, [x.rail1, inv], "hazard")
    _, y0 = nl.add_gate(GateKind.OR2, [x.rail0, x.rail0], "buf0")
    nl.add_output("y", y1, y0)
    return nl


def dead_end_netlist() -> Netlist:
    """Two-input C-element pair plus an AND2 stub whose output goes nowhere."""
    nl = Netlist(Protocol.RTZ, "dead_end")
    a, b = nl.add_input("a"), nl.add_input("b")
    z1 = nl.gate("C", [a.rail1, b.rail1], "z1")
    z0 = nl.gate("OR", [nl.gate("C", [a.rail0, b.rail0], "m00"),
                        nl.gate("C", [a.rail1, b.rail0], "m10"),
                        nl.gate("C", [a.rail0, b.rail1], "m01")], "z0")
    nl.gate("AND", [a.rail1, b.rail0], "stub")
    nl.add_output("z", z1, z0)
    return nl


def non_restoring_netlist() -> Netlist:
    """C2 with one input tied high: it sets with data and never resets."""
    nl = Netlist(Protocol.RTZ, "tied_c")
    x = nl.add_input("x")
    one = nl.add_constant(1, "tie1")
    y1 = nl.gate("C", [x.rail1, one], "stuck")
    y0 = nl.gate("OR", [x.rail0, x.rail0], "buf0")
    nl.add_output("y", y1, y0)
    return nl


def weak_majority_cover() -> CubeList:
    """Two products of the majority carry that are both true at a=b=cin=1."""
    return CubeList((frozenset({"a1", "b1"}), frozenset({"b1", "cin1"})))


def ordered_code() -> list[DualRailWord]:
    """(1,1) contains (1,0): an ordered (non-DI) 1-bit code."""
    return [DualRailWord((RailPair(1, 0),), Protocol.RTZ),
            DualRailWord((RailPair(1, 1),), Protocol.RTZ)]


def trace_fixtures() -> list[Fixture]:
    return [
        Fixture("glitch", glitch_netlist(), (1,), "MONOTONICITY"),
        Fixture("dead_end", dead_end_netlist(), (1, 0), "ORPHAN"),
        Fixture("non_restoring", non_restoring_netlist(), (1,), "NON_RESTORING"),
    ]
