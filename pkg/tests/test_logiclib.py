import itertools

import pytest

from qdilab.adders import dualize
from qdilab.encoding import Protocol, WordStatus
from qdilab.logiclib import (
    FullAdderFlavor,
    UnsupportedBlockWidth,
    build_bclg,
    build_completion_detector,
    build_dbfa,
    build_full_adder,
    build_mux2,
    c_element_eval,
)
from qdilab.netlist import GateKind, stats
from qdilab.qdicheck import Indication, check_dsop, classify_indication, extract_cover
from qdilab.sim import DelayModel, Simulator

FLAVORS = list(FullAdderFlavor)


def outputs_after(nl, assign):
    """Apply data on the named input ports only (others stay spacer), settle,
    and return each output's decoded bit or None while it is spacer."""
    sim = Simulator(nl, engine="python")
    flip = nl.protocol is Protocol.RTO
    changes = {}
    for name, bit in assign.items():
        port = nl.port(name)
        changes[port.rail1] = bit ^ flip
        changes[port.rail0] = 1 - (bit ^ flip)
    sim.apply(changes)
    sim.settle()
    res = {}
    for p in nl.outputs:
        r1, r0 = sim.values[p.rail1], sim.values[p.rail0]
        if r1 == r0:
            res[p.name] = None
        else:
            res[p.name] = int(r1 != nl.protocol.spacer_level)
    return res


@pytest.mark.parametrize("prev,inputs,out", [(0, (1, 1), 1), (1, (1, 0), 1), (0, (0, 0, 0), 0),
                                             (0, (0, 1), 0), (1, (0, 0), 0)])
def test_c_element_eval(prev, inputs, out):
    assert c_element_eval(prev, inputs) == out


def test_completion_detector_shapes():
    assert stats(build_completion_detector(1, Protocol.RTZ)).as_names() == {"OR2": 1}
    assert build_completion_detector(3, Protocol.RTZ).census() == {GateKind.OR2: 3, GateKind.C3: 1}
    assert build_completion_detector(3, Protocol.RTO).census() == {GateKind.AND2: 3, GateKind.C3: 1}
    assert build_completion_detector(3, Protocol.RTO).to_dict() == \
        dualize(build_completion_detector(3, Protocol.RTZ)).to_dict()
    big = build_completion_detector(32, Protocol.RTZ).census()
    assert big[GateKind.OR2] == 32


@pytest.mark.parametrize("protocol", list(Protocol))
@pytest.mark.parametrize("width", [1, 2, 3, 4, 5, 7, 9])
def test_completion_detector_fires_only_on_complete_data(protocol, width):
    nl = build_completion_detector(width, protocol)
    ack = nl.acks["ack"]
    active = protocol.active_level
    for k in range(width + 1):
        sim = Simulator(nl)
        changes = {}
        for i in range(k):
            changes[nl.inputs[i].rail1 if i % 2 else nl.inputs[i].rail0] = active
        sim.apply(changes)
        sim.settle()
        assert (sim.values[ack] == active) == (k == width)
        # spacer again: the detector must drop back
        sim.apply({r: protocol.spacer_level for r in nl.input_rails})
        sim.settle()
        assert sim.values[ack] == protocol.spacer_level


@pytest.mark.parametrize("flavor", FLAVORS)
@pytest.mark.parametrize("protocol", list(Protocol))
def test_full_adder_truth_table(flavor, protocol):
    nl = build_full_adder(flavor, protocol)
    for a, b, c in itertools.product((0, 1), repeat=3):
        out = outputs_after(nl, {"a0": a, "b0": b, "cin": c})
        assert out == {"sum0": (a + b + c) & 1, "cout": (a + b + c) >> 1}


def test_full_adder_census():
    assert stats(build_full_adder("STRONG")).as_names() == {"C3": 8, "OR4": 4}
    assert stats(build_full_adder("EARLY")).as_names() == {"AND2": 12, "OR2": 6}
    assert stats(build_full_adder("WEAK")).as_names() == {"C2": 6, "C3": 8, "OR3": 2, "OR4": 2}


def test_early_cout_before_cin():
    out = outputs_after(build_full_adder("EARLY"), {"a0": 1, "b0": 1})
    assert out == {"sum0": None, "cout": 1}


@pytest.mark.parametrize("held", ["a0", "b0", "cin"])
def test_strong_waits_for_every_input(held):
    nl = build_full_adder("STRONG")
    for bits in itertools.product((0, 1), repeat=2):
        assign = dict(zip([p for p in ("a0", "b0", "cin") if p != held], bits))
        assert outputs_after(nl, assign) == {"sum0": None, "cout": None}


@pytest.mark.parametrize("flavor", FLAVORS)
def test_indication_class_matches_flavor(flavor):
    for protocol in Protocol:
        nl = build_full_adder(flavor, protocol)
        assert classify_indication(nl) is Indication(flavor.value)
        assert classify_indication(nl, DelayModel.per_kind()) is Indication(flavor.value)


@pytest.mark.parametrize("protocol", list(Protocol))
def test_dbfa_exhaustive(protocol):
    nl = build_dbfa(protocol)
    for a, b, c in itertools.product(range(4), range(4), (0, 1)):
        out = outputs_after(nl, {"a0": a & 1, "a1": a >> 1, "b0": b & 1, "b1": b >> 1, "cin": c})
        total = a + b + c
        assert out == {"sum0": total & 1, "sum1": (total >> 1) & 1, "cout": total >> 2}


def test_dbfa_examples():
    nl = build_dbfa()
    assert outputs_after(nl, {"a0": 1, "a1": 1, "b0": 0, "b1": 0, "cin": 1}) == \
        {"sum0": 0, "sum1": 0, "cout": 1}
    # block generate: cout known before the carry-in arrives
    early = outputs_after(nl, {"a0": 1, "a1": 1, "b0": 1, "b1": 1})
    assert early["cout"] == 1 and early["sum0"] is None


def test_dbfa_cout_skips_internal_ripple():
    nl = build_dbfa()
    sim = Simulator(nl)
    tr = sim.run_cycle(0b11, 0b00, 1)       # full propagate
    t_cout = max(t for t, n, _ in tr.data_phase if n in nl.port("cout").rails)
    t_sum1 = max(t for t, n, _ in tr.data_phase if n in nl.port("sum1").rails)
    assert t_cout < t_sum1


@pytest.mark.parametrize("protocol", list(Protocol))
def test_mux2(protocol):
    nl = build_mux2(protocol)
    assert nl.census() == ({GateKind.C2: 4, GateKind.OR2: 2} if protocol is Protocol.RTZ
                           else {GateKind.C2: 4, GateKind.AND2: 2})
    for s, x, y in itertools.product((0, 1), repeat=3):
        assert outputs_after(nl, {"s": s, "x": x, "y": y}) == {"z": y if s else x}
    assert outputs_after(nl, {"s": 0, "x": 1, "y": 0}) == {"z": 1}
    assert outputs_after(nl, {"x": 1, "y": 0}) == {"z": None}
    assert outputs_after(nl, {"s": 1, "y": 1}) == {"z": 1}


def test_bclg_examples():
    nl = build_bclg()
    for cin in (0, 1):
        assert outputs_after(nl, {**_block(0xF, 0x0), "cin": cin}) == {"cout": cin}
        assert outputs_after(nl, {**_block(0xF, 0x1), "cin": cin}) == {"cout": 1}
    # generate is visible without the carry-in
    assert outputs_after(nl, _block(0xF, 0x1)) == {"cout": 1}
    with pytest.raises(UnsupportedBlockWidth):
        build_bclg(8)


def _block(a, b, width=4):
    d = {}
    for i in range(width):
        d[f"a{i}"] = (a >> i) & 1
        d[f"b{i}"] = (b >> i) & 1
    return d


@pytest.mark.parametrize("redundant", [False, True])
def test_bclg_exhaustive_carry(redundant):
    nl = build_bclg(redundant=redundant)
    width = 8 if redundant else 4
    sim = Simulator(nl)
    for a in range(1 << width):
        for b in range(0, 1 << width, 3 if redundant else 1):
            for cin in (0, 1):
                tr = sim.run_handshake([(a >> i) & 1 for i in range(width)]
                                       + [(b >> i) & 1 for i in range(width)] + [cin])
                assert tr.outputs == (a + b + cin) >> width


def test_bclg_covers_are_disjoint():
    nl = build_bclg()
    for tag in ("G0", "K0", "P0"):
        assert check_dsop(extract_cover(nl, nl.probes[tag])) == []
    for port in nl.outputs:
        assert check_dsop(extract_cover(nl, port.rail1)) == []


@pytest.mark.parametrize("build", [lambda: build_full_adder("EARLY"), build_dbfa, build_mux2,
                                   lambda: build_full_adder("STRONG")])
def test_output_covers_are_disjoint(build):
    nl = build()
    for port in nl.outputs:
        for rail in port.rails:
            assert check_dsop(extract_cover(nl, rail)) == []


def test_weak_carry_cover_overlaps():
    nl = build_full_adder("WEAK")
    assert len(check_dsop(extract_cover(nl, nl.port("cout").rail1))) == 3


@pytest.mark.parametrize("build", [lambda p: build_full_adder("EARLY", p), build_dbfa, build_mux2,
                                   lambda p: build_bclg(protocol=p, redundant=True)])
def test_dual_census_swaps_and_or(build):
    rtz, rto = build(Protocol.RTZ).census(), build(Protocol.RTO).census()
    swap = {GateKind.of("OR" if k.family == "AND" else "AND", k.arity) if k.family in ("AND", "OR")
            else k: v for k, v in rtz.items()}
    assert rto == swap
    assert sum(rto.values()) == sum(rtz.values())
