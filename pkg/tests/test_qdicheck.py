import pytest

from configs import all_specs, spec_id
from qdilab.adders import AdderSpec, generate
from qdilab.encoding import DualRailWord, Protocol, RailPair, encode_word
from qdilab.fixtures import ordered_code, trace_fixtures, weak_majority_cover
from qdilab.logiclib import build_full_adder
from qdilab.qdicheck import (
    CubeList,
    Indication,
    RoundTripChecker,
    Violation,
    ViolationKind,
    check_code,
    check_dsop,
    check_monotonic,
    check_round_trip,
    classify_indication,
    extract_cover,
    indication_report,
)
from qdilab.sim import DelayModel, Simulator, all_propagate_vector, random_vectors


@pytest.mark.parametrize("fx", trace_fixtures(), ids=lambda f: f.name)
def test_trace_fixtures_flagged(fx):
    tr = Simulator(fx.netlist).run_handshake(list(fx.bits), strict=False)
    found = check_monotonic(tr, netlist=fx.netlist) + check_round_trip(tr, fx.netlist)
    assert ViolationKind(fx.expect) in {v.kind for v in found}


def test_glitch_details():
    fx = trace_fixtures()[0]
    tr = Simulator(fx.netlist).run_handshake([1], strict=False)
    v = check_monotonic(tr)
    assert len(v) >= 1 and all(x.kind is ViolationKind.MONOTONICITY for x in v)
    assert v[0].to_dict()["kind"] == "MONOTONICITY"


def test_static_fixtures_flagged():
    assert [v.kind for v in check_dsop(weak_majority_cover())] == [ViolationKind.DSOP_OVERLAP]
    assert [v.kind for v in check_code(ordered_code())] == [ViolationKind.ILLEGAL_CODE]


def test_check_dsop_examples():
    # a·b and a'·c never fire together
    assert check_dsop([{"a1", "b1"}, {"a0", "c1"}]) == []
    # a·b and b·c overlap at a=b=c=1
    assert len(check_dsop([{"a1", "b1"}, {"b1", "c1"}])) == 1
    assert check_dsop([]) == []
    explicit = CubeList((frozenset({"x", "y"}), frozenset({"z"})),
                        (frozenset({"x", "z"}), frozenset({"y"})))
    assert check_dsop(explicit) == []


@pytest.mark.parametrize("protocol", list(Protocol))
def test_full_code_is_unordered(protocol):
    words = [encode_word(v, 4, protocol) for v in range(16)]
    assert check_code(words) == []
    assert check_code([]) == []
    with pytest.raises(ValueError):
        check_code([encode_word(1, 4, protocol), encode_word(1, 3, protocol)])


def test_code_containment_direction():
    small = DualRailWord((RailPair(1, 0), RailPair(0, 0)), Protocol.RTZ)
    big = DualRailWord((RailPair(1, 0), RailPair(0, 1)), Protocol.RTZ)
    v = check_code([small, big])
    assert len(v) == 1 and v[0].location == (1, 0)


def test_extract_cover_weak_carry():
    nl = build_full_adder("WEAK")
    cover = extract_cover(nl, nl.port("cout").rail1)
    assert set(cover.cubes) == {frozenset({"a0.1", "b0.1"}), frozenset({"a0.1", "cin.1"}),
                                frozenset({"b0.1", "cin.1"})}


def test_extract_cover_strong_sum():
    nl = build_full_adder("STRONG")
    cover = extract_cover(nl, nl.port("sum0").rail1)
    assert len(cover.cubes) == 4 and all(len(c) == 3 for c in cover.cubes)


@pytest.mark.parametrize("flavor", ["STRONG", "WEAK", "EARLY"])
def test_full_adder_round_trip_clean(flavor):
    nl = build_full_adder(flavor)
    sim = Simulator(nl)
    checker = RoundTripChecker(nl)
    for bits in [(1, 1, 1), (0, 0, 0), (1, 0, 1), (0, 1, 0)]:
        tr = sim.run_handshake(list(bits))
        assert check_monotonic(tr) == []
        assert checker.check(tr) == []


@pytest.mark.parametrize("spec", all_specs(16) + all_specs(16, Protocol.RTO), ids=spec_id)
def test_adders_clean(spec):
    nl = generate(spec)
    sim = Simulator(nl)
    checker = RoundTripChecker(nl)
    for v in random_vectors(16, 15, seed=2) + [all_propagate_vector(16)]:
        tr = sim.run_cycle(*v)
        assert check_monotonic(tr) == []
        assert checker.check(tr) == []


def test_strict_mode_flags_weak_majority():
    nl = generate(AdderSpec("RCA", 8, fa_flavor="WEAK"))
    sim = Simulator(nl)
    checker = RoundTripChecker(nl)
    tr = sim.run_cycle(0xFF, 0xFF, 1)
    assert checker.check(tr) == []
    strict = checker.check(tr, strict=True)
    assert strict and all(v.kind is ViolationKind.ORPHAN for v in strict)


def test_strict_mode_strong_rca_clean():
    nl = generate(AdderSpec("RCA", 8, fa_flavor="STRONG"))
    tr = Simulator(nl).run_cycle(0xA5, 0x3C, 1)
    assert check_round_trip(tr, nl, strict=True) == []


def test_violation_to_dict():
    v = Violation(ViolationKind.ORPHAN, (3,), "x", 5)
    assert v.to_dict() == {"kind": "ORPHAN", "location": [3], "detail": "x", "time": 5}


@pytest.mark.parametrize("protocol", list(Protocol))
def test_indication_reports(protocol):
    rep = indication_report(build_full_adder("EARLY", protocol))
    assert rep.indication is Indication.EARLY and rep.early_witness is not None
    rep = indication_report(build_full_adder("STRONG", protocol))
    assert rep.indication is Indication.STRONG and rep.partial_witness is None
    assert rep.experiments > 0


def test_indication_of_adders():
    strong2 = generate(AdderSpec("RCA", 2, fa_flavor="STRONG"), with_completion=False)
    assert classify_indication(strong2) is Indication.WEAK
    early = generate(AdderSpec("RCA", 4, fa_flavor="EARLY"), with_completion=False)
    assert classify_indication(early) is Indication.EARLY
    # the larger instance falls back to sampling
    assert classify_indication(generate(AdderSpec("BCLARC", 8), with_completion=False),
                               DelayModel.per_kind(), samples=64) is Indication.EARLY
