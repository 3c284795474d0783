from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from qdilab.adders import AdderSpec, Architecture, generate
from qdilab.encoding import Protocol
from qdilab.logiclib import build_full_adder
from qdilab.metrics import (
    DEFAULT_WEIGHTS,
    EmptyOrNonPositive,
    EmptyTraceSet,
    MetricsRow,
    ReferenceTable,
    UnknownLegend,
    area_proxy,
    compare_ordinal,
    load_weights,
    mapped_legends,
    measure,
    normalize,
    normalized_series,
    parse_pairs,
    pctp,
    power_proxy,
    rows_from_csv,
    rows_to_csv,
    spec_for_legend,
)
from qdilab.netlist import GateKind, InvalidNetlist
from qdilab.fixtures import dead_end_netlist
from qdilab.sim import HandshakeTrace, Simulator, random_vectors


def test_full_adder_areas():
    assert area_proxy(build_full_adder("STRONG")) == 64
    assert area_proxy(build_full_adder("WEAK")) == 86
    assert area_proxy(build_full_adder("EARLY")) == 36


def test_rca_areas():
    areas = {f: area_proxy(generate(AdderSpec("RCA", 32, fa_flavor=f))) for f in
             ("STRONG", "WEAK", "EARLY")}
    assert areas == {"STRONG": 2536, "WEAK": 3240, "EARLY": 1640}
    assert area_proxy(generate(AdderSpec("DBFA", 32))) == 1672
    assert area_proxy(generate(AdderSpec("HYBRID", 32))) == 1670


def test_area_rejects_invalid_netlist():
    with pytest.raises(InvalidNetlist):
        area_proxy(dead_end_netlist())


def test_custom_weights(tmp_path):
    p = tmp_path / "w.ini"
    p.write_text("[weights]\nC3 = 10\nor2 = 1\n")
    w = load_weights(p)
    assert w[GateKind.C3] == 10 and w[GateKind.OR2] == 1 and w[GateKind.AND2] == 2
    assert area_proxy(build_full_adder("STRONG"), w) == 8 * 10 + 4 * 4
    with pytest.raises(FileNotFoundError):
        load_weights(tmp_path / "missing.ini")


def _trace(count):
    return HandshakeTrace(Protocol.RTZ, [], 0, None, 1, 1, count=count)


def test_power_proxy():
    assert power_proxy([_trace(10)]) == 10.0
    assert power_proxy([_trace(10), _trace(20)]) == 15.0
    with pytest.raises(EmptyTraceSet):
        power_proxy([])
    nl = generate(AdderSpec("BCLA", 16))
    sim = Simulator(nl)
    for v in random_vectors(16, 10, 4):
        assert sim.run_cycle(*v).transition_count % 2 == 0


def test_pctp():
    assert pctp(2.0, 3.5) == 7.0
    with pytest.raises(ValueError):
        pctp(-1, 2)


def test_normalize_examples():
    assert normalize([2, 4, 8]) == [0.25, 0.5, 1.0]
    assert normalize([5.0]) == [1.0]
    assert normalize([Fraction(1, 3), Fraction(2, 3)]) == [Fraction(1, 2), 1]
    for bad in ([], [1, 0], [3, -2]):
        with pytest.raises(EmptyOrNonPositive):
            normalize(bad)


@given(st.lists(st.floats(1e-6, 1e6), min_size=1, max_size=20))
def test_normalize_max_is_one(values):
    out = normalize(values)
    assert max(out) == 1.0
    assert all(0 < x <= 1 for x in out)


@given(st.lists(st.integers(1, 10**6), min_size=1, max_size=20),
       st.fractions(min_value=Fraction(1, 1000), max_value=1000).filter(lambda k: k > 0))
def test_normalize_scale_invariant_exact(values, k):
    vs = [Fraction(v) for v in values]
    assert normalize([k * v for v in vs]) == normalize(vs)


@given(st.lists(st.floats(1e-3, 1e3), min_size=1, max_size=20), st.floats(1e-3, 1e3))
def test_normalize_scale_invariant_float(values, k):
    a, b = normalize([k * v for v in values]), normalize(values)
    assert max(a) == 1.0
    assert a == pytest.approx(b, rel=1e-12)


def test_metrics_row_invariants():
    with pytest.raises(ValueError):
        MetricsRow("x", "a", "RTZ", 1.0, 2.0, 4.0, 1, 1, 4.0)
    with pytest.raises(ValueError):
        MetricsRow("x", "a", "RTZ", 1.0, 2.0, 3.0, 1, 2, 5.0)
    with pytest.raises(EmptyTraceSet):
        MetricsRow.from_traces("x", AdderSpec("RCA", 4), generate(AdderSpec("RCA", 4)), [])


def test_measure_and_csv_round_trip():
    vs = random_vectors(16, 30, 9)
    rows = [measure(AdderSpec("BCLARC", 16), vs, legend="A"),
            measure(AdderSpec("RCA", 16, protocol="RTO"), vs, legend="B")]
    assert rows[0].vectors == 30 and rows[0].ct_max >= rows[0].ct
    text = rows_to_csv(rows)
    back = rows_from_csv(text)
    assert back == rows
    assert rows_to_csv(back) == text
    assert measure(AdderSpec("BCLARC", 16), vs, legend="A") == rows[0]


def test_normalized_series():
    vs = random_vectors(8, 10, 9)
    rows = [measure(AdderSpec(a, 8), vs) for a in ("RCA", "BCLA", "CCLA")]
    series = normalized_series(rows)
    assert max(s["ct_norm"] for s in series) == 1.0
    assert max(s["pctp_norm"] for s in series) == 1.0


def test_reference_table():
    t = ReferenceTable.bundled()
    assert len(t) == 62
    assert len(t.legends(Protocol.RTZ)) == 31 and len(t.legends(Protocol.RTO)) == 31
    z8 = t["Z8"]
    assert (z8.fl, z8.rl, z8.ct, z8.area) == (3.10, 0.61, 3.71, 1658.80)
    assert t["Z28"].ct < t["Z8"].ct
    assert t["O28"].ct == min(t[k].ct for k in t.legends(Protocol.RTO))
    assert t["Z8"].area == min(t[k].area for k in t.legends(Protocol.RTZ))
    assert max(t.legends(Protocol.RTZ), key=lambda k: t[k].pctp) == "Z1"
    for k in t.legends():
        r = t[k]
        assert abs(r.ct - (r.fl + r.rl)) <= 0.01 + 1e-9
    with pytest.raises(UnknownLegend):
        t["Z99"]
    assert "Z1" in t and "Q1" not in t


def test_reference_table_rejects_bad_ct():
    text = ("legend,architecture,ref,fl_ns,rl_ns,ct_ns,area_um2,power_uw,protocol\n"
            "Z1,RCA,[1],1.0,1.0,2.5,10,10,RTZ\n")
    with pytest.raises(ValueError):
        ReferenceTable.from_csv(text)


def test_legend_mapping():
    assert spec_for_legend("Z8").fa_flavor.value == "EARLY"
    assert spec_for_legend("O7").fa_flavor.value == "WEAK"
    assert spec_for_legend("O28").architecture is Architecture.BCLARC
    assert spec_for_legend("O28").protocol is Protocol.RTO
    assert spec_for_legend("Z25").lsb_rca_width == 8
    for bad in ("Z14", "X1", "Z", "Zq"):
        with pytest.raises(UnknownLegend):
            spec_for_legend(bad)
    assert "Z14" not in mapped_legends(Protocol.RTZ)
    assert len(mapped_legends(Protocol.RTO)) == 30


def test_parse_pairs():
    assert parse_pairs("Z22:Z23, Z2:Z8,") == [("Z22", "Z23"), ("Z2", "Z8")]
    with pytest.raises(ValueError):
        parse_pairs("Z22-Z23")


def test_compare_ordinal():
    vs = random_vectors(32, 20, 1)
    rows = [measure(spec_for_legend(k), vs, legend=k) for k in ("Z22", "Z23")]
    ref = ReferenceTable.bundled()
    rep = compare_ordinal(rows, ref, [("Z22", "Z22")])
    assert rep.fraction() == 1.0
    rep = compare_ordinal(rows, ref, [("Z22", "Z23")], metrics=("ct", "rl"))
    assert rep.by_metric() == {"ct": 1.0, "rl": 1.0}
    assert rep.to_dict()["agreement"] == 1.0
    with pytest.raises(UnknownLegend):
        compare_ordinal(rows, ref, [("Z22", "Z8")])


def test_default_weights_cover_every_kind():
    assert set(DEFAULT_WEIGHTS) == set(GateKind)
