"""Comparison quantities: latencies, area and power proxies, PCTP, and
ordinal agreement with the bundled published tables."""

from __future__ import annotations

import configparser
import csv
import io
import statistics
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from qdilab.adders import AdderSpec, Architecture, generate
from qdilab.encoding import Protocol, Vector
from qdilab.logiclib import FullAdderFlavor
from qdilab.netlist import GateKind, InvalidNetlist, Netlist, validate
from qdilab.sim import UNIT, DelayModel, HandshakeTrace, Simulator


class EmptyTraceSet(ValueError):
    pass


class EmptyOrNonPositive(ValueError):
    pass


class UnknownLegend(KeyError):
    pass


DEFAULT_WEIGHTS: dict[GateKind, float] = {
    GateKind.NOT: 1,
    GateKind.AND2: 2, GateKind.OR2: 2,
    GateKind.AND3: 3, GateKind.OR3: 3,
    GateKind.AND4: 4, GateKind.OR4: 4,
    GateKind.C2: 4, GateKind.C3: 6,
}


def load_weights(path: str | Path) -> dict[GateKind, float]:
    """Read ``[weights]`` ``KIND = value`` pairs over the defaults."""
    cp = configparser.ConfigParser()
    cp.optionxform = str.upper
    if not cp.read(path):
        raise FileNotFoundError(path)
    weights = dict(DEFAULT_WEIGHTS)
    for key, val in cp["weights"].items():
        weights[GateKind(key)] = float(val)
    return weights


def area_proxy(netlist: Netlist, weights: Mapping[GateKind, float] | None = None) -> float:
    report = validate(netlist)
    if report:
        raise InvalidNetlist(f"{netlist.name!r}: {report.findings[0].detail}")
    weights = weights or DEFAULT_WEIGHTS
    return float(sum(weights[kind] * n for kind, n in netlist.census().items()))


def power_proxy(traces: Sequence[HandshakeTrace]) -> float:
    if not traces:
        raise EmptyTraceSet("power proxy needs at least one trace")
    return statistics.fmean(t.transition_count for t in traces)


def pctp(power: float, ct: float) -> float:
    if power < 0 or ct < 0:
        raise ValueError("power and ct must be non-negative")
    return power * ct


def normalize(values: Sequence[float]) -> list[float]:
    """Divide by the maximum so the largest entry becomes exactly 1."""
    values = list(values)
    if not values or any(v <= 0 for v in values):
        raise EmptyOrNonPositive("normalize needs a non-empty list of positive values")
    top = max(values)
    return [v / top for v in values]


# ---------------------------------------------------------------------------
# Measured rows
# ---------------------------------------------------------------------------

@dataclass
class MetricsRow:
    legend: str
    architecture: str
    protocol: str
    fl: float
    rl: float
    ct: float
    area: float
    power: float
    pctp: float
    fl_max: int = 0
    rl_max: int = 0
    ct_max: int = 0
    vectors: int = 0

    def __post_init__(self):
        if self.ct != self.fl + self.rl:
            raise ValueError(f"ct {self.ct} != fl + rl for {self.legend}")
        if self.pctp != self.power * self.ct:
            raise ValueError(f"pctp {self.pctp} != power * ct for {self.legend}")

    @classmethod
    def from_traces(cls, legend: str, spec: AdderSpec, netlist: Netlist,
                    traces: Sequence[HandshakeTrace], weights=None) -> "MetricsRow":
        if not traces:
            raise EmptyTraceSet(f"no traces for {legend}")
        fl = statistics.fmean(t.fl for t in traces)
        rl = statistics.fmean(t.rl for t in traces)
        ct = fl + rl
        power = power_proxy(traces)
        return cls(legend, spec.label, spec.protocol.name, fl, rl, ct,
                   area_proxy(netlist, weights), power, pctp(power, ct),
                   max(t.fl for t in traces), max(t.rl for t in traces),
                   max(t.ct for t in traces), len(traces))

    def as_dict(self) -> dict:
        return asdict(self)


def measure(spec: AdderSpec, vectors: Iterable[Vector], delay_model: DelayModel = UNIT,
            legend: str = "", ack_delay: int = 0, weights=None) -> MetricsRow:
    nl = generate(spec)
    sim = Simulator(nl, delay_model)
    traces = [_slim(sim.run_cycle(*v, ack_delay=ack_delay)) for v in vectors]
    return MetricsRow.from_traces(legend or spec.label, spec, nl, traces, weights)


def _slim(tr: HandshakeTrace) -> HandshakeTrace:
    tr.count = tr.transition_count
    tr.transitions = []
    tr.split = 0
    return tr


FIELDS = [f for f in MetricsRow.__dataclass_fields__]


def rows_to_csv(rows: Sequence[MetricsRow]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, FIELDS, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: _fmt(v) for k, v in r.as_dict().items()})
    return buf.getvalue()


def rows_from_csv(text: str) -> list[MetricsRow]:
    out = []
    for d in csv.DictReader(io.StringIO(text)):
        kw = {}
        for k, v in d.items():
            if k in ("legend", "architecture", "protocol"):
                kw[k] = v
            elif k in ("fl_max", "rl_max", "ct_max", "vectors"):
                kw[k] = int(v)
            else:
                kw[k] = float(v)
        # csv text drops the last bits of a float; re-derive the exact products
        kw["ct"] = kw["fl"] + kw["rl"]
        kw["pctp"] = kw["power"] * kw["ct"]
        out.append(MetricsRow(**kw))
    return out


def _fmt(v):
    return repr(v) if isinstance(v, float) else v


def normalized_series(rows: Sequence[MetricsRow]) -> list[dict]:
    """Per-protocol normalized CT and PCTP, ready for a bar plot."""
    out = []
    for proto in sorted({r.protocol for r in rows}):
        group = [r for r in rows if r.protocol == proto]
        ct = normalize([r.ct for r in group])
        pp = normalize([r.pctp for r in group])
        for r, c, p in zip(group, ct, pp):
            out.append({"legend": r.legend, "protocol": proto, "ct_norm": c, "pctp_norm": p})
    return out


# ---------------------------------------------------------------------------
# Reference tables
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ReferenceRow:
    legend: str
    architecture: str
    ref: str
    fl: float
    rl: float
    ct: float
    area: float
    power: float
    protocol: Protocol

    @property
    def pctp(self) -> float:
        return self.power * self.ct


class ReferenceTable:
    """Published design metrics keyed by legend (Z* for RTZ, O* for RTO)."""

    TOLERANCE = 0.01

    def __init__(self, rows: Iterable[ReferenceRow]):
        self.rows: dict[str, ReferenceRow] = {}
        for r in rows:
            if abs(r.ct - (r.fl + r.rl)) > self.TOLERANCE + 1e-9:
                raise ValueError(f"{r.legend}: CT {r.ct} != FL {r.fl} + RL {r.rl}")
            self.rows[r.legend] = r

    @classmethod
    def from_csv(cls, text: str) -> "ReferenceTable":
        lines = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
        rows = []
        for d in csv.DictReader(lines):
            rows.append(ReferenceRow(d["legend"], d["architecture"], d["ref"],
                                     float(d["fl_ns"]), float(d["rl_ns"]), float(d["ct_ns"]),
                                     float(d["area_um2"]), float(d["power_uw"]),
                                     Protocol.parse(d["protocol"])))
        return cls(rows)

    @classmethod
    def bundled(cls) -> "ReferenceTable":
        text = resources.files("qdilab").joinpath("data/reference_tables.csv").read_text()
        return cls.from_csv(text)

    def __getitem__(self, legend: str) -> ReferenceRow:
        try:
            return self.rows[legend]
        except KeyError:
            raise UnknownLegend(legend) from None

    def __contains__(self, legend: str) -> bool:
        return legend in self.rows

    def __len__(self):
        return len(self.rows)

    def legends(self, protocol: Protocol | None = None) -> list[str]:
        return [k for k, r in self.rows.items() if protocol is None or r.protocol is protocol]


# Implemented stand-ins for the published designs (number -> spec at width 32).
# Designs outside the cell library map to the closest implemented variant.
_LEGEND_SPECS: dict[int, dict] = {
    1: dict(architecture=Architecture.RCA_SBFA, fa_flavor=FullAdderFlavor.STRONG),
    2: dict(architecture=Architecture.RCA_SBFA, fa_flavor=FullAdderFlavor.STRONG),
    3: dict(architecture=Architecture.RCA_SBFA, fa_flavor=FullAdderFlavor.STRONG),
    4: dict(architecture=Architecture.RCA_SBFA, fa_flavor=FullAdderFlavor.WEAK),
    5: dict(architecture=Architecture.RCA_SBFA, fa_flavor=FullAdderFlavor.WEAK),
    6: dict(architecture=Architecture.RCA_SBFA, fa_flavor=FullAdderFlavor.WEAK),
    7: dict(architecture=Architecture.RCA_SBFA, fa_flavor=FullAdderFlavor.WEAK),
    8: dict(architecture=Architecture.RCA_SBFA, fa_flavor=FullAdderFlavor.EARLY),
    9: dict(architecture=Architecture.RCA_DBFA),
    10: dict(architecture=Architecture.HYBRID_RCA),
    11: dict(architecture=Architecture.RCA_DBFA),
    12: dict(architecture=Architecture.HYBRID_RCA),
    13: dict(architecture=Architecture.CSLA, partition=(8, 8, 8, 8)),
    15: dict(architecture=Architecture.BCLA),
    16: dict(architecture=Architecture.BCLARC),
    17: dict(architecture=Architecture.BCLA),
    18: dict(architecture=Architecture.BCLARC),
    19: dict(architecture=Architecture.CCLA),
    20: dict(architecture=Architecture.BCLA),
    21: dict(architecture=Architecture.BCLARC),
    22: dict(architecture=Architecture.BCLA),
    23: dict(architecture=Architecture.BCLARC),
    24: dict(architecture=Architecture.HYBRID_BCLARC_RCA, lsb_rca_width=4),
    25: dict(architecture=Architecture.HYBRID_BCLARC_RCA, lsb_rca_width=8),
    26: dict(architecture=Architecture.HYBRID_BCLARC_RCA, lsb_rca_width=12),
    27: dict(architecture=Architecture.BCLA),
    28: dict(architecture=Architecture.BCLARC),
    29: dict(architecture=Architecture.HYBRID_BCLARC_RCA, lsb_rca_width=4),
    30: dict(architecture=Architecture.HYBRID_BCLARC_RCA, lsb_rca_width=8),
    31: dict(architecture=Architecture.HYBRID_BCLARC_RCA, lsb_rca_width=12),
}


def spec_for_legend(legend: str, width: int = 32) -> AdderSpec:
    """Implemented design standing in for a published legend."""
    if len(legend) < 2 or legend[0] not in "ZO" or not legend[1:].isdigit():
        raise UnknownLegend(legend)
    kw = _LEGEND_SPECS.get(int(legend[1:]))
    if kw is None:
        raise UnknownLegend(f"{legend} has no implemented counterpart")
    protocol = Protocol.RTZ if legend[0] == "Z" else Protocol.RTO
    return AdderSpec(width=width, protocol=protocol, **kw)


def mapped_legends(protocol: Protocol) -> list[str]:
    prefix = "Z" if protocol is Protocol.RTZ else "O"
    return [f"{prefix}{k}" for k in sorted(_LEGEND_SPECS)]


# ---------------------------------------------------------------------------
# Ordinal comparison
# ---------------------------------------------------------------------------

METRICS = ("fl", "rl", "ct", "area", "power", "pctp")


def _sign(x: float, eps: float = 1e-9) -> int:
    return 0 if abs(x) <= eps else (1 if x > 0 else -1)


@dataclass(frozen=True)
class Agreement:
    x: str
    y: str
    metric: str
    reference: int
    measured: int

    @property
    def agree(self) -> bool:
        return self.reference == self.measured


@dataclass
class OrdinalReport:
    entries: list[Agreement] = field(default_factory=list)

    def fraction(self, metric: str | None = None) -> float:
        sel = [e for e in self.entries if metric is None or e.metric == metric]
        return sum(e.agree for e in sel) / len(sel) if sel else 1.0

    def by_metric(self) -> dict[str, float]:
        return {m: self.fraction(m) for m in sorted({e.metric for e in self.entries})}

    def to_dict(self) -> dict:
        return {
            "agreement": self.fraction(),
            "by_metric": self.by_metric(),
            "entries": [dict(x=e.x, y=e.y, metric=e.metric, reference=e.reference,
                             measured=e.measured, agree=e.agree) for e in self.entries],
        }


def parse_pairs(text: str) -> list[tuple[str, str]]:
    pairs = []
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        x, sep, y = item.partition(":")
        if not sep or not x or not y:
            raise ValueError(f"bad pair {item!r}; expected X:Y")
        pairs.append((x.strip(), y.strip()))
    return pairs


def compare_ordinal(measured: Sequence[MetricsRow], reference: ReferenceTable,
                    pairs: Sequence[tuple[str, str]], metrics: Sequence[str] = METRICS,
                    relations: Sequence[str] = ()) -> OrdinalReport:
    """Sign agreement of measured vs published differences.

    Each pair contributes one entry per metric comparing
    sign(x - y) across the two sources. Each legend in ``relations``
    contributes a ``fl-rl`` entry comparing sign(fl - rl).
    """
    by_legend = {r.legend: r for r in measured}

    def get(legend):
        if legend not in by_legend:
            raise UnknownLegend(f"{legend} was not measured")
        return by_legend[legend], reference[legend]

    report = OrdinalReport()
    for x, y in pairs:
        mx, rx = get(x)
        my, ry = get(y)
        for m in metrics:
            report.entries.append(Agreement(
                x, y, m, _sign(getattr(rx, m) - getattr(ry, m)),
                _sign(getattr(mx, m) - getattr(my, m))))
    for legend in relations:
        m, r = get(legend)
        report.entries.append(Agreement(legend, legend, "fl-rl",
                                        _sign(r.fl - r.rl), _sign(m.fl - m.rl)))
    return report
