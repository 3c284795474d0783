"""Command-line front end: generate, simulate, verify, bench, compare.

Exit codes: 0 success (and, for ``verify``, no violations), 1 usage, file
or spec errors, 2 violations found by ``verify``.
"""

from __future__ import annotations

import argparse
import configparser
import io
import json
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from qdilab.adders import AdderSpec, Architecture, SpecInvalid, generate
from qdilab.encoding import EncodingError, Protocol, Vector, format_vectors, parse_vectors
from qdilab.logiclib import FullAdderFlavor
from qdilab.metrics import (
    MetricsRow,
    ReferenceTable,
    UnknownLegend,
    compare_ordinal,
    mapped_legends,
    measure,
    normalized_series,
    parse_pairs,
    rows_from_csv,
    rows_to_csv,
    spec_for_legend,
)
from qdilab.netlist import Netlist, NetlistError, validate
from qdilab.qdicheck import RoundTripChecker, check_monotonic
from qdilab.sim import (
    DelayModel,
    SimulationError,
    Simulator,
    adder_width,
    aggregate,
    random_vectors,
    write_jsonl,
    write_vcd,
)

OUT_ENV = "QDILAB_OUT"
DEFAULT_SEED = 1


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# Experiment configuration
# ---------------------------------------------------------------------------

@dataclass
class VectorSource:
    kind: str = "random"          # random | file
    count: int = 2000
    seed: int | None = DEFAULT_SEED
    path: str = ""

    def __post_init__(self):
        if self.kind not in ("random", "file"):
            raise UsageError(f"unknown vector source {self.kind!r}")
        if self.kind == "random" and self.seed is None:
            raise UsageError("random vectors need an explicit seed")
        if self.kind == "file" and not self.path:
            raise UsageError("file vector source needs a path")

    def load(self, width: int) -> list[Vector]:
        if self.kind == "random":
            return random_vectors(width, self.count, self.seed)
        vectors = parse_vectors(Path(self.path).read_text())
        for v in vectors:
            if v.a >> width or v.b >> width:
                raise EncodingError(f"vector {v} exceeds width {width}")
        return vectors


@dataclass
class ExperimentConfig:
    adders: dict[str, AdderSpec] = field(default_factory=dict)
    legends: list[str] = field(default_factory=list)
    protocols: list[Protocol] = field(default_factory=lambda: [Protocol.RTZ, Protocol.RTO])
    delay: DelayModel = field(default_factory=DelayModel.unit)
    vectors: VectorSource = field(default_factory=VectorSource)
    out_dir: str = ""
    formats: list[str] = field(default_factory=lambda: ["csv", "json"])

    def runs(self) -> list[tuple[str, AdderSpec]]:
        """(row label, spec) for every requested design and protocol."""
        out = []
        if not self.adders and not self.legends:
            legends = [lg for p in self.protocols for lg in mapped_legends(p)]
        else:
            legends = list(self.legends)
        for lg in legends:
            out.append((lg, spec_for_legend(lg)))
        for name, spec in self.adders.items():
            for p in self.protocols:
                out.append((f"{name}/{p.name}", spec.with_protocol(p)))
        return out

    # -- INI round trip -----------------------------------------------------

    def to_ini(self) -> str:
        cp = configparser.ConfigParser()
        cp["experiment"] = {
            "protocols": ", ".join(p.name for p in self.protocols),
            "delay": self.delay.describe(),
            "vectors": self.vectors.kind,
            "count": str(self.vectors.count),
            "seed": "" if self.vectors.seed is None else str(self.vectors.seed),
            "vector_file": self.vectors.path,
            "legends": ", ".join(self.legends),
            "out_dir": self.out_dir,
            "formats": ", ".join(self.formats),
        }
        for name, s in self.adders.items():
            cp[f"adder:{name}"] = {
                "architecture": s.architecture.value,
                "width": str(s.width),
                "fa_flavor": s.fa_flavor.value,
                "partition": ",".join(map(str, s.partition)),
                "lsb_rca_width": str(s.lsb_rca_width),
            }
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()

    @classmethod
    def from_ini(cls, text: str) -> "ExperimentConfig":
        cp = configparser.ConfigParser()
        cp.read_string(text)
        ex = cp["experiment"] if cp.has_section("experiment") else {}

        def items(key, default=""):
            return [x.strip() for x in ex.get(key, default).split(",") if x.strip()]

        seed = ex.get("seed", str(DEFAULT_SEED)).strip()
        vectors = VectorSource(ex.get("vectors", "random").strip(),
                               int(ex.get("count", "2000")),
                               int(seed) if seed else None,
                               ex.get("vector_file", "").strip())
        adders = {}
        for sec in cp.sections():
            if not sec.startswith("adder:"):
                continue
            s = cp[sec]
            part = tuple(int(x) for x in s.get("partition", "").split(",") if x.strip())
            adders[sec[len("adder:"):]] = AdderSpec(
                Architecture.parse(s.get("architecture")),
                int(s.get("width", "32")),
                Protocol.RTZ,
                FullAdderFlavor.parse(s.get("fa_flavor", "EARLY")),
                part,
                int(s.get("lsb_rca_width", "0")))
        return cls(adders=adders,
                   legends=items("legends"),
                   protocols=[Protocol.parse(p) for p in items("protocols", "RTZ, RTO")],
                   delay=DelayModel.parse(ex.get("delay", "unit")),
                   vectors=vectors,
                   out_dir=ex.get("out_dir", "").strip(),
                   formats=items("formats", "csv, json"))


# ---------------------------------------------------------------------------
# Helpers
# ---------------------------------------------------------------------------

def _add_spec_flags(p: argparse.ArgumentParser, netlist_ok: bool = True) -> None:
    if netlist_ok:
        p.add_argument("--netlist", help="netlist JSON file (instead of spec flags)")
    p.add_argument("--arch", default="RCA_SBFA", help="architecture (rca, dbfa, hybrid, csla, "
                   "ccla, bcla, bclarc, hybrid_bclarc)")
    p.add_argument("--width", type=int, default=32)
    p.add_argument("--protocol", default="RTZ")
    p.add_argument("--flavor", default="EARLY", help="full adder for RCA_SBFA")
    p.add_argument("--partition", default="", help="CSLA segment widths, e.g. 8,8,8,8")
    p.add_argument("--lsb-rca-width", type=int, default=0)


def _add_vector_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--vectors", help="vector file: 'a b cin' hex per line")
    p.add_argument("--random", type=int, default=None, metavar="N",
                   help="N uniform random vectors (default 2000)")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)


def _add_delay_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--delay", default="unit", help="unit | per_kind | per_kind:C2=3,C3=4,...")
    p.add_argument("--ack-delay", type=int, default=0)


def _spec_from_args(a) -> AdderSpec:
    part = tuple(int(x) for x in a.partition.split(",") if x.strip())
    try:
        spec = AdderSpec(a.arch, a.width, a.protocol, a.flavor, part, a.lsb_rca_width)
    except ValueError as e:
        raise SpecInvalid(str(e)) from None
    spec.check()
    return spec


def _netlist_from_args(a) -> Netlist:
    if getattr(a, "netlist", None):
        return Netlist.load(a.netlist)
    return generate(_spec_from_args(a))


def _vectors_from_args(a, width: int) -> tuple[list[Vector], dict]:
    if a.vectors:
        src = VectorSource("file", path=a.vectors)
    else:
        src = VectorSource("random", a.random if a.random is not None else 2000, a.seed)
    return src.load(width), {"source": src.kind, "count": src.count, "seed": src.seed,
                             "path": src.path}


def _out_dir(explicit: str | None) -> Path:
    d = Path(explicit or os.environ.get(OUT_ENV) or "qdilab_out")
    d.mkdir(parents=True, exist_ok=True)
    return d


def _emit(obj, path: str | None) -> None:
    text = json.dumps(obj, indent=2, sort_keys=True) + "\n"
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_generate(a) -> int:
    spec = _spec_from_args(a)
    nl = generate(spec, with_completion=not a.no_completion)
    text = nl.to_json(indent=None if a.compact else 1) + "\n"
    if a.output:
        Path(a.output).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_simulate(a) -> int:
    nl = _netlist_from_args(a)
    delay = DelayModel.parse(a.delay)
    vectors, source = _vectors_from_args(a, adder_width(nl))
    sim = Simulator(nl, delay)
    traces = [sim.run_cycle(*v, ack_delay=a.ack_delay) for v in vectors]
    if a.trace:
        with open(a.trace, "w") as fh:
            write_jsonl(traces, fh, nl, with_transitions=not a.summary_only)
    if a.vcd and traces:
        with open(a.vcd, "w") as fh:
            write_vcd(traces[0], nl, fh)
    _emit({"netlist": nl.name, "delay": delay.describe(), "vectors": source,
           "stats": aggregate(traces)}, a.output)
    return 0


def cmd_verify(a) -> int:
    nl = _netlist_from_args(a)
    delay = DelayModel.parse(a.delay)
    diagnostics = []
    for f in validate(nl):
        diagnostics.append({"kind": f"STRUCTURE_{f.kind}", "location": f.location,
                            "detail": f.detail})
    w = adder_width(nl)
    vectors, source = _vectors_from_args(a, w)
    sim = Simulator(nl, delay)
    checker = RoundTripChecker(nl, delay)
    for i, v in enumerate(vectors):
        try:
            tr = sim.run_cycle(*v, ack_delay=a.ack_delay)
        except SimulationError as e:
            diagnostics.append({"kind": "SIMULATION", "vector": i, "detail": str(e)})
            sim.reset()
            continue
        if tr.outputs != v.a + v.b + v.cin:
            diagnostics.append({"kind": "FUNCTIONAL", "vector": i,
                                "detail": f"{v.a:x}+{v.b:x}+{v.cin} decoded as {tr.outputs}"})
        for viol in check_monotonic(tr, netlist=nl) + checker.check(tr, strict=a.strict):
            d = viol.to_dict()
            d["vector"] = i
            diagnostics.append(d)
        if len(diagnostics) >= a.max_diagnostics:
            break
    _emit({"netlist": nl.name, "vectors": source, "strict": a.strict,
           "violations": len(diagnostics), "diagnostics": diagnostics}, a.output)
    return 2 if diagnostics else 0


def _config_from_args(a) -> ExperimentConfig:
    if a.config:
        cfg = ExperimentConfig.from_ini(Path(a.config).read_text())
    else:
        cfg = ExperimentConfig()
    if a.legends:
        cfg.legends = [x.strip() for x in a.legends.split(",") if x.strip()]
        cfg.adders = {}
    if a.protocols:
        cfg.protocols = [Protocol.parse(p.strip()) for p in a.protocols.split(",")]
    if a.random is not None:
        cfg.vectors = VectorSource("random", a.random, a.seed)
    elif a.vectors:
        cfg.vectors = VectorSource("file", path=a.vectors)
    elif a.seed != DEFAULT_SEED and cfg.vectors.kind == "random":
        cfg.vectors = VectorSource("random", cfg.vectors.count, a.seed)
    if a.delay:
        cfg.delay = DelayModel.parse(a.delay)
    if a.out:
        cfg.out_dir = a.out
    return cfg


def cmd_bench(a) -> int:
    cfg = _config_from_args(a)
    runs = cfg.runs()
    out = _out_dir(cfg.out_dir)
    cache: dict[AdderSpec, MetricsRow] = {}
    rows = []
    for label, spec in runs:
        if spec not in cache:
            vectors = cfg.vectors.load(spec.width)
            if not a.quiet:
                print(f"bench {spec.label} ({len(vectors)} vectors)", file=sys.stderr)
            cache[spec] = measure(spec, vectors, cfg.delay)
        row = cache[spec]
        rows.append(MetricsRow(**{**row.as_dict(), "legend": label}))
    if "csv" in cfg.formats:
        (out / "metrics.csv").write_text(rows_to_csv(rows))
        series = normalized_series(rows)
        lines = ["legend,protocol,ct_norm,pctp_norm"]
        lines += [f"{s['legend']},{s['protocol']},{s['ct_norm']!r},{s['pctp_norm']!r}"
                  for s in series]
        (out / "normalized.csv").write_text("\n".join(lines) + "\n")
    if "json" in cfg.formats:
        (out / "metrics.json").write_text(json.dumps({
            "config": cfg.to_ini(),
            "rows": [r.as_dict() for r in rows],
            "normalized": normalized_series(rows),
        }, indent=1, sort_keys=True) + "\n")
    (out / "experiment.ini").write_text(cfg.to_ini())
    print(f"wrote {len(rows)} rows to {out}", file=sys.stderr)
    return 0


def cmd_compare(a) -> int:
    rows = rows_from_csv(Path(a.measured).read_text())
    ref = ReferenceTable.from_csv(Path(a.reference).read_text()) if a.reference \
        else ReferenceTable.bundled()
    pairs = parse_pairs(a.pairs) if a.pairs else []
    relations = [x.strip() for x in a.relations.split(",") if x.strip()] if a.relations else []
    metrics = [m.strip() for m in a.metrics.split(",")] if a.metrics else None
    kw = {"metrics": metrics} if metrics else {}
    report = compare_ordinal(rows, ref, pairs, relations=relations, **kw)
    _emit(report.to_dict(), a.output)
    return 0


def cmd_vectors(a) -> int:
    text = format_vectors(random_vectors(a.width, a.count, a.seed), a.width)
    header = f"# {a.count} uniform random vectors, width {a.width}, seed {a.seed}\n"
    if a.output:
        Path(a.output).write_text(header + text)
    else:
        sys.stdout.write(header + text)
    return 0


class _Parser(argparse.ArgumentParser):
    # flag errors are usage errors: exit 1, keeping 2 for verify violations
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="qdilab", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="emit an adder netlist as JSON")
    _add_spec_flags(p, netlist_ok=False)
    p.add_argument("--no-completion", action="store_true",
                   help="omit the input/output completion detectors")
    p.add_argument("--compact", action="store_true")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("simulate", help="run handshake cycles and export traces")
    _add_spec_flags(p)
    _add_vector_flags(p)
    _add_delay_flags(p)
    p.add_argument("--trace", help="write per-cycle traces as JSON lines")
    p.add_argument("--summary-only", action="store_true", help="omit transitions in --trace")
    p.add_argument("--vcd", help="write the first cycle as a VCD dump")
    p.add_argument("-o", "--output", help="summary JSON (default stdout)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify", help="functional + QDI checks (exit 2 on violations)")
    _add_spec_flags(p)
    _add_vector_flags(p)
    _add_delay_flags(p)
    p.add_argument("--strict", action="store_true", help="per-transition orphan check")
    p.add_argument("--max-diagnostics", type=int, default=1000)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("bench", help="measure designs and write metric tables")
    p.add_argument("--config", help="experiment INI file")
    p.add_argument("--legends", help="comma-separated published legends, e.g. Z8,Z28")
    p.add_argument("--protocols", help="RTZ,RTO")
    _add_vector_flags(p)
    p.add_argument("--delay")
    p.add_argument("--out", help=f"output directory (default ${OUT_ENV} or ./qdilab_out)")
    p.add_argument("-q", "--quiet", action="store_true")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("compare", help="ordinal agreement with the published tables")
    p.add_argument("--measured", required=True, help="metrics.csv written by bench")
    p.add_argument("--pairs", default="", help="X:Y legend pairs, comma separated")
    p.add_argument("--relations", default="", help="legends whose sign(fl - rl) is compared")
    p.add_argument("--metrics", default="", help="subset of fl,rl,ct,area,power,pctp")
    p.add_argument("--reference", help="alternative reference CSV")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("vectors", help="write a seeded random vector file")
    p.add_argument("--width", type=int, default=32)
    p.add_argument("--count", type=int, default=2000)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_vectors)
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    ap = build_parser()
    try:
        a = ap.parse_args(argv)
    except SystemExit as e:      # --help or a flag error
        return int(e.code or 0)
    try:
        return a.func(a)
    except (SpecInvalid, UsageError, UnknownLegend, EncodingError, NetlistError,
            OSError, ValueError, KeyError, configparser.Error) as e:
        print(f"qdilab {a.command}: error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
