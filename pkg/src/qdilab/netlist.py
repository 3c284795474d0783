"""Typed gate-level netlist graph.

A netlist is a feed-forward network of gates over integer net ids. Primary
inputs and outputs are declared as dual-rail ports ``(rail1, rail0)`` and are
listed LSB first. Completion detector outputs are registered separately as
named acknowledgement nets; they are observable sinks but not data outputs.

The handshake loop is closed by the simulation environment, so a netlist can
never contain a cycle: every gate input must already exist when the gate is
added.
"""

from __future__ import annotations

import enum
import json
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable

from qdilab.encoding import Protocol

PRIMARY_INPUT = "input"
CONSTANT = "const"

FORMAT_NAME = "qdilab-netlist"
FORMAT_VERSION = 1


class NetlistError(Exception):
    pass


class ArityMismatch(NetlistError):
    pass


class UnknownNet(NetlistError):
    pass


class InvalidNetlist(NetlistError):
    pass


class GateKind(enum.Enum):
    NOT = "NOT"
    AND2 = "AND2"
    AND3 = "AND3"
    AND4 = "AND4"
    OR2 = "OR2"
    OR3 = "OR3"
    OR4 = "OR4"
    C2 = "C2"
    C3 = "C3"

    @property
    def arity(self) -> int:
        return _ARITY[self]

    @property
    def family(self) -> str:
        """One of ``NOT``, ``AND``, ``OR`` or ``C``."""
        return self.value.rstrip("234")

    @property
    def stateful(self) -> bool:
        return self.family == "C"

    @classmethod
    def of(cls, family: str, arity: int) -> "GateKind":
        if family == "NOT":
            if arity != 1:
                raise ArityMismatch(f"NOT takes 1 input, got {arity}")
            return cls.NOT
        try:
            return cls(f"{family}{arity}")
        except ValueError:
            raise ArityMismatch(f"no {family} gate with {arity} inputs") from None


_ARITY = {
    GateKind.NOT: 1,
    GateKind.AND2: 2, GateKind.AND3: 3, GateKind.AND4: 4,
    GateKind.OR2: 2, GateKind.OR3: 3, GateKind.OR4: 4,
    GateKind.C2: 2, GateKind.C3: 3,
}


@dataclass
class Net:
    id: int
    name: str
    # gate id, PRIMARY_INPUT, CONSTANT, or None while undriven
    driver: int | str | None = None
    fanout: list[tuple[int, int]] = field(default_factory=list)


@dataclass(frozen=True)
class Gate:
    id: int
    kind: GateKind
    inputs: tuple[int, ...]
    output: int
    name: str = ""


@dataclass(frozen=True)
class Port:
    """A dual-rail signal: ``rail1`` carries the 1 code, ``rail0`` the 0 code."""
    name: str
    rail1: int
    rail0: int

    @property
    def rails(self) -> tuple[int, int]:
        return (self.rail1, self.rail0)


class Netlist:
    def __init__(self, protocol: Protocol = Protocol.RTZ, name: str = ""):
        self.protocol = Protocol(protocol)
        self.name = name
        self.nets: list[Net] = []
        self.gates: list[Gate] = []
        self.inputs: list[Port] = []
        self.outputs: list[Port] = []
        self.constants: dict[int, int] = {}
        self.acks: dict[str, int] = {}
        # (instance name, cell type) records for structural audits
        self.instances: list[tuple[str, str]] = []
        # named internal nets exposed for inspection (not observability sinks)
        self.probes: dict[str, int] = {}

    def __repr__(self):
        return (f"Netlist({self.name!r}, {self.protocol.name}, "
                f"{len(self.gates)} gates, {len(self.nets)} nets)")

    # -- construction -----------------------------------------------------

    def add_net(self, name: str = "") -> int:
        nid = len(self.nets)
        self.nets.append(Net(nid, name or f"n{nid}"))
        return nid

    def add_input(self, name: str) -> Port:
        r1 = self.add_net(f"{name}.1")
        r0 = self.add_net(f"{name}.0")
        self.nets[r1].driver = PRIMARY_INPUT
        self.nets[r0].driver = PRIMARY_INPUT
        port = Port(name, r1, r0)
        self.inputs.append(port)
        return port

    def add_constant(self, value: int, name: str = "") -> int:
        if value not in (0, 1):
            raise ValueError(f"constant must be 0 or 1, got {value!r}")
        nid = self.add_net(name or f"tie{value}_{len(self.nets)}")
        self.nets[nid].driver = CONSTANT
        self.constants[nid] = value
        return nid

    def add_output(self, name: str, rail1: int, rail0: int) -> Port:
        self._check_nets((rail1, rail0))
        port = Port(name, rail1, rail0)
        self.outputs.append(port)
        return port

    def set_ack(self, name: str, net: int) -> None:
        self._check_nets((net,))
        self.acks[name] = net

    def add_instance(self, name: str, cell_type: str) -> None:
        self.instances.append((name, cell_type))

    def set_probe(self, name: str, net: int) -> None:
        self._check_nets((net,))
        self.probes[name] = net

    def add_gate(self, kind: GateKind, inputs: Iterable[int],
                 name: str = "") -> tuple[int, int]:
        """Append a gate driving a fresh net; returns ``(gate id, output net)``."""
        kind = GateKind(kind)
        inputs = tuple(inputs)
        if len(inputs) != kind.arity:
            raise ArityMismatch(
                f"{kind.value} takes {kind.arity} inputs, got {len(inputs)}")
        self._check_nets(inputs)
        gid = len(self.gates)
        out = self.add_net(name)
        self.nets[out].driver = gid
        for pin, nid in enumerate(inputs):
            self.nets[nid].fanout.append((gid, pin))
        self.gates.append(Gate(gid, kind, inputs, out, name))
        return gid, out

    def gate(self, family: str, inputs: Iterable[int], name: str = "") -> int:
        """Shorthand: add a gate by family and return only its output net."""
        inputs = tuple(inputs)
        if len(inputs) == 1 and family != "NOT":
            return inputs[0]
        return self.add_gate(GateKind.of(family, len(inputs)), inputs, name)[1]

    def _check_nets(self, nets: Iterable[int]) -> None:
        for nid in nets:
            if not isinstance(nid, int) or not 0 <= nid < len(self.nets):
                raise UnknownNet(f"unknown net {nid!r}")

    # -- queries ----------------------------------------------------------

    @property
    def input_rails(self) -> list[int]:
        return [r for p in self.inputs for r in p.rails]

    @property
    def output_rails(self) -> list[int]:
        return [r for p in self.outputs for r in p.rails]

    def port(self, name: str) -> Port:
        for p in self.inputs + self.outputs:
            if p.name == name:
                return p
        raise KeyError(name)

    def net_name(self, nid: int) -> str:
        return self.nets[nid].name

    def topo_order(self) -> list[int]:
        """Gate ids in topological order (raises InvalidNetlist on a cycle)."""
        indeg = [0] * len(self.gates)
        for g in self.gates:
            for nid in g.inputs:
                if isinstance(self.nets[nid].driver, int):
                    indeg[g.id] += 1
        ready = [g.id for g in self.gates if indeg[g.id] == 0]
        order = []
        while ready:
            gid = ready.pop()
            order.append(gid)
            for succ, _pin in self.nets[self.gates[gid].output].fanout:
                indeg[succ] -= 1
                if indeg[succ] == 0:
                    ready.append(succ)
        if len(order) != len(self.gates):
            raise InvalidNetlist("netlist contains a combinational cycle")
        return order

    def census(self) -> Counter:
        return Counter(g.kind for g in self.gates)

    def instance_count(self, cell_type: str) -> int:
        return sum(1 for _, t in self.instances if t == cell_type)

    # -- serialization ----------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "format": FORMAT_NAME,
            "version": FORMAT_VERSION,
            "name": self.name,
            "protocol": self.protocol.name,
            "nets": [n.name for n in self.nets],
            "constants": {str(k): v for k, v in sorted(self.constants.items())},
            "inputs": [_port_dict(p) for p in self.inputs],
            "outputs": [_port_dict(p) for p in self.outputs],
            "acks": dict(self.acks),
            "instances": [list(i) for i in self.instances],
            "probes": dict(self.probes),
            "gates": [
                {"id": g.id, "kind": g.kind.value, "inputs": list(g.inputs),
                 "output": g.output, "name": g.name}
                for g in self.gates
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Netlist":
        if data.get("format") != FORMAT_NAME:
            raise InvalidNetlist(f"not a {FORMAT_NAME} document")
        if data.get("version") != FORMAT_VERSION:
            raise InvalidNetlist(f"unsupported version {data.get('version')!r}")
        nl = cls(Protocol[data["protocol"]], data.get("name", ""))
        for name in data["nets"]:
            nl.add_net(name)
        for k, v in data.get("constants", {}).items():
            nl.nets[int(k)].driver = CONSTANT
            nl.constants[int(k)] = int(v)
        for p in data["inputs"]:
            port = Port(p["name"], p["rail1"], p["rail0"])
            nl._check_nets(port.rails)
            for r in port.rails:
                nl.nets[r].driver = PRIMARY_INPUT
            nl.inputs.append(port)
        # gates may reference nets in any order in hand-written documents
        for g in sorted(data["gates"], key=lambda g: g["id"]):
            kind = GateKind(g["kind"])
            ins = tuple(g["inputs"])
            if len(ins) != kind.arity:
                raise ArityMismatch(f"gate {g['id']}: {kind.value} with {len(ins)} inputs")
            nl._check_nets(ins + (g["output"],))
            if g["id"] != len(nl.gates):
                raise InvalidNetlist("gate ids must be dense and start at 0")
            out = nl.nets[g["output"]]
            if out.driver is not None:
                raise InvalidNetlist(f"net {out.name!r} has multiple drivers")
            out.driver = g["id"]
            for pin, nid in enumerate(ins):
                nl.nets[nid].fanout.append((g["id"], pin))
            nl.gates.append(Gate(g["id"], kind, ins, g["output"], g.get("name", "")))
        for p in data["outputs"]:
            nl.add_output(p["name"], p["rail1"], p["rail0"])
        for k, v in data.get("acks", {}).items():
            nl.set_ack(k, v)
        for k, v in data.get("probes", {}).items():
            nl.set_probe(k, v)
        nl.instances = [tuple(i) for i in data.get("instances", [])]
        return nl

    def to_json(self, indent: int | None = None) -> str:
        return json.dumps(self.to_dict(), indent=indent)

    @classmethod
    def from_json(cls, text: str) -> "Netlist":
        return cls.from_dict(json.loads(text))

    def save(self, path) -> None:
        with open(path, "w") as f:
            f.write(self.to_json(indent=1))
            f.write("\n")

    @classmethod
    def load(cls, path) -> "Netlist":
        with open(path) as f:
            return cls.from_json(f.read())

    def copy(self) -> "Netlist":
        return Netlist.from_dict(self.to_dict())

    def dual(self) -> "Netlist":
        """Gate-for-gate dual: AND<->OR, NOT and C-elements kept, tie-offs
        complemented, protocol flipped. Every net of the dual carries the
        complement of the corresponding net of the original."""
        data = self.to_dict()
        data["protocol"] = self.protocol.dual.name
        data["constants"] = {k: 1 - v for k, v in data["constants"].items()}
        for g in data["gates"]:
            fam = g["kind"].rstrip("234")
            if fam in _DUAL_FAMILY:
                g["kind"] = _DUAL_FAMILY[fam] + g["kind"][len(fam):]
        return Netlist.from_dict(data)


_DUAL_FAMILY = {"AND": "OR", "OR": "AND"}


def _port_dict(p: Port) -> dict:
    return {"name": p.name, "rail1": p.rail1, "rail0": p.rail0}


# ---------------------------------------------------------------------------
# Validation and statistics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Finding:
    kind: str       # DANGLING_IO, UNDRIVEN, UNREACHABLE, DEAD_END, RAIL_PAIRING, CYCLE
    location: str
    detail: str = ""


@dataclass
class ValidationReport:
    findings: list[Finding] = field(default_factory=list)

    def __bool__(self):
        return bool(self.findings)

    def __len__(self):
        return len(self.findings)

    def __iter__(self):
        return iter(self.findings)

    def of_kind(self, kind: str) -> list[Finding]:
        return [f for f in self.findings if f.kind == kind]


def validate(nl: Netlist) -> ValidationReport:
    """Check the structural invariants; an empty report means the netlist is sound."""
    report = ValidationReport()
    add = report.findings.append

    seen_rails: dict[int, str] = {}
    for port in nl.inputs + nl.outputs:
        if port.rail1 == port.rail0:
            add(Finding("RAIL_PAIRING", port.name, "both rails on one net"))
        for r in port.rails:
            if r in seen_rails and seen_rails[r] != port.name:
                add(Finding("RAIL_PAIRING", port.name,
                            f"rail {nl.net_name(r)} also used by {seen_rails[r]}"))
            seen_rails[r] = port.name
    for port in nl.inputs:
        for r in port.rails:
            if nl.nets[r].driver != PRIMARY_INPUT:
                add(Finding("RAIL_PAIRING", port.name, f"input rail {nl.net_name(r)} is driven"))

    out_rails = set(nl.output_rails)
    sinks = out_rails | set(nl.acks.values())
    for port in nl.inputs:
        for r in port.rails:
            if not nl.nets[r].fanout and r not in sinks:
                add(Finding("DANGLING_IO", nl.net_name(r), "input rail has no fanout"))
    for port in nl.outputs:
        for r in port.rails:
            if nl.nets[r].driver is None:
                add(Finding("DANGLING_IO", nl.net_name(r), "output rail is never driven"))

    for net in nl.nets:
        if net.driver is None and net.id not in out_rails and net.fanout:
            add(Finding("UNDRIVEN", net.name, "net read by a gate but never driven"))

    try:
        nl.topo_order()
    except InvalidNetlist as e:
        add(Finding("CYCLE", nl.name, str(e)))
        return report

    # forward reachability from primary inputs and tie-offs
    reach = set(nl.input_rails) | set(nl.constants)
    for gid in nl.topo_order():
        g = nl.gates[gid]
        if any(i in reach for i in g.inputs):
            reach.add(g.output)
        else:
            add(Finding("UNREACHABLE", g.name or f"g{gid}", "no path from a primary input"))

    # backward observability towards outputs and completion detectors
    live = set(sinks)
    for gid in reversed(nl.topo_order()):
        g = nl.gates[gid]
        if g.output in live:
            live.update(g.inputs)
    for net in nl.nets:
        if net.id in live or net.driver is None:
            continue
        if net.driver == PRIMARY_INPUT:
            continue  # reported as DANGLING_IO above when unused
        add(Finding("DEAD_END", net.name, "net reaches no output or completion detector"))
    return report


@dataclass
class GateCensus:
    counts: dict[GateKind, int]
    nets: int
    depth: int

    @property
    def gates(self) -> int:
        return sum(self.counts.values())

    def as_names(self) -> dict[str, int]:
        return {k.value: v for k, v in sorted(self.counts.items(), key=lambda kv: kv[0].value)}


def stats(nl: Netlist) -> GateCensus:
    report = validate(nl)
    if report:
        raise InvalidNetlist(f"{len(report)} validation finding(s), first: {report.findings[0]}")
    level = {r: 0 for r in nl.input_rails}
    for c in nl.constants:
        level[c] = 0
    for gid in nl.topo_order():
        g = nl.gates[gid]
        level[g.output] = 1 + max(level.get(i, 0) for i in g.inputs)
    depth = max((level.get(r, 0) for r in nl.output_rails), default=0)
    return GateCensus(dict(nl.census()), len(nl.nets), depth)
