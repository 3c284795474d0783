"""Deterministic event-driven gate simulation and the 4-phase environment.

Time is integer. Events are kept in per-timestamp buckets that preserve
insertion order, so the queue pops in (time, insertion sequence) order. All
events of one timestamp are committed before any gate is re-evaluated, and
each affected gate is evaluated once per timestamp in gate-id order; a gate
whose new value differs from its last scheduled value schedules an output
event ``delay`` units later (transport delay, so glitches are kept).

A net's transition is delivered to every fanout pin at the same timestamp:
forks are isochronic by construction.
"""

from __future__ import annotations

import heapq
import json
import random
import statistics
from dataclasses import dataclass, field
from typing import IO, Iterable, Mapping, Sequence

from qdilab.encoding import (
    Code,
    Protocol,
    Vector,
    WordStatus,
    classify_pair,
    decode_word,
    encode_bit,
    word_from_rails,
)
from qdilab.netlist import GateKind, Netlist


class SimulationError(RuntimeError):
    pass


class NonQuiescence(SimulationError):
    pass


class OutputIllegal(SimulationError):
    pass


class OutputIncomplete(SimulationError):
    pass


DEFAULT_PER_KIND = {
    GateKind.NOT: 1,
    GateKind.AND2: 2, GateKind.OR2: 2,
    GateKind.AND3: 2, GateKind.OR3: 2,
    GateKind.AND4: 3, GateKind.OR4: 3,
    GateKind.C2: 3, GateKind.C3: 4,
}


@dataclass(frozen=True)
class DelayModel:
    mode: str = "UNIT"
    table: Mapping[GateKind, int] = field(default_factory=dict)

    def __post_init__(self):
        if self.mode not in ("UNIT", "PER_KIND"):
            raise ValueError(f"unknown delay mode {self.mode!r}")
        if self.mode == "PER_KIND":
            missing = set(GateKind) - set(self.table)
            if missing:
                raise ValueError(f"delay table lacks {sorted(k.value for k in missing)}")
            if any(d < 1 for d in self.table.values()):
                raise ValueError("all gate delays must be >= 1")

    @classmethod
    def unit(cls) -> "DelayModel":
        return cls("UNIT")

    @classmethod
    def per_kind(cls, table: Mapping[GateKind, int] | None = None) -> "DelayModel":
        return cls("PER_KIND", dict(table or DEFAULT_PER_KIND))

    def delay(self, kind: GateKind) -> int:
        return 1 if self.mode == "UNIT" else self.table[kind]

    def describe(self) -> str:
        if self.mode == "UNIT":
            return "unit"
        return "per_kind:" + ",".join(f"{k.value}={v}" for k, v in
                                      sorted(self.table.items(), key=lambda kv: kv[0].value))

    @classmethod
    def parse(cls, text: str) -> "DelayModel":
        text = text.strip()
        if text.lower() == "unit":
            return cls.unit()
        if text.lower() == "per_kind":
            return cls.per_kind()
        if text.lower().startswith("per_kind:"):
            table = dict(DEFAULT_PER_KIND)
            for item in text.split(":", 1)[1].split(","):
                k, v = item.split("=")
                table[GateKind(k.strip().upper())] = int(v)
            return cls.per_kind(table)
        raise ValueError(f"bad delay model {text!r}")


UNIT = DelayModel.unit()

_NOT, _AND, _OR, _C = range(4)


def _kernel_available() -> bool:
    try:
        import qdilab._kernel  # noqa: F401
    except ImportError:
        return False
    return True
_FAMILY_CODE = {"NOT": _NOT, "AND": _AND, "OR": _OR, "C": _C}


@dataclass(frozen=True)
class PhaseMarks:
    data_applied: int
    data_settled: int
    spacer_applied: int
    spacer_settled: int


@dataclass
class HandshakeTrace:
    """One data + spacer cycle. Times are relative to data application."""
    protocol: Protocol
    transitions: list[tuple[int, int, int]]
    split: int                     # transitions[:split] belong to the data phase
    marks: PhaseMarks
    fl: int | None
    rl: int | None
    fl_cd: int | None = None       # output completion detector fired
    rl_cd: int | None = None
    outputs: "int | WordStatus | None" = None
    vector: Vector | None = None
    count: int | None = None       # set when transitions were dropped

    @property
    def ct(self) -> int | None:
        if self.fl is None or self.rl is None:
            return None
        return self.fl + self.rl

    @property
    def data_phase(self) -> list[tuple[int, int, int]]:
        return self.transitions[:self.split]

    @property
    def spacer_phase(self) -> list[tuple[int, int, int]]:
        return self.transitions[self.split:]

    @property
    def transition_count(self) -> int:
        return len(self.transitions) if self.count is None else self.count

    def to_dict(self, netlist: Netlist | None = None, with_transitions: bool = True) -> dict:
        d = {
            "protocol": self.protocol.name,
            "fl": self.fl, "rl": self.rl, "ct": self.ct,
            "fl_cd": self.fl_cd, "rl_cd": self.rl_cd,
            "marks": vars(self.marks),
            "outputs": self.outputs if isinstance(self.outputs, int) or self.outputs is None
            else self.outputs.value,
            "transition_count": self.transition_count,
        }
        if self.vector is not None:
            d["vector"] = {"a": f"{self.vector.a:x}", "b": f"{self.vector.b:x}",
                           "cin": self.vector.cin}
        if with_transitions:
            name = (lambda n: netlist.net_name(n)) if netlist else (lambda n: n)
            d["split"] = self.split
            d["transitions"] = [[t, name(n), v] for t, n, v in self.transitions]
        return d


class Simulator:
    """Event-driven simulator bound to one netlist; state persists across cycles."""

    def __init__(self, netlist: Netlist, delay_model: DelayModel = UNIT,
                 max_transitions: int | None = None, engine: str = "auto"):
        self.netlist = netlist
        self.delay_model = delay_model
        self.protocol = netlist.protocol
        n = len(netlist.nets)
        self.max_transitions = max_transitions if max_transitions is not None else 10 * n
        self._kind = [_FAMILY_CODE[g.kind.family] for g in netlist.gates]
        self._ins = [g.inputs for g in netlist.gates]
        self._out = [g.output for g in netlist.gates]
        self._delay = [delay_model.delay(g.kind) for g in netlist.gates]
        fan: list[list[int]] = [[] for _ in range(n)]
        for g in netlist.gates:
            for nid in set(g.inputs):
                fan[nid].append(g.id)
        self._fanout = [tuple(sorted(f)) for f in fan]
        self._topo = netlist.topo_order()
        self._out_rails = tuple(netlist.output_rails)
        self._out_index = {r: i for i, r in enumerate(self._out_rails)}
        if engine == "auto":
            engine = "numba" if _kernel_available() else "python"
        if engine not in ("python", "numba"):
            raise ValueError(f"unknown engine {engine!r}")
        if engine == "numba" and not _kernel_available():
            raise ValueError("numba engine requested but numba is not importable")
        self.engine = engine
        if engine == "numba":
            self._compile_arrays()
        self.reset()

    def _compile_arrays(self) -> None:
        import numpy as np
        i32 = np.int32
        self._a_kind = np.array(self._kind, np.int8) if self._kind else np.zeros(0, np.int8)
        self._a_in_ptr = np.zeros(len(self._ins) + 1, i32)
        self._a_in_ptr[1:] = np.cumsum([len(x) for x in self._ins]) if self._ins else []
        self._a_in_idx = np.array([i for x in self._ins for i in x], i32)
        self._a_out = np.array(self._out, i32)
        self._a_delay = np.array(self._delay, i32)
        self._a_fo_ptr = np.zeros(len(self._fanout) + 1, i32)
        self._a_fo_ptr[1:] = np.cumsum([len(f) for f in self._fanout])
        self._a_fo_idx = np.array([g for f in self._fanout for g in f], i32)
        width = max(self._delay, default=1) + 1
        n = len(self._fanout)
        self._wheel_net = np.zeros((width, n), i32)
        self._wheel_val = np.zeros((width, n), np.int8)
        self._wheel_len = np.zeros(width, np.int64)
        cap = self.max_transitions + 1
        self._log_t = np.zeros(cap, np.int64)
        self._log_n = np.zeros(cap, i32)
        self._log_v = np.zeros(cap, np.int8)

    # -- state ------------------------------------------------------------

    def reset(self) -> None:
        """Put every net in the steady state reached from an all-spacer input."""
        s = self.protocol.spacer_level
        vals = [s] * len(self.netlist.nets)
        for nid, v in self.netlist.constants.items():
            vals[nid] = v
        for gid in self._topo:
            vals[self._out[gid]] = self._eval(gid, vals, vals[self._out[gid]])
        if self.engine == "numba":
            import numpy as np
            self.values = np.array(vals, np.int8)
            self._proj = self.values.copy()
        else:
            self.values = vals
            self._proj = list(vals)
        self._pending: list[tuple[int, int]] = []
        self.time = 0
        self.log: list[tuple[int, int, int]] = []

    def _eval(self, gid: int, vals: list[int], prev: int) -> int:
        kind = self._kind[gid]
        ins = self._ins[gid]
        if kind == _AND:
            return int(all(vals[i] for i in ins))
        if kind == _OR:
            return int(any(vals[i] for i in ins))
        if kind == _NOT:
            return 1 - vals[ins[0]]
        if all(vals[i] for i in ins):
            return 1
        if not any(vals[i] for i in ins):
            return 0
        return prev

    def snapshot(self) -> list[int]:
        return [int(v) for v in self.values]

    def quiescent(self) -> bool:
        return not self._pending

    def apply(self, assignment: Mapping[int, int]) -> None:
        """Schedule primary-input changes at the current time."""
        proj = self._proj
        if self.engine == "numba":
            # scalar access to numpy arrays is slow; work on whole vectors
            import numpy as np
            nets = np.fromiter(assignment.keys(), np.int64, len(assignment))
            vals = np.fromiter(assignment.values(), np.int8, len(assignment))
            changed = proj[nets] != vals
            nets, vals = nets[changed], vals[changed]
            proj[nets] = vals
            self._pending.extend(zip(nets.tolist(), vals.tolist()))
            return
        for nid, v in assignment.items():
            if proj[nid] != v:
                proj[nid] = v
                self._pending.append((nid, v))

    def settle(self) -> int:
        """Run to quiescence; returns the time of the last transition."""
        if self.engine == "numba":
            return self._settle_numba()
        return self._settle_python()

    def _settle_numba(self) -> int:
        from qdilab._kernel import OVERFLOW, settle_kernel
        t0 = self.time
        slot = t0 % self._wheel_len.shape[0]
        for i, (nid, v) in enumerate(self._pending):
            self._wheel_net[slot, i] = nid
            self._wheel_val[slot, i] = v
        self._wheel_len[slot] = len(self._pending)
        self._pending = []
        status, count, last = settle_kernel(
            self._a_kind, self._a_in_ptr, self._a_in_idx, self._a_out, self._a_delay,
            self._a_fo_ptr, self._a_fo_idx, self.values, self._proj,
            self._wheel_net, self._wheel_val, self._wheel_len, t0,
            self._log_t, self._log_n, self._log_v, self.max_transitions)
        if status == OVERFLOW:
            self._wheel_len[:] = 0
            raise NonQuiescence(f"more than {self.max_transitions} transitions in one phase")
        self.log.extend(zip(self._log_t[:count].tolist(), self._log_n[:count].tolist(),
                            self._log_v[:count].tolist()))
        self.time = int(last)
        return self.time

    def _settle_python(self) -> int:
        vals, proj = self.values, self._proj
        kinds, ins_of, out_of, delay = self._kind, self._ins, self._out, self._delay
        fanout, log = self._fanout, self.log
        heappop, heappush = heapq.heappop, heapq.heappush
        buckets: dict[int, list[tuple[int, int]]] = {}
        times: list[int] = []
        if self._pending:
            buckets[self.time] = self._pending
            times.append(self.time)
            self._pending = []
        budget = self.max_transitions
        last = self.time
        count = 0
        while times:
            t = heappop(times)
            batch = buckets.pop(t)
            touched = set()
            for nid, v in batch:
                if vals[nid] != v:
                    vals[nid] = v
                    log.append((t, nid, v))
                    touched.update(fanout[nid])
                    count += 1
                    last = t
            if count > budget:
                raise NonQuiescence(f"more than {budget} transitions in one phase")
            if not touched:
                continue
            for gid in sorted(touched):
                kind = kinds[gid]
                ins = ins_of[gid]
                out = out_of[gid]
                if kind == _AND:
                    v = 1
                    for i in ins:
                        if not vals[i]:
                            v = 0
                            break
                elif kind == _OR:
                    v = 0
                    for i in ins:
                        if vals[i]:
                            v = 1
                            break
                elif kind == _C:
                    first = vals[ins[0]]
                    v = first
                    for i in ins:
                        if vals[i] != first:
                            v = proj[out]
                            break
                else:
                    v = 1 - vals[ins[0]]
                if v != proj[out]:
                    proj[out] = v
                    tt = t + delay[gid]
                    bucket = buckets.get(tt)
                    if bucket is None:
                        buckets[tt] = [(out, v)]
                        heappush(times, tt)
                    else:
                        bucket.append((out, v))
        self.time = last
        return last

    # -- handshake environment ---------------------------------------------

    def run_handshake(self, bits: Sequence[int], *, ack_delay: int = 0,
                      strict: bool = True, vector: Vector | None = None) -> HandshakeTrace:
        """One full 4-phase cycle with ``bits`` (one per input port) as data.

        Both phases run to full quiescence. ``fl`` / ``rl`` are measured on the
        primary outputs; the output completion detector times are kept
        separately in ``fl_cd`` / ``rl_cd``.
        """
        nl = self.netlist
        if len(bits) != len(nl.inputs):
            raise ValueError(f"expected {len(nl.inputs)} input bits, got {len(bits)}")
        if not self.quiescent():
            raise SimulationError("circuit is not quiescent")
        p = self.protocol
        self.time = 0
        self.log = []
        out_rails = self._out_rails
        values = self.values
        start_levels = [int(values[r]) for r in out_rails]
        data = {}
        flip = p is Protocol.RTO
        for port, bit in zip(nl.inputs, bits):
            if bit not in (0, 1):
                raise ValueError(f"input bit must be 0 or 1, got {bit!r}")
            bit ^= flip
            data[port.rail1] = bit
            data[port.rail0] = 1 - bit
        self.apply(data)
        data_settled = self.settle()
        split = len(self.log)
        data_levels = [int(values[r]) for r in out_rails]
        out_value = _decode_levels(data_levels, p)

        spacer_applied = data_settled + ack_delay
        self.time = spacer_applied
        s = p.spacer_level
        self.apply({r: s for r in nl.input_rails})
        spacer_settled = max(self.settle(), spacer_applied)
        final = _decode_levels([int(values[r]) for r in out_rails], p)

        log = self.log
        self.log = []
        fl = _phase_latency(nl, self._out_index, log[:split], 0, start_levels, p, strict, "data")
        rl = _phase_latency(nl, self._out_index, log[split:], spacer_applied, data_levels, p, strict, "spacer")
        if strict and not isinstance(out_value, int):
            raise OutputIncomplete(f"outputs are {out_value.value} after the data phase")
        if strict and final is not WordStatus.SPACER:
            raise OutputIncomplete(f"outputs are {getattr(final, 'value', final)} after the spacer phase")
        cd = nl.acks.get("cd_out")
        fl_cd = rl_cd = None
        if cd is not None:
            fl_cd = _last_time(log[:split], cd, 0)
            rl_cd = _last_time(log[split:], cd, spacer_applied)
        return HandshakeTrace(p, log, split,
                              PhaseMarks(0, data_settled, spacer_applied, spacer_settled),
                              fl, rl, fl_cd, rl_cd, out_value, vector)

    def run_cycle(self, a: int, b: int, cin: int, *, ack_delay: int = 0,
                  strict: bool = True) -> HandshakeTrace:
        w = adder_width(self.netlist)
        if not (0 <= a < 1 << w and 0 <= b < 1 << w and cin in (0, 1)):
            raise ValueError(f"operands ({a}, {b}, {cin}) out of range for width {w}")
        bits = [(a >> i) & 1 for i in range(w)] + [(b >> i) & 1 for i in range(w)] + [cin]
        return self.run_handshake(bits, ack_delay=ack_delay, strict=strict,
                                  vector=Vector(a, b, cin))


def adder_width(nl: Netlist) -> int:
    n = len(nl.inputs)
    if n < 3 or n % 2 == 0 or len(nl.outputs) != (n - 1) // 2 + 1:
        raise ValueError(f"{nl.name!r} does not have the a[w], b[w], cin -> sum[w], cout shape")
    return (n - 1) // 2


def _decode_levels(levels: list[int], protocol: Protocol) -> "int | WordStatus":
    """Fast path of ``decode_word`` for a flat rail list."""
    s = protocol.spacer_level
    value = 0
    spacers = illegal = 0
    for i in range(0, len(levels), 2):
        r1, r0 = levels[i], levels[i + 1]
        if r1 == r0:
            if r1 == s:
                spacers += 1
            else:
                illegal += 1
        elif r1 != s:
            value |= 1 << (i >> 1)
    if illegal:
        return WordStatus.ILLEGAL
    if spacers == len(levels) // 2:
        return WordStatus.SPACER
    if spacers:
        return WordStatus.PARTIAL
    return value


def _last_time(phase, net, start):
    for t, n, _ in reversed(phase):
        if n == net:
            return t - start
    return None


def _phase_latency(nl, idx, phase, start, levels, protocol, strict, label):
    """Time (from ``start``) of the last output-rail transition, checking
    that no output pair is illegal at any timestamp boundary."""
    events = [(t, idx[n], v) for t, n, v in phase if n in idx]
    if not events:
        if strict:
            raise OutputIncomplete(f"no output transition during the {label} phase")
        return None
    bad = protocol.active_level
    vals = list(levels)
    i = 0
    while i < len(events):
        t = events[i][0]
        changed = []
        while i < len(events) and events[i][0] == t:
            vals[events[i][1]] = events[i][2]
            changed.append(events[i][1] & ~1)
            i += 1
        for k in changed:
            # both rails active is the illegal code under either protocol
            if vals[k] == bad and vals[k + 1] == bad:
                raise OutputIllegal(f"output {nl.outputs[k // 2].name} illegal at t={t}")
    return events[-1][0] - start


def run_cycle(netlist: Netlist, a: int, b: int, cin: int,
              delay_model: DelayModel = UNIT, **kw) -> HandshakeTrace:
    return Simulator(netlist, delay_model).run_cycle(a, b, cin, **kw)


@dataclass
class SequenceResult:
    traces: list[HandshakeTrace]
    stats: dict[str, float]


def aggregate(traces: Sequence[HandshakeTrace]) -> dict[str, float]:
    if not traces:
        return {k: 0 for k in ("count", "fl_max", "fl_mean", "rl_max", "rl_mean",
                               "ct_max", "ct_mean", "transitions")}
    fl = [t.fl for t in traces]
    rl = [t.rl for t in traces]
    ct = [t.ct for t in traces]
    return {
        "count": len(traces),
        "fl_max": max(fl), "fl_mean": statistics.fmean(fl),
        "rl_max": max(rl), "rl_mean": statistics.fmean(rl),
        "ct_max": max(ct), "ct_mean": statistics.fmean(ct),
        "transitions": sum(t.transition_count for t in traces),
    }


def run_sequence(netlist: Netlist, vectors: Iterable[Vector], delay_model: DelayModel = UNIT,
                 *, ack_delay: int = 0, keep_transitions: bool = True) -> SequenceResult:
    sim = Simulator(netlist, delay_model)
    traces = []
    for v in vectors:
        tr = sim.run_cycle(*v, ack_delay=ack_delay)
        if not keep_transitions:
            tr = _strip(tr)
        traces.append(tr)
    return SequenceResult(traces, aggregate(traces))


def _strip(tr: HandshakeTrace) -> HandshakeTrace:
    # keep the count for the power proxy without holding every event
    return HandshakeTrace(tr.protocol, [], 0, tr.marks, tr.fl, tr.rl, tr.fl_cd, tr.rl_cd,
                          tr.outputs, tr.vector, tr.transition_count)


def random_vectors(width: int, count: int, seed: int) -> list[Vector]:
    """Uniform operands and carry-in from an explicitly seeded generator."""
    rng = random.Random(seed)
    return [Vector(rng.getrandbits(width), rng.getrandbits(width), rng.getrandbits(1))
            for _ in range(count)]


def all_propagate_vector(width: int) -> Vector:
    """Every bit propagates and a carry enters at bit 0."""
    return Vector((1 << width) - 1, 0, 1)


# ---------------------------------------------------------------------------
# Export
# ---------------------------------------------------------------------------

def write_jsonl(traces: Iterable[HandshakeTrace], fh: IO[str],
                netlist: Netlist | None = None, with_transitions: bool = True) -> None:
    for i, tr in enumerate(traces):
        d = {"index": i}
        d.update(tr.to_dict(netlist, with_transitions))
        fh.write(json.dumps(d) + "\n")


def write_vcd(trace: HandshakeTrace, netlist: Netlist, fh: IO[str],
              nets: Sequence[int] | None = None, timescale: str = "1 ns") -> None:
    """Value-change dump of one cycle (initial values are the spacer state)."""
    if nets is None:
        nets = list(netlist.input_rails) + list(netlist.output_rails) + list(netlist.acks.values())
    ids = {n: _vcd_id(i) for i, n in enumerate(nets)}
    fh.write(f"$timescale {timescale} $end\n$scope module {netlist.name or 'top'} $end\n")
    for n in nets:
        fh.write(f"$var wire 1 {ids[n]} {netlist.net_name(n).replace(' ', '_')} $end\n")
    fh.write("$upscope $end\n$enddefinitions $end\n")
    # reconstruct starting levels from each net's first transition
    first: dict[int, int] = {}
    for _, n, v in trace.transitions:
        first.setdefault(n, 1 - v)
    init = Simulator(netlist).values
    fh.write("#0\n$dumpvars\n")
    for n in nets:
        fh.write(f"{first.get(n, init[n])}{ids[n]}\n")
    fh.write("$end\n")
    current = None
    for t, n, v in trace.transitions:
        if n not in ids:
            continue
        if t != current:
            fh.write(f"#{t}\n")
            current = t
        fh.write(f"{v}{ids[n]}\n")


def _vcd_id(i: int) -> str:
    chars = [chr(c) for c in range(33, 127)]
    out = ""
    i += 1
    while i:
        i, r = divmod(i - 1, len(chars))
        out = chars[r] + out
    return out
