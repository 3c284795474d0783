"""QDI safety analyses over netlists and simulated handshake traces."""

from __future__ import annotations

import enum
import itertools
import random
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from qdilab.encoding import DualRailWord, Protocol
from qdilab.netlist import Netlist
from qdilab.sim import UNIT, DelayModel, HandshakeTrace, Simulator


class ViolationKind(enum.Enum):
    MONOTONICITY = "MONOTONICITY"
    ORPHAN = "ORPHAN"
    DSOP_OVERLAP = "DSOP_OVERLAP"
    ILLEGAL_CODE = "ILLEGAL_CODE"
    NON_RESTORING = "NON_RESTORING"


@dataclass(frozen=True)
class Violation:
    kind: ViolationKind
    location: tuple
    detail: str
    time: int | None = None

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "location": list(self.location),
                "time": self.time, "detail": self.detail}


class Indication(enum.Enum):
    STRONG = "STRONG"
    WEAK = "WEAK"
    EARLY = "EARLY"


# ---------------------------------------------------------------------------
# Trace checks
# ---------------------------------------------------------------------------

def check_monotonic(trace: HandshakeTrace, protocol: Protocol | None = None,
                    netlist: Netlist | None = None) -> list[Violation]:
    """Each net moves at most once per phase, toward active in the data
    phase and toward spacer in the spacer phase."""
    protocol = protocol or trace.protocol
    name = netlist.net_name if netlist else str
    out = []
    for phase, want in (("data", protocol.active_level), ("spacer", protocol.spacer_level)):
        events = trace.data_phase if phase == "data" else trace.spacer_phase
        seen: Counter = Counter()
        for t, n, v in events:
            seen[n] += 1
            if seen[n] == 2:
                out.append(Violation(ViolationKind.MONOTONICITY, (n,),
                                     f"{name(n)} switches more than once in the {phase} phase", t))
            if v != want:
                out.append(Violation(ViolationKind.MONOTONICITY, (n,),
                                     f"{name(n)} moves {1 - v}->{v} in the {phase} phase", t))
    return out


class RoundTripChecker:
    """Restoration and orphan analysis for one netlist, reusable across traces.

    A net that switched during the cycle is acknowledged when it is a primary
    output or ack net, or drives a gate whose output also switched and is
    itself acknowledged. Each analysed net is therefore observed through a
    chain of switching nets ending at an observable point.

    With ``strict=True`` every individual transition must additionally be
    followed, no earlier than the gate delay, by a transition on some fanout
    gate output in the same phase. This per-transition reading flags
    late-arriving inputs to OR gates (for example the weak majority carry).
    """

    def __init__(self, netlist: Netlist, delay_model: DelayModel = UNIT):
        self.netlist = netlist
        self.delay_model = delay_model
        topo = netlist.topo_order()
        rank = {}
        for r, gid in enumerate(topo):
            rank[netlist.gates[gid].output] = r + 1
        self._rank = [rank.get(n, 0) for n in range(len(netlist.nets))]
        self._sinks = set(netlist.output_rails) | set(netlist.acks.values())
        self._fanout_out = [tuple(sorted({netlist.gates[g].output for g, _ in net.fanout}))
                            for net in netlist.nets]
        self._fanout_gates = [tuple(sorted({g for g, _ in net.fanout})) for net in netlist.nets]
        self._delay = [delay_model.delay(g.kind) for g in netlist.gates]

    def check(self, trace: HandshakeTrace, strict: bool = False) -> list[Violation]:
        nl = self.netlist
        out = []
        counts = Counter(n for _, n, _ in trace.transitions)
        for n, c in sorted(counts.items()):
            if c % 2:
                out.append(Violation(ViolationKind.NON_RESTORING, (n,),
                                     f"{nl.net_name(n)} does not return to its spacer value"))
        switched = set(counts)
        acked = set()
        rank, sinks, fo = self._rank, self._sinks, self._fanout_out
        for n in sorted(switched, key=rank.__getitem__, reverse=True):
            if n in sinks or any(m in acked for m in fo[n]):
                acked.add(n)
            else:
                out.append(Violation(ViolationKind.ORPHAN, (n,),
                                     f"transition on {nl.net_name(n)} is never observed"))
        if strict:
            out.extend(self._strict(trace))
        return out

    def _strict(self, trace: HandshakeTrace) -> list[Violation]:
        nl = self.netlist
        out = []
        for phase in (trace.data_phase, trace.spacer_phase):
            when = defaultdict(list)
            for t, n, _ in phase:
                when[n].append(t)
            for t, n, _ in phase:
                if n in self._sinks:
                    continue
                if not any(u >= t + self._delay[g]
                           for g in self._fanout_gates[n]
                           for u in when.get(nl.gates[g].output, ())):
                    out.append(Violation(ViolationKind.ORPHAN, (n,),
                                         f"transition on {nl.net_name(n)} is not followed by "
                                         f"any fanout transition", t))
        return out


def check_round_trip(trace: HandshakeTrace, netlist: Netlist, strict: bool = False,
                     delay_model: DelayModel = UNIT) -> list[Violation]:
    return RoundTripChecker(netlist, delay_model).check(trace, strict)


# ---------------------------------------------------------------------------
# Static checks
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CubeList:
    """Product terms over literals partitioned into one-hot groups.

    Literals of one group are mutually exclusive (the rails of a dual-rail
    signal, or any set of signals known to be disjoint). When ``groups`` is
    empty, literals named ``<x>1`` / ``<x>0`` are grouped by ``<x>``.
    """
    cubes: tuple[frozenset[str], ...]
    groups: tuple[frozenset[str], ...] = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "cubes", tuple(frozenset(c) for c in self.cubes))
        groups = self.groups or _infer_groups(self.cubes)
        object.__setattr__(self, "groups", tuple(frozenset(g) for g in groups))

    def group_of(self) -> dict[str, int]:
        idx = {}
        for i, g in enumerate(self.groups):
            for lit in g:
                idx[lit] = i
        for c in self.cubes:
            for lit in c:
                idx.setdefault(lit, len(idx) + len(self.groups))
        return idx


def _infer_groups(cubes) -> list[set[str]]:
    by_stem = defaultdict(set)
    for c in cubes:
        for lit in c:
            stem = lit[:-1] if lit[-1:] in ("0", "1") and len(lit) > 1 else lit
            by_stem[stem.rstrip(".")].add(lit)
    return list(by_stem.values())


def cubes_overlap(x: frozenset[str], y: frozenset[str], group_of: dict[str, int]) -> bool:
    """True when some one-hot assignment makes both products true."""
    chosen: dict[int, str] = {}
    for lit in x | y:
        g = group_of[lit]
        if chosen.setdefault(g, lit) != lit:
            return False
    return True


def check_dsop(cubes: "CubeList | Iterable[Iterable[str]]") -> list[Violation]:
    if not isinstance(cubes, CubeList):
        cubes = CubeList(tuple(frozenset(c) for c in cubes))
    group_of = cubes.group_of()
    out = []
    for i, j in itertools.combinations(range(len(cubes.cubes)), 2):
        x, y = cubes.cubes[i], cubes.cubes[j]
        if cubes_overlap(x, y, group_of):
            out.append(Violation(ViolationKind.DSOP_OVERLAP, (i, j),
                                 f"{'.'.join(sorted(x))} and {'.'.join(sorted(y))} "
                                 f"are both true at {'.'.join(sorted(x | y))}"))
    return out


def extract_cover(netlist: Netlist, net: int) -> CubeList:
    """Flatten the monotone logic driving ``net`` into products of input rails.

    AND and C gates contribute conjunctions (a C-element's set function),
    OR gates disjunctions. Absorbed and infeasible products are dropped.
    """
    memo: dict[int, list[frozenset[str]]] = {}
    groups = [frozenset(netlist.net_name(r) for r in p.rails) for p in netlist.inputs]
    group_of = {lit: i for i, g in enumerate(groups) for lit in g}

    def cover(n):
        if n in memo:
            return memo[n]
        drv = netlist.nets[n].driver
        if not isinstance(drv, int):
            if n in netlist.constants:
                res = [frozenset()] if netlist.constants[n] else []
            else:
                res = [frozenset([netlist.net_name(n)])]
        else:
            g = netlist.gates[drv]
            fam = g.kind.family
            if fam == "NOT":
                raise ValueError(f"{netlist.net_name(n)} is not monotone (NOT gate)")
            subs = [cover(i) for i in g.inputs]
            if fam == "OR":
                res = [c for s in subs for c in s]
            else:
                res = [frozenset()]
                for s in subs:
                    res = [x | y for x in res for y in s
                           if _feasible(x | y, group_of)]
        res = _absorb(res)
        memo[n] = res
        return res

    return CubeList(tuple(cover(net)), tuple(groups))


def _feasible(cube, group_of):
    seen = {}
    for lit in cube:
        g = group_of.get(lit, lit)
        if seen.setdefault(g, lit) != lit:
            return False
    return True


def _absorb(cubes):
    uniq = sorted(set(cubes), key=lambda c: (len(c), sorted(c)))
    kept = []
    for c in uniq:
        if not any(k <= c for k in kept):
            kept.append(c)
    return kept


def check_code(codewords: Sequence[DualRailWord]) -> list[Violation]:
    """Unordered-code check: no codeword's active rails contain another's."""
    if not codewords:
        return []
    widths = {len(w) for w in codewords}
    if len(widths) != 1:
        raise ValueError(f"codewords have mixed widths {sorted(widths)}")
    sets = [w.active_set() for w in codewords]
    out = []
    for i, j in itertools.permutations(range(len(sets)), 2):
        if sets[i] != sets[j] and sets[i] < sets[j]:
            out.append(Violation(ViolationKind.ILLEGAL_CODE, (j, i),
                                 f"codeword {j} covers codeword {i}"))
    return out


# ---------------------------------------------------------------------------
# Indication classification
# ---------------------------------------------------------------------------

@dataclass
class IndicationReport:
    indication: Indication
    experiments: int
    # witnesses: (data bits, subset) for the first partial and first early run
    partial_witness: tuple | None = None
    early_witness: tuple | None = None


def classify_indication(netlist: Netlist, delay_model: DelayModel = UNIT,
                        exhaustive_limit: int = 6, samples: int = 256,
                        seed: int = 0) -> Indication:
    return indication_report(netlist, delay_model, exhaustive_limit, samples, seed).indication


def indication_report(netlist: Netlist, delay_model: DelayModel = UNIT,
                      exhaustive_limit: int = 6, samples: int = 256,
                      seed: int = 0) -> IndicationReport:
    """Staggered-input experiments.

    For a data value and a proper input subset S: (set) from spacer, apply
    data on S only and settle; then complete the data; (reset) apply spacer
    on S only and settle; then complete the spacer. Outputs that appear
    before all inputs are data (or vanish before all inputs are spacer) show
    that the circuit does not wait for every input. STRONG: no output moves
    in any experiment. EARLY: some experiment drives all outputs, either to
    data or back to spacer. WEAK: everything else.
    """
    sim = Simulator(netlist, delay_model, engine="python")
    n = len(netlist.inputs)
    p = netlist.protocol
    if n <= exhaustive_limit:
        values = list(itertools.product((0, 1), repeat=n))
        subsets = [s for k in range(1, n) for s in itertools.combinations(range(n), k)]
        plan = [(v, s) for v in values for s in subsets]
    else:
        rng = random.Random(seed)
        plan = []
        for _ in range(samples):
            v = tuple(rng.getrandbits(1) for _ in range(n))
            k = rng.randrange(1, n)
            plan.append((v, tuple(sorted(rng.sample(range(n), k)))))

    spacer = p.spacer_level
    out_rails = netlist.output_rails
    n_out = len(netlist.outputs)

    def data_outputs():
        vals = sim.values
        return sum(1 for i in range(0, len(out_rails), 2)
                   if vals[out_rails[i]] != vals[out_rails[i + 1]])

    def assign(ports, bits):
        d = {}
        for i in ports:
            port = netlist.inputs[i]
            b = bits[i] if p is Protocol.RTZ else 1 - bits[i]
            d[port.rail1], d[port.rail0] = b, 1 - b
        return d

    partial = early = None
    for bits, subset in plan:
        rest = [i for i in range(n) if i not in subset]
        sim.reset()
        sim.apply(assign(subset, bits))
        sim.settle()
        got = data_outputs()
        if got and partial is None:
            partial = (bits, subset, "set")
        if got == n_out and early is None:
            early = (bits, subset, "set")
        sim.apply(assign(rest, bits))
        sim.settle()
        sim.apply({r: spacer for i in subset for r in netlist.inputs[i].rails})
        sim.settle()
        remaining = data_outputs()
        if remaining < n_out and partial is None:
            partial = (bits, subset, "reset")
        if remaining == 0 and early is None:
            early = (bits, subset, "reset")
        if early is not None:
            break
    if early is not None:
        kind = Indication.EARLY
    elif partial is not None:
        kind = Indication.WEAK
    else:
        kind = Indication.STRONG
    return IndicationReport(kind, len(plan), partial, early)
