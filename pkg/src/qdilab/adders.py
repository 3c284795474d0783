"""Architecture-level adder generators and the RTZ/RTO dual transform.

Every generated adder has inputs ``a0..a{w-1}, b0..b{w-1}, cin`` and
outputs ``sum0..sum{w-1}, cout``. Unless ``with_completion=False``, an input
completion detector (ack ``cd_in``) over all inputs and an output completion
detector (ack ``cd_out``) over all outputs are attached.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import Sequence

from qdilab.encoding import Protocol
from qdilab.logiclib import (
    FullAdderFlavor,
    emit_bclg_carry,
    emit_bit_signals,
    emit_block_gkp,
    emit_ccla_block,
    emit_completion_detector,
    emit_dbfa,
    emit_early_carry,
    emit_early_sum,
    emit_full_adder,
    emit_mux2,
    emit_redundant_carry,
    tie_port,
)
from qdilab.netlist import Netlist, Port


class SpecInvalid(ValueError):
    pass


class AlreadyRTO(ValueError):
    pass


class Architecture(enum.Enum):
    RCA_SBFA = "RCA_SBFA"
    RCA_DBFA = "RCA_DBFA"
    HYBRID_RCA = "HYBRID_RCA"
    CSLA = "CSLA"
    CCLA = "CCLA"
    BCLA = "BCLA"
    BCLARC = "BCLARC"
    HYBRID_BCLARC_RCA = "HYBRID_BCLARC_RCA"

    @classmethod
    def parse(cls, text: "str | Architecture") -> "Architecture":
        if isinstance(text, Architecture):
            return text
        key = str(text).upper().replace("-", "_")
        return _ARCH_ALIASES.get(key) or cls(key)


_ARCH_ALIASES = {
    "RCA": Architecture.RCA_SBFA,
    "DBFA": Architecture.RCA_DBFA,
    "HYBRID": Architecture.HYBRID_RCA,
    "HYBRID_BCLARC": Architecture.HYBRID_BCLARC_RCA,
}

BLOCK = 4
_BLOCK_ARCHS = {Architecture.CCLA, Architecture.BCLA, Architecture.BCLARC,
                Architecture.HYBRID_BCLARC_RCA}


@dataclass(frozen=True)
class AdderSpec:
    architecture: Architecture
    width: int = 32
    protocol: Protocol = Protocol.RTZ
    fa_flavor: FullAdderFlavor = FullAdderFlavor.EARLY
    partition: tuple[int, ...] = field(default=())
    lsb_rca_width: int = 0

    def __post_init__(self):
        object.__setattr__(self, "architecture", Architecture.parse(self.architecture))
        object.__setattr__(self, "protocol", Protocol.parse(self.protocol))
        object.__setattr__(self, "fa_flavor", FullAdderFlavor.parse(self.fa_flavor))
        object.__setattr__(self, "partition", tuple(int(p) for p in self.partition))

    def check(self) -> None:
        """Raise SpecInvalid naming the first violated invariant."""
        w, arch = self.width, self.architecture
        if w < 2:
            raise SpecInvalid(f"width must be >= 2, got {w}")
        if arch in _BLOCK_ARCHS and w % BLOCK:
            raise SpecInvalid(f"{arch.value} requires width divisible by {BLOCK}, got {w}")
        if arch in (Architecture.RCA_DBFA, Architecture.HYBRID_RCA) and w % 2:
            raise SpecInvalid(f"{arch.value} requires an even width, got {w}")
        if arch is Architecture.CSLA:
            part = self.partition or self.default_partition()
            if sum(part) != w:
                raise SpecInvalid(f"partition {part} sums to {sum(part)}, not width {w}")
            if any(p < 1 for p in part):
                raise SpecInvalid(f"partition entries must be >= 1: {part}")
        elif self.partition:
            raise SpecInvalid("partition only applies to CSLA")
        if arch is Architecture.HYBRID_BCLARC_RCA:
            lsb = self.lsb_rca_width
            if lsb < 0 or lsb % BLOCK or lsb >= w:
                raise SpecInvalid(f"lsb_rca_width must be a multiple of {BLOCK} below the "
                                  f"width, got {lsb}")
        elif self.lsb_rca_width:
            raise SpecInvalid("lsb_rca_width only applies to HYBRID_BCLARC_RCA")

    def default_partition(self) -> tuple[int, ...]:
        if self.width % 4 == 0:
            return (self.width // 4,) * 4
        return (self.width,)

    @property
    def label(self) -> str:
        arch = self.architecture
        if arch is Architecture.RCA_SBFA:
            tag = f"{arch.value}-{self.fa_flavor.value}"
        elif arch is Architecture.CSLA:
            tag = f"CSLA-{'-'.join(map(str, self.partition or self.default_partition()))}"
        elif arch is Architecture.HYBRID_BCLARC_RCA:
            tag = f"{arch.value}-{self.lsb_rca_width}"
        else:
            tag = arch.value
        return f"{tag}/w{self.width}/{self.protocol.name}"

    def with_protocol(self, protocol: Protocol) -> "AdderSpec":
        return replace(self, protocol=Protocol.parse(protocol))


def dualize(nl: Netlist, to: Protocol | None = None) -> Netlist:
    """Return the gate-for-gate dual (AND<->OR, C and NOT kept, ties flipped).

    With ``to`` given, the source must be of the opposite protocol; asking for
    RTO from an RTO netlist raises AlreadyRTO.
    """
    if to is not None:
        to = Protocol.parse(to)
        if nl.protocol is to:
            if to is Protocol.RTO:
                raise AlreadyRTO(f"netlist {nl.name!r} is already RTO")
            raise ValueError(f"netlist {nl.name!r} is already {to.name}")
    return nl.dual()


# ---------------------------------------------------------------------------
# Datapath emitters (RTZ)
# ---------------------------------------------------------------------------

def _rca(nl: Netlist, flavor: FullAdderFlavor, a: Sequence[Port], b: Sequence[Port],
         c: Port, name: str) -> tuple[list[Port], Port]:
    sums = []
    for i in range(len(a)):
        s, c = emit_full_adder(nl, flavor, a[i], b[i], c, f"{name}/fa{i}")
        sums.append(s)
    return sums, c


def _dbfa_chain(nl, a, b, c, name, start=0):
    sums = []
    for i in range(start, len(a), 2):
        s, c = emit_dbfa(nl, a[i:i + 2], b[i:i + 2], c, f"{name}/dbfa{i // 2}")
        sums.extend(s)
    return sums, c


def _csla(nl, a, b, c, partition, extra_sinks):
    sums = []
    lo = 0
    for j, size in enumerate(partition):
        hi = lo + size
        seg_a, seg_b = a[lo:hi], b[lo:hi]
        if j == 0:
            nl.add_instance(f"seg0/rca", f"RCA{size}")
            seg_sums, c = _rca(nl, FullAdderFlavor.EARLY, seg_a, seg_b, c, "seg0/rca")
            sums.extend(seg_sums)
        else:
            outs = []
            for v in (0, 1):
                tie = tie_port(nl, v, f"seg{j}/cin{v}")
                nl.add_instance(f"seg{j}/rca{v}", f"RCA{size}")
                s, co = _rca(nl, FullAdderFlavor.EARLY, seg_a, seg_b, tie, f"seg{j}/rca{v}")
                outs.append(s + [co])
                extra_sinks.extend(s + [co])
            nl.add_instance(f"seg{j}/mux", "MUXBANK")
            muxed = [emit_mux2(nl, c, x, y, f"seg{j}/mux{i}")
                     for i, (x, y) in enumerate(zip(outs[0], outs[1]))]
            sums.extend(muxed[:-1])
            c = muxed[-1]
        lo = hi
    return sums, c


def _block_sums(nl, bits, c, name):
    """Early sum logic of one block on internally rippled carries."""
    sums = []
    for i, bt in enumerate(bits):
        sums.append(emit_early_sum(nl, bt.p, bt.e, c, f"{name}/s{i}"))
        if i < len(bits) - 1:
            c = emit_early_carry(nl, bt, c, f"{name}/c{i + 1}")
    return sums


def _bcla(nl, a, b, c, redundant, name):
    nblocks = len(a) // BLOCK
    blocks, block_bits = [], []
    for k in range(nblocks):
        lo = k * BLOCK
        nl.add_instance(f"{name}/blk{k}", "BCLA4")
        bits = [emit_bit_signals(nl, a[lo + i], b[lo + i], f"{name}/blk{k}/bit{i}")
                for i in range(BLOCK)]
        block_bits.append(bits)
        blocks.append(emit_block_gkp(nl, bits, f"{name}/blk{k}"))
    carries = [c]
    for k in range(nblocks):
        cname = f"{name}/cg{k + 1}"
        if redundant and k >= 1:
            nl.add_instance(cname, "BCLGRC")
            nxt = emit_redundant_carry(nl, blocks[k], blocks[k - 1], carries[k - 1], cname)
        else:
            nl.add_instance(cname, "BCLG")
            nxt = emit_bclg_carry(nl, blocks[k], carries[k], cname)
        carries.append(nxt)
    sums = []
    for k in range(nblocks):
        sums.extend(_block_sums(nl, block_bits[k], carries[k], f"{name}/blk{k}"))
    return sums, carries[-1]


def _ccla(nl, a, b, c, name):
    sums = []
    for k in range(len(a) // BLOCK):
        lo = k * BLOCK
        s, c = emit_ccla_block(nl, a[lo:lo + BLOCK], b[lo:lo + BLOCK], c, f"{name}/blk{k}")
        sums.extend(s)
    return sums, c


def generate(spec: AdderSpec, with_completion: bool = True) -> Netlist:
    spec.check()
    w, arch = spec.width, spec.architecture
    nl = Netlist(Protocol.RTZ, spec.label)
    a = [nl.add_input(f"a{i}") for i in range(w)]
    b = [nl.add_input(f"b{i}") for i in range(w)]
    cin = nl.add_input("cin")
    extra_sinks: list[Port] = []

    if arch is Architecture.RCA_SBFA:
        sums, cout = _rca(nl, spec.fa_flavor, a, b, cin, "rca")
    elif arch is Architecture.RCA_DBFA:
        sums, cout = _dbfa_chain(nl, a, b, cin, "rca")
    elif arch is Architecture.HYBRID_RCA:
        sums, c = _rca(nl, FullAdderFlavor.EARLY, a[:2], b[:2], cin, "lsb")
        hs, cout = _dbfa_chain(nl, a, b, c, "rca", start=2)
        sums += hs
    elif arch is Architecture.CSLA:
        sums, cout = _csla(nl, a, b, cin, spec.partition or spec.default_partition(),
                           extra_sinks)
    elif arch is Architecture.CCLA:
        sums, cout = _ccla(nl, a, b, cin, "ccla")
    elif arch in (Architecture.BCLA, Architecture.BCLARC):
        sums, cout = _bcla(nl, a, b, cin, arch is Architecture.BCLARC, arch.value.lower())
    elif arch is Architecture.HYBRID_BCLARC_RCA:
        lsb = spec.lsb_rca_width
        sums, c = [], cin
        if lsb:
            nl.add_instance("lsb", f"RCA{lsb}")
            sums, c = _rca(nl, FullAdderFlavor.EARLY, a[:lsb], b[:lsb], cin, "lsb")
        hs, cout = _bcla(nl, a[lsb:], b[lsb:], c, True, "bclarc")
        sums += hs
    else:  # pragma: no cover
        raise SpecInvalid(f"unhandled architecture {arch}")

    for i, s in enumerate(sums):
        nl.add_output(f"sum{i}", s.rail1, s.rail0)
    nl.add_output("cout", cout.rail1, cout.rail0)

    if with_completion:
        nl.set_ack("cd_in", emit_completion_detector(nl, nl.inputs, "cd_in"))
        # conditional CSLA results are folded into the output detector so the
        # unselected segment is still acknowledged
        nl.set_ack("cd_out", emit_completion_detector(nl, nl.outputs + extra_sinks, "cd_out"))

    if spec.protocol is Protocol.RTO:
        nl = dualize(nl, Protocol.RTO)
        nl.name = spec.label
    return nl
