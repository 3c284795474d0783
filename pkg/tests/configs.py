"""Adder configurations shared by several test modules."""

from qdilab.adders import AdderSpec, Architecture
from qdilab.encoding import Protocol
from qdilab.logiclib import FullAdderFlavor


def all_specs(width: int, protocol=Protocol.RTZ) -> list[AdderSpec]:
    specs = [AdderSpec(Architecture.RCA_SBFA, width, protocol, f) for f in FullAdderFlavor]
    specs += [AdderSpec(a, width, protocol) for a in
              (Architecture.RCA_DBFA, Architecture.HYBRID_RCA, Architecture.CSLA,
               Architecture.CCLA, Architecture.BCLA, Architecture.BCLARC)]
    specs += [AdderSpec(Architecture.HYBRID_BCLARC_RCA, width, protocol, lsb_rca_width=lsb)
              for lsb in range(0, min(width, 16), 4)]
    return specs


def spec_id(spec: AdderSpec) -> str:
    return spec.label
