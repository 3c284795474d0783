"""Generate, simulate and check quasi-delay-insensitive dual-rail adders."""

from qdilab.adders import AdderSpec, Architecture, dualize, generate
from qdilab.encoding import Protocol
from qdilab.logiclib import FullAdderFlavor
from qdilab.netlist import Netlist
from qdilab.sim import DelayModel, Simulator, run_cycle, run_sequence

__all__ = [
    "AdderSpec", "Architecture", "DelayModel", "FullAdderFlavor", "Netlist",
    "Protocol", "Simulator", "dualize", "generate", "run_cycle", "run_sequence",
]
__version__ = "0.1.0"
