"""Dual-rail delay-insensitive codes under RTZ and RTO handshaking.

RTZ: data 1 = (1, 0), data 0 = (0, 1), spacer = (0, 0), (1, 1) illegal.
RTO is the bitwise complement: data 1 = (0, 1), data 0 = (1, 0),
spacer = (1, 1), (0, 0) illegal.

Pairs are written ``(rail1, rail0)`` throughout.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Iterator, NamedTuple


class Protocol(enum.Enum):
    RTZ = "RTZ"
    RTO = "RTO"

    @property
    def spacer_level(self) -> int:
        """Value every rail holds in the spacer state."""
        return 0 if self is Protocol.RTZ else 1

    @property
    def active_level(self) -> int:
        """Value of the rail that carries a data token."""
        return 1 - self.spacer_level

    @property
    def dual(self) -> "Protocol":
        return Protocol.RTO if self is Protocol.RTZ else Protocol.RTZ

    @classmethod
    def parse(cls, text: "str | Protocol") -> "Protocol":
        if isinstance(text, Protocol):
            return text
        return cls(str(text).upper())


class Code(enum.Enum):
    DATA0 = "DATA0"
    DATA1 = "DATA1"
    SPACER = "SPACER"
    ILLEGAL = "ILLEGAL"

    @property
    def is_data(self) -> bool:
        return self in (Code.DATA0, Code.DATA1)


class WordStatus(enum.Enum):
    DATA = "DATA"
    SPACER = "SPACER"
    PARTIAL = "PARTIAL"
    ILLEGAL = "ILLEGAL"


class RailPair(NamedTuple):
    rail1: int
    rail0: int


class EncodingError(ValueError):
    pass


def encode_bit(value: int, protocol: Protocol) -> RailPair:
    if value not in (0, 1):
        raise EncodingError(f"bit value must be 0 or 1, got {value!r}")
    if protocol is Protocol.RTZ:
        return RailPair(value, 1 - value)
    return RailPair(1 - value, value)


def spacer_pair(protocol: Protocol) -> RailPair:
    s = protocol.spacer_level
    return RailPair(s, s)


def classify_pair(pair: Iterable[int], protocol: Protocol) -> Code:
    r1, r0 = pair
    s = protocol.spacer_level
    if r1 == r0:
        return Code.SPACER if r1 == s else Code.ILLEGAL
    # exactly one rail differs from the spacer level
    return Code.DATA1 if r1 != s else Code.DATA0


def active_rails(pair: Iterable[int], protocol: Protocol) -> frozenset[int]:
    """Indices (1 for rail1, 0 for rail0) of rails at the active level."""
    r1, r0 = pair
    a = protocol.active_level
    return frozenset(i for i, r in ((1, r1), (0, r0)) if r == a)


@dataclass(frozen=True)
class DualRailWord:
    pairs: tuple[RailPair, ...]
    protocol: Protocol

    def __post_init__(self):
        object.__setattr__(self, "pairs", tuple(RailPair(*p) for p in self.pairs))

    def __len__(self):
        return len(self.pairs)

    def __iter__(self) -> Iterator[RailPair]:
        return iter(self.pairs)

    @property
    def rails(self) -> list[int]:
        return [r for p in self.pairs for r in p]

    def codes(self) -> list[Code]:
        return [classify_pair(p, self.protocol) for p in self.pairs]

    def classify(self) -> WordStatus:
        status = decode_word(self)
        return WordStatus.DATA if isinstance(status, int) else status

    def active_set(self) -> frozenset[tuple[int, int]]:
        """Active rails as ``(bit index, rail)`` tuples."""
        return frozenset((i, r) for i, p in enumerate(self.pairs)
                         for r in active_rails(p, self.protocol))


def encode_word(value: int, width: int, protocol: Protocol) -> DualRailWord:
    if width < 1:
        raise EncodingError("width must be >= 1")
    if not 0 <= value < (1 << width):
        raise EncodingError(f"{value} does not fit in {width} bits")
    return DualRailWord(tuple(encode_bit((value >> i) & 1, protocol) for i in range(width)),
                        protocol)


def spacer_word(width: int, protocol: Protocol) -> DualRailWord:
    if width < 1:
        raise EncodingError("width must be >= 1")
    return DualRailWord((spacer_pair(protocol),) * width, protocol)


def decode_word(word: DualRailWord) -> "int | WordStatus":
    """Integer value if every pair carries data, else SPACER / PARTIAL / ILLEGAL."""
    codes = word.codes()
    if any(c is Code.ILLEGAL for c in codes):
        return WordStatus.ILLEGAL
    if all(c is Code.SPACER for c in codes):
        return WordStatus.SPACER
    if any(c is Code.SPACER for c in codes):
        return WordStatus.PARTIAL
    return sum(1 << i for i, c in enumerate(codes) if c is Code.DATA1)


def word_from_rails(rails: Iterable[int], protocol: Protocol) -> DualRailWord:
    rails = list(rails)
    if len(rails) % 2:
        raise EncodingError("rail list must have even length")
    return DualRailWord(tuple(RailPair(rails[i], rails[i + 1]) for i in range(0, len(rails), 2)),
                        protocol)


# ---------------------------------------------------------------------------
# Vector files
# ---------------------------------------------------------------------------

class Vector(NamedTuple):
    a: int
    b: int
    cin: int


def parse_vectors(text: str) -> list[Vector]:
    """Parse ``a b cin`` lines: hex operands, carry-in bit, ``#`` comments."""
    vectors = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.replace(",", " ").split()
        if len(fields) != 3:
            raise EncodingError(f"line {lineno}: expected 'a b cin', got {line!r}")
        try:
            a, b = int(fields[0], 16), int(fields[1], 16)
            cin = int(fields[2], 16)
        except ValueError:
            raise EncodingError(f"line {lineno}: bad hex field in {line!r}") from None
        if cin not in (0, 1):
            raise EncodingError(f"line {lineno}: carry-in must be 0 or 1")
        vectors.append(Vector(a, b, cin))
    return vectors


def format_vectors(vectors: Iterable[Vector], width: int = 32) -> str:
    digits = max(1, (width + 3) // 4)
    return "".join(f"{a:0{digits}x} {b:0{digits}x} {cin}\n" for a, b, cin in vectors)
