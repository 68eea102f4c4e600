"""Fixed-length bit strings with XOR algebra.

All protocol-level classical data (secrets, sifted keys, shared keys,
ciphertexts, verdict masks) is carried as a :class:`BitString`: an
immutable value of known length, indexed from bit 0 = position 0 in
transmission order.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator

import numpy as np


@dataclass(frozen=True)
class BitString:
    """An ordered sequence of bits packed into an int.

    Bit i of ``value`` (LSB first) is the bit at position i.
    """

    value: int
    length: int

    def __post_init__(self) -> None:
        if self.length < 0:
            raise ValueError("length must be non-negative")
        if self.value < 0 or self.value >> self.length:
            raise ValueError("value does not fit in declared length")

    # -- constructors ------------------------------------------------

    @classmethod
    def zeros(cls, length: int) -> "BitString":
        return cls(0, length)

    @classmethod
    def from_bits(cls, bits: Iterable[int]) -> "BitString":
        value = 0
        length = 0
        for b in bits:
            if b not in (0, 1):
                raise ValueError(f"bit must be 0 or 1, got {b!r}")
            value |= b << length
            length += 1
        return cls(value, length)

    @classmethod
    def from_hex(cls, text: str, length: int) -> "BitString":
        """Parse a hex literal (optionally 0x-prefixed) into ``length`` bits."""
        value = int(text, 16)
        if value >> length:
            raise ValueError(f"{text!r} does not fit in {length} bits")
        return cls(value, length)

    @classmethod
    def random(cls, length: int, rng: np.random.Generator) -> "BitString":
        value = 0
        for chunk_start in range(0, length, 32):
            chunk = min(32, length - chunk_start)
            value |= int(rng.integers(0, 1 << chunk)) << chunk_start
        return cls(value, length)

    # -- access ------------------------------------------------------

    def bit(self, i: int) -> int:
        if not 0 <= i < self.length:
            raise IndexError(i)
        return (self.value >> i) & 1

    def __iter__(self) -> Iterator[int]:
        return (self.bit(i) for i in range(self.length))

    def __len__(self) -> int:
        return self.length

    @property
    def is_zero(self) -> bool:
        return self.value == 0

    def ones_positions(self) -> tuple[int, ...]:
        return tuple(i for i in range(self.length) if self.bit(i))

    # -- algebra -----------------------------------------------------

    def __xor__(self, other: "BitString") -> "BitString":
        if self.length != other.length:
            raise ValueError(
                f"length mismatch: {self.length} vs {other.length}"
            )
        return BitString(self.value ^ other.value, self.length)

    def complement(self) -> "BitString":
        mask = (1 << self.length) - 1
        return BitString(self.value ^ mask, self.length)

    # -- formatting ----------------------------------------------------

    def to01(self) -> str:
        """Position 0 first, matching transmission order."""
        return "".join(str(self.bit(i)) for i in range(self.length))

    def to_hex(self) -> str:
        return f"0x{self.value:x}"

    def __str__(self) -> str:
        return self.to01()
