"""Bit-level state descriptors and hash-compaction signatures."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Sequence

# Fixed key so signatures are reproducible across runs and platforms.
SIGNATURE_KEY = b"rover-planner-sig-v1"


class EncodingError(ValueError):
    pass


@dataclass(frozen=True)
class Field:
    name: str
    lo: int
    hi: int

    @property
    def width(self) -> int:
        return max(1, (self.hi - self.lo).bit_length())


class BitLayout:
    """Packs a tuple of bounded integers into one integer, field after field.

    Fields are not byte aligned: the descriptor width is the plain sum of the
    per-field widths. The first field occupies the lowest bits.
    """

    def __init__(self, fields: Sequence[Field]):
        self.fields = tuple(fields)
        self._shifts = []
        shift = 0
        for f in self.fields:
            if f.hi < f.lo:
                raise ValueError(f"field {f.name}: empty range [{f.lo}, {f.hi}]")
            self._shifts.append(shift)
            shift += f.width
        self.width = shift
        self._spec = tuple((f.lo, f.hi, (1 << f.width) - 1, s) for f, s in zip(self.fields, self._shifts))

    @property
    def nbytes(self) -> int:
        return (self.width + 7) // 8

    def pack(self, values: Sequence[int]) -> int:
        if len(values) != len(self._spec):
            raise EncodingError(f"expected {len(self._spec)} fields, got {len(values)}")
        out = 0
        for i, (lo, hi, _, shift) in enumerate(self._spec):
            v = values[i]
            if v < lo or v > hi:
                raise EncodingError(f"field {self.fields[i].name}={v} outside [{lo}, {hi}]")
            out |= (v - lo) << shift
        return out

    def unpack(self, packed: int) -> tuple[int, ...]:
        if packed < 0 or packed >> self.width:
            raise EncodingError(f"descriptor {packed:#x} wider than {self.width} bits")
        out = []
        for i, (lo, hi, mask, shift) in enumerate(self._spec):
            v = ((packed >> shift) & mask) + lo
            if v > hi:
                raise EncodingError(f"corrupted descriptor: field {self.fields[i].name}={v} above {hi}")
            out.append(v)
        return tuple(out)

    def space_size(self) -> int:
        n = 1
        for f in self.fields:
            n *= f.hi - f.lo + 1
        return n


def signature(packed: int, bits: int = 64) -> int:
    """64-bit keyed BLAKE2b digest of a descriptor, optionally truncated to ``bits``."""
    raw = packed.to_bytes(max(1, (packed.bit_length() + 7) // 8), "little")
    digest = hashlib.blake2b(raw, digest_size=8, key=SIGNATURE_KEY).digest()
    sig = int.from_bytes(digest, "little")
    if bits < 64:
        sig &= (1 << bits) - 1
    return sig
