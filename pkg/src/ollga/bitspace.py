"""Bit strings, generalized OneMax, and good/bad bit accounting."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Union

import numpy as np

from .rng import RngStream, sample_k_subset

__all__ = [
    "BitString",
    "OneMaxInstance",
    "BitAccounting",
    "ShapeError",
    "evaluate",
    "fitness_distance",
    "account",
    "make_state_at_distance",
]


class ShapeError(ValueError):
    """Raised when bit strings of different lengths are combined."""


BitsLike = Union["BitString", str, Iterable[int], np.ndarray]


class BitString:
    """Immutable fixed-length binary string.

    Stored unpacked as a read-only ``uint8`` array; position ``i`` is 0-based.
    """

    __slots__ = ("_bits",)

    def __init__(self, bits: BitsLike):
        if isinstance(bits, BitString):
            arr = bits._bits
        elif isinstance(bits, str):
            if not set(bits) <= {"0", "1"}:
                raise ValueError(f"not a bit string: {bits!r}")
            arr = np.frombuffer(bits.encode("ascii"), dtype=np.uint8) - ord("0")
        else:
            raw = np.asarray(list(bits) if not isinstance(bits, np.ndarray) else bits)
            if raw.ndim != 1:
                raise ValueError("bit strings are one-dimensional")
            if raw.size and not np.isin(raw, (0, 1)).all():
                raise ValueError("every element of a bit string must be 0 or 1")
            arr = raw.astype(np.uint8)
        if arr.size == 0:
            raise ValueError("bit strings have positive length")
        arr = np.array(arr, dtype=np.uint8, copy=True)
        arr.setflags(write=False)
        self._bits = arr

    @classmethod
    def zeros(cls, n: int) -> "BitString":
        return cls(np.zeros(n, dtype=np.uint8))

    @classmethod
    def ones(cls, n: int) -> "BitString":
        return cls(np.ones(n, dtype=np.uint8))

    @classmethod
    def random(cls, n: int, rng: RngStream) -> "BitString":
        return cls(rng.bits(n))

    @property
    def bits(self) -> np.ndarray:
        return self._bits

    @property
    def n(self) -> int:
        return self._bits.size

    def __len__(self) -> int:
        return self._bits.size

    def __getitem__(self, i: int) -> int:
        return int(self._bits[i])

    def __iter__(self):
        return (int(b) for b in self._bits)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, BitString):
            return NotImplemented
        return self._bits.size == other._bits.size and bool(np.array_equal(self._bits, other._bits))

    def __hash__(self) -> int:
        return hash(self._bits.tobytes())

    def __str__(self) -> str:
        return (self._bits + ord("0")).tobytes().decode("ascii")

    def __repr__(self) -> str:
        s = str(self)
        return f"BitString('{s if len(s) <= 64 else s[:61] + '...'}')"

    def complement(self) -> "BitString":
        return BitString(1 - self._bits)

    def flip(self, positions) -> "BitString":
        arr = self._bits.copy()
        arr[np.asarray(positions, dtype=np.int64)] ^= 1
        return BitString(arr)

    def hamming(self, other: "BitString") -> int:
        _same_length(self, other)
        return int(np.count_nonzero(self._bits != other._bits))

    def to_int(self) -> int:
        """Integer code with position ``i`` as bit ``i``."""
        return int(str(self)[::-1], 2)

    @classmethod
    def from_int(cls, code: int, n: int) -> "BitString":
        return cls([(code >> i) & 1 for i in range(n)])


def _same_length(*xs: BitString) -> None:
    n = len(xs[0])
    for x in xs[1:]:
        if len(x) != n:
            raise ShapeError(f"length mismatch: {n} vs {len(x)}")


@dataclass(frozen=True)
class OneMaxInstance:
    """OneMax with hidden target: fitness counts positions agreeing with ``target``."""

    target: BitString

    @classmethod
    def classic(cls, n: int) -> "OneMaxInstance":
        return cls(BitString.ones(n))

    @classmethod
    def random(cls, n: int, rng: RngStream) -> "OneMaxInstance":
        return cls(BitString.random(n, rng))

    @property
    def n(self) -> int:
        return self.target.n

    def _check(self, x: BitString) -> None:
        if len(x) != self.n:
            raise ShapeError(f"instance has n={self.n}, search point has length {len(x)}")


@dataclass(frozen=True)
class BitAccounting:
    """Good bits: positions wrong in x but right in xp.  Bad bits: the reverse.

    ``surviving_*`` count those positions where ``y`` took xp's value; they are
    ``None`` when no ``y`` was supplied.
    """

    good: int
    bad: int
    hamming: int
    surviving_good: Optional[int] = None
    surviving_bad: Optional[int] = None


def evaluate(inst: OneMaxInstance, x: BitString) -> int:
    inst._check(x)
    return int(np.count_nonzero(x.bits == inst.target.bits))


def fitness_distance(inst: OneMaxInstance, x: BitString) -> int:
    return inst.n - evaluate(inst, x)


def account(
    inst: OneMaxInstance, x: BitString, xp: BitString, y: Optional[BitString] = None
) -> BitAccounting:
    inst._check(x)
    _same_length(x, xp)
    z = inst.target.bits
    diff = x.bits != xp.bits
    wrong = x.bits != z
    good_mask = diff & wrong
    bad_mask = diff & ~wrong
    acc = dict(good=int(good_mask.sum()), bad=int(bad_mask.sum()), hamming=int(diff.sum()))
    if y is not None:
        _same_length(x, y)
        took = y.bits == xp.bits
        acc["surviving_good"] = int((good_mask & took).sum())
        acc["surviving_bad"] = int((bad_mask & took).sum())
    return BitAccounting(**acc)


def make_state_at_distance(inst: OneMaxInstance, d: int, rng: RngStream) -> BitString:
    """Search point whose ``d`` wrong positions form a uniformly random subset."""
    if not 0 <= d <= inst.n:
        raise ValueError(f"distance must lie in [0, {inst.n}], got {d}")
    return inst.target.flip(sample_k_subset(inst.n, d, rng))
