"""Fact-set helpers over plain Python ints used as bit-sets."""

from __future__ import annotations

from typing import Iterable, Iterator, Tuple


def _require_int(name: str, value: int) -> None:
    if not isinstance(value, int):
        raise TypeError(f"{name} must be an int")


def mask_of(ids: Iterable[int]) -> int:
    mask = 0
    for idx in ids:
        _require_int("fact id", idx)
        if idx < 0:
            raise IndexError("fact id must be non-negative")
        mask |= 1 << idx
    return mask


def iter_bits(mask: int) -> Iterator[int]:
    """Yield the indices of set bits in ascending order."""
    _require_int("mask", mask)
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def ids_of(mask: int) -> Tuple[int, ...]:
    return tuple(iter_bits(mask))


def popcount(mask: int) -> int:
    _require_int("mask", mask)
    return bin(mask).count("1")


def has_bit(mask: int, pos: int) -> bool:
    return bool(mask & (1 << pos))


def is_subset(sub: int, sup: int) -> bool:
    return not (sub & ~sup)
