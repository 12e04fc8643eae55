from collections.abc import Iterable, Iterator


ElementSet = tuple[int, ...]
"""Sorted, duplicate-free tuple of element indices of an ambient poset."""


def element_set(items: Iterable[int]) -> ElementSet:
    """Canonicalise an iterable of element indices into an ElementSet."""
    return tuple(sorted(set(items)))


def to_mask(items: Iterable[int]) -> int:
    mask = 0
    for item in items:
        mask |= 1 << item
    return mask


def iter_mask(mask: int) -> Iterator[int]:
    """Yield the set bit positions of a mask in ascending order."""
    while mask:
        low_bit = mask & -mask
        yield low_bit.bit_length() - 1
        mask ^= low_bit


def from_mask(mask: int) -> ElementSet:
    return tuple(iter_mask(mask))


def format_element_set(members: ElementSet, labels: tuple[str, ...] | None = None) -> str:
    """Render an ElementSet as a whitespace-free token such as ``{0,3,5}``."""
    if labels is None:
        return "{" + ",".join(str(member) for member in members) + "}"
    return "{" + ",".join(labels[member] for member in members) + "}"
