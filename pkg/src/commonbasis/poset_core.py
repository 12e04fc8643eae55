from collections.abc import Iterable, Iterator, Sequence
from dataclasses import InitVar, dataclass
from enum import Enum
from functools import cached_property

import networkx as nx
import numpy as np

from numpy.typing import NDArray

from commonbasis.elements import ElementSet, element_set, iter_mask
from commonbasis.errors import InputError, InvalidPosetError
from commonbasis.simplicial_complex import SimplicialComplex


class Direction(Enum):
    MIN = "min"
    MAX = "max"


def _mask_of_row(row: NDArray[np.bool_]) -> int:
    return int.from_bytes(np.packbits(row, bitorder="little").tobytes(), "little")


def _matrix_from_masks(masks: Sequence[int], n: int) -> NDArray[np.bool_]:
    width = max(1, (n + 7) // 8)
    rows = [np.frombuffer(mask.to_bytes(width, "little"), dtype=np.uint8) for mask in masks]
    if not rows:
        return np.zeros((0, 0), dtype=bool)
    return np.unpackbits(np.stack(rows), axis=1, bitorder="little")[:, :n].astype(bool)


@dataclass(frozen=True, eq=False)
class FinitePoset:
    """Finite poset on the elements 0..n-1 stored as a dense order matrix."""

    n: int
    leq: NDArray[np.bool_]
    labels: tuple[str, ...] | None = None
    check: InitVar[bool] = True

    def __post_init__(self, check: bool) -> None:
        if self.leq.shape != (self.n, self.n):
            raise InvalidPosetError(f"order matrix has shape {self.leq.shape}, expected ({self.n}, {self.n})")
        if self.labels is not None and len(self.labels) != self.n:
            raise InputError(f"expected {self.n} labels, got {len(self.labels)}")
        self.leq.setflags(write=False)
        if not check:
            return
        if not self.leq.diagonal().all():
            raise InvalidPosetError("order relation is not reflexive")
        strict = self.leq & ~np.eye(self.n, dtype=bool)
        both_ways = np.argwhere(strict & strict.T)
        if len(both_ways):
            i, j = (int(v) for v in both_ways[0])
            raise InvalidPosetError(f"order relation is not antisymmetric at ({i}, {j})", witness=(i, j))
        as_float = self.leq.astype(np.float32)
        if not np.array_equal((as_float @ as_float) > 0, self.leq):
            raise InvalidPosetError("order relation is not transitive")

    @cached_property
    def down_masks(self) -> tuple[int, ...]:
        """Bitmask of the principal ideal below each element, the element included."""
        return tuple(_mask_of_row(self.leq[:, x]) for x in range(self.n))

    @cached_property
    def up_masks(self) -> tuple[int, ...]:
        return tuple(_mask_of_row(self.leq[x, :]) for x in range(self.n))

    @cached_property
    def covers(self) -> tuple[tuple[int, int], ...]:
        strict = self.leq & ~np.eye(self.n, dtype=bool)
        as_float = strict.astype(np.float32)
        cover = strict & ~((as_float @ as_float) > 0)
        return tuple((int(i), int(j)) for i, j in np.argwhere(cover))

    @cached_property
    def upper_covers(self) -> tuple[tuple[int, ...], ...]:
        above: list[list[int]] = [[] for _ in range(self.n)]
        for lower, upper in self.covers:
            above[lower].append(upper)
        return tuple(tuple(items) for items in above)

    @cached_property
    def heights(self) -> tuple[int, ...]:
        """Height of every element, minimal elements having height 1."""
        result = [1] * self.n
        # ideal sizes strictly increase along the order, so this is a linear extension
        for x in sorted(range(self.n), key=lambda y: self.down_masks[y].bit_count()):
            for upper in self.upper_covers[x]:
                result[upper] = max(result[upper], result[x] + 1)
        return tuple(result)

    @cached_property
    def minimal_elements(self) -> ElementSet:
        return tuple(x for x in range(self.n) if self.down_masks[x] == 1 << x)

    def le(self, x: int, y: int) -> bool:
        return bool(self.leq[x, y])

    def lt(self, x: int, y: int) -> bool:
        return x != y and bool(self.leq[x, y])

    def comparable(self, x: int, y: int) -> bool:
        return bool(self.leq[x, y] or self.leq[y, x])

    def label_of(self, x: int) -> str:
        return self.labels[x] if self.labels is not None else str(x)

    def check_members(self, members: Iterable[int]) -> ElementSet:
        """Canonicalise a set of elements, rejecting empty sets and unknown indices."""
        result = element_set(members)
        if not result:
            raise InputError("expected a non-empty element set")
        if result[0] < 0 or result[-1] >= self.n:
            raise InputError(f"element set {result} mentions an element outside 0..{self.n - 1}")
        return result

    def lower_bounds_mask(self, members: ElementSet) -> int:
        mask = (1 << self.n) - 1
        for x in members:
            mask &= self.down_masks[x]
        return mask

    def upper_bounds_mask(self, members: ElementSet) -> int:
        mask = (1 << self.n) - 1
        for x in members:
            mask &= self.up_masks[x]
        return mask

    def downset_mask(self, members: Iterable[int]) -> int:
        mask = 0
        for x in members:
            mask |= self.down_masks[x]
        return mask

    def is_chain(self, members: ElementSet) -> bool:
        return all(self.comparable(x, y) for i, x in enumerate(members) for y in members[i + 1 :])

    def is_antichain(self, members: ElementSet) -> bool:
        return all(not self.comparable(x, y) for i, x in enumerate(members) for y in members[i + 1 :])

    def sort_chain(self, members: ElementSet) -> list[int]:
        """Order the members of a chain from bottom to top."""
        return sorted(members, key=lambda x: self.down_masks[x].bit_count())


def build_poset(n: int, covers: Iterable[tuple[int, int]], labels: tuple[str, ...] | None = None) -> FinitePoset:
    """
    Build a poset as the reflexive-transitive closure of a cover relation.

    Args:
        n (int): Number of elements.
        covers (Iterable[tuple[int, int]]): Pairs (i, j) meaning i is covered by j.
        labels (tuple[str, ...] | None): Optional display string per element.

    Returns:
        FinitePoset: The closed order.
    """
    if n < 0:
        raise InputError(f"element count must be non-negative, got {n}")
    graph = nx.DiGraph()
    graph.add_nodes_from(range(n))
    for i, j in covers:
        if not (0 <= i < n and 0 <= j < n):
            raise InputError(f"cover ({i}, {j}) mentions an element outside 0..{n - 1}", witness=(i, j))
        graph.add_edge(i, j)

    try:
        cycle = nx.find_cycle(graph)
    except nx.NetworkXNoCycle:
        cycle = None
    if cycle is not None:
        witness = [int(edge[0]) for edge in cycle]
        raise InvalidPosetError(f"cover relation contains the cycle {witness}", witness=witness)

    reach = [0] * n
    for v in reversed(list(nx.topological_sort(graph))):
        mask = 1 << v
        for w in graph.successors(v):
            mask |= reach[w]
        reach[v] = mask
    return FinitePoset(n=n, leq=_matrix_from_masks(reach, n), labels=labels, check=False)


def meet_of(poset: FinitePoset, members: Iterable[int]) -> int | None:
    """
    Meet of a non-empty set of elements inside the poset.

    Args:
        poset (FinitePoset): Ambient poset.
        members (Iterable[int]): Non-empty set of elements.

    Returns:
        int | None: The greatest common lower bound, or None when there is none.
    """
    lower = poset.lower_bounds_mask(poset.check_members(members))
    for candidate in iter_mask(lower):
        if poset.down_masks[candidate] & lower == lower:
            return candidate
    return None


def join_of(poset: FinitePoset, members: Iterable[int]) -> int | None:
    """Least common upper bound of a non-empty set of elements, or None."""
    upper = poset.upper_bounds_mask(poset.check_members(members))
    for candidate in iter_mask(upper):
        if poset.up_masks[candidate] & upper == upper:
            return candidate
    return None


def height_of(poset: FinitePoset, x: int) -> int:
    if not 0 <= x < poset.n:
        raise InputError(f"element {x} outside 0..{poset.n - 1}")
    return poset.heights[x]


def total_height(poset: FinitePoset) -> int:
    """Dimension of the order complex of the poset with both virtual bounds adjoined."""
    return max(poset.heights, default=0) + 1


def extreme_elements(poset: FinitePoset, members: Iterable[int], direction: Direction) -> ElementSet:
    """
    Maximal or minimal elements of a subset.

    Args:
        poset (FinitePoset): Ambient poset.
        members (Iterable[int]): Non-empty subset.
        direction (Direction): Which extreme to keep.

    Returns:
        ElementSet: A non-empty antichain.
    """
    subset = poset.check_members(members)
    if direction is Direction.MAX:
        return tuple(x for x in subset if not any(poset.lt(x, y) for y in subset))
    return tuple(x for x in subset if not any(poset.lt(y, x) for y in subset))


def iter_maximal_chains(poset: FinitePoset) -> Iterator[ElementSet]:
    stack: list[tuple[int, ...]] = [(x,) for x in reversed(poset.minimal_elements)]
    while stack:
        chain = stack.pop()
        above = poset.upper_covers[chain[-1]]
        if not above:
            yield element_set(chain)
            continue
        stack.extend(chain + (upper,) for upper in reversed(above))


def iter_chains(poset: FinitePoset) -> Iterator[ElementSet]:
    """Yield every non-empty chain once, each extended upward from its least element."""
    stack: list[tuple[int, ...]] = [(x,) for x in reversed(range(poset.n))]
    while stack:
        chain = stack.pop()
        yield element_set(chain)
        top = chain[-1]
        stack.extend(chain + (y,) for y in reversed(range(poset.n)) if poset.lt(top, y))


def order_complex(poset: FinitePoset) -> SimplicialComplex:
    """Simplicial complex whose faces are the chains of the poset."""
    return SimplicialComplex(num_vertices=poset.n, facets=tuple(sorted(iter_maximal_chains(poset))))


def random_maximal_chain(poset: FinitePoset, rng: np.random.Generator) -> ElementSet:
    if poset.n == 0:
        raise InputError("an empty poset has no chains")
    minimal = poset.minimal_elements
    chain = [minimal[int(rng.integers(len(minimal)))]]
    while above := poset.upper_covers[chain[-1]]:
        chain.append(above[int(rng.integers(len(above)))])
    return element_set(chain)


def inclusion_poset(sets: Sequence[ElementSet], labels: tuple[str, ...] | None = None) -> FinitePoset:
    """
    Poset of distinct finite sets ordered by inclusion.

    Args:
        sets (Sequence[ElementSet]): Distinct sets of non-negative integers.
        labels (tuple[str, ...] | None): Optional display strings.

    Returns:
        FinitePoset: Element i is sets[i].
    """
    if len(set(sets)) != len(sets):
        raise InputError("inclusion poset needs distinct sets")
    universe = 1 + max((s[-1] for s in sets if s), default=-1)
    incidence = np.zeros((len(sets), universe), dtype=np.float32)
    for i, members in enumerate(sets):
        incidence[i, list(members)] = 1.0
    outside = incidence @ (1.0 - incidence).T
    return FinitePoset(n=len(sets), leq=outside == 0, labels=labels, check=False)


def chain_poset(poset: FinitePoset) -> tuple[FinitePoset, list[ElementSet]]:
    """Face poset of the order complex: all non-empty chains ordered by inclusion."""
    chains = sorted(iter_chains(poset), key=lambda c: (len(c), c))
    return inclusion_poset(chains), chains


def lower_bound_sets(poset: FinitePoset, members: ElementSet) -> dict[int, ElementSet]:
    """
    Every distinct non-empty set of common lower bounds of a subset of members.

    Args:
        poset (FinitePoset): Ambient poset.
        members (ElementSet): Elements whose subsets are explored.

    Returns:
        dict[int, ElementSet]: Lower-bound bitmask mapped to one subset producing it.
    """
    seen: dict[int, ElementSet] = {}
    for y in members:
        seen.setdefault(poset.down_masks[y], (y,))
    frontier = list(seen.items())
    while frontier:
        next_frontier: list[tuple[int, ElementSet]] = []
        for lower, generators in frontier:
            for y in members:
                narrowed = lower & poset.down_masks[y]
                if narrowed and narrowed not in seen:
                    seen[narrowed] = element_set(generators + (y,))
                    next_frontier.append((narrowed, seen[narrowed]))
        frontier = next_frontier
    return seen


def principal_top(poset: FinitePoset, lower: int) -> int | None:
    """The element whose principal ideal is exactly the given bitmask, if any."""
    return next((m for m in iter_mask(lower) if poset.down_masks[m] == lower), None)
