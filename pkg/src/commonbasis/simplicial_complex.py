from collections.abc import Iterable
from dataclasses import dataclass
from functools import cached_property
from itertools import combinations

from commonbasis.elements import ElementSet, element_set
from commonbasis.errors import InputError


def _maximal_only(simplices: Iterable[ElementSet]) -> list[ElementSet]:
    """Keep the inclusion-maximal simplices of a family, in canonical order."""
    candidates = sorted(set(simplices), key=lambda s: (-len(s), s))
    kept: list[ElementSet] = []
    facets_through: dict[int, int] = {}  # vertex -> bitmask over kept facets
    for simplex in candidates:
        covering = -1
        for vertex in simplex:
            covering &= facets_through.get(vertex, 0)
            if not covering:
                break
        if simplex and covering:
            continue
        position = 1 << len(kept)
        kept.append(simplex)
        for vertex in simplex:
            facets_through[vertex] = facets_through.get(vertex, 0) | position
    return sorted(kept)


@dataclass(frozen=True, eq=False)
class SimplicialComplex:
    """Finite abstract simplicial complex stored by its facets."""

    num_vertices: int
    facets: tuple[ElementSet, ...]

    def __post_init__(self) -> None:
        for facet in self.facets:
            if not facet or list(facet) != sorted(set(facet)):
                raise InputError(f"facet {facet} is not a sorted non-empty vertex set")
            if facet[-1] >= self.num_vertices or facet[0] < 0:
                raise InputError(f"facet {facet} mentions a vertex outside 0..{self.num_vertices - 1}")
        if list(self.facets) != _maximal_only(self.facets):
            raise InputError("facets must be canonically sorted and no facet may contain another")

    @classmethod
    def from_simplices(cls, num_vertices: int, simplices: Iterable[Iterable[int]]) -> "SimplicialComplex":
        """Build the complex generated by arbitrary simplices, keeping only the maximal ones."""
        canonical = [element_set(simplex) for simplex in simplices]
        return cls(num_vertices=num_vertices, facets=tuple(_maximal_only(s for s in canonical if s)))

    @property
    def dimension(self) -> int:
        """Dimension of the complex; -1 for the empty complex."""
        return max((len(facet) for facet in self.facets), default=0) - 1

    @property
    def is_empty(self) -> bool:
        return not self.facets

    @cached_property
    def faces(self) -> list[list[ElementSet]]:
        return faces_by_dimension(self)

    @cached_property
    def face_index(self) -> list[dict[ElementSet, int]]:
        """Stable index of every face, per dimension."""
        return [{face: i for i, face in enumerate(faces)} for faces in self.faces]

    @property
    def f_vector(self) -> tuple[int, ...]:
        return tuple(len(faces) for faces in self.faces)

    @property
    def vertices(self) -> ElementSet:
        return element_set(v for facet in self.facets for v in facet)

    def contains_face(self, face: ElementSet) -> bool:
        k = len(face) - 1
        return 0 <= k <= self.dimension and face in self.face_index[k]


def faces_by_dimension(complex_: SimplicialComplex) -> list[list[ElementSet]]:
    """
    Enumerate every face of a complex grouped by dimension.

    Args:
        complex_ (SimplicialComplex): Complex given by its facets.

    Returns:
        list[list[ElementSet]]: Entry k holds the sorted, duplicate-free k-faces.
    """
    by_dimension: list[set[ElementSet]] = [set() for _ in range(complex_.dimension + 1)]
    for facet in complex_.facets:
        for k in range(len(facet)):
            by_dimension[k].update(combinations(facet, k + 1))
    return [sorted(faces) for faces in by_dimension]
