import logging

from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from enum import Enum
from functools import cache
from math import factorial
from typing import TypeVar

import numpy as np

from commonbasis.constants import DEFAULT_COMPLEX_BUDGET, DEFAULT_SAMPLE_SIZE, DEFAULT_SEED, EXHAUSTIVE_FACE_LIMIT
from commonbasis.elements import ElementSet, element_set, format_element_set
from commonbasis.errors import ExtensionPropertyError, InputError, ResourceBudgetError
from commonbasis.frames import DecompositionPoset, FrameFamily, build_CB, build_PD, check_EP
from commonbasis.homology import InducedMapReport, chain_map_from_vertex_map, face_poset_complex, homology_map_is_iso
from commonbasis.poset_core import (
    Direction,
    FinitePoset,
    extreme_elements,
    inclusion_poset,
    iter_chains,
    lower_bound_sets,
    principal_top,
    random_maximal_chain,
)
from commonbasis.simplicial_complex import SimplicialComplex


logger = logging.getLogger(__name__)

T = TypeVar("T")
U = TypeVar("U")


class MapKind(Enum):
    M = "m"
    U = "u"


@dataclass(frozen=True)
class UnionResult:
    """Union of a chain of partial decompositions, flagged when it is not a face of the complex."""

    face: ElementSet
    is_face: bool


def closure(poset: FinitePoset, sigma: Sequence[int]) -> ElementSet:
    """
    All meets of non-empty subsets of sigma that exist in the poset.

    Args:
        poset (FinitePoset): Ambient poset.
        sigma (Sequence[int]): Non-empty set of elements.

    Returns:
        ElementSet: The closure, which contains sigma.
    """
    members = poset.check_members(sigma)
    meets = (principal_top(poset, lower) for lower in lower_bound_sets(poset, members))
    return element_set(m for m in meets if m is not None)


def apply_to_chain(f: Callable[[T], U], chain: Sequence[T]) -> list[U]:
    """Apply a map to every link of a chain, dropping repeated images."""
    images: list[U] = []
    for link in chain:
        image = f(link)
        if image not in images:
            images.append(image)
    return images


def _check_face_chain(family: FrameFamily, chain: Sequence[ElementSet]) -> list[ElementSet]:
    if not chain:
        raise InputError("expected a non-empty chain of faces")
    links = sorted((family.poset.check_members(face) for face in chain), key=len)
    for face in links:
        if not family.is_basis_compatible(face):
            raise InputError(f"{face} is not a face of the common basis complex", witness=face)
    for smaller, larger in zip(links, links[1:]):
        if len(smaller) == len(larger) or not set(smaller) <= set(larger):
            raise InputError(f"faces {smaller} and {larger} are not strictly nested", witness=(smaller, larger))
    return links


def map_m(poset: FinitePoset, family: FrameFamily, chain: Sequence[ElementSet]) -> ElementSet:
    """
    Send a chain of faces to the maximal elements of the union of the minimal elements of their closures.

    Args:
        poset (FinitePoset): Ambient poset.
        family (FrameFamily): Frames defining the faces.
        chain (Sequence[ElementSet]): Faces nested by inclusion, in any order.

    Returns:
        ElementSet: A partial decomposition.
    """
    links = _check_face_chain(family, chain)
    minima = {x for face in links for x in extreme_elements(poset, closure(poset, face), Direction.MIN)}
    return extreme_elements(poset, minima, Direction.MAX)


def map_u(family: FrameFamily, chain: Sequence[ElementSet]) -> UnionResult:
    """Union of a chain of partial decompositions, with a flag telling whether it is a face."""
    if not chain:
        raise InputError("expected a non-empty chain of partial decompositions")
    face = element_set(x for sigma in chain for x in family.poset.check_members(sigma))
    return UnionResult(face=face, is_face=family.is_basis_compatible(face))


def upper_composite(
    poset: FinitePoset,
    alpha: Sequence[Sequence[ElementSet]],
    closure_of: Callable[[ElementSet], ElementSet] | None = None,
) -> ElementSet:
    """Closure of the largest face of the largest chain in a chain of face chains."""
    top = max(max(alpha, key=len), key=len)
    return closure_of(top) if closure_of is not None else closure(poset, top)


def lower_composite(pd: DecompositionPoset, beta: Sequence[Sequence[ElementSet]]) -> ElementSet:
    """Least partial decomposition of the least chain in a chain of chains."""
    smallest_chain = min(beta, key=len)
    indices = pd.order.sort_chain(element_set(pd.index[sigma] for sigma in smallest_chain))
    return pd.elements[indices[0]]


def refines(poset: FinitePoset, sigma: ElementSet, other: ElementSet) -> bool:
    """Every member of sigma lies below some member of other."""
    below = poset.downset_mask(other)
    return all(below >> x & 1 for x in sigma)


@dataclass
class CompositeBoundsReport:
    mode: str
    upper_checked: int = 0
    lower_checked: int = 0
    violations: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.violations


def _face_chain_from_prefixes(facet: ElementSet, order: Sequence[int]) -> list[ElementSet]:
    return [element_set(order[: i + 1]) for i in range(len(facet))]


def _random_nested_subchains(
    chain: Sequence[ElementSet], rng: np.random.Generator
) -> list[list[ElementSet]]:
    """A random chain of non-empty sub-chains of chain, nested by inclusion."""
    positions = list(range(len(chain)))
    rng.shuffle(positions)
    cut = int(rng.integers(1, len(chain) + 1))
    sizes = sorted({int(s) for s in rng.integers(1, cut + 1, size=int(rng.integers(1, cut + 1)))} | {cut})
    return [[chain[i] for i in sorted(positions[:size])] for size in sizes]


class _CompositeChecker:
    def __init__(self, poset: FinitePoset, family: FrameFamily, pd: DecompositionPoset) -> None:
        self.poset = poset
        self.family = family
        self.pd = pd
        self.m_cache: dict[tuple[ElementSet, ...], ElementSet] = {}
        self.closure_of = cache(lambda face: closure(poset, face))

    def m_of(self, chain: Sequence[ElementSet]) -> ElementSet:
        key = tuple(sorted(chain, key=len))
        if key not in self.m_cache:
            self.m_cache[key] = map_m(self.poset, self.family, key)
        return self.m_cache[key]

    def check_upper(self, alpha: Sequence[Sequence[ElementSet]], report: CompositeBoundsReport) -> None:
        bound = set(upper_composite(self.poset, alpha, self.closure_of))
        image = {x for a in alpha for x in self.m_of(a)}
        report.upper_checked += 1
        if not image <= bound:
            faces = " < ".join(format_element_set(face) for face in max(alpha, key=len))
            report.violations.append(f"upper {format_element_set(element_set(image))} not in closure of [{faces}]")

    def check_lower(self, beta: Sequence[Sequence[ElementSet]], report: CompositeBoundsReport) -> None:
        faces = apply_to_chain(lambda b: map_u(self.family, b).face, beta)
        image = self.m_of(faces)
        bound = lower_composite(self.pd, beta)
        report.lower_checked += 1
        if not refines(self.poset, bound, image):
            report.violations.append(f"lower {format_element_set(bound)} does not refine {format_element_set(image)}")


def verify_composite_bounds(
    poset: FinitePoset,
    family: FrameFamily,
    exhaustive: bool | None = None,
    sample_size: int = DEFAULT_SAMPLE_SIZE,
    seed: int = DEFAULT_SEED,
    cb: SimplicialComplex | None = None,
    pd: DecompositionPoset | None = None,
    exhaustive_face_limit: int = EXHAUSTIVE_FACE_LIMIT,
) -> CompositeBoundsReport:
    """
    Check the two composite bounds relating m and u to closure, max and min.

    The first bound says u after m is at most the closure of the top face of the top chain, the
    second that m after u refines at least the bottom partial decomposition of the bottom chain.

    Args:
        poset (FinitePoset): Ambient poset.
        family (FrameFamily): Frames, which must have the extension property.
        exhaustive (bool | None): Force exhaustive or sampled mode; None picks by complex size.
        sample_size (int): Number of random chains of chains per bound in sampled mode.
        seed (int): Seed of the sampler.
        cb (SimplicialComplex | None): Prebuilt common basis complex.
        pd (DecompositionPoset | None): Prebuilt partial decompositions.
        exhaustive_face_limit (int): Largest face count checked exhaustively by default.

    Returns:
        CompositeBoundsReport: Counts and canonically sorted violations.
    """
    cb = cb if cb is not None else build_CB(poset, family)
    pd = pd if pd is not None else build_PD(poset, family)
    verdict = check_EP(poset, family, pd)
    if not verdict.holds:
        raise ExtensionPropertyError("composite bounds need the extension property", witness=verdict.witness)

    face_count = sum(cb.f_vector)
    if exhaustive is None:
        exhaustive = face_count <= exhaustive_face_limit
        if not exhaustive:
            logger.warning("%d faces exceed the exhaustive limit %d, sampling instead", face_count,
                           exhaustive_face_limit)
    checker = _CompositeChecker(poset, family, pd)
    report = CompositeBoundsReport(mode="exhaustive" if exhaustive else f"sample({sample_size})")

    if exhaustive:
        faces = [face for by_dimension in cb.faces for face in by_dimension]
        face_chains = [[faces[i] for i in chain] for chain in iter_chains(inclusion_poset(faces))]
        for chain in face_chains:
            for mask in range(1, 1 << len(chain)):
                sub = [chain[i] for i in range(len(chain)) if mask >> i & 1]
                checker.check_upper([sub, chain] if len(sub) < len(chain) else [chain], report)
        for chain in iter_chains(pd.order):
            checker.check_lower([[pd.elements[i] for i in chain]], report)
    else:
        rng = np.random.default_rng(seed)
        for _ in range(sample_size):
            facet = cb.facets[int(rng.integers(len(cb.facets)))]
            order = [int(v) for v in rng.permutation(facet)]
            checker.check_upper(_random_nested_subchains(_face_chain_from_prefixes(facet, order), rng), report)
        for _ in range(sample_size):
            links = pd.order.sort_chain(random_maximal_chain(pd.order, rng))
            checker.check_lower(_random_nested_subchains([pd.elements[i] for i in links], rng), report)

    report.violations.sort()
    logger.info("composite bounds: %d upper and %d lower checks, %d violations", report.upper_checked,
                report.lower_checked, len(report.violations))
    return report


def closure_image(poset: FinitePoset, cb: SimplicialComplex) -> tuple[FinitePoset, list[ElementSet]]:
    """The closed faces of the complex, ordered by inclusion."""
    closed = sorted({closure(poset, face) for by_dimension in cb.faces for face in by_dimension})
    return inclusion_poset(closed), closed


def _subdivision_budget(complex_: SimplicialComplex, budget: int) -> None:
    estimate = sum(factorial(len(facet)) for facet in complex_.facets) * 2 ** (complex_.dimension + 1)
    if estimate > budget:
        raise ResourceBudgetError(
            f"subdivision of a complex with {len(complex_.facets)} facets may reach {estimate} faces, "
            f"above the budget {budget}; compare Betti numbers instead"
        )


def induced_homology_iso(
    poset: FinitePoset,
    family: FrameFamily,
    which: MapKind,
    budget: int = DEFAULT_COMPLEX_BUDGET,
    seed: int = DEFAULT_SEED,
) -> InducedMapReport:
    """
    Whether m or u induces an isomorphism on rational reduced homology.

    For u the simplicial map runs from the subdivided order complex of the partial decompositions
    to the subdivided common basis complex; for m from the twice subdivided complex to the order
    complex of the partial decompositions.

    Args:
        poset (FinitePoset): Ambient poset.
        family (FrameFamily): Frames, which must have the extension property.
        which (MapKind): The map to test.
        budget (int): Largest estimated face count of any complex built.
        seed (int): Seed for the certification primes.

    Returns:
        InducedMapReport: Per-degree ranks and isomorphism verdicts.
    """
    cb = build_CB(poset, family)
    pd = build_PD(poset, family)
    verdict = check_EP(poset, family, pd)
    if not verdict.holds:
        raise ExtensionPropertyError("u is only defined under the extension property", witness=verdict.witness)
    pd_complex = pd.order_complex()

    if which is MapKind.U:
        _subdivision_budget(pd_complex, budget)
        _subdivision_budget(cb, budget)
        domain, pd_chains = face_poset_complex(pd_complex)
        codomain, cb_faces = face_poset_complex(cb)
        position = {face: i for i, face in enumerate(cb_faces)}
        vertex_map = [position[map_u(family, [pd.elements[i] for i in chain]).face] for chain in pd_chains]
    else:
        _subdivision_budget(cb, budget)
        once, cb_faces = face_poset_complex(cb)
        _subdivision_budget(once, budget)
        domain, face_chains = face_poset_complex(once)
        codomain = pd_complex
        vertex_map = [pd.index[map_m(poset, family, [cb_faces[i] for i in chain])] for chain in face_chains]

    logger.info("induced map %s: domain f-vector %s, codomain f-vector %s", which.value, domain.f_vector,
                codomain.f_vector)
    return homology_map_is_iso(chain_map_from_vertex_map(domain, codomain, vertex_map), seed=seed)
