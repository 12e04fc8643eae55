from collections.abc import Iterator
from itertools import combinations, permutations

import pytest

from commonbasis.constants import DEFAULT_SEED
from commonbasis.elements import ElementSet
from commonbasis.equivalence import (
    MapKind,
    apply_to_chain,
    closure,
    closure_image,
    induced_homology_iso,
    lower_composite,
    map_m,
    map_u,
    refines,
    upper_composite,
    verify_composite_bounds,
)
from commonbasis.errors import ExtensionPropertyError, InputError, ResourceBudgetError
from commonbasis.frames import build_CB, build_PD
from commonbasis.homology import integral_homology
from commonbasis.poset_core import FinitePoset, order_complex
from commonbasis.providers import MatroidInstance, ProviderInstance, SubspaceInstance
from commonbasis.simplicial_complex import SimplicialComplex


def flats(poset: FinitePoset, *labels: str) -> ElementSet:
    """Elements of a flat poset looked up by their 1-indexed labels, e.g. "12" for the flat {0, 1}."""
    assert poset.labels is not None
    return tuple(sorted(poset.labels.index(label) for label in labels))


def test_closure_adds_existing_meets(free_6: MatroidInstance) -> None:
    # Arrange
    poset = free_6.poset
    sigma = flats(poset, "1", "12", "23", "45")

    # Act
    closed = closure(poset, sigma)

    # Assert
    assert closed == flats(poset, "1", "12", "2", "23", "45")
    assert closure(poset, closed) == closed


def test_map_m_on_worked_chain(free_6: MatroidInstance) -> None:
    # Arrange
    poset = free_6.poset
    sigma0 = flats(poset, "1", "12", "23", "45")
    sigma1 = flats(poset, "1", "12", "23", "234", "45", "6")

    # Act
    image = map_m(poset, free_6.family, [sigma0, sigma1])

    # Assert
    assert image == flats(poset, "1", "2", "45", "6")


def test_map_u_on_worked_chain(free_6: MatroidInstance) -> None:
    # Arrange
    poset = free_6.poset
    sigma0 = flats(poset, "1", "12", "23", "45")
    sigma1 = flats(poset, "1", "12", "23", "234", "45", "6")

    # Act
    result = map_u(free_6.family, [sigma0, sigma1])

    # Assert
    assert result.face == sigma1
    assert result.is_face


def test_map_m_rejects_chain_that_is_not_nested(free_6: MatroidInstance) -> None:
    # Arrange
    poset = free_6.poset

    # Act / Assert
    with pytest.raises(InputError):
        map_m(poset, free_6.family, [flats(poset, "1"), flats(poset, "2")])


def test_map_m_rejects_non_face(no_extension: ProviderInstance) -> None:
    with pytest.raises(InputError):
        map_m(no_extension.poset, no_extension.family, [(0, 2)])


def test_map_u_flags_non_face_without_extension_property(no_extension: ProviderInstance) -> None:
    # Act
    result = map_u(no_extension.family, [(0,), (2,)])

    # Assert
    assert result.face == (0, 2)
    assert not result.is_face


def test_map_m_lands_in_partial_decompositions(gf2_2: SubspaceInstance) -> None:
    # Arrange
    pd = build_PD(gf2_2.poset, gf2_2.family)
    cb = build_CB(gf2_2.poset, gf2_2.family)

    # Act
    images = [map_m(gf2_2.poset, gf2_2.family, [(v,), facet]) for facet in cb.facets for v in facet]

    # Assert
    assert all(image in pd for image in images)


def test_apply_to_chain_drops_repeats() -> None:
    # Act
    images = apply_to_chain(lambda x: x // 2, [0, 1, 2, 3])

    # Assert
    assert images == [0, 1]


def test_refines(gf2_3: SubspaceInstance) -> None:
    # Arrange
    poset = gf2_3.poset
    line = 0
    plane = next(x for x in range(poset.n) if poset.lt(line, x))

    # Act / Assert
    assert refines(poset, (line,), (plane,))
    assert not refines(poset, (plane,), (line,))


def test_composite_right_hand_sides(gf2_2: SubspaceInstance) -> None:
    # Arrange
    pd = build_PD(gf2_2.poset, gf2_2.family)

    # Act
    upper = upper_composite(gf2_2.poset, [[(0,)], [(0,), (0, 1)]])
    lower = lower_composite(pd, [[(0,), (0, 1)], [(0,), (0, 1), (1,)]])

    # Assert
    assert upper == (0, 1)
    assert lower == (0,)


def test_composite_bounds_exhaustive_on_gf2_2(gf2_2: SubspaceInstance) -> None:
    # Act
    report = verify_composite_bounds(gf2_2.poset, gf2_2.family)

    # Assert
    assert report.mode == "exhaustive"
    assert report.passed
    assert report.upper_checked > 0 and report.lower_checked > 0


@pytest.mark.slow
def test_composite_bounds_sampled_on_gf2_3(gf2_3: SubspaceInstance) -> None:
    # Act
    report = verify_composite_bounds(gf2_3.poset, gf2_3.family, sample_size=10_000, seed=DEFAULT_SEED)

    # Assert
    assert report.mode == "sample(10000)"
    assert report.passed
    assert report.upper_checked == report.lower_checked == 10_000


@pytest.mark.slow
def test_composite_bounds_exhaustive_on_free_3(free_3: MatroidInstance) -> None:
    # Act
    report = verify_composite_bounds(free_3.poset, free_3.family, exhaustive=True)

    # Assert
    assert report.mode == "exhaustive"
    assert report.passed
    assert report.upper_checked > 0 and report.lower_checked > 0


def test_composite_bounds_require_extension_property(no_extension: ProviderInstance) -> None:
    with pytest.raises(ExtensionPropertyError):
        verify_composite_bounds(no_extension.poset, no_extension.family)


@pytest.mark.parametrize("name", ["free_3", "uniform_4_2"])
def test_closure_image_has_same_homology(name: str, request: pytest.FixtureRequest) -> None:
    # Arrange
    instance: MatroidInstance = request.getfixturevalue(name)
    cb = build_CB(instance.poset, instance.family)

    # Act
    image, closed = closure_image(instance.poset, cb)

    # Assert
    assert image.n == len(closed)
    assert all(cb.contains_face(face) for face in closed)
    assert integral_homology(cb).same_groups(integral_homology(order_complex(image)))


@pytest.mark.parametrize("which", [MapKind.U, MapKind.M])
def test_induced_maps_are_isomorphisms_on_gf2_2(gf2_2: SubspaceInstance, which: MapKind) -> None:
    # Act
    report = induced_homology_iso(gf2_2.poset, gf2_2.family, which)

    # Assert
    assert report.is_iso_everywhere
    assert report.betti_codomain[1] == 1


def test_induced_map_respects_budget(gf2_3: SubspaceInstance) -> None:
    with pytest.raises(ResourceBudgetError):
        induced_homology_iso(gf2_3.poset, gf2_3.family, MapKind.U, budget=1_000)


def test_induced_map_requires_extension_property(no_extension: ProviderInstance) -> None:
    with pytest.raises(ExtensionPropertyError):
        induced_homology_iso(no_extension.poset, no_extension.family, MapKind.U)


CRITERION_INSTANCES = [
    "gf2_2",
    "gf3_2",
    pytest.param("gf2_3", marks=pytest.mark.slow),
    "free_3",
    pytest.param("free_4", marks=pytest.mark.slow),
    "uniform_4_2",
    "uniform_5_3",
    "symplectic_2_1",
    pytest.param("symplectic_2_2", marks=pytest.mark.slow),
]


def face_chains(complex_: SimplicialComplex) -> Iterator[list[ElementSet]]:
    """Every chain of faces, as a sub-chain of the prefixes of some ordering of a facet."""
    seen: set[tuple[ElementSet, ...]] = set()
    for facet in complex_.facets:
        for order in permutations(facet):
            prefixes = [tuple(sorted(order[: i + 1])) for i in range(len(order))]
            for size in range(1, len(prefixes) + 1):
                for chain in combinations(prefixes, size):
                    if chain not in seen:
                        seen.add(chain)
                        yield list(chain)


@pytest.mark.parametrize("name", ["gf2_2", "uniform_4_2", "free_3", pytest.param("gf2_3", marks=pytest.mark.slow)])
def test_closure_is_extensive_monotone_and_idempotent(name: str, request: pytest.FixtureRequest) -> None:
    # Arrange
    instance: ProviderInstance = request.getfixturevalue(name)
    cb = build_CB(instance.poset, instance.family)

    for face in (face for by_dimension in cb.faces for face in by_dimension):
        # Act
        closed = closure(instance.poset, face)

        # Assert
        assert set(face) <= set(closed)
        assert closure(instance.poset, closed) == closed
        for smaller in combinations(face, len(face) - 1):
            if smaller:
                assert set(closure(instance.poset, smaller)) <= set(closed)


@pytest.mark.parametrize("name", ["gf2_2", "uniform_4_2", "free_3"])
def test_map_m_is_monotone(name: str, request: pytest.FixtureRequest) -> None:
    # Arrange
    instance: ProviderInstance = request.getfixturevalue(name)
    cb = build_CB(instance.poset, instance.family)

    for chain in face_chains(cb):
        # Act
        image = map_m(instance.poset, instance.family, chain)

        # Assert
        for size in range(1, len(chain)):
            for sub in combinations(chain, size):
                assert refines(instance.poset, map_m(instance.poset, instance.family, list(sub)), image)


@pytest.mark.parametrize("name", CRITERION_INSTANCES)
def test_common_basis_complex_and_partial_decompositions_share_homology(
    name: str, request: pytest.FixtureRequest
) -> None:
    # Arrange
    instance: ProviderInstance = request.getfixturevalue(name)

    # Act
    cb = integral_homology(build_CB(instance.poset, instance.family))
    pd = integral_homology(build_PD(instance.poset, instance.family).order_complex())

    # Assert
    assert cb.same_groups(pd)
