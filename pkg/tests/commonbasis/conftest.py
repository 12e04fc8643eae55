import pytest

from commonbasis.frames import Frame, FrameFamily
from commonbasis.poset_core import FinitePoset, build_poset
from commonbasis.providers import (
    MatroidInstance,
    MatroidSpec,
    ProviderInstance,
    SubspaceInstance,
    SymplecticInstance,
    matroid_provider,
    subspace_provider,
    symplectic_provider,
)
from commonbasis.simplicial_complex import SimplicialComplex


RP2_FACETS = [
    (1, 2, 4),
    (1, 2, 6),
    (1, 3, 5),
    (1, 3, 6),
    (1, 4, 5),
    (2, 3, 4),
    (2, 3, 5),
    (2, 5, 6),
    (3, 4, 6),
    (4, 5, 6),
]


@pytest.fixture(scope="session")
def gf2_2() -> SubspaceInstance:
    return subspace_provider(2, 2)


@pytest.fixture(scope="session")
def gf3_2() -> SubspaceInstance:
    return subspace_provider(3, 2)


@pytest.fixture(scope="session")
def gf2_3() -> SubspaceInstance:
    return subspace_provider(2, 3)


@pytest.fixture(scope="session")
def uniform_4_2() -> MatroidInstance:
    return matroid_provider(MatroidSpec.uniform(4, 2))


@pytest.fixture(scope="session")
def uniform_5_3() -> MatroidInstance:
    return matroid_provider(MatroidSpec.uniform(5, 3))


@pytest.fixture(scope="session")
def free_3() -> MatroidInstance:
    return matroid_provider(MatroidSpec.free(3))


@pytest.fixture(scope="session")
def free_4() -> MatroidInstance:
    return matroid_provider(MatroidSpec.free(4))


@pytest.fixture(scope="session")
def free_6() -> MatroidInstance:
    return matroid_provider(MatroidSpec.free(6))


@pytest.fixture(scope="session")
def symplectic_2_1() -> SymplecticInstance:
    return symplectic_provider(2, 1)


@pytest.fixture(scope="session")
def symplectic_2_2() -> SymplecticInstance:
    return symplectic_provider(2, 2)


@pytest.fixture(scope="session")
def no_extension() -> ProviderInstance:
    """Four elements a, b, c, d with a < c and frames {a, b}, {c, d}."""
    poset = build_poset(4, [(0, 2)], labels=("a", "b", "c", "d"))
    family = FrameFamily(poset=poset, frames=(Frame((0, 1)), Frame((2, 3))))
    return ProviderInstance(name="no-extension", poset=poset, family=family)


@pytest.fixture
def three_chain() -> FinitePoset:
    return build_poset(3, [(0, 1), (1, 2)])


@pytest.fixture
def rp2() -> SimplicialComplex:
    return SimplicialComplex.from_simplices(6, [tuple(v - 1 for v in facet) for facet in RP2_FACETS])
