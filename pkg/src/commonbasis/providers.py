import logging

from abc import ABC, abstractmethod
from collections.abc import Iterator, Sequence
from dataclasses import dataclass, field
from enum import Enum
from itertools import combinations, product
from math import factorial, prod
from pathlib import Path

import galois
import numpy as np

from numpy.typing import NDArray

from commonbasis.constants import (
    BASIS_EXCHANGE_GROUND_SET_LIMIT,
    DEFAULT_ENUMERATION_BUDGET,
    DEFAULT_SEED,
    PARANOID_GROUND_SET_LIMIT,
    RANK_AXIOM_SAMPLES,
)
from commonbasis.elements import ElementSet, element_set, from_mask, iter_mask, to_mask
from commonbasis.errors import CertificationError, InputError, InvalidMatroidError, ResourceBudgetError
from commonbasis.file_formats import read_frames, read_matroid_bases, read_poset
from commonbasis.frames import Frame, FrameFamily, subset_joins
from commonbasis.poset_core import FinitePoset, inclusion_poset


logger = logging.getLogger(__name__)


@dataclass
class ProviderConfig:
    """Configuration shared by every instance provider."""

    enumeration_budget: int = DEFAULT_ENUMERATION_BUDGET
    paranoid: bool = False


@dataclass(frozen=True)
class ExpectedHomology:
    """Known reduced homology of the partial decomposition complex: acyclic, or one free group in one degree."""

    degree: int | None
    rank: int | None = None

    @property
    def contractible(self) -> bool:
        return self.degree is None


@dataclass
class ProviderInstance:
    name: str
    poset: FinitePoset
    family: FrameFamily

    def expected_dimensions(self) -> tuple[int, int, int] | None:
        """Closed forms for the dimensions of the complex and of the two decomposition posets, if known."""
        return None

    def expected_homology(self) -> ExpectedHomology | None:
        return None


def _boolean_dimensions(m: int) -> tuple[int, int, int]:
    return 2**m - 3, 2 * m - 3, m - 2


def general_linear_order(q: int, n: int) -> int:
    return prod(q**n - q**i for i in range(n))


def expected_top_rank(q: int, n: int) -> int:
    """
    Rank of the top reduced homology of the common basis complex of GF(q)^n.

    Args:
        q (int): Prime field size.
        n (int): Dimension, at least 2.

    Returns:
        int: Index of the normaliser of a Coxeter torus in GL_n(q).
    """
    _check_field(q, n, minimum=2)
    order, torus = general_linear_order(q, n), n * (q**n - 1)
    if order % torus:
        raise CertificationError(f"|GL({n},{q})| = {order} is not divisible by {torus}")
    return order // torus


def gaussian_binomial(n: int, k: int, q: int) -> int:
    numerator = prod(q**n - q**i for i in range(k))
    denominator = prod(q**k - q**i for i in range(k))
    return numerator // denominator


def _check_field(q: int, n: int, minimum: int) -> None:
    if not galois.is_prime(q):
        raise InputError(f"field size {q} is not prime")
    if n < minimum:
        raise InputError(f"dimension must be at least {minimum}, got {n}")


def _check_budget(count: int, budget: int, what: str) -> None:
    if count > budget:
        raise ResourceBudgetError(f"{what} would enumerate {count} subspaces, above the budget {budget}")


def _rref_matrices(q: int, dim: int, k: int) -> Iterator[NDArray[np.int64]]:
    """Reduced row echelon matrices of every k-dimensional subspace of GF(q)^dim."""
    for pivots in combinations(range(dim), k):
        free = [(i, j) for i, p in enumerate(pivots) for j in range(p + 1, dim) if j not in pivots]
        for values in product(range(q), repeat=len(free)):
            matrix = np.zeros((k, dim), dtype=np.int64)
            matrix[range(k), pivots] = 1
            for (i, j), value in zip(free, values):
                matrix[i, j] = value
            yield matrix


class _VectorCoder:
    """Spans of row matrices as sets of integer codes of their non-zero vectors."""

    def __init__(self, field_: type[galois.FieldArray], dim: int) -> None:
        self.field = field_
        self.q = field_.order
        self.weights = self.q ** np.arange(dim - 1, -1, -1, dtype=np.int64)
        self._coefficients: dict[int, galois.FieldArray] = {}

    def coefficients(self, k: int) -> galois.FieldArray:
        if k not in self._coefficients:
            self._coefficients[k] = self.field(np.array(list(product(range(self.q), repeat=k)), dtype=np.int64))
        return self._coefficients[k]

    def span(self, matrix: NDArray[np.int64]) -> ElementSet:
        vectors = (self.coefficients(matrix.shape[0]) @ self.field(matrix)).view(np.ndarray)
        return element_set(int(code) for code in vectors @ self.weights if code)


def _matrix_label(matrix: NDArray[np.int64], q: int) -> str:
    separator = "" if q < 10 else "."
    return "|".join(separator.join(str(int(v)) for v in row) for row in matrix)


@dataclass
class SubspaceInstance(ProviderInstance):
    q: int
    n: int
    subspaces: list[NDArray[np.int64]]

    def expected_dimensions(self) -> tuple[int, int, int] | None:
        return _boolean_dimensions(self.n)

    def expected_homology(self) -> ExpectedHomology | None:
        return ExpectedHomology(degree=2 * self.n - 3, rank=expected_top_rank(self.q, self.n))


def _subspace_poset(
    q: int, dim: int, dimensions: Sequence[int], keep: "_Isotropy | None" = None
) -> tuple[FinitePoset, list[NDArray[np.int64]], list[ElementSet]]:
    field_ = galois.GF(q)
    coder = _VectorCoder(field_, dim)
    matrices: list[NDArray[np.int64]] = []
    spans: list[ElementSet] = []
    for k in dimensions:
        for matrix in _rref_matrices(q, dim, k):
            if keep is not None and not keep.accepts(matrix):
                continue
            matrices.append(matrix)
            spans.append(coder.span(matrix))
    labels = tuple(_matrix_label(matrix, q) for matrix in matrices)
    return inclusion_poset(spans, labels), matrices, spans


def _basis_frames(q: int, n: int, lines: list[NDArray[np.int64]]) -> list[Frame]:
    """Unordered n-sets of lines spanning GF(q)^n, by depth-first search with prefix-rank pruning."""
    field_ = galois.GF(q)
    vectors = [field_(line[0]) for line in lines]
    frames: list[Frame] = []

    def extend(prefix: list[int], start: int) -> None:
        if len(prefix) == n:
            frames.append(Frame(tuple(prefix)))
            return
        for index in range(start, len(lines)):
            stacked = field_(np.stack([vectors[i] for i in prefix + [index]]))
            if np.linalg.matrix_rank(stacked) == len(prefix) + 1:
                extend(prefix + [index], index + 1)

    extend([], 0)
    return frames


def subspace_provider(q: int, n: int, config: ProviderConfig | None = None) -> SubspaceInstance:
    """
    Proper non-zero subspaces of GF(q)^n with the frames given by unordered line bases.

    Args:
        q (int): Prime field size.
        n (int): Dimension, at least 2.
        config (ProviderConfig | None): Enumeration budget.

    Returns:
        SubspaceInstance: Poset ordered by containment, lines listed first.
    """
    config = config or ProviderConfig()
    _check_field(q, n, minimum=2)
    _check_budget(sum(gaussian_binomial(n, k, q) for k in range(1, n)), config.enumeration_budget, f"GF({q})^{n}")

    poset, matrices, _ = _subspace_poset(q, n, range(1, n))
    lines = [matrix for matrix in matrices if matrix.shape[0] == 1]
    frames = _basis_frames(q, n, lines)
    expected = general_linear_order(q, n) // ((q - 1) ** n * factorial(n))
    if len(frames) != expected:
        raise CertificationError(f"GF({q})^{n} produced {len(frames)} frames, expected {expected}")
    logger.info("GF(%d)^%d: %d subspaces, %d frames", q, n, poset.n, len(frames))
    family = FrameFamily(poset=poset, frames=tuple(frames))
    return SubspaceInstance(name=f"subspace(q={q},n={n})", poset=poset, family=family, q=q, n=n, subspaces=matrices)


class MatroidKind(Enum):
    UNIFORM = "uniform"
    FREE = "free"
    BASES = "bases"


@dataclass(frozen=True)
class MatroidSpec:
    kind: MatroidKind
    n: int
    k: int | None = None
    bases: tuple[ElementSet, ...] = ()

    @classmethod
    def uniform(cls, n: int, k: int) -> "MatroidSpec":
        return cls(kind=MatroidKind.UNIFORM, n=n, k=k)

    @classmethod
    def free(cls, n: int) -> "MatroidSpec":
        return cls(kind=MatroidKind.FREE, n=n)

    @classmethod
    def from_bases(cls, n: int, bases: Sequence[Sequence[int]]) -> "MatroidSpec":
        return cls(kind=MatroidKind.BASES, n=n, bases=tuple(sorted(element_set(b) for b in bases)))

    @property
    def name(self) -> str:
        if self.kind is MatroidKind.UNIFORM:
            return f"uniform(n={self.n},k={self.k})"
        if self.kind is MatroidKind.FREE:
            return f"free(n={self.n})"
        return f"bases(n={self.n},count={len(self.bases)})"

    def basis_list(self) -> list[ElementSet]:
        if self.kind is MatroidKind.UNIFORM:
            if self.k is None or not 0 <= self.k <= self.n:
                raise InputError(f"uniform matroid needs 0 <= k <= n, got k={self.k}, n={self.n}")
            return list(combinations(range(self.n), self.k))
        if self.kind is MatroidKind.FREE:
            return [tuple(range(self.n))]
        return list(self.bases)


class Matroid:
    """Matroid on 0..n-1 given by its bases, with rank and closure computed from them."""

    def __init__(self, n: int, bases: Sequence[ElementSet]) -> None:
        if not bases:
            raise InvalidMatroidError("a matroid needs at least one basis")
        if len({len(b) for b in bases}) != 1:
            raise InvalidMatroidError("bases must all have the same size")
        if any(x < 0 or x >= n for b in bases for x in b):
            raise InvalidMatroidError(f"bases must lie in 0..{n - 1}")
        self.n = n
        self.bases = sorted({to_mask(b) for b in bases})
        self.full = (1 << n) - 1
        self.rank_of_matroid = len(bases[0])

    def rank(self, mask: int) -> int:
        return max((mask & basis).bit_count() for basis in self.bases)

    def closure(self, mask: int) -> int:
        r = self.rank(mask)
        result = mask
        for e in range(self.n):
            if not mask >> e & 1 and self.rank(mask | 1 << e) == r:
                result |= 1 << e
        return result

    def is_basis(self, mask: int) -> bool:
        return mask.bit_count() == self.rank_of_matroid and self.rank(mask) == self.rank_of_matroid

    def check_exchange(self) -> None:
        """Exhaustive basis-exchange check."""
        basis_set = set(self.bases)
        for b1 in self.bases:
            for b2 in self.bases:
                for x in iter_mask(b1 & ~b2):
                    if not any((b1 & ~(1 << x)) | (1 << y) in basis_set for y in iter_mask(b2 & ~b1)):
                        raise InvalidMatroidError(
                            f"basis exchange fails for {from_mask(b1)} and {from_mask(b2)} at {x}",
                            witness=(from_mask(b1), from_mask(b2)),
                        )

    def check_rank_axioms(self, samples: int, rng: np.random.Generator) -> None:
        for _ in range(samples):
            a, b = (int(v) for v in rng.integers(0, self.full + 1, size=2))
            e = int(rng.integers(self.n))
            ra, rb = self.rank(a), self.rank(b)
            if self.rank(a | b) + self.rank(a & b) > ra + rb:
                raise InvalidMatroidError("rank is not submodular", witness=(from_mask(a), from_mask(b)))
            if ra > self.rank(a | b):
                raise InvalidMatroidError("rank is not monotone", witness=(from_mask(a), from_mask(b)))
            if not ra <= self.rank(a | 1 << e) <= ra + 1:
                raise InvalidMatroidError("rank does not grow by at most one", witness=(from_mask(a), e))

    def flats(self) -> list[int]:
        """All flats, rank by rank, each level obtained by adding one element to the level below."""
        level = {self.closure(0)}
        found = set(level)
        while level:
            nxt = {self.closure(flat | 1 << e) for flat in level for e in range(self.n) if not flat >> e & 1}
            nxt -= found
            found |= nxt
            level = nxt
        return sorted(found, key=lambda f: (self.rank(f), from_mask(f)))


def _flat_label(members: ElementSet, n: int) -> str:
    separator = "" if n <= 9 else "."
    return separator.join(str(x + 1) for x in members)


@dataclass
class MatroidInstance(ProviderInstance):
    spec: MatroidSpec
    matroid: Matroid
    flats: list[ElementSet] = field(default_factory=list)

    def expected_dimensions(self) -> tuple[int, int, int] | None:
        if self.spec.kind is MatroidKind.BASES:
            return None
        return _boolean_dimensions(self.matroid.rank_of_matroid)

    def expected_homology(self) -> ExpectedHomology | None:
        if self.spec.kind is MatroidKind.FREE:
            return ExpectedHomology(degree=None)
        if self.spec.kind is MatroidKind.UNIFORM and self.spec.k is not None:
            return ExpectedHomology(degree=self.spec.k - 1)
        return None


def matroid_provider(spec: MatroidSpec, config: ProviderConfig | None = None) -> MatroidInstance:
    """
    Proper flats of a matroid with frames made of rank-one flats whose representatives form a basis.

    Args:
        spec (MatroidSpec): Uniform, free, or explicit bases.
        config (ProviderConfig | None): Budget and paranoid transversal checking.

    Returns:
        MatroidInstance: Flats ordered by inclusion, the loop flat and the full flat excluded.
    """
    config = config or ProviderConfig()
    matroid = Matroid(spec.n, spec.basis_list())
    if matroid.rank_of_matroid < 2:
        raise InputError(f"matroid rank must be at least 2, got {matroid.rank_of_matroid}")
    if spec.kind is MatroidKind.BASES and spec.n <= BASIS_EXCHANGE_GROUND_SET_LIMIT:
        matroid.check_exchange()
    matroid.check_rank_axioms(RANK_AXIOM_SAMPLES, np.random.default_rng(DEFAULT_SEED))

    loops = matroid.closure(0)
    proper = [f for f in matroid.flats() if f not in (loops, matroid.full)]
    _check_budget(len(proper), config.enumeration_budget, spec.name)
    flats = [from_mask(f) for f in proper]
    poset = inclusion_poset(flats, tuple(_flat_label(f, spec.n) for f in flats))

    atoms = [i for i, f in enumerate(proper) if matroid.rank(f) == 1]
    non_loops = {i: [x for x in flats[i] if matroid.rank(1 << x) == 1] for i in atoms}
    frames: list[Frame] = []
    for choice in combinations(atoms, matroid.rank_of_matroid):
        if not matroid.is_basis(to_mask(non_loops[i][0] for i in choice)):
            continue
        if config.paranoid and spec.n <= PARANOID_GROUND_SET_LIMIT:
            for transversal in product(*(non_loops[i] for i in choice)):
                if not matroid.is_basis(to_mask(transversal)):
                    raise InvalidMatroidError(f"transversal {transversal} is not a basis", witness=transversal)
        frames.append(Frame(tuple(choice)))
    logger.info("%s: %d proper flats, %d frames", spec.name, len(flats), len(frames))
    family = FrameFamily(poset=poset, frames=tuple(frames))
    return MatroidInstance(
        name=spec.name, poset=poset, family=family, spec=spec, matroid=matroid, flats=flats
    )


def symplectic_form(q: int, n: int) -> galois.FieldArray:
    """Gram matrix of the standard alternating form on GF(q)^(2n)."""
    field_ = galois.GF(q)
    identity, zero = np.eye(n, dtype=np.int64), np.zeros((n, n), dtype=np.int64)
    return field_(np.block([[zero, identity], [(-identity) % q, zero]]))


class _Isotropy:
    def __init__(self, q: int, n: int) -> None:
        self.field = galois.GF(q)
        self.form = symplectic_form(q, n)

    def accepts(self, matrix: NDArray[np.int64]) -> bool:
        basis = self.field(matrix)
        return not np.any(basis @ self.form @ basis.T)


@dataclass
class SymplecticInstance(ProviderInstance):
    q: int
    n: int
    subspaces: list[NDArray[np.int64]]

    def expected_dimensions(self) -> tuple[int, int, int] | None:
        return 3**self.n - 2, 4 * self.n - 3, 2 * self.n - 2


def is_cross_polytope_frame(poset: FinitePoset, frame: Frame) -> bool:
    """
    Whether the join-closure of a frame is the face poset of the boundary of a cross polytope.

    Each frame element must have a unique partner whose join with it is missing; a subset then has a
    join exactly when it contains no partner pair, distinct subsets give distinct joins and joins
    are ordered like the subsets.
    """
    tau = frame.tau
    if len(tau) % 2:
        return False
    joins = subset_joins(poset, tau)
    partner: dict[int, int] = {}
    for a in range(len(tau)):
        missing = [b for b in range(len(tau)) if b != a and joins[1 << a | 1 << b] is None]
        if len(missing) != 1:
            return False
        partner[a] = missing[0]
    pairs = [1 << a | 1 << b for a, b in partner.items() if a < b]
    admissible = [mask for mask in range(1, len(joins)) if not any(mask & pair == pair for pair in pairs)]
    if any(joins[mask] is None for mask in admissible):
        return False
    allowed = set(admissible)
    if any(joins[mask] is not None for mask in range(1, len(joins)) if mask not in allowed):
        return False
    values = [joins[mask] for mask in admissible]
    if len(set(values)) != len(values) or len(values) != 3 ** (len(tau) // 2) - 1:
        return False
    for a, x in zip(admissible, values):
        for b, y in zip(admissible, values):
            assert x is not None and y is not None
            if poset.le(x, y) != (a & b == a):
                return False
    return True


def _symplectic_frames(q: int, n: int, lines: list[NDArray[np.int64]]) -> list[Frame]:
    """Line sets of symplectic bases: pairs with non-zero pairing, orthogonal to every other pair."""
    form = symplectic_form(q, n)
    field_ = galois.GF(q)
    vectors = field_(np.stack([line[0] for line in lines]))
    pairing = (vectors @ form @ vectors.T).view(np.ndarray) != 0
    frames: list[Frame] = []

    def extend(chosen: list[int], last_anchor: int) -> None:
        if len(chosen) == 2 * n:
            frames.append(Frame(element_set(chosen)))
            return
        free = [i for i in range(len(lines)) if i not in chosen and not any(pairing[i, c] for c in chosen)]
        for a in free:
            if a <= last_anchor:
                continue
            for b in free:
                if b > a and pairing[a, b]:
                    extend(chosen + [a, b], a)

    extend([], -1)
    return sorted(frames, key=lambda frame: frame.tau)


def symplectic_provider(q: int, n: int, config: ProviderConfig | None = None) -> SymplecticInstance:
    """
    Non-zero totally isotropic subspaces of the standard symplectic space GF(q)^(2n), with symplectic frames.

    Args:
        q (int): Prime field size.
        n (int): Half the dimension, at least 1.
        config (ProviderConfig | None): Enumeration budget.

    Returns:
        SymplecticInstance: Poset ordered by containment, lines first.
    """
    config = config or ProviderConfig()
    _check_field(q, n, minimum=1)
    _check_budget(
        sum(gaussian_binomial(2 * n, k, q) for k in range(1, n + 1)), config.enumeration_budget, f"Sp({2 * n},{q})"
    )
    poset, matrices, _ = _subspace_poset(q, 2 * n, range(1, n + 1), _Isotropy(q, n))
    lines = [matrix for matrix in matrices if matrix.shape[0] == 1]
    frames = _symplectic_frames(q, n, lines)
    family = FrameFamily(poset=poset, frames=tuple(frames))
    for frame in frames:
        if not is_cross_polytope_frame(poset, frame):
            raise CertificationError(f"frame {frame.tau} does not span a cross polytope")
    logger.info("Sp(%d,%d): %d isotropic subspaces, %d frames", 2 * n, q, poset.n, len(frames))
    return SymplecticInstance(
        name=f"symplectic(q={q},n={n})", poset=poset, family=family, q=q, n=n, subspaces=matrices
    )


class IInstanceProvider(ABC):
    """Interface for sources of posets with frame families."""

    @abstractmethod
    def build(self) -> ProviderInstance:
        pass


@dataclass
class SubspaceProvider(IInstanceProvider):
    q: int
    n: int
    config: ProviderConfig = field(default_factory=ProviderConfig)

    def build(self) -> ProviderInstance:
        return subspace_provider(self.q, self.n, self.config)


@dataclass
class MatroidProvider(IInstanceProvider):
    spec: MatroidSpec
    config: ProviderConfig = field(default_factory=ProviderConfig)

    def build(self) -> ProviderInstance:
        return matroid_provider(self.spec, self.config)


@dataclass
class MatroidBasesFileProvider(IInstanceProvider):
    path: Path
    config: ProviderConfig = field(default_factory=ProviderConfig)

    def build(self) -> ProviderInstance:
        ground, bases = read_matroid_bases(self.path)
        return matroid_provider(MatroidSpec.from_bases(ground, bases), self.config)


@dataclass
class SymplecticProvider(IInstanceProvider):
    q: int
    n: int
    config: ProviderConfig = field(default_factory=ProviderConfig)

    def build(self) -> ProviderInstance:
        return symplectic_provider(self.q, self.n, self.config)


@dataclass
class FileProvider(IInstanceProvider):
    """Instance read from a poset file and a frame file."""

    poset_path: Path
    frames_path: Path

    def build(self) -> ProviderInstance:
        poset = read_poset(self.poset_path)
        family = read_frames(self.frames_path, poset)
        return ProviderInstance(name=f"files({self.poset_path.name})", poset=poset, family=family)
