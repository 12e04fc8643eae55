import heapq
import logging

from collections import defaultdict
from collections.abc import Callable, Mapping, Sequence
from dataclasses import dataclass, field
from itertools import permutations

import numpy as np
import scipy.sparse as sp

from scipy.sparse.csgraph import connected_components
from sympy import isprime, nextprime

from commonbasis.constants import CERTIFICATION_ATTEMPTS, CERTIFICATION_PRIME_BITS, DEFAULT_SEED
from commonbasis.elements import ElementSet
from commonbasis.errors import CertificationError, InputError
from commonbasis.simplicial_complex import SimplicialComplex


logger = logging.getLogger(__name__)

SparseColumn = dict[int, int]


@dataclass
class IntegerMatrix:
    """Exact integer matrix stored sparsely by column."""

    rows: int
    cols: int
    columns: list[SparseColumn]

    def __post_init__(self) -> None:
        if len(self.columns) != self.cols:
            raise InputError(f"expected {self.cols} columns, got {len(self.columns)}")
        for column in self.columns:
            for row, value in column.items():
                if not 0 <= row < self.rows:
                    raise InputError(f"row index {row} outside 0..{self.rows - 1}")
                if value == 0:
                    raise InputError("sparse columns must not store zero entries")

    @classmethod
    def from_dense(cls, data: Sequence[Sequence[int]], cols: int | None = None) -> "IntegerMatrix":
        width = len(data[0]) if data else (cols or 0)
        columns = [{i: int(row[j]) for i, row in enumerate(data) if row[j]} for j in range(width)]
        return cls(rows=len(data), cols=width, columns=columns)

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "IntegerMatrix":
        return cls(rows=rows, cols=cols, columns=[{} for _ in range(cols)])

    def to_dense(self) -> list[list[int]]:
        dense = [[0] * self.cols for _ in range(self.rows)]
        for j, column in enumerate(self.columns):
            for i, value in column.items():
                dense[i][j] = value
        return dense

    @property
    def nnz(self) -> int:
        return sum(len(column) for column in self.columns)

    def is_zero(self) -> bool:
        return not any(self.columns)

    def __matmul__(self, other: "IntegerMatrix") -> "IntegerMatrix":
        if self.cols != other.rows:
            raise InputError(f"cannot multiply {self.rows}x{self.cols} by {other.rows}x{other.cols}")
        product: list[SparseColumn] = []
        for column in other.columns:
            result: SparseColumn = defaultdict(int)
            for k, factor in column.items():
                for i, value in self.columns[k].items():
                    result[i] += factor * value
            product.append({i: value for i, value in result.items() if value})
        return IntegerMatrix(rows=self.rows, cols=other.cols, columns=product)


@dataclass(frozen=True)
class SmithForm:
    rank: int
    invariant_factors: tuple[int, ...]


@dataclass(frozen=True)
class HomologyResult:
    """Reduced integral homology, one entry per degree 0..dim."""

    betti: tuple[int, ...]
    torsion: tuple[tuple[int, ...], ...]
    empty: bool = False

    def __post_init__(self) -> None:
        if len(self.betti) != len(self.torsion):
            raise InputError("Betti numbers and torsion must cover the same degrees")
        for factors in self.torsion:
            if any(d <= 1 for d in factors) or any(b % a for a, b in zip(factors, factors[1:])):
                raise InputError(f"torsion {factors} is not a divisor chain of factors above one")

    @property
    def is_torsion_free(self) -> bool:
        return not any(self.torsion)

    @property
    def is_acyclic(self) -> bool:
        return not self.empty and not any(self.betti) and self.is_torsion_free

    def concentrated_in(self) -> int | None:
        """The single degree carrying homology, or None when zero or several degrees do."""
        degrees = [k for k in range(len(self.betti)) if self.betti[k] or self.torsion[k]]
        return degrees[0] if len(degrees) == 1 else None

    def rank_in(self, degree: int) -> int:
        return self.betti[degree] if 0 <= degree < len(self.betti) else 0

    def groups(self) -> dict[int, tuple[int, tuple[int, ...]]]:
        """Non-trivial groups as degree -> (rank, torsion); the empty complex has its group in degree -1."""
        found = {k: (b, t) for k, (b, t) in enumerate(zip(self.betti, self.torsion)) if b or t}
        if self.empty:
            found[-1] = (1, ())
        return found

    def same_groups(self, other: "HomologyResult") -> bool:
        """Equality of homology regardless of the dimensions of the two complexes."""
        return self.groups() == other.groups()

    def report_lines(self) -> list[str]:
        lines: list[str] = []
        if self.empty:
            lines.append("H~-1 rank=1")
        for k, (rank, factors) in enumerate(zip(self.betti, self.torsion)):
            line = f"H~{k} rank={rank}"
            if factors:
                line += " torsion=" + ",".join(str(d) for d in factors)
            lines.append(line)
        return lines


@dataclass
class ChainMap:
    domain: SimplicialComplex
    codomain: SimplicialComplex
    matrices: list[IntegerMatrix]


@dataclass
class InducedMapReport:
    """Rational ranks of the homology of both sides and of the induced map, per degree."""

    betti_domain: list[int]
    betti_codomain: list[int]
    induced_rank: list[int]
    primes: tuple[int, ...] = field(default=())

    @property
    def is_iso(self) -> list[bool]:
        return [
            a == b == r for a, b, r in zip(self.betti_domain, self.betti_codomain, self.induced_rank, strict=True)
        ]

    @property
    def is_iso_everywhere(self) -> bool:
        return all(self.is_iso)


def boundary_matrix(complex_: SimplicialComplex, k: int) -> IntegerMatrix:
    """
    Boundary operator from k-faces to (k-1)-faces.

    Args:
        complex_ (SimplicialComplex): The complex.
        k (int): Degree, 1 <= k <= dim.

    Returns:
        IntegerMatrix: Rows index (k-1)-faces and columns index k-faces in sorted order.
    """
    if not 1 <= k <= complex_.dimension:
        raise InputError(f"boundary degree {k} outside 1..{complex_.dimension}")
    lower = complex_.face_index[k - 1]
    columns: list[SparseColumn] = []
    for face in complex_.faces[k]:
        column: SparseColumn = {}
        for i in range(len(face)):
            column[lower[face[:i] + face[i + 1 :]]] = -1 if i % 2 else 1
        columns.append(column)
    return IntegerMatrix(rows=len(lower), cols=len(columns), columns=columns)


def _augmentation(complex_: SimplicialComplex) -> IntegerMatrix:
    count = len(complex_.faces[0]) if complex_.faces else 0
    return IntegerMatrix(rows=1, cols=count, columns=[{0: 1} for _ in range(count)])


def _augmented_boundaries(complex_: SimplicialComplex) -> list[IntegerMatrix]:
    """Entry k is the boundary out of degree k, entry 0 being the augmentation."""
    if complex_.is_empty:
        return []
    return [_augmentation(complex_)] + [boundary_matrix(complex_, k) for k in range(1, complex_.dimension + 1)]


def _eliminate_unit_pivots(cols: dict[int, SparseColumn], rows: dict[int, set[int]]) -> int:
    """Pivot on +-1 entries, sparsest columns first, deleting each pivot row and column."""
    heap = [(len(column), j) for j, column in cols.items()]
    heapq.heapify(heap)
    pivots = 0
    while heap:
        length, j = heapq.heappop(heap)
        column = cols.get(j)
        if column is None or len(column) != length:
            continue
        unit_rows = [i for i, value in column.items() if value in (1, -1)]
        if not unit_rows:
            continue
        r = min(unit_rows, key=lambda i: (len(rows[i]), i))
        unit = column[r]
        for other in sorted(rows[r] - {j}):
            target = cols[other]
            coefficient = -target[r] * unit
            for i, value in column.items():
                updated = target.get(i, 0) + coefficient * value
                if updated:
                    target[i] = updated
                    rows[i].add(other)
                else:
                    del target[i]
                    rows[i].discard(other)
            if target:
                heapq.heappush(heap, (len(target), other))
            else:
                del cols[other]
        for i in column:
            rows[i].discard(j)
        del cols[j]
        rows.pop(r, None)
        pivots += 1
    return pivots


def _swap_columns(a: list[list[int]], j1: int, j2: int) -> None:
    for row in a:
        row[j1], row[j2] = row[j2], row[j1]


def _dense_invariant_factors(a: list[list[int]]) -> list[int]:
    """Diagonalise a small dense integer matrix in place by minimal-magnitude pivoting."""
    m = len(a)
    n = len(a[0]) if a else 0
    diagonal: list[int] = []
    for t in range(min(m, n)):
        entries = [(abs(a[i][j]), i, j) for i in range(t, m) for j in range(t, n) if a[i][j]]
        if not entries:
            break
        _, i, j = min(entries)
        a[t], a[i] = a[i], a[t]
        _swap_columns(a, t, j)
        while True:
            pivot = a[t][t]
            for i in range(t + 1, m):
                if a[i][t]:
                    q = a[i][t] // pivot
                    a[i] = [x - q * y for x, y in zip(a[i], a[t])]
            for j in range(t + 1, n):
                if a[t][j]:
                    q = a[t][j] // pivot
                    for row in a:
                        row[j] -= q * row[t]
            remainders = [(abs(a[i][t]), i, t) for i in range(t + 1, m) if a[i][t]]
            remainders += [(abs(a[t][j]), t, j) for j in range(t + 1, n) if a[t][j]]
            if remainders:
                _, i, j = min(remainders)
                if j == t:
                    a[t], a[i] = a[i], a[t]
                else:
                    _swap_columns(a, t, j)
                continue
            offender = next((i for i in range(t + 1, m) for j in range(t + 1, n) if a[i][j] % pivot), None)
            if offender is None:
                break
            a[t] = [x + y for x, y in zip(a[t], a[offender])]
        diagonal.append(abs(a[t][t]))
    return diagonal


def smith_normal_form(matrix: IntegerMatrix) -> SmithForm:
    """
    Rank and invariant factors of an integer matrix.

    Unit pivots are eliminated sparsely first; the residual core, whose entries are all
    non-units, is diagonalised densely.

    Args:
        matrix (IntegerMatrix): Input matrix, left untouched.

    Returns:
        SmithForm: Rank over the rationals and the factors d_1 | d_2 | ... | d_rank.
    """
    cols = {j: dict(column) for j, column in enumerate(matrix.columns) if column}
    rows: dict[int, set[int]] = defaultdict(set)
    for j, column in cols.items():
        for i in column:
            rows[i].add(j)

    units = _eliminate_unit_pivots(cols, rows)
    core_rows = sorted({i for column in cols.values() for i in column})
    core_cols = sorted(cols)
    logger.debug("SNF %dx%d: %d unit pivots, residual core %dx%d", matrix.rows, matrix.cols, units,
                 len(core_rows), len(core_cols))

    position = {i: k for k, i in enumerate(core_rows)}
    dense = [[0] * len(core_cols) for _ in core_rows]
    for k, j in enumerate(core_cols):
        for i, value in cols[j].items():
            dense[position[i]][k] = value
    factors = [1] * units + _dense_invariant_factors(dense)

    if any(b % a for a, b in zip(factors, factors[1:])):
        raise CertificationError(f"invariant factors {factors} do not form a divisor chain")
    return SmithForm(rank=len(factors), invariant_factors=tuple(factors))


def _reduce_mod_p(columns: Sequence[SparseColumn], p: int, track: bool = False) -> tuple[int, list[SparseColumn]]:
    """
    Column-reduce a matrix over the field of p elements.

    Returns:
        tuple[int, list[SparseColumn]]: The rank, and when tracking a kernel basis expressed in
            the original column coordinates.
    """
    pivots: dict[int, tuple[SparseColumn, SparseColumn]] = {}
    kernel: list[SparseColumn] = []
    rank = 0
    for j, original in enumerate(columns):
        column = {i: v % p for i, v in original.items() if v % p}
        combination: SparseColumn = {j: 1} if track else {}
        while column:
            low = max(column)
            if low not in pivots:
                break
            other, other_combination = pivots[low]
            factor = column[low] * pow(other[low], -1, p) % p
            for i, value in other.items():
                updated = (column.get(i, 0) - factor * value) % p
                if updated:
                    column[i] = updated
                else:
                    column.pop(i, None)
            if track:
                for i, value in other_combination.items():
                    updated = (combination.get(i, 0) - factor * value) % p
                    if updated:
                        combination[i] = updated
                    else:
                        combination.pop(i, None)
        if column:
            pivots[max(column)] = (column, combination)
            rank += 1
        elif track:
            kernel.append(combination)
    return rank, kernel


def _check_prime(p: int) -> None:
    if not isprime(p):
        raise InputError(f"modulus {p} is not prime")


def _check_chain_complex(boundaries: Sequence[IntegerMatrix]) -> None:
    for k in range(1, len(boundaries)):
        if not (boundaries[k - 1] @ boundaries[k]).is_zero():
            raise CertificationError(f"boundary squared is non-zero in degree {k}")


def _components_minus_one(complex_: SimplicialComplex) -> int:
    vertices = complex_.face_index[0]
    edges = complex_.faces[1] if complex_.dimension >= 1 else []
    rows = np.asarray([vertices[(a,)] for a, _ in edges], dtype=np.int64)
    cols = np.asarray([vertices[(b,)] for _, b in edges], dtype=np.int64)
    graph = sp.coo_matrix((np.ones(len(edges)), (rows, cols)), shape=(len(vertices), len(vertices)))
    count, _ = connected_components(graph, directed=False)
    return int(count) - 1


def integral_homology(complex_: SimplicialComplex) -> HomologyResult:
    """
    Reduced integral homology from Smith normal forms of the boundary matrices.

    Args:
        complex_ (SimplicialComplex): The complex.

    Returns:
        HomologyResult: Reduced Betti numbers and torsion per degree; the empty complex is flagged.
    """
    if complex_.is_empty:
        return HomologyResult(betti=(), torsion=(), empty=True)
    boundaries = _augmented_boundaries(complex_)
    _check_chain_complex(boundaries)
    logger.info("homology of a %d-dimensional complex with f-vector %s", complex_.dimension, complex_.f_vector)

    forms = [smith_normal_form(matrix) for matrix in boundaries]
    ranks = [form.rank for form in forms] + [0]
    betti = tuple(complex_.f_vector[k] - ranks[k] - ranks[k + 1] for k in range(complex_.dimension + 1))
    torsion = tuple(
        tuple(d for d in forms[k + 1].invariant_factors if d > 1) if k + 1 < len(forms) else ()
        for k in range(complex_.dimension + 1)
    )

    euler = sum((-1) ** k * f for k, f in enumerate(complex_.f_vector))
    if euler != 1 + sum((-1) ** k * b for k, b in enumerate(betti)):
        raise CertificationError(f"Euler characteristic {euler} disagrees with Betti numbers {betti}")
    if betti[0] != (components := _components_minus_one(complex_)):
        raise CertificationError(f"reduced H0 rank {betti[0]} disagrees with {components} extra components")
    return HomologyResult(betti=betti, torsion=torsion)


def betti_mod_p(complex_: SimplicialComplex, p: int) -> list[int]:
    """Reduced Betti numbers with coefficients in the field of p elements."""
    _check_prime(p)
    if complex_.is_empty:
        return []
    ranks = [_reduce_mod_p(matrix.columns, p)[0] for matrix in _augmented_boundaries(complex_)] + [0]
    return [complex_.f_vector[k] - ranks[k] - ranks[k + 1] for k in range(complex_.dimension + 1)]


def _permutation_sign(values: Sequence[int]) -> int:
    sign = 1
    items = list(values)
    for i in range(len(items)):
        for j in range(i + 1, len(items)):
            if items[i] > items[j]:
                sign = -sign
    return sign


def chain_map_from_vertex_map(
    domain: SimplicialComplex, codomain: SimplicialComplex, vertex_map: Mapping[int, int] | Sequence[int]
) -> ChainMap:
    """
    Chain map induced by a simplicial vertex map; degenerate simplices map to zero.

    Args:
        domain (SimplicialComplex): Source complex.
        codomain (SimplicialComplex): Target complex.
        vertex_map (Mapping[int, int] | Sequence[int]): Image of each domain vertex.

    Returns:
        ChainMap: One matrix per domain degree.
    """
    image_of: Callable[[int], int] = vertex_map.__getitem__
    matrices: list[IntegerMatrix] = []
    for k, faces in enumerate(domain.faces):
        rows = len(codomain.faces[k]) if k <= codomain.dimension else 0
        columns: list[SparseColumn] = []
        for face in faces:
            image = [image_of(v) for v in face]
            simplex = tuple(sorted(set(image)))
            if not codomain.contains_face(simplex):
                raise InputError(f"vertex map sends simplex {face} to non-simplex {simplex}", witness=face)
            if len(simplex) < len(image):
                columns.append({})
            else:
                columns.append({codomain.face_index[k][simplex]: _permutation_sign(image)})
        matrices.append(IntegerMatrix(rows=rows, cols=len(columns), columns=columns))

    for k in range(1, len(matrices)):
        if k <= codomain.dimension:
            lhs = boundary_matrix(codomain, k) @ matrices[k]
        else:
            lhs = IntegerMatrix.zeros(matrices[k - 1].rows, matrices[k].cols)
        rhs = matrices[k - 1] @ boundary_matrix(domain, k)
        if lhs != rhs:
            raise CertificationError(f"chain map does not commute with the boundary in degree {k}")
    return ChainMap(domain=domain, codomain=codomain, matrices=matrices)


def _induced_ranks_mod_p(chain_map: ChainMap, p: int) -> InducedMapReport:
    domain_boundaries = _augmented_boundaries(chain_map.domain)
    codomain_boundaries = _augmented_boundaries(chain_map.codomain)
    degrees = max(chain_map.domain.dimension, chain_map.codomain.dimension) + 1

    def boundary_columns(boundaries: list[IntegerMatrix], k: int) -> list[SparseColumn]:
        return boundaries[k].columns if k < len(boundaries) else []

    betti_domain: list[int] = []
    betti_codomain: list[int] = []
    induced: list[int] = []
    for k in range(degrees):
        cycles: list[SparseColumn] = []
        if k < len(domain_boundaries):
            _, cycles = _reduce_mod_p(domain_boundaries[k].columns, p, track=True)
        domain_rank_above = _reduce_mod_p(boundary_columns(domain_boundaries, k + 1), p)[0]
        betti_domain.append(len(cycles) - domain_rank_above)

        codomain_size = len(chain_map.codomain.faces[k]) if k <= chain_map.codomain.dimension else 0
        codomain_rank = _reduce_mod_p(boundary_columns(codomain_boundaries, k), p)[0] if codomain_size else 0
        boundaries_above = boundary_columns(codomain_boundaries, k + 1)
        codomain_rank_above = _reduce_mod_p(boundaries_above, p)[0]
        betti_codomain.append(codomain_size - codomain_rank - codomain_rank_above)

        images: list[SparseColumn] = []
        for cycle in cycles:
            image: SparseColumn = defaultdict(int)
            for j, coefficient in cycle.items():
                for i, value in chain_map.matrices[k].columns[j].items():
                    image[i] = (image[i] + coefficient * value) % p
            images.append({i: v for i, v in image.items() if v})
        combined = _reduce_mod_p(list(boundaries_above) + images, p)[0]
        induced.append(combined - codomain_rank_above)
    return InducedMapReport(betti_domain=betti_domain, betti_codomain=betti_codomain, induced_rank=induced)


def homology_map_is_iso(chain_map: ChainMap, seed: int = DEFAULT_SEED) -> InducedMapReport:
    """
    Decide per degree whether a chain map induces an isomorphism on rational reduced homology.

    Ranks are computed modulo two random large primes; the result is accepted once both agree.

    Args:
        chain_map (ChainMap): Map built by chain_map_from_vertex_map.
        seed (int): Seed for prime selection.

    Returns:
        InducedMapReport: Betti numbers of both sides and the rank of the induced map.
    """
    rng = np.random.default_rng(seed)
    low, high = 1 << (CERTIFICATION_PRIME_BITS - 1), 1 << CERTIFICATION_PRIME_BITS
    for attempt in range(CERTIFICATION_ATTEMPTS):
        primes = tuple(int(nextprime(int(rng.integers(low, high)))) for _ in range(2))
        first, second = (_induced_ranks_mod_p(chain_map, p) for p in primes)
        if (first.betti_domain, first.betti_codomain, first.induced_rank) == (
            second.betti_domain,
            second.betti_codomain,
            second.induced_rank,
        ):
            first.primes = primes
            return first
        logger.warning("rank certification attempt %d disagreed for primes %s", attempt + 1, primes)
    raise CertificationError(f"induced ranks disagreed across {CERTIFICATION_ATTEMPTS} prime pairs")


def face_poset_complex(complex_: SimplicialComplex) -> tuple[SimplicialComplex, list[ElementSet]]:
    """
    Barycentric subdivision: the order complex of the face poset.

    Returns:
        tuple[SimplicialComplex, list[ElementSet]]: The subdivision and its vertices, i.e. the faces
            of the input listed by dimension then index.
    """
    faces = [face for by_dimension in complex_.faces for face in by_dimension]
    vertex_of = {face: i for i, face in enumerate(faces)}
    flags: set[ElementSet] = set()
    for facet in complex_.facets:
        for order in permutations(facet):
            flags.add(tuple(sorted(vertex_of[tuple(sorted(order[: i + 1]))] for i in range(len(order)))))
    return SimplicialComplex(num_vertices=len(faces), facets=tuple(sorted(flags))), faces


def complex_size(complex_: SimplicialComplex) -> int:
    return sum(complex_.f_vector)
