import logging

from collections.abc import Iterable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import InitVar, dataclass, field
from functools import cached_property
from typing import NamedTuple

import numpy as np

from sympy.utilities.iterables import multiset_partitions

from commonbasis.constants import DEFAULT_SEED
from commonbasis.elements import ElementSet, element_set, format_element_set, iter_mask, to_mask
from commonbasis.errors import InputError, InvalidFrameError
from commonbasis.poset_core import FinitePoset, iter_maximal_chains, lower_bound_sets, order_complex, principal_top
from commonbasis.simplicial_complex import SimplicialComplex


logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Frame:
    """An antichain playing the role of a basis."""

    tau: ElementSet

    def __post_init__(self) -> None:
        if not self.tau:
            raise InputError("a frame must be non-empty")
        if list(self.tau) != sorted(set(self.tau)):
            raise InputError(f"frame {self.tau} is not a sorted duplicate-free element set")

    def __len__(self) -> int:
        return len(self.tau)


@dataclass(frozen=True)
class FrameVerdict:
    valid: bool
    witness: ElementSet | None = None
    reason: str = ""


class Properties(NamedTuple):
    p1: bool
    p2: bool
    p3: bool


def subset_joins(poset: FinitePoset, tau: ElementSet) -> list[int | None]:
    """Join of every subset of tau indexed by its bitmask over positions in tau; index 0 is unused."""
    everything = (1 << poset.n) - 1
    upper = [everything] * (1 << len(tau))
    joins: list[int | None] = [None] * (1 << len(tau))
    for mask in range(1, 1 << len(tau)):
        low = (mask & -mask).bit_length() - 1
        upper[mask] = upper[mask & (mask - 1)] & poset.up_masks[tau[low]]
        for candidate in iter_mask(upper[mask]):
            if poset.up_masks[candidate] & upper[mask] == upper[mask]:
                joins[mask] = candidate
                break
    return joins


def sigma_of(poset: FinitePoset, frame: Frame) -> ElementSet:
    """
    All joins of non-empty subsets of a frame that exist in the poset.

    Args:
        poset (FinitePoset): Ambient poset.
        frame (Frame): The frame.

    Returns:
        ElementSet: The join-closure of the frame, which contains the frame itself.
    """
    poset.check_members(frame.tau)
    return element_set(j for j in subset_joins(poset, frame.tau)[1:] if j is not None)


def validate_frame(poset: FinitePoset, tau: Iterable[int]) -> FrameVerdict:
    """
    Check that tau is an antichain whose join-closure is closed under existing meets.

    Every subset of the join-closure with a common lower bound must have a meet lying in the
    join-closure. Distinct lower-bound sets are explored breadth first, so each is tested once.

    Args:
        poset (FinitePoset): Ambient poset.
        tau (Iterable[int]): Candidate frame.

    Returns:
        FrameVerdict: Validity, plus the comparable pair or offending subset on failure.
    """
    members = poset.check_members(tau)
    for i, x in enumerate(members):
        for y in members[i + 1 :]:
            if poset.comparable(x, y):
                return FrameVerdict(valid=False, witness=(x, y), reason="not an antichain")

    sigma = sigma_of(poset, Frame(members))
    sigma_mask = to_mask(sigma)
    seen = lower_bound_sets(poset, sigma)
    for lower, generators in sorted(seen.items(), key=lambda item: (len(item[1]), item[1])):
        meet = principal_top(poset, lower)
        if meet is None:
            return FrameVerdict(valid=False, witness=generators, reason="meet does not exist")
        if not sigma_mask >> meet & 1:
            return FrameVerdict(valid=False, witness=generators, reason="meet lies outside the join-closure")
    return FrameVerdict(valid=True)


def check_properties(poset: FinitePoset, sigma: Iterable[int], frame: Frame) -> Properties:
    """Evaluate the membership, at-most-one-cover and at-least-one-cover properties of sigma against a frame."""
    members = poset.check_members(sigma)
    closure = set(sigma_of(poset, frame))
    covering = [sum(1 for y in members if poset.le(x, y)) for x in frame.tau]
    return Properties(
        p1=all(y in closure for y in members),
        p2=all(count <= 1 for count in covering),
        p3=all(count >= 1 for count in covering),
    )


def is_boolean_frame(poset: FinitePoset, frame: Frame) -> bool:
    """Whether the join-closure of the frame is the proper part of the Boolean lattice on the frame."""
    joins = subset_joins(poset, frame.tau)
    full = len(joins) - 1
    proper = [j for j in joins[1:full] if j is not None]
    if joins[full] is not None or len(proper) != full - 1 or len(set(proper)) != len(proper):
        return False
    for a in range(1, full):
        for b in range(1, full):
            if poset.le(proper[a - 1], proper[b - 1]) != (a & b == a):
                return False
    return True


@dataclass(frozen=True, eq=False)
class FrameFamily:
    """Non-empty family of frames of a poset."""

    poset: FinitePoset
    frames: tuple[Frame, ...]
    validate: InitVar[bool] = True

    def __post_init__(self, validate: bool) -> None:
        if not self.frames:
            raise InputError("a frame family must be non-empty")
        if len(set(self.frames)) != len(self.frames):
            raise InputError("a frame family must not repeat frames")
        if not validate:
            return
        for frame in self.frames:
            verdict = validate_frame(self.poset, frame.tau)
            if not verdict.valid:
                raise InvalidFrameError(f"frame {frame.tau} is invalid: {verdict.reason}", witness=verdict)

    @cached_property
    def sigmas(self) -> tuple[ElementSet, ...]:
        return tuple(sigma_of(self.poset, frame) for frame in self.frames)

    @cached_property
    def frames_by_element(self) -> tuple[int, ...]:
        """For every element, the bitmask of frames whose join-closure contains it."""
        masks = [0] * self.poset.n
        for f, sigma in enumerate(self.sigmas):
            for x in sigma:
                masks[x] |= 1 << f
        return tuple(masks)

    @property
    def m(self) -> int:
        return max(len(frame) for frame in self.frames)

    def frames_containing(self, members: Iterable[int]) -> int:
        """Bitmask of frames whose join-closure contains every member."""
        mask = (1 << len(self.frames)) - 1
        for x in members:
            mask &= self.frames_by_element[x]
        return mask

    def is_basis_compatible(self, members: Iterable[int]) -> bool:
        return self.frames_containing(members) != 0


@dataclass(eq=False)
class DecompositionPoset:
    """Partial decompositions ordered by refinement."""

    elements: list[ElementSet]
    order: FinitePoset
    witnesses: list[int] = field(default_factory=list)

    @cached_property
    def index(self) -> dict[ElementSet, int]:
        return {sigma: i for i, sigma in enumerate(self.elements)}

    def __len__(self) -> int:
        return len(self.elements)

    def __contains__(self, sigma: object) -> bool:
        return sigma in self.index

    @property
    def dimension(self) -> int:
        return max(self.order.heights, default=0) - 1

    def order_complex(self) -> SimplicialComplex:
        return order_complex(self.order)


def refinement_poset(ambient: FinitePoset, elements: Sequence[ElementSet]) -> FinitePoset:
    """Order sigma <= sigma' iff every member of sigma lies below some member of sigma'."""
    members = np.zeros((len(elements), ambient.n), dtype=np.float32)
    below = np.zeros((len(elements), ambient.n), dtype=np.float32)
    for i, sigma in enumerate(elements):
        members[i, list(sigma)] = 1.0
        below[i, :] = ambient.leq[:, list(sigma)].any(axis=1)
    escaping = members @ (1.0 - below).T
    labels = tuple(format_element_set(sigma, ambient.labels) for sigma in elements)
    return FinitePoset(n=len(elements), leq=escaping == 0, labels=labels, check=False)


def _decompositions_of(poset: FinitePoset, frame: Frame) -> list[ElementSet]:
    joins = subset_joins(poset, frame.tau)
    position = {x: i for i, x in enumerate(frame.tau)}
    found: set[ElementSet] = set()
    for partition in multiset_partitions(list(frame.tau)):
        block_joins = [joins[sum(1 << position[x] for x in block)] for block in partition]
        if any(j is None for j in block_joins):
            continue
        sigma = element_set(j for j in block_joins if j is not None)
        if check_properties(poset, sigma, frame).p2:
            found.add(sigma)
    return sorted(found)


def build_D(poset: FinitePoset, family: FrameFamily, threads: int = 1) -> DecompositionPoset:
    """
    Decompositions: the joins of the blocks of set partitions of frames, kept when no frame element
    lies below two of them.

    Args:
        poset (FinitePoset): Ambient poset.
        family (FrameFamily): Frames.
        threads (int): Worker threads for the per-frame enumeration.

    Returns:
        DecompositionPoset: The deduplicated decompositions, canonically sorted.
    """
    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        per_frame = list(pool.map(lambda frame: _decompositions_of(poset, frame), family.frames))

    witness: dict[ElementSet, int] = {}
    for f, decompositions in enumerate(per_frame):
        for sigma in decompositions:
            witness.setdefault(sigma, f)
    elements = sorted(witness)
    logger.info("built %d decompositions from %d frames", len(elements), len(family.frames))
    return DecompositionPoset(
        elements=elements, order=refinement_poset(poset, elements), witnesses=[witness[s] for s in elements]
    )


def build_PD(poset: FinitePoset, family: FrameFamily, threads: int = 1) -> DecompositionPoset:
    """Partial decompositions: every non-empty subset of a decomposition."""
    decompositions = build_D(poset, family, threads)
    witness: dict[ElementSet, int] = {}
    for sigma, f in zip(decompositions.elements, decompositions.witnesses):
        for mask in range(1, 1 << len(sigma)):
            witness.setdefault(tuple(sigma[i] for i in iter_mask(mask)), f)
    elements = sorted(witness)
    logger.info("built %d partial decompositions", len(elements))
    return DecompositionPoset(
        elements=elements, order=refinement_poset(poset, elements), witnesses=[witness[s] for s in elements]
    )


def build_CB(poset: FinitePoset, family: FrameFamily) -> SimplicialComplex:
    """
    Common basis complex: its facets are the inclusion-maximal join-closures of the frames.

    Args:
        poset (FinitePoset): Ambient poset.
        family (FrameFamily): Frames.

    Returns:
        SimplicialComplex: Faces are exactly the basis-compatible sets.
    """
    complex_ = SimplicialComplex.from_simplices(poset.n, family.sigmas)
    logger.info("common basis complex has %d facets, dimension %d", len(complex_.facets), complex_.dimension)
    return complex_


@dataclass(frozen=True)
class EPVerdict:
    holds: bool
    witness: tuple[ElementSet, ElementSet] | None = None
    pairs_checked: int = 0


def _shared_frame_matrix(family: FrameFamily, pd: DecompositionPoset) -> np.ndarray:
    membership = np.zeros((len(pd), len(family.frames)), dtype=np.float32)
    for i, sigma in enumerate(pd.elements):
        mask = family.frames_containing(sigma)
        membership[i, list(iter_mask(mask))] = 1.0
    return (membership @ membership.T) > 0


def check_EP(
    poset: FinitePoset,
    family: FrameFamily,
    pd: DecompositionPoset | None = None,
    sample: int | None = None,
    rng: np.random.Generator | None = None,
) -> EPVerdict:
    """
    Extension property: every comparable pair of partial decompositions shares a witnessing frame.

    Args:
        poset (FinitePoset): Ambient poset.
        family (FrameFamily): Frames.
        pd (DecompositionPoset | None): Prebuilt partial decompositions.
        sample (int | None): Check this many random comparable pairs instead of all of them.
        rng (np.random.Generator | None): Generator for sampling; seeded with the default seed when omitted.

    Returns:
        EPVerdict: Verdict and the first failing pair in canonical order.
    """
    pd = pd if pd is not None else build_PD(poset, family)
    comparable = np.asarray(pd.order.leq) & ~np.eye(len(pd), dtype=bool)
    pairs = np.argwhere(comparable)
    if sample is not None and sample < len(pairs):
        rng = rng if rng is not None else np.random.default_rng(DEFAULT_SEED)
        pairs = pairs[np.sort(rng.choice(len(pairs), size=sample, replace=False))]
    shared = _shared_frame_matrix(family, pd)
    for i, j in pairs:
        if not shared[i, j]:
            return EPVerdict(holds=False, witness=(pd.elements[i], pd.elements[j]), pairs_checked=len(pairs))
    return EPVerdict(holds=True, pairs_checked=len(pairs))


def check_EP_chains(family: FrameFamily, pd: DecompositionPoset) -> EPVerdict:
    """Every maximal chain of partial decompositions has a single frame witnessing all its links."""
    checked = 0
    for chain in iter_maximal_chains(pd.order):
        checked += 1
        union = element_set(x for link in chain for x in pd.elements[link])
        if not family.is_basis_compatible(union):
            links = pd.order.sort_chain(chain)
            witness = (pd.elements[links[0]], pd.elements[links[-1]])
            return EPVerdict(holds=False, witness=witness, pairs_checked=checked)
    return EPVerdict(holds=True, pairs_checked=checked)


@dataclass
class DimensionReport:
    dim_cb: int
    dim_pd: int
    dim_d: int
    m: int
    extension_property: bool
    boolean: bool
    checks: dict[str, bool | None]

    @property
    def bounds_ok(self) -> bool:
        return all(result is not False for result in self.checks.values())


def dimension_report(
    poset: FinitePoset,
    family: FrameFamily,
    cb: SimplicialComplex | None = None,
    pd: DecompositionPoset | None = None,
    d: DecompositionPoset | None = None,
) -> DimensionReport:
    """
    Dimensions of the three objects and the bounds relating them to the largest frame size m.

    Bounds that need the extension property are reported as None when it fails; the Boolean
    equalities are None unless every frame has size m and a Boolean join-closure.

    Returns:
        DimensionReport: Dimensions and named checks.
    """
    cb = cb if cb is not None else build_CB(poset, family)
    pd = pd if pd is not None else build_PD(poset, family)
    d = d if d is not None else build_D(poset, family)
    m = family.m
    ep = check_EP(poset, family, pd).holds
    boolean = all(len(frame) == m and is_boolean_frame(poset, frame) for frame in family.frames)
    dim_cb, dim_pd, dim_d = cb.dimension, pd.dimension, d.dimension

    checks: dict[str, bool | None] = {
        "cb_lower": m - 1 <= dim_cb,
        "cb_upper": dim_cb <= 2**m - 2,
        "d_upper": dim_d <= m - 1 if ep else None,
        "pd_lower": m - 1 <= dim_pd if ep else None,
        "pd_upper": dim_pd <= 2 * m - 2 if ep else None,
        "cb_boolean": dim_cb == 2**m - 3 if boolean else None,
        "pd_boolean": dim_pd == 2 * m - 3 if boolean and ep else None,
        "d_boolean": dim_d == m - 2 if boolean and ep else None,
    }
    return DimensionReport(
        dim_cb=dim_cb, dim_pd=dim_pd, dim_d=dim_d, m=m, extension_property=ep, boolean=boolean, checks=checks
    )


def frame_partition_interval(poset: FinitePoset, frame: Frame) -> list[ElementSet]:
    """Decompositions obtained by merging blocks of a single frame, the frame itself included."""
    return _decompositions_of(poset, frame)


def height_additivity_violations(poset: FinitePoset, pd: DecompositionPoset) -> list[ElementSet]:
    """Partial decompositions whose join exists but whose height differs from the sum of their heights."""
    violations: list[ElementSet] = []
    for sigma in pd.elements:
        upper = poset.upper_bounds_mask(sigma)
        join = next((j for j in iter_mask(upper) if poset.up_masks[j] & upper == upper), None)
        if join is not None and poset.heights[join] != sum(poset.heights[x] for x in sigma):
            violations.append(sigma)
    return violations

