import logging

from abc import ABC, abstractmethod
from collections.abc import Callable
from dataclasses import dataclass
from enum import Enum
from functools import cached_property

import numpy as np

from commonbasis.constants import (
    DEFAULT_COMPLEX_BUDGET,
    DEFAULT_SAMPLE_SIZE,
    DEFAULT_SEED,
    EXHAUSTIVE_FACE_LIMIT,
)
from commonbasis.elements import ElementSet, element_set, format_element_set
from commonbasis.equivalence import (
    MapKind,
    induced_homology_iso,
    map_m,
    map_u,
    refines,
    verify_composite_bounds,
)
from commonbasis.errors import ExtensionPropertyError, ResourceBudgetError
from commonbasis.frames import (
    DecompositionPoset,
    Frame,
    build_CB,
    build_D,
    build_PD,
    check_EP,
    check_EP_chains,
    check_properties,
    dimension_report,
    height_additivity_violations,
    is_boolean_frame,
    validate_frame,
)
from commonbasis.homology import HomologyResult, face_poset_complex, integral_homology
from commonbasis.poset_core import iter_chains, random_maximal_chain
from commonbasis.providers import MatroidInstance, MatroidKind, ProviderInstance, SubspaceInstance, SymplecticInstance
from commonbasis.providers import is_cross_polytope_frame
from commonbasis.simplicial_complex import SimplicialComplex


logger = logging.getLogger(__name__)


class CheckStatus(Enum):
    PASS = "PASS"
    FAIL = "FAIL"
    SKIP = "SKIP"


@dataclass(frozen=True)
class CheckResult:
    name: str
    status: CheckStatus
    detail: str = ""

    @classmethod
    def of(cls, name: str, passed: bool, detail: str = "") -> "CheckResult":
        return cls(name=name, status=CheckStatus.PASS if passed else CheckStatus.FAIL, detail=detail)

    def line(self) -> str:
        return f"{self.status.value} {self.name}" + (f" {self.detail}" if self.detail else "")


@dataclass
class VerificationContext:
    """Context for a verification suite."""

    instance: ProviderInstance


@dataclass
class VerificationConfig:
    """Configuration for a verification suite."""

    sample_size: int = DEFAULT_SAMPLE_SIZE
    seed: int = DEFAULT_SEED
    exhaustive: bool | None = None
    exhaustive_face_limit: int = EXHAUSTIVE_FACE_LIMIT
    complex_budget: int = DEFAULT_COMPLEX_BUDGET
    threads: int = 1


def _format_homology(result: HomologyResult) -> str:
    return "[" + ";".join(result.report_lines()) + "]"


class VerificationSuite(ABC):
    """Base class for a named family of invariant checks on one instance."""

    name: str = ""

    def __init__(self, context: VerificationContext, config: VerificationConfig) -> None:
        self.instance = context.instance
        self.poset = context.instance.poset
        self.family = context.instance.family
        self.config = config

    @cached_property
    def cb(self) -> SimplicialComplex:
        return build_CB(self.poset, self.family)

    @cached_property
    def pd(self) -> DecompositionPoset:
        return build_PD(self.poset, self.family, self.config.threads)

    @cached_property
    def d(self) -> DecompositionPoset:
        return build_D(self.poset, self.family, self.config.threads)

    @cached_property
    def rng(self) -> np.random.Generator:
        return np.random.default_rng(self.config.seed)

    def is_exhaustive(self, size: int) -> bool:
        if self.config.exhaustive is not None:
            return self.config.exhaustive
        return size <= self.config.exhaustive_face_limit

    @abstractmethod
    def run(self) -> list[CheckResult]:
        pass


class FramesSuite(VerificationSuite):
    name = "frames"

    def run(self) -> list[CheckResult]:
        results: list[CheckResult] = []
        failures = [
            (frame, verdict)
            for frame in self.family.frames
            if not (verdict := validate_frame(self.poset, frame.tau)).valid
        ]
        detail = f"frames={len(self.family.frames)}"
        if failures:
            frame, verdict = failures[0]
            detail = f"{format_element_set(frame.tau)} {verdict.reason} {format_element_set(verdict.witness or ())}"
        results.append(CheckResult.of("frames-valid", not failures, detail))

        shape = self._expected_shape()
        if shape is None:
            results.append(CheckResult("frames-shape", CheckStatus.SKIP, "no closed form for this instance"))
        else:
            label, predicate = shape
            odd = [frame for frame in self.family.frames if not predicate(frame)]
            witness = format_element_set(odd[0].tau) if odd else label
            results.append(CheckResult.of("frames-shape", not odd, witness))
        return results

    def _expected_shape(self) -> tuple[str, Callable[[Frame], bool]] | None:
        if isinstance(self.instance, SymplecticInstance):
            return "cross-polytope", lambda frame: is_cross_polytope_frame(self.poset, frame)
        if isinstance(self.instance, SubspaceInstance) or (
            isinstance(self.instance, MatroidInstance) and self.instance.spec.kind is not MatroidKind.BASES
        ):
            return "boolean", lambda frame: is_boolean_frame(self.poset, frame)
        return None


class ExtensionPropertySuite(VerificationSuite):
    name = "ep"

    def run(self) -> list[CheckResult]:
        sample = None if self.config.exhaustive is not False else self.config.sample_size
        pairs = check_EP(self.poset, self.family, self.pd, sample=sample, rng=self.rng)
        chains = check_EP_chains(self.family, self.pd)
        return [
            CheckResult.of("ep-pairs", pairs.holds, _pair_detail(pairs.witness, pairs.pairs_checked)),
            CheckResult.of("ep-chains", chains.holds, _pair_detail(chains.witness, chains.pairs_checked)),
        ]


def _pair_detail(witness: tuple[ElementSet, ElementSet] | None, checked: int) -> str:
    if witness is None:
        return f"checked={checked}"
    return f"{format_element_set(witness[0])}<{format_element_set(witness[1])}"


class HeightsSuite(VerificationSuite):
    name = "heights"

    def run(self) -> list[CheckResult]:
        violations = height_additivity_violations(self.poset, self.pd)
        detail = format_element_set(violations[0]) if violations else f"checked={len(self.pd)}"
        return [CheckResult.of("heights-additive", not violations, detail)]


class DimensionsSuite(VerificationSuite):
    name = "dims"

    def run(self) -> list[CheckResult]:
        report = dimension_report(self.poset, self.family, self.cb, self.pd, self.d)
        actual = (report.dim_cb, report.dim_pd, report.dim_d)
        results = [
            CheckResult(f"dims-{name}", CheckStatus.SKIP, "not applicable")
            if outcome is None
            else CheckResult.of(f"dims-{name}", outcome)
            for name, outcome in report.checks.items()
        ]
        expected = self.instance.expected_dimensions()
        detail = "cb={} pd={} d={} m={}".format(*actual, report.m)
        if expected is None:
            results.append(CheckResult("dims-closed-form", CheckStatus.SKIP, detail))
        else:
            results.append(CheckResult.of("dims-closed-form", actual == expected, f"{detail} expected={expected}"))
        return results


class CompositeBoundsSuite(VerificationSuite):
    name = "bounds"

    def run(self) -> list[CheckResult]:
        try:
            report = verify_composite_bounds(
                self.poset,
                self.family,
                exhaustive=self.config.exhaustive,
                sample_size=self.config.sample_size,
                seed=self.config.seed,
                cb=self.cb,
                pd=self.pd,
                exhaustive_face_limit=self.config.exhaustive_face_limit,
            )
        except ExtensionPropertyError as error:
            return [CheckResult("bounds", CheckStatus.SKIP, f"extension property fails: {error.witness}")]
        detail = f"mode={report.mode} upper={report.upper_checked} lower={report.lower_checked}"
        if report.violations:
            detail = report.violations[0]
        return [CheckResult.of("bounds", report.passed, detail)]


def _random_subchain(chain: list[ElementSet], rng: np.random.Generator) -> list[ElementSet]:
    keep = rng.random(len(chain)) < 0.5
    keep[int(rng.integers(len(chain)))] = True
    return [link for link, kept in zip(chain, keep) if kept]


class MapMSuite(VerificationSuite):
    name = "m-in-pd"

    def _face_chains(self) -> list[list[ElementSet]]:
        if self.is_exhaustive(sum(self.cb.f_vector)):
            subdivision, faces = face_poset_complex(self.cb)
            return [[faces[i] for i in chain] for by_dim in subdivision.faces for chain in by_dim]
        chains: list[list[ElementSet]] = []
        for _ in range(self.config.sample_size):
            facet = self.cb.facets[int(self.rng.integers(len(self.cb.facets)))]
            order = [int(v) for v in self.rng.permutation(facet)]
            flag = [element_set(order[: i + 1]) for i in range(len(order))]
            chains.append(_random_subchain(flag, self.rng))
        return chains

    def run(self) -> list[CheckResult]:
        membership: str | None = None
        witnessed: str | None = None
        monotone: str | None = None
        chains = self._face_chains()
        for chain in chains:
            image = map_m(self.poset, self.family, chain)
            if image not in self.pd and membership is None:
                membership = f"{format_element_set(image)} from top face {format_element_set(chain[-1])}"
            top = max(chain, key=len)
            containing = self.family.frames_containing(top)
            frame = self.family.frames[(containing & -containing).bit_length() - 1]
            properties = check_properties(self.poset, image, frame)
            if not (properties.p1 and properties.p2) and witnessed is None:
                witnessed = f"{format_element_set(image)} against {format_element_set(frame.tau)}"
            if len(chain) > 1:
                smaller = map_m(self.poset, self.family, chain[:-1])
                if not refines(self.poset, smaller, image) and monotone is None:
                    monotone = f"{format_element_set(smaller)} vs {format_element_set(image)}"
        counted = f"chains={len(chains)}"
        return [
            CheckResult.of("m-in-pd", membership is None, membership or counted),
            CheckResult.of("m-frame-witness", witnessed is None, witnessed or counted),
            CheckResult.of("m-monotone", monotone is None, monotone or counted),
        ]


class MapUSuite(VerificationSuite):
    name = "u-iff-ep"

    def _pd_chains(self) -> list[list[ElementSet]]:
        if self.is_exhaustive(len(self.pd)):
            return [[self.pd.elements[i] for i in chain] for chain in iter_chains(self.pd.order)]
        chains: list[list[ElementSet]] = []
        for _ in range(self.config.sample_size):
            links = self.pd.order.sort_chain(random_maximal_chain(self.pd.order, self.rng))
            chains.append(_random_subchain([self.pd.elements[i] for i in links], self.rng))
        return chains

    def run(self) -> list[CheckResult]:
        verdict = check_EP(self.poset, self.family, self.pd)
        chains = self._pd_chains()
        if verdict.witness is not None:
            chains.append(list(verdict.witness))
        non_face = next((chain for chain in chains if not map_u(self.family, chain).is_face), None)
        detail = f"ep={verdict.holds} chains={len(chains)}"
        if non_face is not None:
            detail += " non-face=" + format_element_set(map_u(self.family, non_face).face)
        return [CheckResult.of("u-iff-ep", verdict.holds == (non_face is None), detail)]


class EquivalenceSuite(VerificationSuite):
    name = "equivalence"

    @cached_property
    def cb_homology(self) -> HomologyResult:
        return integral_homology(self.cb)

    @cached_property
    def pd_homology(self) -> HomologyResult:
        return integral_homology(self.pd.order_complex())

    def homology_check(self) -> CheckResult:
        detail = f"cb={_format_homology(self.cb_homology)} pd={_format_homology(self.pd_homology)}"
        return CheckResult.of("equivalence", self.cb_homology.same_groups(self.pd_homology), detail)

    def induced_map_check(self, which: MapKind) -> CheckResult:
        name = f"{which.value}-iso"
        try:
            report = induced_homology_iso(
                self.poset, self.family, which, budget=self.config.complex_budget, seed=self.config.seed
            )
        except ExtensionPropertyError:
            return CheckResult(name, CheckStatus.SKIP, "extension property fails")
        except ResourceBudgetError as error:
            return CheckResult(name, CheckStatus.SKIP, str(error))
        detail = f"domain={report.betti_domain} codomain={report.betti_codomain} rank={report.induced_rank}"
        return CheckResult.of(name, report.is_iso_everywhere, detail)

    def run(self) -> list[CheckResult]:
        return [self.homology_check(), *(self.induced_map_check(which) for which in MapKind)]


class SphericalSuite(EquivalenceSuite):
    name = "spherical"

    def run(self) -> list[CheckResult]:
        results = [self.homology_check()]
        expected = self.instance.expected_homology()
        result = self.pd_homology
        if expected is None:
            results.append(CheckResult("spherical", CheckStatus.SKIP, "no known homology for this instance"))
            return results
        if expected.contractible:
            results.append(CheckResult.of("spherical", result.is_acyclic, _format_homology(result)))
            return results
        concentrated = result.concentrated_in() == expected.degree and result.is_torsion_free
        if expected.rank is not None:
            concentrated = concentrated and result.rank_in(expected.degree or 0) == expected.rank
        detail = f"degree={expected.degree} rank={expected.rank} got={_format_homology(result)}"
        results.append(CheckResult.of("spherical", concentrated, detail))
        return results


SUITES: dict[str, type[VerificationSuite]] = {
    suite.name: suite
    for suite in (
        FramesSuite,
        ExtensionPropertySuite,
        HeightsSuite,
        DimensionsSuite,
        CompositeBoundsSuite,
        MapMSuite,
        MapUSuite,
        EquivalenceSuite,
        SphericalSuite,
    )
}


def run_suite(name: str, context: VerificationContext, config: VerificationConfig) -> list[CheckResult]:
    """
    Run one named suite.

    Args:
        name (str): Key of SUITES.
        context (VerificationContext): Instance under test.
        config (VerificationConfig): Sampling and budget settings.

    Returns:
        list[CheckResult]: One result per check, in a fixed order.
    """
    suite = SUITES[name](context, config)
    results = suite.run()
    for result in results:
        if result.status is CheckStatus.FAIL:
            logger.warning("%s failed on %s: %s", result.name, context.instance.name, result.detail)
    return results
