import pytest

from commonbasis.constants import DEFAULT_SEED
from commonbasis.providers import MatroidInstance, ProviderInstance, SubspaceInstance, SymplecticInstance
from commonbasis.verification import (
    SUITES,
    CheckResult,
    CheckStatus,
    VerificationConfig,
    VerificationContext,
    run_suite,
)


def run(name: str, instance: ProviderInstance, **overrides: int) -> dict[str, CheckResult]:
    config = VerificationConfig(threads=1, **overrides)
    return {result.name: result for result in run_suite(name, VerificationContext(instance=instance), config)}


def statuses(results: dict[str, CheckResult]) -> dict[str, CheckStatus]:
    return {name: result.status for name, result in results.items()}


def test_registry_lists_every_suite() -> None:
    assert list(SUITES) == [
        "frames",
        "ep",
        "heights",
        "dims",
        "bounds",
        "m-in-pd",
        "u-iff-ep",
        "equivalence",
        "spherical",
    ]


def test_check_result_lines() -> None:
    # Arrange
    passed = CheckResult.of("ep-pairs", True, "checked=4")
    failed = CheckResult.of("ep-pairs", False)

    # Act / Assert
    assert passed.line() == "PASS ep-pairs checked=4"
    assert failed.line() == "FAIL ep-pairs"


def test_frames_suite_on_subspaces(gf2_3: SubspaceInstance) -> None:
    # Act
    results = run("frames", gf2_3)

    # Assert
    assert statuses(results) == {"frames-valid": CheckStatus.PASS, "frames-shape": CheckStatus.PASS}
    assert results["frames-valid"].detail == "frames=28"


def test_frames_suite_on_symplectic(symplectic_2_1: SymplecticInstance) -> None:
    # Act
    results = run("frames", symplectic_2_1)

    # Assert
    assert results["frames-shape"].status is CheckStatus.PASS
    assert results["frames-shape"].detail == "cross-polytope"


def test_frames_suite_skips_shape_for_file_instances(no_extension: ProviderInstance) -> None:
    # Act
    results = run("frames", no_extension)

    # Assert
    assert results["frames-valid"].status is CheckStatus.PASS
    assert results["frames-shape"].status is CheckStatus.SKIP


def test_ep_suite_reports_witness(no_extension: ProviderInstance) -> None:
    # Act
    results = run("ep", no_extension)

    # Assert
    assert results["ep-pairs"].status is CheckStatus.FAIL
    assert results["ep-pairs"].detail == "{0}<{2}"


def test_ep_suite_passes_for_subspaces(gf2_3: SubspaceInstance) -> None:
    assert set(statuses(run("ep", gf2_3)).values()) == {CheckStatus.PASS}


def test_heights_suite(gf2_3: SubspaceInstance) -> None:
    assert run("heights", gf2_3)["heights-additive"].status is CheckStatus.PASS


def test_dims_suite_matches_closed_form(gf2_3: SubspaceInstance) -> None:
    # Act
    results = run("dims", gf2_3)

    # Assert
    assert results["dims-closed-form"].status is CheckStatus.PASS
    assert results["dims-closed-form"].detail.startswith("cb=5 pd=3 d=1 m=3")
    assert all(result.status is CheckStatus.PASS for result in results.values())


def test_dims_suite_skips_extension_bounds(no_extension: ProviderInstance) -> None:
    # Act
    results = run("dims", no_extension)

    # Assert
    assert results["dims-pd_upper"].status is CheckStatus.SKIP
    assert results["dims-closed-form"].status is CheckStatus.SKIP
    assert CheckStatus.FAIL not in statuses(results).values()


def test_bounds_suite_exhaustive(gf2_2: SubspaceInstance) -> None:
    # Act
    result = run("bounds", gf2_2)["bounds"]

    # Assert
    assert result.status is CheckStatus.PASS
    assert result.detail.startswith("mode=exhaustive")


def test_bounds_suite_skips_without_extension_property(no_extension: ProviderInstance) -> None:
    # Act
    result = run("bounds", no_extension)["bounds"]

    # Assert
    assert result.status is CheckStatus.SKIP
    assert result.detail.startswith("extension property fails")


def test_m_suite_exhaustive_on_gf2_2(gf2_2: SubspaceInstance) -> None:
    # Act
    results = run("m-in-pd", gf2_2)

    # Assert
    assert set(statuses(results).values()) == {CheckStatus.PASS}
    assert results["m-in-pd"].detail == "chains=12"


@pytest.mark.slow
def test_m_suite_sampled_on_gf2_3(gf2_3: SubspaceInstance) -> None:
    # Act
    results = run("m-in-pd", gf2_3, sample_size=10_000, seed=DEFAULT_SEED)

    # Assert
    assert set(statuses(results).values()) == {CheckStatus.PASS}
    assert results["m-in-pd"].detail == "chains=10000"


@pytest.mark.parametrize(
    "name",
    [
        "gf2_2",
        "gf3_2",
        pytest.param("gf2_3", marks=pytest.mark.slow),
        "free_3",
        pytest.param("free_4", marks=pytest.mark.slow),
        "uniform_4_2",
        "uniform_5_3",
        "symplectic_2_1",
    ],
)
def test_u_suite_on_extension_instances(name: str, request: pytest.FixtureRequest) -> None:
    # Arrange
    instance: ProviderInstance = request.getfixturevalue(name)

    # Act
    result = run("u-iff-ep", instance, sample_size=10_000, seed=DEFAULT_SEED)["u-iff-ep"]

    # Assert
    assert result.status is CheckStatus.PASS
    assert "ep=True" in result.detail
    assert "non-face" not in result.detail


def test_u_suite_flags_non_face(no_extension: ProviderInstance) -> None:
    # Act
    result = run("u-iff-ep", no_extension)["u-iff-ep"]

    # Assert
    assert result.status is CheckStatus.PASS
    assert "ep=False" in result.detail
    assert "non-face={0,2}" in result.detail


def test_equivalence_suite_on_uniform_matroid(uniform_4_2: MatroidInstance) -> None:
    # Act
    results = run("equivalence", uniform_4_2)

    # Assert
    assert results["equivalence"].status is CheckStatus.PASS
    assert "H~1 rank=3" in results["equivalence"].detail
    assert results["u-iso"].status is CheckStatus.PASS
    assert results["m-iso"].status is CheckStatus.PASS


def test_equivalence_suite_skips_induced_maps_over_budget(gf2_3: SubspaceInstance) -> None:
    # Act
    results = run("equivalence", gf2_3, complex_budget=1_000)

    # Assert
    assert results["equivalence"].status is CheckStatus.PASS
    assert results["u-iso"].status is CheckStatus.SKIP
    assert results["m-iso"].status is CheckStatus.SKIP


def test_spherical_suite(gf3_2: SubspaceInstance, free_3: MatroidInstance) -> None:
    # Act
    subspace = run("spherical", gf3_2)
    free = run("spherical", free_3)

    # Assert
    assert subspace["spherical"].status is CheckStatus.PASS
    assert free["spherical"].status is CheckStatus.PASS


def test_spherical_suite_skips_unknown_instances(symplectic_2_1: SymplecticInstance) -> None:
    assert run("spherical", symplectic_2_1)["spherical"].status is CheckStatus.SKIP


@pytest.mark.slow
def test_u_suite_on_symplectic_rank_two(symplectic_2_2: SymplecticInstance) -> None:
    # Act
    result = run("u-iff-ep", symplectic_2_2, sample_size=1_000)["u-iff-ep"]

    # Assert
    assert result.status is CheckStatus.PASS
    assert "ep=False" in result.detail
    assert "non-face=" in result.detail
