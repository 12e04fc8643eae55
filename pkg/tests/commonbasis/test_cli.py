from pathlib import Path

import pytest

from commonbasis.cli import resolve_threads, run
from commonbasis.constants import THREADS_ENV_VAR
from commonbasis.errors import InputError


def test_expected_rank(capsys: pytest.CaptureFixture[str]) -> None:
    # Act
    code = run(["expected-rank", "--q", "2", "--n", "3"])

    # Assert
    assert code == 0
    assert capsys.readouterr().out == "8\n"


def test_build_then_homology(tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
    # Arrange
    out = tmp_path / "t.fct"

    # Act
    build_code = run(["build", "--provider", "subspace", "--q", "2", "--n", "2", "--emit", "cb", "--out", str(out)])
    capsys.readouterr()
    homology_code = run(["homology", "--facets", str(out)])

    # Assert
    assert (build_code, homology_code) == (0, 0)
    assert capsys.readouterr().out == "H~0 rank=0\nH~1 rank=1\n"


def test_homology_mod_p(tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
    # Arrange
    facets = tmp_path / "circle.fct"
    facets.write_text("0 1\n0 2\n1 2\n")

    # Act
    code = run(["homology", "--facets", str(facets), "--mod", "3"])

    # Assert
    assert code == 0
    assert capsys.readouterr().out == "H~0 rank=0\nH~1 rank=1\n"


def test_verify_equivalence_on_uniform_matroid(capsys: pytest.CaptureFixture[str]) -> None:
    # Act
    code = run(["verify", "equivalence", "--provider", "matroid-uniform", "--n", "4", "--k", "2", "--threads", "1"])

    # Assert
    lines = capsys.readouterr().out.splitlines()
    assert code == 0
    assert lines[0] == "# suite=equivalence instance=uniform(n=4,k=2) seed=0xc0ffee"
    assert lines[1].startswith("PASS equivalence")
    assert "H~1 rank=3" in lines[1]


def test_verify_reports_violation(tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
    # Arrange
    poset = tmp_path / "p.pos"
    frames = tmp_path / "p.frm"
    poset.write_text("POSET 4\nCOVER 0 2\n")
    frames.write_text("FRAME 0 1\nFRAME 2 3\n")

    # Act
    code = run(["verify", "ep", "--provider", "files", "--poset", str(poset), "--frames", str(frames)])

    # Assert
    out = capsys.readouterr().out
    assert code == 1
    assert "FAIL ep-pairs {0}<{2}" in out


def test_verify_output_is_deterministic(capsys: pytest.CaptureFixture[str]) -> None:
    # Arrange
    argv = ["verify", "bounds", "--provider", "matroid-uniform", "--n", "4", "--k", "2", "--seed", "7"]

    # Act
    run([*argv, "--threads", "1"])
    first = capsys.readouterr().out
    run([*argv, "--threads", "3"])
    second = capsys.readouterr().out

    # Assert
    assert first == second
    assert "seed=0x7" in first


def test_build_poset_round_trips_through_files(tmp_path: Path) -> None:
    # Arrange
    out = tmp_path / "gf22.pos"
    again = tmp_path / "again.pos"

    # Act
    first = run(["build", "--provider", "subspace", "--q", "2", "--n", "2", "--emit", "poset", "--out", str(out)])
    frames = out.with_suffix(".frm")
    second = run(
        ["build", "--provider", "files", "--poset", str(out), "--frames", str(frames), "--emit", "poset",
         "--out", str(again)]
    )

    # Assert
    assert (first, second) == (0, 0)
    assert again.read_text() == out.read_text()
    assert again.with_suffix(".frm").read_text() == frames.read_text()


@pytest.mark.parametrize("emit", ["pd", "d", "pd-complex", "d-complex"])
def test_build_emits_decomposition_objects(tmp_path: Path, emit: str) -> None:
    # Arrange
    out = tmp_path / f"{emit}.out"

    # Act
    code = run(["build", "--provider", "matroid-uniform", "--n", "4", "--k", "2", "--emit", emit, "--out", str(out)])

    # Assert
    assert code == 0
    assert out.read_text()


def test_missing_provider_arguments_are_input_errors() -> None:
    assert run(["build", "--provider", "subspace", "--q", "2", "--emit", "cb", "--out", "x.fct"]) == 2


def test_mixed_inputs_are_rejected(tmp_path: Path) -> None:
    # Act
    code = run(["verify", "ep", "--provider", "subspace", "--q", "2", "--n", "2", "--poset", str(tmp_path / "p")])

    # Assert
    assert code == 2


def test_unknown_subcommand_is_usage_error() -> None:
    assert run(["frobnicate"]) == 2


def test_budget_exceeded_exit_code(tmp_path: Path) -> None:
    # Act
    code = run(
        ["build", "--provider", "subspace", "--q", "2", "--n", "4", "--budget", "10", "--emit", "cb", "--out",
         str(tmp_path / "x.fct")]
    )

    # Assert
    assert code == 3


def test_malformed_facet_file(tmp_path: Path) -> None:
    # Arrange
    facets = tmp_path / "bad.fct"
    facets.write_text("0 x\n")

    # Act / Assert
    assert run(["homology", "--facets", str(facets)]) == 2


def test_resolve_threads(monkeypatch: pytest.MonkeyPatch) -> None:
    # Arrange
    monkeypatch.setenv(THREADS_ENV_VAR, "5")

    # Act / Assert
    assert resolve_threads(None) == 5
    assert resolve_threads(2) == 2
    monkeypatch.setenv(THREADS_ENV_VAR, "many")
    with pytest.raises(InputError):
        resolve_threads(None)


def test_non_utf8_facet_file_is_input_error(tmp_path: Path) -> None:
    # Arrange
    facets = tmp_path / "binary.fct"
    facets.write_bytes(b"0 1\n\xff 2\n")

    # Act / Assert
    assert run(["homology", "--facets", str(facets)]) == 2
