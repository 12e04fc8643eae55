from pathlib import Path

import pytest

from commonbasis.errors import FileFormatError, InputError
from commonbasis.file_formats import (
    read_facets,
    read_frames,
    read_matroid_bases,
    read_poset,
    write_facets,
    write_frames,
    write_poset,
)
from commonbasis.providers import SubspaceInstance
from commonbasis.simplicial_complex import SimplicialComplex


def write(tmp_path: Path, name: str, text: str) -> Path:
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


def test_read_poset_with_labels_and_comments(tmp_path: Path) -> None:
    # Arrange
    path = write(tmp_path, "chain.pos", "# a chain\nPOSET 3\nLABEL 0 bottom\n\nCOVER 0 1\nCOVER 1 2\n")

    # Act
    poset = read_poset(path)

    # Assert
    assert poset.n == 3
    assert poset.le(0, 2)
    assert poset.labels == ("bottom", "1", "2")


@pytest.mark.parametrize(
    ("text", "line"),
    [
        ("COVER 0 1\n", 1),
        ("POSET 2\nPOSET 2\n", 2),
        ("POSET 2\nCOVER 0 2\n", 2),
        ("POSET 2\nCOVER 0 1\nCOVER 0 1\n", 3),
        ("POSET 2\nLABEL 0 a\nLABEL 0 b\n", 3),
        ("POSET 2\nEDGE 0 1\n", 2),
        ("POSET 2\nCOVER 0 x\n", 2),
    ],
)
def test_read_poset_rejects_malformed_lines(tmp_path: Path, text: str, line: int) -> None:
    # Arrange
    path = write(tmp_path, "bad.pos", text)

    # Act
    with pytest.raises(FileFormatError) as error:
        read_poset(path)

    # Assert
    assert error.value.line_number == line
    assert str(error.value).startswith(f"{path}:{line}: ")


def test_read_poset_reports_cycle(tmp_path: Path) -> None:
    # Arrange
    path = write(tmp_path, "cycle.pos", "POSET 2\nCOVER 0 1\nCOVER 1 0\n")

    # Act / Assert
    with pytest.raises(FileFormatError, match="cycle"):
        read_poset(path)


def test_read_poset_requires_header(tmp_path: Path) -> None:
    with pytest.raises(FileFormatError, match="missing POSET header"):
        read_poset(write(tmp_path, "empty.pos", "# nothing\n"))


def test_missing_file_is_a_format_error(tmp_path: Path) -> None:
    with pytest.raises(InputError):
        read_poset(tmp_path / "absent.pos")


def test_poset_and_frames_round_trip(tmp_path: Path, gf2_3: SubspaceInstance) -> None:
    # Arrange
    poset_path, frames_path = tmp_path / "gf23.pos", tmp_path / "gf23.frm"
    write_poset(gf2_3.poset, poset_path)
    write_frames(gf2_3.family, frames_path)

    # Act
    poset = read_poset(poset_path)
    family = read_frames(frames_path, poset)
    write_poset(poset, tmp_path / "again.pos")

    # Assert
    assert (tmp_path / "again.pos").read_text() == poset_path.read_text()
    assert family.frames == gf2_3.family.frames


def test_read_frames_rejects_out_of_range_index(tmp_path: Path, gf2_3: SubspaceInstance) -> None:
    # Arrange
    path = write(tmp_path, "bad.frm", "FRAME 0 1 2\nFRAME 0 1 99\n")

    # Act
    with pytest.raises(FileFormatError) as error:
        read_frames(path, gf2_3.poset)

    # Assert
    assert error.value.line_number == 2


def test_read_frames_rejects_descending_indices(tmp_path: Path, gf2_3: SubspaceInstance) -> None:
    with pytest.raises(FileFormatError, match="ascending"):
        read_frames(write(tmp_path, "bad.frm", "FRAME 2 1 0\n"), gf2_3.poset)


def test_facets_round_trip(tmp_path: Path, rp2: SimplicialComplex) -> None:
    # Arrange
    path = tmp_path / "rp2.fct"

    # Act
    write_facets(rp2, path)
    loaded = read_facets(path)

    # Assert
    assert loaded.facets == rp2.facets
    assert loaded.num_vertices == 6


def test_read_facets_of_empty_file(tmp_path: Path) -> None:
    # Act
    complex_ = read_facets(write(tmp_path, "empty.fct", ""))

    # Assert
    assert complex_.is_empty
    assert complex_.dimension == -1


def test_read_matroid_bases(tmp_path: Path) -> None:
    # Arrange
    path = write(tmp_path, "m.bas", "# U(3,2)\nGROUND 3\nBASIS 0 1\nBASIS 0 2\nBASIS 1 2\n")

    # Act
    ground, bases = read_matroid_bases(path)

    # Assert
    assert ground == 3
    assert bases == [(0, 1), (0, 2), (1, 2)]


def test_read_matroid_bases_requires_ground_first(tmp_path: Path) -> None:
    with pytest.raises(FileFormatError, match="before the GROUND line"):
        read_matroid_bases(write(tmp_path, "m.bas", "BASIS 0 1\nGROUND 3\n"))


def test_invalid_utf8_is_a_format_error(tmp_path: Path) -> None:
    # Arrange
    path = tmp_path / "bad.fct"
    path.write_bytes(b"0 1\n\xff 2\n")

    # Act
    with pytest.raises(FileFormatError) as error:
        read_facets(path)

    # Assert
    assert error.value.line_number == 2
    assert "0xff" in str(error.value)
