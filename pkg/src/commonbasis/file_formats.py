from collections.abc import Iterator
from pathlib import Path

from commonbasis.elements import ElementSet
from commonbasis.errors import FileFormatError, InvalidPosetError
from commonbasis.frames import Frame, FrameFamily
from commonbasis.poset_core import FinitePoset, build_poset
from commonbasis.simplicial_complex import SimplicialComplex


def _records(path: Path) -> Iterator[tuple[int, list[str]]]:
    """Yield the whitespace-split tokens of every non-blank, non-comment line with its line number."""
    try:
        raw = path.read_bytes()
    except OSError as error:
        raise FileFormatError(f"cannot read {path}: {error.strerror}") from error
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as error:
        number = raw.count(b"\n", 0, error.start) + 1
        raise FileFormatError(f"invalid UTF-8 byte {raw[error.start]:#04x}", str(path), number) from error
    for number, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if stripped and not stripped.startswith("#"):
            yield number, stripped.split()


def _integers(tokens: list[str], path: Path, number: int) -> list[int]:
    try:
        values = [int(token) for token in tokens]
    except ValueError as error:
        raise FileFormatError(f"expected integers, got {' '.join(tokens)!r}", str(path), number) from error
    if any(value < 0 for value in values):
        raise FileFormatError("indices must be non-negative", str(path), number)
    return values


def _ascending(values: list[int], path: Path, number: int) -> ElementSet:
    if not values:
        raise FileFormatError("expected at least one index", str(path), number)
    if any(a >= b for a, b in zip(values, values[1:])):
        raise FileFormatError("indices must be strictly ascending", str(path), number)
    return tuple(values)


def read_poset(path: Path) -> FinitePoset:
    """
    Parse a poset file made of a POSET header, optional LABEL lines and COVER lines.

    Args:
        path (Path): File to read.

    Returns:
        FinitePoset: The closure of the listed covers.
    """
    n: int | None = None
    labels: dict[int, str] = {}
    covers: dict[tuple[int, int], int] = {}
    for number, tokens in _records(path):
        keyword, arguments = tokens[0], tokens[1:]
        if keyword == "POSET":
            if n is not None:
                raise FileFormatError("repeated POSET header", str(path), number)
            if len(arguments) != 1:
                raise FileFormatError("POSET takes one element count", str(path), number)
            n = _integers(arguments, path, number)[0]
            continue
        if n is None:
            raise FileFormatError(f"{keyword} before the POSET header", str(path), number)
        if keyword == "LABEL":
            if len(arguments) != 2:
                raise FileFormatError("LABEL takes an index and a token", str(path), number)
            index = _integers(arguments[:1], path, number)[0]
            if index >= n:
                raise FileFormatError(f"label index {index} outside 0..{n - 1}", str(path), number)
            if index in labels:
                raise FileFormatError(f"repeated label for element {index}", str(path), number)
            labels[index] = arguments[1]
        elif keyword == "COVER":
            if len(arguments) != 2:
                raise FileFormatError("COVER takes two indices", str(path), number)
            i, j = _integers(arguments, path, number)
            if i >= n or j >= n:
                raise FileFormatError(f"cover ({i}, {j}) outside 0..{n - 1}", str(path), number)
            if (i, j) in covers:
                raise FileFormatError(f"duplicate cover ({i}, {j}), first on line {covers[(i, j)]}", str(path), number)
            covers[(i, j)] = number
        else:
            raise FileFormatError(f"unknown keyword {keyword}", str(path), number)

    if n is None:
        raise FileFormatError(f"{path}: missing POSET header")
    label_tuple = tuple(labels.get(i, str(i)) for i in range(n)) if labels else None
    try:
        return build_poset(n, covers, label_tuple)
    except InvalidPosetError as error:
        raise FileFormatError(f"{path}: {error}") from error


def write_poset(poset: FinitePoset, path: Path) -> None:
    lines = [f"POSET {poset.n}"]
    if poset.labels is not None:
        lines += [f"LABEL {i} {label}" for i, label in enumerate(poset.labels)]
    lines += [f"COVER {i} {j}" for i, j in sorted(poset.covers)]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_frames(path: Path, poset: FinitePoset) -> FrameFamily:
    """Parse FRAME lines into a validated frame family over the given poset."""
    frames: list[Frame] = []
    for number, tokens in _records(path):
        if tokens[0] != "FRAME":
            raise FileFormatError(f"unknown keyword {tokens[0]}", str(path), number)
        tau = _ascending(_integers(tokens[1:], path, number), path, number)
        if tau[-1] >= poset.n:
            raise FileFormatError(f"frame index {tau[-1]} outside 0..{poset.n - 1}", str(path), number)
        frames.append(Frame(tau))
    if not frames:
        raise FileFormatError(f"{path}: no FRAME lines")
    return FrameFamily(poset=poset, frames=tuple(frames))


def write_frames(family: FrameFamily, path: Path) -> None:
    lines = ["FRAME " + " ".join(str(x) for x in frame.tau) for frame in family.frames]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_facets(path: Path) -> SimplicialComplex:
    """Parse a facet file, one ascending vertex list per line."""
    facets: list[ElementSet] = []
    for number, tokens in _records(path):
        facets.append(_ascending(_integers(tokens, path, number), path, number))
    num_vertices = 1 + max((facet[-1] for facet in facets), default=-1)
    return SimplicialComplex.from_simplices(num_vertices, facets)


def write_facets(complex_: SimplicialComplex, path: Path) -> None:
    lines = [" ".join(str(v) for v in facet) for facet in complex_.facets]
    path.write_text("".join(line + "\n" for line in lines), encoding="utf-8")


def read_matroid_bases(path: Path) -> tuple[int, list[ElementSet]]:
    """
    Parse a matroid given by its bases.

    Args:
        path (Path): File with a GROUND line followed by BASIS lines.

    Returns:
        tuple[int, list[ElementSet]]: Ground set size and the bases.
    """
    ground: int | None = None
    bases: list[ElementSet] = []
    for number, tokens in _records(path):
        keyword, arguments = tokens[0], tokens[1:]
        if keyword == "GROUND":
            if ground is not None or len(arguments) != 1:
                raise FileFormatError("expected a single GROUND line with one size", str(path), number)
            ground = _integers(arguments, path, number)[0]
        elif keyword == "BASIS":
            if ground is None:
                raise FileFormatError("BASIS before the GROUND line", str(path), number)
            basis = _ascending(_integers(arguments, path, number), path, number)
            if basis[-1] >= ground:
                raise FileFormatError(f"basis element {basis[-1]} outside 0..{ground - 1}", str(path), number)
            bases.append(basis)
        else:
            raise FileFormatError(f"unknown keyword {keyword}", str(path), number)
    if ground is None:
        raise FileFormatError(f"{path}: missing GROUND line")
    return ground, bases
