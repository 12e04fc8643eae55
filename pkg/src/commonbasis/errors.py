from typing import Any


class CommonBasisError(Exception):
    """Base class for every error raised by commonbasis."""


class InputError(CommonBasisError, ValueError):
    """Raised when an operation receives arguments outside its domain."""

    def __init__(self, message: str, witness: Any = None) -> None:
        super().__init__(message)
        self.witness = witness


class InvalidPosetError(InputError):
    """Raised when a relation is not a partial order, e.g. the cover digraph has a cycle."""


class InvalidFrameError(InputError):
    """Raised when a frame fails the antichain or meet-closure condition."""


class InvalidMatroidError(InputError):
    """Raised when a basis list or rank function violates the matroid axioms."""


class FileFormatError(InputError):
    """Raised when an input file cannot be parsed."""

    def __init__(self, message: str, path: str | None = None, line_number: int | None = None) -> None:
        location = f"{path}:{line_number}: " if path is not None and line_number is not None else ""
        super().__init__(f"{location}{message}")
        self.path = path
        self.line_number = line_number


class ExtensionPropertyError(CommonBasisError):
    """Raised when an operation requiring the extension property runs on a family without it."""

    def __init__(self, message: str, witness: Any = None) -> None:
        super().__init__(message)
        self.witness = witness


class ResourceBudgetError(CommonBasisError, RuntimeError):
    """Raised when an enumeration or complex size exceeds its configured budget."""


class CertificationError(CommonBasisError, ArithmeticError):
    """Raised when modular rank computations over independent primes keep disagreeing."""
