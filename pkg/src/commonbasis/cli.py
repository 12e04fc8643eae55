"""
Batch command-line front end.

Subcommands build provider instances and export their complexes, compute homology of facet files,
run the named verification suites and print expected top ranks. Exit codes: 0 success, 1 a check
failed, 2 usage or input error, 3 resource budget exceeded.
"""

import argparse
import logging
import os
import sys

from collections.abc import Sequence
from dataclasses import replace
from pathlib import Path

from dotenv import load_dotenv

from commonbasis.constants import (
    COMPLEX_BUDGET_ENV_VAR,
    DEFAULT_COMPLEX_BUDGET,
    DEFAULT_ENUMERATION_BUDGET,
    DEFAULT_SAMPLE_SIZE,
    DEFAULT_SEED,
    EXHAUSTIVE_FACE_LIMIT,
    THREADS_ENV_VAR,
)
from commonbasis.elements import format_element_set
from commonbasis.errors import CertificationError, ExtensionPropertyError, InputError, ResourceBudgetError
from commonbasis.file_formats import read_facets, write_facets, write_frames, write_poset
from commonbasis.frames import DecompositionPoset, build_CB, build_D, build_PD
from commonbasis.homology import betti_mod_p, integral_homology
from commonbasis.providers import (
    FileProvider,
    IInstanceProvider,
    MatroidBasesFileProvider,
    MatroidProvider,
    MatroidSpec,
    ProviderConfig,
    SubspaceProvider,
    SymplecticProvider,
    expected_top_rank,
)
from commonbasis.verification import SUITES, CheckStatus, VerificationConfig, VerificationContext, run_suite


logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VIOLATION = 1
EXIT_INPUT = 2
EXIT_BUDGET = 3

PROVIDERS = ("subspace", "matroid-uniform", "matroid-free", "matroid-bases", "symplectic", "files")
EMIT_CHOICES = ("cb", "pd", "d", "poset", "pd-complex", "d-complex")
LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def _add_instance_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--provider", choices=PROVIDERS, required=True)
    parser.add_argument("--q", type=int, help="field size (a prime)")
    parser.add_argument("--n", type=int, help="dimension, ground set size or symplectic rank")
    parser.add_argument("--k", type=int, help="rank of a uniform matroid")
    parser.add_argument("--bases", type=Path, help="matroid basis file")
    parser.add_argument("--poset", type=Path, help="poset file")
    parser.add_argument("--frames", type=Path, help="frame file")
    parser.add_argument("--budget", type=int, default=DEFAULT_ENUMERATION_BUDGET, help="enumeration budget")
    parser.add_argument("--paranoid", action="store_true", help="cross-check frames by brute force")
    parser.add_argument("--threads", type=int, help=f"worker threads (default: ${THREADS_ENV_VAR} or CPU count)")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="commonbasis", description=__doc__.strip().splitlines()[0])
    parser.add_argument("-v", "--verbose", action="count", default=0, help="-v for INFO, -vv for DEBUG")
    commands = parser.add_subparsers(dest="command", required=True)

    build = commands.add_parser("build", help="build an instance and export one of its complexes or posets")
    _add_instance_arguments(build)
    build.add_argument("--emit", choices=EMIT_CHOICES, required=True)
    build.add_argument("--out", type=Path, required=True)

    homology = commands.add_parser("homology", help="reduced homology of a facet file")
    homology.add_argument("--facets", type=Path, required=True)
    homology.add_argument("--mod", type=int, help="compute Betti numbers over GF(p) instead of the integers")

    verify = commands.add_parser("verify", help="run a named verification suite")
    verify.add_argument("suite", choices=tuple(SUITES))
    _add_instance_arguments(verify)
    verify.add_argument("--sample", type=int, default=DEFAULT_SAMPLE_SIZE, help="sample size for sampled checks")
    verify.add_argument("--seed", type=lambda value: int(value, 0), default=DEFAULT_SEED)
    verify.add_argument("--exhaustive", action="store_true", help="never fall back to sampling")

    expected = commands.add_parser("expected-rank", help="rank of the top homology of the GF(q)^n instance")
    expected.add_argument("--q", type=int, required=True)
    expected.add_argument("--n", type=int, required=True)
    return parser


def _require(args: argparse.Namespace, *names: str) -> None:
    missing = [f"--{name}" for name in names if getattr(args, name) is None]
    if missing:
        raise InputError(f"provider {args.provider} requires {' '.join(missing)}")


def _provider_from_args(args: argparse.Namespace) -> IInstanceProvider:
    """Translate instance flags into a provider, rejecting mixed file and generated inputs."""
    config = ProviderConfig(enumeration_budget=args.budget, paranoid=args.paranoid)
    if args.provider != "files" and (args.poset is not None or args.frames is not None):
        raise InputError("--poset and --frames are only valid with --provider files")
    if args.provider != "matroid-bases" and args.bases is not None:
        raise InputError("--bases is only valid with --provider matroid-bases")
    match args.provider:
        case "subspace":
            _require(args, "q", "n")
            return SubspaceProvider(q=args.q, n=args.n, config=config)
        case "matroid-uniform":
            _require(args, "n", "k")
            return MatroidProvider(spec=MatroidSpec.uniform(args.n, args.k), config=config)
        case "matroid-free":
            _require(args, "n")
            return MatroidProvider(spec=MatroidSpec.free(args.n), config=config)
        case "matroid-bases":
            _require(args, "bases")
            return MatroidBasesFileProvider(path=args.bases, config=config)
        case "symplectic":
            _require(args, "q", "n")
            return SymplecticProvider(q=args.q, n=args.n, config=config)
        case _:
            _require(args, "poset", "frames")
            return FileProvider(poset_path=args.poset, frames_path=args.frames)


def resolve_threads(flag: int | None) -> int:
    """Thread count from the flag, else the environment, else the CPU count."""
    if flag is not None:
        threads = flag
    elif (value := os.environ.get(THREADS_ENV_VAR)) is not None:
        try:
            threads = int(value)
        except ValueError as error:
            raise InputError(f"{THREADS_ENV_VAR} must be an integer, got {value!r}") from error
    else:
        threads = os.cpu_count() or 1
    if threads < 1:
        raise InputError(f"thread count must be positive, got {threads}")
    return threads


def resolve_complex_budget() -> int:
    value = os.environ.get(COMPLEX_BUDGET_ENV_VAR)
    if value is None:
        return DEFAULT_COMPLEX_BUDGET
    try:
        return int(value)
    except ValueError as error:
        raise InputError(f"{COMPLEX_BUDGET_ENV_VAR} must be an integer, got {value!r}") from error


def _labelled(decompositions: DecompositionPoset, labels: tuple[str, ...] | None) -> DecompositionPoset:
    names = tuple(format_element_set(sigma, labels) for sigma in decompositions.elements)
    return replace(decompositions, order=replace(decompositions.order, labels=names, check=False))


def _build(args: argparse.Namespace) -> int:
    threads = resolve_threads(args.threads)
    instance = _provider_from_args(args).build()
    out: Path = args.out
    match args.emit:
        case "cb":
            write_facets(build_CB(instance.poset, instance.family), out)
        case "pd" | "pd-complex":
            pd = build_PD(instance.poset, instance.family, threads)
            if args.emit == "pd":
                write_poset(_labelled(pd, instance.poset.labels).order, out)
            else:
                write_facets(pd.order_complex(), out)
        case "d" | "d-complex":
            d = build_D(instance.poset, instance.family, threads)
            if args.emit == "d":
                write_poset(_labelled(d, instance.poset.labels).order, out)
            else:
                write_facets(d.order_complex(), out)
        case _:
            write_poset(instance.poset, out)
            write_frames(instance.family, out.with_suffix(".frm"))
    print(f"{args.emit} {instance.name} -> {out}")
    return EXIT_OK


def _homology(args: argparse.Namespace) -> int:
    complex_ = read_facets(args.facets)
    if args.mod is None:
        lines = integral_homology(complex_).report_lines()
    else:
        lines = [f"H~{k} rank={rank}" for k, rank in enumerate(betti_mod_p(complex_, args.mod))]
        if complex_.is_empty:
            lines = ["H~-1 rank=1"]
    print("\n".join(lines))
    return EXIT_OK


def _verify(args: argparse.Namespace) -> int:
    if args.sample < 1:
        raise InputError(f"--sample must be positive, got {args.sample}")
    config = VerificationConfig(
        sample_size=args.sample,
        seed=args.seed,
        exhaustive=True if args.exhaustive else None,
        exhaustive_face_limit=EXHAUSTIVE_FACE_LIMIT,
        complex_budget=resolve_complex_budget(),
        threads=resolve_threads(args.threads),
    )
    instance = _provider_from_args(args).build()
    print(f"# suite={args.suite} instance={instance.name} seed={config.seed:#x}")
    results = run_suite(args.suite, VerificationContext(instance=instance), config)
    for result in results:
        print(result.line())
    return EXIT_VIOLATION if any(result.status is CheckStatus.FAIL for result in results) else EXIT_OK


def _expected_rank(args: argparse.Namespace) -> int:
    print(expected_top_rank(args.q, args.n))
    return EXIT_OK


COMMANDS = {
    "build": _build,
    "homology": _homology,
    "verify": _verify,
    "expected-rank": _expected_rank,
}


def run(argv: Sequence[str] | None = None) -> int:
    """
    Parse arguments and run one subcommand.

    Args:
        argv (Sequence[str] | None): Arguments without the program name; defaults to sys.argv.

    Returns:
        int: Process exit code.
    """
    load_dotenv()
    try:
        args = _build_parser().parse_args(argv)
    except SystemExit as exit_:
        return exit_.code if isinstance(exit_.code, int) else EXIT_INPUT
    level = {0: logging.WARNING, 1: logging.INFO}.get(args.verbose, logging.DEBUG)
    logging.basicConfig(level=level, format=LOG_FORMAT, stream=sys.stderr)

    try:
        return COMMANDS[args.command](args)
    except ResourceBudgetError as error:
        logger.error("budget exceeded: %s", error)
        return EXIT_BUDGET
    except InputError as error:
        logger.error("%s", error)
        return EXIT_INPUT
    except (ExtensionPropertyError, CertificationError) as error:
        logger.error("%s", error)
        return EXIT_VIOLATION


def main() -> None:
    sys.exit(run())
