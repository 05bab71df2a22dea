"""Command-line front end.

Every subcommand prints one JSON document (CSV for ``scan``). Flags may also
come from ``PENCILPRES_<FLAG>`` environment variables; explicit flags win.

Exit codes: 0 success, 2 schema or invalid input, 3 numerical failure,
4 equal inputs, 5 reconstruction failure, 6 counterexample found.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass

import numpy as np

from . import preserver as pres
from .algebra import (
    AlgebraElement,
    BlockAlgebra,
    Tolerances,
    identity,
    random_element,
    random_quasinilpotent,
    spectrum,
)
from .errors import (
    AlgebraMismatch,
    InputsEqual,
    InvalidForm,
    NumericalError,
    ReconstructionError,
    SchemaError,
)
from .pencil import pencil_grid, pencil_spectrum
from .rank_trace import DEFAULT_RANK_TRIALS, diagonal_trace, spectral_rank, trace
from .separation import separate_any, separate_invertible, separate_rank_one, subharmonic_scan
from .serialize import SCHEMA_VERSION, _c, dumps, load_element, spectrum_to_json

EXIT_OK = 0
EXIT_SCHEMA = 2
EXIT_NUMERIC = 3
EXIT_EQUAL = 4
EXIT_RECONSTRUCTION = 5
EXIT_COUNTEREXAMPLE = 6

ENV_PREFIX = "PENCILPRES_"
RECONSTRUCTION_TOL = 1e-7


@dataclass(frozen=True)
class RunConfig:
    seed: int
    tol: Tolerances
    trials: int | None
    algebra: BlockAlgebra
    output: str


class _Exit(Exception):
    def __init__(self, code: int, doc=None):
        super().__init__(code)
        self.code, self.doc = code, doc


def _env(name: str, default):
    return os.environ.get(ENV_PREFIX + name.upper().replace("-", "_"), default)


def _seed(text) -> int:
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return value


def _positive_int(text) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("trials must be >= 1")
    return value


def _complex(text) -> complex:
    try:
        return complex(text.replace(" ", "").replace("i", "j"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a complex number: {text!r}") from None


def _add_common(parser: argparse.ArgumentParser, suppress: bool) -> None:
    """Run flags, accepted before or after the subcommand.

    On subparsers the defaults are suppressed so that a flag given before
    the subcommand is not overwritten.
    """

    def default(value):
        return argparse.SUPPRESS if suppress else value

    g = parser.add_argument_group("run configuration")
    g.add_argument("--seed", type=_seed, default=default(_env("seed", "0")))
    g.add_argument("--trials", type=_positive_int, default=default(_env("trials", None)))
    g.add_argument("--singular-tol", type=float, default=default(_env("singular_tol", "1e-12")))
    g.add_argument("--ambiguity-band", type=float, default=default(_env("ambiguity_band", "1e-8")))
    g.add_argument("--cluster-tol", type=float, default=default(_env("cluster_tol", "1e-7")))
    g.add_argument("--algebra", default=default(_env("algebra", "2")), help='block sizes, e.g. "2,3,2"')
    g.add_argument("--output", choices=("json", "csv", "pretty"), default=default(_env("output", "json")))


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    _add_common(common, suppress=True)

    parser = argparse.ArgumentParser(prog="pencilpres", description=__doc__.splitlines()[0])
    _add_common(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True)

    for name, help_text in (("rank", "spectral rank"), ("trace", "trace"), ("spectrum", "spectrum with multiplicities")):
        p = sub.add_parser(name, parents=[common], help=help_text)
        p.add_argument("file")

    p = sub.add_parser("pencil", parents=[common], help="lam where lam x + y is singular")
    p.add_argument("x_file")
    p.add_argument("y_file")
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--roots", action="store_true", help="finite roots of det(lam x + y) (default)")
    mode.add_argument("--grid", action="store_true", help="verdicts on a square grid")
    p.add_argument("--radius", type=float, default=None)
    p.add_argument("--points", type=int, default=21)

    p = sub.add_parser("separate", parents=[common], help="separation witness for a != b")
    p.add_argument("a_file")
    p.add_argument("b_file")
    p.add_argument("--mode", choices=("any", "invertible", "rank1"), default="any")

    p = sub.add_parser("preserver", parents=[common], help="synthesize, check or reconstruct preservers")
    action = p.add_mutually_exclusive_group(required=True)
    action.add_argument("--synth", metavar="FORM_JSON")
    action.add_argument("--check", nargs=2, metavar=("PHI", "PSI"))
    action.add_argument("--reconstruct", nargs=2, metavar=("PHI", "PSI"))
    p.epilog = "map specs: identity, transpose, shift[:SPEC], quadratic[:SPEC], collapse[:SPEC], form:PATH, random:SEED"

    p = sub.add_parser("scan", parents=[common], help="sub-mean-value scan of lam -> rho(lam c + q)")
    p.add_argument("--c", dest="c_file")
    p.add_argument("--q", dest="q_file")
    p.add_argument("--center", type=_complex, default=0j)
    p.add_argument("--radius", type=float, default=1.0)
    p.add_argument("--samples", type=int, default=64)

    p = sub.add_parser("suite", parents=[common], help="seeded property suites")
    p.add_argument("--suite", choices=("core", "rank", "separation", "preserver", "all"), default="all")
    p.add_argument("--scale", type=float, default=1.0, help="multiply every case count")
    p.add_argument("--inject-fault", action="store_true", help=argparse.SUPPRESS)
    return parser


def _config(args) -> RunConfig:
    try:
        tol = Tolerances(float(args.singular_tol), float(args.ambiguity_band), float(args.cluster_tol))
        algebra = BlockAlgebra.parse(str(args.algebra))
        seed = _seed(args.seed)
        trials = None if args.trials is None else _positive_int(args.trials)
    except (ValueError, argparse.ArgumentTypeError) as exc:
        raise SchemaError(f"bad configuration: {exc}") from None
    return RunConfig(seed, tol, trials, algebra, args.output)


def _load(path) -> AlgebraElement:
    try:
        return load_element(path)
    except OSError as exc:
        raise SchemaError(f"cannot read {path}: {exc.strerror}") from None


# map specs -----------------------------------------------------------------


def load_form(path) -> pres.PreserverForm:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise SchemaError(f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: invalid JSON ({exc})") from None
    return pres.PreserverForm.from_dict(doc)


def parse_map_spec(spec: str, algebra: BlockAlgebra, tol: Tolerances) -> pres.BlackBoxMap:
    head, _, rest = spec.partition(":")
    if head == "identity":
        return pres.identity_map(algebra)
    if head == "transpose":
        return pres.transpose_map(algebra)
    if head in ("shift", "quadratic", "collapse"):
        inner = parse_map_spec(rest, algebra, tol) if rest else pres.identity_map(algebra)
        wrap = {"shift": pres.additive_shift, "quadratic": pres.quadratic_perturbation, "collapse": pres.rank_collapse}
        return wrap[head](inner)
    if head == "form":
        return pres.synthesize(load_form(rest), tol, name=spec)
    if head == "random":
        try:
            seed = int(rest)
        except ValueError:
            raise SchemaError(f"random map spec needs an integer seed, got {rest!r}") from None
        return pres.synthesize(pres.random_form(algebra, seed), tol, name=spec)
    raise SchemaError(f"unknown map spec {spec!r}")


def _same_algebra(phi, psi):
    if phi.domain != psi.domain or phi.codomain != psi.codomain:
        raise AlgebraMismatch("phi and psi act between different algebras")


# commands ------------------------------------------------------------------


def cmd_rank(args, cfg: RunConfig):
    a = _load(args.file)
    report = spectral_rank(a, cfg.trials or DEFAULT_RANK_TRIALS, cfg.seed, cfg.tol)
    return {"schema": SCHEMA_VERSION, **report.to_dict()}


def cmd_trace(args, cfg: RunConfig):
    a = _load(args.file)
    return {"schema": SCHEMA_VERSION, "trace": _c(trace(a, cfg.tol)), "diagonal_trace": _c(diagonal_trace(a))}


def cmd_spectrum(args, cfg: RunConfig):
    return spectrum_to_json(spectrum(_load(args.file), cfg.tol))


def cmd_pencil(args, cfg: RunConfig):
    x, y = _load(args.x_file), _load(args.y_file)
    if x.algebra != y.algebra:
        raise AlgebraMismatch("x and y have different block structures")
    result = pencil_spectrum(x, y, cfg.tol, cfg.seed)
    if not args.grid:
        return result.to_dict()
    radius = args.radius
    if radius is None:
        radius = 1.0 + max((abs(v) for v in result.values), default=1.0)
    return {
        "schema": SCHEMA_VERSION,
        "identically_singular": result.identically_singular,
        "radius": radius,
        "grid": pencil_grid(x, y, radius, args.points, cfg.tol),
    }


def cmd_separate(args, cfg: RunConfig):
    a, b = _load(args.a_file), _load(args.b_file)
    if a.algebra != b.algebra:
        raise AlgebraMismatch("a and b have different block structures")
    if args.mode == "rank1":
        w = separate_rank_one(a, b, cfg.tol, cfg.seed)
    else:
        fn = separate_any if args.mode == "any" else separate_invertible
        kwargs = {"trials": cfg.trials} if cfg.trials else {}
        w = fn(a, b, seed=cfg.seed, tol=cfg.tol, **kwargs)
    return {"schema": SCHEMA_VERSION, **w.to_dict()}


def cmd_preserver(args, cfg: RunConfig):
    if args.synth:
        form = load_form(args.synth)
        phi = pres.synthesize(form, cfg.tol)
        jordan = pres.jordan_verify(pres.jordan_part(form, cfg.tol), cfg.trials or 100, cfg.seed, cfg.tol)
        return {
            "schema": SCHEMA_VERSION,
            "form": form.normalized().to_dict(),
            "domain": list(phi.domain.block_dims),
            "jordan": jordan.to_dict(),
        }
    if args.check:
        phi, psi = (parse_map_spec(s, cfg.algebra, cfg.tol) for s in args.check)
        _same_algebra(phi, psi)
        trials = cfg.trials or 1000
        reports = [pres.pencil_condition_check(phi, psi, trials, cfg.seed, cfg.tol)]
        if reports[0].passed:
            reports += pres.lemma_battery(phi, psi, min(trials, 50), cfg.seed, cfg.tol)
        found = any(not r.passed for r in reports)
        doc = {"schema": SCHEMA_VERSION, "counterexample_found": found, "reports": [r.to_dict() for r in reports]}
        if found:
            raise _Exit(EXIT_COUNTEREXAMPLE, doc)
        return doc
    phi, psi = (parse_map_spec(s, cfg.algebra, cfg.tol) for s in args.reconstruct)
    _same_algebra(phi, psi)
    form = pres.reconstruct(phi, psi, cfg.tol, cfg.seed)
    residual = pres.roundtrip_residual(form, phi, 100, cfg.seed + 1)
    doc = {"schema": SCHEMA_VERSION, "form": form.to_dict(), "roundtrip_residual": residual}
    if residual > RECONSTRUCTION_TOL:
        doc["error"] = f"round-trip residual {residual:.3g} exceeds {RECONSTRUCTION_TOL:g}"
        raise _Exit(EXIT_RECONSTRUCTION, doc)
    return doc


def cmd_scan(args, cfg: RunConfig):
    rng = np.random.default_rng(cfg.seed)
    c = _load(args.c_file) if args.c_file else random_element(cfg.algebra, rng)
    q = _load(args.q_file) if args.q_file else random_quasinilpotent(c.algebra, rng)
    if c.algebra != q.algebra:
        raise AlgebraMismatch("c and q have different block structures")
    report = subharmonic_scan(c, q, args.center, args.radius, args.samples, cfg.tol)
    if cfg.output == "csv":
        return report.to_csv()
    return {"schema": SCHEMA_VERSION, **report.to_dict()}


def cmd_suite(args, cfg: RunConfig):
    from .suites import run_suites

    summary = run_suites([args.suite], cfg.seed, cfg.tol, fault=args.inject_fault, scale=args.scale)
    doc = summary.to_dict()
    if not summary.all_passed:
        replay = f"pencilpres suite --suite {args.suite} --seed {cfg.seed}"
        if args.scale != 1.0:
            replay += f" --scale {args.scale}"
        doc["replay"] = replay
        raise _Exit(1, doc)
    return doc


COMMANDS = {
    "rank": cmd_rank,
    "trace": cmd_trace,
    "spectrum": cmd_spectrum,
    "pencil": cmd_pencil,
    "separate": cmd_separate,
    "preserver": cmd_preserver,
    "scan": cmd_scan,
    "suite": cmd_suite,
}


# output --------------------------------------------------------------------


def _pretty(doc, indent: int = 0) -> list[str]:
    pad = "  " * indent
    lines = []
    if isinstance(doc, dict):
        for key in sorted(doc):
            value = doc[key]
            if isinstance(value, (dict, list)) and value and not _is_scalar_list(value):
                lines.append(f"{pad}{key}:")
                lines.extend(_pretty(value, indent + 1))
            else:
                lines.append(f"{pad}{key}: {_scalar(value)}")
    elif isinstance(doc, list):
        for item in doc:
            if isinstance(item, (dict, list)) and not _is_scalar_list(item):
                lines.append(f"{pad}-")
                lines.extend(_pretty(item, indent + 1))
            else:
                lines.append(f"{pad}- {_scalar(item)}")
    else:
        lines.append(pad + _scalar(doc))
    return lines


def _is_scalar_list(value) -> bool:
    return isinstance(value, list) and all(not isinstance(v, (dict, list)) for v in value)


def _scalar(value) -> str:
    return json.dumps(value) if not isinstance(value, str) else value


def _emit(doc, cfg: RunConfig | None, stream):
    if isinstance(doc, str):
        stream.write(doc)
    elif cfg is not None and cfg.output == "pretty":
        stream.write("\n".join(_pretty(doc)) + "\n")
    else:
        stream.write(dumps(doc))


def _error_doc(code: int, exc: Exception) -> dict:
    return {"schema": SCHEMA_VERSION, "error": type(exc).__name__, "message": str(exc), "exit_code": code}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    cfg = None
    try:
        cfg = _config(args)
        doc = COMMANDS[args.command](args, cfg)
        _emit(doc, cfg, sys.stdout)
        return EXIT_OK
    except _Exit as exc:
        _emit(exc.doc, cfg, sys.stdout)
        if exc.doc and "replay" in exc.doc:
            print(f"replay: {exc.doc['replay']}", file=sys.stderr)
        return exc.code
    except (SchemaError, InvalidForm, AlgebraMismatch, InputsEqual, ReconstructionError, NumericalError) as exc:
        code = _exit_code(exc)
        _emit(_error_doc(code, exc), cfg, sys.stdout)
        print(f"error: {exc}", file=sys.stderr)
        return code


def _exit_code(exc: Exception) -> int:
    if isinstance(exc, (SchemaError, InvalidForm, AlgebraMismatch)):
        return EXIT_SCHEMA
    if isinstance(exc, InputsEqual):
        return EXIT_EQUAL
    if isinstance(exc, ReconstructionError):
        return EXIT_RECONSTRUCTION
    return EXIT_NUMERIC

if __name__ == "__main__":
    sys.exit(main())
