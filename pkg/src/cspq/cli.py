"""Command-line front end.

Every command prints a JSON run report on stdout, including on failure, and
exits with 0 on success, 2 on a domain or axiom failure and 3 on an I/O or
parse failure. Progress messages go to stderr.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Optional

import numpy as np

from . import documents as docs
from .csp import find_time, standalone_distribution, validate_csp
from .dictionary import backward_translate, extract_phases, forward_translate
from .dynamics import FitConfig, fit_phases
from .errors import CspqError, MissingInitialTimeError
from .observables import average_value
from .validation import DEFAULT_TOL, ValidationReport, Violation

log = logging.getLogger("cspq")

EXIT_OK = 0
EXIT_DOMAIN = 2
EXIT_IO = 3

ROUNDTRIP_TOL = 1e-9


@dataclass
class RunReport:
    command: str
    inputs: dict[str, str] = field(default_factory=dict)
    results: dict[str, Any] = field(default_factory=dict)
    diagnostics: dict[str, Any] = field(default_factory=dict)
    exit_code: int = EXIT_OK
    error: Optional[str] = None

    def to_json(self, indent: Optional[int] = 2) -> str:
        return json.dumps(asdict(self), indent=indent)

    @classmethod
    def from_json(cls, text: str) -> "RunReport":
        return cls(**json.loads(text))


class _Failure(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_IO, f"{self.prog}: error: {message}\n")


def _digest(path: str) -> str:
    try:
        return "sha256:" + hashlib.sha256(Path(path).read_bytes()).hexdigest()
    except OSError as exc:
        raise docs.DocumentError(f"{path}: {exc}") from None


def _fit_config(args) -> FitConfig:
    return FitConfig(max_iters=args.max_iters, restarts=args.restarts, seed=args.seed, tol=args.tol)


def _emit(report: RunReport, doc: Optional[dict], out: Optional[str]) -> None:
    if doc is None:
        return
    if out:
        docs.write_json(out, doc)
        report.results["output"] = out
        log.info("wrote %s", out)
    else:
        report.results["document"] = doc


# -- commands -----------------------------------------------------------------

def cmd_validate(args, report: RunReport) -> int:
    report.inputs[args.path] = _digest(args.path)
    c = docs.csp_from_doc(docs.read_json(args.path))
    try:
        vr = validate_csp(c, args.tol)
    except MissingInitialTimeError as exc:
        vr = ValidationReport((Violation("trivialization", (), None, 0.0),))
        report.diagnostics["note"] = str(exc)
    report.results.update(vr.to_dict())
    log.info("validation %s (%d violations)", "passed" if vr.passed else "failed", len(vr.violations))
    return EXIT_OK if vr.passed else EXIT_DOMAIN


def _to_quantum(args, report: RunReport) -> int:
    c = docs.csp_from_doc(docs.read_json(args.path))
    _require_valid(c, args.tol, report)
    if args.phases in ("fit", "sqrt"):
        phases = args.phases
    else:
        report.inputs[args.phases] = _digest(args.phases)
        phases = docs.phases_from_doc(docs.read_json(args.phases))
    log.info("lifting %d snapshot(s) of dimension %d with phases=%s",
             len(c.kernel.times), c.dim, args.phases if isinstance(phases, str) else "file")
    ft = forward_translate(c, phases, tol=args.tol, fit_config=_fit_config(args))

    fam = ft.family
    back = backward_translate(fam, c.measure, args.tol)
    rt = max(
        float(np.max(np.abs(back.kernel.snapshot(t) - c.kernel.snapshot(t)))) for t in fam.times
    )
    report.results.update({
        "direction": "to-quantum",
        "phases": args.phases if isinstance(phases, str) else "file",
        "times": list(ft.times),
        "residuals": list(ft.residuals),
        "unitary": list(ft.unitary),
    })
    if ft.fits is not None:
        report.results["fits"] = [f.to_dict() for f in ft.fits]
    report.diagnostics.update({"dictionary_error": ft.dictionary_error, "roundtrip_error": rt})
    if rt > ROUNDTRIP_TOL:
        raise _Failure(EXIT_DOMAIN, f"round trip reproduces the kernel only to {rt:.3e}")
    doc = docs.quantum_to_doc(c.measure, ft.times, [u.matrix for u in ft.maps])
    _emit(report, doc, args.out)
    return EXIT_OK


def _to_csp(args, report: RunReport) -> int:
    mu, fam = docs.quantum_from_doc(docs.read_json(args.path))
    c = backward_translate(fam, mu, args.tol)
    ft = forward_translate(c, extract_phases(fam), tol=10.0 * args.tol)
    rt = max(
        float(np.max(np.abs(np.abs(u.matrix) - np.abs(m)))) for u, m in zip(ft.maps, fam.matrices)
    )
    report.results.update({"direction": "to-csp", "times": list(fam.times)})
    report.diagnostics["roundtrip_error"] = rt
    if rt > ROUNDTRIP_TOL:
        raise _Failure(EXIT_DOMAIN, f"round trip reproduces |U_t| only to {rt:.3e}")
    _emit(report, docs.csp_to_doc(c), args.out)
    return EXIT_OK


def cmd_translate(args, report: RunReport) -> int:
    report.inputs[args.path] = _digest(args.path)
    if args.direction == "to-quantum":
        return _to_quantum(args, report)
    return _to_csp(args, report)


def cmd_fit_phases(args, report: RunReport) -> int:
    report.inputs[args.path] = _digest(args.path)
    c = docs.csp_from_doc(docs.read_json(args.path))
    cfg = _fit_config(args)
    times = args.time if args.time else list(c.kernel.times)
    fits = []
    for t in times:
        log.info("fitting phases at t=%g", t)
        fits.append(fit_phases(c.kernel, t, cfg).to_dict())
    report.results["fits"] = fits
    report.diagnostics["config"] = asdict(cfg)
    if args.out:
        docs.write_json(args.out, {"fits": fits})
        report.results["output"] = args.out
    return EXIT_OK


def cmd_evolve(args, report: RunReport) -> int:
    report.inputs[args.csp_path] = _digest(args.csp_path)
    report.inputs[args.observable_path] = _digest(args.observable_path)
    c = docs.csp_from_doc(docs.read_json(args.csp_path))
    a = docs.observable_from_doc(docs.read_json(args.observable_path))
    _require_valid(c, args.tol, report)
    if a.dim != c.dim:
        raise _Failure(EXIT_DOMAIN, f"observable has {a.dim} values for {c.dim} configurations")
    times = args.times if args.times else list(c.kernel.times)
    for t in times:
        find_time(c.kernel.times, t)
    rows = []
    for t in times:
        d = standalone_distribution(c, t)
        rows.append({"time": d.time, "distribution": d.probs.tolist(), "average": average_value(a, d)})
    report.results["ave0"] = float(np.dot(a.eigenvalues, c.measure.weights))
    report.results["evolution"] = rows
    return EXIT_OK


def _require_valid(c, tol, report: RunReport) -> None:
    try:
        vr = validate_csp(c, tol)
    except MissingInitialTimeError:
        vr = ValidationReport((Violation("trivialization", (), None, 0.0),))
    if not vr.passed:
        report.results["validation"] = vr.to_dict()
        raise _Failure(EXIT_DOMAIN, "input CSP violates the axioms")


# -- entry point ---------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol", type=float, default=DEFAULT_TOL, help="validation/convergence tolerance")
    common.add_argument("--format", choices=["json"], default="json")
    common.add_argument("--out", help="write the produced document here")
    common.add_argument("-q", "--quiet", action="store_true", help="no progress on stderr")

    fit = argparse.ArgumentParser(add_help=False)
    fit.add_argument("--seed", type=int, default=0)
    fit.add_argument("--restarts", type=int, default=16)
    fit.add_argument("--max-iters", type=int, default=5000)

    p = _Parser(prog="cspq", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    v = sub.add_parser("validate", parents=[common], help="check a CSP document against the axioms")
    v.add_argument("path")
    v.set_defaults(func=cmd_validate)

    t = sub.add_parser("translate", parents=[common, fit], help="CSP document <-> quantum document")
    t.add_argument("path")
    t.add_argument("--direction", choices=["to-quantum", "to-csp"], required=True)
    t.add_argument("--phases", default="sqrt", help='"sqrt", "fit", or a phase-field JSON file')
    t.set_defaults(func=cmd_translate)

    f = sub.add_parser("fit-phases", parents=[common, fit], help="search for unitary lifts")
    f.add_argument("path")
    f.add_argument("--time", type=float, action="append", help="time to fit (repeatable); default all")
    f.set_defaults(func=cmd_fit_phases)

    e = sub.add_parser("evolve", parents=[common], help="stand-alone distributions and averages")
    e.add_argument("csp_path")
    e.add_argument("observable_path")
    e.add_argument("--times", type=float, nargs="+")
    e.set_defaults(func=cmd_evolve)
    return p


def run(argv=None) -> tuple[int, RunReport]:
    args = build_parser().parse_args(argv)
    report = RunReport(command=args.command)
    report.diagnostics["tol"] = args.tol
    start = time.perf_counter()
    try:
        code = args.func(args, report)
    except _Failure as exc:
        code, report.error = exc.code, str(exc)
    except docs.DocumentError as exc:
        code, report.error = EXIT_IO, str(exc)
    except (CspqError, IndexError) as exc:
        code, report.error = EXIT_DOMAIN, str(exc)
    report.exit_code = code
    report.diagnostics["timings"] = {"total_s": time.perf_counter() - start}
    if report.error:
        log.error("%s", report.error)
    return code, report


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    quiet = "-q" in argv or "--quiet" in argv
    logging.basicConfig(stream=sys.stderr, level=logging.WARNING if quiet else logging.INFO,
                        format="cspq: %(message)s")
    code, report = run(argv)
    sys.stdout.write(report.to_json() + "\n")
    return code


if __name__ == "__main__":
    sys.exit(main())
