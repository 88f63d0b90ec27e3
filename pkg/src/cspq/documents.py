"""JSON documents: CSP specs, quantum specs, observables and phase fields.

Matrices are nested lists indexed ``[time][row][col]``; complex matrices are
split into ``matrices_re`` / ``matrices_im``. Loaders raise
:class:`DocumentError` for anything that is not well-formed JSON of the
expected shape; domain checks (square matrices, axioms) are left to the
model types and validators.
"""
from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Union

import numpy as np

from .csp import Csp, Kernel, Measure
from .dictionary import UnitaryFamily
from .dynamics import PhaseField
from .errors import CspqError
from .observables import Observable

PathLike = Union[str, Path]


class DocumentError(CspqError):
    """Unreadable or malformed input document."""


def _reject_constant(name):
    raise ValueError(f"non-finite constant {name} is not a decimal number")


def parse_json(text: str, source: str = "<string>") -> Any:
    try:
        return json.loads(text, parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        raise DocumentError(
            f"{source}: line {exc.lineno}, column {exc.colno} (char {exc.pos}): {exc.msg}"
        ) from None
    except ValueError as exc:
        raise DocumentError(f"{source}: {exc}") from None


def read_json(path: PathLike) -> Any:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise DocumentError(f"{path}: {exc}") from None
    return parse_json(text, str(path))


def write_json(path: PathLike, doc: Any) -> None:
    try:
        Path(path).write_text(json.dumps(doc) + "\n", encoding="utf-8")
    except OSError as exc:
        raise DocumentError(f"{path}: {exc}") from None


def _get(doc: Any, key: str, where: str) -> Any:
    if not isinstance(doc, dict) or key not in doc:
        raise DocumentError(f"{where}: missing key {key!r}")
    return doc[key]


def _array(x: Any, ndim: int, where: str) -> np.ndarray:
    try:
        a = np.array(x)
    except ValueError:
        raise DocumentError(f"{where}: ragged or malformed array") from None
    if a.size == 0 and a.ndim <= ndim:
        a = a.astype(float)
    if a.dtype.kind not in "iuf":
        raise DocumentError(f"{where}: expected numbers, found {a.dtype}")
    if a.ndim != ndim:
        raise DocumentError(f"{where}: expected a {ndim}-level nested list, got {a.ndim} levels")
    return a.astype(float)


def csp_from_doc(doc: Any) -> Csp:
    mu = _array(_get(doc, "mu", "csp"), 1, "mu")
    kdoc = _get(doc, "kernel", "csp")
    times = _array(_get(kdoc, "times", "kernel"), 1, "kernel.times")
    mats = _array(_get(kdoc, "matrices", "kernel"), 3, "kernel.matrices")
    labels = doc.get("labels")
    if labels is not None and not isinstance(labels, list):
        raise DocumentError("labels: expected a list")
    return Csp(Measure(mu), Kernel(tuple(times), mats), tuple(labels) if labels else None)


def csp_to_doc(c: Csp) -> dict:
    doc: dict = {"mu": c.measure.weights.tolist()}
    if c.labels is not None:
        doc["labels"] = list(c.labels)
    doc["kernel"] = {"times": list(c.kernel.times), "matrices": c.kernel.matrices.tolist()}
    return doc


def quantum_from_doc(doc: Any) -> tuple[Measure, UnitaryFamily]:
    mu = _array(_get(doc, "mu", "quantum"), 1, "mu")
    fdoc = _get(doc, "family", "quantum")
    times = _array(_get(fdoc, "times", "family"), 1, "family.times")
    re = _array(_get(fdoc, "matrices_re", "family"), 3, "family.matrices_re")
    im = _array(_get(fdoc, "matrices_im", "family"), 3, "family.matrices_im")
    if re.shape != im.shape:
        raise DocumentError(f"family: real part {re.shape} and imaginary part {im.shape} differ")
    return Measure(mu), UnitaryFamily(tuple(times), re + 1j * im)


def quantum_to_doc(m: Measure, times, matrices) -> dict:
    mats = np.asarray(matrices, dtype=complex)
    return {
        "mu": m.weights.tolist(),
        "family": {
            "times": [float(t) for t in times],
            "matrices_re": mats.real.tolist(),
            "matrices_im": mats.imag.tolist(),
        },
    }


def observable_from_doc(doc: Any) -> Observable:
    return Observable(_array(_get(doc, "lambda", "observable"), 1, "lambda"))


def observable_to_doc(a: Observable) -> dict:
    return {"lambda": a.eigenvalues.tolist()}


def phases_from_doc(doc: Any) -> PhaseField:
    """Accept ``{"times", "thetas"}`` or a list of fit results ``[{"time", "theta"}, ...]``."""
    if isinstance(doc, dict) and "fits" in doc:
        doc = doc["fits"]
    if isinstance(doc, list):
        times = [_get(d, "time", "fit") for d in doc]
        thetas = [_array(_get(d, "theta", "fit"), 2, "fit.theta") for d in doc]
        order = np.argsort(times)
        return PhaseField(tuple(float(times[i]) for i in order), np.array([thetas[i] for i in order]))
    times = _array(_get(doc, "times", "phases"), 1, "phases.times")
    thetas = _array(_get(doc, "thetas", "phases"), 3, "phases.thetas")
    return PhaseField(tuple(times), thetas)


def phases_to_doc(ph: PhaseField) -> dict:
    return {"times": list(ph.times), "thetas": ph.thetas.tolist()}
