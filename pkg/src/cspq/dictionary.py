"""Hilbert-space side of a CSP and the translation in both directions.

All operators are coordinates in the configuration basis ``e_j`` of
``L2(K, mu)``, so the configuration projections are plain ``diag(0..1..0)``
matrices and the trace is the ordinary matrix trace. The dictionary reads

    p(j, t | k) = tr(U_t* P_j U_t P_k) = |U_t(j, k)|^2
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from .csp import (
    Csp,
    Distribution,
    Kernel,
    Measure,
    _check_times,
    _frozen,
    find_time,
    validate_csp,
    validate_measure,
)
from .dynamics import (
    DynamicMap,
    FitConfig,
    FitResult,
    MatrixLike,
    PhaseField,
    as_matrix,
    canonical_gauge,
    fit_phases,
    general_dynamic_map,
    sqrt_dynamic_map,
    unitarity_residual,
    wrap_angle,
)
from .errors import CspqError, DimensionError, PreconditionError, StructuralError
from .validation import DEFAULT_TOL, ValidationReport, Violation

DICTIONARY_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class HilbertRep:
    """``L2(K, mu)`` with its configuration basis and projections.

    ``basis_coords[j]`` holds the raw coordinates of ``e_j``. Every ``P_j`` is
    diagonal in the configuration basis, so only its diagonal is stored:
    ``projection_diags[j]`` is ``diag(P_j)``.
    """

    mu: Measure
    basis_coords: np.ndarray
    projection_diags: np.ndarray

    @property
    def dim(self) -> int:
        return self.mu.dim

    def projection(self, j: int) -> np.ndarray:
        """``P_j`` as a full matrix (1-based ``j``)."""
        return np.diag(self.projection_diags[j - 1])

    def inner(self, psi, phi) -> complex:
        """Weighted inner product ``sum_j conj(psi_j) phi_j mu(j)`` on raw coordinates."""
        return complex(np.sum(np.conj(psi) * np.asarray(phi) * self.mu.weights))

    def coefficients(self, f) -> np.ndarray:
        """Configuration-basis coefficients of a raw function on ``K``."""
        return np.asarray(f, dtype=complex) * np.sqrt(self.mu.weights)


def config_basis(m: Measure, tol: float = DEFAULT_TOL) -> HilbertRep:
    report = validate_measure(m, tol)
    if not report.passed:
        raise PreconditionError(f"invalid measure: {report.to_dict()['violations']}")
    coords = np.diag(1.0 / np.sqrt(m.weights))
    return HilbertRep(m, _frozen(coords), _frozen(np.eye(m.dim)))


def pvm_check(rep: HilbertRep, tol: float = DEFAULT_TOL) -> ValidationReport:
    """Check ``P_j P_k = delta_jk P_j`` and ``sum_j P_j = I`` on the stored diagonals."""
    d = np.asarray(rep.projection_diags)
    n = rep.dim
    if d.ndim != 2 or d.shape[1] != n:
        return ValidationReport((Violation("dimension", (), float(d.size)),))
    out = []
    for j, dj in enumerate(d, start=1):
        # row k of prod is diag(P_j P_k)
        prod = dj[None, :] * d
        prod[j - 1] -= dj
        err = np.max(np.abs(prod), axis=1)
        for k in np.nonzero(err > tol)[0]:
            kind = "idempotence" if k == j - 1 else "orthogonality"
            out.append(Violation(kind, (j, int(k) + 1), float(err[k])))
    err = float(np.max(np.abs(d.sum(axis=0) - 1.0)))
    if err > tol:
        out.append(Violation("completeness", (), err))
    return ValidationReport(tuple(out))


def _projection(n: int, j: int) -> np.ndarray:
    p = np.zeros((n, n))
    p[j, j] = 1.0
    return p


def trace_probability(u: MatrixLike, j: int, k: int) -> float:
    """``tr(U* P_j U P_k)`` evaluated literally, for 1-based ``j``, ``k``."""
    m = as_matrix(u)
    n = m.shape[0]
    if not (1 <= j <= n and 1 <= k <= n):
        raise IndexError(f"configuration indices ({j}, {k}) out of range 1..{n}")
    val = np.trace(m.conj().T @ _projection(n, j - 1) @ m @ _projection(n, k - 1))
    if abs(val.imag) > 1e-12 * max(1.0, abs(val.real)):
        raise CspqError(f"trace has imaginary part {val.imag:.3e}")
    return float(val.real)


def transition_probabilities(u: MatrixLike) -> np.ndarray:
    """All ``tr(U* P_j U P_k)`` at once; with rank-one ``P_j`` this is ``|U(j, k)|^2``."""
    return np.abs(as_matrix(u)) ** 2


@dataclass(frozen=True, eq=False)
class InitialDensity:
    matrix: np.ndarray


def initial_density(m: Measure) -> InitialDensity:
    """``rho0 = sum_k mu(k) P_k``."""
    return InitialDensity(_frozen(np.diag(m.weights)))


def standalone_via_trace(
    u: MatrixLike, rho0: InitialDensity, time: Optional[float] = None
) -> Distribution:
    """``p_t(j) = tr(U* P_j U rho0)``.

    By cyclicity this is the ``j``-th diagonal entry of ``U rho0 U*``.
    """
    m = as_matrix(u)
    rho = np.asarray(rho0.matrix)
    if rho.shape != m.shape:
        raise DimensionError(f"state of shape {rho.shape} for a map of shape {m.shape}")
    if time is None:
        time = u.time if isinstance(u, DynamicMap) else 0.0
    probs = np.einsum("jk,kl,jl->j", m, rho, m.conj()).real
    return Distribution(probs, time)


@dataclass(frozen=True, eq=False)
class UnitaryFamily:
    """``U_t`` sampled at ``times``; unitarity is checked by the consumer."""

    times: tuple[float, ...]
    matrices: np.ndarray

    def __post_init__(self):
        times = _check_times(self.times)
        m = np.asarray(self.matrices, dtype=complex)
        if m.ndim != 3 or m.shape[0] != len(times) or m.shape[1] != m.shape[2]:
            raise DimensionError(f"expected one square matrix per time, got shape {m.shape}")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "matrices", _frozen(m))

    @property
    def dim(self) -> int:
        return self.matrices.shape[1]

    def at(self, t: float) -> np.ndarray:
        return self.matrices[find_time(self.times, t)]

    def maps(self) -> list[DynamicMap]:
        return [DynamicMap(t, m) for t, m in zip(self.times, self.matrices)]


@dataclass(frozen=True, eq=False)
class ForwardTranslation:
    """Every lifted snapshot with its unitarity residual.

    ``family`` keeps only the snapshots whose residual is within ``tol``.
    """

    rep: HilbertRep
    maps: tuple[DynamicMap, ...]
    residuals: tuple[float, ...]
    tol: float
    dictionary_error: float
    fits: Optional[tuple[FitResult, ...]] = None

    @property
    def times(self) -> tuple[float, ...]:
        return tuple(u.time for u in self.maps)

    @property
    def unitary(self) -> tuple[bool, ...]:
        return tuple(r <= self.tol for r in self.residuals)

    @property
    def family(self) -> UnitaryFamily:
        keep = [u for u, ok in zip(self.maps, self.unitary) if ok]
        return UnitaryFamily(tuple(u.time for u in keep), np.array([u.matrix for u in keep]))


PhaseSpec = Union[PhaseField, str]


def forward_translate(
    c: Csp,
    phases: PhaseSpec = "sqrt",
    *,
    tol: float = DEFAULT_TOL,
    fit_config: Optional[FitConfig] = None,
) -> ForwardTranslation:
    """Lift every kernel snapshot of ``c`` into a dynamic map.

    ``phases`` is a :class:`PhaseField`, ``"sqrt"`` (zero phases) or
    ``"fit"`` (run :func:`fit_phases` per snapshot).
    """
    report = validate_csp(c, tol)
    if not report.passed:
        raise PreconditionError(f"invalid CSP: {report.to_dict()['violations'][:5]}")
    k = c.kernel
    fits = None
    if isinstance(phases, PhaseField):
        if phases.dim != k.dim:
            raise DimensionError(f"phase field is {phases.dim}-dimensional, kernel is {k.dim}")
        missing = [t for t in k.times if not any(abs(t - s) <= 1e-12 for s in phases.times)]
        if missing:
            raise StructuralError(f"phase field does not cover kernel times {missing}")
        maps = [general_dynamic_map(k, phases, t) for t in k.times]
    elif phases in ("sqrt", "sqrt-lift"):
        maps = [sqrt_dynamic_map(k, t) for t in k.times]
    elif phases == "fit":
        fits = tuple(fit_phases(k, t, fit_config) for t in k.times)
        field = PhaseField(k.times, np.array([f.theta for f in fits]))
        maps = [general_dynamic_map(k, field, t) for t in k.times]
    else:
        raise ValueError(f"unknown phase choice {phases!r}")

    residuals = tuple(unitarity_residual(u) for u in maps)
    dict_err = max(
        float(np.max(np.abs(transition_probabilities(u) - p))) for u, p in zip(maps, k.matrices)
    )
    if dict_err > DICTIONARY_TOL:
        raise CspqError(f"dictionary identity off by {dict_err:.3e}")
    return ForwardTranslation(config_basis(c.measure, tol), tuple(maps), residuals, tol, dict_err, fits)


def backward_translate(fam: UnitaryFamily, m: Measure, tol: float = DEFAULT_TOL) -> Csp:
    """Read a CSP off a unitary family: ``p(j, t | k) = |U_t(j, k)|^2``.

    The result is validated at ``10 * tol``.
    """
    report = validate_measure(m, tol)
    if not report.passed:
        raise PreconditionError(f"invalid measure: {report.to_dict()['violations']}")
    if fam.dim != m.dim:
        raise DimensionError(f"family is {fam.dim}-dimensional, measure has {m.dim} weights")
    try:
        u0 = fam.at(0.0)
    except KeyError:
        raise PreconditionError("unitary family has no t=0 member") from None
    err = float(np.max(np.abs(u0 - np.eye(fam.dim))))
    if err > tol:
        raise PreconditionError(f"U_0 differs from the identity by {err:.3e}")
    for t, u in zip(fam.times, fam.matrices):
        r = unitarity_residual(u)
        if r > tol:
            raise PreconditionError(f"member at t={t} is not unitary (residual {r:.3e})")
    kernel = Kernel(fam.times, np.abs(fam.matrices) ** 2)
    csp = Csp(m, kernel)
    report = validate_csp(csp, 10.0 * tol)
    if not report.passed:
        raise CspqError(f"converse construction failed validation: {report.to_dict()['violations'][:5]}")
    return csp


def extract_phases(fam: UnitaryFamily) -> PhaseField:
    """``theta = arg U`` after gauge canonicalization, 0 on zero entries."""
    thetas = []
    for t, u in zip(fam.times, fam.matrices):
        if t == 0.0:
            thetas.append(np.zeros(u.shape))
            continue
        g = canonical_gauge(u).matrix
        thetas.append(np.where(np.abs(u) > 0.0, wrap_angle(np.angle(g)), 0.0))
    return PhaseField(fam.times, np.array(thetas))


def family_from_maps(maps: Sequence[DynamicMap]) -> UnitaryFamily:
    return UnitaryFamily(tuple(u.time for u in maps), np.array([u.matrix for u in maps]))
