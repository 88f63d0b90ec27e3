"""Random variables on K as diagonal self-adjoint operators, and their averages."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .csp import Distribution, _frozen
from .dictionary import InitialDensity, standalone_via_trace
from .dynamics import DynamicMap, MatrixLike, as_matrix, unitarity_residual
from .errors import (
    DimensionError,
    NotConfigurationDiagonalError,
    NotSelfAdjointError,
    PreconditionError,
)
from .validation import DEFAULT_TOL


@dataclass(frozen=True, eq=False)
class Observable:
    """Random variable ``A(j) = eigenvalues[j]``, i.e. ``sum_j lambda_j P_j``."""

    eigenvalues: np.ndarray

    def __post_init__(self):
        lam = np.asarray(self.eigenvalues, dtype=float)
        if lam.ndim != 1:
            raise DimensionError(f"eigenvalues must be a vector, got shape {lam.shape}")
        if not np.all(np.isfinite(lam)):
            raise ValueError("eigenvalues must be finite")
        object.__setattr__(self, "eigenvalues", _frozen(lam))

    @property
    def dim(self) -> int:
        return self.eigenvalues.shape[0]

    def __add__(self, other: "Observable") -> "Observable":
        return Observable(self.eigenvalues + other.eigenvalues)

    def __rmul__(self, c: float) -> "Observable":
        return Observable(c * self.eigenvalues)


def rv_to_operator(a: Observable) -> np.ndarray:
    return np.diag(a.eigenvalues)


def operator_to_rv(matrix, tol: float = DEFAULT_TOL) -> Observable:
    m = np.asarray(matrix, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {m.shape}")
    off = m - np.diag(np.diag(m))
    if off.size and np.max(np.abs(off)) > tol:
        raise NotConfigurationDiagonalError(
            f"off-diagonal entry of magnitude {np.max(np.abs(off)):.3e} exceeds tol={tol}"
        )
    d = np.diag(m)
    if d.size and np.max(np.abs(d.imag)) > tol:
        raise NotSelfAdjointError(f"diagonal has imaginary part {np.max(np.abs(d.imag)):.3e}")
    return Observable(d.real.copy())


def hamiltonian_unitary(h: Observable, t: float) -> DynamicMap:
    """``exp(i t H)`` for ``H = diag(lambda)``."""
    return DynamicMap(t, np.diag(np.exp(1j * t * h.eigenvalues)))


def average_value(a: Observable, d: Distribution) -> float:
    if a.dim != d.probs.shape[0]:
        raise DimensionError(f"observable has {a.dim} values, distribution has {d.probs.shape[0]}")
    return float(np.dot(a.eigenvalues, d.probs))


def evolved_average(
    a: Observable, u: MatrixLike, rho0: InitialDensity, tol: float = DEFAULT_TOL
) -> float:
    """``sum_j lambda_j tr(U* P_j U rho0)``; ``u`` must be unitary within ``tol``."""
    r = unitarity_residual(as_matrix(u))
    if r > tol:
        raise PreconditionError(f"dynamic map is not unitary (residual {r:.3e})")
    return average_value(a, standalone_via_trace(u, rho0))
