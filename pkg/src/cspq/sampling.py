"""Random doubly stochastic kernels, unitaries and unitary families."""
from __future__ import annotations

from typing import Sequence

import numpy as np

from .csp import Csp, Kernel, Measure
from .dictionary import UnitaryFamily


def random_birkhoff(rng: np.random.Generator, n: int, max_perms: int = 8) -> np.ndarray:
    """Convex mixture of at most ``max_perms`` random permutation matrices."""
    m = int(rng.integers(1, max_perms + 1))
    weights = rng.dirichlet(np.ones(m))
    out = np.zeros((n, n))
    eye = np.eye(n)
    for w in weights:
        out += w * eye[rng.permutation(n)]
    return out


def random_kernel(rng: np.random.Generator, n: int, times: Sequence[float] = (0.0, 1.0)) -> Kernel:
    mats = [np.eye(n) if t == 0.0 else random_birkhoff(rng, n) for t in times]
    return Kernel(tuple(times), np.array(mats))


def random_measure(rng: np.random.Generator, n: int) -> Measure:
    return Measure(rng.dirichlet(np.ones(n)))


def random_csp(rng: np.random.Generator, n: int, times: Sequence[float] = (0.0, 1.0)) -> Csp:
    return Csp(random_measure(rng, n), random_kernel(rng, n, times))


def random_unitary(rng: np.random.Generator, n: int) -> np.ndarray:
    """QR orthonormalization of a complex Gaussian matrix, phases fixed so it is Haar."""
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_unitary_family(
    rng: np.random.Generator, n: int, times: Sequence[float] = (0.0, 1.0, 2.0)
) -> UnitaryFamily:
    mats = [np.eye(n, dtype=complex) if t == 0.0 else random_unitary(rng, n) for t in times]
    return UnitaryFamily(tuple(times), np.array(mats))
