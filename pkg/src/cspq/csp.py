"""Conditional stochastic processes over a finite configuration set.

A CSP is a triple ``(K, p, mu)``: configurations ``K = {1..N}``, a kernel
``p(j, t | k)`` that is doubly stochastic at every sampled time and the
identity at ``t = 0``, and a strictly positive initial measure ``mu``.

Time is a finite list of snapshots; nothing relates snapshots at different
times. Countable ``K`` is reached through :func:`truncate_countable`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Optional, Sequence, Union

import numpy as np

from .errors import (
    DimensionError,
    MissingInitialTimeError,
    StructuralError,
    TruncationError,
    UnknownTimeError,
)
from .validation import DEFAULT_TOL, ValidationReport, Violation

TIME_MATCH_TOL = 1e-12


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


def find_time(times: Sequence[float], t: float) -> int:
    """Index of ``t`` among ``times`` (absolute match within 1e-12)."""
    for i, s in enumerate(times):
        if abs(s - t) <= TIME_MATCH_TOL:
            return i
    raise UnknownTimeError(f"time {t!r} is not sampled; available times: {list(times)}")


def _check_times(times: Sequence[float]) -> tuple[float, ...]:
    times = tuple(float(t) for t in times)
    if any(b <= a for a, b in zip(times, times[1:])):
        raise StructuralError(f"times must be strictly increasing, got {list(times)}")
    return times


@dataclass(frozen=True, eq=False)
class Measure:
    """Initial probability weights ``mu(1..N)``.

    Construction only coerces; use :func:`validate_measure` to check axioms.
    """

    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 1:
            raise DimensionError(f"measure weights must be a vector, got shape {w.shape}")
        object.__setattr__(self, "weights", _frozen(w))

    @property
    def dim(self) -> int:
        return self.weights.shape[0]

    @classmethod
    def uniform(cls, n: int) -> "Measure":
        return cls(np.full(n, 1.0 / n))


@dataclass(frozen=True, eq=False)
class Kernel:
    """Snapshots of ``p(j, t | k)``; ``matrices[i][j, k]`` is at ``times[i]``."""

    times: tuple[float, ...]
    matrices: np.ndarray

    def __post_init__(self):
        times = _check_times(self.times)
        m = np.asarray(self.matrices, dtype=float)
        if m.ndim != 3 or m.shape[0] != len(times):
            raise DimensionError(
                f"expected one N x N matrix per time ({len(times)} times), got shape {m.shape}"
            )
        if m.shape[1] != m.shape[2]:
            raise DimensionError(f"kernel snapshots must be square, got {m.shape[1:]}")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "matrices", _frozen(m))

    @property
    def dim(self) -> int:
        return self.matrices.shape[1]

    def snapshot(self, t: float) -> np.ndarray:
        return self.matrices[find_time(self.times, t)]

    @classmethod
    def identity(cls, n: int) -> "Kernel":
        return cls((0.0,), np.eye(n)[None])


@dataclass(frozen=True, eq=False)
class Csp:
    measure: Measure
    kernel: Kernel
    labels: Optional[tuple[str, ...]] = None

    def __post_init__(self):
        if self.measure.dim != self.kernel.dim:
            raise DimensionError(
                f"measure has {self.measure.dim} configurations, kernel has {self.kernel.dim}"
            )
        if self.labels is not None:
            labels = tuple(str(s) for s in self.labels)
            if len(labels) != self.dim:
                raise DimensionError(f"{len(labels)} labels for {self.dim} configurations")
            object.__setattr__(self, "labels", labels)

    @property
    def dim(self) -> int:
        return self.measure.dim


@dataclass(frozen=True, eq=False)
class Distribution:
    probs: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "probs", _frozen(np.asarray(self.probs, dtype=float)))
        object.__setattr__(self, "time", float(self.time))


def validate_measure(m: Measure, tol: float = DEFAULT_TOL) -> ValidationReport:
    w = m.weights
    if w.size == 0:
        raise DimensionError("measure has no weights")
    out = []
    for j, x in enumerate(w, start=1):
        if not math.isfinite(x):
            out.append(Violation("non-finite", (j,), float(x)))
        elif x <= 0.0:
            out.append(Violation("nonpositive-weight", (j,), float(x)))
        elif x > 1.0 + tol:
            out.append(Violation("weight-exceeds-one", (j,), float(x)))
    total = math.fsum(w)
    if not abs(total - 1.0) <= tol:
        out.append(Violation("normalization", (), total))
    return ValidationReport(tuple(out))


def snapshot_violations(p: np.ndarray, time: float, tol: float) -> list[Violation]:
    """Entry-range and row/column-sum violations of one snapshot."""
    out = []
    n = p.shape[0]
    bad = ~np.isfinite(p)
    for j, k in zip(*np.nonzero(bad)):
        out.append(Violation("non-finite", (j + 1, k + 1), float(p[j, k]), time))
    # negative entries are rejected outright; the upper bound gets the tolerance
    for j, k in zip(*np.nonzero((p < 0.0) | (p > 1.0 + tol))):
        out.append(Violation("entry-range", (j + 1, k + 1), float(p[j, k]), time))
    for j in range(n):
        s = math.fsum(p[j, :])
        if not abs(s - 1.0) <= tol:
            out.append(Violation("row-sum", (j + 1,), s, time))
    for k in range(n):
        s = math.fsum(p[:, k])
        if not abs(s - 1.0) <= tol:
            out.append(Violation("column-sum", (k + 1,), s, time))
    return out


def validate_kernel(k: Kernel, tol: float = DEFAULT_TOL) -> ValidationReport:
    """Check normalization at every time and the identity at ``t = 0``.

    Raises :class:`MissingInitialTimeError` when there is no ``t = 0`` snapshot.
    """
    try:
        i0 = find_time(k.times, 0.0)
    except UnknownTimeError:
        raise MissingInitialTimeError("kernel has no t=0 snapshot") from None
    out = []
    for t, p in zip(k.times, k.matrices):
        out.extend(snapshot_violations(p, t, tol))
    dev = np.abs(k.matrices[i0] - np.eye(k.dim))
    for j, kk in zip(*np.nonzero(~(dev <= tol))):
        out.append(
            Violation("trivialization", (j + 1, kk + 1), float(k.matrices[i0][j, kk]), k.times[i0])
        )
    return ValidationReport(tuple(out))


def validate_csp(c: Csp, tol: float = DEFAULT_TOL) -> ValidationReport:
    return validate_measure(c.measure, tol).merged(validate_kernel(c.kernel, tol))


def standalone_distribution(c: Csp, t: float) -> Distribution:
    """``p_t(j) = sum_k p(j, t | k) mu(k)``."""
    p = c.kernel.snapshot(t)
    return Distribution(p @ c.measure.weights, t)


# -- truncation of countable configuration spaces ---------------------------

def sinkhorn_balance(
    a: np.ndarray, max_sweeps: int = 1000, tol: float = 1e-12
) -> tuple[np.ndarray, int]:
    """Rescale rows then alternate columns/rows until doubly stochastic.

    Returns the balanced matrix and the number of sweeps used. Does not raise
    when the sweep cap is hit; callers validate the output.
    """
    a = np.array(a, dtype=float)
    rows = a.sum(axis=1)
    if np.any(rows <= 0.0) or np.any(a.sum(axis=0) <= 0.0):
        raise TruncationError("cannot balance a matrix with an all-zero row or column")
    a /= rows[:, None]
    for sweep in range(1, max_sweeps + 1):
        a /= a.sum(axis=0)[None, :]
        a /= a.sum(axis=1)[:, None]
        err = max(np.max(np.abs(a.sum(axis=0) - 1.0)), np.max(np.abs(a.sum(axis=1) - 1.0)))
        if err <= tol:
            return a, sweep
    return a, max_sweeps


class Truncation(NamedTuple):
    csp: Csp
    dim: int
    tail: float
    sweeps: int


WeightRule = Union[Sequence[float], Callable[[int], float]]


def truncate_countable(
    weights: WeightRule,
    kernel_rule: Optional[Callable[[int], Kernel]] = None,
    epsilon: float = 1e-3,
    *,
    max_dim: int = 100_000,
    tol: float = DEFAULT_TOL,
) -> Truncation:
    """Cut a countable CSP down to the smallest ``N`` with tail mass <= epsilon.

    ``weights`` is either a finite sequence or a 1-based rule ``j -> mu(j)``.
    ``kernel_rule(N)`` returns an N x N kernel; it defaults to the identity at
    ``t = 0``. Weights are renormalized to sum to 1 and each kernel snapshot
    is restored to double stochasticity by Sinkhorn balancing.
    """
    if not 0.0 < epsilon < 1.0:
        raise ValueError(f"epsilon must lie in (0, 1), got {epsilon}")
    if callable(weights):
        rule = weights
        limit = max_dim
    else:
        seq = list(weights)
        rule = lambda j: seq[j - 1]  # noqa: E731
        limit = min(len(seq), max_dim)

    taken: list[float] = []
    partial = 0.0
    while len(taken) < limit:
        w = float(rule(len(taken) + 1))
        if not w > 0.0:
            raise TruncationError(f"weight {len(taken) + 1} is not strictly positive: {w}")
        taken.append(w)
        partial += w
        if 1.0 - partial <= epsilon:
            break
    tail = max(0.0, 1.0 - math.fsum(taken))
    if tail > epsilon:
        raise TruncationError(
            f"tail mass {tail:.3e} still exceeds epsilon={epsilon} after {len(taken)} weights"
        )
    n = len(taken)
    mu = np.asarray(taken) / math.fsum(taken)

    kernel = Kernel.identity(n) if kernel_rule is None else kernel_rule(n)
    if kernel.dim != n:
        raise DimensionError(f"kernel_rule({n}) returned a {kernel.dim}-dimensional kernel")
    balanced = []
    sweeps = 0
    for p in kernel.matrices:
        b, s = sinkhorn_balance(p)
        balanced.append(b)
        sweeps = max(sweeps, s)
    csp = Csp(Measure(mu), Kernel(kernel.times, np.array(balanced)))
    report = validate_csp(csp, tol)
    if not report.passed:
        raise TruncationError(f"truncated CSP fails validation: {report.to_dict()['violations'][:5]}")
    return Truncation(csp, n, tail, sweeps)
