"""Complex lifts of kernel snapshots and the search for unitary lifts.

A snapshot ``p`` is lifted entrywise to ``U(j, k) = exp(i theta(j, k)) sqrt(p(j, k))``.
Every lift has unit-norm rows and columns, but distinct columns are only
orthogonal for special phase fields, so unitarity is always measured and
:func:`fit_phases` searches for phases that achieve it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from .csp import Kernel, _check_times, _frozen, find_time, snapshot_violations
from .errors import DimensionError, PreconditionError
from .validation import DEFAULT_TOL


def wrap_angle(theta):
    """Reduce angles to the half-open interval (-pi, pi]."""
    return np.pi - np.mod(np.pi - np.asarray(theta, dtype=float), 2.0 * np.pi)


@dataclass(frozen=True, eq=False)
class PhaseField:
    times: tuple[float, ...]
    thetas: np.ndarray

    def __post_init__(self):
        times = _check_times(self.times)
        th = np.asarray(self.thetas, dtype=float)
        if th.ndim != 3 or th.shape[0] != len(times) or th.shape[1] != th.shape[2]:
            raise DimensionError(f"expected one square phase matrix per time, got {th.shape}")
        th = wrap_angle(th)
        for t, m in zip(times, th):
            if t == 0.0 and np.any(m != 0.0):
                raise PreconditionError("phases at t=0 must vanish")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "thetas", _frozen(th))

    @property
    def dim(self) -> int:
        return self.thetas.shape[1]

    def at(self, t: float) -> np.ndarray:
        return self.thetas[find_time(self.times, t)]

    @classmethod
    def zeros(cls, times: Sequence[float], n: int) -> "PhaseField":
        return cls(tuple(times), np.zeros((len(times), n, n)))


@dataclass(frozen=True, eq=False)
class DynamicMap:
    time: float
    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimensionError(f"dynamic map must be square, got shape {m.shape}")
        object.__setattr__(self, "time", float(self.time))
        object.__setattr__(self, "matrix", _frozen(m))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


MatrixLike = Union[DynamicMap, np.ndarray]


def as_matrix(u: MatrixLike) -> np.ndarray:
    if isinstance(u, DynamicMap):
        return u.matrix
    m = np.asarray(u, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {m.shape}")
    return m


def lift(p: np.ndarray, theta: Optional[np.ndarray] = None) -> np.ndarray:
    """Entrywise ``exp(i theta) sqrt(p)`` for a single snapshot."""
    amp = np.sqrt(np.asarray(p, dtype=float))
    if theta is None:
        return amp.astype(complex)
    return np.exp(1j * np.asarray(theta, dtype=float)) * amp


def sqrt_dynamic_map(k: Kernel, t: float) -> DynamicMap:
    return DynamicMap(t, lift(k.snapshot(t)))


def general_dynamic_map(k: Kernel, phases: PhaseField, t: float) -> DynamicMap:
    if phases.dim != k.dim:
        raise DimensionError(f"phase field is {phases.dim}-dimensional, kernel is {k.dim}")
    return DynamicMap(t, lift(k.snapshot(t), phases.at(t)))


def unitarity_residual(u: MatrixLike) -> float:
    """Frobenius norm of ``U* U - I``."""
    m = as_matrix(u)
    g = m.conj().T @ m
    g[np.diag_indices_from(g)] -= 1.0
    return float(np.linalg.norm(g))


def evolve_vector(u: MatrixLike, f) -> np.ndarray:
    m = as_matrix(u)
    f = np.asarray(f, dtype=complex)
    if f.shape != (m.shape[0],):
        raise DimensionError(f"vector of shape {f.shape} for a {m.shape[0]}-dimensional map")
    return m @ f


# -- gauge fixing -----------------------------------------------------------

def gauge_forest(support: np.ndarray) -> list[tuple[int, int]]:
    """Spanning forest of the row/column bipartite graph of ``support``.

    Edges are taken greedily in the order: first row, first column, then the
    remaining entries row-major. First-row and first-column edges never close
    a cycle, so they are always in the forest.
    """
    n_rows, n_cols = support.shape
    parent = list(range(n_rows + n_cols))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    order = [(0, c) for c in range(n_cols)] + [(r, 0) for r in range(1, n_rows)]
    order += [(r, c) for r in range(1, n_rows) for c in range(1, n_cols)]
    edges = []
    for r, c in order:
        if not support[r, c]:
            continue
        a, b = find(r), find(n_rows + c)
        if a != b:
            parent[a] = b
            edges.append((r, c))
    return edges


def gauge_phases(u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Unit-modulus ``d1, d2`` making every forest edge of ``diag(d1) U diag(d2)`` real positive."""
    n_rows, n_cols = u.shape
    edges = gauge_forest(u != 0)
    adj: dict[int, list[tuple[int, int, int]]] = {}
    for r, c in edges:
        adj.setdefault(r, []).append((n_rows + c, r, c))
        adj.setdefault(n_rows + c, []).append((r, r, c))
    phase = [None] * (n_rows + n_cols)
    for root in range(n_rows + n_cols):
        if phase[root] is not None:
            continue
        phase[root] = 1.0 + 0.0j
        stack = [root]
        while stack:
            node = stack.pop()
            for nxt, r, c in adj.get(node, ()):
                if phase[nxt] is not None:
                    continue
                z = u[r, c] / abs(u[r, c])
                # want phase[r] * z * phase[c] = |.|, i.e. phase[r] * phase[c] = conj(z)
                phase[nxt] = np.conj(z) / phase[node]
                stack.append(nxt)
    d1 = np.array(phase[:n_rows], dtype=complex)
    d2 = np.array(phase[n_rows:], dtype=complex)
    return d1, d2


def canonical_gauge(u: MatrixLike) -> DynamicMap:
    """Representative of ``U`` under left/right diagonal phase multiplication.

    The first row and first column come out real and nonnegative; remaining
    freedom is fixed along the rest of a spanning forest of the support, so
    for example any diagonal unitary maps to the identity.
    """
    m = as_matrix(u)
    d1, d2 = gauge_phases(m)
    out = d1[:, None] * m * d2[None, :]
    # forest entries are real positive by construction; drop rounding residue
    for r, c in gauge_forest(m != 0):
        out[r, c] = abs(out[r, c])
    t = u.time if isinstance(u, DynamicMap) else 0.0
    return DynamicMap(t, out)


# -- phase fitting -----------------------------------------------------------

CONVERGED = "converged"
INFEASIBLE = "infeasible-suspected"
ITERATION_CAP = "iteration-cap"


@dataclass(frozen=True)
class FitConfig:
    max_iters: int = 5000
    restarts: int = 16
    seed: int = 0
    tol: float = 1e-9
    initial_step: float = 0.1
    min_step: float = 1e-14
    max_step: float = 1e3
    armijo: float = 1e-4
    backtrack: float = 0.5
    grad_tol: float = 1e-13
    memory: int = 10
    snapshot_tol: float = DEFAULT_TOL
    early_stop: bool = True


def phase_objective(amp: np.ndarray, theta: np.ndarray) -> float:
    """``||U* U - I||_F^2`` for ``U = exp(i theta) * amp``."""
    u = np.exp(1j * theta) * amp
    g = u.conj().T @ u
    g[np.diag_indices_from(g)] -= 1.0
    return float(np.vdot(g, g).real)


def phase_objective_grad(amp: np.ndarray, theta: np.ndarray) -> tuple[float, np.ndarray]:
    """Objective and its gradient with respect to every entry of ``theta``.

    With ``G = U* U - I`` the differential is ``4 Re tr(G U* dU)`` and
    ``dU = i U dtheta`` entrywise, giving ``-4 Im(conj(U G) * U)``.
    """
    u = np.exp(1j * theta) * amp
    g = u.conj().T @ u
    g[np.diag_indices_from(g)] -= 1.0
    f = float(np.vdot(g, g).real)
    grad = -4.0 * np.imag(np.conj(u @ g) * u)
    return f, grad


@dataclass(frozen=True, eq=False)
class FitResult:
    phases: PhaseField
    residual: float
    status: str
    iterations: int = 0
    restarts_run: int = 0
    certificate3x3: Optional[dict] = None

    @property
    def time(self) -> float:
        return self.phases.times[0]

    @property
    def theta(self) -> np.ndarray:
        return self.phases.thetas[0]

    def to_dict(self) -> dict:
        out = {
            "time": self.time,
            "theta": self.theta.tolist(),
            "residual": self.residual,
            "status": self.status,
        }
        if self.certificate3x3 is not None:
            out["certificate3x3"] = self.certificate3x3
        return out


def unistochastic_certificate_3x3(b: np.ndarray, tol: float = 1e-12) -> dict:
    """Triangle test for a 3 x 3 bistochastic matrix.

    Orthogonality of two rows of a unitary closes a triangle with sides
    ``sqrt(B[r1, k] B[r2, k])``; the same holds for columns. ``B`` can only be
    unistochastic if every such triple satisfies the triangle inequality.
    """
    b = np.asarray(b, dtype=float)
    if b.shape != (3, 3):
        raise DimensionError(f"certificate needs a 3x3 matrix, got {b.shape}")
    checks = []
    for axis, mat in (("rows", b), ("columns", b.T)):
        for r1, r2 in ((0, 1), (0, 2), (1, 2)):
            sides = np.sqrt(np.clip(mat[r1] * mat[r2], 0.0, None))
            slack = float(sides.sum() - 2.0 * sides.max())
            checks.append({
                axis: [r1 + 1, r2 + 1],
                "sides": sides.tolist(),
                "slack": slack,
                "holds": slack >= -tol,
            })
    return {
        "criterion": "triangle",
        "checks": checks,
        "unistochastic_possible": all(c["holds"] for c in checks),
    }


def _descend(amp, free, theta, cfg: FitConfig):
    """Projected gradient descent on the free phases.

    Step lengths come from Barzilai-Borwein with a nonmonotone Armijo test
    against the max of the last ``cfg.memory`` objective values. Returns
    ``(theta, f, iterations, stationary)``.
    """
    # margin so re-gauging the result cannot push it back over tol
    target = (0.5 * cfg.tol) ** 2
    f, grad = phase_objective_grad(amp, theta)
    grad = grad * free
    step = cfg.initial_step
    history = [f]
    best = (theta, f)
    for it in range(cfg.max_iters):
        if f <= target:
            return theta, f, it, False
        gg = float(np.vdot(grad, grad))
        if math.sqrt(gg) <= cfg.grad_tol:
            return (*best, it, True)
        ref = max(history[-cfg.memory:])
        while True:
            trial = wrap_angle(theta - step * grad) * free
            f_new = phase_objective(amp, trial)
            if f_new <= ref - cfg.armijo * step * gg:
                break
            step *= cfg.backtrack
            if step < cfg.min_step:
                return (*best, it, True)
        f_new, grad_new = phase_objective_grad(amp, trial)
        grad_new = grad_new * free
        s = -step * grad
        y = grad_new - grad
        sy = float(np.vdot(s, y))
        step = float(np.vdot(s, s)) / sy if sy > 0 else 2.0 * step
        step = min(max(step, cfg.min_step), cfg.max_step)
        theta, f, grad = trial, f_new, grad_new
        history.append(f)
        if f < best[1]:
            best = (theta, f)
    return (*best, cfg.max_iters, False)


def fit_phases(k: Kernel, t: float, config: Optional[FitConfig] = None) -> FitResult:
    """Search for phases that make the lift of the snapshot at ``t`` unitary.

    Phases on zero entries and on a gauge-fixing spanning forest are pinned
    at zero; the rest start uniformly in (-pi, pi] from a seeded generator.
    The best restart is returned in canonical gauge.
    """
    cfg = config or FitConfig()
    p = k.snapshot(t)
    bad = snapshot_violations(p, t, cfg.snapshot_tol)
    if bad:
        raise PreconditionError(
            f"snapshot at t={t} is not doubly stochastic: {[v.to_dict() for v in bad[:5]]}"
        )
    n = k.dim
    amp = np.sqrt(p)
    cert = unistochastic_certificate_3x3(p) if n == 3 else None
    t = k.times[find_time(k.times, t)]

    if t == 0.0:
        theta = np.zeros((n, n))
        res = unitarity_residual(lift(p, theta))
        status = CONVERGED if res <= cfg.tol else INFEASIBLE
        return FitResult(PhaseField((t,), theta[None]), res, status, 0, 0, cert)

    free = (p > 0.0).astype(float)
    for r, c in gauge_forest(p > 0.0):
        free[r, c] = 0.0

    rng = np.random.default_rng(cfg.seed)
    best = None
    runs = 0
    total_iters = 0
    for _ in range(max(1, cfg.restarts)):
        # (-pi, pi]: draw on [-pi, pi) and reflect
        start = -rng.uniform(-np.pi, np.pi, size=(n, n)) * free
        theta, f, iters, stationary = _descend(amp, free, start, cfg)
        runs += 1
        total_iters += iters
        if best is None or f < best[1]:
            best = (theta, f, iters, stationary)
        if cfg.early_stop and f <= cfg.tol ** 2:
            break

    theta, f, iters, stationary = best
    u = canonical_gauge(lift(p, theta)).matrix
    theta = np.where(p > 0.0, np.angle(u), 0.0)
    theta = wrap_angle(theta)
    res = unitarity_residual(lift(p, theta))
    if res <= cfg.tol:
        status = CONVERGED
    elif stationary or (cert is not None and not cert["unistochastic_possible"]):
        status = INFEASIBLE
    else:
        status = ITERATION_CAP
    return FitResult(PhaseField((t,), theta[None]), res, status, total_iters, runs, cert)
