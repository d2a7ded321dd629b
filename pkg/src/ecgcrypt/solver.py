"""Sparse recovery by basis pursuit denoising, and least-squares watermark
estimation.

``bpdn_solve`` minimizes ``||x||_1`` subject to ``||H x - y||_2 <= eps`` with
ADMM. The operator is handled in factored form ``H = U diag(s) K`` where
``K`` has orthonormal rows, which turns the ADMM x-update into two
applications of ``K`` and makes the whole iteration cost two matvecs. The
factorization can be computed once per measurement matrix and reused with
column sign flips and orthonormal bases (see :meth:`FactoredOperator.compose`).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np
import scipy.linalg

from .sensing import RankDeficiencyError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Absolute:
    value: float

    def __post_init__(self):
        if self.value < 0:
            raise ValueError("epsilon must be non-negative")

    def __call__(self, y: np.ndarray) -> float:
        return float(self.value)


@dataclass(frozen=True)
class RelativeToMeasurement:
    fraction: float

    def __post_init__(self):
        if not 0 < self.fraction < 1:
            raise ValueError("fraction must lie in (0, 1)")

    def __call__(self, y: np.ndarray) -> float:
        return float(self.fraction * np.linalg.norm(y))


EpsilonRule = Union[Absolute, RelativeToMeasurement]


@dataclass(frozen=True)
class SolverConfig:
    epsilon_rule: EpsilonRule = RelativeToMeasurement(0.05)
    max_iterations: int = 3000
    convergence_tol: float = 1e-4
    # soft threshold as a fraction of the least-squares start's largest entry
    threshold_scale: float = 0.02

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if not self.convergence_tol > 0:
            raise ValueError("convergence_tol must be positive")

    def epsilon(self, y: np.ndarray) -> float:
        return self.epsilon_rule(y)


@dataclass
class BPDNResult:
    x: np.ndarray
    converged: bool
    iterations: int
    residual_norm: float
    epsilon: float
    trace: list = field(default_factory=list, repr=False)


class FactoredOperator:
    """Linear operator ``H = U @ diag(s) @ K`` with ``K @ K.T = I``.

    ``K`` is given as a pair of callables so fast transforms can sit inside
    it. ``U`` has orthonormal columns.
    """

    def __init__(
        self,
        U: np.ndarray,
        s: np.ndarray,
        k_forward: Callable[[np.ndarray], np.ndarray],
        k_adjoint: Callable[[np.ndarray], np.ndarray],
        n: int,
    ):
        self.U = U
        self.s = s
        self.k_forward = k_forward
        self.k_adjoint = k_adjoint
        self.n = n

    @property
    def shape(self) -> tuple[int, int]:
        return (self.U.shape[0], self.n)

    @classmethod
    def from_matrix(cls, H: np.ndarray, rtol: float = 1e-12) -> "FactoredOperator":
        H = np.asarray(H, dtype=float)
        if H.ndim != 2:
            raise ValueError("H must be a matrix")
        U, s, Vt = scipy.linalg.svd(H, full_matrices=False, lapack_driver="gesdd")
        if s.size == 0 or s[0] == 0:
            raise ValueError("H must be nonzero")
        keep = s > rtol * s[0]
        return cls.from_svd(U[:, keep], s[keep], Vt[keep])

    @classmethod
    def from_svd(cls, U, s, Vt) -> "FactoredOperator":
        Vt = np.ascontiguousarray(Vt)
        return cls(U, s, Vt.__matmul__, lambda z: Vt.T @ z, Vt.shape[1])

    def compose(self, col_signs=None, basis=None) -> "FactoredOperator":
        """Operator ``H @ diag(col_signs) @ Phi`` where ``Phi`` is ``basis`` synthesis.

        Both factors are orthogonal, so the factorization carries over.
        """
        fwd, adj = self.k_forward, self.k_adjoint
        if col_signs is not None:
            d = np.asarray(col_signs, dtype=float)
            fwd0, adj0 = fwd, adj
            fwd = lambda x: fwd0(d * x)  # noqa: E731
            adj = lambda z: d * adj0(z)  # noqa: E731
        if basis is not None:
            fwd1, adj1 = fwd, adj
            fwd = lambda x: fwd1(basis.synthesis(x))  # noqa: E731
            adj = lambda z: basis.analysis(adj1(z))  # noqa: E731
        return FactoredOperator(self.U, self.s, fwd, adj, self.n)

    def matvec(self, x: np.ndarray) -> np.ndarray:
        return self.U @ (self.s * self.k_forward(x))

    def rmatvec(self, y: np.ndarray) -> np.ndarray:
        return self.k_adjoint(self.s * (self.U.T @ y))

    def __matmul__(self, x):
        return self.matvec(x)


def _soft(v: np.ndarray, lam: float) -> np.ndarray:
    return np.sign(v) * np.maximum(np.abs(v) - lam, 0.0)


def _project_ball(v: np.ndarray, center: np.ndarray, radius: float) -> np.ndarray:
    d = v - center
    nd = np.linalg.norm(d)
    if nd <= radius:
        return v
    return center + d * (radius / nd)


def bpdn_solve(H, y, epsilon: float, cfg: SolverConfig | None = None) -> BPDNResult:
    """Solve ``min ||x||_1  s.t.  ||H x - y||_2 <= epsilon``.

    Parameters
    ----------
    H : ndarray or FactoredOperator
        Sensing operator, m' x N.
    y : ndarray
        Measurements, length m'.
    epsilon : float
        Radius of the data-fidelity ball.
    cfg : SolverConfig, optional
        Iteration budget and tolerance; ``cfg.epsilon_rule`` is not consulted
        here, callers resolve it with ``cfg.epsilon(y)``.

    Returns
    -------
    BPDNResult
        ``x`` always satisfies the constraint when the problem is feasible.
        If it is not (``epsilon`` below the distance from ``y`` to the range
        of ``H``), the least-squares point is returned with
        ``converged=False``.
    """
    cfg = cfg or SolverConfig()
    op = H if isinstance(H, FactoredOperator) else FactoredOperator.from_matrix(H)
    y = np.asarray(y, dtype=float)
    if y.ndim != 1 or y.shape[0] != op.shape[0]:
        raise ValueError(f"y has shape {y.shape}, expected ({op.shape[0]},)")
    if epsilon < 0:
        raise ValueError("epsilon must be non-negative")

    n = op.n
    y_norm = np.linalg.norm(y)
    if y_norm <= epsilon:
        return BPDNResult(np.zeros(n), True, 0, float(y_norm), epsilon)

    b = op.U.T @ y
    perp2 = max(y_norm**2 - b @ b, 0.0)
    s = op.s
    x_ls = op.k_adjoint(b / s)
    if perp2 > epsilon**2:
        logger.warning("bpdn: epsilon %.3g below distance to range %.3g", epsilon, np.sqrt(perp2))
        return BPDNResult(x_ls, False, 0, float(np.sqrt(perp2)), epsilon)
    radius = np.sqrt(epsilon**2 - perp2)

    # Equilibrate so the fidelity block has unit mean gain.
    c0 = 1.0 / np.sqrt(np.mean(s**2))
    s_c, b_c, r_c = s * c0, b * c0, radius * c0
    g = s_c**2 / (1.0 + s_c**2)
    lam = cfg.threshold_scale * np.max(np.abs(x_ls))

    x = z = x_ls
    v = s_c * op.k_forward(x_ls)
    u = np.zeros(n)
    w = np.zeros_like(b)
    trace = []
    converged = False
    it = 0
    for it in range(1, cfg.max_iterations + 1):
        q = z - u
        t = v - w
        kr = op.k_forward(q) + s_c * t
        x = q + op.k_adjoint(s_c * t - g * kr)
        hx = s_c * kr / (1.0 + s_c**2)

        z_new = _soft(x + u, lam)
        v_new = _project_ball(hx + w, b_c, r_c)
        du = x - z_new
        dw = hx - v_new
        u = u + du
        w = w + dw
        dz = z_new - z
        dv = v_new - v
        z, v = z_new, v_new

        # fixed-point residual of the ADMM map; non-increasing for fixed lam
        merit = np.sqrt(dz @ dz + dv @ dv + du @ du + dw @ dw)
        trace.append(float(merit))

        scale_x = max(np.linalg.norm(z), np.linalg.norm(x), 1e-300)
        scale_h = max(np.linalg.norm(b_c), 1e-300)
        if (
            np.linalg.norm(du) <= cfg.convergence_tol * scale_x
            and np.linalg.norm(dw) <= cfg.convergence_tol * scale_h
            and np.linalg.norm(dz) <= cfg.convergence_tol * scale_x
        ):
            converged = True
            break

    x_out = _make_feasible(op, z, b, s, radius)
    resid = np.sqrt(np.sum((s * op.k_forward(x_out) - b) ** 2) + perp2)
    if not converged:
        logger.info("bpdn: no convergence after %d iterations", it)
    return BPDNResult(x_out, converged, it, float(resid), epsilon, trace)


def _make_feasible(op, x, b, s, radius) -> np.ndarray:
    """Minimum-norm correction pulling ``x`` onto the fidelity ball if outside it."""
    r = s * op.k_forward(x) - b
    nr = np.linalg.norm(r)
    if nr <= radius:
        return x
    shrink = 1.0 - radius / nr
    return x - op.k_adjoint(shrink * r / s)


def least_squares(B: np.ndarray, r: np.ndarray, rtol: float = 1e-10) -> np.ndarray:
    """Unique minimizer of ``||B w - r||_2`` for full-column-rank ``B``."""
    B = np.asarray(B, dtype=float)
    r = np.asarray(r, dtype=float)
    if B.ndim != 2 or r.shape != (B.shape[0],):
        raise ValueError(f"incompatible shapes {B.shape} and {r.shape}")
    q, R, perm = scipy.linalg.qr(B, mode="economic", pivoting=True)
    d = np.abs(np.diag(R))
    if d.size == 0 or d[0] == 0 or d[-1] <= rtol * d[0]:
        raise RankDeficiencyError(f"B (shape {B.shape}) is rank deficient")
    w = np.empty(B.shape[1])
    w[perm] = scipy.linalg.solve_triangular(R, q.T @ r)
    return w
