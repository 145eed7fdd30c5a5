"""Iterative solvers for the regularized label-fit linear systems.

The core system is ``(c_l^-1 L + (1 + gamma_g/c_l) I) ell = y`` where L is
a graph Laplacian, y holds -1/+1 pseudo-targets, c_l weighs the fit to the
observed labels and gamma_g diagonally regularizes the Laplacian (an extra
zero-labeled sink node connected everywhere with weight gamma_g).  The
system matrix is symmetric positive definite, so conjugate gradients with
a relative-residual stopping rule and a zero initial guess solves it
without forming an inverse.

The multiplicity-adjusted variant replaces I with the diagonal matrix of
node multiplicities V (solving ``(c_l^-1 V^-1 L^V + (1 + gamma_g/c_l) I)
ell = y``); it is solved in the symmetric form obtained by
left-multiplying with V.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse as sp
from scipy.sparse.linalg import cg

from .graph import GraphLaplacian
from .validation import check_binary_labels

DENSE_ORACLE_MAX_N = 2000


@dataclass(frozen=True)
class SolverConfig:
    """Label-fit weight, diagonal regularizer and iteration controls."""

    c_l: float = 1.0
    gamma_g: float = 1.0
    tol: float = 1e-10
    max_iter: int | None = None

    def __post_init__(self):
        if not self.c_l > 0:
            raise ValueError(f"c_l must be positive, got {self.c_l}")
        if self.gamma_g < 0:
            raise ValueError(f"gamma_g must be non-negative, got {self.gamma_g}")
        if not self.tol > 0:
            raise ValueError(f"tol must be positive, got {self.tol}")
        if self.max_iter is not None and self.max_iter < 1:
            raise ValueError(f"max_iter must be >= 1, got {self.max_iter}")


@dataclass(frozen=True)
class SoftLabels:
    """Solved soft labels with the achieved relative residual."""

    ell: np.ndarray
    residual: float
    iterations: int


class ConvergenceError(RuntimeError):
    """Iterative solve did not reach the requested residual."""

    def __init__(self, message: str, residual: float):
        super().__init__(message)
        self.residual = residual


def _laplacian_matrix(L) -> sp.csr_matrix:
    if isinstance(L, GraphLaplacian):
        return L.matrix
    return sp.csr_matrix(L)


def _run_cg(A: sp.csr_matrix, b: np.ndarray, tol: float, max_iter: int):
    """CG from a zero start; returns (x, true relative residual, iterations)."""
    b_norm = float(np.linalg.norm(b))
    if b_norm == 0.0:
        return np.zeros_like(b), 0.0, 0
    iterations = 0

    def _count(_):
        nonlocal iterations
        iterations += 1

    x = np.zeros_like(b)
    rtol = tol
    remaining = max_iter
    # CG's recursive residual can drift from the true residual; verify and
    # tighten if the recomputed one misses the target.
    for _ in range(4):
        x, info = cg(A, b, x0=x, rtol=rtol, atol=0.0, maxiter=remaining, callback=_count)
        residual = float(np.linalg.norm(b - A @ x)) / b_norm
        if residual <= tol:
            return x, residual, iterations
        remaining = max_iter - iterations
        if info > 0 or remaining <= 0:
            break
        rtol *= 0.1
    raise ConvergenceError(
        f"conjugate gradients did not reach tol={tol} within {max_iter} "
        f"iterations (best relative residual {residual:.3e})",
        residual=residual,
    )


def soft_harmonic(L, y, cfg: SolverConfig | None = None) -> SoftLabels:
    """Solve ``(c_l^-1 L + (1 + gamma_g/c_l) I) ell = y``."""
    cfg = cfg or SolverConfig()
    matrix = _laplacian_matrix(L)
    n = matrix.shape[0]
    if matrix.shape != (n, n):
        raise ValueError(f"Laplacian must be square, got shape {matrix.shape}")
    y = check_binary_labels(y, n=n).astype(float)
    return _solve_regularized(matrix, np.ones(n), y, cfg)


def soft_harmonic_backbone(Lv, multiplicities, y, cfg: SolverConfig | None = None) -> SoftLabels:
    """Solve the multiplicity-adjusted system on a backbone graph.

    ``Lv`` is the Laplacian of the compacted weights ``V W V`` and
    ``multiplicities`` the positive integer diagonal of V.  The reported
    residual is that of the unsymmetrized system
    ``(c_l^-1 V^-1 L^V + (1 + gamma_g/c_l) I) ell = y``.
    """
    cfg = cfg or SolverConfig()
    matrix = _laplacian_matrix(Lv)
    n = matrix.shape[0]
    v = np.asarray(multiplicities)
    if v.shape != (n,):
        raise ValueError(f"multiplicities must have shape ({n},), got {v.shape}")
    if not np.all(v == np.round(v)) or (v <= 0).any():
        raise ValueError("multiplicities must be positive integers")
    y = check_binary_labels(y, n=n).astype(float)
    return _solve_regularized(matrix, v.astype(float), y, cfg)


def _solve_regularized(matrix, v: np.ndarray, y: np.ndarray, cfg: SolverConfig) -> SoftLabels:
    n = matrix.shape[0]
    alpha = 1.0 + cfg.gamma_g / cfg.c_l
    A = (matrix / cfg.c_l + alpha * sp.diags(v)).tocsr()
    b = v * y
    max_iter = cfg.max_iter if cfg.max_iter is not None else 10 * n
    # Converge on the symmetrized system tightly enough that the residual of
    # the original non-symmetric form (divide rows back by v >= 1) meets tol.
    scale = float(np.linalg.norm(y) / np.linalg.norm(b))
    x, _, iterations = _run_cg(A, b, cfg.tol * scale, max_iter)
    y_norm = float(np.linalg.norm(y))
    residual = float(np.linalg.norm((b - A @ x) / v)) / y_norm
    return SoftLabels(ell=x, residual=residual, iterations=iterations)


def dense_solve_oracle(A, b) -> np.ndarray:
    """Direct Cholesky solve of a dense symmetric positive definite system.

    Reference path for tests and small problems only (n <= 2000).
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    n = A.shape[0]
    if A.shape != (n, n):
        raise ValueError(f"A must be square, got shape {A.shape}")
    if n > DENSE_ORACLE_MAX_N:
        raise ValueError(f"dense oracle limited to n <= {DENSE_ORACLE_MAX_N}, got {n}")
    if not np.allclose(A, A.T, rtol=0.0, atol=1e-12):
        raise ValueError("A must be symmetric")
    if b.shape[0] != n:
        raise ValueError(f"b has length {b.shape[0]}, expected {n}")
    try:
        factor = scipy.linalg.cho_factor(A)
    except np.linalg.LinAlgError as exc:
        raise ValueError("A is not positive definite") from exc
    return scipy.linalg.cho_solve(factor, b)
