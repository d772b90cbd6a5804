"""
Small dense matrix kernel for reset element analysis.
State dimensions here are tiny (m <= ~8); accuracy is preferred over speed.
"""
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg
from loguru import logger

from .config import ResetConfig
from .errors import DimensionError, SingularMatrixError


def as_mat(values, name: str = "matrix", dtype=float) -> np.ndarray:
    """Coerce scalars, vectors and nested lists to a finite 2-D array"""
    arr = np.atleast_2d(np.array(values, dtype=dtype, copy=True))
    if arr.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} has non-finite entries")
    return arr


def _require_square(M: np.ndarray, name: str) -> None:
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {M.shape}")


def mat_exp(M) -> np.ndarray:
    """Matrix exponential e^M (scaling and squaring with a degree-13 Pade approximant)"""
    M = as_mat(M, "M")
    _require_square(M, "M")
    return scipy.linalg.expm(M)


def mat_exp_stack(M, scales) -> np.ndarray:
    """Stack of e^{M s} for every s in scales, shape (len(scales), m, m)"""
    M = as_mat(M, "M")
    _require_square(M, "M")
    scales = np.asarray(scales, dtype=float).reshape(-1)
    return scipy.linalg.expm(M[None, :, :] * scales[:, None, None])


def eigenvalues(M) -> np.ndarray:
    """Eigenvalues of a real square matrix; closed forms for m <= 2"""
    M = as_mat(M, "M")
    _require_square(M, "M")
    m = M.shape[0]
    if m == 1:
        return np.array([complex(M[0, 0])])
    if m == 2:
        tr = M[0, 0] + M[1, 1]
        det = M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0]
        disc = np.sqrt(complex(tr * tr / 4.0 - det))
        return np.array([tr / 2.0 + disc, tr / 2.0 - disc])
    return scipy.linalg.eigvals(M)


def spectral_radius(M) -> float:
    """Largest eigenvalue magnitude"""
    return float(np.max(np.abs(eigenvalues(M))))


def _check_conditioning(A: np.ndarray, config: ResetConfig) -> None:
    cond = np.linalg.cond(A)
    if not np.isfinite(cond) or cond > config.SOLVE_COND_MAX:
        raise SingularMatrixError(f"matrix is singular to working precision (cond={cond:.3e})")


def solve_c(A, B, config: ResetConfig = None) -> np.ndarray:
    """Solve A X = B for complex (or real) A, B; rejects ill-conditioned A"""
    config = config or ResetConfig()
    A = np.atleast_2d(np.asarray(A, dtype=complex))
    B = np.asarray(B, dtype=complex)
    _require_square(A, "A")
    column = B.ndim == 1
    B2 = B.reshape(-1, 1) if column else B
    if B2.shape[0] != A.shape[0]:
        raise DimensionError(f"cannot solve {A.shape} system with right-hand side {B.shape}")
    _check_conditioning(A, config)
    X = scipy.linalg.solve(A, B2)
    return X[:, 0] if column else X


def solve(A, B, config: ResetConfig = None) -> np.ndarray:
    """Real counterpart of solve_c"""
    config = config or ResetConfig()
    A = as_mat(A, "A")
    B = np.asarray(B, dtype=float)
    _require_square(A, "A")
    if B.shape[0] != A.shape[0]:
        raise DimensionError(f"cannot solve {A.shape} system with right-hand side {B.shape}")
    _check_conditioning(A, config)
    return scipy.linalg.solve(A, B)


@dataclass(frozen=True, eq=False)
class LstsqResult:
    """Least-squares solution with diagnostics"""
    x: np.ndarray
    residual: float
    rank: int
    rank_deficient: bool


def lstsq(A, b, config: ResetConfig = None) -> LstsqResult:
    """Minimise ||A x - b||_2 with pivoted QR; minimum-norm solution when rank deficient"""
    config = config or ResetConfig()
    A = as_mat(A, "A")
    b = np.asarray(b, dtype=float)
    column = b.ndim == 1
    b2 = b.reshape(-1, 1) if column else b
    if A.shape[0] < A.shape[1]:
        raise DimensionError(f"lstsq needs at least as many rows as columns, got {A.shape}")
    if b2.shape[0] != A.shape[0]:
        raise DimensionError(f"right-hand side has {b2.shape[0]} rows, expected {A.shape[0]}")

    cond = config.LSTSQ_RCOND
    x, _, rank, _ = scipy.linalg.lstsq(A, b2, cond=cond, lapack_driver="gelsy")
    residual = float(np.linalg.norm(A @ x - b2))
    rank = int(rank)
    deficient = rank < A.shape[1]
    if deficient:
        logger.warning(f"lstsq: design matrix rank {rank} < {A.shape[1]} columns, returning minimum-norm solution")
    return LstsqResult(x=x[:, 0] if column else x, residual=residual, rank=rank, rank_deficient=deficient)


def kron_row_block(v: np.ndarray, M: Optional[np.ndarray] = None) -> np.ndarray:
    """Rows of vec(M Q v) as a linear map of vec(Q) (column-major): kron(v^T, M)"""
    v = np.asarray(v, dtype=float).reshape(1, -1)
    if M is None:
        M = np.eye(v.shape[1])
    return np.kron(v, M)
