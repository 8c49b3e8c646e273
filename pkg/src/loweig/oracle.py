"""Brute-force dense references for tests and acceptance checks.

These paths share the dense eigensolver kernel but none of the low-rank
bookkeeping, so agreement with the fast pipeline is a meaningful check; the
solver itself is vouched for by solver-independent identities (trace,
Frobenius, eigen-residuals) in the test suite.
"""

from __future__ import annotations

import numpy as np

from .fast_eigh import LowRankFactor, WeightedData
from .kernels import _as_matrix, _fro, symmetric_eig

DEFAULT_MAX_DIM = 512


def materialize(
    alpha: float,
    factor: LowRankFactor,
    data: WeightedData,
    max_dim: int = DEFAULT_MAX_DIM,
) -> np.ndarray:
    """Entrywise ``alpha*I + Q B Q^T + X X^T - Y Y^T`` as a dense m-by-m array.

    Guarded by ``max_dim``: this is a test-scale reference, not a production
    path.
    """
    m = factor.dim
    if data.dim != m:
        raise ValueError(f"data dimension {data.dim} does not match factor {m}")
    if m > max_dim:
        raise ValueError(f"dimension {m} exceeds the oracle bound {max_dim}")
    a = alpha * np.eye(m)
    a += factor.Q @ factor.B @ factor.Q.T
    a += data.X @ data.X.T
    a -= data.Y @ data.Y.T
    return (a + a.T) / 2.0


def dense_spectrum(a) -> tuple[np.ndarray, np.ndarray]:
    """Full eigendecomposition of a dense symmetric matrix, descending.

    Returns ``(values, vectors)`` with vectors in columns.
    """
    a = _as_matrix(a, "a")
    if a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got {a.shape}")
    if _fro(a - a.T) > 1e-12 * max(1.0, _fro(a)):
        raise ValueError("matrix is not symmetric within tolerance")
    eig = symmetric_eig(a)
    return eig.D, eig.E
