"""Hot numeric kernels: cyclic Jacobi diagonalization of a symmetric matrix.

The jitted path is the default. Setting the environment variable
``CORRMODES_DISABLE_NUMBA=1`` (before import) selects a pure-numpy fallback
that performs the same rotations with vectorized row/column updates; both
paths follow the identical rotation schedule, so they agree to rounding.
``benchmarks/bench_eigen.py`` compares the two.
"""

from __future__ import annotations

import os

import numpy as np

_FLAG = os.environ.get("CORRMODES_DISABLE_NUMBA", "0").strip().lower()
NUMBA_DISABLED = _FLAG in {"1", "true", "yes", "on"}

try:
    if NUMBA_DISABLED:
        raise ImportError("numba disabled by CORRMODES_DISABLE_NUMBA")
    from numba import njit

    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover - exercised via env flag in the benchmark
    NUMBA_AVAILABLE = False

    def njit(*args, **kwargs):
        def wrap(func):
            return func

        if args and callable(args[0]):
            return args[0]
        return wrap


USE_NUMBA = NUMBA_AVAILABLE and not NUMBA_DISABLED


def _offdiag_frobenius(a: np.ndarray) -> float:
    n = a.shape[0]
    mask = ~np.eye(n, dtype=bool)
    return float(np.sqrt(np.sum(a[mask] ** 2)))


@njit(cache=True)
def _jacobi_sweeps_jit(a, v, tol, max_sweeps):  # pragma: no cover - jitted
    n = a.shape[0]
    for sweep in range(max_sweeps):
        off = 0.0
        for i in range(n - 1):
            for j in range(i + 1, n):
                off += a[i, j] * a[i, j]
        off = np.sqrt(2.0 * off)
        if off <= tol:
            return sweep, off
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                app = a[p, p]
                aqq = a[q, q]
                theta = (aqq - app) / (2.0 * apq)
                if theta >= 0.0:
                    t = 1.0 / (theta + np.sqrt(theta * theta + 1.0))
                else:
                    t = -1.0 / (-theta + np.sqrt(theta * theta + 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                for k in range(n):
                    if k != p and k != q:
                        akp = a[k, p]
                        akq = a[k, q]
                        a[k, p] = c * akp - s * akq
                        a[p, k] = a[k, p]
                        a[k, q] = s * akp + c * akq
                        a[q, k] = a[k, q]
                a[p, p] = c * c * app - 2.0 * s * c * apq + s * s * aqq
                a[q, q] = s * s * app + 2.0 * s * c * apq + c * c * aqq
                a[p, q] = 0.0
                a[q, p] = 0.0
                for k in range(n):
                    vkp = v[k, p]
                    vkq = v[k, q]
                    v[k, p] = c * vkp - s * vkq
                    v[k, q] = s * vkp + c * vkq
    off = 0.0
    for i in range(n - 1):
        for j in range(i + 1, n):
            off += a[i, j] * a[i, j]
    return max_sweeps, np.sqrt(2.0 * off)


def _jacobi_sweeps_numpy(a, v, tol, max_sweeps):
    """Same rotation schedule as the jitted kernel, vectorized per rotation."""
    n = a.shape[0]
    for sweep in range(max_sweeps):
        off = _offdiag_frobenius(a)
        if off <= tol:
            return sweep, off
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                app = a[p, p]
                aqq = a[q, q]
                theta = (aqq - app) / (2.0 * apq)
                if theta >= 0.0:
                    t = 1.0 / (theta + np.sqrt(theta * theta + 1.0))
                else:
                    t = -1.0 / (-theta + np.sqrt(theta * theta + 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                akp = a[:, p].copy()
                akq = a[:, q].copy()
                new_p = c * akp - s * akq
                new_q = s * akp + c * akq
                a[:, p] = new_p
                a[p, :] = new_p
                a[:, q] = new_q
                a[q, :] = new_q
                a[p, p] = c * c * app - 2.0 * s * c * apq + s * s * aqq
                a[q, q] = s * s * app + 2.0 * s * c * apq + c * c * aqq
                a[p, q] = 0.0
                a[q, p] = 0.0
                vkp = v[:, p].copy()
                vkq = v[:, q].copy()
                v[:, p] = c * vkp - s * vkq
                v[:, q] = s * vkp + c * vkq
    return max_sweeps, _offdiag_frobenius(a)


def jacobi_eigh(
    matrix: np.ndarray,
    tol: float = 1e-12,
    max_sweeps: int = 100,
    use_numba: bool | None = None,
) -> tuple[np.ndarray, np.ndarray, float, int]:
    """Diagonalize a symmetric matrix by cyclic Jacobi rotations.

    Parameters
    ----------
    matrix : ndarray
        Symmetric (n, n) array; not modified.
    tol : float
        Stop once the Frobenius norm of the off-diagonal part falls to ``tol``.
    max_sweeps : int
        Sweep budget; one sweep rotates every (p, q) pair once.
    use_numba : bool, optional
        Force a backend; defaults to the module-level selection.

    Returns
    -------
    eigenvalues, eigenvectors, off_residual, sweeps
        Unsorted eigenvalues, matching eigenvector columns, the final
        off-diagonal Frobenius norm, and the number of sweeps performed.
        Convergence is the caller's check: ``off_residual <= tol``.
    """
    a = np.array(matrix, dtype=np.float64, copy=True)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    n = a.shape[0]
    v = np.eye(n, dtype=np.float64)
    if n == 1:
        return np.array([a[0, 0]]), v, 0.0, 0
    backend = USE_NUMBA if use_numba is None else use_numba
    if backend:
        sweeps, off = _jacobi_sweeps_jit(a, v, tol, max_sweeps)
    else:
        sweeps, off = _jacobi_sweeps_numpy(a, v, tol, max_sweeps)
    return np.diag(a).copy(), v, float(off), int(sweeps)
