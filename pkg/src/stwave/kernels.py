"""Hot inner loops: banded Cholesky and banded triangular substitution.

Each kernel exists twice: an explicit loop compiled with ``numba.njit`` and a
numpy implementation that vectorizes the inner loop. The jitted version is
used when numba imports and ``STWAVE_DISABLE_NUMBA`` is unset or ``0``.
Both variants are importable under ``*_numba`` / ``*_numpy`` names so tests
and ``benchmarks/bench_kernels.py`` can compare them directly.

Band storage is LAPACK-lower style: ``ab[k, j] = A[j + k, j]`` for
``0 <= k <= bandwidth``.

The factorization kernels return an integer status instead of raising, which
keeps them nopython-compatible: 0 means success, ``j + 1`` flags a failure at
row ``j``.
"""

import math
import os

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover - exercised only without numba
    numba = None

_DISABLED = os.environ.get("STWAVE_DISABLE_NUMBA", "0").strip().lower() not in ("", "0", "false", "no")
USE_NUMBA = numba is not None and not _DISABLED


def _njit(func):
    if numba is None:
        return func
    return numba.njit(cache=True, nogil=True)(func)


# --------------------------------------------------------------------------
# banded Cholesky: A = L L^T
# --------------------------------------------------------------------------


def _cholesky_loop(ab):
    bw = ab.shape[0] - 1
    n = ab.shape[1]
    L = ab.copy()
    for j in range(n):
        s = L[0, j]
        for k in range(1, min(bw, j) + 1):
            s -= L[k, j - k] * L[k, j - k]
        if not s > 0.0:
            L[0, j] = s
            return L, j + 1
        d = math.sqrt(s)
        L[0, j] = d
        for i in range(1, min(bw, n - 1 - j) + 1):
            s = L[i, j]
            for k in range(1, min(bw - i, j) + 1):
                s -= L[i + k, j - k] * L[k, j - k]
            L[i, j] = s / d
    return L, 0


def banded_cholesky_numpy(ab):
    ab = np.asarray(ab, dtype=np.float64)
    bw = ab.shape[0] - 1
    n = ab.shape[1]
    L = ab.copy()
    for j in range(n):
        kmax = min(bw, j)
        ks = np.arange(1, kmax + 1)
        row_j = L[ks, j - ks]  # L[j, j-k]
        s = L[0, j] - row_j @ row_j
        if not s > 0.0:
            L[0, j] = s
            return L, j + 1
        d = math.sqrt(s)
        L[0, j] = d
        imax = min(bw, n - 1 - j)
        for i in range(1, imax + 1):
            km = min(bw - i, j)
            if km > 0:
                kk = ks[:km]
                L[i, j] = (L[i, j] - L[i + kk, j - kk] @ row_j[:km]) / d
            else:
                L[i, j] = L[i, j] / d
    return L, 0


banded_cholesky_numba = _njit(_cholesky_loop)


def _cholesky_solve_loop(L, b):
    bw = L.shape[0] - 1
    n = L.shape[1]
    x = b.copy()
    # forward: L y = b
    for i in range(n):
        s = x[i]
        for k in range(1, min(bw, i) + 1):
            s -= L[k, i - k] * x[i - k]
        x[i] = s / L[0, i]
    # backward: L^T x = y
    for i in range(n - 1, -1, -1):
        s = x[i]
        for k in range(1, min(bw, n - 1 - i) + 1):
            s -= L[k, i] * x[i + k]
        x[i] = s / L[0, i]
    return x


def banded_cholesky_solve_numpy(L, b):
    L = np.asarray(L, dtype=np.float64)
    x = np.array(b, dtype=np.float64, copy=True)
    bw = L.shape[0] - 1
    n = L.shape[1]
    for i in range(n):
        km = min(bw, i)
        if km:
            ks = np.arange(1, km + 1)
            x[i] = (x[i] - L[ks, i - ks] @ x[i - ks]) / L[0, i]
        else:
            x[i] = x[i] / L[0, i]
    for i in range(n - 1, -1, -1):
        km = min(bw, n - 1 - i)
        if km:
            x[i] = (x[i] - L[1 : km + 1, i] @ x[i + 1 : i + km + 1]) / L[0, i]
        else:
            x[i] = x[i] / L[0, i]
    return x


banded_cholesky_solve_numba = _njit(_cholesky_solve_loop)


# --------------------------------------------------------------------------
# lower-banded forward substitution: A x = b with A[i, i-k] = ab[k, i]
# --------------------------------------------------------------------------
# Note the storage differs from the Cholesky one: here column index i is the
# *row* of A, so ab[k, i] holds the k-th subdiagonal entry of row i.


def _lower_solve_loop(ab, b):
    bw = ab.shape[0] - 1
    n = ab.shape[1]
    x = np.empty(n)
    for i in range(n):
        d = ab[0, i]
        if d == 0.0 or not math.isfinite(d):
            return x, i + 1
        s = b[i]
        for k in range(1, min(bw, i) + 1):
            s -= ab[k, i] * x[i - k]
        x[i] = s / d
    return x, 0


def lower_banded_solve_numpy(ab, b):
    ab = np.asarray(ab, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    bw = ab.shape[0] - 1
    n = ab.shape[1]
    x = np.empty(n)
    for i in range(n):
        d = ab[0, i]
        if d == 0.0 or not math.isfinite(d):
            return x, i + 1
        km = min(bw, i)
        if km:
            x[i] = (b[i] - ab[1 : km + 1, i] @ x[i - km : i][::-1]) / d
        else:
            x[i] = b[i] / d
    return x, 0


lower_banded_solve_numba = _njit(_lower_solve_loop)


if USE_NUMBA:
    banded_cholesky = banded_cholesky_numba
    banded_cholesky_solve = banded_cholesky_solve_numba
    lower_banded_solve = lower_banded_solve_numba
else:
    banded_cholesky = banded_cholesky_numpy
    banded_cholesky_solve = banded_cholesky_solve_numpy
    lower_banded_solve = lower_banded_solve_numpy


def backend():
    """Name of the active kernel backend, ``"numba"`` or ``"numpy"``."""
    return "numba" if USE_NUMBA else "numpy"
