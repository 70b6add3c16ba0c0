"""Linear algebra: banded Cholesky, CG, Kronecker sums, smallest pencil eigenpair."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import kernels
from .errors import (
    InvalidArgumentError,
    NoConvergenceError,
    NonPositivePivotError,
    SingularSystemError,
)


@dataclass(frozen=True, eq=False)
class BandedMatrix:
    """Symmetric matrix in lower band storage, ``bands[k, j] = A[j + k, j]``."""

    bands: np.ndarray

    def __post_init__(self):
        b = np.ascontiguousarray(self.bands, dtype=np.float64)
        if b.ndim != 2:
            raise InvalidArgumentError("band storage must be 2D")
        object.__setattr__(self, "bands", b)

    @property
    def dimension(self) -> int:
        return self.bands.shape[1]

    @property
    def bandwidth(self) -> int:
        return self.bands.shape[0] - 1

    @classmethod
    def from_dense(cls, A, bandwidth: int | None = None) -> "BandedMatrix":
        A = np.asarray(A, dtype=np.float64)
        n = A.shape[0]
        if bandwidth is None:
            nz = np.nonzero(np.tril(A))
            bandwidth = int((nz[0] - nz[1]).max()) if nz[0].size else 0
        bands = np.zeros((bandwidth + 1, n))
        for k in range(bandwidth + 1):
            bands[k, : n - k] = np.diagonal(A, -k)
        return cls(bands)

    @classmethod
    def from_sparse(cls, A) -> "BandedMatrix":
        A = sp.csr_matrix(A)
        coo = sp.tril(A).tocoo()
        bw = int((coo.row - coo.col).max()) if coo.nnz else 0
        bands = np.zeros((bw + 1, A.shape[0]))
        bands[coo.row - coo.col, coo.col] = coo.data
        return cls(bands)

    def entry(self, i: int, j: int) -> float:
        if i < j:
            i, j = j, i
        k = i - j
        return float(self.bands[k, j]) if k <= self.bandwidth else 0.0

    def to_dense(self) -> np.ndarray:
        n = self.dimension
        A = np.zeros((n, n))
        for k in range(self.bandwidth + 1):
            d = self.bands[k, : n - k]
            A += np.diag(d, -k)
            if k:
                A += np.diag(d, k)
        return A

    def matvec(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        n = self.dimension
        y = self.bands[0] * x
        for k in range(1, self.bandwidth + 1):
            d = self.bands[k, : n - k]
            y[k:] += d * x[: n - k]
            y[: n - k] += d * x[k:]
        return y


@dataclass(frozen=True, eq=False)
class CholeskyFactor:
    """Banded factor L with A = L L^T; immutable, safe for concurrent solves."""

    L: np.ndarray

    def solve(self, b) -> np.ndarray:
        b = np.asarray(b, dtype=np.float64)
        if b.ndim == 1:
            return kernels.banded_cholesky_solve(self.L, np.ascontiguousarray(b))
        out = np.empty_like(b)
        for j in range(b.shape[1]):
            out[:, j] = kernels.banded_cholesky_solve(self.L, np.ascontiguousarray(b[:, j]))
        return out

    def to_dense_L(self) -> np.ndarray:
        n = self.L.shape[1]
        out = np.zeros((n, n))
        for k in range(self.L.shape[0]):
            out += np.diag(self.L[k, : n - k], -k)
        return out


def cholesky_banded(A: BandedMatrix) -> CholeskyFactor:
    """Factor a symmetric positive definite banded matrix.

    Raises
    ------
    NonPositivePivotError
        If a pivot is not strictly positive, i.e. A is not positive definite.
    """
    if not isinstance(A, BandedMatrix):
        A = BandedMatrix.from_sparse(A) if sp.issparse(A) else BandedMatrix.from_dense(A)
    L, status = kernels.banded_cholesky(A.bands)
    if status:
        raise NonPositivePivotError(status - 1, float(L[0, status - 1]))
    L.setflags(write=False)
    return CholeskyFactor(L)


def cg_solve(
    apply: Callable[[np.ndarray], np.ndarray],
    b,
    tol: float = 1e-10,
    maxit: int | None = None,
    precond=None,
    x0=None,
    callback: Callable[[np.ndarray], None] | None = None,
):
    """Preconditioned conjugate gradients for an SPD operator.

    ``precond`` is either an array (the diagonal, Jacobi scaling) or a callable
    applying M^{-1}. Stops when ``||b - A x|| <= tol * ||b||``; ``callback`` sees
    every iterate.
    """
    b = np.asarray(b, dtype=np.float64)
    n = b.size
    if maxit is None:
        maxit = max(10 * n, 100)
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return np.zeros_like(b)
    if precond is None:
        minv = None
    elif callable(precond):
        minv = precond
    else:
        d = np.asarray(precond, dtype=np.float64)
        if np.any(d <= 0):
            raise InvalidArgumentError("diagonal preconditioner must be positive")
        inv = 1.0 / d
        minv = lambda r: inv * r  # noqa: E731

    x = np.zeros_like(b) if x0 is None else np.array(x0, dtype=np.float64)
    r = b - apply(x) if x0 is not None else b.copy()
    z = r if minv is None else minv(r)
    p = z.copy()
    rz = r @ z
    rnorm = np.linalg.norm(r)
    for it in range(1, maxit + 1):
        if rnorm <= tol * bnorm:
            return x
        Ap = apply(p)
        pAp = p @ Ap
        if not pAp > 0:
            raise NoConvergenceError("operator is not positive definite", rnorm / bnorm, it)
        alpha = rz / pAp
        x = x + alpha * p
        r = r - alpha * Ap
        if callback is not None:
            callback(x)
        rnorm = np.linalg.norm(r)
        if rnorm <= tol * bnorm:
            return x
        z = r if minv is None else minv(r)
        rz_new = r @ z
        p = z + (rz_new / rz) * p
        rz = rz_new
    raise NoConvergenceError(
        f"CG did not converge in {maxit} iterations (relative residual {rnorm / bnorm:.3e})",
        rnorm / bnorm,
        maxit,
    )


@dataclass
class PencilEigResult:
    eigenvalue: float
    eigenvector: np.ndarray
    residual: float
    iterations: int
    history: list = field(default_factory=list)


def _as_operator(A):
    if isinstance(A, spla.LinearOperator):
        return A.matvec
    if sp.issparse(A):
        A = A.tocsr()
        return lambda x: A @ x
    A = np.asarray(A, dtype=np.float64)
    return lambda x: A @ x


def _make_solver(S):
    """Solver for S x = y; shifts a singular S by 1e-14 * trace(S)."""
    if sp.issparse(S):
        S = S.tocsc()
        try:
            lu = spla.splu(S)
            if np.all(np.isfinite(lu.U.diagonal())) and np.min(np.abs(lu.U.diagonal())) > 0:
                return lu.solve
        except RuntimeError:
            pass
        shift = 1e-14 * abs(S.diagonal().sum())
        return spla.splu((S + shift * sp.identity(S.shape[0], format="csc")).tocsc()).solve
    S = np.asarray(S, dtype=np.float64)
    try:
        c = sla.cho_factor(S)
        return lambda y: sla.cho_solve(c, y)
    except np.linalg.LinAlgError:
        shift = 1e-14 * abs(np.trace(S))
        c = sla.lu_factor(S + shift * np.eye(S.shape[0]))
        return lambda y: sla.lu_solve(c, y)


def smallest_pencil_eig(
    S,
    M,
    tol: float = 1e-8,
    maxit: int = 500,
    seed: int = 42,
    solve: Callable[[np.ndarray], np.ndarray] | None = None,
) -> PencilEigResult:
    """Smallest eigenpair of ``S x = lambda M x`` by zero-shift inverse iteration.

    ``S`` is symmetric positive semidefinite and ``M`` symmetric positive
    definite; either may be dense, sparse or a ``LinearOperator``. When ``S``
    is only available as an operator, pass ``solve`` applying S^{-1}.

    The iterate is kept M-normalized, so the Rayleigh quotient is ``x^T S x``;
    its per-iteration values are stored in ``history``. Converged when
    ``||S x - lambda M x|| <= tol * ||S x||``.
    """
    apply_S = _as_operator(S)
    apply_M = _as_operator(M)
    n = M.shape[0]
    if S.shape != (n, n):
        raise InvalidArgumentError(f"pencil shape mismatch: S {S.shape}, M {M.shape}")
    if solve is None:
        if isinstance(S, spla.LinearOperator):
            raise InvalidArgumentError("operator-form S needs an explicit solve")
        solve = _make_solver(S)

    rng = np.random.default_rng(seed)
    x = rng.standard_normal(n)
    x /= np.sqrt(x @ apply_M(x))
    history = []
    res = np.inf
    for it in range(1, maxit + 1):
        y = solve(apply_M(x))
        if not np.all(np.isfinite(y)):
            raise SingularSystemError("inverse iteration produced non-finite values")
        My = apply_M(y)
        x = y / np.sqrt(y @ My)
        Sx = apply_S(x)
        lam = float(x @ Sx)
        history.append(lam)
        r = Sx - lam * apply_M(x)
        sn = np.linalg.norm(Sx)
        res = np.linalg.norm(r) / sn if sn > 0 else 0.0
        if res <= tol:
            break
    else:
        raise NoConvergenceError(
            f"inverse iteration did not converge in {maxit} iterations (residual {res:.3e})",
            res,
            maxit,
        )
    # deterministic sign: largest-magnitude entry positive
    i = int(np.argmax(np.abs(x)))
    if x[i] < 0:
        x = -x
    return PencilEigResult(max(lam, 0.0), x, float(res), it, history)


@dataclass(frozen=True, eq=False)
class KroneckerOperator:
    """Sum of Kronecker products ``sum_i sign_i (A_i kron B_i)``.

    Vectors are time-major: entry ``(i_t, i_x)`` sits at ``i_t * n_x + i_x``,
    so ``(A kron B) vec(U) = vec(A U B^T)`` for ``U`` of shape (n_t, n_x).
    """

    time_factors: tuple
    space_factors: tuple
    signs: tuple

    def __post_init__(self):
        if not (len(self.time_factors) == len(self.space_factors) == len(self.signs)):
            raise InvalidArgumentError("factor lists and signs must have equal length")
        if not self.signs:
            raise InvalidArgumentError("empty Kronecker sum")
        rows = {A.shape[0] for A in self.time_factors}, {B.shape[0] for B in self.space_factors}
        cols = {A.shape[1] for A in self.time_factors}, {B.shape[1] for B in self.space_factors}
        if len(rows[0]) != 1 or len(rows[1]) != 1 or len(cols[0]) != 1 or len(cols[1]) != 1:
            raise InvalidArgumentError("inconsistent factor shapes in Kronecker sum")
        tf = tuple(sp.csr_matrix(A) for A in self.time_factors)
        sf = tuple(sp.csr_matrix(B) for B in self.space_factors)
        object.__setattr__(self, "time_factors", tf)
        object.__setattr__(self, "space_factors", sf)
        object.__setattr__(self, "signs", tuple(float(s) for s in self.signs))

    @classmethod
    def single(cls, A, B, sign: float = 1.0) -> "KroneckerOperator":
        return cls((A,), (B,), (sign,))

    def __add__(self, other: "KroneckerOperator") -> "KroneckerOperator":
        return KroneckerOperator(
            self.time_factors + other.time_factors,
            self.space_factors + other.space_factors,
            self.signs + other.signs,
        )

    @property
    def in_shape(self) -> tuple[int, int]:
        return (self.time_factors[0].shape[1], self.space_factors[0].shape[1])

    @property
    def out_shape(self) -> tuple[int, int]:
        return (self.time_factors[0].shape[0], self.space_factors[0].shape[0])

    @property
    def shape(self) -> tuple[int, int]:
        o, i = self.out_shape, self.in_shape
        return (o[0] * o[1], i[0] * i[1])

    def matvec(self, u) -> np.ndarray:
        return kron_matvec(self, u)

    def __matmul__(self, u):
        return kron_matvec(self, u)

    @property
    def T(self) -> "KroneckerOperator":
        return KroneckerOperator(
            tuple(A.T for A in self.time_factors),
            tuple(B.T for B in self.space_factors),
            self.signs,
        )

    def diagonal(self) -> np.ndarray:
        d = 0.0
        for s, A, B in zip(self.signs, self.time_factors, self.space_factors):
            d = d + s * np.outer(A.diagonal(), B.diagonal()).ravel()
        return d

    def to_sparse(self) -> sp.csr_matrix:
        out = None
        for s, A, B in zip(self.signs, self.time_factors, self.space_factors):
            term = s * sp.kron(A, B, format="csr")
            out = term if out is None else out + term
        return out.tocsr()

    def to_dense(self) -> np.ndarray:
        return self.to_sparse().toarray()

    def as_linear_operator(self) -> spla.LinearOperator:
        return spla.LinearOperator(self.shape, matvec=self.matvec, rmatvec=self.T.matvec, dtype=np.float64)


def kron_matvec(op: KroneckerOperator, u) -> np.ndarray:
    """Apply a Kronecker sum to a time-major vectorized field (or a 2D array)."""
    u = np.asarray(u, dtype=np.float64)
    nt, nx = op.in_shape
    if u.size != nt * nx:
        raise InvalidArgumentError(f"field of size {u.size} does not match operator input {nt}x{nx}")
    U = u.reshape(nt, nx)
    out = np.zeros(op.out_shape)
    for s, A, B in zip(op.signs, op.time_factors, op.space_factors):
        out += s * (A @ (B @ U.T).T)
    return out.ravel()


def kron_solve_cg(op: KroneckerOperator, b, tol: float = 1e-10, maxit: int | None = None) -> np.ndarray:
    """CG on a symmetric positive definite Kronecker sum with Jacobi scaling."""
    return cg_solve(op.matvec, b, tol=tol, maxit=maxit, precond=op.diagonal())


def solve_lower_banded(ab, b) -> np.ndarray:
    """Forward substitution for ``A x = b`` with ``A[i, i-k] = ab[k, i]``."""
    ab = np.ascontiguousarray(ab, dtype=np.float64)
    x, status = kernels.lower_banded_solve(ab, np.ascontiguousarray(b, dtype=np.float64))
    if status:
        raise SingularSystemError(f"zero or non-finite diagonal at row {status - 1}")
    return x


def lower_banded_from_sparse(A, bandwidth: int) -> np.ndarray:
    """Row-indexed lower band storage ``ab[k, i] = A[i, i-k]`` for square A."""
    A = sp.csr_matrix(A)
    n = A.shape[0]
    coo = A.tocoo()
    k = coo.row - coo.col
    if np.any(k < 0) or np.any(k > bandwidth):
        raise InvalidArgumentError("matrix is not lower banded with the given bandwidth")
    ab = np.zeros((bandwidth + 1, n))
    ab[k, coo.row] = coo.data
    return ab
