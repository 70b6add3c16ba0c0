"""Wave equation on Q = (0, L) x (0, T) with tensor-product P1 space-time elements.

Coefficient fields are stored time-major as arrays of shape (time dofs, space
dofs). Spatial Dirichlet nodes x=0 and x=L are always eliminated. In time the
ansatz keeps nodes 1..n_t (zero at t=0), the test space nodes 0..n_t-1 (zero
at t=T), and the extended space on (-T, T) the interior nodes.

    a(u, v) = -<d_t u, d_t v> + <d_x u, d_x v>
    A       = -(D_t kron M_x) + (C_t kron K_x)

The Gram operators of the H^{1,1} norm ``||d_t v||^2 + ||d_x v||^2`` are
``K_t kron M_x + M_t kron K_x`` restricted to the respective index sets.

Right-hand-side amplitudes refer to the unnormalized modes sin(k pi x / L),
so ``InitialVelocity(k=1, amplitude=pi)`` on L=1 is v0 = pi sin(pi x) with
solution sin(pi x) sin(pi t). ``ModalField`` stores coefficients against the
L2-normalized modes sqrt(2/L) sin(k pi x / L).
"""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence, Union

import numpy as np
import scipy.fft
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import temporal as tc
from .errors import (
    InvalidArgumentError,
    MeshMismatchError,
    SingularSystemError,
    SolverError,
)
from .linalg import KroneckerOperator, kron_solve_cg, smallest_pencil_eig
from .mesh import (
    Mesh1d,
    TensorGrid,
    gauss_rule,
    interpolation_matrix,
    make_uniform_mesh,
    prolongation,
    quadrature_points,
)

RESOLUTION_FACTOR = 16  # elements per pi / (sqrt(mu) T)


@dataclass(frozen=True)
class WaveDomain:
    L: float
    T: float

    def __post_init__(self):
        for name in ("L", "T"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise InvalidArgumentError(f"{name} must be > 0, got {v!r}")

    def grid(self, n_t: int, n_x: int) -> TensorGrid:
        return TensorGrid(make_uniform_mesh(n_t, 0.0, self.T), make_uniform_mesh(n_x, 0.0, self.L))


def domain_of(grid: TensorGrid) -> WaveDomain:
    if grid.time_mesh.a != 0.0 or grid.space_mesh.a != 0.0:
        raise MeshMismatchError("space-time grids live on [0, L] x [0, T]")
    return WaveDomain(grid.space_mesh.b, grid.time_mesh.b)


# --------------------------------------------------------------------------
# sine modes
# --------------------------------------------------------------------------


def sine_mode(L: float, k: int, x, normalized: bool = True) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    s = np.sin(k * math.pi * x / L)
    return math.sqrt(2.0 / L) * s if normalized else s


def mode_eigenvalue(L: float, k) -> np.ndarray:
    return (np.asarray(k, dtype=np.float64) * math.pi / L) ** 2


@dataclass(frozen=True, eq=False)
class ModalField:
    """Coefficients ``c_k(t)`` against the normalized modes, k = 1..K.

    ``coefficients`` has shape (K, len(t)); a skeleton has no temporal data.
    """

    L: float
    K: int
    t: np.ndarray | None = None
    coefficients: np.ndarray | None = None

    def __post_init__(self):
        if int(self.K) != self.K or self.K < 1:
            raise InvalidArgumentError(f"K must be a positive integer, got {self.K!r}")
        if not self.L > 0:
            raise InvalidArgumentError("L must be > 0")
        object.__setattr__(self, "K", int(self.K))
        if self.coefficients is not None:
            c = np.array(self.coefficients, dtype=np.float64)
            t = np.array(self.t, dtype=np.float64)
            if c.shape != (self.K, t.size):
                raise InvalidArgumentError(f"coefficients must have shape ({self.K}, {t.size})")
            object.__setattr__(self, "coefficients", c)
            object.__setattr__(self, "t", t)

    @property
    def k(self) -> np.ndarray:
        return np.arange(1, self.K + 1)

    @property
    def mu(self) -> np.ndarray:
        return mode_eigenvalue(self.L, self.k)

    def amplitudes(self) -> np.ndarray:
        """Coefficients against the unnormalized sin(k pi x / L)."""
        return self.coefficients * math.sqrt(2.0 / self.L)

    def basis(self, x) -> np.ndarray:
        """(K, len(x)) array of normalized modes."""
        return sine_mode(self.L, self.k[:, None], np.asarray(x)[None, :])

    def evaluate(self, x) -> np.ndarray:
        """Field values of shape (len(t), len(x))."""
        if self.coefficients is None:
            raise InvalidArgumentError("skeleton ModalField has no temporal data")
        return self.coefficients.T @ self.basis(np.atleast_1d(x))


def sine_eigenpairs(L: float, K: int) -> ModalField:
    return ModalField(float(L), K)


def modal_decompose(values, L: float, K: int, n: int | None = None) -> np.ndarray:
    """Normalized sine coefficients of samples on a uniform grid of [0, L].

    ``values`` holds the n+1 nodal samples (last axis) or is a callable, sampled
    on ``n`` elements (default max(4K, 64)). Exact on span{phi_1..phi_K} via DST-I.
    """
    if callable(values):
        n = max(4 * K, 64) if n is None else int(n)
        x = make_uniform_mesh(n, 0.0, L).nodes
        values = values(x)
    v = np.asarray(values, dtype=np.float64)
    n = v.shape[-1] - 1
    if n < 4 * K:
        raise InvalidArgumentError(f"{n} elements cannot resolve {K} modes (need >= {4 * K})")
    if n < 2:
        return np.zeros(v.shape[:-1] + (K,))
    X = scipy.fft.dst(v[..., 1:-1], type=1, axis=-1)
    amp = X[..., :K] / n
    return amp * math.sqrt(L / 2.0)


def modal_reconstruct(coefficients, L: float, x) -> np.ndarray:
    c = np.asarray(coefficients, dtype=np.float64)
    K = c.shape[-1]
    return c @ sine_mode(L, np.arange(1, K + 1)[:, None], np.asarray(x)[None, :])


# --------------------------------------------------------------------------
# right-hand sides
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class InitialVelocity:
    """Functional v -> <v0, v(., 0)> with v0 = amplitude * sin(k pi x / L)."""

    k: int
    amplitude: float

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 1:
            raise InvalidArgumentError(f"mode index must be a positive integer, got {self.k!r}")
        if not math.isfinite(self.amplitude):
            raise InvalidArgumentError("amplitude must be finite")
        object.__setattr__(self, "k", int(self.k))

    def to_dict(self) -> dict:
        return {"variant": "InitialVelocity", "k": self.k, "amplitude": self.amplitude}


@dataclass(frozen=True, eq=False)
class ModalDensity:
    """Density f(x, t) = g(t) sin(k pi x / L)."""

    k: int
    density: object

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 1:
            raise InvalidArgumentError(f"mode index must be a positive integer, got {self.k!r}")
        if not isinstance(self.density, (tc.Density, tc.Samples)):
            raise InvalidArgumentError("modal density needs a temporal Density or Samples")
        object.__setattr__(self, "k", int(self.k))

    def to_dict(self) -> dict:
        return {"variant": "ModalDensity", "k": self.k, "density": self.density.to_dict()}


@dataclass(frozen=True, eq=False)
class GridDensity:
    """Nodal samples (time nodes x space nodes) of a density, interpolated bilinearly."""

    values: np.ndarray
    x: np.ndarray | None = None
    path: str | None = None

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float64)
        if v.ndim != 2 or min(v.shape) < 2:
            raise InvalidArgumentError("grid density needs a 2D sample matrix with >= 2 rows and columns")
        if not np.all(np.isfinite(v)):
            raise InvalidArgumentError("grid density samples must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        if self.x is not None:
            x = np.array(self.x, dtype=np.float64)
            if x.shape != (v.shape[1],):
                raise InvalidArgumentError("one x-coordinate per sample column")
            object.__setattr__(self, "x", x)

    @classmethod
    def from_csv(cls, path) -> "GridDensity":
        x, v = read_grid_csv(path)
        return cls(v, x, str(path))

    @classmethod
    def from_function(cls, grid: TensorGrid, func: Callable) -> "GridDensity":
        X, Tt = np.meshgrid(grid.space_mesh.nodes, grid.time_mesh.nodes)
        return cls(np.asarray(func(X, Tt), dtype=np.float64) * np.ones(grid.shape), grid.space_mesh.nodes)

    def check_grid(self, grid: TensorGrid):
        if self.values.shape != grid.shape:
            raise MeshMismatchError(f"sample matrix {self.values.shape} does not match grid nodes {grid.shape}")
        if self.x is not None and not np.allclose(self.x, grid.space_mesh.nodes, rtol=0, atol=1e-12 * grid.space_mesh.length):
            raise MeshMismatchError("sample x-coordinates differ from the spatial mesh nodes")

    def to_dict(self) -> dict:
        d = {"variant": "GridDensity", "shape": list(self.values.shape)}
        if self.path is not None:
            d["path"] = self.path
        return d


WaveRhsSpec = Union[InitialVelocity, ModalDensity, GridDensity]


def read_grid_csv(path) -> tuple[np.ndarray, np.ndarray]:
    """Header row of x-coordinates, then one row per time node."""
    path = Path(path)
    try:
        with path.open(newline="", encoding="utf-8") as fh:
            rows = [r for r in csv.reader(fh) if r]
    except OSError as exc:
        raise InvalidArgumentError(f"cannot read grid density {path}: {exc}") from exc
    if len(rows) < 3:
        raise InvalidArgumentError(f"{path}: need a header and at least 2 time rows")
    try:
        data = np.array([[float(c) for c in r] for r in rows], dtype=np.float64)
    except ValueError as exc:
        raise InvalidArgumentError(f"{path}: {exc}") from exc
    except Exception as exc:  # ragged rows
        raise InvalidArgumentError(f"{path}: malformed sample matrix ({exc})") from exc
    if data.ndim != 2:
        raise InvalidArgumentError(f"{path}: rows have different lengths")
    return data[0].copy(), data[1:].copy()


# --------------------------------------------------------------------------
# space-time functions
# --------------------------------------------------------------------------


class StBC(str, enum.Enum):
    ANSATZ = "ansatz"
    TEST = "test"
    EXTENDED = "extended"


_TIME_BC = {StBC.ANSATZ: tc.BC.ANSATZ, StBC.TEST: tc.BC.TEST, StBC.EXTENDED: tc.BC.DIRICHLET}


def _free_time(bc: StBC, n_nodes: int) -> slice:
    return tc.free_slice(_TIME_BC[bc], n_nodes)


@dataclass(frozen=True, eq=False)
class SpaceTimeFunction:
    grid: TensorGrid
    coefficients: np.ndarray
    bc: StBC

    def __post_init__(self):
        bc = StBC(self.bc)
        nt = len(range(self.grid.time_mesh.n_nodes)[_free_time(bc, self.grid.time_mesh.n_nodes)])
        nx = self.grid.space_mesh.n_nodes - 2
        c = np.array(self.coefficients, dtype=np.float64)
        if c.size != nt * nx:
            raise InvalidArgumentError(f"{bc.value} field needs {nt}x{nx} coefficients, got {c.shape}")
        c = c.reshape(nt, nx)
        c.setflags(write=False)
        object.__setattr__(self, "coefficients", c)
        object.__setattr__(self, "bc", bc)

    @classmethod
    def interpolate(cls, grid: TensorGrid, func: Callable, bc: StBC = StBC.ANSATZ) -> "SpaceTimeFunction":
        X, Tt = np.meshgrid(grid.space_mesh.nodes, grid.time_mesh.nodes)
        vals = np.asarray(func(X, Tt), dtype=np.float64) * np.ones(grid.shape)
        bc = StBC(bc)
        return cls(grid, vals[_free_time(bc, grid.time_mesh.n_nodes), 1:-1], bc)

    @classmethod
    def from_nodal(cls, grid: TensorGrid, values, bc: StBC = StBC.ANSATZ) -> "SpaceTimeFunction":
        bc = StBC(bc)
        v = np.asarray(values, dtype=np.float64)
        return cls(grid, v[_free_time(bc, grid.time_mesh.n_nodes), 1:-1], bc)

    @property
    def vector(self) -> np.ndarray:
        return self.coefficients.ravel()

    def nodal_values(self) -> np.ndarray:
        U = np.zeros(self.grid.shape)
        U[_free_time(self.bc, self.grid.time_mesh.n_nodes), 1:-1] = self.coefficients
        return U

    def __call__(self, x, t) -> np.ndarray:
        """Values on the tensor product of the coordinate lists t x x."""
        Pt = interpolation_matrix(self.grid.time_mesh, t)
        Px = interpolation_matrix(self.grid.space_mesh, x)
        return Pt @ (Px @ self.nodal_values().T).T

    def scaled(self, alpha: float) -> "SpaceTimeFunction":
        return SpaceTimeFunction(self.grid, alpha * self.coefficients, self.bc)

    def prolongate(self, fine: TensorGrid) -> "SpaceTimeFunction":
        Pt = prolongation(self.grid.time_mesh, fine.time_mesh)
        Px = prolongation(self.grid.space_mesh, fine.space_mesh)
        U = Pt @ (Px @ self.nodal_values().T).T
        return SpaceTimeFunction.from_nodal(fine, U, self.bc)

    def l2_error(self, exact: Callable, n_points: int = 5) -> tuple[float, float]:
        """(||u - exact||, ||exact||) in L2(Q) by tensor Gauss quadrature."""
        rule = gauss_rule(n_points)
        pt, wt = quadrature_points(self.grid.time_mesh, rule)
        px, wx = quadrature_points(self.grid.space_mesh, rule)
        pt, wt, px, wx = pt.ravel(), wt.ravel(), px.ravel(), wx.ravel()
        uh = self(px, pt)
        ue = exact(px[None, :], pt[:, None])
        W = np.outer(wt, wx)
        return math.sqrt(float(np.sum(W * (uh - ue) ** 2))), math.sqrt(float(np.sum(W * ue**2)))


# --------------------------------------------------------------------------
# assembly
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SpaceTimeSystem:
    grid: TensorGrid
    A: KroneckerOperator
    N_test: KroneckerOperator
    M_ansatz: KroneckerOperator
    time: tc.TemporalMatrices
    Mx: sp.csr_matrix
    Kx: sp.csr_matrix

    def sparse_A(self) -> sp.csc_matrix:
        return self.A.to_sparse().tocsc()


def _space_matrices(space: Mesh1d):
    if space.n_elements < 2:
        raise InvalidArgumentError("spatial mesh needs at least one interior node")
    return tc.mass_matrix(space)[1:-1, 1:-1].tocsr(), tc.stiffness_matrix(space)[1:-1, 1:-1].tocsr()


def h11_gram(Kt, Mt, Mx, Kx) -> KroneckerOperator:
    return KroneckerOperator((Kt, Mt), (Mx, Kx), (1.0, 1.0))


def assemble_spacetime(grid: TensorGrid) -> SpaceTimeSystem:
    domain_of(grid)
    tm = tc.assemble_temporal_matrices(grid.time_mesh)
    Mx, Kx = _space_matrices(grid.space_mesh)
    A = KroneckerOperator((tm.D, tm.C), (Mx, Kx), (-1.0, 1.0))
    N = h11_gram(tm.test_stiffness, tm.test_mass, Mx, Kx)
    M = h11_gram(tm.ansatz_stiffness, tm.ansatz_mass, Mx, Kx)
    return SpaceTimeSystem(grid, A, N, M, tm, Mx, Kx)


def _space_load(space: Mesh1d, func: Callable, n_points: int = tc.RHS_QUAD_POINTS) -> np.ndarray:
    rule = gauss_rule(n_points)
    pts, wts = quadrature_points(space, rule)
    fw = func(pts) * wts
    full = np.zeros(space.n_nodes)
    full[:-1] += fw @ (1.0 - rule.points)
    full[1:] += fw @ rule.points
    return full[1:-1]


def assemble_wave_rhs(grid: TensorGrid, spec: WaveRhsSpec) -> np.ndarray:
    """Load matrix over test dofs, shape (n_t, n_x - 1)."""
    dom = domain_of(grid)
    nt = grid.time_mesh.n_elements
    if isinstance(spec, InitialVelocity):
        F = np.zeros((nt, grid.space_mesh.n_nodes - 2))
        # only the t=0 test hat has a nonzero trace
        F[0] = _space_load(grid.space_mesh, lambda x: spec.amplitude * sine_mode(dom.L, spec.k, x, False))
        return F
    if isinstance(spec, ModalDensity):
        g = tc.assemble_rhs(grid.time_mesh, spec.density)
        b = _space_load(grid.space_mesh, lambda x: sine_mode(dom.L, spec.k, x, False))
        return np.outer(g, b)
    if isinstance(spec, GridDensity):
        spec.check_grid(grid)
        Mt = tc.mass_matrix(grid.time_mesh)[:-1, :]
        Mx = tc.mass_matrix(grid.space_mesh)[1:-1, :]
        return Mt @ (Mx @ spec.values.T).T
    raise InvalidArgumentError(f"unsupported wave right-hand side {spec!r}")


def density_l2_norm(grid: TensorGrid, spec: WaveRhsSpec) -> float:
    """||f||_{L2(Q)} of a density (bilinear interpolant for GridDensity)."""
    dom = domain_of(grid)
    if isinstance(spec, GridDensity):
        spec.check_grid(grid)
        V = spec.values
        Mt = tc.mass_matrix(grid.time_mesh)
        Mx = tc.mass_matrix(grid.space_mesh)
        return math.sqrt(max(float(np.sum(V * (Mt @ (Mx @ V.T).T))), 0.0))
    if isinstance(spec, ModalDensity):
        rule = gauss_rule(tc.RHS_QUAD_POINTS)
        pts, wts = quadrature_points(grid.time_mesh, rule)
        g2 = float(np.sum(wts * spec.density(pts) ** 2))
        return math.sqrt(g2 * dom.L / 2.0)
    raise InvalidArgumentError("initial-velocity data is not an L2 density")


def solve_wave(system: SpaceTimeSystem, F, check: bool = True) -> SpaceTimeFunction:
    """Direct sparse LU solve of the square Petrov-Galerkin system."""
    F = np.asarray(F, dtype=np.float64).ravel()
    if F.size != system.A.shape[0]:
        raise MeshMismatchError(f"load of size {F.size} does not match {system.A.shape[0]} test dofs")
    ratio = system.grid.ratio
    if not np.any(F):
        return SpaceTimeFunction(system.grid, np.zeros(system.A.shape[1]), StBC.ANSATZ)
    A = system.sparse_A()
    try:
        u = spla.splu(A).solve(F)
    except RuntimeError as exc:
        raise SingularSystemError(f"space-time system is singular (h_t/h_x = {ratio:.4g}): {exc}") from exc
    if not np.all(np.isfinite(u)):
        raise SingularSystemError(f"non-finite solution (h_t/h_x = {ratio:.4g})")
    if check:
        res = np.linalg.norm(A @ u - F) / np.linalg.norm(F)
        if res > 1e-10:
            raise SolverError(f"space-time residual {res:.3e} exceeds 1e-10 (h_t/h_x = {ratio:.4g})")
    return SpaceTimeFunction(system.grid, u, StBC.ANSATZ)


# --------------------------------------------------------------------------
# norms
# --------------------------------------------------------------------------


def _gram_form(u: SpaceTimeFunction, Kt, Mt, Kx, Mx) -> tuple[float, float]:
    U = u.nodal_values()
    dt = float(np.sum(U * (Kt @ (Mx @ U.T).T)))
    dx = float(np.sum(U * (Mt @ (Kx @ U.T).T)))
    return dt, dx


def energy_norm(u: SpaceTimeFunction) -> float:
    """sqrt(||d_t u||^2 + ||d_x u||^2) over Q."""
    tmesh, xmesh = u.grid.time_mesh, u.grid.space_mesh
    dt, dx = _gram_form(
        u, tc.stiffness_matrix(tmesh), tc.mass_matrix(tmesh), tc.stiffness_matrix(xmesh), tc.mass_matrix(xmesh)
    )
    return math.sqrt(max(dt + dx, 0.0))


def l2_norm(u: SpaceTimeFunction) -> float:
    U = u.nodal_values()
    Mt = tc.mass_matrix(u.grid.time_mesh)
    Mx = tc.mass_matrix(u.grid.space_mesh)
    return math.sqrt(max(float(np.sum(U * (Mt @ (Mx @ U.T).T))), 0.0))


def test_dual_norm(system: SpaceTimeSystem, F, tol: float = 1e-10) -> tc.DualNormReport:
    """sqrt(F^T N^{-1} F) over the H^{1,1} test space, N solved by CG."""
    F = np.asarray(F, dtype=np.float64).ravel()
    if F.size != system.N_test.shape[0]:
        raise MeshMismatchError("load does not match the test space")
    w = kron_solve_cg(system.N_test, F, tol=tol)
    return tc.DualNormReport(math.sqrt(max(F @ w, 0.0)), w, tc.NormKind.TEST_DUAL, 1)


def wave_graph_norm(u: SpaceTimeFunction, refinement: int = tc.DEFAULT_REFINEMENT, tol: float = 1e-10) -> tc.DualNormReport:
    """Norm of the zero-extended box u as the test-dual norm of v -> a(u, v).

    Test functions live on the grid refined by ``refinement`` in both directions.
    """
    if u.bc is not StBC.ANSATZ:
        raise InvalidArgumentError("graph norm expects an ansatz field")
    r = int(refinement)
    if r < 1:
        raise InvalidArgumentError("refinement must be >= 1")
    fine = u.grid.refine(r)
    uf = u.prolongate(fine)
    system = assemble_spacetime(fine)
    rep = test_dual_norm(system, system.A @ uf.vector, tol)
    rep.which = tc.NormKind.GRAPH_E_REP
    rep.refinement = r
    return rep


def interior_residual_norm(u: SpaceTimeFunction, tol: float = 1e-10) -> tc.DualNormReport:
    """Dual norm of v -> a(u, v) over test functions that also vanish at t=0.

    Removes the initial-time sheet from the graph norm: what is left measures
    the discrete residual of the wave equation inside Q.
    """
    system = assemble_spacetime(u.grid)
    F = (system.A @ u.vector).reshape(-1, u.grid.space_mesh.n_nodes - 2)[1:]
    tm = system.time
    N = h11_gram(tm.K[1:-1, 1:-1], tm.M[1:-1, 1:-1], system.Mx, system.Kx)
    Fv = F.ravel()
    w = kron_solve_cg(N, Fv, tol=tol)
    return tc.DualNormReport(math.sqrt(max(Fv @ w, 0.0)), w, tc.NormKind.TEST_DUAL, 1)


def extended_functional(u: SpaceTimeFunction, refinement: int = 1) -> tuple[TensorGrid, np.ndarray]:
    """G_i = a(u, R z_i) over interior nodes of Omega x (-T, T), shape (2 n_t - 1, n_x - 1)."""
    fine = u.grid.refine(int(refinement))
    uf = u.prolongate(fine)
    system = assemble_spacetime(fine)
    F = (system.A @ uf.vector).reshape(fine.time_mesh.n_elements, -1)
    ext = TensorGrid(fine.time_mesh.mirror(), fine.space_mesh)
    G = np.vstack([np.zeros((fine.time_mesh.n_elements - 1, F.shape[1])), F])
    return ext, G


def wave_extended_dual_norm(u: SpaceTimeFunction, refinement: int = 1, tol: float = 1e-10) -> tc.DualNormReport:
    """sqrt(G^T K_ext^{-1} G) with the full-gradient Gram on Omega x (-T, T)."""
    if u.bc is not StBC.ANSATZ:
        raise InvalidArgumentError("extended dual norm expects an ansatz field")
    ext, G = extended_functional(u, refinement)
    Mx, Kx = _space_matrices(ext.space_mesh)
    tm = ext.time_mesh
    Kt = tc.stiffness_matrix(tm)[1:-1, 1:-1]
    Mt = tc.mass_matrix(tm)[1:-1, 1:-1]
    op = h11_gram(Kt, Mt, Mx, Kx)
    g = G.ravel()
    z = kron_solve_cg(op, g, tol=tol)
    return tc.DualNormReport(math.sqrt(max(g @ z, 0.0)), z, tc.NormKind.EXTENDED_DUAL, int(refinement))


# --------------------------------------------------------------------------
# inf-sup, oracle, demonstrations
# --------------------------------------------------------------------------


def infsup_wave(grid: TensorGrid, tol: float = 1e-8, seed: int = 42) -> tc.InfSupReport:
    """beta_h = sqrt(lambda_min(A^T N^{-1} A, M_ansatz)) in H^{1,1} norms.

    No closed-form lower bound exists (it is not uniform in h); the report
    carries ``bound_infsup=None`` and the continuity constant 1.
    """
    system = assemble_spacetime(grid)
    A = system.sparse_A()
    N = system.N_test.to_sparse().tocsc()
    lu_A = spla.splu(A)
    lu_At = spla.splu(A.T.tocsc())
    lu_N = spla.splu(N)
    n = A.shape[1]
    S = spla.LinearOperator((n, n), matvec=lambda x: A.T @ lu_N.solve(A @ x), dtype=np.float64)

    def solve(y):
        # S^{-1} = A^{-1} N A^{-T}
        return lu_A.solve(N @ lu_At.solve(y))

    res = smallest_pencil_eig(S, system.M_ansatz.to_sparse(), tol=tol, seed=seed, solve=solve)
    return tc.InfSupReport(
        mu=None,
        T=grid.time_mesh.b,
        h=max(grid.time_mesh.h, grid.space_mesh.h),
        beta_h=math.sqrt(res.eigenvalue),
        bound_infsup=None,
        const_continuity=1.0,
        iterations=res.iterations,
    )


class _PiecewiseLinear:
    def __init__(self, t, f):
        self.breakpoints = np.asarray(t)
        self._f = np.asarray(f)

    def __call__(self, s):
        return np.interp(s, self.breakpoints, self._f)


def spectral_solve(domain: WaveDomain, spec: WaveRhsSpec, K: int, t) -> ModalField:
    """Per-mode Duhamel solution; coefficients against normalized modes."""
    t = np.atleast_1d(np.asarray(t, dtype=np.float64))
    field_ = sine_eigenpairs(domain.L, K)
    coeffs = np.zeros((K, t.size))
    scale = math.sqrt(domain.L / 2.0)  # sin amplitude -> normalized coefficient
    if isinstance(spec, (InitialVelocity, ModalDensity)):
        if spec.k > K:
            raise InvalidArgumentError(f"right-hand side excites mode {spec.k} > K={K}")
        mu = float(mode_eigenvalue(domain.L, spec.k))
        params = tc.ModalParams(mu, domain.T)
        if isinstance(spec, InitialVelocity):
            coeffs[spec.k - 1] = scale * tc.point_mass_solution(params, spec.amplitude, t)
        else:
            coeffs[spec.k - 1] = scale * tc.duhamel_oracle(params, spec.density, t)
    elif isinstance(spec, GridDensity):
        n_t = spec.values.shape[0] - 1
        tn = np.linspace(0.0, domain.T, n_t + 1)
        modal = modal_decompose(spec.values, domain.L, K)
        if np.linalg.norm(modal_reconstruct(modal, domain.L, np.linspace(0, domain.L, spec.values.shape[1])) - spec.values) > 1e-8 * (1 + np.linalg.norm(spec.values)):
            raise InvalidArgumentError(f"grid density has content beyond K={K} modes")
        for k in range(1, K + 1):
            g = _PiecewiseLinear(tn, modal[:, k - 1])
            coeffs[k - 1] = tc.duhamel_oracle(tc.ModalParams(float(mode_eigenvalue(domain.L, k)), domain.T), g, t)
    else:
        raise InvalidArgumentError(f"unsupported wave right-hand side {spec!r}")
    return ModalField(field_.L, K, t, coeffs)


@dataclass
class StabilityReport:
    norm_h11: float
    norm_f_l2: float
    bound: float
    satisfied: bool
    case: str = ""
    slack: float = 1.05

    @classmethod
    def build(cls, norm_h11: float, norm_f_l2: float, T: float, slack: float = 1.05, case: str = ""):
        bound = T / math.sqrt(2.0) * norm_f_l2
        return cls(norm_h11, norm_f_l2, bound, bool(norm_h11 <= bound * slack), case, slack)

    @property
    def violation_factor(self) -> float:
        return self.norm_h11 / self.bound if self.bound > 0 else (0.0 if self.norm_h11 == 0 else math.inf)

    def to_dict(self) -> dict:
        return {
            "case": self.case,
            "norm_h11": self.norm_h11,
            "norm_f_l2": self.norm_f_l2,
            "bound": self.bound,
            "satisfied": self.satisfied,
        }


def wave_stability(grid: TensorGrid, spec: WaveRhsSpec, slack: float = 1.05, case: str = "", check: bool = True) -> StabilityReport:
    system = assemble_spacetime(grid)
    u = solve_wave(system, assemble_wave_rhs(grid, spec), check=check)
    return StabilityReport.build(energy_norm(u), density_l2_norm(grid, spec), grid.time_mesh.b, slack, case)


def random_band_limited_density(grid: TensorGrid, rng: np.random.Generator, K: int = 4, J: int = 4) -> GridDensity:
    """sum_{k<=K, j<J} c_kj sin(k pi x / L) cos(j pi t / T) sampled on the grid nodes."""
    dom = domain_of(grid)
    c = rng.standard_normal((K, J))
    x = grid.space_mesh.nodes
    t = grid.time_mesh.nodes
    sx = np.sin(np.outer(np.arange(1, K + 1), x) * math.pi / dom.L)
    ct = np.cos(np.outer(np.arange(J), t) * math.pi / dom.T)
    return GridDensity(ct.T @ c.T @ sx, x)


def random_ansatz_field(grid: TensorGrid, rng: np.random.Generator) -> SpaceTimeFunction:
    nt = grid.time_mesh.n_elements
    nx = grid.space_mesh.n_nodes - 2
    return SpaceTimeFunction(grid, rng.standard_normal((nt, nx)), StBC.ANSATZ)


@dataclass
class CflLevel:
    q: float
    level: int
    n_t: int
    n_x: int
    report: StabilityReport

    @property
    def violation_factor(self) -> float:
        return self.report.violation_factor

    def to_dict(self) -> dict:
        d = self.report.to_dict()
        d.update(q=self.q, level=self.level, n_t=self.n_t, n_x=self.n_x, violation_factor=self.violation_factor)
        return d


def cfl_demo(q: float, levels: int = 3, domain: WaveDomain = WaveDomain(1.0, 1.0), nx0: int = 8, spec_factory=None) -> list[CflLevel]:
    """Stability bound diagnostic on grids with h_t = q h_x, refined ``levels`` times.

    Default data is f = 1. ``spec_factory(grid)`` may supply another density.
    """
    if not (math.isfinite(q) and q > 0):
        raise InvalidArgumentError("mesh ratio q must be > 0")
    out = []
    for level in range(int(levels)):
        n_x = nx0 * 2**level
        h_x = domain.L / n_x
        n_t = max(1, int(round(domain.T / (q * h_x))))
        grid = domain.grid(n_t, n_x)
        spec = spec_factory(grid) if spec_factory else GridDensity(np.ones(grid.shape), grid.space_mesh.nodes)
        rep = wave_stability(grid, spec, case=f"q={q:g},level={level}", check=False)
        out.append(CflLevel(float(q), level, n_t, n_x, rep))
    return out


@dataclass
class Theorem1Row:
    k: int
    mu_k: float
    n: int
    r_k: float

    @property
    def r_k_over_sqrt_mu(self) -> float:
        return self.r_k / math.sqrt(self.mu_k)

    def to_dict(self) -> dict:
        return {"k": self.k, "mu_k": self.mu_k, "r_k": self.r_k, "r_k_over_sqrt_mu": self.r_k_over_sqrt_mu}


def required_elements(mu: float, T: float) -> int:
    return int(math.ceil(RESOLUTION_FACTOR * math.sqrt(mu) * T / math.pi - 1e-9))


def theorem1_demo(
    L: float,
    T: float,
    ks: Sequence[int],
    n: int | None = None,
    refinement: int = tc.DEFAULT_REFINEMENT,
) -> list[Theorem1Row]:
    """Ratios ||d_t u_k|| / ||f_k||_TestDual for f_k = cos(sqrt(mu_k) t).

    Each mode uses ``n`` temporal elements (default: the resolution rule
    n >= 16 sqrt(mu_k) T / pi); the dual norm is taken on the mesh refined by
    ``refinement``.
    """
    dom = WaveDomain(L, T)
    rows = []
    for k in ks:
        mu = float(mode_eigenvalue(dom.L, k))
        need = required_elements(mu, dom.T)
        nk = need if n is None else int(n)
        if nk < need:
            raise InvalidArgumentError(f"mode k={k} needs n >= {need} temporal elements, got {nk}")
        mesh = make_uniform_mesh(nk, 0.0, dom.T)
        f = tc.Density.cosine(math.sqrt(mu))
        u = tc.solve_modal(tc.ModalParams(mu, dom.T), mesh, f)
        fine = mesh.refine(refinement)
        fd = tc.dual_norm_test(fine, tc.assemble_rhs(fine, f)).value
        rows.append(Theorem1Row(int(k), mu, nk, u.h1_seminorm() / fd))
    return rows


@dataclass
class SineExampleReport:
    n: int
    rel_l2_error: float
    energy_norm: float
    energy_norm_exact: float
    graph_norm_interpolant: float
    interior_residual: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def example_sine(n: int = 64, refinement: int = 1) -> SineExampleReport:
    """u = sin(pi x) sin(pi t) driven by the initial velocity pi sin(pi x), L=T=1."""
    dom = WaveDomain(1.0, 1.0)
    grid = dom.grid(n, n)
    system = assemble_spacetime(grid)
    u = solve_wave(system, assemble_wave_rhs(grid, InitialVelocity(1, math.pi)))

    def exact(x, t):
        return np.sin(math.pi * x) * np.sin(math.pi * t)

    err, ref = u.l2_error(exact)
    ui = SpaceTimeFunction.interpolate(grid, exact)
    return SineExampleReport(
        n=n,
        rel_l2_error=err / ref,
        energy_norm=energy_norm(u),
        energy_norm_exact=math.pi / math.sqrt(2.0),
        graph_norm_interpolant=wave_graph_norm(ui, refinement).value,
        interior_residual=interior_residual_norm(ui).value,
    )
