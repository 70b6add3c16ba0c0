"""Modal ODE u'' + mu u = f on (0, T) and its generalized variational setting.

Ansatz functions vanish at t=0, test functions at t=T. On a mesh with nodes
t_0 = 0 < ... < t_n = T both spaces have n degrees of freedom: ansatz
coefficients live on nodes 1..n, test coefficients on nodes 0..n-1. The
extended interval (-T, T) is the mirror mesh with both ends constrained.

The Petrov-Galerkin matrix ``A[i, j] = a_mu(phi_{j+1}, psi_i)`` is lower
banded (bandwidth 2) with diagonal ``1/h + mu h/6 > 0``, so every discrete
problem is uniquely solvable; solving it is a forward sweep in time.
"""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Union

import numpy as np
import scipy.sparse as sp

from .errors import InvalidArgumentError, MeshMismatchError
from .linalg import (
    BandedMatrix,
    cholesky_banded,
    lower_banded_from_sparse,
    smallest_pencil_eig,
    solve_lower_banded,
)
from .mesh import Mesh1d, gauss_rule, interpolation_matrix, prolongation, quadrature_points

MATRIX_QUAD_POINTS = 3
RHS_QUAD_POINTS = 5
DEFAULT_REFINEMENT = 4


# --------------------------------------------------------------------------
# parameters and right-hand sides
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ModalParams:
    mu: float
    T: float

    def __post_init__(self):
        if not (math.isfinite(self.mu) and self.mu > 0):
            raise InvalidArgumentError(f"mu must be > 0, got {self.mu!r}")
        if not (math.isfinite(self.T) and self.T > 0):
            raise InvalidArgumentError(f"T must be > 0, got {self.T!r}")

    @property
    def omega(self) -> float:
        return math.sqrt(self.mu)

    @property
    def infsup_bound(self) -> float:
        return 2.0 / (2.0 + self.omega * self.T)

    @property
    def continuity_constant(self) -> float:
        return 1.0 + 4.0 * self.mu * self.T**2 / math.pi**2

    @property
    def stability_constant(self) -> float:
        return 1.0 + 0.5 * self.omega * self.T


_PROFILES = ("const", "sine", "cosine", "poly", "callable")


@dataclass(frozen=True, eq=False)
class Density:
    """L2 right-hand side ``f(t)``.

    Named profiles: ``const`` (c), ``sine`` (omega, amplitude) for
    ``a sin(omega t)``, ``cosine`` likewise, ``poly`` with ascending
    coefficients. ``callable`` wraps a vectorized function.
    """

    kind: str
    params: tuple = ()
    func: Callable | None = None

    def __post_init__(self):
        if self.kind not in _PROFILES:
            raise InvalidArgumentError(f"unknown density profile {self.kind!r}")
        params = tuple(float(p) for p in self.params)
        if not all(math.isfinite(p) for p in params):
            raise InvalidArgumentError("density parameters must be finite")
        object.__setattr__(self, "params", params)
        if self.kind == "callable" and not callable(self.func):
            raise InvalidArgumentError("callable density needs a function")

    @classmethod
    def const(cls, c: float = 1.0) -> "Density":
        return cls("const", (c,))

    @classmethod
    def sine(cls, omega: float, amplitude: float = 1.0) -> "Density":
        return cls("sine", (omega, amplitude))

    @classmethod
    def cosine(cls, omega: float, amplitude: float = 1.0) -> "Density":
        return cls("cosine", (omega, amplitude))

    @classmethod
    def poly(cls, coefficients) -> "Density":
        return cls("poly", tuple(coefficients))

    @classmethod
    def from_callable(cls, func: Callable) -> "Density":
        return cls("callable", (), func)

    @property
    def breakpoints(self) -> np.ndarray:
        return np.empty(0)

    def __call__(self, t):
        t = np.asarray(t, dtype=np.float64)
        p = self.params
        if self.kind == "const":
            out = np.full_like(t, p[0])
        elif self.kind == "sine":
            out = p[1] * np.sin(p[0] * t)
        elif self.kind == "cosine":
            out = p[1] * np.cos(p[0] * t)
        elif self.kind == "poly":
            out = np.polynomial.polynomial.polyval(t, p) if p else np.zeros_like(t)
        else:
            out = np.broadcast_to(np.asarray(self.func(t), dtype=np.float64), t.shape).copy()
        if not np.all(np.isfinite(out)):
            raise InvalidArgumentError(f"density {self.kind!r} produced non-finite values")
        return out

    def to_dict(self) -> dict:
        return {"variant": "Density", "kind": self.kind, "params": list(self.params)}


@dataclass(frozen=True)
class PointMass:
    """Functional v -> weight * v(0)."""

    weight: float

    def __post_init__(self):
        if not math.isfinite(self.weight):
            raise InvalidArgumentError("point-mass weight must be finite")

    def to_dict(self) -> dict:
        return {"variant": "PointMass", "weight": self.weight}


@dataclass(frozen=True, eq=False)
class Samples:
    """Piecewise-linear density read from a ``t,f`` CSV file."""

    path: str
    t: np.ndarray = field(init=False, repr=False)
    f: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        t, f = read_samples_csv(self.path)
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "f", f)

    @property
    def breakpoints(self) -> np.ndarray:
        return self.t

    def __call__(self, t):
        t = np.asarray(t, dtype=np.float64)
        if np.any(t < self.t[0] - 1e-12) or np.any(t > self.t[-1] + 1e-12):
            raise InvalidArgumentError(
                f"samples cover [{self.t[0]}, {self.t[-1]}] but were evaluated outside"
            )
        return np.interp(t, self.t, self.f)

    def to_dict(self) -> dict:
        return {"variant": "Samples", "path": str(self.path)}


RhsSpec = Union[Density, PointMass, Samples]


def read_samples_csv(path) -> tuple[np.ndarray, np.ndarray]:
    """Read a UTF-8 ``t,f`` file with strictly increasing t."""
    path = Path(path)
    try:
        with path.open(newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise InvalidArgumentError(f"cannot read samples file {path}: {exc}") from exc
    if not rows or [c.strip() for c in rows[0]] != ["t", "f"]:
        raise InvalidArgumentError(f"{path}: header must be 't,f'")
    data = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != 2:
            raise InvalidArgumentError(f"{path}:{lineno}: expected 2 columns, got {len(row)}")
        try:
            data.append((float(row[0]), float(row[1])))
        except ValueError as exc:
            raise InvalidArgumentError(f"{path}:{lineno}: {exc}") from exc
    if len(data) < 2:
        raise InvalidArgumentError(f"{path}: need at least 2 samples")
    arr = np.array(data)
    if not np.all(np.isfinite(arr)):
        raise InvalidArgumentError(f"{path}: non-finite sample values")
    if np.any(np.diff(arr[:, 0]) <= 0):
        raise InvalidArgumentError(f"{path}: t must be strictly increasing")
    return arr[:, 0].copy(), arr[:, 1].copy()


# --------------------------------------------------------------------------
# finite element functions
# --------------------------------------------------------------------------


class BC(str, enum.Enum):
    ANSATZ = "AnsatzZeroStart"
    TEST = "TestZeroEnd"
    DIRICHLET = "DirichletBothEnds"


def free_slice(bc: BC, n_nodes: int) -> slice:
    if bc is BC.ANSATZ:
        return slice(1, n_nodes)
    if bc is BC.TEST:
        return slice(0, n_nodes - 1)
    return slice(1, n_nodes - 1)


@dataclass(frozen=True, eq=False)
class FeFunction1d:
    mesh: Mesh1d
    coefficients: np.ndarray
    bc: BC

    def __post_init__(self):
        bc = BC(self.bc)
        c = np.array(self.coefficients, dtype=np.float64)
        s = free_slice(bc, self.mesh.n_nodes)
        expected = len(range(self.mesh.n_nodes)[s])
        if c.shape != (expected,):
            raise InvalidArgumentError(
                f"{bc.value} on {self.mesh.n_nodes} nodes needs {expected} coefficients, got {c.shape}"
            )
        c.setflags(write=False)
        object.__setattr__(self, "coefficients", c)
        object.__setattr__(self, "bc", bc)

    @classmethod
    def interpolate(cls, mesh: Mesh1d, func: Callable, bc: BC) -> "FeFunction1d":
        vals = np.asarray(func(mesh.nodes), dtype=np.float64) * np.ones(mesh.n_nodes)
        return cls(mesh, vals[free_slice(BC(bc), mesh.n_nodes)], bc)

    @classmethod
    def zero(cls, mesh: Mesh1d, bc: BC) -> "FeFunction1d":
        n = len(range(mesh.n_nodes)[free_slice(BC(bc), mesh.n_nodes)])
        return cls(mesh, np.zeros(n), bc)

    def nodal_values(self) -> np.ndarray:
        v = np.zeros(self.mesh.n_nodes)
        v[free_slice(self.bc, self.mesh.n_nodes)] = self.coefficients
        return v

    def __call__(self, t):
        t = np.asarray(t, dtype=np.float64)
        return (interpolation_matrix(self.mesh, t.ravel()) @ self.nodal_values()).reshape(t.shape)

    def derivative(self) -> np.ndarray:
        """Elementwise constant derivative."""
        return np.diff(self.nodal_values()) / self.mesh.widths

    def l2_norm(self) -> float:
        v = self.nodal_values()
        return math.sqrt(max(v @ (mass_matrix(self.mesh) @ v), 0.0))

    def h1_seminorm(self) -> float:
        d = self.derivative()
        return math.sqrt(float(np.sum(d * d * self.mesh.widths)))

    def scaled(self, alpha: float) -> "FeFunction1d":
        return FeFunction1d(self.mesh, alpha * self.coefficients, self.bc)

    def prolongate(self, fine: Mesh1d) -> "FeFunction1d":
        """Exact representation on a nested finer mesh."""
        vals = prolongation(self.mesh, fine) @ self.nodal_values()
        return FeFunction1d(fine, vals[free_slice(self.bc, fine.n_nodes)], self.bc)


# --------------------------------------------------------------------------
# assembly
# --------------------------------------------------------------------------


def _tridiag(diag, off) -> sp.csr_matrix:
    return sp.diags([off, diag, off], [-1, 0, 1], format="csr")


def mass_matrix(mesh: Mesh1d) -> sp.csr_matrix:
    w = mesh.widths
    diag = np.zeros(mesh.n_nodes)
    diag[:-1] += w / 3.0
    diag[1:] += w / 3.0
    return _tridiag(diag, w / 6.0)


def stiffness_matrix(mesh: Mesh1d) -> sp.csr_matrix:
    iw = 1.0 / mesh.widths
    diag = np.zeros(mesh.n_nodes)
    diag[:-1] += iw
    diag[1:] += iw
    return _tridiag(diag, -iw)


@dataclass(frozen=True, eq=False)
class TemporalMatrices:
    """Full mass/stiffness on all nodes and the test x ansatz couplings.

    ``D[i, j] = int phi_j' psi_i'`` and ``C[i, j] = int phi_j psi_i`` with rows
    over test nodes 0..n-1 and columns over ansatz nodes 1..n.
    """

    mesh: Mesh1d
    M: sp.csr_matrix
    K: sp.csr_matrix
    D: sp.csr_matrix
    C: sp.csr_matrix

    @property
    def test_stiffness(self) -> sp.csr_matrix:
        return self.K[:-1, :-1]

    @property
    def ansatz_stiffness(self) -> sp.csr_matrix:
        return self.K[1:, 1:]

    @property
    def ansatz_mass(self) -> sp.csr_matrix:
        return self.M[1:, 1:]

    @property
    def test_mass(self) -> sp.csr_matrix:
        return self.M[:-1, :-1]

    def pg_matrix(self, mu: float) -> sp.csr_matrix:
        """Matrix of a_mu(u, v) = -(u', v') + mu (u, v)."""
        return (-self.D + mu * self.C).tocsr()


def assemble_temporal_matrices(mesh: Mesh1d) -> TemporalMatrices:
    # closed-form P1 element matrices, exact as the 3-point Gauss rule
    M = mass_matrix(mesh)
    K = stiffness_matrix(mesh)
    D = K[:-1, 1:].tocsr()
    C = M[:-1, 1:].tocsr()
    return TemporalMatrices(mesh, M, K, D, C)


def assemble_rhs(mesh: Mesh1d, spec: RhsSpec, n_points: int = RHS_QUAD_POINTS) -> np.ndarray:
    """Load vector over the test nodes 0..n-1, ``F_i = <f, psi_i>``."""
    if mesh.a != 0.0:
        raise MeshMismatchError("temporal meshes must start at t=0")
    n = mesh.n_elements
    if isinstance(spec, PointMass):
        F = np.zeros(n)
        F[0] = spec.weight
        return F
    if not isinstance(spec, (Density, Samples)):
        raise InvalidArgumentError(f"unsupported right-hand side {spec!r}")
    rule = gauss_rule(n_points)
    pts, wts = quadrature_points(mesh, rule)
    fw = spec(pts) * wts
    full = np.zeros(n + 1)
    full[:-1] += fw @ (1.0 - rule.points)
    full[1:] += fw @ rule.points
    return full[:-1]


# --------------------------------------------------------------------------
# solver and oracle
# --------------------------------------------------------------------------


def _check_mesh(params: ModalParams, mesh: Mesh1d):
    if mesh.a != 0.0 or not math.isclose(mesh.b, params.T, rel_tol=1e-13, abs_tol=0.0):
        raise MeshMismatchError(f"mesh [{mesh.a}, {mesh.b}] does not match (0, T={params.T})")


def solve_pg(mesh: Mesh1d, mu: float, F) -> FeFunction1d:
    """Solve (-D + mu C) u = F by forward substitution."""
    mats = assemble_temporal_matrices(mesh)
    ab = lower_banded_from_sparse(mats.pg_matrix(mu), 2)
    u = solve_lower_banded(ab, np.asarray(F, dtype=np.float64))
    return FeFunction1d(mesh, u, BC.ANSATZ)


def solve_modal(params: ModalParams, mesh: Mesh1d, spec: RhsSpec) -> FeFunction1d:
    _check_mesh(params, mesh)
    return solve_pg(mesh, params.mu, assemble_rhs(mesh, spec))


def _gauss_panels(a: float, b: float, breaks: np.ndarray, m: int, rule):
    edges = np.unique(np.concatenate([[a, b], breaks[(breaks > a) & (breaks < b)]]))
    pts, wts = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        e = np.linspace(lo, hi, m + 1)
        w = np.diff(e)[:, None]
        pts.append(e[:-1, None] + w * rule.points[None, :])
        wts.append(w * rule.weights[None, :])
    return np.concatenate(pts).ravel(), np.concatenate(wts).ravel()


def duhamel_oracle(params: ModalParams, f, t, derivative: bool = False, tol: float = 1e-12) -> np.ndarray:
    """Evaluate ``u(t) = mu^{-1/2} int_0^t f(s) sin(sqrt(mu) (t - s)) ds``.

    With ``derivative=True`` returns ``u'(t) = int_0^t f(s) cos(sqrt(mu)(t - s)) ds``.
    Composite 10-point Gauss; panels double until two successive levels agree
    to ``tol`` (relative to 1 + |value|).
    """
    if isinstance(f, PointMass):
        raise InvalidArgumentError("point masses have the closed form point_mass_solution")
    if not callable(f):
        raise InvalidArgumentError("density must be callable")
    k = params.omega
    rule = gauss_rule(10)
    breaks = np.asarray(getattr(f, "breakpoints", np.empty(0)), dtype=np.float64)
    t = np.asarray(t, dtype=np.float64)
    out = np.empty(t.size)
    for idx, ti in enumerate(t.ravel()):
        if ti < 0 or ti > params.T * (1 + 1e-14):
            raise InvalidArgumentError(f"evaluation point {ti} outside [0, T]")
        if ti == 0.0:
            out[idx] = 0.0
            continue
        m = max(2, int(math.ceil(ti * (k + 1.0))))
        prev = None
        while True:
            s, w = _gauss_panels(0.0, ti, breaks, m, rule)
            kern = np.cos(k * (ti - s)) if derivative else np.sin(k * (ti - s)) / k
            val = float(np.dot(w, f(s) * kern))
            if prev is not None and abs(val - prev) <= tol * (1.0 + abs(val)):
                break
            if m > 1 << 16:
                break
            prev = val
            m *= 2
        out[idx] = val
    return out.reshape(t.shape)


def point_mass_solution(params: ModalParams, weight: float, t, derivative: bool = False) -> np.ndarray:
    """Closed form for PointMass data: ``w sin(sqrt(mu) t) / sqrt(mu)``."""
    t = np.asarray(t, dtype=np.float64)
    k = params.omega
    if derivative:
        return weight * np.cos(k * t)
    return weight * np.sin(k * t) / k


# --------------------------------------------------------------------------
# dual norms
# --------------------------------------------------------------------------


class NormKind(str, enum.Enum):
    TEST_DUAL = "TestDual"
    EXTENDED_DUAL = "ExtendedDual"
    GRAPH_E_REP = "GraphERep"


@dataclass
class DualNormReport:
    value: float
    representer: np.ndarray
    which: NormKind
    refinement: int = 1
    mesh: Mesh1d | None = field(default=None, repr=False)

    def to_dict(self) -> dict:
        return {
            "which": NormKind(self.which).value,
            "value": self.value,
            "representer": [float(x) for x in self.representer],
            "refinement": self.refinement,
        }


def _riesz(K: sp.spmatrix, F) -> tuple[float, np.ndarray]:
    F = np.asarray(F, dtype=np.float64)
    if not np.any(F):
        return 0.0, np.zeros_like(F)
    w = cholesky_banded(BandedMatrix.from_sparse(K)).solve(F)
    return math.sqrt(max(F @ w, 0.0)), w


def dual_norm_test(mesh: Mesh1d, F) -> DualNormReport:
    """Norm of ``v -> F . v`` over the test space with norm ||v'||."""
    F = np.asarray(F, dtype=np.float64)
    if F.shape != (mesh.n_elements,):
        raise MeshMismatchError(f"load vector of length {F.size} does not fit {mesh.n_elements} test nodes")
    value, w = _riesz(stiffness_matrix(mesh)[:-1, :-1], F)
    return DualNormReport(value, w, NormKind.TEST_DUAL, 1, mesh)


@dataclass(frozen=True, eq=False)
class ExtendedFunctional:
    """Action ``G_i = <g, z_i>`` on the interior hats of a mirrored mesh of (-T, T)."""

    mesh: Mesh1d
    values: np.ndarray

    def __post_init__(self):
        if not self.mesh.is_symmetric():
            raise MeshMismatchError("extended mesh must be mirror-symmetric about 0")
        v = np.array(self.values, dtype=np.float64)
        if v.shape != (self.mesh.n_nodes - 2,):
            raise InvalidArgumentError("one value per interior node of the extended mesh")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def interior_nodes(self) -> np.ndarray:
        return self.mesh.nodes[1:-1]

    @property
    def pre_history(self) -> np.ndarray:
        """Entries for hats supported in [-T, 0], i.e. nodes t_i <= -h."""
        return self.values[self.interior_nodes < 0]

    def pair(self, z: FeFunction1d) -> float:
        if z.bc is not BC.DIRICHLET or z.mesh.n_nodes != self.mesh.n_nodes:
            raise MeshMismatchError("pairing needs a Dirichlet function on the extended mesh")
        return float(self.values @ z.coefficients)


def restriction_adjoint(ext_mesh: Mesh1d, F) -> ExtendedFunctional:
    """Image of a test-space functional under R': ``G_i = F(R z_i)``.

    ``F`` holds the action on the test hats of the positive half of
    ``ext_mesh``; hats left of 0 restrict to zero.
    """
    F = np.asarray(F, dtype=np.float64)
    half = ext_mesh.positive_half()
    if F.shape != (half.n_elements,):
        raise MeshMismatchError("functional length does not match the positive half mesh")
    return ExtendedFunctional(ext_mesh, np.concatenate([np.zeros(half.n_elements - 1), F]))


def box_functional(u: FeFunction1d, mu: float, ext_mesh: Mesh1d | None = None) -> ExtendedFunctional:
    """Discrete distribution of u'' + mu u for the zero extension of u.

    ``G_i = a_mu(u, R z_i)``; the positive half of ``ext_mesh`` may refine u's mesh.
    """
    if u.bc is not BC.ANSATZ:
        raise InvalidArgumentError("box_functional expects an ansatz function")
    if ext_mesh is None:
        ext_mesh = u.mesh.mirror()
    half = ext_mesh.positive_half()
    uf = u.prolongate(half) if half.n_nodes != u.mesh.n_nodes else u
    if not np.array_equal(uf.mesh.nodes, half.nodes):
        raise MeshMismatchError("extended mesh does not mirror the ansatz mesh")
    F = assemble_temporal_matrices(half).pg_matrix(mu) @ uf.coefficients
    return restriction_adjoint(ext_mesh, F)


def extended_dual_norm(g: ExtendedFunctional) -> DualNormReport:
    value, z = _riesz(stiffness_matrix(g.mesh)[1:-1, 1:-1], g.values)
    rep = DualNormReport(value, z, NormKind.EXTENDED_DUAL, 1, g.mesh)
    return rep


def extend_reflect(v: FeFunction1d, ext_mesh: Mesh1d | None = None) -> FeFunction1d:
    """Even reflection ``(Ev)(t) = v(|t|)`` onto the mirrored mesh."""
    if v.bc is not BC.TEST:
        raise InvalidArgumentError("reflection extends test functions")
    if ext_mesh is None:
        ext_mesh = v.mesh.mirror()
    if not np.array_equal(ext_mesh.positive_half().nodes, v.mesh.nodes):
        raise MeshMismatchError("extended mesh does not mirror the test mesh")
    c = v.coefficients  # nodes 0..n-1
    return FeFunction1d(ext_mesh, np.concatenate([c[:0:-1], c]), BC.DIRICHLET)


def extend_linear(v: FeFunction1d, ext_mesh: Mesh1d | None = None) -> FeFunction1d:
    """Linear ramp extension ``(Ev)(t) = v(0) (1 + t/T)`` for t < 0."""
    if v.bc is not BC.TEST:
        raise InvalidArgumentError("extension acts on test functions")
    if ext_mesh is None:
        ext_mesh = v.mesh.mirror()
    half = ext_mesh.positive_half()
    if not np.array_equal(half.nodes, v.mesh.nodes):
        raise MeshMismatchError("extended mesh does not mirror the test mesh")
    tneg = ext_mesh.nodes[1 : half.n_elements]
    left = v.coefficients[0] * (1.0 + tneg / half.b)
    return FeFunction1d(ext_mesh, np.concatenate([left, v.coefficients]), BC.DIRICHLET)


def graph_norm(u: FeFunction1d, mu: float, refinement: int = DEFAULT_REFINEMENT) -> DualNormReport:
    """Norm of the zero-extended u'' + mu u via the E-representation.

    Equals the test-space dual norm of ``v -> a_mu(u, v)`` over the test mesh
    refined by ``refinement``.
    """
    if u.bc is not BC.ANSATZ:
        raise InvalidArgumentError("graph_norm expects an ansatz function")
    if int(refinement) < 1:
        raise InvalidArgumentError("refinement must be >= 1")
    fine = u.mesh.refine(int(refinement))
    uf = u.prolongate(fine)
    F = assemble_temporal_matrices(fine).pg_matrix(mu) @ uf.coefficients
    rep = dual_norm_test(fine, F)
    rep.which = NormKind.GRAPH_E_REP
    rep.refinement = int(refinement)
    return rep


# --------------------------------------------------------------------------
# constants and checks
# --------------------------------------------------------------------------


@dataclass
class InfSupReport:
    mu: float | None
    T: float
    h: float
    beta_h: float
    bound_infsup: float | None
    const_continuity: float
    iterations: int = 0

    def to_dict(self) -> dict:
        return {
            "mu": self.mu,
            "T": self.T,
            "h": self.h,
            "beta_h": self.beta_h,
            "bound_infsup": self.bound_infsup,
            "const_continuity": self.const_continuity,
        }


def infsup_modal(mesh: Mesh1d, mu: float, T: float | None = None, tol: float = 1e-8, seed: int = 42) -> InfSupReport:
    """Discrete inf-sup constant ``sqrt(lambda_min(A^T N^{-1} A, M))``.

    N is the test-space Gram of ||v'||, M the ansatz-space Gram of ||u'||.
    """
    params = ModalParams(mu, mesh.b if T is None else T)
    _check_mesh(params, mesh)
    mats = assemble_temporal_matrices(mesh)
    A = mats.pg_matrix(mu).toarray()
    X = cholesky_banded(BandedMatrix.from_sparse(mats.test_stiffness)).solve(A)
    S = A.T @ X
    S = 0.5 * (S + S.T)
    res = smallest_pencil_eig(S, mats.ansatz_stiffness.toarray(), tol=tol, seed=seed)
    return InfSupReport(
        mu=params.mu,
        T=params.T,
        h=mesh.h,
        beta_h=math.sqrt(res.eigenvalue),
        bound_infsup=params.infsup_bound,
        const_continuity=params.continuity_constant,
        iterations=res.iterations,
    )


@dataclass
class EquivalenceRecord:
    dt_norm: float
    graph_norm: float
    lower_constant: float
    upper_constant: float
    lower_holds: bool
    upper_holds: bool
    lower_slack: float
    upper_slack: float

    @property
    def holds(self) -> bool:
        return self.lower_holds and self.upper_holds

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def equivalence_check(
    u: FeFunction1d, mu: float, refinement: int = DEFAULT_REFINEMENT, slack: float = 0.05
) -> EquivalenceRecord:
    """Check both norm-equivalence inequalities between ||u'|| and the graph norm.

    lower: graph / (1 + 4 mu T^2 / pi^2) <= ||u'||
    upper: ||u'|| <= (1 + sqrt(mu) T / 2) * graph, with ``slack`` on the graph side
    since the discrete sup under-estimates the continuous one.
    """
    if not np.any(u.coefficients):
        raise InvalidArgumentError("equivalence check needs a nonzero function")
    params = ModalParams(mu, u.mesh.b)
    du = u.h1_seminorm()
    g = graph_norm(u, mu, refinement).value
    c_lo = params.continuity_constant
    c_hi = params.stability_constant
    lower_slack = du - g / c_lo
    upper_slack = c_hi * g * (1.0 + slack) - du
    return EquivalenceRecord(
        dt_norm=du,
        graph_norm=g,
        lower_constant=1.0 / c_lo,
        upper_constant=c_hi,
        lower_holds=bool(lower_slack >= -1e-12 * du),
        upper_holds=bool(upper_slack >= 0.0),
        lower_slack=lower_slack,
        upper_slack=upper_slack,
    )


@dataclass
class IsometryRecord:
    f_test_dual: float
    graph_norm: float
    ratio: float
    refinement: int

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def isometry_check(params: ModalParams, mesh: Mesh1d, spec: RhsSpec, refinement: int = DEFAULT_REFINEMENT) -> IsometryRecord:
    """Compare the graph norm of the discrete solution with the dual norm of f.

    Both use the test mesh refined by ``refinement``; at 1 they are the same
    quadratic form.
    """
    u = solve_modal(params, mesh, spec)
    g = graph_norm(u, params.mu, refinement).value
    fine = mesh.refine(int(refinement))
    fd = dual_norm_test(fine, assemble_rhs(fine, spec)).value
    ratio = g / fd if fd > 0 else (1.0 if g == 0 else math.inf)
    return IsometryRecord(fd, g, ratio, int(refinement))


def l2_error(u: FeFunction1d, exact: Callable, derivative: Callable | None = None, n_points: int = 5):
    """(L2 error, H1-seminorm error) of u against callables, by Gauss quadrature."""
    rule = gauss_rule(n_points)
    pts, wts = quadrature_points(u.mesh, rule)
    uh = u(pts)
    e0 = math.sqrt(float(np.sum(wts * (uh - exact(pts)) ** 2)))
    if derivative is None:
        return e0, None
    du = u.derivative()[:, None]
    e1 = math.sqrt(float(np.sum(wts * (du - derivative(pts)) ** 2)))
    return e0, e1
