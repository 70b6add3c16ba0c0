"""1D meshes, tensor grids, Gauss rules and piecewise-linear hat functions."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import InvalidArgumentError, MeshMismatchError, OutOfDomainError


@dataclass(frozen=True, eq=False)
class Mesh1d:
    """Strictly increasing node sequence; elements are consecutive pairs."""

    nodes: np.ndarray

    def __post_init__(self):
        nodes = np.array(self.nodes, dtype=np.float64)
        if nodes.ndim != 1 or nodes.size < 2:
            raise InvalidArgumentError("a mesh needs at least 2 nodes")
        if not np.all(np.isfinite(nodes)):
            raise InvalidArgumentError("mesh nodes must be finite")
        if np.any(np.diff(nodes) <= 0):
            raise InvalidArgumentError("mesh nodes must be strictly increasing")
        nodes.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)

    @property
    def n_elements(self) -> int:
        return self.nodes.size - 1

    @property
    def n_nodes(self) -> int:
        return self.nodes.size

    @property
    def a(self) -> float:
        return float(self.nodes[0])

    @property
    def b(self) -> float:
        return float(self.nodes[-1])

    @property
    def length(self) -> float:
        return self.b - self.a

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.nodes)

    @property
    def h(self) -> float:
        """Largest element width."""
        return float(self.widths.max())

    def is_uniform(self, tol: float = 1e-12) -> bool:
        w = self.widths
        return bool(w.max() / w.min() - 1.0 <= tol)

    def refine(self, factor: int = 2) -> "Mesh1d":
        """Split every element into ``factor`` equal parts (nested refinement)."""
        factor = int(factor)
        if factor < 1:
            raise InvalidArgumentError("refinement factor must be >= 1")
        if factor == 1:
            return self
        s = np.arange(factor) / factor
        inner = self.nodes[:-1, None] + self.widths[:, None] * s[None, :]
        nodes = np.append(inner.ravel(), self.nodes[-1])
        # keep coarse nodes bit-identical
        nodes[::factor] = self.nodes
        return Mesh1d(nodes)

    def mirror(self) -> "Mesh1d":
        """Mesh of (-b, b) mirrored through 0; requires ``a == 0``."""
        if self.nodes[0] != 0.0:
            raise MeshMismatchError("mirror needs a mesh starting at t=0")
        return Mesh1d(np.concatenate([-self.nodes[:0:-1], self.nodes]))

    def positive_half(self) -> "Mesh1d":
        """Nodes >= 0 of a mesh symmetric about 0."""
        if not self.is_symmetric():
            raise MeshMismatchError("mesh is not mirror-symmetric about 0")
        return Mesh1d(self.nodes[self.n_elements // 2 :])

    def is_symmetric(self) -> bool:
        n = self.nodes
        return n.size % 2 == 1 and bool(np.array_equal(n, -n[::-1]))

    def contains(self, other: "Mesh1d") -> bool:
        """True if every node of ``other`` is a node of ``self`` (nesting)."""
        return bool(np.all(np.isin(other.nodes, self.nodes)))

    def index_of(self, x: float) -> int:
        i = np.flatnonzero(self.nodes == x)
        if i.size == 0:
            raise MeshMismatchError(f"{x!r} is not a mesh node")
        return int(i[0])

    def element_of(self, x) -> np.ndarray:
        """Element index containing each x; interior nodes go to the right element."""
        x = np.asarray(x, dtype=np.float64)
        if np.any(x < self.nodes[0]) or np.any(x > self.nodes[-1]) or not np.all(np.isfinite(x)):
            raise OutOfDomainError(f"coordinate outside [{self.a}, {self.b}]")
        e = np.searchsorted(self.nodes, x, side="right") - 1
        return np.clip(e, 0, self.n_elements - 1)


def make_uniform_mesh(n: int, a: float = 0.0, b: float = 1.0) -> Mesh1d:
    if int(n) != n or n < 1:
        raise InvalidArgumentError(f"element count must be a positive integer, got {n!r}")
    if not a < b:
        raise InvalidArgumentError(f"need a < b, got a={a!r}, b={b!r}")
    n = int(n)
    nodes = a + (b - a) * (np.arange(n + 1) / n)
    nodes[-1] = b
    if a == -b and n % 2 == 0:
        # exact symmetry; puts 0 on a node
        half = nodes[n // 2 :]
        half[0] = 0.0
        nodes = np.concatenate([-half[:0:-1], half])
    return Mesh1d(nodes)


@dataclass(frozen=True, eq=False)
class TensorGrid:
    """Space-time carrier: ``time_mesh`` x ``space_mesh``."""

    time_mesh: Mesh1d
    space_mesh: Mesh1d

    @property
    def n_dofs(self) -> int:
        return self.time_mesh.n_nodes * self.space_mesh.n_nodes

    @property
    def shape(self) -> tuple[int, int]:
        return (self.time_mesh.n_nodes, self.space_mesh.n_nodes)

    @property
    def ratio(self) -> float:
        """Mesh ratio h_t / h_x."""
        return self.time_mesh.h / self.space_mesh.h

    def refine(self, factor: int = 2) -> "TensorGrid":
        return TensorGrid(self.time_mesh.refine(factor), self.space_mesh.refine(factor))


@dataclass(frozen=True, eq=False)
class Quadrature:
    """Rule on the reference interval [0, 1]."""

    points: np.ndarray
    weights: np.ndarray

    @property
    def n_points(self) -> int:
        return self.points.size

    def integrate(self, f, a: float = 0.0, b: float = 1.0) -> float:
        x = a + (b - a) * self.points
        return float((b - a) * np.dot(self.weights, f(x)))


def gauss_rule(n_points: int) -> Quadrature:
    """Gauss-Legendre rule with ``n_points`` nodes mapped to [0, 1]."""
    if int(n_points) != n_points or not 1 <= n_points <= 10:
        raise InvalidArgumentError(f"n_points must be in 1..10, got {n_points!r}")
    x, w = np.polynomial.legendre.leggauss(int(n_points))
    p = 0.5 * (x + 1.0)
    q = 0.5 * w
    p.setflags(write=False)
    q.setflags(write=False)
    return Quadrature(p, q)


def eval_hat_basis(mesh: Mesh1d, x: float):
    """Local hat data at a point.

    Returns
    -------
    element : int
    values : tuple of float
        Values of the two hats of ``element`` (left node, right node).
    derivatives : tuple of float
        Their derivatives, ``(-1/w, 1/w)`` with ``w`` the element width.
    """
    e = int(mesh.element_of(x))
    t0, t1 = mesh.nodes[e], mesh.nodes[e + 1]
    w = t1 - t0
    s = (x - t0) / w
    return e, (1.0 - s, s), (-1.0 / w, 1.0 / w)


def interpolation_matrix(mesh: Mesh1d, x) -> sp.csr_matrix:
    """Sparse (len(x), n_nodes) matrix evaluating nodal P1 functions at ``x``."""
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    e = mesh.element_of(x)
    t0 = mesh.nodes[e]
    s = (x - t0) / mesh.widths[e]
    rows = np.repeat(np.arange(x.size), 2)
    cols = np.stack([e, e + 1], axis=1).ravel()
    vals = np.stack([1.0 - s, s], axis=1).ravel()
    return sp.csr_matrix((vals, (rows, cols)), shape=(x.size, mesh.n_nodes))


def prolongation(coarse: Mesh1d, fine: Mesh1d) -> sp.csr_matrix:
    """Nodal interpolation from ``coarse`` to a nested ``fine`` mesh (exact for P1)."""
    if not fine.contains(coarse):
        raise MeshMismatchError("fine mesh does not contain the coarse mesh nodes")
    return interpolation_matrix(coarse, fine.nodes)


def quadrature_points(mesh: Mesh1d, rule: Quadrature):
    """Physical quadrature points and weights, both shaped (n_elements, n_points)."""
    w = mesh.widths[:, None]
    pts = mesh.nodes[:-1, None] + w * rule.points[None, :]
    wts = w * rule.weights[None, :]
    return pts, wts
