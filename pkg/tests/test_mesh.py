import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as hst

from stwave.errors import InvalidArgumentError, MeshMismatchError, OutOfDomainError
from stwave.mesh import (
    Mesh1d,
    TensorGrid,
    eval_hat_basis,
    gauss_rule,
    interpolation_matrix,
    make_uniform_mesh,
    prolongation,
)


def test_uniform_mesh_examples():
    assert make_uniform_mesh(2, 0, 1).nodes.tolist() == [0, 0.5, 1]
    m = make_uniform_mesh(4, -1, 1)
    assert m.nodes.tolist() == [-1, -0.5, 0, 0.5, 1]
    assert 0.0 in m.nodes
    assert make_uniform_mesh(1, 0, 2).nodes.tolist() == [0, 2]


@pytest.mark.parametrize("n,a,b", [(0, 0, 1), (3, 1, 1), (3, 2, 1), (1.5, 0, 1)])
def test_uniform_mesh_rejects(n, a, b):
    with pytest.raises(InvalidArgumentError):
        make_uniform_mesh(n, a, b)


def test_mesh_validation():
    with pytest.raises(InvalidArgumentError):
        Mesh1d([0.0])
    with pytest.raises(InvalidArgumentError):
        Mesh1d([0.0, 1.0, 1.0])
    with pytest.raises(InvalidArgumentError):
        Mesh1d([0.0, np.nan])
    m = make_uniform_mesh(7, 0, 3)
    assert m.is_uniform()
    assert np.all(m.widths > 0)
    with pytest.raises(ValueError):
        m.nodes[0] = 5.0


@pytest.mark.parametrize("n", [10, 37, 128, 1000])
def test_uniform_width_ratio(n):
    w = make_uniform_mesh(n, 0.0, 1.7).widths
    assert w.max() / w.min() - 1.0 <= 1e-12


def test_symmetric_mesh_is_exact_mirror():
    for n in (2, 6, 50, 256):
        m = make_uniform_mesh(n, -1.3, 1.3)
        assert m.is_symmetric()
        assert np.array_equal(m.nodes, -m.nodes[::-1])


def test_mirror_and_positive_half():
    m = make_uniform_mesh(5, 0.0, 2.0)
    ext = m.mirror()
    assert ext.n_elements == 10 and ext.is_symmetric()
    assert np.array_equal(ext.positive_half().nodes, m.nodes)
    with pytest.raises(MeshMismatchError):
        make_uniform_mesh(4, 1.0, 2.0).mirror()


def test_gauss_rule_examples():
    r1 = gauss_rule(1)
    assert r1.points.tolist() == [0.5] and r1.weights.tolist() == [1.0]
    assert abs(gauss_rule(2).integrate(lambda t: t**3) - 0.25) <= 1e-14
    assert abs(gauss_rule(3).integrate(lambda t: t**5) - 1 / 6) <= 1e-14
    for bad in (0, 11, 2.5):
        with pytest.raises(InvalidArgumentError):
            gauss_rule(bad)


@pytest.mark.parametrize("n", range(1, 11))
def test_gauss_rule_exactness(n):
    q = gauss_rule(n)
    assert abs(q.weights.sum() - 1.0) <= 1e-14
    assert np.all(q.weights > 0) and np.all((q.points > 0) & (q.points < 1))
    for d in range(2 * n):
        assert abs(q.integrate(lambda t: t**d) - 1.0 / (d + 1)) <= 1e-13


def test_hat_basis_examples():
    e, v, d = eval_hat_basis(Mesh1d([0.0, 1.0]), 0.25)
    assert e == 0 and v == pytest.approx((0.75, 0.25), abs=0)
    m = Mesh1d([0.0, 0.5, 1.0])
    _, _, d = eval_hat_basis(m, 0.75)
    assert d == (-2.0, 2.0)
    for x in m.nodes[1:-1]:
        _, v, _ = eval_hat_basis(m, x)
        assert sorted(v) == [0.0, 1.0]
    with pytest.raises(OutOfDomainError):
        eval_hat_basis(m, 1.5)


def test_partition_of_unity():
    rng = np.random.default_rng(1)
    m = Mesh1d(np.sort(np.concatenate([[0.0, 2.0], rng.uniform(0, 2, 15)])))
    P = interpolation_matrix(m, rng.uniform(0, 2, 1000))
    assert np.max(np.abs(P.sum(axis=1) - 1.0)) <= 1e-13


@settings(max_examples=50, deadline=None)
@given(hst.lists(hst.floats(0.01, 10.0), min_size=1, max_size=20), hst.integers(2, 5))
def test_refinement_nests(widths, factor):
    m = Mesh1d(np.concatenate([[0.0], np.cumsum(widths)]))
    fine = m.refine(factor)
    assert fine.n_elements == factor * m.n_elements
    assert np.array_equal(fine.nodes[::factor], m.nodes)
    assert fine.contains(m)
    # prolongation reproduces P1 functions exactly
    v = np.sin(m.nodes)
    P = prolongation(m, fine)
    assert np.allclose((P @ v)[::factor], v, rtol=0, atol=0)


def test_prolongation_requires_nesting():
    with pytest.raises(MeshMismatchError):
        prolongation(make_uniform_mesh(2), make_uniform_mesh(3))


def test_tensor_grid():
    g = TensorGrid(make_uniform_mesh(4, 0, 1), make_uniform_mesh(6, 0, 2))
    assert g.n_dofs == 5 * 7 == math.prod(g.shape)
    assert g.ratio == pytest.approx(0.25 / (2 / 6))
