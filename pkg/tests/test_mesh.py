import numpy as np
import pytest

from fraclap import build_interval_mesh, build_rectangle_mesh, eval_p1
from fraclap.errors import ConfigurationError


def test_interval_mesh_counts():
    mesh = build_interval_mesh(0.0, 1.0, 8)
    assert mesh.n == 1
    assert mesh.nodes.size == 9
    assert mesh.elements.shape == (8, 2)
    assert mesh.num_dof == 7
    assert np.sum(mesh.measures) == pytest.approx(1.0)


def test_interval_mesh_rejects_degenerate_input():
    with pytest.raises(ConfigurationError):
        build_interval_mesh(0.0, 1.0, 1)
    with pytest.raises(ConfigurationError):
        build_interval_mesh(1.0, 0.0, 4)


def test_rectangle_mesh_counts_and_area():
    mesh = build_rectangle_mesh((0.0, 2.0), (0.0, 1.0), 4, 2)
    assert mesh.n == 2
    assert mesh.nodes.shape == (15, 2)
    assert mesh.elements.shape == (16, 3)
    assert mesh.num_dof == 3
    assert np.sum(mesh.measures) == pytest.approx(2.0)
    assert mesh.domain_measure == pytest.approx(2.0)


def test_rectangle_interior_dofs_are_strictly_interior():
    mesh = build_rectangle_mesh((0.0, 1.0), (0.0, 1.0), 4, 4)
    pts = mesh.nodes[mesh.interior_dof]
    assert np.all((pts > 0.0) & (pts < 1.0))
    assert mesh.num_dof == 9


def test_rectangle_mesh_rejects_bad_cells():
    with pytest.raises(ConfigurationError):
        build_rectangle_mesh((0.0, 1.0), (0.0, 1.0), 1, 4)
    with pytest.raises(ConfigurationError):
        build_rectangle_mesh((1.0, 1.0), (0.0, 1.0), 4, 4)


def test_full_vector_zero_padding():
    mesh = build_interval_mesh(0.0, 1.0, 4)
    full = mesh.full_vector(np.array([1.0, 2.0, 3.0]))
    assert np.array_equal(full, [0.0, 1.0, 2.0, 3.0, 0.0])


def test_dilate_scales_nodes_and_bounds():
    mesh = build_interval_mesh(0.0, 1.0, 4)
    scaled = mesh.dilate(3.0)
    assert scaled.bounds == ((0.0, 3.0),)
    assert np.allclose(scaled.nodes, 3.0 * mesh.nodes)
    assert np.array_equal(scaled.elements, mesh.elements)


@pytest.mark.parametrize("builder,args", [
    (build_interval_mesh, (0.0, 1.0, 8)),
    (build_rectangle_mesh, ((0.0, 1.0), (0.0, 1.0), 3, 3)),
])
def test_eval_p1_reproduces_linear_functions(builder, args):
    """P1 interpolation is exact on affine functions."""
    mesh = builder(*args)
    if mesh.n == 1:
        nodal = 2.0 * mesh.nodes + 1.0
        pts = np.array([0.05, 0.31, 0.77])
        expected = 2.0 * pts + 1.0
    else:
        nodal = 2.0 * mesh.nodes[:, 0] - mesh.nodes[:, 1] + 1.0
        pts = np.array([[0.1, 0.2], [0.55, 0.4], [0.9, 0.9]])
        expected = 2.0 * pts[:, 0] - pts[:, 1] + 1.0
    got = eval_p1(mesh, nodal, pts)
    assert np.allclose(got, expected, rtol=1e-13)


def test_eval_p1_partition_of_unity():
    mesh = build_rectangle_mesh((0.0, 1.0), (0.0, 1.0), 3, 3)
    ones = np.ones(mesh.nodes.shape[0])
    pts = np.random.default_rng(3).uniform(0.01, 0.99, size=(40, 2))
    assert np.allclose(eval_p1(mesh, ones, pts), 1.0, rtol=1e-13)
