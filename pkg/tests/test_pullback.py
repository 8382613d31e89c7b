import numpy as np
import pytest

from prgd import numerics
from prgd import problems
from prgd import verify
from prgd.errors import InvalidArgumentError
from prgd.manifold import Tangent
from prgd.numerics import RngStream
from prgd.pullback import Pullback


def test_value_and_gradient_at_zero(pca31):
    x = pca31.manifold.point([np.sqrt(0.5), np.sqrt(0.5)])
    p = Pullback(pca31, x)
    assert p.value(p.zero()) == pca31.value(x)
    assert np.allclose(p.gradient(p.zero()).coords, pca31.riemannian_gradient(x).coords, atol=1e-15)


def test_gradient_matches_finite_differences_pca():
    synthetic, _ = problems.synthetic_pca(6, RngStream(4))
    error = verify.check_pullback_gradient(synthetic.problem, 0.5, 100, RngStream(4, 1))
    assert error <= 1e-6


def test_gradient_matches_finite_differences_saddle():
    problem = problems.default_saddle(5)
    error = verify.check_pullback_gradient(problem, 0.5, 100, RngStream(4, 2))
    assert error <= 1e-6


def test_euclidean_pullback_is_shifted_cost(saddle02):
    x = saddle02.manifold.point([1.0, -1.0])
    p = Pullback(saddle02, x)
    s = p.tangent([0.5, 0.25])
    assert p.value(s) == saddle02.value(saddle02.manifold.point([1.5, -0.75]))
    assert np.allclose(p.gradient(s).coords, saddle02.h @ np.array([1.5, -0.75]))


def test_hessian_at_zero_pca(pca31):
    at_minimum = Pullback(pca31, pca31.manifold.point([1.0, 0.0])).hessian_at_zero()
    at_saddle = Pullback(pca31, pca31.manifold.point([0.0, 1.0])).hessian_at_zero()
    assert at_minimum.shape == (1, 1)
    assert at_minimum[0, 0] == pytest.approx(2.0, abs=1e-5)
    assert at_saddle[0, 0] == pytest.approx(-2.0, abs=1e-5)


def test_hessian_at_matches_quadratic(saddle02):
    x = saddle02.manifold.point([0.3, 0.4])
    p = Pullback(saddle02, x)
    hessian = p.hessian_at(p.tangent([1.0, 2.0]))
    assert np.allclose(hessian, saddle02.h, atol=1e-8)


def test_hessian_at_zero_agrees_with_hessian_at(pca31):
    x = pca31.manifold.point([0.6, 0.8])
    p = Pullback(pca31, x)
    assert np.allclose(p.hessian_at_zero(), p.hessian_at(p.zero()), atol=1e-5)


def test_rejects_tangent_at_other_base(pca31):
    p = Pullback(pca31, pca31.manifold.point([1.0, 0.0]))
    other = pca31.manifold.point([0.0, 1.0])
    with pytest.raises(InvalidArgumentError):
        p.value(Tangent(other, [1.0, 0.0]))


def test_rejects_point_of_other_problem(pca31, saddle02):
    with pytest.raises(InvalidArgumentError):
        Pullback(pca31, saddle02.manifold.point([1.0, 0.0]))


def test_pca_gradient_matches_closed_form():
    """∇f̂_x(s) = (−Proj_x(A(x+s)) − 2f̂_x(s)s)/(1 + ‖s‖²) for f = −½xᵀAx"""
    b = np.random.default_rng(41).standard_normal((8, 8))
    problem = problems.PcaProblem(0.5 * (b + b.T))
    manifold = problem.manifold
    rng = RngStream(41)
    for _ in range(100):
        x, rng = manifold.random_point(rng, 8)
        s, rng = manifold.sample_ball(x, 2.0, rng)
        p = Pullback(problem, x)
        value = p.value(s)
        closed_form = (manifold.project(x, -(problem.a @ (x.coords + s.coords))).coords - 2 * value * s.coords) \
            / (1.0 + s.norm ** 2)
        error = np.linalg.norm(p.gradient(s).coords - closed_form)
        assert error <= 1e-10 * max(1.0, np.linalg.norm(closed_form))


def test_hessian_at_zero_spectrum_pca():
    """∇²f̂_x(0) = (xᵀAx)I − BᵀAB in a basis B of T_x; at an eigenvector x
    with eigenvalue a_k its smallest eigenvalue is a_k − max_{j≠k} a_j"""
    eigenvalues = np.array([4.0, 2.0, 1.0, 0.5])
    problem = problems.PcaProblem(np.diag(eigenvalues))
    for k in range(eigenvalues.size):
        x = problem.manifold.point(np.eye(eigenvalues.size)[k])
        hessian = Pullback(problem, x).hessian_at_zero()
        expected = eigenvalues[k] - np.max(np.delete(eigenvalues, k))
        assert numerics.min_eigpair(hessian)[0] == pytest.approx(expected, abs=1e-5)

    x, _ = problem.manifold.random_point(RngStream(43), eigenvalues.size)
    p = Pullback(problem, x)
    analytic = float(x.coords @ problem.a @ x.coords) * np.eye(3) - p.basis.T @ problem.a @ p.basis
    assert np.allclose(p.hessian_at_zero(), analytic, atol=1e-5)
    assert np.allclose(p.hessian_at(p.zero()), analytic, atol=1e-5)


def test_gradient_columns_match_gradient(saddle02):
    synthetic, rng = problems.synthetic_pca(5, RngStream(47))
    problem = synthetic.problem
    x, rng = problem.manifold.random_point(rng, 5)
    p = Pullback(problem, x)
    tangents = []
    for _ in range(4):
        s, rng = problem.manifold.sample_ball(x, 1.0, rng)
        tangents.append(s)
    columns = p.gradient_columns(np.column_stack([s.coords for s in tangents]))
    for j, s in enumerate(tangents):
        assert np.allclose(columns[:, j], p.gradient(s).coords, atol=1e-14)

    p = Pullback(saddle02, saddle02.manifold.point([1.0, 2.0]))
    ss = np.array([[0.5, -1.0], [0.25, 3.0]])
    assert np.allclose(p.gradient_columns(ss), saddle02.h @ (np.array([[1.0], [2.0]]) + ss))
