import numpy as np
import pytest
import scipy.stats
from hypothesis import given, settings, strategies as st

from prgd import numerics
from prgd.errors import InvalidArgumentError, NumericalFailureError
from prgd.numerics import RngStream


def test_as_vector_read_only_copy():
    source = [1.0, 2.0, 3.0]
    v = numerics.as_vector(source)
    assert v.dtype == np.float64
    with pytest.raises(ValueError):
        v[0] = 5.0


def test_as_vector_rejects_bad_input():
    with pytest.raises(NumericalFailureError):
        numerics.as_vector([1.0, np.nan])
    with pytest.raises(NumericalFailureError):
        numerics.as_vector([np.inf])
    with pytest.raises(InvalidArgumentError):
        numerics.as_vector([[1.0, 2.0]])
    with pytest.raises(InvalidArgumentError):
        numerics.as_vector([])


def test_as_sym_matrix_averages_roundoff():
    m = numerics.as_sym_matrix([[1.0, 2.0 + 1e-14], [2.0, 1.0]])
    assert np.array_equal(m, m.T)
    assert m[0, 1] == pytest.approx(2.0)


def test_as_sym_matrix_rejects_asymmetry():
    with pytest.raises(InvalidArgumentError):
        numerics.as_sym_matrix([[1.0, 2.0], [2.1, 1.0]])
    with pytest.raises(InvalidArgumentError):
        numerics.as_sym_matrix([[1.0, 2.0, 3.0]])
    with pytest.raises(NumericalFailureError):
        numerics.as_sym_matrix([[np.nan, 0.0], [0.0, 1.0]])


def test_min_eigpair_diagonal():
    eigenvalue, eigenvector = numerics.min_eigpair(np.diag([3.0, 1.0]))
    assert eigenvalue == pytest.approx(1.0)
    assert np.allclose(eigenvector, [0.0, 1.0])


def test_min_eigpair_sign_convention():
    # largest magnitude entry comes out positive, whatever LAPACK returns
    m = np.array([[2.0, -1.0], [-1.0, 2.0]])
    _, eigenvector = numerics.min_eigpair(m)
    assert eigenvector[np.argmax(np.abs(eigenvector))] > 0
    assert np.linalg.norm(eigenvector) == pytest.approx(1.0)


def test_min_eigpair_matches_full_spectrum():
    generator = np.random.default_rng(1234)
    for d in [1, 2, 5, 20, 60]:
        b = generator.standard_normal((d, d))
        m = 0.5 * (b + b.T)
        eigenvalue, eigenvector = numerics.min_eigpair(m)
        expected = np.linalg.eigh(m)[0][0]
        scale = np.linalg.norm(m)
        assert abs(eigenvalue - expected) <= 1e-10 * max(1.0, scale)
        assert np.linalg.norm(m @ eigenvector - eigenvalue * eigenvector) <= 1e-9 * scale


def test_min_eigpair_is_deterministic():
    m = np.diag([0.5, -2.0, 4.0]) + 0.1
    first = numerics.min_eigpair(m)
    second = numerics.min_eigpair(m)
    assert first[0] == second[0]
    assert np.array_equal(first[1], second[1])


def test_operator_norm():
    assert numerics.operator_norm(np.diag([-5.0, 2.0])) == pytest.approx(5.0)


def test_fd_gradient_quadratic():
    h = np.array([[2.0, 0.5], [0.5, -1.0]])
    s = np.array([0.3, -0.7])
    gradient = numerics.fd_gradient(lambda v: 0.5 * v @ h @ v, s)
    assert np.allclose(gradient, h @ s, atol=1e-8)


def test_fd_gradient_error_is_second_order():
    # error ≈ h²/6·φ''' for φ(v) = exp(5v) at 0, so halving h divides it by ~4
    def error(h):
        return abs(numerics.fd_gradient(lambda v: np.exp(5.0 * v[0]), [0.0], h)[0] - 5.0)

    for h in [1e-3, 1e-4, 1e-5]:
        assert error(h) >= 3.0 * error(h / 2)


def test_fd_hessian_quadratic():
    h = np.array([[2.0, 0.5, 0.0], [0.5, -1.0, 0.25], [0.0, 0.25, 3.0]])
    hessian = numerics.fd_hessian(lambda v: 0.5 * v @ h @ v, np.array([0.1, 0.2, -0.3]))
    assert np.allclose(hessian, h, atol=1e-6)


def test_fd_jacobian_linear_map():
    m = np.array([[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]])
    calls = []

    def linear(points):
        calls.append(points.shape)
        return m @ points

    jacobian = numerics.fd_jacobian(linear, np.array([1.0, -1.0]))
    assert calls == [(2, 4)]
    assert np.allclose(jacobian, m, atol=1e-8)


def test_fd_step_must_be_positive():
    with pytest.raises(InvalidArgumentError):
        numerics.fd_gradient(lambda v: 0.0, [0.0], h=0.0)


def test_fd_non_finite_value():
    with pytest.raises(NumericalFailureError):
        numerics.fd_gradient(lambda v: np.inf, [0.0])


def test_rng_stream_reproducible():
    rng = RngStream(42, 3)
    first, next_rng = rng.draw(lambda g: g.standard_normal(5))
    again, _ = rng.draw(lambda g: g.standard_normal(5))
    assert np.array_equal(first, again)

    following, _ = next_rng.draw(lambda g: g.standard_normal(5))
    assert not np.array_equal(first, following)


def test_rng_streams_are_independent():
    a, _ = RngStream(7, 0).draw(lambda g: g.standard_normal(4))
    b, _ = RngStream(7, 1).draw(lambda g: g.standard_normal(4))
    c, _ = RngStream(8, 0).draw(lambda g: g.standard_normal(4))
    assert not np.array_equal(a, b)
    assert not np.array_equal(a, c)
    assert RngStream(7).spawn(1) == RngStream(7, 1)


def test_rng_stream_rejects_negative_seed():
    with pytest.raises(InvalidArgumentError):
        RngStream(-1)


@settings(derandomize=True, max_examples=200)
@given(st.integers(min_value=1, max_value=40), st.integers(min_value=0, max_value=2 ** 32))
def test_sample_unit_ball_inside_ball(d, seed):
    sample, _ = numerics.sample_unit_ball(d, RngStream(seed))
    assert sample.shape == (d,)
    assert np.linalg.norm(sample) <= 1.0 + 1e-15


def test_sample_unit_ball_radius_distribution():
    # ‖ξ‖^d is uniform on [0, 1] for ξ uniform in the unit ball of ℝ^d
    d = 5
    samples, _ = numerics.sample_unit_ball(d, RngStream(2024), size=100000)
    norms = np.linalg.norm(samples, axis=1)
    assert scipy.stats.kstest(norms ** d, "uniform").statistic <= 0.01

    inner = np.mean(norms <= 0.5)
    p = 2.0 ** -d
    assert abs(inner - p) <= 4 * np.sqrt(p * (1 - p) / norms.size)


def test_sample_unit_ball_half_radius_mass():
    for d in [1, 2, 8]:
        samples, _ = numerics.sample_unit_ball(d, RngStream(d, 5), size=100000)
        inner = np.mean(np.linalg.norm(samples, axis=1) <= 0.5)
        p = 2.0 ** -d
        assert abs(inner - p) <= 4 * np.sqrt(p * (1 - p) / samples.shape[0])


def test_sample_unit_ball_directions_are_isotropic():
    samples, _ = numerics.sample_unit_ball(5, RngStream(99), size=100000)
    assert np.linalg.norm(samples.mean(axis=0)) <= 0.02


def test_sample_unit_ball_bad_dimension():
    with pytest.raises(InvalidArgumentError):
        numerics.sample_unit_ball(0, RngStream(0))
