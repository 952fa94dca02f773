import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from catena.errors import SingularOperator
from catena.linalg import TridiagonalOperator, dirichlet_laplacian, leading_mode, matrix_spectrum


def random_op(rng, m, dominant=True):
    lo, up = rng.uniform(0.1, 1.0, m - 1), rng.uniform(0.1, 1.0, m - 1)
    d = rng.uniform(-1, 1, m) - (3.0 if dominant else 0.0)
    return TridiagonalOperator(lo, d, up)


@settings(max_examples=30, deadline=None)
@given(st.integers(min_value=3, max_value=60), st.integers(min_value=0, max_value=2**31))
def test_solve_and_matvec_agree_with_dense(m, seed):
    rng = np.random.default_rng(seed)
    op = random_op(rng, m)
    b = rng.standard_normal(m)
    x = op.solve(b)
    assert np.allclose(op.matvec(x), b, atol=1e-12)
    assert np.allclose(op.to_dense() @ x, b, atol=1e-12)


def test_singular_operator_is_reported():
    op = TridiagonalOperator(np.ones(2), np.array([1.0, 2.0, 1.0]), np.ones(2))
    # [[1, 1, 0], [1, 2, 1], [0, 1, 1]] has determinant zero
    with pytest.raises(SingularOperator):
        op.solve(np.ones(3))


def test_laplacian_spectrum_is_exact():
    n = 41
    vals = matrix_spectrum(dirichlet_laplacian(n), 3)
    h = 2.0 / (n - 1)
    k = np.arange(1, 4)
    exact = -4.0 / h**2 * np.sin(k * np.pi * h / 4.0) ** 2
    assert np.allclose(vals, exact, rtol=1e-12)


def test_nonsymmetrizable_spectrum_uses_dense_path():
    rng = np.random.default_rng(3)
    op = random_op(rng, 12)
    op = TridiagonalOperator(-op.lower, op.diag, op.upper)
    vals = matrix_spectrum(op, 12)
    dense = np.linalg.eigvals(op.to_dense())
    assert np.allclose(np.sort(vals.real), np.sort(dense.real), atol=1e-10)


def test_leading_mode_of_laplacian():
    n = 51
    mu, v = leading_mode(dirichlet_laplacian(n))
    z = np.linspace(-1, 1, n)[1:-1]
    assert np.allclose(v, np.cos(np.pi * z / 2), atol=1e-10)
    assert mu == pytest.approx(matrix_spectrum(dirichlet_laplacian(n), 1)[0], rel=1e-14)
