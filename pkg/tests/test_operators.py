"""Matrix primitives: adjoints, spectral calculus, Gaussian functions."""
import math

import numpy as np
import pytest

import oracles
from qbs.operators import (
    adjoint,
    apply_scalar_function,
    as_matrix,
    commutator,
    hermitian_part,
    normal_cdf,
    normal_pdf,
    operator_exp,
    operator_log,
    phi_operator,
    phi_series,
    positive_part,
    require_hermitian,
    require_unitary,
    spectral_decompose,
    sylvester_L,
)
from qbs.sampling import random_hermitian, random_positive_definite, random_unitary

SX = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SY = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)


def test_as_matrix_rejects_bad_shapes():
    with pytest.raises(ValueError):
        as_matrix(np.zeros(3))
    with pytest.raises(ValueError):
        as_matrix(np.zeros((2, 3)))
    with pytest.raises(ValueError):
        as_matrix(np.array([[np.nan, 0.0], [0.0, 1.0]]))


def test_require_hermitian():
    require_hermitian(np.diag([1.0, 2.0]))
    with pytest.raises(ValueError, match="not Hermitian"):
        require_hermitian(np.array([[0.0, 1.0], [0.0, 0.0]]))


def test_require_unitary():
    require_unitary(np.eye(3))
    with pytest.raises(ValueError, match="not unitary"):
        require_unitary(1.001 * np.eye(2))


def test_adjoint_examples():
    assert np.array_equal(adjoint(np.eye(2)), np.eye(2))
    m = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)
    assert np.array_equal(adjoint(m), np.array([[0.0, 0.0], [1.0, 0.0]]))
    d = np.diag([1.0j, -1.0j])
    assert np.array_equal(adjoint(d), np.diag([-1.0j, 1.0j]))


def test_adjoint_involution():
    rng = np.random.default_rng(1)
    for dim in (2, 5):
        m = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
        assert np.array_equal(adjoint(adjoint(m)), m)
        a, b = oracles.dagger_loops(m), adjoint(m)
        assert np.array_equal(a, b)


def test_commutator_examples():
    assert np.max(np.abs(commutator(np.eye(3), np.diag([1.0, 2.0, 3.0])))) == 0.0
    # [sx, sy] = 2i sz
    c = commutator(SX, SY)
    assert np.allclose(c, 2.0j * np.diag([1.0, -1.0]), atol=1e-15)
    e12 = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)
    c2 = commutator(np.diag([1.0, 2.0]).astype(complex), e12)
    assert np.allclose(c2, np.array([[0.0, -1.0], [0.0, 0.0]]), atol=1e-15)


def test_commutator_dim_mismatch():
    with pytest.raises(ValueError):
        commutator(np.eye(2), np.eye(3))


def test_spectral_identity():
    dec = spectral_decompose(np.eye(3))
    assert np.allclose(dec.eigenvalues, [1.0, 1.0, 1.0])
    assert np.max(np.abs(dec.reconstruct() - np.eye(3))) <= 1e-14


def test_spectral_ordering_and_reconstruction():
    dec = spectral_decompose(np.diag([3.0, 1.0, 2.0]))
    assert np.allclose(dec.eigenvalues, [1.0, 2.0, 3.0])
    off = np.array([[0.0, 1.0], [1.0, 0.0]])
    dec2 = spectral_decompose(off)
    assert np.allclose(dec2.eigenvalues, [-1.0, 1.0])
    rng = np.random.default_rng(7)
    for dim in (2, 4, 9):
        m = random_hermitian(rng, dim)
        dec3 = spectral_decompose(m)
        scale = max(1.0, float(np.linalg.norm(m)))
        assert np.max(np.abs(dec3.reconstruct() - m)) <= 1e-12 * scale
        gram = dec3.eigenvectors.conj().T @ dec3.eigenvectors
        assert np.max(np.abs(gram - np.eye(dim))) <= 1e-12


def test_spectral_deterministic():
    """Same input twice gives bitwise identical factors (phase is pinned)."""
    m = random_hermitian(np.random.default_rng(3), 4)
    d1, d2 = spectral_decompose(m), spectral_decompose(m)
    assert np.array_equal(d1.eigenvalues, d2.eigenvalues)
    assert np.array_equal(d1.eigenvectors, d2.eigenvectors)


def test_spectral_rejects_non_hermitian():
    with pytest.raises(ValueError):
        spectral_decompose(np.array([[0.0, 1.0], [0.0, 0.0]]))


def test_apply_scalar_function_examples():
    m = np.diag([1.0, 4.0])
    assert np.allclose(apply_scalar_function(m, math.sqrt), np.diag([1.0, 2.0]), atol=1e-14)
    rng = np.random.default_rng(11)
    h = random_hermitian(rng, 3)
    sq = apply_scalar_function(h, lambda v: v * v)
    assert np.max(np.abs(sq - h @ h)) <= 1e-12 * max(1.0, float(np.linalg.norm(h)) ** 2)


def test_apply_scalar_function_names_bad_eigenvalue():
    with pytest.raises(ValueError, match="undefined at eigenvalue"):
        apply_scalar_function(np.diag([0.0, 1.0]), lambda v: 1.0 / v)


def test_operator_log_examples():
    assert np.max(np.abs(operator_log(np.eye(2)))) <= 1e-14
    m = np.diag([math.e, math.e**2])
    assert np.allclose(operator_log(m), np.diag([1.0, 2.0]), atol=1e-13)


def test_operator_log_rejects_nonpositive_spectrum():
    with pytest.raises(ValueError, match="-2.0"):
        operator_log(np.diag([1.0, -2.0]))
    with pytest.raises(ValueError):
        operator_log(np.diag([0.0, 1.0]))


def test_operator_exp_examples():
    assert np.allclose(operator_exp(np.zeros((2, 2))), np.eye(2), atol=1e-15)
    assert np.allclose(operator_exp(np.diag([math.log(2.0), math.log(3.0)])), np.diag([2.0, 3.0]), atol=1e-13)


def test_operator_exp_matches_series_oracle():
    rng = np.random.default_rng(5)
    for dim in (2, 4):
        h = random_hermitian(rng, dim)
        want = oracles.taylor_expm(h.astype(complex))
        got = operator_exp(h)
        assert np.max(np.abs(got - want)) <= 1e-12 * max(1.0, float(np.linalg.norm(want)))


def test_log_exp_round_trips():
    rng = np.random.default_rng(13)
    for dim in (2, 3, 8):
        p = random_positive_definite(rng, dim)
        back = operator_exp(operator_log(p))
        assert np.max(np.abs(back - p)) <= 1e-12 * max(1.0, float(np.linalg.norm(p)))
        h = random_hermitian(rng, dim)
        back2 = operator_log(operator_exp(h))
        assert np.max(np.abs(back2 - h)) <= 1e-12 * max(1.0, float(np.linalg.norm(h)))


def test_log_norm_bound():
    # ||log M||_2 <= max(|log a|, |log b|) for spectrum inside [a, b]
    rng = np.random.default_rng(17)
    for _ in range(20):
        p = random_positive_definite(rng, 4, eig_low=0.25, eig_high=4.0)
        bound = max(abs(math.log(0.25)), abs(math.log(4.0)))
        assert np.linalg.norm(operator_log(p), 2) <= bound + 1e-12


def test_positive_part_examples():
    assert np.allclose(positive_part(np.diag([2.0, -3.0])), np.diag([2.0, 0.0]), atol=1e-15)
    got = positive_part(SX)
    assert np.allclose(got, 0.5 * np.ones((2, 2)), atol=1e-14)
    rng = np.random.default_rng(19)
    p = random_positive_definite(rng, 3)
    assert np.max(np.abs(positive_part(p) - p)) <= 1e-12 * max(1.0, float(np.linalg.norm(p)))


def test_positive_part_decomposition():
    """M = M_+ - (-M)_+ and both parts are PSD."""
    rng = np.random.default_rng(23)
    m = random_hermitian(rng, 5)
    plus, minus = positive_part(m), positive_part(-m)
    assert np.max(np.abs((plus - minus) - m)) <= 1e-12 * max(1.0, float(np.linalg.norm(m)))
    assert np.linalg.eigvalsh(plus).min() >= -1e-13
    assert np.linalg.eigvalsh(minus).min() >= -1e-13


def test_normal_cdf_frozen():
    # values from the quadrature oracle in oracles.py
    assert normal_cdf(0.0) == 0.5
    assert abs(normal_cdf(0.5) - 0.6914624612740132) <= 1e-14
    assert abs(normal_cdf(1.0) - 0.8413447460685431) <= 1e-14
    far = normal_cdf(-8.0)
    assert 0.0 < far < 1e-14
    assert abs(far - 6.221245601246986e-16) <= 1e-19
    assert far <= oracles.mills_tail_bound(8.0)


def test_normal_cdf_symmetry():
    for x in np.arange(-6.0, 6.01, 0.25):
        assert abs(normal_cdf(x) + normal_cdf(-x) - 1.0) <= 1e-14


def test_normal_pdf():
    assert abs(normal_pdf(0.0) - 1.0 / math.sqrt(2.0 * math.pi)) <= 1e-16
    assert abs(normal_pdf(1.3) - normal_pdf(-1.3)) == 0.0


def test_phi_series_frozen():
    assert phi_series(0.0, 1) == 0.5
    assert abs(phi_series(1.0, 40) - 0.841344746068543) <= 1e-15
    # series and quadrature agree at the window edge
    assert abs(phi_series(3.0, 60) - oracles.normal_cdf_quadrature(3.0)) <= 1e-10


def test_phi_series_matches_cdf_on_window():
    xs = np.arange(-3.0, 3.0001, 0.01)
    worst = max(abs(phi_series(float(x), 60) - normal_cdf(float(x))) for x in xs)
    assert worst <= 1e-10


def test_phi_series_matches_direct_sum_oracle():
    for x in (-2.5, -0.7, 0.3, 1.9):
        assert abs(phi_series(x, 45) - oracles.maclaurin_cdf(x, 45)) <= 1e-13


def test_phi_series_domain():
    with pytest.raises(ValueError):
        phi_series(3.5, 40)
    with pytest.raises(ValueError):
        phi_series(1.0, 0)


def test_phi_operator_examples():
    assert np.allclose(phi_operator(np.zeros((2, 2))), 0.5 * np.eye(2), atol=1e-15)
    got = phi_operator(np.diag([1.0, -1.0]))
    # quadrature oracle: Phi(1), 1 - Phi(1)
    assert abs(got[0, 0].real - 0.8413447460685431) <= 1e-13
    assert abs(got[1, 1].real - 0.1586552539314569) <= 1e-13


def test_phi_operator_symmetry():
    rng = np.random.default_rng(29)
    m = random_hermitian(rng, 4)
    s = phi_operator(m) + phi_operator(-m)
    assert np.max(np.abs(s - np.eye(4))) <= 1e-12


def test_phi_operator_unitary_equivariance():
    """f(U* M U) = U* f(M) U, including a degenerate spectrum."""
    rng = np.random.default_rng(31)
    for base in (random_hermitian(rng, 3), np.diag([1.0, 1.0, 2.0])):
        u = random_unitary(rng, 3)
        lhs = phi_operator(u.conj().T @ base @ u)
        rhs = u.conj().T @ phi_operator(base) @ u
        assert np.max(np.abs(lhs - rhs)) <= 1e-10


def test_hermitian_part():
    m = np.array([[1.0, 2.0], [0.0, 3.0]], dtype=complex)
    hp = hermitian_part(m)
    assert np.array_equal(hp, adjoint(hp))
    assert np.allclose(hp, np.array([[1.0, 1.0], [1.0, 3.0]]))


def test_sylvester_example():
    x = np.diag([1.0, 2.0])
    w = SX.copy()
    l_op = sylvester_L(x, w)
    assert np.allclose(l_op, np.array([[0.0, -2.0], [1.0, 0.0]]), atol=1e-12)
    # defining identity [X, L] = W X
    assert np.max(np.abs(commutator(x, l_op) - w @ x)) <= 1e-12


def test_sylvester_square_identity():
    x = np.diag([1.0, 2.0])
    l_op = sylvester_L(x, SX.astype(complex))
    lhs = commutator(adjoint(l_op), x) @ commutator(x, l_op)
    assert np.max(np.abs(lhs - x @ x)) <= 1e-12


def test_sylvester_rejections():
    w = SX.astype(complex)
    with pytest.raises(ValueError, match="coincide"):
        sylvester_L(np.diag([1.0, 1.0]), w)
    with pytest.raises(ValueError, match="zero"):
        sylvester_L(np.diag([0.0, 1.0]), w)
    with pytest.raises(ValueError, match="diagonal"):
        sylvester_L(np.diag([1.0, 2.0]), np.eye(2, dtype=complex))
