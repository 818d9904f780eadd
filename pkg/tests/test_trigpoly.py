import numpy as np
import pytest

from loopchern.errors import DimensionError
from loopchern.trigpoly import MatrixTrigPoly


def _random_poly(rng, ncoords=1, rank=2, nterms=3, sdeg=0):
    p = MatrixTrigPoly(ncoords, rank)
    for _ in range(nterms):
        freq = tuple(int(f) for f in rng.integers(-2, 3, size=ncoords))
        coeff = rng.standard_normal((sdeg + 1, rank, rank)) \
            + 1j * rng.standard_normal((sdeg + 1, rank, rank))
        p.add_term(freq, coeff)
    return p


def test_constant_eval():
    m = np.array([[1.0, 2.0], [3.0, 4.0]])
    p = MatrixTrigPoly.constant(1, m)
    assert np.allclose(p.eval(0.37), m)
    assert np.allclose(p.eval(np.linspace(0, 1, 5)), np.broadcast_to(m, (5, 2, 2)))


def test_product_is_pointwise():
    rng = np.random.default_rng(0)
    a = _random_poly(rng)
    b = _random_poly(rng)
    ts = rng.uniform(0, 1, size=7)
    assert np.allclose((a @ b).eval(ts), a.eval(ts) @ b.eval(ts), atol=1e-12)


def test_two_coordinate_product_and_eval():
    rng = np.random.default_rng(1)
    a = _random_poly(rng, ncoords=2)
    b = _random_poly(rng, ncoords=2)
    pts = rng.uniform(0, 1, size=(6, 2))
    assert np.allclose((a @ b).eval(pts), a.eval(pts) @ b.eval(pts), atol=1e-12)


def test_coordinate_derivative_against_finite_difference():
    rng = np.random.default_rng(2)
    p = _random_poly(rng, ncoords=2)
    x = np.array([0.21, 0.63])
    h = 1e-6
    for mu in range(2):
        e = np.zeros(2)
        e[mu] = h
        fd = (p.eval(x + e) - p.eval(x - e)) / (2 * h)
        assert np.allclose(p.dcoord(mu).eval(x), fd, atol=1e-6)


def test_s_polynomial_eval_and_derivative():
    rng = np.random.default_rng(3)
    p = _random_poly(rng, sdeg=3)
    s = 0.417
    h = 1e-6
    fd = (p.eval(0.2, s + h) - p.eval(0.2, s - h)) / (2 * h)
    assert np.allclose(p.ds().eval(0.2, s), fd, atol=1e-5)
    # vectorized s axis
    svals = np.array([0.0, 0.25, 1.0])
    batch = p.eval(0.2, svals)
    for i, sv in enumerate(svals):
        assert np.allclose(batch[i], p.eval(0.2, sv), atol=1e-14)


def test_at_s_freezes():
    rng = np.random.default_rng(4)
    p = _random_poly(rng, sdeg=2)
    frozen = p.at_s(0.7)
    assert frozen.sdeg == 0
    assert np.allclose(frozen.eval(0.3), p.eval(0.3, 0.7), atol=1e-14)


def test_affine_substitution():
    rng = np.random.default_rng(5)
    p = _random_poly(rng, sdeg=3)
    q = p.subs_affine_s(0.5, 0.25)
    for u in (0.0, 0.3, 1.0):
        assert np.allclose(q.eval(0.1, u), p.eval(0.1, 0.5 + 0.25 * u), atol=1e-13)


def test_kron_and_block_diag():
    rng = np.random.default_rng(6)
    a = _random_poly(rng, rank=2)
    b = _random_poly(rng, rank=3)
    t = 0.39
    assert np.allclose(a.kron(b).eval(t), np.kron(a.eval(t), b.eval(t)), atol=1e-12)
    bd = a.block_diag(b).eval(t)
    assert np.allclose(bd[:2, :2], a.eval(t), atol=1e-14)
    assert np.allclose(bd[2:, 2:], b.eval(t), atol=1e-14)
    assert np.abs(bd[:2, 2:]).max() == 0.0


def test_eval_without_s_on_s_dependent_raises():
    rng = np.random.default_rng(7)
    p = _random_poly(rng, sdeg=1)
    with pytest.raises(DimensionError):
        p.eval(0.1)


def test_commutator():
    rng = np.random.default_rng(8)
    a = _random_poly(rng)
    b = _random_poly(rng)
    t = 0.8
    av, bv = a.eval(t), b.eval(t)
    assert np.allclose(a.commutator(b).eval(t), av @ bv - bv @ av, atol=1e-12)
