import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import lpmv, sph_harm_y

from oracles import wigner_d_matrix
from rotharm.core import (
    RotationZYZ, SphericalSignal, Spectrum, cart2sph, make_grid, quadrature_weights, random_spectrum,
)
from rotharm.sft import sft_forward_sepvars
from rotharm.spin import swsh_all
from rotharm.wigner import (
    delta_matrix, legendre_assoc, little_d, normalized_legendre, risbo_little_d, rotate_spectrum,
    sph_harm, sph_harm_all, swsh, wigner_D, wigner_D_table, wigner_d_table,
)


def test_d1_golden_half_pi():
    s = 1 / np.sqrt(2)
    expect = np.array([[0.5, s, 0.5], [-s, 0.0, s], [0.5, -s, 0.5]])
    np.testing.assert_allclose(little_d(1, np.pi / 2), expect, atol=1e-15)


def test_d2_golden_entries():
    beta = 0.8
    d = little_d(2, beta)
    c, s = np.cos(beta), np.sin(beta)
    assert d[2, 2] == pytest.approx((3 * c * c - 1) / 2)
    assert d[4, 2] == pytest.approx(np.sqrt(3 / 8) * s * s)
    assert d[3, 2] == pytest.approx(-np.sqrt(3 / 2) * s * c)


@pytest.mark.parametrize("ell", range(0, 9))
def test_little_d_matches_factorial_sum(ell):
    for beta in (0.0, 0.37, 1.3, np.pi / 2, 2.9, np.pi):
        np.testing.assert_allclose(little_d(ell, beta), wigner_d_matrix(ell, beta), atol=1e-13)


@pytest.mark.parametrize("ell", [50, 128, 200])
def test_little_d_orthogonal_high_degree(ell):
    d = little_d(ell, 1.234)
    assert np.abs(d @ d.T - np.eye(2 * ell + 1)).max() < 1e-11


def test_table_consistent_with_single_degree():
    tab = wigner_d_table(6, 0.9)
    for ell in range(7):
        np.testing.assert_allclose(tab[ell], little_d(ell, 0.9), atol=1e-14)


@pytest.mark.parametrize("ell", range(0, 9))
def test_risbo_factorization(ell):
    for beta in (0.2, 1.1, 2.5):
        np.testing.assert_allclose(risbo_little_d(ell, beta), little_d(ell, beta), atol=1e-13)


def test_delta_is_d_at_half_pi():
    for ell in range(6):
        np.testing.assert_allclose(delta_matrix(ell), little_d(ell, np.pi / 2), atol=1e-14)


def test_legendre_against_scipy():
    x = np.linspace(-0.99, 0.99, 7)
    for ell, m in [(0, 0), (1, 1), (3, 2), (5, 3), (60, 30)]:
        np.testing.assert_allclose(legendre_assoc(ell, m, x), lpmv(m, ell, x), rtol=1e-10)
    assert legendre_assoc(1, 1, 0.0) == pytest.approx(-1.0)


def test_normalized_legendre_layout():
    x = np.array([0.3])
    P = normalized_legendre(4, x)
    for ell in range(5):
        for m in range(ell + 1):
            y = sph_harm_y(ell, m, np.arccos(0.3), 0.0).real
            assert P[m, ell][0] == pytest.approx(y, abs=1e-13)


def test_sph_harm_golden_and_scipy():
    assert sph_harm(0, 0, 0.4, 1.0) == pytest.approx(1 / np.sqrt(4 * np.pi))
    assert sph_harm(1, 0, 0.0, 0.0) == pytest.approx(np.sqrt(3 / (4 * np.pi)))
    assert sph_harm(1, 1, np.pi / 2, 0.0) == pytest.approx(-np.sqrt(3 / (8 * np.pi)))
    th, ph = np.array([0.3, 1.7, 2.9]), np.array([0.1, 4.0, 5.5])
    for ell in range(5):
        for m in range(-ell, ell + 1):
            np.testing.assert_allclose(sph_harm(ell, m, th, ph), sph_harm_y(ell, m, th, ph),
                                       atol=1e-14)
    Y = sph_harm_all(5, th, ph)
    assert Y.shape == (3, 25)
    np.testing.assert_allclose(Y[:, 2 * 2 + 2 - 1], sph_harm_y(2, -1, th, ph), atol=1e-14)


def _rotation():
    return st.builds(lambda a, b, c: RotationZYZ(a, b, c), st.floats(0, 6.28),
                     st.floats(0, np.pi), st.floats(0, 6.28))


@given(_rotation(), _rotation())
@settings(max_examples=30, deadline=None)
def test_D_is_a_unitary_representation(g, h):
    for ell in range(4):
        D = wigner_D(ell, g)
        np.testing.assert_allclose(D @ D.conj().T, np.eye(2 * ell + 1), atol=1e-12)
        np.testing.assert_allclose(wigner_D(ell, g @ h), D @ wigner_D(ell, h), atol=1e-12)


def test_zonal_column_and_rotation_formula():
    rng = np.random.default_rng(0)
    g = RotationZYZ.random(rng)
    x = rng.standard_normal(3)
    x /= np.linalg.norm(x)
    t0, p0 = cart2sph(x)
    t1, p1 = cart2sph(g.matrix() @ x)
    for ell, D in enumerate(wigner_D_table(4, g)):
        ms = range(-ell, ell + 1)
        y = np.array([sph_harm_y(ell, m, g.beta, g.alpha) for m in ms])
        np.testing.assert_allclose(D[:, ell], np.sqrt(4 * np.pi / (2 * ell + 1)) * np.conj(y),
                                   atol=1e-13)
        Y0 = np.array([sph_harm_y(ell, m, t0, p0) for m in ms])
        Y1 = np.array([sph_harm_y(ell, m, t1, p1) for m in ms])
        np.testing.assert_allclose(Y1, np.conj(D) @ Y0, atol=1e-13)


def test_rotate_spectrum_composes_and_preserves_norm():
    rng = np.random.default_rng(2)
    f = random_spectrum(8, rng, channels=2)
    g, h = RotationZYZ.random(rng), RotationZYZ.random(rng)
    a = rotate_spectrum(rotate_spectrum(f, g), h)
    b = rotate_spectrum(f, g @ h)
    np.testing.assert_allclose(a.coeffs, b.coeffs, atol=1e-12)
    np.testing.assert_allclose(np.linalg.norm(a.coeffs), np.linalg.norm(f.coeffs))


def test_documented_golden_values():
    assert sph_harm(0, 0, 1.0, 2.0) == pytest.approx(0.282094791773878)
    assert sph_harm(1, 0, 0.0, 0.0) == pytest.approx(0.488602511902920)
    assert sph_harm(2, 0, 0.0, 0.0) == pytest.approx(np.sqrt(5 / (4 * np.pi)))
    assert sph_harm(2, 1, np.pi / 4, 0.0) == pytest.approx(-np.sqrt(15 / (8 * np.pi)) / 2)
    assert sph_harm(2, 2, np.pi / 2, 0.0) == pytest.approx(np.sqrt(15 / (2 * np.pi)) / 4)
    s = np.sqrt(6) / 4
    expect = np.array([[0.25, 0.5, s, 0.5, 0.25], [-0.5, -0.5, 0, 0.5, 0.5], [s, 0, -0.5, 0, s],
                       [-0.5, 0.5, 0, -0.5, 0.5], [0.25, -0.5, s, -0.5, 0.25]])
    np.testing.assert_allclose(little_d(2, np.pi / 2), expect, atol=1e-15)
    assert swsh(1, 1, 1, np.pi / 2, 0.0) == pytest.approx(-np.sqrt(3 / (16 * np.pi)))
    assert swsh(-1, 1, 0, np.pi / 2, 0.0) == pytest.approx(-np.sqrt(3 / (8 * np.pi)))


def test_domain_errors():
    with pytest.raises(ValueError):
        legendre_assoc(2, 3, 0.1)
    with pytest.raises(ValueError):
        legendre_assoc(2, 1, 1.5)
    with pytest.raises(ValueError):
        sph_harm(1, 2, 0.1, 0.1)


def test_simple_matrices():
    x = np.linspace(-1, 1, 5)
    np.testing.assert_allclose(legendre_assoc(0, 0, x), 1.0)
    np.testing.assert_allclose(legendre_assoc(1, 0, x), x)
    for ell in range(5):
        np.testing.assert_allclose(little_d(ell, 0.0), np.eye(2 * ell + 1), atol=1e-15)
        np.testing.assert_allclose(wigner_D(ell, RotationZYZ.identity()), np.eye(2 * ell + 1),
                                   atol=1e-15)
        m = np.arange(-ell, ell + 1)
        np.testing.assert_allclose(wigner_D(ell, RotationZYZ(0.7, 0, 0)),
                                   np.diag(np.exp(-1j * m * 0.7)), atol=1e-15)
    assert delta_matrix(0).tolist() == [[1.0]]


def test_rotate_y10_by_quarter_turn():
    f = Spectrum.delta(4, 1, 0)
    g = RotationZYZ(0.0, np.pi / 2, 0.0)
    rot = rotate_spectrum(f, g)
    assert np.abs(rot.coeffs[0, 4:]).max() < 1e-14 and rot.coeffs[0, 0] == 0
    assert np.linalg.norm(rot.coeffs[0, 1:4]) == pytest.approx(1.0)
    # resample Y_1^0(R x) on the grid and transform
    x = make_grid(4).points() @ g.matrix().T
    resampled = SphericalSignal(sph_harm(1, 0, np.arccos(np.clip(x[..., 2], -1, 1)),
                                         np.arctan2(x[..., 1], x[..., 0])))
    np.testing.assert_allclose(sft_forward_sepvars(resampled).coeffs, rot.coeffs, atol=1e-13)
    back = rotate_spectrum(rot, RotationZYZ.from_matrix(g.matrix().T))
    np.testing.assert_allclose(back.coeffs, f.coeffs, atol=1e-13)


def test_harmonics_orthonormal_under_grid_quadrature():
    b = 6
    T, P = make_grid(b).mesh()
    cell = quadrature_weights(b).cell
    for s in (0, 1, -2):
        Y = swsh_all(s, b, T, P).reshape(-1, b * b)
        gram = (Y.conj() * np.repeat(cell, 2 * b)[:, None]).T @ Y
        ells = np.repeat(np.arange(b), 2 * np.arange(b) + 1)
        expect = np.diag((ells >= abs(s)).astype(float))
        np.testing.assert_allclose(gram, expect, atol=1e-10)
    np.testing.assert_allclose(swsh(0, 3, -2, T, P), sph_harm(3, -2, T, P), atol=1e-12)
    # 1Y_1^0 from the D^1 relation: (-1)^s sqrt(3/4pi) d^1_{0,-1}(theta)
    assert swsh(1, 1, 0, 0.8, 0.0) == pytest.approx(-np.sqrt(3 / (4 * np.pi)) * little_d(1, 0.8)[1, 0])
