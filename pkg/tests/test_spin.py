import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import swsh_goldberg
from rotharm.core import RotationZYZ, Spectrum, cart2sph, make_grid, random_spectrum
from rotharm.sft import sft_forward_sepvars, sft_inverse
from rotharm.so3corr import sph_corr_spectrum
from rotharm.spin import (
    evaluate_spin_spectrum, phase_batch_norm, phase_relu, spin1_to_vf, spin_conv, spin_corr,
    swsft_forward, swsft_inverse, swsh_all, torus_extend, torus_weights, vf_to_spin1,
)
from rotharm.wigner import rotate_spectrum, swsh


def _spin_spectrum(b, s, rng, channels=1):
    c = random_spectrum(b, rng, channels=channels, real=False).coeffs
    c[:, : abs(s) ** 2] = 0
    return Spectrum(c, s)


@pytest.mark.parametrize("s", [-2, -1, 0, 1, 2])
def test_swsh_matches_goldberg(s):
    th = np.array([0.0, 0.4, 1.9, np.pi])
    ph = np.array([0.3, 2.0, 5.0, 1.0])
    Y = swsh_all(s, 5, th, ph)
    for ell in range(abs(s), 5):
        for m in range(-ell, ell + 1):
            ref = [swsh_goldberg(s, ell, m, t, p) for t, p in zip(th, ph)]
            np.testing.assert_allclose(Y[:, ell * ell + ell + m], ref, atol=1e-13)
            assert swsh(s, ell, m, th[1], ph[1]) == pytest.approx(ref[1])


def test_spin_one_golden():
    # 1Y_1^0 = sqrt(3/(8 pi)) sin(theta)
    assert swsh(1, 1, 0, 0.7, 0.0) == pytest.approx(np.sqrt(3 / (8 * np.pi)) * np.sin(0.7))
    with pytest.raises(ValueError):
        swsh(2, 1, 0, 0.5, 0.5)


def test_torus_weights_exact():
    b = 6
    w = torus_weights(b) * (2 * np.pi / (4 * b))
    t = np.pi * np.arange(4 * b) / (2 * b)
    for q in range(-(2 * b - 1), 2 * b):
        if q % 2 == 0:
            ref = 2 / (1 - q * q)
        else:
            ref = {1: 1j * np.pi / 2, -1: -1j * np.pi / 2}.get(q, 0.0)
        assert w @ np.exp(1j * q * t) == pytest.approx(ref, abs=1e-13)
    assert w[2 * b] == 0.0


@pytest.mark.parametrize("s", [-1, 2])
def test_torus_extension_is_analytic_continuation(s):
    b = 6
    rng = np.random.default_rng(0)
    spec = _spin_spectrum(b, s, rng)
    ext = torus_extend(swsft_inverse(spec), s)[0]
    t = np.pi * np.arange(4 * b) / (2 * b)
    T, P = np.meshgrid(t, make_grid(b).phis, indexing="ij")
    # the closed form extends to theta in (pi, 2pi) through the Wigner d polynomial
    ref = evaluate_spin_spectrum(spec, T, P)[0]
    mask = np.arange(4 * b) != 2 * b
    np.testing.assert_allclose(ext[mask], ref[mask], atol=1e-12)


@given(st.sampled_from([-2, -1, 0, 1, 2]), st.integers(3, 12), st.integers(0, 10**6))
@settings(max_examples=30, deadline=None)
def test_round_trip_property(s, b, seed):
    spec = _spin_spectrum(b, s, np.random.default_rng(seed), channels=2)
    back = swsft_forward(swsft_inverse(spec), s)
    assert back.spin == s
    np.testing.assert_allclose(back.coeffs, spec.coeffs, atol=1e-11)


def test_inverse_matches_pointwise_synthesis():
    rng = np.random.default_rng(1)
    spec = _spin_spectrum(5, 1, rng)
    T, P = make_grid(5).mesh()
    np.testing.assert_allclose(swsft_inverse(spec)[0], evaluate_spin_spectrum(spec, T, P)[0],
                               atol=1e-12)


def test_spin_zero_equals_scalar_transform():
    rng = np.random.default_rng(2)
    f = random_spectrum(8, rng, real=False)
    sig = sft_inverse(f)
    np.testing.assert_allclose(swsft_forward(sig.data, 0).coeffs,
                               sft_forward_sepvars(sig).coeffs, atol=1e-12)


def test_support_violation_rejected():
    c = np.zeros((1, 16), complex)
    c[0, 0] = 1
    with pytest.raises(ValueError):
        swsft_inverse(Spectrum(c, 1))
    with pytest.raises(ValueError):
        swsft_forward(np.zeros((1, 4, 4)), 2)


def test_gradient_is_spin_one():
    # z of grad Y_m^l equals -sqrt(l(l+1)) 1Y_m^l; d/dtheta by central differences
    b, h = 6, 1e-5
    T, P = make_grid(b).mesh()
    for ell, m in [(1, 0), (2, 1), (4, -3)]:
        dt = (swsh(0, ell, m, T + h, P) - swsh(0, ell, m, T - h, P)) / (2 * h)
        with np.errstate(divide="ignore", invalid="ignore"):
            dp = 1j * m * swsh(0, ell, m, T, P) / np.sin(T)
        z = dt + 1j * dp
        z[0] = 0
        spec = swsft_forward(z, 1)
        ref = Spectrum.delta(b, ell, m, -np.sqrt(ell * (ell + 1.0)), spin=1)
        np.testing.assert_allclose(spec.coeffs, ref.coeffs, atol=1e-8)


def test_vector_field_round_trip_and_rotation():
    rng = np.random.default_rng(7)
    b = 16
    zs = _spin_spectrum(b, 1, rng)
    z = swsft_inverse(zs)
    vf = spin1_to_vf(z)
    np.testing.assert_allclose(vf_to_spin1(vf)[:, 1:], z[:, 1:], atol=1e-13)
    g = RotationZYZ.random(rng)
    R = g.matrix()
    x = make_grid(b).points() @ R.T
    t2, p2 = cart2sph(x)
    zr = evaluate_spin_spectrum(zs, t2, p2)[0]
    e_t = np.stack([np.cos(t2) * np.cos(p2), np.cos(t2) * np.sin(p2), -np.sin(t2)], -1)
    e_p = np.stack([-np.sin(p2), np.cos(p2), np.zeros_like(p2)], -1)
    v = zr.real[..., None] * e_t + zr.imag[..., None] * e_p
    # rotated field v'(x) = R^T v(R x)
    vr = np.moveaxis(v @ R, -1, 0)
    got = swsft_forward(vf_to_spin1(vr), 1)
    ref = rotate_spectrum(zs, g)
    assert np.abs(got.coeffs - ref.coeffs).max() < 1e-8


def test_spin_conv_equivariant_and_checked():
    rng = np.random.default_rng(3)
    b = 8
    F = {0: _spin_spectrum(b, 0, rng, 2), 1: _spin_spectrum(b, 1, rng, 2)}
    K = {s: {i: rng.standard_normal((2, 3, b)) for i in (0, 1)} for s in (0, 1, -1)}
    out = spin_conv(F, K)
    assert set(out) == {0, 1, -1} and out[1].channels == 3
    assert np.all(out[1].coeffs[:, 0] == 0)
    g = RotationZYZ.random(rng)
    rot = spin_conv({i: rotate_spectrum(f, g) for i, f in F.items()}, K)
    for s in out:
        np.testing.assert_allclose(rot[s].coeffs, rotate_spectrum(out[s], g).coeffs, atol=1e-11)
    with pytest.raises(ValueError):
        spin_conv(F, {0: {0: np.ones(b)}})


def test_spin_corr_reduces_to_scalar():
    rng = np.random.default_rng(4)
    f, k = random_spectrum(5, rng, 2), random_spectrum(5, rng, 2)
    a = spin_corr({0: f}, {0: k})
    np.testing.assert_allclose(a.flat(), sph_corr_spectrum(f, k).flat())
    with pytest.raises(ValueError):
        spin_corr({0: f}, {1: k})


def test_phase_preserving_nonlinearities():
    z = np.array([3 + 4j, -0.1j, 0.0])
    out = phase_relu(z, -1.0)
    np.testing.assert_allclose(out, [(3 + 4j) * 4 / 5, 0, 0])
    bn = phase_batch_norm(z)
    np.testing.assert_allclose(np.angle(bn[:2]), np.angle(z[:2]))
    assert np.mean(np.abs(bn) ** 2) == pytest.approx(1.0)


def test_spin_corr_single_harmonic_is_rank_one():
    f = Spectrum.delta(4, 2, 1, spin=1)
    S = spin_corr({1: f}, {1: f})
    ranks = [np.linalg.matrix_rank(B, tol=1e-12) for B in S.blocks]
    assert ranks == [0, 0, 1, 0]


def test_spin_corr_recovers_rotation():
    from rotharm.core import rotation_distance
    from rotharm.so3corr import argmax_rotation, grid_spacing, so3_synthesize
    rng = np.random.default_rng(8)
    b, n = 8, 32
    F = {0: random_spectrum(b, rng, real=False), 1: _spin_spectrum(b, 1, rng)}
    for trial in range(3):
        g = RotationZYZ.random(rng)
        K = {s: rotate_spectrum(F[s], g) for s in F}
        peak = argmax_rotation(so3_synthesize(spin_corr(F, K), n))
        assert rotation_distance(peak.rotation, g) < 1.5 * grid_spacing(n)


def test_phase_relu_commutes_with_global_phase():
    rng = np.random.default_rng(9)
    z = rng.standard_normal(50) + 1j * rng.standard_normal(50)
    rot = np.exp(-1j * 0.7)
    np.testing.assert_allclose(phase_relu(rot * z, -0.5), rot * phase_relu(z, -0.5), atol=1e-15)


def test_frame_fields():
    b = 4
    assert np.all(vf_to_spin1(np.zeros((3, 2 * b, 2 * b))) == 0)
    T, P = make_grid(b).mesh()
    e_t = np.stack([np.cos(T) * np.cos(P), np.cos(T) * np.sin(P), -np.sin(T)])
    z = vf_to_spin1(e_t)[0]
    np.testing.assert_allclose(z[1:], 1.0 + 0j, atol=1e-15)
    assert np.all(z[0] == 0)
