from __future__ import annotations

import numpy as np
import pytest

from artifact import fredholm as fr
from artifact.eigenmode import LAM, gamma_value
from artifact.lattice_rep import g_series

BETA = 2.0


@pytest.fixture(scope="module")
def band():
    return fr.tan_g_coefficients(BETA)


@pytest.fixture(scope="module")
def gam(real_mode):
    return gamma_value(real_mode)[0]


# --- band ------------------------------------------------------------------------

def test_band_is_real_and_even_on_the_unit_circle(band):
    assert np.abs(band.coeffs.imag).max() < 1e-14
    for j in range(1, band.J + 1):
        assert abs(band[j] - band[-j]) < 1e-14


def test_band_leading_coefficient_for_large_beta():
    beta = 40.0
    a = fr.tan_g_coefficients(beta)
    g = g_series(beta)
    # tan(g/2) = g/2 + O(g^3)
    assert abs(a[1] - g[1] / 2) < 1e-4 * abs(g[1])


def test_band_decays_geometrically(band):
    # small divisors make the decay uneven, so test the envelope slope
    js = np.arange(1, 16)
    mags = np.abs([band[j] for j in js])
    slope = np.polyfit(js, np.log(mags), 1)[0]
    assert slope < -0.5
    assert mags[-1] < 1e-4


def test_tan_guard_and_variants():
    with pytest.raises(fr.GuardError):
        fr.tan_g_coefficients(BETA, margin=2.0)
    with pytest.raises(ValueError):
        fr.tan_symbol(BETA, variant="quarter")


def test_essential_curves_are_conjugate(band):
    up, down = fr.essential_spectrum_curve(band, 256)
    assert np.abs(up - np.conj(down)).max() < 1e-14


def test_band_matrix_convention(band):
    T = fr.band_matrix(band, 30)
    eta = np.zeros(30, complex)
    eta[10] = 1
    # (T eta)_n = a_{n-10}
    assert abs((T @ eta)[13] - band[3]) < 1e-16
    assert abs((T @ eta)[7] - band[-3]) < 1e-16


# --- diagonal and assembly -----------------------------------------------------------

def test_diagonal_limits(gam):
    n = np.arange(-60, 61)
    d, core = fr.diagonal_values(gam, 1.5, n)
    assert d[-1] == -1j and d[0] == 1j
    assert 0 < core < len(n)


def test_diagonal_depends_on_t_squared(gam):
    n = np.arange(-5, 6)
    logmod, ph = fr.t_squared(gam, 1.5, n)
    t = fr.t_values(gam, 1.5, n)
    assert np.abs(np.exp(logmod) * ph - t ** 2).max() < 1e-12 * np.abs(t ** 2).max()


def test_shift_relation_of_diagonals(gam):
    G = 1.5
    n = np.arange(-20, 21)
    d0, _ = fr.diagonal_values(gam, G, n)
    d1, _ = fr.diagonal_values(LAM ** 2 * G ** 2 * gam, LAM ** 2 * G, n)
    # the rotated data reproduce the diagonal one site later
    assert np.abs(d1[1:] - d0[:-1]).max() < 1e-12


def test_assemble_bandwidth_and_validation(band, gam):
    H = fr.assemble_H(gam, 1.5, band, (-30, 30))
    A = H.matrix.entries
    i, j = np.indices(A.shape)
    assert np.all(A[np.abs(i - j) > band.J] == 0)
    with pytest.raises(ValueError):
        fr.assemble_H(gam, 0.9, band)


# --- kernel ---------------------------------------------------------------------------

def test_kernel_transform_residual(real_mode, gam, band):
    assert fr.kernel_transform_check(real_mode, gam, a=band) < 1e-8


def test_kernel_transform_needs_half_angle(real_mode, gam):
    full = fr.tan_g_coefficients(BETA, variant="full")
    assert fr.kernel_transform_check(real_mode, gam, a=full) > 1e-2


def test_kernel_transform_sign_flips(real_mode, gam, band):
    single = fr.kernel_transform_check(real_mode, gam, a=band, flip_site=0)
    both = fr.kernel_transform_check(real_mode, gam, a=band, global_flip=True)
    assert single > 1e-3
    assert both < 1e-8


def test_kernel_dimension_one(real_mode, gam, band):
    rep = fr.kernel_dimension(fr.assemble_H(gam, real_mode.G, band))
    assert rep.dim == 1 and rep.clean


def test_kernel_dimension_control_is_zero(real_mode, gam, band):
    rep = fr.kernel_dimension(fr.assemble_H(1.5 * gam, real_mode.G, band))
    assert rep.dim == 0


def test_kernel_dimension_stable_under_window_doubling(real_mode, gam, band):
    rep = fr.kernel_dimension(fr.assemble_H(gam, real_mode.G, band, (-120, 120)), solver="np")
    assert rep.dim == 1


def test_own_and_lapack_kernel_agree(real_mode, gam, band):
    H = fr.assemble_H(gam, real_mode.G, band, (-40, 40))
    a, b = fr.kernel_dimension(H), fr.kernel_dimension(H, solver="np")
    assert a.dim == b.dim
    assert np.allclose(a.smallest[1:], b.smallest[1:], rtol=1e-8)


def test_printed_t_convention_breaks_the_transform(real_mode, gam, band):
    assert fr.kernel_transform_check(real_mode, gam, a=band, convention="printed") > 1e-3


# --- |delta| = 1 ---------------------------------------------------------------------------

def test_psi_with_zero_alpha_is_linear():
    n = np.arange(-5, 6)
    psi = fr.psi_values(0.1, 0.3, n, alpha=0.0)
    assert np.abs(np.cos(psi) - np.cos(np.pi * (0.2 * n + 0.3))).max() < 1e-14


def test_psi_reduction_for_large_indices():
    n = np.array([10 ** 6])
    psi = fr.psi_values(0.0, 0.0, n)
    assert 0 <= psi[0] < 2 * np.pi


def test_unbounded_diagonal_real_and_guarded():
    H = fr.unbounded_H(0.13, 0.41, 1.0, 4.0).entries
    # the only imaginary part is FFT roundoff in the band
    assert np.abs(np.diag(H).imag).max() < 1e-15
    assert np.abs(H - H.T).max() < 1e-14
    with pytest.raises(fr.GuardError):
        fr.unbounded_H(0.0, 0.5, 1.0, 4.0)


@pytest.mark.parametrize("angle,target", [(0.37, 0.0), (2.2, 3.0)])
def test_unbounded_transform(angle, target):
    x = np.exp(1j * angle)
    xi = fr.bounded_mode(4.0, x, N=60, target=target)
    rep = fr.unbounded_transform_check(4.0, x, xi)
    assert rep.c_fit_residual < 1e-10
    assert abs(abs(rep.c) - 1) < 1e-10
    assert rep.residual < 1e-10
    printed = fr.unbounded_transform_check(4.0, x, xi, convention="printed")
    assert printed.residual > 0.1


def test_compression_is_nearly_unitary_and_fills_circle():
    small = fr.k_unitarity_check(1.0, 4.0, np.exp(0.37j), 40)
    large = fr.k_unitarity_check(1.0, 4.0, np.exp(0.37j), 160)
    assert large.max_modulus_defect < 1e-8
    assert large.coverage > small.coverage
    with pytest.raises(ValueError):
        fr.k_unitarity_check(5.0, 4.0, 1.0, 40)
