from __future__ import annotations

import numpy as np
import pytest

from artifact import diffsys as ds
from artifact import numlin
from artifact.rotation_algebra import GOLDEN

BETA, THETA, CHI = 2.0, 0.3, 1 + 0.2j


@pytest.fixture(scope="module")
def table_c():
    return ds.resolvent_coefficients(0.7 + 0.4j, BETA, (-6, 6), (-6, 6))


@pytest.fixture(scope="module")
def table_d():
    return ds.d_polynomials(BETA, (-6, 6), (-6, 6), 0.7 + 0.4j)


# --- transfer recursion ----------------------------------------------------

def test_D_p_fixed_entries():
    for p in range(-3, 4):
        _, D, _, _ = ds.transfer_matrices(GOLDEN, THETA, BETA, CHI, p)
        assert D[2, 0] == 1
        assert D[0, 2] == -BETA


def test_det_F_is_product_of_dets():
    for p in range(5):
        C, D, E, F = ds.transfer_matrices(GOLDEN, THETA, BETA, CHI, p)
        expect = np.linalg.det(E) * np.linalg.det(D) * np.linalg.det(C)
        assert abs(np.linalg.det(F) - expect) < 1e-13 * max(1.0, abs(expect))


def test_F_p_advances_an_actual_solution(rng):
    z = 1.1
    X, res = ds.solve_diamond(6, THETA, BETA, z, rng)
    assert res < 1e-12
    for p in range(4):
        F = ds.transfer_matrices(GOLDEN, THETA, BETA, z, p)[3]
        s = np.array([X[p + 1, p + 1], X[p + 1, p], X[p, p]])
        nxt = np.array([X[p + 2, p + 2], X[p + 2, p + 1], X[p + 1, p + 1]])
        assert np.abs(F @ s - nxt).max() < 1e-10 * np.abs(nxt).max()


def test_printed_E_sign_does_not_advance_solutions(rng):
    z = 1.1
    X, _ = ds.solve_diamond(6, THETA, BETA, z, rng)
    F = ds.transfer_matrices(GOLDEN, THETA, BETA, z, 0, variant="printed")[3]
    s = np.array([X[1, 1], X[1, 0], X[0, 0]])
    nxt = np.array([X[2, 2], X[2, 1], X[1, 1]])
    assert np.abs(F @ s - nxt).max() > 1e-3 * np.abs(nxt).max()


def test_transfer_guard_reports_denominator():
    # cos(pi alpha (p+1) + theta) = 0 at p = 0
    theta = np.pi / 2 - np.pi * GOLDEN
    with pytest.raises(ds.GuardError, match="cos"):
        ds.transfer_matrices(GOLDEN, theta, BETA, CHI, 0)
    with pytest.raises(ValueError):
        ds.transfer_matrices(GOLDEN, THETA, BETA, CHI, 0, variant="other")


def test_advance_zero_and_linearity(rng):
    zero = ds.TransferState(np.zeros(3), 0)
    states, flag = ds.advance(zero, GOLDEN, THETA, BETA, CHI, 20)
    assert flag is None and all(np.all(s.values == 0) for s in states)
    s1 = rng.standard_normal(3) + 1j * rng.standard_normal(3)
    s2 = rng.standard_normal(3) + 1j * rng.standard_normal(3)
    a, b = 0.3 - 1.2j, 2.1
    run = lambda v: ds.advance(ds.TransferState(v, 0), GOLDEN, THETA, BETA, CHI, 20)[0][-1].values
    mix, r1, r2 = run(a * s1 + b * s2), run(s1), run(s2)
    assert np.abs(mix - (a * r1 + b * r2)).max() < 1e-12 * np.abs(mix).max()


def test_advance_flags_guard_mid_orbit():
    theta = np.pi / 2 - 4 * np.pi * GOLDEN  # cos vanishes at p = 3
    states, flag = ds.advance(ds.TransferState([1, 1, 1], 0), GOLDEN, theta, BETA, CHI, 10)
    assert flag is not None
    assert len(states) == 4


def test_transfer_state_validation():
    with pytest.raises(ValueError):
        ds.TransferState([1, 2], 0)
    with pytest.raises(ValueError):
        ds.TransferState([1, np.inf, 0], 0)


def test_wronskian_identical_data_vanishes():
    assert ds.wronskian_residual((1.0, 0.5), (1.0, 0.5), GOLDEN, THETA, BETA, CHI, 40) == 0.0


def test_wronskian_random_data(rng):
    X0 = rng.standard_normal(2) + 1j * rng.standard_normal(2)
    Y0 = rng.standard_normal(2) + 1j * rng.standard_normal(2)
    assert ds.wronskian_residual(X0, Y0, GOLDEN, THETA, BETA, CHI, 40) < 1e-10


def test_wronskian_printed_constant_fails(rng):
    X0, Y0 = rng.standard_normal(2), rng.standard_normal(2)
    assert ds.wronskian_residual(X0, Y0, GOLDEN, THETA, BETA, CHI, 40, variant="printed") > 1e-2


def test_wronskian_holds_for_random_parameters(rng):
    worst = 0.0
    for _ in range(100):
        th, b, chi = rng.uniform(0, 2 * np.pi), rng.uniform(1.5, 4), rng.uniform(-3, 3)
        try:
            worst = max(worst, ds.wronskian_residual(rng.standard_normal(2), rng.standard_normal(2),
                                                     GOLDEN, th, b, chi, 40))
        except ds.GuardError:
            continue
    # cancellation in the 2x2 minors amplifies roundoff on a few draws; a 50-digit
    # recomputation of the worst draw gives 7e-17
    assert worst < 1e-9


def test_wronskian_bilinearity(rng):
    X0, Y0 = rng.standard_normal(2), rng.standard_normal(2)
    xs, _ = ds.advance(ds.complete_state(*X0, THETA, CHI), GOLDEN, THETA, BETA, CHI, 10)
    ys, _ = ds.advance(ds.complete_state(*Y0, THETA, CHI), GOLDEN, THETA, BETA, CHI, 10)
    s = 2.5 - 0.5j
    xs2, _ = ds.advance(ds.complete_state(*(s * X0), THETA, CHI), GOLDEN, THETA, BETA, CHI, 10)
    w = lambda a, b, p: a[p].values[0] * b[p + 1].values[0] - a[p + 1].values[0] * b[p].values[0]
    for p in range(9):
        scale = abs(xs2[p].values[0] * ys[p + 1].values[0]) + abs(xs2[p + 1].values[0] * ys[p].values[0])
        assert abs(w(xs2, ys, p) - s * w(xs, ys, p)) < 1e-13 * scale


def test_generic_growth_dominates_wronskian_decay(rng):
    X0, Y0 = rng.standard_normal(2), rng.standard_normal(2)
    P = 200
    xs, flag = ds.advance(ds.complete_state(*X0, THETA, CHI), GOLDEN, THETA, BETA, CHI, P)
    assert flag is None
    growth = np.log(np.abs(xs[-1].values).max() / np.abs(xs[0].values).max()) / P
    K = [abs(ds.wronskian_constant(GOLDEN, THETA, BETA, p)) for p in range(P)]
    wdecay = np.log(K[-1] / K[0]) / P
    assert growth >= wdecay


# --- resolvent coefficients --------------------------------------------------

def test_large_z_neumann_leading_term():
    # (h - z)^{-1} = -1/z - h/z^2 - ...
    z = 200.0 + 50j
    t = ds.resolvent_coefficients(z, BETA, (-2, 2), (-2, 2), N=30, phase_samples=32, margin=0.0)
    assert abs(t[(0, 0)] * z + 1) < 1e-3
    off = max(abs(v) for k, v in t.values.items() if k != (0, 0))
    assert off < 5 / abs(z) ** 2  # first correction is -h/z^2


def test_symmetry_in_p(table_c):
    assert table_c.asymmetry < 1e-8
    for (p, q), v in table_c.raw.items():
        assert abs(v - table_c.raw[(abs(p), q)]) < 1e-8


def test_phase_sample_doubling_agrees():
    z = -3.0 + 1.5j
    a = ds.resolvent_coefficients(z, BETA, (-3, 3), (-3, 3), phase_samples=128)
    b = ds.resolvent_coefficients(z, BETA, (-3, 3), (-3, 3), phase_samples=256)
    assert max(abs(a[k] - b[k]) for k in a.values) < 1e-9


def test_decay_tracks_distance_to_spectrum():
    near = ds.resolvent_coefficients(0.7 + 0.4j, BETA, (0, 6), (0, 0))
    far = ds.resolvent_coefficients(0.7 + 3.0j, BETA, (0, 6), (0, 0))
    slope = lambda t: np.polyfit(range(2, 7), np.log([abs(t[(p, 0)]) for p in range(2, 7)]), 1)[0]
    assert slope(far) < slope(near) < 0


def test_coefficients_solve_the_system_at_theta_zero(table_c):
    sites = [(p, q) for p in range(-5, 6) for q in range(-5, 6) if (p, q) != (0, 0)]
    assert ds.system_residual(lambda p, q: table_c.raw[(p, q)], 0.0, BETA, table_c.z, sites) < 1e-12


def test_close_z_raises():
    from artifact.spectral import truncation_matrix
    z = float(np.linalg.eigvalsh(truncation_matrix(1.0, 1.0, 1.0, BETA, 40).entries)[40])
    with pytest.raises(numlin.NumlinError):
        ds.resolvent_coefficients(z, BETA, (-2, 2), (-2, 2), N=40, phase_samples=16)


def test_resolvent_argument_checks():
    with pytest.raises(ValueError):
        ds.resolvent_coefficients(1j, BETA, (-5, 5), (-5, 5), N=12)
    with pytest.raises(ValueError):
        ds.resolvent_coefficients(1j, BETA, (-2, 2), (-5, 5), phase_samples=8)


def test_table_csv(table_c):
    lines = table_c.to_csv().splitlines()
    assert lines[0] == "p,q,re,im"
    assert len(lines) == 1 + 13 * 13


# --- d polynomials ---------------------------------------------------------------

def test_d_seeds(table_d):
    assert table_d[(0, -1)] == 1 / BETA
    assert table_d[(1, -2)] == -1 / BETA ** 2
    assert table_d[(-1, -2)] == -1 / BETA ** 2
    assert table_d[(0, 0)] == 0 and table_d[(2, -2)] == 0


def test_d_second_row_closed_form(table_d):
    z = table_d.z
    assert abs(table_d[(0, -2)] - z / BETA ** 2) < 1e-15


def test_d_degrees_by_interpolation():
    zs = np.array([-1.0, -0.3, 0.4, 1.1, 2.0, 2.7])
    tabs = [ds.d_polynomials(BETA, (-3, 3), (-5, 0), z) for z in zs]
    for p in range(-3, 4):
        for q in range(-5, 1):
            vals = np.array([t[(p, q)].real for t in tabs])
            deg = ds.d_degree(p, q)
            if deg is None:
                assert np.all(vals == 0)
                continue
            # fit through the first deg+1 points reproduces the rest exactly
            coef = np.polyfit(zs[:deg + 1], vals[:deg + 1], deg)
            assert np.abs(np.polyval(coef, zs) - vals).max() < 1e-12 * max(1.0, np.abs(vals).max())
            if deg >= 1:
                lower = np.polyfit(zs, vals, deg - 1)
                assert np.abs(np.polyval(lower, zs) - vals).max() > 1e-6


def test_d_zero_minus_three_is_quadratic():
    assert ds.d_degree(0, -3) == 2
    a = GOLDEN * np.pi
    for z in (0.0, 1.0, -2.5):
        d = ds.d_polynomials(BETA, (0, 0), (-3, -3), z)[(0, -3)]
        expect = z ** 2 / BETA ** 3 + 2 * np.cos(2 * a) / BETA ** 3 - 1 / BETA
        assert abs(d - expect) < 1e-14


def test_d_solves_the_system(table_d):
    sites = [(p, q) for p in range(-5, 6) for q in range(-5, 6) if (p, q) != (0, 0)]
    assert ds.system_residual(lambda p, q: table_d[(p, q)], 0.0, BETA, table_d.z, sites) < 1e-12


def test_d_matches_large_delta_resolvent(table_d):
    # (h(delta) - z)^{-1} rescaled by delta^{-q} tends to d_pq on q < 0 as delta grows
    c = ds.resolvent_coefficients(table_d.z, BETA, (-2, 2), (-4, -1), delta=40.0, N=60, phase_samples=64)
    for k in c.values:
        assert abs(c[k] - table_d[k]) < 1e-10


# --- eigenvector identity ----------------------------------------------------------

@pytest.fixture(scope="module")
def identity_tables(real_mode):
    m = real_mode
    return (ds.resolvent_coefficients(m.chi, BETA, (-3, 3), (-3, 3)),
            ds.d_polynomials(BETA, (-3, 3), (-3, 3), m.chi))


def test_identity_derived_form(real_mode, identity_tables):
    c, d = identity_tables
    r = ds.thm216_identity_residual(real_mode, real_mode.G, real_mode.chi, c, d)
    assert r["residual"] < 1e-3
    assert r["residual"] < 1e-10


def test_identity_q_zero_row(real_mode, identity_tables):
    c, d = identity_tables
    r = ds.thm216_identity_residual(real_mode, real_mode.G, real_mode.chi, c, d, q_range=(0, 0))
    assert r["residual"] < 1e-3


def test_identity_published_phases_fail(real_mode, identity_tables):
    c, d = identity_tables
    r = ds.thm216_identity_residual(real_mode, real_mode.G, real_mode.chi, c, d, form="printed")
    assert r["residual"] > 0.1


def test_identity_rejects_unknown_form(real_mode, identity_tables):
    c, d = identity_tables
    with pytest.raises(ValueError):
        ds.thm216_identity_residual(real_mode, real_mode.G, real_mode.chi, c, d, form="other")
