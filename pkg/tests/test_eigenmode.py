from __future__ import annotations

import json

import numpy as np
import pytest

from artifact import eigenmode as em
from artifact.lattice_rep import LatticeWindow


def test_real_mode_is_an_eigenvector(real_mode):
    assert real_mode.residual < 1e-12
    assert abs(real_mode.chi.imag) < 1e-10


def test_decay_rate_respects_bound(real_mode):
    rep = em.decay_exponent(real_mode.xi)
    assert rep["rate"] < 1.1 / (real_mode.beta * real_mode.delta)
    assert rep["left"] > 0 and rep["right"] > 0


def test_decay_exponent_on_exact_geometric_sequence():
    n = np.arange(-40, 41)
    xi = LatticeWindow(-40, 0.5 ** np.abs(n))
    rep = em.decay_exponent(xi)
    assert abs(rep["rate"] - 0.5) < 1e-12
    assert not rep["shrunk"]


def test_decay_exponent_needs_data():
    with pytest.raises(ValueError):
        em.decay_exponent(LatticeWindow(0, [1.0, 0.0, 0.0]))


def test_find_phase_eigenpair_recovers_known_pair():
    beta, delta, x0 = 2.0, 1.5, np.exp(0.7j)
    w, c = em._centred_spectrum(beta, delta, x0, 40)
    target = complex(w[np.argmin(np.abs(c))])
    mode = em.find_phase_eigenpair(beta, delta, target, N=80, N_search=40)
    assert mode.info["target_distance"] < 1e-8
    assert mode.residual < 1e-10
    assert abs(abs(mode.x) - 1) < 1e-14


def test_find_phase_eigenpair_rejects_off_curve_target(mu2):
    with pytest.raises(ValueError):
        em.find_phase_eigenpair(2.0, 1.5, 0.0 + 0.0j, mu=mu2)
    with pytest.raises(ValueError):
        em.find_phase_eigenpair(2.0, 0.9, 1.0)


def test_gamma_shift_relation(real_mode):
    rep = em.omega_shift_check(real_mode)
    assert rep.corrected < 1e-12
    assert rep.modulus < 1e-12
    # the ratio carries the extra lam^2, so the plain G^2 form is off by |lam^2 - 1|
    assert abs(rep.literal - abs(em.LAM ** 2 - 1)) < 1e-10
    assert max(rep.fit_residuals) < 1e-10


def test_gamma_shift_relation_two_steps(real_mode):
    rep = em.omega_shift_check(real_mode, shifts=2)
    assert rep.corrected < 1e-12


def test_sigma_and_iota_map_modes_to_modes(real_mode):
    assert em.symmetry_check(real_mode, "sigma") < 1e-12
    assert em.symmetry_check(real_mode, "iota") < 1e-12
    with pytest.raises(ValueError):
        em.symmetry_check(real_mode, "tau")


def test_shifted_mode_is_mode_at_rotated_phase(real_mode):
    shifted = em.reindex(real_mode.xi, 1)
    assert em.eigen_residual(real_mode.beta, em.LAM ** 2 * real_mode.G, real_mode.chi, shifted) < 1e-12


def test_align_phase_normalizes(real_mode):
    xi = em.align_phase(LatticeWindow(real_mode.xi.n_min, 3j * real_mode.xi.values))
    assert abs(xi.norm() - 1) < 1e-14
    assert np.allclose(xi.values, real_mode.xi.values, atol=1e-14)


def test_mode_json(real_mode):
    d = json.loads(real_mode.to_json())
    assert d["beta"] == 2.0 and d["n_min"] == real_mode.xi.n_min


def test_decay_exponent_flags_components_below_floor():
    n = np.arange(-40, 41)
    rep = em.decay_exponent(LatticeWindow(-40, 0.25 ** np.abs(n)))
    assert rep["shrunk"]
    assert abs(rep["rate"] - 0.25) < 1e-12
