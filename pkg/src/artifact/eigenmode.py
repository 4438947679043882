"""Exponentially decaying eigenvectors of h(G) and the Gamma functional.

A mode is a phase x on the unit circle and a vector xi with
h(x delta) xi = chi xi, decaying at least like (beta delta)^{-|n|}.  Shifting
the vector by one site moves the phase by lam^2, so the search works on the
sheet of modes centred at n = 0.

Gamma is the scalar with  k D_G xi = Gamma D_{1/G} xi,  G = x delta.  For
the shifted mode u xi (phase lam^2 x) the ratio of Gamma values measured here
is lam^2 G^2 = G(z) G(omega z); ``omega_shift_check`` reports this alongside
the plain G^2 form.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import numlin
from .lattice_rep import (LatticeWindow, LaurentSeries, apply_h, apply_k, common, d_factors,
                          default_reducer, k_series, reindex)
from .rotation_algebra import GOLDEN
from .spectral import SpectralMeasure, log_potential, truncation_matrix

LAM = np.exp(1j * np.pi * GOLDEN)


@dataclass
class EigenMode:
    x: complex
    chi: complex
    xi: LatticeWindow
    beta: float
    delta: float
    decay_rate: float = float("nan")
    gamma_value: complex = complex("nan")
    residual: float = float("nan")
    info: dict = field(default_factory=dict)

    @property
    def G(self) -> complex:
        return self.x * self.delta

    def to_json(self) -> str:
        return json.dumps({"x": [self.x.real, self.x.imag], "chi": [self.chi.real, self.chi.imag],
                           "beta": self.beta, "delta": self.delta, "decay_rate": self.decay_rate,
                           "gamma": [self.gamma_value.real, self.gamma_value.imag],
                           "residual": self.residual, "n_min": self.xi.n_min}, sort_keys=True)


def eigen_residual(beta: float, G: complex, chi: complex, xi: LatticeWindow) -> float:
    """||h(G) xi - chi xi||_2 with xi extended by zeros, relative to ||xi||."""
    ext = xi.pad(1)
    hx = apply_h(1.0, G, 1.0, beta, ext)
    return float(np.linalg.norm(hx.values - chi * xi.values) / xi.norm())


def _centred_spectrum(beta: float, delta: float, x: complex, N: int, collar: int = 8):
    M = truncation_matrix(1.0, delta, x, beta, N).entries
    w, V = np.linalg.eig(M)
    A = np.abs(V) ** 2
    c = (np.arange(-N, N + 1)[:, None] * A).sum(0) / A.sum(0)
    keep = np.abs(c) < N - collar
    return w[keep], c[keep]


def _phase_distance(beta, delta, theta, target, N, max_center=1.5):
    w, c = _centred_spectrum(beta, delta, np.exp(1j * theta), N)
    near = np.abs(c) <= max_center
    if not np.any(near):
        return np.inf, None
    d = np.abs(w[near] - target)
    k = int(np.argmin(d))
    return float(d[k]), complex(w[near][k])


def _golden_section(f, a: float, b: float, tol: float, max_iter: int = 200):
    g = (np.sqrt(5) - 1) / 2
    c, d = b - g * (b - a), a + g * (b - a)
    fc, fd = f(c), f(d)
    history = []
    for _ in range(max_iter):
        if abs(b - a) < tol:
            break
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - g * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + g * (b - a)
            fd = f(d)
        history.append(min(fc, fd))
    t = c if fc < fd else d
    return t, min(fc, fd), history


def centre_of(xi: LatticeWindow) -> float:
    wgt = np.abs(xi.values) ** 2
    return float((xi.indices * wgt).sum() / wgt.sum())


def align_phase(xi: LatticeWindow, core: int = 3) -> LatticeWindow:
    """Unit norm, largest central component real positive."""
    v = xi.values / np.linalg.norm(xi.values)
    idx = xi.indices
    central = np.abs(idx) <= core
    k = np.nonzero(central)[0][np.argmax(np.abs(v[central]))]
    return LatticeWindow(xi.n_min, v * abs(v[k]) / v[k])


def mode_at_phase(beta: float, delta: float, x: complex, chi_guess: complex, N: int = 80) -> EigenMode:
    """Inverse iteration on the truncation of h(x delta) at the given shift."""
    M = truncation_matrix(1.0, delta, x, beta, N)
    mu, v, info = numlin.inverse_iteration(M, chi_guess, tol=1e-14, max_iter=80)
    xi = align_phase(LatticeWindow(-N, v))
    mode = EigenMode(x, complex(mu), xi, beta, delta, info={"inverse_iteration": info})
    mode.residual = eigen_residual(beta, mode.G, mode.chi, xi)
    return mode


def find_phase_eigenpair(beta: float, delta: float, chi_target: complex, N: int = 100,
                         coarse_grid: int = 48, refine_tol: float = 1e-12, N_search: int = 40,
                         mu: SpectralMeasure | None = None, level_tol: float = 0.05) -> EigenMode:
    """Phase x and eigenvector of h(x delta) with eigenvalue chi_target.

    Coarse sweep: for each grid phase every interior eigenvalue is folded to
    the centred sheet (a mode centred at m at phase x is the u^m-shift of a
    centred mode at phase lam^{-2m} x).  The folded sample nearest the target
    seeds a golden-section refinement of the phase angle; the final vector
    comes from inverse iteration on a larger truncation.
    """
    if delta <= 1:
        raise ValueError("find_phase_eigenpair needs delta > 1")
    if mu is not None:
        dev = abs(float(log_potential(mu, chi_target)) - np.log(beta * delta))
        if dev > level_tol:
            raise ValueError(f"target is off the level curve by {dev:.3g}")
    samples = []
    for th in 2 * np.pi * np.arange(coarse_grid) / coarse_grid:
        w, c = _centred_spectrum(beta, delta, np.exp(1j * th), N_search)
        m = np.rint(c).astype(int)
        ok = np.abs(m) < N_search - 12
        folded = np.mod(th - 2 * np.pi * GOLDEN * m[ok], 2 * np.pi)
        samples += list(zip(np.abs(w[ok] - chi_target), folded, m[ok]))
    samples.sort(key=lambda s: s[0])
    minima = [(float(d), float(t)) for d, t, _ in samples[:8]]
    theta0 = samples[0][1]
    # fold spacing bounds the bracket; the coarse grid step is an upper bound
    half = np.pi / coarse_grid
    best = None
    for width in (half, 2 * half, 4 * half):
        f = lambda t: _phase_distance(beta, delta, t, chi_target, N_search)[0]
        t, fval, hist = _golden_section(f, theta0 - width, theta0 + width, refine_tol)
        if best is None or fval < best[1]:
            best = (t, fval, hist)
        if fval < 1e-8:
            break
    theta, dist, hist = best
    x = np.exp(1j * theta)
    _, chi_guess = _phase_distance(beta, delta, theta, chi_target, N_search)
    mode = mode_at_phase(beta, delta, x, chi_guess if chi_guess is not None else chi_target, N)
    shift = int(np.rint(centre_of(mode.xi)))
    if shift:
        x = x * LAM ** (-2 * shift)
        mode = mode_at_phase(beta, delta, x, mode.chi, N)
    mode.info.update({"target": chi_target, "target_distance": abs(mode.chi - chi_target),
                      "coarse_minima": minima, "refine_history": hist})
    mode.decay_rate = decay_exponent(mode.xi)["rate"]
    return mode


def decay_exponent(xi: LatticeWindow, fit_window: tuple[int, int] = (10, 26),
                   floor: float = 1e-13) -> dict:
    """Geometric decay rate exp(slope of log|xi_n| against |n|), per side and worst."""
    a, b = fit_window
    vals = np.abs(xi.values)
    top = vals.max()
    n = xi.indices
    out = {"shrunk": False}
    rates = []
    for side, sgn in (("right", 1), ("left", -1)):
        sel = (sgn * n >= a) & (sgn * n <= b)
        good = sel & (vals > floor * top)
        if good.sum() < sel.sum():
            out["shrunk"] = True
        if good.sum() < 3:
            raise ValueError(f"too few components above the floor on the {side} side")
        slope, _ = np.polyfit(np.abs(n[good]), np.log(vals[good]), 1)
        out[side] = float(np.exp(slope))
        rates.append(out[side])
    out["rate"] = max(rates)
    return out


def _clean(xi: LatticeWindow, rel: float = 1e-15) -> LatticeWindow:
    v = xi.values.copy()
    v[np.abs(v) < rel * np.abs(v).max()] = 0
    return LatticeWindow(xi.n_min, v)


def gamma_value(mode: EigenMode, G: complex | None = None, beta: float | None = None,
                N_k: int = 60, M: int = 2048, E: LaurentSeries | None = None,
                xi: LatticeWindow | None = None) -> tuple[complex, float]:
    """Least-squares Gamma with k D_G xi ~ Gamma D_{1/G} xi on the interior.

    Returns (Gamma, relative residual).  Components below 1e-15 of the peak
    are zeroed first so that D_G does not amplify roundoff in the tails.
    """
    G = mode.G if G is None else G
    beta = mode.beta if beta is None else beta
    xi = _clean(mode.xi if xi is None else xi)
    if E is None:
        E = k_series(1.0, beta, GOLDEN, N_k, M)
    scaled = LatticeWindow(xi.n_min, xi.values * d_factors(G, xi.indices))
    lhs = apply_k(1.0, beta, scaled, E=E)
    rhs = LatticeWindow(xi.n_min, xi.values * d_factors(1 / G, xi.indices))
    a, b, _ = common(lhs, rhs)
    c = np.vdot(b, a) / np.vdot(b, b)
    res = float(np.linalg.norm(a - c * b) / np.linalg.norm(a))
    return complex(c), res


@dataclass
class OmegaReport:
    gamma: complex
    gamma_shifted: complex
    ratio: complex
    G: complex
    literal: float      # |Gamma' - G^2 Gamma| / |G^2 Gamma|
    corrected: float    # |Gamma' - lam^2 G^2 Gamma| / |lam^2 G^2 Gamma|
    modulus: float      # | |Gamma'|/|Gamma| - |G|^2 | / |G|^2
    fit_residuals: tuple


def omega_shift_check(mode: EigenMode, G: complex | None = None, beta: float | None = None,
                      shifts: int = 1, **kw) -> OmegaReport:
    """Compare Gamma of u^s xi (phase lam^{2s} G) with Gamma of xi."""
    G = mode.G if G is None else G
    g0, r0 = gamma_value(mode, G, beta, **kw)
    Gs = LAM ** (2 * shifts) * G
    xs = reindex(mode.xi, shifts)
    g1, r1 = gamma_value(mode, Gs, beta, xi=xs, **kw)
    ratio = g1 / g0
    lit = G ** (2 * shifts)
    # iterating Gamma(omega z) = lam^2 G(z)^2 Gamma(z) with G(omega z) = lam^2 G(z)
    cor = np.prod([LAM ** 2 * (LAM ** (2 * j) * G) ** 2 for j in range(shifts)])
    return OmegaReport(g0, g1, ratio, G,
                       float(abs(ratio - lit) / abs(lit)), float(abs(ratio - cor) / abs(cor)),
                       float(abs(abs(ratio) - abs(G) ** (2 * shifts)) / abs(G) ** (2 * shifts)),
                       (r0, r1))


def sigma(mode: EigenMode) -> EigenMode:
    """(x, chi, xi) -> (conj x, conj chi, J conj xi) with J the reflection n -> -n."""
    v = np.conj(mode.xi.values[::-1])
    xi = LatticeWindow(-mode.xi.n_max, v)
    return EigenMode(np.conj(mode.x), np.conj(mode.chi), xi, mode.beta, mode.delta,
                     mode.decay_rate, complex("nan"), mode.residual)


def iota(mode: EigenMode) -> EigenMode:
    """(G, chi, xi) -> (-G, -chi, D_{-1} xi)."""
    xi = LatticeWindow(mode.xi.n_min, mode.xi.values * (-1.0) ** mode.xi.indices)
    return EigenMode(-mode.x, -mode.chi, xi, mode.beta, mode.delta, mode.decay_rate,
                     complex("nan"), mode.residual)


def symmetry_check(mode: EigenMode, kind: str) -> float:
    """Eigen-residual of the transformed mode."""
    if kind == "sigma":
        m = sigma(mode)
    elif kind == "iota":
        m = iota(mode)
    else:
        raise ValueError(f"unknown symmetry {kind!r}")
    return eigen_residual(m.beta, m.G, m.chi, m.xi)


def sum_squares(xi: LatticeWindow) -> complex:
    v = align_phase(xi).values
    return complex(np.sum(v * v))


def sum_squares_scan(beta: float, points, mu: SpectralMeasure, N: int = 80, **kw) -> dict:
    """Sum of xi_n^2 for modes at real points z inside one spectral gap.

    Each z sits on the level curve of delta(z) = exp(Phi(z)) / beta.
    """
    pts = np.asarray(points, dtype=float)
    vals, modes = [], []
    for z in pts:
        delta = float(np.exp(log_potential(mu, z)) / beta)
        if delta <= 1:
            raise ValueError(f"scan point {z} lies on the spectrum")
        m = find_phase_eigenpair(beta, delta, complex(z), N=N, **kw)
        modes.append(m)
        vals.append(sum_squares(m.xi))
    vals = np.array(vals)
    k = int(np.argmin(np.abs(vals)))
    return {"z": pts, "sum_squares": vals, "argmin": float(pts[k]), "min": float(abs(vals[k])),
            "modes": modes,
            "mode_gaps": [float(abs(m.chi - z)) for m, z in zip(modes, pts)]}
