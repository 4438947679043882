"""Banded operators H(z) built from a decaying mode, and the |delta| = 1 variant.

With k = w* e^{ig(gamma u)} w* and k D_G xi = Gamma D_{1/G} xi, put
t_n = lam^{-n^2} G^n Gamma^{-1/2}.  Writing e^{ig} through tau = tan(g/2),

    e^{ig} = (1 + i tau) / (1 - i tau),

the vector eta_n = (t_n + 1/t_n) xi_n solves

    sum_j a_j eta_{n-j} + i (1 - t_n^2) / (1 + t_n^2) eta_n = 0,

where a_j are the Fourier coefficients of tau(gamma u).  The diagonal tends
to -i as n -> +inf and to +i as n -> -inf when |G| > 1.

For a bounded mode of the self-adjoint h(x), |x| = 1, with D_x k D_x xi = c xi,
the same manipulation gives a real diagonal tan(psi_n) with
psi_n = pi (alpha n^2 + 2 theta n + nu), e^{-2 pi i theta} = x, e^{2 pi i nu} = c,
band -a, and eta_n = cos(psi_n) xi_n.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import numlin
from .eigenmode import EigenMode, _clean
from .lattice_rep import (LatticeWindow, LaurentSeries, circle_coefficients, default_reducer,
                          g_series, k_series)
from .rotation_algebra import GOLDEN

SATURATE = 1e6


class GuardError(ValueError):
    """A runtime guard (pole of tan, 1 + t_n^2 = 0, Omega_0) was hit."""


# --- band -----------------------------------------------------------------------

def tan_symbol(beta: float, gamma: float = 1.0, alpha: float = GOLDEN, M: int = 2048,
               N: int = 60, variant: str = "half") -> tuple[np.ndarray, np.ndarray, float]:
    """Samples of tan(g/2) ("half") or tan g ("full") on gamma * circle.

    Returns (circle points, values, margin) where margin is min |cos| of the
    argument, i.e. the distance-like measure from the poles of tan.
    """
    if variant not in ("half", "full"):
        raise ValueError(f"unknown variant {variant!r}")
    g = g_series(beta, gamma, alpha, N)
    z = np.exp(2j * np.pi * np.arange(M) / M)
    arg = g.on_circle(z) * (0.5 if variant == "half" else 1.0)
    margin = float(np.abs(np.cos(arg)).min())
    return z, np.tan(arg), margin


def tan_g_coefficients(beta: float, gamma: float = 1.0, alpha: float = GOLDEN, M: int = 2048,
                       N: int = 60, variant: str = "half", margin: float = 1e-3,
                       floor: float = 1e-16) -> LaurentSeries:
    """Fourier coefficients a_j of tan(g(gamma u)/2) (or tan g with variant="full")."""
    _, vals, m = tan_symbol(beta, gamma, alpha, M, N, variant)
    if m < margin:
        raise GuardError(f"tan argument within {m:.2e} of a pole; reject gamma = {gamma}")
    return circle_coefficients(vals, M // 2 - 1).pruned(floor)


def essential_spectrum_curve(a: LaurentSeries, samples: int = 512) -> tuple[np.ndarray, np.ndarray]:
    """The closed curves a(T) + i and a(T) - i."""
    z = np.exp(2j * np.pi * np.arange(samples + 1) / samples)
    s = a.on_circle(z)
    return s + 1j, s - 1j


def curve_distance(points: np.ndarray, curves, ) -> np.ndarray:
    """Distance of each point to the union of polylines (vertex distance)."""
    verts = np.concatenate([np.asarray(c) for c in curves])
    pts = np.asarray(points).ravel()
    out = np.empty(len(pts))
    for i in range(0, len(pts), 256):
        blk = pts[i:i + 256]
        out[i:i + 256] = np.abs(blk[:, None] - verts[None, :]).min(axis=1)
    return out


# --- assembly -------------------------------------------------------------------

def t_squared(Gamma: complex, G: complex, n: np.ndarray, alpha: float = GOLDEN,
              convention: str = "derived") -> tuple[np.ndarray, np.ndarray]:
    """(log|t_n^2|, phase of t_n^2).

    "derived": t_n^2 = lam^{-2 n^2} G^{2n} / Gamma.
    "printed": t_n^2 = G^{2n} Gamma.
    """
    n = np.asarray(n)
    if convention == "derived":
        logmod = 2 * n * np.log(abs(G)) - np.log(abs(Gamma))
        ph = (default_reducer(alpha).lam_power(-2 * n * n)
              * np.exp(2j * n * np.angle(G)) * np.exp(-1j * np.angle(Gamma)))
    elif convention == "printed":
        logmod = 2 * n * np.log(abs(G)) + np.log(abs(Gamma))
        ph = np.exp(2j * n * np.angle(G)) * np.exp(1j * np.angle(Gamma))
    else:
        raise ValueError(f"unknown convention {convention!r}")
    return logmod, ph


def diagonal_values(Gamma: complex, G: complex, n: np.ndarray, alpha: float = GOLDEN,
                    convention: str = "derived", guard: float = 1e-10):
    """i (1 - s_n) / (1 + s_n) with s_n = t_n^2, saturated to -i / +i outside 1e-6 < |s_n| < 1e6."""
    logmod, ph = t_squared(Gamma, G, n, alpha, convention)
    out = np.empty(len(n), dtype=complex)
    hi = logmod > np.log(SATURATE)
    lo = logmod < -np.log(SATURATE)
    mid = ~(hi | lo)
    out[hi] = -1j
    out[lo] = 1j
    s = np.exp(logmod[mid]) * ph[mid]
    if np.any(np.abs(1 + s) < guard):
        raise GuardError("1 + t_n^2 vanishes on the window (z in the exceptional set)")
    out[mid] = 1j * (1 - s) / (1 + s)
    return out, int(mid.sum())


@dataclass
class FredholmAssembly:
    n_min: int
    n_max: int
    a: LaurentSeries
    diagonal: np.ndarray
    core: int
    matrix: numlin.ComplexMatrix
    meta: dict = field(default_factory=dict)

    @property
    def indices(self) -> np.ndarray:
        return np.arange(self.n_min, self.n_max + 1)


def band_matrix(a: LaurentSeries, size: int) -> np.ndarray:
    """T[n, m] = a_{n-m}: (T eta)_n = sum_j a_j eta_{n-j}."""
    T = np.zeros((size, size), dtype=complex)
    for j in range(-min(a.J, size - 1), min(a.J, size - 1) + 1):
        T += np.diag(np.full(size - abs(j), a[j]), -j)
    return T


def assemble_H(Gamma: complex, G: complex, a: LaurentSeries, window=(-60, 60),
               alpha: float = GOLDEN, convention: str = "derived") -> FredholmAssembly:
    n_min, n_max = window
    if abs(G) <= 1:
        raise ValueError("assemble_H needs |G| > 1")
    n = np.arange(n_min, n_max + 1)
    diag, core = diagonal_values(Gamma, G, n, alpha, convention)
    M = band_matrix(a, len(n)) + np.diag(diag)
    J = min(a.J, len(n) - 1)
    return FredholmAssembly(n_min, n_max, a, diag, core, numlin.ComplexMatrix(M, (J, J)),
                            {"Gamma": complex(Gamma), "G": complex(G), "convention": convention})


# --- kernel ---------------------------------------------------------------------

@dataclass
class KernelReport:
    dim: int
    smallest: list
    gap: float
    clean: bool

    def to_json(self) -> str:
        return json.dumps({"dim": self.dim, "smallest": self.smallest, "gap": self.gap,
                           "clean": self.clean}, sort_keys=True)


def kernel_dimension(H, gap_ratio: float = 1e3, rel: float = 1e-8, solver: str = "own") -> KernelReport:
    """Count singular values below sigma_max * rel; report the separation factor.

    ``gap`` is sigma_{dim} / sigma_{dim-1} (next one up over the largest small
    one), or sigma_min / (rel sigma_max) when dim = 0.
    """
    A = H.matrix.entries if isinstance(H, FredholmAssembly) else (
        H.entries if isinstance(H, numlin.ComplexMatrix) else np.asarray(H))
    if solver == "own":
        s = np.sort(numlin.singular_values(numlin.ComplexMatrix(A)))
    else:
        s = np.sort(np.linalg.svd(A, compute_uv=False))
    smax = s[-1]
    dim = int(np.sum(s < rel * smax))
    if dim == 0:
        gap = float(s[0] / (rel * smax))
    elif dim == len(s):
        gap = 1.0
    else:
        gap = float(s[dim] / max(s[dim - 1], 1e-300))
    return KernelReport(dim, [float(v) for v in s[:max(dim + 3, 4)]], gap, gap >= gap_ratio)


def t_values(Gamma: complex, G: complex, n: np.ndarray, alpha: float = GOLDEN) -> np.ndarray:
    """t_n = lam^{-n^2} G^n Gamma^{-1/2}, principal root at n = 0.

    Successive ratios t_{n+1}/t_n = lam^{-(2n+1)} G fix the branch continuously in n.
    """
    n = np.asarray(n)
    red = default_reducer(alpha)
    return red.lam_power(-n * n) * G ** n.astype(float) / np.sqrt(complex(Gamma))


def kernel_vector(mode: EigenMode, Gamma: complex, G: complex | None = None,
                  flip_site: int | None = None, global_flip: bool = False,
                  alpha: float = GOLDEN) -> LatticeWindow:
    G = mode.G if G is None else G
    xi = _clean(mode.xi)
    nz = np.nonzero(xi.values)[0]
    xi = xi.restrict(xi.n_min + int(nz[0]), xi.n_min + int(nz[-1]))
    n = xi.indices
    t = t_values(Gamma, G, n, alpha)
    if global_flip:
        t = -t
    if flip_site is not None:
        t = t.copy()
        t[n == flip_site] *= -1
    if np.any(np.abs(t + 1 / t) < 1e-12 * np.abs(t).max()):
        raise GuardError("t_n + 1/t_n vanishes")
    # a sign flip of one t_n means the diagonal at that site sees -t_n; the
    # diagonal depends on t_n^2 only, so encode the flip through eta
    return LatticeWindow(xi.n_min, (t + 1 / t) * xi.values)


def kernel_transform_check(mode: EigenMode, Gamma: complex, G: complex | None = None,
                           a: LaurentSeries | None = None, flip_site: int | None = None,
                           global_flip: bool = False, convention: str = "derived") -> float:
    """||H eta|| / ||eta|| with eta_n = (t_n + 1/t_n) xi_n, zero-extended by the band width."""
    G = mode.G if G is None else G
    if a is None:
        a = tan_g_coefficients(mode.beta)
    eta = kernel_vector(mode, Gamma, G, flip_site, global_flip).pad(a.J)
    Hs = assemble_H(Gamma, G, a, (eta.n_min, eta.n_max), convention=convention)
    r = Hs.matrix.entries @ eta.values
    return float(np.linalg.norm(r) / np.linalg.norm(eta.values))


# --- |delta| = 1 ------------------------------------------------------------------

def psi_values(theta: float, nu: float, n: np.ndarray, alpha: float = GOLDEN) -> np.ndarray:
    """pi (alpha n^2 + 2 theta n + nu) reduced mod 2 pi (cos psi_n needs the full period)."""
    n = np.asarray(n)
    red = default_reducer(alpha)
    return np.pi * np.mod(red.mod2(n * n) + np.mod(2 * theta * n + nu, 2.0), 2.0)


def unbounded_H(theta: float, nu: float, gamma: float, beta: float, alpha: float = GOLDEN,
                window=(-40, 40), a: LaurentSeries | None = None, band_sign: int = 1,
                margin: float = 1e-6) -> numlin.ComplexMatrix:
    """(H eta)_n = sum_j s a_j eta_{n-j} + tan psi_n eta_n on a finite window, s = band_sign."""
    n = np.arange(window[0], window[1] + 1)
    psi = psi_values(theta, nu, n, alpha)
    c = np.cos(psi)
    if np.abs(c).min() < margin:
        raise GuardError(f"(theta, nu) within {np.abs(c).min():.1e} of the singular set")
    if a is None:
        a = tan_g_coefficients(beta, gamma, alpha)
    M = band_sign * band_matrix(a, len(n)) + np.diag(np.tan(psi))
    return numlin.ComplexMatrix(M)


def dxkdx_apply(x: complex, xi: LatticeWindow, E: LaurentSeries, alpha: float = GOLDEN) -> LatticeWindow:
    """D_x k D_x xi on the interior reachable from the window."""
    red = default_reducer(alpha)
    n = xi.indices
    ph = red.lam_power(-n * n) * x ** n.astype(float)
    y = LatticeWindow(xi.n_min, ph * xi.values)
    full = np.convolve(y.values, E.coeffs)
    full = full[2 * E.J:len(full) - 2 * E.J]
    out_min = xi.n_min + E.J
    m = np.arange(out_min, out_min + len(full))
    return LatticeWindow(out_min, red.lam_power(-m * m) * x ** m.astype(float) * full)


@dataclass
class UnboundedReport:
    theta: float
    nu: float
    c: complex
    c_fit_residual: float
    residual: float
    cos_margin: float


def bounded_mode(beta: float, x: complex, N: int = 80, target: float = 0.0,
                 alpha: float = GOLDEN) -> LatticeWindow:
    """The eigenvector of the truncated self-adjoint h(x) nearest ``target`` among
    those centred well inside the window, made real."""
    from .spectral import truncation_matrix
    H = truncation_matrix(1.0, 1.0, x, beta, N, alpha=alpha).entries
    w, V = np.linalg.eigh(0.5 * (H + H.conj().T))
    n = np.arange(-N, N + 1)
    cen = (np.abs(V) ** 2 * n[:, None]).sum(axis=0)
    ok = np.abs(cen) < N / 4
    i = np.argmin(np.where(ok, np.abs(w - target), np.inf))
    v = V[:, i]
    v = v * np.exp(-1j * np.angle(v[np.argmax(np.abs(v))]))
    return LatticeWindow(-N, v.real.astype(complex))


def unbounded_transform_check(beta: float, x: complex, xi: LatticeWindow, gamma: float = 1.0,
                              alpha: float = GOLDEN, floor: float = 1e-14,
                              convention: str = "derived") -> UnboundedReport:
    """Fit c in D_x k D_x xi = c xi, then evaluate ||H(theta, nu) eta|| / ||eta||.

    "derived": e^{-2 pi i theta} = x and band -a; "printed": e^{2 pi i theta} = x and band +a.
    """
    if convention not in ("derived", "printed"):
        raise ValueError(f"unknown convention {convention!r}")
    sgn = -1 if convention == "derived" else 1
    E = k_series(gamma, beta, alpha)
    kx = dxkdx_apply(x, xi, E, alpha)
    base = xi.restrict(kx.n_min, kx.n_max).values
    c = np.vdot(base, kx.values) / np.vdot(base, base)
    cres = float(np.linalg.norm(kx.values - c * base) / np.linalg.norm(kx.values))
    theta = sgn * np.angle(x) / (2 * np.pi)
    nu = np.angle(c) / (2 * np.pi)
    v = xi.values.copy()
    v[np.abs(v) < floor * np.abs(v).max()] = 0
    nz = np.nonzero(v)[0]
    core = LatticeWindow(xi.n_min, v).restrict(xi.n_min + int(nz[0]), xi.n_min + int(nz[-1]))
    a = tan_g_coefficients(beta, gamma, alpha)
    ext = core.pad(a.J)
    n = ext.indices
    psi = psi_values(theta, nu, n, alpha)
    eta = np.cos(psi) * ext.values
    H = unbounded_H(theta, nu, gamma, beta, alpha, (ext.n_min, ext.n_max), a, band_sign=sgn,
                    margin=0.0).entries
    res = float(np.linalg.norm(H @ eta) / np.linalg.norm(eta))
    return UnboundedReport(float(theta), float(nu), complex(c), cres, res, float(np.abs(np.cos(psi)).min()))


@dataclass
class UnitarityReport:
    N: int
    max_modulus_defect: float
    coverage: float
    kept: int
    eigenvalues: np.ndarray


def dxkdx_matrix(gamma: float, beta: float, x: complex, N: int, center: int = 0,
                 alpha: float = GOLDEN) -> np.ndarray:
    """Central compression of D_x k_gamma D_x on n = center - N//2 .. center + N - 1 - N//2."""
    E = k_series(gamma, beta, alpha)
    n = np.arange(center - N // 2, center - N // 2 + N)
    ph = default_reducer(alpha).lam_power(-n * n) * x ** n.astype(float)
    T = band_matrix(E, N)
    return ph[:, None] * T * ph[None, :]


def k_unitarity_check(gamma: float, beta: float, x: complex, N: int, collar: int | None = None,
                      bins: int = 64, alpha: float = GOLDEN) -> UnitarityReport:
    """Eigenvalues of the compression, keeping eigenvectors centred away from the edges."""
    if not (1 / beta <= gamma <= beta):
        raise ValueError("gamma outside [1/beta, beta]")
    K = dxkdx_matrix(gamma, beta, x, N, alpha=alpha)
    w, V = np.linalg.eig(K)
    collar = max(N // 8, 4) if collar is None else collar
    pos = np.arange(N)
    p = np.abs(V) ** 2
    cen = (p * pos[:, None]).sum(axis=0) / p.sum(axis=0)
    keep = (cen > collar) & (cen < N - 1 - collar)
    wk = w[keep]
    defect = float(np.abs(np.abs(wk) - 1).max()) if wk.size else float("inf")
    hit = np.unique(np.floor((np.angle(wk) + np.pi) / (2 * np.pi) * bins).astype(int) % bins)
    return UnitarityReport(N, defect, len(hit) / bins, int(keep.sum()), w)
