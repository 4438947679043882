"""The two-index difference system and the resolvent coefficients.

The system for a double sequence X_pq, with A_k = pi alpha k + theta:

    cos A_q (X_{p-1,q} + X_{p+1,q}) + beta cos A_p (X_{p,q-1} + X_{p,q+1}) = z X_pq
    sin A_q (X_{p-1,q} - X_{p+1,q}) - beta sin A_p (X_{p,q-1} - X_{p,q+1}) = 0

Diagonal data (X_{p+1,p+1}, X_{p+1,p}, X_pp) advance by F_p = E_p D_p C_p.
Two corrections against the printed matrices are built in (both derived from
the system itself and checked in the tests):

* E_p[0][0] = +chi sin A_{p+1} / (beta sin(pi alpha (2p+3) + 2 theta));
* the Wronskian constant is sin(pi alpha + 2 theta) / sin(pi alpha (2p+3) + 2 theta).

``variant="printed"`` reproduces the published forms.

Resolvent coefficients c_pq(z) of (h - z)^{-1} = sum c_pq w_pq come from a
phase Fourier transform of truncated resolvent columns; the polynomials
d_pq(z) come from the downward recursion seeded by d_pq = 0 for q >= -|p|
and d_{p,-p-1} = (-1)^p beta^{-p-1}.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from . import numlin
from .rotation_algebra import GOLDEN
from .spectral import truncation_matrix

LAM = np.exp(1j * np.pi * GOLDEN)


class GuardError(ValueError):
    """A denominator fell below the guard threshold."""


@dataclass
class TransferState:
    values: np.ndarray  # (X_{p+1,p+1}, X_{p+1,p}, X_pp)
    p: int

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.shape != (3,) or not np.all(np.isfinite(self.values)):
            raise ValueError("TransferState needs three finite components")


def _guarded(value: float, name: str, guard: float) -> float:
    if abs(value) < guard:
        raise GuardError(f"{name} = {value:.3e} below guard {guard:g}")
    return value


def transfer_matrices(alpha: float, theta: float, beta: float, chi: complex, p: int,
                      variant: str = "corrected", guard: float = 1e-8):
    """(C_p, D_p, E_p, F_p)."""
    pa = np.pi * alpha
    s = _guarded(np.sin(pa), "sin(pi alpha)", guard)
    cp = _guarded(np.cos(pa * (p + 1) + theta), "cos(pi alpha (p+1) + theta)", guard)
    den = _guarded(np.sin(pa * (2 * p + 3) + 2 * theta), "sin(pi alpha (2p+3) + 2 theta)", guard)
    a1 = pa * (p + 1) + theta
    C = np.array([[-beta * np.sin(2 * a1) / s, chi * np.sin(a1) / s,
                   -np.sin(pa * (2 * p + 1) + 2 * theta) / s],
                  [1, 0, 0], [0, 1, 0]], dtype=complex)
    D = np.array([[0, chi / (2 * cp), -beta], [0, 1, 0], [1, 0, 0]], dtype=complex)
    sign = 1.0 if variant == "corrected" else -1.0
    if variant not in ("corrected", "printed"):
        raise ValueError(f"unknown variant {variant!r}")
    E = np.array([[sign * chi * np.sin(a1) / (beta * den), -np.sin(2 * a1) / (beta * den), s / den],
                  [1, 0, 0], [0, 1, 0]], dtype=complex)
    return C, D, E, E @ D @ C


def advance(state: TransferState, alpha: float, theta: float, beta: float, chi: complex,
            steps: int, variant: str = "corrected", guard: float = 1e-8):
    """Iterate F_p; returns (states, flag) with flag set if a guard stopped the orbit."""
    out = [state]
    cur = state
    for _ in range(steps):
        try:
            F = transfer_matrices(alpha, theta, beta, chi, cur.p, variant, guard)[3]
        except GuardError as exc:
            return out, str(exc)
        cur = TransferState(F @ cur.values, cur.p + 1)
        out.append(cur)
    return out, None


def complete_state(X00: complex, X11: complex, theta: float, chi: complex) -> TransferState:
    """(X11, X10, X00) with X10 from the p = -1 row of D and X_{0,-1} = 0."""
    return TransferState([X11, chi * X00 / (2 * np.cos(theta)), X00], 0)


def wronskian_constant(alpha: float, theta: float, beta: float, p: int,
                       variant: str = "corrected") -> float:
    pa = np.pi * alpha
    den = np.sin(pa * (2 * p + 3) + 2 * theta)
    if variant == "corrected":
        return np.sin(pa + 2 * theta) / den
    return -beta * np.sin(pa + theta) / den


def wronskian_residual(X0, Y0, alpha: float, theta: float, beta: float, chi: complex, P: int,
                       variant: str = "corrected", guard: float = 1e-8) -> float:
    """max_p |LHS - RHS| / (|X_{p+1,p+1} Y_{p+2,p+2}| + |X_{p+2,p+2} Y_{p+1,p+1}|).

    LHS = X_{p+1,p+1} Y_{p+2,p+2} - X_{p+2,p+2} Y_{p+1,p+1} and
    RHS = K_p (X00 Y11 - X11 Y00); the normalization makes the residual a
    relative roundoff measure even though the states grow.
    """
    xs, fx = advance(complete_state(*X0, theta, chi), alpha, theta, beta, chi, P, variant, guard)
    ys, fy = advance(complete_state(*Y0, theta, chi), alpha, theta, beta, chi, P, variant, guard)
    if fx or fy:
        raise GuardError(fx or fy)
    w0 = X0[0] * Y0[1] - X0[1] * Y0[0]
    worst = 0.0
    for p in range(P):
        x1, x2 = xs[p].values[0], xs[p + 1].values[0]
        y1, y2 = ys[p].values[0], ys[p + 1].values[0]
        lhs = x1 * y2 - x2 * y1
        rhs = wronskian_constant(alpha, theta, beta, p, variant) * w0
        scale = abs(x1 * y2) + abs(x2 * y1)
        if scale == 0:
            continue
        worst = max(worst, abs(lhs - rhs) / scale)
    return float(worst)


def system_rows(R: int, theta: float, beta: float, z: complex, alpha: float = GOLDEN):
    """Stacked equations of the system on the box |p|, |q| <= R (interior sites)."""
    pa = np.pi * alpha
    idx = {}
    for p in range(-R, R + 1):
        for q in range(-R, R + 1):
            idx[(p, q)] = len(idx)
    rows = []
    for p in range(-R + 1, R):
        for q in range(-R + 1, R):
            aq, ap = pa * q + theta, pa * p + theta
            r1 = np.zeros(len(idx), complex)
            r2 = np.zeros(len(idx), complex)
            r1[idx[p - 1, q]] += np.cos(aq)
            r1[idx[p + 1, q]] += np.cos(aq)
            r1[idx[p, q - 1]] += beta * np.cos(ap)
            r1[idx[p, q + 1]] += beta * np.cos(ap)
            r1[idx[p, q]] -= z
            r2[idx[p - 1, q]] += np.sin(aq)
            r2[idx[p + 1, q]] -= np.sin(aq)
            r2[idx[p, q - 1]] -= beta * np.sin(ap)
            r2[idx[p, q + 1]] += beta * np.sin(ap)
            rows += [r1, r2]
    return idx, np.array(rows)


def system_residual(X, theta: float, beta: float, z: complex, sites, alpha: float = GOLDEN) -> float:
    """max over sites of both equation residuals for a callable or dict X."""
    get = X if callable(X) else (lambda p, q: X.get((p, q), 0j))
    pa = np.pi * alpha
    worst = 0.0
    for p, q in sites:
        aq, ap = pa * q + theta, pa * p + theta
        e1 = (np.cos(aq) * (get(p - 1, q) + get(p + 1, q))
              + beta * np.cos(ap) * (get(p, q - 1) + get(p, q + 1)) - z * get(p, q))
        e2 = (np.sin(aq) * (get(p - 1, q) - get(p + 1, q))
              - beta * np.sin(ap) * (get(p, q - 1) - get(p, q + 1)))
        worst = max(worst, abs(e1), abs(e2))
    return float(worst)


def solve_diamond(R: int, theta: float, beta: float, z: complex, rng: np.random.Generator,
                  alpha: float = GOLDEN) -> tuple[dict, float]:
    """A random solution of the system on a finite box, from the null space of
    the stacked equations; returns (X, least-squares residual)."""
    idx, A = system_rows(R, theta, beta, z, alpha)
    _, s, vh = np.linalg.svd(A)
    null = np.sum(s < 1e-10 * s[0]) + (A.shape[1] - len(s))
    basis = vh[-null:].conj().T
    coef = rng.standard_normal(null) + 1j * rng.standard_normal(null)
    x = basis @ coef
    res = float(np.linalg.norm(A @ x) / np.linalg.norm(x))
    return {k: x[i] for k, i in idx.items()}, res


# --- resolvent coefficients --------------------------------------------------

@dataclass
class ResolventTable:
    z: complex
    p_range: tuple[int, int]
    q_range: tuple[int, int]
    values: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict)
    asymmetry: float = 0.0
    meta: dict = field(default_factory=dict)

    def __getitem__(self, pq) -> complex:
        return self.values[tuple(pq)]

    def to_csv(self) -> str:
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["p", "q", "re", "im"])
        for (p, q), c in sorted(self.values.items()):
            wr.writerow([p, q, repr(float(c.real)), repr(float(c.imag))])
        return buf.getvalue()


def resolvent_coefficients(z: complex, beta: float, p_range=(-5, 5), q_range=(-5, 5), N: int = 80,
                           phase_samples: int = 256, delta: float = 1.0,
                           cond_limit: float = 1e8, margin: float = 1e-2) -> ResolventTable:
    """c_pq(z) for (h(delta) - z)^{-1}, scaled by delta^{-q} when delta != 1.

    (R_x)_{p,0} = sum_q c_pq x^q lam^{-pq} for the phase-x truncation, so
    c_pq = lam^{pq} * mean_x x^{-q} (R_x)_{p,0}.
    """
    p0, p1 = p_range
    q0, q1 = q_range
    if N <= max(abs(p0), abs(p1)) + 10:
        raise ValueError("truncation too small for the requested p range")
    if phase_samples <= 2 * max(abs(q0), abs(q1)) + 1:
        raise ValueError("too few phase samples for the q range (aliasing)")
    xs = np.exp(2j * np.pi * np.arange(phase_samples) / phase_samples)
    e0 = np.zeros(2 * N + 1, complex)
    e0[N] = 1.0
    cols = []
    for x in xs:
        T = truncation_matrix(1.0, delta, x, beta, N).entries
        ev = np.linalg.eigvalsh(T) if delta == 1.0 else np.linalg.eigvals(T)
        gap = np.abs(ev - z).min()
        if gap < margin:
            raise numlin.NumlinError(f"z = {z} lies within {gap:.1e} of the truncated spectrum")
        M = T - z * np.eye(2 * N + 1)
        y = numlin.banded_solve(numlin.ComplexMatrix(M, (1, 1)), e0)
        if np.abs(y).max() > cond_limit:
            raise numlin.NumlinError(f"z = {z} too close to the spectrum (|y| = {np.abs(y).max():.2e})")
        cols.append(y)
    cols = np.array(cols)
    raw = {}
    for p in range(p0, p1 + 1):
        col = cols[:, N + p]
        for q in range(q0, q1 + 1):
            raw[(p, q)] = LAM ** (p * q) * np.mean(xs ** (-q) * col) / delta ** q
    vals, asym = {}, 0.0
    for (p, q), c in raw.items():
        partner = raw.get((-p, q))
        if partner is None:
            vals[(p, q)] = c
            continue
        asym = max(asym, abs(c - partner))
        vals[(p, q)] = 0.5 * (c + partner)
    return ResolventTable(z, (p0, p1), (q0, q1), vals, raw, float(asym),
                          {"N": N, "phase_samples": phase_samples, "delta": delta, "beta": beta})


def d_polynomials(beta: float, p_range=(-5, 5), q_range=(-5, 5), z: complex = 0.0,
                  alpha: float = GOLDEN) -> ResolventTable:
    """d_pq(z) by the downward recursion at theta = 0.

    X_{p,q-1} = [z X_pq - cos(pi alpha q)(X_{p-1,q} + X_{p+1,q})] / (beta cos(pi alpha p)) - X_{p,q+1}
    """
    p0, p1 = p_range
    q0, q1 = q_range
    depth = max(0, -q0) + 2
    P = max(abs(p0), abs(p1)) + depth + 2
    pa = np.pi * alpha
    d: dict = {}

    def get(p, q):
        if q >= -abs(p):
            return 0j
        return d.get((p, q), 0j)

    for p in range(-P, P + 1):
        d[(p, -abs(p) - 1)] = (-1) ** abs(p) * beta ** (-abs(p) - 1)
    for q in range(-1, q0 - 1, -1):
        for p in range(-P + 1, P):
            if q - 1 < -abs(p) - 1 and (p, q - 1) not in d:
                cp = np.cos(pa * p)
                if abs(cp) < 1e-12:
                    raise GuardError(f"cos(pi alpha {p}) vanishes")
                d[(p, q - 1)] = ((z * get(p, q) - np.cos(pa * q) * (get(p - 1, q) + get(p + 1, q)))
                                 / (beta * cp) - get(p, q + 1))
    vals = {(p, q): complex(get(p, q)) for p in range(p0, p1 + 1) for q in range(q0, q1 + 1)}
    return ResolventTable(z, (p0, p1), (q0, q1), vals, dict(vals), 0.0, {"beta": beta})


def d_degree(p: int, q: int) -> int | None:
    """Degree of d_pq in z, None where d_pq vanishes identically."""
    if q >= -abs(p):
        return None
    return abs(abs(p) - abs(q)) - 1


# --- the eigenvector identity ------------------------------------------------

def product_sums(xi_values: np.ndarray, n_min: int, p: int, q: int, sign: int) -> complex:
    """sum_n lam^{2 sign q n} xi_n xi_{n+p}."""
    n = np.arange(n_min, n_min + len(xi_values))
    if p >= 0:
        a, b, nn = xi_values[:len(xi_values) - p], xi_values[p:], n[:len(n) - p]
    else:
        a, b, nn = xi_values[-p:], xi_values[:p], n[-p:]
    ph = np.exp(2j * np.pi * GOLDEN * sign * q * nn)
    return complex(np.sum(ph * a * b))


def thm216_identity_residual(mode, G: complex, z: complex, table_c: ResolventTable,
                             table_d: ResolventTable, p_range=(-3, 3), q_range=(-3, 3),
                             form: str = "derived") -> dict:
    """Fit one scalar s in  s * LHS_pq = (c_pq - d_pq) * RHS-factor  and return the residual.

    form="derived":  LHS = lam^{pq} sum_n lam^{2qn} xi_n xi_{n+p},  factor (x delta)^q
    form="printed":  LHS = lam^{pq} conj(x)^q sum_n conj(lam)^{2qn} xi_n xi_{n+p},  factor |G|^q
    """
    xi = mode.xi
    rows = [(p, q) for p in range(p_range[0], p_range[1] + 1) for q in range(q_range[0], q_range[1] + 1)]
    L, R = [], []
    for p, q in rows:
        if form == "derived":
            lhs = LAM ** (p * q) * product_sums(xi.values, xi.n_min, p, q, +1)
            fac = G ** q
        elif form == "printed":
            x = G / abs(G)
            lhs = LAM ** (p * q) * np.conj(x) ** q * product_sums(xi.values, xi.n_min, p, q, -1)
            fac = abs(G) ** q
        else:
            raise ValueError(f"unknown form {form!r}")
        L.append(lhs)
        R.append((table_c[(p, q)] - table_d[(p, q)]) * fac)
    L, R = np.array(L), np.array(R)
    if np.linalg.norm(L) < 1e-300:
        raise ValueError("degenerate fit: all left-hand sides vanish")
    s = np.vdot(L, R) / np.vdot(L, L)
    res = float(np.linalg.norm(s * L - R) / np.linalg.norm(R))
    return {"scale": complex(s), "residual": res, "form": form, "rows": len(rows)}
