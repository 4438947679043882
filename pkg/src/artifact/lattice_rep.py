"""Sequences on Z and the operators u, v, w, D_x, h_gamma(delta), k_gamma.

Conventions, fixed throughout the package:

    (u xi)_n = xi_{n-1}          (v xi)_n = conj(lam)^{2n} xi_n
    (w xi)_n = lam^{n^2} xi_n    (D_x xi)_n = x^n xi_n

with lam = exp(i pi alpha).  A ``LatticeWindow`` holds the components on a
finite index range; every operator returns only the entries it can compute
exactly from its input, so shifts and convolutions shrink the window.

With v as above, the conjugator that satisfies

    h_{gamma/delta}(delta) k_gamma = k_gamma h_{gamma delta}(delta)

is k_gamma = w* e^{i g(gamma u)} w*, where g has coefficients
-(-1)^n / (2 n sin(pi alpha n)) beta^{-n}.  ``g_series`` also exposes the
normalization without the factor -1/2 for comparison.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from decimal import Decimal, getcontext

import numpy as np

from .rotation_algebra import GOLDEN


def _golden_split() -> tuple[float, float]:
    getcontext().prec = 60
    exact = (Decimal(5).sqrt() - 1) / 2
    hi = float(exact)
    lo = float(exact - Decimal(hi))
    return hi, lo


@dataclass(frozen=True)
class PhaseReducer:
    """alpha stored as an unevaluated sum hi + lo of two doubles."""

    hi: float
    lo: float = 0.0

    def __post_init__(self):
        if abs(self.lo) > np.spacing(self.hi) / 2 + 1e-300:
            raise ValueError("lo part exceeds half an ulp of hi")

    @classmethod
    def golden(cls) -> "PhaseReducer":
        return cls(*_golden_split())

    @classmethod
    def from_alpha(cls, alpha: float) -> "PhaseReducer":
        if alpha == GOLDEN:
            return cls.golden()
        return cls(float(alpha), 0.0)

    @property
    def alpha(self) -> float:
        return self.hi

    def mod2(self, k) -> np.ndarray:
        """alpha * k reduced to [0, 2) for integer k, exact in the hi part."""
        ks = np.atleast_1d(np.asarray(k))
        num, den = self.hi.as_integer_ratio()
        two_den = 2 * den
        hi_part = np.array([((num * int(kk)) % two_den) / den for kk in ks.ravel()], dtype=float)
        lo_part = self.lo * ks.ravel().astype(float)
        out = np.mod(hi_part + lo_part, 2.0).reshape(ks.shape)
        return out if np.ndim(k) else out[0]

    def lam_power(self, k) -> np.ndarray:
        """lam^k for integer k."""
        return np.exp(1j * np.pi * self.mod2(k))


_DEFAULT_REDUCER = PhaseReducer.golden()


def default_reducer(alpha: float = GOLDEN) -> PhaseReducer:
    return _DEFAULT_REDUCER if alpha == GOLDEN else PhaseReducer.from_alpha(alpha)


@dataclass(frozen=True)
class LatticeWindow:
    n_min: int
    values: np.ndarray

    def __post_init__(self):
        vals = np.array(self.values, dtype=complex).ravel()
        if vals.size == 0:
            raise ValueError("empty lattice window")
        if not np.all(np.isfinite(vals)):
            raise ValueError("lattice window has non-finite components")
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "n_min", int(self.n_min))

    @property
    def n_max(self) -> int:
        return self.n_min + len(self.values) - 1

    @property
    def indices(self) -> np.ndarray:
        return np.arange(self.n_min, self.n_max + 1)

    @classmethod
    def delta(cls, n: int, n_min: int, n_max: int) -> "LatticeWindow":
        v = np.zeros(n_max - n_min + 1, dtype=complex)
        v[n - n_min] = 1.0
        return cls(n_min, v)

    @classmethod
    def zeros(cls, n_min: int, n_max: int) -> "LatticeWindow":
        return cls(n_min, np.zeros(n_max - n_min + 1, dtype=complex))

    def __getitem__(self, n: int) -> complex:
        return self.values[n - self.n_min]

    def restrict(self, n_min: int, n_max: int) -> "LatticeWindow":
        if n_min < self.n_min or n_max > self.n_max or n_min > n_max:
            raise ValueError("restriction outside the window")
        return LatticeWindow(n_min, self.values[n_min - self.n_min:n_max - self.n_min + 1])

    def pad(self, k: int) -> "LatticeWindow":
        """Extend by k zeros on both sides (compact-support semantics)."""
        return LatticeWindow(self.n_min - k, np.pad(self.values, k))

    def scaled(self, c: complex) -> "LatticeWindow":
        return LatticeWindow(self.n_min, self.values * c)

    def norm(self) -> float:
        return float(np.linalg.norm(self.values))

    def to_csv(self) -> str:
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["n", "re", "im"])
        for n, c in zip(self.indices, self.values):
            wr.writerow([int(n), repr(float(c.real)), repr(float(c.imag))])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "LatticeWindow":
        rows = list(csv.reader(io.StringIO(text)))[1:]
        ns = [int(r[0]) for r in rows]
        if ns != list(range(ns[0], ns[0] + len(ns))):
            raise ValueError("window indices must be consecutive")
        return cls(ns[0], [complex(float(r[1]), float(r[2])) for r in rows])


def common(a: LatticeWindow, b: LatticeWindow) -> tuple[np.ndarray, np.ndarray, int]:
    """Values of a and b on their overlap, plus the overlap's first index."""
    lo, hi = max(a.n_min, b.n_min), min(a.n_max, b.n_max)
    if lo > hi:
        raise ValueError("windows do not overlap")
    return a.restrict(lo, hi).values, b.restrict(lo, hi).values, lo


def apply_shift_u(xi: LatticeWindow, adjoint: bool = False, times: int = 1) -> LatticeWindow:
    """(u xi)_n = xi_{n-1}; the adjoint shifts the other way."""
    if times == 0:
        return xi
    if times < 0:
        return apply_shift_u(xi, not adjoint, -times)
    if times >= len(xi.values):
        raise ValueError("empty result window")
    if adjoint:
        return LatticeWindow(xi.n_min, xi.values[times:])
    return LatticeWindow(xi.n_min + times, xi.values[:-times])


def reindex(xi: LatticeWindow, m: int) -> LatticeWindow:
    """u^m on compactly supported data: same values, indices moved by m."""
    return LatticeWindow(xi.n_min + m, xi.values)


def apply_diag_v(xi: LatticeWindow, power: int = 1, reducer: PhaseReducer | None = None) -> LatticeWindow:
    red = reducer or _DEFAULT_REDUCER
    return LatticeWindow(xi.n_min, xi.values * red.lam_power(-2 * power * xi.indices))


def w_phases(n: np.ndarray, power: int = 1, reducer: PhaseReducer | None = None) -> np.ndarray:
    red = reducer or _DEFAULT_REDUCER
    n = np.asarray(n, dtype=np.int64)
    return red.lam_power(power * n * n)


def apply_w(xi: LatticeWindow, power: int = 1, reducer: PhaseReducer | None = None) -> LatticeWindow:
    return LatticeWindow(xi.n_min, xi.values * w_phases(xi.indices, power, reducer))


def d_factors(x: complex, n: np.ndarray) -> np.ndarray:
    """x^n for an index array, guarding against overflow."""
    if x == 0:
        raise ValueError("D_x needs x != 0")
    n = np.asarray(n)
    worst = np.abs(n).max(initial=0) * abs(np.log(abs(x)))
    if worst > 700:
        raise OverflowError(f"|x|^n overflows on this window (exponent {worst:.0f} > 700)")
    if abs(abs(x) - 1) < 1e-15:
        return np.exp(1j * np.angle(x) * n)
    return np.power(complex(x), n.astype(float))


def apply_D(x: complex, xi: LatticeWindow) -> LatticeWindow:
    return LatticeWindow(xi.n_min, xi.values * d_factors(x, xi.indices))


def h_diagonal(n: np.ndarray, delta: complex, x: complex, beta: float,
               reducer: PhaseReducer | None = None) -> np.ndarray:
    """beta (delta x e^{-2 pi i alpha n} + delta^{-1} conj(x) e^{2 pi i alpha n})."""
    red = reducer or _DEFAULT_REDUCER
    ph = red.lam_power(-2 * np.asarray(n, dtype=np.int64))
    return beta * (delta * x * ph + np.conj(x) / delta * np.conj(ph))


def apply_h(gamma: complex, delta: complex, x: complex, beta: float, xi: LatticeWindow,
            reducer: PhaseReducer | None = None) -> LatticeWindow:
    """h_gamma(x delta) on the interior of the window."""
    if gamma == 0 or delta == 0:
        raise ValueError("gamma and delta must be non-zero")
    v = xi.values
    if len(v) < 3:
        raise ValueError("window too small for h")
    n = xi.indices[1:-1]
    out = gamma * v[:-2] + v[2:] / gamma + h_diagonal(n, delta, x, beta, reducer) * v[1:-1]
    return LatticeWindow(xi.n_min + 1, out)


@dataclass(frozen=True)
class LaurentSeries:
    """sum_{j=-J..J} c_j u^j; coeffs[j + J] holds c_j."""

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=complex).ravel()
        if c.size % 2 != 1:
            raise ValueError("LaurentSeries needs an odd coefficient count")
        object.__setattr__(self, "coeffs", c)

    @property
    def J(self) -> int:
        return (len(self.coeffs) - 1) // 2

    @property
    def js(self) -> np.ndarray:
        return np.arange(-self.J, self.J + 1)

    def __getitem__(self, j: int) -> complex:
        return self.coeffs[j + self.J] if abs(j) <= self.J else 0j

    def on_circle(self, z: np.ndarray) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        return np.polynomial.polynomial.polyval(z, self.coeffs) * z ** (-self.J)

    def pruned(self, floor: float) -> "LaurentSeries":
        big = np.nonzero(np.abs(self.coeffs) > floor)[0]
        if big.size == 0:
            return LaurentSeries([0j])
        J = max(abs(int(big[0]) - self.J), abs(int(big[-1]) - self.J))
        return LaurentSeries(self.coeffs[self.J - J:self.J + J + 1])

    def to_json(self) -> str:
        return json.dumps({"J": self.J, "re": self.coeffs.real.tolist(),
                           "im": self.coeffs.imag.tolist()})

    @classmethod
    def from_json(cls, text: str) -> "LaurentSeries":
        d = json.loads(text)
        return cls(np.array(d["re"]) + 1j * np.array(d["im"]))


def g_series(beta: float, gamma: float = 1.0, alpha: float = GOLDEN, N: int = 60,
             normalization: str = "intertwining") -> LaurentSeries:
    """The series g(gamma u) = sum_n c_n (gamma^n u^n + gamma^{-n} u^{-n}).

    ``"intertwining"``: c_n = -(-1)^n / (2 n sin(pi alpha n)) beta^{-n}, the
    normalization under which k_gamma intertwines the h family.
    ``"printed"``: c_n = (-1)^n / (n sin(pi alpha n)) beta^{-n}.
    """
    if beta <= 1:
        raise ValueError("g_series needs beta > 1")
    if not (1 / beta < abs(gamma) < beta):
        raise ValueError("gamma outside the annulus 1/beta < |gamma| < beta")
    if N < 1:
        raise ValueError("cutoff must be >= 1")
    n = np.arange(1, N + 1)
    s = np.sin(np.pi * alpha * n)
    if np.any(np.abs(s) < 1e-14):
        raise ValueError("sin(pi alpha n) vanishes: rational alpha")
    base = (-1.0) ** n / (n * s) * beta ** (-n.astype(float))
    if normalization == "intertwining":
        base = -0.5 * base
    elif normalization != "printed":
        raise ValueError(f"unknown normalization {normalization!r}")
    c = np.zeros(2 * N + 1, dtype=complex)
    c[N + n] = base * gamma ** n
    c[N - n] = base * gamma ** (-n.astype(float))
    return LaurentSeries(c)


def circle_coefficients(values: np.ndarray, J: int) -> LaurentSeries:
    """Fourier coefficients c_j, |j| <= J, from M uniform samples on |z| = 1."""
    M = len(values)
    F = np.fft.fft(values) / M
    js = np.arange(-J, J + 1)
    return LaurentSeries(F[js % M])


def exp_ig(g: LaurentSeries, M: int = 2048, floor: float = 1e-16, sign: int = 1) -> LaurentSeries:
    """Coefficients of exp(sign * i g(u)) by sampling the symbol on the circle."""
    if M < 4 * (2 * g.J + 1):
        raise ValueError("sample count must exceed 4x the support of g")
    z = np.exp(2j * np.pi * np.arange(M) / M)
    vals = np.exp(sign * 1j * g.on_circle(z))
    return circle_coefficients(vals, M // 2 - 1).pruned(floor)


def convolve(E: LaurentSeries, xi: LatticeWindow) -> LatticeWindow:
    """(E(u) xi)_n = sum_j E_j xi_{n-j} on the indices reachable from the window."""
    J = E.J
    if len(xi.values) <= 2 * J:
        raise ValueError("window too small for the convolution support")
    full = np.convolve(xi.values, E.coeffs)  # index offset: n_min - J
    return LatticeWindow(xi.n_min + J, full[2 * J:len(full) - 2 * J])


def k_series(gamma: float, beta: float, alpha: float = GOLDEN, N: int = 60, M: int = 2048,
             normalization: str = "intertwining") -> LaurentSeries:
    return exp_ig(g_series(beta, gamma, alpha, N, normalization), M)


def apply_k(gamma: float, beta: float, xi: LatticeWindow, N: int = 60, M: int = 2048,
            w_power: int = -1, E: LaurentSeries | None = None,
            normalization: str = "intertwining", reducer: PhaseReducer | None = None) -> LatticeWindow:
    """(k xi)_n = lam^{p n^2} sum_j E_j lam^{p (n-j)^2} xi_{n-j}, p = w_power.

    The default p = -1 is the intertwining choice for this sign of v.
    """
    if not (1 / beta < gamma < beta):
        raise ValueError("gamma outside 1/beta < gamma < beta")
    if E is None:
        E = k_series(gamma, beta, GOLDEN if reducer is None else reducer.alpha, N, M, normalization)
    y = apply_w(xi, w_power, reducer)
    return apply_w(convolve(E, y), w_power, reducer)


def intertwine_residual(gamma: float, delta: float, beta: float, trials: int = 20, seed: int = 0,
                        N: int = 60, M: int = 2048, support: int = 5, **k_opts) -> float:
    """max_xi sup|h_{gamma/delta}(delta) k xi - k h_{gamma delta}(delta) xi| / |xi|_inf."""
    if not (1 / beta < gamma < beta):
        raise ValueError("gamma outside 1/beta < gamma < beta")
    rng = np.random.default_rng(seed)
    E = k_series(gamma, beta, GOLDEN, N, M, k_opts.pop("normalization", "intertwining"))
    halo = E.J + 2
    worst = 0.0
    for _ in range(trials):
        vals = rng.standard_normal(2 * support + 1) + 1j * rng.standard_normal(2 * support + 1)
        xi = LatticeWindow(-support, vals).pad(2 * halo)
        scale = np.abs(vals).max()
        if scale == 0:
            continue
        lhs = apply_h(gamma / delta, delta, 1.0, beta, apply_k(gamma, beta, xi, E=E, **k_opts))
        rhs = apply_k(gamma, beta, apply_h(gamma * delta, delta, 1.0, beta, xi), E=E, **k_opts)
        a, b, _ = common(lhs, rhs)
        worst = max(worst, float(np.abs(a - b).max() / scale))
    return worst


def diophantine_profile(alpha: float, n_max: int = 2000) -> np.ndarray:
    """|sin(pi alpha n)|^{-1/n} for n = 1..n_max; tends to 1 when alpha qualifies."""
    n = np.arange(1, n_max + 1)
    return np.abs(np.sin(np.pi * alpha * n)) ** (-1.0 / n)
