"""Coefficient arithmetic in the irrational rotation algebra.

Elements are finite sums  sum c_pq w_pq  over the twisted monomials
w_pq = lam^{-pq} u^p v^q, lam = exp(i pi alpha), with uv = lam^2 vu.  In this
basis the product rule is

    w_pq w_rs = lam^{ps - qr} w_{p+r, q+s},

the adjoint is w_pq* = w_{-p,-q}, and the trace picks the (0, 0) coefficient.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0
PRUNE_FLOOR = 1e-16


def alpha_id(alpha: float) -> str:
    return "golden" if alpha == GOLDEN else repr(float(alpha))


def alpha_from_id(ident: str) -> float:
    return GOLDEN if ident == "golden" else float(ident)


def lam_power(alpha: float, k) -> np.ndarray:
    """lam^k = exp(i pi alpha k) with alpha*k reduced mod 2 before exponentiating."""
    k = np.asarray(k, dtype=float)
    return np.exp(1j * np.pi * np.mod(alpha * k, 2.0))


@dataclass(frozen=True)
class AlgebraElement:
    alpha: float
    coeffs: dict = field(default_factory=dict)
    floor: float = PRUNE_FLOOR

    def __post_init__(self):
        clean = {(int(p), int(q)): complex(c) for (p, q), c in self.coeffs.items()
                 if abs(c) > self.floor}
        object.__setattr__(self, "coeffs", clean)

    # construction helpers
    @classmethod
    def monomial(cls, alpha: float, p: int, q: int, c: complex = 1.0) -> "AlgebraElement":
        return cls(alpha, {(p, q): c})

    @classmethod
    def scalar(cls, alpha: float, c: complex) -> "AlgebraElement":
        return cls(alpha, {(0, 0): c})

    def arrays(self):
        if not self.coeffs:
            return np.zeros(0, int), np.zeros(0, int), np.zeros(0, complex)
        keys = np.array(list(self.coeffs.keys()), dtype=np.int64)
        vals = np.array(list(self.coeffs.values()), dtype=complex)
        return keys[:, 0], keys[:, 1], vals

    def __getitem__(self, pq) -> complex:
        return self.coeffs.get(tuple(pq), 0j)

    def _check(self, other: "AlgebraElement"):
        if self.alpha != other.alpha:
            raise ValueError("alpha mismatch between algebra elements")

    def __add__(self, other):
        if not isinstance(other, AlgebraElement):
            other = AlgebraElement.scalar(self.alpha, other)
        self._check(other)
        out = dict(self.coeffs)
        for k, c in other.coeffs.items():
            out[k] = out.get(k, 0j) + c
        return AlgebraElement(self.alpha, out, self.floor)

    __radd__ = __add__

    def __neg__(self):
        return AlgebraElement(self.alpha, {k: -c for k, c in self.coeffs.items()}, self.floor)

    def __sub__(self, other):
        return self + (-other if isinstance(other, AlgebraElement) else -other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, AlgebraElement):
            return multiply(self, other)
        return AlgebraElement(self.alpha, {k: c * other for k, c in self.coeffs.items()}, self.floor)

    def __rmul__(self, other):
        return AlgebraElement(self.alpha, {k: c * other for k, c in self.coeffs.items()}, self.floor)

    def sup_norm(self) -> float:
        return max((abs(c) for c in self.coeffs.values()), default=0.0)

    def to_json(self) -> str:
        entries = [[p, q, c.real, c.imag] for (p, q), c in sorted(self.coeffs.items())]
        return json.dumps({"alpha_id": alpha_id(self.alpha), "entries": entries})

    @classmethod
    def from_json(cls, text: str) -> "AlgebraElement":
        d = json.loads(text)
        alpha = alpha_from_id(d["alpha_id"])
        return cls(alpha, {(int(p), int(q)): complex(re, im) for p, q, re, im in d["entries"]})


def generators(alpha: float = GOLDEN):
    """The unitaries u = w_10 and v = w_01."""
    return AlgebraElement.monomial(alpha, 1, 0), AlgebraElement.monomial(alpha, 0, 1)


def h_element(beta: float, alpha: float = GOLDEN, delta: float = 1.0) -> AlgebraElement:
    """u + u* + beta (delta v + delta^{-1} v*)."""
    return AlgebraElement(alpha, {(1, 0): 1.0, (-1, 0): 1.0, (0, 1): beta * delta,
                                  (0, -1): beta / delta})


def multiply(a: AlgebraElement, b: AlgebraElement) -> AlgebraElement:
    a._check(b)
    p, q, c = a.arrays()
    r, s, d = b.arrays()
    if len(c) == 0 or len(d) == 0:
        return AlgebraElement(a.alpha, {}, a.floor)
    twist = np.outer(p, s) - np.outer(q, r)
    prod = np.outer(c, d) * lam_power(a.alpha, twist)
    pp = (p[:, None] + r[None, :]).ravel()
    qq = (q[:, None] + s[None, :]).ravel()
    keys, inv = np.unique(np.stack([pp, qq], axis=1), axis=0, return_inverse=True)
    acc = np.zeros(len(keys), dtype=complex)
    np.add.at(acc, inv.ravel(), prod.ravel())
    return AlgebraElement(a.alpha, {(int(k[0]), int(k[1])): v for k, v in zip(keys, acc)},
                          a.floor)


def adjoint(a: AlgebraElement) -> AlgebraElement:
    return AlgebraElement(a.alpha, {(-p, -q): np.conj(c) for (p, q), c in a.coeffs.items()},
                          a.floor)


def trace(a: AlgebraElement) -> complex:
    return a[(0, 0)]


def power(a: AlgebraElement, n: int) -> AlgebraElement:
    """a^n by repeated squaring; negative n uses the adjoint (a must be unitary)."""
    if n < 0:
        return power(adjoint(a), -n)
    result = AlgebraElement.scalar(a.alpha, 1.0)
    base = a
    while n:
        if n & 1:
            result = multiply(result, base)
        n >>= 1
        if n:
            base = multiply(base, base)
    return result


@dataclass(frozen=True)
class IntegerMatrix2:
    a: int
    b: int
    c: int
    d: int

    def __post_init__(self):
        if abs(self.det) != 1:
            raise ValueError("GL(2,Z) element needs determinant +-1")

    @property
    def det(self) -> int:
        return self.a * self.d - self.b * self.c

    def __matmul__(self, other: "IntegerMatrix2") -> "IntegerMatrix2":
        return IntegerMatrix2(self.a * other.a + self.b * other.c, self.a * other.b + self.b * other.d,
                              self.c * other.a + self.d * other.c, self.c * other.b + self.d * other.d)


def gl2z_isometry(A: IntegerMatrix2, a: AlgebraElement) -> AlgebraElement:
    """Linear map w_mn -> w_{A(m,n)}: an automorphism for det 1, an
    antiautomorphism for det -1."""
    out = {}
    for (m, n), c in a.coeffs.items():
        key = (A.a * m + A.b * n, A.c * m + A.d * n)
        out[key] = out.get(key, 0j) + c
    return AlgebraElement(a.alpha, out, a.floor)


def neumann_inverse(s: AlgebraElement, beta: float, order: int) -> AlgebraElement:
    """beta^{-1} sum_{n<=order} (-s/beta)^n, the truncated inverse of s + beta."""
    if beta <= 1:
        raise ValueError("neumann_inverse needs beta > 1")
    if len(s.coeffs) != 1 or abs(abs(next(iter(s.coeffs.values()))) - 1) > 1e-12:
        raise ValueError("neumann_inverse needs a single unitary monomial")
    if order < 0:
        raise ValueError("order must be non-negative")
    term = AlgebraElement.scalar(s.alpha, 1.0 / beta)
    total = term
    for _ in range(order):
        term = multiply(term, s) * (-1.0 / beta)
        total = total + term
    return total


def rho_generators(beta: float, order: int, alpha: float = GOLDEN):
    """Images of u and v under rho_beta, with (uv + beta)^{-1} truncated."""
    u, v = generators(alpha)
    uv = multiply(u, v)
    inv = neumann_inverse(uv, beta, order)
    tail = adjoint(uv) + beta  # v* u* + beta
    rv = multiply(multiply(v, inv), tail)
    ru = multiply(multiply(multiply(v, u), v), multiply(inv, tail))
    return ru, rv


def rho_beta(a: AlgebraElement, beta: float, order: int) -> AlgebraElement:
    """Apply rho_beta monomial by monomial: w_pq -> lam^{-pq} rho(u)^p rho(v)^q."""
    if beta <= 1:
        raise ValueError("rho_beta needs beta > 1")
    ru, rv = rho_generators(beta, order, a.alpha)
    out = AlgebraElement(a.alpha, {}, a.floor)
    cache_u: dict[int, AlgebraElement] = {}
    cache_v: dict[int, AlgebraElement] = {}
    for (p, q), c in a.coeffs.items():
        if p not in cache_u:
            cache_u[p] = power(ru, p)
        if q not in cache_v:
            cache_v[q] = power(rv, q)
        img = multiply(cache_u[p], cache_v[q])
        out = out + img * (c * lam_power(a.alpha, -p * q))
    return out


def moment(beta: float, n: int, alpha: float = GOLDEN) -> float:
    """trace(h^n) for h = u + u* + beta (v + v*)."""
    if n < 1:
        raise ValueError("moment order must be >= 1")
    h = h_element(beta, alpha)
    return trace(power(h, n)).real


def moment_closed_form(beta: float, n: int, alpha: float = GOLDEN,
                       variant: str = "derived") -> float | None:
    """Closed forms for low moments; None when not tabulated.

    ``variant="printed"`` returns the quartic coefficient 24 + 16 cos 2 pi alpha
    as published; ``"derived"`` returns 16 + 8 cos 2 pi alpha, which is what
    the word count gives (u, u*, v, v* in a cycle: four orders with u next to
    u* contribute 1, two alternating orders contribute lam^{+-2}).
    """
    if n % 2 == 1:
        return 0.0
    if n == 2:
        return 2 * beta**2 + 2
    if n == 4:
        c2 = np.cos(2 * np.pi * alpha)
        mixed = 24 + 16 * c2 if variant == "printed" else 16 + 8 * c2
        return 6 * beta**4 + mixed * beta**2 + 6
    return None
