"""Dense and banded complex linear algebra kernels.

Small, self-contained routines: Hessenberg reduction with shifted QR for
eigenvalues, inverse iteration, banded LU with partial pivoting, and a
one-sided Jacobi SVD.  They are written for clarity and for matrices of a
few hundred rows; the large parameter sweeps elsewhere in the package call
LAPACK through numpy and use these kernels as a cross-check.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_EPS = np.finfo(float).eps


class NumlinError(RuntimeError):
    """Raised when a kernel cannot satisfy its contract."""


@dataclass(frozen=True)
class ComplexMatrix:
    """A complex matrix with an optional (lower, upper) bandwidth hint."""

    entries: np.ndarray
    band: tuple[int, int] | None = None

    def __post_init__(self):
        a = np.array(self.entries, dtype=complex)
        if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
            raise ValueError("ComplexMatrix needs a non-empty 2-d array")
        if self.band is not None:
            lo, up = self.band
            i, j = np.indices(a.shape)
            if np.any(a[(i - j > lo) | (j - i > up)] != 0):
                raise ValueError("entries outside the declared band are non-zero")
        object.__setattr__(self, "entries", a)

    @property
    def rows(self) -> int:
        return self.entries.shape[0]

    @property
    def cols(self) -> int:
        return self.entries.shape[1]

    @classmethod
    def tridiagonal(cls, lower, diag, upper) -> "ComplexMatrix":
        diag = np.asarray(diag, dtype=complex)
        a = np.diag(diag)
        if len(diag) > 1:
            a = a + np.diag(np.asarray(lower, dtype=complex), -1)
            a = a + np.diag(np.asarray(upper, dtype=complex), 1)
        return cls(a, (1, 1))


def _unwrap(M) -> tuple[np.ndarray, tuple[int, int] | None]:
    if isinstance(M, ComplexMatrix):
        return M.entries, M.band
    a = np.array(M, dtype=complex)
    if a.ndim != 2:
        raise ValueError("expected a 2-d matrix")
    return a, None


def _householder(x: np.ndarray) -> tuple[np.ndarray, float]:
    """Vector v and scale tau with (I - tau v v^H) x = -e^{i arg x0} |x| e_0."""
    alpha = np.linalg.norm(x)
    v = x.astype(complex).copy()
    if alpha == 0.0:
        return v, 0.0
    phase = x[0] / abs(x[0]) if x[0] != 0 else 1.0
    v[0] += phase * alpha
    vn = np.vdot(v, v).real
    return v, 2.0 / vn


def hessenberg_reduce(a: np.ndarray) -> np.ndarray:
    """Unitary similarity to upper Hessenberg form by Householder reflections."""
    h = np.array(a, dtype=complex)
    n = h.shape[0]
    for k in range(n - 2):
        v, tau = _householder(h[k + 1:, k])
        if tau == 0.0:
            continue
        h[k + 1:, k:] -= tau * np.outer(v, v.conj() @ h[k + 1:, k:])
        h[:, k + 1:] -= tau * np.outer(h[:, k + 1:] @ v, v.conj())
        h[k + 2:, k] = 0.0
    return h


def _givens(a: complex, b: complex) -> tuple[float, complex, complex]:
    """c, s, r with [[c, s], [-conj(s), c]] @ [a, b] = [r, 0], c real."""
    if b == 0:
        return 1.0, 0j, a
    if a == 0:
        return 0.0, np.conj(b) / abs(b), abs(b)
    na, nb = abs(a), abs(b)
    nrm = np.hypot(na, nb)
    c = na / nrm
    s = (a / na) * np.conj(b) / nrm
    return c, s, (a / na) * nrm


def hessenberg_eigenvalues(M, tol: float = 1e-14, max_iter: int | None = None) -> np.ndarray:
    """All eigenvalues of a square complex matrix via Hessenberg QR.

    Single-shift complex QR with Wilkinson shifts and exceptional shifts
    after stagnation.  Eigenvalues are returned in deflation order.
    """
    a, _ = _unwrap(M)
    n, m = a.shape
    if n != m:
        raise ValueError("hessenberg_eigenvalues needs a square matrix")
    if tol <= 0:
        raise ValueError("tol must be positive")
    h = hessenberg_reduce(a)
    eig = np.zeros(n, dtype=complex)
    hi = n - 1
    cap = max_iter if max_iter is not None else 60 * n
    its = 0
    stuck = 0
    while hi >= 0:
        if hi == 0:
            eig[0] = h[0, 0]
            break
        # locate the start of the active unreduced block
        lo = hi
        while lo > 0:
            s = abs(h[lo - 1, lo - 1]) + abs(h[lo, lo])
            if s == 0.0:
                s = np.abs(h).max()
            if abs(h[lo, lo - 1]) <= max(tol, _EPS) * s:
                h[lo, lo - 1] = 0.0
                break
            lo -= 1
        if lo == hi:
            eig[hi] = h[hi, hi]
            hi -= 1
            stuck = 0
            continue
        its += 1
        stuck += 1
        if its > cap:
            raise NumlinError(f"QR iteration did not deflate subdiagonal index {hi}")
        # Wilkinson shift from the trailing 2x2 block
        a11, a12 = h[hi - 1, hi - 1], h[hi - 1, hi]
        a21, a22 = h[hi, hi - 1], h[hi, hi]
        tr = a11 + a22
        det = a11 * a22 - a12 * a21
        disc = np.sqrt(tr * tr / 4 - det)
        r1, r2 = tr / 2 + disc, tr / 2 - disc
        mu = r1 if abs(r1 - a22) < abs(r2 - a22) else r2
        if stuck % 11 == 10:
            mu = a22 + 0.75 * abs(a21) * np.exp(1j * stuck)
        # one implicit-free explicit QR sweep on h[lo:hi+1, lo:hi+1]
        rots = []
        for k in range(lo, hi + 1):
            h[k, k] -= mu
        for k in range(lo, hi):
            c, s, _ = _givens(h[k, k], h[k + 1, k])
            rots.append((c, s))
            rk = h[k, k:].copy()
            rk1 = h[k + 1, k:].copy()
            h[k, k:] = c * rk + s * rk1
            h[k + 1, k:] = -np.conj(s) * rk + c * rk1
        for k, (c, s) in zip(range(lo, hi), rots):
            top = min(k + 2, hi) + 1
            ck = h[:top, k].copy()
            ck1 = h[:top, k + 1].copy()
            h[:top, k] = c * ck + np.conj(s) * ck1
            h[:top, k + 1] = -s * ck + c * ck1
        for k in range(lo, hi + 1):
            h[k, k] += mu
    return eig


def lu_factor(M, band: tuple[int, int] | None = None):
    """Partial-pivoting LU restricted to the band when a hint is available.

    Returns (lu, piv, (kl, ku_eff)) where lu stores L below and U on and above
    the diagonal, and piv[k] is the row swapped into position k.
    """
    a, hint = _unwrap(M)
    band = band if band is not None else hint
    n = a.shape[0]
    if a.shape[1] != n:
        raise ValueError("LU needs a square matrix")
    lu = a.copy()
    kl, ku = band if band is not None else (n - 1, n - 1)
    kue = min(n - 1, ku + kl)
    piv = np.arange(n)
    scale = np.abs(a).max() if a.size else 0.0
    thresh = 1e3 * _EPS * max(scale, 1e-300)
    for k in range(n):
        last = min(n, k + kl + 1)
        p = k + int(np.argmax(np.abs(lu[k:last, k])))
        if abs(lu[p, k]) <= thresh:
            raise NumlinError(f"singular pivot at column {k}")
        cend = min(n, k + kue + 1)
        if p != k:
            lu[[k, p], k:cend] = lu[[p, k], k:cend]
            piv[k] = p
        if last > k + 1:
            lu[k + 1:last, k] /= lu[k, k]
            lu[k + 1:last, k + 1:cend] -= np.outer(lu[k + 1:last, k], lu[k, k + 1:cend])
    return lu, piv, (kl, kue)


def lu_solve(factors, b) -> np.ndarray:
    lu, piv, (kl, kue) = factors
    n = lu.shape[0]
    x = np.array(b, dtype=complex)
    for k in range(n):
        if piv[k] != k:
            x[[k, piv[k]]] = x[[piv[k], k]]
        last = min(n, k + kl + 1)
        if last > k + 1:
            x[k + 1:last] -= lu[k + 1:last, k] * x[k]
    for k in range(n - 1, -1, -1):
        cend = min(n, k + kue + 1)
        x[k] = (x[k] - lu[k, k + 1:cend] @ x[k + 1:cend]) / lu[k, k]
    return x


def banded_solve(M, b) -> np.ndarray:
    """Solve M x = b with LU and partial pivoting, using the band hint."""
    return lu_solve(lu_factor(M), b)


def inverse_iteration(M, shift: complex, tol: float = 1e-12, max_iter: int = 50,
                      rng: np.random.Generator | None = None):
    """Eigenpair nearest ``shift`` by shifted inverse iteration.

    Returns (eigenvalue, unit eigenvector, info) where info records the
    iteration count and whether the shift had to be nudged off a singular
    pencil.
    """
    a, band = _unwrap(M)
    n = a.shape[0]
    if a.shape[1] != n:
        raise ValueError("inverse_iteration needs a square matrix")
    norm_a = max(np.abs(a).sum(axis=1).max(), 1e-300)
    eye = np.eye(n)
    nudged = False
    sigma = complex(shift)
    for attempt in range(6):
        try:
            fac = lu_factor(ComplexMatrix(a - sigma * eye, band) if band else a - sigma * eye)
            break
        except NumlinError:
            nudged = True
            sigma += (1 + 1j) * norm_a * 1e-12 * 10 ** attempt
    else:
        raise NumlinError("shifted matrix singular after perturbation")
    rng = rng if rng is not None else np.random.default_rng(12345)
    v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    v /= np.linalg.norm(v)
    mu = sigma
    for it in range(1, max_iter + 1):
        y = lu_solve(fac, v)
        v = y / np.linalg.norm(y)
        av = a @ v
        mu = np.vdot(v, av)
        if np.linalg.norm(av - mu * v) <= tol * norm_a:
            return mu, v, {"iterations": it, "nudged": nudged, "shift": sigma}
    raise NumlinError(f"inverse iteration did not converge in {max_iter} steps")


def _round_robin(n: int):
    """Disjoint pair sets covering all pairs of range(n) once (circle method)."""
    m = n + (n % 2)
    idx = list(range(m))
    rounds = []
    for _ in range(m - 1):
        pairs = [(idx[i], idx[m - 1 - i]) for i in range(m // 2)]
        rounds.append([(min(p), max(p)) for p in pairs if max(p) < n])
        idx = [idx[0]] + [idx[-1]] + idx[1:-1]
    return rounds


def singular_values(M, tol: float = 1e-15, max_sweeps: int = 60) -> np.ndarray:
    """Singular values, descending, by one-sided Jacobi on the columns.

    Each round rotates a set of disjoint column pairs at once, so a sweep
    costs n - 1 vectorised rounds.
    """
    a, _ = _unwrap(M)
    if a.shape[0] < a.shape[1]:
        a = a.conj().T
    u = a.copy()
    n = u.shape[1]
    if n == 1:
        return np.array([np.linalg.norm(u[:, 0])])
    rounds = [np.array(r, dtype=int).reshape(-1, 2) for r in _round_robin(n)]
    for _ in range(max_sweeps):
        rotated = False
        for pr in rounds:
            if len(pr) == 0:
                continue
            i, j = pr[:, 0], pr[:, 1]
            ui, uj = u[:, i], u[:, j]
            alpha = np.einsum("ij,ij->j", ui.conj(), ui).real
            beta = np.einsum("ij,ij->j", uj.conj(), uj).real
            gamma = np.einsum("ij,ij->j", ui.conj(), uj)
            g = np.abs(gamma)
            act = g > tol * np.sqrt(alpha * beta)
            if not np.any(act):
                continue
            rotated = True
            phase = np.where(g > 0, gamma / np.where(g > 0, g, 1.0), 1.0)
            zeta = np.where(act, (beta - alpha) / (2 * np.where(act, g, 1.0)), 0.0)
            t = np.sign(zeta) / (np.abs(zeta) + np.sqrt(1 + zeta * zeta))
            t = np.where(zeta == 0, 1.0, t)
            t = np.where(act, t, 0.0)
            c = 1 / np.sqrt(1 + t * t)
            s = c * t
            new_i = c * ui - s * np.conj(phase) * uj
            new_j = s * phase * ui + c * uj
            u[:, i] = new_i
            u[:, j] = new_j
        if not rotated:
            break
    sv = np.linalg.norm(u, axis=0)
    return np.sort(sv)[::-1]
