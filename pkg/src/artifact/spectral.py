"""Truncation spectra, the density of states and its logarithmic potential.

The density of states mu of h = u + u* + beta (v + v*) is built from periodic
approximants p/q of alpha.  Its potential

    Phi(z) = int log|z - t| dmu(t)

has the spectra of h(delta) as level sets Phi = log(beta delta).  G(z) is the
analytic continuation of beta^{-1} exp(int log(z - t) dmu(t)) from the real
axis to the right of the spectrum.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_banded
from scipy.spatial import cKDTree

from . import numlin
from .lattice_rep import default_reducer, h_diagonal
from .rotation_algebra import GOLDEN

# above this matrix size clouds use LAPACK; below it the own QR kernel
OWN_SOLVER_MAX = 161


def truncation_matrix(gamma: complex, delta: complex, x: complex, beta: float, N: int,
                      boundary: str = "open", alpha: float = GOLDEN) -> numlin.ComplexMatrix:
    """(2N+1)-square truncation of h_gamma(x delta), rows indexed n = -N..N."""
    if N < 3:
        raise ValueError("truncation needs N >= 3")
    n = np.arange(-N, N + 1)
    diag = h_diagonal(n, delta, x, beta, default_reducer(alpha))
    size = 2 * N + 1
    lower = np.full(size - 1, gamma, dtype=complex)
    upper = np.full(size - 1, 1 / gamma, dtype=complex)
    M = numlin.ComplexMatrix.tridiagonal(lower, diag, upper)
    if boundary == "open":
        return M
    if boundary != "periodic":
        raise ValueError(f"unknown boundary {boundary!r}")
    a = M.entries.copy()
    a[0, -1] = gamma
    a[-1, 0] = 1 / gamma
    return numlin.ComplexMatrix(a)


def eigenvector_centers(M: np.ndarray, eigs: np.ndarray, steps: int = 2, seed: int = 7) -> np.ndarray:
    """Mean index (0-based) of |v|^2 for approximate eigenvectors of a tridiagonal M."""
    n = M.shape[0]
    ab = np.zeros((3, n), dtype=complex)
    ab[0, 1:] = np.diag(M, 1)
    ab[1] = np.diag(M)
    ab[2, :-1] = np.diag(M, -1)
    rng = np.random.default_rng(seed)
    start = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    idx = np.arange(n)
    scale = np.abs(M).max()
    out = np.empty(len(eigs))
    for k, lam in enumerate(eigs):
        shifted = ab.copy()
        shifted[1] -= lam + 1e-13 * scale
        v = start
        for _ in range(steps):
            v = solve_banded((1, 1), shifted, v, check_finite=False)
            v /= np.linalg.norm(v)
        wgt = np.abs(v) ** 2
        out[k] = (idx * wgt).sum() / wgt.sum()
    return out


@dataclass
class Cloud:
    eigs: np.ndarray
    phase_index: np.ndarray
    centers: np.ndarray | None = None  # eigenvector centre as an index in [-N, N]
    N: int = 0

    def interior(self, collar: int = 5) -> np.ndarray:
        if self.centers is None:
            return self.eigs
        return self.eigs[np.abs(self.centers) < self.N - collar]


def spectrum_cloud(gamma: complex, delta: complex, beta: float, N: int, phases,
                   boundary: str = "open", solver: str = "auto", centers: bool = False,
                   alpha: float = GOLDEN) -> Cloud:
    """Union over phases x of the eigenvalues of the truncated h_gamma(x delta)."""
    phases = list(phases)
    if not phases:
        raise ValueError("need at least one phase")
    use_own = solver == "own" or (solver == "auto" and 2 * N + 1 <= OWN_SOLVER_MAX)
    eigs, pidx, cens = [], [], []
    for i, x in enumerate(phases):
        M = truncation_matrix(gamma, delta, x, beta, N, boundary, alpha)
        if use_own:
            e = numlin.hessenberg_eigenvalues(M)
        else:
            e = np.linalg.eigvals(M.entries)
        e = np.sort_complex(e)
        eigs.append(e)
        pidx.append(np.full(len(e), i))
        if centers:
            cens.append(eigenvector_centers(M.entries, e) - N)
    return Cloud(np.concatenate(eigs), np.concatenate(pidx),
                 np.concatenate(cens) if centers else None, N)


def unit_phases(count: int, offset: float = 0.0) -> np.ndarray:
    return np.exp(2j * np.pi * (np.arange(count) + offset) / count)


@dataclass
class SpectralMeasure:
    nodes: np.ndarray
    weights: np.ndarray
    bin_width: float = 0.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        order = np.argsort(self.nodes)
        self.nodes = np.asarray(self.nodes, float)[order]
        self.weights = np.asarray(self.weights, float)[order]
        if np.any(self.weights < 0):
            raise ValueError("negative weights")
        tot = self.weights.sum()
        if not np.isclose(tot, 1.0, atol=1e-12):
            raise ValueError(f"total mass {tot} != 1")

    def moment(self, k: int) -> float:
        return float(np.sum(self.weights * self.nodes ** k))

    def to_csv(self) -> str:
        lines = ["t,w"] + [f"{t!r},{w!r}" for t, w in zip(self.nodes.tolist(), self.weights.tolist())]
        return "\n".join(lines) + "\n"


def convergents(alpha: float = GOLDEN, count: int = 20) -> list[tuple[int, int]]:
    """Continued-fraction convergents p/q of alpha."""
    out = []
    h0, h1, k0, k1 = 0, 1, 1, 0
    x = alpha
    for _ in range(count):
        a = int(np.floor(x))
        h0, h1 = h1, a * h1 + h0
        k0, k1 = k1, a * k1 + k0
        out.append((h1, k1))
        frac = x - a
        if frac < 1e-14:
            break
        x = 1 / frac
    return out


def dos_eigenvalues(beta: float, p: int, q: int, phase_samples: int = 32, N: int | None = None) -> np.ndarray:
    """Eigenvalues of periodic rings of size N for the potential 2 beta cos(2 pi (p/q) n + theta)."""
    L = N if N is not None else 4 * q
    if L % q:
        raise ValueError("ring size must be a multiple of q")
    n = np.arange(L)
    out = []
    for th in np.arange(phase_samples) * (2 * np.pi / q) / phase_samples:
        H = np.diag(2 * beta * np.cos(2 * np.pi * p / q * n + th))
        H += np.diag(np.ones(L - 1), 1) + np.diag(np.ones(L - 1), -1)
        H[0, -1] += 1.0
        H[-1, 0] += 1.0
        out.append(np.linalg.eigvalsh(H))
    return np.concatenate(out)


def dos_measure(beta: float, p: int = 144, q: int = 233, phase_samples: int = 32,
                N: int | None = None, bins: int = 4000) -> SpectralMeasure:
    """Histogram the approximant eigenvalues into a normalized node/weight measure."""
    ev = dos_eigenvalues(beta, p, q, phase_samples, N)
    if ev.size == 0:
        raise ValueError("empty sample set")
    top = 2 * beta + 2
    counts, edges = np.histogram(ev, bins=bins, range=(-top, top))
    w = counts / counts.sum()
    c = 0.5 * (edges[1:] + edges[:-1])
    keep = w > 0
    return SpectralMeasure(c[keep], w[keep], float(edges[1] - edges[0]),
                           {"beta": beta, "p": p, "q": q, "phase_samples": phase_samples,
                            "N": N if N is not None else 4 * q, "bins": bins})


def log_potential(mu: SpectralMeasure, z, chunk: int = 512) -> np.ndarray:
    """Phi(z) = sum_k w_k log|z - t_k|; -inf where z hits a node exactly."""
    z = np.asarray(z, dtype=complex)
    flat = z.ravel()
    out = np.empty(flat.shape, dtype=float)
    for s in range(0, len(flat), chunk):
        d = np.abs(flat[s:s + chunk, None] - mu.nodes[None, :])
        with np.errstate(divide="ignore"):
            out[s:s + chunk] = (np.log(d) * mu.weights).sum(axis=1)
    return out.reshape(z.shape)


def potential_derivative(mu: SpectralMeasure, x: float) -> tuple[float, float]:
    """Phi'(x) and Phi''(x) for real x off the nodes."""
    d = x - mu.nodes
    return float(np.sum(mu.weights / d)), float(-np.sum(mu.weights / d ** 2))


# --- level curves -----------------------------------------------------------

@dataclass
class LevelCurve:
    level: float
    polylines: list
    tol: float = 0.0

    def vertices(self) -> np.ndarray:
        if not self.polylines:
            return np.zeros(0, complex)
        return np.concatenate([np.asarray(p) for p in self.polylines])

    def to_json(self) -> str:
        return json.dumps({"level": self.level, "tol": self.tol,
                           "polylines": [[[float(z.real), float(z.imag)] for z in p]
                                         for p in self.polylines]})


def _bisect_edges(f, a: np.ndarray, b: np.ndarray, fa: np.ndarray, tol: float, max_iter: int = 80):
    """Vectorised bisection for f = 0 on complex segments [a, b] with a sign change."""
    lo, hi = a.copy(), b.copy()
    flo = fa.copy()
    mid = 0.5 * (lo + hi)
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        done = np.abs(fm) < tol
        if np.all(done):
            break
        left = np.sign(fm) == np.sign(flo)
        lo = np.where(left & ~done, mid, lo)
        flo = np.where(left & ~done, fm, flo)
        hi = np.where(~left & ~done, mid, hi)
        if np.all(np.abs(hi - lo) < 1e-15):
            break
    return mid


def level_curve(mu: SpectralMeasure, level: float, bbox=(-8.0, 8.0, -6.0, 6.0),
                grid: tuple[int, int] = (321, 241), tol: float = 1e-9) -> LevelCurve:
    """Marching-squares contour of Phi - level, vertices refined by bisection."""
    x0, x1, y0, y1 = bbox
    nx, ny = grid
    xs = np.linspace(x0, x1, nx)
    ys = np.linspace(y0, y1, ny)
    Z = xs[None, :] + 1j * ys[:, None]
    F = log_potential(mu, Z) - level
    F = np.where(F == 0, 1e-300, F)
    pos = F > 0

    def f(z):
        return log_potential(mu, z) - level

    # horizontal edges (j, i)-(j, i+1) get id 2*(j*nx + i); vertical (j, i)-(j+1, i) id +1
    def hid(j, i):
        return 2 * (j * nx + i)

    def vid(j, i):
        return 2 * (j * nx + i) + 1

    segs = []
    for j in range(ny - 1):
        for i in range(nx - 1):
            c = (pos[j, i], pos[j, i + 1], pos[j + 1, i + 1], pos[j + 1, i])
            if all(c) or not any(c):
                continue
            e = [hid(j, i), vid(j, i + 1), hid(j + 1, i), vid(j, i)]  # bottom, right, top, left
            crossing = [k for k in range(4) if c[k] != c[(k + 1) % 4]]
            if len(crossing) == 2:
                segs.append((e[crossing[0]], e[crossing[1]]))
            else:
                centre = 0.25 * (F[j, i] + F[j, i + 1] + F[j + 1, i + 1] + F[j + 1, i])
                if (centre > 0) == c[0]:
                    segs += [(e[0], e[1]), (e[2], e[3])]
                else:
                    segs += [(e[3], e[0]), (e[1], e[2])]
    if not segs:
        raise ValueError("empty contour in the bounding box")
    ids = np.unique(np.array(segs).ravel())
    cell = ids // 2
    jj, ii = cell // nx, cell % nx
    vert = ids % 2 == 1
    a = Z[jj, ii]
    b = np.where(vert, Z[np.minimum(jj + 1, ny - 1), ii], Z[jj, np.minimum(ii + 1, nx - 1)])
    fa = F[jj, ii]
    fb = np.where(vert, F[np.minimum(jj + 1, ny - 1), ii], F[jj, np.minimum(ii + 1, nx - 1)])
    t = fa / (fa - fb)
    guess_lo = a + np.clip(t - 0.05, 0, 1) * (b - a)
    guess_hi = a + np.clip(t + 0.05, 0, 1) * (b - a)
    fl, fh = f(guess_lo), f(guess_hi)
    ok = np.sign(fl) != np.sign(fh)
    lo = np.where(ok, guess_lo, a)
    hi = np.where(ok, guess_hi, b)
    flo = np.where(ok, fl, fa)
    pts = _bisect_edges(f, lo, hi, flo, tol)
    point = dict(zip(ids.tolist(), pts))

    adj: dict[int, list[int]] = {}
    for s, (p, q) in enumerate(segs):
        adj.setdefault(p, []).append(s)
        adj.setdefault(q, []).append(s)
    used = np.zeros(len(segs), bool)
    lines = []
    for s0 in range(len(segs)):
        if used[s0]:
            continue
        used[s0] = True
        chain = [segs[s0][0], segs[s0][1]]
        for direction in (1, -1):
            while True:
                end = chain[-1] if direction == 1 else chain[0]
                nxt = [s for s in adj[end] if not used[s]]
                if not nxt:
                    break
                s = nxt[0]
                used[s] = True
                p, q = segs[s]
                other = q if p == end else p
                if direction == 1:
                    chain.append(other)
                else:
                    chain.insert(0, other)
        lines.append(np.array([point[e] for e in chain]))
    return LevelCurve(level, lines, tol)


# --- gaps and critical points ---------------------------------------------

def find_gaps(mu: SpectralMeasure, min_bins: int = 3, min_width: float = 0.0) -> list[tuple[float, float]]:
    """Runs of empty histogram bins longer than min_bins, as (left node, right node)."""
    if mu.bin_width <= 0:
        raise ValueError("measure has no bin width")
    d = np.diff(mu.nodes)
    empty = np.rint(d / mu.bin_width).astype(int) - 1
    out = []
    for k in np.nonzero(empty > min_bins)[0]:
        a, b = float(mu.nodes[k]), float(mu.nodes[k + 1])
        if b - a >= min_width:
            out.append((a, b))
    return out


def critical_points(mu: SpectralMeasure, gaps, tol: float = 1e-12, max_iter: int = 100) -> list[float]:
    """Zero of Phi' in each gap by Newton with a bisection safeguard."""
    roots = []
    for a, b in gaps:
        lo, hi = a + 1e-12 * (b - a), b - 1e-12 * (b - a)
        flo, fhi = potential_derivative(mu, lo)[0], potential_derivative(mu, hi)[0]
        if np.sign(flo) == np.sign(fhi):
            raise ValueError(f"no sign change of Phi' in gap ({a}, {b})")
        x = 0.5 * (a + b)
        for _ in range(max_iter):
            f, df = potential_derivative(mu, x)
            if np.sign(f) == np.sign(flo):
                lo = x
            else:
                hi = x
            step = f / df
            xn = x - step
            if not (lo < xn < hi):
                xn = 0.5 * (lo + hi)
            if abs(xn - x) < tol * max(1.0, abs(x)):
                x = xn
                break
            x = xn
        else:
            raise ValueError(f"Newton did not converge in gap ({a}, {b})")
        roots.append(float(x))
    return roots


# --- G by path continuation -----------------------------------------------

@dataclass
class PathAnchor:
    path: np.ndarray  # complex polyline, path[0] real and right of the nodes

    def __post_init__(self):
        self.path = np.asarray(self.path, dtype=complex)


def straight_path(z0: float, z_end: complex, via_imag: float | None = None) -> PathAnchor:
    """Anchor -> (optional vertical detour) -> z_end, as a polyline."""
    pts = [complex(z0)]
    if via_imag is not None:
        pts += [complex(z0, via_imag), complex(z_end.real, via_imag)]
    pts.append(complex(z_end))
    return PathAnchor(np.array(pts))


def _walk_logs(mu: SpectralMeasure, path: np.ndarray, guard: float) -> np.ndarray:
    """int log(z - t) dmu(t) continued along the polyline, at each vertex.

    Steps are at most half the distance to the nearest node, so every
    per-node argument increment stays below pi/6 and the principal value of
    the increment is the continued one.
    """
    nodes, w = mu.nodes, mu.weights
    z = path[0]
    if not (z.imag == 0 and z.real > nodes.max()):
        raise ValueError("path must start on the real axis right of the nodes")
    d = z - nodes
    ang = np.angle(d)
    out = [complex(np.log(np.abs(d)) @ w, ang @ w)]
    for target in path[1:]:
        while z != target:
            dist = np.abs(z - nodes).min()
            if dist < guard:
                raise ValueError(f"path passes within {dist:.2e} of a node")
            step = target - z
            if abs(step) > 0.5 * dist:
                step = step / abs(step) * 0.5 * dist
                zn = z + step
            else:
                zn = target
            dn = zn - nodes
            ang = ang + np.angle(dn / (z - nodes))
            z = zn
        dist = np.abs(z - nodes).min()
        if dist < guard:
            raise ValueError(f"path ends within {dist:.2e} of a node")
        out.append(complex(np.log(np.abs(z - nodes)) @ w, ang @ w))
    return np.array(out)


def G_along(mu: SpectralMeasure, beta: float, anchor: PathAnchor, guard: float = 1e-6) -> np.ndarray:
    """G at every vertex of the anchor path."""
    return np.exp(_walk_logs(mu, anchor.path, guard)) / beta


def G_value(mu: SpectralMeasure, beta: float, anchor: PathAnchor, guard: float = 1e-6) -> complex:
    """beta^{-1} exp(int log(z - t) dmu) continued to the end of the path."""
    return complex(G_along(mu, beta, anchor, guard)[-1])


# --- constancy ---------------------------------------------------------------

def directed_distance(a: np.ndarray, b: np.ndarray) -> float:
    """max over a of the distance to the nearest point of b."""
    if len(a) == 0:
        return 0.0
    tree = cKDTree(np.c_[b.real, b.imag])
    d, _ = tree.query(np.c_[a.real, a.imag])
    return float(d.max())


def spectrum_constancy_check(beta: float, delta: float, gamma_list, N: int = 200, phases=None,
                             boundary: str = "open", collar: int = 5, tol: float = 0.05) -> dict:
    """Pairwise distances between clouds for several gamma.

    The distance from cloud A to cloud B uses the interior eigenvalues of A
    (eigenvectors centred more than ``collar`` sites from the edge) and all
    of B; the reported value for a pair is the larger of the two directions.
    """
    phases = unit_phases(16) if phases is None else phases
    clouds = {g: spectrum_cloud(g, delta, beta, N, phases, boundary, centers=True)
              for g in gamma_list}
    pairs = {}
    gl = list(gamma_list)
    for i, g1 in enumerate(gl):
        for g2 in gl[i + 1:]:
            c1, c2 = clouds[g1], clouds[g2]
            d = max(directed_distance(c1.interior(collar), c2.eigs),
                    directed_distance(c2.interior(collar), c1.eigs))
            pairs[f"{g1}|{g2}"] = d
    worst = max(pairs.values(), default=0.0)
    return {"beta": beta, "delta": delta, "gammas": gl, "N": N, "boundary": boundary,
            "pairs": pairs, "max": worst, "tol": tol, "passed": worst < tol}
