"""Effective one-dimensional Dirac operator

    D(k) = (3/2) [[0, -i(d + kappa)], [-i(d - kappa), 0]],
    kappa(X) = k/3 - (t1/2) d'(X),

its closed-form zero modes and Landau levels, and a staggered-grid
discretisation that keeps the chiral symmetry exact.

Discretisation
--------------
A and B unknowns alternate on nodes with spacing Delta = W / n_cells, so each
component lives on its own grid of spacing h = 2 Delta.  kappa is sampled at
the A-B bond midpoints.  The end nodes are chosen so that the lattice kernel
reproduces the continuum index: the left end carries A when kappa(-W) > 0 and
B otherwise, the right end carries B when kappa(W) > 0 and A otherwise.  Equal
end types give 2 n_cells + 1 nodes on -W + k Delta, unequal types give
2 n_cells nodes on -W + (k + 1/2) Delta.  A B-B (or A-A) chain has exactly one
zero eigenvalue, which sits on the majority sublattice.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.integrate import cumulative_simpson, simpson
from scipy.linalg import eigh_tridiagonal

from .deformation import DEFAULT_T1, UnidirectionalProfile

NORM2 = np.sqrt(3.0) / 2.0
A_NODE, B_NODE = 0, 1


@dataclass(frozen=True)
class KappaProfile:
    k_parallel: float
    t1: float
    d_prime: Callable
    d_infinity: Optional[float] = None
    name: str = "custom"

    @classmethod
    def from_profile(cls, profile: UnidirectionalProfile, k_parallel: float = 0.0, t1: float = DEFAULT_T1):
        return cls(float(k_parallel), float(t1), profile.d_prime, profile.d_infinity, profile.name)

    def kappa(self, X):
        return self.k_parallel / 3.0 - 0.5 * self.t1 * np.asarray(self.d_prime(np.asarray(X, dtype=float)))

    @property
    def kappa_plus(self) -> Optional[float]:
        if self.d_infinity is None:
            return None
        return self.k_parallel / 3.0 - 0.5 * self.t1 * self.d_infinity

    @property
    def kappa_minus(self) -> Optional[float]:
        if self.d_infinity is None:
            return None
        return self.k_parallel / 3.0 + 0.5 * self.t1 * self.d_infinity

    def end_signs(self, X_left: float, X_right: float):
        """Signs of kappa at -inf and +inf (limits when known, else sampled)."""
        if self.d_infinity is not None:
            return np.sign(self.kappa_minus), np.sign(self.kappa_plus)
        return float(np.sign(self.kappa(X_left))), float(np.sign(self.kappa(X_right)))


def essential_gap(profile: KappaProfile) -> float:
    """a = (3/2) min(|kappa_+|, |kappa_-|)."""
    if profile.d_infinity is None:
        raise ValueError("essential gap needs the asymptotic slope d_infinity")
    return 1.5 * min(abs(profile.kappa_plus), abs(profile.kappa_minus))


def l2_norm_sq(values, grid) -> float:
    return float(simpson(np.abs(np.asarray(values)) ** 2, x=np.asarray(grid, dtype=float)))


def zero_mode_closed_form(profile: KappaProfile, grid):
    """Bounded zero mode on a grid: ('B', exp(-int_0^X kappa)) when
    kappa_+ > 0 > kappa_-, else ('A', exp(+int_0^X kappa)); L^2 norm^2 = sqrt3/2."""
    x = np.asarray(grid, dtype=float)
    sm, sp = profile.end_signs(x[0], x[-1])
    if sm * sp >= 0:
        raise ValueError("kappa does not change sign; no bounded zero mode")
    F = cumulative_simpson(profile.kappa(x), x=x, initial=0.0)
    F = F - np.interp(0.0, x, F)
    if sp > 0:
        comp, expo = "B", -F
    else:
        comp, expo = "A", F
    v = np.exp(expo - expo.max())
    v *= np.sqrt(NORM2 / l2_norm_sq(v, x))
    return comp, v


def landau_levels(t1: float, s_max: int):
    """{+-(3 sqrt2 / 2) sqrt(|t1| s) : s = 0..s_max}, sorted, zero once."""
    if s_max < 0:
        raise ValueError("s_max must be >= 0")
    pos = 1.5 * np.sqrt(2.0 * abs(t1) * np.arange(1, s_max + 1))
    return np.concatenate([-pos[::-1], [0.0], pos])


def hermite_functions(s_max: int, xi):
    """Orthonormal Hermite functions phi_0..phi_s_max at xi (stable recursion)."""
    xi = np.asarray(xi, dtype=float)
    out = np.zeros((s_max + 1,) + xi.shape)
    out[0] = np.pi ** -0.25 * np.exp(-0.5 * xi * xi)
    if s_max >= 1:
        out[1] = np.sqrt(2.0) * xi * out[0]
    for n in range(1, s_max):
        out[n + 1] = np.sqrt(2.0 / (n + 1)) * xi * out[n] - np.sqrt(n / (n + 1)) * out[n - 1]
    return out


def landau_eigenfunction(s: int, branch: str, k_parallel: float, t1: float, grid):
    """Spinor (A, B) of the quadratic-profile operator at level s.

    kappa = c (X - X0) with c = -t1, X0 = -k/(3c).  For c > 0 the level
    +-(3/2) sqrt(2|c| s) is (-+i phi_{s-1}, phi_s); for c < 0 it is
    (phi_s, -+i phi_{s-1}).  Normalised to sqrt3/2 on the grid.
    """
    if s < 0:
        raise ValueError("s must be >= 0")
    if t1 == 0:
        raise ValueError("t1 must be nonzero")
    if branch not in ("+", "-"):
        raise ValueError("branch must be '+' or '-'")
    x = np.asarray(grid, dtype=float)
    c = -float(t1)
    X0 = -k_parallel / (3.0 * c)
    xi = np.sqrt(abs(c)) * (x - X0)
    phi = hermite_functions(max(s, 1), xi)
    sgn = 1.0 if branch == "+" else -1.0
    major = phi[s].astype(complex)
    minor = np.zeros_like(major) if s == 0 else (-sgn * 1j) * phi[s - 1]
    if c > 0:
        A, B = minor, major
    else:
        A, B = major, minor
    nrm = l2_norm_sq(A, x) + l2_norm_sq(B, x)
    f = np.sqrt(NORM2 / nrm)
    return A * f, B * f


# ---------------------------------------------------------- discretisation

@dataclass
class DiracDiscretization:
    half_width: float
    n_cells: int
    x: np.ndarray
    types: np.ndarray
    off: np.ndarray               # off[k] = H[k+1, k]
    corner: complex = 0.0         # H[0, N-1] for periodic rings
    periodic: bool = False
    profile: Optional[KappaProfile] = None

    @property
    def dim(self) -> int:
        return len(self.x)

    @property
    def spacing(self) -> float:
        """Node spacing Delta (each component has spacing h = 2 Delta)."""
        return self.half_width / self.n_cells

    @property
    def h(self) -> float:
        return 2.0 * self.spacing

    @property
    def matrix(self) -> np.ndarray:
        n = self.dim
        H = np.zeros((n, n), dtype=complex)
        k = np.arange(n - 1)
        H[k + 1, k] = self.off
        H[k, k + 1] = np.conj(self.off)
        if self.periodic:
            H[0, n - 1] = self.corner
            H[n - 1, 0] = np.conj(self.corner)
        return H

    def apply(self, v) -> np.ndarray:
        v = np.asarray(v, dtype=complex)
        out = np.zeros_like(v)
        out[1:] += self.off * v[:-1]
        out[:-1] += np.conj(self.off) * v[1:]
        if self.periodic:
            out[0] += self.corner * v[-1]
            out[-1] += np.conj(self.corner) * v[0]
        return out

    def chiral_signs(self) -> np.ndarray:
        return np.where(self.types == A_NODE, 1.0, -1.0)

    def sample(self, A_fn, B_fn) -> np.ndarray:
        """Node vector from component functions (A on A nodes, B on B nodes)."""
        v = np.zeros(self.dim, dtype=complex)
        a = self.types == A_NODE
        v[a] = A_fn(self.x[a])
        v[~a] = B_fn(self.x[~a])
        return v


def _coupling(kap_mid, h, b_right_of_a):
    """H[a, b] for an A node a and its neighbour b."""
    if b_right_of_a:
        return 1.5 * (-1j) * (1.0 / h + 0.5 * kap_mid)
    return 1.5 * (-1j) * (-1.0 / h + 0.5 * kap_mid)


def discretize(profile: KappaProfile, half_width: float, n_cells: int, periodic: bool = False) -> DiracDiscretization:
    if not half_width > 0:
        raise ValueError("half_width must be positive")
    if int(n_cells) != n_cells or n_cells < 16:
        raise ValueError("n_cells must be an integer >= 16")
    W = float(half_width)
    n = int(n_cells)
    dl = W / n
    h = 2 * dl
    if periodic:
        x = -W + dl * np.arange(2 * n)
        types = np.arange(2 * n) % 2
    else:
        kl = float(profile.kappa(-W))
        kr = float(profile.kappa(W))
        left = A_NODE if kl > 0 else B_NODE
        right = B_NODE if kr > 0 else A_NODE
        if left == right:
            x = -W + dl * np.arange(2 * n + 1)
        else:
            x = -W + dl * (np.arange(2 * n) + 0.5)
        types = (left + np.arange(len(x))) % 2
    mid = 0.5 * (x[:-1] + x[1:])
    km = np.asarray(profile.kappa(mid), dtype=float)
    # node k and k+1: if k is A then b = k+1 lies to the right of a
    a_left = types[:-1] == A_NODE
    hab = np.where(a_left, 1.5 * (-1j) * (1.0 / h + 0.5 * km), 1.5 * (-1j) * (-1.0 / h + 0.5 * km))
    # off[k] = H[k+1, k]: equals conj(H[a,b]) when k is A, else H[a,b] with a = k+1
    off = np.where(a_left, np.conj(hab), hab)
    corner = 0.0
    if periodic:
        # the first node (A) couples to the last node (B) through the wrap; b lies to its left
        kw = float(np.ravel(profile.kappa(np.array([x[-1] + 0.5 * dl])))[0])
        corner = _coupling(kw, h, False)          # H[a=0, b=N-1]
    return DiracDiscretization(W, n, x, types, off, corner, periodic, profile)


def _tridiag_eig(disc: DiracDiscretization, **select):
    """Eigenpairs of the open chain through a diagonal phase change to a real tridiagonal."""
    mag = np.abs(disc.off)
    ph = np.ones(disc.dim, dtype=complex)
    safe = np.where(mag > 0, disc.off / np.where(mag > 0, mag, 1.0), 1.0)
    ph[1:] = np.cumprod(safe)
    vals, vecs = eigh_tridiagonal(np.zeros(disc.dim), mag, **select)
    return vals, vecs * ph[:, None]


def eigenvalues(disc: DiracDiscretization) -> np.ndarray:
    if disc.periodic:
        return np.linalg.eigvalsh(disc.matrix)
    return eigh_tridiagonal(np.zeros(disc.dim), np.abs(disc.off), eigvals_only=True)


# ------------------------------------------------------------ spectra

@dataclass
class Envelope:
    """Continuum spinor (A, B) on a uniform grid, ||.||^2 = sqrt3/2."""

    X: np.ndarray
    A: np.ndarray
    B: np.ndarray
    energy: float = 0.0
    k_parallel: float = 0.0
    source: str = ""

    @property
    def dx(self) -> float:
        return float(self.X[1] - self.X[0])

    def norm_sq(self) -> float:
        return self.dx * float(np.sum(np.abs(self.A) ** 2 + np.abs(self.B) ** 2))

    def normalized(self) -> "Envelope":
        f = np.sqrt(NORM2 / self.norm_sq())
        return Envelope(self.X, self.A * f, self.B * f, self.energy, self.k_parallel, self.source)

    def times(self, c: complex) -> "Envelope":
        return Envelope(self.X, self.A * c, self.B * c, self.energy, self.k_parallel, self.source)

    def __call__(self, X1):
        """Cubic-spline values (A, B) at X1; zero outside the grid."""
        from scipy.interpolate import CubicSpline

        X1 = np.asarray(X1, dtype=float)
        out = []
        for comp in (self.A, self.B):
            re = CubicSpline(self.X, comp.real)(X1)
            im = CubicSpline(self.X, comp.imag)(X1)
            v = re + 1j * im
            out.append(np.where((X1 >= self.X[0]) & (X1 <= self.X[-1]), v, 0.0))
        return out[0], out[1]

    def edge_fraction(self) -> float:
        """Largest |component| at the two ends relative to the peak."""
        peak = max(np.abs(self.A).max(), np.abs(self.B).max())
        ends = max(abs(self.A[0]), abs(self.A[-1]), abs(self.B[0]), abs(self.B[-1]))
        return float(ends / peak) if peak > 0 else 0.0


def fourier_shift(f, shift, dx):
    """Values of the band-limited periodic interpolant of f at x + shift."""
    k = 2 * np.pi * np.fft.fftfreq(len(f), dx)
    return np.fft.ifft(np.fft.fft(f) * np.exp(1j * k * shift))


def node_vector_to_envelope(disc: DiracDiscretization, v, energy=0.0, k_parallel=0.0, source="") -> Envelope:
    """Map a node vector to both components on the B-node grid (or A grid if
    there are no B nodes) by spectral half-step shifts."""
    v = np.asarray(v, dtype=complex)
    a = disc.types == A_NODE
    xa, xb = disc.x[a], disc.x[~a]
    h, dl = disc.h, disc.spacing
    T = xb if len(xb) >= len(xa) else xa
    vals = {}
    for mask, xs in ((a, xa), (~a, xb)):
        comp = v[mask]
        if len(xs) == len(T) and np.allclose(xs, T):
            vals[id(xs)] = comp
            continue
        o = xs[0] - T[0]
        o = o - h * np.round(o / h)
        if abs(o) < 1e-12 * h:
            o = 0.0
        ext = np.zeros(len(T), dtype=complex)
        idx = np.rint((xs - (T[0] + o)) / h).astype(int)
        keep = (idx >= 0) & (idx < len(T))
        ext[idx[keep]] = comp[keep]
        vals[id(xs)] = fourier_shift(ext, -o, h) if o != 0 else ext
    env = Envelope(T.copy(), vals[id(xa)], vals[id(xb)], float(energy), float(k_parallel), source)
    return env.normalized()


@dataclass
class DiracSpectrumResult:
    gap_edge_a: float
    in_gap_eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    disc: DiracDiscretization = field(repr=False)

    def components(self, i):
        """(xA, A, xB, B) grid functions of eigenvector i, L^2 norm^2 sqrt3/2."""
        v = self.eigenvectors[:, i]
        a = self.disc.types == A_NODE
        f = np.sqrt(NORM2 / (self.disc.h * np.sum(np.abs(v) ** 2)))
        return self.disc.x[a], v[a] * f, self.disc.x[~a], v[~a] * f

    def envelope(self, i) -> Envelope:
        prof = self.disc.profile
        return node_vector_to_envelope(
            self.disc, self.eigenvectors[:, i], self.in_gap_eigenvalues[i],
            prof.k_parallel if prof else 0.0, source=f"dirac eigenpair {i}")

    def index_of(self, E) -> int:
        return int(np.argmin(np.abs(self.in_gap_eigenvalues - E)))


def in_gap_spectrum(disc: DiracDiscretization, profile: Optional[KappaProfile] = None,
                    max_count: Optional[int] = None, margin: float = 0.05,
                    pair_tol: float = 1e-8) -> DiracSpectrumResult:
    """Eigenpairs strictly inside the essential gap (shrunk by the margin).

    Without asymptotic limits (quadratic profiles) the gap is infinite and
    the max_count smallest-magnitude levels are returned instead.
    """
    profile = profile or disc.profile
    a = np.inf
    if profile is not None and profile.d_infinity is not None:
        a = essential_gap(profile)
    if disc.periodic:
        vals, vecs = np.linalg.eigh(disc.matrix)
        lim = (1 - margin) * a
        keep = np.abs(vals) < lim
        if max_count is not None:
            keep &= np.isin(np.arange(len(vals)), np.argsort(np.abs(vals))[:max_count])
        vals, vecs = vals[keep], vecs[:, keep]
    elif np.isfinite(a):
        lim = (1 - margin) * a
        if lim <= 0:
            vals, vecs = np.zeros(0), np.zeros((disc.dim, 0), complex)
        else:
            vals, vecs = _tridiag_eig(disc, select="v", select_range=(-lim, lim))
        if max_count is not None and len(vals) > max_count:
            keep = np.sort(np.argsort(np.abs(vals), kind="stable")[:max_count])
            vals, vecs = vals[keep], vecs[:, keep]
    else:
        m = 7 if max_count is None else int(max_count)
        N = disc.dim
        half = (m + 1) // 2
        if N % 2:
            lo, hi = N // 2 - (m // 2), N // 2 + (m // 2)
        else:
            lo, hi = N // 2 - half, N // 2 + half - 1
        lo, hi = max(lo, 0), min(hi, N - 1)
        vals, vecs = _tridiag_eig(disc, select="i", select_range=(lo, hi))
    scale = max(1.0, float(np.abs(vals).max()) if len(vals) else 1.0)
    if len(vals) and np.abs(np.sort(vals) + np.sort(vals)[::-1]).max() > pair_tol * scale:
        raise RuntimeError("in-gap spectrum is not symmetric about zero")
    return DiracSpectrumResult(float(a), vals, vecs, disc)


def tail_decay_rates(x, values, window=(5.0, 15.0), floor=1e-250):
    """Exponential rates (r_minus, r_plus) of |values| ~ exp(-r |X|) fitted on
    X in [-window[1], -window[0]] and [window[0], window[1]]."""
    x = np.asarray(x, dtype=float)
    mag = np.abs(np.asarray(values))
    out = []
    for sgn in (-1.0, 1.0):
        sel = (sgn * x >= window[0]) & (sgn * x <= window[1]) & (mag > floor)
        if sel.sum() < 8:
            raise ValueError("too few tail samples above the floor")
        slope = np.polyfit(x[sel], np.log(mag[sel]), 1)[0]
        out.append(-sgn * slope)
    return tuple(out)
