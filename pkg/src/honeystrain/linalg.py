"""Deterministic Hermitian eigensolvers.

Dense path   complex Householder reduction to a real symmetric tridiagonal
             matrix followed by implicit-shift QL, optionally accumulating
             eigenvectors.
Band path    Givens bulge chasing reduces a Hermitian band matrix to
             tridiagonal form in O(n^2 kd) work; eigenvalues then come from
             the same QL iteration.  Selected eigenvectors are recovered by
             block inverse iteration on a pivoted band LU factorisation,
             followed by a Rayleigh-Ritz step inside each eigenvalue cluster.

Band matrices are passed in lower storage: band[r, j] = H[j + r, j] for
0 <= r <= kd.  The kernels release the GIL so q-sweeps can run in threads.
"""
from __future__ import annotations

import numpy as np
from numba import njit


class EigenFailure(RuntimeError):
    """Raised when the QL iteration does not converge."""

    def __init__(self, index: int, msg: str = ""):
        self.index = index
        super().__init__(msg or f"QL iteration failed to converge at eigenvalue index {index}")


# ------------------------------------------------------------------- QL

@njit(cache=True, nogil=True)
def _tql(d, e, z, want):
    """Implicit QL on the symmetric tridiagonal (d, e); e[i] couples i and i+1.

    Returns -1 on success or the index l that exhausted the sweep budget.
    z columns are rotated in place when want is True.
    """
    n = d.shape[0]
    if n == 0:
        return -1
    budget = 30 * n
    used = 0
    anorm = 0.0
    for i in range(n):
        t = abs(d[i]) + abs(e[i])
        if t > anorm:
            anorm = t
    nrow = z.shape[0]
    for l in range(n):
        while True:
            m = l
            while m < n - 1:
                dd = abs(d[m]) + abs(d[m + 1])
                if abs(e[m]) + dd == dd or abs(e[m]) + anorm == anorm:
                    break
                m += 1
            if m == l:
                break
            used += 1
            if used > budget:
                return l
            g = (d[l + 1] - d[l]) / (2.0 * e[l])
            r = np.hypot(g, 1.0)
            g = d[m] - d[l] + e[l] / (g + (r if g >= 0.0 else -r))
            s = 1.0
            c = 1.0
            p = 0.0
            i = m - 1
            early = False
            while i >= l:
                f = s * e[i]
                b = c * e[i]
                r = np.hypot(f, g)
                e[i + 1] = r
                if r == 0.0:
                    d[i + 1] -= p
                    e[m] = 0.0
                    early = True
                    break
                s = f / r
                c = g / r
                g = d[i + 1] - p
                r = (d[i] - g) * s + 2.0 * c * b
                p = s * r
                d[i + 1] = g + p
                g = c * r - b
                if want:
                    for k in range(nrow):
                        f2 = z[k, i + 1]
                        z[k, i + 1] = s * z[k, i] + c * f2
                        z[k, i] = c * z[k, i] - s * f2
                i -= 1
            if early:
                continue
            d[l] -= p
            e[l] = g
            e[m] = 0.0
    return -1


# ------------------------------------------------------------ Householder

@njit(cache=True, nogil=True)
def _householder(A, want):
    """Reduce Hermitian A (overwritten) to tridiagonal form.

    Returns (d, e_complex, Q) with A_in = Q T Q^H, T having diagonal d and
    subdiagonal e_complex.
    """
    n = A.shape[0]
    Q = np.eye(n, dtype=np.complex128) if want else np.zeros((1, 1), dtype=np.complex128)
    for k in range(n - 2):
        m = n - k - 1
        alpha = A[k + 1, k]
        xnorm2 = 0.0
        for i in range(k + 2, n):
            xnorm2 += A[i, k].real ** 2 + A[i, k].imag ** 2
        if xnorm2 == 0.0 and alpha.imag == 0.0:
            continue
        beta = np.sqrt(alpha.real ** 2 + alpha.imag ** 2 + xnorm2)
        if alpha.real >= 0.0:
            beta = -beta
        tau = complex((beta - alpha.real) / beta, -alpha.imag / beta)
        scale = 1.0 / (alpha - beta)
        v = np.empty(m, dtype=np.complex128)
        v[0] = 1.0
        for i in range(1, m):
            v[i] = A[k + 1 + i, k] * scale
        # p = B v on the trailing block
        p = np.zeros(m, dtype=np.complex128)
        for i in range(m):
            acc = 0j
            for j in range(m):
                acc += A[k + 1 + i, k + 1 + j] * v[j]
            p[i] = acc
        gamma = 0.0
        for i in range(m):
            gamma += (v[i].conjugate() * p[i]).real
        tau2 = tau.real ** 2 + tau.imag ** 2
        w = np.empty(m, dtype=np.complex128)
        for i in range(m):
            w[i] = tau * p[i] - 0.5 * tau2 * gamma * v[i]
        for i in range(m):
            vi = v[i]
            wi = w[i]
            for j in range(m):
                A[k + 1 + i, k + 1 + j] -= vi * w[j].conjugate() + wi * v[j].conjugate()
        A[k + 1, k] = beta
        A[k, k + 1] = beta
        for i in range(k + 2, n):
            A[i, k] = 0.0
            A[k, i] = 0.0
        if want:
            for r in range(n):
                acc = 0j
                for j in range(m):
                    acc += Q[r, k + 1 + j] * v[j]
                acc *= tau
                for j in range(m):
                    Q[r, k + 1 + j] -= acc * v[j].conjugate()
    d = np.empty(n)
    e = np.zeros(n, dtype=np.complex128)
    for i in range(n):
        d[i] = A[i, i].real
    for i in range(n - 1):
        e[i] = A[i + 1, i]
    return d, e, Q


@njit(cache=True, nogil=True)
def _real_phase(e):
    """Diagonal phases D with D^H T D real; returns (|e|, D)."""
    n = e.shape[0]
    D = np.ones(n, dtype=np.complex128)
    er = np.zeros(n)
    for k in range(n - 1):
        a = abs(e[k])
        er[k] = a
        if a > 0.0:
            D[k + 1] = D[k] * e[k] / a
        else:
            D[k + 1] = D[k]
    return er, D


# ---------------------------------------------------------- band reduction

@njit(cache=True, nogil=True)
def _band_to_tridiag(band, kd):
    """Givens bulge chasing on a Hermitian band matrix in lower storage."""
    n = band.shape[1]
    w = kd + 1
    F = np.zeros((2 * w + 1, n), dtype=np.complex128)
    for r in range(kd + 1):
        for j in range(n - r):
            F[w + r, j] = band[r, j]
            F[w - r, j + r] = band[r, j].conjugate()
    for j in range(n - 2):
        top = j + kd
        if top > n - 1:
            top = n - 1
        for i in range(top, j + 1, -1):
            if F[w + i - j, j] == 0:
                continue
            p = i - 1
            col = j
            while True:
                a = F[w + p - col, col]
                b = F[w + p + 1 - col, col]
                aa = abs(a)
                r = np.hypot(aa, abs(b))
                if r == 0.0:
                    break
                if aa == 0.0:
                    c = 0.0
                    s = 1.0 + 0j
                else:
                    c = aa / r
                    s = (a / aa) * b.conjugate() / r
                lo = p - kd
                if lo < 0:
                    lo = 0
                hi = p + 1 + kd
                if hi > n - 1:
                    hi = n - 1
                for k in range(lo, hi + 1):
                    x = F[w + p - k, k]
                    y = F[w + p + 1 - k, k]
                    F[w + p - k, k] = c * x + s * y
                    F[w + p + 1 - k, k] = -s.conjugate() * x + c * y
                for k in range(lo, hi + 1):
                    x = F[w + k - p, p]
                    y = F[w + k - p - 1, p + 1]
                    F[w + k - p, p] = c * x + s.conjugate() * y
                    F[w + k - p - 1, p + 1] = -s * x + c * y
                F[w + p + 1 - col, col] = 0.0
                F[w + col - p - 1, p + 1] = 0.0
                nxt = p + 1 + kd
                if nxt >= n:
                    break
                if F[w + nxt - p, p] == 0:
                    break
                col = p
                p = nxt - 1
    d = np.empty(n)
    e = np.zeros(n, dtype=np.complex128)
    for i in range(n):
        d[i] = F[w, i].real
    for i in range(n - 1):
        e[i] = F[w + 1, i]
    return d, e


# ------------------------------------------------------- band LU / solves

@njit(cache=True, nogil=True)
def _band_lu(band, kd, sigma, tiny):
    """Pivoted LU of H - sigma I.  U rows hold columns [i-kd, i+2kd]."""
    n = band.shape[1]
    ww = 3 * kd + 1
    U = np.zeros((n, ww), dtype=np.complex128)
    Lm = np.zeros((n, kd), dtype=np.complex128)
    piv = np.arange(n)
    for r in range(kd + 1):
        for j in range(n - r):
            U[j + r, kd - r] = band[r, j]
            if r > 0:
                U[j, kd + r] = band[r, j].conjugate()
    for i in range(n):
        U[i, kd] -= sigma
    for i in range(n):
        best = i
        mx = abs(U[i, kd])
        last = i + kd
        if last > n - 1:
            last = n - 1
        for r in range(i + 1, last + 1):
            v = abs(U[r, i - r + kd])
            if v > mx:
                mx = v
                best = r
        piv[i] = best
        jend = i + 2 * kd
        if jend > n - 1:
            jend = n - 1
        if best != i:
            for j in range(i, jend + 1):
                t = U[i, j - i + kd]
                U[i, j - i + kd] = U[best, j - best + kd]
                U[best, j - best + kd] = t
        if abs(U[i, kd]) < tiny:
            U[i, kd] = tiny
        piv_val = U[i, kd]
        for r in range(i + 1, last + 1):
            mlt = U[r, i - r + kd] / piv_val
            Lm[i, r - i - 1] = mlt
            if mlt != 0:
                for j in range(i + 1, jend + 1):
                    U[r, j - r + kd] -= mlt * U[i, j - i + kd]
            U[r, i - r + kd] = 0.0
    return U, Lm, piv


@njit(cache=True, nogil=True)
def _band_lu_solve(U, Lm, piv, kd, B):
    n = U.shape[0]
    X = B.copy()
    ncol = X.shape[1]
    for i in range(n):
        p = piv[i]
        if p != i:
            for c in range(ncol):
                t = X[i, c]
                X[i, c] = X[p, c]
                X[p, c] = t
        last = i + kd
        if last > n - 1:
            last = n - 1
        for r in range(i + 1, last + 1):
            mlt = Lm[i, r - i - 1]
            if mlt != 0:
                for c in range(ncol):
                    X[r, c] -= mlt * X[i, c]
    for i in range(n - 1, -1, -1):
        jend = i + 2 * kd
        if jend > n - 1:
            jend = n - 1
        for c in range(ncol):
            acc = X[i, c]
            for j in range(i + 1, jend + 1):
                acc -= U[i, j - i + kd] * X[j, c]
            X[i, c] = acc / U[i, kd]
    return X


@njit(cache=True, nogil=True)
def band_matvec(band, X):
    """Y = H X for H in lower band storage, X of shape (n, m)."""
    kd = band.shape[0] - 1
    n = band.shape[1]
    Y = np.zeros(X.shape, dtype=np.complex128)
    m = X.shape[1]
    for j in range(n):
        for c in range(m):
            Y[j, c] += band[0, j] * X[j, c]
        for r in range(1, kd + 1):
            i = j + r
            if i >= n:
                break
            h = band[r, j]
            if h != 0:
                hc = h.conjugate()
                for c in range(m):
                    Y[i, c] += h * X[j, c]
                    Y[j, c] += hc * X[i, c]
    return Y


# ------------------------------------------------------------- front ends

def _sorted(d, z=None):
    order = np.argsort(d, kind="stable")
    if z is None:
        return d[order], None
    return d[order], z[:, order]


def eigh_tridiagonal_real(d, e, want_vectors=False):
    """Eigenpairs of the real symmetric tridiagonal with diagonal d and
    off-diagonal e (length n-1)."""
    d = np.array(d, dtype=float)
    n = d.shape[0]
    ee = np.zeros(n)
    ee[: n - 1] = e
    z = np.eye(n, dtype=np.complex128) if want_vectors else np.zeros((1, 1), np.complex128)
    bad = _tql(d, ee, z, want_vectors)
    if bad >= 0:
        raise EigenFailure(int(bad))
    vals, vecs = _sorted(d, z if want_vectors else None)
    return (vals, vecs.real.copy()) if want_vectors else vals


def eigh_dense(H, want_vectors=False):
    """All eigenvalues (ascending) and optionally eigenvectors of dense Hermitian H."""
    A = np.array(H, dtype=np.complex128, order="C", copy=True)
    n = A.shape[0]
    if n == 0:
        return (np.zeros(0), np.zeros((0, 0), complex)) if want_vectors else np.zeros(0)
    if n == 1:
        v = np.array([A[0, 0].real])
        return (v, np.ones((1, 1), complex)) if want_vectors else v
    d, ec, Q = _householder(A, want_vectors)
    er, D = _real_phase(ec)
    if want_vectors:
        Z = Q * D[None, :]
    else:
        Z = np.zeros((1, 1), np.complex128)
    bad = _tql(d, er, Z, want_vectors)
    if bad >= 0:
        raise EigenFailure(int(bad))
    vals, vecs = _sorted(d, Z if want_vectors else None)
    return (vals, vecs) if want_vectors else vals


def eigvals_band(band):
    """All eigenvalues (ascending) of a Hermitian band matrix in lower storage."""
    band = np.ascontiguousarray(band, dtype=np.complex128)
    kd = band.shape[0] - 1
    n = band.shape[1]
    if n == 1:
        return np.array([band[0, 0].real])
    d, ec = _band_to_tridiag(band, kd)
    er, _ = _real_phase(ec)
    z = np.zeros((1, 1), np.complex128)
    bad = _tql(d, er, z, False)
    if bad >= 0:
        raise EigenFailure(int(bad))
    return np.sort(d, kind="stable")


def band_norm_estimate(band):
    """Max absolute row sum, an upper bound on the spectral norm."""
    band = np.asarray(band)
    kd = band.shape[0] - 1
    n = band.shape[1]
    rows = np.zeros(n)
    for r in range(kd + 1):
        a = np.abs(band[r, : n - r])
        rows[: n - r] += a
        if r > 0:
            rows[r:] += a
    return float(rows.max()) if n else 0.0


def clusters(values, tol):
    """Split sorted values into runs whose consecutive gaps are <= tol."""
    groups = []
    start = 0
    for i in range(1, len(values) + 1):
        if i == len(values) or values[i] - values[i - 1] > tol:
            groups.append((start, i))
            start = i
    return groups


def band_selected_vectors(band, values, norm=None, seed=20240601, iters=3, cluster_tol=None):
    """Eigenvectors for the given (sorted) eigenvalues of a band matrix.

    Values closer than cluster_tol are treated as one cluster and refined
    together by block inverse iteration plus Rayleigh-Ritz, so (near-)
    degenerate subspaces come out orthonormal.  Returns (values, vectors)
    with the Ritz values.
    """
    band = np.ascontiguousarray(band, dtype=np.complex128)
    kd = band.shape[0] - 1
    n = band.shape[1]
    values = np.asarray(values, dtype=float)
    if norm is None:
        norm = band_norm_estimate(band)
    scale = max(norm, 1.0)
    if cluster_tol is None:
        cluster_tol = 1e-7 * scale
    out_vals = np.empty(len(values))
    out_vecs = np.empty((n, len(values)), dtype=np.complex128)
    rng_base = np.random.SeedSequence(seed)
    for ci, (a, b) in enumerate(clusters(values, cluster_tol)):
        lam = values[a:b]
        m = b - a
        sigma = 0.5 * (lam[0] + lam[-1]) + 4 * np.finfo(float).eps * scale
        U, Lm, piv = _band_lu(band, kd, sigma, np.finfo(float).eps * scale)
        rng = np.random.default_rng(rng_base.spawn(ci + 1)[-1])
        X = rng.standard_normal((n, m)) + 1j * rng.standard_normal((n, m))
        X, _ = np.linalg.qr(X)
        for _ in range(iters):
            X = _band_lu_solve(U, Lm, piv, kd, np.ascontiguousarray(X))
            X, _ = np.linalg.qr(X)
        HX = band_matvec(band, np.ascontiguousarray(X))
        S = X.conj().T @ HX
        S = 0.5 * (S + S.conj().T)
        th, W = np.linalg.eigh(S)
        X = X @ W
        X = _fix_phase(X)
        out_vals[a:b] = th
        out_vecs[:, a:b] = X
    return out_vals, out_vecs


def _fix_phase(X):
    """Make the largest-magnitude entry of each column real positive."""
    idx = np.argmax(np.abs(X), axis=0)
    ph = X[idx, np.arange(X.shape[1])]
    ph = ph / np.abs(ph)
    return X / ph[None, :]


def rayleigh_quotient_iteration(H, x0, mu0, iters=50, tol=1e-13):
    """Classical RQI on a dense Hermitian matrix; returns (lambda, x)."""
    H = np.asarray(H, dtype=complex)
    n = H.shape[0]
    x = np.asarray(x0, dtype=complex)
    x = x / np.linalg.norm(x)
    mu = float(mu0)
    I = np.eye(n)
    for _ in range(iters):
        try:
            y = np.linalg.solve(H - mu * I, x)
        except np.linalg.LinAlgError:
            break
        x = y / np.linalg.norm(y)
        mu_new = float(np.real(x.conj() @ H @ x))
        if np.linalg.norm(H @ x - mu_new * x) < tol * max(1.0, np.linalg.norm(H, 2)):
            mu = mu_new
            break
        mu = mu_new
    return mu, x
