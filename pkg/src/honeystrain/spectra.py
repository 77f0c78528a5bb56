"""Eigensolver front end, q-sweeps, boundary-mode classification and
band-shape diagnostics for supercell Hamiltonians."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from . import linalg
from .hamiltonian import BlochMatrix, SupercellSpec, assemble_supercell
from .parallel import ordered_map

DENSE_VECTOR_MAX = 2000


class NumericalError(RuntimeError):
    """Eigensolver or fit failure, annotated with context."""


@dataclass
class EigenResult:
    q_parallel: float
    eigenvalues: np.ndarray
    eigenvectors: Optional[np.ndarray] = None
    n_cells: Optional[int] = None


@dataclass
class BandSweep:
    q_grid: np.ndarray
    curves: np.ndarray
    metadata: dict = field(default_factory=dict)


class ModeLabel(str, enum.Enum):
    Bulk = "Bulk"
    LeftBoundary = "LeftBoundary"
    RightBoundary = "RightBoundary"


@dataclass
class ModeClassification:
    label: ModeLabel
    boundary_weight: float
    eigenvalue: float
    left_weight: float = 0.0
    right_weight: float = 0.0
    vector: Optional[np.ndarray] = None

    def profile(self) -> np.ndarray:
        """Per-cell weight sum_k |psi_{s,k}|^2."""
        return cell_profile(self.vector)


def cell_profile(v) -> np.ndarray:
    v = np.asarray(v)
    return (np.abs(v) ** 2).reshape(-1, 4).sum(axis=1)


def _select_abs(values, k):
    order = np.lexsort((values, np.abs(values)))
    return np.sort(order[:k])


def eig_hermitian(H, want_vectors: bool = False, num_lowest_abs: Optional[int] = None) -> EigenResult:
    """Eigen-decomposition of a BlochMatrix or dense Hermitian array.

    Band matrices are reduced by bulge chasing; requested eigenvectors
    of large band matrices come from block inverse iteration.
    """
    if isinstance(H, BlochMatrix):
        q, band, dim = H.q_parallel, H.band, H.dim
        n_cells = H.spec.n_cells if H.spec is not None else None
        dense = None if band is not None else H.matrix
    else:
        A = np.asarray(H, dtype=complex)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ValueError("matrix must be square")
        q, band, dim, n_cells, dense = float("nan"), None, A.shape[0], None, A
    k = dim if num_lowest_abs is None else int(min(num_lowest_abs, dim))
    try:
        if band is not None and not (want_vectors and k == dim and dim <= DENSE_VECTOR_MAX):
            vals = linalg.eigvals_band(band)
            sel = _select_abs(vals, k) if k < dim else np.arange(dim)
            if not want_vectors:
                return EigenResult(q, vals[sel], None, n_cells)
            # grow the request to whole clusters so degenerate subspaces are complete
            norm = linalg.band_norm_estimate(band)
            tol = 1e-7 * max(norm, 1.0)
            lo, hi = sel.min(), sel.max()
            while lo > 0 and vals[lo] - vals[lo - 1] <= tol:
                lo -= 1
            while hi < dim - 1 and vals[hi + 1] - vals[hi] <= tol:
                hi += 1
            rv, V = linalg.band_selected_vectors(band, vals[lo:hi + 1], norm=norm, cluster_tol=tol)
            pick = _select_abs(rv, k)
            return EigenResult(q, rv[pick], V[:, pick], n_cells)
        M = dense if dense is not None else H.matrix
        if want_vectors:
            vals, vecs = linalg.eigh_dense(M, True)
        else:
            vals, vecs = linalg.eigh_dense(M, False), None
    except linalg.EigenFailure as exc:
        raise NumericalError(f"eigensolver failed at q={q}: {exc}") from exc
    sel = _select_abs(vals, k) if k < dim else np.arange(dim)
    return EigenResult(q, vals[sel], None if vecs is None else vecs[:, sel], n_cells)


def sweep(spec: SupercellSpec, q_grid: Sequence[float], num_bands: int, threads: Optional[int] = None) -> BandSweep:
    """num_bands smallest-magnitude eigenvalues at each q, sorted ascending per row."""
    q_grid = np.asarray(q_grid, dtype=float)
    for q in q_grid:
        spec.check_q(float(q))

    def solve(iq):
        q = float(q_grid[iq])
        try:
            return eig_hermitian(assemble_supercell(spec, q), False, num_bands).eigenvalues
        except NumericalError as exc:
            raise NumericalError(f"q index {iq} (q={q}): {exc}") from exc

    rows = ordered_map(solve, range(len(q_grid)), threads)
    curves = np.vstack(rows) if rows else np.zeros((0, num_bands))
    meta = dict(spec.summary(), num_bands=int(num_bands))
    return BandSweep(q_grid, curves, meta)


# ---------------------------------------------------------- classification

def default_abs_tol(delta: float, t1: float, deformed: bool) -> float:
    """Half the first Landau gap delta (3 sqrt2 / 2) sqrt|t1| when strained."""
    if not deformed or delta == 0:
        return 1e-6
    return 0.5 * delta * 1.5 * np.sqrt(2.0 * abs(t1))


def classify_degenerate_subspace(result: EigenResult, abs_tol: float, layer_cells: int = 20) -> List[ModeClassification]:
    """Orthogonal split of {|E| <= abs_tol} into left, right and bulk modes.

    The eigenvectors of V^H P_left V maximise the left-layer weight over the
    subspace; those above 1/2 are left modes.  The right modes are found the
    same way in the orthogonal complement, and what remains is bulk.
    """
    if result.eigenvectors is None:
        raise ValueError("classification needs eigenvectors")
    vals = np.asarray(result.eigenvalues)
    mask = np.abs(vals) <= abs_tol
    if not mask.any():
        return []
    V = np.asarray(result.eigenvectors)[:, mask]
    lam = vals[mask]
    dim = V.shape[0]
    n_cells = result.n_cells or dim // 4
    if layer_cells < 1 or 2 * layer_cells > n_cells:
        raise ValueError(f"layer_cells={layer_cells} incompatible with {n_cells} cells")
    w = 4 * layer_cells
    VL, VR = V[:w], V[dim - w:]
    GL = VL.conj().T @ VL
    GR = VR.conj().T @ VR
    out: List[ModeClassification] = []

    def emit(C, label_fn):
        for j in range(C.shape[1]):
            c = C[:, j]
            wl = float(np.real(c.conj() @ GL @ c))
            wr = float(np.real(c.conj() @ GR @ c))
            e = float(np.sum(np.abs(c) ** 2 * lam))
            label, bw = label_fn(wl, wr)
            out.append(ModeClassification(label, bw, e, wl, wr, V @ c))

    wl_vals, wl_vecs = np.linalg.eigh(0.5 * (GL + GL.conj().T))
    order = np.argsort(-wl_vals, kind="stable")
    left = wl_vecs[:, order[wl_vals[order] > 0.5]]
    rest = wl_vecs[:, order[wl_vals[order] <= 0.5]]
    emit(left, lambda wl, wr: (ModeLabel.LeftBoundary, wl))
    if rest.shape[1]:
        GRr = rest.conj().T @ GR @ rest
        wr_vals, wr_vecs = np.linalg.eigh(0.5 * (GRr + GRr.conj().T))
        order = np.argsort(-wr_vals, kind="stable")
        right = rest @ wr_vecs[:, order[wr_vals[order] > 0.5]]
        bulk_c = rest @ wr_vecs[:, order[wr_vals[order] <= 0.5]]
        emit(right, lambda wl, wr: (ModeLabel.RightBoundary, wr))
        if bulk_c.shape[1]:
            Gb = bulk_c.conj().T @ (GL + GR) @ bulk_c
            bv, bw = np.linalg.eigh(0.5 * (Gb + Gb.conj().T))
            bulk_c = bulk_c @ bw[:, np.argsort(-bv, kind="stable")]
            emit(bulk_c, lambda wl, wr: (ModeLabel.Bulk, max(wl, wr)))
    return out


def label_counts(modes: List[ModeClassification]) -> dict:
    return {
        "left": sum(m.label is ModeLabel.LeftBoundary for m in modes),
        "right": sum(m.label is ModeLabel.RightBoundary for m in modes),
        "bulk": sum(m.label is ModeLabel.Bulk for m in modes),
    }


# ------------------------------------------------------------ diagnostics

@dataclass
class DecayFit:
    gaussian_curvature: float
    exp_rate: float
    model: str


def _fit_rss(r, y, quadratic):
    x = r ** 2 if quadratic else r
    A = np.stack([np.ones_like(x), x], -1)
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    res = y - A @ coef
    return float(res @ res), -float(coef[1])


def _tail_model(r, y):
    rq, cq = _fit_rss(r, y, True)
    rl, cl = _fit_rss(r, y, False)
    return ("quad" if rq <= rl else "lin"), cq, cl


def decay_fit(profile, center_window: int, floor: float = 1e-13) -> DecayFit:
    """Classify the decay of a localised profile away from its peak.

    On each side of the maximum, log(profile) is fitted against a + b r^2
    and a + b r, separately on the inner tail (r <= center_window) and the
    outer tail (r > center_window).  Both tails quadratic gives Gaussian,
    both linear Exponential, quadratic inside and linear outside Mixed.
    """
    p = np.asarray(profile, dtype=float)
    if np.any(p < 0) or p.max() <= 0:
        raise ValueError("profile must be nonnegative with positive maximum")
    c = int(np.argmax(p))
    kinds = []
    curv, rates = [], []
    for side in (p[c:], p[: c + 1][::-1]):
        r = np.arange(len(side), dtype=float)
        ok = side > floor * p.max()
        # stop at the first point below the floor
        stop = np.argmin(ok) if not ok.all() else len(ok)
        r, y = r[1:stop], np.log(side[1:stop])
        inner = r <= center_window
        outer = ~inner
        if inner.sum() < 8 or outer.sum() < 8:
            if len(r) < 8:
                raise NumericalError(f"only {len(r)} usable points in a tail; need 8")
            if inner.sum() < 8:
                inner = outer = np.ones_like(r, bool)
            else:
                outer = inner
        mi, cq_in, _ = _tail_model(r[inner], y[inner])
        mo, _, cl_out = _tail_model(r[outer], y[outer])
        _, cq_all = _fit_rss(r, y, True)
        curv.append(cq_all if mi == "quad" and mo == "quad" else cq_in)
        rates.append(cl_out)
        kinds.append({("quad", "quad"): "Gaussian", ("lin", "lin"): "Exponential",
                      ("quad", "lin"): "Mixed"}.get((mi, mo), "Mixed"))
    model = kinds[0] if kinds[0] == kinds[1] else "Mixed"
    return DecayFit(float(np.mean(curv)), float(np.mean(rates)), model)


def flatness(sw: BandSweep, band_index: int, q_window) -> float:
    lo, hi = q_window
    q = sw.q_grid
    if lo < q.min() - 1e-12 or hi > q.max() + 1e-12:
        raise ValueError(f"window {q_window} outside the sweep range [{q.min()}, {q.max()}]")
    sel = (q >= lo - 1e-12) & (q <= hi + 1e-12)
    band = sw.curves[sel, band_index]
    return float(band.max() - band.min())


def eig_near(H: BlochMatrix, target: float, count: int, want_vectors: bool = True) -> EigenResult:
    """The count eigenpairs closest to target, ascending, with whole clusters
    of (near-)degenerate eigenvalues resolved together."""
    n_cells = H.spec.n_cells if H.spec is not None else None
    try:
        if H.band is None:
            vals, vecs = linalg.eigh_dense(H.matrix, True)
            sel = np.sort(np.argsort(np.abs(vals - target), kind="stable")[:count])
            return EigenResult(H.q_parallel, vals[sel], vecs[:, sel] if want_vectors else None, n_cells)
        vals = linalg.eigvals_band(H.band)
    except linalg.EigenFailure as exc:
        raise NumericalError(f"eigensolver failed at q={H.q_parallel}: {exc}") from exc
    sel = np.sort(np.argsort(np.abs(vals - target), kind="stable")[:count])
    if not want_vectors:
        return EigenResult(H.q_parallel, vals[sel], None, n_cells)
    norm = linalg.band_norm_estimate(H.band)
    tol = 1e-7 * max(norm, 1.0)
    lo, hi = sel.min(), sel.max()
    while lo > 0 and vals[lo] - vals[lo - 1] <= tol:
        lo -= 1
    while hi < len(vals) - 1 and vals[hi + 1] - vals[hi] <= tol:
        hi += 1
    rv, V = linalg.band_selected_vectors(H.band, vals[lo:hi + 1], norm=norm, cluster_tol=tol)
    pick = np.sort(np.argsort(np.abs(rv - target), kind="stable")[:count])
    return EigenResult(H.q_parallel, rv[pick], V[:, pick], n_cells)
