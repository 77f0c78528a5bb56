"""Two-scale ansatz on the AC supercell, residuals, the second-order
eigenvalue corrector E2 and convergence-rate fits in delta."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np
from scipy.integrate import simpson

from .deformation import DEFAULT_T1, regularized_quadratic, unidirectional_ac
from .dirac1d import Envelope, KappaProfile, discretize, in_gap_spectrum
from .geometry import GEOMETRY, SQRT3
from .hamiltonian import (HoppingMode, Orientation, SupercellSpec, assemble_supercell)
from .parallel import ordered_map
from .spectra import eig_hermitian, eig_near

U_PHASE_A = np.exp(-1j * np.pi / 6)
U_PHASE_B = np.exp(1j * np.pi / 6)
COVERAGE_TOL = 1e-8


class CoverageError(ValueError):
    """The envelope has not decayed inside the supercell or the Dirac grid."""


@dataclass
class EnvelopeAnsatz:
    k_parallel: float
    delta: float
    q_parallel: float
    values: np.ndarray
    energy: float
    source: str = ""


@dataclass
class ResidualReport:
    delta: float
    residual: float
    energy_used: float


@dataclass
class RateEstimate:
    deltas: np.ndarray
    values: np.ndarray
    fitted_order: float
    r_squared: float


def q_from_k(k_parallel: float, delta: float) -> float:
    """Supercell quasi-momentum with 3 pi q = delta k."""
    return delta * k_parallel / (3 * np.pi)


def build_ansatz(psi0: Envelope, E1: float, k_parallel: float, delta: float, spec: SupercellSpec) -> EnvelopeAnsatz:
    """psi = delta^(1/2) exp(iK.x) exp(i k X2 / 3) U Psi0(X1) on the AC supercell.

    A and B rows of cell s use x = (sqrt3 s, 0); C and D rows use
    x = (sqrt3 s - sqrt3/2, -3/2), the A-node of the lattice cell they belong to.
    """
    if spec.orientation is not Orientation.AC:
        raise ValueError("the ansatz is defined on the AC supercell")
    if not delta > 0:
        raise ValueError("delta must be positive")
    s = np.arange(-spec.n_t, spec.n_t + 1, dtype=float)
    K = GEOMETRY.K
    out = np.zeros(spec.dim, dtype=complex)
    peak = max(np.abs(psi0.A).max(), np.abs(psi0.B).max())
    if psi0.edge_fraction() > COVERAGE_TOL:
        raise CoverageError(f"envelope not decayed at the Dirac grid ends (edge/peak {psi0.edge_fraction():.2e})")
    for rows, x in (((0, 1), np.stack([SQRT3 * s, np.zeros_like(s)], -1)),
                    ((2, 3), np.stack([SQRT3 * s - SQRT3 / 2, np.full_like(s, -1.5)], -1))):
        X = delta * x
        A, B = psi0(X[:, 0])
        ph = np.sqrt(delta) * np.exp(1j * (x @ K)) * np.exp(1j * k_parallel * X[:, 1] / 3)
        out[rows[0]::4] = ph * U_PHASE_A * A
        out[rows[1]::4] = ph * U_PHASE_B * B
        edge = max(np.abs(A[[0, -1]]).max(), np.abs(B[[0, -1]]).max())
        if edge > COVERAGE_TOL * peak:
            raise CoverageError(
                f"envelope/peak = {edge / peak:.2e} at the supercell edge X1 = {X[-1, 0]:.3g}; increase N_T")
    return EnvelopeAnsatz(k_parallel, delta, q_from_k(k_parallel, delta), out, float(E1), psi0.source)


def residual(ansatz: EnvelopeAnsatz, spec: SupercellSpec) -> ResidualReport:
    """||(H - delta E1) psi|| / ||psi|| at the companion quasi-momentum."""
    if abs(spec.delta - ansatz.delta) > 1e-15:
        raise ValueError(f"spec delta {spec.delta} differs from ansatz delta {ansatz.delta}")
    H = assemble_supercell(spec, ansatz.q_parallel)
    E = ansatz.delta * ansatz.energy
    r = H.matvec(ansatz.values) - E * ansatz.values
    return ResidualReport(ansatz.delta, float(np.linalg.norm(r) / np.linalg.norm(ansatz.values)), E)


def spectral_derivative(f, dx, order=1):
    k = 2 * np.pi * np.fft.fftfreq(len(f), dx)
    return np.fft.ifft((1j * k) ** order * np.fft.fft(f))


def compute_E2(psi0: Envelope, E1: float, profile: KappaProfile) -> complex:
    """-E2 ||Psi0||^2 = <Psi0^A, R2^A> + <Psi0^B, R2^B>, f2 = -(sqrt3/4) d'."""
    X, dx = psi0.X, psi0.dx
    A, B = psi0.A, psi0.B
    k, t1 = profile.k_parallel, profile.t1
    f2 = -(SQRT3 / 4) * np.asarray(profile.d_prime(X), dtype=float)
    e5 = np.exp(1j * 5 * np.pi / 3)

    def D(f, o=1):
        return spectral_derivative(f, dx, o)

    R2A = (-(k * k / 8) * B - (SQRT3 * e5 * t1 * f2 - (SQRT3 / 4) * k * 1j) * D(B)
           - (1.5 * e5 - 3 / 8) * D(B, 2))
    R2B = (-(k * k / 8) * A + ((SQRT3 / 4) * k * 1j) * D(A)
           + SQRT3 * np.conj(e5) * t1 * D(f2 * A) - (1.5 * np.conj(e5) - 3 / 8) * D(A, 2))
    integrand = np.conj(A) * R2A + np.conj(B) * R2B
    lhs = simpson(integrand.real, x=X) + 1j * simpson(integrand.imag, x=X)
    nrm = simpson(np.abs(A) ** 2 + np.abs(B) ** 2, x=X)
    return complex(-lhs / nrm)


def rate_fit(deltas: Sequence[float], values: Sequence[float]) -> RateEstimate:
    d = np.asarray(deltas, dtype=float)
    v = np.asarray(values, dtype=float)
    if len(d) < 3:
        raise ValueError("need at least 3 points")
    if np.any(d <= 0) or np.any(v <= 0):
        raise ValueError("deltas and values must be positive")
    x, y = np.log(d), np.log(v)
    slope, icpt = np.polyfit(x, y, 1)
    res = y - (slope * x + icpt)
    ss = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(res @ res) / ss if ss > 0 else 1.0
    return RateEstimate(d, v, float(slope), r2)


def cluster_distance(ansatz: EnvelopeAnsatz, vectors: np.ndarray) -> float:
    """l2 distance from the normalised ansatz to its best approximation in
    span(vectors), i.e. the nearest normalised vector of the eigen-cluster
    after phase alignment."""
    a = ansatz.values / np.linalg.norm(ansatz.values)
    Q, _ = np.linalg.qr(vectors)
    c = Q.conj().T @ a
    p = Q @ c
    nrm = np.linalg.norm(p)
    if nrm == 0:
        return float(np.sqrt(2.0))
    p = p / nrm
    ph = np.vdot(p, a)
    ph = ph / abs(ph) if abs(ph) > 0 else 1.0
    return float(np.linalg.norm(a - ph * p))


# ------------------------------------------------------------- workflow

def coverage_n_t(delta: float, reach: float) -> int:
    """Smallest N_T whose supercell reaches |X1| >= reach."""
    return int(np.ceil(reach / (SQRT3 * delta))) + 1


@dataclass
class ValidationConfig:
    L: float = 1.0
    mollifier_width: float = 0.5
    t1: float = DEFAULT_T1
    k_parallel: float = 0.0
    deltas: Sequence[float] = (0.08, 0.04, 0.02)
    hopping: HoppingMode = HoppingMode.FiniteDiffStrain
    dirac_half_width: float = 40.0
    dirac_cells: int = 8000
    reach: float = 30.0
    cluster_width: float = 1e-6
    threads: Optional[int] = None


@dataclass
class DeltaRun:
    delta: float
    n_t: int
    residual_zero: float
    residual_first: float
    zero_band: float
    eigenvalue: float
    eigenvalue_error: float
    vector_distance: float


def _dirac_states(cfg: ValidationConfig):
    prof = regularized_quadratic(cfg.L, cfg.mollifier_width)
    kp = KappaProfile.from_profile(prof, cfg.k_parallel, cfg.t1)
    disc = discretize(kp, cfg.dirac_half_width, cfg.dirac_cells)
    res = in_gap_spectrum(disc, kp)
    vals = res.in_gap_eigenvalues
    i0 = int(np.argmin(np.abs(vals)))
    pos = np.where(vals > vals[i0] + 1e-6)[0]
    if len(pos) == 0:
        raise RuntimeError("no positive in-gap eigenvalue for this profile")
    i1 = int(pos[np.argmin(vals[pos])])
    return prof, kp, res, res.envelope(i0), res.envelope(i1)


def _one_delta(cfg, prof, env0, env1, delta) -> DeltaRun:
    n_t = coverage_n_t(delta, cfg.reach)
    spec = SupercellSpec(Orientation.AC, n_t, delta=delta, hopping=cfg.hopping,
                         field=unidirectional_ac(prof), t1=cfg.t1)
    an0 = build_ansatz(env0, env0.energy, cfg.k_parallel, delta, spec)
    an1 = build_ansatz(env1, env1.energy, cfg.k_parallel, delta, spec)
    r0 = residual(an0, spec).residual
    r1 = residual(an1, spec).residual
    H = assemble_supercell(spec, an1.q_parallel)
    target = delta * env1.energy
    near = eig_near(H, target, 6, want_vectors=True)
    j = int(np.argmin(np.abs(near.eigenvalues - target)))
    Ed = float(near.eigenvalues[j])
    cl = np.abs(near.eigenvalues - Ed) <= cfg.cluster_width
    dist = cluster_distance(an1, near.eigenvectors[:, cl])
    # zero band: smallest |E| among states overlapping the bulk zero-mode ansatz
    z = eig_hermitian(H if an0.q_parallel == an1.q_parallel else assemble_supercell(spec, an0.q_parallel),
                      True, 12)
    a0 = an0.values / np.linalg.norm(an0.values)
    ov = np.abs(z.eigenvectors.conj().T @ a0) ** 2
    zero_band = float(np.abs(z.eigenvalues[int(np.argmax(ov))]))
    return DeltaRun(delta, n_t, r0, r1, zero_band, Ed, abs(Ed - target), dist)


def run_validation(cfg: ValidationConfig) -> Dict:
    """Residuals, eigenvalue errors and fitted orders for the regularised AC profile."""
    prof, kp, res, env0, env1 = _dirac_states(cfg)
    E2 = compute_E2(env1, env1.energy, kp)
    E2_zero = compute_E2(env0, env0.energy, kp)
    runs: List[DeltaRun] = ordered_map(lambda d: _one_delta(cfg, prof, env0, env1, float(d)),
                                       list(cfg.deltas), cfg.threads)
    deltas = [r.delta for r in runs]

    def order(vals):
        v = np.asarray(vals, dtype=float)
        if np.any(v <= 0):
            return None
        return rate_fit(deltas, v).fitted_order

    return {
        "deltas": deltas,
        "n_t": [r.n_t for r in runs],
        "residuals": {"zero_mode": [r.residual_zero for r in runs],
                      "first_level": [r.residual_first for r in runs]},
        "fitted_orders": {"residual_zero_mode": order([r.residual_zero for r in runs]),
                          "residual_first_level": order([r.residual_first for r in runs]),
                          "zero_band": order([r.zero_band for r in runs]),
                          "eigenvalue_error": order([r.eigenvalue_error for r in runs]),
                          "eigenvector_distance": order([r.vector_distance for r in runs])},
        "E1": {"zero_mode": float(env0.energy), "first_level": float(env1.energy)},
        "E2": {"zero_mode": [E2_zero.real, E2_zero.imag], "first_level": [E2.real, E2.imag]},
        "eigenvalue_errors": [r.eigenvalue_error for r in runs],
        "scaled_eigenvalue_errors": [(r.eigenvalue - r.delta * env1.energy) / r.delta ** 2 for r in runs],
        "zero_band": [r.zero_band for r in runs],
        "eigenvector_distances": [r.vector_distance for r in runs],
        "lattice_eigenvalues": [r.eigenvalue for r in runs],
    }
