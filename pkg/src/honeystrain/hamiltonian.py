"""Bulk Bloch matrix and truncated AC/ZZ supercell Hamiltonians.

Supercell layout
----------------
Four nodes per cell s in [-N_T, N_T]; row index 4 (s + N_T) + k with
k = 0, 1, 2, 3 for the nodes A, B, C, D.  A and C sit on sublattice A, B and D
on sublattice B.  The ribbon is periodic along L_par with Bloch condition
psi(x + L_par) = exp(i theta) psi(x), theta = 3 pi q (AC, L_par = (0, 3)) or
theta = 2 pi q (ZZ, L_par = (sqrt3, 0)).  A bond to the image of node j at
pos_j + m L_par contributes t exp(i m theta) to H[i, j].

AC: A_s = (sqrt3 s, 0), B_s = A_s - e1, C_s = A_s + (-sqrt3/2, -3/2),
    D_s = C_s - e1; the s = 0 A node sits at X1 = 0.
ZZ: A_s = (0, 3s), B_s = A_s - e3, C_s = B_s + e1, D_s = A_s - e2; cells stack
    along v2 = (0, 3) and the s = 0 A node sits at X2 = 0.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional

import numpy as np

from .deformation import DEFAULT_T1, DisplacementField, HoppingFunction, zero_field
from .geometry import GEOMETRY, SQRT3

DENSE_MAX_DIM = 4100


class HoppingMode(str, enum.Enum):
    ExactDistance = "ExactDistance"
    FiniteDiffStrain = "FiniteDiffStrain"
    CellLinearized = "CellLinearized"


class Orientation(str, enum.Enum):
    AC = "AC"
    ZZ = "ZZ"


class Boundary(str, enum.Enum):
    ZeroTruncation = "ZeroTruncation"
    Periodic = "Periodic"


HOPPING_ALIASES = {
    "exact": HoppingMode.ExactDistance,
    "fd": HoppingMode.FiniteDiffStrain,
    "cell": HoppingMode.CellLinearized,
}


def parse_hopping(name) -> HoppingMode:
    if isinstance(name, HoppingMode):
        return name
    key = str(name)
    if key.lower() in HOPPING_ALIASES:
        return HOPPING_ALIASES[key.lower()]
    return HoppingMode(key)


# -------------------------------------------------------------- bulk H^0

def bulk_bloch(k) -> np.ndarray:
    """2x2 Bloch matrix with off-diagonal sum_nu exp(i k.w_nu)."""
    g = complex(GEOMETRY.structure_factor(np.asarray(k, dtype=float)))
    return np.array([[0.0, g], [np.conj(g), 0.0]], dtype=complex)


def bulk_dispersion(k):
    """(E_-, E_+) = -+|sum_nu exp(i k.w_nu)|; k may have shape (..., 2)."""
    a = np.abs(GEOMETRY.structure_factor(np.asarray(k, dtype=float)))
    return -a, a


# ---------------------------------------------------------------- hopping

def hopping(Xcell, Ycell, bond, delta, field_: DisplacementField, t1=DEFAULT_T1,
            mode=HoppingMode.FiniteDiffStrain, hfun: Optional[HoppingFunction] = None):
    """Deformed hopping on the bond between undeformed A node Xcell and B node Ycell.

    bond = Xcell - Ycell has unit length.  Arrays broadcast over leading axes.
    """
    mode = parse_hopping(mode)
    X = np.asarray(Xcell, dtype=float)
    Y = np.asarray(Ycell, dtype=float)
    b = np.asarray(bond, dtype=float)
    shape = np.broadcast_shapes(X.shape, Y.shape, b.shape)[:-1]
    if delta == 0 or field_.is_zero:
        return np.ones(shape)
    if mode is HoppingMode.CellLinearized:
        G = field_.grad(delta * X)
        return 1.0 + delta * t1 * np.einsum("...i,...ij,...j->...", b, G, b)
    du = field_.u(delta * X) - field_.u(delta * Y)
    if mode is HoppingMode.FiniteDiffStrain:
        return 1.0 + t1 * np.sum(du * b, axis=-1)
    # |b + du| - 1 written without cancellation, using |b| = 1
    num = 2.0 * np.sum(b * du, axis=-1) + np.sum(du * du, axis=-1)
    r = np.sqrt(1.0 + num)
    if hfun is None:
        return 1.0 + t1 * num / (r + 1.0)
    return hfun(r)


# -------------------------------------------------------------- supercell

@dataclass(frozen=True)
class SupercellSpec:
    orientation: Orientation = Orientation.AC
    n_t: int = 200
    boundary: Boundary = Boundary.ZeroTruncation
    delta: float = 0.0
    hopping: HoppingMode = HoppingMode.FiniteDiffStrain
    field: DisplacementField = field(default_factory=zero_field)
    t1: float = DEFAULT_T1

    def __post_init__(self):
        object.__setattr__(self, "orientation", Orientation(self.orientation))
        object.__setattr__(self, "boundary", Boundary(self.boundary))
        object.__setattr__(self, "hopping", parse_hopping(self.hopping))
        if int(self.n_t) != self.n_t or self.n_t < 2:
            raise ValueError(f"N_T must be an integer >= 2, got {self.n_t}")
        object.__setattr__(self, "n_t", int(self.n_t))
        if not np.isfinite(self.delta) or self.delta < 0:
            raise ValueError(f"delta must be finite and >= 0, got {self.delta}")

    @property
    def n_cells(self) -> int:
        return 2 * self.n_t + 1

    @property
    def dim(self) -> int:
        return 4 * self.n_cells

    @property
    def q_interval(self):
        return (-1 / 3, 1 / 3) if self.orientation is Orientation.AC else (-0.5, 0.5)

    @property
    def bloch_angle_per_q(self) -> float:
        return 3 * np.pi if self.orientation is Orientation.AC else 2 * np.pi

    def check_q(self, q: float):
        lo, hi = self.q_interval
        if not (lo <= q < hi):
            raise ValueError(
                f"q_parallel={q} outside [{lo:.6g}, {hi:.6g}) for {self.orientation.value}")

    def summary(self) -> dict:
        return {
            "orientation": self.orientation.value,
            "n_t": self.n_t,
            "boundary": self.boundary.value,
            "delta": self.delta,
            "hopping": self.hopping.value,
            "deformation": self.field.name,
            "t1": self.t1,
        }

    def cell_origins(self, s) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        if self.orientation is Orientation.AC:
            return np.stack([SQRT3 * s, np.zeros_like(s)], -1)
        return np.stack([np.zeros_like(s), 3.0 * s], -1)

    def node_positions(self) -> np.ndarray:
        """Undeformed positions of all rows, shape (dim, 2)."""
        base = _layout(self.orientation)[0]
        cell = self.cell_origins(np.arange(-self.n_t, self.n_t + 1))
        return (cell[:, None, :] + base[None, :, :]).reshape(-1, 2)


def _layout(orientation: Orientation):
    """(node offsets, bond list, image vector)."""
    if orientation is Orientation.AC:
        base = np.array([[0.0, 0.0], [-SQRT3 / 2, -0.5], [-SQRT3 / 2, -1.5], [-SQRT3, -2.0]])
        # (A-type node, cell shift of B-type node, B-type node, image index)
        bonds = [(0, 0, 1, 0), (0, 1, 1, 0), (0, 1, 3, 1), (2, 0, 1, 0), (2, 0, 3, 0), (2, 1, 3, 0)]
        image = np.array([0.0, 3.0])
    else:
        base = np.array([[0.0, 0.0], [0.0, 1.0], [SQRT3 / 2, 1.5], [SQRT3 / 2, -0.5]])
        bonds = [(0, 0, 1, 0), (0, 0, 3, 0), (0, 0, 3, -1), (2, 0, 1, 0), (2, 0, 1, 1), (2, 1, 3, 0)]
        image = np.array([SQRT3, 0.0])
    return base, bonds, image


@dataclass(frozen=True)
class BondTable:
    """Bonds of a supercell: rows ia (A-type), ib (B-type), positions, image index."""

    ia: np.ndarray
    ib: np.ndarray
    XA: np.ndarray
    XB: np.ndarray
    image: np.ndarray

    @property
    def bond(self) -> np.ndarray:
        return self.XA - self.XB


def bond_table(spec: SupercellSpec) -> BondTable:
    base, bonds, image_vec = _layout(spec.orientation)
    nc = spec.n_cells
    s = np.arange(-spec.n_t, spec.n_t + 1)
    ia, ib, XA, XB, img = [], [], [], [], []
    periodic = spec.boundary is Boundary.Periodic
    for ka, ds, kb, m in bonds:
        sb = s + ds
        keep = np.ones(nc, bool) if periodic else (np.abs(sb) <= spec.n_t)
        sa_k, sb_k = s[keep], sb[keep]
        ia.append(4 * (sa_k + spec.n_t) + ka)
        ib.append(4 * ((sb_k + spec.n_t) % nc) + kb)
        XA.append(spec.cell_origins(sa_k) + base[ka])
        XB.append(spec.cell_origins(sb_k) + base[kb] + m * image_vec)
        img.append(np.full(len(sa_k), m))
    return BondTable(np.concatenate(ia), np.concatenate(ib), np.concatenate(XA),
                     np.concatenate(XB), np.concatenate(img))


@dataclass(frozen=True)
class BlochMatrix:
    """Hermitian supercell matrix H(q).

    band holds the lower band (band[r, j] = H[j + r, j]) for truncated
    ribbons; periodic rings are stored densely.
    """

    dim: int
    q_parallel: float
    band: Optional[np.ndarray] = None
    dense_lower: Optional[np.ndarray] = None
    spec: Optional[SupercellSpec] = None

    @property
    def bandwidth(self) -> int:
        if self.band is not None:
            return self.band.shape[0] - 1
        return self.dim - 1

    @property
    def storage(self) -> str:
        if self.band is None:
            return "dense"
        return "dense" if self.dim <= DENSE_MAX_DIM else "banded"

    @cached_property
    def matrix(self) -> np.ndarray:
        """Dense Hermitian matrix; the upper triangle mirrors the lower exactly."""
        if self.band is not None:
            L = np.zeros((self.dim, self.dim), dtype=complex)
            n = self.dim
            for r in range(self.band.shape[0]):
                idx = np.arange(n - r)
                L[idx + r, idx] = self.band[r, : n - r]
        else:
            L = np.tril(self.dense_lower)
        H = L + np.tril(L, -1).conj().T
        d = np.arange(self.dim)
        H[d, d] = H[d, d].real
        return H

    def matvec(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=complex)
        vec = X.ndim == 1
        if self.band is not None:
            from .linalg import band_matvec
            Y = band_matvec(self.band, np.ascontiguousarray(X.reshape(self.dim, -1)))
        else:
            Y = self.matrix @ X.reshape(self.dim, -1)
        return Y[:, 0] if vec else Y


def chiral_signs(dim: int) -> np.ndarray:
    """+1 on A-type rows (A, C), -1 on B-type rows (B, D)."""
    return np.tile([1.0, -1.0, 1.0, -1.0], dim // 4)


def supercell_hoppings(spec: SupercellSpec, table: Optional[BondTable] = None) -> np.ndarray:
    table = table or bond_table(spec)
    return hopping(table.XA, table.XB, table.bond, spec.delta, spec.field, spec.t1, spec.hopping)


def assemble_supercell(spec: SupercellSpec, q_parallel: float) -> BlochMatrix:
    if spec.n_t < 2:
        raise ValueError("N_T must be >= 2")
    spec.check_q(q_parallel)
    table = bond_table(spec)
    t = supercell_hoppings(spec, table)
    theta = spec.bloch_angle_per_q * q_parallel
    phase = np.where(table.image == 0, 1.0 + 0j, np.exp(1j * theta * table.image))
    val = t * phase                      # H[ia, ib]
    n = spec.dim
    lo = np.maximum(table.ia, table.ib)
    hi = np.minimum(table.ia, table.ib)
    lower = np.where(table.ia > table.ib, val, np.conj(val))   # H[lo, hi]
    if spec.boundary is Boundary.ZeroTruncation:
        r = lo - hi
        kd = int(r.max())
        band = np.zeros((kd + 1, n), dtype=complex)
        np.add.at(band, (r, hi), lower)
        return BlochMatrix(n, float(q_parallel), band=band, spec=spec)
    dense = np.zeros((n, n), dtype=complex)
    np.add.at(dense, (lo, hi), lower)
    return BlochMatrix(n, float(q_parallel), dense_lower=dense, spec=spec)
