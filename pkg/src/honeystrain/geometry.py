"""Honeycomb lattice with nearest-neighbour bonds of unit length.

Conventions
-----------
Lattice basis   v1 = (sqrt3/2, -3/2), v2 = (0, 3)
Dual basis      a1 = (4 pi/sqrt3)(1, 0), a2 = (4 pi/3)(sqrt3/2, 1/2)
Base points     A00 = (0, 0), B00 = (-sqrt3/2, -1/2)
Bonds           e_nu = A_mn - B_{(m,n)+(m_nu,n_nu)}, offsets (0,0), (2,1), (1,1)
Cell offsets    w_nu = e1 - e_nu = m_nu v1 + n_nu v2
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

SQRT3 = np.sqrt(3.0)


class CellIndex(NamedTuple):
    m: int
    n: int


class Sublattice(str, enum.Enum):
    A = "A"
    B = "B"


def _ro(x) -> np.ndarray:
    a = np.array(x, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class HoneycombGeometry:
    v1: np.ndarray = field(default_factory=lambda: _ro([SQRT3 / 2, -1.5]))
    v2: np.ndarray = field(default_factory=lambda: _ro([0.0, 3.0]))
    a1: np.ndarray = field(default_factory=lambda: _ro([4 * np.pi / SQRT3, 0.0]))
    a2: np.ndarray = field(default_factory=lambda: _ro([2 * np.pi / SQRT3, 2 * np.pi / 3]))
    A00: np.ndarray = field(default_factory=lambda: _ro([0.0, 0.0]))
    B00: np.ndarray = field(default_factory=lambda: _ro([-SQRT3 / 2, -0.5]))
    nn_offsets: tuple = ((0, 0), (2, 1), (1, 1))

    @property
    def e(self) -> np.ndarray:
        """Bond vectors e_1, e_2, e_3 as rows (A minus B)."""
        return _ro([[SQRT3 / 2, 0.5], [-SQRT3 / 2, 0.5], [0.0, -1.0]])

    @property
    def w(self) -> np.ndarray:
        """Cell offsets w_nu = e_1 - e_nu as rows."""
        e = self.e
        return _ro(e[0] - e)

    @property
    def K(self) -> np.ndarray:
        return _ro(self.a1 / 3)

    @property
    def Kp(self) -> np.ndarray:
        return _ro(-self.a1 / 3 + self.a2)

    def node_position(self, idx, sub) -> np.ndarray:
        m, n = idx
        base = self.A00 if Sublattice(sub) is Sublattice.A else self.B00
        return base + m * self.v1 + n * self.v2

    def neighbors_of(self, idx, sub):
        """Three nearest neighbours as (CellIndex, Sublattice, bond) with bond = A - B."""
        m, n = idx
        out = []
        for nu, (dm, dn) in enumerate(self.nn_offsets):
            if Sublattice(sub) is Sublattice.A:
                out.append((CellIndex(m + dm, n + dn), Sublattice.B, self.e[nu].copy()))
            else:
                out.append((CellIndex(m - dm, n - dn), Sublattice.A, self.e[nu].copy()))
        return out

    def dirac_points(self):
        return self.K.copy(), self.Kp.copy()

    def structure_factor(self, k) -> np.ndarray:
        """sum_nu exp(i k.w_nu); k may have shape (..., 2)."""
        k = np.asarray(k, dtype=float)
        return np.exp(1j * (k @ self.w.T)).sum(axis=-1)


GEOMETRY = HoneycombGeometry()


def node_position(idx, sub) -> np.ndarray:
    return GEOMETRY.node_position(idx, sub)


def neighbors_of(idx, sub):
    return GEOMETRY.neighbors_of(idx, sub)


def dirac_points():
    return GEOMETRY.dirac_points()
