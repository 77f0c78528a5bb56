"""Displacement fields u(X), bond strains and strain-induced gauge fields.

Gradients follow G[..., i, j] = d u_i / d X_j and Hessians
Hs[..., i, j, k] = d^2 u_i / dX_j dX_k.  All evaluators accept X with shape
(..., 2) and broadcast over the leading axes.
"""
from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from numpy.polynomial.legendre import leggauss

from .geometry import GEOMETRY

H_FD = 1e-5
DEFAULT_T1 = -2.0


class FieldKind(str, enum.Enum):
    Zero = "Zero"
    UnidirectionalAC = "UnidirectionalAC"
    QuadraticZZ = "QuadraticZZ"
    Triaxial = "Triaxial"
    Custom = "Custom"


@dataclass(frozen=True)
class UnidirectionalProfile:
    """Profile d(X1) for u = (0, d(X1)).  d_infinity is the limit of d' at +inf."""

    d: Callable
    d_prime: Callable
    d_second: Optional[Callable] = None
    d_infinity: Optional[float] = None
    name: str = "custom"


@dataclass(frozen=True)
class HoppingFunction:
    """Hopping h(r) as a function of deformed bond length, normalised to h(1) = 1."""

    t1: float = DEFAULT_T1
    h: Optional[Callable] = None

    def __call__(self, r):
        if self.h is None:
            return 1.0 + self.t1 * (np.asarray(r) - 1.0)
        return self.h(r)


def _xy(X):
    X = np.asarray(X, dtype=float)
    if X.shape[-1] != 2:
        raise ValueError(f"expected trailing dimension 2, got shape {X.shape}")
    return X, X[..., 0], X[..., 1]


def _stack2(a, b):
    return np.stack(np.broadcast_arrays(a, b), axis=-1)


def _mat2(g00, g01, g10, g11):
    g00, g01, g10, g11 = np.broadcast_arrays(g00, g01, g10, g11)
    return np.stack([np.stack([g00, g01], -1), np.stack([g10, g11], -1)], -2)


@dataclass(frozen=True)
class DisplacementField:
    u_fn: Callable
    kind: FieldKind = FieldKind.Custom
    grad_fn: Optional[Callable] = None
    hess_fn: Optional[Callable] = None
    profile: Optional[UnidirectionalProfile] = None
    name: str = "custom"

    @property
    def is_zero(self) -> bool:
        return self.kind is FieldKind.Zero

    def u(self, X) -> np.ndarray:
        return np.asarray(self.u_fn(np.asarray(X, dtype=float)), dtype=float)

    def grad_fd(self, X, h: float = H_FD) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        cols = []
        for j in range(2):
            dX = np.zeros(2)
            dX[j] = h
            cols.append((self.u(X + dX) - self.u(X - dX)) / (2 * h))
        return np.stack(cols, axis=-1)

    def grad(self, X) -> np.ndarray:
        if self.grad_fn is not None:
            return np.asarray(self.grad_fn(np.asarray(X, dtype=float)), dtype=float)
        return self.grad_fd(X)

    def hessian(self, X) -> Optional[np.ndarray]:
        if self.hess_fn is None:
            return None
        return np.asarray(self.hess_fn(np.asarray(X, dtype=float)), dtype=float)


# ---------------------------------------------------------------- catalogue

def zero_field() -> DisplacementField:
    def u(X):
        return np.zeros_like(np.asarray(X, dtype=float))

    def g(X):
        return np.zeros(np.shape(X)[:-1] + (2, 2))

    def hs(X):
        return np.zeros(np.shape(X)[:-1] + (2, 2, 2))

    return DisplacementField(u, FieldKind.Zero, g, hs, name="none")


def unidirectional_ac(profile: UnidirectionalProfile) -> DisplacementField:
    """u = (0, d(X1))."""

    def u(X):
        X, x1, _ = _xy(X)
        return _stack2(np.zeros_like(x1), profile.d(x1))

    def g(X):
        X, x1, _ = _xy(X)
        z = np.zeros_like(x1)
        return _mat2(z, z, profile.d_prime(x1), z)

    hs = None
    if profile.d_second is not None:
        def hs(X):
            X, x1, _ = _xy(X)
            out = np.zeros(x1.shape + (2, 2, 2))
            out[..., 1, 0, 0] = profile.d_second(x1)
            return out

    return DisplacementField(u, FieldKind.UnidirectionalAC, g, hs, profile, name=profile.name)


def quadratic_profile() -> UnidirectionalProfile:
    return UnidirectionalProfile(
        d=lambda x: np.asarray(x, dtype=float) ** 2,
        d_prime=lambda x: 2.0 * np.asarray(x, dtype=float),
        d_second=lambda x: np.full(np.shape(x), 2.0),
        d_infinity=None,
        name="quad-ac",
    )


def quadratic_ac() -> DisplacementField:
    return unidirectional_ac(quadratic_profile())


def quadratic_zz() -> DisplacementField:
    """u = (X2^2, 0)."""

    def u(X):
        X, _, x2 = _xy(X)
        return _stack2(x2 ** 2, np.zeros_like(x2))

    def g(X):
        X, _, x2 = _xy(X)
        z = np.zeros_like(x2)
        return _mat2(z, 2 * x2, z, z)

    def hs(X):
        X, x1, _ = _xy(X)
        out = np.zeros(x1.shape + (2, 2, 2))
        out[..., 0, 1, 1] = 2.0
        return out

    return DisplacementField(u, FieldKind.QuadraticZZ, g, hs, name="quad-zz")


def triaxial() -> DisplacementField:
    """u = (2 X1 X2, X1^2 - X2^2)."""

    def u(X):
        X, x1, x2 = _xy(X)
        return _stack2(2 * x1 * x2, x1 ** 2 - x2 ** 2)

    def g(X):
        X, x1, x2 = _xy(X)
        return _mat2(2 * x2, 2 * x1, 2 * x1, -2 * x2)

    def hs(X):
        X, x1, _ = _xy(X)
        out = np.zeros(x1.shape + (2, 2, 2))
        out[..., 0, 0, 1] = out[..., 0, 1, 0] = 2.0
        out[..., 1, 0, 0] = 2.0
        out[..., 1, 1, 1] = -2.0
        return out

    return DisplacementField(u, FieldKind.Triaxial, g, hs, name="triaxial")


def custom_field(u: Callable, grad: Optional[Callable] = None, name: str = "custom") -> DisplacementField:
    return DisplacementField(u, FieldKind.Custom, grad, None, name=name)


# ------------------------------------------------------ regularised profile

_GL_X, _GL_W = leggauss(64)


def _bump(t, w):
    return (1.0 - (t / w) ** 2) ** 2


def _mollify(x, fn, L, w):
    """(phi * fn)(x) with the quartic bump phi on [-w, w].

    fn is smooth on each piece between the kinks at +-L, so splitting the
    support at t = x -+ L makes 64-point Gauss-Legendre exact for the
    piecewise quadratic integrand up to roundoff.
    """
    x = np.asarray(x, dtype=float)
    flat = x.reshape(-1)
    k1 = np.clip(flat - L, -w, w)
    k2 = np.clip(flat + L, -w, w)
    edges = [np.full_like(flat, -w), k1, k2, np.full_like(flat, w)]
    acc = np.zeros_like(flat)
    for a, b in zip(edges[:-1], edges[1:]):
        half = 0.5 * (b - a)
        t = half[:, None] * _GL_X[None, :] + 0.5 * (a + b)[:, None]
        acc += half * np.sum(_GL_W * _bump(t, w) * fn(flat[:, None] - t), axis=1)
    return (acc / (16.0 * w / 15.0)).reshape(x.shape)


def regularized_quadratic(L: float, mollifier_width: float) -> UnidirectionalProfile:
    """Quadratic on [-L, L], continued linearly with slope +-2L, then mollified."""
    if not L > 0:
        raise ValueError(f"L must be positive, got {L}")
    if not mollifier_width > 0:
        raise ValueError(f"mollifier width must be positive, got {mollifier_width}")
    w = float(mollifier_width)

    def dt(y):
        return np.where(np.abs(y) <= L, y * y, 2 * L * np.abs(y) - L * L)

    def dpt(y):
        return np.clip(2 * y, -2 * L, 2 * L)

    def ddt(y):
        return np.where(np.abs(y) < L, 2.0, 0.0)

    return UnidirectionalProfile(
        d=lambda x: _mollify(x, dt, L, w),
        d_prime=lambda x: _mollify(x, dpt, L, w),
        d_second=lambda x: _mollify(x, ddt, L, w),
        d_infinity=2.0 * L,
        name=f"reg-ac:L={L:g},w={w:g}",
    )


def tabulated_profile(path) -> UnidirectionalProfile:
    """Two-column CSV (X1, d) interpolated by a not-a-knot cubic spline."""
    from scipy.interpolate import CubicSpline

    data = np.loadtxt(path, delimiter=",", comments="#", ndmin=2)
    if data.shape[1] < 2 or data.shape[0] < 4:
        raise ValueError(f"{path}: need at least 4 rows of (X1, d)")
    order = np.argsort(data[:, 0])
    spl = CubicSpline(data[order, 0], data[order, 1])
    d1, d2 = spl.derivative(1), spl.derivative(2)
    return UnidirectionalProfile(
        d=lambda x: spl(np.asarray(x, dtype=float)),
        d_prime=lambda x: d1(np.asarray(x, dtype=float)),
        d_second=lambda x: d2(np.asarray(x, dtype=float)),
        d_infinity=None,
        name=f"csv:{path}",
    )


# ----------------------------------------------------- strains and fields

def bond_strain(field: DisplacementField, X, nu: int) -> np.ndarray:
    """f_nu(X) = e_nu^T grad u(X) e_nu for nu in 1..3."""
    if nu not in (1, 2, 3):
        raise ValueError(f"bond index must be 1, 2 or 3, got {nu}")
    e = GEOMETRY.e[nu - 1]
    G = field.grad(X)
    return np.einsum("i,...ij,j->...", e, G, e)


def effective_potential(field: DisplacementField, X, t1: float = DEFAULT_T1):
    """(A1, A2) = (-(t1/2)(d1u1 - d2u2), (t1/2)(d1u2 + d2u1))."""
    G = field.grad(X)
    A1 = -(t1 / 2) * (G[..., 0, 0] - G[..., 1, 1])
    A2 = (t1 / 2) * (G[..., 1, 0] + G[..., 0, 1])
    return A1, A2


def pseudo_field_direct(Hs: np.ndarray, t1: float) -> np.ndarray:
    """B = (t1/2)(d11 u2 + 2 d12 u1 - d22 u2) from second derivatives."""
    return (t1 / 2) * (Hs[..., 1, 0, 0] + 2 * Hs[..., 0, 0, 1] - Hs[..., 1, 1, 1])


def pseudo_field_fd(field: DisplacementField, X, t1: float = DEFAULT_T1, h: float = H_FD) -> np.ndarray:
    """B = d1 A2 - d2 A1 by central differences of the effective potential."""
    X = np.asarray(X, dtype=float)
    dx = np.array([h, 0.0])
    dy = np.array([0.0, h])
    _, A2p = effective_potential(field, X + dx, t1)
    _, A2m = effective_potential(field, X - dx, t1)
    A1p, _ = effective_potential(field, X + dy, t1)
    A1m, _ = effective_potential(field, X - dy, t1)
    return (A2p - A2m) / (2 * h) - (A1p - A1m) / (2 * h)


def pseudo_field(field: DisplacementField, X, t1: float = DEFAULT_T1) -> np.ndarray:
    Hs = field.hessian(X)
    if Hs is not None:
        return pseudo_field_direct(Hs, t1)
    return pseudo_field_fd(field, X, t1)


# --------------------------------------------------------------- parsing

_REG = re.compile(r"^reg-ac:(.*)$")


def parse_deformation(name: str) -> DisplacementField:
    """Map a command-line deformation name to a field.

    none | quad-ac | quad-zz | triaxial | reg-ac:L=<v>,w=<v> | csv:<path> | <path>.csv
    """
    s = name.strip()
    if s == "none":
        return zero_field()
    if s == "quad-ac":
        return quadratic_ac()
    if s == "quad-zz":
        return quadratic_zz()
    if s == "triaxial":
        return triaxial()
    m = _REG.match(s)
    if m:
        params = {"L": 1.0, "w": 0.5}
        for item in filter(None, m.group(1).split(",")):
            key, _, val = item.partition("=")
            if key.strip() not in params:
                raise ValueError(f"unknown reg-ac parameter {key!r}")
            params[key.strip()] = float(val)
        return unidirectional_ac(regularized_quadratic(params["L"], params["w"]))
    if s.startswith("csv:") or s.endswith(".csv"):
        return unidirectional_ac(tabulated_profile(s[4:] if s.startswith("csv:") else s))
    raise ValueError(f"unknown deformation {name!r}")
