"""Bessel kernels: the oscillatory vectors w and the ODE matrices A.

The integrals handled by this package contain a product of up to three
spherical (j_ell) or cylindrical (J_nu) Bessel functions.  Each product is
closed under differentiation once the order-(ell+1) partners are adjoined,
giving a vector w(x) of dimension 2^count satisfying w'(x) = A(x) w(x).
This module evaluates the Bessel factors, the vectors w and the matrices A
for all six supported integral types.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy import special as _sp


class BesselFamily(enum.Enum):
    SPHERICAL = "spherical"
    CYLINDRICAL = "cylindrical"


@dataclass(frozen=True)
class OscillatorKind:
    """Which family of Bessel function and how many factors (1, 2 or 3)."""

    family: BesselFamily
    count: int

    def __post_init__(self):
        if self.count not in (1, 2, 3):
            raise ValueError(f"count must be 1, 2 or 3, got {self.count}")

    @property
    def dim(self) -> int:
        """Dimension of w and A: 2 per Bessel factor."""
        return 2 ** self.count


@dataclass(frozen=True)
class OscillatorParams:
    """Orders ell_i and frequencies k_i of the Bessel factors."""

    orders: tuple[int, ...]
    freqs: tuple[float, ...]

    def __post_init__(self):
        if len(self.orders) != len(self.freqs):
            raise ValueError("orders and freqs must have the same length")
        if any(int(l) != l or l < 0 for l in self.orders):
            raise ValueError(f"orders must be non-negative integers, got {self.orders}")
        if any(k < 0 for k in self.freqs):
            raise ValueError(f"freqs must be non-negative, got {self.freqs}")

    def validate_for(self, kind: OscillatorKind) -> None:
        if len(self.orders) != kind.count:
            raise ValueError(
                f"expected {kind.count} (order, freq) pairs, got {len(self.orders)}"
            )


def sph_bessel(ell, x):
    """Spherical Bessel function j_ell(x) for integer ell >= 0, x >= 0.

    Underflows to 0.0 for large ell and small argument instead of raising.
    Accepts array arguments.
    """
    ell = np.asarray(ell)
    x = np.asarray(x)
    if np.any(ell < 0):
        raise ValueError("order must be non-negative")
    if np.any(x < 0):
        raise ValueError("argument must be non-negative")
    out = _sp.spherical_jn(ell.astype(int), x.astype(float))
    # extreme order/argument combinations can round-trip through 0/0
    return np.nan_to_num(out, nan=0.0) if np.any(np.isnan(out)) else out


def cyl_bessel(nu, x):
    """Cylindrical Bessel function J_nu(x) for integer nu >= 0, x >= 0."""
    nu = np.asarray(nu)
    x = np.asarray(x)
    if np.any(nu < 0):
        raise ValueError("order must be non-negative")
    if np.any(x < 0):
        raise ValueError("argument must be non-negative")
    out = _sp.jv(nu.astype(int), x.astype(float))
    return np.nan_to_num(out, nan=0.0) if np.any(np.isnan(out)) else out


def _bessel(family: BesselFamily, ell, x):
    if family is BesselFamily.SPHERICAL:
        return sph_bessel(ell, x)
    return cyl_bessel(ell, x)


# The three-factor vector follows the printed tensor ordering used by the
# 8x8 system, which is a fixed permutation of the plain Kronecker ordering
# (factor-1 index fastest): position i of w holds natural component PERM3[i].
_PERM3 = np.array([0, 1, 2, 4, 3, 6, 5, 7])
_PERM = {1: np.array([0, 1]), 2: np.arange(4), 3: _PERM3}


def w_vector(kind: OscillatorKind, params: OscillatorParams, x):
    """Oscillatory vector w(x) of dimension 2^count.

    Component ordering: for one factor (j_l, j_{l+1}); for two factors
    (l1,l2), (l1+1,l2), (l1,l2+1), (l1+1,l2+1); for three factors the
    8-component tensor ordering with the all-raised component last.

    ``x`` may be a scalar (returns shape (dim,)) or a 1-d array
    (returns shape (dim, len(x))).
    """
    params.validate_for(kind)
    x_arr = np.asarray(x, dtype=float)
    if np.any(x_arr <= 0):
        raise ValueError("x must be positive")
    # pairs[i] = (J_{l_i}(k_i x), J_{l_i+1}(k_i x))
    pairs = []
    for ell, k in zip(params.orders, params.freqs):
        pairs.append(np.stack([
            _bessel(kind.family, ell, k * x_arr),
            _bessel(kind.family, ell + 1, k * x_arr),
        ]))
    w = pairs[0]
    for p in pairs[1:]:
        # natural Kronecker ordering: earlier factor's index varies fastest
        w = np.einsum("a...,b...->ba...", w, p).reshape((-1,) + x_arr.shape)
    return w[_PERM[kind.count]]


def _single_a(family: BesselFamily, ell: int, k: float, x) -> np.ndarray:
    # derivative system of (J_l(kx), J_{l+1}(kx)) from the recurrences
    x = np.asarray(x, dtype=float)
    drop = ell + 2 if family is BesselFamily.SPHERICAL else ell + 1
    out = np.empty(x.shape + (2, 2))
    out[..., 0, 0] = ell / x
    out[..., 0, 1] = -k
    out[..., 1, 0] = k
    out[..., 1, 1] = -drop / x
    return out


def _batch_kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product over a leading batch axis."""
    m, p, q = a.shape
    _, r, s = b.shape
    return np.einsum("jab,jcd->jacbd", a, b).reshape(m, p * r, q * s)


def a_matrix_stack(kind: OscillatorKind, params: OscillatorParams, x) -> np.ndarray:
    """A(x) for a 1-d array of abscissae; shape (len(x), dim, dim)."""
    params.validate_for(kind)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(x <= 0):
        raise ValueError("x must be positive")
    a = _single_a(kind.family, params.orders[0], params.freqs[0], x)
    eye2 = np.broadcast_to(np.eye(2), (len(x), 2, 2))
    for ell, k in zip(params.orders[1:], params.freqs[1:]):
        a_i = _single_a(kind.family, ell, k, x)
        eye_d = np.broadcast_to(np.eye(a.shape[1]), a.shape)
        a = _batch_kron(a_i, eye_d) + _batch_kron(eye2, a)
    perm = _PERM[kind.count]
    return a[:, perm][:, :, perm]


def a_matrix(kind: OscillatorKind, params: OscillatorParams, x: float) -> np.ndarray:
    """Matrix A(x) with w'(x) = A(x) w(x), in the same ordering as w_vector.

    Product systems are Kronecker sums of the single-factor 2x2 blocks,
    permuted into the w_vector component ordering.
    """
    return a_matrix_stack(kind, params, x)[0]
