"""Levin collocation on a single subinterval.

The oscillatory integral over [lo, hi] is converted into a boundary term
<p, w>(hi) - <p, w>(lo), where p solves p' + A^T p = F collocated at
Chebyshev-Gauss-Lobatto nodes in a Chebyshev polynomial basis.  The
collocation matrix depends only on the oscillator and the interval, never
on the integrand, so its LU factorization is stored and reused across
right-hand sides.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass

import numpy as np
from scipy.linalg import lu_factor, lu_solve

import functools

from .bessel import OscillatorKind, OscillatorParams, a_matrix_stack, w_vector


class DegenerateSystemError(Exception):
    """Collocation matrix is singular to working precision."""

    def __init__(self, interval):
        self.interval = interval
        super().__init__(f"degenerate collocation system on {interval}")


class _Counter:
    """Thread-safe count of matrix factorizations performed."""

    def __init__(self):
        self._value = 0
        self._lock = threading.Lock()

    def increment(self):
        with self._lock:
            self._value += 1

    @property
    def value(self) -> int:
        return self._value


#: Global factorization counter; warm-path runs must not advance it.
factorizations = _Counter()


def chebyshev_basis(n: int, t: float):
    """Values and derivatives of T_0..T_{n-1} at t in [-1, 1].

    Three-term recurrences; the caller applies the chain-rule factor
    2/(hi - lo) to the derivatives.
    """
    if abs(t) > 1:
        raise ValueError(f"t must lie in [-1, 1], got {t}")
    values = np.empty(n)
    derivs = np.empty(n)
    values[0], derivs[0] = 1.0, 0.0
    if n > 1:
        values[1], derivs[1] = t, 1.0
    for m in range(2, n):
        values[m] = 2 * t * values[m - 1] - values[m - 2]
        derivs[m] = 2 * values[m - 1] + 2 * t * derivs[m - 1] - derivs[m - 2]
    return values, derivs


def lobatto_nodes(lo: float, hi: float, n: int) -> np.ndarray:
    """Chebyshev-Gauss-Lobatto nodes mapped to [lo, hi], ascending."""
    t = -np.cos(np.pi * np.arange(n) / (n - 1))
    x = 0.5 * (lo + hi) + 0.5 * (hi - lo) * t
    x[0], x[-1] = lo, hi    # pin endpoints against round-off drift
    return x


@functools.lru_cache(maxsize=None)
def _basis_at_lobatto(n: int):
    """(values, derivs) of T_0..T_{n-1} at the n Lobatto t-nodes, shape (n, n)."""
    t = -np.cos(np.pi * np.arange(n) / (n - 1))
    values = np.empty((n, n))
    derivs = np.empty((n, n))
    for j, tj in enumerate(t):
        values[j], derivs[j] = chebyshev_basis(n, tj)
    return values, derivs


@dataclass(frozen=True)
class SubintervalSystem:
    """Factorized collocation operator for one subinterval.

    Depends on (kind, params, interval, n) only; solve against any number
    of right-hand sides without re-assembly.
    """

    kind: OscillatorKind
    params: OscillatorParams
    interval: tuple[float, float]
    n: int
    nodes: np.ndarray            # collocation abscissae, ascending
    lu: tuple                    # (lu, piv) from scipy.linalg.lu_factor
    basis_at_nodes: np.ndarray   # (n, n): T_m(t_j)
    w_lo: np.ndarray
    w_hi: np.ndarray
    #: weights q with <p, w>(hi) - <p, w>(lo) = q . f(nodes); the boundary
    #: functional is linear in the collocated integrand values
    quad_weights: np.ndarray

    @property
    def dim(self) -> int:
        return self.kind.dim


def assemble(
    kind: OscillatorKind,
    params: OscillatorParams,
    interval: tuple[float, float],
    n: int,
) -> SubintervalSystem:
    """Build and factorize the (n*d) x (n*d) collocation matrix.

    Block (j, m) of the matrix is u'_m(x_j) I_d + u_m(x_j) A^T(x_j); the
    unknowns are the d-vector Chebyshev coefficients of p.
    """
    lo, hi = interval
    if lo <= 0:
        raise ValueError("interval must start at positive x")
    if hi <= lo:
        raise ValueError("interval must have positive length")
    if n < 2:
        raise ValueError(f"n must be >= 2, got {n}")

    d = kind.dim
    nodes = lobatto_nodes(lo, hi, n)
    scale = 2.0 / (hi - lo)

    basis, basis_derivs = _basis_at_lobatto(n)
    a_t = a_matrix_stack(kind, params, nodes).transpose(0, 2, 1)
    # block (j, m) is u'_m(x_j) I_d + u_m(x_j) A^T(x_j)
    blocks = np.einsum("jm,ab->jamb", scale * basis_derivs, np.eye(d))
    blocks += np.einsum("jm,jab->jamb", basis, a_t)
    m_full = blocks.reshape(n * d, n * d)

    lu, piv = lu_factor(m_full, check_finite=False)
    factorizations.increment()
    u_diag = np.abs(np.diag(lu))
    if u_diag.min() <= 1e-14 * u_diag.max():
        raise DegenerateSystemError(interval)

    w_lo = w_vector(kind, params, lo)
    w_hi = w_vector(kind, params, hi)
    # the integral is s . c with s combining the boundary oscillator vectors
    # (T_m(1) = 1, T_m(-1) = (-1)^m) and c = M^-1 R f, so q = R^T M^-T s
    # turns each solve into a dot product with the collocated f values
    signs = np.where(np.arange(n) % 2 == 0, 1.0, -1.0)
    s_vec = (w_hi[None, :] - signs[:, None] * w_lo[None, :]).reshape(n * d)
    quad_weights = lu_solve((lu, piv), s_vec, trans=1, check_finite=False)[::d]

    return SubintervalSystem(
        kind=kind,
        params=params,
        interval=(lo, hi),
        n=n,
        nodes=nodes,
        lu=(lu, piv),
        basis_at_nodes=basis,
        w_lo=w_lo,
        w_hi=w_hi,
        quad_weights=quad_weights,
    )


def solve_rhs(system: SubintervalSystem, f_at_nodes: np.ndarray) -> np.ndarray:
    """Coefficients c for right-hand side F(x_j) = (f(x_j), 0, ..., 0).

    ``f_at_nodes`` has shape (n,) or (n, n_integrands); several integrands
    share the one stored factorization.  Returns (n*d,) or (n*d, n_integrands).
    """
    f_at_nodes = np.asarray(f_at_nodes, dtype=float)
    single = f_at_nodes.ndim == 1
    f2 = f_at_nodes[:, None] if single else f_at_nodes
    n, d = system.n, system.dim
    if f2.shape[0] != n:
        raise ValueError(f"expected {n} node values, got {f2.shape[0]}")
    rhs = np.zeros((n * d, f2.shape[1]))
    rhs[::d] = f2          # f enters only the first component of F
    c = lu_solve(system.lu, rhs, check_finite=False)
    return c[:, 0] if single else c


def interval_integral(system: SubintervalSystem, c: np.ndarray) -> np.ndarray:
    """<p, w>(hi) - <p, w>(lo) for coefficients from solve_rhs."""
    single = c.ndim == 1
    c3 = c.reshape(system.n, system.dim, -1)
    # T_m(+1) = 1 and T_m(-1) = (-1)^m
    p_hi = c3.sum(axis=0)
    signs = np.where(np.arange(system.n) % 2 == 0, 1.0, -1.0)
    p_lo = np.einsum("m,mdi->di", signs, c3)
    result = system.w_hi @ p_hi - system.w_lo @ p_lo
    return result[0] if single else result
