"""Reference quadrature for validating the collocation integrator.

Globally adaptive 15-point Gauss-Kronrod quadrature applied to the full
direct integrand f(x) times the Bessel product.  Deliberately independent
of the Levin machinery: it shares only the Bessel evaluations and (when the
caller passes an Interpolant) the integrand interpolation, so that any
disagreement isolates the quadrature method.

At large oscillator frequency this integrator is expected to exhaust its
subinterval budget and report non-convergence; that regime is exactly what
the Levin path exists for.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np

from .bessel import OscillatorKind, OscillatorParams, w_vector

# 15-point Kronrod rule with embedded 7-point Gauss rule (positive half).
_XK = np.array([
    0.991455371120813, 0.949107912342759, 0.864864423359769,
    0.741531185599394, 0.586087235467691, 0.405845151377397,
    0.207784955007898, 0.0,
])
_WK = np.array([
    0.022935322010529, 0.063092092629979, 0.104790010322250,
    0.140653259715525, 0.169004726639267, 0.190350578064785,
    0.204432940075298, 0.209482141084728,
])
_WG = np.array([
    0.129484966168870, 0.279705391489277, 0.381830050505119,
    0.417959183673469,
])

_NODES = np.concatenate([-_XK[:-1], _XK[::-1]])          # ascending, 15 nodes
_W_KRON = np.concatenate([_WK[:-1], _WK[::-1]])
_W_GAUSS = np.zeros(15)
_W_GAUSS[1:-1:2] = np.concatenate([_WG[:-1], _WG[::-1]])  # Gauss nodes interleave


@dataclass(frozen=True)
class OracleSettings:
    abs_tol: float = 1e-12
    rel_tol: float = 1e-10
    max_subintervals: int = 1000

    def __post_init__(self):
        if self.abs_tol <= 0 or self.rel_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.max_subintervals < 1:
            raise ValueError("max_subintervals must be >= 1")


def _panel(g, lo, hi):
    """Kronrod value, error estimate for one panel of the integrand g."""
    half = 0.5 * (hi - lo)
    x = 0.5 * (lo + hi) + half * _NODES
    y = np.asarray(g(x), dtype=float)
    kron = half * np.dot(_W_KRON, y)
    gauss = half * np.dot(_W_GAUSS, y)
    # QUADPACK-style rescaled error estimate
    resasc = half * np.dot(_W_KRON, np.abs(y - kron / (hi - lo)))
    err = abs(kron - gauss)
    if resasc > 0 and err > 0:
        err = resasc * min(1.0, (200.0 * err / resasc) ** 1.5)
    return kron, err


def adaptive_quad(g, a: float, b: float, settings: OracleSettings | None = None):
    """Adaptively integrate a scalar callable g over [a, b].

    Returns (value, converged); converged is False when the subinterval
    budget runs out before the tolerance is met.
    """
    settings = settings or OracleSettings()
    val, err = _panel(g, a, b)
    heap = [(-err, 0, a, b, val, err)]
    total_val, total_err = val, err
    seq = 1
    while len(heap) < settings.max_subintervals:
        tol = max(settings.abs_tol, settings.rel_tol * abs(total_val))
        if total_err <= tol:
            return total_val, True
        _, _, lo, hi, val, err = heapq.heappop(heap)
        mid = 0.5 * (lo + hi)
        val_l, err_l = _panel(g, lo, mid)
        val_r, err_r = _panel(g, mid, hi)
        total_val += val_l + val_r - val
        total_err += err_l + err_r - err
        heapq.heappush(heap, (-err_l, seq, lo, mid, val_l, err_l))
        heapq.heappush(heap, (-err_r, seq + 1, mid, hi, val_r, err_r))
        seq += 2
    tol = max(settings.abs_tol, settings.rel_tol * abs(total_val))
    return total_val, bool(total_err <= tol)


def quad_reference(
    kind: OscillatorKind,
    params: OscillatorParams,
    a: float,
    b: float,
    f,
    settings: OracleSettings | None = None,
):
    """Reference value of the oscillatory integral of f times the Bessel product.

    ``f`` is a callable mapping an abscissa array to smooth-part values
    (typically an Interpolant column, so both integrators see the same f).
    """
    if a <= 0 or a >= b:
        raise ValueError("require 0 < a < b")

    def g(x):
        return np.asarray(f(x)) * w_vector(kind, params, x)[0]

    return adaptive_quad(g, a, b, settings)
