"""Integrals of smooth tabulated functions times products of up to three
spherical or cylindrical Bessel functions, via adaptive Levin collocation."""

__version__ = "0.1.0"

from .adaptive import BisectionTree, LevinSettings, integrate_adaptive, low_freq_fallback
from .api import BatchRequest, BatchResult, IntegralType, Session, new_session
from .bessel import (
    BesselFamily,
    OscillatorKind,
    OscillatorParams,
    a_matrix,
    cyl_bessel,
    sph_bessel,
    w_vector,
)
from .integrand import IntegrandTable, Interpolant
from .oracle import OracleSettings, adaptive_quad, quad_reference

__all__ = [
    "BatchRequest",
    "BatchResult",
    "BesselFamily",
    "BisectionTree",
    "IntegralType",
    "IntegrandTable",
    "Interpolant",
    "LevinSettings",
    "OracleSettings",
    "OscillatorKind",
    "OscillatorParams",
    "Session",
    "a_matrix",
    "adaptive_quad",
    "cyl_bessel",
    "integrate_adaptive",
    "low_freq_fallback",
    "new_session",
    "quad_reference",
    "sph_bessel",
    "w_vector",
]
