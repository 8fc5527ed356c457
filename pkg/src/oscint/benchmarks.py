"""Built-in benchmark problems for the bench CLI command and the tests.

Four classic setups, named eq4/eq6/eq7/eq8 on the command line:

  eq4 - Hankel transform of x^2/(x^2+1) against J_0, truncated to [1e-5, 1e8]
  eq6 - Hankel self-transform pair: r^5 exp(-r^2/2) against J_4, whose
        transform is k^4 exp(-k^2/2) in closed form
  eq7 - (x^3 + x^2 + x) j_10(kx) j_5(kx) over [1e-5, 100]
  eq8 - same with an extra j_15(kx) factor
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .adaptive import LevinSettings
from .api import BatchRequest, IntegralType, Session
from .bessel import OscillatorParams
from .integrand import IntegrandTable
from .oracle import OracleSettings, quad_reference


@dataclass(frozen=True)
class BenchProblem:
    name: str
    integral_type: IntegralType
    x_grid: np.ndarray
    f: Callable[[np.ndarray], np.ndarray]
    ells: tuple[int, ...]
    k_range: tuple[float, float]
    n_k: int
    closed_form: Callable[[np.ndarray], np.ndarray] | None = None

    def table(self) -> IntegrandTable:
        return IntegrandTable(
            self.x_grid, self.f(self.x_grid)[:, None], log_x=True, log_y=True
        )

    def session(self, settings: LevinSettings | None = None, workers: int = 1):
        return Session(self.integral_type, self.table(), settings, workers)

    def k_values(self, n_k: int | None = None) -> np.ndarray:
        return np.geomspace(*self.k_range, n_k or self.n_k)

    def request(self, k: np.ndarray) -> BatchRequest:
        count = self.integral_type.count
        ones = np.ones_like(k)
        return BatchRequest(
            a=self.x_grid[0] * ones,
            b=self.x_grid[-1] * ones,
            k=tuple(k for _ in range(count)),
            ell=tuple(ell * ones.astype(int) for ell in self.ells),
        )


def _poly(x):
    return x**3 + x**2 + x


PROBLEMS = {
    "eq4": BenchProblem(
        name="eq4",
        integral_type=IntegralType.SINGLE_CYLINDRICAL,
        x_grid=np.geomspace(1e-5, 1e8, 800),
        f=lambda x: x**2 / (x**2 + 1),
        ells=(0,),
        k_range=(1.0, 1e4),
        n_k=500,
    ),
    "eq6": BenchProblem(
        name="eq6",
        integral_type=IntegralType.SINGLE_CYLINDRICAL,
        x_grid=np.geomspace(1e-5, 30.0, 600),
        f=lambda r: r**5 * np.exp(-0.5 * r**2),
        ells=(4,),
        k_range=(1e-4, 1e4),
        n_k=256,
        closed_form=lambda k: k**4 * np.exp(-0.5 * k**2),
    ),
    "eq7": BenchProblem(
        name="eq7",
        integral_type=IntegralType.DOUBLE_SPHERICAL,
        x_grid=np.geomspace(1e-5, 100.0, 500),
        f=_poly,
        ells=(10, 5),
        k_range=(1e-2, 1e3),
        n_k=1000,
    ),
    "eq8": BenchProblem(
        name="eq8",
        integral_type=IntegralType.TRIPLE_SPHERICAL,
        x_grid=np.geomspace(1e-5, 100.0, 500),
        f=_poly,
        ells=(10, 5, 15),
        k_range=(1e-2, 1e3),
        n_k=1000,
    ),
}


def oracle_at(problem: BenchProblem, session: Session, k: float,
              settings: OracleSettings | None = None):
    """Reference value at one frequency, through the session's interpolant."""
    params = OscillatorParams(
        orders=problem.ells,
        freqs=tuple(float(k) for _ in problem.ells),
    )
    return quad_reference(
        session.integral_type.kind, params,
        float(problem.x_grid[0]), float(problem.x_grid[-1]),
        lambda x: session.interp(x)[..., 0],
        settings,
    )


def run_benchmark(name: str, n_k: int | None = None, oracle_every: int = 1,
                  settings: LevinSettings | None = None):
    """Time the Levin path against the reference quadrature.

    Returns a dict with the k grid, Levin values/time (warm path, matching
    how the integrator is used in practice), per-point oracle results and a
    closed-form column when the problem has one.
    """
    problem = PROBLEMS[name]
    session = problem.session(settings)
    k = problem.k_values(n_k)
    req = problem.request(k)

    t0 = time.perf_counter()
    session.integrate_batch(req)              # cold: builds the trees
    cold_time = time.perf_counter() - t0
    t0 = time.perf_counter()
    result = session.integrate_batch(req)     # warm: factorizations reused
    levin_time = time.perf_counter() - t0

    oracle_vals = np.full(len(k), np.nan)
    oracle_ok = np.zeros(len(k), dtype=bool)
    oracle_time = 0.0
    n_oracle = 0
    # an effectively-zero abs_tol keeps the oracle honest on tiny integrals:
    # it either resolves them in relative terms or reports non-convergence
    oracle_settings = OracleSettings(abs_tol=1e-280, rel_tol=1e-10)
    for i in range(0, len(k), max(1, oracle_every)):
        t0 = time.perf_counter()
        val, ok = oracle_at(problem, session, k[i], oracle_settings)
        oracle_time += time.perf_counter() - t0
        oracle_vals[i], oracle_ok[i] = val, ok
        n_oracle += 1

    return {
        "problem": name,
        "k": k,
        "levin": result.values[:, 0],
        "levin_converged": result.converged,
        "levin_time": levin_time,
        "cold_time": cold_time,
        "oracle": oracle_vals,
        "oracle_converged": oracle_ok,
        "oracle_time": oracle_time,
        "n_oracle": n_oracle,
        "closed_form": problem.closed_form(k) if problem.closed_form else None,
    }
