#!/usr/bin/env python3
"""Minimal end-to-end example of the batch API and the warm path.

Integrates f(x) = x^3 + x^2 + x against j_5(kx) over [1e-5, 100] for 1000
frequencies, then updates the integrand in place and re-runs the batch
reusing every factorization.
"""

import time

import numpy as np

from oscint import BatchRequest, IntegralType, IntegrandTable, new_session

x = np.geomspace(1e-5, 100.0, 100)
table = IntegrandTable(x, (x**3 + x**2 + x)[:, None], log_x=True, log_y=True)
session = new_session(IntegralType.SINGLE_SPHERICAL, table)

n_k = 1000
k = np.geomspace(1e-3, 1e4, n_k)
request = BatchRequest(
    a=np.full(n_k, x[0]),
    b=np.full(n_k, x[-1]),
    k=(k,),
    ell=(np.full(n_k, 5),),
)

t0 = time.perf_counter()
cold = session.integrate_batch(request)
print(f"cold pass: {time.perf_counter() - t0:.3f} s, "
      f"{session.last_factorization_count} factorizations, "
      f"{cold.converged.sum()}/{n_k} converged")

session.update_integrand(2.0 * table.values)
t0 = time.perf_counter()
warm = session.integrate_batch(request)
print(f"warm pass: {time.perf_counter() - t0:.3f} s, "
      f"{session.last_factorization_count} factorizations")
print(f"doubled integrand doubles results: "
      f"{np.allclose(warm.values, 2.0 * cold.values, rtol=1e-12)}")
