"""Built-in validation suite behind the ``selftest`` CLI command.

Runs closed-form checks, oracle agreement and the structural invariants of
the integrator and prints one pass/fail line per check.  The derivative
identity accepts an injectable A-matrix implementation so that a mutation
(e.g. a sign flip) demonstrably trips the check.
"""

from __future__ import annotations

import math

import numpy as np

from . import bessel
from .adaptive import LevinSettings
from .api import BatchRequest, IntegralType, Session
from .bessel import BesselFamily, OscillatorKind, OscillatorParams, w_vector
from .benchmarks import PROBLEMS, oracle_at
from .integrand import IntegrandTable


def sine_integral(x: float, terms: int = 60) -> float:
    """Si(x) by its ascending power series; adequate for |x| up to ~15."""
    total = 0.0
    for n in range(terms):
        total += (-1) ** n * x ** (2 * n + 1) / ((2 * n + 1) * math.factorial(2 * n + 1))
    return total


def _fd_w(kind, params, x, h):
    """Fourth-order central difference of w_vector at x with step h."""
    stencil = (
        w_vector(kind, params, x - 2 * h)
        - 8 * w_vector(kind, params, x - h)
        + 8 * w_vector(kind, params, x + h)
        - w_vector(kind, params, x + 2 * h)
    )
    return stencil / (12 * h)


def check_derivative_identity(n_cases: int = 200, a_matrix_fn=None, seed: int = 1234):
    """||FD(w) - A w|| <= 1e-6 (||A w|| + 1e-14) over randomized oscillators."""
    a_matrix_fn = a_matrix_fn or bessel.a_matrix
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_cases):
        count = int(rng.integers(1, 4))
        family = BesselFamily.SPHERICAL if rng.integers(2) else BesselFamily.CYLINDRICAL
        kind = OscillatorKind(family, count)
        params = OscillatorParams(
            orders=tuple(int(l) for l in rng.integers(0, 21, count)),
            freqs=tuple(np.exp(rng.uniform(np.log(0.1), np.log(100.0), count))),
        )
        x = rng.uniform(0.1, 10.0)
        h = 1e-5 * x
        w = w_vector(kind, params, x)
        aw = a_matrix_fn(kind, params, x) @ w
        resid = np.linalg.norm(_fd_w(kind, params, x, h) - aw)
        ratio = resid / (np.linalg.norm(aw) + 1e-14)
        worst = max(worst, ratio / 1e-6)
        if ratio > 1e-6:
            return False, f"residual ratio {ratio:.2e} at {kind}, {params}, x={x:.4f}"
    return True, f"{n_cases} cases, worst margin {worst:.2e} of tolerance"


def check_kronecker_consistency():
    """Product A matrices equal permuted Kronecker sums, entrywise exactly."""
    from .bessel import _PERM, _single_a

    rng = np.random.default_rng(7)
    for family in BesselFamily:
        for count in (2, 3):
            kind = OscillatorKind(family, count)
            orders = tuple(int(l) for l in rng.integers(0, 12, count))
            freqs = tuple(rng.uniform(0.5, 5.0, count))
            params = OscillatorParams(orders, freqs)
            x = rng.uniform(0.5, 2.0)
            singles = [_single_a(family, l, k, x) for l, k in zip(orders, freqs)]
            expect = singles[0]
            for a_i in singles[1:]:
                expect = np.kron(a_i, np.eye(expect.shape[0])) + np.kron(np.eye(2), expect)
            perm = _PERM[count]
            expect = expect[np.ix_(perm, perm)]
            got = bessel.a_matrix(kind, params, x)
            if not np.array_equal(got, expect):
                return False, f"mismatch for {kind}"
    return True, "exact for both families, counts 2 and 3"


def check_si_value():
    """Single spherical j_0 with f = 1 over [1e-3, pi] equals Si(pi) - Si(1e-3)."""
    x = np.geomspace(5e-4, 4.0, 50)
    table = IntegrandTable(x, np.ones((len(x), 1)), log_x=True, log_y=False)
    session = Session(IntegralType.SINGLE_SPHERICAL, table)
    req = BatchRequest(a=[1e-3], b=[np.pi], k=([1.0],), ell=([0],))
    res = session.integrate_batch(req)
    expect = sine_integral(np.pi) - sine_integral(1e-3)
    err = abs(res.values[0, 0] - expect) / abs(expect)
    return bool(err < 1e-6 and res.converged[0]), f"rel err {err:.2e}"


def check_hankel_closed_form():
    """<r^5 exp(-r^2/2), J_4(kr)> at k = 1 equals exp(-1/2)."""
    problem = PROBLEMS["eq6"]
    session = problem.session()
    req = problem.request(np.array([1.0]))
    res = session.integrate_batch(req)
    expect = math.exp(-0.5)
    err = abs(res.values[0, 0] - expect) / expect
    return bool(err < 1e-3 and res.converged[0]), f"rel err {err:.2e}"


def _linear_test_session():
    x = np.geomspace(1e-3, 50.0, 200)
    table = IntegrandTable(x, (x**2)[:, None], log_x=True, log_y=False)
    session = Session(IntegralType.SINGLE_SPHERICAL, table)
    req = BatchRequest(a=[1e-2, 1e-2], b=[40.0, 40.0], k=([2.0, 5.0],), ell=([3, 3],))
    return session, req, x


def check_frozen_tree_linearity():
    """With the bisection tree frozen, results are linear in the integrand."""
    session, req, x = _linear_test_session()
    f, g = x**2, x + 5.0
    alpha, beta = 0.7, -1.3
    res_f = session.integrate_batch(req).values       # cold, builds the tree
    session.update_integrand(g[:, None])
    res_g = session.integrate_batch(req).values
    session.update_integrand((alpha * f + beta * g)[:, None])
    res_c = session.integrate_batch(req).values
    expect = alpha * res_f + beta * res_g
    err = np.max(np.abs(res_c - expect) / (np.abs(expect) + 1e-300))
    return bool(err <= 1e-13), f"max rel deviation {err:.2e}"


def _two_column_session(workers: int = 1):
    x = np.geomspace(1e-3, 50.0, 200)
    values = np.stack([x**2, x**1.5 + 1.0], axis=1)
    table = IntegrandTable(x, values, log_x=True, log_y=True)
    return Session(IntegralType.SINGLE_SPHERICAL, table, workers=workers)


def _two_tuple_request(diagonal: bool = False):
    return BatchRequest(
        a=[1e-2, 1e-2], b=[40.0, 30.0], k=([2.0, 7.0],), ell=([3, 6],),
        diagonal=diagonal,
    )


def check_diagonal_consistency():
    """Diagonal mode equals the diagonal of the full matrix, bitwise."""
    session = _two_column_session()
    full = session.integrate_batch(_two_tuple_request()).values
    diag = session.integrate_batch(_two_tuple_request(diagonal=True)).values
    ok = np.array_equal(diag, np.diagonal(full))
    return bool(ok), "bitwise equal" if ok else "diagonal differs from full run"


def check_batch_loop_equivalence():
    """One batch of M tuples equals M single-tuple batches, bitwise."""
    batch = _two_column_session().integrate_batch(_two_tuple_request()).values
    loop_session = _two_column_session()
    rows = []
    for a, b, k, ell in [(1e-2, 40.0, 2.0, 3), (1e-2, 30.0, 7.0, 6)]:
        rows.append(loop_session.integrate_batch(
            BatchRequest(a=[a], b=[b], k=([k],), ell=([ell],))
        ).values[0])
    ok = np.array_equal(batch, np.array(rows))
    return bool(ok), "bitwise equal" if ok else "loop results differ from batch"


def check_worker_independence():
    """Results are bitwise identical for 1 and 4 workers."""
    one = _two_column_session(workers=1).integrate_batch(_two_tuple_request()).values
    four = _two_column_session(workers=4).integrate_batch(_two_tuple_request()).values
    ok = np.array_equal(one, four)
    return bool(ok), "bitwise equal" if ok else "worker count changed results"


def check_oracle_agreement():
    """Levin matches the reference quadrature at moderate frequency."""
    problem = PROBLEMS["eq7"]
    session = problem.session()
    ks = np.array([0.05, 0.2, 1.0])
    res = session.integrate_batch(problem.request(ks))
    worst = 0.0
    for i, k in enumerate(ks):
        ref, ok = oracle_at(problem, session, k)
        if not ok:
            return False, f"oracle failed to converge at k={k}"
        worst = max(worst, abs(res.values[i, 0] - ref) / abs(ref))
    return bool(worst < 1e-3), f"worst rel diff {worst:.2e}"


def run_selftest(quick: bool = False, a_matrix_fn=None, stream=None) -> bool:
    """Run all checks, print a pass/fail table, return overall success."""
    checks = [
        ("derivative identity",
         lambda: check_derivative_identity(50 if quick else 200, a_matrix_fn)),
        ("kronecker sum consistency", check_kronecker_consistency),
        ("Si(pi) single Bessel", check_si_value),
        ("Hankel closed form", check_hankel_closed_form),
        ("frozen-tree linearity", check_frozen_tree_linearity),
        ("diagonal-mode consistency", check_diagonal_consistency),
        ("batch/loop equivalence", check_batch_loop_equivalence),
        ("worker-count independence", check_worker_independence),
    ]
    if not quick:
        checks.append(("oracle agreement", check_oracle_agreement))

    all_ok = True
    for name, fn in checks:
        ok, detail = fn()
        all_ok &= ok
        print(f"{'PASS' if ok else 'FAIL'}  {name:30s} {detail}", file=stream)
    return all_ok
