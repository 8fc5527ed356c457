"""End-to-end acceptance gate.

Each criterion prints a single PASS/FAIL line with its measured numbers so a
run log doubles as a report.  Cosmology pipeline comparisons from the original
application domain are not reproducible here; they are replaced by criteria
1-6 below (closed-form transform pair, quadrature cross-checks, the
high-frequency regime where quadrature fails, and the timing/reuse gates).
"""

import time

import numpy as np
import pytest

from oscint import levin
from oscint.benchmarks import PROBLEMS, oracle_at
from oscint.oracle import OracleSettings

TIGHT_ORACLE = OracleSettings(abs_tol=1e-280, rel_tol=1e-10)


def _report(num, name, ok, detail):
    line = f"acceptance {num} [{name}]: {'PASS' if ok else 'FAIL'} ({detail})"
    print(f"\n{line}", flush=True)
    assert ok, f"criterion {num} ({name}): {detail}"


def test_criterion_1_closed_form_transform():
    """Hankel pair r^5 exp(-r^2/2) <-> k^4 exp(-k^2/2), 64 frequencies."""
    problem = PROBLEMS["eq6"]
    session = problem.session()
    k = np.geomspace(0.1, 10.0, 64)
    t0 = time.perf_counter()
    result = session.integrate_batch(problem.request(k))
    elapsed = time.perf_counter() - t0

    truth = problem.closed_form(k)
    mask = np.abs(truth) > 1e-12
    rel = np.abs(result.values[mask, 0] - truth[mask]) / np.abs(truth[mask])
    ok = rel.max() < 1e-3 and elapsed < 5.0
    _report(1, "closed-form transform", ok,
            f"worst rel {rel.max():.3g} over {mask.sum()} points, {elapsed:.2f} s")


def _oracle_crosscheck(num, name, problem_name, budget):
    problem = PROBLEMS[problem_name]
    session = problem.session()
    t0 = time.perf_counter()

    k_low = np.geomspace(1e-2, 1e2, 20)
    result = session.integrate_batch(problem.request(k_low))
    worst = 0.0
    n_checked = 0
    for i, k in enumerate(k_low):
        ref, ref_ok = oracle_at(problem, session, k, TIGHT_ORACLE)
        if not ref_ok:
            continue
        n_checked += 1
        worst = max(worst, abs(result.values[i, 0] - ref) / (abs(ref) + 1e-300))

    k_high = np.array([300.0, 1000.0])
    high = session.integrate_batch(problem.request(k_high))
    high_ok = bool(high.converged.all() and np.isfinite(high.values).all())
    oracle_failed = all(
        not oracle_at(problem, session, k, TIGHT_ORACLE)[1] for k in k_high
    )
    elapsed = time.perf_counter() - t0

    ok = (worst < 1e-3 and n_checked >= 10 and high_ok and oracle_failed
          and elapsed < budget)
    _report(num, name, ok,
            f"worst rel {worst:.3g} on {n_checked}/20 oracle-converged points; "
            f"high-k levin converged={high_ok}, oracle failed={oracle_failed}; "
            f"{elapsed:.2f} s")


def test_criterion_2_double_product_vs_quadrature():
    _oracle_crosscheck(2, "double Bessel product", "eq7", budget=10.0)


def test_criterion_3_triple_product_vs_quadrature():
    _oracle_crosscheck(3, "triple Bessel product", "eq8", budget=20.0)


def test_criterion_4_throughput_vs_quadrature():
    """Warm-path batch throughput >= 100x the reference quadrature."""
    problem = PROBLEMS["eq7"]
    session = problem.session()
    k = problem.k_values(1000)
    req = problem.request(k)
    session.integrate_batch(req)                 # cold: build trees
    t0 = time.perf_counter()
    session.integrate_batch(req)                 # warm
    warm_per_point = (time.perf_counter() - t0) / len(k)

    probe = k[np.linspace(100, 700, 5).astype(int)]
    t0 = time.perf_counter()
    for ki in probe:
        oracle_at(problem, session, ki, TIGHT_ORACLE)
    oracle_per_point = (time.perf_counter() - t0) / len(probe)

    ratio = oracle_per_point / warm_per_point
    _report(4, "throughput vs quadrature", ratio >= 100.0,
            f"warm {warm_per_point * 1e3:.3g} ms/point vs oracle "
            f"{oracle_per_point * 1e3:.3g} ms/point, ratio {ratio:.0f}x")


def test_criterion_5_warm_path_reuse():
    """Repeated batches must not factorize a single matrix again."""
    problem = PROBLEMS["eq7"]
    session = problem.session()
    req = problem.request(problem.k_values(200))

    t0 = time.perf_counter()
    cold = session.integrate_batch(req)
    cold_time = time.perf_counter() - t0
    assert session.last_factorization_count > 0

    before = levin.factorizations.value
    t0 = time.perf_counter()
    warm = session.integrate_batch(req)
    warm_time = time.perf_counter() - t0
    warm_facts = levin.factorizations.value - before

    identical = np.array_equal(cold.values, warm.values)
    speedup = cold_time / warm_time
    ok = warm_facts == 0 and identical
    _report(5, "warm-path reuse", ok,
            f"warm factorizations {warm_facts}, bitwise identical {identical}, "
            f"cold/warm speedup {speedup:.1f}x (>=5x expected, not gated)")


def test_criterion_6_internal_consistency():
    """The built-in property checks (derivative identity, Kronecker
    consistency, closed-form anchors, linearity of the frozen tree)."""
    from oscint.selftest import run_selftest

    t0 = time.perf_counter()
    ok = run_selftest(quick=False)
    _report(6, "internal consistency checks", ok,
            f"full selftest in {time.perf_counter() - t0:.2f} s")
