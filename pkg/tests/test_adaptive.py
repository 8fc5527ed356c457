import numpy as np
import pytest

from oscint.adaptive import (
    BisectionTree,
    Leaf,
    LevinSettings,
    integrate_adaptive,
    low_freq_fallback,
    pick_worst_leaf,
)
from oscint.bessel import BesselFamily, OscillatorKind, OscillatorParams
from oscint.integrand import IntegrandTable, build
from oscint.levin import factorizations
from oscint.oracle import OracleSettings, quad_reference

SPH1 = OscillatorKind(BesselFamily.SPHERICAL, 1)
SPH2 = OscillatorKind(BesselFamily.SPHERICAL, 2)
SPH3 = OscillatorKind(BesselFamily.SPHERICAL, 3)


def poly_interp(a=1e-5, b=100.0, n=500):
    x = np.geomspace(a, b, n)
    f = x**3 + x**2 + x
    return build(IntegrandTable(x, f[:, None], log_x=True, log_y=True))


def const_interp(value, a=0.5, b=10.0):
    x = np.geomspace(a, b, 50)
    return build(
        IntegrandTable(x, np.full((50, 1), float(value)), log_x=False, log_y=False)
    )


class TestSettings:
    def test_defaults(self):
        s = LevinSettings()
        assert s.n_sub == 10 and s.max_bisections == 32 and s.rel_acc == 1e-4

    def test_validation(self):
        with pytest.raises(ValueError):
            LevinSettings(n_sub=7)
        with pytest.raises(ValueError):
            LevinSettings(n_sub=2)
        with pytest.raises(ValueError):
            LevinSettings(rel_acc=0.0)
        with pytest.raises(ValueError):
            LevinSettings(max_bisections=-1)


class TestPickWorstLeaf:
    def test_argmax(self):
        tree = BisectionTree(SPH1, OscillatorParams((0,), (1.0,)), 1, 2, LevinSettings())
        tree.leaves = [object(), object(), object()]
        assert pick_worst_leaf(tree, np.array([0.1, 0.9, 0.5])) == 1

    def test_leftmost_tie(self):
        tree = BisectionTree(SPH1, OscillatorParams((0,), (1.0,)), 1, 2, LevinSettings())
        tree.leaves = [object(), object()]
        assert pick_worst_leaf(tree, np.array([0.7, 0.7])) == 0

    def test_empty(self):
        tree = BisectionTree(SPH1, OscillatorParams((0,), (1.0,)), 1, 2, LevinSettings())
        with pytest.raises(ValueError):
            pick_worst_leaf(tree, np.array([]))


class TestLowFreqFallback:
    def test_near_unit_weight(self):
        # k(b - a) = 1e-6: j_0(kx) == 1 to ~1e-13, so the integral is b - a
        params = OscillatorParams((0,), (1e-7,))
        interp = const_interp(1.0, 1.0, 3.0)
        got = low_freq_fallback(SPH1, params, interp, (1.0, 3.0), 10)
        assert got[0] == pytest.approx(2.0, rel=1e-10)

    def test_closed_form_moderate_phase(self):
        # integral of x j_0(kx) = (cos(k a) - cos(k b)) / k^2
        k = 0.25
        x = np.linspace(1.0, 3.0, 50)
        interp = build(IntegrandTable(x, x[:, None]))
        got = low_freq_fallback(SPH1, OscillatorParams((0,), (k,)), interp, (1.0, 3.0), 10)
        exact = (np.cos(k * 1.0) - np.cos(k * 3.0)) / k**2
        assert got[0] == pytest.approx(exact, rel=1e-12)

    def test_threshold_continuity(self):
        # the same low-phase integral through the Levin branch and through
        # the quadrature branch must agree far better than rel_acc
        k = 0.6
        x = np.linspace(1.0, 3.0, 50)
        interp = build(IntegrandTable(x, x[:, None]))
        params = OscillatorParams((0,), (k,))
        lo_thresh = LevinSettings(low_freq_threshold=0.1)   # forces Levin
        hi_thresh = LevinSettings(low_freq_threshold=5.0)   # forces fallback
        levin, _, ok1 = integrate_adaptive(SPH1, params, 1.0, 3.0, interp, lo_thresh)
        fallback, _, ok2 = integrate_adaptive(SPH1, params, 1.0, 3.0, interp, hi_thresh)
        assert ok1 and ok2
        assert levin[0] == pytest.approx(fallback[0], rel=1e-9)


class TestIntegrateAdaptive:
    def test_zero_integrand(self):
        interp = const_interp(0.0)
        params = OscillatorParams((2,), (50.0,))
        values, tree, converged = integrate_adaptive(
            SPH1, params, 0.5, 10.0, interp, LevinSettings()
        )
        assert values[0] == 0.0
        assert converged
        assert len(tree.leaves) == 1

    def test_validation(self):
        interp = const_interp(1.0)
        params = OscillatorParams((0,), (1.0,))
        s = LevinSettings()
        with pytest.raises(ValueError):
            integrate_adaptive(SPH1, params, -1.0, 2.0, interp, s)
        with pytest.raises(ValueError):
            integrate_adaptive(SPH1, params, 2.0, 1.0, interp, s)
        with pytest.raises(ValueError):
            integrate_adaptive(SPH1, params, 0.5, 99.0, interp, s)

    @pytest.mark.parametrize(
        "kind,orders",
        [(SPH2, (10, 5)), (SPH3, (10, 5, 15))],
    )
    def test_vs_quadrature_oracle(self, kind, orders):
        interp = poly_interp()
        k = 1.0
        params = OscillatorParams(orders, tuple(k for _ in orders))
        values, tree, converged = integrate_adaptive(
            SPH1 if kind.count == 1 else kind, params, 1e-5, 100.0, interp,
            LevinSettings(rel_acc=1e-6),
        )
        assert converged
        ref, ref_ok = quad_reference(
            kind, params, 1e-5, 100.0, lambda x: interp(x)[:, 0],
            OracleSettings(abs_tol=1e-280, rel_tol=1e-10),
        )
        assert ref_ok
        assert values[0] == pytest.approx(ref, rel=1e-3)

    def test_partition_invariant(self):
        interp = poly_interp()
        params = OscillatorParams((10, 5), (20.0, 20.0))
        _, tree, _ = integrate_adaptive(
            SPH2, params, 1e-5, 100.0, interp, LevinSettings()
        )
        tree.check_partition()     # raises on violation
        assert len(tree.leaves) > 1

    @pytest.mark.parametrize("k", [0.1, 1.0, 10.0])
    def test_error_history_decreases(self, k):
        interp = poly_interp()
        params = OscillatorParams((10, 5), (k, k))
        _, tree, converged = integrate_adaptive(
            SPH2, params, 1e-5, 100.0, interp, LevinSettings(rel_acc=1e-6)
        )
        assert converged
        hist = tree.error_history
        assert hist[-1] <= 1e-6
        assert hist[-1] <= hist[0]

    def test_soft_failure_on_budget(self):
        interp = poly_interp()
        params = OscillatorParams((10, 5), (300.0, 300.0))
        values, tree, converged = integrate_adaptive(
            SPH2, params, 1e-5, 100.0, interp,
            LevinSettings(max_bisections=0, rel_acc=1e-10),
        )
        assert not converged
        assert np.all(np.isfinite(values))
        assert len(tree.leaves) == 1


class TestWarmPath:
    def test_bitwise_reuse(self):
        interp = poly_interp()
        params = OscillatorParams((10, 5), (5.0, 5.0))
        settings = LevinSettings()
        cold, tree, ok_cold = integrate_adaptive(
            SPH2, params, 1e-5, 100.0, interp, settings
        )
        before = factorizations.value
        warm, tree2, ok_warm = integrate_adaptive(
            SPH2, params, 1e-5, 100.0, interp, settings, cache=tree
        )
        assert factorizations.value == before
        assert tree2 is tree
        assert ok_cold and ok_warm
        assert np.array_equal(cold, warm)

    def test_warm_with_new_integrand(self):
        x = np.geomspace(1e-5, 100.0, 500)
        table = IntegrandTable(x, (x**3 + x**2 + x)[:, None], log_x=True, log_y=True)
        params = OscillatorParams((10, 5), (5.0, 5.0))
        settings = LevinSettings()
        _, tree, _ = integrate_adaptive(
            SPH2, params, 1e-5, 100.0, build(table), settings
        )
        scaled = build(table.with_values(2.0 * table.values))
        warm, _, ok = integrate_adaptive(
            SPH2, params, 1e-5, 100.0, scaled, settings, cache=tree
        )
        cold, _, _ = integrate_adaptive(
            SPH2, params, 1e-5, 100.0, scaled, settings
        )
        assert ok
        assert warm[0] == pytest.approx(cold[0], rel=1e-12)
