"""Adaptive bisection driver for the Levin subinterval solver.

The integration range is recursively bisected in the subinterval where the
relative difference between the n-point and n/2-point collocation results
is largest, until the aggregate estimate meets the requested accuracy or
the bisection budget is exhausted.  The resulting tree of factorized
subinterval systems is reusable: a later pass with a new integrand only
re-solves right-hand sides.

Subintervals carrying less than ``low_freq_threshold`` total oscillator
phase are handled by plain Gauss-Legendre quadrature of f(x) w_1(x); the
collocation system degenerates as the frequency goes to zero.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field

import numpy as np

from .bessel import OscillatorKind, OscillatorParams, w_vector
from .integrand import Interpolant
from .levin import DegenerateSystemError, SubintervalSystem, assemble

#: Absolute floor added to relative-error denominators so that integrals
#: crossing zero still terminate.
ERROR_FLOOR = 1e-30

#: Bisections without a new minimum of the aggregate error estimate before
#: refinement is cut off as cancellation-limited.  Slowly converging cases
#: can stall for a few hundred bisections before improving again, so the
#: window is deliberately generous.
_STALL_LIMIT = 600

#: Maximum hi/lo span of a collocation leaf.  On wider intervals the n and
#: n/2 solves agree without being converged, so their difference cannot
#: serve as an error estimate and the leaf is bisected unconditionally.
_RATIO_LIMIT = 100.0


@dataclass(frozen=True)
class LevinSettings:
    """Knobs of the adaptive collocation scheme."""

    n_sub: int = 10                 # collocation points per subinterval, even
    max_bisections: int = 32        # maximum bisection depth
    rel_acc: float = 1e-4           # target aggregate relative accuracy
    low_freq_threshold: float = 1.0  # phase below which GL quadrature is used
    boost_bessel: bool = False      # accepted for interface parity; ignored
    verbose: bool = False

    def __post_init__(self):
        if self.n_sub < 4 or self.n_sub % 2:
            raise ValueError(f"n_sub must be even and >= 4, got {self.n_sub}")
        if self.max_bisections < 0:
            raise ValueError("max_bisections must be >= 0")
        if self.rel_acc <= 0:
            raise ValueError("rel_acc must be positive")
        if self.low_freq_threshold <= 0:
            raise ValueError("low_freq_threshold must be positive")


@dataclass
class Leaf:
    lo: float
    hi: float
    depth: int
    fallback: bool
    sys_n: SubintervalSystem | None
    sys_half: SubintervalSystem | None
    #: the leaf carries no trusted value yet and must be bisected further:
    #: either the collocation matrix was singular despite a high-phase
    #: interval, or the interval spans so many decades that the n vs n/2
    #: comparison cannot be trusted (both solves collapse onto the same
    #: under-resolved solution)
    unresolved: bool = False
    #: evaluation reduces to dot products with the integrand at fixed nodes:
    #: I_n = wq_n . f(nodes_n), likewise for the n/2 comparison value
    nodes_n: np.ndarray = field(default=None)
    nodes_half: np.ndarray = field(default=None)
    wq_n: np.ndarray = field(default=None)
    wq_half: np.ndarray = field(default=None)
    value_n: np.ndarray = field(default=None)
    value_half: np.ndarray = field(default=None)
    abs_diff: np.ndarray = field(default=None)   # |I_n - I_{n/2}| per integrand
    rel_error: float = field(default=None)       # worst over integrands


@dataclass
class BisectionTree:
    """Ordered disjoint leaves covering [a, b] with cached factorizations."""

    kind: OscillatorKind
    params: OscillatorParams
    a: float
    b: float
    settings: LevinSettings
    leaves: list[Leaf] = field(default_factory=list)
    #: aggregate error estimate after each refinement step of the cold build
    error_history: list[float] = field(default_factory=list)
    #: concatenated leaf nodes and per-leaf slices, built lazily so a warm
    #: pass interpolates the integrand in a single call
    _plan: tuple | None = field(default=None, repr=False)

    def check_partition(self):
        lo = self.a
        for leaf in self.leaves:
            if leaf.lo != lo:
                raise AssertionError("bisection leaves do not tile [a, b]")
            lo = leaf.hi
        if lo != self.b:
            raise AssertionError("bisection leaves do not tile [a, b]")


@functools.lru_cache(maxsize=None)
def _gauss_legendre(n: int):
    return np.polynomial.legendre.leggauss(n)


def low_freq_fallback(
    kind: OscillatorKind,
    params: OscillatorParams,
    interp: Interpolant,
    interval: tuple[float, float],
    n: int,
) -> np.ndarray:
    """Direct n-node Gauss-Legendre quadrature of f(x) w_1(x).

    Valid when the total oscillator phase across the subinterval is small,
    so the full integrand is non-oscillatory.
    """
    lo, hi = interval
    nodes, weights = _gauss_legendre(n)
    x = 0.5 * (lo + hi) + 0.5 * (hi - lo) * nodes
    w1 = w_vector(kind, params, x)[0]
    f = interp(x)                      # (n, n_integrands)
    return 0.5 * (hi - lo) * ((weights * w1) @ f)


def _leaf_phase(params: OscillatorParams, lo: float, hi: float) -> float:
    return max(params.freqs) * (hi - lo)


def _gl_nodes_weights(tree: BisectionTree, lo, hi, n):
    nodes, weights = _gauss_legendre(n)
    x = 0.5 * (lo + hi) + 0.5 * (hi - lo) * nodes
    w1 = w_vector(tree.kind, tree.params, x)[0]
    return x, 0.5 * (hi - lo) * weights * w1


def _make_leaf(tree: BisectionTree, lo, hi, depth) -> Leaf:
    s = tree.settings
    if _leaf_phase(tree.params, lo, hi) <= s.low_freq_threshold:
        leaf = Leaf(lo, hi, depth, fallback=True, sys_n=None, sys_half=None)
        leaf.nodes_n, leaf.wq_n = _gl_nodes_weights(tree, lo, hi, s.n_sub)
        leaf.nodes_half, leaf.wq_half = _gl_nodes_weights(tree, lo, hi, s.n_sub // 2)
        return leaf
    if hi > lo * _RATIO_LIMIT:
        # on an interval spanning this many decades the n and n/2 solves
        # both collapse onto the same under-resolved solution, so their
        # difference is useless as an error estimate; split unconditionally
        return Leaf(lo, hi, depth, fallback=False, sys_n=None, sys_half=None,
                    unresolved=True)
    try:
        sys_n = assemble(tree.kind, tree.params, (lo, hi), s.n_sub)
        sys_half = assemble(tree.kind, tree.params, (lo, hi), s.n_sub // 2)
    except DegenerateSystemError:
        # too oscillatory for plain quadrature, yet singular to working
        # precision: no usable value, bisect unconditionally
        return Leaf(lo, hi, depth, fallback=False, sys_n=None, sys_half=None,
                    unresolved=True)
    leaf = Leaf(lo, hi, depth, fallback=False, sys_n=sys_n, sys_half=sys_half)
    leaf.nodes_n, leaf.wq_n = sys_n.nodes, sys_n.quad_weights
    leaf.nodes_half, leaf.wq_half = sys_half.nodes, sys_half.quad_weights
    return leaf


def _finish_leaf(leaf: Leaf):
    leaf.abs_diff = np.abs(leaf.value_n - leaf.value_half)
    leaf.rel_error = float(np.max(leaf.abs_diff / (np.abs(leaf.value_n) + ERROR_FLOOR)))


def _evaluate_leaf(tree: BisectionTree, leaf: Leaf, interp: Interpolant):
    if leaf.unresolved:
        zero = np.zeros(interp.n_integrands)
        leaf.value_n = zero
        leaf.value_half = zero
        leaf.abs_diff = zero
        leaf.rel_error = np.inf
        return
    leaf.value_n = leaf.wq_n @ interp(leaf.nodes_n)
    leaf.value_half = leaf.wq_half @ interp(leaf.nodes_half)
    _finish_leaf(leaf)


def pick_worst_leaf(tree: BisectionTree, estimates: np.ndarray) -> int:
    """Index of the leaf with the largest relative difference; leftmost wins ties."""
    if not tree.leaves:
        raise ValueError("tree has no leaves")
    return int(np.argmax(estimates))


def _aggregate_error(tree: BisectionTree) -> float:
    total = sum(leaf.value_n for leaf in tree.leaves)
    diff_sum = sum(leaf.abs_diff for leaf in tree.leaves)
    return float(np.max(diff_sum / (np.abs(total) + ERROR_FLOOR)))


def integrate_adaptive(
    kind: OscillatorKind,
    params: OscillatorParams,
    a: float,
    b: float,
    interp: Interpolant,
    settings: LevinSettings,
    cache: BisectionTree | None = None,
):
    """Integrate f(x) times the oscillator product over [a, b].

    Returns (values, tree, converged) with one value per integrand column.
    With ``cache`` given (warm path) no systems are assembled or bisected:
    only right-hand sides are re-solved, and the convergence estimate is
    recomputed against the new integrand.
    """
    if a <= 0:
        raise ValueError("lower limit must be positive")
    if a >= b:
        raise ValueError("lower limit must be below upper limit")
    if a < interp.x_min or b > interp.x_max:
        raise ValueError(
            f"[{a}, {b}] outside tabulated range [{interp.x_min}, {interp.x_max}]"
        )

    if cache is not None:
        tree = cache
        if tree._plan is None:
            offsets = [0]
            chunks = []
            for leaf in tree.leaves:
                if not leaf.unresolved:
                    chunks.append(leaf.nodes_n)
                    chunks.append(leaf.nodes_half)
                    offsets.append(offsets[-1] + len(leaf.nodes_n))
                    offsets.append(offsets[-1] + len(leaf.nodes_half))
            tree._plan = (np.concatenate(chunks) if chunks else np.empty(0),
                          offsets)
        x_all, offsets = tree._plan
        f_all = interp(x_all)
        pos = 0
        for leaf in tree.leaves:
            if leaf.unresolved:
                _evaluate_leaf(tree, leaf, interp)
                continue
            leaf.value_n = leaf.wq_n @ f_all[offsets[pos]:offsets[pos + 1]]
            leaf.value_half = leaf.wq_half @ f_all[offsets[pos + 1]:offsets[pos + 2]]
            _finish_leaf(leaf)
            pos += 2
        values = sum(leaf.value_n for leaf in tree.leaves)
        ok = (_aggregate_error(tree) <= settings.rel_acc
              and not any(leaf.unresolved for leaf in tree.leaves))
        return values, tree, ok

    tree = BisectionTree(kind=kind, params=params, a=a, b=b, settings=settings)
    root = _make_leaf(tree, a, b, depth=0)
    _evaluate_leaf(tree, root, interp)
    tree.leaves.append(root)

    # running aggregates, updated incrementally as leaves are replaced
    total = root.value_n.copy()
    diff_sum = root.abs_diff.copy()
    errors = [root.rel_error]

    converged = True
    best_agg = np.inf
    stalled = 0
    n_unresolved = int(root.unresolved)
    while True:
        agg = float(np.max(diff_sum / (np.abs(total) + ERROR_FLOOR)))
        if n_unresolved == 0:
            # the aggregate is meaningless while value-less leaves remain
            tree.error_history.append(agg)
        if agg <= settings.rel_acc and n_unresolved == 0:
            break
        if n_unresolved == 0:
            if agg < 0.999 * best_agg:
                best_agg = agg
                stalled = 0
            else:
                stalled += 1
                if stalled >= _STALL_LIMIT:
                    # no new minimum of the aggregate estimate for many
                    # steps: the integral is cancellation-limited and more
                    # bisection cannot help
                    converged = False
                    break
            if max(errors) <= 1e-14:
                # every leaf sits at the round-off plateau
                converged = False
                break
        worst_err = max(errors)           # inf for unresolved leaves
        idx = errors.index(worst_err)     # leftmost on ties
        worst = tree.leaves[idx]
        if worst.depth >= settings.max_bisections:
            converged = False
            break
        mid = 0.5 * (worst.lo + worst.hi)
        left = _make_leaf(tree, worst.lo, mid, worst.depth + 1)
        right = _make_leaf(tree, mid, worst.hi, worst.depth + 1)
        _evaluate_leaf(tree, left, interp)
        _evaluate_leaf(tree, right, interp)
        tree.leaves[idx:idx + 1] = [left, right]
        errors[idx:idx + 1] = [left.rel_error, right.rel_error]
        n_unresolved += left.unresolved + right.unresolved - worst.unresolved
        total += left.value_n + right.value_n - worst.value_n
        diff_sum += left.abs_diff + right.abs_diff - worst.abs_diff
        tree.check_partition()
        if settings.verbose:
            print(
                f"bisect [{worst.lo:g}, {worst.hi:g}] -> "
                f"{len(tree.leaves)} leaves, err {agg:.3e}"
            )

    values = sum(leaf.value_n for leaf in tree.leaves)
    return values, tree, converged
