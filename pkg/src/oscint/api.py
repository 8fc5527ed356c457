"""Public batch interface.

A Session binds an integrand table to one of the six integral types and
evaluates batches of (a, b, k, ell) parameter tuples.  Bisection trees are
cached per parameter tuple, so repeated evaluation after an integrand
update skips every matrix assembly and factorization (the warm path).
"""

from __future__ import annotations

import enum
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import levin
from .adaptive import BisectionTree, LevinSettings, integrate_adaptive
from .bessel import BesselFamily, OscillatorKind, OscillatorParams
from .integrand import IntegrandTable, Interpolant


class IntegralType(enum.IntEnum):
    """The six supported integral types, encoded 0-5 on the CLI."""

    SINGLE_SPHERICAL = 0
    DOUBLE_SPHERICAL = 1
    TRIPLE_SPHERICAL = 2
    SINGLE_CYLINDRICAL = 3
    DOUBLE_CYLINDRICAL = 4
    TRIPLE_CYLINDRICAL = 5

    @property
    def family(self) -> BesselFamily:
        return BesselFamily.SPHERICAL if self < 3 else BesselFamily.CYLINDRICAL

    @property
    def count(self) -> int:
        return int(self) % 3 + 1

    @property
    def kind(self) -> OscillatorKind:
        return OscillatorKind(self.family, self.count)


@dataclass(frozen=True)
class BatchRequest:
    """M parameter tuples: limits a < b and one (k, ell) pair per Bessel factor."""

    a: np.ndarray
    b: np.ndarray
    k: tuple[np.ndarray, ...]      # count arrays of positive frequencies
    ell: tuple[np.ndarray, ...]    # count arrays of non-negative integer orders
    diagonal: bool = False

    def __post_init__(self):
        a = np.atleast_1d(np.asarray(self.a, dtype=float))
        b = np.atleast_1d(np.asarray(self.b, dtype=float))
        k = tuple(np.atleast_1d(np.asarray(ki, dtype=float)) for ki in self.k)
        ell = tuple(np.atleast_1d(np.asarray(li)) for li in self.ell)
        m = len(a)
        if m == 0:
            raise ValueError("empty batch")
        for name, arr in [("b", b), *[(f"k[{i}]", x) for i, x in enumerate(k)],
                          *[(f"ell[{i}]", x) for i, x in enumerate(ell)]]:
            if arr.ndim != 1 or len(arr) != m:
                raise ValueError(
                    f"batch arrays must be one-dimensional with equal length; "
                    f"{name} has shape {arr.shape}, expected ({m},)"
                )
        bad = np.argwhere(a <= 0)
        if bad.size:
            raise ValueError(f"a must be positive; entry {bad[0, 0]} is {a[bad[0, 0]]}")
        bad = np.argwhere(a >= b)
        if bad.size:
            i = bad[0, 0]
            raise ValueError(f"a < b required; entry {i} has a={a[i]}, b={b[i]}")
        for j, ki in enumerate(k):
            bad = np.argwhere(ki <= 0)
            if bad.size:
                i = bad[0, 0]
                raise ValueError(f"k[{j}] must be positive; entry {i} is {ki[i]}")
        for j, li in enumerate(ell):
            if np.any(li != np.floor(li)) or np.any(li < 0):
                raise ValueError(f"ell[{j}] must hold non-negative integers")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "ell", tuple(li.astype(int) for li in ell))

    def __len__(self) -> int:
        return len(self.a)


@dataclass(frozen=True)
class BatchResult:
    """Integral values plus a per-entry convergence flag.

    ``values`` has shape (M, n_integrands), or (M,) in diagonal mode.
    """

    values: np.ndarray
    converged: np.ndarray


class Session:
    """Integrator for one integral type over one (updatable) integrand table."""

    def __init__(
        self,
        integral_type: IntegralType,
        table: IntegrandTable,
        settings: LevinSettings | None = None,
        workers: int = 1,
    ):
        self.integral_type = IntegralType(integral_type)
        self.table = table
        self.settings = settings or LevinSettings()
        self.workers = max(1, int(workers))
        self.interp = Interpolant(table)
        self._trees: dict[tuple, BisectionTree] = {}
        #: factorizations performed by the most recent integrate_batch call
        self.last_factorization_count = 0

    def set_levin(self, settings: LevinSettings) -> None:
        """Replace the collocation settings.  Cached trees built with the old
        settings are discarded."""
        self.settings = settings
        self._trees.clear()

    def update_integrand(self, new_values) -> None:
        """Swap in new integrand values over the unchanged grid.

        All cached bisection trees are retained, so subsequent batches take
        the warm path.  On a shape or flag violation the session, including
        its cache, is left untouched.
        """
        new_table = self.table.with_values(new_values)   # validates first
        self.table = new_table
        self.interp = Interpolant(new_table)

    def _entry_key(self, a, b, ks, ells):
        return (float(a), float(b), tuple(float(x) for x in ks),
                tuple(int(x) for x in ells))

    def _compute_key(self, key):
        a, b, ks, ells = key
        params = OscillatorParams(orders=ells, freqs=ks)
        cache = self._trees.get(key)
        values, tree, converged = integrate_adaptive(
            self.integral_type.kind, params, a, b, self.interp,
            self.settings, cache=cache,
        )
        self._trees[key] = tree
        return values, converged

    def integrate_batch(self, req: BatchRequest) -> BatchResult:
        """Evaluate every parameter tuple against every integrand column.

        Diagonal mode requires as many tuples as integrand columns and
        returns only the matching (m, m) pairings.
        """
        m = len(req)
        n_int = self.table.n_integrands
        if req.diagonal and m != n_int:
            raise ValueError(
                f"diagonal mode needs len(batch) == n_integrands "
                f"({m} != {n_int})"
            )
        keys = [
            self._entry_key(req.a[i], req.b[i],
                            [ki[i] for ki in req.k], [li[i] for li in req.ell])
            for i in range(m)
        ]
        unique = list(dict.fromkeys(keys))
        count_before = levin.factorizations.value

        if self.workers > 1 and len(unique) > 1:
            with ThreadPoolExecutor(max_workers=self.workers) as pool:
                computed = dict(zip(unique, pool.map(self._compute_key, unique)))
        else:
            computed = {key: self._compute_key(key) for key in unique}

        self.last_factorization_count = levin.factorizations.value - count_before

        full = np.empty((m, n_int))
        converged = np.empty(m, dtype=bool)
        for i, key in enumerate(keys):
            full[i], converged[i] = computed[key]
        if req.diagonal:
            return BatchResult(np.diagonal(full).copy(), converged)
        return BatchResult(full, converged)


def new_session(
    integral_type: IntegralType,
    table: IntegrandTable,
    settings: LevinSettings | None = None,
    workers: int = 1,
) -> Session:
    return Session(integral_type, table, settings, workers)
