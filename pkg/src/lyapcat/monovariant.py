"""Observables, monovariance, level-set families and attractors.

An observable maps states to extended nonnegative values (``math.inf`` is the
top element). Monovariance is checked in an explicit :class:`Direction`:
``INCREASING`` means ``I(m) <= I(F_t(m))``; ``DECREASING`` means the reverse,
which is the reading used for distances and Lyapunov functions.

On finite systems every check is exact. Because every time point is a
composite of generator steps, an inequality that holds for one step of each
generator holds for all times; the finite checks use that and report
``PROVED``. Euclidean checks run over supplied sample states and all times
up to a horizon and report ``SAMPLED``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional

import numpy as np

from .system import (DynamicalSystem, StateSpace, UnsupportedExactReach, as_vector,
                     is_equilibrium, orbit_points, rational)
from .verdict import Verdict


class Direction(str, enum.Enum):
    INCREASING = "increasing"
    DECREASING = "decreasing"

    def holds(self, before, after, tol=0) -> bool:
        if self is Direction.INCREASING:
            return before <= after + tol
        return after <= before + tol


# -- observables ---------------------------------------------------------------

class Observable:
    name = "observable"

    def __call__(self, x):
        raise NotImplementedError


@dataclass(frozen=True)
class DistanceTo(Observable):
    space: StateSpace
    center: object
    name: str = "distance"

    def __call__(self, x):
        if self.space.is_finite:
            return self.space.distance(self.center, x)
        return self.space.distance(as_vector(self.center), as_vector(x))


@dataclass(frozen=True)
class QuadraticForm(Observable):
    """``x -> x^T P x`` for a positive semidefinite ``P``."""

    P: tuple
    name: str = "quadratic"

    def __post_init__(self):
        P = tuple(tuple(rational(v, allow_float=True) for v in row) for row in self.P)
        object.__setattr__(self, "P", P)
        arr = np.array(P, dtype=float)
        if arr.shape[0] != arr.shape[1]:
            raise ValueError("quadratic form needs a square matrix")
        if not np.allclose(arr, arr.T, atol=1e-12):
            raise ValueError("quadratic form needs a symmetric matrix")
        if np.linalg.eigvalsh(arr).min() < -1e-12:
            raise ValueError("quadratic form must be positive semidefinite")

    def __call__(self, x):
        x = as_vector(x)
        return sum(x[i] * self.P[i][j] * x[j]
                   for i in range(len(x)) for j in range(len(x)))


@dataclass(frozen=True)
class Coordinate(Observable):
    index: int
    name: str = "coordinate"

    def __call__(self, x):
        return as_vector(x)[self.index]


@dataclass(frozen=True)
class TableLookup(Observable):
    """Finite observable given by one value per state (``inf`` allowed)."""

    values: tuple
    name: str = "table"

    def __post_init__(self):
        vals = tuple(v if v == math.inf else rational(v) for v in self.values)
        if any(v < 0 for v in vals):
            raise ValueError("observable values must be nonnegative")
        object.__setattr__(self, "values", vals)

    def __call__(self, x):
        return self.values[x]


@dataclass(frozen=True)
class FunctionObservable(Observable):
    function: Callable
    name: str = "function"

    def __call__(self, x):
        return self.function(x)


# -- level-set families ----------------------------------------------------------

def _check_grid(grid) -> tuple:
    grid = tuple(rational(r, allow_float=True) for r in grid)
    if not grid:
        raise ValueError("empty radius grid")
    if grid[0] <= 0 or any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("radius grid must be positive and strictly increasing")
    return grid


@dataclass(frozen=True)
class LevelSetFamily:
    """A monotone map from radii to state sets.

    ``sets`` holds the extensional family on grid radii (finite spaces, or
    point clouds on Euclidean ones). ``predicate(r, x, tol)`` answers
    membership for any radius; families without a predicate only know their
    grid sets.
    """

    space: StateSpace
    grid: tuple
    sets: Optional[dict] = None
    predicate: Optional[Callable] = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "grid", _check_grid(self.grid))
        if self.sets is None and self.predicate is None:
            raise ValueError("a family needs grid sets or a membership predicate")
        if self.sets is not None:
            sets = {rational(r, allow_float=True): frozenset(s) for r, s in self.sets.items()}
            missing = [r for r in self.grid if r not in sets]
            if missing:
                raise ValueError(f"no set given for radii {missing}")
            object.__setattr__(self, "sets", sets)

    def at(self, r) -> frozenset:
        if self.sets is not None and r in self.sets:
            return self.sets[r]
        if self.predicate is not None and self.space.is_finite:
            return frozenset(x for x in self.space.states() if self.predicate(r, x, 0))
        raise KeyError(f"radius {r} is not on the grid of an extensional family")

    def contains(self, r, x, tol=0) -> bool:
        if self.predicate is not None:
            return self.predicate(r, x, tol)
        if not self.space.is_finite:
            x = as_vector(x)
        return x in self.at(r)

    def restrict(self, grid) -> "LevelSetFamily":
        grid = _check_grid(grid)
        sets = {r: self.at(r) for r in grid} if self.space.is_finite else None
        if sets is None and self.predicate is None:
            sets = {r: self.sets[r] for r in grid}
        return LevelSetFamily(self.space, grid, sets, self.predicate)

    def is_monotone(self) -> bool:
        if self.space.is_finite or self.sets is not None:
            return all(self.at(a) <= self.at(b) for a, b in zip(self.grid, self.grid[1:]))
        return True


@dataclass(frozen=True)
class BallFamily:
    """Closed balls ``{x | d(center, x) <= r}`` for every positive radius."""

    space: StateSpace
    center: object

    def contains(self, r, x, tol=0) -> bool:
        if r == math.inf:
            return True
        if self.space.is_finite:
            return self.space.distance(self.center, x) <= r + tol
        d2 = self.space.distance_squared(as_vector(self.center), as_vector(x))
        if tol == 0:
            return d2 <= r * r
        return math.sqrt(float(d2)) <= float(r) + tol

    def at(self, r) -> frozenset:
        if not self.space.is_finite:
            raise UnsupportedExactReach("Euclidean balls are not enumerable")
        return frozenset(x for x in self.space.states() if self.contains(r, x))


def ball(space: StateSpace, center, r) -> frozenset:
    return BallFamily(space, center).at(r)


def sublevel(obs: Observable, space: StateSpace, grid) -> LevelSetFamily:
    """The closed sublevel family ``r -> {x | obs(x) <= r}`` on ``grid``."""
    grid = _check_grid(grid)

    def member(r, x, tol=0):
        return obs(x) <= r + tol

    if space.is_finite:
        sets = {r: frozenset(x for x in space.states() if obs(x) <= r) for r in grid}
        return LevelSetFamily(space, grid, sets, member)
    return LevelSetFamily(space, grid, None, member)


def v_max(obs: Observable, s: Iterable):
    """Supremum of ``obs`` over a nonempty set."""
    values = [obs(x) for x in s]
    if not values:
        raise ValueError("v_max of the empty set is undefined")
    return max(values)


# -- sampling helpers --------------------------------------------------------------

def _sample_states(sys: DynamicalSystem, samples) -> list:
    if sys.is_finite:
        return list(sys.space.states())
    if samples is None:
        raise ValueError("Euclidean checks need sample states")
    return [as_vector(x) for x in samples]


def _need_horizon(sys: DynamicalSystem, horizon):
    if not sys.is_finite and horizon is None:
        raise UnsupportedExactReach("Euclidean checks need a horizon")


def _one_step(sys: DynamicalSystem):
    """``(letter, time)`` for every generator step."""
    tl = sys.timeline
    if tl.is_word:
        return [(a, (a,)) for a in sys.letters]
    return [(0, 1)]


# -- checks ----------------------------------------------------------------------

def check_monovariant(sys: DynamicalSystem, obs: Observable,
                      direction: Direction = Direction.INCREASING, *,
                      horizon=None, samples=None, tol=0) -> Verdict:
    """Check ``obs`` moves monotonically in ``direction`` along every trajectory.

    A failure carries the start state ``m`` and the time ``t`` at which the
    inequality breaks.
    """
    direction = Direction(direction)
    if sys.is_finite and horizon is None:
        for m in sys.space.states():
            before = obs(m)
            for letter, t in _one_step(sys):
                after = obs(sys.step(m, letter))
                if not direction.holds(before, after):
                    return Verdict.fail({"state": m, "time": t, "before": before, "after": after},
                                        f"not {direction.value} along {t}",
                                        direction=direction.value)
        return Verdict.ok(True, f"{obs.name} is {direction.value}", direction=direction.value)
    _need_horizon(sys, horizon)
    for m in _sample_states(sys, samples):
        before = obs(m)
        for t, y in orbit_points(sys, m, horizon):
            after = obs(y)
            if not direction.holds(before, after, tol):
                return Verdict.fail({"state": m, "time": t, "before": before, "after": after},
                                    f"not {direction.value} at time {t}",
                                    direction=direction.value)
    return Verdict.ok(False, f"{obs.name} is {direction.value} on samples",
                      direction=direction.value)


def check_levelset_laxcone(sys: DynamicalSystem, fam, *, horizon=None,
                           samples=None, tol=0) -> Verdict:
    """Check every grid sublevel set is forward invariant."""
    if sys.is_finite and horizon is None:
        for r in fam.grid:
            members = fam.at(r)
            for x in sorted(members):
                for letter, t in _one_step(sys):
                    y = sys.step(x, letter)
                    if y not in members:
                        return Verdict.fail({"radius": r, "state": x, "time": t, "reached": y},
                                            "a level set is not forward invariant")
        return Verdict.ok(True, "every level set is forward invariant")
    _need_horizon(sys, horizon)
    states = _sample_states(sys, samples)
    for r in fam.grid:
        for x in states:
            if not fam.contains(r, x):
                continue
            for t, y in orbit_points(sys, x, horizon):
                if not fam.contains(r, y, tol):
                    return Verdict.fail({"radius": r, "state": x, "time": t, "reached": y},
                                        "a sampled level set is not forward invariant")
    return Verdict.ok(False, "sampled level sets are forward invariant")


def check_vmax_monovariant(sys: DynamicalSystem, obs: Observable,
                           direction: Direction = Direction.DECREASING) -> Verdict:
    """Monovariance of ``S -> max obs(S)`` under the image action on all nonempty subsets.

    Enumerates the whole powerset (finite systems of at most 20 states).
    Observable values are replaced by their ranks, which preserves the order
    exactly and lets the enumeration run on integer arrays.
    """
    direction = Direction(direction)
    if not sys.is_finite:
        raise UnsupportedExactReach("powerset enumeration needs a finite space")
    n = sys.space.n
    if n > 20:
        raise ValueError("powerset enumeration is limited to 20 states")
    values = [obs(x) for x in range(n)]
    ranks = {v: i for i, v in enumerate(sorted(set(values)))}
    rank = np.array([ranks[v] for v in values], dtype=np.int64)
    size = 1 << n
    vmax = np.full(size, -1, dtype=np.int64)
    for i in range(n):
        lo, hi = 1 << i, 1 << (i + 1)
        vmax[lo:hi] = np.maximum(vmax[0:lo], rank[i])
    for letter, t in _one_step(sys):
        img_bit = np.array([1 << sys.step(x, letter) for x in range(n)], dtype=np.int64)
        image = np.zeros(size, dtype=np.int64)
        for i in range(n):
            lo, hi = 1 << i, 1 << (i + 1)
            image[lo:hi] = image[0:lo] | img_bit[i]
        before, after = vmax[1:], vmax[image[1:]]
        bad = after < before if direction is Direction.INCREASING else after > before
        if bad.any():
            mask = int(np.flatnonzero(bad)[0]) + 1
            subset = frozenset(x for x in range(n) if mask >> x & 1)
            return Verdict.fail({"set": subset, "time": t,
                                 "before": v_max(obs, subset),
                                 "after": v_max(obs, {sys.step(x, letter) for x in subset})},
                                f"v_max not {direction.value}")
    return Verdict.ok(True, f"v_max is {direction.value} on every subset")


def check_attractor(sys: DynamicalSystem, x_star, *, horizon=None, samples=None,
                    tol=0) -> Verdict:
    """Distance to ``x_star`` must never increase; on success the point is also
    checked to be an equilibrium and both verdicts are reported."""
    dist = DistanceTo(sys.space, x_star)
    mono = check_monovariant(sys, dist, Direction.DECREASING, horizon=horizon,
                             samples=samples, tol=tol)
    if not mono:
        return mono
    eq = is_equilibrium(sys, [x_star])
    if not eq:
        return Verdict.fail(eq.witness, "attractor that is not an equilibrium",
                            monovariant=mono, equilibrium=eq)
    return Verdict(mono.status, None, "attractor and equilibrium",
                   {"monovariant": mono, "equilibrium": eq})


def check_rough_approx(I: Observable, J: Observable, lower, upper, space: StateSpace, *,
                       samples=None, tol=0) -> Verdict:
    """Check ``lower(I(m)) <= J(m) <= upper(I(m))`` for every state in scope."""
    states = list(space.states()) if space.is_finite else [as_vector(x) for x in samples]
    for m in states:
        i, j = I(m), J(m)
        lo = lower(i) if i != 0 else lower.at_zero()
        hi = upper(i) if i != 0 else upper.at_zero()
        if not lo <= j + tol:
            return Verdict.fail({"state": m, "I": i, "J": j, "bound": lo}, "below the lower bound")
        if not j <= hi + tol:
            return Verdict.fail({"state": m, "I": i, "J": j, "bound": hi}, "above the upper bound")
    return Verdict.ok(space.is_finite and getattr(lower, "exact", False)
                      and getattr(upper, "exact", False), "rough approximation holds")
