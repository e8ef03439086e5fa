"""Forward dynamical systems: monoid actions of a timeline on a metric space.

A system pairs a :class:`StateSpace` with a :class:`TimelineKind` and a set of
generator maps. Words act letter by letter, first letter first, so that
``evolve(evolve(x, s), t) == evolve(x, s + t)``.

States of a finite space are integer indices; Euclidean states are tuples of
numbers (``Fraction`` for exact work, ``float`` in the quadratic module).
State sets are ``frozenset`` values.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Iterable, Iterator, Optional, Sequence, Union

import numpy as np

from .timeline import CONTINUOUS, DISCRETE, TimelineKind
from .verdict import Verdict

Number = Union[int, Fraction, float]
StateSet = frozenset


class UnsupportedExactReach(ValueError):
    """Exact reachability (infinite horizon) requested on a non-finite space."""


class MetricError(ValueError):
    pass


def rational(value, *, allow_float: bool = False) -> Number:
    """Coerce ``value`` to a Fraction; accepts ints, Fractions and "p/q" strings."""
    if isinstance(value, bool):
        raise TypeError(f"boolean {value!r} is not a number")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value.strip())
    if isinstance(value, float):
        if allow_float:
            return value
        raise TypeError(f"float {value!r} where an exact rational is required")
    if allow_float:
        return float(value)
    raise TypeError(f"cannot read {value!r} as a rational")


def _sqrt(value):
    """Exact square root of a nonnegative rational when it is a perfect square."""
    if isinstance(value, Fraction):
        n, d = value.numerator, value.denominator
        rn, rd = math.isqrt(n), math.isqrt(d)
        if rn * rn == n and rd * rd == d:
            return Fraction(rn, rd)
    return math.sqrt(value)


# -- state spaces -------------------------------------------------------------

def _triangle_violation(rows):
    """First ``(i, j, k)`` with ``d(i,k) > d(i,j) + d(j,k)``, or None.

    Distances are scaled to integers by their common denominator so the
    O(n^3) check runs vectorised without losing exactness.
    """
    scale = math.lcm(*(v.denominator for row in rows for v in row))
    ints = [[int(v * scale) for v in row] for row in rows]
    fits = max(max(row) for row in ints) < 2 ** 61
    D = np.array(ints, dtype=np.int64 if fits else object)
    for j in range(len(rows)):
        viol = D > D[:, j:j + 1] + D[j:j + 1, :]
        if viol.any():
            i, k = (int(v) for v in np.argwhere(viol)[0])
            return (i, j, k)
    return None


@dataclass(frozen=True)
class FiniteMetric:
    """``n`` states with a symmetric distance table of nonnegative rationals."""

    table: tuple

    def __post_init__(self):
        rows = tuple(tuple(rational(v) for v in row) for row in self.table)
        object.__setattr__(self, "table", rows)
        n = len(rows)
        if n == 0:
            raise MetricError("a finite space needs at least one state")
        for i, row in enumerate(rows):
            if len(row) != n:
                raise MetricError(f"row {i} has {len(row)} entries, expected {n}")
        for i in range(n):
            for j in range(n):
                d = rows[i][j]
                if d < 0:
                    raise MetricError(f"negative distance d({i},{j})")
                if (d == 0) != (i == j):
                    raise MetricError(f"d({i},{j}) = {d} violates identity of indiscernibles")
                if d != rows[j][i]:
                    raise MetricError(f"d({i},{j}) != d({j},{i})")
        bad = _triangle_violation(rows)
        if bad is not None:
            raise MetricError(f"triangle inequality fails for {bad}")

    @property
    def n(self) -> int:
        return len(self.table)

    @property
    def is_finite(self) -> bool:
        return True

    def states(self) -> range:
        return range(self.n)

    def contains(self, x) -> bool:
        return isinstance(x, int) and not isinstance(x, bool) and 0 <= x < self.n

    def distance(self, x, y) -> Fraction:
        return self.table[x][y]

    def distances_from(self, x) -> list:
        """Sorted distinct distances from ``x``, zero included."""
        return sorted(set(self.table[x]))

    @classmethod
    def uniform(cls, n: int) -> "FiniteMetric":
        return cls(tuple(tuple(0 if i == j else 1 for j in range(n)) for i in range(n)))

    @classmethod
    def on_line(cls, points: Sequence) -> "FiniteMetric":
        """Metric induced by distinct rational positions on the real line."""
        pts = [rational(p) for p in points]
        return cls(tuple(tuple(abs(a - b) for b in pts) for a in pts))


@dataclass(frozen=True)
class EuclideanSpace:
    dim: int

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dimension must be >= 1")

    @property
    def is_finite(self) -> bool:
        return False

    def contains(self, x) -> bool:
        return isinstance(x, tuple) and len(x) == self.dim

    def distance_squared(self, x, y):
        return sum((a - b) * (a - b) for a, b in zip(x, y))

    def distance(self, x, y):
        return _sqrt(self.distance_squared(x, y))


StateSpace = Union[FiniteMetric, EuclideanSpace]


def as_vector(x) -> tuple:
    """Accept a scalar for one-dimensional states."""
    if isinstance(x, tuple):
        return x
    if isinstance(x, (list,)):
        return tuple(x)
    return (x,)


def _matvec(m, x):
    return tuple(sum(a * b for a, b in zip(row, x)) for row in m)


def _matrix(rows, *, allow_float: bool = False) -> tuple:
    return tuple(tuple(rational(v, allow_float=allow_float) for v in row) for row in rows)


# -- generators ---------------------------------------------------------------

@dataclass(frozen=True)
class FiniteMaps:
    """One total map ``state -> state`` per letter."""

    maps: tuple

    def __post_init__(self):
        object.__setattr__(self, "maps", tuple(tuple(m) for m in self.maps))

    @property
    def arity(self) -> int:
        return len(self.maps)

    def apply(self, letter: int, x):
        return self.maps[letter][x]


@dataclass(frozen=True)
class LinearMaps:
    """One matrix per letter, acting as ``x -> A_i x``."""

    matrices: tuple
    allow_float: bool = False

    def __post_init__(self):
        mats = tuple(_matrix(m, allow_float=self.allow_float) for m in self.matrices)
        object.__setattr__(self, "matrices", mats)

    @property
    def arity(self) -> int:
        return len(self.matrices)

    @property
    def dim(self) -> int:
        return len(self.matrices[0])

    def apply(self, letter: int, x):
        return _matvec(self.matrices[letter], x)

    def nonexpanding(self) -> bool:
        """Exact test of ``|A_i x| <= |x|`` for every letter.

        Holds iff ``I - A^T A`` is positive semidefinite, which is decided by
        the signs of all its principal minors in rational arithmetic. Float
        matrices and dimensions above 8 are never certified.
        """
        n = self.dim
        if n > 8:
            return False
        for A in self.matrices:
            if not all(isinstance(v, (int, Fraction)) for row in A for v in row):
                return False
            M = [[(1 if i == j else 0) - sum(A[k][i] * A[k][j] for k in range(n))
                  for j in range(n)] for i in range(n)]
            for size in range(1, n + 1):
                for idx in combinations(range(n), size):
                    if _det([[M[i][j] for j in idx] for i in idx]) < 0:
                        return False
        return True


def _det(M) -> Fraction:
    """Determinant by fraction-exact Gaussian elimination."""
    M = [[Fraction(v) for v in row] for row in M]
    n, det = len(M), Fraction(1)
    for c in range(n):
        pivot = next((r for r in range(c, n) if M[r][c] != 0), None)
        if pivot is None:
            return Fraction(0)
        if pivot != c:
            M[c], M[pivot] = M[pivot], M[c]
            det = -det
        det *= M[c][c]
        for r in range(c + 1, n):
            factor = M[r][c] / M[c][c]
            for k in range(c, n):
                M[r][k] -= factor * M[c][k]
    return det


@dataclass(frozen=True)
class AffineMaps:
    """Two letters: letter 0 applies ``Ax``, letter 1 applies ``Ax + b``."""

    A: tuple
    b: tuple

    def __post_init__(self):
        object.__setattr__(self, "A", _matrix(self.A))
        object.__setattr__(self, "b", tuple(rational(v) for v in self.b))

    @property
    def arity(self) -> int:
        return 2

    @property
    def dim(self) -> int:
        return len(self.A)

    def apply(self, letter: int, x):
        y = _matvec(self.A, x)
        if letter == 1:
            y = tuple(a + c for a, c in zip(y, self.b))
        return y


@dataclass(frozen=True)
class UniformMotion:
    """``F_t(x) = x + v t``."""

    velocity: tuple

    def __post_init__(self):
        object.__setattr__(self, "velocity", tuple(rational(v) for v in self.velocity))

    @property
    def arity(self) -> int:
        return 1

    @property
    def dim(self) -> int:
        return len(self.velocity)

    def at(self, x, t):
        return tuple(a + v * t for a, v in zip(x, self.velocity))

    def apply(self, letter: int, x):
        return self.at(x, 1)


@dataclass(frozen=True)
class FunctionMaps:
    """Arbitrary Python callables, one per letter (not loadable from files)."""

    functions: tuple
    name: str = "maps"

    @property
    def arity(self) -> int:
        return len(self.functions)

    def apply(self, letter: int, x):
        return as_vector(self.functions[letter](x))


Generators = Union[FiniteMaps, LinearMaps, AffineMaps, UniformMotion, FunctionMaps]


@dataclass(frozen=True)
class DynamicalSystem:
    space: StateSpace
    timeline: TimelineKind
    generators: Generators

    def __post_init__(self):
        tl, gen, space = self.timeline, self.generators, self.space
        if tl.tag == "continuous" and not isinstance(gen, UniformMotion):
            raise ValueError("the continuous timeline is only supported for uniform motion")
        expected = tl.alphabet_size if tl.is_word else 1
        if gen.arity != expected:
            raise ValueError(f"{gen.arity} generators for timeline {tl}")
        if isinstance(gen, AffineMaps) and tl != TimelineKind("free", 2):
            raise ValueError("affine control systems run on the two-letter free monoid")
        if space.is_finite:
            if not isinstance(gen, FiniteMaps):
                raise ValueError("finite spaces need finite maps")
            for i, m in enumerate(gen.maps):
                if len(m) != space.n or not all(space.contains(y) for y in m):
                    raise ValueError(f"map {i} is not a total map on {space.n} states")
        else:
            if isinstance(gen, FiniteMaps):
                raise ValueError("finite maps need a finite space")
            dim = getattr(gen, "dim", space.dim)
            if dim != space.dim:
                raise ValueError(f"generator dimension {dim} != space dimension {space.dim}")
            if isinstance(gen, LinearMaps):
                for i, m in enumerate(gen.matrices):
                    if any(len(row) != space.dim for row in m) or len(m) != space.dim:
                        raise ValueError(f"matrix {i} is not {space.dim}x{space.dim}")

    @property
    def is_finite(self) -> bool:
        return self.space.is_finite

    @property
    def letters(self) -> range:
        return range(self.generators.arity)

    def step(self, x, letter: int = 0):
        return self.generators.apply(letter, x)

    def evolve(self, x, t):
        return evolve(self, x, t)

    def states(self):
        if not self.is_finite:
            raise UnsupportedExactReach("a Euclidean space has no state enumeration")
        return self.space.states()


# -- constructors for the standard examples ------------------------------------

def finite_system(table, maps, timeline: Optional[TimelineKind] = None) -> DynamicalSystem:
    maps = tuple(maps)
    if timeline is None:
        timeline = DISCRETE if len(maps) == 1 else TimelineKind("free", len(maps))
    space = table if isinstance(table, FiniteMetric) else FiniteMetric(table)
    return DynamicalSystem(space, timeline, FiniteMaps(maps))


def linear_system(*matrices, allow_float: bool = False) -> DynamicalSystem:
    """Discrete linear system for one matrix, switching system for several."""
    gen = LinearMaps(matrices, allow_float=allow_float)
    tl = DISCRETE if gen.arity == 1 else TimelineKind("free", gen.arity)
    return DynamicalSystem(EuclideanSpace(gen.dim), tl, gen)


def affine_control_system(A, b) -> DynamicalSystem:
    gen = AffineMaps(A, b)
    return DynamicalSystem(EuclideanSpace(gen.dim), TimelineKind("free", 2), gen)


def uniform_motion(velocity, timeline: TimelineKind = CONTINUOUS) -> DynamicalSystem:
    gen = UniformMotion(as_vector(velocity))
    return DynamicalSystem(EuclideanSpace(gen.dim), timeline, gen)


def map_system(dim: int, *functions, name: str = "maps") -> DynamicalSystem:
    tl = DISCRETE if len(functions) == 1 else TimelineKind("free", len(functions))
    return DynamicalSystem(EuclideanSpace(dim), tl, FunctionMaps(functions, name))


# -- evolution and reachability -------------------------------------------------

def evolve(sys: DynamicalSystem, x, t):
    tl = sys.timeline
    t = tl.check(t)
    if not sys.is_finite:
        x = as_vector(x)
        if len(x) != sys.space.dim:
            raise ValueError(f"state of dimension {len(x)} in a {sys.space.dim}-dimensional space")
    elif not sys.space.contains(x):
        raise ValueError(f"{x!r} is not a state of this space")
    gen = sys.generators
    if isinstance(gen, UniformMotion):
        return gen.at(x, t)
    if tl.is_word:
        for letter in t:
            x = gen.apply(letter, x)
        return x
    for _ in range(t):
        x = gen.apply(0, x)
    return x


def time_samples(sys: DynamicalSystem, horizon, samples: int = 16) -> list:
    """Rational time points in ``[0, horizon]`` for continuous timelines."""
    horizon = rational(horizon)
    return [horizon * k / samples for k in range(samples + 1)]


def reach_paths(sys: DynamicalSystem, s: Iterable, horizon=None, *,
                continuous_samples: int = 16) -> dict:
    """Map every reachable state to a witness ``(origin, time)``.

    ``horizon=None`` asks for the exact reachable set, which is only available
    on finite spaces. Otherwise times are bounded by ``horizon`` (step count for
    discrete and word timelines, a duration for continuous ones). Breadth-first,
    so recorded times are shortest.
    """
    tl = sys.timeline
    s = [x if sys.is_finite else as_vector(x) for x in s]
    if horizon is None and not sys.is_finite:
        raise UnsupportedExactReach("exact reachability needs a finite state space")
    paths: dict = {}
    if tl.tag == "continuous":
        for t in time_samples(sys, horizon, continuous_samples):
            for x in s:
                paths.setdefault(evolve(sys, x, t), (x, t))
        return paths
    queue = deque()
    for x in s:
        if x not in paths:
            paths[x] = (x, tl.zero)
            queue.append((x, 0))
    while queue:
        y, depth = queue.popleft()
        if horizon is not None and depth >= horizon:
            continue
        origin, t = paths[y]
        for a in sys.letters:
            z = sys.step(y, a)
            if z not in paths:
                paths[z] = (origin, t + (a,) if tl.is_word else t + 1)
                queue.append((z, depth + 1))
    return paths


def future(sys: DynamicalSystem, s: Iterable, horizon=None) -> StateSet:
    """Union of the images of ``s`` over all times up to ``horizon`` (``None`` = all)."""
    s = list(s)
    if not s:
        raise ValueError("future of the empty set")
    return frozenset(reach_paths(sys, s, horizon))


def is_equilibrium(sys: DynamicalSystem, s: Iterable, horizon=None) -> Verdict:
    """A set is an equilibrium when it is its own future."""
    s = frozenset(x if sys.is_finite else as_vector(x) for x in s)
    if horizon is None and not sys.is_finite:
        return _closed_under_generators(sys, s)
    paths = reach_paths(sys, s, horizon)
    for y, (origin, t) in paths.items():
        if y not in s:
            return Verdict.fail({"state": origin, "time": t, "reached": y},
                                "the future leaves the set")
    return Verdict.ok(horizon is None, "the set is its own future")


def _closed_under_generators(sys: DynamicalSystem, s: frozenset) -> Verdict:
    """Exact equilibrium test for a finite set in a Euclidean space.

    The future of ``s`` is ``s`` iff one step of every generator maps ``s``
    into itself (induction on time). A finite set survives a continuous
    uniform motion only when the velocity is zero.
    """
    gen = sys.generators
    if isinstance(gen, UniformMotion):
        if s and any(v != 0 for v in gen.velocity):
            x = min(s)
            return Verdict.fail({"state": x, "time": 1, "reached": gen.at(x, 1)},
                                "the future leaves the set")
        return Verdict.ok(True, "the set is its own future")
    for x in sorted(s):
        for a in sys.letters:
            y = sys.step(x, a)
            if y not in s:
                return Verdict.fail({"state": x, "time": (a,) if sys.timeline.is_word else 1,
                                     "reached": y}, "the future leaves the set")
    return Verdict.ok(True, "the set is its own future")


def trajectory(sys: DynamicalSystem, x, steps: int, letter: int = 0) -> list:
    """``[x, F(x), F(F(x)), ...]`` with ``steps`` applications of one generator."""
    out = [x if sys.is_finite else as_vector(x)]
    for _ in range(steps):
        out.append(sys.step(out[-1], letter))
    return out


def orbit_points(sys: DynamicalSystem, x, horizon, *, continuous_samples: int = 16
                 ) -> Iterator[tuple]:
    """Yield ``(t, F_t(x))`` for every sampled time up to ``horizon``.

    Unlike :func:`reach_paths` this does not merge coinciding states, so each
    time is reported (words are expanded breadth-first).
    """
    tl = sys.timeline
    if not sys.is_finite:
        x = as_vector(x)
    if tl.tag == "continuous":
        for t in time_samples(sys, horizon, continuous_samples):
            yield t, evolve(sys, x, t)
        return
    layer = [(tl.zero, x)]
    for depth in range(horizon + 1):
        yield from layer
        if depth == horizon:
            break
        if tl.is_word:
            layer = [(t + (a,), sys.step(y, a)) for t, y in layer for a in sys.letters]
        else:
            layer = [(t + 1, sys.step(y)) for t, y in layer]
