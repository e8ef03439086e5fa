"""Stability certificates.

Two kinds of certificate describe the same stability property:

* :class:`DeltaCertificate` -- a point ``x*`` and a comparison function
  ``delta`` such that every trajectory starting in the ball of radius
  ``delta(eps)`` stays in the ball of radius ``eps``.
* :class:`LyapunovCertificate` -- a forward-invariant level-set family
  ``V(eps)`` squeezed between balls: ``ball(inner(eps)) <= V(eps) <=
  ball(outer(eps))`` with ``outer`` invertible.

:func:`delta_from_lyapunov` turns the second into the first
(``delta = inner . outer^-1``); :func:`converse_construct` goes back by taking
the reachable set of the shrunken ball. :func:`factorize` and
:func:`compose_factorization` split a delta certificate into two triangles and
glue it back.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from typing import Optional

from .comparison import (IDENTITY, ComparisonFunction, NotInvertible, Tag, compose,
                         compose_tags, invert, invert_tags)
from .monovariant import (BallFamily, LevelSetFamily, Observable, _check_grid,
                          check_levelset_laxcone)
from .system import (DynamicalSystem, LinearMaps, StateSpace, UnsupportedExactReach, as_vector,
                     orbit_points, reach_paths)
from .verdict import Verdict


class CertificateError(ValueError):
    """A constructed certificate failed its own re-check."""


def default_grid(space: StateSpace, x_star) -> tuple:
    """One radius per distinct ball around ``x_star`` (finite spaces).

    The positive distances from ``x_star``, preceded by half the smallest one
    so that the singleton ball is covered too.
    """
    if not space.is_finite:
        raise UnsupportedExactReach("default grids need a finite space")
    positive = [d for d in space.distances_from(x_star) if d > 0]
    if not positive:
        return (Fraction(1),)
    return (positive[0] / 2, *positive)


def ball_samples(center, r, per_axis: int = 4) -> list:
    """Deterministic sample points of the closed ball of radius ``r``.

    Full lattice in dimensions 1 and 2, axis points plus scaled cube corners
    above that. Boundary points are included.
    """
    center = as_vector(center)
    dim = len(center)
    exact = isinstance(r, (int, Fraction))
    step = (Fraction(r) / per_axis) if exact else r / per_axis
    pts = set()
    if dim <= 2:
        for ks in product(range(-per_axis, per_axis + 1), repeat=dim):
            if sum(k * k for k in ks) <= per_axis * per_axis:
                pts.add(tuple(c + k * step for c, k in zip(center, ks)))
    else:
        for i in range(dim):
            for k in range(-per_axis, per_axis + 1):
                pts.add(tuple(c + (k * step if j == i else 0) for j, c in enumerate(center)))
        if exact:
            root = math.isqrt(dim)
            scale = Fraction(r) / (root if root * root == dim else root + 1)
        else:
            scale = r / math.sqrt(dim)
        for signs in product((-1, 1), repeat=dim):
            pts.add(tuple(c + s * scale for c, s in zip(center, signs)))
    return _nearest_first(center, pts)


def _nearest_first(center, pts) -> list:
    """Sort points by distance to ``center`` so witnesses come out minimal."""
    center = as_vector(center)
    return sorted(pts, key=lambda p: (sum((a - c) ** 2 for a, c in zip(p, center)), p))


def _grid_map(fn, grid, jobs: int):
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(fn, grid))
    return [fn(e) for e in grid]


# -- certificate types ----------------------------------------------------------

@dataclass(frozen=True)
class DeltaCertificate:
    x_star: object
    delta: ComparisonFunction
    grid: tuple
    horizon: Optional[int] = None
    # tags predicted by the property algebra when derived from a Lyapunov certificate
    propagated: Optional[Tag] = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "grid", _check_grid(self.grid))

    @property
    def tags(self) -> Tag:
        return self.delta.tags if self.propagated is None else self.propagated


@dataclass(frozen=True)
class LyapunovCertificate:
    """``levels`` plays the level-set family; ``inner`` and ``outer`` are the
    lower and upper comparison functions of the ball sandwich."""

    x_star: object
    levels: LevelSetFamily
    inner: ComparisonFunction
    outer: ComparisonFunction
    notes: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not self.outer.invertible:
            raise NotInvertible("the outer comparison function must be invertible")

    @property
    def grid(self) -> tuple:
        return self.levels.grid


@dataclass(frozen=True)
class RescaledFamily:
    """``r -> base(f(r))``; used for the shrunken-ball family."""

    base: object
    f: ComparisonFunction

    def contains(self, r, x, tol=0) -> bool:
        return self.base.contains(self.f(r), x, tol)

    def at(self, r) -> frozenset:
        return self.base.at(self.f(r))


@dataclass(frozen=True)
class Factorization:
    """``delta = delta_minus . delta_plus`` split through families ``s1`` and ``s2``.

    The three cells, for every grid radius ``eps`` and ``m = delta_plus(eps)``:

    * left:   ``ball(delta_minus(m)) <= s1(m)``
    * centre: ``F_t(s1(m)) <= s2(m)`` for every time ``t``
    * right:  ``s2(m) <= ball(eps)``
    """

    x_star: object
    grid: tuple
    delta_plus: ComparisonFunction
    delta_minus: ComparisonFunction
    s1: object
    s2: object


# -- verification -----------------------------------------------------------------

def _horizon(sys, horizon):
    if not sys.is_finite and horizon is None:
        raise UnsupportedExactReach("Euclidean certificates need a horizon")
    return horizon


def _escape_check(sys, x_star, start_radius, target_radius, *, horizon, samples, tol):
    """Does every trajectory from ``ball(start_radius)`` stay in ``ball(target_radius)``?

    Returns None on success or a witness dict.
    """
    balls = BallFamily(sys.space, x_star)
    if sys.is_finite:
        start = balls.at(start_radius)
        if horizon is None:
            for y, (origin, t) in reach_paths(sys, start).items():
                if not balls.contains(target_radius, y):
                    return {"state": origin, "time": t, "reached": y}
            return None
        pts = sorted(start)
    else:
        pts = samples if samples is not None else ball_samples(x_star, start_radius)
        pts = [as_vector(x) for x in pts]
    for x in pts:
        if not balls.contains(start_radius, x):
            continue
        for t, y in orbit_points(sys, x, horizon):
            if not balls.contains(target_radius, y, tol):
                return {"state": x, "time": t, "reached": y}
    return None


def _norm_argument(sys: DynamicalSystem, cert: DeltaCertificate) -> bool:
    """Exact proof for linear maps around the origin: if no generator expands
    the norm then every ball is invariant, so ``delta(eps) <= eps`` suffices."""
    gen = sys.generators
    if sys.is_finite or not isinstance(gen, LinearMaps):
        return False
    if any(c != 0 for c in as_vector(cert.x_star)) or not getattr(cert.delta, "exact", False):
        return False
    return all(cert.delta(e) <= e for e in cert.grid) and gen.nonexpanding()


def verify_delta(sys: DynamicalSystem, cert: DeltaCertificate, *, horizon=None,
                 samples=None, tol=0, jobs: int = 1) -> Verdict:
    """For every grid ``eps``: the future of ``ball(delta(eps))`` stays in ``ball(eps)``."""
    if _norm_argument(sys, cert):
        return Verdict.ok(True, "the maps never increase the norm and delta(eps) <= eps",
                          route="norm")
    horizon = _horizon(sys, horizon if horizon is not None else cert.horizon)

    def one(eps):
        r = cert.delta(eps)
        w = _escape_check(sys, cert.x_star, r, eps, horizon=horizon, samples=samples, tol=tol)
        if w is not None:
            w = {"epsilon": eps, "radius": r, **w}
        return w

    for w in _grid_map(one, cert.grid, jobs):
        if w is not None:
            return Verdict.fail(w, "a trajectory escapes the target ball")
    exact = sys.is_finite and horizon is None and getattr(cert.delta, "exact", False)
    return Verdict.ok(exact, "every shrunken ball stays inside its target ball")


def _sandwich(sys, cert: LyapunovCertificate, eps, *, samples, tol):
    balls = BallFamily(sys.space, cert.x_star)
    a, b = cert.inner(eps), cert.outer(eps)
    if sys.is_finite:
        level = cert.levels.at(eps)
        for x in sorted(balls.at(a) - level):
            return {"epsilon": eps, "side": "inner", "state": x, "radius": a}
        for x in sorted(level - balls.at(b)):
            return {"epsilon": eps, "side": "outer", "state": x, "radius": b}
        return None
    inner_pts = samples if samples is not None else ball_samples(cert.x_star, a)
    for x in inner_pts:
        x = as_vector(x)
        if balls.contains(a, x) and not cert.levels.contains(eps, x, tol):
            return {"epsilon": eps, "side": "inner", "state": x, "radius": a}
    outer_pts = samples if samples is not None else ball_samples(cert.x_star, 2 * b)
    for x in outer_pts:
        x = as_vector(x)
        if cert.levels.contains(eps, x) and not balls.contains(b, x, tol):
            return {"epsilon": eps, "side": "outer", "state": x, "radius": b}
    return None


def verify_lyapunov(sys: DynamicalSystem, cert: LyapunovCertificate, *, horizon=None,
                    samples=None, tol=0, jobs: int = 1) -> Verdict:
    """Forward invariance of every level set plus the ball sandwich on the grid."""
    horizon = _horizon(sys, horizon)
    if sys.is_finite and horizon is None:
        decrease = check_levelset_laxcone(sys, cert.levels)
    else:
        pts = samples
        if pts is None:
            pts = _nearest_first(cert.x_star, {p for e in cert.grid
                                               for p in ball_samples(cert.x_star, cert.outer(e))})
        decrease = check_levelset_laxcone(sys, cert.levels, horizon=horizon, samples=pts, tol=tol)
    if not decrease:
        return Verdict.fail(decrease.witness, "forward decrease fails: " + decrease.detail)
    found = _grid_map(lambda e: _sandwich(sys, cert, e, samples=samples, tol=tol), cert.grid, jobs)
    for w in found:
        if w is not None:
            return Verdict.fail(w, f"{w['side']} ball inclusion fails")
    exact = (decrease.exact and getattr(cert.inner, "exact", False)
             and getattr(cert.outer, "exact", False))
    return Verdict.ok(exact, "level sets are forward invariant and sandwiched between balls")


# -- constructions -------------------------------------------------------------------

def delta_from_lyapunov(cert: LyapunovCertificate) -> DeltaCertificate:
    """``delta = inner . outer^-1`` on the grid ``outer(eps)``."""
    delta = compose(cert.inner, invert(cert.outer))
    grid = tuple(cert.outer(e) for e in cert.grid)
    tags = compose_tags(cert.inner.tags, invert_tags(cert.outer.tags))
    return DeltaCertificate(cert.x_star, delta, grid, propagated=tags)


def check_factorization(sys: DynamicalSystem, fac: Factorization, *, horizon=None,
                        samples=None, tol=0) -> Verdict:
    horizon = _horizon(sys, horizon)
    balls = BallFamily(sys.space, fac.x_star)
    exact = sys.is_finite and horizon is None
    for eps in fac.grid:
        m = fac.delta_plus(eps)
        r = fac.delta_minus(m)
        if exact:
            s1, s2 = fac.s1.at(m), fac.s2.at(m)
            for x in sorted(balls.at(r) - s1):
                return Verdict.fail({"epsilon": eps, "cell": "left", "state": x},
                                    "shrunken ball not inside S1")
            for y, (origin, t) in reach_paths(sys, s1).items():
                if y not in s2:
                    return Verdict.fail({"epsilon": eps, "cell": "centre", "state": origin,
                                         "time": t, "reached": y}, "future of S1 leaves S2")
            for x in sorted(s2 - balls.at(eps)):
                return Verdict.fail({"epsilon": eps, "cell": "right", "state": x},
                                    "S2 not inside the target ball")
            continue
        pts = samples if samples is not None else ball_samples(fac.x_star, 2 * eps)
        for x in pts:
            x = as_vector(x)
            if balls.contains(r, x) and not fac.s1.contains(m, x, tol):
                return Verdict.fail({"epsilon": eps, "cell": "left", "state": x},
                                    "shrunken ball not inside S1")
            if fac.s2.contains(m, x) and not balls.contains(eps, x, tol):
                return Verdict.fail({"epsilon": eps, "cell": "right", "state": x},
                                    "S2 not inside the target ball")
            if fac.s1.contains(m, x):
                for t, y in orbit_points(sys, x, horizon):
                    if not fac.s2.contains(m, y, tol):
                        return Verdict.fail({"epsilon": eps, "cell": "centre", "state": x,
                                             "time": t, "reached": y}, "future of S1 leaves S2")
    return Verdict.ok(exact, "all three cells hold")


def factorize(cert: DeltaCertificate, sys: Optional[DynamicalSystem] = None,
              **check_kwargs) -> Factorization:
    """Split through ``delta_plus = id``, ``delta_minus = delta``,
    ``s1 = ball(delta(.))`` and ``s2 = ball(.)``. Re-checked when ``sys`` is given."""
    balls = None
    space = getattr(sys, "space", None)
    if space is not None:
        balls = BallFamily(space, cert.x_star)
    fac = Factorization(cert.x_star, cert.grid, IDENTITY, cert.delta,
                        RescaledFamily(balls, cert.delta) if balls else None, balls)
    if sys is not None:
        verdict = check_factorization(sys, fac, **check_kwargs)
        if not verdict:
            raise CertificateError(f"factorization re-check failed: {verdict.witness}")
    return fac


def compose_factorization(fac: Factorization) -> DeltaCertificate:
    """Glue the outer square back together: ``delta = delta_minus . delta_plus``."""
    return DeltaCertificate(fac.x_star, compose(fac.delta_minus, fac.delta_plus), fac.grid)


def converse_construct(sys: DynamicalSystem, cert: DeltaCertificate, *, horizon=None,
                       samples=None, tol=0) -> LyapunovCertificate:
    """Build a Lyapunov certificate from a delta certificate.

    ``V(eps)`` is the reachable set of ``ball(delta(eps))``, sandwiched by
    ``inner = delta`` and ``outer = id``. The result is verified before it is
    returned; :class:`CertificateError` means the input certificate was not
    valid.
    """
    horizon = _horizon(sys, horizon if horizon is not None else cert.horizon)
    balls = BallFamily(sys.space, cert.x_star)
    if sys.is_finite and horizon is None:
        s1 = {e: balls.at(cert.delta(e)) for e in cert.grid}
        s2 = {e: balls.at(e) for e in cert.grid}
        if s1 == s2:
            levels = LevelSetFamily(sys.space, cert.grid, s2)
            how = "ball family (shrunken and target balls coincide)"
        else:
            levels = LevelSetFamily(sys.space, cert.grid,
                                    {e: frozenset(reach_paths(sys, s)) for e, s in s1.items()})
            how = "reachable sets of the shrunken balls"
        lyap = LyapunovCertificate(cert.x_star, levels, cert.delta, IDENTITY,
                                   {"construction": how})
        verdict = verify_lyapunov(sys, lyap)
    else:
        origins, clouds = {}, {}
        for e in cert.grid:
            r = cert.delta(e)
            pts = samples if samples is not None else ball_samples(cert.x_star, r)
            origins[e] = [as_vector(p) for p in pts if balls.contains(r, as_vector(p))]
            clouds[e] = frozenset(y for x in origins[e]
                                  for _, y in orbit_points(sys, x, 2 * horizon))
            for y in clouds[e]:
                if not balls.contains(e, y, tol):
                    raise CertificateError(
                        f"reachable point {y} leaves ball({e}); the delta certificate is invalid")
        delta = cert.delta

        def member(r, x, tol=0, _clouds=clouds):
            x = as_vector(x)
            return balls.contains(delta(r), x) or x in _clouds.get(r, ())

        levels = LevelSetFamily(sys.space, cert.grid, clouds, member)
        lyap = LyapunovCertificate(cert.x_star, levels, cert.delta, IDENTITY,
                                   {"construction": "sampled reachable clouds"})
        all_origins = sorted({x for pts in origins.values() for x in pts})
        verdict = verify_lyapunov(sys, lyap, horizon=horizon, samples=all_origins, tol=tol)
    if not verdict:
        raise CertificateError(f"constructed certificate fails: {verdict.witness}")
    lyap.notes["verdict"] = verdict
    return lyap


@dataclass(frozen=True)
class LevelSetObservable(Observable):
    """Pointwise function recovered from a level-set family: the least grid
    radius whose set contains the state, ``inf`` if none does."""

    levels: LevelSetFamily
    name: str = "levels"

    def __call__(self, x):
        for r in self.levels.grid:
            if self.levels.contains(r, x):
                return r
        return math.inf


def pointwise_from_levelsets(fam: LevelSetFamily) -> LevelSetObservable:
    if not fam.is_monotone():
        raise ValueError("level-set family is not monotone")
    return LevelSetObservable(fam)


def check_global(cert) -> Verdict:
    """Global variants: ``delta`` (delta certificates) or ``inner`` (Lyapunov
    certificates) must be a bijection of the positive reals."""
    f = cert.delta if isinstance(cert, DeltaCertificate) else cert.inner
    if f.invertible:
        return Verdict.ok(getattr(f, "exact", False), "comparison function is invertible")
    return Verdict.fail({"inf": getattr(f, "inf", None), "sup": getattr(f, "sup", None)},
                        "image does not cover the positive reals")


def outer_triangle(levels, x_star, outer, grid, space: StateSpace) -> list:
    """Per grid radius: ``levels(eps) <= ball(outer(eps))``."""
    balls = BallFamily(space, x_star)
    return [levels.at(e) <= balls.at(outer(e)) for e in grid]


def outer_triangle_inverse(levels, x_star, outer_inverse, radii, space: StateSpace) -> list:
    """Per radius ``r``: ``levels(outer^-1(r)) <= ball(r)``."""
    balls = BallFamily(space, x_star)
    return [levels.at(outer_inverse(r)) <= balls.at(r) for r in radii]
