"""Comparison functions: increasing maps of the positive reals.

The exact workhorse is :class:`PiecewiseLinear` -- rational breakpoints,
linear interpolation, linear extensions on both sides. It is closed under
composition and inversion and its pointwise order is decided exactly by
looking at breakpoints.

:class:`Power` (``r -> c * r**p``) covers the square-root shaped bounds that
quadratic forms produce; those are evaluated in floating point.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .system import rational
from .verdict import Verdict


class NotInvertible(ValueError):
    """The function is not a bijection of the positive reals."""


class Tag(enum.Flag):
    NONE = 0
    INVERTIBLE = enum.auto()
    UNBOUNDED_IMAGE = enum.auto()
    IDENTITY = enum.auto()


def compose_tags(outer: Tag, inner: Tag) -> Tag:
    """Tags guaranteed for ``outer . inner`` knowing only the operands' tags."""
    if Tag.IDENTITY in outer:
        return inner
    if Tag.IDENTITY in inner:
        return outer
    tags = Tag.NONE
    if Tag.UNBOUNDED_IMAGE in outer and Tag.UNBOUNDED_IMAGE in inner:
        tags |= Tag.UNBOUNDED_IMAGE
    if Tag.INVERTIBLE in outer and Tag.INVERTIBLE in inner:
        tags |= Tag.INVERTIBLE
    return tags


def invert_tags(tags: Tag) -> Tag:
    if Tag.INVERTIBLE not in tags:
        raise NotInvertible("only invertible functions have an inverse property")
    return tags


class ComparisonFunction:
    """Base class; subclasses implement ``__call__``, ``tags`` and ``inverse``."""

    exact = False

    def __call__(self, r):
        raise NotImplementedError

    @property
    def tags(self) -> Tag:
        raise NotImplementedError

    @property
    def invertible(self) -> bool:
        return Tag.INVERTIBLE in self.tags

    def inverse(self) -> "ComparisonFunction":
        raise NotImplementedError

    def at_zero(self):
        """Limit of the function at 0+ (used for observables that vanish)."""
        return self(0)


@dataclass(frozen=True)
class PiecewiseLinear(ComparisonFunction):
    """Piecewise-linear increasing function with rational breakpoints.

    ``xs``/``ys`` are strictly increasing. Left of ``xs[0]`` the function is
    the line through ``(xs[0], ys[0])`` with ``left_slope`` (which must stay
    nonnegative down to 0); right of ``xs[-1]`` it continues with
    ``right_slope``. A zero right slope gives a bounded, saturating tail.

    Instances are kept in a canonical form (collinear breakpoints removed),
    so ``==`` is equality of functions.
    """

    xs: tuple
    ys: tuple
    left_slope: Fraction
    right_slope: Fraction

    exact = True

    def __post_init__(self):
        xs = tuple(rational(x) for x in self.xs)
        ys = tuple(rational(y) for y in self.ys)
        left, right = rational(self.left_slope), rational(self.right_slope)
        if not xs or len(xs) != len(ys):
            raise ValueError("need matching, nonempty breakpoint lists")
        if xs[0] <= 0:
            raise ValueError("breakpoints must be positive")
        if any(b <= a for a, b in zip(xs, xs[1:])) or any(b <= a for a, b in zip(ys, ys[1:])):
            raise ValueError("breakpoints and values must be strictly increasing")
        if left <= 0:
            raise ValueError("left slope must be positive")
        if right < 0:
            raise ValueError("right slope must be nonnegative")
        if ys[0] - left * xs[0] < 0:
            raise ValueError("function must stay positive on (0, x1]")
        xs, ys = _canonical(xs, ys, ys[0] - left * xs[0], right)
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ys", ys)
        object.__setattr__(self, "left_slope", left)
        object.__setattr__(self, "right_slope", right)

    @classmethod
    def through(cls, points, left_slope=None, right_slope=None) -> "PiecewiseLinear":
        """Interpolate ``points``; by default pass through the origin and continue
        with the last segment's slope."""
        points = sorted((rational(x), rational(y)) for x, y in points)
        xs = tuple(p[0] for p in points)
        ys = tuple(p[1] for p in points)
        if left_slope is None:
            left_slope = ys[0] / xs[0]
        if right_slope is None:
            right_slope = ((ys[-1] - ys[-2]) / (xs[-1] - xs[-2])) if len(xs) > 1 else left_slope
        return cls(xs, ys, left_slope, right_slope)

    @classmethod
    def linear(cls, slope) -> "PiecewiseLinear":
        slope = rational(slope)
        return cls((Fraction(1),), (slope,), slope, slope)

    def __call__(self, r):
        if r == math.inf:
            return math.inf if self.right_slope > 0 else self.sup
        r = rational(r, allow_float=True)
        xs, ys = self.xs, self.ys
        if r <= xs[0]:
            return ys[0] - self.left_slope * (xs[0] - r)
        if r >= xs[-1]:
            return ys[-1] + self.right_slope * (r - xs[-1])
        lo, hi = 0, len(xs) - 1
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if xs[mid] <= r:
                lo = mid
            else:
                hi = mid
        return ys[lo] + (ys[hi] - ys[lo]) * (r - xs[lo]) / (xs[hi] - xs[lo])

    @property
    def inf(self) -> Fraction:
        """Infimum of the image (the value approached at 0+)."""
        return self.ys[0] - self.left_slope * self.xs[0]

    @property
    def sup(self):
        return math.inf if self.right_slope > 0 else self.ys[-1]

    @property
    def tags(self) -> Tag:
        tags = Tag.NONE
        if self.right_slope > 0:
            tags |= Tag.UNBOUNDED_IMAGE
            if self.inf == 0:
                tags |= Tag.INVERTIBLE
        if self == IDENTITY:
            tags |= Tag.IDENTITY
        return tags

    def preimage(self, y) -> Optional[Fraction]:
        """The unique ``r > 0`` with ``f(r) == y``, or None when ``y`` is not attained."""
        y = rational(y)
        if y <= self.inf or y >= self.sup:
            return None
        xs, ys = self.xs, self.ys
        if y <= ys[0]:
            return xs[0] - (ys[0] - y) / self.left_slope
        if y >= ys[-1]:
            return xs[-1] + (y - ys[-1]) / self.right_slope
        for i in range(len(ys) - 1):
            if ys[i] <= y <= ys[i + 1]:
                return xs[i] + (xs[i + 1] - xs[i]) * (y - ys[i]) / (ys[i + 1] - ys[i])
        raise AssertionError("unreachable")

    def inverse(self) -> "PiecewiseLinear":
        return invert(self)

    def to_dict(self) -> dict:
        return {
            "breakpoints": [[str(x), str(y)] for x, y in zip(self.xs, self.ys)],
            "left_slope": str(self.left_slope),
            "right_slope": str(self.right_slope),
        }


def _canonical(xs, ys, y0, right):
    pts = [(Fraction(0), y0)] + list(zip(xs, ys))
    keep = [pts[0]]
    for i in range(1, len(pts)):
        prev = keep[-1]
        x, y = pts[i]
        slope_in = (y - prev[1]) / (x - prev[0])
        if i + 1 < len(pts):
            nx, ny = pts[i + 1]
            slope_out = (ny - y) / (nx - x)
        else:
            slope_out = right
        if slope_in != slope_out:
            keep.append((x, y))
    keep = keep[1:]
    if not keep:
        # a single line y0 + s r; anchor it at r = 1
        keep = [(Fraction(1), y0 + right)]
    return tuple(p[0] for p in keep), tuple(p[1] for p in keep)


IDENTITY = PiecewiseLinear((Fraction(1),), (Fraction(1),), Fraction(1), Fraction(1))


def identity() -> PiecewiseLinear:
    return IDENTITY


@dataclass(frozen=True)
class Power(ComparisonFunction):
    """``r -> coefficient * r ** exponent`` with both parameters positive."""

    coefficient: float
    exponent: float

    def __post_init__(self):
        if not self.coefficient > 0 or not self.exponent > 0:
            raise ValueError("power comparison functions need positive parameters")

    @property
    def exact(self) -> bool:
        return self.exponent == 1 and isinstance(self.coefficient, (int, Fraction))

    def __call__(self, r):
        if r == math.inf:
            return math.inf
        if self.exponent == 1:
            return self.coefficient * r
        return self.coefficient * float(r) ** self.exponent

    @property
    def tags(self) -> Tag:
        tags = Tag.INVERTIBLE | Tag.UNBOUNDED_IMAGE
        if self.exponent == 1 and self.coefficient == 1:
            tags |= Tag.IDENTITY
        return tags

    def inverse(self) -> "Power":
        if self.exponent == 1:
            c = self.coefficient
            return Power(Fraction(1) / c if isinstance(c, (int, Fraction)) else 1 / c, 1)
        p = 1 / self.exponent
        return Power(float(self.coefficient) ** (-p), p)

    def to_dict(self) -> dict:
        return {"power": {"coefficient": self.coefficient, "exponent": self.exponent}}


@dataclass(frozen=True)
class Composite(ComparisonFunction):
    """``outer . inner`` for operands with no closed-form composite."""

    outer: ComparisonFunction
    inner: ComparisonFunction

    def __call__(self, r):
        return self.outer(self.inner(r))

    @property
    def tags(self) -> Tag:
        return compose_tags(self.outer.tags, self.inner.tags)

    def inverse(self) -> "ComparisonFunction":
        return compose(invert(self.inner), invert(self.outer))


def compose(outer: ComparisonFunction, inner: ComparisonFunction) -> ComparisonFunction:
    """``r -> outer(inner(r))``."""
    if isinstance(outer, PiecewiseLinear) and isinstance(inner, PiecewiseLinear):
        return _compose_pl(outer, inner)
    if isinstance(outer, Power) and isinstance(inner, Power):
        c = outer.coefficient * (inner.coefficient if outer.exponent == 1
                                 else float(inner.coefficient) ** outer.exponent)
        p = outer.exponent * inner.exponent
        if p != 1 and abs(p - 1) < 1e-12:
            p = 1
        return Power(c, p)
    if Tag.IDENTITY in outer.tags:
        return inner
    if Tag.IDENTITY in inner.tags:
        return outer
    if (isinstance(outer, Power) and outer.exact) or (isinstance(inner, Power) and inner.exact):
        outer = _as_pl(outer)
        inner = _as_pl(inner)
        if isinstance(outer, PiecewiseLinear) and isinstance(inner, PiecewiseLinear):
            return _compose_pl(outer, inner)
    return Composite(outer, inner)


def _as_pl(f):
    if isinstance(f, Power) and f.exact:
        return PiecewiseLinear.linear(f.coefficient)
    return f


def _compose_pl(f: PiecewiseLinear, g: PiecewiseLinear) -> PiecewiseLinear:
    xs = set(g.xs)
    for b in f.xs:
        p = g.preimage(b)
        if p is not None:
            xs.add(p)
    xs = sorted(xs)
    ys = [f(g(x)) for x in xs]
    # tails are straight lines: read their slopes off one extra point
    x0 = xs[0] / 2
    left = (ys[0] - f(g(x0))) / (xs[0] - x0)
    right = f(g(xs[-1] + 1)) - ys[-1]
    # flat stretches can only appear once the inner function saturates
    pts = [(x, y) for i, (x, y) in enumerate(zip(xs, ys)) if i == 0 or y > ys[i - 1]]
    return PiecewiseLinear(tuple(p[0] for p in pts), tuple(p[1] for p in pts), left, right)


def invert(f: ComparisonFunction) -> ComparisonFunction:
    if isinstance(f, PiecewiseLinear):
        if not f.invertible:
            raise NotInvertible(
                f"image is ({f.inf}, {f.sup}); an inverse needs the whole positive axis")
        return PiecewiseLinear(f.ys, f.xs, 1 / f.left_slope, 1 / f.right_slope)
    if not f.invertible:
        raise NotInvertible("function is not a bijection of the positive reals")
    return f.inverse()


def pointwise_leq(f: PiecewiseLinear, g: PiecewiseLinear, lo=0, hi=None) -> Verdict:
    """Decide ``f(r) <= g(r)`` for every ``r`` in ``[lo, hi]`` (``hi=None`` means +inf).

    Both functions are linear between the union of their breakpoints, so the
    comparison at those points and the interval ends settles the question.
    """
    lo = rational(lo)
    points = sorted({lo, *f.xs, *g.xs} | ({rational(hi)} if hi is not None else set()))
    points = [p for p in points if p >= lo and (hi is None or p <= hi)]
    for r in points:
        if r == 0:
            if f.inf > g.inf:
                return Verdict.fail({"r": r, "f": f.inf, "g": g.inf}, "f exceeds g near 0")
            continue
        if f(r) > g(r):
            return Verdict.fail({"r": r, "f": f(r), "g": g(r)}, "f exceeds g")
    if hi is None and f.right_slope > g.right_slope:
        last = points[-1]
        gap = g(last) - f(last)
        r = last + gap / (f.right_slope - g.right_slope) + 1
        return Verdict.fail({"r": r, "f": f(r), "g": g(r)}, "f overtakes g on the right tail")
    return Verdict.ok(True, "f <= g pointwise")
