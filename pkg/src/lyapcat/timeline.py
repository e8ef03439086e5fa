"""Ordered-monoid timelines.

Three kinds are supported:

* ``DISCRETE``   -- natural numbers under addition (ticks)
* ``CONTINUOUS`` -- nonnegative rationals under addition
* ``free(k)``    -- words over the letters ``0..k-1`` under concatenation,
  ordered by prefix

Time points are plain Python values: ``int`` for discrete time,
:class:`fractions.Fraction` for continuous time and ``tuple[int, ...]`` for
words.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Union

TimePoint = Union[int, Fraction, tuple]


class KindMismatch(TypeError):
    """A time point does not belong to the timeline it was used with."""


class NotComparable(ValueError):
    """``difference(a, b)`` was requested while ``a <= b`` does not hold."""


@dataclass(frozen=True)
class TimelineKind:
    tag: str
    alphabet_size: int = 1

    def __post_init__(self):
        if self.tag not in ("discrete", "continuous", "free"):
            raise ValueError(f"unknown timeline tag {self.tag!r}")
        if self.tag == "free" and self.alphabet_size < 1:
            raise ValueError("free monoid needs an alphabet of size >= 1")
        if self.tag != "free" and self.alphabet_size != 1:
            raise ValueError("only free monoids carry an alphabet size")

    def __str__(self):
        if self.tag == "free":
            return f"free({self.alphabet_size})"
        return self.tag

    @property
    def is_word(self) -> bool:
        return self.tag == "free"

    @property
    def zero(self) -> TimePoint:
        if self.tag == "discrete":
            return 0
        if self.tag == "continuous":
            return Fraction(0)
        return ()

    def check(self, t) -> TimePoint:
        """Return ``t`` normalised for this kind, or raise :class:`KindMismatch`."""
        if self.tag == "discrete":
            if type(t) is not int or t < 0:  # excludes bool
                raise KindMismatch(f"{t!r} is not a discrete time point")
            return t
        if self.tag == "continuous":
            if isinstance(t, bool) or not isinstance(t, (int, Fraction)):
                raise KindMismatch(f"{t!r} is not a rational duration")
            if t < 0:
                raise KindMismatch(f"negative duration {t}")
            return Fraction(t)
        if not isinstance(t, tuple):
            raise KindMismatch(f"{t!r} is not a word")
        k = self.alphabet_size
        for letter in t:
            if type(letter) is not int or not 0 <= letter < k:
                raise KindMismatch(f"letter {letter!r} outside alphabet of size {k}")
        return t

    def plus(self, a, b) -> TimePoint:
        a, b = self.check(a), self.check(b)
        return a + b  # int/Fraction addition or tuple concatenation

    def leq(self, a, b) -> bool:
        a, b = self.check(a), self.check(b)
        if self.is_word:
            return b[:len(a)] == a
        return a <= b

    def difference(self, a, b) -> TimePoint:
        """The unique ``d`` with ``plus(a, d) == b``."""
        if not self.leq(a, b):
            raise NotComparable(f"{a!r} is not below {b!r}")
        a, b = self.check(a), self.check(b)
        if self.is_word:
            return b[len(a):]
        return b - a

    def words(self, max_length: int) -> Iterator[tuple]:
        """All words of length <= max_length, shortest first."""
        if not self.is_word:
            raise KindMismatch("only free monoids have words")
        layer = [()]
        for _ in range(max_length + 1):
            yield from layer
            layer = [w + (a,) for w in layer for a in range(self.alphabet_size)]

    def length(self, t) -> int:
        """Number of generator steps making up ``t`` (discrete and word kinds)."""
        t = self.check(t)
        if self.tag == "continuous":
            raise KindMismatch("continuous durations have no step count")
        return len(t) if self.is_word else t


DISCRETE = TimelineKind("discrete")
CONTINUOUS = TimelineKind("continuous")


def free(alphabet_size: int) -> TimelineKind:
    return TimelineKind("free", alphabet_size)


def plus(kind: TimelineKind, a, b) -> TimePoint:
    return kind.plus(a, b)


def leq(kind: TimelineKind, a, b) -> bool:
    return kind.leq(a, b)


def difference(kind: TimelineKind, a, b) -> TimePoint:
    return kind.difference(a, b)


def format_time(kind: TimelineKind, t) -> str:
    """Human readable rendering; words use letters a, b, c, ..."""
    if kind.is_word:
        return "".join(chr(ord("a") + i) for i in t) or "0"
    return str(t)
