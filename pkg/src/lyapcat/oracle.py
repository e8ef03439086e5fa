"""Brute-force ground truth for small finite systems.

The helpers here work from the raw definitions on a :class:`FiniteInstance`
(a distance table and one map per letter) and share no code with the engine
modules. :func:`brute_check_theorems` then runs the engine on the same instance
and reports every disagreement as a counterexample bundle.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

MAX_STATES = 64
MAX_LETTERS = 3


@dataclass(frozen=True)
class FiniteInstance:
    metric: tuple  # metric[i][j], exact rationals
    maps: tuple    # maps[a][i] = image of state i under letter a

    def __post_init__(self):
        n = len(self.metric)
        if not 1 <= n <= MAX_STATES:
            raise ValueError(f"instances have 1..{MAX_STATES} states")
        if not 1 <= len(self.maps) <= MAX_LETTERS:
            raise ValueError(f"instances have 1..{MAX_LETTERS} letters")
        for i in range(n):
            for j in range(n):
                if (self.metric[i][j] == 0) != (i == j) or self.metric[i][j] != self.metric[j][i]:
                    raise ValueError("not a metric")
                for k in range(n):
                    if self.metric[i][k] > self.metric[i][j] + self.metric[j][k]:
                        raise ValueError("triangle inequality fails")

    @property
    def n(self) -> int:
        return len(self.metric)

    def to_system(self):
        from .system import finite_system
        return finite_system(self.metric, self.maps)


def brute_reach(inst: FiniteInstance, s) -> frozenset:
    """Least fixpoint of ``X -> X u F_a(X)``, recomputed from scratch each round."""
    current = frozenset(s)
    while True:
        grown = current | {m[x] for m in inst.maps for x in current}
        if grown == current:
            return current
        current = grown


def brute_ball(inst: FiniteInstance, x_star: int, r) -> frozenset:
    return frozenset(y for y in range(inst.n) if inst.metric[x_star][y] <= r)


def radius_candidates(inst: FiniteInstance, x_star: int) -> list:
    """One positive radius per distinct ball around ``x_star``.

    The singleton ball is represented by half the smallest positive distance.
    """
    positive = sorted({d for d in inst.metric[x_star] if d > 0})
    if not positive:
        return [Fraction(1)]
    return [positive[0] / 2] + positive


def brute_delta_exists(inst: FiniteInstance, x_star: int, eps) -> Optional[Fraction]:
    """Largest candidate radius whose ball never leaves ``ball(eps)``, or None."""
    target = brute_ball(inst, x_star, eps)
    for r in sorted(radius_candidates(inst, x_star), reverse=True):
        if brute_reach(inst, brute_ball(inst, x_star, r)) <= target:
            return r
    return None


# -- random instances ---------------------------------------------------------------

def random_metric(rng: random.Random, n: int, max_weight: int = 6) -> tuple:
    """Shortest-path metric of a complete graph with random integer weights."""
    d = [[0 if i == j else rng.randint(1, max_weight) for j in range(n)] for i in range(n)]
    for i in range(n):
        for j in range(i):
            d[i][j] = d[j][i]
    for k in range(n):
        for i in range(n):
            for j in range(n):
                if d[i][k] + d[k][j] < d[i][j]:
                    d[i][j] = d[i][k] + d[k][j]
    return tuple(tuple(Fraction(v) for v in row) for row in d)


def random_instance(rng: random.Random, max_states: int = 16, max_letters: int = 3,
                    style: str = "random") -> FiniteInstance:
    """``style``: ``random`` maps, ``contracting`` (no state moves away from
    state 0), or ``fixed`` (state 0 fixed, everything else random)."""
    n = rng.randint(1, max_states)
    k = rng.randint(1, max_letters)
    metric = random_metric(rng, n)
    maps = []
    for _ in range(k):
        if style == "contracting":
            m = [rng.choice([y for y in range(n) if metric[0][y] <= metric[0][x]])
                 for x in range(n)]
        else:
            m = [rng.randrange(n) for _ in range(n)]
            if style == "fixed":
                m[0] = 0
        maps.append(tuple(m))
    return FiniteInstance(metric, tuple(maps))


def random_observable(rng: random.Random, n: int, inf_chance: float = 0.1) -> tuple:
    return tuple(float("inf") if rng.random() < inf_chance else Fraction(rng.randint(0, 5))
                 for _ in range(n))


def decreasing_instance(rng: random.Random, values: tuple, metric: tuple, letters: int,
                        noise: float = 0.0) -> FiniteInstance:
    """Maps that never increase ``values``, except with probability ``noise``."""
    n = len(values)
    maps = []
    for _ in range(letters):
        m = []
        for x in range(n):
            allowed = [y for y in range(n) if values[y] <= values[x]]
            m.append(rng.randrange(n) if rng.random() < noise else rng.choice(allowed))
        maps.append(tuple(m))
    return FiniteInstance(metric, tuple(maps))


# -- theorem sweep ---------------------------------------------------------------------

@dataclass
class TheoremReport:
    instance: FiniteInstance
    lyapunov_points: list = field(default_factory=list)
    checks: int = 0
    counterexamples: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.counterexamples

    def flag(self, theorem: str, x_star: int, **details):
        self.counterexamples.append({"theorem": theorem, "x_star": x_star, **details})

    def to_report(self) -> dict:
        """The sweep in the command-line report layout; counterexamples are the witnesses."""
        from .cli import to_json
        return {
            "command": "oracle",
            "verdict": "PROVED" if self.ok else "FAIL",
            "detail": f"{self.checks} checks over {self.instance.n} states",
            "witnesses": to_json(self.counterexamples),
            "instance": {"metric": to_json(self.instance.metric),
                         "maps": to_json(self.instance.maps)},
            "lyapunov_points": self.lyapunov_points,
        }


def delta_through(points):
    """Strictly increasing piecewise-linear delta through ``(eps, r)`` points,
    staying at or below each ``r`` and inside the same ball."""
    from .comparison import PiecewiseLinear
    xs = [p[0] for p in points]
    ys = []
    for i, (_, r) in enumerate(points):
        ys.append(r * Fraction(i + 1, len(points)))
    return PiecewiseLinear.through(list(zip(xs, ys)), left_slope=ys[0] / xs[0],
                                   right_slope=Fraction(1))


def brute_check_theorems(inst: FiniteInstance) -> TheoremReport:
    """Sweep every state as a candidate equilibrium and cross-check the engine."""
    from . import certificates as cert_mod
    from .monovariant import check_attractor
    from .system import future, is_equilibrium

    report = TheoremReport(inst)
    sys = inst.to_system()
    for x_star in range(inst.n):
        grid = radius_candidates(inst, x_star)
        # reachability agreement
        for s in ({x_star}, brute_ball(inst, x_star, grid[-1] / 2)):
            report.checks += 1
            if future(sys, s) != brute_reach(inst, s):
                report.flag("reach", x_star, set=sorted(s))
        # attractor => equilibrium
        attractor = all(inst.metric[x_star][m[x]] <= inst.metric[x_star][x]
                        for m in inst.maps for x in range(inst.n))
        report.checks += 1
        if bool(check_attractor(sys, x_star)) != attractor:
            report.flag("attractor-verdict", x_star, expected=attractor)
        if attractor and brute_reach(inst, {x_star}) != {x_star}:
            report.flag("attractor-equilibrium", x_star)
        deltas = [(e, brute_delta_exists(inst, x_star, e)) for e in grid]
        if any(r is None for _, r in deltas):
            continue
        report.lyapunov_points.append(x_star)
        # a Lyapunov equilibrium is an equilibrium: ball(grid[0]) is {x*}
        report.checks += 1
        if any(m[x_star] != x_star for m in inst.maps):
            report.flag("equilibrium", x_star)
        if not is_equilibrium(sys, [x_star]):
            report.flag("equilibrium-engine", x_star)
        delta = delta_through(deltas)
        dcert = cert_mod.DeltaCertificate(x_star, delta, tuple(grid))
        report.checks += 1
        if not cert_mod.verify_delta(sys, dcert).exact:
            report.flag("verify-delta", x_star, grid=grid)
            continue
        try:
            lyap = cert_mod.converse_construct(sys, dcert)
        except cert_mod.CertificateError as err:
            report.flag("converse", x_star, error=str(err))
            continue
        for e in grid:
            expected = brute_reach(inst, brute_ball(inst, x_star, delta(e)))
            report.checks += 1
            if lyap.levels.at(e) != expected:
                report.flag("converse-levels", x_star, epsilon=e)
        report.checks += 1
        if not cert_mod.verify_lyapunov(sys, lyap).exact:
            report.flag("converse-verify", x_star)
        back = cert_mod.delta_from_lyapunov(lyap)
        report.checks += 1
        if not cert_mod.verify_delta(sys, back).exact:
            report.flag("forward", x_star)
    return report
