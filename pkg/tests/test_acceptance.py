"""Acceptance suite: ten criteria, one PASS/FAIL line each.

Run under pytest (lines appear in the terminal summary) or directly with
``python tests/test_acceptance.py``.
"""

import math
import random
import sys
import time
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent))

from corpus import STYLES, instances, observable_for, threshold_family  # noqa: E402
from lyapcat.certificates import (DeltaCertificate, LyapunovCertificate,  # noqa: E402
                                  compose_factorization, converse_construct,
                                  delta_from_lyapunov, factorize, outer_triangle,
                                  outer_triangle_inverse, verify_delta, verify_lyapunov)
from lyapcat.comparison import PiecewiseLinear, invert  # noqa: E402
from lyapcat.monovariant import (Direction, DistanceTo, QuadraticForm, TableLookup,  # noqa: E402
                                 check_attractor, check_levelset_laxcone, check_monovariant,
                                 check_vmax_monovariant, sublevel)
from lyapcat.oracle import (brute_ball, brute_check_theorems, brute_delta_exists,  # noqa: E402
                            brute_reach, decreasing_instance, delta_through, radius_candidates,
                            random_instance, random_metric,
                            random_observable)
from lyapcat.quadratic import (lyapunov_residual, quadratic_to_lyapunov,  # noqa: E402
                               solve_discrete_lyapunov)
from lyapcat.system import future, is_equilibrium, linear_system  # noqa: E402
from lyapcat.timeline import DISCRETE, free  # noqa: E402
from lyapcat.verdict import Status  # noqa: E402

RESULTS = {}


def record(number, title, ok, detail, elapsed, limit=None):
    within = limit is None or elapsed < limit
    RESULTS[number] = (ok and within, f"{title}: {detail}; {elapsed:.2f}s"
                       + (f" (limit {limit}s)" if limit else ""))
    line = f"[criterion {number:2d}] {'PASS' if ok and within else 'FAIL'}  {RESULTS[number][1]}"
    print(line)
    return ok and within


def summary_lines():
    return [f"[criterion {n:2d}] {'PASS' if ok else 'FAIL'}  {text}"
            for n, (ok, text) in sorted(RESULTS.items())]


# -- shared corpora ----------------------------------------------------------------

def mixed_corpus(count=1000, seed=2024):
    """Instances with observables: a third decreasing by construction, a third
    decreasing up to 5% noise, a third unconstrained."""
    rng = random.Random(seed)
    for i in range(count):
        kind = i % 3
        if kind == 2:
            inst = random_instance(rng, style=STYLES[i % len(STYLES)])
            yield inst, observable_for(inst, rng)
            continue
        n = rng.randint(1, 16)
        values = random_observable(rng, n)
        inst = decreasing_instance(rng, values, random_metric(rng, n), rng.randint(1, 3),
                                   noise=0.0 if kind == 0 else 0.05)
        yield inst, TableLookup(values)


def lyapunov_corpus(target=500, seed=77):
    """Verified finite Lyapunov certificates around state 0.

    V(0) = 0 and the maps never increase V. The outer bound runs through the
    largest distance inside each level set, the inner bound stays below the
    largest ball each level set contains.
    """
    rng = random.Random(seed)
    out, tried = [], 0
    while len(out) < target:
        tried += 1
        n = rng.randint(2, 16)
        metric = random_metric(rng, n)
        values = (Fraction(0),) + tuple(Fraction(rng.randint(1, 6)) for _ in range(n - 1))
        noise = 0.03 if tried % 5 == 0 else 0.0
        inst = decreasing_instance(rng, values, metric, rng.randint(1, 3), noise)
        sys_ = inst.to_system()
        grid = sorted(set(values) - {0})
        levels = sublevel(TableLookup(values), sys_.space, grid)
        outer_pts, inner_pts, prev = [], [], Fraction(0)
        radii = radius_candidates(inst, 0)
        for i, e in enumerate(grid):
            reach = max(metric[0][x] for x in levels.at(e))
            prev = max(reach, prev + 1)
            outer_pts.append((e, prev))
            inside = max(r for r in radii if brute_ball(inst, 0, r) <= levels.at(e))
            inner_pts.append((e, inside * Fraction(i + 1, len(grid) + 1)))
        outer = PiecewiseLinear.through(outer_pts, outer_pts[0][1] / outer_pts[0][0], 1)
        inner = PiecewiseLinear.through(inner_pts, inner_pts[0][1] / inner_pts[0][0], 1)
        cert = LyapunovCertificate(0, levels, inner, outer)
        if verify_lyapunov(sys_, cert).exact:
            out.append((inst, cert))
    return out, tried


def delta_corpus(target=500, seed=99):
    """Verified finite delta certificates built from the brute-force delta."""
    rng = random.Random(seed)
    out, tried = [], 0
    while len(out) < target:
        inst = random_instance(rng, style=STYLES[tried % len(STYLES)])
        tried += 1
        for x_star in range(inst.n):
            grid = radius_candidates(inst, x_star)
            points = [(e, brute_delta_exists(inst, x_star, e)) for e in grid]
            if any(r is None for _, r in points):
                continue
            cert = DeltaCertificate(x_star, delta_through(points), tuple(grid))
            if verify_delta(inst.to_system(), cert).exact:
                out.append((inst, cert))
                break
    return out, tried


_CACHE = {}


def cached(name, build):
    if name not in _CACHE:
        _CACHE[name] = build()
    return _CACHE[name]


# -- criteria ---------------------------------------------------------------------------

def criterion_1():
    start = time.perf_counter()
    failures, checked = [], 0
    kind = DISCRETE
    nat = range(65)
    for a in nat:
        if not kind.plus(a, 0) == a == kind.plus(0, a):
            failures.append(("identity", a))
        for b in nat:
            checked += 1
            ab = kind.plus(a, b)
            if not kind.leq(a, ab):
                failures.append(("extension", a, b))
            if kind.leq(a, b):
                d = kind.difference(a, b)
                witnesses = [t for t in nat if kind.plus(a, t) == b]
                if kind.plus(a, d) != b or witnesses != [d]:
                    failures.append(("difference", a, b))
            for c in nat:
                if kind.plus(a, kind.plus(b, c)) != kind.plus(kind.plus(a, b), c):
                    failures.append(("associativity", a, b, c))
    for k in (1, 2, 3):
        kind = free(k)
        words = list(kind.words(6))
        by_length = {}
        for w in words:
            by_length.setdefault(len(w), []).append(w)
        for a in words:
            if not (kind.plus(a, ()) == a == kind.plus((), a)):
                failures.append(("identity", k, a))
            for b in words:
                checked += 1
                if len(a) + len(b) <= 6 and not kind.leq(a, kind.plus(a, b)):
                    failures.append(("extension", k, a, b))
                if kind.leq(a, b):
                    d = kind.difference(a, b)
                    witnesses = [t for t in by_length[len(b) - len(a)] if kind.plus(a, t) == b]
                    if kind.plus(a, d) != b or witnesses != [d]:
                        failures.append(("difference", k, a, b))
        for a in words:
            for b in by_length_upto(by_length, 6 - len(a)):
                for c in by_length_upto(by_length, 6 - len(a) - len(b)):
                    checked += 1
                    if kind.plus(a, kind.plus(b, c)) != kind.plus(kind.plus(a, b), c):
                        failures.append(("associativity", k, a, b, c))
    elapsed = time.perf_counter() - start
    return record(1, "timeline laws", not failures,
                  f"{checked} cases, {len(failures)} failures", elapsed, 10)


def by_length_upto(by_length, n):
    for length in range(n + 1):
        yield from by_length.get(length, ())


def criterion_2():
    start = time.perf_counter()
    disagreements, outcomes, count = [], {True: 0, False: 0}, 0
    for inst, obs in mixed_corpus():
        count += 1
        sys_ = inst.to_system()
        a = bool(check_monovariant(sys_, obs, Direction.DECREASING))
        b = bool(check_levelset_laxcone(sys_, threshold_family(obs, sys_.space)))
        c = bool(check_vmax_monovariant(sys_, obs, Direction.DECREASING))
        outcomes[a] += 1
        if not a == b == c:
            disagreements.append((inst, a, b, c))
    elapsed = time.perf_counter() - start
    ok = not disagreements and count >= 1000 and min(outcomes.values()) > 0
    return record(2, "three monovariance formulations agree", ok,
                  f"{count} instances ({outcomes[True]} monovariant, {outcomes[False]} not), "
                  f"{len(disagreements)} disagreements", elapsed, 60)


def criterion_3():
    start = time.perf_counter()
    counterexamples, attractors, count = [], 0, 0
    for inst, _ in mixed_corpus():
        count += 1
        sys_ = inst.to_system()
        for x_star in range(inst.n):
            dist = DistanceTo(sys_.space, x_star)
            if not check_monovariant(sys_, dist, Direction.DECREASING):
                continue
            attractors += 1
            if not (is_equilibrium(sys_, {x_star}) and check_attractor(sys_, x_star)
                    and brute_reach(inst, {x_star}) == {x_star}):
                counterexamples.append((inst, x_star))
    elapsed = time.perf_counter() - start
    return record(3, "attractor implies equilibrium", not counterexamples and attractors > 0,
                  f"{count} instances, {attractors} attractors, "
                  f"{len(counterexamples)} counterexamples", elapsed)


def criterion_4():
    start = time.perf_counter()
    corpus, tried = cached("lyapunov", lyapunov_corpus)
    failures = []
    for inst, cert in corpus:
        d = delta_from_lyapunov(cert)
        v = verify_delta(inst.to_system(), d)
        if v.status is not Status.PROVED:
            failures.append((inst, v))
    elapsed = time.perf_counter() - start
    return record(4, "forward direction", not failures and len(corpus) >= 500,
                  f"{len(corpus)} verified Lyapunov certificates (of {tried} drawn), "
                  f"{len(failures)} failures", elapsed)


def criterion_5():
    start = time.perf_counter()
    corpus, tried = cached("delta", delta_corpus)
    failures = []
    for inst, cert in corpus:
        sys_ = inst.to_system()
        try:
            lyap = converse_construct(sys_, cert)
        except Exception as err:  # any error is a failure of the criterion
            failures.append((inst, repr(err)))
            continue
        v = verify_lyapunov(sys_, lyap)
        expected = all(lyap.levels.at(e) == brute_reach(inst, brute_ball(inst, cert.x_star,
                                                                          cert.delta(e)))
                       for e in cert.grid)
        if v.status is not Status.PROVED or not expected:
            failures.append((inst, v))
    elapsed = time.perf_counter() - start
    return record(5, "converse direction", not failures and len(corpus) >= 500,
                  f"{len(corpus)} verified delta certificates (of {tried} drawn), "
                  f"{len(failures)} failures", elapsed, 300)


def criterion_6():
    start = time.perf_counter()
    corpus, _ = cached("delta", delta_corpus)
    rng = random.Random(6)
    certs = [cert for _, cert in corpus]
    for _ in range(500):
        k = rng.randint(1, 5)
        xs = sorted({Fraction(rng.randint(1, 400), rng.randint(1, 20)) for _ in range(k)})
        ys, y = [], Fraction(0)
        for _ in xs:
            y += Fraction(rng.randint(1, 50), rng.randint(1, 10))
            ys.append(y)
        left = ys[0] / xs[0]
        delta = PiecewiseLinear.through(list(zip(xs, ys)), left, Fraction(rng.randint(0, 4)))
        grid = tuple(sorted({Fraction(rng.randint(1, 900), rng.randint(1, 30)) for _ in range(6)}))
        certs.append(DeltaCertificate(0, delta, grid))
    mismatches, points = 0, 0
    for cert in certs:
        back = compose_factorization(factorize(cert))
        for e in cert.grid:
            points += 1
            got, want = back.delta(e), cert.delta(e)
            if not (isinstance(got, Fraction) and got == want):
                mismatches += 1
    elapsed = time.perf_counter() - start
    return record(6, "factorization round trip", mismatches == 0,
                  f"{len(certs)} certificates, {points} grid points, {mismatches} mismatches",
                  elapsed)


def criterion_7():
    start = time.perf_counter()
    corpus, _ = cached("lyapunov", lyapunov_corpus)
    rng = random.Random(7)
    disagreements, outcomes, count = 0, {True: 0, False: 0}, 0
    for inst, cert in corpus[:250]:
        space = inst.to_system().space
        pts, y = [], Fraction(0)
        for e in cert.grid:
            y += Fraction(rng.randint(1, 12), rng.randint(1, 4))
            pts.append((e, y))
        B = PiecewiseLinear.through(pts, pts[0][1] / pts[0][0], Fraction(rng.randint(1, 3)))
        count += 1
        direct = outer_triangle(cert.levels, 0, B, cert.grid, space)
        inverse = outer_triangle_inverse(cert.levels, 0, invert(B),
                                         [B(e) for e in cert.grid], space)
        disagreements += sum(a != b for a, b in zip(direct, inverse))
        for a in direct:
            outcomes[a] += 1
    elapsed = time.perf_counter() - start
    ok = disagreements == 0 and count >= 200 and min(outcomes.values()) > 0
    return record(7, "inverse triangle orientations agree", ok,
                  f"{count} invertible B, {outcomes[True] + outcomes[False]} grid points "
                  f"({outcomes[False]} failing inclusions), {disagreements} disagreements",
                  elapsed)


def criterion_8():
    start = time.perf_counter()
    rng = np.random.default_rng(8)
    worst_residual, violations, trajectories, delta_failures, count = 0.0, 0, 0, 0, 0
    while count < 100:
        n = int(rng.integers(1, 7))
        A = rng.normal(size=(n, n))
        radius = max(abs(np.linalg.eigvals(A)))
        A *= rng.uniform(0.05, 0.95) / radius
        count += 1
        M = rng.normal(size=(n, n))
        Q = M @ M.T / n + np.eye(n)
        P = solve_discrete_lyapunov(A, Q)
        worst_residual = max(worst_residual, lyapunov_residual(A, P, Q))
        sys_ = linear_system(A.tolist(), allow_float=True)
        starts = [tuple(x) for x in rng.uniform(-1, 1, size=(1000, n))]
        trajectories += len(starts)
        mono = check_monovariant(sys_, QuadraticForm(P.tolist()), Direction.DECREASING,
                                 horizon=8, samples=starts, tol=1e-9)
        violations += not mono
        cert = quadratic_to_lyapunov(sys_, P, (0.25, 1.0, 4.0), horizon=6)
        d = delta_from_lyapunov(cert)
        delta_failures += not verify_delta(sys_, d, horizon=6, tol=1e-9)
    elapsed = time.perf_counter() - start
    ok = worst_residual <= 1e-8 and violations == 0 and delta_failures == 0
    return record(8, "quadratic certificates", ok,
                  f"{count} stable matrices, max residual {worst_residual:.1e}, "
                  f"{trajectories} trajectories with {violations} violations, "
                  f"{delta_failures} delta failures", elapsed)


def truncated_series(A, Q, terms=400):
    """Independent oracle: the first ``terms`` terms of sum (A^T)^k Q A^k."""
    P, term = np.zeros_like(Q), Q.copy()
    for _ in range(terms):
        P = P + term
        term = A.T @ term @ A
    return P


def criterion_9():
    start = time.perf_counter()
    A, Q = np.eye(2) / 2, np.eye(2)
    frozen = np.eye(2) * 4 / 3
    errors = [np.abs(solve_discrete_lyapunov(A, Q, m) - frozen).max() for m in ("series", "direct")]
    errors.append(np.abs(truncated_series(A, Q) - frozen).max())
    # diag(1, 4) is the series solution for A = I/2, Q = (3/4) diag(1, 4)
    target = np.diag([1.0, 4.0])
    oracle_P = truncated_series(A, 0.75 * target)
    errors.append(np.abs(oracle_P - target).max())
    lo, hi = np.linalg.eigvalsh(oracle_P)[[0, -1]]
    half = linear_system([[Fraction(1, 2), 0], [0, Fraction(1, 2)]])
    cert = quadratic_to_lyapunov(half, target, (0.25, 1.0, 4.0), horizon=4)
    d = delta_from_lyapunov(cert)
    eps = (0.01, 0.5, 1.0, 3.0, 100.0)
    delta_err = max(max(abs(d.delta(e) - e / 2), abs(math.sqrt(lo / hi) * e - e / 2))
                    for e in eps)
    elapsed = time.perf_counter() - start
    ok = max(errors) <= 1e-10 and delta_err <= 1e-10
    return record(9, "closed forms", ok,
                  f"P error {max(errors):.1e}, delta error {delta_err:.1e}", elapsed)


def criterion_10():
    start = time.perf_counter()
    rng = random.Random(10)
    reach_checks, reach_bad, counterexamples, lyapunov_points, count = 0, 0, [], 0, 0
    for inst in instances(1000, seed=10):
        count += 1
        sys_ = inst.to_system()
        for _ in range(3):
            s = {rng.randrange(inst.n) for _ in range(rng.randint(1, 3))}
            reach_checks += 1
            reach_bad += future(sys_, s) != brute_reach(inst, s)
        report = brute_check_theorems(inst)
        lyapunov_points += len(report.lyapunov_points)
        counterexamples.extend(report.counterexamples)
    elapsed = time.perf_counter() - start
    ok = reach_bad == 0 and not counterexamples and count >= 1000
    return record(10, "oracle independence", ok,
                  f"{count} instances, {reach_checks} reach comparisons ({reach_bad} wrong), "
                  f"{lyapunov_points} Lyapunov points swept, "
                  f"{len(counterexamples)} counterexamples", elapsed)


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5,
            criterion_6, criterion_7, criterion_8, criterion_9, criterion_10]


@pytest.mark.parametrize("criterion", CRITERIA, ids=[f"criterion_{i}" for i in range(1, 11)])
def test_acceptance(criterion):
    assert criterion()


if __name__ == "__main__":
    results = [c() for c in CRITERIA]
    print(f"{sum(results)}/{len(results)} criteria pass")
    sys.exit(0 if all(results) else 1)
