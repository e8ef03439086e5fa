from fractions import Fraction as F
import random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lyapcat.comparison import IDENTITY, PiecewiseLinear, Power
from lyapcat.monovariant import (BallFamily, Coordinate, Direction, DistanceTo,
                                 LevelSetFamily, QuadraticForm, TableLookup, ball,
                                 check_attractor, check_levelset_laxcone, check_monovariant,
                                 check_rough_approx, check_vmax_monovariant, sublevel, v_max)
from lyapcat.oracle import random_instance
from lyapcat.system import (EuclideanSpace, FiniteMetric, UnsupportedExactReach, finite_system,
                            linear_system, map_system)
from lyapcat.verdict import Status

from corpus import STYLES, observable_for, threshold_family

R1 = EuclideanSpace(1)
HALVING = linear_system([[F(1, 2)]])
DOUBLING = linear_system([[2]])
IDENT = linear_system([[1]])
SHIFT = map_system(1, lambda x: (x[0] - 1,), name="x-1")
LINE = [(F(k, 4),) for k in range(-12, 13)]
SQUARE = QuadraticForm([[1]])


class TestCheckMonovariant:
    def test_distance_to_origin_halves(self):
        v = check_monovariant(HALVING, DistanceTo(R1, (0,)), Direction.DECREASING,
                              horizon=10, samples=LINE)
        assert v.status is Status.SAMPLED

    def test_identity_system(self):
        for obs in (SQUARE, Coordinate(0), DistanceTo(R1, (3,))):
            for d in Direction:
                assert check_monovariant(IDENT, obs, d, horizon=3, samples=LINE)

    def test_shift_decreases_coordinate(self):
        samples = [(0,), (5,), (-2,)]
        assert check_monovariant(SHIFT, Coordinate(0), Direction.DECREASING,
                                 horizon=5, samples=samples)
        v = check_monovariant(SHIFT, Coordinate(0), Direction.INCREASING,
                              horizon=5, samples=samples)
        assert not v
        assert (v.witness["state"], v.witness["time"]) == ((0,), 1)

    def test_finite_is_proved(self):
        sys = finite_system(FiniteMetric.on_line([0, 1, 2]).table, [[0, 0, 1]])
        v = check_monovariant(sys, TableLookup((0, 1, 2)), Direction.DECREASING)
        assert v.exact
        v = check_monovariant(sys, TableLookup((0, 1, 2)), Direction.INCREASING)
        assert v.witness == {"state": 1, "time": 1, "before": 1, "after": 0}

    def test_euclidean_needs_horizon(self):
        with pytest.raises(UnsupportedExactReach):
            check_monovariant(HALVING, SQUARE, samples=LINE)


class TestSublevel:
    def test_unit_disk(self):
        fam = sublevel(QuadraticForm([[1, 0], [0, 1]]), EuclideanSpace(2), [1])
        assert fam.contains(1, (F(3, 5), F(4, 5)))
        assert fam.contains(1, (0, -1))
        assert not fam.contains(1, (F(3, 4), F(3, 4)))

    def test_below_minimum_is_empty(self):
        space = FiniteMetric.uniform(3)
        fam = sublevel(TableLookup((1, 2, 3)), space, [F(1, 2)])
        assert fam.at(F(1, 2)) == frozenset()

    def test_finite_filter(self):
        space = FiniteMetric.uniform(3)
        assert sublevel(TableLookup((0, 1, 2)), space, [1]).at(1) == {0, 1}

    def test_grid_validation(self):
        with pytest.raises(ValueError):
            sublevel(SQUARE, R1, [])
        with pytest.raises(ValueError):
            sublevel(SQUARE, R1, [2, 1])
        with pytest.raises(ValueError):
            sublevel(SQUARE, R1, [0, 1])

    def test_extensional_family_needs_every_radius(self):
        with pytest.raises(ValueError):
            LevelSetFamily(FiniteMetric.uniform(2), (1, 2), {1: {0}})

    def test_balls(self):
        space = FiniteMetric.on_line([0, 1, 3])
        assert ball(space, 0, 1) == {0, 1}
        assert BallFamily(space, 2).at(F(5, 2)) == {1, 2}
        assert BallFamily(R1, (0,)).contains(F(1, 2), (F(-1, 2),))


class TestLaxCone:
    def test_halving_keeps_sublevels(self):
        fam = sublevel(SQUARE, R1, [F(1, 4), 1, 4])
        assert check_levelset_laxcone(HALVING, fam, horizon=6, samples=LINE)

    def test_whole_space(self):
        fam = LevelSetFamily(R1, (1, 2), predicate=lambda r, x, tol=0: True)
        assert check_levelset_laxcone(DOUBLING, fam, horizon=4, samples=LINE)

    def test_doubling_escapes(self):
        fam = sublevel(SQUARE, R1, [1])
        v = check_levelset_laxcone(DOUBLING, fam, horizon=3, samples=[(0,), (1,)])
        assert not v
        assert v.witness == {"radius": 1, "state": (1,), "time": 1, "reached": (2,)}


class TestVMax:
    def test_examples(self):
        assert v_max(SQUARE, [(-1,), (F(1, 2),)]) == 1
        assert v_max(SQUARE, [(3,)]) == 9
        assert v_max(TableLookup((0, 1, 2)), range(3)) == 2

    def test_empty(self):
        with pytest.raises(ValueError):
            v_max(SQUARE, [])

    def test_witness_is_a_subset(self):
        sys = finite_system(FiniteMetric.uniform(3).table, [[1, 2, 0]])
        v = check_vmax_monovariant(sys, TableLookup((0, 1, 2)))
        assert not v
        assert v.witness["after"] > v.witness["before"]


class TestAttractor:
    def test_halving(self):
        v = check_attractor(HALVING, (0,), horizon=8, samples=LINE)
        assert v and v.notes["equilibrium"].exact

    def test_identity(self):
        assert check_attractor(IDENT, (F(7, 3),), horizon=2, samples=LINE)

    def test_shift_moves_away(self):
        v = check_attractor(SHIFT, (0,), horizon=1, samples=[(-3,)])
        assert v.witness == {"state": (-3,), "time": 1, "before": 3, "after": 4}

    def test_finite_collapse(self):
        sys = finite_system(FiniteMetric.on_line([0, 1]).table, [[0, 0]])
        assert check_attractor(sys, 0).exact
        v = check_attractor(sys, 1)
        assert v.witness == {"state": 1, "time": 1, "before": 0, "after": 1}


class TestRoughApprox:
    def test_same_observable(self):
        d = DistanceTo(R1, (0,))
        assert check_rough_approx(d, d, IDENTITY, IDENTITY, R1, samples=LINE)

    def test_distance_and_square_on_unit_interval(self):
        unit = [(F(k, 8),) for k in range(-8, 9)]
        v = check_rough_approx(DistanceTo(R1, (0,)), SQUARE, Power(1, 2),
                               PiecewiseLinear.linear(1), R1, samples=unit)
        assert v.status is Status.SAMPLED
        assert not check_rough_approx(DistanceTo(R1, (0,)), SQUARE, Power(1, 2),
                                      PiecewiseLinear.linear(1), R1, samples=[(2,)])

    def test_rayleigh_bounds(self):
        rng = np.random.default_rng(7)
        M = rng.normal(size=(3, 3))
        P = M @ M.T + np.eye(3)
        lo, hi = np.linalg.eigvalsh(P)[[0, -1]]
        samples = [tuple(v) for v in rng.normal(size=(200, 3))]
        J = QuadraticForm(P.tolist())
        v = check_rough_approx(DistanceTo(EuclideanSpace(3), (0, 0, 0)), J,
                               Power(lo, 2), Power(hi, 2), EuclideanSpace(3),
                               samples=samples, tol=1e-9)
        assert v


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2 ** 32))
def test_three_formulations_agree(seed):
    rng = random.Random(seed)
    inst = random_instance(rng, max_states=8, style=rng.choice(STYLES))
    sys = inst.to_system()
    obs = observable_for(inst, rng)
    a = check_monovariant(sys, obs, Direction.DECREASING)
    b = check_levelset_laxcone(sys, threshold_family(obs, sys.space))
    c = check_vmax_monovariant(sys, obs)
    assert bool(a) == bool(b) == bool(c)
