import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import grid_left_inverse, grid_right_inverse_kl
from sensorlimits.divergence import GENERATOR_NAMES, bernoulli_fdiv, builtin_generators, get_generator
from sensorlimits.finverse import DEFAULT_TOL, f_inverse, f_inverse_many, f_inverse_right, f_inverse_right_many

GENERATORS = builtin_generators()

# 1e-6 grid-search oracles, frozen
KL_LEFT_Q0325_C1 = 0.977528
KL_RIGHT_M06_C005 = 0.744727
KL_RIGHT_M05_N100 = 0.633343


def random_triples(n, seed):
    rng = np.random.default_rng(seed)
    names = rng.choice(GENERATOR_NAMES, size=n)
    qs = rng.uniform(0.01, 0.99, size=n)
    cs = rng.exponential(0.3, size=n)
    return list(zip(names, qs, cs))


class TestLeftInverse:
    @pytest.mark.parametrize("f", GENERATORS, ids=lambda g: g.name)
    def test_zero_budget(self, f):
        assert f_inverse(f, 0.685, 0.0).value == pytest.approx(0.685, abs=1e-9)

    def test_tv_closed_form(self):
        assert f_inverse(get_generator("tv"), 0.3, 0.2).value == pytest.approx(0.5, abs=1e-9)
        assert f_inverse(get_generator("tv"), 0.9, 0.2).value == 1.0

    def test_kl_grid_oracle(self):
        assert f_inverse(get_generator("kl"), 0.325, 1.0).value == pytest.approx(KL_LEFT_Q0325_C1, abs=2e-6)

    @pytest.mark.parametrize("f", GENERATORS, ids=lambda g: g.name)
    def test_infinite_budget(self, f):
        assert f_inverse(f, 0.5, math.inf).value == 1.0

    @pytest.mark.parametrize("f", GENERATORS, ids=lambda g: g.name)
    def test_q_endpoints(self, f):
        assert f_inverse(f, 1.0, 0.3).value == 1.0
        assert 0.0 <= f_inverse(f, 0.0, 0.3).value <= 1.0

    def test_negative_log_unbounded_at_one(self):
        # D(1 || q) is infinite, so p = 1 is never feasible at finite budget
        sol = f_inverse(get_generator("neg-log"), 0.5, 50.0)
        assert sol.value < 1.0
        assert bernoulli_fdiv(get_generator("neg-log"), sol.value, 0.5) <= 50.0

    def test_random_triples_vs_grid(self):
        worst = 0.0
        for name, q, c in random_triples(40, 5):
            val = f_inverse(get_generator(name), q, c).value
            worst = max(worst, abs(val - grid_left_inverse(name, q, c)))
        assert worst <= 2e-6

    @pytest.mark.parametrize("f", GENERATORS, ids=lambda g: g.name)
    def test_solution_is_feasible(self, f):
        for q in np.linspace(0.02, 0.98, 13):
            for c in (0.0, 0.01, 0.2, 1.5):
                sol = f_inverse(f, q, c)
                assert 0.0 <= sol.value <= 1.0
                assert bernoulli_fdiv(f, sol.value, q) <= c + sol.tolerance
                assert sol.residual >= -sol.tolerance

    def test_vectorized_matches_scalar(self):
        f = get_generator("hellinger2")
        q = np.array([0.1, 0.4, 0.8])
        c = np.array([0.05, 0.3, 0.0])
        vals, _ = f_inverse_many(f, q, c)
        for v, qi, ci in zip(vals, q, c):
            assert v == f_inverse(f, qi, ci).value

    def test_upper_end_never_below(self):
        f = get_generator("kl")
        q = np.linspace(0.05, 0.95, 19)
        lo, _ = f_inverse_many(f, q, 0.4)
        hi, _ = f_inverse_many(f, q, 0.4, upper=True)
        assert np.all(hi >= lo)
        assert np.all(hi - lo <= DEFAULT_TOL)

    @pytest.mark.parametrize("q,c", [(-0.1, 0.1), (1.1, 0.1), (0.5, -1.0)])
    def test_precondition_errors(self, q, c):
        with pytest.raises(ValueError):
            f_inverse(get_generator("kl"), q, c)


class TestMonotonicity:
    Q_GRID = np.linspace(0.0, 1.0, 21)
    C_GRID = np.array([0.0, 0.001, 0.01, 0.05, 0.1, 0.3, 0.7, 1.5, 4.0, np.inf])

    @pytest.mark.parametrize("f", GENERATORS, ids=lambda g: g.name)
    def test_nondecreasing_in_c_and_q(self, f):
        q, c = np.meshgrid(self.Q_GRID, self.C_GRID, indexing="ij")
        vals, _ = f_inverse_many(f, q, c)
        assert np.all(np.diff(vals, axis=1) >= -DEFAULT_TOL)
        assert np.all(np.diff(vals, axis=0) >= -DEFAULT_TOL)

    @pytest.mark.parametrize("f", GENERATORS, ids=lambda g: g.name)
    def test_at_least_q(self, f):
        q, c = np.meshgrid(self.Q_GRID, self.C_GRID, indexing="ij")
        vals, _ = f_inverse_many(f, q, c)
        assert np.all(vals >= q)

    @settings(max_examples=200, deadline=None)
    @given(st.sampled_from(GENERATOR_NAMES), st.floats(0.0, 1.0), st.floats(0.0, 5.0), st.floats(0.0, 5.0))
    def test_property_monotone_in_budget(self, name, q, c1, c2):
        f = get_generator(name)
        lo, hi = sorted((c1, c2))
        a = f_inverse(f, q, lo).value
        b = f_inverse(f, q, hi).value
        assert b >= a - DEFAULT_TOL
        assert a >= q


class TestRightInverse:
    def test_zero_budget(self):
        assert f_inverse_right(get_generator("kl"), 0.5, 0.0).value == pytest.approx(0.5, abs=1e-9)

    def test_zero_mean_analytic(self):
        c = math.log(2 / 0.05) / 100
        expected = 1 - math.exp(-c)
        assert f_inverse_right(get_generator("kl"), 0.0, c).value == pytest.approx(expected, abs=1e-9)
        assert expected == pytest.approx(0.036217, abs=1e-6)

    def test_grid_oracle(self):
        assert f_inverse_right(get_generator("kl"), 0.6, 0.05).value == pytest.approx(KL_RIGHT_M06_C005, abs=2e-6)

    def test_frozen_oracle_matches_live_grid(self):
        assert grid_right_inverse_kl(0.6, 0.05) == pytest.approx(KL_RIGHT_M06_C005, abs=1e-9)

    def test_feasible(self):
        kl = get_generator("kl")
        for m in np.linspace(0, 0.99, 12):
            for c in (0.0, 0.01, 0.2):
                sol = f_inverse_right(kl, m, c)
                assert m - 1e-12 <= sol.value <= 1.0
                assert bernoulli_fdiv(kl, m, min(sol.value, 1 - 1e-15)) <= c + sol.tolerance

    def test_mean_one(self):
        assert f_inverse_right(get_generator("kl"), 1.0, 0.1).value == 1.0


class TestRightInverseMany:
    @pytest.mark.parametrize("f", GENERATORS, ids=lambda g: g.name)
    def test_matches_scalar(self, f):
        m, c = np.meshgrid(np.linspace(0.0, 1.0, 11), [0.0, 0.01, 0.2, 1.0, np.inf], indexing="ij")
        vals, _ = f_inverse_right_many(f, m, c)
        expected = [[f_inverse_right(f, mi, ci).value for mi, ci in zip(mr, cr)] for mr, cr in zip(m, c)]
        np.testing.assert_array_equal(vals, expected)

    def test_grid_oracle(self):
        vals, _ = f_inverse_right_many(get_generator("kl"), [0.6, 0.5], [0.05, math.log(40) / 100])
        np.testing.assert_allclose(vals, [KL_RIGHT_M06_C005, KL_RIGHT_M05_N100], atol=2e-6)

    def test_errors(self):
        with pytest.raises(ValueError):
            f_inverse_right_many(get_generator("kl"), [0.5, 1.2], 0.1)
        with pytest.raises(ValueError):
            f_inverse_right_many(get_generator("kl"), 0.5, -0.1)
