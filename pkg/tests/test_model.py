import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import linprog

from fesdkit import expr
from fesdkit.errors import (DimensionMismatch, InvalidSignMatrix,
                            SimplexCheckFailed)
from fesdkit.expr import VectorFunction
from fesdkit.model import (PssModel, assemble_dcs, boundary_multipliers,
                           build_model, build_theta, lp_step_oracle,
                           sample_partition_sign_matrix)


def eval_thetas(thetas, alpha):
    f = VectorFunction([("alpha", len(alpha))], thetas)
    return f(alpha)


class TestBuildTheta:
    def test_three_region_example(self):
        thetas = build_theta([[1, 0], [-1, 1], [-1, -1]])
        for a1, a2 in [(0.2, 0.7), (0.0, 1.0), (0.5, 0.5), (1.0, 0.3)]:
            vals = eval_thetas(thetas, [a1, a2])
            np.testing.assert_allclose(
                vals, [a1, (1 - a1) * a2, (1 - a1) * (1 - a2)], atol=1e-15)

    def test_intersection_row(self):
        thetas = build_theta([[1, 1]])
        assert eval_thetas(thetas, [0.3, 0.5])[0] == pytest.approx(0.15)

    def test_dense_two_by_two_partition_of_unity(self):
        S = [[1, 1], [1, -1], [-1, 1], [-1, -1]]
        thetas = build_theta(S)
        rng = np.random.default_rng(3)
        for _ in range(20):
            a = rng.uniform(0, 1, size=2)
            assert abs(eval_thetas(thetas, a).sum() - 1.0) <= 1e-12

    def test_zero_row_rejected(self):
        with pytest.raises(InvalidSignMatrix):
            build_theta([[1, 0], [0, 0]])

    def test_bad_entry_rejected(self):
        with pytest.raises(InvalidSignMatrix):
            build_theta([[2, 0]])


class TestPartitionSampler:
    def test_simplex_property_sampled(self):
        # moderate volume here; the full 1000x100 sweep runs in the
        # acceptance suite
        rng = np.random.default_rng(42)
        for _ in range(200):
            n_c = int(rng.integers(1, 5))
            S = sample_partition_sign_matrix(n_c, rng)
            assert S.shape[1] == n_c
            assert not (~S.any(axis=1)).any()
            assert len({tuple(r) for r in S}) == len(S)
            thetas = build_theta(S)
            f = VectorFunction([("alpha", n_c)], thetas)
            A = rng.uniform(0, 1, size=(n_c, 50))
            vals = f.eval_many(A)
            assert np.max(np.abs(vals.sum(axis=0) - 1.0)) <= 1e-12
            assert vals.min() >= -1e-12
            assert vals.max() <= 1.0 + 1e-12

    @given(st.integers(1, 4), st.integers(0, 10_000))
    @settings(max_examples=40, deadline=None)
    def test_regions_cover_every_sign_pattern(self, n_c, seed):
        # every strict sign pattern of c must activate exactly one region
        rng = np.random.default_rng(seed)
        S = sample_partition_sign_matrix(n_c, rng)
        thetas = build_theta(S)
        f = VectorFunction([("alpha", n_c)], thetas)
        for bits in range(2 ** n_c):
            alpha = np.array([(bits >> j) & 1 for j in range(n_c)], dtype=float)
            vals = f(alpha)
            assert np.sum(np.abs(vals - 1.0) < 1e-14) == 1
            assert np.sum(np.abs(vals) < 1e-14) == len(vals) - 1


class TestStepOracle:
    def test_examples(self):
        assert lp_step_oracle([2.0]) == [(1.0, 1.0)]
        assert lp_step_oracle([0.0]) == [(0.0, 1.0)]
        assert lp_step_oracle([-1.0, 3.0]) == [(0.0, 0.0), (1.0, 1.0)]

    def test_matches_linear_program(self):
        # independent check: argmin of -c^T a over the unit box
        rng = np.random.default_rng(5)
        for _ in range(25):
            c = rng.uniform(-2, 2, size=3)
            c[np.abs(c) < 1e-3] += 0.5  # keep components away from zero
            res = linprog(-c, bounds=[(0, 1)] * 3, method="highs")
            sets = lp_step_oracle(c)
            for a, (lo, hi) in zip(res.x, sets):
                assert lo - 1e-9 <= a <= hi + 1e-9


class TestBoundaryMultipliers:
    def test_example(self):
        lp, ln = boundary_multipliers([0.5, -2.0])
        np.testing.assert_allclose(lp, [0.5, 0.0])
        np.testing.assert_allclose(ln, [0.0, 2.0])

    def test_boundary_case(self):
        lp, ln = boundary_multipliers([0.0, 0.0])
        assert not lp.any() and not ln.any()

    def test_identities(self):
        rng = np.random.default_rng(9)
        for _ in range(50):
            c = rng.normal(size=4)
            lp, ln = boundary_multipliers(c)
            np.testing.assert_allclose(lp - ln, c, atol=1e-15)
            assert lp @ ln == 0.0
            assert (lp >= 0).all() and (ln >= 0).all()

    def test_kkt_oracle_equivalence(self):
        # nonzero components: the consistent point is unique and binary
        rng = np.random.default_rng(12)
        for _ in range(200):
            c = rng.uniform(0.1, 3.0, size=3) * rng.choice([-1, 1], size=3)
            lp, ln = boundary_multipliers(c)
            sets = lp_step_oracle(c)
            alpha = np.array([lo for lo, hi in sets])
            assert set(np.unique(alpha)) <= {0.0, 1.0}
            np.testing.assert_allclose(lp - ln, c, atol=1e-15)
            assert lp @ ln == 0.0
            # stationarity/complementarity of the box LP
            assert np.all(ln * alpha == 0.0)
            assert np.all(lp * (1.0 - alpha) == 0.0)


def oscillator_model():
    omega = 2.0 * math.pi
    return build_model(
        n_x=2, n_u=0,
        c_strings=["x[1]^2 + x[2]^2 - 1"],
        S=[[-1], [1]],
        f_strings=[["x[1] - omega*x[2]", "omega*x[1] + x[2]"],
                   ["x[1] + omega*x[2]", "-omega*x[1] + x[2]"]],
        params={"omega": omega},
        name="oscillator")


class TestAssembleDcs:
    def test_oscillator_shapes(self):
        dcs = assemble_dcs(oscillator_model())
        assert dcs.n_theta == 2
        assert dcs.G.n_out == 3  # two weight rows, one multiplier identity
        assert len(dcs.pair_structure) == 2
        assert dcs.n_z == 2 + 3 * 1

    def test_oscillator_residual_at_consistent_point(self):
        dcs = assemble_dcs(oscillator_model())
        x = np.array([0.5, 0.0])  # inside the circle, c < 0
        c_val = x @ x - 1.0
        lam_p, lam_n = boundary_multipliers([c_val])
        alpha = np.array([0.0])
        theta = np.array([1.0, 0.0])
        res = dcs.G(x, theta, alpha, lam_p, lam_n)
        np.testing.assert_allclose(res, 0.0, atol=1e-15)
        xdot = dcs.rhs(x, [], theta)
        omega = 2.0 * math.pi
        np.testing.assert_allclose(xdot, [0.5, omega * 0.5], atol=1e-14)

    def test_step_general_branch_enumeration(self):
        # xdot = 1 - 2*alpha with c(x) = x; at x > 0 enumerate the three
        # step-function branches and keep the consistent one
        m = build_model(n_x=1, n_u=0, c_strings=["x[1]"],
                        rhs_strings=["1 - 2*alpha[1]"], mode="step-general",
                        name="sign_system")
        dcs = assemble_dcs(m)
        assert dcs.n_theta == 0
        assert dcs.G.n_out == 1
        x = np.array([0.7])
        consistent = []
        for alpha, lam_p, lam_n in [
                (0.0, 0.0, -0.7),   # branch c<0 would need lam_n = -c < 0
                (1.0, 0.7, 0.0),    # branch c>0
                (0.5, 0.0, 0.0)]:   # boundary branch needs c = 0
            res = dcs.G(x, [], [alpha], [lam_p], [lam_n])
            comp_ok = (lam_n * alpha == 0 and lam_p * (1 - alpha) == 0
                       and lam_n >= 0 and lam_p >= 0)
            if abs(res[0]) < 1e-14 and comp_ok:
                consistent.append(alpha)
        assert consistent == [1.0]
        assert dcs.rhs(x, [], [1.0])[0] == pytest.approx(-1.0)

    def test_unique_active_region_off_boundary(self):
        rng = np.random.default_rng(21)
        S = [[1, 0], [-1, 1], [-1, -1]]
        thetas = build_theta(S)
        f = VectorFunction([("alpha", 2)], thetas)
        for _ in range(50):
            c = rng.uniform(0.2, 2.0, size=2) * rng.choice([-1, 1], size=2)
            alpha = np.array([lo for lo, _ in lp_step_oracle(c)])
            vals = f(alpha)
            assert np.sum(vals == 1.0) == 1
            assert np.sum(vals == 0.0) == 2

    def test_zero_switching_functions_rejected(self):
        with pytest.raises(DimensionMismatch):
            build_model(n_x=1, n_u=0, c_strings=[],
                        rhs_strings=["1 - 2*alpha[1]"], mode="step-general")

    def test_explicit_theta_valid(self):
        m = build_model(n_x=1, n_u=0, c_strings=["x[1]", "x[1] - 1"],
                        theta_strings=["alpha[1] + (1-alpha[1])*alpha[2]",
                                       "(1-alpha[1])*(1-alpha[2])"],
                        f_strings=[["1"], ["-1"]],
                        mode="explicit-theta", name="union_ish")
        dcs = assemble_dcs(m)
        assert dcs.n_theta == 2

    def test_explicit_theta_simplex_violation(self):
        m = build_model(n_x=1, n_u=0, c_strings=["x[1]"],
                        theta_strings=["alpha[1]", "alpha[1]"],
                        f_strings=[["1"], ["-1"]],
                        mode="explicit-theta")
        with pytest.raises(SimplexCheckFailed) as err:
            assemble_dcs(m)
        assert err.value.alpha is not None

    def test_field_count_mismatch(self):
        with pytest.raises(DimensionMismatch):
            build_model(n_x=1, n_u=0, c_strings=["x[1]"], S=[[1], [-1]],
                        f_strings=[["1"]])
