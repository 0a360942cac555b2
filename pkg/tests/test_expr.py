import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fesdkit import expr
from fesdkit.errors import (DimensionMismatch, DomainError, ExprSyntaxError,
                            UnknownSymbol)
from fesdkit.expr import VectorFunction, parse, to_string, var


OMEGA = 2.0 * math.pi


def fd_jacobian(vf, wrt, point_lists, h=1e-6):
    """Central finite differences, the independent oracle for AD."""
    k = [s for s, _ in vf.inputs].index(wrt)
    n = vf.inputs[k][1]
    base = [np.asarray(p, dtype=float) for p in point_lists]
    J = np.zeros((vf.n_out, n))
    for j in range(n):
        hi = [p.copy() for p in base]
        lo = [p.copy() for p in base]
        hi[k][j] += h
        lo[k][j] -= h
        J[:, j] = (vf(*hi) - vf(*lo)) / (2 * h)
    return J


class TestParse:
    def test_norm_expression(self):
        e = parse("x[1]*x[1] + x[2]*x[2] - 1", {"x": 2})
        f = VectorFunction([("x", 2)], [e])
        assert f([1.0, 0.0])[0] == pytest.approx(0.0, abs=1e-15)
        assert f([0.5, 0.5])[0] == pytest.approx(-0.5)

    def test_zero_literal(self):
        e = parse("0", {"x": 1})
        assert e.op == "const"
        f = VectorFunction([("x", 1)], [e])
        assert f([123.0])[0] == 0.0

    def test_trig_identity(self):
        e = parse("sin(x[1])^2 + cos(x[1])^2", {"x": 1})
        f = VectorFunction([("x", 1)], [e])
        assert abs(f([0.7])[0] - 1.0) <= 1e-15

    def test_precedence_pow_over_unary_minus(self):
        e = parse("-x[1]^2", {"x": 1})
        f = VectorFunction([("x", 1)], [e])
        assert f([3.0])[0] == -9.0

    def test_pow_right_associative(self):
        e = parse("x[1]^2^3", {"x": 1})
        f = VectorFunction([("x", 1)], [e])
        assert f([2.0])[0] == 2.0 ** 8

    def test_left_associativity(self):
        f = VectorFunction([("x", 1)], [parse("8/4/2 + x[1]*0", {"x": 1})])
        assert f([0.0])[0] == 1.0
        g = VectorFunction([("x", 1)], [parse("2-3-4 + x[1]*0", {"x": 1})])
        assert g([0.0])[0] == -5.0

    def test_named_constants(self):
        e = parse("omega*x[1]", {"x": 1, "omega": OMEGA})
        f = VectorFunction([("x", 1)], [e])
        assert f([1.0])[0] == pytest.approx(OMEGA)

    def test_syntax_error_position(self):
        with pytest.raises(ExprSyntaxError) as err:
            parse("x[1] + * 2", {"x": 1})
        assert err.value.position == 7

    def test_unknown_symbol(self):
        with pytest.raises(UnknownSymbol):
            parse("y[1]", {"x": 1})

    def test_unknown_function(self):
        with pytest.raises(ExprSyntaxError):
            parse("tan(x[1])", {"x": 1})

    def test_index_out_of_range(self):
        with pytest.raises(DimensionMismatch):
            parse("x[3]", {"x": 2})

    def test_one_based_indexing(self):
        e = parse("x[1]", {"x": 2})
        assert e.payload == ("x", 0)


class TestEval:
    def test_tuple_arithmetic(self):
        x1, x2 = var("x", 0), var("x", 1)
        f = VectorFunction([("x", 2)], [x1 + x2, x1 * x2])
        np.testing.assert_allclose(f([2.0, 3.0]), [5.0, 6.0])

    def test_linear_field(self):
        # A = [[1, w], [-w, 1]] applied to (1, 0)
        x1, x2 = var("x", 0), var("x", 1)
        f = VectorFunction([("x", 2)], [x1 + OMEGA * x2, -OMEGA * x1 + x2])
        np.testing.assert_allclose(f([1.0, 0.0]), [1.0, -OMEGA], atol=1e-15)

    def test_exp(self):
        f = VectorFunction([("x", 1)], [expr.exp(var("x", 0))])
        assert f([-1.0])[0] == pytest.approx(0.367879441, abs=1e-9)

    def test_domain_error_log(self):
        f = VectorFunction([("x", 1)], [expr.log(var("x", 0))])
        with pytest.raises(DomainError) as err:
            f([-1.0])
        assert err.value.node is not None

    def test_domain_error_division(self):
        f = VectorFunction([("x", 1)], [expr.const(1.0) / var("x", 0)])
        with pytest.raises(DomainError):
            f([0.0])

    def test_length_mismatch(self):
        f = VectorFunction([("x", 2)], [var("x", 0)])
        with pytest.raises(DimensionMismatch):
            f([1.0])

    def test_undeclared_variable_rejected(self):
        with pytest.raises(UnknownSymbol):
            VectorFunction([("x", 1)], [var("y", 0)])

    def test_index_beyond_declared_length(self):
        with pytest.raises(DimensionMismatch):
            VectorFunction([("x", 1)], [var("x", 1)])

    def test_eval_many_matches_scalar(self):
        f = VectorFunction([("x", 2)], [parse("sin(x[1])*x[2] + x[1]^2", {"x": 2})])
        pts = np.array([[0.3, -1.2, 2.0], [1.0, 0.5, -0.25]])
        batched = f.eval_many(pts)
        for k in range(3):
            assert batched[0, k] == pytest.approx(f(pts[:, k])[0], abs=1e-14)


class TestJacobian:
    def test_hand_example(self):
        x1, x2 = var("x", 0), var("x", 1)
        f = VectorFunction([("x", 2)], [x1 * x1, x1 * x2])
        J = f.jacobian("x")([3.0, 4.0]).reshape(2, 2)
        np.testing.assert_allclose(J, [[6.0, 0.0], [4.0, 3.0]])

    def test_norm_gradient(self):
        c = parse("x[1]^2 + x[2]^2 - 1", {"x": 2})
        f = VectorFunction([("x", 2)], [c])
        a, b = 1.3, -0.4
        np.testing.assert_allclose(f.jacobian("x")([a, b]), [2 * a, 2 * b],
                                   atol=1e-14)

    def test_versus_finite_differences(self):
        rng = np.random.default_rng(7)
        exprs = [
            "sin(x[1])*cos(x[2]) + x[3]^2",
            "exp(x[1]/4)*x[2] - x[3]*x[1] + 1",
            "sqrt(x[1]^2 + x[2]^2 + x[3]^2 + 1)",
            "x[1]^3 - 2*x[2]^2*x[3] + x[1]*x[2]*x[3]",
            "log(x[1]^2 + 2) / (x[2]^2 + 1)",
        ]
        f = VectorFunction([("x", 3)], [parse(s, {"x": 3}) for s in exprs])
        jac = f.jacobian("x")
        for _ in range(100):
            x = rng.uniform(-2.0, 2.0, size=3)
            J_ad = jac(x).reshape(f.n_out, 3)
            J_fd = fd_jacobian(f, "x", [x])
            denom = np.maximum(1.0, np.abs(J_ad))
            assert np.max(np.abs(J_ad - J_fd) / denom) <= 1e-6

    def test_multi_input(self):
        f = VectorFunction([("x", 2), ("u", 1)],
                           [parse("x[1]*u[1] + x[2]", {"x": 2, "u": 1})])
        Ju = f.jacobian("u")([2.0, 3.0], [5.0])
        np.testing.assert_allclose(Ju, [2.0])

    def test_sparse_jacobian_matches_dense(self):
        f = VectorFunction([("x", 4)],
                           [parse("x[1]*x[2]", {"x": 4}),
                            parse("x[4]^2 + 1", {"x": 4})])
        rows, cols, vals = f.sparse_jacobian("x")
        x = np.array([1.5, -2.0, 7.0, 0.5])
        dense = f.jacobian("x")(x).reshape(2, 4)
        rebuilt = np.zeros((2, 4))
        rebuilt[rows, cols] = vals(x)
        np.testing.assert_allclose(rebuilt, dense, atol=1e-15)
        assert len(rows) == 3  # x3 never appears

    def test_unknown_wrt(self):
        f = VectorFunction([("x", 1)], [var("x", 0)])
        with pytest.raises(UnknownSymbol):
            f.jacobian("z")


class TestRoundTrip:
    def test_print_parse_roundtrip(self):
        rng = np.random.default_rng(11)
        texts = [
            "x[1]*x[1] + x[2]*x[2] - 1",
            "-x[1]^2 + 4*x[2]/(x[1] - 3.5)",
            "sin(x[1])^2 + cos(x[1])^2 - exp(-x[2])",
            "(x[1] + x[2])^3 - x[1]/(1 + x[2]^2)",
            "sqrt(x[1]^2 + 1) - 2^x[2]",
        ]
        for text in texts:
            e = parse(text, {"x": 2})
            e2 = parse(to_string(e), {"x": 2})
            f = VectorFunction([("x", 2)], [e])
            f2 = VectorFunction([("x", 2)], [e2])
            for _ in range(100):
                x = rng.uniform(-1.5, 4.0 if "sqrt" in text else 1.5, size=2)
                if "/" in text and abs(x[0] - 3.5) < 1e-2:
                    continue
                assert abs(f(x)[0] - f2(x)[0]) <= 1e-15

    @given(st.lists(st.floats(-3.0, 3.0), min_size=2, max_size=2))
    @settings(max_examples=50, deadline=None)
    def test_derivative_graph_roundtrips(self, point):
        e = parse("x[1]^2*sin(x[2]) - x[2]*cos(x[1])", {"x": 2})
        d = expr.diff(e, "x", 0)
        d2 = parse(to_string(d), {"x": 2})
        f = VectorFunction([("x", 2)], [d])
        g = VectorFunction([("x", 2)], [d2])
        assert f(point)[0] == pytest.approx(g(point)[0], abs=1e-15)


class TestSubstitute:
    def test_compose(self):
        inner = parse("x[1] + 2*x[2]", {"x": 2})
        outer = parse("y[1]^2", {"y": 1})
        composed = expr.substitute([outer], {"y": [inner]})[0]
        f = VectorFunction([("x", 2)], [composed])
        assert f([1.0, 2.0])[0] == 25.0

    def test_unmapped_left_alone(self):
        e = parse("x[1] + u[1]", {"x": 1, "u": 1})
        out = expr.substitute([e], {"u": [expr.const(3.0)]})[0]
        f = VectorFunction([("x", 1)], [out])
        assert f([1.0])[0] == 4.0


class TestImmutability:
    def test_nodes_frozen(self):
        e = var("x", 0)
        with pytest.raises(AttributeError):
            e.op = "const"
