import io
import math

import numpy as np
import pytest

from fesdkit import expr
from fesdkit.errors import InfeasibleBounds, NanDetected
from fesdkit.expr import VectorFunction, parse, var
from fesdkit.nlp import IpOptions, Nlp, kkt_residual, solve


def w_(i):
    return var("w", i)


def make_regression_set():
    """Analytic problems: (name, nlp, w0, expected w*, check_duals)."""
    inf = np.inf
    problems = []

    # 1. unconstrained parabola
    f = (w_(0) - 3.0) ** 2
    problems.append(("parabola",
                     Nlp(1, f, [], [], None, None, gn_residuals=[w_(0) - 3.0]),
                     [0.0], [3.0], {}))

    # 2. linear objective on the unit circle (equality)
    f = w_(0) + w_(1)
    g = [w_(0) ** 2 + w_(1) ** 2 - 1.0]
    s = math.sqrt(2.0) / 2.0
    problems.append(("circle_equality", Nlp(2, f, g, [], None, None),
                     [-0.5, -0.6], [-s, -s], {}))

    # 3. bound-constrained LP corner: min -w, 0 <= w <= 1
    problems.append(("lp_corner", Nlp(1, -w_(0), [], [], [0.0], [1.0]),
                     [0.5], [1.0], {"z_ub": [1.0]}))

    # 4. Rosenbrock as least squares
    r = [10.0 * (w_(1) - w_(0) ** 2), 1.0 - w_(0)]
    f = r[0] ** 2 + r[1] ** 2
    problems.append(("rosenbrock", Nlp(2, f, [], [], None, None, gn_residuals=r),
                     [-1.2, 1.0], [1.0, 1.0], {}))

    # 5. quadratic with linear equality
    f = w_(0) ** 2 + w_(1) ** 2
    problems.append(("projection_line",
                     Nlp(2, f, [w_(0) + w_(1) - 1.0], [], None, None,
                         gn_residuals=[w_(0), w_(1)]),
                     [3.0, -1.0], [0.5, 0.5], {}))

    # 6. closest point on the circle to (2, 0)
    f = (w_(0) - 2.0) ** 2 + w_(1) ** 2
    problems.append(("sphere_projection",
                     Nlp(2, f, [w_(0) ** 2 + w_(1) ** 2 - 1.0], [], None, None,
                         gn_residuals=[w_(0) - 2.0, w_(1)]),
                     [0.7, 0.3], [1.0, 0.0], {}))

    # 7. box LP in 3 vars: min w1 - 2 w2 + 3 w3 on [0, 1]^3
    f = w_(0) - 2.0 * w_(1) + 3.0 * w_(2)
    problems.append(("box_lp", Nlp(3, f, [], [], [0.0] * 3, [1.0] * 3),
                     [0.5, 0.5, 0.5], [0.0, 1.0, 0.0], {}))

    # 8. entropy-like interior optimum: min w*log(w) on [0.05, 1]
    f = w_(0) * expr.log(w_(0))
    problems.append(("entropy", Nlp(1, f, [], [], [0.05], [1.0]),
                     [0.5], [math.exp(-1.0)], {}))

    # 9. linear objective with inequality circle: min w1 + w2, 1 - |w|^2 >= 0
    f = w_(0) + w_(1)
    c = [1.0 - w_(0) ** 2 - w_(1) ** 2]
    problems.append(("circle_inequality", Nlp(2, f, [], c, None, None),
                     [0.1, -0.3], [-s, -s], {}))

    # 10. badly scaled least squares
    r = [1000.0 * w_(0) - 1.0, 0.001 * w_(1) - 1.0]
    f = r[0] ** 2 + r[1] ** 2
    problems.append(("scaled_ls", Nlp(2, f, [], [], None, None, gn_residuals=r),
                     [0.0, 0.0], [1e-3, 1e3], {}))

    # 11. inequality becomes active: min (w1-2)^2 + (w2-2)^2 s.t. w1 + w2 <= 1
    f = (w_(0) - 2.0) ** 2 + (w_(1) - 2.0) ** 2
    c = [1.0 - w_(0) - w_(1)]
    problems.append(("active_halfplane",
                     Nlp(2, f, [], c, None, None,
                         gn_residuals=[w_(0) - 2.0, w_(1) - 2.0]),
                     [0.0, 0.0], [0.5, 0.5], {}))

    # 12. parametric target: min (w - p)^2 with p = 1.7
    f = (w_(0) - expr.var("p", 0)) ** 2
    problems.append(("parametric",
                     Nlp(1, f, [], [], None, None, n_p=1,
                         gn_residuals=[w_(0) - expr.var("p", 0)]),
                     [0.0], [1.7], {"params": [1.7]}))

    return problems


REGRESSION = make_regression_set()
IDS = [p[0] for p in REGRESSION]


@pytest.mark.parametrize("case", REGRESSION, ids=IDS)
def test_regression_problem(case):
    name, nlp, w0, w_star, extra = case
    params = extra.get("params", [])
    res = solve(nlp, w0, params=params)
    assert res.status == "Solved", f"{name}: {res.status}, kkt={res.kkt_residual}"
    assert res.kkt_residual <= 1e-10
    np.testing.assert_allclose(res.w, w_star, atol=5e-7,
                               err_msg=f"{name} solution mismatch")
    if "z_ub" in extra:
        np.testing.assert_allclose(res.z_ub, extra["z_ub"], atol=1e-6)


def test_kkt_residual_at_solution_and_away():
    _, nlp, w0, w_star, _ = REGRESSION[1]  # circle equality
    res = solve(nlp, w0)
    duals = {"y_g": res.y_g, "y_c": res.y_c, "z_lb": res.z_lb, "z_ub": res.z_ub}
    assert kkt_residual(nlp, res.w, duals) <= 1e-10
    # exact analytic KKT point
    s = math.sqrt(2.0) / 2.0
    assert kkt_residual(nlp, [-s, -s], {"y_g": [s]}) <= 1e-12
    assert kkt_residual(nlp, w0, {"y_g": [0.0]}) > 1e-3


def test_residual_drops_ten_fold():
    for case in REGRESSION[:6]:
        name, nlp, w0, _, extra = case
        params = extra.get("params", [])
        first = kkt_residual(
            nlp, np.asarray(w0, float),
            {"y_g": np.zeros(nlp.n_eq), "y_c": np.zeros(nlp.n_ineq)},
            params=params)
        res = solve(nlp, w0, params=params)
        assert res.kkt_residual <= first / 10.0, name


def test_deterministic_iterates():
    _, nlp, w0, _, _ = REGRESSION[3]
    r1 = solve(nlp, w0)
    r2 = solve(nlp, w0)
    assert r1.iterations == r2.iterations
    np.testing.assert_array_equal(r1.w, r2.w)


def test_iteration_log_csv():
    _, nlp, w0, _, _ = REGRESSION[0]
    stream = io.StringIO()
    solve(nlp, w0, options=IpOptions(log_stream=stream))
    lines = stream.getvalue().strip().splitlines()
    assert lines[0] == "iteration,mu,step_length,merit,kkt_residual"
    assert len(lines) >= 2
    assert len(lines[1].split(",")) == 5


def test_max_iterations_returns_best():
    _, nlp, w0, _, _ = REGRESSION[3]
    res = solve(nlp, w0, options=IpOptions(max_iter=2))
    assert res.status == "MaxIterations"
    assert np.isfinite(res.kkt_residual)


def test_infeasible_bounds_rejected():
    with pytest.raises(InfeasibleBounds):
        Nlp(1, w_(0), [], [], [1.0], [0.0])


def test_nan_detected_on_bad_start():
    nlp = Nlp(1, expr.log(w_(0)), [], [], None, None)
    with pytest.raises(NanDetected):
        solve(nlp, [-2.0])


def test_fraction_to_boundary_keeps_interior():
    # solver must never evaluate outside the box
    calls = []
    f = expr.log(w_(0)) * w_(0)

    nlp = Nlp(1, f, [], [], [0.0], [2.0])
    orig = nlp.objective.compiled

    def spy(wv, pv):
        calls.append(wv[0])
        return orig(wv, pv)

    nlp.objective._compiled = spy
    solve(nlp, [1.0])
    assert all(0.0 < v < 2.0 for v in calls)


def test_warm_start_reuses_duals():
    _, nlp, w0, _, _ = REGRESSION[5]
    res = solve(nlp, w0)
    warm = solve(nlp, res.w, duals0={"y_g": res.y_g, "y_c": res.y_c,
                                     "z_lb": res.z_lb, "z_ub": res.z_ub,
                                     "slacks": res.slacks})
    assert warm.status == "Solved"
    assert warm.iterations <= max(3, res.iterations // 2)
