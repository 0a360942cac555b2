"""Embedded primal-dual interior-point solver for smooth NLPs.

Solves  min f(w)  s.t.  g(w) = 0,  c(w) >= 0,  lb <= w <= ub  for dense,
desk-scale problems (up to a few thousand variables).  Inequalities get
slacks, bounds get log barriers, and the perturbed optimality system is
solved by Newton steps with an inertia-correcting regularization ladder,
fraction-to-boundary clipping, and a backtracking line search on an l1
merit function.

The KKT matrix uses exact constraint Jacobians but no exact Hessian of the
Lagrangian: curvature is a regularized identity plus a Gauss-Newton term
when the objective carries a sum-of-squares part.  That is the single
largest deviation from industrial solvers here, chosen because second-order
differentiation is deliberately out of scope; the regularization ladder
compensates on the problems this toolkit builds.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import (DimensionMismatch, DomainError, InfeasibleBounds,
                     NanDetected)
from .expr import Expr, VectorFunction, as_expr

_KAPPA_EPS = 10.0        # barrier subproblem accuracy: E_mu <= kappa_eps * mu
_KAPPA_SIGMA = 1e10      # bound-dual safeguard corridor
_ARMIJO_ETA = 1e-4
_MERIT_RHO = 0.5
_MAX_BACKTRACKS = 30
_ALPHA_MIN = 1e-12
_SOLVE_CHECK = 1e-7      # relative residual accepted from the linear solver


@dataclass
class IpOptions:
    tol: float = 1e-10
    max_iter: int = 400
    mu_init: float = 0.1
    tau: float = 0.99
    reg_ladder: tuple = (0.0, 1e-8, 1e-6, 1e-4, 1e-2, 1e-1, 1.0, 1e1)
    log_stream: object = None

    def __post_init__(self):
        if self.tol <= 0 or self.mu_init <= 0:
            raise ValueError("tolerances must be positive")


@dataclass
class IpResult:
    w: np.ndarray
    y_g: np.ndarray
    y_c: np.ndarray
    z_lb: np.ndarray
    z_ub: np.ndarray
    slacks: np.ndarray
    status: str
    kkt_residual: float
    iterations: int
    mu_final: float

    @property
    def solved(self):
        return self.status == "Solved"


class Nlp:
    """Smooth NLP over a decision symbol ``w`` and parameter symbol ``p``.

    ``gn_residuals`` optionally names a sum-of-squares part of the objective
    (f contains sum_i r_i(w)^2); only its first derivatives are used, as the
    Gauss-Newton curvature term.
    """

    def __init__(self, n_w, objective, equalities, inequalities, lb, ub,
                 n_p=0, gn_residuals=None, name=None):
        self.n_w = int(n_w)
        self.n_p = int(n_p)
        self.name = name or "nlp"
        inputs = [("w", self.n_w), ("p", self.n_p)]
        self.objective = VectorFunction(inputs, [as_expr(objective)],
                                        name=f"{self.name}_f")
        self.g = VectorFunction(inputs, list(equalities), name=f"{self.name}_g")
        self.c = VectorFunction(inputs, list(inequalities), name=f"{self.name}_c")
        self.lb = np.full(self.n_w, -np.inf) if lb is None else np.asarray(lb, float).copy()
        self.ub = np.full(self.n_w, np.inf) if ub is None else np.asarray(ub, float).copy()
        if self.lb.shape != (self.n_w,) or self.ub.shape != (self.n_w,):
            raise DimensionMismatch("bounds must have length n_w")
        if np.any(self.lb > self.ub):
            k = int(np.argmax(self.lb > self.ub))
            raise InfeasibleBounds(f"lb[{k}] = {self.lb[k]} > ub[{k}] = {self.ub[k]}")
        self.gn = (VectorFunction(inputs, list(gn_residuals), name=f"{self.name}_r")
                   if gn_residuals else None)
        self._derivs = None

    @property
    def n_eq(self):
        return self.g.n_out

    @property
    def n_ineq(self):
        return self.c.n_out

    def derivatives(self):
        """Sparse first-derivative bundle, built once and cached."""
        if self._derivs is None:
            d = {}
            _, gcols, gvals = self.objective.sparse_jacobian("w")
            d["grad"] = (gcols, gvals)
            d["Jg"] = self.g.sparse_jacobian("w")
            d["Jc"] = self.c.sparse_jacobian("w")
            d["Jr"] = self.gn.sparse_jacobian("w") if self.gn else None
            self._derivs = d
        return self._derivs


def kkt_residual(nlp: Nlp, w, duals, params=()) -> float:
    """Scaled first-order optimality error at (w, duals).

    Max norm over stationarity, equality feasibility, and min-style
    complementarity measures for inequalities and bounds, divided by one
    plus the largest dual magnitude so wildly scaled duals do not mask
    progress.
    """
    w = np.asarray(w, float)
    p = np.asarray(params, float)
    y_g = np.asarray(duals.get("y_g", np.zeros(nlp.n_eq)), float)
    y_c = np.asarray(duals.get("y_c", np.zeros(nlp.n_ineq)), float)
    z_lb = np.asarray(duals.get("z_lb", np.zeros(nlp.n_w)), float)
    z_ub = np.asarray(duals.get("z_ub", np.zeros(nlp.n_w)), float)

    d = nlp.derivatives()
    grad = np.zeros(nlp.n_w)
    gcols, gvals = d["grad"]
    if len(gcols):
        grad[gcols] = gvals(w, p)
    stat = grad - z_lb + z_ub
    if nlp.n_eq:
        rg, cg, vg = d["Jg"]
        Jg = np.zeros((nlp.n_eq, nlp.n_w))
        Jg[rg, cg] = vg(w, p)
        stat += Jg.T @ y_g
    if nlp.n_ineq:
        rc, cc, vc = d["Jc"]
        Jc = np.zeros((nlp.n_ineq, nlp.n_w))
        Jc[rc, cc] = vc(w, p)
        stat += -Jc.T @ y_c

    parts = [np.max(np.abs(stat)) if nlp.n_w else 0.0]
    if nlp.n_eq:
        parts.append(np.max(np.abs(nlp.g(w, p))))
    if nlp.n_ineq:
        cv = nlp.c(w, p)
        parts.append(max(0.0, np.max(-cv)))
        parts.append(np.max(np.abs(np.minimum(np.abs(cv), np.abs(y_c)))))
    lo = np.isfinite(nlp.lb)
    hi = np.isfinite(nlp.ub)
    if lo.any():
        parts.append(np.max(np.abs(np.minimum(w[lo] - nlp.lb[lo], z_lb[lo]))))
    if hi.any():
        parts.append(np.max(np.abs(np.minimum(nlp.ub[hi] - w[hi], z_ub[hi]))))
    scale = 1.0 + max(
        [np.max(np.abs(v)) if v.size else 0.0 for v in (y_g, y_c, z_lb, z_ub)])
    return max(parts) / scale


class _Workspace:
    """Preallocated dense KKT structure for one Nlp instance."""

    def __init__(self, nlp: Nlp):
        self.nlp = nlp
        n, me, mi = nlp.n_w, nlp.n_eq, nlp.n_ineq
        self.n, self.me, self.mi = n, me, mi
        self.N = n + me + mi
        self.K = np.zeros((self.N, self.N))
        d = nlp.derivatives()
        self.gcols, self.gvals = d["grad"]
        self.Jg_idx = d["Jg"][:2]
        self.Jg_vals = d["Jg"][2]
        self.Jc_idx = d["Jc"][:2]
        self.Jc_vals = d["Jc"][2]
        self.Jr = d["Jr"]
        self.lo = np.isfinite(nlp.lb)
        self.hi = np.isfinite(nlp.ub)

    def gradient(self, w, p):
        g = np.zeros(self.n)
        if len(self.gcols):
            g[self.gcols] = self.gvals(w, p)
        return g

    def jac_g(self, w, p):
        J = np.zeros((self.me, self.n))
        if self.me:
            J[self.Jg_idx] = self.Jg_vals(w, p)
        return J

    def jac_c(self, w, p):
        J = np.zeros((self.mi, self.n))
        if self.mi:
            J[self.Jc_idx] = self.Jc_vals(w, p)
        return J

    def gn_hessian(self, w, p):
        if self.Jr is None:
            return None
        rows, cols, vals = self.Jr
        m = self.nlp.gn.n_out
        J = np.zeros((m, self.n))
        J[rows, cols] = vals(w, p)
        return 2.0 * (J.T @ J)


def _interior_projection(w, lb, ub):
    w = np.array(w, dtype=float)
    width = ub - lb
    margin = np.minimum(1e-8, 0.01 * width)
    lo = np.isfinite(lb)
    hi = np.isfinite(ub)
    w[lo] = np.maximum(w[lo], (lb + margin)[lo])
    w[hi] = np.minimum(w[hi], (ub - margin)[hi])
    return w


def _max_step(x, dx, limit, tau):
    """Largest alpha in (0, 1] with x + alpha*dx >= (1 - tau)*(x - limit) + limit."""
    gap = x - limit
    shrink = dx < 0
    if not np.any(shrink):
        return 1.0
    ratios = -tau * gap[shrink] / dx[shrink]
    return float(min(1.0, ratios.min()))


def solve(nlp: Nlp, w0, duals0=None, options: IpOptions | None = None,
          params=()) -> IpResult:
    """Run the interior-point iteration from w0 (projected strictly inside
    the bounds).  Deterministic: identical inputs give identical iterates."""
    opts = options or IpOptions()
    ws = _Workspace(nlp)
    n, me, mi = ws.n, ws.me, ws.mi
    p = np.asarray(params, dtype=float)
    if p.shape != (nlp.n_p,):
        raise DimensionMismatch(f"expected {nlp.n_p} parameters, got {p.shape}")
    lb, ub = nlp.lb, nlp.ub
    lo, hi = ws.lo, ws.hi

    w = _interior_projection(np.asarray(w0, dtype=float), lb, ub)
    if w.shape != (n,):
        raise DimensionMismatch(f"w0 must have length {n}")
    if not np.all(np.isfinite(w)):
        raise NanDetected("non-finite entry in initial point")

    mu = opts.mu_init
    duals0 = duals0 or {}
    y = np.asarray(duals0.get("y_g", np.zeros(me)), float).copy()
    yc = np.asarray(duals0.get("y_c", np.ones(mi)), float).copy()
    yc = np.maximum(yc, 1e-8)
    c_val = nlp.c(w, p) if mi else np.zeros(0)
    t0 = duals0.get("slacks")
    slack_floor = float(duals0.get("slack_floor", 1e-6))
    if t0 is not None:
        t = np.maximum(np.asarray(t0, float).copy(), 1e-12)
    else:
        t = np.maximum(c_val, slack_floor)
    if "mu" in duals0:
        mu = float(np.clip(duals0["mu"], opts.tol / 10.0, opts.mu_init))
    elif "y_c" in duals0 and mi:
        # warm start: pick the barrier size the incoming point sits at
        mu = float(np.clip(np.mean(t * yc), 10.0 * opts.tol, opts.mu_init))
    z_lb = np.zeros(n)
    z_ub = np.zeros(n)
    z_lb_src = (np.asarray(duals0["z_lb"], float) if "z_lb" in duals0
                else mu / np.maximum(w - lb, 1e-8))
    z_ub_src = (np.asarray(duals0["z_ub"], float) if "z_ub" in duals0
                else mu / np.maximum(ub - w, 1e-8))
    z_lb[lo] = np.maximum(z_lb_src[lo], 1e-10)
    z_ub[hi] = np.maximum(z_ub_src[hi], 1e-10)

    nu = 1.0  # merit penalty
    rung = 0
    best = None
    mu_target = opts.tol / 10.0

    if opts.log_stream is not None:
        opts.log_stream.write("iteration,mu,step_length,merit,kkt_residual\n")

    def barrier_value(w_, t_):
        val = 0.0
        if lo.any():
            val -= mu * np.sum(np.log(np.maximum(w_[lo] - lb[lo], 1e-300)))
        if hi.any():
            val -= mu * np.sum(np.log(np.maximum(ub[hi] - w_[hi], 1e-300)))
        if mi:
            val -= mu * np.sum(np.log(np.maximum(t_, 1e-300)))
        return val

    def eval_fgc(w_):
        f_ = float(nlp.objective(w_, p)[0])
        g_ = nlp.g(w_, p) if me else np.zeros(0)
        c_ = nlp.c(w_, p) if mi else np.zeros(0)
        return f_, g_, c_

    def optimality(mu_, grad, Jg, Jc, g_val, c_, t_):
        stat = grad.copy()
        if me:
            stat += Jg.T @ y
        if mi:
            stat -= Jc.T @ yc
        stat -= z_lb
        stat += z_ub
        parts_inf = [np.max(np.abs(stat)) if n else 0.0]
        if me:
            parts_inf.append(np.max(np.abs(g_val)))
        if mi:
            parts_inf.append(np.max(np.abs(c_ - t_)))
        comp = []
        if lo.any():
            comp.append(np.max(np.abs((w - lb)[lo] * z_lb[lo] - mu_)))
        if hi.any():
            comp.append(np.max(np.abs((ub - w)[hi] * z_ub[hi] - mu_)))
        if mi:
            comp.append(np.max(np.abs(t_ * yc - mu_)))
        scale = 1.0 + max([np.max(np.abs(v)) if v.size else 0.0
                           for v in (y, yc, z_lb, z_ub)])
        stat_err = parts_inf[0] / scale
        feas_err = max(parts_inf[1:], default=0.0)
        comp_err = (max(comp) / scale) if comp else 0.0
        return max(stat_err, feas_err, comp_err)

    try:
        f_val, g_val, c_val = eval_fgc(w)
    except DomainError as exc:
        raise NanDetected(f"initial point not evaluable: {exc}", exc.node) from exc
    iteration = 0
    status = "MaxIterations"
    E_prev = None
    good = 0
    sigma_i = 0.0      # scalar secant estimate of Lagrangian curvature
    prev_snap = None   # (w, grad, Jg, Jc) at the last accepted iterate
    while iteration < opts.max_iter:
        try:
            grad = ws.gradient(w, p)
            Jg = ws.jac_g(w, p)
            Jc = ws.jac_c(w, p)
        except DomainError:
            return _result(w, y, yc, z_lb, z_ub, t, "NanDetected",
                           np.inf, iteration, mu)
        if not (np.all(np.isfinite(grad)) and np.all(np.isfinite(Jg))
                and np.all(np.isfinite(Jc))):
            return _result(w, y, yc, z_lb, z_ub, t, "NanDetected",
                           np.inf, iteration, mu)

        # update the sigma_I*I part of the curvature model from a gradient
        # secant at fixed duals (Gauss-Newton alone misses the constraint
        # curvature carried by the duals)
        if prev_snap is not None:
            w_p, grad_p, Jg_p, Jc_p = prev_snap
            dw_acc = w - w_p
            denom = float(dw_acc @ dw_acc)
            if denom > 1e-300:
                r_new = grad.copy()
                r_old = grad_p.copy()
                if me:
                    r_new += Jg.T @ y
                    r_old += Jg_p.T @ y
                if mi:
                    r_new -= Jc.T @ yc
                    r_old -= Jc_p.T @ yc
                sigma_i = float(np.clip((r_new - r_old) @ dw_acc / denom,
                                        0.0, 1e10))
        prev_snap = (w.copy(), grad.copy(), Jg.copy(), Jc.copy())

        E0 = optimality(0.0, grad, Jg, Jc, g_val, c_val, t)
        best = _keep_best(best, w, y, yc, z_lb, z_ub, t, E0, mu)
        if E0 <= opts.tol:
            status = "Solved"
            break
        # the ladder climbs on line-search and factorization failures only;
        # the secant sigma_i supplies curvature, so progress-based climbing
        # would just over-damp the null-space components
        if E_prev is not None:
            if E0 <= 0.9 * E_prev:
                good += 1
            else:
                good = 0
            if good >= 12 and rung > 0:
                rung -= 1
                good = 0
        E_prev = E0
        # drive the barrier parameter down once the subproblem is solved
        while mu > mu_target and optimality(mu, grad, Jg, Jc, g_val, c_val, t) \
                <= _KAPPA_EPS * mu:
            mu = max(mu_target, min(0.2 * mu, mu ** 1.5))

        # assemble and solve the reduced symmetric KKT system
        sigma_l = np.zeros(n)
        sigma_u = np.zeros(n)
        sigma_l[lo] = z_lb[lo] / (w - lb)[lo]
        sigma_u[hi] = z_ub[hi] / (ub - w)[hi]
        Bgn = ws.gn_hessian(w, p)

        phi = grad.copy()
        if me:
            phi += Jg.T @ y
        if mi:
            phi -= Jc.T @ yc
        phi[lo] -= mu / (w - lb)[lo]
        phi[hi] += mu / (ub - w)[hi]

        # dual (constraint-row) regularization engages only when the solve
        # itself fails; it is never carried between iterations so it cannot
        # put a floor under achievable feasibility
        step = None
        rhs = np.concatenate([
            -phi,
            -g_val if me else np.zeros(0),
            (c_val - mu / yc) if mi else np.zeros(0)])
        for delta_c in (1e-14, 1e-10, 1e-8, 1e-6, 1e-4):
            if step is not None:
                break
            while rung < len(opts.reg_ladder):
                delta = opts.reg_ladder[rung]
                K = ws.K
                K.fill(0.0)
                diag = np.arange(n)
                if Bgn is not None:
                    K[:n, :n] = Bgn
                K[diag, diag] += delta + sigma_i + sigma_l + sigma_u
                if me:
                    K[n:n + me, :n] = Jg
                    K[:n, n:n + me] = Jg.T
                    de = np.arange(n, n + me)
                    K[de, de] = -delta_c
                if mi:
                    K[n + me:, :n] = -Jc
                    K[:n, n + me:] = -Jc.T
                    di = np.arange(n + me, n + me + mi)
                    K[di, di] = -t / yc
                try:
                    with warnings.catch_warnings():
                        # near-singular systems are expected on the ladder;
                        # the residual check decides whether to keep the step
                        warnings.simplefilter("ignore",
                                              scipy.linalg.LinAlgWarning)
                        sol = scipy.linalg.solve(K, rhs, check_finite=False)
                except (scipy.linalg.LinAlgError, ValueError):
                    sol = None
                if sol is not None and np.all(np.isfinite(sol)):
                    resid = np.max(np.abs(K @ sol - rhs))
                    if resid <= _SOLVE_CHECK * max(1.0, np.max(np.abs(rhs))):
                        step = sol
                        break
                if rung + 1 >= len(opts.reg_ladder):
                    break
                rung += 1
            if step is None and rung + 1 >= len(opts.reg_ladder):
                rung = 0  # retry the whole ladder with a stiffer dual block
        if step is None:
            return _finish_failure(best, "SingularKkt", iteration, mu,
                                   w, y, yc, z_lb, z_ub, t, E0)

        dw = step[:n]
        dy = step[n:n + me]
        dyc = step[n + me:]
        # rescale pathologically long directions instead of burning the
        # whole backtracking budget on them
        cap = 100.0 * (1.0 + float(np.max(np.abs(w))))
        dw_norm = float(np.max(np.abs(dw))) if n else 0.0
        if dw_norm > cap:
            scale = cap / dw_norm
            dw = dw * scale
            dy = dy * scale
            dyc = dyc * scale
        dt = (mu / yc - t) - (t / yc) * dyc if mi else np.zeros(0)
        dz_lb = np.zeros(n)
        dz_ub = np.zeros(n)
        dz_lb[lo] = (mu - (w - lb)[lo] * z_lb[lo]) / (w - lb)[lo] \
            - sigma_l[lo] * dw[lo]
        dz_ub[hi] = (mu - (ub - w)[hi] * z_ub[hi]) / (ub - w)[hi] \
            + sigma_u[hi] * dw[hi]

        # fraction-to-boundary limits
        tau = opts.tau
        alpha_pr = 1.0
        if lo.any():
            alpha_pr = min(alpha_pr, _max_step(w[lo], dw[lo], lb[lo], tau))
        if hi.any():
            alpha_pr = min(alpha_pr, _max_step(-w[hi], -dw[hi], -ub[hi], tau))
        if mi:
            alpha_pr = min(alpha_pr, _max_step(t, dt, np.zeros(mi), tau))
        alpha_du = 1.0
        if lo.any():
            alpha_du = min(alpha_du, _max_step(z_lb[lo], dz_lb[lo],
                                               np.zeros(lo.sum()), tau))
        if hi.any():
            alpha_du = min(alpha_du, _max_step(z_ub[hi], dz_ub[hi],
                                               np.zeros(hi.sum()), tau))
        if mi:
            alpha_du = min(alpha_du, _max_step(yc, dyc, np.zeros(mi), tau))

        # l1 merit line search on the primal step
        theta0 = (np.sum(np.abs(g_val)) if me else 0.0) \
            + (np.sum(np.abs(c_val - t)) if mi else 0.0)
        dphi = grad @ dw
        dphi -= np.sum(mu / (w - lb)[lo] * dw[lo]) if lo.any() else 0.0
        dphi += np.sum(mu / (ub - w)[hi] * dw[hi]) if hi.any() else 0.0
        if mi:
            dphi -= np.sum(mu / t * dt)
        if theta0 > 1e-14 and dphi > 0:
            nu = max(nu, dphi / ((1.0 - _MERIT_RHO) * theta0) + 1e-6)
        merit0 = f_val + barrier_value(w, t) + nu * theta0
        dmerit = dphi - nu * theta0

        alpha = alpha_pr
        accepted = False
        for _ in range(_MAX_BACKTRACKS):
            w_try = w + alpha * dw
            t_try = t + alpha * dt if mi else t
            try:
                f_try, g_try, c_try = eval_fgc(w_try)
            except (DomainError, OverflowError):
                alpha *= 0.5
                continue
            if not np.isfinite(f_try):
                alpha *= 0.5
                continue
            theta_try = (np.sum(np.abs(g_try)) if me else 0.0) \
                + (np.sum(np.abs(c_try - t_try)) if mi else 0.0)
            merit_try = f_try + barrier_value(w_try, t_try) + nu * theta_try
            noise = 1e-14 * (1.0 + abs(merit0))
            if merit_try <= merit0 + _ARMIJO_ETA * alpha * dmerit + noise:
                accepted = True
                break
            alpha *= 0.5
            if alpha < _ALPHA_MIN:
                break
        if not accepted:
            rung += 1
            if rung >= len(opts.reg_ladder):
                return _finish_failure(best, "SingularKkt", iteration, mu,
                                       w, y, yc, z_lb, z_ub, t, E0)
            iteration += 1
            continue

        w = w_try
        t = t_try
        f_val, g_val, c_val = f_try, g_try, c_try
        y = y + alpha * dy if me else y
        yc = yc + alpha_du * dyc if mi else yc
        z_lb = z_lb + alpha_du * dz_lb
        z_ub = z_ub + alpha_du * dz_ub
        # keep bound duals inside a corridor around mu/distance
        if lo.any():
            dist = (w - lb)[lo]
            z_lb[lo] = np.clip(z_lb[lo], mu / (_KAPPA_SIGMA * dist),
                               _KAPPA_SIGMA * mu / dist)
        if hi.any():
            dist = (ub - w)[hi]
            z_ub[hi] = np.clip(z_ub[hi], mu / (_KAPPA_SIGMA * dist),
                               _KAPPA_SIGMA * mu / dist)
        if mi:
            yc = np.clip(yc, mu / (_KAPPA_SIGMA * np.maximum(t, 1e-300)),
                         _KAPPA_SIGMA * np.maximum(mu, 1e-16) / np.maximum(t, 1e-300))
        iteration += 1

        if opts.log_stream is not None:
            opts.log_stream.write(
                f"{iteration},{mu!r},{alpha!r},{merit0!r},{E0!r}\n")

    grad = ws.gradient(w, p)
    Jg = ws.jac_g(w, p)
    Jc = ws.jac_c(w, p)
    E0 = optimality(0.0, grad, Jg, Jc, g_val, c_val, t)
    if E0 <= opts.tol:
        status = "Solved"
    best = _keep_best(best, w, y, yc, z_lb, z_ub, t, E0, mu)
    if status != "Solved":
        b = best
        return IpResult(b["w"], b["y"], b["yc"], b["z_lb"], b["z_ub"], b["t"],
                        status, b["E0"], iteration, b["mu"])
    return _result(w, y, yc, z_lb, z_ub, t, status, E0, iteration, mu)


def _result(w, y, yc, z_lb, z_ub, t, status, kkt, iters, mu):
    return IpResult(w.copy(), y.copy(), yc.copy(), z_lb.copy(), z_ub.copy(),
                    t.copy(), status, float(kkt), iters, mu)


def _keep_best(best, w, y, yc, z_lb, z_ub, t, E0, mu):
    if best is None or E0 < best["E0"]:
        return {"w": w.copy(), "y": y.copy(), "yc": yc.copy(),
                "z_lb": z_lb.copy(), "z_ub": z_ub.copy(), "t": t.copy(),
                "E0": float(E0), "mu": mu}
    return best


def _finish_failure(best, status, iteration, mu, w, y, yc, z_lb, z_ub, t, E0):
    best = _keep_best(best, w, y, yc, z_lb, z_ub, t, E0, mu)
    return IpResult(best["w"], best["y"], best["yc"], best["z_lb"],
                    best["z_ub"], best["t"], status, best["E0"], iteration,
                    best["mu"])
