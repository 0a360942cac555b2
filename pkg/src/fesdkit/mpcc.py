"""Mathematical programs with complementarity constraints and their
relaxation homotopy.

Complementarity pairs are kept as index pairs into the decision vector
(grouped, so aggregated cross conditions can relax into a single scalar
constraint).  Relaxation replaces each group by a smooth constraint
parametrized by sigma; driving sigma from one toward zero while warm
starting each smooth solve from the previous one traces the homotopy.  The
relaxed problem keeps sigma as its last parameter so one compiled NLP
serves every homotopy iteration.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import expr
from .errors import DimensionMismatch, UnknownStrategy
from .expr import Expr, VectorFunction, var
from .nlp import IpOptions, Nlp, solve as nlp_solve

_FB_GUARD = 1e-30  # keeps the square root differentiable at the origin

STRATEGIES = ("scholtes-ineq", "scholtes-eq", "fischer-burmeister")


@dataclass
class HomotopyOptions:
    sigma0: float = 1.0
    kappa: float = 0.1
    sigma_min: float = 1e-9
    max_outer: int = 12
    strategy: str = "scholtes-ineq"
    comp_metric: str = "max-product"
    ip_options: IpOptions = field(default_factory=IpOptions)

    def __post_init__(self):
        if not (0.0 < self.kappa < 1.0):
            raise ValueError("reduction factor must lie in (0, 1)")
        if not (0.0 < self.sigma_min < self.sigma0):
            raise ValueError("need 0 < sigma_min < sigma0")
        if self.strategy not in STRATEGIES:
            raise UnknownStrategy(self.strategy)
        if self.comp_metric not in ("max-product", "l1-product"):
            raise ValueError(f"unknown metric {self.comp_metric!r}")


@dataclass
class HomotopyResult:
    w: np.ndarray
    status: str                 # Solved | MaxOuterIter | InnerFailure(...)
    comp_residual: float
    outer_iterations: int
    inner_iteration_counts: list
    diagnostics: list           # per outer: sigma, inner stats, residuals
    duals: dict | None = None
    objective: float = float("nan")

    @property
    def solved(self):
        return self.status == "Solved"


class Mpcc:
    """Objective, equalities, bounds, and complementarity pair groups.

    Each group is a list of (i, j) index pairs into ``w``; the group relaxes
    into one scalar constraint.  Pair members are expected to carry a zero
    lower bound; the only sanctioned exception is equality-pinned entries
    (entry multipliers copied from parameters) whose nonnegativity is
    guaranteed by construction.  General inequalities ``c(w) >= 0`` are
    carried for path and terminal constraints.
    """

    def __init__(self, n_w, objective, equalities, pair_groups, lb, ub,
                 n_p=0, inequalities=(), gn_residuals=(), param_values=None,
                 name="mpcc"):
        self.n_w = int(n_w)
        self.n_p = int(n_p)
        self.name = name
        self.objective = expr.as_expr(objective)
        self.equalities = list(equalities)
        self.inequalities = list(inequalities)
        self.gn_residuals = list(gn_residuals)
        self.lb = np.full(self.n_w, -np.inf) if lb is None else np.asarray(lb, float)
        self.ub = np.full(self.n_w, np.inf) if ub is None else np.asarray(ub, float)
        self.param_values = (np.zeros(self.n_p) if param_values is None
                             else np.asarray(param_values, float))
        self.pair_groups = [[(int(i), int(j)) for i, j in group]
                            for group in pair_groups]
        for group in self.pair_groups:
            for i, j in group:
                if not (0 <= i < self.n_w and 0 <= j < self.n_w):
                    raise DimensionMismatch(
                        f"pair ({i}, {j}) out of range for n_w={self.n_w}")
        self.all_pairs = [p for g in self.pair_groups for p in g]
        self._pair_i = np.array([p[0] for p in self.all_pairs], dtype=int)
        self._pair_j = np.array([p[1] for p in self.all_pairs], dtype=int)
        self._relaxed_cache: dict[str, Nlp] = {}
        self._obj_fn = None

    def objective_value(self, w, params=None) -> float:
        if self._obj_fn is None:
            self._obj_fn = VectorFunction([("w", self.n_w), ("p", self.n_p)],
                                          [self.objective],
                                          name=f"{self.name}_obj")
        p = self.param_values if params is None else np.asarray(params, float)
        return float(self._obj_fn(np.asarray(w, float), p)[0])

    @property
    def n_pairs(self):
        return len(self.all_pairs)


def _relaxed_nlp(mpcc: Mpcc, strategy: str) -> Nlp:
    """Smooth NLP with sigma appended as the last parameter (compiled once
    per strategy and reused across the whole homotopy)."""
    if strategy not in STRATEGIES:
        raise UnknownStrategy(strategy)
    cached = mpcc._relaxed_cache.get(strategy)
    if cached is not None:
        return cached
    sigma = var("p", mpcc.n_p)
    equalities = list(mpcc.equalities)
    inequalities = list(mpcc.inequalities)
    for group in mpcc.pair_groups:
        if strategy == "fischer-burmeister":
            for i, j in group:
                a, b = var("w", i), var("w", j)
                root = expr.sqrt(a * a + b * b + 2.0 * sigma
                                 + expr.const(_FB_GUARD))
                equalities.append(a + b - root)
            continue
        prod = None
        for i, j in group:
            term = var("w", i) * var("w", j)
            prod = term if prod is None else prod + term
        if strategy == "scholtes-ineq":
            inequalities.append(sigma - prod)
        else:  # scholtes-eq
            equalities.append(prod - sigma)
    nlp = Nlp(mpcc.n_w, mpcc.objective, equalities, inequalities,
              mpcc.lb, mpcc.ub, n_p=mpcc.n_p + 1,
              gn_residuals=mpcc.gn_residuals or None,
              name=f"{mpcc.name}_{strategy}")
    mpcc._relaxed_cache[strategy] = nlp
    return nlp


def relax(mpcc: Mpcc, sigma: float, strategy: str = "scholtes-ineq") -> Nlp:
    """Relaxed smooth NLP at one sigma.

    The returned problem treats sigma as its last parameter; the bound
    values to pass are attached as ``bound_params``.
    """
    if sigma <= 0:
        raise ValueError("relaxation parameter must be positive")
    nlp = _relaxed_nlp(mpcc, strategy)
    nlp.bound_params = np.append(mpcc.param_values, float(sigma))
    return nlp


def fischer_burmeister(a, b, sigma=0.0) -> float:
    """Smoothed scalar C-function value; zero iff a*b == sigma on the
    nonnegative orthant (exact complementarity at sigma = 0)."""
    return a + b - np.sqrt(a * a + b * b + 2.0 * sigma + _FB_GUARD)


def comp_residual(mpcc: Mpcc, w, metric: str = "max-product") -> float:
    """Complementarity error at w: pair products, members clipped below at
    zero (entry multipliers may sit a hair below zero numerically)."""
    if mpcc.n_pairs == 0:
        return 0.0
    w = np.asarray(w, dtype=float)
    prods = (np.maximum(w[mpcc._pair_i], 0.0)
             * np.maximum(w[mpcc._pair_j], 0.0))
    if metric == "l1-product":
        return float(prods.sum())
    return float(prods.max())


def solve_homotopy(mpcc: Mpcc, w0, options: HomotopyOptions | None = None,
                   params=None) -> HomotopyResult:
    """Drive sigma down, warm starting each relaxed solve from the last.

    Stops as soon as the complementarity residual reaches 10 * sigma_min or
    sigma would fall below sigma_min.  Inner failures abort the loop but the
    best iterate seen so far is still returned.
    """
    opts = options or HomotopyOptions()
    base_params = (mpcc.param_values if params is None
                   else np.asarray(params, dtype=float))
    if base_params.shape != (mpcc.n_p,):
        raise DimensionMismatch(
            f"expected {mpcc.n_p} parameters, got {base_params.shape}")
    relaxed = _relaxed_nlp(mpcc, opts.strategy)

    w = np.asarray(w0, dtype=float).copy()
    duals = None
    sigma = opts.sigma0
    diagnostics = []
    inner_counts = []
    best = None
    status = "MaxOuterIter"
    outer = 0
    while outer < opts.max_outer and sigma >= opts.sigma_min:
        res = nlp_solve(relaxed, w, duals0=duals, options=opts.ip_options,
                        params=np.append(base_params, sigma))
        comp = comp_residual(mpcc, res.w, opts.comp_metric)
        diagnostics.append({
            "sigma": sigma,
            "inner_iterations": res.iterations,
            "inner_status": res.status,
            "kkt_residual": res.kkt_residual,
            "comp_residual": comp,
        })
        inner_counts.append(res.iterations)
        outer += 1
        if res.status in ("SingularKkt", "NanDetected"):
            status = f"InnerFailure({res.status})"
            if best is None:
                best = (res.w, comp, None)
            break
        w = res.w
        sigma_next = sigma * opts.kappa
        duals = {"y_g": res.y_g, "y_c": res.y_c, "z_lb": res.z_lb,
                 "z_ub": res.z_ub,
                 # barrier and slack scales for the tighter subproblem
                 "mu": max(10.0 * opts.ip_options.tol,
                           min(opts.ip_options.mu_init, 0.1 * sigma_next)),
                 "slack_floor": max(1e-10, 0.05 * sigma_next)}
        if best is None or comp < best[1] or res.status == "Solved":
            best = (w.copy(), comp, dict(duals))
        if comp <= 10.0 * opts.sigma_min and res.status == "Solved":
            status = "Solved"
            break
        sigma *= opts.kappa

    if best is None:
        best = (w, comp_residual(mpcc, w, opts.comp_metric), None)
    w_best, comp_best, duals_best = best
    obj = mpcc.objective_value(w_best, base_params)
    return HomotopyResult(w_best, status, comp_best, outer, inner_counts,
                          diagnostics, duals_best, obj)
