"""Implicit Runge-Kutta transcription of the DCS, with and without switch
detection.

The standard transcription fixes equal step sizes and keeps only the
stage-wise complementarity pairs; it is first-order accurate across switches
no matter the scheme.  The switch-detecting transcription makes every
element length a decision variable and couples the multipliers of all stage
points of an element (boundary point included) through cross-complementarity
pairs, so the active set can change only at element boundaries and the
boundary adjacent to a change is pinned to the switching surface.  Step
equilibration removes the leftover step-size freedom on elements where
nothing switches.

Only schemes whose last abscissa is 1 are accepted: the right boundary of an
element must itself be a stage point for the multiplier aliasing to work.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import expr
from .errors import (DimensionMismatch, TableauNotStifflyAccurate,
                     UnsupportedStageCount)
from .expr import Expr, VectorFunction, var
from .model import StepDcs

_SQRT6 = math.sqrt(6.0)


@dataclass(frozen=True)
class ButcherTableau:
    s: int
    A: np.ndarray
    b: np.ndarray
    c: np.ndarray
    order: int
    name: str

    def __post_init__(self):
        A = np.asarray(self.A, dtype=float)
        b = np.asarray(self.b, dtype=float)
        c = np.asarray(self.c, dtype=float)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", c)
        if A.shape != (self.s, self.s) or b.shape != (self.s,) or c.shape != (self.s,):
            raise DimensionMismatch("tableau blocks disagree with stage count")
        if abs(b.sum() - 1.0) > 1e-14:
            raise DimensionMismatch("tableau weights must sum to 1")
        if np.max(np.abs(A.sum(axis=1) - c)) > 1e-14:
            raise DimensionMismatch("tableau abscissae must equal row sums")

    @property
    def stiffly_accurate(self) -> bool:
        return abs(self.c[-1] - 1.0) <= 1e-14


def radau_iia(s: int) -> ButcherTableau:
    """Radau IIA collocation tableaus, order 2s - 1, last abscissa 1."""
    if s == 1:
        return ButcherTableau(1, [[1.0]], [1.0], [1.0], 1, "radau_iia_1")
    if s == 2:
        A = [[5.0 / 12.0, -1.0 / 12.0],
             [3.0 / 4.0, 1.0 / 4.0]]
        return ButcherTableau(2, A, [3.0 / 4.0, 1.0 / 4.0], [1.0 / 3.0, 1.0], 3,
                              "radau_iia_2")
    if s == 3:
        A = [[(88.0 - 7.0 * _SQRT6) / 360.0,
              (296.0 - 169.0 * _SQRT6) / 1800.0,
              (-2.0 + 3.0 * _SQRT6) / 225.0],
             [(296.0 + 169.0 * _SQRT6) / 1800.0,
              (88.0 + 7.0 * _SQRT6) / 360.0,
              (-2.0 - 3.0 * _SQRT6) / 225.0],
             [(16.0 - _SQRT6) / 36.0, (16.0 + _SQRT6) / 36.0, 1.0 / 9.0]]
        b = [(16.0 - _SQRT6) / 36.0, (16.0 + _SQRT6) / 36.0, 1.0 / 9.0]
        c = [(4.0 - _SQRT6) / 10.0, (4.0 + _SQRT6) / 10.0, 1.0]
        return ButcherTableau(3, A, b, c, 5, "radau_iia_3")
    raise UnsupportedStageCount(f"stage count {s} not in {{1, 2, 3}}")


def gauss_legendre(s: int) -> ButcherTableau:
    """Midpoint-family tableaus; shipped only to exercise the rejection path
    (their last abscissa is interior, so switch detection cannot use them)."""
    if s == 1:
        return ButcherTableau(1, [[0.5]], [1.0], [0.5], 2, "gauss_legendre_1")
    raise UnsupportedStageCount(f"stage count {s} not supported here")


@dataclass
class FesdOptions:
    cross_mode: str = "per-element-sum"   # pairwise | per-element-sum | per-interval-sum
    step_equilibration: str = "direct"    # direct | penalty | off
    rho_h: float | None = None            # penalty weight; default 0.1 / hbar^2
    h_min_factor: float = 0.0
    h_max_factor: float = 2.0

    def __post_init__(self):
        if self.cross_mode not in ("pairwise", "per-element-sum",
                                   "per-interval-sum"):
            raise ValueError(f"unknown cross mode {self.cross_mode!r}")
        if self.step_equilibration not in ("direct", "penalty", "off"):
            raise ValueError(
                f"unknown step equilibration {self.step_equilibration!r}")


def element_residual(tableau: ButcherTableau, dcs: StepDcs) -> VectorFunction:
    """Smooth residual of one integration element as a VectorFunction.

    Inputs: element entry state, stacked stage derivatives, stage algebraic
    blocks, exit state, step size, control.  Outputs stack the stage
    derivative definitions, the DCS algebraic residual at every stage point,
    and the exit-state quadrature row.  Complementarity pairs are not part
    of this residual; they are collected separately at assembly.
    """
    s = tableau.s
    n_x, n_u, n_c, n_th = dcs.n_x, dcs.n_u, dcs.n_c, dcs.n_theta
    inputs = [("x_n", n_x), ("v", s * n_x), ("theta", s * n_th),
              ("alpha", s * n_c), ("lam_p", s * n_c), ("lam_n", s * n_c),
              ("x_next", n_x), ("h", 1), ("q", n_u)]
    xn = [var("x_n", i) for i in range(n_x)]
    v = [[var("v", i * n_x + k) for k in range(n_x)] for i in range(s)]
    th = [[var("theta", i * n_th + k) for k in range(n_th)] for i in range(s)]
    al = [[var("alpha", i * n_c + k) for k in range(n_c)] for i in range(s)]
    lp = [[var("lam_p", i * n_c + k) for k in range(n_c)] for i in range(s)]
    ln = [[var("lam_n", i * n_c + k) for k in range(n_c)] for i in range(s)]
    x_next = [var("x_next", k) for k in range(n_x)]
    h = var("h", 0)
    q = [var("q", k) for k in range(n_u)]

    stage_x = []
    for i in range(s):
        xi = []
        for k in range(n_x):
            acc = xn[k]
            for j in range(s):
                aij = tableau.A[i, j]
                if aij != 0.0:
                    acc = acc + (h * expr.const(aij)) * v[j][k]
            xi.append(acc)
        stage_x.append(xi)

    rows: list[Expr] = []
    for i in range(s):
        if dcs.mode == "step-general":
            f_i = expr.substitute(dcs.rhs.outputs,
                                  {"x": stage_x[i], "u": q, "alpha": al[i]})
        else:
            f_i = expr.substitute(dcs.rhs.outputs,
                                  {"x": stage_x[i], "u": q, "theta": th[i]})
        rows.extend(v[i][k] - f_i[k] for k in range(n_x))
    for i in range(s):
        rows.extend(expr.substitute(
            dcs.G.outputs,
            {"x": stage_x[i], "theta": th[i], "alpha": al[i],
             "lam_p": lp[i], "lam_n": ln[i]}))
    for k in range(n_x):
        acc = x_next[k] - xn[k]
        for i in range(s):
            acc = acc - (h * expr.const(tableau.b[i])) * v[i][k]
        rows.append(acc)
    return VectorFunction(inputs, rows, name="element_residual")


class FesdProblem:
    """All decision variables, constraints, and pairs of one control interval.

    The decision vector holds, per element: stage derivatives, stage
    algebraic blocks, the complement variables ``1 - alpha``, aggregation
    auxiliaries when the cross mode asks for them, the exit state, and (in
    switch-detecting mode) the step length.  Boundary multipliers of the
    first element are pinned to parameters; later elements alias the
    previous element's last stage, so multiplier continuity is structural.

    Parameters: entry state, control, interval length, entry multipliers.
    """

    def __init__(self, tableau: ButcherTableau, dcs: StepDcs, n_fe: int,
                 mode: str = "fesd", options: FesdOptions | None = None):
        if n_fe < 1:
            raise DimensionMismatch("need at least one element")
        if mode not in ("standard", "fesd"):
            raise DimensionMismatch(f"unknown transcription mode {mode!r}")
        if mode == "fesd" and not tableau.stiffly_accurate:
            raise TableauNotStifflyAccurate(
                f"{tableau.name}: switch detection needs the right boundary "
                f"as a stage point (last abscissa 1, got {tableau.c[-1]})")
        self.tableau = tableau
        self.dcs = dcs
        self.n_fe = n_fe
        self.mode = mode
        self.options = options or FesdOptions()

        s = tableau.s
        n_x, n_u, n_c, n_th = dcs.n_x, dcs.n_u, dcs.n_c, dcs.n_theta
        self.n_x, self.n_u, self.n_c, self.n_theta = n_x, n_u, n_c, n_th
        agg = self.options.cross_mode
        fesd = mode == "fesd"

        # ---- parameter layout (shared by both modes) -------------------
        pc = _Alloc()
        self.p_s0 = pc.block(n_x)
        self.p_q = pc.block(n_u)
        self.p_T = pc.block(1)
        self.p_lam00_p = pc.block(n_c)
        self.p_lam00_n = pc.block(n_c)
        self.n_p = pc.n

        # ---- decision vector layout ------------------------------------
        al = _Alloc()
        self.ix0 = al.block(n_x)
        if fesd:
            self.ilam00_p = al.block(n_c)
            self.ilam00_n = al.block(n_c)
        self.iv = []
        self.itheta = []
        self.ialpha = []
        self.ilam_p = []
        self.ilam_n = []
        self.ibeta = []
        self.isum_lp = []
        self.isum_ln = []
        self.isum_a = []
        self.isum_b = []
        self.ix_end = []
        self.ih = []
        for n in range(n_fe):
            self.iv.append(al.block(s * n_x))
            self.itheta.append(al.block(s * n_th))
            self.ialpha.append(al.block(s * n_c))
            self.ilam_p.append(al.block(s * n_c))
            self.ilam_n.append(al.block(s * n_c))
            self.ibeta.append(al.block(s * n_c))
            if fesd and agg in ("per-element-sum", "per-interval-sum"):
                self.isum_lp.append(al.block(n_c))
                self.isum_ln.append(al.block(n_c))
            if fesd and agg == "per-interval-sum":
                self.isum_a.append(al.block(n_c))
                self.isum_b.append(al.block(n_c))
            self.ix_end.append(al.block(n_x))
            if fesd:
                self.ih.append(al.block(1))
        self.n_w = al.n

        self._element_res = element_residual(tableau, dcs)
        self._build_constraints()
        self._theta_at_half = None

    # -- variable/parameter expression helpers -------------------------
    def _w(self, idx):
        return [var("w", int(i)) for i in idx]

    def _p(self, idx):
        return [var("p", int(i)) for i in idx]

    def _h_expr(self, n) -> Expr:
        if self.mode == "fesd":
            return var("w", int(self.ih[n][0]))
        return var("p", int(self.p_T[0])) * expr.const(1.0 / self.n_fe)

    def _entry_state(self, n):
        return self._w(self.ix0 if n == 0 else self.ix_end[n - 1])

    def _boundary_lam(self, n):
        """Multipliers at the left boundary of element n (aliased)."""
        if n == 0:
            return self._w(self.ilam00_p), self._w(self.ilam00_n)
        s, n_c = self.tableau.s, self.n_c
        last = slice((s - 1) * n_c, s * n_c)
        return (self._w(self.ilam_p[n - 1][last]),
                self._w(self.ilam_n[n - 1][last]))

    def _stage_lam_sums(self, n):
        """Boundary-inclusive multiplier sums over one element, per component."""
        s, n_c = self.tableau.s, self.n_c
        bp, bn = self._boundary_lam(n)
        sums_p, sums_n = [], []
        for j in range(self.n_c):
            acc_p, acc_n = bp[j], bn[j]
            for m in range(s):
                acc_p = acc_p + var("w", int(self.ilam_p[n][m * n_c + j]))
                acc_n = acc_n + var("w", int(self.ilam_n[n][m * n_c + j]))
            sums_p.append(acc_p)
            sums_n.append(acc_n)
        return sums_p, sums_n

    # -- constraint assembly --------------------------------------------
    def _build_constraints(self):
        s = self.tableau.s
        n_x, n_u, n_c, n_th = self.n_x, self.n_u, self.n_c, self.n_theta
        fesd = self.mode == "fesd"
        agg = self.options.cross_mode
        eqs: list[Expr] = []
        pair_groups: list[list[tuple[int, int]]] = []

        # entry state and entry multipliers are pinned to parameters
        eqs.extend(w - p for w, p in zip(self._w(self.ix0), self._p(self.p_s0)))
        if fesd:
            eqs.extend(w - p for w, p in
                       zip(self._w(self.ilam00_p), self._p(self.p_lam00_p)))
            eqs.extend(w - p for w, p in
                       zip(self._w(self.ilam00_n), self._p(self.p_lam00_n)))

        q_exprs = self._p(self.p_q)
        for n in range(self.n_fe):
            subs = {
                "x_n": self._entry_state(n),
                "v": self._w(self.iv[n]),
                "theta": self._w(self.itheta[n]),
                "alpha": self._w(self.ialpha[n]),
                "lam_p": self._w(self.ilam_p[n]),
                "lam_n": self._w(self.ilam_n[n]),
                "x_next": self._w(self.ix_end[n]),
                "h": [self._h_expr(n)],
                "q": q_exprs,
            }
            eqs.extend(expr.substitute(self._element_res.outputs, subs))
            # complement variables beta = 1 - alpha
            for bi, ai in zip(self.ibeta[n], self.ialpha[n]):
                eqs.append(var("w", int(bi)) - (expr.const(1.0) - var("w", int(ai))))
            if fesd and agg in ("per-element-sum", "per-interval-sum"):
                sums_p, sums_n = self._stage_lam_sums(n)
                for j in range(n_c):
                    eqs.append(var("w", int(self.isum_lp[n][j])) - sums_p[j])
                    eqs.append(var("w", int(self.isum_ln[n][j])) - sums_n[j])
            if fesd and agg == "per-interval-sum":
                for j in range(n_c):
                    acc_a = expr.const(0.0)
                    acc_b = expr.const(0.0)
                    for m in range(s):
                        acc_a = acc_a + var("w", int(self.ialpha[n][m * n_c + j]))
                        acc_b = acc_b + var("w", int(self.ibeta[n][m * n_c + j]))
                    eqs.append(var("w", int(self.isum_a[n][j])) - acc_a)
                    eqs.append(var("w", int(self.isum_b[n][j])) - acc_b)

            # stage-wise complementarity pairs
            for m in range(s):
                for j in range(n_c):
                    a_idx = int(self.ialpha[n][m * n_c + j])
                    b_idx = int(self.ibeta[n][m * n_c + j])
                    pair_groups.append([(int(self.ilam_n[n][m * n_c + j]), a_idx)])
                    pair_groups.append([(int(self.ilam_p[n][m * n_c + j]), b_idx)])

        if fesd:
            pair_groups.extend(self.cross_complementarity())
            eqs.extend(self.step_equilibration_equalities())
            total_h = self._w(np.concatenate(self.ih))
            acc = total_h[0]
            for hv in total_h[1:]:
                acc = acc + hv
            eqs.append(acc - var("p", int(self.p_T[0])))

        self.equalities = eqs
        self.pair_groups = pair_groups

    def cross_complementarity(self):
        """Pairs coupling multipliers across the stage points of an element.

        ``pairwise`` keeps every product separate; ``per-element-sum``
        couples each stage step value with the boundary-inclusive multiplier
        sum; ``per-interval-sum`` also sums the step side over the stages.
        All variants are valid because every factor is nonnegative, so a
        vanishing aggregate kills each addend.  Sums never reach across
        elements: multipliers may be legitimately positive in one element
        and zero in the next.
        """
        s, n_c = self.tableau.s, self.n_c
        agg = self.options.cross_mode
        groups = []
        for n in range(self.n_fe):
            if agg == "pairwise":
                bp, bn = self.ilam_p[n], self.ilam_n[n]
                for m in range(s):
                    for j in range(n_c):
                        a_idx = int(self.ialpha[n][m * n_c + j])
                        b_idx = int(self.ibeta[n][m * n_c + j])
                        # boundary point of the previous element (m' = 0)
                        if n == 0:
                            lp0 = int(self.ilam00_p[j])
                            ln0 = int(self.ilam00_n[j])
                        else:
                            lp0 = int(self.ilam_p[n - 1][(s - 1) * n_c + j])
                            ln0 = int(self.ilam_n[n - 1][(s - 1) * n_c + j])
                        groups.append([(ln0, a_idx)])
                        groups.append([(lp0, b_idx)])
                        for mp in range(s):
                            if mp == m:
                                continue
                            groups.append([(int(bn[mp * n_c + j]), a_idx)])
                            groups.append([(int(bp[mp * n_c + j]), b_idx)])
            elif agg == "per-element-sum":
                for m in range(s):
                    for j in range(n_c):
                        groups.append([(int(self.isum_ln[n][j]),
                                        int(self.ialpha[n][m * n_c + j]))])
                        groups.append([(int(self.isum_lp[n][j]),
                                        int(self.ibeta[n][m * n_c + j]))])
            else:  # per-interval-sum
                for j in range(n_c):
                    groups.append([(int(self.isum_ln[n][j]),
                                    int(self.isum_a[n][j]))])
                    groups.append([(int(self.isum_lp[n][j]),
                                    int(self.isum_b[n][j]))])
        return groups

    def _eta(self, n) -> Expr:
        """Switch indicator for the boundary between elements n-1 and n:
        strictly positive iff every component keeps a strict sign on both
        sides; any sign change, boundary touch, or sliding segment zeroes
        it, freeing the step-length difference."""
        sums_p_b, sums_n_b = self._stage_lam_sums(n - 1)
        sums_p_f, sums_n_f = self._stage_lam_sums(n)
        eta = None
        for j in range(self.n_c):
            pi_j = sums_p_b[j] * sums_p_f[j] + sums_n_b[j] * sums_n_f[j]
            eta = pi_j if eta is None else eta * pi_j
        return eta

    def step_equilibration_equalities(self) -> list[Expr]:
        if self.mode != "fesd" or self.options.step_equilibration != "direct" \
                or self.n_fe < 2:
            return []
        rows = []
        for n in range(1, self.n_fe):
            dh = var("w", int(self.ih[n][0])) - var("w", int(self.ih[n - 1][0]))
            rows.append(dh * self._eta(n))
        return rows

    def step_equilibration_penalty(self) -> tuple[Expr, list[Expr]]:
        """Quadratic pull of every step length to the uniform one; returns
        the objective term and its least-squares residuals.  The default
        weight 0.1 / hbar^2 is parametric in the interval length."""
        p_T = var("p", int(self.p_T[0]))
        hbar = p_T * expr.const(1.0 / self.n_fe)
        if self.options.rho_h is not None:
            sqrt_rho = expr.const(math.sqrt(self.options.rho_h))
        else:
            sqrt_rho = expr.const(math.sqrt(0.1) * self.n_fe) / p_T
        obj = expr.const(0.0)
        res = []
        for n in range(self.n_fe):
            dev = var("w", int(self.ih[n][0])) - hbar
            scaled = sqrt_rho * dev
            obj = obj + scaled * scaled
            res.append(scaled)
        return obj, res

    def to_mpcc(self, params: np.ndarray):
        """Package this interval as a complementarity program; ``params``
        supplies the interval length the step bounds are sized from."""
        from .mpcc import Mpcc
        T = float(np.asarray(params)[self.p_T[0]])
        lb, ub = self.bounds(T)
        objective = expr.const(0.0)
        gn = []
        if self.mode == "fesd" and self.options.step_equilibration == "penalty":
            objective, gn = self.step_equilibration_penalty()
        return Mpcc(self.n_w, objective, self.equalities, self.pair_groups,
                    lb, ub, n_p=self.n_p, gn_residuals=gn,
                    param_values=params,
                    name=f"{self.dcs.model.name}_{self.mode}")

    # -- numeric pieces ---------------------------------------------------
    def bounds(self, T: float) -> tuple[np.ndarray, np.ndarray]:
        lb = np.full(self.n_w, -np.inf)
        ub = np.full(self.n_w, np.inf)
        hbar = T / self.n_fe
        for n in range(self.n_fe):
            if self.dcs.mode != "step-general":
                lb[self.itheta[n]] = 0.0
            lb[self.ialpha[n]] = 0.0
            ub[self.ialpha[n]] = 1.0
            lb[self.ilam_p[n]] = 0.0
            lb[self.ilam_n[n]] = 0.0
            lb[self.ibeta[n]] = 0.0
            ub[self.ibeta[n]] = 1.0
            if self.mode == "fesd":
                if self.options.cross_mode in ("per-element-sum",
                                               "per-interval-sum"):
                    lb[self.isum_lp[n]] = 0.0
                    lb[self.isum_ln[n]] = 0.0
                if self.options.cross_mode == "per-interval-sum":
                    lb[self.isum_a[n]] = 0.0
                    lb[self.isum_b[n]] = 0.0
                lb[self.ih[n]] = self.options.h_min_factor * hbar
                ub[self.ih[n]] = self.options.h_max_factor * hbar
        return lb, ub

    def parameters(self, s0, T, q=(), lam00_p=None, lam00_n=None) -> np.ndarray:
        p = np.zeros(self.n_p)
        p[self.p_s0] = np.asarray(s0, dtype=float)
        p[self.p_q] = np.asarray(q, dtype=float)
        p[self.p_T] = float(T)
        if lam00_p is not None:
            p[self.p_lam00_p] = np.asarray(lam00_p, dtype=float)
        if lam00_n is not None:
            p[self.p_lam00_n] = np.asarray(lam00_n, dtype=float)
        return p

    def theta_at_half(self) -> np.ndarray:
        if self._theta_at_half is None:
            if self.n_theta:
                f = VectorFunction([("alpha", self.n_c)], self.dcs.theta_exprs)
                self._theta_at_half = f([0.5] * self.n_c)
            else:
                self._theta_at_half = np.zeros(0)
        return self._theta_at_half

    def initial_guess(self, params: np.ndarray, x_target=None) -> np.ndarray:
        """Deterministic strictly interior start: uniform steps, entry state
        copied (or interpolated toward ``x_target``), centered algebraics."""
        s = self.tableau.s
        n_c = self.n_c
        w0 = np.zeros(self.n_w)
        s0 = params[self.p_s0]
        T = float(params[self.p_T[0]])
        hbar = T / self.n_fe
        w0[self.ix0] = s0
        if self.mode == "fesd":
            w0[self.ilam00_p] = params[self.p_lam00_p]
            w0[self.ilam00_n] = params[self.p_lam00_n]
        th0 = self.theta_at_half()
        for n in range(self.n_fe):
            if x_target is None:
                w0[self.ix_end[n]] = s0
            else:
                frac = (n + 1) / self.n_fe
                w0[self.ix_end[n]] = (1 - frac) * s0 + frac * np.asarray(x_target)
            w0[self.itheta[n]] = np.tile(th0, s)
            w0[self.ialpha[n]] = 0.5
            w0[self.ibeta[n]] = 0.5
            w0[self.ilam_p[n]] = 0.5
            w0[self.ilam_n[n]] = 0.5
            if self.mode == "fesd":
                if self.options.cross_mode in ("per-element-sum",
                                               "per-interval-sum"):
                    w0[self.isum_lp[n]] = 0.5 * (s + 1)
                    w0[self.isum_ln[n]] = 0.5 * (s + 1)
                if self.options.cross_mode == "per-interval-sum":
                    w0[self.isum_a[n]] = 0.5 * s
                    w0[self.isum_b[n]] = 0.5 * s
                w0[self.ih[n]] = hbar
        return w0

    def default_rho_h(self, T: float) -> float:
        if self.options.rho_h is not None:
            return self.options.rho_h
        hbar = T / self.n_fe
        return 0.1 / hbar ** 2

    # -- solution access ---------------------------------------------------
    def element_values(self, w, params):
        """Per-element stage data from a solved decision vector."""
        s = self.tableau.s
        n_x, n_c, n_th = self.n_x, self.n_c, self.n_theta
        w = np.asarray(w, dtype=float)
        out = []
        t0 = 0.0
        for n in range(self.n_fe):
            h = (float(w[self.ih[n][0]]) if self.mode == "fesd"
                 else float(params[self.p_T[0]]) / self.n_fe)
            entry = w[self.ix0] if n == 0 else w[self.ix_end[n - 1]]
            v = w[self.iv[n]].reshape(s, n_x)
            stage_x = np.array([
                entry + h * sum(self.tableau.A[i, j] * v[j] for j in range(s))
                for i in range(s)])
            out.append({
                "t0": t0,
                "h": h,
                "entry": entry.copy(),
                "exit": w[self.ix_end[n]].copy(),
                "stage_t": t0 + self.tableau.c * h,
                "stage_x": stage_x,
                "v": v,
                "theta": w[self.itheta[n]].reshape(s, n_th) if n_th else
                         np.zeros((s, 0)),
                "alpha": w[self.ialpha[n]].reshape(s, n_c),
                "lam_p": w[self.ilam_p[n]].reshape(s, n_c),
                "lam_n": w[self.ilam_n[n]].reshape(s, n_c),
            })
            t0 += h
        return out

    def terminal_state(self, w) -> np.ndarray:
        return np.asarray(w, dtype=float)[self.ix_end[-1]].copy()

    def terminal_multipliers(self, w) -> tuple[np.ndarray, np.ndarray]:
        s, n_c = self.tableau.s, self.n_c
        w = np.asarray(w, dtype=float)
        last = slice((s - 1) * n_c, s * n_c)
        lam_p = np.maximum(w[self.ilam_p[-1][last]], 0.0)
        lam_n = np.maximum(w[self.ilam_n[-1][last]], 0.0)
        return lam_p, lam_n


class _Alloc:
    def __init__(self):
        self.n = 0

    def block(self, k) -> np.ndarray:
        idx = np.arange(self.n, self.n + k)
        self.n += k
        return idx


def assemble_standard(tableau, dcs, n_fe, options=None) -> FesdProblem:
    """Fixed equal steps, stage-wise pairs only."""
    return FesdProblem(tableau, dcs, n_fe, mode="standard", options=options)


def assemble_fesd(tableau, dcs, n_fe, options=None) -> FesdProblem:
    """Step sizes free, multiplier continuity, cross pairs, equilibration."""
    return FesdProblem(tableau, dcs, n_fe, mode="fesd", options=options)


def check_cross_complementarity(problem: FesdProblem, w, params, eps) -> float:
    """Largest violation of the element-wise exclusivity property.

    On a solved problem with complementarity residual below ``eps``, for
    every element and component either all step values or all
    boundary-inclusive multipliers of the family must be (near) zero; the
    returned value is the max over elements/components/families of
    min(max step value, max multiplier), which should not exceed sqrt(eps).
    """
    s, n_c = problem.tableau.s, problem.n_c
    w = np.asarray(w, dtype=float)
    worst = 0.0
    for n in range(problem.n_fe):
        if n == 0:
            if problem.mode == "fesd":
                bp = w[problem.ilam00_p]
                bn = w[problem.ilam00_n]
            else:
                bp = params[problem.p_lam00_p]
                bn = params[problem.p_lam00_n]
        else:
            last = slice((s - 1) * n_c, s * n_c)
            bp = w[problem.ilam_p[n - 1][last]]
            bn = w[problem.ilam_n[n - 1][last]]
        alpha = w[problem.ialpha[n]].reshape(s, n_c)
        beta = w[problem.ibeta[n]].reshape(s, n_c)
        lam_p = np.vstack([bp, w[problem.ilam_p[n]].reshape(s, n_c)])
        lam_n = np.vstack([bn, w[problem.ilam_n[n]].reshape(s, n_c)])
        for j in range(n_c):
            worst = max(worst, min(alpha[:, j].max(), lam_n[:, j].max()))
            worst = max(worst, min(beta[:, j].max(), lam_p[:, j].max()))
    return worst
