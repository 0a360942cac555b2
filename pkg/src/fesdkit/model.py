"""Piecewise-smooth system descriptions and their complementarity form.

A system is given by switching functions ``c(x)``, a sign matrix whose rows
select regions by sign conditions ``S_ij * c_j(x) > 0``, and one vector field
per region.  The set-valued step function of ``c`` is the solution map of a
box-constrained linear program; its optimality conditions turn the region
selection into algebraic equations plus complementarity pairs, which is the
dynamic complementarity system (DCS) the discretization works on.

Three description modes are supported:

``sign-matrix``
    Region weights are products of step components fixed by the sign matrix.
``explicit-theta``
    The caller supplies the weight expressions in ``alpha`` directly (needed
    for unions and set differences that a single sign row cannot express).
    They are validated by sampling, not proof; disjoint/covering geometry
    stays the caller's obligation.
``step-general``
    A single right-hand side ``f(x, u, alpha)`` with ``alpha`` entering
    freely.  No simplex structure is assumed or checked.
"""

from __future__ import annotations

import numpy as np

from . import expr
from .errors import (DimensionMismatch, InvalidSignMatrix, SimplexCheckFailed)
from .expr import Expr, VectorFunction

MODES = ("sign-matrix", "explicit-theta", "step-general")

SIMPLEX_SAMPLES = 1000
SIMPLEX_SUM_TOL = 1e-9
SIMPLEX_NEG_TOL = 1e-9


def validate_sign_matrix(S) -> np.ndarray:
    S = np.asarray(S)
    if S.ndim != 2 or S.shape[0] < 1 or S.shape[1] < 1:
        raise InvalidSignMatrix(f"sign matrix must be 2-D and nonempty, got shape {S.shape}")
    if not np.isin(S, (-1, 0, 1)).all():
        bad = S[~np.isin(S, (-1, 0, 1))][0]
        raise InvalidSignMatrix(f"sign matrix entries must be in {{-1, 0, 1}}, found {bad}")
    zero_rows = np.where(~S.any(axis=1))[0]
    if zero_rows.size:
        raise InvalidSignMatrix(f"sign matrix row {zero_rows[0]} is all zeros")
    return S.astype(int)


def build_theta(S) -> list[Expr]:
    """Region-weight expressions in the step variables ``alpha``.

    Row i contributes the product over its nonzero columns j of ``alpha_j``
    when ``S_ij == 1`` and ``1 - alpha_j`` when ``S_ij == -1``.
    """
    S = validate_sign_matrix(S)
    n_f, n_c = S.shape
    one = expr.const(1.0)
    thetas = []
    for i in range(n_f):
        term = one
        for j in range(n_c):
            if S[i, j] == 1:
                term = term * expr.var("alpha", j)
            elif S[i, j] == -1:
                term = term * (one - expr.var("alpha", j))
        thetas.append(term)
    return thetas


def sample_partition_sign_matrix(n_c: int, rng, split_prob: float = 0.5) -> np.ndarray:
    """Random sign matrix whose rows partition sign space.

    Rows are generated by a recursive sign-tree: pick a column, branch on its
    sign, and either stop (emit the accumulated row, unused columns zero) or
    keep splitting.  The root always splits, so no row is all zeros, and the
    binary-tree structure makes the regions disjoint and covering.
    """
    if n_c < 1:
        raise DimensionMismatch("need at least one switching function")
    rows: list[np.ndarray] = []

    def rec(prefix: dict, avail: list):
        j = avail[int(rng.integers(len(avail)))]
        rest = [k for k in avail if k != j]
        for sign in (1, -1):
            child = dict(prefix)
            child[j] = sign
            if rest and rng.random() < split_prob:
                rec(child, rest)
            else:
                row = np.zeros(n_c, dtype=int)
                for k, s in child.items():
                    row[k] = s
                rows.append(row)

    rec({}, list(range(n_c)))
    return np.array(rows)


def boundary_multipliers(c_val) -> tuple[np.ndarray, np.ndarray]:
    """Multipliers consistent with given switching-function values.

    The positive part goes to the upper-bound multiplier, the magnitude of
    the negative part to the lower-bound one; componentwise their product is
    zero and their difference reproduces the input.
    """
    c = np.asarray(c_val, dtype=float)
    return np.maximum(c, 0.0), -np.minimum(c, 0.0)


def lp_step_oracle(c_val) -> list[tuple[float, float]]:
    """Per component the admissible step-value set as a closed interval.

    {1} for positive arguments, {0} for negative, [0, 1] on the boundary.
    Used as the reference the DCS solutions are tested against.
    """
    out = []
    for v in np.asarray(c_val, dtype=float):
        if v > 0:
            out.append((1.0, 1.0))
        elif v < 0:
            out.append((0.0, 0.0))
        else:
            out.append((0.0, 1.0))
    return out


class PssModel:
    """User-facing description of a piecewise-smooth system.

    :param n_x: state dimension
    :param n_u: control dimension (0 for autonomous systems)
    :param c: switching functions, a VectorFunction of ``x``
    :param S: sign matrix (sign-matrix mode), rows = regions
    :param F: list of region vector fields, VectorFunctions of ``(x, u)``
    :param theta: user weight expressions over ``alpha`` (explicit-theta mode)
    :param rhs: single right-hand side over ``(x, u, alpha)`` (step-general)
    :param name: label used in outputs
    """

    def __init__(self, n_x, n_u, c, S=None, F=None, theta=None, rhs=None,
                 mode="sign-matrix", name="model"):
        self.n_x = int(n_x)
        self.n_u = int(n_u)
        self.c = c
        self.S = None if S is None else validate_sign_matrix(S)
        self.F = F
        self.theta = theta
        self.rhs = rhs
        self.mode = mode
        self.name = name
        self.validate()

    @property
    def n_c(self) -> int:
        return self.c.n_out

    @property
    def n_f(self) -> int:
        if self.mode == "sign-matrix":
            return self.S.shape[0]
        if self.mode == "explicit-theta":
            return self.theta.n_out
        return 0

    def validate(self):
        if self.mode not in MODES:
            raise DimensionMismatch(f"unknown mode {self.mode!r}")
        if self.n_x < 1:
            raise DimensionMismatch("state dimension must be positive")
        if self.c is None or self.c.n_out < 1:
            raise DimensionMismatch("need at least one switching function")
        if self.c.input_length("x") != self.n_x:
            raise DimensionMismatch("switching functions disagree with n_x")
        if self.mode == "sign-matrix":
            if self.S is None or self.F is None:
                raise DimensionMismatch("sign-matrix mode needs S and F")
            if self.S.shape[1] != self.n_c:
                raise DimensionMismatch(
                    f"sign matrix has {self.S.shape[1]} columns for {self.n_c} "
                    "switching functions")
            if len(self.F) != self.S.shape[0]:
                raise DimensionMismatch(
                    f"{len(self.F)} vector fields for {self.S.shape[0]} sign rows")
        elif self.mode == "explicit-theta":
            if self.theta is None or self.F is None:
                raise DimensionMismatch("explicit-theta mode needs theta and F")
            if len(self.F) != self.theta.n_out:
                raise DimensionMismatch("need one vector field per weight")
        else:
            if self.rhs is None:
                raise DimensionMismatch("step-general mode needs rhs")
            if self.rhs.n_out != self.n_x:
                raise DimensionMismatch("rhs length disagrees with n_x")
        if self.F is not None:
            for i, f in enumerate(self.F):
                if f.n_out != self.n_x:
                    raise DimensionMismatch(f"vector field {i} has length "
                                            f"{f.n_out}, expected {self.n_x}")


class StepDcs:
    """Dynamic complementarity system assembled from a :class:`PssModel`.

    Carries the weight expressions, the smooth algebraic residual ``G``
    stacking the weight definitions and the multiplier identity
    ``c(x) - lam_p + lam_n``, the right-hand side, and the complementarity
    pair structure ``(lam_n, alpha)`` and ``(lam_p, 1 - alpha)`` kept as
    explicit pairs (composing them into C-functions is a solver choice that
    happens later).

    Stage algebraic variables are laid out ``[theta, alpha, lam_p, lam_n]``;
    ``offsets`` maps each block name to its start inside that stage vector.
    """

    def __init__(self, model: PssModel, theta_exprs: list[Expr],
                 G: VectorFunction, rhs: VectorFunction):
        self.model = model
        self.mode = model.mode
        self.n_x = model.n_x
        self.n_u = model.n_u
        self.n_c = model.n_c
        self.theta_exprs = theta_exprs
        self.n_theta = len(theta_exprs)
        self.G = G
        self.rhs = rhs
        self.offsets = {
            "theta": 0,
            "alpha": self.n_theta,
            "lam_p": self.n_theta + self.n_c,
            "lam_n": self.n_theta + 2 * self.n_c,
        }
        self.n_z = self.n_theta + 3 * self.n_c
        # descriptive pair structure; per stage point there are 2*n_c pairs
        self.pair_structure = (
            [("lam_n", j, "alpha", j) for j in range(self.n_c)]
            + [("lam_p", j, "one_minus_alpha", j) for j in range(self.n_c)])


def assemble_dcs(model: PssModel) -> StepDcs:
    """Build the DCS: weight definitions, multiplier identity, and dynamics."""
    n_c = model.n_c
    alpha = [expr.var("alpha", j) for j in range(n_c)]

    if model.mode == "sign-matrix":
        theta_exprs = build_theta(model.S)
    elif model.mode == "explicit-theta":
        _check_theta_simplex(model.theta, n_c)
        theta_exprs = expr.substitute(model.theta.outputs, {"alpha": alpha})
    else:
        theta_exprs = []

    n_theta = len(theta_exprs)
    g_rows = []
    for i in range(n_theta):
        g_rows.append(expr.var("theta", i) - theta_exprs[i])
    c_exprs = expr.substitute(model.c.outputs,
                              {"x": [expr.var("x", i) for i in range(model.n_x)]})
    for j in range(n_c):
        g_rows.append(c_exprs[j] - expr.var("lam_p", j) + expr.var("lam_n", j))

    g_inputs = [("x", model.n_x), ("theta", n_theta), ("alpha", n_c),
                ("lam_p", n_c), ("lam_n", n_c)]
    G = VectorFunction(g_inputs, g_rows, name=f"{model.name}_algebraic")

    x_vars = [expr.var("x", i) for i in range(model.n_x)]
    u_vars = [expr.var("u", i) for i in range(model.n_u)]
    if model.mode == "step-general":
        rhs_rows = expr.substitute(model.rhs.outputs,
                                   {"x": x_vars, "u": u_vars, "alpha": alpha})
        rhs = VectorFunction([("x", model.n_x), ("u", model.n_u), ("alpha", n_c)],
                             rhs_rows, name=f"{model.name}_rhs")
    else:
        rows = [expr.const(0.0) for _ in range(model.n_x)]
        for i, f in enumerate(model.F):
            fi = expr.substitute(f.outputs, {"x": x_vars, "u": u_vars})
            th = expr.var("theta", i)
            rows = [r + th * fe for r, fe in zip(rows, fi)]
        rhs = VectorFunction([("x", model.n_x), ("u", model.n_u), ("theta", n_theta)],
                             rows, name=f"{model.name}_rhs")
    return StepDcs(model, theta_exprs, G, rhs)


def _check_theta_simplex(theta: VectorFunction, n_c: int,
                         samples: int = SIMPLEX_SAMPLES, seed: int = 0):
    """Sampled check that user weights stay on the unit simplex.

    Sampling is a pragmatic guard, not a proof; a clean miss is reported with
    the offending sample.
    """
    rng = np.random.default_rng(seed)
    A = rng.uniform(0.0, 1.0, size=(n_c, samples))
    vals = theta.eval_many(A)
    sums = vals.sum(axis=0)
    bad = np.where(np.abs(sums - 1.0) > SIMPLEX_SUM_TOL)[0]
    if bad.size:
        k = int(bad[0])
        raise SimplexCheckFailed(
            f"weights sum to {sums[k]!r} (expected 1) at alpha={A[:, k].tolist()}",
            alpha=A[:, k])
    neg = np.where(vals.min(axis=0) < -SIMPLEX_NEG_TOL)[0]
    if neg.size:
        k = int(neg[0])
        raise SimplexCheckFailed(
            f"negative weight {vals[:, k].min()!r} at alpha={A[:, k].tolist()}",
            alpha=A[:, k])


def build_model(n_x, n_u, c_strings, S=None, f_strings=None, theta_strings=None,
                rhs_strings=None, mode="sign-matrix", params=None,
                name="model") -> PssModel:
    """Construct a model from expression strings (the file-format entry path)."""
    params = dict(params or {})
    base = {"x": n_x, **params}
    if n_u:
        base["u"] = n_u
    c = VectorFunction([("x", n_x)], [expr.parse(s, base) for s in c_strings],
                       name=f"{name}_c")
    n_c = c.n_out
    F = None
    if f_strings is not None:
        F = [VectorFunction([("x", n_x), ("u", n_u)],
                            [expr.parse(s, base) for s in field],
                            name=f"{name}_f{i + 1}")
             for i, field in enumerate(f_strings)]
    theta = None
    if theta_strings is not None:
        tsyms = {"alpha": n_c, **params}
        theta = VectorFunction([("alpha", n_c)],
                               [expr.parse(s, tsyms) for s in theta_strings],
                               name=f"{name}_theta")
    rhs = None
    if rhs_strings is not None:
        rsyms = {"x": n_x, "alpha": n_c, **params}
        if n_u:
            rsyms["u"] = n_u
        rhs = VectorFunction([("x", n_x), ("u", n_u), ("alpha", n_c)],
                             [expr.parse(s, rsyms) for s in rhs_strings],
                             name=f"{name}_rhs")
    return PssModel(n_x, n_u, c, S=S, F=F, theta=theta, rhs=rhs,
                    mode=mode, name=name)
