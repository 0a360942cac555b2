"""Simulation and optimal control of piecewise-smooth dynamical systems.

The pipeline: describe a switched system by sign conditions on switching
functions, rewrite it as a dynamic complementarity system through the
set-valued step function's LP optimality conditions, discretize with
switch-detecting implicit Runge-Kutta collocation, and solve the resulting
mathematical programs with complementarity constraints by a relaxation
homotopy around an embedded interior-point NLP solver.
"""

from . import expr
from .errors import (ConfigError, DimensionMismatch, DomainError,
                     ExprSyntaxError, FesdkitError, InfeasibleBounds,
                     InvalidSignMatrix, NanDetected, NlpError,
                     SimplexCheckFailed, SingularKkt, StepFailed,
                     TableauNotStifflyAccurate, UnknownBenchmark,
                     UnknownStrategy, UnknownSymbol, UnsupportedStageCount)
from .expr import Expr, VectorFunction, parse

__all__ = [
    "expr", "Expr", "VectorFunction", "parse",
    "ConfigError", "DimensionMismatch", "DomainError", "ExprSyntaxError",
    "FesdkitError", "InfeasibleBounds", "InvalidSignMatrix", "NanDetected",
    "NlpError", "SimplexCheckFailed", "SingularKkt", "StepFailed",
    "TableauNotStifflyAccurate", "UnknownBenchmark", "UnknownStrategy",
    "UnknownSymbol", "UnsupportedStageCount",
]
