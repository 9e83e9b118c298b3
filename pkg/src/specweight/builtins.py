"""Named weights, domains and test functions used by the experiments and CLI."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgument
from .weights import (Box, Chebyshev1D, Constant, IndicatorComposite, Interval, InvSqrt1D, PolyFactor,
                      RadialPower, StructureMap, Triangle, breaks_1d, lshape, point_singularity)

UNIT = Interval(-1.0, 1.0)
SQUARE = Box(((-1.0, 1.0), (-1.0, 1.0)))
#: ``{-1/2 <= x <= 1/2, -1/2 <= y <= -x}``
Q_TRIANGLE = Triangle(((-0.5, -0.5), (0.5, -0.5), (-0.5, 0.5)))
Q_INTERVAL = Interval(-0.5, 0.5)
#: ``{0 <= x <= 1, 0 <= y <= x}``
TRIANGLE = Triangle(((0.0, 0.0), (1.0, 0.0), (1.0, 1.0)))
LSHAPE = lshape()


@dataclass(frozen=True)
class WeightEntry:
    weight: object
    domain: object
    description: str


WEIGHTS = {
    "legendre1d": WeightEntry(Constant(0.5), UNIT, "1/2 on [-1, 1]"),
    "quadratic1d": WeightEntry(PolyFactor((((0,), 0.75), ((2,), -0.75))), UNIT, "(3/4)(1 - x^2) on [-1, 1]"),
    "chebyshev1d": WeightEntry(Chebyshev1D(), UNIT, "1/sqrt(1 - x^2) on [-1, 1], not normalized"),
    "invsqrt1d": WeightEntry(InvSqrt1D(), UNIT, "1/(2 sqrt(1 - |x|)) on [-1, 1], not normalized"),
    "indicator1d": WeightEntry(IndicatorComposite(1.0 / 3.0, Q_INTERVAL), UNIT,
                               "(1/3)(chi_Q + 1), Q = [-1/2, 1/2], on [-1, 1]"),
    "legendre2d": WeightEntry(Constant(0.25), SQUARE, "1/4 on [-1, 1]^2"),
    "indicator2d": WeightEntry(IndicatorComposite(2.0 / 9.0, Q_TRIANGLE), SQUARE,
                               "(2/9)(chi_Q + 1), Q = {-1/2 <= x <= 1/2, -1/2 <= y <= -x}, on [-1, 1]^2"),
    "triangle": WeightEntry(Constant(2.0), TRIANGLE, "2 on {0 <= x <= 1, 0 <= y <= x}"),
    "lshape_radial": WeightEntry(RadialPower(0.25), LSHAPE, "(x^2 + y^2)^(1/4) on the L-shape"),
    "lshape_uniform": WeightEntry(Constant(1.0 / 3.0), LSHAPE, "1/3 on the L-shape"),
}


@dataclass(frozen=True)
class FunctionEntry:
    fn: object
    dimension: int
    structure: StructureMap
    description: str

    def __call__(self, x):
        return self.fn(np.asarray(x, dtype=float).reshape(-1, self.dimension))


def _x(p):
    return p[:, 0]


def _y(p):
    return p[:, 1]


def ex1_f(p):
    return np.sin(10 * _x(p)) + np.cos(8 * _x(p))


def ex1_g(p):
    s = _x(p) + 0.5
    return s ** 3 * np.abs(s)


def ex1_h(p):
    return np.abs(_x(p) + 0.5)


def ex3_f(p):
    return np.sin(4 * (_x(p) + _y(p))) + np.cos(6 * (_x(p) - _y(p)))


def ex3_g(p):
    return ex3_f(p) * WEIGHTS["indicator2d"].weight(p)


def lshape_fr(p):
    return np.cos(_x(p) + _y(p))


def lshape_fs(p):
    return (_x(p) ** 2 + _y(p) ** 2) ** 0.25


def lshape_f(p):
    return lshape_fr(p) * lshape_fs(p)


def int1_f(p):
    return np.exp(1.1 * _x(p)) + np.cos(1.2 * _x(p))


def int2_f(p):
    return np.sin(1.1 * (_x(p) + _y(p))) + np.cos(1.2 * (_x(p) - _y(p)))


def gpc_u(p):
    return np.cos(_x(p) - _y(p)) + np.sin(1.1 * (_x(p) + _y(p))) + 4.0


_KINK = breaks_1d(-0.5)
_ORIGIN = point_singularity((0.0, 0.0), 0.5)

FUNCTIONS = {
    "ex1_f": FunctionEntry(ex1_f, 1, StructureMap(), "sin(10x) + cos(8x)"),
    "ex1_g": FunctionEntry(ex1_g, 1, _KINK, "(x + 1/2)^3 |x + 1/2|"),
    "ex1_h": FunctionEntry(ex1_h, 1, _KINK, "|x + 1/2|"),
    "ex3_f": FunctionEntry(ex3_f, 2, StructureMap(), "sin(4(x + y)) + cos(6(x - y))"),
    "ex3_g": FunctionEntry(ex3_g, 2, StructureMap(regions=(Q_TRIANGLE,)), "ex3_f * (2/9)(chi_Q + 1)"),
    "lshape_f": FunctionEntry(lshape_f, 2, _ORIGIN, "cos(x + y) (x^2 + y^2)^(1/4)"),
    "lshape_fr": FunctionEntry(lshape_fr, 2, StructureMap(), "cos(x + y)"),
    "int1_f": FunctionEntry(int1_f, 1, StructureMap(), "exp(1.1x) + cos(1.2x)"),
    "int2_f": FunctionEntry(int2_f, 2, StructureMap(), "sin(1.1(x + y)) + cos(1.2(x - y))"),
    "gpc_u": FunctionEntry(gpc_u, 2, StructureMap(), "cos(z1 - z2) + sin(1.1(z1 + z2)) + 4"),
    "one1d": FunctionEntry(lambda p: np.ones(p.shape[0]), 1, StructureMap(), "1"),
    "one2d": FunctionEntry(lambda p: np.ones(p.shape[0]), 2, StructureMap(), "1"),
}


def weight_entry(name: str) -> WeightEntry:
    try:
        return WEIGHTS[name]
    except KeyError:
        raise InvalidArgument(f"unknown builtin weight {name!r}; choose from {sorted(WEIGHTS)}") from None


def function_entry(name: str) -> FunctionEntry:
    try:
        return FUNCTIONS[name]
    except KeyError:
        raise InvalidArgument(f"unknown builtin function {name!r}; choose from {sorted(FUNCTIONS)}") from None
