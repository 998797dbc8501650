"""Economic primitives shared by every solver in the package.

This module holds the market description (inverse demand, per-firm cost
functions) and the handful of numeric building blocks everything else is
written in terms of: prices, profits, first-order conditions, central
difference quotients, and surplus integrals.

Quantities are plain floats.  Demand and cost objects with a ``linear`` or
``quadratic`` kind carry analytic derivatives; ``custom`` kinds fall back to
central differences of the supplied callable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

from .errors import EvaluationError, NumericsError

_EPS = 2.0 ** -52


@dataclass(frozen=True)
class DiffConfig:
    """Step-size policy for central difference quotients.

    The step at a point x is ``max(h_abs, h_rel * |x|)``.
    """

    h_rel: float
    h_abs: float = 1e-6

    def step(self, x: float) -> float:
        return max(self.h_abs, self.h_rel * abs(x))


# Truncation/roundoff balance: cube root of machine epsilon for first
# derivatives, fourth root for second derivatives.
DIFF1_DEFAULT = DiffConfig(h_rel=_EPS ** (1.0 / 3.0))
DIFF2_DEFAULT = DiffConfig(h_rel=_EPS ** 0.25)


@dataclass(frozen=True)
class DemandSpec:
    """Inverse demand curve P(Q) for total market output Q.

    Two kinds are supported:

    * ``linear``: P(Q) = intercept - slope * Q with intercept > 0, slope > 0.
    * ``custom``: an arbitrary evaluable scalar function of Q.
    """

    kind: str
    intercept: float = 0.0
    slope: float = 0.0
    func: Callable[[float], float] | None = None

    def __post_init__(self):
        if self.kind == "linear":
            if not (self.slope > 0.0):
                raise ValueError(f"linear demand needs slope > 0, got {self.slope}")
            if not (self.intercept > 0.0):
                raise ValueError(f"linear demand needs intercept > 0, got {self.intercept}")
        elif self.kind == "custom":
            if self.func is None:
                raise ValueError("custom demand needs an evaluable function")
        else:
            raise ValueError(f"unknown demand kind {self.kind!r}")

    @staticmethod
    def linear(intercept: float, slope: float) -> "DemandSpec":
        return DemandSpec(kind="linear", intercept=float(intercept), slope=float(slope))

    @staticmethod
    def custom(func: Callable[[float], float]) -> "DemandSpec":
        return DemandSpec(kind="custom", func=func)


@dataclass(frozen=True)
class CostSpec:
    """Per-firm production cost c(t).

    * ``linear``: c(t) = coefficient * t
    * ``quadratic``: c(t) = coefficient * t**2
    * ``custom``: arbitrary evaluable function of t
    """

    kind: str
    coefficient: float = 0.0
    func: Callable[[float], float] | None = None

    def __post_init__(self):
        if self.kind in ("linear", "quadratic"):
            if self.coefficient < 0.0:
                raise ValueError(f"cost coefficient must be >= 0, got {self.coefficient}")
        elif self.kind == "custom":
            if self.func is None:
                raise ValueError("custom cost needs an evaluable function")
        else:
            raise ValueError(f"unknown cost kind {self.kind!r}")

    @staticmethod
    def linear(coefficient: float) -> "CostSpec":
        return CostSpec(kind="linear", coefficient=float(coefficient))

    @staticmethod
    def quadratic(coefficient: float) -> "CostSpec":
        return CostSpec(kind="quadratic", coefficient=float(coefficient))

    @staticmethod
    def custom(func: Callable[[float], float]) -> "CostSpec":
        return CostSpec(kind="custom", func=func)


@dataclass(frozen=True)
class MarketSpec:
    """A market: firm count, one demand curve, one cost function per firm."""

    n: int
    demand: DemandSpec
    costs: tuple[CostSpec, ...]

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"need at least one firm, got n={self.n}")
        if len(self.costs) != self.n:
            raise ValueError(f"expected {self.n} cost functions, got {len(self.costs)}")

    @staticmethod
    def symmetric(n: int, demand: DemandSpec, cost: CostSpec) -> "MarketSpec":
        """All firms share one cost function."""
        return MarketSpec(n=n, demand=demand, costs=(cost,) * n)


def _checked(value: float, what: str) -> float:
    if not math.isfinite(value):
        raise EvaluationError(f"{what} evaluated to a non-finite value: {value!r}")
    return value


def price(demand: DemandSpec, quantity: float) -> float:
    """Market price at total output ``quantity``.

    Linear demand may return a negative price for large quantities; no
    clamping is applied so iterative solvers see the raw curve.
    """
    if demand.kind == "linear":
        return demand.intercept - demand.slope * quantity
    try:
        value = demand.func(quantity)
    except Exception as exc:
        raise EvaluationError(f"demand function failed at Q={quantity}") from exc
    return _checked(value, "demand")


def price_slope(demand: DemandSpec, quantity: float, cfg: DiffConfig | None = None) -> float:
    """dP/dQ, analytic for linear demand, central difference otherwise."""
    if demand.kind == "linear":
        return -demand.slope
    return diff1(lambda q: price(demand, q), quantity, cfg)


def price_curvature(demand: DemandSpec, quantity: float, cfg: DiffConfig | None = None) -> float:
    """d2P/dQ2, analytic for linear demand, three-point stencil otherwise."""
    if demand.kind == "linear":
        return 0.0
    return diff2(lambda q: price(demand, q), quantity, cfg)


def cost_value(cost: CostSpec, output: float) -> float:
    """Total production cost at ``output``."""
    if cost.kind == "linear":
        return cost.coefficient * output
    if cost.kind == "quadratic":
        return cost.coefficient * output * output
    try:
        value = cost.func(output)
    except Exception as exc:
        raise EvaluationError(f"cost function failed at t={output}") from exc
    return _checked(value, "cost")


def marginal_cost(cost: CostSpec, output: float, cfg: DiffConfig | None = None) -> float:
    if cost.kind == "linear":
        return cost.coefficient
    if cost.kind == "quadratic":
        return 2.0 * cost.coefficient * output
    return diff1(lambda t: cost_value(cost, t), output, cfg)


def cost_curvature(cost: CostSpec, output: float, cfg: DiffConfig | None = None) -> float:
    if cost.kind == "linear":
        return 0.0
    if cost.kind == "quadratic":
        return 2.0 * cost.coefficient
    return diff2(lambda t: cost_value(cost, t), output, cfg)


def profit(market: MarketSpec, firm: int, outputs: Sequence[float]) -> float:
    """Profit of ``firm``: own output times market price, minus own cost.

    Args:
        market: the market description.
        firm: zero-based firm index.
        outputs: one output level per firm.

    Raises:
        ValueError: if the index or the output vector length is wrong.
    """
    if not 0 <= firm < market.n:
        raise ValueError(f"firm index {firm} out of range for n={market.n}")
    if len(outputs) != market.n:
        raise ValueError(f"expected {market.n} outputs, got {len(outputs)}")
    total = math.fsum(outputs)
    own = outputs[firm]
    return own * price(market.demand, total) - cost_value(market.costs[firm], own)


def own_first_order(market: MarketSpec, firm: int, outputs: Sequence[float]) -> float:
    """Partial derivative of firm profit in its own output.

    Evaluates P(Q) + q_i * P'(Q) - c_i'(q_i) from the demand and cost
    derivatives directly; this keeps the arithmetic at price scale rather
    than profit scale, which matters for the precision of the root finds
    built on top of it.
    """
    total = math.fsum(outputs)
    own = outputs[firm]
    return (
        price(market.demand, total)
        + own * price_slope(market.demand, total)
        - marginal_cost(market.costs[firm], own)
    )


def own_curvature(market: MarketSpec, firm: int, outputs: Sequence[float]) -> float:
    """Second partial of firm profit in its own output: 2P' + q_i P'' - c_i''."""
    total = math.fsum(outputs)
    own = outputs[firm]
    return (
        2.0 * price_slope(market.demand, total)
        + own * price_curvature(market.demand, total)
        - cost_curvature(market.costs[firm], own)
    )


def diff1(f: Callable[[float], float], x: float, cfg: DiffConfig | None = None) -> float:
    """Central difference estimate of f'(x)."""
    cfg = cfg or DIFF1_DEFAULT
    h = cfg.step(x)
    try:
        hi = f(x + h)
        lo = f(x - h)
    except EvaluationError:
        raise
    except Exception as exc:
        raise EvaluationError(f"function failed near x={x}") from exc
    value = (hi - lo) / (2.0 * h)
    return _checked(value, "first derivative")


def diff2(f: Callable[[float], float], x: float, cfg: DiffConfig | None = None) -> float:
    """Three-point stencil estimate of f''(x)."""
    cfg = cfg or DIFF2_DEFAULT
    h = cfg.step(x)
    try:
        hi = f(x + h)
        mid = f(x)
        lo = f(x - h)
    except EvaluationError:
        raise
    except Exception as exc:
        raise EvaluationError(f"function failed near x={x}") from exc
    value = (hi - 2.0 * mid + lo) / (h * h)
    return _checked(value, "second derivative")


def consumer_surplus(demand: DemandSpec, quantity: float) -> float:
    """Area under the demand curve above the market price on [0, quantity].

    Linear demand has the closed form slope * Q^2 / 2.  Custom demand is
    integrated with adaptive Simpson quadrature to 1e-9 relative accuracy
    (1e-6 absolute floor).
    """
    if quantity < 0.0:
        raise ValueError(f"quantity must be >= 0, got {quantity}")
    if quantity == 0.0:
        return 0.0
    if demand.kind == "linear":
        return 0.5 * demand.slope * quantity * quantity
    integral = _adaptive_simpson(lambda q: price(demand, q), 0.0, quantity,
                                 rel_tol=1e-9, abs_tol=1e-6)
    return integral - quantity * price(demand, quantity)


def total_surplus(market: MarketSpec, outputs: Sequence[float],
                  demand: DemandSpec | None = None) -> float:
    """Consumer surplus plus the sum of firm profits.

    ``demand`` defaults to the market's own demand curve.
    """
    demand = demand or market.demand
    total = math.fsum(outputs)
    cs = consumer_surplus(demand, total)
    return cs + math.fsum(profit(market, i, outputs) for i in range(market.n))


_SIMPSON_MAX_DEPTH = 48


def _simpson(f, a, fa, b, fb):
    m = 0.5 * (a + b)
    fm = f(m)
    return m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb)


def _adaptive_simpson(f, a: float, b: float, rel_tol: float, abs_tol: float) -> float:
    fa, fb = f(a), f(b)
    m, fm, whole = _simpson(f, a, fa, b, fb)

    def recurse(a, fa, b, fb, m, fm, whole, tol, depth):
        lm, flm, left = _simpson(f, a, fa, m, fm)
        rm, frm, right = _simpson(f, m, fm, b, fb)
        delta = left + right - whole
        if abs(delta) <= 15.0 * tol:
            return left + right + delta / 15.0
        if depth >= _SIMPSON_MAX_DEPTH:
            raise NumericsError(
                f"quadrature failed to converge on [{a}, {b}] (recursion depth {depth})")
        half = 0.5 * tol
        return (recurse(a, fa, m, fm, lm, flm, left, half, depth + 1)
                + recurse(m, fm, b, fb, rm, frm, right, half, depth + 1))

    tol = max(abs_tol, rel_tol * abs(whole))
    return recurse(a, fa, b, fb, m, fm, whole, tol, 0)
