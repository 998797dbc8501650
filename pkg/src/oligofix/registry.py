"""Named demand, cost, and affine-system presets for the CLI.

The CLI never parses arbitrary expressions; custom functional forms enter
through this registry (or through the library API directly).
"""

from __future__ import annotations

import math

from .errors import ConfigError
from .market import CostSpec, DemandSpec
from .responses import ResponseSystem

DEMAND_NAMES = ("linear-demand", "arctan-demand")
COST_NAMES = ("linear-cost", "quadratic-cost", "exp-cost")
SYSTEM_NAMES = ("stackelberg-affine", "divergent-affine")

# Default root-search interval for presets whose demand is not linear.
CUSTOM_BRACKETS = {"arctan-demand": (0.0, 10.0)}


def build_demand(name: str, A: float | None, B: float | None) -> DemandSpec:
    if name == "linear-demand":
        if A is None:
            raise ConfigError("A", "linear-demand requires an intercept")
        if B is None:
            raise ConfigError("B", "linear-demand requires a slope")
        return DemandSpec.linear(A, B)
    if name == "arctan-demand":
        return DemandSpec.custom(lambda q: 10.0 - math.atan(q))
    raise ConfigError("demand", f"unknown demand preset {name!r}; choose from {DEMAND_NAMES}")


def build_cost(name: str, c: float | None) -> CostSpec:
    if name == "linear-cost":
        if c is None:
            raise ConfigError("c", "linear-cost requires a coefficient")
        return CostSpec.linear(c)
    if name == "quadratic-cost":
        if c is None:
            raise ConfigError("c", "quadratic-cost requires a coefficient")
        return CostSpec.quadratic(c)
    if name == "exp-cost":
        return CostSpec.custom(lambda t: t * math.exp(t))
    raise ConfigError("cost", f"unknown cost preset {name!r}; choose from {COST_NAMES}")


def build_affine_system(name: str) -> ResponseSystem:
    """The two worked affine stage-map systems, coefficients kept as exact ratios."""
    if name == "stackelberg-affine":
        return ResponseSystem.explicit_linear(
            matrix=[[379 / 420, 0.0, 0.0],
                    [-1 / 30, 53 / 60, 0.0],
                    [-1 / 20, -1 / 20, 17 / 20]],
            offset=[14760.0, 20664.0, 30996.0],
        )
    if name == "divergent-affine":
        return ResponseSystem.explicit_linear(
            matrix=[[-2990591 / 722420, 0.0, 0.0],
                    [-21 / 41, -61 / 820, 0.0],
                    [-1.0, -1.0, -21 / 20]],
            offset=[7318836 / 881, 15876.0, 30996.0],
        )
    raise ConfigError("system", f"unknown system preset {name!r}; choose from {SYSTEM_NAMES}")
