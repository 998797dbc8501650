"""Stage response maps for the three-firm sequential market.

The sequential (leader / middle / follower) equilibrium is recast as a fixed
point: each stage map equals the stage optimality condition plus the
identity, so a coordinate is fixed exactly when that stage's first-order
condition holds.  Four system flavours are supported:

* ``reduced``      - backward-induction stages: the leader map depends on x
                     alone, the middle map on (x, y), the follower map on all
                     three coordinates.  Default for equilibrium work.
* ``general``      - the fully composed variant in which every stage map is a
                     total derivative of the composed payoff plus identity.
* ``explicit``     - an affine system given by a 3x3 matrix and offsets,
                     mainly for testing iteration behaviour bit-exactly.
* ``cournot``      - simultaneous best-response form: every firm's map is its
                     own first-order condition plus identity.

Inner one-dimensional solves (the follower and middle best responses) use a
bracketing root find on price-scale arithmetic; their slopes come from the
implicit-function ratio by default, which keeps the composed maps accurate
to roughly 1e-7 absolute even at output scales of 1e5.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

from .errors import NumericsError
from .market import (
    DIFF1_DEFAULT,
    DiffConfig,
    MarketSpec,
    cost_curvature,
    diff1,
    marginal_cost,
    price,
    price_curvature,
    price_slope,
    profit,
)
from .roots import brent


class OutputTriple(NamedTuple):
    """Production levels in play order: x leads, y is second, z follows."""

    x: float
    y: float
    z: float


def as_triple(p: Sequence[float]) -> OutputTriple:
    if len(p) != 3:
        raise ValueError(f"expected three coordinates, got {len(p)}")
    return OutputTriple(float(p[0]), float(p[1]), float(p[2]))


@dataclass(frozen=True)
class InnerSolveConfig:
    """Controls for the stage best-response root finds.

    ``bracket`` is the search interval for both the follower and middle
    solves; ``None`` lets linear-demand systems derive one.  ``tol`` is the
    acceptable residual of the stage condition at the returned point and is
    checked after the solve; the bracketing itself always runs down to
    ``xtol`` plus machine precision.
    """

    bracket: tuple[float, float] | None = None
    tol: float = 1e-6
    max_iter: int = 200
    xtol: float = 1e-12


# Steps for differentiating *solved* response functions.  These are much
# coarser than payoff-derivative steps on purpose: the best responses are
# close to affine in the markets of interest, so truncation is negligible,
# while root-solver noise shrinks linearly with the step.
SOLVED_DIFF_DEFAULT = DiffConfig(h_rel=1e-2, h_abs=1e-3)

MODES = ("reduced", "general", "explicit", "cournot")


@dataclass(frozen=True)
class ResponseSystem:
    """An evaluable stage-map system; immutable and safe to share."""

    mode: str
    market: MarketSpec | None = None
    diff: DiffConfig = DIFF1_DEFAULT
    solved_diff: DiffConfig = SOLVED_DIFF_DEFAULT
    inner: InnerSolveConfig = field(default_factory=InnerSolveConfig)
    matrix: tuple[tuple[float, float, float], ...] | None = None
    offset: tuple[float, float, float] | None = None

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}; expected one of {MODES}")
        if self.mode == "explicit":
            if self.matrix is None or self.offset is None:
                raise ValueError("explicit systems need matrix and offset")
            if len(self.matrix) != 3 or any(len(r) != 3 for r in self.matrix):
                raise ValueError("matrix must be 3x3")
            if len(self.offset) != 3:
                raise ValueError("offset must have three entries")
            flat = [v for r in self.matrix for v in r] + list(self.offset)
            if not all(math.isfinite(v) for v in flat):
                raise ValueError("matrix and offset must be finite")
            return
        if self.market is None:
            raise ValueError(f"{self.mode} systems need a market")
        if self.market.n != 3:
            raise ValueError(f"{self.mode} systems need exactly three firms, got n={self.market.n}")
        if self.inner.bracket is None:
            if self.market.demand.kind != "linear":
                raise ValueError("custom demand needs an explicit root bracket in InnerSolveConfig")
            # Symmetric around zero: middle-stage probes can require a
            # transiently negative follower output.
            cap = 10.0 * self.market.demand.intercept / self.market.demand.slope
            object.__setattr__(self, "inner",
                               InnerSolveConfig(bracket=(-cap, cap), tol=self.inner.tol,
                                                max_iter=self.inner.max_iter, xtol=self.inner.xtol))

    # -- constructors ------------------------------------------------------

    @staticmethod
    def reduced(market: MarketSpec, inner: InnerSolveConfig | None = None,
                diff: DiffConfig = DIFF1_DEFAULT,
                solved_diff: DiffConfig = SOLVED_DIFF_DEFAULT) -> "ResponseSystem":
        return ResponseSystem(mode="reduced", market=market, diff=diff,
                              solved_diff=solved_diff, inner=inner or InnerSolveConfig())

    @staticmethod
    def general(market: MarketSpec, inner: InnerSolveConfig | None = None,
                diff: DiffConfig = DIFF1_DEFAULT,
                solved_diff: DiffConfig = SOLVED_DIFF_DEFAULT) -> "ResponseSystem":
        return ResponseSystem(mode="general", market=market, diff=diff,
                              solved_diff=solved_diff, inner=inner or InnerSolveConfig())

    @staticmethod
    def cournot(market: MarketSpec, inner: InnerSolveConfig | None = None,
                diff: DiffConfig = DIFF1_DEFAULT) -> "ResponseSystem":
        return ResponseSystem(mode="cournot", market=market, diff=diff,
                              inner=inner or InnerSolveConfig())

    @staticmethod
    def explicit_linear(matrix: Sequence[Sequence[float]],
                        offset: Sequence[float]) -> "ResponseSystem":
        return ResponseSystem(
            mode="explicit",
            matrix=tuple(tuple(float(v) for v in row) for row in matrix),
            offset=tuple(float(v) for v in offset),
        )

    # -- stage first-order conditions --------------------------------------

    def _own_foc(self, firm: int, x: float, y: float, z: float) -> float:
        # Price-scale variant of market.own_first_order; called inside
        # root-find loops, so it avoids fsum and sequence packing.
        total = x + y + z
        own = (x, y, z)[firm]
        d = self.market.demand
        p = price(d, total)
        ps = -d.slope if d.kind == "linear" else price_slope(d, total, self.diff)
        return p + own * ps - marginal_cost(self.market.costs[firm], own, self.diff)

    def follower_foc(self, x: float, y: float, z: float) -> float:
        """Follower's own first-order condition at (x, y, z)."""
        if self.mode == "explicit":
            return self.follower((x, y, z)) - z
        return self._own_foc(2, x, y, z)

    def follower_response(self, x: float, y: float) -> float:
        """Follower best response: root of its first-order condition in z."""
        lo, hi = self.inner.bracket
        root = brent(lambda z: self.follower_foc(x, y, z), lo, hi,
                     xtol=self.inner.xtol, max_iter=self.inner.max_iter)
        resid = self.follower_foc(x, y, root)
        if abs(resid) > self.inner.tol:
            raise NumericsError(
                f"follower solve left residual {resid:.3e} > tol {self.inner.tol:.3e}")
        return root

    def follower_slopes(self, x: float, y: float, z: float) -> tuple[float, float]:
        """(d/dx, d/dy) of the solved follower response, implicit-function form.

        The follower condition depends on x and y only through total output,
        so both slopes coincide for derivative modes.
        """
        if self.mode == "explicit":
            den = self.matrix[2][2] - 1.0
            return (-self.matrix[2][0] / den, -self.matrix[2][1] / den)
        d = self.market.demand
        total = x + y + z
        ps = price_slope(d, total, self.diff)
        pc = price_curvature(d, total, self.diff)
        cross = ps + z * pc                                  # d(foc)/dx == d(foc)/dy
        den = 2.0 * ps + z * pc - cost_curvature(self.market.costs[2], z, self.diff)
        slope = -cross / den
        return (slope, slope)

    def follower_slopes_fd(self, x: float, y: float) -> tuple[float, float]:
        """Same slopes by central differences of the solved response.

        Cross-check path; noisier than the implicit-function ratio because
        the root-solver error is amplified by the step division.
        """
        hx = self.solved_diff.step(x)
        hy = self.solved_diff.step(y)
        sx = (self.follower_response(x + hx, y) - self.follower_response(x - hx, y)) / (2.0 * hx)
        sy = (self.follower_response(x, y + hy) - self.follower_response(x, y - hy)) / (2.0 * hy)
        return (sx, sy)

    def middle_stage(self, x: float, y: float) -> float:
        """Middle-stage optimality value; zero exactly at the best response.

        Derivative modes return the total derivative in y of the middle
        firm's payoff with the follower already substituted out.
        """
        if self.mode == "explicit":
            z = self.follower_response(x, y)
            return self.middle((x, y, z)) - y
        z = self.follower_response(x, y)
        _, sy = self.follower_slopes(x, y, z)
        d = self.market.demand
        total = x + y + z
        ps = -d.slope if d.kind == "linear" else price_slope(d, total, self.diff)
        own = price(d, total) + y * ps - marginal_cost(self.market.costs[1], y, self.diff)
        return own + (y * ps) * sy

    def middle_response(self, x: float) -> float:
        """Middle best response: root of the middle-stage condition in y."""
        lo, hi = self.inner.bracket
        root = brent(lambda y: self.middle_stage(x, y), lo, hi,
                     xtol=self.inner.xtol, max_iter=self.inner.max_iter)
        resid = self.middle_stage(x, root)
        if abs(resid) > self.inner.tol:
            raise NumericsError(
                f"middle solve left residual {resid:.3e} > tol {self.inner.tol:.3e}")
        return root

    def leader_stage(self, x: float) -> float:
        """Leader-stage optimality value with both responses substituted."""
        y = self.middle_response(x)
        z = self.follower_response(x, y)
        if self.mode == "explicit":
            return self.leader((x, y, z)) - x
        h = self.solved_diff.step(x)
        yp = (self.middle_response(x + h) - self.middle_response(x - h)) / (2.0 * h)
        sx, sy = self.follower_slopes(x, y, z)
        zp = sx + sy * yp
        d = self.market.demand
        total = x + y + z
        ps = -d.slope if d.kind == "linear" else price_slope(d, total, self.diff)
        own = price(d, total) + x * ps - marginal_cost(self.market.costs[0], x, self.diff)
        return own + (x * ps) * (yp + zp)

    def middle_curvature(self, x: float, y: float) -> float:
        """Second derivative of the middle firm's substituted payoff in y."""
        h = self.solved_diff.step(y)
        return (self.middle_stage(x, y + h) - self.middle_stage(x, y - h)) / (2.0 * h)

    def leader_curvature(self, x: float) -> float:
        """Second derivative of the leader's fully substituted payoff."""
        h = self.solved_diff.step(x)
        return (self.leader_stage(x + h) - self.leader_stage(x - h)) / (2.0 * h)

    # -- the stage maps (optimality condition + identity) ------------------

    def follower(self, p: Sequence[float]) -> float:
        x, y, z = p
        if self.mode == "explicit":
            row = self.matrix[2]
            return row[0] * x + row[1] * y + row[2] * z + self.offset[2]
        return self.follower_foc(x, y, z) + z

    def middle(self, p: Sequence[float]) -> float:
        x, y, z = p
        if self.mode == "explicit":
            row = self.matrix[1]
            return row[0] * x + row[1] * y + row[2] * z + self.offset[1]
        if self.mode == "cournot":
            return self._own_foc(1, x, y, z) + y
        if self.mode == "reduced":
            return self.middle_stage(x, y) + y
        # general: total y-derivative of the middle payoff composed with the
        # follower map, the map's y-slope taken by central difference
        w = self.follower((x, y, z))
        h = self.diff.step(y)
        dwdy = (self.follower((x, y + h, z)) - self.follower((x, y - h, z))) / (2.0 * h)
        d = self.market.demand
        total = x + y + w
        ps = price_slope(d, total, self.diff)
        own = price(d, total) + y * ps - marginal_cost(self.market.costs[1], y, self.diff)
        return own + (y * ps) * dwdy + y

    def leader(self, p: Sequence[float]) -> float:
        x, y, z = p
        if self.mode == "explicit":
            row = self.matrix[0]
            return row[0] * x + row[1] * y + row[2] * z + self.offset[0]
        if self.mode == "cournot":
            return self._own_foc(0, x, y, z) + x
        if self.mode == "reduced":
            return self.leader_stage(x) + x

        # general: derivative of the leader payoff composed with both maps
        def composed(t: float) -> float:
            w = self.follower((t, y, z))
            v = self.middle((t, y, z))
            return profit(self.market, 0, (t, v, w))

        return diff1(composed, x, self.diff) + x

    def step(self, p: Sequence[float]) -> OutputTriple:
        """One application of the composed hierarchical map."""
        x, y, z = p
        if self.mode == "explicit":
            return OutputTriple(self.leader(p), self.middle(p), self.follower(p))
        if self.mode == "cournot":
            return OutputTriple(self._own_foc(0, x, y, z) + x,
                                self._own_foc(1, x, y, z) + y,
                                self._own_foc(2, x, y, z) + z)
        if self.mode == "reduced":
            return OutputTriple(self.leader(p), self.middle(p), self.follower(p))
        w = self.follower(p)
        v = self.middle((x, y, w))
        u = self.leader((x, v, w))
        return OutputTriple(u, v, w)

    def stage_residuals(self, p: Sequence[float]) -> tuple[float, float, float]:
        """Backward-induction first-order residuals (follower, middle, leader).

        All three vanish exactly at the sequential equilibrium.  For
        explicit systems these are the component fixed-point residuals.
        """
        x, y, z = p
        if self.mode == "explicit":
            return (self.follower(p) - z, self.middle(p) - y, self.leader(p) - x)
        if self.mode == "cournot":
            return (self._own_foc(2, x, y, z), self._own_foc(1, x, y, z),
                    self._own_foc(0, x, y, z))
        return (self.follower_foc(x, y, z), self.middle_stage(x, y), self.leader_stage(x))

    def solve_backward(self) -> OutputTriple:
        """Equilibrium by direct backward induction.

        Solves the leader's substituted first-order condition with the
        bracketing root find, then unwinds the middle and follower
        responses.  Works even when plain successive application of the
        map diverges (strong cost curvature makes the follower map
        expansive long before the equilibrium stops existing).
        """
        if self.mode == "cournot":
            raise ValueError("direct backward solve applies to sequential modes only")
        lo, hi = self.inner.bracket
        x = brent(lambda t: self.leader_stage(t), lo, hi,
                  xtol=self.inner.xtol, max_iter=self.inner.max_iter)
        y = self.middle_response(x)
        z = self.follower_response(x, y)
        return OutputTriple(x, y, z)


# -- module-level operation aliases ----------------------------------------


def follower_map(system: ResponseSystem, p: Sequence[float]) -> float:
    return system.follower(p)


def middle_map(system: ResponseSystem, p: Sequence[float]) -> float:
    return system.middle(p)


def leader_map(system: ResponseSystem, p: Sequence[float]) -> float:
    return system.leader(p)


def hierarchical_map(system: ResponseSystem, p: Sequence[float]) -> OutputTriple:
    return system.step(p)


def solve_follower(system: ResponseSystem, x: float, y: float) -> float:
    return system.follower_response(x, y)


def solve_middle(system: ResponseSystem, x: float) -> float:
    return system.middle_response(x)


def l1_distance(a: Sequence[float], b: Sequence[float]) -> float:
    """Sum of coordinate-wise absolute differences on triples."""
    return abs(a[0] - b[0]) + abs(a[1] - b[1]) + abs(a[2] - b[2])


def self_displacement(system: ResponseSystem, a: Sequence[float], b: Sequence[float]) -> float:
    """l1(a, S(a)) + l1(b, S(b)): how far each point moves under the map."""
    return l1_distance(a, system.step(a)) + l1_distance(b, system.step(b))


def cross_displacement(system: ResponseSystem, a: Sequence[float], b: Sequence[float]) -> float:
    """l1(a, S(b)) + l1(b, S(a)): displacement with the images swapped."""
    return l1_distance(a, system.step(b)) + l1_distance(b, system.step(a))


@dataclass(frozen=True)
class MetricBundle:
    """The three distances used in the contraction analysis."""

    m1: float
    m2s: float
    m3s: float


def metrics(system: ResponseSystem, a: Sequence[float], b: Sequence[float]) -> MetricBundle:
    return MetricBundle(m1=l1_distance(a, b),
                        m2s=self_displacement(system, a, b),
                        m3s=cross_displacement(system, a, b))


def cross_symmetry_holds(system: ResponseSystem, p: Sequence[float], tol: float) -> bool:
    """Pointwise rotation symmetry of the map components at p.

    Compares the components of S at the rotated point (y, z, x) with the
    shifted components of S at p.  When this holds at a fixed point, all
    three coordinates of that fixed point must coincide.
    """
    x, y, z = p
    sp = system.step(p)
    sq = system.step((y, z, x))
    gap = abs(sq[0] - sp[1]) + abs(sq[1] - sp[2]) + abs(sq[2] - sp[0])
    return gap <= tol
