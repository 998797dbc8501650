"""Fixed-point iteration with convergence certificates.

Successive application of a response system is certified empirically: a
sampled Lipschitz estimate and induced-norm checks of the Jacobian give a
contraction factor, which then feeds the standard a priori / a posteriori
error bounds for contraction-type maps.
"""

from __future__ import annotations

import enum
import math
import random
from dataclasses import dataclass
from typing import Sequence

from .errors import InvalidConstantsError
from .market import DIFF1_DEFAULT, DiffConfig, own_curvature
from .responses import OutputTriple, ResponseSystem, as_triple, l1_distance

Matrix3 = tuple[tuple[float, float, float], ...]

_GROWTH_LIMIT = 50  # consecutive growing steps before flagging divergence


class IterationStatus(enum.Enum):
    CONVERGED = "converged"
    DIVERGED = "diverged"
    MAX_ITER = "max_iter"


@dataclass
class IterationTrace:
    """Record of one successive-application run.

    ``step_m1[i]`` is the l1 distance between ``points[i+1]`` and
    ``points[i]``; CONVERGED means the last step was at or below the
    tolerance.
    """

    points: list[OutputTriple]
    step_m1: list[float]
    status: IterationStatus
    iterations: int

    @property
    def final(self) -> OutputTriple:
        return self.points[-1]


def picard_iterate(system: ResponseSystem, start: Sequence[float],
                   tol: float = 1e-8, max_iter: int = 1_000_000,
                   divergence_radius: float = 1e12) -> IterationTrace:
    """Apply the system map repeatedly from ``start``.

    Stops when the l1 step falls to ``tol`` (converged), when the iterate
    drifts ``divergence_radius`` away from the start or the step grows for
    50 consecutive iterations (diverged), or at ``max_iter``.
    """
    if tol <= 0.0:
        raise ValueError(f"tol must be positive, got {tol}")
    if max_iter < 1:
        raise ValueError(f"max_iter must be >= 1, got {max_iter}")
    p = as_triple(start)
    points = [p]
    steps: list[float] = []
    growing = 0
    for k in range(max_iter):
        q = system.step(p)
        d = l1_distance(p, q)
        points.append(q)
        steps.append(d)
        if d <= tol:
            return IterationTrace(points, steps, IterationStatus.CONVERGED, k + 1)
        if l1_distance(q, points[0]) > divergence_radius:
            return IterationTrace(points, steps, IterationStatus.DIVERGED, k + 1)
        if len(steps) >= 2 and d > steps[-2]:
            growing += 1
            if growing >= _GROWTH_LIMIT:
                return IterationTrace(points, steps, IterationStatus.DIVERGED, k + 1)
        else:
            growing = 0
        p = q
    return IterationTrace(points, steps, IterationStatus.MAX_ITER, max_iter)


@dataclass(frozen=True)
class HardyRogersConstants:
    """Constants (k1, k2, k3) of a Hardy-Rogers-type contraction condition.

    Admissibility requires k1 + 2*k2 + 2*k3 < 1; the equivalent plain
    contraction rate is (k1 + k2 + k3) / (1 - k2 - k3).
    """

    k1: float
    k2: float
    k3: float

    def __post_init__(self):
        if min(self.k1, self.k2, self.k3) < 0.0:
            raise InvalidConstantsError(f"constants must be nonnegative: {self}")
        if self.k1 + 2.0 * self.k2 + 2.0 * self.k3 >= 1.0:
            raise InvalidConstantsError(
                f"k1 + 2*k2 + 2*k3 = {self.k1 + 2 * self.k2 + 2 * self.k3} >= 1")


def hardy_rogers_rate(constants: HardyRogersConstants) -> float:
    """Effective contraction rate k in [0, 1) implied by the constants."""
    return (constants.k1 + constants.k2 + constants.k3) / (1.0 - constants.k2 - constants.k3)


def a_priori_bound(rate: float, n: int, first_step: float) -> float:
    """Bound on the distance to the limit after n steps: k^n/(1-k) * d(x1, x0)."""
    _check_rate(rate)
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    return rate ** n / (1.0 - rate) * first_step


def a_posteriori_bound(rate: float, last_step: float) -> float:
    """Bound on the remaining distance from the last step: k/(1-k) * d(xn, xn-1)."""
    _check_rate(rate)
    return rate / (1.0 - rate) * last_step


def _check_rate(rate: float) -> None:
    if not 0.0 <= rate < 1.0:
        raise ValueError(f"rate must lie in [0, 1), got {rate}")


@dataclass
class ContractionReport:
    """Empirical contraction certificate over a box.

    ``alpha_hat`` is the largest sampled ratio l1(S(a), S(b)) / l1(a, b);
    ``jac_l1_norms`` are max-column-sum Jacobian norms at sampled points
    (the induced norm matching the l1 metric); ``certified`` holds only if
    alpha_hat < 1 and every sampled norm is < 1.  The certificate is a
    sampling statement, not a proof.
    """

    alpha_hat: float
    jac_l1_norms: list[float]
    spectral_radius: float
    certified: bool


def estimate_contraction(system: ResponseSystem,
                         box: Sequence[tuple[float, float]],
                         samples: int = 100,
                         rng_seed: int = 0) -> ContractionReport:
    """Sample Lipschitz ratios and Jacobian norms of the map over a box.

    Pairs are drawn uniformly; additionally, axis-aligned pairs are included
    so that per-coordinate column sums are picked up (for affine systems the
    l1 Lipschitz constant is attained along a coordinate axis).
    Deterministic for a fixed ``rng_seed``.
    """
    if samples < 2:
        raise ValueError(f"need at least 2 samples, got {samples}")
    lo = [float(b[0]) for b in box]
    hi = [float(b[1]) for b in box]
    if any(h <= l for l, h in zip(lo, hi)):
        raise ValueError(f"box is empty: {box}")
    width = [h - l for l, h in zip(lo, hi)]
    rng = random.Random(rng_seed)

    def draw() -> OutputTriple:
        return OutputTriple(*(rng.uniform(l, h) for l, h in zip(lo, hi)))

    min_sep = 1e-9 * max(width)
    alpha = 0.0
    base_points: list[OutputTriple] = []
    for _ in range(samples):
        a = draw()
        b = draw()
        base_points.append(a)
        d = l1_distance(a, b)
        if d <= min_sep:
            continue
        alpha = max(alpha, l1_distance(system.step(a), system.step(b)) / d)
    for a in base_points[: min(8, len(base_points))]:
        for axis in range(3):
            delta = 0.25 * width[axis]
            coords = list(a)
            coords[axis] = coords[axis] + delta if coords[axis] + delta <= hi[axis] else coords[axis] - delta
            b = OutputTriple(*coords)
            d = l1_distance(a, b)
            if d <= min_sep:
                continue
            alpha = max(alpha, l1_distance(system.step(a), system.step(b)) / d)

    norm_points = base_points[: min(4, len(base_points))]
    center = OutputTriple(*(0.5 * (l + h) for l, h in zip(lo, hi)))
    norms = [_l1_induced_norm(jacobian3(system, p)) for p in norm_points + [center]]
    rho = spectral_radius3(jacobian3(system, center))
    certified = alpha < 1.0 and all(n < 1.0 for n in norms)
    return ContractionReport(alpha_hat=alpha, jac_l1_norms=norms,
                             spectral_radius=rho, certified=certified)


def _l1_induced_norm(j: Matrix3) -> float:
    return max(abs(j[0][c]) + abs(j[1][c]) + abs(j[2][c]) for c in range(3))


def jacobian3(system: ResponseSystem, p: Sequence[float],
              cfg: DiffConfig | None = None) -> Matrix3:
    """Central-difference Jacobian of the composed map at p."""
    cfg = cfg or DIFF1_DEFAULT
    p = as_triple(p)
    cols = []
    for axis in range(3):
        h = cfg.step(p[axis])
        up = list(p)
        dn = list(p)
        up[axis] += h
        dn[axis] -= h
        su = system.step(up)
        sd = system.step(dn)
        cols.append(tuple((su[r] - sd[r]) / (2.0 * h) for r in range(3)))
    return tuple(tuple(cols[c][r] for c in range(3)) for r in range(3))


def spectral_radius3(j: Sequence[Sequence[float]]) -> float:
    """Largest eigenvalue magnitude of a 3x3 matrix, by closed-form cubic.

    The characteristic polynomial is solved with the trigonometric form
    when all roots are real and Cardano plus quadratic deflation when a
    complex pair is present, so no iterative eigensolver is involved.
    """
    a00, a01, a02 = j[0]
    a10, a11, a12 = j[1]
    a20, a21, a22 = j[2]
    tr = a00 + a11 + a22
    minors = (a11 * a22 - a12 * a21) + (a00 * a22 - a02 * a20) + (a00 * a11 - a01 * a10)
    det = (a00 * (a11 * a22 - a12 * a21)
           - a01 * (a10 * a22 - a12 * a20)
           + a02 * (a10 * a21 - a11 * a20))
    # lambda^3 + b lambda^2 + c lambda + d
    b, c, d = -tr, minors, -det
    # depressed cubic t^3 + p t + q, lambda = t - b/3
    p = c - b * b / 3.0
    q = 2.0 * b ** 3 / 27.0 - b * c / 3.0 + d
    shift = -b / 3.0
    scale = max(abs(p), abs(q), 1e-300)
    if abs(p) / scale < 1e-14 and abs(q) / scale < 1e-14:
        return abs(shift)
    disc = (0.5 * q) ** 2 + (p / 3.0) ** 3
    if disc <= 0.0:
        # three real roots
        m = 2.0 * math.sqrt(-p / 3.0)
        arg = 3.0 * q / (p * m)
        arg = max(-1.0, min(1.0, arg))
        theta = math.acos(arg) / 3.0
        roots = (m * math.cos(theta) + shift,
                 m * math.cos(theta - 2.0 * math.pi / 3.0) + shift,
                 m * math.cos(theta - 4.0 * math.pi / 3.0) + shift)
        return max(abs(r) for r in roots)
    # one real root, one complex-conjugate pair
    s = math.sqrt(disc)
    u = math.copysign(abs(-0.5 * q + s) ** (1.0 / 3.0), -0.5 * q + s)
    v = math.copysign(abs(-0.5 * q - s) ** (1.0 / 3.0), -0.5 * q - s)
    real_root = u + v + shift
    # deflate: lambda^2 + B lambda + C carries the conjugate pair
    big_b = b + real_root
    big_c = c + real_root * big_b
    pair_modulus = math.sqrt(abs(big_c))
    return max(abs(real_root), pair_modulus)


@dataclass
class SecondOrderReport:
    """Stage curvatures at a candidate equilibrium; all must be negative."""

    d2_follower: float
    d2_middle: float
    d2_leader: float

    @property
    def all_negative(self) -> bool:
        return self.d2_follower < 0.0 and self.d2_middle < 0.0 and self.d2_leader < 0.0

    def values(self) -> tuple[float, float, float]:
        return (self.d2_follower, self.d2_middle, self.d2_leader)


def verify_second_order(system: ResponseSystem, p: Sequence[float]) -> SecondOrderReport:
    """Check the stage second-order conditions at a candidate equilibrium.

    Sequential modes report the backward-induction curvatures: the
    follower's own second derivative, the middle firm's substituted payoff
    curvature, and the leader's fully substituted payoff curvature.
    Simultaneous (cournot) systems report each firm's own curvature, and
    explicit affine systems each diagonal coefficient minus one.
    """
    x, y, z = p
    if system.mode == "explicit":
        return SecondOrderReport(
            d2_follower=system.matrix[2][2] - 1.0,
            d2_middle=system.matrix[1][1] - 1.0,
            d2_leader=system.matrix[0][0] - 1.0,
        )
    if system.mode == "cournot":
        outputs = (x, y, z)
        return SecondOrderReport(
            d2_follower=own_curvature(system.market, 2, outputs),
            d2_middle=own_curvature(system.market, 1, outputs),
            d2_leader=own_curvature(system.market, 0, outputs),
        )
    return SecondOrderReport(
        d2_follower=own_curvature(system.market, 2, (x, y, z)),
        d2_middle=system.middle_curvature(x, y),
        d2_leader=system.leader_curvature(x),
    )


def cournot_second_order(market, outputs: Sequence[float]) -> list[float]:
    """Own-output payoff curvature of every firm at ``outputs``."""
    return [own_curvature(market, i, outputs) for i in range(market.n)]
