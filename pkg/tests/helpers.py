"""Independent oracles used by the test suite.

Everything here is written against the raw market formulas, not the library
under test: grid-search maximizers for the smooth nonlinear market, and an
exact rational backward-induction solver for linear-demand markets.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np

# -- nonlinear benchmark market: P = 10 - atan(Q), c(t) = t * e^t -----------


def nl_price(q):
    return 10.0 - np.arctan(q)


def nl_cost(t):
    return t * np.exp(t)


def zoom_argmax(f, lo: float, hi: float, final_step: float, points: int = 60) -> float:
    """Grid-search argmax with geometric zoom and a parabolic top refinement.

    Repeatedly evaluates f on a uniform grid, zooms into the winning cell's
    neighborhood until the grid step reaches ``final_step``, then fits a
    parabola through the best three points.
    """
    best_i, xs, vals = None, None, None
    while True:
        xs = np.linspace(lo, hi, points + 1)
        vals = f(xs)
        best_i = int(np.argmax(vals))
        step = (hi - lo) / points
        if step <= final_step:
            break
        lo = max(lo, xs[best_i] - 2.0 * step)
        hi = min(hi, xs[best_i] + 2.0 * step)
    if 0 < best_i < points:
        y0, y1, y2 = vals[best_i - 1], vals[best_i], vals[best_i + 1]
        denom = y0 - 2.0 * y1 + y2
        if denom < 0.0:
            offset = 0.5 * (y0 - y2) / denom
            step = (hi - lo) / points
            return float(xs[best_i] + offset * step)
    return float(xs[best_i])


def oracle_follower(x: float, y: float, final_step: float = 1e-5,
                    lo: float = 0.0, hi: float = 5.0) -> float:
    """Best follower output by grid search on its raw payoff."""
    return zoom_argmax(lambda z: z * nl_price(x + y + z) - nl_cost(z), lo, hi, final_step)


def oracle_middle(x: float, final_step: float = 1e-5, inner_step: float = 1e-6,
                  lo: float = 0.0, hi: float = 5.0) -> float:
    """Best middle output: maximizes its payoff with the follower solved out."""

    def payoff(ys):
        out = np.empty(len(ys))
        for i, y in enumerate(ys):
            z = oracle_follower(x, float(y), inner_step)
            out[i] = y * float(nl_price(x + y + z)) - float(nl_cost(y))
        return out

    return zoom_argmax(payoff, lo, hi, final_step)


def oracle_leader(final_step: float = 1e-4, lo: float = 0.0, hi: float = 5.0) -> float:
    """Best leader output with both later stages solved out by grid search."""

    def payoff(xs):
        out = np.empty(len(xs))
        for i, x in enumerate(xs):
            y = oracle_middle(float(x), final_step=1e-5, inner_step=1e-6)
            z = oracle_follower(float(x), y, 1e-6)
            out[i] = x * float(nl_price(x + y + z)) - float(nl_cost(x))
        return out

    return zoom_argmax(payoff, lo, hi, final_step, points=40)


# -- exact rational backward induction for linear demand ---------------------


def exact_sequential_outputs(A, B, c, n: int, cost_kind: str) -> list[Fraction]:
    """Outputs of the n-firm sequential game, solved exactly in rationals.

    Linear inverse demand A - B*Q; every firm has cost c*x (``linear``) or
    c*x**2 (``quadratic``).  Works stage by stage: the joint best response of
    the last m firms to a committed total T is affine, tail_m(T) = a + b*T,
    which the stage-m leader's quadratic payoff absorbs exactly.
    """
    A, B, c = Fraction(A), Fraction(B), Fraction(c)

    def stage_response(a: Fraction, b: Fraction) -> tuple[Fraction, Fraction]:
        # maximize x*(A - B*(a + (1+b)*(T+x))) - cost(x) over x
        if cost_kind == "linear":
            num0 = A - c - B * a
        elif cost_kind == "quadratic":
            num0 = A - B * a
        else:
            raise ValueError(f"unknown cost kind {cost_kind!r}")
        den = 2 * B * (1 + b) + (2 * c if cost_kind == "quadratic" else 0)
        return (num0 / den, -B * (1 + b) / den)   # x*(T) = p + q*T

    tails = [(Fraction(0), Fraction(0))]          # tail_0(T) = 0
    for _ in range(1, n):
        a, b = tails[-1]
        p, q = stage_response(a, b)
        # tail_m(T) = x*(T) + tail_{m-1}(T + x*(T))
        new_a = p + a + b * p
        new_b = q + b + b * q
        tails.append((new_a, new_b))

    outputs: list[Fraction] = []
    committed = Fraction(0)
    for k in range(n):
        a, b = tails[n - 1 - k]
        p, q = stage_response(a, b)
        x = p + q * committed
        outputs.append(x)
        committed += x
    return outputs


def exact_stage_payoff(A, B, c, n: int, cost_kind: str, k: int, committed, x):
    """Stage-k payoff (floats) with the remaining firms' exact affine tail.

    ``k`` is zero-based play order; ``committed`` is the total already chosen
    by earlier movers.  The n-1-k later movers respond through their exact
    joint affine tail.
    """
    AF, BF, cF = Fraction(A), Fraction(B), Fraction(c)
    tails = [(Fraction(0), Fraction(0))]
    for _ in range(n - 1 - k):
        a, b = tails[-1]
        if cost_kind == "linear":
            num0 = AF - cF - BF * a
            den = 2 * BF * (1 + b)
        else:
            num0 = AF - BF * a
            den = 2 * BF * (1 + b) + 2 * cF
        p, q = num0 / den, -BF * (1 + b) / den
        tails.append((p + a + b * p, q + b + b * q))
    tail_a, tail_b = (float(v) for v in tails[-1])
    A, B, c = float(A), float(B), float(c)
    total = committed + x + tail_a + tail_b * (committed + x)
    cost = c * x if cost_kind == "linear" else c * x * x
    return x * (A - B * total) - cost
