"""Bracketing scalar root finder: bisection with secant/inverse-quadratic steps."""

from __future__ import annotations

from typing import Callable

from .errors import MaxIterExceededError, NoBracketError

_EPS = 2.0 ** -52


def brent(f: Callable[[float], float], lo: float, hi: float,
          xtol: float = 1e-12, max_iter: int = 200) -> float:
    """Root of f on [lo, hi]; f(lo) and f(hi) must differ in sign.

    Classic Brent scheme: keeps a bracket at all times, tries secant or
    inverse quadratic interpolation, falls back to bisection when the
    interpolated step misbehaves.  Iterates until the bracket shrinks to
    2*eps*|root| + xtol, i.e. essentially machine precision for xtol near
    zero, which the response-map solvers rely on.
    """
    a, b = lo, hi
    fa, fb = f(a), f(b)
    if fa == 0.0:
        return a
    if fb == 0.0:
        return b
    if (fa > 0.0) == (fb > 0.0):
        raise NoBracketError(f"no sign change on [{lo}, {hi}]: f(lo)={fa}, f(hi)={fb}")

    c, fc = a, fa
    e = d = b - a
    for _ in range(max_iter):
        if abs(fc) < abs(fb):
            a, b, c = b, c, b
            fa, fb, fc = fb, fc, fb
        tol = 2.0 * _EPS * abs(b) + 0.5 * xtol
        m = 0.5 * (c - b)
        if abs(m) <= tol or fb == 0.0:
            return b
        if abs(e) < tol or abs(fa) <= abs(fb):
            e = d = m
        else:
            s = fb / fa
            if a == c:
                # secant
                p = 2.0 * m * s
                q = 1.0 - s
            else:
                # inverse quadratic
                q = fa / fc
                r = fb / fc
                p = s * (2.0 * m * q * (q - r) - (b - a) * (r - 1.0))
                q = (q - 1.0) * (r - 1.0) * (s - 1.0)
            if p > 0.0:
                q = -q
            else:
                p = -p
            s, e = e, d
            if 2.0 * p < 3.0 * m * q - abs(tol * q) and p < abs(0.5 * s * q):
                d = p / q
            else:
                e = d = m
        a, fa = b, fb
        if abs(d) > tol:
            b += d
        elif m > 0.0:
            b += tol
        else:
            b -= tol
        fb = f(b)
        if (fb > 0.0) == (fc > 0.0):
            c, fc = a, fa
            e = d = b - a
    raise MaxIterExceededError(f"root find did not converge in {max_iter} iterations")
