"""Scalar numerics: bracketing root finder, adaptive quadrature, unimodal
maximization, central differences, and the exponential integral E1.

Everything here is pure and thread-safe; routines take a Tolerance and raise
the exceptions from :mod:`layerkey.errors` instead of returning sentinels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

from .errors import (
    DomainError,
    MaxIterExceeded,
    NoBracket,
    NonFiniteIntegrand,
    NonFiniteValue,
)

_EULER_GAMMA = 0.57721566490153286061
_EPS = 2.220446049250313e-16


@dataclass(frozen=True)
class Tolerance:
    """Convergence targets for the iterative routines.

    At least one of abs_tol / rel_tol must be strictly positive.
    """

    abs_tol: float = 1e-10
    rel_tol: float = 1e-8
    max_iter: int = 200

    def __post_init__(self):
        if self.abs_tol < 0 or self.rel_tol < 0:
            raise DomainError("tolerances must be nonnegative")
        if self.abs_tol == 0 and self.rel_tol == 0:
            raise DomainError("at least one of abs_tol, rel_tol must be positive")
        if self.max_iter < 1:
            raise DomainError("max_iter must be >= 1")

    def width_at(self, x: float) -> float:
        return max(self.abs_tol, self.rel_tol * abs(x))


DEFAULT_TOL = Tolerance()


def find_root(f: Callable[[float], float], lo: float, hi: float,
              tol: Tolerance = DEFAULT_TOL) -> float:
    """Root of f on [lo, hi] by bisection with inverse-quadratic acceleration.

    Requires f(lo) * f(hi) <= 0; convergence is guaranteed because every step
    keeps a sign-change bracket and falls back to bisection whenever the
    interpolated step is not clearly better.
    """
    a, b = float(lo), float(hi)
    fa, fb = f(a), f(b)
    if fa == 0.0:
        return a
    if fb == 0.0:
        return b
    if fa * fb > 0.0:
        raise NoBracket(f"f({lo})={fa:g} and f({hi})={fb:g} have the same sign")

    c, fc = a, fa
    d = e = b - a
    for _ in range(tol.max_iter):
        if fb * fc > 0.0:
            c, fc = a, fa
            d = e = b - a
        if abs(fc) < abs(fb):
            a, b, c = b, c, b
            fa, fb, fc = fb, fc, fb

        t = 2.0 * _EPS * abs(b) + 0.5 * tol.width_at(b)
        m = 0.5 * (c - b)
        if abs(m) <= t or fb == 0.0:
            return b

        if abs(e) < t or abs(fa) <= abs(fb):
            d = e = m
        else:
            s = fb / fa
            if a == c:
                p = 2.0 * m * s
                q = 1.0 - s
            else:
                q = fa / fc
                r = fb / fc
                p = s * (2.0 * m * q * (q - r) - (b - a) * (r - 1.0))
                q = (q - 1.0) * (r - 1.0) * (s - 1.0)
            if p > 0.0:
                q = -q
            else:
                p = -p
            s, e = e, d
            if 2.0 * p < 3.0 * m * q - abs(t * q) and p < abs(0.5 * s * q):
                d = p / q
            else:
                d = e = m

        a, fa = b, fb
        b += d if abs(d) > t else (t if m > 0.0 else -t)
        fb = f(b)
    raise MaxIterExceeded(f"root not located within {tol.max_iter} iterations")


def integrate(f: Callable[[float], float], lo: float, hi: float,
              tol: Tolerance = DEFAULT_TOL) -> tuple[float, float]:
    """Adaptive Simpson quadrature of f over [lo, hi].

    Returns (value, error_estimate). Subdivides until the local Richardson
    error estimate meets the tolerance; the returned value includes the
    extrapolation correction.
    """
    a, b = float(lo), float(hi)
    if not (math.isfinite(a) and math.isfinite(b)):
        raise DomainError("integration limits must be finite")
    if a > b:
        raise DomainError("lower limit exceeds upper limit")
    if a == b:
        return 0.0, 0.0

    def eval_f(x: float) -> float:
        y = f(x)
        if not math.isfinite(y):
            raise NonFiniteIntegrand(f"integrand returned {y!r} at x={x!r}")
        return y

    fa, fb = eval_f(a), eval_f(b)
    m = 0.5 * (a + b)
    fm = eval_f(m)
    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    target = max(tol.abs_tol, tol.rel_tol * abs(whole))
    # generous eval budget; each subdivision costs two evaluations
    budget = [4096 * max(tol.max_iter, 1)]

    def recurse(a, fa, m, fm, b, fb, whole, target, depth):
        lm = 0.5 * (a + m)
        rm = 0.5 * (m + b)
        flm, frm = eval_f(lm), eval_f(rm)
        budget[0] -= 2
        left = (m - a) / 6.0 * (fa + 4.0 * flm + fm)
        right = (b - m) / 6.0 * (fm + 4.0 * frm + fb)
        err = (left + right - whole) / 15.0
        # the first levels are mandatory: a lucky cancellation in the
        # Richardson estimate must not end refinement on a wide interval
        if (depth >= 2 and abs(err) <= target) or depth >= 60:
            if abs(err) > target and budget[0] <= 0:
                raise MaxIterExceeded("quadrature refinement budget exhausted")
            return left + right + err, abs(err)
        if budget[0] <= 0:
            raise MaxIterExceeded("quadrature refinement budget exhausted")
        vl, el = recurse(a, fa, lm, flm, m, fm, left, 0.5 * target, depth + 1)
        vr, er = recurse(m, fm, rm, frm, b, fb, right, 0.5 * target, depth + 1)
        return vl + vr, el + er

    return recurse(a, fa, m, fm, b, fb, whole, target, 0)


def integrate_piecewise(f: Callable[[float], float], breakpoints,
                        tol: Tolerance = DEFAULT_TOL) -> tuple[float, float]:
    """Adaptive quadrature summed over consecutive breakpoint intervals.

    Use when the integrand is smooth between known breakpoints but has
    derivative jumps at them (piecewise-polynomial fits): aligning the
    subdivision with the breaks keeps the per-interval error estimates valid.
    """
    pts = sorted(float(p) for p in breakpoints)
    if len(pts) < 2:
        raise DomainError("need at least two breakpoints")
    piece_tol = Tolerance(abs_tol=tol.abs_tol / max(len(pts) - 1, 1),
                          rel_tol=tol.rel_tol, max_iter=tol.max_iter)
    total = err = 0.0
    for a, b in zip(pts, pts[1:]):
        if b <= a:
            continue
        v, e = integrate(f, a, b, piece_tol)
        total += v
        err += e
    return total, err


def maximize_scalar(f: Callable[[float], float], lo: float, hi: float,
                    tol: Tolerance = DEFAULT_TOL) -> tuple[float, float]:
    """Golden-section search for the maximum of a unimodal f on [lo, hi].

    Returns (argmax, max). Unimodality is the caller's responsibility.
    """
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = float(lo), float(hi)
    if a > b:
        raise DomainError("empty search interval")
    c = b - (b - a) * inv_phi
    d = a + (b - a) * inv_phi
    fc, fd = f(c), f(d)
    for _ in range(tol.max_iter):
        if b - a <= tol.width_at(0.5 * (a + b)):
            break
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - (b - a) * inv_phi
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + (b - a) * inv_phi
            fd = f(d)
    else:
        raise MaxIterExceeded(f"bracket not reduced within {tol.max_iter} iterations")
    x = c if fc > fd else d
    return x, f(x)


def differentiate(f: Callable[[float], float], x: float, step: float) -> float:
    """Central difference (f(x+step) - f(x-step)) / (2 step)."""
    if step <= 0:
        raise DomainError("step must be positive")
    hi, lo = f(x + step), f(x - step)
    if not (math.isfinite(hi) and math.isfinite(lo)):
        raise NonFiniteValue(f"f not finite on [{x - step}, {x + step}]")
    return (hi - lo) / (2.0 * step)


def exp_integral_e1(x: float) -> float:
    """Exponential integral E1(x) = integral of exp(-t)/t over t in [x, inf).

    Power series for x <= 1, modified-Lentz continued fraction above; relative
    error is far below 1e-10 across [1e-2, 50].
    """
    if x <= 0:
        raise DomainError("E1 requires x > 0")
    if x <= 1.0:
        return _e1_series(x)
    return math.exp(-x) * _e1_cf_scaled(x)


def exp_integral_e1_scaled(x: float) -> float:
    """Scaled exponential integral exp(x) * E1(x), stable for large x."""
    if x <= 0:
        raise DomainError("E1 requires x > 0")
    if x <= 1.0:
        return math.exp(x) * _e1_series(x)
    return _e1_cf_scaled(x)


def _e1_series(x: float) -> float:
    # E1(x) = -gamma - ln x + sum_{k>=1} (-1)^{k+1} x^k / (k * k!)
    total = -_EULER_GAMMA - math.log(x)
    term = 1.0
    for k in range(1, 60):
        term *= -x / k
        delta = -term / k
        total += delta
        if abs(delta) < 1e-18 * max(abs(total), 1e-300):
            break
    return total

def _e1_cf_scaled(x: float) -> float:
    # exp(x) * E1(x) = 1 / (x + 1 - 1/(x + 3 - 4/(x + 5 - 9/(...)))), by the
    # modified Lentz algorithm on the standard continued fraction.
    tiny = 1e-300
    b = x + 1.0
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for k in range(1, 400):
        an = -k * k
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            return h
    raise MaxIterExceeded("continued fraction for E1 did not converge")
