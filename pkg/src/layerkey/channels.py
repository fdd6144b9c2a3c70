"""Fading-law abstraction for the two power-gain channels.

Three laws are supported: Rayleigh fading (exponentially distributed power
gain), a constant gain, and a tabulated distribution given as a piecewise
linear cdf. Distributions are immutable; sampling mutates only the
caller-owned generator.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Union

import numpy as np

from .errors import DomainError


@dataclass(frozen=True)
class Rayleigh:
    """Rayleigh-fading power gain: exponential law with the given mean."""

    mean: float

    def __post_init__(self):
        if not (self.mean > 0 and math.isfinite(self.mean)):
            raise DomainError("Rayleigh mean gain must be positive and finite")


@dataclass(frozen=True)
class Constant:
    """Non-fading channel with a fixed power gain."""

    gain: float

    def __post_init__(self):
        if not (self.gain >= 0 and math.isfinite(self.gain)):
            raise DomainError("constant gain must be nonnegative and finite")


@dataclass(frozen=True)
class Tabulated:
    """Distribution given by (gain, cdf) knots; cdf interpolates linearly.

    Gains must be strictly increasing and nonnegative; the cdf must run
    monotonically from 0 to 1.
    """

    gains: tuple
    cdf: tuple

    def __post_init__(self):
        g = np.asarray(self.gains, dtype=float)
        c = np.asarray(self.cdf, dtype=float)
        if g.ndim != 1 or g.shape != c.shape or g.size < 2:
            raise DomainError("need matching 1-d gain/cdf arrays with >= 2 knots")
        if not (np.all(np.diff(g) > 0) and g[0] >= 0):
            raise DomainError("gains must be strictly increasing and nonnegative")
        if not (np.all(np.diff(c) >= 0) and abs(c[0]) < 1e-12 and abs(c[-1] - 1.0) < 1e-12):
            raise DomainError("cdf must be nondecreasing from 0 to 1")
        object.__setattr__(self, "gains", tuple(float(v) for v in g))
        object.__setattr__(self, "cdf", tuple(float(v) for v in c))


FadingDistribution = Union[Rayleigh, Constant, Tabulated]


@dataclass(frozen=True)
class ChannelPair:
    """The legitimate (bob) and eavesdropper (eve) gain laws, independent."""

    bob: FadingDistribution
    eve: FadingDistribution
    independent: bool = True

    def __post_init__(self):
        if not self.independent:
            raise DomainError("only independent channel pairs are supported")


def _check_finite(s: float) -> float:
    s = float(s)
    if not math.isfinite(s):
        raise DomainError(f"gain must be finite, got {s!r}")
    return s


def eval_pdf(dist: FadingDistribution, s: float) -> float:
    """Density f(s); zero below the support. Constant laws have no density."""
    s = _check_finite(s)
    if isinstance(dist, Rayleigh):
        if s < 0:
            return 0.0
        return math.exp(-s / dist.mean) / dist.mean
    if isinstance(dist, Tabulated):
        g = dist.gains
        if s < g[0] or s >= g[-1]:
            return 0.0
        k = int(np.searchsorted(g, s, side="right")) - 1
        return (dist.cdf[k + 1] - dist.cdf[k]) / (g[k + 1] - g[k])
    if isinstance(dist, Constant):
        # a Dirac stand-in would silently corrupt quadrature; callers must
        # branch on the step-function form instead
        raise DomainError("constant gain law has no density")
    raise DomainError(f"unknown distribution {dist!r}")


def eval_cdf(dist: FadingDistribution, s: float) -> float:
    """Distribution function F(s) in [0, 1]."""
    s = _check_finite(s)
    if isinstance(dist, Rayleigh):
        if s <= 0:
            return 0.0
        return -math.expm1(-s / dist.mean)
    if isinstance(dist, Constant):
        return 1.0 if s >= dist.gain else 0.0
    if isinstance(dist, Tabulated):
        return float(np.interp(s, dist.gains, dist.cdf))
    raise DomainError(f"unknown distribution {dist!r}")


def inverse_cdf(dist: FadingDistribution, q: float) -> float:
    """Quantile function; q in [0, 1)."""
    if not (0.0 <= q < 1.0):
        raise DomainError("quantile must lie in [0, 1)")
    if isinstance(dist, Rayleigh):
        return -dist.mean * math.log1p(-q)
    if isinstance(dist, Constant):
        return dist.gain
    if isinstance(dist, Tabulated):
        return float(np.interp(q, dist.cdf, dist.gains))
    raise DomainError(f"unknown distribution {dist!r}")


def sample(dist: FadingDistribution, rng: np.random.Generator) -> float:
    """One draw via inverse-cdf; deterministic given the generator state."""
    if isinstance(dist, Constant):
        return dist.gain
    return inverse_cdf(dist, float(rng.random()))


def sample_many(dist: FadingDistribution, rng: np.random.Generator, n: int) -> np.ndarray:
    """Vectorized draws, equivalent to n calls of sample()."""
    if isinstance(dist, Constant):
        return np.full(n, dist.gain)
    u = rng.random(n)
    if isinstance(dist, Rayleigh):
        return -dist.mean * np.log1p(-u)
    return np.interp(u, dist.cdf, dist.gains)


def gain_upper_bound(dist: FadingDistribution) -> float:
    """Upper truncation point for integrals against this law.

    Exponential tails are cut where the mass is ~1e-22, at max(50*mean, 50);
    bounded supports return their endpoint.
    """
    if isinstance(dist, Rayleigh):
        return max(50.0 * dist.mean, 50.0)
    if isinstance(dist, Constant):
        return dist.gain
    return dist.gains[-1]


def tabulated_from_csv(path: str | Path) -> Tabulated:
    """Load a tabulated law from a two-column CSV (gain, cdf).

    A header row is required and gains must be strictly increasing.
    """
    gains, cdf = [], []
    with open(path, newline="") as fh:
        rows = csv.reader(fh)
        header = next(rows, None)
        if header is None or len(header) < 2:
            raise DomainError("expected a header row with two columns")
        try:
            float(header[0])
        except ValueError:
            pass
        else:
            raise DomainError("first CSV row must be a header, not data")
        for row in rows:
            if not row:
                continue
            gains.append(float(row[0]))
            cdf.append(float(row[1]))
    return Tabulated(tuple(gains), tuple(cdf))
