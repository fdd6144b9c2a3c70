"""Optimal power distribution over coded layers.

The central object is the interference distribution I(x): the total transmit
power assigned to layers with index above x. The optimal I(x) for key
generation satisfies, at every interior layer index x,

    integral_0^x F2(y) / (1 + y I(x))^2 dy
        = (1 - F1(x)) F2(x) / (f1(x) (1 + x I(x))^2),

with boundary points x0, x1 fixed by I(x0) = P and I(x1) = 0. Power lives
only on [x0, x1]: I(x) = P below x0 and I(x) = 0 above x1.

For a pair of exponential gain laws the left side has a closed form in the
exponential integral, which turns the condition into a scalar root problem
per grid point (see rayleigh_condition_gap). Constant-gain eavesdroppers and
the no-secrecy variant admit fully closed-form profiles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
from scipy.interpolate import PchipInterpolator

from . import channels as ch
from .errors import (
    DegenerateProfile,
    DomainError,
    NoBracket,
    ProfileNonMonotone,
)
from .numerics import (
    DEFAULT_TOL,
    Tolerance,
    exp_integral_e1_scaled,
    find_root,
    integrate,
)

_DENSE_RATE_POINTS = 16385
# boundary points feed every downstream computation; solve them close to
# machine precision regardless of the caller's tolerance
_BOUNDARY_TOL = Tolerance(abs_tol=1e-14, rel_tol=1e-13, max_iter=300)


@dataclass
class PowerProfile:
    """Interference distribution on a grid, with boundaries and budget.

    I_vals must be nonincreasing with I(x0) = P and I(x1) = 0; rho is the
    power density -dI/dx, zero outside [x0, x1]. Between grid points the
    profile is the monotone piecewise-cubic interpolant of the knots, so the
    stored density is exactly the derivative of the interpolant.
    """

    xs: np.ndarray
    I_vals: np.ndarray
    rho_vals: np.ndarray
    P: float
    x0: float
    x1: float
    provenance: str = "custom"
    _fit: Optional[PchipInterpolator] = field(default=None, repr=False, compare=False)
    _dfit: Optional[PchipInterpolator] = field(default=None, repr=False, compare=False)
    _rate_table: Optional[tuple] = field(default=None, repr=False, compare=False)

    @property
    def degenerate(self) -> bool:
        return self.x1 - self.x0 <= 0.0 or self.P <= 0.0

    def _ensure_fit(self):
        if self._fit is None:
            self._fit = PchipInterpolator(self.xs, self.I_vals, extrapolate=False)
            self._dfit = self._fit.derivative()

    def interference(self, x) -> np.ndarray:
        """I(x): P below x0, 0 above x1, interpolated in between."""
        x = np.asarray(x, dtype=float)
        if self.degenerate:
            return np.where(x < self.x0, self.P, 0.0)
        self._ensure_fit()
        inner = np.clip(self._fit(np.clip(x, self.x0, self.x1)), 0.0, self.P)
        return np.where(x <= self.x0, self.P, np.where(x >= self.x1, 0.0, inner))

    def density(self, x) -> np.ndarray:
        """rho(x) = -dI/dx, zero outside [x0, x1]."""
        x = np.asarray(x, dtype=float)
        if self.degenerate:
            return np.zeros_like(x)
        self._ensure_fit()
        inner = np.maximum(-self._dfit(np.clip(x, self.x0, self.x1)), 0.0)
        return np.where((x < self.x0) | (x > self.x1), 0.0, inner)

    def decodable_rate(self, x) -> np.ndarray:
        """Cumulative rate integral_0^x u rho(u) / (1 + u I(u)) du."""
        x = np.asarray(x, dtype=float)
        if self.degenerate:
            return np.zeros_like(x)
        if self._rate_table is None:
            from scipy.integrate import cumulative_trapezoid

            grid = np.linspace(self.x0, self.x1, _DENSE_RATE_POINTS)
            integrand = grid * self.density(grid) / (1.0 + grid * self.interference(grid))
            cum = cumulative_trapezoid(integrand, grid, initial=0.0)
            self._rate_table = (grid, cum)
        grid, cum = self._rate_table
        return np.interp(x, grid, cum, left=0.0, right=cum[-1])

    def validate(self) -> None:
        """Raise if the stored grid violates the profile invariants."""
        slack = 1e-8 * max(self.P, 1.0)
        if self.x0 > self.x1:
            raise DegenerateProfile("x0 exceeds x1")
        if self.degenerate:
            return
        if np.any(np.diff(self.xs) <= 0):
            raise DomainError("grid must be strictly increasing")
        if np.any(np.diff(self.I_vals) > slack):
            raise ProfileNonMonotone("interference values increase along the grid")
        if abs(self.I_vals[0] - self.P) > slack:
            raise DomainError(f"I(x0)={self.I_vals[0]} but budget P={self.P}")
        if self.I_vals[-1] > slack:
            raise DomainError(f"I(x1)={self.I_vals[-1]} does not reach 0")
        if np.any(self.rho_vals < -1e-9):
            raise DomainError("negative power density")

    def to_csv_text(self) -> str:
        """CSV with x, I, rho columns; metadata goes into '#' comment lines."""
        lines = [
            f"# P={float(self.P)!r}",
            f"# x0={float(self.x0)!r}",
            f"# x1={float(self.x1)!r}",
            f"# provenance={self.provenance}",
            "x,I,rho",
        ]
        lines += [f"{float(x)!r},{float(i)!r},{float(r)!r}"
                  for x, i, r in zip(self.xs, self.I_vals, self.rho_vals)]
        return "\n".join(lines) + "\n"

    def to_csv(self, path: str | Path) -> None:
        Path(path).write_text(self.to_csv_text())

    @classmethod
    def from_csv(cls, path: str | Path) -> "PowerProfile":
        meta = {}
        xs, ivals, rvals = [], [], []
        with open(path) as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                if line.startswith("#"):
                    key, _, val = line[1:].strip().partition("=")
                    meta[key.strip()] = val.strip()
                    continue
                if line.startswith("x,"):
                    continue
                a, b, c = line.split(",")
                xs.append(float(a))
                ivals.append(float(b))
                rvals.append(float(c))
        return cls(
            xs=np.asarray(xs),
            I_vals=np.asarray(ivals),
            rho_vals=np.asarray(rvals),
            P=float(meta["P"]),
            x0=float(meta["x0"]),
            x1=float(meta["x1"]),
            provenance=meta.get("provenance", "custom"),
        )


@dataclass(frozen=True)
class EulerResidualReport:
    """Normalized optimality-condition residuals on an interior probe grid."""

    xs: np.ndarray
    residuals: np.ndarray
    max_abs_residual: float


def rayleigh_condition_gap(x: float, I: float, lam1: float, lam2: float) -> float:
    """Optimality gap at layer x and interference I for exponential gain laws.

    Returns the difference between the two sides of the optimality condition
    after multiplying through by exp(1/(lam2 I)), which keeps both sides
    representable for small I (the raw exponential-integral difference
    underflows there). The scaling is positive, so the sign and the root are
    those of the raw condition:

        [E1(u) - E1(v)] - lam2 I (1 + (lam1 + x) I) / (1 + x I)^2
                          * [exp(-u) - exp(-v)],

    with u = 1/(lam2 I) and v = (1 + x I)/(lam2 I). Zero at the optimal I(x).
    """
    if not (x > 0 and I > 0 and lam1 > 0 and lam2 > 0):
        raise DomainError("rayleigh_condition_gap needs positive x, I, lam1, lam2")
    u = 1.0 / (lam2 * I)
    v = (1.0 + x * I) / (lam2 * I)
    diff = exp_integral_e1_scaled(u) - math.exp(-x / lam2) * exp_integral_e1_scaled(v)
    rhs = lam2 * I * (1.0 + (lam1 + x) * I) / (1.0 + x * I) ** 2 * (-math.expm1(-x / lam2))
    return diff - rhs


def solve_x1(lam1: float, lam2: float, tol: Tolerance = _BOUNDARY_TOL) -> float:
    """Upper boundary of the powered layer interval for exponential laws.

    Solves x + (lam1 + lam2) (exp(-x/lam2) - 1) = 0 for its unique nonzero
    root; depends only on the channel statistics, never on the budget P.
    """
    if not (lam1 > 0 and lam2 > 0):
        raise DomainError("lam1 and lam2 must be positive")
    f = lambda x: x + (lam1 + lam2) * math.expm1(-x / lam2)
    return find_root(f, 1e-6 * lam2, 10.0 * (lam1 + lam2), tol)


def solve_x0(lam1: float, lam2: float, P: float, tol: Tolerance = _BOUNDARY_TOL) -> float:
    """Lower boundary: the layer index where the optimal I reaches P."""
    if P <= 0:
        raise DomainError("P must be positive")
    x1 = solve_x1(lam1, lam2, tol)
    f = lambda x: rayleigh_condition_gap(x, P, lam1, lam2)
    try:
        return find_root(f, 1e-9 * x1, x1 * (1.0 - 1e-12), tol)
    except NoBracket as exc:
        raise DegenerateProfile(f"no interior x0 for P={P}: {exc}") from exc


def _march_root(g, hi_prev: float, tol: Tolerance) -> float:
    """Next interference knot given the previous one, robust near zero.

    The condition gap has a double root at I = 0, so its sign at extremely
    small I is dominated by rounding noise. Lower bracket endpoints are tried
    from large to small; if the gap never turns negative the true root is
    indistinguishable from zero and the layer gets no power.
    """
    hi = hi_prev * (1.0 + 1e-9) + 1e-300
    if g(hi) <= 0.0:
        return hi_prev
    for frac in (1e-2, 1e-4, 1e-6, 1e-8, 1e-10, 1e-12):
        lo = hi_prev * frac
        if g(lo) < 0.0:
            return find_root(g, lo, hi, tol)
    return 0.0


def _profile_from_knots(xs, I_vals, P, provenance) -> PowerProfile:
    xs = np.asarray(xs, dtype=float)
    I_vals = np.maximum(np.asarray(I_vals, dtype=float), 0.0)
    prof = PowerProfile(
        xs=xs, I_vals=I_vals, rho_vals=np.zeros_like(xs), P=float(P),
        x0=float(xs[0]), x1=float(xs[-1]), provenance=provenance,
    )
    prof.rho_vals = prof.density(xs)
    prof.validate()
    return prof


def _degenerate_profile(x_pt: float, provenance: str) -> PowerProfile:
    xs = np.array([x_pt, x_pt])
    z = np.zeros(2)
    return PowerProfile(xs=xs, I_vals=z.copy(), rho_vals=z.copy(), P=0.0,
                        x0=x_pt, x1=x_pt, provenance=provenance)


def solve_rayleigh_profile(lam1: float, lam2: float, P: float, n_grid: int = 256,
                           tol: Tolerance = DEFAULT_TOL) -> PowerProfile:
    """Optimal profile for an exponential/exponential gain pair.

    Solves the closed-form optimality gap for I at each grid point, marching
    from x0 (where I = P) toward x1 (where I = 0) so each solve starts from a
    bracket [~0, previous I]. The unique nonzero root is taken at every point.
    """
    if n_grid < 16:
        raise DomainError("n_grid must be at least 16")
    if not (lam1 > 0 and lam2 > 0):
        raise DomainError("lam1 and lam2 must be positive")
    if P < 1e-12:
        return _degenerate_profile(solve_x1(lam1, lam2), "optimal_rayleigh")
    x0 = solve_x0(lam1, lam2, P)
    x1 = solve_x1(lam1, lam2)
    xs = np.linspace(x0, x1, n_grid)
    I_vals = np.empty_like(xs)
    I_vals[0], I_vals[-1] = P, 0.0
    root_tol = Tolerance(abs_tol=1e-13 * max(P, 1.0), rel_tol=1e-13, max_iter=tol.max_iter)
    hi = P
    for k in range(1, n_grid - 1):
        if hi <= 1e-299:
            I_vals[k] = 0.0
            continue
        g = lambda I: rayleigh_condition_gap(xs[k], I, lam1, lam2)
        I_vals[k] = _march_root(g, hi, root_tol)
        hi = max(I_vals[k], 1e-300)
    return _profile_from_knots(xs, I_vals, P, "optimal_rayleigh")


def eve_cdf_integral(eve, x: float, I: float, tol: Tolerance) -> float:
    """integral_0^x F2(y) / (1 + y I)^2 dy for any eavesdropper law."""
    if isinstance(eve, ch.Constant):
        hs = eve.gain
        if x <= hs:
            return 0.0
        return (x - hs) / ((1.0 + hs * I) * (1.0 + x * I))
    f = lambda y: ch.eval_cdf(eve, y) / (1.0 + y * I) ** 2
    val, _ = integrate(f, 0.0, x, tol)
    return val


def nonfading_eve_profile(F1, h_star: float, P: float, n_grid: int = 256) -> PowerProfile:
    """Closed-form optimal profile when the eavesdropper gain is constant.

    I(x) = [1 - F1(x) - (x - h*) f1(x)] / [x (x - h*) f1(x) - h* (1 - F1(x))]
    on [x0, x1], clipped to [0, P]; x1 zeroes the numerator and x0 solves
    I(x0) = P.
    """
    if isinstance(F1, ch.Constant):
        raise DomainError("the legitimate channel law must have a density")
    if h_star < 0:
        raise DomainError("h_star must be nonnegative")
    if P < 1e-12:
        x1 = _nonfading_x1(F1, h_star)
        return _degenerate_profile(x1, "non_fading_eve")

    num = lambda x: (1.0 - ch.eval_cdf(F1, x)) - (x - h_star) * ch.eval_pdf(F1, x)
    den = lambda x: x * (x - h_star) * ch.eval_pdf(F1, x) - h_star * (1.0 - ch.eval_cdf(F1, x))
    x1 = _nonfading_x1(F1, h_star)
    # I(x0) = P  <=>  num - P * den = 0; positive at h*, negative at x1
    h = lambda x: num(x) - P * den(x)
    lo = h_star + 1e-12 * max(x1, 1.0)
    x0 = find_root(h, lo, x1 * (1.0 - 1e-12), _BOUNDARY_TOL)
    if not x0 < x1:
        raise DegenerateProfile("empty layer interval")
    xs = np.linspace(x0, x1, n_grid)
    I_vals = np.array([num(x) / den(x) for x in xs])
    I_vals = np.clip(I_vals, 0.0, P)
    I_vals[0], I_vals[-1] = P, 0.0
    return _profile_from_knots(xs, I_vals, P, "non_fading_eve")


def _nonfading_x1(F1, h_star: float) -> float:
    num = lambda x: (1.0 - ch.eval_cdf(F1, x)) - (x - h_star) * ch.eval_pdf(F1, x)
    lo = h_star + 1e-12
    hi = max(2.0 * ch.inverse_cdf(F1, 0.5) + h_star, lo * 2.0, 1e-6)
    upper = ch.gain_upper_bound(F1) + h_star
    while num(hi) > 0.0:
        hi *= 2.0
        if hi > 4.0 * upper:
            raise DegenerateProfile("no upper boundary: numerator never changes sign")
    return find_root(num, lo, hi, _BOUNDARY_TOL)


def nonsecret_profile(F1, P: float, n_grid: int = 256) -> PowerProfile:
    """Profile maximizing the plain average decodable rate (no secrecy).

    Closed form I(x) = (1 - F1(x)) / (x^2 f1(x)) - 1/x, clipped to [0, P].
    """
    if isinstance(F1, ch.Constant):
        raise DomainError("the legitimate channel law must have a density")
    I_of = lambda x: (1.0 - ch.eval_cdf(F1, x)) / (x * x * ch.eval_pdf(F1, x)) - 1.0 / x
    num = lambda x: (1.0 - ch.eval_cdf(F1, x)) - x * ch.eval_pdf(F1, x)
    if P < 1e-12:
        x1 = _nonfading_x1(F1, 0.0)
        return _degenerate_profile(x1, "non_secret")
    x1 = _nonfading_x1(F1, 0.0)
    h = lambda x: num(x) - P * x * x * ch.eval_pdf(F1, x)
    x0 = find_root(h, 1e-12 * x1, x1 * (1.0 - 1e-12), _BOUNDARY_TOL)
    xs = np.linspace(x0, x1, n_grid)
    I_vals = np.clip([I_of(x) for x in xs], 0.0, P)
    I_vals[0], I_vals[-1] = P, 0.0
    return _profile_from_knots(xs, I_vals, P, "non_secret")


def general_profile(pair: ch.ChannelPair, P: float, n_grid: int = 64,
                    tol: Tolerance = DEFAULT_TOL) -> PowerProfile:
    """Optimal profile for arbitrary gain laws with densities.

    At each grid point the optimality condition is solved for I with the left
    side evaluated by adaptive quadrature, so this route is independent of
    any closed form. A constant-gain eavesdropper delegates to the
    closed-form constant-eve profile.
    """
    if isinstance(pair.eve, ch.Constant):
        return nonfading_eve_profile(pair.bob, pair.eve.gain, P, n_grid)
    if isinstance(pair.bob, ch.Constant):
        raise DomainError("the legitimate channel law must have a density")
    bob, eve = pair.bob, pair.eve
    quad_tol = Tolerance(abs_tol=1e-12, rel_tol=1e-12, max_iter=tol.max_iter)

    def gap(x: float, I: float) -> float:
        lhs = eve_cdf_integral(eve, x, I, quad_tol)
        rhs = (1.0 - ch.eval_cdf(bob, x)) * ch.eval_cdf(eve, x) / (
            ch.eval_pdf(bob, x) * (1.0 + x * I) ** 2)
        return lhs - rhs

    # upper boundary from the I = 0 reduction of the condition
    def phi(x: float) -> float:
        val, _ = integrate(lambda y: ch.eval_cdf(eve, y), 0.0, x, quad_tol)
        return val - (1.0 - ch.eval_cdf(bob, x)) * ch.eval_cdf(eve, x) / ch.eval_pdf(bob, x)

    hi = max(2.0 * ch.inverse_cdf(bob, 0.5), 1e-3)
    cap = 4.0 * (ch.gain_upper_bound(bob) + ch.gain_upper_bound(eve))
    while phi(hi) < 0.0:
        hi *= 2.0
        if hi > cap:
            raise DegenerateProfile("no upper boundary found")
    x1 = find_root(phi, 1e-9 * hi, hi, _BOUNDARY_TOL)
    if P < 1e-12:
        return _degenerate_profile(x1, "optimal_general")
    try:
        x0 = find_root(lambda x: gap(x, P), 1e-9 * x1, x1 * (1.0 - 1e-12), _BOUNDARY_TOL)
    except NoBracket as exc:
        raise DegenerateProfile(f"no interior x0 for P={P}: {exc}") from exc

    xs = np.linspace(x0, x1, n_grid)
    I_vals = np.empty_like(xs)
    I_vals[0], I_vals[-1] = P, 0.0
    root_tol = Tolerance(abs_tol=1e-11 * max(P, 1.0), rel_tol=1e-11, max_iter=tol.max_iter)
    hi_I = P
    for k in range(1, n_grid - 1):
        if hi_I <= 1e-299:
            I_vals[k] = 0.0
            continue
        I_vals[k] = _march_root(lambda I: gap(xs[k], I), hi_I, root_tol)
        hi_I = max(I_vals[k], 1e-300)
    return _profile_from_knots(xs, I_vals, P, "optimal_general")


def euler_residual(profile: PowerProfile, pair: ch.ChannelPair,
                   probes: int = 64) -> EulerResidualReport:
    """Check the optimality condition on interior probes by quadrature.

    The left side is integrated numerically from the channel cdf (never the
    closed form used while solving), so this serves as an independent oracle
    for any profile. Residuals are normalized by max(|LHS|, |RHS|, 1e-12).
    """
    if profile.degenerate:
        return EulerResidualReport(np.array([]), np.array([]), 0.0)
    quad_tol = Tolerance(abs_tol=1e-13, rel_tol=1e-13, max_iter=400)
    ts = (np.arange(probes) + 1.0) / (probes + 1.0)
    xs = profile.x0 + (profile.x1 - profile.x0) * ts
    res = np.empty(probes)
    for k, x in enumerate(xs):
        I = float(profile.interference(x))
        lhs = eve_cdf_integral(pair.eve, x, I, quad_tol)
        rhs = (1.0 - ch.eval_cdf(pair.bob, x)) * ch.eval_cdf(pair.eve, x) / (
            ch.eval_pdf(pair.bob, x) * (1.0 + x * I) ** 2)
        res[k] = (lhs - rhs) / max(abs(lhs), abs(rhs), 1e-12)
    return EulerResidualReport(xs, res, float(np.max(np.abs(res))))


def single_level_profile(s_star: float, P: float, width: float = 1e-3,
                         n_grid: int = 33) -> PowerProfile:
    """All power on one layer at s_star, as a narrow linear ramp of I.

    A continuous stand-in for the single-codebook scheme: I falls linearly
    from P to 0 over [s_star - width, s_star].
    """
    if not (s_star > width > 0):
        raise DomainError("need s_star > width > 0")
    if P < 1e-12:
        return _degenerate_profile(s_star, "single_level(R1=0)")
    xs = np.linspace(s_star - width, s_star, n_grid)
    I_vals = P * (xs[-1] - xs) / width
    r1 = math.log1p(s_star * P)
    return _profile_from_knots(xs, I_vals, P, f"single_level(R1={r1:.12g})")


def custom_profile(xs, I_vals, provenance: str = "custom") -> PowerProfile:
    """Wrap externally supplied knots; the budget is read off I at x0."""
    xs = np.asarray(xs, dtype=float)
    I_vals = np.asarray(I_vals, dtype=float)
    return _profile_from_knots(xs, I_vals, float(I_vals[0]), provenance)


def density_center_of_mass(profile: PowerProfile) -> float:
    """Mean layer index weighted by the power density (a diagnostic)."""
    if profile.degenerate:
        return profile.x0
    grid = np.linspace(profile.x0, profile.x1, 4097)
    rho = profile.density(grid)
    total = np.trapezoid(rho, grid)
    if total <= 0:
        return profile.x0
    return float(np.trapezoid(grid * rho, grid) / total)
