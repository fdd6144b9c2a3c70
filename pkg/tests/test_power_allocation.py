import math

import numpy as np
import pytest

from layerkey import (
    ChannelPair,
    Constant,
    DomainError,
    PowerProfile,
    ProfileNonMonotone,
    Rayleigh,
    Tolerance,
    custom_profile,
    density_center_of_mass,
    euler_residual,
    general_profile,
    nonfading_eve_profile,
    nonsecret_profile,
    rayleigh_condition_gap,
    single_level_profile,
    solve_rayleigh_profile,
    solve_x0,
    solve_x1,
)
from layerkey.key_rate import _inner_cdf_integral
from layerkey.power_allocation import eve_cdf_integral

PAIR = ChannelPair(Rayleigh(1.0), Rayleigh(1.0))
QUAD_TOL = Tolerance(abs_tol=1e-13, rel_tol=1e-13, max_iter=400)


def _raw_condition_gap(x, I, lam1, lam2):
    """Optimality-condition gap straight from the defining integrals."""
    lhs = eve_cdf_integral(Rayleigh(lam2), x, I, QUAD_TOL)
    rhs = lam1 * (-math.expm1(-x / lam2)) / (1.0 + x * I) ** 2
    return lhs - rhs


class TestConditionGap:
    def test_domain(self):
        for bad in [(-1, 1, 1, 1), (1, 0, 1, 1), (1, 1, -2, 1), (1, 1, 1, 0)]:
            with pytest.raises(DomainError):
                rayleigh_condition_gap(*bad)

    def test_sign_scan_unique_root(self):
        # one sign change across a wide log-spaced interference grid
        gaps = np.array([rayleigh_condition_gap(1.0, I, 1.0, 1.0)
                         for I in np.geomspace(1e-6, 10.0, 1000)])
        signs = np.sign(gaps[np.abs(gaps) > 0])
        assert np.sum(np.diff(signs) != 0) == 1

    def test_root_zeroes_raw_condition(self):
        # the closed-form root also zeroes the quadrature form of the condition
        from layerkey import find_root

        for x, lam1, lam2 in [(1.0, 1.0, 1.0), (0.7, 2.0, 0.5), (1.4, 1.0, 1.0)]:
            root = find_root(lambda I: rayleigh_condition_gap(x, I, lam1, lam2),
                             1e-9, 100.0, Tolerance(abs_tol=1e-14, rel_tol=1e-14))
            assert abs(_raw_condition_gap(x, root, lam1, lam2)) < 1e-6

    def test_closed_form_identity(self):
        # closed form of the cdf-weighted integral vs direct quadrature
        rng = np.random.default_rng(0)
        for _ in range(40):
            x = rng.uniform(0.05, 5.0)
            I = rng.uniform(0.01, 20.0)
            lam2 = rng.uniform(0.25, 4.0)
            closed = _inner_cdf_integral(Rayleigh(lam2), x, I, QUAD_TOL)
            quad = eve_cdf_integral(Rayleigh(lam2), x, I, QUAD_TOL)
            assert abs(closed - quad) < 1e-8


class TestBoundaries:
    def test_x1_symmetric(self):
        assert solve_x1(1.0, 1.0) == pytest.approx(1.5936, abs=1e-4)
        assert solve_x1(2.0, 2.0) == pytest.approx(2.0 * solve_x1(1.0, 1.0), rel=1e-10)

    def test_x1_scaling(self):
        base = solve_x1(1.0, 1.0)
        for c in (0.25, 0.5, 3.0):
            assert solve_x1(c, c) == pytest.approx(c * base, rel=1e-8)

    def test_x0_solves_gap(self):
        for P in (1.0, 5.0, 20.0):
            x0 = solve_x0(1.0, 1.0, P)
            assert abs(rayleigh_condition_gap(x0, P, 1.0, 1.0)) < 1e-10
            assert x0 < solve_x1(1.0, 1.0)

    def test_x0_decreases_with_power(self):
        xs = [solve_x0(1.0, 1.0, P) for P in (1.0, 5.0, 20.0)]
        assert xs[0] > xs[1] > xs[2]


class TestRayleighProfile:
    def test_invariants(self):
        prof = solve_rayleigh_profile(1.0, 1.0, 20.0)
        prof.validate()
        assert np.all(np.diff(prof.I_vals) <= 1e-8 * 20.0)
        assert prof.I_vals[0] == pytest.approx(20.0, abs=1e-6)
        assert prof.I_vals[-1] <= 1e-6
        assert np.all(prof.rho_vals >= -1e-9)
        # total power recovered from the density
        grid = np.linspace(prof.x0, prof.x1, 20001)
        mass = np.trapezoid(prof.density(grid), grid)
        assert mass == pytest.approx(20.0, rel=1e-6)

    def test_x1_independent_of_power(self):
        tops = {solve_rayleigh_profile(1.0, 1.0, P).x1 for P in (1.0, 5.0, 20.0)}
        assert max(tops) - min(tops) <= 1e-8

    def test_euler_residual_small(self):
        prof = solve_rayleigh_profile(1.0, 1.0, 5.0)
        rep = euler_residual(prof, PAIR, probes=64)
        assert rep.max_abs_residual <= 1e-6

    def test_degenerate_power(self):
        prof = solve_rayleigh_profile(1.0, 1.0, 0.0)
        assert prof.degenerate
        assert prof.interference(0.5) == 0.0
        assert prof.decodable_rate(2.0) == 0.0

    def test_grid_too_small(self):
        with pytest.raises(DomainError):
            solve_rayleigh_profile(1.0, 1.0, 5.0, n_grid=8)


class TestClosedFormProfiles:
    def test_nonsecret_rayleigh_curve(self):
        prof = nonsecret_profile(Rayleigh(1.0), 1.0)
        inner = prof.xs[1:-1]
        expect = 1.0 / inner**2 - 1.0 / inner
        assert np.allclose(prof.I_vals[1:-1], expect, atol=1e-12)

    def test_nonsecret_boundaries(self):
        prof = nonsecret_profile(Rayleigh(1.0), 1.0)
        assert prof.x0 == pytest.approx((math.sqrt(5.0) - 1.0) / 2.0, abs=1e-9)
        assert prof.x1 == pytest.approx(1.0, abs=1e-8)

    def test_nonfading_eve_reduces_to_nonsecret(self):
        a = nonfading_eve_profile(Rayleigh(1.0), 0.0, 5.0)
        b = nonsecret_profile(Rayleigh(1.0), 5.0)
        assert a.x0 == pytest.approx(b.x0, abs=1e-10)
        assert a.x1 == pytest.approx(b.x1, abs=1e-10)
        assert np.allclose(a.I_vals, b.interference(a.xs), atol=1e-9)

    def test_nonfading_eve_satisfies_condition(self):
        prof = nonfading_eve_profile(Rayleigh(1.0), 0.3, 5.0)
        rep = euler_residual(prof, ChannelPair(Rayleigh(1.0), Constant(0.3)), probes=48)
        assert rep.max_abs_residual <= 1e-6

    def test_nonfading_eve_monotone(self):
        prof = nonfading_eve_profile(Rayleigh(1.0), 0.3, 5.0)
        assert np.all(np.diff(prof.I_vals) <= 1e-12)

    def test_nonsecret_step_eve_residual(self):
        prof = nonsecret_profile(Rayleigh(1.0), 5.0)
        rep = euler_residual(prof, ChannelPair(Rayleigh(1.0), Constant(0.0)), probes=48)
        assert rep.max_abs_residual <= 1e-6

    def test_constant_bob_rejected(self):
        with pytest.raises(DomainError):
            nonsecret_profile(Constant(1.0), 5.0)
        with pytest.raises(DomainError):
            nonfading_eve_profile(Constant(1.0), 0.3, 5.0)


class TestGeneralProfile:
    def test_matches_closed_form_rayleigh(self):
        gen = general_profile(PAIR, 5.0, n_grid=48)
        ray = solve_rayleigh_profile(1.0, 1.0, 5.0)
        assert np.max(np.abs(gen.interference(gen.xs) - ray.interference(gen.xs))) < 1e-5

    def test_boundaries_match(self):
        gen = general_profile(PAIR, 5.0, n_grid=32)
        assert gen.x1 == pytest.approx(solve_x1(1.0, 1.0), abs=1e-8)
        assert gen.x0 == pytest.approx(solve_x0(1.0, 1.0, 5.0), abs=1e-8)

    def test_constant_eve_delegates(self):
        gen = general_profile(ChannelPair(Rayleigh(1.0), Constant(0.3)), 5.0, n_grid=64)
        ref = nonfading_eve_profile(Rayleigh(1.0), 0.3, 5.0, n_grid=64)
        assert np.allclose(gen.I_vals, ref.I_vals, atol=1e-6)


class TestEulerResidual:
    def test_perturbation_sensitivity(self):
        prof = solve_rayleigh_profile(1.0, 1.0, 5.0)
        bent = custom_profile(prof.xs, np.minimum(prof.I_vals * 1.1, 5.0 * 1.1))
        rep = euler_residual(bent, PAIR, probes=32)
        assert rep.max_abs_residual > 1e-3

    def test_probes_interior(self):
        prof = solve_rayleigh_profile(1.0, 1.0, 5.0)
        rep = euler_residual(prof, PAIR, probes=16)
        assert np.all(rep.xs > prof.x0) and np.all(rep.xs < prof.x1)


class TestProfileObject:
    def test_validation_rejects_increasing_interference(self):
        xs = np.linspace(1.0, 2.0, 8)
        I = np.array([5.0, 4.0, 3.0, 3.5, 2.0, 1.0, 0.5, 0.0])  # interior bump: invalid
        with pytest.raises(ProfileNonMonotone):
            custom_profile(xs, I)

    def test_validation_rejects_wrong_budget(self):
        xs = np.linspace(1.0, 2.0, 8)
        I = np.linspace(5.0, 1.0, 8)  # does not reach zero
        with pytest.raises(DomainError):
            custom_profile(xs, I)

    def test_csv_roundtrip(self, tmp_path):
        prof = solve_rayleigh_profile(1.0, 1.0, 5.0, n_grid=32)
        path = tmp_path / "profile.csv"
        prof.to_csv(path)
        back = PowerProfile.from_csv(path)
        assert back.P == prof.P
        assert back.x0 == prof.x0 and back.x1 == prof.x1
        assert back.provenance == prof.provenance
        assert np.array_equal(back.xs, prof.xs)
        assert np.array_equal(back.I_vals, prof.I_vals)
        assert np.array_equal(back.rho_vals, prof.rho_vals)

    def test_flat_extensions(self):
        prof = solve_rayleigh_profile(1.0, 1.0, 5.0)
        assert prof.interference(prof.x0 - 0.2) == 5.0
        assert prof.interference(prof.x1 + 0.2) == 0.0
        assert prof.density(prof.x0 - 0.2) == 0.0
        assert prof.density(prof.x1 + 0.2) == 0.0

    def test_single_level_profile(self):
        prof = single_level_profile(1.1, 5.0, width=1e-3)
        prof.validate()
        assert prof.provenance.startswith("single_level")
        assert prof.interference(1.1 - 2e-3) == 5.0
        assert prof.interference(1.1) == 0.0

    def test_center_of_mass_inside_support(self):
        for P in (1.0, 20.0):
            prof = solve_rayleigh_profile(1.0, 1.0, P)
            com = density_center_of_mass(prof)
            assert prof.x0 < com < prof.x1
