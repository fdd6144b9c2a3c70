"""Acceptance criteria, one test per criterion.

Each test prints a single PASS/FAIL line (visible with `pytest -s` or in the
captured-output section). Tolerances are fixed here, not tuned elsewhere.
"""

import math
import time

import numpy as np

from layerkey import (
    ChannelPair,
    LayerAllocation,
    LStateChannel,
    Rayleigh,
    Tolerance,
    custom_profile,
    discretize_profile,
    euler_residual,
    exp_integral_e1,
    general_profile,
    integrate,
    finite_state_key_rate,
    nonfading_eve_profile,
    nonsecret_profile,
    rate_full_csit,
    rate_density_form,
    rate_optimal_rayleigh,
    rate_single_level,
    rate_reward_average,
    run_protocol,
    simulate_rewards,
    single_level_objective,
    single_level_profile,
    solve_rayleigh_profile,
    solve_x1,
    toy_equivocation,
)
from layerkey.key_rate import _inner_cdf_integral
from layerkey.power_allocation import eve_cdf_integral

LN2 = math.log(2.0)
PAIR = ChannelPair(Rayleigh(1.0), Rayleigh(1.0))
QUAD = Tolerance(abs_tol=1e-13, rel_tol=1e-13, max_iter=400)


def _report(num, desc, ok, started, detail=""):
    status = "PASS" if ok else "FAIL"
    extra = f" [{detail}]" if detail else ""
    print(f"ACCEPTANCE {num:02d} {status} ({time.time() - started:5.1f}s) {desc}{extra}")
    assert ok, f"criterion {num}: {desc}{extra}"


def test_01_dual_form_equality():
    t0 = time.time()
    rng = np.random.default_rng(2024)
    worst = 0.0
    for k in range(20):
        lam1, lam2 = rng.uniform(0.25, 4.0, size=2)
        P = rng.uniform(0.5, 20.0)
        pair = ChannelPair(Rayleigh(lam1), Rayleigh(lam2))
        kind = k % 6
        if kind == 0:
            prof = solve_rayleigh_profile(lam1, lam2, P, n_grid=128)
        elif kind == 1:
            prof = nonsecret_profile(Rayleigh(lam1), P, n_grid=128)
        elif kind == 2:
            prof = nonfading_eve_profile(Rayleigh(lam1), 0.3 * lam2, P, n_grid=128)
        elif kind == 3:
            prof = single_level_profile(lam1 * rng.uniform(0.4, 1.5), P)
        elif kind == 4:
            base = solve_rayleigh_profile(lam1, lam2, P, n_grid=128)
            gamma = rng.uniform(0.7, 1.4)
            prof = custom_profile(base.xs, P * (base.I_vals / P) ** gamma, "custom")
        else:
            prof = general_profile(pair, P, n_grid=24)
        a = rate_reward_average(pair, prof).rate
        b = rate_density_form(pair, prof).rate
        gap = abs(a - b) / max(a, b, 1e-3)
        worst = max(worst, gap)
    _report(1, "dual-form rate equality on 20 randomized profiles", worst <= 1e-5,
            t0, f"worst rel gap {worst:.2e}")


def test_02_optimality_condition_residual():
    t0 = time.time()
    worst = 0.0
    for P in (1.0, 5.0, 20.0):
        prof = solve_rayleigh_profile(1.0, 1.0, P)
        rep = euler_residual(prof, PAIR, probes=64)
        worst = max(worst, rep.max_abs_residual)
    _report(2, "optimality-condition residual by quadrature oracle", worst <= 1e-6,
            t0, f"max residual {worst:.2e}")


def test_03_closed_form_integral_identity():
    t0 = time.time()
    rng = np.random.default_rng(30)
    worst = 0.0
    for _ in range(100):
        x = rng.uniform(0.05, 5.0)
        I = rng.uniform(0.01, 20.0)
        lam2 = rng.uniform(0.25, 4.0)
        closed = _inner_cdf_integral(Rayleigh(lam2), x, I, QUAD)
        quad = eve_cdf_integral(Rayleigh(lam2), x, I, QUAD)
        worst = max(worst, abs(closed - quad))
    _report(3, "exponential-integral closed form vs direct quadrature (100 triples)",
            worst <= 1e-8, t0, f"worst abs gap {worst:.2e}")


def test_04_boundary_facts():
    t0 = time.time()
    x1 = solve_x1(1.0, 1.0)
    ok = abs(x1 - 1.5936) <= 1e-3
    tops = [solve_rayleigh_profile(1.0, 1.0, P).x1 for P in (1.0, 5.0, 20.0)]
    ok &= max(tops) - min(tops) <= 1e-8
    ns = nonsecret_profile(Rayleigh(1.0), 1.0)
    ok &= abs(ns.x0 - 0.6180) <= 1e-4
    ok &= abs(ns.x1 - 1.0) <= 1e-8
    _report(4, "boundary points: top layer fixed by statistics, no-secrecy closed forms",
            ok, t0, f"x1={x1:.6f}, spread {max(tops) - min(tops):.1e}, ns=({ns.x0:.6f},{ns.x1:.10f})")


def test_05_ordering_chain():
    t0 = time.time()
    ok = True
    detail = []
    for P in np.geomspace(0.25, 20.0, 12):
        P = float(P)
        slc = rate_single_level(1.0, 1.0, P)[0].rate
        lbc = rate_optimal_rayleigh(1.0, 1.0, P).rate
        csit = rate_full_csit(PAIR, P).rate
        ok &= 0.0 <= slc <= lbc <= csit
        if P >= 1.0:
            ok &= lbc - slc > 0.0
        detail.append((P, slc, lbc, csit))
    worst_margin = min(l - s for (P, s, l, c) in detail if P >= 1.0)
    _report(5, "rate ordering single-level <= layered <= full-CSIT on a 12-point power grid",
            ok, t0, f"min layered-vs-single margin at P>=1: {worst_margin:.2e}")


def test_06_single_level_closed_form():
    t0 = time.time()
    rng = np.random.default_rng(60)
    worst = 0.0
    for _ in range(10):
        lam1, lam2 = rng.uniform(0.25, 4.0, size=2)
        P = rng.uniform(0.5, 20.0)
        r1 = rng.uniform(0.05, math.log1p(10.0 * lam1 * P))
        closed = single_level_objective(r1, lam1, lam2, P)
        h1s = math.expm1(r1) / P
        inner, _ = integrate(
            lambda h2: (r1 - math.log1p(h2 * P)) * math.exp(-h2 / lam2) / lam2,
            0.0, h1s, QUAD)
        quad = math.exp(-h1s / lam1) * inner
        worst = max(worst, abs(closed - quad))
    _, r_star = rate_single_level(1.0, 1.0, 5.0)
    grid = np.linspace(0.0, math.log1p(100.0), 10**4 + 1)
    vals = [single_level_objective(float(r), 1.0, 1.0, 5.0) for r in grid]
    argmax_gap = abs(r_star - grid[int(np.argmax(vals))])
    ok = worst <= 1e-5 and argmax_gap <= 1e-4
    _report(6, "single-level closed form vs defining quadrature; optimizer vs grid search",
            ok, t0, f"worst value gap {worst:.2e}, argmax gap {argmax_gap:.2e}")


def _mc_within(chan, alloc, seed):
    formula = finite_state_key_rate(chan, alloc)
    mean, se, _ = simulate_rewards(chan, alloc, 10**6, seed)
    return abs(mean - formula) <= 3.0 * max(se, 1e-15), abs(mean - formula) / max(se, 1e-15)


def test_07_monte_carlo_consistency():
    t0 = time.time()
    rng = np.random.default_rng(70)
    ok = True
    zs = []
    for k, L in enumerate((2, 4, 8, 4, 8)):
        gains = np.sort(rng.uniform(0.05, 4.0, size=L))
        powers = rng.uniform(0.1, 1.0, size=L)
        joint = rng.uniform(size=(L, L))
        joint /= joint.sum()
        chan = LStateChannel(tuple(gains), tuple(tuple(r) for r in joint))
        alloc = LayerAllocation.from_powers(chan.gains, powers)
        good, z = _mc_within(chan, alloc, seed=100 + k)
        if not good:  # one retry permitted
            good, z = _mc_within(chan, alloc, seed=1100 + k)
        ok &= good
        zs.append(z)
    chan = LStateChannel((0.5, 2.0), ((0.25, 0.25), (0.25, 0.25)))
    alloc = LayerAllocation.from_powers(chan.gains, (0.6, 0.4))
    mean, se, _ = simulate_rewards(chan, alloc, 10**6, seed=7)
    ok &= abs(mean - 0.10136627702704112) <= 3.0 * se
    _report(7, "simulated rewards match the finite-state rate within 3 sigma",
            ok, t0, f"|z| values {', '.join(f'{z:.2f}' for z in zs)}")


def test_08_discretization_convergence():
    t0 = time.time()
    prof = solve_rayleigh_profile(1.0, 1.0, 5.0)
    target = rate_reward_average(PAIR, prof).rate
    errs = {}
    for L in (25, 200):
        chan, alloc = discretize_profile(prof, PAIR, L)
        errs[L] = abs(finite_state_key_rate(chan, alloc) - target) / target
    ok = errs[200] <= 0.01 and errs[200] <= errs[25]
    _report(8, "finite-state quantization converges to the continuum rate",
            ok, t0, f"rel err L=25: {errs[25]:.4f}, L=200: {errs[200]:.4f}")


def test_09_protocol_correctness():
    t0 = time.time()
    chan = LStateChannel((0.5, 2.0), ((0.25, 0.25), (0.25, 0.25)))
    alloc = LayerAllocation.from_powers(chan.gains, (0.6, 0.4))
    ok = all(run_protocol(chan, alloc, M=100, scale=16, seed=s).keys_match
             for s in range(100))
    out = run_protocol(chan, alloc, M=10**4, scale=64, seed=5)
    budget = 10**4 * 64 * finite_state_key_rate(chan, alloc) / LN2
    acct = abs(out.key_bits - budget) / budget
    ok &= acct <= 0.05
    _report(9, "key agreement on 100 seeds; key-length accounting within 5%",
            ok, t0, f"accounting gap {acct:.3%}")


def test_10_toy_equivocation():
    t0 = time.time()
    # bottom layer too weak to carry bits; eavesdropper always one state behind
    chan = LStateChannel((0.05, 2.0), ((0.0, 0.0), (1.0, 0.0)))
    alloc = LayerAllocation.from_powers(chan.gains, (0.1, 0.9))
    budget_bits = finite_state_key_rate(chan, alloc) * 4 * 3 / LN2
    kb = int(math.floor(0.8 * budget_bits))
    ent, key_ent = toy_equivocation(chan, alloc, M=4, scale=3, seed=1, key_bits=kb)
    ok = ent >= 0.95 * key_ent
    # eavesdropper matching the legitimate state every slot: zero entropy left
    chan_eq = LStateChannel((0.05, 2.0), ((0.0, 0.0), (0.0, 1.0)))
    ent0, _ = toy_equivocation(chan_eq, alloc, M=4, scale=3, seed=1, key_bits=8)
    ok &= ent0 == 0.0
    _report(10, "exhaustive equivocation: near-uniform key below budget, zero when matched",
            ok, t0, f"H(K|eve)/H(K) = {ent / key_ent:.4f}, matched-case H = {ent0}")


def test_11_exponential_integral_accuracy():
    t0 = time.time()
    tol = Tolerance(abs_tol=1e-300, rel_tol=5e-13, max_iter=400)
    worst = 0.0
    for x in np.geomspace(1e-2, 50.0, 200):
        x = float(x)
        ref, _ = integrate(lambda t: math.exp(-t) / t, x, x + 90.0, tol)
        worst = max(worst, abs(exp_integral_e1(x) - ref) / ref)
    _report(11, "exponential integral E1 vs quadrature oracle on [1e-2, 50]",
            worst <= 1e-10, t0, f"worst rel err {worst:.2e}")
