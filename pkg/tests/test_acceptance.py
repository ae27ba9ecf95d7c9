"""Acceptance criteria, one test per criterion.

Each test prints a PASS/FAIL line (collected again in the terminal summary).
All randomness derives from ACCEPTANCE_SEED, fixed before the first run.
"""

import math
import time

import numpy as np
import pytest

from weaktrap import rng
from weaktrap.analysis import GATE_FACTOR, collect_points, fit_points, fit_slope
from weaktrap.benchmarks import get_benchmark, ou_exact_x2sq, talay_exact_normsq
from weaktrap.cli import main
from weaktrap.ensemble import EnsembleSpec, degenerate_sweep, run_ensemble
from weaktrap.model import NoiseChannel, SdeSystem
from weaktrap.richardson import run_richardson
from weaktrap.schemes import make_theta_scheme, wt_step

ACCEPTANCE_SEED = 20261016


def seed_for(n: int) -> int:
    return rng.derive_seed(ACCEPTANCE_SEED, n)


def _points_summary(points):
    return ", ".join(f"h=1/{round(1 / p.h)}: {p.error:+.4g}±{p.stderr:.2g}" for p in points)


def _gate_ok(points):
    return all(abs(p.error) >= GATE_FACTOR * p.stderr for p in points)


def test_c01_alpha_invariants(criterion):
    t0 = time.perf_counter()
    thetas = np.random.default_rng(seed_for(1) % 2**32).uniform(0.01, 0.99, 1000)
    worst = 0.0
    ordered = True
    for theta in thetas:
        s = make_theta_scheme(theta)
        worst = max(worst, abs(s.alpha1 - s.alpha2 - 1.0))
        ordered &= s.alpha1 > s.alpha2 > 0
    half = make_theta_scheme(0.5)
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-12 and ordered and (half.alpha1, half.alpha2) == (2.0, 1.0) and elapsed < 1
    criterion(1, "alpha invariants", ok,
              f"max|a1-a2-1|={worst:.2e}, ordered={ordered}, theta=1/2 -> "
              f"({half.alpha1}, {half.alpha2}), {elapsed:.3f}s")
    assert ok


def test_c02_additive_noise_exactness(criterion):
    t0 = time.perf_counter()
    gen = np.random.default_rng(seed_for(2) % 2**32)
    beta = np.array([0.8, -0.3, 1.7])
    sigmas = np.array([0.6, 1.9])
    nus = np.array([[1.0, 0.5, -2.0], [0.0, 1.0, 1.0]])
    sys = SdeSystem(
        3,
        lambda x: np.broadcast_to(beta, x.shape),
        tuple(NoiseChannel(lambda x, s=s: np.full(x.shape[:-1], s), nu)
              for s, nu in zip(sigmas, nus)),
    )
    worst = 0.0
    for theta in (0.5, 0.25, 0.75):
        h = 0.1
        n = 10_000
        x = gen.normal(size=(n, 3))
        e1, e2 = gen.normal(size=(n, 2)), gen.normal(size=(n, 2))
        got = wt_step(sys, x, h, make_theta_scheme(theta), e1, e2)
        noise = e1 * math.sqrt(theta * h) + e2 * math.sqrt((1 - theta) * h)
        want = x + beta * h + (sigmas * noise) @ nus
        rel = np.max(np.abs(got.state - want), axis=1) / np.max(np.abs(want), axis=1)
        worst = max(worst, float(rel.max()))
        assert not got.degenerate.any()
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-14 and elapsed < 1
    criterion(2, "additive-noise exactness", ok,
              f"max relative deviation {worst:.2e} over 3x10^4 steps, {elapsed:.3f}s")
    assert ok


def test_c03_deterministic_reduction(criterion):
    t0 = time.perf_counter()
    gen = np.random.default_rng(seed_for(3) % 2**32)
    f = lambda x: np.sin(x) + 0.5 * x
    sys = SdeSystem(1, f)
    worst = 0.0
    for theta, h, x0 in zip(gen.uniform(0.01, 0.99, 1000), gen.uniform(1e-3, 1, 1000),
                            gen.normal(scale=3, size=1000)):
        got = wt_step(sys, [x0], h, make_theta_scheme(theta), [], []).state[0]
        ystar = x0 + f(x0) * theta * h
        want = x0 + h * (f(ystar) / (2 * theta) + (1 - 1 / (2 * theta)) * f(x0))
        worst = max(worst, abs(got - want) / max(abs(want), 1.0))
    linear = get_benchmark("linear-1d")
    scheme = make_theta_scheme(0.5)
    errs = []
    for h in (1 / 4, 1 / 8, 1 / 16, 1 / 32):
        x = linear.x0.copy()
        for _ in range(round(1 / h)):
            x = wt_step(linear.system, x, h, scheme, [], []).state
        errs.append((h, math.e - x[0]))
    slope = fit_slope(errs).slope
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-14 and slope >= 1.9 and elapsed < 1
    criterion(3, "deterministic reduction", ok,
              f"max deviation from fractional trapezoid {worst:.2e}; dX=X dt slope {slope:.4f}; "
              f"{elapsed:.3f}s")
    assert ok


def test_c04_ou_convergence(criterion):
    t0 = time.perf_counter()
    exact = ou_exact_x2sq(1.0, (1.0, 1.0))
    seed = seed_for(4)
    wt = collect_points("ou", "wt", 0.5, [1 / 4, 1 / 6, 1 / 8, 1 / 12], 1.0, 4_000_000, seed,
                        "x2sq", exact)
    comps = {
        s: collect_points("ou", s, None, [1 / 3, 1 / 9, 1 / 27], 1.0, 500_000, seed, "x2sq", exact)
        for s in ("euler", "midpoint-drift")
    }
    ok = True
    details = []
    # the gate is part of this criterion: fit_points refuses sampling-dominated points
    for name, pts, lo, hi in [("wt", wt, 1.6, 2.4),
                              ("euler", comps["euler"], 0.75, 1.25),
                              ("midpoint-drift", comps["midpoint-drift"], 0.75, 1.25)]:
        gate = _gate_ok(pts)
        slope = fit_points(name, None, pts).slope if gate else fit_slope([(p.h, p.error) for p in pts]).slope
        good = gate and lo <= slope <= hi
        ok &= good
        details.append(f"{name} slope {slope:.3f} in [{lo}, {hi}] gate={'ok' if gate else 'FAILED'} "
                       f"({_points_summary(pts)})")
    criterion(4, "ou convergence orders", ok,
              f"exact={exact:.6f}; " + "; ".join(details) + f"; {time.perf_counter() - t0:.0f}s")
    assert ok


def test_c05_talay_convergence(criterion):
    t0 = time.perf_counter()
    exact = talay_exact_normsq(1.0, (1.0, 1.0))
    seed = seed_for(5)
    hs = [1 / 2, 1 / 4, 1 / 8, 1 / 16]
    ok = True
    details = []
    for name, lo, hi in [("wt", 1.6, 2.6), ("euler", 0.7, 1.3), ("midpoint-drift", 0.7, 1.3)]:
        pts = collect_points("talay", name, 0.5 if name == "wt" else None, hs, 1.0, 1_000_000,
                             seed, "norm-sq", exact)
        slope = fit_slope([(p.h, p.error) for p in pts]).slope
        good = lo <= slope <= hi
        ok &= good
        details.append(f"{name} slope {slope:.3f} in [{lo}, {hi}] "
                       f"(gate {'ok' if _gate_ok(pts) else 'not met'}; {_points_summary(pts)})")
    criterion(5, "talay convergence orders", ok,
              f"exact={exact:.6f}; " + "; ".join(details) + f"; {time.perf_counter() - t0:.0f}s")
    assert ok


def test_c06_theta_degenerate_curve(criterion):
    t0 = time.perf_counter()
    thetas = [round(0.02 * k, 2) for k in range(1, 50)]
    frac = dict(degenerate_sweep("theta-test", thetas, 0.1, 1.0, 10_000, seed_for(6)))
    argmin = min(frac, key=frac.get)
    elapsed = time.perf_counter() - t0
    ok = (frac[0.5] < frac[0.1] and frac[0.5] < frac[0.9] and 0.32 <= argmin <= 0.52
          and elapsed < 60)
    criterion(6, "theta degenerate-step curve", ok,
              f"f(0.1)={frac[0.1]:.4f}, f(0.5)={frac[0.5]:.4f}, f(0.9)={frac[0.9]:.4f}, "
              f"argmin theta={argmin} (min {frac[argmin]:.4f}); {elapsed:.1f}s")
    assert ok


def test_c07_clipping_decay(criterion):
    t0 = time.perf_counter()
    coarse, fine = [], []
    for rep in range(5):
        seed = rng.derive_seed(seed_for(7), rep)
        coarse.append(run_ensemble(EnsembleSpec("theta-test", "wt", 0.1, 1.0, 10_000, seed)).degenerate_fraction)
        fine.append(run_ensemble(EnsembleSpec("theta-test", "wt", 1 / 80, 1.0, 10_000, seed)).degenerate_fraction)
    elapsed = time.perf_counter() - t0
    c, f = float(np.mean(coarse)), float(np.mean(fine))
    ok = f < c and elapsed < 60
    criterion(7, "clipping-probability decay", ok,
              f"mean degenerate fraction h=1/10: {c:.5f}, h=1/80: {f:.6f}; {elapsed:.1f}s")
    assert ok


def test_c08_theta_accuracy(criterion):
    t0 = time.perf_counter()
    exact = ou_exact_x2sq(1.0, (1.0, 1.0))
    hs = [1 / 3, 1 / 4, 1 / 6, 1 / 8]
    slopes = {}
    details = []
    for theta in (0.05, 0.25, 0.5, 0.75):
        pts = collect_points("ou", "wt", theta, hs, 1.0, 1_000_000, seed_for(8), "x2sq", exact)
        slopes[theta] = fit_slope([(p.h, p.error) for p in pts]).slope
        details.append(f"theta={theta}: {slopes[theta]:.3f} (gate {'ok' if _gate_ok(pts) else 'not met'})")
    ok = all(s >= 1.5 for s in slopes.values()) and slopes[0.5] >= slopes[0.05] - 0.05
    criterion(8, "theta-dependence of accuracy", ok,
              "; ".join(details) + f"; h grid 1/3,1/4,1/6,1/8; {time.perf_counter() - t0:.0f}s")
    assert ok


def test_c09_richardson_comparator(criterion):
    t0 = time.perf_counter()
    exact = ou_exact_x2sq(1.0, (1.0, 1.0))
    hs = [1 / 4, 1 / 8, 1 / 16]
    seed = seed_for(9)
    pts = collect_points("ou", "richardson", None, hs, 1.0, 1_000_000, seed, "x2sq", exact)
    slope = fit_slope([(p.h, p.error) for p in pts]).slope
    var_ok = True
    var_details = []
    for i, h in enumerate(hs):
        coupled = pts[i].estimate.variance
        # independently sampled pairs: separate Euler ensembles at h/2 and h
        half = run_ensemble(EnsembleSpec("ou", "euler", h / 2, 1.0, 1_000_000,
                                         rng.derive_seed(seed, 100 + i)), keep_values=True)
        full = run_ensemble(EnsembleSpec("ou", "euler", h, 1.0, 1_000_000,
                                         rng.derive_seed(seed, 200 + i)), keep_values=True)
        independent = float(np.var(2 * half.values - full.values, ddof=1))
        var_ok &= coupled < independent
        var_details.append(f"h=1/{round(1 / h)} {coupled:.1f} vs {independent:.1f}")
    ok = slope >= 1.6 and var_ok
    criterion(9, "Richardson comparator", ok,
              f"extrapolated-error slope {slope:.3f} >= 1.6 (gate {'ok' if _gate_ok(pts) else 'not met'}; "
              f"{_points_summary(pts)}); coupled vs independent variance: "
              + ", ".join(var_details) + f"; {time.perf_counter() - t0:.0f}s")
    assert ok


COMMANDS = [
    ["simulate", "--system", "ou", "--scheme", "wt", "--h", "1/4", "--paths", "70000"],
    ["simulate", "--system", "talay", "--scheme", "euler", "--h", "1/4", "--paths", "70000"],
    ["simulate", "--system", "talay", "--scheme", "midpoint-drift", "--h", "1/4", "--paths", "70000"],
    ["simulate", "--system", "ou", "--scheme", "richardson", "--h", "1/4", "--paths", "70000"],
    ["simulate", "--system", "const", "--h", "0.1", "--paths", "10"],
    ["convergence", "--system", "ou", "--scheme", "wt,euler", "--h-list", "1/2,1/3,1/4",
     "--paths", "70000"],
    ["convergence", "--self-test"],
    ["theta-sweep", "--mode", "frac", "--system", "theta-test", "--h", "0.1", "--paths", "40000",
     "--theta-list", "0.1,0.42,0.9"],
    ["theta-sweep", "--mode", "slope", "--system", "ou", "--h-list", "1/2,1/3,1/4",
     "--paths", "70000", "--theta-list", "0.25,0.75"],
]


def test_c10_determinism_and_golden_csv(criterion, tmp_path):
    t0 = time.perf_counter()
    out = tmp_path / "run.csv"
    mismatched = []
    for argv in COMMANDS:
        blobs = []
        for workers in ("1", "3"):
            code = main([*argv, "--seed", "11", "--workers", workers, "--out", str(out)])
            assert code in (0, 1)
            blobs.append(out.read_bytes())
        if blobs[0] != blobs[1]:
            mismatched.append(" ".join(argv[:3]))
    elapsed = time.perf_counter() - t0
    ok = not mismatched and elapsed < 60
    criterion(10, "determinism and CSV golden files", ok,
              f"{len(COMMANDS)} commands byte-identical across --workers 1/3"
              + (f"; mismatched: {mismatched}" if mismatched else "") + f"; {elapsed:.1f}s")
    assert ok
