"""End-to-end acceptance checks, one test per criterion.

Each test records a one-line verdict that is printed in the terminal summary.
"""
import math
import time
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

from fxadjust.cli import main
from fxadjust.errors import ModelValidityError
from fxadjust.model import (
    AssetProcess,
    BorrowerParams,
    DebtSpec,
    FxParams,
    PairParams,
    adjust_pair,
    adjusted_correlation,
    adjusted_pd,
    consistency_residual,
    homogeneous_adjusted_correlation,
    joint_default_probability,
)
from fxadjust.numerics import (
    CorrMatrix3,
    bivariate_normal_cdf,
    norm_pdf,
    std_normal_cdf,
    std_normal_quantile,
)
from fxadjust.simulation import (
    SimConfig,
    equivalent_pair,
    simulate_gbm_paths,
    simulate_reduced,
    standard_error,
)
from test_numerics import QUANTILE_TABLE

DATA = Path(__file__).parent / "data"


def _valid_pair(rng, *, pd_range, sigma_range, tau_range, nu_range=(0.0, 0.0),
                r_range=(0.0, 0.0), rho_range=(-0.5, 0.95)):
    while True:
        try:
            pair = PairParams(
                BorrowerParams(rng.uniform(*pd_range), rng.uniform(*sigma_range), rng.uniform(*r_range)),
                BorrowerParams(rng.uniform(*pd_range), rng.uniform(*sigma_range), rng.uniform(*r_range)),
                rng.uniform(*rho_range),
                FxParams(rng.uniform(*nu_range), rng.uniform(*tau_range)),
            )
            adj = adjust_pair(pair)
        except ModelValidityError:
            continue
        return pair, adj


def test_criterion_1_consistency_identity(record):
    rng = np.random.default_rng(101)
    start = time.perf_counter()
    worst = 0.0
    for _ in range(10_000):
        pair, adj = _valid_pair(rng, pd_range=(0.001, 0.45), sigma_range=(0.05, 1.0), tau_range=(0.0, 0.5))
        res = consistency_residual(pair.b1.pd, pair.b2.pd, adj.pd1_star, adj.pd2_star, pair.rho, adj.rho_star)
        worst = max(worst, abs(res))
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-10 and elapsed < 5.0
    record("1", ok, f"max |residual| {worst:.2e} over 1e4 sets (<= 1e-10), {elapsed:.2f} s (< 5 s)")
    assert worst <= 1e-10
    assert elapsed < 5.0


def test_criterion_2_homogeneous_equivalence(record):
    ps = np.linspace(0.001, 0.45, 100)
    ts = np.linspace(0.01, 3.0, 100)
    sigma = 0.25
    start = time.perf_counter()
    worst = 0.0
    for rho in (-0.3, 0.2, 0.7):
        for p in ps:
            b = BorrowerParams(float(p), sigma)
            for t in ts:
                fx = FxParams(0.0, float(t) * sigma)
                direct = adjusted_correlation(PairParams(b, b, rho, fx))
                via_pd = homogeneous_adjusted_correlation(float(p), rho, adjusted_pd(b, fx))
                worst = max(worst, abs(direct - via_pd))
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-12 and elapsed < 5.0
    record("2", ok, f"max |delta rho*| {worst:.2e} on 100x100 grid x 3 rho (<= 1e-12), {elapsed:.2f} s (< 5 s)")
    assert worst <= 1e-12
    assert elapsed < 5.0


def test_criterion_3_worked_example(record):
    hand = (Fraction(2, 10) + Fraction(1, 4)) / Fraction(5, 4)
    assert hand == Fraction(9, 25)
    b = BorrowerParams(0.01, 0.2)
    adj = adjust_pair(PairParams(b, b, 0.2, FxParams(0.0, 0.1)))
    ok_pd = abs(adj.pd1_star - 0.018727) <= 1e-5 and adj.pd1_star == adj.pd2_star
    ok_rho = abs(adj.rho_star - float(hand)) <= 1e-12
    record("3", ok_pd and ok_rho, f"p* = {adj.pd1_star:.8f} (0.018727 +- 1e-5), rho* = {adj.rho_star!r} (0.36 +- 1e-12)")
    assert ok_pd
    assert ok_rho


@pytest.mark.slow
def test_criterion_4_monte_carlo(record):
    rng = np.random.default_rng(404)
    n = 10**7
    start = time.perf_counter()
    passed = 0
    worst = 0.0
    for k in range(20):
        pair, adj = _valid_pair(rng, pd_range=(0.005, 0.2), sigma_range=(0.1, 0.6), tau_range=(0.02, 0.3),
                                nu_range=(-0.05, 0.05), r_range=(-0.4, 0.4), rho_range=(-0.3, 0.8))
        res = simulate_reduced(pair, SimConfig(n, seed=1000 + k))
        joint = joint_default_probability(adj)
        z = (
            abs(res.pd1_hat - adj.pd1_star) / standard_error(adj.pd1_star, n),
            abs(res.pd2_hat - adj.pd2_star) / standard_error(adj.pd2_star, n),
            abs(res.rho_hat - adj.rho_star) / ((1 - adj.rho_star**2) / math.sqrt(n)),
            abs(res.joint_default_hat - joint) / standard_error(joint, n),
        )
        worst = max(worst, *z)
        passed += all(v <= 3.0 for v in z)
    elapsed = time.perf_counter() - start
    ok = passed >= 19 and elapsed < 120.0
    record("4", ok, f"{passed}/20 sets within 3 SE (>= 19), worst |z| {worst:.2f}, {elapsed:.1f} s (< 120 s)")
    assert passed >= 19
    assert elapsed < 120.0


GBM_SETS = [
    (AssetProcess(100.0, 0.05, 0.2), AssetProcess(100.0, 0.05, 0.2), (DebtSpec(50.0, 1.0), DebtSpec(50.0, 1.0)),
     FxParams(0.0, 0.1), CorrMatrix3(0.0, 0.0, 0.2), 1),
    (AssetProcess(50.0, 0.08, 0.3), AssetProcess(120.0, 0.03, 0.15), (DebtSpec(45.0, 1.3), DebtSpec(110.0, 1.3)),
     FxParams(-0.02, 0.2), CorrMatrix3(0.3, 0.1, 0.35), 4),
    (AssetProcess(80.0, 0.0, 0.4), AssetProcess(60.0, 0.06, 0.25), (DebtSpec(40.0, 0.9), DebtSpec(45.0, 0.9)),
     FxParams(0.03, 0.15), CorrMatrix3(-0.2, 0.25, 0.5), 12),
    (AssetProcess(200.0, 0.04, 0.1), AssetProcess(150.0, 0.02, 0.35), (DebtSpec(170.0, 1.05), DebtSpec(90.0, 1.05)),
     FxParams(-0.045, 0.3), CorrMatrix3(0.4, -0.3, 0.1), 2),
    (AssetProcess(10.0, 0.1, 0.5), AssetProcess(10.0, 0.1, 0.5), (DebtSpec(5.0, 2.0), DebtSpec(4.0, 2.0)),
     FxParams(0.0, 0.25), CorrMatrix3(0.0, 0.0, -0.4), 6),
]


@pytest.mark.slow
def test_criterion_5_reduction_chain(record):
    n = 10**6
    start = time.perf_counter()
    worst = 0.0
    for k, (a1, a2, debts, fx, corr, steps) in enumerate(GBM_SETS):
        g = simulate_gbm_paths(a1, a2, debts, fx, corr, SimConfig(n, seed=500 + k, mode="gbm_path", n_steps=steps))
        r = simulate_reduced(equivalent_pair(a1, a2, debts, fx, corr), SimConfig(n, seed=600 + k))
        pairs = (
            (g.pd1_hat, r.pd1_hat, math.hypot(g.se_pd1, r.se_pd1)),
            (g.pd2_hat, r.pd2_hat, math.hypot(g.se_pd2, r.se_pd2)),
            (g.joint_default_hat, r.joint_default_hat, math.hypot(g.se_joint, r.se_joint)),
            (g.rho_hat, r.rho_hat, math.hypot(g.se_rho, r.se_rho)),
        )
        for est_g, est_r, se in pairs:
            worst = max(worst, abs(est_g - est_r) / se)
    elapsed = time.perf_counter() - start
    ok = worst <= 3.0 and elapsed < 60.0
    record("5", ok, f"worst |gbm - reduced| {worst:.2f} combined SE over 5 sets (<= 3), {elapsed:.1f} s (< 60 s)")
    assert worst <= 3.0
    assert elapsed < 60.0


CURVE_CASES = [(p, rho) for p in (0.005, 0.01, 0.05) for rho in (0.1, 0.2, 0.4)]


def test_criterion_6a_limit_at_p(record):
    worst = max(abs(homogeneous_adjusted_correlation(p, rho, p + 1e-9) - rho) for p, rho in CURVE_CASES)
    ok = worst <= 1e-9
    record("6a", ok, f"max |rho*(p + 1e-9) - rho| {worst:.2e} (<= 1e-9)")
    assert ok


def test_criterion_6a_limit_converges(record):
    # concavity bounds rho* - rho by K (p* - p), K = 2 (1 - rho) / (|c| phi(c)) the
    # slope at p* = p, so the deviation vanishes linearly; steps stop at 1e-9
    # where double rounding still resolves the ratio to about 1e-7
    worst_bound, worst_limit = 0.0, 0.0
    for p, rho in CURVE_CASES:
        c = std_normal_quantile(p)
        slope = 2 * (1 - rho) / (abs(c) * norm_pdf(c))
        for h in (1e-3, 1e-5, 1e-7, 1e-9):
            p_star = p + h
            ratio = (homogeneous_adjusted_correlation(p, rho, p_star) - rho) / (slope * (p_star - p))
            worst_bound = max(worst_bound, ratio)
        worst_limit = max(worst_limit, abs(ratio - 1))
    ok = worst_bound <= 1 + 1e-6 and worst_limit <= 1e-6
    record("6a'", ok, f"(rho* - rho) / (K (p* - p)) at most {worst_bound:.9f} (<= 1), "
                      f"within {worst_limit:.1e} of 1 at p* - p = 1e-9")
    assert ok


def test_criterion_6b_near_half(record):
    low = min(homogeneous_adjusted_correlation(p, rho, 0.4999) for p, rho in CURVE_CASES)
    ok = low > 0.999
    record("6b", ok, f"min rho*(0.4999) {low:.9f} (> 0.999)")
    assert ok


def test_criterion_6c_concave(record):
    worst = -math.inf
    for p, rho in CURVE_CASES:
        grid = np.linspace(p, 0.4999, 1000)
        curve = np.array([homogeneous_adjusted_correlation(p, rho, float(x)) for x in grid])
        worst = max(worst, float(np.diff(curve, 2).max()))
    ok = worst <= 0.0
    record("6c", ok, f"max second difference {worst:.2e} on 1000-point grids (<= 0)")
    assert ok


def test_criterion_7_monotonicity(record):
    rng = np.random.default_rng(707)
    violations = 0
    for _ in range(100_000):
        b = BorrowerParams(rng.uniform(1e-6, 0.5), rng.uniform(0.01, 1.0))
        tau = rng.uniform(1e-3, 1.0)
        violations += not adjusted_pd(b, FxParams(0.0, tau)) > b.pd
    at_half = adjusted_pd(BorrowerParams(0.5, 0.2), FxParams(0.0, 0.3))
    ok = violations == 0 and at_half == 0.5
    record("7", ok, f"{violations} of 1e5 draws with p* <= p; p=0.5 gives p* = {at_half!r}")
    assert violations == 0
    assert at_half == 0.5


def test_criterion_8_numerics(record):
    q_err = max(abs(std_normal_quantile(p) - x) for p, x in QUANTILE_TABLE)
    ps = np.concatenate([np.logspace(-300, -1, 400), np.linspace(0.01, 0.99, 400)])
    rt_err = max(abs(std_normal_cdf(std_normal_quantile(float(p))) - p) for p in ps)
    rhos = np.round(np.linspace(-0.9, 0.9, 19), 10)
    bvn_err = max(abs(bivariate_normal_cdf(0.0, 0.0, float(r)) - (0.25 + math.asin(r) / (2 * math.pi)))
                  for r in rhos)
    ok = q_err <= 1e-8 and rt_err <= 1e-9 and bvn_err <= 5e-9
    record("8", ok, f"quantile {q_err:.1e} (<= 1e-8), round trip {rt_err:.1e} (<= 1e-9), "
                    f"Phi2 identity {bvn_err:.1e} (<= 5e-9)")
    assert q_err <= 1e-8
    assert rt_err <= 1e-9
    assert bvn_err <= 5e-9


def test_criterion_9_cli_pipeline(record, tmp_path):
    portfolio = str(DATA / "portfolio10.txt")
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    codes = [main(["adjust", portfolio, "-o", str(a)]), main(["adjust", portfolio, "-o", str(b)])]
    identical = a.read_bytes() == b.read_bytes()
    golden = a.read_bytes() == (DATA / "portfolio10_adjusted.csv").read_bytes()
    check_ok = main(["check", str(a), "-o", str(tmp_path / "check.csv")])

    lines = a.read_text().splitlines()
    fields = lines[3].split(",")
    fields[-1] = "0.5" if fields[-1] != "0.5" else "0.6"
    lines[3] = ",".join(fields)
    bad = tmp_path / "bad.csv"
    bad.write_text("\n".join(lines) + "\n")
    check_bad = main(["check", str(bad), "-o", str(tmp_path / "check_bad.csv")])

    ok = codes == [0, 0] and identical and golden and check_ok == 0 and check_bad == 1
    record("9", ok, f"adjust exit {codes}, byte-identical {identical}, golden {golden}, "
                    f"check exit {check_ok}, corrupted check exit {check_bad}")
    assert codes == [0, 0]
    assert identical and golden
    assert check_ok == 0
    assert check_bad == 1
