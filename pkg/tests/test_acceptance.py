"""Acceptance suite: one PASS/FAIL line per criterion.

Run with ``pytest tests/test_acceptance.py -v`` or ``python tests/test_acceptance.py``.
The Monte Carlo criteria use the full 500-replication tables and take a
few minutes on one core.
"""

import math
import os
import sys
import time

import numpy as np
import pytest
from scipy import integrate

from weakkde.bandwidth import (
    amise_bandwidth,
    gcpi_bandwidth,
    lscv_bandwidth,
    multivariate_amise_bandwidth,
    silverman_bandwidth,
)
from weakkde.cli import main as cli_main
from weakkde.config import load_config
from weakkde.curvature import GAUSSIAN_PILOT, pilot_second_derivative, u_stat_curvature
from weakkde.densities import CompactKinked, HuberDensity, KinkedGaussian, ThresholdDensity, weak_curvature
from weakkde.estimator import kde_expectation
from weakkde.io import data_path, ingest_csv
from weakkde.kernels import BIWEIGHT, EPANECHNIKOV, GAUSSIAN, get_kernel
from weakkde.risk import (
    integrated_squared_bias,
    integrated_variance,
    local_bias_bound,
    mise_upper_bound,
    monte_carlo_mise,
    multivariate_normal_experiment,
    pointwise_bias_bound,
    rate_slope,
    replication_seed,
)

pytestmark = pytest.mark.slow

CURV = 0.325427
SIZES = (250, 500, 1000, 2000)
WORKERS = os.cpu_count() or 1
CONFIGS = data_path("faithful.csv").parent.parent / "configs"

# Reference bandwidths and mean ISE (SE) per (n, kernel).
TABLE2 = {
    (250, "epanechnikov"): (0.713, 0.002922, 0.000085),
    (250, "gaussian"): (0.322, 0.003050, 0.000087),
    (250, "biweight"): (0.845, 0.002934, 0.000086),
    (500, "epanechnikov"): (0.621, 0.001780, 0.000055),
    (500, "gaussian"): (0.280, 0.001858, 0.000056),
    (500, "biweight"): (0.735, 0.001787, 0.000055),
    (1000, "epanechnikov"): (0.540, 0.001050, 0.000028),
    (1000, "gaussian"): (0.244, 0.001096, 0.000029),
    (1000, "biweight"): (0.640, 0.001055, 0.000028),
    (2000, "epanechnikov"): (0.470, 0.000606, 0.000015),
    (2000, "gaussian"): (0.213, 0.000632, 0.000016),
    (2000, "biweight"): (0.557, 0.000608, 0.000015),
}


@pytest.fixture
def report(capsys):
    def emit(number, ok, detail):
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {number:>2}: {detail}", flush=True)
        assert ok, detail

    return emit


@pytest.fixture(scope="module")
def table2_rows():
    cfg, _ = load_config(CONFIGS / "table2.cfg")
    return {(r.n, r.kernel): r for r in monte_carlo_mise(cfg, workers=WORKERS)}


@pytest.fixture(scope="module")
def table3_rows():
    cfg, _ = load_config(CONFIGS / "table3.cfg")
    return {(r.n, r.selector): r for r in monte_carlo_mise(cfg, workers=WORKERS)}


def test_c01_oracle_bandwidth_table(report):
    start = time.perf_counter()
    worst = 0.0
    for (n, name), (h_ref, _, _) in TABLE2.items():
        k = get_kernel(name)
        worst = max(worst, abs(amise_bandwidth(k.roughness, k.mu2, CURV, n) - h_ref))
    elapsed = time.perf_counter() - start
    report(1, worst <= 5e-4 and elapsed < 1.0, f"12 oracle bandwidths, max |dh| = {worst:.2e} (tol 5e-4), {elapsed:.3f}s")


def test_c02_curvature_constant(report):
    start = time.perf_counter()
    value = weak_curvature(KinkedGaussian(0.5), 200001)
    elapsed = time.perf_counter() - start
    ok = abs(value - CURV) <= 1e-4 and elapsed < 5.0
    report(2, ok, f"R(f'') = {value:.7f} vs 0.325427 (tol 1e-4), {elapsed:.2f}s")


def test_c03_mise_table(report, table2_rows):
    misses = []
    for key, (_, mise_ref, se_ref) in TABLE2.items():
        got = table2_rows[key].mean_ise
        tol = max(0.10 * mise_ref, 4 * se_ref)
        if abs(got - mise_ref) > tol:
            misses.append(f"{key}: {got:.6f} vs {mise_ref:.6f}")
    worst = max(abs(table2_rows[k].mean_ise / v[1] - 1) for k, v in TABLE2.items())
    report(3, not misses, f"12 mean ISE cells, worst relative gap {worst:.1%}; misses: {misses or 'none'}")


def test_c04_rate_slope(report, table2_rows):
    ises = [table2_rows[(n, "epanechnikov")].mean_ise for n in SIZES]
    slope = rate_slope(SIZES, ises)
    report(4, -0.90 <= slope <= -0.70, f"oracle Epanechnikov ISE slope = {slope:.4f} (band [-0.90, -0.70])")


def test_c05_gcpi_behavior(report, table3_rows):
    r250 = table3_rows[(250, "gcpi")].median_h_ratio
    r2000 = table3_rows[(2000, "gcpi")].median_h_ratio
    ratio_ok = 1.05 <= r250 <= 1.30 and 1.00 <= r2000 <= 1.20 and r2000 <= r250
    gcpi_rel = [table3_rows[(n, "gcpi")].mean_ise / table3_rows[(n, "amise_oracle")].mean_ise for n in SIZES]
    silv_rel = [table3_rows[(n, "silverman")].mean_ise / table3_rows[(n, "amise_oracle")].mean_ise for n in SIZES]
    ise_ok = all(abs(r - 1) <= 0.15 for r in gcpi_rel)
    silv_ok = all(r > 1.8 for r in silv_rel)
    ratios = ", ".join(f"{table3_rows[(n, 'gcpi')].median_h_ratio:.3f}" for n in SIZES)
    report(
        5,
        ratio_ok and ise_ok and silv_ok,
        f"median h ratios [{ratios}]; GCPI/oracle ISE [{', '.join(f'{r:.3f}' for r in gcpi_rel)}]; "
        f"Silverman/oracle ISE [{', '.join(f'{r:.2f}' for r in silv_rel)}]",
    )


def test_c06_real_data(report):
    x = ingest_csv(data_path("faithful.csv"), "eruptions")
    silv = silverman_bandwidth(x)
    lscv = lscv_bandwidth(x, EPANECHNIKOV, np.geomspace(0.05, 1.0, 200)).h
    gcpi = gcpi_bandwidth(x, EPANECHNIKOV).h
    ok = abs(silv - 0.335) <= 0.002 and abs(lscv - 0.192) <= 0.01 and abs(gcpi - 0.623) <= 0.02
    report(6, ok, f"Old Faithful: Silverman {silv:.4f}, LSCV {lscv:.4f}, GCPI {gcpi:.4f}")


def _taylor_residual(model, x, v):
    cuts = sorted({0.0, 1.0, *[(k - x) / v for k in model.kink_points if 0 < (k - x) / v < 1]})
    side = 1 if v > 0 else -1
    inner = sum(
        integrate.quad(
            lambda t: (1 - t) * float(model.second_derivative(np.array(x + t * v), side=side)),
            a,
            b,
            epsabs=1e-13,
            epsrel=1e-12,
        )[0]
        for a, b in zip(cuts[:-1], cuts[1:])
    )
    return abs(model.pdf(x + v) - model.pdf(x) - v * model.pdf_prime(x) - v * v * inner)


def test_c07_identity_suite(report):
    rng = np.random.default_rng(7)
    failures = []

    worst_diag = 0.0
    for _ in range(10):
        n = int(rng.integers(5, 80))
        b = float(rng.uniform(0.2, 1.0))
        data = KinkedGaussian(0.5).sample(int(rng.integers(1 << 30)), n).points
        grid = np.linspace(data.min() - 14 * b, data.max() + 14 * b, 200001)
        sq = integrate.simpson(pilot_second_derivative(data, GAUSSIAN_PILOT, b, grid) ** 2, x=grid)
        rhs = (n - 1) / n * u_stat_curvature(data, GAUSSIAN_PILOT, b) + GAUSSIAN_PILOT.roughness_second / (n * b**5)
        worst_diag = max(worst_diag, abs(sq / rhs - 1))
    if worst_diag > 1e-6:
        failures.append(f"diagonal decomposition {worst_diag:.1e}")

    h, n = 0.5, 100
    closed = GAUSSIAN.roughness / (n * h) - 1 / (2 * math.sqrt(math.pi) * math.sqrt(1 + h * h)) / n
    iv_gap = abs(integrated_variance(KinkedGaussian(0.0), GAUSSIAN, h, n) - closed)
    if iv_gap > 1e-6:
        failures.append(f"integrated variance {iv_gap:.1e}")

    models = [KinkedGaussian(0.5), HuberDensity(1.0), ThresholdDensity(0.5, 4.0), CompactKinked("auto")]
    worst_taylor = 0.0
    for i in range(100):
        m = models[i % len(models)]
        lo, hi = m.quad_domain
        x = float(rng.uniform(0.3 * lo, 0.3 * hi))
        v = float(rng.uniform(-2, 2))
        worst_taylor = max(worst_taylor, _taylor_residual(m, x, v))
    if worst_taylor > 1e-6:
        failures.append(f"Taylor residual {worst_taylor:.1e}")

    worst_ab = 0.0
    for k in (EPANECHNIKOV, GAUSSIAN, BIWEIGHT):
        for n in SIZES:
            hs = amise_bandwidth(k.roughness, k.mu2, CURV, n)
            a_term = k.roughness / (n * hs)
            b_term = 0.25 * hs**4 * k.mu2**2 * CURV
            worst_ab = max(worst_ab, abs(a_term / (4 * b_term) - 1))
    if worst_ab > 1e-10:
        failures.append(f"A = 4B {worst_ab:.1e}")

    data = KinkedGaussian(0.5).sample(3, 800).points
    base = u_stat_curvature(data, GAUSSIAN_PILOT, 0.3)
    worst_scale = max(
        abs(u_stat_curvature(data * s, GAUSSIAN_PILOT, 0.3 * s) / (base * s**-5) - 1) for s in (0.1, 2.0, 30.0)
    )
    if worst_scale > 1e-12:
        failures.append(f"scale law {worst_scale:.1e}")
    perm_ok = all(u_stat_curvature(rng.permutation(data), GAUSSIAN_PILOT, 0.3) == base for _ in range(5))
    if not perm_ok:
        failures.append("permutation invariance")

    report(
        7,
        not failures,
        f"diag {worst_diag:.1e}, IV {iv_gap:.1e}, Taylor {worst_taylor:.1e}, A=4B {worst_ab:.1e}, "
        f"scale {worst_scale:.1e}, permutation {'exact' if perm_ok else 'inexact'}",
    )


def test_c08_bound_suite(report):
    violations = []
    checks = 0
    kinked = KinkedGaussian(0.5)
    models = [kinked, HuberDensity(1.0), ThresholdDensity(0.5, 4.0), CompactKinked("auto")]
    kernels = (EPANECHNIKOV, GAUSSIAN, BIWEIGHT)

    xs = np.linspace(-3, 3, 25)
    for k in kernels:
        for h in (0.5, 0.2, 0.1):
            checks += 1
            bias = max(abs(kde_expectation(kinked, k, h, x) - kinked.pdf(x)) for x in xs)
            if bias > pointwise_bias_bound(kinked, k, h):
                violations.append(f"pointwise {k.name} h={h}")

    for x in (0.0, 0.05, -0.05, 1.0, -1.0):
        for h in (0.2, 0.1, 0.05):
            checks += 1
            if abs(kde_expectation(kinked, EPANECHNIKOV, h, x) - kinked.pdf(x)) > local_bias_bound(kinked, EPANECHNIKOV, h, x):
                violations.append(f"local x={x} h={h}")

    for m in models:
        for k in kernels:
            for h in (0.05, 0.2, 0.5):
                isb = integrated_squared_bias(m, k, h)
                checks += 1
                if isb > 0.25 * h**4 * k.abs_second_moment**2 * m.curvature * (1 + 1e-9):
                    violations.append(f"ISB {m.spec()} {k.name} h={h}")
                for n in (50, 1000):
                    iv = integrated_variance(m, k, h, n)
                    checks += 2
                    if iv > k.roughness / (n * h):
                        violations.append(f"variance {m.spec()} {k.name} h={h} n={n}")
                    if isb + iv > mise_upper_bound(m, k, h, n):
                        violations.append(f"MISE {m.spec()} {k.name} h={h} n={n}")
    report(8, not violations, f"{checks} bound checks, violations: {violations or 'none'}")


def test_c09_consistency_trend(report):
    model = KinkedGaussian(0.5)
    sizes = (500, 1000, 2000, 4000)
    errs, ses = [], []
    for n in sizes:
        b = n ** (-1 / 6)
        vals = np.array(
            [u_stat_curvature(model.sample(replication_seed(123, n, r), n), GAUSSIAN_PILOT, b) for r in range(50)]
        )
        errs.append(abs(vals.mean() - CURV))
        ses.append(vals.std(ddof=1) / math.sqrt(vals.size))
    ok = all(
        errs[i + 1] <= errs[i] + 2 * math.hypot(ses[i], ses[i + 1]) for i in range(len(sizes) - 1)
    )
    detail = ", ".join(f"n={n}: {e:.4f} (SE {s:.4f})" for n, e, s in zip(sizes, errs, ses))
    report(9, ok, f"|mean R_U - R(f'')| {detail}")


def test_c10_multivariate(report):
    rows = multivariate_normal_experiment(SIZES, reps=100, master_seed=123, workers=WORKERS)
    slope = rate_slope(SIZES, [r.mean_ise for r in rows])
    reduces = all(
        multivariate_amise_bandwidth(k.roughness, k.mu2**2 * CURV, 1, n) == pytest.approx(
            amise_bandwidth(k.roughness, k.mu2, CURV, n), rel=1e-14
        )
        for k in (EPANECHNIKOV, GAUSSIAN, BIWEIGHT)
        for n in SIZES
    )
    report(10, -0.8 <= slope <= -0.5 and reduces, f"d=2 ISE slope = {slope:.4f} (band [-0.8, -0.5]); d=1 reduction {'exact' if reduces else 'broken'}")


def _simulate_bytes(cfg_path, threads, tmp_path, tag):
    out = tmp_path / f"{tag}-{threads}.csv"
    code = cli_main(["--threads", str(threads), "simulate", str(cfg_path), "--out", str(out)])
    assert code == 0
    return out.read_bytes()


def test_c11_determinism(report, tmp_path):
    bad = []
    for name in ("table2.cfg", "table3.cfg", "multivariate.cfg"):
        # Reduced replication count; the worker split is what is under test.
        text = "\n".join(
            ln for ln in (CONFIGS / name).read_text().splitlines() if not ln.strip().startswith("reps")
        )
        cfg = tmp_path / name
        cfg.write_text(text + "\nreps = 20\n")
        runs = [_simulate_bytes(cfg, t, tmp_path, name) for t in (1, 2, 8)]
        runs.append(_simulate_bytes(cfg, 1, tmp_path, name + "-again"))
        if len(set(runs)) != 1:
            bad.append(name)
    report(11, not bad, f"simulate on table2/table3/multivariate configs, threads 1/2/8 and a repeat run: {'byte-identical' if not bad else bad}")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
