"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v``; the lines are repeated in
the terminal summary under "acceptance criteria".
"""

from __future__ import annotations

import json
import math
import time

import numpy as np
import pytest
from scipy.spatial.distance import pdist

from fracdim import cli
from fracdim.bounds import (
    critical_thickening,
    energy_lower_bound,
    halved_energy_lower_bound,
    thickened_energy_lower_bound,
    thickening_constant,
    verify_concentration,
    verify_energy_lower_bound,
)
from fracdim.dimension import cantor_product_dimension, estimate_dimension, holder_dimension_bound, slope_fit
from fracdim.energy import s_energy, s_energy_sweep
from fracdim.generators import (
    CantorParams,
    WeierstrassParams,
    gen_adversarial_lattice,
    gen_cantor_product,
    gen_graph_from_samples,
    gen_lattice,
    gen_weierstrass_graph,
)
from fracdim.geometry import AffineSubspace, PointFamily, PointSet, RegionSpec
from fracdim.pca import pca_compare
from fracdim.repro import EXPERIMENTS

pytestmark = pytest.mark.slow

LN2_LN3 = math.log(2) / math.log(3)


def _naive_energy(pts: np.ndarray, s: float) -> float:
    """Every unordered pair distance, raised to -s and summed exactly."""
    n = len(pts)
    terms = pdist(pts) ** (-s)
    return 2.0 * math.fsum(terms.tolist()) / (n * n)


def test_criterion_01_energy_matches_naive_sum(record_criterion):
    rng = np.random.default_rng(20240101)
    s_values = [0.5, 1.0, 1.5, 2.0]
    started = time.perf_counter()
    worst = 0.0
    for _ in range(50):
        n = int(rng.integers(2, 2001))
        d = int(rng.integers(1, 5))
        pts = rng.random((n, d))
        got = s_energy_sweep(PointSet(pts), s_values, method="blocked")
        for s, res in zip(s_values, got):
            ref = _naive_energy(pts, s)
            worst = max(worst, abs(res.value - ref) / ref)
    elapsed = time.perf_counter() - started
    ok = worst <= 1e-10 and elapsed < 30
    record_criterion(1, ok, f"max rel err {worst:.2e} over 50 sets, {elapsed:.1f}s (limit 1e-10, 30s)")
    assert ok


def test_criterion_02_trivial_identities(record_criterion):
    started = time.perf_counter()
    two = PointSet([[0.25, 0.5], [0.25, 1.5]])
    pair_ok = all(s_energy(two, s).value == 0.5 for s in (0.0, 0.5, 1.0, 2.0, 3.7))
    rng = np.random.default_rng(7)
    zero_ok = True
    for n in (2, 3, 10, 97, 500):
        ps = PointSet(rng.random((n, 3)))
        zero_ok &= s_energy(ps, 0.0).value == (n - 1) / n
    zero_ok &= s_energy(gen_lattice(2, 12), 0.0).value == (144 - 1) / 144
    worst = 0.0
    base = rng.random((300, 2))
    for lam in (0.25, 3.0, 17.5):
        for s in (0.5, 1.3, 2.0):
            a = s_energy(PointSet(lam * base), s).value
            b = lam ** (-s) * s_energy(PointSet(base), s).value
            worst = max(worst, abs(a - b) / abs(b))
    elapsed = time.perf_counter() - started
    ok = pair_ok and zero_ok and worst <= 1e-10 and elapsed < 1
    record_criterion(
        2, ok, f"pair=0.5 {pair_ok}, I_0=(n-1)/n {zero_ok}, scaling rel err {worst:.1e}, {elapsed:.2f}s"
    )
    assert ok


def test_criterion_03_cantor_product_dimensions(record_criterion):
    started = time.perf_counter()
    cases = [
        ("C24xC24", [(2, 4), (2, 4)], range(3, 8), 1.0),
        ("C23xC23", [(2, 3), (2, 3)], range(3, 8), 1.2619),
        ("C24xC23xC23", [(2, 4), (2, 3), (2, 3)], range(2, 6), 1.7619),
    ]
    parts, ok = [], True
    for label, factors, levels, expected in cases:
        assert abs(cantor_product_dimension(factors) - expected) < 1e-4
        family = PointFamily(tuple(gen_cantor_product([CantorParams(m, n, k) for m, n in factors]) for k in levels))
        est = estimate_dimension(family)
        good = abs(est.value - expected) <= 0.15 and not est.flagged
        ok &= good
        parts.append(f"{label} {est.value:.4f} (want {expected})")
    elapsed = time.perf_counter() - started
    ok &= elapsed < 300
    record_criterion(3, ok, "; ".join(parts) + f"; {elapsed:.1f}s")
    assert ok


def test_criterion_04_lattice_dimension(record_criterion):
    started = time.perf_counter()
    family = PointFamily(tuple(gen_lattice(2, q) for q in (16, 32, 64, 128)))
    est = estimate_dimension(family, s_max=2.0)
    elapsed = time.perf_counter() - started
    ok = est.value >= 1.85 and est.boundary == "upper" and elapsed < 120
    record_criterion(4, ok, f"estimate {est.value:.4f}, boundary={est.boundary}, {elapsed:.1f}s")
    assert ok


def _random_frame(rng: np.random.Generator, d: int, k: int) -> np.ndarray:
    q, _ = np.linalg.qr(rng.standard_normal((d, d)))
    return q[:, :k].T


def _plane_instances(count: int, seed: int):
    """Lattices of q^k points filling a unit k-cube inside a random k-plane of R^d."""
    rng = np.random.default_rng(seed)
    out = []
    for i in range(count):
        d = int(rng.integers(1, 4))
        k = int(rng.integers(1, d + 1))
        q = int(rng.integers(4, 40 if k == 1 else 18))
        dirs = np.eye(d)[:k] if i % 3 == 0 else _random_frame(rng, d, k)
        base = rng.random(d) * (i % 2)
        region = RegionSpec(AffineSubspace(base, dirs, np.zeros(k), np.ones(k)), k)
        coords = gen_lattice(k, q).points
        pts = base + coords @ dirs
        s = k + float(rng.choice([0.25, 0.5, 1.0, 1.5]))
        out.append((PointSet(pts), region, s))
    return out


def test_criterion_05_energy_lower_bound_suite(record_criterion):
    started = time.perf_counter()
    violations, worst = 0, math.inf
    for ps, region, s in _plane_instances(20, seed=5):
        rep = verify_energy_lower_bound(ps, region, s)
        violations += not rep.satisfied
        worst = min(worst, rep.lhs / rep.rhs if rep.rhs > 0 else math.inf)
    elapsed = time.perf_counter() - started
    ok = violations == 0 and elapsed < 120
    record_criterion(5, ok, f"{violations} violations in 20 instances, min I_s/bound {worst:.3g}, {elapsed:.1f}s")
    assert ok


def test_criterion_06_concentration_and_tightness(record_criterion):
    started = time.perf_counter()
    checked, violations = 0, 0
    for ps, region, s in _plane_instances(12, seed=6):
        for eps in ("exact", "auto"):
            checked += 1
            violations += not verify_concentration(ps, region, s, eps).satisfied
    for d, k, q, power in [(2, 1, 20, 0.8), (2, 1, 30, 0.6), (3, 1, 10, 0.7), (3, 2, 10, 0.8), (3, 2, 14, 0.9)]:
        n = q**d
        m = math.floor(n**power)
        ps = gen_adversarial_lattice(d, q, k, m)
        region = RegionSpec(AffineSubspace.coordinate_plane(d, list(range(d - k, d))), k)
        for s in (k + 0.5, k + 1.0):
            for eps in ("exact", "auto"):
                checked += 1
                violations += not verify_concentration(ps, region, s, eps).satisfied

    # tightness: m = floor(n^(2/(1+s/k))) points on the segment x_1 = 0
    s, k = 1.5, 1
    region = RegionSpec(AffineSubspace.coordinate_plane(2, [1]), k)
    sizes, ratios = [], []
    for q in (20, 40, 80):
        m = math.floor((q * q) ** (2 / (1 + s / k)))
        ps = gen_adversarial_lattice(2, q, k, m)
        rep = verify_concentration(ps, region, s, "exact")
        checked += 1
        violations += not rep.satisfied
        sizes.append(ps.n)
        ratios.append(rep.ratio)
    trend = float(np.polyfit(np.log(sizes), np.log(ratios), 1)[0])
    elapsed = time.perf_counter() - started
    tight = min(ratios) > 0.05 and max(ratios) <= 1 and trend >= -0.1
    ok = violations == 0 and tight and elapsed < 180
    record_criterion(
        6,
        ok,
        f"{violations}/{checked} violations; tightness ratios {', '.join(f'{r:.3f}' for r in ratios)}, "
        f"trend n^{trend:.3f}; {elapsed:.1f}s",
    )
    assert ok


def _lipschitz_samples(seed: int):
    rng = np.random.Generator(np.random.Philox(seed))
    freqs = np.arange(1, 5)
    amps = rng.random(4) / (8 * math.pi * freqs)
    phases = rng.random(4)

    def f(x: np.ndarray) -> np.ndarray:
        return 0.5 + sum(a * np.sin(2 * math.pi * (w * x + p)) for a, w, p in zip(amps, freqs, phases))

    return f


def test_criterion_07_graph_energy_bounded_below_d_minus_1(record_criterion):
    started = time.perf_counter()
    qs = (32, 64, 128, 256)
    s = 2 - 1 - 0.1
    slopes = []
    for seed in range(5):
        f = _lipschitz_samples(seed)
        family = PointFamily(tuple(gen_graph_from_samples(f(np.arange(q) / q), 2, q) for q in qs))
        slopes.append(("lipschitz", seed, slope_fit(family, s).slope))
    for seed in range(5):
        wp = WeierstrassParams(0.5, 3.0, seed=seed)
        family = PointFamily(tuple(gen_weierstrass_graph(wp, 2, q) for q in qs))
        slopes.append(("weierstrass", seed, slope_fit(family, s).slope))
    elapsed = time.perf_counter() - started
    worst = max(v for _, _, v in slopes)
    ok = worst <= 0.1 and elapsed < 120
    detail = ", ".join(f"{kind[0]}{seed}={v:.3f}" for kind, seed, v in slopes)
    record_criterion(7, ok, f"max slope {worst:.3f} (limit 0.1): {detail}; {elapsed:.1f}s")
    assert ok


def test_criterion_08_weierstrass_dimension(record_criterion):
    started = time.perf_counter()
    target = 2 - LN2_LN3
    assert abs(holder_dimension_bound(2, LN2_LN3) - target) < 1e-15
    values = []
    for seed in range(5):
        wp = WeierstrassParams(0.5, 3.0, seed=seed)
        family = PointFamily(tuple(gen_weierstrass_graph(wp, 2, q) for q in (64, 128, 256, 512)))
        values.append(estimate_dimension(family).value)
    passes = sum(abs(v - target) <= 0.15 for v in values)
    elapsed = time.perf_counter() - started
    ok = passes >= 4 and elapsed < 300
    record_criterion(
        8,
        ok,
        f"{passes}/5 seeds within 0.15 of {target:.4f}: {', '.join(f'{v:.3f}' for v in values)}; {elapsed:.1f}s",
    )
    assert ok


def test_criterion_09_pca_cannot_separate_grid_and_garnett(record_criterion):
    started = time.perf_counter()
    grid = gen_lattice(2, 33)
    garnett = gen_cantor_product([CantorParams(2, 4, 5)] * 2)
    cmp = pca_compare(grid, garnett)
    ratio_gap = float(np.max(np.abs(cmp.first.explained_variance_ratio - cmp.second.explained_variance_ratio)))
    off_diag = max(abs(cmp.first.covariance[0, 1]), abs(cmp.second.covariance[0, 1]))
    grid_dim = estimate_dimension(PointFamily(tuple(gen_lattice(2, q) for q in (9, 17, 33, 65)))).value
    garnett_dim = estimate_dimension(
        PointFamily(tuple(gen_cantor_product([CantorParams(2, 4, k)] * 2) for k in range(3, 8)))
    ).value
    elapsed = time.perf_counter() - started
    ok = ratio_gap <= 1e-6 and off_diag <= 1e-10 and grid_dim - garnett_dim >= 0.5 and elapsed < 180
    record_criterion(
        9,
        ok,
        f"variance-ratio gap {ratio_gap:.1e}, max off-diagonal {off_diag:.1e}, "
        f"dimension grid {grid_dim:.3f} vs garnett {garnett_dim:.3f}; {elapsed:.1f}s",
    )
    assert ok


def _rel(a: float, b: float) -> float:
    return abs(a - b) / abs(b)


def test_criterion_10_thickened_constants(record_criterion):
    errs = [
        _rel(thickening_constant(2, 1), 3.0),
        _rel(thickening_constant(1.5, 0.5), 3.75),
        _rel(thickened_energy_lower_bound(2, 1, 1, 100, 1 / 600), 49.0),
        _rel(thickened_energy_lower_bound(2, 1, 1, 100, 0.0), energy_lower_bound(2, 1, 1, 100)),
    ]
    for s, k, c, n in [(2, 1, 1, 100), (1.5, 0.5, 2.0, 64), (3.0, 2.0, 16.0, 1000), (2.5, 1.2, 3.3, 77)]:
        eps = critical_thickening(s, k, c, n)
        a = thickening_constant(s, k)
        errs.append(_rel(eps, c ** (1 / k) / (2 * a) * n ** (-1 / k)))
        hand = k / (s - k) * c ** (-s / k) * (0.5 * n ** (s / k - 1) - 1)
        errs.append(_rel(thickened_energy_lower_bound(s, k, c, n, eps), hand))
        errs.append(_rel(halved_energy_lower_bound(s, k, c, n), hand))
    worst = max(errs)
    ok = worst <= 1e-12
    record_criterion(10, ok, f"max rel err {worst:.1e} over {len(errs)} substitutions (limit 1e-12)")
    assert ok


def _payload(path) -> bytes:
    return json.dumps(json.loads(path.read_text())["result"], sort_keys=True).encode()


def test_criterion_11_repro_deterministic_across_threads(record_criterion, tmp_path):
    started = time.perf_counter()
    mismatched = []
    for name in EXPERIMENTS:
        payloads = []
        for threads in (1, 4, 8):
            out = tmp_path / f"{name}-{threads}.json"
            code = cli.main(["repro", name, "--threads", str(threads), "--json", str(out)])
            assert code in (0, 2)
            payloads.append(_payload(out))
        if len(set(payloads)) != 1:
            mismatched.append(name)
    elapsed = time.perf_counter() - started
    ok = not mismatched
    record_criterion(
        11,
        ok,
        f"{len(EXPERIMENTS) - len(mismatched)}/{len(EXPERIMENTS)} experiments byte-identical at 1/4/8 threads"
        + (f"; differing: {', '.join(mismatched)}" if mismatched else "")
        + f"; {elapsed:.1f}s",
    )
    assert ok
