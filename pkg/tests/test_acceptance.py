"""Acceptance criteria 1-8.

Each test prints one ``criterion N: PASS|FAIL`` line with the measured
numbers, then asserts. Tolerances are pinned below.
"""
import itertools
import math
import time

import numpy as np
import pytest

from rnss import EvaluationDomain, SharingParams, recon
from rnss import privacy as pv
from rnss.arith import add, dealer_triple, inv, mult
from rnss.cli import DEFAULT_GRID, SECRETS, _batch, accuracy_rows, kalman_csv, mi_rows
from rnss.kalman import default_model, default_x0, run_direct
from rnss.runtime import DirectEngine, RuntimeConfig, stream_rng

# criterion 1
ACCURACY_LIMITS = {"recon": 1e-7, "add": 1e-7, "mult": 1e-4, "inv": 1e-7}
ACCURACY_TRIALS = 100
ACCURACY_SECONDS = 60.0
# criterion 2
PER_SHARE_TARGET, PER_SHARE_TOL = 0.00718, 1e-4
ENTROPY_TARGET, ENTROPY_TOL = 3.7080, 1e-3
# criterion 3
MI_SAMPLES = 100_000
MI_LOW_BAND = (0.04, 0.09)
MI_HIGH_LIMIT = 1e-3
MI_BOUND_SLACK = 0.01
MI_SECONDS = 300.0
# criterion 4
WITNESS_LIMIT = 0.01
# criterion 5
IO_ADD, IO_MULT, IO_INV, IO_KALMAN_STEP = 0, 2, 3, 27
# criterion 6
KALMAN_SEEDS = range(10)
KALMAN_STEPS = 50
KALMAN_MEDIAN, KALMAN_MAX = 5e-3, 5e-2
KALMAN_SECONDS = 60.0
# criterion 8
HOMOMORPHISM_INSTANCES = 500
EIGEN_INSTANCES = 200


def report(capsys, n, ok, detail):
    with capsys.disabled():
        print(f"\ncriterion {n}: {'PASS' if ok else 'FAIL'} {detail}")


@pytest.fixture(scope="module")
def grid11():
    return EvaluationDomain.grid(11, 5)


def test_criterion_1_round_trip_accuracy(grid11, capsys):
    start = time.perf_counter()
    rows = accuracy_rows(grid11, DEFAULT_GRID, ACCURACY_TRIALS, seed=0, secrets=SECRETS)
    elapsed = time.perf_counter() - start
    worst = {op: max(r[2] for r in rows if r[1] == op) for op in ACCURACY_LIMITS}
    ok = all(worst[op] <= lim for op, lim in ACCURACY_LIMITS.items()) and elapsed <= ACCURACY_SECONDS
    detail = " ".join(f"{op}={v:.2e}" for op, v in worst.items())
    report(capsys, 1, ok, f"worst median RSE {detail} ({elapsed:.1f}s)")
    assert ok


def test_criterion_2_bound_spot_values(capsys):
    dom = EvaluationDomain((1.0, 2.0, 3.0), 2)
    # share at 2 with anchors at 1 and 3: L0^2 sigma2_s / sigma2_B = 1/100
    model = pv.LeakageModel(dom, SharingParams(sigma2_y=10.0), 1.0, (1.0, 3.0))
    per_share = pv.per_share_bound(model, 2.0)
    entropy = pv.gaussian_entropy_bits(10)
    ok = abs(per_share - PER_SHARE_TARGET) <= PER_SHARE_TOL and abs(entropy - ENTROPY_TARGET) <= ENTROPY_TOL
    report(capsys, 2, ok, f"per_share={per_share:.5f} entropy={entropy:.4f}")
    assert ok


def test_criterion_3_empirical_mi(grid11, capsys):
    quantities = ("single_share", "t_shares", "t_shares_plus_mask")
    start = time.perf_counter()
    rows = mi_rows(grid11, DEFAULT_GRID, MI_SAMPLES, seed=0, quantities=quantities)
    top = DEFAULT_GRID[-1]
    corrected = [
        pv.empirical_mi(pv.MiSampleSpec(grid11, SharingParams(sigma2_y=top), q, samples=MI_SAMPLES,
                                        mask_sigma2=top, seed=1000 + i, bias_correct=True)).bits
        for i, q in enumerate(quantities)]
    elapsed = time.perf_counter() - start

    low = next(r[2] for r in rows if r[0] == DEFAULT_GRID[0] and r[1] == "single_share")
    low_ok = MI_LOW_BAND[0] <= low <= MI_LOW_BAND[1]
    high_ok = all(v <= MI_HIGH_LIMIT for v in corrected)
    slack = max(r[2] - r[3] for r in rows)
    bound_ok = slack <= MI_BOUND_SLACK
    ok = low_ok and high_ok and bound_ok and elapsed <= MI_SECONDS
    report(capsys, 3, ok,
           f"I(S;S[1]) at sigma2_y=1: {low:.2e} (band {MI_LOW_BAND}, {'ok' if low_ok else 'miss'}); "
           f"sigma2_y={top:g} corrected max {max(corrected):.2e} ({'ok' if high_ok else 'miss'}); "
           f"max estimate-bound {slack:.2e} ({'ok' if bound_ok else 'miss'}); {elapsed:.0f}s")
    assert ok


def test_criterion_4_witness_share_independence(grid11, capsys):
    xs = grid11.points[:grid11.t]
    worst = 0.0
    for i, p in enumerate(xs):
        spec = pv.MiSampleSpec(grid11, SharingParams(sigma2_y=1.0), "single_share", points=(p,),
                               samples=MI_SAMPLES, witness=xs, seed=i)
        worst = max(worst, pv.empirical_mi(spec).bits)
    ok = worst <= WITNESS_LIMIT
    report(capsys, 4, ok, f"max I(S; share at witness point)={worst:.2e}")
    assert ok


def test_criterion_5_io_accounting(capsys):
    dom = EvaluationDomain.grid(3, 1)
    params = SharingParams(sigma2_y=100.0)
    rng = np.random.default_rng(0)
    x = _batch(np.array(2.0), dom, params, rng)
    y = _batch(np.array(3.0), dom, params, rng)
    eng = DirectEngine(dom)
    counts = []
    before = eng.io.opens
    add(x, y)
    counts.append(eng.io.opens - before)
    before = eng.io.opens
    mult(x, y, dealer_triple(dom, params, rng=rng), eng)
    counts.append(eng.io.opens - before)
    r = eng.joint_random(params)
    before = eng.io.opens
    inv(x, r, dealer_triple(dom, params, rng=rng), eng)
    counts.append(eng.io.opens - before)
    step = run_direct(default_model(), default_x0(), dom, 1000.0, 1, seed=0)[0][2]
    counts.append(step)
    ok = counts == [IO_ADD, IO_MULT, IO_INV, IO_KALMAN_STEP]
    report(capsys, 5, ok, f"add/mult/inv/kalman-step = {counts}")
    assert ok


def test_criterion_6_kalman_utility(capsys):
    dom = EvaluationDomain.grid(3, 1)
    start = time.perf_counter()
    medians, maxima = [], []
    for seed in KALMAN_SEEDS:
        rse = [r[1] for r in run_direct(default_model(), default_x0(), dom, 1000.0, KALMAN_STEPS, seed)]
        medians.append(float(np.median(rse)))
        maxima.append(max(rse))
    elapsed = time.perf_counter() - start
    ok = max(medians) <= KALMAN_MEDIAN and max(maxima) <= KALMAN_MAX and elapsed <= KALMAN_SECONDS
    report(capsys, 6, ok, f"worst median RSE {max(medians):.2e}, max RSE {max(maxima):.2e} ({elapsed:.1f}s)")
    assert ok


def test_criterion_7_transport_equivalence(capsys):
    cfg = RuntimeConfig(n=3, t=1, sigma2_y=1000.0, seed=0, steps=KALMAN_STEPS)
    sim = kalman_csv(cfg, "sim")
    tcp = kalman_csv(cfg, "tcp")
    ok = sim == tcp
    report(capsys, 7, ok, f"sim and tcp CSVs identical ({len(sim)} bytes)")
    assert ok


def test_criterion_8_property_suites(grid11, capsys):
    rng = stream_rng(0, "acceptance", "properties")
    failures = []
    shape = (HOMOMORPHISM_INSTANCES,)
    params = SharingParams(sigma2_y=100.0)
    a = rng.uniform(0.5, 100.0, shape) * rng.choice([-1.0, 1.0], shape)
    b = rng.uniform(-100.0, 100.0, shape)
    x, y = _batch(a, grid11, params, rng), _batch(b, grid11, params, rng)
    eng = DirectEngine(grid11)
    got_add = eng.open(add(x, y))
    z, _ = mult(x, y, dealer_triple(grid11, params, rng=rng, shape=shape), eng)
    got_mult = eng.open(z)
    w, _ = inv(x, eng.joint_random(params, shape), dealer_triple(grid11, params, rng=rng, shape=shape), eng)
    got_inv = eng.open(w)
    if not np.allclose(got_add, a + b, rtol=0, atol=1e-7):
        failures.append("add")
    if not np.allclose(got_mult, a * b, rtol=1e-6, atol=1e-4):
        failures.append("mult")
    if not np.allclose(got_inv, 1 / a, rtol=1e-7, atol=1e-9):
        failures.append("inv")

    small = EvaluationDomain.grid(7, 3)
    s = _batch(np.array(-12.5), small, params, rng)
    subsets = [recon(s.subset(pts)) for pts in itertools.combinations(small.points, small.t + 1)]
    if max(abs(v + 12.5) for v in subsets) > 1e-9:
        failures.append("subset recon")

    for _ in range(EIGEN_INSTANCES):
        n = int(rng.integers(3, 10))
        t = int(rng.integers(1, n))
        pts = tuple(sorted(rng.choice(np.arange(1, 60), n, replace=False) / 20.0))
        dom = EvaluationDomain(pts, t)
        model = pv.LeakageModel(dom, SharingParams(sigma2_y=float(10 ** rng.uniform(-1, 3))),
                                float(10 ** rng.uniform(-1, 1)), tuple(rng.choice(pts, t, replace=False)))
        coalition = tuple(rng.choice(pts, int(rng.integers(1, t + 1)), replace=False))
        det = pv.t_share_bound(model, coalition)
        if det > pv.eigen_bound(model, coalition) + 1e-12:
            failures.append("eigen")
            break
        ell, _ = model.weights(coalition)
        _, B = model.covariances(coalition)
        lemma = 0.5 * math.log2(1 + model.sigma2_s * ell @ np.linalg.solve(B, ell))
        if not math.isclose(det, lemma, rel_tol=1e-6, abs_tol=1e-12):
            failures.append("determinant lemma")
            break

    xs, coal = (0.5, 0.8, 1.25, 1.55, 2.0), (0.65, 0.95, 1.1, 1.4, 1.7)
    seq = [pv.t_share_bound(pv.LeakageModel(grid11, SharingParams(sigma2_y=v), 1.0, xs), coal)
           for v in np.geomspace(0.1, 1e6, 40)]
    if any(p < q for p, q in zip(seq, seq[1:])):
        failures.append("monotonicity")

    ok = not failures
    report(capsys, 8, ok, "all property suites hold" if ok else f"failed: {failures}")
    assert ok
