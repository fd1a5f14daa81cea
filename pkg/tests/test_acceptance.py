"""End-to-end acceptance checks, one test per criterion.

Each test prints a PASS/FAIL line; the lines are repeated in the pytest
terminal summary. The bench-based criteria share one timed run of each
preset (seed 7).
"""

import time

import numpy as np
import pytest
from acceptance_log import report
from oracles import (
    composed_rrrl_step,
    denominator_only_step,
    direct_adjoint,
    direct_convolve,
    direct_divergence,
    direct_s2,
    phi_prime_scalar,
    rf_scalar,
)

from rrrl.bench import PRESETS, bench_preset, preset_data
from rrrl.blur import BlurOperator, adjoint_convolve, convolve
from rrrl.config import DescentConfig, SolverConfig
from rrrl.image import PointSpreadFunction
from rrrl.metrics import energy, records_to_csv, snr, variational_energy
from rrrl.penalisers import IDENTITY, DataPenaliser, SmoothnessPenaliser
from rrrl.solvers import regularised_rl_step, rl_step, rrrl_step, rrrl_step_multichannel, run
from rrrl.stencil import divergence_term
from rrrl.variational import negative_gradient

SEED = 7
ROBUST = DataPenaliser("robust-sqrt", eps=1e-2)
PM = SmoothnessPenaliser("perona-malik", lam=15.0)
TV = SmoothnessPenaliser("total-variation", eps=1e-3)
WT = SmoothnessPenaliser("whittaker-tikhonov")


@pytest.fixture(scope="module")
def bench_runs():
    runs = {}
    for name in PRESETS:
        t0 = time.perf_counter()
        results = bench_preset(name, SEED)
        runs[name] = (results, time.perf_counter() - t0)
    return runs


@pytest.fixture(scope="module")
def rl_curve():
    g, f, psf = preset_data("fig1", SEED)
    curve = []
    t0 = time.perf_counter()
    run(f, psf, SolverConfig(iterations=200), "rl", callback=lambda k, u: curve.append(snr(u, g)))
    return np.array(curve), time.perf_counter() - t0


def interior_rel(a, b, r):
    a, b = a[r:-r, r:-r], b[r:-r, r:-r]
    return float(np.max(np.abs(a - b) / np.abs(b)))


# ---------------------------------------------------------------------------


def test_criterion_01_oracle_equivalence():
    gen = np.random.default_rng(101)
    t0 = time.perf_counter()
    kernel = gen.random((3, 5)) + 0.05
    psf = PointSpreadFunction(kernel)
    k = psf.weights
    worst = 0.0

    def check(got, expected):
        nonlocal worst
        worst = max(worst, float(np.max(np.abs(np.asarray(got) - np.asarray(expected)))))

    for shape in [(8, 8), (4, 4), (8, 8, 3)]:
        u = gen.random(shape) * 250 + 1
        f = gen.random(shape) * 250 + 1
        for mode in ("cyclic", "reflect"):
            check(convolve(u, psf, mode), direct_convolve(u, k, mode))
            check(adjoint_convolve(u, psf, mode), direct_adjoint(u, k, mode))
        for kind, kw in [("whittaker-tikhonov", {}), ("total-variation", {"eps": 1e-3}), ("perona-malik", {"lam": 15.0})]:
            check(divergence_term(u, SmoothnessPenaliser(kind, **kw)), direct_divergence(u, kind, **kw))
        if len(shape) == 2:
            check(rl_step(u, f, psf), direct_adjoint(f / direct_convolve(u, k, "reflect"), k, "reflect") * u)
            check(regularised_rl_step(u, f, psf, SolverConfig(alpha=0.05, smoothness_penaliser=WT)),
                  composed_rrrl_step(u, f, k, "reflect", 0.05, None, "whittaker-tikhonov", denominator_one=True))
            check(rrrl_step(u, f, psf, SolverConfig(alpha=0.01, data_penaliser=ROBUST, smoothness_penaliser=TV)),
                  composed_rrrl_step(u, f, k, "reflect", 0.01, 1e-2, "total-variation", psi_kw={"eps": 1e-3}))
            # energy: sum Phi(r_f(Hu)) + alpha/2 sum Psi(|grad u|^2)
            cfg = SolverConfig(alpha=0.2, data_penaliser=ROBUST, smoothness_penaliser=PM)
            hu = direct_convolve(u, k, "reflect")
            s2 = direct_s2(u)
            e = sum(np.sqrt(rf_scalar(a, b) + 1e-2) - np.sqrt(1e-2) for a, b in zip(hu.ravel(), f.ravel()))
            e += 0.1 * sum(225.0 * np.log1p(s / 225.0) for s in s2.ravel())
            check(energy(u, f, psf, cfg), e)
        else:
            check(rrrl_step_multichannel(u, f, psf, SolverConfig(alpha=0.02, data_penaliser=ROBUST, smoothness_penaliser=PM)),
                  composed_rrrl_step(u, f, k, "reflect", 0.02, 1e-2, "perona-malik", psi_kw={"lam": 15.0}))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-12 and elapsed < 1.0
    assert report(1, ok, f"max abs deviation {worst:.2e} (<= 1e-12), runtime {elapsed:.2f} s (< 1 s)")


def test_criterion_02_adjointness():
    gen = np.random.default_rng(202)
    worst = {"cyclic": 0.0, "reflect": 0.0}
    for mode in worst:
        for i in range(100):
            h, w = gen.integers(5, 40, size=2)
            kh, kw = 2 * gen.integers(0, min(h, w, 14) // 2, size=2) + 1
            # a few large kernels so the spectral path is exercised as well
            psf = PointSpreadFunction(gen.random((kh, kw)) ** 3 + (1e-3 if i % 2 else 0.0))
            c = 1 if i % 3 else 3
            u = gen.random((h, w, c)) * 255
            v = gen.random((h, w, c)) * 255
            lhs = float(np.sum(convolve(u, psf, mode) * v))
            rhs = float(np.sum(u * adjoint_convolve(v, psf, mode)))
            worst[mode] = max(worst[mode], abs(lhs - rhs) / abs(lhs))
    ok = max(worst.values()) < 1e-10
    assert report(2, ok, f"max relative gap cyclic {worst['cyclic']:.1e}, reflect {worst['reflect']:.1e} (< 1e-10)")


def test_criterion_03_exact_data_fixed_point():
    gen = np.random.default_rng(303)
    g = gen.random((32, 32)) * 200 + 10
    psf = PointSpreadFunction(gen.random((5, 7)))
    op = BlurOperator(psf, "cyclic")
    f = op.forward(g)
    r = max(psf.radius)
    cfg = SolverConfig(alpha=0.0, data_penaliser=ROBUST)
    gaps = {
        "rl": interior_rel(rl_step(g, f, op), g, r),
        "robust": interior_rel(rrrl_step(g, f, op, cfg.for_variant("robust")), g, r),
        "rrrl(alpha=0)": interior_rel(rrrl_step(g, f, op, cfg), g, r),
    }
    ok = max(gaps.values()) < 1e-10
    assert report(3, ok, "relative change " + ", ".join(f"{k} {v:.1e}" for k, v in gaps.items()) + " (< 1e-10)")


def test_criterion_04_special_case_lattice():
    gen = np.random.default_rng(404)
    worst = 0.0
    for trial in range(5):
        f = gen.random((24, 24)) * 250 + 1
        u = gen.random((24, 24)) * 250 + 1
        psf = PointSpreadFunction(gen.random((5, 3)))
        r = max(psf.radius)
        a = 0.002 * (trial + 1)
        for sm in (TV, PM, WT):
            ident = SolverConfig(alpha=a, data_penaliser=IDENTITY, smoothness_penaliser=sm)
            worst = max(
                worst,
                interior_rel(rrrl_step(u, f, psf, ident), regularised_rl_step(u, f, psf, ident), r),
                interior_rel(rrrl_step(u, f, psf, SolverConfig(alpha=0.0, data_penaliser=IDENTITY)),
                             rl_step(u, f, psf), r),
            )
        # robust RL is RRRL with alpha = 0: check through the run() variant switch
        cfg = SolverConfig(iterations=3, alpha=a, data_penaliser=ROBUST, smoothness_penaliser=PM)
        robust, _ = run(f, psf, cfg, "robust")
        rrrl0, _ = run(f, psf, SolverConfig(iterations=3, alpha=0.0, data_penaliser=ROBUST), "rrrl")
        worst = max(worst, interior_rel(robust, rrrl0, r))
    ok = worst < 1e-10
    assert report(4, ok, f"max interior relative disagreement {worst:.1e} (< 1e-10)")


def test_criterion_05_positivity(bench_runs):
    lows = []
    for name, (results, _) in bench_runs.items():
        for res in results:
            lows.append((f"{name}/{res.spec.method}@{res.spec.iterations}", res.record.min_value))
    violations = [(n, v) for n, v in lows if not v > 0]
    g, f, psf = preset_data("fig1", SEED)
    with np.errstate(all="ignore"):
        dey = denominator_only_step(f, f, BlurOperator(psf), 0.5, divergence_term(f, PM))
    dey_negative = bool(np.nanmin(dey) < 0)
    ok = not violations and dey_negative
    detail = (
        f"{len(lows) - len(violations)}/{len(lows)} bench runs stay > 0"
        + (f"; negative: {', '.join(f'{n} (min {v:.3g})' for n, v in violations)}" if violations else "")
        + f"; denominator-only variant at alpha=0.5 goes negative: {dey_negative}"
    )
    assert report(5, ok, detail)


def test_criterion_06_gradient_check():
    gen = np.random.default_rng(606)
    psf = PointSpreadFunction(gen.random((3, 5)))
    worst = 0.0
    for constrained in (False, True):
        for seed_shift in range(2):
            u = gen.random((8, 8)) * 200 + 20
            f = gen.random((8, 8)) * 200 + 20
            cfg = DescentConfig(alpha=0.5, constrained=constrained, smoothness_penaliser=SmoothnessPenaliser(lam=20.0))
            if constrained:
                # multiplicative direction u * (-dE/du) is -d/dv E(exp v)
                x, h = np.log(u), 1e-6
                def fun(v):
                    return variational_energy(np.exp(v), f, psf, cfg)
                analytic = -u * negative_gradient(u, f, psf, cfg)
            else:
                x, h = u, 1e-4
                def fun(v):
                    return variational_energy(v, f, psf, cfg)
                analytic = -negative_gradient(u, f, psf, cfg)
            fd = np.zeros_like(x)
            for idx in np.ndindex(x.shape):
                e = np.zeros_like(x)
                e[idx] = h
                fd[idx] = (fun(x + e) - fun(x - e)) / (2 * h)
            worst = max(worst, float(np.max(np.abs(analytic - fd) / np.abs(fd))))
    ok = worst < 1e-4
    assert report(6, ok, f"max per-pixel relative error {worst:.1e} (< 1e-4), unconstrained and constrained")


def test_criterion_07_semi_convergence(rl_curve):
    curve, _ = rl_curve
    early = curve[4:50]  # iterations 5..50
    k_best = int(np.argmax(early)) + 5
    margin = float(early.max() - curve[199])
    ok = margin >= 1.0
    assert report(7, ok, f"RL SNR {early.max():.2f} dB at k={k_best} vs {curve[199]:.2f} dB at k=200, margin {margin:.2f} dB (>= 1)")


def test_criterion_08_method_ordering(bench_runs, rl_curve):
    results, wall = bench_runs["fig1"]
    curve, rl_wall = rl_curve
    by = {(r.spec.variant, r.spec.iterations): r.record for r in results}
    rrrl = by[("rrrl", 200)].snr_db
    reg = by[("regularised", 100)].snr_db
    rl_best = float(curve.max())
    total = wall + rl_wall
    ok = rrrl >= reg + 3 and rrrl >= rl_best + 3 and total < 300
    assert report(8, ok, f"RRRL {rrrl:.2f} dB vs regularised RL {reg:.2f} dB and RL@best {rl_best:.2f} dB "
                         f"(margins >= 3 dB); fig1 protocol {total:.0f} s (< 300 s)")


def test_criterion_09_long_run_stability(bench_runs):
    results, _ = bench_runs["fig1"]
    by = {(r.spec.variant, r.spec.iterations): r.record for r in results}
    s200, s2000 = by[("rrrl", 200)].snr_db, by[("rrrl", 2000)].snr_db
    ok = abs(s2000 - s200) <= 1.5
    assert report(9, ok, f"RRRL {s200:.2f} dB at 200 vs {s2000:.2f} dB at 2000 iterations (within 1.5 dB)")


def test_criterion_10_energy_descent(bench_runs):
    problems = []
    for name, (results, _) in bench_runs.items():
        for res in results:
            tag = f"{name}/{res.spec.method}@{res.spec.iterations}"
            if res.spec.variant == "rrrl" and not res.record.energy_final < res.record.energy_initial:
                problems.append(f"{tag} final energy not below initial")
            if res.spec.is_descent:
                e = np.array([v for _, v in res.trace.energies])
                if len(e) != res.spec.iterations + 1 or np.any(np.diff(e) > 0):
                    problems.append(f"{tag} energy increased")
    ok = not problems
    assert report(10, ok, "RRRL energies decrease and variational energies are monotone"
                  if ok else "; ".join(problems))


def test_criterion_11_cost_ratio():
    _, f, psf = preset_data("fig1", SEED)
    assert f.shape == (256, 256)
    op = BlurOperator(psf)
    n = 20

    rl_cfg = SolverConfig(iterations=n)
    rrrl_cfg = SolverConfig(iterations=n, alpha=0.005, smoothness_penaliser=PM)
    steps = {"rl": [], "rrrl": []}
    # each iteration is timestamped through the callback, so setup and the
    # energy evaluations before and after the loop are not counted;
    # interleaved repeats so drifting machine load hits both methods alike
    for _ in range(5):
        for variant, cfg in (("rl", rl_cfg), ("rrrl", rrrl_cfg)):
            stamps = [time.perf_counter()]
            run(f, op, cfg, variant, callback=lambda k, u: stamps.append(time.perf_counter()))
            steps[variant].extend(np.diff(stamps[1:]))
    # best observed iteration, as timeit does: load spikes only ever add time
    t_rl, t_rrrl = min(steps["rl"]), min(steps["rrrl"])
    ratio = t_rrrl / t_rl
    ok = ratio <= 2.5
    assert report(11, ok, f"RRRL {1e3 * t_rrrl:.1f} ms vs RL {1e3 * t_rl:.1f} ms per iteration on 256x256, "
                          f"ratio {ratio:.2f} (<= 2.5)")


def test_criterion_12_determinism(bench_runs):
    first = records_to_csv([r.record for r in bench_runs["fig1"][0]], timing=False)
    second = records_to_csv([r.record for r in bench_preset("fig1", SEED)], timing=False)
    ok = first.encode() == second.encode()
    assert report(12, ok, f"fig1 CSV ({len(first.encode())} bytes, wall times omitted) identical across two runs: {ok}")
