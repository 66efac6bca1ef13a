"""Acceptance suite: one test per criterion, each printing a PASS line.

Run with  pytest tests/test_acceptance.py -v -s  to see the per-criterion
lines; the obstacle-benchmark ladder and its oracle are shared between the
last two criteria via module-scoped fixtures.
"""

import time

import numpy as np
import pytest
import scipy.sparse as sp
from scipy.integrate import quad

from fracobstacle.assembly import SparseSym, weighted_moment
from fracobstacle.fields import gl_rule, trace_l2_diff_sq
from fracobstacle.interp import l_interp, make_mollifier, pi_interp, r_interp
from fracobstacle.mesh import base_mesh, graded_partition, tensor_mesh
from fracobstacle.presets import get_preset
from fracobstacle.spectral import gamma_fn, make_params
from fracobstacle.studies import (
    StudySpec,
    run_interp_study,
    run_space_rate_study,
    run_time_rate_study,
    run_truncation_study,
)
from fracobstacle.timestep import run
from fracobstacle.vi import (
    StepSystem,
    enumerate_active_sets,
    pdas_solve,
    psor_solve,
)


def _report(num, name, passed, detail=""):
    line = f"ACCEPTANCE {num:02d} {name}: {'PASS' if passed else 'FAIL'}"
    if detail:
        line += f"  [{detail}]"
    print(line)
    assert passed, line


def test_criterion_01_normalization():
    t0 = time.perf_counter()
    ok = abs(make_params(0.5).d_s - 1.0) <= 1e-12
    rng = np.random.RandomState(101)
    worst = 0.0
    for s in rng.uniform(1e-3, 1 - 1e-3, size=200):
        p = make_params(s)
        ratio = p.d_s * gamma_fn(s) / (2.0 ** (1 - 2 * s) * gamma_fn(1 - s))
        worst = max(worst, abs(ratio - 1.0))
    elapsed = time.perf_counter() - t0
    _report(
        1, "normalization", ok and worst <= 1e-10 and elapsed < 1.0,
        f"worst identity defect {worst:.2e}, {elapsed:.2f}s",
    )


def test_criterion_02_weighted_quadrature():
    t0 = time.perf_counter()
    rng = np.random.RandomState(202)
    worst = 0.0
    for _ in range(1000):
        alpha = rng.uniform(-0.95, 0.95)
        k = rng.randint(0, 3)
        a = 0.0 if rng.rand() < 0.3 else rng.uniform(0.0, 2.0)
        b = a + rng.uniform(1e-3, 3.0)
        got = weighted_moment(a, b, alpha, k)
        if a == 0.0:
            want, _ = quad(lambda y: y ** float(k), a, b, weight="alg",
                           wvar=(alpha, 0.0))
        else:
            want, _ = quad(lambda y: y ** (alpha + k), a, b,
                           epsabs=1e-14, epsrel=1e-13)
        worst = max(worst, abs(got - want) / abs(want))
    elapsed = time.perf_counter() - t0
    _report(
        2, "weighted quadrature", worst <= 1e-11 and elapsed < 5.0,
        f"worst rel err {worst:.2e}, {elapsed:.1f}s",
    )


def test_criterion_03_unconstrained_consistency():
    t0 = time.perf_counter()
    p = make_params(0.5)
    prob = get_preset("P1", T=0.5)
    Y = 3.0
    exact = lambda x: np.exp(-np.pi * prob.T) * np.sqrt(2) * np.sin(np.pi * x)
    exact_norm = np.exp(-np.pi * prob.T)  # L2 norm of the exact trace
    errs = []
    for n, K in ((8, 32), (16, 64), (32, 128)):
        mesh = tensor_mesh(base_mesh(n), graded_partition(Y, n, 3.3, p))
        traj = run(prob, mesh, K, params=p)
        err = np.sqrt(
            trace_l2_diff_sq(mesh.base, traj.traces[-1], exact)
        ) / exact_norm
        errs.append(err)
    elapsed = time.perf_counter() - t0
    ok = errs[-1] <= 0.05 and errs[0] > errs[1] > errs[2] and elapsed < 60
    _report(
        3, "unconstrained consistency",
        ok, f"rel errors {['%.4f' % e for e in errs]}, {elapsed:.1f}s",
    )


def test_criterion_04_time_rate():
    t0 = time.perf_counter()
    spec = StudySpec(
        preset="P3",
        mode="right_limit",
        T=0.5,
        ladder=[(32, K, 2.0) for K in (8, 16, 32, 64, 128)],
        ref_factor=8,
    )
    report = run_time_rate_study(spec)
    elapsed = time.perf_counter() - t0
    ok = 0.8 <= report.slope <= 1.2 and report.corr >= 0.98 and elapsed < 300
    _report(
        4, "time rate",
        ok, f"slope {report.slope:.3f}, corr {report.corr:.4f}, {elapsed:.0f}s",
    )


def test_criterion_05_truncation_decay():
    t0 = time.perf_counter()
    spec = StudySpec(
        preset="P1",
        length=4.0,
        T=0.25,
        ladder=[(24, 16, float(Y)) for Y in (1, 2, 3, 4, 5)],
        y_density=12,
    )
    report = run_truncation_study(spec, Y_ref=8.0)
    elapsed = time.perf_counter() - t0
    ok = report.slope <= -0.1 and report.monotone and elapsed < 300
    _report(
        5, "truncation decay",
        ok, f"log-slope {report.slope:.3f} per unit height, {elapsed:.0f}s",
    )


def test_criterion_06_vi_kernel_oracle_equivalence():
    t0 = time.perf_counter()
    rng = np.random.RandomState(606)
    worst_v = 0.0
    sets_match = True
    for _ in range(200):
        n = 12
        m = rng.randint(1, 11)
        W = rng.randn(n, n)
        S = SparseSym(sp.csr_matrix(W @ W.T + n * np.eye(n)))
        cons = np.sort(rng.choice(n, size=m, replace=False))
        sys_ = StepSystem(
            S=S, rhs=rng.randn(n), lower_bound=rng.randn(m),
            constrained_set=cons,
        )
        sol_p = pdas_solve(sys_, tol=1e-12)
        sol_e = enumerate_active_sets(sys_)
        sets_match &= bool(
            np.array_equal(np.sort(sol_p.active_set), np.sort(sol_e.active_set))
        )
        worst_v = max(worst_v, float(np.max(np.abs(sol_p.v - sol_e.v))))
    worst_psor = 0.0
    for _ in range(10):
        n = 50
        W = rng.randn(n, n)
        S = SparseSym(sp.csr_matrix(W @ W.T + n * np.eye(n)))
        cons = np.sort(rng.choice(n, size=25, replace=False))
        sys_ = StepSystem(
            S=S, rhs=rng.randn(n), lower_bound=rng.randn(25),
            constrained_set=cons,
        )
        a = pdas_solve(sys_, tol=1e-12)
        b = psor_solve(sys_, tol=1e-12)
        worst_psor = max(worst_psor, float(np.max(np.abs(a.v - b.v))))
    elapsed = time.perf_counter() - t0
    ok = sets_match and worst_v <= 1e-10 and worst_psor <= 1e-8 and elapsed < 30
    _report(
        6, "vi kernel equivalence",
        ok,
        f"enum gap {worst_v:.1e}, psor gap {worst_psor:.1e}, {elapsed:.0f}s",
    )


def test_criterion_07_complementarity():
    t0 = time.perf_counter()
    p = make_params(0.5)
    prob = get_preset("P2", T=0.5)
    worst_res = 0.0
    worst_feas = 0.0
    for n, K in ((16, 32), (32, 32)):
        mesh = tensor_mesh(base_mesh(n), graded_partition(2.0, n, 3.3, p))
        traj = run(prob, mesh, K, params=p)
        worst_res = max(worst_res, float(np.max(traj.residuals)))
        worst_feas = max(worst_feas, traj.feasibility_violation())
    elapsed = time.perf_counter() - t0
    ok = worst_res <= 1e-8 and worst_feas <= 1e-10 and elapsed < 60
    _report(
        7, "complementarity",
        ok, f"residual {worst_res:.1e}, feasibility {worst_feas:.1e}, {elapsed:.0f}s",
    )


def test_criterion_08_positivity_preservation():
    t0 = time.perf_counter()
    p = make_params(0.5)
    base = base_mesh(16)
    part = graded_partition(1.0, 16, 3.3, p)
    mesh = tensor_mesh(base, part)
    moll = make_mollifier(base, part)
    rng = np.random.RandomState(808)
    worst = 0.0

    def random_nonneg(rng):
        a = rng.randn(4)
        c = np.abs(a).sum() + rng.rand()

        def f(x):
            out = np.full_like(np.asarray(x, float), c)
            for l, al in enumerate(a, start=1):
                out = out + al * np.sin(np.pi * l * x)
            return out

        return f

    for _ in range(1000):
        f = random_nonneg(rng)
        worst = min(worst, float(np.min(r_interp(f, base, moll))))
    # composite path: the trace row of the full interpolant
    Y = part.Y
    for _ in range(50):
        f = random_nonneg(rng)
        w = lambda x, y: f(x) * (1.0 - y / Y)
        grad = (
            lambda x, y: np.zeros_like(np.asarray(x, float)),
            lambda x, y: np.zeros_like(np.asarray(x, float)),
        )
        out = pi_interp(w, mesh, moll, grad=grad)
        worst = min(worst, float(np.min(out[mesh.trace_set])))
    elapsed = time.perf_counter() - t0
    ok = worst >= -1e-12 and elapsed < 30
    _report(
        8, "positivity preservation", ok,
        f"worst trace value {worst:.1e}, {elapsed:.0f}s",
    )


def test_criterion_09_linear_reproduction_and_superapproximation():
    t0 = time.perf_counter()
    p = make_params(0.5)
    base = base_mesh(12)
    part = graded_partition(1.0, 12, 3.3, p)
    mesh = tensor_mesh(base, part)
    moll = make_mollifier(base, part)
    r_vals = r_interp(lambda x: 1.7 * x - 0.4, base, moll)
    r_err = np.max(np.abs(r_vals - (1.7 * base.interior - 0.4)))
    l_out = l_interp(
        lambda x, y: 0.3 * x + 0.8 * y + 0.2,
        mesh,
        moll,
        grad=(
            lambda x, y: 0.3 * np.ones_like(x),
            lambda x, y: 0.8 * np.ones_like(x),
        ),
    )
    xs, ys = mesh.node_xy(mesh.free_set)
    l_err = np.max(np.abs(l_out[mesh.free_set] - (0.3 * xs + 0.8 * ys + 0.2)))

    errs = []
    ns = (8, 16, 32, 64)
    for n in ns:
        b = base_mesh(n)
        pr = graded_partition(1.0, n, 3.3, p)
        mo = make_mollifier(b, pr)
        vals = np.concatenate(
            [[0.0], r_interp(lambda x: np.sin(np.pi * x), b, mo), [0.0]]
        )
        errs.append(
            np.sqrt(trace_l2_diff_sq(b, vals, lambda x: np.sin(np.pi * x)))
        )
    slope = -np.polyfit(np.log(ns), np.log(errs), 1)[0]
    elapsed = time.perf_counter() - t0
    ok = r_err <= 1e-9 and l_err <= 1e-9 and slope >= 1.9 and elapsed < 60
    _report(
        9, "linear reproduction / superapproximation", ok,
        f"affine errs {r_err:.1e}/{l_err:.1e}, trace slope {slope:.2f}, {elapsed:.0f}s",
    )


def test_criterion_10_interpolation_estimate():
    t0 = time.perf_counter()
    report = run_interp_study(s=0.75, rungs=(4, 8, 16, 32), Y=1.0)
    theta0 = 1.0  # min(1, (8s-3)/(4s)) at s = 0.75
    threshold = 0.5 * theta0 / 2.0
    elapsed = time.perf_counter() - t0
    ok = report.monotone and report.slope >= threshold and elapsed < 300
    _report(
        10, "interpolation estimate", ok,
        f"decay rate {report.slope:.3f} vs threshold {threshold}, {elapsed:.0f}s",
    )


@pytest.fixture(scope="module")
def obstacle_benchmark():
    # coupled ladder tau ~ (#cells)^(-1/2); the coarsest rung still resolves
    # the moving contact set, which keeps the energy ratios saturated
    spec = StudySpec(
        preset="P2",
        target="oracle",
        T=0.5,
        ladder=[(16, 16, 2.0), (32, 32, 2.0), (64, 64, 2.0)],
    )
    t0 = time.perf_counter()
    report = run_space_rate_study(spec)
    report.notes.append(f"benchmark wall time {time.perf_counter() - t0:.0f}s")
    return report, time.perf_counter() - t0


def test_criterion_11_obstacle_benchmark(obstacle_benchmark):
    report, elapsed = obstacle_benchmark
    errs = [r["err_total"] for r in report.records]
    rel_final = report.records[-1]["rel_linf_l2"]
    ok = (
        errs[0] > errs[1] > errs[2]
        and rel_final <= 0.05
        and elapsed < 600
    )
    _report(
        11, "obstacle benchmark vs oracle", ok,
        f"errors {['%.4f' % e for e in errs]}, final rel {rel_final:.4f}, {elapsed:.0f}s",
    )


def test_criterion_12_energy_stability(obstacle_benchmark):
    report, _ = obstacle_benchmark
    t0 = time.perf_counter()
    quantities = (
        "energy_trace_increments",
        "energy_grad_final",
        "energy_grad_increments",
    )
    ok = True
    detail = []
    for q in quantities:
        ratios = [
            r[q] / r["energy_data_bound"] for r in report.records
        ]
        ref = ratios[0]
        stable = all(ref / 3.0 <= rho <= 3.0 * ref for rho in ratios)
        ok &= stable
        detail.append(f"{q.split('_', 1)[1]}: x{max(ratios) / ref:.2f}")
    elapsed = time.perf_counter() - t0
    _report(
        12, "energy stability", ok and elapsed < 300, "; ".join(detail),
    )
