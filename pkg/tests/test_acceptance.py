"""Acceptance suite: one test per criterion, one printed verdict line each.

Exact algebraic oracles are asserted at tight tolerances; the statistical
reproductions run the stock benchmark configurations at fixed seeds.
Criteria that the implementation demonstrably cannot meet (because the
source results are not reproducible from the stated formulas) are still
asserted as written; their failure messages carry the measured numbers.
"""

import time

import numpy as np
import pytest

from fpfdecomp.cli import dim_sweep_run, gain_compare_run, run_trials
from fpfdecomp.filters import run_filter
from fpfdecomp.gain import (
    assemble_gain,
    backward_recursion,
    build_blocks,
    invertibility_probe,
    scalar_gain_closed_form,
    scalar_recursion,
)
from fpfdecomp.hermite import HermiteExpansion, expansion_grad
from fpfdecomp.metrics import armse, armse_per_component, mre
from fpfdecomp.mixture import GaussianComponent, Mixture, mixture_density
from fpfdecomp.scenarios import (
    ScenarioSpec,
    build_cubic_sensor,
    build_scenario,
    build_static_gain_mixture,
    make_run_config,
    scenario_defaults,
)

SEED = 1234


def verdict(name: str, ok: bool, detail: str) -> None:
    print(f"\nACCEPTANCE {name}: {'PASS' if ok else 'FAIL'} - {detail}")


def cubic_channel(d, j):
    k3 = tuple(3 if l == j else 0 for l in range(d))
    k1 = tuple(1 if l == j else 0 for l in range(d))
    return HermiteExpansion(d=d, p=3, coeffs={k3: 0.125, k1: 0.75})


def _warm_up():
    model = build_cubic_sensor(2)
    cfg = make_run_config(scenario_defaults("cubic_sensor_d"), "fpf_decomp", {"T": 0.05})
    run_filter(model, "fpf_decomp", cfg, 0, 0)


# ---------------------------------------------------------------------------


def test_exact_coefficient_oracle_cubic():
    rng = np.random.default_rng(SEED)
    t0 = time.perf_counter()
    worst = 0.0
    for d in (1, 2, 3, 5):
        for _ in range(100):
            eps = float(rng.uniform(0.005, 2.0))
            X = rng.normal(size=d) * 2
            blocks = build_blocks(np.eye(d) / eps, X, 3)
            j = int(rng.integers(d))
            sol = backward_recursion(blocks, cubic_channel(d, j), X)

            def unit(q):
                return tuple(q if l == j else 0 for l in range(d))

            want = {
                unit(3): eps / 24,
                unit(2): eps * X[j] / 8,
                unit(1): eps * X[j] ** 2 / 2 + eps**2 + eps / 4,
            }
            for k, w in want.items():
                rel = abs(sol.expansion.coeffs.get(k, 0.0) - w) / max(abs(w), 1e-300)
                worst = max(worst, rel)
            cw = X[j] ** 3 + 3 * eps * X[j]
            worst = max(worst, abs(sol.constant - cw) / max(abs(cw), 1e-12))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-12 and elapsed < 1.0
    verdict(
        "exact-coefficient oracle",
        ok,
        f"max rel dev {worst:.2e} (tol 1e-12), {elapsed:.2f}s (< 1s)",
    )
    assert worst <= 1e-12
    assert elapsed < 1.0


def test_linear_observation_oracle():
    rng = np.random.default_rng(SEED + 1)
    t0 = time.perf_counter()
    exact = True
    worst = 0.0
    for trial in range(100):
        d = int(rng.integers(1, 6))
        # dyadic widths make the 1/eps round trips exact in binary floats,
        # so the algebraic identities can be asserted bitwise
        dyadic = trial % 2 == 0
        if dyadic:
            eps = 2.0 ** (-rng.integers(1, 7, size=d)).astype(float)
        else:
            eps = rng.uniform(0.05, 1.5, size=d)
        X = rng.normal(size=d)
        blocks = build_blocks(np.diag(1.0 / eps), X, 3)
        h = HermiteExpansion(d=d, p=1, coeffs={tuple([1] + [0] * (d - 1)): 0.5})
        sol = backward_recursion(blocks, h, X)
        key = tuple([1] + [0] * (d - 1))
        if dyadic:
            exact &= sol.expansion.coeffs == {key: eps[0] / 2}
            exact &= sol.constant == X[0]
        else:
            phi = sol.expansion.coeffs
            worst = max(worst, abs(phi.get(key, 0.0) - eps[0] / 2) / (eps[0] / 2))
            worst = max(worst, sum(abs(v) for k, v in phi.items() if k != key))
            worst = max(worst, abs(sol.constant - X[0]) / max(abs(X[0]), 1e-15))
    elapsed = time.perf_counter() - t0
    ok = exact and worst < 4e-15 and elapsed < 1.0
    verdict(
        "linear-observation oracle",
        ok,
        f"phi1 = (eps1/2, 0, ...) and C = X1: bitwise on dyadic widths, "
        f"{worst:.1e} rel on arbitrary ones; {elapsed:.2f}s (< 1s)",
    )
    assert exact
    assert worst < 4e-15
    assert elapsed < 1.0


def test_scalar_multivariate_equivalence_d1():
    rng = np.random.default_rng(SEED + 2)
    eps = 0.2
    parts = rng.normal(size=14) * 1.5
    a = np.array([0.0, 0.75, 0.0, 0.125])
    hbar = float(np.mean(parts**3))
    blocks = build_blocks(np.array([[1.0 / eps]]), np.zeros(1), 3)
    h1 = HermiteExpansion(d=1, p=3, coeffs={(1,): 0.75, (3,): 0.125})
    coeffs = [[backward_recursion(blocks, h1, np.array([X]))] for X in parts]
    mixture = Mixture([GaussianComponent.from_diagonal([X], [eps]) for X in parts])
    field = assemble_gain(parts[:, None], mixture, coeffs, np.array([hbar]))
    xs = np.linspace(parts.min() - 2, parts.max() + 2, 1000)
    ref = scalar_gain_closed_form(xs, parts, eps, a, hbar)
    got = np.array([field(np.array([x]))[0, 0] for x in xs])
    dev = float(np.max(np.abs(got - ref) / np.maximum(1.0, np.abs(ref))))
    ok = dev <= 1e-10
    verdict(
        "scalar/multivariate equivalence (d=1)",
        ok,
        f"max relative dev {dev:.2e} at 1000 points (tol 1e-10; gain spans "
        f"[{ref.min():.1f}, {ref.max():.1f}])",
    )
    assert dev <= 1e-10


def test_decoupled_agreement_at_particles():
    """Multivariate gain at the particles vs the per-coordinate scalar gain,
    d in {2, 3, 5}: exactly equal for a single-component mixture, but the
    cross-particle transports (d-dim radial vs 1-d erf) differ structurally
    for N_p >= 2, so the 1e-9 equality does not hold there."""
    rng = np.random.default_rng(SEED + 3)
    eps = 0.01
    a = np.array([0.0, 0.75, 0.0, 0.125])
    worst = {}
    for d in (2, 3, 5):
        for n_p in (1, 10):
            parts = rng.normal(size=(n_p, d))
            blocks = build_blocks(np.eye(d) / eps, np.zeros(d), 3)
            hs = [cubic_channel(d, j) for j in range(d)]
            coeffs = [[backward_recursion(blocks, hj, x) for hj in hs] for x in parts]
            C = np.array([[c.constant for c in row] for row in coeffs])
            hbar = C.mean(axis=0)
            mixture = Mixture(
                [GaussianComponent.from_diagonal(x, eps * np.ones(d)) for x in parts]
            )
            field = assemble_gain(parts, mixture, coeffs, hbar)
            K = field.eval_many(parts)
            dev = 0.0
            for j in range(d):
                scal = scalar_gain_closed_form(parts[:, j], parts[:, j], eps, a, hbar[j])
                dev = max(dev, float(np.abs(K[:, j, j] - scal).max()))
            worst[(d, n_p)] = dev
    single = max(v for (d, n), v in worst.items() if n == 1)
    multi = max(v for (d, n), v in worst.items() if n > 1)
    ok = single <= 1e-9 and multi <= 1e-9
    verdict(
        "decoupled agreement at particles",
        ok,
        f"N_p=1 max dev {single:.2e}; N_p=10 max dev {multi:.2e} (tol 1e-9; the "
        "cross-particle erf and incomplete-gamma transports differ for N_p >= 2)",
    )
    assert single <= 1e-9
    assert multi <= 1e-9, (
        "multivariate and per-coordinate scalar gains differ at particles for "
        f"multi-component mixtures: max dev {multi:.3e} > 1e-9; equality holds "
        "only for the single-component mixture (the vanishing self-transport "
        "argument does not cover cross-particle terms)"
    )


def test_component_level_agreement_at_particles():
    # the part of the equivalence that does hold for every N_p: each
    # component's polynomial gradient at its own particle equals the scalar
    # solution's polynomial there, and both transports vanish at x = X_i
    rng = np.random.default_rng(SEED + 4)
    for d in (2, 3, 5):
        eps = float(rng.uniform(0.05, 0.8))
        parts = rng.normal(size=(8, d))
        blocks = build_blocks(np.eye(d) / eps, np.zeros(d), 3)
        for j in range(d):
            hj = cubic_channel(d, j)
            for x in parts:
                sol = backward_recursion(blocks, hj, x)
                grad = expansion_grad(sol.expansion, x)
                scal = scalar_recursion([0.0, 0.75, 0.0, 0.125], float(x[j]), eps)
                poly = sum(
                    scal.ktilde[l] * np.polynomial.hermite.hermval(x[j], np.eye(3)[l])
                    for l in range(3)
                )
                assert grad[j] == pytest.approx(float(poly), rel=1e-9)
                off = np.delete(grad, j)
                assert np.abs(off).max() < 1e-12


def test_poisson_residual_property():
    from fpfdecomp import _kernels

    t0 = time.perf_counter()
    rng = np.random.default_rng(SEED + 5)
    worst_ratio = 0.0
    for d, n_p in ((1, 8), (2, 10)):
        eps = 0.5
        parts = rng.normal(size=(n_p, d))
        blocks = build_blocks(np.eye(d) / eps, np.zeros(d), 3)
        hs = [cubic_channel(d, j) for j in range(d)]
        coeffs = [[backward_recursion(blocks, hj, x) for hj in hs] for x in parts]
        C = np.array([[c.constant for c in row] for row in coeffs])
        hbar = C.mean(axis=0)
        std = parts.std() + np.sqrt(eps)
        lo, hi = parts.mean(axis=0) - 4 * std, parts.mean(axis=0) + 4 * std
        npts = 2001 if d == 1 else 361
        axes = [np.linspace(lo[l], hi[l], npts) for l in range(d)]
        grids = np.meshgrid(*axes, indexing="ij")
        pts = np.stack([g.ravel() for g in grids], axis=1)
        logw = _kernels.logw_shared_diag(pts, parts, eps * np.ones(d))
        dens = np.exp(logw).mean(axis=1).reshape(grids[0].shape)
        # packed evaluation (verified elsewhere to match the assembled field)
        ktilde, Cpk = _kernels.solve_percoord(
            np.ascontiguousarray(parts),
            np.full(d, eps),
            np.stack([np.array([0.0, 0.75, 0.0, 0.125])] * d),
            np.arange(d, dtype=np.int64),
            3,
        )
        K = _kernels.gain_full_percoord(
            pts, np.ascontiguousarray(parts), np.full(d, eps), ktilde,
            np.arange(d, dtype=np.int64), Cpk, hbar,
        ).reshape(grids[0].shape + (d, d))
        np.testing.assert_allclose(Cpk, C, rtol=1e-12)
        for j in range(d):
            div = np.zeros_like(dens)
            for l in range(d):
                div += np.gradient(dens * K[..., l, j], axes[l], axis=l)
            h_vals = pts[:, j].reshape(grids[0].shape) ** 3
            resid = np.abs(div + (h_vals - hbar[j]) * dens).max()
            worst_ratio = max(worst_ratio, resid / np.abs(dens * h_vals).max())
    # Galerkin residual at random points (dense precision)
    galerkin = 0.0
    from fpfdecomp.hermite import enumerate_indices, expansion_eval, expansion_laplacian

    for d in (2, 3):
        A = rng.normal(size=(d, d))
        S = A @ A.T + d * np.eye(d)
        X = rng.normal(size=d)
        iset_coeffs = {
            tuple(k): rng.normal() for k in enumerate_indices(d, 3) if rng.random() < 0.7
        }
        h = HermiteExpansion(d=d, p=3, coeffs=iset_coeffs)
        sol = backward_recursion(build_blocks(S, X, 3), h, X)
        for _ in range(50):
            x = rng.normal(size=d) * 2
            lhs = -(x - X) @ S @ expansion_grad(sol.expansion, x) + expansion_laplacian(
                sol.expansion, x
            )
            rhs = -expansion_eval(h, x) + sol.constant
            galerkin = max(galerkin, abs(lhs - rhs) / max(1.0, abs(rhs)))
    elapsed = time.perf_counter() - t0
    ok = worst_ratio <= 1e-3 and galerkin <= 1e-8 and elapsed < 30
    verdict(
        "Poisson-residual property",
        ok,
        f"grid residual {worst_ratio:.2e} (<= 1e-3), Galerkin {galerkin:.2e} (<= 1e-8), {elapsed:.1f}s (< 30s)",
    )
    assert worst_ratio <= 1e-3
    assert galerkin <= 1e-8
    assert elapsed < 30


def test_invertibility_suites():
    rng = np.random.default_rng(SEED + 6)
    failures = 0
    trials = 1000
    # (a) diagonal precision, d <= 10, q <= 6
    for _ in range(trials):
        d = int(rng.integers(1, 11))
        eps = rng.uniform(0.01, 10.0, size=d)
        reports = invertibility_probe(np.diag(1.0 / eps), d, 6)
        failures += sum(not r.invertible for r in reports)
    # (b) d = 2 dense SPD with entry-wise tridiagonal structure
    structure_ok = True
    for _ in range(trials):
        A = rng.normal(size=(2, 2))
        S = A @ A.T + 2 * np.eye(2) * rng.uniform(0.1, 2.0)
        reports = invertibility_probe(S, 2, 6)
        failures += sum(not r.invertible for r in reports)
        blocks = build_blocks(S, np.zeros(2), 6)
        a_, b_, c_ = S[0, 0], S[1, 1], S[0, 1]
        for q in range(1, 7):
            Aq = blocks.a_matrix(q)
            for r_ in range(q + 1):
                structure_ok &= np.isclose(Aq[r_, r_], a_ * (q - r_) + b_ * r_)
                if r_ + 1 <= q:
                    structure_ok &= np.isclose(Aq[r_, r_ + 1], c_ * (r_ + 1))
                if r_ >= 1:
                    structure_ok &= np.isclose(Aq[r_, r_ - 1], c_ * (q - r_ + 1))
                structure_ok &= np.all(Aq[r_, : max(r_ - 1, 0)] == 0.0)
                structure_ok &= np.all(Aq[r_, r_ + 2 :] == 0.0)
    # (c) d = 3 dense SPD, levels 1 and 2
    for _ in range(trials):
        A = rng.normal(size=(3, 3))
        S = A @ A.T + 3 * np.eye(3) * rng.uniform(0.1, 2.0)
        reports = invertibility_probe(S, 3, 2)
        failures += sum(not r.invertible for r in reports)
    ok = failures == 0 and structure_ok
    verdict(
        "invertibility suites",
        ok,
        f"0 failures required, got {failures}; d=2 tridiagonal structure "
        f"{'verified' if structure_ok else 'BROKEN'} ({trials} trials per case)",
    )
    assert failures == 0
    assert structure_ok


def test_example_iv1_reproduction():
    t0 = time.perf_counter()
    problem = build_static_gain_mixture()
    wins = 0
    errors = []
    for seed in range(20):
        res = gain_compare_run(problem, seed)
        e = res["errors"]
        win = all(
            e["fpf_decomp"][j] < e["fpf_const"][j] and e["fpf_decomp"][j] < e["fpf_kernel"][j]
            for j in range(2)
        )
        wins += win
        errors.append(e["fpf_decomp"])
    elapsed = time.perf_counter() - t0
    mean_err = np.mean(errors, axis=0)
    ok = wins >= 18 and elapsed < 60
    verdict(
        "two-Gaussian gain comparison",
        ok,
        f"decomposition best on both components in {wins}/20 seeds (need >= 18); "
        f"mean decomposition l2 errors {mean_err.round(2)}; {elapsed:.0f}s (< 60s)",
    )
    assert wins >= 18
    assert elapsed < 60


@pytest.fixture(scope="module")
def ship_records():
    _warm_up()
    model, defaults = build_scenario(ScenarioSpec("ship_polar"))
    cfgs = {m: make_run_config(defaults, m) for m in ("fpf_decomp", "ekf", "pf")}
    t0 = time.perf_counter()
    recs = run_trials(model, cfgs, trials=100, seed=SEED, threads=2)
    return recs, time.perf_counter() - t0


def test_ship_benchmark(ship_records):
    recs, elapsed = ship_records
    a = {m: armse(recs[m]) for m in recs}
    band = 0.9 <= a["fpf_decomp"] <= 1.7
    ordering = a["fpf_decomp"] < a["ekf"] < a["pf"]
    ok = band and ordering and elapsed < 300
    verdict(
        "ship benchmark",
        ok,
        f"FPF(9)={a['fpf_decomp']:.4f} (band [0.9, 1.7]: {'ok' if band else 'out'}), "
        f"EKF={a['ekf']:.4f}, PF(50)={a['pf']:.4f}; ordering FPF<EKF<PF "
        f"{'holds' if ordering else 'fails'}; {elapsed:.0f}s (< 300s)",
    )
    assert band, f"FPF ARMSE {a['fpf_decomp']:.4f} outside [0.9, 1.7]"
    assert elapsed < 300
    assert ordering, (
        f"ARMSE ordering FPF < EKF < PF fails: FPF={a['fpf_decomp']:.4f}, "
        f"EKF={a['ekf']:.4f}, PF={a['pf']:.4f}; with the linear polar angle "
        "measurement the radius is unobservable, so the 9-particle ensemble "
        "mean cannot beat the EKF's deterministic propagation in expectation"
    )


@pytest.fixture(scope="module")
def lorenz_results():
    _warm_up()
    model, defaults = build_scenario(ScenarioSpec("lorenz63"))
    t0 = time.perf_counter()
    fpf_cfg = make_run_config(defaults, "fpf_decomp")
    fpf = run_trials(model, {"fpf_decomp": fpf_cfg}, 1, SEED, 1)["fpf_decomp"]
    pf_cfg = make_run_config(defaults, "pf")
    pf = run_trials(model, {"pf": pf_cfg}, 1, SEED, 1)["pf"]
    ordering = {}
    for m in ("fpf_decomp", "fpf_kernel", "fpf_const"):
        cfg = make_run_config(defaults, m, {"T": 10.0})
        ordering[m] = run_trials(model, {m: cfg}, 100, SEED, 2)[m]
    return fpf, pf, ordering, time.perf_counter() - t0


def test_lorenz_benchmark(lorenz_results):
    fpf, pf, ordering, elapsed = lorenz_results
    fpf_pc = armse_per_component(fpf, t_min=1.0, t_max=50.0)
    pf_full = armse(pf, t_min=1.0, t_max=50.0)
    ord_values = {m: armse(rs, t_min=1.0) for m, rs in ordering.items()}
    fpf_ok = np.all(fpf_pc <= 2.0)
    pf_deteriorates = pf_full >= 5.0
    ord_ok = (
        ord_values["fpf_decomp"] < ord_values["fpf_kernel"] < ord_values["fpf_const"]
    )
    ok = fpf_ok and pf_deteriorates and ord_ok and elapsed < 1200
    verdict(
        "Lorenz benchmark",
        ok,
        f"FPF(50) per-component ARMSE {fpf_pc.round(3)} (<= 2.0: {'ok' if fpf_ok else 'out'}); "
        f"PF(500) ARMSE {pf_full:.2f} (>= 5 required: {'ok' if pf_deteriorates else 'NOT met - the bootstrap PF tracks'}); "
        f"gain ordering decomp<kernel<const: {ord_values['fpf_decomp']:.3f} / "
        f"{ord_values['fpf_kernel']:.3f} / {ord_values['fpf_const']:.3f} "
        f"({'holds' if ord_ok else 'fails'}); {elapsed:.0f}s (< 1200s)",
    )
    assert fpf_ok, f"FPF per-component ARMSE {fpf_pc} exceeds 2.0"
    assert elapsed < 1200
    assert pf_deteriorates, (
        f"PF(500) ARMSE {pf_full:.2f} < 5: a correct bootstrap filter with "
        "systematic resampling tracks this system for the full 50 s"
    )
    assert ord_ok, (
        f"gain-method ordering fails: decomposition {ord_values['fpf_decomp']:.3f}, "
        f"kernel {ord_values['fpf_kernel']:.3f}, constant {ord_values['fpf_const']:.3f}; "
        "the covariance (constant) gain is near-optimal on this near-unimodal "
        "problem and the kernel method loses capture at the fixed 0.1 bandwidth"
    )


def test_scaling(capsys):
    _warm_up()
    t0 = time.perf_counter()
    defaults = scenario_defaults("cubic_sensor_d")
    res = dim_sweep_run([1, 3, 5, 10, 20, 30, 50], defaults, SEED, timing_steps=20, mre_dims=[])
    slope = res["slope"]
    model = build_cubic_sensor(100)
    cfg = make_run_config(defaults, "fpf_decomp")
    rec = run_filter(model, "fpf_decomp", cfg, SEED, 0)
    mre_100 = mre(rec)
    elapsed = time.perf_counter() - t0
    slope_ok = 2.5 <= slope <= 4.2
    mre_ok = mre_100 <= 0.75
    ok = slope_ok and mre_ok and elapsed < 900
    verdict(
        "complexity scaling",
        ok,
        f"fitted log-log slope {slope:.3f} (in [2.5, 4.2]: {'ok' if slope_ok else 'out'}); "
        f"MRE(d=100, N=50) = {mre_100:.4f} (<= 0.75); {elapsed:.0f}s (< 900s)",
    )
    assert slope_ok, f"slope {slope:.3f} outside [2.5, 4.2]"
    assert mre_ok, f"MRE at d=100 is {mre_100:.4f} > 0.75"
    assert elapsed < 900


def test_eps_sweep_monotonicity():
    _warm_up()
    t0 = time.perf_counter()
    model, defaults = build_scenario(ScenarioSpec("lorenz63"))
    values = []
    for eps in (3.0, 0.3, 0.03):
        cfg = make_run_config(defaults, "fpf_decomp", {"eps": eps, "eps_mode": "fixed"})
        recs = run_trials(model, {"fpf_decomp": cfg}, 1, SEED, 1)["fpf_decomp"]
        values.append(armse_per_component(recs, t_min=1.0))
    elapsed = time.perf_counter() - t0
    v = np.stack(values)
    non_increasing = bool(np.all(v[1] <= v[0] + 1e-12) and np.all(v[2] <= v[1] + 1e-12))
    ok = non_increasing and elapsed < 600
    verdict(
        "eps-sweep monotonicity",
        ok,
        "per-component RMSE at eps 3 / 0.3 / 0.03: "
        + " | ".join(str(row.round(3)) for row in v)
        + f" ({'non-increasing' if non_increasing else 'INCREASING as eps shrinks'}); "
        f"{elapsed:.0f}s (< 600s)",
    )
    assert elapsed < 600
    assert non_increasing, (
        "per-component RMSE grows as eps shrinks "
        f"({[list(r.round(2)) for r in v]}): with fixed eps the inter-particle "
        "transport of the assembled field collapses like eps^(d/2) once the "
        "kernels separate, so smaller eps loses the attractor"
    )


def _strip_cpu_column(path):
    lines = path.read_text().splitlines()
    header = lines[0].split(",")
    keep = [i for i, name in enumerate(header) if name != "cpu_s"]
    return "\n".join(",".join(row.split(",")[i] for i in keep) for row in lines)


def test_determinism_across_thread_counts(tmp_path):
    """Byte-identical reruns across thread counts; the wall-clock cpu_s
    column is excluded (a timing measurement cannot reproduce bitwise)."""
    from fpfdecomp.cli import main

    outs = []
    for threads in (1, 2):
        out = tmp_path / f"threads{threads}"
        code = main(
            [
                "filter-run",
                "--scenario",
                "ship_polar",
                "--methods",
                "fpf_decomp,ekf,pf",
                "--trials",
                "4",
                "--seed",
                str(SEED),
                "--threads",
                str(threads),
                "--out",
                str(out),
            ]
        )
        assert code == 0
        outs.append(out)
    traj_same = (outs[0] / "filter_run.csv").read_bytes() == (outs[1] / "filter_run.csv").read_bytes()
    summary_same = _strip_cpu_column(outs[0] / "summary.csv") == _strip_cpu_column(
        outs[1] / "summary.csv"
    )
    same = traj_same and summary_same
    verdict(
        "determinism across thread counts",
        same,
        "trajectories byte-identical and summaries identical outside the "
        "wall-clock column, threads 1 vs 2",
    )
    assert traj_same
    assert summary_same
