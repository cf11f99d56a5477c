"""Benchmark command line: scenario x method x seed grids to CSV.

Subcommands
-----------
``bench gain-compare``  static mixture gain comparison (per-particle gain
values for every method plus the analytic gain, and summary l2 errors).

``bench filter-run``    Monte Carlo filter comparison on one scenario;
emits per-step trajectories and an ARMSE/CPU summary.

``bench dim-sweep``     cubic-sensor dimension sweep: wall time of the
filter loop (general dense-level solver), accuracy (MRE), optional search
for the smallest particle count reaching a target MRE.

Exit codes: 0 ok, 2 config error, 3 numerical failure, 4 I/O error.
Every CSV row carries scenario, seed and the git-describe version string;
reruns with identical seed are byte-identical regardless of thread count.
"""

from __future__ import annotations

import argparse
import os
import subprocess
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import __version__
from .baselines import DegenerateKernelRow, KernelGainConfig, constant_gain, kernel_gain
from .filters import (
    DecompositionGain,
    FilterRunConfig,
    IntegrationDiverged,
    InnovationCovarianceSingular,
    make_rng,
    run_filter,
    simulate_truth,
)
from .gain import SingularBlock, assemble_gain, backward_recursion, build_blocks
from .metrics import RunRecord, armse, armse_per_component, mre, scaling_fit
from .mixture import GaussianComponent, Mixture
from .scenarios import (
    ScenarioSpec,
    StaticGainProblem,
    build_cubic_sensor,
    build_scenario,
    make_run_config,
    scenario_defaults,
)

NUMERICAL_ERRORS = (
    SingularBlock,
    IntegrationDiverged,
    DegenerateKernelRow,
    InnovationCovarianceSingular,
    FloatingPointError,
)


class ConfigError(ValueError):
    pass


def bench_version() -> str:
    root = Path(__file__).resolve().parents[2]
    try:
        out = subprocess.run(
            ["git", "describe", "--always", "--dirty"],
            cwd=root,
            capture_output=True,
            text=True,
            timeout=5,
        )
        if out.returncode == 0 and out.stdout.strip():
            return out.stdout.strip()
    except (OSError, subprocess.SubprocessError):
        pass
    return f"v{__version__}"


def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def write_csv(path: Path, header: Sequence[str], rows: Sequence[Sequence]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [",".join(header)]
    lines.extend(",".join(_fmt(v) for v in row) for row in rows)
    path.write_text("\n".join(lines) + "\n")


def load_config(path: Optional[str]) -> dict:
    if path is None:
        return {}
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        with open(p, "rb") as fh:
            return tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config parse error: {exc}") from exc


def resolve_threads(args, config: dict) -> int:
    if args.threads is not None:
        return max(1, args.threads)
    run_cfg = config.get("run", {})
    if "threads" in run_cfg:
        return max(1, int(run_cfg["threads"]))
    env = os.environ.get("BENCH_THREADS")
    if env:
        return max(1, int(env))
    return 1


def _run_options(config: dict) -> dict:
    opts = dict(config.get("filter", {}))
    opts.pop("n_particles", None)
    return opts


def _n_particles_overrides(config: dict) -> dict:
    return dict(config.get("filter", {}).get("n_particles", {}))


# ---------------------------------------------------------------------------
# shared experiment drivers (also used by the acceptance suite)


def gain_compare_run(
    problem: StaticGainProblem,
    seed: int,
    bandwidth: float = 0.1,
    iterations: int = 100,
) -> dict:
    """All three gain approximations plus the analytic gain at one particle
    draw; returns per-particle values and per-component l2 errors."""
    rng = make_rng(seed, 0, 7)
    particles = problem.sample(problem.n_particles, rng)
    h_at = problem.h_at(particles)
    hbar = h_at.mean(axis=0)

    blocks = build_blocks(np.diag(1.0 / problem.eps), np.zeros(2), problem.h.p)
    coeffs = [[backward_recursion(blocks, problem.h, x)] for x in particles]
    mixt = Mixture([GaussianComponent.from_diagonal(x, problem.eps) for x in particles])
    field = assemble_gain(particles, mixt, coeffs, hbar)
    decomp = field.eval_many(particles)[:, :, 0]

    k_const = constant_gain(particles, h_at, hbar)
    const = np.broadcast_to(k_const[:, 0], (particles.shape[0], 2)).copy()
    kern = kernel_gain(
        particles, h_at, hbar, KernelGainConfig(bandwidth=bandwidth, iterations=iterations)
    )[:, :, 0]
    exact = problem.analytic_gain(particles)

    values = {"fpf_decomp": decomp, "fpf_const": const, "fpf_kernel": kern}
    errors = {
        name: [float(np.sqrt(np.sum((vals[:, j] - exact[:, j]) ** 2))) for j in range(2)]
        for name, vals in values.items()
    }
    return {"particles": particles, "values": values, "exact": exact, "errors": errors}


def run_trials(
    model,
    configs: Dict[str, FilterRunConfig],
    trials: int,
    seed: int,
    threads: int = 1,
) -> Dict[str, List[RunRecord]]:
    """trials x methods grid on shared truths; deterministic trial ordering."""
    t_values = {(c.T, c.dt) for c in configs.values()}
    if len(t_values) != 1:
        raise ConfigError("all methods must share T and dt (they share the truth)")
    (T, dt) = next(iter(t_values))
    n_steps = int(round(T / dt))
    x0 = next(iter(configs.values())).x0
    x0 = np.asarray(model.x0 if x0 is None else x0, dtype=float)

    def one_trial(trial: int):
        truth_obs = simulate_truth(model, n_steps, dt, x0, make_rng(seed, trial, 0))
        return {
            m: run_filter(model, m, cfg, seed, trial, truth_obs=truth_obs)
            for m, cfg in configs.items()
        }

    if threads <= 1 or trials == 1:
        per_trial = [one_trial(k) for k in range(trials)]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            per_trial = list(pool.map(one_trial, range(trials)))
    return {m: [per_trial[k][m] for k in range(trials)] for m in configs}


def dim_sweep_run(
    dims: Sequence[int],
    defaults: dict,
    seed: int,
    timing_steps: int = 20,
    overrides: Optional[dict] = None,
    mre_dims: Optional[Sequence[int]] = None,
) -> dict:
    """Per-dimension wall time (general dense-level solver) and MRE.

    The fitted slope is taken on the accumulated coefficient-build time
    (the quantity the complexity claim concerns); the full filter-loop
    time is reported alongside.  A small warm-up run primes the JIT so
    compilation never lands in the timings.
    """
    overrides = dict(overrides or {})
    rows = []
    timings = []
    build_timings = []
    mre_dims = list(dims) if mre_dims is None else list(mre_dims)

    def timed_run(d):
        model = build_cubic_sensor(d)
        cfg = make_run_config(defaults, "fpf_decomp", dict(overrides))
        cfg.T = timing_steps * cfg.dt
        cfg.force_generic = True
        return run_filter(model, "fpf_decomp", cfg, seed, trial=0)

    timed_run(2)  # JIT warm-up, discarded
    for d in dims:
        rec = timed_run(d)
        timings.append((d, rec.cpu_s))
        build_timings.append((d, rec.gain_build_s))
        rows.append(
            {
                "dim": d,
                "timing_s": rec.cpu_s,
                "gain_build_s": rec.gain_build_s,
                "steps_timed": timing_steps,
            }
        )
    slope = scaling_fit(build_timings) if len(build_timings) >= 3 else float("nan")
    mre_rows = []
    for d in mre_dims:
        model = build_cubic_sensor(d)
        cfg = make_run_config(defaults, "fpf_decomp", dict(overrides))
        rec = run_filter(model, "fpf_decomp", cfg, seed, trial=0)
        mre_rows.append({"dim": d, "mre": mre(rec), "n_particles": cfg.n_particles})
    return {
        "timing_rows": rows,
        "mre_rows": mre_rows,
        "slope": slope,
        "timings": timings,
        "build_timings": build_timings,
    }


def particle_search(
    d: int,
    defaults: dict,
    seed: int,
    target: float = 0.4,
    start: int = 5,
    cap: int = 1280,
    overrides: Optional[dict] = None,
) -> dict:
    """Smallest N_p with MRE <= target: double until a pass, then bisect."""
    overrides = dict(overrides or {})
    model = build_cubic_sensor(d)

    def mre_at(n: int) -> float:
        cfg = make_run_config(defaults, "fpf_decomp", dict(overrides))
        cfg.n_particles = n
        return mre(run_filter(model, "fpf_decomp", cfg, seed, trial=0))

    n = start
    val = mre_at(n)
    if val <= target:
        return {"dim": d, "required_np": n, "mre": val}
    lo = n
    while True:
        n *= 2
        if n > cap:
            return {"dim": d, "required_np": -1, "mre": val}
        val = mre_at(n)
        if val <= target:
            break
        lo = n
    hi, hi_val = n, val
    while hi - lo > max(1, lo // 8):
        mid = (lo + hi) // 2
        val = mre_at(mid)
        if val <= target:
            hi, hi_val = mid, val
        else:
            lo = mid
    return {"dim": d, "required_np": hi, "mre": hi_val}


# ---------------------------------------------------------------------------
# subcommands


def cmd_gain_compare(args) -> int:
    config = load_config(args.config)
    seed = args.seed if args.seed is not None else int(config.get("run", {}).get("seed", 1234))
    out_dir = Path(args.out or config.get("run", {}).get("out", "out"))
    params = dict(config.get("scenario", {}))
    gc_cfg = dict(config.get("gain_compare", {}))
    bandwidth = float(gc_cfg.get("bandwidth", 0.1))
    iterations = int(gc_cfg.get("iterations", 100))
    problem = build_scenario(ScenarioSpec(name="static_gain_mixture", params=params))[0]
    result = gain_compare_run(problem, seed, bandwidth, iterations)
    version = bench_version()
    particles = result["particles"]
    rows = []
    for name, vals in result["values"].items():
        for i in range(vals.shape[0]):
            for j in range(2):
                rows.append(
                    [i, j + 1, name, vals[i, j], result["exact"][i, j],
                     particles[i, 0], particles[i, 1],
                     "static_gain_mixture", seed, version]
                )
    write_csv(
        out_dir / "gain_compare.csv",
        ["particle_id", "component", "method", "value", "exact_value",
         "coord_1", "coord_2", "scenario", "seed", "version"],
        rows,
    )
    summary = [
        ["static_gain_mixture", name, j + 1, errs[j], seed, version]
        for name, errs in result["errors"].items()
        for j in range(2)
    ]
    write_csv(
        out_dir / "gain_summary.csv",
        ["scenario", "method", "component", "l2_error", "seed", "version"],
        summary,
    )
    for name, errs in result["errors"].items():
        print(f"{name}: l2 errors {errs[0]:.4f} / {errs[1]:.4f}")
    return 0


def cmd_filter_run(args) -> int:
    config = load_config(args.config)
    run_cfg = config.get("run", {})
    name = args.scenario or run_cfg.get("scenario")
    if not name:
        raise ConfigError("scenario required (flag --scenario or [run].scenario)")
    spec = ScenarioSpec(name=name, params=dict(config.get("scenario", {})))
    model, defaults = build_scenario(spec)
    if isinstance(model, StaticGainProblem):
        raise ConfigError("static_gain_mixture is not a filtering scenario; use gain-compare")
    methods = args.methods.split(",") if args.methods else run_cfg.get(
        "methods", ["fpf_decomp", "ekf", "pf"]
    )
    trials = args.trials if args.trials is not None else int(run_cfg.get("trials", 1))
    seed = args.seed if args.seed is not None else int(run_cfg.get("seed", 1234))
    threads = resolve_threads(args, config)
    out_dir = Path(args.out or run_cfg.get("out", "out"))
    opts = _run_options(config)
    np_over = _n_particles_overrides(config)
    configs = {}
    for m in methods:
        o = dict(opts)
        if m in np_over:
            o["n_particles"] = int(np_over[m])
        configs[m] = make_run_config(defaults, m, o)
    records = run_trials(model, configs, trials, seed, threads)
    version = bench_version()
    d = model.d
    out_cfg = config.get("output", {})
    save = out_cfg.get("save_trajectories", "first")
    stride = int(out_cfg.get("stride", max(1, int(round(configs[methods[0]].T / configs[methods[0]].dt)) // 500)))
    traj_rows = []
    for m in methods:
        for rec in records[m]:
            if save == "none" or (save == "first" and rec.trial != 0):
                continue
            for k in range(0, rec.times.shape[0], stride):
                traj_rows.append(
                    [rec.trial, k, rec.times[k]]
                    + [rec.truth[k, l] for l in range(d)]
                    + [rec.estimate[k, l] for l in range(d)]
                    + [m, model.name, seed, version]
                )
    write_csv(
        out_dir / "filter_run.csv",
        ["trial", "step", "t"]
        + [f"truth_{l + 1}" for l in range(d)]
        + [f"est_{l + 1}" for l in range(d)]
        + ["method", "scenario", "seed", "version"],
        traj_rows,
    )
    summary_rows = []
    for m in methods:
        recs = records[m]
        per_comp = armse_per_component(recs)
        summary_rows.append(
            [model.name, m, configs[m].n_particles if m != "ekf" else 0, trials, armse(recs)]
            + [per_comp[l] for l in range(d)]
            + [float(np.mean([r.cpu_s for r in recs])), seed, version]
        )
    write_csv(
        out_dir / "summary.csv",
        ["scenario", "method", "N_p", "M", "armse"]
        + [f"armse_{l + 1}" for l in range(d)]
        + ["cpu_s", "seed", "version"],
        summary_rows,
    )
    for row in summary_rows:
        print(f"{row[1]}: ARMSE={row[4]:.5f} cpu={row[5 + d]:.3f}s")
    return 0


def cmd_dim_sweep(args) -> int:
    config = load_config(args.config)
    run_cfg = config.get("run", {})
    seed = args.seed if args.seed is not None else int(run_cfg.get("seed", 1234))
    out_dir = Path(args.out or run_cfg.get("out", "out"))
    sweep = dict(config.get("sweep", {}))
    dims = [int(v) for v in sweep.get("dims", [1, 3, 5, 10, 20, 30, 50])]
    mre_dims = [int(v) for v in sweep.get("mre_dims", dims)]
    timing_steps = int(sweep.get("timing_steps", 20))
    defaults = scenario_defaults("cubic_sensor_d")
    overrides = _run_options(config)
    result = dim_sweep_run(dims, defaults, seed, timing_steps, overrides, mre_dims)
    version = bench_version()
    rows = [
        ["cubic_sensor_d", r["dim"], r["steps_timed"], r["timing_s"], r["gain_build_s"], seed, version]
        for r in result["timing_rows"]
    ]
    write_csv(
        out_dir / "dim_timing.csv",
        ["scenario", "dim", "steps_timed", "filter_loop_s", "gain_build_s", "seed", "version"],
        rows,
    )
    mrows = [
        ["cubic_sensor_d", r["dim"], r["n_particles"], r["mre"], seed, version]
        for r in result["mre_rows"]
    ]
    write_csv(
        out_dir / "dim_mre.csv",
        ["scenario", "dim", "N_p", "mre", "seed", "version"],
        mrows,
    )
    write_csv(
        out_dir / "sweep_summary.csv",
        ["scenario", "slope", "seed", "version"],
        [["cubic_sensor_d", result["slope"], seed, version]],
    )
    print(f"fitted log-log slope: {result['slope']:.3f}")
    if sweep.get("np_search", False):
        target = float(sweep.get("np_search_target", 0.4))
        srows = []
        for d in [int(v) for v in sweep.get("np_search_dims", dims)]:
            r = particle_search(d, defaults, seed, target=target, overrides=overrides)
            srows.append(["cubic_sensor_d", r["dim"], r["required_np"], r["mre"], target, seed, version])
            print(f"d={r['dim']}: N_p={r['required_np']} (MRE {r['mre']:.3f})")
        write_csv(
            out_dir / "np_search.csv",
            ["scenario", "dim", "required_np", "mre", "target", "seed", "version"],
            srows,
        )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bench", description="nonlinear-filtering benchmark harness")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in (
        ("gain-compare", cmd_gain_compare),
        ("filter-run", cmd_filter_run),
        ("dim-sweep", cmd_dim_sweep),
    ):
        sp = sub.add_parser(name)
        sp.add_argument("--config", default=None, help="TOML config file")
        sp.add_argument("--out", default=None, help="output directory")
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--threads", type=int, default=None)
        if name == "filter-run":
            sp.add_argument("--scenario", default=None)
            sp.add_argument("--methods", default=None, help="comma-separated method list")
            sp.add_argument("--trials", type=int, default=None)
        sp.set_defaults(fn=fn)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (ConfigError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except NUMERICAL_ERRORS as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
