"""Numerical experiments wiring operators, norms, and the solver together.

Each ``run_*`` function takes an ExperimentConfig and returns an
ExperimentReport with per-case rows, summary statistics, hard failures
(violated exact checks), and warnings (soft drift thresholds).  ``persist``
writes a deterministic set of artifacts: rerunning with the same config and
seed reproduces every output byte for byte, so no timestamps or wall-clock
readings are ever written to disk.

Constants the theory leaves implicit (equivalence-interval endpoints,
empirical lemma ratios) are measured outputs, reported and tracked for drift;
they are never pass/fail targets.
"""
from __future__ import annotations

import dataclasses
import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field as dataclass_field
from pathlib import Path

import numpy as np
from scipy.integrate import quad
from scipy.special import gamma as gamma_function

from .corpus import DEFAULT_SEED, band_limited_corpus
from .errors import DivergenceError
from .fields import GridSpec, RealField, SpaceParams, Trajectory, field_from_function
from . import operators as ops
from .norms import (
    besov_sum_norm,
    caloric_minus1_norm,
    carleson_l1_functional,
    morrey_norm,
    q_norm_semigroup,
    x_norm,
    x_k_norm,
)
from .solver import (
    SolverConfig,
    TimeGrid,
    duhamel_bilinear,
    linear_flow,
    nonlinearity,
    picard_solve,
    reference_solve,
    scaling_transform,
)
from .sweep import BoxSweepConfig, trajectory_weights

UNDEFINED = "undefined"


def thread_budget() -> int:
    """Worker cap from QSQG_THREADS (>=1); results never depend on it."""
    raw = os.environ.get("QSQG_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _map_cases(fn, items):
    n = thread_budget()
    if n > 1:
        with ThreadPoolExecutor(max_workers=n) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


@dataclass(frozen=True)
class ExperimentConfig:
    params: SpaceParams = SpaceParams(0.25, 0.75)
    grid: GridSpec = GridSpec(64, 2 * np.pi)
    sweep: BoxSweepConfig = BoxSweepConfig()
    horizon: float = 1.0
    seed: int = DEFAULT_SEED
    corpus_size: int = 50
    solver_nodes: int = 32

    def solver_config(self) -> SolverConfig:
        return SolverConfig(
            TimeGrid(self.horizon, self.solver_nodes), sweep=self.sweep
        )

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["threads_cap"] = thread_budget()
        return d


@dataclass
class ExperimentReport:
    name: str
    config: ExperimentConfig
    columns: tuple[str, ...]
    rows: list[tuple]
    summary: dict
    plot_data: dict[str, list[tuple[float, float]]] = dataclass_field(default_factory=dict)
    hard_failures: list[str] = dataclass_field(default_factory=list)
    warnings: list[str] = dataclass_field(default_factory=list)
    wall_seconds: float = 0.0

    @property
    def passed(self) -> bool:
        return not self.hard_failures


def _fmt(x) -> str:
    if x is None:
        return UNDEFINED
    if isinstance(x, bool):
        return str(x).lower()
    if isinstance(x, float):
        return format(x, ".17g")
    return str(x)


def persist(report: ExperimentReport, out_dir: "str | Path") -> Path:
    """Write config.json, rows.csv, summary.txt, and plots/*.csv under
    out_dir/<experiment name>; deterministic bytes for a given config."""
    base = Path(out_dir) / report.name
    base.mkdir(parents=True, exist_ok=True)
    (base / "config.json").write_text(
        json.dumps(report.config.to_dict(), indent=2, sort_keys=True) + "\n"
    )
    lines = [",".join(report.columns)]
    lines += [",".join(_fmt(v) for v in row) for row in report.rows]
    (base / "rows.csv").write_text("\n".join(lines) + "\n")

    out = [f"experiment: {report.name}"]
    for key in report.summary:
        out.append(f"{key} = {_fmt(report.summary[key])}")
    for w in report.warnings:
        out.append(f"warning: {w}")
    for h in report.hard_failures:
        out.append(f"FAILED: {h}")
    out.append(f"result: {'pass' if report.passed else 'FAIL'}")
    (base / "summary.txt").write_text("\n".join(out) + "\n")

    plot_dir = base / "plots"
    plot_dir.mkdir(exist_ok=True)
    for key, pairs in report.plot_data.items():
        rows = ["x,y"] + [f"{_fmt(float(a))},{_fmt(float(b))}" for a, b in pairs]
        (plot_dir / f"{key}.csv").write_text("\n".join(rows) + "\n")
    return base


def _ratio(num: float, den: float) -> "float | None":
    return num / den if den > 0 else None


def _drift(fine: float, coarse: float) -> "float | None":
    if coarse > 0:
        return abs(fine - coarse) / coarse
    return None


# -- experiment 1: Riesz transform boundedness ---------------------------------

def run_riesz_boundedness(cfg: ExperimentConfig, fields=None) -> ExperimentReport:
    """Semigroup-characterization norm of R_j f against that of f over the
    corpus, at the base grid and its refinement; drift of the max ratio is a
    soft threshold.  ``fields`` overrides the corpus (same list rendered at
    both resolutions is then the caller's job, so it is used verbatim)."""
    t0 = time.monotonic()
    rows = []
    max_ratio: dict[tuple[int, int], float] = {}
    grids = [cfg.grid, GridSpec(2 * cfg.grid.n, cfg.grid.length)]
    band = cfg.grid.n // 6
    for grid in grids:
        if fields is not None:
            # explicit fields apply to the base grid only; skip the refinement
            corpus = list(fields) if grid is cfg.grid else []
        else:
            corpus = band_limited_corpus(grid, cfg.corpus_size, band, cfg.seed)

        def case(item):
            fid, f = item
            norm_f = q_norm_semigroup(f, cfg.params, cfg.sweep).value
            out = []
            for j in (1, 2):
                rj = ops.riesz_transform(f, j)
                norm_rj = q_norm_semigroup(rj, cfg.params, cfg.sweep).value
                out.append((grid.n, fid, j, norm_f, norm_rj, _ratio(norm_rj, norm_f)))
            return out

        for triple in _map_cases(case, list(enumerate(corpus))):
            rows.extend(triple)
            for row in triple:
                n_, _, j, _, _, ratio = row
                if ratio is not None:
                    key = (n_, j)
                    max_ratio[key] = max(max_ratio.get(key, 0.0), ratio)

    summary: dict = {"corpus_size": cfg.corpus_size, "band": band, "seed": cfg.seed}
    hard, warn = [], []
    for j in (1, 2):
        base = max_ratio.get((cfg.grid.n, j))
        fine = max_ratio.get((2 * cfg.grid.n, j))
        summary[f"max_ratio_j{j}_N{cfg.grid.n}"] = base
        summary[f"max_ratio_j{j}_N{2 * cfg.grid.n}"] = fine
        if base is None or fine is None:
            summary[f"drift_j{j}"] = None
            continue
        if not (math.isfinite(base) and math.isfinite(fine)):
            hard.append(f"riesz ratio not finite for j={j}")
            continue
        growth = max(fine / base - 1.0, 0.0)
        summary[f"drift_j{j}"] = growth
        if growth >= 0.10:
            warn.append(f"max ratio for j={j} grew {growth:.1%} under refinement")

    plot = {
        f"ratio_j{j}": [
            (float(fid), float(r))
            for (n_, fid, jj, _, _, r) in rows
            if jj == j and n_ == cfg.grid.n and r is not None
        ]
        for j in (1, 2)
    }
    return ExperimentReport(
        "riesz", cfg,
        ("grid_n", "field_id", "component", "norm_f", "norm_riesz_f", "ratio"),
        rows, summary, plot, hard, warn, time.monotonic() - t0,
    )


# -- experiment 2: space identity and norm equivalences -------------------------

IDENTITY_PAIRS = ((0.25, 0.75), (0.3, 0.8), (0.4, 0.7), (0.45, 0.9), (0.2, 0.85))


def gamma_constant_quadrature(params: SpaceParams) -> tuple[float, float]:
    """The lifting constant int_0^inf u^(p-1) e^(-2u) du, p = (a-b+3)/(2b),
    by adaptive quadrature, and its closed form Gamma(p) / 2^p."""
    p = (params.alpha - params.beta + 3) / (2 * params.beta)
    value, _ = quad(lambda u: u ** (p - 1) * np.exp(-2 * u), 0, np.inf)
    closed = float(gamma_function(p)) / 2.0 ** p
    return value, closed


def run_space_identity(cfg: ExperimentConfig) -> ExperimentReport:
    """(a) quadrature vs closed form of the lifting constant on five
    admissible pairs (hard at 1e-8); (b) equivalence interval between the
    cube-oscillation norm of the lifted field and the semigroup norm over the
    corpus at N and 2N (soft: width <= 20x, drift < 15%)."""
    t0 = time.monotonic()
    rows = []
    hard, warn = [], []
    summary: dict = {"seed": cfg.seed}

    for a, b in IDENTITY_PAIRS:
        pair = SpaceParams(a, b)
        value, closed = gamma_constant_quadrature(pair)
        err = abs(value - closed)
        rows.append(("constant", a, b, value, closed, err))
        if err > 1e-8:
            hard.append(f"lifting constant quadrature off by {err:.2e} at ({a},{b})")
    summary["constant_default_pair"] = gamma_constant_quadrature(cfg.params)[1]

    a, b = cfg.params.alpha, cfg.params.beta
    lift = (a - b + 1) / 2
    morrey_index = 2 - 2 * (a + b - 1)
    band = cfg.grid.n // 6
    intervals = {}
    for grid in (cfg.grid, GridSpec(2 * cfg.grid.n, cfg.grid.length)):
        corpus = band_limited_corpus(grid, cfg.corpus_size, band, cfg.seed)

        def case(item):
            fid, f = item
            lifted = ops.fractional_laplacian(f, lift)
            m = morrey_norm(lifted, 2, morrey_index, cfg.sweep).value
            q = q_norm_semigroup(f, cfg.params, cfg.sweep).value
            return (grid.n, fid, m, q, _ratio(m, q))

        res = _map_cases(case, list(enumerate(corpus)))
        rows.extend(("equivalence",) + r for r in res)
        ratios = [r[-1] for r in res if r[-1] is not None]
        intervals[grid.n] = (min(ratios), max(ratios)) if ratios else (None, None)

    for n_, (lo, hi) in intervals.items():
        summary[f"ratio_lo_N{n_}"] = lo
        summary[f"ratio_hi_N{n_}"] = hi
        if lo and hi:
            summary[f"ratio_width_N{n_}"] = hi / lo
            if hi / lo > 20:
               warn.append(f"equivalence interval wider than 20x at N={n_}")
    lo0, hi0 = intervals[cfg.grid.n]
    lo1, hi1 = intervals[2 * cfg.grid.n]
    if all(v is not None for v in (lo0, hi0, lo1, hi1)):
        drift = max(abs(lo1 - lo0) / lo0, abs(hi1 - hi0) / hi0)
        summary["interval_drift"] = drift
        if drift >= 0.15:
            warn.append(f"equivalence interval drifted {drift:.1%} under refinement")

    plot = {"equivalence_ratio": [
        (float(r[2]), float(r[5])) for r in rows
        if r[0] == "equivalence" and r[1] == cfg.grid.n and r[5] is not None
    ]}
    return ExperimentReport(
        "identity", cfg,
        ("case", "a_or_n", "b_or_id", "value_or_morrey", "closed_or_semigroup", "err_or_ratio"),
        rows, summary, plot, hard, warn, time.monotonic() - t0,
    )


# -- experiment 3: scaling invariance -------------------------------------------

def deepest_sweep(grid: GridSpec, like: BoxSweepConfig, cap: int = 5) -> BoxSweepConfig:
    """Widest dyadic radius ladder the grid admits, up to ``cap`` radii."""
    m = 3
    while m < cap and grid.n % 2 ** (m + 2) == 0:
        m += 1
    return BoxSweepConfig(m, like.time_nodes, like.time_ratio)


def run_scaling_invariance(cfg: ExperimentConfig) -> ExperimentReport:
    """Data-norm invariance under the critical rescaling for lam in {2, 4},
    with wrong-exponent (lam^1) control rows that must break the symmetry.
    Corpus band N/8 - 1 keeps lam = 4 below Nyquist.  The sweep is deepened
    to the grid's limit so the attaining box of a rescaled field stays
    inside the scanned radius range for lam = 2."""
    t0 = time.monotonic()
    band = max(2, cfg.grid.n // 8 - 1)
    corpus = band_limited_corpus(cfg.grid, cfg.corpus_size, band, cfg.seed)
    sweep = deepest_sweep(cfg.grid, cfg.sweep)
    b = cfg.params.beta
    rows = []

    def case(item):
        fid, f = item
        out = []
        base = caloric_minus1_norm(f, cfg.params, sweep).value
        identity = caloric_minus1_norm(
            scaling_transform(f, 1, cfg.params), cfg.params, sweep
        ).value
        out.append((fid, 1, "critical", base, identity, _ratio(identity, base)))
        for lam in (2, 4):
            proper = scaling_transform(f, lam, cfg.params)
            control = RealField(f.grid, proper.values * float(lam) ** (2 - 2 * b))
            for kind, g in (("critical", proper), ("control", control)):
                val = caloric_minus1_norm(g, cfg.params, sweep).value
                out.append((fid, lam, kind, base, val, _ratio(val, base)))
        return out

    for triple in _map_cases(case, list(enumerate(corpus))):
        rows.extend(triple)

    lo, hi = 0.8, 1.25
    crit2 = [r[5] for r in rows if r[2] == "critical" and r[1] == 2 and r[5] is not None]
    ctrl = [r[5] for r in rows if r[2] == "control" and r[1] == 4 and r[5] is not None]
    in_band = sum(lo <= r <= hi for r in crit2) / len(crit2) if crit2 else 0.0
    out_band = sum(not lo <= r <= hi for r in ctrl) / len(ctrl) if ctrl else 0.0

    hard, warn = [], []
    summary = {
        "corpus_size": cfg.corpus_size, "band": band, "seed": cfg.seed,
        "fraction_critical_lam2_in_band": in_band,
        "fraction_control_outside_band": out_band,
    }
    if in_band < 0.9:
        hard.append(f"only {in_band:.0%} of lam=2 critical ratios inside [{lo},{hi}]")
    if out_band < 0.9:
        hard.append(f"only {out_band:.0%} of control ratios outside [{lo},{hi}]")
    if any(r[1] == 1 and r[5] != 1.0 for r in rows):
        hard.append("lam=1 rescaling did not reproduce the data norm exactly")

    plot = {"critical_ratio_lam2": [(float(r[0]), float(r[5])) for r in rows
                                    if r[2] == "critical" and r[1] == 2 and r[5] is not None]}
    return ExperimentReport(
        "scaling", cfg,
        ("field_id", "lam", "kind", "norm_f", "norm_scaled", "ratio"),
        rows, summary, plot, hard, warn, time.monotonic() - t0,
    )


# -- experiment 4: well-posedness sweep ------------------------------------------

def wellposedness_data(grid: GridSpec) -> RealField:
    return field_from_function(grid, lambda x1, x2: np.sin(x1) + np.cos(2 * x2))


def run_wellposedness_sweep(cfg: ExperimentConfig) -> ExperimentReport:
    """Picard iteration across a geometric amplitude ladder; per amplitude the
    contraction ratio, the fixed-point residual, and the node-wise agreement
    with the reference integrator.  Non-convergence and blow-up are recorded
    as data, not errors."""
    t0 = time.monotonic()
    shape = wellposedness_data(cfg.grid)
    solver_cfg = cfg.solver_config()
    epsilons = [10.0 ** k for k in range(-4, 2)]
    rows = []
    largest = None
    for eps in epsilons:
        data = eps * shape
        data_norm = caloric_minus1_norm(data, cfg.params, cfg.sweep).value
        converged = False
        iterations = 0
        contraction = None
        residual = None
        ref_err = None
        status = "ok"
        try:
            traj, rep = picard_solve(data, cfg.params, solver_cfg)
            converged, iterations = rep.converged, rep.iterations
            contraction = rep.contraction_ratio if math.isfinite(rep.contraction_ratio) else None
            base = linear_flow(data, solver_cfg.timegrid, cfg.params)
            resid_traj = traj - (base + duhamel_bilinear(traj, traj, cfg.params))
            residual = x_norm(resid_traj, cfg.params, cfg.sweep).value
            if converged:
                largest = eps if largest is None else max(largest, eps)
                ref = reference_solve(data, cfg.params, solver_cfg)
                errs = [
                    np.abs(p.values - r.values).max() / max(np.abs(r.values).max(), 1e-300)
                    for p, r in zip(traj.snapshots, ref.snapshots)
                ]
                ref_err = float(max(errs))
        except DivergenceError as exc:
            status = f"diverged(iteration={exc.iteration})"
        rows.append((eps, data_norm, converged, iterations, contraction, residual, ref_err, status))

    hard, warn = [], []
    summary: dict = {"largest_converging_eps": largest}
    tiny = [r for r in rows if r[0] <= 1e-3]
    if not any(r[2] for r in tiny):
        hard.append("no amplitude <= 1e-3 converged")
    # quasi-monotonicity of the contraction ratio along the ladder
    conv = [(r[0], r[4]) for r in rows if r[2] and r[4] is not None]
    for (e1, c1), (e2, c2) in zip(conv, conv[1:]):
        if c1 > c2 + 0.1:
            warn.append(f"contraction ratio fell from {c1:.3g} at eps={e1:g} "
                        f"to {c2:.3g} at eps={e2:g}")
    plot = {"contraction_vs_eps": [(r[0], r[4]) for r in rows if r[4] is not None]}
    return ExperimentReport(
        "wellposed", cfg,
        ("epsilon", "data_norm", "converged", "iterations",
         "contraction_ratio", "residual", "reference_rel_err", "status"),
        rows, summary, plot, hard, warn, time.monotonic() - t0,
    )


# -- experiment 5: higher-order regularity ----------------------------------------

def run_regularity_decay(cfg: ExperimentConfig) -> ExperimentReport:
    """Derivative-weighted solution norms k = 0, 1, 2 of a converged small
    solution (hard: finite; soft: growth factor per extra derivative < 50),
    plus the closed-form single-mode block check (hard at 1e-3)."""
    t0 = time.monotonic()
    rows = []
    hard, warn = [], []

    eps = 1e-3
    data = eps * wellposedness_data(cfg.grid)
    traj, rep = picard_solve(data, cfg.params, cfg.solver_config())
    if not rep.converged:
        hard.append("picard did not converge on the eps=1e-3 data")
    values = []
    for k in (0, 1, 2):
        report = x_k_norm(traj, cfg.params, k, cfg.sweep)
        growth = report.value / values[-1] if values and values[-1] > 0 else None
        values.append(report.value)
        rows.append(("solution", k, report.value, report.parts["besov"],
                     report.parts["carleson"], growth))
        if not math.isfinite(report.value):
            hard.append(f"x_k norm not finite for k={k}")
        if growth is not None and growth >= 50:
            warn.append(f"norm grew by {growth:.3g}x from k={k - 1} to k={k}")

    single = field_from_function(cfg.grid, lambda x1, x2: np.sin(x1))
    caloric = linear_flow(single, TimeGrid(cfg.horizon, cfg.solver_nodes), cfg.params)
    report = x_k_norm(caloric, cfg.params, 1, cfg.sweep)
    target = float(np.max(caloric.times * np.exp(-caloric.times)))
    err = abs(report.parts["besov"] - target)
    rows.append(("single_mode_k1", 1, report.value, report.parts["besov"], target, err))
    if err > 1e-3:
        hard.append(f"single-mode block part off closed form by {err:.2e}")

    summary = {
        "x_k_values": [float(v) for v in values],
        "single_mode_target": target,
        "single_mode_err": err,
    }
    plot = {"xk_vs_k": [(float(k), float(v)) for k, v in enumerate(values)]}
    return ExperimentReport(
        "regularity", cfg,
        ("case", "k", "value", "besov_part", "carleson_or_target", "growth_or_err"),
        rows, summary, plot, hard, warn, time.monotonic() - t0,
    )


# -- experiment 6: lemma-level inequality checks -----------------------------------

def _random_trajectories(cfg: ExperimentConfig, timegrid: TimeGrid, count: int = 20):
    """Smooth deterministic test trajectories g1 phi(t) + g2 psi(t)."""
    corpus = band_limited_corpus(cfg.grid, 2 * count, cfg.grid.n // 6, cfg.seed + 1)
    t = timegrid.times
    T = timegrid.horizon
    out = []
    for i in range(count):
        g1, g2 = corpus[2 * i].values, corpus[2 * i + 1].values
        snaps = tuple(
            RealField(cfg.grid, g1 / (1.0 + 3.0 * s / T) + g2 * (s / T) * np.exp(-s / T))
            for s in t
        )
        out.append(Trajectory(t, snaps))
    return out


def _l2_sq(spec: np.ndarray, grid: GridSpec) -> float:
    """Squared L2 norm from an unnormalized FFT array (Parseval)."""
    return float((np.abs(spec) ** 2).sum()) * grid.cell_area ** 2 / grid.length ** 2


def _dissipative_memory_ratio(traj: Trajectory, params: SpaceParams) -> float:
    """Weighted-in-time L2 ratio of A(t) = int_0^t e^(-(t-s)(-Lap)^b)
    (-Lap)^b f(s) ds against f itself, both with weight t^(-a/b)."""
    grid = traj.grid
    a, b = params.alpha, params.beta
    lam = ops.dissipation_symbol(grid, 2 * b)
    nodes = np.concatenate([[0.0], traj.times])
    specs = [np.fft.fft2(s.values) for s in traj.snapshots]
    # memory term per node, exact per mode with the density frozen per cell
    weights, _ = trajectory_weights(traj.times, traj.times[-1], a / b)
    lhs = rhs = 0.0
    for m in range(1, len(nodes)):
        t = nodes[m]
        acc = np.zeros_like(specs[0])
        decay_lo = np.exp(-t * lam)
        for i in range(m):
            decay_hi = np.exp(-(t - nodes[i + 1]) * lam)
            acc += specs[max(i - 1, 0)] * (decay_hi - decay_lo)
            decay_lo = decay_hi
        w = weights[m - 1]
        lhs += w * _l2_sq(acc, grid)
        rhs += w * _l2_sq(specs[m - 1], grid)
    return lhs / rhs if rhs > 0 else float("nan")


def _memory_smoothing_ratio(traj: Trajectory, params: SpaceParams, k: int) -> tuple[float, float, float]:
    """Empirical constant in the smoothing bound for the time-cumulative
    density: weighted L2 of t^(k/2) (-Lap)^((k b + 1)/2) e^(-(t/2)(-Lap)^b)
    int_0^t N ds against the box functional times the plain weighted mass."""
    grid = traj.grid
    a, b = params.alpha, params.beta
    lam = ops.dissipation_symbol(grid, 2 * b)
    smooth = ops.dissipation_symbol(grid, k * b + 1)
    nodes = np.concatenate([[0.0], traj.times])
    specs = [np.fft.fft2(s.values) for s in traj.snapshots]
    weights, _ = trajectory_weights(traj.times, traj.times[-1], a / b)

    lhs = 0.0
    mass = 0.0
    cum = np.zeros_like(specs[0])
    for m in range(1, len(nodes)):
        t = nodes[m]
        cum = cum + specs[m - 1] * (nodes[m] - nodes[m - 1])
        half = 0.5 * t if k > 0 else t
        op = smooth * np.exp(-half * lam)
        lhs += weights[m - 1] * t ** k * _l2_sq(op * cum, grid)
        mass += weights[m - 1] * float(np.abs(traj.snapshots[m - 1].values).sum()) * grid.cell_area
    box = carleson_l1_functional(traj, params).value
    rhs = box * mass
    return (lhs / rhs if rhs > 0 else float("nan")), box, mass


def run_lemma_checks(cfg: ExperimentConfig) -> ExperimentReport:
    """(a) dissipative-memory L2 ratios over random smooth trajectories, with
    drift under time refinement (hard < 10%); (b) empirical smoothing
    constants b(k), k in {0,1} (measured outputs); (c) kernel decay maxima at
    N and 2N (soft drift < 20% here, hard in the acceptance suite)."""
    t0 = time.monotonic()
    rows = []
    hard, warn = [], []
    tg = TimeGrid(cfg.horizon, cfg.solver_nodes)
    tg_fine = tg.refined(2)

    ratios, drifts = [], []
    coarse_trajs = _random_trajectories(cfg, tg)
    fine_trajs = _random_trajectories(cfg, tg_fine)
    for i, (traj, fine) in enumerate(zip(coarse_trajs, fine_trajs)):
        r_coarse = _dissipative_memory_ratio(traj, cfg.params)
        r_fine = _dissipative_memory_ratio(fine, cfg.params)
        drift = abs(r_fine - r_coarse) / r_coarse
        ratios.append(r_fine)
        drifts.append(drift)
        rows.append(("memory_ratio", i, r_coarse, r_fine, drift, None))
    if max(drifts) >= 0.10:
        hard.append(f"memory ratio drifted {max(drifts):.1%} under time refinement")

    bks = {}
    bk_drifts = {}
    for k in (0, 1):
        vals, deltas = [], []
        for i, (traj, fine) in enumerate(zip(coarse_trajs, fine_trajs)):
            bk, box, mass = _memory_smoothing_ratio(traj, cfg.params, k)
            bk_fine, _, _ = _memory_smoothing_ratio(fine, cfg.params, k)
            vals.append(bk_fine)
            deltas.append(abs(bk_fine - bk) / bk)
            rows.append(("smoothing_bk", i, k, bk, bk_fine, deltas[-1]))
        bks[k] = max(vals)
        bk_drifts[k] = max(deltas)
        if not all(math.isfinite(v) for v in vals):
            hard.append(f"smoothing constant b({k}) not finite")
        if bk_drifts[k] >= 0.10:
            hard.append(
                f"smoothing constant b({k}) drifted {bk_drifts[k]:.1%} "
                "under time refinement"
            )

    decay_rows, decay_hard = kernel_decay_study(cfg)
    rows.extend(decay_rows)
    for name, drift in decay_hard:
        if drift >= 0.20:
            warn.append(f"kernel decay maximum {name} drifted {drift:.1%}")

    summary = {
        "memory_ratio_max": max(ratios),
        "memory_ratio_drift_max": max(drifts),
        "empirical_b0": bks[0],
        "empirical_b1": bks[1],
        "b0_drift_max": bk_drifts[0],
        "b1_drift_max": bk_drifts[1],
    }
    plot = {"memory_ratios": [(float(i), float(r)) for i, r in enumerate(ratios)]}
    return ExperimentReport(
        "lemmas", cfg,
        ("case", "index", "v1", "v2", "v3", "v4"),
        rows, summary, plot, hard, warn, time.monotonic() - t0,
    )


def kernel_decay_study(cfg: ExperimentConfig, t: float = 1.0):
    """Max over the grid of (t^(1/(2b)) + |x|)^3 |grad K_t| and of
    (1 + |x|)^(2+|a|) |d^a K_j| for |a| in {0, 1}, at N and 2N."""
    rows = []
    drifts = []
    maxima: dict[str, dict[int, float]] = {}
    for grid in (cfg.grid, GridSpec(2 * cfg.grid.n, cfg.grid.length)):
        d = grid.signed_coords
        radius = np.hypot(*np.meshgrid(d, d, indexing="ij"))
        heat, grad, riesz_kernel = ops.kernel_fields(t, cfg.params, grid)
        shift = t ** (1 / (2 * cfg.params.beta))
        grad_mag = np.hypot(grad[0].values, grad[1].values)
        entries = {"heat_grad": float(((shift + radius) ** 3 * grad_mag).max())}
        entries["riesz_kernel"] = float(((1 + radius) ** 2 * np.abs(riesz_kernel.values)).max())
        for axis in (1, 2):
            dk = ops.partial_derivative(riesz_kernel, axis)
            entries[f"riesz_kernel_d{axis}"] = float(
                ((1 + radius) ** 3 * np.abs(dk.values)).max()
            )
        for name, value in entries.items():
            maxima.setdefault(name, {})[grid.n] = value
            rows.append(("kernel_decay", name, grid.n, value, None, None))
    for name, by_n in maxima.items():
        coarse, fine = by_n[cfg.grid.n], by_n[2 * cfg.grid.n]
        drift = abs(fine - coarse) / coarse
        rows.append(("kernel_drift", name, None, coarse, fine, drift))
        drifts.append((name, drift))
    return rows, drifts


RUNNERS = {
    "riesz": run_riesz_boundedness,
    "identity": run_space_identity,
    "scaling": run_scaling_invariance,
    "wellposed": run_wellposedness_sweep,
    "regularity": run_regularity_decay,
    "lemmas": run_lemma_checks,
}
