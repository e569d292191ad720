import json
import math

import numpy as np
import pytest

from qsqg import (
    DivergenceError,
    GridSpec,
    RealField,
    SpaceParams,
    Trajectory,
    band_limited_corpus,
    besov_sup_norm,
    caloric_minus1_norm,
    dealias_field,
    duhamel_bilinear,
    field_from_function,
    linear_flow,
    load_trajectory,
    nonlinear_density,
    nonlinearity,
    partial_derivative,
    picard_solve,
    reference_solve,
    save_trajectory,
    scale_trajectory,
    scaling_transform,
    sqg_velocity,
    x_norm,
)
from qsqg.solver import PicardReport, SolverConfig, TimeGrid

L = 2 * np.pi


class TestTimeGrid:
    def test_graded_nodes(self):
        tg = TimeGrid(1.0, 16, grading=2.0)
        t = tg.times
        assert len(t) == 16
        assert t[-1] == 1.0
        np.testing.assert_allclose(t, (np.arange(1, 17) / 16.0) ** 2)

    def test_refinement_nests(self):
        tg = TimeGrid(2.0, 16)
        fine = tg.refined(2)
        np.testing.assert_allclose(fine.times[1::2], tg.times)

    def test_validation(self):
        with pytest.raises(ValueError):
            TimeGrid(0.0, 16)
        with pytest.raises(ValueError):
            TimeGrid(1.0, 8)
        with pytest.raises(ValueError):
            TimeGrid(1.0, 16, grading=0.5)


class TestNonlinearity:
    def test_two_mode_closed_form(self, grid32):
        theta = field_from_function(grid32, lambda x1, x2: np.sin(x1) + np.cos(2 * x2))
        got = nonlinearity(theta)
        want = field_from_function(grid32, lambda x1, x2: np.cos(x1) * np.sin(2 * x2))
        assert np.abs(got.values - want.values).max() <= 1e-12

    def test_mode_dictionary_convolution_oracle(self):
        grid = GridSpec(16, L)
        amps = {(1, 0): 0.8 - 0.3j, (0, 2): 0.1 + 0.55j, (2, 1): -0.25 + 0.4j}
        modes = {}
        for k, a in amps.items():
            modes[k] = a
            modes[(-k[0], -k[1])] = np.conj(a)

        x = grid.coords
        x1, x2 = np.meshgrid(x, x, indexing="ij")

        def render(coeffs):
            out = np.zeros((16, 16), dtype=complex)
            for (k1, k2), a in coeffs.items():
                out += a * np.exp(1j * (k1 * x1 + k2 * x2))
            return out.real

        theta = RealField(grid, render(modes))

        def riesz_hat(coeffs, axis):
            out = {}
            for (k1, k2), a in coeffs.items():
                norm = math.hypot(k1, k2)
                out[(k1, k2)] = 1j * (k1 if axis == 1 else k2) / norm * a
            return out

        def convolve(fa, fb):
            out = {}
            for ka, a in fa.items():
                for kb, b in fb.items():
                    key = (ka[0] + kb[0], ka[1] + kb[1])
                    out[key] = out.get(key, 0.0) + a * b
            return out

        flux1 = convolve(modes, riesz_hat(modes, 2))  # theta * R2 theta
        flux2 = convolve(modes, riesz_hat(modes, 1))  # theta * R1 theta
        density = {}
        for (k1, k2), a in flux1.items():
            density[(k1, k2)] = density.get((k1, k2), 0.0) + 1j * k1 * a
        for (k1, k2), a in flux2.items():
            density[(k1, k2)] = density.get((k1, k2), 0.0) - 1j * k2 * a

        oracle = render(density)
        got = nonlinearity(theta)
        assert np.abs(got.values - oracle).max() <= 1e-12

    def test_equivalent_to_advective_form(self, grid32):
        theta = dealias_field(
            field_from_function(
                grid32, lambda x1, x2: np.sin(x1) * np.cos(2 * x2) + 0.5 * np.cos(3 * x1 + x2)
            )
        )
        u1, u2 = sqg_velocity(theta)
        advective = RealField(
            grid32,
            -(u1.values * partial_derivative(theta, 1).values
              + u2.values * partial_derivative(theta, 2).values),
        )
        got = nonlinearity(theta)
        assert np.abs(got.values - advective.values).max() <= 1e-12

    def test_mean_zero_to_roundoff(self, smooth32):
        # divergence form kills the zero mode; the inverse transform then
        # leaves the physical mean at roundoff scale, not bitwise zero
        out = nonlinearity(smooth32)
        assert abs(out.values.mean()) <= 1e-15 * max(1.0, out.max_abs())

    def test_requires_mean_zero_input(self, grid16):
        lump = RealField(grid16, np.ones((16, 16)))
        with pytest.raises(ValueError):
            nonlinearity(lump)


class TestDuhamel:
    def test_stationary_density_closed_form(self, grid32, params):
        tg = TimeGrid(1.0, 24)
        amp = 0.37
        dens = field_from_function(grid32, lambda x1, x2: amp * np.sin(x1))
        theta0 = field_from_function(grid32, lambda x1, x2: np.sin(x1))
        base = linear_flow(theta0, tg, params)
        out = duhamel_bilinear(base, base, params, density_fn=lambda u, v: dens)
        x1 = grid32.coords[:, None]
        for t, snap in zip(out.times, out.snapshots):
            target = amp * (1 - np.exp(-t)) * np.sin(x1) * np.ones((1, grid32.n))
            assert np.abs(snap.values - target).max() <= 1e-12

    def test_bilinearity(self, grid32, params):
        tg = TimeGrid(0.5, 16)
        f = field_from_function(grid32, lambda x1, x2: np.sin(x1))
        g = field_from_function(grid32, lambda x1, x2: np.cos(2 * x2))
        U, V = linear_flow(f, tg, params), linear_flow(g, tg, params)
        W = linear_flow(f + g, tg, params)
        left = duhamel_bilinear(W, V, params)
        split = duhamel_bilinear(U, V, params) + duhamel_bilinear(V, V, params)
        err = max(
            np.abs(a.values - b.values).max()
            for a, b in zip(left.snapshots, split.snapshots)
        )
        assert err <= 1e-12


class TestPicard:
    def test_small_data_contract(self, grid32, params):
        theta0 = 1e-3 * field_from_function(
            grid32, lambda x1, x2: np.sin(x1) + np.cos(2 * x2)
        )
        config = SolverConfig(TimeGrid(1.0, 24))
        traj, report = picard_solve(theta0, params, config)
        assert report.converged
        assert report.contraction_ratio < 0.5
        base = linear_flow(theta0, config.timegrid, params)
        residual = x_norm(
            traj - (base + duhamel_bilinear(traj, traj, params)), params
        ).value
        norm = x_norm(traj, params).value
        assert residual <= 2 * config.picard_tol * (1 + norm)

    def test_report_csv(self, grid32, params):
        theta0 = 1e-3 * field_from_function(grid32, lambda x1, x2: np.sin(x1))
        _, report = picard_solve(theta0, params, SolverConfig(TimeGrid(1.0, 16)))
        lines = report.to_csv().strip().splitlines()
        assert lines[0] == "iteration,norm,increment"
        # one row per iterate: the linear flow (empty increment) plus each sweep
        assert len(lines) == len(report.iterate_norms) + 1
        assert lines[1].endswith(",")

    def test_blowup_raises_divergence_error(self, grid16, params):
        theta0 = 1e6 * field_from_function(
            grid16, lambda x1, x2: np.sin(x1) + np.cos(2 * x2)
        )
        with pytest.raises(DivergenceError) as info:
            with np.errstate(over="ignore", invalid="ignore"):
                picard_solve(theta0, params, SolverConfig(TimeGrid(1.0, 16)))
        assert info.value.iteration is not None


class TestReference:
    def test_linear_switch_matches_linear_flow(self, grid32, params):
        theta0 = field_from_function(grid32, lambda x1, x2: np.sin(x1) + np.cos(2 * x2))
        config = SolverConfig(TimeGrid(1.0, 16))
        ref = reference_solve(theta0, params, config, include_nonlinearity=False)
        lin = linear_flow(theta0, config.timegrid, params)
        err = max(
            np.abs(a.values - b.values).max()
            for a, b in zip(ref.snapshots, lin.snapshots)
        )
        assert err <= 1e-13

    def test_self_convergence_order(self, params):
        grid = GridSpec(32, L)
        theta0 = 0.05 * field_from_function(grid, lambda x1, x2: np.sin(x1) + np.cos(2 * x2))
        tg = TimeGrid(0.5, 16)
        golden = reference_solve(theta0, params, SolverConfig(tg, reference_refine=16))
        errs = {}
        for refine in (2, 4):
            sol = reference_solve(theta0, params, SolverConfig(tg, reference_refine=refine))
            errs[refine] = max(
                np.abs(a.values - b.values).max()
                for a, b in zip(sol.snapshots, golden.snapshots)
            )
        order = math.log2(errs[2] / errs[4])
        assert order >= 1.8

    def test_agreement_with_picard_on_small_data(self, grid32, params):
        theta0 = 1e-3 * field_from_function(
            grid32, lambda x1, x2: np.sin(x1) + np.cos(2 * x2)
        )
        config = SolverConfig(TimeGrid(1.0, 24))
        picard, _ = picard_solve(theta0, params, config)
        ref = reference_solve(theta0, params, config)
        rel = max(
            np.abs(p.values - r.values).max() / np.abs(r.values).max()
            for p, r in zip(picard.snapshots, ref.snapshots)
        )
        assert rel <= 1e-3


class TestScaling:
    def test_identity(self, smooth32, params):
        out = scaling_transform(smooth32, 1, params)
        assert np.array_equal(out.values, smooth32.values)

    def test_composition(self, params):
        grid = GridSpec(64, L)
        f = band_limited_corpus(grid, count=1, max_mode=7, seed=3)[0]
        twice = scaling_transform(scaling_transform(f, 2, params), 2, params)
        once = scaling_transform(f, 4, params)
        assert np.abs(twice.values - once.values).max() <= 1e-12

    def test_rejects_non_divisor(self, smooth32, params):
        with pytest.raises(ValueError):
            scaling_transform(smooth32, 3, params)  # 3 does not divide 32
        with pytest.raises(ValueError):
            scaling_transform(smooth32, 0, params)

    def test_amplitude_exponent(self, params):
        grid = GridSpec(32, L)
        f = field_from_function(grid, lambda x1, x2: np.sin(x1))
        out = scaling_transform(f, 2, params)
        target = 2 ** (2 * params.beta - 1) * np.sin(2 * grid.coords)[:, None]
        assert np.abs(out.values - target * np.ones((1, 32))).max() <= 1e-12

    def test_besov_sup_criticality_on_corpus(self, params):
        grid = GridSpec(64, L)
        s = 1 - 2 * params.beta
        for f in band_limited_corpus(grid, count=6, max_mode=7, seed=21):
            ratio = (
                besov_sup_norm(scaling_transform(f, 2, params), s).value
                / besov_sup_norm(f, s).value
            )
            assert 0.8 <= ratio <= 1.25

    def test_trajectory_time_reindexing_exact_on_linear_data(self, params):
        grid = GridSpec(64, L)
        g = band_limited_corpus(grid, count=1, max_mode=7, seed=4)[0]
        times = np.linspace(0.1, 1.0, 10)
        traj = Trajectory(times, tuple(RealField(grid, t * g.values) for t in times))
        lam = 2
        scaled = scale_trajectory(traj, lam, params)
        amp = lam ** (2 * params.beta - 1)
        sub = scaling_transform(g, lam, params).values / amp
        rate = lam ** (2 * params.beta)
        for t, snap in zip(scaled.times, scaled.snapshots):
            inner = min(max(rate * t, times[0]), times[-1])  # interp clamps ends
            target = amp * inner * sub
            assert np.abs(snap.values - target).max() <= 1e-12


class TestSerialization:
    def test_round_trip(self, grid32, params, tmp_path):
        theta0 = 1e-3 * field_from_function(grid32, lambda x1, x2: np.sin(x1))
        traj, report = picard_solve(theta0, params, SolverConfig(TimeGrid(1.0, 16)))
        save_trajectory(traj, tmp_path / "run", params, report=report)
        back, loaded_params = load_trajectory(tmp_path / "run")
        assert loaded_params == params
        assert np.array_equal(np.asarray(back.times), np.asarray(traj.times))
        for a, b in zip(back.snapshots, traj.snapshots):
            assert np.array_equal(a.values, b.values)
        assert (tmp_path / "run" / "picard.csv").exists()

    def test_rejects_foreign_manifest(self, grid32, params, tmp_path):
        d = tmp_path / "run"
        d.mkdir()
        (d / "manifest.json").write_text(json.dumps({"format": "other"}))
        with pytest.raises(ValueError):
            load_trajectory(d)
