"""Propagator, steppers, run loop, blow-up detection."""

import math

import numpy as np
import pytest

from aniso.integrate import (
    BlowUpError,
    DissipationTracker,
    IntegratorConfig,
    RhsVariant,
    linear_propagator,
    resolve_dt,
    run,
    step,
    velocity_decay_symbol,
)
from aniso.model import DissipationConfig, SimulationState, preset_config
from aniso.norms import vector_sobolev_norm
from aniso.spectral import SpectralField, VectorField2, to_spectral
from aniso.verify import random_divfree, random_field

from oracles import anisotropic_rate


def shear_mode(grid, k=1):
    """Divergence-free single mode (0, cos(k x1)); self-advection vanishes."""
    x1, _ = grid.meshgrid()
    return VectorField2(SpectralField.zeros(grid), to_spectral(grid, np.cos(k * x1)))


class TestPropagatorSymbol:
    def test_requires_cross_diagonal_pattern(self, grid16):
        with pytest.raises(ValueError, match="nu1"):
            linear_propagator(DissipationConfig(nu1=1.0, nu2=1.0), grid16, 1.0)

    def test_negative_time_rejected(self, grid16):
        with pytest.raises(ValueError, match="nonnegative"):
            linear_propagator(preset_config("thm1"), grid16, -0.1)

    def test_t_zero_identity(self, grid32):
        prop = linear_propagator(preset_config("thm2-d2"), grid32, 0.0)
        v = random_divfree(grid32, 1)
        th = random_field(grid32, 2)
        pv, pt = prop.apply(v, th)
        np.testing.assert_array_equal(pv.u2.coeffs, v.u2.coeffs)
        np.testing.assert_array_equal(pt.coeffs, th.coeffs)

    def test_rate_values_for_unit_viscosities(self, grid16):
        # both viscosities 1: rate -1 at (1,0) and (1,1), -4 at (2,0)
        cfg = DissipationConfig(nu2=1.0, mu1=1.0)
        prop = linear_propagator(cfg, grid16, 1.0)
        assert prop.a_xi[1, 0] == pytest.approx(-1.0, abs=1e-15)
        assert prop.a_xi[1, 1] == pytest.approx(-1.0, abs=1e-15)
        assert prop.a_xi[2, 0] == pytest.approx(-4.0, abs=1e-15)
        for k1, k2 in ((1, 0), (1, 1), (2, 0), (3, 2)):
            assert prop.a_xi[k1, k2] == pytest.approx(
                anisotropic_rate(k1, k2, cfg.mu1, cfg.nu2), abs=1e-14
            )

    def test_symbol_sign_and_mean(self, grid32):
        a = velocity_decay_symbol(grid32, DissipationConfig(nu2=2.0, mu1=0.5))
        assert a[0, 0] == 0.0
        assert np.all(a <= 0.0)
        # decay factors in (0, 1]; hard decay may underflow to +0
        e = np.exp(a * 3.0)
        assert np.all(e <= 1.0) and np.all(e >= 0.0)
        assert np.all(e[np.abs(a) * 3.0 < 700] > 0.0)

    def test_semigroup(self, grid32):
        cfg = DissipationConfig(nu2=1.0, mu1=4.0, delta1=0.3)
        p1 = linear_propagator(cfg, grid32, 0.4)
        p2 = linear_propagator(cfg, grid32, 1.1)
        lhs_v = p1.velocity_factor() * p2.velocity_factor()
        rhs_v = p1.velocity_factor(1.5)
        assert np.max(np.abs(lhs_v - rhs_v)) <= 1e-12
        lhs_t = p1.theta_factor() * p2.theta_factor()
        assert np.max(np.abs(lhs_t - p1.theta_factor(1.5))) <= 1e-12

    @pytest.mark.parametrize("pair", [(1.0, 1.0), (1.0, 4.0), (0.1, 10.0)])
    @pytest.mark.parametrize("t", [0.1, 1.0, 10.0])
    def test_two_sided_kernel_bound(self, grid32, pair, t):
        horizontal, vertical = pair
        cfg = DissipationConfig(mu1=horizontal, nu2=vertical)
        prop = linear_propagator(cfg, grid32, t)
        e = np.exp(prop.a_xi * t)
        lower = np.exp(-max(pair) * grid32.xi_sq * t)
        upper = np.exp(-0.5 * min(pair) * grid32.xi_sq * t)
        assert np.all(e >= lower * (1 - 1e-13) - 1e-300)
        assert np.all(e <= upper * (1 + 1e-13))

    def test_divfree_preserved(self, grid32):
        prop = linear_propagator(preset_config("thm1"), grid32, 0.7)
        v = random_divfree(grid32, 5)
        pv, _ = prop.apply(v, SpectralField.zeros(grid32))
        assert pv.divergence_measure() <= 1e-12

    def test_single_mode_exponential_decay_vs_erk4(self, grid16):
        # ||v(t)|| = e^-t ||v0|| for unit viscosities on the (1,0) shear mode
        cfg = DissipationConfig(nu2=1.0, mu1=1.0)
        v0 = shear_mode(grid16)
        th0 = SpectralField.zeros(grid16)
        prop = linear_propagator(cfg, grid16, 1.0)
        pv, _ = prop.apply(v0, th0)
        assert vector_sobolev_norm(pv, 0.0) == pytest.approx(
            math.exp(-1.0) * vector_sobolev_norm(v0, 0.0), rel=1e-13
        )
        res = run(
            SimulationState(0.0, v0, th0),
            cfg,
            IntegratorConfig(method="erk4", dt=1e-4, t_end=1.0),
        )
        diff = np.max(np.abs(res.final_state.v.u2.coeffs - pv.u2.coeffs))
        assert diff <= 1e-8

    def test_p_matrix(self, grid16):
        prop = linear_propagator(preset_config("thm1"), grid16, 1.0)
        np.testing.assert_array_equal(
            prop.p_matrix(1, 1), np.array([[0.5, -0.5], [-0.5, 0.5]])
        )
        np.testing.assert_array_equal(prop.p_matrix(0, 0), np.eye(2))


class TestStep:
    def test_rest_state_fixed(self, grid16):
        cfg = preset_config("thm2-d2")
        out = step(SimulationState.rest(grid16), cfg, IntegratorConfig(dt=0.1, t_end=1.0))
        assert out.t == pytest.approx(0.1)
        assert np.all(out.theta.coeffs == 0.0)
        assert np.all(out.v.u2.coeffs == 0.0)

    def test_if_matches_propagator_exactly_on_linear(self, grid32):
        cfg = DissipationConfig(nu2=1.0, mu1=4.0)
        state = SimulationState(0.0, shear_mode(grid32), SpectralField.zeros(grid32))
        out = step(state, cfg, IntegratorConfig(method="if_rk4", dt=0.5, t_end=1.0))
        pv, _ = linear_propagator(cfg, grid32, 0.5).apply(state.v, state.theta)
        assert np.max(np.abs(out.v.u2.coeffs - pv.u2.coeffs)) <= 1e-12

    @pytest.mark.parametrize("method", ["if_rk4", "erk4"])
    def test_fourth_order_convergence(self, grid32, method):
        cfg = preset_config("thm1")
        state = SimulationState(
            0.0,
            random_divfree(grid32, 31, amplitude=0.5),
            random_field(grid32, 32, amplitude=0.5),
        )

        def final(dt):
            r = run(state, cfg, IntegratorConfig(method=method, dt=dt, t_end=0.5))
            return np.concatenate(
                [
                    r.final_state.v.u1.coeffs.ravel(),
                    r.final_state.v.u2.coeffs.ravel(),
                    r.final_state.theta.coeffs.ravel(),
                ]
            )

        ref = final(1e-4)
        e1 = np.max(np.abs(final(4e-3) - ref))
        e2 = np.max(np.abs(final(2e-3) - ref))
        order = math.log2(e1 / e2)
        assert order >= 3.7
        assert abs(e1 / e2 - 16.0) <= 0.2 * 16.0

    def test_auto_dt_positive(self, grid32):
        cfg = preset_config("thm1")
        state = SimulationState(
            0.0, random_divfree(grid32, 41, amplitude=1.0), random_field(grid32, 42)
        )
        for method in ("if_rk4", "erk4"):
            dt = resolve_dt(state, cfg, IntegratorConfig(method=method, dt="auto", t_end=1.0))
            assert 0.0 < dt <= 0.05
        # the stiff rate makes the explicit step smaller
        dt_if = resolve_dt(state, cfg, IntegratorConfig(method="if_rk4", dt="auto", t_end=1.0))
        dt_ex = resolve_dt(state, cfg, IntegratorConfig(method="erk4", dt="auto", t_end=1.0))
        assert dt_ex < dt_if


class TestRun:
    def test_t_end_zero_emits_initial_only(self, grid16):
        cfg = preset_config("thm1")
        seen = []
        res = run(
            SimulationState.rest(grid16),
            cfg,
            IntegratorConfig(dt=0.1, t_end=0.0),
            hooks=[lambda s: seen.append(s.t)],
        )
        assert seen == [0.0]
        assert res.n_steps == 0

    def test_cadence_and_final_sample(self, grid16):
        cfg = preset_config("thm1")
        res = run(
            SimulationState.rest(grid16),
            cfg,
            IntegratorConfig(dt=0.1, t_end=0.75),
            cadence=3,
        )
        # 8 steps; samples at 0, 3, 6, 8
        assert res.n_steps == 8
        assert res.sample_times == pytest.approx([0.0, 0.3, 0.6, 0.8])

    def test_deterministic_reruns_bit_identical(self, grid32):
        cfg = preset_config("thm2-d2")
        state = SimulationState(
            0.0,
            random_divfree(grid32, 51, amplitude=0.3),
            random_field(grid32, 52, amplitude=0.3),
        )
        icfg = IntegratorConfig(dt=5e-3, t_end=0.2)
        a = run(state, cfg, icfg).final_state
        b = run(state, cfg, icfg).final_state
        assert np.array_equal(a.v.u1.coeffs, b.v.u1.coeffs)
        assert np.array_equal(a.v.u2.coeffs, b.v.u2.coeffs)
        assert np.array_equal(a.theta.coeffs, b.theta.coeffs)

    def test_divfree_recertified_along_run(self, grid32):
        cfg = preset_config("thm1")
        state = SimulationState(
            0.0,
            random_divfree(grid32, 53, amplitude=0.8),
            random_field(grid32, 54, amplitude=0.8),
        )
        measures = []
        run(
            state,
            cfg,
            IntegratorConfig(dt=1e-2, t_end=0.3),
            hooks=[lambda s: measures.append(s.v.divergence_measure())],
            cadence=5,
        )
        assert max(measures) <= 1e-12

    def test_blowup_raised_with_partial_results(self, grid16):
        # an explicit step far beyond the stiff stability limit explodes
        cfg = DissipationConfig(nu2=50.0, mu1=50.0, delta2=50.0, lambda1=1.0, lambda2=1.0)
        state = SimulationState(
            0.0,
            random_divfree(grid16, 55, amplitude=1.0),
            random_field(grid16, 56, amplitude=1.0),
        )
        with pytest.raises(BlowUpError) as info:
            run(state, cfg, IntegratorConfig(method="erk4", dt=0.5, t_end=50.0))
        err = info.value
        assert err.t > 0.0
        assert err.partial is not None
        assert np.all(np.isfinite(err.state.theta.coeffs))

    def test_initial_divergence_rejected(self, grid16):
        x1, _ = grid16.meshgrid()
        bad = VectorField2(to_spectral(grid16, np.cos(x1)), SpectralField.zeros(grid16))
        cfg = preset_config("thm1")
        with pytest.raises(ValueError, match="divergence"):
            run(SimulationState(0.0, bad, SpectralField.zeros(grid16)), cfg, IntegratorConfig(dt=0.1, t_end=0.1))

    def test_truncated_variant_keeps_support(self, grid32):
        cfg = preset_config("thm1")
        state = SimulationState(
            0.0,
            random_divfree(grid32, 57, amplitude=0.5),
            random_field(grid32, 58, amplitude=0.5),
        )
        n = 4.0
        icfg = IntegratorConfig(dt=1e-2, t_end=0.1, variant=RhsVariant("truncated", n=n))
        res = run(state, cfg, icfg)
        outside = grid32.xi_sq > n * n
        for c in (res.final_state.v.u1.coeffs, res.final_state.v.u2.coeffs, res.final_state.theta.coeffs):
            assert np.max(np.abs(c[outside])) == 0.0

    def test_mollified_variant_runs(self, grid32):
        cfg = preset_config("thm2-d2")
        state = SimulationState(
            0.0,
            random_divfree(grid32, 59, amplitude=0.3),
            random_field(grid32, 60, amplitude=0.3),
        )
        icfg = IntegratorConfig(dt=1e-2, t_end=0.1, variant=RhsVariant("mollified", eps=0.2))
        res = run(state, cfg, icfg)
        assert res.final_state.t == pytest.approx(0.1)


class TestTracker:
    def test_matches_sample_trapezoid_at_cadence_one(self, grid32):
        cfg = preset_config("thm2-d2")
        state = SimulationState(
            0.0,
            random_divfree(grid32, 61, amplitude=0.3),
            random_field(grid32, 62, amplitude=0.3),
        )
        from aniso.diagnostics import build_reports, sample_state

        reports = []
        tracker = DissipationTracker(grid32, cfg, RhsVariant(), orders=(0,))
        res = run(
            state,
            cfg,
            IntegratorConfig(dt=1e-2, t_end=0.1),
            hooks=[lambda s: reports.append(sample_state(s, cfg, 0))],
            cadence=1,
            tracker=tracker,
        )
        import copy

        sampled = build_reports(copy.deepcopy(reports))
        tracked = build_reports(reports, res.tracker_samples)
        for a, b in zip(sampled, tracked):
            assert a.cum_diss_total == pytest.approx(b.cum_diss_total, rel=1e-10, abs=1e-18)

    def test_variant_validation(self):
        with pytest.raises(ValueError, match="radius"):
            RhsVariant("truncated")
        with pytest.raises(ValueError, match="width"):
            RhsVariant("mollified")
        with pytest.raises(ValueError, match="unknown rhs"):
            RhsVariant("weird")


class TestIntegratorConfig:
    def test_validation(self):
        with pytest.raises(ValueError, match="method"):
            IntegratorConfig(method="euler")
        with pytest.raises(ValueError, match="dt"):
            IntegratorConfig(dt=-0.1)
        with pytest.raises(ValueError, match="cfl"):
            IntegratorConfig(cfl=0.0)
        with pytest.raises(ValueError, match="t_end"):
            IntegratorConfig(t_end=-1.0)
