import math

import numpy as np
import pytest
from scipy.integrate import quad

from granflow.multilayer import LayerPartition
from granflow.rheology import GRAVITY, RheologyParams, invert_friction
from granflow.scenarios import (
    CollapseSpec,
    UniformFlowSpec,
    bagnold_profile,
    collapse_initial,
    deposit_diagnostics,
    front_position,
    layer_average_bagnold,
    relative_error,
    run_collapse,
    stopping_timescale,
)

PARAMS = RheologyParams(mu_s=0.363, mu_2=0.74, I0=0.279, d_s=0.04,
                        rho_s=2500.0, phi_s=0.62)
SPEC = UniformFlowSpec(H=1.0, theta=0.43, rheology=PARAMS)


class TestBagnoldProfile:
    def test_no_slip_at_base(self):
        u, _, _ = bagnold_profile(0.0, SPEC)
        assert u == 0.0

    def test_stress_free_surface(self):
        _, p, tau = bagnold_profile(SPEC.H, SPEC)
        assert p == 0.0 and tau == 0.0

    def test_surface_velocity_value(self):
        u, _, _ = bagnold_profile(1.0, SPEC)
        assert u == pytest.approx(3.72, abs=0.01)

    def test_surface_velocity_against_quadrature(self):
        # independent route: integrate du/dz from the friction balance
        # mu(I(z)) = tan(theta), i.e. du/dz = (I*/d_s) sqrt(p(z)/rho_s)
        i_star = invert_friction(math.tan(0.43), PARAMS)

        def dudz(z):
            p = PARAMS.rho * GRAVITY * math.cos(0.43) * (1.0 - z)
            return (i_star / PARAMS.d_s) * math.sqrt(p / PARAMS.rho_s)

        u_quad, _ = quad(dudz, 0.0, 1.0, limit=200)
        u_closed, _, _ = bagnold_profile(1.0, SPEC)
        assert u_closed == pytest.approx(u_quad, rel=1e-9)

    def test_friction_balance_identity(self):
        # mu(I(z)) = tan(theta) throughout the flowing interior
        z = np.linspace(1e-6, 1.0 - 1e-6, 200)
        u, p, tau = bagnold_profile(z, SPEC)
        assert np.allclose(tau / p, math.tan(0.43), rtol=1e-10)

    def test_stress_ratio_constant(self):
        z = np.linspace(0.0, 0.999, 50)
        _, p, tau = bagnold_profile(z, SPEC)
        assert np.allclose(tau, p * math.tan(0.43), rtol=1e-12)

    def test_non_flowing_regime_rejected(self):
        calm = UniformFlowSpec(H=1.0, theta=0.2, rheology=PARAMS)
        with pytest.raises(ValueError):
            bagnold_profile(0.5, calm)

    def test_out_of_range_height_rejected(self):
        with pytest.raises(ValueError):
            bagnold_profile(1.5, SPEC)


class TestLayerAverages:
    def test_depth_average_single_layer(self):
        avg = layer_average_bagnold(SPEC, LayerPartition.uniform(1))[0]
        u_h, _, _ = bagnold_profile(1.0, SPEC)
        assert avg == pytest.approx(0.6 * u_h, rel=1e-12)

    def test_matches_quadrature(self):
        part = LayerPartition(np.array([0.15, 0.35, 0.5]))
        avgs = layer_average_bagnold(SPEC, part)
        edges = part.cumulative * SPEC.H
        for j in range(3):
            val, _ = quad(lambda z: bagnold_profile(z, SPEC)[0],
                          edges[j], edges[j + 1], limit=200)
            assert avgs[j] == pytest.approx(val / (edges[j + 1] - edges[j]),
                                            rel=1e-10)

    def test_weighted_sum_is_depth_average(self):
        part = LayerPartition(np.array([0.1, 0.2, 0.3, 0.4]))
        avgs = layer_average_bagnold(SPEC, part)
        depth_avg = layer_average_bagnold(SPEC, LayerPartition.uniform(1))[0]
        assert float(part.fractions @ avgs) == pytest.approx(depth_avg, rel=1e-12)

    def test_monotone_in_layer_index(self):
        avgs = layer_average_bagnold(SPEC, LayerPartition.uniform(12))
        assert np.all(np.diff(avgs) > 0.0)

    def test_top_layer_approaches_surface_velocity(self):
        avgs = layer_average_bagnold(SPEC, LayerPartition.uniform(400))
        u_h, _, _ = bagnold_profile(1.0, SPEC)
        assert avgs[-1] == pytest.approx(u_h, rel=2e-3)


class TestRelativeError:
    def test_identical_is_zero(self):
        u = np.array([1.0, 2.0, 3.0])
        assert relative_error(u, u) == 0.0

    def test_zero_sim_is_one(self):
        u = np.array([1.0, 2.0])
        assert relative_error(np.zeros(2), u) == pytest.approx(1.0)

    def test_hand_value(self):
        assert relative_error(np.array([1.0, 0.0]), np.array([1.0, 1.0])) == \
            pytest.approx(1.0 / math.sqrt(2.0), rel=1e-14)

    def test_zero_reference_rejected(self):
        with pytest.raises(ValueError):
            relative_error(np.array([1.0]), np.array([0.0]))


class TestCollapseInitial:
    def test_geometry(self):
        spec = CollapseSpec(h0=0.14, r0=0.20, h_i=0.0025,
                            theta=math.radians(22.0))
        state = collapse_initial(spec, dx=2.5e-3, n_layers=4)
        def h_at(x):
            return state.h[int(np.argmin(np.abs(state.x_centers - x)))]
        assert h_at(-0.10) == pytest.approx(0.1425, rel=1e-12)
        assert h_at(+0.10) == pytest.approx(0.0025, rel=1e-12)
        assert np.all(state.u == 0.0)
        assert np.all(state.z_b == 0.0)

    def test_total_mass(self):
        spec = CollapseSpec(h0=0.14, r0=0.20, h_i=0.0025)
        state = collapse_initial(spec, dx=2.5e-3, n_layers=2)
        domain = spec.x_max - spec.x_min
        assert state.total_mass() == pytest.approx(
            0.14 * 0.20 + 0.0025 * domain, rel=1e-12)

    def test_front_starts_at_gate(self):
        spec = CollapseSpec(h_i=0.0018)
        state = collapse_initial(spec, dx=2.5e-3, n_layers=2)
        assert front_position(state, spec.h_i) == pytest.approx(0.0, abs=1e-12)

    def test_mesh_too_short_rejected(self):
        with pytest.raises(ValueError):
            collapse_initial(CollapseSpec(x_min=-0.1), dx=2.5e-3, n_layers=2)


class TestDepositDiagnostics:
    def test_cadence_invariance(self, experiment_params):
        # identical run sampled at two cadences: r_f and h_f agree, t_f
        # within one coarse snapshot interval
        spec = CollapseSpec(h_i=1.82e-3, theta=math.radians(22.0),
                            x_max=1.5)
        fine = run_collapse(spec, experiment_params, n_layers=3, dx=5e-3,
                            t_end=3.0, snapshot_dt=0.01)
        coarse = run_collapse(spec, experiment_params, n_layers=3, dx=5e-3,
                              t_end=3.0, snapshot_dt=0.05)
        df = deposit_diagnostics(fine.history, spec.h_i)
        dc = deposit_diagnostics(coarse.history, spec.h_i)
        assert df.r_f == pytest.approx(dc.r_f, abs=5e-3 + 1e-12)
        # the deposit still settles marginally within one coarse interval
        assert df.h_f == pytest.approx(dc.h_f, rel=2e-3)
        assert abs(df.t_f - dc.t_f) <= 0.05 + 1e-9

    def test_horizontal_collapse_runout_positive_finite(self, experiment_params):
        spec = CollapseSpec(h_i=0.0015, theta=0.0, x_min=-0.75, x_max=0.75)
        res = run_collapse(spec, experiment_params, n_layers=3, dx=5e-3,
                           t_end=4.0)
        assert not res.deposit.censored
        assert 0.0 < res.deposit.r_f < 0.75

    def test_second_order_shear_runs_and_conserves(self, experiment_params):
        spec = CollapseSpec(h_i=1.82e-3, theta=math.radians(22.0))
        res = run_collapse(spec, experiment_params, n_layers=3, dx=1e-2,
                           t_end=0.6, shear_order=2)
        assert res.run.mass_drift < 1e-12
        assert res.deposit.r_f > 0.0

    def test_never_quiescent_is_censored(self, experiment_params):
        spec = CollapseSpec(h_i=1.82e-3, theta=math.radians(22.0))
        res = run_collapse(spec, experiment_params, n_layers=2, dx=1e-2,
                           t_end=0.05)
        assert res.deposit.censored
        assert res.run.censored


class TestStoppingTimescale:
    def test_formula(self):
        assert stopping_timescale(0.14, 0.0) == pytest.approx(
            math.sqrt(0.14 / GRAVITY), rel=1e-14)
        assert stopping_timescale(0.14, 0.4) == pytest.approx(
            math.sqrt(0.14 / (GRAVITY * math.cos(0.4))), rel=1e-14)
