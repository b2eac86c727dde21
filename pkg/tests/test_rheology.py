import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from granflow.rheology import (
    GRAVITY,
    Regularization,
    RegularizationMode,
    RheologyParams,
    constant_friction_coefficient,
    effective_viscosity,
    friction_coefficient,
    inertial_number,
    invert_friction,
)

BAGNOLD = RheologyParams(mu_s=0.363, mu_2=0.74, I0=0.279, d_s=0.04,
                         rho_s=2500.0, phi_s=0.62)


class TestParams:
    def test_apparent_density(self):
        assert BAGNOLD.rho == pytest.approx(0.62 * 2500.0, rel=0, abs=0)

    @pytest.mark.parametrize("kw", [
        dict(mu_s=0.8, mu_2=0.74),      # mu_s >= mu_2
        dict(mu_s=0.0),                 # mu_s not positive
        dict(I0=-1.0),
        dict(d_s=0.0),
        dict(rho_s=-2.0),
        dict(phi_s=1.5),
    ])
    def test_invariants_rejected(self, kw):
        base = dict(mu_s=0.363, mu_2=0.74, I0=0.279, d_s=0.04,
                    rho_s=2500.0, phi_s=0.62)
        base.update(kw)
        with pytest.raises(ValueError):
            RheologyParams(**base)


class TestFrictionCoefficient:
    def test_zero_shear_gives_static_value(self):
        assert friction_coefficient(0.0, BAGNOLD) == BAGNOLD.mu_s

    def test_midpoint_at_reference_inertial_number(self):
        assert friction_coefficient(BAGNOLD.I0, BAGNOLD) == pytest.approx(
            0.5 * (BAGNOLD.mu_s + BAGNOLD.mu_2), rel=1e-14)

    def test_large_inertial_number_asymptote(self):
        assert friction_coefficient(1e9, BAGNOLD) == pytest.approx(0.74, abs=1e-6)

    def test_negative_inertial_number_rejected(self):
        with pytest.raises(ValueError):
            friction_coefficient(-0.1, BAGNOLD)

    def test_monotone_and_bounded_on_grid(self):
        I = np.linspace(0.0, 50.0, 1000)
        mu = friction_coefficient(I, BAGNOLD)
        assert np.all(np.diff(mu) > 0.0)
        assert np.all(mu >= BAGNOLD.mu_s)
        assert np.all(mu < BAGNOLD.mu_2)

    @given(st.floats(min_value=0.0, max_value=1e6))
    def test_bounds_property(self, I):
        mu = friction_coefficient(I, BAGNOLD)
        assert BAGNOLD.mu_s <= mu < BAGNOLD.mu_2

    def test_constant_mode_is_static_value(self):
        p1 = RheologyParams(mu_s=0.48, mu_2=0.74, I0=0.279, d_s=7e-4,
                            rho_s=2500.0, phi_s=0.62)
        assert constant_friction_coefficient(p1) == 0.48
        assert constant_friction_coefficient(BAGNOLD) == 0.363


class TestInertialNumber:
    def test_zero_shear(self):
        assert inertial_number(0.0, 1000.0, BAGNOLD) == 0.0

    def test_unit_velocity_scale(self):
        # sqrt(p / rho_s) = 1 for p = rho_s
        p = RheologyParams(mu_s=0.363, mu_2=0.74, I0=0.279, d_s=0.04,
                           rho_s=2500.0, phi_s=0.62)
        assert inertial_number(1.0, 2500.0, p) == pytest.approx(0.04, rel=1e-14)

    def test_steady_balance_inversion(self):
        # I solving mu(I) = tan(theta) at theta = 0.43 rad, inverted by hand:
        # I = I0 (tan - mu_s)/(mu_2 - tan) ~ 0.0948
        I = invert_friction(math.tan(0.43), BAGNOLD)
        assert I == pytest.approx(0.0948, abs=2e-4)
        assert friction_coefficient(I, BAGNOLD) == pytest.approx(
            math.tan(0.43), abs=1e-4)

    def test_nonpositive_pressure_rejected(self):
        with pytest.raises(ValueError):
            inertial_number(1.0, 0.0, BAGNOLD)
        with pytest.raises(ValueError):
            inertial_number(1.0, -5.0, BAGNOLD)


class TestEffectiveViscosity:
    def test_cap_at_zero_shear(self):
        reg = Regularization(mode=RegularizationMode.MAX_BOUND)
        eta_m = reg.eta_cap(BAGNOLD.rho, 1.0)
        assert effective_viscosity(0.0, 500.0, BAGNOLD, reg, 1.0) == eta_m

    def test_cap_value(self):
        # 250 rho sqrt(g h^3) for rho = 1550, h = 1
        reg = Regularization()
        assert reg.eta_cap(1550.0, 1.0) == pytest.approx(
            250.0 * 1550.0 * math.sqrt(GRAVITY), rel=1e-14)
        assert reg.eta_cap(1550.0, 1.0) == pytest.approx(1.2137e6, rel=1e-4)

    def test_delta_mode_zero_shear(self):
        reg = Regularization(mode=RegularizationMode.DELTA, delta=1e-6)
        p0 = 1234.5
        assert effective_viscosity(0.0, p0, BAGNOLD, reg, 1.0) == pytest.approx(
            BAGNOLD.mu_s * p0 / 1e-6, rel=1e-12)

    def test_zero_pressure_gives_zero_viscosity(self):
        for reg in (Regularization(),
                    Regularization(mode=RegularizationMode.DELTA, delta=1e-6)):
            assert effective_viscosity(0.0, 0.0, BAGNOLD, reg, 1.0) == 0.0
            assert effective_viscosity(3.0, 0.0, BAGNOLD, reg, 1.0) == 0.0

    @given(shear=st.floats(min_value=0.0, max_value=1e3),
           pressure=st.floats(min_value=1e-6, max_value=1e6),
           h_ref=st.floats(min_value=1e-4, max_value=10.0))
    @settings(max_examples=80)
    def test_never_exceeds_cap(self, shear, pressure, h_ref):
        reg = Regularization(mode=RegularizationMode.MAX_BOUND)
        eta = effective_viscosity(shear, pressure, BAGNOLD, reg, h_ref)
        assert 0.0 <= eta <= reg.eta_cap(BAGNOLD.rho, h_ref) * (1 + 1e-12)

    def test_continuous_at_switch_point(self):
        reg = Regularization(mode=RegularizationMode.MAX_BOUND)
        p, h_ref = 800.0, 0.5
        eta_m = reg.eta_cap(BAGNOLD.rho, h_ref)
        # switch shear solves shear = mu(I(shear)) p / eta_M; iterate once
        s = BAGNOLD.mu_s * p / eta_m
        for _ in range(60):
            I = inertial_number(s, p, BAGNOLD)
            s = friction_coefficient(I, BAGNOLD) * p / eta_m
        lo = effective_viscosity(s * (1 - 1e-12), p, BAGNOLD, reg, h_ref)
        hi = effective_viscosity(s * (1 + 1e-12), p, BAGNOLD, reg, h_ref)
        assert lo == pytest.approx(eta_m, rel=1e-10)
        assert hi == pytest.approx(eta_m, rel=1e-10)

    def test_delta_convergence(self):
        # quadratic in delta, so halving delta at least halves the error
        p, s = 2000.0, 3.0
        exact = effective_viscosity(s, p, BAGNOLD,
                                    Regularization(mode=RegularizationMode.DELTA,
                                                   delta=1e-12), 1.0)
        errs = []
        for delta in (1e-3, 5e-4, 2.5e-4):
            reg = Regularization(mode=RegularizationMode.DELTA, delta=delta)
            errs.append(abs(effective_viscosity(s, p, BAGNOLD, reg, 1.0) - exact))
        assert errs[1] <= 0.6 * errs[0]
        assert errs[2] <= 0.6 * errs[1]
