"""Closed forms, finite-difference cross-checks, and assumption reports."""

import numpy as np
import pytest

from gesfem.errors import ModelDomainError, ValidationError
from gesfem.model import (
    FlowModel,
    check_partials,
    g_from_G,
    gradient_flow_model,
    make_model,
    stationary_model,
    validate_assumptions,
)


class TestGradientFlowFamily:
    def test_alpha0_is_classical_mcf(self):
        m = gradient_flow_model(0.0)
        assert m.g(3.7) == pytest.approx(1.0)
        assert m.F(2.0, 5.0) == pytest.approx(5.0)  # F(u, H) = H
        assert m.dK2(1.3, -2.0) == pytest.approx(1.0)

    def test_alpha2_closed_forms(self):
        m = gradient_flow_model(2.0)
        assert m.g(1.0) == pytest.approx(3.0)
        assert m.F(1.0, 2.0) == pytest.approx(6.0)
        assert m.K(1.0, 9.0) == pytest.approx(3.0)  # V u^2 / 3
        assert m.dK2(1.0, 0.0) == pytest.approx(1.0 / 3.0)

    def test_inversion_round_trip(self):
        m = gradient_flow_model(2.0)
        u, h = 1.0, 2.0
        v = -m.F(u, h)
        assert v == pytest.approx(-6.0)
        assert -m.K(u, v) == pytest.approx(h)

    def test_inversion_identity_on_grid(self):
        for alpha in (0.0, 1.0, 2.0, 4.0):
            m = gradient_flow_model(alpha)
            us = np.linspace(0.5, 13.0, 20)
            hs = np.linspace(-5.0, 5.0, 20)
            uu, hh = np.meshgrid(us, hs)
            vv = -m.F(uu, hh)
            assert np.abs(-m.K(uu, vv) - hh).max() < 1e-10

    def test_domain_error_below_zero(self):
        m = gradient_flow_model(2.0)
        with pytest.raises(ModelDomainError):
            m.g(np.array([1.0, -0.5]))
        with pytest.raises(ModelDomainError):
            m.K(0.0, 1.0)

    def test_invalid_parameters(self):
        with pytest.raises(ValidationError):
            gradient_flow_model(-1.0)
        with pytest.raises(ValidationError):
            gradient_flow_model(2.0, D0=0.0)


class TestGFromG:
    def test_power_family_matches(self):
        # G(r) = r^-2: g(2) = 2^-2 + 2 * 2 * 2^-3 = 3/4 = 3 * 2^-2
        G = lambda r: r**-2.0
        Gp = lambda r: -2.0 * r**-3.0
        assert g_from_G(G, Gp, 2.0) == pytest.approx(0.75)
        m = gradient_flow_model(2.0)
        assert m.g(2.0) == pytest.approx(0.75)

    def test_affine_g_is_constant(self):
        a, b = 1.7, -0.3
        G = lambda r: a + b * r
        Gp = lambda r: b * np.ones_like(np.asarray(r, dtype=float))
        for r in (0.5, 1.0, 4.2):
            assert g_from_G(G, Gp, r) == pytest.approx(a)

    def test_partials_match_finite_differences(self):
        m = gradient_flow_model(2.0)
        assert check_partials(m, 1.3, -0.7, step=1e-6) < 1e-8

    @pytest.mark.parametrize("alpha", [0.0, 1.0, 2.0, 4.0])
    def test_all_partials_fd(self, alpha):
        m = gradient_flow_model(alpha)
        for u in (0.6, 1.3, 2.4):
            for w in (-0.7, 0.9):
                assert check_partials(m, u, w) < 1e-7


class TestValidateAssumptions:
    def test_alpha2_passes_on_box(self):
        m = gradient_flow_model(2.0, 1.0)
        report = validate_assumptions(m, (0.5, 13.0), (-10.0, 0.0))
        assert report["passed"]

    def test_broken_dk2_flagged(self):
        base = gradient_flow_model(2.0)
        broken = FlowModel(
            name="broken", F=base.F, dF1=base.dF1, dF2=base.dF2,
            K=base.K, dK1=base.dK1,
            dK2=lambda u, V: -np.ones_like(np.asarray(u, dtype=float)),
            G=base.G, Gp=base.Gp, Gpp=base.Gpp, g=base.g,
            D=base.D, D_bounds=base.D_bounds, D_constant=base.D_constant,
        )
        report = validate_assumptions(broken, (0.5, 2.0), (-1.0, -0.1))
        assert not report["dK2_positive"]["passed"]
        assert not report["passed"]

    def test_alpha0_dk2_is_one(self):
        m = gradient_flow_model(0.0)
        report = validate_assumptions(m, (0.5, 2.0), (-1.0, 1.0))
        assert report["dK2_positive"]["worst_margin"] == pytest.approx(1.0)


class TestRegistry:
    def test_lookup(self):
        m = make_model("gradient_flow", alpha=2.0, D0=1.0)
        assert m.params["alpha"] == 2.0
        with pytest.raises(ValidationError):
            make_model("unknown")

    def test_stationary_model(self):
        m = stationary_model()
        assert m.F(1.0, 5.0) == 0.0
        assert m.dK2(1.0, 0.0) == 1.0
        assert not m.fk_invertible
