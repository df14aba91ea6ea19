import math

import numpy as np
import pytest

from snlevy.errors import DomainError, NumericError
from snlevy.model import CompoundPoissonExp, LevyModel, phi_inverse
from snlevy.scale import (
    InversionConfig,
    ScaleContext,
    scale_table,
    w_scale,
    w_scale_dq,
    z_scale,
)


class TestClosedForms:
    def test_w_standard_brownian(self, std_brownian):
        ctx = ScaleContext(std_brownian, 0.5)
        # W(q)(x) = sqrt(2/q) sinh(sqrt(2q) x)
        assert w_scale(ctx, 1.0) == pytest.approx(2.0 * math.sinh(1.0), rel=1e-14)

    def test_w_negative_argument(self, std_brownian):
        ctx = ScaleContext(std_brownian, 1.0)
        assert w_scale(ctx, -0.3) == 0.0

    def test_w_linear_brownian_q0(self, linear_brownian):
        # W(x) = (1/mu)(1 - e^(-2 mu x)) at mu = 1
        ctx = ScaleContext(linear_brownian, 0.0)
        assert w_scale(ctx, 1.0) == pytest.approx(1.0 - math.exp(-2.0), rel=1e-14)

    def test_z_standard_brownian(self, std_brownian):
        ctx = ScaleContext(std_brownian, 0.5)
        assert z_scale(ctx, 1.0) == pytest.approx(math.cosh(1.0), rel=1e-14)
        assert z_scale(ctx, 0.0) == 1.0

    def test_z_at_q_zero(self, std_brownian):
        ctx = ScaleContext(std_brownian, 0.0)
        assert z_scale(ctx, 5.0) == 1.0

    def test_z_at_origin_any_q(self, cpexp_model):
        ctx = ScaleContext(cpexp_model, 3.0)
        assert z_scale(ctx, 0.0) == 1.0

    def test_dw_dq_q0(self, std_brownian):
        # (W * W)(1) = int_0^1 2(1-y) 2y dy = 2/3
        ctx = ScaleContext(std_brownian, 0.0)
        assert w_scale_dq(ctx, 1.0) == pytest.approx(2.0 / 3.0, rel=1e-13)
        assert w_scale_dq(ctx, 0.0) == 0.0

    def test_dw_dq_matches_symbolic(self, std_brownian):
        # d/dq [sqrt(2/q) sinh(sqrt(2q) x)] at q=0.5, x=1 equals 2/e
        ctx = ScaleContext(std_brownian, 0.5)
        assert w_scale_dq(ctx, 1.0) == pytest.approx(2.0 / math.e, abs=1e-8)

    def test_dw_dq_negative_rejected(self, std_brownian):
        with pytest.raises(DomainError):
            w_scale_dq(ScaleContext(std_brownian, 0.5), -1.0)

    def test_dw_dq_series_matches_direct(self, linear_brownian):
        # the small-u series branch and the direct branch agree near the seam
        q = 1e-9
        ctx = ScaleContext(linear_brownian, q)
        for x in (0.05, 0.2, 0.31):
            fd = (ScaleContext(linear_brownian, q + 1e-6).w(x)
                  - ScaleContext(linear_brownian, q).w(x)) / 1e-6
            assert ctx.dw_dq(x) == pytest.approx(fd, rel=1e-4)

    def test_cpexp_w0_is_zero(self, cpexp_model):
        ctx = ScaleContext(cpexp_model, 0.8)
        assert ctx.w(0.0) == 0.0
        assert ctx.w(1e-12) == pytest.approx(2e-12, rel=1e-2)  # slope 2/sigma^2


class TestConvolutionIdentity:
    def test_dw_dq_equals_convolution(self, model_zoo, rng):
        # dW/dq must equal the numerically integrated self-convolution
        from scipy.integrate import quad

        for m in model_zoo:
            q = float(rng.uniform(0.1, 1.5))
            ctx = ScaleContext(m, q)
            x = float(rng.uniform(0.5, 2.0))
            conv, _ = quad(lambda y: ctx.w(y) * ctx.w(x - y), 0.0, x,
                           limit=200)
            assert ctx.dw_dq(x) == pytest.approx(conv, rel=1e-9)

    def test_dw_dq_matches_finite_difference(self, model_zoo):
        for m in model_zoo:
            dq = 1e-6
            up, dn = ScaleContext(m, 0.7 + dq), ScaleContext(m, 0.7 - dq)
            ctx = ScaleContext(m, 0.7)
            fd = (up.w(1.3) - dn.w(1.3)) / (2 * dq)
            assert ctx.dw_dq(1.3) == pytest.approx(fd, rel=1e-7)


class TestLaplaceTransform:
    def test_transform_identity(self, model_zoo):
        # int_0^Y e^(-sy) W(y) dy + tail bound matches 1/(psi(s) - q)
        for m in model_zoo:
            q = 0.6
            ctx = ScaleContext(m, q)
            phi = ctx.phi.phi
            s = phi + 1.5
            Y = 40.0
            ys = np.linspace(0.0, Y, 20001)
            vals = np.array([ctx.w(float(y)) for y in ys]) * np.exp(-s * ys)
            from scipy.integrate import simpson

            integral = simpson(vals, x=ys)
            tail = ctx.phi.phi_prime * math.exp((phi - s) * Y) / (s - phi)
            target = 1.0 / (m.psi(s) - q)
            assert integral + tail == pytest.approx(target, rel=1e-6)


class TestAsymptotics:
    @pytest.mark.parametrize("q", [0.3, 0.8])
    def test_exponential_growth_constants(self, model_zoo, q):
        for m in model_zoo:
            ctx = ScaleContext(m, q)
            phi = phi_inverse(m, q)
            x = 30.0
            # e^(-Phi(q) x) W(x) -> Phi'(q)
            val = math.exp(ctx.log_w(x) - phi.phi * x)
            assert val == pytest.approx(phi.phi_prime, rel=1e-6)
            # W(x - a)/W(x) -> e^(-Phi(q) a)
            a = 1.3
            ratio = math.exp(ctx.log_w(x - a) - ctx.log_w(x))
            assert ratio == pytest.approx(math.exp(-phi.phi * a), rel=1e-6)
            # Z(x)/W(x) -> q/Phi(q)
            zr = math.exp(ctx.log_z(x) - ctx.log_w(x))
            assert zr == pytest.approx(q / phi.phi, rel=1e-6)

    def test_two_sided_exit_monotone(self, std_brownian):
        ctx = ScaleContext(std_brownian, 0.7)
        c, b = 0.0, 2.0
        vals = [ctx.w(x - c) / ctx.w(b - c) for x in np.linspace(c, b, 41)]
        assert all(0.0 <= v <= 1.0 for v in vals)
        assert all(u <= v + 1e-15 for u, v in zip(vals, vals[1:]))

    def test_killed_resolvent_positive(self, model_zoo, rng):
        b = 2.0
        for m in model_zoo:
            ctx = ScaleContext(m, 0.4)
            for _ in range(20):
                x, y = rng.uniform(0.05, b - 0.05, size=2)
                val = (ctx.w(x) / ctx.w(b)) * ctx.w(b - y) - ctx.w(x - y)
                assert val >= -1e-12


class TestInversion:
    def test_round_trip_standard_brownian(self, std_brownian):
        # design target: < 1e-8 relative on x in (0, 10]
        inv = ScaleContext(std_brownian, 0.5, method="inversion")
        xs = np.concatenate([np.linspace(0.01, 0.5, 25),
                             np.linspace(0.5, 10.0, 40)])
        for x in xs:
            truth = 2.0 * math.sinh(x)
            assert inv.w(float(x)) == pytest.approx(truth, rel=1e-8)

    def test_inversion_matches_cpexp_closed_form(self, model_zoo):
        for m in model_zoo:
            closed = ScaleContext(m, 0.8)
            inv = ScaleContext(m, 0.8, method="inversion")
            for x in (0.1, 0.7, 2.0, 5.0):
                assert inv.w(x) == pytest.approx(closed.w(x), rel=1e-8)
                assert inv.z(x) == pytest.approx(closed.z(x), rel=1e-8)
                assert inv.dw_dq(x) == pytest.approx(closed.dw_dq(x), rel=1e-7)
                assert inv.log_w(x) == pytest.approx(closed.log_w(x), abs=1e-8)

    def test_inversion_rejects_flat_zero(self, std_brownian):
        with pytest.raises(NumericError):
            ScaleContext(std_brownian, 0.0, method="inversion")

    def test_inversion_q0_with_drift(self, linear_brownian):
        closed = ScaleContext(linear_brownian, 0.0)
        inv = ScaleContext(linear_brownian, 0.0, method="inversion")
        for x in (0.5, 2.0):
            assert inv.w(x) == pytest.approx(closed.w(x), rel=1e-8)


class TestOverflowPolicy:
    def test_w_overflow_raises(self, std_brownian):
        ctx = ScaleContext(std_brownian, 0.5)
        with pytest.raises(NumericError):
            ctx.w(800.0)

    def test_log_w_survives_overflow_range(self, std_brownian):
        ctx = ScaleContext(std_brownian, 0.5)
        # log W ~ Phi(q) x + log Phi'(q) far out
        assert ctx.log_w(800.0) == pytest.approx(800.0, abs=1e-6)

    def test_log_z_far_range(self, std_brownian):
        ctx = ScaleContext(std_brownian, 0.5)
        # Z = cosh(x): log Z ~ x - log 2
        assert ctx.log_z(900.0) == pytest.approx(900.0 - math.log(2.0), abs=1e-9)


def test_scale_table_layout(std_brownian):
    rows = scale_table(ScaleContext(std_brownian, 0.0), [-1.0, 0.0, 1.0])
    assert rows[0] == (-1.0, 0.0, 1.0, 0.0)
    assert rows[2][1] == pytest.approx(2.0)


def test_unknown_method_rejected(std_brownian):
    with pytest.raises(DomainError):
        ScaleContext(std_brownian, 0.5, method="mystery")
