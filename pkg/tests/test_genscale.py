import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from snlevy.errors import DomainError
from snlevy.genscale import (
    LevelWeights,
    gen_w,
    gen_w_det,
    gen_w_linear_system,
    gen_w_log,
    gen_w_recursive,
    gen_z,
    gen_z_det,
    gen_z_log,
    gen_z_recursive,
)
from snlevy.model import LevyModel
from snlevy.scale import ScaleContext


@pytest.fixture
def ctx0(std_brownian):
    return ScaleContext(std_brownian, 0.0)


@pytest.fixture
def ctx05(std_brownian):
    return ScaleContext(std_brownian, 0.5)


class TestHandValues:
    def test_one_level(self, ctx0):
        lw = LevelWeights(levels=(1.0,), weights=(1.0,), q=0.0)
        # W(1.5) + W(0.5) W(1) = 3 + 1*2 = 5 with W(x) = 2x
        assert gen_w_recursive(lw, ctx0, 1.5, 0.0) == pytest.approx(5.0)

    def test_two_levels(self, ctx0):
        lw = LevelWeights(levels=(1.0, 2.0), weights=(1.0, 1.0), q=0.0)
        assert gen_w_recursive(lw, ctx0, 3.0, 0.0) == pytest.approx(30.0)
        assert gen_w_det(lw, ctx0, 3.0, 0.0) == pytest.approx(30.0)
        assert gen_w(lw, ctx0, 3.0, 0.0) == pytest.approx(30.0)

    def test_two_level_vector(self, ctx0):
        lw = LevelWeights(levels=(1.0, 2.0), weights=(1.0, 1.0), q=0.0)
        v = gen_w_linear_system(lw, ctx0, 0.0)
        assert v == pytest.approx([2.0, 8.0])

    def test_vector_above_levels_is_zero(self, ctx0):
        lw = LevelWeights(levels=(1.0, 2.0), weights=(1.0, 1.0), q=0.0)
        assert gen_w_linear_system(lw, ctx0, 2.5) == pytest.approx([0.0, 0.0])

    def test_z_one_level(self, ctx05):
        # cosh(2) + 2 sinh(1) cosh(1) = e^2
        lw = LevelWeights(levels=(1.0,), weights=(1.0,), q=0.5)
        assert gen_z_recursive(lw, ctx05, 2.0, 0.0) == pytest.approx(
            math.e**2, rel=1e-14)

    def test_z_below_everything(self, ctx05):
        lw = LevelWeights(levels=(1.0,), weights=(1.0,), q=0.5)
        assert gen_z_recursive(lw, ctx05, -0.5, 0.0) == 1.0

    def test_all_weights_zero_collapse(self, ctx05):
        lw = LevelWeights(levels=(0.7, 1.4), weights=(0.0, 0.0), q=0.5)
        assert gen_w(lw, ctx05, 1.7, 0.2) == pytest.approx(ctx05.w(1.5))
        assert gen_z(lw, ctx05, 1.7, 0.2) == pytest.approx(ctx05.z(1.5))

    def test_det_matrix_example(self, ctx0):
        # the 3x3 bordered matrix [[6,4,2],[-2,1,0],[-4,-2,1]] has det 30
        lw = LevelWeights(levels=(1.0, 2.0), weights=(1.0, 1.0), q=0.0)
        from snlevy.genscale import gen_matrices

        mats = gen_matrices(lw, ctx0)
        assert mats.sigma == pytest.approx(np.array([[0.0, 0.0], [2.0, 0.0]]))
        assert mats.alpha(ctx0, 3.0) == pytest.approx([4.0, 2.0])
        assert mats.beta(ctx0, 0.0) == pytest.approx([2.0, 4.0])

    def test_n1_det_reduces_to_two_by_two(self, ctx05):
        lw = LevelWeights(levels=(1.0,), weights=(0.8,), q=0.5)
        x, y = 1.9, 0.1
        direct = ctx05.w(x - y) + 0.8 * ctx05.w(x - 1.0) * ctx05.w(1.0 - y)
        assert gen_w_det(lw, ctx05, x, y) == pytest.approx(direct, rel=1e-14)


class TestValidation:
    def test_levels_must_increase(self):
        with pytest.raises(DomainError):
            LevelWeights(levels=(1.0, 1.0), weights=(1.0, 1.0), q=0.0)
        with pytest.raises(DomainError):
            LevelWeights(levels=(1.0, 1.0 + 5e-13), weights=(1.0, 1.0), q=0.0)

    def test_negative_weight_rejected(self):
        with pytest.raises(DomainError):
            LevelWeights(levels=(1.0,), weights=(-0.1,), q=0.0)

    def test_level_cap(self):
        levels = tuple(np.arange(65, dtype=float))
        with pytest.raises(DomainError):
            LevelWeights(levels=levels, weights=(1.0,) * 65, q=0.0)

    def test_q_mismatch_rejected(self, ctx05):
        lw = LevelWeights(levels=(1.0,), weights=(1.0,), q=0.4)
        with pytest.raises(DomainError):
            gen_w(lw, ctx05, 1.0, 0.0)

    def test_z_needs_levels_above_c(self, ctx05):
        lw = LevelWeights(levels=(1.0,), weights=(1.0,), q=0.5)
        with pytest.raises(DomainError):
            gen_z(lw, ctx05, 2.0, 1.5)


@settings(max_examples=40, deadline=None)
@given(
    n=st.integers(1, 6),
    seed=st.integers(0, 10_000),
    q=st.floats(0.0, 2.0),
)
def test_three_way_agreement(n, seed, q):
    rng = np.random.default_rng(seed)
    model = LevyModel(sigma=1.0, gamma=float(rng.uniform(-1.0, 1.0)))
    ctx = ScaleContext(model, q)
    levels = np.sort(rng.uniform(0.2, 2.8, size=n))
    if np.any(np.diff(levels) < 0.03):
        return
    lw = LevelWeights(levels=tuple(levels), weights=tuple(rng.uniform(0, 2, n)),
                      q=q)
    y = float(rng.uniform(-0.5, levels[0] - 0.02))
    x = float(rng.uniform(y, 3.2))
    a = gen_w_recursive(lw, ctx, x, y)
    b = gen_w_det(lw, ctx, x, y)
    c = gen_w(lw, ctx, x, y)
    scale = max(abs(a), 1e-300)
    assert abs(a - b) / scale < 1e-10
    assert abs(a - c) / scale < 1e-10


class TestStructuralProperties:
    def test_splitting_property(self, ctx05, rng):
        # levels strictly above the first argument do not affect GW(a, c)
        q = 0.5
        levels = (0.5, 1.0, 1.8, 2.4)
        weights = (0.7, 1.1, 0.4, 2.0)
        lw_full = LevelWeights(levels=levels, weights=weights, q=q)
        a, c = 1.3, 0.0
        lw_low = LevelWeights(levels=levels[:2], weights=weights[:2], q=q)
        assert gen_w(lw_full, ctx05, a, c) == pytest.approx(
            gen_w(lw_low, ctx05, a, c), rel=1e-14)
        # levels at or below a do not affect GW(b, a)
        b = 3.0
        lw_high = LevelWeights(levels=levels[2:], weights=weights[2:], q=q)
        assert gen_w(lw_full, ctx05, b, a) == pytest.approx(
            gen_w(lw_high, ctx05, b, a), rel=1e-14)

    def test_monotone_in_weights(self, ctx05):
        q = 0.5
        base = gen_w(LevelWeights((0.6, 1.2), (0.5, 0.5), q), ctx05, 2.0, 0.0)
        for k in range(2):
            w = [0.5, 0.5]
            w[k] = 0.9
            bumped = gen_w(LevelWeights((0.6, 1.2), tuple(w), q), ctx05, 2.0, 0.0)
            assert bumped >= base
        assert base >= ctx05.w(2.0)

    def test_level_on_query_point_is_harmless(self, ctx05):
        # a_k == x contributes nothing because W(0) = 0
        q = 0.5
        lw = LevelWeights(levels=(1.0, 2.0), weights=(1.0, 1.0), q=q)
        lw_lo = LevelWeights(levels=(1.0,), weights=(1.0,), q=q)
        assert gen_w(lw, ctx05, 2.0, 0.0) == pytest.approx(
            gen_w(lw_lo, ctx05, 2.0, 0.0), rel=1e-14)


class TestLogRoute:
    def test_log_matches_direct(self, model_zoo, rng):
        for m in model_zoo:
            q = float(rng.uniform(0.0, 1.5))
            ctx = ScaleContext(m, q)
            lw = LevelWeights(levels=(0.5, 1.1, 1.7), weights=(0.8, 0.0, 1.4),
                              q=q)
            for x, y in ((2.2, 0.0), (1.4, -0.3), (0.3, 0.0)):
                direct = gen_w(lw, ctx, x, y)
                lg = gen_w_log(lw, ctx, x, y)
                if direct == 0.0:
                    assert lg == -math.inf
                else:
                    assert math.exp(lg) == pytest.approx(direct, rel=1e-12)
                dz = gen_z(lw, ctx, x, -0.5)
                assert math.exp(gen_z_log(lw, ctx, x, -0.5)) == pytest.approx(
                    dz, rel=1e-12)

    def test_log_route_wide_corridor(self, std_brownian):
        # far beyond double-precision overflow of W itself
        q = 0.5
        ctx = ScaleContext(std_brownian, q)
        lw = LevelWeights(levels=(1.0,), weights=(1.0,), q=q)
        lg = gen_w_log(lw, ctx, 2.0, -2000.0)
        expected = np.logaddexp(ctx.log_w(2002.0),
                                ctx.log_w(1.0) + ctx.log_w(2001.0))
        assert lg == pytest.approx(expected, abs=1e-10)
