import math

import numpy as np
import pytest

from snlevy.errors import DomainError, PermanentalExistenceError
from snlevy.laws import Corridor, lt_resolvent
from snlevy.model import CompoundPoissonExp, LevyModel
from snlevy.permanental import (
    PotentialKernel,
    isomorphism_check,
    logderiv_identity_check,
    loop_soup_functional,
    loop_soup_routes,
    permanental_laplace,
    potential_density,
    tilted_lt_transform,
)


class TestPotentialDensity:
    def test_hand_value(self, std_brownian):
        assert potential_density(std_brownian, 0.0, 2.0, 0.0, 1.0, 1.0) == \
            pytest.approx(1.0, rel=1e-12)

    def test_boundary_decay(self, std_brownian):
        assert potential_density(std_brownian, 0.0, 2.0, 0.0, 1e-9, 1.0) == \
            pytest.approx(0.0, abs=1e-8)
        assert potential_density(std_brownian, 0.0, 2.0, 0.0, 1.0,
                                 2.0 - 1e-9) == pytest.approx(0.0, abs=1e-8)

    def test_out_of_range(self, std_brownian):
        with pytest.raises(DomainError):
            potential_density(std_brownian, 0.0, 2.0, 0.0, 2.5, 1.0)

    def test_equals_resolvent_at_p0(self, model_zoo, rng):
        for m in model_zoo:
            q = float(rng.uniform(0.0, 1.0))
            x, y = sorted(rng.uniform(0.1, 1.9, size=2))
            cor = Corridor(c=0.0, b=2.0, a=1.0, x=x, q=q, p=0.0)
            assert potential_density(m, q, 2.0, 0.0, x, y) == pytest.approx(
                lt_resolvent(m, cor, y), rel=1e-10, abs=1e-12)

    def test_diagonal_value(self, model_zoo):
        # g(a, a) = W(a-c) W(b-a) / W(b-c)
        from snlevy.scale import ScaleContext

        for m in model_zoo:
            ctx = ScaleContext(m, 0.4)
            g = potential_density(m, 0.4, 2.0, 0.0, 0.8, 0.8)
            want = ctx.w(0.8) * ctx.w(1.2) / ctx.w(2.0)
            assert g == pytest.approx(want, rel=1e-10)


class TestPermanentalLaplace:
    def test_single_level_value(self, std_brownian):
        k = PotentialKernel(std_brownian, 0.0, 2.0, 0.0, levels=(1.0,))
        assert permanental_laplace(k, (1.0,)) == pytest.approx(
            2.0 ** -0.5, rel=1e-12)

    def test_zero_weights(self, std_brownian):
        k = PotentialKernel(std_brownian, 0.0, 2.0, 0.0, levels=(0.5, 1.5))
        assert permanental_laplace(k, (0.0, 0.0)) == 1.0

    def test_beta_exponent(self, std_brownian):
        k = PotentialKernel(std_brownian, 0.0, 2.0, 0.0, levels=(1.0,))
        assert permanental_laplace(k, (1.0,), beta=1.0) == pytest.approx(0.5)

    def test_existence_error_reports_determinant(self, std_brownian):
        k = PotentialKernel(std_brownian, 0.0, 2.0, 0.0, levels=(1.0,))
        k.G = np.array([[-2.0]])  # forged kernel: det(I + G) < 0
        with pytest.raises(PermanentalExistenceError) as info:
            permanental_laplace(k, (1.0,))
        assert info.value.determinant == pytest.approx(-1.0)

    def test_det_equals_scale_ratio(self, std_brownian):
        # n = 1 worked case: det(I + Lambda G) = GW(b,c)/W(b-c) = 8/4
        k = PotentialKernel(std_brownian, 0.0, 2.0, 0.0, levels=(1.0,))
        rep = isomorphism_check(k, 0.5, (1.0,))
        assert rep.ratio_rhs == pytest.approx(2.0, rel=1e-12)
        assert rep.ratio_lhs == pytest.approx(2.0, rel=1e-12)


class TestTiltedTransform:
    def test_unit_at_zero_weights(self, std_brownian):
        k = PotentialKernel(std_brownian, 0.0, 2.0, 0.0, levels=(0.5,))
        assert tilted_lt_transform(k, 1.0, (0.0,)) == pytest.approx(
            1.0, rel=1e-12)

    def test_monotone_in_weights(self, std_brownian):
        k = PotentialKernel(std_brownian, 0.3, 2.0, 0.0, levels=(0.5, 1.2))
        vals = [tilted_lt_transform(k, 0.9, (w, 0.7)) for w in
                (0.0, 0.5, 2.0)]
        assert all(u > v for u, v in zip(vals, vals[1:]))

    def test_matches_bordered_determinant(self, model_zoo, rng):
        # both sides of the tilted-law identity: GW ratio route vs the
        # bordered determinant over det(I + Lambda G) and g(a, a)
        for m in model_zoo:
            q = float(rng.uniform(0.0, 1.0))
            levels = np.sort(rng.uniform(0.2, 1.8, size=3))
            if np.any(np.diff(levels) < 0.05):
                continue
            w = rng.uniform(0.0, 1.5, size=3)
            a = float(rng.uniform(0.2, 1.8))
            k = PotentialKernel(m, q, 2.0, 0.0, levels=levels)
            rep = isomorphism_check(k, a, w)
            lhs = tilted_lt_transform(k, a, w)
            rhs = rep.bordered_rhs / (rep.ratio_rhs * k.eval(a, a))
            assert lhs == pytest.approx(rhs, rel=1e-9)


class TestIsomorphismIdentities:
    def test_random_instances(self, model_zoo, rng):
        for m in model_zoo:
            for n in (1, 3, 6):
                q = float(rng.uniform(0.0, 1.2))
                levels = np.sort(rng.uniform(0.15, 1.85, size=n))
                if np.any(np.diff(levels) < 0.04):
                    continue
                w = rng.uniform(0.0, 2.0, size=n)
                a = float(rng.uniform(0.2, 1.8))
                k = PotentialKernel(m, q, 2.0, 0.0, levels=levels)
                rep = isomorphism_check(k, a, w)
                assert rep.abs_gap <= 1e-9

    def test_splitting_through_border_level(self, std_brownian):
        # the border level a sitting between interior levels exercises the
        # block split of the bordered determinant
        k = PotentialKernel(std_brownian, 0.2, 2.0, 0.0,
                            levels=(0.4, 0.9, 1.4))
        for a in (0.2, 0.65, 1.1, 1.7):
            rep = isomorphism_check(k, a, (0.8, 1.1, 0.3))
            assert rep.abs_gap <= 1e-10


class TestLoopSoup:
    def test_worked_value(self, std_brownian):
        k = PotentialKernel(std_brownian, 0.0, 2.0, 0.0, levels=(1.0,))
        val = loop_soup_functional(k, (1.0,))
        assert val == pytest.approx(math.log(2.0), abs=1e-12)

    def test_zero_weights(self, std_brownian):
        k = PotentialKernel(std_brownian, 0.0, 2.0, 0.0, levels=(1.0,))
        assert loop_soup_functional(k, (0.0,)) == pytest.approx(0.0, abs=1e-14)

    def test_routes_agree(self, model_zoo, rng):
        for m in model_zoo:
            levels = (0.4, 1.0, 1.6)
            w = rng.uniform(0.0, 2.0, size=3)
            k = PotentialKernel(m, 0.3, 2.0, 0.0, levels=levels)
            via_det, via_scale = loop_soup_routes(k, w)
            assert via_det == pytest.approx(via_scale, abs=1e-10)
            assert via_scale >= -1e-12

    def test_monotone_and_vanishing_in_q(self, std_brownian):
        # decays like g(a,a) ~ 1/sqrt(2q), so push q far out for the limit
        vals = []
        for q in (0.0, 1.0, 25.0, 1e3, 1e6):
            k = PotentialKernel(std_brownian, q, 2.0, 0.0, levels=(1.0,))
            vals.append(loop_soup_functional(k, (1.0,)))
        assert all(u > v for u, v in zip(vals, vals[1:]))
        assert vals[-1] < 1e-3

    def test_monotone_in_weights(self, std_brownian):
        k = PotentialKernel(std_brownian, 0.1, 2.0, 0.0, levels=(0.7, 1.3))
        v0 = loop_soup_functional(k, (0.5, 0.5))
        v1 = loop_soup_functional(k, (0.5, 1.5))
        assert v1 > v0


class TestLogDerivative:
    def test_hand_value(self, std_brownian):
        rep = logderiv_identity_check(std_brownian, 0.0, 1.0, 0.0)
        assert rep.lhs == pytest.approx(1.0 / 3.0, abs=1e-10)
        assert rep.rhs == pytest.approx(1.0 / 3.0, abs=1e-12)

    def test_small_interval_vanishes(self, std_brownian):
        rep = logderiv_identity_check(std_brownian, 0.5, 1e-3, 0.0)
        assert rep.lhs == pytest.approx(0.0, abs=1e-4)
        assert rep.rhs == pytest.approx(0.0, abs=1e-4)

    def test_default_quadrature_tolerance(self, model_zoo):
        for m in model_zoo:
            rep = logderiv_identity_check(m, 0.5, 2.0, 0.0)
            assert rep.gap <= 1e-6 * max(1.0, abs(rep.rhs))


class TestKernelValidation:
    def test_levels_inside(self, std_brownian):
        with pytest.raises(DomainError):
            PotentialKernel(std_brownian, 0.0, 2.0, 0.0, levels=(2.5,))

    def test_levels_increasing(self, std_brownian):
        with pytest.raises(DomainError):
            PotentialKernel(std_brownian, 0.0, 2.0, 0.0, levels=(1.0, 1.0))
