import math

import numpy as np
import pytest
from hypothesis import given, settings

from conftest import gaussians, von_mises
from thermoreg import gaussian as gm
from thermoreg import regularization as reg
from thermoreg.errors import DomainError, ManifoldMismatchError
from thermoreg.gaussian import GaussianBelief
from thermoreg.geometry import Coords
from thermoreg.numerics import finite_diff_gradient
from thermoreg.regularization import PenaltyKind, PenaltySpec
from thermoreg.vonmises import VonMisesBelief


class TestSpec:
    def test_euclidean_needs_chart(self):
        with pytest.raises(DomainError):
            PenaltySpec(PenaltyKind.EUCLIDEAN, GaussianBelief(0, 1))

    def test_negative_weight(self):
        with pytest.raises(DomainError):
            PenaltySpec("fisher-rao", GaussianBelief(0, 1), -1.0)

    @pytest.mark.parametrize("text,kind", [("fr", PenaltyKind.FISHER_RAO), ("Fisher_Rao", PenaltyKind.FISHER_RAO), ("ridge", PenaltyKind.EUCLIDEAN)])
    def test_parse(self, text, kind):
        assert PenaltyKind.parse(text) is kind

    def test_vonmises_rejects_gaussian_chart(self):
        with pytest.raises(DomainError):
            PenaltySpec("euclidean", VonMisesBelief(0, 1), 1.0, Coords.MU_TAU)


class TestPenaltyValue:
    @pytest.mark.parametrize("kind,coords", [("euclidean", "mu-tau"), ("fisher-rao", None)])
    def test_zero_at_reference(self, kind, coords):
        ref = GaussianBelief(0.3, 2.0)
        assert reg.penalty_value(PenaltySpec(kind, ref, 1.0, coords), ref) == 0.0

    def test_euclidean_sigma(self):
        spec = PenaltySpec("euclidean", GaussianBelief.from_sigma(0.0, 1.0), 1.0, Coords.MU_SIGMA)
        assert reg.penalty_value(spec, GaussianBelief.from_sigma(1.0, 1.0)) == 1.0

    def test_fisher_rao_pair(self):
        spec = PenaltySpec("fisher-rao", GaussianBelief.from_sigma(0.0, 1.0))
        assert reg.penalty_value(spec, GaussianBelief.from_sigma(1.0, 1.0)) == pytest.approx(0.960906, abs=1e-6)

    def test_mismatch(self):
        with pytest.raises(ManifoldMismatchError):
            reg.penalty_value(PenaltySpec("fisher-rao", GaussianBelief(0, 1)), VonMisesBelief(0, 1))

    def test_euclidean_chart_dependence(self):
        ref, q = GaussianBelief(0.0, 1.0), GaussianBelief(0.0, 4.0)
        a = reg.penalty_value(PenaltySpec("euclidean", ref, 1.0, "mu-tau"), q)
        b = reg.penalty_value(PenaltySpec("euclidean", ref, 1.0, "mu-sigma"), q)
        assert abs(a - b) / min(a, b) > 0.1

    @given(gaussians(), gaussians())
    def test_fisher_rao_chart_independent(self, q, ref):
        a = reg.penalty_value(PenaltySpec("fisher-rao", ref, 1.0, "mu-tau"), q)
        b = reg.penalty_value(PenaltySpec("fisher-rao", ref, 1.0, "mu-sigma"), q)
        assert a == b

    @given(gaussians(), gaussians())
    def test_nonnegative(self, q, ref):
        for spec in (PenaltySpec("fisher-rao", ref), PenaltySpec("euclidean", ref, 2.0, "mu-tau")):
            assert reg.penalty_value(spec, q) >= 0.0

    def test_vonmises_wraps(self):
        spec = PenaltySpec("euclidean", VonMisesBelief(3.0, 1.0), 1.0, "dir-kappa")
        d = 2 * math.pi - 6.0
        assert reg.penalty_value(spec, VonMisesBelief(-3.0, 1.0)) == pytest.approx(d * d, rel=1e-12)


class TestPenaltyGradient:
    def test_zero_at_reference(self):
        ref = GaussianBelief(0.3, 2.0)
        for spec in (PenaltySpec("fisher-rao", ref), PenaltySpec("euclidean", ref, 1.0, "mu-sigma")):
            np.testing.assert_allclose(reg.penalty_gradient(spec, ref), [0.0, 0.0], atol=1e-15)

    @given(gaussians(), gaussians())
    def test_euclidean_is_twice_delta(self, q, ref):
        spec = PenaltySpec("euclidean", ref, 1.0, "mu-tau")
        np.testing.assert_allclose(reg.penalty_gradient(spec, q), 2 * (np.array(q.coords()) - np.array(ref.coords())), rtol=1e-14)

    def test_fisher_rao_matches_finite_differences(self, rng):
        for _ in range(100):
            q = GaussianBelief(rng.uniform(-3, 3), math.exp(rng.uniform(-2, 2)))
            ref = GaussianBelief(rng.uniform(-3, 3), math.exp(rng.uniform(-2, 2)))
            spec = PenaltySpec("fisher-rao", ref, 1.0)
            x = np.array([q.mu, q.tau])
            fd = finite_diff_gradient(lambda c: reg.penalty_value(spec, GaussianBelief(c[0], c[1])), x, 1e-6 * np.maximum(1, np.abs(x)))
            np.testing.assert_allclose(reg.penalty_gradient(spec, q, Coords.MU_TAU), fd, atol=1e-5, rtol=1e-6)

    @given(gaussians(), gaussians())
    def test_covector_charts_agree(self, q, ref):
        spec = PenaltySpec("fisher-rao", ref)
        g_tau = reg.penalty_gradient(spec, q, Coords.MU_TAU)
        g_sigma = reg.penalty_gradient(spec, q, Coords.MU_SIGMA)
        np.testing.assert_allclose(reg.convert_covector(q, g_sigma, Coords.MU_SIGMA, Coords.MU_TAU), g_tau, rtol=1e-12, atol=1e-300)

    @settings(max_examples=8)
    @given(von_mises(), von_mises())
    def test_vonmises_gradient_is_descent(self, q, ref):
        spec = PenaltySpec("fisher-rao", ref, 1.0)
        g = reg.penalty_gradient(spec, q)
        if np.linalg.norm(g) < 1e-6:
            return
        new = reg.natural_gradient_step(q, g, 1e-3)
        assert reg.penalty_value(spec, new) < reg.penalty_value(spec, q)

    def test_vonmises_at_chart_boundary(self):
        spec = PenaltySpec("fisher-rao", VonMisesBelief(0.0, 1.0))
        g = reg.penalty_gradient(spec, VonMisesBelief(0.5, 1e-6))
        assert np.all(np.isfinite(g)) and g[1] < 0


class TestNaturalStep:
    def test_zero_gradient(self):
        q = GaussianBelief(0.2, 3.0)
        assert reg.natural_gradient_step(q, [0.0, 0.0], 0.1) == q

    def test_unit_precision(self):
        q = GaussianBelief(0.0, 1.0)
        new = reg.natural_gradient_step(q, [0.3, -0.2], 0.01)
        np.testing.assert_allclose(new.coords(), [0.0 - 0.01 * 0.3, 1.0 - 0.01 * 2 * -0.2], rtol=1e-15)

    def test_reparametrization_covariance(self):
        q = GaussianBelief(0.4, 2.5)
        ref = GaussianBelief(-1.0, 0.7)
        spec = PenaltySpec("fisher-rao", ref)
        errs = []
        for lr in (1e-2, 1e-3):
            via_tau = reg.natural_gradient_step(q, reg.penalty_gradient(spec, q, Coords.MU_TAU), lr, Coords.MU_TAU)
            via_sigma = reg.natural_gradient_step(q, reg.penalty_gradient(spec, q, Coords.MU_SIGMA), lr, Coords.MU_SIGMA)
            errs.append(np.linalg.norm(np.subtract(via_tau.coords(Coords.MU_SIGMA), via_sigma.coords(Coords.MU_SIGMA))))
        # O(lr^2): a 10x smaller step shrinks the gap about 100x
        assert errs[0] < 1e-3
        assert errs[0] / errs[1] > 50

    def test_clamps(self):
        new, clamped = reg.project(np.array([0.0, -5.0]), Coords.MU_TAU, GaussianBelief(0, 1))
        assert clamped and new.tau == gm.TAU_MIN
        new, clamped = reg.project(np.array([0.0, -5.0]), Coords.DIR_KAPPA, VonMisesBelief(0, 1))
        assert clamped and new.kappa == 1e-6

    def test_rejects_lr(self):
        with pytest.raises(DomainError):
            reg.natural_gradient_step(GaussianBelief(0, 1), [1, 1], 0.0)

    def test_fisher_rao_descent_converges(self, rng):
        ref = GaussianBelief(0.5, 2.0)
        spec = PenaltySpec("fisher-rao", ref)
        for _ in range(50):
            q = GaussianBelief(rng.uniform(-3, 3), math.exp(rng.uniform(-3, 3)))
            for step in range(100_000):
                if gm.fisher_rao_distance(q, ref) <= 1e-4:
                    break
                q = reg.natural_gradient_step(q, reg.penalty_gradient(spec, q), 1e-2)
            assert gm.fisher_rao_distance(q, ref) <= 1e-4


class TestSuboptimality:
    @pytest.mark.parametrize("sigma,expected", [(1.0, 1.0), (2.0, 4.0), (0.1, 0.01)])
    def test_ratio(self, sigma, expected):
        assert reg.suboptimality_ratio(0.0, 1.3, sigma) == pytest.approx(expected, rel=1e-12)

    def test_independent_of_separation(self):
        vals = [reg.suboptimality_ratio(0.0, d, 0.7) for d in (1e-3, 0.5, 40.0)]
        np.testing.assert_allclose(vals, vals[0], rtol=1e-12)

    def test_zero_separation(self):
        with pytest.raises(DomainError):
            reg.suboptimality_ratio(1.0, 1.0, 1.0)
