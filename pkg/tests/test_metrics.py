import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hdrvid.metrics import (TonemapParams, dynamic_range_gain, evaluate_pair,
                            l1_tonemapped, mu_tonemap, psnr_mu)


class TestMuTonemap:
    def test_fixes_zero_and_peak_exactly(self):
        params = TonemapParams(mu=5000.0, normalization=2.5)
        assert mu_tonemap(np.array(0.0), params) == 0.0
        assert abs(mu_tonemap(np.array(2.5), params) - 1.0) < 1e-12

    def test_default_mu_is_5000(self):
        assert TonemapParams().mu == 5000.0

    def test_reference_value_at_one_percent(self):
        # direct evaluation of log(1 + 5000*0.01) / log(1 + 5000)
        params = TonemapParams(mu=5000.0, normalization=1.0)
        direct = np.log(51.0) / np.log(5001.0)
        got = mu_tonemap(np.array(0.01), params)
        assert got == pytest.approx(direct, abs=1e-12)
        assert got == pytest.approx(0.4616229, abs=1e-6)

    @given(st.floats(min_value=0.0, max_value=1.0), st.floats(min_value=0.0, max_value=1.0))
    @settings(max_examples=50, deadline=None)
    def test_strictly_monotone(self, a, b):
        params = TonemapParams()
        ta, tb = mu_tonemap(np.array(a), params), mu_tonemap(np.array(b), params)
        if a == b:
            assert ta == tb
        elif a < b:
            # adjacent float64 inputs may collapse to one output value
            assert ta < tb if b - a > 1e-12 else ta <= tb

    def test_clips_above_normalization(self):
        params = TonemapParams(normalization=1.0)
        assert mu_tonemap(np.array(5.0), params) == pytest.approx(1.0, abs=1e-12)

    def test_rejects_negative_values(self):
        with pytest.raises(ValueError):
            mu_tonemap(np.array(-0.5), TonemapParams())


class TestL1Tonemapped:
    def test_identical_is_zero(self, rng):
        img = rng.uniform(0, 1, (8, 8)).astype(np.float64)
        assert l1_tonemapped(img, img) == 0.0

    def test_zero_prediction_against_constant(self):
        params = TonemapParams(normalization=1.0)
        gt = np.full((4, 4), 0.25)
        c = float(mu_tonemap(np.array(0.25), params))
        assert l1_tonemapped(np.zeros((4, 4)), gt, params) == pytest.approx(c)

    def test_matches_double_loop_oracle(self, rng):
        pred = rng.uniform(0, 1, (5, 5))
        gt = rng.uniform(0, 1, (5, 5))
        params = TonemapParams(normalization=1.0)
        total = 0.0
        for y in range(5):
            for x in range(5):
                tp = np.log1p(5000 * pred[y, x]) / np.log1p(5000)
                tg = np.log1p(5000 * gt[y, x]) / np.log1p(5000)
                total += abs(tp - tg)
        assert l1_tonemapped(pred, gt, params) == pytest.approx(total / 25, rel=1e-12)

    def test_rejects_shape_mismatch(self):
        with pytest.raises(ValueError, match="mismatch"):
            l1_tonemapped(np.zeros((2, 2)), np.zeros((3, 3)))


class TestPsnrMu:
    def test_identical_hits_cap(self, rng):
        img = rng.uniform(0, 1, (8, 8))
        assert psnr_mu(img, img) == 99.0

    def test_uniform_tonemapped_error_of_point_one(self):
        # build values whose tonemapped difference is exactly 0.1
        params = TonemapParams(mu=5000.0, normalization=1.0)
        t_gt, t_pred = 0.45, 0.55
        inv = lambda t: (np.power(1.0 + params.mu, t) - 1.0) / params.mu
        gt = np.full((16, 16), inv(t_gt))
        pred = np.full((16, 16), inv(t_pred))
        assert psnr_mu(pred, gt, params) == pytest.approx(20.0, abs=1e-6)

    def test_monotone_under_growing_noise(self):
        rng = np.random.default_rng(0)
        gt = rng.uniform(0.1, 1.0, (128, 128))
        params = TonemapParams(normalization=1.0)
        scores = []
        for sigma in (1e-3, 1e-2, 1e-1):
            noisy = np.clip(gt + rng.normal(0, sigma, gt.shape), 0, None)
            scores.append(psnr_mu(noisy, gt, params))
        assert scores[0] > scores[1] > scores[2]

    def test_symmetric_with_shared_params(self, rng):
        a = rng.uniform(0, 1, (8, 8))
        b = rng.uniform(0, 1, (8, 8))
        params = TonemapParams(normalization=1.0)
        assert psnr_mu(a, b, params) == pytest.approx(psnr_mu(b, a, params), rel=1e-12)

    def test_invariant_to_joint_permutation(self, rng):
        a = rng.uniform(0, 1, 64)
        b = rng.uniform(0, 1, 64)
        perm = rng.permutation(64)
        params = TonemapParams(normalization=1.0)
        assert psnr_mu(a, b, params) == pytest.approx(
            psnr_mu(a[perm], b[perm], params), rel=1e-12)


class TestDynamicRangeGain:
    def test_ratio_eight_near_18db(self):
        assert dynamic_range_gain(8.0) == pytest.approx(18.062, abs=1e-3)

    def test_ratio_ten_is_20db(self):
        assert dynamic_range_gain(10.0) == pytest.approx(20.0, abs=1e-12)

    def test_rejects_unit_ratio(self):
        with pytest.raises(ValueError):
            dynamic_range_gain(1.0)


class TestEvaluatePair:
    def test_bundle_fields(self, rng):
        gt = rng.uniform(0, 1, (8, 8))
        out = evaluate_pair(gt, gt)
        assert out["psnr_mu"] == 99.0
        assert out["l1_mu"] == 0.0
        assert out["params"]["mu"] == 5000.0
        assert 0.0 <= out["clip_fraction"] <= 1.0
