import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hdrvid.isp import (IspConfig, apply_ccm, demosaic_pack4, encode_display,
                        raw_to_srgb_hdr, srgb_eotf, srgb_oetf)
from hdrvid.rawcore import RadianceImage


def _bilinear_oracle(plane, y, x):
    """Clamp-to-edge bilinear lookup, written out longhand."""
    h, w = plane.shape
    y0, x0 = int(np.floor(y)), int(np.floor(x))
    fy, fx = y - y0, x - x0
    def at(yy, xx):
        return plane[min(max(yy, 0), h - 1), min(max(xx, 0), w - 1)]
    top = at(y0, x0) * (1 - fx) + at(y0, x0 + 1) * fx
    bot = at(y0 + 1, x0) * (1 - fx) + at(y0 + 1, x0 + 1) * fx
    return top * (1 - fy) + bot * fy


class TestDemosaic:
    def test_constant_stays_constant_exactly(self):
        # interpolation weights here are only 0, 0.5, 1: exact in float32
        img = RadianceImage(np.full((4, 4, 4), 0.37, np.float32), "raw4")
        out = demosaic_pack4(img)
        assert out.layout == "rgb3"
        assert out.data.shape == (8, 8, 3)
        np.testing.assert_array_equal(out.data, np.float32(0.37))

    def test_red_only_input(self):
        data = np.zeros((4, 4, 4), np.float32)
        data[:, :, 0] = 1.0
        out = demosaic_pack4(RadianceImage(data, "raw4"))
        np.testing.assert_allclose(out.data[:, :, 0], 1.0, atol=1e-6)
        assert not out.data[:, :, 1:].any()

    def test_matches_bruteforce_bilinear_oracle(self, rng):
        img = RadianceImage(rng.uniform(0, 1, (3, 3, 4)).astype(np.float32), "raw4")
        out = demosaic_pack4(img).data
        sites = ((0, 0), (0, 1), (1, 0), (1, 1))
        for Y in range(6):
            for X in range(6):
                per_plane = [
                    _bilinear_oracle(img.data[:, :, p].astype(np.float64),
                                     (Y - dy) / 2.0, (X - dx) / 2.0)
                    for p, (dy, dx) in enumerate(sites)]
                expect = (per_plane[0], 0.5 * (per_plane[1] + per_plane[2]), per_plane[3])
                np.testing.assert_allclose(out[Y, X], expect, atol=1e-6)

    def test_linear_ramp_interpolates_linearly(self):
        # a ramp in plane coordinates stays a ramp away from clamped borders
        xs = np.arange(8, dtype=np.float32)
        data = np.tile(xs[None, :, None], (8, 1, 4)) / 16.0
        out = demosaic_pack4(RadianceImage(data, "raw4")).data
        interior = out[4, 2:-2, 0]
        diffs = np.diff(interior.astype(np.float64))
        np.testing.assert_allclose(diffs, diffs[0], atol=1e-6)

    def test_rejects_rgb_layout(self):
        img = RadianceImage(np.zeros((2, 2, 3), np.float32), "rgb3")
        with pytest.raises(ValueError, match="raw4"):
            demosaic_pack4(img)


class TestCcm:
    def test_identity(self, rng):
        img = RadianceImage(rng.uniform(0, 2, (3, 3, 3)).astype(np.float32), "rgb3")
        out = apply_ccm(img, np.eye(3))
        np.testing.assert_array_equal(out.data, img.data)

    @given(st.floats(min_value=0.0, max_value=4.0))
    @settings(max_examples=25, deadline=None)
    def test_gray_invariant_under_row_sum_one(self, v):
        ccm = np.array([[1.2, -0.1, -0.1], [-0.2, 1.3, -0.1], [0.0, -0.3, 1.3]])
        img = RadianceImage(np.full((1, 1, 3), v, np.float32), "rgb3")
        out = apply_ccm(img, ccm)
        np.testing.assert_allclose(out.data, v, atol=1e-5 * max(v, 1.0))

    def test_matches_scalar_oracle(self, rng):
        ccm = np.array([[0.9, 0.2, -0.1], [0.1, 0.8, 0.1], [-0.2, 0.4, 0.8]])
        px = rng.uniform(0, 2, (2, 2, 3)).astype(np.float32)
        out = apply_ccm(RadianceImage(px, "rgb3"), ccm).data
        for y in range(2):
            for x in range(2):
                expect = [max(sum(ccm[r][c] * float(px[y, x, c]) for c in range(3)), 0.0)
                          for r in range(3)]
                np.testing.assert_allclose(out[y, x], expect, rtol=1e-5, atol=1e-6)

    def test_rejects_malformed_matrix(self):
        img = RadianceImage(np.zeros((1, 1, 3), np.float32), "rgb3")
        with pytest.raises(ValueError, match="3x3"):
            apply_ccm(img, np.eye(2))


class TestEncodeDisplay:
    def test_endpoints(self):
        img = RadianceImage(np.array([[[0.0, 0.5, 3.0]]], np.float32), "rgb3")
        out = encode_display(img, IspConfig(oetf="none"), exposure_scale=2.0)
        np.testing.assert_allclose(out.data[0, 0], [0.0, 1.0, 1.0])

    def test_gamma_oetf(self):
        img = RadianceImage(np.full((1, 1, 3), 0.5, np.float32), "rgb3")
        out = encode_display(img, IspConfig(oetf="gamma", gamma=2.2))
        np.testing.assert_allclose(out.data, 0.5 ** (1 / 2.2), atol=1e-6)

    def test_srgb_branch_continuity(self):
        # evaluate both branch formulas at the knee
        knee = 0.0031308
        lo = 12.92 * knee
        hi = 1.055 * knee ** (1 / 2.4) - 0.055
        assert abs(lo - hi) < 1e-6
        assert abs(srgb_oetf(np.array(knee)) - lo) < 1e-9

    def test_eotf_inverts_oetf(self):
        grid = np.linspace(0, 1, 257)
        np.testing.assert_allclose(srgb_eotf(srgb_oetf(grid)), grid, atol=1e-9)

    def test_rejects_bad_scale(self):
        img = RadianceImage(np.zeros((1, 1, 3), np.float32), "rgb3")
        with pytest.raises(ValueError, match="positive"):
            encode_display(img, exposure_scale=0.0)


class TestIspConfig:
    def test_rejects_bad_row_sums(self):
        with pytest.raises(ValueError, match="sum"):
            IspConfig(ccm=((1.0, 0.5, 0.0), (0.0, 1.0, 0.0), (0.0, 0.0, 1.0)))

    def test_rejects_unknown_oetf(self):
        with pytest.raises(ValueError, match="oetf"):
            IspConfig(oetf="pq")

    def test_json_round_trip(self, tmp_path):
        cfg = IspConfig(ccm=((0.9, 0.2, -0.1), (0.1, 0.8, 0.1), (-0.2, 0.4, 0.8)),
                        oetf="gamma", gamma=2.4)
        path = tmp_path / "isp.json"
        path.write_text('{"ccm": [[0.9,0.2,-0.1],[0.1,0.8,0.1],[-0.2,0.4,0.8]],'
                        ' "oetf": "gamma", "gamma": 2.4}')
        assert IspConfig.from_json(path) == cfg


def test_gray_world_stays_achromatic_through_chain():
    img = RadianceImage(np.full((6, 6, 4), 0.2, np.float32), "raw4")
    out = raw_to_srgb_hdr(img)
    np.testing.assert_allclose(out.data[:, :, 0], out.data[:, :, 1], atol=1e-6)
    np.testing.assert_allclose(out.data[:, :, 1], out.data[:, :, 2], atol=1e-6)
