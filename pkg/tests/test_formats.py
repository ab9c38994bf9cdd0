import json
import struct

import numpy as np
import pytest

from hdrvid.formats import (CodecError, read_bayer_frame, read_pfm, read_pgm16,
                            read_png, read_radiance_pfm, write_bayer_frame,
                            write_pfm, write_pgm16, write_png,
                            write_radiance_pfm)
from hdrvid.rawcore import RadianceImage, SRGBImage
from tests.conftest import make_frame


class TestPfm:
    def test_round_trip_gray_bit_exact(self, tmp_path, rng):
        data = rng.standard_normal((7, 5)).astype(np.float32)
        path = tmp_path / "x.pfm"
        write_pfm(path, data)
        back, scale = read_pfm(path)
        assert scale == 1.0
        np.testing.assert_array_equal(back, data)

    def test_round_trip_rgb_bit_exact(self, tmp_path, rng):
        data = rng.standard_normal((4, 6, 3)).astype(np.float32)
        path = tmp_path / "x.pfm"
        write_pfm(path, data)
        back, _ = read_pfm(path)
        np.testing.assert_array_equal(back, data)

    def test_reader_decodes_independently_written_file(self, tmp_path):
        # independent writer: struct-packed floats, bottom row first
        rows = [[1.5, -2.25, 3.0], [0.0, 0.5, -1.0]]  # top row first
        path = tmp_path / "ext.pfm"
        with open(path, "wb") as f:
            f.write(b"Pf\n3 2\n-1.000000\n")
            for row in reversed(rows):
                for v in row:
                    f.write(struct.pack("<f", v))
        back, scale = read_pfm(path)
        np.testing.assert_array_equal(back, np.array(rows, np.float32))
        assert scale == 1.0

    def test_golden_bytes(self, tmp_path):
        # 1x1 PF pixel (1.0, 0.5, 0.25), assembled by hand
        payload = b"PF\n1 1\n-1.0\n" + struct.pack("<3f", 1.0, 0.5, 0.25)
        path = tmp_path / "golden.pfm"
        path.write_bytes(payload)
        back, _ = read_pfm(path)
        np.testing.assert_array_equal(back, np.array([[[1.0, 0.5, 0.25]]], np.float32))

    def test_rejects_big_endian_scale(self, tmp_path):
        path = tmp_path / "bad.pfm"
        path.write_bytes(b"Pf\n1 1\n1.0\n" + struct.pack("<f", 0.0))
        with pytest.raises(CodecError, match="scale"):
            read_pfm(path)

    def test_rejects_truncated_payload(self, tmp_path):
        path = tmp_path / "short.pfm"
        path.write_bytes(b"Pf\n2 2\n-1.0\n" + struct.pack("<f", 0.0))
        with pytest.raises(CodecError, match="truncated"):
            read_pfm(path)

    def test_rejects_bad_magic(self, tmp_path):
        path = tmp_path / "bad.pfm"
        path.write_bytes(b"P5\n1 1\n-1.0\n\x00\x00\x00\x00")
        with pytest.raises(CodecError, match="magic"):
            read_pfm(path)


class TestRadiancePfm:
    def test_raw4_stack_round_trip(self, tmp_path, rng):
        img = RadianceImage(rng.uniform(0, 3, (6, 5, 4)).astype(np.float32), "raw4")
        path = tmp_path / "r.pfm"
        write_radiance_pfm(path, img, meta={"exposure_time": 8.0})
        back, meta = read_radiance_pfm(path)
        assert back.layout == "raw4"
        np.testing.assert_array_equal(back.data, img.data)
        assert meta["exposure_time"] == 8.0
        assert json.loads((tmp_path / "r.pfm.json").read_text())["layout"] == "raw4"

    def test_rgb3_round_trip(self, tmp_path, rng):
        img = RadianceImage(rng.uniform(0, 3, (4, 4, 3)).astype(np.float32), "rgb3")
        path = tmp_path / "c.pfm"
        write_radiance_pfm(path, img)
        back, _ = read_radiance_pfm(path)
        assert back.layout == "rgb3"
        np.testing.assert_array_equal(back.data, img.data)

    def test_gray_pfm_without_sidecar_rejected(self, tmp_path):
        write_pfm(tmp_path / "g.pfm", np.zeros((2, 2), np.float32))
        with pytest.raises(CodecError, match="sidecar"):
            read_radiance_pfm(tmp_path / "g.pfm")


class TestFlowPfm:
    def test_round_trip(self, tmp_path, rng):
        from hdrvid.formats import read_flow_pfm, write_flow_pfm
        flow = rng.uniform(-8, 8, (6, 5, 2)).astype(np.float32)
        path = tmp_path / "flow.pfm"
        write_flow_pfm(path, flow, meta={"level": 0})
        back, meta = read_flow_pfm(path)
        np.testing.assert_array_equal(back, flow)
        assert meta["planes"] == ["dx", "dy"]
        assert meta["level"] == 0

    def test_rejects_non_flow_sidecars(self, tmp_path, rng):
        from hdrvid.formats import read_flow_pfm
        img = RadianceImage(rng.uniform(0, 1, (4, 4, 4)).astype(np.float32), "raw4")
        write_radiance_pfm(tmp_path / "r.pfm", img)
        with pytest.raises(CodecError, match="flow"):
            read_flow_pfm(tmp_path / "r.pfm")


class TestPgm16:
    def test_round_trip(self, tmp_path, rng):
        samples = rng.integers(0, 1024, (6, 4)).astype(np.uint16)
        path = tmp_path / "x.pgm"
        write_pgm16(path, samples, bit_depth=10)
        np.testing.assert_array_equal(read_pgm16(path, 10), samples)

    def test_samples_left_aligned(self, tmp_path):
        path = tmp_path / "one.pgm"
        write_pgm16(path, np.array([[1]], np.uint16), bit_depth=10)
        stored = np.frombuffer(path.read_bytes()[-2:], dtype=">u2")[0]
        assert stored == 1 << 6  # 10-bit sample occupies the high bits

    def test_rejects_wrong_maxval(self, tmp_path):
        path = tmp_path / "bad.pgm"
        path.write_bytes(b"P5\n1 1\n255\n\x00")
        with pytest.raises(CodecError, match="65535"):
            read_pgm16(path, 10)

    def test_header_comments_tolerated(self, tmp_path):
        path = tmp_path / "c.pgm"
        path.write_bytes(b"P5\n# camera dump\n1 1\n65535\n\x00\x40")
        assert read_pgm16(path, 10)[0, 0] == 1

    def test_rejects_out_of_range_samples(self, tmp_path):
        with pytest.raises(CodecError, match="range"):
            write_pgm16(tmp_path / "x.pgm", np.array([[4096]], np.uint16), 10)


class TestBayerFrameIo:
    def test_sidecar_round_trip(self, tmp_path, rng):
        frame = make_frame(rng.integers(64, 1024, (4, 4)).astype(np.uint16),
                           exposure_time=8.0, wb_gains=(1.9, 1.0, 1.6))
        path = tmp_path / "f.pgm"
        write_bayer_frame(path, frame)
        back = read_bayer_frame(path)
        np.testing.assert_array_equal(back.data, frame.data)
        assert back.exposure_time == 8.0
        assert back.wb_gains == (1.9, 1.0, 1.6)
        assert back.black_level == frame.black_level

    def test_missing_sidecar_rejected(self, tmp_path):
        write_pgm16(tmp_path / "f.pgm", np.zeros((2, 2), np.uint16), 10)
        with pytest.raises(CodecError, match="sidecar"):
            read_bayer_frame(tmp_path / "f.pgm")


class TestPng:
    def test_round_trip_at_8bit_grid(self, tmp_path):
        grid = (np.arange(24, dtype=np.float32) / 255.0).reshape(2, 4, 3)
        path = tmp_path / "x.png"
        write_png(path, SRGBImage(grid))
        back = read_png(path)
        np.testing.assert_allclose(back.data, grid, atol=1e-7)
