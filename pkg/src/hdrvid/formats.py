"""PFM / 16-bit PGM / PNG codecs and the JSON sidecar conventions.

PFM files are written little-endian (scale -1.0) with the standard
bottom-up row order; round trips are bit exact for float32. A raw-layout
4-plane image is stored as a grayscale PFM of height 4*h (planes stacked
top to bottom in R, G1, G2, B order) with a mandatory `<name>.pfm.json`
sidecar carrying the layout.

PGM (P5) carries 16-bit big-endian samples with maxval 65535; a sample of
bit depth b occupies the high bits (value << (16 - b)). The `<name>.pgm.json`
sidecar carries exposure and calibration metadata for the frame.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
from PIL import Image

from .rawcore import BayerFrame, RadianceImage, SRGBImage


class CodecError(ValueError):
    """Malformed header or truncated payload."""


def sidecar_path(path) -> Path:
    return Path(str(path) + ".json")


# ---------------------------------------------------------------------------
# PFM
# ---------------------------------------------------------------------------

def write_pfm(path, data: np.ndarray) -> None:
    """Write a 1- or 3-channel float32 PFM (little-endian, bottom-up rows)."""
    data = np.asarray(data, dtype=np.float32)
    if data.ndim == 3 and data.shape[2] == 1:
        data = data[:, :, 0]
    if data.ndim == 2:
        header = b"Pf\n"
    elif data.ndim == 3 and data.shape[2] == 3:
        header = b"PF\n"
    else:
        raise CodecError(f"PFM supports 1 or 3 channels, got shape {data.shape}")
    h, w = data.shape[:2]
    with open(path, "wb") as f:
        f.write(header)
        f.write(f"{w} {h}\n".encode("ascii"))
        f.write(b"-1.0\n")
        f.write(np.flipud(data).astype("<f4").tobytes())


def _read_token(f) -> bytes:
    tok = b""
    while True:
        c = f.read(1)
        if not c:
            raise CodecError("unexpected end of PFM header")
        if c.isspace():
            if tok:
                return tok
            continue
        tok += c


def read_pfm(path) -> tuple[np.ndarray, float]:
    """Read a PFM file; returns (array, scale magnitude)."""
    with open(path, "rb") as f:
        magic = _read_token(f)
        if magic == b"PF":
            channels = 3
        elif magic == b"Pf":
            channels = 1
        else:
            raise CodecError(f"not a PFM file: magic {magic!r}")
        w = int(_read_token(f))
        h = int(_read_token(f))
        scale = float(_read_token(f))
        if scale >= 0:
            raise CodecError("big-endian PFM is not supported (scale must be < 0)")
        payload = f.read(4 * w * h * channels)
        if len(payload) != 4 * w * h * channels:
            raise CodecError("truncated PFM payload")
    arr = np.frombuffer(payload, dtype="<f4")
    if channels == 1:
        arr = arr.reshape(h, w)
    else:
        arr = arr.reshape(h, w, 3)
    return np.ascontiguousarray(np.flipud(arr)), -scale


def write_radiance_pfm(path, img: RadianceImage, meta: dict | None = None) -> None:
    """Store a radiance image as PFM; raw4 goes to a plane stack + sidecar."""
    path = Path(path)
    if img.layout == "rgb3":
        write_pfm(path, img.data)
        if meta:
            sidecar = {"layout": "rgb3", **meta}
            sidecar_path(path).write_text(json.dumps(sidecar, indent=2))
        return
    h, w = img.height, img.width
    stack = img.data.transpose(2, 0, 1).reshape(4 * h, w)
    write_pfm(path, stack)
    sidecar = {"layout": "raw4", "height": h, "width": w, "channels": 4}
    if meta:
        sidecar.update(meta)
    sidecar_path(path).write_text(json.dumps(sidecar, indent=2))


def read_radiance_pfm(path) -> tuple[RadianceImage, dict]:
    """Load a PFM written by write_radiance_pfm; sidecar decides the layout."""
    path = Path(path)
    arr, _ = read_pfm(path)
    meta: dict = {}
    sc = sidecar_path(path)
    if sc.exists():
        meta = json.loads(sc.read_text())
    if meta.get("layout") == "raw4":
        h, w = int(meta["height"]), int(meta["width"])
        if arr.shape != (4 * h, w):
            raise CodecError(f"raw4 stack shape {arr.shape} does not match sidecar")
        data = arr.reshape(4, h, w).transpose(1, 2, 0)
        return RadianceImage(data, layout="raw4"), meta
    if arr.ndim == 2:
        raise CodecError("grayscale PFM without a raw4 sidecar")
    return RadianceImage(arr, layout="rgb3"), meta


def write_flow_pfm(path, flow: np.ndarray, meta: dict | None = None) -> None:
    """Store a 2-plane flow field as a stacked grayscale PFM + sidecar."""
    flow = np.asarray(flow, dtype=np.float32)
    if flow.ndim != 3 or flow.shape[2] != 2:
        raise CodecError("flow must be (h, w, 2)")
    h, w = flow.shape[:2]
    path = Path(path)
    write_pfm(path, flow.transpose(2, 0, 1).reshape(2 * h, w))
    sidecar = {"layout": "flow2", "height": h, "width": w, "channels": 2,
               "planes": ["dx", "dy"]}
    if meta:
        sidecar.update(meta)
    sidecar_path(path).write_text(json.dumps(sidecar, indent=2))


def read_flow_pfm(path) -> tuple[np.ndarray, dict]:
    path = Path(path)
    sc = sidecar_path(path)
    if not sc.exists():
        raise CodecError(f"missing sidecar {sc}")
    meta = json.loads(sc.read_text())
    if meta.get("layout") != "flow2":
        raise CodecError(f"not a flow PFM: layout {meta.get('layout')!r}")
    arr, _ = read_pfm(path)
    h, w = int(meta["height"]), int(meta["width"])
    if arr.shape != (2 * h, w):
        raise CodecError(f"flow stack shape {arr.shape} does not match sidecar")
    return arr.reshape(2, h, w).transpose(1, 2, 0), meta


# ---------------------------------------------------------------------------
# PGM (P5, 16-bit)
# ---------------------------------------------------------------------------

def write_pgm16(path, samples: np.ndarray, bit_depth: int) -> None:
    """Write left-aligned bit_depth-deep samples into a 16-bit P5 PGM."""
    samples = np.asarray(samples)
    if samples.ndim != 2 or not np.issubdtype(samples.dtype, np.integer):
        raise CodecError("PGM expects a 2-D integer array")
    if samples.min() < 0 or samples.max() > (1 << bit_depth) - 1:
        raise CodecError(f"samples exceed {bit_depth}-bit range")
    h, w = samples.shape
    stored = (samples.astype(np.uint16) << (16 - bit_depth)).astype(">u2")
    with open(path, "wb") as f:
        f.write(f"P5\n{w} {h}\n65535\n".encode("ascii"))
        f.write(stored.tobytes())


def _read_pgm_header_token(f) -> bytes:
    tok = b""
    while True:
        c = f.read(1)
        if not c:
            raise CodecError("unexpected end of PGM header")
        if c == b"#":  # comment to end of line
            while c not in (b"\n", b""):
                c = f.read(1)
            continue
        if c.isspace():
            if tok:
                return tok
            continue
        tok += c


def read_pgm16(path, bit_depth: int) -> np.ndarray:
    """Read a 16-bit P5 PGM back to right-aligned bit_depth-deep samples."""
    with open(path, "rb") as f:
        magic = _read_pgm_header_token(f)
        if magic != b"P5":
            raise CodecError(f"not a binary PGM: magic {magic!r}")
        w = int(_read_pgm_header_token(f))
        h = int(_read_pgm_header_token(f))
        maxval = int(_read_pgm_header_token(f))
        if maxval != 65535:
            raise CodecError(f"PGM maxval must be 65535, got {maxval}")
        payload = f.read(2 * w * h)
        if len(payload) != 2 * w * h:
            raise CodecError("truncated PGM payload")
    stored = np.frombuffer(payload, dtype=">u2").reshape(h, w)
    return (stored >> (16 - bit_depth)).astype(np.uint16)


def write_bayer_frame(path, frame: BayerFrame) -> None:
    """PGM + JSON sidecar with the frame's exposure and calibration."""
    path = Path(path)
    write_pgm16(path, frame.data, frame.bit_depth)
    sidecar = {
        "exposure_time": frame.exposure_time,
        "analog_gain": frame.analog_gain,
        "wb_gains": list(frame.wb_gains),
        "black_level": frame.black_level,
        "white_level": frame.white_level,
        "bit_depth": frame.bit_depth,
        "pattern": frame.pattern,
    }
    sidecar_path(path).write_text(json.dumps(sidecar, indent=2))


def read_bayer_frame(path) -> BayerFrame:
    path = Path(path)
    sc = sidecar_path(path)
    if not sc.exists():
        raise CodecError(f"missing sidecar {sc}")
    meta = json.loads(sc.read_text())
    samples = read_pgm16(path, int(meta["bit_depth"]))
    h, w = samples.shape
    return BayerFrame(
        width=w, height=h, data=samples,
        exposure_time=float(meta["exposure_time"]),
        pattern=str(meta.get("pattern", "RGGB")),
        bit_depth=int(meta["bit_depth"]),
        black_level=int(meta["black_level"]),
        white_level=int(meta["white_level"]),
        analog_gain=float(meta.get("analog_gain", 1.0)),
        wb_gains=tuple(meta.get("wb_gains", (1.0, 1.0, 1.0))),
    )


# ---------------------------------------------------------------------------
# PNG
# ---------------------------------------------------------------------------

def write_png(path, img: SRGBImage) -> None:
    """8-bit PNG from a display-referred image (round half up)."""
    dn = np.floor(img.data.astype(np.float64) * 255.0 + 0.5).astype(np.uint8)
    Image.fromarray(dn, mode="RGB").save(str(path), format="PNG")


def read_png(path) -> SRGBImage:
    with Image.open(str(path)) as im:
        arr = np.asarray(im.convert("RGB"), dtype=np.float32) / 255.0
    return SRGBImage(arr)
