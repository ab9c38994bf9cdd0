"""Sequence manifests: the on-disk description of a captured or synthetic
alternating-exposure scene.

A manifest lists ordered frame records (path, exposure, role, domain) plus
the calibration shared by all raw frames. Validation is eager: every check
failure names the offending frame index. Analog gain is folded into the
exposure time when frames are instantiated (the raw values stay on the
record), so downstream radiance math sees one effective exposure scale.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .formats import read_bayer_frame, read_png
from .rawcore import BayerFrame, SRGBImage

SCHEMA_VERSION = 1


class ManifestError(ValueError):
    """Schema violation or inconsistent sequence description."""


@dataclass(frozen=True)
class FrameRecord:
    path: str
    exposure_time: float
    analog_gain: float = 1.0
    role: str = "long"       # long | short
    domain: str = "raw"      # raw | srgb
    gt_path: str | None = None

    @property
    def effective_exposure(self) -> float:
        return self.exposure_time * self.analog_gain


@dataclass(frozen=True)
class Calibration:
    bit_depth: int = 10
    black_level: int = 64
    white_level: int = 1023
    wb_gains: tuple[float, float, float] = (1.0, 1.0, 1.0)
    ccm: tuple | None = None


@dataclass(frozen=True)
class SequenceManifest:
    scene: str
    frames: tuple[FrameRecord, ...]
    calibration: Calibration | None
    base_dir: Path
    provenance: dict | None = None
    schema_version: int = SCHEMA_VERSION

    def __len__(self) -> int:
        return len(self.frames)

    def frame_path(self, i: int) -> Path:
        return self.base_dir / self.frames[i].path

    def gt_path(self, i: int) -> Path | None:
        gt = self.frames[i].gt_path
        return self.base_dir / gt if gt else None

    def load_bayer(self, i: int) -> BayerFrame:
        """Load frame i with analog gain folded into the exposure time."""
        rec = self.frames[i]
        if rec.domain != "raw":
            raise ManifestError(f"frame {i} is not a raw frame")
        frame = read_bayer_frame(self.frame_path(i))
        cal = self.calibration
        if abs(frame.exposure_time - rec.exposure_time) > 1e-9 * rec.exposure_time:
            raise ManifestError(
                f"frame {i}: sidecar exposure {frame.exposure_time} does not "
                f"match manifest exposure {rec.exposure_time}")
        return BayerFrame(
            width=frame.width, height=frame.height, data=frame.data,
            exposure_time=rec.effective_exposure, pattern=frame.pattern,
            bit_depth=cal.bit_depth, black_level=cal.black_level,
            white_level=cal.white_level, analog_gain=rec.analog_gain,
            wb_gains=cal.wb_gains)

    def load_srgb(self, i: int) -> SRGBImage:
        rec = self.frames[i]
        if rec.domain != "srgb":
            raise ManifestError(f"frame {i} is not an sRGB frame")
        return read_png(self.frame_path(i))


def _require(d: dict, key: str, where: str):
    if key not in d:
        raise ManifestError(f"{where}: missing required field {key!r}")
    return d[key]


def load_manifest(path, allow_irregular: bool = False) -> SequenceManifest:
    """Parse and eagerly validate a manifest JSON file."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as e:
        raise ManifestError(f"{path}: not valid JSON ({e})") from e
    version = int(doc.get("schema_version", 0))
    if version != SCHEMA_VERSION:
        raise ManifestError(f"unsupported schema_version {version}")
    raw_frames = _require(doc, "frames", str(path))
    if not isinstance(raw_frames, list) or len(raw_frames) == 0:
        raise ManifestError("frames must be a non-empty list")

    records = []
    for i, fr in enumerate(raw_frames):
        where = f"frame {i}"
        rec = FrameRecord(
            path=str(_require(fr, "path", where)),
            exposure_time=float(_require(fr, "exposure_time", where)),
            analog_gain=float(fr.get("analog_gain", 1.0)),
            role=str(fr.get("role", "long")),
            domain=str(fr.get("domain", "raw")),
            gt_path=fr.get("gt_path"),
        )
        if rec.exposure_time <= 0:
            raise ManifestError(f"{where}: exposure_time must be positive")
        if rec.role not in ("long", "short"):
            raise ManifestError(f"{where}: unknown role {rec.role!r}")
        if rec.domain not in ("raw", "srgb"):
            raise ManifestError(f"{where}: unknown domain {rec.domain!r}")
        records.append(rec)

    calibration = None
    if any(r.domain == "raw" for r in records):
        cal = doc.get("calibration")
        if cal is None:
            raise ManifestError("raw sequences require a calibration block")
        calibration = Calibration(
            bit_depth=int(_require(cal, "bit_depth", "calibration")),
            black_level=int(_require(cal, "black_level", "calibration")),
            white_level=int(_require(cal, "white_level", "calibration")),
            wb_gains=tuple(float(g) for g in _require(cal, "wb_gains", "calibration")),
            ccm=tuple(map(tuple, cal["ccm"])) if cal.get("ccm") else None,
        )
        if len(calibration.wb_gains) != 3:
            raise ManifestError("calibration: wb_gains must have three entries")

    manifest = SequenceManifest(
        scene=str(doc.get("scene", path.stem)),
        frames=tuple(records),
        calibration=calibration,
        base_dir=path.parent,
        provenance=doc.get("provenance"),
    )

    for i in range(len(records)):
        p = manifest.frame_path(i)
        if not p.exists():
            raise ManifestError(f"frame {i}: file not found: {p}")
        gp = manifest.gt_path(i)
        if gp is not None and not gp.exists():
            raise ManifestError(f"frame {i}: ground truth not found: {gp}")

    if not allow_irregular:
        for i in range(len(records) - 1):
            a, b = records[i], records[i + 1]
            if a.role == b.role or a.effective_exposure == b.effective_exposure:
                raise ManifestError(
                    f"frame {i + 1}: exposure pattern does not alternate "
                    "(pass allow_irregular to override)")
    return manifest


def save_manifest(manifest_dict: dict, path) -> None:
    """Write a manifest document (already in schema form) to disk."""
    path = Path(path)
    doc = {"schema_version": SCHEMA_VERSION, **manifest_dict}
    path.write_text(json.dumps(doc, indent=2))


def staggered_pairs(manifest: SequenceManifest) -> list[tuple[int, int]]:
    """(long_idx, short_idx) for consecutive alternating-role records."""
    pairs = []
    for k in range(0, len(manifest.frames) - 1, 2):
        a, b = manifest.frames[k], manifest.frames[k + 1]
        roles = {a.role: k, b.role: k + 1}
        if set(roles) != {"long", "short"}:
            raise ManifestError(
                f"frames {k},{k + 1}: staggered pair needs one long and one short")
        pairs.append((roles["long"], roles["short"]))
    return pairs
