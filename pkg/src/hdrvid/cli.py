"""Command-line surface for the toolkit.

Subcommands: merge-gt, reconstruct, synth, eval, preview, screen.
Exit codes: 0 success, 1 validation error, 2 IO error. Every numeric output
is also written as machine-readable JSON next to the image outputs. Runs are
reproducible from manifest + config + seed; nothing here depends on the
wall clock.
"""

from __future__ import annotations

import argparse
import json
import os
import re
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import formats, isp, metrics
from .align import AlignConfig
from .manifest import ManifestError, SequenceManifest, load_manifest, save_manifest, staggered_pairs
from .merge import MergeCurve, StaggeredPair, displacement_map, merge_raw, merge_srgb, screen_pair
from .metrics import TonemapParams, mu_tonemap
from .rawcore import SRGBImage, pack_bayer, unpack_bayer
from .reconstruct import ReconstructConfig, reconstruct_frame
from .synth import SynthConfig, synth_sequence

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_IO = 2


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse defaults to exit(2); 2 means IO here
        raise _UsageError(message)


def _default_jobs() -> int:
    return max(1, int(os.environ.get("HDRVID_JOBS", "1")))


def _parallel_map(fn, items, jobs: int) -> list:
    if jobs <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(fn, items))


def _write_json(path, payload) -> None:
    Path(path).write_text(json.dumps(payload, indent=2) + "\n")


def _align_config(args) -> AlignConfig:
    return AlignConfig(
        flow_levels=args.flow_levels,
        align_levels=args.align_levels,
        block_size=args.block_size,
        search_radius=args.search_radius,
        enable_flow=not args.no_flow,
        enable_refine=not args.no_refine,
    )


def _add_align_flags(p) -> None:
    p.add_argument("--flow-levels", type=int, default=5)
    p.add_argument("--align-levels", type=int, default=4)
    p.add_argument("--block-size", type=int, default=8)
    p.add_argument("--search-radius", type=int, default=4)
    p.add_argument("--no-flow", action="store_true",
                   help="disable flow guidance (alignment ablation)")
    p.add_argument("--no-refine", action="store_true",
                   help="disable offset refinement (alignment ablation)")


# ---------------------------------------------------------------------------
# merge-gt / screen
# ---------------------------------------------------------------------------

def _load_raw_pair(manifest: SequenceManifest, li: int, si: int) -> StaggeredPair:
    long_f = manifest.load_bayer(li)
    short_f = manifest.load_bayer(si)
    long_p = pack_bayer(long_f)
    short_p = pack_bayer(short_f)
    return StaggeredPair(long_p, short_p,
                         ratio=long_p.exposure_time / short_p.exposure_time)


def cmd_merge_gt(args) -> int:
    manifest = load_manifest(args.manifest)
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    curve = MergeCurve(args.curve_low, args.curve_high)
    pairs = staggered_pairs(manifest)
    report = []
    for k, (li, si) in enumerate(pairs):
        if manifest.frames[li].domain == "raw":
            gains = manifest.calibration.wb_gains
            pair = _load_raw_pair(manifest, li, si)
            hdr_raw = merge_raw(pair, curve, gains)
            formats.write_radiance_pfm(
                out / f"hdr_raw_{k:04d}.pfm", hdr_raw,
                meta={"exposure_time_long": pair.long.exposure_time,
                      "exposure_time_short": pair.short.exposure_time})
            ccm = manifest.calibration.ccm or isp.IspConfig().ccm
            hdr_srgb = isp.raw_to_srgb_hdr(hdr_raw, isp.IspConfig(ccm=ccm))
            formats.write_radiance_pfm(out / f"hdr_srgb_{k:04d}.pfm", hdr_srgb)
            heat, disp = displacement_map(pair, gains=gains,
                                          saturation_threshold=curve.tau_high)
            formats.write_png(out / f"disp_{k:04d}.png", heat)
            screen = screen_pair(pair, curve, args.threshold, gains=gains,
                                 saturation_cap=args.sat_cap)
        else:
            long_img = manifest.load_srgb(li)
            short_img = manifest.load_srgb(si)
            ratio = (manifest.frames[li].effective_exposure
                     / manifest.frames[si].effective_exposure)
            pair = StaggeredPair(long_img, short_img, ratio=ratio)
            hdr_srgb = merge_srgb(pair, curve)
            formats.write_radiance_pfm(out / f"hdr_srgb_{k:04d}.pfm", hdr_srgb)
            disp = 0.0
            screen = None
        entry = {"pair": k, "long": li, "short": si, "mean_displacement": disp}
        if screen is not None:
            entry.update(accepted=screen.accepted, reason=screen.reason,
                         saturated_fraction=screen.saturated_fraction)
        report.append(entry)
    _write_json(out / "merge_report.json", {
        "scene": manifest.scene, "pairs": report,
        "params": {"tau_low": curve.tau_low, "tau_high": curve.tau_high,
                   "threshold": args.threshold, "saturation_cap": args.sat_cap}})
    print(f"merged {len(pairs)} staggered pairs -> {out}")
    return EXIT_OK


def cmd_screen(args) -> int:
    manifest = load_manifest(args.manifest)
    curve = MergeCurve(args.curve_low, args.curve_high)
    entries = []
    for k, (li, si) in enumerate(staggered_pairs(manifest)):
        pair = _load_raw_pair(manifest, li, si)
        rep = screen_pair(pair, curve, args.threshold,
                          gains=manifest.calibration.wb_gains,
                          saturation_cap=args.sat_cap)
        verdict = "ACCEPT" if rep.accepted else f"REJECT ({rep.reason})"
        print(f"pair {k:4d}: {verdict}  disp={rep.mean_displacement:.5f} "
              f"sat={rep.saturated_fraction:.3f}")
        entries.append({"pair": k, "accepted": rep.accepted, "reason": rep.reason,
                        "mean_displacement": rep.mean_displacement,
                        "saturated_fraction": rep.saturated_fraction})
    if args.output:
        _write_json(args.output, {"scene": manifest.scene, "pairs": entries})
    return EXIT_OK


# ---------------------------------------------------------------------------
# reconstruct
# ---------------------------------------------------------------------------

def cmd_reconstruct(args) -> int:
    manifest = load_manifest(args.manifest, allow_irregular=args.allow_irregular)
    n = len(manifest)
    if n < 3:
        raise ManifestError("reconstruction needs at least three frames")
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    config = ReconstructConfig(align=_align_config(args))
    ccm = (manifest.calibration.ccm if manifest.calibration
           and manifest.calibration.ccm else isp.IspConfig().ccm)

    def run(i: int):
        triple = [manifest.load_bayer(j) for j in (i - 1, i, i + 1)]
        hdr, stats = reconstruct_frame(triple, config)
        return i, hdr, stats

    results = _parallel_map(run, range(1, n - 1), args.jobs)
    stats_path = out / "stats.jsonl"
    with open(stats_path, "w") as sf:
        for i, hdr, stats in results:
            if args.domain == "srgb":
                rgb = isp.raw_to_srgb_hdr(hdr, isp.IspConfig(ccm=ccm))
                formats.write_radiance_pfm(out / f"recon_{i:04d}.pfm", rgb)
            else:
                formats.write_radiance_pfm(
                    out / f"recon_{i:04d}.pfm", hdr,
                    meta={"exposure_time": stats["exposure_time"]})
            sf.write(json.dumps({"frame": i, **stats}) + "\n")
    _write_json(out / "summary.json", {
        "scene": manifest.scene, "frames": n, "reconstructed": n - 2,
        "skipped": [0, n - 1], "domain": args.domain})
    print(f"reconstructed {n - 2} frames (skipped first/last of {n}) -> {out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# synth
# ---------------------------------------------------------------------------

def cmd_synth(args) -> int:
    cfg_doc = json.loads(Path(args.config).read_text())
    config = SynthConfig.from_json_dict(cfg_doc)
    hdr_dir = Path(args.hdr_dir)
    paths = sorted(hdr_dir.glob("*.pfm"))
    if not paths:
        raise ManifestError(f"no PFM frames found in {hdr_dir}")
    hdr_frames = [formats.read_radiance_pfm(p)[0] for p in paths]
    if config.domain == "raw" and any(f.layout != "raw4" for f in hdr_frames):
        raise ManifestError("raw-domain synthesis needs raw4 HDR frames")
    result = synth_sequence(hdr_frames, config)
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)

    levels = (1 << config.bit_depth) - 1
    t_long = max(config.exposure_times)
    records = []
    for i, (ldr, gt) in enumerate(zip(result.frames, result.ground_truth)):
        gt_name = f"gt_{i:04d}.pfm"
        formats.write_radiance_pfm(out / gt_name, gt)
        role = "long" if result.exposure_times[i] == t_long else "short"
        if config.domain == "raw":
            name = f"frame_{i:04d}.pgm"
            frame = unpack_bayer(ldr, config.bit_depth, 0, levels)
            formats.write_bayer_frame(out / name, frame)
        else:
            name = f"frame_{i:04d}.png"
            formats.write_png(out / name, ldr)
        records.append({"path": name, "exposure_time": result.exposure_times[i],
                        "analog_gain": 1.0, "role": role,
                        "domain": config.domain, "gt_path": gt_name})
    doc = {
        "scene": args.scene or hdr_dir.name,
        "frames": records,
        "provenance": {"seed": config.rng_seed,
                       "noise_variance": list(config.noise_variance),
                       "synth_config": cfg_doc},
    }
    if config.domain == "raw":
        doc["calibration"] = {"bit_depth": config.bit_depth, "black_level": 0,
                              "white_level": levels, "wb_gains": [1.0, 1.0, 1.0]}
    save_manifest(doc, out / "manifest.json")
    print(f"synthesized {len(records)} LDR frames -> {out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# eval / preview
# ---------------------------------------------------------------------------

_INDEX_RE = re.compile(r"(\d+)$")


def _indexed_pfms(directory: Path) -> dict[int, Path]:
    found = {}
    for p in sorted(directory.glob("*.pfm")):
        m = _INDEX_RE.search(p.stem)
        if m:
            found[int(m.group(1))] = p
    return found


def _load_for_eval(path: Path, domain: str) -> np.ndarray:
    img, _ = formats.read_radiance_pfm(path)
    if domain == "srgb" and img.layout == "raw4":
        img = isp.raw_to_srgb_hdr(img)
    return img.data


def cmd_eval(args) -> int:
    pred_dir, gt_dir = Path(args.pred_dir), Path(args.gt_dir)
    preds = _indexed_pfms(pred_dir)
    gts = _indexed_pfms(gt_dir)
    common = sorted(set(preds) & set(gts))
    if not common:
        raise ManifestError("no prediction/ground-truth pairs share an index")
    requested = [m.strip() for m in args.metrics.split(",") if m.strip()]
    known = {"psnr_mu", "l1_mu"}
    external = {"hdr_vdp2", "hdr_vqm"}
    bad = [m for m in requested if m not in known | external]
    if bad:
        raise ManifestError(f"unknown metrics: {', '.join(bad)}")

    def run(idx: int):
        pred = _load_for_eval(preds[idx], args.domain)
        gt = _load_for_eval(gts[idx], args.domain)
        return idx, metrics.evaluate_pair(pred, gt, mu=args.mu)

    results = _parallel_map(run, common, args.jobs)
    per_frame = []
    for idx, r in results:
        entry = {"frame": idx}
        for m in requested:
            entry[m] = "external" if m in external else r[m]
        entry["clip_fraction"] = r["clip_fraction"]
        entry["params"] = r["params"]
        per_frame.append(entry)
    aggregate = {}
    for m in requested:
        if m in external:
            aggregate[m] = "external"
        else:
            aggregate[m] = float(np.mean([e[m] for e in per_frame]))
    payload = {"frames": per_frame, "aggregate": aggregate,
               "domain": args.domain, "mu": args.mu}
    _write_json(args.output, payload)
    for m in requested:
        print(f"{m}: {aggregate[m]}")
    return EXIT_OK


def cmd_preview(args) -> int:
    img, _ = formats.read_radiance_pfm(args.pfm)
    if img.layout == "raw4":
        img = isp.raw_to_srgb_hdr(img)
    params = TonemapParams.from_reference(img.data, mu=args.mu,
                                          percentile=args.percentile)
    tone = mu_tonemap(img.data, params).astype(np.float32)
    formats.write_png(args.output, SRGBImage(tone))
    _write_json(str(args.output) + ".json", {
        "source": str(args.pfm), "mu": args.mu,
        "normalization": params.normalization,
        "clip_fraction": metrics.clip_fraction(img.data, params)})
    print(f"preview written to {args.output} (mu={args.mu}, "
          f"normalization={params.normalization:.6g})")
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hdrvid",
                     description="Alternating-exposure raw HDR video toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("merge-gt", help="merge staggered pairs into HDR ground truth")
    p.add_argument("manifest")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--curve-low", type=float, default=0.85)
    p.add_argument("--curve-high", type=float, default=0.97)
    p.add_argument("--threshold", type=float, default=0.02,
                   help="masked mean displacement above which a pair is rejected")
    p.add_argument("--sat-cap", type=float, default=0.5)
    p.set_defaults(func=cmd_merge_gt)

    p = sub.add_parser("reconstruct", help="reconstruct HDR video from LDR frames")
    p.add_argument("manifest")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--domain", choices=("raw", "srgb"), default="raw")
    p.add_argument("--jobs", type=int, default=_default_jobs())
    p.add_argument("--allow-irregular", action="store_true")
    _add_align_flags(p)
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("synth", help="synthesize an LDR sequence from HDR frames")
    p.add_argument("hdr_dir")
    p.add_argument("--config", required=True)
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--scene", default=None)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("eval", help="evaluate predictions against ground truth")
    p.add_argument("pred_dir")
    p.add_argument("gt_dir")
    p.add_argument("--metrics", default="psnr_mu,l1_mu")
    p.add_argument("--domain", choices=("raw", "srgb"), default="srgb")
    p.add_argument("--mu", type=float, default=5000.0)
    p.add_argument("--jobs", type=int, default=_default_jobs())
    p.add_argument("-o", "--output", default="metrics.json")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("preview", help="tonemapped PNG preview of an HDR PFM")
    p.add_argument("pfm")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--mu", type=float, default=5000.0)
    p.add_argument("--percentile", type=float, default=99.9)
    p.set_defaults(func=cmd_preview)

    p = sub.add_parser("screen", help="screen staggered pairs for motion/exposure")
    p.add_argument("manifest")
    p.add_argument("-o", "--output", default=None)
    p.add_argument("--curve-low", type=float, default=0.85)
    p.add_argument("--curve-high", type=float, default=0.97)
    p.add_argument("--threshold", type=float, default=0.02)
    p.add_argument("--sat-cap", type=float, default=0.5)
    p.set_defaults(func=cmd_screen)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    try:
        return args.func(args)
    except (ManifestError, formats.CodecError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as e:
        print(f"io error: {e}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
