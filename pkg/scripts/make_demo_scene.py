#!/usr/bin/env python3
"""Render a ground-truthed procedural HDR scene to PFM frames.

The output directory feeds straight into `hdrvid synth`:

    python scripts/make_demo_scene.py --kind two-motion -o /tmp/scene
    hdrvid synth /tmp/scene --config synth.json -o /tmp/ldr
"""

import argparse
import json
from pathlib import Path

import numpy as np

from hdrvid.formats import write_radiance_pfm
from hdrvid.synth import render_test_scene


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--kind", choices=("static", "global-shift", "two-motion"),
                    default="static")
    ap.add_argument("--frames", type=int, default=9)
    ap.add_argument("--size", type=int, default=256,
                    help="scene size at packed (half-Bayer) resolution")
    ap.add_argument("--shift", type=int, nargs=2, default=(3, 0),
                    metavar=("DX", "DY"), help="per-frame shift (global-shift)")
    ap.add_argument("--smooth", type=float, default=2.0)
    ap.add_argument("--value-range", type=float, nargs=2, default=(0.02, 0.5))
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("-o", "--output", required=True)
    args = ap.parse_args()

    params = {
        "height": args.size, "width": args.size, "frames": args.frames,
        "smooth": args.smooth, "value_range": tuple(args.value_range),
        "shift": tuple(args.shift),
    }
    frames, meta = render_test_scene(args.kind, params,
                                     np.random.default_rng(args.seed))
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    for i, frame in enumerate(frames):
        write_radiance_pfm(out / f"hdr_{i:04d}.pfm", frame)
    info = {"kind": args.kind, "frames": args.frames, "seed": args.seed,
            "params": {k: list(v) if isinstance(v, tuple) else v
                       for k, v in params.items()},
            "step": list(meta.get("step", (0, 0)))}
    (out / "scene.json").write_text(json.dumps(info, indent=2))
    print(f"wrote {args.frames} HDR frames ({args.kind}) to {out}")


if __name__ == "__main__":
    main()
