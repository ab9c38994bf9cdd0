"""Alternating-exposure raw HDR video toolkit.

Staggered-pair ground-truth merging, a minimal ISP, pyramid flow-guided
deformable alignment, normalized-weight fusion, synthetic sequence
generation, and mu-law-domain evaluation.
"""

from .align import (AlignConfig, FlowField, FlowPyramid, OffsetField,
                    align_pyramid, build_pyramid, deformable_sample,
                    estimate_flow_triple, flow_to_offsets, refine_offsets)
from .isp import IspConfig, apply_ccm, demosaic_pack4, encode_display, raw_to_srgb_hdr
from .manifest import Calibration, FrameRecord, ManifestError, SequenceManifest, load_manifest
from .merge import (MergeCurve, ScreenReport, StaggeredPair, displacement_map,
                    merge_raw, merge_srgb, screen_pair)
from .metrics import TonemapParams, dynamic_range_gain, l1_tonemapped, mu_tonemap, psnr_mu
from .rawcore import (BayerFrame, PackedRaw, RadianceImage, SRGBImage,
                      gamma_correct, match_exposure, pack_bayer, to_radiance,
                      unpack_bayer, white_balance)
from .reconstruct import (FrameContext, FusionWeights, ReconstructConfig,
                          WellExposedness, build_context, compute_weights,
                          fuse, reconstruct_frame, reconstruct_video)
from .synth import SynthConfig, hdr_to_ldr, perturb_tone, render_test_scene, synth_sequence

__version__ = "0.1.0"
