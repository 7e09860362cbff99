"""End-to-end occlusion completion and file I/O.

A completion run lifts the corrupted image, diffuses the responses with the
corrupted region free and everything else held as Dirichlet data, and maps
the evolved volume back to the plane (exact inversion for multi-frequency
banks, channel projection for single-frequency ones). The reconstruction is
affinely matched to the input over the uncorrupted pixels, then composited:
pixels outside the mask come from the input verbatim, masked pixels take the
reconstruction, with a short linear blend band just inside the mask border
to keep seams smooth. Blending mixes the reconstruction with the nearest
uncorrupted input value, never with the occluder's own pixels.

Images are 8-bit grayscale PNG or PGM mapped linearly onto [0, 1]. Response
volumes use the CRTX container: magic "CRTX", u32 version, u32 N/K/L/M,
f64 sigma/delta_theta/delta_s, f64 frequency list, then N*N*K*L*M complex
samples as interleaved (re, im) float64, all little-endian, row-major in
[i, j, k, l, m].
"""

from __future__ import annotations

import json
import math
import struct
import time
from dataclasses import dataclass, field

import numpy as np
from PIL import Image
from scipy import ndimage

from .diffusion import DiffusionConfig, LiftedMask, run_diffusion
from .gabor import (
    GaborParams,
    ResponseVolume,
    affine_fit,
    inverse_transform,
    lift,
    make_bank,
    project_sum,
    validate_image,
)

CRTX_MAGIC = b"CRTX"
CRTX_VERSION = 1


# ---------------------------------------------------------------------------
# image and mask files

def load_image(path, allow_color: bool = False) -> np.ndarray:
    """Read an 8-bit grayscale PNG/PGM as a square [0, 1] float array.

    Color inputs are rejected unless `allow_color`, which converts through
    the usual luma weights. Higher bit depths are rejected.
    """
    with Image.open(path) as im:
        if im.mode in ("I", "I;16", "I;16B", "F"):
            raise ValueError(f"{path}: unsupported bit depth (mode {im.mode})")
        if im.mode != "L":
            if not allow_color:
                raise ValueError(
                    f"{path}: not grayscale (mode {im.mode}); pass "
                    f"allow_color=True to convert via luma")
            im = im.convert("L")
        arr = np.asarray(im, dtype=np.uint8)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ValueError(f"{path}: image must be square, got {arr.shape}")
    return arr.astype(float) / 255.0


def save_image(grid, path, clamp=(0.0, 1.0)) -> None:
    """Write a [0, 1] float grid as 8-bit grayscale, round half up.

    Values are clamped to `clamp` at export only. PGM output uses a
    canonical P5 header so identical grids produce identical bytes.
    """
    arr = validate_image(grid)
    arr = np.clip(arr, clamp[0], clamp[1])
    u8 = np.floor(arr * 255.0 + 0.5).astype(np.uint8)
    path = str(path)
    if path.lower().endswith(".pgm"):
        with open(path, "wb") as fh:
            fh.write(b"P5\n%d %d\n255\n" % (u8.shape[1], u8.shape[0]))
            fh.write(u8.tobytes())
    else:
        Image.fromarray(u8, mode="L").save(path)


def load_mask(path) -> np.ndarray:
    """Read a mask image; any nonzero pixel marks a corrupted location."""
    with Image.open(path) as im:
        if im.mode != "L":
            im = im.convert("L")
        arr = np.asarray(im)
    return arr != 0


def rmse_region(a, b, region) -> float:
    """Root mean squared difference of two grids over a pixel region."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    region = np.asarray(region, dtype=bool)
    if a.shape != b.shape or a.shape != region.shape:
        raise ValueError(
            f"shape mismatch: {a.shape}, {b.shape}, region {region.shape}")
    if not region.any():
        raise ValueError("region is empty")
    diff = (a - b)[region]
    return float(np.sqrt(np.mean(diff ** 2)))


# ---------------------------------------------------------------------------
# CRTX response-volume container

def save_volume(volume: ResponseVolume, path) -> None:
    p = volume.params
    with open(path, "wb") as fh:
        fh.write(CRTX_MAGIC)
        fh.write(struct.pack("<I", CRTX_VERSION))
        fh.write(struct.pack("<4I", volume.N, p.K, p.L, p.M))
        fh.write(struct.pack("<3d", p.sigma, p.delta_theta, p.delta_s))
        fh.write(struct.pack(f"<{p.L}d", *p.frequencies))
        fh.write(np.ascontiguousarray(volume.data, dtype="<c16").tobytes())


def load_volume(path) -> ResponseVolume:
    with open(path, "rb") as fh:
        buf = fh.read()
    if buf[:4] != CRTX_MAGIC:
        raise ValueError(f"{path}: bad magic {buf[:4]!r}, expected {CRTX_MAGIC!r}")
    (version,) = struct.unpack_from("<I", buf, 4)
    if version != CRTX_VERSION:
        raise ValueError(f"{path}: unsupported version {version}")
    n, k, l, m = struct.unpack_from("<4I", buf, 8)
    sigma, _delta_theta, delta_s = struct.unpack_from("<3d", buf, 24)
    freqs = struct.unpack_from(f"<{l}d", buf, 48)
    offset = 48 + 8 * l
    expected = n * n * k * l * m * 16
    payload = buf[offset:]
    if len(payload) != expected:
        raise ValueError(
            f"{path}: payload holds {len(payload)} bytes but the header "
            f"shape ({n}, {n}, {k}, {l}, {m}) needs {expected}")
    data = np.frombuffer(payload, dtype="<c16").reshape(n, n, k, l, m)
    params = GaborParams(sigma=sigma, K=k, frequencies=freqs, M=m,
                         delta_s=delta_s)
    return ResponseVolume(data=np.array(data, dtype=complex), params=params)


# ---------------------------------------------------------------------------
# completion

@dataclass
class CompletionRequest:
    """Everything a completion run needs; immutable once built."""

    image: np.ndarray
    mask: np.ndarray
    gabor: GaborParams = field(default_factory=GaborParams)
    diffusion: DiffusionConfig = field(default_factory=DiffusionConfig)
    mask_dilation: int = 2
    blend_band: int = 2
    clamp: tuple = (0.0, 1.0)
    lift_method: str = "auto"
    threads: int = 1

    def __post_init__(self):
        self.image = validate_image(self.image)
        mask = np.asarray(self.mask, dtype=bool)
        if mask.shape != self.image.shape:
            raise ValueError(
                f"mask shape {mask.shape} does not match image {self.image.shape}")
        if mask.all():
            raise ValueError("mask corrupts every pixel; nothing to complete")
        self.mask = mask


@dataclass
class CompletionReport:
    completed: np.ndarray
    iterations: int
    final_rel_change: float
    converged: bool
    mode: str
    stencil: str
    stage_ms: dict
    rmse_masked: float = None

    def summary(self) -> dict:
        out = {
            "iterations": self.iterations,
            "final_rel_change": self.final_rel_change,
            "converged": self.converged,
            "mode": self.mode,
            "stencil": self.stencil,
            "stage_ms": {k: round(v, 3) for k, v in self.stage_ms.items()},
        }
        if self.rmse_masked is not None:
            out["rmse_masked"] = self.rmse_masked
        return out

    def to_json(self) -> str:
        return json.dumps(self.summary())


def blend_composite(image, reconstruction, mask, band: int = 2) -> np.ndarray:
    """Input outside the mask, reconstruction inside, linear seam band.

    Masked pixels within `band` pixels of the border mix the reconstruction
    with the nearest uncorrupted input value; weights grow linearly with the
    depth into the mask. Unmasked pixels always equal the input exactly.
    """
    out = np.asarray(image, dtype=float).copy()
    mask = np.asarray(mask, dtype=bool)
    if not mask.any():
        return out
    if band > 0:
        dist, (src_i, src_j) = ndimage.distance_transform_edt(
            mask, return_indices=True)
        w = np.minimum(dist / (band + 1.0), 1.0)
        vals = w * reconstruction + (1.0 - w) * image[src_i, src_j]
        out[mask] = vals[mask]
    else:
        out[mask] = reconstruction[mask]
    return out


def complete_image(request: CompletionRequest,
                   ground_truth=None) -> CompletionReport:
    """Run lift -> diffusion -> reconstruction -> composite.

    Single-frequency banks reconstruct by channel projection (the inversion
    sum needs the full frequency range); everything else uses the exact
    inverse. If `ground_truth` is given the report carries the RMSE over the
    masked pixels.
    """
    req = request
    stage_ms = {}

    t0 = time.perf_counter()
    bank = make_bank(req.gabor)
    volume = lift(req.image, bank, method=req.lift_method, threads=req.threads)
    stage_ms["lift"] = 1000.0 * (time.perf_counter() - t0)

    t0 = time.perf_counter()
    mask5 = LiftedMask(req.mask, dilation=req.mask_dilation)
    evolved, stats = run_diffusion(volume, mask5, req.diffusion)
    stage_ms["diffusion"] = 1000.0 * (time.perf_counter() - t0)

    t0 = time.perf_counter()
    evolved_volume = ResponseVolume(data=evolved.data, params=req.gabor)
    known = ~req.mask
    if req.gabor.L == 1:
        recon = project_sum(evolved_volume, reference=req.image, region=known)
    else:
        raw = inverse_transform(evolved_volume, bank, threads=req.threads)
        a, b = affine_fit(raw, req.image, known)
        recon = a * raw + b
    completed = blend_composite(req.image, recon, req.mask, req.blend_band)
    stage_ms["reconstruct"] = 1000.0 * (time.perf_counter() - t0)

    rmse = None
    if ground_truth is not None:
        gt = validate_image(ground_truth)
        if req.mask.any():
            rmse = rmse_region(completed, gt, req.mask)
        else:
            rmse = 0.0
    return CompletionReport(
        completed=completed,
        iterations=stats["iterations"],
        final_rel_change=stats["final_rel_change"],
        converged=stats["converged"],
        mode=stats["mode"],
        stencil=stats["stencil"],
        stage_ms=stage_ms,
        rmse_masked=rmse,
    )
