"""Diffusion of response volumes along the horizontal frame.

The generator is the sum of squares of the horizontal fields,

    Lbar = X1X1 + beta2^2 X2X2 + beta3^2 X3X3 + beta4^2 X4X4,

discretized with central second differences. Spatial derivatives along the
orientation-dependent unit vectors

    e_xi  = (cos(theta_k), sin(theta_k))      (along X1)
    e_eta = (-sin(theta_k), cos(theta_k))     (along the rotated axis)

read off-grid values through B-spline interpolation (degree 1 or 3, with
prefiltering); when an offset happens to be integer the read is an exact
shifted copy. X2X2 differences wrap periodically in the orientation index,
X4X4 and the phase difference replicate at the ends, and spatial off-grid
reads replicate outside the image.

X3 = e_eta + f d_s with theta and f frozen along its flow, so

    X3X3 = d_eta^2 + 2 f d_eta d_s + f^2 d_s^2.

The default 'composition' stencil discretizes exactly that: a second
difference along e_eta, a central second difference in the phase index for
d_s^2, and a symmetric four-point cross stencil for d_eta d_s. The
'paper-literal' stencil instead reproduces a published variant that spreads
the cross term over both e_xi and e_eta with f*cos/f*sin weights and adds a
trailing phase difference divided by 2*delta_s; it is kept for comparison
but is dimensionally inconsistent in that trailing term and fails the
second-order consistency check.

Time stepping is forward Euler; after every step the entries outside the
corrupted region are overwritten with their initial values (Dirichlet
data). The 'approximate' mode drops the X3X3/X4X4 terms, which decouples
all frequency/phase channels.
"""

from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .gabor import GaborParams, ResponseVolume

SECOND_DIFF_KINDS = ("X1X1", "X2X2", "X3X3", "X4X4")
STENCILS = ("composition", "paper-literal")
MODES = ("exact", "approximate")

# Padding (in pixels) accepted beyond the grid for off-grid spline reads.
SPATIAL_PAD = 2.0


def beta_coefficients(N: int, K: int, L: int, M: int):
    """Unit-coherency weights (beta2, beta3, beta4) = (K, L, M) / (N sqrt 2)."""
    for name, v in (("N", N), ("K", K), ("L", L), ("M", M)):
        if v < 1:
            raise ValueError(f"{name} must be >= 1, got {v}")
    scale = 1.0 / (N * math.sqrt(2.0))
    return K * scale, L * scale, M * scale


@dataclass(frozen=True)
class GridGeometry:
    """Grid spacings and per-channel coordinates used by the stencils."""

    dx: float
    dtheta: float
    df: float
    ds: float
    thetas: np.ndarray
    fs: np.ndarray

    @classmethod
    def from_params(cls, params: GaborParams) -> "GridGeometry":
        return cls(dx=1.0, dtheta=params.delta_theta, df=params.delta_f,
                   ds=params.delta_s, thetas=params.thetas,
                   fs=np.array(params.frequencies))


def _normalize_mode(mode: str) -> str:
    if mode in ("approx", "approximate"):
        return "approximate"
    if mode == "exact":
        return "exact"
    raise ValueError(f"unknown diffusion mode {mode!r}; use 'exact' or 'approximate'")


@dataclass
class DiffusionConfig:
    """Diffusion run settings.

    beta2/beta3/beta4 default to the unit-coherency formula for the volume
    they are applied to. tol = 0 disables the relative-change criterion so
    the run goes to t_max; the t_max cap is always active. Boundary policies
    are fixed: periodic orientation, replicate frequency/phase/spatial.
    """

    mode: str = "exact"
    beta2: float = None
    beta3: float = None
    beta4: float = None
    dt: float = 0.1
    t_max: float = 10.0
    tol: float = 1e-4
    stencil: str = "composition"
    spline_degree: int = 3

    def __post_init__(self):
        self.mode = _normalize_mode(self.mode)
        if self.stencil not in STENCILS:
            raise ValueError(f"unknown stencil {self.stencil!r}; use one of {STENCILS}")
        if self.spline_degree not in (1, 3):
            raise ValueError(f"spline degree must be 1 or 3, got {self.spline_degree}")
        if not (self.dt > 0):
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not (self.t_max > 0) or self.dt > self.t_max:
            raise ValueError(f"need 0 < dt <= t_max, got dt={self.dt}, t_max={self.t_max}")
        if self.tol < 0:
            raise ValueError(f"tol must be >= 0, got {self.tol}")
        for name in ("beta2", "beta3", "beta4"):
            b = getattr(self, name)
            if b is not None and b < 0:
                raise ValueError(f"{name} must be nonnegative, got {b}")

    def resolved_betas(self, N: int, K: int, L: int, M: int):
        b2, b3, b4 = beta_coefficients(N, K, L, M)
        return (self.beta2 if self.beta2 is not None else b2,
                self.beta3 if self.beta3 is not None else b3,
                self.beta4 if self.beta4 is not None else b4)


@dataclass
class LiftedMask:
    """Corrupted region: a pixel mask dilated across all feature channels.

    Responses within the filter support of corrupted pixels are themselves
    contaminated, so the pixel footprint is dilated (Chebyshev balls,
    3x3 structuring element iterated `dilation` times) before being swept
    across the (k, l, m) axes. dilation=0 uses the raw footprint.
    """

    pixel_mask: np.ndarray
    dilation: int = 2

    def __post_init__(self):
        mask = np.asarray(self.pixel_mask, dtype=bool)
        if mask.ndim != 2 or mask.shape[0] != mask.shape[1]:
            raise ValueError(f"pixel mask must be square 2D, got {mask.shape}")
        if self.dilation < 0:
            raise ValueError(f"dilation must be >= 0, got {self.dilation}")
        if mask.all():
            raise ValueError("mask corrupts every pixel; nothing to anchor on")
        self.pixel_mask = mask

    def lifted(self) -> np.ndarray:
        """Dilated 2D footprint; broadcast over channels marks the 5D region."""
        if self.dilation == 0:
            return self.pixel_mask.copy()
        out = ndimage.binary_dilation(self.pixel_mask, np.ones((3, 3), bool),
                                      iterations=self.dilation)
        if out.all():
            raise ValueError("dilated mask corrupts every pixel")
        return out


@dataclass
class EvolvingVolume:
    """Response volume mid-diffusion, with iteration bookkeeping."""

    data: np.ndarray
    params: GaborParams
    iteration: int = 0
    elapsed: float = 0.0


def _integer_shift(block: np.ndarray, di: int, dj: int) -> np.ndarray:
    """block[i+di, j+dj, ...] with edge replication on the two leading axes."""
    n0, n1 = block.shape[:2]
    idx_i = np.clip(np.arange(n0) + di, 0, n0 - 1)
    idx_j = np.clip(np.arange(n1) + dj, 0, n1 - 1)
    return block[np.ix_(idx_i, idx_j)]


def _cubic_bspline_taps(fr: float):
    """Weights of the cubic B-spline at distances fr+1, fr, fr-1, fr-2."""
    a = 1.0 - fr
    w0 = a ** 3 / 6.0
    w1 = 2.0 / 3.0 - fr * fr + 0.5 * fr ** 3
    w2 = 2.0 / 3.0 - a * a + 0.5 * a ** 3
    w3 = fr ** 3 / 6.0
    return ((-1, w0), (0, w1), (1, w2), (2, w3))


def _shift_along_axis(arr: np.ndarray, shift: float, axis: int, degree: int):
    """Sample arr at (index + shift) along one axis, edge replicated.

    A constant shift makes the B-spline evaluation a fixed small-tap
    convolution, so the whole stack is handled in a few vectorized passes.
    Degree-3 input must already hold spline coefficients.
    """
    n = arr.shape[axis]
    base = math.floor(shift)
    fr = shift - base
    if degree == 3:
        taps = _cubic_bspline_taps(fr)
    elif fr == 0.0:
        taps = ((0, 1.0),)
    else:
        taps = ((0, 1.0 - fr), (1, fr))
    out = None
    idx = np.arange(n)
    for d, w in taps:
        take = np.take(arr, np.clip(idx + base + d, 0, n - 1), axis=axis)
        out = w * take if out is None else out + w * take
    return out


def _sample_block(block: np.ndarray, ex: float, ey: float, degree: int):
    """u(q + e) and u(q - e) at every grid point, for each trailing slice.

    `block` has shape (N, N, ...); the shift applies to the leading spatial
    axes only. Integer offsets use exact shifted copies; fractional offsets
    go through tensor-product B-spline interpolation with replicate padding.
    Degree-3 data is prefiltered once along each spatial axis so the
    interpolant matches the grid samples.
    """
    if abs(ex - round(ex)) < 1e-12 and abs(ey - round(ey)) < 1e-12:
        di, dj = int(round(ex)), int(round(ey))
        return _integer_shift(block, di, dj), _integer_shift(block, -di, -dj)
    if degree == 3:
        out_dtype = np.complex128 if np.iscomplexobj(block) else np.float64
        c = ndimage.spline_filter1d(block, order=3, axis=0, mode="nearest",
                                    output=out_dtype)
        c = ndimage.spline_filter1d(c, order=3, axis=1, mode="nearest",
                                    output=out_dtype)
    else:
        c = block
    plus = _shift_along_axis(_shift_along_axis(c, ex, 0, degree), ey, 1, degree)
    minus = _shift_along_axis(_shift_along_axis(c, -ex, 0, degree), -ey, 1, degree)
    return plus, minus


def bspline_sample(grid: np.ndarray, x, y, degree: int = 3):
    """Evaluate the interpolating spline of a 2D grid at (x, y).

    The spline passes through the grid samples (degree 3 is prefiltered);
    outside the grid the data replicates. Coordinates may stray at most
    SPATIAL_PAD pixels beyond the grid.
    """
    if degree not in (1, 3):
        raise ValueError(f"degree must be 1 or 3, got {degree}")
    grid = np.asarray(grid)
    if grid.ndim != 2:
        raise ValueError(f"expected a 2D grid, got shape {grid.shape}")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n0, n1 = grid.shape
    if (x < -SPATIAL_PAD).any() or (x > n0 - 1 + SPATIAL_PAD).any() \
            or (y < -SPATIAL_PAD).any() or (y > n1 - 1 + SPATIAL_PAD).any():
        raise ValueError("sample coordinates outside the padded grid domain")
    out = ndimage.map_coordinates(grid, [np.atleast_1d(x), np.atleast_1d(y)],
                                  order=degree, mode="nearest")
    if x.ndim == 0:
        return out[0]
    return out


def _clipped(idx: np.ndarray, n: int) -> np.ndarray:
    return np.clip(idx, 0, n - 1)


def apply_generator(data: np.ndarray, geom: GridGeometry, betas,
                    mode: str = "exact", stencil: str = "composition",
                    degree: int = 3) -> np.ndarray:
    """Apply the discretized generator Lbar to a (N, N, K, L, M) volume."""
    mode = _normalize_mode(mode)
    if stencil not in STENCILS:
        raise ValueError(f"unknown stencil {stencil!r}")
    b2, b3, b4 = betas
    N, _, K, L, M = data.shape
    dx2 = geom.dx ** 2
    dth2 = geom.dtheta ** 2
    df2 = geom.df ** 2
    ds = geom.ds
    out = np.empty_like(data, dtype=complex if np.iscomplexobj(data) else float)

    lp = _clipped(np.arange(L) + 1, L)
    lm = _clipped(np.arange(L) - 1, L)
    mp = _clipped(np.arange(M) + 1, M)
    mm = _clipped(np.arange(M) - 1, M)

    for k in range(K):
        theta = geom.thetas[k]
        ct, st = math.cos(theta), math.sin(theta)
        u = data[:, :, k, :, :]                                  # (N, N, L, M)
        acc = np.zeros_like(out[:, :, k, :, :])

        # Offsets are one grid cell long in index units; the physical pitch
        # appears only in the denominators.
        sxi_p, sxi_m = _sample_block(u, ct, st, degree)
        acc += (sxi_p - 2.0 * u + sxi_m) / dx2                   # X1X1

        d2theta = (data[:, :, (k + 1) % K, :, :] - 2.0 * u
                   + data[:, :, (k - 1) % K, :, :]) / dth2       # X2X2, periodic
        acc += b2 ** 2 * d2theta

        if mode == "exact":
            seta_p, seta_m = _sample_block(u, -st, ct, degree)
            d2eta = (seta_p - 2.0 * u + seta_m) / dx2
            d2s_num = u[:, :, :, mp] - 2.0 * u + u[:, :, :, mm]  # replicate ends
            f2 = geom.fs[None, None, :, None] ** 2
            f1 = geom.fs[None, None, :, None]
            if stencil == "composition":
                cross = (seta_p[:, :, :, mp] - seta_m[:, :, :, mp]
                         - seta_p[:, :, :, mm] + seta_m[:, :, :, mm]) \
                    / (4.0 * geom.dx * ds)
                x33 = d2eta + f2 * d2s_num / ds ** 2 + 2.0 * f1 * cross
            else:
                cross_eta = (seta_p[:, :, :, mp] - seta_m[:, :, :, mp]
                             - seta_p[:, :, :, mm] + seta_m[:, :, :, mm])
                cross_xi = (sxi_p[:, :, :, mp] - sxi_m[:, :, :, mp]
                            - sxi_p[:, :, :, mm] + sxi_m[:, :, :, mm])
                x33 = (d2eta
                       + f2 * d2s_num / ds ** 2
                       + f1 * ct / (2.0 * ds * geom.dx) * cross_eta
                       - f1 * st / (2.0 * ds * geom.dx) * cross_xi
                       + f2 / (2.0 * ds) * d2s_num)
            acc += b3 ** 2 * x33

            d2f = (data[:, :, k, lp, :] - 2.0 * u + data[:, :, k, lm, :]) / df2
            acc += b4 ** 2 * d2f

        out[:, :, k, :, :] = acc
    return out


def second_difference(data: np.ndarray, geom: GridGeometry, which: str, at,
                      stencil: str = "composition", degree: int = 3):
    """Single discretized second derivative at index (i, j, k, l, m).

    Shares the sampling machinery of `apply_generator`, so values agree with
    the full update bit for bit.
    """
    if which not in SECOND_DIFF_KINDS:
        raise ValueError(f"unknown difference {which!r}; use one of {SECOND_DIFF_KINDS}")
    i, j, k, l, m = at
    N, _, K, L, M = data.shape
    if not (0 <= i < N and 0 <= j < N and 0 <= k < K and 0 <= l < L and 0 <= m < M):
        raise IndexError(f"index {at} out of range for shape {data.shape}")
    theta = geom.thetas[k]
    ct, st = math.cos(theta), math.sin(theta)

    if which == "X2X2":
        return (data[i, j, (k + 1) % K, l, m] - 2.0 * data[i, j, k, l, m]
                + data[i, j, (k - 1) % K, l, m]) / geom.dtheta ** 2
    if which == "X4X4":
        lp, lm = min(l + 1, L - 1), max(l - 1, 0)
        return (data[i, j, k, lp, m] - 2.0 * data[i, j, k, l, m]
                + data[i, j, k, lm, m]) / geom.df ** 2

    u = data[:, :, k, l, m]
    if which == "X1X1":
        sp, sm = _sample_block(u, ct, st, degree)
        return (sp[i, j] - 2.0 * u[i, j] + sm[i, j]) / geom.dx ** 2

    # X3X3
    mp, mm = min(m + 1, M - 1), max(m - 1, 0)
    f = geom.fs[l]
    ds = geom.ds
    sp, sm = _sample_block(u, -st, ct, degree)
    d2eta = (sp[i, j] - 2.0 * u[i, j] + sm[i, j]) / geom.dx ** 2
    up, um = data[:, :, k, l, mp], data[:, :, k, l, mm]
    d2s_num = up[i, j] - 2.0 * u[i, j] + um[i, j]
    sp_p, sm_p = _sample_block(up, -st, ct, degree)
    sp_m, sm_m = _sample_block(um, -st, ct, degree)
    if stencil == "composition":
        cross = (sp_p[i, j] - sm_p[i, j] - sp_m[i, j] + sm_m[i, j]) \
            / (4.0 * geom.dx * ds)
        return d2eta + f ** 2 * d2s_num / ds ** 2 + 2.0 * f * cross
    xp_p, xm_p = _sample_block(up, ct, st, degree)
    xp_m, xm_m = _sample_block(um, ct, st, degree)
    cross_eta = sp_p[i, j] - sm_p[i, j] - sp_m[i, j] + sm_m[i, j]
    cross_xi = xp_p[i, j] - xm_p[i, j] - xp_m[i, j] + xm_m[i, j]
    return (d2eta + f ** 2 * d2s_num / ds ** 2
            + f * ct / (2.0 * ds * geom.dx) * cross_eta
            - f * st / (2.0 * ds * geom.dx) * cross_xi
            + f ** 2 / (2.0 * ds) * d2s_num)


def stability_bound(geom: GridGeometry, betas, mode: str = "exact",
                    stencil: str = "composition") -> float:
    """Largest forward-Euler dt with nonnegative center weight.

    Sums the center-coefficient magnitudes of every active term, maximized
    over channels; the largest frequency dominates through the f^2 phase
    term. The paper-literal stencil carries an extra f^2/(2 ds) phase
    difference that tightens the bound further.
    """
    mode = _normalize_mode(mode)
    b2, b3, b4 = betas
    center = 2.0 / geom.dx ** 2 + 2.0 * b2 ** 2 / geom.dtheta ** 2
    if mode == "exact":
        f2max = float(np.max(geom.fs) ** 2)
        x33_center = 2.0 / geom.dx ** 2 + 2.0 * f2max / geom.ds ** 2
        if stencil == "paper-literal":
            x33_center += f2max / geom.ds
        center += b3 ** 2 * x33_center + 2.0 * b4 ** 2 / geom.df ** 2
    return 1.0 / center


def diffusion_step(data: np.ndarray, initial: np.ndarray, lifted: np.ndarray,
                   config: DiffusionConfig, geom: GridGeometry,
                   betas) -> np.ndarray:
    """One forward-Euler step followed by Dirichlet reimposition.

    Every entry whose pixel lies outside the corrupted footprint is reset to
    its value in `initial`, bit-exact.
    """
    if data.shape != initial.shape:
        raise ValueError(f"shape mismatch: {data.shape} vs {initial.shape}")
    lbar = apply_generator(data, geom, betas, mode=config.mode,
                           stencil=config.stencil, degree=config.spline_degree)
    new = data + config.dt * lbar
    if not np.isfinite(new).all():
        bound = stability_bound(geom, betas, config.mode, config.stencil)
        raise FloatingPointError(
            f"non-finite values in diffusion update; dt={config.dt} exceeds "
            f"the stability bound {bound:.6g} or the input was corrupt")
    new[~lifted] = initial[~lifted]
    return new


def run_diffusion(initial: ResponseVolume, mask: LiftedMask,
                  config: DiffusionConfig):
    """Iterate diffusion steps until the relative change drops below tol or
    the time cap is reached, whichever happens first.

    Returns (EvolvingVolume, stats); stats flags non-convergence instead of
    raising when the cap fires with the relative change still above tol.
    """
    geom = GridGeometry.from_params(initial.params)
    N = initial.N
    p = initial.params
    if mask.pixel_mask.shape != (N, N):
        raise ValueError(
            f"mask shape {mask.pixel_mask.shape} does not match volume N={N}")
    betas = config.resolved_betas(N, p.K, p.L, p.M)
    bound = stability_bound(geom, betas, config.mode, config.stencil)
    if config.dt > bound:
        warnings.warn(
            f"dt={config.dt} exceeds the stability bound {bound:.6g}; "
            f"the explicit update may blow up", RuntimeWarning, stacklevel=2)
    lifted = mask.lifted()

    t0 = time.perf_counter()
    u = initial.data.copy()
    max_iters = max(1, math.ceil(config.t_max / config.dt - 1e-9))
    rel = math.inf
    converged = False
    v = 0
    for v in range(1, max_iters + 1):
        new = diffusion_step(u, initial.data, lifted, config, geom, betas)
        num = float(np.linalg.norm((new - u).ravel()))
        den = float(np.linalg.norm(new.ravel()))
        rel = num / den if den > 0.0 else (0.0 if num == 0.0 else math.inf)
        u = new
        if rel < config.tol:
            converged = True
            break
    stats = {
        "iterations": v,
        "final_rel_change": rel,
        "dt": config.dt,
        "mode": config.mode,
        "wall_ms": 1000.0 * (time.perf_counter() - t0),
        "converged": converged,
        "stencil": config.stencil,
    }
    evolved = EvolvingVolume(data=u, params=p, iteration=v,
                             elapsed=v * config.dt)
    return evolved, stats
