"""Gabor filter bank, lifting of images to 5D response volumes, and inversion.

A grayscale image I on an N x N pixel grid is "lifted" to a complex response
volume O[i, j, k, l, m] over position x orientation x frequency x phase by
correlating it with a family of Gabor atoms

    psi(dx, dy) = 1/(2 sigma^2) * exp(-i (r . (dx, dy) - (s - phi_m)))
                  * exp(-(dx^2 + dy^2) / (2 sigma^2)),

with wave vector r = (-f_l sin(theta_k), f_l cos(theta_k)), sampled at s = 0.
Orientations theta_k = k pi / K cover the half-circle, frequencies come from
an explicit list (radians per pixel), and phases phi_m = m * delta_s.

Reconstruction accumulates sqrt(f_l) * O * conj(psi) over all channels and
divides by a reference atom norm. With truncated discrete atoms the
transform pair is only approximately tight, so reconstructions are usually
passed through `affine_fit` against known pixels to recover the display
range; the fit does not alter structure.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import signal

# FFT-based correlation kicks in at this image size; below it, direct sums
# are cheaper and serve as the reference path.
FFT_SIZE_THRESHOLD = 64


def default_frequencies(f_min: float, f_max: float, count: int) -> tuple:
    """`count` frequencies uniformly spanning [f_min, f_max]."""
    if count == 1:
        return (float(f_min),)
    return tuple(np.linspace(f_min, f_max, count))


@dataclass(frozen=True)
class GaborParams:
    """Filter bank layout.

    sigma: Gaussian scale in pixels.
    K: number of orientations on [0, pi).
    frequencies: strictly increasing positive list, radians per pixel.
    M: number of phase channels.
    delta_s: phase spacing; defaults to (pi/2) / (M - 1) so that M = 5
        reproduces the phase set {0, pi/8, ..., pi/2}.
    support_radius: filter half-width in pixels, at least ceil(3 sigma).
    """

    sigma: float = 2.0
    K: int = 32
    frequencies: tuple = field(default_factory=lambda: default_frequencies(2.0, 8.0, 12))
    M: int = 5
    delta_s: float = None
    support_radius: int = None

    def __post_init__(self):
        if self.sigma <= 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        if self.K < 2:
            raise ValueError(f"need at least 2 orientations, got {self.K}")
        if self.M < 1:
            raise ValueError(f"need at least 1 phase, got {self.M}")
        freqs = tuple(float(f) for f in self.frequencies)
        if len(freqs) < 1:
            raise ValueError("need at least one frequency")
        if any(f <= 0 for f in freqs):
            raise ValueError(f"frequencies must be positive, got {freqs}")
        if any(b <= a for a, b in zip(freqs, freqs[1:])):
            raise ValueError(f"frequencies must be strictly increasing, got {freqs}")
        object.__setattr__(self, "frequencies", freqs)
        if self.delta_s is None:
            ds = (math.pi / 2) / (self.M - 1) if self.M > 1 else math.pi / 2
            object.__setattr__(self, "delta_s", ds)
        if self.delta_s <= 0:
            raise ValueError(f"delta_s must be positive, got {self.delta_s}")
        min_radius = math.ceil(3 * self.sigma)
        if self.support_radius is None:
            object.__setattr__(self, "support_radius", min_radius)
        if self.support_radius < min_radius:
            raise ValueError(
                f"support_radius {self.support_radius} below ceil(3*sigma)={min_radius}")

    @property
    def L(self) -> int:
        return len(self.frequencies)

    @property
    def delta_theta(self) -> float:
        return math.pi / self.K

    @property
    def delta_f(self) -> float:
        if self.L < 2:
            return 1.0
        return float(np.mean(np.diff(self.frequencies)))

    @property
    def thetas(self) -> np.ndarray:
        return np.arange(self.K) * self.delta_theta

    @property
    def phase_values(self) -> np.ndarray:
        return np.arange(self.M) * self.delta_s

    def aliased_frequencies(self) -> tuple:
        """Frequencies above pi rad/pixel, which alias on the integer grid."""
        return tuple(f for f in self.frequencies if f > math.pi)


def gabor_eval(params: GaborParams, k: int, l: int, m: int,
               dx, dy, s: float = 0.0):
    """Evaluate the (k, l, m) atom at spatial offset (dx, dy) and phase s."""
    if not (0 <= k < params.K and 0 <= l < params.L and 0 <= m < params.M):
        raise IndexError(f"channel index ({k}, {l}, {m}) out of range")
    theta = k * params.delta_theta
    f = params.frequencies[l]
    phi = m * params.delta_s
    dx = np.asarray(dx, dtype=float)
    dy = np.asarray(dy, dtype=float)
    wave_arg = -f * math.sin(theta) * dx + f * math.cos(theta) * dy
    pref = 1.0 / (2.0 * params.sigma ** 2)
    envelope = np.exp(-(dx ** 2 + dy ** 2) / (2.0 * params.sigma ** 2))
    out = pref * np.exp(-1j * (wave_arg - (s - phi))) * envelope
    if out.ndim == 0:
        return complex(out)
    return out


@dataclass
class GaborBank:
    """Sampled atoms plus norms.

    atoms has shape (K, L, M, P, P) with P = 2 * support_radius + 1; axis 3
    is the x offset and axis 4 the y offset, both in -R..R. bank_norm is the
    discrete L2 norm of the reference atom (k=0, lowest frequency, m=0) used
    to scale reconstructions.
    """

    params: GaborParams
    atoms: np.ndarray
    atom_norms: np.ndarray
    bank_norm: float

    @property
    def offsets(self) -> np.ndarray:
        r = self.params.support_radius
        return np.arange(-r, r + 1)


def make_bank(params: GaborParams) -> GaborBank:
    """Sample every (k, l, m) atom at s = 0 on the integer offset grid."""
    r = params.support_radius
    off = np.arange(-r, r + 1, dtype=float)
    dx, dy = np.meshgrid(off, off, indexing="ij")
    pref = 1.0 / (2.0 * params.sigma ** 2)
    envelope = np.exp(-(dx ** 2 + dy ** 2) / (2.0 * params.sigma ** 2))

    thetas = params.thetas
    freqs = np.array(params.frequencies)
    # wave_arg[k, l, :, :] = -f_l sin(theta_k) dx + f_l cos(theta_k) dy
    wave_arg = (-np.sin(thetas)[:, None, None, None] * dx
                + np.cos(thetas)[:, None, None, None] * dy) \
        * freqs[None, :, None, None]
    base = pref * envelope * np.exp(-1j * wave_arg)          # (K, L, P, P)
    phase_factors = np.exp(-1j * params.phase_values)        # (M,)
    atoms = base[:, :, None, :, :] * phase_factors[None, None, :, None, None]

    atom_norms = np.sqrt(np.sum(np.abs(atoms) ** 2, axis=(3, 4)))
    bank_norm = float(atom_norms[0, 0, 0])
    return GaborBank(params=params, atoms=atoms, atom_norms=atom_norms,
                     bank_norm=bank_norm)


@dataclass
class ResponseVolume:
    """Complex 5D response array of shape (N, N, K, L, M)."""

    data: np.ndarray
    params: GaborParams

    def __post_init__(self):
        expected = (self.N, self.N, self.params.K, self.params.L, self.params.M)
        if self.data.shape != expected:
            raise ValueError(
                f"volume shape {self.data.shape} does not match params {expected}")

    @property
    def N(self) -> int:
        return self.data.shape[0]


def validate_image(image) -> np.ndarray:
    """Check an array is a finite square 2D grayscale grid; return float64."""
    arr = np.asarray(image, dtype=float)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ValueError(f"image must be square 2D, got shape {arr.shape}")
    if not np.isfinite(arr).all():
        raise ValueError("image contains non-finite values")
    return arr


def lift(image, bank: GaborBank, method: str = "auto",
         threads: int = 1) -> ResponseVolume:
    """Gabor-transform an image into the 5D response volume.

    Each output channel is the zero-padded correlation of the image with the
    corresponding atom: O[i, j, k, l, m] = sum_d psi_klm(d) I[i+d1, j+d2].
    The 'fft' path exploits that phase channels differ only by a constant
    factor exp(-i phi_m); the 'direct' path evaluates every channel as a
    plain discrete sum. 'auto' picks fft for N >= 64.
    """
    arr = validate_image(image)
    p = bank.params
    n = arr.shape[0]
    if n <= 2 * p.support_radius:
        raise ValueError(
            f"image size {n} must exceed filter diameter {2 * p.support_radius}")
    if method == "auto":
        method = "fft" if n >= FFT_SIZE_THRESHOLD else "direct"
    if method not in ("fft", "direct"):
        raise ValueError(f"unknown lift method {method!r}")

    out = np.empty((n, n, p.K, p.L, p.M), dtype=complex)
    phase_factors = np.exp(-1j * p.phase_values)

    def run_orientation(k):
        for l in range(p.L):
            if method == "fft":
                kernel = bank.atoms[k, l, 0]
                base = signal.convolve(arr, kernel[::-1, ::-1], mode="same",
                                       method="fft")
                for m in range(p.M):
                    out[:, :, k, l, m] = base * phase_factors[m]
            else:
                for m in range(p.M):
                    kernel = bank.atoms[k, l, m]
                    out[:, :, k, l, m] = signal.convolve(
                        arr, kernel[::-1, ::-1], mode="same", method="direct")

    _run_over_orientations(run_orientation, p.K, threads)
    return ResponseVolume(data=out, params=p)


def _run_over_orientations(fn, K, threads):
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(fn, range(K)))
    else:
        for k in range(K):
            fn(k)


def _inverse_sum(volume: ResponseVolume, bank: GaborBank,
                 threads: int = 1) -> np.ndarray:
    """Complex reconstruction sum before taking the real part."""
    p = bank.params
    sqrt_f = np.sqrt(np.array(p.frequencies))
    partial = np.zeros((p.K, volume.N, volume.N), dtype=complex)

    def run_orientation(k):
        acc = partial[k]
        for l in range(p.L):
            for m in range(p.M):
                kern = np.conj(bank.atoms[k, l, m])
                acc += sqrt_f[l] * signal.convolve(
                    volume.data[:, :, k, l, m], kern, mode="same", method="fft")

    _run_over_orientations(run_orientation, p.K, threads)
    # Fixed summation order keeps the result independent of thread count.
    return partial.sum(axis=0) / bank.bank_norm


def inverse_transform(volume: ResponseVolume, bank: GaborBank,
                      threads: int = 1) -> np.ndarray:
    """Reconstruct an image from a response volume.

    Returns the real part of the channel-and-space sum of
    sqrt(f_l) * U * conj(psi), divided by the bank norm. No clamping is
    applied; export-time policies handle the display range.
    """
    if volume.data.shape[2:] != (bank.params.K, bank.params.L, bank.params.M):
        raise ValueError(
            f"volume channels {volume.data.shape[2:]} do not match bank "
            f"({bank.params.K}, {bank.params.L}, {bank.params.M})")
    return _inverse_sum(volume, bank, threads=threads).real


def project_sum(volume: ResponseVolume, reference=None, region=None) -> np.ndarray:
    """Project a single-frequency volume to the plane by summing channels.

    I[i, j] = Re( sum_{k, m} U[i, j, k, 0, m] ). Only valid for L = 1,
    where the reconstruction sum is not available; multi-frequency volumes
    must go through `inverse_transform`. If `reference` is given the result
    is affinely matched to it over `region` (default: everywhere).
    """
    if volume.params.L != 1:
        raise ValueError(
            f"project_sum requires a single-frequency volume (L=1), got "
            f"L={volume.params.L}; use inverse_transform instead")
    img = volume.data[:, :, :, 0, :].sum(axis=(2, 3)).real
    if reference is not None:
        a, b = affine_fit(img, reference, region)
        img = a * img + b
    return img


def affine_fit(source, target, region=None):
    """Least-squares (slope, intercept) mapping source -> target.

    When `region` (boolean mask) is given, the fit uses only those pixels.
    A constant source maps to the target mean with zero slope.
    """
    src = np.asarray(source, dtype=float)
    tgt = np.asarray(target, dtype=float)
    if region is not None:
        src = src[region]
        tgt = tgt[region]
    src = src.ravel()
    tgt = tgt.ravel()
    var = src.var()
    if var == 0.0:
        return 0.0, float(tgt.mean())
    slope = float(np.cov(src, tgt, bias=True)[0, 1] / var)
    intercept = float(tgt.mean() - slope * src.mean())
    return slope, intercept
