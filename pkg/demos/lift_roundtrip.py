"""Lift a texture into the 5D response volume and invert it back.

Shows the per-channel structure of the lift (orientation energy map and a
few channel magnitudes) and measures how close inverse(lift(I)) comes to
the original after the usual affine range fix-up.

Run:  python3 demos/lift_roundtrip.py
"""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from cortico import (
    GaborParams,
    affine_fit,
    default_frequencies,
    inverse_transform,
    lift,
    make_bank,
)
from cortico import synth

OUT = Path(__file__).parent / "output"


def main():
    OUT.mkdir(exist_ok=True)
    img = synth.weave_texture(64, seed=1)
    params = GaborParams(sigma=2.0, K=16,
                         frequencies=default_frequencies(0.5, 1.75, 6), M=5)
    bank = make_bank(params)

    volume = lift(img, bank)
    recon = inverse_transform(volume, bank)

    r = params.support_radius
    inner = np.zeros(img.shape, bool)
    inner[r:-r, r:-r] = True
    a, b = affine_fit(recon, img, inner)
    fitted = a * recon + b
    err = np.linalg.norm((fitted - img)[inner]) / np.linalg.norm(img[inner])
    print(f"interior relative L2 round-trip error: {err:.4f}")

    orientation_energy = np.abs(volume.data).sum(axis=(1, 3, 4))  # (N, K)
    fig, axes = plt.subplots(2, 3, figsize=(12, 7))
    axes[0, 0].imshow(img, cmap="gray", vmin=0, vmax=1)
    axes[0, 0].set_title("input")
    axes[0, 1].imshow(fitted, cmap="gray", vmin=0, vmax=1)
    axes[0, 1].set_title(f"inverse(lift(I)), rel err {err:.3f}")
    axes[0, 2].imshow(np.abs(fitted - img), cmap="magma")
    axes[0, 2].set_title("abs error")
    k_peak = int(np.argmax(np.abs(volume.data).sum(axis=(0, 1, 3, 4))))
    axes[1, 0].imshow(np.abs(volume.data[:, :, k_peak, 2, 0]), cmap="viridis")
    axes[1, 0].set_title(f"|O| at peak orientation (k={k_peak})")
    axes[1, 1].imshow(np.real(volume.data[:, :, k_peak, 2, 0]), cmap="coolwarm")
    axes[1, 1].set_title("Re O (same channel)")
    axes[1, 2].imshow(orientation_energy, aspect="auto", cmap="viridis")
    axes[1, 2].set_title("orientation energy by row")
    for ax in axes.flat:
        ax.set_xticks([])
        ax.set_yticks([])
    fig.tight_layout()
    fig.savefig(OUT / "lift_roundtrip.png", dpi=130)
    print(f"wrote {OUT / 'lift_roundtrip.png'}")


if __name__ == "__main__":
    main()
