"""Occlusion completion for grayscale images through a 5D cortical lift.

The package lifts an image into a position x orientation x frequency x
phase response volume with a Gabor filter bank, diffuses the responses
along the horizontal directions of that space while holding uncorrupted
data fixed, and maps the evolved volume back to the plane.

Modules:
    geometry  - contact one-form, horizontal frame, Lie brackets, curves
    gabor     - filter bank, lifting, exact inversion, channel projection
    diffusion - discretized generator, stencils, forward-Euler evolution
    pipeline  - end-to-end completion, image/mask/CRTX file handling
    synth     - synthetic test images and occlusion masks
    cli       - command-line entry point (`cortico`)
"""

from .diffusion import (
    DiffusionConfig,
    EvolvingVolume,
    GridGeometry,
    LiftedMask,
    beta_coefficients,
    bspline_sample,
    run_diffusion,
    second_difference,
    stability_bound,
)
from .gabor import (
    GaborBank,
    GaborParams,
    ResponseVolume,
    affine_fit,
    default_frequencies,
    gabor_eval,
    inverse_transform,
    lift,
    make_bank,
    project_sum,
)
from .geometry import (
    CorticalPoint,
    IntegralCurve,
    TangentVector5,
    curve_fan,
    horizontal_frame,
    integrate_curve,
    lie_bracket,
    one_form_eval,
    spanning_matrix,
)
from .pipeline import (
    CompletionReport,
    CompletionRequest,
    complete_image,
    load_image,
    load_mask,
    load_volume,
    rmse_region,
    save_image,
    save_volume,
)

__version__ = "0.1.0"

__all__ = [
    "CompletionReport",
    "CompletionRequest",
    "CorticalPoint",
    "DiffusionConfig",
    "EvolvingVolume",
    "GaborBank",
    "GaborParams",
    "GridGeometry",
    "IntegralCurve",
    "LiftedMask",
    "ResponseVolume",
    "TangentVector5",
    "affine_fit",
    "beta_coefficients",
    "bspline_sample",
    "complete_image",
    "curve_fan",
    "default_frequencies",
    "gabor_eval",
    "horizontal_frame",
    "integrate_curve",
    "inverse_transform",
    "lie_bracket",
    "lift",
    "load_image",
    "load_mask",
    "load_volume",
    "make_bank",
    "one_form_eval",
    "project_sum",
    "rmse_region",
    "run_diffusion",
    "save_image",
    "save_volume",
    "second_difference",
    "spanning_matrix",
    "stability_bound",
]
