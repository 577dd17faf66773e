"""Alpha matting toolkit: compositing, losses, fusion, layer estimation,
trimaps, augmentation, and the standard matte metrics, file-in/file-out."""

__version__ = "0.1.0"

from .augment import (
    SampleSpec,
    SamplingError,
    TTATransform,
    dihedral_transforms,
    make_sample,
    make_sample_with_meta,
    merge_second_fg,
    tta_forward,
    tta_inverse,
    tta_merge,
)
from .core import (
    ColorMap,
    ConvergenceError,
    DimensionMismatchError,
    FileFormatError,
    MattingError,
    PixelMap,
    PredictionSet,
    ValueRangeError,
    clamp_unit,
    composite,
    premultiply,
)
from .fgbg import FBSolveParams, solve_fb, system_residual
from .fusion import FusionParams, composite_residual, fuse
from .losses import (
    EmptyRegionError,
    EvalMask,
    LossReport,
    composition_loss_alpha,
    composition_loss_fb,
    exclusion_loss,
    gradient_loss_alpha,
    l1_alpha,
    l1_fb,
    laplacian_loss,
    laplacian_loss_color,
    total_loss,
)
from .metrics import (
    ConnectivitySourceError,
    MetricReport,
    connectivity_error,
    evaluate_alpha,
    fg_composite_metrics,
    gradient_error,
    mse,
    sad,
)
from .pyramid import LaplacianPyramid, build_pyramid, build_pyramid_color, reconstruct
from .trimap import (
    Trimap,
    TrimapEncoding,
    encode_trimap,
    generate_trimap,
    trimap_from_file,
    trimap_from_radii,
    trimap_to_file,
)

__all__ = [
    "__version__",
    "ColorMap",
    "ConnectivitySourceError",
    "ConvergenceError",
    "DimensionMismatchError",
    "EmptyRegionError",
    "EvalMask",
    "FBSolveParams",
    "FileFormatError",
    "FusionParams",
    "LaplacianPyramid",
    "LossReport",
    "MattingError",
    "MetricReport",
    "PixelMap",
    "PredictionSet",
    "SampleSpec",
    "SamplingError",
    "Trimap",
    "TrimapEncoding",
    "TTATransform",
    "ValueRangeError",
    "build_pyramid",
    "build_pyramid_color",
    "clamp_unit",
    "composite",
    "composite_residual",
    "composition_loss_alpha",
    "composition_loss_fb",
    "connectivity_error",
    "dihedral_transforms",
    "encode_trimap",
    "evaluate_alpha",
    "exclusion_loss",
    "fg_composite_metrics",
    "fuse",
    "generate_trimap",
    "gradient_error",
    "gradient_loss_alpha",
    "l1_alpha",
    "l1_fb",
    "laplacian_loss",
    "laplacian_loss_color",
    "make_sample",
    "make_sample_with_meta",
    "merge_second_fg",
    "mse",
    "premultiply",
    "reconstruct",
    "sad",
    "solve_fb",
    "system_residual",
    "total_loss",
    "trimap_from_file",
    "trimap_from_radii",
    "trimap_to_file",
    "tta_forward",
    "tta_inverse",
    "tta_merge",
]
