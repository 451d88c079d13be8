"""TV-TV minimization post-processing for single-image super-resolution."""
from .errors import (ConfigError, DimensionError, InstanceTooLarge, RangeError,
                     SolverFailure, TvtvError)
from .imaging import psnr, ssim, luminance, read_image, write_image, vectorize, devectorize
from .operators import DiffOperator, DownsampleOperator, FourierDiagonal, tv_norm
from .prox import AffineProjector, L1L1ProxParams, prox_l1l1
from .solver import SolveReport, SolverOptions, TvTvProblem, objective, solve_tvtv

__version__ = "0.1.0"

__all__ = [
    "AffineProjector", "ConfigError", "DiffOperator", "DimensionError", "DownsampleOperator",
    "FourierDiagonal", "InstanceTooLarge", "L1L1ProxParams", "RangeError", "SolveReport",
    "SolverFailure", "SolverOptions", "TvTvProblem", "TvtvError", "devectorize", "luminance",
    "objective", "prox_l1l1", "psnr", "read_image", "solve_tvtv", "ssim", "tv_norm",
    "vectorize", "write_image",
]
