"""fflab: desk-scale harmonic analysis on self-similar measures.

Evaluates transforms of self-similar measures with certified error,
oscillatory integrals of nonlinear phases, frequency censuses, sparse
polynomial coverings, and fine-scale statistics of power sequences
modulo one.
"""

from . import census, finescale, ifs, measure, oscillatory, polycover
from .errors import FractalLabError
from .ifs import (
    CutSet,
    IteratedFunctionSystem,
    SimilarityMap,
    Word,
    cut_set,
    cylinder_interval,
    load_ifs_config,
    sample_point,
    validate_ifs,
)
from .kernels import HAVE_EXTENSION, backend_name
from .measure import (
    SelfSimilarMeasure,
    fourier_homogeneous_product,
    fourier_transform,
    fourier_transform_many,
    frostman_exponent_estimate,
    interval_mass,
)

__version__ = "0.1.0"

__all__ = [
    "CutSet",
    "FractalLabError",
    "HAVE_EXTENSION",
    "IteratedFunctionSystem",
    "SelfSimilarMeasure",
    "SimilarityMap",
    "Word",
    "backend_name",
    "census",
    "cut_set",
    "cylinder_interval",
    "finescale",
    "fourier_homogeneous_product",
    "fourier_transform",
    "fourier_transform_many",
    "frostman_exponent_estimate",
    "ifs",
    "interval_mass",
    "load_ifs_config",
    "measure",
    "oscillatory",
    "polycover",
    "sample_point",
    "validate_ifs",
]
