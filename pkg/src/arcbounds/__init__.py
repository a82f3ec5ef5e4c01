"""Generalization-bound estimation from algorithm- and data-dependent output sets.

Build the set of learner outputs over all sign mixings of a ghost/primary
supersample, measure its empirical Rademacher complexity, its finite fractal
dimension and covering numbers, and check every bound against measured
generalization gaps at desk scale.
"""

from .kernels import available_backends, default_backend_id
from .metric import Metric, PointCloud, dedup, diameter, distance

__version__ = "0.1.0"
PRNG_ID = "numpy-PCG64(default_rng)"

__all__ = [
    "__version__",
    "PRNG_ID",
    "Metric",
    "PointCloud",
    "dedup",
    "diameter",
    "distance",
    "available_backends",
    "default_backend_id",
]
