"""Information-theoretic upper bounds on the reward of sensor-based policies."""

from .bounds import (
    BoundReport,
    generalized_fano_bound,
    horizon_sweep,
    multi_step_bound,
    optimize_f,
    single_step_bound,
)
from .divergence import (
    FGenerator,
    PiecewiseLinearF,
    bernoulli_fdiv,
    builtin_generators,
    discrete_fdiv,
    gaussian_kl,
    get_generator,
    piecewise_linear_family,
)
from .finverse import InverseSolution, f_inverse, f_inverse_right
from .tasks import DiscreteTask, GaussianTask, ResourceCapError, SampledTask

__version__ = "0.1.0"

__all__ = [
    "BoundReport",
    "DiscreteTask",
    "FGenerator",
    "GaussianTask",
    "InverseSolution",
    "PiecewiseLinearF",
    "ResourceCapError",
    "SampledTask",
    "bernoulli_fdiv",
    "builtin_generators",
    "discrete_fdiv",
    "f_inverse",
    "f_inverse_right",
    "gaussian_kl",
    "generalized_fano_bound",
    "get_generator",
    "horizon_sweep",
    "multi_step_bound",
    "optimize_f",
    "piecewise_linear_family",
    "single_step_bound",
]
