"""Generalized reparameterization gradients for variational inference."""

from ._core import (
    BetaBernoulliToy,
    DomainError,
    GammaPoissonToy,
    Model,
    NumericalError,
    ParseError,
    RangeError,
    digamma,
    estimate_gradient,
    estimator_variance,
    fit,
    log_gamma,
    run,
    step_sizes,
    tetragamma,
    transform_evaluate,
    transform_forward,
    transform_inverse,
    trigamma,
)

__all__ = [
    "BetaBernoulliToy",
    "DomainError",
    "GammaPoissonToy",
    "Model",
    "NumericalError",
    "ParseError",
    "RangeError",
    "digamma",
    "estimate_gradient",
    "estimator_variance",
    "fit",
    "log_gamma",
    "run",
    "step_sizes",
    "tetragamma",
    "transform_evaluate",
    "transform_forward",
    "transform_inverse",
    "trigamma",
]
