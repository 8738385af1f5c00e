"""Compound-structure operators on discretized flat tori."""

from ._core import (
    apply_operator_norms,
    builtin_config,
    builtin_config_names,
    flow,
    functional_value,
    gradient_norm,
    residual,
    validate,
)

__all__ = [
    "apply_operator_norms",
    "builtin_config",
    "builtin_config_names",
    "flow",
    "functional_value",
    "gradient_norm",
    "residual",
    "validate",
]
