"""Chart-agnostic Riemannian geometry on exact second-order jets."""

from .core import (
    Jet2Metric,
    MetricChart,
    FunctionChart,
    TwoFormValue,
    curvature,
    hodge,
    hodge_star,
    killing_forms,
)
from .jet import Jet, variables

__all__ = [
    "Jet", "variables", "Jet2Metric", "MetricChart", "FunctionChart", "TwoFormValue",
    "curvature", "hodge", "hodge_star", "killing_forms",
]
