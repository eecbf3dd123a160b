from .energies import energy_boundary, energy_closed_form, energy_direct
from .pairing import (
    gram_matrix,
    instanton_curvature,
    intersection_matrix,
    quantization_check,
    stokes_crosscheck,
)
from .partition import PartitionResult, partition_classical
from .periods import PeriodTable, period_direct, period_localized, period_table
from .quadrature import QuadratureSpec

__all__ = [
    "QuadratureSpec", "PeriodTable", "PartitionResult",
    "period_localized", "period_direct", "period_table",
    "energy_boundary", "energy_direct", "energy_closed_form",
    "gram_matrix", "intersection_matrix", "stokes_crosscheck",
    "instanton_curvature", "quantization_check", "partition_classical",
]
