"""Direction-of-arrival estimation with a y-reconfigurable (fluid antenna) planar array."""
from .array_model import (
    AnglePair,
    ArrayGeometry,
    position_vectors,
    solve_y_displacements,
    steering_correlation,
    steering_fa,
    steering_upa,
    steering_y_shift,
)
from .fa_pipeline import FaEstimate, SearchParams, estimate_fa_doa
from .signal_sim import SnapshotMatrix, SourceScenario, generate_snapshots

__all__ = [
    "AnglePair",
    "ArrayGeometry",
    "FaEstimate",
    "SearchParams",
    "SnapshotMatrix",
    "SourceScenario",
    "estimate_fa_doa",
    "generate_snapshots",
    "position_vectors",
    "solve_y_displacements",
    "steering_correlation",
    "steering_fa",
    "steering_upa",
    "steering_y_shift",
]
