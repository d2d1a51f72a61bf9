"""Regional GDP and highway origin-destination flow analysis."""
from ._kernels import BACKEND as KERNEL_BACKEND
from .model import (
    FEATURE_NAMES,
    City,
    DistanceMatrix,
    FeatureTable,
    FlowMatrix,
    GdpRecord,
    RegionDataset,
    VehicleClass,
    extract_features,
    validate,
)

__version__ = "0.1.0"
