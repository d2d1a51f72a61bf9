from pathlib import Path

import numpy as np
import pytest

from flowgdp import _kernels
from flowgdp.model import City, DistanceMatrix, FlowMatrix, GdpRecord, RegionDataset, VehicleClass

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture
def toy_dir():
    return FIXTURES / "toy"


@pytest.fixture(params=sorted(_kernels.available_backends()))
def kernels(request, monkeypatch):
    """Run the test under each available kernel backend (python, and cython when built)."""
    impl = _kernels.available_backends()[request.param]
    monkeypatch.setattr(_kernels, "lasso_cd", impl.lasso_cd)
    monkeypatch.setattr(_kernels, "brandes", impl.brandes)
    return impl


def make_dataset(flows_by_class: dict, ids, year=2014, dist=None, gdp=None):
    """Small in-memory dataset from dense arrays keyed by class name."""
    n = len(ids)
    if dist is None:
        dist = np.ones((n, n)) * 10.0
    flows = tuple(FlowMatrix.from_array(year, vc, ids, arr) for vc, arr in flows_by_class.items())
    gdp = gdp if gdp is not None else [1.0 + k for k in range(n)]
    return RegionDataset(
        tuple(City(c) for c in ids),
        tuple(GdpRecord(c, year, float(g)) for c, g in zip(ids, gdp)),
        DistanceMatrix.from_array(ids, dist),
        flows,
    )
