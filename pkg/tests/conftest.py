import numpy as np
import pytest

from dropcal import _pykernels
from dropcal.binned_metrics import PredictionRecord

try:
    from dropcal import _ckernels
except ImportError:  # extension not built
    _ckernels = None

KERNEL_BACKENDS = [pytest.param(_pykernels, id="python")]
if _ckernels is not None:
    KERNEL_BACKENDS.append(pytest.param(_ckernels, id="cython"))


@pytest.fixture(params=KERNEL_BACKENDS)
def kernels(request, monkeypatch):
    """Run a test once per kernel backend by patching every importer."""
    import dropcal.binned_metrics
    import dropcal.prob_core

    monkeypatch.setattr(dropcal.prob_core, "kernels", request.param)
    monkeypatch.setattr(dropcal.binned_metrics, "kernels", request.param)
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def uce_example():
    """Four records: bin 0 holds uncertainties 0.2/0.4 with one wrong,
    bin 1 holds 0.6/0.8 with both wrong (m = 2)."""
    return [
        PredictionRecord(confidence=0.9, uncertainty=0.2, predicted=0, label=0),
        PredictionRecord(confidence=0.8, uncertainty=0.4, predicted=1, label=0),
        PredictionRecord(confidence=0.6, uncertainty=0.6, predicted=2, label=0),
        PredictionRecord(confidence=0.5, uncertainty=0.8, predicted=1, label=2),
    ]
