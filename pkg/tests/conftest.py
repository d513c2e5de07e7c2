import pytest

from ribvm import _kernels, _pykernels

try:
    from ribvm import _ckernels
except ImportError:  # extension not built
    _ckernels = None

BACKENDS = ["pure"] + (["compiled"] if _ckernels is not None else [])


@pytest.fixture(params=BACKENDS)
def backend(request, monkeypatch):
    """Run the test once per available kernel implementation."""
    impl = _pykernels if request.param == "pure" else _ckernels
    monkeypatch.setattr(_kernels, "_impl", impl)
    return request.param
