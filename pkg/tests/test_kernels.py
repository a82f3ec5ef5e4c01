import numpy as np
import pytest

from arcbounds.kernels import available_backends, default_backend_id, get_kernel, pure


def test_python_backend_always_available():
    assert "python" in available_backends()


def test_default_prefers_compiled_when_built(monkeypatch):
    monkeypatch.delenv("ARCBOUNDS_BACKEND", raising=False)
    backends = available_backends()
    assert default_backend_id() == backends[0]


def test_env_override(monkeypatch):
    monkeypatch.setenv("ARCBOUNDS_BACKEND", "python")
    assert get_kernel() is pure


def test_explicit_python(monkeypatch):
    monkeypatch.setenv("ARCBOUNDS_BACKEND", "c")  # explicit argument wins over env
    assert get_kernel("python") is pure


def test_pure_rejects_bad_shapes():
    with pytest.raises(ValueError):
        pure.signed_max_values(np.zeros(3))
    with pytest.raises(ValueError):
        pure.signed_max_values(np.zeros((0, 2)))
    with pytest.raises(ValueError):
        pure.signed_max_values(np.zeros((1, 31)))


def test_pure_enumeration_order():
    # out[k] uses sign +1 on bit i of k: k=1 flips only position 0
    v = np.array([[1.0, 10.0]])
    out = pure.signed_max_values(v)
    assert out[0] == -11.0 and out[1] == -9.0 and out[2] == 9.0 and out[3] == 11.0
