"""Kernel dispatch: compiled Cython core if importable, numpy otherwise."""
import os

from . import _pykernels

BACKEND = "python"

if os.environ.get("CORRWITNESS_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _impl
    except ImportError:
        _impl = _pykernels
    else:
        BACKEND = "cython"
else:
    _impl = _pykernels

coherence_sweep = _impl.coherence_sweep
loglik_grad = _impl.loglik_grad
params_to_factor = _pykernels.params_to_factor
factor_to_params = _pykernels.factor_to_params

__all__ = [
    "BACKEND",
    "coherence_sweep",
    "loglik_grad",
    "params_to_factor",
    "factor_to_params",
]
