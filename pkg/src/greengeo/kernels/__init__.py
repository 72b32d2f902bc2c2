"""Tensor-assembly kernels with a compiled fast path.

The Cython extension ``greengeo.kernels._fast`` implements the same batched
kernels as the pure-numpy module ``greengeo.kernels._ref``. The fastest
available backend is selected once at import time; set the environment
variable ``GREENGEO_PURE_PYTHON=1`` to force the numpy fallback.

``BACKEND`` records which implementation is active ("compiled" or "python").
"""

import os

from . import _ref

__all__ = [
    "BACKEND",
    "christoffel",
    "christoffel_derivative",
    "ricci_from_jet",
    "covariant_hessian",
    "vector_divergence",
    "tensor_divergence",
    "sym2_norm2",
    "raise_index",
]

_impl = _ref
BACKEND = "python"

if not os.environ.get("GREENGEO_PURE_PYTHON"):
    try:
        from . import _fast

        _impl = _fast
        BACKEND = "compiled"
    except ImportError:
        pass

christoffel = _impl.christoffel
christoffel_derivative = _impl.christoffel_derivative
ricci_from_jet = _impl.ricci_from_jet
covariant_hessian = _impl.covariant_hessian
vector_divergence = _impl.vector_divergence
tensor_divergence = _impl.tensor_divergence
sym2_norm2 = _impl.sym2_norm2
raise_index = _impl.raise_index
