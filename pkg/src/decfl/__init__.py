"""Simulator for uncoordinated decentralised federated learning.

Subpackages: graph (communication networks), spectral (averaging operator
and its stationary vector), diffusion (simplified early-round model),
neural (from-scratch MLP + optimisers), federation (the training loop),
cli (experiment runner).
"""

from ._kernels import BACKEND as kernel_backend

__version__ = "0.1.0"
__all__ = ["kernel_backend", "__version__"]
