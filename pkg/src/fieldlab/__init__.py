"""Simulation and verification lab for partial sums of lattice random fields.

Modules: `lattice` (integer blocks and cone geometry), `theory` (constant
calculus and block-scheme design), `fields` (stationary models and
reproducible sampling), `sums` (prefix-sum grids and exact second-moment
oracles), `coupling` (quantile-transform coupling of block sums to a Wiener
grid), `verify` (statistical checkers with canonical reports), and `cli`
(configuration-driven entry point).
"""

from .fields import FieldModel, iid_model, linear_ma_model
from .lattice import Block
from .theory import MomentParams, SchemeParams

__version__ = "0.1.0"

__all__ = [
    "Block",
    "FieldModel",
    "MomentParams",
    "SchemeParams",
    "iid_model",
    "linear_ma_model",
    "__version__",
]
