"""Coverage analysis of a terrestrial + aerial cellular network around a town centre.

TBSs follow an inhomogeneous Poisson process with a radial Gaussian profile;
ABSs hover at fixed altitude outside an exclusion disk. The package provides
nearest-distance laws, association probabilities, interference Laplace
transforms, coverage, and a Monte Carlo simulator to check them against.
"""

from .geometry import UserFrame
from .params import AERIAL, ALL_KINDS, BsKind, NetworkParams, ParameterError, default_params, load_params

__all__ = ["AERIAL", "ALL_KINDS", "BsKind", "NetworkParams", "ParameterError", "UserFrame",
           "default_params", "load_params"]
__version__ = "0.1.0"
