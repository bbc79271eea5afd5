"""Physics-informed neural networks for steady incompressible Navier-Stokes
across many frames, with sequential (online) and posterior-averaged parallel
test-time adaptation."""

from .errors import DegenerateInputError, FormatError, StructureError, ValidationError
from .network import Architecture, NetworkParams, forward, init_network
from .optimize import TrainConfig
from .physics import FluidConstants, LossSpec

__version__ = "0.1.0"

__all__ = ["Architecture", "NetworkParams", "forward", "init_network", "TrainConfig",
           "FluidConstants", "LossSpec", "DegenerateInputError", "FormatError",
           "StructureError", "ValidationError"]
