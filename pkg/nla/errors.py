class SimulationError(Exception):
    """Base class for numerical failures inside the simulator"""


class BasisMismatchError(SimulationError):
    """Operands live on incompatible Fock bases"""


class TruncationOverflowError(SimulationError):
    """Photon-number truncation would discard more weight than tolerated"""


class PhysicalityError(SimulationError):
    """A state or measurement violates positivity or normalization"""


class DegenerateHeraldError(SimulationError):
    """The herald never fires for the requested configuration"""


class FitError(ValueError):
    """Scaling fit cannot be performed on the supplied rows"""


class ConfigError(ValueError):
    """Invalid parameter value or unknown configuration key"""

    def __init__(self, key, message=None):
        self.key = key
        super().__init__(message or f"Invalid value for '{key}'")
