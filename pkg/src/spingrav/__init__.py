"""spingrav: spin/nano-oscillator Ramsey gravimeter simulation toolkit.

Modules
-------
params     experiment parameters, derived couplings, validation
config     INI configuration ingestion with unit conversion
classical  trajectories, action integrals, phase shift, echo protocol
quantum    hybrid-space Ramsey simulation with Lindblad decoherence
noise      rates, precision/visibility maps, consistency report
dd         continuous dynamical decoupling Monte Carlo
cli        command-line front end (phase | ramsey | map | dd | report)
"""

from .constants import CONSTANTS, PhysicalConstants
from .params import (
    CouplingParams,
    EnvironmentParams,
    OscillatorParams,
    SpinParams,
    SystemParams,
    ValidationReport,
    from_sphere,
    validate,
)

__version__ = "0.1.0"

__all__ = [
    "CONSTANTS",
    "PhysicalConstants",
    "SystemParams",
    "OscillatorParams",
    "SpinParams",
    "CouplingParams",
    "EnvironmentParams",
    "ValidationReport",
    "from_sphere",
    "validate",
    "__version__",
]
