"""
Navier-Stokes-Fourier simulation around a planar contact discontinuity, with
relative-entropy diagnostics.

Modules
-------
thermo       constitutive laws and state conversions
functionals  relative entropy, decomposition and the F, G gauges
fields       periodic grids, mollification, calculus, snapshots
solver       finite-volume integrator and admissibility monitors
shift        transported shift field and the commutator residual
harness      monitored runs, sweeps, convergence study, persistence
config, cli  configuration files and the ``nsfc`` command
"""

from . import fields, functionals, harness, shift, solver, thermo
from .exceptions import (
    ConfigError, ContactOutOfRegime, FrameMismatch, InvalidParameter, NonPhysicalState,
    NSFCError, NumericalBlowup, UnresolvableKernel, VacuumApproach,
)
from .fields import PeriodicGrid
from .functionals import ContactState, make_contact
from .shift import ShiftConfig
from .solver import SolverConfig
from .thermo import ThermoParams

__version__ = "0.1.0"

__all__ = [
    "fields", "functionals", "harness", "shift", "solver", "thermo",
    "ConfigError", "ContactOutOfRegime", "FrameMismatch", "InvalidParameter",
    "NonPhysicalState", "NSFCError", "NumericalBlowup", "UnresolvableKernel",
    "VacuumApproach", "PeriodicGrid", "ContactState", "make_contact", "ShiftConfig",
    "SolverConfig", "ThermoParams",
]
