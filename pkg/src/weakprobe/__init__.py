"""Monte Carlo simulation of a charge qubit weakly probed by a point-contact detector."""

__version__ = "0.1.0"

from ._accel import BACKEND
from .analysis import MeasurementOutcome, analyze, canonical_axis, result_direction
from .detector import BinSet, CouplingSpec, DetectorParams, build_bins, calibrate, outcome_distribution, sample_bin
from .errors import (ConfigError, DeadBranchError, DegeneratePropagatorError, NoInformationError, NumericalError,
                     ReconstructionError, WeakProbeError)
from .qmat import (BlochVector, DensityMatrix, PolarFactors, QubitParams, angle_between, bloch_from_state,
                   charge_states, polar_decompose)
from .tomography import TomographyEstimate, collect_directions, cost, density_from_bloch, reconstruct
from .trajectory import (ScaledPropagator, TrajectoryResult, hamiltonian_step, replay, run_ensemble,
                         run_trajectory, step)
