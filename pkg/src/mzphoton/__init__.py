"""Multi-photon Mach-Zehnder interferometry: exact Fock-space evolution,
photon-counting simulation, fringe analysis and SQL thresholds."""

from .analysis import FitResult, FringeDataset, HomResult, fit_fixed_frequency_sinusoid, hom_dip_ratio
from .fock import BeamSplitter, FockState, ModeId, PhaseShifter, apply_beamsplitter, outcome_probability
from .interferometer import FringeModel, analytic_fringe_model, fringe_probability, intrinsic_efficiency
from .metrology import SensitivityReport, assess, fringe_precision, limits, visibility_threshold
from .simulator import CountRecord, DetectorModel, PhasePlate, ScanConfig, SourceModel, simulate

__version__ = "0.1.0"
