"""orbitmart: anytime-valid sequential tests of distributional invariance.

Streams of observations are reduced to orbit ranks (uniform i.i.d.
under the invariance null), calibrated into test-martingale factors,
and accumulated into wealth that can be monitored continuously: the
probability that the wealth ever reaches 1/alpha under the null is at
most alpha, at every data-dependent stopping time.

Supported group families: exchangeability, cyclic and within-label
permutation subgroups, spherical symmetry, and the rotation symmetry of
linear-model errors; plus a joint-rank test of mutual independence
across invariant streams.
"""

from .calibrators import (
    Calibrator,
    Histogram1D,
    HistogramKD,
    PowerFixed,
    PowerMixture,
    ProductCalibrator,
    parse_calibrator,
)
from .estimator import IndependenceMartingale, InvarianceMartingale, StepRecord
from .groups import (
    DegenerateDesignError,
    GroupSpec,
    Observation,
    OrbitState,
    PayloadMismatchError,
    init_state,
    state_footprint,
    update_state,
)
from .independence import JointRank, step_joint
from .martingale import MartingaleState, combine, step
from .ranks import OrbitRank, orbit_rank, rank_isotropy, rank_permutation, rank_spherical
from .simulate import Scenario, load_scenario, run_scenario, write_report
from .special import NumericsError, Tolerance, cap_measure, reg_inc_beta, t_upper_tail

__version__ = "0.1.0"

__all__ = [
    "Calibrator",
    "DegenerateDesignError",
    "GroupSpec",
    "Histogram1D",
    "HistogramKD",
    "IndependenceMartingale",
    "InvarianceMartingale",
    "JointRank",
    "MartingaleState",
    "NumericsError",
    "Observation",
    "OrbitRank",
    "OrbitState",
    "PayloadMismatchError",
    "PowerFixed",
    "PowerMixture",
    "ProductCalibrator",
    "Scenario",
    "StepRecord",
    "Tolerance",
    "cap_measure",
    "combine",
    "init_state",
    "load_scenario",
    "orbit_rank",
    "parse_calibrator",
    "rank_isotropy",
    "rank_permutation",
    "rank_spherical",
    "reg_inc_beta",
    "run_scenario",
    "state_footprint",
    "step",
    "step_joint",
    "t_upper_tail",
    "update_state",
    "write_report",
]
