"""Four-photon GHZ simulator: state algebra, PBS source model, GHZ and MABK
tests of local realism, coincidence statistics and a command-line driver."""
from .ghz import contradiction_report, enumerate_consistent_lhv, stabilizer_visibilities
from .mabk import lhv_max, mabk_expectation, quantum_max, threshold_visibilities, witness
from .optics import NoiseParams, apply_noise, delay_scan, experimental_noise, pbs_postselect, spdc_two_pairs
from .qcore import (
    DensityMatrix,
    OutcomeDistribution,
    PureState,
    Setting,
    SettingVector,
    correlation,
    fidelity_ghz,
    ghz_coherence,
    ghz_state,
    outcome_distribution,
    setting_observable,
)

__version__ = "0.1.0"
