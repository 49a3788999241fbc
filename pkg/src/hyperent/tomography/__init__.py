"""State tomography: settings, count simulation, reconstruction and error bars."""
from .counts import CountRecord, probabilities, read_counts_csv, simulate_counts, write_counts_csv
from .estimators import (Method, NotConvergedWarning, RankDeficientError, ReconstructionResult,
                         bootstrap_errors, log_likelihood, reconstruct_linear, reconstruct_mle)
from .experiments import (TARGETS, TomographyRun, ghz4_family_fidelity, ghz4_target, run_tomography,
                          vvb_psi_plus_target)
from .measurement import (LABELS, AnalysisSetting, PolOamScheme, QubitScheme, VvbScheme, born_probability,
                          generate_settings, pauli_bases)
