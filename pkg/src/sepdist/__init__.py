"""Entanglement distribution through a separable carrier: states, measures,
separability certificates and finite-count tomography simulation."""

__version__ = "0.1.0"

from .correlations import (
    CutReport,
    DeficitResult,
    Eq2Report,
    InfoReport,
    cut_report,
    eq1_report,
    eq2_report,
    mutual_information,
    one_way_deficit,
)
from .protocol import (
    BellMixture,
    CarrierParams,
    add_white_noise,
    bell_mixture,
    build_alpha_ab,
    build_alpha_c,
    build_beta,
    cphase,
    is_separable,
)
from .qstate import (
    A_BC,
    B_AC,
    C_AB,
    Bipartition,
    QuantumState,
    RawMatrix,
    fidelity,
    min_eigenvalue,
    partial_trace,
    partial_transpose,
    tensor,
    von_neumann_entropy,
)
from .separability import (
    Certificate,
    Dictionary,
    ProductEntry,
    SeparabilityCertifier,
    SeparabilityFailure,
    certify_separable,
    extend_dictionary,
    seed_dictionary_ideal,
    verify_certificate,
)
from .sweep import SweepResult, monte_carlo_sweep
from .tomography import (
    CountsTable,
    MaximumLikelihoodTomography,
    MeasurementSetting,
    MLEConfig,
    linear_reconstruct,
    mle_reconstruct,
    pauli_settings,
    simulate_counts,
    simulate_counts_by_terms,
)
