//! End-to-end benchmarking procedure.
//!
//! Eigenstate pairs of the ideal target are sampled, each pair is prepared
//! and the target applied `L = 0..=L_max` times, and the damped modes of the
//! resulting signals are matched to ideal channel eigenvalues. Their diagonal
//! entries in the pure-noise channel give the fidelity estimates.

pub mod acquire;
pub mod eigensystem;
pub mod estimate;
pub mod run;

pub use acquire::{acquire_signal, exact_probabilities, generate_benchmark_suite, Acquisition};
pub use eigensystem::{
    sample_eigenpairs, sample_resolvable_pairs, Eigensystem, InitialStateSpec, SpecLabel, SubspaceDims,
};
pub use estimate::{
    compute_diagonal_entries, estimate_fidelities, estimate_unitary_params, hoeffding_sample_size, match_modes,
    FidelityEstimate, MatchedEigenvalue, Subspace,
};
pub use run::{
    acquire_all, analyze, run_experiment, run_prepared, sample_all_specs, specs_from_labels, CsbReport, Estimate,
    Experiment, Flag, Prepared, RepetitionReport, RunOutput, Settings, SignalRecord,
};
