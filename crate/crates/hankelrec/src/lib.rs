//! Reconstruction of spectrally sparse signals from partial time-domain
//! observations via low-rank Hankel matrix completion.
//!
//! A length-`n` signal that is a sum of `r` damped complex sinusoids lifts to
//! a rank-`r` Hankel matrix.  Observing only a random subset of its entries,
//! the signal is recovered by iterative hard thresholding on the lift: each
//! step replaces the unobserved entries with the current estimate, projects
//! the lifted matrix back to rank `r`, and maps it to a signal again through
//! the lift's pseudo-inverse.  The fast variant constrains the projection to
//! the tangent space of the rank-`r` manifold at the current iterate, which
//! reduces the dominant cost to FFTs plus small dense factorizations and
//! brings the per-iteration complexity to `O(r^2 n + r n log n)`.
//!
//! Nothing ever materializes the lift: matrix-vector products with a Hankel
//! matrix, its adjoint, its pseudo-inverse applied to a low-rank
//! factorization, and the adjoint of a rank-one update are all evaluated by
//! circular convolution ([`hankel`]).  The same holds in higher dimensions,
//! where signals on a box lift to block Hankel matrices ([`nd`]).
//!
//! # Modules
//!
//! * [`signal`]: random sparse signals, observation masks, and the
//!   Vandermonde structure behind the low-rank lift.
//! * [`hankel`]: the lift's geometry and its FFT-based kernels.
//! * [`lowrank`]: thin SVD factors, tangent-space projection, the rank-`r`
//!   retraction, and a matrix-free partial SVD.
//! * [`solver`]: the two iterations, both initializations, stopping rules,
//!   and per-iteration telemetry.
//! * [`nd`]: block Hankel lifts of multi-dimensional signals.
//! * [`io`]: JSON (and, for large volumes, binary) file formats.
//! * [`harness`]: seeded Monte-Carlo campaigns with CSV/JSON outputs.
//!
//! # Example
//!
//! ```
//! use hankelrec::{
//!     fiht_solve, generate_signal, make_shape, project_samples, sample_indices,
//!     SignalGenConfig, SolverConfig,
//! };
//!
//! let sig = generate_signal(&SignalGenConfig::new(127, 4, 7)).unwrap();
//! let omega = sample_indices(127, 80, false, 8).unwrap();
//! let observed = project_samples(&sig.samples, &omega).unwrap();
//! let shape = make_shape(127, None).unwrap();
//! let res = fiht_solve(&observed, &omega, &shape, &SolverConfig::new(4)).unwrap();
//! assert!(res.converged);
//! let err: f64 = res
//!     .x_rec
//!     .iter()
//!     .zip(&sig.samples)
//!     .map(|(a, b)| (a - b).norm_sqr())
//!     .sum::<f64>()
//!     .sqrt();
//! assert!(err / sig.samples.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt() < 1e-3);
//! ```

mod conv;
pub mod error;
pub mod hankel;
pub mod harness;
pub mod io;
pub mod lowrank;
pub mod nd;
pub mod signal;
pub mod solver;

pub use error::{Error, Result};
pub use hankel::{
    adjoint_rank_one, apply_pseudo_inverse, hankel_adjoint_dense, hankel_dense, hankel_matvec,
    hankel_matvec_adjoint, make_shape, project_samples, HankelOperator, HankelShape,
};
pub use harness::{
    add_observation_noise, derive_seed, emit_plotdata, load_table, run_nd_demo, run_noise,
    run_phase, run_recover, run_timing, save_table, CellRecord, ExperimentKind, ExperimentSpec,
    RecoverOutcome, TableKind, TrialRecord, PHASE_SUCCESS_THRESHOLD,
};
pub use lowrank::{
    partial_svd_hankel, retract_rank_r, tangent_coeffs, LowRankFactor, PartialSvdOptions,
    TangentCoeffs,
};
pub use nd::{
    generate_nd_signal, nd_fiht_solve, NdHankelShape, NdMode, NdSignal, NdSignalGenConfig,
};
pub use signal::{
    generate_signal, incoherence_estimate, sample_indices, vandermonde_factors, AmplitudeLaw,
    Mode, SampleSet, SignalGenConfig, SpectralSignal,
};
pub use solver::{
    fiht_solve, iht_solve, init_one_step, init_resampled, l2, observed_residual, rel_diff, solve,
    trim, Algorithm, InitScheme, IterRecord, SolveResult, SolverConfig, StopReason,
};
