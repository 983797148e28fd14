//! Gradient-descent completion of low-rank Hankel lifts from partial samples.
//!
//! Both iterations alternate a stepsize-`n/m` gradient correction on the
//! sampled entries with a rank-`r` truncation of the lifted iterate, then map
//! back to signal space through the pseudo-inverse of the lift:
//!
//! ```text
//!     x_{l+1} = H^+ T_r( [P_S] H( x_l + (n/m) P_Omega(x - x_l) ) )
//! ```
//!
//! The plain iteration ([`Algorithm::Iht`]) truncates with a full SVD of the
//! lifted matrix; the fast variant ([`Algorithm::Fiht`]) first projects onto
//! the tangent space `S` of the current iterate, which reduces the truncation
//! to the structured update of [`retract_rank_r`] and brings the whole
//! iteration down to `O(r^2 n + r n log n)` per step.
//!
//! Two initializations are provided: one spectral truncation of the rescaled
//! observed signal ([`init_one_step`]), and the sample-splitting scheme with
//! row trimming ([`init_resampled`]) whose recovery guarantee needs fewer
//! samples at large `n`.

use crate::error::{Error, Result};
use crate::hankel::{project_samples, HankelOperator, HankelShape};
use crate::lowrank::{
    dense_hard_threshold, partial_svd_prepared, retract_rank_r, tangent_coeffs_prepared,
    LowRankFactor, PartialSvdOptions,
};
use crate::signal::SampleSet;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::time::Instant;

/// Relative residual above which the iteration is declared divergent.
pub const DIVERGENCE_LIMIT: f64 = 1e6;

/// Which completion iteration to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    /// Full rank-`r` truncation each step (dense SVD on small shapes, the
    /// matrix-free partial SVD above the dense guard).
    Iht,
    /// Tangent-space projection before truncation; one small structured SVD
    /// per step.
    Fiht,
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Algorithm::Iht => write!(f, "iht"),
            Algorithm::Fiht => write!(f, "fiht"),
        }
    }
}

/// How the starting point is produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "scheme")]
pub enum InitScheme {
    /// `L_0 = T_r((n/m) H P_Omega(x))`: one spectral truncation of the
    /// rescaled observed signal.
    OneStep,
    /// Sample splitting with row trimming: `rounds` refinement rounds on
    /// disjoint subsets, each capping factor rows at the incoherence level
    /// `mu` before a tangent step.
    Resampled { rounds: usize, mu: f64 },
}

/// Solver configuration.  A tolerance of `0.0` disables that stopping rule;
/// at least one rule must stay enabled.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Target rank `r` of the lifted iterate.
    pub rank: usize,
    pub max_iters: usize,
    /// Stop when `||P_Omega(x_rec - x)|| / ||P_Omega(x)||` falls below this.
    pub tol_residual: f64,
    /// Stop when `||x_{l+1} - x_l|| / ||x_l||` falls below this.
    pub tol_step: f64,
    pub init: InitScheme,
    /// Overrides the `n/m` gradient stepsize when set.
    pub stepsize: Option<f64>,
    /// Seed for the randomized pieces (partial-SVD probes, sample
    /// splitting).  Fixed seed + fixed inputs = bitwise identical telemetry.
    pub seed: u64,
}

impl SolverConfig {
    /// Residual rule at `1e-4`, step rule at `1e-5`, 500 iterations,
    /// one-step initialization.
    pub fn new(rank: usize) -> Self {
        SolverConfig {
            rank,
            max_iters: 500,
            tol_residual: 1e-4,
            tol_step: 1e-5,
            init: InitScheme::OneStep,
            stepsize: None,
            seed: 0,
        }
    }

    fn validate<O: HankelOperator + ?Sized>(&self, op: &O) -> Result<()> {
        if self.rank == 0 || self.rank > op.rows().min(op.cols()) {
            return Err(Error::arg(format!(
                "rank {} must lie in 1..=min({}, {})",
                self.rank,
                op.rows(),
                op.cols()
            )));
        }
        if self.max_iters == 0 {
            return Err(Error::arg("max_iters must be at least 1"));
        }
        if self.tol_residual < 0.0 || self.tol_step < 0.0 {
            return Err(Error::arg("tolerances must be non-negative"));
        }
        if self.tol_residual == 0.0 && self.tol_step == 0.0 {
            return Err(Error::arg("at least one stopping tolerance must be enabled"));
        }
        if let Some(s) = self.stepsize {
            if !(s.is_finite() && s > 0.0) {
                return Err(Error::arg("stepsize override must be positive"));
            }
        }
        if let InitScheme::Resampled { mu, .. } = self.init {
            if !(mu.is_finite() && mu > 0.0) {
                return Err(Error::arg("trimming level mu must be positive"));
            }
        }
        Ok(())
    }
}

/// Why the iteration stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    ResidualTol,
    StepTol,
    MaxIters,
    Diverged,
}

/// Telemetry for one iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterRecord {
    /// `||P_Omega(x_l - x)|| / ||P_Omega(x)||`.
    pub residual: f64,
    /// `||x_l - x_{l-1}|| / ||x_{l-1}||`.
    pub step: f64,
    /// `||x_l - x|| / ||x||` against the full signal, when it was supplied.
    pub true_err: Option<f64>,
    /// Wall time of the iteration in milliseconds.
    pub ms: f64,
}

/// Output of a completion run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveResult {
    pub x_rec: Vec<Complex64>,
    /// Iterations actually executed (equals `trace.len()`).
    pub iterations: usize,
    pub converged: bool,
    pub stop: StopReason,
    pub trace: Vec<IterRecord>,
    /// Ritz estimate of `sigma_r / sigma_{r+1}` from the initialization,
    /// when the initialization produced one.
    pub init_spectral_gap: Option<f64>,
}

/// Euclidean norm of a complex vector.
pub fn l2(z: &[Complex64]) -> f64 {
    z.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

/// `||a - b|| / ||b||`, with `0/0 = 0` and `x/0` infinite.
pub fn rel_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    let num: f64 = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm_sqr())
        .sum::<f64>()
        .sqrt();
    let den = l2(b);
    if den == 0.0 {
        if num == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        num / den
    }
}

/// `||P_Omega(x_est - x)|| / ||P_Omega(x)||` where `observed = P_Omega(x)`.
/// The projection is multiplicity weighted, consistently on both sides.
pub fn observed_residual(
    x_est: &[Complex64],
    observed: &[Complex64],
    omega: &SampleSet,
) -> Result<f64> {
    if x_est.len() != omega.n || observed.len() != omega.n {
        return Err(Error::arg(format!(
            "lengths {} / {} do not match sample space {}",
            x_est.len(),
            observed.len(),
            omega.n
        )));
    }
    let norm = l2(observed);
    if norm == 0.0 {
        return Err(Error::UndefinedResidual);
    }
    let proj = project_samples(x_est, omega)?;
    let num: f64 = proj
        .iter()
        .zip(observed)
        .map(|(p, o)| (p - o).norm_sqr())
        .sum::<f64>()
        .sqrt();
    Ok(num / norm)
}

/// One-step spectral initialization: the best rank-`r` approximation of the
/// lift of `(n/m) * observed`, computed matrix-free.  An empty sample set
/// yields the zero factor.  Also returns the Ritz gap estimate.
pub fn init_one_step<O: HankelOperator + ?Sized>(
    observed: &[Complex64],
    omega: &SampleSet,
    rank: usize,
    op: &O,
    seed: u64,
) -> Result<(LowRankFactor, Option<f64>)> {
    if observed.len() != op.signal_len() || omega.n != op.signal_len() {
        return Err(Error::arg("observed vector does not match operator length"));
    }
    if omega.is_empty() {
        return Ok((LowRankFactor::zero(op.rows(), op.cols(), rank), None));
    }
    let scale = op.signal_len() as f64 / omega.len() as f64;
    let scaled: Vec<Complex64> = observed.iter().map(|z| z * scale).collect();
    let p = op.prepare(&scaled)?;
    let opts = PartialSvdOptions {
        seed,
        ..Default::default()
    };
    partial_svd_prepared(op, &p, rank, &opts, None)
}

/// Caps every row of both factors at norm `sqrt(mu * c_s * r / len)`, leaving
/// `sigma` untouched.  The output factors are generally no longer orthonormal;
/// [`LowRankFactor::reorthonormalized`] recovers a genuine SVD of the trimmed
/// matrix.
pub fn trim<O: HankelOperator + ?Sized>(factor: &LowRankFactor, mu: f64, op: &O) -> LowRankFactor {
    let r = factor.width().max(1);
    let cap = (mu * op.aspect_ratio() * r as f64 / op.signal_len() as f64).sqrt();
    let mut out = factor.clone();
    for m in [&mut out.u, &mut out.v] {
        for i in 0..m.nrows() {
            let norm = m.row(i).norm();
            if norm > cap {
                m.row_mut(i).scale_mut(cap / norm);
            }
        }
    }
    out
}

/// Sample-splitting initialization with trimming.
///
/// `omega` is split (deterministically in `seed`) into `rounds + 1` disjoint
/// subsets of near-equal size, the remainder going to the last subset.  The
/// first subset seeds a one-step initialization; each following round trims
/// the factor rows at level `mu`, re-expresses the trimmed matrix through its
/// own SVD, and performs one tangent-space gradient step using a fresh
/// subset with its own rescaling `n / m_i`.  Returns the final factor and
/// the factor after every round (index 0 is the initial truncation), so
/// callers can watch the estimate contract toward the true lift.
pub fn init_resampled<O: HankelOperator + ?Sized>(
    observed: &[Complex64],
    omega: &SampleSet,
    rank: usize,
    rounds: usize,
    mu: f64,
    op: &O,
    seed: u64,
) -> Result<(LowRankFactor, Vec<LowRankFactor>)> {
    let n = op.signal_len();
    if observed.len() != n || omega.n != n {
        return Err(Error::arg("observed vector does not match operator length"));
    }
    let m = omega.len();
    let sets = rounds + 1;
    if m < sets {
        return Err(Error::arg(format!(
            "need at least {sets} samples to form {sets} disjoint subsets, got {m}"
        )));
    }
    if !(mu.is_finite() && mu > 0.0) {
        return Err(Error::arg("trimming level mu must be positive"));
    }
    // Per-entry sample values, undoing the multiplicity weighting of the
    // full-set projection so each subset can be re-weighted on its own.
    let counts = omega.multiplicity();
    let mut raw = vec![Complex64::ZERO; n];
    for a in 0..n {
        if counts[a] > 0.0 {
            raw[a] = observed[a] / counts[a];
        }
    }
    let mut shuffled = omega.indices.clone();
    // The xor tag keeps the shuffle stream independent of the probe streams
    // derived from the same user seed.
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    for i in (1..shuffled.len()).rev() {
        let j = rng.gen_range(0..=i);
        shuffled.swap(i, j);
    }
    let base = m / sets;
    let subset = |i: usize| -> &[usize] {
        if i + 1 < sets {
            &shuffled[i * base..(i + 1) * base]
        } else {
            &shuffled[i * base..]
        }
    };
    let subset_projection = |idx: &[usize], x: &[Complex64]| -> (Vec<Complex64>, f64) {
        let mut out = vec![Complex64::ZERO; n];
        for &a in idx {
            out[a] += x[a];
        }
        (out, n as f64 / idx.len() as f64)
    };

    let (obs0, p0_inv) = subset_projection(subset(0), &raw);
    let scaled: Vec<Complex64> = obs0.iter().map(|z| z * p0_inv).collect();
    let prepared = op.prepare(&scaled)?;
    let opts = PartialSvdOptions {
        seed: seed.wrapping_add(1),
        ..Default::default()
    };
    let (mut cur, _) = partial_svd_prepared(op, &prepared, rank, &opts, None)?;
    let mut trace = vec![cur.clone()];
    for l in 1..=rounds {
        let trimmed = trim(&cur, mu, op).reorthonormalized()?;
        let x_hat = op.apply_pseudo_inverse(&trimmed.u, &trimmed.sigma, &trimmed.v)?;
        let (obs_l, pl_inv) = subset_projection(subset(l), &raw);
        let (proj_hat, _) = subset_projection(subset(l), &x_hat);
        let w: Vec<Complex64> = x_hat
            .iter()
            .zip(obs_l.iter().zip(&proj_hat))
            .map(|(xh, (o, ph))| xh + pl_inv * (o - ph))
            .collect();
        let p = op.prepare(&w)?;
        let tc = tangent_coeffs_prepared(op, &p, &trimmed.u, &trimmed.v)?;
        cur = retract_rank_r(&tc, &trimmed.u, &trimmed.v, rank)?;
        trace.push(cur.clone());
    }
    Ok((cur, trace))
}

/// Runs the selected iteration on `observed = P_Omega(x)`.  When `truth` is
/// supplied, per-iteration true errors are recorded in the trace.
pub fn solve<O: HankelOperator + ?Sized>(
    algo: Algorithm,
    observed: &[Complex64],
    omega: &SampleSet,
    op: &O,
    cfg: &SolverConfig,
    truth: Option<&[Complex64]>,
) -> Result<SolveResult> {
    cfg.validate(op)?;
    let n = op.signal_len();
    if observed.len() != n || omega.n != n {
        return Err(Error::arg(format!(
            "observed length {} / sample space {} do not match operator length {n}",
            observed.len(),
            omega.n
        )));
    }
    if omega.is_empty() {
        return Err(Error::arg("sample set is empty"));
    }
    if let Some(t) = truth {
        if t.len() != n {
            return Err(Error::arg("truth vector does not match operator length"));
        }
    }
    let obs_norm = l2(observed);
    if obs_norm == 0.0 {
        return Err(Error::UndefinedResidual);
    }
    let counts = omega.multiplicity();
    let p_inv = cfg
        .stepsize
        .unwrap_or(n as f64 / omega.len() as f64);

    let (mut factor, init_gap) = match &cfg.init {
        InitScheme::OneStep => init_one_step(observed, omega, cfg.rank, op, cfg.seed)?,
        InitScheme::Resampled { rounds, mu } => {
            let (f, _) = init_resampled(observed, omega, cfg.rank, *rounds, *mu, op, cfg.seed)?;
            (f, None)
        }
    };
    let mut x = op.apply_pseudo_inverse(&factor.u, &factor.sigma, &factor.v)?;

    let mut trace: Vec<IterRecord> = Vec::new();
    let mut outcome = (false, StopReason::MaxIters);
    for l in 0..cfg.max_iters {
        let t0 = Instant::now();
        let w: Vec<Complex64> = x
            .iter()
            .zip(observed.iter().zip(&counts))
            .map(|(xa, (oa, ca))| xa + p_inv * (oa - ca * xa))
            .collect();
        let new_factor = match algo {
            Algorithm::Fiht => {
                let p = op.prepare(&w)?;
                let tc = tangent_coeffs_prepared(op, &p, &factor.u, &factor.v)?;
                retract_rank_r(&tc, &factor.u, &factor.v, cfg.rank)?
            }
            Algorithm::Iht => match op.try_dense(&w) {
                Some(dense) => dense_hard_threshold(&dense, cfg.rank)?,
                None => {
                    let p = op.prepare(&w)?;
                    let opts = PartialSvdOptions {
                        seed: cfg.seed.wrapping_add(l as u64),
                        ..Default::default()
                    };
                    partial_svd_prepared(op, &p, cfg.rank, &opts, Some(&factor.v))?.0
                }
            },
        };
        let x_new = op.apply_pseudo_inverse(&new_factor.u, &new_factor.sigma, &new_factor.v)?;
        let residual = {
            let num: f64 = x_new
                .iter()
                .zip(observed.iter().zip(&counts))
                .map(|(xa, (oa, ca))| (ca * xa - oa).norm_sqr())
                .sum::<f64>()
                .sqrt();
            num / obs_norm
        };
        let step = rel_diff(&x_new, &x);
        let true_err = truth.map(|t| rel_diff(&x_new, t));
        trace.push(IterRecord {
            residual,
            step,
            true_err,
            ms: t0.elapsed().as_secs_f64() * 1e3,
        });
        if !residual.is_finite() || residual > DIVERGENCE_LIMIT {
            let x_rec = if residual.is_finite() { x_new } else { x };
            let iterations = trace.len();
            return Err(Error::Divergence {
                residual,
                limit: DIVERGENCE_LIMIT,
                iteration: l,
                partial: Box::new(SolveResult {
                    x_rec,
                    iterations,
                    converged: false,
                    stop: StopReason::Diverged,
                    trace,
                    init_spectral_gap: init_gap,
                }),
            });
        }
        x = x_new;
        factor = new_factor;
        if cfg.tol_residual > 0.0 && residual < cfg.tol_residual {
            outcome = (true, StopReason::ResidualTol);
            break;
        }
        if cfg.tol_step > 0.0 && step < cfg.tol_step {
            outcome = (true, StopReason::StepTol);
            break;
        }
    }
    Ok(SolveResult {
        x_rec: x,
        iterations: trace.len(),
        converged: outcome.0,
        stop: outcome.1,
        trace,
        init_spectral_gap: init_gap,
    })
}

/// Plain iteration on a 1-D shape.
pub fn iht_solve(
    observed: &[Complex64],
    omega: &SampleSet,
    shape: &HankelShape,
    cfg: &SolverConfig,
) -> Result<SolveResult> {
    solve(Algorithm::Iht, observed, omega, shape, cfg, None)
}

/// Fast iteration on a 1-D shape.
pub fn fiht_solve(
    observed: &[Complex64],
    omega: &SampleSet,
    shape: &HankelShape,
    cfg: &SolverConfig,
) -> Result<SolveResult> {
    solve(Algorithm::Fiht, observed, omega, shape, cfg, None)
}
