//! Monte-Carlo experiment campaigns over the solver: phase-transition grids,
//! algorithm timing tables, noise-robustness sweeps, and the 3-D demo.
//!
//! Every campaign is described by one flat [`ExperimentSpec`] (JSON-friendly,
//! all fields defaulted, so a config file only names what it changes) and
//! produces a list of [`CellRecord`]s: one cell per parameter combination,
//! carrying the per-trial rows plus aggregates that are recomputable from
//! them.  [`load_table`] re-derives the aggregates and refuses files where
//! they disagree.
//!
//! Seeding is hierarchical: every random object gets its seed from
//! [`derive_seed`] (FNV-1a over the base seed and a tag) so that trials are
//! reproducible in isolation and cells can run in any order on any number of
//! threads with identical results.  Signal seeds deliberately omit the
//! sampling parameters: the noise sweep then reuses the same signals across
//! `m` and `sigma`, which makes "more samples help" and "error grows with
//! noise" visible without Monte-Carlo variance across ensembles.
//!
//! CSV outputs have a fixed column order:
//!
//! * phase:   `n,p,r,success_rate,mean_iters,mean_ms`
//! * timing:  `n,r,m,algo,mean_rel_err,mean_iters,mean_ms`
//! * noise:   `n,m,sigma,snr_db,mean_rel_err`
//! * nd-demo: `dims,r,m,success_rate,mean_rel_err,mean_iters,mean_ms`
//!
//! Files are written to a temporary sibling and renamed into place, so a
//! failed run never leaves a half-written table.  Wall-clock columns can be
//! zeroed at the source (`record_wall_time = false`) when byte-identical
//! reruns matter more than timings.

use crate::error::{Error, Result};
use crate::hankel::{make_shape, project_samples, HankelOperator, HankelShape};
use crate::io;
use crate::nd::{generate_nd_signal, NdHankelShape, NdSignalGenConfig};
use crate::signal::{generate_signal, sample_indices, SampleSet, SignalGenConfig};
use crate::solver::{
    l2, rel_diff, solve, Algorithm, InitScheme, SolveResult, SolverConfig, StopReason,
};
use nalgebra::DVector;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;
use std::path::Path;
use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};
use std::time::Instant;

/// Recovery counts as success below this relative error in phase campaigns.
pub const PHASE_SUCCESS_THRESHOLD: f64 = 1e-3;

/// Which campaign an [`ExperimentSpec`] describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Phase,
    Timing,
    Noise,
    NdDemo,
}

/// Full description of a campaign.  `Default` equals [`ExperimentSpec::for_phase`];
/// the other constructors change only the fields their campaign reads.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    /// Signal length for 1-D campaigns.
    pub n: usize,
    /// Fixed model order; phase campaigns use it only when `r_scan` is off.
    pub rank: usize,
    /// Phase: scan `r` upward from 1 and stop after the first rank at which
    /// every trial fails.
    pub r_scan: bool,
    /// Phase: observed fractions; `m = round(p * n)` per column.
    pub p_grid: Vec<f64>,
    /// Draw frequencies at least `1.5 / n` apart (wrap-around).
    pub separated: bool,
    pub damping_range: (f64, f64),
    pub algorithm: Algorithm,
    pub init: InitScheme,
    pub trials: usize,
    pub base_seed: u64,
    pub max_iters: usize,
    pub tol_residual: f64,
    pub tol_step: f64,
    pub with_replacement: bool,
    /// Worker threads for trials within a cell; timing campaigns ignore this
    /// and always run serially so wall clocks stay clean.
    pub threads: usize,
    /// When off, every wall-time field is written as zero and reruns are
    /// byte-identical.
    pub record_wall_time: bool,
    pub success_threshold: f64,
    pub timing_n: Vec<usize>,
    pub timing_r: Vec<usize>,
    pub timing_m: Vec<usize>,
    pub noise_m: Vec<usize>,
    pub sigma_list: Vec<f64>,
    pub nd_dims: Vec<usize>,
    pub nd_rank: usize,
    pub nd_fraction: f64,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        ExperimentSpec::for_phase()
    }
}

impl ExperimentSpec {
    /// Phase-transition grid: 18 observation fractions, full rank scan.
    pub fn for_phase() -> Self {
        ExperimentSpec {
            kind: ExperimentKind::Phase,
            n: 127,
            rank: 4,
            r_scan: true,
            p_grid: Self::default_p_grid(),
            separated: false,
            damping_range: (0.0, 0.0),
            algorithm: Algorithm::Fiht,
            init: InitScheme::OneStep,
            trials: 50,
            base_seed: 2026,
            max_iters: 500,
            tol_residual: 1e-4,
            tol_step: 0.0,
            with_replacement: false,
            threads: 1,
            record_wall_time: true,
            success_threshold: PHASE_SUCCESS_THRESHOLD,
            timing_n: vec![3999, 7999],
            timing_r: vec![15, 30],
            timing_m: vec![800, 1200],
            noise_m: vec![128, 256],
            sigma_list: Self::default_sigma_list(),
            nd_dims: vec![15, 15, 63],
            nd_rank: 5,
            nd_fraction: 0.08,
        }
    }

    /// Timing table over both algorithms; stops on step size so converged
    /// runs of different accuracy cost comparable work.
    pub fn for_timing() -> Self {
        ExperimentSpec {
            kind: ExperimentKind::Timing,
            trials: 10,
            tol_residual: 0.0,
            tol_step: 1e-5,
            ..Self::for_phase()
        }
    }

    /// Noise sweep at fixed model order over a separated ensemble.
    pub fn for_noise() -> Self {
        ExperimentSpec {
            kind: ExperimentKind::Noise,
            n: 511,
            rank: 6,
            separated: true,
            trials: 10,
            tol_residual: 0.0,
            tol_step: 1e-5,
            ..Self::for_phase()
        }
    }

    /// Three-dimensional recovery demo at desk scale.
    pub fn for_nd_demo() -> Self {
        ExperimentSpec {
            kind: ExperimentKind::NdDemo,
            trials: 50,
            tol_residual: 1e-5,
            tol_step: 0.0,
            success_threshold: 1e-4,
            ..Self::for_phase()
        }
    }

    /// `0.10, 0.15, ..., 0.95`.
    pub fn default_p_grid() -> Vec<f64> {
        (2..=19).map(|k| k as f64 * 0.05).collect()
    }

    /// Nine noise levels log-spaced over `[1e-4, 1]`.
    pub fn default_sigma_list() -> Vec<f64> {
        (0..9).map(|k| 10f64.powf(-4.0 + 0.5 * k as f64)).collect()
    }

    fn solver_config(&self, rank: usize, seed: u64) -> SolverConfig {
        let mut cfg = SolverConfig::new(rank);
        cfg.max_iters = self.max_iters;
        cfg.tol_residual = self.tol_residual;
        cfg.tol_step = self.tol_step;
        cfg.init = self.init.clone();
        cfg.seed = seed;
        cfg
    }

    fn validate(&self, kind: ExperimentKind) -> Result<()> {
        if self.kind != kind {
            return Err(Error::arg(format!(
                "spec kind {:?} does not match the requested campaign {:?}",
                self.kind, kind
            )));
        }
        if self.trials == 0 {
            return Err(Error::arg("trials must be at least 1"));
        }
        if self.threads == 0 {
            return Err(Error::arg("threads must be at least 1"));
        }
        if self.max_iters == 0 {
            return Err(Error::arg("max_iters must be at least 1"));
        }
        match kind {
            ExperimentKind::Phase => {
                if self.n < 2 {
                    return Err(Error::arg("n must be at least 2"));
                }
                if self.p_grid.is_empty() {
                    return Err(Error::arg("p_grid must be nonempty"));
                }
                if self.p_grid.iter().any(|&p| !(p > 0.0 && p <= 1.0)) {
                    return Err(Error::arg("observation fractions must lie in (0, 1]"));
                }
                if self.success_threshold != PHASE_SUCCESS_THRESHOLD {
                    return Err(Error::arg(format!(
                        "phase campaigns fix the success threshold at {PHASE_SUCCESS_THRESHOLD}"
                    )));
                }
                if !self.r_scan && self.rank == 0 {
                    return Err(Error::arg("rank must be at least 1 when r_scan is off"));
                }
            }
            ExperimentKind::Timing => {
                if self.timing_n.is_empty() || self.timing_r.is_empty() || self.timing_m.is_empty()
                {
                    return Err(Error::arg("timing grids must be nonempty"));
                }
            }
            ExperimentKind::Noise => {
                if self.n < 2 || self.rank == 0 {
                    return Err(Error::arg("noise campaigns need n >= 2 and rank >= 1"));
                }
                if self.noise_m.is_empty() || self.sigma_list.is_empty() {
                    return Err(Error::arg("noise grids must be nonempty"));
                }
                if self
                    .sigma_list
                    .iter()
                    .any(|&s| !s.is_finite() || s < 0.0)
                {
                    return Err(Error::arg("noise levels must be finite and nonnegative"));
                }
            }
            ExperimentKind::NdDemo => {
                if self.nd_dims.is_empty() || self.nd_rank == 0 {
                    return Err(Error::arg("nd campaigns need dims and rank >= 1"));
                }
                if !(self.nd_fraction > 0.0 && self.nd_fraction <= 1.0) {
                    return Err(Error::arg("nd_fraction must lie in (0, 1]"));
                }
            }
        }
        Ok(())
    }
}

/// Coordinates of one cell in a campaign grid.
#[derive(Debug, Clone)]
struct CellKey {
    n: usize,
    r: usize,
    m: usize,
    p: Option<f64>,
    sigma: Option<f64>,
    dims: Option<Vec<usize>>,
    algorithm: Algorithm,
}

/// One reconstruction attempt inside a cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    /// Seed of the signal drawn for this trial.
    pub seed: u64,
    pub success: bool,
    /// Relative reconstruction error; absent when the solver failed without
    /// producing an iterate.
    pub rel_err: Option<f64>,
    pub iterations: usize,
    /// Wall time around the solver call only; zero when timing is disabled.
    pub wall_ms: f64,
    pub stop: Option<StopReason>,
    pub error: Option<String>,
}

/// A grid cell with its trials and aggregates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellRecord {
    pub n: usize,
    pub r: usize,
    pub m: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub p: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub sigma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub dims: Option<Vec<usize>>,
    pub algorithm: Algorithm,
    pub trials: Vec<TrialRecord>,
    pub success_rate: f64,
    pub mean_rel_err: Option<f64>,
    pub mean_iters: f64,
    pub mean_ms: f64,
}

impl CellRecord {
    fn from_key(key: CellKey, trials: Vec<TrialRecord>) -> Self {
        let mut cell = CellRecord {
            n: key.n,
            r: key.r,
            m: key.m,
            p: key.p,
            sigma: key.sigma,
            dims: key.dims,
            algorithm: key.algorithm,
            trials,
            success_rate: 0.0,
            mean_rel_err: None,
            mean_iters: 0.0,
            mean_ms: 0.0,
        };
        cell.recompute_aggregates();
        cell
    }

    /// Rebuilds the aggregate fields from the per-trial rows.
    pub fn recompute_aggregates(&mut self) {
        let t = self.trials.len() as f64;
        let successes = self.trials.iter().filter(|x| x.success).count();
        self.success_rate = successes as f64 / t;
        let errs: Vec<f64> = self.trials.iter().filter_map(|x| x.rel_err).collect();
        self.mean_rel_err = if errs.is_empty() {
            None
        } else {
            Some(errs.iter().sum::<f64>() / errs.len() as f64)
        };
        self.mean_iters = self.trials.iter().map(|x| x.iterations as f64).sum::<f64>() / t;
        self.mean_ms = self.trials.iter().map(|x| x.wall_ms).sum::<f64>() / t;
    }

    /// True when the stored aggregates equal what the trial rows imply.
    pub fn aggregates_consistent(&self) -> bool {
        let mut copy = self.clone();
        copy.recompute_aggregates();
        copy.success_rate == self.success_rate
            && copy.mean_rel_err == self.mean_rel_err
            && copy.mean_iters == self.mean_iters
            && copy.mean_ms == self.mean_ms
    }
}

/// FNV-1a over the base seed and a tag; every random object in a campaign
/// draws its seed from here so trial outcomes do not depend on scheduling.
pub fn derive_seed(base: u64, tag: &[u64]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for word in std::iter::once(&base).chain(tag) {
        for b in word.to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    h
}

const TAG_PHASE_SIGNAL: u64 = 0x11;
const TAG_PHASE_OMEGA: u64 = 0x12;
const TAG_TIMING_SIGNAL: u64 = 0x21;
const TAG_TIMING_OMEGA: u64 = 0x22;
const TAG_NOISE_SIGNAL: u64 = 0x31;
const TAG_NOISE_OMEGA: u64 = 0x32;
const TAG_NOISE_DRAW: u64 = 0x33;
const TAG_ND_SIGNAL: u64 = 0x41;
const TAG_ND_OMEGA: u64 = 0x42;
const TAG_SOLVER: u64 = 0x51;

/// Runs `count` jobs on up to `threads` workers, returning results in job
/// order regardless of scheduling.
fn parallel_map<T, F>(threads: usize, count: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    if threads <= 1 || count <= 1 {
        return (0..count).map(f).collect();
    }
    let next = AtomicUsize::new(0);
    let (tx, rx) = std::sync::mpsc::channel::<(usize, T)>();
    std::thread::scope(|scope| {
        for _ in 0..threads.min(count) {
            let tx = tx.clone();
            let next = &next;
            let f = &f;
            scope.spawn(move || loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= count {
                    break;
                }
                if tx.send((i, f(i))).is_err() {
                    break;
                }
            });
        }
        drop(tx);
        let mut slots: Vec<Option<T>> = (0..count).map(|_| None).collect();
        for (i, value) in rx {
            slots[i] = Some(value);
        }
        slots.into_iter().map(|s| s.unwrap()).collect()
    })
}

fn error_trial(seed: u64, err: &Error) -> TrialRecord {
    TrialRecord {
        seed,
        success: false,
        rel_err: None,
        iterations: 0,
        wall_ms: 0.0,
        stop: None,
        error: Some(err.to_string()),
    }
}

/// Runs one solve, timing exactly the solver call, and grades the result
/// against the known signal.
#[allow(clippy::too_many_arguments)]
fn run_solver_trial<O: HankelOperator + ?Sized>(
    seed: u64,
    algorithm: Algorithm,
    observed: &[Complex64],
    omega: &SampleSet,
    op: &O,
    cfg: &SolverConfig,
    truth: &[Complex64],
    threshold: f64,
    record_wall: bool,
) -> TrialRecord {
    let started = Instant::now();
    let outcome = solve(algorithm, observed, omega, op, cfg, Some(truth));
    let wall_ms = if record_wall {
        started.elapsed().as_secs_f64() * 1e3
    } else {
        0.0
    };
    match outcome {
        Ok(res) => {
            let rel = rel_diff(&res.x_rec, truth);
            TrialRecord {
                seed,
                success: rel <= threshold,
                rel_err: Some(rel),
                iterations: res.iterations,
                wall_ms,
                stop: Some(res.stop),
                error: None,
            }
        }
        Err(Error::Divergence { partial, .. }) => {
            let rel = rel_diff(&partial.x_rec, truth);
            TrialRecord {
                seed,
                success: false,
                rel_err: Some(rel),
                iterations: partial.iterations,
                wall_ms,
                stop: Some(partial.stop),
                error: Some("diverged".into()),
            }
        }
        Err(other) => {
            let mut rec = error_trial(seed, &other);
            rec.wall_ms = wall_ms;
            rec
        }
    }
}

fn run_cell(
    spec: &ExperimentSpec,
    key: CellKey,
    trial: &(dyn Fn(&CellKey, usize) -> TrialRecord + Sync),
) -> CellRecord {
    let trials = parallel_map(spec.threads, spec.trials, |t| trial(&key, t));
    CellRecord::from_key(key, trials)
}

fn phase_trial(
    spec: &ExperimentSpec,
    shape: &HankelShape,
    key: &CellKey,
    t: usize,
) -> TrialRecord {
    let sig_seed = derive_seed(
        spec.base_seed,
        &[TAG_PHASE_SIGNAL, key.n as u64, key.r as u64, t as u64],
    );
    let omega_seed = derive_seed(
        spec.base_seed,
        &[TAG_PHASE_OMEGA, key.n as u64, key.m as u64, t as u64],
    );
    let solver_seed = derive_seed(
        spec.base_seed,
        &[TAG_SOLVER, key.n as u64, key.r as u64, key.m as u64, t as u64],
    );
    let mut gen = SignalGenConfig::new(key.n, key.r, sig_seed);
    gen.min_separation = if spec.separated { 1.5 / key.n as f64 } else { 0.0 };
    gen.damping_range = spec.damping_range;
    let sig = match generate_signal(&gen) {
        Ok(s) => s,
        Err(e) => return error_trial(sig_seed, &e),
    };
    let omega = match sample_indices(key.n, key.m, spec.with_replacement, omega_seed) {
        Ok(o) => o,
        Err(e) => return error_trial(sig_seed, &e),
    };
    let observed = match project_samples(&sig.samples, &omega) {
        Ok(o) => o,
        Err(e) => return error_trial(sig_seed, &e),
    };
    let cfg = spec.solver_config(key.r, solver_seed);
    run_solver_trial(
        sig_seed,
        key.algorithm,
        &observed,
        &omega,
        shape,
        &cfg,
        &sig.samples,
        spec.success_threshold,
        spec.record_wall_time,
    )
}

fn run_phase_with(
    spec: &ExperimentSpec,
    trial: &(dyn Fn(&CellKey, usize) -> TrialRecord + Sync),
) -> Result<Vec<CellRecord>> {
    spec.validate(ExperimentKind::Phase)?;
    let shape = make_shape(spec.n, None)?;
    let r_max = shape.n1().min(shape.n2());
    if !spec.r_scan && spec.rank > r_max {
        return Err(Error::arg(format!(
            "rank {} exceeds the lift rank bound {r_max} at n = {}",
            spec.rank, spec.n
        )));
    }
    let mut cells = Vec::new();
    for &p in &spec.p_grid {
        let m = ((p * spec.n as f64).round() as usize).clamp(1, spec.n);
        let ranks: Box<dyn Iterator<Item = usize>> = if spec.r_scan {
            Box::new(1..)
        } else {
            Box::new(std::iter::once(spec.rank))
        };
        for r in ranks {
            // The lift cannot have rank beyond min(n1, n2); the scan ends
            // at the bound even if recovery still succeeds there.
            if r > r_max {
                break;
            }
            let key = CellKey {
                n: spec.n,
                r,
                m,
                p: Some(p),
                sigma: None,
                dims: None,
                algorithm: spec.algorithm,
            };
            let cell = run_cell(spec, key, trial);
            let all_fail = cell.success_rate == 0.0;
            cells.push(cell);
            if spec.r_scan && all_fail {
                break;
            }
        }
    }
    Ok(cells)
}

/// Phase-transition campaign: for each observation fraction, scan the model
/// order upward until every trial fails (or run the single fixed rank).
pub fn run_phase(spec: &ExperimentSpec) -> Result<Vec<CellRecord>> {
    spec.validate(ExperimentKind::Phase)?;
    let shape = make_shape(spec.n, None)?;
    let f = |key: &CellKey, t: usize| phase_trial(spec, &shape, key, t);
    run_phase_with(spec, &f)
}

/// Timing table: both algorithms on identical data over the grid
/// `timing_n x timing_r x timing_m`.  Trials run serially so wall clocks do
/// not contend.
pub fn run_timing(spec: &ExperimentSpec) -> Result<Vec<CellRecord>> {
    spec.validate(ExperimentKind::Timing)?;
    let mut cells = Vec::new();
    for &n in &spec.timing_n {
        let shape = make_shape(n, None)?;
        let r_max = shape.n1().min(shape.n2());
        for &r in &spec.timing_r {
            if r > r_max {
                return Err(Error::arg(format!(
                    "rank {r} exceeds the lift rank bound {r_max} at n = {n}"
                )));
            }
            for &m in &spec.timing_m {
                if !spec.with_replacement && m > n {
                    return Err(Error::arg(format!(
                        "m = {m} exceeds n = {n} without replacement"
                    )));
                }
                // The two algorithms alternate within each trial instead of
                // running as two complete blocks, so a drift in machine load
                // dilutes into both means equally and their comparison
                // reflects the solvers rather than the scheduler.
                let mut iht_trials = Vec::with_capacity(spec.trials);
                let mut fiht_trials = Vec::with_capacity(spec.trials);
                for t in 0..spec.trials {
                    let (a, b) = timing_trial_pair(spec, &shape, n, r, m, t);
                    iht_trials.push(a);
                    fiht_trials.push(b);
                }
                for (algorithm, trials) in
                    [(Algorithm::Iht, iht_trials), (Algorithm::Fiht, fiht_trials)]
                {
                    let key = CellKey {
                        n,
                        r,
                        m,
                        p: None,
                        sigma: None,
                        dims: None,
                        algorithm,
                    };
                    cells.push(CellRecord::from_key(key, trials));
                }
            }
        }
    }
    Ok(cells)
}

/// Runs one timing trial for both algorithms on the same data and returns
/// the records as `(iht, fiht)`.
fn timing_trial_pair(
    spec: &ExperimentSpec,
    shape: &HankelShape,
    n: usize,
    r: usize,
    m: usize,
    t: usize,
) -> (TrialRecord, TrialRecord) {
    // Signal and mask seeds skip the algorithm so both algorithms see the
    // same data and their times compare directly.
    let sig_seed = derive_seed(
        spec.base_seed,
        &[TAG_TIMING_SIGNAL, n as u64, r as u64, t as u64],
    );
    let omega_seed = derive_seed(
        spec.base_seed,
        &[TAG_TIMING_OMEGA, n as u64, m as u64, t as u64],
    );
    let solver_seed = derive_seed(
        spec.base_seed,
        &[TAG_SOLVER, n as u64, r as u64, m as u64, t as u64],
    );
    let mut gen = SignalGenConfig::new(n, r, sig_seed);
    gen.min_separation = if spec.separated { 1.5 / n as f64 } else { 0.0 };
    gen.damping_range = spec.damping_range;
    let sig = match generate_signal(&gen) {
        Ok(s) => s,
        Err(e) => return (error_trial(sig_seed, &e), error_trial(sig_seed, &e)),
    };
    let omega = match sample_indices(n, m, spec.with_replacement, omega_seed) {
        Ok(o) => o,
        Err(e) => return (error_trial(sig_seed, &e), error_trial(sig_seed, &e)),
    };
    let observed = match project_samples(&sig.samples, &omega) {
        Ok(o) => o,
        Err(e) => return (error_trial(sig_seed, &e), error_trial(sig_seed, &e)),
    };
    let cfg = spec.solver_config(r, solver_seed);
    let run = |algorithm| {
        run_solver_trial(
            sig_seed,
            algorithm,
            &observed,
            &omega,
            shape,
            &cfg,
            &sig.samples,
            spec.success_threshold,
            spec.record_wall_time,
        )
    };
    // Whichever solver goes first also warms the caches for the second;
    // alternating the order keeps that from favoring a fixed side.
    if t % 2 == 0 {
        let iht = run(Algorithm::Iht);
        let fiht = run(Algorithm::Fiht);
        (iht, fiht)
    } else {
        let fiht = run(Algorithm::Fiht);
        let iht = run(Algorithm::Iht);
        (iht, fiht)
    }
}

/// Adds noise of relative size `sigma` to the observed entries:
/// `e = sigma * ||observed|| * w / ||w||` with `w` complex Gaussian.
pub fn add_observation_noise(observed: &mut [Complex64], sigma: f64, seed: u64) {
    if sigma == 0.0 || observed.is_empty() {
        return;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w: Vec<Complex64> = (0..observed.len())
        .map(|_| {
            let (a, b) = gaussian_pair(&mut rng);
            Complex64::new(a, b)
        })
        .collect();
    let wn = l2(&w);
    if wn == 0.0 {
        return;
    }
    let scale = sigma * l2(observed) / wn;
    for (o, wi) in observed.iter_mut().zip(&w) {
        *o += scale * wi;
    }
}

fn gaussian_pair(rng: &mut ChaCha8Rng) -> (f64, f64) {
    // Box-Muller; 1 - u keeps the logarithm away from zero.
    let u1: f64 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen();
    let r = (-2.0 * u1.ln()).sqrt();
    (r * (TAU * u2).cos(), r * (TAU * u2).sin())
}

/// Noise-robustness sweep over `noise_m x sigma_list` at fixed rank, reusing
/// the same signals across the whole grid.
pub fn run_noise(spec: &ExperimentSpec) -> Result<Vec<CellRecord>> {
    spec.validate(ExperimentKind::Noise)?;
    let shape = make_shape(spec.n, None)?;
    let r_max = shape.n1().min(shape.n2());
    if spec.rank > r_max {
        return Err(Error::arg(format!(
            "rank {} exceeds the lift rank bound {r_max} at n = {}",
            spec.rank, spec.n
        )));
    }
    let trial = |key: &CellKey, t: usize| noise_trial(spec, &shape, key, t);
    let mut cells = Vec::new();
    for &m in &spec.noise_m {
        if !spec.with_replacement && m > spec.n {
            return Err(Error::arg(format!(
                "m = {m} exceeds n = {} without replacement",
                spec.n
            )));
        }
        for &sigma in &spec.sigma_list {
            let key = CellKey {
                n: spec.n,
                r: spec.rank,
                m,
                p: None,
                sigma: Some(sigma),
                dims: None,
                algorithm: spec.algorithm,
            };
            cells.push(run_cell(spec, key, &trial));
        }
    }
    Ok(cells)
}

fn noise_trial(
    spec: &ExperimentSpec,
    shape: &HankelShape,
    key: &CellKey,
    t: usize,
) -> TrialRecord {
    let sigma = key.sigma.unwrap_or(0.0);
    // The signal seed ignores m and sigma: each trial index means the same
    // signal everywhere in the grid, and the mask seed ignores sigma so the
    // noise level varies on a fixed support.
    let sig_seed = derive_seed(
        spec.base_seed,
        &[TAG_NOISE_SIGNAL, key.n as u64, key.r as u64, t as u64],
    );
    let omega_seed = derive_seed(
        spec.base_seed,
        &[TAG_NOISE_OMEGA, key.n as u64, key.m as u64, t as u64],
    );
    let draw_seed = derive_seed(
        spec.base_seed,
        &[TAG_NOISE_DRAW, key.m as u64, sigma.to_bits(), t as u64],
    );
    let solver_seed = derive_seed(
        spec.base_seed,
        &[
            TAG_SOLVER,
            key.n as u64,
            key.r as u64,
            key.m as u64,
            sigma.to_bits(),
            t as u64,
        ],
    );
    let mut gen = SignalGenConfig::new(key.n, key.r, sig_seed);
    gen.min_separation = if spec.separated { 1.5 / key.n as f64 } else { 0.0 };
    gen.damping_range = spec.damping_range;
    let sig = match generate_signal(&gen) {
        Ok(s) => s,
        Err(e) => return error_trial(sig_seed, &e),
    };
    let omega = match sample_indices(key.n, key.m, spec.with_replacement, omega_seed) {
        Ok(o) => o,
        Err(e) => return error_trial(sig_seed, &e),
    };
    let mut observed = match project_samples(&sig.samples, &omega) {
        Ok(o) => o,
        Err(e) => return error_trial(sig_seed, &e),
    };
    add_observation_noise(&mut observed, sigma, draw_seed);
    let cfg = spec.solver_config(key.r, solver_seed);
    run_solver_trial(
        sig_seed,
        key.algorithm,
        &observed,
        &omega,
        shape,
        &cfg,
        &sig.samples,
        spec.success_threshold,
        spec.record_wall_time,
    )
}

/// Recovery of random multi-dimensional signals from a fixed observation
/// fraction of the signal box.
pub fn run_nd_demo(spec: &ExperimentSpec) -> Result<Vec<CellRecord>> {
    spec.validate(ExperimentKind::NdDemo)?;
    let shape = NdHankelShape::new(&spec.nd_dims, None)?;
    let total = shape.signal_len();
    let m = ((spec.nd_fraction * total as f64).round() as usize).clamp(1, total);
    let key = CellKey {
        n: total,
        r: spec.nd_rank,
        m,
        p: None,
        sigma: None,
        dims: Some(spec.nd_dims.clone()),
        algorithm: Algorithm::Fiht,
    };
    let trial = |key: &CellKey, t: usize| nd_trial(spec, &shape, key, t);
    Ok(vec![run_cell(spec, key, &trial)])
}

fn nd_trial(
    spec: &ExperimentSpec,
    shape: &NdHankelShape,
    key: &CellKey,
    t: usize,
) -> TrialRecord {
    let mut tag = vec![TAG_ND_SIGNAL, key.r as u64, t as u64];
    tag.extend(spec.nd_dims.iter().map(|&d| d as u64));
    let sig_seed = derive_seed(spec.base_seed, &tag);
    tag[0] = TAG_ND_OMEGA;
    tag.push(key.m as u64);
    let omega_seed = derive_seed(spec.base_seed, &tag);
    let solver_seed = derive_seed(
        spec.base_seed,
        &[TAG_SOLVER, key.n as u64, key.r as u64, key.m as u64, t as u64],
    );
    let gen = NdSignalGenConfig::new(spec.nd_dims.clone(), key.r, sig_seed);
    let sig = match generate_nd_signal(&gen) {
        Ok(s) => s,
        Err(e) => return error_trial(sig_seed, &e),
    };
    let omega = match sample_indices(key.n, key.m, spec.with_replacement, omega_seed) {
        Ok(o) => o,
        Err(e) => return error_trial(sig_seed, &e),
    };
    let observed = match project_samples(&sig.entries, &omega) {
        Ok(o) => o,
        Err(e) => return error_trial(sig_seed, &e),
    };
    let cfg = spec.solver_config(key.r, solver_seed);
    run_solver_trial(
        sig_seed,
        key.algorithm,
        &observed,
        &omega,
        shape,
        &cfg,
        &sig.entries,
        spec.success_threshold,
        spec.record_wall_time,
    )
}

/// Outcome of a single file-driven reconstruction.
#[derive(Debug)]
pub struct RecoverOutcome {
    pub result: SolveResult,
    /// Error against the full signal stored in the input file.
    pub rel_err: f64,
    /// Whether the dense cross-check ran (it needs a small enough lift).
    pub checked: bool,
}

/// Reconstructs the signal in `signal_path` from the entries selected by
/// `samples_path`.  With `check`, the fast kernels are first verified against
/// the dense lift (only possible at small `n`).
pub fn run_recover(
    signal_path: &Path,
    samples_path: &Path,
    algorithm: Algorithm,
    cfg: &SolverConfig,
    check: bool,
) -> Result<RecoverOutcome> {
    let sig = io::load_signal(signal_path)?;
    let omega = io::load_sample_set(samples_path)?;
    if omega.n != sig.n {
        return Err(Error::Format(format!(
            "sample set is over length {} but the signal has length {}",
            omega.n, sig.n
        )));
    }
    let shape = make_shape(sig.n, None)?;
    let checked = if check {
        dense_crosscheck(&shape, &sig.samples)?
    } else {
        false
    };
    let observed = project_samples(&sig.samples, &omega)?;
    let result = solve(algorithm, &observed, &omega, &shape, cfg, Some(&sig.samples))?;
    let rel_err = rel_diff(&result.x_rec, &sig.samples);
    Ok(RecoverOutcome {
        result,
        rel_err,
        checked,
    })
}

/// Verifies the fast matvec and adjoint against the materialized lift on a
/// few random probes; `Ok(false)` when the lift is too large to build.
fn dense_crosscheck(shape: &HankelShape, z: &[Complex64]) -> Result<bool> {
    let Some(dense) = shape.try_dense(z) else {
        return Ok(false);
    };
    let mut rng = ChaCha8Rng::seed_from_u64(0x00c0_ffee);
    for probe in 0..3 {
        let v: Vec<Complex64> = (0..shape.n2())
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let fast = shape.matvec(z, &v)?;
        let slow = &dense * DVector::from_column_slice(&v);
        let err = fast
            .iter()
            .zip(slow.iter())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
            / slow.norm().max(1e-300);
        if err > 1e-8 {
            return Err(Error::arg(format!(
                "dense cross-check failed on matvec probe {probe}: relative error {err:.3e}"
            )));
        }
        let u: Vec<Complex64> = (0..shape.n1())
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let fast = shape.matvec_adjoint(z, &u)?;
        let slow = dense.adjoint() * DVector::from_column_slice(&u);
        let err = fast
            .iter()
            .zip(slow.iter())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
            / slow.norm().max(1e-300);
        if err > 1e-8 {
            return Err(Error::arg(format!(
                "dense cross-check failed on adjoint probe {probe}: relative error {err:.3e}"
            )));
        }
    }
    Ok(true)
}

/// Writes the full table (trials included) as JSON.
pub fn save_table(path: &Path, cells: &[CellRecord]) -> Result<()> {
    std::fs::write(path, serde_json::to_vec_pretty(cells)?)?;
    Ok(())
}

/// Reads a table and verifies every cell's aggregates against its trial rows.
pub fn load_table(path: &Path) -> Result<Vec<CellRecord>> {
    let cells: Vec<CellRecord> = serde_json::from_slice(&std::fs::read(path)?)?;
    for (i, cell) in cells.iter().enumerate() {
        if cell.trials.is_empty() {
            return Err(Error::Format(format!("cell {i} has no trials")));
        }
        if !cell.aggregates_consistent() {
            return Err(Error::Format(format!(
                "cell {i} aggregates disagree with its trial rows"
            )));
        }
    }
    Ok(cells)
}

/// Which CSV layout [`emit_plotdata`] writes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableKind {
    Phase,
    Timing,
    Noise,
    NdDemo,
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

static TMP_COUNTER: AtomicU64 = AtomicU64::new(0);

/// Renders a table as plot-ready CSV (header row, one row per cell, column
/// order fixed per kind) via a temporary file and an atomic rename.
pub fn emit_plotdata(kind: TableKind, cells: &[CellRecord], path: &Path) -> Result<()> {
    if cells.is_empty() {
        return Err(Error::arg("refusing to write an empty table"));
    }
    let mut text = String::new();
    match kind {
        TableKind::Phase => {
            text.push_str("n,p,r,success_rate,mean_iters,mean_ms\n");
            for cell in cells {
                let p = cell.p.ok_or_else(|| {
                    Error::Format("phase table row without an observation fraction".into())
                })?;
                text.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    cell.n, p, cell.r, cell.success_rate, cell.mean_iters, cell.mean_ms
                ));
            }
        }
        TableKind::Timing => {
            text.push_str("n,r,m,algo,mean_rel_err,mean_iters,mean_ms\n");
            for cell in cells {
                text.push_str(&format!(
                    "{},{},{},{},{},{},{}\n",
                    cell.n,
                    cell.r,
                    cell.m,
                    cell.algorithm,
                    fmt_opt(cell.mean_rel_err),
                    cell.mean_iters,
                    cell.mean_ms
                ));
            }
        }
        TableKind::Noise => {
            text.push_str("n,m,sigma,snr_db,mean_rel_err\n");
            for cell in cells {
                let sigma = cell.sigma.ok_or_else(|| {
                    Error::Format("noise table row without a noise level".into())
                })?;
                let snr_db = if sigma > 0.0 {
                    -20.0 * sigma.log10()
                } else {
                    f64::INFINITY
                };
                text.push_str(&format!(
                    "{},{},{},{},{}\n",
                    cell.n,
                    cell.m,
                    sigma,
                    snr_db,
                    fmt_opt(cell.mean_rel_err)
                ));
            }
        }
        TableKind::NdDemo => {
            text.push_str("dims,r,m,success_rate,mean_rel_err,mean_iters,mean_ms\n");
            for cell in cells {
                let dims = cell.dims.as_ref().ok_or_else(|| {
                    Error::Format("nd table row without dimensions".into())
                })?;
                let dims: Vec<String> = dims.iter().map(|d| d.to_string()).collect();
                text.push_str(&format!(
                    "{},{},{},{},{},{},{}\n",
                    dims.join("x"),
                    cell.r,
                    cell.m,
                    cell.success_rate,
                    fmt_opt(cell.mean_rel_err),
                    cell.mean_iters,
                    cell.mean_ms
                ));
            }
        }
    }
    let file_name = path
        .file_name()
        .ok_or_else(|| Error::arg("output path has no file name"))?
        .to_string_lossy()
        .into_owned();
    let tmp = path.with_file_name(format!(
        ".{file_name}.{}.{}.tmp",
        std::process::id(),
        TMP_COUNTER.fetch_add(1, Ordering::SeqCst)
    ));
    if let Err(e) = std::fs::write(&tmp, &text) {
        let _ = std::fs::remove_file(&tmp);
        return Err(e.into());
    }
    if let Err(e) = std::fs::rename(&tmp, path) {
        let _ = std::fs::remove_file(&tmp);
        return Err(e.into());
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stub(success: impl Fn(&CellKey, usize) -> bool + Sync) -> impl Fn(&CellKey, usize) -> TrialRecord + Sync {
        move |key, t| {
            let ok = success(key, t);
            TrialRecord {
                seed: t as u64,
                success: ok,
                rel_err: Some(if ok { 1e-5 } else { 0.5 }),
                iterations: 1,
                wall_ms: 0.0,
                stop: Some(StopReason::ResidualTol),
                error: None,
            }
        }
    }

    fn tiny_phase_spec() -> ExperimentSpec {
        let mut spec = ExperimentSpec::for_phase();
        spec.n = 17;
        spec.trials = 4;
        spec.p_grid = vec![0.5];
        spec
    }

    #[test]
    fn phase_scan_stops_at_first_all_fail_rank() {
        let spec = tiny_phase_spec();
        let cells = run_phase_with(&spec, &stub(|key, _| key.r <= 3)).unwrap();
        let ranks: Vec<usize> = cells.iter().map(|c| c.r).collect();
        assert_eq!(ranks, vec![1, 2, 3, 4]);
        assert_eq!(cells[3].success_rate, 0.0);
        assert!(cells[..3].iter().all(|c| c.success_rate == 1.0));
    }

    #[test]
    fn phase_scan_refuses_ranks_beyond_the_lift_bound() {
        let mut spec = tiny_phase_spec();
        spec.n = 7;
        let cells = run_phase_with(&spec, &stub(|_, _| true)).unwrap();
        // min(n1, n2) = 4 at n = 7: the column ends there without a fail row.
        let ranks: Vec<usize> = cells.iter().map(|c| c.r).collect();
        assert_eq!(ranks, vec![1, 2, 3, 4]);
        assert!(cells.iter().all(|c| c.success_rate == 1.0));
    }

    #[test]
    fn fixed_rank_phase_produces_one_row_per_fraction() {
        let mut spec = tiny_phase_spec();
        spec.r_scan = false;
        spec.rank = 2;
        spec.p_grid = vec![0.6, 0.9];
        let cells = run_phase_with(&spec, &stub(|_, _| true)).unwrap();
        assert_eq!(cells.len(), 2);
        assert!(cells.iter().all(|c| c.r == 2));
        assert_eq!(cells[0].m, 10);
        assert_eq!(cells[1].m, 15);
    }

    #[test]
    fn fixed_rank_beyond_bound_is_an_argument_error() {
        let mut spec = tiny_phase_spec();
        spec.r_scan = false;
        spec.rank = 100;
        assert!(matches!(
            run_phase_with(&spec, &stub(|_, _| true)),
            Err(Error::Argument(_))
        ));
    }

    #[test]
    fn aggregates_are_exact_over_trials() {
        let spec = tiny_phase_spec();
        let key = CellKey {
            n: 17,
            r: 1,
            m: 9,
            p: Some(0.5),
            sigma: None,
            dims: None,
            algorithm: Algorithm::Fiht,
        };
        let cell = run_cell(&spec, key, &stub(|_, t| t % 2 == 0));
        // 4 trials, successes at t = 0 and 2.
        assert_eq!(cell.success_rate * spec.trials as f64, 2.0);
        assert!(cell.aggregates_consistent());
        assert_eq!(cell.mean_iters, 1.0);
    }

    #[test]
    fn table_roundtrip_and_tamper_detection() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("table.json");
        let spec = tiny_phase_spec();
        let cells = run_phase_with(&spec, &stub(|key, _| key.r <= 1)).unwrap();
        save_table(&path, &cells).unwrap();
        let back = load_table(&path).unwrap();
        assert_eq!(back, cells);
        let text = std::fs::read_to_string(&path).unwrap();
        let tampered = text.replacen("\"success_rate\": 1.0", "\"success_rate\": 0.5", 1);
        assert_ne!(text, tampered);
        std::fs::write(&path, tampered).unwrap();
        assert!(matches!(load_table(&path), Err(Error::Format(_))));
    }

    #[test]
    fn emit_plotdata_writes_the_documented_phase_columns() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("phase.csv");
        let spec = tiny_phase_spec();
        let cells = run_phase_with(&spec, &stub(|key, _| key.r <= 1)).unwrap();
        emit_plotdata(TableKind::Phase, &cells, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "n,p,r,success_rate,mean_iters,mean_ms");
        assert_eq!(lines.len(), cells.len() + 1);
        assert_eq!(lines[1], "17,0.5,1,1,1,0");
        assert_eq!(lines[2], "17,0.5,2,0,1,0");
    }

    #[test]
    fn emit_plotdata_refuses_empty_tables_and_leaves_no_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("phase.csv");
        assert!(matches!(
            emit_plotdata(TableKind::Phase, &[], &path),
            Err(Error::Argument(_))
        ));
        assert!(!path.exists());
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
    }

    #[test]
    fn derive_seed_is_stable_and_spreads() {
        assert_eq!(derive_seed(7, &[1, 2]), derive_seed(7, &[1, 2]));
        assert_ne!(derive_seed(7, &[1, 2]), derive_seed(7, &[2, 1]));
        assert_ne!(derive_seed(7, &[1, 2]), derive_seed(8, &[1, 2]));
        let mut seen = std::collections::HashSet::new();
        for a in 0..16u64 {
            for b in 0..16u64 {
                seen.insert(derive_seed(0, &[a, b]));
            }
        }
        assert_eq!(seen.len(), 256);
    }

    #[test]
    fn parallel_map_matches_serial_order() {
        let serial = parallel_map(1, 37, |i| i * i);
        let parallel = parallel_map(4, 37, |i| i * i);
        assert_eq!(serial, parallel);
    }

    #[test]
    fn real_phase_runs_are_reproducible_across_thread_counts() {
        let mut spec = tiny_phase_spec();
        spec.r_scan = false;
        spec.rank = 1;
        spec.p_grid = vec![0.8];
        spec.trials = 3;
        spec.record_wall_time = false;
        let a = run_phase(&spec).unwrap();
        let b = run_phase(&spec).unwrap();
        assert_eq!(a, b);
        spec.threads = 4;
        let c = run_phase(&spec).unwrap();
        assert_eq!(a, c);
        assert!(a[0].success_rate >= 2.0 / 3.0, "rate {}", a[0].success_rate);
        let dir = tempfile::tempdir().unwrap();
        let p1 = dir.path().join("a.csv");
        let p2 = dir.path().join("b.csv");
        emit_plotdata(TableKind::Phase, &a, &p1).unwrap();
        emit_plotdata(TableKind::Phase, &c, &p2).unwrap();
        assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());
    }

    #[test]
    fn noise_injection_has_exact_relative_norm() {
        let mut observed = vec![Complex64::new(1.0, 0.0); 50];
        let before = observed.clone();
        add_observation_noise(&mut observed, 0.1, 99);
        let delta: f64 = observed
            .iter()
            .zip(&before)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        let base = l2(&before);
        assert!((delta / base - 0.1).abs() < 1e-12);
    }

    #[test]
    fn zero_noise_sweep_reduces_to_exact_recovery() {
        let mut spec = ExperimentSpec::for_noise();
        spec.n = 63;
        spec.rank = 2;
        spec.noise_m = vec![40];
        spec.sigma_list = vec![0.0];
        spec.trials = 3;
        spec.record_wall_time = false;
        let cells = run_noise(&spec).unwrap();
        assert_eq!(cells.len(), 1);
        let err = cells[0].mean_rel_err.unwrap();
        assert!(err <= 1e-3, "mean rel err {err}");
    }

    #[test]
    fn timing_covers_both_algorithms_on_shared_data() {
        let mut spec = ExperimentSpec::for_timing();
        spec.timing_n = vec![63];
        spec.timing_r = vec![2];
        spec.timing_m = vec![40];
        spec.trials = 2;
        let cells = run_timing(&spec).unwrap();
        assert_eq!(cells.len(), 2);
        assert_eq!(cells[0].algorithm, Algorithm::Iht);
        assert_eq!(cells[1].algorithm, Algorithm::Fiht);
        for cell in &cells {
            assert!(cell.mean_ms > 0.0);
            assert!(cell.mean_rel_err.unwrap() < 1e-3);
            // Shared signal seeds: both algorithm cells graded the same data.
            assert_eq!(cell.trials[0].seed, cells[0].trials[0].seed);
        }
    }

    #[test]
    fn nd_demo_recovers_at_generous_sampling() {
        let mut spec = ExperimentSpec::for_nd_demo();
        spec.nd_dims = vec![4, 4, 6];
        spec.nd_rank = 2;
        spec.nd_fraction = 0.7;
        spec.trials = 2;
        spec.record_wall_time = false;
        let cells = run_nd_demo(&spec).unwrap();
        assert_eq!(cells.len(), 1);
        assert_eq!(cells[0].m, 67);
        assert_eq!(cells[0].success_rate, 1.0);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nd.csv");
        emit_plotdata(TableKind::NdDemo, &cells, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.lines().nth(1).unwrap().starts_with("4x4x6,2,67,1,"));
    }

    #[test]
    fn recover_roundtrip_through_files() {
        let dir = tempfile::tempdir().unwrap();
        let sig_path = dir.path().join("signal.json");
        let omega_path = dir.path().join("omega.json");
        let sig = generate_signal(&SignalGenConfig::new(63, 3, 5)).unwrap();
        io::save_signal(&sig_path, &sig).unwrap();
        let omega = sample_indices(63, 40, false, 6).unwrap();
        io::save_sample_set(&omega_path, &omega).unwrap();
        let cfg = SolverConfig::new(3);
        let out = run_recover(&sig_path, &omega_path, Algorithm::Fiht, &cfg, true).unwrap();
        assert!(out.checked);
        assert!(out.result.converged);
        assert!(out.rel_err <= 1e-3, "rel err {}", out.rel_err);
    }

    #[test]
    fn recover_rejects_mismatched_lengths() {
        let dir = tempfile::tempdir().unwrap();
        let sig_path = dir.path().join("signal.json");
        let omega_path = dir.path().join("omega.json");
        let sig = generate_signal(&SignalGenConfig::new(63, 3, 5)).unwrap();
        io::save_signal(&sig_path, &sig).unwrap();
        let omega = sample_indices(50, 20, false, 6).unwrap();
        io::save_sample_set(&omega_path, &omega).unwrap();
        let cfg = SolverConfig::new(3);
        assert!(matches!(
            run_recover(&sig_path, &omega_path, Algorithm::Fiht, &cfg, false),
            Err(Error::Format(_))
        ));
    }

    #[test]
    fn spec_kind_mismatch_is_rejected() {
        let spec = ExperimentSpec::for_timing();
        assert!(matches!(run_phase(&spec), Err(Error::Argument(_))));
        assert!(matches!(run_noise(&spec), Err(Error::Argument(_))));
    }
}
