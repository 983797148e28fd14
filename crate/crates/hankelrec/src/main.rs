//! Command-line front end: signal generation, single-file recovery, and the
//! four experiment campaigns, each writing CSV plus a JSON table with
//! per-trial rows.
//!
//! Exit codes: 0 success, 1 bad input or I/O, 2 recovery hit the iteration
//! cap, 3 recovery diverged (the partial result is still written).

use clap::{Args, Parser, Subcommand};
use hankelrec::{
    derive_seed, emit_plotdata, io, run_nd_demo, run_noise, run_phase, run_recover, run_timing,
    sample_indices, save_table, Algorithm, AmplitudeLaw, Error, ExperimentKind, ExperimentSpec,
    InitScheme, Result, SignalGenConfig, SolverConfig, TableKind,
};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "hankelrec",
    version,
    about = "Spectrally sparse signal reconstruction via low-rank Hankel matrix completion"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a random sparse signal and an observation mask, writing both as JSON
    Gen(GenArgs),
    /// Reconstruct a signal from the observed entries selected by a mask file
    Recover(RecoverArgs),
    /// Phase-transition campaign: success rate over observation fraction and rank
    Phase(CampaignArgs),
    /// Timing table: both algorithms on identical data over an (n, r, m) grid
    Timing(CampaignArgs),
    /// Noise-robustness sweep: error versus noise level per sample budget
    Noise(CampaignArgs),
    /// Multi-dimensional recovery demo on a signal box
    NdDemo(CampaignArgs),
}

#[derive(Args)]
struct GenArgs {
    /// Signal length
    #[arg(long, default_value_t = 127)]
    n: usize,
    /// Number of modes
    #[arg(long, default_value_t = 4)]
    rank: usize,
    /// Observed entries (default n / 2)
    #[arg(long)]
    m: Option<usize>,
    /// Minimum wrap-around frequency separation
    #[arg(long, default_value_t = 0.0)]
    min_sep: f64,
    /// Lower end of the per-mode damping range
    #[arg(long, default_value_t = 0.0)]
    damping_lo: f64,
    /// Upper end of the per-mode damping range
    #[arg(long, default_value_t = 0.0)]
    damping_hi: f64,
    /// Sample observation indices with replacement
    #[arg(long)]
    with_replacement: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory for signal.json and omega.json
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct RecoverArgs {
    /// Signal file written by `gen`
    #[arg(long)]
    signal: PathBuf,
    /// Sample-set file written by `gen`
    #[arg(long)]
    samples: PathBuf,
    /// Model order of the reconstruction
    #[arg(long)]
    rank: usize,
    #[arg(long, default_value = "fiht", value_parser = parse_algo)]
    algo: Algorithm,
    /// Initialization: onestep or resampled
    #[arg(long, default_value = "onestep")]
    init: String,
    /// Resampling rounds when --init resampled
    #[arg(long, default_value_t = 3)]
    init_rounds: usize,
    /// Incoherence bound for trimming when --init resampled
    #[arg(long, default_value_t = 2.0)]
    init_mu: f64,
    /// Stop when the observed relative residual falls below this (0 disables)
    #[arg(long, default_value_t = 1e-4)]
    tol_res: f64,
    /// Stop when the relative step falls below this (0 disables)
    #[arg(long, default_value_t = 1e-5)]
    tol_step: f64,
    #[arg(long, default_value_t = 500)]
    max_iters: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Cross-check the fast kernels against the dense lift first (small n)
    #[arg(long)]
    check: bool,
    /// Result file
    #[arg(long, default_value = "result.json")]
    out: PathBuf,
    /// Optional file for the reconstructed samples only
    #[arg(long)]
    x_out: Option<PathBuf>,
}

#[derive(Args)]
struct CampaignArgs {
    /// JSON file mirroring the experiment spec; flags override it
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    /// Fixed rank; for phase this disables the rank scan
    #[arg(long)]
    rank: Option<usize>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long, value_parser = parse_algo)]
    algo: Option<Algorithm>,
    /// Initialization: onestep or resampled
    #[arg(long)]
    init: Option<String>,
    #[arg(long)]
    init_rounds: Option<usize>,
    #[arg(long)]
    init_mu: Option<f64>,
    #[arg(long)]
    tol_res: Option<f64>,
    #[arg(long)]
    tol_step: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    /// Enforce 1.5/n frequency separation in generated signals
    #[arg(long)]
    separated: bool,
    /// Observation fractions for phase, comma separated
    #[arg(long, value_delimiter = ',')]
    p_grid: Option<Vec<f64>>,
    /// Noise levels, comma separated
    #[arg(long, value_delimiter = ',')]
    sigma_list: Option<Vec<f64>>,
    /// Sample budgets for the noise sweep, comma separated
    #[arg(long, value_delimiter = ',')]
    noise_m: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    timing_n: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    timing_r: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    timing_m: Option<Vec<usize>>,
    /// Signal box for nd-demo, comma separated
    #[arg(long, value_delimiter = ',')]
    dims: Option<Vec<usize>>,
    /// Observed fraction of the signal box for nd-demo
    #[arg(long)]
    fraction: Option<f64>,
    #[arg(long)]
    with_replacement: bool,
    /// Write all wall-time fields as zero so reruns are byte-identical
    #[arg(long)]
    no_walltime: bool,
    /// Output directory for the CSV and JSON tables
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

fn parse_algo(s: &str) -> std::result::Result<Algorithm, String> {
    match s {
        "iht" => Ok(Algorithm::Iht),
        "fiht" => Ok(Algorithm::Fiht),
        other => Err(format!("unknown algorithm '{other}', expected iht or fiht")),
    }
}

fn parse_init(name: &str, rounds: usize, mu: f64) -> Result<InitScheme> {
    match name {
        "onestep" => Ok(InitScheme::OneStep),
        "resampled" => Ok(InitScheme::Resampled { rounds, mu }),
        other => Err(Error::arg(format!(
            "unknown initialization '{other}', expected onestep or resampled"
        ))),
    }
}

fn build_spec(kind: ExperimentKind, args: &CampaignArgs) -> Result<ExperimentSpec> {
    let mut spec = match &args.config {
        Some(path) => serde_json::from_slice(&std::fs::read(path)?)?,
        None => match kind {
            ExperimentKind::Phase => ExperimentSpec::for_phase(),
            ExperimentKind::Timing => ExperimentSpec::for_timing(),
            ExperimentKind::Noise => ExperimentSpec::for_noise(),
            ExperimentKind::NdDemo => ExperimentSpec::for_nd_demo(),
        },
    };
    // The subcommand decides the campaign even when a config file says
    // otherwise; fields the campaign does not read are ignored.
    spec.kind = kind;
    if let Some(n) = args.n {
        spec.n = n;
    }
    if let Some(r) = args.rank {
        match kind {
            ExperimentKind::NdDemo => spec.nd_rank = r,
            ExperimentKind::Phase => {
                spec.rank = r;
                spec.r_scan = false;
            }
            _ => spec.rank = r,
        }
    }
    if let Some(t) = args.trials {
        spec.trials = t;
    }
    if let Some(s) = args.seed {
        spec.base_seed = s;
    }
    if let Some(t) = args.threads {
        spec.threads = t;
    }
    if let Some(a) = args.algo {
        spec.algorithm = a;
    }
    if let Some(name) = &args.init {
        spec.init = parse_init(
            name,
            args.init_rounds.unwrap_or(3),
            args.init_mu.unwrap_or(2.0),
        )?;
    }
    if let Some(t) = args.tol_res {
        spec.tol_residual = t;
    }
    if let Some(t) = args.tol_step {
        spec.tol_step = t;
    }
    if let Some(m) = args.max_iters {
        spec.max_iters = m;
    }
    if args.separated {
        spec.separated = true;
    }
    if let Some(g) = &args.p_grid {
        spec.p_grid = g.clone();
    }
    if let Some(s) = &args.sigma_list {
        spec.sigma_list = s.clone();
    }
    if let Some(m) = &args.noise_m {
        spec.noise_m = m.clone();
    }
    if let Some(v) = &args.timing_n {
        spec.timing_n = v.clone();
    }
    if let Some(v) = &args.timing_r {
        spec.timing_r = v.clone();
    }
    if let Some(v) = &args.timing_m {
        spec.timing_m = v.clone();
    }
    if let Some(d) = &args.dims {
        spec.nd_dims = d.clone();
    }
    if let Some(f) = args.fraction {
        spec.nd_fraction = f;
    }
    if args.with_replacement {
        spec.with_replacement = true;
    }
    if args.no_walltime {
        spec.record_wall_time = false;
    }
    Ok(spec)
}

fn run_campaign(kind: ExperimentKind, args: &CampaignArgs) -> Result<ExitCode> {
    let spec = build_spec(kind, args)?;
    let (cells, table_kind, stem) = match kind {
        ExperimentKind::Phase => (run_phase(&spec)?, TableKind::Phase, "phase"),
        ExperimentKind::Timing => (run_timing(&spec)?, TableKind::Timing, "timing"),
        ExperimentKind::Noise => (run_noise(&spec)?, TableKind::Noise, "noise"),
        ExperimentKind::NdDemo => (run_nd_demo(&spec)?, TableKind::NdDemo, "nd_demo"),
    };
    std::fs::create_dir_all(&args.out)?;
    let csv = args.out.join(format!("{stem}.csv"));
    let json = args.out.join(format!("{stem}.json"));
    emit_plotdata(table_kind, &cells, &csv)?;
    save_table(&json, &cells)?;
    println!(
        "{} cells, {} trials each -> {} and {}",
        cells.len(),
        spec.trials,
        csv.display(),
        json.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn run_gen(args: &GenArgs) -> Result<ExitCode> {
    let m = args.m.unwrap_or(args.n / 2);
    let gen = SignalGenConfig {
        n: args.n,
        rank: args.rank,
        min_separation: args.min_sep,
        damping_range: (args.damping_lo, args.damping_hi),
        amplitudes: AmplitudeLaw::SpreadMagnitude,
        seed: derive_seed(args.seed, &[0x01]),
    };
    let sig = hankelrec::generate_signal(&gen)?;
    let omega = sample_indices(
        args.n,
        m,
        args.with_replacement,
        derive_seed(args.seed, &[0x02]),
    )?;
    std::fs::create_dir_all(&args.out)?;
    let sig_path = args.out.join("signal.json");
    let omega_path = args.out.join("omega.json");
    io::save_signal(&sig_path, &sig)?;
    io::save_sample_set(&omega_path, &omega)?;
    println!(
        "signal (n = {}, rank = {}) -> {}; mask (m = {}) -> {}",
        args.n,
        args.rank,
        sig_path.display(),
        m,
        omega_path.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn run_recover_cmd(args: &RecoverArgs) -> Result<ExitCode> {
    if args.rank == 0 {
        return Err(Error::arg("rank must be at least 1"));
    }
    let mut cfg = SolverConfig::new(args.rank);
    cfg.tol_residual = args.tol_res;
    cfg.tol_step = args.tol_step;
    cfg.max_iters = args.max_iters;
    cfg.seed = args.seed;
    cfg.init = parse_init(&args.init, args.init_rounds, args.init_mu)?;
    match run_recover(&args.signal, &args.samples, args.algo, &cfg, args.check) {
        Ok(out) => {
            io::save_result(&args.out, &out.result)?;
            if let Some(x_path) = &args.x_out {
                let pairs: Vec<(f64, f64)> =
                    out.result.x_rec.iter().map(|c| (c.re, c.im)).collect();
                let body = serde_json::json!({ "n": out.result.x_rec.len(), "samples": pairs });
                std::fs::write(x_path, serde_json::to_vec_pretty(&body)?)?;
            }
            if out.checked {
                println!("dense cross-check passed");
            }
            println!(
                "{} iterations, stop {:?}, rel err {:.3e} -> {}",
                out.result.iterations,
                out.result.stop,
                out.rel_err,
                args.out.display()
            );
            Ok(if out.result.converged {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            })
        }
        Err(Error::Divergence {
            residual,
            iteration,
            partial,
            ..
        }) => {
            io::save_result(&args.out, &partial)?;
            eprintln!(
                "diverged at iteration {iteration} (residual {residual:.3e}); partial result -> {}",
                args.out.display()
            );
            Ok(ExitCode::from(3))
        }
        Err(e) => Err(e),
    }
}

fn dispatch(cli: &Cli) -> Result<ExitCode> {
    match &cli.command {
        Command::Gen(args) => run_gen(args),
        Command::Recover(args) => run_recover_cmd(args),
        Command::Phase(args) => run_campaign(ExperimentKind::Phase, args),
        Command::Timing(args) => run_campaign(ExperimentKind::Timing, args),
        Command::Noise(args) => run_campaign(ExperimentKind::Noise, args),
        Command::NdDemo(args) => run_campaign(ExperimentKind::NdDemo, args),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
