//! A small empirical phase transition: which model orders are recoverable at
//! which observation fractions.
//!
//! For each fraction `p` the harness scans the rank upward and records the
//! share of trials recovering below the success threshold, stopping at the
//! first rank where every trial fails.  The output is the classic staircase:
//! more samples buy higher recoverable model order, with the boundary
//! hugging a straight line in `(p, r)`.
//!
//! The full campaign behind the `phase` subcommand runs 18 fractions at
//! n = 127 with 50 trials each; this example keeps a coarse grid and 12
//! trials per cell so it finishes in seconds.
//!
//! Run with `cargo run --example phase_transition`.

use hankelrec::{run_phase, ExperimentSpec};

fn main() -> Result<(), hankelrec::Error> {
    let mut spec = ExperimentSpec::for_phase();
    spec.n = 63;
    spec.p_grid = vec![0.2, 0.35, 0.5, 0.65, 0.8];
    spec.trials = 8;
    // Failed trials run to the iteration cap, and the scan has to cross the
    // failing region before it can stop; a moderate cap keeps the staircase
    // intact while making the hopeless cells cheap.
    spec.max_iters = 200;
    spec.threads = std::thread::available_parallelism().map_or(1, |t| t.get().min(8));
    let cells = run_phase(&spec)?;

    println!(
        "n = {}, {} trials per cell, success = relative error below {:.0e}\n",
        spec.n, spec.trials, spec.success_threshold
    );
    println!("{:>5} {:>4} {:>4} {:>9} {:>11} {:>9}", "p", "m", "r", "success", "mean iters", "mean ms");
    let mut last_p = f64::NAN;
    for cell in &cells {
        let p = cell.p.expect("phase cells carry p");
        if p != last_p && !last_p.is_nan() {
            println!();
        }
        last_p = p;
        println!(
            "{:>5.2} {:>4} {:>4} {:>8.0}% {:>11.1} {:>9.1}",
            p,
            cell.m,
            cell.r,
            cell.success_rate * 100.0,
            cell.mean_iters,
            cell.mean_ms
        );
    }
    println!("\neach column ends at the first rank with no successful trial.");
    Ok(())
}
