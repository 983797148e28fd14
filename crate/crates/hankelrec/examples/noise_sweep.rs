//! Recovery error under additive observation noise.
//!
//! Observations are `P_Omega(x + e)` with `e` white complex Gaussian scaled
//! to `||e|| = sigma ||P_Omega(x)||`.  A stable solver should degrade
//! linearly: halving the noise halves the recovery error, which shows up as
//! a slope-1 line on a log-log plot.  The sweep also doubles the sample
//! count to show the constant in front improving.
//!
//! The noise draws use common random numbers across the sigma grid (same
//! signal, same mask, same Gaussian direction per trial), so the curves are
//! smooth even with few trials.
//!
//! Run with `cargo run --example noise_sweep`.

use hankelrec::{run_noise, ExperimentSpec};

fn main() -> Result<(), hankelrec::Error> {
    let mut spec = ExperimentSpec::for_noise();
    spec.n = 255;
    spec.rank = 4;
    spec.noise_m = vec![64, 128];
    spec.sigma_list = (0..7).map(|k| 10f64.powf(-3.0 + 0.5 * k as f64)).collect();
    spec.trials = 5;
    spec.threads = std::thread::available_parallelism().map_or(1, |t| t.get().min(8));
    let cells = run_noise(&spec)?;

    println!(
        "n = {}, r = {}, {} trials per cell\n",
        spec.n, spec.rank, spec.trials
    );
    println!("{:>5} {:>10} {:>9} {:>14}", "m", "sigma", "snr [dB]", "mean rel err");
    let mut last_m = 0usize;
    for cell in &cells {
        if cell.m != last_m && last_m != 0 {
            println!();
        }
        last_m = cell.m;
        let sigma = cell.sigma.expect("noise cells carry sigma");
        println!(
            "{:>5} {:>10.1e} {:>9.0} {:>14.3e}",
            cell.m,
            sigma,
            -20.0 * sigma.log10(),
            cell.mean_rel_err.unwrap_or(f64::NAN)
        );
    }

    // Least-squares slope of log(err) against log(sigma), per m.
    for &m in &spec.noise_m {
        let pts: Vec<(f64, f64)> = cells
            .iter()
            .filter(|c| c.m == m)
            .filter_map(|c| Some((c.sigma?.ln(), c.mean_rel_err?.ln())))
            .collect();
        let k = pts.len() as f64;
        let (sx, sy): (f64, f64) = pts.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0, a.1 + p.1));
        let (sxx, sxy): (f64, f64) = pts
            .iter()
            .fold((0.0, 0.0), |a, p| (a.0 + p.0 * p.0, a.1 + p.0 * p.1));
        let slope = (k * sxy - sx * sy) / (k * sxx - sx * sx);
        println!("log-log slope at m = {m}: {slope:.3}  (1.0 = exactly linear in the noise)");
    }
    Ok(())
}
