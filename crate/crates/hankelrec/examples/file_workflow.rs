//! The file-based workflow behind the command-line tool.
//!
//! `hankelrec gen` writes a signal and a sample set as JSON; `hankelrec
//! recover` reads them back, runs the solver, and writes the result.  This
//! example drives the same round trip through the library so the formats are
//! visible in one place: signals carry their modes alongside the samples,
//! sample sets record whether indices may repeat, and results embed the full
//! per-iteration trace.  All floats survive the round trip bit for bit.
//!
//! Run with `cargo run --example file_workflow`.

use hankelrec::io::{load_result, load_sample_set, load_signal, save_sample_set, save_signal};
use hankelrec::{
    generate_signal, make_shape, project_samples, rel_diff, sample_indices, solve, Algorithm,
    SignalGenConfig, SolverConfig,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join("hankelrec_file_workflow");
    std::fs::create_dir_all(&dir)?;
    let signal_path = dir.join("signal.json");
    let omega_path = dir.join("omega.json");
    let result_path = dir.join("result.json");

    // Producer side: draw an instance and persist it.
    let sig = generate_signal(&SignalGenConfig::new(127, 4, 1))?;
    let omega = sample_indices(127, 72, false, 2)?;
    save_signal(&signal_path, &sig)?;
    save_sample_set(&omega_path, &omega)?;
    println!("wrote {}", signal_path.display());
    println!("wrote {}", omega_path.display());

    // Consumer side: load, recover, persist the outcome.  This half only
    // sees the files, exactly like the CLI subcommand.
    let sig2 = load_signal(&signal_path)?;
    let omega2 = load_sample_set(&omega_path)?;
    let shape = make_shape(sig2.n, None)?;
    let observed = project_samples(&sig2.samples, &omega2)?;
    let result = solve(
        Algorithm::Fiht,
        &observed,
        &omega2,
        &shape,
        &SolverConfig::new(4),
        None,
    )?;
    hankelrec::io::save_result(&result_path, &result)?;
    println!("wrote {}", result_path.display());

    // Round trip is lossless: reload and compare against the live run.
    let reloaded = load_result(&result_path)?;
    assert_eq!(reloaded.x_rec, result.x_rec);
    assert_eq!(reloaded.iterations, result.iterations);
    println!(
        "\nreloaded result: {} iterations, stop = {:?}",
        reloaded.iterations, reloaded.stop
    );
    println!(
        "true error vs the generating signal: {:.3e}",
        rel_diff(&reloaded.x_rec, &sig.samples)
    );

    for p in [&signal_path, &omega_path, &result_path] {
        let bytes = std::fs::metadata(p)?.len();
        println!("{:>12} bytes  {}", bytes, p.display());
    }
    Ok(())
}
