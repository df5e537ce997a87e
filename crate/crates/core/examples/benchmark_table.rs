//! Compares BeamStep with the single-tendon baselines on a seeded target suite.
//!
//! Usage: `cargo run --release --example benchmark_table -- [n_targets] [seed]`

use tdma_continuum::bench::{run_benchmark, BenchConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let n_targets = args.next().map(|s| s.parse()).transpose()?.unwrap_or(15);
    let seed = args.next().map(|s| s.parse()).transpose()?.unwrap_or(0);
    let config = BenchConfig {
        n_targets,
        seed,
        ..BenchConfig::default()
    };
    let table = run_benchmark(&config)?;

    let fmt = |s: &Option<tdma_continuum::metrics::Summary>| match s {
        Some(s) => format!("{:7.1} ({:5.1})", s.median, s.iqr),
        None => "      -        ".to_string(),
    };
    println!(
        "{:<11}{:>3} {:>15} {:>15} {:>15} {:>15} {:>15} {:>15} {:>15}",
        "method", "|S|", "T [s]", "K_h", "seg1 peak %", "seg2 peak %", "seg3 peak %", "seg2 dur %", "seg3 dur %"
    );
    for r in &table.rows {
        println!(
            "{:<11}{:>3} {} {} {} {} {} {} {}",
            r.method.to_string(),
            r.servos,
            fmt(&r.total_time),
            fmt(&r.stages),
            fmt(&r.peak_overshoot[0]),
            fmt(&r.peak_overshoot[1]),
            fmt(&r.peak_overshoot[2]),
            fmt(&r.duration_overshoot[1]),
            fmt(&r.duration_overshoot[2]),
        );
    }
    let failed = table.failures().count();
    if failed > 0 {
        println!("{failed} trial(s) failed");
    }
    Ok(())
}
