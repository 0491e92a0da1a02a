//! ZDT-1 with f1 as the "source" and f2 as the "target" objective.
//!
//! Runs ERM, alignment-only and PGA from the same random starts and prints
//! the final objective values and the distance of the tail coordinates from
//! the Pareto set.
//!
//!     cargo run --release --example zdt1_pareto [seeds] [eta0]

use pga::testbeds::run_zdt1;
use pga::{Method, PgaConfig};

fn main() -> pga::Result<()> {
    let mut args = std::env::args().skip(1);
    let seeds: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(5);
    let eta0: f64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(0.1);
    let cfg = PgaConfig {
        eta0,
        ..PgaConfig::default()
    };

    println!("method      seed  f1        f2        convergence");
    for method in [Method::Erm, Method::AlignOnly, Method::Pga] {
        for seed in 0..seeds {
            let out = run_zdt1(&cfg, method, seed)?;
            println!(
                "{:<11} {:<5} {:<9.5} {:<9.5} {:.3e}",
                method.name(),
                seed,
                out.f1,
                out.f2,
                out.convergence
            );
        }
    }
    Ok(())
}
