//! Adaptation under a flipped spurious correlation.
//!
//! The labeled source has an environment feature that agrees with the label
//! 90% of the time; on the unlabeled target it agrees 10% of the time. A
//! model that leans on the environment feature does well in-distribution and
//! badly out of distribution.
//!
//!     cargo run --release --example spurious_uda [seeds]

use pga::testbeds::{run_spurious, SpuriousExperiment};
use pga::{Method, PgaConfig};

fn main() -> pga::Result<()> {
    let seeds: u64 = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(3);
    let exp = SpuriousExperiment::default();
    let cfg = PgaConfig {
        total_iters: 1000,
        ..PgaConfig::default()
    };

    println!("method       in-dist   ood");
    for method in [Method::Erm, Method::AlignOnly, Method::Pga] {
        let (mut iid, mut ood) = (0.0, 0.0);
        for seed in 0..seeds {
            let out = run_spurious(&exp, &cfg, method, seed)?;
            iid += out.in_dist_acc;
            ood += out.ood_acc;
        }
        let n = seeds as f64;
        println!("{:<12} {:.4}    {:.4}", method.name(), iid / n, ood / n);
    }
    Ok(())
}
