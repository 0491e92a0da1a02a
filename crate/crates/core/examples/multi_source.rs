//! Two labeled sources with different spurious correlations, one target.
//! Each source gets its own specific block; all three share one block.

use pga::testbeds::{run_spurious, SpuriousExperiment};
use pga::{Method, PgaConfig};

fn main() -> pga::Result<()> {
    let exp = SpuriousExperiment {
        p_src: vec![0.9, 0.75],
        ..SpuriousExperiment::default()
    };
    let cfg = PgaConfig {
        total_iters: 1000,
        ..PgaConfig::default()
    };
    for method in [Method::Erm, Method::Pga] {
        let out = run_spurious(&exp, &cfg, method, 0)?;
        let last = out.trace.records().last().expect("non-empty trace");
        println!(
            "{:<4} ood={:.4} in-dist={:.4} final cos per source: {:?}",
            method.name(),
            out.ood_acc,
            out.in_dist_acc,
            last.cos_sims
                .iter()
                .map(|c| format!("{c:+.3}"))
                .collect::<Vec<_>>()
        );
    }
    Ok(())
}
