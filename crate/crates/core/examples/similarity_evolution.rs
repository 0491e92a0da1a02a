//! Source/target gradient cosine similarity over a PGA run, for a few
//! alignment strengths. With alignment on, the similarity climbs early and
//! drops off as the losses flatten.

use pga::diagnostics::{similarity_profile, smooth, smoothed_peak};
use pga::testbeds::{run_spurious, SpuriousExperiment};
use pga::{Method, PgaConfig};

fn main() -> pga::Result<()> {
    let exp = SpuriousExperiment::default();
    for rho_ga in [0.0, 0.1, 0.5] {
        let cfg = PgaConfig {
            rho_ga,
            total_iters: 1000,
            ..PgaConfig::default()
        };
        let out = run_spurious(&exp, &cfg, Method::Pga, 0)?;
        let profile = similarity_profile(&out.trace)?;
        let s = smooth(&out.trace.mean_cos_series());
        let samples: Vec<String> = s.iter().step_by(100).map(|v| format!("{v:+.3}")).collect();
        println!(
            "rho_ga={rho_ga:<4} peak={:+.3} at {:<4} rise={} fall={}",
            smoothed_peak(&out.trace),
            profile.peak_iter,
            profile.rise,
            profile.fall
        );
        println!("  every 100 iters: {}", samples.join(" "));
    }
    Ok(())
}
