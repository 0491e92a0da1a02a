//! The gradient-dependent term of the generalization bound, accumulated
//! over training, for ERM and PGA on the same data and batches.

use pga::diagnostics::bound_increment;
use pga::optimizer::StepReport;
use pga::testbeds::{run_spurious, SpuriousExperiment};
use pga::{Method, PgaConfig};

fn main() -> pga::Result<()> {
    // Hand-checkable case: g_sh,src = (1, 0), g_S = (2), g_sh,tgt = (0, 1),
    // g_T = (3) at eta = 1 gives 5 + 10 + 15 = 30.
    let report = StepReport {
        eta: 1.0,
        source_losses: vec![0.0],
        target_loss: 0.0,
        cos_sims: vec![0.0],
        shared_dots: vec![0.0],
        source_shared_norms: vec![1.0],
        source_specific_norms: vec![2.0],
        target_shared_norm: 1.0,
        target_specific_norm: 3.0,
        bound_increment: 0.0,
    };
    println!("fixture increment: {}", bound_increment(&report, 1.0).increment);

    let exp = SpuriousExperiment::default();
    let cfg = PgaConfig {
        total_iters: 500,
        ..PgaConfig::default()
    };
    for method in [Method::Erm, Method::Pga] {
        let out = run_spurious(&exp, &cfg, method, 0)?;
        let recs = out.trace.records();
        let at = |i: usize| recs[i].bound_cumulative;
        println!(
            "{:<4} cumulative at 50/250/500: {:.4} {:.4} {:.4}",
            method.name(),
            at(49),
            at(249),
            at(recs.len() - 1)
        );
    }
    Ok(())
}
