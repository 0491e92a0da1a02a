//! Plugging your own losses into the optimizer.
//!
//! Two least-squares problems share a weight vector `w` and each owns a
//! scalar offset. The source fits `y = 2x0 + b_S`, the target `y = 2x0 -
//! x1 + b_T`, so the shared gradients disagree on the second coordinate.

use std::sync::Arc;

use pga::diagnostics::TrainTrace;
use pga::{
    pga_step, Batch, BlockId, Domain, DomainObjective, Evaluation, GradSlices, Objectives,
    ParamLayout, ParamVector, PgaConfig, StepBatches,
};

struct LeastSquares {
    domain: Domain,
    xs: Vec<[f64; 2]>,
    ys: Vec<f64>,
}

impl LeastSquares {
    fn new(domain: Domain, f: impl Fn([f64; 2]) -> f64) -> Self {
        let xs: Vec<[f64; 2]> = (0..20)
            .map(|i| [(i as f64 * 0.37).sin(), (i as f64 * 0.91).cos()])
            .collect();
        let ys = xs.iter().map(|&x| f(x)).collect();
        Self { domain, xs, ys }
    }
}

impl DomainObjective for LeastSquares {
    fn domain(&self) -> Domain {
        self.domain
    }

    fn evaluate(&self, p: &ParamVector, batch: &Batch) -> pga::Result<Evaluation> {
        let w = p.slice(BlockId::Shared)?;
        let b = p.slice(self.domain.block())?[0];
        let rows: Vec<usize> = match batch {
            Batch::Full => (0..self.xs.len()).collect(),
            Batch::Indices(ix) => ix.clone(),
        };
        let n = rows.len() as f64;
        let (mut loss, mut gw, mut gb) = (0.0, vec![0.0; 2], 0.0);
        for i in rows {
            let x = self.xs[i];
            let r = w[0] * x[0] + w[1] * x[1] + b - self.ys[i];
            loss += 0.5 * r * r / n;
            gw[0] += r * x[0] / n;
            gw[1] += r * x[1] / n;
            gb += r / n;
        }
        Ok(Evaluation {
            loss,
            grad: GradSlices::new(self.domain, gw, vec![gb]),
        })
    }
}

fn main() -> pga::Result<()> {
    let src = LeastSquares::new(Domain::Source(0), |x| 2.0 * x[0] + 0.5);
    let tgt = LeastSquares::new(Domain::Target, |x| 2.0 * x[0] - x[1] - 0.5);
    let layout = Arc::new(ParamLayout::new(2, vec![1], 1));
    let objectives = Objectives::new(vec![&src], &tgt)?;
    let cfg = PgaConfig {
        eta0: 0.5,
        total_iters: 300,
        ..PgaConfig::default()
    };

    let mut p = ParamVector::zeros(Arc::clone(&layout));
    let mut trace = TrainTrace::new(1);
    for t in 0..cfg.total_iters {
        let (next, report) = pga_step(&p, &objectives, &StepBatches::full(1), &cfg, t)?;
        if t % 50 == 0 {
            println!(
                "t={t:<3} src={:.4} tgt={:.4} cos={:+.3}",
                report.source_losses[0], report.target_loss, report.cos_sims[0]
            );
        }
        trace.push(&report);
        p = next;
    }
    println!("shared w = {:?}", p.slice(BlockId::Shared)?);
    println!("b_S = {:.4}, b_T = {:.4}", p.slice(BlockId::Source(0))?[0], p.slice(BlockId::Target)?[0]);
    println!("bound proxy = {:.4}", trace.bound_cumulative());
    Ok(())
}
