//! Finite-difference check of every shipped analytic gradient.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::objective::{check_gradient, Batch, FullSpace, ObjectiveFn, Quadratic};
use crate::testbeds::classifier::{
    pseudo_label, train_anchor, CrossEntropyObjective, SharedSpecificClassifier,
};
use crate::testbeds::spurious::{gen_spurious, SpuriousConfig};
use crate::testbeds::zdt::{Zdt1F1, Zdt1F2};

pub const REL_TOL: f64 = 1e-5;
pub const ABS_TOL: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckSummary {
    pub name: &'static str,
    pub points: usize,
    pub passed: usize,
    pub worst_abs_error: f64,
    pub worst_rel_error: f64,
}

impl GradCheckSummary {
    pub fn ok(&self) -> bool {
        self.passed == self.points
    }
}

fn check_many(
    name: &'static str,
    obj: &dyn ObjectiveFn,
    points: usize,
    mut sample: impl FnMut() -> Vec<f64>,
) -> Result<GradCheckSummary> {
    let mut summary = GradCheckSummary {
        name,
        points,
        passed: 0,
        worst_abs_error: 0.0,
        worst_rel_error: 0.0,
    };
    for _ in 0..points {
        let x = sample();
        let r = check_gradient(obj, &x, REL_TOL, ABS_TOL)?;
        summary.passed += usize::from(r.passed);
        if r.max_abs_error > summary.worst_abs_error {
            summary.worst_abs_error = r.max_abs_error;
            summary.worst_rel_error = r.worst_rel_error;
        }
    }
    Ok(summary)
}

/// Checks the quadratic, both cross-entropy objectives and both ZDT-1
/// objectives at `points` random points each.
pub fn run_suite(seed: u64, points: usize) -> Result<Vec<GradCheckSummary>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();

    let dim = 6;
    let quad = Quadratic {
        center: (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        curvature: (0..dim).map(|_| rng.gen_range(0.1..5.0)).collect(),
    };
    let mut r = ChaCha8Rng::seed_from_u64(seed ^ 1);
    out.push(check_many("quadratic", &quad, points, || {
        (0..dim).map(|_| r.gen_range(-3.0..3.0)).collect()
    })?);

    // A small instance of the spurious task keeps the coordinate count low.
    let data = gen_spurious(&SpuriousConfig {
        noise_dim: 8,
        n_samples: 64,
        seed,
        ..SpuriousConfig::default()
    })?;
    let model = SharedSpecificClassifier::new(2, data.features.dim(), 1);
    let layout = Arc::new(model.layout());
    let total = layout.total_dim();
    let random_params = |r: &mut ChaCha8Rng| -> Vec<f64> {
        (0..total).map(|_| r.gen_range(-0.5..0.5)).collect()
    };

    let source = CrossEntropyObjective::source(model.clone(), 0, &data);
    let batch = Batch::Indices((0..64).step_by(2).collect());
    let f = FullSpace::new(&source, Arc::clone(&layout), batch);
    let mut r = ChaCha8Rng::seed_from_u64(seed ^ 2);
    out.push(check_many("ce_source", &f, points, || random_params(&mut r))?);

    let anchor = train_anchor(&data, 2, 10, 0.1)?;
    let pseudo = pseudo_label(&anchor, &data.unlabeled(), 0.6)?;
    let target = CrossEntropyObjective::target(model, Arc::new(data.features.clone()), &pseudo)?;
    let f = FullSpace::new(&target, Arc::clone(&layout), Batch::Full);
    let mut r = ChaCha8Rng::seed_from_u64(seed ^ 3);
    out.push(check_many("ce_target", &f, points, || random_params(&mut r))?);

    let interior = |r: &mut ChaCha8Rng| -> Vec<f64> { (0..30).map(|_| r.gen_range(0.01..0.99)).collect() };
    let mut r = ChaCha8Rng::seed_from_u64(seed ^ 4);
    out.push(check_many("zdt1_f1", &Zdt1F1, points, || interior(&mut r))?);
    let mut r = ChaCha8Rng::seed_from_u64(seed ^ 5);
    out.push(check_many("zdt1_f2", &Zdt1F2, points, || interior(&mut r))?);

    Ok(out)
}
