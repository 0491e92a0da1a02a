#![allow(dead_code)]

use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;

use pga::optimizer::{align_vector, cos_sim};
use pga::testbeds::classifier::{pseudo_label, train_anchor, CrossEntropyObjective, SharedSpecificClassifier};
use pga::testbeds::spurious::{sample_spurious, LabeledSet};
use pga::{Batch, BlockId, DomainObjective, ParamLayout, ParamVector};

pub struct CeFixture {
    pub model: SharedSpecificClassifier,
    pub layout: Arc<ParamLayout>,
    pub source: CrossEntropyObjective,
    pub target: CrossEntropyObjective,
    pub target_data: LabeledSet,
}

/// One source at p = 0.9, one target at p = 0.1, anchor-labeled target.
pub fn ce_fixture(rng: &mut impl Rng, noise_dim: usize, n: usize) -> CeFixture {
    let src = sample_spurious(0.9, 3.0, noise_dim, n, rng);
    let tgt = sample_spurious(0.1, 3.0, noise_dim, n, rng);
    let model = SharedSpecificClassifier::new(2, noise_dim + 2, 1);
    let anchor = train_anchor(&src, 2, 100, 0.1).unwrap();
    let pseudo = pseudo_label(&anchor, &tgt.unlabeled(), 0.4).unwrap();
    CeFixture {
        layout: Arc::new(model.layout()),
        source: CrossEntropyObjective::source(model.clone(), 0, &src),
        target: CrossEntropyObjective::target(model.clone(), Arc::new(tgt.features.clone()), &pseudo).unwrap(),
        model,
        target_data: tgt,
    }
}

pub fn random_params(layout: &Arc<ParamLayout>, rng: &mut impl Rng, scale: f64) -> ParamVector {
    let values = (0..layout.total_dim())
        .map(|_| scale * rng.sample::<f64, _>(StandardNormal))
        .collect();
    ParamVector::new(Arc::clone(layout), values).unwrap()
}

/// `cos_sim(g_sh,S, g_sh,T)` and, for each rho, the quotient
/// `[L_T(P) − L_T(P_sh − rho·a, P_T)] / rho` with `a` the unit-strength
/// alignment vector.
pub fn taylor_quotients(
    source: &dyn DomainObjective,
    target: &dyn DomainObjective,
    p: &ParamVector,
    rhos: &[f64],
) -> (f64, Vec<f64>) {
    let gs = source.evaluate(p, &Batch::Full).unwrap();
    let gt = target.evaluate(p, &Batch::Full).unwrap();
    let a = align_vector(&gs.grad.shared, &gt.grad.shared, 1.0, 1e-12);
    let cos = cos_sim(&gs.grad.shared, &gt.grad.shared, 1e-12);
    let quotients = rhos
        .iter()
        .map(|&rho| {
            let delta: Vec<f64> = a.iter().map(|v| -rho * v).collect();
            let moved = p.block_perturb(BlockId::Shared, &delta).unwrap();
            let lt = target.evaluate(&moved, &Batch::Full).unwrap().loss;
            (gt.loss - lt) / rho
        })
        .collect();
    (cos, quotients)
}

/// Random layout with up to `max_sources` sources and block sizes below
/// `max_dim`; specific blocks may be empty.
pub fn random_layout(rng: &mut impl Rng, max_sources: usize, max_dim: usize) -> ParamLayout {
    let n = rng.gen_range(1..=max_sources);
    ParamLayout::new(
        rng.gen_range(1..max_dim),
        (0..n).map(|_| rng.gen_range(0..max_dim)).collect(),
        rng.gen_range(0..max_dim),
    )
}
