//! The two experiment families: the spurious-correlation adaptation task
//! and the ZDT-1 benchmark, plus end-to-end drivers for one seed of each.

pub mod classifier;
pub mod spurious;
pub mod zdt;

use std::sync::Arc;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::diagnostics::{zdt1_convergence, TrainTrace};
use crate::error::{Error, Result};
use crate::objective::{Batch, DomainObjective, ObjectiveFn};
use crate::optimizer::{
    erm_step, pga_step, train, Method, Objectives, PgaConfig, StepBatches, StepRule,
};
use crate::param::ParamVector;

use classifier::{
    accuracy, pseudo_label, train_anchor, CrossEntropyObjective, Predictor,
    SharedSpecificClassifier,
};
use spurious::{sample_spurious, LabeledSet};
use zdt::{project_box, random_point, zdt1_layout, Zdt1Domain, Zdt1F1, Zdt1F2};

/// `size` distinct row indices out of `n`, or the full set when `size >= n`.
pub fn sample_batch(rng: &mut impl Rng, n: usize, size: usize) -> Batch {
    if size >= n {
        Batch::Full
    } else {
        Batch::Indices(index::sample(rng, n, size).into_vec())
    }
}

/// Settings for the spurious-correlation experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct SpuriousExperiment {
    /// Environment correlation of each labeled source domain.
    pub p_src: Vec<f64>,
    /// Environment correlation of the unlabeled target and the test split.
    pub p_tgt: f64,
    pub c: f64,
    pub noise_dim: usize,
    pub n_samples: usize,
    pub batch_size: usize,
    pub anchor_warmup: usize,
    pub anchor_eta: f64,
    /// Recompute pseudo-labels from the current model every this many
    /// steps; 0 keeps the anchor's labels for the whole run.
    pub pseudo_refresh: usize,
}

impl Default for SpuriousExperiment {
    fn default() -> Self {
        Self {
            p_src: vec![0.9],
            p_tgt: 0.1,
            c: 3.0,
            noise_dim: 298,
            n_samples: 2000,
            batch_size: 256,
            anchor_warmup: 100,
            anchor_eta: 0.1,
            pseudo_refresh: 0,
        }
    }
}

impl SpuriousExperiment {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.p_src.is_empty() {
            return bad("at least one source domain is required".into());
        }
        for &p in self.p_src.iter().chain(std::iter::once(&self.p_tgt)) {
            if !(p > 0.0 && p < 1.0) {
                return bad(format!("environment correlation must lie in (0, 1), got {p}"));
            }
        }
        if !(self.c > 1.0 && self.c.is_finite()) {
            return bad(format!("C must exceed 1, got {}", self.c));
        }
        if self.noise_dim == 0 || self.n_samples == 0 || self.batch_size == 0 {
            return bad("noise_dim, n_samples and batch_size must be positive".into());
        }
        if self.anchor_warmup == 0 {
            return bad("anchor_warmup must be at least 1".into());
        }
        if !(self.anchor_eta > 0.0 && self.anchor_eta.is_finite()) {
            return bad(format!("anchor_eta must be positive, got {}", self.anchor_eta));
        }
        Ok(())
    }
}

/// All splits of one spurious-correlation run.
#[derive(Debug, Clone)]
pub struct SpuriousData {
    pub sources: Vec<LabeledSet>,
    /// Target split; labels are held out and used only for reporting.
    pub target: LabeledSet,
    /// Out-of-distribution test split (`p_tgt`).
    pub test: LabeledSet,
    /// In-distribution validation split (`p_src[0]`).
    pub validation: LabeledSet,
}

impl SpuriousData {
    /// Draws every split from `rng` in a fixed order.
    pub fn generate(exp: &SpuriousExperiment, rng: &mut impl Rng) -> Self {
        let draw = |p: f64, rng: &mut _| sample_spurious(p, exp.c, exp.noise_dim, exp.n_samples, rng);
        let sources = exp.p_src.iter().map(|&p| draw(p, rng)).collect();
        let target = draw(exp.p_tgt, rng);
        let test = draw(exp.p_tgt, rng);
        let validation = draw(exp.p_src[0], rng);
        Self {
            sources,
            target,
            test,
            validation,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SpuriousOutcome {
    pub params: ParamVector,
    pub trace: TrainTrace,
    pub in_dist_acc: f64,
    pub ood_acc: f64,
    /// Accuracy of the anchor's pseudo-labels on the target split.
    pub anchor_target_acc: f64,
    pub pseudo_included: usize,
}

/// Which step function drives a run.
fn step_rule(method: Method) -> StepRule {
    match method {
        Method::Erm => StepRule::Erm,
        Method::AlignOnly | Method::Pga => StepRule::Pga,
    }
}

/// One seed of the spurious-correlation experiment. The generator is used
/// for data first, then parameter initialization, then batches.
pub fn run_spurious(
    exp: &SpuriousExperiment,
    cfg: &PgaConfig,
    method: Method,
    seed: u64,
) -> Result<SpuriousOutcome> {
    run_spurious_with(exp, cfg, step_rule(method), method, seed)
}

/// As [`run_spurious`] but with an explicit step rule, so a zero-strength
/// PGA run can be compared against the ERM step on identical batches.
pub fn run_spurious_with(
    exp: &SpuriousExperiment,
    cfg: &PgaConfig,
    rule: StepRule,
    method: Method,
    seed: u64,
) -> Result<SpuriousOutcome> {
    exp.validate()?;
    let cfg = method.configure(cfg);
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = SpuriousData::generate(exp, &mut rng);
    let num_sources = data.sources.len();
    let dim = exp.noise_dim + 2;
    let model = SharedSpecificClassifier::new(2, dim, num_sources);

    let anchor = train_anchor(&data.sources[0], 2, exp.anchor_warmup, exp.anchor_eta)?;
    let target_features = Arc::new(data.target.features.clone());
    let pseudo = pseudo_label(&anchor, &data.target.unlabeled(), cfg.tau)?;
    let anchor_target_acc = pseudo
        .entries
        .iter()
        .zip(&data.target.labels)
        .filter(|(e, &y)| e.label == y)
        .count() as f64
        / data.target.len() as f64;
    let pseudo_included = pseudo.included();

    let sources: Vec<CrossEntropyObjective> = data
        .sources
        .iter()
        .enumerate()
        .map(|(i, d)| CrossEntropyObjective::source(model.clone(), i, d))
        .collect();
    let mut target = CrossEntropyObjective::target(model.clone(), Arc::clone(&target_features), &pseudo)?;

    let mut p = model.init_params(&mut rng);
    let mut trace = TrainTrace::new(num_sources);
    for t in 0..cfg.total_iters {
        if exp.pseudo_refresh > 0 && t > 0 && t % exp.pseudo_refresh == 0 {
            let current = model.averaged(&p)?;
            let refreshed = pseudo_label(&current, &data.target.unlabeled(), cfg.tau)?;
            target = CrossEntropyObjective::target(model.clone(), Arc::clone(&target_features), &refreshed)?;
        }
        let batches = StepBatches {
            sources: data
                .sources
                .iter()
                .map(|d| sample_batch(&mut rng, d.len(), exp.batch_size))
                .collect(),
            target: sample_batch(&mut rng, data.target.len(), exp.batch_size),
        };
        let refs: Vec<&dyn DomainObjective> =
            sources.iter().map(|s| s as &dyn DomainObjective).collect();
        let objectives = Objectives::new(refs, &target)?;
        let (next, report) = match rule {
            StepRule::Erm => erm_step(&p, &objectives, &batches, &cfg, t)?,
            StepRule::Pga => pga_step(&p, &objectives, &batches, &cfg, t)?,
        };
        trace.push(&report);
        p = next;
    }

    let predictor = model.averaged(&p)?;
    Ok(SpuriousOutcome {
        in_dist_acc: accuracy(&predictor as &dyn Predictor, &data.validation),
        ood_acc: accuracy(&predictor as &dyn Predictor, &data.test),
        params: p,
        trace,
        anchor_target_acc,
        pseudo_included,
    })
}

#[derive(Debug, Clone)]
pub struct ZdtOutcome {
    pub x: ParamVector,
    pub f1: f64,
    pub f2: f64,
    pub convergence: f64,
    pub trace: TrainTrace,
}

/// One seed of ZDT-1: uniform start in the box, `f1` as the source and
/// `f2` as the target objective, projection after every update.
pub fn run_zdt1(cfg: &PgaConfig, method: Method, seed: u64) -> Result<ZdtOutcome> {
    let cfg = method.configure(cfg);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let init = random_point(&mut rng);
    let f1 = Zdt1Domain::f1_as_source();
    let f2 = Zdt1Domain::f2_as_target();
    let objectives = Objectives::new(vec![&f1], &f2)?;
    debug_assert_eq!(init.layout(), &zdt1_layout());
    let (x, trace) = train(
        init,
        &objectives,
        &cfg,
        step_rule(method),
        |_| StepBatches::full(1),
        project_box,
    )?;
    let point = x.values();
    Ok(ZdtOutcome {
        f1: Zdt1F1.value(point)?,
        f2: Zdt1F2.value(point)?,
        convergence: zdt1_convergence(point)?,
        x,
        trace,
    })
}
