//! ERM and gradient-aligned (PGA) updates over a partitioned parameter
//! vector with `N` source objectives and one target objective.
//!
//! A PGA step evaluates every objective twice: once at the current point
//! and once at a point shifted so that, to first order, the objective also
//! rewards agreement with the other domains' shared gradients (alignment)
//! and penalizes its own gradient norm (norm ascent). The shifted gradients
//! drive the update. With both strengths at zero the shifted point is the
//! current point and the step reduces exactly to ERM.

use crate::diagnostics::{bound_increment, TrainTrace};
use crate::error::{Error, Result};
use crate::objective::{Batch, DomainObjective, Evaluation};
use crate::param::{BlockId, Domain, GradSlices, ParamLayout, ParamVector};
use crate::vector::{all_finite, axpy, dot, norm, norm_sq};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Schedule {
    Constant,
    Cosine,
}

impl std::str::FromStr for Schedule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "constant" => Ok(Schedule::Constant),
            "cosine" => Ok(Schedule::Cosine),
            other => Err(Error::InvalidConfig(format!("unknown schedule {other:?}"))),
        }
    }
}

impl std::fmt::Display for Schedule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Schedule::Constant => "constant",
            Schedule::Cosine => "cosine",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PgaConfig {
    /// Alignment strength.
    pub rho_ga: f64,
    /// Gradient-norm penalty radius.
    pub rho_gn: f64,
    /// Weight on the summed source shared-gradients.
    pub lambda: f64,
    pub eta0: f64,
    pub total_iters: usize,
    /// Pseudo-label confidence threshold.
    pub tau: f64,
    pub eps_guard: f64,
    pub schedule: Schedule,
}

impl Default for PgaConfig {
    fn default() -> Self {
        Self {
            rho_ga: 0.5,
            rho_gn: 0.01,
            lambda: 1.0,
            eta0: 0.1,
            total_iters: 2000,
            tau: 0.4,
            eps_guard: 1e-12,
            schedule: Schedule::Cosine,
        }
    }
}

impl PgaConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !(self.rho_ga >= 0.0 && self.rho_ga.is_finite()) {
            return bad(format!("rho_ga must be >= 0, got {}", self.rho_ga));
        }
        if !(self.rho_gn >= 0.0 && self.rho_gn.is_finite()) {
            return bad(format!("rho_gn must be >= 0, got {}", self.rho_gn));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return bad(format!("lambda must be >= 0, got {}", self.lambda));
        }
        if !(self.eta0 > 0.0 && self.eta0.is_finite()) {
            return bad(format!("eta0 must be > 0, got {}", self.eta0));
        }
        if self.total_iters == 0 {
            return bad("total_iters must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.tau) {
            return bad(format!("tau must lie in [0, 1], got {}", self.tau));
        }
        if !(self.eps_guard > 0.0 && self.eps_guard <= 1e-8) {
            return bad(format!(
                "eps_guard must lie in (0, 1e-8], got {}",
                self.eps_guard
            ));
        }
        Ok(())
    }
}

/// The three training arms compared in the experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Erm,
    AlignOnly,
    Pga,
}

impl Method {
    /// Forces the strengths this arm does not use to zero.
    pub fn configure(self, cfg: &PgaConfig) -> PgaConfig {
        let mut cfg = cfg.clone();
        match self {
            Method::Erm => {
                cfg.rho_ga = 0.0;
                cfg.rho_gn = 0.0;
            }
            Method::AlignOnly => cfg.rho_gn = 0.0,
            Method::Pga => {}
        }
        cfg
    }

    pub fn name(self) -> &'static str {
        match self {
            Method::Erm => "erm",
            Method::AlignOnly => "align_only",
            Method::Pga => "pga",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "erm" => Ok(Method::Erm),
            "align_only" => Ok(Method::AlignOnly),
            "pga" => Ok(Method::Pga),
            other => Err(Error::InvalidConfig(format!("unknown method {other:?}"))),
        }
    }
}

/// Learning rate at iteration `t` (0-based).
pub fn lr_at(cfg: &PgaConfig, t: usize) -> Result<f64> {
    if t >= cfg.total_iters {
        return Err(Error::IterationOutOfRange {
            t,
            total: cfg.total_iters,
        });
    }
    Ok(match cfg.schedule {
        Schedule::Constant => cfg.eta0,
        Schedule::Cosine => {
            let phase = std::f64::consts::PI * t as f64 / cfg.total_iters as f64;
            cfg.eta0 * 0.5 * (1.0 + phase.cos())
        }
    })
}

/// One objective per source domain (in index order) plus the target.
pub struct Objectives<'a> {
    sources: Vec<&'a dyn DomainObjective>,
    target: &'a dyn DomainObjective,
}

impl<'a> Objectives<'a> {
    pub fn new(sources: Vec<&'a dyn DomainObjective>, target: &'a dyn DomainObjective) -> Result<Self> {
        for (i, s) in sources.iter().enumerate() {
            if s.domain() != Domain::Source(i) {
                return Err(Error::LayoutMismatch(format!(
                    "objective #{i} is bound to {}, expected source {i}",
                    s.domain()
                )));
            }
        }
        if target.domain() != Domain::Target {
            return Err(Error::LayoutMismatch(format!(
                "target objective is bound to {}",
                target.domain()
            )));
        }
        Ok(Self { sources, target })
    }

    pub fn num_sources(&self) -> usize {
        self.sources.len()
    }

    pub fn source(&self, i: usize) -> &'a dyn DomainObjective {
        self.sources[i]
    }

    pub fn target(&self) -> &'a dyn DomainObjective {
        self.target
    }

    fn check(&self, layout: &ParamLayout) -> Result<()> {
        if layout.num_sources() != self.sources.len() {
            return Err(Error::LayoutMismatch(format!(
                "{} source objective(s) for a layout with {} source block(s)",
                self.sources.len(),
                layout.num_sources()
            )));
        }
        Ok(())
    }
}

/// The batch each objective sees during one step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepBatches {
    pub sources: Vec<Batch>,
    pub target: Batch,
}

impl StepBatches {
    pub fn full(num_sources: usize) -> Self {
        Self {
            sources: vec![Batch::Full; num_sources],
            target: Batch::Full,
        }
    }

    fn check(&self, n: usize) -> Result<()> {
        if self.sources.len() != n {
            return Err(Error::LengthMismatch {
                context: "source batches",
                expected: n,
                actual: self.sources.len(),
            });
        }
        Ok(())
    }
}

/// Losses and gradients of every objective at the unperturbed point.
#[derive(Debug, Clone)]
pub struct BaseGradients {
    pub sources: Vec<Evaluation>,
    pub target: Evaluation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepReport {
    pub eta: f64,
    pub source_losses: Vec<f64>,
    pub target_loss: f64,
    /// cos(g_sh,i, g_sh,T) per source.
    pub cos_sims: Vec<f64>,
    /// ⟨g_sh,i, g_sh,T⟩ per source.
    pub shared_dots: Vec<f64>,
    pub source_shared_norms: Vec<f64>,
    pub source_specific_norms: Vec<f64>,
    pub target_shared_norm: f64,
    pub target_specific_norm: f64,
    pub bound_increment: f64,
}

fn evaluate_checked(
    objective: &dyn DomainObjective,
    params: &ParamVector,
    batch: &Batch,
) -> Result<Evaluation> {
    let eval = objective.evaluate(params, batch)?;
    eval.grad.check_layout(params.layout())?;
    if !eval.grad.is_finite() {
        return Err(Error::NonFiniteGradient {
            domain: objective.domain(),
        });
    }
    Ok(eval)
}

/// Algorithm order: target first, then each source.
pub fn base_gradients(
    p: &ParamVector,
    objectives: &Objectives<'_>,
    batches: &StepBatches,
) -> Result<BaseGradients> {
    objectives.check(p.layout())?;
    batches.check(objectives.num_sources())?;
    let target = evaluate_checked(objectives.target, p, &batches.target)?;
    let sources = objectives
        .sources
        .iter()
        .zip(&batches.sources)
        .map(|(obj, batch)| evaluate_checked(*obj, p, batch))
        .collect::<Result<Vec<_>>>()?;
    Ok(BaseGradients { sources, target })
}

/// `rho_ga · g_num / max(‖g_num‖·‖g_self‖, eps_guard)`
pub fn align_vector(g_num: &[f64], g_self: &[f64], rho_ga: f64, eps_guard: f64) -> Vec<f64> {
    debug_assert_eq!(g_num.len(), g_self.len());
    let denom = (norm(g_num) * norm(g_self)).max(eps_guard);
    g_num.iter().map(|g| rho_ga * g / denom).collect()
}

/// `rho_gn · g / max(‖g‖, eps_guard)`
pub fn norm_ascent(g: &[f64], rho_gn: f64, eps_guard: f64) -> Vec<f64> {
    let denom = norm(g).max(eps_guard);
    g.iter().map(|x| rho_gn * (x / denom)).collect()
}

/// Cosine similarity clamped to [−1, 1], guarded against zero norms.
pub fn cos_sim(u: &[f64], v: &[f64], eps_guard: f64) -> f64 {
    debug_assert_eq!(u.len(), v.len());
    let c = dot(u, v) / (norm(u) * norm(v)).max(eps_guard);
    c.clamp(-1.0, 1.0)
}

/// Largest allowed norm for a whole-point shift at `p`.
pub fn perturbation_cap(cfg: &PgaConfig, p: &ParamVector) -> f64 {
    10.0 * cfg.rho_ga.max(cfg.rho_gn) * (1.0 + norm(p.values()))
}

/// Gradient of `objective` at `p` with its shared and own specific block
/// shifted. The combined shift is rescaled to `perturbation_cap` if larger.
fn shifted_gradient(
    p: &ParamVector,
    objective: &dyn DomainObjective,
    batch: &Batch,
    mut shared_shift: Vec<f64>,
    mut specific_shift: Vec<f64>,
    cfg: &PgaConfig,
) -> Result<GradSlices> {
    let domain = objective.domain();
    let size = (norm_sq(&shared_shift) + norm_sq(&specific_shift)).sqrt();
    if size == 0.0 {
        // Identical evaluation point; keeps the ERM reduction bit-exact.
        let eval = objective.evaluate(p, batch)?;
        return finish_shifted(eval, domain, p.layout());
    }
    let cap = perturbation_cap(cfg, p);
    if size > cap {
        let s = cap / size;
        shared_shift.iter_mut().for_each(|v| *v *= s);
        specific_shift.iter_mut().for_each(|v| *v *= s);
    }
    let shifted = p
        .block_perturb(BlockId::Shared, &shared_shift)?
        .block_perturb(domain.block(), &specific_shift)?;
    let eval = objective.evaluate(&shifted, batch)?;
    finish_shifted(eval, domain, p.layout())
}

fn finish_shifted(eval: Evaluation, domain: Domain, layout: &ParamLayout) -> Result<GradSlices> {
    eval.grad.check_layout(layout)?;
    if !eval.loss.is_finite() || !eval.grad.is_finite() {
        return Err(Error::ShiftedEvaluation { domain });
    }
    Ok(eval.grad)
}

/// Target gradient at `P_sh − Σᵢ a_i + ρ_gn·ĝ_sh,T`, `P_T + ρ_gn·ĝ_T` where
/// `a_i = align_vector(g_sh,i, g_sh,T)`.
pub fn pga_target_gradient(
    p: &ParamVector,
    objectives: &Objectives<'_>,
    batches: &StepBatches,
    base: &BaseGradients,
    cfg: &PgaConfig,
) -> Result<GradSlices> {
    let g_sh_t = &base.target.grad.shared;
    let mut shared_shift = norm_ascent(g_sh_t, cfg.rho_gn, cfg.eps_guard);
    for src in &base.sources {
        let a = align_vector(&src.grad.shared, g_sh_t, cfg.rho_ga, cfg.eps_guard);
        axpy(&mut shared_shift, -1.0, &a);
    }
    let specific_shift = norm_ascent(&base.target.grad.specific, cfg.rho_gn, cfg.eps_guard);
    shifted_gradient(
        p,
        objectives.target,
        &batches.target,
        shared_shift,
        specific_shift,
        cfg,
    )
}

/// Source-`i` gradient at `P_sh − b_i + ρ_gn·ĝ_sh,i`, `P_S,i + ρ_gn·ĝ_S,i`
/// where `b_i = align_vector(g_sh,T, g_sh,i)`.
pub fn pga_source_gradient(
    p: &ParamVector,
    objectives: &Objectives<'_>,
    batches: &StepBatches,
    base: &BaseGradients,
    i: usize,
    cfg: &PgaConfig,
) -> Result<GradSlices> {
    let src = base.sources.get(i).ok_or(Error::UnknownBlock {
        block: BlockId::Source(i),
        sources: base.sources.len(),
    })?;
    let g_sh_i = &src.grad.shared;
    let mut shared_shift = norm_ascent(g_sh_i, cfg.rho_gn, cfg.eps_guard);
    let b = align_vector(&base.target.grad.shared, g_sh_i, cfg.rho_ga, cfg.eps_guard);
    axpy(&mut shared_shift, -1.0, &b);
    let specific_shift = norm_ascent(&src.grad.specific, cfg.rho_gn, cfg.eps_guard);
    shifted_gradient(
        p,
        objectives.sources[i],
        &batches.sources[i],
        shared_shift,
        specific_shift,
        cfg,
    )
}

/// `P ← P − η·[g_T,sh + λ Σ g_i,sh, {g_i,spec}, g_T,spec]`
fn apply_update(
    p: &ParamVector,
    target: &GradSlices,
    sources: &[&GradSlices],
    lambda: f64,
    eta: f64,
) -> Result<ParamVector> {
    let layout = p.layout();
    let mut shared = target.shared.clone();
    for g in sources {
        axpy(&mut shared, lambda, &g.shared);
    }
    let mut values = p.values().to_vec();
    let sh = layout.range(BlockId::Shared)?;
    for (v, g) in values[sh].iter_mut().zip(&shared) {
        *v -= eta * g;
    }
    for g in sources.iter().copied().chain(std::iter::once(target)) {
        let range = layout.range(g.owner.block())?;
        for (v, gi) in values[range].iter_mut().zip(&g.specific) {
            *v -= eta * gi;
        }
    }
    if !all_finite(&values) {
        return Err(Error::NonFiniteGradient {
            domain: target.owner,
        });
    }
    Ok(ParamVector::from_parts_unchecked(
        std::sync::Arc::clone(p.layout_arc()),
        values,
    ))
}

fn step_report(base: &BaseGradients, eta: f64, eps_guard: f64) -> StepReport {
    let g_sh_t = &base.target.grad.shared;
    let mut report = StepReport {
        eta,
        source_losses: base.sources.iter().map(|e| e.loss).collect(),
        target_loss: base.target.loss,
        cos_sims: Vec::with_capacity(base.sources.len()),
        shared_dots: Vec::with_capacity(base.sources.len()),
        source_shared_norms: Vec::with_capacity(base.sources.len()),
        source_specific_norms: Vec::with_capacity(base.sources.len()),
        target_shared_norm: norm(g_sh_t),
        target_specific_norm: norm(&base.target.grad.specific),
        bound_increment: 0.0,
    };
    for src in &base.sources {
        report
            .cos_sims
            .push(cos_sim(&src.grad.shared, g_sh_t, eps_guard));
        report.shared_dots.push(dot(&src.grad.shared, g_sh_t));
        report.source_shared_norms.push(norm(&src.grad.shared));
        report.source_specific_norms.push(norm(&src.grad.specific));
    }
    report.bound_increment = bound_increment(&report, eta).increment;
    report
}

/// Plain scalarized gradient step at the unperturbed point.
pub fn erm_step(
    p: &ParamVector,
    objectives: &Objectives<'_>,
    batches: &StepBatches,
    cfg: &PgaConfig,
    t: usize,
) -> Result<(ParamVector, StepReport)> {
    let eta = lr_at(cfg, t)?;
    let base = base_gradients(p, objectives, batches)?;
    let sources: Vec<&GradSlices> = base.sources.iter().map(|e| &e.grad).collect();
    let next = apply_update(p, &base.target.grad, &sources, cfg.lambda, eta)?;
    Ok((next, step_report(&base, eta, cfg.eps_guard)))
}

/// One PGA iteration: base gradients, shifted target and source gradients,
/// λ-combined shared update. Issues exactly `2(N+1)` objective evaluations.
pub fn pga_step(
    p: &ParamVector,
    objectives: &Objectives<'_>,
    batches: &StepBatches,
    cfg: &PgaConfig,
    t: usize,
) -> Result<(ParamVector, StepReport)> {
    let eta = lr_at(cfg, t)?;
    let base = base_gradients(p, objectives, batches)?;
    let target = pga_target_gradient(p, objectives, batches, &base, cfg)?;
    let sources = (0..objectives.num_sources())
        .map(|i| pga_source_gradient(p, objectives, batches, &base, i, cfg))
        .collect::<Result<Vec<_>>>()?;
    let refs: Vec<&GradSlices> = sources.iter().collect();
    let next = apply_update(p, &target, &refs, cfg.lambda, eta)?;
    Ok((next, step_report(&base, eta, cfg.eps_guard)))
}

/// Which update rule a training loop applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepRule {
    Erm,
    Pga,
}

/// Runs `cfg.total_iters` steps. `batches(t)` supplies the batches for
/// step `t`; `project` is applied to every updated point (identity for
/// unconstrained problems).
pub fn train<B, P>(
    init: ParamVector,
    objectives: &Objectives<'_>,
    cfg: &PgaConfig,
    rule: StepRule,
    mut batches: B,
    mut project: P,
) -> Result<(ParamVector, TrainTrace)>
where
    B: FnMut(usize) -> StepBatches,
    P: FnMut(ParamVector) -> ParamVector,
{
    cfg.validate()?;
    let mut p = init;
    let mut trace = TrainTrace::new(objectives.num_sources());
    for t in 0..cfg.total_iters {
        let b = batches(t);
        let (next, report) = match rule {
            StepRule::Erm => erm_step(&p, objectives, &b, cfg, t)?,
            StepRule::Pga => pga_step(&p, objectives, &b, cfg, t)?,
        };
        trace.push(&report);
        p = project(next);
    }
    Ok((p, trace))
}
