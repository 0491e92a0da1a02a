//! Differentiable objectives and the finite-difference gradient oracle.
//!
//! Two views are used throughout the crate:
//!
//! * [`ObjectiveFn`] is a plain scalar function of a flat point with its
//!   analytic gradient. Gradient checks operate on this view.
//! * [`DomainObjective`] is a loss owned by one domain. It reads the shared
//!   block and its own specific block of a [`ParamVector`] and returns the
//!   gradient as [`GradSlices`]. The optimizer operates on this view.
//!
//! [`FullSpace`] adapts the second view to the first.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::param::{Domain, GradSlices, ParamLayout, ParamVector};

/// Default central-difference step for gradient checks.
pub const FD_STEP: f64 = 1e-5;

pub trait ObjectiveFn {
    fn dim(&self) -> usize;
    fn value(&self, point: &[f64]) -> Result<f64>;
    fn gradient(&self, point: &[f64]) -> Result<Vec<f64>>;
}

impl<T: ObjectiveFn + ?Sized> ObjectiveFn for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn value(&self, point: &[f64]) -> Result<f64> {
        (**self).value(point)
    }
    fn gradient(&self, point: &[f64]) -> Result<Vec<f64>> {
        (**self).gradient(point)
    }
}

/// Which rows of a data set an evaluation sees.
///
/// Within one optimizer step the base and the shifted evaluation of an
/// objective must use the same batch.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum Batch {
    #[default]
    Full,
    Indices(Vec<usize>),
}

#[derive(Debug, Clone)]
pub struct Evaluation {
    pub loss: f64,
    pub grad: GradSlices,
}

pub trait DomainObjective: Send + Sync {
    fn domain(&self) -> Domain;
    fn evaluate(&self, params: &ParamVector, batch: &Batch) -> Result<Evaluation>;
}

impl<T: DomainObjective + ?Sized> DomainObjective for &T {
    fn domain(&self) -> Domain {
        (**self).domain()
    }
    fn evaluate(&self, params: &ParamVector, batch: &Batch) -> Result<Evaluation> {
        (**self).evaluate(params, batch)
    }
}

impl<T: DomainObjective + ?Sized> DomainObjective for Box<T> {
    fn domain(&self) -> Domain {
        (**self).domain()
    }
    fn evaluate(&self, params: &ParamVector, batch: &Batch) -> Result<Evaluation> {
        (**self).evaluate(params, batch)
    }
}

/// Counts `evaluate` calls on the wrapped objective.
pub struct Counting<O> {
    inner: O,
    calls: AtomicUsize,
}

impl<O> Counting<O> {
    pub fn new(inner: O) -> Self {
        Self {
            inner,
            calls: AtomicUsize::new(0),
        }
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::Relaxed)
    }

    pub fn reset(&self) {
        self.calls.store(0, Ordering::Relaxed);
    }
}

impl<O: DomainObjective> DomainObjective for Counting<O> {
    fn domain(&self) -> Domain {
        self.inner.domain()
    }

    fn evaluate(&self, params: &ParamVector, batch: &Batch) -> Result<Evaluation> {
        self.calls.fetch_add(1, Ordering::Relaxed);
        self.inner.evaluate(params, batch)
    }
}

/// A domain objective seen as a function of the whole flat parameter vector
/// with a fixed batch. The gradient is the embedded full-space gradient.
pub struct FullSpace<'a> {
    objective: &'a dyn DomainObjective,
    layout: Arc<ParamLayout>,
    batch: Batch,
}

impl<'a> FullSpace<'a> {
    pub fn new(objective: &'a dyn DomainObjective, layout: Arc<ParamLayout>, batch: Batch) -> Self {
        Self {
            objective,
            layout,
            batch,
        }
    }

    fn params(&self, point: &[f64]) -> Result<ParamVector> {
        ParamVector::new(Arc::clone(&self.layout), point.to_vec())
    }
}

impl ObjectiveFn for FullSpace<'_> {
    fn dim(&self) -> usize {
        self.layout.total_dim()
    }

    fn value(&self, point: &[f64]) -> Result<f64> {
        Ok(self.objective.evaluate(&self.params(point)?, &self.batch)?.loss)
    }

    fn gradient(&self, point: &[f64]) -> Result<Vec<f64>> {
        let eval = self.objective.evaluate(&self.params(point)?, &self.batch)?;
        eval.grad.embed_full(&self.layout)
    }
}

/// `f(x) = ½ (x − c)ᵀ diag(h) (x − c)`.
#[derive(Debug, Clone)]
pub struct Quadratic {
    pub center: Vec<f64>,
    pub curvature: Vec<f64>,
}

impl Quadratic {
    pub fn isotropic(center: Vec<f64>) -> Self {
        let curvature = vec![1.0; center.len()];
        Self { center, curvature }
    }

    fn check(&self, point: &[f64]) -> Result<()> {
        if point.len() != self.center.len() {
            return Err(Error::LengthMismatch {
                context: "quadratic point",
                expected: self.center.len(),
                actual: point.len(),
            });
        }
        Ok(())
    }
}

impl ObjectiveFn for Quadratic {
    fn dim(&self) -> usize {
        self.center.len()
    }

    fn value(&self, point: &[f64]) -> Result<f64> {
        self.check(point)?;
        Ok(point
            .iter()
            .zip(&self.center)
            .zip(&self.curvature)
            .map(|((x, c), h)| 0.5 * h * (x - c) * (x - c))
            .sum())
    }

    fn gradient(&self, point: &[f64]) -> Result<Vec<f64>> {
        self.check(point)?;
        Ok(point
            .iter()
            .zip(&self.center)
            .zip(&self.curvature)
            .map(|((x, c), h)| h * (x - c))
            .collect())
    }
}

/// A [`Quadratic`] over the shared block plus the owner's specific block,
/// laid out in that order. Handy as a fixture for optimizer tests.
#[derive(Debug, Clone)]
pub struct QuadraticDomain {
    pub domain: Domain,
    pub quadratic: Quadratic,
}

impl QuadraticDomain {
    pub fn new(domain: Domain, quadratic: Quadratic) -> Self {
        Self { domain, quadratic }
    }
}

impl DomainObjective for QuadraticDomain {
    fn domain(&self) -> Domain {
        self.domain
    }

    fn evaluate(&self, params: &ParamVector, _batch: &Batch) -> Result<Evaluation> {
        let shared = params.slice(crate::param::BlockId::Shared)?;
        let specific = params.slice(self.domain.block())?;
        let point: Vec<f64> = shared.iter().chain(specific).copied().collect();
        let loss = self.quadratic.value(&point)?;
        let mut grad = self.quadratic.gradient(&point)?;
        let specific_grad = grad.split_off(shared.len());
        Ok(Evaluation {
            loss,
            grad: GradSlices::new(self.domain, grad, specific_grad),
        })
    }
}

/// Central differences `[f(x + h e_k) − f(x − h e_k)] / 2h` for every k.
pub fn fd_gradient<O: ObjectiveFn + ?Sized>(obj: &O, point: &[f64], step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "finite-difference step must be positive, got {step}"
        )));
    }
    let mut x = point.to_vec();
    let mut grad = Vec::with_capacity(point.len());
    for k in 0..point.len() {
        let orig = x[k];
        x[k] = orig + step;
        let plus = obj.value(&x)?;
        x[k] = orig - step;
        let minus = obj.value(&x)?;
        x[k] = orig;
        if !(plus.is_finite() && minus.is_finite()) {
            return Err(Error::NonFiniteValue { coordinate: k });
        }
        grad.push((plus - minus) / (2.0 * step));
    }
    Ok(grad)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub passed: bool,
    /// Coordinate with the largest `|analytic − fd|`, if any.
    pub worst_coordinate: Option<usize>,
    pub max_abs_error: f64,
    /// `max_abs_error` relative to `|fd|` at the worst coordinate.
    pub worst_rel_error: f64,
}

/// Passes iff `|analytic − fd| ≤ abs_tol + rel_tol·|fd|` on every coordinate.
pub fn check_gradient<O: ObjectiveFn + ?Sized>(
    obj: &O,
    point: &[f64],
    rel_tol: f64,
    abs_tol: f64,
) -> Result<GradCheckReport> {
    check_gradient_with_step(obj, point, rel_tol, abs_tol, FD_STEP)
}

pub fn check_gradient_with_step<O: ObjectiveFn + ?Sized>(
    obj: &O,
    point: &[f64],
    rel_tol: f64,
    abs_tol: f64,
    step: f64,
) -> Result<GradCheckReport> {
    if !(rel_tol > 0.0 && abs_tol > 0.0) {
        return Err(Error::InvalidConfig("tolerances must be positive".into()));
    }
    let analytic = obj.gradient(point)?;
    let numeric = fd_gradient(obj, point, step)?;
    if analytic.len() != numeric.len() {
        return Err(Error::LengthMismatch {
            context: "analytic vs finite-difference gradient",
            expected: numeric.len(),
            actual: analytic.len(),
        });
    }
    let mut report = GradCheckReport {
        passed: true,
        worst_coordinate: None,
        max_abs_error: 0.0,
        worst_rel_error: 0.0,
    };
    for (k, (a, n)) in analytic.iter().zip(&numeric).enumerate() {
        let err = (a - n).abs();
        if err.is_nan() || err > abs_tol + rel_tol * n.abs() {
            report.passed = false;
        }
        if report.worst_coordinate.is_none() || err > report.max_abs_error || err.is_nan() {
            report.worst_coordinate = Some(k);
            report.max_abs_error = err;
            report.worst_rel_error = err / n.abs().max(f64::MIN_POSITIVE);
        }
    }
    Ok(report)
}
