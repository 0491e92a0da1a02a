//! ZDT-1: two objectives over `[0, 1]^30`.
//!
//! `f1(x) = x1`, `g(x) = 1 + 9/(n−1) Σ_{i≥2} x_i`, `f2 = g·(1 − √(f1/g))
//! = g − √(f1·g)`. The Pareto set is `x1 ∈ [0, 1]`, `x_i = 0` otherwise.

use std::sync::Arc;

use rand::Rng;

use crate::diagnostics::ZDT1_DIM;
use crate::error::{Error, Result};
use crate::objective::{Batch, DomainObjective, Evaluation, ObjectiveFn};
use crate::param::{BlockId, Domain, GradSlices, ParamLayout, ParamVector};

/// Lower bound for `x1` when the optimizer evaluates a shifted point: the
/// `f2` gradient has a `1/√x1` singularity at the boundary.
pub const X1_FLOOR: f64 = 1e-9;

fn check_point(x: &[f64]) -> Result<()> {
    if x.len() != ZDT1_DIM {
        return Err(Error::LengthMismatch {
            context: "ZDT-1 point",
            expected: ZDT1_DIM,
            actual: x.len(),
        });
    }
    if let Some((i, v)) = x.iter().enumerate().find(|(_, v)| !(0.0..=1.0).contains(*v)) {
        return Err(Error::OutOfDomain(format!("x[{i}] = {v} outside [0, 1]")));
    }
    Ok(())
}

fn g_of(x: &[f64]) -> f64 {
    1.0 + 9.0 / (ZDT1_DIM - 1) as f64 * x[1..].iter().sum::<f64>()
}

fn f1_grad() -> Vec<f64> {
    let mut g = vec![0.0; ZDT1_DIM];
    g[0] = 1.0;
    g
}

fn f2_value(x: &[f64]) -> f64 {
    let g = g_of(x);
    g - (x[0] * g).sqrt()
}

fn f2_grad(x: &[f64]) -> Vec<f64> {
    let g = g_of(x);
    let f1 = x[0];
    let dg = 9.0 / (ZDT1_DIM - 1) as f64;
    let root = (f1 * g).sqrt();
    // d/dx1 = −½√(g/f1); d/dxi = dg·(1 − ½√(f1/g))
    let mut grad = vec![dg * (1.0 - 0.5 * (f1 / g).sqrt()); ZDT1_DIM];
    grad[0] = -0.5 * g / root;
    grad
}

/// `f1`, defined on `[0, 1]^30` only.
#[derive(Debug, Clone, Copy, Default)]
pub struct Zdt1F1;

/// `f2`, defined on `[0, 1]^30` only.
#[derive(Debug, Clone, Copy, Default)]
pub struct Zdt1F2;

impl ObjectiveFn for Zdt1F1 {
    fn dim(&self) -> usize {
        ZDT1_DIM
    }
    fn value(&self, x: &[f64]) -> Result<f64> {
        check_point(x)?;
        Ok(x[0])
    }
    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_point(x)?;
        Ok(f1_grad())
    }
}

impl ObjectiveFn for Zdt1F2 {
    fn dim(&self) -> usize {
        ZDT1_DIM
    }
    fn value(&self, x: &[f64]) -> Result<f64> {
        check_point(x)?;
        Ok(f2_value(x))
    }
    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_point(x)?;
        if x[0] == 0.0 {
            return Err(Error::OutOfDomain(
                "f2 gradient is unbounded at x1 = 0".into(),
            ));
        }
        Ok(f2_grad(x))
    }
}

pub fn zdt1_objectives() -> (Zdt1F1, Zdt1F2) {
    (Zdt1F1, Zdt1F2)
}

/// Shared block of 30 coordinates, one empty source block, empty target.
pub fn zdt1_layout() -> ParamLayout {
    ParamLayout::new(ZDT1_DIM, vec![0], 0)
}

/// Projection onto the box, applied after every update.
pub fn project_box(p: ParamVector) -> ParamVector {
    p.map(|v| v.clamp(0.0, 1.0))
}

/// Uniform random point in the box.
pub fn random_point(rng: &mut impl Rng) -> ParamVector {
    let values = (0..ZDT1_DIM).map(|_| rng.gen::<f64>()).collect();
    ParamVector::from_parts_unchecked(Arc::new(zdt1_layout()), values)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZdtObjective {
    F1,
    F2,
}

/// One ZDT-1 objective bound to a domain for the optimizer (`f1` plays the
/// source, `f2` the target). Points outside the box, such as shifted PGA
/// evaluation points, are evaluated at their projection with `x1` floored
/// at [`X1_FLOOR`].
#[derive(Debug, Clone, Copy)]
pub struct Zdt1Domain {
    pub which: ZdtObjective,
    pub domain: Domain,
}

impl Zdt1Domain {
    pub fn f1_as_source() -> Self {
        Self {
            which: ZdtObjective::F1,
            domain: Domain::Source(0),
        }
    }

    pub fn f2_as_target() -> Self {
        Self {
            which: ZdtObjective::F2,
            domain: Domain::Target,
        }
    }
}

impl DomainObjective for Zdt1Domain {
    fn domain(&self) -> Domain {
        self.domain
    }

    fn evaluate(&self, params: &ParamVector, _batch: &Batch) -> Result<Evaluation> {
        let raw = params.slice(BlockId::Shared)?;
        if raw.len() != ZDT1_DIM {
            return Err(Error::LayoutMismatch(format!(
                "ZDT-1 needs a {ZDT1_DIM}-dim shared block, got {}",
                raw.len()
            )));
        }
        let mut x: Vec<f64> = raw.iter().map(|v| v.clamp(0.0, 1.0)).collect();
        x[0] = x[0].max(X1_FLOOR);
        let (loss, shared) = match self.which {
            ZdtObjective::F1 => (x[0], f1_grad()),
            ZdtObjective::F2 => (f2_value(&x), f2_grad(&x)),
        };
        let specific = vec![0.0; params.layout().block_dim(self.domain.block())?];
        Ok(Evaluation {
            loss,
            grad: GradSlices::new(self.domain, shared, specific),
        })
    }
}
