//! Training diagnostics: per-iteration trace, the gradient-dependent
//! generalization-bound proxy, the ZDT-1 convergence metric and the
//! rise/fall profile of the source/target gradient similarity.

use std::io::Write;

use crate::error::{Error, Result};
use crate::format::fmt_f64;
use crate::optimizer::StepReport;
use crate::vector::CompensatedSum;

/// One iteration's contribution to the bound proxy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundTerm {
    pub increment: f64,
}

/// `η² Σᵢ (‖g^src_i‖² + ‖g^tgt‖² + ‖g^src_i − g^tgt‖²)` evaluated through
/// the block decomposition `2‖g^src_i‖² + 2‖g^tgt‖² − 2⟨g_sh,i, g_sh,T⟩`,
/// which holds because the two embedded gradients only overlap on the
/// shared block.
pub fn bound_increment(report: &StepReport, eta: f64) -> BoundTerm {
    let tgt_sq = report.target_shared_norm.powi(2) + report.target_specific_norm.powi(2);
    let mut sum = 0.0;
    for i in 0..report.shared_dots.len() {
        let src_sq = report.source_shared_norms[i].powi(2) + report.source_specific_norms[i].powi(2);
        sum += 2.0 * src_sq + 2.0 * tgt_sq - 2.0 * report.shared_dots[i];
    }
    // The decomposition is a sum of squares; clip rounding below zero.
    BoundTerm {
        increment: (eta * eta * sum).max(0.0),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub iter: usize,
    pub eta: f64,
    pub source_losses: Vec<f64>,
    pub target_loss: f64,
    pub cos_sims: Vec<f64>,
    pub source_shared_norms: Vec<f64>,
    pub source_specific_norms: Vec<f64>,
    pub target_shared_norm: f64,
    pub target_specific_norm: f64,
    pub bound_increment: f64,
    pub bound_cumulative: f64,
}

/// Append-only record of a training run.
#[derive(Debug, Clone)]
pub struct TrainTrace {
    num_sources: usize,
    records: Vec<TraceRecord>,
    bound: CompensatedSum,
}

impl TrainTrace {
    pub fn new(num_sources: usize) -> Self {
        Self {
            num_sources,
            records: Vec::new(),
            bound: CompensatedSum::default(),
        }
    }

    pub fn num_sources(&self) -> usize {
        self.num_sources
    }

    pub fn records(&self) -> &[TraceRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn push(&mut self, report: &StepReport) {
        assert_eq!(
            report.cos_sims.len(),
            self.num_sources,
            "report source count does not match trace"
        );
        let inc = report.bound_increment.max(0.0);
        self.bound.add(inc);
        // Compensated sums can wobble by an ulp; keep the series monotone.
        let prev = self.records.last().map_or(0.0, |r| r.bound_cumulative);
        let cumulative = self.bound.value().max(prev);
        self.records.push(TraceRecord {
            iter: self.records.len(),
            eta: report.eta,
            source_losses: report.source_losses.clone(),
            target_loss: report.target_loss,
            cos_sims: report.cos_sims.clone(),
            source_shared_norms: report.source_shared_norms.clone(),
            source_specific_norms: report.source_specific_norms.clone(),
            target_shared_norm: report.target_shared_norm,
            target_specific_norm: report.target_specific_norm,
            bound_increment: inc,
            bound_cumulative: cumulative,
        });
    }

    pub fn bound_cumulative(&self) -> f64 {
        self.records.last().map_or(0.0, |r| r.bound_cumulative)
    }

    /// Mean source/target cosine similarity per iteration.
    pub fn mean_cos_series(&self) -> Vec<f64> {
        self.records
            .iter()
            .map(|r| {
                if r.cos_sims.is_empty() {
                    0.0
                } else {
                    r.cos_sims.iter().sum::<f64>() / r.cos_sims.len() as f64
                }
            })
            .collect()
    }

    pub fn csv_header(&self) -> String {
        let n = self.num_sources;
        let mut cols = vec!["iter".to_string(), "eta".to_string()];
        cols.extend((0..n).map(|i| format!("loss_src_{i}")));
        cols.push("loss_tgt".into());
        cols.extend((0..n).map(|i| format!("cos_{i}")));
        cols.extend((0..n).map(|i| format!("gnorm_sh_src_{i}")));
        cols.extend((0..n).map(|i| format!("gnorm_spec_src_{i}")));
        cols.extend(
            ["gnorm_sh_tgt", "gnorm_tgt", "bound_inc", "bound_cum"]
                .iter()
                .map(|s| s.to_string()),
        );
        cols.join(",")
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{}", self.csv_header())?;
        for r in &self.records {
            let mut row = vec![r.iter.to_string(), fmt_f64(r.eta)];
            row.extend(r.source_losses.iter().map(|v| fmt_f64(*v)));
            row.push(fmt_f64(r.target_loss));
            row.extend(r.cos_sims.iter().map(|v| fmt_f64(*v)));
            row.extend(r.source_shared_norms.iter().map(|v| fmt_f64(*v)));
            row.extend(r.source_specific_norms.iter().map(|v| fmt_f64(*v)));
            row.push(fmt_f64(r.target_shared_norm));
            row.push(fmt_f64(r.target_specific_norm));
            row.push(fmt_f64(r.bound_increment));
            row.push(fmt_f64(r.bound_cumulative));
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}

pub const ZDT1_DIM: usize = 30;

/// `g(x) − 1 = 9/(n−1) Σ_{i≥2} x_i`; zero exactly on the ZDT-1 Pareto set.
pub fn zdt1_convergence(x: &[f64]) -> Result<f64> {
    if x.len() != ZDT1_DIM {
        return Err(Error::LengthMismatch {
            context: "ZDT-1 point",
            expected: ZDT1_DIM,
            actual: x.len(),
        });
    }
    if let Some((i, v)) = x
        .iter()
        .enumerate()
        .find(|(_, v)| !(0.0..=1.0).contains(*v))
    {
        return Err(Error::OutOfDomain(format!("x[{i}] = {v} outside [0, 1]")));
    }
    let tail: f64 = x[1..].iter().sum();
    Ok(9.0 / (ZDT1_DIM - 1) as f64 * tail)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SimilarityProfile {
    pub rise: bool,
    pub fall: bool,
    pub peak_iter: usize,
}

/// Minimum trace length accepted by [`similarity_profile`].
pub const PROFILE_MIN_TRACE: usize = 10;

/// Window of the centered moving average: 5% of the length, at least 3.
pub fn smoothing_window(len: usize) -> usize {
    ((0.05 * len as f64).round() as usize).max(3)
}

/// Centered moving average; windows are truncated at both ends.
pub fn smooth(series: &[f64]) -> Vec<f64> {
    let n = series.len();
    let half = smoothing_window(n) / 2;
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0.0);
    for v in series {
        prefix.push(prefix.last().unwrap() + v);
    }
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(n);
            (prefix[hi] - prefix[lo]) / (hi - lo) as f64
        })
        .collect()
}

/// Rise/fall analysis of an arbitrary series (at least 3 points).
pub fn similarity_profile_series(series: &[f64]) -> Result<SimilarityProfile> {
    if series.len() < 3 {
        return Err(Error::TraceTooShort {
            len: series.len(),
            min: 3,
        });
    }
    let s = smooth(series);
    let mut peak_iter = 0;
    for (i, v) in s.iter().enumerate() {
        if *v > s[peak_iter] + 1e-12 * s[peak_iter].abs().max(1.0) {
            peak_iter = i;
        }
    }
    let peak = s[peak_iter];
    // Smoothing a constant series is not exact in floating point.
    let tol = 1e-12 * peak.abs().max(1.0);
    Ok(SimilarityProfile {
        rise: peak > s[0] + tol,
        fall: *s.last().unwrap() < peak - tol,
        peak_iter,
    })
}

/// Rise/fall analysis of the mean source/target cosine similarity.
pub fn similarity_profile(trace: &TrainTrace) -> Result<SimilarityProfile> {
    if trace.len() < PROFILE_MIN_TRACE {
        return Err(Error::TraceTooShort {
            len: trace.len(),
            min: PROFILE_MIN_TRACE,
        });
    }
    similarity_profile_series(&trace.mean_cos_series())
}

/// Peak of the smoothed mean cosine similarity.
pub fn smoothed_peak(trace: &TrainTrace) -> f64 {
    smooth(&trace.mean_cos_series())
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn fixture_report(eta: f64) -> StepReport {
        // g_sh,src = (1,0), g_S = (2), g_sh,tgt = (0,1), g_T = (3)
        StepReport {
            eta,
            source_losses: vec![0.0],
            target_loss: 0.0,
            cos_sims: vec![0.0],
            shared_dots: vec![0.0],
            source_shared_norms: vec![1.0],
            source_specific_norms: vec![2.0],
            target_shared_norm: 1.0,
            target_specific_norm: 3.0,
            bound_increment: 0.0,
        }
    }

    #[test]
    fn bound_increment_fixture() {
        let r = fixture_report(1.0);
        assert_eq!(bound_increment(&r, 1.0).increment, 30.0);
        assert_eq!(bound_increment(&r, 2.0).increment, 120.0);
    }

    #[test]
    fn bound_increment_zero_gradients() {
        let mut r = fixture_report(1.0);
        r.source_shared_norms = vec![0.0];
        r.source_specific_norms = vec![0.0];
        r.target_shared_norm = 0.0;
        r.target_specific_norm = 0.0;
        assert_eq!(bound_increment(&r, 0.3).increment, 0.0);
    }

    #[test]
    fn trace_accumulates_increments() {
        let mut trace = TrainTrace::new(1);
        for k in 0..5 {
            let mut r = fixture_report(1.0);
            r.bound_increment = k as f64;
            trace.push(&r);
        }
        assert_eq!(trace.bound_cumulative(), 10.0);
        let iters: Vec<usize> = trace.records().iter().map(|r| r.iter).collect();
        assert_eq!(iters, vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn csv_columns_in_contract_order() {
        let trace = TrainTrace::new(2);
        assert_eq!(
            trace.csv_header(),
            "iter,eta,loss_src_0,loss_src_1,loss_tgt,cos_0,cos_1,gnorm_sh_src_0,gnorm_sh_src_1,\
             gnorm_spec_src_0,gnorm_spec_src_1,gnorm_sh_tgt,gnorm_tgt,bound_inc,bound_cum"
        );
    }

    #[test]
    fn csv_row_matches_header_width() {
        let mut trace = TrainTrace::new(1);
        trace.push(&fixture_report(0.5));
        let mut buf = Vec::new();
        trace.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(
            lines[0].split(',').count(),
            lines[1].split(',').count()
        );
        assert!(lines[1].starts_with("0,5.0000000000000000e-1,"));
    }

    #[test]
    fn zdt1_convergence_examples() {
        let mut x = vec![0.0; 30];
        x[0] = 0.5;
        assert_eq!(zdt1_convergence(&x).unwrap(), 0.0);
        let ones = vec![1.0; 30];
        assert!((zdt1_convergence(&ones).unwrap() - 9.0).abs() < 1e-12);
        let mut y = vec![0.0; 30];
        y[0] = 1.0;
        y[1] = 0.29;
        assert!((zdt1_convergence(&y).unwrap() - 0.09).abs() < 1e-15);
    }

    #[test]
    fn zdt1_convergence_rejects_out_of_domain() {
        let mut x = vec![0.0; 30];
        x[3] = 1.5;
        assert!(matches!(zdt1_convergence(&x), Err(Error::OutOfDomain(_))));
        assert!(zdt1_convergence(&[0.0; 29]).is_err());
    }

    #[test]
    fn profile_constructed_peak() {
        let p = similarity_profile_series(&[0.0, 0.5, 1.0, 0.5, 0.0]).unwrap();
        assert_eq!(
            p,
            SimilarityProfile {
                rise: true,
                fall: true,
                peak_iter: 2
            }
        );
    }

    #[test]
    fn profile_constant_and_monotone() {
        let flat = similarity_profile_series(&[0.3; 40]).unwrap();
        assert!(!flat.rise && !flat.fall);
        assert_eq!(flat.peak_iter, 0);
        let up: Vec<f64> = (0..40).map(|i| (i as f64).sqrt()).collect();
        let p = similarity_profile_series(&up).unwrap();
        assert!(p.rise && !p.fall);
        assert_eq!(p.peak_iter, 39);
    }

    #[test]
    fn profile_needs_ten_records() {
        let mut trace = TrainTrace::new(1);
        for _ in 0..9 {
            trace.push(&fixture_report(1.0));
        }
        assert!(matches!(
            similarity_profile(&trace),
            Err(Error::TraceTooShort { len: 9, .. })
        ));
        trace.push(&fixture_report(1.0));
        assert!(similarity_profile(&trace).is_ok());
    }

    #[test]
    fn smoothing_window_floor() {
        assert_eq!(smoothing_window(10), 3);
        assert_eq!(smoothing_window(1000), 50);
    }
}
