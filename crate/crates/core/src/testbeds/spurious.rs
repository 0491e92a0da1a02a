//! Binary classification data with one core feature and one spurious
//! environment feature whose correlation with the label is `p`.
//!
//! Each sample is `x = [C·e, y, ε]` with `y` uniform on {−1, +1},
//! `e = y` with probability `p` (else `−y`) and `ε ~ N(0, I)`.
//! Labels are stored as class ids, `−1 → 0` and `+1 → 1`.

use std::io::{BufRead, Write};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::format::fmt_f64;

#[derive(Debug, Clone, PartialEq)]
pub struct SpuriousConfig {
    pub p: f64,
    pub c: f64,
    pub noise_dim: usize,
    pub n_samples: usize,
    pub seed: u64,
}

impl Default for SpuriousConfig {
    fn default() -> Self {
        Self {
            p: 0.9,
            c: 3.0,
            noise_dim: 298,
            n_samples: 2000,
            seed: 0,
        }
    }
}

impl SpuriousConfig {
    pub fn feature_dim(&self) -> usize {
        self.noise_dim + 2
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p > 0.0 && self.p < 1.0) {
            return Err(Error::InvalidConfig(format!("p must lie in (0, 1), got {}", self.p)));
        }
        if !(self.c > 1.0 && self.c.is_finite()) {
            return Err(Error::InvalidConfig(format!("C must exceed 1, got {}", self.c)));
        }
        if self.noise_dim == 0 || self.n_samples == 0 {
            return Err(Error::InvalidConfig(
                "noise_dim and n_samples must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Row-major feature matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Features {
    dim: usize,
    data: Vec<f64>,
}

impl Features {
    pub fn new(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 || !data.len().is_multiple_of(dim) {
            return Err(Error::LengthMismatch {
                context: "feature matrix",
                expected: dim * (data.len() / dim.max(1)),
                actual: data.len(),
            });
        }
        if !data.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidConfig("features must be finite".into()));
        }
        Ok(Self { dim, data })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSet {
    pub features: Features,
    pub labels: Vec<usize>,
}

impl LabeledSet {
    pub fn new(features: Features, labels: Vec<usize>) -> Result<Self> {
        if features.len() != labels.len() {
            return Err(Error::LengthMismatch {
                context: "labels",
                expected: features.len(),
                actual: labels.len(),
            });
        }
        Ok(Self { features, labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Drops the labels.
    pub fn unlabeled(&self) -> UnlabeledSet {
        UnlabeledSet {
            features: self.features.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UnlabeledSet {
    pub features: Features,
}

/// Draws one split from `rng`; used when several splits share a generator.
pub fn sample_spurious(
    p: f64,
    c: f64,
    noise_dim: usize,
    n: usize,
    rng: &mut impl Rng,
) -> LabeledSet {
    let dim = noise_dim + 2;
    let mut data = Vec::with_capacity(n * dim);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let y: f64 = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let e = if rng.gen_bool(p) { y } else { -y };
        data.push(c * e);
        data.push(y);
        for _ in 0..noise_dim {
            data.push(rng.sample::<f64, _>(StandardNormal));
        }
        labels.push(usize::from(y > 0.0));
    }
    LabeledSet {
        features: Features { dim, data },
        labels,
    }
}

/// One split, reproducible from `cfg.seed`.
pub fn gen_spurious(cfg: &SpuriousConfig) -> Result<LabeledSet> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    Ok(sample_spurious(
        cfg.p,
        cfg.c,
        cfg.noise_dim,
        cfg.n_samples,
        &mut rng,
    ))
}

/// Header line `n,dim,labeled` then one comma-separated sample per row
/// (label last when labeled).
pub fn write_dataset<W: Write>(
    features: &Features,
    labels: Option<&[usize]>,
    mut out: W,
) -> std::io::Result<()> {
    writeln!(
        out,
        "{},{},{}",
        features.len(),
        features.dim(),
        u8::from(labels.is_some())
    )?;
    for (i, row) in features.rows().enumerate() {
        let mut cols: Vec<String> = row.iter().map(|v| fmt_f64(*v)).collect();
        if let Some(l) = labels {
            cols.push(l[i].to_string());
        }
        writeln!(out, "{}", cols.join(","))?;
    }
    Ok(())
}

/// Inverse of [`write_dataset`].
pub fn read_dataset<R: BufRead>(input: R) -> Result<(Features, Option<Vec<usize>>)> {
    let parse_err = |line: usize, reason: String| Error::Parse { line, reason };
    let mut lines = input.lines();
    let header = lines
        .next()
        .ok_or_else(|| parse_err(1, "empty input".into()))?
        .map_err(|e| Error::io("<dataset>", e))?;
    let head: Vec<&str> = header.trim().split(',').collect();
    if head.len() != 3 {
        return Err(parse_err(1, format!("expected `n,dim,labeled`, got {header:?}")));
    }
    let num = |s: &str| {
        s.trim()
            .parse::<usize>()
            .map_err(|_| parse_err(1, format!("bad header field {s:?}")))
    };
    let (n, dim, labeled) = (num(head[0])?, num(head[1])?, num(head[2])?);
    if labeled > 1 {
        return Err(parse_err(1, "labeled flag must be 0 or 1".into()));
    }
    let labeled = labeled == 1;
    let mut data = Vec::with_capacity(n * dim);
    let mut labels = labeled.then(|| Vec::with_capacity(n));
    let mut rows = 0;
    for (k, line) in lines.enumerate() {
        let lineno = k + 2;
        let line = line.map_err(|e| Error::io("<dataset>", e))?;
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.trim().split(',').collect();
        let want = dim + usize::from(labeled);
        if cols.len() != want {
            return Err(parse_err(
                lineno,
                format!("expected {want} columns, got {}", cols.len()),
            ));
        }
        for c in &cols[..dim] {
            data.push(
                c.parse::<f64>()
                    .map_err(|_| parse_err(lineno, format!("not a number: {c:?}")))?,
            );
        }
        if let Some(l) = labels.as_mut() {
            l.push(
                cols[dim]
                    .parse::<usize>()
                    .map_err(|_| parse_err(lineno, format!("bad label {:?}", cols[dim])))?,
            );
        }
        rows += 1;
    }
    if rows != n {
        return Err(parse_err(1, format!("header says {n} rows, found {rows}")));
    }
    Ok((Features::new(dim, data)?, labels))
}
