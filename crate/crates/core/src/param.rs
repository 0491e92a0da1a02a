//! Partitioned parameter space: one shared block, one block per source
//! domain, one target block, stored as a single flat vector.
//!
//! Block order is fixed as `[shared, source 0, .., source N-1, target]`.
//! Any block may be empty.

use std::fmt;
use std::io::{BufRead, Write};
use std::ops::Range;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::format::fmt_f64;

/// Names one contiguous block of a [`ParamLayout`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BlockId {
    Shared,
    Source(usize),
    Target,
}

/// Owner of an objective: a source domain (by index) or the target domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Domain {
    Source(usize),
    Target,
}

impl Domain {
    /// The domain-specific block this domain owns.
    pub fn block(self) -> BlockId {
        match self {
            Domain::Source(i) => BlockId::Source(i),
            Domain::Target => BlockId::Target,
        }
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Domain::Source(i) => write!(f, "source {i}"),
            Domain::Target => f.write_str("target"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamLayout {
    shared_dim: usize,
    source_dims: Vec<usize>,
    target_dim: usize,
}

impl ParamLayout {
    pub fn new(shared_dim: usize, source_dims: Vec<usize>, target_dim: usize) -> Self {
        Self {
            shared_dim,
            source_dims,
            target_dim,
        }
    }

    pub fn shared_dim(&self) -> usize {
        self.shared_dim
    }

    pub fn source_dims(&self) -> &[usize] {
        &self.source_dims
    }

    pub fn target_dim(&self) -> usize {
        self.target_dim
    }

    pub fn num_sources(&self) -> usize {
        self.source_dims.len()
    }

    pub fn total_dim(&self) -> usize {
        self.shared_dim + self.source_dims.iter().sum::<usize>() + self.target_dim
    }

    /// Offsets of `block` inside the flat vector.
    pub fn range(&self, block: BlockId) -> Result<Range<usize>> {
        match block {
            BlockId::Shared => Ok(0..self.shared_dim),
            BlockId::Source(i) => {
                if i >= self.source_dims.len() {
                    return Err(Error::UnknownBlock {
                        block,
                        sources: self.num_sources(),
                    });
                }
                let start = self.shared_dim + self.source_dims[..i].iter().sum::<usize>();
                Ok(start..start + self.source_dims[i])
            }
            BlockId::Target => {
                let end = self.total_dim();
                Ok(end - self.target_dim..end)
            }
        }
    }

    pub fn block_dim(&self, block: BlockId) -> Result<usize> {
        self.range(block).map(|r| r.len())
    }

    pub fn contains(&self, domain: Domain) -> bool {
        match domain {
            Domain::Source(i) => i < self.num_sources(),
            Domain::Target => true,
        }
    }

    /// Every block in storage order.
    pub fn blocks(&self) -> impl Iterator<Item = BlockId> + '_ {
        std::iter::once(BlockId::Shared)
            .chain((0..self.num_sources()).map(BlockId::Source))
            .chain(std::iter::once(BlockId::Target))
    }

    /// `layout sh=<n> src=<n1,n2,..> tgt=<n>`
    pub fn header(&self) -> String {
        let src: Vec<String> = self.source_dims.iter().map(|d| d.to_string()).collect();
        format!(
            "layout sh={} src={} tgt={}",
            self.shared_dim,
            src.join(","),
            self.target_dim
        )
    }

    pub fn parse_header(line: &str) -> Result<Self> {
        let bad = |reason: &str| Error::Parse {
            line: 1,
            reason: format!("{reason}: {line:?}"),
        };
        let mut fields = line.split_whitespace();
        if fields.next() != Some("layout") {
            return Err(bad("expected `layout` header"));
        }
        let mut field = |key: &str| -> Result<&str> {
            fields
                .next()
                .and_then(|f| f.strip_prefix(key))
                .ok_or_else(|| bad(&format!("missing `{key}`")))
        };
        let num = |s: &str| s.parse::<usize>().map_err(|_| bad("bad block size"));
        let shared = num(field("sh=")?)?;
        let src = field("src=")?;
        let target = num(field("tgt=")?)?;
        let sources = if src.is_empty() {
            Vec::new()
        } else {
            src.split(',').map(num).collect::<Result<_>>()?
        };
        Ok(Self::new(shared, sources, target))
    }
}

/// An immutable point in the partitioned parameter space.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamVector {
    layout: Arc<ParamLayout>,
    values: Vec<f64>,
}

impl ParamVector {
    pub fn new(layout: Arc<ParamLayout>, values: Vec<f64>) -> Result<Self> {
        if values.len() != layout.total_dim() {
            return Err(Error::LengthMismatch {
                context: "parameter vector",
                expected: layout.total_dim(),
                actual: values.len(),
            });
        }
        if !values.iter().all(|v| v.is_finite()) {
            return Err(Error::LayoutMismatch(
                "parameter vector contains non-finite entries".into(),
            ));
        }
        Ok(Self { layout, values })
    }

    pub fn zeros(layout: Arc<ParamLayout>) -> Self {
        let values = vec![0.0; layout.total_dim()];
        Self { layout, values }
    }

    pub fn layout(&self) -> &ParamLayout {
        &self.layout
    }

    pub fn layout_arc(&self) -> &Arc<ParamLayout> {
        &self.layout
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn slice(&self, block: BlockId) -> Result<&[f64]> {
        let range = self.layout.range(block)?;
        Ok(&self.values[range])
    }

    /// Returns a copy with `delta` added to `block`; `self` is untouched.
    pub fn block_perturb(&self, block: BlockId, delta: &[f64]) -> Result<ParamVector> {
        let range = self.layout.range(block)?;
        if delta.len() != range.len() {
            return Err(Error::LengthMismatch {
                context: "block perturbation",
                expected: range.len(),
                actual: delta.len(),
            });
        }
        let mut values = self.values.clone();
        for (v, d) in values[range].iter_mut().zip(delta) {
            *v += d;
        }
        Ok(ParamVector {
            layout: Arc::clone(&self.layout),
            values,
        })
    }

    /// Copy with every entry passed through `f` (used for box projection).
    pub fn map(&self, f: impl Fn(f64) -> f64) -> ParamVector {
        ParamVector {
            layout: Arc::clone(&self.layout),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub(crate) fn from_parts_unchecked(layout: Arc<ParamLayout>, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), layout.total_dim());
        Self { layout, values }
    }

    /// Writes the layout header followed by one value per line.
    pub fn write_text<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{}", self.layout.header())?;
        for v in &self.values {
            writeln!(out, "{}", fmt_f64(*v))?;
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut buf = Vec::new();
        self.write_text(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("formatter emits ASCII")
    }

    pub fn read_text<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines();
        let header = match lines.next() {
            Some(line) => line.map_err(|e| Error::io("<param dump>", e))?,
            None => {
                return Err(Error::Parse {
                    line: 1,
                    reason: "empty input".into(),
                })
            }
        };
        let layout = ParamLayout::parse_header(header.trim_end())?;
        let mut values = Vec::with_capacity(layout.total_dim());
        for (i, line) in lines.enumerate() {
            let line = line.map_err(|e| Error::io("<param dump>", e))?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let v = line.parse::<f64>().map_err(|_| Error::Parse {
                line: i + 2,
                reason: format!("not a number: {line:?}"),
            })?;
            values.push(v);
        }
        ParamVector::new(Arc::new(layout), values)
    }

    pub fn from_text(text: &str) -> Result<Self> {
        Self::read_text(text.as_bytes())
    }
}

/// Gradient of one domain objective, split into its shared-block part and
/// the part for the domain's own specific block.
#[derive(Debug, Clone, PartialEq)]
pub struct GradSlices {
    pub owner: Domain,
    pub shared: Vec<f64>,
    pub specific: Vec<f64>,
}

impl GradSlices {
    pub fn new(owner: Domain, shared: Vec<f64>, specific: Vec<f64>) -> Self {
        Self {
            owner,
            shared,
            specific,
        }
    }

    pub fn zeros(layout: &ParamLayout, owner: Domain) -> Result<Self> {
        let spec = layout.block_dim(owner.block())?;
        Ok(Self::new(
            owner,
            vec![0.0; layout.shared_dim()],
            vec![0.0; spec],
        ))
    }

    pub fn check_layout(&self, layout: &ParamLayout) -> Result<()> {
        let spec = layout.block_dim(self.owner.block())?;
        if self.shared.len() != layout.shared_dim() {
            return Err(Error::LengthMismatch {
                context: "shared gradient slice",
                expected: layout.shared_dim(),
                actual: self.shared.len(),
            });
        }
        if self.specific.len() != spec {
            return Err(Error::LengthMismatch {
                context: "specific gradient slice",
                expected: spec,
                actual: self.specific.len(),
            });
        }
        Ok(())
    }

    /// Full-space gradient: shared slice, owner's slice, zeros elsewhere.
    pub fn embed_full(&self, layout: &ParamLayout) -> Result<Vec<f64>> {
        self.check_layout(layout)?;
        let mut full = vec![0.0; layout.total_dim()];
        full[..layout.shared_dim()].copy_from_slice(&self.shared);
        let range = layout.range(self.owner.block())?;
        full[range].copy_from_slice(&self.specific);
        Ok(full)
    }

    pub fn is_finite(&self) -> bool {
        self.shared.iter().chain(&self.specific).all(|v| v.is_finite())
    }
}
