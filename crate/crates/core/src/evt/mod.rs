//! Block maxima, empirical quantiles, GEV maximum-likelihood fits and the
//! local-dimension estimator `d = 1 / sigma`.

mod gev;
mod simplex;
mod stream;

pub use gev::{fit_gev, gev_log_likelihood, GevFit, MIN_MAXIMA};
pub use simplex::{nelder_mead, SimplexOptions, SimplexResult};
pub use stream::{
    dimension_trial, estimate_dimension, phi_series, BlockMaximaRun, DimensionEstimate,
    PhiStream, TargetChoice, TrialFit,
};

use alloc::format;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct BlockMaximaSeries {
    pub maxima: Vec<f64>,
    pub block_size: usize,
    /// Length of the series the blocks were cut from.
    pub source_len: usize,
    /// Blocks rejected because they contained `+inf` (an exact hit of the
    /// target) or nothing but skipped values.
    pub dropped_blocks: usize,
}

/// Streaming block-maximum accumulator. NaN values mark skipped samples and
/// are ignored.
#[derive(Debug, Clone)]
pub struct BlockMaximaBuilder {
    block_size: usize,
    in_block: usize,
    current: f64,
    seen: usize,
    out: BlockMaximaSeries,
}

impl BlockMaximaBuilder {
    pub fn new(block_size: usize) -> Self {
        Self {
            block_size,
            in_block: 0,
            current: f64::NEG_INFINITY,
            seen: 0,
            out: BlockMaximaSeries {
                maxima: Vec::new(),
                block_size,
                source_len: 0,
                dropped_blocks: 0,
            },
        }
    }

    #[inline]
    pub fn push(&mut self, v: f64) {
        if v > self.current {
            self.current = v;
        }
        self.seen += 1;
        self.in_block += 1;
        if self.in_block == self.block_size {
            if self.current.is_finite() {
                self.out.maxima.push(self.current);
            } else {
                self.out.dropped_blocks += 1;
            }
            self.in_block = 0;
            self.current = f64::NEG_INFINITY;
        }
    }

    pub fn finish(mut self) -> BlockMaximaSeries {
        self.out.source_len = self.seen;
        self.out
    }
}

/// Maxima of consecutive disjoint blocks of length `n`; the remainder is
/// discarded.
pub fn block_maxima(series: &[f64], n: usize) -> Result<BlockMaximaSeries> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "block size must be >= 2, got {n}"
        )));
    }
    if series.len() < n {
        return Err(Error::InsufficientData {
            what: "series values for one block",
            got: series.len(),
            need: n,
        });
    }
    let mut b = BlockMaximaBuilder::new(n);
    for &v in series {
        b.push(v);
    }
    Ok(b.finish())
}

/// Linear interpolation between order statistics (`h = (N - 1) p`). NaN
/// entries are ignored.
pub fn quantile(series: &[f64], p: f64) -> Result<f64> {
    check_p(p)?;
    let mut v: Vec<f64> = series.iter().copied().filter(|x| !x.is_nan()).collect();
    if v.is_empty() {
        return Err(Error::InsufficientData {
            what: "non-NaN values for a quantile",
            got: 0,
            need: 1,
        });
    }
    let h = (v.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let frac = h - lo as f64;
    let (_, &mut a, rest) = v.select_nth_unstable_by(lo, f64::total_cmp);
    if frac == 0.0 || rest.is_empty() {
        return Ok(a);
    }
    let b = rest.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(a + frac * (b - a))
}

fn check_p(p: f64) -> Result<()> {
    if p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "quantile level must lie in (0, 1), got {p}"
        )))
    }
}

/// Upper quantile of a stream of known maximal length without storing it:
/// only the largest `(1 - p) * capacity + 2` values are kept.
#[derive(Debug, Clone)]
pub struct TopQuantile {
    p: f64,
    keep: usize,
    floor: f64,
    count: usize,
    buf: Vec<f64>,
}

impl TopQuantile {
    pub fn new(p: f64, capacity: usize) -> Result<Self> {
        check_p(p)?;
        let keep = ((1.0 - p) * capacity as f64).ceil() as usize + 2;
        Ok(Self {
            p,
            keep,
            floor: f64::NEG_INFINITY,
            count: 0,
            buf: Vec::with_capacity(4 * keep),
        })
    }

    #[inline]
    pub fn push(&mut self, v: f64) {
        if v.is_nan() {
            return;
        }
        self.count += 1;
        if v < self.floor {
            return;
        }
        self.buf.push(v);
        if self.buf.len() >= 4 * self.keep {
            self.truncate();
        }
    }

    fn truncate(&mut self) {
        let cut = self.buf.len() - self.keep;
        self.buf.select_nth_unstable_by(cut, f64::total_cmp);
        self.buf.drain(..cut);
        self.floor = self.buf.iter().copied().fold(f64::INFINITY, f64::min);
    }

    /// Number of non-NaN values seen.
    pub fn count(&self) -> usize {
        self.count
    }

    pub fn value(mut self) -> Result<f64> {
        if self.count == 0 {
            return Err(Error::InsufficientData {
                what: "non-NaN values for a quantile",
                got: 0,
                need: 1,
            });
        }
        let h = (self.count - 1) as f64 * self.p;
        let lo = h.floor() as usize;
        let frac = h - lo as f64;
        // ranks counted from the top
        let r_lo = self.count - 1 - lo;
        if r_lo >= self.buf.len() {
            return Err(Error::InvalidParameter(format!(
                "stream longer than the declared capacity ({} values)",
                self.count
            )));
        }
        self.buf.sort_unstable_by(|a, b| b.total_cmp(a));
        let a = self.buf[r_lo];
        if frac == 0.0 || r_lo == 0 {
            return Ok(a);
        }
        Ok(a + frac * (self.buf[r_lo - 1] - a))
    }
}

/// Mean and sample standard deviation (zero for a single value).
pub fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}
