//! Generalized dimensions: correlation-sum estimates of `D_q` from samples,
//! exact spectra of self-similar measures, the Hunt-Kaloshin cap and the
//! large-deviation rate function.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::dynsys::{MapKind, SystemSpec};
use crate::observables::Metric;
use crate::{Error, Result};

/// Orders above this are skipped with a warning: the estimates become
/// unreliable.
pub const MAX_Q: f64 = 6.0;

/// Windows with a coefficient of determination below this are flagged.
pub const MIN_R2: f64 = 0.98;

pub const DEFAULT_Q_GRID: [f64; 7] = [1.0, 1.5, 2.0, 2.5, 3.0, 4.0, 5.0];

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ScalingFit {
    pub r_lo: f64,
    pub r_hi: f64,
    pub r2: f64,
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DimensionSpectrum {
    pub q: Vec<f64>,
    pub d: Vec<f64>,
    pub radii: Vec<f64>,
    /// One entry per `q` for estimated spectra, empty for exact ones.
    pub fits: Vec<ScalingFit>,
    pub warnings: Vec<String>,
}

impl DimensionSpectrum {
    /// Spectrum given by values, e.g. from a closed form.
    pub fn from_values(q: Vec<f64>, d: Vec<f64>) -> Result<Self> {
        if q.len() != d.len() || q.is_empty() {
            return Err(Error::InvalidParameter(
                "spectrum needs one value per order".into(),
            ));
        }
        if q.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidParameter(
                "spectrum orders must be strictly increasing".into(),
            ));
        }
        Ok(Self {
            q,
            d,
            radii: Vec::new(),
            fits: Vec::new(),
            warnings: Vec::new(),
        })
    }

    /// Linear interpolation in `q`, `None` outside the grid.
    pub fn at(&self, q: f64) -> Option<f64> {
        if q < self.q[0] || q > self.q[self.q.len() - 1] {
            return None;
        }
        let i = self.q.partition_point(|&x| x < q);
        if self.q[i] == q {
            return Some(self.d[i]);
        }
        let (q0, q1) = (self.q[i - 1], self.q[i]);
        Some(self.d[i - 1] + (q - q0) / (q1 - q0) * (self.d[i] - self.d[i - 1]))
    }

    pub fn any_flagged(&self) -> bool {
        self.fits.iter().any(|f| f.flagged)
    }
}

/// Reference subsampling, metric and regression window of [`estimate_dq`].
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DqOptions {
    pub n_ref: usize,
    pub metric: Metric,
    /// Radii per regression window; `None` uses half the grid.
    pub window: Option<usize>,
}

impl Default for DqOptions {
    fn default() -> Self {
        Self {
            n_ref: 2000,
            metric: Metric::Euclidean,
            window: None,
        }
    }
}

/// Sixteen logarithmically spaced radii per decade from `r_hi / 10^decades`
/// up to `r_hi`.
pub fn log_radii(r_hi: f64, decades: f64) -> Vec<f64> {
    let n = (16.0 * decades).round() as usize;
    (0..=n)
        .map(|i| r_hi * 10f64.powf(-decades * (n - i) as f64 / n as f64))
        .collect()
}

/// Largest coordinate range of a point set stored row-major.
pub fn diameter(points: &[f64], dim: usize) -> f64 {
    (0..dim)
        .map(|c| {
            let (lo, hi) = points
                .iter()
                .skip(c)
                .step_by(dim)
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                    (lo.min(v), hi.max(v))
                });
            hi - lo
        })
        .fold(0.0, f64::max)
}

/// Counts `#{j != i : dist(y_i, y_j) < r}` for every reference `i` and radius.
fn neighbour_counts(
    points: &[f64],
    dim: usize,
    radii: &[f64],
    refs: &[usize],
    metric: Metric,
) -> Vec<Vec<u64>> {
    let n = points.len() / dim;
    if dim == 1 {
        let mut sorted = points.to_vec();
        sorted.sort_unstable_by(f64::total_cmp);
        return refs
            .iter()
            .map(|&i| {
                let y = points[i];
                radii
                    .iter()
                    .map(|&r| {
                        let lo = sorted.partition_point(|&v| v <= y - r);
                        let hi = sorted.partition_point(|&v| v < y + r);
                        (hi - lo) as u64 - 1
                    })
                    .collect()
            })
            .collect();
    }
    refs.iter()
        .map(|&i| {
            let y = &points[i * dim..(i + 1) * dim];
            let mut hist = vec![0u64; radii.len()];
            for j in 0..n {
                if j == i {
                    continue;
                }
                let d = metric.dist(y, &points[j * dim..(j + 1) * dim]);
                // first radius strictly larger than d
                let k = radii.partition_point(|&r| r <= d);
                if k < radii.len() {
                    hist[k] += 1;
                }
            }
            let mut acc = 0;
            for h in hist.iter_mut() {
                acc += *h;
                *h = acc;
            }
            hist
        })
        .collect()
}

fn reference_indices(n: usize, n_ref: usize) -> Vec<usize> {
    let m = n_ref.min(n).max(1);
    (0..m).map(|k| k * n / m).collect()
}

/// Least squares `y = a + b x`; returns `(b, r^2)`.
fn regression(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxx += (a - mx) * (a - mx);
        sxy += (a - mx) * (b - my);
        syy += (b - my) * (b - my);
    }
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    (slope, r2)
}

/// Best window of consecutive radii by `r^2`; returns `(slope, fit)`.
fn best_window(lr: &[f64], y: &[f64], radii: &[f64], window: usize) -> Option<(f64, ScalingFit)> {
    if lr.len() < 3 {
        return None;
    }
    let w = window.clamp(3, lr.len());
    let mut best: Option<(f64, ScalingFit)> = None;
    for s in 0..=lr.len() - w {
        let (slope, r2) = regression(&lr[s..s + w], &y[s..s + w]);
        if best.as_ref().is_none_or(|(_, b)| r2 > b.r2) {
            best = Some((
                slope,
                ScalingFit {
                    r_lo: radii[s],
                    r_hi: radii[s + w - 1],
                    r2,
                    flagged: r2 < MIN_R2,
                },
            ));
        }
    }
    best
}

/// `D_q` from `C_q(r) = <p_i(r)^{q-1}>` over reference points, where
/// `p_i(r)` is the fraction of other samples within `r` of reference `i`.
/// `D_q` is the slope of `ln C_q` against `(q - 1) ln r`; at `q = 1` the
/// slope of `<ln p_i(r)>` against `ln r`. For `q <= 1` radii at which some
/// reference has no neighbour are left out.
pub fn estimate_dq(
    points: &[f64],
    dim: usize,
    q_grid: &[f64],
    radii: &[f64],
    opts: &DqOptions,
) -> Result<DimensionSpectrum> {
    if dim == 0 || points.len() % dim != 0 {
        return Err(Error::InvalidParameter(format!(
            "{} values do not form points of dimension {dim}",
            points.len()
        )));
    }
    let n = points.len() / dim;
    if n < 2 {
        return Err(Error::InsufficientData {
            what: "sample points",
            got: n,
            need: 2,
        });
    }
    if radii.len() < 3 || radii.windows(2).any(|w| !(w[0] < w[1])) || !(radii[0] > 0.0) {
        return Err(Error::InvalidParameter(
            "need at least three positive, strictly increasing radii".into(),
        ));
    }
    let mut warnings = Vec::new();
    let qs: Vec<f64> = q_grid
        .iter()
        .copied()
        .filter(|&q| {
            let keep = q <= MAX_Q;
            if !keep {
                warnings.push(format!("q = {q} above {MAX_Q} skipped"));
            }
            keep
        })
        .collect();
    let refs = reference_indices(n, opts.n_ref);
    let counts = neighbour_counts(points, dim, radii, &refs, opts.metric);
    let norm = (n - 1) as f64;
    let window = opts.window.unwrap_or(radii.len() / 2);

    let mut d = Vec::with_capacity(qs.len());
    let mut fits = Vec::with_capacity(qs.len());
    for &q in &qs {
        let mut lr = Vec::new();
        let mut ly = Vec::new();
        let mut used = Vec::new();
        for (k, &r) in radii.iter().enumerate() {
            let empty = counts.iter().any(|c| c[k] == 0);
            if q <= 1.0 && empty {
                continue;
            }
            let y = if q == 1.0 {
                counts.iter().map(|c| (c[k] as f64 / norm).ln()).sum::<f64>() / refs.len() as f64
            } else {
                let c = counts
                    .iter()
                    .filter(|c| c[k] > 0)
                    .map(|c| (c[k] as f64 / norm).powf(q - 1.0))
                    .sum::<f64>()
                    / refs.len() as f64;
                if !(c > 0.0) {
                    continue;
                }
                c.ln() / (q - 1.0)
            };
            lr.push(r.ln());
            ly.push(y);
            used.push(r);
        }
        let (slope, fit) = best_window(&lr, &ly, &used, window).ok_or_else(|| {
            Error::InsufficientData {
                what: "radii with neighbours for every reference point",
                got: lr.len(),
                need: 3,
            }
        })?;
        if fit.flagged {
            warnings.push(format!("q = {q}: best scaling window has r^2 = {:.4}", fit.r2));
        }
        d.push(slope);
        fits.push(fit);
    }
    Ok(DimensionSpectrum {
        q: qs,
        d,
        radii: radii.to_vec(),
        fits,
        warnings,
    })
}

/// Classic correlation sum: fraction of (reference, other point) pairs
/// closer than each radius.
pub fn correlation_sum(
    points: &[f64],
    dim: usize,
    radii: &[f64],
    opts: &DqOptions,
) -> Vec<f64> {
    let n = points.len() / dim;
    let refs = reference_indices(n, opts.n_ref);
    let counts = neighbour_counts(points, dim, radii, &refs, opts.metric);
    (0..radii.len())
        .map(|k| {
            counts.iter().map(|c| c[k] as f64).sum::<f64>() / (refs.len() as f64 * (n - 1) as f64)
        })
        .collect()
}

/// `D_q` of the self-similar measure with contraction `ratios` and
/// probabilities `weights` on the line: the root `D` of
/// `sum_i w_i^q r_i^{(1-q) D} = 1`, by bisection on `(0, 2]`, the upper end
/// doubled (up to 1024) while it does not bracket the root. At `q = 1` the
/// closed form `sum w ln w / sum w ln r`.
pub fn ifs_dq_solve(ratios: &[f64], weights: &[f64], q: f64) -> Result<f64> {
    if ratios.len() != weights.len()
        || ratios.is_empty()
        || ratios.iter().any(|r| !(*r > 0.0 && *r < 1.0))
        || weights.iter().any(|w| !(*w > 0.0))
        || (weights.iter().sum::<f64>() - 1.0).abs() > 1e-12
    {
        return Err(Error::InvalidParameter(
            "need ratios in (0, 1) and positive weights summing to 1".into(),
        ));
    }
    if q == 1.0 {
        let num: f64 = weights.iter().map(|w| w * w.ln()).sum();
        let den: f64 = weights.iter().zip(ratios).map(|(w, r)| w * r.ln()).sum();
        return Ok(num / den);
    }
    let g = |dd: f64| -> f64 {
        weights
            .iter()
            .zip(ratios)
            .map(|(w, r)| (q * w.ln() + (1.0 - q) * dd * r.ln()).exp())
            .sum::<f64>()
            - 1.0
    };
    let (mut lo, mut hi) = (f64::MIN_POSITIVE, 2.0);
    let glo = g(lo);
    if glo == 0.0 {
        return Ok(lo);
    }
    let mut ghi = g(hi);
    while glo.signum() == ghi.signum() && hi < 1024.0 {
        hi *= 2.0;
        ghi = g(hi);
    }
    if glo.signum() == ghi.signum() {
        return Err(Error::NoBracket { q, lo, hi });
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let gm = g(mid);
        if gm == 0.0 {
            return Ok(mid);
        }
        if gm.signum() == glo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `alpha^q lambda_a^{(1-q) D} + (1-alpha)^q lambda_b^{(1-q) D} = 1`: the
/// spectrum of the baker map's stable (contracting) direction, which is
/// also the spectrum of the image of the invariant measure under `x`.
pub fn baker_dq_solve(alpha: f64, lambda_a: f64, lambda_b: f64, q: f64) -> Result<f64> {
    ifs_dq_solve(&[lambda_a, lambda_b], &[alpha, 1.0 - alpha], q)
}

/// Residual of the baker equation at `D`.
pub fn baker_residual(alpha: f64, lambda_a: f64, lambda_b: f64, q: f64, d: f64) -> f64 {
    alpha.powf(q) * lambda_a.powf((1.0 - q) * d)
        + (1.0 - alpha).powf(q) * lambda_b.powf((1.0 - q) * d)
        - 1.0
}

/// Information dimension in closed form.
pub fn info_dimension(spec: &SystemSpec) -> Result<f64> {
    match &spec.kind {
        MapKind::Baker {
            alpha,
            lambda_a,
            lambda_b,
        } => Ok(1.0 + baker_dq_solve(*alpha, *lambda_a, *lambda_b, 1.0)?),
        MapKind::CantorIfs1d { ratios, weights } => ifs_dq_solve(ratios, weights, 1.0),
        MapKind::CantorProduct2d => Ok(2.0 * core::f64::consts::LN_2 / 3f64.ln()),
        other => Err(Error::Unsupported(format!(
            "no closed-form information dimension for {}",
            other.name()
        ))),
    }
}

/// `min(D_q, m)` element-wise.
pub fn hunt_kaloshin_cap(d: &[f64], m: f64) -> Vec<f64> {
    d.iter().map(|&v| v.min(m)).collect()
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RateFunction {
    pub s: Vec<f64>,
    pub value: Vec<f64>,
    /// The maximizing order sits on the edge of the spectrum's range, so
    /// the value is only a lower bound.
    pub boundary: Vec<bool>,
}

/// `Q(s) = max_q { -q s + q D_{q+1} }` over the orders covered by the
/// spectrum, with `D` interpolated linearly on a fine grid.
pub fn rate_function(spectrum: &DimensionSpectrum, s_grid: &[f64]) -> Result<RateFunction> {
    let q0 = spectrum.q[0];
    let q1 = spectrum.q[spectrum.q.len() - 1];
    if !(q0 <= 1.0 && q1 >= 1.0) || spectrum.q.len() < 2 {
        return Err(Error::InvalidParameter(
            "the spectrum must cover an interval of orders around 1".into(),
        ));
    }
    const STEPS: usize = 4000;
    let grid: Vec<(f64, f64)> = (0..=STEPS)
        .map(|i| {
            let qq = q0 + (q1 - q0) * i as f64 / STEPS as f64;
            (qq - 1.0, spectrum.at(qq).expect("inside the grid"))
        })
        .collect();
    let mut value = Vec::with_capacity(s_grid.len());
    let mut boundary = Vec::with_capacity(s_grid.len());
    for &s in s_grid {
        let (arg, best) = grid
            .iter()
            .enumerate()
            .map(|(i, &(q, d))| (i, q * (d - s)))
            .fold((0, f64::NEG_INFINITY), |b, x| if x.1 > b.1 { x } else { b });
        value.push(best.max(0.0));
        boundary.push(best > 1e-12 && (arg == 0 || arg == STEPS));
    }
    Ok(RateFunction {
        s: s_grid.to_vec(),
        value,
        boundary,
    })
}
