//! Extremal index: empirical cluster coefficients `q_k` from exceedances of
//! an orbit, and the closed forms for expanding interval maps, with and
//! without a hole.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::dynsys::System;
use crate::evt::{mean_sd, quantile, PhiStream, TargetChoice, TopQuantile};
use crate::observables::{preimage_data, ObservableSpec, Preimage};
use crate::{Error, Result, SimRng};

/// Fewest exceedances accepted by the estimators.
pub const MIN_EXCEEDANCES: usize = 100;

/// Indices `i` with `phi_i > u`, stored sparsely.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ExceedanceSeries {
    /// Strictly increasing hit indices.
    pub hits: Vec<usize>,
    pub threshold: f64,
    pub quantile: f64,
    pub len: usize,
}

impl ExceedanceSeries {
    /// Exceedances of the `p`-quantile of `phi`. NaN values never exceed.
    pub fn from_phi(phi: &[f64], p: f64) -> Result<Self> {
        let u = quantile(phi, p)?;
        Ok(Self::above(phi, u, p))
    }

    /// Exceedances of a given threshold.
    pub fn above(phi: &[f64], u: f64, p: f64) -> Self {
        Self {
            hits: (0..phi.len()).filter(|&i| phi[i] > u).collect(),
            threshold: u,
            quantile: p,
            len: phi.len(),
        }
    }

    pub fn from_bools(hits: &[bool]) -> Self {
        Self {
            hits: (0..hits.len()).filter(|&i| hits[i]).collect(),
            threshold: f64::NAN,
            quantile: f64::NAN,
            len: hits.len(),
        }
    }

    pub fn n_hits(&self) -> usize {
        self.hits.len()
    }

    pub fn hit_frequency(&self) -> f64 {
        self.hits.len() as f64 / self.len as f64
    }

    pub fn is_hit(&self, i: usize) -> bool {
        self.hits.binary_search(&i).is_ok()
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ClusterCoefficients {
    /// `q_0 ..= q_K`; the last entry is reported but not subtracted.
    pub q: Vec<f64>,
    /// `1 - sum_{k < K} q_k`, clamped to `[0, 1]`.
    pub theta: f64,
    pub theta_raw: f64,
    pub k: usize,
    pub n_exceedances: usize,
    /// Hits far enough from the end of the series to be counted.
    pub n_counted: usize,
}

/// Gap histogram: for every hit `i` with `i + horizon + 1 < len`,
/// `counts[g]` counts first returns after exactly `g + 1` steps, `g <= horizon`.
fn first_return_counts(es: &ExceedanceSeries, horizon: usize) -> Result<(Vec<usize>, usize)> {
    if es.hits.len() < MIN_EXCEEDANCES {
        return Err(Error::TooFewExceedances {
            got: es.hits.len(),
            need: MIN_EXCEEDANCES,
        });
    }
    let mut counts = vec![0usize; horizon + 1];
    let mut counted = 0;
    for (j, &i) in es.hits.iter().enumerate() {
        if i + horizon + 1 >= es.len {
            break;
        }
        counted += 1;
        if let Some(&next) = es.hits.get(j + 1) {
            let gap = next - i - 1;
            if gap <= horizon {
                counts[gap] += 1;
            }
        }
    }
    if counted == 0 {
        return Err(Error::TooFewExceedances { got: 0, need: 1 });
    }
    Ok((counts, counted))
}

/// Fraction of hits whose next hit comes after exactly `k + 1` steps.
pub fn q_hat(es: &ExceedanceSeries, k: usize) -> Result<f64> {
    let (counts, counted) = first_return_counts(es, k)?;
    Ok(counts[k] as f64 / counted as f64)
}

/// `theta_K = 1 - sum_{k < K} q_k`. `K = 5` is the usual five-term estimate,
/// `K = 1` the single-term `1 - q_0`.
pub fn theta_hat(es: &ExceedanceSeries, k: usize) -> Result<ClusterCoefficients> {
    if k == 0 {
        return Err(Error::InvalidParameter("theta_hat needs K >= 1".into()));
    }
    let (counts, counted) = first_return_counts(es, k)?;
    let q: Vec<f64> = counts.iter().map(|&c| c as f64 / counted as f64).collect();
    let theta_raw = 1.0 - q[..k].iter().sum::<f64>();
    Ok(ClusterCoefficients {
        theta: theta_raw.clamp(0.0, 1.0),
        theta_raw,
        q,
        k,
        n_exceedances: es.hits.len(),
        n_counted: counted,
    })
}

/// Orbit length, threshold quantile, truncation order and seed of an
/// extremal-index experiment.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ThetaRun {
    pub m: usize,
    pub quantile: f64,
    pub k: usize,
    pub seed: u64,
}

impl ThetaRun {
    pub fn new(m: usize, quantile: f64, seed: u64) -> Self {
        Self {
            m,
            quantile,
            k: 5,
            seed,
        }
    }
}

/// Exceedances along one trajectory (stream `trial` of `seed`). The orbit is
/// generated twice from the same generator state: once for the threshold,
/// once for the hits, so memory stays proportional to the hit count.
pub fn exceedance_trial(
    sys: &System,
    obs: &ObservableSpec,
    target: &TargetChoice,
    run: &ThetaRun,
    trial: usize,
) -> Result<(ExceedanceSeries, Vec<f64>)> {
    let (obs, resolved) = target.instantiate(obs, sys, run.seed, trial)?;
    let obs = &obs;
    let mut rng = SimRng::new(run.seed, trial as u64);
    let x0 = sys.settled_state(&mut rng);

    let mut top = TopQuantile::new(run.quantile, run.m)?;
    let mut stream = PhiStream::new(sys, obs, &resolved, x0, rng.clone())?;
    for _ in 0..run.m {
        top.push(stream.next_phi()?);
    }
    let u = top.value()?;

    let mut stream = PhiStream::new(sys, obs, &resolved, x0, rng)?;
    let mut hits = Vec::with_capacity(((1.0 - run.quantile) * run.m as f64) as usize + 16);
    for i in 0..run.m {
        if stream.next_phi()? > u {
            hits.push(i);
        }
    }
    Ok((
        ExceedanceSeries {
            hits,
            threshold: u,
            quantile: run.quantile,
            len: run.m,
        },
        resolved.f0,
    ))
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ThetaTrial {
    pub trial: usize,
    pub threshold: f64,
    pub f0: Vec<f64>,
    pub coefficients: ClusterCoefficients,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ThetaEstimate {
    pub theta: f64,
    pub sd: f64,
    pub per_trial: Vec<ThetaTrial>,
}

impl ThetaEstimate {
    pub fn from_trials(mut per_trial: Vec<ThetaTrial>) -> Result<Self> {
        if per_trial.is_empty() {
            return Err(Error::InvalidParameter("no trials".into()));
        }
        per_trial.sort_by_key(|t| t.trial);
        let v: Vec<f64> = per_trial.iter().map(|t| t.coefficients.theta).collect();
        let (theta, sd) = mean_sd(&v);
        Ok(Self {
            theta,
            sd,
            per_trial,
        })
    }
}

pub fn theta_trial(
    sys: &System,
    obs: &ObservableSpec,
    target: &TargetChoice,
    run: &ThetaRun,
    trial: usize,
) -> Result<ThetaTrial> {
    let (es, f0) = exceedance_trial(sys, obs, target, run, trial)?;
    Ok(ThetaTrial {
        trial,
        threshold: es.threshold,
        f0,
        coefficients: theta_hat(&es, run.k)?,
    })
}

pub fn estimate_theta(
    sys: &System,
    obs: &ObservableSpec,
    target: &TargetChoice,
    run: &ThetaRun,
    trials: usize,
) -> Result<ThetaEstimate> {
    let v = (0..trials)
        .map(|t| theta_trial(sys, obs, target, run, t))
        .collect::<Result<Vec<_>>>()?;
    ThetaEstimate::from_trials(v)
}

/// One solution `w` of `f(w) = f0` with its first return to the solution set.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PreimagePoint {
    pub w: f64,
    /// `k` such that `T^{k+1} w` is again a solution, first such `k`;
    /// `None` if no return was found.
    pub return_order: Option<usize>,
    /// `|(T^{k+1})'(w)|` at the return order.
    pub derivative: f64,
    /// Invariant density `h(w)`.
    pub density: f64,
    /// `|f'(w)|`
    pub slope: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PreimageOrbitData {
    pub points: Vec<PreimagePoint>,
    /// Survival fraction of an open system; 1 when closed.
    pub alpha: f64,
}

/// Follows every preimage under the expanding map of `sys` for up to
/// `max_order + 1` steps, recording the first return to the preimage set
/// and the derivative of `T^{k+1}` along the way.
pub fn orbit_data_for_points(
    sys: &System,
    preimages: &[Preimage],
    max_order: usize,
) -> Result<PreimageOrbitData> {
    let alpha = sys.survival_fraction().unwrap_or(1.0);
    let mut points = Vec::with_capacity(preimages.len());
    for p in preimages {
        let mut x = p.w;
        let mut deriv = 1.0;
        let mut found = None;
        for j in 1..=max_order + 1 {
            let Some((y, dy)) = sys.expanding_map(x) else {
                if j == 1 {
                    return Err(Error::Unsupported(format!(
                        "{} has no expanding interval map at {x}",
                        sys.spec().kind.name()
                    )));
                }
                break;
            };
            deriv *= dy;
            x = y;
            if preimages
                .iter()
                .any(|q| (q.w - x).abs() <= 1e-9 * (1.0 + q.w.abs()))
            {
                found = Some(j - 1);
                break;
            }
        }
        points.push(PreimagePoint {
            w: p.w,
            return_order: found,
            derivative: if found.is_some() { deriv } else { f64::INFINITY },
            density: p.density,
            slope: p.slope,
        });
    }
    Ok(PreimageOrbitData { points, alpha })
}

/// Preimages of `f0` and their return data, for a catalog observable on a
/// one-dimensional expanding map.
pub fn preimage_orbit_data(
    obs: &ObservableSpec,
    sys: &System,
    f0: f64,
    max_order: usize,
) -> Result<PreimageOrbitData> {
    let pre = preimage_data(obs, sys, f0)?;
    orbit_data_for_points(sys, &pre, max_order)
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AnalyticTheta {
    pub theta: f64,
    /// `q_0 ..` up to the largest return order present.
    pub q: Vec<f64>,
}

fn theta_from_data(data: &PreimageOrbitData, alpha: f64) -> Result<AnalyticTheta> {
    if data.points.is_empty() {
        return Err(Error::InvalidParameter("no preimages of f0".into()));
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "survival fraction must lie in (0, 1], got {alpha}"
        )));
    }
    if data
        .points
        .iter()
        .any(|p| !(p.density > 0.0 && p.slope > 0.0))
    {
        return Err(Error::InvalidParameter(
            "preimage densities and slopes must be positive".into(),
        ));
    }
    let top = data
        .points
        .iter()
        .filter_map(|p| p.return_order)
        .max();
    let mut q = vec![0.0; top.map_or(0, |k| k + 1)];
    for (i, p) in data.points.iter().enumerate() {
        let Some(k) = p.return_order else { continue };
        let others: f64 = data
            .points
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, y)| y.density / y.slope)
            .sum();
        let share = 1.0 / (1.0 + p.slope / p.density * others);
        q[k] += share / (alpha.powi(k as i32 + 1) * p.derivative);
    }
    Ok(AnalyticTheta {
        theta: 1.0 - q.iter().sum::<f64>(),
        q,
    })
}

/// `theta = 1 - sum_k q_k`, each `q_k` summing `1 / |(T^{k+1})'(w)|` over
/// preimages returning at order `k`, weighted by the share
/// `(h(w) / |f'(w)|) / sum_y h(y) / |f'(y)|`.
pub fn theta_analytic(data: &PreimageOrbitData) -> Result<AnalyticTheta> {
    theta_from_data(data, 1.0)
}

/// Open-system version: every `q_k` carries an extra `alpha^{-(k+1)}`.
pub fn theta_analytic_open(data: &PreimageOrbitData) -> Result<AnalyticTheta> {
    theta_from_data(data, data.alpha)
}

/// Period-`p` point of the ternary expanding map with digits `0^{p-1} 2`
/// repeated: `2 / (3^p - 1)`.
pub fn ternary_periodic_point(p: u32) -> f64 {
    2.0 / (3f64.powi(p as i32) - 1.0)
}
