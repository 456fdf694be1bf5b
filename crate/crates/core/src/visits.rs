//! Number of visits to a small ball up to a rescaled time `t`, and the
//! limiting laws: Poisson, Pólya-Aeppli and the compound Poisson law of two
//! periodic preimages.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::dynsys::System;
use crate::evt::{PhiStream, TargetChoice, TopQuantile};
use crate::extremal::PreimageOrbitData;
use crate::observables::{ObservableSpec, ResolvedTarget};
use crate::special::{ln_binomial, ln_factorial};
use crate::{Error, Result, SimRng};

/// Truncated pmfs report their missing mass; above this it is worth a warning.
pub const TAIL_WARNING: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CompoundPoissonParams {
    pub t: f64,
    pub b: [f64; 2],
    pub mu: [f64; 2],
}

impl CompoundPoissonParams {
    pub fn new(t: f64, b: [f64; 2], mu: [f64; 2]) -> Result<Self> {
        let p = Self { t, b, mu };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |s: alloc::string::String| Err(Error::InvalidParameter(s));
        if !(self.t > 0.0) {
            return bad(format!("t must be positive, got {}", self.t));
        }
        if self.b.iter().any(|b| !(0.0..1.0).contains(b)) {
            return bad(format!("b must lie in [0, 1), got {:?}", self.b));
        }
        if self.mu.iter().any(|m| !(*m >= 0.0)) || (self.mu[0] + self.mu[1] - 1.0).abs() > 1e-12 {
            return bad(format!("mu must be non-negative and sum to 1, got {:?}", self.mu));
        }
        Ok(())
    }

    /// `a_i = t mu_i (1 - b_i)^2`
    pub fn a(&self) -> [f64; 2] {
        [0, 1].map(|i| self.t * self.mu[i] * (1.0 - self.b[i]) * (1.0 - self.b[i]))
    }

    /// `1 - b_1 mu_1 - b_2 mu_2`
    pub fn theta(&self) -> f64 {
        1.0 - self.b[0] * self.mu[0] - self.b[1] * self.mu[1]
    }
}

/// Periodic preimage data entering the two-preimage law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodicPreimage {
    pub period: usize,
    /// `|(T^period)'(w)|`
    pub derivative: f64,
    pub density: f64,
    pub slope: f64,
}

/// `b_i = 1 / |(T^{p_i})'(w_i)|`,
/// `mu_1 = 1 / (1 + h(w_2) |f'(w_1)| / (h(w_1) |f'(w_2)|))`, `mu_2 = 1 - mu_1`.
pub fn two_preimage_params(
    pre1: PeriodicPreimage,
    pre2: PeriodicPreimage,
    t: f64,
) -> Result<CompoundPoissonParams> {
    for p in [&pre1, &pre2] {
        if p.period == 0 || !(p.derivative > 1.0) || !(p.density > 0.0) || !(p.slope > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "periodic preimage needs period >= 1, derivative > 1, positive density and slope: {p:?}"
            )));
        }
    }
    let mu1 = 1.0 / (1.0 + pre2.density * pre1.slope / (pre1.density * pre2.slope));
    CompoundPoissonParams::new(
        t,
        [1.0 / pre1.derivative, 1.0 / pre2.derivative],
        [mu1, 1.0 - mu1],
    )
}

/// Two-preimage parameters from return data, when both preimages return.
pub fn params_from_orbit_data(data: &PreimageOrbitData, t: f64) -> Result<CompoundPoissonParams> {
    if data.points.len() != 2 {
        return Err(Error::Unsupported(format!(
            "the two-preimage law needs exactly two preimages, got {}",
            data.points.len()
        )));
    }
    let per = |i: usize| -> Result<PeriodicPreimage> {
        let p = &data.points[i];
        let k = p.return_order.ok_or_else(|| {
            Error::Unsupported(format!("preimage {} does not return", p.w))
        })?;
        Ok(PeriodicPreimage {
            period: k + 1,
            derivative: p.derivative,
            density: p.density,
            slope: p.slope,
        })
    };
    two_preimage_params(per(0)?, per(1)?, t)
}

/// A pmf on `0..p.len()` and the mass beyond it.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Pmf {
    pub p: Vec<f64>,
    pub tail: f64,
}

impl Pmf {
    fn from_values(p: Vec<f64>) -> Self {
        let tail = (1.0 - p.iter().sum::<f64>()).max(0.0);
        Self { p, tail }
    }

    pub fn tail_warning(&self) -> bool {
        self.tail > TAIL_WARNING
    }

    pub fn mean(&self) -> f64 {
        self.p.iter().enumerate().map(|(k, p)| k as f64 * p).sum()
    }

    pub fn get(&self, k: usize) -> f64 {
        self.p.get(k).copied().unwrap_or(0.0)
    }
}

/// `p_0 = e^{-theta t}`, `p_n = (1/n) sum_{k<n} p_k (n - k) c_{n-k}` with
/// `c_j = a_1 b_1^{j-1} + a_2 b_2^{j-1}`: the Taylor coefficients of
/// `exp(-theta t + sum_i a_i z / (1 - b_i z))`. The recursion runs on a
/// rescaled copy so that neither `e^{-theta t}` nor the intermediate values
/// leave the floating-point range.
pub fn compound_poisson_pmf(params: &CompoundPoissonParams, k_max: usize) -> Result<Pmf> {
    params.validate()?;
    let a = params.a();
    let c: Vec<f64> = (0..=k_max)
        .map(|j| {
            if j == 0 {
                0.0
            } else {
                a[0] * params.b[0].powi(j as i32 - 1) + a[1] * params.b[1].powi(j as i32 - 1)
            }
        })
        .collect();
    let mut r = vec![0.0; k_max + 1];
    r[0] = 1.0;
    let mut log_scale = -params.theta() * params.t;
    for n in 1..=k_max {
        let s: f64 = (0..n).map(|k| r[k] * (n - k) as f64 * c[n - k]).sum();
        r[n] = s / n as f64;
        if r[n] > 1e250 {
            r[..=n].iter_mut().for_each(|v| *v *= 1e-250);
            log_scale += 250.0 * core::f64::consts::LN_10;
        }
    }
    Ok(Pmf::from_values(
        r.into_iter()
            .map(|v| if v > 0.0 { (v.ln() + log_scale).exp() } else { 0.0 })
            .collect(),
    ))
}

fn ln_poisson(t: f64, k: u64) -> f64 {
    if k == 0 {
        return -t;
    }
    k as f64 * t.ln() - t - ln_factorial(k)
}

/// `t^k e^{-t} / k!`, evaluated in log space.
pub fn poisson_pmf(t: f64, k: u64) -> f64 {
    if t == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    ln_poisson(t, k).exp()
}

/// `P(W = 0) = e^{-pt}` and, for `k >= 1`,
/// `e^{-pt} sum_{j=1}^{k} (1-p)^{k-j} p^j (pt)^j / j! C(k-1, j-1)`:
/// a Poisson(`pt`) number of clusters with geometric sizes of mean `1/p`.
pub fn polya_aeppli_pmf(p: f64, t: f64, k: u64) -> Result<f64> {
    if !(p > 0.0 && p <= 1.0) || !(t >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "Polya-Aeppli needs p in (0, 1] and t >= 0, got p = {p}, t = {t}"
        )));
    }
    let pt = p * t;
    if k == 0 {
        return Ok((-pt).exp());
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    let terms: Vec<f64> = (1..=k)
        .filter(|&j| j == k || p < 1.0)
        .map(|j| {
            let mut l = ln_poisson(pt, j) + j as f64 * p.ln() + ln_binomial(k - 1, j - 1);
            if j < k {
                l += (k - j) as f64 * (1.0 - p).ln();
            }
            l
        })
        .collect();
    let m = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return Ok(0.0);
    }
    Ok(m.exp() * terms.iter().map(|l| (l - m).exp()).sum::<f64>())
}

/// Pólya-Aeppli pmf up to the first `k` past the mean with tail below `tol`.
pub fn polya_aeppli_vec(p: f64, t: f64, tol: f64) -> Result<Pmf> {
    let mut v = Vec::new();
    let mut acc = 0.0;
    let mean = t;
    for k in 0.. {
        let x = polya_aeppli_pmf(p, t, k)?;
        acc += x;
        v.push(x);
        // past the mode the terms decay at least geometrically
        if (k as f64) > mean && (1.0 - acc < tol || x < 1e-3 * tol) {
            break;
        }
    }
    Ok(Pmf::from_values(v))
}

/// Poisson pmf with tail below `tol`.
pub fn poisson_vec(t: f64, tol: f64) -> Pmf {
    let mut v = Vec::new();
    let mut acc = 0.0;
    for k in 0u64.. {
        let x = poisson_pmf(t, k);
        acc += x;
        v.push(x);
        if (k as f64) > t && (1.0 - acc < tol || x < 1e-3 * tol) {
            break;
        }
    }
    Pmf::from_values(v)
}

/// `(1/2) sum_k |a_k - b_k|` over the union of supports.
pub fn total_variation(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().max(b.len());
    0.5 * (0..n)
        .map(|k| (a.get(k).copied().unwrap_or(0.0) - b.get(k).copied().unwrap_or(0.0)).abs())
        .sum::<f64>()
}

/// Ball radius, time window and ensemble of a visit experiment.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct VisitRun {
    pub r: f64,
    pub t: f64,
    /// Longest orbit a member may use; the horizon `t / measure` must fit.
    pub orbit_len: usize,
    pub ensemble: usize,
    /// Orbit length used to estimate the ball's measure.
    pub pilot_len: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct VisitDistribution {
    pub counts: Vec<u64>,
    pub pmf: Vec<f64>,
    pub t: f64,
    pub r: f64,
    pub measure_estimate: f64,
    /// The same estimate from the first half of the pilot orbit.
    pub measure_half_pilot: f64,
    pub horizon: usize,
    pub ensemble: usize,
}

/// Pilot estimate of `f_* mu(B(f0, r))` as a hit frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BallMeasure {
    pub measure: f64,
    pub measure_half: f64,
    pub horizon: usize,
}

fn pilot_rng(seed: u64) -> SimRng {
    SimRng::derived(seed, 0, 3)
}

/// `r = e^{-u}`, `u` the `p`-quantile of `phi` along a pilot orbit.
pub fn radius_from_quantile(
    sys: &System,
    obs: &ObservableSpec,
    target: &ResolvedTarget,
    p: f64,
    pilot_len: usize,
    seed: u64,
) -> Result<f64> {
    let mut rng = pilot_rng(seed);
    let x0 = sys.settled_state(&mut rng);
    let mut s = PhiStream::new(sys, obs, target, x0, rng)?;
    let mut top = TopQuantile::new(p, pilot_len)?;
    for _ in 0..pilot_len {
        top.push(s.next_phi()?);
    }
    Ok((-top.value()?).exp())
}

pub fn ball_measure(
    sys: &System,
    obs: &ObservableSpec,
    target: &ResolvedTarget,
    run: &VisitRun,
) -> Result<BallMeasure> {
    if !(run.r > 0.0) || !(run.t > 0.0) || run.pilot_len < 2 {
        return Err(Error::InvalidParameter(format!(
            "visit runs need r > 0, t > 0 and a pilot of at least 2 steps (r = {}, t = {}, pilot = {})",
            run.r, run.t, run.pilot_len
        )));
    }
    let u = -run.r.ln();
    let mut rng = pilot_rng(run.seed);
    let x0 = sys.settled_state(&mut rng);
    let mut s = PhiStream::new(sys, obs, target, x0, rng)?;
    let half = run.pilot_len / 2;
    let (mut hits, mut hits_half) = (0usize, 0usize);
    for i in 0..run.pilot_len {
        if s.next_phi()? > u {
            hits += 1;
            if i < half {
                hits_half += 1;
            }
        }
    }
    if hits == 0 {
        return Err(Error::InsufficientData {
            what: "pilot hits of the ball",
            got: 0,
            need: 1,
        });
    }
    let measure = hits as f64 / run.pilot_len as f64;
    let horizon = (run.t / measure).floor() as usize;
    if horizon > run.orbit_len {
        return Err(Error::HorizonTooLong {
            horizon,
            orbit: run.orbit_len,
        });
    }
    Ok(BallMeasure {
        measure,
        measure_half: hits_half as f64 / half as f64,
        horizon,
    })
}

/// Hits of `B(f0, r)` by `f(T^l x)`, `l = 1..=horizon`, from a settled
/// random start on stream `member`.
pub fn visit_member(
    sys: &System,
    obs: &ObservableSpec,
    target: &ResolvedTarget,
    r: f64,
    horizon: usize,
    seed: u64,
    member: usize,
) -> Result<u64> {
    let u = -r.ln();
    let mut rng = SimRng::new(seed, member as u64);
    let x0 = sys.settled_state(&mut rng);
    let mut s = PhiStream::new(sys, obs, target, x0, rng)?;
    s.next_phi()?;
    let mut n = 0;
    for _ in 0..horizon {
        if s.next_phi()? > u {
            n += 1;
        }
    }
    Ok(n)
}

impl VisitDistribution {
    pub fn from_counts(member_counts: &[u64], t: f64, r: f64, ball: &BallMeasure) -> Self {
        let top = member_counts.iter().copied().max().unwrap_or(0) as usize;
        let mut counts = vec![0u64; top + 1];
        for &c in member_counts {
            counts[c as usize] += 1;
        }
        let total = member_counts.len() as f64;
        Self {
            pmf: counts.iter().map(|&c| c as f64 / total).collect(),
            counts,
            t,
            r,
            measure_estimate: ball.measure,
            measure_half_pilot: ball.measure_half,
            horizon: ball.horizon,
            ensemble: member_counts.len(),
        }
    }
}

/// Empirical law of the number of visits over an ensemble of trajectories.
pub fn visit_counts(
    sys: &System,
    obs: &ObservableSpec,
    target: &TargetChoice,
    run: &VisitRun,
) -> Result<VisitDistribution> {
    if run.ensemble == 0 {
        return Err(Error::InvalidParameter("empty ensemble".into()));
    }
    let (obs, resolved) = target.instantiate(obs, sys, run.seed, 0)?;
    let obs = &obs;
    let ball = ball_measure(sys, obs, &resolved, run)?;
    let counts = (0..run.ensemble)
        .map(|m| visit_member(sys, obs, &resolved, run.r, ball.horizon, run.seed, m))
        .collect::<Result<Vec<_>>>()?;
    Ok(VisitDistribution::from_counts(&counts, run.t, run.r, &ball))
}
