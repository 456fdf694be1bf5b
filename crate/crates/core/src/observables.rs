//! The observable catalog, the extreme-value functional
//! `phi(x) = -ln dist(f(x), f0)`, and exact preimage data for the scalar
//! one-dimensional kinds.

use alloc::boxed::Box;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::dynsys::{State, System};
use crate::{Error, Result, SimRng};

/// Values closer than this to a pole of a reciprocal component are reported
/// as `+inf` and skipped downstream.
pub const POLE_GUARD: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AffineBranch {
    pub lo: f64,
    pub hi: f64,
    pub slope: f64,
    pub intercept: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Monomial {
    pub coef: f64,
    /// Exponent of each state coordinate; missing trailing entries are 0.
    pub exponents: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "type", rename_all = "snake_case"))]
pub enum ObservableKind {
    Identity,
    Coordinate { index: usize },
    /// `(x + y) / 2`.
    Mean2d,
    /// `a x + b y + c`.
    Affine { a: f64, b: f64, c: f64 },
    /// Standard bivariate normal density centred at `(x0, y0)`.
    Gaussian2d { x0: f64, y0: f64 },
    /// `x^a` (odd extension for negative `x`).
    Power { a: f64 },
    /// `(x - 1/2)(x - 1/4)`.
    QuadraticRoots,
    PiecewiseAffine { branches: Vec<AffineBranch> },
    /// Signed distance `(a x + b y + c) / sqrt(a^2 + b^2)` to a line.
    DistanceToLine { a: f64, b: f64, c: f64 },
    /// Signed distance `|p - center| - radius` to a circle.
    DistanceToCircle { cx: f64, cy: f64, radius: f64 },
    VectorList { parts: Vec<ObservableSpec> },
    /// `(f(x), f(T^lag x), ..., f(T^{(k-1) lag} x))`.
    Delay {
        base: Box<ObservableSpec>,
        k: usize,
        #[cfg_attr(feature = "serde", serde(default = "one"))]
        lag: usize,
    },
    /// Arithmetic mean of all state components.
    SpatialMean,
    /// Sum of monomials in the state coordinates.
    Polynomial { terms: Vec<Monomial> },
    /// `1 / x_index`, `+inf` within [`POLE_GUARD`] of the pole.
    Reciprocal { index: usize },
}

#[cfg(feature = "serde")]
fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct NoiseShift {
    pub shift: f64,
    pub probability: f64,
}

/// Independent perturbation of every evaluation of the observable.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "type", rename_all = "snake_case"))]
pub enum ObsNoiseSpec {
    /// Uniform on `[-eta, eta]`, drawn per component.
    AdditiveUniform { eta: f64 },
    /// One of finitely many shifts, drawn per component.
    Discrete { shifts: Vec<NoiseShift> },
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ObservableSpec {
    pub kind: ObservableKind,
    #[cfg_attr(feature = "serde", serde(default))]
    pub noise: Option<ObsNoiseSpec>,
}

impl From<ObservableKind> for ObservableSpec {
    fn from(kind: ObservableKind) -> Self {
        Self { kind, noise: None }
    }
}

impl ObservableSpec {
    pub fn new(kind: ObservableKind) -> Self {
        kind.into()
    }

    pub fn with_noise(mut self, noise: ObsNoiseSpec) -> Self {
        self.noise = Some(noise);
        self
    }

    /// Two straight pieces through `(0, 0)`, `(a, 1)` and `(1, 0)`.
    pub fn tent(a: f64) -> Self {
        ObservableKind::PiecewiseAffine {
            branches: vec![
                AffineBranch {
                    lo: 0.0,
                    hi: a,
                    slope: 1.0 / a,
                    intercept: 0.0,
                },
                AffineBranch {
                    lo: a,
                    hi: 1.0,
                    slope: 1.0 / (a - 1.0),
                    intercept: -1.0 / (a - 1.0),
                },
            ],
        }
        .into()
    }

    /// `f(x) = x` on `[-1, 0]`, `-2x + 11/2 - 4 sqrt 2` on `(0, 1]`, so that
    /// the Hemmer fixed point `3 - 2 sqrt 2` and `-1/2` share the value `-1/2`.
    pub fn hemmer_two_slope() -> Self {
        ObservableKind::PiecewiseAffine {
            branches: vec![
                AffineBranch {
                    lo: -1.0,
                    hi: 0.0,
                    slope: 1.0,
                    intercept: 0.0,
                },
                AffineBranch {
                    lo: 0.0,
                    hi: 1.0,
                    slope: -2.0,
                    intercept: 5.5 - 4.0 * core::f64::consts::SQRT_2,
                },
            ],
        }
        .into()
    }

    pub fn delay(base: ObservableSpec, k: usize) -> Self {
        ObservableKind::Delay {
            base: Box::new(base),
            k,
            lag: 1,
        }
        .into()
    }

    /// Copy with every centred kind (`Gaussian2d`) moved to `z`; other kinds
    /// are unchanged.
    pub fn recentered(&self, z: &[f64]) -> Self {
        let kind = match &self.kind {
            ObservableKind::Gaussian2d { .. } if z.len() >= 2 => ObservableKind::Gaussian2d {
                x0: z[0],
                y0: z[1],
            },
            ObservableKind::VectorList { parts } => ObservableKind::VectorList {
                parts: parts.iter().map(|p| p.recentered(z)).collect(),
            },
            ObservableKind::Delay { base, k, lag } => ObservableKind::Delay {
                base: Box::new(base.recentered(z)),
                k: *k,
                lag: *lag,
            },
            other => other.clone(),
        };
        Self {
            kind,
            noise: self.noise.clone(),
        }
    }

    /// Dimension of `f(x)` for states of dimension `input_dim`.
    pub fn output_dim(&self, input_dim: usize) -> usize {
        match &self.kind {
            ObservableKind::Identity => input_dim,
            ObservableKind::VectorList { parts } => {
                parts.iter().map(|p| p.output_dim(input_dim)).sum()
            }
            ObservableKind::Delay { base, k, .. } => k * base.output_dim(input_dim),
            _ => 1,
        }
    }

    pub fn validate(&self, input_dim: usize) -> Result<()> {
        let bad = |s: alloc::string::String| Err(Error::InvalidParameter(s));
        match &self.kind {
            ObservableKind::Coordinate { index } | ObservableKind::Reciprocal { index } => {
                if *index >= input_dim {
                    return bad(format!(
                        "coordinate {index} out of range for dimension {input_dim}"
                    ));
                }
            }
            ObservableKind::Power { a } if !(*a > 0.0) => {
                return bad(format!("power exponent must be positive, got {a}"));
            }
            ObservableKind::PiecewiseAffine { branches } => {
                if branches.is_empty() {
                    return bad("piecewise observable without branches".into());
                }
                if branches.iter().any(|b| b.slope == 0.0 || !(b.lo <= b.hi)) {
                    return bad("piecewise branches need nonzero slopes and lo <= hi".into());
                }
            }
            ObservableKind::DistanceToLine { a, b, .. } if *a == 0.0 && *b == 0.0 => {
                return bad("line needs (a, b) != (0, 0)".into());
            }
            ObservableKind::DistanceToCircle { radius, .. } if !(*radius >= 0.0) => {
                return bad(format!("circle radius must be >= 0, got {radius}"));
            }
            ObservableKind::VectorList { parts } => {
                if parts.is_empty() {
                    return bad("empty vector observable".into());
                }
                for p in parts {
                    p.validate(input_dim)?;
                }
            }
            ObservableKind::Delay { base, k, lag } => {
                if *k < 1 || *lag < 1 {
                    return bad("delay needs k >= 1 and lag >= 1".into());
                }
                base.validate(input_dim)?;
            }
            _ => {}
        }
        match &self.noise {
            Some(ObsNoiseSpec::AdditiveUniform { eta }) if !(*eta > 0.0) => {
                bad(format!("observable noise half-width must be positive, got {eta}"))
            }
            Some(ObsNoiseSpec::Discrete { shifts }) => {
                let total: f64 = shifts.iter().map(|s| s.probability).sum();
                if shifts.is_empty()
                    || shifts.iter().any(|s| !(s.probability > 0.0))
                    || (total - 1.0).abs() > 1e-9
                {
                    bad("discrete observable noise probabilities must be positive and sum to 1".into())
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }

    /// `f(x)` written into `out` (length [`Self::output_dim`]). Delay kinds
    /// advance a copy of `x` with `sys`.
    pub fn evaluate_into(
        &self,
        x: &[f64],
        sys: Option<&System>,
        rng: &mut SimRng,
        out: &mut [f64],
    ) -> Result<()> {
        self.evaluate_clean(x, sys, rng, out)?;
        self.apply_noise(rng, out);
        Ok(())
    }

    /// Noise-free value of the observable.
    pub fn evaluate_clean(
        &self,
        x: &[f64],
        sys: Option<&System>,
        rng: &mut SimRng,
        out: &mut [f64],
    ) -> Result<()> {
        match &self.kind {
            ObservableKind::Identity => out.copy_from_slice(&x[..out.len()]),
            ObservableKind::VectorList { parts } => {
                let mut offset = 0;
                for p in parts {
                    let m = p.output_dim(x.len());
                    p.evaluate_into(x, sys, rng, &mut out[offset..offset + m])?;
                    offset += m;
                }
            }
            ObservableKind::Delay { base, k, lag } => {
                let sys = sys.ok_or_else(|| {
                    Error::InvalidParameter("delay observables need the system".into())
                })?;
                let d = sys.dim();
                if x.len() != d {
                    return Err(Error::InvalidParameter(format!(
                        "delay observable got a {}-dimensional state, system has {d}",
                        x.len()
                    )));
                }
                let m = base.output_dim(d);
                let mut state: State = [0.0; 3];
                state[..d].copy_from_slice(x);
                for j in 0..*k {
                    if j > 0 {
                        for _ in 0..*lag {
                            sys.advance(&mut state, rng);
                        }
                    }
                    base.evaluate_into(&state[..d], Some(sys), rng, &mut out[j * m..(j + 1) * m])?;
                }
            }
            kind => out[0] = scalar_value(kind, x),
        }
        Ok(())
    }

    #[inline]
    pub(crate) fn apply_noise(&self, rng: &mut SimRng, out: &mut [f64]) {
        match &self.noise {
            None => {}
            Some(ObsNoiseSpec::AdditiveUniform { eta }) => {
                for v in out.iter_mut() {
                    *v += rng.uniform_in(-eta, *eta);
                }
            }
            Some(ObsNoiseSpec::Discrete { shifts }) => {
                for v in out.iter_mut() {
                    let u = rng.uniform();
                    let mut acc = 0.0;
                    let mut shift = shifts[shifts.len() - 1].shift;
                    for s in shifts {
                        acc += s.probability;
                        if u < acc {
                            shift = s.shift;
                            break;
                        }
                    }
                    *v += shift;
                }
            }
        }
    }

    /// Convenience wrapper returning a fresh vector.
    pub fn evaluate(&self, sys: &System, x: &[f64], rng: &mut SimRng) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.output_dim(x.len())];
        self.evaluate_into(x, Some(sys), rng, &mut out)?;
        Ok(out)
    }
}

/// Scalar catalog kinds.
#[inline]
pub(crate) fn scalar_value(kind: &ObservableKind, x: &[f64]) -> f64 {
    let y = |x: &[f64]| x.get(1).copied().unwrap_or(0.0);
    match kind {
        ObservableKind::Coordinate { index } => x[*index],
        ObservableKind::Mean2d => 0.5 * (x[0] + y(x)),
        ObservableKind::Affine { a, b, c } => a * x[0] + b * y(x) + c,
        ObservableKind::Gaussian2d { x0, y0 } => {
            let dx = x[0] - x0;
            let dy = y(x) - y0;
            (-0.5 * (dx * dx + dy * dy)).exp() / (2.0 * core::f64::consts::PI)
        }
        ObservableKind::Power { a } => {
            let m = x[0].abs().powf(*a);
            if x[0] < 0.0 {
                -m
            } else {
                m
            }
        }
        ObservableKind::QuadraticRoots => (x[0] - 0.5) * (x[0] - 0.25),
        ObservableKind::PiecewiseAffine { branches } => branches
            .iter()
            .find(|b| x[0] >= b.lo && x[0] <= b.hi)
            .map_or(f64::NAN, |b| b.slope * x[0] + b.intercept),
        ObservableKind::DistanceToLine { a, b, c } => {
            (a * x[0] + b * y(x) + c) / (a * a + b * b).sqrt()
        }
        ObservableKind::DistanceToCircle { cx, cy, radius } => {
            let dx = x[0] - cx;
            let dy = y(x) - cy;
            (dx * dx + dy * dy).sqrt() - radius
        }
        ObservableKind::SpatialMean => x.iter().sum::<f64>() / x.len() as f64,
        ObservableKind::Polynomial { terms } => terms
            .iter()
            .map(|t| {
                t.exponents
                    .iter()
                    .enumerate()
                    .fold(t.coef, |acc, (i, &e)| acc * x[i].powi(e as i32))
            })
            .sum(),
        ObservableKind::Reciprocal { index } => {
            if x[*index].abs() < POLE_GUARD {
                f64::INFINITY
            } else {
                1.0 / x[*index]
            }
        }
        ObservableKind::Identity
        | ObservableKind::VectorList { .. }
        | ObservableKind::Delay { .. } => unreachable!("vector kinds handled by the caller"),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Metric {
    #[default]
    Euclidean,
    Chebyshev,
}

impl Metric {
    #[inline]
    pub fn dist(self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            Metric::Euclidean => a
                .iter()
                .zip(b)
                .map(|(u, v)| (u - v) * (u - v))
                .sum::<f64>()
                .sqrt(),
            Metric::Chebyshev => a
                .iter()
                .zip(b)
                .fold(0.0, |m, (u, v)| m.max((u - v).abs())),
        }
    }
}

/// Where the extreme-value functional is centred.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "type", rename_all = "snake_case"))]
pub enum TargetPoint {
    /// A phase-space point `z`; the target value is the noise-free `f(z)`.
    State { z: Vec<f64> },
    /// The target value `f0` itself.
    Value { f0: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TargetSpec {
    pub point: TargetPoint,
    #[cfg_attr(feature = "serde", serde(default))]
    pub metric: Metric,
}

impl TargetSpec {
    pub fn value(f0: &[f64]) -> Self {
        Self {
            point: TargetPoint::Value { f0: f0.to_vec() },
            metric: Metric::Euclidean,
        }
    }

    pub fn state(z: &[f64]) -> Self {
        Self {
            point: TargetPoint::State { z: z.to_vec() },
            metric: Metric::Euclidean,
        }
    }

    pub fn with_metric(mut self, metric: Metric) -> Self {
        self.metric = metric;
        self
    }

    /// Freezes `f0`.
    pub fn resolve(&self, obs: &ObservableSpec, sys: &System) -> Result<ResolvedTarget> {
        let f0 = match &self.point {
            TargetPoint::Value { f0 } => f0.clone(),
            TargetPoint::State { z } => {
                let mut rng = SimRng::new(0, 0);
                let mut out = vec![0.0; obs.output_dim(z.len())];
                obs.evaluate_clean(z, Some(sys), &mut rng, &mut out)?;
                out
            }
        };
        let m = obs.output_dim(sys.dim());
        if f0.len() != m {
            return Err(Error::InvalidParameter(format!(
                "target value has dimension {}, observable has {m}",
                f0.len()
            )));
        }
        Ok(ResolvedTarget {
            f0,
            metric: self.metric,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedTarget {
    pub f0: Vec<f64>,
    pub metric: Metric,
}

impl ResolvedTarget {
    /// `-ln dist(v, f0)`; NaN when `v` has a non-finite component (a pole).
    #[inline]
    pub fn phi_of_value(&self, v: &[f64]) -> f64 {
        if v.iter().any(|c| !c.is_finite()) {
            return f64::NAN;
        }
        -self.metric.dist(v, &self.f0).ln()
    }
}

/// `phi(x) = -ln dist(f(x), f0)`, `+inf` exactly when `f(x) = f0`.
pub fn phi(
    obs: &ObservableSpec,
    sys: &System,
    x: &[f64],
    target: &ResolvedTarget,
    rng: &mut SimRng,
) -> Result<f64> {
    let v = obs.evaluate(sys, x, rng)?;
    Ok(target.phi_of_value(&v))
}

/// One solution `w` of `f(w) = f0` with the local data the extremal-index
/// formulas need.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Preimage {
    pub w: f64,
    /// `|f'(w)|`
    pub slope: f64,
    /// Invariant density `h(w)`
    pub density: f64,
}

/// All preimages of `f0` for scalar one-dimensional catalog observables,
/// solved in closed form branch by branch.
pub fn preimage_data(obs: &ObservableSpec, sys: &System, f0: f64) -> Result<Vec<Preimage>> {
    if sys.dim() != 1 {
        return Err(Error::Unsupported(
            "preimage data needs a one-dimensional system".into(),
        ));
    }
    let (lo, hi) = match sys.spec().kind {
        crate::dynsys::MapKind::Hemmer => (-1.0, 1.0),
        _ => (0.0, 1.0),
    };
    let inside = |w: f64| w >= lo && w <= hi;
    let mut roots: Vec<(f64, f64)> = Vec::new();
    match &obs.kind {
        ObservableKind::Identity | ObservableKind::Coordinate { index: 0 } => roots.push((f0, 1.0)),
        ObservableKind::Affine { a, c, .. } if *a != 0.0 => roots.push(((f0 - c) / a, a.abs())),
        ObservableKind::Power { a } => {
            if f0 == 0.0 {
                return Err(Error::Unsupported(
                    "x^a has no finite nonzero derivative at 0".into(),
                ));
            }
            let w = f0.signum() * f0.abs().powf(1.0 / a);
            roots.push((w, a * w.abs().powf(a - 1.0)));
        }
        ObservableKind::QuadraticRoots => {
            // x^2 - 3x/4 + 1/8 - f0 = 0
            let disc = 0.5625 - 4.0 * (0.125 - f0);
            if disc > 0.0 {
                let s = disc.sqrt();
                for w in [(0.75 - s) / 2.0, (0.75 + s) / 2.0] {
                    roots.push((w, (2.0 * w - 0.75).abs()));
                }
            } else if disc == 0.0 {
                return Err(Error::Unsupported(
                    "f0 is the critical value of the quadratic".into(),
                ));
            }
        }
        ObservableKind::PiecewiseAffine { branches } => {
            for b in branches {
                let w = (f0 - b.intercept) / b.slope;
                if w >= b.lo && w <= b.hi && !roots.iter().any(|(r, _)| (r - w).abs() < 1e-14) {
                    roots.push((w, b.slope.abs()));
                }
            }
        }
        _ => {
            return Err(Error::Unsupported(format!(
                "no closed-form inverse for {:?}",
                obs.kind
            )))
        }
    }
    roots
        .into_iter()
        .filter(|(w, _)| inside(*w))
        .map(|(w, slope)| {
            let density = sys.invariant_density(w).ok_or_else(|| {
                Error::Unsupported(format!(
                    "no closed-form invariant density for {}",
                    sys.spec().kind.name()
                ))
            })?;
            Ok(Preimage { w, slope, density })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynsys::{MapKind, SystemSpec};

    fn circle3() -> System {
        SystemSpec::linear_circle(3).compile().unwrap()
    }

    fn eval(obs: &ObservableSpec, x: &[f64]) -> Vec<f64> {
        let sys = SystemSpec::baker(0.25, 0.3, 0.2).compile().unwrap();
        obs.evaluate(&sys, x, &mut SimRng::new(0, 0)).unwrap()
    }

    #[test]
    fn mean_and_gaussian() {
        assert!((eval(&ObservableKind::Mean2d.into(), &[0.2, 0.4])[0] - 0.3).abs() < 1e-15);
        let g: ObservableSpec = ObservableKind::Gaussian2d { x0: 0.3, y0: 0.6 }.into();
        let v = eval(&g, &[0.3, 0.6])[0];
        assert!((v - 1.0 / (2.0 * core::f64::consts::PI)).abs() < 1e-15);
    }

    #[test]
    fn quadratic_roots_vanish() {
        let q: ObservableSpec = ObservableKind::QuadraticRoots.into();
        assert_eq!(eval(&q, &[0.5])[0], 0.0);
        assert_eq!(eval(&q, &[0.25])[0], 0.0);
    }

    #[test]
    fn phi_identity_and_power() {
        let sys = circle3();
        let mut rng = SimRng::new(0, 0);
        let id: ObservableSpec = ObservableKind::Identity.into();
        let t = TargetSpec::value(&[0.5]).resolve(&id, &sys).unwrap();
        let p = phi(&id, &sys, &[0.5 + (-3.0f64).exp()], &t, &mut rng).unwrap();
        assert!((p - 3.0).abs() < 1e-9);
        assert_eq!(phi(&id, &sys, &[0.5], &t, &mut rng).unwrap(), f64::INFINITY);

        let pw: ObservableSpec = ObservableKind::Power { a: 2.0 }.into();
        let t0 = TargetSpec::state(&[0.0]).resolve(&pw, &sys).unwrap();
        let u = 1.7;
        let p = phi(&pw, &sys, &[(-u).exp()], &t0, &mut rng).unwrap();
        assert!((p - 2.0 * u).abs() < 1e-12);
    }

    #[test]
    fn power_at_zero_is_a_value() {
        let pw: ObservableSpec = ObservableKind::Power { a: 0.5 }.into();
        assert_eq!(eval(&pw, &[0.0])[0], 0.0);
    }

    #[test]
    fn reciprocal_pole_sentinel() {
        let r: ObservableSpec = ObservableKind::Reciprocal { index: 0 }.into();
        assert_eq!(eval(&r, &[1e-13, 0.1])[0], f64::INFINITY);
        assert_eq!(eval(&r, &[0.5, 0.1])[0], 2.0);
        let t = ResolvedTarget {
            f0: vec![1.0],
            metric: Metric::Euclidean,
        };
        assert!(t.phi_of_value(&[f64::INFINITY]).is_nan());
    }

    #[test]
    fn output_dimensions() {
        let id: ObservableSpec = ObservableKind::Identity.into();
        assert_eq!(id.output_dim(3), 3);
        let d = ObservableSpec::delay(ObservableKind::Coordinate { index: 0 }.into(), 4);
        assert_eq!(d.output_dim(3), 4);
        let v: ObservableSpec = ObservableKind::VectorList {
            parts: vec![id, ObservableKind::Mean2d.into()],
        }
        .into();
        assert_eq!(v.output_dim(2), 3);
    }

    #[test]
    fn delay_one_is_base() {
        let sys = SystemSpec::lorenz().compile().unwrap();
        let base: ObservableSpec = ObservableKind::Coordinate { index: 0 }.into();
        let d1 = ObservableSpec::delay(base.clone(), 1);
        let x = [1.0, 2.0, 20.0];
        let mut rng = SimRng::new(0, 0);
        assert_eq!(
            d1.evaluate(&sys, &x, &mut rng).unwrap(),
            base.evaluate(&sys, &x, &mut rng).unwrap()
        );
        let d3 = ObservableSpec::delay(base, 3).evaluate(&sys, &x, &mut rng).unwrap();
        let mut s = x;
        let mut y = [0.0; 3];
        y[..].copy_from_slice(&s);
        sys.advance(&mut y, &mut rng);
        assert_eq!(d3[1], y[0]);
        s = y;
        sys.advance(&mut s, &mut rng);
        assert_eq!(d3[2], s[0]);
    }

    #[test]
    fn line_and_circle_distance() {
        let l: ObservableSpec = ObservableKind::DistanceToLine { a: 3.0, b: 4.0, c: -1.0 }.into();
        assert!((eval(&l, &[1.0, 1.0])[0] - 1.2).abs() < 1e-15);
        let c: ObservableSpec = ObservableKind::DistanceToCircle {
            cx: 0.5,
            cy: 0.5,
            radius: 0.25,
        }
        .into();
        assert!((eval(&c, &[0.5, 1.0])[0] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn metrics() {
        assert_eq!(Metric::Chebyshev.dist(&[0.0, 0.0], &[3.0, -4.0]), 4.0);
        assert_eq!(Metric::Euclidean.dist(&[0.0, 0.0], &[3.0, -4.0]), 5.0);
    }

    #[test]
    fn polynomial_terms() {
        let p: ObservableSpec = ObservableKind::Polynomial {
            terms: vec![
                Monomial { coef: 1.0, exponents: vec![2] },
                Monomial { coef: -1.0, exponents: vec![0, 1] },
            ],
        }
        .into();
        assert!((eval(&p, &[0.5, 0.2])[0] - 0.05).abs() < 1e-15);
    }

    #[test]
    fn preimages_of_quadratic() {
        let q: ObservableSpec = ObservableKind::QuadraticRoots.into();
        let mut pre = preimage_data(&q, &circle3(), 0.0).unwrap();
        pre.sort_by(|a, b| a.w.partial_cmp(&b.w).unwrap());
        assert_eq!(pre.len(), 2);
        assert!((pre[0].w - 0.25).abs() < 1e-15 && (pre[1].w - 0.5).abs() < 1e-15);
        for p in &pre {
            assert!((p.slope - 0.25).abs() < 1e-15);
            assert_eq!(p.density, 1.0);
        }
    }

    #[test]
    fn preimages_of_tent() {
        let a = 2.0 / core::f64::consts::PI;
        let tent = ObservableSpec::tent(a);
        let f0 = 0.5 / a;
        let pre = preimage_data(&tent, &circle3(), f0).unwrap();
        assert_eq!(pre.len(), 2);
        assert!((pre[0].w - 0.5).abs() < 1e-15);
        assert!((pre[0].slope - 1.0 / a).abs() < 1e-12);
        assert!((pre[1].slope - 1.0 / (a - 1.0).abs()).abs() < 1e-12);
        // second branch inverse evaluated analytically: 1 + (a - 1) / (2a)
        assert!((pre[1].w - (1.0 + (a - 1.0) / (2.0 * a))).abs() < 1e-14);
    }

    #[test]
    fn preimages_identity_and_hemmer() {
        let id: ObservableSpec = ObservableKind::Identity.into();
        let pre = preimage_data(&id, &circle3(), 0.3).unwrap();
        assert_eq!(pre, vec![Preimage { w: 0.3, slope: 1.0, density: 1.0 }]);

        let hem = SystemSpec::new(MapKind::Hemmer).compile().unwrap();
        let pre = preimage_data(&ObservableSpec::hemmer_two_slope(), &hem, -0.5).unwrap();
        assert_eq!(pre.len(), 2);
        assert!((pre[0].w + 0.5).abs() < 1e-15 && (pre[0].density - 0.75).abs() < 1e-15);
        let z1 = 3.0 - 2.0 * core::f64::consts::SQRT_2;
        assert!((pre[1].w - z1).abs() < 1e-14 && pre[1].slope == 2.0);
    }

    #[test]
    fn preimages_unsupported() {
        let g: ObservableSpec = ObservableKind::Gaussian2d { x0: 0.0, y0: 0.0 }.into();
        assert!(matches!(
            preimage_data(&g, &circle3(), 0.1),
            Err(Error::Unsupported(_))
        ));
        let baker = SystemSpec::baker(0.25, 0.3, 0.2).compile().unwrap();
        assert!(preimage_data(&ObservableKind::Identity.into(), &baker, 0.1).is_err());
    }

    #[test]
    fn observable_noise_mean() {
        let sys = circle3();
        let obs = ObservableSpec::new(ObservableKind::Identity)
            .with_noise(ObsNoiseSpec::AdditiveUniform { eta: 0.1 });
        let mut rng = SimRng::new(4, 0);
        let n = 100_000;
        let mean: f64 = (0..n)
            .map(|_| obs.evaluate(&sys, &[0.4], &mut rng).unwrap()[0])
            .sum::<f64>()
            / n as f64;
        assert!((mean - 0.4).abs() < 3.0 * 0.1 / (n as f64).sqrt());
    }
}
