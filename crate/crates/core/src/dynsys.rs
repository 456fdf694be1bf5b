//! Deterministic and randomly perturbed maps that generate long orbits.

use alloc::format;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::{Error, Result, SimRng};

/// A phase-space point; systems of dimension `d < 3` leave trailing slots at 0.
pub type State = [f64; 3];

/// Amplitude of the per-step jitter that keeps even-slope circle maps, and the
/// symmetric baker map, from collapsing onto 0 in binary floating point.
pub const CIRCLE_JITTER: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "type", rename_all = "snake_case"))]
pub enum MapKind {
    /// `x -> m x mod 1`.
    LinearCircle {
        m: u32,
        /// `None` means on for even `m`.
        #[cfg_attr(feature = "serde", serde(default))]
        jitter: Option<bool>,
    },
    /// `x -> s_0 x + o_0 mod 1` on `[0, 1/2)`, `s_1 x + o_1 mod 1` on `[1/2, 1)`.
    TwoBranchAffineCircle { slopes: [f64; 2], offsets: [f64; 2] },
    /// `x -> 1 - 2 sqrt|x|` on `[-1, 1]`.
    Hemmer,
    Baker {
        alpha: f64,
        lambda_a: f64,
        lambda_b: f64,
    },
    /// Chaos game of a one-dimensional IFS; the first map is anchored at 0,
    /// the last at 1, gaps between images are equal.
    CantorIfs1d { ratios: Vec<f64>, weights: Vec<f64> },
    /// Product of two ternary Cantor sets with balanced weights.
    CantorProduct2d,
    /// Lorenz 1963 flow integrated by explicit Euler steps.
    LorenzEuler {
        sigma: f64,
        rho: f64,
        beta: f64,
        h: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "type", rename_all = "snake_case"))]
pub enum NoiseSpec {
    #[default]
    None,
    /// Add a uniform draw from `[-eta, eta]` to every coordinate, then fold mod 1.
    AdditiveUniformMod1 { eta: f64 },
    /// At every step apply one of the listed maps, chosen with its probability.
    DiscreteMapSwitch { maps: Vec<WeightedMap> },
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WeightedMap {
    pub map: MapKind,
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SystemSpec {
    pub kind: MapKind,
    #[cfg_attr(feature = "serde", serde(default))]
    pub noise: NoiseSpec,
}

impl SystemSpec {
    pub fn new(kind: MapKind) -> Self {
        Self {
            kind,
            noise: NoiseSpec::None,
        }
    }

    pub fn with_noise(mut self, noise: NoiseSpec) -> Self {
        self.noise = noise;
        self
    }

    pub fn linear_circle(m: u32) -> Self {
        Self::new(MapKind::LinearCircle { m, jitter: None })
    }

    pub fn baker(alpha: f64, lambda_a: f64, lambda_b: f64) -> Self {
        Self::new(MapKind::Baker {
            alpha,
            lambda_a,
            lambda_b,
        })
    }

    pub fn ternary_cantor() -> Self {
        Self::new(MapKind::CantorIfs1d {
            ratios: alloc::vec![1.0 / 3.0, 1.0 / 3.0],
            weights: alloc::vec![0.5, 0.5],
        })
    }

    pub fn lorenz() -> Self {
        Self::new(MapKind::LorenzEuler {
            sigma: 10.0,
            rho: 28.0,
            beta: 8.0 / 3.0,
            h: 0.01,
        })
    }

    pub fn dim(&self) -> usize {
        self.kind.dim()
    }

    /// Validates parameters and precomputes what stepping needs.
    pub fn compile(&self) -> Result<System> {
        let map = CompiledMap::new(&self.kind)?;
        let noise = match &self.noise {
            NoiseSpec::None => CompiledNoise::None,
            NoiseSpec::AdditiveUniformMod1 { eta } => {
                if !(*eta > 0.0 && eta.is_finite()) {
                    return Err(Error::InvalidParameter(format!(
                        "additive noise half-width must be positive, got {eta}"
                    )));
                }
                if !self.kind.on_unit_cube() {
                    return Err(Error::InvalidParameter(format!(
                        "mod-1 additive noise needs a system on the unit cube, not {}",
                        self.kind.name()
                    )));
                }
                CompiledNoise::Additive(*eta)
            }
            NoiseSpec::DiscreteMapSwitch { maps } => {
                if maps.is_empty() {
                    return Err(Error::InvalidParameter("empty map switch".into()));
                }
                let probs: Vec<f64> = maps.iter().map(|m| m.probability).collect();
                let cumulative = cumulative_weights(&probs, "map-switch probabilities")?;
                let mut compiled = Vec::with_capacity(maps.len());
                for m in maps {
                    if m.map.dim() != self.kind.dim() {
                        return Err(Error::InvalidParameter(format!(
                            "map-switch variant {} has dimension {}, system has {}",
                            m.map.name(),
                            m.map.dim(),
                            self.kind.dim()
                        )));
                    }
                    compiled.push(CompiledMap::new(&m.map)?);
                }
                CompiledNoise::Switch(compiled, cumulative)
            }
        };
        Ok(System {
            spec: self.clone(),
            map,
            noise,
        })
    }
}

impl MapKind {
    pub fn name(&self) -> &'static str {
        match self {
            MapKind::LinearCircle { .. } => "linear_circle",
            MapKind::TwoBranchAffineCircle { .. } => "two_branch_affine_circle",
            MapKind::Hemmer => "hemmer",
            MapKind::Baker { .. } => "baker",
            MapKind::CantorIfs1d { .. } => "cantor_ifs1d",
            MapKind::CantorProduct2d => "cantor_product2d",
            MapKind::LorenzEuler { .. } => "lorenz_euler",
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            MapKind::LinearCircle { .. }
            | MapKind::TwoBranchAffineCircle { .. }
            | MapKind::Hemmer
            | MapKind::CantorIfs1d { .. } => 1,
            MapKind::Baker { .. } | MapKind::CantorProduct2d => 2,
            MapKind::LorenzEuler { .. } => 3,
        }
    }

    fn on_unit_cube(&self) -> bool {
        !matches!(self, MapKind::Hemmer | MapKind::LorenzEuler { .. })
    }
}

fn cumulative_weights(weights: &[f64], what: &str) -> Result<Vec<f64>> {
    if weights.iter().any(|&w| !(w > 0.0) || !w.is_finite()) {
        return Err(Error::InvalidParameter(format!("{what} must be positive")));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidParameter(format!(
            "{what} must sum to 1, got {total}"
        )));
    }
    let mut acc = 0.0;
    let mut out: Vec<f64> = weights
        .iter()
        .map(|w| {
            acc += w;
            acc
        })
        .collect();
    *out.last_mut().unwrap() = 1.0;
    Ok(out)
}

#[derive(Debug, Clone)]
enum CompiledMap {
    Circle { m: f64, jitter: bool },
    TwoBranch { slopes: [f64; 2], offsets: [f64; 2] },
    Hemmer,
    Baker { alpha: f64, la: f64, lb: f64, jitter: bool },
    Ifs { ratios: Vec<f64>, offsets: Vec<f64>, cumulative: Vec<f64> },
    CantorProduct,
    Lorenz { sigma: f64, rho: f64, beta: f64, h: f64 },
}

impl CompiledMap {
    fn new(kind: &MapKind) -> Result<Self> {
        Ok(match kind {
            MapKind::LinearCircle { m, jitter } => {
                if *m < 2 {
                    return Err(Error::InvalidParameter(format!(
                        "circle map slope must be >= 2, got {m}"
                    )));
                }
                CompiledMap::Circle {
                    m: *m as f64,
                    jitter: jitter.unwrap_or(m % 2 == 0),
                }
            }
            MapKind::TwoBranchAffineCircle { slopes, offsets } => {
                if slopes.iter().chain(offsets).any(|v| !v.is_finite()) {
                    return Err(Error::InvalidParameter("non-finite branch parameter".into()));
                }
                CompiledMap::TwoBranch {
                    slopes: *slopes,
                    offsets: *offsets,
                }
            }
            MapKind::Hemmer => CompiledMap::Hemmer,
            MapKind::Baker {
                alpha,
                lambda_a,
                lambda_b,
            } => {
                if !(*alpha > 0.0 && *alpha <= 0.5) {
                    return Err(Error::InvalidParameter(format!(
                        "baker alpha must lie in (0, 1/2], got {alpha}"
                    )));
                }
                if !(*lambda_a > 0.0 && *lambda_b > 0.0 && lambda_a + lambda_b <= 1.0) {
                    return Err(Error::InvalidParameter(format!(
                        "baker contractions need lambda_a, lambda_b > 0 and lambda_a + lambda_b <= 1, got {lambda_a}, {lambda_b}"
                    )));
                }
                CompiledMap::Baker {
                    alpha: *alpha,
                    la: *lambda_a,
                    lb: *lambda_b,
                    // y -> 2y mod 1 is an exact bit shift
                    jitter: *alpha == 0.5,
                }
            }
            MapKind::CantorIfs1d { ratios, weights } => {
                let (offsets, cumulative) = ifs_layout(ratios, weights)?;
                CompiledMap::Ifs {
                    ratios: ratios.clone(),
                    offsets,
                    cumulative,
                }
            }
            MapKind::CantorProduct2d => CompiledMap::CantorProduct,
            MapKind::LorenzEuler {
                sigma,
                rho,
                beta,
                h,
            } => {
                if !(*h > 0.0) || [sigma, rho, beta].iter().any(|v| !v.is_finite()) {
                    return Err(Error::InvalidParameter("bad Lorenz parameters".into()));
                }
                CompiledMap::Lorenz {
                    sigma: *sigma,
                    rho: *rho,
                    beta: *beta,
                    h: *h,
                }
            }
        })
    }

    #[inline]
    fn apply(&self, x: &mut State, rng: &mut SimRng) {
        match self {
            CompiledMap::Circle { m, jitter } => {
                let mut y = (m * x[0]).fract();
                if *jitter {
                    y = (y + CIRCLE_JITTER * rng.uniform()).fract();
                }
                x[0] = y;
            }
            CompiledMap::TwoBranch { slopes, offsets } => {
                let b = usize::from(x[0] >= 0.5);
                x[0] = wrap_unit(slopes[b] * x[0] + offsets[b]);
            }
            CompiledMap::Hemmer => x[0] = 1.0 - 2.0 * x[0].abs().sqrt(),
            CompiledMap::Baker {
                alpha,
                la,
                lb,
                jitter,
            } => {
                let (px, mut py) = (x[0], x[1]);
                if *jitter {
                    py = (py + CIRCLE_JITTER * rng.uniform()).fract();
                }
                if py < *alpha {
                    x[0] = la * px;
                    x[1] = py / alpha;
                } else {
                    x[0] = (1.0 - lb) + lb * px;
                    x[1] = (py - alpha) / (1.0 - alpha);
                }
            }
            CompiledMap::Ifs {
                ratios,
                offsets,
                cumulative,
            } => {
                let i = if cumulative.len() == 2 && cumulative[0] == 0.5 {
                    usize::from(rng.bit())
                } else {
                    rng.categorical(cumulative)
                };
                x[0] = ratios[i] * x[0] + offsets[i];
            }
            CompiledMap::CantorProduct => {
                const THIRD: f64 = 1.0 / 3.0;
                const TWO_THIRDS: f64 = 2.0 / 3.0;
                x[0] = x[0] * THIRD + if rng.bit() { TWO_THIRDS } else { 0.0 };
                x[1] = x[1] * THIRD + if rng.bit() { TWO_THIRDS } else { 0.0 };
            }
            CompiledMap::Lorenz {
                sigma,
                rho,
                beta,
                h,
            } => {
                let [a, b, c] = *x;
                x[0] = a + h * sigma * (b - a);
                x[1] = b + h * (a * (rho - c) - b);
                x[2] = c + h * (a * b - beta * c);
            }
        }
    }
}

/// Offsets and cumulative weights of a one-dimensional IFS.
fn ifs_layout(ratios: &[f64], weights: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    if ratios.len() < 2 || ratios.len() != weights.len() {
        return Err(Error::InvalidParameter(
            "an IFS needs at least two maps and one weight per map".into(),
        ));
    }
    if ratios.iter().any(|&r| !(r > 0.0 && r < 1.0)) {
        return Err(Error::InvalidParameter(
            "IFS contraction ratios must lie in (0, 1)".into(),
        ));
    }
    let total: f64 = ratios.iter().sum();
    if total > 1.0 + 1e-12 {
        return Err(Error::InvalidParameter(format!(
            "IFS images overlap: ratios sum to {total}"
        )));
    }
    let gap = (1.0 - total).max(0.0) / (ratios.len() - 1) as f64;
    let mut offsets = Vec::with_capacity(ratios.len());
    let mut left = 0.0;
    for (i, r) in ratios.iter().enumerate() {
        offsets.push(if i + 1 == ratios.len() { 1.0 - r } else { left });
        left += r + gap;
    }
    Ok((offsets, cumulative_weights(weights, "IFS weights")?))
}

#[inline]
fn wrap_unit(v: f64) -> f64 {
    let y = v - v.floor();
    if y >= 1.0 {
        0.0
    } else {
        y
    }
}

#[derive(Debug, Clone)]
enum CompiledNoise {
    None,
    Additive(f64),
    Switch(Vec<CompiledMap>, Vec<f64>),
}

/// A validated [`SystemSpec`] ready to be iterated.
#[derive(Debug, Clone)]
pub struct System {
    spec: SystemSpec,
    map: CompiledMap,
    noise: CompiledNoise,
}

impl System {
    pub fn spec(&self) -> &SystemSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.spec.dim()
    }

    /// Advances `x` in place. No domain check.
    #[inline]
    pub fn advance(&self, x: &mut State, rng: &mut SimRng) {
        match &self.noise {
            CompiledNoise::None => self.map.apply(x, rng),
            CompiledNoise::Additive(eta) => {
                self.map.apply(x, rng);
                for v in x.iter_mut().take(self.dim()) {
                    *v = wrap_unit(*v + rng.uniform_in(-eta, *eta));
                }
            }
            CompiledNoise::Switch(maps, cumulative) => {
                let i = rng.categorical(cumulative);
                maps[i].apply(x, rng);
            }
        }
    }

    /// Image of `x` under one step, rejecting states outside the domain.
    pub fn step(&self, x: &State, rng: &mut SimRng) -> Result<State> {
        self.check_domain(x)?;
        let mut y = *x;
        self.advance(&mut y, rng);
        Ok(y)
    }

    pub fn check_domain(&self, x: &State) -> Result<()> {
        let d = self.dim();
        let bad = |detail: alloc::string::String| Error::Domain {
            system: self.spec.kind.name(),
            detail,
        };
        if x[..d].iter().any(|v| !v.is_finite()) {
            return Err(bad(format!("non-finite state {:?}", &x[..d])));
        }
        match &self.spec.kind {
            MapKind::LinearCircle { .. } | MapKind::TwoBranchAffineCircle { .. } => {
                if !(0.0..1.0).contains(&x[0]) {
                    return Err(bad(format!("{} not in [0, 1)", x[0])));
                }
            }
            MapKind::Hemmer => {
                if !(-1.0..=1.0).contains(&x[0]) {
                    return Err(bad(format!("{} not in [-1, 1]", x[0])));
                }
            }
            MapKind::Baker { .. } | MapKind::CantorIfs1d { .. } | MapKind::CantorProduct2d => {
                if x[..d].iter().any(|v| !(0.0..=1.0).contains(v)) {
                    return Err(bad(format!("{:?} not in the unit cube", &x[..d])));
                }
            }
            MapKind::LorenzEuler { .. } => {}
        }
        Ok(())
    }

    /// Random starting state in the domain.
    pub fn random_state(&self, rng: &mut SimRng) -> State {
        let mut x = [0.0; 3];
        match &self.spec.kind {
            MapKind::Hemmer => x[0] = rng.uniform_in(-1.0, 1.0),
            MapKind::LorenzEuler { .. } => {
                x = [
                    rng.uniform_in(-10.0, 10.0),
                    rng.uniform_in(-10.0, 10.0),
                    rng.uniform_in(10.0, 40.0),
                ];
            }
            _ => {
                for v in x.iter_mut().take(self.dim()) {
                    *v = rng.uniform();
                }
            }
        }
        x
    }

    /// Steps discarded before recording so that orbits start on the attractor.
    pub fn default_burn_in(&self) -> usize {
        match &self.spec.kind {
            MapKind::LinearCircle { .. } | MapKind::TwoBranchAffineCircle { .. } | MapKind::Hemmer => 0,
            MapKind::Baker { .. } => 64,
            MapKind::CantorIfs1d { .. } | MapKind::CantorProduct2d => 40,
            MapKind::LorenzEuler { .. } => 10_000,
        }
    }

    /// Random state followed by the default burn-in.
    pub fn settled_state(&self, rng: &mut SimRng) -> State {
        let mut x = self.random_state(rng);
        for _ in 0..self.default_burn_in() {
            self.advance(&mut x, rng);
        }
        x
    }

    /// Deterministic one-dimensional map value, when the system is a
    /// deterministic interval map.
    pub fn interval_map(&self, x: f64) -> Option<f64> {
        if !matches!(self.noise, CompiledNoise::None) {
            return None;
        }
        match &self.map {
            CompiledMap::Circle { m, .. } => Some((m * x).fract()),
            CompiledMap::TwoBranch { slopes, offsets } => {
                let b = usize::from(x >= 0.5);
                Some(wrap_unit(slopes[b] * x + offsets[b]))
            }
            CompiledMap::Hemmer => Some(1.0 - 2.0 * x.abs().sqrt()),
            _ => None,
        }
    }

    /// `|T'(x)|` of a deterministic interval map.
    pub fn interval_derivative(&self, x: f64) -> Option<f64> {
        if !matches!(self.noise, CompiledNoise::None) {
            return None;
        }
        match &self.map {
            CompiledMap::Circle { m, .. } => Some(*m),
            CompiledMap::TwoBranch { slopes, .. } => {
                Some(slopes[usize::from(x >= 0.5)].abs())
            }
            CompiledMap::Hemmer => Some(1.0 / x.abs().sqrt()),
            _ => None,
        }
    }

    /// Density of the absolutely continuous invariant measure, where known
    /// in closed form.
    pub fn invariant_density(&self, x: f64) -> Option<f64> {
        if !matches!(self.noise, CompiledNoise::None) {
            return None;
        }
        match &self.map {
            CompiledMap::Circle { .. } => Some(1.0),
            // Even integer slopes cover the circle an integer number of
            // times per branch, so Lebesgue measure is preserved.
            CompiledMap::TwoBranch { slopes, .. }
                if slopes
                    .iter()
                    .all(|s| s.fract() == 0.0 && (s.abs() as u64) % 2 == 0 && *s != 0.0) =>
            {
                Some(1.0)
            }
            CompiledMap::Hemmer => Some(0.5 * (1.0 - x)),
            _ => None,
        }
    }

    /// `(T x, |T'(x)|)` of the expanding dynamics: the interval map itself,
    /// or the inverse branches of a one-dimensional IFS (`None` in its gaps).
    pub fn expanding_map(&self, x: f64) -> Option<(f64, f64)> {
        if let CompiledMap::Ifs {
            ratios, offsets, ..
        } = &self.map
        {
            return ratios
                .iter()
                .zip(offsets)
                .find(|(r, o)| x >= **o && x <= **o + **r)
                .map(|(r, o)| ((x - o) / r, 1.0 / r));
        }
        Some((self.interval_map(x)?, self.interval_derivative(x)?))
    }

    /// Lebesgue measure of the set that survives one step of the expanding
    /// map of a one-dimensional IFS, i.e. of the complement of the hole.
    pub fn survival_fraction(&self) -> Option<f64> {
        match &self.map {
            CompiledMap::Ifs { ratios, .. } if self.dim() == 1 => Some(ratios.iter().sum()),
            _ => None,
        }
    }
}

/// A recorded orbit.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub dim: usize,
    pub seed: u64,
    pub states: Vec<State>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Column `i` of the states.
    pub fn coordinate(&self, i: usize) -> Vec<f64> {
        self.states.iter().map(|s| s[i]).collect()
    }
}

/// Single checked step of `spec` from `x`.
pub fn step(spec: &SystemSpec, x: &State, rng: &mut SimRng) -> Result<State> {
    spec.compile()?.step(x, rng)
}

/// `states[0] = x0`, `states[k+1] = step(states[k])`, all randomness drawn
/// from stream 0 of `seed`.
pub fn orbit(spec: &SystemSpec, x0: State, n: usize, seed: u64) -> Result<Trajectory> {
    if n == 0 {
        return Err(Error::InvalidParameter("orbit length must be >= 1".into()));
    }
    let sys = spec.compile()?;
    sys.check_domain(&x0)?;
    let mut rng = SimRng::new(seed, 0);
    let mut states = Vec::with_capacity(n);
    let mut x = x0;
    states.push(x);
    for _ in 1..n {
        sys.advance(&mut x, &mut rng);
        states.push(x);
    }
    Ok(Trajectory {
        dim: sys.dim(),
        seed,
        states,
    })
}

/// Chaos-game samples of an IFS system: a settled start (within rounding of
/// the attractor) followed by `n` random contractions; the `n` images are
/// returned.
pub fn cantor_sample(spec: &SystemSpec, n: usize, seed: u64) -> Result<Trajectory> {
    if !matches!(
        spec.kind,
        MapKind::CantorIfs1d { .. } | MapKind::CantorProduct2d
    ) {
        return Err(Error::Unsupported(format!(
            "chaos-game sampling needs an IFS system, not {}",
            spec.kind.name()
        )));
    }
    let sys = spec.compile()?;
    let mut rng = SimRng::new(seed, 0);
    let mut x = sys.settled_state(&mut rng);
    let mut states = Vec::with_capacity(n);
    for _ in 0..n {
        sys.advance(&mut x, &mut rng);
        states.push(x);
    }
    Ok(Trajectory {
        dim: sys.dim(),
        seed,
        states,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn rng() -> SimRng {
        SimRng::new(11, 0)
    }

    #[test]
    fn baker_lower_branch() {
        let sys = SystemSpec::baker(0.25, 0.3, 0.2).compile().unwrap();
        let y = sys.step(&[0.5, 0.1, 0.0], &mut rng()).unwrap();
        assert!((y[0] - 0.15).abs() < 1e-15);
        assert!((y[1] - 0.4).abs() < 1e-15);
    }

    #[test]
    fn baker_upper_branch() {
        let sys = SystemSpec::baker(0.25, 0.3, 0.2).compile().unwrap();
        let y = sys.step(&[0.5, 0.5, 0.0], &mut rng()).unwrap();
        assert!((y[0] - 0.9).abs() < 1e-15);
        assert!((y[1] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn baker_parameters_validated() {
        assert!(SystemSpec::baker(0.6, 0.3, 0.2).compile().is_err());
        assert!(SystemSpec::baker(0.25, 0.6, 0.5).compile().is_err());
        assert!(SystemSpec::baker(0.0, 0.3, 0.2).compile().is_err());
        assert!(SystemSpec::baker(0.5, 0.5, 0.5).compile().is_ok());
    }

    #[test]
    fn tripling_map() {
        let spec = SystemSpec::linear_circle(3);
        let y = step(&spec, &[0.2, 0.0, 0.0], &mut rng()).unwrap();
        assert!((y[0] - 0.6).abs() < 1e-15);
    }

    #[test]
    fn hemmer_fixed_point() {
        let z = 3.0 - 2.0 * 2f64.sqrt();
        let y = step(&SystemSpec::new(MapKind::Hemmer), &[z, 0.0, 0.0], &mut rng()).unwrap();
        assert!((y[0] - z).abs() < 1e-15);
    }

    #[test]
    fn domain_errors() {
        let sys = SystemSpec::linear_circle(3).compile().unwrap();
        assert!(matches!(
            sys.step(&[1.5, 0.0, 0.0], &mut rng()),
            Err(Error::Domain { .. })
        ));
        let sys = SystemSpec::new(MapKind::Hemmer).compile().unwrap();
        assert!(sys.step(&[-1.01, 0.0, 0.0], &mut rng()).is_err());
    }

    #[test]
    fn doubling_orbit_without_jitter() {
        let spec = SystemSpec::new(MapKind::LinearCircle {
            m: 2,
            jitter: Some(false),
        });
        let t = orbit(&spec, [0.2, 0.0, 0.0], 3, 0).unwrap();
        assert_eq!(t.coordinate(0), vec![0.2, 0.4, 0.8]);
        assert!(orbit(&spec, [0.2, 0.0, 0.0], 0, 0).is_err());
    }

    #[test]
    fn doubling_with_jitter_does_not_collapse() {
        let t = orbit(&SystemSpec::linear_circle(2), [0.2, 0.0, 0.0], 2000, 5).unwrap();
        let zeros = t.states.iter().filter(|s| s[0] == 0.0).count();
        assert_eq!(zeros, 0);
        let mean: f64 = t.states[100..].iter().map(|s| s[0]).sum::<f64>() / 1900.0;
        assert!((mean - 0.5).abs() < 0.05);
    }

    #[test]
    fn circle_states_stay_in_unit_interval() {
        let spec = SystemSpec::new(MapKind::TwoBranchAffineCircle {
            slopes: [2.0, 2.0],
            offsets: [0.0, 0.37],
        });
        let t = orbit(&spec, [0.3, 0.0, 0.0], 10_000, 1).unwrap();
        assert!(t.states.iter().all(|s| (0.0..1.0).contains(&s[0])));
    }

    #[test]
    fn baker_long_orbit_stays_in_square() {
        let t = orbit(&SystemSpec::baker(0.25, 0.3, 0.2), [0.3, 0.7, 0.0], 1_000_000, 3).unwrap();
        let last = t.states.last().unwrap();
        assert!((0.0..=1.0).contains(&last[0]) && (0.0..=1.0).contains(&last[1]));
    }

    #[test]
    fn symmetric_baker_keeps_mixing() {
        let t = orbit(&SystemSpec::baker(0.5, 0.3, 0.4), [0.3, 0.7, 0.0], 2000, 3).unwrap();
        let upper = t.states[1000..].iter().filter(|s| s[1] >= 0.5).count();
        assert!((400..600).contains(&upper), "{upper}");
    }

    #[test]
    fn ifs_layout_ternary() {
        let (offsets, cumulative) = ifs_layout(&[1.0 / 3.0, 1.0 / 3.0], &[0.5, 0.5]).unwrap();
        assert_eq!(offsets[0], 0.0);
        assert!((offsets[1] - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(cumulative, vec![0.5, 1.0]);
        assert!(ifs_layout(&[0.6, 0.6], &[0.5, 0.5]).is_err());
        assert!(ifs_layout(&[0.3, 0.3], &[0.7, 0.7]).is_err());
    }

    #[test]
    fn cantor_sample_single_point_is_contracted() {
        let t = cantor_sample(&SystemSpec::ternary_cantor(), 1, 9).unwrap();
        assert_eq!(t.len(), 1);
        let x = t.states[0][0];
        assert!(x <= 1.0 / 3.0 || x >= 2.0 / 3.0);
    }

    #[test]
    fn noise_requires_unit_cube() {
        let spec = SystemSpec::new(MapKind::Hemmer)
            .with_noise(NoiseSpec::AdditiveUniformMod1 { eta: 0.1 });
        assert!(spec.compile().is_err());
    }

    #[test]
    fn map_switch_probabilities_validated() {
        let bad = SystemSpec::baker(0.25, 0.4, 0.4).with_noise(NoiseSpec::DiscreteMapSwitch {
            maps: vec![WeightedMap {
                map: MapKind::Baker {
                    alpha: 0.25,
                    lambda_a: 0.4,
                    lambda_b: 0.4,
                },
                probability: 0.7,
            }],
        });
        assert!(bad.compile().is_err());
    }

    #[test]
    fn lorenz_stays_bounded() {
        let spec = SystemSpec::lorenz();
        let sys = spec.compile().unwrap();
        let mut r = rng();
        let mut x = sys.settled_state(&mut r);
        for _ in 0..100_000 {
            sys.advance(&mut x, &mut r);
            assert!(x[0].abs() < 30.0 && x[1].abs() < 40.0 && x[2] > -1.0 && x[2] < 60.0);
        }
    }
}
