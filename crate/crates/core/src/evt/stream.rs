//! Orbit-driven `phi` streams and the block-maxima dimension experiment.

use alloc::vec;
use alloc::vec::Vec;

use super::{fit_gev, mean_sd, BlockMaximaBuilder, GevFit};
use crate::dynsys::{State, System};
use crate::observables::{Metric, ObservableKind, ObservableSpec, ResolvedTarget, TargetSpec};
use crate::{Error, Result, SimRng};

/// Sliding window for a top-level delay observable, so each base value is
/// computed once along the orbit.
#[derive(Debug, Clone)]
struct DelayWindow<'a> {
    base: &'a ObservableSpec,
    k: usize,
    lag: usize,
    m: usize,
    span: usize,
    ring: Vec<f64>,
    head: usize,
}

/// `phi(x_i)` along the orbit `x_0, x_1, ...` of one trajectory.
#[derive(Debug, Clone)]
pub struct PhiStream<'a> {
    sys: &'a System,
    obs: &'a ObservableSpec,
    target: &'a ResolvedTarget,
    state: State,
    rng: SimRng,
    window: Option<DelayWindow<'a>>,
    value: Vec<f64>,
    skipped: usize,
}

impl<'a> PhiStream<'a> {
    pub fn new(
        sys: &'a System,
        obs: &'a ObservableSpec,
        target: &'a ResolvedTarget,
        x0: State,
        rng: SimRng,
    ) -> Result<Self> {
        let d = sys.dim();
        obs.validate(d)?;
        let out_dim = obs.output_dim(d);
        if target.f0.len() != out_dim {
            return Err(Error::InvalidParameter(alloc::format!(
                "target has dimension {}, observable has {out_dim}",
                target.f0.len()
            )));
        }
        let window = match &obs.kind {
            ObservableKind::Delay { base, k, lag } => {
                let m = base.output_dim(d);
                let span = (k - 1) * lag + 1;
                Some(DelayWindow {
                    base,
                    k: *k,
                    lag: *lag,
                    m,
                    span,
                    ring: vec![0.0; span * m],
                    head: 0,
                })
            }
            _ => None,
        };
        let mut s = Self {
            sys,
            obs,
            target,
            state: x0,
            rng,
            window,
            value: vec![0.0; out_dim],
            skipped: 0,
        };
        if let Some(w) = s.window.as_ref() {
            for _ in 1..w.span {
                s.push_base()?;
            }
        }
        Ok(s)
    }

    fn push_base(&mut self) -> Result<()> {
        let w = self.window.as_mut().expect("delay window");
        let d = self.sys.dim();
        let slot = w.head * w.m;
        w.base.evaluate_into(
            &self.state[..d],
            Some(self.sys),
            &mut self.rng,
            &mut w.ring[slot..slot + w.m],
        )?;
        w.head = (w.head + 1) % w.span;
        self.sys.advance(&mut self.state, &mut self.rng);
        Ok(())
    }

    /// Next value; NaN when the observable hit a pole (counted in
    /// [`Self::skipped`]), `+inf` on an exact hit of the target.
    #[inline]
    pub fn next_phi(&mut self) -> Result<f64> {
        if self.window.is_some() {
            self.push_base()?;
            let w = self.window.as_ref().expect("delay window");
            // after the push, `head` is the oldest entry
            for j in 0..w.k {
                let slot = ((w.head + j * w.lag) % w.span) * w.m;
                self.value[j * w.m..(j + 1) * w.m].copy_from_slice(&w.ring[slot..slot + w.m]);
            }
            self.obs.apply_noise(&mut self.rng, &mut self.value);
        } else {
            let d = self.sys.dim();
            self.obs.evaluate_into(
                &self.state[..d],
                Some(self.sys),
                &mut self.rng,
                &mut self.value,
            )?;
            self.sys.advance(&mut self.state, &mut self.rng);
        }
        let p = self.target.phi_of_value(&self.value);
        if p.is_nan() {
            self.skipped += 1;
        }
        Ok(p)
    }

    pub fn skipped(&self) -> usize {
        self.skipped
    }
}

/// The first `m` values of a [`PhiStream`].
pub fn phi_series(
    sys: &System,
    obs: &ObservableSpec,
    target: &ResolvedTarget,
    x0: State,
    m: usize,
    rng: SimRng,
) -> Result<Vec<f64>> {
    let mut s = PhiStream::new(sys, obs, target, x0, rng)?;
    (0..m).map(|_| s.next_phi()).collect()
}

/// How a trial picks its target.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "type", rename_all = "snake_case"))]
pub enum TargetChoice {
    Fixed { target: TargetSpec },
    /// A point drawn from the attractor, independently for every trial.
    Sampled {
        #[cfg_attr(feature = "serde", serde(default))]
        metric: Metric,
    },
    /// As `Sampled`, with centred observables (a Gaussian bump) moved onto
    /// the sampled point so that `f` peaks at the target.
    SampledCentered {
        #[cfg_attr(feature = "serde", serde(default))]
        metric: Metric,
    },
}

impl From<TargetSpec> for TargetChoice {
    fn from(target: TargetSpec) -> Self {
        TargetChoice::Fixed { target }
    }
}

impl TargetChoice {
    /// Target of trial `trial`, together with the observable the trial uses.
    pub fn instantiate(
        &self,
        obs: &ObservableSpec,
        sys: &System,
        seed: u64,
        trial: usize,
    ) -> Result<(ObservableSpec, ResolvedTarget)> {
        match self {
            TargetChoice::Fixed { target } => Ok((obs.clone(), target.resolve(obs, sys)?)),
            TargetChoice::Sampled { metric } | TargetChoice::SampledCentered { metric } => {
                let mut rng = SimRng::derived(seed, trial as u64, 1);
                let z = sys.settled_state(&mut rng);
                let z = &z[..sys.dim()];
                let obs = match self {
                    TargetChoice::SampledCentered { .. } => obs.recentered(z),
                    _ => obs.clone(),
                };
                let t = TargetSpec::state(z).with_metric(*metric).resolve(&obs, sys)?;
                Ok((obs, t))
            }
        }
    }

    pub fn resolve(
        &self,
        obs: &ObservableSpec,
        sys: &System,
        seed: u64,
        trial: usize,
    ) -> Result<ResolvedTarget> {
        self.instantiate(obs, sys, seed, trial).map(|(_, t)| t)
    }
}

/// Orbit length, block size and seed of a block-maxima experiment.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BlockMaximaRun {
    pub m: usize,
    pub n: usize,
    pub seed: u64,
    pub gumbel_constrained: bool,
}

impl BlockMaximaRun {
    pub fn new(m: usize, n: usize, seed: u64) -> Self {
        Self {
            m,
            n,
            seed,
            gumbel_constrained: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrialFit {
    pub trial: usize,
    pub fit: GevFit,
    pub d: f64,
    pub f0: Vec<f64>,
    pub dropped_blocks: usize,
    pub skipped: usize,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DimensionEstimate {
    pub d: f64,
    /// Standard deviation of the per-trial estimates.
    pub sd: f64,
    pub trials: usize,
    pub per_trial: Vec<TrialFit>,
}

impl DimensionEstimate {
    /// Summary of trials, ordered by trial index.
    pub fn from_trials(mut per_trial: Vec<TrialFit>) -> Result<Self> {
        if per_trial.is_empty() {
            return Err(Error::InvalidParameter("no trials".into()));
        }
        per_trial.sort_by_key(|t| t.trial);
        let ds: Vec<f64> = per_trial.iter().map(|t| t.d).collect();
        let (d, sd) = mean_sd(&ds);
        Ok(Self {
            d,
            sd,
            trials: per_trial.len(),
            per_trial,
        })
    }
}

/// One trajectory of a dimension experiment: random settled start from
/// stream `trial` of `run.seed`, `run.m` values of `phi`, blocks of `run.n`,
/// GEV fit, `d = 1 / sigma`.
pub fn dimension_trial(
    sys: &System,
    obs: &ObservableSpec,
    target: &TargetChoice,
    run: &BlockMaximaRun,
    trial: usize,
) -> Result<TrialFit> {
    if run.n < 2 || run.m < run.n {
        return Err(Error::InvalidParameter(alloc::format!(
            "need block size >= 2 and orbit length >= block size (M = {}, n = {})",
            run.m,
            run.n
        )));
    }
    let (obs, resolved) = target.instantiate(obs, sys, run.seed, trial)?;
    let mut rng = SimRng::new(run.seed, trial as u64);
    let x0 = sys.settled_state(&mut rng);
    let mut stream = PhiStream::new(sys, &obs, &resolved, x0, rng)?;
    let mut blocks = BlockMaximaBuilder::new(run.n);
    for _ in 0..run.m {
        blocks.push(stream.next_phi()?);
    }
    let bm = blocks.finish();
    let fit = fit_gev(&bm, run.gumbel_constrained)?;
    let skipped = stream.skipped();
    Ok(TrialFit {
        trial,
        d: fit.dimension(),
        fit,
        f0: resolved.f0,
        dropped_blocks: bm.dropped_blocks,
        skipped,
    })
}

/// Mean and spread of `1 / sigma` over `trials` independent trajectories,
/// Gumbel-constrained fits.
pub fn estimate_dimension(
    sys: &System,
    obs: &ObservableSpec,
    target: &TargetChoice,
    m: usize,
    n: usize,
    trials: usize,
    seed: u64,
) -> Result<DimensionEstimate> {
    let run = BlockMaximaRun::new(m, n, seed);
    let fits = (0..trials)
        .map(|t| dimension_trial(sys, obs, target, &run, t))
        .collect::<Result<Vec<_>>>()?;
    DimensionEstimate::from_trials(fits)
}
