//! Named experiments with reference values. Every preset writes its tables,
//! `config.toml` and a `manifest.json` of checks.

use std::f64::consts::{LN_2, PI};

use evtobs_core::dimensions::baker_dq_solve;
use evtobs_core::dynsys::{MapKind, NoiseSpec, System, SystemSpec};
use evtobs_core::evt::{
    block_maxima, dimension_trial, fit_gev, mean_sd, phi_series, BlockMaximaRun, TargetChoice,
};
use evtobs_core::extremal::{
    orbit_data_for_points, theta_analytic_open, theta_hat, theta_trial,
    ternary_periodic_point, ExceedanceSeries, ThetaRun,
};
use evtobs_core::observables::{
    Metric, Monomial, ObsNoiseSpec, ObservableKind, ObservableSpec, Preimage, TargetSpec,
};
use evtobs_core::SimRng;
use serde::Serialize;

use crate::config::{EmbedParams, Experiment, ExperimentConfig, SpectrumParams, VisitParams};
use crate::error::{Error, Result};
use crate::experiments::{self, write_visits};
use crate::output::{num, RunDir};

/// Preset names; `table2` is accepted as another name of `table1`.
pub const PRESETS: [&str; 9] = [
    "table1",
    "table3",
    "lorenz",
    "visits",
    "nois",
    "cantor_open",
    "line_circle",
    "spectrum",
    "loremb",
];

/// Above this orbit length a trial streams twice instead of holding `phi`.
const IN_MEMORY_LIMIT: usize = 20_000_000;

/// Point near the Lorenz attractor used as target.
pub const LORENZ_TARGET: [f64; 3] = [-1.7323, 8.9400, 32.6818];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    Desk,
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    /// `|computed - reference| <= tolerance`
    Within,
    /// `computed < reference`
    Below,
    /// `computed >= reference`
    AtLeast,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub reference: f64,
    pub computed: f64,
    pub tolerance: f64,
    pub relation: Relation,
    pub pass: bool,
}

impl Check {
    pub fn within(name: impl Into<String>, reference: f64, computed: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            reference,
            computed,
            tolerance,
            relation: Relation::Within,
            pass: (computed - reference).abs() <= tolerance,
        }
    }

    pub fn below(name: impl Into<String>, bound: f64, computed: f64) -> Self {
        Self {
            name: name.into(),
            reference: bound,
            computed,
            tolerance: 0.0,
            relation: Relation::Below,
            pass: computed < bound,
        }
    }

    pub fn at_least(name: impl Into<String>, bound: f64, computed: f64) -> Self {
        Self {
            name: name.into(),
            reference: bound,
            computed,
            tolerance: 0.0,
            relation: Relation::AtLeast,
            pass: computed >= bound,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Manifest {
    pub preset: String,
    pub scale: Scale,
    pub seed: u64,
    pub checks: Vec<Check>,
    pub all_pass: bool,
}

pub fn run_preset(name: &str, scale: Scale, seed: u64, dir: &RunDir) -> Result<Manifest> {
    let canonical = match name {
        "table2" => "table1",
        n if PRESETS.contains(&n) => n,
        other => return Err(Error::UnknownPreset(other.into())),
    };
    dir.write_config(&ExperimentConfig {
        preset: Some(canonical.into()),
        full_scale: scale == Scale::Full,
        seed,
        system: None,
        observable: None,
        target: None,
        method: None,
    })?;
    let checks = match canonical {
        "table1" => table1(scale, seed, dir)?,
        "table3" => table3(scale, seed, dir)?,
        "lorenz" => lorenz(scale, seed, dir)?,
        "visits" => visits(scale, seed, dir)?,
        "nois" => nois(scale, seed, dir)?,
        "cantor_open" => cantor_open(scale, seed, dir)?,
        "line_circle" => line_circle(scale, seed, dir)?,
        "spectrum" => spectrum(scale, seed, dir)?,
        "loremb" => loremb(scale, seed, dir)?,
        _ => unreachable!(),
    };
    let manifest = Manifest {
        preset: canonical.into(),
        scale,
        seed,
        all_pass: checks.iter().all(|c| c.pass),
        checks,
    };
    dir.write_json("manifest.json", &manifest)?;
    Ok(manifest)
}

fn pick<T>(scale: Scale, desk: T, full: T) -> T {
    match scale {
        Scale::Desk => desk,
        Scale::Full => full,
    }
}

/// `d = 1 / sigma` and `theta_K` of one trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JointTrial {
    pub d: f64,
    pub theta: f64,
}

/// Dimension and extremal index from the same trajectory: the orbit and
/// target of [`dimension_trial`], exceedances of the `quantile` of `phi`.
pub fn joint_trial(
    sys: &System,
    obs: &ObservableSpec,
    target: &TargetChoice,
    run: &BlockMaximaRun,
    quantile: f64,
    k: usize,
    trial: usize,
) -> Result<JointTrial> {
    if run.m > IN_MEMORY_LIMIT {
        let d = dimension_trial(sys, obs, target, run, trial)?.d;
        let th = theta_trial(sys, obs, target, &ThetaRun { m: run.m, quantile, k, seed: run.seed }, trial)?;
        return Ok(JointTrial {
            d,
            theta: th.coefficients.theta,
        });
    }
    let (obs, resolved) = target.instantiate(obs, sys, run.seed, trial)?;
    let mut rng = SimRng::new(run.seed, trial as u64);
    let x0 = sys.settled_state(&mut rng);
    let phi = phi_series(sys, &obs, &resolved, x0, run.m, rng)?;
    let fit = fit_gev(&block_maxima(&phi, run.n)?, run.gumbel_constrained)?;
    let es = ExceedanceSeries::from_phi(&phi, quantile)?;
    Ok(JointTrial {
        d: fit.dimension(),
        theta: theta_hat(&es, k)?.theta,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BakerCell {
    pub alpha: f64,
    pub f0: f64,
    pub d: f64,
    pub d_sd: f64,
    pub theta: f64,
    pub theta_sd: f64,
}

pub const BAKER_ALPHAS: [f64; 3] = [1.0 / 5.0, 1.0 / 4.0, 1.0 / 3.0];
pub const BAKER_F0: [f64; 3] = [0.1, 0.3, 0.8];

/// Mean observable on the baker map (`lambda_a = 0.3`, `lambda_b = 0.2`) at
/// target value `f0`, `trials` trajectories.
pub fn baker_cell(alpha: f64, f0: f64, m: usize, n: usize, trials: usize, seed: u64) -> Result<BakerCell> {
    let sys = SystemSpec::baker(alpha, 0.3, 0.2).compile()?;
    let obs = ObservableSpec::new(ObservableKind::Mean2d);
    let target = TargetChoice::from(TargetSpec::value(&[f0]));
    let run = BlockMaximaRun::new(m, n, seed);
    let v = (0..trials)
        .map(|t| joint_trial(&sys, &obs, &target, &run, 0.999, 5, t))
        .collect::<Result<Vec<_>>>()?;
    let (d, d_sd) = mean_sd(&v.iter().map(|t| t.d).collect::<Vec<_>>());
    let (theta, theta_sd) = mean_sd(&v.iter().map(|t| t.theta).collect::<Vec<_>>());
    Ok(BakerCell {
        alpha,
        f0,
        d,
        d_sd,
        theta,
        theta_sd,
    })
}

fn table1(scale: Scale, seed: u64, dir: &RunDir) -> Result<Vec<Check>> {
    let (m, n) = pick(scale, (10_000_000, 5_000), (100_000_000, 50_000));
    let mut cells = Vec::new();
    for f0 in BAKER_F0 {
        for alpha in BAKER_ALPHAS {
            cells.push(baker_cell(alpha, f0, m, n, 10, seed)?);
        }
    }
    dir.write_csv(
        "table1.csv",
        &["alpha", "f0", "d", "d_sd", "theta", "theta_sd"],
        cells.iter().map(|c| {
            vec![num(c.alpha), num(c.f0), num(c.d), num(c.d_sd), num(c.theta), num(c.theta_sd)]
        }),
    )?;
    let mut checks = Vec::new();
    for c in &cells {
        let tag = format!("alpha={:.4} f0={}", c.alpha, c.f0);
        checks.push(Check::within(format!("d {tag}"), 1.0, c.d, 0.05));
        checks.push(Check::within(format!("theta {tag}"), 1.0, c.theta, 0.02));
    }
    Ok(checks)
}

/// Gaussian bump on the product of two ternary Cantor sets, centred at the
/// target; `z = None` samples the target per trial.
pub fn cantor_gaussian(z: Option<[f64; 2]>, m: usize, n: usize, trials: usize, seed: u64) -> Result<(f64, f64)> {
    let sys = SystemSpec::new(MapKind::CantorProduct2d).compile()?;
    let base = ObservableSpec::new(ObservableKind::Gaussian2d { x0: 0.0, y0: 0.0 });
    let (obs, target) = match z {
        Some(z) => (base.recentered(&z), TargetChoice::from(TargetSpec::state(&z))),
        None => (base, TargetChoice::SampledCentered { metric: Metric::Euclidean }),
    };
    let run = BlockMaximaRun::new(m, n, seed);
    let ds = (0..trials)
        .map(|t| Ok(dimension_trial(&sys, &obs, &target, &run, t)?.d))
        .collect::<Result<Vec<_>>>()?;
    Ok(mean_sd(&ds))
}

fn table3(scale: Scale, seed: u64, dir: &RunDir) -> Result<Vec<Check>> {
    let (m, n, trials) = pick(scale, (10_000_000, 5_000, 3), (500_000_000, 50_000, 10));
    let half_d1 = LN_2 / 3f64.ln();
    let rows: [(Option<[f64; 2]>, f64); 4] = [
        (Some([0.994, 0.0029]), 0.61),
        (Some([0.6679, 0.9914]), 0.60),
        (Some([0.0861, 0.2565]), 0.62),
        (None, half_d1),
    ];
    let mut out = Vec::new();
    let mut checks = Vec::new();
    for (z, reference) in rows {
        let (d, sd) = cantor_gaussian(z, m, n, trials, seed)?;
        let label = z.map_or("sampled".to_string(), |z| format!("({}, {})", z[0], z[1]));
        checks.push(Check::within(format!("d at {label}"), reference, d, 0.05));
        out.push(vec![label, num(reference), num(d), num(sd)]);
    }
    dir.write_csv("table3.csv", &["z", "reference", "d", "sd"], out)?;
    Ok(checks)
}

/// `(x^2 + y^2, z, y + z, pi y z, 1 / x)` on the Lorenz flow.
pub fn lorenz_vector_observable() -> ObservableSpec {
    let mono = |coef: f64, e: [u32; 3]| Monomial {
        coef,
        exponents: e.to_vec(),
    };
    let poly = |terms| ObservableSpec::new(ObservableKind::Polynomial { terms });
    ObservableSpec::new(ObservableKind::VectorList {
        parts: vec![
            poly(vec![mono(1.0, [2, 0, 0]), mono(1.0, [0, 2, 0])]),
            ObservableKind::Coordinate { index: 2 }.into(),
            poly(vec![mono(1.0, [0, 1, 0]), mono(1.0, [0, 0, 1])]),
            poly(vec![mono(PI, [0, 1, 1])]),
            ObservableKind::Reciprocal { index: 0 }.into(),
        ],
    })
}

fn lorenz(scale: Scale, seed: u64, dir: &RunDir) -> Result<Vec<Check>> {
    let (m, n, trials) = pick(scale, (10_000_000, 10_000, 3), (100_000_000, 200_000, 10));
    let e = Experiment {
        system: SystemSpec::lorenz(),
        observable: lorenz_vector_observable(),
        target: TargetSpec::state(&LORENZ_TARGET).into(),
        seed,
    };
    let est = experiments::dimension(
        &e,
        &crate::config::DimensionParams {
            m,
            n,
            trials,
            gumbel_constrained: true,
        },
    )?;
    experiments::write_dimension(dir, &est)?;
    Ok(vec![Check::within("d of the vector observable", 2.05, est.d, 0.15)])
}

fn visits(scale: Scale, seed: u64, dir: &RunDir) -> Result<Vec<Check>> {
    let ensemble = pick(scale, 10_000, 100_000);
    let params = VisitParams {
        t: 30.0,
        measure: 1e-3,
        ensemble,
        ..VisitParams::default()
    };
    let circle = Experiment {
        system: SystemSpec::linear_circle(3),
        observable: ObservableKind::QuadraticRoots.into(),
        target: TargetSpec::value(&[0.0]).into(),
        seed,
    };
    let rep = experiments::visits(&circle, &params)?;
    write_visits(dir, "visits_circle.csv", &rep)?;
    let baker = Experiment {
        system: SystemSpec::baker(1.0 / 3.0, 0.3, 0.2),
        observable: ObservableKind::Mean2d.into(),
        target: TargetChoice::Sampled { metric: Metric::Euclidean },
        seed,
    };
    let rep_b = experiments::visits(
        &baker,
        &VisitParams {
            measure: 5e-3,
            polya_aeppli_p: Some(1.0),
            ..params
        },
    )?;
    write_visits(dir, "visits_baker.csv", &rep_b)?;
    let mut checks = vec![Check::below(
        "TV(empirical, compound law), 3x mod 1",
        0.03,
        rep.tv_compound.unwrap_or(f64::INFINITY),
    )];
    if let Some(tv) = rep.tv_polya_aeppli {
        checks.push(Check::below("TV(empirical, Polya-Aeppli 7/9), 3x mod 1", 0.05, tv));
    }
    checks.push(Check::below("TV(empirical, Poisson), baker mean", 0.03, rep_b.tv_poisson));
    Ok(checks)
}

pub const NOISE_LEVELS: [f64; 4] = [0.0, 0.01, 0.05, 0.1];

/// `x - y` on the product of two Cantor sets at `(0, 0)`, with uniform noise
/// of amplitude `eta` on the map (`on_map`) or on the observable.
pub fn noisy_diagonal(eta: f64, on_map: bool, m: usize, n: usize, trials: usize, seed: u64) -> Result<(f64, f64)> {
    let mut sys = SystemSpec::new(MapKind::CantorProduct2d);
    let mut obs = ObservableSpec::new(ObservableKind::Affine { a: 1.0, b: -1.0, c: 0.0 });
    if eta > 0.0 {
        if on_map {
            sys = sys.with_noise(NoiseSpec::AdditiveUniformMod1 { eta });
        } else {
            obs = obs.with_noise(ObsNoiseSpec::AdditiveUniform { eta });
        }
    }
    let sys = sys.compile()?;
    let target = TargetChoice::from(TargetSpec::state(&[0.0, 0.0]));
    let run = BlockMaximaRun::new(m, n, seed);
    let ds = (0..trials)
        .map(|t| Ok(dimension_trial(&sys, &obs, &target, &run, t)?.d))
        .collect::<Result<Vec<_>>>()?;
    Ok(mean_sd(&ds))
}

fn nois(scale: Scale, seed: u64, dir: &RunDir) -> Result<Vec<Check>> {
    let (m, n, trials) = pick(scale, (10_000_000, 1_000, 2), (100_000_000, 10_000, 10));
    let mut rows = Vec::new();
    let mut checks = Vec::new();
    for on_map in [true, false] {
        let kind = if on_map { "map" } else { "observable" };
        for eta in NOISE_LEVELS {
            if eta == 0.0 && !on_map {
                continue;
            }
            let (d, sd) = noisy_diagonal(eta, on_map, m, n, trials, seed)?;
            rows.push(vec![kind.to_string(), num(eta), num(d), num(sd)]);
            if eta == 0.0 {
                checks.push(Check::below("d without noise", 0.75, d));
            } else if eta == 0.1 {
                checks.push(Check::at_least(format!("d with {kind} noise 0.1"), 0.9, d));
            }
        }
    }
    dir.write_csv("nois.csv", &["noise", "eta", "d", "sd"], rows)?;
    Ok(checks)
}

fn cantor_open(scale: Scale, seed: u64, dir: &RunDir) -> Result<Vec<Check>> {
    let sys = SystemSpec::ternary_cantor().compile()?;
    let mut rows = Vec::new();
    let mut checks = Vec::new();
    for p in 1..=5u32 {
        let w = ternary_periodic_point(p);
        let data = orbit_data_for_points(&sys, &[Preimage { w, slope: 1.0, density: 1.0 }], 10)?;
        let th = theta_analytic_open(&data)?.theta;
        let exact = 1.0 - 0.5f64.powi(p as i32);
        rows.push(vec![p.to_string(), num(w), num(th), num(exact)]);
        checks.push(Check::within(format!("open-system theta, period {p}"), exact, th, 1e-12));
    }
    dir.write_csv("cantor_open.csv", &["period", "w", "theta", "reference"], rows)?;

    // the Cantor set on the y-axis of the product, seen through f = x
    let m = pick(scale, 10_000_000, 100_000_000);
    let prod = SystemSpec::new(MapKind::CantorProduct2d).compile()?;
    let th = theta_trial(
        &prod,
        &ObservableKind::Coordinate { index: 0 }.into(),
        &TargetSpec::value(&[0.0]).into(),
        &ThetaRun::new(m, 0.999, seed),
        0,
    )?;
    dir.write_json("fractal_ei.json", &th)?;
    checks.push(Check::within("theta of f = x at the y-axis", 0.5, th.coefficients.theta, 0.03));
    Ok(checks)
}

fn line_circle(scale: Scale, seed: u64, dir: &RunDir) -> Result<Vec<Check>> {
    let (m, n, trials) = pick(scale, (10_000_000, 5_000, 2), (100_000_000, 50_000, 10));
    let (alpha, la, lb) = (1.0 / 3.0, 0.3, 0.2);
    let baker = SystemSpec::baker(alpha, la, lb).compile()?;
    let sampled = TargetChoice::Sampled { metric: Metric::Euclidean };
    let run = BlockMaximaRun::new(m, n, seed);
    let d_of = |sys: &System, kind: ObservableKind, target: &TargetChoice| -> Result<(f64, f64)> {
        let obs = ObservableSpec::new(kind);
        let ds = (0..trials)
            .map(|t| Ok(dimension_trial(sys, &obs, target, &run, t)?.d))
            .collect::<Result<Vec<_>>>()?;
        Ok(mean_sd(&ds))
    };
    let d1_stable = baker_dq_solve(alpha, la, lb, 1.0)?;
    let mut rows = Vec::new();
    let mut checks = Vec::new();
    let mut add = |name: &str, reference: f64, (d, sd): (f64, f64), check: Check| {
        rows.push(vec![name.to_string(), num(reference), num(d), num(sd)]);
        checks.push(check);
    };
    let line = d_of(&baker, ObservableKind::DistanceToLine { a: 1.0, b: 1.0, c: -1.0 }, &sampled)?;
    add("baker line x + y = 1", 1.0, line, Check::within("d, baker line with b != 0", 1.0, line.0, 0.05));
    let vertical = d_of(&baker, ObservableKind::DistanceToLine { a: 1.0, b: 0.0, c: -0.5 }, &sampled)?;
    add(
        "baker vertical line",
        d1_stable,
        vertical,
        Check::within("d, baker line with b = 0", d1_stable, vertical.0, 0.05),
    );
    let circle = d_of(&baker, ObservableKind::DistanceToCircle { cx: 0.5, cy: 0.5, radius: 0.3 }, &sampled)?;
    add("baker circle R = 0.3", 1.0, circle, Check::within("d, baker circle with R > 0", 1.0, circle.0, 0.05));

    let prod = SystemSpec::new(MapKind::CantorProduct2d).compile()?;
    let diagonal = TargetChoice::from(TargetSpec::value(&[0.0]));
    let diag_kind = ObservableKind::DistanceToLine { a: 1.0, b: -1.0, c: 0.0 };
    let diag_d = d_of(&prod, diag_kind.clone(), &diagonal)?;
    add("cantor diagonal", 1.0, diag_d, Check::below("d, Cantor diagonal", 1.0, diag_d.0));
    let th = theta_trial(&prod, &diag_kind.into(), &diagonal, &ThetaRun::new(m, 0.999, seed), 0)?;
    let q0 = th.coefficients.q[0];
    rows.push(vec!["cantor diagonal theta".into(), num(0.5), num(th.coefficients.theta), num(q0)]);
    checks.push(Check::within("theta, Cantor diagonal", 0.5, th.coefficients.theta, 0.03));
    dir.write_csv("line_circle.csv", &["case", "reference", "value", "sd"], rows)?;
    Ok(checks)
}

fn spectrum(scale: Scale, seed: u64, dir: &RunDir) -> Result<Vec<Check>> {
    let (alpha, la, lb) = (0.25, 0.3, 0.2);
    let e = Experiment {
        system: SystemSpec::baker(alpha, la, lb),
        observable: ObservableKind::Coordinate { index: 0 }.into(),
        target: TargetChoice::Sampled { metric: Metric::Euclidean },
        seed,
    };
    let p = SpectrumParams {
        points: pick(scale, 1_000_000, 10_000_000),
        decades: 4.0,
        ..SpectrumParams::default()
    };
    let rep = experiments::spectrum(&e, &p)?;
    experiments::write_spectrum(dir, &rep)?;
    let mut checks = Vec::new();
    let exact = rep.exact.clone().unwrap_or_default();
    for ((q, d), x) in rep.estimated.q.iter().zip(&rep.estimated.d).zip(&exact) {
        if *q <= 3.0 {
            checks.push(Check::within(format!("D_{q} of the x-image"), *x, *d, 0.1));
        }
    }
    let d1 = baker_dq_solve(alpha, la, lb, 1.0)?;
    let h = 1e-4;
    let avg = 0.5 * (baker_dq_solve(alpha, la, lb, 1.0 - h)? + baker_dq_solve(alpha, la, lb, 1.0 + h)?);
    checks.push(Check::within("continuity of D_q at q = 1", d1, avg, 1e-8));
    Ok(checks)
}

fn loremb(scale: Scale, seed: u64, dir: &RunDir) -> Result<Vec<Check>> {
    let p = EmbedParams {
        m: pick(scale, 4_000_000, 100_000_000),
        n: pick(scale, 1_000, 10_000),
        ..EmbedParams::default()
    };
    let e = Experiment {
        system: SystemSpec::lorenz(),
        observable: ObservableKind::Coordinate { index: 0 }.into(),
        target: TargetSpec::state(&LORENZ_TARGET).into(),
        seed,
    };
    let rows = experiments::embed(&e, &p)?;
    experiments::write_embed(dir, &rows)?;
    Ok(rows
        .iter()
        .map(|r| {
            let (reference, tol) = if r.k <= 2 { (r.k as f64, 0.1) } else { (2.05, 0.15) };
            Check::within(format!("d of f_{}", r.k), reference, r.estimate.d, tol)
        })
        .collect())
}

