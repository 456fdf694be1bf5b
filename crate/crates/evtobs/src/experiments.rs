//! Explicit experiments: compute, then write tables and a summary into a run
//! directory.

use evtobs_core::dimensions::{
    baker_dq_solve, estimate_dq, ifs_dq_solve, log_radii, rate_function, DimensionSpectrum,
    DqOptions, RateFunction,
};
use evtobs_core::dynsys::{MapKind, System, Trajectory};
use evtobs_core::evt::{dimension_trial, BlockMaximaRun, DimensionEstimate};
use evtobs_core::extremal::{estimate_theta, preimage_orbit_data, theta_analytic, ThetaEstimate, ThetaRun};
use evtobs_core::observables::{ObservableKind, ObservableSpec};
use evtobs_core::visits::{
    compound_poisson_pmf, params_from_orbit_data, poisson_vec, polya_aeppli_vec,
    radius_from_quantile, total_variation, visit_counts, Pmf, VisitDistribution, VisitRun,
};
use evtobs_core::SimRng;
use serde::Serialize;

use crate::config::{
    DimensionParams, EiParams, EmbedParams, Experiment, ExperimentConfig, Method, SpectrumParams,
    VisitParams,
};
use crate::error::Result;
use crate::output::{num, vec_cell, RunDir};

pub fn dimension(e: &Experiment, p: &DimensionParams) -> Result<DimensionEstimate> {
    let sys = e.system.compile()?;
    let run = BlockMaximaRun {
        m: p.m,
        n: p.n,
        seed: e.seed,
        gumbel_constrained: p.gumbel_constrained,
    };
    let fits = (0..p.trials)
        .map(|t| dimension_trial(&sys, &e.observable, &e.target, &run, t))
        .collect::<evtobs_core::Result<Vec<_>>>()?;
    Ok(DimensionEstimate::from_trials(fits)?)
}

pub fn write_dimension(dir: &RunDir, est: &DimensionEstimate) -> Result<()> {
    dir.write_csv(
        "trials.csv",
        &["trial", "f0", "kappa", "sigma", "xi", "log_likelihood", "d", "n_maxima", "dropped_blocks", "skipped"],
        est.per_trial.iter().map(|t| {
            vec![
                t.trial.to_string(),
                vec_cell(&t.f0),
                num(t.fit.kappa),
                num(t.fit.sigma),
                num(t.fit.xi),
                num(t.fit.log_likelihood),
                num(t.d),
                t.fit.n_maxima.to_string(),
                t.dropped_blocks.to_string(),
                t.skipped.to_string(),
            ]
        }),
    )?;
    Ok(())
}

pub fn ei(e: &Experiment, p: &EiParams) -> Result<ThetaEstimate> {
    let sys = e.system.compile()?;
    let run = ThetaRun {
        m: p.m,
        quantile: p.quantile,
        k: p.k,
        seed: e.seed,
    };
    Ok(estimate_theta(&sys, &e.observable, &e.target, &run, p.trials)?)
}

pub fn write_ei(dir: &RunDir, est: &ThetaEstimate) -> Result<()> {
    let k = est.per_trial.first().map_or(0, |t| t.coefficients.k);
    let mut header: Vec<String> = ["trial", "f0", "u", "n_exceedances"].map(String::from).to_vec();
    header.extend((0..=k).map(|i| format!("q_{i}")));
    header.push("theta".into());
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    dir.write_csv(
        "ei.csv",
        &header,
        est.per_trial.iter().map(|t| {
            let mut row = vec![
                t.trial.to_string(),
                vec_cell(&t.f0),
                num(t.threshold),
                t.coefficients.n_exceedances.to_string(),
            ];
            row.extend(t.coefficients.q.iter().map(|q| num(*q)));
            row.push(num(t.coefficients.theta));
            row
        }),
    )?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VisitReport {
    pub distribution: VisitDistribution,
    /// Two-preimage law, when the observable has exactly two periodic
    /// preimages of the target.
    pub compound: Option<Pmf>,
    pub polya_aeppli_p: Option<f64>,
    pub polya_aeppli: Option<Pmf>,
    pub poisson: Pmf,
    pub tv_compound: Option<f64>,
    pub tv_polya_aeppli: Option<f64>,
    pub tv_poisson: f64,
}

pub fn visits(e: &Experiment, p: &VisitParams) -> Result<VisitReport> {
    let sys = e.system.compile()?;
    let (obs, resolved) = e.target.instantiate(&e.observable, &sys, e.seed, 0)?;
    let r = match p.radius {
        Some(r) => r,
        None => radius_from_quantile(&sys, &obs, &resolved, 1.0 - p.measure, p.pilot_len, e.seed)?,
    };
    let run = VisitRun {
        r,
        t: p.t,
        orbit_len: p.orbit_len,
        ensemble: p.ensemble,
        pilot_len: p.pilot_len,
        seed: e.seed,
    };
    let distribution = visit_counts(&sys, &e.observable, &e.target, &run)?;
    let k_max = (distribution.pmf.len() + 50).max((5.0 * p.t) as usize + 50);
    let data = if resolved.f0.len() == 1 {
        preimage_orbit_data(&obs, &sys, resolved.f0[0], p.max_order).ok()
    } else {
        None
    };
    let params = data.as_ref().and_then(|d| params_from_orbit_data(d, p.t).ok());
    let compound = params.map(|c| compound_poisson_pmf(&c, k_max)).transpose()?;
    let polya_aeppli_p = p.polya_aeppli_p.or_else(|| {
        params
            .map(|c| c.theta())
            .or_else(|| data.as_ref().and_then(|d| theta_analytic(d).ok()).map(|a| a.theta))
    });
    let polya_aeppli = polya_aeppli_p
        .map(|q| polya_aeppli_vec(q, p.t, 1e-14))
        .transpose()?;
    let poisson = poisson_vec(p.t, 1e-14);
    let tv = |law: &Pmf| total_variation(&distribution.pmf, &law.p);
    Ok(VisitReport {
        tv_compound: compound.as_ref().map(tv),
        tv_polya_aeppli: polya_aeppli.as_ref().map(tv),
        tv_poisson: tv(&poisson),
        distribution,
        compound,
        polya_aeppli_p,
        polya_aeppli,
        poisson,
    })
}

pub fn write_visits(dir: &RunDir, name: &str, rep: &VisitReport) -> Result<()> {
    let len = [
        rep.distribution.pmf.len(),
        rep.compound.as_ref().map_or(0, |c| c.p.len()),
        rep.polya_aeppli.as_ref().map_or(0, |c| c.p.len()),
        rep.poisson.p.len(),
    ]
    .into_iter()
    .max()
    .unwrap_or(0);
    let cell = |law: &Option<Pmf>, k: usize| law.as_ref().map_or(String::new(), |l| num(l.get(k)));
    dir.write_csv(
        name,
        &["k", "empirical", "compound", "polya_aeppli", "poisson"],
        (0..len).map(|k| {
            vec![
                k.to_string(),
                num(rep.distribution.pmf.get(k).copied().unwrap_or(0.0)),
                cell(&rep.compound, k),
                cell(&rep.polya_aeppli, k),
                num(rep.poisson.get(k)),
            ]
        }),
    )?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumReport {
    pub points: usize,
    pub estimated: DimensionSpectrum,
    /// Closed-form spectrum of the same image, where one is known.
    pub exact: Option<Vec<f64>>,
    pub rate: Option<RateFunction>,
}

/// Observable values along an orbit, row-major.
pub fn image_sample(sys: &System, obs: &ObservableSpec, points: usize, burn_in: usize, seed: u64) -> Result<Vec<f64>> {
    let mut rng = SimRng::new(seed, 0);
    let mut x = sys.settled_state(&mut rng);
    for _ in 0..burn_in {
        sys.advance(&mut x, &mut rng);
    }
    let dim = sys.dim();
    let mut out = Vec::with_capacity(points * obs.output_dim(dim));
    for _ in 0..points {
        out.extend(obs.evaluate(sys, &x[..dim], &mut rng)?);
        sys.advance(&mut x, &mut rng);
    }
    Ok(out)
}

/// Exact `D_q` of the image of the invariant measure, for the cases with a
/// closed form: the contracting coordinate of the baker map and the chaos
/// game of a one-dimensional IFS.
pub fn exact_image_dq(sys: &System, obs: &ObservableSpec, q: f64) -> Option<f64> {
    if obs.noise.is_some() {
        return None;
    }
    let x_only = matches!(obs.kind, ObservableKind::Coordinate { index: 0 });
    match &sys.spec().kind {
        MapKind::Baker { alpha, lambda_a, lambda_b } if x_only => {
            baker_dq_solve(*alpha, *lambda_a, *lambda_b, q).ok()
        }
        MapKind::CantorIfs1d { ratios, weights }
            if x_only || obs.kind == ObservableKind::Identity =>
        {
            ifs_dq_solve(ratios, weights, q).ok()
        }
        _ => None,
    }
}

pub fn spectrum(e: &Experiment, p: &SpectrumParams) -> Result<SpectrumReport> {
    let sys = e.system.compile()?;
    let dim = e.observable.output_dim(sys.dim());
    let pts = image_sample(&sys, &e.observable, p.points, p.burn_in, e.seed)?;
    let opts = DqOptions {
        n_ref: p.n_ref,
        metric: p.metric,
        window: None,
    };
    let estimated = estimate_dq(&pts, dim, &p.q, &log_radii(p.r_hi, p.decades), &opts)?;
    let exact: Option<Vec<f64>> = estimated
        .q
        .iter()
        .map(|&q| exact_image_dq(&sys, &e.observable, q))
        .collect();
    let basis = match &exact {
        Some(d) => DimensionSpectrum::from_values(estimated.q.clone(), d.clone())?,
        None => estimated.clone(),
    };
    let rate = if basis.q.len() >= 2 && basis.q[0] <= 1.0 {
        let lo = basis.d.iter().copied().fold(f64::INFINITY, f64::min) - 0.05;
        let hi = basis.d.iter().copied().fold(f64::NEG_INFINITY, f64::max) + 0.05;
        let s: Vec<f64> = (0..p.s_points.max(2))
            .map(|i| lo + (hi - lo) * i as f64 / (p.s_points.max(2) - 1) as f64)
            .collect();
        rate_function(&basis, &s).ok()
    } else {
        None
    };
    Ok(SpectrumReport {
        points: p.points,
        estimated,
        exact,
        rate,
    })
}

pub fn write_spectrum(dir: &RunDir, rep: &SpectrumReport) -> Result<()> {
    let s = &rep.estimated;
    dir.write_csv(
        "spectrum.csv",
        &["q", "d", "exact", "r_lo", "r_hi", "r2", "flagged"],
        s.q.iter().enumerate().map(|(i, q)| {
            let f = s.fits[i];
            vec![
                num(*q),
                num(s.d[i]),
                rep.exact.as_ref().map_or(String::new(), |e| num(e[i])),
                num(f.r_lo),
                num(f.r_hi),
                num(f.r2),
                f.flagged.to_string(),
            ]
        }),
    )?;
    if let Some(rate) = &rep.rate {
        dir.write_csv(
            "rate_function.csv",
            &["s", "value", "boundary"],
            rate.s
                .iter()
                .zip(&rate.value)
                .zip(&rate.boundary)
                .map(|((s, v), b)| vec![num(*s), num(*v), b.to_string()]),
        )?;
    }
    #[derive(Serialize)]
    struct Diagnostics<'a> {
        points: usize,
        radii: &'a [f64],
        fits: &'a [evtobs_core::dimensions::ScalingFit],
        warnings: &'a [String],
        any_flagged: bool,
    }
    dir.write_json(
        "diagnostics.json",
        &Diagnostics {
            points: rep.points,
            radii: &s.radii,
            fits: &s.fits,
            warnings: &s.warnings,
            any_flagged: s.any_flagged(),
        },
    )?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmbedRow {
    pub k: usize,
    pub estimate: DimensionEstimate,
}

/// Dimension of the delay observables `f_k`, `k = 1..=k_max`.
pub fn embed(e: &Experiment, p: &EmbedParams) -> Result<Vec<EmbedRow>> {
    (1..=p.k_max)
        .map(|k| {
            let obs: ObservableSpec = ObservableKind::Delay {
                base: Box::new(e.observable.clone()),
                k,
                lag: p.lag,
            }
            .into();
            let ex = Experiment {
                observable: obs,
                ..e.clone()
            };
            let est = dimension(
                &ex,
                &DimensionParams {
                    m: p.m,
                    n: p.n,
                    trials: p.trials,
                    gumbel_constrained: true,
                },
            )?;
            Ok(EmbedRow { k, estimate: est })
        })
        .collect()
}

pub fn write_embed(dir: &RunDir, rows: &[EmbedRow]) -> Result<()> {
    dir.write_csv(
        "embed.csv",
        &["k", "d", "sd", "trials"],
        rows.iter().map(|r| {
            vec![
                r.k.to_string(),
                num(r.estimate.d),
                num(r.estimate.sd),
                r.estimate.trials.to_string(),
            ]
        }),
    )?;
    Ok(())
}

pub fn write_trajectory(dir: &RunDir, name: &str, t: &Trajectory) -> Result<()> {
    let labels = ["x", "y", "z"];
    dir.write_csv(
        name,
        &labels[..t.dim],
        t.states.iter().map(|s| s[..t.dim].iter().map(|v| num(*v)).collect::<Vec<_>>()),
    )?;
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
struct Summary<'a, T: Serialize> {
    method: &'static str,
    seed: u64,
    config: &'a ExperimentConfig,
    result: T,
}

/// Runs `method` for the explicit experiment of `cfg`, writing tables,
/// `summary.json` and the config echo into `dir`.
pub fn run_method(cfg: &ExperimentConfig, method: &Method, dir: &RunDir) -> Result<serde_json::Value> {
    let e = cfg.experiment()?;
    let echo = ExperimentConfig {
        method: Some(method.clone()),
        ..cfg.clone()
    };
    dir.write_config(&echo)?;
    let result = match method {
        Method::Dimension(p) => {
            let est = dimension(&e, p)?;
            write_dimension(dir, &est)?;
            serde_json::json!({ "d": est.d, "sd": est.sd, "trials": est.trials })
        }
        Method::Ei(p) => {
            let est = ei(&e, p)?;
            write_ei(dir, &est)?;
            serde_json::json!({ "theta": est.theta, "sd": est.sd, "trials": est.per_trial.len() })
        }
        Method::Visits(p) => {
            let rep = visits(&e, p)?;
            write_visits(dir, "pmf.csv", &rep)?;
            serde_json::json!({
                "r": rep.distribution.r,
                "horizon": rep.distribution.horizon,
                "measure": rep.distribution.measure_estimate,
                "measure_half_pilot": rep.distribution.measure_half_pilot,
                "polya_aeppli_p": rep.polya_aeppli_p,
                "tv_compound": rep.tv_compound,
                "tv_polya_aeppli": rep.tv_polya_aeppli,
                "tv_poisson": rep.tv_poisson,
            })
        }
        Method::Spectrum(p) => {
            let rep = spectrum(&e, p)?;
            write_spectrum(dir, &rep)?;
            serde_json::json!({ "q": rep.estimated.q, "d": rep.estimated.d, "exact": rep.exact })
        }
        Method::Embed(p) => {
            let rows = embed(&e, p)?;
            write_embed(dir, &rows)?;
            serde_json::json!(rows
                .iter()
                .map(|r| serde_json::json!({ "k": r.k, "d": r.estimate.d, "sd": r.estimate.sd }))
                .collect::<Vec<_>>())
        }
    };
    let summary = Summary {
        method: method.name(),
        seed: cfg.seed,
        config: &echo,
        result,
    };
    dir.write_json("summary.json", &summary)?;
    Ok(serde_json::to_value(&summary)?)
}

