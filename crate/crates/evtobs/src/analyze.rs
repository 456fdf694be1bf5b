//! Block-maxima and extremal-index analysis of an ingested series, with the
//! target taken at sampled rows.

use evtobs_core::evt::{block_maxima, fit_gev, mean_sd, GevFit};
use evtobs_core::extremal::{theta_hat, ExceedanceSeries};
use evtobs_core::observables::{Metric, ResolvedTarget};
use evtobs_core::SimRng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::ingest::IngestedSeries;

/// Fewest blocks an analysis accepts.
pub const MIN_BLOCKS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SeriesObservable {
    /// Mean over all columns of a row.
    SpatialMean,
    Coordinate { index: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TargetRows {
    Sampled { count: usize, seed: u64 },
    Rows { rows: Vec<usize> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesOptions {
    pub observable: SeriesObservable,
    pub n: usize,
    pub quantile: f64,
    pub targets: TargetRows,
}

impl Default for SeriesOptions {
    fn default() -> Self {
        Self {
            observable: SeriesObservable::SpatialMean,
            n: 50,
            quantile: 0.99,
            targets: TargetRows::Sampled { count: 20, seed: 0 },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetResult {
    pub row: usize,
    pub f0: f64,
    pub fit: GevFit,
    pub d: f64,
    /// `1 - q_0`.
    pub theta0: f64,
    pub n_exceedances: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesAnalysis {
    pub rows: usize,
    pub targets: Vec<TargetResult>,
    pub d_mean: f64,
    pub d_sd: f64,
    pub theta0_mean: f64,
    pub theta0_sd: f64,
}

pub fn observable_values(series: &IngestedSeries, obs: SeriesObservable) -> Result<Vec<f64>> {
    match obs {
        SeriesObservable::SpatialMean => Ok((0..series.rows)
            .map(|i| series.row(i).iter().sum::<f64>() / series.cols as f64)
            .collect()),
        SeriesObservable::Coordinate { index } if index < series.cols => Ok(series.column(index)),
        SeriesObservable::Coordinate { index } => Err(evtobs_core::Error::InvalidParameter(
            format!("column {index} out of range ({} columns)", series.cols),
        )
        .into()),
    }
}

/// `phi` against `f0`, block maxima, Gumbel fit and `theta_1` for one target
/// value; the same steps as an in-memory run on an orbit.
pub fn analyze_values(values: &[f64], f0: f64, n: usize, quantile: f64) -> Result<(GevFit, f64, usize)> {
    let target = ResolvedTarget {
        f0: vec![f0],
        metric: Metric::Euclidean,
    };
    let phi: Vec<f64> = values.iter().map(|v| target.phi_of_value(&[*v])).collect();
    let fit = fit_gev(&block_maxima(&phi, n)?, true)?;
    let es = ExceedanceSeries::from_phi(&phi, quantile)?;
    let c = theta_hat(&es, 1)?;
    Ok((fit, c.theta, es.n_hits()))
}

pub fn analyze_series(series: &IngestedSeries, opts: &SeriesOptions) -> Result<SeriesAnalysis> {
    series.require_block_size(opts.n)?;
    if series.rows < MIN_BLOCKS * opts.n {
        return Err(evtobs_core::Error::InsufficientData {
            what: "rows for 100 blocks",
            got: series.rows,
            need: MIN_BLOCKS * opts.n,
        }
        .into());
    }
    let values = observable_values(series, opts.observable)?;
    if values.iter().all(|v| *v == values[0]) {
        return Err(evtobs_core::Error::Degenerate("the observable is constant along the series".into()).into());
    }
    let rows: Vec<usize> = match &opts.targets {
        TargetRows::Rows { rows } => rows.clone(),
        TargetRows::Sampled { count, seed } => {
            let mut rng = SimRng::new(*seed, 0);
            (0..*count)
                .map(|_| ((rng.uniform() * series.rows as f64) as usize).min(series.rows - 1))
                .collect()
        }
    };
    let mut targets = Vec::with_capacity(rows.len());
    for row in rows {
        let f0 = *values.get(row).ok_or_else(|| {
            evtobs_core::Error::InvalidParameter(format!("target row {row} out of range"))
        })?;
        let (fit, theta0, n_exceedances) = analyze_values(&values, f0, opts.n, opts.quantile)?;
        targets.push(TargetResult {
            row,
            f0,
            d: fit.dimension(),
            fit,
            theta0,
            n_exceedances,
        });
    }
    if targets.is_empty() {
        return Err(evtobs_core::Error::InvalidParameter("no target rows".into()).into());
    }
    let (d_mean, d_sd) = mean_sd(&targets.iter().map(|t| t.d).collect::<Vec<_>>());
    let (theta0_mean, theta0_sd) = mean_sd(&targets.iter().map(|t| t.theta0).collect::<Vec<_>>());
    Ok(SeriesAnalysis {
        rows: series.rows,
        targets,
        d_mean,
        d_sd,
        theta0_mean,
        theta0_sd,
    })
}
