use alloc::format;

#[allow(unused_imports)]
use num_traits::Float;

use super::simplex::{nelder_mead, SimplexOptions};
use super::{mean_sd, BlockMaximaSeries};
use crate::special::EULER_GAMMA;
use crate::{Error, Result};

/// Fewest block maxima accepted by [`fit_gev`].
pub const MIN_MAXIMA: usize = 50;

/// Below this `|xi|` the Gumbel form of the likelihood is used.
const GUMBEL_XI: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GevFit {
    pub kappa: f64,
    pub sigma: f64,
    pub xi: f64,
    pub log_likelihood: f64,
    pub converged: bool,
    pub n_maxima: usize,
    pub gumbel_constrained: bool,
}

impl GevFit {
    /// Local-dimension estimate `1 / sigma`.
    pub fn dimension(&self) -> f64 {
        1.0 / self.sigma
    }
}

/// GEV log-likelihood; `-inf` if any sample violates `1 + xi (y - kappa) / sigma > 0`.
pub fn gev_log_likelihood(data: &[f64], kappa: f64, sigma: f64, xi: f64) -> f64 {
    if !(sigma > 0.0) {
        return f64::NEG_INFINITY;
    }
    let n = data.len() as f64;
    if xi.abs() < GUMBEL_XI {
        let mut s = 0.0;
        for &y in data {
            let z = (y - kappa) / sigma;
            s += z + (-z).exp();
        }
        return -n * sigma.ln() - s;
    }
    let mut sum_log = 0.0;
    let mut sum_pow = 0.0;
    for &y in data {
        let t = 1.0 + xi * (y - kappa) / sigma;
        if !(t > 0.0) {
            return f64::NEG_INFINITY;
        }
        let lt = t.ln();
        sum_log += lt;
        sum_pow += (-lt / xi).exp();
    }
    -n * sigma.ln() - (1.0 + 1.0 / xi) * sum_log - sum_pow
}

/// Maximum-likelihood GEV fit by simplex search on `(kappa, ln sigma, xi)`,
/// started from the Gumbel moment estimates. The maxima are standardized
/// first and the result mapped back, so the fit is location and scale
/// equivariant. With `gumbel_constrained`, `xi` is pinned to 0.
pub fn fit_gev(bm: &BlockMaximaSeries, gumbel_constrained: bool) -> Result<GevFit> {
    let data = &bm.maxima;
    if data.len() < MIN_MAXIMA {
        return Err(Error::InsufficientData {
            what: "block maxima",
            got: data.len(),
            need: MIN_MAXIMA,
        });
    }
    if data.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter(
            "block maxima must be finite".into(),
        ));
    }
    let (mean, sd) = mean_sd(data);
    if !(sd > 1e-12 * (1.0 + mean.abs())) {
        return Err(Error::Degenerate(format!(
            "all {} block maxima are (nearly) equal to {mean}",
            data.len()
        )));
    }
    let std: alloc::vec::Vec<f64> = data.iter().map(|v| (v - mean) / sd).collect();
    let s0 = 6f64.sqrt() / core::f64::consts::PI;
    let k0 = -EULER_GAMMA * s0;
    let opts = SimplexOptions::default();

    let (kappa, log_sigma, xi, ll, converged) = if gumbel_constrained {
        let r = nelder_mead(
            |p| -gev_log_likelihood(&std, p[0], p[1].exp(), 0.0),
            &[k0, s0.ln()],
            &[0.2, 0.2],
            &opts,
        );
        (r.x[0], r.x[1], 0.0, -r.f, r.converged)
    } else {
        let r = nelder_mead(
            |p| -gev_log_likelihood(&std, p[0], p[1].exp(), p[2]),
            &[k0, s0.ln(), 0.0],
            &[0.2, 0.2, 0.1],
            &opts,
        );
        (r.x[0], r.x[1], r.x[2], -r.f, r.converged)
    };
    if !ll.is_finite() {
        return Err(Error::Degenerate(
            "GEV likelihood is not finite anywhere along the search".into(),
        ));
    }
    Ok(GevFit {
        kappa: mean + sd * kappa,
        sigma: sd * log_sigma.exp(),
        xi,
        log_likelihood: ll - data.len() as f64 * sd.ln(),
        converged,
        n_maxima: data.len(),
        gumbel_constrained,
    })
}
