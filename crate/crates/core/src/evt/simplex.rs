//! Derivative-free Nelder-Mead minimization.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplexOptions {
    pub max_iter: usize,
    /// Stop when the spread of objective values over the simplex falls below
    /// `f_tol * (1 + |f_best|)` ...
    pub f_tol: f64,
    /// ... and every vertex lies within `x_tol` of the best one.
    pub x_tol: f64,
    /// Fresh simplices built around the best point after convergence, to
    /// escape premature collapse.
    pub restarts: usize,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self {
            max_iter: 4000,
            f_tol: 1e-13,
            x_tol: 1e-10,
            restarts: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimplexResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Minimizes `f` from `x0` with initial edge lengths `step`. Non-finite
/// objective values are treated as `+inf`.
pub fn nelder_mead<F>(mut f: F, x0: &[f64], step: &[f64], opts: &SimplexOptions) -> SimplexResult
where
    F: FnMut(&[f64]) -> f64,
{
    let mut eval = |x: &[f64]| {
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let mut best_x = x0.to_vec();
    let mut best_f = eval(x0);
    let mut total = 0;
    let mut converged = false;
    for round in 0..=opts.restarts {
        let scale = if round == 0 { 1.0 } else { 0.1 };
        let (x, fx, it, ok) = run(&mut eval, &best_x, step, scale, opts);
        total += it;
        let improved = fx < best_f - opts.f_tol * (1.0 + best_f.abs());
        if fx <= best_f {
            best_x = x;
            best_f = fx;
        }
        converged = ok;
        if round > 0 && !improved {
            break;
        }
    }
    SimplexResult {
        x: best_x,
        f: best_f,
        iterations: total,
        converged,
    }
}

fn run<F>(
    f: &mut F,
    x0: &[f64],
    step: &[f64],
    scale: f64,
    opts: &SimplexOptions,
) -> (Vec<f64>, f64, usize, bool)
where
    F: FnMut(&[f64]) -> f64,
{
    let n = x0.len();
    let mut pts: Vec<Vec<f64>> = vec![x0.to_vec()];
    for i in 0..n {
        let mut p = x0.to_vec();
        p[i] += step[i] * scale;
        pts.push(p);
    }
    let mut vals: Vec<f64> = pts.iter().map(|p| f(p)).collect();
    let mut order: Vec<usize> = (0..=n).collect();
    let mut centroid = vec![0.0; n];
    let mut trial = vec![0.0; n];
    let mut trial2 = vec![0.0; n];

    for it in 0..opts.max_iter {
        order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        let (lo, hi, second) = (order[0], order[n], order[n - 1]);
        let spread = vals[hi] - vals[lo];
        let size = pts
            .iter()
            .flat_map(|p| p.iter().zip(&pts[lo]).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if vals[lo].is_finite()
            && spread <= opts.f_tol * (1.0 + vals[lo].abs())
            && size <= opts.x_tol
        {
            return (pts[lo].clone(), vals[lo], it, true);
        }

        centroid.iter_mut().for_each(|c| *c = 0.0);
        for &i in &order[..n] {
            for (c, v) in centroid.iter_mut().zip(&pts[i]) {
                *c += v / n as f64;
            }
        }
        let along = |t: &mut Vec<f64>, coef: f64, pts: &[Vec<f64>]| {
            for j in 0..n {
                t[j] = centroid[j] + coef * (pts[hi][j] - centroid[j]);
            }
        };

        along(&mut trial, -1.0, &pts);
        let fr = f(&trial);
        if fr < vals[lo] {
            along(&mut trial2, -2.0, &pts);
            let fe = f(&trial2);
            if fe < fr {
                pts[hi].copy_from_slice(&trial2);
                vals[hi] = fe;
            } else {
                pts[hi].copy_from_slice(&trial);
                vals[hi] = fr;
            }
            continue;
        }
        if fr < vals[second] {
            pts[hi].copy_from_slice(&trial);
            vals[hi] = fr;
            continue;
        }
        // contraction, outside or inside
        let outside = fr < vals[hi];
        along(&mut trial2, if outside { -0.5 } else { 0.5 }, &pts);
        let fc = f(&trial2);
        if fc < if outside { fr } else { vals[hi] } {
            pts[hi].copy_from_slice(&trial2);
            vals[hi] = fc;
            continue;
        }
        for &i in &order[1..] {
            for j in 0..n {
                pts[i][j] = pts[lo][j] + 0.5 * (pts[i][j] - pts[lo][j]);
            }
            vals[i] = f(&pts[i]);
        }
    }
    order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
    (pts[order[0]].clone(), vals[order[0]], opts.max_iter, false)
}
