//! Pressure-like gridded series: a baker-map driver read through a smooth
//! random field, one column per grid point.

use std::f64::consts::TAU;

use evtobs_core::dynsys::SystemSpec;
use evtobs_core::SimRng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::ingest::IngestedSeries;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticGrid {
    pub rows: usize,
    pub cols: usize,
    /// Fourier modes per column.
    pub modes: usize,
    pub seed: u64,
}

impl Default for SyntheticGrid {
    fn default() -> Self {
        Self {
            rows: 20_000,
            cols: 16,
            modes: 3,
            seed: 0,
        }
    }
}

struct Mode {
    amp: f64,
    kx: f64,
    ky: f64,
    phase: f64,
}

/// Column `j` is `1000 + 10 sum_l A_jl sin(2 pi (kx x + ky y) + phase)`
/// along the orbit `(x, y)` of a baker map; wave numbers are 1..=3.
pub fn synthetic_grid(spec: &SyntheticGrid) -> Result<IngestedSeries> {
    let sys = SystemSpec::baker(1.0 / 3.0, 0.3, 0.2).compile()?;
    let mut rng = SimRng::new(spec.seed, 0);
    let field: Vec<Vec<Mode>> = (0..spec.cols)
        .map(|_| {
            (1..=spec.modes)
                .map(|l| Mode {
                    amp: rng.uniform_in(0.5, 1.0) / l as f64,
                    kx: (1 + (rng.next_u64() % 3)) as f64,
                    ky: (1 + (rng.next_u64() % 3)) as f64,
                    phase: rng.uniform() * TAU,
                })
                .collect()
        })
        .collect();
    let mut drive = SimRng::new(spec.seed, 1);
    let mut x = sys.settled_state(&mut drive);
    let mut rows = Vec::with_capacity(spec.rows);
    for _ in 0..spec.rows {
        rows.push(
            field
                .iter()
                .map(|modes| {
                    1000.0
                        + 10.0
                            * modes
                                .iter()
                                .map(|m| m.amp * (TAU * (m.kx * x[0] + m.ky * x[1]) + m.phase).sin())
                                .sum::<f64>()
                })
                .collect(),
        );
        sys.advance(&mut x, &mut drive);
    }
    let labels = (0..spec.cols).map(|j| format!("p{j}")).collect();
    IngestedSeries::from_rows(labels, &rows)
}
