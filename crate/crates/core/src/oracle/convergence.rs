//! Refinement studies and fitted convergence rates.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Errors at or below this are treated as round-off rather than discretization error.
pub const FLOOR: f64 = 1e-9;
/// Minimum number of refinement levels in a study.
pub const MIN_LEVELS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub n_x: usize,
    pub error: f64,
    /// `log₂(e_{i−1}/e_i)` against the previous level, scaled by the grid-size ratio.
    pub rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateTable {
    pub rows: Vec<RateRow>,
    /// Least-squares slope of `−log e` against `log h`; absent at the floor.
    pub fitted_rate: Option<f64>,
    /// Every error is at or below [`FLOOR`].
    pub floor: bool,
}

impl RateTable {
    pub fn from_errors(levels: &[(usize, f64)]) -> Result<Self> {
        if levels.len() < MIN_LEVELS {
            return Err(Error::InvalidInput(format!(
                "a convergence study needs at least {MIN_LEVELS} levels, got {}",
                levels.len()
            )));
        }
        if levels
            .iter()
            .any(|&(n, e)| n < 2 || !(e >= 0.0) || !e.is_finite())
        {
            return Err(Error::InvalidInput(
                "levels need n_x >= 2 and finite nonnegative errors".into(),
            ));
        }
        if levels.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::InvalidInput(
                "refinement levels must increase".into(),
            ));
        }
        let floor = levels.iter().all(|&(_, e)| e <= FLOOR);
        let log_h = |n: usize| -((n - 1) as f64).ln();
        let rows = levels
            .iter()
            .enumerate()
            .map(|(i, &(n_x, error))| {
                let rate = (i > 0 && !floor && error > 0.0 && levels[i - 1].1 > 0.0).then(|| {
                    let (n0, e0) = levels[i - 1];
                    (e0 / error).ln() / (log_h(n0) - log_h(n_x))
                });
                RateRow { n_x, error, rate }
            })
            .collect();
        let fitted_rate = if floor || levels.iter().any(|&(_, e)| e == 0.0) {
            None
        } else {
            let pts: Vec<(f64, f64)> = levels.iter().map(|&(n, e)| (log_h(n), e.ln())).collect();
            let k = pts.len() as f64;
            let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
            let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
            let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
            let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
            Some(sxy / sxx)
        };
        Ok(Self {
            rows,
            fitted_rate,
            floor,
        })
    }

    /// Errors strictly decrease from level to level.
    pub fn is_monotone(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].error < w[0].error)
    }

    /// CSV with columns `n_x, error, rate`; the rate is empty where undefined.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["n_x", "error", "rate"])?;
        for r in &self.rows {
            let rate = match r.rate {
                Some(v) => format!("{v:.6}"),
                None if self.floor => "floor".to_string(),
                None => String::new(),
            };
            w.write_record([r.n_x.to_string(), format!("{:.6e}", r.error), rate])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Evaluate `error_at` on each grid size and fit a rate.
pub fn convergence_study<F>(levels: &[usize], mut error_at: F) -> Result<RateTable>
where
    F: FnMut(usize) -> Result<f64>,
{
    if levels.len() < MIN_LEVELS {
        return Err(Error::InvalidInput(format!(
            "a convergence study needs at least {MIN_LEVELS} levels, got {}",
            levels.len()
        )));
    }
    let errors = levels
        .iter()
        .map(|&n| Ok((n, error_at(n)?)))
        .collect::<Result<Vec<_>>>()?;
    RateTable::from_errors(&errors)
}
