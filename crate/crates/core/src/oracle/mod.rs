//! Ground truth that does not go through the semigroup machinery: a direct
//! finite-difference solve, closed-form single-mode solutions, refinement
//! studies and field comparisons.

mod convergence;
mod direct;
mod exact;

pub use convergence::{convergence_study, RateRow, RateTable, FLOOR, MIN_LEVELS};
pub use direct::{direct_solve, OracleSolution, MIN_DIRECT_NX};
pub use exact::{
    manufactured_forced, manufactured_homogeneous, ExactCase, ModeProfile, Polynomial,
    MAX_PROFILE_DEGREE,
};

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::sup_norm;
use crate::problem::{CylinderGeometry, Side};
use crate::transmission::TransmissionSolution;

/// Anything that yields `u(x)` as a section vector on either piece.
pub trait FieldEvaluator {
    fn geometry(&self) -> CylinderGeometry;
    fn field(&self, side: Side, x: f64) -> Result<DVector<f64>>;
}

impl FieldEvaluator for TransmissionSolution {
    fn geometry(&self) -> CylinderGeometry {
        self.geometry
    }

    fn field(&self, side: Side, x: f64) -> Result<DVector<f64>> {
        self.side(side).evaluate(0, x)
    }
}

impl FieldEvaluator for OracleSolution {
    fn geometry(&self) -> CylinderGeometry {
        *OracleSolution::geometry(self)
    }

    fn field(&self, side: Side, x: f64) -> Result<DVector<f64>> {
        Ok(self.value(side, x))
    }
}

impl FieldEvaluator for ExactCase {
    fn geometry(&self) -> CylinderGeometry {
        self.geometry
    }

    fn field(&self, side: Side, x: f64) -> Result<DVector<f64>> {
        Ok(self.value(side, x))
    }
}

/// Gap between two fields over a probe grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    /// Largest pointwise gap.
    pub sup: f64,
    /// Root-mean-square gap over the probes.
    pub l2_scaled: f64,
    /// Largest value of the reference field.
    pub reference_sup: f64,
    pub probes: usize,
}

impl Comparison {
    pub fn relative_sup(&self) -> f64 {
        crate::linalg::scaled(self.sup, self.reference_sup)
    }
}

/// `probes` uniform points per piece, ends included.
pub fn probe_grid(geom: &CylinderGeometry, probes: usize) -> Vec<(Side, f64)> {
    let probes = probes.max(2);
    Side::BOTH
        .into_iter()
        .flat_map(|side| {
            let (lo, hi) = geom.interval(side);
            (0..probes).map(move |i| {
                let x = if i + 1 == probes {
                    hi
                } else {
                    lo + (hi - lo) * i as f64 / (probes - 1) as f64
                };
                (side, x)
            })
        })
        .collect()
}

/// Compare `a` against the reference `b` on a shared probe grid.
pub fn compare(
    a: &dyn FieldEvaluator,
    b: &dyn FieldEvaluator,
    probes: usize,
) -> Result<Comparison> {
    let ga = a.geometry();
    let gb = b.geometry();
    if ga != gb {
        return Err(Error::InvalidInput(
            "compared fields live on different geometries".into(),
        ));
    }
    let grid = probe_grid(&ga, probes);
    let (mut sup, mut sq, mut reference_sup) = (0.0_f64, 0.0, 0.0_f64);
    for &(side, x) in &grid {
        let ua = a.field(side, x)?;
        let ub = b.field(side, x)?;
        if ua.len() != ub.len() {
            return Err(Error::DimensionMismatch {
                expected: ub.len(),
                got: ua.len(),
            });
        }
        let d = &ua - &ub;
        sup = sup.max(sup_norm(&d));
        sq += d.norm_squared() / d.len().max(1) as f64;
        reference_sup = reference_sup.max(sup_norm(&ub));
    }
    Ok(Comparison {
        sup,
        l2_scaled: (sq / grid.len() as f64).sqrt(),
        reference_sup,
        probes: grid.len(),
    })
}
