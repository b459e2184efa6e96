//! Right-hand sides `f±` of the fourth-order equations, stored per eigenmode
//! of the section operator.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::io::Read;
use std::sync::Arc;

use nalgebra::DVector;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::linalg::interp_cubic;
use crate::problem::{CylinderGeometry, Side};
use crate::section::SectionOperator;

type ModalFn = Arc<dyn Fn(usize, f64) -> f64 + Send + Sync>;

/// Forcing on one interval, as modal coefficients `f̂ⱼ(x)`.
#[derive(Clone)]
pub enum SideForcing {
    Zero,
    /// Uniform samples on `[lo, hi]`, one row per mode.
    Sampled {
        lo: f64,
        hi: f64,
        values: Vec<Vec<f64>>,
    },
    /// Closed form `(mode, x) ↦ f̂ⱼ(x)`.
    Analytic(ModalFn),
}

impl fmt::Debug for SideForcing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SideForcing::Zero => write!(f, "Zero"),
            SideForcing::Sampled { lo, hi, values } => f
                .debug_struct("Sampled")
                .field("lo", lo)
                .field("hi", hi)
                .field("modes", &values.len())
                .field("samples", &values.first().map_or(0, Vec::len))
                .finish(),
            SideForcing::Analytic(_) => write!(f, "Analytic"),
        }
    }
}

impl SideForcing {
    pub fn is_zero(&self) -> bool {
        matches!(self, SideForcing::Zero)
    }

    fn sample(&self, mode: usize, x: f64) -> f64 {
        match self {
            SideForcing::Zero => 0.0,
            SideForcing::Sampled { lo, hi, values } => {
                let row = &values[mode];
                let h = (hi - lo) / (row.len() - 1) as f64;
                interp_cubic(*lo, h, row, x)
            }
            SideForcing::Analytic(g) => g(mode, x),
        }
    }
}

/// Modal forcing on both intervals, with an optional label for closed-form cases.
#[derive(Debug, Clone)]
pub struct ModalForcing {
    dim: usize,
    minus: SideForcing,
    plus: SideForcing,
    tag: Option<String>,
}

impl ModalForcing {
    pub fn zero(dim: usize) -> Self {
        Self {
            dim,
            minus: SideForcing::Zero,
            plus: SideForcing::Zero,
            tag: Some("zero".into()),
        }
    }

    pub fn new(dim: usize, minus: SideForcing, plus: SideForcing) -> Result<Self> {
        let forcing = Self {
            dim,
            minus,
            plus,
            tag: None,
        };
        forcing.validate()?;
        Ok(forcing)
    }

    /// Closed-form forcing from a function of `(side, mode, x)`.
    pub fn analytic<G>(dim: usize, tag: impl Into<String>, g: G) -> Self
    where
        G: Fn(Side, usize, f64) -> f64 + Send + Sync + 'static,
    {
        let g = Arc::new(g);
        let gm = Arc::clone(&g);
        Self {
            dim,
            minus: SideForcing::Analytic(Arc::new(move |j, x| gm(Side::Minus, j, x))),
            plus: SideForcing::Analytic(Arc::new(move |j, x| g(Side::Plus, j, x))),
            tag: Some(tag.into()),
        }
    }

    /// Forcing whose particular solution on `side` is `sin(κ(x − left))` in every
    /// mode, `κ = kπ/len`; the other side is unforced.
    pub fn sine(
        section: &SectionOperator,
        geom: &CylinderGeometry,
        side: Side,
        k: u32,
    ) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidInput("sine forcing needs k >= 1".into()));
        }
        let (lo, hi) = geom.interval(side);
        let kappa = k as f64 * PI / (hi - lo);
        let mu = section.eigenvalues().to_vec();
        let active: ModalFn = Arc::new(move |j, x| {
            let w = kappa * kappa - mu[j];
            w * w * (kappa * (x - lo)).sin()
        });
        let (minus, plus) = match side {
            Side::Minus => (SideForcing::Analytic(active), SideForcing::Zero),
            Side::Plus => (SideForcing::Zero, SideForcing::Analytic(active)),
        };
        Ok(Self {
            dim: section.dim(),
            minus,
            plus,
            tag: Some(format!("sine {side} {k}")),
        })
    }

    /// Read long-format CSV with columns `x, mode_index, value, side`.
    ///
    /// Each present (side, mode) must sample the whole interval on one uniform
    /// grid; absent sides or modes are zero.
    pub fn from_csv<R: Read>(reader: R, dim: usize, geom: &CylinderGeometry) -> Result<Self> {
        #[derive(Deserialize)]
        struct Row {
            x: f64,
            mode_index: usize,
            value: f64,
            side: String,
        }
        let mut groups: BTreeMap<(Side, usize), Vec<(f64, f64)>> = BTreeMap::new();
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(reader);
        for row in rdr.deserialize() {
            let row: Row = row?;
            let side: Side = row.side.parse()?;
            if row.mode_index >= dim {
                return Err(Error::InvalidInput(format!(
                    "mode_index {} out of range 0..{dim}",
                    row.mode_index
                )));
            }
            if !row.x.is_finite() || !row.value.is_finite() {
                return Err(Error::InvalidInput("non-finite forcing sample".into()));
            }
            groups
                .entry((side, row.mode_index))
                .or_default()
                .push((row.x, row.value));
        }

        let mut count: Option<usize> = None;
        let mut build = |side: Side| -> Result<SideForcing> {
            let (lo, hi) = geom.interval(side);
            let present: Vec<_> = groups.iter().filter(|((s, _), _)| *s == side).collect();
            if present.is_empty() {
                return Ok(SideForcing::Zero);
            }
            let mut values = Vec::with_capacity(dim);
            for j in 0..dim {
                let Some(samples) = groups.get(&(side, j)) else {
                    values.push(None);
                    continue;
                };
                let mut samples = samples.clone();
                samples.sort_by(|p, q| p.0.total_cmp(&q.0));
                let n = samples.len();
                if n < 4 {
                    return Err(Error::InvalidInput(format!(
                        "{side} mode {j}: need at least 4 samples"
                    )));
                }
                if let Some(c) = count {
                    if c != n {
                        return Err(Error::InvalidInput(format!(
                            "{side} mode {j}: {n} samples, expected {c} like the other series"
                        )));
                    }
                }
                count = Some(n);
                let h = (hi - lo) / (n - 1) as f64;
                let tol = 1e-9 * (hi - lo).max(1.0);
                for (i, &(x, _)) in samples.iter().enumerate() {
                    if (x - (lo + i as f64 * h)).abs() > tol {
                        return Err(Error::InvalidInput(format!(
                            "{side} mode {j}: samples must lie on a uniform grid over [{lo}, {hi}]"
                        )));
                    }
                }
                values.push(Some(samples.into_iter().map(|p| p.1).collect::<Vec<_>>()));
            }
            let n = count.unwrap_or(0);
            let values = values
                .into_iter()
                .map(|v| v.unwrap_or_else(|| vec![0.0; n]))
                .collect();
            Ok(SideForcing::Sampled { lo, hi, values })
        };
        let minus = build(Side::Minus)?;
        let plus = build(Side::Plus)?;
        let mut forcing = Self::new(dim, minus, plus)?;
        forcing.tag = Some("csv".into());
        Ok(forcing)
    }

    fn validate(&self) -> Result<()> {
        let mut counts = Vec::new();
        for side in [&self.minus, &self.plus] {
            if let SideForcing::Sampled { values, lo, hi } = side {
                if values.len() != self.dim {
                    return Err(Error::DimensionMismatch {
                        expected: self.dim,
                        got: values.len(),
                    });
                }
                if !(hi > lo) {
                    return Err(Error::InvalidInput("sampled forcing needs lo < hi".into()));
                }
                for row in values {
                    if row.len() < 4 {
                        return Err(Error::InvalidInput(
                            "sampled forcing needs at least 4 samples".into(),
                        ));
                    }
                    if row.iter().any(|v| !v.is_finite()) {
                        return Err(Error::InvalidInput("non-finite forcing sample".into()));
                    }
                    counts.push(row.len());
                }
            }
        }
        if counts.windows(2).any(|w| w[0] != w[1]) {
            return Err(Error::InvalidInput(
                "sample counts differ between series".into(),
            ));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn tag(&self) -> Option<&str> {
        self.tag.as_deref()
    }

    pub fn with_tag(mut self, tag: impl Into<String>) -> Self {
        self.tag = Some(tag.into());
        self
    }

    pub fn side(&self, side: Side) -> &SideForcing {
        match side {
            Side::Minus => &self.minus,
            Side::Plus => &self.plus,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.minus.is_zero() && self.plus.is_zero()
    }

    /// `f̂ⱼ(x)` on `side`.
    pub fn modal_value(&self, side: Side, mode: usize, x: f64) -> f64 {
        self.side(side).sample(mode, x)
    }

    /// All modal coefficients at `x`.
    pub fn modal_vector(&self, side: Side, x: f64) -> DVector<f64> {
        DVector::from_fn(self.dim, |j, _| self.modal_value(side, j, x))
    }

    /// `αf + βg` as a closed-form forcing.
    pub fn combine(alpha: f64, f: &Self, beta: f64, g: &Self) -> Result<Self> {
        if f.dim != g.dim {
            return Err(Error::DimensionMismatch {
                expected: f.dim,
                got: g.dim,
            });
        }
        let (f, g) = (f.clone(), g.clone());
        Ok(Self::analytic(f.dim, "combination", move |side, j, x| {
            alpha * f.modal_value(side, j, x) + beta * g.modal_value(side, j, x)
        }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sine_forcing_shape() {
        let s = SectionOperator::from_matrix(nalgebra::DMatrix::from_element(1, 1, -1.0)).unwrap();
        let g = CylinderGeometry::new(0.0, 1.0, 3.0).unwrap();
        let f = ModalForcing::sine(&s, &g, Side::Minus, 1).unwrap();
        let k2 = PI * PI;
        assert!((f.modal_value(Side::Minus, 0, 0.5) - (k2 + 1.0).powi(2)).abs() < 1e-12);
        assert_eq!(f.modal_value(Side::Plus, 0, 2.0), 0.0);
        assert!(ModalForcing::sine(&s, &g, Side::Plus, 0).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let g = CylinderGeometry::new(0.0, 1.0, 2.0).unwrap();
        let mut text = String::from("x,mode_index,value,side\n");
        for i in 0..5 {
            let x = 1.0 + i as f64 * 0.25;
            text.push_str(&format!("{x},1,{},plus\n", x * x));
        }
        let f = ModalForcing::from_csv(text.as_bytes(), 2, &g).unwrap();
        assert_eq!(f.modal_value(Side::Plus, 1, 1.5), 2.25);
        assert!((f.modal_value(Side::Plus, 1, 1.6) - 2.56).abs() < 1e-12);
        assert_eq!(f.modal_value(Side::Plus, 0, 1.6), 0.0);
        assert_eq!(f.modal_value(Side::Minus, 1, 0.6), 0.0);
    }

    #[test]
    fn csv_rejects_bad_grids() {
        let g = CylinderGeometry::new(0.0, 1.0, 2.0).unwrap();
        let bad =
            "x,mode_index,value,side\n0,0,1,minus\n0.3,0,1,minus\n0.5,0,1,minus\n1,0,1,minus\n";
        assert!(ModalForcing::from_csv(bad.as_bytes(), 1, &g).is_err());
        let wrong_mode = "x,mode_index,value,side\n0,3,1,minus\n";
        assert!(ModalForcing::from_csv(wrong_mode.as_bytes(), 1, &g).is_err());
        let wrong_side = "x,mode_index,value,side\n0,0,1,middle\n";
        assert!(ModalForcing::from_csv(wrong_side.as_bytes(), 1, &g).is_err());
    }

    #[test]
    fn combination_is_linear() {
        let f = ModalForcing::analytic(2, "x", |_, j, x| x + j as f64);
        let g = ModalForcing::analytic(2, "1", |_, _, _| 1.0);
        let h = ModalForcing::combine(2.0, &f, -3.0, &g).unwrap();
        assert_eq!(h.modal_value(Side::Minus, 1, 0.5), 2.0 * 1.5 - 3.0);
    }
}
