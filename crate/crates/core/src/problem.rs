//! Problem-specification types: geometry, diffusivities and boundary data.

use std::fmt;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Shortest admissible interval length.
pub const MIN_INTERVAL: f64 = 1e-8;

/// The two pieces of the cylinder, left `(a, γ)` and right `(γ, b)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Minus,
    Plus,
}

impl Side {
    pub const BOTH: [Side; 2] = [Side::Minus, Side::Plus];

    pub fn as_str(self) -> &'static str {
        match self {
            Side::Minus => "minus",
            Side::Plus => "plus",
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Side {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "minus" | "-" | "left" => Ok(Side::Minus),
            "plus" | "+" | "right" => Ok(Side::Plus),
            other => Err(Error::Parse(format!("unknown side {other:?}"))),
        }
    }
}

/// Abscissae `a < γ < b` of the two-piece cylinder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CylinderGeometry {
    pub a: f64,
    pub gamma: f64,
    pub b: f64,
}

impl CylinderGeometry {
    pub fn new(a: f64, gamma: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && gamma.is_finite() && b.is_finite()) {
            return Err(Error::InvalidGeometry("abscissae must be finite".into()));
        }
        if !(gamma - a >= MIN_INTERVAL && b - gamma >= MIN_INTERVAL) {
            return Err(Error::InvalidGeometry(format!(
                "need a < gamma < b with both pieces at least {MIN_INTERVAL} long, got ({a}, {gamma}, {b})"
            )));
        }
        Ok(Self { a, gamma, b })
    }

    /// Geometry with the interface at the origin.
    pub fn from_lengths(c: f64, d: f64) -> Result<Self> {
        Self::new(-c, 0.0, d)
    }

    /// `c = γ − a`.
    pub fn c(&self) -> f64 {
        self.gamma - self.a
    }

    /// `d = b − γ`.
    pub fn d(&self) -> f64 {
        self.b - self.gamma
    }

    pub fn interval(&self, side: Side) -> (f64, f64) {
        match side {
            Side::Minus => (self.a, self.gamma),
            Side::Plus => (self.gamma, self.b),
        }
    }

    pub fn length(&self, side: Side) -> f64 {
        let (lo, hi) = self.interval(side);
        hi - lo
    }

    pub fn contains(&self, side: Side, x: f64) -> bool {
        let (lo, hi) = self.interval(side);
        x >= lo && x <= hi
    }

    /// Reflection through the interface, mapping one piece onto the other when `c = d`.
    pub fn reflect(&self, x: f64) -> f64 {
        2.0 * self.gamma - x
    }
}

/// Diffusivities `k₋, k₊ > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Diffusivities {
    pub k_minus: f64,
    pub k_plus: f64,
}

impl Diffusivities {
    pub fn new(k_minus: f64, k_plus: f64) -> Result<Self> {
        if !(k_minus > 0.0 && k_plus > 0.0 && k_minus.is_finite() && k_plus.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "diffusivities must be positive, got k_minus = {k_minus}, k_plus = {k_plus}"
            )));
        }
        Ok(Self { k_minus, k_plus })
    }

    pub fn get(&self, side: Side) -> f64 {
        match side {
            Side::Minus => self.k_minus,
            Side::Plus => self.k_plus,
        }
    }
}

/// Values and slopes at the outer ends: `u₋(a), u₋′(a), u₊(b), u₊′(b)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryData {
    pub phi1_minus: DVector<f64>,
    pub phi2_minus: DVector<f64>,
    pub phi1_plus: DVector<f64>,
    pub phi2_plus: DVector<f64>,
}

impl BoundaryData {
    pub fn new(
        phi1_minus: DVector<f64>,
        phi2_minus: DVector<f64>,
        phi1_plus: DVector<f64>,
        phi2_plus: DVector<f64>,
    ) -> Result<Self> {
        let data = Self {
            phi1_minus,
            phi2_minus,
            phi1_plus,
            phi2_plus,
        };
        data.check_dim(data.phi1_minus.len())?;
        if data
            .vectors()
            .iter()
            .any(|v| v.iter().any(|x| !x.is_finite()))
        {
            return Err(Error::InvalidInput("boundary data must be finite".into()));
        }
        Ok(data)
    }

    pub fn zeros(m: usize) -> Self {
        let z = DVector::zeros(m);
        Self {
            phi1_minus: z.clone(),
            phi2_minus: z.clone(),
            phi1_plus: z.clone(),
            phi2_plus: z,
        }
    }

    pub fn dim(&self) -> usize {
        self.phi1_minus.len()
    }

    pub fn vectors(&self) -> [&DVector<f64>; 4] {
        [
            &self.phi1_minus,
            &self.phi2_minus,
            &self.phi1_plus,
            &self.phi2_plus,
        ]
    }

    pub fn check_dim(&self, m: usize) -> Result<()> {
        for v in self.vectors() {
            if v.len() != m {
                return Err(Error::DimensionMismatch {
                    expected: m,
                    got: v.len(),
                });
            }
        }
        Ok(())
    }

    /// `(value, slope)` at the outer end of `side`.
    pub fn end(&self, side: Side) -> (&DVector<f64>, &DVector<f64>) {
        match side {
            Side::Minus => (&self.phi1_minus, &self.phi2_minus),
            Side::Plus => (&self.phi1_plus, &self.phi2_plus),
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            phi1_minus: &self.phi1_minus * s,
            phi2_minus: &self.phi2_minus * s,
            phi1_plus: &self.phi1_plus * s,
            phi2_plus: &self.phi2_plus * s,
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            phi1_minus: &self.phi1_minus + &other.phi1_minus,
            phi2_minus: &self.phi2_minus + &other.phi2_minus,
            phi1_plus: &self.phi1_plus + &other.phi1_plus,
            phi2_plus: &self.phi2_plus + &other.phi2_plus,
        }
    }

    /// Data of the reflected problem `x ↦ 2γ − x`: values swap sides and slopes change sign.
    pub fn mirrored(&self) -> Self {
        Self {
            phi1_minus: self.phi1_plus.clone(),
            phi2_minus: -&self.phi2_plus,
            phi1_plus: self.phi1_minus.clone(),
            phi2_plus: -&self.phi2_minus,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometry_validation() {
        let g = CylinderGeometry::new(0.0, 0.7, 2.0).unwrap();
        assert_eq!(g.c(), 0.7);
        assert!((g.d() - 1.3).abs() < 1e-15);
        assert!(CylinderGeometry::new(0.0, 0.0, 1.0).is_err());
        assert!(CylinderGeometry::new(0.0, 1.0, 1.0 + 1e-10).is_err());
        assert!(CylinderGeometry::new(1.0, 0.5, 2.0).is_err());
        assert!(CylinderGeometry::new(0.0, f64::NAN, 2.0).is_err());
    }

    #[test]
    fn diffusivity_validation() {
        assert!(Diffusivities::new(1.0, 0.0).is_err());
        assert_eq!(Diffusivities::new(1.0, 3.0).unwrap().get(Side::Plus), 3.0);
    }

    #[test]
    fn side_parsing() {
        assert_eq!("Minus".parse::<Side>().unwrap(), Side::Minus);
        assert_eq!("plus".parse::<Side>().unwrap(), Side::Plus);
        assert!("middle".parse::<Side>().is_err());
    }

    #[test]
    fn mirror_is_an_involution() {
        let bc = BoundaryData::new(
            DVector::from_vec(vec![1.0, 2.0]),
            DVector::from_vec(vec![3.0, 4.0]),
            DVector::from_vec(vec![5.0, 6.0]),
            DVector::from_vec(vec![7.0, 8.0]),
        )
        .unwrap();
        assert_eq!(bc.mirrored().mirrored(), bc);
        assert_eq!(bc.mirrored().phi2_minus[0], -7.0);
    }

    #[test]
    fn boundary_dimension_mismatch() {
        let r = BoundaryData::new(
            DVector::zeros(2),
            DVector::zeros(2),
            DVector::zeros(3),
            DVector::zeros(2),
        );
        assert!(matches!(r, Err(Error::DimensionMismatch { .. })));
    }
}
