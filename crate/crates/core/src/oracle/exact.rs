//! Closed-form solutions for a single eigenmode.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forcing::ModalForcing;
use crate::problem::{BoundaryData, CylinderGeometry, Diffusivities, Side};
use crate::section::SectionOperator;

/// Highest polynomial degree accepted for forced profiles.
pub const MAX_PROFILE_DEGREE: usize = 6;

/// Polynomial in `x` with coefficients in increasing degree.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Polynomial {
    pub coeffs: Vec<f64>,
}

impl Polynomial {
    pub fn new(coeffs: Vec<f64>) -> Self {
        Self { coeffs }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.iter().rposition(|&c| c != 0.0).unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0.0)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }

    pub fn derivative(&self) -> Self {
        Self {
            coeffs: self
                .coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, c)| i as f64 * c)
                .collect(),
        }
    }

    pub fn nth_derivative(&self, k: usize) -> Self {
        (0..k).fold(self.clone(), |p, _| p.derivative())
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        let at = |p: &Self, i: usize| p.coeffs.get(i).copied().unwrap_or(0.0);
        Self {
            coeffs: (0..n).map(|i| at(self, i) + at(other, i)).collect(),
        }
    }
}

/// Scalar profile `C₁ cosh(s(x−γ)) + C₂ sinh(s(x−γ))/s + p(x)` with `s = √(−μ)`,
/// so that `u″ + μu = p″ + μp`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeProfile {
    pub s: f64,
    pub gamma: f64,
    pub c1: f64,
    pub c2: f64,
    pub particular: Polynomial,
}

impl ModeProfile {
    pub fn derivative(&self, order: usize, x: f64) -> f64 {
        let t = self.s * (x - self.gamma);
        let (ch, sh) = (t.cosh(), t.sinh());
        let sk = self.s.powi(order as i32);
        let hom = if order % 2 == 0 {
            self.c1 * sk * ch + self.c2 * sk / self.s * sh
        } else {
            self.c1 * sk * sh + self.c2 * sk / self.s * ch
        };
        hom + self.particular.nth_derivative(order).eval(x)
    }
}

/// A single-mode exact solution with the data that produce it.
#[derive(Debug, Clone)]
pub struct ExactCase {
    pub mode: usize,
    pub eigenvector: DVector<f64>,
    pub geometry: CylinderGeometry,
    pub diffusivities: Diffusivities,
    pub minus: ModeProfile,
    pub plus: ModeProfile,
    pub forcing: ModalForcing,
    pub boundary: BoundaryData,
    pub psi1: DVector<f64>,
    pub psi2: DVector<f64>,
}

impl ExactCase {
    pub fn profile(&self, side: Side) -> &ModeProfile {
        match side {
            Side::Minus => &self.minus,
            Side::Plus => &self.plus,
        }
    }

    pub fn is_forced(&self) -> bool {
        !self.forcing.is_zero()
    }

    /// `u^{(order)}(x)` as a section vector.
    pub fn derivative(&self, side: Side, order: usize, x: f64) -> DVector<f64> {
        &self.eigenvector * self.profile(side).derivative(order, x)
    }

    pub fn value(&self, side: Side, x: f64) -> DVector<f64> {
        self.derivative(side, 0, x)
    }
}

fn check_mode(section: &SectionOperator, mode: usize) -> Result<f64> {
    section.eigenvalues().get(mode).copied().ok_or_else(|| {
        Error::InvalidInput(format!(
            "mode {mode} is outside the spectrum of size {}",
            section.dim()
        ))
    })
}

fn boundary_from(
    eigenvector: &DVector<f64>,
    geom: &CylinderGeometry,
    minus: &ModeProfile,
    plus: &ModeProfile,
) -> Result<BoundaryData> {
    BoundaryData::new(
        eigenvector * minus.derivative(0, geom.a),
        eigenvector * minus.derivative(1, geom.a),
        eigenvector * plus.derivative(0, geom.b),
        eigenvector * plus.derivative(1, geom.b),
    )
}

/// `u = (A₁e^{s(x−γ)} + A₂e^{−s(x−γ)})·eⱼ` on both pieces, unforced.
pub fn manufactured_homogeneous(
    section: &SectionOperator,
    geom: &CylinderGeometry,
    k: Diffusivities,
    mode: usize,
    a1: f64,
    a2: f64,
) -> Result<ExactCase> {
    let mu = check_mode(section, mode)?;
    if a1 == 0.0 && a2 == 0.0 {
        return Err(Error::InvalidInput(
            "both exponential coefficients are zero".into(),
        ));
    }
    let s = (-mu).sqrt();
    let profile = ModeProfile {
        s,
        gamma: geom.gamma,
        c1: a1 + a2,
        c2: s * (a1 - a2),
        particular: Polynomial::default(),
    };
    let e = section.mode(mode);
    let boundary = boundary_from(&e, geom, &profile, &profile)?;
    Ok(ExactCase {
        mode,
        psi1: &e * (a1 + a2),
        psi2: &e * (s * (a1 - a2)),
        eigenvector: e,
        geometry: *geom,
        diffusivities: k,
        minus: profile.clone(),
        plus: profile,
        forcing: ModalForcing::zero(section.dim()),
        boundary,
    })
}

/// `u″ + μu = w` for polynomial `w`: `Σₖ (−1)ᵏ μ^{−(k+1)} w^{(2k)}`.
fn helmholtz_particular(w: &Polynomial, mu: f64) -> Polynomial {
    let mut out = Polynomial::default();
    let mut term = w.clone();
    let mut factor = 1.0 / mu;
    while !term.is_zero() {
        out = out.add(&term.scale(factor));
        term = term.nth_derivative(2);
        factor *= -1.0 / mu;
    }
    out
}

/// Forced case with `w₋ = k₊r`, `w₊ = k₋r`, so `k₋w₋ = k₊w₊` identically, and
/// shared interface values `(u(γ), u′(γ)) = (psi1, psi2)`.
pub fn manufactured_forced(
    section: &SectionOperator,
    geom: &CylinderGeometry,
    k: Diffusivities,
    mode: usize,
    profile: &Polynomial,
    psi1: f64,
    psi2: f64,
) -> Result<ExactCase> {
    let mu = check_mode(section, mode)?;
    if profile.degree() > MAX_PROFILE_DEGREE || profile.coeffs.iter().any(|c| !c.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "forced profiles must be finite polynomials of degree at most {MAX_PROFILE_DEGREE}"
        )));
    }
    let s = (-mu).sqrt();
    let side_profile = |w: Polynomial| {
        let p = helmholtz_particular(&w, mu);
        let c1 = psi1 - p.eval(geom.gamma);
        let c2 = psi2 - p.derivative().eval(geom.gamma);
        let f = w.nth_derivative(2).add(&w.scale(mu));
        (
            ModeProfile {
                s,
                gamma: geom.gamma,
                c1,
                c2,
                particular: p,
            },
            f,
        )
    };
    let (minus, f_minus) = side_profile(profile.scale(k.k_plus));
    let (plus, f_plus) = side_profile(profile.scale(k.k_minus));
    let dim = section.dim();
    let forcing = ModalForcing::analytic(dim, "manufactured", move |side, j, x| {
        if j != mode {
            return 0.0;
        }
        match side {
            Side::Minus => f_minus.eval(x),
            Side::Plus => f_plus.eval(x),
        }
    });
    let e = section.mode(mode);
    let boundary = boundary_from(&e, geom, &minus, &plus)?;
    Ok(ExactCase {
        mode,
        psi1: &e * psi1,
        psi2: &e * psi2,
        eigenvector: e,
        geometry: *geom,
        diffusivities: k,
        minus,
        plus,
        forcing,
        boundary,
    })
}
