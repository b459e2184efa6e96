//! Quantitative checks of a candidate solution: the equation on each piece,
//! the boundary conditions at `a` and `b`, and both transmission conditions
//! at the interface.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::linalg::{scaled, sup_norm};
use crate::problem::{BoundaryData, Diffusivities};
use crate::subproblem::SubproblemSolution;

/// Budget for every quantity that does not pass through a discretized `F`.
pub const HOMOGENEOUS_BUDGET: f64 = 1e-9;
/// Budget for the agreement of the two interface solves and the determinant cross-check.
pub const ROUTE_BUDGET: f64 = 1e-10;

/// A residual before scaling, with the size of the terms it was formed from.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Residual {
    pub raw: f64,
    pub scale: f64,
}

impl Residual {
    fn of(diff: &DVector<f64>, terms: &[&DVector<f64>]) -> Self {
        Self {
            raw: sup_norm(diff),
            scale: terms.iter().map(|t| sup_norm(t)).fold(0.0, f64::max),
        }
    }

    fn floor(self, scale: f64) -> Self {
        Self {
            raw: self.raw,
            scale: self.scale.max(scale),
        }
    }

    fn merge(self, other: Self) -> Self {
        Self {
            raw: self.raw.max(other.raw),
            scale: self.scale.max(other.scale),
        }
    }

    /// `raw / scale`, or `raw` when every term vanished.
    pub fn value(&self) -> f64 {
        scaled(self.raw, self.scale)
    }
}

/// Residuals computed from the reconstructed fields.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FieldResiduals {
    pub eq_minus: Residual,
    pub eq_plus: Residual,
    /// `u₋(a) − φ₁⁻`, `u₋′(a) − φ₂⁻`, `u₊(b) − φ₁⁺`, `u₊′(b) − φ₂⁺`.
    pub bc: [Residual; 4],
    /// Jumps of `u` and `u′` at the interface.
    pub tc1: [Residual; 2],
    /// Jumps of `k(u″ + Au)` and `k(u‴ + Au′)` at the interface.
    pub tc2: [Residual; 2],
    /// Field evaluation against the coefficient formulas for `u″ − M²u` and `u‴ − M²u′`.
    pub identity_minus: Residual,
    pub identity_plus: Residual,
}

/// Serialized residual report with fixed keys.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ResidualReport {
    pub eq_minus: f64,
    pub eq_plus: f64,
    pub bc_1: f64,
    pub bc_2: f64,
    pub bc_3: f64,
    pub bc_4: f64,
    pub tc1_u: f64,
    pub tc1_du: f64,
    pub tc2_flux2: f64,
    pub tc2_flux3: f64,
    pub route_gap: f64,
    #[serde(rename = "cond_Uminus")]
    pub cond_u_minus: f64,
    #[serde(rename = "cond_Uplus")]
    pub cond_u_plus: f64,
    #[serde(rename = "cond_Vminus")]
    pub cond_v_minus: f64,
    #[serde(rename = "cond_Vplus")]
    pub cond_v_plus: f64,
    #[serde(rename = "cond_Lambda")]
    pub cond_lambda: f64,
    pub det_gap: f64,
    pub identity_minus: f64,
    pub identity_plus: f64,
}

/// Residual budgets; the equation budget follows the particular-solution error estimates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Budgets {
    pub homogeneous: f64,
    pub eq: f64,
    pub route: f64,
}

impl Budgets {
    /// `eq = 10·(field estimate + trace estimate) + 1e−9`.
    pub fn from_estimates(bvp_error: f64, trace_error: f64) -> Self {
        Self {
            homogeneous: HOMOGENEOUS_BUDGET,
            eq: 10.0 * (bvp_error + trace_error) + HOMOGENEOUS_BUDGET,
            route: ROUTE_BUDGET,
        }
    }
}

impl Default for Budgets {
    fn default() -> Self {
        Self::from_estimates(0.0, 0.0)
    }
}

impl ResidualReport {
    pub fn from_fields(fields: &FieldResiduals) -> Self {
        Self {
            eq_minus: fields.eq_minus.value(),
            eq_plus: fields.eq_plus.value(),
            bc_1: fields.bc[0].value(),
            bc_2: fields.bc[1].value(),
            bc_3: fields.bc[2].value(),
            bc_4: fields.bc[3].value(),
            tc1_u: fields.tc1[0].value(),
            tc1_du: fields.tc1[1].value(),
            tc2_flux2: fields.tc2[0].value(),
            tc2_flux3: fields.tc2[1].value(),
            identity_minus: fields.identity_minus.value(),
            identity_plus: fields.identity_plus.value(),
            ..Self::default()
        }
    }

    /// Entries above their budget, as `key = value > budget`.
    pub fn violations(&self, budgets: &Budgets) -> Vec<String> {
        let mut out = Vec::new();
        let mut check = |key: &str, value: f64, budget: f64| {
            if !(value <= budget) {
                out.push(format!("{key} = {value:.3e} > {budget:.1e}"));
            }
        };
        check("eq_minus", self.eq_minus, budgets.eq);
        check("eq_plus", self.eq_plus, budgets.eq);
        for (key, v) in [
            ("bc_1", self.bc_1),
            ("bc_2", self.bc_2),
            ("bc_3", self.bc_3),
            ("bc_4", self.bc_4),
            ("tc1_u", self.tc1_u),
            ("tc1_du", self.tc1_du),
            ("tc2_flux2", self.tc2_flux2),
            ("tc2_flux3", self.tc2_flux3),
            ("identity_minus", self.identity_minus),
            ("identity_plus", self.identity_plus),
        ] {
            check(key, v, budgets.homogeneous);
        }
        check("route_gap", self.route_gap, budgets.route);
        check("det_gap", self.det_gap, budgets.route);
        for (key, v) in [
            ("cond_Uminus", self.cond_u_minus),
            ("cond_Uplus", self.cond_u_plus),
            ("cond_Vminus", self.cond_v_minus),
            ("cond_Vplus", self.cond_v_plus),
            ("cond_Lambda", self.cond_lambda),
        ] {
            check(key, v, f64::MAX);
        }
        out
    }
}

fn diag_mul(d: &[f64], v: &DVector<f64>) -> DVector<f64> {
    DVector::from_fn(v.len(), |j, _| d[j] * v[j])
}

/// Equation residual `u⁗ + 2Au″ + A²u − f` over the interior nodes of the particular grid.
///
/// The semigroup part is differentiated in closed form. The fourth derivative of
/// `F` is a Richardson-combined central difference of its third-derivative samples.
pub fn equation_residual(u: &SubproblemSolution) -> Result<Residual> {
    let part = u.particular();
    let n = part.nx();
    let h = part.spacing();
    let mu = u.section_eigenvalues();
    let q = u.eigenvectors();
    let m = mu.len();
    let mu_max = mu.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    let mut total = Residual::default();
    for i in 2..n - 2 {
        let x = part.node(i);
        let mut u0 = u.homogeneous_modal(0, x)?;
        let mut u2 = u.homogeneous_modal(2, x)?;
        let mut u4 = u.homogeneous_modal(4, x)?;
        let mut f = DVector::zeros(m);
        if !part.is_zero() {
            for j in 0..m {
                let d3 = part.samples(3, j);
                let near = (d3[i + 1] - d3[i - 1]) / (2.0 * h);
                let far = (d3[i + 2] - d3[i - 2]) / (4.0 * h);
                u4[j] += (4.0 * near - far) / 3.0;
                u2[j] += part.samples(2, j)[i];
                u0[j] += part.samples(0, j)[i];
                f[j] = part.forcing_samples(j)[i];
            }
        }
        let t4 = q * u4;
        let t2 = q * diag_mul(&mu.iter().map(|v| 2.0 * v).collect::<Vec<_>>(), &u2);
        let t0 = q * diag_mul(&mu.iter().map(|v| v * v).collect::<Vec<_>>(), &u0);
        let fs = q * f;
        let diff = &t4 + &t2 + &t0 - &fs;
        let terms = u.term_magnitude(4, x)?
            + mu_max * (2.0 * u.term_magnitude(2, x)? + mu_max * u.term_magnitude(0, x)?);
        total = total.merge(Residual::of(&diff, &[&t4, &t2, &t0, &fs]).floor(terms));
    }
    Ok(total)
}

/// Apply `A` (through the eigenbasis shared by both sides) to a section vector.
fn apply_a(u: &SubproblemSolution, v: &DVector<f64>) -> DVector<f64> {
    let q = u.eigenvectors();
    q * diag_mul(u.section_eigenvalues(), &q.tr_mul(v))
}

/// Coefficient-formula checks of `u″ − M²u` and `u‴ − M²u′` at the interface end.
pub fn identity_residual(u: &SubproblemSolution, gamma: f64) -> Result<Residual> {
    let q = u.eigenvectors();
    let mvals = u.generator_eigenvalues();
    let (lo, hi) = u.interval();
    let delta = hi - lo;
    let sign = if gamma == hi { -1.0 } else { 1.0 };
    let modal: Vec<DVector<f64>> = u.alphas().iter().map(|a| q.tr_mul(a)).collect();
    let (a2, a4) = (&modal[1], &modal[3]);

    let mut second = DVector::zeros(mvals.len());
    let mut third = DVector::zeros(mvals.len());
    let f_d1 = u.particular().modal(1, gamma);
    let f_d3 = u.particular().modal(3, gamma);
    for (j, &m) in mvals.iter().enumerate() {
        let e = (delta * m).exp();
        // Minus side: 2M(e − 1)α₂ + 2M(1 + e)α₄; plus side: 2M(1 − e)α₂ + 2M(1 + e)α₄.
        second[j] = 2.0 * m * (sign * (1.0 - e) * a2[j] + (1.0 + e) * a4[j]);
        // Minus: 2M²(1 + e)α₂ − 2M²(1 − e)α₄; plus: 2M²(1 + e)α₂ + 2M²(1 − e)α₄.
        third[j] = 2.0 * m * m * ((1.0 + e) * a2[j] + sign * (1.0 - e) * a4[j]) + f_d3[j]
            - m * m * f_d1[j];
    }
    let second = q * second;
    let third = q * third;

    let u0 = u.evaluate(0, gamma)?;
    let u1 = u.evaluate(1, gamma)?;
    let u2 = u.evaluate(2, gamma)?;
    let u3 = u.evaluate(3, gamma)?;
    // M² = −A.
    let m2u = -apply_a(u, &u0);
    let m2u1 = -apply_a(u, &u1);
    let field_second = &u2 - &m2u;
    let field_third = &u3 - &m2u1;
    let mu_max = u
        .section_eigenvalues()
        .iter()
        .fold(0.0_f64, |m, v| m.max(v.abs()));
    let r2 = Residual::of(&(&field_second - &second), &[&u2, &m2u, &second]).floor(
        u.term_magnitude(2, gamma)?
            .max(mu_max * u.term_magnitude(0, gamma)?),
    );
    let r3 = Residual::of(&(&field_third - &third), &[&u3, &m2u1, &third]).floor(
        u.term_magnitude(3, gamma)?
            .max(mu_max * u.term_magnitude(1, gamma)?),
    );
    Ok(if r2.value() >= r3.value() { r2 } else { r3 })
}

/// All field residuals of a pair of one-sided solutions.
pub fn field_residuals(
    minus: &SubproblemSolution,
    plus: &SubproblemSolution,
    k: &Diffusivities,
    bc: &BoundaryData,
) -> Result<FieldResiduals> {
    let (a, gamma) = minus.interval();
    let (_, b) = plus.interval();
    let um: Vec<_> = (0..4)
        .map(|o| minus.evaluate(o, gamma))
        .collect::<Result<_>>()?;
    let up: Vec<_> = (0..4)
        .map(|o| plus.evaluate(o, gamma))
        .collect::<Result<_>>()?;
    let ua0 = minus.evaluate(0, a)?;
    let ua1 = minus.evaluate(1, a)?;
    let ub0 = plus.evaluate(0, b)?;
    let ub1 = plus.evaluate(1, b)?;

    // Values and slopes share one scale, so a condition with vanishing data is
    // measured against the size of the whole solution rather than against itself.
    let level = [&ua0, &ua1, &ub0, &ub1, &um[0], &um[1], &up[0], &up[1]]
        .into_iter()
        .chain(bc.vectors())
        .map(sup_norm)
        .fold(0.0, f64::max);
    let bc_res = [
        Residual::of(&(&ua0 - &bc.phi1_minus), &[&ua0, &bc.phi1_minus]),
        Residual::of(&(&ua1 - &bc.phi2_minus), &[&ua1, &bc.phi2_minus]),
        Residual::of(&(&ub0 - &bc.phi1_plus), &[&ub0, &bc.phi1_plus]),
        Residual::of(&(&ub1 - &bc.phi2_plus), &[&ub1, &bc.phi2_plus]),
    ]
    .map(|r| r.floor(level));
    let terms = |k: usize| -> Result<f64> {
        Ok(minus
            .term_magnitude(k, gamma)?
            .max(plus.term_magnitude(k, gamma)?))
    };
    let tc1 = [
        Residual::of(&(&um[0] - &up[0]), &[&um[0], &up[0]]).floor(level.max(terms(0)?)),
        Residual::of(&(&um[1] - &up[1]), &[&um[1], &up[1]]).floor(level.max(terms(1)?)),
    ];
    let mu_max = minus
        .section_eigenvalues()
        .iter()
        .fold(0.0_f64, |m, v| m.max(v.abs()));

    let flux = |lower: usize| {
        let lm = &um[lower + 2] * k.k_minus;
        let am = apply_a(minus, &um[lower]) * k.k_minus;
        let lp = &up[lower + 2] * k.k_plus;
        let ap = apply_a(plus, &up[lower]) * k.k_plus;
        let diff = &lm + &am - &lp - &ap;
        Residual::of(&diff, &[&lm, &am, &lp, &ap])
    };
    let kmax = k.k_minus.max(k.k_plus);
    let tc2 = [
        flux(0).floor(kmax * terms(2)?.max(mu_max * terms(0)?)),
        flux(1).floor(kmax * terms(3)?.max(mu_max * terms(1)?)),
    ];

    Ok(FieldResiduals {
        eq_minus: equation_residual(minus)?,
        eq_plus: equation_residual(plus)?,
        bc: bc_res,
        tc1,
        tc2,
        identity_minus: identity_residual(minus, gamma)?,
        identity_plus: identity_residual(plus, gamma)?,
    })
}
