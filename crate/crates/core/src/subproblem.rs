//! One-sided problems on `(a, γ)` and `(γ, b)`: particular solutions with
//! homogeneous Navier data, the source and representation coefficients, and
//! evaluation of `u±` and its first three derivatives.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::forcing::ModalForcing;
use crate::linalg::{derivative_4th, interp_cubic, solve_dirichlet_helmholtz, sup_norm};
use crate::problem::{BoundaryData, CylinderGeometry, Side};
use crate::section::{GeneratorM, SectionOperator};

/// Smallest grid accepted by [`solve_particular`].
pub const MIN_PARTICULAR_NX: usize = 17;

/// Particular solution `F` of `u⁗ + 2Au″ + A²u = f` with `u = u″ = 0` at both ends,
/// sampled per eigenmode on a uniform grid of the interval.
#[derive(Debug, Clone)]
pub struct ParticularSolution {
    side: Side,
    lo: f64,
    hi: f64,
    nx: usize,
    zero: bool,
    /// `[F, F′, F″, F‴]`, each indexed `[mode][node]`.
    fields: [Vec<Vec<f64>>; 4],
    forcing: Vec<Vec<f64>>,
    eigenvectors: DMatrix<f64>,
    bvp_error: f64,
    trace_error: f64,
}

/// Traces of `F` entering the source terms, as section vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticularTraces {
    /// `F′` at the left end of the interval.
    pub d1_left: DVector<f64>,
    /// `F′` at the right end of the interval.
    pub d1_right: DVector<f64>,
    /// `F‴` at the interface end.
    pub d3_interface: DVector<f64>,
}

impl ParticularTraces {
    pub fn zeros(m: usize) -> Self {
        Self {
            d1_left: DVector::zeros(m),
            d1_right: DVector::zeros(m),
            d3_interface: DVector::zeros(m),
        }
    }
}

fn richardson(fine: &[f64], coarse: &[f64]) -> Vec<f64> {
    coarse
        .iter()
        .enumerate()
        .map(|(i, c)| (4.0 * fine[2 * i] - c) / 3.0)
        .collect()
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

/// Solve for `F` on one side by the factorization `(∂ₓ² + μ)²` per mode.
///
/// Each factor is a Dirichlet problem solved with central differences on `n_x`
/// and `2n_x − 1` nodes and combined by one Richardson step.
pub fn solve_particular(
    section: &SectionOperator,
    geom: &CylinderGeometry,
    side: Side,
    forcing: &ModalForcing,
    nx: usize,
) -> Result<ParticularSolution> {
    if nx < MIN_PARTICULAR_NX {
        return Err(Error::Resolution {
            got: nx,
            min: MIN_PARTICULAR_NX,
        });
    }
    if forcing.dim() != section.dim() {
        return Err(Error::DimensionMismatch {
            expected: section.dim(),
            got: forcing.dim(),
        });
    }
    let (lo, hi) = geom.interval(side);
    let m = section.dim();
    let zero_rows = || vec![vec![0.0; nx]; m];
    let mut sol = ParticularSolution {
        side,
        lo,
        hi,
        nx,
        zero: forcing.side(side).is_zero(),
        fields: [zero_rows(), zero_rows(), zero_rows(), zero_rows()],
        forcing: zero_rows(),
        eigenvectors: section.eigenvectors().clone(),
        bvp_error: 0.0,
        trace_error: 0.0,
    };
    if sol.zero {
        return Ok(sol);
    }

    let h = (hi - lo) / (nx - 1) as f64;
    let nf = 2 * nx - 1;
    let hf = h / 2.0;
    let (mut field_err, mut field_scale) = (0.0_f64, 0.0_f64);
    let (mut trace_err, mut trace_scale) = (0.0_f64, 0.0_f64);
    for (j, &mu) in section.eigenvalues().iter().enumerate() {
        let rhs_c: Vec<f64> = (0..nx)
            .map(|i| forcing.modal_value(side, j, lo + i as f64 * h))
            .collect();
        let rhs_f: Vec<f64> = (0..nf)
            .map(|i| forcing.modal_value(side, j, lo + i as f64 * hf))
            .collect();
        if rhs_f.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "forcing is not finite on the {side} interval, mode {j}"
            )));
        }
        let w_c = solve_dirichlet_helmholtz(h, mu, &rhs_c);
        let f_c = solve_dirichlet_helmholtz(h, mu, &w_c);
        let w_f = solve_dirichlet_helmholtz(hf, mu, &rhs_f);
        let f_f = solve_dirichlet_helmholtz(hf, mu, &w_f);

        let w = richardson(&w_f, &w_c);
        let f = richardson(&f_f, &f_c);
        let d1 = derivative_4th(&f, h);
        let dw = derivative_4th(&w, h);
        let d2: Vec<f64> = w.iter().zip(&f).map(|(wi, fi)| wi - mu * fi).collect();
        let d3: Vec<f64> = dw
            .iter()
            .zip(&d1)
            .map(|(dwi, d1i)| dwi - mu * d1i)
            .collect();

        for i in 0..nx {
            field_err = field_err.max((f_f[2 * i] - f_c[i]).abs() / 3.0);
        }
        field_scale = field_scale.max(max_abs(&f));

        // Trace error estimate: extrapolated traces against the fine grid alone.
        let d1_fine = derivative_4th(&f_f, hf);
        let dw_fine = derivative_4th(&w_f, hf);
        let iface = if side == Side::Minus { nx - 1 } else { 0 };
        let iface_f = if side == Side::Minus { nf - 1 } else { 0 };
        let pairs = [
            (d1[0], d1_fine[0]),
            (d1[nx - 1], d1_fine[nf - 1]),
            (d3[iface], dw_fine[iface_f] - mu * d1_fine[iface_f]),
        ];
        for (ext, fine) in pairs {
            trace_err = trace_err.max((ext - fine).abs());
            trace_scale = trace_scale.max(ext.abs());
        }

        sol.fields[0][j] = f;
        sol.fields[1][j] = d1;
        sol.fields[2][j] = d2;
        sol.fields[3][j] = d3;
        sol.forcing[j] = rhs_c;
    }
    sol.bvp_error = if field_scale > 0.0 {
        field_err / field_scale
    } else {
        field_err
    };
    sol.trace_error = if trace_scale > 0.0 {
        trace_err / trace_scale
    } else {
        trace_err
    };
    Ok(sol)
}

impl ParticularSolution {
    pub fn side(&self) -> Side {
        self.side
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn spacing(&self) -> f64 {
        (self.hi - self.lo) / (self.nx - 1) as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        self.lo + i as f64 * self.spacing()
    }

    pub fn is_zero(&self) -> bool {
        self.zero
    }

    /// Relative field error estimate `‖F_{h/2} − F_h‖/3` before extrapolation.
    pub fn bvp_error(&self) -> f64 {
        self.bvp_error
    }

    /// Relative gap between extrapolated traces and the fine-grid traces.
    pub fn trace_error(&self) -> f64 {
        self.trace_error
    }

    /// Samples of `F^{(order)}` for one mode.
    pub fn samples(&self, order: usize, mode: usize) -> &[f64] {
        &self.fields[order][mode]
    }

    /// Samples of the modal forcing on the grid.
    pub fn forcing_samples(&self, mode: usize) -> &[f64] {
        &self.forcing[mode]
    }

    /// Modal coefficients of `F^{(order)}(x)`; exact at nodes, cubic in between.
    pub fn modal(&self, order: usize, x: f64) -> DVector<f64> {
        let m = self.fields[0].len();
        if self.zero {
            return DVector::zeros(m);
        }
        let h = self.spacing();
        DVector::from_fn(m, |j, _| {
            interp_cubic(self.lo, h, &self.fields[order][j], x)
        })
    }

    /// `F^{(order)}(x)` as a section vector.
    pub fn value(&self, order: usize, x: f64) -> DVector<f64> {
        &self.eigenvectors * self.modal(order, x)
    }

    fn node_vector(&self, order: usize, node: usize) -> DVector<f64> {
        let m = self.fields[0].len();
        let modal = DVector::from_fn(m, |j, _| self.fields[order][j][node]);
        &self.eigenvectors * modal
    }

    pub fn traces(&self) -> ParticularTraces {
        let last = self.nx - 1;
        let iface = match self.side {
            Side::Minus => last,
            Side::Plus => 0,
        };
        ParticularTraces {
            d1_left: self.node_vector(1, 0),
            d1_right: self.node_vector(1, last),
            d3_interface: self.node_vector(3, iface),
        }
    }
}

/// Operators of one side: `M`, `e^{δM}`, `U`, `V` and the inverses.
#[derive(Debug, Clone)]
pub struct SideOperators {
    pub side: Side,
    pub delta: f64,
    pub m: DMatrix<f64>,
    pub e: DMatrix<f64>,
    pub u: DMatrix<f64>,
    pub v: DMatrix<f64>,
    pub u_inv: DMatrix<f64>,
    pub v_inv: DMatrix<f64>,
}

fn invert(a: &DMatrix<f64>, name: &str) -> Result<DMatrix<f64>> {
    a.clone()
        .lu()
        .try_inverse()
        .filter(|inv| inv.iter().all(|v| v.is_finite()))
        .ok_or_else(|| Error::Anomaly(format!("{name} is numerically singular")))
}

impl SideOperators {
    /// `U = I − e^{2δM} + 2δMe^{δM}` and `V = I − e^{2δM} − 2δMe^{δM}` from semigroup matrices.
    pub fn assemble(generator: &GeneratorM, geom: &CylinderGeometry, side: Side) -> Result<Self> {
        let delta = geom.length(side);
        let n = generator.dim();
        let id = DMatrix::<f64>::identity(n, n);
        let m = generator.matrix().into_matrix();
        let e = generator.semigroup(delta)?.into_matrix();
        let e2 = generator.semigroup(2.0 * delta)?.into_matrix();
        let cross = &m * &e * (2.0 * delta);
        let u = &id - &e2 + &cross;
        let v = &id - &e2 - &cross;
        let tag = if side == Side::Minus { "minus" } else { "plus" };
        let u_inv = invert(&u, &format!("U {tag}"))?;
        let v_inv = invert(&v, &format!("V {tag}"))?;
        Ok(Self {
            side,
            delta,
            m,
            e,
            u,
            v,
            u_inv,
            v_inv,
        })
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    fn check(&self, v: &DVector<f64>) -> Result<()> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: v.len(),
            });
        }
        Ok(())
    }
}

/// Four section vectors, indexed 1..4 in the formulas as `[0]..[3]`.
pub type Quad = [DVector<f64>; 4];

/// Source coefficients `φ̃₁⁻..φ̃₄⁻` from the data at `x = a` and the traces of `F₋`.
pub fn phi_tilde_minus(
    ops: &SideOperators,
    bc: &BoundaryData,
    traces: &ParticularTraces,
) -> Result<Quad> {
    let (p1, p2) = (&bc.phi1_minus, &bc.phi2_minus);
    for v in [p1, p2, &traces.d1_left, &traces.d1_right] {
        ops.check(v)?;
    }
    let (fa, fg) = (&traces.d1_left, &traces.d1_right);
    let (m, e, c) = (&ops.m, &ops.e, ops.delta);
    let mp = m * p1;
    let sum_g = &mp + p2 - fa - fg;
    let sum_d = &mp + p2 - fa + fg;

    let t1 = &ops.u_inv * (p1 + e * (p1 + &sum_g * c)) * 0.5;
    let t2 = -(&ops.u_inv * (&mp - p2 + fa + fg)) * 0.5 - &ops.u_inv * (e * &sum_g) * 0.5;
    let t3 = &ops.v_inv * (p1 - e * (p1 + &sum_d * c)) * 0.5;
    let t4 = -(&ops.v_inv * (&mp - p2 + fa - fg)) * 0.5 + &ops.v_inv * (e * &sum_d) * 0.5;
    Ok([t1, t2, t3, t4])
}

/// Source coefficients `φ̃₁⁺..φ̃₄⁺` from the data at `x = b` and the traces of `F₊`.
pub fn phi_tilde_plus(
    ops: &SideOperators,
    bc: &BoundaryData,
    traces: &ParticularTraces,
) -> Result<Quad> {
    let (p1, p2) = (&bc.phi1_plus, &bc.phi2_plus);
    for v in [p1, p2, &traces.d1_left, &traces.d1_right] {
        ops.check(v)?;
    }
    let (fg, fb) = (&traces.d1_left, &traces.d1_right);
    let (m, e, d) = (&ops.m, &ops.e, ops.delta);
    let mp = m * p1;
    let sum_g = &mp - p2 + fg + fb;
    let sum_d = &mp - p2 - fg + fb;

    let t1 = -(&ops.u_inv * (p1 + e * (p1 + &sum_g * d))) * 0.5;
    let t2 = &ops.u_inv * (&mp + p2 - fg - fb) * 0.5 + &ops.u_inv * (e * &sum_g) * 0.5;
    let t3 = &ops.v_inv * (p1 - e * (p1 + &sum_d * d)) * 0.5;
    let t4 = -(&ops.v_inv * (&mp + p2 + fg - fb)) * 0.5 + &ops.v_inv * (e * &sum_d) * 0.5;
    Ok([t1, t2, t3, t4])
}

/// Representation coefficients `α₁⁻..α₄⁻` for interface data `(ψ₁, ψ₂)`.
pub fn alphas_minus(
    ops: &SideOperators,
    psi1: &DVector<f64>,
    psi2: &DVector<f64>,
    phi: &Quad,
) -> Result<Quad> {
    ops.check(psi1)?;
    ops.check(psi2)?;
    let n = ops.dim();
    let id = DMatrix::<f64>::identity(n, n);
    let (m, e, c) = (&ops.m, &ops.e, ops.delta);
    let ipe = &id + e;
    let ime = &id - e;
    let b = (&id + m * c) * e;
    let ce = e * c;
    let a1 = -(&ops.u_inv * ((&id + &b) * psi1 - &ce * psi2)) * 0.5 + &phi[0];
    let a2 = &ops.u_inv * (&ipe * (m * psi1) + &ime * psi2) * 0.5 + &phi[1];
    let a3 = &ops.v_inv * ((&id - &b) * psi1 + &ce * psi2) * 0.5 + &phi[2];
    let a4 = -(&ops.v_inv * (&ime * (m * psi1) + &ipe * psi2)) * 0.5 + &phi[3];
    Ok([a1, a2, a3, a4])
}

/// Representation coefficients `α₁⁺..α₄⁺` for interface data `(ψ₁, ψ₂)`.
pub fn alphas_plus(
    ops: &SideOperators,
    psi1: &DVector<f64>,
    psi2: &DVector<f64>,
    phi: &Quad,
) -> Result<Quad> {
    ops.check(psi1)?;
    ops.check(psi2)?;
    let n = ops.dim();
    let id = DMatrix::<f64>::identity(n, n);
    let (m, e, d) = (&ops.m, &ops.e, ops.delta);
    let ipe = &id + e;
    let ime = &id - e;
    let b = (&id + m * d) * e;
    let de = e * d;
    let a1 = &ops.u_inv * ((&id + &b) * psi1 + &de * psi2) * 0.5 + &phi[0];
    let a2 = -(&ops.u_inv * (&ipe * (m * psi1) - &ime * psi2)) * 0.5 + &phi[1];
    let a3 = &ops.v_inv * ((&id - &b) * psi1 - &de * psi2) * 0.5 + &phi[2];
    let a4 = -(&ops.v_inv * (&ime * (m * psi1) - &ipe * psi2)) * 0.5 + &phi[3];
    Ok([a1, a2, a3, a4])
}

/// Homogeneous part of the `k`-th derivative for one mode with generator eigenvalue `m`,
/// where `s = x − left` and `t = right − x`.
pub fn homogeneous_mode(m: f64, k: usize, s: f64, t: f64, alpha: [f64; 4]) -> f64 {
    let es = (s * m).exp();
    let et = (t * m).exp();
    let mk = m.powi(k as i32);
    let lead = if k == 0 {
        0.0
    } else {
        k as f64 * m.powi(k as i32 - 1)
    };
    let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
    let a = mk * es;
    let b = sign * mk * et;
    let c = (lead + s * mk) * es;
    let d = sign * (lead + t * mk) * et;
    (a - b) * alpha[0] + (c - d) * alpha[1] + (a + b) * alpha[2] + (c + d) * alpha[3]
}

/// Sum of the magnitudes of the terms in [`homogeneous_mode`], the size against
/// which its round-off is measured.
pub fn homogeneous_mode_magnitude(m: f64, k: usize, s: f64, t: f64, alpha: [f64; 4]) -> f64 {
    let es = (s * m).exp();
    let et = (t * m).exp();
    let mk = m.powi(k as i32).abs();
    let lead = if k == 0 {
        0.0
    } else {
        k as f64 * m.abs().powi(k as i32 - 1)
    };
    let a = mk * es;
    let b = mk * et;
    let c = (lead + s * mk) * es;
    let d = (lead + t * mk) * et;
    (a + b) * (alpha[0].abs() + alpha[2].abs()) + (c + d) * (alpha[1].abs() + alpha[3].abs())
}

/// `u±` on one interval: semigroup terms weighted by `α₁..α₄` plus `F`.
#[derive(Debug, Clone)]
pub struct SubproblemSolution {
    side: Side,
    lo: f64,
    hi: f64,
    alphas: Quad,
    modal_alphas: Quad,
    generator_eigenvalues: Vec<f64>,
    section_eigenvalues: Vec<f64>,
    eigenvectors: DMatrix<f64>,
    particular: ParticularSolution,
}

impl SubproblemSolution {
    pub fn new(
        generator: &GeneratorM,
        geom: &CylinderGeometry,
        alphas: Quad,
        particular: ParticularSolution,
    ) -> Result<Self> {
        let section = generator.section();
        let side = particular.side();
        for a in &alphas {
            if a.len() != section.dim() {
                return Err(Error::DimensionMismatch {
                    expected: section.dim(),
                    got: a.len(),
                });
            }
        }
        let (lo, hi) = geom.interval(side);
        let modal_alphas = alphas.clone().map(|a| section.to_modal(&a));
        Ok(Self {
            side,
            lo,
            hi,
            alphas,
            modal_alphas,
            generator_eigenvalues: generator.eigenvalues().to_vec(),
            section_eigenvalues: section.eigenvalues().to_vec(),
            eigenvectors: section.eigenvectors().clone(),
            particular,
        })
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub fn alphas(&self) -> &Quad {
        &self.alphas
    }

    pub fn particular(&self) -> &ParticularSolution {
        &self.particular
    }

    pub fn section_eigenvalues(&self) -> &[f64] {
        &self.section_eigenvalues
    }

    pub fn generator_eigenvalues(&self) -> &[f64] {
        &self.generator_eigenvalues
    }

    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigenvectors
    }

    fn check_x(&self, x: f64) -> Result<f64> {
        let slack = 1e-12 * (self.hi - self.lo);
        if !(x >= self.lo - slack && x <= self.hi + slack) {
            return Err(Error::OutOfInterval {
                x,
                lo: self.lo,
                hi: self.hi,
            });
        }
        Ok(x.clamp(self.lo, self.hi))
    }

    /// Modal coefficients of the semigroup part of `u^{(k)}(x)`, any `k`.
    pub fn homogeneous_modal(&self, k: usize, x: f64) -> Result<DVector<f64>> {
        let x = self.check_x(x)?;
        let (s, t) = (x - self.lo, self.hi - x);
        Ok(DVector::from_fn(
            self.generator_eigenvalues.len(),
            |j, _| {
                let alpha = [0, 1, 2, 3].map(|i| self.modal_alphas[i][j]);
                homogeneous_mode(self.generator_eigenvalues[j], k, s, t, alpha)
            },
        ))
    }

    /// Largest per-mode magnitude of the terms summed into `u^{(k)}(x)`.
    pub fn term_magnitude(&self, k: usize, x: f64) -> Result<f64> {
        let x = self.check_x(x)?;
        let (s, t) = (x - self.lo, self.hi - x);
        let particular = if k <= 3 {
            Some(self.particular.modal(k, x))
        } else {
            None
        };
        Ok((0..self.generator_eigenvalues.len())
            .map(|j| {
                let alpha = [0, 1, 2, 3].map(|i| self.modal_alphas[i][j]);
                let hom = homogeneous_mode_magnitude(self.generator_eigenvalues[j], k, s, t, alpha);
                hom + particular.as_ref().map_or(0.0, |p| p[j].abs())
            })
            .fold(0.0, f64::max))
    }

    /// Modal coefficients of `u^{(order)}(x)`.
    pub fn evaluate_modal(&self, order: usize, x: f64) -> Result<DVector<f64>> {
        if order > 3 {
            return Err(Error::DerivativeOrder(order));
        }
        let hom = self.homogeneous_modal(order, x)?;
        Ok(hom + self.particular.modal(order, x.clamp(self.lo, self.hi)))
    }

    /// `u^{(order)}(x)` as a section vector, `order ≤ 3`.
    pub fn evaluate(&self, order: usize, x: f64) -> Result<DVector<f64>> {
        Ok(&self.eigenvectors * self.evaluate_modal(order, x)?)
    }

    /// Sup-norm of the coefficient vectors, used to scale residuals.
    pub fn coefficient_scale(&self) -> f64 {
        self.alphas.iter().map(sup_norm).fold(0.0, f64::max)
    }
}
