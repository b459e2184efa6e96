//! The interface system for `(ψ₁, ψ₂) = (u(γ), u′(γ))` and the full solve.
//!
//! The 2m×2m block system
//!
//! ```text
//! [ M(P₁⁺ + P₁⁻)   −(P₂⁺ − P₂⁻) ] [ψ₁]   [S₁]
//! [ M(P₂⁺ − P₂⁻)   −(P₃⁺ + P₃⁻) ] [ψ₂] = [S₂]
//! ```
//!
//! is solved twice: once by dense LU, once mode by mode through the
//! determinant symbol `det(Λ) = −M·f(−A)` and the cofactor formula.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forcing::ModalForcing;
use crate::linalg::{commutator_gap, condition_number, scaled, sup_norm};
use crate::problem::{BoundaryData, CylinderGeometry, Diffusivities, Side};
use crate::residual::{field_residuals, Budgets, FieldResiduals, ResidualReport};
use crate::section::{GeneratorM, SectionOperator};
use crate::subproblem::{
    alphas_minus, alphas_plus, phi_tilde_minus, phi_tilde_plus, solve_particular,
    ParticularSolution, ParticularTraces, Quad, SideOperators, SubproblemSolution,
};
use crate::symbols::{f_components_real, f_tilde_real, f_total_real, SymbolContext};

/// Relative commutator size accepted before the calculus route is used.
pub const COMMUTATOR_TOL: f64 = 1e-11;
/// Relative backward error accepted from the block solve.
pub const BLOCK_RESIDUAL_TOL: f64 = 1e-10;

/// `P₁, P₂, P₃` for one side.
pub type PBlocks = [DMatrix<f64>; 3];

/// `P₁ = k(U⁻¹(I + e)² + V⁻¹(I − e)²)`, `P₂ = k(U⁻¹ + V⁻¹)(I − e²)`,
/// `P₃ = k(U⁻¹(I − e)² + V⁻¹(I + e)²)` with `e = e^{δM}`.
pub fn assemble_p(ops: &SideOperators, k: f64) -> PBlocks {
    let n = ops.dim();
    let id = DMatrix::<f64>::identity(n, n);
    let ipe = &id + &ops.e;
    let ime = &id - &ops.e;
    let ipe2 = &ipe * &ipe;
    let ime2 = &ime * &ime;
    let p1 = (&ops.u_inv * &ipe2 + &ops.v_inv * &ime2) * k;
    let p2 = (&ops.u_inv + &ops.v_inv) * (&id - &ops.e * &ops.e) * k;
    let p3 = (&ops.u_inv * &ime2 + &ops.v_inv * &ipe2) * k;
    [p1, p2, p3]
}

/// `U±`, `V±` from semigroup matrices.
pub fn assemble_uv(
    generator: &GeneratorM,
    geom: &CylinderGeometry,
) -> Result<(SideOperators, SideOperators)> {
    Ok((
        SideOperators::assemble(generator, geom, Side::Minus)?,
        SideOperators::assemble(generator, geom, Side::Plus)?,
    ))
}

/// Condition numbers of the assembled operators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Conditioning {
    pub u_minus: f64,
    pub u_plus: f64,
    pub v_minus: f64,
    pub v_plus: f64,
    pub lambda: f64,
}

/// Every operator of the interface system, assembled from one generator.
#[derive(Debug, Clone)]
pub struct TransmissionOperators {
    generator: GeneratorM,
    k: Diffusivities,
    ctx: SymbolContext,
    pub minus: SideOperators,
    pub plus: SideOperators,
    pub p_minus: PBlocks,
    pub p_plus: PBlocks,
    pub lambda: DMatrix<f64>,
    /// `W = U₊U₋V₊V₋`.
    pub w: DMatrix<f64>,
    /// `f̃(−A)` by spectral evaluation.
    pub f_tilde: DMatrix<f64>,
    /// `M⁻²`.
    pub m_inv2: DMatrix<f64>,
    pub conditioning: Conditioning,
}

impl TransmissionOperators {
    pub fn assemble(
        generator: &GeneratorM,
        geom: &CylinderGeometry,
        k: Diffusivities,
    ) -> Result<Self> {
        let (minus, plus) = assemble_uv(generator, geom)?;
        let p_minus = assemble_p(&minus, k.k_minus);
        let p_plus = assemble_p(&plus, k.k_plus);
        let n = generator.dim();
        let m = &minus.m;
        let p1s = &p_plus[0] + &p_minus[0];
        let p2d = &p_plus[1] - &p_minus[1];
        let p3s = &p_plus[2] + &p_minus[2];
        let mut lambda = DMatrix::zeros(2 * n, 2 * n);
        lambda.view_mut((0, 0), (n, n)).copy_from(&(m * &p1s));
        lambda.view_mut((0, n), (n, n)).copy_from(&(-&p2d));
        lambda.view_mut((n, 0), (n, n)).copy_from(&(m * &p2d));
        lambda.view_mut((n, n), (n, n)).copy_from(&(-&p3s));

        let ctx = SymbolContext::new(geom.c(), geom.d(), k.k_minus, k.k_plus)?;
        let w = &plus.u * &minus.u * &plus.v * &minus.v;
        let section = generator.section();
        let f_tilde = section
            .apply_function(|mu| f_tilde_real(&ctx, -mu).unwrap_or(f64::NAN))?
            .into_matrix();
        let m_inv2 = generator
            .function("M^-2", |mj| 1.0 / (mj * mj))
            .into_matrix();
        let conditioning = Conditioning {
            u_minus: condition_number(&minus.u),
            u_plus: condition_number(&plus.u),
            v_minus: condition_number(&minus.v),
            v_plus: condition_number(&plus.v),
            lambda: condition_number(&lambda),
        };
        Ok(Self {
            generator: generator.clone(),
            k,
            ctx,
            minus,
            plus,
            p_minus,
            p_plus,
            lambda,
            w,
            f_tilde,
            m_inv2,
            conditioning,
        })
    }

    pub fn generator(&self) -> &GeneratorM {
        &self.generator
    }

    pub fn diffusivities(&self) -> Diffusivities {
        self.k
    }

    pub fn symbol_context(&self) -> SymbolContext {
        self.ctx
    }

    pub fn dim(&self) -> usize {
        self.generator.dim()
    }

    pub fn side(&self, side: Side) -> (&SideOperators, &PBlocks) {
        match side {
            Side::Minus => (&self.minus, &self.p_minus),
            Side::Plus => (&self.plus, &self.p_plus),
        }
    }

    /// The four commuting blocks `(A, B, C, D)` of `Λ`.
    pub fn blocks(&self) -> [DMatrix<f64>; 4] {
        let m = &self.minus.m;
        let p1s = &self.p_plus[0] + &self.p_minus[0];
        let p2d = &self.p_plus[1] - &self.p_minus[1];
        let p3s = &self.p_plus[2] + &self.p_minus[2];
        [m * &p1s, -&p2d, m * &p2d, -p3s]
    }

    /// `det(Λ) = AD − BC` for commuting blocks.
    pub fn determinant(&self) -> DMatrix<f64> {
        let [a, b, c, d] = self.blocks();
        &a * &d - &b * &c
    }

    /// `[[D, −B], [−C, A]]`, so that `Λ·adj = det(Λ) ⊗ I₂`.
    pub fn adjugate(&self) -> DMatrix<f64> {
        let [a, b, c, d] = self.blocks();
        let n = self.dim();
        let mut adj = DMatrix::zeros(2 * n, 2 * n);
        adj.view_mut((0, 0), (n, n)).copy_from(&d);
        adj.view_mut((0, n), (n, n)).copy_from(&(-b));
        adj.view_mut((n, 0), (n, n)).copy_from(&(-c));
        adj.view_mut((n, n), (n, n)).copy_from(&a);
        adj
    }

    /// `‖Λ·adj − det ⊗ I₂‖ / (‖Λ‖‖adj‖)` in Frobenius norm.
    pub fn cofactor_gap(&self) -> f64 {
        let n = self.dim();
        let det = self.determinant();
        let adj = self.adjugate();
        let mut expected = DMatrix::zeros(2 * n, 2 * n);
        expected.view_mut((0, 0), (n, n)).copy_from(&det);
        expected.view_mut((n, n), (n, n)).copy_from(&det);
        scaled(
            (&self.lambda * &adj - expected).norm(),
            self.lambda.norm() * adj.norm(),
        )
    }

    /// Per-mode determinant values `−mⱼ·f(−μⱼ)` from the scalar symbols.
    pub fn determinant_symbols(&self) -> Result<Vec<f64>> {
        let section = self.generator.section();
        section
            .eigenvalues()
            .iter()
            .zip(self.generator.eigenvalues())
            .map(|(&mu, &m)| {
                let f = f_total_real(&self.ctx, -mu)?;
                if !(f > 0.0) {
                    return Err(Error::Anomaly(format!(
                        "determinant symbol f({}) = {f} is not positive",
                        -mu
                    )));
                }
                Ok(-m * f)
            })
            .collect()
    }

    /// Diagonal of the assembled determinant in the eigenbasis.
    pub fn determinant_modes(&self) -> Vec<f64> {
        let q = self.generator.section().eigenvectors();
        let d = q.transpose() * self.determinant() * q;
        (0..self.dim()).map(|j| d[(j, j)]).collect()
    }

    /// Largest per-mode gap between assembled and symbolic determinants, relative to the largest value.
    pub fn determinant_gap(&self) -> Result<f64> {
        let sym = self.determinant_symbols()?;
        let asm = self.determinant_modes();
        let scale = sym.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
        let gap = sym
            .iter()
            .zip(&asm)
            .fold(0.0_f64, |acc, (s, a)| acc.max((s - a).abs()));
        Ok(scaled(gap, scale))
    }

    /// `‖P₁P₃ − P₂² − 16k²U⁻¹V⁻¹e^{2δM}‖ / ‖P₁P₃‖` for one side.
    pub fn block_identity_gap(&self, side: Side) -> f64 {
        let (ops, p) = self.side(side);
        let k = self.k.get(side);
        let lhs = &p[0] * &p[2] - &p[1] * &p[1];
        let rhs = &ops.u_inv * &ops.v_inv * (&ops.e * &ops.e) * (16.0 * k * k);
        scaled((&lhs - &rhs).norm(), (&p[0] * &p[2]).norm())
    }

    /// `f(−A)` from the assembled blocks.
    pub fn f_of_minus_a(&self) -> DMatrix<f64> {
        let gd = &self.plus.u_inv
            * &self.plus.v_inv
            * (&self.plus.e * &self.plus.e)
            * (16.0 * self.k.k_plus.powi(2));
        let gc = &self.minus.u_inv
            * &self.minus.v_inv
            * (&self.minus.e * &self.minus.e)
            * (16.0 * self.k.k_minus.powi(2));
        let (pp, pm) = (&self.p_plus, &self.p_minus);
        gd + gc + &pp[0] * &pm[2] + &pm[0] * &pp[2] + &pp[1] * &pm[1] * 2.0
    }

    /// Gap in `f(−A) = 16k₊k₋W⁻²f̃(−A)`.
    pub fn normalized_symbol_gap(&self) -> Result<f64> {
        let w_inv = self
            .w
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Anomaly("W is singular".into()))?;
        let rhs = &w_inv * &w_inv * &self.f_tilde * (16.0 * self.k.k_plus * self.k.k_minus);
        let lhs = self.f_of_minus_a();
        Ok(scaled((&lhs - &rhs).norm(), lhs.norm()))
    }

    /// Largest pairwise commutator among `M`, `U±`, `V±` and the six `P` blocks.
    pub fn commutator_gap(&self) -> f64 {
        let mats: Vec<&DMatrix<f64>> = [
            &self.minus.m,
            &self.minus.u,
            &self.minus.v,
            &self.plus.u,
            &self.plus.v,
        ]
        .into_iter()
        .chain(self.p_minus.iter())
        .chain(self.p_plus.iter())
        .collect();
        let mut worst = 0.0_f64;
        for i in 0..mats.len() {
            for j in i + 1..mats.len() {
                worst = worst.max(commutator_gap(mats[i], mats[j]));
            }
        }
        worst
    }
}

/// Which printed sign the curvature term `M⁻²Š` carries in `S₁`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SourceConvention {
    /// `S₁ = … − M⁻²Š`; reproduces the transmission conditions.
    #[default]
    Printed,
    /// `S₁ = … + ½M⁻²Š`, kept as a diagnostic.
    HalfPositive,
}

/// Right-hand side `(S₁, S₂)` of the interface system and the curvature source `Š`.
#[derive(Debug, Clone, PartialEq)]
pub struct InterfaceSources {
    pub s1: DVector<f64>,
    pub s2: DVector<f64>,
    pub s_check: DVector<f64>,
}

impl InterfaceSources {
    pub fn stacked(&self) -> DVector<f64> {
        let n = self.s1.len();
        DVector::from_fn(
            2 * n,
            |i, _| if i < n { self.s1[i] } else { self.s2[i - n] },
        )
    }
}

/// `Š = −k₊F₊‴(γ) + k₊M²F₊′(γ) + k₋F₋‴(γ) − k₋M²F₋′(γ)` and the two sources.
pub fn assemble_sources(
    ops: &TransmissionOperators,
    phi_minus: &Quad,
    phi_plus: &Quad,
    traces_minus: &ParticularTraces,
    traces_plus: &ParticularTraces,
    convention: SourceConvention,
) -> InterfaceSources {
    let (kp, km) = (ops.k.k_plus, ops.k.k_minus);
    let m = &ops.minus.m;
    let m2 = m * m;
    let s_check = -&traces_plus.d3_interface * kp
        + &m2 * &traces_plus.d1_left * kp
        + &traces_minus.d3_interface * km
        - &m2 * &traces_minus.d1_right * km;

    let (ed, ec) = (&ops.plus.e, &ops.minus.e);
    let plus_sum = &phi_plus[1] + &phi_plus[3];
    let plus_diff = &phi_plus[1] - &phi_plus[3];
    let minus_diff = &phi_minus[1] - &phi_minus[3];
    let minus_sum = &phi_minus[1] + &phi_minus[3];
    let curvature = &ops.m_inv2 * &s_check;
    let curvature_term = match convention {
        SourceConvention::Printed => -curvature,
        SourceConvention::HalfPositive => curvature * 0.5,
    };
    let s1 = (&plus_sum + ed * &plus_diff) * (2.0 * kp)
        - (&minus_diff + ec * &minus_sum) * (2.0 * km)
        + curvature_term;
    let s2 =
        (&plus_sum - ed * &plus_diff) * (2.0 * kp) + (&minus_diff - ec * &minus_sum) * (2.0 * km);
    InterfaceSources { s1, s2, s_check }
}

/// How the interface data were obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Route {
    Block,
    Calculus,
}

impl std::fmt::Display for Route {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Route::Block => "block",
            Route::Calculus => "calculus",
        })
    }
}

/// Interface unknowns `ψ₁ = u(γ)`, `ψ₂ = u′(γ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct InterfaceData {
    pub psi1: DVector<f64>,
    pub psi2: DVector<f64>,
    pub route: Route,
    /// Relative residual of the block system at `(ψ₁, ψ₂)`.
    pub residual: f64,
}

impl InterfaceData {
    pub fn stacked(&self) -> DVector<f64> {
        let n = self.psi1.len();
        DVector::from_fn(2 * n, |i, _| {
            if i < n {
                self.psi1[i]
            } else {
                self.psi2[i - n]
            }
        })
    }

    /// `‖self − other‖∞ / ‖self‖∞` over the stacked pair.
    pub fn relative_gap(&self, other: &InterfaceData) -> f64 {
        let a = self.stacked();
        scaled(sup_norm(&(&a - other.stacked())), sup_norm(&a))
    }
}

fn block_residual(lambda: &DMatrix<f64>, x: &DVector<f64>, rhs: &DVector<f64>) -> f64 {
    let r = lambda * x - rhs;
    let lam = lambda.amax();
    scaled(
        sup_norm(&r),
        lam * sup_norm(x) * x.len() as f64 + sup_norm(rhs),
    )
}

fn split(x: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
    let n = x.len() / 2;
    (x.rows(0, n).clone_owned(), x.rows(n, n).clone_owned())
}

/// Dense LU solve of the 2m×2m system.
pub fn solve_interface_block(
    ops: &TransmissionOperators,
    sources: &InterfaceSources,
) -> Result<InterfaceData> {
    let rhs = sources.stacked();
    if rhs.len() != ops.lambda.nrows() {
        return Err(Error::DimensionMismatch {
            expected: ops.lambda.nrows(),
            got: rhs.len(),
        });
    }
    let x = ops
        .lambda
        .clone()
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Anomaly("interface block matrix is singular".into()))?;
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Anomaly(
            "interface block solve produced non-finite values".into(),
        ));
    }
    let residual = block_residual(&ops.lambda, &x, &rhs);
    if residual > BLOCK_RESIDUAL_TOL {
        return Err(Error::Anomaly(format!(
            "interface block residual {residual:.3e}"
        )));
    }
    let (psi1, psi2) = split(&x);
    Ok(InterfaceData {
        psi1,
        psi2,
        route: Route::Block,
        residual,
    })
}

/// Mode-by-mode cofactor solve with `det = −m·f(−μ)` and `Pᵢ = k·f_{δ,i}(−μ)` from the scalar symbols.
pub fn solve_interface_calculus(
    ops: &TransmissionOperators,
    sources: &InterfaceSources,
) -> Result<InterfaceData> {
    let gap = ops.commutator_gap();
    if gap > COMMUTATOR_TOL {
        return Err(Error::Anomaly(format!(
            "interface blocks fail to commute ({gap:.3e})"
        )));
    }
    let section = ops.generator.section();
    let det = ops.determinant_symbols()?;
    let s1 = section.to_modal(&sources.s1);
    let s2 = section.to_modal(&sources.s2);
    let ctx = ops.ctx;
    let n = ops.dim();
    let mut psi1 = DVector::zeros(n);
    let mut psi2 = DVector::zeros(n);
    for (j, (&mu, &m)) in section
        .eigenvalues()
        .iter()
        .zip(ops.generator.eigenvalues())
        .enumerate()
    {
        let [fd1, fd2, fd3, _] = f_components_real(ctx.d, -mu)?;
        let [fc1, fc2, fc3, _] = f_components_real(ctx.c, -mu)?;
        let p1s = ctx.k_plus * fd1 + ctx.k_minus * fc1;
        let p2d = ctx.k_plus * fd2 - ctx.k_minus * fc2;
        let p3s = ctx.k_plus * fd3 + ctx.k_minus * fc3;
        psi1[j] = (-p3s * s1[j] + p2d * s2[j]) / det[j];
        psi2[j] = (-p2d * m * s1[j] + p1s * m * s2[j]) / det[j];
    }
    let psi1 = section.from_modal(&psi1);
    let psi2 = section.from_modal(&psi2);
    let data = InterfaceData {
        psi1,
        psi2,
        route: Route::Calculus,
        residual: 0.0,
    };
    let residual = block_residual(&ops.lambda, &data.stacked(), &sources.stacked());
    Ok(InterfaceData { residual, ..data })
}

/// Leading-order interface data, dropping the exponentially small remainders:
/// `ψ₁° = ((k₊+k₋)M⁻¹S₁ − (k₊−k₋)M⁻¹S₂)/(8k₊k₋)`, `ψ₂° = ((k₊−k₋)S₁ − (k₊+k₋)S₂)/(8k₊k₋)`.
pub fn leading_order_interface(
    sources: &InterfaceSources,
    generator: &GeneratorM,
    k: &Diffusivities,
) -> (DVector<f64>, DVector<f64>) {
    let (kp, km) = (k.k_plus, k.k_minus);
    let denom = 8.0 * kp * km;
    let m_inv = generator.function("M^-1", |m| 1.0 / m).into_matrix();
    let psi1 = (&m_inv * &sources.s1 * (kp + km) - &m_inv * &sources.s2 * (kp - km)) / denom;
    let psi2 = (&sources.s1 * (kp - km) - &sources.s2 * (kp + km)) / denom;
    (psi1, psi2)
}

/// Limit of `Λ` as both pieces grow: `[[2(k₊+k₋)M, −2(k₊−k₋)I], [2(k₊−k₋)M, −2(k₊+k₋)I]]`.
pub fn limit_lambda(generator: &GeneratorM, k: &Diffusivities) -> DMatrix<f64> {
    let n = generator.dim();
    let m = generator.matrix().into_matrix();
    let id = DMatrix::<f64>::identity(n, n);
    let (s, d) = (k.k_plus + k.k_minus, k.k_plus - k.k_minus);
    let mut out = DMatrix::zeros(2 * n, 2 * n);
    out.view_mut((0, 0), (n, n)).copy_from(&(&m * (2.0 * s)));
    out.view_mut((0, n), (n, n)).copy_from(&(&id * (-2.0 * d)));
    out.view_mut((n, 0), (n, n)).copy_from(&(&m * (2.0 * d)));
    out.view_mut((n, n), (n, n)).copy_from(&(&id * (-2.0 * s)));
    out
}

/// A complete transmission problem.
#[derive(Debug, Clone)]
pub struct TransmissionProblem {
    pub section: SectionOperator,
    pub geometry: CylinderGeometry,
    pub diffusivities: Diffusivities,
    pub forcing: ModalForcing,
    pub boundary: BoundaryData,
}

impl TransmissionProblem {
    pub fn new(
        section: SectionOperator,
        geometry: CylinderGeometry,
        diffusivities: Diffusivities,
        forcing: ModalForcing,
        boundary: BoundaryData,
    ) -> Result<Self> {
        let m = section.dim();
        boundary.check_dim(m)?;
        if forcing.dim() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                got: forcing.dim(),
            });
        }
        Ok(Self {
            section,
            geometry,
            diffusivities,
            forcing,
            boundary,
        })
    }
}

/// Which interface solve feeds the representation coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RouteChoice {
    Block,
    Calculus,
    /// Use the block route and report the gap to the calculus route.
    #[default]
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    pub route: RouteChoice,
    /// Grid points per piece for the particular solutions.
    pub nx: usize,
    pub convention: SourceConvention,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            route: RouteChoice::Both,
            nx: 129,
            convention: SourceConvention::Printed,
        }
    }
}

/// Solution of the transmission problem: both one-sided solutions, the interface
/// data from both routes, and the residual report.
#[derive(Debug, Clone)]
pub struct TransmissionSolution {
    pub minus: SubproblemSolution,
    pub plus: SubproblemSolution,
    pub interface: InterfaceData,
    pub alternate: InterfaceData,
    pub sources: InterfaceSources,
    pub operators: TransmissionOperators,
    pub geometry: CylinderGeometry,
    pub boundary: BoundaryData,
    pub options: SolveOptions,
    pub phi_minus: Quad,
    pub phi_plus: Quad,
    pub fields: FieldResiduals,
    pub report: ResidualReport,
    pub budgets: Budgets,
}

/// Run the whole pipeline: particular solutions, sources, interface solves and reconstruction.
pub fn solve_transmission(
    problem: &TransmissionProblem,
    options: SolveOptions,
) -> Result<TransmissionSolution> {
    let generator = problem.section.square_root_generator();
    let geom = problem.geometry;
    let k = problem.diffusivities;
    let ops = TransmissionOperators::assemble(&generator, &geom, k)?;

    let part_minus = solve_particular(
        &problem.section,
        &geom,
        Side::Minus,
        &problem.forcing,
        options.nx,
    )?;
    let part_plus = solve_particular(
        &problem.section,
        &geom,
        Side::Plus,
        &problem.forcing,
        options.nx,
    )?;
    let tr_minus = part_minus.traces();
    let tr_plus = part_plus.traces();
    let phi_minus = phi_tilde_minus(&ops.minus, &problem.boundary, &tr_minus)?;
    let phi_plus = phi_tilde_plus(&ops.plus, &problem.boundary, &tr_plus)?;
    let sources = assemble_sources(
        &ops,
        &phi_minus,
        &phi_plus,
        &tr_minus,
        &tr_plus,
        options.convention,
    );

    let block = solve_interface_block(&ops, &sources)?;
    let calculus = solve_interface_calculus(&ops, &sources)?;
    let (interface, alternate) = match options.route {
        RouteChoice::Block | RouteChoice::Both => (block, calculus),
        RouteChoice::Calculus => (calculus, block),
    };

    let budgets = Budgets::from_estimates(
        part_minus.bvp_error().max(part_plus.bvp_error()),
        part_minus.trace_error().max(part_plus.trace_error()),
    );
    build_solution(
        ops,
        geom,
        problem.boundary.clone(),
        options,
        sources,
        phi_minus,
        phi_plus,
        [part_minus, part_plus],
        interface,
        alternate,
        budgets,
        [None, None],
    )
}

#[allow(clippy::too_many_arguments)]
fn build_solution(
    ops: TransmissionOperators,
    geometry: CylinderGeometry,
    boundary: BoundaryData,
    options: SolveOptions,
    sources: InterfaceSources,
    phi_minus: Quad,
    phi_plus: Quad,
    particulars: [ParticularSolution; 2],
    interface: InterfaceData,
    alternate: InterfaceData,
    budgets: Budgets,
    perturbation: [Option<(DVector<f64>, DVector<f64>)>; 2],
) -> Result<TransmissionSolution> {
    let [part_minus, part_plus] = particulars;
    let psi_for = |i: usize| match &perturbation[i] {
        Some((e1, e2)) => (&interface.psi1 + e1, &interface.psi2 + e2),
        None => (interface.psi1.clone(), interface.psi2.clone()),
    };
    let (p1m, p2m) = psi_for(0);
    let (p1p, p2p) = psi_for(1);
    let alpha_minus = alphas_minus(&ops.minus, &p1m, &p2m, &phi_minus)?;
    let alpha_plus = alphas_plus(&ops.plus, &p1p, &p2p, &phi_plus)?;
    let generator = ops.generator().clone();
    let minus = SubproblemSolution::new(&generator, &geometry, alpha_minus, part_minus)?;
    let plus = SubproblemSolution::new(&generator, &geometry, alpha_plus, part_plus)?;

    let fields = field_residuals(&minus, &plus, &ops.diffusivities(), &boundary)?;
    let mut report = ResidualReport::from_fields(&fields);
    report.route_gap = interface.relative_gap(&alternate);
    report.det_gap = ops.determinant_gap()?;
    let c = ops.conditioning;
    report.cond_u_minus = c.u_minus;
    report.cond_u_plus = c.u_plus;
    report.cond_v_minus = c.v_minus;
    report.cond_v_plus = c.v_plus;
    report.cond_lambda = c.lambda;

    Ok(TransmissionSolution {
        minus,
        plus,
        interface,
        alternate,
        sources,
        operators: ops,
        geometry,
        boundary,
        options,
        phi_minus,
        phi_plus,
        fields,
        report,
        budgets,
    })
}

impl TransmissionSolution {
    pub fn side(&self, side: Side) -> &SubproblemSolution {
        match side {
            Side::Minus => &self.minus,
            Side::Plus => &self.plus,
        }
    }

    /// `u^{(order)}(x)` on whichever piece contains `x`; the interface uses the minus side.
    pub fn evaluate(&self, order: usize, x: f64) -> Result<DVector<f64>> {
        if x <= self.geometry.gamma {
            self.minus.evaluate(order, x)
        } else {
            self.plus.evaluate(order, x)
        }
    }

    pub fn violations(&self) -> Vec<String> {
        self.report.violations(&self.budgets)
    }

    pub fn within_budget(&self) -> bool {
        self.violations().is_empty()
    }

    /// Rebuild with `(ψ₁ + ε₁, ψ₂ + ε₂)` fed to one side only, leaving the other side intact.
    pub fn perturbed(
        &self,
        side: Side,
        eps1: &DVector<f64>,
        eps2: &DVector<f64>,
    ) -> Result<TransmissionSolution> {
        let mut perturbation = [None, None];
        perturbation[if side == Side::Minus { 0 } else { 1 }] = Some((eps1.clone(), eps2.clone()));
        build_solution(
            self.operators.clone(),
            self.geometry,
            self.boundary.clone(),
            self.options,
            self.sources.clone(),
            self.phi_minus.clone(),
            self.phi_plus.clone(),
            [
                self.minus.particular().clone(),
                self.plus.particular().clone(),
            ],
            self.interface.clone(),
            self.alternate.clone(),
            self.budgets,
            perturbation,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_ops(c: f64, d: f64, km: f64, kp: f64) -> TransmissionOperators {
        let s = SectionOperator::from_matrix(DMatrix::from_element(1, 1, -1.0)).unwrap();
        let g = CylinderGeometry::from_lengths(c, d).unwrap();
        TransmissionOperators::assemble(
            &s.square_root_generator(),
            &g,
            Diffusivities::new(km, kp).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn scalar_blocks_match_symbol_values() {
        let ops = scalar_ops(1.0, 1.0, 1.0, 1.0);
        assert!((ops.minus.u[(0, 0)] - 0.128_905_834_420_502_665).abs() < 1e-14);
        assert!((ops.minus.v[(0, 0)] - 1.600_423_599_106_271_951).abs() < 1e-14);
        let want = [
            14.764_870_685_236_175,
            7.247_996_081_312_276,
            4.268_878_522_611_623,
        ];
        for (p, w) in ops.p_plus.iter().zip(want) {
            assert!((p[(0, 0)] - w).abs() < 1e-12 * w);
        }
        let det = ops.determinant()[(0, 0)];
        assert!((det - 252.117_757_429_370_65).abs() < 1e-10 * det);
        assert!(ops.determinant_gap().unwrap() < 1e-13);
    }

    #[test]
    fn long_pieces_collapse_blocks() {
        let ops = scalar_ops(50.0, 50.0, 0.5, 2.0);
        for p in ops.p_plus.iter() {
            assert!((p[(0, 0)] - 4.0).abs() < 1e-12);
        }
        for p in ops.p_minus.iter() {
            assert!((p[(0, 0)] - 1.0).abs() < 1e-12);
        }
        let lim = limit_lambda(ops.generator(), &ops.diffusivities());
        assert!((&ops.lambda - lim).amax() < 1e-12);
    }

    #[test]
    fn curvature_source_example() {
        let ops = scalar_ops(1.0, 1.0, 1.0, 1.0);
        let zero: Quad = std::array::from_fn(|_| DVector::zeros(1));
        let mut tp = ParticularTraces::zeros(1);
        tp.d3_interface[0] = 1.0;
        let s = assemble_sources(
            &ops,
            &zero,
            &zero,
            &ParticularTraces::zeros(1),
            &tp,
            SourceConvention::Printed,
        );
        assert_eq!(s.s_check[0], -1.0);
        assert!((s.s1[0] - 1.0).abs() < 1e-15);
        assert_eq!(s.s2[0], 0.0);
    }

    #[test]
    fn zero_sources_give_zero_interface_data() {
        let ops = scalar_ops(0.7, 1.3, 1.0, 3.0);
        let s = InterfaceSources {
            s1: DVector::zeros(1),
            s2: DVector::zeros(1),
            s_check: DVector::zeros(1),
        };
        for data in [
            solve_interface_block(&ops, &s).unwrap(),
            solve_interface_calculus(&ops, &s).unwrap(),
        ] {
            assert_eq!(data.psi1[0], 0.0);
            assert_eq!(data.psi2[0], 0.0);
        }
        let (l1, l2) = leading_order_interface(&s, ops.generator(), &ops.diffusivities());
        assert_eq!((l1[0], l2[0]), (0.0, 0.0));
    }

    #[test]
    fn leading_order_with_equal_diffusivities() {
        let ops = scalar_ops(1.0, 1.0, 2.0, 2.0);
        let s = InterfaceSources {
            s1: DVector::from_element(1, 3.0),
            s2: DVector::from_element(1, -5.0),
            s_check: DVector::zeros(1),
        };
        let (l1, l2) = leading_order_interface(&s, ops.generator(), &ops.diffusivities());
        // M = −1, k = 2: ψ₁° = M⁻¹S₁/(4k), ψ₂° = −S₂/(4k).
        assert!((l1[0] - (-3.0 / 8.0)).abs() < 1e-15);
        assert!((l2[0] - 5.0 / 8.0).abs() < 1e-15);
    }
}
