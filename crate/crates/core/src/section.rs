//! The finite-dimensional section operator `A`, its square-root generator
//! `M = −√(−A)`, and every operator function built from them.
//!
//! All functions of `A` are evaluated through one shared symmetric
//! eigendecomposition `A = Q·diag(μ)·Qᵀ`, so any two of them commute up to
//! rounding. The transmission determinant algebra relies on that.

use std::fmt;
use std::path::Path;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::linalg::op_norm;

/// Relative asymmetry accepted by [`SectionOperator::from_matrix`].
pub const SYMMETRY_TOL: f64 = 1e-12;
/// Relative reconstruction error accepted for the eigendecomposition.
pub const RECONSTRUCTION_TOL: f64 = 1e-10;
/// Operator-norm departure of `QᵀQ` from the identity.
pub const ORTHOGONALITY_TOL: f64 = 1e-12;
/// Eigenvalues above `-NEAR_ZERO_REL·max|μ|` count as touching zero.
pub const NEAR_ZERO_REL: f64 = 1e-12;

/// Where a section operator came from.
#[derive(Debug, Clone, PartialEq)]
pub enum Provenance {
    DirichletLaplacian1d { m: usize, length: f64 },
    UserMatrix,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Provenance::DirichletLaplacian1d { m, length } => {
                write!(f, "1-D Dirichlet Laplacian (m = {m}, L = {length})")
            }
            Provenance::UserMatrix => write!(f, "user matrix"),
        }
    }
}

/// Symmetric negative-definite surrogate of the section operator `A`.
#[derive(Debug, Clone)]
pub struct SectionOperator {
    matrix: DMatrix<f64>,
    eigenvalues: Vec<f64>,
    eigenvectors: DMatrix<f64>,
    provenance: Provenance,
}

impl SectionOperator {
    /// Second-order central-difference Laplacian on `m` interior points of
    /// `(0, L)` with homogeneous Dirichlet ends.
    pub fn dirichlet_laplacian_1d(m: usize, length: f64) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidGeometry(
                "need at least one interior point".into(),
            ));
        }
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::InvalidGeometry(format!(
                "section length must be positive, got {length}"
            )));
        }
        let h = length / (m as f64 + 1.0);
        let inv_h2 = 1.0 / (h * h);
        let a = DMatrix::from_fn(m, m, |i, j| {
            if i == j {
                -2.0 * inv_h2
            } else if i.abs_diff(j) == 1 {
                inv_h2
            } else {
                0.0
            }
        });
        let mut op = Self::from_matrix(a)?;
        op.provenance = Provenance::DirichletLaplacian1d { m, length };
        Ok(op)
    }

    /// Validate a dense symmetric matrix and decompose it.
    pub fn from_matrix(a: DMatrix<f64>) -> Result<Self> {
        let m = a.nrows();
        if m == 0 || a.ncols() != m {
            return Err(Error::InvalidInput(format!(
                "section matrix must be square and nonempty, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        if a.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(
                "section matrix has non-finite entries".into(),
            ));
        }
        let norm = a.norm();
        let asym = (&a - a.transpose()).norm();
        if asym > SYMMETRY_TOL * norm {
            return Err(Error::Asymmetric(asym / norm));
        }
        let sym = (&a + a.transpose()) * 0.5;
        let eig = SymmetricEigen::new(sym);

        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
        let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let mut q = DMatrix::zeros(m, m);
        for (col, &src) in order.iter().enumerate() {
            let mut v = eig.eigenvectors.column(src).clone_owned();
            // Sign convention: first non-negligible component positive.
            let lead = v.iter().copied().find(|x| x.abs() > 1e-8).unwrap_or(1.0);
            if lead < 0.0 {
                v.neg_mut();
            }
            q.set_column(col, &v);
        }

        let max_abs = eigenvalues.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
        for (index, &value) in eigenvalues.iter().enumerate() {
            if !(value < -NEAR_ZERO_REL * max_abs) || value >= 0.0 {
                return Err(Error::HypothesisViolation { index, value });
            }
        }

        let ortho = op_norm(&(q.transpose() * &q - DMatrix::identity(m, m)));
        if ortho > ORTHOGONALITY_TOL {
            return Err(Error::Decomposition(format!(
                "eigenvectors not orthonormal ({ortho:.3e})"
            )));
        }
        let recon =
            &q * DMatrix::from_diagonal(&DVector::from_vec(eigenvalues.clone())) * q.transpose();
        let rel = (&recon - &a).norm() / norm;
        if rel > RECONSTRUCTION_TOL {
            return Err(Error::Decomposition(format!(
                "reconstruction error {rel:.3e}"
            )));
        }

        Ok(Self {
            matrix: a,
            eigenvalues,
            eigenvectors: q,
            provenance: Provenance::UserMatrix,
        })
    }

    /// Read the plain-text matrix format: first line `m`, then `m` rows of `m` numbers.
    pub fn from_matrix_file(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_matrix(parse_matrix_text(&text)?)
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Eigenvalues `μ₁ ≤ … ≤ μ_m < 0`.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Orthonormal eigenvectors as columns, in eigenvalue order.
    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigenvectors
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    /// Coefficients of `v` in the eigenbasis, `Qᵀv`.
    pub fn to_modal(&self, v: &DVector<f64>) -> DVector<f64> {
        self.eigenvectors.tr_mul(v)
    }

    /// Inverse of [`to_modal`](Self::to_modal).
    pub fn from_modal(&self, v: &DVector<f64>) -> DVector<f64> {
        &self.eigenvectors * v
    }

    /// Eigenvector `j` as a section vector.
    pub fn mode(&self, j: usize) -> DVector<f64> {
        self.eigenvectors.column(j).clone_owned()
    }

    fn check_dim(&self, got: usize) -> Result<()> {
        if got != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got,
            });
        }
        Ok(())
    }

    /// Apply `Q·diag(values)·Qᵀ` to a vector.
    pub fn spectral_apply(&self, values: &[f64], v: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_dim(v.len())?;
        self.check_dim(values.len())?;
        let mut w = self.to_modal(v);
        for (wi, gi) in w.iter_mut().zip(values) {
            *wi *= gi;
        }
        Ok(self.from_modal(&w))
    }

    /// Matrix `Q·diag(g)·Qᵀ` for per-mode values `g`.
    pub fn spectral_matrix(&self, values: &[f64]) -> DMatrix<f64> {
        let mut scaled_q = self.eigenvectors.clone();
        for (j, g) in values.iter().enumerate() {
            scaled_q.column_mut(j).scale_mut(*g);
        }
        scaled_q * self.eigenvectors.transpose()
    }

    /// `g(A) = Q·diag(g(μⱼ))·Qᵀ`.
    pub fn apply_function<G: Fn(f64) -> f64>(&self, g: G) -> Result<OperatorMatrix> {
        let values = self
            .eigenvalues
            .iter()
            .map(|&mu| {
                let v = g(mu);
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(Error::NonFiniteFunction { mu })
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(OperatorMatrix::new(self.spectral_matrix(&values), "g(A)"))
    }

    /// `M = −√(−A)`.
    pub fn square_root_generator(&self) -> GeneratorM {
        let eigenvalues = self.eigenvalues.iter().map(|&mu| -(-mu).sqrt()).collect();
        GeneratorM {
            section: self.clone(),
            eigenvalues,
        }
    }
}

/// Generator `M = −√(−A)` of the contraction semigroup `e^{tM}`.
#[derive(Debug, Clone)]
pub struct GeneratorM {
    section: SectionOperator,
    eigenvalues: Vec<f64>,
}

impl GeneratorM {
    pub fn section(&self) -> &SectionOperator {
        &self.section
    }

    /// `mⱼ = −√(−μⱼ)`, all strictly negative.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `g(M)` from a function of the generator eigenvalues.
    pub fn function<G: Fn(f64) -> f64>(&self, tag: &str, g: G) -> OperatorMatrix {
        let values: Vec<f64> = self.eigenvalues.iter().map(|&m| g(m)).collect();
        OperatorMatrix::new(self.section.spectral_matrix(&values), tag)
    }

    pub fn matrix(&self) -> OperatorMatrix {
        self.function("M", |m| m)
    }

    /// `e^{tM}` for `t ≥ 0`.
    pub fn semigroup(&self, t: f64) -> Result<OperatorMatrix> {
        if !(t >= 0.0) {
            return Err(Error::NegativeTime(t));
        }
        if t == 0.0 {
            let m = self.dim();
            return Ok(OperatorMatrix::new(DMatrix::identity(m, m), "e^{0M}"));
        }
        Ok(self.function(&format!("e^{{{t}M}}"), |m| (t * m).exp()))
    }

    /// `e^{tM} v` without forming the matrix.
    pub fn apply_semigroup(&self, t: f64, v: &DVector<f64>) -> Result<DVector<f64>> {
        if !(t >= 0.0) {
            return Err(Error::NegativeTime(t));
        }
        let values: Vec<f64> = self.eigenvalues.iter().map(|&m| (t * m).exp()).collect();
        self.section.spectral_apply(&values, v)
    }
}

/// A bounded operator on the section space, tagged with the symbol it realizes.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    matrix: DMatrix<f64>,
    tag: String,
}

impl OperatorMatrix {
    pub fn new(matrix: DMatrix<f64>, tag: impl Into<String>) -> Self {
        Self {
            matrix,
            tag: tag.into(),
        }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.matrix
    }

    pub fn tag(&self) -> &str {
        &self.tag
    }

    pub fn with_tag(mut self, tag: impl Into<String>) -> Self {
        self.tag = tag.into();
        self
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn is_finite(&self) -> bool {
        self.matrix.iter().all(|v| v.is_finite())
    }

    pub fn op_norm(&self) -> f64 {
        op_norm(&self.matrix)
    }
}

/// Parse `m` followed by `m` rows of `m` whitespace-separated decimals.
pub fn parse_matrix_text(text: &str) -> Result<DMatrix<f64>> {
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty matrix file".into()))?;
    let m: usize = header
        .parse()
        .map_err(|_| Error::Parse(format!("first line must be the dimension, got {header:?}")))?;
    if m == 0 {
        return Err(Error::Parse("matrix dimension must be positive".into()));
    }
    let mut data = Vec::with_capacity(m * m);
    for row in 0..m {
        let line = lines
            .next()
            .ok_or_else(|| Error::Parse(format!("expected {m} rows, found {row}")))?;
        let values = line
            .split_whitespace()
            .map(|tok| {
                tok.parse::<f64>()
                    .map_err(|_| Error::Parse(format!("bad number {tok:?} in row {row}")))
            })
            .collect::<Result<Vec<_>>>()?;
        if values.len() != m {
            return Err(Error::Parse(format!(
                "row {row} has {} entries, expected {m}",
                values.len()
            )));
        }
        data.extend(values);
    }
    if lines.next().is_some() {
        return Err(Error::Parse("trailing content after matrix rows".into()));
    }
    Ok(DMatrix::from_row_slice(m, m, &data))
}

/// Inverse of [`parse_matrix_text`], using round-trip float formatting.
pub fn format_matrix_text(a: &DMatrix<f64>) -> String {
    let mut out = format!("{}\n", a.nrows());
    for i in 0..a.nrows() {
        let row: Vec<String> = (0..a.ncols()).map(|j| format!("{:?}", a[(i, j)])).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn closed_form(m: usize, length: f64) -> Vec<f64> {
        let h = length / (m as f64 + 1.0);
        let mut v: Vec<f64> = (1..=m)
            .map(|k| -(4.0 / (h * h)) * (k as f64 * PI / (2.0 * (m as f64 + 1.0))).sin().powi(2))
            .collect();
        v.sort_by(f64::total_cmp);
        v
    }

    #[test]
    fn single_point_laplacian() {
        let s = SectionOperator::dirichlet_laplacian_1d(1, 1.0).unwrap();
        assert_eq!(s.eigenvalues(), &[-8.0]);
    }

    #[test]
    fn three_point_laplacian_spectrum() {
        let s = SectionOperator::dirichlet_laplacian_1d(3, 1.0).unwrap();
        let expected = [-54.627_416_997_969_52, -32.0, -9.372_583_002_030_479];
        for (got, want) in s.eigenvalues().iter().zip(expected) {
            assert!((got - want).abs() < 1e-12 * want.abs(), "{got} vs {want}");
        }
    }

    #[test]
    fn fifty_point_laplacian_invariants() {
        let s = SectionOperator::dirichlet_laplacian_1d(50, 1.0).unwrap();
        for (got, want) in s.eigenvalues().iter().zip(closed_form(50, 1.0)) {
            assert!((got - want).abs() <= 1e-10 * want.abs());
        }
        assert!(s.eigenvalues().iter().all(|&mu| mu < 0.0));
        let q = s.eigenvectors();
        assert!(op_norm(&(q.transpose() * q - DMatrix::identity(50, 50))) < 1e-12);
    }

    #[test]
    fn invalid_geometry() {
        assert!(matches!(
            SectionOperator::dirichlet_laplacian_1d(0, 1.0),
            Err(Error::InvalidGeometry(_))
        ));
        assert!(matches!(
            SectionOperator::dirichlet_laplacian_1d(3, 0.0),
            Err(Error::InvalidGeometry(_))
        ));
        assert!(matches!(
            SectionOperator::dirichlet_laplacian_1d(3, -1.0),
            Err(Error::InvalidGeometry(_))
        ));
    }

    #[test]
    fn from_matrix_gates() {
        let ok = SectionOperator::from_matrix(DMatrix::from_element(1, 1, -1.0)).unwrap();
        assert_eq!(ok.eigenvalues(), &[-1.0]);

        let pos = SectionOperator::from_matrix(DMatrix::from_diagonal(&DVector::from_vec(vec![
            -1.0, 1.0,
        ])));
        assert!(matches!(pos, Err(Error::HypothesisViolation { .. })));

        let asym = DMatrix::from_row_slice(2, 2, &[-2.0, 1.0, 0.0, -2.0]);
        assert!(matches!(
            SectionOperator::from_matrix(asym),
            Err(Error::Asymmetric(_))
        ));

        let near_zero = DMatrix::from_diagonal(&DVector::from_vec(vec![-1.0, -1e-14]));
        assert!(matches!(
            SectionOperator::from_matrix(near_zero),
            Err(Error::HypothesisViolation { index: 1, .. })
        ));
    }

    #[test]
    fn dense_reentry_matches_constructor() {
        let lap = SectionOperator::dirichlet_laplacian_1d(3, 1.0).unwrap();
        let dense = SectionOperator::from_matrix(lap.matrix().clone()).unwrap();
        for (a, b) in lap.eigenvalues().iter().zip(dense.eigenvalues()) {
            assert!((a - b).abs() <= 1e-12 * a.abs());
        }
        assert_eq!(dense.provenance(), &Provenance::UserMatrix);
    }

    #[test]
    fn apply_function_examples() {
        let lap = SectionOperator::dirichlet_laplacian_1d(3, 1.0).unwrap();
        let id = lap.apply_function(|mu| mu).unwrap();
        assert!((id.matrix() - lap.matrix()).norm() < 1e-12 * lap.matrix().norm());

        let four = SectionOperator::from_matrix(DMatrix::from_element(1, 1, -4.0)).unwrap();
        let root = four.apply_function(|mu| -(-mu).sqrt()).unwrap();
        assert_eq!(root.matrix()[(0, 0)], -2.0);

        let decay = lap.apply_function(|mu| (-(-mu).sqrt()).exp()).unwrap();
        let ev = SymmetricEigen::new(decay.matrix().clone()).eigenvalues;
        let mut got: Vec<f64> = ev.iter().copied().collect();
        got.sort_by(f64::total_cmp);
        let want = [
            0.000_616_756_502_099_263,
            0.003_493_489_276_646_201_6,
            0.046_818_939_913_498_27,
        ];
        for (g, w) in got.iter().zip(want) {
            assert!((g - w).abs() < 1e-13, "{g} vs {w}");
        }

        let err = lap.apply_function(|mu| if mu < -50.0 { f64::NAN } else { 1.0 });
        assert!(matches!(err, Err(Error::NonFiniteFunction { .. })));
    }

    #[test]
    fn generator_examples() {
        let one = SectionOperator::from_matrix(DMatrix::from_element(1, 1, -1.0)).unwrap();
        let m = one.square_root_generator();
        assert_eq!(m.eigenvalues(), &[-1.0]);
        let e1 = m.semigroup(1.0).unwrap();
        assert!((e1.matrix()[(0, 0)] - (-1.0f64).exp()).abs() < 1e-15);

        let lap = SectionOperator::dirichlet_laplacian_1d(3, 1.0).unwrap();
        let gm = lap.square_root_generator();
        let want = [
            -7.391_036_260_090_294,
            -5.656_854_249_492_38,
            -3.061_467_458_920_718,
        ];
        for (g, w) in gm.eigenvalues().iter().zip(want) {
            assert!((g - w).abs() < 1e-13);
        }
        let mm = gm.matrix();
        let gap = (mm.matrix() * mm.matrix() + lap.matrix()).norm();
        assert!(gap <= 1e-10 * lap.matrix().norm());

        assert_eq!(
            gm.semigroup(0.0).unwrap().matrix(),
            &DMatrix::identity(3, 3)
        );
        assert!(matches!(gm.semigroup(-0.1), Err(Error::NegativeTime(_))));

        let law = gm.semigroup(0.3).unwrap().matrix() * gm.semigroup(0.7).unwrap().matrix()
            - gm.semigroup(1.0).unwrap().matrix();
        assert!(op_norm(&law) <= 1e-12);
    }

    #[test]
    fn matrix_text_round_trip_and_errors() {
        let lap = SectionOperator::dirichlet_laplacian_1d(4, 2.0).unwrap();
        let text = format_matrix_text(lap.matrix());
        assert_eq!(&parse_matrix_text(&text).unwrap(), lap.matrix());
        assert!(parse_matrix_text("").is_err());
        assert!(parse_matrix_text("2\n1 2\n").is_err());
        assert!(parse_matrix_text("2\n1 2\n3 x\n").is_err());
        assert!(parse_matrix_text("1\n-1 2\n").is_err());
    }
}
