//! Coupled finite-difference solve of the transmission problem, one mode at a time.
//!
//! Each piece carries the unknowns `u` and `w = u″ + μu` at `n_x` nodes, so the
//! fourth-order equation splits into two second-order rows per interior node.
//! The interface couples the pieces through `u`, `u′`, `k w` and `k w′` using
//! second-order one-sided stencils. Only the eigenpairs of the section operator
//! are shared with the semigroup solver.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::forcing::ModalForcing;
use crate::linalg::{interp_cubic, BandedMatrix};
use crate::problem::{BoundaryData, CylinderGeometry, Diffusivities, Side};
use crate::section::SectionOperator;

/// Smallest admissible grid for the direct solve.
pub const MIN_DIRECT_NX: usize = 33;

/// Sampled fields of the direct solve.
#[derive(Debug, Clone)]
pub struct OracleSolution {
    geometry: CylinderGeometry,
    nx: usize,
    eigenvectors: nalgebra::DMatrix<f64>,
    /// `u` samples, `[side][mode][node]`.
    fields: [Vec<Vec<f64>>; 2],
    /// Largest relative backward error of the per-mode solves.
    pub solve_residual: f64,
    /// Lower and upper bandwidths of the per-mode matrices.
    pub bandwidths: (usize, usize),
}

fn side_index(side: Side) -> usize {
    match side {
        Side::Minus => 0,
        Side::Plus => 1,
    }
}

impl OracleSolution {
    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn geometry(&self) -> &CylinderGeometry {
        &self.geometry
    }

    pub fn spacing(&self, side: Side) -> f64 {
        self.geometry.length(side) / (self.nx - 1) as f64
    }

    pub fn node(&self, side: Side, i: usize) -> f64 {
        let (lo, hi) = self.geometry.interval(side);
        if i + 1 == self.nx {
            hi
        } else {
            lo + i as f64 * self.spacing(side)
        }
    }

    /// Nodal samples of mode `j` on `side`.
    pub fn samples(&self, side: Side, mode: usize) -> &[f64] {
        &self.fields[side_index(side)][mode]
    }

    /// Modal coefficients at `x`, interpolated with cubics through the nodes.
    pub fn modal(&self, side: Side, x: f64) -> DVector<f64> {
        let (lo, _) = self.geometry.interval(side);
        let h = self.spacing(side);
        let rows = &self.fields[side_index(side)];
        DVector::from_fn(rows.len(), |j, _| interp_cubic(lo, h, &rows[j], x))
    }

    pub fn value(&self, side: Side, x: f64) -> DVector<f64> {
        &self.eigenvectors * self.modal(side, x)
    }
}

struct Layout {
    n: usize,
}

impl Layout {
    fn u(&self, side: Side, i: usize) -> usize {
        side_index(side) * 2 * self.n + 2 * i
    }

    fn w(&self, side: Side, i: usize) -> usize {
        self.u(side, i) + 1
    }
}

/// One mode: assemble and solve the banded system, returning `(u₋, u₊, residual, bandwidths)`.
#[allow(clippy::too_many_arguments)]
fn solve_mode(
    mu: f64,
    geom: &CylinderGeometry,
    k: &Diffusivities,
    ends: [(f64, f64); 2],
    forcing: &ModalForcing,
    mode: usize,
    n: usize,
) -> Result<(Vec<f64>, Vec<f64>, f64, (usize, usize))> {
    let lay = Layout { n };
    let size = 4 * n;
    let last = n - 1;
    let mut t: Vec<(usize, usize, f64)> = Vec::with_capacity(16 * n);
    let mut rhs = vec![0.0; size];
    let hm = geom.length(Side::Minus) / last as f64;
    let hp = geom.length(Side::Plus) / last as f64;

    // Value and outward slope at the left end.
    t.push((0, lay.u(Side::Minus, 0), 1.0));
    rhs[0] = ends[0].0;
    for (i, c) in [(0, -3.0), (1, 4.0), (2, -1.0)] {
        t.push((1, lay.u(Side::Minus, i), c / (2.0 * hm)));
    }
    rhs[1] = ends[0].1;

    for side in Side::BOTH {
        let (lo, _) = geom.interval(side);
        let h = if side == Side::Minus { hm } else { hp };
        let inv = 1.0 / (h * h);
        for i in 1..last {
            let x = lo + i as f64 * h;
            let row = lay.u(side, i);
            // (D² + μ) w = f
            t.push((row, lay.w(side, i - 1), inv));
            t.push((row, lay.w(side, i), -2.0 * inv + mu));
            t.push((row, lay.w(side, i + 1), inv));
            rhs[row] = forcing.modal_value(side, mode, x);
            // (D² + μ) u − w = 0
            t.push((row + 1, lay.u(side, i - 1), inv));
            t.push((row + 1, lay.u(side, i), -2.0 * inv + mu));
            t.push((row + 1, lay.u(side, i + 1), inv));
            t.push((row + 1, lay.w(side, i), -1.0));
        }
    }

    let back = |col: fn(&Layout, Side, usize) -> usize, scale: f64| {
        [(last, 3.0), (last - 1, -4.0), (last - 2, 1.0)]
            .map(|(i, c)| (col(&lay, Side::Minus, i), scale * c / (2.0 * hm)))
    };
    let fwd = |col: fn(&Layout, Side, usize) -> usize, scale: f64| {
        [(0, -3.0), (1, 4.0), (2, -1.0)]
            .map(|(i, c)| (col(&lay, Side::Plus, i), scale * c / (2.0 * hp)))
    };
    let (km, kp) = (k.k_minus, k.k_plus);
    let r_u = lay.u(Side::Minus, last);
    let r_w = r_u + 1;
    let r_du = lay.u(Side::Plus, 0);
    let r_dw = r_du + 1;
    t.push((r_u, lay.u(Side::Minus, last), 1.0));
    t.push((r_u, lay.u(Side::Plus, 0), -1.0));
    t.push((r_w, lay.w(Side::Minus, last), km));
    t.push((r_w, lay.w(Side::Plus, 0), -kp));
    for (col, v) in back(Layout::u, 1.0).into_iter().chain(fwd(Layout::u, -1.0)) {
        t.push((r_du, col, v));
    }
    for (col, v) in back(Layout::w, km).into_iter().chain(fwd(Layout::w, -kp)) {
        t.push((r_dw, col, v));
    }

    let r_end = lay.u(Side::Plus, last);
    t.push((r_end, r_end, 1.0));
    rhs[r_end] = ends[1].0;
    for (i, c) in [(last, 3.0), (last - 1, -4.0), (last - 2, 1.0)] {
        t.push((r_end + 1, lay.u(Side::Plus, i), c / (2.0 * hp)));
    }
    rhs[r_end + 1] = ends[1].1;

    let a = BandedMatrix::from_triplets(size, &t);
    let x = a.solve(&rhs)?;
    let ax = a.mul_vec(&x);
    let amax = t.iter().fold(0.0_f64, |m, &(_, _, v)| m.max(v.abs()));
    let xmax = x.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let bmax = rhs.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let rmax = ax
        .iter()
        .zip(&rhs)
        .fold(0.0_f64, |m, (p, q)| m.max((p - q).abs()));
    let denom = amax * xmax + bmax;
    let residual = if denom > 0.0 { rmax / denom } else { rmax };

    let minus = (0..n).map(|i| x[lay.u(Side::Minus, i)]).collect();
    let plus = (0..n).map(|i| x[lay.u(Side::Plus, i)]).collect();
    Ok((minus, plus, residual, a.bandwidths()))
}

/// Direct solve on `n_x` nodes per piece.
pub fn direct_solve(
    section: &SectionOperator,
    geom: &CylinderGeometry,
    k: &Diffusivities,
    forcing: &ModalForcing,
    bc: &BoundaryData,
    nx: usize,
) -> Result<OracleSolution> {
    if nx < MIN_DIRECT_NX {
        return Err(Error::Resolution {
            got: nx,
            min: MIN_DIRECT_NX,
        });
    }
    let m = section.dim();
    bc.check_dim(m)?;
    if forcing.dim() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: forcing.dim(),
        });
    }
    let p1m = section.to_modal(&bc.phi1_minus);
    let p2m = section.to_modal(&bc.phi2_minus);
    let p1p = section.to_modal(&bc.phi1_plus);
    let p2p = section.to_modal(&bc.phi2_plus);
    let mut fields: [Vec<Vec<f64>>; 2] = [Vec::with_capacity(m), Vec::with_capacity(m)];
    let mut worst = 0.0_f64;
    let mut bands = (0, 0);
    for (j, &mu) in section.eigenvalues().iter().enumerate() {
        let ends = [(p1m[j], p2m[j]), (p1p[j], p2p[j])];
        let (um, up, res, bw) = solve_mode(mu, geom, k, ends, forcing, j, nx)?;
        worst = worst.max(res);
        bands = bw;
        fields[0].push(um);
        fields[1].push(up);
    }
    Ok(OracleSolution {
        geometry: *geom,
        nx,
        eigenvectors: section.eigenvectors().clone(),
        fields,
        solve_residual: worst,
        bandwidths: bands,
    })
}
