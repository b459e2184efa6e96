//! Scalar holomorphic symbols whose spectral images are the transmission
//! operators: `U = u_δ(−A)`, `V = v_δ(−A)`, `Pᵢ = k·f_{δ,i}(−A)` and the
//! determinant symbol `f`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Interval lengths and diffusivities entering the symbols.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SymbolContext {
    /// Length of the minus interval, `γ − a`.
    pub c: f64,
    /// Length of the plus interval, `b − γ`.
    pub d: f64,
    pub k_minus: f64,
    pub k_plus: f64,
}

impl SymbolContext {
    pub fn new(c: f64, d: f64, k_minus: f64, k_plus: f64) -> Result<Self> {
        for (name, v) in [("c", c), ("d", d), ("k_minus", k_minus), ("k_plus", k_plus)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        Ok(Self {
            c,
            d,
            k_minus,
            k_plus,
        })
    }
}

impl Default for SymbolContext {
    fn default() -> Self {
        Self {
            c: 1.0,
            d: 1.0,
            k_minus: 1.0,
            k_plus: 1.0,
        }
    }
}

/// `δ√z` on the principal branch; the cut `(−∞, 0]` is rejected.
fn scaled_root(delta: f64, z: Complex64) -> Result<Complex64> {
    if z.im == 0.0 && z.re <= 0.0 || !z.is_finite() {
        return Err(Error::BranchCut { re: z.re, im: z.im });
    }
    Ok(z.sqrt() * delta)
}

/// `sinh t − t` by its Taylor series, for `|t| < 1`.
fn sinh_minus_id_series(t: Complex64) -> Complex64 {
    let t2 = t * t;
    let mut term = t * t2 / 6.0;
    let mut sum = term;
    let mut k = 3.0;
    while term.norm() > 1e-18 * sum.norm() && k < 60.0 {
        term = term * t2 / ((k + 1.0) * (k + 2.0));
        sum += term;
        k += 2.0;
    }
    sum
}

/// `u_δ(z) = 1 − e^{−2δ√z} − 2δ√z·e^{−δ√z}`.
///
/// Near the origin the three terms cancel, so there it is evaluated as
/// `2e^{−t}(sinh t − t)` with a series for the bracket.
pub fn u_delta(delta: f64, z: Complex64) -> Result<Complex64> {
    let t = scaled_root(delta, z)?;
    if t.norm() < 1.0 {
        Ok(2.0 * (-t).exp() * sinh_minus_id_series(t))
    } else {
        Ok(1.0 - (-2.0 * t).exp() - 2.0 * t * (-t).exp())
    }
}

/// `v_δ(z) = 1 − e^{−2δ√z} + 2δ√z·e^{−δ√z}`.
pub fn v_delta(delta: f64, z: Complex64) -> Result<Complex64> {
    let t = scaled_root(delta, z)?;
    Ok(1.0 - (-2.0 * t).exp() + 2.0 * t * (-t).exp())
}

/// The four per-interval symbols `(f_{δ,1}, f_{δ,2}, f_{δ,3}, g_δ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Components {
    pub f1: Complex64,
    pub f2: Complex64,
    pub f3: Complex64,
    pub g: Complex64,
}

pub fn f_components(delta: f64, z: Complex64) -> Result<Components> {
    let u = u_delta(delta, z)?;
    let v = v_delta(delta, z)?;
    if u == Complex64::new(0.0, 0.0) || v == Complex64::new(0.0, 0.0) {
        return Err(Error::VanishingSymbol);
    }
    let e = (-scaled_root(delta, z)?).exp();
    let (ui, vi) = (u.inv(), v.inv());
    let plus = (1.0 + e) * (1.0 + e);
    let minus = (1.0 - e) * (1.0 - e);
    Ok(Components {
        f1: ui * plus + vi * minus,
        f2: (ui + vi) * (1.0 - e * e),
        f3: ui * minus + vi * plus,
        g: 16.0 * ui * vi * e * e,
    })
}

/// Determinant symbol `f`, with `det(Λ) = −M·f(−A)`.
pub fn f_total(ctx: &SymbolContext, z: Complex64) -> Result<Complex64> {
    let fd = f_components(ctx.d, z)?;
    let fc = f_components(ctx.c, z)?;
    let (kp, km) = (ctx.k_plus, ctx.k_minus);
    Ok(kp * kp * fd.g
        + km * km * fc.g
        + kp * km * (fd.f1 * fc.f3 + fc.f1 * fd.f3 + 2.0 * fd.f2 * fc.f2))
}

/// Normalized symbol `f̃ = f·(u_c u_d v_c v_d)² / (16 k₊k₋)`, tending to 1 at infinity.
pub fn f_tilde(ctx: &SymbolContext, z: Complex64) -> Result<Complex64> {
    let f = f_total(ctx, z)?;
    let w = u_delta(ctx.c, z)? * u_delta(ctx.d, z)? * v_delta(ctx.c, z)? * v_delta(ctx.d, z)?;
    Ok(f * w * w / (16.0 * ctx.k_plus * ctx.k_minus))
}

fn real(z: Complex64) -> f64 {
    debug_assert!(z.im.abs() <= 1e-12 * z.re.abs().max(1e-300));
    z.re
}

fn positive_real(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Real-axis shortcuts used by the operator assemblies.
pub fn u_delta_real(delta: f64, x: f64) -> Result<f64> {
    u_delta(delta, positive_real(x)).map(real)
}

pub fn v_delta_real(delta: f64, x: f64) -> Result<f64> {
    v_delta(delta, positive_real(x)).map(real)
}

pub fn f_components_real(delta: f64, x: f64) -> Result<[f64; 4]> {
    let c = f_components(delta, positive_real(x))?;
    Ok([real(c.f1), real(c.f2), real(c.f3), real(c.g)])
}

pub fn f_total_real(ctx: &SymbolContext, x: f64) -> Result<f64> {
    f_total(ctx, positive_real(x)).map(real)
}

pub fn f_tilde_real(ctx: &SymbolContext, x: f64) -> Result<f64> {
    f_tilde(ctx, positive_real(x)).map(real)
}

/// Which symbol a positivity scan evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ScanTarget {
    #[default]
    F,
    FTilde,
}

/// Result of scanning a symbol over positive reals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub min: f64,
    pub argmin: f64,
    pub grid_size: usize,
    pub all_positive: bool,
}

/// Evaluate `f` on `grid` and report its minimum.
pub fn positivity_scan(ctx: &SymbolContext, grid: &[f64]) -> Result<ScanReport> {
    scan(ctx, grid, ScanTarget::F)
}

pub fn scan(ctx: &SymbolContext, grid: &[f64], target: ScanTarget) -> Result<ScanReport> {
    if grid.is_empty() {
        return Err(Error::InvalidInput("scan grid is empty".into()));
    }
    if let Some(x) = grid.iter().find(|x| !(**x > 0.0 && x.is_finite())) {
        return Err(Error::InvalidInput(format!(
            "scan grid entries must be positive, got {x}"
        )));
    }
    let mut min = f64::INFINITY;
    let mut argmin = grid[0];
    for &x in grid {
        let v = match target {
            ScanTarget::F => f_total_real(ctx, x)?,
            ScanTarget::FTilde => f_tilde_real(ctx, x)?,
        };
        if v < min || v.is_nan() {
            min = v;
            argmin = x;
        }
    }
    Ok(ScanReport {
        min,
        argmin,
        grid_size: grid.len(),
        all_positive: min > 0.0,
    })
}

/// `n` log-spaced points from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (l0, l1) = (lo.ln(), hi.ln());
            (0..n)
                .map(|i| (l0 + (l1 - l0) * i as f64 / (n - 1) as f64).exp())
                .collect()
        }
    }
}
