//! The four subcommands. Each writes its artifacts and reports whether every check passed.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use bihtrans_core::linalg::scaled;
use bihtrans_core::oracle::{
    compare, convergence_study, direct_solve, probe_grid, RateTable, MIN_DIRECT_NX,
};
use bihtrans_core::symbols::{scan, u_delta_real, v_delta_real, ScanTarget};
use bihtrans_core::transmission::COMMUTATOR_TOL;
use bihtrans_core::{solve_transmission, Side, SolveOptions, TransmissionSolution};
use serde::Serialize;
use serde_json::json;

use crate::config::{Method, Resolved, RunConfig};
use crate::CliError;

/// Command-line overrides applied on top of the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub route: Option<bihtrans_core::RouteChoice>,
    pub nx: Option<usize>,
    pub seed: u64,
}

pub struct Context {
    pub config: RunConfig,
    pub base: PathBuf,
    pub out: PathBuf,
    pub seed: u64,
}

impl Context {
    pub fn new(config_path: &Path, overrides: Overrides) -> Result<Self, CliError> {
        let mut config = RunConfig::load(config_path)?;
        if let Some(route) = overrides.route {
            config.solver.route = route;
        }
        if let Some(nx) = overrides.nx {
            config.solver.nx = nx;
        }
        let base = config_path
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_default();
        let out = overrides
            .out
            .or_else(|| config.output.dir.as_ref().map(|d| base.join(d)))
            .unwrap_or_else(|| PathBuf::from("."));
        Ok(Self {
            config,
            base,
            out,
            seed: overrides.seed,
        })
    }

    fn resolve(&self) -> Result<Resolved, CliError> {
        self.config.resolve(&self.base, self.seed)
    }

    /// Write `bytes` to `out/name` through a temporary file in the same directory.
    fn write(&self, name: &str, bytes: &[u8]) -> Result<PathBuf, CliError> {
        fs::create_dir_all(&self.out)
            .map_err(|e| CliError::Output(format!("cannot create {}: {e}", self.out.display())))?;
        let target = self.out.join(name);
        let mut tmp = tempfile::NamedTempFile::new_in(&self.out)
            .map_err(|e| CliError::Output(format!("cannot stage {}: {e}", target.display())))?;
        tmp.write_all(bytes)
            .and_then(|_| tmp.flush())
            .map_err(|e| CliError::Output(format!("cannot write {}: {e}", target.display())))?;
        tmp.persist(&target).map_err(|e| {
            CliError::Output(format!("cannot move {} into place: {e}", target.display()))
        })?;
        Ok(target)
    }

    fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<PathBuf, CliError> {
        let mut text =
            serde_json::to_string_pretty(value).map_err(|e| CliError::Output(e.to_string()))?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckLine {
    pub name: String,
    pub value: f64,
    pub limit: f64,
    pub pass: bool,
}

fn at_most(name: &str, value: f64, limit: f64) -> CheckLine {
    CheckLine {
        name: name.into(),
        value,
        limit,
        pass: value <= limit,
    }
}

fn at_least(name: &str, value: f64, limit: f64) -> CheckLine {
    CheckLine {
        name: name.into(),
        value,
        limit,
        pass: value >= limit,
    }
}

fn solution_csv(
    sol: &TransmissionSolution,
    probes: usize,
    max_order: usize,
) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| CliError::Output(e.to_string());
    w.write_record(["side", "x", "index", "value", "order"])
        .map_err(io)?;
    for (side, x) in probe_grid(&sol.geometry, probes) {
        for order in 0..=max_order.min(3) {
            let u = sol.side(side).evaluate(order, x)?;
            for (i, v) in u.iter().enumerate() {
                w.write_record([
                    side.as_str().to_string(),
                    format!("{x:.17e}"),
                    i.to_string(),
                    format!("{v:.17e}"),
                    order.to_string(),
                ])
                .map_err(io)?;
            }
        }
    }
    w.into_inner().map_err(|e| CliError::Output(e.to_string()))
}

fn psi_json(sol: &TransmissionSolution) -> serde_json::Value {
    json!({
        "route": sol.interface.route.to_string(),
        "psi1": sol.interface.psi1.as_slice(),
        "psi2": sol.interface.psi2.as_slice(),
    })
}

pub fn solve(ctx: &Context) -> Result<bool, CliError> {
    let r = ctx.resolve()?;
    let sol = solve_transmission(&r.problem, r.options)?;
    let solver = ctx.config.solver;
    ctx.write(
        "solution.csv",
        &solution_csv(&sol, solver.probes, solver.max_order)?,
    )?;
    ctx.write_json("residuals.json", &sol.report)?;
    let violations = sol.violations();
    let exact_error = match &r.exact {
        Some(case) => Some(compare(&sol, case, solver.probes)?.sup),
        None => None,
    };
    let summary = json!({
        "interface": psi_json(&sol),
        "nx": r.options.nx,
        "budgets": sol.budgets,
        "violations": violations,
        "within_budget": violations.is_empty(),
        "exact_error": exact_error,
    });
    ctx.write_json("summary.json", &summary)?;
    println!(
        "route {} | route_gap {:.3e} | det_gap {:.3e}",
        sol.interface.route, sol.report.route_gap, sol.report.det_gap
    );
    if let Some(e) = exact_error {
        println!("max |u - exact| = {e:.3e}");
    }
    for v in &violations {
        eprintln!("budget exceeded: {v}");
    }
    Ok(violations.is_empty())
}

fn spectral_mapping_gap(sol: &TransmissionSolution) -> Result<f64, CliError> {
    let ops = &sol.operators;
    let section = ops.generator().section();
    let mut worst = 0.0_f64;
    for (side, delta) in [
        (Side::Minus, sol.geometry.c()),
        (Side::Plus, sol.geometry.d()),
    ] {
        let (so, _) = ops.side(side);
        let u = section
            .apply_function(|mu| u_delta_real(delta, -mu).unwrap_or(f64::NAN))?
            .into_matrix();
        let v = section
            .apply_function(|mu| v_delta_real(delta, -mu).unwrap_or(f64::NAN))?
            .into_matrix();
        worst = worst
            .max(scaled((&so.u - &u).norm(), u.norm()))
            .max(scaled((&so.v - &v).norm(), v.norm()));
    }
    Ok(worst)
}

fn rate_check(name: &str, table: &RateTable) -> CheckLine {
    match table.fitted_rate {
        Some(rate) => at_least(name, rate, 1.8),
        None => CheckLine {
            name: format!("{name} (floor)"),
            value: table.rows.iter().map(|r| r.error).fold(0.0, f64::max),
            limit: bihtrans_core::oracle::FLOOR,
            pass: table.floor,
        },
    }
}

pub fn verify(ctx: &Context) -> Result<bool, CliError> {
    let r = ctx.resolve()?;
    let sol = solve_transmission(&r.problem, r.options)?;
    let ops = &sol.operators;
    let mut checks = vec![
        CheckLine {
            name: "residual budgets".into(),
            value: sol.violations().len() as f64,
            limit: 0.0,
            pass: sol.within_budget(),
        },
        at_most("route_gap", sol.report.route_gap, 1e-10),
        at_most("det_gap", sol.report.det_gap, 1e-10),
        at_most("cofactor", ops.cofactor_gap(), 1e-10),
        at_most(
            "block_identity_minus",
            ops.block_identity_gap(Side::Minus),
            1e-10,
        ),
        at_most(
            "block_identity_plus",
            ops.block_identity_gap(Side::Plus),
            1e-10,
        ),
        at_most("commutators", ops.commutator_gap(), COMMUTATOR_TOL),
        at_most("spectral_mapping", spectral_mapping_gap(&sol)?, 1e-11),
    ];
    for c in [
        sol.report.cond_u_minus,
        sol.report.cond_u_plus,
        sol.report.cond_v_minus,
        sol.report.cond_v_plus,
        sol.report.cond_lambda,
    ] {
        if !c.is_finite() {
            checks.push(at_most("condition", c, f64::MAX));
        }
    }

    let levels = &ctx.config.convergence.levels;
    let p = &r.problem;
    let at = |n: usize| SolveOptions { nx: n, ..r.options };
    let oracle_levels: Vec<usize> = levels.iter().map(|&n| n.max(MIN_DIRECT_NX)).collect();
    let gap = convergence_study(&oracle_levels, |n| {
        let rep = solve_transmission(p, at(n))?;
        let dir = direct_solve(
            &p.section,
            &p.geometry,
            &p.diffusivities,
            &p.forcing,
            &p.boundary,
            n,
        )?;
        Ok(compare(&rep, &dir, 65)?.sup)
    })?;
    checks.push(rate_check("oracle_gap_rate", &gap));
    let mut tables = vec![("oracle_gap", gap)];
    if let Some(case) = &r.exact {
        let table = convergence_study(levels, |n| {
            Ok(compare(&solve_transmission(p, at(n))?, case, 65)?.sup)
        })?;
        checks.push(rate_check("exact_error_rate", &table));
        tables.push(("exact_error", table));
    }

    let pass = checks.iter().all(|c| c.pass);
    let report = json!({
        "checks": checks,
        "rates": tables.iter().map(|(n, t)| (n.to_string(), t)).collect::<std::collections::BTreeMap<_, _>>(),
        "residuals": sol.report,
        "interface": psi_json(&sol),
        "pass": pass,
    });
    ctx.write_json("verify.json", &report)?;
    for c in &checks {
        println!(
            "{} {:<22} {:.3e} (limit {:.1e})",
            if c.pass { "PASS" } else { "FAIL" },
            c.name,
            c.value,
            c.limit
        );
    }
    Ok(pass)
}

pub fn scan_symbols(ctx: &Context) -> Result<bool, CliError> {
    let sym = ctx.config.symbol_context()?;
    let grid = ctx.config.scan.points();
    let f = scan(&sym, &grid, ScanTarget::F)?;
    let ft = scan(&sym, &grid, ScanTarget::FTilde)?;
    ctx.write_json(
        "scan.json",
        &json!({ "f": f, "f_tilde": ft, "context": sym }),
    )?;
    println!(
        "f: min {:.6e} at x = {:.3e} over {} points; all positive: {}",
        f.min, f.argmin, f.grid_size, f.all_positive
    );
    Ok(f.all_positive)
}

pub fn convergence(ctx: &Context) -> Result<bool, CliError> {
    let r = ctx.resolve()?;
    let Some(case) = &r.exact else {
        return Err(CliError::Config(
            "convergence needs a manufactured forcing with a closed-form solution".into(),
        ));
    };
    let study = &ctx.config.convergence;
    if study.levels.len() < bihtrans_core::oracle::MIN_LEVELS {
        return Err(CliError::Config(format!(
            "convergence.levels needs at least {} entries, got {}",
            bihtrans_core::oracle::MIN_LEVELS,
            study.levels.len()
        )));
    }
    let p = &r.problem;
    let table = convergence_study(&study.levels, |n| match study.method {
        Method::Representation => Ok(compare(
            &solve_transmission(p, SolveOptions { nx: n, ..r.options })?,
            case,
            65,
        )?
        .sup),
        Method::Direct => Ok(compare(
            &direct_solve(
                &p.section,
                &p.geometry,
                &p.diffusivities,
                &p.forcing,
                &p.boundary,
                n,
            )?,
            case,
            65,
        )?
        .sup),
    })?;
    let mut buf = Vec::new();
    table.write_csv(&mut buf)?;
    ctx.write("rates.csv", &buf)?;
    match table.fitted_rate {
        Some(rate) => println!("fitted rate {rate:.3}"),
        None => println!(
            "errors at floor (max {:.3e})",
            table.rows.iter().map(|r| r.error).fold(0.0, f64::max)
        ),
    }
    Ok(true)
}
