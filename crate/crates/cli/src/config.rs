//! TOML run configuration and its translation into solver inputs.

use std::fs;
use std::path::{Path, PathBuf};

use bihtrans_core::oracle::{manufactured_forced, manufactured_homogeneous, ExactCase, Polynomial};
use bihtrans_core::symbols::log_grid;
use bihtrans_core::{
    BoundaryData, CylinderGeometry, Diffusivities, ModalForcing, RouteChoice, SectionOperator,
    Side, SolveOptions, SourceConvention, SymbolContext, TransmissionProblem,
};
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub section: SectionSpec,
    pub geometry: GeometrySpec,
    pub diffusivities: DiffusivitySpec,
    #[serde(default)]
    pub forcing: ForcingSpec,
    #[serde(default)]
    pub boundary: BoundarySpec,
    #[serde(default)]
    pub solver: SolverSpec,
    #[serde(default)]
    pub scan: ScanSpec,
    #[serde(default)]
    pub convergence: ConvergenceSpec,
    #[serde(default)]
    pub output: OutputSpec,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SectionSpec {
    #[serde(rename = "laplacian-1d")]
    Laplacian1d {
        m: usize,
        #[serde(default = "unit")]
        length: f64,
    },
    MatrixFile {
        path: PathBuf,
    },
}

fn unit() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometrySpec {
    pub a: f64,
    pub gamma: f64,
    pub b: f64,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiffusivitySpec {
    pub k_minus: f64,
    pub k_plus: f64,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ForcingSpec {
    #[default]
    Zero,
    Sine {
        side: Side,
        k: u32,
    },
    Csv {
        path: PathBuf,
    },
    Manufactured(ManufacturedSpec),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "case", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ManufacturedSpec {
    Homogeneous {
        mode: usize,
        a1: f64,
        a2: f64,
    },
    Forced {
        mode: usize,
        /// Coefficients of `r(x)` in increasing degree.
        profile: Vec<f64>,
        #[serde(default)]
        psi1: f64,
        #[serde(default)]
        psi2: f64,
    },
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum BoundarySpec {
    #[default]
    Zero,
    Explicit {
        phi1_minus: Vec<f64>,
        phi2_minus: Vec<f64>,
        phi1_plus: Vec<f64>,
        phi2_plus: Vec<f64>,
    },
    /// Uniform random entries in `[-1, 1)` drawn from `--seed`.
    Random,
    /// Read off the manufactured case in `[forcing]`.
    FromExactCase,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSpec {
    pub route: RouteChoice,
    pub nx: usize,
    pub probes: usize,
    pub convention: SourceConvention,
    pub max_order: usize,
}

impl Default for SolverSpec {
    fn default() -> Self {
        let opts = SolveOptions::default();
        Self {
            route: opts.route,
            nx: opts.nx,
            probes: 33,
            convention: opts.convention,
            max_order: 1,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanSpec {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
    /// Explicit grid; replaces `lo`, `hi`, `n` when present.
    pub grid: Option<Vec<f64>>,
}

impl Default for ScanSpec {
    fn default() -> Self {
        Self {
            lo: 1e-6,
            hi: 1e6,
            n: 241,
            grid: None,
        }
    }
}

impl ScanSpec {
    pub fn points(&self) -> Vec<f64> {
        match &self.grid {
            Some(g) => g.clone(),
            None => log_grid(self.lo, self.hi, self.n),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Representation,
    Direct,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConvergenceSpec {
    pub method: Method,
    pub levels: Vec<usize>,
}

impl Default for ConvergenceSpec {
    fn default() -> Self {
        Self {
            method: Method::Representation,
            levels: vec![65, 129, 257],
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSpec {
    pub dir: Option<PathBuf>,
}

/// Everything a command needs, resolved against the config file's directory.
pub struct Resolved {
    pub problem: TransmissionProblem,
    pub exact: Option<ExactCase>,
    pub options: SolveOptions,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn geometry(&self) -> Result<CylinderGeometry, CliError> {
        let g = self.geometry;
        Ok(CylinderGeometry::new(g.a, g.gamma, g.b)?)
    }

    pub fn diffusivities(&self) -> Result<Diffusivities, CliError> {
        Ok(Diffusivities::new(
            self.diffusivities.k_minus,
            self.diffusivities.k_plus,
        )?)
    }

    pub fn symbol_context(&self) -> Result<SymbolContext, CliError> {
        let g = self.geometry()?;
        let k = self.diffusivities()?;
        Ok(SymbolContext::new(g.c(), g.d(), k.k_minus, k.k_plus)?)
    }

    pub fn section(&self, base: &Path) -> Result<SectionOperator, CliError> {
        match &self.section {
            SectionSpec::Laplacian1d { m, length } => {
                Ok(SectionOperator::dirichlet_laplacian_1d(*m, *length)?)
            }
            SectionSpec::MatrixFile { path } => {
                Ok(SectionOperator::from_matrix_file(base.join(path))?)
            }
        }
    }

    pub fn options(&self) -> SolveOptions {
        SolveOptions {
            route: self.solver.route,
            nx: self.solver.nx,
            convention: self.solver.convention,
        }
    }

    pub fn resolve(&self, base: &Path, seed: u64) -> Result<Resolved, CliError> {
        let section = self.section(base)?;
        let geom = self.geometry()?;
        let k = self.diffusivities()?;
        let m = section.dim();
        let exact = match &self.forcing {
            ForcingSpec::Manufactured(ManufacturedSpec::Homogeneous { mode, a1, a2 }) => Some(
                manufactured_homogeneous(&section, &geom, k, *mode, *a1, *a2)?,
            ),
            ForcingSpec::Manufactured(ManufacturedSpec::Forced {
                mode,
                profile,
                psi1,
                psi2,
            }) => Some(manufactured_forced(
                &section,
                &geom,
                k,
                *mode,
                &Polynomial::new(profile.clone()),
                *psi1,
                *psi2,
            )?),
            _ => None,
        };
        let forcing = match &self.forcing {
            ForcingSpec::Zero => ModalForcing::zero(m),
            ForcingSpec::Sine { side, k } => ModalForcing::sine(&section, &geom, *side, *k)?,
            ForcingSpec::Csv { path } => {
                let p = base.join(path);
                let file = fs::File::open(&p).map_err(|e| {
                    CliError::Config(format!("cannot read forcing {}: {e}", p.display()))
                })?;
                ModalForcing::from_csv(file, m, &geom)?
            }
            ForcingSpec::Manufactured(_) => exact
                .as_ref()
                .map(|c| c.forcing.clone())
                .unwrap_or_else(|| ModalForcing::zero(m)),
        };
        let boundary = match &self.boundary {
            BoundarySpec::Zero => BoundaryData::zeros(m),
            BoundarySpec::Explicit {
                phi1_minus,
                phi2_minus,
                phi1_plus,
                phi2_plus,
            } => {
                let v = |x: &Vec<f64>, name: &str| {
                    if x.len() == m {
                        Ok(DVector::from_column_slice(x))
                    } else {
                        Err(CliError::Config(format!(
                            "boundary.{name} has {} entries, expected {m}",
                            x.len()
                        )))
                    }
                };
                BoundaryData::new(
                    v(phi1_minus, "phi1_minus")?,
                    v(phi2_minus, "phi2_minus")?,
                    v(phi1_plus, "phi1_plus")?,
                    v(phi2_plus, "phi2_plus")?,
                )?
            }
            BoundarySpec::Random => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let mut v = || DVector::from_fn(m, |_, _| rng.gen_range(-1.0..1.0));
                BoundaryData::new(v(), v(), v(), v())?
            }
            BoundarySpec::FromExactCase => match &exact {
                Some(case) => case.boundary.clone(),
                None => {
                    return Err(CliError::Config(
                        "boundary kind from-exact-case needs a manufactured forcing".into(),
                    ))
                }
            },
        };
        let problem = TransmissionProblem::new(section, geom, k, forcing, boundary)?;
        Ok(Resolved {
            problem,
            exact,
            options: self.options(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_uses_defaults() {
        let cfg: RunConfig = toml::from_str(
            r#"
            [section]
            kind = "laplacian-1d"
            m = 3
            [geometry]
            a = -1.0
            gamma = 0.0
            b = 1.0
            [diffusivities]
            k_minus = 1.0
            k_plus = 2.0
            "#,
        )
        .unwrap();
        assert!(matches!(cfg.forcing, ForcingSpec::Zero));
        assert!(matches!(cfg.boundary, BoundarySpec::Zero));
        assert_eq!(cfg.solver.nx, 129);
        assert_eq!(cfg.scan.points().len(), 241);
        let r = cfg.resolve(Path::new("."), 0).unwrap();
        assert_eq!(r.problem.section.dim(), 3);
    }

    #[test]
    fn manufactured_forcing_parses() {
        let cfg: RunConfig = toml::from_str(
            r#"
            [section]
            kind = "laplacian-1d"
            m = 2
            [geometry]
            a = 0.0
            gamma = 0.5
            b = 1.5
            [diffusivities]
            k_minus = 1.0
            k_plus = 3.0
            [forcing]
            kind = "manufactured"
            case = "forced"
            mode = 1
            profile = [1.0, 0.0, 0.5]
            psi1 = 0.2
            [boundary]
            kind = "from-exact-case"
            [solver]
            route = "calculus"
            nx = 65
            "#,
        )
        .unwrap();
        let r = cfg.resolve(Path::new("."), 0).unwrap();
        assert!(r.exact.is_some());
        assert_eq!(r.options.route, RouteChoice::Calculus);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let r: Result<RunConfig, _> = toml::from_str(
            r#"
            [section]
            kind = "laplacian-1d"
            m = 2
            colour = "blue"
            [geometry]
            a = 0.0
            gamma = 0.5
            b = 1.5
            [diffusivities]
            k_minus = 1.0
            k_plus = 3.0
            "#,
        );
        assert!(r.is_err());
    }
}
