//! Operator-semigroup solver for the biharmonic transmission problem on a
//! two-piece cylinder `(a, γ) ∪ (γ, b)` with a finite-dimensional section
//! operator, plus an independent finite-difference oracle.

pub mod error;
pub mod forcing;
pub mod linalg;
pub mod oracle;
pub mod problem;
pub mod residual;
pub mod section;
pub mod subproblem;
pub mod symbols;
pub mod transmission;

pub use error::{Error, Result};
pub use forcing::ModalForcing;
pub use problem::{BoundaryData, CylinderGeometry, Diffusivities, Side};
pub use residual::{Budgets, ResidualReport};
pub use section::{GeneratorM, OperatorMatrix, Provenance, SectionOperator};
pub use subproblem::{ParticularSolution, SubproblemSolution};
pub use symbols::{ScanReport, SymbolContext};
pub use transmission::{
    solve_transmission, InterfaceData, Route, RouteChoice, SolveOptions, SourceConvention,
    TransmissionOperators, TransmissionProblem, TransmissionSolution,
};
