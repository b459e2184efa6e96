//! Shared fixtures for the benchmarks.

use bihtrans_core::{
    BoundaryData, CylinderGeometry, Diffusivities, ModalForcing, SectionOperator, Side,
    TransmissionProblem,
};
use nalgebra::DVector;

/// Discrete Laplacian section of size `m` with sine forcing on both pieces and smooth boundary data.
pub fn fixture(m: usize) -> TransmissionProblem {
    let section = SectionOperator::dirichlet_laplacian_1d(m, 1.0).expect("laplacian section");
    let geometry = CylinderGeometry::new(-1.0, 0.0, 1.5).expect("geometry");
    let k = Diffusivities::new(1.0, 3.0).expect("diffusivities");
    let minus = ModalForcing::sine(&section, &geometry, Side::Minus, 1).expect("forcing");
    let plus = ModalForcing::sine(&section, &geometry, Side::Plus, 2).expect("forcing");
    let forcing = ModalForcing::combine(0.5, &minus, 0.5, &plus).expect("forcing");
    let wave = |phase: f64| DVector::from_fn(m, |i, _| (phase + i as f64).sin() / (1.0 + i as f64));
    let boundary = BoundaryData::new(wave(0.1), wave(0.7), wave(1.3), wave(2.1)).expect("boundary");
    TransmissionProblem::new(section, geometry, k, forcing, boundary).expect("problem")
}
