use bihtrans_core::linalg::sup_norm;
use bihtrans_core::subproblem::ParticularTraces;
use bihtrans_core::transmission::{
    assemble_sources, leading_order_interface, InterfaceSources, TransmissionOperators,
};
use bihtrans_core::*;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_boundary(rng: &mut ChaCha8Rng, m: usize) -> BoundaryData {
    let mut v = || DVector::from_fn(m, |_, _| rng.gen_range(-1.0..1.0));
    BoundaryData::new(v(), v(), v(), v()).unwrap()
}

fn problem(
    m: usize,
    geom: CylinderGeometry,
    k: Diffusivities,
    forcing: Option<(u32, u32)>,
    bc: BoundaryData,
) -> TransmissionProblem {
    let section = SectionOperator::dirichlet_laplacian_1d(m, 1.0).unwrap();
    let forcing = match forcing {
        Some((km, kp)) => {
            let a = ModalForcing::sine(&section, &geom, Side::Minus, km).unwrap();
            let b = ModalForcing::sine(&section, &geom, Side::Plus, kp).unwrap();
            ModalForcing::combine(1.0, &a, 0.5, &b).unwrap()
        }
        None => ModalForcing::zero(m),
    };
    TransmissionProblem::new(section, geom, k, forcing, bc).unwrap()
}

#[test]
fn random_forced_case_meets_budgets() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let geom = CylinderGeometry::from_lengths(0.7, 1.3).unwrap();
    let k = Diffusivities::new(1.0, 3.0).unwrap();
    for _ in 0..3 {
        let bc = random_boundary(&mut rng, 8);
        let p = problem(
            8,
            geom,
            k,
            Some((rng.gen_range(1..4), rng.gen_range(1..4))),
            bc,
        );
        let sol = solve_transmission(&p, SolveOptions::default()).unwrap();
        assert!(sol.within_budget(), "{:?}", sol.violations());
        assert!(sol.report.route_gap <= 1e-10);
        for c in [
            sol.report.cond_u_minus,
            sol.report.cond_v_plus,
            sol.report.cond_lambda,
        ] {
            assert!(c.is_finite() && c >= 1.0);
        }
    }
}

#[test]
fn calculus_route_can_drive_reconstruction() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let p = problem(
        5,
        CylinderGeometry::from_lengths(1.0, 0.4).unwrap(),
        Diffusivities::new(2.0, 0.5).unwrap(),
        Some((2, 1)),
        random_boundary(&mut rng, 5),
    );
    let block = solve_transmission(
        &p,
        SolveOptions {
            route: RouteChoice::Block,
            ..Default::default()
        },
    )
    .unwrap();
    let calc = solve_transmission(
        &p,
        SolveOptions {
            route: RouteChoice::Calculus,
            ..Default::default()
        },
    )
    .unwrap();
    assert_eq!(calc.interface.route, Route::Calculus);
    assert_eq!(block.interface.route, Route::Block);
    assert!(calc.interface.relative_gap(&block.interface) <= 1e-10);
    assert!(calc.within_budget(), "{:?}", calc.violations());
}

#[test]
fn symmetric_data_silences_the_second_source() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let base = random_boundary(&mut rng, 4);
    let geom = CylinderGeometry::from_lengths(1.2, 1.2).unwrap();
    let k = Diffusivities::new(1.5, 1.5).unwrap();

    let even = solve_transmission(
        &problem(4, geom, k, None, base.add(&base.mirrored())),
        SolveOptions::default(),
    )
    .unwrap();
    assert!(sup_norm(&even.sources.s2) <= 1e-13 * sup_norm(&even.sources.s1));
    assert!(sup_norm(&even.interface.psi2) <= 1e-10 * sup_norm(&even.interface.psi1));

    let odd = solve_transmission(
        &problem(4, geom, k, None, base.add(&base.mirrored().scaled(-1.0))),
        SolveOptions::default(),
    )
    .unwrap();
    assert!(sup_norm(&odd.sources.s1) <= 1e-13 * sup_norm(&odd.sources.s2));
    assert!(sup_norm(&odd.interface.psi1) <= 1e-10 * sup_norm(&odd.interface.psi2));
}

#[test]
fn zero_inputs_give_zero_sources() {
    let s = SectionOperator::dirichlet_laplacian_1d(3, 1.0).unwrap();
    let g = CylinderGeometry::from_lengths(0.5, 2.0).unwrap();
    let ops = TransmissionOperators::assemble(
        &s.square_root_generator(),
        &g,
        Diffusivities::new(1.0, 2.0).unwrap(),
    )
    .unwrap();
    let z: [DVector<f64>; 4] = std::array::from_fn(|_| DVector::zeros(3));
    let t = ParticularTraces::zeros(3);
    let src = assemble_sources(&ops, &z, &z, &t, &t, SourceConvention::Printed);
    for v in [&src.s1, &src.s2, &src.s_check] {
        assert!(v.iter().all(|&x| x == 0.0));
    }
}

#[test]
fn alternative_convention_breaks_the_flux_condition() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let p = problem(
        3,
        CylinderGeometry::from_lengths(0.7, 1.3).unwrap(),
        Diffusivities::new(1.0, 3.0).unwrap(),
        Some((1, 2)),
        random_boundary(&mut rng, 3),
    );
    let printed = solve_transmission(&p, SolveOptions::default()).unwrap();
    let alt = solve_transmission(
        &p,
        SolveOptions {
            convention: SourceConvention::HalfPositive,
            ..Default::default()
        },
    )
    .unwrap();
    assert!(printed.report.tc2_flux3.max(printed.report.tc2_flux2) <= 1e-9);
    assert!(alt.report.tc2_flux3.max(alt.report.tc2_flux2) > 1e-6);
    assert!(!alt.within_budget());
}

#[test]
fn leading_order_matches_on_long_pieces() {
    let s = SectionOperator::from_matrix(DMatrix::from_element(1, 1, -1.0)).unwrap();
    let g = CylinderGeometry::from_lengths(40.0, 40.0).unwrap();
    let k = Diffusivities::new(0.5, 2.0).unwrap();
    let ops = TransmissionOperators::assemble(&s.square_root_generator(), &g, k).unwrap();
    let src = InterfaceSources {
        s1: DVector::from_element(1, 0.7),
        s2: DVector::from_element(1, -1.1),
        s_check: DVector::zeros(1),
    };
    let exact = bihtrans_core::transmission::solve_interface_block(&ops, &src).unwrap();
    let (l1, l2) = leading_order_interface(&src, ops.generator(), &k);
    assert!((exact.psi1[0] - l1[0]).abs() < 1e-14);
    assert!((exact.psi2[0] - l2[0]).abs() < 1e-14);
}

#[test]
fn perturbation_moves_only_one_side() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let p = problem(
        3,
        CylinderGeometry::from_lengths(0.7, 1.3).unwrap(),
        Diffusivities::new(1.0, 3.0).unwrap(),
        None,
        random_boundary(&mut rng, 3),
    );
    let sol = solve_transmission(&p, SolveOptions::default()).unwrap();
    let e1 = DVector::from_vec(vec![1e-3, -2e-3, 5e-4]);
    let e2 = DVector::from_vec(vec![0.0, 4e-3, -1e-3]);
    let pert = sol.perturbed(Side::Plus, &e1, &e2).unwrap();
    assert!((pert.fields.tc1[0].raw - 2e-3).abs() < 1e-12);
    assert!((pert.fields.tc1[1].raw - 4e-3).abs() < 1e-12);
    let x = -0.3;
    assert_eq!(pert.evaluate(0, x).unwrap(), sol.evaluate(0, x).unwrap());
    assert!(pert.report.bc_3 <= 1e-9 && pert.report.bc_4 <= 1e-9);
}

#[test]
fn report_serializes_with_fixed_keys() {
    let p = problem(
        2,
        CylinderGeometry::from_lengths(1.0, 1.0).unwrap(),
        Diffusivities::new(1.0, 1.0).unwrap(),
        None,
        BoundaryData::zeros(2),
    );
    let sol = solve_transmission(&p, SolveOptions::default()).unwrap();
    let json = serde_json::to_value(&sol.report).unwrap();
    let keys = [
        "eq_minus",
        "eq_plus",
        "bc_1",
        "bc_2",
        "bc_3",
        "bc_4",
        "tc1_u",
        "tc1_du",
        "tc2_flux2",
        "tc2_flux3",
        "route_gap",
        "cond_Uminus",
        "cond_Uplus",
        "cond_Vminus",
        "cond_Vplus",
        "cond_Lambda",
        "det_gap",
    ];
    for key in keys {
        assert!(json.get(key).is_some(), "missing {key}");
    }
    assert_eq!(json["bc_1"], 0.0);
}
