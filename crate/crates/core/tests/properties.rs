use bihtrans_core::linalg::{commutator_gap, op_norm, scaled, sup_norm};
use bihtrans_core::subproblem::SideOperators;
use bihtrans_core::symbols::{
    f_components_real, f_tilde_real, f_total_real, u_delta_real, v_delta_real,
};
use bihtrans_core::transmission::{
    solve_interface_block, solve_interface_calculus, InterfaceSources, TransmissionOperators,
};
use bihtrans_core::*;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn negative_definite(m: usize) -> impl Strategy<Value = DMatrix<f64>> {
    (
        prop::collection::vec(0.05f64..60.0, m),
        prop::collection::vec(-1.0f64..1.0, m * m),
    )
        .prop_map(move |(lams, entries)| {
            let raw = DMatrix::from_vec(m, m, entries) + DMatrix::identity(m, m) * 3.0;
            let q = raw.qr().q();
            let a = &q * DMatrix::from_diagonal(&DVector::from_vec(lams)) * q.transpose();
            -(&a + a.transpose()) * 0.5
        })
}

// Assembling `U = I − e^{2δM} + 2δMe^{δM}` from semigroup matrices cancels to
// relative accuracy about ε/(δ√−μ)³, amplified by cond(U) through the inverses;
// the spectral-mapping comparison is held at 1e-11 where δ√−μ ≥ 0.35.
fn separated_section(m: usize) -> impl Strategy<Value = SectionOperator> {
    (
        prop::collection::vec(0.5f64..60.0, m),
        prop::collection::vec(-1.0f64..1.0, m * m),
    )
        .prop_map(move |(lams, entries)| {
            let raw = DMatrix::from_vec(m, m, entries) + DMatrix::identity(m, m) * 3.0;
            let q = raw.qr().q();
            let a = &q * DMatrix::from_diagonal(&DVector::from_vec(lams)) * q.transpose();
            SectionOperator::from_matrix(-(&a + a.transpose()) * 0.5).unwrap()
        })
}

fn section(m: usize) -> impl Strategy<Value = SectionOperator> {
    negative_definite(m).prop_map(|a| SectionOperator::from_matrix(a).unwrap())
}

fn vector(m: usize) -> impl Strategy<Value = DVector<f64>> {
    prop::collection::vec(-2.0f64..2.0, m).prop_map(DVector::from_vec)
}

fn boundary(m: usize) -> impl Strategy<Value = BoundaryData> {
    (vector(m), vector(m), vector(m), vector(m))
        .prop_map(|(a, b, c, d)| BoundaryData::new(a, b, c, d).unwrap())
}

fn params() -> impl Strategy<Value = (f64, f64, f64, f64)> {
    (0.2f64..3.0, 0.2f64..3.0, 0.1f64..10.0, 0.1f64..10.0)
}

fn solve(
    s: &SectionOperator,
    (c, d, km, kp): (f64, f64, f64, f64),
    f: ModalForcing,
    bc: BoundaryData,
) -> TransmissionSolution {
    let g = CylinderGeometry::from_lengths(c, d).unwrap();
    let k = Diffusivities::new(km, kp).unwrap();
    let p = TransmissionProblem::new(s.clone(), g, k, f, bc).unwrap();
    solve_transmission(
        &p,
        SolveOptions {
            nx: 33,
            ..Default::default()
        },
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn decomposition_reconstructs_and_is_negative(a in (1usize..7).prop_flat_map(negative_definite)) {
        let s = SectionOperator::from_matrix(a.clone()).unwrap();
        prop_assert!(s.eigenvalues().iter().all(|&mu| mu < 0.0));
        prop_assert!(s.eigenvalues().windows(2).all(|w| w[0] <= w[1]));
        let q = s.eigenvectors();
        let back = q * DMatrix::from_diagonal(&DVector::from_column_slice(s.eigenvalues())) * q.transpose();
        prop_assert!(op_norm(&(back - &a)) <= 1e-10 * op_norm(&a));
    }

    #[test]
    fn generator_squares_to_minus_section(s in (1usize..7).prop_flat_map(section)) {
        let m = s.square_root_generator().matrix().into_matrix();
        let a = s.matrix();
        prop_assert!(op_norm(&(&m * &m + a)) <= 1e-10 * op_norm(a));
    }

    #[test]
    fn semigroup_contracts_and_decays(s in (1usize..7).prop_flat_map(section), t1 in 0.0f64..5.0, dt in 0.0f64..5.0) {
        let g = s.square_root_generator();
        let n1 = g.semigroup(t1).unwrap().op_norm();
        let n2 = g.semigroup(t1 + dt).unwrap().op_norm();
        prop_assert!(n1 <= 1.0 + 1e-14);
        prop_assert!(n2 <= n1 + 1e-14);
    }

    #[test]
    fn functional_calculus_commutes(s in (2usize..7).prop_flat_map(section), p in 0.1f64..3.0) {
        let f = s.apply_function(|mu| (-mu).sqrt().sin() + p).unwrap().into_matrix();
        let g = s.apply_function(|mu| (p * mu).exp() / (1.0 - mu)).unwrap().into_matrix();
        prop_assert!(commutator_gap(&f, &g) <= 1e-11);
    }

    #[test]
    fn scalar_determinant_identity(delta in 0.01f64..20.0, x in 1e-4f64..400.0) {
        let [f1, f2, f3, g] = f_components_real(delta, x).unwrap();
        prop_assert!((f1 * f3 - f2 * f2 - g).abs() <= 1e-10 * (f1 * f3).abs().max(g.abs()));
    }

    #[test]
    fn symbols_are_positive((c, d, km, kp) in params(), lx in -6.0f64..6.0) {
        let x = 10f64.powf(lx);
        prop_assert!(u_delta_real(c, x).unwrap() > 0.0);
        prop_assert!(v_delta_real(d, x).unwrap() > 0.0);
        let ctx = SymbolContext::new(c, d, km, kp).unwrap();
        prop_assert!(f_total_real(&ctx, x).unwrap() > 0.0);
    }

    #[test]
    fn normalized_symbol_tends_to_one((c, d, km, kp) in params()) {
        let ctx = SymbolContext::new(c, d, km, kp).unwrap();
        let gaps: Vec<f64> = [400.0, 1600.0, 6400.0, 25600.0]
            .iter()
            .map(|&x| (1.0 - f_tilde_real(&ctx, x).unwrap()).abs())
            .collect();
        prop_assert!(gaps.windows(2).all(|w| w[1] <= w[0]));
        prop_assert!(gaps[3] < 1e-6);
    }

    #[test]
    fn semigroup_blocks_match_symbols(
        s in (1usize..6).prop_flat_map(separated_section),
        (c, d, km, kp) in (0.5f64..3.0, 0.5f64..3.0, 0.1f64..10.0, 0.1f64..10.0),
    ) {
        let g = CylinderGeometry::from_lengths(c, d).unwrap();
        let k = Diffusivities::new(km, kp).unwrap();
        let ops = TransmissionOperators::assemble(&s.square_root_generator(), &g, k).unwrap();
        for (side, delta, kk) in [(Side::Minus, c, km), (Side::Plus, d, kp)] {
            let (so, p): (&SideOperators, _) = ops.side(side);
            let u = s.apply_function(|mu| u_delta_real(delta, -mu).unwrap()).unwrap().into_matrix();
            let v = s.apply_function(|mu| v_delta_real(delta, -mu).unwrap()).unwrap().into_matrix();
            prop_assert!(scaled((&so.u - &u).norm(), u.norm()) <= 1e-11);
            prop_assert!(scaled((&so.v - &v).norm(), v.norm()) <= 1e-11);
            for (i, pi) in p.iter().enumerate() {
                let sym = s.apply_function(|mu| kk * f_components_real(delta, -mu).unwrap()[i]).unwrap().into_matrix();
                prop_assert!(scaled((pi - &sym).norm(), sym.norm()) <= 1e-11);
            }
            prop_assert!(ops.block_identity_gap(side) <= 1e-10);
        }
        let f = s.apply_function(|mu| f_total_real(&ops.symbol_context(), -mu).unwrap()).unwrap().into_matrix();
        prop_assert!(scaled((ops.f_of_minus_a() - &f).norm(), f.norm()) <= 1e-11);
        prop_assert!(ops.determinant_gap().unwrap() <= 1e-10);
        prop_assert!(ops.cofactor_gap() <= 1e-10);
        prop_assert!(ops.normalized_symbol_gap().unwrap() <= 1e-10);
    }

    #[test]
    fn interface_routes_agree(
        (s, s1, s2) in (1usize..7).prop_flat_map(|m| (section(m), vector(m), vector(m))),
        (c, d, km, kp) in params(),
    ) {
        let g = CylinderGeometry::from_lengths(c, d).unwrap();
        let k = Diffusivities::new(km, kp).unwrap();
        let ops = TransmissionOperators::assemble(&s.square_root_generator(), &g, k).unwrap();
        let src = InterfaceSources { s_check: DVector::zeros(s1.len()), s1, s2 };
        let b = solve_interface_block(&ops, &src).unwrap();
        let c = solve_interface_calculus(&ops, &src).unwrap();
        prop_assert!(b.relative_gap(&c) <= 1e-10);
    }

    #[test]
    fn boundary_and_interface_round_trip(
        (s, bc) in (1usize..5).prop_flat_map(|m| (section(m), boundary(m))),
        p in params(),
    ) {
        let sol = solve(&s, p, ModalForcing::zero(s.dim()), bc.clone());
        let (a, gamma) = sol.minus.interval();
        let (_, b) = sol.plus.interval();
        let checks = [
            (sol.minus.evaluate(0, a).unwrap(), bc.phi1_minus.clone()),
            (sol.minus.evaluate(1, a).unwrap(), bc.phi2_minus.clone()),
            (sol.plus.evaluate(0, b).unwrap(), bc.phi1_plus.clone()),
            (sol.plus.evaluate(1, b).unwrap(), bc.phi2_plus.clone()),
            (sol.minus.evaluate(0, gamma).unwrap(), sol.interface.psi1.clone()),
            (sol.minus.evaluate(1, gamma).unwrap(), sol.interface.psi2.clone()),
            (sol.plus.evaluate(0, gamma).unwrap(), sol.interface.psi1.clone()),
            (sol.plus.evaluate(1, gamma).unwrap(), sol.interface.psi2.clone()),
        ];
        for (got, want) in checks {
            prop_assert!(sup_norm(&(&got - &want)) <= 1e-9 * sup_norm(&want).max(1.0));
        }
        prop_assert!(sol.within_budget(), "{:?}", sol.violations());
    }

    #[test]
    fn pipeline_is_linear(
        (s, bc1, bc2) in (1usize..4).prop_flat_map(|m| (section(m), boundary(m), boundary(m))),
        alpha in -2.0f64..2.0,
        beta in -2.0f64..2.0,
        p in params(),
    ) {
        let m = s.dim();
        let geom = CylinderGeometry::from_lengths(p.0, p.1).unwrap();
        let f1 = ModalForcing::sine(&s, &geom, Side::Minus, 1).unwrap();
        let f2 = ModalForcing::sine(&s, &geom, Side::Plus, 2).unwrap();
        let u1 = solve(&s, p, f1.clone(), bc1.clone());
        let u2 = solve(&s, p, f2.clone(), bc2.clone());
        let mix = solve(
            &s,
            p,
            ModalForcing::combine(alpha, &f1, beta, &f2).unwrap(),
            bc1.scaled(alpha).add(&bc2.scaled(beta)),
        );
        prop_assert_eq!(mix.interface.psi1.len(), m);
        let combo = |a: &DVector<f64>, b: &DVector<f64>| a * alpha + b * beta;
        let want = combo(&u1.interface.stacked(), &u2.interface.stacked());
        let scale = sup_norm(&u1.interface.stacked()).max(sup_norm(&u2.interface.stacked())).max(1.0);
        prop_assert!(sup_norm(&(mix.interface.stacked() - want)) <= 1e-12 * scale);
        for (side, x) in [(Side::Minus, geom.a * 0.5), (Side::Plus, geom.b * 0.3)] {
            let w = combo(&u1.side(side).evaluate(0, x).unwrap(), &u2.side(side).evaluate(0, x).unwrap());
            let got = mix.side(side).evaluate(0, x).unwrap();
            let sc = sup_norm(&w).max(1.0);
            prop_assert!(sup_norm(&(got - w)) <= 1e-12 * sc);
        }
    }

    #[test]
    fn reflection_symmetry(
        (s, bc) in (1usize..5).prop_flat_map(|m| (section(m), boundary(m))),
        len in 0.3f64..3.0,
        k in 0.1f64..10.0,
    ) {
        // Symmetrize the data so the mirrored problem coincides with the original.
        let sym = bc.add(&bc.mirrored());
        let sol = solve(&s, (len, len, k, k), ModalForcing::zero(s.dim()), sym);
        prop_assert!(sup_norm(&sol.interface.psi2) <= 1e-10 * sup_norm(&sol.interface.psi1).max(1e-300));
        for i in 0..16 {
            let t = len * i as f64 / 15.0;
            let um = sol.minus.evaluate(0, -t).unwrap();
            let up = sol.plus.evaluate(0, t).unwrap();
            prop_assert!(sup_norm(&(&um - &up)) <= 1e-9 * sup_norm(&um).max(1.0));
        }
    }
}
