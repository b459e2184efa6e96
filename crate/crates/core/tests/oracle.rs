use std::f64::consts::PI;

use bihtrans_core::oracle::*;
use bihtrans_core::*;
use nalgebra::DMatrix;

fn setup() -> (SectionOperator, CylinderGeometry, Diffusivities) {
    (
        SectionOperator::dirichlet_laplacian_1d(3, 1.0).unwrap(),
        CylinderGeometry::new(0.0, 0.7, 2.0).unwrap(),
        Diffusivities::new(1.0, 3.0).unwrap(),
    )
}

const LEVELS: [usize; 3] = [65, 129, 257];

#[test]
fn direct_solve_is_second_order_on_exact_case() {
    let (s, g, k) = setup();
    let case = manufactured_homogeneous(&s, &g, k, 0, 0.8, 0.3).unwrap();
    let table = convergence_study(&LEVELS, |n| {
        let o = direct_solve(&s, &g, &k, &case.forcing, &case.boundary, n)?;
        assert!(o.solve_residual <= 1e-12, "{}", o.solve_residual);
        Ok(compare(&o, &case, 65)?.sup)
    })
    .unwrap();
    let rate = table.fitted_rate.unwrap();
    assert!((rate - 2.0).abs() <= 0.2, "{rate}");
    assert!(table.is_monotone());
}

#[test]
fn representation_is_at_floor_on_exact_case() {
    let (s, g, k) = setup();
    let case = manufactured_homogeneous(&s, &g, k, 2, -0.4, 1.0).unwrap();
    let p = TransmissionProblem::new(s, g, k, case.forcing.clone(), case.boundary.clone()).unwrap();
    let table = convergence_study(&LEVELS, |n| {
        let sol = solve_transmission(
            &p,
            SolveOptions {
                nx: n,
                ..Default::default()
            },
        )?;
        Ok(compare(&sol, &case, 65)?.sup)
    })
    .unwrap();
    assert!(table.floor);
    assert!(table.fitted_rate.is_none());
}

#[test]
fn forced_case_converges_for_both_methods() {
    let (s, g, k) = setup();
    let r = Polynomial::new(vec![1.0, 0.5, -0.25, 0.1]);
    let case = manufactured_forced(&s, &g, k, 0, &r, -0.3, 0.6).unwrap();
    let p = TransmissionProblem::new(s.clone(), g, k, case.forcing.clone(), case.boundary.clone())
        .unwrap();
    let rep = convergence_study(&LEVELS, |n| {
        Ok(compare(
            &solve_transmission(
                &p,
                SolveOptions {
                    nx: n,
                    ..Default::default()
                },
            )?,
            &case,
            65,
        )?
        .sup)
    })
    .unwrap();
    let dir = convergence_study(&LEVELS, |n| {
        Ok(compare(
            &direct_solve(&s, &g, &k, &case.forcing, &case.boundary, n)?,
            &case,
            65,
        )?
        .sup)
    })
    .unwrap();
    assert!(rep.fitted_rate.unwrap() >= 2.0, "{rep:?}");
    assert!((dir.fitted_rate.unwrap() - 2.0).abs() <= 0.2, "{dir:?}");
}

#[test]
fn comparing_a_field_with_itself_is_zero() {
    let (s, g, k) = setup();
    let case = manufactured_homogeneous(&s, &g, k, 1, 0.5, 0.5).unwrap();
    let c = compare(&case, &case, 17).unwrap();
    assert_eq!(c.sup, 0.0);
    assert_eq!(c.l2_scaled, 0.0);
    assert_eq!(c.probes, 34);
}

#[test]
fn comparing_different_geometries_fails() {
    let (s, g, k) = setup();
    let a = manufactured_homogeneous(&s, &g, k, 1, 0.5, 0.5).unwrap();
    let other = CylinderGeometry::new(0.0, 0.5, 2.0).unwrap();
    let b = manufactured_homogeneous(&s, &other, k, 1, 0.5, 0.5).unwrap();
    assert!(compare(&a, &b, 9).is_err());
}

#[test]
fn scalar_exact_case_interface_traces() {
    let s = SectionOperator::from_matrix(DMatrix::from_element(1, 1, -PI * PI)).unwrap();
    let g = CylinderGeometry::new(-1.0, 0.0, 1.5).unwrap();
    let k = Diffusivities::new(1.0, 4.0).unwrap();
    let case = manufactured_homogeneous(&s, &g, k, 0, 1.0, 0.0).unwrap();
    let p = TransmissionProblem::new(s, g, k, case.forcing.clone(), case.boundary.clone()).unwrap();
    let sol = solve_transmission(&p, SolveOptions::default()).unwrap();
    assert!((sol.interface.psi1[0] - 1.0).abs() <= 1e-9);
    assert!((sol.interface.psi2[0] - PI).abs() <= 1e-9);
}

#[test]
fn rate_table_csv_has_header() {
    let t = RateTable::from_errors(&[(65, 1e-2), (129, 2.5e-3), (257, 6.25e-4)]).unwrap();
    let mut buf = Vec::new();
    t.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("n_x,error,rate"));
    assert_eq!(lines.next(), Some("65,1.000000e-2,"));
    assert!(lines.next().unwrap().starts_with("129,2.500000e-3,2.0"));
}
