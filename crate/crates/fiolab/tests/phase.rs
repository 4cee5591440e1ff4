use fiolab::experiments::fit_growth;
use fiolab::phase::{
    growth_ratio_x, second_derivative_bounds, separation_margin, taylor_remainder, verify_declared, Alpha,
    GrowthParams, PartitionSpec, PhaseSpec, SeparationType, DEFAULT_BOXES,
};
use fiolab::spaces::DEFAULT_EPS;
use proptest::prelude::*;

fn built_ins() -> Vec<PhaseSpec> {
    vec![
        PhaseSpec::bilinear(1),
        PhaseSpec::mild_growth(0.5, 1).unwrap(),
        PhaseSpec::mild_growth(0.0, 1).unwrap(),
        PhaseSpec::nonseparated_x(0.3, 1).unwrap(),
        PhaseSpec::nonseparated_xi(1.0, 1.0, 1),
        PhaseSpec::high_growth(1.0, 0.0, 1).unwrap(),
        PhaseSpec::high_growth(0.5, 2.0, 1).unwrap(),
    ]
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn derivatives_match_finite_differences(which in 0usize..7, x in -8.0..8.0f64, xi in -8.0..8.0f64) {
        let phi = &built_ins()[which];
        let h = 1e-5;
        let mut gx = [0.0];
        let mut gxi = [0.0];
        phi.grad_x(&[x], &[xi], &mut gx);
        phi.grad_xi(&[x], &[xi], &mut gxi);
        let fd_x = (phi.eval(&[x + h], &[xi]) - phi.eval(&[x - h], &[xi])) / (2.0 * h);
        let fd_xi = (phi.eval(&[x], &[xi + h]) - phi.eval(&[x], &[xi - h])) / (2.0 * h);
        prop_assert!(close(gx[0], fd_x, 1e-5), "{}: {} vs {}", phi.name, gx[0], fd_x);
        prop_assert!(close(gxi[0], fd_xi, 1e-5), "{}: {} vs {}", phi.name, gxi[0], fd_xi);

        let [hxx, hxxi, hxixi] = phi.hessian(&[x], &[xi]);
        let g = |a: f64, b: f64| {
            let (mut u, mut v) = ([0.0], [0.0]);
            phi.grad_x(&[a], &[b], &mut u);
            phi.grad_xi(&[a], &[b], &mut v);
            (u[0], v[0])
        };
        let fd_xx = (g(x + h, xi).0 - g(x - h, xi).0) / (2.0 * h);
        let fd_xxi = (g(x, xi + h).0 - g(x, xi - h).0) / (2.0 * h);
        let fd_xixi = (g(x, xi + h).1 - g(x, xi - h).1) / (2.0 * h);
        prop_assert!(close(hxx[0], fd_xx, 1e-4), "{}: xx {} vs {}", phi.name, hxx[0], fd_xx);
        prop_assert!(close(hxxi[0], fd_xxi, 1e-4));
        prop_assert!(close(hxixi[0], fd_xixi, 1e-4), "{}: xixi {} vs {}", phi.name, hxixi[0], fd_xixi);
    }

    #[test]
    fn star_partition_covers_each_piece(k in -6i64..6, u in -0.75..0.75f64) {
        let p = PartitionSpec::default();
        let x = k as f64 + u;
        if p.eta_k(&[k], &[x]) > 0.0 {
            prop_assert!((p.eta_star(&[k], &[x]) - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn taylor_remainder_is_second_order(which in 0usize..7, k in -6i64..6, l in -6i64..6) {
        let phi = &built_ins()[which];
        let tau = taylor_remainder(phi, &[k as f64], &[l as f64]).unwrap();
        let grid = *tau.grid();
        let centre = grid.ravel(&[grid.n() / 2, grid.n() / 2]);
        prop_assert!(tau.samples()[centre].norm() < 1e-8);
        // sup |τ| ≤ 2 max over the cell of the second derivatives (integral form of the remainder)
        let mut hmax = 0.0f64;
        for i in 0..=40 {
            for j in 0..=40 {
                let x = k as f64 - 1.0 + i as f64 / 20.0;
                let xi = l as f64 - 1.0 + j as f64 / 20.0;
                for b in phi.hessian(&[x], &[xi]) {
                    hmax = hmax.max(b[0].abs());
                }
            }
        }
        prop_assert!(tau.sup_norm() <= 2.0 * hmax * (1.0 + 1e-9), "{}: {} vs {}", phi.name, tau.sup_norm(), hmax);
    }
}

#[test]
fn taylor_remainder_of_quadratic_at_origin() {
    let phi = PhaseSpec::mild_growth(0.0, 1).unwrap();
    let tau = taylor_remainder(&phi, &[0.0], &[0.0]).unwrap();
    let grid = *tau.grid();
    let n = grid.n();
    for i in 0..n {
        let x = grid.coord(i);
        let v = tau.samples()[i * n + n / 2];
        assert!((v.re - x * x).abs() < 1e-10, "x = {x}: {v}");
    }
    let centre = grid.wrap_index(0.0);
    let h = grid.spacing();
    let slope = (tau.samples()[(centre + 1) * n + n / 2].re - tau.samples()[(centre - 1) * n + n / 2].re) / (2.0 * h);
    assert!(slope.abs() < 1e-8);
}

#[test]
fn gradient_growth_examples() {
    let phi = PhaseSpec::mild_growth(0.5, 1).unwrap();
    let r: Vec<f64> = DEFAULT_BOXES.iter().map(|&l| growth_ratio_x(&phi, Alpha::Finite(0.5), l).unwrap()).collect();
    for w in r.windows(2) {
        assert!((w[1] / w[0] - 1.0).abs() < 0.1, "{r:?}");
    }
    let quad = PhaseSpec::mild_growth(0.0, 1).unwrap();
    let r: Vec<f64> = DEFAULT_BOXES.iter().map(|&l| growth_ratio_x(&quad, Alpha::Finite(0.5), l).unwrap()).collect();
    let slope = fit_growth(&[8, 16, 32], &r).unwrap();
    assert!((slope - 0.5).abs() < 0.1, "slope {slope}");
    assert_eq!(growth_ratio_x(&PhaseSpec::bilinear(1), Alpha::Finite(1.0), 16.0).unwrap(), 0.0);
}

#[test]
fn second_derivative_examples() {
    let (a, b, c) = second_derivative_bounds(&PhaseSpec::bilinear(1), 0.0, 0.0, DEFAULT_EPS, 8.0).unwrap();
    assert_eq!((a, b), (0.0, 0.0));
    assert!(c > 0.0 && c.is_finite());

    let phi = PhaseSpec::high_growth(1.0, 0.0, 1).unwrap();
    let weighted: Vec<f64> = DEFAULT_BOXES
        .iter()
        .map(|&l| second_derivative_bounds(&phi, 1.0, 0.0, DEFAULT_EPS, l).unwrap().0)
        .collect();
    for w in weighted.windows(2) {
        assert!(w[1] / w[0] < 1.15, "{weighted:?}");
    }
    let bare: Vec<f64> = DEFAULT_BOXES
        .iter()
        .map(|&l| second_derivative_bounds(&phi, 0.0, 0.0, DEFAULT_EPS, l).unwrap().0)
        .collect();
    assert!(bare[2] > 1.5 * bare[1] && bare[1] > 1.5 * bare[0], "{bare:?}");
}

#[test]
fn separation_examples() {
    assert!(separation_margin(&PhaseSpec::bilinear(1), SeparationType::X, 8.0).unwrap() >= 1.0 - 1e-12);
    assert_eq!(separation_margin(&PhaseSpec::nonseparated_xi(1.0, 1.0, 1), SeparationType::X, 8.0).unwrap(), 0.0);
    let mild = PhaseSpec::mild_growth(0.5, 1).unwrap();
    assert!(separation_margin(&mild, SeparationType::X, 16.0).unwrap() >= 1.0 - 1e-12);
    assert_eq!(separation_margin(&PhaseSpec::nonseparated_x(0.5, 1).unwrap(), SeparationType::X, 8.0).unwrap(), 0.0);
}

#[test]
fn verifiers_accept_built_ins_and_reject_mismatches() {
    for phi in built_ins() {
        let rows = verify_declared(&phi, DEFAULT_EPS, &DEFAULT_BOXES).unwrap();
        assert!(rows.iter().all(|r| r.pass), "{}: {rows:?}", phi.name);
    }
    let mismatches = [
        PhaseSpec::mild_growth(0.0, 1).unwrap().with_declared(GrowthParams::new(Alpha::Finite(0.5), 0.0, 0.0).unwrap()),
        PhaseSpec::high_growth(1.0, 0.0, 1).unwrap().with_declared(GrowthParams::new(Alpha::MinusInfinity, 0.0, 0.0).unwrap()),
        PhaseSpec::high_growth(0.0, 1.0, 1).unwrap().with_declared(GrowthParams::new(Alpha::MinusInfinity, 0.0, 0.0).unwrap()),
    ];
    for phi in mismatches {
        let rows = verify_declared(&phi, DEFAULT_EPS, &DEFAULT_BOXES).unwrap();
        assert!(rows.iter().any(|r| !r.pass), "{}: {rows:?}", phi.name);
    }
    assert!(verify_declared(&PhaseSpec::bilinear(1), DEFAULT_EPS, &[8.0]).is_err());
}
