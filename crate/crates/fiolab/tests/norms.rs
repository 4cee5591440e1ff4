use std::f64::consts::PI;

use fiolab::grid::{fourier_transform, Grid, SampledFunction};
use fiolab::spaces::{
    amalgam_norm, embedding_holds, modulation_norm, sequence_norm, weight_eval, Exponent, SpaceSpec, Weight,
};
use fiolab::tfr::StftLattice;
use fiolab::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn exponent() -> impl Strategy<Value = Exponent> {
    prop_oneof![
        Just(Exponent::Infinity),
        (1.0..6.0f64).prop_map(|p| Exponent::new(p).unwrap()),
    ]
}

/// A sum of three random Gaussian packets.
fn random_fn(grid: Grid, rng: &mut ChaCha8Rng) -> SampledFunction {
    let atoms: Vec<(f64, f64, f64, Complex64)> = (0..3)
        .map(|_| {
            (
                rng.gen_range(-3.0..3.0),
                rng.gen_range(-1.5..1.5),
                rng.gen_range(0.6..1.5),
                Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
            )
        })
        .collect();
    SampledFunction::from_fn(grid, |t| {
        atoms
            .iter()
            .map(|&(c, w, s, a)| a * (-PI * ((t[0] - c) / s).powi(2)).exp() * Complex64::from_polar(1.0, 2.0 * PI * w * t[0]))
            .sum()
    })
}

fn small_grid() -> Grid {
    Grid::new(1, 64, 0.25).unwrap()
}

fn norm_of(f: &SampledFunction, spec: &SpaceSpec) -> f64 {
    match spec.kind {
        fiolab::spaces::SpaceKind::Amalgam => amalgam_norm(f, spec).unwrap(),
        _ => modulation_norm(f, spec).unwrap(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn norm_axioms(seed in any::<u64>(), p in exponent(), q in exponent(), s in -1.0..2.0f64, t in -1.0..2.0f64,
                   c_re in -3.0..3.0f64, c_im in -3.0..3.0f64, amalgam in any::<bool>()) {
        let grid = small_grid();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = random_fn(grid, &mut rng);
        let g = random_fn(grid, &mut rng);
        let w = Weight::new(s, t, 1);
        let spec = if amalgam { SpaceSpec::amalgam(p, q, w) } else { SpaceSpec::modulation(p, q, w) }
            .with_lattice(StftLattice::for_unit_window(&grid, 0.5));
        let c = Complex64::new(c_re, c_im);
        let nf = norm_of(&f, &spec);
        let ng = norm_of(&g, &spec);
        let ncf = norm_of(&f.scale(c), &spec);
        prop_assert!((ncf - c.norm() * nf).abs() <= 1e-9 * (c.norm() * nf).max(1e-300));
        let nsum = norm_of(&f.add(&g).unwrap(), &spec);
        prop_assert!(nsum <= (nf + ng) * (1.0 + 1e-9));
    }

    #[test]
    fn normalised_norms_decrease_in_p_and_q(seed in any::<u64>(), p1 in 1.0..4.0f64, dp in 0.0..4.0f64, q in exponent()) {
        let grid = small_grid();
        let f = random_fn(grid, &mut ChaCha8Rng::seed_from_u64(seed));
        let (dx, dxi) = (grid.spacing(), grid.dual().spacing());
        let measure = |e: Exponent, cell: f64| match e {
            Exponent::Infinity => 1.0,
            e => cell.powf(e.recip()),
        };
        let normalised = |p: Exponent, q: Exponent| {
            let spec = SpaceSpec::modulation(p, q, Weight::unit(1));
            modulation_norm(&f, &spec).unwrap() / (measure(p, dx) * measure(q, dxi))
        };
        let lo = Exponent::new(p1).unwrap();
        let hi = Exponent::new(p1 + dp).unwrap();
        prop_assert!(normalised(hi, q) <= normalised(lo, q) * (1.0 + 1e-12));
        prop_assert!(normalised(Exponent::Infinity, q) <= normalised(hi, q) * (1.0 + 1e-12));
        prop_assert!(normalised(q, hi) <= normalised(q, lo) * (1.0 + 1e-12));
    }

    #[test]
    fn power_weights_are_submultiplicative(s in 0.0..3.0f64, t in 0.0..3.0f64, z in prop::array::uniform2(-50.0..50.0f64),
                                           w in prop::array::uniform2(-50.0..50.0f64)) {
        let v = Weight::new(s, t, 1);
        let sum = [z[0] + w[0], z[1] + w[1]];
        prop_assert!(weight_eval(&v, &sum) <= weight_eval(&v, &z) * weight_eval(&v, &w) * (1.0 + 1e-12));
    }

    #[test]
    fn sequence_norm_is_a_norm(vals in prop::collection::vec(-5.0..5.0f64, 1..12), other in prop::collection::vec(-5.0..5.0f64, 1..12),
                               p in exponent(), s in -2.0..2.0f64, c in -4.0..4.0f64) {
        let seq = |v: &[f64]| -> Vec<(Vec<i64>, f64)> { v.iter().enumerate().map(|(k, &a)| (vec![k as i64 - 3], a)).collect() };
        let a = seq(&vals);
        let b = seq(&other);
        let len = vals.len().max(other.len());
        let sum: Vec<f64> = (0..len).map(|k| vals.get(k).unwrap_or(&0.0) + other.get(k).unwrap_or(&0.0)).collect();
        let na = sequence_norm(&a, p, s).unwrap();
        let nb = sequence_norm(&b, p, s).unwrap();
        prop_assert!(sequence_norm(&seq(&sum), p, s).unwrap() <= (na + nb) * (1.0 + 1e-12));
        let scaled: Vec<f64> = vals.iter().map(|v| c * v).collect();
        prop_assert!((sequence_norm(&seq(&scaled), p, s).unwrap() - c.abs() * na).abs() <= 1e-12 * (1.0 + c.abs() * na));
    }
}

#[test]
fn sequence_norm_examples() {
    use Exponent::*;
    assert_eq!(sequence_norm(&[], Finite(2.0), 1.0).unwrap(), 0.0);
    for (p, s) in [(Finite(1.0), 3.0), (Finite(2.5), -1.0), (Infinity, 7.0)] {
        assert_eq!(sequence_norm(&[(vec![0], 1.0)], p, s).unwrap(), 1.0);
    }
    let ones: Vec<(Vec<i64>, f64)> = (0..4).map(|k| (vec![k], 1.0)).collect();
    assert_eq!(sequence_norm(&ones, Finite(1.0), 0.0).unwrap(), 4.0);
    assert!(Exponent::new(0.5).is_err());
}

#[test]
fn embedding_examples() {
    use Exponent::*;
    assert!(embedding_holds(Infinity, 2.0, Finite(1.0), 0.0, 1));
    assert!(!embedding_holds(Infinity, 1.0, Finite(1.0), 0.0, 1));
    assert!(embedding_holds(Finite(1.0), 0.0, Infinity, 0.0, 1));
}

#[test]
fn amalgam_is_fourier_image_of_modulation() {
    // self-dual grid: n Δ² = 1, so f and f̂ share the grid and the Gaussian window is fixed by ℱ
    let grid = Grid::new(1, 64, 0.125).unwrap();
    assert!((grid.dual().spacing() - grid.spacing()).abs() < 1e-15);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    use Exponent::*;
    for _ in 0..4 {
        let f = random_fn(grid, &mut rng);
        let fh = fourier_transform(&f);
        for (p, q) in [(Finite(1.0), Infinity), (Finite(2.0), Finite(1.0)), (Infinity, Finite(3.0)), (Finite(1.5), Finite(2.5))] {
            let w = amalgam_norm(&f, &SpaceSpec::amalgam(q, p, Weight::unit(1))).unwrap();
            let m = modulation_norm(&fh, &SpaceSpec::modulation(p, q, Weight::unit(1))).unwrap();
            assert!((w - m).abs() < 1e-3 * m, "p={p} q={q}: {w} vs {m}");
        }
    }
}

#[test]
fn amalgam_and_modulation_agree_when_p_equals_q() {
    let grid = small_grid();
    let f = random_fn(grid, &mut ChaCha8Rng::seed_from_u64(3));
    for p in [Exponent::Finite(1.0), Exponent::Finite(3.0), Exponent::Infinity] {
        let w = Weight::new(0.7, 0.3, 1);
        let a = amalgam_norm(&f, &SpaceSpec::amalgam(p, p, w)).unwrap();
        let m = modulation_norm(&f, &SpaceSpec::modulation(p, p, w)).unwrap();
        assert!((a - m).abs() <= 1e-12 * m);
    }
    let z = SampledFunction::zeros(grid);
    assert_eq!(modulation_norm(&z, &SpaceSpec::modulation(Exponent::Finite(1.0), Exponent::Infinity, Weight::unit(1))).unwrap(), 0.0);
}
