use std::f64::consts::PI;
use std::sync::Arc;

use fiolab::experiments::{
    default_tuples, emit_report, estimate_operator_ratio, operator_ratio, parse_report, separation_summary, threshold_sweep,
    ExperimentRow, ExponentTuple, Family, Measured, Operator, ReportFormat, SweepConfig, Theorem, Verdict, EXCLUSION_BAND,
    UNBOUNDED_FIT,
};
use fiolab::grid::japanese;
use fiolab::spaces::{Exponent, SpaceSpec, Weight};
use fiolab::tfr::StftLattice;
use fiolab::{Complex64, Error};
use proptest::prelude::*;

use Exponent::{Finite, Infinity};

fn m(p: Exponent, q: Exponent) -> SpaceSpec {
    SpaceSpec::modulation(p, q, Weight::unit(1))
}

fn family() -> impl Strategy<Value = Family> {
    prop_oneof![
        Just(Family::GaussianAtoms),
        (0u64..100).prop_map(|seed| Family::Spf { alpha: 0.0, seed }),
        (0u64..100).prop_map(|seed| Family::ModulatedTrain { seed }),
    ]
}

fn exponent() -> impl Strategy<Value = Exponent> {
    prop_oneof![Just(Finite(1.0)), Just(Finite(2.0)), Just(Finite(3.5)), Just(Infinity)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn identity_ratio_is_one(fam in family(), n in 2usize..6, p in exponent(), q in exponent(), s in 0.0..1.0f64) {
        let space = SpaceSpec::modulation(p, q, Weight::new(s, s, 1));
        let r = estimate_operator_ratio(&Operator::Identity, &space, &space, &fam, n).unwrap();
        prop_assert_eq!(r, 1.0);
    }

    #[test]
    fn ratio_is_monotone_in_the_family(seed in 0u64..1000, split in 1usize..4) {
        let fam = Family::Spf { alpha: 0.0, seed };
        let members = fam.members(4).unwrap();
        let grid = *members[0].grid();
        let space = m(Finite(1.0), Infinity).with_lattice(StftLattice::for_unit_window(&grid, 0.25));
        let op = Operator::Multiplication(Arc::new(|x: &[f64]| Complex64::cis(2.0 * PI * japanese(x).powi(2))));
        let part = operator_ratio(&op, &space, &space, &members[..split]).unwrap();
        let all = operator_ratio(&op, &space, &space, &members).unwrap();
        prop_assert!(part <= all);
    }
}

#[test]
fn trivial_multiplier_preserves_norms() {
    let op = Operator::Multiplier(Arc::new(|_: &[f64]| 0.0));
    let space = m(Finite(2.0), Finite(2.0));
    let r = estimate_operator_ratio(&op, &space, &space, &Family::GaussianAtoms, 4).unwrap();
    assert!((r - 1.0).abs() < 1e-9, "{r}");
    assert!(matches!(operator_ratio(&op, &space, &space, &[]), Err(Error::Validation(_))));
}

#[test]
fn quadratic_chirp_multiplication_grows_on_bump_lattices() {
    let op = Operator::Multiplication(Arc::new(|x: &[f64]| Complex64::cis(2.0 * PI * japanese(x).powi(2))));
    let space = m(Finite(1.0), Infinity);
    let fam = Family::Spf { alpha: 0.0, seed: 0 };
    let r: Vec<f64> = [4, 8, 16].iter().map(|&n| estimate_operator_ratio(&op, &space, &space, &fam, n).unwrap()).collect();
    assert!(r[0] < r[1] && r[1] < r[2], "{r:?}");
    let fit = fiolab::experiments::fit_growth(&[4, 8, 16], &r).unwrap();
    assert!(fit >= UNBOUNDED_FIT, "fit {fit}");
}

fn rows_for<'a>(rows: &'a [ExperimentRow], t: &ExponentTuple) -> Vec<&'a ExperimentRow> {
    rows.iter().filter(|r| r.tuple() == *t).collect()
}

#[test]
fn separated_sweep_examples() {
    let flat = ExponentTuple::separated(Finite(2.0), Finite(2.0), 0.0, 0.0, 0.5);
    let steep = ExponentTuple::separated(Infinity, Finite(1.0), 0.3, 0.0, 0.5);
    let rows = threshold_sweep(Theorem::Separated, &[flat, steep], &SweepConfig::default()).unwrap();
    assert_eq!(rows.len(), 2 * SweepConfig::default().ns.len());

    let f = rows_for(&rows, &flat);
    assert!(f.iter().all(|r| r.verdict == Verdict::PredictedBounded));
    let e = f[0].growth_exponent.unwrap();
    assert!(e < 0.1, "flat fit {e}");
    assert_eq!(f[0].measured, Some(Measured::Bounded));

    let s = rows_for(&rows, &steep);
    assert!(s.iter().all(|r| r.verdict == Verdict::PredictedUnbounded));
    let e = s[0].growth_exponent.unwrap();
    assert!(e >= UNBOUNDED_FIT, "steep fit {e}");
    for r in &rows {
        assert!(r.ratio >= 0.0 && !r.grid.is_empty() && !r.window.is_empty());
    }
}

#[test]
fn high_growth_boundary_case_is_bounded() {
    let t = ExponentTuple::high_growth(Finite(1.0), 1.0, 0.0, 2.0, 0.0);
    assert_eq!(t.verdict(Theorem::HighGrowth).unwrap(), Verdict::PredictedBounded);
    let below = ExponentTuple { s1: 0.9, ..t };
    assert_eq!(below.verdict(Theorem::HighGrowth).unwrap(), Verdict::PredictedUnbounded);
}

#[test]
fn default_grids_have_enough_tuples() {
    for theorem in [Theorem::Separated, Theorem::NonSeparated, Theorem::HighGrowth] {
        let tuples = default_tuples(theorem);
        assert!(tuples.len() >= 40);
        for t in &tuples {
            t.verdict(theorem).unwrap();
        }
    }
}

fn small_sweep(seed: u64) -> Vec<ExperimentRow> {
    let tuples = &default_tuples(Theorem::HighGrowth)[..6];
    threshold_sweep(Theorem::HighGrowth, tuples, &SweepConfig { ns: vec![4, 8, 16], seed }).unwrap()
}

#[test]
fn reports_round_trip_and_are_deterministic() {
    let rows = small_sweep(5);
    let csv = emit_report(&rows, ReportFormat::Csv).unwrap();
    assert_eq!(parse_report(&csv).unwrap(), rows);
    assert_eq!(emit_report(&small_sweep(5), ReportFormat::Csv).unwrap(), csv);

    let one = emit_report(&rows[..1], ReportFormat::Csv).unwrap();
    assert_eq!(String::from_utf8(one).unwrap().lines().count(), 2);
    assert!(matches!(emit_report(&[], ReportFormat::Csv), Err(Error::Validation(_))));
}

#[test]
fn svg_has_one_series_per_verdict() {
    let mut rows = small_sweep(0);
    let first = rows[0].tuple();
    for r in rows.iter_mut() {
        r.verdict = if r.tuple() == first { Verdict::PredictedBounded } else { Verdict::PredictedUnbounded };
    }
    let svg = String::from_utf8(emit_report(&rows, ReportFormat::Svg).unwrap()).unwrap();
    assert!(svg.starts_with("<svg") || svg.starts_with("<?xml"));
    for name in ["predicted-bounded", "predicted-unbounded"] {
        assert!(svg.contains(&format!("<g id=\"{name}\"")));
        assert!(!svg.contains(&format!("{name} (0)")), "{svg}");
    }
    for (name, count) in [("predicted-bounded", 1), ("predicted-unbounded", 5)] {
        assert!(svg.contains(&format!("{name} ({count})")));
    }
}

#[test]
fn summary_skips_the_exclusion_band() {
    let rows = small_sweep(0);
    let s = separation_summary(&rows).unwrap();
    let near = rows
        .iter()
        .filter(|r| r.n_family == 4 && r.margin.abs() < EXCLUSION_BAND - 1e-9)
        .count();
    assert_eq!(s.excluded, near);
    assert_eq!(s.tuples, rows.iter().filter(|r| r.n_family == 4).count());
}
