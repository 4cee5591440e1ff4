//! Operator-ratio estimates, threshold sweeps over exponent tuples, and reports.
//!
//! A sweep evaluates, for every exponent tuple and family size `N`, the ratios
//! `‖Tf‖_Y / ‖f‖_X` of the necessity witnesses of the matching theorem. The row's ratio is the
//! largest of them; its growth exponent is the largest per-witness log-log slope in `N`, which is
//! the asymptotic slope of the maximum. Both sit next to the analytic predicate.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extremal::{self, Bump, CoefficientSeq, Plateau};
use crate::fio::{self, SymbolSpec};
use crate::grid::{japanese, Grid, SampledFunction};
use crate::par;
use crate::phase::{self, PhaseSpec, Profile};
use crate::spaces::{self, Exponent, NormRequest, SpaceKind, SpaceSpec, Weight};
use crate::tfr::{self, StftLattice, DEFAULT_WINDOW};

/// Family sizes used when none are given.
pub const DEFAULT_NS: [usize; 4] = [4, 8, 16, 32];
/// Fitted exponents at or above this count as growth.
pub const UNBOUNDED_FIT: f64 = 0.15;
/// Fitted exponents below this count as flat.
pub const BOUNDED_FIT: f64 = 0.1;
/// Tuples closer than this to a threshold are left out of the separation statistic.
pub const EXCLUSION_BAND: f64 = 0.1;
/// Required gap between the median fits of the two verdict classes.
pub const REQUIRED_GAP: f64 = 0.1;
/// Required share of predicted-bounded tuples that fit below [`BOUNDED_FIT`].
pub const REQUIRED_FLAT_SHARE: f64 = 0.8;
/// Shift spacing of the STFT lattice used by the family-based estimators.
pub const SWEEP_DX: f64 = 0.25;

const CHOP: f64 = 1e-13;

/// Which boundedness theorem a sweep exercises.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Theorem {
    /// Separated phases with `(α, 0, 0)`-growth on `M^{p,q}`.
    Separated,
    /// Phases without the bilinear term on `M^{p,q}`.
    NonSeparated,
    /// `(−∞, t1, t2)`-growth on `M^p ∩ M^{p'}`.
    HighGrowth,
}

impl Theorem {
    pub fn number(self) -> u8 {
        match self {
            Theorem::Separated => 1,
            Theorem::NonSeparated => 2,
            Theorem::HighGrowth => 3,
        }
    }

    pub fn from_number(n: u8) -> Result<Self> {
        match n {
            1 => Ok(Theorem::Separated),
            2 => Ok(Theorem::NonSeparated),
            3 => Ok(Theorem::HighGrowth),
            _ => Err(Error::validation(format!("theorem must be 1, 2 or 3, got {n}"))),
        }
    }

    /// Experiment id written into every row.
    pub fn experiment_id(self) -> &'static str {
        match self {
            Theorem::Separated => "thm1-separated",
            Theorem::NonSeparated => "thm2-nonseparated",
            Theorem::HighGrowth => "thm3-high-growth",
        }
    }
}

impl fmt::Display for Theorem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.number())
    }
}

impl FromStr for Theorem {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().trim_start_matches("thm");
        let n: u8 = t.parse().map_err(|_| Error::Parse(format!("bad theorem {s:?}")))?;
        Theorem::from_number(n)
    }
}

/// Analytic verdict of the predicate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    PredictedBounded,
    PredictedUnbounded,
}

/// Numerical reading of a fitted growth exponent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Measured {
    Bounded,
    Unbounded,
    Inconclusive,
}

impl Measured {
    pub fn from_fit(e: f64) -> Self {
        if e >= UNBOUNDED_FIT {
            Measured::Unbounded
        } else if e < BOUNDED_FIT {
            Measured::Bounded
        } else {
            Measured::Inconclusive
        }
    }
}

/// One exponent tuple of a sweep. Unused entries are zero (`q = p` for the high-growth theorem,
/// `α = −∞` there as well).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentTuple {
    pub p: Exponent,
    pub q: Exponent,
    pub s1: f64,
    pub s2: f64,
    pub alpha: f64,
    pub t1: f64,
    pub t2: f64,
    pub d: usize,
}

impl ExponentTuple {
    pub fn separated(p: Exponent, q: Exponent, s1: f64, s2: f64, alpha: f64) -> Self {
        ExponentTuple { p, q, s1, s2, alpha, t1: 0.0, t2: 0.0, d: 1 }
    }

    pub fn high_growth(p: Exponent, s1: f64, s2: f64, t1: f64, t2: f64) -> Self {
        ExponentTuple {
            p,
            q: p,
            s1,
            s2,
            alpha: f64::NEG_INFINITY,
            t1,
            t2,
            d: 1,
        }
    }

    /// Predicate clauses of the theorem for this tuple.
    pub fn clauses(&self, theorem: Theorem) -> Result<Vec<spaces::Clause>> {
        match theorem {
            Theorem::Separated => spaces::thm1_clauses(self.p, self.q, self.s1, self.s2, self.alpha, self.d),
            Theorem::NonSeparated => spaces::thm2_clauses(self.p, self.q, self.s1, self.s2, self.alpha, self.d),
            Theorem::HighGrowth => spaces::thm3_clauses(self.p, self.s1, self.s2, self.t1, self.t2, self.d),
        }
    }

    pub fn verdict(&self, theorem: Theorem) -> Result<Verdict> {
        let holds = match theorem {
            Theorem::Separated => spaces::thm1_predicate(self.p, self.q, self.s1, self.s2, self.alpha, self.d)?,
            Theorem::NonSeparated => spaces::thm2_predicate(self.p, self.q, self.s1, self.s2, self.alpha, self.d)?,
            Theorem::HighGrowth => spaces::thm3_predicate(self.p, self.s1, self.s2, self.t1, self.t2, self.d)?,
        };
        Ok(if holds {
            Verdict::PredictedBounded
        } else {
            Verdict::PredictedUnbounded
        })
    }
}

/// One record of a sweep: a tuple at one family size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRow {
    pub experiment: String,
    pub theorem: u8,
    pub p: Exponent,
    pub q: Exponent,
    pub s1: f64,
    pub s2: f64,
    pub alpha: f64,
    pub t1: f64,
    pub t2: f64,
    pub d: usize,
    pub n_family: usize,
    pub ratio: f64,
    pub verdict: Verdict,
    pub growth_exponent: Option<f64>,
    pub measured: Option<Measured>,
    pub margin: f64,
    pub grid: String,
    pub window: String,
}

impl ExperimentRow {
    pub fn tuple(&self) -> ExponentTuple {
        ExponentTuple {
            p: self.p,
            q: self.q,
            s1: self.s1,
            s2: self.s2,
            alpha: self.alpha,
            t1: self.t1,
            t2: self.t2,
            d: self.d,
        }
    }
}

pub type RealMap = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
pub type ComplexMap = Arc<dyn Fn(&[f64]) -> Complex64 + Send + Sync>;

/// An operator handle for [`estimate_operator_ratio`].
#[derive(Clone)]
pub enum Operator {
    Identity,
    Fio { symbol: SymbolSpec, phase: PhaseSpec },
    /// `e^{iμ(D)}`.
    Multiplier(RealMap),
    /// Pointwise multiplication by `m(x)`.
    Multiplication(ComplexMap),
}

impl fmt::Debug for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Operator::Identity => write!(f, "Identity"),
            Operator::Fio { symbol, phase } => write!(f, "Fio({}, {})", symbol.label, phase.name),
            Operator::Multiplier(_) => write!(f, "Multiplier"),
            Operator::Multiplication(_) => write!(f, "Multiplication"),
        }
    }
}

impl Operator {
    pub fn apply(&self, f: &SampledFunction) -> Result<SampledFunction> {
        match self {
            Operator::Identity => Ok(f.clone()),
            Operator::Fio { symbol, phase } => fio::apply_fio(symbol, phase, f),
            Operator::Multiplier(mu) => Ok(fio::apply_multiplier(|xi| mu(xi), f)),
            Operator::Multiplication(m) => Ok(f.map(|x, v| v * m(x))),
        }
    }
}

/// Named test families. Every family is deterministic given its parameters and `N`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Family {
    /// `N` Gaussians `M_j T_j γ`, `j = 0, …, N−1`.
    GaussianAtoms,
    /// Bump lattices `F = Σ a_k h(x − k_α)` and their demodulations `e^{−2πiμ}F`, `μ = ⟨x⟩^{2−α}`,
    /// for `a ≡ 1` and a seeded random `a ∈ [1/2, 3/2]` on `k ∈ [N, 2N)`.
    Spf { alpha: f64, seed: u64 },
    /// Modulated trains `Σ a_k M_k ℱ^{−1}φ` with the same two coefficient choices.
    ModulatedTrain { seed: u64 },
    /// Chirp trains `Σ a_k g_k^α e^{2πi∇μ(k_α)x}` with `a ≡ 1` on `k ∈ [N, 2N)`.
    ChirpTrain { alpha: f64 },
}

impl Family {
    /// A grid that holds every member at size `n`.
    pub fn grid(&self, n: usize) -> Result<Grid> {
        check_size(n)?;
        match *self {
            Family::GaussianAtoms => sized_grid(n as f64 + 8.0, n as f64 + 8.0),
            Family::Spf { alpha, .. } => spf_grid(alpha, n),
            Family::ModulatedTrain { .. } => train_grid(n),
            Family::ChirpTrain { alpha } => chirp_grid(alpha, n),
        }
    }

    pub fn members(&self, n: usize) -> Result<Vec<SampledFunction>> {
        let grid = self.grid(n)?;
        match *self {
            Family::GaussianAtoms => {
                let g = tfr::gaussian_window(grid);
                (0..n)
                    .map(|j| crate::grid::translate_modulate(&g, &[j as f64], &[j as f64]))
                    .collect()
            }
            Family::Spf { alpha, seed } => {
                let mut out = Vec::with_capacity(4);
                for a in coefficient_sets(n, seed)? {
                    let f = extremal::build_f(&a, alpha, &Bump::default(), &grid)?;
                    out.push(demodulate(&f, alpha));
                    out.push(f);
                }
                Ok(out)
            }
            Family::ModulatedTrain { seed } => coefficient_sets(n, seed)?
                .iter()
                .map(|a| extremal::build_modulated_train(a, &train_bump(), &grid))
                .collect(),
            Family::ChirpTrain { alpha } => {
                let a = CoefficientSeq::ones(n as i64, n);
                Ok(vec![extremal::build_chirp_train(&a, alpha, &Plateau::default(), &grid)?])
            }
        }
    }
}

fn check_size(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::validation("family size must be positive"));
    }
    Ok(())
}

/// A 1D grid with half-width a power of two `≥ reach` whose upper quarter of frequencies lies
/// above `band`, so operator inputs pass the band-limit test.
fn sized_grid(reach: f64, band: f64) -> Result<Grid> {
    let half = reach.max(8.0).log2().ceil().exp2();
    let inv = (band.max(4.0) * 8.0 / 3.0).log2().ceil().exp2();
    Grid::new(1, (2.0 * half * inv) as usize, 1.0 / inv)
}

fn spf_grid(alpha: f64, n: usize) -> Result<Grid> {
    let kmax = (2 * n - 1) as f64;
    let ka = phase::k_alpha(&[kmax], alpha)?[0];
    let freq = phase::grad_mu(&[ka], alpha)[0];
    sized_grid(ka + 12.0, freq + 64.0)
}

fn train_bump() -> Bump {
    Bump { delta: 0.4 }
}

fn train_grid(n: usize) -> Result<Grid> {
    sized_grid(64.0, (2 * n) as f64 + 8.0)
}

fn chirp_grid(alpha: f64, n: usize) -> Result<Grid> {
    let kmax = (2 * n - 1) as f64;
    let ka = phase::k_alpha(&[kmax], alpha)?[0];
    let scale = japanese(&[kmax]).powf(alpha / (1.0 - alpha));
    let freq = phase::grad_mu(&[ka], alpha)[0];
    sized_grid(ka + 2.0 * Plateau::default().delta * scale + 8.0, freq + 8.0)
}

/// `a ≡ 1` and a seeded random `a ∈ [1/2, 3/2]`, both on `k ∈ [N, 2N)`.
fn coefficient_sets(n: usize, seed: u64) -> Result<Vec<CoefficientSeq>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (n as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    let random = (n..2 * n).map(|k| (vec![k as i64], rng.gen_range(0.5..1.5))).collect();
    Ok(vec![CoefficientSeq::ones(n as i64, n), CoefficientSeq::new(1, random)?])
}

fn mu(alpha: f64) -> Profile {
    Profile::JapanesePower { coef: 1.0, beta: 2.0 - alpha }
}

/// `e^{−2πiμ} f` with `μ = ⟨x⟩^{2−α}`.
fn demodulate(f: &SampledFunction, alpha: f64) -> SampledFunction {
    let m = mu(alpha);
    f.map(|x, v| v * Complex64::cis(-2.0 * PI * m.eval(x)))
}

/// Zeroes samples below `CHOP · sup |f|`, i.e. the round-off floor left by FFT round trips.
fn chop(f: SampledFunction) -> SampledFunction {
    let floor = CHOP * f.sup_norm();
    f.map(|_, v| if v.norm() <= floor { Complex64::default() } else { v })
}

fn space_norm(f: &SampledFunction, spec: &SpaceSpec, lattice: StftLattice) -> Result<f64> {
    if spec.kind == SpaceKind::MixedLebesgue {
        return Err(Error::validation("operator ratios need a modulation or amalgam space"));
    }
    let window = tfr::window_by_id(&spec.window, *f.grid())?;
    Ok(spaces::stft_norms(f, &window, lattice, &[spec.into()])?[0])
}

/// `max_f ‖Tf‖_Y / ‖f‖_X` over explicit members, with the specs' own lattices.
pub fn operator_ratio(op: &Operator, in_space: &SpaceSpec, out_space: &SpaceSpec, members: &[SampledFunction]) -> Result<f64> {
    ratio_over(op, in_space, out_space, members, |_| (in_space.lattice, out_space.lattice))
}

fn ratio_over<L>(op: &Operator, in_space: &SpaceSpec, out_space: &SpaceSpec, members: &[SampledFunction], lattice: L) -> Result<f64>
where
    L: Fn(&Grid) -> (StftLattice, StftLattice),
{
    if members.is_empty() {
        return Err(Error::validation("operator ratio over an empty family"));
    }
    let mut best = 0.0f64;
    for f in members {
        let (li, lo) = lattice(f.grid());
        let den = space_norm(f, in_space, li)?;
        if den == 0.0 {
            return Err(Error::validation("family member with zero input norm"));
        }
        let num = space_norm(&op.apply(f)?, out_space, lo)?;
        best = best.max(num / den);
    }
    Ok(best)
}

/// `max ‖Tf‖_Y / ‖f‖_X` over the named family at size `n`. Norms use the specs' windows and
/// weights on the unit-window lattice of the family grid with shift spacing [`SWEEP_DX`].
pub fn estimate_operator_ratio(op: &Operator, in_space: &SpaceSpec, out_space: &SpaceSpec, family: &Family, n: usize) -> Result<f64> {
    let members = family.members(n)?;
    ratio_over(op, in_space, out_space, &members, |g| {
        let l = StftLattice::for_unit_window(g, SWEEP_DX);
        (l, l)
    })
}

/// Least-squares slope of `ln ratio` against `ln n`.
pub fn fit_growth(ns: &[usize], ratios: &[f64]) -> Result<f64> {
    if ns.len() != ratios.len() || ns.len() < 2 {
        return Err(Error::validation("growth fit needs at least two (n, ratio) pairs"));
    }
    if ratios.iter().any(|r| !(*r > 0.0) || !r.is_finite()) {
        return Err(Error::validation("growth fit needs positive finite ratios"));
    }
    let xs: Vec<f64> = ns.iter().map(|&n| (n as f64).ln()).collect();
    let ys: Vec<f64> = ratios.iter().map(|r| r.ln()).collect();
    Ok(slope(&xs, &ys))
}

pub(crate) fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

fn exps() -> [Exponent; 3] {
    [Exponent::Finite(1.0), Exponent::Finite(2.0), Exponent::Infinity]
}

/// The default sweep grid of a theorem at `d = 1`.
pub fn default_tuples(theorem: Theorem) -> Vec<ExponentTuple> {
    let mut out = Vec::new();
    match theorem {
        Theorem::Separated => {
            for alpha in [0.0, 0.5] {
                for s1 in [0.0, 0.3, 0.8] {
                    for s2 in [0.0, 0.5] {
                        for p in exps() {
                            for q in exps() {
                                out.push(ExponentTuple::separated(p, q, s1, s2, alpha));
                            }
                        }
                    }
                }
            }
        }
        Theorem::NonSeparated => {
            for alpha in [0.0, 0.5] {
                for s1 in [0.0, 0.6, 1.2] {
                    for s2 in [0.0, 0.6, 1.2] {
                        for p in exps() {
                            for q in exps() {
                                out.push(ExponentTuple::separated(p, q, s1, s2, alpha));
                            }
                        }
                    }
                }
            }
        }
        Theorem::HighGrowth => {
            let ps = [
                Exponent::Finite(1.0),
                Exponent::Finite(4.0 / 3.0),
                Exponent::Finite(2.0),
                Exponent::Finite(4.0),
                Exponent::Infinity,
            ];
            for t1 in [0.0, 1.0, 2.0] {
                for t2 in [0.0, 1.0, 2.0] {
                    for s1 in [0.0, 0.5, 1.0] {
                        for s2 in [0.0, 0.5, 1.0] {
                            for p in ps {
                                out.push(ExponentTuple::high_growth(p, s1, s2, t1, t2));
                            }
                        }
                    }
                }
            }
        }
    }
    out
}

/// Sweep inputs besides the tuples.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub ns: Vec<usize>,
    pub seed: u64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            ns: DEFAULT_NS.to_vec(),
            seed: 0,
        }
    }
}

/// Ratios of one tuple group at one size: per `(p, q)`, one ratio per witness family.
struct Measurement {
    ratios: Vec<((Exponent, Exponent), Vec<f64>)>,
    grid: String,
}

impl Measurement {
    fn get(&self, p: Exponent, q: Exponent) -> Vec<f64> {
        self.ratios
            .iter()
            .find(|(k, _)| *k == (p, q))
            .map(|(_, r)| r.clone())
            .expect("ratio requested for every tuple of the group")
    }
}

/// Witness ratios of one tuple at one size, and the grid they were computed on.
struct Sample {
    witnesses: Vec<f64>,
    grid: String,
}

fn transpose(per_witness: Vec<Vec<f64>>, pqs: &[(Exponent, Exponent)]) -> Vec<((Exponent, Exponent), Vec<f64>)> {
    pqs.iter()
        .enumerate()
        .map(|(i, &pq)| (pq, per_witness.iter().map(|w| w[i]).collect()))
        .collect()
}

fn pq_requests(pqs: &[(Exponent, Exponent)]) -> Vec<NormRequest> {
    pqs.iter()
        .map(|&(p, q)| NormRequest {
            kind: SpaceKind::Modulation,
            p,
            q,
            weight: Weight::unit(1),
        })
        .collect()
}

/// All requested `M^{p,q}` norms of `f` in one STFT pass.
fn pq_norms(f: &SampledFunction, reqs: &[NormRequest]) -> Result<Vec<f64>> {
    let window = tfr::gaussian_window(*f.grid());
    spaces::stft_norms(f, &window, StftLattice::for_unit_window(f.grid(), SWEEP_DX), reqs)
}

/// Largest `‖out‖/‖in‖` per request over `(input, output)` pairs.
fn max_ratios(pairs: &[(SampledFunction, SampledFunction)], reqs: &[NormRequest]) -> Result<Vec<f64>> {
    let mut best = vec![0.0f64; reqs.len()];
    for (input, output) in pairs {
        let den = pq_norms(input, reqs)?;
        let num = pq_norms(output, reqs)?;
        for (b, (n, d)) in best.iter_mut().zip(num.iter().zip(&den)) {
            if *d == 0.0 {
                return Err(Error::validation("family member with zero input norm"));
            }
            *b = b.max(n / d);
        }
    }
    Ok(best)
}

fn separated_group(alpha: f64, s1: f64, s2: f64, n: usize, seed: u64, pqs: &[(Exponent, Exponent)]) -> Result<Measurement> {
    let family = Family::Spf { alpha, seed };
    let grid = family.grid(n)?;
    let op = Operator::Fio {
        symbol: SymbolSpec::power(s1, s2),
        phase: PhaseSpec::mild_growth(alpha, 1)?,
    };
    let lift = move |xi: &[f64]| Complex64::new(japanese(xi).powf(s2), 0.0);
    // members alternate: demodulated lattice, plain lattice
    let mut pairs = [Vec::new(), Vec::new()];
    for (i, m) in family.members(n)?.into_iter().enumerate() {
        let input = chop(fio::apply_fourier_multiplier(lift, &m));
        let output = chop(op.apply(&input)?);
        pairs[i % 2].push((input, output));
    }
    let reqs = pq_requests(pqs);
    let per_witness = pairs.iter().map(|p| max_ratios(p, &reqs)).collect::<Result<Vec<_>>>()?;
    Ok(Measurement {
        ratios: transpose(per_witness, pqs),
        grid: grid.descriptor(),
    })
}

fn nonseparated_group(alpha: f64, s1: f64, s2: f64, n: usize, seed: u64, pqs: &[(Exponent, Exponent)]) -> Result<Measurement> {
    let reqs = pq_requests(pqs);
    let nf = n as f64;

    // constant output of a pure-frequency phase, cut to the dyadic block N/4 ≤ |x| ≤ 4N
    let grid_a = Grid::new(1, (2.0 * (4.0 * nf + 8.0).log2().ceil().exp2() * 8.0) as usize, 1.0 / 8.0)?;
    let op_a = Operator::Fio {
        symbol: SymbolSpec::power(s1, s2).with_envelope(
            format!("annulus(x/{n})"),
            Arc::new(move |x: &[f64]| Complex64::new(extremal::annulus(&[x[0] / nf]), 0.0)),
        ),
        phase: PhaseSpec::nonseparated_xi(1.0, 1.0, 1),
    };
    let gauss = tfr::gaussian_window(grid_a);
    let out_a = chop(op_a.apply(&gauss)?);
    let ra = max_ratios(&[(gauss, out_a)], &reqs)?;

    // modulated trains against a fixed cut-off chirp
    let fam_b = Family::ModulatedTrain { seed };
    let grid_b = fam_b.grid(n)?;
    let fixed = Plateau { delta: 1.0 };
    let op_b = Operator::Fio {
        symbol: SymbolSpec::power(s1, s2).with_envelope(
            "rho(x)",
            Arc::new(move |x: &[f64]| Complex64::new(fixed.eval(x), 0.0)),
        ),
        phase: PhaseSpec::nonseparated_x(alpha, 1)?,
    };
    let mut pairs_b = Vec::new();
    for f in fam_b.members(n)? {
        let out = chop(op_b.apply(&f)?);
        pairs_b.push((chop(f), out));
    }
    let rb = max_ratios(&pairs_b, &reqs)?;

    // a fixed input against the envelope e^{−2πiμ} G_N
    let fam_c = Family::ChirpTrain { alpha };
    let grid_c = fam_c.grid(n)?;
    let train = fam_c.members(n)?.remove(0);
    let m = mu(alpha);
    let env: fio::Envelope = Arc::new(move |x: &[f64]| {
        train.samples()[train.grid().wrap_index(x[0])] * Complex64::cis(-2.0 * PI * m.eval(x))
    });
    let op_c = Operator::Fio {
        symbol: SymbolSpec::power(s1, s2).with_envelope(format!("chirp_train(N={n})"), env),
        phase: PhaseSpec::nonseparated_x(alpha, 1)?,
    };
    let gauss_c = tfr::gaussian_window(grid_c);
    let out_c = chop(op_c.apply(&gauss_c)?);
    let rc = max_ratios(&[(gauss_c, out_c)], &reqs)?;

    Ok(Measurement {
        ratios: transpose(vec![ra, rb, rc], pqs),
        grid: format!("{}+{}+{}", grid_a.descriptor(), grid_b.descriptor(), grid_c.descriptor()),
    })
}

/// Group key of the separated and non-separated sweeps.
fn group_key(t: &ExponentTuple) -> [u64; 3] {
    [t.alpha.to_bits(), t.s1.to_bits(), t.s2.to_bits()]
}

/// Runs the necessity families of `theorem` over `tuples` at every size in `cfg.ns`.
/// Rows come back in tuple order, then size order.
pub fn threshold_sweep(theorem: Theorem, tuples: &[ExponentTuple], cfg: &SweepConfig) -> Result<Vec<ExperimentRow>> {
    if tuples.is_empty() {
        return Err(Error::validation("sweep needs at least one exponent tuple"));
    }
    if cfg.ns.is_empty() {
        return Err(Error::validation("sweep needs at least one family size"));
    }
    for &n in &cfg.ns {
        check_size(n)?;
    }
    let mut verdicts = Vec::with_capacity(tuples.len());
    for t in tuples {
        if t.d != 1 {
            return Err(Error::domain(format!("sweeps run at d = 1, got d = {}", t.d)));
        }
        let margin = spaces::threshold_margin(&t.clauses(theorem)?);
        verdicts.push((t.verdict(theorem)?, margin));
    }
    let measured: Vec<Vec<Sample>> = match theorem {
        Theorem::Separated | Theorem::NonSeparated => measure_pq_groups(theorem, tuples, cfg)?,
        Theorem::HighGrowth => measure_high_growth(tuples, &cfg.ns)?,
    };
    let mut rows = Vec::with_capacity(tuples.len() * cfg.ns.len());
    for ((t, (verdict, margin)), per_n) in tuples.iter().zip(verdicts).zip(measured) {
        let fit = witness_fit(&cfg.ns, &per_n);
        for (&n, sample) in cfg.ns.iter().zip(per_n) {
            let ratio = sample.witnesses.iter().copied().fold(0.0, f64::max);
            let grid = sample.grid;
            rows.push(ExperimentRow {
                experiment: theorem.experiment_id().to_string(),
                theorem: theorem.number(),
                p: t.p,
                q: t.q,
                s1: t.s1,
                s2: t.s2,
                alpha: t.alpha,
                t1: t.t1,
                t2: t.t2,
                d: t.d,
                n_family: n,
                ratio,
                verdict,
                growth_exponent: fit,
                measured: fit.map(Measured::from_fit),
                margin,
                grid,
                window: DEFAULT_WINDOW.to_string(),
            });
        }
    }
    Ok(rows)
}

/// Largest fitted exponent over the witness families; `None` with fewer than two sizes.
fn witness_fit(ns: &[usize], per_n: &[Sample]) -> Option<f64> {
    if ns.len() < 2 {
        return None;
    }
    let count = per_n.first()?.witnesses.len();
    (0..count)
        .map(|w| {
            let r: Vec<f64> = per_n.iter().map(|s| s.witnesses[w]).collect();
            fit_growth(ns, &r).ok()
        })
        .try_fold(f64::NEG_INFINITY, |best, e| e.map(|e| best.max(e)))
}

fn measure_pq_groups(theorem: Theorem, tuples: &[ExponentTuple], cfg: &SweepConfig) -> Result<Vec<Vec<Sample>>> {
    let mut keys: Vec<[u64; 3]> = Vec::new();
    let mut members: HashMap<[u64; 3], Vec<(Exponent, Exponent)>> = HashMap::new();
    for t in tuples {
        let k = group_key(t);
        let e = members.entry(k).or_insert_with(|| {
            keys.push(k);
            Vec::new()
        });
        if !e.contains(&(t.p, t.q)) {
            e.push((t.p, t.q));
        }
    }
    let jobs: Vec<([u64; 3], usize)> = keys.iter().flat_map(|&k| cfg.ns.iter().map(move |&n| (k, n))).collect();
    let results = par::map_range(jobs.len(), |j| {
        let (k, n) = jobs[j];
        let (alpha, s1, s2) = (f64::from_bits(k[0]), f64::from_bits(k[1]), f64::from_bits(k[2]));
        let pqs = &members[&k];
        let seed = cfg.seed.wrapping_add(j as u64 / cfg.ns.len() as u64);
        match theorem {
            Theorem::Separated => separated_group(alpha, s1, s2, n, seed, pqs),
            _ => nonseparated_group(alpha, s1, s2, n, seed, pqs),
        }
    });
    let mut table: HashMap<([u64; 3], usize), Measurement> = HashMap::new();
    for (job, r) in jobs.into_iter().zip(results) {
        table.insert(job, r?);
    }
    Ok(tuples
        .iter()
        .map(|t| {
            cfg.ns
                .iter()
                .map(|&n| {
                    let m = &table[&(group_key(t), n)];
                    Sample {
                        witnesses: m.get(t.p, t.q),
                        grid: m.grid.clone(),
                    }
                })
                .collect()
        })
        .collect())
}

/// `μ(k + y) − μ(k) − μ'(k) y` for `μ = ⟨·⟩^{2+t}`.
fn taylor_tail(t: f64, k: f64, y: f64) -> f64 {
    let m = Profile::JapanesePower { coef: 1.0, beta: 2.0 + t };
    let mut g = [0.0];
    m.grad(&[k], &mut g);
    m.eval(&[k + y]) - m.eval(&[k]) - g[0] * y
}

/// Grid for a unit Gaussian carrying the chirp `e^{iτ}` of curvature `⟨k⟩^t`.
fn atom_grid(t: f64, k: f64) -> Result<Grid> {
    let beta = 2.0 + t;
    let curv = beta * (beta - 1.0) * japanese(&[k + 4.0]).powf(t);
    let band = curv * 3.6 / (2.0 * PI) + 6.0;
    let inv = (2.5 * band).log2().ceil().exp2().max(16.0);
    Grid::new(1, (16.0 * inv) as usize, 1.0 / inv)
}

fn exponent_requests(rs: &[Exponent]) -> Vec<NormRequest> {
    pq_requests(&rs.iter().map(|&r| (r, r)).collect::<Vec<_>>())
}

fn atom_norms(t: f64, k: f64, s: f64, sign: f64, rs: &[Exponent]) -> Result<Vec<f64>> {
    let grid = atom_grid(t, k)?;
    let c = 2f64.powf(0.25);
    let f = SampledFunction::from_fn(grid, |y| {
        let amp = c * (-PI * y[0] * y[0]).exp() * japanese(&[y[0] + k]).powf(s);
        Complex64::from_polar(amp, sign * taylor_tail(t, k, y[0]))
    });
    let f = chop(f);
    spaces::stft_norms(
        &f,
        &tfr::gaussian_window(grid),
        StftLattice::for_unit_window(&grid, 0.125),
        &exponent_requests(rs),
    )
}

fn plain_norms(f: SampledFunction, rs: &[Exponent]) -> Result<Vec<f64>> {
    let grid = *f.grid();
    spaces::stft_norms(
        &chop(f),
        &tfr::gaussian_window(grid),
        StftLattice::for_unit_window(&grid, 0.125),
        &exponent_requests(rs),
    )
}

/// Per tuple and size, two witnesses: `max_r A_r(k)/B0_r` and `max_r C_r/B_r(k)` over
/// `r ∈ {p, p'}`, where
/// `A_r(k) = ‖⟨y+k⟩^{−s1} e^{iτ1(y)} γ‖_{M^r}` is `‖T f‖` for `f = ⟨D⟩^{s2} T_k γ` under the
/// x-chirp phase, and `B_r(k) = ‖⟨η+k⟩^{s2} e^{−iτ2(η)} γ‖_{M^r}` is `‖f‖` for
/// `f̂ = ⟨η⟩^{s2} e^{−iμ2} T_k γ` under the ξ-chirp phase, both after translation and
/// demodulation, which leave `M^r` norms unchanged.
fn measure_high_growth(tuples: &[ExponentTuple], ns: &[usize]) -> Result<Vec<Vec<Sample>>> {
    let mut rs: Vec<Exponent> = Vec::new();
    for t in tuples {
        for r in [t.p, t.p.conjugate()] {
            if !rs.contains(&r) {
                rs.push(r);
            }
        }
    }
    let ridx = |r: Exponent| rs.iter().position(|x| *x == r).expect("collected above");
    let mut atom_jobs: Vec<(u64, u64, usize, bool)> = Vec::new();
    let mut push = |job: (u64, u64, usize, bool)| {
        if !atom_jobs.contains(&job) {
            atom_jobs.push(job);
        }
    };
    for t in tuples {
        for &n in ns {
            push((t.t1.to_bits(), t.s1.to_bits(), n, true));
            push((t.t2.to_bits(), t.s2.to_bits(), n, false));
        }
    }
    let atoms = par::map_range(atom_jobs.len(), |j| {
        let (t, s, n, x_side) = atom_jobs[j];
        let (t, s) = (f64::from_bits(t), f64::from_bits(s));
        if x_side {
            atom_norms(t, n as f64, -s, 1.0, &rs)
        } else {
            atom_norms(t, n as f64, s, -1.0, &rs)
        }
    });
    let mut atom_table = HashMap::new();
    for (job, a) in atom_jobs.iter().zip(atoms) {
        atom_table.insert(*job, (a?, atom_grid(f64::from_bits(job.0), job.2 as f64)?.descriptor()));
    }
    let small = Grid::new(1, 256, 1.0 / 16.0)?;
    let mut fixed: HashMap<(u64, bool), Vec<f64>> = HashMap::new();
    for t in tuples {
        let kb0 = (t.s2.to_bits(), false);
        if !fixed.contains_key(&kb0) {
            let s2 = t.s2;
            let lifted = fio::apply_fourier_multiplier(
                move |xi| Complex64::new(japanese(xi).powf(s2), 0.0),
                &tfr::gaussian_window(small),
            );
            fixed.insert(kb0, plain_norms(lifted, &rs)?);
        }
        let kc = (t.s1.to_bits(), true);
        if !fixed.contains_key(&kc) {
            let s1 = t.s1;
            let damped = tfr::gaussian_window(small).map(|x, v| v * japanese(x).powf(-s1));
            fixed.insert(kc, plain_norms(damped, &rs)?);
        }
    }
    Ok(tuples
        .iter()
        .map(|t| {
            ns.iter()
                .map(|&n| {
                    let (a, ga) = &atom_table[&(t.t1.to_bits(), t.s1.to_bits(), n, true)];
                    let (b, gb) = &atom_table[&(t.t2.to_bits(), t.s2.to_bits(), n, false)];
                    let b0 = &fixed[&(t.s2.to_bits(), false)];
                    let c = &fixed[&(t.s1.to_bits(), true)];
                    let (mut x_side, mut xi_side) = (0.0f64, 0.0f64);
                    for r in [t.p, t.p.conjugate()] {
                        let i = ridx(r);
                        x_side = x_side.max(a[i] / b0[i]);
                        xi_side = xi_side.max(c[i] / b[i]);
                    }
                    Sample {
                        witnesses: vec![x_side, xi_side],
                        grid: format!("{ga}+{gb}"),
                    }
                })
                .collect()
        })
        .collect())
}

/// The headline statistic: median fitted growth of each verdict class outside the exclusion band.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparationSummary {
    pub tuples: usize,
    pub excluded: usize,
    pub bounded: usize,
    pub unbounded: usize,
    pub median_bounded: f64,
    pub median_unbounded: f64,
    /// Share of predicted-bounded tuples whose fit is below [`BOUNDED_FIT`].
    pub bounded_flat_share: f64,
}

impl SeparationSummary {
    pub fn gap(&self) -> f64 {
        self.median_unbounded - self.median_bounded
    }

    pub fn passes(&self) -> bool {
        self.gap() >= REQUIRED_GAP && self.bounded_flat_share >= REQUIRED_FLAT_SHARE
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(|a, b| a.total_cmp(b));
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Collapses rows to tuples (first row per tuple) and evaluates the separation statistic.
pub fn separation_summary(rows: &[ExperimentRow]) -> Result<SeparationSummary> {
    let mut seen: Vec<(ExponentTuple, u8)> = Vec::new();
    let mut bounded = Vec::new();
    let mut unbounded = Vec::new();
    let mut excluded = 0;
    for r in rows {
        let key = (r.tuple(), r.theorem);
        if seen.contains(&key) {
            continue;
        }
        seen.push(key);
        let Some(fit) = r.growth_exponent else {
            return Err(Error::validation("separation statistic needs fitted growth exponents"));
        };
        if r.margin.abs() < EXCLUSION_BAND - 1e-9 {
            excluded += 1;
            continue;
        }
        match r.verdict {
            Verdict::PredictedBounded => bounded.push(fit),
            Verdict::PredictedUnbounded => unbounded.push(fit),
        }
    }
    let flat = bounded.iter().filter(|e| **e < BOUNDED_FIT).count();
    Ok(SeparationSummary {
        tuples: seen.len(),
        excluded,
        bounded: bounded.len(),
        unbounded: unbounded.len(),
        bounded_flat_share: if bounded.is_empty() { 0.0 } else { flat as f64 / bounded.len() as f64 },
        median_bounded: median(bounded),
        median_unbounded: median(unbounded),
    })
}

/// Output format of [`emit_report`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Svg,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(ReportFormat::Csv),
            "svg" => Ok(ReportFormat::Svg),
            _ => Err(Error::Parse(format!("unknown report format {s:?}"))),
        }
    }
}

pub fn emit_report(rows: &[ExperimentRow], format: ReportFormat) -> Result<Vec<u8>> {
    if rows.is_empty() {
        return Err(Error::validation("no rows to report"));
    }
    match format {
        ReportFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            for r in rows {
                w.serialize(r)?;
            }
            w.into_inner().map_err(|e| Error::Io(e.into_error()))
        }
        ReportFormat::Svg => Ok(svg(rows).into_bytes()),
    }
}

/// Parses the CSV produced by [`emit_report`].
pub fn parse_report(bytes: &[u8]) -> Result<Vec<ExperimentRow>> {
    let mut r = csv::Reader::from_reader(bytes);
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

fn svg(rows: &[ExperimentRow]) -> String {
    let (w, h, pad) = (640.0, 420.0, 50.0);
    let fits: Vec<f64> = rows.iter().filter_map(|r| r.growth_exponent).collect();
    let lo = fits.iter().copied().fold(-0.5f64, f64::min).floor();
    let hi = fits.iter().copied().fold(1.0f64, f64::max).ceil();
    let y_of = |e: f64| h - pad - (e - lo) / (hi - lo) * (h - 2.0 * pad);
    let mut s = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n\
         <line x1=\"{pad}\" y1=\"{pad}\" x2=\"{pad}\" y2=\"{}\" stroke=\"black\"/>\n",
        h - pad
    );
    for (e, label) in [(BOUNDED_FIT, "0.1"), (UNBOUNDED_FIT, "0.15"), (0.0, "0")] {
        let y = y_of(e);
        s.push_str(&format!(
            "<line x1=\"{pad}\" y1=\"{y:.2}\" x2=\"{}\" y2=\"{y:.2}\" stroke=\"#bbb\" stroke-dasharray=\"4 3\"/>\n\
             <text x=\"{}\" y=\"{:.2}\" font-size=\"11\" text-anchor=\"end\">{label}</text>\n",
            w - pad,
            pad - 4.0,
            y + 4.0
        ));
    }
    let series = [
        (Verdict::PredictedBounded, "predicted-bounded", "#1f77b4", 0.3),
        (Verdict::PredictedUnbounded, "predicted-unbounded", "#d62728", 0.7),
    ];
    let mut seen: Vec<(ExponentTuple, u8)> = Vec::new();
    let mut points: Vec<Vec<f64>> = vec![Vec::new(), Vec::new()];
    for r in rows {
        let key = (r.tuple(), r.theorem);
        if seen.contains(&key) {
            continue;
        }
        seen.push(key);
        if let Some(e) = r.growth_exponent {
            points[usize::from(r.verdict == Verdict::PredictedUnbounded)].push(e);
        }
    }
    for ((_, name, color, xf), pts) in series.iter().zip(&points) {
        s.push_str(&format!("<g id=\"{name}\" class=\"series\" fill=\"{color}\">\n"));
        let cx = pad + xf * (w - 2.0 * pad);
        for (i, e) in pts.iter().enumerate() {
            let jitter = ((i * 37) % 61) as f64 - 30.0;
            s.push_str(&format!(
                "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill-opacity=\"0.7\"/>\n",
                cx + jitter * 1.5,
                y_of(*e)
            ));
        }
        s.push_str(&format!(
            "<text x=\"{cx:.2}\" y=\"{}\" font-size=\"12\" text-anchor=\"middle\">{name} ({})</text>\n</g>\n",
            h - pad + 20.0,
            pts.len()
        ));
    }
    s.push_str(&format!(
        "<text x=\"14\" y=\"{:.2}\" font-size=\"12\" transform=\"rotate(-90 14 {:.2})\">fitted growth exponent</text>\n</svg>\n",
        h / 2.0,
        h / 2.0
    ));
    s
}
