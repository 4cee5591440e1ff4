//! Weights, function-space norms and the exponent predicates.
//!
//! Sums carry their measure: a norm over `x` multiplies by `Δx^d`, a norm over `ξ` by `Δξ^d`,
//! except at exponent `∞`, where the supremum carries no measure factor.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{japanese, Grid, SampledFunction, SampledFunction2D, MAX_DIM};
use crate::tfr::{self, StftLattice, TFMatrix, TFMatrix4, DEFAULT_MEMORY_CAP, DEFAULT_WINDOW};

/// Default `ε` in the weights `v_{d+ε, ·}`.
pub const DEFAULT_EPS: f64 = 0.5;

/// A Lebesgue exponent in `[1, ∞]`; `∞` is its own value, never a large finite surrogate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Exponent {
    Finite(f64),
    Infinity,
}

impl Exponent {
    pub fn new(p: f64) -> Result<Self> {
        if p == f64::INFINITY {
            Ok(Exponent::Infinity)
        } else if p.is_finite() && p >= 1.0 {
            Ok(Exponent::Finite(p))
        } else {
            Err(Error::domain(format!("exponent {p} outside [1, inf]")))
        }
    }

    /// `1/p`, with `1/∞ = 0`.
    pub fn recip(self) -> f64 {
        match self {
            Exponent::Finite(p) => 1.0 / p,
            Exponent::Infinity => 0.0,
        }
    }

    /// The dual exponent `p'` with `1/p + 1/p' = 1`.
    pub fn conjugate(self) -> Exponent {
        match self {
            Exponent::Infinity => Exponent::Finite(1.0),
            Exponent::Finite(p) if p == 1.0 => Exponent::Infinity,
            Exponent::Finite(p) => Exponent::Finite(p / (p - 1.0)),
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Exponent::Infinity)
    }

    pub(crate) fn check(self) -> Result<Self> {
        match self {
            Exponent::Finite(p) if !(p.is_finite() && p >= 1.0) => {
                Err(Error::domain(format!("exponent {p} outside [1, inf]")))
            }
            e => Ok(e),
        }
    }

    /// `v^p` for finite `p`, with cheap paths for 1 and 2.
    #[inline]
    fn pow(self, v: f64) -> f64 {
        match self {
            Exponent::Finite(p) if p == 1.0 => v,
            Exponent::Finite(p) if p == 2.0 => v * v,
            Exponent::Finite(p) => v.powf(p),
            Exponent::Infinity => v,
        }
    }

    #[inline]
    fn root(self, v: f64) -> f64 {
        match self {
            Exponent::Finite(p) if p == 1.0 => v,
            Exponent::Finite(p) if p == 2.0 => v.sqrt(),
            Exponent::Finite(p) => v.powf(1.0 / p),
            Exponent::Infinity => v,
        }
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Exponent::Finite(p) => write!(f, "{p}"),
            Exponent::Infinity => write!(f, "inf"),
        }
    }
}

impl FromStr for Exponent {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "inf" | "infinity" | "∞" | "Inf" => Ok(Exponent::Infinity),
            t => Exponent::new(
                t.parse::<f64>()
                    .map_err(|_| Error::Parse(format!("bad exponent {t:?}")))?,
            ),
        }
    }
}

impl From<Exponent> for String {
    fn from(e: Exponent) -> String {
        e.to_string()
    }
}

impl TryFrom<String> for Exponent {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl serde::Serialize for Exponent {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> serde::Deserialize<'de> for Exponent {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// The power weight `v_{s,t}(z1, z2) = ⟨z1⟩^s ⟨z2⟩^t` on `R^{2d}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Weight {
    pub s: f64,
    pub t: f64,
    pub d: usize,
}

impl Weight {
    pub fn new(s: f64, t: f64, d: usize) -> Self {
        Weight { s, t, d }
    }

    pub fn unit(d: usize) -> Self {
        Weight { s: 0.0, t: 0.0, d }
    }

    pub fn is_unit(&self) -> bool {
        self.s == 0.0 && self.t == 0.0
    }
}

/// `⟨z1⟩^s ⟨z2⟩^t` where `z = (z1, z2)` splits into two blocks of `w.d` coordinates.
pub fn weight_eval(w: &Weight, z: &[f64]) -> f64 {
    let (a, b) = z.split_at(w.d.min(z.len()));
    japanese(a).powf(w.s) * japanese(b).powf(w.t)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpaceKind {
    /// `M^{p,q}_m`: inner norm over time, outer over frequency.
    Modulation,
    /// `W^{p,q}_m`: inner norm over frequency, outer over time.
    Amalgam,
    /// The plain mixed Lebesgue norm `L^{p,q}_m` of a function on `R^{2d}`.
    MixedLebesgue,
}

/// Identifies a modulation, amalgam or mixed Lebesgue norm.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceSpec {
    pub p: Exponent,
    pub q: Exponent,
    pub weight: Weight,
    pub kind: SpaceKind,
    pub window: String,
    pub lattice: StftLattice,
}

impl SpaceSpec {
    pub fn modulation(p: Exponent, q: Exponent, weight: Weight) -> Self {
        SpaceSpec {
            p,
            q,
            weight,
            kind: SpaceKind::Modulation,
            window: DEFAULT_WINDOW.to_string(),
            lattice: StftLattice::full(),
        }
    }

    pub fn amalgam(p: Exponent, q: Exponent, weight: Weight) -> Self {
        SpaceSpec {
            kind: SpaceKind::Amalgam,
            ..Self::modulation(p, q, weight)
        }
    }

    pub fn with_lattice(mut self, lattice: StftLattice) -> Self {
        self.lattice = lattice;
        self
    }

    pub fn with_window(mut self, window: impl Into<String>) -> Self {
        self.window = window.into();
        self
    }

    /// E.g. `M^{1,inf}_v(0.5,0)`.
    pub fn descriptor(&self) -> String {
        let letter = match self.kind {
            SpaceKind::Modulation => "M",
            SpaceKind::Amalgam => "W",
            SpaceKind::MixedLebesgue => "L",
        };
        if self.weight.is_unit() {
            format!("{letter}^{{{},{}}}", self.p, self.q)
        } else {
            format!("{letter}^{{{},{}}}_v({},{})", self.p, self.q, self.weight.s, self.weight.t)
        }
    }
}

/// One nested norm to be evaluated on an STFT stream.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormRequest {
    pub kind: SpaceKind,
    pub p: Exponent,
    pub q: Exponent,
    pub weight: Weight,
}

impl From<&SpaceSpec> for NormRequest {
    fn from(s: &SpaceSpec) -> Self {
        NormRequest {
            kind: s.kind,
            p: s.p,
            q: s.q,
            weight: s.weight,
        }
    }
}

#[derive(Debug, Clone)]
enum Acc {
    PerXi(Vec<f64>),
    Scalar(f64),
}

/// Streaming reduction of `|V(x, ξ)| m(x, ξ)` to several nested norms at once.
struct NormStream {
    reqs: Vec<NormRequest>,
    xi_weights: Vec<Vec<f64>>,
    dx: f64,
    dxi: f64,
    x_grid: Grid,
}

impl NormStream {
    fn new(reqs: &[NormRequest], x_grid: Grid, xi_grid: Grid) -> Result<Self> {
        for r in reqs {
            r.p.check()?;
            r.q.check()?;
            if r.kind == SpaceKind::MixedLebesgue {
                return Err(Error::structural("mixed Lebesgue norms are not STFT norms"));
            }
        }
        let xi_weights = reqs
            .iter()
            .map(|r| {
                let mut z = [0.0; MAX_DIM];
                (0..xi_grid.len())
                    .map(|k| {
                        xi_grid.point(k, &mut z);
                        japanese(&z[..xi_grid.dim()]).powf(r.weight.t)
                    })
                    .collect()
            })
            .collect();
        Ok(NormStream {
            reqs: reqs.to_vec(),
            xi_weights,
            dx: x_grid.cell(),
            dxi: xi_grid.cell(),
            x_grid,
        })
    }

    fn init(&self) -> Vec<Acc> {
        self.reqs
            .iter()
            .map(|r| match r.kind {
                SpaceKind::Modulation => Acc::PerXi(vec![0.0; self.xi_weights[0].len()]),
                _ => Acc::Scalar(0.0),
            })
            .collect()
    }

    fn fold(&self, acc: &mut [Acc], x_idx: &[usize], spectrum: &[Complex64]) {
        let mut x = [0.0; MAX_DIM];
        for (a, &i) in x_idx.iter().enumerate() {
            x[a] = self.x_grid.coord(i);
        }
        let jx = japanese(&x[..x_idx.len()]);
        let mags: Vec<f64> = spectrum.iter().map(|z| z.norm()).collect();
        for (k, r) in self.reqs.iter().enumerate() {
            let wx = if r.weight.s == 0.0 { 1.0 } else { jx.powf(r.weight.s) };
            let wxi = &self.xi_weights[k];
            match (&mut acc[k], r.kind) {
                (Acc::PerXi(v), _) => match r.p {
                    Exponent::Infinity => {
                        for ((a, m), w) in v.iter_mut().zip(&mags).zip(wxi) {
                            *a = a.max(m * wx * w);
                        }
                    }
                    p => {
                        for ((a, m), w) in v.iter_mut().zip(&mags).zip(wxi) {
                            *a += p.pow(m * wx * w) * self.dx;
                        }
                    }
                },
                (Acc::Scalar(s), _) => {
                    let inner = match r.q {
                        Exponent::Infinity => mags.iter().zip(wxi).map(|(m, w)| m * w).fold(0.0, f64::max) * wx,
                        q => q.root(mags.iter().zip(wxi).map(|(m, w)| q.pow(m * w * wx)).sum::<f64>() * self.dxi),
                    };
                    match r.p {
                        Exponent::Infinity => *s = s.max(inner),
                        p => *s += p.pow(inner) * self.dx,
                    }
                }
            }
        }
    }

    fn merge(&self, total: &mut [Acc], part: Vec<Acc>) {
        for ((t, p), r) in total.iter_mut().zip(part).zip(&self.reqs) {
            let inf = match r.kind {
                SpaceKind::Modulation => r.p.is_infinite(),
                _ => r.p.is_infinite(),
            };
            match (t, p) {
                (Acc::PerXi(a), Acc::PerXi(b)) => {
                    for (x, y) in a.iter_mut().zip(b) {
                        if inf {
                            *x = x.max(y);
                        } else {
                            *x += y;
                        }
                    }
                }
                (Acc::Scalar(a), Acc::Scalar(b)) => {
                    if inf {
                        *a = a.max(b);
                    } else {
                        *a += b;
                    }
                }
                _ => unreachable!("accumulator kinds are fixed per request"),
            }
        }
    }

    fn finish(&self, total: Vec<Acc>) -> Vec<f64> {
        total
            .into_iter()
            .zip(&self.reqs)
            .map(|(acc, r)| match acc {
                Acc::PerXi(v) => {
                    let inner = v.into_iter().map(|a| r.p.root(a));
                    match r.q {
                        Exponent::Infinity => inner.fold(0.0, f64::max),
                        q => q.root(inner.map(|a| q.pow(a)).sum::<f64>() * self.dxi),
                    }
                }
                Acc::Scalar(s) => r.p.root(s),
            })
            .collect()
    }
}

/// Evaluates several STFT norms of `f` in a single pass over the frames of `V_g f`.
pub fn stft_norms(
    f: &SampledFunction,
    window: &SampledFunction,
    lattice: StftLattice,
    reqs: &[NormRequest],
) -> Result<Vec<f64>> {
    let geom = tfr::StftGeometry::new(f.grid(), lattice)?;
    let stream = NormStream::new(reqs, geom.x_grid, geom.xi_grid)?;
    let (_, parts) = tfr::stft_fold(f, window, lattice, || stream.init(), |acc, idx, spec| {
        stream.fold(acc, idx, spec)
    })?;
    let mut total = stream.init();
    for p in parts {
        stream.merge(&mut total, p);
    }
    Ok(stream.finish(total))
}

fn matrix_norm(values: &TFMatrix, req: NormRequest) -> Result<f64> {
    let stream = NormStream::new(&[req], *values.x_grid(), *values.xi_grid())?;
    let mut total = stream.init();
    let nxi = values.xi_grid().len();
    let d = values.x_grid().dim();
    for x in 0..values.x_grid().len() {
        let mut part = stream.init();
        let idx = values.x_grid().unravel(x);
        stream.fold(&mut part, &idx[..d], &values.values()[x * nxi..(x + 1) * nxi]);
        stream.merge(&mut total, part);
    }
    Ok(stream.finish(total).remove(0))
}

/// `(Σ_ξ (Σ_x |V|^p m^p Δx)^{q/p} Δξ)^{1/q}` with suprema at `∞`.
pub fn mixed_norm(values: &TFMatrix, p: Exponent, q: Exponent, w: &Weight) -> Result<f64> {
    matrix_norm(
        values,
        NormRequest {
            kind: SpaceKind::Modulation,
            p,
            q,
            weight: *w,
        },
    )
}

/// The swapped nesting `(Σ_x (Σ_ξ |V|^q m^q Δξ)^{p/q} Δx)^{1/p}`.
pub fn mixed_norm_swapped(values: &TFMatrix, p: Exponent, q: Exponent, w: &Weight) -> Result<f64> {
    matrix_norm(
        values,
        NormRequest {
            kind: SpaceKind::Amalgam,
            p,
            q,
            weight: *w,
        },
    )
}

fn spec_norm(f: &SampledFunction, spec: &SpaceSpec) -> Result<f64> {
    let window = tfr::window_by_id(&spec.window, *f.grid())?;
    Ok(stft_norms(f, &window, spec.lattice, &[spec.into()])?[0])
}

/// `‖f‖_{M^{p,q}_m}` with the spec's window and lattice.
pub fn modulation_norm(f: &SampledFunction, spec: &SpaceSpec) -> Result<f64> {
    if spec.kind != SpaceKind::Modulation {
        return Err(Error::validation("modulation_norm needs a modulation space spec"));
    }
    spec_norm(f, spec)
}

/// `‖f‖_{W^{p,q}_m}`: inner norm over frequency, outer over time.
pub fn amalgam_norm(f: &SampledFunction, spec: &SpaceSpec) -> Result<f64> {
    if spec.kind != SpaceKind::Amalgam {
        return Err(Error::validation("amalgam_norm needs an amalgam space spec"));
    }
    spec_norm(f, spec)
}

/// Configuration of the 4D norms: window, lattice and memory budget.
#[derive(Debug, Clone, PartialEq)]
pub struct Stft4Config {
    pub window: String,
    pub lattice: StftLattice,
    pub cap: usize,
}

impl Default for Stft4Config {
    fn default() -> Self {
        Stft4Config {
            window: DEFAULT_WINDOW.to_string(),
            lattice: StftLattice::full(),
            cap: DEFAULT_MEMORY_CAP,
        }
    }
}

/// `‖F‖_{W^{∞,∞}_{1⊗v_{d+ε,d+ε}}} = sup |𝒱_Ψ F(z, ζ)| ⟨ζ1⟩^{d+ε} ⟨ζ2⟩^{d+ε}`.
pub fn special_amalgam_norm(f: &SampledFunction2D, eps: f64) -> Result<f64> {
    special_amalgam_norm_with(f, eps, &Stft4Config::default())
}

pub fn special_amalgam_norm_with(f: &SampledFunction2D, eps: f64, cfg: &Stft4Config) -> Result<f64> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::domain(format!("eps must be positive, got {eps}")));
    }
    let grid = *f.grid();
    if grid.dim() % 2 != 0 {
        return Err(Error::structural("special amalgam norm needs a function on R^(2d)"));
    }
    let d = grid.dim() / 2;
    let psi = tfr::window_by_id(&cfg.window, grid)?;
    let geom = tfr::StftGeometry::new(&grid, cfg.lattice)?;
    let mut z = [0.0; MAX_DIM];
    let wts: Vec<f64> = (0..geom.xi_grid.len())
        .map(|k| {
            geom.xi_grid.point(k, &mut z);
            (japanese(&z[..d]) * japanese(&z[d..2 * d])).powf(d as f64 + eps)
        })
        .collect();
    let (_, parts) = tfr::stft_fold(f, &psi, cfg.lattice, || 0.0f64, |acc, _, spec| {
        for (v, w) in spec.iter().zip(&wts) {
            *acc = acc.max(v.norm() * w);
        }
    })?;
    Ok(parts.into_iter().fold(0.0, f64::max))
}

/// The permutations `c1..c4` of `(z1, z2, ζ1, ζ2)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Perm {
    C1,
    C2,
    C3,
    C4,
    /// The unpermuted order `(z1, z2, ζ1, ζ2)`; with `p1 = p2`, `q1 = q2` this is `M^{p,q}(R^{2d})`.
    Identity,
}

impl Perm {
    /// `slots()[j]` is the STFT slot (`z1 = 0, z2 = 1, ζ1 = 2, ζ2 = 3`) integrated by the
    /// `j`-th exponent of `L^{p1,p2,q1,q2}`.
    pub fn slots(self) -> [usize; 4] {
        match self {
            Perm::C1 => [2, 0, 3, 1],
            Perm::C2 => [3, 1, 2, 0],
            Perm::C3 => [3, 0, 2, 1],
            Perm::C4 => [0, 3, 1, 2],
            Perm::Identity => [0, 1, 2, 3],
        }
    }

    /// The map `c_i` itself: where each input coordinate is sent.
    pub fn apply<T: Copy>(self, v: [T; 4]) -> [T; 4] {
        let [z1, z2, w1, w2] = v;
        match self {
            Perm::C1 => [z2, w2, z1, w1],
            Perm::C2 => [w2, z2, w1, z1],
            Perm::C3 => [z2, w2, w1, z1],
            Perm::C4 => [z1, w1, w2, z2],
            Perm::Identity => [z1, z2, w1, w2],
        }
    }
}

impl FromStr for Perm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "c1" => Ok(Perm::C1),
            "c2" => Ok(Perm::C2),
            "c3" => Ok(Perm::C3),
            "c4" => Ok(Perm::C4),
            "id" => Ok(Perm::Identity),
            t => Err(Error::Parse(format!("unknown permutation {t:?}"))),
        }
    }
}

/// `M^{p1,p2,q1,q2}_m(c_i)` with `m = 1 ⊗ v_{s,t}`, i.e. `⟨a3⟩^s ⟨a4⟩^t` on the last two slots
/// of the permuted point `(a1, a2, a3, a4)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedSpec {
    pub perm: Perm,
    pub exponents: [Exponent; 4],
    pub weight: Weight,
    pub eps: f64,
    pub stft: Stft4Config,
}

impl MixedSpec {
    pub fn new(perm: Perm, exponents: [Exponent; 4], d: usize) -> Self {
        MixedSpec {
            perm,
            exponents,
            weight: Weight::unit(d),
            eps: DEFAULT_EPS,
            stft: Stft4Config::default(),
        }
    }

    /// `M^{1,∞,∞,∞}_{1⊗v_{d+ε,0}}(c1)`.
    pub fn weighted_c1(d: usize, eps: f64) -> Self {
        use Exponent::*;
        MixedSpec {
            weight: Weight::new(d as f64 + eps, 0.0, d),
            eps,
            ..Self::new(Perm::C1, [Finite(1.0), Infinity, Infinity, Infinity], d)
        }
    }
}

/// Reduces axis `axis` of a 4-slot array with lengths `dims` by an `L^e` norm with cell `cell`.
fn reduce_slot(data: &[f64], dims: &[usize], axis: usize, e: Exponent, cell: f64) -> (Vec<f64>, Vec<usize>) {
    let inner: usize = dims[axis + 1..].iter().product();
    let len = dims[axis];
    let outer: usize = dims[..axis].iter().product();
    let mut out = vec![0.0; outer * inner];
    for o in 0..outer {
        for i in 0..inner {
            let mut acc = 0.0f64;
            for k in 0..len {
                let v = data[(o * len + k) * inner + i];
                match e {
                    Exponent::Infinity => acc = acc.max(v),
                    e => acc += e.pow(v),
                }
            }
            out[o * inner + i] = match e {
                Exponent::Infinity => acc,
                e => e.root(acc * cell),
            };
        }
    }
    let mut nd = dims.to_vec();
    nd.remove(axis);
    (out, nd)
}

/// Nested norm of a materialised 4D STFT under a mixed spec.
pub fn mixed_norm4(v: &TFMatrix4, spec: &MixedSpec) -> Result<f64> {
    for e in spec.exponents {
        e.check()?;
    }
    let d = v.block_dim();
    let nz = v.z_grid().n().pow(d as u32);
    let nzeta = v.zeta_grid().n().pow(d as u32);
    let dims = [nz, nz, nzeta, nzeta];
    let cells = [
        v.z_grid().spacing().powi(d as i32),
        v.z_grid().spacing().powi(d as i32),
        v.zeta_grid().spacing().powi(d as i32),
        v.zeta_grid().spacing().powi(d as i32),
    ];
    let slots = spec.perm.slots();
    let zb = Grid::new(d, v.z_grid().n(), v.z_grid().spacing())?;
    let wb = Grid::new(d, v.zeta_grid().n(), v.zeta_grid().spacing())?;
    let block_weight = |slot: usize, idx: usize, expo: f64| -> f64 {
        if expo == 0.0 {
            return 1.0;
        }
        let g = if slot < 2 { &zb } else { &wb };
        let mut c = [0.0; MAX_DIM];
        g.point(idx, &mut c);
        japanese(&c[..d]).powf(expo)
    };
    let (ws, wt) = (spec.weight.s, spec.weight.t);
    let tables: Vec<Vec<f64>> = (0..4)
        .map(|slot| {
            let expo = if slot == slots[2] {
                ws
            } else if slot == slots[3] {
                wt
            } else {
                0.0
            };
            (0..dims[slot]).map(|i| block_weight(slot, i, expo)).collect()
        })
        .collect();
    let mut data: Vec<f64> = Vec::with_capacity(v.values().len());
    for (flat, z) in v.values().iter().enumerate() {
        let i3 = flat % nzeta;
        let i2 = (flat / nzeta) % nzeta;
        let i1 = (flat / (nzeta * nzeta)) % nz;
        let i0 = flat / (nzeta * nzeta * nz);
        data.push(z.norm() * tables[0][i0] * tables[1][i1] * tables[2][i2] * tables[3][i3]);
    }
    let mut dims_left: Vec<usize> = dims.to_vec();
    let mut slot_of_axis: Vec<usize> = vec![0, 1, 2, 3];
    for (j, &slot) in slots.iter().enumerate() {
        let axis = slot_of_axis.iter().position(|&s| s == slot).expect("slot present");
        let (nd, ndims) = reduce_slot(&data, &dims_left, axis, spec.exponents[j], cells[slot]);
        data = nd;
        dims_left = ndims;
        slot_of_axis.remove(axis);
    }
    Ok(data[0])
}

/// `‖F‖_{M^{p1,p2,q1,q2}_m(c_i)}` from a materialised 4D STFT.
pub fn mixed_modulation_norm(f: &SampledFunction2D, spec: &MixedSpec) -> Result<f64> {
    let psi = tfr::window_by_id(&spec.stft.window, *f.grid())?;
    let v = tfr::stft4_with(f, &psi, spec.stft.lattice, spec.stft.cap)?;
    mixed_norm4(&v, spec)
}

/// Fourier-Lebesgue norms used on localized pieces `η_{k,l}F`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LocalNorm {
    /// `sup_ζ |ℱG(ζ)| ⟨ζ1⟩^{d+ε} ⟨ζ2⟩^{d+ε}`.
    FlInfInf,
    /// `sup_{ζ2} ⟨ζ2⟩^{d+ε} ∫ |ℱG(ζ1, ζ2)| dζ1`.
    Fl1Inf,
}

/// Weighted Fourier-Lebesgue norm of a function on `R^{2d}`.
pub fn fourier_lebesgue_norm(g: &SampledFunction2D, kind: LocalNorm, eps: f64) -> Result<f64> {
    let grid = *g.grid();
    if grid.dim() % 2 != 0 {
        return Err(Error::structural("Fourier-Lebesgue norm needs a function on R^(2d)"));
    }
    let d = grid.dim() / 2;
    let ghat = crate::grid::fourier_transform(g);
    let dual = *ghat.grid();
    let s = d as f64 + eps;
    let n_half = dual.n().pow(d as u32);
    let block = Grid::new(d, dual.n(), dual.spacing())?;
    let mut pts = [0.0; MAX_DIM];
    let w: Vec<f64> = (0..n_half)
        .map(|i| {
            block.point(i, &mut pts);
            japanese(&pts[..d]).powf(s)
        })
        .collect();
    let v = ghat.samples();
    Ok(match kind {
        LocalNorm::FlInfInf => (0..v.len())
            .map(|i| v[i].norm() * w[i / n_half] * w[i % n_half])
            .fold(0.0, f64::max),
        LocalNorm::Fl1Inf => (0..n_half)
            .map(|j2| {
                let col: f64 = (0..n_half).map(|j1| v[j1 * n_half + j2].norm()).sum();
                col * block.cell() * w[j2]
            })
            .fold(0.0, f64::max),
    })
}

fn patch_grid(d: usize) -> Result<Grid> {
    if d == 1 {
        Grid::new(2, 32, 0.125)
    } else {
        Grid::new(2 * d, 16, 0.25)
    }
}

/// `sup_{(k,l) ∈ cells} ‖η_{k,l} F‖` for the given Fourier-Lebesgue norm, each piece sampled on a
/// patch of half-width 2 around its cell.
pub fn localized_norm<F>(
    f: &F,
    d: usize,
    cells: &[(Vec<i64>, Vec<i64>)],
    kind: LocalNorm,
    eps: f64,
    partition: &crate::phase::PartitionSpec,
) -> Result<f64>
where
    F: Fn(&[f64]) -> Complex64 + Sync,
{
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::domain(format!("eps must be positive, got {eps}")));
    }
    let patch = patch_grid(d)?;
    let vals = crate::par::map_range(cells.len(), |c| {
        let (k, l) = &cells[c];
        let mut z = [0.0; MAX_DIM];
        let mut kl = [0i64; MAX_DIM];
        kl[..d].copy_from_slice(k);
        kl[d..2 * d].copy_from_slice(l);
        let samples = (0..patch.len())
            .map(|i| {
                patch.point(i, &mut z);
                for a in 0..2 * d {
                    z[a] += kl[a] as f64;
                }
                let eta = partition.eta_k(&kl[..2 * d], &z[..2 * d]);
                if eta == 0.0 {
                    Complex64::default()
                } else {
                    f(&z[..2 * d]) * eta
                }
            })
            .collect();
        SampledFunction2D::new(patch, samples).and_then(|piece| fourier_lebesgue_norm(&piece, kind, eps))
    });
    vals.into_iter().try_fold(0.0f64, |acc, v| Ok(acc.max(v?)))
}

/// `sup_{k,l} ‖η_{k,l} F‖` over the cells of a sampled function, with the partition wrapped on
/// the periodic grid box.
pub fn localized_norm_sampled(
    f: &SampledFunction2D,
    kind: LocalNorm,
    eps: f64,
    partition: &crate::phase::PartitionSpec,
) -> Result<f64> {
    let grid = *f.grid();
    let period = grid.n() as f64 * grid.spacing();
    let half = (grid.half_width().round()) as i64;
    if (grid.half_width() - half as f64).abs() > 1e-12 {
        return Err(Error::validation("localization needs a grid box with integer half-width"));
    }
    let side = (2 * half) as usize;
    let dim = grid.dim();
    let vals = crate::par::map_range(side.pow(dim as u32), |mut c| {
        let mut kl = [0i64; MAX_DIM];
        for slot in kl.iter_mut().take(dim) {
            *slot = (c % side) as i64 - half;
            c /= side;
        }
        let mut z = [0.0; MAX_DIM];
        let piece = f.samples().iter().enumerate().map(|(i, v)| {
            grid.point(i, &mut z);
            for a in 0..dim {
                let u = z[a] - kl[a] as f64;
                z[a] = kl[a] as f64 + (u + period / 2.0).rem_euclid(period) - period / 2.0;
            }
            *v * partition.eta_k(&kl[..dim], &z[..dim])
        });
        SampledFunction2D::new(grid, piece.collect()).and_then(|p| fourier_lebesgue_norm(&p, kind, eps))
    });
    vals.into_iter().try_fold(0.0f64, |acc, v| Ok(acc.max(v?)))
}

/// `(Σ_k |a_k|^p ⟨k⟩^{sp})^{1/p}` over a finitely supported sequence on `Z^d`.
pub fn sequence_norm(a: &[(Vec<i64>, f64)], p: Exponent, s: f64) -> Result<f64> {
    p.check()?;
    let terms = a.iter().map(|(k, v)| {
        let kf: Vec<f64> = k.iter().map(|&c| c as f64).collect();
        v.abs() * japanese(&kf).powf(s)
    });
    Ok(match p {
        Exponent::Infinity => terms.fold(0.0, f64::max),
        p => p.root(terms.map(|t| p.pow(t)).sum()),
    })
}

/// Whether `l^{q1}_{v_{s1}}(Z^d) ⊂ l^{q2}_{v_{s2}}(Z^d)`:
/// `s1 − s2 ≥ d(1/q2 − 1/q1) ∨ 0`, strict when `1/q2 > 1/q1`.
pub fn embedding_holds(q1: Exponent, s1: f64, q2: Exponent, s2: f64, d: usize) -> bool {
    let gap = q2.recip() - q1.recip();
    let rhs = (d as f64 * gap).max(0.0);
    if gap > 0.0 {
        s1 - s2 > rhs
    } else {
        s1 - s2 >= rhs
    }
}

/// Largest ratio `‖1_S‖_{l^{q2}_{v_{s2}}} / ‖1_S‖_{l^{q1}_{v_{s1}}}` over indicator sequences of
/// shells `{k ∈ [−N, N]^d : r_i ≤ |k| ≤ r_j}`.
///
/// Both norms of an indicator depend only on how many points of each radius it contains, and the
/// extremal sets for a ratio of weighted power sums are level sets of `⟨k⟩`, so shells cover them.
pub fn finite_section_constant(q1: Exponent, s1: f64, q2: Exponent, s2: f64, d: usize, n: i64) -> f64 {
    let mut counts = std::collections::BTreeMap::<i64, f64>::new();
    let side = (2 * n + 1) as usize;
    let total = side.pow(d as u32);
    for flat in 0..total {
        let mut r = flat;
        let mut norm2 = 0i64;
        for _ in 0..d {
            let c = (r % side) as i64 - n;
            r /= side;
            norm2 += c * c;
        }
        *counts.entry(norm2).or_insert(0.0) += 1.0;
    }
    let levels: Vec<(f64, f64)> = counts
        .into_iter()
        .map(|(r2, c)| ((1.0 + r2 as f64).sqrt(), c))
        .collect();
    let prefix = |q: Exponent, s: f64| -> Vec<f64> {
        let mut acc = vec![0.0];
        for (jb, c) in &levels {
            let v = match q {
                Exponent::Finite(q) => c * jb.powf(s * q),
                Exponent::Infinity => 0.0,
            };
            acc.push(acc.last().unwrap() + v);
        }
        acc
    };
    let (p1, p2) = (prefix(q1, s1), prefix(q2, s2));
    let norm = |q: Exponent, s: f64, pre: &[f64], i: usize, j: usize| -> f64 {
        match q {
            Exponent::Infinity => levels[i].0.powf(s).max(levels[j].0.powf(s)),
            Exponent::Finite(q) => (pre[j + 1] - pre[i]).powf(1.0 / q),
        }
    };
    let mut best = 0.0f64;
    for i in 0..levels.len() {
        for j in i..levels.len() {
            let r = norm(q2, s2, &p2, i, j) / norm(q1, s1, &p1, i, j);
            best = best.max(r);
        }
    }
    best
}

/// One inequality clause `lhs ≥ rhs` (or `>` when strict) of an exponent predicate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Clause {
    pub lhs: f64,
    pub rhs: f64,
    pub strict: bool,
}

impl Clause {
    pub fn holds(&self) -> bool {
        if self.strict {
            self.lhs > self.rhs
        } else {
            self.lhs >= self.rhs
        }
    }

    /// Clauses of the form `s ≥ 0` only fix the sign of a smoothness exponent.
    fn is_sign_constraint(&self) -> bool {
        self.rhs == 0.0 && !self.strict
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if (0.0..=1.0).contains(&alpha) {
        Ok(())
    } else {
        Err(Error::domain(format!("alpha = {alpha} outside [0, 1]")))
    }
}

fn sign_clauses(s1: f64, s2: f64) -> [Clause; 2] {
    [
        Clause { lhs: s1, rhs: 0.0, strict: false },
        Clause { lhs: s2, rhs: 0.0, strict: false },
    ]
}

/// Clauses of the separated-phase theorem (statement (3)), sign constraints included.
pub fn thm1_clauses(p: Exponent, q: Exponent, s1: f64, s2: f64, alpha: f64, d: usize) -> Result<Vec<Clause>> {
    check_alpha(alpha)?;
    p.check()?;
    q.check()?;
    let mut out = sign_clauses(s1, s2).to_vec();
    let (ip, iq, d) = (p.recip(), q.recip(), d as f64);
    if alpha < 1.0 {
        if iq > ip {
            out.push(Clause { lhs: s1, rhs: d * (1.0 - alpha) * (iq - ip), strict: true });
        } else if ip > iq {
            out.push(Clause {
                lhs: s1 + (1.0 - alpha) * s2,
                rhs: d * (1.0 - alpha) * (ip - iq),
                strict: true,
            });
        }
    }
    Ok(out)
}

/// Clauses of the non-separated theorem (statement (3)).
pub fn thm2_clauses(p: Exponent, q: Exponent, s1: f64, s2: f64, alpha: f64, d: usize) -> Result<Vec<Clause>> {
    check_alpha(alpha)?;
    p.check()?;
    q.check()?;
    let mut out = sign_clauses(s1, s2).to_vec();
    let (ip, iq, d) = (p.recip(), q.recip(), d as f64);
    out.push(Clause { lhs: s1, rhs: d * ip, strict: !p.is_infinite() });
    out.push(Clause {
        lhs: s2,
        rhs: d * (1.0 - iq),
        strict: q != Exponent::Finite(1.0),
    });
    if alpha < 1.0 {
        out.push(Clause {
            lhs: s1,
            rhs: alpha * d * ip + (1.0 - alpha) * d * iq,
            strict: !q.is_infinite(),
        });
    }
    Ok(out)
}

/// Clauses of the high-growth theorem (statement (2)).
pub fn thm3_clauses(p: Exponent, s1: f64, s2: f64, t1: f64, t2: f64, d: usize) -> Result<Vec<Clause>> {
    p.check()?;
    if t1 < 0.0 || t2 < 0.0 {
        return Err(Error::domain(format!("growth exponents must be >= 0, got t1={t1}, t2={t2}")));
    }
    let gap = (p.recip() - 0.5).abs() * d as f64;
    Ok(vec![
        Clause { lhs: s1, rhs: t1 * gap, strict: false },
        Clause { lhs: s2, rhs: t2 * gap, strict: false },
    ])
}

/// Boundedness predicate for separated phases with `(α, 0, 0)`-growth.
pub fn thm1_predicate(p: Exponent, q: Exponent, s1: f64, s2: f64, alpha: f64, d: usize) -> Result<bool> {
    Ok(thm1_clauses(p, q, s1, s2, alpha, d)?.iter().all(Clause::holds))
}

/// Boundedness predicate for non-separated phases.
pub fn thm2_predicate(p: Exponent, q: Exponent, s1: f64, s2: f64, alpha: f64, d: usize) -> Result<bool> {
    Ok(thm2_clauses(p, q, s1, s2, alpha, d)?.iter().all(Clause::holds))
}

/// Boundedness predicate on `M^p ∩ M^{p'}` for high-growth phases.
pub fn thm3_predicate(p: Exponent, s1: f64, s2: f64, t1: f64, t2: f64, d: usize) -> Result<bool> {
    Ok(thm3_clauses(p, s1, s2, t1, t2, d)?.iter().all(Clause::holds))
}

/// Signed distance to the nearest threshold: the minimum of `lhs − rhs` over the clauses that
/// are not sign constraints, `+∞` when there are none.
pub fn threshold_margin(clauses: &[Clause]) -> f64 {
    clauses
        .iter()
        .filter(|c| !c.is_sign_constraint())
        .map(|c| c.lhs - c.rhs)
        .fold(f64::INFINITY, f64::min)
}

/// Signed distance of an embedding tuple to its threshold, `s1 − s2 − d(1/q2 − 1/q1) ∨ 0`.
pub fn embedding_margin(q1: Exponent, s1: f64, q2: Exponent, s2: f64, d: usize) -> f64 {
    s1 - s2 - (d as f64 * (q2.recip() - q1.recip())).max(0.0)
}
