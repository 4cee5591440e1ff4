//! Test functions behind the necessity arguments: bump trains on the lattice `{k_α}`, their
//! chirped and modulated variants, and the oscillatory-integral decay quantities.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{fourier_transform, inverse_fourier_transform, japanese, Grid, SampledFunction, MAX_DIM};
use crate::phase::{grad_mu, k_alpha, mollifier, Profile};

/// Default support radius of the bump `h`.
pub const DEFAULT_DELTA: f64 = 0.2;
/// Radius `r` of the balls `B(∇μ(k_α), r)` that must stay disjoint.
pub const SEPARATION_RADIUS: f64 = 0.1;
/// Smallest admissible `|det Hess φ|` on the support of the amplitude.
pub const HESSIAN_FLOOR: f64 = 1e-3;

/// A nonnegative, finitely supported sequence on `Z^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientSeq {
    entries: Vec<(Vec<i64>, f64)>,
    d: usize,
}

impl CoefficientSeq {
    pub fn new(d: usize, entries: Vec<(Vec<i64>, f64)>) -> Result<Self> {
        for (k, v) in &entries {
            if k.len() != d {
                return Err(Error::structural(format!("lattice point {k:?} is not in Z^{d}")));
            }
            if !(v.is_finite() && *v >= 0.0) {
                return Err(Error::validation(format!("coefficient {v} at {k:?} must be finite and nonnegative")));
            }
        }
        let mut keys: Vec<&Vec<i64>> = entries.iter().map(|(k, _)| k).collect();
        keys.sort();
        if keys.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::validation("coefficient sequence lists a lattice point twice"));
        }
        Ok(CoefficientSeq { entries, d })
    }

    /// `a_k = 1` for `k = start, …, start + count − 1` in `Z`.
    pub fn ones(start: i64, count: usize) -> Self {
        CoefficientSeq {
            entries: (0..count as i64).map(|i| (vec![start + i], 1.0)).collect(),
            d: 1,
        }
    }

    pub fn delta0(d: usize) -> Self {
        CoefficientSeq {
            entries: vec![(vec![0; d], 1.0)],
            d,
        }
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn entries(&self) -> &[(Vec<i64>, f64)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn sum(&self) -> f64 {
        self.entries.iter().map(|(_, v)| v).sum()
    }

    fn active(&self) -> impl Iterator<Item = (Vec<f64>, f64)> + '_ {
        self.entries
            .iter()
            .filter(|(_, v)| *v != 0.0)
            .map(|(k, v)| (k.iter().map(|&c| c as f64).collect(), *v))
    }
}

/// `h(x) = mollifier(|x|/δ)`, supported on `B(0, δ)` with `h(0) = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bump {
    pub delta: f64,
}

impl Default for Bump {
    fn default() -> Self {
        Bump { delta: DEFAULT_DELTA }
    }
}

impl Bump {
    pub fn eval(&self, x: &[f64]) -> f64 {
        mollifier(norm(x) / self.delta)
    }
}

fn smooth_step(t: f64) -> f64 {
    let psi = |u: f64| if u <= 0.0 { 0.0 } else { (-1.0 / u).exp() };
    let (a, b) = (psi(t), psi(1.0 - t));
    a / (a + b)
}

/// Plateau profile: `g = 1` on `|x| ≤ δ`, `g = 0` on `|x| ≥ 2δ`, smooth in between.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Plateau {
    pub delta: f64,
}

impl Default for Plateau {
    fn default() -> Self {
        Plateau { delta: DEFAULT_DELTA }
    }
}

impl Plateau {
    pub fn eval(&self, x: &[f64]) -> f64 {
        smooth_step(2.0 - norm(x) / self.delta)
    }
}

/// Annulus cut-off: 1 for `|x| ∈ [1/2, 2]`, supported in `1/4 ≤ |x| ≤ 4`.
pub fn annulus(x: &[f64]) -> f64 {
    let r = norm(x);
    smooth_step((r - 0.25) / 0.25) * smooth_step((4.0 - r) / 2.0)
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v).powi(2)).sum::<f64>().sqrt()
}

fn check_grid(a: &CoefficientSeq, grid: &Grid) -> Result<()> {
    if grid.dim() != a.dim() {
        return Err(Error::structural(format!(
            "coefficients live on Z^{} but the grid is {}-dimensional",
            a.dim(),
            grid.dim()
        )));
    }
    Ok(())
}

fn check_inside(center: &[f64], radius: f64, grid: &Grid) -> Result<()> {
    let reach = center.iter().fold(0.0f64, |m, c| m.max(c.abs())) + radius;
    if reach >= grid.half_width() {
        return Err(Error::validation(format!(
            "support around {center:?} of radius {radius} leaves the grid box [-{0}, {0})",
            grid.half_width()
        )));
    }
    Ok(())
}

/// Centers `k_α` of the active coefficients, checked to give disjoint `B(k_α, 2δ)` inside the box.
fn lattice_centers(a: &CoefficientSeq, alpha: f64, delta: f64, grid: &Grid) -> Result<Vec<(Vec<f64>, Vec<f64>, f64)>> {
    check_grid(a, grid)?;
    let mut out = Vec::with_capacity(a.len());
    for (k, v) in a.active() {
        let ka = k_alpha(&k, alpha)?;
        check_inside(&ka, delta, grid)?;
        out.push((k, ka, v));
    }
    for (i, (ki, ci, _)) in out.iter().enumerate() {
        for (kj, cj, _) in &out[i + 1..] {
            if dist(ci, cj) < 4.0 * delta {
                return Err(Error::validation(format!(
                    "bumps at k = {ki:?} and k = {kj:?} overlap: |k_a - l_a| = {:.4} < 4 delta = {}",
                    dist(ci, cj),
                    4.0 * delta
                )));
            }
        }
    }
    Ok(out)
}

/// `F = Σ_k a_k h(x − k_α)`.
pub fn build_f(a: &CoefficientSeq, alpha: f64, h: &Bump, grid: &Grid) -> Result<SampledFunction> {
    let centers = lattice_centers(a, alpha, h.delta, grid)?;
    Ok(sum_of_pieces(grid, &centers, h.delta, |x, c, _| Complex64::new(h.eval(&sub(x, c)), 0.0)))
}

/// `G = Σ_k a_k h(x − k_α) e^{2πi ∇μ(k_α)·x}` with `μ = ⟨x⟩^{2−α}`.
pub fn build_g(a: &CoefficientSeq, alpha: f64, h: &Bump, grid: &Grid) -> Result<SampledFunction> {
    let centers = lattice_centers(a, alpha, h.delta, grid)?;
    let freqs: Vec<Vec<f64>> = centers.iter().map(|(_, ka, _)| grad_mu(ka, alpha)).collect();
    check_frequency_separation(&freqs)?;
    let with_freq: Vec<_> = centers.iter().zip(&freqs).map(|((_, ka, v), w)| (w.clone(), ka.clone(), *v)).collect();
    Ok(sum_of_pieces(grid, &with_freq, h.delta, |x, c, w| {
        Complex64::from_polar(h.eval(&sub(x, c)), 2.0 * PI * dot(w, x))
    }))
}

fn check_frequency_separation(freqs: &[Vec<f64>]) -> Result<()> {
    for (i, a) in freqs.iter().enumerate() {
        for b in &freqs[i + 1..] {
            if dist(a, b) < 2.0 * SEPARATION_RADIUS {
                return Err(Error::validation(format!(
                    "modulation frequencies {a:?} and {b:?} are closer than {}",
                    2.0 * SEPARATION_RADIUS
                )));
            }
        }
    }
    Ok(())
}

fn sub(x: &[f64], c: &[f64]) -> [f64; MAX_DIM] {
    let mut out = [0.0; MAX_DIM];
    for (i, (a, b)) in x.iter().zip(c).enumerate() {
        out[i] = a - b;
    }
    out
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| u * v).sum()
}

/// Adds `v · piece(x, center, extra)` over all pieces, touching only grid points within `radius`
/// (in each coordinate) of a center. Pieces are `(extra, center, v)`.
fn sum_of_pieces<P>(grid: &Grid, pieces: &[(Vec<f64>, Vec<f64>, f64)], radius: f64, piece: P) -> SampledFunction
where
    P: Fn(&[f64], &[f64], &[f64]) -> Complex64,
{
    let d = grid.dim();
    let mut samples = vec![Complex64::default(); grid.len()];
    let step = grid.spacing();
    let n = grid.n() as i64;
    for (extra, center, v) in pieces {
        let mut lo = [0i64; MAX_DIM];
        let mut span = [0usize; MAX_DIM];
        for a in 0..d {
            let l = ((center[a] - radius) / step).floor() as i64 + n / 2;
            let h = ((center[a] + radius) / step).ceil() as i64 + n / 2;
            lo[a] = l.max(0);
            span[a] = (h.min(n - 1) - lo[a] + 1).max(0) as usize;
        }
        let total: usize = span[..d].iter().product();
        let mut idx = [0usize; MAX_DIM];
        let mut x = [0.0; MAX_DIM];
        for mut flat in 0..total {
            for a in (0..d).rev() {
                idx[a] = lo[a] as usize + flat % span[a];
                flat /= span[a];
            }
            for a in 0..d {
                x[a] = grid.coord(idx[a]);
            }
            samples[grid.ravel(&idx[..d])] += piece(&x[..d], center, extra) * *v;
        }
    }
    SampledFunction::new(*grid, samples).expect("finite pieces")
}

/// `f = Σ_k a_k M_k ℱ^{−1}φ`, normalised so that `ℱ^{−1}φ(0) = 1`; hence `f(0) = Σ_k a_k`.
pub fn build_modulated_train(a: &CoefficientSeq, phi: &Bump, grid: &Grid) -> Result<SampledFunction> {
    check_grid(a, grid)?;
    if !(phi.delta > 0.0 && phi.delta < 0.5) {
        return Err(Error::validation(format!(
            "frequency bump radius {} must lie in (0, 1/2) so that the modulated copies are disjoint",
            phi.delta
        )));
    }
    let dual = grid.dual();
    if phi.delta >= dual.half_width() {
        return Err(Error::validation("frequency bump is wider than the dual grid box"));
    }
    let phihat = SampledFunction::from_real_fn(dual, |xi| phi.eval(xi));
    let mass: f64 = phihat.samples().iter().map(|v| v.re).sum::<f64>() * dual.cell();
    let base = inverse_fourier_transform(&phihat).scale(Complex64::new(1.0 / mass, 0.0));
    let coeffs: Vec<(Vec<f64>, f64)> = a.active().collect();
    for (k, _) in &coeffs {
        if k.iter().any(|c| c.abs() + phi.delta >= dual.half_width()) {
            return Err(Error::validation(format!("modulation {k:?} leaves the dual grid box")));
        }
    }
    Ok(base.map(|x, v| {
        let m: Complex64 = coeffs.iter().map(|(k, c)| Complex64::cis(2.0 * PI * dot(k, x)) * *c).sum();
        v * m
    }))
}

/// `G = Σ_k a_k g((x − k_α)/⟨k⟩^{α/(1−α)}) e^{2πi ∇μ(k_α)·x}` with `μ = ⟨x⟩^{2−α}`.
pub fn build_chirp_train(a: &CoefficientSeq, alpha: f64, g: &Plateau, grid: &Grid) -> Result<SampledFunction> {
    check_grid(a, grid)?;
    let mut pieces = Vec::with_capacity(a.len());
    for (k, v) in a.active() {
        let ka = k_alpha(&k, alpha)?;
        let scale = japanese(&k).powf(alpha / (1.0 - alpha));
        check_inside(&ka, 2.0 * g.delta * scale, grid)?;
        pieces.push((k, ka, scale, v));
    }
    for (i, (ki, ci, si, _)) in pieces.iter().enumerate() {
        for (kj, cj, sj, _) in &pieces[i + 1..] {
            if dist(ci, cj) < 2.0 * g.delta * (si + sj) {
                return Err(Error::validation(format!("chirp windows at k = {ki:?} and k = {kj:?} overlap")));
            }
        }
    }
    let freqs: Vec<Vec<f64>> = pieces.iter().map(|(_, ka, _, _)| grad_mu(ka, alpha)).collect();
    check_frequency_separation(&freqs)?;
    let d = grid.dim();
    let mut total = SampledFunction::zeros(*grid);
    for ((_, ka, scale, v), w) in pieces.iter().zip(&freqs) {
        let part = sum_of_pieces(grid, &[(w.clone(), ka.clone(), *v)], 2.0 * g.delta * scale, |x, c, w| {
            let mut y = sub(x, c);
            for yi in y.iter_mut().take(d) {
                *yi /= scale;
            }
            Complex64::from_polar(g.eval(&y[..d]), 2.0 * PI * dot(w, x))
        });
        total = total.add(&part)?;
    }
    Ok(total)
}

/// `sup_x |ℱ^{−1}[g e^{iλφ}](x)|` on `grid`, with `g` and `φ` sampled on its dual.
pub fn dispersive_sup(phi: &Profile, g: &Bump, lambda: f64, grid: &Grid) -> Result<f64> {
    let d = grid.dim();
    let dual = grid.dual();
    if g.delta >= dual.half_width() {
        return Err(Error::validation("amplitude support exceeds the frequency box"));
    }
    let mut xi = [0.0; MAX_DIM];
    let mut grad = [0.0; MAX_DIM];
    let mut hess = vec![0.0; d * d];
    let mut max_grad = 0.0f64;
    for m in 0..dual.len() {
        dual.point(m, &mut xi);
        if g.eval(&xi[..d]) == 0.0 {
            continue;
        }
        phi.hessian(&xi[..d], &mut hess);
        let det = determinant(&hess, d);
        if det.abs() < HESSIAN_FLOOR {
            return Err(Error::validation(format!(
                "Hessian of the phase is degenerate at {:?}: |det| = {:.3e}",
                &xi[..d],
                det.abs()
            )));
        }
        phi.grad(&xi[..d], &mut grad[..d]);
        max_grad = max_grad.max(norm(&grad[..d]));
    }
    let reach = lambda.abs() * max_grad / (2.0 * PI);
    if reach >= 0.9 * grid.half_width() {
        return Err(Error::validation(format!(
            "grid is under-resolved for lambda = {lambda}: the oscillation reaches |x| = {reach:.1} but the box is [-{0}, {0})",
            grid.half_width()
        )));
    }
    let amp = SampledFunction::from_fn(dual, |xi| Complex64::from_polar(g.eval(xi), lambda * phi.eval(xi)));
    Ok(inverse_fourier_transform(&amp).sup_norm())
}

fn determinant(m: &[f64], d: usize) -> f64 {
    match d {
        1 => m[0],
        2 => m[0] * m[3] - m[1] * m[2],
        _ => {
            let mut a = m.to_vec();
            let mut det = 1.0;
            for c in 0..d {
                let p = (c..d).max_by(|&i, &j| a[i * d + c].abs().total_cmp(&a[j * d + c].abs())).unwrap();
                if a[p * d + c] == 0.0 {
                    return 0.0;
                }
                if p != c {
                    for k in 0..d {
                        a.swap(p * d + k, c * d + k);
                    }
                    det = -det;
                }
                det *= a[c * d + c];
                for r in c + 1..d {
                    let f = a[r * d + c] / a[c * d + c];
                    for k in c..d {
                        a[r * d + k] -= f * a[c * d + k];
                    }
                }
            }
            det
        }
    }
}

/// Resolution policy for the cut-off chirp `e^{−iμ2} ρ(·/|k|)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HighGrowthConfig {
    pub amplitude: f64,
    /// Nyquist frequency over the largest local frequency of the chirp.
    pub nyquist_factor: f64,
    /// Largest grid the automatic sizing may allocate.
    pub max_len: usize,
}

impl Default for HighGrowthConfig {
    fn default() -> Self {
        HighGrowthConfig {
            amplitude: 1.0,
            nyquist_factor: 1.5,
            max_len: 1 << 24,
        }
    }
}

fn chirp_frequency(r: f64, t2: f64) -> f64 {
    (2.0 + t2) * (1.0 + r * r).powf(t2 / 2.0) * r / (2.0 * PI)
}

/// Smallest grid resolving `e^{−i⟨x⟩^{2+t2}} ρ(x/|k|)` in `d = 1`.
pub fn high_growth_grid(k: f64, t2: f64, cfg: &HighGrowthConfig) -> Result<Grid> {
    let half = 4.0 * k + 8.0;
    let fmax = chirp_frequency(4.0 * k, t2) + 8.0;
    let need = (2.0 * half * 2.0 * cfg.nyquist_factor * fmax).ceil() as usize;
    let n = need.next_power_of_two().max(64);
    if n > cfg.max_len {
        return Err(Error::Resource(format!(
            "cut-off chirp at |k| = {k}, t2 = {t2} needs a grid of {n} points; the cap is {}",
            cfg.max_len
        )));
    }
    Grid::with_half_width(1, n, half)
}

/// `‖e^{−iμ2} ρ(·/|k|)‖_{ℱL^∞}` with `μ2 = ⟨x⟩^{2+t2}`, on an automatically sized grid.
pub fn high_growth_decay(k: f64, t2: f64, cfg: &HighGrowthConfig) -> Result<f64> {
    if !(t2 >= 0.0) {
        return Err(Error::domain(format!("t2 must be >= 0, got {t2}")));
    }
    if !(k >= 1.0) {
        return Err(Error::domain(format!("|k| must be >= 1, got {k}")));
    }
    let grid = high_growth_grid(k, t2, cfg)?;
    high_growth_decay_on(&grid, k, t2, cfg.amplitude)
}

/// As [`high_growth_decay`] on a caller-supplied grid.
pub fn high_growth_decay_on(grid: &Grid, k: f64, t2: f64, amplitude: f64) -> Result<f64> {
    if grid.dim() != 1 {
        return Err(Error::structural("the cut-off chirp is sampled in one dimension"));
    }
    if 4.0 * k >= grid.half_width() {
        return Err(Error::validation(format!(
            "annulus |x| <= {} does not fit the box [-{1}, {1})",
            4.0 * k,
            grid.half_width()
        )));
    }
    let nyq = 0.5 / grid.spacing();
    let fmax = chirp_frequency(4.0 * k, t2);
    if fmax >= nyq {
        return Err(Error::validation(format!(
            "chirp frequency {fmax:.1} exceeds the Nyquist frequency {nyq:.1}"
        )));
    }
    let f = SampledFunction::from_fn(*grid, |x| {
        let r = annulus(&[x[0] / k]);
        if r == 0.0 {
            Complex64::default()
        } else {
            Complex64::from_polar(amplitude * r, -(1.0 + x[0] * x[0]).powf(1.0 + t2 / 2.0))
        }
    });
    Ok(fourier_transform(&f).sup_norm())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_bump() {
        let grid = Grid::new(1, 512, 1.0 / 32.0).unwrap();
        let h = Bump::default();
        let f = build_f(&CoefficientSeq::delta0(1), 0.5, &h, &grid).unwrap();
        let direct = SampledFunction::from_real_fn(grid, |x| h.eval(x));
        assert!(f.rel_l2_error(&direct).unwrap() < 1e-15);
        let g = build_g(&CoefficientSeq::delta0(1), 0.5, &h, &grid).unwrap();
        assert!(g.rel_l2_error(&direct).unwrap() < 1e-15);
        let zero = build_f(&CoefficientSeq::new(1, vec![(vec![2], 0.0)]).unwrap(), 0.0, &h, &grid).unwrap();
        assert_eq!(zero.sup_norm(), 0.0);
    }

    #[test]
    fn overlap_is_rejected() {
        let grid = Grid::new(1, 512, 1.0 / 32.0).unwrap();
        let a = CoefficientSeq::ones(0, 3);
        assert!(matches!(build_f(&a, 0.0, &Bump { delta: 0.3 }, &grid), Err(Error::Validation(_))));
        assert!(matches!(
            CoefficientSeq::new(1, vec![(vec![1], -1.0)]),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn modulated_train_value_at_origin() {
        let grid = Grid::new(1, 1024, 1.0 / 32.0).unwrap();
        let phi = Bump { delta: 0.4 };
        let f = build_modulated_train(&CoefficientSeq::delta0(1), &phi, &grid).unwrap();
        assert!((f.samples()[512] - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        let f = build_modulated_train(&CoefficientSeq::ones(0, 7), &phi, &grid).unwrap();
        assert!((f.samples()[512] - Complex64::new(7.0, 0.0)).norm() < 1e-8);
        assert!(matches!(
            build_modulated_train(&CoefficientSeq::delta0(1), &Bump { delta: 0.5 }, &grid),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn chirp_train_peaks() {
        let grid = Grid::new(1, 1 << 14, 1.0 / 16.0).unwrap();
        let g = Plateau::default();
        let a = CoefficientSeq::ones(4, 5);
        let c = build_chirp_train(&a, 0.5, &g, &grid).unwrap();
        for k in 4..9 {
            let ka = k_alpha(&[k as f64], 0.5).unwrap()[0];
            let j = grid.wrap_index(ka);
            let s = japanese(&[k as f64]);
            if (grid.coord(j) - ka).abs() < g.delta * s {
                assert!((c.samples()[j].norm() - 1.0).abs() < 1e-12);
            }
        }
        let single = build_chirp_train(&CoefficientSeq::delta0(1), 0.5, &g, &grid).unwrap();
        let direct = SampledFunction::from_real_fn(grid, |x| g.eval(x));
        assert!(single.rel_l2_error(&direct).unwrap() < 1e-15);
    }

    #[test]
    fn dispersive_checks() {
        let grid = Grid::new(1, 256, 0.25).unwrap();
        let g = Bump { delta: 1.0 };
        let flat = Profile::Zero;
        assert!(matches!(dispersive_sup(&flat, &g, 1.0, &grid), Err(Error::Validation(_))));
        let quad = Profile::JapanesePower { coef: 1.0, beta: 2.0 };
        let a = dispersive_sup(&quad, &g, 10.0, &grid).unwrap();
        let b = dispersive_sup(&quad, &g, -10.0, &grid).unwrap();
        assert!((a - b).abs() < 1e-12 * a);
        assert!(matches!(dispersive_sup(&quad, &g, 1000.0, &grid), Err(Error::Validation(_))));
    }

    #[test]
    fn high_growth_homogeneous() {
        let cfg = HighGrowthConfig::default();
        let a = high_growth_decay(4.0, 0.0, &cfg).unwrap();
        let b = high_growth_decay(4.0, 0.0, &HighGrowthConfig { amplitude: 2.0, ..cfg }).unwrap();
        assert!((b - 2.0 * a).abs() < 1e-12 * b);
        let small = Grid::new(1, 1024, 1.0 / 64.0).unwrap();
        assert!(matches!(high_growth_decay_on(&small, 4.0, 0.0, 1.0), Err(Error::Validation(_))));
    }

    #[test]
    fn profiles() {
        let g = Plateau::default();
        assert_eq!(g.eval(&[0.15]), 1.0);
        assert_eq!(g.eval(&[0.41]), 0.0);
        assert_eq!(annulus(&[1.0]), 1.0);
        assert_eq!(annulus(&[-3.0]) > 0.0, true);
        assert_eq!(annulus(&[0.2]), 0.0);
        assert_eq!(annulus(&[4.5]), 0.0);
    }
}
