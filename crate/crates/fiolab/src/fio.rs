//! Discretised Fourier integral operators `Tf(x) = ∫ σ(x, ξ) f̂(ξ) e^{2πiΦ(x, ξ)} dξ`, their weak
//! form and kernel, and unimodular Fourier multipliers.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{fourier_transform, inverse_fourier_transform, japanese, Grid, SampledFunction, SampledFunction2D, MAX_DIM};
use crate::par;
use crate::phase::PhaseSpec;

pub type Envelope = Arc<dyn Fn(&[f64]) -> Complex64 + Send + Sync>;

/// `σ(x, ξ) = e(x) ⟨x⟩^{−s1} ⟨ξ⟩^{−s2}` with an optional envelope `e`.
#[derive(Clone)]
pub struct SymbolSpec {
    pub s1: f64,
    pub s2: f64,
    pub x_envelope: Option<Envelope>,
    pub label: String,
}

impl fmt::Debug for SymbolSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SymbolSpec")
            .field("s1", &self.s1)
            .field("s2", &self.s2)
            .field("envelope", &self.x_envelope.is_some())
            .field("label", &self.label)
            .finish()
    }
}

impl SymbolSpec {
    /// `σ ≡ 1`.
    pub fn one() -> Self {
        SymbolSpec {
            s1: 0.0,
            s2: 0.0,
            x_envelope: None,
            label: "one".into(),
        }
    }

    /// `σ = ⟨x⟩^{−s1} ⟨ξ⟩^{−s2}`.
    pub fn power(s1: f64, s2: f64) -> Self {
        SymbolSpec {
            s1,
            s2,
            x_envelope: None,
            label: format!("power:{s1},{s2}"),
        }
    }

    pub fn with_envelope(mut self, label: impl Into<String>, e: Envelope) -> Self {
        self.x_envelope = Some(e);
        self.label = format!("{}*{}", self.label, label.into());
        self
    }

    pub fn x_factor(&self, x: &[f64]) -> Complex64 {
        let base = Complex64::new(japanese(x).powf(-self.s1), 0.0);
        match &self.x_envelope {
            Some(e) => base * e(x),
            None => base,
        }
    }

    pub fn xi_factor(&self, xi: &[f64]) -> f64 {
        japanese(xi).powf(-self.s2)
    }

    pub fn eval(&self, x: &[f64], xi: &[f64]) -> Complex64 {
        self.x_factor(x) * self.xi_factor(xi)
    }
}

impl FromStr for SymbolSpec {
    type Err = Error;
    /// `one` or `power:<s1>,<s2>`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "one" {
            return Ok(Self::one());
        }
        let rest = s
            .strip_prefix("power:")
            .ok_or_else(|| Error::Parse(format!("unknown symbol {s:?}")))?;
        let parts: Vec<f64> = rest
            .split(',')
            .map(|v| v.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::Parse(format!("bad symbol exponents {rest:?}")))?;
        match parts[..] {
            [s1, s2] => Ok(Self::power(s1, s2)),
            _ => Err(Error::Parse(format!("power symbol needs two exponents, got {rest:?}"))),
        }
    }
}

/// Band-limit test applied before an operator is trusted on a grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandLimit {
    /// Frequencies with `|ξ|_∞ ≥ fraction · ξ_max` count as leakage.
    pub fraction: f64,
    /// Largest admissible share of `‖f̂‖₂²` in the leakage region.
    pub tolerance: f64,
}

impl Default for BandLimit {
    fn default() -> Self {
        BandLimit {
            fraction: 0.75,
            tolerance: 1e-8,
        }
    }
}

/// Share of the energy of `fhat` at `|ξ|_∞ ≥ fraction · ξ_max`.
pub fn band_leakage(fhat: &SampledFunction, fraction: f64) -> f64 {
    let g = fhat.grid();
    let cut = fraction * g.half_width();
    let mut p = [0.0; MAX_DIM];
    let mut outer = 0.0;
    let mut total = 0.0;
    for (i, v) in fhat.samples().iter().enumerate() {
        g.point(i, &mut p);
        let e = v.norm_sqr();
        total += e;
        if p[..g.dim()].iter().any(|c| c.abs() >= cut) {
            outer += e;
        }
    }
    if total == 0.0 {
        0.0
    } else {
        outer / total
    }
}

fn check_band(fhat: &SampledFunction, band: &BandLimit) -> Result<()> {
    let leak = band_leakage(fhat, band.fraction);
    if leak > band.tolerance {
        return Err(Error::validation(format!(
            "input is not band-limited on this grid: spectral leakage {leak:.3e} exceeds {:.1e}",
            band.tolerance
        )));
    }
    Ok(())
}

fn check_dims(sigma_phi_d: usize, grid: &Grid) -> Result<()> {
    if sigma_phi_d != grid.dim() {
        return Err(Error::structural(format!(
            "phase lives on R^{} but the input grid is {}-dimensional",
            sigma_phi_d,
            grid.dim()
        )));
    }
    Ok(())
}

/// `Tf` with the default band-limit test.
pub fn apply_fio(sigma: &SymbolSpec, phi: &PhaseSpec, f: &SampledFunction) -> Result<SampledFunction> {
    apply_fio_with(sigma, phi, f, &BandLimit::default())
}

/// `Tf` via `e(x)⟨x⟩^{−s1} e^{2πi a(x)} ℱ^{−1}[⟨ξ⟩^{−s2} e^{2πi b(ξ)} f̂]` when `Φ = a(x) + b(ξ) + x·ξ`,
/// and via the constant `∫ ⟨ξ⟩^{−s2} e^{2πi b(ξ)} f̂ dξ` when the bilinear term is absent.
pub fn apply_fio_with(sigma: &SymbolSpec, phi: &PhaseSpec, f: &SampledFunction, band: &BandLimit) -> Result<SampledFunction> {
    let grid = *f.grid();
    check_dims(phi.d, &grid)?;
    let fhat = fourier_transform(f);
    check_band(&fhat, band)?;
    let d = grid.dim();
    let weighted = fhat.map(|xi, v| v * sigma.xi_factor(xi) * Complex64::cis(2.0 * PI * phi.xi_part.eval(xi)));
    let x_part = |x: &[f64]| sigma.x_factor(x) * Complex64::cis(2.0 * PI * phi.x_part.eval(x));
    if phi.bilinear {
        let inner = inverse_fourier_transform(&weighted);
        Ok(inner.map(|x, v| v * x_part(&x[..d])))
    } else {
        let c: Complex64 = weighted.samples().iter().sum::<Complex64>() * weighted.grid().cell();
        Ok(SampledFunction::from_fn(grid, |x| c * x_part(x)))
    }
}

/// `Tf(x_j) = Σ_m σ(x_j, ξ_m) f̂(ξ_m) e^{2πiΦ(x_j, ξ_m)} Δξ` by direct quadrature.
pub fn apply_fio_direct(sigma: &SymbolSpec, phi: &PhaseSpec, f: &SampledFunction) -> Result<SampledFunction> {
    let grid = *f.grid();
    check_dims(phi.d, &grid)?;
    let fhat = fourier_transform(f);
    check_band(&fhat, &BandLimit::default())?;
    let dual = *fhat.grid();
    let d = grid.dim();
    let xis: Vec<[f64; MAX_DIM]> = (0..dual.len())
        .map(|m| {
            let mut p = [0.0; MAX_DIM];
            dual.point(m, &mut p);
            p
        })
        .collect();
    let cell = dual.cell();
    let out = par::map_range(grid.len(), |j| {
        let mut x = [0.0; MAX_DIM];
        grid.point(j, &mut x);
        let x = &x[..d];
        xis.iter()
            .zip(fhat.samples())
            .map(|(xi, v)| {
                let xi = &xi[..d];
                sigma.eval(x, xi) * v * Complex64::cis(2.0 * PI * phi.eval(x, xi))
            })
            .sum::<Complex64>()
            * cell
    });
    SampledFunction::new(grid, out)
}

/// `K = ℱ₂(σ e^{2πiΦ})` sampled on `grid × grid`, so that `Tf(x) = ∫ K(x, y) f(y) dy`.
pub fn kernel(sigma: &SymbolSpec, phi: &PhaseSpec, grid: &Grid) -> Result<SampledFunction2D> {
    check_dims(phi.d, grid)?;
    let d = grid.dim();
    let dual = grid.dual();
    let rows = par::map_range(grid.len(), |j| {
        let mut x = [0.0; MAX_DIM];
        grid.point(j, &mut x);
        let row = SampledFunction::from_fn(dual, |xi| sigma.eval(&x[..d], xi) * Complex64::cis(2.0 * PI * phi.eval(&x[..d], xi)));
        fourier_transform(&row).into_samples()
    });
    let kgrid = Grid::new(2 * d, grid.n(), grid.spacing())?;
    SampledFunction2D::new(kgrid, rows.concat())
}

/// `Σ_y K(x, y) f(y) Δy`.
pub fn kernel_apply(k: &SampledFunction2D, f: &SampledFunction) -> Result<SampledFunction> {
    let grid = *f.grid();
    let kg = k.grid();
    if kg.dim() != 2 * grid.dim() || kg.n() != grid.n() || kg.spacing() != grid.spacing() {
        return Err(Error::structural("kernel grid does not match the input grid"));
    }
    let n = grid.len();
    let cell = grid.cell();
    let out = par::map_range(n, |j| {
        k.samples()[j * n..(j + 1) * n]
            .iter()
            .zip(f.samples())
            .map(|(a, b)| a * b)
            .sum::<Complex64>()
            * cell
    });
    SampledFunction::new(grid, out)
}

/// `⟨σ e^{2πiΦ}, g ⊗ conj(f̂)⟩ = Σ_{x,ξ} σ e^{2πiΦ} conj(g(x)) f̂(ξ) Δx Δξ`.
pub fn weak_pairing(sigma: &SymbolSpec, phi: &PhaseSpec, f: &SampledFunction, g: &SampledFunction) -> Result<Complex64> {
    f.check_same_grid(g)?;
    let grid = *f.grid();
    check_dims(phi.d, &grid)?;
    let fhat = fourier_transform(f);
    check_band(&fhat, &BandLimit::default())?;
    let dual = *fhat.grid();
    let d = grid.dim();
    let rows = par::map_range(grid.len(), |j| {
        let gx = g.samples()[j];
        if gx == Complex64::default() {
            return Complex64::default();
        }
        let mut x = [0.0; MAX_DIM];
        let mut xi = [0.0; MAX_DIM];
        grid.point(j, &mut x);
        let mut acc = Complex64::default();
        for (m, v) in fhat.samples().iter().enumerate() {
            dual.point(m, &mut xi);
            acc += sigma.eval(&x[..d], &xi[..d]) * Complex64::cis(2.0 * PI * phi.eval(&x[..d], &xi[..d])) * v;
        }
        acc * gx.conj()
    });
    Ok(rows.into_iter().sum::<Complex64>() * grid.cell() * dual.cell())
}

/// `ℱ^{−1}(m · f̂)` for a Fourier multiplier `m`.
pub fn apply_fourier_multiplier<M>(m: M, f: &SampledFunction) -> SampledFunction
where
    M: Fn(&[f64]) -> Complex64 + Sync,
{
    let fhat = fourier_transform(f);
    inverse_fourier_transform(&fhat.map(|xi, v| v * m(xi)))
}

/// `e^{iμ(D)} f = ℱ^{−1}(e^{iμ} f̂)`.
pub fn apply_multiplier<M>(mu: M, f: &SampledFunction) -> SampledFunction
where
    M: Fn(&[f64]) -> f64 + Sync,
{
    apply_fourier_multiplier(|xi| Complex64::cis(mu(xi)), f)
}
