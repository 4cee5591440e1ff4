//! Uniform grids, sampled functions and the elementary operators on them.
//!
//! A grid has `n` points per axis (a power of two, at least 4) with spacing `Δ` and covers the
//! symmetric box `[-L, L)^dim`, `L = nΔ/2`. Sample `j` sits at `t_j = (j - n/2)Δ`. The dual grid
//! has spacing `1/(nΔ)`, and [`fourier_transform`] maps samples on a grid to samples on its dual
//! via the Riemann sum of `∫ f(x) e^{-2πix·ξ} dx`, which is exactly invertible.

use std::f64::consts::PI;
use std::io::{BufRead, Write};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft::CenteredFft;
use crate::par;

/// Largest supported grid dimension (a function on `R^{2d}` with `d = 2`).
pub const MAX_DIM: usize = 4;

/// `⟨z⟩ = (1 + |z|²)^{1/2}`.
pub fn japanese(z: &[f64]) -> f64 {
    (1.0 + z.iter().map(|v| v * v).sum::<f64>()).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    dim: usize,
    n: usize,
    spacing: f64,
}

impl Grid {
    pub fn new(dim: usize, n: usize, spacing: f64) -> Result<Self> {
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::structural(format!(
                "grid dimension {dim} not in 1..={MAX_DIM}"
            )));
        }
        if n < 4 || !n.is_power_of_two() {
            return Err(Error::validation(format!(
                "samples per axis must be a power of two >= 4, got {n}"
            )));
        }
        if !(spacing.is_finite() && spacing > 0.0) {
            return Err(Error::validation(format!("grid spacing must be positive, got {spacing}")));
        }
        Ok(Grid { dim, n, spacing })
    }

    /// Grid with `n` points per axis covering `[-half_width, half_width)^dim`.
    pub fn with_half_width(dim: usize, n: usize, half_width: f64) -> Result<Self> {
        Self::new(dim, n, 2.0 * half_width / n as f64)
    }

    /// The default grid: `d = 1`, `n = 512`, `L = 16`.
    pub fn default_1d() -> Self {
        Grid {
            dim: 1,
            n: 512,
            spacing: 1.0 / 16.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn half_width(&self) -> f64 {
        self.n as f64 * self.spacing / 2.0
    }

    /// Total number of samples `n^dim`.
    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Volume element `Δ^dim`.
    pub fn cell(&self) -> f64 {
        self.spacing.powi(self.dim as i32)
    }

    /// Coordinate of index `j` along one axis.
    pub fn coord(&self, j: usize) -> f64 {
        (j as f64 - (self.n / 2) as f64) * self.spacing
    }

    /// Nearest axis index for coordinate `x`, wrapped periodically.
    pub fn wrap_index(&self, x: f64) -> usize {
        let k = (x / self.spacing).round() as i64 + (self.n / 2) as i64;
        k.rem_euclid(self.n as i64) as usize
    }

    /// The grid on which Fourier transforms of functions on `self` live.
    pub fn dual(&self) -> Grid {
        Grid {
            dim: self.dim,
            n: self.n,
            spacing: 1.0 / (self.n as f64 * self.spacing),
        }
    }

    /// Writes the coordinates of flat index `flat` into `out[..dim]` (row-major, last axis fastest).
    pub fn point(&self, flat: usize, out: &mut [f64]) {
        let mut r = flat;
        for a in (0..self.dim).rev() {
            out[a] = self.coord(r % self.n);
            r /= self.n;
        }
    }

    /// Axis indices of flat index `flat`.
    pub fn unravel(&self, flat: usize) -> [usize; MAX_DIM] {
        let mut idx = [0; MAX_DIM];
        let mut r = flat;
        for a in (0..self.dim).rev() {
            idx[a] = r % self.n;
            r /= self.n;
        }
        idx
    }

    pub fn ravel(&self, idx: &[usize]) -> usize {
        idx.iter().fold(0, |acc, &i| acc * self.n + i)
    }

    /// Grid of the same resolution in another dimension.
    pub fn with_dim(&self, dim: usize) -> Result<Grid> {
        Grid::new(dim, self.n, self.spacing)
    }

    /// Short descriptor used in reports, e.g. `d1_n512_dx0.0625`.
    pub fn descriptor(&self) -> String {
        format!("d{}_n{}_dx{}", self.dim, self.n, self.spacing)
    }

    pub(crate) fn same_as(&self, other: &Grid) -> bool {
        self.dim == other.dim
            && self.n == other.n
            && (self.spacing - other.spacing).abs() <= 1e-12 * self.spacing
    }
}

/// Complex samples of a function on a [`Grid`], row-major with the last axis fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledFunction {
    grid: Grid,
    samples: Vec<Complex64>,
}

/// Samples of a function on `R^{2d}`; the first `d` axes are `x`, the last `d` are `ξ`.
pub type SampledFunction2D = SampledFunction;

impl SampledFunction {
    pub fn new(grid: Grid, samples: Vec<Complex64>) -> Result<Self> {
        if samples.len() != grid.len() {
            return Err(Error::structural(format!(
                "expected {} samples for grid {}, got {}",
                grid.len(),
                grid.descriptor(),
                samples.len()
            )));
        }
        if let Some(i) = samples.iter().position(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::validation(format!("non-finite sample at index {i}")));
        }
        Ok(SampledFunction { grid, samples })
    }

    pub fn zeros(grid: Grid) -> Self {
        SampledFunction {
            grid,
            samples: vec![Complex64::default(); grid.len()],
        }
    }

    /// Samples `f` at every grid point. Panics if `f` returns a non-finite value.
    pub fn from_fn<F>(grid: Grid, f: F) -> Self
    where
        F: Fn(&[f64]) -> Complex64 + Sync + Send,
    {
        let samples = par::map_range(grid.len(), |i| {
            let mut t = [0.0; MAX_DIM];
            grid.point(i, &mut t);
            f(&t[..grid.dim])
        });
        Self::new(grid, samples).expect("from_fn: sampled function must be finite")
    }

    /// Real-valued convenience wrapper around [`SampledFunction::from_fn`].
    pub fn from_real_fn<F>(grid: Grid, f: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Sync + Send,
    {
        Self::from_fn(grid, |t| Complex64::new(f(t), 0.0))
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<Complex64> {
        self.samples
    }

    /// Applies `f(point, value)` to every sample.
    pub fn map<F>(&self, f: F) -> Self
    where
        F: Fn(&[f64], Complex64) -> Complex64 + Sync + Send,
    {
        let grid = self.grid;
        let samples = par::map_range(grid.len(), |i| {
            let mut t = [0.0; MAX_DIM];
            grid.point(i, &mut t);
            f(&t[..grid.dim], self.samples[i])
        });
        Self::new(grid, samples).expect("map: result must be finite")
    }

    pub fn l2_norm(&self) -> f64 {
        (self.samples.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.grid.cell()).sqrt()
    }

    pub fn sup_norm(&self) -> f64 {
        self.samples.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `⟨f, g⟩ = Σ f conj(g) Δ^d`.
    pub fn inner(&self, other: &SampledFunction) -> Result<Complex64> {
        self.check_same_grid(other)?;
        let s: Complex64 = self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(a, b)| a * b.conj())
            .sum();
        Ok(s * self.grid.cell())
    }

    pub fn scale(&self, c: Complex64) -> Self {
        SampledFunction {
            grid: self.grid,
            samples: self.samples.iter().map(|z| z * c).collect(),
        }
    }

    pub fn conj(&self) -> Self {
        SampledFunction {
            grid: self.grid,
            samples: self.samples.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn add(&self, other: &SampledFunction) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &SampledFunction) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    /// Pointwise product.
    pub fn mul(&self, other: &SampledFunction) -> Result<Self> {
        self.zip_with(other, |a, b| a * b)
    }

    fn zip_with(&self, other: &SampledFunction, f: impl Fn(Complex64, Complex64) -> Complex64) -> Result<Self> {
        self.check_same_grid(other)?;
        Ok(SampledFunction {
            grid: self.grid,
            samples: self.samples.iter().zip(&other.samples).map(|(a, b)| f(*a, *b)).collect(),
        })
    }

    pub(crate) fn check_same_grid(&self, other: &SampledFunction) -> Result<()> {
        if self.grid.same_as(&other.grid) {
            Ok(())
        } else {
            Err(Error::structural(format!(
                "grid mismatch: {} vs {}",
                self.grid.descriptor(),
                other.grid.descriptor()
            )))
        }
    }

    /// Relative L² distance `‖self − other‖ / ‖other‖` (absolute when `other` vanishes).
    pub fn rel_l2_error(&self, other: &SampledFunction) -> Result<f64> {
        let diff = self.sub(other)?.l2_norm();
        let base = other.l2_norm();
        Ok(if base > 0.0 { diff / base } else { diff })
    }

    /// Writes the function as CSV: a `# dim=.. n=.. spacing=..` line, then `i0,..,re,im` rows.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(
            out,
            "# dim={} n={} spacing={}",
            self.grid.dim, self.grid.n, self.grid.spacing
        )?;
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<String> = (0..self.grid.dim).map(|a| format!("i{a}")).collect();
        header.push("re".into());
        header.push("im".into());
        w.write_record(&header)?;
        let mut rec: Vec<String> = Vec::with_capacity(self.grid.dim + 2);
        for (flat, z) in self.samples.iter().enumerate() {
            rec.clear();
            let idx = self.grid.unravel(flat);
            rec.extend(idx[..self.grid.dim].iter().map(|i| i.to_string()));
            rec.push(z.re.to_string());
            rec.push(z.im.to_string());
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: BufRead>(mut input: R) -> Result<Self> {
        let mut first = String::new();
        input.read_line(&mut first)?;
        let grid = parse_grid_header(&first)?;
        let mut rdr = csv::Reader::from_reader(input);
        let mut samples = vec![Complex64::default(); grid.len()];
        let mut seen = vec![false; grid.len()];
        for rec in rdr.records() {
            let rec = rec?;
            if rec.len() != grid.dim + 2 {
                return Err(Error::Parse(format!("expected {} columns, got {}", grid.dim + 2, rec.len())));
            }
            let mut idx = [0usize; MAX_DIM];
            for a in 0..grid.dim {
                let v: usize = rec[a].trim().parse().map_err(|e| Error::Parse(format!("index: {e}")))?;
                if v >= grid.n {
                    return Err(Error::structural(format!("index {v} out of range")));
                }
                idx[a] = v;
            }
            let re: f64 = rec[grid.dim].trim().parse().map_err(|e| Error::Parse(format!("re: {e}")))?;
            let im: f64 = rec[grid.dim + 1].trim().parse().map_err(|e| Error::Parse(format!("im: {e}")))?;
            let flat = grid.ravel(&idx[..grid.dim]);
            samples[flat] = Complex64::new(re, im);
            seen[flat] = true;
        }
        if let Some(i) = seen.iter().position(|s| !s) {
            return Err(Error::structural(format!("missing sample at flat index {i}")));
        }
        Self::new(grid, samples)
    }
}

pub(crate) fn parse_grid_header(line: &str) -> Result<Grid> {
    let body = line
        .trim()
        .strip_prefix('#')
        .ok_or_else(|| Error::Parse("missing '# dim=.. n=.. spacing=..' header".into()))?;
    let (mut dim, mut n, mut spacing) = (None, None, None);
    for tok in body.split_whitespace() {
        let (k, v) = tok
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("bad header token {tok:?}")))?;
        match k {
            "dim" => dim = v.parse::<usize>().ok(),
            "n" => n = v.parse::<usize>().ok(),
            "spacing" => spacing = v.parse::<f64>().ok(),
            _ => {}
        }
    }
    match (dim, n, spacing) {
        (Some(d), Some(n), Some(s)) => Grid::new(d, n, s),
        _ => Err(Error::Parse(format!("incomplete grid header {line:?}"))),
    }
}

fn centered_transform(f: &SampledFunction, inverse: bool) -> SampledFunction {
    let grid = f.grid;
    let mut data = f.samples.clone();
    CenteredFft::new(grid.n, grid.dim, inverse).process(&mut data);
    let scale = grid.cell();
    for v in &mut data {
        *v *= scale;
    }
    SampledFunction {
        grid: grid.dual(),
        samples: data,
    }
}

/// `f̂(ξ_m) = Σ_j f(t_j) e^{-2πi t_j·ξ_m} Δ^d` on the dual grid.
pub fn fourier_transform(f: &SampledFunction) -> SampledFunction {
    centered_transform(f, false)
}

/// Inverse of [`fourier_transform`]: `f(t_j) = Σ_m f̂(ξ_m) e^{2πi t_j·ξ_m} Δξ^d`.
pub fn inverse_fourier_transform(fhat: &SampledFunction) -> SampledFunction {
    centered_transform(fhat, true)
}

/// `(M_ω T_u f)(t) = e^{2πi t·ω} f(t − u)`, with circular wraparound. `u` must be on the grid.
pub fn translate_modulate(f: &SampledFunction, u: &[f64], omega: &[f64]) -> Result<SampledFunction> {
    let grid = f.grid;
    if u.len() != grid.dim || omega.len() != grid.dim {
        return Err(Error::structural(format!(
            "shift/frequency vectors must have length {}",
            grid.dim
        )));
    }
    let mut steps = [0i64; MAX_DIM];
    for a in 0..grid.dim {
        let r = u[a] / grid.spacing;
        let k = r.round();
        if (r - k).abs() > 1e-9 * r.abs().max(1.0) {
            let nearest: Vec<f64> = u.iter().map(|v| (v / grid.spacing).round() * grid.spacing).collect();
            return Err(Error::validation(format!(
                "shift {u:?} is not a multiple of the grid spacing {}; nearest grid shift is {nearest:?}",
                grid.spacing
            )));
        }
        steps[a] = k as i64;
    }
    let n = grid.n as i64;
    let omega: Vec<f64> = omega.to_vec();
    let samples = par::map_range(grid.len(), |flat| {
        let idx = grid.unravel(flat);
        let mut src = 0usize;
        let mut phase = 0.0;
        for a in 0..grid.dim {
            let j = (idx[a] as i64 - steps[a]).rem_euclid(n) as usize;
            src = src * grid.n + j;
            phase += grid.coord(idx[a]) * omega[a];
        }
        f.samples[src] * Complex64::from_polar(1.0, 2.0 * PI * phase)
    });
    SampledFunction::new(grid, samples)
}

/// Periodic band-limited interpolation matrix on one axis: row `j` evaluates the trigonometric
/// interpolant of the samples at `λ t_j`.
fn dilation_matrix(grid: &Grid, lambda: f64) -> Vec<f64> {
    let n = grid.n;
    let k = (n / 2 - 1) as f64;
    let period = n as f64 * grid.spacing;
    par::map_range(n * n, |e| {
        let (j, l) = (e / n, e % n);
        let x = lambda * grid.coord(j) - grid.coord(l);
        let half = PI * x / period;
        let s = half.sin();
        let dirichlet = if s.abs() < 1e-12 {
            2.0 * k + 1.0
        } else {
            ((2.0 * k + 1.0) * half).sin() / s
        };
        let nyquist = (n as f64 * half).cos();
        (dirichlet + nyquist) / n as f64
    })
}

/// `D_λF(x, ξ) = F(λ1 x, λ2 ξ)` by separable band-limited interpolation.
pub fn dilate2(f: &SampledFunction2D, lambda1: f64, lambda2: f64) -> Result<SampledFunction2D> {
    for (name, l) in [("lambda1", lambda1), ("lambda2", lambda2)] {
        if !(l > 0.0 && l <= 1.0) {
            return Err(Error::domain(format!("{name} = {l} outside (0, 1]")));
        }
    }
    let grid = f.grid;
    if grid.dim % 2 != 0 {
        return Err(Error::structural(format!(
            "dilate2 needs a function on R^(2d), got dimension {}",
            grid.dim
        )));
    }
    let d = grid.dim / 2;
    let n = grid.n;
    let mut data = f.samples.clone();
    let mats = [dilation_matrix(&grid, lambda1), dilation_matrix(&grid, lambda2)];
    for axis in 0..grid.dim {
        let lambda = if axis < d { lambda1 } else { lambda2 };
        if lambda == 1.0 {
            continue;
        }
        let w = &mats[usize::from(axis >= d)];
        let stride = n.pow((grid.dim - 1 - axis) as u32);
        let block = stride * n;
        let src = data.clone();
        par::for_each_chunk_init(&mut data, block, || vec![Complex64::default(); n], |line, b, dst| {
            let base = &src[b * block..(b + 1) * block];
            for i in 0..stride {
                for (k, v) in line.iter_mut().enumerate() {
                    *v = base[k * stride + i];
                }
                for j in 0..n {
                    let row = &w[j * n..(j + 1) * n];
                    let acc: Complex64 = row.iter().zip(line.iter()).map(|(a, z)| z * *a).sum();
                    dst[j * stride + i] = acc;
                }
            }
        });
    }
    SampledFunction::new(grid, data)
}
