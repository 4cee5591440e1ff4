//! Short-time Fourier transforms.
//!
//! `V_g f(x, ξ) = Σ_t f(t) conj(g(t − x)) e^{-2πi t·ξ} Δ^d`, one centred FFT per time shift `x`.
//!
//! A [`StftLattice`] selects which shifts are evaluated (every `x_stride`-th grid point per axis)
//! and how many samples the per-shift frame holds. A frame of `M < n` samples centred at `x`
//! computes the same STFT on the coarser frequency lattice `ξ_j = (j − M/2)/(MΔ)`, exactly,
//! provided the window vanishes outside the frame. Norm evaluation streams frames through
//! [`stft_fold`] and never materialises the full matrix.

use std::f64::consts::PI;
use std::io::Write;
use std::path::{Path, PathBuf};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft::CenteredFft;
use crate::grid::{fourier_transform, Grid, SampledFunction, SampledFunction2D, MAX_DIM};
use crate::par;

/// Default cap on the number of complex values a materialised STFT may hold.
pub const DEFAULT_MEMORY_CAP: usize = 1 << 28;

/// Identifier of the default window.
pub const DEFAULT_WINDOW: &str = "gauss";

/// Number of shifts folded into one accumulator by [`stft_fold`].
const SHIFTS_PER_CHUNK: usize = 64;

/// The L²-normalised Gaussian `2^{D/4} e^{-π|t|²}` on `grid`.
pub fn gaussian_window(grid: Grid) -> SampledFunction {
    let c = 2f64.powf(grid.dim() as f64 / 4.0);
    SampledFunction::from_real_fn(grid, move |t| c * (-PI * t.iter().map(|v| v * v).sum::<f64>()).exp())
}

/// Window by identifier. Known ids: `gauss` (normalised Gaussian) and `gauss:<a>`
/// (`e^{-π|t|²/a²}`, L²-normalised).
pub fn window_by_id(id: &str, grid: Grid) -> Result<SampledFunction> {
    if id == "gauss" {
        return Ok(gaussian_window(grid));
    }
    if let Some(a) = id.strip_prefix("gauss:") {
        let a: f64 = a
            .parse()
            .map_err(|_| Error::validation(format!("bad window width in {id:?}")))?;
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::validation(format!("window width must be positive in {id:?}")));
        }
        let dim = grid.dim() as f64;
        let c = (2f64.powf(dim / 4.0)) / a.powf(dim / 2.0);
        return Ok(SampledFunction::from_real_fn(grid, move |t| {
            c * (-PI * t.iter().map(|v| v * v).sum::<f64>() / (a * a)).exp()
        }));
    }
    Err(Error::validation(format!("unknown window id {id:?}")))
}

/// Which shifts and frame length an STFT uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StftLattice {
    /// Evaluate every `x_stride`-th grid point per axis (a power of two).
    pub x_stride: usize,
    /// Samples per frame and axis; `None` means the full grid.
    pub frame: Option<usize>,
}

impl Default for StftLattice {
    fn default() -> Self {
        StftLattice::full()
    }
}

impl StftLattice {
    pub const fn full() -> Self {
        StftLattice {
            x_stride: 1,
            frame: None,
        }
    }

    /// A lattice for Gaussian-type windows of unit scale: frames span `[-4, 4)` per axis and
    /// shifts are spaced by at most `dx`.
    pub fn for_unit_window(grid: &Grid, dx: f64) -> Self {
        let want = (8.0 / grid.spacing()).ceil() as usize;
        let m = want.next_power_of_two().clamp(4, grid.n());
        let mut stride = 1;
        while stride * 2 <= grid.n() / 4 && (stride * 2) as f64 * grid.spacing() <= dx + 1e-12 {
            stride *= 2;
        }
        StftLattice {
            x_stride: stride,
            frame: Some(m),
        }
    }

    pub fn descriptor(&self) -> String {
        match self.frame {
            Some(m) => format!("stride{}_frame{}", self.x_stride, m),
            None => format!("stride{}_full", self.x_stride),
        }
    }
}

/// Time and frequency lattices of an STFT.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StftGeometry {
    pub x_grid: Grid,
    pub xi_grid: Grid,
    stride: usize,
}

impl StftGeometry {
    pub fn new(grid: &Grid, lattice: StftLattice) -> Result<Self> {
        let n = grid.n();
        let m = lattice.frame.unwrap_or(n);
        if m < 4 || !m.is_power_of_two() || m > n {
            return Err(Error::validation(format!(
                "frame length {m} must be a power of two in [4, {n}]"
            )));
        }
        let s = lattice.x_stride;
        if s == 0 || !s.is_power_of_two() || n / s < 4 {
            return Err(Error::validation(format!(
                "x stride {s} must be a power of two leaving at least 4 shifts per axis"
            )));
        }
        Ok(StftGeometry {
            x_grid: Grid::new(grid.dim(), n / s, grid.spacing() * s as f64)?,
            xi_grid: Grid::new(grid.dim(), m, 1.0 / (m as f64 * grid.spacing()))?,
            stride: s,
        })
    }

    /// Number of complex values in the materialised transform.
    pub fn len(&self) -> usize {
        self.x_grid.len() * self.xi_grid.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Per-shift frame computation shared by every STFT routine.
struct FrameKernel<'a> {
    f: &'a [Complex64],
    grid: Grid,
    geom: StftGeometry,
    window: Vec<Complex64>,
    twiddle: Vec<Complex64>,
    skip_below: f64,
    /// For `d = 1`: running count of samples above `skip_below`, used to skip empty frames in O(1).
    occupancy: Option<Vec<u32>>,
}

impl<'a> FrameKernel<'a> {
    fn new(f: &'a SampledFunction, g: &SampledFunction, lattice: StftLattice) -> Result<Self> {
        f.check_same_grid(g)?;
        if g.l2_norm() == 0.0 {
            return Err(Error::validation("window has zero L2 norm"));
        }
        let grid = *f.grid();
        let geom = StftGeometry::new(&grid, lattice)?;
        let m = geom.xi_grid.n();
        let n = grid.n();
        let fg = Grid::new(grid.dim(), m, grid.spacing())?;
        let window = (0..fg.len())
            .map(|flat| {
                let idx = fg.unravel(flat);
                let src: Vec<usize> = idx[..grid.dim()].iter().map(|&j| j + n / 2 - m / 2).collect();
                g.samples()[grid.ravel(&src)].conj()
            })
            .collect();
        let twiddle = (0..m)
            .map(|r| Complex64::from_polar(1.0, -2.0 * PI * r as f64 / m as f64))
            .collect();
        let skip_below = f.sup_norm() * 1e-15;
        let occupancy = (grid.dim() == 1).then(|| {
            let mut acc = vec![0u32; n + 1];
            for (i, v) in f.samples().iter().enumerate() {
                acc[i + 1] = acc[i] + u32::from(v.norm() > skip_below);
            }
            acc
        });
        Ok(FrameKernel {
            f: f.samples(),
            grid,
            geom,
            window,
            twiddle,
            skip_below,
            occupancy,
        })
    }

    fn frame_is_empty(&self, start: i64) -> bool {
        let Some(occ) = &self.occupancy else {
            return false;
        };
        let n = self.grid.n() as i64;
        let m = self.geom.xi_grid.n() as i64;
        let a = start.rem_euclid(n) as usize;
        let b = a + m as usize;
        let count = if b <= n as usize {
            occ[b] - occ[a]
        } else {
            (occ[n as usize] - occ[a]) + occ[b - n as usize]
        };
        count == 0
    }

    /// Fills `out` with `V_g f(x, ·)` for lattice shift `shift`. Returns false (leaving `out`
    /// untouched) when the frame holds no signal.
    fn frame(&self, shift: usize, out: &mut [Complex64], fft: &mut CenteredFft) -> bool {
        let d = self.grid.dim();
        let n = self.grid.n() as i64;
        let m = self.geom.xi_grid.n();
        let xs = self.geom.x_grid.unravel(shift);
        let mut base = [0i64; MAX_DIM];
        for a in 0..d {
            base[a] = (xs[a] * self.geom.stride) as i64 - (m / 2) as i64;
        }
        if self.frame_is_empty(base[0]) {
            return false;
        }
        let mut peak = 0.0f64;
        let frame_len = out.len();
        for (k, slot) in out.iter_mut().enumerate() {
            let mut r = k;
            let mut src = 0usize;
            let mut idx = [0usize; MAX_DIM];
            for a in (0..d).rev() {
                idx[a] = r % m;
                r /= m;
            }
            for a in 0..d {
                src = src * n as usize + (base[a] + idx[a] as i64).rem_euclid(n) as usize;
            }
            let v = self.f[src];
            peak = peak.max(v.norm_sqr());
            *slot = v * self.window[k];
        }
        if peak.sqrt() <= self.skip_below || peak == 0.0 {
            return false;
        }
        fft.process(out);
        let cell = self.grid.cell();
        let half_n = (self.grid.n() / 2) as i64;
        let half_m = (m / 2) as i64;
        let mm = m as i64;
        for (j, slot) in out.iter_mut().enumerate().take(frame_len) {
            let mut r = j;
            let mut idx = [0usize; MAX_DIM];
            for a in (0..d).rev() {
                idx[a] = r % m;
                r /= m;
            }
            let mut e = 0i64;
            for a in 0..d {
                let xi = (xs[a] * self.geom.stride) as i64 - half_n;
                e += xi.rem_euclid(mm) * (idx[a] as i64 - half_m).rem_euclid(mm);
            }
            *slot *= self.twiddle[e.rem_euclid(mm) as usize] * cell;
        }
        true
    }
}

/// Streams every non-empty frame of `V_g f` through `fold`.
///
/// Shifts are processed in fixed-size chunks, each with its own accumulator from `init`; the
/// accumulators come back in shift order so callers can reduce them deterministically. `fold`
/// receives the lattice index of the shift (`x_grid` axis indices) and the frame's spectrum on
/// `xi_grid`. Frames whose samples vanish are skipped.
pub fn stft_fold<A, I, F>(
    f: &SampledFunction,
    g: &SampledFunction,
    lattice: StftLattice,
    init: I,
    fold: F,
) -> Result<(StftGeometry, Vec<A>)>
where
    A: Send,
    I: Fn() -> A + Sync + Send,
    F: Fn(&mut A, &[usize], &[Complex64]) + Sync + Send,
{
    let kernel = FrameKernel::new(f, g, lattice)?;
    let geom = kernel.geom;
    let shifts = geom.x_grid.len();
    let frame_len = geom.xi_grid.len();
    let chunks = shifts.div_ceil(SHIFTS_PER_CHUNK);
    let d = geom.x_grid.dim();
    let m = geom.xi_grid.n();
    let accs = par::map_range_init(
        chunks,
        || (vec![Complex64::default(); frame_len], CenteredFft::new(m, d, false)),
        |(buf, fft), c| {
            let mut acc = init();
            let end = ((c + 1) * SHIFTS_PER_CHUNK).min(shifts);
            for s in c * SHIFTS_PER_CHUNK..end {
                if kernel.frame(s, buf, fft) {
                    let idx = geom.x_grid.unravel(s);
                    fold(&mut acc, &idx[..d], buf);
                }
            }
            acc
        },
    );
    Ok((geom, accs))
}

/// A sampled STFT `V_g f(x, ξ)`, indexed `(x, ξ)` with `x` major.
#[derive(Debug, Clone, PartialEq)]
pub struct TFMatrix {
    x_grid: Grid,
    xi_grid: Grid,
    values: Vec<Complex64>,
}

impl TFMatrix {
    pub fn new(x_grid: Grid, xi_grid: Grid, values: Vec<Complex64>) -> Result<Self> {
        if x_grid.dim() != xi_grid.dim() {
            return Err(Error::structural("time and frequency grids differ in dimension"));
        }
        if values.len() != x_grid.len() * xi_grid.len() {
            return Err(Error::structural(format!(
                "expected {} values, got {}",
                x_grid.len() * xi_grid.len(),
                values.len()
            )));
        }
        if values.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::validation("non-finite STFT value"));
        }
        Ok(TFMatrix {
            x_grid,
            xi_grid,
            values,
        })
    }

    pub fn x_grid(&self) -> &Grid {
        &self.x_grid
    }

    pub fn xi_grid(&self) -> &Grid {
        &self.xi_grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// Value at flat time index `x` and flat frequency index `xi`.
    pub fn get(&self, x: usize, xi: usize) -> Complex64 {
        self.values[x * self.xi_grid.len() + xi]
    }

    /// `(Σ |V|² Δx Δξ)^{1/2}`.
    pub fn l2_norm(&self) -> f64 {
        let w = self.x_grid.cell() * self.xi_grid.cell();
        (self.values.iter().map(|z| z.norm_sqr()).sum::<f64>() * w).sqrt()
    }

    /// CSV with a grid header line and `x_index,xi_index,re,im` rows (flat indices).
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(
            out,
            "# x: dim={} n={} spacing={}; xi: dim={} n={} spacing={}",
            self.x_grid.dim(),
            self.x_grid.n(),
            self.x_grid.spacing(),
            self.xi_grid.dim(),
            self.xi_grid.n(),
            self.xi_grid.spacing()
        )?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["x_index", "xi_index", "re", "im"])?;
        let nxi = self.xi_grid.len();
        for (k, z) in self.values.iter().enumerate() {
            w.write_record(&[
                (k / nxi).to_string(),
                (k % nxi).to_string(),
                z.re.to_string(),
                z.im.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// The STFT `𝒱_Ψ F(z, ζ)` of a function on `R^{2d}`; the point is `(z1, z2, ζ1, ζ2)` with each
/// slot a `d`-dimensional block.
#[derive(Debug, Clone, PartialEq)]
pub struct TFMatrix4 {
    inner: TFMatrix,
}

impl TFMatrix4 {
    pub fn z_grid(&self) -> &Grid {
        &self.inner.x_grid
    }

    pub fn zeta_grid(&self) -> &Grid {
        &self.inner.xi_grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.inner.values
    }

    /// Block dimension `d`.
    pub fn block_dim(&self) -> usize {
        self.inner.x_grid.dim() / 2
    }

    /// Samples per axis in the four slots `(z1, z2, ζ1, ζ2)`.
    pub fn slot_lengths(&self) -> [usize; 4] {
        let nz = self.inner.x_grid.n();
        let nzeta = self.inner.xi_grid.n();
        [nz, nz, nzeta, nzeta]
    }

    /// Grid spacings of the four slots.
    pub fn slot_spacings(&self) -> [f64; 4] {
        let dz = self.inner.x_grid.spacing();
        let dzeta = self.inner.xi_grid.spacing();
        [dz, dz, dzeta, dzeta]
    }

    pub fn as_matrix(&self) -> &TFMatrix {
        &self.inner
    }

    /// Writes chunked CSV files `<prefix>.<k>.csv` with columns `z1,z2,zeta1,zeta2,re,im`
    /// (block-flat indices), at most `rows_per_chunk` rows each. Returns the written paths.
    pub fn write_csv_chunks(&self, prefix: &Path, rows_per_chunk: usize) -> Result<Vec<PathBuf>> {
        let rows_per_chunk = rows_per_chunk.max(1);
        let d = self.block_dim();
        let nz = self.inner.x_grid.n().pow(d as u32);
        let nzeta = self.inner.xi_grid.n().pow(d as u32);
        let mut paths = Vec::new();
        for (c, chunk) in self.inner.values.chunks(rows_per_chunk).enumerate() {
            let path = PathBuf::from(format!("{}.{c:04}.csv", prefix.display()));
            let mut file = std::io::BufWriter::new(std::fs::File::create(&path)?);
            writeln!(
                file,
                "# z: n={} spacing={}; zeta: n={} spacing={}; block_dim={}",
                self.inner.x_grid.n(),
                self.inner.x_grid.spacing(),
                self.inner.xi_grid.n(),
                self.inner.xi_grid.spacing(),
                d
            )?;
            let mut w = csv::Writer::from_writer(file);
            w.write_record(["z1", "z2", "zeta1", "zeta2", "re", "im"])?;
            for (k, z) in chunk.iter().enumerate() {
                let flat = c * rows_per_chunk + k;
                let (zf, zetaf) = (flat / (nzeta * nzeta), flat % (nzeta * nzeta));
                w.write_record(&[
                    (zf / nz).to_string(),
                    (zf % nz).to_string(),
                    (zetaf / nzeta).to_string(),
                    (zetaf % nzeta).to_string(),
                    z.re.to_string(),
                    z.im.to_string(),
                ])?;
            }
            w.flush()?;
            paths.push(path);
        }
        Ok(paths)
    }
}

fn materialise(f: &SampledFunction, g: &SampledFunction, lattice: StftLattice, cap: usize) -> Result<TFMatrix> {
    let kernel = FrameKernel::new(f, g, lattice)?;
    let geom = kernel.geom;
    if geom.len() > cap {
        let d = geom.x_grid.dim() as u32;
        let per_axis = geom.len() as f64 / (f.grid().n().pow(2 * d)) as f64;
        let mut best = 4usize;
        while ((best * 2).pow(2 * d) as f64 * per_axis) <= cap as f64 {
            best *= 2;
        }
        return Err(Error::Resource(format!(
            "STFT needs {} complex values, above the budget of {cap}; the largest admissible n per axis is {best}",
            geom.len()
        )));
    }
    let frame_len = geom.xi_grid.len();
    let m = geom.xi_grid.n();
    let d = geom.x_grid.dim();
    let mut values = vec![Complex64::default(); geom.len()];
    par::for_each_chunk_init(
        &mut values,
        frame_len,
        || CenteredFft::new(m, d, false),
        |fft, s, out| {
            if !kernel.frame(s, out, fft) {
                out.iter_mut().for_each(|v| *v = Complex64::default());
            }
        },
    );
    TFMatrix::new(geom.x_grid, geom.xi_grid, values)
}

/// Full STFT `V_g f` on the grid of `f`.
pub fn stft(f: &SampledFunction, g: &SampledFunction) -> Result<TFMatrix> {
    stft_with(f, g, StftLattice::full())
}

pub fn stft_with(f: &SampledFunction, g: &SampledFunction, lattice: StftLattice) -> Result<TFMatrix> {
    materialise(f, g, lattice, DEFAULT_MEMORY_CAP)
}

/// Full STFT `𝒱_Ψ F` of a function on `R^{2d}`.
pub fn stft4(f: &SampledFunction2D, psi: &SampledFunction2D) -> Result<TFMatrix4> {
    stft4_with(f, psi, StftLattice::full(), DEFAULT_MEMORY_CAP)
}

pub fn stft4_with(
    f: &SampledFunction2D,
    psi: &SampledFunction2D,
    lattice: StftLattice,
    cap: usize,
) -> Result<TFMatrix4> {
    if f.grid().dim() % 2 != 0 {
        return Err(Error::structural(format!(
            "stft4 needs a function on R^(2d), got dimension {}",
            f.grid().dim()
        )));
    }
    Ok(TFMatrix4 {
        inner: materialise(f, psi, lattice, cap)?,
    })
}

/// `max |V_g f(x, ξ) − e^{-2πi x·ξ} V_ĝ f̂(ξ, −x)|` over the full grid.
pub fn fundamental_identity_residual(f: &SampledFunction, g: &SampledFunction) -> Result<f64> {
    let lhs = stft(f, g)?;
    let rhs = stft(&fourier_transform(f), &fourier_transform(g))?;
    let grid = *f.grid();
    let n = grid.n();
    let d = grid.dim();
    let total = grid.len();
    let half = (n / 2) as i64;
    let nn = n as i64;
    let twiddle: Vec<Complex64> = (0..n)
        .map(|r| Complex64::from_polar(1.0, -2.0 * PI * r as f64 / n as f64))
        .collect();
    let worst = par::map_range(total, |a| {
        let ai = grid.unravel(a);
        let mut neg = [0usize; MAX_DIM];
        for k in 0..d {
            neg[k] = (n - ai[k]) % n;
        }
        let neg_flat = grid.ravel(&neg[..d]);
        let mut w = 0.0f64;
        for b in 0..total {
            let bi = grid.unravel(b);
            let mut e = 0i64;
            for k in 0..d {
                e += (ai[k] as i64 - half) * (bi[k] as i64 - half);
            }
            let phase = twiddle[e.rem_euclid(nn) as usize];
            let diff = lhs.get(a, b) - phase * rhs.get(b, neg_flat);
            w = w.max(diff.norm());
        }
        w
    });
    Ok(worst.into_iter().fold(0.0, f64::max))
}
