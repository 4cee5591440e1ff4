//! Phase functions and the verifiers for growth, separation and the lattice geometry of
//! separated phases.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{japanese, Grid, SampledFunction2D, MAX_DIM};
use crate::par;
use crate::spaces::{self, LocalNorm};

/// Nested boxes used to judge growth.
pub const DEFAULT_BOXES: [f64; 3] = [8.0, 16.0, 32.0];
/// Largest admissible growth between consecutive boxes for a quantity to count as bounded.
pub const BOX_STABILITY: f64 = 1.15;
/// Gradient gap that operationalises `≳ 1` in the separation condition.
pub const DEFAULT_SEPARATION_THRESHOLD: f64 = 0.5;

/// `exp(1 − 1/(1 − u²))` on `|u| < 1`, zero elsewhere; equals 1 at the origin.
pub fn mollifier(u: f64) -> f64 {
    let v = 1.0 - u * u;
    if v <= 0.0 {
        0.0
    } else {
        (1.0 - 1.0 / v).exp()
    }
}

/// A function of `d` variables with analytic gradient and Hessian.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Profile {
    Zero,
    /// `c ⟨y⟩^β`.
    JapanesePower { coef: f64, beta: f64 },
    /// `c · mollifier(|y| / r)`.
    Bump { coef: f64, radius: f64 },
}

impl Profile {
    pub fn eval(&self, y: &[f64]) -> f64 {
        match *self {
            Profile::Zero => 0.0,
            Profile::JapanesePower { coef, beta } => coef * japanese(y).powf(beta),
            Profile::Bump { coef, radius } => {
                let u2: f64 = y.iter().map(|v| v * v).sum::<f64>() / (radius * radius);
                coef * mollifier(u2.sqrt())
            }
        }
    }

    pub fn grad(&self, y: &[f64], out: &mut [f64]) {
        match *self {
            Profile::Zero => out.iter_mut().for_each(|o| *o = 0.0),
            Profile::JapanesePower { coef, beta } => {
                let c = coef * beta * japanese(y).powf(beta - 2.0);
                for (o, v) in out.iter_mut().zip(y) {
                    *o = c * v;
                }
            }
            Profile::Bump { coef, radius } => {
                let r2 = radius * radius;
                let u: f64 = y.iter().map(|v| v * v).sum::<f64>() / r2;
                let c = if u >= 1.0 {
                    0.0
                } else {
                    let w = 1.0 - u;
                    -coef * (1.0 - 1.0 / w).exp() / (w * w) * 2.0 / r2
                };
                for (o, v) in out.iter_mut().zip(y) {
                    *o = c * v;
                }
            }
        }
    }

    /// Row-major `d × d` Hessian.
    pub fn hessian(&self, y: &[f64], out: &mut [f64]) {
        let d = y.len();
        out.iter_mut().for_each(|o| *o = 0.0);
        match *self {
            Profile::Zero => {}
            Profile::JapanesePower { coef, beta } => {
                let j = japanese(y);
                let a = coef * beta * j.powf(beta - 2.0);
                let b = coef * beta * (beta - 2.0) * j.powf(beta - 4.0);
                for r in 0..d {
                    for c in 0..d {
                        out[r * d + c] = b * y[r] * y[c] + if r == c { a } else { 0.0 };
                    }
                }
            }
            Profile::Bump { coef, radius } => {
                let r2 = radius * radius;
                let u: f64 = y.iter().map(|v| v * v).sum::<f64>() / r2;
                if u >= 1.0 {
                    return;
                }
                let w = 1.0 - u;
                let b = (1.0 - 1.0 / w).exp();
                let d1 = -b / (w * w);
                let d2 = b * (1.0 / w.powi(4) - 2.0 / w.powi(3));
                for r in 0..d {
                    for c in 0..d {
                        let diag = if r == c { d1 * 2.0 / r2 } else { 0.0 };
                        out[r * d + c] = coef * (d2 * 4.0 * y[r] * y[c] / (r2 * r2) + diag);
                    }
                }
            }
        }
    }
}

/// `α ∈ [0, 1]` or the high-growth sentinel `−∞`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Alpha {
    Finite(f64),
    MinusInfinity,
}

impl fmt::Display for Alpha {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Alpha::Finite(a) => write!(f, "{a}"),
            Alpha::MinusInfinity => write!(f, "-inf"),
        }
    }
}

impl FromStr for Alpha {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "-inf" | "minus-infinity" => Ok(Alpha::MinusInfinity),
            t => {
                let a: f64 = t.parse().map_err(|_| Error::Parse(format!("bad alpha {t:?}")))?;
                if (0.0..=1.0).contains(&a) {
                    Ok(Alpha::Finite(a))
                } else {
                    Err(Error::domain(format!("alpha = {a} outside [0, 1]")))
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    Low,
    Mild,
    Critical,
    High,
    /// Parameter combinations outside the four named classes.
    Mixed,
}

/// Declared `(α, t1, t2)`-growth parameters of a phase.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthParams {
    pub alpha: Alpha,
    pub t1: f64,
    pub t2: f64,
}

impl GrowthParams {
    pub fn new(alpha: Alpha, t1: f64, t2: f64) -> Result<Self> {
        if let Alpha::Finite(a) = alpha {
            if !(0.0..=1.0).contains(&a) {
                return Err(Error::domain(format!("alpha = {a} outside [0, 1]")));
            }
        }
        if !(t1 >= 0.0 && t2 >= 0.0) {
            return Err(Error::domain(format!("t1, t2 must be >= 0, got {t1}, {t2}")));
        }
        Ok(GrowthParams { alpha, t1, t2 })
    }

    pub fn regime(&self) -> Regime {
        let flat = self.t1 == 0.0 && self.t2 == 0.0;
        match self.alpha {
            Alpha::Finite(a) if a == 1.0 && flat => Regime::Low,
            Alpha::Finite(a) if a > 0.0 && a < 1.0 && flat => Regime::Mild,
            Alpha::Finite(a) if a == 0.0 && flat => Regime::Critical,
            Alpha::MinusInfinity if self.t1 + self.t2 > 0.0 => Regime::High,
            _ => Regime::Mixed,
        }
    }
}

/// `Φ(x, ξ) = a(x) + b(ξ) [+ x·ξ]` with declared growth parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSpec {
    pub name: String,
    pub d: usize,
    pub x_part: Profile,
    pub xi_part: Profile,
    pub bilinear: bool,
    pub declared: GrowthParams,
}

impl PhaseSpec {
    /// `Φ = x·ξ`.
    pub fn bilinear(d: usize) -> Self {
        PhaseSpec {
            name: "bilinear".into(),
            d,
            x_part: Profile::Zero,
            xi_part: Profile::Zero,
            bilinear: true,
            declared: GrowthParams { alpha: Alpha::Finite(1.0), t1: 0.0, t2: 0.0 },
        }
    }

    /// `Φ = ⟨x⟩^{2−α} + x·ξ`.
    pub fn mild_growth(alpha: f64, d: usize) -> Result<Self> {
        let declared = GrowthParams::new(Alpha::Finite(alpha), 0.0, 0.0)?;
        Ok(PhaseSpec {
            name: "mild_growth".into(),
            x_part: Profile::JapanesePower { coef: 1.0, beta: 2.0 - alpha },
            declared,
            ..Self::bilinear(d)
        })
    }

    /// `Φ = ⟨x⟩^{2−α}`, no bilinear term.
    pub fn nonseparated_x(alpha: f64, d: usize) -> Result<Self> {
        Ok(PhaseSpec {
            name: "nonseparated_x".into(),
            bilinear: false,
            ..Self::mild_growth(alpha, d)?
        })
    }

    /// `Φ = φ(ξ)` for a compactly supported bump `φ` of the given radius.
    pub fn nonseparated_xi(coef: f64, radius: f64, d: usize) -> Self {
        PhaseSpec {
            name: "nonseparated_xi".into(),
            xi_part: Profile::Bump { coef, radius },
            bilinear: false,
            ..Self::bilinear(d)
        }
    }

    /// `Φ = (μ1(x) + μ2(ξ))/2π + x·ξ` with `μi = ⟨·⟩^{2+ti}`.
    pub fn high_growth(t1: f64, t2: f64, d: usize) -> Result<Self> {
        let declared = GrowthParams::new(Alpha::MinusInfinity, t1, t2)?;
        Ok(PhaseSpec {
            name: "high_growth".into(),
            x_part: Profile::JapanesePower { coef: 1.0 / (2.0 * PI), beta: 2.0 + t1 },
            xi_part: Profile::JapanesePower { coef: 1.0 / (2.0 * PI), beta: 2.0 + t2 },
            declared,
            ..Self::bilinear(d)
        })
    }

    /// Builds a phase from `key=value` pairs such as `kind=mild_growth`, `alpha=0.5`.
    pub fn from_pairs(pairs: &[(String, String)], d: usize) -> Result<Self> {
        let get = |k: &str| pairs.iter().find(|(a, _)| a == k).map(|(_, v)| v.as_str());
        let num = |k: &str, default: f64| -> Result<f64> {
            get(k).map_or(Ok(default), |v| {
                v.parse().map_err(|_| Error::Parse(format!("bad value for {k}: {v:?}")))
            })
        };
        let kind = get("kind").ok_or_else(|| Error::Parse("phase needs kind=...".into()))?;
        let mut spec = match kind {
            "bilinear" => Self::bilinear(d),
            "mild_growth" => Self::mild_growth(num("alpha", 0.5)?, d)?,
            "nonseparated_x" => Self::nonseparated_x(num("alpha", 0.5)?, d)?,
            "nonseparated_xi" => Self::nonseparated_xi(num("coef", 1.0)?, num("radius", 1.0)?, d),
            "high_growth" => Self::high_growth(num("t1", 1.0)?, num("t2", 0.0)?, d)?,
            k => return Err(Error::Parse(format!("unknown phase kind {k:?}"))),
        };
        if let Some(a) = get("declared_alpha") {
            spec.declared.alpha = a.parse()?;
        }
        if let Some(t) = get("declared_t1") {
            spec.declared.t1 = t.parse().map_err(|_| Error::Parse(format!("bad declared_t1 {t:?}")))?;
        }
        if let Some(t) = get("declared_t2") {
            spec.declared.t2 = t.parse().map_err(|_| Error::Parse(format!("bad declared_t2 {t:?}")))?;
        }
        Ok(spec)
    }

    pub fn with_declared(mut self, declared: GrowthParams) -> Self {
        self.declared = declared;
        self
    }

    /// Whether `Φ(x, ξ) = μ(x) + x·ξ`, the form with a closed-form operator.
    pub fn is_multiplier_form(&self) -> bool {
        self.bilinear && self.xi_part == Profile::Zero
    }

    pub fn eval(&self, x: &[f64], xi: &[f64]) -> f64 {
        let mut v = self.x_part.eval(x) + self.xi_part.eval(xi);
        if self.bilinear {
            v += x.iter().zip(xi).map(|(a, b)| a * b).sum::<f64>();
        }
        v
    }

    pub fn grad_x(&self, x: &[f64], xi: &[f64], out: &mut [f64]) {
        self.x_part.grad(x, out);
        if self.bilinear {
            for (o, b) in out.iter_mut().zip(xi) {
                *o += b;
            }
        }
    }

    pub fn grad_xi(&self, x: &[f64], xi: &[f64], out: &mut [f64]) {
        self.xi_part.grad(xi, out);
        if self.bilinear {
            for (o, a) in out.iter_mut().zip(x) {
                *o += a;
            }
        }
    }

    /// The blocks `∂_xx Φ`, `∂_xξ Φ`, `∂_ξξ Φ`, each row-major `d × d`.
    pub fn hessian(&self, x: &[f64], xi: &[f64]) -> [Vec<f64>; 3] {
        let d = self.d;
        let mut xx = vec![0.0; d * d];
        let mut xixi = vec![0.0; d * d];
        let mut mixed = vec![0.0; d * d];
        self.x_part.hessian(x, &mut xx);
        self.xi_part.hessian(xi, &mut xixi);
        if self.bilinear {
            for i in 0..d {
                mixed[i * d + i] = 1.0;
            }
        }
        [xx, mixed, xixi]
    }
}

/// A sampled box `[−L, L]^d` with a given number of points per axis.
fn box_points(d: usize, l: f64, per_axis: usize) -> Vec<[f64; MAX_DIM]> {
    let total = per_axis.pow(d as u32);
    let step = 2.0 * l / (per_axis - 1) as f64;
    (0..total)
        .map(|mut flat| {
            let mut p = [0.0; MAX_DIM];
            for slot in p.iter_mut().take(d) {
                *slot = -l + (flat % per_axis) as f64 * step;
                flat /= per_axis;
            }
            p
        })
        .collect()
}

fn per_axis(d: usize) -> usize {
    if d == 1 {
        257
    } else {
        33
    }
}

fn check_box(l: f64) -> Result<()> {
    if l.is_finite() && l > 0.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("box half-width must be positive and finite, got {l}")))
    }
}

/// `sup |∇_xΦ(x, ξ) − ∇_xΦ(0, ξ)| / ⟨x⟩^{1−α}` over `[−L, L]^{2d}`.
pub fn growth_ratio_x(phi: &PhaseSpec, alpha: Alpha, box_l: f64) -> Result<f64> {
    let a = match alpha {
        Alpha::Finite(a) if (0.0..=1.0).contains(&a) => a,
        Alpha::Finite(a) => return Err(Error::domain(format!("alpha = {a} outside [0, 1]"))),
        Alpha::MinusInfinity => {
            return Err(Error::domain("growth ratio is vacuous for alpha = -inf"));
        }
    };
    check_box(box_l)?;
    let d = phi.d;
    let pts = box_points(d, box_l, per_axis(d));
    let rows = par::map_range(pts.len(), |i| {
        let x = &pts[i][..d];
        let jx = japanese(x).powf(1.0 - a);
        let mut g = [0.0; MAX_DIM];
        let mut g0 = [0.0; MAX_DIM];
        let zero = [0.0; MAX_DIM];
        let mut best = 0.0f64;
        for xi in &pts {
            phi.grad_x(x, &xi[..d], &mut g[..d]);
            phi.grad_x(&zero[..d], &xi[..d], &mut g0[..d]);
            let diff: f64 = g[..d].iter().zip(&g0[..d]).map(|(u, v)| (u - v).powi(2)).sum::<f64>().sqrt();
            best = best.max(diff / jx);
        }
        best
    });
    Ok(rows.into_iter().fold(0.0, f64::max))
}

/// `(A, B, C)`: sums over `|γ| = 2` of the localized special amalgam norms of
/// `⟨x⟩^{−t1} ∂^γ_{xx}Φ`, `⟨ξ⟩^{−t2} ∂^γ_{ξξ}Φ` and `∂^γ_{xξ}Φ`, over unit cells meeting `[−L, L]^{2d}`.
pub fn second_derivative_bounds(phi: &PhaseSpec, t1: f64, t2: f64, eps: f64, box_l: f64) -> Result<(f64, f64, f64)> {
    check_box(box_l)?;
    let d = phi.d;
    let part = PartitionSpec::default();
    let lmax = box_l.floor() as i64;
    let side = (2 * lmax + 1) as usize;
    let cells: Vec<(Vec<i64>, Vec<i64>)> = (0..side.pow(2 * d as u32))
        .map(|mut flat| {
            let mut c = Vec::with_capacity(2 * d);
            for _ in 0..2 * d {
                c.push((flat % side) as i64 - lmax);
                flat /= side;
            }
            let l = c.split_off(d);
            (c, l)
        })
        .collect();
    let mut entries: Vec<(usize, usize, usize)> = Vec::new();
    for r in 0..d {
        for c in 0..d {
            entries.push((1, r, c));
            if r <= c {
                entries.push((0, r, c));
                entries.push((2, r, c));
            }
        }
    }
    let mut out = [0.0; 3];
    for (block, r, c) in entries {
        let entry = |z: &[f64]| -> Complex64 {
            let (x, xi) = z.split_at(d);
            let w = match block {
                0 => japanese(x).powf(-t1),
                2 => japanese(xi).powf(-t2),
                _ => 1.0,
            };
            Complex64::new(w * phi.hessian(x, xi)[block][r * d + c], 0.0)
        };
        out[block] += spaces::localized_norm(&entry, d, &cells, LocalNorm::FlInfInf, eps, &part)?;
    }
    Ok((out[0], out[2], out[1]))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeparationType {
    /// `|∇_ξΦ(x1, ξ) − ∇_ξΦ(x2, ξ)|` for `|x1 − x2| ≥ 1`.
    X,
    /// `|∇_xΦ(x, ξ1) − ∇_xΦ(x, ξ2)|` for `|ξ1 − ξ2| ≥ 1`.
    Xi,
}

/// Infimum of the gradient gap over sampled pairs at distance at least 1 in `[−L, L]^d`.
pub fn separation_margin(phi: &PhaseSpec, kind: SeparationType, box_l: f64) -> Result<f64> {
    check_box(box_l)?;
    let d = phi.d;
    let step = if d == 1 { 0.25 } else { 1.0 };
    let per = (2.0 * box_l / step).round() as usize + 1;
    let pts = box_points(d, box_l, per);
    let rows = par::map_range(pts.len(), |i| {
        let a = &pts[i][..d];
        let mut ga = [0.0; MAX_DIM];
        let mut gb = [0.0; MAX_DIM];
        let mut best = f64::INFINITY;
        for b in &pts[i + 1..] {
            let b = &b[..d];
            let dist: f64 = a.iter().zip(b).map(|(u, v)| (u - v).powi(2)).sum::<f64>().sqrt();
            if dist < 1.0 - 1e-12 {
                continue;
            }
            for shared in &pts {
                let s = &shared[..d];
                match kind {
                    SeparationType::X => {
                        phi.grad_xi(a, s, &mut ga[..d]);
                        phi.grad_xi(b, s, &mut gb[..d]);
                    }
                    SeparationType::Xi => {
                        phi.grad_x(s, a, &mut ga[..d]);
                        phi.grad_x(s, b, &mut gb[..d]);
                    }
                }
                let gap: f64 = ga[..d].iter().zip(&gb[..d]).map(|(u, v)| (u - v).powi(2)).sum::<f64>().sqrt();
                best = best.min(gap);
            }
        }
        best
    });
    Ok(rows.into_iter().fold(f64::INFINITY, f64::min))
}

/// One verified condition: the measured box-to-box growth factor against its threshold.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ConditionReport {
    pub condition: String,
    pub threshold: f64,
    pub measured: f64,
    pub pass: bool,
}

/// Largest factor between consecutive values; pairs that are both numerically zero count as 1.
pub fn box_growth(values: &[f64]) -> f64 {
    let floor = 1e-12 * values.iter().copied().fold(1.0, f64::max);
    values
        .windows(2)
        .map(|w| {
            if w[1] <= floor {
                1.0
            } else {
                w[1] / w[0].max(floor)
            }
        })
        .fold(1.0, f64::max)
}

/// Checks the declared `(α, t1, t2)` of `phi` on nested boxes: the gradient growth ratio
/// (finite α only) and the three weighted second-derivative norms must each stay within
/// [`BOX_STABILITY`] between consecutive boxes.
pub fn verify_declared(phi: &PhaseSpec, eps: f64, boxes: &[f64]) -> Result<Vec<ConditionReport>> {
    if boxes.len() < 2 {
        return Err(Error::validation("verification needs at least two nested boxes"));
    }
    let GrowthParams { alpha, t1, t2 } = phi.declared;
    let mut out = Vec::new();
    let mut push = |condition: String, values: &[f64]| {
        let measured = box_growth(values);
        out.push(ConditionReport { condition, threshold: BOX_STABILITY, measured, pass: measured <= BOX_STABILITY });
    };
    if let Alpha::Finite(_) = alpha {
        let g = boxes.iter().map(|&l| growth_ratio_x(phi, alpha, l)).collect::<Result<Vec<_>>>()?;
        push(format!("grad_x growth alpha={alpha}"), &g);
    }
    let h = boxes
        .iter()
        .map(|&l| second_derivative_bounds(phi, t1, t2, eps, l))
        .collect::<Result<Vec<_>>>()?;
    push(format!("d_xx weighted t1={t1}"), &h.iter().map(|v| v.0).collect::<Vec<_>>());
    push(format!("d_xixi weighted t2={t2}"), &h.iter().map(|v| v.1).collect::<Vec<_>>());
    push("d_xxi".to_string(), &h.iter().map(|v| v.2).collect::<Vec<_>>());
    Ok(out)
}

/// `τ_{k,l}(x, ξ) = Φ(x+k, ξ+l) − Φ(k, l) − ∇_xΦ(k, l)·x − ∇_ξΦ(k, l)·ξ` sampled on `[−1, 1)^{2d}`.
pub fn taylor_remainder(phi: &PhaseSpec, k: &[f64], l: &[f64]) -> Result<SampledFunction2D> {
    let d = phi.d;
    if k.len() != d || l.len() != d {
        return Err(Error::structural(format!("lattice point dimensions {}/{} differ from d = {d}", k.len(), l.len())));
    }
    let grid = Grid::new(2 * d, 32, 1.0 / 16.0)?;
    let base = phi.eval(k, l);
    let mut gx = vec![0.0; d];
    let mut gxi = vec![0.0; d];
    phi.grad_x(k, l, &mut gx);
    phi.grad_xi(k, l, &mut gxi);
    Ok(SampledFunction2D::from_real_fn(grid, |z| {
        let (x, xi) = z.split_at(d);
        let mut xs = [0.0; MAX_DIM];
        let mut xis = [0.0; MAX_DIM];
        for i in 0..d {
            xs[i] = x[i] + k[i];
            xis[i] = xi[i] + l[i];
        }
        let lin: f64 = (0..d).map(|i| gx[i] * x[i] + gxi[i] * xi[i]).sum();
        phi.eval(&xs[..d], &xis[..d]) - base - lin
    }))
}

/// `k_α = ⟨k⟩^{α/(1−α)} k`.
pub fn k_alpha(k: &[f64], alpha: f64) -> Result<Vec<f64>> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::domain(format!("k_alpha needs alpha in [0, 1), got {alpha}")));
    }
    let s = japanese(k).powf(alpha / (1.0 - alpha));
    Ok(k.iter().map(|v| s * v).collect())
}

/// `∇μ(y) = (2−α)⟨y⟩^{−α} y` for `μ = ⟨y⟩^{2−α}`.
pub fn grad_mu(y: &[f64], alpha: f64) -> Vec<f64> {
    let c = (2.0 - alpha) * japanese(y).powf(-alpha);
    y.iter().map(|v| c * v).collect()
}

/// `|∇μ(k_α) − (2−α)k|`.
pub fn sep_deviation(k: &[f64], alpha: f64) -> Result<f64> {
    if k.iter().all(|&v| v == 0.0) {
        return Err(Error::domain("sep_deviation is undefined at k = 0"));
    }
    let ka = k_alpha(k, alpha)?;
    let g = grad_mu(&ka, alpha);
    Ok(g.iter().zip(k).map(|(a, b)| (a - (2.0 - alpha) * b).powi(2)).sum::<f64>().sqrt())
}

/// Smooth uniform partition of unity `η_k = η(· − k)` on `Z^d`, built from the mollifier.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PartitionSpec {
    pub radius: f64,
}

impl Default for PartitionSpec {
    fn default() -> Self {
        PartitionSpec { radius: 0.75 }
    }
}

impl PartitionSpec {
    pub fn new(radius: f64) -> Result<Self> {
        if !(radius > 0.5 && radius < 1.0) {
            return Err(Error::domain(format!("partition radius must lie in (1/2, 1), got {radius}")));
        }
        Ok(PartitionSpec { radius })
    }

    fn raw(&self, u: f64) -> f64 {
        mollifier(u / self.radius)
    }

    fn eta1(&self, x: f64) -> f64 {
        let v = self.raw(x);
        if v == 0.0 {
            return 0.0;
        }
        let base = x.floor();
        let total: f64 = (-1..=2).map(|j| self.raw(x - (base + j as f64))).sum();
        v / total
    }

    /// `η_k(x) = Π_i η(x_i − k_i)`.
    pub fn eta_k(&self, k: &[i64], x: &[f64]) -> f64 {
        k.iter().zip(x).map(|(&ki, &xi)| self.eta1(xi - ki as f64)).product()
    }

    /// Largest `|j − k|_∞` with `supp η_j ∩ supp η_k ≠ ∅`.
    pub fn star_radius(&self) -> i64 {
        (2.0 * self.radius).ceil() as i64 - 1
    }

    /// `η*_k = Σ_{j ∈ Λ_k} η_j`.
    pub fn eta_star(&self, k: &[i64], x: &[f64]) -> f64 {
        let r = self.star_radius();
        let side = (2 * r + 1) as usize;
        let d = k.len();
        (0..side.pow(d as u32))
            .map(|mut flat| {
                let mut j = [0i64; MAX_DIM];
                for a in 0..d {
                    j[a] = k[a] + (flat % side) as i64 - r;
                    flat /= side;
                }
                self.eta_k(&j[..d], x)
            })
            .sum()
    }
}
