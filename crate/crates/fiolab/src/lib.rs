//! Time-frequency analysis of Fourier integral operators on sampled grids.
//!
//! The crate is organised bottom-up:
//!
//! * [`grid`]: uniform grids, sampled functions, the discrete Fourier transform
//!   (`f̂(ξ) = ∫ f(x) e^{-2πixξ} dx` as a Riemann sum), shifts, modulations and dilations.
//! * [`tfr`]: short-time Fourier transforms on `R^{2d}` and `R^{4d}`, plus a streaming
//!   evaluator that reduces STFT magnitudes to mixed norms without storing the matrix.
//! * [`spaces`]: weights, modulation / amalgam / mixed modulation norms, sequence norms and
//!   the exponent predicates of the boundedness theorems.
//! * [`phase`]: phase functions with analytic derivatives and the condition verifiers.
//! * [`fio`]: Fourier integral operators, their kernels, weak pairings and multipliers.
//! * [`extremal`]: the test functions used in the necessity arguments.
//! * [`experiments`]: operator-ratio estimation, threshold sweeps and reports.
//!
//! With the default `parallel` feature the per-shift STFT loops, sweeps and verifiers run on
//! rayon; without it everything runs sequentially and produces bit-identical results.

pub mod error;
pub mod experiments;
pub mod extremal;
pub mod fio;
pub mod grid;
pub mod par;
pub mod phase;
pub mod spaces;
pub mod tfr;

mod fft;

pub use error::{Error, Result};
pub use num_complex::Complex64;
