use std::cell::RefCell;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(n)
        } else {
            p.plan_fft_forward(n)
        }
    })
}

/// Unnormalised centred DFT over every axis of an `n^dim` row-major array:
/// `out[m] = Σ_j a[j] exp(∓2πi (j − n/2)·(m − n/2) / n)`.
///
/// For even `n/2` the centring phases reduce to a checkerboard sign flip on both sides of a
/// plain FFT.
pub(crate) struct CenteredFft {
    n: usize,
    dim: usize,
    fft: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
    lines: Vec<Complex64>,
}

impl CenteredFft {
    pub(crate) fn new(n: usize, dim: usize, inverse: bool) -> Self {
        debug_assert!(n >= 4 && n.is_power_of_two());
        let fft = plan(n, inverse);
        let scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
        let lines = if dim > 1 {
            vec![Complex64::default(); n.pow(dim as u32 - 1) * n]
        } else {
            Vec::new()
        };
        CenteredFft {
            n,
            dim,
            fft,
            scratch,
            lines,
        }
    }

    pub(crate) fn process(&mut self, data: &mut [Complex64]) {
        let n = self.n;
        debug_assert_eq!(data.len(), n.pow(self.dim as u32));
        checkerboard(data, n, self.dim);
        self.fft.process_with_scratch(data, &mut self.scratch);
        for axis in 0..self.dim.saturating_sub(1) {
            let stride = n.pow((self.dim - 1 - axis) as u32);
            let block = stride * n;
            let lines = &mut self.lines[..block];
            for b in (0..data.len()).step_by(block) {
                let src = &data[b..b + block];
                for k in 0..n {
                    for i in 0..stride {
                        lines[i * n + k] = src[k * stride + i];
                    }
                }
                self.fft.process_with_scratch(lines, &mut self.scratch);
                let dst = &mut data[b..b + block];
                for k in 0..n {
                    for i in 0..stride {
                        dst[k * stride + i] = lines[i * n + k];
                    }
                }
            }
        }
        checkerboard(data, n, self.dim);
    }
}

fn checkerboard(data: &mut [Complex64], n: usize, dim: usize) {
    let shift = n.trailing_zeros();
    let mask = n - 1;
    for (idx, v) in data.iter_mut().enumerate() {
        let mut parity = 0usize;
        let mut r = idx;
        for _ in 0..dim {
            parity += r & mask;
            r >>= shift;
        }
        if parity & 1 == 1 {
            *v = -*v;
        }
    }
}
