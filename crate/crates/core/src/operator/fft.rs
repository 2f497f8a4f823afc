//! Zero-padded N-dimensional FFT convolution with the lattice weights.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::geometry::GridSpec;
use crate::kernel::WeightTable;

pub(crate) struct FftConvolver {
    extents: Vec<usize>,
    padded: Vec<usize>,
    forward: Vec<Arc<dyn Fft<f64>>>,
    inverse: Vec<Arc<dyn Fft<f64>>>,
    /// Transform of G(k) = h^N·W(k), real because G is even in every axis.
    kernel_hat: Vec<f64>,
}

impl std::fmt::Debug for FftConvolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FftConvolver").field("padded", &self.padded).finish()
    }
}

impl FftConvolver {
    pub(crate) fn new(grid: &GridSpec, table: &WeightTable) -> Self {
        let extents = grid.extents().to_vec();
        let padded: Vec<usize> = extents.iter().map(|&n| 2 * n).collect();
        let mut planner = FftPlanner::new();
        let forward = padded.iter().map(|&p| planner.plan_fft_forward(p)).collect();
        let inverse = padded.iter().map(|&p| planner.plan_fft_inverse(p)).collect();
        let total: usize = padded.iter().product();
        let hn = grid.cell_volume();
        let dim = extents.len();

        let mut kernel = vec![Complex::new(0.0, 0.0); total];
        let mut idx = vec![0usize; dim];
        let mut k = vec![0i64; dim];
        for (flat, slot) in kernel.iter_mut().enumerate() {
            let mut rest = flat;
            for a in (0..dim).rev() {
                idx[a] = rest % padded[a];
                rest /= padded[a];
            }
            let mut inside = true;
            for a in 0..dim {
                let j = idx[a] as i64;
                let p = padded[a] as i64;
                k[a] = if j < p / 2 { j } else { j - p };
                if k[a].unsigned_abs() as usize >= extents[a] {
                    inside = false;
                }
            }
            if inside {
                slot.re = hn * table.weight(&k);
            }
        }
        let mut conv = Self {
            extents,
            padded,
            forward,
            inverse,
            kernel_hat: Vec::new(),
        };
        conv.transform(&mut kernel, true);
        conv.kernel_hat = kernel.iter().map(|c| c.re).collect();
        conv
    }

    fn transform(&self, data: &mut [Complex<f64>], forward: bool) {
        let plans = if forward { &self.forward } else { &self.inverse };
        let dim = self.padded.len();
        let mut line = Vec::new();
        for a in 0..dim {
            let n = self.padded[a];
            let inner: usize = self.padded[a + 1..].iter().product();
            if inner == 1 {
                plans[a].process(data);
                continue;
            }
            line.resize(n, Complex::new(0.0, 0.0));
            for block in data.chunks_mut(n * inner) {
                for j in 0..inner {
                    for t in 0..n {
                        line[t] = block[t * inner + j];
                    }
                    plans[a].process(&mut line);
                    for t in 0..n {
                        block[t * inner + j] = line[t];
                    }
                }
            }
        }
    }

    /// out[x] = Σ_y G(x − y)·u[y] over grid cells.
    pub(crate) fn convolve(&self, u: &[f64], out: &mut [f64]) {
        let dim = self.extents.len();
        let total: usize = self.padded.iter().product();
        let mut data = vec![Complex::new(0.0, 0.0); total];
        let mut idx = vec![0usize; dim];
        for (flat, &v) in u.iter().enumerate() {
            if v == 0.0 {
                continue;
            }
            data[self.padded_index(flat, &mut idx)].re = v;
        }
        self.transform(&mut data, true);
        for (d, &g) in data.iter_mut().zip(&self.kernel_hat) {
            *d *= g;
        }
        self.transform(&mut data, false);
        let scale = 1.0 / total as f64;
        for (flat, o) in out.iter_mut().enumerate() {
            *o = data[self.padded_index(flat, &mut idx)].re * scale;
        }
    }

    fn padded_index(&self, flat: usize, idx: &mut [usize]) -> usize {
        let dim = self.extents.len();
        let mut rest = flat;
        for a in (0..dim).rev() {
            idx[a] = rest % self.extents[a];
            rest /= self.extents[a];
        }
        idx.iter().zip(&self.padded).fold(0, |acc, (&j, &p)| acc * p + j)
    }
}
