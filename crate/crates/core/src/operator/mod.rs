//! The discrete fractional Laplacian, its bilinear form and the field
//! transformations used by the symmetry arguments.

mod fft;
mod field;
mod reduce;
mod transforms;

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{GridSpec, Reflection, RegionMask};
use crate::kernel::{KernelParams, WeightTable};
use fft::FftConvolver;

pub use field::{Field, Parity, SymmetryTag};
pub use reduce::{antisymmetric_reduce, ReducedOperator};
pub use transforms::{polarize, test_function_v, ANTISYMMETRY_TOL};

/// (Lu)(x) = h^N·Σ_{k≠0} W(k)(u(x) − u(x+k)) + T·u(x) on a fixed grid, with
/// u read as 0 off the grid.
///
/// Equivalently Lu = D·u − h^N·(W ∗ u) with the constant diagonal
/// D = h^N·ΣW + T; the convolution is evaluated by FFT.
#[derive(Debug)]
pub struct NonlocalOperator {
    grid: GridSpec,
    table: Arc<WeightTable>,
    conv: FftConvolver,
    diagonal: f64,
    strides: Vec<usize>,
}

impl NonlocalOperator {
    pub fn new(grid: &GridSpec, table: Arc<WeightTable>) -> Result<Self> {
        if table.dim() != grid.dim() || table.h().to_bits() != grid.h().to_bits() {
            return Err(Error::GridMismatch(format!(
                "weight table (dim {}, h {}) does not match grid (dim {}, h {})",
                table.dim(),
                table.h(),
                grid.dim(),
                grid.h()
            )));
        }
        Ok(Self {
            grid: grid.clone(),
            conv: FftConvolver::new(grid, &table),
            diagonal: table.diagonal(),
            strides: grid.strides(),
            table,
        })
    }

    /// Operator with a freshly built table at the default radius.
    pub fn build(grid: &GridSpec, params: &KernelParams) -> Result<Self> {
        Self::new(grid, Arc::new(WeightTable::build_default(grid, params)?))
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn table(&self) -> &WeightTable {
        &self.table
    }

    pub fn params(&self) -> &KernelParams {
        self.table.params()
    }

    /// D = h^N·ΣW + T.
    pub fn diagonal(&self) -> f64 {
        self.diagonal
    }

    /// W between the centers of cells `a` and `b` (0 when a = b).
    pub fn weight_between(&self, a: usize, b: usize) -> f64 {
        let dim = self.grid.dim();
        let mut k = [0i64; 8];
        for (axis, &st) in self.strides.iter().enumerate() {
            let n = self.grid.extents()[axis];
            k[axis] = ((a / st) % n) as i64 - ((b / st) % n) as i64;
        }
        self.table.weight(&k[..dim])
    }

    /// Matrix entry A(a, b): D on the diagonal, −h^N·W(a−b) off it.
    pub fn entry(&self, a: usize, b: usize) -> f64 {
        if a == b {
            self.diagonal
        } else {
            -self.grid.cell_volume() * self.weight_between(a, b)
        }
    }

    /// Raw apply on full-grid buffers.
    pub fn apply_slice(&self, u: &[f64], out: &mut [f64]) {
        debug_assert_eq!(u.len(), self.grid.len());
        self.conv.convolve(u, out);
        for (o, &v) in out.iter_mut().zip(u) {
            *o = self.diagonal * v - *o;
        }
    }

    /// Lu on every grid cell.
    pub fn apply(&self, u: &Field) -> Result<Field> {
        self.grid.ensure_same(u.grid())?;
        let mut out = vec![0.0; self.grid.len()];
        self.apply_slice(u.values(), &mut out);
        Field::on_grid(&self.grid, out)
    }

    /// Lu by direct summation over grid pairs; O(n²), for cross-checks.
    pub fn apply_direct(&self, u: &Field) -> Result<Field> {
        self.grid.ensure_same(u.grid())?;
        let support: Vec<usize> = (0..self.grid.len()).filter(|&i| u.value(i) != 0.0).collect();
        let hn = self.grid.cell_volume();
        let out = (0..self.grid.len())
            .into_par_iter()
            .map(|x| {
                let conv: f64 = support
                    .iter()
                    .filter(|&&y| y != x)
                    .map(|&y| self.weight_between(x, y) * u.value(y))
                    .sum();
                self.diagonal * u.value(x) - hn * conv
            })
            .collect();
        Field::on_grid(&self.grid, out)
    }

    /// h^N·Σ_x (Lu)(x)·v(x) via the FFT apply.
    pub fn energy_via_apply(&self, u: &Field, v: &Field) -> Result<f64> {
        self.apply(u)?.dot(v)
    }

    /// Discrete bilinear form as an explicit double sum over
    /// S = supp u ∪ supp v:
    ///
    /// h^N·Σ_{x∈S} [ (h^N/2)·Σ_{y∈S, y≠x} W(x−y)(u(x)−u(y))(v(x)−v(y))
    ///              + u(x)v(x)·(D − h^N·Σ_{y∈S, y≠x} W(x−y)) ].
    ///
    /// Rows are reduced in ascending cell order, so the result is
    /// bit-reproducible.
    pub fn energy(&self, u: &Field, v: &Field) -> Result<f64> {
        self.grid.ensure_same(u.grid())?;
        self.grid.ensure_same(v.grid())?;
        let (uv, vv) = (u.values(), v.values());
        let support: Vec<usize> = (0..self.grid.len()).filter(|&i| uv[i] != 0.0 || vv[i] != 0.0).collect();
        let hn = self.grid.cell_volume();
        let rows: Vec<f64> = support
            .par_iter()
            .map(|&x| {
                let (ux, vx) = (uv[x], vv[x]);
                let mut pair = 0.0;
                let mut wsum = 0.0;
                for &y in &support {
                    if y == x {
                        continue;
                    }
                    let w = self.weight_between(x, y);
                    pair += w * (ux - uv[y]) * (vx - vv[y]);
                    wsum += w;
                }
                0.5 * hn * pair + ux * vx * (self.diagonal - hn * wsum)
            })
            .collect();
        Ok(hn * rows.iter().sum::<f64>())
    }

    /// ρ_s(w, U): the kernel-normalized energy density of w integrated over U,
    /// with inner sum over the whole lattice and the tail beyond R:
    ///
    /// (h^N/c)·Σ_{x∈U} [ D·w(x)² + h^N·Σ_{y∈supp w, y≠x} W(x−y)(w(y)² − 2w(x)w(y)) ].
    pub fn seminorm_rho(&self, w: &Field, region: &RegionMask) -> Result<f64> {
        self.grid.ensure_same(w.grid())?;
        self.grid.ensure_same(region.grid())?;
        let wv = w.values();
        let support: Vec<usize> = (0..self.grid.len()).filter(|&i| wv[i] != 0.0).collect();
        let cells = region.indices();
        let hn = self.grid.cell_volume();
        let rows: Vec<f64> = cells
            .par_iter()
            .map(|&x| {
                let wx = wv[x];
                let inner: f64 = support
                    .iter()
                    .filter(|&&y| y != x)
                    .map(|&y| self.weight_between(x, y) * (wv[y] * wv[y] - 2.0 * wx * wv[y]))
                    .sum();
                self.diagonal * wx * wx + hn * inner
            })
            .collect();
        Ok(hn * rows.iter().sum::<f64>() / self.params().c())
    }

    /// Kernel weight between x and r(y), where r(y) may leave the grid.
    pub fn mirrored_weight(&self, x: usize, y: usize, r: &Reflection) -> Result<f64> {
        let dim = self.grid.dim();
        let mut k = [0i64; 8];
        let ry = r.reflect_point(&self.grid.center(y));
        let cx = self.grid.center(x);
        for a in 0..dim {
            k[a] = ((cx[a] - ry[a]) / self.grid.h()).round() as i64;
        }
        Ok(self.table.weight(&k[..dim]))
    }
}
