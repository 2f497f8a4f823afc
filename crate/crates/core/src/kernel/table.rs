use rayon::prelude::*;

use super::quadrature::cube_integral;
use super::{sphere_measure, KernelParams};
use crate::error::{invalid, Error, Result};
use crate::geometry::GridSpec;

/// Translation-invariant lattice weights W(k) of the kernel plus the far-field
/// tail.
///
/// W(k) is c times the cell average of |z|^{−N−2s} over the cell at offset
/// k·h, for every k ≠ 0 with |k|·h ≤ R. The singular cell k = 0 is not stored;
/// its second-order Taylor contribution c·∫_{cell 0} z_i²|z|^{−N−2s}dz / (2h^{N+2})
/// is added to each nearest neighbour ±e_i instead.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightTable {
    params: KernelParams,
    h: f64,
    radius: f64,
    reach: usize,
    /// Canonical representatives 0 ≤ k₁ ≤ … ≤ k_N with their cell averages
    /// (before the nearest-neighbour correction).
    canonical: Vec<(Vec<i64>, f64)>,
    near_field: f64,
    tail: f64,
    /// Dense copy over [−reach, reach]^N, row-major.
    dense: Vec<f64>,
    weight_sum: f64,
}

impl WeightTable {
    /// Truncation radius that keeps every pair of cells of `grid`.
    pub fn default_radius(grid: &GridSpec) -> f64 {
        (grid.diagonal_cells() + 1.0) * grid.h()
    }

    /// Builds the table for spacing `grid.h()` with truncation radius `radius`.
    pub fn build(grid: &GridSpec, params: &KernelParams, radius: f64) -> Result<Self> {
        if grid.dim() != params.dim() {
            return Err(Error::GridMismatch(format!(
                "grid dimension {} vs kernel dimension {}",
                grid.dim(),
                params.dim()
            )));
        }
        let h = grid.h();
        if !(radius.is_finite() && radius >= 3.0 * h) {
            return Err(invalid("radius", format!("truncation radius {radius} must be at least 3h = {}", 3.0 * h)));
        }
        let reach = (radius / h + 1e-9).floor() as usize;
        let reps = canonical_offsets(params.dim(), reach, radius / h);
        let scale = params.c() * h.powf(-(params.dim() as f64) - 2.0 * params.s());
        let canonical: Vec<(Vec<i64>, f64)> = reps
            .into_par_iter()
            .map(|k| {
                let w = scale * unit_cell_average(&k, params.dim(), params.s());
                (k, w)
            })
            .collect();
        Self::assemble(*params, h, radius, canonical)
    }

    /// Builds with [`WeightTable::default_radius`].
    pub fn build_default(grid: &GridSpec, params: &KernelParams) -> Result<Self> {
        Self::build(grid, params, Self::default_radius(grid))
    }

    pub(crate) fn assemble(
        params: KernelParams,
        h: f64,
        radius: f64,
        canonical: Vec<(Vec<i64>, f64)>,
    ) -> Result<Self> {
        let dim = params.dim();
        let reach = (radius / h + 1e-9).floor() as usize;
        let near_field = params.c() * h.powf(-(dim as f64) - 2.0 * params.s()) * unit_near_field(dim, params.s());
        let tail = params.c() * sphere_measure(dim) / (2.0 * params.s()) * radius.powf(-2.0 * params.s());

        let side = 2 * reach + 1;
        let mut dense = vec![0.0; side.pow(dim as u32)];
        let mut images = Vec::new();
        for (k, w) in &canonical {
            if k.len() != dim || k.iter().any(|&v| v < 0 || v as usize > reach) {
                return Err(Error::Format(format!("offset {k:?} outside table reach {reach}")));
            }
            orbit(k, &mut images);
            for image in &images {
                let flat = image
                    .iter()
                    .fold(0usize, |acc, &v| acc * side + (v + reach as i64) as usize);
                dense[flat] = *w;
            }
        }
        // Nearest-neighbour correction for the omitted singular cell.
        for axis in 0..dim {
            for sign in [-1i64, 1] {
                let mut k = vec![0i64; dim];
                k[axis] = sign;
                let flat = k.iter().fold(0usize, |acc, &v| acc * side + (v + reach as i64) as usize);
                dense[flat] += near_field;
            }
        }
        // Fixed summation order: ascending dense index.
        let weight_sum = dense.iter().sum();
        Ok(Self {
            params,
            h,
            radius,
            reach,
            canonical,
            near_field,
            tail,
            dense,
            weight_sum,
        })
    }

    pub fn params(&self) -> &KernelParams {
        &self.params
    }

    pub fn dim(&self) -> usize {
        self.params.dim()
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Largest |k_i| with a stored weight.
    pub fn reach(&self) -> usize {
        self.reach
    }

    /// T = c·ω_{N−1}/(2s)·R^{−2s}.
    pub fn tail(&self) -> f64 {
        self.tail
    }

    /// Amount added to W(±e_i) for the singular cell.
    pub fn near_field_correction(&self) -> f64 {
        self.near_field
    }

    /// Canonical representatives and their uncorrected cell averages.
    pub fn canonical(&self) -> &[(Vec<i64>, f64)] {
        &self.canonical
    }

    /// W(k); zero for k = 0 and for offsets beyond the truncation radius.
    pub fn weight(&self, k: &[i64]) -> f64 {
        let r = self.reach as i64;
        if k.iter().any(|&v| v.abs() > r) {
            return 0.0;
        }
        let side = 2 * self.reach + 1;
        self.dense[k.iter().fold(0usize, |acc, &v| acc * side + (v + r) as usize)]
    }

    /// Dense weights over [−reach, reach]^N in row-major order.
    pub fn dense(&self) -> &[f64] {
        &self.dense
    }

    /// Σ_k W(k).
    pub fn weight_sum(&self) -> f64 {
        self.weight_sum
    }

    /// h^N·Σ_k W(k) + T: the diagonal of the lattice operator.
    pub fn diagonal(&self) -> f64 {
        self.h.powi(self.dim() as i32) * self.weight_sum + self.tail
    }
}

/// Sorted nonnegative offsets k ≠ 0 with |k| ≤ bound, in lexicographic order.
fn canonical_offsets(dim: usize, reach: usize, bound: f64) -> Vec<Vec<i64>> {
    let mut out = Vec::new();
    let mut k = vec![0i64; dim];
    let limit = bound * bound * (1.0 + 1e-12);
    fn rec(pos: usize, lo: i64, reach: i64, k: &mut Vec<i64>, limit: f64, out: &mut Vec<Vec<i64>>) {
        if pos == k.len() {
            let r2: f64 = k.iter().map(|&v| (v * v) as f64).sum();
            if r2 > 0.0 && r2 <= limit {
                out.push(k.clone());
            }
            return;
        }
        for v in lo..=reach {
            k[pos] = v;
            rec(pos + 1, v, reach, k, limit, out);
        }
    }
    rec(0, 0, reach as i64, &mut k, limit, &mut out);
    out
}

/// All sign flips and permutations of `k`, deduplicated.
fn orbit(k: &[i64], out: &mut Vec<Vec<i64>>) {
    out.clear();
    let dim = k.len();
    let mut perm: Vec<usize> = (0..dim).collect();
    let mut perms = Vec::new();
    permutations(&mut perm, 0, &mut perms);
    for p in perms {
        for signs in 0..(1u32 << dim) {
            let image: Vec<i64> = (0..dim)
                .map(|a| {
                    let v = k[p[a]];
                    if signs >> a & 1 == 1 {
                        -v
                    } else {
                        v
                    }
                })
                .collect();
            if !out.contains(&image) {
                out.push(image);
            }
        }
    }
}

fn permutations(p: &mut Vec<usize>, start: usize, out: &mut Vec<Vec<usize>>) {
    if start == p.len() {
        out.push(p.clone());
        return;
    }
    for i in start..p.len() {
        p.swap(start, i);
        permutations(p, start + 1, out);
        p.swap(start, i);
    }
}

/// Average of |t|^{−N−2s} over the unit cell centered at integer offset k.
fn unit_cell_average(k: &[i64], dim: usize, s: f64) -> f64 {
    let inf_norm = k.iter().map(|v| v.abs()).max().unwrap_or(0);
    let panels = match inf_norm {
        0..=2 => 4,
        3..=6 => 2,
        _ => 1,
    };
    let expo = -(dim as f64 + 2.0 * s) / 2.0;
    let kf: Vec<f64> = k.iter().map(|&v| v as f64).collect();
    cube_integral(dim, -0.5, 0.5, panels, |t| {
        let r2: f64 = t.iter().zip(&kf).map(|(a, b)| (a + b) * (a + b)).sum();
        r2.powf(expo)
    })
}

/// ∫_{[−½,½]^N} t_1²|t|^{−N−2s} dt / 2 for unit spacing.
///
/// With a = 2−N−2s, ∫|t|^a over the cube splits into 2N pyramids:
/// 2N·(½)^{a+N}/(a+N)·J, where J = ∫_{[−1,1]^{N−1}} (1+|v|²)^{a/2} dv.
/// The t_1² moment is 1/N of that by symmetry.
pub(crate) fn unit_near_field(dim: usize, s: f64) -> f64 {
    let n = dim as f64;
    let a = 2.0 - n - 2.0 * s;
    let j = if dim == 1 {
        1.0
    } else {
        cube_integral(dim - 1, -1.0, 1.0, 4, |v| (1.0 + v.iter().map(|x| x * x).sum::<f64>()).powf(a / 2.0))
    };
    let full = 2.0 * n * 0.5f64.powf(a + n) / (a + n) * j;
    full / n / 2.0
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(dim: usize, h: f64, n: usize) -> GridSpec {
        GridSpec::cube(dim, h, n).unwrap()
    }

    #[test]
    fn weights_are_lattice_symmetric_and_positive() {
        for dim in 1..=3 {
            let g = grid(dim, 0.1, 8);
            let p = KernelParams::new(dim, 0.4).unwrap();
            let t = WeightTable::build(&g, &p, 0.45).unwrap();
            let r = t.reach() as i64;
            let side = 2 * r + 1;
            for flat in 0..side.pow(dim as u32) {
                let mut k = vec![0i64; dim];
                let mut rest = flat;
                for a in (0..dim).rev() {
                    k[a] = rest % side - r;
                    rest /= side;
                }
                let w = t.weight(&k);
                let r2: i64 = k.iter().map(|v| v * v).sum();
                if r2 == 0 || r2 as f64 * 0.01 > 0.45f64.powi(2) {
                    assert_eq!(w, 0.0);
                    continue;
                }
                assert!(w > 0.0);
                let neg: Vec<i64> = k.iter().map(|v| -v).collect();
                assert_eq!(w, t.weight(&neg));
                let mut rev = k.clone();
                rev.reverse();
                assert_eq!(w, t.weight(&rev));
            }
            assert!(t.tail() > 0.0);
        }
    }

    #[test]
    fn tail_closed_form() {
        let g = grid(2, 0.05, 10);
        let p = KernelParams::new(2, 0.5).unwrap();
        let t = WeightTable::build(&g, &p, 0.8).unwrap();
        let expected = p.c() * 2.0 * std::f64::consts::PI / 1.0 * 0.8f64.powf(-1.0);
        assert!((t.tail() - expected).abs() < 1e-14 * expected);
    }

    #[test]
    fn rejects_short_radius_and_dim_mismatch() {
        let g = grid(2, 0.1, 8);
        let p = KernelParams::new(2, 0.5).unwrap();
        assert!(WeightTable::build(&g, &p, 0.29).is_err());
        let p1 = KernelParams::new(1, 0.5).unwrap();
        assert!(WeightTable::build(&g, &p1, 1.0).is_err());
    }

    #[test]
    fn far_cells_match_point_values() {
        let g = grid(2, 1.0, 4);
        let p = KernelParams::new(2, 0.3).unwrap();
        let t = WeightTable::build(&g, &p, 40.0).unwrap();
        let k = [30i64, 17];
        let point = p.eval(&[30.0, 17.0]);
        assert!((t.weight(&k) / point - 1.0).abs() < 1e-3);
    }

    #[test]
    fn near_field_one_dimensional_closed_form() {
        // ∫_{−½}^{½} |t|^{1−2s} dt / 2 = (½)^{2−2s}/(2−2s).
        for s in [0.2, 0.5, 0.8] {
            let expected = 0.5f64.powf(2.0 - 2.0 * s) / (2.0 - 2.0 * s);
            assert!((unit_near_field(1, s) - expected).abs() < 1e-15);
        }
    }

    #[test]
    fn near_field_matches_polar_moment() {
        // In polar form the radial integral is explicit: ∫ t_1²|t|^{−N−2s} over
        // the cube equals ∫_{S^{N−1}} ω_1² ρ(ω)^{2−2s}/(2−2s) dω with
        // ρ(ω) = ½/‖ω‖_∞ the distance to the cube face along ω.
        let pi = std::f64::consts::PI;
        for s in [0.3, 0.7] {
            let m = 200_000;
            let mut total = 0.0;
            for i in 0..m {
                let th = (i as f64 + 0.5) * 2.0 * pi / m as f64;
                let (c, sn) = (th.cos(), th.sin());
                let rho = 0.5 / c.abs().max(sn.abs());
                total += c * c * rho.powf(2.0 - 2.0 * s) / (2.0 - 2.0 * s);
            }
            let polar = total * 2.0 * pi / m as f64 / 2.0;
            let got = unit_near_field(2, s);
            assert!((got / polar - 1.0).abs() < 1e-8, "s {s}: {got} vs {polar}");
        }
        let s = 0.5;
        let (mt, mp) = (1500, 3000);
        let mut total = 0.0;
        for i in 0..mt {
            let th = (i as f64 + 0.5) * pi / mt as f64;
            for j in 0..mp {
                let ph = (j as f64 + 0.5) * 2.0 * pi / mp as f64;
                let w = [th.sin() * ph.cos(), th.sin() * ph.sin(), th.cos()];
                let rho = 0.5 / w.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                total += w[0] * w[0] * rho.powf(2.0 - 2.0 * s) / (2.0 - 2.0 * s) * th.sin();
            }
        }
        let polar = total * (pi / mt as f64) * (2.0 * pi / mp as f64) / 2.0;
        let got = unit_near_field(3, s);
        assert!((got / polar - 1.0).abs() < 1e-5, "{got} vs {polar}");
    }
}
