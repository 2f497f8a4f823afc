use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::VerificationReport;
use crate::error::{invalid, Result};
use crate::geometry::RegionMask;
use crate::solve::Nonlinearity;

fn sample_cells(mask: &RegionMask) -> Result<Vec<usize>> {
    let cells = mask.indices();
    if cells.is_empty() {
        return Err(invalid("mask", "no cells to sample"));
    }
    Ok(cells)
}

/// (F1) on |u|, |v| ≤ k: samples max of |f(x,u) − f(x,v)| − L(k)|u − v|
/// relative to L(k)·k. Passes when margin ≤ tolerance; fails outright when
/// the nonlinearity has no bound.
pub fn check_f1(f: &dyn Nonlinearity, mask: &RegionMask, k: f64, samples: usize, seed: u64, tolerance: f64) -> Result<VerificationReport> {
    if !(k > 0.0 && k.is_finite()) {
        return Err(invalid("k", "must be positive"));
    }
    let cells = sample_cells(mask)?;
    let Some(bound) = f.lipschitz(k) else {
        return Ok(VerificationReport::new("F1", false, f64::INFINITY, tolerance)
            .with_note(format!("{} has no Lipschitz bound on |u| ≤ {k}", f.describe())));
    };
    let grid = mask.grid();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = (bound * k).max(f64::MIN_POSITIVE);
    let mut worst = (f64::NEG_INFINITY, None);
    for _ in 0..samples {
        let cell = cells[rng.gen_range(0..cells.len())];
        let x = grid.center(cell);
        let (u, v) = (rng.gen_range(-k..=k), rng.gen_range(-k..=k));
        let excess = ((f.value(&x, u) - f.value(&x, v)).abs() - bound * (u - v).abs()) / scale;
        if excess > worst.0 {
            worst = (excess, Some(cell));
        }
    }
    Ok(VerificationReport::new("F1", worst.0 <= tolerance, worst.0, tolerance)
        .at(worst.1)
        .with_note(format!("L({k}) = {bound}")))
}

/// (F2): samples min of f(t·x₁, x₂, …, u) − f(x, u) for t ∈ [−1, 1] and
/// |u| ≤ k. Passes when margin ≥ −tolerance.
pub fn check_f2(f: &dyn Nonlinearity, mask: &RegionMask, k: f64, samples: usize, seed: u64, tolerance: f64) -> Result<VerificationReport> {
    let cells = sample_cells(mask)?;
    let grid = mask.grid();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = (f64::INFINITY, None);
    for _ in 0..samples {
        let cell = cells[rng.gen_range(0..cells.len())];
        let x = grid.center(cell);
        let mut y = x.clone();
        y[0] *= rng.gen_range(-1.0..=1.0);
        let u = rng.gen_range(-k..=k);
        let gap = f.value(&y, u) - f.value(&x, u);
        if gap < worst.0 {
            worst = (gap, Some(cell));
        }
    }
    let margin = if worst.0.is_finite() { worst.0 } else { 0.0 };
    Ok(VerificationReport::new("F2", margin >= -tolerance, margin, tolerance).at(worst.1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::GridSpec;
    use crate::solve::{FnNonlinearity, PowerNonlinearity};

    fn mask() -> RegionMask {
        let g = GridSpec::cube(2, 0.1, 20).unwrap();
        RegionMask::from_fn(&g, |x| x[0] * x[0] + x[1] * x[1] < 0.8)
    }

    #[test]
    fn power_nonlinearity_satisfies_both() {
        let f = PowerNonlinearity::new(5.0, 3.0);
        assert!(check_f1(&f, &mask(), 2.0, 5000, 1, 1e-12).unwrap().passed);
        assert!(check_f2(&f, &mask(), 2.0, 5000, 1, 0.0).unwrap().passed);
        let sub = PowerNonlinearity::new(1.0, 1.5);
        assert!(!check_f1(&sub, &mask(), 1.0, 10, 1, 1e-12).unwrap().passed);
    }

    #[test]
    fn detects_violations() {
        let wrong = FnNonlinearity::new("u^3 with L = 1", |_: &[f64], u| u * u * u).with_lipschitz(|_| Some(1.0));
        assert!(!check_f1(&wrong, &mask(), 2.0, 2000, 3, 1e-12).unwrap().passed);
        // Increasing in |x₁| violates the monotonicity hypothesis.
        let growing = FnNonlinearity::new("x₁² + u", |x: &[f64], u| x[0] * x[0] + u);
        assert!(!check_f2(&growing, &mask(), 1.0, 2000, 3, 1e-12).unwrap().passed);
        let decaying = FnNonlinearity::new("u − x₁²", |x: &[f64], u| u - x[0] * x[0]);
        assert!(check_f2(&decaying, &mask(), 1.0, 2000, 3, 1e-12).unwrap().passed);
    }
}
