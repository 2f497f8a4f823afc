//! Sweeps of the scalar surrogate f(a, b) and of the four-point kernel
//! deficit.

use fracsym::{f_surrogate, four_point_deficit, reduced_deficit, KernelParams, Reflection, VerificationReport};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepOutcome {
    pub dim: usize,
    pub s: f64,
    pub surrogate_evaluations: usize,
    pub surrogate_min: f64,
    /// max |f(0, b)| and |f(a, 0)| over the grid.
    pub surrogate_axis_max: f64,
    pub pairs: usize,
    pub deficit_min: f64,
    pub violations: usize,
}

impl SweepOutcome {
    pub fn reports(&self, tolerance: f64) -> Vec<VerificationReport> {
        let tag = format!("N = {}, s = {}", self.dim, self.s);
        vec![
            VerificationReport {
                check: "surrogate".into(),
                passed: self.surrogate_min >= -tolerance,
                margin: self.surrogate_min,
                tolerance,
                worst_cell: None,
                note: Some(format!("{tag}, {} evaluations", self.surrogate_evaluations)),
            },
            VerificationReport {
                check: "surrogate-axes".into(),
                passed: self.surrogate_axis_max <= 1e-15,
                margin: self.surrogate_axis_max,
                tolerance: 1e-15,
                worst_cell: None,
                note: Some(tag.clone()),
            },
            VerificationReport {
                check: "four-point".into(),
                passed: self.violations == 0,
                margin: self.deficit_min,
                tolerance,
                worst_cell: None,
                note: Some(format!("{tag}, {} pairs, {} violations", self.pairs, self.violations)),
            },
        ]
    }
}

/// a, b over {0} ∪ `points − 1` log-spaced values in [10⁻³, 10³], M over
/// 10⁻³…10³; then `pairs` random (x, y) in H₁ ∩ H₂ with coordinates spread
/// over four decades. In one dimension the deficit is evaluated in its
/// reduced (a, b, M) form.
pub fn kernel_sweep(dim: usize, s: f64, points: usize, pairs: usize, seed: u64, tolerance: f64) -> fracsym::Result<SweepOutcome> {
    let params = KernelParams::new(dim, s)?;
    let mut axis = vec![0.0];
    let n = points.max(2) - 1;
    axis.extend((0..n).map(|k| 10f64.powf(-3.0 + 6.0 * k as f64 / (n.max(2) - 1) as f64)));
    let mut out = SweepOutcome {
        dim,
        s,
        surrogate_evaluations: 0,
        surrogate_min: f64::INFINITY,
        surrogate_axis_max: 0.0,
        pairs: 0,
        deficit_min: f64::INFINITY,
        violations: 0,
    };
    for e in -3..=3 {
        let m = 10f64.powi(e);
        for &a in &axis {
            for &b in &axis {
                let f = f_surrogate(a, b, m, dim, s)?;
                out.surrogate_evaluations += 1;
                out.surrogate_min = out.surrogate_min.min(f);
                if a == 0.0 || b == 0.0 {
                    out.surrogate_axis_max = out.surrogate_axis_max.max(f.abs());
                }
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coord = |rng: &mut ChaCha8Rng| 10f64.powf(rng.gen_range(-3.0..1.0)) * rng.gen_range(0.0..1.0);
    let (r1, r2) = (Reflection::through_origin(0), Reflection::through_origin(dim - 1));
    for _ in 0..pairs {
        let value = if dim == 1 {
            let (x, y) = ([coord(&mut rng), coord(&mut rng)], [coord(&mut rng), coord(&mut rng)]);
            let m = (x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2);
            if m == 0.0 {
                continue;
            }
            reduced_deficit(&params, 4.0 * x[0] * y[0], 4.0 * x[1] * y[1], m)?
        } else {
            let mut point = || -> Vec<f64> {
                (0..dim)
                    .map(|a| {
                        let v = coord(&mut rng);
                        if a == 0 || a == dim - 1 || rng.gen_bool(0.5) {
                            v
                        } else {
                            -v
                        }
                    })
                    .collect()
            };
            let (x, y) = (point(), point());
            match four_point_deficit(&params, &x, &y, &r1, &r2) {
                Ok(v) => v,
                Err(fracsym::Error::Coincident) => continue,
                Err(e) => return Err(e),
            }
        };
        out.pairs += 1;
        out.deficit_min = out.deficit_min.min(value);
        if value < -tolerance {
            out.violations += 1;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_has_no_violations() {
        for dim in 1..=3 {
            let out = kernel_sweep(dim, 0.3, 20, 2000, 1, 1e-12).unwrap();
            assert_eq!(out.surrogate_evaluations, 7 * 20 * 20);
            assert_eq!(out.pairs, 2000);
            assert_eq!(out.violations, 0);
            assert!(out.reports(1e-12).iter().all(|r| r.passed));
        }
    }

    #[test]
    fn sweep_is_deterministic() {
        assert_eq!(
            kernel_sweep(2, 0.7, 10, 500, 4, 1e-12).unwrap(),
            kernel_sweep(2, 0.7, 10, 500, 4, 1e-12).unwrap()
        );
    }
}
