use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::VerificationReport;
use crate::error::{invalid, Error, Result};
use crate::geometry::Domain;
use crate::operator::Field;

/// Cells enter the fit when lower_cells·h ≤ δ ≤ upper_fraction·max δ.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitWindow {
    pub lower_cells: f64,
    pub upper_fraction: f64,
}

impl Default for FitWindow {
    fn default() -> Self {
        Self {
            lower_cells: 2.0,
            upper_fraction: 0.15,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFitResult {
    /// α in log u = α log δ + β + γδ.
    pub exponent: f64,
    pub intercept: f64,
    pub linear_coefficient: f64,
    /// Slope of the plain regression log u = α' log δ + β'.
    pub plain_slope: f64,
    /// Root-mean-square residual of the three-term model.
    pub residual: f64,
    pub points: usize,
    pub window: (f64, f64),
    /// min u/δ^s over the window.
    pub min_ratio: f64,
    pub s: f64,
    pub tolerance: f64,
    /// |exponent − s| ≤ tolerance.
    pub consistent: bool,
}

impl DecayFitResult {
    /// Passes when the exponent is consistent with s and u/δ^s stays positive.
    pub fn report(&self) -> VerificationReport {
        let passed = self.consistent && self.min_ratio > 0.0;
        VerificationReport::new("hopf-decay", passed, (self.exponent - self.s).abs(), self.tolerance).with_note(format!(
            "exponent {:.4}, plain slope {:.4}, min u/δ^s {:.4e}, {} points",
            self.exponent, self.plain_slope, self.min_ratio, self.points
        ))
    }
}

/// Fits the boundary decay of a positive field against the distance to ∂Ω.
pub fn hopf_decay_fit(u: &Field, domain: &Domain, s: f64, window: FitWindow, tolerance: f64) -> Result<DecayFitResult> {
    domain.grid().ensure_same(u.grid())?;
    if !(s > 0.0 && s < 1.0) {
        return Err(invalid("s", "must lie in (0, 1)"));
    }
    let grid = domain.grid();
    let cells = domain.mask().indices();
    let dist: Vec<f64> = cells.iter().map(|&i| domain.boundary_distance(i)).collect();
    let inradius = dist.iter().copied().fold(0.0, f64::max);
    let lo = window.lower_cells * grid.h();
    let hi = window.upper_fraction * inradius;
    let mut samples = Vec::new();
    let mut min_ratio = f64::INFINITY;
    for (&i, &d) in cells.iter().zip(&dist) {
        if d < lo || d > hi {
            continue;
        }
        let val = u.value(i);
        min_ratio = min_ratio.min(val / d.powf(s));
        if val > 0.0 {
            samples.push((d, val));
        }
    }
    if samples.len() < 8 {
        return Err(Error::InsufficientData(format!(
            "{} usable cells in the window [{lo}, {hi}], need 8",
            samples.len()
        )));
    }
    let n = samples.len();
    let a = DMatrix::from_fn(n, 3, |r, c| match c {
        0 => samples[r].0.ln(),
        1 => 1.0,
        _ => samples[r].0,
    });
    let b = DVector::from_iterator(n, samples.iter().map(|(_, v)| v.ln()));
    let coef = a
        .clone()
        .svd(true, true)
        .solve(&b, 1e-14)
        .map_err(|e| Error::InsufficientData(format!("degenerate fit: {e}")))?;
    let residual = ((&a * &coef - &b).norm_squared() / n as f64).sqrt();

    let mean_x = samples.iter().map(|(d, _)| d.ln()).sum::<f64>() / n as f64;
    let mean_y = b.mean();
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (k, (d, _)) in samples.iter().enumerate() {
        let dx = d.ln() - mean_x;
        sxy += dx * (b[k] - mean_y);
        sxx += dx * dx;
    }
    let exponent = coef[0];
    Ok(DecayFitResult {
        exponent,
        intercept: coef[1],
        linear_coefficient: coef[2],
        plain_slope: sxy / sxx,
        residual,
        points: n,
        window: (lo, hi),
        min_ratio,
        s,
        tolerance,
        consistent: (exponent - s).abs() <= tolerance,
    })
}
