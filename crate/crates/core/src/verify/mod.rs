//! Checks of the qualitative properties expected of computed fields:
//! symmetry, sign, monotonicity, the moving-plane scan, maximum principles on
//! small sets, boundary decay and the energy identities behind them.

mod decay;
mod hypotheses;
mod identities;
mod maximum;
mod moving_plane;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::geometry::{Domain, Reflection, RegionMask};
use crate::operator::Field;

pub use decay::{hopf_decay_fit, DecayFitResult, FitWindow};
pub use hypotheses::{check_f1, check_f2};
pub use identities::{lemma22_check, polarization_identity_check};
pub use maximum::{scaled_family, small_volume_threshold, supersolution_check, SmallVolumeResult};
pub use moving_plane::{linearized_coefficient, moving_plane_scan, MovingPlaneResult};

/// Outcome of one check. How `margin` compares with `tolerance` is stated by
/// each check; `passed` already applies that rule.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub check: String,
    pub passed: bool,
    pub margin: f64,
    pub tolerance: f64,
    /// Cell index of the worst violation or of the extreme value.
    pub worst_cell: Option<usize>,
    pub note: Option<String>,
}

impl VerificationReport {
    fn new(check: &str, passed: bool, margin: f64, tolerance: f64) -> Self {
        Self {
            check: check.to_string(),
            passed,
            margin,
            tolerance,
            worst_cell: None,
            note: None,
        }
    }

    fn at(mut self, cell: Option<usize>) -> Self {
        self.worst_cell = cell;
        self
    }

    fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

/// Margin ‖u − u∘r‖_∞/‖u‖_∞ (0 for u ≡ 0); passes when margin ≤ tolerance.
pub fn check_symmetry(u: &Field, r: &Reflection, tolerance: f64) -> Result<VerificationReport> {
    let perm = r.permutation(u.grid())?;
    let scale = u.norm_inf();
    let v = u.values();
    let mut worst = (0.0, None);
    for (i, j) in perm.iter().enumerate() {
        let d = (v[i] - j.map_or(0.0, |j| v[j])).abs();
        if d > worst.0 {
            worst = (d, Some(i));
        }
    }
    let margin = if scale == 0.0 { 0.0 } else { worst.0 / scale };
    Ok(VerificationReport::new("symmetry", margin <= tolerance, margin, tolerance).at(worst.1))
}

/// Margin = min over H ∩ mask of u/‖u‖_∞ after choosing the global sign that
/// makes this minimum largest; passes when margin ≥ −tolerance.
pub fn check_sign(u: &Field, half: &RegionMask, tolerance: f64) -> Result<VerificationReport> {
    u.grid().ensure_same(half.grid())?;
    let region = u.mask().intersection(half)?;
    let scale = u.norm_inf();
    if scale == 0.0 || region.is_empty() {
        return Ok(VerificationReport::new("sign", true, 0.0, tolerance).with_note("u ≡ 0 on the region"));
    }
    let mut lo = (f64::INFINITY, None);
    let mut hi = (f64::NEG_INFINITY, None);
    for i in region.indices() {
        let x = u.value(i) / scale;
        if x < lo.0 {
            lo = (x, Some(i));
        }
        if x > hi.0 {
            hi = (x, Some(i));
        }
    }
    let (margin, cell, sign) = if lo.0 >= -hi.0 { (lo.0, lo.1, "+") } else { (-hi.0, hi.1, "−") };
    Ok(VerificationReport::new("sign", margin >= -tolerance, margin, tolerance)
        .at(cell)
        .with_note(format!("sign {sign}")))
}

/// Strict decrease in x₁ on the quarter Ω ∩ {x₁ > 0} ∩ {x_N > 0}.
///
/// For every pair x, y on a common x₁-line with x₁ < y₁ the difference
/// u(x) − u(y), scaled by ‖u‖_∞, must exceed −tolerance; margin is the least
/// such difference. Between cells at lattice distance ≥ 2h from the boundary
/// the difference must also be strictly positive. A field with
/// ‖u‖_∞ ≤ tolerance is reported as the u ≡ 0 alternative and passes.
pub fn check_monotonicity(u: &Field, domain: &Domain, tolerance: f64) -> Result<VerificationReport> {
    let grid = domain.grid();
    grid.ensure_same(u.grid())?;
    let scale = u.norm_inf();
    if scale <= tolerance {
        return Ok(VerificationReport::new("monotonicity", true, 0.0, tolerance).with_note("u ≡ 0 alternative"));
    }
    let dim = grid.dim();
    let last = dim - 1;
    let h = grid.h();
    let dist = domain.lattice_boundary_distance();
    let n1 = grid.extents()[0];
    let stride0 = grid.strides()[0];
    let mut loose = (f64::INFINITY, None);
    let mut strict = (f64::INFINITY, None);
    let mut lines = 0usize;
    // One line per index of the remaining axes, starting from x₁-index 0.
    for start in 0..stride0 {
        let cells: Vec<usize> = (0..n1)
            .map(|j| start + j * stride0)
            .filter(|&c| domain.mask().contains(c) && grid.coord(c, 0) > 0.0 && grid.coord(c, last) > 0.0)
            .collect();
        if cells.len() < 2 {
            continue;
        }
        lines += 1;
        // Sweep from large x₁ keeping the largest value seen further out.
        let mut max_all: Option<(f64, usize)> = None;
        let mut max_inner: Option<(f64, usize)> = None;
        for &c in cells.iter().rev() {
            let val = u.value(c) / scale;
            if let Some((m, far)) = max_all {
                if val - m < loose.0 {
                    loose = (val - m, Some(far));
                }
            }
            let inner = dist[c] >= 2.0 * h - 1e-12 * h;
            if inner {
                if let Some((m, far)) = max_inner {
                    if val - m < strict.0 {
                        strict = (val - m, Some(far));
                    }
                }
                if max_inner.map_or(true, |(m, _)| val > m) {
                    max_inner = Some((val, c));
                }
            }
            if max_all.map_or(true, |(m, _)| val > m) {
                max_all = Some((val, c));
            }
        }
    }
    if lines == 0 {
        return Ok(VerificationReport::new("monotonicity", true, 0.0, tolerance).with_note("no x₁-line with two quarter cells"));
    }
    let strict_ok = strict.0 > 0.0 || strict.0.is_infinite();
    let passed = loose.0 > -tolerance && strict_ok;
    let cell = if loose.0 <= -tolerance { loose.1 } else { strict.1 };
    Ok(VerificationReport::new("monotonicity", passed, loose.0, tolerance)
        .at(cell)
        .with_note(format!("least interior decrease {:e}", strict.0)))
}
