use serde::{Deserialize, Serialize};

use super::VerificationReport;
use crate::error::{Error, Result};
use crate::geometry::{Domain, Reflection, RegionMask};
use crate::operator::{Field, Parity, ANTISYMMETRY_TOL};
use crate::solve::Nonlinearity;

/// Ω_λ = mask ∩ {x_N > 0} ∩ {x₁ > λ}.
fn cap(mask: &RegionMask, level: f64) -> RegionMask {
    let grid = mask.grid();
    let last = grid.dim() - 1;
    let cells = (0..grid.len())
        .map(|i| mask.contains(i) && grid.coord(i, 0) > level && grid.coord(i, last) > 0.0)
        .collect();
    RegionMask::from_cells(grid, cells).expect("same grid")
}

fn reflected_values(u: &Field, level: f64) -> Result<Vec<f64>> {
    let perm = Reflection::new(0, level).permutation(u.grid())?;
    Ok(perm.iter().map(|j| j.map_or(0.0, |j| u.value(j))).collect())
}

/// Values this close are treated as coinciding; the quotient would be
/// rounding noise.
const COINCIDENCE_TOL: f64 = 1e-12;

fn quotient(f: &dyn Nonlinearity, x: &[f64], a: f64, b: f64) -> f64 {
    if (a - b).abs() <= COINCIDENCE_TOL * a.abs().max(b.abs()) {
        0.0
    } else {
        (f.value(x, a) - f.value(x, b)) / (a - b)
    }
}

/// c_λ(x) = (f(x, u(r_λx)) − f(x, u(x))) / (u(r_λx) − u(x)) on Ω_λ, with
/// c_λ = 0 where the two values coincide to relative 10⁻¹². `level` must lie on the half-cell
/// lattice along x₁.
pub fn linearized_coefficient(u: &Field, f: &dyn Nonlinearity, level: f64) -> Result<Field> {
    let grid = u.grid();
    let mirror = reflected_values(u, level)?;
    let region = cap(u.mask(), level);
    let mut x = vec![0.0; grid.dim()];
    let values = (0..grid.len())
        .map(|i| {
            if !region.contains(i) {
                return 0.0;
            }
            grid.center_into(i, &mut x);
            quotient(f, &x, mirror[i], u.value(i))
        })
        .collect();
    Field::from_values(&region, values)
}

/// Outcome of sliding the plane {x₁ = λ} from λ₁ towards 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MovingPlaneResult {
    /// Scanned levels, descending; only levels with nonempty Ω_λ are kept.
    pub levels: Vec<f64>,
    /// min over Ω_λ of v_λ = u∘r_λ − u, relative to ‖u‖_∞.
    pub minima: Vec<f64>,
    /// Largest level whose minimum is below −tolerance, or 0.
    pub lambda0: f64,
    /// Outer face of the rightmost domain cell.
    pub lambda1: f64,
    pub step: f64,
    /// max over levels of sup |c_λ|.
    pub c_infinity: f64,
    /// Largest relative parity defect of v_λ about {x₁ = λ} and {x_N = 0}.
    pub antisymmetry_defect: f64,
    pub tolerance: f64,
}

impl MovingPlaneResult {
    /// Passes when λ₀ ≤ `max_lambda0` and every v_λ was doubly antisymmetric.
    pub fn report(&self, max_lambda0: f64) -> VerificationReport {
        let passed = self.lambda0 <= max_lambda0 && self.antisymmetry_defect <= ANTISYMMETRY_TOL;
        VerificationReport::new("moving-plane", passed, self.lambda0, max_lambda0).with_note(format!(
            "λ₁ = {}, step {}, c∞ = {:e}, levels {}",
            self.lambda1,
            self.step,
            self.c_infinity,
            self.levels.len()
        ))
    }
}

/// Scans λ = λ₁, λ₁ − h/2, … > 0 and records min v_λ over Ω_λ. λ₀ carries an
/// uncertainty of one step.
pub fn moving_plane_scan(u: &Field, f: &dyn Nonlinearity, domain: &Domain, tolerance: f64) -> Result<MovingPlaneResult> {
    let grid = domain.grid();
    grid.ensure_same(u.grid())?;
    let last = grid.dim() - 1;
    let r_n = Reflection::through_origin(last);
    let defect = u.parity_defect(&r_n, Parity::Odd)?;
    if defect > ANTISYMMETRY_TOL {
        return Err(Error::NotAntisymmetric { axis: last, defect });
    }
    let h = grid.h();
    let step = 0.5 * h;
    let cells = domain.mask().indices();
    let max_x1 = cells.iter().map(|&i| grid.coord(i, 0)).fold(f64::NEG_INFINITY, f64::max);
    let lambda1 = max_x1 + 0.5 * h;
    let scale = u.norm_inf();
    let perm_n = r_n.permutation(grid)?;

    let mut out = MovingPlaneResult {
        levels: Vec::new(),
        minima: Vec::new(),
        lambda0: 0.0,
        lambda1,
        step,
        c_infinity: 0.0,
        antisymmetry_defect: 0.0,
        tolerance,
    };
    if scale == 0.0 {
        return Ok(out);
    }
    let steps = (lambda1 / step).round() as usize;
    let mut x = vec![0.0; grid.dim()];
    for k in 0..steps {
        // Exact multiples of h/2 keep every level on the lattice.
        let level = (steps - k) as f64 * step;
        let region = cap(domain.mask(), level);
        if region.is_empty() {
            continue;
        }
        let mirror = reflected_values(u, level)?;
        let perm = Reflection::new(0, level).permutation(grid)?;
        let v: Vec<f64> = (0..grid.len()).map(|i| mirror[i] - u.value(i)).collect();

        let mut min = f64::INFINITY;
        for i in region.indices() {
            min = min.min(v[i] / scale);
            grid.center_into(i, &mut x);
            let c = quotient(f, &x, mirror[i], u.value(i)).abs();
            out.c_infinity = out.c_infinity.max(c);
        }
        let vmax = v.iter().fold(0.0f64, |m, a| m.max(a.abs()));
        if vmax > 0.0 {
            for i in 0..grid.len() {
                // Cells whose mirror image leaves the grid are not constrained.
                if let Some(j) = perm[i].filter(|&j| perm[j] == Some(i)) {
                    out.antisymmetry_defect = out.antisymmetry_defect.max((v[i] + v[j]).abs() / vmax);
                }
                if let Some(j) = perm_n[i] {
                    if perm[i].is_some() && perm[j].is_some() {
                        out.antisymmetry_defect = out.antisymmetry_defect.max((v[i] + v[j]).abs() / vmax);
                    }
                }
            }
        }
        if min < -tolerance && out.lambda0 == 0.0 {
            out.lambda0 = level;
        }
        out.levels.push(level);
        out.minima.push(min);
    }
    Ok(out)
}
