use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::VerificationReport;
use crate::error::{invalid, Error, Result};
use crate::geometry::{symmetrized_set, GridSpec, Reflection, RegionMask};
use crate::operator::{Field, NonlocalOperator, Parity, ANTISYMMETRY_TOL};
use crate::solve::cg::conjugate_gradient;
use crate::solve::{lambda1_minus, Sector, SolverOptions};

fn require_odd(w: &Field, r: &Reflection) -> Result<()> {
    let defect = w.parity_defect(r, Parity::Odd)?;
    if defect > ANTISYMMETRY_TOL {
        return Err(Error::NotAntisymmetric { axis: r.axis(), defect });
    }
    Ok(())
}

fn quarter(grid: &GridSpec, r1: &Reflection, r2: &Reflection) -> Result<RegionMask> {
    r1.halfspace(grid).intersection(&r2.halfspace(grid))
}

/// Checks that a doubly antisymmetric w is a supersolution of L w = c w on U
/// that is nonnegative on (H₁ ∩ H₂) ∖ U.
///
/// Margin is the smaller of min_U (Lw − cw) and min_{(H₁∩H₂)∖U} w; passes when
/// margin ≥ −tolerance.
pub fn supersolution_check(
    op: &NonlocalOperator,
    w: &Field,
    c: &Field,
    region: &RegionMask,
    r1: &Reflection,
    r2: &Reflection,
    tolerance: f64,
) -> Result<VerificationReport> {
    let grid = op.grid();
    grid.ensure_same(w.grid())?;
    grid.ensure_same(c.grid())?;
    grid.ensure_same(region.grid())?;
    require_odd(w, r1)?;
    require_odd(w, r2)?;
    let lw = op.apply(w)?;
    let outside = quarter(grid, r1, r2)?.difference(region)?;
    let mut worst = (f64::INFINITY, None);
    for i in region.indices() {
        let res = lw.value(i) - c.value(i) * w.value(i);
        if res < worst.0 {
            worst = (res, Some(i));
        }
    }
    let residual_min = worst.0;
    for i in outside.indices() {
        if w.value(i) < worst.0 {
            worst = (w.value(i), Some(i));
        }
    }
    let margin = if worst.0.is_finite() { worst.0 } else { 0.0 };
    Ok(VerificationReport::new("supersolution", margin >= -tolerance, margin, tolerance)
        .at(worst.1)
        .with_note(format!("min residual on U {residual_min:e}")))
}

/// λ₁⁻ over a family of shrinking regions in H₁ ∩ H₂ and the resulting
/// maximum-principle threshold.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmallVolumeResult {
    pub c_infinity: f64,
    pub measures: Vec<f64>,
    pub lambdas: Vec<f64>,
    /// Largest measure m such that every tested region of measure ≤ m has
    /// λ₁⁻ ≥ c∞; 0 if the smallest region already fails.
    pub delta_star: f64,
    /// Number of supersolutions solved on regions of measure ≤ δ*.
    pub validation_runs: usize,
    /// Runs that produced a negative value on H₁ ∩ H₂ or did not solve.
    pub validation_failures: usize,
    /// Least value of w/‖w‖_∞ on H₁ ∩ H₂ over all runs.
    pub validation_min: f64,
}

impl SmallVolumeResult {
    pub fn report(&self) -> VerificationReport {
        let lambdas_ok = self.lambdas.iter().all(|&l| l > 0.0);
        VerificationReport::new(
            "small-volume",
            lambdas_ok && self.validation_failures == 0,
            self.validation_min,
            0.0,
        )
        .with_note(format!(
            "δ* = {}, c∞ = {}, {} validation runs",
            self.delta_star, self.c_infinity, self.validation_runs
        ))
    }
}

/// Boxes [λ₁, λ₁ + ρ·w₁] × [λ₂, λ₂ + ρ·w₂] along the two reflection axes,
/// and |x_a| < ρ·w_a/2 along any other axis, for each scale ρ.
pub fn scaled_family(
    grid: &GridSpec,
    r1: &Reflection,
    r2: &Reflection,
    widths: &[f64],
    scales: &[f64],
) -> Result<Vec<RegionMask>> {
    if widths.len() != grid.dim() || widths.iter().any(|&w| !(w > 0.0)) {
        return Err(invalid("widths", "need one positive width per axis"));
    }
    Ok(scales
        .iter()
        .map(|&rho| {
            RegionMask::from_fn(grid, |x| {
                (0..grid.dim()).all(|a| {
                    let w = rho * widths[a];
                    if a == r1.axis() {
                        x[a] > r1.level() && x[a] < r1.level() + w
                    } else if a == r2.axis() {
                        x[a] > r2.level() && x[a] < r2.level() + w
                    } else {
                        x[a].abs() < 0.5 * w
                    }
                })
            })
        })
        .collect())
}

/// Computes λ₁⁻ for each region of a strictly shrinking family, derives the
/// threshold δ*, and on every region at or below δ* solves (L − c) w = f in
/// the doubly antisymmetric sector for random even |c| ≤ c∞ and f ≥ 0 on U,
/// checking w ≥ 0 on H₁ ∩ H₂.
pub fn small_volume_threshold(
    op: &NonlocalOperator,
    c_infinity: f64,
    family: &[RegionMask],
    r1: &Reflection,
    r2: &Reflection,
    trials: usize,
    opts: &SolverOptions,
) -> Result<SmallVolumeResult> {
    if !(c_infinity >= 0.0 && c_infinity.is_finite()) {
        return Err(invalid("c_infinity", "must be finite and nonnegative"));
    }
    if family.is_empty() {
        return Err(invalid("family", "no regions given"));
    }
    let grid = op.grid();
    let q = quarter(grid, r1, r2)?;
    let measures: Vec<f64> = family.iter().map(|m| m.measure()).collect();
    for (k, m) in family.iter().enumerate() {
        grid.ensure_same(m.grid())?;
        if m.is_empty() || !m.is_subset_of(&q) {
            return Err(invalid("family", format!("region {k} is empty or leaves H₁ ∩ H₂")));
        }
    }
    if measures.windows(2).any(|w| w[1] >= w[0]) {
        return Err(invalid("family", "measures must be strictly decreasing"));
    }

    let mut lambdas = Vec::with_capacity(family.len());
    for m in family {
        lambdas.push(lambda1_minus(op, m, r1, opts)?.eigenvalues[0]);
    }
    let mut delta_star = 0.0;
    for k in (0..family.len()).rev() {
        if lambdas[k] >= c_infinity {
            delta_star = measures[k];
        } else {
            break;
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let p1 = r1.permutation(grid)?;
    let p2 = r2.permutation(grid)?;
    let mut runs = 0;
    let mut failures = 0;
    let mut least = f64::INFINITY;
    for (k, region) in family.iter().enumerate() {
        if measures[k] > delta_star {
            continue;
        }
        let full = symmetrized_set(region, r1, r2)?;
        let sector = Sector::odd(&full, &[*r1, *r2])?;
        for _ in 0..trials {
            runs += 1;
            let raw: Vec<f64> = (0..grid.len()).map(|_| rng.gen_range(-c_infinity..=c_infinity)).collect();
            // Average over the orbit so that c commutes with both reflections.
            let c: Vec<f64> = (0..grid.len())
                .map(|i| {
                    let orbit = [Some(i), p1[i], p2[i], p2[i].and_then(|j| p1[j])];
                    if orbit.iter().all(Option::is_some) {
                        orbit.iter().map(|j| raw[j.unwrap()]).sum::<f64>() / 4.0
                    } else {
                        0.0
                    }
                })
                .collect();
            let mut f: Vec<f64> = (0..grid.len())
                .map(|i| if region.contains(i) { rng.gen_range(0.0..1.0) } else { 0.0 })
                .collect();
            sector.project(&mut f);
            let apply = |x: &[f64], out: &mut [f64]| {
                op.apply_slice(x, out);
                for i in 0..x.len() {
                    out[i] -= c[i] * x[i];
                }
                sector.project(out);
            };
            let mut w = vec![0.0; grid.len()];
            let out = conjugate_gradient(apply, &f, &mut w, opts.linear_tolerance, opts.linear_max_iterations);
            if !out.converged {
                failures += 1;
                continue;
            }
            let scale = w.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let min = q.indices().iter().map(|&i| w[i]).fold(f64::INFINITY, f64::min);
            let rel = if scale > 0.0 { min / scale } else { 0.0 };
            least = least.min(rel);
            if rel < -ANTISYMMETRY_TOL {
                failures += 1;
            }
        }
    }
    Ok(SmallVolumeResult {
        c_infinity,
        measures,
        lambdas,
        delta_star,
        validation_runs: runs,
        validation_failures: failures,
        validation_min: if least.is_finite() { least } else { 0.0 },
    })
}
