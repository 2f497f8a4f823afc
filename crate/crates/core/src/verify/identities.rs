use rayon::prelude::*;

use super::VerificationReport;
use crate::error::{Error, Result};
use crate::geometry::Reflection;
use crate::operator::{polarize, test_function_v, Field, NonlocalOperator, Parity, ANTISYMMETRY_TOL};

/// Compares energy(ū,ū) − energy(u,u) for the polarization ū of an odd u with
///
///   8h^{2N}·Σ_{x∈Ω₁⁺, y∈Ω₂⁺} u(x)u(y)·[W(x−y) − W(r x−y)],
///
/// where Ω₁⁺ and Ω₂⁺ are the cells of {x_axis > level} with u > 0 and u < 0.
///
/// Margin is the discrepancy relative to max(|lhs|, |rhs|, 10⁻¹²·energy(u,u)).
/// Passes when margin ≤ tolerance, energy(ū,ū) ≤ energy(u,u) and
/// ‖ū‖_p = ‖u‖_p to 10⁻¹² for p = 2, 3.
pub fn polarization_identity_check(op: &NonlocalOperator, u: &Field, r: &Reflection, tolerance: f64) -> Result<VerificationReport> {
    op.grid().ensure_same(u.grid())?;
    let bar = polarize(u, r)?;
    let grid = op.grid();
    let e_u = op.energy(u, u)?;
    let e_bar = op.energy(&bar, &bar)?;
    let lhs = e_bar - e_u;

    let upper = r.halfspace(grid);
    let pos: Vec<usize> = upper.indices().into_iter().filter(|&i| u.value(i) > 0.0).collect();
    let neg: Vec<usize> = upper.indices().into_iter().filter(|&i| u.value(i) < 0.0).collect();
    let rows: Vec<f64> = pos
        .par_iter()
        .map(|&x| {
            let mut acc = 0.0;
            for &y in &neg {
                let diff = op.weight_between(x, y) - op.mirrored_weight(x, y, r).expect("lattice reflection");
                acc += u.value(y) * diff;
            }
            u.value(x) * acc
        })
        .collect();
    let hn = grid.cell_volume();
    let rhs = 8.0 * hn * hn * rows.iter().sum::<f64>();

    let scale = lhs.abs().max(rhs.abs()).max(1e-12 * e_u.abs());
    let margin = if scale > 0.0 { (lhs - rhs).abs() / scale } else { 0.0 };
    let decreases = e_bar <= e_u * (1.0 + 1e-14);
    let norms_match = [2.0, 3.0].iter().all(|&p| {
        let a = u.norm_lp(p);
        a == 0.0 || (bar.norm_lp(p) / a - 1.0).abs() <= 1e-12
    });
    Ok(
        VerificationReport::new("polarization", margin <= tolerance && decreases && norms_match, margin, tolerance)
            .with_note(format!(
                "lhs {lhs:e}, rhs {rhs:e}, energy(u,u) {e_u:e}, energy decreases {decreases}, p-norms preserved {norms_match}"
            )),
    )
}

/// The inequality energy(w,v) + energy(v,v) ≤ 0 for the test function v
/// of a doubly antisymmetric w.
///
/// Margin is (energy(w,v) + energy(v,v)) / energy(w,w); passes when
/// margin ≤ tolerance, and when |margin| ≤ tolerance additionally requires
/// ‖v‖_∞ ≤ tolerance·‖w‖_∞.
pub fn lemma22_check(op: &NonlocalOperator, w: &Field, r1: &Reflection, r2: &Reflection, tolerance: f64) -> Result<VerificationReport> {
    op.grid().ensure_same(w.grid())?;
    for r in [r1, r2] {
        let defect = w.parity_defect(r, Parity::Odd)?;
        if defect > ANTISYMMETRY_TOL {
            return Err(Error::NotAntisymmetric { axis: r.axis(), defect });
        }
    }
    let v = test_function_v(w, r1, r2)?;
    let eww = op.energy(w, w)?;
    if eww == 0.0 {
        return Ok(VerificationReport::new("lemma2.2", true, 0.0, tolerance).with_note("w ≡ 0"));
    }
    let total = op.energy(w, &v)? + op.energy(&v, &v)?;
    let margin = total / eww;
    let mut passed = margin <= tolerance;
    let vmax = v.norm_inf();
    let mut note = format!("‖v‖∞ / ‖w‖∞ = {:e}", vmax / w.norm_inf());
    if margin.abs() <= tolerance {
        let equality_ok = vmax <= tolerance * w.norm_inf();
        passed &= equality_ok;
        note.push_str(if equality_ok { ", equality case with v ≡ 0" } else { ", equality without v ≡ 0" });
    }
    Ok(VerificationReport::new("lemma2.2", passed, margin, tolerance).with_note(note))
}
