use super::{Field, Parity};
use crate::error::{Error, Result};
use crate::geometry::Reflection;

/// Relative antisymmetry defect accepted by [`test_function_v`] and
/// [`polarize`].
pub const ANTISYMMETRY_TOL: f64 = 1e-12;

fn require_odd(u: &Field, r: &Reflection) -> Result<()> {
    let defect = u.parity_defect(r, Parity::Odd)?;
    if defect > ANTISYMMETRY_TOL {
        return Err(Error::NotAntisymmetric { axis: r.axis(), defect });
    }
    Ok(())
}

/// v = w⁻·1_{H₁}1_{H₂} − w⁺·1_{H₁ᶜ}1_{H₂} for a doubly antisymmetric w.
pub fn test_function_v(w: &Field, r1: &Reflection, r2: &Reflection) -> Result<Field> {
    require_odd(w, r1)?;
    require_odd(w, r2)?;
    let grid = w.grid();
    let values = (0..grid.len())
        .map(|i| {
            let val = w.value(i);
            if grid.coord(i, r2.axis()) <= r2.level() {
                0.0
            } else if grid.coord(i, r1.axis()) > r1.level() {
                (-val).max(0.0)
            } else {
                -val.max(0.0)
            }
        })
        .collect();
    Field::from_values(w.mask(), values)
}

/// ū = |u| on H, −|u| on the mirror side, for u odd about r.
pub fn polarize(u: &Field, r: &Reflection) -> Result<Field> {
    require_odd(u, r)?;
    let grid = u.grid();
    let values = (0..grid.len())
        .map(|i| {
            let x = grid.coord(i, r.axis());
            if x > r.level() {
                u.value(i).abs()
            } else if x < r.level() {
                -u.value(i).abs()
            } else {
                0.0
            }
        })
        .collect();
    Field::from_values(u.mask(), values)
}
