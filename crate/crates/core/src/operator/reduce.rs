use super::{Field, NonlocalOperator};
use crate::error::Result;
use crate::geometry::{Reflection, RegionMask};

/// The operator acting on odd fields, written on the open halfspace H of a
/// reflection r: (L_r u)(x) = (L ũ)(x) for x ∈ H, where ũ is the odd extension
/// of u. Its matrix is A(x, y) − A(x, r(y)) for x, y ∈ H.
#[derive(Debug)]
pub struct ReducedOperator<'a> {
    op: &'a NonlocalOperator,
    reflection: Reflection,
    half: RegionMask,
    perm: Vec<Option<usize>>,
}

/// Builds the odd-sector reduction of `op` for the reflection `r`.
pub fn antisymmetric_reduce(op: &NonlocalOperator, r: Reflection) -> Result<ReducedOperator<'_>> {
    let perm = r.permutation(op.grid())?;
    Ok(ReducedOperator {
        op,
        half: r.halfspace(op.grid()),
        reflection: r,
        perm,
    })
}

impl<'a> ReducedOperator<'a> {
    pub fn operator(&self) -> &NonlocalOperator {
        self.op
    }

    pub fn reflection(&self) -> &Reflection {
        &self.reflection
    }

    /// The open halfspace H the reduced operator lives on.
    pub fn halfspace(&self) -> &RegionMask {
        &self.half
    }

    /// Odd extension: u on H, −u∘r on r(H), 0 elsewhere.
    pub fn extend(&self, u: &Field) -> Result<Field> {
        let n = self.op.grid().len();
        let mut out = vec![0.0; n];
        for i in 0..n {
            if self.half.contains(i) {
                out[i] = u.value(i);
                if let Some(j) = self.perm[i] {
                    out[j] = -u.value(i);
                }
            }
        }
        let mask = self.half.union(&self.half.reflected(&self.reflection)?)?;
        Field::from_values(&mask, out)
    }

    /// L applied to the odd extension, restricted to H.
    pub fn apply(&self, u: &Field) -> Result<Field> {
        let full = self.op.apply(&self.extend(u)?)?;
        full.restricted(&self.half)
    }

    /// A(x, y) − A(x, r(y)) for x, y ∈ H.
    pub fn entry(&self, x: usize, y: usize) -> f64 {
        let mirror = match self.perm[y] {
            Some(ry) => self.op.entry(x, ry),
            None => 0.0,
        };
        self.op.entry(x, y) - mirror
    }

    /// Dense matrix on the cells of `region` (which must lie in H), in
    /// ascending cell order.
    pub fn dense_rows(&self, region: &RegionMask) -> Vec<Vec<f64>> {
        let cells = region.indices();
        cells
            .iter()
            .map(|&x| cells.iter().map(|&y| self.entry(x, y)).collect())
            .collect()
    }
}
