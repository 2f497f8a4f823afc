use crate::error::{invalid, Result};
use crate::geometry::{Reflection, RegionMask};
use crate::operator::{Field, NonlocalOperator};

/// Fields supported in a mask and odd under a list of reflections.
#[derive(Clone, Debug)]
pub struct Sector {
    mask: RegionMask,
    odd: Vec<(Reflection, Vec<Option<usize>>)>,
}

impl Sector {
    /// All fields supported in `mask`.
    pub fn dirichlet(mask: &RegionMask) -> Self {
        Self {
            mask: mask.clone(),
            odd: Vec::new(),
        }
    }

    /// Fields supported in `mask` that are odd under every reflection in
    /// `reflections`. The mask must be invariant under each of them.
    pub fn odd(mask: &RegionMask, reflections: &[Reflection]) -> Result<Self> {
        let mut odd = Vec::with_capacity(reflections.len());
        for r in reflections {
            if !mask.is_invariant_under(r)? {
                return Err(invalid(
                    "reflection",
                    format!("mask is not invariant under the reflection on axis {} at {}", r.axis(), r.level()),
                ));
            }
            odd.push((*r, r.permutation(mask.grid())?));
        }
        Ok(Self {
            mask: mask.clone(),
            odd,
        })
    }

    pub fn mask(&self) -> &RegionMask {
        &self.mask
    }

    pub fn reflections(&self) -> Vec<Reflection> {
        self.odd.iter().map(|(r, _)| *r).collect()
    }

    /// Orthogonal projection onto the sector, in place.
    pub fn project(&self, v: &mut [f64]) {
        for (x, &inside) in v.iter_mut().zip(self.mask.cells()) {
            if !inside {
                *x = 0.0;
            }
        }
        for (_, perm) in &self.odd {
            for i in 0..v.len() {
                match perm[i] {
                    Some(j) if j > i => {
                        let a = 0.5 * (v[i] - v[j]);
                        v[i] = a;
                        v[j] = -a;
                    }
                    Some(j) if j == i => v[i] = 0.0,
                    None => v[i] = 0.0,
                    _ => {}
                }
            }
        }
    }

    pub fn field(&self, values: Vec<f64>) -> Result<Field> {
        Field::from_values(&self.mask, values)
    }
}

/// P(L − σ)P restricted to a sector, on raw full-grid buffers.
pub(crate) struct SectorOperator<'a> {
    pub op: &'a NonlocalOperator,
    pub sector: &'a Sector,
    pub shift: f64,
}

impl SectorOperator<'_> {
    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        self.op.apply_slice(x, out);
        if self.shift != 0.0 {
            for (o, v) in out.iter_mut().zip(x) {
                *o -= self.shift * v;
            }
        }
        self.sector.project(out);
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
