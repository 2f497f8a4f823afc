use std::io::{BufRead, Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geometry::{GridSpec, Reflection, RegionMask};

const FIELD_MAGIC: &[u8; 4] = b"FSFD";
const FIELD_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Even,
    Odd,
}

/// Declared behaviour of a field under a reflection.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymmetryTag {
    pub reflection: Reflection,
    pub parity: Parity,
}

/// Real grid function, exactly zero outside its mask.
#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    mask: RegionMask,
    values: Vec<f64>,
    tags: Vec<SymmetryTag>,
}

impl Field {
    pub fn zeros(mask: &RegionMask) -> Self {
        Self {
            mask: mask.clone(),
            values: vec![0.0; mask.grid().len()],
            tags: Vec::new(),
        }
    }

    /// Takes per-cell values for the whole grid; entries outside `mask` are
    /// discarded.
    pub fn from_values(mask: &RegionMask, mut values: Vec<f64>) -> Result<Self> {
        if values.len() != mask.grid().len() {
            return Err(Error::GridMismatch(format!(
                "{} values for a grid of {} cells",
                values.len(),
                mask.grid().len()
            )));
        }
        for (v, &inside) in values.iter_mut().zip(mask.cells()) {
            if !inside {
                *v = 0.0;
            } else if !v.is_finite() {
                return Err(invalid("values", "field values must be finite"));
            }
        }
        Ok(Self {
            mask: mask.clone(),
            values,
            tags: Vec::new(),
        })
    }

    /// Values on the whole grid.
    pub fn on_grid(grid: &GridSpec, values: Vec<f64>) -> Result<Self> {
        Self::from_values(&RegionMask::full(grid), values)
    }

    /// Evaluates `f` at the centers of the mask cells.
    pub fn from_fn(mask: &RegionMask, mut f: impl FnMut(&[f64]) -> f64) -> Result<Self> {
        let grid = mask.grid();
        let mut x = vec![0.0; grid.dim()];
        let values = (0..grid.len())
            .map(|i| {
                if mask.contains(i) {
                    grid.center_into(i, &mut x);
                    f(&x)
                } else {
                    0.0
                }
            })
            .collect();
        Self::from_values(mask, values)
    }

    pub fn grid(&self) -> &GridSpec {
        self.mask.grid()
    }

    pub fn mask(&self) -> &RegionMask {
        &self.mask
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn value(&self, cell: usize) -> f64 {
        self.values[cell]
    }

    pub fn tags(&self) -> &[SymmetryTag] {
        &self.tags
    }

    fn with_values(&self, values: Vec<f64>) -> Self {
        Self {
            mask: self.mask.clone(),
            values,
            tags: Vec::new(),
        }
    }

    /// Cells with a nonzero value.
    pub fn support(&self) -> RegionMask {
        RegionMask::from_cells(self.grid(), self.values.iter().map(|&v| v != 0.0).collect())
            .expect("same grid")
    }

    /// u ∘ r, reading 0 where r(x) leaves the grid.
    pub fn reflected(&self, r: &Reflection) -> Result<Field> {
        let perm = r.permutation(self.grid())?;
        let values = perm.iter().map(|j| j.map_or(0.0, |j| self.values[j])).collect();
        Ok(Self {
            mask: self.mask.reflected(r)?,
            values,
            tags: Vec::new(),
        })
    }

    fn parity_projection(&self, r: &Reflection, parity: Parity) -> Result<Field> {
        let perm = r.permutation(self.grid())?;
        let mask = self.mask.union(&self.mask.reflected(r)?)?;
        let sign = match parity {
            Parity::Even => 1.0,
            Parity::Odd => -1.0,
        };
        let values = perm
            .iter()
            .enumerate()
            .map(|(i, j)| match j {
                Some(j) if mask.contains(i) => 0.5 * (self.values[i] + sign * self.values[*j]),
                _ => 0.0,
            })
            .collect();
        let mut tags: Vec<SymmetryTag> = self
            .tags
            .iter()
            .filter(|t| t.reflection.axis() != r.axis())
            .copied()
            .collect();
        tags.push(SymmetryTag {
            reflection: *r,
            parity,
        });
        Ok(Self { mask, values, tags })
    }

    /// (u − u∘r)/2; cells whose mirror leaves the grid are zeroed.
    pub fn antisymmetrized(&self, r: &Reflection) -> Result<Field> {
        self.parity_projection(r, Parity::Odd)
    }

    /// (u + u∘r)/2; cells whose mirror leaves the grid are zeroed.
    pub fn symmetrized(&self, r: &Reflection) -> Result<Field> {
        self.parity_projection(r, Parity::Even)
    }

    /// ‖u ∓ u∘r‖_∞ / ‖u‖_∞ for the requested parity (0 for u ≡ 0).
    pub fn parity_defect(&self, r: &Reflection, parity: Parity) -> Result<f64> {
        let perm = r.permutation(self.grid())?;
        let scale = self.norm_inf();
        if scale == 0.0 {
            return Ok(0.0);
        }
        let sign = match parity {
            Parity::Even => -1.0,
            Parity::Odd => 1.0,
        };
        let worst = perm
            .iter()
            .enumerate()
            .map(|(i, j)| (self.values[i] + sign * j.map_or(0.0, |j| self.values[j])).abs())
            .fold(0.0, f64::max);
        Ok(worst / scale)
    }

    /// Declares a symmetry after checking it to relative tolerance `tol`; the
    /// symmetry is then made exact by projection.
    pub fn with_tag(self, tag: SymmetryTag, tol: f64) -> Result<Field> {
        let defect = self.parity_defect(&tag.reflection, tag.parity)?;
        if defect > tol {
            return Err(Error::NotAntisymmetric {
                axis: tag.reflection.axis(),
                defect,
            });
        }
        let kept = self.tags.clone();
        let mut out = self.parity_projection(&tag.reflection, tag.parity)?;
        for t in kept {
            if t.reflection.axis() != tag.reflection.axis() {
                out.tags.insert(0, t);
            }
        }
        Ok(out)
    }

    pub fn positive_part(&self) -> Field {
        self.with_values(self.values.iter().map(|&v| v.max(0.0)).collect())
    }

    pub fn negative_part(&self) -> Field {
        self.with_values(self.values.iter().map(|&v| (-v).max(0.0)).collect())
    }

    pub fn abs(&self) -> Field {
        self.with_values(self.values.iter().map(|v| v.abs()).collect())
    }

    pub fn scaled(&self, a: f64) -> Field {
        let mut out = self.with_values(self.values.iter().map(|v| a * v).collect());
        out.tags = self.tags.clone();
        out
    }

    /// a·self + b·other on the union of the masks.
    pub fn combine(&self, a: f64, other: &Field, b: f64) -> Result<Field> {
        let mask = self.mask.union(&other.mask)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(x, y)| a * x + b * y)
            .collect();
        Field::from_values(&mask, values)
    }

    pub fn add(&self, other: &Field) -> Result<Field> {
        self.combine(1.0, other, 1.0)
    }

    pub fn sub(&self, other: &Field) -> Result<Field> {
        self.combine(1.0, other, -1.0)
    }

    /// Pointwise product.
    pub fn mul(&self, other: &Field) -> Result<Field> {
        let mask = self.mask.intersection(&other.mask)?;
        Field::from_values(&mask, self.values.iter().zip(&other.values).map(|(x, y)| x * y).collect())
    }

    /// Zeroes every cell outside `mask` and shrinks the mask accordingly.
    pub fn restricted(&self, mask: &RegionMask) -> Result<Field> {
        let mask = self.mask.intersection(mask)?;
        Field::from_values(&mask, self.values.clone())
    }

    /// Same values with a larger declared mask.
    pub fn widened(&self, mask: &RegionMask) -> Result<Field> {
        let mut out = self.clone();
        out.mask = self.mask.union(mask)?;
        Ok(out)
    }

    /// h^N·Σ u v.
    pub fn dot(&self, other: &Field) -> Result<f64> {
        self.grid().ensure_same(other.grid())?;
        Ok(self.grid().cell_volume() * self.values.iter().zip(&other.values).map(|(x, y)| x * y).sum::<f64>())
    }

    /// (h^N Σ|u|^p)^{1/p}.
    pub fn norm_lp(&self, p: f64) -> f64 {
        let sum: f64 = self.values.iter().map(|v| v.abs().powf(p)).sum();
        (self.grid().cell_volume() * sum).powf(1.0 / p)
    }

    pub fn norm_l2(&self) -> f64 {
        (self.grid().cell_volume() * self.values.iter().map(|v| v * v).sum::<f64>()).sqrt()
    }

    pub fn norm_inf(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Writes `x1,...,xN,value` rows for the mask cells, row-major.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let dim = self.grid().dim();
        let header: Vec<String> = (1..=dim).map(|a| format!("x{a}")).collect();
        writeln!(out, "{},value", header.join(","))?;
        let mut x = vec![0.0; dim];
        for i in self.mask.indices() {
            self.grid().center_into(i, &mut x);
            for v in &x {
                write!(out, "{v:?},")?;
            }
            writeln!(out, "{:?}", self.values[i])?;
        }
        Ok(())
    }

    /// Reads [`Field::write_csv`] output; the mask is the set of listed cells.
    pub fn read_csv<R: BufRead>(grid: &GridSpec, input: R) -> Result<Field> {
        let dim = grid.dim();
        let mut cells = vec![false; grid.len()];
        let mut values = vec![0.0; grid.len()];
        let mut lines = input.lines();
        let header = lines.next().ok_or_else(|| Error::Format("empty field file".into()))??;
        if header.split(',').count() != dim + 1 {
            return Err(Error::Format(format!("field header `{header}` does not match dim {dim}")));
        }
        for (n, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let nums: Vec<f64> = line
                .split(',')
                .map(|p| p.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Format(format!("line {}: {e}", n + 2)))?;
            if nums.len() != dim + 1 {
                return Err(Error::Format(format!("line {}: expected {} columns", n + 2, dim + 1)));
            }
            let cell = grid
                .locate(&nums[..dim])
                .ok_or_else(|| Error::Format(format!("line {}: not a cell center", n + 2)))?;
            cells[cell] = true;
            values[cell] = nums[dim];
        }
        Field::from_values(&RegionMask::from_cells(grid, cells)?, values)
    }

    /// Compact little-endian dump; layout in `docs/FORMATS.md`.
    pub fn write_binary<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let grid = self.grid();
        let mut buf = Vec::with_capacity(16 + grid.len() * 9);
        buf.extend_from_slice(FIELD_MAGIC);
        buf.extend_from_slice(&FIELD_VERSION.to_le_bytes());
        buf.extend_from_slice(&(grid.dim() as u32).to_le_bytes());
        for &n in grid.extents() {
            buf.extend_from_slice(&(n as u32).to_le_bytes());
        }
        buf.extend_from_slice(&grid.h().to_le_bytes());
        for &o in grid.origin() {
            buf.extend_from_slice(&o.to_le_bytes());
        }
        for &v in &self.values {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        buf.extend(self.mask.cells().iter().map(|&b| u8::from(b)));
        out.write_all(&buf)
    }

    /// Reads [`Field::write_binary`] output. The grid must be centered.
    pub fn read_binary<R: Read>(mut input: R) -> Result<Field> {
        let mut buf = Vec::new();
        input.read_to_end(&mut buf)?;
        let mut pos = 0;
        let mut take = |n: usize| -> Result<&[u8]> {
            let s = buf.get(pos..pos + n).ok_or_else(|| Error::Format("field dump truncated".into()))?;
            pos += n;
            Ok(s)
        };
        if take(4)? != FIELD_MAGIC {
            return Err(Error::Format("not a field dump".into()));
        }
        let u32_at = |b: &[u8]| u32::from_le_bytes(b.try_into().unwrap());
        let f64_at = |b: &[u8]| f64::from_le_bytes(b.try_into().unwrap());
        let version = u32_at(take(4)?);
        if version != FIELD_VERSION {
            return Err(Error::Format(format!("unsupported field dump version {version}")));
        }
        let dim = u32_at(take(4)?) as usize;
        let mut extents = Vec::with_capacity(dim);
        for _ in 0..dim {
            extents.push(u32_at(take(4)?) as usize);
        }
        let h = f64_at(take(8)?);
        let mut origin = Vec::with_capacity(dim);
        for _ in 0..dim {
            origin.push(f64_at(take(8)?));
        }
        let grid = GridSpec::centered(h, &extents)?;
        if grid.origin().iter().zip(&origin).any(|(a, b)| (a - b).abs() > 1e-9 * h) {
            return Err(Error::Format("field dump grid is not centered".into()));
        }
        let n = grid.len();
        let mut values = Vec::with_capacity(n);
        for _ in 0..n {
            values.push(f64_at(take(8)?));
        }
        let cells: Vec<bool> = take(n)?.iter().map(|&b| b != 0).collect();
        if pos != buf.len() {
            return Err(Error::Format("trailing bytes in field dump".into()));
        }
        Field::from_values(&RegionMask::from_cells(&grid, cells)?, values)
    }
}
