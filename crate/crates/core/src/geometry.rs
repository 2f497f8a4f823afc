//! Uniform grids, reflections, halfspaces, region masks and domains satisfying
//! condition (D).
//!
//! Axes are 0-based: axis `0` is the x₁ direction and axis `dim - 1` is x_N.
//! Cell centers sit at `origin + j·h`; centered grids have even extents on the
//! first and last axis, so no center lies on x₁ = 0 or x_N = 0.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Relative slack used when matching coordinates to lattice points.
const LATTICE_SLACK: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    dim: usize,
    h: f64,
    extents: Vec<usize>,
    origin: Vec<f64>,
}

impl GridSpec {
    /// Grid centered at the origin, symmetric about every coordinate hyperplane.
    pub fn centered(h: f64, extents: &[usize]) -> Result<Self> {
        let dim = extents.len();
        if dim == 0 {
            return Err(invalid("extents", "need at least one axis"));
        }
        if !(h.is_finite() && h > 0.0) {
            return Err(invalid("h", format!("spacing must be positive, got {h}")));
        }
        if let Some(&n) = extents.iter().find(|&&n| n < 2) {
            return Err(invalid("extents", format!("each extent must be >= 2, got {n}")));
        }
        for axis in [0, dim - 1] {
            if extents[axis] % 2 != 0 {
                return Err(invalid(
                    "extents",
                    format!("axis {axis} needs an even extent so no center lies on the symmetry plane"),
                ));
            }
        }
        let origin = extents.iter().map(|&n| -((n - 1) as f64) * h / 2.0).collect();
        Ok(Self {
            dim,
            h,
            extents: extents.to_vec(),
            origin,
        })
    }

    /// Square/cubic centered grid with `n` cells per axis.
    pub fn cube(dim: usize, h: f64, n: usize) -> Result<Self> {
        Self::centered(h, &vec![n; dim])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn extents(&self) -> &[usize] {
        &self.extents
    }

    pub fn origin(&self) -> &[f64] {
        &self.origin
    }

    /// Total number of cells.
    pub fn len(&self) -> usize {
        self.extents.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// h^N.
    pub fn cell_volume(&self) -> f64 {
        self.h.powi(self.dim as i32)
    }

    /// Row-major strides (last axis fastest).
    pub fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.dim];
        for a in (0..self.dim - 1).rev() {
            strides[a] = strides[a + 1] * self.extents[a + 1];
        }
        strides
    }

    pub fn flat(&self, index: &[usize]) -> usize {
        debug_assert_eq!(index.len(), self.dim);
        index
            .iter()
            .zip(&self.extents)
            .fold(0, |acc, (&j, &n)| acc * n + j)
    }

    pub fn unflatten_into(&self, mut flat: usize, out: &mut [usize]) {
        for a in (0..self.dim).rev() {
            out[a] = flat % self.extents[a];
            flat /= self.extents[a];
        }
    }

    pub fn unflatten(&self, flat: usize) -> Vec<usize> {
        let mut out = vec![0; self.dim];
        self.unflatten_into(flat, &mut out);
        out
    }

    /// Index of cell `flat` along `axis`.
    pub fn axis_index(&self, flat: usize, axis: usize) -> usize {
        let stride: usize = self.extents[axis + 1..].iter().product();
        (flat / stride) % self.extents[axis]
    }

    pub fn axis_coord(&self, axis: usize, j: usize) -> f64 {
        self.origin[axis] + j as f64 * self.h
    }

    pub fn coord(&self, flat: usize, axis: usize) -> f64 {
        self.axis_coord(axis, self.axis_index(flat, axis))
    }

    pub fn center_into(&self, flat: usize, out: &mut [f64]) {
        let mut rest = flat;
        for a in (0..self.dim).rev() {
            out[a] = self.axis_coord(a, rest % self.extents[a]);
            rest /= self.extents[a];
        }
    }

    pub fn center(&self, flat: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.center_into(flat, &mut out);
        out
    }

    /// Cell whose center coincides with `x`, if any.
    pub fn locate(&self, x: &[f64]) -> Option<usize> {
        if x.len() != self.dim {
            return None;
        }
        let mut flat = 0;
        for a in 0..self.dim {
            let t = (x[a] - self.origin[a]) / self.h;
            let j = t.round();
            if (t - j).abs() > LATTICE_SLACK || j < 0.0 || j >= self.extents[a] as f64 {
                return None;
            }
            flat = flat * self.extents[a] + j as usize;
        }
        Some(flat)
    }

    /// Largest number of cells a lattice segment inside the grid can span: the
    /// Euclidean diagonal in units of h.
    pub fn diagonal_cells(&self) -> f64 {
        self.extents
            .iter()
            .map(|&n| ((n - 1) as f64).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    pub fn ensure_same(&self, other: &GridSpec) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "extents {:?} h {} vs extents {:?} h {}",
                self.extents, self.h, other.extents, other.h
            )))
        }
    }
}

/// Reflection r_{i,λ}: x ↦ x + 2(λ − x_i)e_i.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Reflection {
    axis: usize,
    level: f64,
}

impl Reflection {
    pub fn new(axis: usize, level: f64) -> Self {
        Self { axis, level }
    }

    /// Reflection across the coordinate hyperplane x_axis = 0.
    pub fn through_origin(axis: usize) -> Self {
        Self { axis, level: 0.0 }
    }

    pub fn axis(&self) -> usize {
        self.axis
    }

    pub fn level(&self) -> f64 {
        self.level
    }

    pub fn reflect_point(&self, x: &[f64]) -> Vec<f64> {
        let mut y = x.to_vec();
        y[self.axis] = 2.0 * self.level - y[self.axis];
        y
    }

    /// Index offset `m` with j' = m − j along the reflection axis.
    fn index_sum(&self, grid: &GridSpec) -> Result<i64> {
        if self.axis >= grid.dim() {
            return Err(invalid("axis", format!("axis {} out of range for dim {}", self.axis, grid.dim())));
        }
        let k = 2.0 * (self.level - grid.origin()[self.axis]) / grid.h();
        let kr = k.round();
        if (k - kr).abs() > LATTICE_SLACK * k.abs().max(1.0) {
            return Err(Error::OffLattice {
                axis: self.axis,
                level: self.level,
            });
        }
        Ok(kr as i64)
    }

    /// Image of cell `flat`; `None` when the image falls outside the grid.
    pub fn reflect_cell(&self, grid: &GridSpec, flat: usize) -> Result<Option<usize>> {
        let m = self.index_sum(grid)?;
        Ok(reflect_with(grid, self.axis, m, flat))
    }

    /// Image of every cell, precomputed.
    pub fn permutation(&self, grid: &GridSpec) -> Result<Vec<Option<usize>>> {
        let m = self.index_sum(grid)?;
        Ok((0..grid.len()).map(|i| reflect_with(grid, self.axis, m, i)).collect())
    }

    /// The open halfspace H_{i,λ} = {x_i > λ}.
    pub fn halfspace(&self, grid: &GridSpec) -> RegionMask {
        halfspace_mask(grid, self.axis, self.level)
    }
}

fn reflect_with(grid: &GridSpec, axis: usize, m: i64, flat: usize) -> Option<usize> {
    let stride: usize = grid.extents()[axis + 1..].iter().product();
    let j = (flat / stride) % grid.extents()[axis];
    let jr = m - j as i64;
    if jr < 0 || jr >= grid.extents()[axis] as i64 {
        return None;
    }
    Some(flat - j * stride + jr as usize * stride)
}

/// Reflects an arbitrary point.
pub fn reflect(x: &[f64], r: &Reflection) -> Vec<f64> {
    r.reflect_point(x)
}

/// Cells whose center satisfies x_axis > level.
pub fn halfspace_mask(grid: &GridSpec, axis: usize, level: f64) -> RegionMask {
    RegionMask::from_cells_unchecked(
        grid.clone(),
        (0..grid.len()).map(|i| grid.coord(i, axis) > level).collect(),
    )
}

/// U ∪ r₁(U) ∪ r₂(U) ∪ r₁(r₂(U)); images leaving the grid are dropped.
pub fn symmetrized_set(u: &RegionMask, r1: &Reflection, r2: &Reflection) -> Result<RegionMask> {
    let a = u.reflected(r1)?;
    let b = u.reflected(r2)?;
    let c = b.reflected(r1)?;
    u.union(&a)?.union(&b)?.union(&c)
}

/// Boolean indicator of a subset of grid cells.
#[derive(Clone, Debug, PartialEq)]
pub struct RegionMask {
    grid: GridSpec,
    cells: Vec<bool>,
}

impl RegionMask {
    pub fn empty(grid: &GridSpec) -> Self {
        Self::from_cells_unchecked(grid.clone(), vec![false; grid.len()])
    }

    pub fn full(grid: &GridSpec) -> Self {
        Self::from_cells_unchecked(grid.clone(), vec![true; grid.len()])
    }

    pub fn from_cells(grid: &GridSpec, cells: Vec<bool>) -> Result<Self> {
        if cells.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} mask entries for a grid of {} cells",
                cells.len(),
                grid.len()
            )));
        }
        Ok(Self::from_cells_unchecked(grid.clone(), cells))
    }

    fn from_cells_unchecked(grid: GridSpec, cells: Vec<bool>) -> Self {
        Self { grid, cells }
    }

    /// Cells whose center satisfies `pred`.
    pub fn from_fn(grid: &GridSpec, mut pred: impl FnMut(&[f64]) -> bool) -> Self {
        let mut x = vec![0.0; grid.dim()];
        let cells = (0..grid.len())
            .map(|i| {
                grid.center_into(i, &mut x);
                pred(&x)
            })
            .collect();
        Self::from_cells_unchecked(grid.clone(), cells)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn cells(&self) -> &[bool] {
        &self.cells
    }

    pub fn contains(&self, flat: usize) -> bool {
        self.cells[flat]
    }

    pub fn count(&self) -> usize {
        self.cells.iter().filter(|&&b| b).count()
    }

    /// Lebesgue measure of the union of cells.
    pub fn measure(&self) -> f64 {
        self.count() as f64 * self.grid.cell_volume()
    }

    pub fn is_empty(&self) -> bool {
        !self.cells.iter().any(|&b| b)
    }

    /// Flat indices of member cells, ascending.
    pub fn indices(&self) -> Vec<usize> {
        self.cells
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| b.then_some(i))
            .collect()
    }

    fn zip_with(&self, other: &RegionMask, f: impl Fn(bool, bool) -> bool) -> Result<RegionMask> {
        self.grid.ensure_same(&other.grid)?;
        Ok(Self::from_cells_unchecked(
            self.grid.clone(),
            self.cells.iter().zip(&other.cells).map(|(&a, &b)| f(a, b)).collect(),
        ))
    }

    pub fn union(&self, other: &RegionMask) -> Result<RegionMask> {
        self.zip_with(other, |a, b| a || b)
    }

    pub fn intersection(&self, other: &RegionMask) -> Result<RegionMask> {
        self.zip_with(other, |a, b| a && b)
    }

    pub fn difference(&self, other: &RegionMask) -> Result<RegionMask> {
        self.zip_with(other, |a, b| a && !b)
    }

    pub fn complement(&self) -> RegionMask {
        Self::from_cells_unchecked(self.grid.clone(), self.cells.iter().map(|b| !b).collect())
    }

    pub fn is_subset_of(&self, other: &RegionMask) -> bool {
        self.grid == other.grid && self.cells.iter().zip(&other.cells).all(|(&a, &b)| !a || b)
    }

    /// r(U); cells mapped outside the grid are dropped.
    pub fn reflected(&self, r: &Reflection) -> Result<RegionMask> {
        let perm = r.permutation(&self.grid)?;
        let mut cells = vec![false; self.cells.len()];
        for (i, &inside) in self.cells.iter().enumerate() {
            if inside {
                if let Some(j) = perm[i] {
                    cells[j] = true;
                }
            }
        }
        Ok(Self::from_cells_unchecked(self.grid.clone(), cells))
    }

    /// True when every member has its mirror image in the mask.
    pub fn is_invariant_under(&self, r: &Reflection) -> Result<bool> {
        let perm = r.permutation(&self.grid)?;
        Ok(self
            .cells
            .iter()
            .zip(&perm)
            .all(|(&inside, image)| !inside || image.is_some_and(|j| self.cells[j])))
    }

    /// Writes `x1,...,xN,mask` rows for every grid cell, row-major.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let dim = self.grid.dim();
        let header: Vec<String> = (1..=dim).map(|a| format!("x{a}")).collect();
        writeln!(out, "{},mask", header.join(","))?;
        let mut x = vec![0.0; dim];
        for (i, &inside) in self.cells.iter().enumerate() {
            self.grid.center_into(i, &mut x);
            for v in &x {
                write!(out, "{v:?},")?;
            }
            writeln!(out, "{}", u8::from(inside))?;
        }
        Ok(())
    }

    /// Reads the format produced by [`RegionMask::write_csv`]. Rows may come in
    /// any order; cells without a row are outside the mask.
    pub fn read_csv<R: BufRead>(grid: &GridSpec, input: R) -> Result<Self> {
        let dim = grid.dim();
        let mut cells = vec![false; grid.len()];
        let mut lines = input.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Format("empty mask file".into()))??;
        if header.split(',').count() != dim + 1 {
            return Err(Error::Format(format!("mask header `{header}` does not match dim {dim}")));
        }
        for (lineno, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split(',').collect();
            if parts.len() != dim + 1 {
                return Err(Error::Format(format!("line {}: expected {} columns", lineno + 2, dim + 1)));
            }
            let x: Vec<f64> = parts[..dim]
                .iter()
                .map(|p| p.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Format(format!("line {}: {e}", lineno + 2)))?;
            let cell = grid
                .locate(&x)
                .ok_or_else(|| Error::Format(format!("line {}: {x:?} is not a cell center", lineno + 2)))?;
            cells[cell] = match parts[dim].trim() {
                "0" => false,
                "1" => true,
                other => return Err(Error::Format(format!("line {}: mask value `{other}`", lineno + 2))),
            };
        }
        Ok(Self::from_cells_unchecked(grid.clone(), cells))
    }
}

/// Continuum shapes, all centered at the origin.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "label", rename_all = "lowercase")]
pub enum Shape {
    Ball { radius: f64 },
    Ellipse { semi_axes: Vec<f64> },
    Rectangle { half_widths: Vec<f64> },
    /// Points within `radius` of the segment |x₁| ≤ half_length on the x₁ axis.
    Stadium { half_length: f64, radius: f64 },
    /// Arbitrary mask supplied by the caller.
    Custom,
}

impl Shape {
    pub fn label(&self) -> &'static str {
        match self {
            Shape::Ball { .. } => "ball",
            Shape::Ellipse { .. } => "ellipse",
            Shape::Rectangle { .. } => "rectangle",
            Shape::Stadium { .. } => "stadium",
            Shape::Custom => "custom",
        }
    }

    fn validate(&self, dim: usize) -> Result<()> {
        let positive = |name: &'static str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(invalid(name, format!("must be positive, got {v}")))
            }
        };
        match self {
            Shape::Ball { radius } => positive("radius", *radius),
            Shape::Ellipse { semi_axes: v } | Shape::Rectangle { half_widths: v } => {
                let name = if matches!(self, Shape::Ellipse { .. }) {
                    "semi_axes"
                } else {
                    "half_widths"
                };
                if v.len() != dim {
                    return Err(invalid(name, format!("need {dim} entries, got {}", v.len())));
                }
                v.iter().try_for_each(|&a| positive(name, a))
            }
            Shape::Stadium { half_length, radius } => {
                positive("radius", *radius)?;
                if !(half_length.is_finite() && *half_length >= 0.0) {
                    return Err(invalid("half_length", format!("must be >= 0, got {half_length}")));
                }
                Ok(())
            }
            Shape::Custom => Err(invalid("shape", "custom domains are built from a mask")),
        }
    }

    /// Membership of the open set.
    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            Shape::Ball { radius } => norm(x) < *radius,
            Shape::Ellipse { semi_axes } => {
                x.iter().zip(semi_axes).map(|(xi, a)| (xi / a).powi(2)).sum::<f64>() < 1.0
            }
            Shape::Rectangle { half_widths } => x.iter().zip(half_widths).all(|(xi, a)| xi.abs() < *a),
            Shape::Stadium { half_length, radius } => stadium_gap(x, *half_length) < *radius,
            Shape::Custom => false,
        }
    }

    /// Euclidean distance to the boundary for points inside, when available in
    /// closed form.
    pub fn boundary_distance(&self, x: &[f64]) -> Option<f64> {
        match self {
            Shape::Ball { radius } => Some(radius - norm(x)),
            Shape::Rectangle { half_widths } => Some(
                x.iter()
                    .zip(half_widths)
                    .map(|(xi, a)| a - xi.abs())
                    .fold(f64::INFINITY, f64::min),
            ),
            Shape::Stadium { half_length, radius } => Some(radius - stadium_gap(x, *half_length)),
            Shape::Ellipse { .. } | Shape::Custom => None,
        }
    }
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn stadium_gap(x: &[f64], half_length: f64) -> f64 {
    let d1 = (x[0].abs() - half_length).max(0.0);
    (d1 * d1 + x[1..].iter().map(|v| v * v).sum::<f64>()).sqrt()
}

/// A region satisfying the discrete form of condition (D).
#[derive(Clone, Debug, PartialEq)]
pub struct Domain {
    shape: Shape,
    mask: RegionMask,
}

impl Domain {
    /// Wraps an arbitrary mask after verifying condition (D).
    pub fn custom(mask: RegionMask) -> Result<Self> {
        validate_domain_mask(&mask)?;
        Ok(Self {
            shape: Shape::Custom,
            mask,
        })
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn label(&self) -> &'static str {
        self.shape.label()
    }

    pub fn mask(&self) -> &RegionMask {
        &self.mask
    }

    pub fn grid(&self) -> &GridSpec {
        self.mask.grid()
    }

    /// Distance from the center of `cell` to the boundary: the closed form when
    /// the shape has one, otherwise the lattice estimate of
    /// [`Domain::lattice_boundary_distance`].
    pub fn boundary_distance(&self, cell: usize) -> f64 {
        let x = self.grid().center(cell);
        self.shape
            .boundary_distance(&x)
            .unwrap_or_else(|| self.lattice_boundary_distance()[cell])
    }

    /// Per-cell distance to the nearest exterior cell center minus h/2
    /// (0 outside the mask).
    pub fn lattice_boundary_distance(&self) -> Vec<f64> {
        lattice_boundary_distance(&self.mask)
    }
}

/// Per-cell distance from member centers to the nearest non-member center,
/// minus h/2; 0 for non-members. Cells beyond the grid count as non-members.
pub fn lattice_boundary_distance(mask: &RegionMask) -> Vec<f64> {
    let grid = mask.grid();
    let dim = grid.dim();
    let h = grid.h();
    let strides = grid.strides();
    let mut idx = vec![0usize; dim];
    // Nearest exterior cells are always face-adjacent to a member, so only that
    // layer is searched. Virtual cells just past the grid edge are included.
    let mut layer: Vec<Vec<f64>> = Vec::new();
    for i in 0..grid.len() {
        grid.unflatten_into(i, &mut idx);
        let x = grid.center(i);
        if !mask.contains(i) {
            let touches = (0..dim).any(|a| {
                (idx[a] > 0 && mask.contains(i - strides[a]))
                    || (idx[a] + 1 < grid.extents()[a] && mask.contains(i + strides[a]))
            });
            if touches {
                layer.push(x);
            }
        } else {
            for a in 0..dim {
                for (edge, step) in [(0usize, -1.0), (grid.extents()[a] - 1, 1.0)] {
                    if idx[a] == edge {
                        let mut y = x.clone();
                        y[a] += step * h;
                        layer.push(y);
                    }
                }
            }
        }
    }
    let mut x = vec![0.0; dim];
    (0..grid.len())
        .map(|i| {
            if !mask.contains(i) {
                return 0.0;
            }
            grid.center_into(i, &mut x);
            let d2 = layer
                .iter()
                .map(|y| y.iter().zip(&x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>())
                .fold(f64::INFINITY, f64::min);
            d2.sqrt() - 0.5 * h
        })
        .collect()
}

/// Builds the indicator of `shape` on `grid`.
pub fn build_domain(shape: &Shape, grid: &GridSpec) -> Result<Domain> {
    shape.validate(grid.dim())?;
    let mask = RegionMask::from_fn(grid, |x| shape.contains(x));
    validate_domain_mask(&mask)?;
    Ok(Domain {
        shape: shape.clone(),
        mask,
    })
}

fn validate_domain_mask(mask: &RegionMask) -> Result<()> {
    let grid = mask.grid();
    let dim = grid.dim();
    for axis in [0, dim - 1] {
        let across = max_run(mask, axis);
        if across < 4 {
            return Err(Error::GridTooCoarse(format!(
                "only {across} cells across along axis {axis}; need at least 4"
            )));
        }
    }
    let report = check_condition_d(mask);
    if !report.boundary_violations.is_empty() {
        return Err(Error::ConditionD(format!(
            "{} cells touch the grid edge; the domain needs an exterior layer",
            report.boundary_violations.len()
        )));
    }
    if !report.symmetry_violations.is_empty() {
        return Err(Error::ConditionD(format!(
            "{} cells lack their mirror image (first: cell {})",
            report.symmetry_violations.len(),
            report.symmetry_violations[0]
        )));
    }
    if !report.convexity_violations.is_empty() {
        return Err(Error::ConditionD(format!(
            "{} cells break convexity along the symmetry axes (first: cell {})",
            report.convexity_violations.len(),
            report.convexity_violations[0]
        )));
    }
    Ok(())
}

fn max_run(mask: &RegionMask, axis: usize) -> usize {
    let grid = mask.grid();
    let stride = grid.strides()[axis];
    let n = grid.extents()[axis];
    (0..grid.len())
        .filter(|&i| grid.axis_index(i, axis) == 0)
        .map(|start| (0..n).filter(|&j| mask.contains(start + j * stride)).count())
        .max()
        .unwrap_or(0)
}

/// Outcome of the discrete condition (D) check.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ConditionDReport {
    /// Member cells whose mirror image under r_{1,0} or r_{N,0} is missing.
    pub symmetry_violations: Vec<usize>,
    /// Non-member cells lying between the symmetry plane and a member cell on
    /// an x₁ or x_N grid line.
    pub convexity_violations: Vec<usize>,
    /// Member cells on the outermost grid layer.
    pub boundary_violations: Vec<usize>,
}

impl ConditionDReport {
    pub fn holds(&self) -> bool {
        self.symmetry_violations.is_empty()
            && self.convexity_violations.is_empty()
            && self.boundary_violations.is_empty()
    }
}

/// Checks symmetry and axis convexity of a mask on a centered grid.
pub fn check_condition_d(mask: &RegionMask) -> ConditionDReport {
    let grid = mask.grid();
    let dim = grid.dim();
    let mut report = ConditionDReport::default();
    let mut axes = vec![0];
    if dim > 1 {
        axes.push(dim - 1);
    }

    let mut bad = vec![false; grid.len()];
    for &axis in &axes {
        // Reflections through the grid's own center are always lattice aligned.
        let center = grid.origin()[axis] + (grid.extents()[axis] - 1) as f64 * grid.h() / 2.0;
        let perm = Reflection::new(axis, center)
            .permutation(grid)
            .expect("center reflection is lattice aligned");
        for i in 0..grid.len() {
            if mask.contains(i) && !perm[i].is_some_and(|j| mask.contains(j)) {
                bad[i] = true;
            }
        }
    }
    report.symmetry_violations = (0..grid.len()).filter(|&i| bad[i]).collect();

    let mut gap = vec![false; grid.len()];
    for &axis in &axes {
        let stride = grid.strides()[axis];
        let n = grid.extents()[axis];
        let mid = (n - 1) as f64 / 2.0;
        for start in (0..grid.len()).filter(|&i| grid.axis_index(i, axis) == 0) {
            let reach = (0..n)
                .filter(|&j| mask.contains(start + j * stride))
                .map(|j| (j as f64 - mid).abs())
                .fold(-1.0, f64::max);
            for j in 0..n {
                let cell = start + j * stride;
                if (j as f64 - mid).abs() <= reach && !mask.contains(cell) {
                    gap[cell] = true;
                }
            }
        }
    }
    report.convexity_violations = (0..grid.len()).filter(|&i| gap[i]).collect();

    let mut idx = vec![0; dim];
    report.boundary_violations = (0..grid.len())
        .filter(|&i| {
            mask.contains(i) && {
                grid.unflatten_into(i, &mut idx);
                (0..dim).any(|a| idx[a] == 0 || idx[a] + 1 == grid.extents()[a])
            }
        })
        .collect();
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid2(n: usize, h: f64) -> GridSpec {
        GridSpec::centered(h, &[n, n]).unwrap()
    }

    #[test]
    fn centered_grid_avoids_symmetry_planes() {
        let g = grid2(8, 0.25);
        for i in 0..g.len() {
            let x = g.center(i);
            assert!(x[0].abs() > 0.1 && x[1].abs() > 0.1);
        }
        assert_eq!(g.center(0), vec![-0.875, -0.875]);
        assert!(GridSpec::centered(0.1, &[7, 8]).is_err());
        assert!(GridSpec::centered(0.0, &[8, 8]).is_err());
        assert!(GridSpec::centered(0.1, &[8, 1, 8]).is_err());
    }

    #[test]
    fn flat_index_roundtrip() {
        let g = GridSpec::centered(0.5, &[4, 3, 6]).unwrap();
        for i in 0..g.len() {
            assert_eq!(g.flat(&g.unflatten(i)), i);
            assert_eq!(g.locate(&g.center(i)), Some(i));
        }
        assert_eq!(g.locate(&[0.1, 0.0, 0.0]), None);
    }

    #[test]
    fn reflect_points() {
        let r = Reflection::through_origin(0);
        assert_eq!(reflect(&[0.3, 0.5], &r), vec![-0.3, 0.5]);
        let r = Reflection::new(1, 1.0);
        let y = reflect(&[0.2, 0.7], &r);
        assert!((y[1] - 1.3).abs() < 1e-15 && y[0] == 0.2);
    }

    #[test]
    fn reflect_cell_involution_and_isometry() {
        let g = grid2(10, 0.1);
        for r in [
            Reflection::through_origin(0),
            Reflection::through_origin(1),
            Reflection::new(0, 0.15),
            Reflection::new(1, -0.2),
        ] {
            let perm = r.permutation(&g).unwrap();
            for i in 0..g.len() {
                if let Some(j) = perm[i] {
                    assert_eq!(perm[j], Some(i));
                    let (xi, xj) = (g.center(i), g.center(j));
                    assert!((xj[r.axis()] - (2.0 * r.level() - xi[r.axis()])).abs() < 1e-12);
                }
            }
        }
        assert!(matches!(
            Reflection::new(0, 0.03).reflect_cell(&g, 0),
            Err(Error::OffLattice { .. })
        ));
    }

    #[test]
    fn halfspace_partitions_grid() {
        let g = grid2(8, 0.25);
        let r = Reflection::through_origin(0);
        let h = halfspace_mask(&g, 0, 0.0);
        assert_eq!(h.count(), g.len() / 2);
        let mirror = h.reflected(&r).unwrap();
        assert!(h.intersection(&mirror).unwrap().is_empty());
        assert_eq!(h.union(&mirror).unwrap().count(), g.len());

        let r = Reflection::new(0, 0.25);
        let h = r.halfspace(&g);
        let mirror = h.reflected(&r).unwrap();
        assert!(h.intersection(&mirror).unwrap().is_empty());
    }

    #[test]
    fn symmetrized_singleton_has_four_cells() {
        let g = grid2(10, 0.1);
        let (r1, r2) = (Reflection::through_origin(0), Reflection::through_origin(1));
        let mut u = RegionMask::empty(&g);
        u.cells[g.flat(&[7, 8])] = true;
        u.cells[g.flat(&[6, 9])] = true;
        let s = symmetrized_set(&u, &r1, &r2).unwrap();
        assert_eq!(s.count(), 8);
        assert_eq!(symmetrized_set(&s, &r1, &r2).unwrap(), s);
    }

    #[test]
    fn ball_domain_matches_indicator() {
        let g = grid2(20, 0.125);
        let d = build_domain(&Shape::Ball { radius: 1.0 }, &g).unwrap();
        for i in 0..g.len() {
            let x = g.center(i);
            assert_eq!(d.mask().contains(i), x[0].hypot(x[1]) < 1.0);
        }
        assert!(check_condition_d(d.mask()).holds());
    }

    #[test]
    fn builtin_shapes_satisfy_condition_d() {
        let g = GridSpec::centered(0.05, &[60, 40]).unwrap();
        for shape in [
            Shape::Ellipse { semi_axes: vec![1.2, 0.7] },
            Shape::Rectangle { half_widths: vec![1.0, 0.5] },
            Shape::Stadium { half_length: 0.6, radius: 0.5 },
        ] {
            let d = build_domain(&shape, &g).unwrap();
            assert!(check_condition_d(d.mask()).holds(), "{shape:?}");
            assert!(d.mask().is_invariant_under(&Reflection::through_origin(0)).unwrap());
            assert!(d.mask().is_invariant_under(&Reflection::through_origin(1)).unwrap());
        }
    }

    #[test]
    fn shifted_ball_and_annulus_are_rejected() {
        let g = grid2(24, 0.1);
        let shifted = RegionMask::from_fn(&g, |x| (x[0] - 0.1).hypot(x[1]) < 0.8);
        let report = check_condition_d(&shifted);
        assert!(!report.symmetry_violations.is_empty());
        assert!(matches!(Domain::custom(shifted), Err(Error::ConditionD(_))));

        let annulus = RegionMask::from_fn(&g, |x| {
            let r = x[0].hypot(x[1]);
            r > 0.4 && r < 1.0
        });
        let report = check_condition_d(&annulus);
        assert!(report.symmetry_violations.is_empty());
        assert!(!report.convexity_violations.is_empty());
    }

    #[test]
    fn coarse_and_oversized_shapes_are_rejected() {
        let g = grid2(8, 0.5);
        assert!(matches!(
            build_domain(&Shape::Ball { radius: 0.6 }, &g),
            Err(Error::GridTooCoarse(_))
        ));
        let g = grid2(8, 0.25);
        assert!(matches!(
            build_domain(&Shape::Ball { radius: 5.0 }, &g),
            Err(Error::ConditionD(_))
        ));
        assert!(build_domain(&Shape::Ball { radius: -1.0 }, &g).is_err());
    }

    #[test]
    fn mask_csv_roundtrip() {
        let g = grid2(8, 0.25);
        let d = build_domain(&Shape::Ball { radius: 0.8 }, &g).unwrap();
        let mut buf = Vec::new();
        d.mask().write_csv(&mut buf).unwrap();
        assert!(buf.starts_with(b"x1,x2,mask\n"));
        let back = RegionMask::read_csv(&g, buf.as_slice()).unwrap();
        assert_eq!(&back, d.mask());
    }

    #[test]
    fn lattice_distance_tracks_ball_distance() {
        let g = grid2(64, 1.0 / 28.0);
        let d = build_domain(&Shape::Ball { radius: 1.0 }, &g).unwrap();
        let lat = d.lattice_boundary_distance();
        for i in d.mask().indices() {
            let exact = d.shape().boundary_distance(&g.center(i)).unwrap();
            assert!((lat[i] - exact).abs() < 0.75 * g.h(), "{} vs {}", lat[i], exact);
        }
    }
}
