use super::cg::conjugate_gradient;
use super::sector::{Sector, SectorOperator};
use super::{LinearSolveResult, SolverOptions};
use crate::error::{invalid, Error, Result};
use crate::geometry::RegionMask;
use crate::operator::{Field, NonlocalOperator};

/// Solves L u = rhs on `mask` with u = 0 outside, by conjugate gradients.
/// Values of `rhs` outside the mask are ignored.
pub fn linear_solve(op: &NonlocalOperator, rhs: &Field, mask: &RegionMask, opts: &SolverOptions) -> Result<LinearSolveResult> {
    opts.validate()?;
    op.grid().ensure_same(mask.grid())?;
    op.grid().ensure_same(rhs.grid())?;
    if mask.is_empty() {
        return Err(invalid("mask", "linear solve on an empty mask"));
    }
    let sector = Sector::dirichlet(mask);
    let a = SectorOperator { op, sector: &sector, shift: 0.0 };
    let mut b = rhs.values().to_vec();
    sector.project(&mut b);
    let mut x = vec![0.0; b.len()];
    let out = conjugate_gradient(|v, w| a.apply(v, w), &b, &mut x, opts.linear_tolerance, opts.linear_max_iterations);
    if !out.converged {
        return Err(Error::NotConverged {
            what: "conjugate gradient",
            iterations: out.iterations,
            residual: out.relative_residual,
        });
    }
    Ok(LinearSolveResult {
        field: Field::from_values(mask, x)?,
        residual: out.relative_residual,
        iterations: out.iterations,
    })
}

/// ψ_B with L ψ = 1 on B and ψ = 0 outside.
pub fn torsion(op: &NonlocalOperator, mask: &RegionMask, opts: &SolverOptions) -> Result<Field> {
    let one = Field::from_fn(mask, |_| 1.0)?;
    Ok(linear_solve(op, &one, mask, opts)?.field)
}
