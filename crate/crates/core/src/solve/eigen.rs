use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::cg::conjugate_gradient;
use super::sector::{dot, norm, Sector, SectorOperator};
use super::{sign_normalize, SolverOptions, SpectralResult};
use crate::error::{invalid, Result};
use crate::geometry::{Reflection, RegionMask};
use crate::operator::NonlocalOperator;

/// Smallest `count` eigenpairs on the sector, by shifted inverse iteration
/// with deflation against the pairs already found.
pub fn sector_eig(op: &NonlocalOperator, sector: &Sector, count: usize, opts: &SolverOptions) -> Result<SpectralResult> {
    opts.validate()?;
    op.grid().ensure_same(sector.mask().grid())?;
    if sector.mask().is_empty() {
        return Err(invalid("mask", "eigenproblem on an empty mask"));
    }
    if count == 0 {
        return Err(invalid("count", "need at least one eigenpair"));
    }
    let n = op.grid().len();
    let shifted = SectorOperator {
        op,
        sector,
        shift: opts.shift,
    };
    let plain = SectorOperator { op, sector, shift: 0.0 };
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut found: Vec<Vec<f64>> = Vec::new();
    let mut result = SpectralResult {
        eigenvalues: Vec::new(),
        eigenfields: Vec::new(),
        residuals: Vec::new(),
        iterations: Vec::new(),
        converged: true,
    };

    for _ in 0..count {
        let mut x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        sector.project(&mut x);
        deflate(&mut x, &found);
        let nx = norm(&x);
        if nx == 0.0 {
            return Err(invalid("count", "sector has fewer degrees of freedom than requested eigenpairs"));
        }
        x.iter_mut().for_each(|v| *v /= nx);

        let mut ax = vec![0.0; n];
        plain.apply(&x, &mut ax);
        let mut lambda = dot(&ax, &x);
        let mut y = vec![0.0; n];
        let mut residual = f64::INFINITY;
        let mut iterations = 0;
        while iterations < opts.max_iterations {
            iterations += 1;
            // Warm start: for an eigenvector, (L − σ)^{-1}x = x / (λ − σ).
            let denom = lambda - opts.shift;
            for i in 0..n {
                y[i] = if denom.abs() > 0.0 { x[i] / denom } else { x[i] };
            }
            conjugate_gradient(
                |a, b| shifted.apply(a, b),
                &x,
                &mut y,
                opts.linear_tolerance,
                opts.linear_max_iterations,
            );
            sector.project(&mut y);
            deflate(&mut y, &found);
            let ny = norm(&y);
            if ny == 0.0 || !ny.is_finite() {
                return Err(crate::Error::Collapse);
            }
            y.iter_mut().for_each(|v| *v /= ny);
            plain.apply(&y, &mut ax);
            lambda = dot(&ax, &y);
            residual = ax
                .iter()
                .zip(&y)
                .map(|(a, v)| (a - lambda * v) * (a - lambda * v))
                .sum::<f64>()
                .sqrt()
                / lambda.abs();
            std::mem::swap(&mut x, &mut y);
            if residual <= opts.tolerance {
                break;
            }
        }
        if residual > opts.tolerance {
            result.converged = false;
        }
        sign_normalize(&mut x, op.grid());
        found.push(x.clone());
        let scale = op.grid().cell_volume().sqrt();
        let field = sector.field(x.iter().map(|v| v / scale).collect())?;
        result.eigenvalues.push(lambda);
        result.eigenfields.push(field);
        result.residuals.push(residual);
        result.iterations.push(iterations);
    }
    Ok(result)
}

/// Two passes of Gram–Schmidt against the unit vectors in `basis`.
fn deflate(x: &mut [f64], basis: &[Vec<f64>]) {
    for _ in 0..2 {
        for b in basis {
            let c = dot(x, b);
            for (xi, bi) in x.iter_mut().zip(b) {
                *xi -= c * bi;
            }
        }
    }
}

/// Smallest `count` Dirichlet eigenpairs on `mask`.
pub fn dirichlet_eig(op: &NonlocalOperator, mask: &RegionMask, count: usize, opts: &SolverOptions) -> Result<SpectralResult> {
    sector_eig(op, &Sector::dirichlet(mask), count, opts)
}

/// First eigenpair among fields on `mask` that are odd under `r`.
pub fn antisym_eig(op: &NonlocalOperator, r: &Reflection, mask: &RegionMask, opts: &SolverOptions) -> Result<SpectralResult> {
    sector_eig(op, &Sector::odd(mask, &[*r])?, 1, opts)
}

/// λ₁⁻(U): the first eigenvalue over r₁-odd fields supported in U ∪ r₁(U).
pub fn lambda1_minus(op: &NonlocalOperator, region: &RegionMask, r1: &Reflection, opts: &SolverOptions) -> Result<SpectralResult> {
    let doubled = region.union(&region.reflected(r1)?)?;
    antisym_eig(op, r1, &doubled, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_domain, GridSpec, Shape};
    use crate::kernel::KernelParams;
    use nalgebra::DMatrix;

    fn small_problem() -> (NonlocalOperator, RegionMask) {
        let g = GridSpec::cube(2, 0.16, 16).unwrap();
        let op = NonlocalOperator::build(&g, &KernelParams::new(2, 0.5).unwrap()).unwrap();
        let d = build_domain(&Shape::Ball { radius: 1.0 }, &g).unwrap();
        (op, d.mask().clone())
    }

    fn dense_eigenvalues(op: &NonlocalOperator, mask: &RegionMask) -> Vec<f64> {
        let cells = mask.indices();
        let m = DMatrix::from_fn(cells.len(), cells.len(), |a, b| op.entry(cells[a], cells[b]));
        let mut ev: Vec<f64> = m.symmetric_eigen().eigenvalues.iter().copied().collect();
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
        ev
    }

    #[test]
    fn matches_dense_spectrum() {
        let (op, mask) = small_problem();
        let dense = dense_eigenvalues(&op, &mask);
        let res = dirichlet_eig(&op, &mask, 3, &SolverOptions::default()).unwrap();
        assert!(res.converged);
        for k in 0..3 {
            assert!((res.eigenvalues[k] / dense[k] - 1.0).abs() < 1e-10, "{k}: {} vs {}", res.eigenvalues[k], dense[k]);
        }
        let (u0, u1) = (&res.eigenfields[0], &res.eigenfields[1]);
        assert!((u0.norm_l2() - 1.0).abs() < 1e-12);
        assert!(u0.dot(u1).unwrap().abs() < 1e-8);
        assert!(mask.indices().iter().all(|&i| u0.value(i) > 0.0));
    }

    #[test]
    fn antisymmetric_value_is_a_dense_eigenvalue() {
        let (op, mask) = small_problem();
        let dense = dense_eigenvalues(&op, &mask);
        let r = Reflection::through_origin(1);
        let res = antisym_eig(&op, &r, &mask, &SolverOptions::default()).unwrap();
        let lam = res.eigenvalues[0];
        assert!((lam / dense[1] - 1.0).abs() < 1e-10);
        let u = &res.eigenfields[0];
        let g = op.grid();
        for i in mask.indices() {
            if g.coord(i, 1) > 0.0 {
                assert!(u.value(i) > 0.0);
            }
        }
    }

    #[test]
    fn runs_are_reproducible() {
        let (op, mask) = small_problem();
        let opts = SolverOptions { seed: 5, ..SolverOptions::default() };
        let a = dirichlet_eig(&op, &mask, 2, &opts).unwrap();
        let b = dirichlet_eig(&op, &mask, 2, &opts).unwrap();
        assert_eq!(a.eigenvalues, b.eigenvalues);
        assert_eq!(a.eigenfields[1].values(), b.eigenfields[1].values());
    }

    #[test]
    fn reports_non_convergence() {
        let (op, mask) = small_problem();
        let opts = SolverOptions {
            max_iterations: 1,
            ..SolverOptions::default()
        };
        let res = dirichlet_eig(&op, &mask, 1, &opts).unwrap();
        assert!(!res.converged);
    }
}
