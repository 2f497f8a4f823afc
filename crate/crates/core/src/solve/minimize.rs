use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::cg::conjugate_gradient;
use super::sector::{dot, norm, Sector, SectorOperator};
use super::{sign_normalize, InitialGuess, MinimizerResult, SolverOptions};
use crate::error::{invalid, Error, Result};
use crate::geometry::{Reflection, RegionMask};
use crate::operator::NonlocalOperator;

/// Largest admissible exponent: 2N/(N − 2s) when 2s < N, otherwise none.
pub fn critical_exponent(dim: usize, s: f64) -> f64 {
    let n = dim as f64;
    if 2.0 * s < n {
        2.0 * n / (n - 2.0 * s)
    } else {
        f64::INFINITY
    }
}

/// Minimizes energy(u, u) over ‖u‖_p = 1 with u supported in `mask` and, if
/// `r` is given, u∘r = −u.
///
/// Each step moves along the energy-metric gradient d = λL⁻¹(|u|^{p−2}u) − u,
/// backtracks until sufficient decrease of the p-normalized energy, then
/// renormalizes. For p = 2 and unit step this is inverse iteration.
pub fn p_minimize(
    op: &NonlocalOperator,
    p: f64,
    r: Option<Reflection>,
    mask: &RegionMask,
    opts: &SolverOptions,
) -> Result<MinimizerResult> {
    opts.validate()?;
    op.grid().ensure_same(mask.grid())?;
    let params = op.params();
    let critical = critical_exponent(params.dim(), params.s());
    if !(p > 1.0 && p < critical) {
        return Err(Error::Supercritical { p, critical });
    }
    if mask.is_empty() {
        return Err(invalid("mask", "minimization on an empty mask"));
    }
    let sector = match r {
        Some(r) => Sector::odd(mask, &[r])?,
        None => Sector::dirichlet(mask),
    };
    let grid = op.grid();
    let n = grid.len();
    let hn = grid.cell_volume();
    let a = SectorOperator { op, sector: &sector, shift: 0.0 };

    let mut u: Vec<f64> = match opts.initial_guess {
        InitialGuess::Default => (0..n)
            .map(|i| match r {
                Some(r) => grid.coord(i, r.axis()) - r.level(),
                None => 1.0,
            })
            .collect(),
        InitialGuess::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
        }
    };
    sector.project(&mut u);
    p_normalize(&mut u, p, hn)?;

    let mut au = vec![0.0; n];
    a.apply(&u, &mut au);
    let mut lambda = hn * dot(&au, &u);
    let mut history = vec![lambda];
    let mut g = vec![0.0; n];
    let mut res = vec![0.0; n];
    let mut y = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut trial = vec![0.0; n];
    let mut a_trial = vec![0.0; n];
    let mut residual;
    let mut iterations = 0;
    let mut stalled = false;

    loop {
        for i in 0..n {
            g[i] = power(u[i], p);
        }
        sector.project(&mut g);
        for i in 0..n {
            res[i] = au[i] - lambda * g[i];
        }
        residual = norm(&res) / (lambda * norm(&g));
        if residual <= opts.tolerance || iterations >= opts.max_iterations || stalled {
            break;
        }

        // y from the previous step is a good start since g moves little.
        conjugate_gradient(|v, w| a.apply(v, w), &g, &mut y, opts.linear_tolerance, opts.linear_max_iterations);
        sector.project(&mut y);
        for i in 0..n {
            d[i] = lambda * y[i] - u[i];
        }
        // A d = λg − Au = −res, so energy(d, d) = −h^N⟨res, d⟩.
        let edd = -hn * dot(&res, &d);
        if !(edd > 0.0) {
            stalled = true;
            continue;
        }

        let allowance = 64.0 * f64::EPSILON * lambda;
        let mut tau = opts.step.initial;
        let mut accepted = false;
        while tau >= opts.step.min_step {
            for i in 0..n {
                trial[i] = u[i] + tau * d[i];
            }
            if p_normalize(&mut trial, p, hn).is_ok() {
                a.apply(&trial, &mut a_trial);
                let e = hn * dot(&a_trial, &trial);
                if e <= lambda - opts.step.sufficient_decrease * 2.0 * tau * edd + allowance {
                    std::mem::swap(&mut u, &mut trial);
                    std::mem::swap(&mut au, &mut a_trial);
                    lambda = e;
                    accepted = true;
                    break;
                }
            }
            tau *= opts.step.shrink;
        }
        if !accepted {
            stalled = true;
            continue;
        }
        iterations += 1;
        history.push(lambda);
    }

    sign_normalize(&mut u, grid);
    let field = sector.field(u)?;
    Ok(MinimizerResult {
        p,
        value: lambda,
        field,
        residual,
        iterations,
        energy_history: history,
        converged: residual <= opts.tolerance,
    })
}

fn power(u: f64, p: f64) -> f64 {
    if u == 0.0 {
        0.0
    } else {
        u.abs().powf(p - 2.0) * u
    }
}

fn p_normalize(u: &mut [f64], p: f64, hn: f64) -> Result<()> {
    let norm = (hn * u.iter().map(|v| v.abs().powf(p)).sum::<f64>()).powf(1.0 / p);
    if !(norm > 0.0 && norm.is_finite()) {
        return Err(Error::Collapse);
    }
    u.iter_mut().for_each(|v| *v /= norm);
    Ok(())
}
