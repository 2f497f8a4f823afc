use super::sector::{dot, norm};

pub(crate) struct CgOutcome {
    pub iterations: usize,
    /// ‖b − Ax‖ / ‖b‖ recomputed from scratch at exit.
    pub relative_residual: f64,
    pub converged: bool,
}

/// Conjugate gradients for a symmetric positive definite `apply`, starting
/// from the contents of `x`.
pub(crate) fn conjugate_gradient(
    apply: impl Fn(&[f64], &mut [f64]),
    b: &[f64],
    x: &mut [f64],
    tol: f64,
    max_iter: usize,
) -> CgOutcome {
    let n = b.len();
    let bnorm = norm(b);
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return CgOutcome {
            iterations: 0,
            relative_residual: 0.0,
            converged: true,
        };
    }
    let mut ax = vec![0.0; n];
    apply(x, &mut ax);
    let mut r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
    let mut p = r.clone();
    let mut rr = dot(&r, &r);
    let mut ap = vec![0.0; n];
    let mut iterations = 0;
    while rr.sqrt() > tol * bnorm && iterations < max_iter {
        apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            break;
        }
        let alpha = rr / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rr_new = dot(&r, &r);
        let beta = rr_new / rr;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
        rr = rr_new;
        iterations += 1;
        // Refresh the recursive residual now and then to limit drift.
        if iterations % 50 == 0 {
            apply(x, &mut ax);
            for i in 0..n {
                r[i] = b[i] - ax[i];
            }
            rr = dot(&r, &r);
        }
    }
    apply(x, &mut ax);
    let true_res = b.iter().zip(&ax).map(|(bi, ai)| (bi - ai) * (bi - ai)).sum::<f64>().sqrt() / bnorm;
    CgOutcome {
        iterations,
        relative_residual: true_res,
        converged: rr.sqrt() <= tol * bnorm,
    }
}
