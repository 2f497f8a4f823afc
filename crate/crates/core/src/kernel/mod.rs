//! The kernel c_{N,s}|z|^{−N−2s}: normalization, lattice weights, reflection
//! differences and the four-point inequality.

mod cache;
pub(crate) mod quadrature;
mod table;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{invalid, Error, Result};
use crate::geometry::Reflection;

pub use cache::{cache_file_name, CacheStatus};
pub use table::WeightTable;

/// c_{N,s} = s·4^s·Γ(N/2+s) / (π^{N/2}·Γ(1−s)), the constant whose operator
/// has Fourier symbol |ξ|^{2s}.
pub fn normalization_constant(dim: usize, s: f64) -> Result<f64> {
    check_order(s)?;
    if dim == 0 {
        return Err(invalid("dim", "dimension must be >= 1"));
    }
    let n = dim as f64;
    Ok(s * 4f64.powf(s) * gamma(n / 2.0 + s) / (std::f64::consts::PI.powf(n / 2.0) * gamma(1.0 - s)))
}

/// Surface measure of the unit sphere in ℝ^N.
pub fn sphere_measure(dim: usize) -> f64 {
    let n = dim as f64;
    2.0 * std::f64::consts::PI.powf(n / 2.0) / gamma(n / 2.0)
}

fn check_order(s: f64) -> Result<()> {
    if s > 0.0 && s < 1.0 {
        Ok(())
    } else {
        Err(invalid("s", format!("fractional order must lie in (0, 1), got {s}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelParams {
    dim: usize,
    s: f64,
    c: f64,
}

impl KernelParams {
    /// Parameters with the symbol-normalizing constant.
    pub fn new(dim: usize, s: f64) -> Result<Self> {
        let c = normalization_constant(dim, s)?;
        Ok(Self { dim, s, c })
    }

    /// Parameters with a caller-chosen positive constant.
    pub fn with_constant(dim: usize, s: f64, c: f64) -> Result<Self> {
        check_order(s)?;
        if dim == 0 {
            return Err(invalid("dim", "dimension must be >= 1"));
        }
        if !(c.is_finite() && c > 0.0) {
            return Err(invalid("c", format!("constant must be positive, got {c}")));
        }
        Ok(Self { dim, s, c })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    /// N/2 + s, the exponent of K as a function of |z|².
    pub fn alpha(&self) -> f64 {
        self.dim as f64 / 2.0 + self.s
    }

    /// K(z) = c|z|^{−N−2s}.
    pub fn eval(&self, z: &[f64]) -> f64 {
        self.eval_sq(z.iter().map(|v| v * v).sum())
    }

    /// K as a function of |z|².
    pub fn eval_sq(&self, r2: f64) -> f64 {
        self.c * r2.powf(-self.alpha())
    }

    fn check_point(&self, x: &[f64], name: &'static str) -> Result<()> {
        if x.len() != self.dim {
            return Err(invalid(name, format!("expected {} coordinates, got {}", self.dim, x.len())));
        }
        Ok(())
    }
}

fn dist_sq(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum()
}

/// K(x−y) − K(x−r(y)).
pub fn kernel_difference(params: &KernelParams, x: &[f64], y: &[f64], r: &Reflection) -> Result<f64> {
    params.check_point(x, "x")?;
    params.check_point(y, "y")?;
    let ry = r.reflect_point(y);
    let (d, dr) = (dist_sq(x, y), dist_sq(x, &ry));
    if d == 0.0 || dr == 0.0 {
        return Err(Error::Coincident);
    }
    Ok(params.eval_sq(d) - params.eval_sq(dr))
}

/// K(x−y) − K(r₂x−y) − K(r₁x−y) + K(r₁r₂x−y) for x, y in the closure of
/// H₁∩H₂.
///
/// Evaluated as c·M^{−α}·f(a, b, M) with M = |x−y|², a = 4(x_i−λ₁)(y_i−λ₁),
/// b = 4(x_j−λ₂)(y_j−λ₂), using a factorization of f whose two terms are
/// each nonnegative in floating point.
pub fn four_point_deficit(
    params: &KernelParams,
    x: &[f64],
    y: &[f64],
    r1: &Reflection,
    r2: &Reflection,
) -> Result<f64> {
    params.check_point(x, "x")?;
    params.check_point(y, "y")?;
    if r1.axis() == r2.axis() {
        return Err(invalid("r2", "reflections must act on different axes"));
    }
    for r in [r1, r2] {
        if r.axis() >= params.dim {
            return Err(invalid("axis", format!("axis {} out of range", r.axis())));
        }
        let (i, l) = (r.axis(), r.level());
        if x[i] < l || y[i] < l {
            return Err(invalid("x", "points must lie in the closed quarter H1 ∩ H2"));
        }
    }
    let m = dist_sq(x, y);
    if m == 0.0 {
        return Err(Error::Coincident);
    }
    let a = 4.0 * (x[r1.axis()] - r1.level()) * (y[r1.axis()] - r1.level());
    let b = 4.0 * (x[r2.axis()] - r2.level()) * (y[r2.axis()] - r2.level());
    reduced_deficit(params, a, b, m)
}

/// The four-point deficit as a function of (a, b, M) alone, c·M^{−α}·f(a, b, M),
/// in the factorized form used by [`four_point_deficit`].
pub fn reduced_deficit(params: &KernelParams, a: f64, b: f64, m: f64) -> Result<f64> {
    if !(m > 0.0) {
        return Err(Error::Coincident);
    }
    if !(a >= 0.0 && b >= 0.0) {
        return Err(invalid("a", "arguments must be nonnegative"));
    }
    Ok(params.eval_sq(m) * surrogate_factored(a, b, m, params.alpha()))
}

/// f(a, b) = (1 − q_a)(1 − q_b) + q_ab·(1 − (1+ε)^{−α}) with q_t = (M/(t+M))^α
/// and ε = ab / (M(a+b+M)).
fn surrogate_factored(a: f64, b: f64, m: f64, alpha: f64) -> f64 {
    let one_minus_q = |t: f64| -(-alpha * (t / m).ln_1p()).exp_m1();
    let q_ab = (-alpha * ((a + b) / m).ln_1p()).exp();
    let eps = a * b / (m * (a + b + m));
    one_minus_q(a) * one_minus_q(b) + q_ab * -(-alpha * eps.ln_1p()).exp_m1()
}

/// f(a, b) = 1 + (M/(a+b+M))^{N/2+s} − (M/(a+M))^{N/2+s} − (M/(b+M))^{N/2+s}.
pub fn f_surrogate(a: f64, b: f64, m: f64, dim: usize, s: f64) -> Result<f64> {
    if !(m > 0.0) {
        return Err(invalid("M", format!("must be positive, got {m}")));
    }
    if !(a >= 0.0 && b >= 0.0) {
        return Err(invalid("a", "arguments must be nonnegative"));
    }
    let alpha = dim as f64 / 2.0 + s;
    let q = |t: f64| (m / (t + m)).powf(alpha);
    Ok(1.0 + q(a + b) - q(a) - q(b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn normalization_known_values() {
        assert!((normalization_constant(1, 0.5).unwrap() - 1.0 / PI).abs() < 1e-14);
        assert!((normalization_constant(2, 0.5).unwrap() - 0.5 / PI).abs() < 1e-14);
        // N = 3, s = 1/2: Γ(2)/(π^{3/2}Γ(1/2))·(1/2)·2 = 1/π².
        assert!((normalization_constant(3, 0.5).unwrap() - 1.0 / (PI * PI)).abs() < 1e-14);
        for n in 1..=3 {
            for s in [0.01, 0.3, 0.99] {
                assert!(normalization_constant(n, s).unwrap() > 0.0);
            }
        }
        assert!(normalization_constant(2, 1.2).is_err());
        assert!(normalization_constant(2, 0.0).is_err());
    }

    #[test]
    fn sphere_measures() {
        assert!((sphere_measure(1) - 2.0).abs() < 1e-14);
        assert!((sphere_measure(2) - 2.0 * PI).abs() < 1e-14);
        assert!((sphere_measure(3) - 4.0 * PI).abs() < 1e-13);
    }

    #[test]
    fn kernel_difference_values() {
        let p = KernelParams::new(1, 0.5).unwrap();
        let r = Reflection::through_origin(0);
        let d = kernel_difference(&p, &[0.5], &[1.5], &r).unwrap();
        assert!((d - 0.75 / PI).abs() < 1e-15);
        let p2 = KernelParams::new(2, 0.3).unwrap();
        let r = Reflection::through_origin(1);
        assert_eq!(kernel_difference(&p2, &[0.4, 0.7], &[0.1, 0.0], &r).unwrap(), 0.0);
        assert!(matches!(kernel_difference(&p2, &[0.4, 0.7], &[0.4, 0.7], &r), Err(Error::Coincident)));
    }

    #[test]
    fn four_point_example() {
        let p = KernelParams::new(2, 0.5).unwrap();
        let (r1, r2) = (Reflection::through_origin(0), Reflection::through_origin(1));
        let d = four_point_deficit(&p, &[1.0, 1.0], &[1.0, 2.0], &r1, &r2).unwrap();
        let expected = (1.0 - 27f64.powf(-1.0) - 5f64.powf(-1.5) + 13f64.powf(-1.5)) / (2.0 * PI);
        assert!((d - expected).abs() < 1e-15, "{d} vs {expected}");
        assert_eq!(four_point_deficit(&p, &[0.0, 1.0], &[1.0, 2.0], &r1, &r2).unwrap(), 0.0);
        assert!(four_point_deficit(&p, &[1.0, 1.0], &[1.0, 1.0], &r1, &r2).is_err());
        assert!(four_point_deficit(&p, &[1.0, 1.0], &[1.0, 2.0], &r1, &r1).is_err());
    }

    #[test]
    fn surrogate_values() {
        let f = f_surrogate(1.0, 1.0, 1.0, 2, 0.5).unwrap();
        let expected = 1.0 + 3f64.powf(-1.5) - 2.0 * 2f64.powf(-1.5);
        assert!((f - expected).abs() < 1e-15);
        assert!((f - 0.48534).abs() < 1e-5);
        assert_eq!(f_surrogate(0.0, 0.0, 2.0, 3, 0.2).unwrap(), 0.0);
        assert!(f_surrogate(0.0, 7.0, 0.3, 1, 0.7).unwrap().abs() <= 1e-15);
        assert!(f_surrogate(1.0, 1.0, 0.0, 2, 0.5).is_err());
        assert!((surrogate_factored(1.0, 1.0, 1.0, 1.5) - expected).abs() < 1e-15);
    }
}
