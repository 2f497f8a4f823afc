use std::fmt;
use std::sync::Arc;

/// Right-hand side f(x, u) of a semilinear problem L u = f(x, u).
pub trait Nonlinearity: Send + Sync {
    fn value(&self, x: &[f64], u: f64) -> f64;

    /// A constant L with |f(x,u) − f(x,v)| ≤ L|u − v| for |u|, |v| ≤ k, if
    /// one is known.
    fn lipschitz(&self, k: f64) -> Option<f64>;

    fn describe(&self) -> String;
}

/// f(x, u) = λ|u|^{p−2}u.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PowerNonlinearity {
    pub coefficient: f64,
    pub p: f64,
}

impl PowerNonlinearity {
    pub fn new(coefficient: f64, p: f64) -> Self {
        Self { coefficient, p }
    }
}

impl Nonlinearity for PowerNonlinearity {
    fn value(&self, _x: &[f64], u: f64) -> f64 {
        if u == 0.0 {
            return 0.0;
        }
        self.coefficient * u.abs().powf(self.p - 2.0) * u
    }

    fn lipschitz(&self, k: f64) -> Option<f64> {
        // For p < 2 the derivative blows up at u = 0.
        (self.p >= 2.0).then(|| self.coefficient.abs() * (self.p - 1.0) * k.powf(self.p - 2.0))
    }

    fn describe(&self) -> String {
        format!("{}·|u|^{}·u", self.coefficient, self.p - 2.0)
    }
}

type ValueFn = dyn Fn(&[f64], f64) -> f64 + Send + Sync;
type BoundFn = dyn Fn(f64) -> Option<f64> + Send + Sync;

/// User-supplied map with an optional Lipschitz bound.
#[derive(Clone)]
pub struct FnNonlinearity {
    label: String,
    f: Arc<ValueFn>,
    bound: Option<Arc<BoundFn>>,
}

impl FnNonlinearity {
    pub fn new(label: impl Into<String>, f: impl Fn(&[f64], f64) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            label: label.into(),
            f: Arc::new(f),
            bound: None,
        }
    }

    pub fn with_lipschitz(mut self, bound: impl Fn(f64) -> Option<f64> + Send + Sync + 'static) -> Self {
        self.bound = Some(Arc::new(bound));
        self
    }
}

impl fmt::Debug for FnNonlinearity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnNonlinearity").field("label", &self.label).finish()
    }
}

impl Nonlinearity for FnNonlinearity {
    fn value(&self, x: &[f64], u: f64) -> f64 {
        (self.f)(x, u)
    }

    fn lipschitz(&self, k: f64) -> Option<f64> {
        self.bound.as_ref().and_then(|b| b(k))
    }

    fn describe(&self) -> String {
        self.label.clone()
    }
}
