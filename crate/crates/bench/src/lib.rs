//! Shared fixtures for the criterion benchmarks.

use fracsym::{build_domain, Domain, Field, GridSpec, KernelParams, NonlocalOperator, Shape};

/// Unit disk on an n×n grid with a two-cell exterior layer.
pub fn disk(n: usize, s: f64) -> (NonlocalOperator, Domain) {
    let grid = GridSpec::cube(2, 2.0 / (n - 4) as f64, n).expect("valid grid");
    let domain = build_domain(&Shape::Ball { radius: 1.0 }, &grid).expect("disk fits");
    let op = NonlocalOperator::build(&grid, &KernelParams::new(2, s).expect("valid s")).expect("operator");
    (op, domain)
}

/// A smooth field odd in x₂.
pub fn odd_field(domain: &Domain) -> Field {
    Field::from_fn(domain.mask(), |x| x[1] * (1.0 - x[0] * x[0] - x[1] * x[1])).expect("finite")
}
