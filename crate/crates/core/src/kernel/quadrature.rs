//! Fixed-order Gauss–Legendre rules.

/// 8-point Gauss–Legendre nodes on [-1, 1] (positive half).
const NODES8: [f64; 4] = [
    0.183_434_642_495_649_8,
    0.525_532_409_916_329_0,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
const WEIGHTS8: [f64; 4] = [
    0.362_683_783_378_362_0,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];

/// Composite 8-point rule on [a, b] with `panels` equal panels, as
/// (node, weight) pairs ordered left to right.
pub(crate) fn composite_rule(a: f64, b: f64, panels: usize) -> Vec<(f64, f64)> {
    let width = (b - a) / panels as f64;
    let half = width / 2.0;
    let mut rule = Vec::with_capacity(8 * panels);
    for p in 0..panels {
        let mid = a + (p as f64 + 0.5) * width;
        for k in (0..4).rev() {
            rule.push((mid - half * NODES8[k], half * WEIGHTS8[k]));
        }
        for k in 0..4 {
            rule.push((mid + half * NODES8[k], half * WEIGHTS8[k]));
        }
    }
    rule
}

/// Tensor-product integral of `f` over the cube [a, b]^dim.
pub(crate) fn cube_integral(dim: usize, a: f64, b: f64, panels: usize, f: impl Fn(&[f64]) -> f64) -> f64 {
    let rule = composite_rule(a, b, panels);
    let m = rule.len();
    let mut idx = vec![0usize; dim];
    let mut x = vec![0.0; dim];
    let mut total = 0.0;
    for _ in 0..m.pow(dim as u32) {
        let mut w = 1.0;
        for a in 0..dim {
            x[a] = rule[idx[a]].0;
            w *= rule[idx[a]].1;
        }
        total += w * f(&x);
        for a in (0..dim).rev() {
            idx[a] += 1;
            if idx[a] < m {
                break;
            }
            idx[a] = 0;
        }
    }
    total
}
