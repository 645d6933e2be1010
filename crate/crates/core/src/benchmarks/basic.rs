//! Unshifted, unrotated base functions. Each takes the already transformed
//! argument.

use std::f64::consts::{E, PI};

use serde::{Deserialize, Serialize};

/// Which Ackley normalisation to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AckleyForm {
    /// `−20·exp(−0.2·(1/n)·sqrt(Σx²))`: the 1/n factor multiplies the root.
    #[default]
    AsPrinted,
    /// `−20·exp(−0.2·sqrt((1/n)·Σx²))`.
    Standard,
}

pub fn sphere(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

/// Weight of component j (0-based) in the ill-conditioned elliptic sum.
pub fn elliptic_weight(j: usize, n: usize) -> f64 {
    if n <= 1 {
        1.0
    } else {
        1e6f64.powf(j as f64 / (n - 1) as f64)
    }
}

pub fn elliptic(x: &[f64]) -> f64 {
    let n = x.len();
    x.iter().enumerate().map(|(j, v)| elliptic_weight(j, n) * v * v).sum()
}

/// Schwefel's problem 1.2: sum of squared prefix sums.
pub fn schwefel_1_2(x: &[f64]) -> f64 {
    let mut prefix = 0.0;
    let mut total = 0.0;
    for v in x {
        prefix += v;
        total += prefix * prefix;
    }
    total
}

pub fn rosenbrock(x: &[f64]) -> f64 {
    x.windows(2)
        .map(|w| {
            let a = w[0] * w[0] - w[1];
            let b = w[0] - 1.0;
            100.0 * a * a + b * b
        })
        .sum()
}

pub fn rastrigin(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v - 10.0 * (2.0 * PI * v).cos() + 10.0).sum()
}

pub fn ackley(x: &[f64], form: AckleyForm) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    let n = x.len() as f64;
    let sq: f64 = x.iter().map(|v| v * v).sum();
    let radial = match form {
        AckleyForm::AsPrinted => sq.sqrt() / n,
        AckleyForm::Standard => (sq / n).sqrt(),
    };
    let cos_mean = x.iter().map(|v| (2.0 * PI * v).cos()).sum::<f64>() / n;
    -20.0 * (-0.2 * radial).exp() - cos_mean.exp() + 20.0 + E
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn known_minima() {
        let zero = [0.0; 5];
        assert_eq!(sphere(&zero), 0.0);
        assert_eq!(elliptic(&zero), 0.0);
        assert_eq!(schwefel_1_2(&zero), 0.0);
        assert_eq!(rastrigin(&zero), 0.0);
        assert_eq!(rosenbrock(&[1.0; 5]), 0.0);
        assert_abs_diff_eq!(ackley(&zero, AckleyForm::AsPrinted), 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(ackley(&zero, AckleyForm::Standard), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn hand_values() {
        assert_eq!(schwefel_1_2(&[1.0, 2.0, 3.0]), 46.0);
        assert_eq!(elliptic(&[1.0, 0.0]), 1.0);
        assert_eq!(elliptic(&[0.0, 1.0]), 1e6);
        assert_eq!(elliptic(&[3.0]), 9.0);
        assert_eq!(rosenbrock(&[0.0, 0.0]), 1.0);
        assert_eq!(rastrigin(&[1.0]), 1.0);
        assert_eq!(sphere(&[3.0, 4.0]), 25.0);
    }

    #[test]
    fn ackley_forms_differ_off_origin() {
        let x = [1.0, 1.0, 1.0, 1.0];
        // sqrt(4)/4 = 0.5 vs sqrt(4/4) = 1
        let printed = -20.0 * (-0.1f64).exp() - 1.0f64.exp() + 20.0 + E;
        let standard = -20.0 * (-0.2f64).exp() - 1.0f64.exp() + 20.0 + E;
        assert_abs_diff_eq!(ackley(&x, AckleyForm::AsPrinted), printed, epsilon = 1e-12);
        assert_abs_diff_eq!(ackley(&x, AckleyForm::Standard), standard, epsilon = 1e-12);
    }
}
