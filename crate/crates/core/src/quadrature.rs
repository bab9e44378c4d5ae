//! Quadrature and finite-difference helpers on uniform and per-step grids.

/// Gauss–Legendre nodes on `[-1, 1]` (8 points).
pub const GL8_NODES: [f64; 8] = [
    -0.960_289_856_497_536_3,
    -0.796_666_477_413_626_7,
    -0.525_532_409_916_329,
    -0.183_434_642_495_649_8,
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];

/// Gauss–Legendre weights matching [`GL8_NODES`].
pub const GL8_WEIGHTS: [f64; 8] = [
    0.101_228_536_290_376_3,
    0.222_381_034_453_374_5,
    0.313_706_645_877_887_3,
    0.362_683_783_378_362,
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];

/// `∫_a^b f` by one 8-point Gauss–Legendre panel (exact for degree ≤ 15).
pub fn gauss_legendre_8<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64) -> f64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    GL8_NODES
        .iter()
        .zip(&GL8_WEIGHTS)
        .map(|(x, w)| w * f(mid + half * x))
        .sum::<f64>()
        * half
}

/// Composite Gauss–Legendre over consecutive panels `knots[k]..knots[k+1]`.
pub fn gauss_legendre_composite<F: FnMut(f64) -> f64>(mut f: F, knots: &[f64]) -> f64 {
    knots
        .windows(2)
        .map(|w| gauss_legendre_8(&mut f, w[0], w[1]))
        .sum()
}

/// Composite Simpson on uniformly spaced samples; requires an odd count ≥ 3
/// (falls back to the trapezoid rule for two samples).
pub fn simpson(values: &[f64], h: f64) -> f64 {
    let n = values.len();
    match n {
        0 | 1 => 0.0,
        2 => 0.5 * h * (values[0] + values[1]),
        _ => {
            assert!(n % 2 == 1, "Simpson needs an even number of intervals");
            let mut acc = values[0] + values[n - 1];
            for (k, v) in values.iter().enumerate().take(n - 1).skip(1) {
                acc += if k % 2 == 1 { 4.0 * v } else { 2.0 * v };
            }
            acc * h / 3.0
        }
    }
}

/// Tensor-product Simpson on a row-major grid `values[i][j]` with spacings
/// `h_row` (first index) and `h_col` (second index).
pub fn simpson_2d(values: &[Vec<f64>], h_row: f64, h_col: f64) -> f64 {
    let inner: Vec<f64> = values.iter().map(|row| simpson(row, h_col)).collect();
    simpson(&inner, h_row)
}

/// Cumulative integrals `∫_{x_0}^{x_j} f` on a uniform grid, fourth-order
/// at even indices and third-order at odd ones.
pub fn cumulative_simpson(values: &[f64], h: f64) -> Vec<f64> {
    let n = values.len();
    let mut out = vec![0.0; n];
    if n < 2 {
        return out;
    }
    if n == 2 {
        out[1] = 0.5 * h * (values[0] + values[1]);
        return out;
    }
    for j in 1..n {
        if j % 2 == 0 {
            out[j] = out[j - 2] + h / 3.0 * (values[j - 2] + 4.0 * values[j - 1] + values[j]);
        } else if j + 1 < n {
            // first interval of the pair [j−1, j+1] via the quadratic through it
            out[j] = out[j - 1] + h / 12.0 * (5.0 * values[j - 1] + 8.0 * values[j] - values[j + 1]);
        } else {
            out[j] = out[j - 1] + h / 12.0 * (-values[j - 2] + 8.0 * values[j - 1] + 5.0 * values[j]);
        }
    }
    out
}

/// Derivative of uniformly spaced samples: central in the interior, one-sided
/// second order `(−3f₀ + 4f₁ − f₂)/2h` at the ends.
pub fn fd_derivative(values: &[f64], h: f64) -> Vec<f64> {
    let n = values.len();
    match n {
        0 => Vec::new(),
        1 => vec![0.0],
        2 => {
            let d = (values[1] - values[0]) / h;
            vec![d, d]
        }
        _ => {
            let mut out = vec![0.0; n];
            out[0] = (-3.0 * values[0] + 4.0 * values[1] - values[2]) / (2.0 * h);
            out[n - 1] = (3.0 * values[n - 1] - 4.0 * values[n - 2] + values[n - 3]) / (2.0 * h);
            for k in 1..n - 1 {
                out[k] = (values[k + 1] - values[k - 1]) / (2.0 * h);
            }
            out
        }
    }
}

/// Uniform grid with `intervals` subintervals on `[a, b]`.
pub fn uniform_grid(a: f64, b: f64, intervals: usize) -> Vec<f64> {
    let n = intervals.max(1);
    (0..=n)
        .map(|k| if k == n { b } else { a + (b - a) * k as f64 / n as f64 })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gl8_exact_for_degree_15() {
        let v = gauss_legendre_8(|x| x.powi(15) + x.powi(14), 0.0, 1.0);
        assert_relative_eq!(v, 1.0 / 16.0 + 1.0 / 15.0, epsilon = 1e-14);
    }

    #[test]
    fn simpson_exact_for_cubic() {
        let xs = uniform_grid(0.0, 2.0, 4);
        let v: Vec<f64> = xs.iter().map(|x| x * x * x).collect();
        assert_relative_eq!(simpson(&v, 0.5), 4.0, epsilon = 1e-14);
    }

    #[test]
    fn simpson_2d_product() {
        let xs = uniform_grid(0.0, 1.0, 8);
        let grid: Vec<Vec<f64>> = xs.iter().map(|x| xs.iter().map(|y| x * y * y).collect()).collect();
        assert_relative_eq!(simpson_2d(&grid, 0.125, 0.125), 1.0 / 6.0, epsilon = 1e-14);
    }

    #[test]
    fn cumulative_matches_quadratic() {
        let xs = uniform_grid(0.0, 1.0, 5);
        let v: Vec<f64> = xs.iter().map(|x| x * x).collect();
        let c = cumulative_simpson(&v, 0.2);
        for (x, ci) in xs.iter().zip(&c) {
            assert_relative_eq!(*ci, x * x * x / 3.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn fd_exact_for_quadratic() {
        let xs = uniform_grid(0.0, 1.0, 4);
        let v: Vec<f64> = xs.iter().map(|x| 3.0 * x * x - x).collect();
        for (x, d) in xs.iter().zip(fd_derivative(&v, 0.25)) {
            assert_relative_eq!(d, 6.0 * x - 1.0, epsilon = 1e-12);
        }
    }
}
