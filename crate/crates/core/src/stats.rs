//! Small statistics helpers shared by the estimators.

/// Pairwise (cascade) summation.
///
/// The association pattern depends only on the slice length, so reductions
/// over replication vectors give identical results regardless of how the
/// replications were scheduled across workers.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        2 => values[0] + values[1],
        n => {
            let mid = n / 2;
            pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
        }
    }
}

pub fn mean(values: &[f64]) -> f64 {
    pairwise_sum(values) / values.len() as f64
}

/// Sample variance, shifted by the first element for stability.
///
/// For bitwise-constant data every shifted term is exactly zero, so the
/// variance (and hence the standard error) is exactly zero.
pub fn sample_variance(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let shift = values[0];
    let shifted: Vec<f64> = values.iter().map(|v| v - shift).collect();
    let m = mean(&shifted);
    let sq: Vec<f64> = shifted.iter().map(|v| (v - m) * (v - m)).collect();
    pairwise_sum(&sq) / (n - 1) as f64
}

/// Standard error of the sample mean.
pub fn standard_error(values: &[f64]) -> f64 {
    (sample_variance(values) / values.len() as f64).sqrt()
}

/// Mean and standard error in one pass.
pub fn mean_and_se(values: &[f64]) -> (f64, f64) {
    (mean(values), standard_error(values))
}

/// Euclidean norm of a vector.
pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Euclidean distance between two vectors of equal length.
pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Squared Euclidean distance.
pub fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// ln(1 + e^x) without overflow.
pub fn log1p_exp(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_data_has_zero_variance() {
        let xs = vec![0.3725; 1000];
        assert_eq!(sample_variance(&xs), 0.0);
        assert_eq!(standard_error(&xs), 0.0);
    }

    #[test]
    fn pairwise_matches_naive_on_small_input() {
        let xs = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(pairwise_sum(&xs), 15.0);
    }

    #[test]
    fn variance_of_simple_sample() {
        let xs = [1.0, 2.0, 3.0];
        assert!((sample_variance(&xs) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn log1p_exp_large_argument() {
        assert!((log1p_exp(1000.0) - 1000.0).abs() < 1e-12);
        assert!((log1p_exp(0.0) - 2f64.ln()).abs() < 1e-15);
    }
}
