use ndarray::Array2;
use rand::Rng;

/// Uniform Xavier initialisation: i.i.d. samples on `±sqrt(6/(n_in+n_out))`,
/// which gives variance `2/(n_in+n_out)`.
pub fn xavier_init<R: Rng + ?Sized>(n_in: usize, n_out: usize, rng: &mut R) -> Array2<f64> {
    let limit = (6.0 / (n_in + n_out) as f64).sqrt();
    Array2::from_shape_simple_fn((n_in, n_out), || rng.random_range(-limit..limit))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    #[test]
    fn target_variance_and_symmetric_case() {
        assert!((2.0 / 56.0f64 - 0.035714).abs() < 1e-6);
        // n_in = n_out = n: the compromise 2/(2n) equals both 1/n conditions.
        let n = 48.0f64;
        assert_eq!(2.0 / (n + n), 1.0 / n);
    }

    #[test]
    fn sample_statistics_500x500() {
        let w = xavier_init(500, 500, &mut seeded(17));
        let target = 2.0 / 1000.0;
        let n = w.len() as f64;
        let mean = w.sum() / n;
        let var = w.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
        assert!((var - target).abs() / target < 0.05, "var {var}");
        // Standard error of the mean for the uniform family.
        assert!(mean.abs() < 3.0 * (target / n).sqrt());
        let limit = (6.0f64 / 1000.0).sqrt();
        assert!(w.iter().all(|v| v.abs() <= limit));
    }
}
