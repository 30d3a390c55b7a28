//! Analytic error bounds for quantized dense inner products.

/// Rate-distortion floor `σ² · 2^(−2b/d)` for a Gaussian source coded with
/// `b` bits over `d` dimensions.
pub fn rate_distortion_bound(sigma2: f64, b: f64, d: f64) -> f64 {
    sigma2 * (-2.0 * b / d).exp2()
}

/// Lower bound on `Pr(|q·x − q·x̃| < eps)` from the Azuma inequality over
/// `k` subspaces. Returns 1 when the quantization error is zero.
pub fn azuma_error_bound(k: usize, max_q_sub_norm: f64, max_residual_sub_norm: f64, eps: f64) -> f64 {
    let denom = 2.0 * k as f64 * max_q_sub_norm.powi(2) * max_residual_sub_norm.powi(2);
    if denom == 0.0 {
        return 1.0;
    }
    (1.0 - 2.0 * (-(eps * eps) / denom).exp()).max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rate_distortion_examples() {
        assert_eq!(rate_distortion_bound(3.0, 0.0, 8.0), 3.0);
        assert_eq!(rate_distortion_bound(1.0, 64.0, 32.0), 1.0 / 16.0);
        assert_eq!(rate_distortion_bound(2.0, 4.0, 2.0), 2.0 / 16.0);
    }

    #[test]
    fn azuma_examples() {
        assert_eq!(azuma_error_bound(8, 1.0, 0.0, 0.1), 1.0);
        assert_eq!(azuma_error_bound(8, 0.0, 1.0, 0.1), 1.0);
        assert_eq!(azuma_error_bound(8, 1.0, 1.0, 0.0), 0.0);
        let b = azuma_error_bound(4, 1.0, 0.5, 2.0);
        assert!((b - (1.0 - 2.0 * (-4.0f64 / 2.0).exp())).abs() < 1e-15);
        assert!(azuma_error_bound(4, 1.0, 0.5, 100.0) > 0.999_999);
    }
}
