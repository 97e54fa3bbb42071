//! Thin wrappers over `statrs` special functions plus a cancellation-free
//! log-gamma difference for large arguments.

pub use statrs::function::gamma::{digamma, ln_gamma};

/// `lnΓ(x + h) - lnΓ(x) - h ln x`, accurate when `x` is large and `h ≪ x` or not.
pub fn ln_gamma_ratio_excess(x: f64, h: f64) -> f64 {
    if x < 60.0 {
        return ln_gamma(x + h) - ln_gamma(x) - h * x.ln();
    }
    let z = x + h;
    let lead = (x + h - 0.5) * (h / x).ln_1p() - h;
    lead + stirling_tail(z) - stirling_tail(x)
}

fn stirling_tail(z: f64) -> f64 {
    let z2 = z * z;
    (1.0 / 12.0 - (1.0 / 360.0 - (1.0 / 1260.0 - 1.0 / (1680.0 * z2)) / z2) / z2) / z
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ratio_excess_matches_direct_evaluation() {
        for &(x, h) in &[(70.0, 3.0), (100.5, 0.5), (500.0, 40.0), (61.0, 100.0)] {
            let direct = ln_gamma(x + h) - ln_gamma(x) - h * f64::ln(x);
            assert!(
                (ln_gamma_ratio_excess(x, h) - direct).abs() < 1e-9,
                "{x} {h}"
            );
        }
    }

    #[test]
    fn ratio_excess_large_argument_limit() {
        // lnΓ(x+h) - lnΓ(x) - h ln x → h(h-1)/(2x) as x → ∞.
        let (x, h) = (1e6, 5.0);
        let lead = h * (h - 1.0) / (2.0 * x);
        assert!((ln_gamma_ratio_excess(x, h) / lead - 1.0).abs() < 1e-5);
    }
}
