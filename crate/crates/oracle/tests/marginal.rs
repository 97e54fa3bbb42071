use gbcal_core::{simulate_mixture, MixtureTruth};
use gbcal_oracle::{aghq, aghq_auto, laplace_at_likelihood_mode, MixtureStats};
use nalgebra::{DMatrix, DVector};

fn mixture_stats(n2: usize) -> MixtureStats {
    let truth = MixtureTruth::default();
    let d = simulate_mixture::<f64>(&truth, 30, 200, 8).unwrap();
    let x2 = &d.x2.values()[..n2];
    MixtureStats::from_slices(d.x1.values(), x2, &truth)
}

#[test]
fn aghq_recovers_mixture_marginal() {
    let st = mixture_stats(60);
    for &phi in &[0.0, 0.4] {
        let f = |t: &DVector<f64>| st.log_lik_x2(phi, t[0]) + st.log_prior_theta(t[0]);
        let est = aghq_auto(f, &DVector::from_element(1, 0.0), 5).unwrap();
        let exact = st.log_marginal_x2(phi);
        assert!((est - exact).exp_m1().abs() < 1e-6, "{est} vs {exact}");
    }
}

fn laplace_rel_error(n2: usize) -> f64 {
    let st = mixture_stats(n2);
    // Put the likelihood mode at the prior mode so every n2 is compared at the same θ̄.
    let phi = st.xbar2();
    let theta_bar = st.xbar2() - phi;
    let r_bar = -st.log_lik_x2(phi, theta_bar) / n2 as f64;
    let h = DMatrix::from_element(1, 1, 1.0 / st.sigma2_sq);
    let lap = laplace_at_likelihood_mode(n2, r_bar, &h, st.log_prior_theta(theta_bar)).unwrap();
    (lap - st.log_marginal_x2(phi)).exp_m1()
}

#[test]
fn laplace_error_is_first_order() {
    let e: Vec<f64> = [50, 100, 200]
        .iter()
        .map(|&n| laplace_rel_error(n).abs())
        .collect();
    for w in e.windows(2) {
        let ratio = w[0] / w[1];
        assert!(ratio > 2.0 / 1.5 && ratio < 2.0 * 1.5, "errors {e:?}");
    }
}

#[test]
fn single_node_aghq_is_laplace_at_the_integrand_mode() {
    let f = |t: &DVector<f64>| -0.5 * (t[0] - 1.0).powi(2) / 0.3 + 0.2 * t[0].sin();
    let mode = gbcal_oracle::newton_minimize(|t| -f(t), &DVector::from_element(1, 0.0)).unwrap();
    let h = gbcal_oracle::numerical_hessian(|t| -f(t), &mode);
    let lap = f(&mode) + 0.5 * (2.0 * std::f64::consts::PI).ln() - 0.5 * h[(0, 0)].ln();
    assert!((aghq(f, &mode, &h, 1).unwrap() - lap).abs() < 1e-12);
}

#[test]
fn aghq_error_decreases_with_nodes_on_a_skewed_integrand() {
    // ∫ exp(aτ − e^τ) dτ = Γ(a).
    let a = 2.5;
    let f = |t: &DVector<f64>| a * t[0] - t[0].exp();
    let exact = statrs::function::gamma::ln_gamma(a);
    let err: Vec<f64> = [1, 5, 11]
        .iter()
        .map(|&k| (aghq_auto(f, &DVector::from_element(1, 0.0), k).unwrap() - exact).abs())
        .collect();
    assert!(err[0] > err[1] && err[1] > err[2], "{err:?}");
}

#[test]
fn aghq_exact_for_correlated_gaussian() {
    let prec = DMatrix::from_row_slice(2, 2, &[2.0, 0.7, 0.7, 1.0]);
    let mu = DVector::from_vec(vec![0.3, -1.0]);
    let f = |t: &DVector<f64>| {
        let d = t - &mu;
        -0.5 * (d.transpose() * &prec * &d)[(0, 0)]
    };
    let exact = (2.0 * std::f64::consts::PI).ln() - 0.5 * prec.determinant().ln();
    let est = aghq(f, &mu, &prec, 3).unwrap();
    assert!((est - exact).abs() < 1e-12);
}

#[test]
fn laplace_rejects_indefinite_hessian() {
    let h = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
    assert!(laplace_at_likelihood_mode(10, 0.0, &h, 0.0).is_err());
}
