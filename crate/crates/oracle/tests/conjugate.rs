use gbcal_core::numerics::CompositeRule;
use gbcal_oracle::{ig_prior_from_moments, interior_probability, ConjObjective, ConjStats};
use proptest::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal};

fn stats() -> ConjStats {
    ConjStats::new(10, 0.4, 1.3, 2.0, 1.0, 0.0).unwrap()
}

/// `log ∫∫ f(θ, σ²) π_r(θ, σ²) dθ dσ²` on a tensor Gauss-Legendre grid in `(θ, log σ²)`.
fn quad_log_expectation(st: &ConjStats, r: f64, log_f: impl Fn(f64, f64) -> f64) -> f64 {
    let post = st.posterior(r).unwrap();
    let centre = (post.beta / post.alpha).ln();
    let tau_rule = CompositeRule::new(centre - 20.0, centre + 30.0, 120, 16);
    let mut acc = 0.0;
    for (&tau, &wt) in tau_rule.nodes.iter().zip(&tau_rule.weights) {
        let s2 = tau.exp();
        let sd = (s2 / r).sqrt();
        let lo = post.mean - 14.0 * sd - 14.0 * s2.sqrt();
        let hi = post.mean + 14.0 * sd + 14.0 * s2.sqrt();
        let th_rule = CompositeRule::new(lo, hi, 60, 16);
        let inner = th_rule.integrate(|th| (post.ln_pdf(th, s2) + log_f(th, s2)).exp());
        acc += wt * inner * s2;
    }
    acc.ln()
}

fn normal_ll(y: &[f64], th: f64, s2: f64) -> f64 {
    y.iter()
        .map(|v| -0.5 * (2.0 * std::f64::consts::PI * s2).ln() - 0.5 * (v - th).powi(2) / s2)
        .sum()
}

#[test]
fn posterior_shape_and_scale_by_substitution() {
    let st = ConjStats::from_data(&[-1.0, 1.0], 2.0, 1.0, 0.0).unwrap();
    assert_eq!(st.u, 1.0);
    let p = st.posterior(3.0).unwrap();
    assert_eq!((p.alpha, p.beta), (3.0, 2.5));
}

#[test]
fn improper_at_r0_and_below() {
    let st = ConjStats::new(10, 0.0, 1.0, 0.2, 1.0, 0.0).unwrap();
    assert!((st.r0() - 0.6).abs() < 1e-15);
    assert!(st.posterior(0.6).is_err());
    assert!(st.posterior(0.5).is_err());
    assert!(st.posterior(0.61).is_ok());
}

#[test]
fn power_posterior_integrates_to_one() {
    let st = stats();
    for &r in &[0.5, 3.0, 40.0] {
        let lz = quad_log_expectation(&st, r, |_, _| 0.0);
        assert!(lz.abs() < 1e-4, "r={r} log-mass {lz}");
    }
}

#[test]
fn pooled_predictive_matches_quadrature() {
    let st = stats();
    let y = [0.3, -1.1, 1.7];
    for &r in &[0.7, 4.0, 60.0] {
        let exact = st.pooled_log_predictive(&y, r).unwrap();
        let quad = quad_log_expectation(&st, r, |th, s2| normal_ll(&y, th, s2));
        assert!((exact - quad).abs() < 1e-4, "r={r}: {exact} vs {quad}");
    }
}

#[test]
fn product_predictive_matches_quadrature() {
    let st = stats();
    let y = [0.3, -1.1, 1.7];
    for &r in &[0.7, 4.0, 60.0] {
        let exact = st.product_log_predictive(&y, r).unwrap();
        let quad: f64 = y
            .iter()
            .map(|&v| quad_log_expectation(&st, r, |th, s2| normal_ll(&[v], th, s2)))
            .sum();
        assert!((exact - quad).abs() < 1e-4, "r={r}: {exact} vs {quad}");
    }
}

#[test]
fn single_point_pooled_equals_product() {
    let st = stats();
    for &r in &[0.3, 2.0, 1e3] {
        let a = st.pooled_log_predictive(&[1.2], r).unwrap();
        let b = st.product_log_predictive(&[1.2], r).unwrap();
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn product_symmetric_pair() {
    let st = stats();
    let t = st.posterior(5.0).unwrap().univariate_t();
    assert!((t.ln_pdf(st.xbar - 0.8) - t.ln_pdf(st.xbar + 0.8)).abs() < 1e-14);
}

#[test]
fn pooled_tail_slope() {
    let st = stats();
    let y = [0.3, -1.1, 1.7, 0.2];
    let a = st.a_1j(&y).unwrap();
    for &r in &[1e3, 1e4] {
        let excess = st.pooled_log_excess(&y, r).unwrap();
        assert!(
            ((r * excess - a) / a).abs() < 20.0 / r * 10.0,
            "r={r}: {} vs {a}",
            r * excess
        );
    }
}

#[test]
fn pooled_tail_coefficient_matches_improper_prior_closed_form() {
    // With a, b → 0 the finite-J coefficient is ¼[(T/u)² + 2T/u − 2J S_y/u + J(J−6)].
    let st = ConjStats::new(12, 0.35, 0.8, 1e-12, 1e-12, 0.0).unwrap();
    let y = [0.9, -0.4, 1.6, 2.2, -1.3];
    let j = y.len() as f64;
    let ybar = y.iter().sum::<f64>() / j;
    let sy: f64 = y.iter().map(|v| (v - ybar).powi(2)).sum();
    let t = sy + j * (ybar - st.xbar).powi(2);
    let u = st.u;
    let closed = 0.25 * ((t / u).powi(2) + 2.0 * t / u - 2.0 * j * sy / u + j * (j - 6.0));
    let fitted = st.a_1j(&y).unwrap();
    assert!(
        (fitted - closed).abs() < 1e-6 * closed.abs().max(1.0),
        "{fitted} vs {closed}"
    );
}

fn stratified_normal(mu: f64, j: usize) -> Vec<f64> {
    let n = Normal::new(mu, 1.0).unwrap();
    (0..j)
        .map(|i| n.inverse_cdf((i as f64 + 0.5) / j as f64))
        .collect()
}

#[test]
fn pooled_tail_coefficient_large_j_limit() {
    let st = ConjStats::new(10, 0.5, 1.5, 2.0, 1.0, 0.0).unwrap();
    let j = 10_000;
    let y = stratified_normal(0.0, j);
    let a = st.a_1j(&y).unwrap() / (j as f64).powi(2);
    let d2 = st.delta().powi(2);
    let lim = (d2 * d2 + 2.0 * d2 + (st.u - 1.0).powi(2)) / (4.0 * st.u * st.u);
    assert!(((a - lim) / lim).abs() < 0.02, "{a} vs {lim}");
}

#[test]
fn product_tail_coefficient() {
    let st = stats();
    let y = [0.3, -1.1, 1.7, 0.2, 2.5];
    let a = st.a_j1(&y);
    let plug: f64 = y
        .iter()
        .map(|v| {
            -0.5 * (2.0 * std::f64::consts::PI * st.u).ln() - 0.5 * (v - st.xbar).powi(2) / st.u
        })
        .sum();
    let r = 1e6;
    let slope = r * (st.product_log_predictive(&y, r).unwrap() - plug);
    assert!(
        (slope - a).abs() < 1e-3 * a.abs().max(1.0),
        "{slope} vs {a}"
    );
}

#[test]
fn elppd_tail_coefficient() {
    let st = stats();
    let d2 = st.delta().powi(2);
    let plug = -0.5 * (2.0 * std::f64::consts::PI * st.u).ln() - 0.5 * (1.0 + d2) / st.u;
    let r = 1e6;
    let slope = r * (st.elppd(r).unwrap() - plug);
    assert!(
        (slope - st.a_bar()).abs() < 1e-3,
        "{slope} vs {}",
        st.a_bar()
    );
}

#[test]
fn a_bar_vanishes_at_the_reference_configuration() {
    let st = ConjStats::new(10, 0.0, 1.0, 2.0, 1.0, 0.0).unwrap();
    assert!(st.a_bar().abs() < 1e-15);
}

#[test]
fn a_bar_is_mean_of_a_j1() {
    let st = stats();
    let j = 200_000;
    let y = stratified_normal(st.mu_star, j);
    assert!((st.a_j1(&y) / j as f64 - st.a_bar()).abs() < 1e-3);
}

#[test]
fn pooled_target_derivative_and_limit() {
    use rand::{Rng, SeedableRng};
    let st = stats();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
    for _ in 0..20 {
        let r: f64 = 10f64.powf(rng.random_range(-0.5..4.0));
        let h = 1e-5 * r;
        let fd = (st.g(r + h).unwrap() - st.g(r - h).unwrap()) / (2.0 * h);
        let an = st.g_prime(r).unwrap();
        assert!(((fd - an) / an).abs() < 1e-6, "r={r}: {fd} vs {an}");
    }
    assert!((st.g_prime(1e6).unwrap() - st.g_prime_limit()).abs() < 1e-3);
}

#[test]
fn pooled_target_concave() {
    let st = stats();
    let mut r = 0.05;
    while r < 1e6 {
        let h = 1e-4 * r;
        let d2 = (st.g_prime(r + h).unwrap() - st.g_prime(r - h).unwrap()) / (2.0 * h);
        assert!(d2 < 0.0, "r={r}: g''={d2}");
        r *= 1.7;
    }
}

#[test]
fn optimal_r_pooled_target_boundary_case() {
    let st = ConjStats::new(10, 0.0, 1.0, 2.0, 1.0, 0.0).unwrap();
    let o = st.optimal_r(ConjObjective::PooledLimit, &[]).unwrap();
    assert!(o.infinite, "{o:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn pooled_target_finite_iff_kl_positive(xbar in -1.5f64..1.5, u in 0.2f64..3.0) {
        let st = ConjStats::new(10, xbar, u, 2.0, 1.0, 0.0).unwrap();
        let kl = xbar * xbar + u - 1.0 - u.ln();
        // Skip configurations whose optimum sits beyond the search bracket.
        prop_assume!(kl > 1e-4);
        let o = st.optimal_r(ConjObjective::PooledLimit, &[]).unwrap();
        prop_assert!(!o.infinite);
        prop_assert!(o.r < 1e6);
        prop_assert!(st.g_prime(o.r * 1.01).unwrap() < 0.0);
    }

    #[test]
    fn elppd_finite_iff_a_bar_positive(xbar in -1.5f64..1.5, u in 0.2f64..3.0) {
        let st = ConjStats::new(10, xbar, u, 2.0, 1.0, 0.0).unwrap();
        let o = st.optimal_r(ConjObjective::Elppd, &[]).unwrap();
        let a = st.a_bar();
        prop_assume!(a.abs() > 0.05);
        prop_assert_eq!(o.infinite, a < 0.0, "a_bar={} {:?}", a, o);
    }

    #[test]
    fn pooled_excess_consistent_with_direct_density(r in 0.5f64..1e3, y0 in -3f64..3.0, y1 in -3f64..3.0) {
        let st = stats();
        let y = [y0, y1];
        let p = st.posterior(r).unwrap();
        let nu = 2.0 * p.alpha;
        let c = p.beta / p.alpha;
        let d: Vec<f64> = y.iter().map(|v| v - st.xbar).collect();
        let s1 = d[0] + d[1];
        let s2 = d[0] * d[0] + d[1] * d[1];
        let q = (s2 - s1 * s1 / (r + 2.0)) / c;
        let direct = statrs::function::gamma::ln_gamma(0.5 * (nu + 2.0)) - statrs::function::gamma::ln_gamma(0.5 * nu)
            - (nu * std::f64::consts::PI).ln() - c.ln() - 0.5 * (1.0 + 2.0 / r).ln()
            - 0.5 * (nu + 2.0) * (1.0 + q / nu).ln();
        let got = st.pooled_log_predictive(&y, r).unwrap();
        prop_assert!((got - direct).abs() < 1e-9, "{} vs {}", got, direct);
    }
}

#[test]
fn prior_moment_map() {
    let (a, b) = ig_prior_from_moments(1.0, 0.1);
    assert!((a - 12.0).abs() < 1e-12 && (b - 11.0).abs() < 1e-12);
    let mean = b / (a - 1.0);
    let var = b * b / ((a - 1.0).powi(2) * (a - 2.0));
    assert!((mean - 1.0).abs() < 1e-12 && (var - 0.1).abs() < 1e-12);
}

#[test]
fn interior_table_product_columns() {
    let row = interior_probability(1.0, 0.1, 10, 10, 100_000, 11).unwrap();
    assert!((row.p_product - 0.72).abs() < 0.005, "{row:?}");
    let row = interior_probability(2.0, 4.0, 10, 10, 100_000, 12).unwrap();
    assert!((row.p_product - 0.59).abs() < 0.005, "{row:?}");
    assert!((row.p_elppd - 0.71).abs() < 0.005, "{row:?}");
}

// A 10^6-replicate run gives 0.9346 ± 0.0003 for this cell, just outside ±0.005 of the tabulated 0.94.
#[test]
#[ignore = "tabulated 0.94 is not reproduced to ±0.005; the reproduced value is 0.9346"]
fn interior_table_elppd_tight_column() {
    let row = interior_probability(1.0, 0.1, 10, 10, 100_000, 11).unwrap();
    assert!((row.p_elppd - 0.94).abs() < 0.005, "{row:?}");
}

#[test]
fn interior_probability_is_deterministic() {
    let a = interior_probability(0.5, 0.1, 10, 10, 2000, 5).unwrap();
    let b = interior_probability(0.5, 0.1, 10, 10, 2000, 5).unwrap();
    assert_eq!(a, b);
}

#[test]
fn interior_probabilities_approach_half_at_large_n() {
    let row = interior_probability(1.0, 1.0, 2000, 10, 20_000, 9).unwrap();
    assert!((row.p_elppd - 0.5).abs() < 0.03, "{row:?}");
}
