//! Random-walk Metropolis with scale adaptation during burn-in only.

use gbcal_core::{rng_from_seed, Real};
use rand::Rng;

use crate::chain::{Chain, ChainConfig};
use crate::error::{Result, SamplerError};

fn to_f64<T: Real>(x: &[T]) -> Vec<f64> {
    x.iter().map(|v| v.f64()).collect()
}

/// Robbins-Monro gain for the `t`-th adaptation step.
pub(crate) fn rm_gain(t: usize, window: usize) -> f64 {
    (1.0 + t as f64 / window as f64).powf(-0.6)
}

/// Joint Gaussian random walk. Burn-in adapts a global scale toward `target_accept`
/// and, after each window, per-coordinate scales to the running posterior sd.
pub fn adaptive_rwm<T: Real>(
    log_target: impl Fn(&[T]) -> T,
    config: &ChainConfig,
) -> Result<Chain<T>> {
    config.validate()?;
    let d = config.init.len();
    let mut rng = rng_from_seed(config.seed);
    let mut x: Vec<T> = config.init.iter().map(|&v| T::c(v)).collect();
    let mut lp = log_target(&x);
    if !lp.is_finite() {
        return Err(SamplerError::BadInit(config.init.clone()));
    }
    let mut log_lambda = (2.38 / (d as f64).sqrt()).ln();
    let mut coord_sd = vec![1.0; d];
    let (mut w_mean, mut w_m2, mut w_n) = (vec![0.0; d], vec![0.0; d], 0usize);
    let mut window_accepts = 0usize;
    let mut accepted_after = 0usize;
    let mut draws = Vec::with_capacity(config.n_draws());
    let mut trace = Vec::with_capacity(config.n_draws());
    let mut prop = x.clone();
    for it in 0..config.n_iter {
        let lam = log_lambda.exp();
        for k in 0..d {
            prop[k] = x[k] + T::c(lam * coord_sd[k]) * T::std_normal(&mut rng);
        }
        let lq = log_target(&prop);
        if lq.is_nan() {
            return Err(SamplerError::NanTarget {
                iter: it,
                state: to_f64(&prop),
            });
        }
        let log_ratio = (lq - lp).f64();
        let alpha = if log_ratio >= 0.0 {
            1.0
        } else {
            log_ratio.exp()
        };
        let accept = rng.random::<f64>() < alpha;
        if accept {
            x.copy_from_slice(&prop);
            lp = lq;
        }
        if it < config.burn_in {
            log_lambda += rm_gain(it, config.adapt_window) * (alpha - config.target_accept);
            w_n += 1;
            for k in 0..d {
                let v = x[k].f64();
                let delta = v - w_mean[k];
                w_mean[k] += delta / w_n as f64;
                w_m2[k] += delta * (v - w_mean[k]);
            }
            window_accepts += accept as usize;
            if (it + 1) % config.adapt_window == 0 {
                if window_accepts == 0 {
                    log::warn!("no acceptances over adaptation window ending at iteration {it}; proposal scale may have collapsed");
                }
                window_accepts = 0;
                if w_n > 2 * d + 10 {
                    for k in 0..d {
                        let sd = (w_m2[k] / (w_n - 1) as f64).sqrt();
                        if sd.is_finite() && sd > 0.0 {
                            coord_sd[k] = sd;
                        }
                    }
                }
            }
            // Forget the transient from the initial state halfway through burn-in.
            if it + 1 == config.burn_in / 2 && config.burn_in >= 4 * config.adapt_window {
                w_mean.iter_mut().for_each(|v| *v = 0.0);
                w_m2.iter_mut().for_each(|v| *v = 0.0);
                w_n = 0;
            }
        } else {
            accepted_after += accept as usize;
            if (it - config.burn_in + 1) % config.thin == 0 {
                draws.push(x.clone());
                trace.push(lp);
            }
        }
    }
    let kept = (config.n_iter - config.burn_in) as f64;
    let scales = coord_sd.iter().map(|s| s * log_lambda.exp()).collect();
    Ok(Chain::new(
        draws,
        accepted_after as f64 / kept,
        trace,
        config.seed,
        scales,
    ))
}

/// Runs `log_target` on `log` coordinates for the entries flagged in `positive`,
/// adding the log-Jacobian so the chain targets the same distribution.
pub fn log_transformed<'a, T: Real>(
    log_target: impl Fn(&[T]) -> T + 'a,
    positive: &'a [bool],
) -> impl Fn(&[T]) -> T + 'a {
    move |u: &[T]| {
        let mut x = u.to_vec();
        let mut jac = T::zero();
        for (k, &p) in positive.iter().enumerate() {
            if p {
                x[k] = u[k].exp();
                jac += u[k];
            }
        }
        log_target(&x) + jac
    }
}

/// Maps draws on the transformed scale back to the original coordinates.
pub fn back_transform<T: Real>(chain: &mut Chain<T>, positive: &[bool]) {
    for d in chain.draws.iter_mut() {
        for (k, &p) in positive.iter().enumerate() {
            if p {
                d[k] = d[k].exp();
            }
        }
    }
    let fresh = Chain::new(
        std::mem::take(&mut chain.draws),
        chain.accept_rate,
        std::mem::take(&mut chain.log_density_trace),
        chain.seed,
        chain.scales.clone(),
    );
    *chain = fresh;
}
