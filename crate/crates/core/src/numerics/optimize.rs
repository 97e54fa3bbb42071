//! One-dimensional maximisation.

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section search for a maximum of `f` on `[a, b]`; returns `(argmax, max)`.
///
/// When two probes tie the bracket keeps the left one, so flat regions resolve
/// toward the smaller argument.
pub fn golden_section_max(f: impl Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64) -> (f64, f64) {
    let (mut lo, mut hi) = if a <= b { (a, b) } else { (b, a) };
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    let scale = lo.abs().max(hi.abs()).max(1e-12);
    for _ in 0..300 {
        if hi - lo <= rel_tol * scale {
            break;
        }
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        }
    }
    let (mut best_x, mut best_f) = if f1 >= f2 { (x1, f1) } else { (x2, f2) };
    for x in [a.min(b), a.max(b)] {
        let fx = f(x);
        if fx > best_f || (fx == best_f && x < best_x) {
            best_x = x;
            best_f = fx;
        }
    }
    (best_x, best_f)
}

/// Maximises over a bracket by scanning `starts` equal cells and refining the best one.
pub fn multistart_max(
    f: impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    starts: usize,
    rel_tol: f64,
) -> (f64, f64) {
    let n = starts.max(1);
    let pts: Vec<f64> = (0..=2 * n)
        .map(|i| a + (b - a) * i as f64 / (2 * n) as f64)
        .collect();
    let vals: Vec<f64> = pts.iter().map(|&x| f(x)).collect();
    let mut best = 0;
    for i in 1..pts.len() {
        if vals[i] > vals[best] {
            best = i;
        }
    }
    let lo = pts[best.saturating_sub(1)];
    let hi = pts[(best + 1).min(pts.len() - 1)];
    let (x, fx) = golden_section_max(&f, lo, hi, rel_tol);
    if fx >= vals[best] {
        (x, fx)
    } else {
        (pts[best], vals[best])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_quadratic_peak() {
        let (x, fx) = golden_section_max(|t| -(t - 0.3) * (t - 0.3), 0.0, 1.0, 1e-10);
        assert!((x - 0.3).abs() < 1e-8);
        assert!(fx.abs() < 1e-15);
    }

    #[test]
    fn boundary_and_ties() {
        let (x, _) = golden_section_max(|t| t, 0.0, 2.0, 1e-10);
        assert_eq!(x, 2.0);
        let (x, _) = golden_section_max(|_| 1.0, 0.0, 2.0, 1e-10);
        assert_eq!(x, 0.0);
    }

    #[test]
    fn multistart_escapes_local_peak() {
        let f =
            |t: f64| (-(t - 0.1).powi(2) / 0.001).exp() + 2.0 * (-(t - 0.8).powi(2) / 0.001).exp();
        let (x, _) = multistart_max(f, 0.0, 1.0, 20, 1e-10);
        assert!((x - 0.8).abs() < 1e-6);
    }
}
