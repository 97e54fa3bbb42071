pub mod optimize;
pub mod quad;
pub mod spline;
pub mod stats;

pub use optimize::{golden_section_max, multistart_max};
pub use quad::{gauss_hermite, gauss_legendre, trapezoid, CompositeRule};
pub use spline::{GridSpline2, NaturalSpline};
pub use stats::{
    five_number_mean, ks_one_sample, ks_two_sample, log_mean_exp, log_sum_exp,
    log_weighted_sum_exp, mean, median, ols_slope, quantile_sorted, variance,
};
