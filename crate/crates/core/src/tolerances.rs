//! Frozen numerical tolerances and calibrated constants.
//!
//! Everything the verification suites compare against lives here, with its
//! origin: either a floating-point accuracy budget or a calibration run.

/// Round-trip and algebraic identities that are exact up to accumulated
/// f64 rounding (FFT round trips, projection idempotence, Parseval).
pub const EXACT_SPECTRAL: f64 = 1e-12;

/// Identities composed of a few exact operations (div grad vs laplacian).
pub const COMPOSED_SPECTRAL: f64 = 1e-10;

/// Two independent discrete formulations of one smooth quantity
/// (advective form vs divergence form of transport).
pub const DUAL_ROUTE: f64 = 1e-8;

/// Divergence-free check: max|div u| <= this times max|grad u|.
pub const DIVERGENCE_FREE: f64 = 1e-10;

/// Mean preservation under mollification.
pub const MEAN_PRESERVATION: f64 = 1e-12;

/// Slack multiplier for the L_p contraction of the Gaussian mollifier.
pub const CONTRACTION_SLACK: f64 = 1e-8;

/// Default Picard convergence tolerance in the (5,5) mixed norm.
pub const PICARD_TOL: f64 = 1e-8;

/// One-sided slack on fitted decay exponents of the linear theory.
pub const DECAY_SLOPE_SLACK: f64 = 0.07;

/// Slack on the fitted small-T exponent of the correction energy.
pub const ENERGY_EXPONENT_SLACK: f64 = 0.1;

/// Slack on fitted force-split exponents (one-sided).
pub const FORCE_EXPONENT_SLACK: f64 = 0.1;

/// Base global-energy tolerance at resolution 64; relaxed x10 per halving.
pub const ENERGY_EPS_BASE: f64 = 1e-6;

/// Resolution at which `ENERGY_EPS_BASE` applies.
pub const ENERGY_EPS_BASE_RESOLUTION: usize = 64;

/// Energy tolerance for a run at the given resolution.
pub fn energy_eps(resolution: usize) -> f64 {
    let mut eps = ENERGY_EPS_BASE;
    let mut n = ENERGY_EPS_BASE_RESOLUTION;
    while n > resolution.max(1) {
        eps *= 10.0;
        n /= 2;
    }
    eps
}

/// Empirical bound constant of the Duhamel operator on the box,
/// (|Gw|_{3,inf} + |Gw|_5) / |F|_{5/2}, measured over random smooth tensor
/// families at resolutions 16-48 (max observed ratio 0.285) and frozen with
/// a 1.75x safety factor. See the calibration test in `mild`.
pub const DUHAMEL_BOUND_CONSTANT: f64 = 0.50;

/// Smallness threshold kappa(T) <= 1/(16 c) with the calibrated constant.
pub const PICARD_KAPPA_THRESHOLD: f64 = 1.0 / (16.0 * DUHAMEL_BOUND_CONSTANT);

/// Dyadic horizon search window for `select_horizon`.
pub const HORIZON_T_MIN: f64 = 1e-6;
pub const HORIZON_T_MAX: f64 = 16.0;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn energy_eps_relaxes_with_coarsening() {
        assert_eq!(energy_eps(64), 1e-6);
        assert!((energy_eps(32) - 1e-5).abs() < 1e-18);
        assert!((energy_eps(16) - 1e-4).abs() < 1e-17);
        assert_eq!(energy_eps(128), 1e-6);
    }
}
