//! Property tests for the norm and mollification invariants that must hold
//! for every generated field, not just hand-picked ones.

use proptest::prelude::*;

use critl3_core::mollify::Mollifier;
use critl3_core::norms::{l2_norm_sq_spectral, lp_norm};
use critl3_core::testkit::random_smooth_field;
use critl3_core::{Grid, SpectralWorkspace};

fn workspace() -> SpectralWorkspace {
    SpectralWorkspace::new(Grid::new(2.0 * std::f64::consts::PI, 16).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn interpolation_l4_between_l3_l5(seed in 0u64..1_000_000, kmax in 1i64..5, amp in 0.01f64..50.0) {
        let ws = workspace();
        let u = random_smooth_field(&ws, 3, kmax, seed).unwrap().scaled(amp);
        let n4 = lp_norm(&u, 4.0).unwrap();
        let n3 = lp_norm(&u, 3.0).unwrap();
        let n5 = lp_norm(&u, 5.0).unwrap();
        prop_assert!(n4 <= n3.powf(0.375) * n5.powf(0.625) * (1.0 + 1e-12));
    }

    #[test]
    fn gaussian_mollifier_contracts_every_norm(seed in 0u64..1_000_000, rho in 0.01f64..1.5) {
        let ws = workspace();
        let u = random_smooth_field(&ws, 3, 5, seed).unwrap();
        let mu = ws.mollify(&u, &Mollifier::gaussian(rho)).unwrap();
        for p in [1.0, 2.0, 3.0, 5.0, f64::INFINITY] {
            let a = lp_norm(&mu, p).unwrap();
            let b = lp_norm(&u, p).unwrap();
            prop_assert!(a <= b * (1.0 + 1e-8), "p={p}: {a} > {b}");
        }
    }

    #[test]
    fn parseval_for_random_fields(seed in 0u64..1_000_000) {
        let ws = workspace();
        let u = random_smooth_field(&ws, 3, 5, seed).unwrap();
        let l2 = lp_norm(&u, 2.0).unwrap();
        let spectral = l2_norm_sq_spectral(&ws.to_spectral(&u).unwrap()).unwrap();
        prop_assert!((l2 * l2 - spectral).abs() <= 1e-10 * (l2 * l2).max(1e-30));
    }

    #[test]
    fn transform_round_trip(seed in 0u64..1_000_000, kmax in 1i64..5) {
        let ws = workspace();
        let u = random_smooth_field(&ws, 3, kmax, seed).unwrap();
        let back = ws.to_physical(&ws.to_spectral(&u).unwrap()).unwrap();
        let scale = lp_norm(&u, f64::INFINITY).unwrap();
        let err = lp_norm(&back.sub(&u).unwrap(), f64::INFINITY).unwrap();
        prop_assert!(err <= 1e-12 * scale.max(1e-30));
    }
}
