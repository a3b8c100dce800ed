//! Seeded random field generators shared by tests, property checks and
//! calibration sweeps.

#![doc(hidden)]

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::error::Result;
use crate::field::Field;
use crate::ops::SpectralWorkspace;

/// Random band-limited field: modes |m_axis| <= kmax with a mild spectral
/// rolloff, realified, physical representation.
pub fn random_smooth_field(
    ws: &SpectralWorkspace,
    n_comp: usize,
    kmax: i64,
    seed: u64,
) -> Result<Field> {
    let grid = ws.grid();
    let n = grid.resolution();
    let modes = grid.mode_numbers();
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut comps = Vec::with_capacity(n_comp);
    for _ in 0..n_comp {
        let mut hat = vec![Complex64::default(); grid.n_points()];
        let mut idx = 0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let (mi, mj, mk) = (modes[i], modes[j], modes[k]);
                    if mi.abs() <= kmax && mj.abs() <= kmax && mk.abs() <= kmax {
                        let m2 = (mi * mi + mj * mj + mk * mk) as f64;
                        let roll = (-0.15 * m2).exp();
                        let a: f64 = rng.gen_range(-1.0..1.0);
                        let b: f64 = rng.gen_range(-1.0..1.0);
                        hat[idx] = Complex64::new(a, b) * roll;
                    }
                    idx += 1;
                }
            }
        }
        comps.push(hat);
    }
    let spec = Field::from_spectral(grid, comps)?;
    // drop the imaginary part: equivalent to Hermitian symmetrization
    let phys = ws.to_physical(&spec)?;
    ws.to_spectral(&phys).and_then(|h| ws.to_physical(&h))
}

/// Random smooth divergence-free vector field, physical representation.
pub fn random_divfree_field(ws: &SpectralWorkspace, kmax: i64, seed: u64) -> Result<Field> {
    let f = random_smooth_field(ws, 3, kmax, seed)?;
    let mut hat = ws.leray_project(&f)?;
    for c in hat.spectral_mut()? {
        c[0] = Complex64::default();
    }
    ws.to_physical(&hat)
}
