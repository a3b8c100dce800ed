//! Free-space Oseen kernel machinery.
//!
//! Phi solves lap_y Phi(x,y,t) = Gamma(x-y,t) and decays at infinity; as a
//! function of z = x - y it is radial, Phi = phi(|z|, t) with
//! phi(r, t) = -erf(r / (2 sqrt(t))) / (4 pi r).
//! The kernel
//!   K_mjs = delta_mj d^3 Phi / dy_i dy_i dy_s - d^3 Phi / dy_m dy_j dy_s
//! is assembled from radial derivatives of phi taken by high-order finite
//! differences, plus the analytic gradient of the heat kernel for the trace
//! part. These free-space values never mix with the torus solvers; they meet
//! only inside verification reports.

use serde::Serialize;

use crate::error::{CoreError, Result};
use crate::report::EstimateReport;

const FOUR_PI: f64 = 4.0 * std::f64::consts::PI;

/// Radial profile phi(r, t); even in r, smooth through r = 0.
pub fn phi_profile(r: f64, t: f64) -> f64 {
    let a = 2.0 * t.sqrt();
    let z = (r / a).abs();
    if z < 1e-4 {
        // erf(z)/(r) = (2/(a sqrt(pi))) (1 - z^2/3 + z^4/10 - z^6/42 + ...)
        let z2 = z * z;
        let series = 1.0 - z2 / 3.0 + z2 * z2 / 10.0 - z2 * z2 * z2 / 42.0;
        -series / (2.0 * std::f64::consts::PI.powf(1.5) * a)
    } else {
        -libm::erf(z) / (FOUR_PI * r.abs())
    }
}

/// Heat kernel Gamma(r, t) = (4 pi t)^{-3/2} exp(-r^2 / 4t).
pub fn heat_kernel(r: f64, t: f64) -> f64 {
    (FOUR_PI * t).powf(-1.5) * (-r * r / (4.0 * t)).exp()
}

/// Phi evaluated at a point offset x (the y-dependence enters through x - y).
pub fn oseen_phi(x: [f64; 3], t: f64) -> Result<f64> {
    if t <= 0.0 {
        return Err(CoreError::NonPositiveTime(t));
    }
    let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
    Ok(phi_profile(r, t))
}

/// Newtonian potential of the radial density Gamma(.,t) by direct
/// quadrature: u(r) = -[ (1/r) int_0^r s^2 G ds + int_r^inf s G ds ].
/// Independent oracle for `phi_profile`.
pub fn phi_by_quadrature(r: f64, t: f64, n_panels: usize) -> f64 {
    let r = r.abs().max(1e-12);
    let tail = r + 14.0 * t.sqrt();
    let simpson = |a: f64, b: f64, f: &dyn Fn(f64) -> f64| -> f64 {
        let n = if n_panels % 2 == 0 { n_panels } else { n_panels + 1 };
        let h = (b - a) / n as f64;
        let mut acc = f(a) + f(b);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * f(a + i as f64 * h);
        }
        acc * h / 3.0
    };
    let inner = simpson(0.0, r, &|s| s * s * heat_kernel(s, t));
    let outer = simpson(r, tail, &|s| s * heat_kernel(s, t));
    -(inner / r + outer)
}

/// Fourth-order central differences of a radial profile.
struct RadialDerivs {
    d1: f64,
    d2: f64,
    d3: f64,
}

fn radial_derivs(f: &dyn Fn(f64) -> f64, r: f64, h: f64) -> RadialDerivs {
    let fm3 = f(r - 3.0 * h);
    let fm2 = f(r - 2.0 * h);
    let fm1 = f(r - h);
    let f0 = f(r);
    let fp1 = f(r + h);
    let fp2 = f(r + 2.0 * h);
    let fp3 = f(r + 3.0 * h);
    RadialDerivs {
        d1: (-fp2 + 8.0 * fp1 - 8.0 * fm1 + fm2) / (12.0 * h),
        d2: (-fp2 + 16.0 * fp1 - 30.0 * f0 + 16.0 * fm1 - fm2) / (12.0 * h * h),
        d3: (fm3 - 8.0 * fm2 + 13.0 * fm1 - 13.0 * fp1 + 8.0 * fp2 - fp3) / (8.0 * h * h * h),
    }
}

/// Third Cartesian derivatives of a radial function from its radial
/// derivatives: the standard rank-3 isotropic decomposition.
fn third_derivative_tensor(x: [f64; 3], d: &RadialDerivs, r: f64) -> [[[f64; 3]; 3]; 3] {
    let e = [x[0] / r, x[1] / r, x[2] / r];
    let radial = d.d3 - 3.0 * (d.d2 / r - d.d1 / (r * r));
    let mixed = d.d2 / r - d.d1 / (r * r);
    let mut out = [[[0.0; 3]; 3]; 3];
    for m in 0..3 {
        for j in 0..3 {
            for s in 0..3 {
                let mut v = radial * e[m] * e[j] * e[s];
                if m == j {
                    v += mixed * e[s];
                }
                if m == s {
                    v += mixed * e[j];
                }
                if j == s {
                    v += mixed * e[m];
                }
                out[m][j][s] = v;
            }
        }
    }
    out
}

fn fd_step(r: f64, t: f64) -> f64 {
    1e-3 * r.max(t.sqrt())
}

/// The Oseen tensor K_mjs at offset x and time t > 0.
pub fn oseen_kernel(x: [f64; 3], t: f64) -> Result<[[[f64; 3]; 3]; 3]> {
    oseen_kernel_with_profile(x, t, &|r| phi_profile(r, t))
}

/// Same assembly against an arbitrary radial profile for Phi (used by the
/// quadrature-oracle cross check).
pub fn oseen_kernel_with_profile(
    x: [f64; 3],
    t: f64,
    profile: &dyn Fn(f64) -> f64,
) -> Result<[[[f64; 3]; 3]; 3]> {
    if t <= 0.0 {
        return Err(CoreError::NonPositiveTime(t));
    }
    let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
    if r == 0.0 {
        // K is odd in x, so it vanishes at the origin.
        return Ok([[[0.0; 3]; 3]; 3]);
    }
    let h = fd_step(r, t);
    let d = radial_derivs(profile, r, h);
    let third = third_derivative_tensor(x, &d, r);
    let gamma = heat_kernel(r, t);
    let mut out = [[[0.0; 3]; 3]; 3];
    for m in 0..3 {
        for j in 0..3 {
            for s in 0..3 {
                // delta term: d/dy_s of lap_y Phi = d/dy_s Gamma(x - y)
                //           = + (x - y)_s / (2t) * Gamma
                let trace = if m == j { x[s] / (2.0 * t) * gamma } else { 0.0 };
                out[m][j][s] = trace + third[m][j][s];
            }
        }
    }
    Ok(out)
}

pub fn kernel_max_component(k: &[[[f64; 3]; 3]; 3]) -> f64 {
    let mut m = 0.0_f64;
    for a in k {
        for b in a {
            for &v in b {
                m = m.max(v.abs());
            }
        }
    }
    m
}

/// One evaluated kernel sample with the pointwise bound reference.
#[derive(Debug, Clone, Serialize)]
pub struct OseenKernelSample {
    pub x: [f64; 3],
    pub t: f64,
    pub phi_value: f64,
    #[serde(skip)]
    pub k_tensor: [[[f64; 3]; 3]; 3],
    /// |K| in the max-component norm.
    pub k_max: f64,
    /// 1 / (|x|^2 + t)^2, the shape of the pointwise bound.
    pub k0_bound: f64,
    /// |K| * (|x|^2 + t)^2, constant along parabolic rays.
    pub normalized: f64,
}

pub fn sample_kernel(x: [f64; 3], t: f64) -> Result<OseenKernelSample> {
    let k = oseen_kernel(x, t)?;
    let r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
    let k0 = 1.0 / ((r2 + t) * (r2 + t));
    let k_max = kernel_max_component(&k);
    Ok(OseenKernelSample {
        x,
        t,
        phi_value: oseen_phi(x, t)?,
        k_tensor: k,
        k_max,
        k0_bound: k0,
        normalized: k_max / k0,
    })
}

/// Deterministic sample set: dyadic parabolic shells sqrt(|x|^2 + t) with an
/// identical angle/direction pattern on every shell, so any growth across
/// shells is a genuine failure of scale invariance of the bound.
pub fn kernel_sample_grid(n_shells: usize, n_angles: usize) -> Vec<([f64; 3], f64)> {
    let dirs = [
        [1.0, 0.0, 0.0],
        [0.0, 1.0, 0.0],
        [0.0, 0.0, 1.0],
        [0.577_350_269_189_625_8, 0.577_350_269_189_625_8, 0.577_350_269_189_625_8],
        [std::f64::consts::FRAC_1_SQRT_2, -std::f64::consts::FRAC_1_SQRT_2, 0.0],
        [0.267_261_241_912_424_4, 0.534_522_483_824_848_8, 0.801_783_725_737_273_2],
    ];
    let mut out = Vec::with_capacity(n_shells * n_angles);
    for i in 0..n_shells {
        let rho = 0.08 * 2f64.powi(i as i32);
        for j in 0..n_angles {
            // theta in (0.018, 0.98): fraction of the parabolic radius
            // carried by |x|^2
            let theta = 0.018 + (0.98 - 0.018) * (j as f64 + 0.5) / n_angles as f64;
            let r = rho * theta.sqrt();
            let t = rho * rho * (1.0 - theta);
            let d = dirs[j % dirs.len()];
            out.push(([r * d[0], r * d[1], r * d[2]], t));
        }
    }
    out
}

/// Checks |K(x,t)| (|x|^2 + t)^2 for a growth trend across dyadic shells:
/// pass iff the outer-half sup stays within 1.1x the inner-half sup.
pub fn verify_kernel_bound(samples: &[([f64; 3], f64)]) -> Result<EstimateReport> {
    if samples.is_empty() {
        return Err(CoreError::EmptySampleSet);
    }
    let mut shelled: Vec<(i32, f64)> = Vec::with_capacity(samples.len());
    for &(x, t) in samples {
        let s = sample_kernel(x, t)?;
        let rho = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2] + t).sqrt();
        shelled.push((rho.log2().floor() as i32, s.normalized));
    }
    let mut shells: Vec<i32> = shelled.iter().map(|p| p.0).collect();
    shells.sort_unstable();
    shells.dedup();
    let mid = shells[shells.len() / 2];
    let sup = |pred: &dyn Fn(i32) -> bool| {
        shelled
            .iter()
            .filter(|(s, _)| pred(*s))
            .map(|(_, v)| *v)
            .fold(0.0_f64, f64::max)
    };
    let inner = sup(&|s| s < mid);
    let outer = sup(&|s| s >= mid);
    let pass = outer <= 1.1 * inner;
    Ok(EstimateReport::new("oseen_kernel_bound", outer, inner, pass)
        .with_notes("tensor norm: max over components; shells by sqrt(|x|^2 + t)"))
}
