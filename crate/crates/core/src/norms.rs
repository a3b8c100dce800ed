//! Lebesgue and mixed space-time norms.
//!
//! Spatial norms are volume-weighted Riemann sums of the pointwise Euclidean
//! magnitude; p = inf is the grid max. Time integrals use the trapezoidal
//! rule on the stored slices; l = inf is the sup over slices.

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::field::{Field, FieldHistory};

/// Pair (s, l) of spatial/temporal exponents, infinity allowed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixedNormSpec {
    pub spatial: f64,
    pub temporal: f64,
}

impl MixedNormSpec {
    pub fn new(spatial: f64, temporal: f64) -> Result<Self> {
        if !(spatial >= 1.0) {
            return Err(CoreError::InvalidExponent(spatial));
        }
        if !(temporal >= 1.0) {
            return Err(CoreError::InvalidExponent(temporal));
        }
        Ok(Self { spatial, temporal })
    }

    /// Space-time L_p with equal exponents.
    pub fn diagonal(p: f64) -> Result<Self> {
        Self::new(p, p)
    }

    pub fn sup_in_time(spatial: f64) -> Result<Self> {
        Self::new(spatial, f64::INFINITY)
    }
}

/// L_p norm of a field over the box (physical representation required).
pub fn lp_norm(f: &Field, p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(CoreError::InvalidExponent(p));
    }
    let mag = f.magnitude()?;
    if p.is_infinite() {
        return Ok(mag.iter().fold(0.0_f64, |m, &v| m.max(v)));
    }
    let dv = f.grid().cell_volume();
    if p == 2.0 {
        let s: f64 = mag.iter().map(|&v| v * v).sum();
        return Ok((s * dv).sqrt());
    }
    let s: f64 = mag.iter().map(|&v| v.powf(p)).sum();
    Ok((s * dv).powf(1.0 / p))
}

/// L_p norm restricted to an axis-aligned sub-box given by half-open index
/// ranges per axis (used for the L_{p,loc} distances on a compact set).
pub fn lp_norm_subbox(f: &Field, p: f64, lo: [usize; 3], hi: [usize; 3]) -> Result<f64> {
    if !(p >= 1.0) || p.is_infinite() {
        return Err(CoreError::InvalidExponent(p));
    }
    let comps = f.physical()?;
    let n = f.grid().resolution();
    let dv = f.grid().cell_volume();
    let mut acc = 0.0;
    for i in lo[0]..hi[0] {
        for j in lo[1]..hi[1] {
            for k in lo[2]..hi[2] {
                let idx = (i * n + j) * n + k;
                let mut m2 = 0.0;
                for c in comps {
                    m2 += c[idx] * c[idx];
                }
                acc += m2.sqrt().powf(p);
            }
        }
    }
    Ok((acc * dv).powf(1.0 / p))
}

/// Squared L2 norm from spectral coefficients (Parseval route).
pub fn l2_norm_sq_spectral(f: &Field) -> Result<f64> {
    let comps = f.spectral()?;
    let n3 = f.grid().n_points() as f64;
    let mut acc = 0.0;
    for c in comps {
        for v in c {
            acc += v.norm_sqr();
        }
    }
    Ok(acc * f.grid().volume() / (n3 * n3))
}

/// Trapezoidal quadrature of per-slice values a(t_i) raised to power l.
fn time_integral(times: &[f64], values: &[f64], l: f64) -> f64 {
    let mut acc = 0.0;
    for i in 1..times.len() {
        let dt = times[i] - times[i - 1];
        acc += 0.5 * dt * (values[i - 1].powf(l) + values[i].powf(l));
    }
    acc
}

/// Mixed space-time norm ( int |u(t)|_s^l dt )^{1/l}; sup over slices when
/// l = inf. Requires at least two slices for finite l.
pub fn mixed_norm(h: &FieldHistory, spec: MixedNormSpec) -> Result<f64> {
    per_slice_mixed(h, spec, |f| lp_norm(f, spec.spatial))
}

/// Mixed norm restricted to a spatial sub-box.
pub fn mixed_norm_subbox(
    h: &FieldHistory,
    spec: MixedNormSpec,
    lo: [usize; 3],
    hi: [usize; 3],
) -> Result<f64> {
    per_slice_mixed(h, spec, |f| lp_norm_subbox(f, spec.spatial, lo, hi))
}

fn per_slice_mixed(
    h: &FieldHistory,
    spec: MixedNormSpec,
    slice_norm: impl Fn(&Field) -> Result<f64>,
) -> Result<f64> {
    if h.is_empty() {
        return Err(CoreError::EmptyHistory);
    }
    let values = h
        .slices()
        .iter()
        .map(&slice_norm)
        .collect::<Result<Vec<f64>>>()?;
    if spec.temporal.is_infinite() {
        return Ok(values.iter().fold(0.0_f64, |m, &v| m.max(v)));
    }
    if h.len() < 2 {
        return Err(CoreError::TooFewTimes {
            needed: 2,
            got: h.len(),
        });
    }
    let times = h.times();
    Ok(time_integral(&times, &values, spec.temporal).powf(1.0 / spec.temporal))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;

    fn grid() -> Grid {
        Grid::new(2.0 * std::f64::consts::PI, 16).unwrap()
    }

    #[test]
    fn zero_field_has_zero_norm() {
        let f = Field::zeros(grid(), 3);
        for &p in &[1.0, 2.0, 3.0, 5.0, f64::INFINITY] {
            assert_eq!(lp_norm(&f, p).unwrap(), 0.0);
        }
    }

    #[test]
    fn constant_field_closed_form() {
        let g = grid();
        let c = 2.5;
        let f = Field::from_fn(g, 1, |_, _| c);
        for &p in &[1.0, 2.0, 3.0, 5.0] {
            let expect = c * g.volume().powf(1.0 / p);
            let got = lp_norm(&f, p).unwrap();
            assert!((got - expect).abs() < 1e-12 * expect, "p={p}: {got} vs {expect}");
        }
        assert!((lp_norm(&f, f64::INFINITY).unwrap() - c).abs() < 1e-15);
    }

    #[test]
    fn sine_mode_l2_closed_form() {
        let g = grid();
        let l = g.box_length();
        let f = Field::from_fn(g, 3, |x, c| {
            if c == 0 {
                (2.0 * std::f64::consts::PI * x[0] / l).sin()
            } else {
                0.0
            }
        });
        // |sin(2 pi x / L)|_2 over the box = L^{3/2} / sqrt(2)
        let expect = l.powf(1.5) / 2.0_f64.sqrt();
        let got = lp_norm(&f, 2.0).unwrap();
        assert!((got - expect).abs() < 1e-10 * expect, "{got} vs {expect}");
    }

    #[test]
    fn rejects_p_below_one() {
        let f = Field::zeros(grid(), 1);
        assert!(matches!(lp_norm(&f, 0.5), Err(CoreError::InvalidExponent(_))));
    }

    #[test]
    fn mixed_norm_of_linear_ramp() {
        // a(t) = t on [0,1] with spec (2,2): |u0|_2 / sqrt(3).
        let g = grid();
        let u0 = Field::from_fn(g, 1, |x, _| (x[0]).sin() + 0.3 * (2.0 * x[1]).cos());
        let base = lp_norm(&u0, 2.0).unwrap();
        let nsteps = 400;
        let slices: Vec<Field> = (0..=nsteps)
            .map(|i| {
                let t = i as f64 / nsteps as f64;
                u0.scaled(t).with_time(t)
            })
            .collect();
        let h = FieldHistory::new(slices).unwrap();
        let got = mixed_norm(&h, MixedNormSpec::new(2.0, 2.0).unwrap()).unwrap();
        let expect = base / 3.0_f64.sqrt();
        assert!((got - expect).abs() < 1e-3 * expect, "{got} vs {expect}");
    }

    #[test]
    fn mixed_norm_sup_of_constant_history() {
        let g = grid();
        let u0 = Field::from_fn(g, 1, |x, _| x[0].sin());
        let slices: Vec<Field> = (0..4).map(|i| u0.clone().with_time(i as f64)).collect();
        let h = FieldHistory::new(slices).unwrap();
        let got = mixed_norm(&h, MixedNormSpec::sup_in_time(3.0).unwrap()).unwrap();
        let expect = lp_norm(&u0, 3.0).unwrap();
        assert!((got - expect).abs() < 1e-14);
    }

    #[test]
    fn finite_l_needs_two_slices() {
        let g = grid();
        let h = FieldHistory::new(vec![Field::zeros(g, 1)]).unwrap();
        assert!(mixed_norm(&h, MixedNormSpec::diagonal(2.0).unwrap()).is_err());
        assert!(mixed_norm(&h, MixedNormSpec::sup_in_time(2.0).unwrap()).is_ok());
    }
}
