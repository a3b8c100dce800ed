//! Spectral field algebra on the periodic box: transforms, derivatives,
//! Leray projection, dealiased products and mollification.
//!
//! All operations are pure: they allocate their outputs and never mutate
//! inputs, so a single workspace can be shared across threads.

use num_complex::Complex64;

use crate::error::{CoreError, Result};
use crate::field::{Field, FieldData, Representation};
use crate::fft::Fft3;
use crate::grid::Grid;
use crate::mollify::Mollifier;

pub struct SpectralWorkspace {
    grid: Grid,
    fft: Fft3,
    /// First-derivative wavenumbers (Nyquist zeroed), FFT order.
    kd: Vec<f64>,
    /// |k|^2 at every grid index, Nyquist included.
    ksq: Vec<f64>,
    /// 2/3-rule mask: true where |m_axis| <= N/3 on every axis.
    keep: Vec<bool>,
}

impl SpectralWorkspace {
    pub fn new(grid: Grid) -> Self {
        let n = grid.resolution();
        let kd = grid.deriv_wavenumbers();
        let kfull = grid.wavenumbers();
        let modes = grid.mode_numbers();
        // strict 2/3 rule: 3 * cutoff < n, so quadratic aliases of kept
        // modes can never fold back inside the kept band
        let cutoff = ((n - 1) / 3) as i64;

        let mut ksq = vec![0.0; grid.n_points()];
        let mut keep = vec![false; grid.n_points()];
        let mut idx = 0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    ksq[idx] = kfull[i] * kfull[i] + kfull[j] * kfull[j] + kfull[k] * kfull[k];
                    keep[idx] =
                        modes[i].abs() <= cutoff && modes[j].abs() <= cutoff && modes[k].abs() <= cutoff;
                    idx += 1;
                }
            }
        }
        Self {
            grid,
            fft: Fft3::new(&grid),
            kd,
            ksq,
            keep,
        }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn ksq(&self) -> &[f64] {
        &self.ksq
    }

    fn check_grid(&self, f: &Field) -> Result<()> {
        if f.grid() == self.grid {
            Ok(())
        } else {
            Err(CoreError::GridMismatch)
        }
    }

    // ---------------------------------------------------------------- transforms

    pub fn to_spectral(&self, f: &Field) -> Result<Field> {
        self.check_grid(f)?;
        match f.data() {
            FieldData::Spectral(_) => Ok(f.clone()),
            FieldData::Physical(comps) => {
                let hat = comps
                    .iter()
                    .map(|c| {
                        let mut buf: Vec<Complex64> =
                            c.iter().map(|&v| Complex64::new(v, 0.0)).collect();
                        self.fft.forward(&mut buf);
                        buf
                    })
                    .collect();
                Ok(Field::from_spectral(self.grid, hat)?.with_time(f.time_stamp()))
            }
        }
    }

    pub fn to_physical(&self, f: &Field) -> Result<Field> {
        self.check_grid(f)?;
        match f.data() {
            FieldData::Physical(_) => Ok(f.clone()),
            FieldData::Spectral(comps) => {
                let phys = comps
                    .iter()
                    .map(|c| {
                        let mut buf = c.clone();
                        self.fft.inverse(&mut buf);
                        buf.iter().map(|v| v.re).collect()
                    })
                    .collect();
                Ok(Field::from_physical(self.grid, phys)?.with_time(f.time_stamp()))
            }
        }
    }

    pub fn transform(&self, f: &Field, target: Representation) -> Result<Field> {
        match target {
            Representation::Physical => self.to_physical(f),
            Representation::Spectral => self.to_spectral(f),
        }
    }

    // ---------------------------------------------------------------- derivatives

    /// Multiply one spectral component by i*k_axis.
    fn ik_multiply(&self, hat: &[Complex64], axis: usize) -> Vec<Complex64> {
        let n = self.grid.resolution();
        let mut out = vec![Complex64::default(); hat.len()];
        let mut idx = 0;
        for i in 0..n {
            for j in 0..n {
                let kij = [self.kd[i], self.kd[j]];
                for k in 0..n {
                    let kv = match axis {
                        0 => kij[0],
                        1 => kij[1],
                        _ => self.kd[k],
                    };
                    let v = hat[idx];
                    out[idx] = Complex64::new(-kv * v.im, kv * v.re);
                    idx += 1;
                }
            }
        }
        out
    }

    /// Gradient of a scalar field (1 -> 3 components), spectral output.
    pub fn grad_scalar(&self, f: &Field) -> Result<Field> {
        let hat = self.to_spectral(f)?;
        let c = &hat.spectral()?[0];
        let comps = (0..3).map(|a| self.ik_multiply(c, a)).collect();
        Ok(Field::from_spectral(self.grid, comps)?.with_time(f.time_stamp()))
    }

    /// Jacobian of a vector field (3 -> 9 components, c = 3*i + j holds
    /// d v_i / d x_j), spectral output.
    pub fn gradient(&self, f: &Field) -> Result<Field> {
        let hat = self.to_spectral(f)?;
        let v = hat.spectral()?;
        if v.len() != 3 {
            return Err(CoreError::MalformedField("gradient expects 3 components".into()));
        }
        let mut comps = Vec::with_capacity(9);
        for vi in v.iter() {
            for axis in 0..3 {
                comps.push(self.ik_multiply(vi, axis));
            }
        }
        Ok(Field::from_spectral(self.grid, comps)?.with_time(f.time_stamp()))
    }

    /// Divergence of a vector field (3 -> 1), spectral output.
    pub fn divergence(&self, f: &Field) -> Result<Field> {
        let hat = self.to_spectral(f)?;
        let v = hat.spectral()?;
        if v.len() != 3 {
            return Err(CoreError::MalformedField("divergence expects 3 components".into()));
        }
        let mut out = self.ik_multiply(&v[0], 0);
        for (axis, vc) in v.iter().enumerate().skip(1) {
            let d = self.ik_multiply(vc, axis);
            for (o, dv) in out.iter_mut().zip(d) {
                *o += dv;
            }
        }
        Ok(Field::from_spectral(self.grid, vec![out])?.with_time(f.time_stamp()))
    }

    /// Row divergence of a rank-2 tensor (9 -> 3): out_i = d_j T_{ij}.
    pub fn div_tensor(&self, f: &Field) -> Result<Field> {
        let hat = self.to_spectral(f)?;
        let t = hat.spectral()?;
        if t.len() != 9 {
            return Err(CoreError::MalformedField("div_tensor expects 9 components".into()));
        }
        let mut comps = Vec::with_capacity(3);
        for i in 0..3 {
            let mut out = self.ik_multiply(&t[3 * i], 0);
            for j in 1..3 {
                let d = self.ik_multiply(&t[3 * i + j], j);
                for (o, dv) in out.iter_mut().zip(d) {
                    *o += dv;
                }
            }
            comps.push(out);
        }
        Ok(Field::from_spectral(self.grid, comps)?.with_time(f.time_stamp()))
    }

    /// Spectral Laplacian, any component count.
    pub fn laplacian(&self, f: &Field) -> Result<Field> {
        let hat = self.to_spectral(f)?;
        let comps = hat
            .spectral()?
            .iter()
            .map(|c| {
                c.iter()
                    .zip(&self.ksq)
                    .map(|(v, &k2)| -k2 * v)
                    .collect()
            })
            .collect();
        Ok(Field::from_spectral(self.grid, comps)?.with_time(f.time_stamp()))
    }

    // ---------------------------------------------------------------- projection

    /// Orthogonal projection onto divergence-free fields, spectral output.
    /// The zero mode (a constant, trivially divergence-free) passes through.
    pub fn leray_project(&self, f: &Field) -> Result<Field> {
        let hat = self.to_spectral(f)?;
        let v = hat.spectral()?;
        if v.len() != 3 {
            return Err(CoreError::MalformedField("leray_project expects 3 components".into()));
        }
        let n = self.grid.resolution();
        let mut out = vec![vec![Complex64::default(); self.grid.n_points()]; 3];
        let mut idx = 0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let kv = [self.kd[i], self.kd[j], self.kd[k]];
                    let k2 = kv[0] * kv[0] + kv[1] * kv[1] + kv[2] * kv[2];
                    let u = [v[0][idx], v[1][idx], v[2][idx]];
                    if k2 == 0.0 {
                        for c in 0..3 {
                            out[c][idx] = u[c];
                        }
                    } else {
                        let kdotu = kv[0] * u[0] + kv[1] * u[1] + kv[2] * u[2];
                        let s = kdotu / k2;
                        for c in 0..3 {
                            out[c][idx] = u[c] - kv[c] * s;
                        }
                    }
                    idx += 1;
                }
            }
        }
        Ok(Field::from_spectral(self.grid, out)?.with_time(f.time_stamp()))
    }

    // ---------------------------------------------------------------- dealiasing

    pub fn mask_spectral_comp(&self, c: &mut [Complex64]) {
        for (v, &k) in c.iter_mut().zip(&self.keep) {
            if !k {
                *v = Complex64::default();
            }
        }
    }

    /// 2/3-rule truncation; output in the representation of the input.
    pub fn dealias(&self, f: &Field) -> Result<Field> {
        let mut hat = self.to_spectral(f)?;
        for c in hat.spectral_mut()? {
            self.mask_spectral_comp(c);
        }
        match f.representation() {
            Representation::Spectral => Ok(hat),
            Representation::Physical => self.to_physical(&hat),
        }
    }

    // ---------------------------------------------------------------- products

    /// Advective derivative (w . grad) u with dealiased factors, physical output.
    pub fn advect(&self, w: &Field, u: &Field) -> Result<Field> {
        self.check_grid(w)?;
        self.check_grid(u)?;
        w.same_grid(u)?;
        let w_phys = self.to_physical(&self.dealias(w)?)?;
        let grad_u = self.to_physical(&self.dealias(&self.gradient(u)?)?)?;
        let wp = w_phys.physical()?;
        let gp = grad_u.physical()?;
        let n3 = self.grid.n_points();
        let mut comps = vec![vec![0.0; n3]; 3];
        for i in 0..3 {
            let out = &mut comps[i];
            for j in 0..3 {
                let g = &gp[3 * i + j];
                let wj = &wp[j];
                for ((o, &gv), &wv) in out.iter_mut().zip(g).zip(wj) {
                    *o += wv * gv;
                }
            }
        }
        Ok(Field::from_physical(self.grid, comps)?.with_time(u.time_stamp()))
    }

    /// Outer product a (x) b (3,3 -> 9 components, c = 3*i + j = a_i b_j),
    /// dealiased factors, physical output.
    pub fn outer(&self, a: &Field, b: &Field) -> Result<Field> {
        self.check_grid(a)?;
        a.same_grid(b)?;
        let ap = self.to_physical(&self.dealias(a)?)?;
        let bp = self.to_physical(&self.dealias(b)?)?;
        let av = ap.physical()?;
        let bv = bp.physical()?;
        let n3 = self.grid.n_points();
        let mut comps = Vec::with_capacity(9);
        for i in 0..3 {
            for j in 0..3 {
                let mut c = vec![0.0; n3];
                for ((o, &x), &y) in c.iter_mut().zip(&av[i]).zip(&bv[j]) {
                    *o = x * y;
                }
                comps.push(c);
            }
        }
        Ok(Field::from_physical(self.grid, comps)?.with_time(a.time_stamp()))
    }

    /// Symmetric outer-product spectrum of a physical vector field:
    /// returns the six transforms of v_i v_j in the order
    /// (00, 11, 22, 01, 02, 12), masked by the 2/3 rule.
    pub(crate) fn sym_outer_hat(&self, v: &Field) -> Result<Vec<Vec<Complex64>>> {
        let vp = v.physical()?;
        if vp.len() != 3 {
            return Err(CoreError::MalformedField("sym_outer_hat expects 3 components".into()));
        }
        let pairs = [(0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2)];
        let mut out = Vec::with_capacity(6);
        for (i, j) in pairs {
            let mut buf: Vec<Complex64> = vp[i]
                .iter()
                .zip(&vp[j])
                .map(|(&a, &b)| Complex64::new(a * b, 0.0))
                .collect();
            self.fft.forward(&mut buf);
            self.mask_spectral_comp(&mut buf);
            out.push(buf);
        }
        Ok(out)
    }

    /// Row divergence of a symmetric tensor given by sym_outer_hat output.
    pub(crate) fn div_from_sym_hat(&self, t: &[Vec<Complex64>]) -> Vec<Vec<Complex64>> {
        // index map: T[i][j] with (00,11,22,01,02,12)
        const MAP: [[usize; 3]; 3] = [[0, 3, 4], [3, 1, 5], [4, 5, 2]];
        let n = self.grid.resolution();
        let mut comps = vec![vec![Complex64::default(); self.grid.n_points()]; 3];
        let mut idx = 0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let kv = [self.kd[i], self.kd[j], self.kd[k]];
                    for row in 0..3 {
                        let mut acc = Complex64::default();
                        for col in 0..3 {
                            let tv = t[MAP[row][col]][idx];
                            acc += Complex64::new(-kv[col] * tv.im, kv[col] * tv.re);
                        }
                        comps[row][idx] = acc;
                    }
                    idx += 1;
                }
            }
        }
        comps
    }

    /// Pressure spectrum of -lap(p) = div div T for a symmetric tensor
    /// spectrum; zero mean.
    pub(crate) fn pressure_from_sym_hat(&self, t: &[Vec<Complex64>]) -> Vec<Complex64> {
        const MAP: [[usize; 3]; 3] = [[0, 3, 4], [3, 1, 5], [4, 5, 2]];
        let n = self.grid.resolution();
        let mut out = vec![Complex64::default(); self.grid.n_points()];
        let mut idx = 0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let kv = [self.kd[i], self.kd[j], self.kd[k]];
                    let k2 = kv[0] * kv[0] + kv[1] * kv[1] + kv[2] * kv[2];
                    if k2 > 0.0 {
                        let mut acc = Complex64::default();
                        for r in 0..3 {
                            for c in 0..3 {
                                acc += kv[r] * kv[c] * t[MAP[r][c]][idx];
                            }
                        }
                        out[idx] = -acc / k2;
                    }
                    idx += 1;
                }
            }
        }
        out
    }

    /// Leray projection applied in place to three spectral components.
    pub(crate) fn project_hat(&self, v: &mut [Vec<Complex64>]) {
        let n = self.grid.resolution();
        let mut idx = 0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let kv = [self.kd[i], self.kd[j], self.kd[k]];
                    let k2 = kv[0] * kv[0] + kv[1] * kv[1] + kv[2] * kv[2];
                    if k2 > 0.0 {
                        let kdotu = kv[0] * v[0][idx] + kv[1] * v[1][idx] + kv[2] * v[2][idx];
                        let s = kdotu / k2;
                        v[0][idx] -= kv[0] * s;
                        v[1][idx] -= kv[1] * s;
                        v[2][idx] -= kv[2] * s;
                    }
                    idx += 1;
                }
            }
        }
    }

    // ---------------------------------------------------------------- mollification

    /// Convolution with the mollifier kernel, applied as a spectral
    /// multiplier; output in the representation of the input.
    pub fn mollify(&self, f: &Field, m: &Mollifier) -> Result<Field> {
        if m.radius() >= self.grid.box_length() / 4.0 {
            return Err(CoreError::RadiusTooLarge {
                radius: m.radius(),
                box_length: self.grid.box_length(),
            });
        }
        let mut hat = self.to_spectral(f)?;
        for c in hat.spectral_mut()? {
            for (v, &k2) in c.iter_mut().zip(&self.ksq) {
                *v *= m.symbol(k2);
            }
        }
        match f.representation() {
            Representation::Spectral => Ok(hat),
            Representation::Physical => self.to_physical(&hat),
        }
    }

    // ---------------------------------------------------------------- diagnostics

    /// max |div u| on the grid (u a 3-component field).
    pub fn divergence_max(&self, f: &Field) -> Result<f64> {
        let d = self.to_physical(&self.divergence(f)?)?;
        Ok(d.physical()?[0].iter().fold(0.0_f64, |m, &v| m.max(v.abs())))
    }

    /// max pointwise Frobenius magnitude of the Jacobian of u.
    pub fn gradient_max(&self, f: &Field) -> Result<f64> {
        let g = self.to_physical(&self.gradient(f)?)?;
        Ok(g.magnitude()?.iter().fold(0.0_f64, |m, &v| m.max(v)))
    }

    /// L2 inner product of two physical fields with matching components.
    pub fn inner_l2(&self, a: &Field, b: &Field) -> Result<f64> {
        a.same_grid(b)?;
        let ap = self.to_physical(a)?;
        let bp = self.to_physical(b)?;
        let av = ap.physical()?;
        let bv = bp.physical()?;
        if av.len() != bv.len() {
            return Err(CoreError::MalformedField("component count mismatch".into()));
        }
        let mut acc = 0.0;
        for (ac, bc) in av.iter().zip(bv) {
            for (&x, &y) in ac.iter().zip(bc) {
                acc += x * y;
            }
        }
        Ok(acc * self.grid.cell_volume())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::FieldHistory;
    use crate::norms::{l2_norm_sq_spectral, lp_norm, mixed_norm, MixedNormSpec};
    use crate::testkit::{random_divfree_field, random_smooth_field};
    use crate::tolerances;

    fn ws(n: usize) -> SpectralWorkspace {
        SpectralWorkspace::new(Grid::new(2.0 * std::f64::consts::PI, n).unwrap())
    }

    #[test]
    fn constant_field_transforms_to_pure_zero_mode() {
        let ws = ws(16);
        let c = 1.75;
        let f = Field::from_fn(ws.grid(), 1, |_, _| c);
        let hat = ws.to_spectral(&f).unwrap();
        let h = &hat.spectral().unwrap()[0];
        let n3 = ws.grid().n_points() as f64;
        assert!((h[0].re - c * n3).abs() < 1e-9 * n3);
        let leak = h[1..].iter().map(|v| v.norm()).fold(0.0_f64, f64::max);
        assert!(leak < 1e-9);
    }

    #[test]
    fn sine_mode_transforms_to_conjugate_pair() {
        let ws = ws(16);
        let g = ws.grid();
        let f = Field::from_fn(g, 3, |x, c| if c == 0 { x[0].sin() } else { 0.0 });
        let hat = ws.to_spectral(&f).unwrap();
        let h = &hat.spectral().unwrap()[0];
        let n = g.resolution();
        let n3 = g.n_points() as f64;
        // sin(x): modes m = +-1 on axis 0 with amplitude -+ i/2 * N^3
        let plus = h[(1 * n + 0) * n + 0];
        let minus = h[((n - 1) * n + 0) * n + 0];
        assert!((plus.im + 0.5 * n3).abs() < 1e-9 * n3, "plus {plus}");
        assert!((minus.im - 0.5 * n3).abs() < 1e-9 * n3, "minus {minus}");
        let energy: f64 = h.iter().map(|v| v.norm_sqr()).sum();
        let pair = plus.norm_sqr() + minus.norm_sqr();
        assert!((energy - pair) < 1e-12 * energy);
    }

    #[test]
    fn round_trip_on_random_field() {
        let ws = ws(32);
        let f = random_smooth_field(&ws, 3, 9, 42).unwrap();
        let back = ws
            .to_physical(&ws.to_spectral(&f).unwrap())
            .unwrap();
        let scale = lp_norm(&f, f64::INFINITY).unwrap();
        let err = lp_norm(&back.sub(&f).unwrap(), f64::INFINITY).unwrap();
        assert!(err <= tolerances::EXACT_SPECTRAL * scale, "err {err}");
    }

    #[test]
    fn transform_rejects_mismatched_grid() {
        let ws = ws(16);
        let other = Grid::new(1.0, 16).unwrap();
        let f = Field::zeros(other, 3);
        assert!(matches!(
            ws.to_spectral(&f),
            Err(CoreError::GridMismatch)
        ));
    }

    #[test]
    fn parseval_identity() {
        let ws = ws(32);
        for seed in [1u64, 2, 3] {
            let f = random_smooth_field(&ws, 3, 10, seed).unwrap();
            let l2 = lp_norm(&f, 2.0).unwrap();
            let spec = l2_norm_sq_spectral(&ws.to_spectral(&f).unwrap()).unwrap();
            assert!(
                (l2 * l2 - spec).abs() <= tolerances::COMPOSED_SPECTRAL * l2 * l2,
                "seed {seed}: {} vs {}",
                l2 * l2,
                spec
            );
        }
    }

    #[test]
    fn leray_is_idempotent_and_kills_gradients() {
        let ws = ws(32);
        let u = random_smooth_field(&ws, 3, 10, 7).unwrap();
        let pu = ws.leray_project(&u).unwrap();
        let ppu = ws.leray_project(&pu).unwrap();
        let a = ws.to_physical(&pu).unwrap();
        let b = ws.to_physical(&ppu).unwrap();
        let scale = lp_norm(&a, f64::INFINITY).unwrap();
        let diff = lp_norm(&a.sub(&b).unwrap(), f64::INFINITY).unwrap();
        assert!(diff <= tolerances::EXACT_SPECTRAL * scale, "idempotence {diff}");

        // gradient fields map to zero
        let phi = random_smooth_field(&ws, 1, 10, 8).unwrap();
        let grad = ws.grad_scalar(&phi).unwrap();
        let pg = ws.to_physical(&ws.leray_project(&grad).unwrap()).unwrap();
        let gscale = lp_norm(&ws.to_physical(&grad).unwrap(), f64::INFINITY).unwrap();
        let res = lp_norm(&pg, f64::INFINITY).unwrap();
        assert!(res <= tolerances::EXACT_SPECTRAL * gscale, "gradient residual {res}");
    }

    #[test]
    fn leray_recovers_synthetic_divergence_free_part() {
        let ws = ws(32);
        let d = random_divfree_field(&ws, 9, 11).unwrap();
        let phi = random_smooth_field(&ws, 1, 9, 12).unwrap();
        let grad = ws.to_physical(&ws.grad_scalar(&phi).unwrap()).unwrap();
        let mixed = d.add(&grad).unwrap();
        let recovered = ws.to_physical(&ws.leray_project(&mixed).unwrap()).unwrap();
        let scale = lp_norm(&d, f64::INFINITY).unwrap();
        let err = lp_norm(&recovered.sub(&d).unwrap(), f64::INFINITY).unwrap();
        assert!(err <= 1e-11 * scale.max(1.0), "err {err}");
    }

    #[test]
    fn leray_is_self_adjoint_in_l2() {
        let ws = ws(32);
        for seed in [21u64, 22, 23] {
            let u = random_smooth_field(&ws, 3, 8, seed).unwrap();
            let v = random_smooth_field(&ws, 3, 8, seed + 100).unwrap();
            let pu = ws.to_physical(&ws.leray_project(&u).unwrap()).unwrap();
            let pv = ws.to_physical(&ws.leray_project(&v).unwrap()).unwrap();
            let a = ws.inner_l2(&pu, &v).unwrap();
            let b = ws.inner_l2(&u, &pv).unwrap();
            let scale = a.abs().max(b.abs()).max(1e-30);
            assert!((a - b).abs() <= tolerances::COMPOSED_SPECTRAL * scale, "{a} vs {b}");
        }
    }

    #[test]
    fn projected_fields_are_divergence_free() {
        let ws = ws(32);
        let u = random_smooth_field(&ws, 3, 10, 31).unwrap();
        let pu = ws.leray_project(&u).unwrap();
        let div = ws.divergence_max(&pu).unwrap();
        let grad = ws.gradient_max(&pu).unwrap();
        assert!(div <= tolerances::DIVERGENCE_FREE * grad, "div {div} grad {grad}");
    }

    #[test]
    fn divergence_of_constant_vanishes() {
        let ws = ws(16);
        let f = Field::from_fn(ws.grid(), 3, |_, c| (c + 1) as f64);
        let d = ws.to_physical(&ws.divergence(&f).unwrap()).unwrap();
        assert!(lp_norm(&d, f64::INFINITY).unwrap() < 1e-12);
    }

    #[test]
    fn laplacian_eigenfunction() {
        let ws = ws(16);
        let g = ws.grid();
        let k = 2.0 * std::f64::consts::PI / g.box_length();
        let f = Field::from_fn(g, 1, |x, _| (k * x[0]).sin());
        let lap = ws.to_physical(&ws.laplacian(&f).unwrap()).unwrap();
        let expect = f.scaled(-k * k);
        let err = lp_norm(&lap.sub(&expect).unwrap(), f64::INFINITY).unwrap();
        assert!(err < 1e-12, "err {err}");
    }

    #[test]
    fn div_grad_equals_laplacian() {
        let ws = ws(32);
        let phi = random_smooth_field(&ws, 1, 10, 5).unwrap();
        let dg = ws
            .to_physical(&ws.divergence(&ws.grad_scalar(&phi).unwrap()).unwrap())
            .unwrap();
        let lap = ws.to_physical(&ws.laplacian(&phi).unwrap()).unwrap();
        let scale = lp_norm(&lap, f64::INFINITY).unwrap();
        let err = lp_norm(&dg.sub(&lap).unwrap(), f64::INFINITY).unwrap();
        assert!(err <= tolerances::COMPOSED_SPECTRAL * scale, "err {err}");
    }

    #[test]
    fn advect_zero_and_constant_cases() {
        let ws = ws(16);
        let zero = Field::zeros(ws.grid(), 3);
        let u = random_smooth_field(&ws, 3, 4, 3).unwrap();
        let a = ws.advect(&zero, &u).unwrap();
        assert_eq!(lp_norm(&a, f64::INFINITY).unwrap(), 0.0);
        let c = Field::from_fn(ws.grid(), 3, |_, c| c as f64 - 1.0);
        let b = ws.advect(&u, &c).unwrap();
        assert!(lp_norm(&b, f64::INFINITY).unwrap() < 1e-12);
    }

    #[test]
    fn advect_agrees_with_divergence_form() {
        // For div w = 0:  (w . grad) u = div(u (x) w), two independent routes
        let ws = ws(32);
        let w = random_divfree_field(&ws, 7, 40).unwrap();
        let u = random_smooth_field(&ws, 3, 7, 41).unwrap();
        let advective = ws.advect(&w, &u).unwrap();
        let tensor = ws.outer(&u, &w).unwrap();
        let divergence = ws.to_physical(&ws.div_tensor(&tensor).unwrap()).unwrap();
        let scale = lp_norm(&advective, 2.0).unwrap();
        let err = lp_norm(&advective.sub(&divergence).unwrap(), 2.0).unwrap();
        assert!(err <= tolerances::DUAL_ROUTE * scale, "rel err {}", err / scale);
    }

    #[test]
    fn advect_rejects_grid_mismatch() {
        let ws = ws(16);
        let other = SpectralWorkspace::new(Grid::new(1.0, 16).unwrap());
        let u = Field::zeros(ws.grid(), 3);
        let v = Field::zeros(other.grid(), 3);
        assert!(matches!(ws.advect(&u, &v), Err(CoreError::GridMismatch)));
    }

    #[test]
    fn mollify_preserves_constants_and_means() {
        let ws = ws(16);
        let m = Mollifier::gaussian(0.3);
        let c = Field::from_fn(ws.grid(), 1, |_, _| 2.25);
        let out = ws.mollify(&c, &m).unwrap();
        let err = lp_norm(&out.sub(&c).unwrap(), f64::INFINITY).unwrap();
        assert!(err < 1e-13);

        let u = random_smooth_field(&ws, 3, 5, 77).unwrap();
        let mu = ws.mollify(&u, &m).unwrap();
        for (uc, mc) in u.physical().unwrap().iter().zip(mu.physical().unwrap()) {
            let mean_u: f64 = uc.iter().sum::<f64>() / uc.len() as f64;
            let mean_m: f64 = mc.iter().sum::<f64>() / mc.len() as f64;
            assert!(
                (mean_u - mean_m).abs() <= tolerances::MEAN_PRESERVATION * mean_u.abs().max(1.0)
            );
        }
    }

    #[test]
    fn mollify_commutes_with_divergence() {
        let ws = ws(32);
        let m = Mollifier::gaussian(0.2);
        let u = random_smooth_field(&ws, 3, 10, 13).unwrap();
        let a = ws.divergence(&ws.mollify(&u, &m).unwrap()).unwrap();
        let b = ws.mollify(&ws.divergence(&u).unwrap(), &m).unwrap();
        let ap = ws.to_physical(&a).unwrap();
        let bp = ws.to_physical(&b).unwrap();
        let scale = lp_norm(&ap, f64::INFINITY).unwrap();
        let err = lp_norm(&ap.sub(&bp).unwrap(), f64::INFINITY).unwrap();
        assert!(err <= tolerances::EXACT_SPECTRAL * scale.max(1e-30), "err {err}");
    }

    #[test]
    fn mollify_rejects_oversized_radius() {
        let ws = ws(16);
        let u = Field::zeros(ws.grid(), 3);
        let m = Mollifier::gaussian(ws.grid().box_length() / 3.0);
        assert!(matches!(
            ws.mollify(&u, &m),
            Err(CoreError::RadiusTooLarge { .. })
        ));
    }

    #[test]
    fn mollify_converges_in_l3_as_radius_shrinks() {
        let ws = ws(32);
        let u = random_smooth_field(&ws, 3, 6, 19).unwrap();
        let mut prev = f64::INFINITY;
        for rho in [0.4, 0.2, 0.1, 0.05] {
            let mu = ws.mollify(&u, &Mollifier::gaussian(rho)).unwrap();
            let d = lp_norm(&mu.sub(&u).unwrap(), 3.0).unwrap();
            assert!(d < prev, "rho={rho}: distance {d} did not shrink");
            prev = d;
        }
    }

    #[test]
    fn spectral_cutoff_removes_high_modes_entirely() {
        let ws = ws(16);
        let g = ws.grid();
        let f = Field::from_fn(g, 1, |x, _| (4.0 * x[0]).cos());
        // cutoff at pi/rho < 4  =>  rho > pi/4
        let m = Mollifier::spectral_cutoff(1.0);
        let out = ws.mollify(&f, &m).unwrap();
        assert!(lp_norm(&out, f64::INFINITY).unwrap() < 1e-13);
        // and a low mode survives untouched
        let low = Field::from_fn(g, 1, |x, _| (2.0 * x[0]).cos());
        let kept = ws.mollify(&low, &m).unwrap();
        let err = lp_norm(&kept.sub(&low).unwrap(), f64::INFINITY).unwrap();
        assert!(err < 1e-13);
    }

    #[test]
    fn gaussian_mollifier_is_an_lp_contraction() {
        let ws = ws(32);
        for seed in [3u64, 5, 9] {
            let u = random_smooth_field(&ws, 3, 10, seed).unwrap();
            for rho in [0.05, 0.2, 0.45] {
                let mu = ws.mollify(&u, &Mollifier::gaussian(rho)).unwrap();
                for p in [1.0, 2.0, 3.0, 5.0, f64::INFINITY] {
                    let a = lp_norm(&mu, p).unwrap();
                    let b = lp_norm(&u, p).unwrap();
                    assert!(
                        a <= b * (1.0 + tolerances::CONTRACTION_SLACK),
                        "seed {seed} rho {rho} p {p}: {a} > {b}"
                    );
                }
            }
        }
    }

    #[test]
    fn mollifier_linf_l2_bound_holds_with_reported_constant() {
        let ws = ws(32);
        let u = random_smooth_field(&ws, 3, 10, 23).unwrap();
        for rho in [0.1, 0.25, 0.5] {
            let m = Mollifier::gaussian(rho);
            let c = m.linf_l2_constant(&ws.grid());
            let mu = ws.mollify(&u, &m).unwrap();
            let linf = lp_norm(&mu, f64::INFINITY).unwrap();
            let l2 = lp_norm(&u, 2.0).unwrap();
            assert!(linf <= c * l2 * (1.0 + 1e-10), "rho {rho}: {linf} vs {}", c * l2);
        }
    }

    #[test]
    fn interpolation_inequality_l4_between_l3_l5() {
        let ws = ws(32);
        for seed in 0..8u64 {
            let u = random_smooth_field(&ws, 3, 10, 1000 + seed).unwrap();
            let n4 = lp_norm(&u, 4.0).unwrap();
            let n3 = lp_norm(&u, 3.0).unwrap();
            let n5 = lp_norm(&u, 5.0).unwrap();
            assert!(
                n4 <= n3.powf(3.0 / 8.0) * n5.powf(5.0 / 8.0) * (1.0 + 1e-12),
                "seed {seed}"
            );
        }
    }

    #[test]
    fn gagliardo_nirenberg_constant_stable_across_resolutions() {
        // |u|_{10/3} <= C |u|_2^{2/5} |grad u|_2^{3/5} for mean-zero u
        let mut worst = Vec::new();
        for n in [16usize, 32, 64] {
            let ws = ws(n);
            let mut cmax = 0.0_f64;
            for seed in 0..5u64 {
                let u = random_divfree_field(&ws, 5, 2000 + seed).unwrap();
                let lhs = lp_norm(&u, 10.0 / 3.0).unwrap();
                let l2 = lp_norm(&u, 2.0).unwrap();
                let g2 = lp_norm(&ws.to_physical(&ws.gradient(&u).unwrap()).unwrap(), 2.0).unwrap();
                cmax = cmax.max(lhs / (l2.powf(0.4) * g2.powf(0.6)));
            }
            worst.push(cmax);
        }
        let lo = worst.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = worst.iter().cloned().fold(0.0_f64, f64::max);
        assert!(hi / lo < 1.5, "fitted constants vary too much: {worst:?}");
    }

    #[test]
    fn mixed_norm_of_heat_tensor_uses_frobenius_magnitude() {
        // |v (x) v|_F = |v|^2 pointwise, so the (3/2, inf) norm of the
        // tensor is the square of the (3, inf) norm of v
        let ws = ws(32);
        let v = random_divfree_field(&ws, 6, 55).unwrap();
        let tensor = ws.outer(&v, &v).unwrap();
        let h = FieldHistory::new(vec![tensor.with_time(0.0)]).unwrap();
        let t32 = mixed_norm(&h, MixedNormSpec::sup_in_time(1.5).unwrap()).unwrap();
        let v3 = lp_norm(&ws.to_physical(&ws.dealias(&v).unwrap()).unwrap(), 3.0).unwrap();
        assert!((t32 - v3 * v3).abs() < 1e-10 * t32, "{t32} vs {}", v3 * v3);
    }
}
