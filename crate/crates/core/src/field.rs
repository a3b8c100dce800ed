use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::grid::Grid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Representation {
    Physical,
    Spectral,
}

#[derive(Debug, Clone)]
pub enum FieldData {
    Physical(Vec<Vec<f64>>),
    Spectral(Vec<Vec<Complex64>>),
}

/// One time-slice of a scalar (1 component), vector (3) or rank-2 tensor
/// (9, row-major c = 3*i + j) field on a periodic grid.
#[derive(Debug, Clone)]
pub struct Field {
    grid: Grid,
    time_stamp: f64,
    data: FieldData,
}

impl Field {
    pub fn zeros(grid: Grid, n_comp: usize) -> Self {
        let n3 = grid.n_points();
        Self {
            grid,
            time_stamp: 0.0,
            data: FieldData::Physical(vec![vec![0.0; n3]; n_comp]),
        }
    }

    pub fn zeros_spectral(grid: Grid, n_comp: usize) -> Self {
        let n3 = grid.n_points();
        Self {
            grid,
            time_stamp: 0.0,
            data: FieldData::Spectral(vec![vec![Complex64::default(); n3]; n_comp]),
        }
    }

    pub fn from_physical(grid: Grid, comps: Vec<Vec<f64>>) -> Result<Self> {
        let n3 = grid.n_points();
        if comps.is_empty() || comps.iter().any(|c| c.len() != n3) {
            return Err(CoreError::MalformedField(format!(
                "expected components of length {n3}"
            )));
        }
        Ok(Self {
            grid,
            time_stamp: 0.0,
            data: FieldData::Physical(comps),
        })
    }

    pub fn from_spectral(grid: Grid, comps: Vec<Vec<Complex64>>) -> Result<Self> {
        let n3 = grid.n_points();
        if comps.is_empty() || comps.iter().any(|c| c.len() != n3) {
            return Err(CoreError::MalformedField(format!(
                "expected components of length {n3}"
            )));
        }
        Ok(Self {
            grid,
            time_stamp: 0.0,
            data: FieldData::Spectral(comps),
        })
    }

    /// Sample a vector-valued function of position on the grid.
    pub fn from_fn(grid: Grid, n_comp: usize, f: impl Fn([f64; 3], usize) -> f64) -> Self {
        let n = grid.resolution();
        let h = grid.spacing();
        let mut comps = vec![vec![0.0; grid.n_points()]; n_comp];
        for (c, comp) in comps.iter_mut().enumerate() {
            let mut idx = 0;
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        comp[idx] = f([i as f64 * h, j as f64 * h, k as f64 * h], c);
                        idx += 1;
                    }
                }
            }
        }
        Self {
            grid,
            time_stamp: 0.0,
            data: FieldData::Physical(comps),
        }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn time_stamp(&self) -> f64 {
        self.time_stamp
    }

    pub fn with_time(mut self, t: f64) -> Self {
        self.time_stamp = t;
        self
    }

    pub fn set_time(&mut self, t: f64) {
        self.time_stamp = t;
    }

    /// Replace the grid descriptor (used by the parabolic rescaling, which
    /// reinterprets the same samples on a smaller box).
    pub fn with_grid(mut self, grid: Grid) -> Self {
        self.grid = grid;
        self
    }

    pub fn representation(&self) -> Representation {
        match self.data {
            FieldData::Physical(_) => Representation::Physical,
            FieldData::Spectral(_) => Representation::Spectral,
        }
    }

    pub fn n_comp(&self) -> usize {
        match &self.data {
            FieldData::Physical(c) => c.len(),
            FieldData::Spectral(c) => c.len(),
        }
    }

    pub fn data(&self) -> &FieldData {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut FieldData {
        &mut self.data
    }

    pub fn physical(&self) -> Result<&[Vec<f64>]> {
        match &self.data {
            FieldData::Physical(c) => Ok(c),
            FieldData::Spectral(_) => Err(CoreError::MalformedField(
                "operation requires physical representation".into(),
            )),
        }
    }

    pub fn physical_mut(&mut self) -> Result<&mut [Vec<f64>]> {
        match &mut self.data {
            FieldData::Physical(c) => Ok(c),
            FieldData::Spectral(_) => Err(CoreError::MalformedField(
                "operation requires physical representation".into(),
            )),
        }
    }

    pub fn spectral(&self) -> Result<&[Vec<Complex64>]> {
        match &self.data {
            FieldData::Spectral(c) => Ok(c),
            FieldData::Physical(_) => Err(CoreError::MalformedField(
                "operation requires spectral representation".into(),
            )),
        }
    }

    pub fn spectral_mut(&mut self) -> Result<&mut [Vec<Complex64>]> {
        match &mut self.data {
            FieldData::Spectral(c) => Ok(c),
            FieldData::Physical(_) => Err(CoreError::MalformedField(
                "operation requires spectral representation".into(),
            )),
        }
    }

    pub fn same_grid(&self, other: &Field) -> Result<()> {
        if self.grid == other.grid {
            Ok(())
        } else {
            Err(CoreError::GridMismatch)
        }
    }

    /// Pointwise Euclidean magnitude across components (physical only).
    pub fn magnitude(&self) -> Result<Vec<f64>> {
        let comps = self.physical()?;
        let n3 = self.grid.n_points();
        let mut out = vec![0.0; n3];
        for comp in comps {
            for (o, v) in out.iter_mut().zip(comp) {
                *o += v * v;
            }
        }
        for o in &mut out {
            *o = o.sqrt();
        }
        Ok(out)
    }

    pub fn scaled(&self, factor: f64) -> Field {
        let mut out = self.clone();
        match &mut out.data {
            FieldData::Physical(c) => c.iter_mut().flatten().for_each(|v| *v *= factor),
            FieldData::Spectral(c) => c.iter_mut().flatten().for_each(|v| *v *= factor),
        }
        out
    }

    /// Component-wise `self + factor * other`; both fields must share grid
    /// and representation.
    pub fn axpy(&self, factor: f64, other: &Field) -> Result<Field> {
        self.same_grid(other)?;
        if self.n_comp() != other.n_comp() {
            return Err(CoreError::MalformedField(
                "component count mismatch".into(),
            ));
        }
        let mut out = self.clone();
        match (&mut out.data, &other.data) {
            (FieldData::Physical(a), FieldData::Physical(b)) => {
                for (ac, bc) in a.iter_mut().zip(b) {
                    for (av, bv) in ac.iter_mut().zip(bc) {
                        *av += factor * bv;
                    }
                }
            }
            (FieldData::Spectral(a), FieldData::Spectral(b)) => {
                for (ac, bc) in a.iter_mut().zip(b) {
                    for (av, bv) in ac.iter_mut().zip(bc) {
                        *av += factor * bv;
                    }
                }
            }
            _ => {
                return Err(CoreError::MalformedField(
                    "representation mismatch in field arithmetic".into(),
                ))
            }
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Field) -> Result<Field> {
        self.axpy(-1.0, other)
    }

    pub fn add(&self, other: &Field) -> Result<Field> {
        self.axpy(1.0, other)
    }
}

/// Time-ordered sequence of field slices sharing one grid.
#[derive(Debug, Clone)]
pub struct FieldHistory {
    slices: Vec<Field>,
}

impl FieldHistory {
    pub fn new(slices: Vec<Field>) -> Result<Self> {
        if slices.is_empty() {
            return Err(CoreError::EmptyHistory);
        }
        let grid = slices[0].grid();
        if slices[0].time_stamp() < 0.0 {
            return Err(CoreError::BadHistoryTimes);
        }
        for w in slices.windows(2) {
            if w[1].grid() != grid {
                return Err(CoreError::GridMismatch);
            }
            if !(w[1].time_stamp() > w[0].time_stamp()) {
                return Err(CoreError::BadHistoryTimes);
            }
        }
        Ok(Self { slices })
    }

    pub fn grid(&self) -> Grid {
        self.slices[0].grid()
    }

    pub fn len(&self) -> usize {
        self.slices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slices.is_empty()
    }

    pub fn slices(&self) -> &[Field] {
        &self.slices
    }

    pub fn slice(&self, i: usize) -> &Field {
        &self.slices[i]
    }

    pub fn times(&self) -> Vec<f64> {
        self.slices.iter().map(Field::time_stamp).collect()
    }

    pub fn first_time(&self) -> f64 {
        self.slices[0].time_stamp()
    }

    pub fn last_time(&self) -> f64 {
        self.slices[self.slices.len() - 1].time_stamp()
    }

    /// Uniform step if the grid of times is uniform (relative tolerance 1e-9).
    pub fn uniform_dt(&self) -> Option<f64> {
        if self.slices.len() < 2 {
            return None;
        }
        let dt = self.slices[1].time_stamp() - self.slices[0].time_stamp();
        for w in self.slices.windows(2) {
            let d = w[1].time_stamp() - w[0].time_stamp();
            if (d - dt).abs() > 1e-9 * dt.max(1e-300) {
                return None;
            }
        }
        Some(dt)
    }

    pub fn map(&self, f: impl FnMut(&Field) -> Field) -> Result<FieldHistory> {
        FieldHistory::new(self.slices.iter().map(f).collect())
    }

    /// Slice-wise difference (self - other) on matching time grids.
    pub fn sub(&self, other: &FieldHistory) -> Result<FieldHistory> {
        if self.len() != other.len() {
            return Err(CoreError::BadHistoryTimes);
        }
        let slices = self
            .slices
            .iter()
            .zip(other.slices())
            .map(|(a, b)| {
                let t = a.time_stamp();
                a.sub(b).map(|d| d.with_time(t))
            })
            .collect::<Result<Vec<_>>>()?;
        FieldHistory::new(slices)
    }

    /// Restriction to slices with time <= t (plus the initial slice).
    pub fn truncated(&self, t: f64) -> Result<FieldHistory> {
        let slices: Vec<Field> = self
            .slices
            .iter()
            .filter(|s| s.time_stamp() <= t * (1.0 + 1e-12))
            .cloned()
            .collect();
        FieldHistory::new(slices)
    }
}
