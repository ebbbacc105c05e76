//! Uniform cell-average grids on the torus and the truncated channel.
//!
//! Axis 0 is the wave direction: it spans [-L, L] for the channel kind and
//! the unit period for the torus. All remaining axes are unit-periodic.
//! Values are stored row-major with axis 0 slowest.

use crate::error::{Error, Result};
use crate::par;

pub const MAX_DIM: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GridKind {
    Torus,
    Channel,
}

#[derive(Clone, Debug)]
pub struct GridSpec {
    kind: GridKind,
    cells: Vec<usize>,
    dx: Vec<f64>,
    half_length: f64,
    strides: Vec<usize>,
    n: usize,
}

impl PartialEq for GridSpec {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
            && self.cells == other.cells
            && self.dx == other.dx
            && self.half_length == other.half_length
    }
}

impl GridSpec {
    /// Unit torus 𝕋^N; `cells` holds the per-axis resolution.
    pub fn torus(cells: &[usize]) -> Result<Self> {
        Self::build(GridKind::Torus, cells, 0.0)
    }

    /// Channel [-L, L] x 𝕋^{N-1}.
    pub fn channel(cells: &[usize], half_length: f64) -> Result<Self> {
        if half_length <= 0.0 {
            return Err(Error::Geometry(format!(
                "channel half-length must be positive, got {half_length}"
            )));
        }
        Self::build(GridKind::Channel, cells, half_length)
    }

    fn build(kind: GridKind, cells: &[usize], half_length: f64) -> Result<Self> {
        let dim = cells.len();
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::Domain(format!("dimension {dim} outside 1..={MAX_DIM}")));
        }
        if let Some(&c) = cells.iter().find(|&&c| c < 8) {
            return Err(Error::Domain(format!("need >= 8 cells per axis, got {c}")));
        }
        let mut dx = Vec::with_capacity(dim);
        for (axis, &c) in cells.iter().enumerate() {
            let extent = if axis == 0 && kind == GridKind::Channel {
                2.0 * half_length
            } else {
                1.0
            };
            dx.push(extent / c as f64);
        }
        let mut strides = vec![1usize; dim];
        for axis in (0..dim.saturating_sub(1)).rev() {
            strides[axis] = strides[axis + 1] * cells[axis + 1];
        }
        let n = cells.iter().product();
        Ok(Self { kind, cells: cells.to_vec(), dx, half_length, strides, n })
    }

    pub fn kind(&self) -> GridKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.cells.len()
    }

    pub fn cells(&self) -> &[usize] {
        &self.cells
    }

    pub fn dx(&self) -> &[f64] {
        &self.dx
    }

    pub fn min_dx(&self) -> f64 {
        self.dx.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn half_length(&self) -> f64 {
        self.half_length
    }

    pub fn n_cells(&self) -> usize {
        self.n
    }

    pub fn strides(&self) -> &[usize] {
        &self.strides
    }

    pub fn cell_volume(&self) -> f64 {
        self.dx.iter().product()
    }

    /// Number of cells in one transverse slice (axes 1..N).
    pub fn transverse_count(&self) -> usize {
        self.n / self.cells[0]
    }

    pub fn index(&self, coords: &[usize]) -> usize {
        coords.iter().zip(&self.strides).map(|(c, s)| c * s).sum()
    }

    pub fn coords_of(&self, mut flat: usize) -> Vec<usize> {
        let mut coords = vec![0; self.dim()];
        for axis in 0..self.dim() {
            coords[axis] = flat / self.strides[axis];
            flat %= self.strides[axis];
        }
        coords
    }

    /// Physical center of a cell.
    pub fn cell_center(&self, coords: &[usize], out: &mut [f64]) {
        for axis in 0..self.dim() {
            let base = if axis == 0 && self.kind == GridKind::Channel {
                -self.half_length
            } else {
                0.0
            };
            out[axis] = base + (coords[axis] as f64 + 0.5) * self.dx[axis];
        }
    }

    pub(crate) fn cells_arr(&self) -> [usize; MAX_DIM] {
        let mut arr = [1; MAX_DIM];
        arr[..self.dim()].copy_from_slice(&self.cells);
        arr
    }

    pub(crate) fn strides_arr(&self) -> [usize; MAX_DIM] {
        let mut arr = [1; MAX_DIM];
        arr[..self.dim()].copy_from_slice(&self.strides);
        arr
    }

    pub(crate) fn dx_arr(&self) -> [f64; MAX_DIM] {
        let mut arr = [1.0; MAX_DIM];
        arr[..self.dim()].copy_from_slice(&self.dx);
        arr
    }
}

/// Cell-averaged scalar field.
#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    grid: GridSpec,
    values: Vec<f64>,
}

impl Field {
    pub fn new(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_cells() {
            return Err(Error::GridMismatch(format!(
                "{} values for {} cells",
                values.len(),
                grid.n_cells()
            )));
        }
        if !par::all_finite(&values) {
            return Err(Error::Domain("field values must be finite".into()));
        }
        Ok(Self { grid, values })
    }

    pub fn constant(grid: GridSpec, value: f64) -> Self {
        let n = grid.n_cells();
        Self { grid, values: vec![value; n] }
    }

    /// Construction without the finiteness scan; scheme internals check
    /// separately after each step.
    pub(crate) fn from_raw(grid: GridSpec, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.n_cells());
        Self { grid, values }
    }

    /// Evaluate `f` at every cell center.
    pub fn from_fn<F>(grid: GridSpec, f: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Sync,
    {
        let n = grid.n_cells();
        let mut values = vec![0.0; n];
        let dim = grid.dim();
        par::fill_chunked(&mut values, |start, chunk| {
            let mut coords = grid.coords_of(start);
            let mut x = [0.0; MAX_DIM];
            for slot in chunk.iter_mut() {
                grid.cell_center(&coords, &mut x[..dim]);
                *slot = f(&x[..dim]);
                // odometer increment, last axis fastest
                for axis in (0..dim).rev() {
                    coords[axis] += 1;
                    if coords[axis] < grid.cells()[axis] {
                        break;
                    }
                    coords[axis] = 0;
                }
            }
        });
        Self { grid, values }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn mean(&self) -> f64 {
        par::pairwise_sum(&self.values) / self.values.len() as f64
    }

    pub fn min_max(&self) -> (f64, f64) {
        par::min_max(&self.values)
    }

    pub fn map<F>(&self, f: F) -> Field
    where
        F: Fn(f64) -> f64 + Sync,
    {
        let mut values = vec![0.0; self.values.len()];
        par::fill_chunked(&mut values, |start, chunk| {
            for (slot, &v) in chunk.iter_mut().zip(&self.values[start..]) {
                *slot = f(v);
            }
        });
        Field { grid: self.grid.clone(), values }
    }

    /// Elementwise combination; grids must match.
    pub fn zip_with<F>(&self, other: &Field, f: F) -> Result<Field>
    where
        F: Fn(f64, f64) -> f64 + Sync,
    {
        if self.grid != other.grid {
            return Err(Error::GridMismatch("zip_with on different grids".into()));
        }
        let mut values = vec![0.0; self.values.len()];
        par::fill_chunked(&mut values, |start, chunk| {
            for (k, slot) in chunk.iter_mut().enumerate() {
                *slot = f(self.values[start + k], other.values[start + k]);
            }
        });
        Ok(Field { grid: self.grid.clone(), values })
    }
}

/// Exact cell-to-cell correspondence between a unit torus and a channel
/// whose axis-0 resolution matches the torus per-unit resolution.
///
/// Requires the channel spacing to equal the torus spacing on every axis and
/// L·k to be an integer, so channel cell centers land exactly on torus cell
/// centers modulo the unit period.
#[derive(Clone, Copy, Debug)]
pub struct TorusChannelMap {
    per_unit: usize,
    offset: usize,
}

impl TorusChannelMap {
    pub fn new(torus: &GridSpec, channel: &GridSpec) -> Result<Self> {
        if torus.kind() != GridKind::Torus || channel.kind() != GridKind::Channel {
            return Err(Error::GridMismatch("expected a torus and a channel grid".into()));
        }
        if torus.dim() != channel.dim() {
            return Err(Error::GridMismatch("dimension mismatch".into()));
        }
        if torus.dx() != channel.dx() {
            return Err(Error::GridMismatch(format!(
                "cell widths differ: torus {:?} vs channel {:?}",
                torus.dx(),
                channel.dx()
            )));
        }
        if torus.cells()[1..] != channel.cells()[1..] {
            return Err(Error::GridMismatch("transverse resolutions differ".into()));
        }
        let per_unit = torus.cells()[0];
        let lk = channel.half_length() * per_unit as f64;
        if (lk - lk.round()).abs() > 1e-9 {
            return Err(Error::Geometry(format!(
                "L*k = {lk} must be an integer for exact torus/channel alignment"
            )));
        }
        let offset = (-lk.round() as i64).rem_euclid(per_unit as i64) as usize;
        Ok(Self { per_unit, offset })
    }

    #[inline]
    pub fn torus_row(&self, channel_row: i64) -> usize {
        (channel_row + self.offset as i64).rem_euclid(self.per_unit as i64) as usize
    }

    /// Periodic extension of a torus field onto the channel grid.
    pub fn tile(&self, torus_field: &Field, channel: &GridSpec) -> Result<Field> {
        let rest = channel.transverse_count();
        if rest != torus_field.grid().transverse_count() {
            return Err(Error::GridMismatch("transverse sizes differ".into()));
        }
        let tv = torus_field.values();
        let mut values = vec![0.0; channel.n_cells()];
        par::fill_chunked(&mut values, |start, chunk| {
            for (k, slot) in chunk.iter_mut().enumerate() {
                let flat = start + k;
                let row = (flat / rest) as i64;
                let t = flat % rest;
                *slot = tv[self.torus_row(row) * rest + t];
            }
        });
        Field::new(channel.clone(), values)
    }

    /// Ghost rows for the channel boundary: the torus values one cell to the
    /// left of the channel and one cell to the right.
    ///
    /// The channel row count 2·L·k is a multiple of the per-unit resolution,
    /// so the right ghost (row c0) maps to the same torus row as row 0 shifted
    /// by the alignment offset.
    pub fn ghost_rows(&self, torus_field: &Field) -> (Vec<f64>, Vec<f64>) {
        let rest = torus_field.grid().transverse_count();
        let tv = torus_field.values();
        let left_row = self.torus_row(-1);
        let right_row = self.offset;
        (
            tv[left_row * rest..(left_row + 1) * rest].to_vec(),
            tv[right_row * rest..(right_row + 1) * rest].to_vec(),
        )
    }
}
