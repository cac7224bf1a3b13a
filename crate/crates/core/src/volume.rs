//! Regular 3D grids with physical voxel spacing.

use rayon::prelude::*;

use crate::error::{DfaError, Result};

/// A 3D grid of values stored x-fastest, with voxel spacing in mm.
#[derive(Debug, Clone, PartialEq)]
pub struct Volume<T> {
    dims: [usize; 3],
    spacing: [f64; 3],
    data: Vec<T>,
}

pub type ScalarVolume = Volume<f64>;
pub type MaskVolume = Volume<u8>;

impl<T> Volume<T> {
    pub fn new(dims: [usize; 3], spacing: [f64; 3], data: Vec<T>) -> Result<Self> {
        let n = dims.iter().product::<usize>();
        if dims.contains(&0) {
            return Err(DfaError::InvalidArgument(format!("zero-sized dims {dims:?}")));
        }
        if spacing.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(DfaError::InvalidArgument(format!("spacing must be positive, got {spacing:?}")));
        }
        if data.len() != n {
            return Err(DfaError::DimensionMismatch(format!(
                "dims {dims:?} need {n} voxels, got {}",
                data.len()
            )));
        }
        Ok(Self { dims, spacing, data })
    }

    pub fn from_fn(dims: [usize; 3], spacing: [f64; 3], f: impl Fn([usize; 3]) -> T + Sync + Send) -> Result<Self>
    where
        T: Send,
    {
        let n = dims.iter().product::<usize>();
        let data = (0..n).into_par_iter().map(|i| f(coords_of(dims, i))).collect();
        Self::new(dims, spacing, data)
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn spacing(&self) -> [f64; 3] {
        self.spacing
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    pub fn index(&self, ijk: [usize; 3]) -> usize {
        ijk[0] + self.dims[0] * (ijk[1] + self.dims[1] * ijk[2])
    }

    pub fn coords(&self, index: usize) -> [usize; 3] {
        coords_of(self.dims, index)
    }

    pub fn get(&self, ijk: [usize; 3]) -> &T {
        &self.data[self.index(ijk)]
    }

    pub fn get_mut(&mut self, ijk: [usize; 3]) -> &mut T {
        let i = self.index(ijk);
        &mut self.data[i]
    }

    /// Value at a possibly out-of-range position, clamped to the grid
    /// (replicate boundary).
    pub fn get_clamped(&self, ijk: [isize; 3]) -> &T {
        self.get(self.clamp(ijk))
    }

    pub fn clamp(&self, ijk: [isize; 3]) -> [usize; 3] {
        let mut out = [0usize; 3];
        for a in 0..3 {
            out[a] = ijk[a].clamp(0, self.dims[a] as isize - 1) as usize;
        }
        out
    }

    pub fn contains(&self, ijk: [isize; 3]) -> bool {
        (0..3).all(|a| ijk[a] >= 0 && (ijk[a] as usize) < self.dims[a])
    }

    /// Whether `ijk` lies at least `margin` voxels from every face along
    /// axes that are large enough to have such an interior.
    pub fn is_interior(&self, ijk: [usize; 3], margin: usize) -> bool {
        (0..3).all(|a| self.dims[a] <= 2 * margin || (ijk[a] >= margin && ijk[a] + margin < self.dims[a]))
    }

    pub fn map<U>(&self, f: impl Fn(&T) -> U + Sync + Send) -> Volume<U>
    where
        T: Sync,
        U: Send,
    {
        Volume {
            dims: self.dims,
            spacing: self.spacing,
            data: self.data.par_iter().map(f).collect(),
        }
    }

    /// Parallel map receiving voxel coordinates.
    pub fn map_indexed<U>(&self, f: impl Fn([usize; 3], &T) -> U + Sync + Send) -> Volume<U>
    where
        T: Sync,
        U: Send,
    {
        let dims = self.dims;
        Volume {
            dims,
            spacing: self.spacing,
            data: self
                .data
                .par_iter()
                .enumerate()
                .map(|(i, v)| f(coords_of(dims, i), v))
                .collect(),
        }
    }

    pub fn with_data<U>(&self, data: Vec<U>) -> Result<Volume<U>> {
        Volume::new(self.dims, self.spacing, data)
    }

    pub fn same_grid<U>(&self, other: &Volume<U>) -> bool {
        self.dims == other.dims && self.spacing == other.spacing
    }
}

impl<T: Clone> Volume<T> {
    pub fn filled(dims: [usize; 3], spacing: [f64; 3], value: T) -> Result<Self> {
        let n = dims.iter().product::<usize>();
        Self::new(dims, spacing, vec![value; n])
    }
}

fn coords_of(dims: [usize; 3], index: usize) -> [usize; 3] {
    let i = index % dims[0];
    let rest = index / dims[0];
    [i, rest % dims[1], rest / dims[1]]
}

/// Offset of `ijk` by `delta` along `axis`, as signed coordinates.
pub fn offset(ijk: [usize; 3], axis: usize, delta: isize) -> [isize; 3] {
    let mut out = [ijk[0] as isize, ijk[1] as isize, ijk[2] as isize];
    out[axis] += delta;
    out
}
