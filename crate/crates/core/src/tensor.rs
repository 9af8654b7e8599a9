//! Coordinate-format storage for sparse third-order tensors.
//!
//! Entries are kept in lexicographic `(i, j, k)` order. Three groupings of
//! entry positions (by user, by service and by time slice) are built once at
//! construction so that per-slice sums never need to rescan the whole tensor.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tensor shape `(|I|, |J|, |K|)`: users, services and time slices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Dims {
    pub users: usize,
    pub services: usize,
    pub slices: usize,
}

impl Dims {
    pub fn new(users: usize, services: usize, slices: usize) -> Self {
        Dims {
            users,
            services,
            slices,
        }
    }

    pub fn cells(&self) -> usize {
        self.users * self.services * self.slices
    }

    pub fn extent(&self, mode: Mode) -> usize {
        match mode {
            Mode::User => self.users,
            Mode::Service => self.services,
            Mode::Time => self.slices,
        }
    }

    pub fn as_tuple(&self) -> (usize, usize, usize) {
        (self.users, self.services, self.slices)
    }

    pub fn contains(&self, idx: EntryIndex) -> bool {
        idx.i < self.users && idx.j < self.services && idx.k < self.slices
    }

    pub(crate) fn check(&self, idx: EntryIndex) -> Result<()> {
        if self.contains(idx) {
            Ok(())
        } else {
            Err(Error::OutOfBounds {
                i: idx.i,
                j: idx.j,
                k: idx.k,
                dims: self.as_tuple(),
            })
        }
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if self.users == 0 || self.services == 0 || self.slices == 0 {
            return Err(Error::InvalidConfig(format!(
                "tensor dims must be positive, got {self}"
            )));
        }
        Ok(())
    }
}

impl fmt::Display for Dims {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}x{}", self.users, self.services, self.slices)
    }
}

/// Position of one cell: user `i`, service `j`, time slice `k` (all 0-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EntryIndex {
    pub i: usize,
    pub j: usize,
    pub k: usize,
}

impl EntryIndex {
    pub fn new(i: usize, j: usize, k: usize) -> Self {
        EntryIndex { i, j, k }
    }

    pub fn along(&self, mode: Mode) -> usize {
        match mode {
            Mode::User => self.i,
            Mode::Service => self.j,
            Mode::Time => self.k,
        }
    }
}

impl From<(usize, usize, usize)> for EntryIndex {
    fn from((i, j, k): (usize, usize, usize)) -> Self {
        EntryIndex { i, j, k }
    }
}

/// One of the three tensor modes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    User,
    Service,
    Time,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::User, Mode::Service, Mode::Time];
}

/// Entry positions grouped by the index along one mode.
#[derive(Debug, Clone)]
struct SliceGroups {
    offsets: Vec<usize>,
    positions: Vec<usize>,
}

impl SliceGroups {
    fn build(indices: &[EntryIndex], extent: usize, mode: Mode) -> Self {
        let mut offsets = vec![0usize; extent + 1];
        for idx in indices {
            offsets[idx.along(mode) + 1] += 1;
        }
        for s in 0..extent {
            offsets[s + 1] += offsets[s];
        }
        let mut cursor = offsets.clone();
        let mut positions = vec![0usize; indices.len()];
        // entries are visited in lexicographic order, so each group stays sorted
        for (p, idx) in indices.iter().enumerate() {
            let s = idx.along(mode);
            positions[cursor[s]] = p;
            cursor[s] += 1;
        }
        SliceGroups { offsets, positions }
    }

    fn group(&self, s: usize) -> &[usize] {
        &self.positions[self.offsets[s]..self.offsets[s + 1]]
    }
}

/// Observed entries of a `|I| x |J| x |K|` tensor.
#[derive(Debug, Clone)]
pub struct SparseTensor3 {
    dims: Dims,
    indices: Vec<EntryIndex>,
    values: Vec<f64>,
    by_user: SliceGroups,
    by_service: SliceGroups,
    by_time: SliceGroups,
}

impl SparseTensor3 {
    /// Builds a tensor from an arbitrary list of entries.
    ///
    /// Entries are sorted lexicographically. A repeated index with an equal
    /// value collapses to a single entry; a repeated index with a different
    /// value is rejected.
    pub fn build<I>(dims: Dims, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (EntryIndex, f64)>,
    {
        dims.validate()?;
        let mut list: Vec<(EntryIndex, f64)> = Vec::new();
        for (idx, value) in entries {
            dims.check(idx)?;
            if !value.is_finite() {
                return Err(Error::NonFiniteValue {
                    i: idx.i,
                    j: idx.j,
                    k: idx.k,
                });
            }
            if value < 0.0 {
                return Err(Error::NegativeValue {
                    i: idx.i,
                    j: idx.j,
                    k: idx.k,
                    value,
                });
            }
            list.push((idx, value));
        }
        list.sort_by_key(|a| a.0);

        let mut indices: Vec<EntryIndex> = Vec::with_capacity(list.len());
        let mut values: Vec<f64> = Vec::with_capacity(list.len());
        for (idx, value) in list {
            if indices.last() == Some(&idx) {
                let first = *values.last().unwrap();
                if first != value {
                    return Err(Error::DuplicateIndex {
                        i: idx.i,
                        j: idx.j,
                        k: idx.k,
                        first,
                        second: value,
                    });
                }
                continue;
            }
            indices.push(idx);
            values.push(value);
        }
        Ok(Self::from_sorted(dims, indices, values))
    }

    fn from_sorted(dims: Dims, indices: Vec<EntryIndex>, values: Vec<f64>) -> Self {
        let by_user = SliceGroups::build(&indices, dims.users, Mode::User);
        let by_service = SliceGroups::build(&indices, dims.services, Mode::Service);
        let by_time = SliceGroups::build(&indices, dims.slices, Mode::Time);
        SparseTensor3 {
            dims,
            indices,
            values,
            by_user,
            by_service,
            by_time,
        }
    }

    /// An empty tensor of the given shape.
    pub fn empty(dims: Dims) -> Result<Self> {
        Self::build(dims, std::iter::empty())
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    /// Number of observed entries, `|Λ|`.
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[EntryIndex] {
        &self.indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Entries in lexicographic order.
    pub fn entries(&self) -> impl ExactSizeIterator<Item = (EntryIndex, f64)> + '_ {
        self.indices.iter().copied().zip(self.values.iter().copied())
    }

    pub fn get(&self, idx: EntryIndex) -> Option<f64> {
        self.indices
            .binary_search(&idx)
            .ok()
            .map(|p| self.values[p])
    }

    pub fn contains(&self, idx: EntryIndex) -> bool {
        self.indices.binary_search(&idx).is_ok()
    }

    fn groups(&self, mode: Mode) -> &SliceGroups {
        match mode {
            Mode::User => &self.by_user,
            Mode::Service => &self.by_service,
            Mode::Time => &self.by_time,
        }
    }

    /// Positions (into [`indices`](Self::indices) / [`values`](Self::values))
    /// of the entries lying on one slice, in lexicographic order.
    pub fn slice_positions(&self, mode: Mode, index: usize) -> Result<&[usize]> {
        let extent = self.dims.extent(mode);
        if index >= extent {
            return Err(self.slice_out_of_bounds(mode, index));
        }
        Ok(self.groups(mode).group(index))
    }

    /// `|Λ(i)|`, `|Λ(j)|` or `|Λ(k)|` depending on `mode`.
    pub fn slice_count(&self, mode: Mode, index: usize) -> Result<usize> {
        self.slice_positions(mode, index).map(<[usize]>::len)
    }

    pub(crate) fn group_unchecked(&self, mode: Mode, index: usize) -> &[usize] {
        self.groups(mode).group(index)
    }

    fn slice_out_of_bounds(&self, mode: Mode, index: usize) -> Error {
        let mut idx = EntryIndex::new(0, 0, 0);
        match mode {
            Mode::User => idx.i = index,
            Mode::Service => idx.j = index,
            Mode::Time => idx.k = index,
        }
        Error::OutOfBounds {
            i: idx.i,
            j: idx.j,
            k: idx.k,
            dims: self.dims.as_tuple(),
        }
    }

    pub fn mean(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        self.values.iter().sum::<f64>() / self.len() as f64
    }

    /// Population standard deviation of the observed values.
    pub fn std_dev(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        let mean = self.mean();
        let var = self.values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / self.len() as f64;
        var.sqrt()
    }

    /// Keeps the entries whose positions satisfy `keep`, preserving dims.
    pub fn filter<F>(&self, mut keep: F) -> SparseTensor3
    where
        F: FnMut(EntryIndex, f64) -> bool,
    {
        let mut indices = Vec::new();
        let mut values = Vec::new();
        for (idx, v) in self.entries() {
            if keep(idx, v) {
                indices.push(idx);
                values.push(v);
            }
        }
        Self::from_sorted(self.dims, indices, values)
    }
}

impl PartialEq for SparseTensor3 {
    fn eq(&self, other: &Self) -> bool {
        self.dims == other.dims && self.indices == other.indices && self.values == other.values
    }
}

/// Training, validation and test partitions of one tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitTensor {
    pub train: SparseTensor3,
    pub validation: SparseTensor3,
    pub test: SparseTensor3,
}

impl SplitTensor {
    /// Checks that the partitions share dims and are pairwise disjoint.
    pub fn new(train: SparseTensor3, validation: SparseTensor3, test: SparseTensor3) -> Result<Self> {
        if train.dims() != validation.dims() || train.dims() != test.dims() {
            return Err(Error::DimMismatch(format!(
                "partitions have dims {}, {}, {}",
                train.dims(),
                validation.dims(),
                test.dims()
            )));
        }
        let mut seen: HashSet<EntryIndex> = HashSet::with_capacity(train.len() + validation.len());
        for part in [&train, &validation, &test] {
            for &idx in part.indices() {
                if !seen.insert(idx) {
                    return Err(Error::InvalidConfig(format!(
                        "partitions overlap at ({}, {}, {})",
                        idx.i, idx.j, idx.k
                    )));
                }
            }
        }
        Ok(SplitTensor {
            train,
            validation,
            test,
        })
    }

    pub fn dims(&self) -> Dims {
        self.train.dims()
    }

    pub fn total(&self) -> usize {
        self.train.len() + self.validation.len() + self.test.len()
    }
}
