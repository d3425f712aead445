//! Sparse storage formats: CRS, CCS, COO, ELL, and a dense oracle.
//!
//! All matrices are square (`n x n`) with `f64` values. Indices are stored
//! 0-based in memory; the `*_one_based` constructors and accessors, the
//! Matrix Market reader/writer and every violation message use the 1-based
//! convention.
//!
//! Minor indices (the column index of a CRS entry, the row index of a CCS
//! entry, ...) are stored as [`Idx`] (`u32`), pointers as `usize`. This keeps
//! the index arrays 4 bytes wide, which is what the ELL memory estimate
//! assumes.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Minor index type.
pub type Idx = u32;

/// Bytes per stored value.
pub const VALUE_BYTES: u64 = std::mem::size_of::<f64>() as u64;
/// Bytes per stored minor index.
pub const INDEX_BYTES: u64 = std::mem::size_of::<Idx>() as u64;

/// Largest `n` the dense oracle accepts.
pub const ORACLE_CAP: usize = 4096;

/// One broken invariant. Every position and index is 1-based.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    TooLarge {
        n: usize,
    },
    Length {
        array: &'static str,
        expected: usize,
        found: usize,
    },
    PointerStart {
        array: &'static str,
        found: usize,
    },
    PointerEnd {
        array: &'static str,
        expected: usize,
        found: usize,
    },
    NotNondecreasing {
        array: &'static str,
        position: usize,
    },
    IndexOutOfRange {
        array: &'static str,
        entry: usize,
        index: usize,
        n: usize,
    },
    /// Same minor index twice inside one row (CRS) or column (CCS).
    RepeatedIndex {
        line: &'static str,
        line_index: usize,
        index: usize,
    },
    DuplicateEntry {
        row: usize,
        col: usize,
    },
    OrderingBroken {
        ordering: CooOrdering,
        entry: usize,
    },
    BandCount {
        expected: usize,
        found: usize,
    },
    RowLengthExceedsBands {
        row: usize,
        len: usize,
        nz: usize,
    },
    PaddingValue {
        band: usize,
        row: usize,
        value: f64,
    },
    PaddingColumn {
        band: usize,
        row: usize,
        col: usize,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::TooLarge { n } => {
                write!(f, "dimension {n} does not fit the 32-bit index type")
            }
            Violation::Length {
                array,
                expected,
                found,
            } => write!(f, "{array} has length {found}, expected {expected}"),
            Violation::PointerStart { array, found } => {
                write!(f, "{array} must start at 1, found {found}")
            }
            Violation::PointerEnd {
                array,
                expected,
                found,
            } => write!(f, "{array} must end at nnz + 1 = {expected}, found {found}"),
            Violation::NotNondecreasing { array, position } => {
                write!(f, "{array} not nondecreasing at position {position}")
            }
            Violation::IndexOutOfRange {
                array,
                entry,
                index,
                n,
            } => {
                let what = match *array {
                    "row_idx" => "row",
                    _ => "column",
                };
                write!(
                    f,
                    "{what} index {index} out of range [1, {n}] at entry {entry}"
                )
            }
            Violation::RepeatedIndex {
                line,
                line_index,
                index,
            } => write!(f, "index {index} repeated within {line} {line_index}"),
            Violation::DuplicateEntry { row, col } => {
                write!(f, "duplicate entry at ({row}, {col})")
            }
            Violation::OrderingBroken { ordering, entry } => {
                write!(f, "{ordering} ordering broken at entry {entry}")
            }
            Violation::BandCount { expected, found } => write!(
                f,
                "band count {found} differs from the longest row length {expected}"
            ),
            Violation::RowLengthExceedsBands { row, len, nz } => {
                write!(
                    f,
                    "row {row} stores {len} entries but only {nz} bands exist"
                )
            }
            Violation::PaddingValue { band, row, value } => {
                write!(
                    f,
                    "padding slot (band {band}, row {row}) holds {value}, not 0.0"
                )
            }
            Violation::PaddingColumn { band, row, col } => write!(
                f,
                "padding slot (band {band}, row {row}) has column {col}, not the row index"
            ),
        }
    }
}

/// Invariant checking shared by every storage format.
pub trait Validate {
    /// Every violated invariant, in discovery order.
    fn violations(&self) -> Vec<Violation>;

    fn validate(&self) -> Result<(), Vec<Violation>> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(v)
        }
    }

    fn is_valid(&self) -> bool {
        self.violations().is_empty()
    }
}

fn checked<T: Validate>(m: T) -> Result<T> {
    match m.validate() {
        Ok(()) => Ok(m),
        Err(v) => Err(Error::Invalid(v)),
    }
}

/// Checks for the compressed layouts (CRS and CCS share them, with roles
/// swapped).
fn compressed_violations(
    n: usize,
    ptr: &[usize],
    idx: &[Idx],
    values_len: usize,
    names: (&'static str, &'static str, &'static str),
) -> Vec<Violation> {
    let (ptr_name, idx_name, line) = names;
    let mut out = Vec::new();
    if n > Idx::MAX as usize {
        out.push(Violation::TooLarge { n });
    }
    let nnz = idx.len();
    if values_len != nnz {
        out.push(Violation::Length {
            array: "values",
            expected: nnz,
            found: values_len,
        });
    }
    if ptr.len() != n + 1 {
        out.push(Violation::Length {
            array: ptr_name,
            expected: n + 1,
            found: ptr.len(),
        });
    }
    if let Some(&first) = ptr.first() {
        if first != 0 {
            out.push(Violation::PointerStart {
                array: ptr_name,
                found: first + 1,
            });
        }
    }
    if let Some(&last) = ptr.last() {
        if last != nnz {
            out.push(Violation::PointerEnd {
                array: ptr_name,
                expected: nnz + 1,
                found: last + 1,
            });
        }
    }
    let mut monotone = true;
    for (k, w) in ptr.windows(2).enumerate() {
        if w[1] < w[0] {
            monotone = false;
            out.push(Violation::NotNondecreasing {
                array: ptr_name,
                position: k + 1,
            });
        }
    }
    for (p, &j) in idx.iter().enumerate() {
        if j as usize >= n {
            out.push(Violation::IndexOutOfRange {
                array: idx_name,
                entry: p + 1,
                index: j as usize + 1,
                n,
            });
        }
    }
    // Distinctness needs a well-formed pointer array to know the lines.
    if monotone && ptr.len() == n + 1 && ptr.last().copied().unwrap_or(0) <= nnz {
        let mut seen = vec![usize::MAX; n];
        for line_no in 0..n {
            for &j in &idx[ptr[line_no]..ptr[line_no + 1]] {
                let j = j as usize;
                if j >= n {
                    continue;
                }
                if seen[j] == line_no {
                    out.push(Violation::RepeatedIndex {
                        line,
                        line_index: line_no + 1,
                        index: j + 1,
                    });
                }
                seen[j] = line_no;
            }
        }
    }
    out
}

fn one_based_to_zero(v: &[usize], what: &'static str) -> Result<Vec<usize>> {
    v.iter()
        .enumerate()
        .map(|(k, &x)| {
            x.checked_sub(1).ok_or_else(|| {
                Error::Invalid(vec![Violation::IndexOutOfRange {
                    array: what,
                    entry: k + 1,
                    index: 0,
                    n: 0,
                }])
            })
        })
        .collect()
}

fn minor_to_zero(v: &[usize], what: &'static str, n: usize) -> Result<Vec<Idx>> {
    v.iter()
        .enumerate()
        .map(|(k, &x)| {
            if x == 0 || x - 1 > Idx::MAX as usize {
                Err(Error::Invalid(vec![Violation::IndexOutOfRange {
                    array: what,
                    entry: k + 1,
                    index: x,
                    n,
                }]))
            } else {
                Ok((x - 1) as Idx)
            }
        })
        .collect()
}

/// Compressed Row Storage.
#[derive(Debug, Clone, PartialEq)]
pub struct CrsMatrix {
    n: usize,
    values: Vec<f64>,
    col_idx: Vec<Idx>,
    row_ptr: Vec<usize>,
}

impl CrsMatrix {
    /// Builds from 0-based arrays, checking every invariant.
    pub fn new(n: usize, row_ptr: Vec<usize>, col_idx: Vec<Idx>, values: Vec<f64>) -> Result<Self> {
        checked(Self::from_parts_unchecked(n, row_ptr, col_idx, values))
    }

    /// Builds from 1-based arrays (`row_ptr[0] == 1`, columns in `1..=n`).
    pub fn from_one_based(
        n: usize,
        row_ptr: &[usize],
        col_idx: &[usize],
        values: Vec<f64>,
    ) -> Result<Self> {
        let row_ptr = one_based_to_zero(row_ptr, "row_ptr")?;
        let col_idx = minor_to_zero(col_idx, "col_idx", n)?;
        Self::new(n, row_ptr, col_idx, values)
    }

    /// Builds without checking; pair with [`Validate::violations`].
    pub fn from_parts_unchecked(
        n: usize,
        row_ptr: Vec<usize>,
        col_idx: Vec<Idx>,
        values: Vec<f64>,
    ) -> Self {
        CrsMatrix {
            n,
            values,
            col_idx,
            row_ptr,
        }
    }

    pub fn empty(n: usize) -> Self {
        Self::from_parts_unchecked(n, vec![0; n + 1], Vec::new(), Vec::new())
    }

    pub fn identity(n: usize) -> Self {
        Self::from_parts_unchecked(n, (0..=n).collect(), (0..n as Idx).collect(), vec![1.0; n])
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn col_idx(&self) -> &[Idx] {
        &self.col_idx
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn row_ptr_one_based(&self) -> Vec<usize> {
        self.row_ptr.iter().map(|&p| p + 1).collect()
    }

    pub fn col_idx_one_based(&self) -> Vec<usize> {
        self.col_idx.iter().map(|&j| j as usize + 1).collect()
    }

    pub fn row_len(&self, i: usize) -> usize {
        self.row_ptr[i + 1] - self.row_ptr[i]
    }

    pub fn max_row_len(&self) -> usize {
        self.row_ptr
            .windows(2)
            .map(|w| w[1] - w[0])
            .max()
            .unwrap_or(0)
    }

    /// `(col, value)` pairs of row `i` in storage order.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[r.clone()]
            .iter()
            .zip(&self.values[r])
            .map(|(&j, &v)| (j as usize, v))
    }

    /// `(row, col, value)` triplets in storage order, 0-based.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    /// Copy with columns sorted ascending inside each row.
    pub fn canonicalize(&self) -> CrsMatrix {
        let mut col_idx = Vec::with_capacity(self.nnz());
        let mut values = Vec::with_capacity(self.nnz());
        let mut buf: Vec<(Idx, f64)> = Vec::new();
        for i in 0..self.n {
            buf.clear();
            let r = self.row_ptr[i]..self.row_ptr[i + 1];
            buf.extend(
                self.col_idx[r.clone()]
                    .iter()
                    .copied()
                    .zip(self.values[r].iter().copied()),
            );
            buf.sort_by_key(|&(j, _)| j);
            for &(j, v) in &buf {
                col_idx.push(j);
                values.push(v);
            }
        }
        CrsMatrix::from_parts_unchecked(self.n, self.row_ptr.clone(), col_idx, values)
    }

    pub fn is_canonical(&self) -> bool {
        (0..self.n).all(|i| {
            self.col_idx[self.row_ptr[i]..self.row_ptr[i + 1]]
                .windows(2)
                .all(|w| w[0] < w[1])
        })
    }

    /// Equality of structure and values, bit for bit.
    pub fn bitwise_eq(&self, other: &CrsMatrix) -> bool {
        self.n == other.n
            && self.row_ptr == other.row_ptr
            && self.col_idx == other.col_idx
            && self
                .values
                .iter()
                .zip(&other.values)
                .all(|(a, b)| a.to_bits() == b.to_bits())
            && self.values.len() == other.values.len()
    }
}

impl Validate for CrsMatrix {
    fn violations(&self) -> Vec<Violation> {
        compressed_violations(
            self.n,
            &self.row_ptr,
            &self.col_idx,
            self.values.len(),
            ("row_ptr", "col_idx", "row"),
        )
    }
}

/// Compressed Column Storage.
#[derive(Debug, Clone, PartialEq)]
pub struct CcsMatrix {
    n: usize,
    values: Vec<f64>,
    row_idx: Vec<Idx>,
    col_ptr: Vec<usize>,
}

impl CcsMatrix {
    pub fn new(n: usize, col_ptr: Vec<usize>, row_idx: Vec<Idx>, values: Vec<f64>) -> Result<Self> {
        checked(Self::from_parts_unchecked(n, col_ptr, row_idx, values))
    }

    pub fn from_one_based(
        n: usize,
        col_ptr: &[usize],
        row_idx: &[usize],
        values: Vec<f64>,
    ) -> Result<Self> {
        let col_ptr = one_based_to_zero(col_ptr, "col_ptr")?;
        let row_idx = minor_to_zero(row_idx, "row_idx", n)?;
        Self::new(n, col_ptr, row_idx, values)
    }

    pub fn from_parts_unchecked(
        n: usize,
        col_ptr: Vec<usize>,
        row_idx: Vec<Idx>,
        values: Vec<f64>,
    ) -> Self {
        CcsMatrix {
            n,
            values,
            row_idx,
            col_ptr,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.row_idx.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row_idx(&self) -> &[Idx] {
        &self.row_idx
    }

    pub fn col_ptr(&self) -> &[usize] {
        &self.col_ptr
    }

    pub fn col_ptr_one_based(&self) -> Vec<usize> {
        self.col_ptr.iter().map(|&p| p + 1).collect()
    }

    pub fn row_idx_one_based(&self) -> Vec<usize> {
        self.row_idx.iter().map(|&i| i as usize + 1).collect()
    }

    /// Reads the same arrays as the CRS storage of the transpose.
    pub fn into_transpose_crs(self) -> CrsMatrix {
        CrsMatrix::from_parts_unchecked(self.n, self.col_ptr, self.row_idx, self.values)
    }
}

impl Validate for CcsMatrix {
    fn violations(&self) -> Vec<Violation> {
        compressed_violations(
            self.n,
            &self.col_ptr,
            &self.row_idx,
            self.values.len(),
            ("col_ptr", "row_idx", "column"),
        )
    }
}

/// Entry order of a [`CooMatrix`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CooOrdering {
    RowMajor,
    ColMajor,
    Unordered,
}

impl fmt::Display for CooOrdering {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CooOrdering::RowMajor => "row-major",
            CooOrdering::ColMajor => "column-major",
            CooOrdering::Unordered => "unordered",
        })
    }
}

/// Coordinate (triplet) storage.
#[derive(Debug, Clone, PartialEq)]
pub struct CooMatrix {
    n: usize,
    values: Vec<f64>,
    row_idx: Vec<Idx>,
    col_idx: Vec<Idx>,
    ordering: CooOrdering,
}

impl CooMatrix {
    pub fn new(
        n: usize,
        row_idx: Vec<Idx>,
        col_idx: Vec<Idx>,
        values: Vec<f64>,
        ordering: CooOrdering,
    ) -> Result<Self> {
        checked(Self::from_parts_unchecked(
            n, row_idx, col_idx, values, ordering,
        ))
    }

    pub fn from_one_based(
        n: usize,
        row_idx: &[usize],
        col_idx: &[usize],
        values: Vec<f64>,
        ordering: CooOrdering,
    ) -> Result<Self> {
        let row_idx = minor_to_zero(row_idx, "row_idx", n)?;
        let col_idx = minor_to_zero(col_idx, "col_idx", n)?;
        Self::new(n, row_idx, col_idx, values, ordering)
    }

    pub fn from_parts_unchecked(
        n: usize,
        row_idx: Vec<Idx>,
        col_idx: Vec<Idx>,
        values: Vec<f64>,
        ordering: CooOrdering,
    ) -> Self {
        CooMatrix {
            n,
            values,
            row_idx,
            col_idx,
            ordering,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row_idx(&self) -> &[Idx] {
        &self.row_idx
    }

    pub fn col_idx(&self) -> &[Idx] {
        &self.col_idx
    }

    pub fn ordering(&self) -> CooOrdering {
        self.ordering
    }

    pub fn row_idx_one_based(&self) -> Vec<usize> {
        self.row_idx.iter().map(|&i| i as usize + 1).collect()
    }

    pub fn col_idx_one_based(&self) -> Vec<usize> {
        self.col_idx.iter().map(|&j| j as usize + 1).collect()
    }

    /// `(row, col, value)` triplets in storage order, 0-based.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.row_idx
            .iter()
            .zip(&self.col_idx)
            .zip(&self.values)
            .map(|((&i, &j), &v)| (i as usize, j as usize, v))
    }
}

impl Validate for CooMatrix {
    fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let n = self.n;
        if n > Idx::MAX as usize {
            out.push(Violation::TooLarge { n });
        }
        let nnz = self.values.len();
        for (name, len) in [
            ("row_idx", self.row_idx.len()),
            ("col_idx", self.col_idx.len()),
        ] {
            if len != nnz {
                out.push(Violation::Length {
                    array: name,
                    expected: nnz,
                    found: len,
                });
            }
        }
        for (name, idx) in [("row_idx", &self.row_idx), ("col_idx", &self.col_idx)] {
            for (p, &k) in idx.iter().enumerate() {
                if k as usize >= n {
                    out.push(Violation::IndexOutOfRange {
                        array: name,
                        entry: p + 1,
                        index: k as usize + 1,
                        n,
                    });
                }
            }
        }
        let mut seen = HashSet::with_capacity(nnz);
        for (&i, &j) in self.row_idx.iter().zip(&self.col_idx) {
            if !seen.insert((i, j)) {
                out.push(Violation::DuplicateEntry {
                    row: i as usize + 1,
                    col: j as usize + 1,
                });
            }
        }
        let key = match self.ordering {
            CooOrdering::RowMajor => Some(&self.row_idx),
            CooOrdering::ColMajor => Some(&self.col_idx),
            CooOrdering::Unordered => None,
        };
        if let Some(key) = key {
            for (p, w) in key.windows(2).enumerate() {
                if w[1] < w[0] {
                    out.push(Violation::OrderingBroken {
                        ordering: self.ordering,
                        entry: p + 2,
                    });
                }
            }
        }
        out
    }
}

/// ELLPACK/ITPACK storage, band-major.
///
/// Band `k` of row `i` (both 0-based) sits at offset `n * k + i`. Slots past
/// a row's stored length are padding: value `0.0`, column = the row's own
/// index, so kernels can multiply every slot unconditionally.
#[derive(Debug, Clone, PartialEq)]
pub struct EllMatrix {
    n: usize,
    nz: usize,
    values: Vec<f64>,
    col_idx: Vec<Idx>,
    row_len: Vec<usize>,
}

impl EllMatrix {
    /// `row_len[i]` is the number of real (non-padding) entries of row `i`;
    /// they occupy bands `0..row_len[i]`.
    pub fn new(
        n: usize,
        nz: usize,
        values: Vec<f64>,
        col_idx: Vec<Idx>,
        row_len: Vec<usize>,
    ) -> Result<Self> {
        checked(Self::from_parts_unchecked(n, nz, values, col_idx, row_len))
    }

    pub fn from_parts_unchecked(
        n: usize,
        nz: usize,
        values: Vec<f64>,
        col_idx: Vec<Idx>,
        row_len: Vec<usize>,
    ) -> Self {
        EllMatrix {
            n,
            nz,
            values,
            col_idx,
            row_len,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Band count.
    pub fn nz(&self) -> usize {
        self.nz
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn col_idx(&self) -> &[Idx] {
        &self.col_idx
    }

    pub fn col_idx_one_based(&self) -> Vec<usize> {
        self.col_idx.iter().map(|&j| j as usize + 1).collect()
    }

    pub fn row_len(&self) -> &[usize] {
        &self.row_len
    }

    pub fn stored_nnz(&self) -> usize {
        self.row_len.iter().sum()
    }

    pub fn padding_count(&self) -> usize {
        self.n * self.nz - self.stored_nnz()
    }

    #[inline]
    pub fn offset(&self, band: usize, row: usize) -> usize {
        self.n * band + row
    }

    /// Bytes held by the value and column arrays.
    pub fn footprint_bytes(&self) -> u64 {
        (self.n as u64) * (self.nz as u64) * (VALUE_BYTES + INDEX_BYTES)
    }

    /// Copy with `extra` all-padding bands appended.
    pub fn with_extra_padding_bands(&self, extra: usize) -> EllMatrix {
        let mut values = self.values.clone();
        let mut col_idx = self.col_idx.clone();
        for _ in 0..extra {
            values.extend(std::iter::repeat_n(0.0, self.n));
            col_idx.extend(0..self.n as Idx);
        }
        EllMatrix::from_parts_unchecked(
            self.n,
            self.nz + extra,
            values,
            col_idx,
            self.row_len.clone(),
        )
    }
}

impl Validate for EllMatrix {
    fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let (n, nz) = (self.n, self.nz);
        if n > Idx::MAX as usize {
            out.push(Violation::TooLarge { n });
        }
        let slots = n * nz;
        for (name, len) in [
            ("values", self.values.len()),
            ("col_idx", self.col_idx.len()),
        ] {
            if len != slots {
                out.push(Violation::Length {
                    array: name,
                    expected: slots,
                    found: len,
                });
            }
        }
        if self.row_len.len() != n {
            out.push(Violation::Length {
                array: "row_len",
                expected: n,
                found: self.row_len.len(),
            });
        }
        if !out.is_empty() {
            return out;
        }
        let longest = self.row_len.iter().copied().max().unwrap_or(0);
        if longest != nz {
            // Extra all-padding bands are tolerated; fewer bands than the
            // longest row is not.
            if longest > nz {
                for (i, &len) in self.row_len.iter().enumerate() {
                    if len > nz {
                        out.push(Violation::RowLengthExceedsBands {
                            row: i + 1,
                            len,
                            nz,
                        });
                    }
                }
                return out;
            }
            if !self.has_only_padding_beyond(longest) {
                out.push(Violation::BandCount {
                    expected: longest,
                    found: nz,
                });
            }
        }
        for (p, &j) in self.col_idx.iter().enumerate() {
            if j as usize >= n {
                out.push(Violation::IndexOutOfRange {
                    array: "col_idx",
                    entry: p + 1,
                    index: j as usize + 1,
                    n,
                });
            }
        }
        let mut seen = vec![usize::MAX; n];
        for i in 0..n {
            for k in 0..nz {
                let off = self.offset(k, i);
                let j = self.col_idx[off] as usize;
                if k < self.row_len[i] {
                    if j < n {
                        if seen[j] == i {
                            out.push(Violation::RepeatedIndex {
                                line: "row",
                                line_index: i + 1,
                                index: j + 1,
                            });
                        }
                        seen[j] = i;
                    }
                } else {
                    let v = self.values[off];
                    if v != 0.0 {
                        out.push(Violation::PaddingValue {
                            band: k + 1,
                            row: i + 1,
                            value: v,
                        });
                    }
                    if j != i {
                        out.push(Violation::PaddingColumn {
                            band: k + 1,
                            row: i + 1,
                            col: j + 1,
                        });
                    }
                }
            }
        }
        out
    }
}

impl EllMatrix {
    fn has_only_padding_beyond(&self, band: usize) -> bool {
        (band..self.nz).all(|k| {
            (0..self.n).all(|i| {
                let off = self.offset(k, i);
                self.values[off] == 0.0 && self.col_idx[off] as usize == i
            })
        })
    }
}

/// Row-major dense matrix; test oracle only.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    n: usize,
    entries: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(n: usize) -> Result<Self> {
        if n > ORACLE_CAP {
            return Err(Error::OracleCap { n, cap: ORACLE_CAP });
        }
        Ok(DenseMatrix {
            n,
            entries: vec![0.0; n * n],
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let mut d = Self::zeros(n)?;
        for (i, r) in rows.iter().enumerate() {
            if r.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: r.len(),
                });
            }
            d.entries[i * n..(i + 1) * n].copy_from_slice(r);
        }
        Ok(d)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.entries[i * self.n + j] = v;
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn transpose(&self) -> DenseMatrix {
        let n = self.n;
        let mut t = DenseMatrix {
            n,
            entries: vec![0.0; n * n],
        };
        for i in 0..n {
            for j in 0..n {
                t.entries[j * n + i] = self.entries[i * n + j];
            }
        }
        t
    }

    /// Plain row-by-row product.
    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: x.len(),
            });
        }
        Ok(self
            .entries
            .chunks_exact(self.n.max(1))
            .take(self.n)
            .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect())
    }
}

impl Validate for DenseMatrix {
    fn violations(&self) -> Vec<Violation> {
        if self.entries.len() != self.n * self.n {
            vec![Violation::Length {
                array: "entries",
                expected: self.n * self.n,
                found: self.entries.len(),
            }]
        } else {
            Vec::new()
        }
    }
}

pub fn dense_from_crs(m: &CrsMatrix) -> Result<DenseMatrix> {
    let mut d = DenseMatrix::zeros(m.n())?;
    for (i, j, v) in m.triplets() {
        d.set(i, j, v);
    }
    Ok(d)
}

/// Keeps entries with `|v| > drop_tol`, columns ascending within rows.
pub fn crs_from_dense(d: &DenseMatrix, drop_tol: f64) -> Result<CrsMatrix> {
    let n = d.n();
    if n > ORACLE_CAP {
        return Err(Error::OracleCap { n, cap: ORACLE_CAP });
    }
    let mut row_ptr = Vec::with_capacity(n + 1);
    let mut col_idx = Vec::new();
    let mut values = Vec::new();
    row_ptr.push(0);
    for i in 0..n {
        for j in 0..n {
            let v = d.get(i, j);
            if v.abs() > drop_tol {
                col_idx.push(j as Idx);
                values.push(v);
            }
        }
        row_ptr.push(col_idx.len());
    }
    Ok(CrsMatrix::from_parts_unchecked(n, row_ptr, col_idx, values))
}

/// Stored entries per row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowHistogram {
    pub counts: Vec<usize>,
}

impl RowHistogram {
    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }
}

pub fn row_histogram(m: &CrsMatrix) -> RowHistogram {
    RowHistogram {
        counts: m.row_ptr().windows(2).map(|w| w[1] - w[0]).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn identity2() -> CrsMatrix {
        CrsMatrix::from_one_based(2, &[1, 2, 3], &[1, 2], vec![1.0, 1.0]).unwrap()
    }

    #[test]
    fn identity_is_valid() {
        assert!(identity2().validate().is_ok());
        assert_eq!(identity2(), CrsMatrix::identity(2));
    }

    #[test]
    fn decreasing_row_ptr_is_reported() {
        let m = CrsMatrix::from_parts_unchecked(2, vec![0, 2, 1], vec![0], vec![1.0]);
        let msgs: Vec<String> = m.violations().iter().map(|v| v.to_string()).collect();
        assert!(
            msgs.iter()
                .any(|s| s == "row_ptr not nondecreasing at position 2"),
            "{msgs:?}"
        );
    }

    #[test]
    fn out_of_range_column_is_reported() {
        let m = CrsMatrix::from_parts_unchecked(2, vec![0, 1, 2], vec![0, 4], vec![1.0, 1.0]);
        let v = m.violations();
        assert_eq!(v.len(), 1);
        assert!(v[0].to_string().starts_with("column index 5 out of range"));
    }

    #[test]
    fn repeated_column_within_row_is_reported() {
        let m = CrsMatrix::from_parts_unchecked(2, vec![0, 2, 2], vec![1, 1], vec![1.0, 2.0]);
        assert_eq!(
            m.violations(),
            vec![Violation::RepeatedIndex {
                line: "row",
                line_index: 1,
                index: 2
            }]
        );
    }

    #[test]
    fn unsorted_rows_are_valid() {
        let m = CrsMatrix::from_one_based(2, &[1, 3, 3], &[2, 1], vec![1.0, 2.0]).unwrap();
        assert!(!m.is_canonical());
        assert!(m.canonicalize().is_canonical());
    }

    #[test]
    fn pointer_endpoints_are_checked() {
        let m = CrsMatrix::from_parts_unchecked(2, vec![1, 1, 3], vec![0, 1], vec![1.0, 1.0]);
        let v = m.violations();
        assert!(v.contains(&Violation::PointerStart {
            array: "row_ptr",
            found: 2
        }));
        assert!(v.contains(&Violation::PointerEnd {
            array: "row_ptr",
            expected: 3,
            found: 4
        }));
    }

    #[test]
    fn histogram_examples() {
        assert_eq!(row_histogram(&identity2()).counts, vec![1, 1]);
        let m = CrsMatrix::from_one_based(3, &[1, 3, 4, 4], &[1, 2, 3], vec![1.0; 3]).unwrap();
        assert_eq!(row_histogram(&m).counts, vec![2, 1, 0]);
        assert_eq!(row_histogram(&CrsMatrix::empty(3)).counts, vec![0, 0, 0]);
    }

    #[test]
    fn dense_bridge_examples() {
        let d = DenseMatrix::from_rows(&[vec![0.0, 2.0], vec![3.0, 0.0]]).unwrap();
        let m = crs_from_dense(&d, 0.0).unwrap();
        assert_eq!(m.values(), &[2.0, 3.0]);
        assert_eq!(m.col_idx_one_based(), vec![2, 1]);
        assert_eq!(m.row_ptr_one_based(), vec![1, 2, 3]);

        let z = crs_from_dense(&DenseMatrix::zeros(2).unwrap(), 0.0).unwrap();
        assert_eq!(z.nnz(), 0);
        assert_eq!(z.row_ptr_one_based(), vec![1, 1, 1]);

        let unsorted =
            CrsMatrix::from_one_based(2, &[1, 3, 4], &[2, 1, 2], vec![5.0, 6.0, 7.0]).unwrap();
        let back = crs_from_dense(&dense_from_crs(&unsorted).unwrap(), 0.0).unwrap();
        assert_eq!(back, unsorted.canonicalize());
    }

    #[test]
    fn oracle_cap_is_enforced() {
        assert!(matches!(
            DenseMatrix::zeros(ORACLE_CAP + 1),
            Err(Error::OracleCap {
                cap: ORACLE_CAP,
                ..
            })
        ));
        assert!(dense_from_crs(&CrsMatrix::empty(ORACLE_CAP + 1)).is_err());
    }

    #[test]
    fn coo_checks() {
        let ok =
            CooMatrix::from_one_based(2, &[1, 2], &[2, 1], vec![1.0, 1.0], CooOrdering::RowMajor);
        assert!(ok.is_ok());
        let dup = CooMatrix::from_parts_unchecked(
            2,
            vec![0, 0],
            vec![0, 0],
            vec![1.0, 2.0],
            CooOrdering::Unordered,
        );
        assert_eq!(
            dup.violations(),
            vec![Violation::DuplicateEntry { row: 1, col: 1 }]
        );
        let bad_order = CooMatrix::from_parts_unchecked(
            2,
            vec![1, 0],
            vec![0, 1],
            vec![1.0, 2.0],
            CooOrdering::RowMajor,
        );
        assert_eq!(
            bad_order.violations(),
            vec![Violation::OrderingBroken {
                ordering: CooOrdering::RowMajor,
                entry: 2
            }]
        );
        let col_ok = CooMatrix::from_parts_unchecked(
            2,
            vec![1, 0],
            vec![0, 1],
            vec![1.0, 2.0],
            CooOrdering::ColMajor,
        );
        assert!(col_ok.is_valid());
    }

    #[test]
    fn ell_padding_rules() {
        // [[a, b], [c, 0]] band-major
        let ok = EllMatrix::new(2, 2, vec![1.0, 3.0, 2.0, 0.0], vec![0, 0, 1, 1], vec![2, 1]);
        assert!(ok.is_ok());
        let bad_val = EllMatrix::from_parts_unchecked(
            2,
            2,
            vec![1.0, 3.0, 2.0, 9.0],
            vec![0, 0, 1, 1],
            vec![2, 1],
        );
        assert_eq!(
            bad_val.violations(),
            vec![Violation::PaddingValue {
                band: 2,
                row: 2,
                value: 9.0
            }]
        );
        let bad_col = EllMatrix::from_parts_unchecked(
            2,
            2,
            vec![1.0, 3.0, 2.0, 0.0],
            vec![0, 0, 1, 0],
            vec![2, 1],
        );
        assert_eq!(
            bad_col.violations(),
            vec![Violation::PaddingColumn {
                band: 2,
                row: 2,
                col: 1
            }]
        );
        let ell = ok.unwrap();
        assert_eq!(ell.stored_nnz() + ell.padding_count(), 4);
        assert!(ell.with_extra_padding_bands(3).is_valid());
    }

    #[test]
    fn ccs_mirror_validation() {
        let m = CcsMatrix::from_parts_unchecked(2, vec![0, 1, 3], vec![0, 0, 5], vec![1.0; 3]);
        let v = m.violations();
        assert_eq!(v.len(), 1);
        assert_eq!(
            v[0].to_string(),
            "row index 6 out of range [1, 2] at entry 3"
        );
    }
}
