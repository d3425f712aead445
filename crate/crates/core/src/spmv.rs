//! SpMV kernels: the sequential CRS baseline and four lane-parallel variants.
//!
//! | kernel      | parallel range | scratch            |
//! |-------------|----------------|--------------------|
//! | `coo-col`   | entries        | per-lane `yy`      |
//! | `coo-row`   | entries        | per-lane `yy`      |
//! | `ell-inner` | rows           | none (disjoint `y`)|
//! | `ell-outer` | bands          | per-lane `yy`      |
//!
//! Work is split by [`partition_range`] into contiguous chunks and the
//! per-lane partial vectors are summed serially in lane order by
//! [`reduce_partials`], so results are bitwise reproducible for a fixed lane
//! count. `lanes == 1` runs on the calling thread.

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::formats::{CooMatrix, CooOrdering, CrsMatrix, EllMatrix};

/// Contiguous per-lane chunks of `0..range_len`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ThreadPartition {
    range_len: usize,
    chunks: Vec<Range<usize>>,
}

impl ThreadPartition {
    pub fn lanes(&self) -> usize {
        self.chunks.len()
    }

    pub fn range_len(&self) -> usize {
        self.range_len
    }

    /// 0-based half-open chunk of lane `k`.
    pub fn chunk(&self, k: usize) -> Range<usize> {
        self.chunks[k].clone()
    }

    pub fn chunks(&self) -> &[Range<usize>] {
        &self.chunks
    }

    /// 1-based inclusive starts. An empty lane has `istart > iend`.
    pub fn istart(&self) -> Vec<usize> {
        self.chunks.iter().map(|c| c.start + 1).collect()
    }

    /// 1-based inclusive ends.
    pub fn iend(&self) -> Vec<usize> {
        self.chunks.iter().map(|c| c.end).collect()
    }
}

/// Near-equal split; the first `range_len % lanes` lanes get one extra item.
pub fn partition_range(range_len: usize, lanes: usize) -> Result<ThreadPartition> {
    if lanes == 0 {
        return Err(Error::ZeroLanes);
    }
    let base = range_len / lanes;
    let extra = range_len % lanes;
    let mut start = 0;
    let chunks = (0..lanes)
        .map(|k| {
            let len = base + usize::from(k < extra);
            let c = start..start + len;
            start += len;
            c
        })
        .collect();
    Ok(ThreadPartition { range_len, chunks })
}

/// Per-lane scratch vectors `yy[k]`, each of length `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialResults {
    pub n: usize,
    pub yy: Vec<Vec<f64>>,
}

impl PartialResults {
    pub fn lanes(&self) -> usize {
        self.yy.len()
    }
}

/// `y[i] = yy[0][i] + yy[1][i] + ...`, lanes summed in ascending order.
pub fn reduce_partials(pr: &PartialResults) -> Vec<f64> {
    let mut y = vec![0.0; pr.n];
    for lane in &pr.yy {
        for (yi, v) in y.iter_mut().zip(lane) {
            *yi += v;
        }
    }
    y
}

/// Runs `work(k)` for every lane `k` and collects the results in lane order.
/// Lane 0 runs on the calling thread.
fn run_lanes<T, F>(lanes: usize, work: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    if lanes == 1 {
        return vec![work(0)];
    }
    std::thread::scope(|s| {
        let handles: Vec<_> = (1..lanes)
            .map(|k| {
                s.spawn({
                    let work = &work;
                    move || work(k)
                })
            })
            .collect();
        let mut out = Vec::with_capacity(lanes);
        out.push(work(0));
        out.extend(
            handles
                .into_iter()
                .map(|h| h.join().expect("SpMV lane panicked")),
        );
        out
    })
}

fn check_x(n: usize, x: &[f64]) -> Result<()> {
    if x.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: x.len(),
        });
    }
    Ok(())
}

/// Sequential CRS baseline: one left-to-right dot product per row.
pub fn spmv_crs(m: &CrsMatrix, x: &[f64]) -> Result<Vec<f64>> {
    check_x(m.n(), x)?;
    let row_ptr = m.row_ptr();
    let cols = m.col_idx();
    let vals = m.values();
    let mut y = vec![0.0; m.n()];
    for (i, yi) in y.iter_mut().enumerate() {
        let mut acc = 0.0;
        for p in row_ptr[i]..row_ptr[i + 1] {
            acc += vals[p] * x[cols[p] as usize];
        }
        *yi = acc;
    }
    Ok(y)
}

fn coo_outer(m: &CooMatrix, x: &[f64], lanes: usize) -> Result<Vec<f64>> {
    let part = partition_range(m.nnz(), lanes)?;
    let n = m.n();
    let rows = m.row_idx();
    let cols = m.col_idx();
    let vals = m.values();
    let yy = run_lanes(lanes, |k| {
        let mut yy = vec![0.0; n];
        for p in part.chunk(k) {
            yy[rows[p] as usize] += vals[p] * x[cols[p] as usize];
        }
        yy
    });
    Ok(reduce_partials(&PartialResults { n, yy }))
}

fn check_ordering(kernel: &'static str, m: &CooMatrix, expected: CooOrdering) -> Result<()> {
    if m.ordering() != expected {
        return Err(Error::WrongOrdering {
            kernel,
            expected,
            found: m.ordering(),
        });
    }
    Ok(())
}

/// Entry range split across lanes over column-major triplets.
pub fn spmv_coo_col_outer(m: &CooMatrix, x: &[f64], lanes: usize) -> Result<Vec<f64>> {
    check_ordering("coo-col", m, CooOrdering::ColMajor)?;
    check_x(m.n(), x)?;
    coo_outer(m, x, lanes)
}

/// Entry range split across lanes over row-major triplets. A chunk boundary
/// can cut through a row, so the per-lane scratch is still needed.
pub fn spmv_coo_row_outer(m: &CooMatrix, x: &[f64], lanes: usize) -> Result<Vec<f64>> {
    check_ordering("coo-row", m, CooOrdering::RowMajor)?;
    check_x(m.n(), x)?;
    coo_outer(m, x, lanes)
}

/// Bands in serial order, rows split across lanes; each lane owns a disjoint
/// slice of `y`, so there is no reduction.
///
/// Lanes run their row slice through every band without a barrier between
/// bands: rows never interact, so each `y[i]` sees exactly the band-by-band
/// accumulation order of the barrier version.
pub fn spmv_ell_inner(m: &EllMatrix, x: &[f64], lanes: usize) -> Result<Vec<f64>> {
    check_x(m.n(), x)?;
    let part = partition_range(m.n(), lanes)?;
    let n = m.n();
    let nz = m.nz();
    let vals = m.values();
    let cols = m.col_idx();
    let slices = run_lanes(lanes, |k| {
        let rows = part.chunk(k);
        let mut y = vec![0.0; rows.len()];
        for band in 0..nz {
            let base = n * band;
            for (yi, i) in y.iter_mut().zip(rows.clone()) {
                let p = base + i;
                *yi += vals[p] * x[cols[p] as usize];
            }
        }
        y
    });
    Ok(slices.concat())
}

/// Band range split across lanes; each lane sweeps all rows of its bands into
/// its own scratch vector, then a serial reduction. At most `nz` lanes do
/// any work.
pub fn spmv_ell_outer(m: &EllMatrix, x: &[f64], lanes: usize) -> Result<Vec<f64>> {
    check_x(m.n(), x)?;
    let part = partition_range(m.nz(), lanes)?;
    let n = m.n();
    let vals = m.values();
    let cols = m.col_idx();
    let yy = run_lanes(lanes, |k| {
        let mut yy = vec![0.0; n];
        for band in part.chunk(k) {
            let base = n * band;
            for (i, yi) in yy.iter_mut().enumerate() {
                let p = base + i;
                *yi += vals[p] * x[cols[p] as usize];
            }
        }
        yy
    });
    Ok(reduce_partials(&PartialResults { n, yy }))
}

/// Kernel menu.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kernel {
    Crs,
    CooRow,
    CooCol,
    EllInner,
    EllOuter,
}

impl Kernel {
    pub const ALL: [Kernel; 5] = [
        Kernel::Crs,
        Kernel::CooRow,
        Kernel::CooCol,
        Kernel::EllInner,
        Kernel::EllOuter,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Kernel::Crs => "crs",
            Kernel::CooRow => "coo-row",
            Kernel::CooCol => "coo-col",
            Kernel::EllInner => "ell-inner",
            Kernel::EllOuter => "ell-outer",
        }
    }

    pub fn is_ell(self) -> bool {
        matches!(self, Kernel::EllInner | Kernel::EllOuter)
    }
}

impl fmt::Display for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Kernel {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Kernel::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown kernel {s:?}"))
    }
}

/// A matrix in whichever format a kernel consumes.
#[derive(Debug, Clone, Copy)]
pub enum MatrixRef<'a> {
    Crs(&'a CrsMatrix),
    Coo(&'a CooMatrix),
    Ell(&'a EllMatrix),
}

impl MatrixRef<'_> {
    pub fn format_name(&self) -> &'static str {
        match self {
            MatrixRef::Crs(_) => "CRS",
            MatrixRef::Coo(_) => "COO",
            MatrixRef::Ell(_) => "ELL",
        }
    }
}

/// Dispatches `kernel`; the CRS baseline ignores `lanes`.
pub fn run_kernel(kernel: Kernel, m: MatrixRef<'_>, x: &[f64], lanes: usize) -> Result<Vec<f64>> {
    match (kernel, m) {
        (Kernel::Crs, MatrixRef::Crs(m)) => spmv_crs(m, x),
        (Kernel::CooRow, MatrixRef::Coo(m)) => spmv_coo_row_outer(m, x, lanes),
        (Kernel::CooCol, MatrixRef::Coo(m)) => spmv_coo_col_outer(m, x, lanes),
        (Kernel::EllInner, MatrixRef::Ell(m)) => spmv_ell_inner(m, x, lanes),
        (Kernel::EllOuter, MatrixRef::Ell(m)) => spmv_ell_outer(m, x, lanes),
        (k, m) => Err(Error::KernelFormatMismatch {
            kernel: k.name(),
            format: m.format_name(),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::convert::{crs_to_coo_col, crs_to_coo_row, crs_to_ell};

    #[test]
    fn partition_examples() {
        let p = partition_range(10, 1).unwrap();
        assert_eq!((p.istart(), p.iend()), (vec![1], vec![10]));

        let p = partition_range(10, 3).unwrap();
        assert_eq!(p.istart(), vec![1, 5, 8]);
        assert_eq!(p.iend(), vec![4, 7, 10]);

        let p = partition_range(2, 4).unwrap();
        assert_eq!(p.istart(), vec![1, 2, 3, 3]);
        assert_eq!(p.iend(), vec![1, 2, 2, 2]);

        assert!(matches!(partition_range(5, 0), Err(Error::ZeroLanes)));
    }

    #[test]
    fn crs_examples() {
        let x = [0.5, -1.0, 2.0];
        assert_eq!(spmv_crs(&CrsMatrix::identity(3), &x).unwrap(), x.to_vec());

        let m = CrsMatrix::from_one_based(2, &[1, 2, 3], &[2, 1], vec![2.0, 3.0]).unwrap();
        assert_eq!(spmv_crs(&m, &[1.0, 1.0]).unwrap(), vec![2.0, 3.0]);

        assert_eq!(spmv_crs(&CrsMatrix::empty(3), &x).unwrap(), vec![0.0; 3]);
        assert!(matches!(
            spmv_crs(&CrsMatrix::identity(2), &x),
            Err(Error::DimensionMismatch {
                expected: 2,
                found: 3
            })
        ));
    }

    #[test]
    fn coo_kernels_on_identity_and_sparse_lanes() {
        let id = CrsMatrix::identity(4);
        let x = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(
            spmv_coo_col_outer(&crs_to_coo_col(&id), &x, 2).unwrap(),
            x.to_vec()
        );
        assert_eq!(
            spmv_coo_row_outer(&crs_to_coo_row(&id), &x, 2).unwrap(),
            x.to_vec()
        );

        // nnz = 3 with 8 lanes: five empty lanes
        let m =
            CrsMatrix::from_one_based(3, &[1, 2, 3, 4], &[3, 1, 2], vec![2.0, -1.0, 0.5]).unwrap();
        let x = [1.0, 2.0, 4.0];
        let expect = spmv_crs(&m, &x).unwrap();
        assert_eq!(
            spmv_coo_col_outer(&crs_to_coo_col(&m), &x, 8).unwrap(),
            expect
        );
        assert_eq!(
            spmv_coo_row_outer(&crs_to_coo_row(&m), &x, 8).unwrap(),
            expect
        );
    }

    #[test]
    fn coo_ordering_contract() {
        let id = CrsMatrix::identity(2);
        let err = spmv_coo_col_outer(&crs_to_coo_row(&id), &[1.0, 1.0], 1).unwrap_err();
        assert!(matches!(
            err,
            Error::WrongOrdering {
                kernel: "coo-col",
                ..
            }
        ));
        let err = spmv_coo_row_outer(&crs_to_coo_col(&id), &[1.0, 1.0], 1).unwrap_err();
        assert!(matches!(
            err,
            Error::WrongOrdering {
                kernel: "coo-row",
                ..
            }
        ));
    }

    #[test]
    fn ell_padding_contributes_nothing() {
        // [[a, b], [c, 0]]
        let (a, b, c) = (1.5, -2.0, 0.25);
        let m = CrsMatrix::from_one_based(2, &[1, 3, 4], &[1, 2, 1], vec![a, b, c]).unwrap();
        let ell = crs_to_ell(&m, None).unwrap();
        let x = [3.0, 5.0];
        let expect = vec![a * 3.0 + b * 5.0, c * 3.0];
        for lanes in [1, 2, 3] {
            assert_eq!(spmv_ell_inner(&ell, &x, lanes).unwrap(), expect);
            assert_eq!(spmv_ell_outer(&ell, &x, lanes).unwrap(), expect);
        }
    }

    #[test]
    fn ell_outer_with_more_lanes_than_bands() {
        let id = crs_to_ell(&CrsMatrix::identity(5), None).unwrap();
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(spmv_ell_outer(&id, &x, 4).unwrap(), x.to_vec());
        assert_eq!(spmv_ell_inner(&id, &x, 4).unwrap(), x.to_vec());
    }

    #[test]
    fn reduce_examples() {
        let single = PartialResults {
            n: 3,
            yy: vec![vec![1.0, 2.0, 3.0]],
        };
        assert_eq!(reduce_partials(&single), vec![1.0, 2.0, 3.0]);
        let two = PartialResults {
            n: 2,
            yy: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
        };
        assert_eq!(reduce_partials(&two), vec![1.0, 1.0]);
    }

    #[test]
    fn dispatch_rejects_format_mismatch() {
        let id = CrsMatrix::identity(2);
        let err = run_kernel(Kernel::EllInner, MatrixRef::Crs(&id), &[1.0, 1.0], 1).unwrap_err();
        assert!(matches!(
            err,
            Error::KernelFormatMismatch {
                kernel: "ell-inner",
                format: "CRS"
            }
        ));
        assert_eq!("ell-outer".parse::<Kernel>().unwrap(), Kernel::EllOuter);
        assert!("csr".parse::<Kernel>().is_err());
    }
}
