//! Storage transformations between the formats in [`crate::formats`].
//!
//! The row-wise targets (COO row-major, ELL) are read straight off the CRS
//! row pointers. The column-wise COO target goes through CCS in two phases:
//! CRS -> CCS by counting, prefix-summing and scattering, then CCS -> COO.
//! Every conversion is serial and leaves its input untouched.

use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::formats::{
    CcsMatrix, CooMatrix, CooOrdering, CrsMatrix, EllMatrix, Idx, INDEX_BYTES, VALUE_BYTES,
};

pub fn crs_to_coo_row(m: &CrsMatrix) -> CooMatrix {
    let mut row_idx = Vec::with_capacity(m.nnz());
    for i in 0..m.n() {
        row_idx.extend(std::iter::repeat_n(i as Idx, m.row_len(i)));
    }
    CooMatrix::from_parts_unchecked(
        m.n(),
        row_idx,
        m.col_idx().to_vec(),
        m.values().to_vec(),
        CooOrdering::RowMajor,
    )
}

/// Phase I of the column-wise path.
pub fn crs_to_ccs(m: &CrsMatrix) -> CcsMatrix {
    let n = m.n();
    let nnz = m.nnz();
    let row_ptr = m.row_ptr();
    let col_idx = m.col_idx();
    let values = m.values();

    // Count entries per column.
    let mut next = vec![0usize; n];
    for &j in col_idx {
        next[j as usize] += 1;
    }

    // Exclusive prefix sum into the column pointers.
    let mut col_ptr = vec![0usize; n + 1];
    for j in 0..n {
        col_ptr[j + 1] = col_ptr[j] + next[j];
    }
    next.copy_from_slice(&col_ptr[..n]);

    // Scatter each row's entries to the next free slot of their column.
    let mut row_idx = vec![0 as Idx; nnz];
    let mut out_values = vec![0.0; nnz];
    for i in 0..n {
        for p in row_ptr[i]..row_ptr[i + 1] {
            let j = col_idx[p] as usize;
            let k = next[j];
            next[j] += 1;
            out_values[k] = values[p];
            row_idx[k] = i as Idx;
        }
    }

    CcsMatrix::from_parts_unchecked(n, col_ptr, row_idx, out_values)
}

/// Phase II of the column-wise path.
pub fn ccs_to_coo_col(m: &CcsMatrix) -> CooMatrix {
    let mut col_idx = Vec::with_capacity(m.nnz());
    let ptr = m.col_ptr();
    for j in 0..m.n() {
        col_idx.extend(std::iter::repeat_n(j as Idx, ptr[j + 1] - ptr[j]));
    }
    CooMatrix::from_parts_unchecked(
        m.n(),
        m.row_idx().to_vec(),
        col_idx,
        m.values().to_vec(),
        CooOrdering::ColMajor,
    )
}

pub fn crs_to_coo_col(m: &CrsMatrix) -> CooMatrix {
    ccs_to_coo_col(&crs_to_ccs(m))
}

/// `n * nz * (value_bytes + index_bytes)`, where `nz` is the longest row.
pub fn estimate_ell_bytes(m: &CrsMatrix, value_bytes: u64, index_bytes: u64) -> u64 {
    (m.n() as u64) * (m.max_row_len() as u64) * (value_bytes + index_bytes)
}

/// Pads every row to the longest row length, band-major.
///
/// Rows keep their CRS entry order. `max_bytes = None` means unlimited;
/// otherwise the footprint estimate is checked before anything is allocated.
pub fn crs_to_ell(m: &CrsMatrix, max_bytes: Option<u64>) -> Result<EllMatrix> {
    if let Some(limit) = max_bytes {
        let estimate = estimate_ell_bytes(m, VALUE_BYTES, INDEX_BYTES);
        if estimate > limit {
            return Err(Error::EllTooLarge { estimate, limit });
        }
    }
    let n = m.n();
    let nz = m.max_row_len();
    let slots = n * nz;
    let mut values = vec![0.0; slots];
    let mut col_idx = vec![0 as Idx; slots];
    let mut row_len = Vec::with_capacity(n);
    let row_ptr = m.row_ptr();
    for i in 0..n {
        let start = row_ptr[i];
        let len = row_ptr[i + 1] - start;
        for k in 0..nz {
            let off = n * k + i;
            if k < len {
                values[off] = m.values()[start + k];
                col_idx[off] = m.col_idx()[start + k];
            } else {
                col_idx[off] = i as Idx;
            }
        }
        row_len.push(len);
    }
    Ok(EllMatrix::from_parts_unchecked(
        n, nz, values, col_idx, row_len,
    ))
}

/// Canonical CRS (columns ascending within rows). Duplicate positions are
/// refused, never summed.
pub fn coo_to_crs(m: &CooMatrix) -> Result<CrsMatrix> {
    let n = m.n();
    let mut seen = HashSet::with_capacity(m.nnz());
    for (i, j, _) in m.triplets() {
        if !seen.insert((i, j)) {
            return Err(Error::DuplicateEntry {
                row: i + 1,
                col: j + 1,
            });
        }
    }
    let mut counts = vec![0usize; n + 1];
    for &i in m.row_idx() {
        counts[i as usize + 1] += 1;
    }
    for i in 0..n {
        counts[i + 1] += counts[i];
    }
    let row_ptr = counts.clone();
    let mut next = counts;
    let mut col_idx = vec![0 as Idx; m.nnz()];
    let mut values = vec![0.0; m.nnz()];
    for (i, j, v) in m.triplets() {
        let k = next[i];
        next[i] += 1;
        col_idx[k] = j as Idx;
        values[k] = v;
    }
    Ok(CrsMatrix::from_parts_unchecked(n, row_ptr, col_idx, values).canonicalize())
}

/// Drops padding by the per-row stored lengths (never by testing values), so
/// explicitly stored zeros survive.
pub fn ell_to_crs(m: &EllMatrix) -> CrsMatrix {
    let n = m.n();
    let mut row_ptr = Vec::with_capacity(n + 1);
    let mut col_idx = Vec::with_capacity(m.stored_nnz());
    let mut values = Vec::with_capacity(m.stored_nnz());
    row_ptr.push(0);
    for i in 0..n {
        for k in 0..m.row_len()[i] {
            let off = m.offset(k, i);
            col_idx.push(m.col_idx()[off]);
            values.push(m.values()[off]);
        }
        row_ptr.push(col_idx.len());
    }
    CrsMatrix::from_parts_unchecked(n, row_ptr, col_idx, values).canonicalize()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formats::{dense_from_crs, Validate};

    const A: f64 = 1.5;
    const B: f64 = -2.0;
    const C: f64 = 0.25;

    /// [[a, b], [0, c]]
    fn upper() -> CrsMatrix {
        CrsMatrix::from_one_based(2, &[1, 3, 4], &[1, 2, 2], vec![A, B, C]).unwrap()
    }

    #[test]
    fn coo_row_examples() {
        let coo = crs_to_coo_row(&CrsMatrix::identity(2));
        assert_eq!(coo.row_idx_one_based(), vec![1, 2]);
        assert_eq!(coo.col_idx_one_based(), vec![1, 2]);
        assert_eq!(coo.values(), &[1.0, 1.0]);

        let coo = crs_to_coo_row(&upper());
        assert_eq!(coo.row_idx_one_based(), vec![1, 1, 2]);
        assert_eq!(coo.ordering(), CooOrdering::RowMajor);
        assert!(coo.is_valid());

        assert_eq!(crs_to_coo_row(&CrsMatrix::empty(4)).nnz(), 0);
    }

    #[test]
    fn ccs_examples() {
        let ccs = crs_to_ccs(&upper());
        assert_eq!(ccs.values(), &[A, B, C]);
        assert_eq!(ccs.row_idx_one_based(), vec![1, 1, 2]);
        assert_eq!(ccs.col_ptr_one_based(), vec![1, 2, 4]);

        let ccs = crs_to_ccs(&CrsMatrix::identity(3));
        assert_eq!(ccs.col_ptr_one_based(), vec![1, 2, 3, 4]);
        assert_eq!(ccs.row_idx_one_based(), vec![1, 2, 3]);
    }

    #[test]
    fn ccs_matches_dense_transpose() {
        // symmetric pattern, unsymmetric values, unsorted rows
        let m = CrsMatrix::from_one_based(
            3,
            &[1, 3, 6, 8],
            &[2, 1, 3, 1, 2, 2, 3],
            vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0],
        )
        .unwrap();
        let t = crs_to_ccs(&m).into_transpose_crs();
        assert!(t.is_valid());
        assert_eq!(
            dense_from_crs(&t).unwrap(),
            dense_from_crs(&m).unwrap().transpose()
        );
        // same pattern as the original since the pattern is symmetric
        assert_eq!(t.canonicalize().row_ptr(), m.row_ptr());
        assert_eq!(t.canonicalize().col_idx(), m.canonicalize().col_idx());
    }

    #[test]
    fn coo_col_examples() {
        let coo = crs_to_coo_col(&upper());
        assert_eq!(coo.col_idx_one_based(), vec![1, 2, 2]);
        assert_eq!(coo.row_idx_one_based(), vec![1, 1, 2]);
        assert_eq!(coo.values(), &[A, B, C]);
        assert_eq!(coo.ordering(), CooOrdering::ColMajor);

        let id = CrsMatrix::identity(5);
        let by_col = crs_to_coo_col(&id);
        let by_row = crs_to_coo_row(&id);
        assert_eq!(by_col.row_idx(), by_row.row_idx());
        assert_eq!(by_col.col_idx(), by_row.col_idx());
        assert_eq!(crs_to_coo_col(&CrsMatrix::empty(3)).nnz(), 0);
    }

    #[test]
    fn ccs_to_coo_col_mirrors_row_expansion() {
        let ccs = CcsMatrix::from_one_based(2, &[1, 3, 4], &[1, 2, 2], vec![A, B, C]).unwrap();
        let coo = ccs_to_coo_col(&ccs);
        assert_eq!(coo.col_idx_one_based(), vec![1, 1, 2]);
        assert_eq!(coo.row_idx_one_based(), vec![1, 2, 2]);
    }

    #[test]
    fn ell_fill_example() {
        // [[a, b], [c, 0]]
        let m = CrsMatrix::from_one_based(2, &[1, 3, 4], &[1, 2, 1], vec![A, B, C]).unwrap();
        let ell = crs_to_ell(&m, None).unwrap();
        assert_eq!(ell.nz(), 2);
        assert_eq!(ell.values(), &[A, C, B, 0.0]);
        assert_eq!(ell.col_idx_one_based(), vec![1, 1, 2, 2]);
        assert_eq!(ell.stored_nnz(), 3);
        assert!(ell.is_valid());
    }

    #[test]
    fn ell_constant_rows_have_no_padding() {
        // periodic tridiagonal: every row has exactly three entries
        let n = 6;
        let mut ptr = vec![1];
        let mut cols = Vec::new();
        for i in 0..n {
            for d in [n - 1, 0, 1] {
                cols.push((i + d) % n + 1);
            }
            ptr.push(cols.len() + 1);
        }
        let m = CrsMatrix::from_one_based(n, &ptr, &cols, vec![1.0; 3 * n]).unwrap();
        let ell = crs_to_ell(&m, None).unwrap();
        assert_eq!(ell.nz(), 3);
        assert_eq!(ell.padding_count(), 0);
        assert_eq!(ell.stored_nnz(), n * 3);
    }

    #[test]
    fn estimate_examples() {
        let m = CrsMatrix::from_one_based(2, &[1, 3, 4], &[1, 2, 1], vec![A, B, C]).unwrap();
        assert_eq!(estimate_ell_bytes(&m, 8, 4), 48);
        assert_eq!(estimate_ell_bytes(&CrsMatrix::empty(10), 8, 4), 0);
    }

    #[test]
    fn ell_guard_refuses_torso_like_input() {
        // n = 10^4, one row of 5*10^3 entries: 10^4 * 5*10^3 * 12 = 6*10^8 bytes
        let n = 10_000;
        let heavy = 5_000;
        let mut ptr = vec![0];
        let mut cols: Vec<Idx> = Vec::new();
        for i in 0..n {
            if i == 0 {
                cols.extend(0..heavy as Idx);
            } else {
                cols.push(i as Idx);
            }
            ptr.push(cols.len());
        }
        let nnz = cols.len();
        let m = CrsMatrix::new(n, ptr, cols, vec![1.0; nnz]).unwrap();
        assert_eq!(
            estimate_ell_bytes(&m, VALUE_BYTES, INDEX_BYTES),
            600_000_000
        );
        match crs_to_ell(&m, Some(100_000_000)) {
            Err(Error::EllTooLarge { estimate, limit }) => {
                assert_eq!(estimate, 600_000_000);
                assert_eq!(limit, 100_000_000);
            }
            other => panic!("expected refusal, got {other:?}"),
        }
    }

    #[test]
    fn round_trips() {
        let m =
            CrsMatrix::from_one_based(3, &[1, 3, 3, 5], &[3, 1, 2, 1], vec![1.0, 0.0, 3.0, 4.0])
                .unwrap();
        let canon = m.canonicalize();
        assert_eq!(coo_to_crs(&crs_to_coo_row(&m)).unwrap(), canon);
        assert_eq!(coo_to_crs(&crs_to_coo_col(&m)).unwrap(), canon);
        // the explicit 0.0 at (1, 1) survives
        assert_eq!(ell_to_crs(&crs_to_ell(&m, None).unwrap()), canon);
    }

    #[test]
    fn duplicate_coo_is_refused() {
        let coo = CooMatrix::from_parts_unchecked(
            2,
            vec![0, 0],
            vec![0, 0],
            vec![1.0, 2.0],
            CooOrdering::Unordered,
        );
        match coo_to_crs(&coo) {
            Err(Error::DuplicateEntry { row: 1, col: 1 }) => {}
            other => panic!("expected duplicate refusal, got {other:?}"),
        }
    }
}
