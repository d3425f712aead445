#![allow(dead_code)]

use std::collections::HashSet;

use proptest::prelude::*;
use spmv_at::formats::{CrsMatrix, Idx};
use spmv_at::rng::SplitMix64;

/// Builds CRS from triplets, keeping the first of any repeated position and
/// the given order within rows (so rows are generally unsorted).
pub fn crs_from_triplets(n: usize, entries: &[(usize, usize, f64)]) -> CrsMatrix {
    let mut seen = HashSet::new();
    let mut rows: Vec<Vec<(Idx, f64)>> = vec![Vec::new(); n];
    for &(i, j, v) in entries {
        if seen.insert((i, j)) {
            rows[i].push((j as Idx, v));
        }
    }
    let mut row_ptr = vec![0];
    let mut col_idx = Vec::new();
    let mut values = Vec::new();
    for r in rows {
        for (j, v) in r {
            col_idx.push(j);
            values.push(v);
        }
        row_ptr.push(col_idx.len());
    }
    CrsMatrix::new(n, row_ptr, col_idx, values).expect("valid by construction")
}

/// Random matrix with `1 <= n <= max_n`, `nnz <= min(max_nnz, n^2)`, values
/// in `[-1, 1)`, unsorted rows.
pub fn random_crs(rng: &mut SplitMix64, max_n: usize, max_nnz: usize) -> CrsMatrix {
    let n = 1 + rng.below(max_n);
    let cap = max_nnz.min(n * n);
    let nnz = rng.below(cap + 1);
    let mut positions = rng.distinct_sorted(n * n, nnz);
    // shuffle so rows come out unsorted
    for k in (1..positions.len()).rev() {
        let t = rng.below(k + 1);
        positions.swap(k, t);
    }
    let entries: Vec<_> = positions
        .into_iter()
        .map(|p| (p / n, p % n, rng.symmetric()))
        .collect();
    crs_from_triplets(n, &entries)
}

pub fn arb_crs(max_n: usize, max_nnz: usize) -> impl Strategy<Value = CrsMatrix> {
    (1..=max_n).prop_flat_map(move |n| {
        prop::collection::vec((0..n, 0..n, -1.0f64..1.0), 0..=max_nnz)
            .prop_map(move |e| crs_from_triplets(n, &e))
    })
}

pub fn arb_matrix_and_x(
    max_n: usize,
    max_nnz: usize,
) -> impl Strategy<Value = (CrsMatrix, Vec<f64>)> {
    arb_crs(max_n, max_nnz).prop_flat_map(|m| {
        let n = m.n();
        (Just(m), prop::collection::vec(-1.0f64..1.0, n))
    })
}

/// Max-norm error relative to the reference (absolute when it is zero).
pub fn rel_err(y: &[f64], reference: &[f64]) -> f64 {
    assert_eq!(y.len(), reference.len());
    let scale = reference.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let diff = y
        .iter()
        .zip(reference)
        .fold(0.0f64, |a, (u, v)| a.max((u - v).abs()));
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}

/// Every candidate value in the set is checked against all records.
pub fn brute_force_d_star(points: &[(f64, f64)], c: f64) -> f64 {
    points
        .iter()
        .map(|&(d, _)| d)
        .filter(|&v| points.iter().filter(|p| p.0 <= v).all(|p| p.1 >= c))
        .fold(0.0, f64::max)
}

/// Neumaier-compensated sum; a plain running sum drifts by ~1e-12 relative
/// over a million terms, too coarse for an oracle.
pub fn compensated_sum(it: impl Iterator<Item = f64>) -> f64 {
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for v in it {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Population mean, standard deviation and CV via two compensated passes.
pub fn two_pass_stats(counts: &[usize]) -> (f64, f64, f64) {
    let n = counts.len() as f64;
    let mean = compensated_sum(counts.iter().map(|&c| c as f64)) / n;
    let var = compensated_sum(counts.iter().map(|&c| (c as f64 - mean).powi(2))) / n;
    let sd = var.sqrt();
    (mean, sd, sd / mean)
}

pub fn triplet_multiset(it: impl Iterator<Item = (usize, usize, f64)>) -> Vec<(usize, usize, u64)> {
    let mut v: Vec<_> = it.map(|(i, j, x)| (i, j, x.to_bits())).collect();
    v.sort_unstable();
    v
}
