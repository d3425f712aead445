//! Per-row entry statistics and the ELL suitability metric
//! `D_mat = sigma / mu` (coefficient of variation of the row lengths).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::formats::{CrsMatrix, RowHistogram};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RowStats {
    /// Mean stored entries per row.
    pub mu: f64,
    /// Population standard deviation of the stored entries per row.
    pub sigma: f64,
    pub d_mat: f64,
}

impl RowStats {
    /// Single pass: exact integer total for the mean, Welford's update for
    /// the variance. Explicitly stored zeros count.
    pub fn from_counts<I>(counts: I) -> Result<RowStats>
    where
        I: IntoIterator<Item = usize>,
    {
        let mut rows = 0u64;
        let mut total = 0u128;
        let mut mean = 0.0f64;
        let mut m2 = 0.0f64;
        for c in counts {
            rows += 1;
            total += c as u128;
            let c = c as f64;
            let delta = c - mean;
            mean += delta / rows as f64;
            m2 += delta * (c - mean);
        }
        if total == 0 {
            return Err(Error::EmptyMatrix);
        }
        let mu = total as f64 / rows as f64;
        let sigma = (m2 / rows as f64).sqrt();
        Ok(RowStats {
            mu,
            sigma,
            d_mat: sigma / mu,
        })
    }

    pub fn from_histogram(h: &RowHistogram) -> Result<RowStats> {
        Self::from_counts(h.counts.iter().copied())
    }
}

/// Refuses matrices without stored entries (`mu = 0`).
pub fn row_stats(m: &CrsMatrix) -> Result<RowStats> {
    if m.nnz() == 0 {
        return Err(Error::EmptyMatrix);
    }
    RowStats::from_counts(m.row_ptr().windows(2).map(|w| w[1] - w[0]))
}
