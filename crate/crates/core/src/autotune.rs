//! Run-time transformation auto-tuning.
//!
//! Cost model, for one matrix:
//!
//! ```text
//! sp = t_crs / t_ell       speedup of ELL SpMV over CRS SpMV
//! tt = t_trans / t_crs     transformation cost in CRS SpMV calls
//! r  = sp / tt             >= 1 when the speedup pays for the transformation
//! ```
//!
//! The off-line phase ([`offline_profile`]) measures `(d_mat, r)` for a set of
//! benchmark matrices and derives the threshold `d_star` with
//! [`find_d_star`]. The on-line phase ([`online_select`]) only needs the
//! input's row statistics: ELL is chosen iff `d_mat < d_star`.

use std::fmt;
use std::io;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::convert::{crs_to_coo_col, crs_to_coo_row, crs_to_ell};
use crate::error::{Error, Result};
use crate::formats::{CooMatrix, CrsMatrix, EllMatrix};
use crate::rng::SplitMix64;
use crate::spmv::{run_kernel, Kernel, MatrixRef};
use crate::stats::{row_stats, RowStats};

/// Default threshold constant.
pub const DEFAULT_C: f64 = 1.0;

/// Profile file schema version.
pub const PROFILE_VERSION: u32 = 1;

/// Wall-clock seconds, all strictly positive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Timings {
    pub t_crs: f64,
    pub t_ell: f64,
    pub t_trans: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostMetrics {
    pub sp: f64,
    pub tt: f64,
    pub r: f64,
}

fn check_positive(name: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::NonPositiveTiming { name, value })
    }
}

impl Timings {
    pub fn new(t_crs: f64, t_ell: f64, t_trans: f64) -> Result<Self> {
        check_positive("t_crs", t_crs)?;
        check_positive("t_ell", t_ell)?;
        check_positive("t_trans", t_trans)?;
        Ok(Timings {
            t_crs,
            t_ell,
            t_trans,
        })
    }
}

pub fn compute_metrics(t: &Timings) -> Result<CostMetrics> {
    let t = Timings::new(t.t_crs, t.t_ell, t.t_trans)?;
    let sp = t.t_crs / t.t_ell;
    let tt = t.t_trans / t.t_crs;
    Ok(CostMetrics { sp, tt, r: sp / tt })
}

/// Smallest `k` with `t_trans + k * t_ell <= k * t_crs`; `None` when ELL is
/// not faster.
pub fn amortization_iterations(t: &Timings) -> Option<u64> {
    let gain = t.t_crs - t.t_ell;
    if gain <= 0.0 {
        return None;
    }
    let pays = |k: u64| t.t_trans + k as f64 * t.t_ell <= k as f64 * t.t_crs;
    let mut k = (t.t_trans / gain).ceil().max(1.0) as u64;
    // the closed form can land one off either way under rounding
    while k > 1 && pays(k - 1) {
        k -= 1;
    }
    while !pays(k) {
        k += 1;
    }
    Some(k)
}

/// Median wall-clock seconds of one kernel call over `repeats` timed calls,
/// after one untimed warm-up call.
pub fn measure_spmv(
    kernel: Kernel,
    m: MatrixRef<'_>,
    x: &[f64],
    lanes: usize,
    repeats: usize,
) -> Result<f64> {
    if repeats == 0 {
        return Err(Error::ZeroRepeats);
    }
    std::hint::black_box(run_kernel(kernel, m, x, lanes)?);
    let mut samples = Vec::with_capacity(repeats);
    for _ in 0..repeats {
        let start = Instant::now();
        let y = run_kernel(kernel, m, std::hint::black_box(x), lanes)?;
        samples.push(start.elapsed().as_secs_f64());
        std::hint::black_box(y);
    }
    Ok(positive_seconds(median(&mut samples)))
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    if v.len() % 2 == 1 {
        v[mid]
    } else {
        0.5 * (v[mid - 1] + v[mid])
    }
}

// Clamp to the timer resolution so ratios stay defined.
fn positive_seconds(s: f64) -> f64 {
    s.max(1e-9)
}

/// Times exactly one serial CRS -> ELL conversion (no warm-up).
pub fn measure_transformation(m: &CrsMatrix, max_bytes: Option<u64>) -> Result<(EllMatrix, f64)> {
    let start = Instant::now();
    let ell = crs_to_ell(m, max_bytes)?;
    let secs = start.elapsed().as_secs_f64();
    Ok((ell, positive_seconds(secs)))
}

/// A matrix converted for some kernel.
#[derive(Debug, Clone)]
pub enum Transformed {
    Coo(CooMatrix),
    Ell(EllMatrix),
}

impl Transformed {
    pub fn as_ref(&self) -> MatrixRef<'_> {
        match self {
            Transformed::Coo(m) => MatrixRef::Coo(m),
            Transformed::Ell(m) => MatrixRef::Ell(m),
        }
    }
}

/// Times the one conversion `kernel` needs: CRS -> ELL for the ELL kernels,
/// CRS -> COO (row- or column-major) for the COO kernels.
pub fn measure_transformation_for(
    kernel: Kernel,
    m: &CrsMatrix,
    max_bytes: Option<u64>,
) -> Result<(Transformed, f64)> {
    let start = Instant::now();
    let out = match kernel {
        Kernel::EllInner | Kernel::EllOuter => Transformed::Ell(crs_to_ell(m, max_bytes)?),
        Kernel::CooRow => Transformed::Coo(crs_to_coo_row(m)),
        Kernel::CooCol => Transformed::Coo(crs_to_coo_col(m)),
        Kernel::Crs => {
            return Err(Error::Profile(
                "the CRS baseline cannot be a profiled kernel variant".into(),
            ))
        }
    };
    let secs = start.elapsed().as_secs_f64();
    Ok((out, positive_seconds(secs)))
}

/// One off-line measurement. Excluded records (ELL refused, empty matrix)
/// keep whatever was measured before the exclusion and carry no metrics.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRecord {
    pub matrix_id: String,
    pub n: usize,
    pub nnz: usize,
    pub stats: Option<RowStats>,
    pub t_crs: Option<f64>,
    pub t_ell: Option<f64>,
    pub t_trans: Option<f64>,
    pub metrics: Option<CostMetrics>,
    pub exclusion_reason: Option<String>,
}

impl BenchRecord {
    pub fn excluded(&self) -> bool {
        self.exclusion_reason.is_some()
    }

    pub fn timings(&self) -> Option<Timings> {
        Some(Timings {
            t_crs: self.t_crs?,
            t_ell: self.t_ell?,
            t_trans: self.t_trans?,
        })
    }

    /// `(d_mat, r)` when the record takes part in threshold finding.
    pub fn threshold_point(&self) -> Option<(f64, f64)> {
        if self.excluded() {
            return None;
        }
        Some((self.stats?.d_mat, self.metrics?.r))
    }
}

#[derive(Debug, Clone)]
pub struct ProfileConfig {
    pub machine_label: String,
    pub kernel: Kernel,
    pub lanes: usize,
    pub c: f64,
    pub repeats: usize,
    pub max_bytes: Option<u64>,
    /// Seed of the input vector `x`.
    pub seed: u64,
}

impl ProfileConfig {
    pub fn new(lanes: usize) -> Self {
        ProfileConfig {
            machine_label: String::new(),
            kernel: default_kernel(lanes),
            lanes,
            c: DEFAULT_C,
            repeats: 7,
            max_bytes: None,
            seed: 1,
        }
    }
}

/// `ell-outer` when several lanes are available, else `ell-inner`.
pub fn default_kernel(lanes: usize) -> Kernel {
    if lanes > 1 {
        Kernel::EllOuter
    } else {
        Kernel::EllInner
    }
}

/// Measures one matrix: row statistics, `t_crs` (sequential baseline), one
/// timed conversion, then `t_ell` with the configured kernel and lanes.
pub fn bench_matrix(id: &str, m: &CrsMatrix, cfg: &ProfileConfig) -> Result<BenchRecord> {
    let mut rec = BenchRecord {
        matrix_id: id.to_string(),
        n: m.n(),
        nnz: m.nnz(),
        stats: None,
        t_crs: None,
        t_ell: None,
        t_trans: None,
        metrics: None,
        exclusion_reason: None,
    };
    let stats = match row_stats(m) {
        Ok(s) => s,
        Err(e @ Error::EmptyMatrix) => {
            rec.exclusion_reason = Some(e.to_string());
            return Ok(rec);
        }
        Err(e) => return Err(e),
    };
    rec.stats = Some(stats);
    let x = SplitMix64::new(cfg.seed).symmetric_vec(m.n());
    rec.t_crs = Some(measure_spmv(
        Kernel::Crs,
        MatrixRef::Crs(m),
        &x,
        1,
        cfg.repeats,
    )?);
    let (converted, t_trans) = match measure_transformation_for(cfg.kernel, m, cfg.max_bytes) {
        Ok(v) => v,
        Err(e @ Error::EllTooLarge { .. }) => {
            rec.exclusion_reason = Some(e.to_string());
            return Ok(rec);
        }
        Err(e) => return Err(e),
    };
    rec.t_trans = Some(t_trans);
    rec.t_ell = Some(measure_spmv(
        cfg.kernel,
        converted.as_ref(),
        &x,
        cfg.lanes,
        cfg.repeats,
    )?);
    rec.metrics = Some(compute_metrics(
        &rec.timings().expect("all timings measured"),
    )?);
    Ok(rec)
}

/// Off-line phase over `matrix_set`, one matrix at a time.
pub fn offline_profile(matrix_set: &[(String, CrsMatrix)], cfg: &ProfileConfig) -> Result<Profile> {
    if matrix_set.is_empty() {
        return Err(Error::EmptyMatrixSet);
    }
    check_config(cfg)?;
    let records = matrix_set
        .iter()
        .map(|(id, m)| bench_matrix(id, m, cfg))
        .collect::<Result<Vec<_>>>()?;
    Ok(Profile::from_records(
        cfg.machine_label.clone(),
        cfg.kernel,
        cfg.lanes,
        cfg.c,
        records,
    ))
}

fn check_config(cfg: &ProfileConfig) -> Result<()> {
    if !(cfg.c > 0.0 && cfg.c.is_finite()) {
        return Err(Error::BadThresholdConstant(cfg.c));
    }
    if cfg.lanes == 0 {
        return Err(Error::ZeroLanes);
    }
    if cfg.repeats == 0 {
        return Err(Error::ZeroRepeats);
    }
    if cfg.kernel == Kernel::Crs {
        return Err(Error::Profile(
            "the CRS baseline cannot be a profiled kernel variant".into(),
        ));
    }
    Ok(())
}

/// Largest `d_mat` such that every point with `d_mat` at or below it has
/// `r >= c`; 0 when the smallest `d_mat` already fails.
///
/// Points are scanned in ascending `d_mat`; tied points qualify together or
/// not at all, and the scan stops at the first failing group.
pub fn find_d_star(points: &[(f64, f64)], c: f64) -> f64 {
    let mut sorted: Vec<(f64, f64)> = points.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut d_star = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let d = sorted[i].0;
        let mut j = i;
        let mut group_ok = true;
        while j < sorted.len() && sorted[j].0 == d {
            group_ok &= sorted[j].1 >= c;
            j += 1;
        }
        if !group_ok {
            break;
        }
        d_star = d;
        i = j;
    }
    d_star
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Decision {
    UseEll,
    UseCrs,
}

impl fmt::Display for Decision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Decision::UseEll => "UseEll",
            Decision::UseCrs => "UseCrs",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Selection {
    pub decision: Decision,
    pub d_mat: f64,
    pub d_star: f64,
}

/// Strict comparison: `d_mat == d_star` stays on CRS.
pub fn decide(d_mat: f64, d_star: f64) -> Decision {
    if d_mat < d_star {
        Decision::UseEll
    } else {
        Decision::UseCrs
    }
}

pub fn online_select(m: &CrsMatrix, p: &Profile) -> Result<Selection> {
    let d_mat = row_stats(m)?.d_mat;
    Ok(Selection {
        decision: decide(d_mat, p.d_star),
        d_mat,
        d_star: p.d_star,
    })
}

/// Result of the off-line phase for one machine and kernel configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    pub machine_label: String,
    pub kernel_variant: Kernel,
    pub lanes: usize,
    pub c: f64,
    pub d_star: f64,
    pub records: Vec<BenchRecord>,
}

impl Profile {
    pub fn from_records(
        machine_label: String,
        kernel_variant: Kernel,
        lanes: usize,
        c: f64,
        records: Vec<BenchRecord>,
    ) -> Profile {
        let mut p = Profile {
            machine_label,
            kernel_variant,
            lanes,
            c,
            d_star: 0.0,
            records,
        };
        p.d_star = find_d_star(&p.threshold_points(), c);
        p
    }

    pub fn threshold_points(&self) -> Vec<(f64, f64)> {
        self.records
            .iter()
            .filter_map(BenchRecord::threshold_point)
            .collect()
    }

    /// `d_star` is what [`find_d_star`] gives for the records and `c`, and
    /// every included record's metrics follow from its timings.
    pub fn is_consistent(&self) -> bool {
        let d_ok = self.d_star.to_bits() == find_d_star(&self.threshold_points(), self.c).to_bits();
        let records_ok = self.records.iter().all(|r| match (r.timings(), r.metrics) {
            (Some(t), Some(m)) => compute_metrics(&t).is_ok_and(|want| want == m) && !r.excluded(),
            (_, None) => true,
            (None, Some(_)) => false,
        });
        d_ok && records_ok
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = ProfileDoc::from(self);
        let mut buf = Vec::new();
        let mut ser = serde_json::Serializer::with_formatter(&mut buf, SigDigitsFormatter::new());
        doc.serialize(&mut ser)?;
        buf.push(b'\n');
        Ok(String::from_utf8(buf).expect("serde_json emits UTF-8"))
    }

    pub fn from_json(s: &str) -> Result<Profile> {
        let doc: ProfileDoc = serde_json::from_str(s)?;
        doc.try_into()
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Profile> {
        Profile::from_json(&std::fs::read_to_string(path)?)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProfileDoc {
    version: u32,
    machine_label: String,
    kernel_variant: Kernel,
    lanes: usize,
    c: f64,
    d_star: f64,
    records: Vec<RecordDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RecordDoc {
    matrix_id: String,
    n: usize,
    nnz: usize,
    mu: Option<f64>,
    sigma: Option<f64>,
    d_mat: Option<f64>,
    t_crs: Option<f64>,
    t_ell: Option<f64>,
    t_trans: Option<f64>,
    sp: Option<f64>,
    tt: Option<f64>,
    r: Option<f64>,
    excluded: bool,
    exclusion_reason: Option<String>,
}

impl From<&Profile> for ProfileDoc {
    fn from(p: &Profile) -> Self {
        ProfileDoc {
            version: PROFILE_VERSION,
            machine_label: p.machine_label.clone(),
            kernel_variant: p.kernel_variant,
            lanes: p.lanes,
            c: p.c,
            d_star: p.d_star,
            records: p
                .records
                .iter()
                .map(|r| RecordDoc {
                    matrix_id: r.matrix_id.clone(),
                    n: r.n,
                    nnz: r.nnz,
                    mu: r.stats.map(|s| s.mu),
                    sigma: r.stats.map(|s| s.sigma),
                    d_mat: r.stats.map(|s| s.d_mat),
                    t_crs: r.t_crs,
                    t_ell: r.t_ell,
                    t_trans: r.t_trans,
                    sp: r.metrics.map(|m| m.sp),
                    tt: r.metrics.map(|m| m.tt),
                    r: r.metrics.map(|m| m.r),
                    excluded: r.excluded(),
                    exclusion_reason: r.exclusion_reason.clone(),
                })
                .collect(),
        }
    }
}

fn all_or_none<const N: usize>(
    what: &str,
    id: &str,
    v: [Option<f64>; N],
) -> Result<Option<[f64; N]>> {
    if v.iter().all(Option::is_some) {
        Ok(Some(v.map(|x| x.expect("checked"))))
    } else if v.iter().all(Option::is_none) {
        Ok(None)
    } else {
        Err(Error::Profile(format!(
            "record {id:?}: {what} must be all present or all null"
        )))
    }
}

impl TryFrom<ProfileDoc> for Profile {
    type Error = Error;

    fn try_from(doc: ProfileDoc) -> Result<Profile> {
        if doc.version != PROFILE_VERSION {
            return Err(Error::Profile(format!(
                "unsupported version {}, expected {PROFILE_VERSION}",
                doc.version
            )));
        }
        if doc.kernel_variant == Kernel::Crs {
            return Err(Error::Profile("kernel_variant cannot be \"crs\"".into()));
        }
        if doc.lanes == 0 {
            return Err(Error::Profile("lanes must be at least 1".into()));
        }
        if !(doc.c > 0.0 && doc.c.is_finite()) {
            return Err(Error::Profile(format!("c must be positive, got {}", doc.c)));
        }
        if !(doc.d_star >= 0.0 && doc.d_star.is_finite()) {
            return Err(Error::Profile(format!(
                "d_star must be a nonnegative number, got {}",
                doc.d_star
            )));
        }
        let mut records = Vec::with_capacity(doc.records.len());
        for r in doc.records {
            let id = r.matrix_id.as_str();
            let stats = all_or_none("mu, sigma, d_mat", id, [r.mu, r.sigma, r.d_mat])?
                .map(|[mu, sigma, d_mat]| RowStats { mu, sigma, d_mat });
            let metrics = all_or_none("sp, tt, r", id, [r.sp, r.tt, r.r])?
                .map(|[sp, tt, r]| CostMetrics { sp, tt, r });
            if r.excluded != r.exclusion_reason.is_some() {
                return Err(Error::Profile(format!(
                    "record {id:?}: excluded must be true exactly when exclusion_reason is set"
                )));
            }
            if r.excluded && metrics.is_some() {
                return Err(Error::Profile(format!(
                    "record {id:?}: excluded records carry no metrics"
                )));
            }
            records.push(BenchRecord {
                matrix_id: r.matrix_id,
                n: r.n,
                nnz: r.nnz,
                stats,
                t_crs: r.t_crs,
                t_ell: r.t_ell,
                t_trans: r.t_trans,
                metrics,
                exclusion_reason: r.exclusion_reason,
            });
        }
        Ok(Profile {
            machine_label: doc.machine_label,
            kernel_variant: doc.kernel_variant,
            lanes: doc.lanes,
            c: doc.c,
            d_star: doc.d_star,
            records,
        })
    }
}

/// Pretty JSON with every float written to 17 significant digits.
struct SigDigitsFormatter {
    inner: serde_json::ser::PrettyFormatter<'static>,
}

impl SigDigitsFormatter {
    fn new() -> Self {
        SigDigitsFormatter {
            inner: serde_json::ser::PrettyFormatter::with_indent(b"  "),
        }
    }
}

impl serde_json::ser::Formatter for SigDigitsFormatter {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{value:.16e}")
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_array(w)
    }

    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_array(w)
    }

    fn begin_array_value<W: ?Sized + io::Write>(
        &mut self,
        w: &mut W,
        first: bool,
    ) -> io::Result<()> {
        self.inner.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_array_value(w)
    }

    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_object(w)
    }

    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_object(w)
    }

    fn begin_object_key<W: ?Sized + io::Write>(
        &mut self,
        w: &mut W,
        first: bool,
    ) -> io::Result<()> {
        self.inner.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_object_value(w)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::gen_banded;

    fn t(c: f64, e: f64, tr: f64) -> Timings {
        Timings::new(c, e, tr).unwrap()
    }

    /// Linear scan for the smallest paying k.
    fn scan_k(t: &Timings) -> Option<u64> {
        (1..10_000_000u64).find(|&k| t.t_trans + k as f64 * t.t_ell <= k as f64 * t.t_crs)
    }

    #[test]
    fn worked_cost_examples() {
        let m = compute_metrics(&t(1.0, 0.1, 10.0)).unwrap();
        assert_eq!((m.sp, m.tt, m.r), (10.0, 10.0, 1.0));
        let m = compute_metrics(&t(1.0, 1.0, 1.0)).unwrap();
        assert_eq!((m.sp, m.tt, m.r), (1.0, 1.0, 1.0));
        let m = compute_metrics(&t(1.0, 0.001, 1000.0)).unwrap();
        assert_eq!((m.sp, m.tt, m.r), (1000.0, 1000.0, 1.0));
    }

    #[test]
    fn nonpositive_timings_are_refused() {
        let bad = Timings {
            t_crs: 1.0,
            t_ell: 0.0,
            t_trans: 1.0,
        };
        assert!(matches!(
            compute_metrics(&bad),
            Err(Error::NonPositiveTiming { name: "t_ell", .. })
        ));
        assert!(Timings::new(-1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn amortization_examples() {
        let a = t(1.0, 0.1, 10.0);
        assert_eq!(scan_k(&a), Some(12));
        assert_eq!(amortization_iterations(&a), Some(12));
        let b = t(1.0, 0.001, 1000.0);
        assert_eq!(scan_k(&b), Some(1002));
        assert_eq!(amortization_iterations(&b), Some(1002));
        assert_eq!(amortization_iterations(&t(1.0, 1.0, 0.5)), None);
        assert_eq!(amortization_iterations(&t(1.0, 2.0, 0.5)), None);
    }

    #[test]
    fn d_star_examples() {
        let pts = [(0.02, 5.0), (0.19, 2.0), (0.56, 1.2), (3.10, 0.4)];
        assert_eq!(find_d_star(&pts, 1.0), 0.56);
        let pts = [(0.1, 2.0), (0.2, 0.5), (0.3, 3.0)];
        assert_eq!(find_d_star(&pts, 1.0), 0.1);
        assert_eq!(find_d_star(&[], 1.0), 0.0);
        assert_eq!(find_d_star(&[(0.4, 0.9)], 1.0), 0.0);
        // a tie with one failing member blocks the tied value
        assert_eq!(find_d_star(&[(0.1, 2.0), (0.2, 2.0), (0.2, 0.5)], 1.0), 0.1);
    }

    #[test]
    fn d_star_on_all_passing_sweep() {
        // every matrix from 0.02 to 3.10 profitable
        let d = [
            0.19, 0.02, 5.72, 0.06, 0.25, 3.10, 0.56, 0.52, 0.53, 0.21, 1.19,
        ];
        let pts: Vec<_> = d
            .iter()
            .filter(|&&d| d != 5.72)
            .map(|&d| (d, 2.0))
            .collect();
        assert_eq!(find_d_star(&pts, 1.0), 3.10);
    }

    #[test]
    fn strict_online_boundary() {
        assert_eq!(decide(0.06, 0.1), Decision::UseEll);
        assert_eq!(decide(5.72, 3.10), Decision::UseCrs);
        assert_eq!(decide(0.3, 0.3), Decision::UseCrs);
    }

    #[test]
    fn profile_of_banded_set() {
        let set: Vec<(String, CrsMatrix)> = (0..3)
            .map(|k| {
                (
                    format!("band{k}"),
                    gen_banded(200 + 50 * k, k, false).unwrap(),
                )
            })
            .collect();
        let mut cfg = ProfileConfig::new(1);
        cfg.repeats = 3;
        let p = offline_profile(&set, &cfg).unwrap();
        assert_eq!(p.records.len(), 3);
        assert!(p.is_consistent());
        assert!(p
            .records
            .iter()
            .all(|r| r.metrics.is_some_and(|m| m.sp > 0.0 && m.tt > 0.0)));
        let back = Profile::from_json(&p.to_json().unwrap()).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn empty_set_and_bad_c_are_refused() {
        assert!(matches!(
            offline_profile(&[], &ProfileConfig::new(1)),
            Err(Error::EmptyMatrixSet)
        ));
        let set = vec![("id".to_string(), CrsMatrix::identity(4))];
        let mut cfg = ProfileConfig::new(1);
        cfg.c = 0.0;
        assert!(matches!(
            offline_profile(&set, &cfg),
            Err(Error::BadThresholdConstant(_))
        ));
    }

    #[test]
    fn empty_matrix_is_excluded() {
        let set = vec![("zero".to_string(), CrsMatrix::empty(4))];
        let p = offline_profile(&set, &ProfileConfig::new(1)).unwrap();
        assert!(p.records[0].excluded());
        assert_eq!(p.d_star, 0.0);
    }

    #[test]
    fn json_rejects_schema_violations() {
        let p = Profile::from_records("m".into(), Kernel::EllInner, 1, 1.0, Vec::new());
        let good = p.to_json().unwrap();
        assert!(good.contains("\"version\": 1"));
        assert!(good.contains("\"c\": 1.0000000000000000e0"));
        assert!(Profile::from_json(&good).is_ok());
        let unknown = good.replacen("{", "{\n  \"extra\": 3,", 1);
        assert!(Profile::from_json(&unknown).is_err());
        let wrong_version = good.replace("\"version\": 1", "\"version\": 2");
        assert!(Profile::from_json(&wrong_version).is_err());
        let no_version = good.replace("\"version\": 1,", "");
        assert!(Profile::from_json(&no_version).is_err());
        let crs = good.replace("\"ell-inner\"", "\"crs\"");
        assert!(Profile::from_json(&crs).is_err());
    }
}
