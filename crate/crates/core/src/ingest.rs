//! Matrix Market I/O and deterministic synthetic generators.
//!
//! Only the `coordinate real` kinds are read, `general` or `symmetric`
//! (symmetric files are expanded to both triangles). Written files are
//! always `coordinate real general` with 17 significant digits per value.
//!
//! The generators draw from [`SplitMix64`] in a fixed order, so a
//! `(parameters, seed)` pair always yields the same matrix.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::formats::{CooMatrix, CrsMatrix, Idx};
use crate::rng::SplitMix64;

pub const MM_HEADER_GENERAL: &str = "%%MatrixMarket matrix coordinate real general";
pub const MM_HEADER_SYMMETRIC: &str = "%%MatrixMarket matrix coordinate real symmetric";

pub fn read_matrix_market(path: &Path) -> Result<CrsMatrix> {
    let file = File::open(path)?;
    parse_matrix_market(BufReader::new(file), path)
}

/// Parses from any reader; `path` only labels error messages.
pub fn parse_matrix_market<R: BufRead>(reader: R, path: &Path) -> Result<CrsMatrix> {
    let err = |line: usize, msg: String| Error::Parse {
        path: PathBuf::from(path),
        line,
        msg,
    };
    let mut lines = reader.lines().enumerate().map(|(k, l)| (k + 1, l));

    let (_, header) = lines.next().ok_or_else(|| err(1, "empty file".into()))?;
    let header = header?;
    let symmetric = parse_header(&header).map_err(|m| err(1, m))?;

    let mut size: Option<(usize, usize)> = None;
    let mut rows: Vec<Idx> = Vec::new();
    let mut cols: Vec<Idx> = Vec::new();
    let mut vals: Vec<f64> = Vec::new();
    let mut seen: HashSet<(Idx, Idx)> = HashSet::new();
    let mut entries_read = 0usize;
    let mut declared = 0usize;
    let mut last_line = 1;

    for (no, line) in lines {
        let line = line?;
        last_line = no;
        let t = line.trim();
        if t.is_empty() || t.starts_with('%') {
            continue;
        }
        let fields: Vec<&str> = t.split_whitespace().collect();
        match size {
            None => {
                if fields.len() != 3 {
                    return Err(err(
                        no,
                        format!("size line needs 3 fields, found {}", fields.len()),
                    ));
                }
                let parse = |s: &str| {
                    s.parse::<usize>()
                        .map_err(|_| err(no, format!("bad size field {s:?}")))
                };
                let (m, n, nnz) = (parse(fields[0])?, parse(fields[1])?, parse(fields[2])?);
                if m != n {
                    return Err(err(no, format!("non-square matrix: {m} x {n}")));
                }
                if n > Idx::MAX as usize {
                    return Err(err(no, format!("dimension {n} exceeds the index type")));
                }
                size = Some((n, nnz));
                declared = nnz;
                let cap = if symmetric { 2 * nnz } else { nnz };
                rows.reserve(cap);
                cols.reserve(cap);
                vals.reserve(cap);
            }
            Some((n, _)) => {
                if fields.len() != 3 {
                    return Err(err(
                        no,
                        format!("entry needs 3 fields, found {}", fields.len()),
                    ));
                }
                if entries_read == declared {
                    return Err(err(
                        no,
                        format!("more entries than the declared {declared}"),
                    ));
                }
                let index = |s: &str| -> Result<Idx> {
                    let k: usize = s.parse().map_err(|_| err(no, format!("bad index {s:?}")))?;
                    if k == 0 || k > n {
                        return Err(err(no, format!("index {k} out of range [1, {n}]")));
                    }
                    Ok((k - 1) as Idx)
                };
                let i = index(fields[0])?;
                let j = index(fields[1])?;
                let v: f64 = fields[2]
                    .parse()
                    .map_err(|_| err(no, format!("bad value {:?}", fields[2])))?;
                if symmetric && j > i {
                    return Err(err(
                        no,
                        format!(
                            "symmetric file has an upper-triangle entry ({}, {})",
                            i + 1,
                            j + 1
                        ),
                    ));
                }
                let mut push = |i: Idx, j: Idx| -> Result<()> {
                    if !seen.insert((i, j)) {
                        return Err(err(no, format!("duplicate entry ({}, {})", i + 1, j + 1)));
                    }
                    rows.push(i);
                    cols.push(j);
                    vals.push(v);
                    Ok(())
                };
                push(i, j)?;
                if symmetric && i != j {
                    push(j, i)?;
                }
                entries_read += 1;
            }
        }
    }
    let (n, _) = size.ok_or_else(|| err(last_line, "missing size line".into()))?;
    if entries_read != declared {
        return Err(err(
            last_line,
            format!("declared {declared} entries, found {entries_read}"),
        ));
    }
    Ok(group_by_row(n, &rows, &cols, &vals))
}

fn parse_header(line: &str) -> std::result::Result<bool, String> {
    let tokens: Vec<String> = line
        .split_whitespace()
        .map(str::to_ascii_lowercase)
        .collect();
    if tokens.first().map(String::as_str) != Some("%%matrixmarket") {
        return Err("first line must start with %%MatrixMarket".into());
    }
    if tokens.len() != 5 {
        return Err(format!("header needs 5 tokens, found {}", tokens.len()));
    }
    if tokens[1] != "matrix" {
        return Err(format!("unsupported object {:?}", tokens[1]));
    }
    if tokens[2] != "coordinate" {
        return Err(format!(
            "unsupported format {:?}: only coordinate is read",
            tokens[2]
        ));
    }
    if tokens[3] != "real" {
        return Err(format!(
            "unsupported field {:?}: only real is read",
            tokens[3]
        ));
    }
    match tokens[4].as_str() {
        "general" => Ok(false),
        "symmetric" => Ok(true),
        s => Err(format!("unsupported symmetry {s:?}")),
    }
}

/// Stable counting sort by row: rows in order, file order within a row.
fn group_by_row(n: usize, rows: &[Idx], cols: &[Idx], vals: &[f64]) -> CrsMatrix {
    let mut row_ptr = vec![0usize; n + 1];
    for &i in rows {
        row_ptr[i as usize + 1] += 1;
    }
    for i in 0..n {
        row_ptr[i + 1] += row_ptr[i];
    }
    let mut next = row_ptr[..n].to_vec();
    let mut col_idx = vec![0 as Idx; rows.len()];
    let mut values = vec![0.0; rows.len()];
    for ((&i, &j), &v) in rows.iter().zip(cols).zip(vals) {
        let k = next[i as usize];
        next[i as usize] += 1;
        col_idx[k] = j;
        values[k] = v;
    }
    CrsMatrix::from_parts_unchecked(n, row_ptr, col_idx, values)
}

/// Canonical row-major order, 17 significant digits.
pub fn write_matrix_market(m: &CrsMatrix, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_matrix_market_to(m, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn write_matrix_market_to<W: Write>(m: &CrsMatrix, w: &mut W) -> Result<()> {
    let c = m.canonicalize();
    write_entries(w, c.n(), c.nnz(), c.triplets())
}

/// Writes the triplets in the COO's own order.
pub fn write_coo_market(m: &CooMatrix, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_entries(&mut w, m.n(), m.nnz(), m.triplets())?;
    w.flush()?;
    Ok(())
}

fn write_entries<W, I>(w: &mut W, n: usize, nnz: usize, entries: I) -> Result<()>
where
    W: Write,
    I: Iterator<Item = (usize, usize, f64)>,
{
    writeln!(w, "{MM_HEADER_GENERAL}")?;
    writeln!(w, "{n} {n} {nnz}")?;
    for (i, j, v) in entries {
        writeln!(w, "{} {} {v:.16e}", i + 1, j + 1)?;
    }
    Ok(())
}

/// Entry at `(i, j)` iff `|i - j| <= half_width`, value `1 / (1 + |i - j|)`.
///
/// With `wrap`, the band wraps around the matrix edges so every row has
/// exactly `2 * half_width + 1` entries (requires `2 * half_width + 1 <= n`).
pub fn gen_banded(n: usize, half_width: usize, wrap: bool) -> Result<CrsMatrix> {
    if n == 0 || half_width >= n {
        return Err(Error::Generator(format!(
            "banded needs 0 <= half_width < n, got n = {n}, half_width = {half_width}"
        )));
    }
    if wrap && 2 * half_width + 1 > n {
        return Err(Error::Generator(format!(
            "wrapped band of half-width {half_width} does not fit n = {n}"
        )));
    }
    check_dim(n)?;
    let mut row_ptr = Vec::with_capacity(n + 1);
    let mut col_idx = Vec::new();
    let mut values = Vec::new();
    row_ptr.push(0);
    for i in 0..n {
        if wrap {
            let mut row: Vec<(usize, f64)> = (0..=2 * half_width)
                .map(|k| {
                    let d = k as isize - half_width as isize;
                    let j = (i as isize + d).rem_euclid(n as isize) as usize;
                    (j, 1.0 / (1.0 + d.unsigned_abs() as f64))
                })
                .collect();
            row.sort_by_key(|&(j, _)| j);
            for (j, v) in row {
                col_idx.push(j as Idx);
                values.push(v);
            }
        } else {
            let lo = i.saturating_sub(half_width);
            let hi = (i + half_width).min(n - 1);
            for j in lo..=hi {
                col_idx.push(j as Idx);
                values.push(1.0 / (1.0 + i.abs_diff(j) as f64));
            }
        }
        row_ptr.push(col_idx.len());
    }
    Ok(CrsMatrix::from_parts_unchecked(n, row_ptr, col_idx, values))
}

fn check_dim(n: usize) -> Result<()> {
    if n > Idx::MAX as usize {
        return Err(Error::Generator(format!("n = {n} exceeds the index type")));
    }
    Ok(())
}

/// Builds a matrix from per-row degrees: each row draws `degree` distinct
/// columns (ascending) then one `[-1, 1)` value per entry.
fn random_rows(n: usize, degrees: &[usize], rng: &mut SplitMix64) -> CrsMatrix {
    let nnz: usize = degrees.iter().sum();
    let mut row_ptr = Vec::with_capacity(n + 1);
    let mut col_idx = Vec::with_capacity(nnz);
    let mut values = Vec::with_capacity(nnz);
    row_ptr.push(0);
    for &d in degrees {
        col_idx.extend(rng.distinct_sorted(n, d).into_iter().map(|j| j as Idx));
        values.extend((0..d).map(|_| rng.symmetric()));
        row_ptr.push(col_idx.len());
    }
    CrsMatrix::from_parts_unchecked(n, row_ptr, col_idx, values)
}

/// `heavy_rows` rows (chosen at random) get `heavy_deg` entries, the rest
/// `base_deg`.
pub fn gen_skewed(
    n: usize,
    base_deg: usize,
    heavy_rows: usize,
    heavy_deg: usize,
    seed: u64,
) -> Result<CrsMatrix> {
    if n == 0 {
        return Err(Error::Generator("n must be positive".into()));
    }
    check_dim(n)?;
    if heavy_rows > n {
        return Err(Error::Generator(format!(
            "heavy_rows = {heavy_rows} exceeds n = {n}"
        )));
    }
    if base_deg >= n || heavy_deg >= n {
        return Err(Error::Generator(format!(
            "degrees must be below n = {n}, got base {base_deg}, heavy {heavy_deg}"
        )));
    }
    let mut rng = SplitMix64::new(seed);
    let mut degrees = vec![base_deg; n];
    for i in rng.distinct_sorted(n, heavy_rows) {
        degrees[i] = heavy_deg;
    }
    Ok(random_rows(n, &degrees, &mut rng))
}

/// Two-level degree plan: `heavy` rows of degree `high`, the rest `low`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DegreePlan {
    pub low: usize,
    pub high: usize,
    pub heavy: usize,
}

impl DegreePlan {
    /// `(mean, cv)` of the plan's row histogram over `n` rows, population
    /// convention.
    pub fn moments(&self, n: usize) -> (f64, f64) {
        let nf = n as f64;
        let h = self.heavy as f64;
        let delta = (self.high - self.low) as f64;
        let mean = (self.low as f64 * (nf - h) + self.high as f64 * h) / nf;
        let sd = (h * (nf - h)).sqrt() * delta / nf;
        (mean, sd / mean)
    }
}

/// Relative tolerance on the achieved coefficient of variation.
pub const CV_TOLERANCE: f64 = 0.05;

/// Picks a two-level plan whose row-length CV is within [`CV_TOLERANCE`] of
/// `target`.
///
/// For levels `low < high = low + delta` with a fraction `p` of rows at
/// `high`, the CV is `sqrt(p (1 - p)) * delta / (low + p * delta)`. Setting it
/// to `t` gives the quadratic
///
/// ```text
/// (1 + t^2) delta^2 p^2 + (2 t^2 low delta - delta^2) p + t^2 low^2 = 0
/// ```
///
/// Every integer pair with `1 <= low <= mean_deg` and
/// `delta <= 2 (1 + t^2) (mean_deg + 1)` is tried with both roots; the heavy
/// row count is `round(p n)`. Among plans whose exact CV is in tolerance and
/// whose mean is within 5% of `mean_deg`, the one with the smallest `high`
/// wins (least ELL padding); failing that, the one with the closest mean.
pub fn plan_cv_target(n: usize, mean_deg: usize, target: f64) -> Result<DegreePlan> {
    if n == 0 || mean_deg == 0 || mean_deg > n {
        return Err(Error::Generator(format!(
            "cv-target needs 1 <= mean_deg <= n, got n = {n}, mean_deg = {mean_deg}"
        )));
    }
    if !(target >= 0.0 && target.is_finite()) {
        return Err(Error::Generator(format!(
            "target must be a nonnegative number, got {target}"
        )));
    }
    if target == 0.0 {
        return Ok(DegreePlan {
            low: mean_deg,
            high: mean_deg,
            heavy: 0,
        });
    }
    let m = mean_deg as f64;
    let t2 = target * target;
    let delta_max = (2.0 * (1.0 + t2) * (m + 1.0)).ceil() as usize;

    let mut best_in_mean: Option<(DegreePlan, f64)> = None;
    let mut best_any: Option<(DegreePlan, f64)> = None;
    for low in 1..=mean_deg {
        for delta in 1..=delta_max {
            let high = low + delta;
            if high > n {
                break;
            }
            let (lf, df) = (low as f64, delta as f64);
            let a = (1.0 + t2) * df * df;
            let b = 2.0 * t2 * lf * df - df * df;
            let c = t2 * lf * lf;
            let disc = b * b - 4.0 * a * c;
            if disc < 0.0 {
                continue;
            }
            let sq = disc.sqrt();
            for p in [(-b - sq) / (2.0 * a), (-b + sq) / (2.0 * a)] {
                if !(p > 0.0 && p < 1.0) {
                    continue;
                }
                let heavy = (p * n as f64).round() as usize;
                if heavy == 0 || heavy >= n {
                    continue;
                }
                let plan = DegreePlan { low, high, heavy };
                let (mean, cv) = plan.moments(n);
                if (cv - target).abs() > CV_TOLERANCE * target {
                    continue;
                }
                let mean_err = (mean - m).abs();
                if mean_err <= 0.05 * m {
                    let better = match best_in_mean {
                        None => true,
                        Some((bp, be)) => high < bp.high || (high == bp.high && mean_err < be),
                    };
                    if better {
                        best_in_mean = Some((plan, mean_err));
                    }
                }
                if best_any.is_none_or(|(_, be)| mean_err < be) {
                    best_any = Some((plan, mean_err));
                }
            }
        }
    }
    best_in_mean
        .or(best_any)
        .map(|(p, _)| p)
        .ok_or_else(|| Error::InfeasibleTarget {
            target,
            n,
            mean_deg,
            max: cv_upper_bound(n, mean_deg),
        })
}

/// CV of the two-level plan with exact mean `m`, low level 1 and high level
/// `n`: the widest spread with nonempty rows.
fn cv_upper_bound(n: usize, m: usize) -> f64 {
    if m <= 1 || n <= m {
        return 0.0;
    }
    let mf = m as f64;
    ((mf - 1.0) * (n as f64 - mf)).sqrt() / mf
}

/// Random matrix whose row-length CV (`D_mat`) is within 5% of `target_dmat`
/// (exactly 0 for a zero target). Heavy rows are drawn first, then each
/// row's columns and values, all from one generator seeded with `seed`.
pub fn gen_cv_target(n: usize, mean_deg: usize, target_dmat: f64, seed: u64) -> Result<CrsMatrix> {
    check_dim(n)?;
    let plan = plan_cv_target(n, mean_deg, target_dmat)?;
    let mut rng = SplitMix64::new(seed);
    let mut degrees = vec![plan.low; n];
    for i in rng.distinct_sorted(n, plan.heavy) {
        degrees[i] = plan.high;
    }
    Ok(random_rows(n, &degrees, &mut rng))
}
