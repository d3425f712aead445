//! `spmv-at` command-line front end.
//!
//! Exit status: 0 success, 1 usage error, 2 data or validation error,
//! 3 failed `--check`.
//!
//! CSV schemas (header row first, comma separated, columns never reorder):
//!
//! - `info --csv`: `matrix_id,n,nnz,mu,sigma,d_mat,max_row_degree,ell_bytes`
//! - `bench`: `matrix_id,d_mat,t_crs,t_ell,t_trans,sp,tt,r,excluded,exclusion_reason`
//! - `profile` companion: `matrix_id,d_mat,r,excluded`
//!
//! Missing values are empty fields.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::autotune::{
    bench_matrix, default_kernel, offline_profile, online_select, BenchRecord, Profile,
    ProfileConfig, DEFAULT_C,
};
use crate::convert::{
    ccs_to_coo_col, crs_to_ccs, crs_to_coo_col, crs_to_coo_row, crs_to_ell, ell_to_crs,
    estimate_ell_bytes,
};
use crate::error::Error;
use crate::formats::{CooMatrix, CrsMatrix, INDEX_BYTES, VALUE_BYTES};
use crate::ingest::{
    gen_banded, gen_cv_target, gen_skewed, read_matrix_market, write_coo_market,
    write_matrix_market,
};
use crate::rng::SplitMix64;
use crate::spmv::{run_kernel, spmv_crs, Kernel, MatrixRef};
use crate::stats::row_stats;

/// 2 GiB.
pub const DEFAULT_MAX_BYTES: u64 = 2 * 1024 * 1024 * 1024;

/// Relative max-norm tolerance of `spmv --check`.
pub const CHECK_TOLERANCE: f64 = 1e-10;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_CHECK: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "spmv-at",
    version,
    about = "Sparse format transformation, SpMV kernels and D_mat threshold auto-tuning"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print n, nnz, row statistics, D_mat and the ELL footprint.
    Info {
        matrix: PathBuf,
        #[arg(long)]
        csv: bool,
    },
    /// Convert a Matrix Market file to another storage order.
    Convert {
        matrix: PathBuf,
        #[arg(long, value_enum)]
        to: Target,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_MAX_BYTES)]
        max_bytes: u64,
    },
    /// Run one SpMV.
    Spmv {
        matrix: PathBuf,
        #[arg(long, default_value = "crs", value_parser = parse_kernel)]
        kernel: Kernel,
        #[command(flatten)]
        lanes: LanesArg,
        /// `ones` or `seed:N` (uniform in [-1, 1)).
        #[arg(long, default_value = "ones", value_parser = parse_x)]
        x: XSpec,
        /// Compare against the CRS baseline.
        #[arg(long)]
        check: bool,
        /// Triplet order handed to the COO kernels (default: what the kernel expects).
        #[arg(long, value_enum)]
        coo_order: Option<CooOrder>,
        #[arg(long, default_value_t = DEFAULT_MAX_BYTES)]
        max_bytes: u64,
    },
    /// Measure t_crs, t_trans and t_ell for one matrix; one CSV row.
    Bench {
        matrix: PathBuf,
        #[arg(long, value_parser = parse_kernel)]
        kernel: Option<Kernel>,
        #[command(flatten)]
        lanes: LanesArg,
        #[arg(long, default_value_t = 7, value_parser = clap::value_parser!(u64).range(1..))]
        repeats: u64,
        #[arg(long, default_value_t = DEFAULT_MAX_BYTES)]
        max_bytes: u64,
    },
    /// Off-line phase: profile a matrix set and derive d_star.
    Profile {
        /// Directories (every *.mtx inside), .mtx files, or list files with one path per line.
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long, value_parser = parse_kernel)]
        kernel: Option<Kernel>,
        #[command(flatten)]
        lanes: LanesArg,
        #[arg(long, default_value_t = DEFAULT_C)]
        c: f64,
        #[arg(long, default_value_t = 7, value_parser = clap::value_parser!(u64).range(1..))]
        repeats: u64,
        #[arg(long, default_value_t = DEFAULT_MAX_BYTES)]
        max_bytes: u64,
        #[arg(long, default_value = "")]
        machine_label: String,
        #[arg(long)]
        out: PathBuf,
        /// Companion (matrix_id, d_mat, r) CSV; defaults to --out with a .csv extension.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// On-line phase: choose ELL or CRS for one matrix.
    Select {
        matrix: PathBuf,
        #[arg(long)]
        profile: PathBuf,
    },
    /// Write a synthetic matrix.
    Gen {
        #[command(subcommand)]
        kind: GenKind,
        #[arg(long, global = true, default_value_t = 0)]
        seed: u64,
        #[arg(long, global = true)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct LanesArg {
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    lanes: u64,
}

#[derive(Debug, Subcommand)]
enum GenKind {
    /// Band of half-width w around the diagonal.
    Banded {
        n: usize,
        half_width: usize,
        /// Wrap the band around the edges so every row has 2w+1 entries.
        #[arg(long)]
        wrap: bool,
    },
    /// A few heavy rows on a light baseline.
    Skewed {
        n: usize,
        base_deg: usize,
        heavy_rows: usize,
        heavy_deg: usize,
    },
    /// Two-level row lengths hitting a target D_mat.
    CvTarget {
        n: usize,
        mean_deg: usize,
        target_dmat: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Target {
    CooRow,
    CooCol,
    Ccs,
    Ell,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CooOrder {
    Row,
    Col,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum XSpec {
    Ones,
    Seed(u64),
}

fn parse_kernel(s: &str) -> Result<Kernel, String> {
    s.parse()
}

fn parse_x(s: &str) -> Result<XSpec, String> {
    if s == "ones" {
        return Ok(XSpec::Ones);
    }
    s.strip_prefix("seed:")
        .and_then(|n| n.parse().ok())
        .map(XSpec::Seed)
        .ok_or_else(|| format!("expected `ones` or `seed:N`, got {s:?}"))
}

impl XSpec {
    fn vector(self, n: usize) -> Vec<f64> {
        match self {
            XSpec::Ones => vec![1.0; n],
            XSpec::Seed(s) => SplitMix64::new(s).symmetric_vec(n),
        }
    }
}

/// Failure of one command, carrying its exit status.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError {
            code: EXIT_DATA,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Error::from(e).into()
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError {
            code: EXIT_DATA,
            message: e.to_string(),
        }
    }
}

type CliResult = Result<(), CliError>;

/// Parses `args` (program name first) and runs the command. Returns the exit
/// status.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(err, "{}", e.render());
                return EXIT_USAGE;
            }
            let _ = write!(out, "{}", e.render());
            return EXIT_OK;
        }
    };
    match execute(cli.command, out) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {}", e.message);
            e.code
        }
    }
}

fn execute(cmd: Command, out: &mut dyn Write) -> CliResult {
    match cmd {
        Command::Info { matrix, csv } => cmd_info(&matrix, csv, out),
        Command::Convert {
            matrix,
            to,
            out: path,
            max_bytes,
        } => cmd_convert(&matrix, to, &path, max_bytes, out),
        Command::Spmv {
            matrix,
            kernel,
            lanes,
            x,
            check,
            coo_order,
            max_bytes,
        } => cmd_spmv(
            &matrix,
            kernel,
            lanes.lanes as usize,
            x,
            check,
            coo_order,
            max_bytes,
            out,
        ),
        Command::Bench {
            matrix,
            kernel,
            lanes,
            repeats,
            max_bytes,
        } => {
            let cfg = profile_config(
                kernel,
                lanes.lanes,
                DEFAULT_C,
                repeats,
                max_bytes,
                String::new(),
            )?;
            cmd_bench(&matrix, &cfg, out)
        }
        Command::Profile {
            inputs,
            kernel,
            lanes,
            c,
            repeats,
            max_bytes,
            machine_label,
            out: path,
            csv,
        } => {
            let cfg = profile_config(kernel, lanes.lanes, c, repeats, max_bytes, machine_label)?;
            let csv = csv.unwrap_or_else(|| path.with_extension("csv"));
            cmd_profile(&inputs, &cfg, &path, &csv, out)
        }
        Command::Select { matrix, profile } => cmd_select(&matrix, &profile, out),
        Command::Gen {
            kind,
            seed,
            out: path,
        } => {
            let path = path.ok_or_else(|| CliError::usage("gen requires --out"))?;
            cmd_gen(kind, seed, &path, out)
        }
    }
}

fn profile_config(
    kernel: Option<Kernel>,
    lanes: u64,
    c: f64,
    repeats: u64,
    max_bytes: u64,
    machine_label: String,
) -> Result<ProfileConfig, CliError> {
    let lanes = lanes as usize;
    let kernel = kernel.unwrap_or_else(|| default_kernel(lanes));
    if kernel == Kernel::Crs {
        return Err(CliError::usage(
            "the crs baseline cannot be the profiled kernel",
        ));
    }
    if !(c > 0.0 && c.is_finite()) {
        return Err(CliError::usage(format!("--c must be positive, got {c}")));
    }
    Ok(ProfileConfig {
        machine_label,
        kernel,
        lanes,
        c,
        repeats: repeats as usize,
        max_bytes: Some(max_bytes),
        seed: 1,
    })
}

fn matrix_id(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn cmd_info(path: &Path, as_csv: bool, out: &mut dyn Write) -> CliResult {
    let m = read_matrix_market(path)?;
    let stats = row_stats(&m).ok();
    let id = matrix_id(path);
    let ell_bytes = estimate_ell_bytes(&m, VALUE_BYTES, INDEX_BYTES);
    let mu = m.nnz() as f64 / m.n().max(1) as f64;
    if as_csv {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "matrix_id",
            "n",
            "nnz",
            "mu",
            "sigma",
            "d_mat",
            "max_row_degree",
            "ell_bytes",
        ])?;
        w.write_record([
            id,
            m.n().to_string(),
            m.nnz().to_string(),
            mu.to_string(),
            opt(stats.map(|s| s.sigma)),
            opt(stats.map(|s| s.d_mat)),
            m.max_row_len().to_string(),
            ell_bytes.to_string(),
        ])?;
        w.flush()?;
    } else {
        writeln!(out, "matrix_id: {id}")?;
        writeln!(out, "n: {}", m.n())?;
        writeln!(out, "nnz: {}", m.nnz())?;
        writeln!(out, "mu: {mu}")?;
        match stats {
            Some(s) => {
                writeln!(out, "sigma: {}", s.sigma)?;
                writeln!(out, "d_mat: {}", s.d_mat)?;
            }
            None => {
                writeln!(out, "sigma: undefined (no stored entries)")?;
                writeln!(out, "d_mat: undefined (no stored entries)")?;
            }
        }
        writeln!(out, "max_row_degree: {}", m.max_row_len())?;
        writeln!(out, "ell_bytes: {ell_bytes}")?;
    }
    Ok(())
}

fn cmd_convert(
    path: &Path,
    to: Target,
    dest: &Path,
    max_bytes: u64,
    out: &mut dyn Write,
) -> CliResult {
    let m = read_matrix_market(path)?;
    match to {
        Target::CooRow => write_coo_market(&crs_to_coo_row(&m), dest)?,
        Target::CooCol => write_coo_market(&crs_to_coo_col(&m), dest)?,
        Target::Ccs => write_coo_market(&ccs_to_coo_col(&crs_to_ccs(&m)), dest)?,
        Target::Ell => {
            let start = Instant::now();
            let ell = crs_to_ell(&m, Some(max_bytes))?;
            let secs = start.elapsed().as_secs_f64();
            write_matrix_market(&ell_to_crs(&ell), dest)?;
            let line = format!(
                "n={} nz={} stored_nnz={} padding={} bytes={} t_trans={secs}",
                ell.n(),
                ell.nz(),
                ell.stored_nnz(),
                ell.padding_count(),
                ell.footprint_bytes()
            );
            let mut sidecar = dest.as_os_str().to_owned();
            sidecar.push(".stats");
            std::fs::write(PathBuf::from(sidecar), format!("{line}\n"))?;
            writeln!(out, "{line}")?;
        }
    }
    writeln!(out, "wrote {}", dest.display())?;
    Ok(())
}

/// Max-norm error of `y` relative to `reference`.
pub fn max_relative_error(y: &[f64], reference: &[f64]) -> f64 {
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

#[allow(clippy::too_many_arguments)]
fn cmd_spmv(
    path: &Path,
    kernel: Kernel,
    lanes: usize,
    xspec: XSpec,
    check: bool,
    coo_order: Option<CooOrder>,
    max_bytes: u64,
    out: &mut dyn Write,
) -> CliResult {
    let m = read_matrix_market(path)?;
    let x = xspec.vector(m.n());
    let coo = |default: CooOrder| -> CooMatrix {
        match coo_order.unwrap_or(default) {
            CooOrder::Row => crs_to_coo_row(&m),
            CooOrder::Col => crs_to_coo_col(&m),
        }
    };
    let converted_coo;
    let converted_ell;
    let input = match kernel {
        Kernel::Crs => MatrixRef::Crs(&m),
        Kernel::CooRow => {
            converted_coo = coo(CooOrder::Row);
            MatrixRef::Coo(&converted_coo)
        }
        Kernel::CooCol => {
            converted_coo = coo(CooOrder::Col);
            MatrixRef::Coo(&converted_coo)
        }
        Kernel::EllInner | Kernel::EllOuter => {
            converted_ell = crs_to_ell(&m, Some(max_bytes))?;
            MatrixRef::Ell(&converted_ell)
        }
    };
    let start = Instant::now();
    let y = run_kernel(kernel, input, &x, lanes)?;
    let secs = start.elapsed().as_secs_f64();
    writeln!(out, "kernel: {kernel}")?;
    writeln!(out, "lanes: {lanes}")?;
    writeln!(out, "n: {}", m.n())?;
    writeln!(out, "nnz: {}", m.nnz())?;
    writeln!(out, "wall_time_s: {secs}")?;
    let shown: Vec<String> = y.iter().take(10).map(|v| v.to_string()).collect();
    writeln!(
        out,
        "y[1..{}]: {}{}",
        shown.len(),
        shown.join(" "),
        if y.len() > shown.len() { " ..." } else { "" }
    )?;
    if check {
        let reference = spmv_crs(&m, &x)?;
        let e = max_relative_error(&y, &reference);
        let pass = e <= CHECK_TOLERANCE;
        writeln!(
            out,
            "check: max_rel_err={e} tolerance={CHECK_TOLERANCE} {}",
            if pass { "PASS" } else { "FAIL" }
        )?;
        if !pass {
            return Err(CliError {
                code: EXIT_CHECK,
                message: format!("check failed: max relative error {e} exceeds {CHECK_TOLERANCE}"),
            });
        }
    }
    Ok(())
}

const BENCH_HEADER: [&str; 10] = [
    "matrix_id",
    "d_mat",
    "t_crs",
    "t_ell",
    "t_trans",
    "sp",
    "tt",
    "r",
    "excluded",
    "exclusion_reason",
];

fn bench_row(r: &BenchRecord) -> [String; 10] {
    [
        r.matrix_id.clone(),
        opt(r.stats.map(|s| s.d_mat)),
        opt(r.t_crs),
        opt(r.t_ell),
        opt(r.t_trans),
        opt(r.metrics.map(|m| m.sp)),
        opt(r.metrics.map(|m| m.tt)),
        opt(r.metrics.map(|m| m.r)),
        r.excluded().to_string(),
        r.exclusion_reason.clone().unwrap_or_default(),
    ]
}

fn cmd_bench(path: &Path, cfg: &ProfileConfig, out: &mut dyn Write) -> CliResult {
    let m = read_matrix_market(path)?;
    let rec = bench_matrix(&matrix_id(path), &m, cfg)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(BENCH_HEADER)?;
    w.write_record(bench_row(&rec))?;
    w.flush()?;
    Ok(())
}

/// Expands directories and list files into a sorted-per-source path list.
fn collect_inputs(inputs: &[PathBuf]) -> Result<Vec<PathBuf>, CliError> {
    let mut paths = Vec::new();
    for input in inputs {
        if input.is_dir() {
            let mut found: Vec<PathBuf> = std::fs::read_dir(input)?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|e| e == "mtx"))
                .collect();
            found.sort();
            paths.extend(found);
        } else if input.extension().is_some_and(|e| e == "mtx") {
            paths.push(input.clone());
        } else {
            let text = std::fs::read_to_string(input)?;
            let base = input.parent().unwrap_or(Path::new("."));
            for line in text
                .lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#'))
            {
                paths.push(base.join(line));
            }
        }
    }
    Ok(paths)
}

fn cmd_profile(
    inputs: &[PathBuf],
    cfg: &ProfileConfig,
    dest: &Path,
    csv_path: &Path,
    out: &mut dyn Write,
) -> CliResult {
    let paths = collect_inputs(inputs)?;
    let set = paths
        .iter()
        .map(|p| Ok((matrix_id(p), read_matrix_market(p)?)))
        .collect::<Result<Vec<(String, CrsMatrix)>, Error>>()?;
    let profile = offline_profile(&set, cfg)?;
    profile.write(dest)?;

    let mut w = csv::Writer::from_path(csv_path)?;
    w.write_record(["matrix_id", "d_mat", "r", "excluded"])?;
    for r in &profile.records {
        w.write_record([
            r.matrix_id.clone(),
            opt(r.stats.map(|s| s.d_mat)),
            opt(r.metrics.map(|m| m.r)),
            r.excluded().to_string(),
        ])?;
    }
    w.flush()?;

    for r in &profile.records {
        match (&r.exclusion_reason, r.stats, r.metrics) {
            (Some(reason), _, _) => writeln!(out, "{}: excluded ({reason})", r.matrix_id)?,
            (None, Some(s), Some(m)) => writeln!(
                out,
                "{}: d_mat={} sp={} tt={} r={}",
                r.matrix_id, s.d_mat, m.sp, m.tt, m.r
            )?,
            _ => writeln!(out, "{}: incomplete", r.matrix_id)?,
        }
    }
    writeln!(
        out,
        "kernel: {} lanes: {} c: {}",
        profile.kernel_variant, profile.lanes, profile.c
    )?;
    writeln!(out, "d_star={}", profile.d_star)?;
    writeln!(out, "wrote {} and {}", dest.display(), csv_path.display())?;
    Ok(())
}

fn cmd_select(path: &Path, profile: &Path, out: &mut dyn Write) -> CliResult {
    let p = Profile::read(profile)?;
    let m = read_matrix_market(path)?;
    let s = online_select(&m, &p)?;
    writeln!(out, "{} d_mat={} d_star={}", s.decision, s.d_mat, s.d_star)?;
    Ok(())
}

fn cmd_gen(kind: GenKind, seed: u64, path: &Path, out: &mut dyn Write) -> CliResult {
    let m = match kind {
        GenKind::Banded {
            n,
            half_width,
            wrap,
        } => gen_banded(n, half_width, wrap)?,
        GenKind::Skewed {
            n,
            base_deg,
            heavy_rows,
            heavy_deg,
        } => gen_skewed(n, base_deg, heavy_rows, heavy_deg, seed)?,
        GenKind::CvTarget {
            n,
            mean_deg,
            target_dmat,
        } => gen_cv_target(n, mean_deg, target_dmat, seed)?,
    };
    write_matrix_market(&m, path)?;
    writeln!(
        out,
        "wrote {} (n={} nnz={})",
        path.display(),
        m.n(),
        m.nnz()
    )?;
    match row_stats(&m) {
        Ok(s) => writeln!(out, "mu={} sigma={} d_mat={}", s.mu, s.sigma, s.d_mat)?,
        Err(_) => writeln!(out, "mu=0 sigma=undefined d_mat=undefined")?,
    }
    Ok(())
}
