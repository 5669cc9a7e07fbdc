//! Config-driven command-line front end: `simulate`, `cov`, `verify`,
//! `expand`, `extract`.
//!
//! Configs are strict JSON (unknown keys rejected); tables are emitted as
//! CSV with a fixed column order and 17-significant-digit rendering, or as
//! JSON. Every emitted file names its schema version. Exit codes: 0 success
//! (all checks pass), 1 verification failure, 2 config error, 3 invalid
//! model.

use crate::covariance::{
    example1_series, example2_series, example3_series, example4_series, example5_series,
    lift_s_infinity_to_sd, SpaceTimeCovariance,
};
use crate::error::{Error, Result};
use crate::gegenbauer::monomial_expansion_coeffs;
use crate::report::VerificationReport;
use crate::simulate::{
    replicate_rng, run_replicates_circle, run_replicates_sphere, simulate_sphere_series,
    extract_level_coefficients, FieldRealization,
};
use crate::sphere::{product_quadrature_s2, sample_uniform, SpherePoint, SphereQuadrature};
use crate::temporal::{
    constant_model, linear_combination, ma1_model, separable_model, CoefficientSequence,
    CorrelationFamily, Dimension, TemporalCovariance, TimeDomain,
};
use crate::verify::{
    extraction_roundtrip_check, funk_hecke_check, gram_psd_check, level_orthogonality_check,
    mc_covariance_check, pairwise_angles, pairwise_circle_angles, series_vs_closed_form,
    McDesignPoint,
};
use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::{Path, PathBuf};

pub const CONFIG_SCHEMA_VERSION: u32 = 1;
const MANIFEST_SCHEMA: &str = "stfields.manifest.v1";
const REALIZATIONS_SCHEMA: &str = "stfields.realizations.v1";
const COVARIANCE_SCHEMA: &str = "stfields.covariance.v1";
const REPORT_SCHEMA: &str = "stfields.report.v1";
const EXPANSION_SCHEMA: &str = "stfields.expansion.v1";
const COEFFICIENTS_SCHEMA: &str = "stfields.coefficients.v1";

// ---------------------------------------------------------------------------
// Config schema
// ---------------------------------------------------------------------------

fn default_schema_version() -> u32 {
    CONFIG_SCHEMA_VERSION
}

fn default_n_max() -> usize {
    64
}

fn default_tail_tol() -> f64 {
    1e-3
}

fn default_domain() -> TimeDomain {
    TimeDomain::Continuous
}

fn matrix_from_rows(rows: &[Vec<f64>], what: &str) -> Result<DMatrix<f64>> {
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(Error::Config(format!("{what} must be a nonempty square matrix")));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

/// Temporal covariance descriptor.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TemporalSpec {
    /// ρ(t/τ) · coupling with a named scalar correlation family.
    Separable {
        family: CorrelationFamily,
        tau: f64,
        coupling: Vec<Vec<f64>>,
    },
    /// First-order moving average on T = Z.
    Ma1 {
        sigma: Vec<Vec<f64>>,
        phi: Vec<Vec<f64>>,
    },
    /// B(t) ≡ matrix (symmetric PSD).
    Constant {
        matrix: Vec<Vec<f64>>,
        #[serde(default = "default_domain")]
        domain: TimeDomain,
    },
    /// Σ coeff_k · model_k; coefficients may be negative.
    LinearCombination { terms: Vec<TermSpec> },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermSpec {
    pub coeff: f64,
    pub model: TemporalSpec,
}

impl TemporalSpec {
    pub fn build(&self) -> Result<TemporalCovariance> {
        match self {
            TemporalSpec::Separable { family, tau, coupling } => {
                separable_model(*family, *tau, matrix_from_rows(coupling, "coupling")?)
            }
            TemporalSpec::Ma1 { sigma, phi } => ma1_model(
                matrix_from_rows(sigma, "sigma")?,
                matrix_from_rows(phi, "phi")?,
            ),
            TemporalSpec::Constant { matrix, domain } => {
                constant_model(matrix_from_rows(matrix, "constant matrix")?, *domain)
            }
            TemporalSpec::LinearCombination { terms } => linear_combination(
                terms
                    .iter()
                    .map(|t| Ok((t.coeff, t.model.build()?)))
                    .collect::<Result<Vec<_>>>()?,
            ),
        }
    }
}

/// Sphere dimension: a positive integer or "inf".
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DimSpec {
    Finite(usize),
    Named(String),
}

impl DimSpec {
    pub fn to_dimension(&self) -> Result<Dimension> {
        match self {
            DimSpec::Finite(d) => Dimension::sphere(*d),
            DimSpec::Named(s) if s == "inf" => Ok(Dimension::Infinite),
            DimSpec::Named(s) => Err(Error::Config(format!(
                "unknown dimension {s:?} (expected a positive integer or \"inf\")"
            ))),
        }
    }
}

/// Space-time covariance model descriptor: one of the shipped closed-form
/// families or a custom coefficient list.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    /// Logarithmic family on S^2.
    Example1 {
        base: TemporalSpec,
        #[serde(default = "default_n_max")]
        n_max: usize,
        #[serde(default = "default_tail_tol")]
        tail_tol: f64,
    },
    /// Quadratic-in-angle family on S^∞.
    Example2 {
        b0: TemporalSpec,
        b1: TemporalSpec,
        b2: TemporalSpec,
        #[serde(default = "default_n_max")]
        n_max: usize,
        #[serde(default = "default_tail_tol")]
        tail_tol: f64,
    },
    /// Exponential-in-geodesic family on S^∞.
    Example3 {
        base: TemporalSpec,
        #[serde(default = "default_n_max")]
        n_max: usize,
        #[serde(default = "default_tail_tol")]
        tail_tol: f64,
    },
    /// Generating-function family on S^d, d >= 2.
    Example4 {
        base: TemporalSpec,
        d: usize,
        #[serde(default = "default_n_max")]
        n_max: usize,
        #[serde(default = "default_tail_tol")]
        tail_tol: f64,
    },
    /// Exponential-cosine family on the circle.
    Example5 {
        base: TemporalSpec,
        #[serde(default = "default_n_max")]
        n_max: usize,
        #[serde(default = "default_tail_tol")]
        tail_tol: f64,
    },
    /// Explicit coefficient levels B_0..B_N.
    Custom {
        dim: DimSpec,
        levels: Vec<TemporalSpec>,
        #[serde(default = "default_tail_tol")]
        tail_tol: f64,
    },
}

impl ModelSpec {
    pub fn build(&self) -> Result<SpaceTimeCovariance> {
        match self {
            ModelSpec::Example1 { base, n_max, tail_tol } => {
                example1_series(base.build()?, *n_max, *tail_tol)
            }
            ModelSpec::Example2 { b0, b1, b2, n_max, tail_tol } => {
                example2_series(b0.build()?, b1.build()?, b2.build()?, *n_max, *tail_tol)
            }
            ModelSpec::Example3 { base, n_max, tail_tol } => {
                example3_series(base.build()?, *n_max, *tail_tol)
            }
            ModelSpec::Example4 { base, d, n_max, tail_tol } => {
                example4_series(base.build()?, *d, *n_max, *tail_tol)
            }
            ModelSpec::Example5 { base, n_max, tail_tol } => {
                example5_series(base.build()?, *n_max, *tail_tol)
            }
            ModelSpec::Custom { dim, levels, tail_tol } => {
                let models = levels
                    .iter()
                    .map(|l| l.build())
                    .collect::<Result<Vec<_>>>()?;
                let seq = CoefficientSequence::new(dim.to_dimension()?, models, *tail_tol)?;
                Ok(SpaceTimeCovariance::from_coefficients(seq))
            }
        }
    }
}

/// Site layout for simulation.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SitesSpec {
    /// Explicit points (each a (d+1)-vector, normalized on load).
    Points { points: Vec<Vec<f64>> },
    /// Circle angles in radians.
    Angles { angles: Vec<f64> },
    /// The S^2 product quadrature nodes (enables coefficient extraction).
    QuadratureS2 { polar: usize, azimuth: usize },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    #[serde(default = "default_schema_version")]
    pub schema_version: u32,
    pub model: ModelSpec,
    pub seed: u64,
    pub replicates: usize,
    pub times: Vec<f64>,
    pub sites: SitesSpec,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CovConfig {
    #[serde(default = "default_schema_version")]
    pub schema_version: u32,
    pub model: ModelSpec,
    pub thetas: Vec<f64>,
    pub times: Vec<f64>,
    /// Emit the truncated-series column (and residual vs the closed form).
    #[serde(default)]
    pub series: bool,
    /// For S^∞ models: evaluate the series column through the S^d lift.
    #[serde(default)]
    pub lift_d: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    Psd,
    Series,
    Mc,
    Orthogonality,
    Extraction,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PsdParams {
    pub sites: usize,
    pub times: usize,
    pub trials: usize,
    pub tol_rel: f64,
}

impl Default for PsdParams {
    fn default() -> Self {
        Self {
            sites: 10,
            times: 5,
            trials: 3,
            tol_rel: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SeriesParams {
    pub thetas: Option<Vec<f64>>,
    pub times: Option<Vec<f64>>,
    pub tol: f64,
}

impl Default for SeriesParams {
    fn default() -> Self {
        Self {
            thetas: None,
            times: None,
            tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct McParams {
    pub replicates: usize,
    pub allowed_misses: usize,
}

impl Default for McParams {
    fn default() -> Self {
        Self {
            replicates: 20_000,
            allowed_misses: 1,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExtractionParams {
    pub tol: f64,
}

impl Default for ExtractionParams {
    fn default() -> Self {
        Self { tol: 1e-6 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    #[serde(default = "default_schema_version")]
    pub schema_version: u32,
    pub model: ModelSpec,
    pub seed: u64,
    /// Subset of checks to run; omitted = every check applicable to the
    /// model.
    #[serde(default)]
    pub checks: Option<Vec<CheckKind>>,
    #[serde(default)]
    pub psd: PsdParams,
    #[serde(default)]
    pub series: SeriesParams,
    #[serde(default)]
    pub mc: McParams,
    #[serde(default)]
    pub extraction: ExtractionParams,
}

fn load_config<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
    let cfg: T = serde_json::from_str(&text)
        .map_err(|e| Error::Config(format!("invalid config {}: {e}", path.display())))?;
    Ok(cfg)
}

fn check_schema_version(version: u32) -> Result<()> {
    if version != CONFIG_SCHEMA_VERSION {
        return Err(Error::Config(format!(
            "unsupported schema_version {version} (this build reads {CONFIG_SCHEMA_VERSION})"
        )));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Argument parsing
// ---------------------------------------------------------------------------

#[derive(Debug, Parser)]
#[command(
    name = "stfields",
    about = "Isotropic vector random fields on spheres, stationary in time",
    version
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// JSON config file.
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the seed in the config.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Table format.
    #[arg(long, value_enum, default_value = "csv")]
    pub format: OutputFormat,
    /// Worker threads (fallback: STFIELDS_THREADS, then all cores).
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate replicate fields and write realizations + a run manifest.
    Simulate(CommonArgs),
    /// Tabulate the covariance C(theta; t) over a grid.
    Cov(CommonArgs),
    /// Run verification checks and write a report.
    Verify(CommonArgs),
    /// Tabulate the monomial expansion coefficients beta_{k,n} on S^d.
    Expand {
        /// Cosine power n.
        #[arg(long)]
        n: usize,
        /// Sphere dimension d >= 2.
        #[arg(long)]
        d: usize,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "csv")]
        format: OutputFormat,
    },
    /// Recover level coefficients from realizations simulated on quadrature
    /// nodes.
    Extract {
        /// Realizations file written by `simulate`.
        #[arg(long)]
        realizations: PathBuf,
        /// Manifest written by the same run.
        #[arg(long)]
        manifest: PathBuf,
        /// Level n to project out.
        #[arg(long)]
        level: usize,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "csv")]
        format: OutputFormat,
    },
}

fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::Io(_) | Error::Json(_) | Error::Csv(_)
        | Error::InvalidParameter(_) => 2,
        Error::InvalidModel(_)
        | Error::Truncation { .. }
        | Error::Domain(_)
        | Error::Range(_)
        | Error::DimensionMismatch(_)
        | Error::Numeric(_) => 3,
    }
}

fn configure_threads(cli_threads: Option<usize>) -> Result<()> {
    let threads = match cli_threads {
        Some(n) => Some(n),
        None => match std::env::var("STFIELDS_THREADS") {
            Ok(v) => Some(v.parse::<usize>().map_err(|_| {
                Error::Config(format!("STFIELDS_THREADS must be a positive integer, got {v:?}"))
            })?),
            Err(_) => None,
        },
    };
    if let Some(n) = threads {
        if n == 0 {
            return Err(Error::Config("thread count must be >= 1".into()));
        }
        // Ignores the error when a global pool already exists (tests).
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

/// Entry point used by the `stfields` binary; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // clap handles --help/--version with its own success exit.
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    }
}

pub fn main() -> i32 {
    main_with_args(std::env::args_os())
}

fn dispatch(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Simulate(args) => {
            configure_threads(args.threads)?;
            let mut cfg: SimulateConfig = load_config(&args.config)?;
            check_schema_version(cfg.schema_version)?;
            if let Some(seed) = args.seed {
                cfg.seed = seed;
            }
            cmd_simulate(&cfg, &args.out, args.format)?;
            Ok(0)
        }
        Command::Cov(args) => {
            configure_threads(args.threads)?;
            let cfg: CovConfig = load_config(&args.config)?;
            check_schema_version(cfg.schema_version)?;
            cmd_cov(&cfg, &args.out, args.format)?;
            Ok(0)
        }
        Command::Verify(args) => {
            configure_threads(args.threads)?;
            let mut cfg: VerifyConfig = load_config(&args.config)?;
            check_schema_version(cfg.schema_version)?;
            if let Some(seed) = args.seed {
                cfg.seed = seed;
            }
            let report = cmd_verify(&cfg, &args.out)?;
            println!("{report}");
            Ok(if report.pass { 0 } else { 1 })
        }
        Command::Expand { n, d, out, format } => {
            cmd_expand(n, d, &out, format)?;
            Ok(0)
        }
        Command::Extract {
            realizations,
            manifest,
            level,
            out,
            format,
        } => {
            cmd_extract(&realizations, &manifest, level, &out, format)?;
            Ok(0)
        }
    }
}

// ---------------------------------------------------------------------------
// Emitters
// ---------------------------------------------------------------------------

/// 17-significant-digit decimal rendering: lossless f64 round-trips and
/// byte-stable diffs.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

struct Table {
    schema: &'static str,
    columns: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn write(&self, path: &Path, format: OutputFormat) -> Result<()> {
        match format {
            OutputFormat::Csv => {
                let mut file = std::fs::File::create(path)?;
                writeln!(file, "# schema: {}", self.schema)?;
                let mut w = csv::Writer::from_writer(file);
                w.write_record(&self.columns)?;
                for row in &self.rows {
                    w.write_record(row)?;
                }
                w.flush()?;
            }
            OutputFormat::Json => {
                let rows: Vec<serde_json::Value> = self
                    .rows
                    .iter()
                    .map(|row| {
                        let mut obj = serde_json::Map::new();
                        for (c, v) in self.columns.iter().zip(row) {
                            let value = v
                                .parse::<f64>()
                                .ok()
                                .and_then(serde_json::Number::from_f64)
                                .map(serde_json::Value::Number)
                                .unwrap_or_else(|| serde_json::Value::String(v.clone()));
                            obj.insert(c.clone(), value);
                        }
                        serde_json::Value::Object(obj)
                    })
                    .collect();
                let doc = serde_json::json!({ "schema": self.schema, "rows": rows });
                std::fs::write(path, serde_json::to_string_pretty(&doc)?)?;
            }
        }
        Ok(())
    }
}

fn table_file_name(stem: &str, format: OutputFormat) -> String {
    match format {
        OutputFormat::Csv => format!("{stem}.csv"),
        OutputFormat::Json => format!("{stem}.json"),
    }
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub schema: String,
    pub command: String,
    pub seed: u64,
    pub replicates: usize,
    pub m: usize,
    pub dim: String,
    pub n_max: usize,
    pub tail_bound: f64,
    pub times: Vec<f64>,
    pub sites: SitesSpec,
    /// Drawn pole U per replicate (sphere simulator only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub poles: Option<Vec<Vec<f64>>>,
    pub outputs: Vec<String>,
    pub elapsed_ms: u128,
}

enum BuiltSites {
    Sphere(Vec<SpherePoint>),
    Circle(Vec<f64>),
}

fn build_sites(spec: &SitesSpec, dim: Dimension) -> Result<BuiltSites> {
    match (spec, dim) {
        (SitesSpec::Points { points }, Dimension::Sphere(d)) => {
            let sites = points
                .iter()
                .map(|p| {
                    let site = SpherePoint::new(p.clone())?;
                    if site.sphere_dim() != d {
                        return Err(Error::Config(format!(
                            "site has {} coordinates but the model lives on S^{d}",
                            p.len()
                        )));
                    }
                    Ok(site)
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(BuiltSites::Sphere(sites))
        }
        (SitesSpec::QuadratureS2 { polar, azimuth }, Dimension::Sphere(2)) => {
            let quad = product_quadrature_s2(*polar, *azimuth)?;
            Ok(BuiltSites::Sphere(quad.nodes().to_vec()))
        }
        (SitesSpec::QuadratureS2 { .. }, _) => Err(Error::Config(
            "quadrature_s2 sites require an S^2 model".into(),
        )),
        (SitesSpec::Angles { angles }, Dimension::Circle) => Ok(BuiltSites::Circle(angles.clone())),
        (SitesSpec::Angles { .. }, _) => Err(Error::Config(
            "angle sites require a circle (d=1) model".into(),
        )),
        (SitesSpec::Points { .. }, _) => Err(Error::Config(
            "point sites require an S^d (d >= 2) model".into(),
        )),
    }
}

pub fn cmd_simulate(cfg: &SimulateConfig, out_dir: &Path, format: OutputFormat) -> Result<()> {
    let started = std::time::Instant::now();
    if cfg.replicates == 0 {
        return Err(Error::Config("replicates must be >= 1".into()));
    }
    if cfg.times.is_empty() {
        return Err(Error::Config("times must be nonempty".into()));
    }
    let model = cfg.model.build()?;
    let coeffs = model.coefficients();
    if coeffs.dim() == Dimension::Infinite {
        return Err(Error::InvalidModel(
            "cannot simulate on S^inf; lift the model to a finite d first".into(),
        ));
    }
    let sites = build_sites(&cfg.sites, coeffs.dim())?;
    std::fs::create_dir_all(out_dir)?;

    let columns_for = |d: usize| {
        let mut cols = vec!["replicate".to_string(), "site_id".to_string()];
        cols.extend((0..=d).map(|k| format!("x{k}")));
        cols.extend(["t".to_string(), "component".to_string(), "value".to_string()]);
        cols
    };

    let (table, poles) = match &sites {
        BuiltSites::Sphere(points) => {
            let fields =
                run_replicates_sphere(coeffs, points, &cfg.times, cfg.seed, cfg.replicates)?;
            let d = points[0].sphere_dim();
            let mut rows = Vec::new();
            for (r, field) in fields.iter().enumerate() {
                for (s, site) in field.sites.iter().enumerate() {
                    for (i, &t) in field.times.iter().enumerate() {
                        for c in 0..field.m() {
                            let mut row = vec![r.to_string(), s.to_string()];
                            row.extend(site.coords().iter().map(|&x| fmt_f64(x)));
                            row.push(fmt_f64(t));
                            row.push(c.to_string());
                            row.push(fmt_f64(field.values[s][i][c]));
                            rows.push(row);
                        }
                    }
                }
            }
            let poles: Vec<Vec<f64>> = fields.iter().map(|f| f.pole.coords().to_vec()).collect();
            (
                Table {
                    schema: REALIZATIONS_SCHEMA,
                    columns: columns_for(d),
                    rows,
                },
                Some(poles),
            )
        }
        BuiltSites::Circle(angles) => {
            let fields =
                run_replicates_circle(coeffs, angles, &cfg.times, cfg.seed, cfg.replicates)?;
            let mut rows = Vec::new();
            for (r, field) in fields.iter().enumerate() {
                for (s, &angle) in field.angles.iter().enumerate() {
                    let site = SpherePoint::from_circle_angle(angle);
                    for (i, &t) in field.times.iter().enumerate() {
                        for c in 0..field.values[s][i].len() {
                            let mut row = vec![r.to_string(), s.to_string()];
                            row.extend(site.coords().iter().map(|&x| fmt_f64(x)));
                            row.push(fmt_f64(t));
                            row.push(c.to_string());
                            row.push(fmt_f64(field.values[s][i][c]));
                            rows.push(row);
                        }
                    }
                }
            }
            (
                Table {
                    schema: REALIZATIONS_SCHEMA,
                    columns: columns_for(1),
                    rows,
                },
                None,
            )
        }
    };

    let realizations_name = table_file_name("realizations", format);
    table.write(&out_dir.join(&realizations_name), format)?;

    let manifest = Manifest {
        schema: MANIFEST_SCHEMA.to_string(),
        command: "simulate".to_string(),
        seed: cfg.seed,
        replicates: cfg.replicates,
        m: coeffs.m(),
        dim: coeffs.dim().to_string(),
        n_max: coeffs.truncation(),
        tail_bound: coeffs.tail_bound(),
        times: cfg.times.clone(),
        sites: cfg.sites.clone(),
        poles,
        outputs: vec![realizations_name],
        elapsed_ms: started.elapsed().as_millis(),
    };
    std::fs::write(
        out_dir.join("manifest.json"),
        serde_json::to_string_pretty(&manifest)?,
    )?;
    Ok(())
}

// ---------------------------------------------------------------------------
// cov
// ---------------------------------------------------------------------------

pub fn cmd_cov(cfg: &CovConfig, out_dir: &Path, format: OutputFormat) -> Result<()> {
    if cfg.thetas.is_empty() || cfg.times.is_empty() {
        return Err(Error::Config("thetas and times must be nonempty".into()));
    }
    let model = cfg.model.build()?;
    let m = model.m();

    // The series column: the model's own series, or (for S^inf models with
    // lift_d) the re-expanded Gegenbauer series on S^d.
    let lifted = match cfg.lift_d {
        Some(d) => {
            if model.dim() != Dimension::Infinite {
                return Err(Error::Config(
                    "lift_d applies only to S^inf models".into(),
                ));
            }
            Some(SpaceTimeCovariance::from_coefficients(
                lift_s_infinity_to_sd(model.coefficients(), d, f64::INFINITY)?,
            ))
        }
        None => None,
    };

    let has_closed = model.closed_form().is_some();
    let with_series = cfg.series || !has_closed || lifted.is_some();
    let mut columns = vec![
        "theta".to_string(),
        "t".to_string(),
        "i".to_string(),
        "j".to_string(),
        "analytic".to_string(),
    ];
    if with_series && has_closed {
        columns.push("series".to_string());
        columns.push("residual".to_string());
    }

    let mut rows = Vec::new();
    for &theta in &cfg.thetas {
        for &t in &cfg.times {
            let analytic = if has_closed {
                model.eval_closed_form(theta, t)?
            } else {
                model.eval(theta, t)?
            };
            let series = if with_series && has_closed {
                Some(match &lifted {
                    Some(l) => l.eval(theta, t)?,
                    None => model.eval(theta, t)?,
                })
            } else {
                None
            };
            for i in 0..m {
                for j in 0..m {
                    let mut row = vec![
                        fmt_f64(theta),
                        fmt_f64(t),
                        i.to_string(),
                        j.to_string(),
                        fmt_f64(analytic[(i, j)]),
                    ];
                    if let Some(s) = &series {
                        row.push(fmt_f64(s[(i, j)]));
                        row.push(fmt_f64(s[(i, j)] - analytic[(i, j)]));
                    }
                    rows.push(row);
                }
            }
        }
    }

    std::fs::create_dir_all(out_dir)?;
    Table {
        schema: COVARIANCE_SCHEMA,
        columns,
        rows,
    }
    .write(&out_dir.join(table_file_name("covariance", format)), format)?;
    Ok(())
}

// ---------------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------------

fn default_checks(model: &SpaceTimeCovariance) -> Vec<CheckKind> {
    let mut checks = vec![CheckKind::Psd, CheckKind::Orthogonality];
    if model.closed_form().is_some() {
        checks.push(CheckKind::Series);
    }
    if model.dim() != Dimension::Infinite {
        checks.push(CheckKind::Mc);
    }
    if model.dim() == Dimension::Sphere(2) && model.coefficients().truncation() <= 48 {
        checks.push(CheckKind::Extraction);
    }
    checks
}

fn psd_check(
    model: &SpaceTimeCovariance,
    cfg: &VerifyConfig,
    report: &mut VerificationReport,
) -> Result<()> {
    let mut rng = replicate_rng(cfg.seed, 0x505d);
    for trial in 0..cfg.psd.trials.max(1) {
        let angles = match model.dim() {
            Dimension::Sphere(d) => {
                let sites: Vec<SpherePoint> = (0..cfg.psd.sites)
                    .map(|_| sample_uniform(d, &mut rng))
                    .collect::<Result<_>>()?;
                pairwise_angles(&sites)?
            }
            Dimension::Circle => {
                let angles: Vec<f64> = (0..cfg.psd.sites)
                    .map(|_| rng.gen_range(0.0..2.0 * std::f64::consts::PI))
                    .collect();
                pairwise_circle_angles(&angles)
            }
            // S^inf contains every S^d isometrically: angles realized on S^2
            // are a valid sample.
            Dimension::Infinite => {
                let sites: Vec<SpherePoint> = (0..cfg.psd.sites)
                    .map(|_| sample_uniform(2, &mut rng))
                    .collect::<Result<_>>()?;
                pairwise_angles(&sites)?
            }
        };
        let times: Vec<f64> = match model.domain() {
            TimeDomain::Discrete => (0..cfg.psd.times).map(|k| k as f64).collect(),
            TimeDomain::Continuous => {
                let mut ts: Vec<f64> = (0..cfg.psd.times)
                    .map(|_| rng.gen_range(0.0..4.0))
                    .collect();
                ts.sort_by(f64::total_cmp);
                ts
            }
        };
        let mut sub = gram_psd_check(model, &angles, &times, cfg.psd.tol_rel)?;
        sub.name = format!("psd_trial{trial}");
        report.absorb(sub);
    }
    Ok(())
}

fn series_check(
    model: &SpaceTimeCovariance,
    cfg: &VerifyConfig,
    report: &mut VerificationReport,
) -> Result<()> {
    use std::f64::consts::PI;
    let thetas = cfg.series.thetas.clone().unwrap_or_else(|| {
        match model.dim() {
            // cos-power series lose their geometric margin at ϑ ∈ {0, π}.
            Dimension::Infinite => (1..8).map(|k| k as f64 * PI / 8.0).collect(),
            _ => (0..=8).map(|k| k as f64 * PI / 8.0).collect(),
        }
    });
    let times = cfg.series.times.clone().unwrap_or_else(|| match model.domain() {
        TimeDomain::Discrete => vec![0.0, 1.0, 2.0],
        TimeDomain::Continuous => vec![0.0, 0.5, 1.0, 2.5],
    });
    report.absorb(series_vs_closed_form(model, &thetas, &times, cfg.series.tol)?);
    Ok(())
}

fn mc_check(
    model: &SpaceTimeCovariance,
    cfg: &VerifyConfig,
    report: &mut VerificationReport,
) -> Result<()> {
    let times = [0.0, 1.0];
    let mut rng = replicate_rng(cfg.seed, 0x3c0d);
    let design = |theta: f64| {
        vec![
            McDesignPoint { site_a: 0, time_a: 0, site_b: 1, time_b: 0, theta, lag: 0.0 },
            McDesignPoint { site_a: 0, time_a: 1, site_b: 1, time_b: 0, theta, lag: 1.0 },
            McDesignPoint { site_a: 0, time_a: 0, site_b: 1, time_b: 1, theta, lag: -1.0 },
            McDesignPoint { site_a: 0, time_a: 0, site_b: 0, time_b: 0, theta: 0.0, lag: 0.0 },
            McDesignPoint { site_a: 0, time_a: 1, site_b: 0, time_b: 0, theta: 0.0, lag: 1.0 },
            McDesignPoint { site_a: 1, time_a: 0, site_b: 1, time_b: 1, theta: 0.0, lag: -1.0 },
        ]
    };
    let sub = match model.dim() {
        Dimension::Sphere(d) => {
            let sites = [sample_uniform(d, &mut rng)?, sample_uniform(d, &mut rng)?];
            let theta = crate::sphere::geodesic_distance(&sites[0], &sites[1])?;
            let fields = run_replicates_sphere(
                model.coefficients(),
                &sites,
                &times,
                cfg.seed,
                cfg.mc.replicates,
            )?;
            mc_covariance_check(model, &fields, &design(theta), cfg.mc.allowed_misses)?
        }
        Dimension::Circle => {
            let angles = [
                rng.gen_range(0.0..2.0 * std::f64::consts::PI),
                rng.gen_range(0.0..2.0 * std::f64::consts::PI),
            ];
            let theta = pairwise_circle_angles(&angles)[(0, 1)];
            let fields = run_replicates_circle(
                model.coefficients(),
                &angles,
                &times,
                cfg.seed,
                cfg.mc.replicates,
            )?;
            mc_covariance_check(model, &fields, &design(theta), cfg.mc.allowed_misses)?
        }
        Dimension::Infinite => {
            return Err(Error::Config(
                "the mc check needs a finite-dimensional model".into(),
            ))
        }
    };
    report.absorb(sub);
    Ok(())
}

fn orthogonality_check(
    model: &SpaceTimeCovariance,
    cfg: &VerifyConfig,
    report: &mut VerificationReport,
) -> Result<()> {
    let quad = product_quadrature_s2(32, 64)?;
    let mut rng = replicate_rng(cfg.seed, 0x0f7a);
    let omega = 4.0 * std::f64::consts::PI;
    for pair in 0..3 {
        let x1 = sample_uniform(2, &mut rng)?;
        let x2 = sample_uniform(2, &mut rng)?;
        let mut sub = funk_hecke_check(&x1, &x2, 6, &quad, 1e-8, 1e-8 * omega)?;
        sub.name = format!("funk_hecke_pair{pair}");
        report.absorb(sub);
    }
    // Simulated level draws must be mean-zero and uncorrelated across
    // levels.
    if let Dimension::Sphere(d) = model.dim() {
        let sites = [sample_uniform(d, &mut rng)?];
        let times = match model.domain() {
            TimeDomain::Discrete => [0.0, 1.0],
            TimeDomain::Continuous => [0.0, 0.7],
        };
        let fields = run_replicates_sphere(
            model.coefficients(),
            &sites,
            &times,
            cfg.seed ^ 0x0f7a,
            cfg.mc.replicates,
        )?;
        report.absorb(level_orthogonality_check(&fields)?);
    }
    Ok(())
}

fn extraction_check(
    model: &SpaceTimeCovariance,
    cfg: &VerifyConfig,
    report: &mut VerificationReport,
) -> Result<()> {
    if model.dim() != Dimension::Sphere(2) {
        return Err(Error::Config(
            "the extraction check needs an S^2 model".into(),
        ));
    }
    let n_max = model.coefficients().truncation();
    let quad = product_quadrature_s2(n_max + 1, 2 * n_max + 2)?;
    let mut rng = replicate_rng(cfg.seed, 0xe87); // dedicated stream
    let times: Vec<f64> = match model.domain() {
        TimeDomain::Discrete => vec![0.0, 1.0],
        TimeDomain::Continuous => vec![0.0, 0.8],
    };
    let field = simulate_sphere_series(model.coefficients(), quad.nodes(), &times, &mut rng)?;
    report.absorb(extraction_roundtrip_check(
        &field,
        model.coefficients(),
        &quad,
        cfg.extraction.tol,
    )?);
    Ok(())
}

/// Runs the configured checks; the caller decides the exit code from
/// `report.pass`.
pub fn run_verify(cfg: &VerifyConfig) -> Result<VerificationReport> {
    let model = cfg.model.build()?;
    let checks = match &cfg.checks {
        Some(list) => {
            if list.is_empty() {
                return Err(Error::Config("checks must be nonempty when given".into()));
            }
            list.clone()
        }
        None => default_checks(&model),
    };
    let mut report = VerificationReport::new("verify");
    report.set_metadata("seed", cfg.seed);
    report.set_metadata("dim", model.dim().to_string());
    report.set_metadata("m", model.m());
    report.set_metadata("n_max", model.coefficients().truncation());
    report.set_metadata("tail_bound", model.coefficients().tail_bound());
    for check in checks {
        match check {
            CheckKind::Psd => psd_check(&model, cfg, &mut report)?,
            CheckKind::Series => series_check(&model, cfg, &mut report)?,
            CheckKind::Mc => mc_check(&model, cfg, &mut report)?,
            CheckKind::Orthogonality => orthogonality_check(&model, cfg, &mut report)?,
            CheckKind::Extraction => extraction_check(&model, cfg, &mut report)?,
        }
    }
    Ok(report)
}

pub fn cmd_verify(cfg: &VerifyConfig, out_dir: &Path) -> Result<VerificationReport> {
    let report = run_verify(cfg)?;
    std::fs::create_dir_all(out_dir)?;
    let doc = serde_json::json!({ "schema": REPORT_SCHEMA, "report": report });
    std::fs::write(
        out_dir.join("report.json"),
        serde_json::to_string_pretty(&doc)?,
    )?;
    Ok(report)
}

// ---------------------------------------------------------------------------
// expand
// ---------------------------------------------------------------------------

pub fn cmd_expand(n: usize, d: usize, out_dir: &Path, format: OutputFormat) -> Result<()> {
    let betas = monomial_expansion_coeffs(d, n)?;
    let rows = betas
        .iter()
        .enumerate()
        .map(|(k, &beta)| {
            vec![
                n.to_string(),
                d.to_string(),
                k.to_string(),
                (n - 2 * k).to_string(),
                fmt_f64(beta),
            ]
        })
        .collect();
    std::fs::create_dir_all(out_dir)?;
    Table {
        schema: EXPANSION_SCHEMA,
        columns: ["n", "d", "k", "degree", "beta"].map(String::from).to_vec(),
        rows,
    }
    .write(&out_dir.join(table_file_name("expansion", format)), format)?;
    Ok(())
}

// ---------------------------------------------------------------------------
// extract
// ---------------------------------------------------------------------------

fn read_realizations_csv(
    path: &Path,
    manifest: &Manifest,
    quad: &SphereQuadrature,
) -> Result<Vec<Vec<Vec<DVector<f64>>>>> {
    let text = std::fs::read_to_string(path)?;
    let data: String = text
        .lines()
        .filter(|l| !l.starts_with('#'))
        .collect::<Vec<_>>()
        .join("\n");
    let mut reader = csv::Reader::from_reader(data.as_bytes());
    let headers = reader.headers()?.clone();
    let find = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Config(format!("realizations file lacks column {name:?}")))
    };
    let (c_rep, c_site, c_t, c_comp, c_val) = (
        find("replicate")?,
        find("site_id")?,
        find("t")?,
        find("component")?,
        find("value")?,
    );
    let time_index = |t: f64| -> Result<usize> {
        manifest
            .times
            .iter()
            .position(|&mt| mt == t)
            .ok_or_else(|| Error::Config(format!("time {t} not in the manifest grid")))
    };
    // values[replicate][site][time] = m-vector
    let mut values = vec![
        vec![vec![DVector::zeros(manifest.m); manifest.times.len()]; quad.len()];
        manifest.replicates
    ];
    let parse =
        |field: &str| -> Result<f64> { field.parse().map_err(|_| Error::Config(format!("bad number {field:?}"))) };
    for record in reader.records() {
        let record = record?;
        let r: usize = record[c_rep]
            .parse()
            .map_err(|_| Error::Config("bad replicate index".into()))?;
        let s: usize = record[c_site]
            .parse()
            .map_err(|_| Error::Config("bad site index".into()))?;
        let c: usize = record[c_comp]
            .parse()
            .map_err(|_| Error::Config("bad component index".into()))?;
        let i = time_index(parse(&record[c_t])?)?;
        if r >= manifest.replicates || s >= quad.len() || c >= manifest.m {
            return Err(Error::Config(
                "realizations file does not match the manifest layout".into(),
            ));
        }
        values[r][s][i][c] = parse(&record[c_val])?;
    }
    Ok(values)
}

pub fn cmd_extract(
    realizations: &Path,
    manifest_path: &Path,
    level: usize,
    out_dir: &Path,
    format: OutputFormat,
) -> Result<()> {
    let manifest: Manifest = serde_json::from_str(&std::fs::read_to_string(manifest_path)?)
        .map_err(|e| Error::Config(format!("invalid manifest: {e}")))?;
    if manifest.schema != MANIFEST_SCHEMA {
        return Err(Error::Config(format!(
            "unsupported manifest schema {:?}",
            manifest.schema
        )));
    }
    let SitesSpec::QuadratureS2 { polar, azimuth } = manifest.sites else {
        return Err(Error::Config(
            "extraction needs a run simulated on quadrature_s2 sites".into(),
        ));
    };
    let Some(poles) = &manifest.poles else {
        return Err(Error::Config("manifest lacks the drawn poles".into()));
    };
    let quad = product_quadrature_s2(polar, azimuth)?;
    let values = read_realizations_csv(realizations, &manifest, &quad)?;

    let mut rows = Vec::new();
    for (r, replicate_values) in values.into_iter().enumerate() {
        let field = FieldRealization {
            sites: quad.nodes().to_vec(),
            times: manifest.times.clone(),
            values: replicate_values,
            pole: SpherePoint::new(poles[r].clone())?,
            level_draws: Vec::new(),
        };
        let coeffs = extract_level_coefficients(&field, manifest.n_max, level, &quad)?;
        for (i, v) in coeffs.iter().enumerate() {
            for c in 0..v.len() {
                rows.push(vec![
                    r.to_string(),
                    level.to_string(),
                    fmt_f64(manifest.times[i]),
                    c.to_string(),
                    fmt_f64(v[c]),
                ]);
            }
        }
    }
    std::fs::create_dir_all(out_dir)?;
    Table {
        schema: COEFFICIENTS_SCHEMA,
        columns: ["replicate", "level", "t", "component", "value"]
            .map(String::from)
            .to_vec(),
        rows,
    }
    .write(&out_dir.join(table_file_name("coefficients", format)), format)?;
    Ok(())
}

// Re-exported so integration tests and examples can drive commands without
// spawning a process.
pub use self::main_with_args as run;

#[cfg(test)]
mod tests {
    use super::*;

    fn example4_spec() -> ModelSpec {
        ModelSpec::Example4 {
            base: TemporalSpec::Separable {
                family: CorrelationFamily::Exponential,
                tau: 1.0,
                coupling: vec![vec![0.5, 0.3], vec![0.3, 0.4]],
            },
            d: 2,
            n_max: 30,
            tail_tol: 1e-3,
        }
    }

    #[test]
    fn config_rejects_unknown_keys() {
        let bad = r#"{ "model": { "family": "example4", "d": 2,
            "base": {"kind":"separable","family":"exponential","tau":1.0,"coupling":[[0.5]]},
            "bogus": 1 }, "seed": 1, "replicates": 1, "times": [0],
            "sites": {"kind":"points","points":[[1,0,0]]} }"#;
        assert!(serde_json::from_str::<SimulateConfig>(bad).is_err());
        let bad_top = r#"{ "model": { "family": "example5",
            "base": {"kind":"separable","family":"exponential","tau":1.0,"coupling":[[0.5]]} },
            "seed": 1, "replicates": 1, "times": [0],
            "sites": {"kind":"angles","angles":[0.0]}, "unknown": true }"#;
        assert!(serde_json::from_str::<SimulateConfig>(bad_top).is_err());
    }

    #[test]
    fn model_spec_round_trip_and_build() {
        let spec = example4_spec();
        let text = serde_json::to_string(&spec).unwrap();
        let back: ModelSpec = serde_json::from_str(&text).unwrap();
        let model = back.build().unwrap();
        assert_eq!(model.m(), 2);
        assert_eq!(model.dim(), Dimension::Sphere(2));
        assert!(model.closed_form().is_some());
    }

    #[test]
    fn dim_spec_parsing() {
        let inf: DimSpec = serde_json::from_str("\"inf\"").unwrap();
        assert_eq!(inf.to_dimension().unwrap(), Dimension::Infinite);
        let one: DimSpec = serde_json::from_str("1").unwrap();
        assert_eq!(one.to_dimension().unwrap(), Dimension::Circle);
        let three: DimSpec = serde_json::from_str("3").unwrap();
        assert_eq!(three.to_dimension().unwrap(), Dimension::Sphere(3));
        let bad: DimSpec = serde_json::from_str("\"huge\"").unwrap();
        assert!(bad.to_dimension().is_err());
    }

    #[test]
    fn fmt_round_trips() {
        for &x in &[0.0, 1.0, -1.5, std::f64::consts::PI, 1e-300, 6.02e23] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn exit_codes_by_error_class() {
        assert_eq!(exit_code_for(&Error::Config("x".into())), 2);
        assert_eq!(exit_code_for(&Error::InvalidParameter("x".into())), 2);
        assert_eq!(exit_code_for(&Error::InvalidModel("x".into())), 3);
        assert_eq!(
            exit_code_for(&Error::Truncation {
                requested: 1e-8,
                achieved: 1.0
            }),
            3
        );
    }

    #[test]
    fn temporal_spec_linear_combination() {
        let spec = TemporalSpec::LinearCombination {
            terms: vec![TermSpec {
                coeff: -0.3,
                model: TemporalSpec::Constant {
                    matrix: vec![vec![1.0]],
                    domain: TimeDomain::Continuous,
                },
            }],
        };
        let model = spec.build().unwrap();
        assert_eq!(model.eval(0.0).unwrap()[(0, 0)], -0.3);
    }
}
