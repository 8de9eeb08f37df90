//! The `opgeo` command line.
//!
//! stdout carries exactly the requested artifact; diagnostics go to stderr.
//! Exit codes: 0 success or pass, 1 suite or validation failure, 2 usage,
//! parse or configuration error, 3 mathematical precondition failure.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::curves::{curve_length, polar_group_geodesic_curve, Curve};
use crate::error::{GeoError, Result};
use crate::experiments::{bound_constant, canonical_suite, parse_p, run_suite, Manifold, TrialConfig, SUITES};
use crate::io::{curve_to_csv, fmt17, matrix_to_csv, read_matrix, ser_f64, ser_opt_f64, AlgebraFile, MatrixFile};
use crate::manifolds::{polar_dist, polar_geodesic, spd_dist, spd_geodesic, GroupPoint, MetricKind, PolarGeodesic, SpdGeodesic};
use crate::matfun::{polar_decompose, schatten_norm, CMatrix, SpdMatrix};
use crate::subgroups::{
    builtin_algebra, cartan_split, triple_system_check, validate_algebra, BuiltinKind,
    LieAlgebraSpec, TripleSystemReport, ValidationReport,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_MATH: i32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Pretty,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DistanceMetric {
    /// left-invariant metric; prints an upper bound, not a distance
    Left,
    /// positive-cone metric on positive definite matrices
    Positive,
    /// polar product metric on invertible matrices
    Polar,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GeodesicManifold {
    Spd,
    Polar,
    /// `exp(tx) exp(ty)` for a velocity `v = x + y` in a builtin algebra
    Group,
}

#[derive(Debug, Parser)]
#[command(name = "opgeo", version, about = "Geodesics and distances on operator groups, with verification suites")]
pub struct Cli {
    /// output format
    #[arg(long, value_enum, default_value_t = Format::Json, global = true)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Distance between two matrices (or an upper bound for `left`)
    Distance {
        #[arg(long, value_enum)]
        metric: DistanceMetric,
        p: PathBuf,
        q: PathBuf,
        /// Schatten exponent for `left` (a number >= 1 or `inf`)
        #[arg(long, default_value = "2")]
        p_norm: String,
    },
    /// Points on the geodesic from P to Q
    Geodesic {
        #[arg(long, value_enum)]
        manifold: GeodesicManifold,
        /// start point (for `group`: the initial velocity v)
        p: PathBuf,
        /// end point (not used for `group`)
        q: Option<PathBuf>,
        #[arg(long, conflicts_with = "samples")]
        t: Option<f64>,
        /// emit k + 1 equally spaced points as CSV
        #[arg(long)]
        samples: Option<usize>,
        /// algebra containing v for `group`
        #[arg(long, default_value = "full_gl")]
        kind: String,
    },
    /// Run a verification suite
    Verify {
        suite: String,
        #[arg(long)]
        group: Option<String>,
        #[arg(long)]
        dim: Option<usize>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        spread: Option<f64>,
        #[arg(long)]
        manifold: Option<String>,
        #[arg(long)]
        p_norm: Option<String>,
        #[arg(long)]
        panels: Option<usize>,
        /// JSON file mirroring the trial configuration; flags override it
        #[arg(long)]
        config: Option<PathBuf>,
        /// write the JSON report here instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Validate an algebra and report its Cartan split
    Algebra {
        #[arg(long, default_value = "full_gl")]
        kind: String,
        #[arg(long, default_value_t = 2)]
        dim: usize,
        /// JSON spec file `{name, dim, basis}`; overrides --kind/--dim
        #[arg(long)]
        spec_file: Option<PathBuf>,
    },
    /// Polar decomposition g = u |g|
    Polar { g: PathBuf },
    /// Schatten p-norm
    Norm {
        x: PathBuf,
        /// exponent >= 1 or `inf`
        #[arg(long, default_value = "2")]
        p: String,
    },
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{text}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{text}");
                    EXIT_USAGE
                }
            };
        }
    };
    let format = cli.format;
    let result = match cli.command {
        Command::Distance { metric, p, q, p_norm } => cmd_distance(metric, &p, &q, &p_norm, format),
        Command::Geodesic { manifold, p, q, t, samples, kind } => {
            cmd_geodesic(manifold, &p, q.as_deref(), t, samples, &kind, format)
        }
        Command::Verify { suite, group, dim, trials, seed, spread, manifold, p_norm, panels, config, out: path } => {
            let flags = VerifyFlags { group, dim, trials, seed, spread, manifold, p_norm, panels };
            return cmd_verify(&suite, flags, config.as_deref(), path.as_deref(), format, out, err);
        }
        Command::Algebra { kind, dim, spec_file } => cmd_algebra(&kind, dim, spec_file.as_deref(), format),
        Command::Polar { g } => cmd_polar(&g, format),
        Command::Norm { x, p } => cmd_norm(&x, &p, format),
    };
    match result {
        Ok(Output { text, code }) => {
            let _ = out.write_all(text.as_bytes());
            code
        }
        Err(e) => report_error(&e, err),
    }
}

fn report_error(e: &GeoError, err: &mut dyn Write) -> i32 {
    let _ = writeln!(err, "error: {e}");
    if e.is_math() {
        EXIT_MATH
    } else {
        EXIT_USAGE
    }
}

struct Output {
    text: String,
    code: i32,
}

impl Output {
    fn ok(text: String) -> Self {
        Output { text, code: EXIT_OK }
    }
}

fn to_json<T: Serialize>(x: &T) -> String {
    let mut s = serde_json::to_string_pretty(x).expect("serialization is infallible");
    s.push('\n');
    s
}

/// `name,value` rows under a header.
fn to_csv(rows: &[(&str, Option<f64>)]) -> String {
    let mut s = rows.iter().map(|r| r.0).collect::<Vec<_>>().join(",");
    s.push('\n');
    s.push_str(&rows.iter().map(|r| r.1.map(fmt17).unwrap_or_default()).collect::<Vec<_>>().join(","));
    s.push('\n');
    s
}

fn to_pretty(rows: &[(&str, Option<f64>)]) -> String {
    let width = rows.iter().map(|r| r.0.len()).max().unwrap_or(0);
    rows.iter()
        .map(|(k, v)| format!("{k:<width$}  {}\n", v.map(fmt17).unwrap_or_else(|| "-".into())))
        .collect()
}

fn spd_from(path: &Path) -> Result<SpdMatrix> {
    SpdMatrix::new(read_matrix(path)?)
}

fn group_from(path: &Path) -> Result<GroupPoint> {
    GroupPoint::new(read_matrix(path)?)
}

#[derive(Serialize)]
struct DistanceRecord {
    metric: &'static str,
    #[serde(serialize_with = "ser_opt_f64", skip_serializing_if = "Option::is_none")]
    distance: Option<f64>,
    #[serde(serialize_with = "ser_opt_f64", skip_serializing_if = "Option::is_none")]
    upper_bound: Option<f64>,
    #[serde(serialize_with = "ser_opt_f64", skip_serializing_if = "Option::is_none")]
    p_norm: Option<f64>,
    #[serde(serialize_with = "ser_opt_f64", skip_serializing_if = "Option::is_none")]
    bound_constant: Option<f64>,
    #[serde(serialize_with = "ser_opt_f64", skip_serializing_if = "Option::is_none")]
    polar_distance: Option<f64>,
    #[serde(serialize_with = "ser_opt_f64", skip_serializing_if = "Option::is_none")]
    constant_times_polar_distance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    curve: Option<&'static str>,
}

fn cmd_distance(metric: DistanceMetric, p: &Path, q: &Path, p_norm: &str, format: Format) -> Result<Output> {
    let rec = match metric {
        DistanceMetric::Positive => DistanceRecord {
            metric: "positive",
            distance: Some(spd_dist(&spd_from(p)?, &spd_from(q)?)?),
            upper_bound: None,
            p_norm: None,
            bound_constant: None,
            polar_distance: None,
            constant_times_polar_distance: None,
            curve: None,
        },
        DistanceMetric::Polar => DistanceRecord {
            metric: "polar",
            distance: Some(polar_dist(&group_from(p)?, &group_from(q)?)?),
            upper_bound: None,
            p_norm: None,
            bound_constant: None,
            polar_distance: None,
            constant_times_polar_distance: None,
            curve: None,
        },
        DistanceMetric::Left => {
            let pn = parse_p(p_norm)?;
            let metric = MetricKind::LeftInvariant(pn).validate()?;
            let (a, b) = (group_from(p)?, group_from(q)?);
            let curve = Curve::polar_geodesic(PolarGeodesic::new(&a, &b)?);
            let bound = curve_length(&curve, metric)?;
            let c = bound_constant(&a, &b)?;
            let d = polar_dist(&a, &b)?;
            DistanceRecord {
                metric: "left",
                distance: None,
                upper_bound: Some(bound),
                p_norm: Some(pn),
                bound_constant: Some(c),
                polar_distance: Some(d),
                constant_times_polar_distance: Some(c * d),
                curve: Some("polar geodesic"),
            }
        }
    };
    let rows = [
        ("distance", rec.distance),
        ("upper_bound", rec.upper_bound),
        ("bound_constant", rec.bound_constant),
        ("polar_distance", rec.polar_distance),
        ("constant_times_polar_distance", rec.constant_times_polar_distance),
    ];
    let rows: Vec<(&str, Option<f64>)> = rows.into_iter().filter(|r| r.1.is_some()).collect();
    Ok(Output::ok(match format {
        Format::Json => to_json(&rec),
        Format::Csv => to_csv(&rows),
        Format::Pretty => to_pretty(&rows),
    }))
}

fn matrix_out(x: &CMatrix, format: Format) -> String {
    match format {
        Format::Json => to_json(&MatrixFile::from_matrix(x)),
        Format::Csv => matrix_to_csv(x),
        Format::Pretty => format!("{x}"),
    }
}

fn cmd_geodesic(
    manifold: GeodesicManifold,
    p: &Path,
    q: Option<&Path>,
    t: Option<f64>,
    samples: Option<usize>,
    kind: &str,
    format: Format,
) -> Result<Output> {
    let need_q = || q.ok_or_else(|| GeoError::ConfigInvalid("this manifold needs both P and Q".into()));
    if let Some(t) = t {
        if !t.is_finite() {
            return Err(GeoError::ConfigInvalid("--t must be finite".into()));
        }
    }
    let curve = match manifold {
        GeodesicManifold::Spd => {
            let (a, b) = (spd_from(p)?, spd_from(need_q()?)?);
            if let Some(t) = t {
                return Ok(Output::ok(matrix_out(spd_geodesic(&a, &b, t)?.as_matrix(), format)));
            }
            Curve::spd_geodesic(SpdGeodesic::new(&a, &b)?)
        }
        GeodesicManifold::Polar => {
            let (a, b) = (group_from(p)?, group_from(need_q()?)?);
            if let Some(t) = t {
                return Ok(Output::ok(matrix_out(polar_geodesic(&a, &b, t)?.matrix(), format)));
            }
            let geo = PolarGeodesic::new(&a, &b)?;
            let (a2, b2) = (a.matrix().clone(), b.matrix().clone());
            Curve::new(move |s| {
                if s == 0.0 {
                    a2.clone()
                } else if s == 1.0 {
                    b2.clone()
                } else {
                    geo.at(s)
                }
            })
        }
        GeodesicManifold::Group => {
            let v = read_matrix(p)?;
            let kind: BuiltinKind = kind.parse()?;
            let ctx = crate::subgroups::SubgroupContext::builtin(kind, v.nrows())?;
            if let Some(t) = t {
                let g = crate::curves::polar_group_geodesic(&ctx, &v, t)?;
                return Ok(Output::ok(matrix_out(g.matrix(), format)));
            }
            // validates membership once
            crate::curves::polar_group_geodesic(&ctx, &v, 0.0)?;
            polar_group_geodesic_curve(&v)
        }
    };
    let k = samples.ok_or_else(|| GeoError::ConfigInvalid("give either --t or --samples".into()))?;
    if k == 0 {
        return Err(GeoError::ConfigInvalid("--samples must be at least 1".into()));
    }
    let pts = curve.sample(k);
    Ok(Output::ok(match format {
        Format::Json => {
            let items: Vec<serde_json::Value> = pts
                .iter()
                .map(|(t, x)| {
                    serde_json::json!({
                        "t": serde_json::value::to_value(crate::io::Sig17(*t)).expect("finite"),
                        "matrix": MatrixFile::from_matrix(x),
                    })
                })
                .collect();
            to_json(&items)
        }
        Format::Csv | Format::Pretty => curve_to_csv(&pts),
    }))
}

struct VerifyFlags {
    group: Option<String>,
    dim: Option<usize>,
    trials: Option<usize>,
    seed: Option<u64>,
    spread: Option<f64>,
    manifold: Option<String>,
    p_norm: Option<String>,
    panels: Option<usize>,
}

fn build_config(flags: VerifyFlags, config: Option<&Path>) -> Result<TrialConfig> {
    let mut cfg = match config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| GeoError::Io(format!("{}: {e}", path.display())))?;
            let value: serde_json::Value = serde_json::from_str(&text)?;
            let has_seed = value.get("seed").is_some();
            let mut cfg: TrialConfig =
                serde_json::from_value(value).map_err(|e| GeoError::ConfigInvalid(format!("{}: {e}", path.display())))?;
            if !has_seed {
                cfg.seed = env_seed()?.unwrap_or(cfg.seed);
            }
            cfg
        }
        None => {
            let mut cfg = TrialConfig::default();
            cfg.seed = env_seed()?.unwrap_or(cfg.seed);
            cfg
        }
    };
    if let Some(g) = flags.group {
        cfg.group = g.parse()?;
    }
    if let Some(n) = flags.dim {
        cfg.n = n;
    }
    if let Some(t) = flags.trials {
        cfg.trials = t;
    }
    if let Some(s) = flags.seed {
        cfg.seed = s;
    }
    if let Some(s) = flags.spread {
        cfg.spread = s;
    }
    if let Some(m) = flags.manifold {
        cfg.manifold = m.parse::<Manifold>()?;
    }
    if let Some(p) = flags.p_norm {
        cfg.p_norm = parse_p(&p)?;
    }
    if let Some(k) = flags.panels {
        cfg.panels = k;
    }
    cfg.validated()?;
    Ok(cfg)
}

fn env_seed() -> Result<Option<u64>> {
    match std::env::var("OPGEO_SEED") {
        Ok(s) => s
            .trim()
            .parse::<u64>()
            .map(Some)
            .map_err(|_| GeoError::ConfigInvalid(format!("OPGEO_SEED must be an unsigned integer, got {s:?}"))),
        Err(_) => Ok(None),
    }
}

fn cmd_verify(
    suite: &str,
    flags: VerifyFlags,
    config: Option<&Path>,
    path: Option<&Path>,
    format: Format,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> i32 {
    if canonical_suite(suite).is_none() {
        let _ = writeln!(err, "error: UnknownSuite: unknown suite {suite:?}");
        let _ = writeln!(err, "usage: opgeo verify <SUITE> [--group G] [--dim N] [--trials T] [--seed S] [--out FILE]");
        let _ = writeln!(err, "suites: {}", SUITES.join(", "));
        return EXIT_USAGE;
    }
    let cfg = match build_config(flags, config) {
        Ok(c) => c,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_USAGE;
        }
    };
    let report = match run_suite(suite, &cfg) {
        Ok(r) => r,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_USAGE;
        }
    };
    let _ = writeln!(
        err,
        "{}: {} ({} trials, {} failures, min margin {}, {} ms)",
        report.suite,
        if report.pass { "pass" } else { "FAIL" },
        report.summary.trials,
        report.summary.failures,
        fmt17(report.summary.min_margin),
        report.runtime_ms
    );
    let text = match format {
        Format::Json => {
            let mut s = report.to_json();
            s.push('\n');
            s
        }
        Format::Csv => match report.summary_csv() {
            Ok(s) => s,
            Err(e) => return report_error(&e, err),
        },
        Format::Pretty => {
            let mut s = format!("suite    {}\npass     {}\ndigest   {}\n", report.suite, report.pass, report.records_digest);
            for (k, v) in &report.summary.max_values {
                s.push_str(&format!("max {k}  {}\n", fmt17(*v)));
            }
            s
        }
    };
    match path {
        Some(p) => {
            if let Err(e) = std::fs::write(p, report.to_json()) {
                let _ = writeln!(err, "error: Io: {}: {e}", p.display());
                return EXIT_USAGE;
            }
        }
        None => {
            let _ = out.write_all(text.as_bytes());
        }
    }
    if report.pass {
        EXIT_OK
    } else {
        EXIT_FAIL
    }
}

#[derive(Serialize)]
struct AlgebraReport {
    name: String,
    dim: usize,
    real_dim: usize,
    validation: ValidationReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    dim_k: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    dim_m: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    triple_system: Option<TripleSystemReport>,
    pass: bool,
}

fn cmd_algebra(kind: &str, dim: usize, spec_file: Option<&Path>, format: Format) -> Result<Output> {
    let spec = match spec_file {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| GeoError::Io(format!("{}: {e}", path.display())))?;
            let file: AlgebraFile = serde_json::from_str(&text)?;
            LieAlgebraSpec::from_file(&file)?
        }
        None => builtin_algebra(kind.parse()?, dim)?,
    };
    let validation = validate_algebra(&spec);
    let (mut dim_k, mut dim_m, mut triple) = (None, None, None);
    if validation.passed {
        let split = cartan_split(&spec)?;
        let (k, m) = split.dims();
        dim_k = Some(k);
        dim_m = Some(m);
        triple = Some(triple_system_check(&split));
    }
    let pass = validation.passed && triple.as_ref().is_some_and(|t| t.passed);
    let rep = AlgebraReport {
        name: spec.name().to_string(),
        dim: spec.dim(),
        real_dim: spec.real_dim(),
        validation,
        dim_k,
        dim_m,
        triple_system: triple,
        pass,
    };
    let rows = [
        ("real_dim", Some(rep.real_dim as f64)),
        ("bracket_residual", Some(rep.validation.bracket_residual)),
        ("adjoint_residual", Some(rep.validation.adjoint_residual)),
        ("gram_condition", Some(rep.validation.gram_condition)),
        ("dim_k", rep.dim_k.map(|k| k as f64)),
        ("dim_m", rep.dim_m.map(|m| m as f64)),
        ("triple_system_residual", rep.triple_system.as_ref().map(|t| t.max_residual)),
        ("pass", Some(if pass { 1.0 } else { 0.0 })),
    ];
    let text = match format {
        Format::Json => to_json(&rep),
        Format::Csv => to_csv(&rows),
        Format::Pretty => {
            let mut s = format!("{}\n", rep.name);
            s.push_str(&to_pretty(&rows));
            s
        }
    };
    Ok(Output { text, code: if pass { EXIT_OK } else { EXIT_FAIL } })
}

#[derive(Serialize)]
struct PolarRecord {
    u: MatrixFile,
    p: MatrixFile,
    #[serde(serialize_with = "ser_f64")]
    residual: f64,
}

fn cmd_polar(g: &Path, format: Format) -> Result<Output> {
    let x = read_matrix(g)?;
    let (u, p) = polar_decompose(&x)?;
    let residual = (u.as_matrix() * p.as_matrix() - &x).norm() / x.norm();
    Ok(Output::ok(match format {
        Format::Json => {
            to_json(&PolarRecord { u: MatrixFile::from_matrix(u.as_matrix()), p: MatrixFile::from_matrix(p.as_matrix()), residual })
        }
        Format::Csv => format!("# u\n{}# p\n{}", matrix_to_csv(u.as_matrix()), matrix_to_csv(p.as_matrix())),
        Format::Pretty => format!("u ={}p ={}residual {}\n", u.as_matrix(), p.as_matrix(), fmt17(residual)),
    }))
}

#[derive(Serialize)]
struct NormRecord {
    #[serde(serialize_with = "crate::io::ser_f64")]
    norm: f64,
    p: String,
}

fn cmd_norm(x: &Path, p: &str, format: Format) -> Result<Output> {
    let pv = parse_p(p)?;
    let m = read_matrix(x)?;
    let norm = schatten_norm(&m, pv)?;
    let p_text = if pv.is_infinite() { "inf".to_string() } else { fmt17(pv) };
    Ok(Output::ok(match format {
        Format::Json => to_json(&NormRecord { norm, p: p_text }),
        Format::Csv => format!("p,norm\n{p_text},{}\n", fmt17(norm)),
        Format::Pretty => format!("|x|_{p_text} = {}\n", fmt17(norm)),
    }))
}
