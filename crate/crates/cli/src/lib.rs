//! Command-line front end for the `hypermetric` library.
//!
//! Exit status: 0 on success or a passing report, 1 when a report fails or
//! a falsification search finds a violation, 2 on usage and input errors.

use std::ffi::OsString;
use std::io::Write;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hypermetric::maps::{self, BilipschitzEstimate, DilatationEstimate, SampleMap};
use hypermetric::quasihyperbolic::{self, KEstimate};
use hypermetric::verify::{self, CollinearViolation, InequalityReport, PhiWitness, Scan, Suite};
use hypermetric::{Domain, Error, KControls, MetricKind, MetricParams, MoebiusMap, Point};
use serde::{Deserialize, Serialize};

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "HYPERMETRIC_THREADS";

const MAX_PRECISION: usize = 15;
const DEFAULT_SCAN_COUNT: usize = 10_000;
const DEFAULT_ESTIMATOR_COUNT: usize = 100;

#[derive(Debug, Parser)]
#[command(name = "hypermetric", version, about = "Hyperbolic-type metrics on Euclidean domains")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Distance between two points
    Dist(DistArgs),
    /// Triangle-inequality scan over seeded triples
    ScanTriangle(ScanArgs),
    /// Run one comparison-inequality suite
    VerifySuite(SuiteArgs),
    /// Search the unit disk for triangle-inequality violations
    Falsify(FalsifyArgs),
    /// Grid estimate of the quasihyperbolic distance
    KEstimate(KEstimateArgs),
    /// Linear dilatation of a sample map
    Dilatation(DilatationArgs),
    /// Empirical uniformity constant max k/j
    Uniformity(UniformityArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Output {
    Text,
    Json,
    Csv,
}

#[derive(Debug, Args)]
struct Common {
    /// Domain: ball:N, halfspace:N, punctured:N or interval:A:B
    #[arg(long, default_value = "ball:2")]
    domain: String,
    /// Constant c of the h-metric
    #[arg(long, default_value_t = 2.0)]
    c: f64,
    /// Seed for all sampling
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output format; each command has its own default
    #[arg(long, value_enum)]
    output: Option<Output>,
    /// Decimals for text output (at most 15)
    #[arg(long, default_value_t = 6)]
    precision: usize,
}

#[derive(Debug, Args)]
struct KFlags {
    /// Initial grid spacing for the quasihyperbolic estimate
    #[arg(long)]
    spacing: Option<f64>,
    /// Number of spacing halvings
    #[arg(long)]
    refinements: Option<u32>,
    /// Maximum grid nodes per level
    #[arg(long)]
    node_cap: Option<usize>,
    /// Minimum boundary distance of sampled pairs
    #[arg(long)]
    clearance: Option<f64>,
    /// Maximum separation of sampled pairs
    #[arg(long)]
    separation: Option<f64>,
}

impl KFlags {
    fn controls(&self) -> Result<KControls, Error> {
        let d = KControls::default();
        let k = KControls {
            initial_spacing: self.spacing.unwrap_or(d.initial_spacing),
            refinements: self.refinements.unwrap_or(d.refinements),
            node_cap: self.node_cap.unwrap_or(d.node_cap),
            stencil_radius: None,
            min_clearance: self.clearance.unwrap_or(d.min_clearance),
            max_separation: self.separation.unwrap_or(d.max_separation),
        };
        k.validate()?;
        Ok(k)
    }
}

#[derive(Debug, Args)]
struct DistArgs {
    #[command(flatten)]
    common: Common,
    /// h, j, phi, rho-ball, rho-halfspace or k
    #[arg(long, default_value = "h")]
    metric: String,
    /// Two points, each as comma-separated coordinates
    #[arg(long, num_args = 2, required = true, allow_hyphen_values = true)]
    points: Vec<String>,
    #[command(flatten)]
    k: KFlags,
}

#[derive(Debug, Args)]
struct ScanArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value = "h")]
    metric: String,
    /// Number of triples (default 10000)
    #[arg(long)]
    count: Option<usize>,
    /// Override the pass tolerance
    #[arg(long)]
    tolerance: Option<f64>,
    #[command(flatten)]
    k: KFlags,
}

#[derive(Debug, Args)]
struct SuiteArgs {
    #[command(flatten)]
    common: Common,
    /// Suite name or short id, e.g. h-rho-comparison or T4_6
    #[arg(long)]
    suite: String,
    /// Number of samples (default 10000, or 100 for estimator suites)
    #[arg(long)]
    count: Option<usize>,
    /// Override the pass tolerance
    #[arg(long)]
    tolerance: Option<f64>,
    #[command(flatten)]
    k: KFlags,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Candidate {
    H,
    Phi,
}

#[derive(Debug, Args)]
struct FalsifyArgs {
    #[command(flatten)]
    common: Common,
    /// Candidate distance to test
    #[arg(long, value_enum, default_value = "h")]
    metric: Candidate,
    /// Comma-separated grid in (0, 1); defaults to a grid reaching 1 − 1e-8
    #[arg(long, value_delimiter = ',')]
    grid: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
struct KEstimateArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, num_args = 2, required = true, allow_hyphen_values = true)]
    points: Vec<String>,
    #[command(flatten)]
    k: KFlags,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MapChoice {
    Identity,
    Automorphism,
    Cayley,
    Stretch,
}

#[derive(Debug, Args)]
struct DilatationArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_enum, default_value = "stretch")]
    map: MapChoice,
    /// Center point
    #[arg(long, allow_hyphen_values = true, default_value = "0.5,0")]
    z: String,
    /// Automorphism parameter a (sent to the origin)
    #[arg(long, allow_hyphen_values = true)]
    center: Option<String>,
    /// Radial stretch exponent
    #[arg(long, default_value_t = 2.0)]
    alpha: f64,
    /// Decreasing comma-separated radii
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.01,0.001")]
    radii: Vec<f64>,
    /// Sphere sample count per radius
    #[arg(long, default_value_t = 64)]
    samples: usize,
    /// Pairs for the bilipschitz estimate; 0 skips the dilatation bound check
    #[arg(long, default_value_t = 10_000)]
    pairs: usize,
}

#[derive(Debug, Args)]
struct UniformityArgs {
    #[command(flatten)]
    common: Common,
    /// Number of pairs (default 100)
    #[arg(long)]
    count: Option<usize>,
    #[command(flatten)]
    k: KFlags,
}

/// A failure that ends the run with a message and an exit status.
#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure { code: 2, message: e.to_string() }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure { code: 2, message: message.into() }
}

fn io_failure(e: impl std::fmt::Display) -> Failure {
    Failure { code: 2, message: format!("cannot write output: {e}") }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceOutput {
    pub metric: String,
    pub domain: String,
    pub c: f64,
    pub x: Point,
    pub y: Point,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FalsifyOutput {
    pub metric: String,
    pub domain: String,
    pub c: Option<f64>,
    pub grid_size: usize,
    pub found: bool,
    /// Smallest violating radius predicted by the closed form, for `h`.
    pub threshold: Option<f64>,
    pub collinear: Option<CollinearViolation>,
    pub phi: Option<PhiWitness>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KEstimateOutput {
    pub domain: String,
    pub x: Point,
    pub y: Point,
    pub estimate: KEstimate,
    /// Closed form where one is known (half-space, punctured space).
    pub exact: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DilatationOutput {
    pub map: maps::MapKind,
    pub estimate: DilatationEstimate,
    pub bilipschitz: Option<BilipschitzEstimate>,
    /// Whether `H_hat ≤ L_hat² + 5e-2`.
    pub bound_holds: Option<bool>,
}

/// Parses `argv` (program name first), runs the command and writes the
/// result to `out` and diagnostics to `err`. Returns the exit status.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return code;
        }
    };
    let result = thread_pool().and_then(|pool| match pool {
        Some(pool) => pool.install(|| execute(&cli.command)),
        None => execute(&cli.command),
    });
    match result {
        Ok((code, text)) => match out.write_all(text.as_bytes()) {
            Ok(()) => code,
            Err(e) => {
                let _ = writeln!(err, "error: {}", io_failure(e).message);
                2
            }
        },
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

fn thread_pool() -> Result<Option<rayon::ThreadPool>, Failure> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(None);
    };
    let n: usize = raw.trim().parse().map_err(|_| usage(format!("{THREADS_ENV} must be a positive integer, got '{raw}'")))?;
    if n == 0 {
        return Err(usage(format!("{THREADS_ENV} must be at least 1")));
    }
    rayon::ThreadPoolBuilder::new().num_threads(n).build().map(Some).map_err(|e| usage(e.to_string()))
}

fn execute(command: &Command) -> Result<(i32, String), Failure> {
    match command {
        Command::Dist(a) => dist(a),
        Command::ScanTriangle(a) => scan_triangle(a),
        Command::VerifySuite(a) => verify_suite(a),
        Command::Falsify(a) => falsify(a),
        Command::KEstimate(a) => k_estimate(a),
        Command::Dilatation(a) => dilatation(a),
        Command::Uniformity(a) => uniformity(a),
    }
}

impl Common {
    fn domain(&self) -> Result<Domain, Failure> {
        Ok(self.domain.parse::<Domain>()?)
    }

    fn params(&self) -> Result<MetricParams, Failure> {
        Ok(MetricParams::new(self.c)?)
    }

    fn precision(&self) -> Result<usize, Failure> {
        if self.precision > MAX_PRECISION {
            return Err(usage(format!("--precision is at most {MAX_PRECISION}")));
        }
        Ok(self.precision)
    }

    fn output(&self, default: Output, allowed: &[Output]) -> Result<Output, Failure> {
        let o = self.output.unwrap_or(default);
        if allowed.contains(&o) {
            Ok(o)
        } else {
            Err(usage(format!("output format {o:?} is not available for this command").to_lowercase()))
        }
    }
}

fn parse_point(s: &str) -> Result<Point, Failure> {
    let coords = s
        .split(',')
        .map(|c| c.trim().parse::<f64>().map_err(|_| usage(format!("cannot parse point '{s}'"))))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Point::new(coords)?)
}

fn parse_pair(points: &[String]) -> Result<(Point, Point), Failure> {
    Ok((parse_point(&points[0])?, parse_point(&points[1])?))
}

fn parse_metric(name: &str, k: &KFlags) -> Result<MetricKind, Failure> {
    Ok(match name.parse::<MetricKind>()? {
        MetricKind::QuasiHyperbolic(_) => MetricKind::QuasiHyperbolic(k.controls()?),
        m => m,
    })
}

fn check_count(count: usize) -> Result<usize, Failure> {
    if count == 0 {
        return Err(usage("--count must be at least 1"));
    }
    Ok(count)
}

fn json<T: Serialize>(value: &T) -> Result<String, Failure> {
    let mut s = serde_json::to_string_pretty(value).map_err(io_failure)?;
    s.push('\n');
    Ok(s)
}

fn text(value: f64, precision: usize) -> String {
    format!("{value:.precision$}\n")
}

/// One row per sample: index, slack and the flattened sample points.
fn scan_csv(scan: &Scan) -> Result<String, Failure> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let shape: Vec<usize> = scan.samples.first().map(|s| s.points.iter().map(Point::dim).collect()).unwrap_or_default();
    let mut header = vec!["index".to_string(), "slack".to_string()];
    for (k, dim) in shape.iter().enumerate() {
        header.extend((0..*dim).map(|i| format!("p{k}_{i}")));
    }
    w.write_record(&header).map_err(io_failure)?;
    for s in &scan.samples {
        let mut row = vec![s.index.to_string(), s.slack.to_string()];
        row.extend(s.points.iter().flat_map(|p| p.coords().iter().map(f64::to_string)));
        w.write_record(&row).map_err(io_failure)?;
    }
    let bytes = w.into_inner().map_err(io_failure)?;
    String::from_utf8(bytes).map_err(io_failure)
}

fn emit_report(scan: Scan, tolerance: Option<f64>, output: Output) -> Result<(i32, String), Failure> {
    let report: InequalityReport = match tolerance {
        Some(t) if !(t >= 0.0 && t.is_finite()) => return Err(usage("--tolerance must be nonnegative")),
        Some(t) => scan.report.clone().with_tolerance(t),
        None => scan.report.clone(),
    };
    let code = if report.pass { 0 } else { 1 };
    let body = match output {
        Output::Csv => scan_csv(&scan)?,
        _ => json(&report)?,
    };
    Ok((code, body))
}

fn dist(a: &DistArgs) -> Result<(i32, String), Failure> {
    let domain = a.common.domain()?;
    let params = a.common.params()?;
    let precision = a.common.precision()?;
    let output = a.common.output(Output::Text, &[Output::Text, Output::Json])?;
    let metric = parse_metric(&a.metric, &a.k)?;
    let (x, y) = parse_pair(&a.points)?;
    let value = metric.evaluate(&domain, params, &x, &y)?;
    let body = match output {
        Output::Json => json(&DistanceOutput { metric: metric.name().into(), domain: domain.to_string(), c: params.c, x, y, value })?,
        _ => text(value, precision),
    };
    Ok((0, body))
}

fn scan_triangle(a: &ScanArgs) -> Result<(i32, String), Failure> {
    let domain = a.common.domain()?;
    let params = a.common.params()?;
    a.common.precision()?;
    let output = a.common.output(Output::Json, &[Output::Json, Output::Csv])?;
    let metric = parse_metric(&a.metric, &a.k)?;
    let count = check_count(a.count.unwrap_or(DEFAULT_SCAN_COUNT))?;
    let scan = verify::triangle_scan(&domain, metric, params, count, a.common.seed)?;
    emit_report(scan, a.tolerance, output)
}

fn verify_suite(a: &SuiteArgs) -> Result<(i32, String), Failure> {
    let domain = a.common.domain()?;
    let params = a.common.params()?;
    a.common.precision()?;
    let output = a.common.output(Output::Json, &[Output::Json, Output::Csv])?;
    let suite: Suite = a.suite.parse()?;
    let default = if suite.uses_estimator() { DEFAULT_ESTIMATOR_COUNT } else { DEFAULT_SCAN_COUNT };
    let count = check_count(a.count.unwrap_or(default))?;
    let scan = verify::inequality_suite(suite, &domain, params, count, a.common.seed, &a.k.controls()?)?;
    emit_report(scan, a.tolerance, output)
}

/// Default `t` grid for the φ search: `0.01, 0.02, …, 0.99`.
fn default_t_grid() -> Vec<f64> {
    (1..100).map(|k| k as f64 / 100.0).collect()
}

fn falsify(a: &FalsifyArgs) -> Result<(i32, String), Failure> {
    let domain = a.common.domain()?;
    if !matches!(domain, Domain::UnitBall { dim: 2 }) {
        return Err(usage("falsify searches collinear triples in ball:2; use scan-triangle for other domains"));
    }
    a.common.precision()?;
    a.common.output(Output::Json, &[Output::Json])?;
    let out = match a.metric {
        Candidate::H => {
            let params = a.common.params()?;
            let grid = a.grid.clone().unwrap_or_else(verify::default_r_grid);
            let v = verify::collinear_c_scan(params.c, &grid)?;
            FalsifyOutput {
                metric: "h".into(),
                domain: domain.to_string(),
                c: Some(params.c),
                grid_size: grid.len(),
                found: v.is_some(),
                threshold: verify::collinear_threshold(params.c),
                collinear: v,
                phi: None,
            }
        }
        Candidate::Phi => {
            let grid = a.grid.clone().unwrap_or_else(default_t_grid);
            let w = match verify::phi_triangle_counterexample(&grid) {
                Ok(w) => Some(w),
                Err(Error::NoViolationFound) => None,
                Err(e) => return Err(e.into()),
            };
            FalsifyOutput {
                metric: "phi".into(),
                domain: domain.to_string(),
                c: None,
                grid_size: grid.len(),
                found: w.is_some(),
                threshold: None,
                collinear: None,
                phi: w,
            }
        }
    };
    Ok((if out.found { 1 } else { 0 }, json(&out)?))
}

fn k_estimate(a: &KEstimateArgs) -> Result<(i32, String), Failure> {
    let domain = a.common.domain()?;
    let precision = a.common.precision()?;
    let output = a.common.output(Output::Text, &[Output::Text, Output::Json])?;
    let (x, y) = parse_pair(&a.points)?;
    let estimate = quasihyperbolic::k_estimate(&domain, &x, &y, &a.k.controls()?)?;
    let body = match output {
        Output::Json => {
            let exact = match domain {
                Domain::HalfSpace { .. } => Some(quasihyperbolic::k_exact_halfspace(&x, &y)?),
                Domain::PuncturedSpace { .. } => Some(quasihyperbolic::k_exact_punctured(&x, &y)?),
                _ => None,
            };
            json(&KEstimateOutput { domain: domain.to_string(), x, y, estimate, exact })?
        }
        _ => text(estimate.value, precision),
    };
    Ok((0, body))
}

fn dilatation(a: &DilatationArgs) -> Result<(i32, String), Failure> {
    a.common.precision()?;
    a.common.output(Output::Json, &[Output::Json])?;
    let z = parse_point(&a.z)?;
    let dim = z.dim();
    let map = match a.map {
        MapChoice::Identity => SampleMap::identity(a.common.domain()?),
        MapChoice::Automorphism => {
            let center = a.center.as_deref().ok_or_else(|| usage("--center is required for the automorphism map"))?;
            SampleMap::moebius(MoebiusMap::ball_automorphism(parse_point(center)?)?, dim)?
        }
        MapChoice::Cayley => SampleMap::moebius(MoebiusMap::ball_to_half_space(dim)?, dim)?,
        MapChoice::Stretch => SampleMap::radial_stretch(a.alpha, dim)?,
    };
    let estimate = maps::linear_dilatation(&map, &z, &a.radii, a.samples, a.common.seed)?;
    let (bilipschitz, bound_holds) = if a.pairs == 0 {
        (None, None)
    } else {
        let l = maps::bilipschitz_estimate(&map, a.common.params()?, a.pairs, a.common.seed)?;
        let holds = estimate.h_hat <= l.l_hat * l.l_hat + 5e-2;
        (Some(l), Some(holds))
    };
    let code = if bound_holds == Some(false) { 1 } else { 0 };
    Ok((code, json(&DilatationOutput { map: map.kind().clone(), estimate, bilipschitz, bound_holds })?))
}

fn uniformity(a: &UniformityArgs) -> Result<(i32, String), Failure> {
    let domain = a.common.domain()?;
    a.common.precision()?;
    a.common.output(Output::Json, &[Output::Json])?;
    let count = check_count(a.count.unwrap_or(DEFAULT_ESTIMATOR_COUNT))?;
    let u = verify::uniformity_estimate(&domain, count, a.common.seed, &a.k.controls()?)?;
    Ok((0, json(&u)?))
}
