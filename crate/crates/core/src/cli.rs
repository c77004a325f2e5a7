//! Batch command-line front end. Every subcommand writes one report, JSON
//! (with a `schema` field) or a CSV table, and maps errors to exit codes.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::catk::{
    cat_test, counterexample_search, lp_space, CatReport, GeodesicSpace, TreeSpace, Verdict, WarpedHyperbolicSpace,
    Witness, DEFAULT_CAT_TOL, DEFAULT_SAMPLE_BOX, DEFAULT_SAMPLES_PER_SIDE,
};
use crate::entropy::{
    bgs, check_composition, q_log, q_log_representation_residual, tsallis_continuous, tsallis_discrete, DensityFunction,
    DiscreteDistribution, DEFAULT_QUAD_TOL,
};
use crate::error::{Error, Result};
use crate::geometry::{
    bdp_curvature_estimate, christoffel, deformed_distance, exponential_geodesic_point, geodesic_distance_closed, sectional_curvature_numeric,
    solve_geodesic, BdpSample, GroupElement, MetricKind, MetricPoint, Warp, WarpedMetric, DEFAULT_BDP_RADII,
    DEFAULT_FD_STEP,
};
use crate::qcalc::QParam;
use crate::superstat::{chi2_density, laplace_transform, mean_beta, normalization, SuperstatParams};

/// Version of the report layout.
pub const SCHEMA_VERSION: u32 = 1;

/// Directory for reports when `--out` is absent.
pub const OUT_DIR_ENV: &str = "TSALLIS_GEOM_OUT_DIR";

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_DOMAIN: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;
/// A completed CAT(k) run whose verdict is fail.
pub const EXIT_CAT_FAIL: i32 = 10;

/// Exit code for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io(_) => EXIT_IO,
        Error::Parse(_) => EXIT_PARSE,
        Error::Numerical { .. } => EXIT_NUMERICAL,
        _ => EXIT_DOMAIN,
    }
}

#[derive(Debug, Parser)]
#[command(name = "tsallis-geom", version, about = "Tsallis entropy, q-deformed arithmetic and the induced hyperbolic geometry")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Report path; defaults to $TSALLIS_GEOM_OUT_DIR/<command>.<ext>, else stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Json)]
    pub format: OutputFormat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Json,
    Csv,
}

impl OutputFormat {
    fn extension(self) -> &'static str {
        match self {
            OutputFormat::Json => "json",
            OutputFormat::Csv => "csv",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InputFormat {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tsallis and BGS entropy of a discrete distribution.
    Entropy(EntropyArgs),
    /// q-deformed arithmetic on a single input.
    Qeval(QevalArgs),
    /// Sectional curvature of a warped metric.
    Curvature(CurvatureArgs),
    /// Geodesic distance and path between two points.
    Geodesic(GeodesicArgs),
    /// CAT(k) comparison test on a sampled geodesic space.
    Catk(CatkArgs),
    /// Superstatistics: Laplace transform of the chi-square density.
    Superstat(SuperstatArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Entropy(_) => "entropy",
            Command::Qeval(_) => "qeval",
            Command::Curvature(_) => "curvature",
            Command::Geodesic(_) => "geodesic",
            Command::Catk(_) => "catk",
            Command::Superstat(_) => "superstat",
        }
    }
}

#[derive(Debug, Args)]
pub struct EntropyArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub q: f64,
    /// Distribution file: a JSON array, or one CSV column.
    #[arg(long, required_unless_present = "density", conflicts_with = "density")]
    pub dist: Option<PathBuf>,
    /// Second distribution; adds the composition-law residual.
    #[arg(long, requires = "dist")]
    pub compose: Option<PathBuf>,
    /// Input format; inferred from the extension when absent.
    #[arg(long, value_enum)]
    pub input_format: Option<InputFormat>,
    /// Continuous entropy of a named density instead of a file.
    #[arg(long, value_enum)]
    pub density: Option<DensityChoice>,
    /// Density parameters, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, requires = "density")]
    pub params: Option<Vec<f64>>,
    /// Quadrature tolerance of the continuous entropy.
    #[arg(long, default_value_t = DEFAULT_QUAD_TOL)]
    pub quad_tol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DensityChoice {
    /// Uniform on [a, b]; params a,b (default 0,1)
    Uniform,
    /// Normal, truncated at 12 sigma; params mu,sigma (default 0,1)
    Normal,
    /// Exponential with rate lambda, truncated at 60/lambda; params lambda (default 1)
    Exponential,
}

impl DensityChoice {
    fn name(self) -> &'static str {
        match self {
            DensityChoice::Uniform => "uniform",
            DensityChoice::Normal => "normal",
            DensityChoice::Exponential => "exponential",
        }
    }

    fn build(self, params: Option<&[f64]>, quad_tol: f64) -> Result<(Vec<f64>, DensityFunction)> {
        let defaults: &[f64] = match self {
            DensityChoice::Uniform => &[0.0, 1.0],
            DensityChoice::Normal => &[0.0, 1.0],
            DensityChoice::Exponential => &[1.0],
        };
        let params = params.unwrap_or(defaults).to_vec();
        if params.len() != defaults.len() {
            return Err(Error::domain(format!(
                "{} density takes {} parameters, got {}",
                self.name(),
                defaults.len(),
                params.len()
            )));
        }
        let f = match self {
            DensityChoice::Uniform => {
                let (a, b) = (params[0], params[1]);
                let h = 1.0 / (b - a);
                DensityFunction::new(move |_| h, a, b, quad_tol)?
            }
            DensityChoice::Normal => {
                let (mu, sigma) = (params[0], params[1]);
                if !(sigma > 0.0) {
                    return Err(Error::domain(format!("sigma must be > 0, got {sigma}")));
                }
                let c = 1.0 / (sigma * (2.0 * std::f64::consts::PI).sqrt());
                let g = move |x: f64| c * (-0.5 * ((x - mu) / sigma).powi(2)).exp();
                DensityFunction::new(g, mu - 12.0 * sigma, mu + 12.0 * sigma, quad_tol)?
            }
            DensityChoice::Exponential => {
                let lambda = params[0];
                if !(lambda > 0.0) {
                    return Err(Error::domain(format!("lambda must be > 0, got {lambda}")));
                }
                DensityFunction::new(move |x| lambda * (-lambda * x).exp(), 0.0, 60.0 / lambda, quad_tol)?
            }
        };
        Ok((params, f))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum QOp {
    /// tau_q(x)
    Tau,
    /// tau_q^{-1}(x)
    TauInv,
    /// x (+)_q y
    Add,
    /// x (-)_q y
    Sub,
    /// x (x)_q y
    Mul,
    /// x (/)_q y
    Div,
    /// tau_q(x) for a distance x >= 0
    DeformedDistance,
    /// ln_q(x)
    QLog,
    /// g h in the twisted translation group with t = ln(2 - q)
    GroupCompose,
    /// g^-1
    GroupInverse,
    /// g h g^-1 h^-1
    GroupCommutator,
}

impl QOp {
    fn name(self) -> &'static str {
        match self {
            QOp::Tau => "tau",
            QOp::TauInv => "tau-inv",
            QOp::Add => "add",
            QOp::Sub => "sub",
            QOp::Mul => "mul",
            QOp::Div => "div",
            QOp::DeformedDistance => "deformed-distance",
            QOp::QLog => "q-log",
            QOp::GroupCompose => "group-compose",
            QOp::GroupInverse => "group-inverse",
            QOp::GroupCommutator => "group-commutator",
        }
    }

    fn is_group(self) -> bool {
        matches!(self, QOp::GroupCompose | QOp::GroupInverse | QOp::GroupCommutator)
    }
}

#[derive(Debug, Args)]
pub struct QevalArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub q: f64,
    #[arg(long, value_enum)]
    pub op: QOp,
    /// Operand of the scalar operations.
    #[arg(long, allow_negative_numbers = true)]
    pub x: Option<f64>,
    /// Second operand for the binary operations.
    #[arg(long, allow_negative_numbers = true)]
    pub y: Option<f64>,
    /// Group element x0,y1,...,yn for the group operations.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub g: Option<Vec<f64>>,
    /// Second group element for compose and commutator.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub h: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CurvatureMode {
    Analytic,
    Numeric,
    Bdp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MetricChoice {
    /// dx^2 + e^{-2tx}|dy|^2 with t = ln(2 - q)
    Exponential,
    /// dx^2 + e^{-2 t1 x} dy^2 + e^{-2 t2 x} dz^2 from q and q2
    Double,
    /// dx^2 + cosh^2(x) dy^2 + cosh^2(x) cosh^2(y) dz^2
    Cosh,
}

#[derive(Debug, Args)]
pub struct MetricArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub q: f64,
    #[arg(long, value_enum, default_value_t = MetricChoice::Exponential)]
    pub metric: MetricChoice,
    /// Second entropic index for the double metric.
    #[arg(long, allow_negative_numbers = true)]
    pub q2: Option<f64>,
    /// Fiber dimension of the exponential metric.
    #[arg(long, default_value_t = 1)]
    pub n: usize,
}

impl MetricArgs {
    fn build(&self) -> Result<WarpedMetric> {
        let p = QParam::new(self.q)?;
        match self.metric {
            MetricChoice::Exponential => WarpedMetric::from_q(p, self.n),
            MetricChoice::Double => {
                let q2 = self.q2.ok_or_else(|| Error::domain("the double metric needs --q2"))?;
                WarpedMetric::double_from_q(p, QParam::new(q2)?)
            }
            MetricChoice::Cosh => WarpedMetric::convex_double(Warp::Cosh, Warp::CoshProduct),
        }
    }
}

#[derive(Debug, Args)]
pub struct CurvatureArgs {
    #[command(flatten)]
    pub metric: MetricArgs,
    #[arg(long, value_enum, default_value_t = CurvatureMode::Analytic)]
    pub mode: CurvatureMode,
    /// Base point, comma separated; the origin when absent.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub at: Option<Vec<f64>>,
    /// Coordinate axes spanning the plane.
    #[arg(long, value_delimiter = ',', num_args = 2, default_values_t = [0usize, 1])]
    pub plane: Vec<usize>,
    /// Finite-difference step of the numeric mode.
    #[arg(long, default_value_t = DEFAULT_FD_STEP)]
    pub step: f64,
    /// Disk radii of the bdp mode, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub radii: Option<Vec<f64>>,
    /// Also report the Christoffel symbols at the base point.
    #[arg(long)]
    pub christoffel: bool,
    /// Also report ds^2 of this displacement at the base point.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub dv: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GeodesicMethod {
    Closed,
    Numeric,
}

#[derive(Debug, Args)]
pub struct GeodesicArgs {
    #[command(flatten)]
    pub metric: MetricArgs,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    pub from: Vec<f64>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    pub to: Vec<f64>,
    #[arg(long, value_enum, default_value_t = GeodesicMethod::Closed)]
    pub method: GeodesicMethod,
    /// Solver tolerance of the numeric method.
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    /// Number of path points to report, endpoints included.
    #[arg(long, default_value_t = 0)]
    pub points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SpaceChoice {
    /// The exponential warped product at t = ln(2 - q), closed form.
    Warped,
    /// R^dim with the p-norm.
    Lp,
    /// A weighted tree read from --tree.
    Tree,
}

#[derive(Debug, Args)]
pub struct CatkArgs {
    #[arg(long, value_enum)]
    pub space: SpaceChoice,
    #[arg(long, allow_negative_numbers = true)]
    pub k: f64,
    /// Entropic index of the warped space.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub q: f64,
    /// Fiber dimension of the warped space.
    #[arg(long, default_value_t = 1)]
    pub n: usize,
    #[arg(long, default_value_t = 2.0)]
    pub p: f64,
    #[arg(long, default_value_t = 2)]
    pub dim: usize,
    /// Tree fixture: JSON adjacency list [[[neighbor, weight], ...], ...].
    #[arg(long)]
    pub tree: Option<PathBuf>,
    /// Side points to test; split into triangles of 3 x samples-per-side.
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
    #[arg(long, default_value_t = DEFAULT_SAMPLES_PER_SIDE)]
    pub samples_per_side: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_CAT_TOL)]
    pub tol: f64,
    /// Also run the counterexample search with the same budget.
    #[arg(long)]
    pub search: bool,
}

#[derive(Debug, Args)]
pub struct SuperstatArgs {
    #[arg(long)]
    pub q: f64,
    #[arg(long, default_value_t = 1.0)]
    pub beta0: f64,
    /// Energies, comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = [0.0, 0.1, 1.0, 10.0])]
    pub energy: Vec<f64>,
    #[arg(long, default_value_t = 1e-8)]
    pub quad_tol: f64,
    /// Inverse temperatures at which to report the chi-square density.
    #[arg(long, value_delimiter = ',')]
    pub beta: Option<Vec<f64>>,
}

/// Reads a probability vector from a JSON array or a single CSV column.
///
/// CSV input may contain `#` comments, blank lines and a non-numeric header
/// row. Entries are validated, not renormalized.
pub fn ingest_distribution(path: &Path, format: Option<InputFormat>) -> Result<DiscreteDistribution> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let format = format.unwrap_or_else(|| match path.extension().and_then(|e| e.to_str()) {
        Some(ext) if ext.eq_ignore_ascii_case("csv") => InputFormat::Csv,
        _ => InputFormat::Json,
    });
    let values = match format {
        InputFormat::Json => {
            serde_json::from_str::<Vec<f64>>(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?
        }
        InputFormat::Csv => parse_csv_column(&text).map_err(|e| match e {
            Error::Parse(m) => Error::Parse(format!("{}: {m}", path.display())),
            other => other,
        })?,
    };
    DiscreteDistribution::new(values).map_err(|e| match e {
        Error::Validation(m) => Error::Validation(format!("{}: {m}", path.display())),
        other => other,
    })
}

fn parse_csv_column(text: &str) -> Result<Vec<f64>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut values = Vec::new();
    let mut first = true;
    for record in reader.records() {
        let record = record.map_err(|e| Error::Parse(e.to_string()))?;
        let line = record.position().map_or(0, |p| p.line());
        if record.iter().all(str::is_empty) {
            continue;
        }
        if record.len() != 1 {
            return Err(Error::Parse(format!("line {line}: expected one field, found {}", record.len())));
        }
        let field = &record[0];
        match field.parse::<f64>() {
            Ok(v) => values.push(v),
            Err(_) if first => {}
            Err(_) => return Err(Error::Parse(format!("line {line}: field 1 is not a number: {field:?}"))),
        }
        first = false;
    }
    Ok(values)
}

/// Float text with 17 significant digits.
pub fn format_float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "NaN".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// Pretty JSON with every float at 17 significant digits.
struct ReportFormatter(PrettyFormatter<'static>);

impl Formatter for ReportFormatter {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        w.write_all(format_float(value).as_bytes())
    }
    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

/// Serializes a report body as schema-versioned JSON.
pub fn to_report_json<T: Serialize>(command: &str, body: &T) -> Result<String> {
    #[derive(Serialize)]
    struct Envelope<'a, T> {
        schema: u32,
        command: &'a str,
        #[serde(flatten)]
        body: &'a T,
    }
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, ReportFormatter(PrettyFormatter::new()));
    Envelope {
        schema: SCHEMA_VERSION,
        command,
        body,
    }
    .serialize(&mut ser)
    .map_err(|e| Error::Io(format!("serializing report: {e}")))?;
    out.push(b'\n');
    String::from_utf8(out).map_err(|e| Error::Io(e.to_string()))
}

enum Cell {
    F(f64),
    U(u64),
    S(String),
}

impl Cell {
    fn text(&self) -> String {
        match self {
            Cell::F(v) => format_float(*v),
            Cell::U(v) => v.to_string(),
            Cell::S(s) => s.clone(),
        }
    }
}

struct Table {
    header: Vec<String>,
    rows: Vec<Vec<Cell>>,
}

impl Table {
    fn new(header: &[&str]) -> Self {
        Table {
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io_err = |e: csv::Error| Error::Io(format!("writing CSV: {e}"));
        w.write_record(&self.header).map_err(io_err)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::text)).map_err(io_err)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
    }
}

/// A finished command: the JSON report, its CSV table and the exit code.
struct Output {
    json: String,
    table: Table,
    code: i32,
}

fn joined(v: &[f64]) -> String {
    v.iter().map(|x| format_float(*x)).collect::<Vec<_>>().join(";")
}

#[derive(Serialize)]
struct Composition {
    other_outcomes: usize,
    other_tsallis: f64,
    residual: f64,
}

#[derive(Serialize)]
struct EntropyReport {
    q: f64,
    outcomes: usize,
    tsallis: f64,
    bgs: f64,
    /// `None` when an outcome has probability zero.
    q_log_residual: Option<f64>,
    composition: Option<Composition>,
}

#[derive(Serialize)]
struct DensityEntropyReport {
    q: f64,
    density: &'static str,
    params: Vec<f64>,
    support: [f64; 2],
    quad_tol: f64,
    tsallis: f64,
}

fn run_density_entropy(a: &EntropyArgs, choice: DensityChoice) -> Result<Output> {
    let p = QParam::new(a.q)?;
    let (params, f) = choice.build(a.params.as_deref(), a.quad_tol)?;
    let (lo, hi) = f.support();
    let report = DensityEntropyReport {
        q: a.q,
        density: choice.name(),
        params,
        support: [lo, hi],
        quad_tol: a.quad_tol,
        tsallis: tsallis_continuous(p, &f, a.quad_tol)?,
    };
    let mut table = Table::new(&["q", "density", "params", "tsallis"]);
    table.rows.push(vec![
        Cell::F(report.q),
        Cell::S(report.density.into()),
        Cell::S(joined(&report.params)),
        Cell::F(report.tsallis),
    ]);
    Ok(Output {
        json: to_report_json("entropy", &report)?,
        table,
        code: EXIT_OK,
    })
}

fn run_entropy(a: &EntropyArgs) -> Result<Output> {
    let path = match (&a.dist, a.density) {
        (_, Some(choice)) => return run_density_entropy(a, choice),
        (Some(path), None) => path,
        (None, None) => return Err(Error::Parse("entropy needs --dist or --density".into())),
    };
    let p = QParam::new(a.q)?;
    let dist = ingest_distribution(path, a.input_format)?;
    let tsallis = tsallis_discrete(p, &dist)?;
    let q_log_residual = if dist.probs().contains(&0.0) {
        None
    } else {
        Some(q_log_representation_residual(p, &dist)?)
    };
    let composition = match &a.compose {
        Some(path) => {
            let other = ingest_distribution(path, a.input_format)?;
            Some(Composition {
                other_outcomes: other.len(),
                other_tsallis: tsallis_discrete(p, &other)?,
                residual: check_composition(p, &dist, &other)?,
            })
        }
        None => None,
    };
    let report = EntropyReport {
        q: a.q,
        outcomes: dist.len(),
        tsallis,
        bgs: bgs(&dist),
        q_log_residual,
        composition,
    };
    let mut table = Table::new(&["q", "outcomes", "tsallis", "bgs", "composition_residual"]);
    table.rows.push(vec![
        Cell::F(report.q),
        Cell::U(report.outcomes as u64),
        Cell::F(report.tsallis),
        Cell::F(report.bgs),
        report.composition.as_ref().map_or(Cell::S(String::new()), |c| Cell::F(c.residual)),
    ]);
    Ok(Output {
        json: to_report_json("entropy", &report)?,
        table,
        code: EXIT_OK,
    })
}

#[derive(Serialize)]
struct QevalReport {
    q: f64,
    op: &'static str,
    x: f64,
    y: Option<f64>,
    value: f64,
}

#[derive(Serialize)]
struct GroupReport {
    q: f64,
    op: &'static str,
    t: f64,
    g: Vec<f64>,
    h: Option<Vec<f64>>,
    value: Vec<f64>,
}

fn group_element(coords: &[f64], t: f64) -> Result<GroupElement> {
    match coords.split_first() {
        Some((&x0, y)) if !y.is_empty() => Ok(GroupElement::new(x0, y.to_vec(), t)),
        _ => Err(Error::domain("a group element needs x0 and at least one fiber coordinate")),
    }
}

fn run_group(a: &QevalArgs) -> Result<Output> {
    let p = QParam::new(a.q)?;
    let t = p.twist();
    let g_coords = a.g.clone().ok_or_else(|| Error::domain("group operations need --g"))?;
    let g = group_element(&g_coords, t)?;
    let need_h = || -> Result<GroupElement> {
        group_element(a.h.as_deref().ok_or_else(|| Error::domain("this operation needs --h"))?, t)
    };
    let result = match a.op {
        QOp::GroupCompose => g.compose(&need_h()?)?,
        QOp::GroupInverse => g.inverse(),
        QOp::GroupCommutator => g.commutator(&need_h()?)?,
        _ => unreachable!("scalar operation routed to the group evaluator"),
    };
    let mut value = vec![result.x0];
    value.extend(result.y);
    let h = if a.op == QOp::GroupInverse { None } else { a.h.clone() };
    let report = GroupReport {
        q: a.q,
        op: a.op.name(),
        t,
        g: g_coords,
        h,
        value,
    };
    let mut table = Table::new(&["q", "op", "g", "h", "value"]);
    table.rows.push(vec![
        Cell::F(a.q),
        Cell::S(report.op.into()),
        Cell::S(joined(&report.g)),
        Cell::S(report.h.as_deref().map_or(String::new(), joined)),
        Cell::S(joined(&report.value)),
    ]);
    Ok(Output {
        json: to_report_json("qeval", &report)?,
        table,
        code: EXIT_OK,
    })
}

fn run_qeval(a: &QevalArgs) -> Result<Output> {
    if a.op.is_group() {
        return run_group(a);
    }
    let p = QParam::new(a.q)?;
    let x = a.x.ok_or_else(|| Error::domain("this operation needs --x"))?;
    let need_y = || a.y.ok_or_else(|| Error::domain("this operation needs --y"));
    let value = match a.op {
        QOp::Tau => p.tau(x)?.value(),
        QOp::TauInv => p.tau_inv_value(x)?,
        QOp::Add => p.q_add_deformed(p.element(x)?, p.element(need_y()?)?)?.value(),
        QOp::Sub => p.q_sub(x, need_y()?)?,
        QOp::Mul => p.q_mul(p.element(x)?, p.element(need_y()?)?)?.value(),
        QOp::Div => p.q_div(p.element(x)?, p.element(need_y()?)?)?.value(),
        QOp::DeformedDistance => deformed_distance(p, x)?,
        QOp::QLog => q_log(p, x)?,
        QOp::GroupCompose | QOp::GroupInverse | QOp::GroupCommutator => unreachable!("handled above"),
    };
    let op = a.op.name();
    let report = QevalReport {
        q: a.q,
        op,
        x,
        y: a.y,
        value,
    };
    let mut table = Table::new(&["q", "op", "x", "y", "value"]);
    table.rows.push(vec![
        Cell::F(a.q),
        Cell::S(op.into()),
        Cell::F(x),
        a.y.map_or(Cell::S(String::new()), Cell::F),
        Cell::F(value),
    ]);
    Ok(Output {
        json: to_report_json("qeval", &report)?,
        table,
        code: EXIT_OK,
    })
}

#[derive(Serialize)]
struct CurvatureReport {
    q: f64,
    metric: MetricKind,
    mode: &'static str,
    at: Vec<f64>,
    plane: [usize; 2],
    curvature: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    bdp_samples: Option<Vec<BdpSample>>,
    /// `gamma[k][i][j]` by central differences.
    #[serde(skip_serializing_if = "Option::is_none")]
    christoffel: Option<Vec<Vec<Vec<f64>>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    line_element: Option<LineElement>,
}

#[derive(Serialize)]
struct LineElement {
    dv: Vec<f64>,
    ds2: f64,
}

fn basis(dim: usize, i: usize) -> Result<Vec<f64>> {
    if i >= dim {
        return Err(Error::domain(format!("plane axis {i} is out of range for dimension {dim}")));
    }
    let mut e = vec![0.0; dim];
    e[i] = 1.0;
    Ok(e)
}

fn run_curvature(a: &CurvatureArgs) -> Result<Output> {
    let metric = a.metric.build()?;
    let dim = metric.dim();
    let at = a.at.clone().unwrap_or_else(|| vec![0.0; dim]);
    let point = MetricPoint::new(at.clone());
    let [i, j] = [a.plane[0], a.plane[1]];
    if i == j {
        return Err(Error::domain("plane axes must differ"));
    }
    let (u, v) = (basis(dim, i)?, basis(dim, j)?);
    let mut bdp_samples = None;
    let (mode, curvature) = match a.mode {
        CurvatureMode::Analytic => {
            if at.len() != dim {
                return Err(Error::Shape {
                    expected: dim,
                    got: at.len(),
                });
            }
            let k = match metric.analytic_curvature()?.constant() {
                Some(k) => k,
                None => metric.analytic_curvature()?.at(at[0], (i, j))?,
            };
            ("analytic", k)
        }
        CurvatureMode::Numeric => ("numeric", sectional_curvature_numeric(&metric, &point, (&u, &v), a.step)?),
        CurvatureMode::Bdp => {
            let radii = a.radii.clone().unwrap_or_else(|| DEFAULT_BDP_RADII.to_vec());
            let est = bdp_curvature_estimate(&metric, &point, (&u, &v), &radii)?;
            bdp_samples = Some(est.samples);
            ("bdp", est.curvature)
        }
    };
    let mut table = Table::new(&["q", "mode", "at", "plane", "curvature"]);
    table.rows.push(vec![
        Cell::F(a.metric.q),
        Cell::S(mode.into()),
        Cell::S(joined(&at)),
        Cell::S(format!("{i};{j}")),
        Cell::F(curvature),
    ]);
    let christoffel_symbols = if a.christoffel {
        let c = christoffel(&metric, &point, a.step)?;
        let d = c.dim();
        Some((0..d).map(|k| (0..d).map(|i| (0..d).map(|j| c.get(k, i, j)).collect()).collect()).collect())
    } else {
        None
    };
    let line_element = match &a.dv {
        Some(dv) => Some(LineElement {
            dv: dv.clone(),
            ds2: metric.line_element(&point, dv)?,
        }),
        None => None,
    };
    let report = CurvatureReport {
        q: a.metric.q,
        metric: metric.kind(),
        mode,
        at,
        plane: [i, j],
        curvature,
        bdp_samples,
        christoffel: christoffel_symbols,
        line_element,
    };
    Ok(Output {
        json: to_report_json("curvature", &report)?,
        table,
        code: EXIT_OK,
    })
}

#[derive(Serialize)]
struct PathPoint {
    s: f64,
    point: Vec<f64>,
}

#[derive(Serialize)]
struct GeodesicReport {
    q: f64,
    metric: MetricKind,
    method: &'static str,
    from: Vec<f64>,
    to: Vec<f64>,
    distance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    residual: Option<f64>,
    path: Vec<PathPoint>,
}

fn run_geodesic(a: &GeodesicArgs) -> Result<Output> {
    let metric = a.metric.build()?;
    let (from, to) = (MetricPoint::new(a.from.clone()), MetricPoint::new(a.to.clone()));
    let fractions: Vec<f64> = match a.points {
        0 => Vec::new(),
        1 => vec![0.0],
        n => (0..n).map(|i| i as f64 / (n - 1) as f64).collect(),
    };
    let (method, distance, residual, path) = match a.method {
        GeodesicMethod::Closed => {
            let t = match metric.kind() {
                MetricKind::Exponential { t } => t,
                MetricKind::Flat => 0.0,
                _ => {
                    return Err(Error::Unsupported(
                        "the closed form covers the exponential metric only; use --method numeric".into(),
                    ))
                }
            };
            let d = geodesic_distance_closed(QParam::new(a.metric.q)?, &from, &to)?;
            let path = fractions
                .iter()
                .map(|&s| PathPoint {
                    s,
                    point: exponential_geodesic_point(t, &a.from, &a.to, s),
                })
                .collect();
            ("closed", d, None, path)
        }
        GeodesicMethod::Numeric => {
            let sol = solve_geodesic(&metric, &from, &to, a.tol)?;
            let mut path = Vec::with_capacity(fractions.len());
            for &s in &fractions {
                path.push(PathPoint { s, point: sol.point(s)? });
            }
            ("numeric", sol.length, Some(sol.residual), path)
        }
    };
    let mut table = Table::new(&["s", "point", "distance"]);
    if path.is_empty() {
        table.rows.push(vec![Cell::S(String::new()), Cell::S(String::new()), Cell::F(distance)]);
    }
    for p in &path {
        table.rows.push(vec![Cell::F(p.s), Cell::S(joined(&p.point)), Cell::F(distance)]);
    }
    let report = GeodesicReport {
        q: a.metric.q,
        metric: metric.kind(),
        method,
        from: a.from.clone(),
        to: a.to.clone(),
        distance,
        residual,
        path,
    };
    Ok(Output {
        json: to_report_json("geodesic", &report)?,
        table,
        code: EXIT_OK,
    })
}

#[derive(Serialize)]
struct CatkReport {
    #[serde(flatten)]
    report: CatReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    counterexample: Option<Option<Witness>>,
}

fn catk_on<S: GeodesicSpace>(space: &S, a: &CatkArgs) -> Result<CatkReport> {
    if a.samples_per_side == 0 {
        return Err(Error::domain("--samples-per-side must be >= 1"));
    }
    let per_triangle = 3 * a.samples_per_side;
    let triangles = a.samples.div_ceil(per_triangle).max(1);
    let report = cat_test(space, a.k, triangles, a.samples_per_side, a.seed, a.tol)?;
    let counterexample = if a.search {
        Some(counterexample_search(space, a.k, a.samples.max(1), a.seed)?)
    } else {
        None
    };
    Ok(CatkReport { report, counterexample })
}

fn run_catk(a: &CatkArgs) -> Result<Output> {
    let r = match a.space {
        SpaceChoice::Warped => {
            let space = WarpedHyperbolicSpace::from_q(QParam::new(a.q)?, a.n)?.with_sample_box(DEFAULT_SAMPLE_BOX)?;
            catk_on(&space, a)?
        }
        SpaceChoice::Lp => catk_on(&lp_space(a.dim, a.p)?, a)?,
        SpaceChoice::Tree => {
            let path = a.tree.as_ref().ok_or_else(|| Error::domain("--space tree needs --tree"))?;
            let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
            let tree = TreeSpace::from_json(&text).map_err(|e| match e {
                Error::Parse(m) => Error::Parse(format!("{}: {m}", path.display())),
                other => other,
            })?;
            catk_on(&tree, a)?
        }
    };
    let rep = &r.report;
    let verdict = match rep.verdict {
        Verdict::Pass => "pass",
        Verdict::Fail => "fail",
    };
    let mut table = Table::new(&[
        "k",
        "triangles",
        "samples",
        "tolerance",
        "seed",
        "verdict",
        "worst_margin",
        "witness_x",
        "witness_y",
        "witness_z",
        "witness_w",
        "witness_fraction",
    ]);
    let w = rep.witness.as_ref();
    let wcell = |f: fn(&Witness) -> Cell| w.map_or(Cell::S(String::new()), f);
    table.rows.push(vec![
        Cell::F(rep.k),
        Cell::U(rep.triangles as u64),
        Cell::U(rep.samples as u64),
        Cell::F(rep.tolerance),
        Cell::U(rep.seed),
        Cell::S(verdict.into()),
        Cell::F(rep.worst_margin),
        wcell(|w| Cell::S(joined(&w.x))),
        wcell(|w| Cell::S(joined(&w.y))),
        wcell(|w| Cell::S(joined(&w.z))),
        wcell(|w| Cell::S(joined(&w.w))),
        wcell(|w| Cell::F(w.fraction)),
    ]);
    let code = match rep.verdict {
        Verdict::Pass => EXIT_OK,
        Verdict::Fail => EXIT_CAT_FAIL,
    };
    Ok(Output {
        json: to_report_json("catk", &r)?,
        table,
        code,
    })
}

#[derive(Serialize)]
struct SuperstatRow {
    energy: f64,
    integral: f64,
    closed_form: f64,
    residual: f64,
}

#[derive(Serialize)]
struct SuperstatReport {
    q: f64,
    beta0: f64,
    quad_tol: f64,
    normalization: f64,
    mean_beta: f64,
    max_residual: f64,
    rows: Vec<SuperstatRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    density: Option<Vec<DensityPoint>>,
}

#[derive(Serialize)]
struct DensityPoint {
    beta: f64,
    f: f64,
}

fn run_superstat(a: &SuperstatArgs) -> Result<Output> {
    if a.energy.is_empty() {
        return Err(Error::domain("need at least one energy"));
    }
    let base = SuperstatParams::new(a.q, a.beta0, a.energy[0])?;
    let mut rows = Vec::with_capacity(a.energy.len());
    for &e in &a.energy {
        let check = laplace_transform(&SuperstatParams::new(a.q, a.beta0, e)?, a.quad_tol)?;
        rows.push(SuperstatRow {
            energy: e,
            integral: check.integral,
            closed_form: check.closed_form,
            residual: check.residual,
        });
    }
    let report = SuperstatReport {
        q: a.q,
        beta0: a.beta0,
        quad_tol: a.quad_tol,
        normalization: normalization(&base, a.quad_tol)?,
        mean_beta: mean_beta(&base, a.quad_tol)?,
        max_residual: rows.iter().map(|r| r.residual).fold(0.0, f64::max),
        rows,
        density: match &a.beta {
            Some(betas) => Some(
                betas
                    .iter()
                    .map(|&beta| Ok(DensityPoint { beta, f: chi2_density(&base, beta)? }))
                    .collect::<Result<_>>()?,
            ),
            None => None,
        },
    };
    let mut table = Table::new(&["q", "beta0", "energy", "integral", "closed_form", "residual"]);
    for r in &report.rows {
        table.rows.push(vec![
            Cell::F(a.q),
            Cell::F(a.beta0),
            Cell::F(r.energy),
            Cell::F(r.integral),
            Cell::F(r.closed_form),
            Cell::F(r.residual),
        ]);
    }
    Ok(Output {
        json: to_report_json("superstat", &report)?,
        table,
        code: EXIT_OK,
    })
}

fn destination(cli: &Cli) -> Option<PathBuf> {
    if let Some(p) = &cli.out {
        return Some(p.clone());
    }
    let dir = std::env::var_os(OUT_DIR_ENV).filter(|d| !d.is_empty())?;
    Some(PathBuf::from(dir).join(format!("{}.{}", cli.command.name(), cli.format.extension())))
}

/// Runs one parsed command and writes its report. Returns the exit code.
pub fn run(cli: &Cli) -> Result<i32> {
    let out = match &cli.command {
        Command::Entropy(a) => run_entropy(a)?,
        Command::Qeval(a) => run_qeval(a)?,
        Command::Curvature(a) => run_curvature(a)?,
        Command::Geodesic(a) => run_geodesic(a)?,
        Command::Catk(a) => run_catk(a)?,
        Command::Superstat(a) => run_superstat(a)?,
    };
    let text = match cli.format {
        OutputFormat::Json => out.json,
        OutputFormat::Csv => out.table.to_csv()?,
    };
    match destination(cli) {
        Some(path) => {
            if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                fs::create_dir_all(parent).map_err(|e| Error::Io(format!("{}: {e}", parent.display())))?;
            }
            fs::write(&path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        }
        None => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
        }
    }
    Ok(out.code)
}

/// Parses `args` (program name first), runs and reports errors on stderr.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_PARSE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
