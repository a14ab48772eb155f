//! Command-line front end: `analyze`, `curve`, `basin`, `orbit`, `examples`.
//!
//! Every setting can come from a flag or from a `key=value` file given with
//! `--config`; flags win. Outputs embed the resolved settings as
//! `# config: key=value` lines, and such a file is itself accepted by
//! `--config`, so a run can be reproduced from its output.

use crate::basins::{raster, BasinLabel};
use crate::classification::{
    classify_hyperbolic_ray, classify_nonhyperbolic, orient_into_q2, taylor_along_eigenvector, CaseId,
    ConditionDetail, DEFAULT_COEFF_TOL, DEFAULT_TAYLOR_STEP, MAX_TAYLOR_DEGREE,
};
use crate::curves::{
    check_boundary_endpoint_conditions, trace_stable_curve, trace_unstable_curve, BoundaryEndpointReport, CurveError,
    CurveOptions, MonotoneCurve, SideMode, SideOptions, DEFAULT_MARGIN_FACTOR, DEFAULT_SEED_RADIUS,
    DEFAULT_SIDE_MAX_ITER, ESCAPE_BOUND,
};
use crate::examples::{make_example, ExampleId};
use crate::expr::{map_from_exprs, parse};
use crate::fixedpoints::{
    check_invariant_curve_hypotheses, find_fixed_point, find_period_two, fixed_point_record, FixedPointError,
    FixedPointRecord, InvariantCurveHypotheses, PointKind, HYPERBOLICITY_TOL,
};
use crate::format::g17;
use crate::geometry::{Point2, Rect};
use crate::map::{check_competitive, check_o_condition, orbit, CompetitiveReport, OConditionReport, PlanarMap, StopRule, Termination};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::PathBuf;
use std::str::FromStr;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_EVALUATION: i32 = 3;
pub const EXIT_HYPOTHESIS: i32 = 4;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Evaluation(String),
    Hypothesis(String),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Evaluation(_) => EXIT_EVALUATION,
            CliError::Hypothesis(_) => EXIT_HYPOTHESIS,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Evaluation(m) | CliError::Hypothesis(m) => m,
        }
    }
}

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

#[derive(Parser, Debug)]
#[command(name = "compmap", version, about = "Invariant curves, separatrices and basins of planar competitive maps")]
struct Cli {
    #[command(subcommand)]
    command: Verb,
}

#[derive(Subcommand, Debug)]
enum Verb {
    /// Fixed points, eigen-data, hypothesis verdicts and local dynamics.
    Analyze(Flags),
    /// Trace the stable (default) or unstable curve of a fixed point to CSV.
    Curve(Flags),
    /// Rasterize the basin decomposition to PGM, CSV or JSON.
    Basin(Flags),
    /// Write the orbit of a start point as `n,x,y` rows.
    Orbit(Flags),
    /// List the built-in examples and their parameters.
    Examples(Flags),
}

#[derive(Args, Debug, Default)]
struct Flags {
    /// Built-in example id (see `examples`).
    #[arg(long)]
    example: Option<String>,
    /// Parameter binding `k=v`, repeatable.
    #[arg(long = "param", value_name = "K=V")]
    params: Vec<String>,
    /// First component as an expression in x, y and parameters.
    #[arg(long)]
    f: Option<String>,
    /// Second component as an expression in x, y and parameters.
    #[arg(long)]
    g: Option<String>,
    #[arg(long, value_name = "XLO,XHI,YLO,YHI", allow_hyphen_values = true)]
    window: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// csv, pgm or json.
    #[arg(long)]
    format: Option<String>,
    #[arg(long)]
    tol: Option<String>,
    #[arg(long = "max-iter")]
    max_iter: Option<String>,
    /// Settings file of `key=value` lines; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Fixed point (or Newton guess) `x,y`.
    #[arg(long, allow_hyphen_values = true)]
    fp: Option<String>,
    /// Newton start `x,y` for `analyze`, repeatable.
    #[arg(long = "guess", allow_hyphen_values = true)]
    guesses: Vec<String>,
    /// Trace the unstable curve instead of the stable one.
    #[arg(long)]
    unstable: bool,
    #[arg(long)]
    nx: Option<String>,
    #[arg(long)]
    ny: Option<String>,
    /// auto, quadrant or limit.
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    margin: Option<String>,
    /// Orbit start `x,y`.
    #[arg(long, allow_hyphen_values = true)]
    start: Option<String>,
    #[arg(long)]
    steps: Option<String>,
    #[arg(long = "seed-radius")]
    seed_radius: Option<String>,
    #[arg(long)]
    columns: Option<String>,
    /// Newton starts per side of the analysis grid.
    #[arg(long)]
    grid: Option<String>,
    /// Worker threads (does not affect results).
    #[arg(long)]
    threads: Option<String>,
}

/// Raw settings: key → values (several for `param` and `guess`).
type Raw = BTreeMap<String, Vec<String>>;

const MULTI_KEYS: [&str; 2] = ["param", "guess"];
const KNOWN_KEYS: [&str; 22] = [
    "example", "param", "f", "g", "window", "out", "format", "tol", "max-iter", "fp", "guess", "unstable", "nx", "ny",
    "mode", "margin", "start", "steps", "seed-radius", "columns", "grid", "threads",
];

impl Flags {
    fn raw(&self) -> Raw {
        let mut raw = Raw::new();
        let mut put = |k: &str, v: &Option<String>| {
            if let Some(v) = v {
                raw.insert(k.to_string(), vec![v.clone()]);
            }
        };
        put("example", &self.example);
        put("f", &self.f);
        put("g", &self.g);
        put("window", &self.window);
        put("out", &self.out.as_ref().map(|p| p.display().to_string()));
        put("format", &self.format);
        put("tol", &self.tol);
        put("max-iter", &self.max_iter);
        put("fp", &self.fp);
        put("nx", &self.nx);
        put("ny", &self.ny);
        put("mode", &self.mode);
        put("margin", &self.margin);
        put("start", &self.start);
        put("steps", &self.steps);
        put("seed-radius", &self.seed_radius);
        put("columns", &self.columns);
        put("grid", &self.grid);
        put("threads", &self.threads);
        if self.unstable {
            raw.insert("unstable".into(), vec!["true".into()]);
        }
        if !self.params.is_empty() {
            raw.insert("param".into(), self.params.clone());
        }
        if !self.guesses.is_empty() {
            raw.insert("guess".into(), self.guesses.clone());
        }
        raw
    }
}

/// Parses a settings file. Plain `key=value` lines and `# config:` echo
/// lines are read; other `#` lines are comments. A file holding echo lines
/// is an output of an earlier run, and its data lines are skipped.
pub fn parse_config_text(text: &str) -> Result<Vec<(String, String)>, String> {
    let echoed = text.lines().any(|l| l.starts_with("# config: "));
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        let body = if let Some(rest) = line.strip_prefix("# config: ") {
            rest
        } else if line.is_empty() || line.starts_with('#') || echoed {
            continue;
        } else {
            line
        };
        let (k, v) = body
            .split_once('=')
            .ok_or_else(|| format!("line {}: expected key=value, found `{body}`", n + 1))?;
        let k = k.trim();
        if !KNOWN_KEYS.contains(&k) {
            return Err(format!("line {}: unknown key `{k}`", n + 1));
        }
        out.push((k.to_string(), v.trim().to_string()));
    }
    Ok(out)
}

fn merge(file: Vec<(String, String)>, flags: Raw) -> Raw {
    let mut raw = Raw::new();
    for (k, v) in file {
        let slot = raw.entry(k.clone()).or_default();
        if MULTI_KEYS.contains(&k.as_str()) {
            slot.push(v);
        } else {
            *slot = vec![v];
        }
    }
    for (k, vs) in flags {
        if k == "param" {
            // flags override file bindings of the same name
            let slot = raw.entry(k).or_default();
            for v in vs {
                let name = v.split_once('=').map(|(n, _)| n.trim().to_string());
                slot.retain(|old| old.split_once('=').map(|(n, _)| n.trim().to_string()) != name);
                slot.push(v);
            }
        } else {
            raw.insert(k, vs);
        }
    }
    raw
}

fn parse_f64(key: &str, s: &str) -> Result<f64, CliError> {
    s.trim()
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| config_err(format!("--{key}: `{s}` is not a finite number")))
}

fn parse_usize(key: &str, s: &str) -> Result<usize, CliError> {
    s.trim()
        .parse::<usize>()
        .map_err(|_| config_err(format!("--{key}: `{s}` is not a nonnegative integer")))
}

fn parse_point(key: &str, s: &str) -> Result<Point2, CliError> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        return Err(config_err(format!("--{key}: expected `x,y`, found `{s}`")));
    }
    Ok(Point2::new(parse_f64(key, parts[0])?, parse_f64(key, parts[1])?))
}

fn parse_window(s: &str) -> Result<Rect, CliError> {
    let bad = || config_err(format!("malformed window `{s}`: expected XLO,XHI,YLO,YHI with XLO<XHI and YLO<YHI"));
    let v: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().ok().filter(|v| v.is_finite()))
        .collect::<Option<_>>()
        .ok_or_else(bad)?;
    if v.len() != 4 || !(v[0] < v[1] && v[2] < v[3]) {
        return Err(bad());
    }
    Rect::new(v[0], v[1], v[2], v[3]).ok_or_else(bad)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Pgm,
    Json,
}

impl Format {
    fn as_str(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Pgm => "pgm",
            Format::Json => "json",
        }
    }
}

impl FromStr for Format {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "csv" => Ok(Format::Csv),
            "pgm" => Ok(Format::Pgm),
            "json" => Ok(Format::Json),
            other => Err(config_err(format!("--format: unknown format `{other}` (csv, pgm, json)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MapSource {
    Example(ExampleId),
    Dsl { f: String, g: String },
}

/// Fully resolved settings of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub verb: &'static str,
    pub source: MapSource,
    pub params: BTreeMap<String, f64>,
    pub window: Rect,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub fp: Option<Point2>,
    pub guesses: Vec<Point2>,
    pub unstable: bool,
    pub nx: Option<usize>,
    pub ny: Option<usize>,
    pub mode: Option<SideMode>,
    pub margin: Option<f64>,
    pub start: Option<Point2>,
    pub steps: Option<usize>,
    pub seed_radius: Option<f64>,
    pub columns: Option<usize>,
    pub grid: Option<usize>,
    pub threads: Option<usize>,
}

impl RunConfig {
    /// `key=value` lines reproducing this run (output path and thread
    /// count excluded).
    pub fn echo(&self) -> Vec<String> {
        let mut lines = Vec::new();
        match &self.source {
            MapSource::Example(id) => lines.push(format!("example={}", id.as_str())),
            MapSource::Dsl { f, g } => {
                lines.push(format!("f={f}"));
                lines.push(format!("g={g}"));
            }
        }
        for (k, v) in &self.params {
            lines.push(format!("param={k}={}", g17(*v)));
        }
        let w = &self.window;
        lines.push(format!("window={},{},{},{}", g17(w.x_lo), g17(w.x_hi), g17(w.y_lo), g17(w.y_hi)));
        let pt = |p: &Point2| format!("{},{}", g17(p.x), g17(p.y));
        if let Some(f) = self.format {
            lines.push(format!("format={}", f.as_str()));
        }
        if let Some(v) = self.tol {
            lines.push(format!("tol={}", g17(v)));
        }
        if let Some(v) = self.max_iter {
            lines.push(format!("max-iter={v}"));
        }
        if let Some(p) = &self.fp {
            lines.push(format!("fp={}", pt(p)));
        }
        for p in &self.guesses {
            lines.push(format!("guess={}", pt(p)));
        }
        if self.unstable {
            lines.push("unstable=true".into());
        }
        for (k, v) in [("nx", self.nx), ("ny", self.ny), ("steps", self.steps), ("columns", self.columns), ("grid", self.grid)] {
            if let Some(v) = v {
                lines.push(format!("{k}={v}"));
            }
        }
        if let Some(m) = self.mode {
            lines.push(format!("mode={}", mode_name(m)));
        }
        if let Some(v) = self.margin {
            lines.push(format!("margin={}", g17(v)));
        }
        if let Some(p) = &self.start {
            lines.push(format!("start={}", pt(p)));
        }
        if let Some(v) = self.seed_radius {
            lines.push(format!("seed-radius={}", g17(v)));
        }
        lines
    }

    fn header(&self) -> Vec<String> {
        let mut h = vec![format!("compmap {}", self.verb)];
        h.extend(self.echo().into_iter().map(|l| format!("config: {l}")));
        h
    }
}

fn mode_name(m: SideMode) -> &'static str {
    match m {
        SideMode::QuadrantEscape => "quadrant",
        SideMode::LimitEquilibrium => "limit",
    }
}

struct Resolved {
    cfg: RunConfig,
    map: PlanarMap,
    system: Option<crate::examples::ExampleSystem>,
}

fn single<'a>(raw: &'a Raw, key: &str) -> Option<&'a str> {
    raw.get(key).and_then(|v| v.last()).map(String::as_str)
}

fn resolve(verb: &'static str, raw: &Raw) -> Result<Resolved, CliError> {
    let mut params = BTreeMap::new();
    for b in raw.get("param").into_iter().flatten() {
        let (k, v) = b
            .split_once('=')
            .ok_or_else(|| config_err(format!("--param: expected k=v, found `{b}`")))?;
        params.insert(k.trim().to_string(), parse_f64("param", v)?);
    }
    let example = single(raw, "example");
    let (f, g) = (single(raw, "f"), single(raw, "g"));
    let (source, map, system) = match (example, f, g) {
        (Some(id), None, None) => {
            let id = ExampleId::from_str(id).map_err(|e| config_err(e.to_string()))?;
            let sys = make_example(id, &params).map_err(|e| config_err(e.to_string()))?;
            params = sys.params.clone();
            (MapSource::Example(id), sys.map.clone(), Some(sys))
        }
        (None, Some(f), Some(g)) => {
            let fe = parse(f).map_err(|e| config_err(format!("--f: {e}")))?;
            let ge = parse(g).map_err(|e| config_err(format!("--g: {e}")))?;
            let map = map_from_exprs("dsl", &fe, &ge, params.clone(), Rect::whole_plane())
                .map_err(|e| config_err(e.to_string()))?;
            (
                MapSource::Dsl {
                    f: f.to_string(),
                    g: g.to_string(),
                },
                map,
                None,
            )
        }
        (None, None, None) if verb == "examples" => {
            let sys = make_example(ExampleId::Ex1, &BTreeMap::new()).map_err(|e| config_err(e.to_string()))?;
            (MapSource::Example(ExampleId::Ex1), sys.map.clone(), Some(sys))
        }
        _ => {
            return Err(config_err(
                "exactly one map source is required: --example, or both --f and --g",
            ))
        }
    };
    let window = match single(raw, "window") {
        Some(w) => parse_window(w)?,
        None => system
            .as_ref()
            .map(|s| s.default_window())
            .unwrap_or(Rect::new(0.0, 5.0, 0.0, 5.0).expect("valid")),
    };
    let opt_f64 = |k: &str| single(raw, k).map(|v| parse_f64(k, v)).transpose();
    let opt_usize = |k: &str| single(raw, k).map(|v| parse_usize(k, v)).transpose();
    let opt_point = |k: &str| single(raw, k).map(|v| parse_point(k, v)).transpose();
    let positive = |k: &str, v: Option<f64>| -> Result<Option<f64>, CliError> {
        match v {
            Some(v) if v <= 0.0 => Err(config_err(format!("--{k} must be positive"))),
            other => Ok(other),
        }
    };
    let mode = match single(raw, "mode").unwrap_or("auto") {
        "auto" => None,
        "quadrant" => Some(SideMode::QuadrantEscape),
        "limit" => Some(SideMode::LimitEquilibrium),
        other => return Err(config_err(format!("--mode: unknown mode `{other}` (auto, quadrant, limit)"))),
    };
    let unstable = match single(raw, "unstable") {
        None | Some("false") => false,
        Some("true") => true,
        Some(other) => return Err(config_err(format!("unstable: expected true or false, found `{other}`"))),
    };
    let cfg = RunConfig {
        verb,
        source,
        params,
        window,
        out: single(raw, "out").map(PathBuf::from),
        format: single(raw, "format").map(Format::from_str).transpose()?,
        tol: positive("tol", opt_f64("tol")?)?,
        max_iter: opt_usize("max-iter")?,
        fp: opt_point("fp")?,
        guesses: raw
            .get("guess")
            .into_iter()
            .flatten()
            .map(|g| parse_point("guess", g))
            .collect::<Result<_, _>>()?,
        unstable,
        nx: opt_usize("nx")?,
        ny: opt_usize("ny")?,
        mode,
        margin: opt_f64("margin")?,
        start: opt_point("start")?,
        steps: opt_usize("steps")?,
        seed_radius: positive("seed-radius", opt_f64("seed-radius")?)?,
        columns: opt_usize("columns")?,
        grid: opt_usize("grid")?,
        threads: opt_usize("threads")?,
    };
    if cfg.margin.is_some_and(|m| m < 0.0) {
        return Err(config_err("--margin must be nonnegative"));
    }
    Ok(Resolved { cfg, map, system })
}

/// Runs the CLI on `args` (program name first) and returns the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK {
                write!(stdout, "{text}")
            } else {
                write!(stderr, "{text}")
            };
            return code;
        }
    };
    let (verb, flags) = match &cli.command {
        Verb::Analyze(f) => ("analyze", f),
        Verb::Curve(f) => ("curve", f),
        Verb::Basin(f) => ("basin", f),
        Verb::Orbit(f) => ("orbit", f),
        Verb::Examples(f) => ("examples", f),
    };
    match execute(verb, flags, stdout) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(stderr, "error: {}", e.message());
            e.code()
        }
    }
}

fn execute(verb: &'static str, flags: &Flags, stdout: &mut dyn Write) -> Result<(), CliError> {
    let file = match &flags.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| config_err(format!("--config {}: {e}", path.display())))?;
            parse_config_text(&text).map_err(|e| config_err(format!("--config {}: {e}", path.display())))?
        }
        None => Vec::new(),
    };
    let raw = merge(file, flags.raw());
    let resolved = resolve(verb, &raw)?;
    let pool = {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(n) = resolved.cfg.threads {
            b = b.num_threads(n);
        }
        b.build().map_err(|e| config_err(format!("--threads: {e}")))?
    };
    let mut buf: Vec<u8> = Vec::new();
    let result = pool.install(|| match verb {
        "analyze" => cmd_analyze(resolved, &mut buf),
        "curve" => cmd_curve(resolved, &mut buf),
        "basin" => cmd_basin(resolved, &mut buf),
        "orbit" => cmd_orbit(resolved, &mut buf),
        _ => cmd_examples(&mut buf),
    });
    stdout.write_all(&buf).map_err(io_err)?;
    result
}

fn io_err(e: std::io::Error) -> CliError {
    config_err(format!("cannot write output: {e}"))
}

/// Writes `body` to `--out`, or to stdout when absent.
fn emit(cfg: &RunConfig, body: &str, stdout: &mut dyn Write) -> Result<bool, CliError> {
    match &cfg.out {
        Some(path) => {
            std::fs::write(path, body).map_err(|e| config_err(format!("cannot write {}: {e}", path.display())))?;
            Ok(true)
        }
        None => {
            stdout.write_all(body.as_bytes()).map_err(io_err)?;
            Ok(false)
        }
    }
}

fn side_mode(r: &Resolved) -> SideMode {
    r.cfg.mode.unwrap_or(match &r.system {
        Some(s) if s.id.has_continuum() => SideMode::LimitEquilibrium,
        _ => SideMode::QuadrantEscape,
    })
}

fn fixed_point_error(e: FixedPointError) -> CliError {
    match e {
        FixedPointError::Map(m) => CliError::Evaluation(format!("map evaluation failed: {m}")),
        other => CliError::Hypothesis(format!("fixed point not resolved: {other}")),
    }
}

/// The fixed point of a run: `--fp` refined by Newton unless already fixed
/// to roundoff, else the example's default.
fn resolve_fixed_point(r: &Resolved) -> Result<FixedPointRecord, CliError> {
    let guess = match (r.cfg.fp, &r.system) {
        (Some(p), _) => p,
        (None, Some(sys)) => sys
            .default_fixed_point()
            .ok_or_else(|| config_err("this example has no default fixed point; pass --fp"))?,
        (None, None) => return Err(config_err("--fp x,y is required for a map given by --f/--g")),
    };
    let exact = r.map.evaluate(guess).map(|t| t.dist(guess) <= 1e-10).unwrap_or(false);
    if exact {
        fixed_point_record(&r.map, guess).map_err(fixed_point_error)
    } else {
        find_fixed_point(&r.map, guess).map_err(fixed_point_error)
    }
}

#[derive(Debug, Clone, Serialize)]
struct LocalReport {
    path: &'static str,
    case_id: CaseId,
    case: Option<&'static str>,
    ell: Option<usize>,
    leading: Option<Point2>,
    conditions: ConditionDetail,
    coefficients: Vec<Point2>,
    description: &'static str,
    warnings: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
struct PointReport {
    record: FixedPointRecord,
    hypotheses: InvariantCurveHypotheses,
    boundary_endpoints: Option<BoundaryEndpointReport>,
    local: Option<LocalReport>,
    note: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
struct AnalyzeReport {
    map: String,
    params: BTreeMap<String, f64>,
    window: Rect,
    competitive: CompetitiveReport,
    o_condition: OConditionReport,
    points: Vec<PointReport>,
    starts: usize,
    evaluation_failures: usize,
}

fn local_report(map: &PlanarMap, rec: &FixedPointRecord) -> Option<LocalReport> {
    let e = &rec.eigen;
    if !e.real_distinct {
        return None;
    }
    let t2;
    let m = if rec.kind == PointKind::PeriodTwo {
        t2 = map.second_iterate();
        &t2
    } else {
        map
    };
    let near_one = |v: f64| (v - 1.0).abs() <= HYPERBOLICITY_TOL;
    let center = if near_one(e.mu) {
        e.v_mu
    } else if near_one(e.lambda) {
        e.v_lambda
    } else {
        None
    };
    if let Some(v) = center {
        let ray = taylor_along_eigenvector(m, rec.location, orient_into_q2(v), MAX_TAYLOR_DEGREE, DEFAULT_TAYLOR_STEP).ok()?;
        let verdict = classify_nonhyperbolic(&ray, DEFAULT_COEFF_TOL);
        return Some(LocalReport {
            path: "nonhyperbolic",
            case_id: verdict.case_id,
            case: verdict.case_id.roman(),
            ell: verdict.ell,
            leading: verdict.leading,
            conditions: verdict.detail,
            coefficients: ray.coeffs.clone(),
            description: verdict.case_id.describe(),
            warnings: ray.warnings.clone(),
        });
    }
    let v = e.v_mu?;
    let verdict = classify_hyperbolic_ray(e.mu, v).ok()?;
    Some(LocalReport {
        path: "hyperbolic",
        case_id: verdict.case_id,
        case: None,
        ell: None,
        leading: None,
        conditions: verdict.detail,
        coefficients: Vec::new(),
        description: verdict.case_id.describe(),
        warnings: Vec::new(),
    })
}

fn push_unique(records: &mut Vec<FixedPointRecord>, r: FixedPointRecord) {
    if records.iter().all(|q| q.location.dist(r.location) > 1e-6) {
        records.push(r);
    }
}

fn cmd_analyze(r: Resolved, stdout: &mut dyn Write) -> Result<(), CliError> {
    let cfg = &r.cfg;
    let w = cfg.window;
    let mut starts: Vec<(Point2, PointKind)> = cfg.guesses.iter().map(|g| (*g, PointKind::Fixed)).collect();
    if starts.is_empty() {
        if let Some(sys) = &r.system {
            starts.extend(sys.fixtures.iter().map(|f| (f.point, f.kind)));
        }
    }
    if starts.is_empty() || cfg.grid.is_some() {
        let n = cfg.grid.unwrap_or(6).max(1);
        starts.extend(w.cell_centers(n, n).into_iter().map(|p| (p, PointKind::Fixed)));
    }
    let mut records = Vec::new();
    let mut failures = 0;
    for (p, kind) in &starts {
        let exact = *kind == PointKind::Fixed && r.map.evaluate(*p).is_ok_and(|t| t.dist(*p) <= 1e-10);
        let found = match kind {
            PointKind::Fixed if exact => fixed_point_record(&r.map, *p),
            PointKind::Fixed => find_fixed_point(&r.map, *p),
            PointKind::PeriodTwo => find_period_two(&r.map, *p),
        };
        match found {
            Ok(rec) => push_unique(&mut records, rec),
            Err(FixedPointError::Map(_)) => failures += 1,
            Err(_) => {}
        }
    }
    if records.is_empty() && failures == starts.len() {
        return Err(CliError::Evaluation("map evaluation failed at every Newton start".into()));
    }
    let points: Vec<PointReport> = records
        .iter()
        .map(|rec| {
            let hypotheses = check_invariant_curve_hypotheses(&r.map, rec, &w);
            let boundary_endpoints = (rec.kind == PointKind::Fixed && hypotheses.all())
                .then(|| check_boundary_endpoint_conditions(&r.map, rec, &w, 6).ok())
                .flatten();
            let note = r.system.as_ref().and_then(|s| {
                s.fixtures
                    .iter()
                    .find(|f| f.point.dist(rec.location) < 1e-6)
                    .map(|f| f.note.clone())
            });
            PointReport {
                record: *rec,
                hypotheses,
                boundary_endpoints,
                local: local_report(&r.map, rec),
                note,
            }
        })
        .collect();
    let report = AnalyzeReport {
        map: r.map.name().to_string(),
        params: cfg.params.clone(),
        window: w,
        competitive: check_competitive(&r.map, &w, 400),
        o_condition: check_o_condition(&r.map, &w, 400),
        points,
        starts: starts.len(),
        evaluation_failures: failures,
    };
    if cfg.format == Some(Format::Json) {
        let body = serde_json::to_string_pretty(&report).expect("serializable") + "\n";
        emit(cfg, &body, stdout)?;
        return Ok(());
    }
    let text = analyze_text(&report, cfg);
    emit(cfg, &text, stdout)?;
    Ok(())
}

fn analyze_text(rep: &AnalyzeReport, cfg: &RunConfig) -> String {
    let mut s = String::new();
    for h in cfg.header() {
        let _ = writeln!(s, "# {h}");
    }
    let _ = writeln!(s, "map {} on window {}", rep.map, rep.window);
    let c = &rep.competitive;
    let _ = writeln!(
        s,
        "competitive: {} (strongly: {}) over {} samples",
        c.competitive, c.strongly, c.samples
    );
    let o = &rep.o_condition;
    let _ = writeln!(
        s,
        "order condition: {:?} (det J in [{}, {}], {} injectivity collisions in {} pairs)",
        o.verdict,
        g17(o.min_det),
        g17(o.max_det),
        o.collisions,
        o.pairs
    );
    let _ = writeln!(s, "{} points from {} Newton starts", rep.points.len(), rep.starts);
    for (k, p) in rep.points.iter().enumerate() {
        let rec = &p.record;
        let kind = match rec.kind {
            PointKind::Fixed => "fixed point",
            PointKind::PeriodTwo => "period-two point",
        };
        let _ = writeln!(s, "\n[{}] {kind} {}", k + 1, rec.location);
        if let Some(partner) = rec.partner {
            let _ = writeln!(s, "  partner: {partner}");
        }
        if let Some(note) = &p.note {
            let _ = writeln!(s, "  note: {note}");
        }
        let _ = writeln!(s, "  residual: {}", g17(rec.residual));
        let e = &rec.eigen;
        if e.is_complex() {
            let _ = writeln!(s, "  eigenvalues: {} ± {}i", g17(e.lambda), g17(e.imag));
        } else {
            let _ = writeln!(s, "  eigenvalues: lambda = {}, mu = {}", g17(e.lambda), g17(e.mu));
        }
        if let (Some(vl), Some(vm)) = (e.v_lambda, e.v_mu) {
            let _ = writeln!(s, "  eigenvectors: v_lambda = {vl}, v_mu = {vm}");
        }
        let _ = writeln!(s, "  classification: {}", stability_name(rec));
        match p.hypotheses.first_failure() {
            None => {
                let _ = writeln!(s, "  invariant curve hypotheses: all hold ({} samples of delta)", p.hypotheses.delta_samples);
            }
            Some(f) => {
                let _ = writeln!(s, "  invariant curve hypotheses: failed ({f})");
            }
        }
        if let Some(b) = &p.boundary_endpoints {
            for (name, v) in [("i", &b.i), ("ii", &b.ii), ("iii", &b.iii)] {
                let _ = writeln!(
                    s,
                    "  boundary endpoint condition {name}: {} ({})",
                    if v.holds { "holds" } else { "not shown" },
                    v.reason
                );
            }
        }
        match &p.local {
            Some(l) => {
                let case = l.case.map(|c| format!(" (case {c})")).unwrap_or_default();
                let _ = writeln!(s, "  local dynamics: {} {}{case}", l.path, l.case_id);
                if let (Some(ell), Some(lead)) = (l.ell, l.leading) {
                    let _ = writeln!(s, "    ell = {ell}, (c, d) = ({}, {})", g17(lead.x), g17(lead.y));
                }
                let _ = writeln!(s, "    {}", l.description);
                for w in &l.warnings {
                    let _ = writeln!(s, "    warning: {w}");
                }
            }
            None => {
                let _ = writeln!(s, "  local dynamics: not applicable");
            }
        }
    }
    s
}

fn stability_name(rec: &FixedPointRecord) -> &'static str {
    use crate::fixedpoints::Stability::*;
    match rec.classification {
        Attractor => "attractor",
        Repeller => "repeller",
        Saddle => "saddle",
        Nonhyperbolic => "nonhyperbolic",
        Complex => "complex",
    }
}

fn curve_csv(curve: &MonotoneCurve, cfg: &RunConfig) -> String {
    let mut s = String::new();
    for h in cfg.header() {
        let _ = writeln!(s, "# {h}");
    }
    s.push_str("x,y\n");
    for v in &curve.vertices {
        let _ = writeln!(s, "{},{}", g17(v.x), g17(v.y));
    }
    s
}

fn curve_error(e: CurveError) -> CliError {
    match e {
        CurveError::Window(_) => CliError::Config(e.to_string()),
        other => CliError::Hypothesis(other.to_string()),
    }
}

pub const DEFAULT_UNSTABLE_STEPS: usize = 5_000_000;

fn cmd_curve(mut r: Resolved, stdout: &mut dyn Write) -> Result<(), CliError> {
    let fp = resolve_fixed_point(&r)?;
    let w = r.cfg.window;
    let curve = if r.cfg.unstable {
        let steps = *r.cfg.steps.get_or_insert(DEFAULT_UNSTABLE_STEPS);
        let radius = *r.cfg.seed_radius.get_or_insert(DEFAULT_SEED_RADIUS);
        r.cfg.fp = Some(fp.location);
        trace_unstable_curve(&r.map, &fp, steps, radius, &w).map_err(curve_error)?
    } else {
        let mode = side_mode(&r);
        r.cfg.mode = Some(mode);
        let mut opts = CurveOptions::new(mode);
        opts.curve_tol = *r.cfg.tol.get_or_insert(opts.curve_tol);
        opts.columns = (*r.cfg.columns.get_or_insert(opts.columns)).max(2);
        opts.side.max_iter = *r.cfg.max_iter.get_or_insert(opts.side.max_iter);
        r.cfg.fp = Some(fp.location);
        trace_stable_curve(&r.map, &fp, &w, &opts).map_err(curve_error)?.curve
    };
    let format = *r.cfg.format.get_or_insert(Format::Csv);
    let body = match format {
        Format::Csv => curve_csv(&curve, &r.cfg),
        Format::Json => serde_json::to_string_pretty(&curve).expect("serializable") + "\n",
        Format::Pgm => return Err(config_err("curve output supports csv or json")),
    };
    let to_file = emit(&r.cfg, &body, stdout)?;
    if to_file {
        let mono = match curve.check_monotone() {
            Ok(()) => "certified on all vertices".to_string(),
            Err(i) => format!("violated at vertex {i}"),
        };
        let _ = writeln!(
            stdout,
            "{} vertices, {:?}, monotonicity {mono}\nleft endpoint: {}\nright endpoint: {}",
            curve.vertices.len(),
            curve.monotonicity,
            curve.endpoint_left,
            curve.endpoint_right
        );
    }
    Ok(())
}

fn cmd_basin(mut r: Resolved, stdout: &mut dyn Write) -> Result<(), CliError> {
    let fp = resolve_fixed_point(&r)?;
    let w = r.cfg.window;
    let mode = side_mode(&r);
    r.cfg.mode = Some(mode);
    r.cfg.fp = Some(fp.location);
    let nx = *r.cfg.nx.get_or_insert(128);
    let ny = *r.cfg.ny.get_or_insert(128);
    let mut opts = SideOptions::for_window(&w, mode);
    opts.epsilon_margin = *r.cfg.margin.get_or_insert(DEFAULT_MARGIN_FACTOR * w.diagonal());
    opts.max_iter = *r.cfg.max_iter.get_or_insert(DEFAULT_SIDE_MAX_ITER);
    opts.convergence_tol = *r.cfg.tol.get_or_insert(opts.convergence_tol);
    let format = *r.cfg.format.get_or_insert(Format::Pgm);
    let ras = raster(&r.map, fp.location, &w, nx, ny, &opts).map_err(|e| config_err(e.to_string()))?;
    let header = r.cfg.header();
    let body = match format {
        Format::Pgm => ras.to_pgm(&header),
        Format::Csv => ras.to_csv(&header),
        Format::Json => serde_json::to_string(&ras).expect("serializable") + "\n",
    };
    let to_file = emit(&r.cfg, &body, stdout)?;
    let census = ras.census();
    let line = BasinLabel::ALL
        .iter()
        .map(|l| format!("{}={}", l.as_str(), census[l]))
        .collect::<Vec<_>>()
        .join(" ");
    if to_file {
        let _ = writeln!(stdout, "census: {line}");
    }
    if census[&BasinLabel::Singular] * 2 > ras.labels.len() {
        return Err(CliError::Evaluation(format!("map evaluation failed in most cells ({line})")));
    }
    Ok(())
}

fn cmd_orbit(mut r: Resolved, stdout: &mut dyn Write) -> Result<(), CliError> {
    let start = r.cfg.start.ok_or_else(|| config_err("--start x,y is required"))?;
    let max_iter = *r.cfg.max_iter.get_or_insert(100);
    let stop = StopRule {
        convergence_tol: r.cfg.tol,
        escape_bound: Some(ESCAPE_BOUND),
        ..StopRule::default()
    };
    r.cfg.format = Some(Format::Csv);
    let o = orbit(&r.map, start, max_iter, &stop);
    if o.points.len() <= 1 && matches!(o.terminated_by, Termination::Singularity) {
        return Err(CliError::Evaluation(format!("map evaluation failed at the start point {start}")));
    }
    let mut s = String::new();
    for h in r.cfg.header() {
        let _ = writeln!(s, "# {h}");
    }
    let _ = writeln!(s, "# terminated by: {:?}", o.terminated_by);
    s.push_str("n,x,y\n");
    for (n, p) in o.points.iter().enumerate() {
        let _ = writeln!(s, "{n},{},{}", g17(p.x), g17(p.y));
    }
    emit(&r.cfg, &s, stdout)?;
    Ok(())
}

fn cmd_examples(stdout: &mut dyn Write) -> Result<(), CliError> {
    let mut s = String::new();
    for id in ExampleId::ALL {
        let params = id
            .default_params()
            .iter()
            .map(|(k, v)| format!("{k}={}", g17(*v)))
            .collect::<Vec<_>>()
            .join(" ");
        let params = if params.is_empty() { "none".to_string() } else { params };
        let _ = writeln!(s, "{:<7} {}\n        params: {params}", id.as_str(), id.description());
    }
    stdout.write_all(s.as_bytes()).map_err(io_err)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_args(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(std::iter::once("compmap").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn config_text_parsing() {
        let cfg = parse_config_text("example=ex4\n# comment\nparam=B1=1\n\nparam=beta1=3\n").unwrap();
        assert_eq!(cfg.len(), 3);
        assert!(parse_config_text("bogus=1").is_err());
        assert!(parse_config_text("no equals sign").is_err());
        let echoed = parse_config_text("# compmap curve\n# config: example=ex1\nx,y\n0,1\n").unwrap();
        assert_eq!(echoed, vec![("example".to_string(), "ex1".to_string())]);
    }

    #[test]
    fn flags_override_file() {
        let file = parse_config_text("example=ex1\nparam=a=3\nnx=4").unwrap();
        let flags = Flags {
            params: vec!["a=2".into()],
            nx: Some("8".into()),
            ..Flags::default()
        };
        let raw = merge(file, flags.raw());
        assert_eq!(raw["param"], vec!["a=2".to_string()]);
        assert_eq!(raw["nx"], vec!["8".to_string()]);
        assert_eq!(raw["example"], vec!["ex1".to_string()]);
    }

    #[test]
    fn exit_codes() {
        assert_eq!(run_args(&["analyze", "--example", "ex1", "--param", "a=0.5"]).0, EXIT_CONFIG);
        assert_eq!(run_args(&["analyze"]).0, EXIT_CONFIG);
        assert_eq!(run_args(&["analyze", "--example", "ex1", "--f", "x", "--g", "y"]).0, EXIT_CONFIG);
        assert_eq!(run_args(&["curve", "--example", "ex1", "--window", "0,5,6"]).0, EXIT_CONFIG);
        assert_eq!(run_args(&["curve", "--example", "ex1", "--window", "5,0,0,6"]).0, EXIT_CONFIG);
        assert_eq!(run_args(&["analyze", "--f", "x*(", "--g", "y"]).0, EXIT_CONFIG);
        assert_eq!(run_args(&["bogus"]).0, EXIT_CONFIG);
        assert_eq!(run_args(&["--help"]).0, EXIT_OK);
        assert_eq!(run_args(&["orbit", "--example", "ex4", "--start", "0,0"]).0, EXIT_EVALUATION);
        let (code, _, err) = run_args(&["curve", "--example", "ex3_T", "--fp", "2,2"]);
        assert_eq!(code, EXIT_HYPOTHESIS, "{err}");
        assert!(err.contains("eigenvalues_ok"), "{err}");
    }

    #[test]
    fn constraint_message() {
        let (_, _, err) = run_args(&["analyze", "--example", "ex1", "--param", "a=0.5"]);
        assert!(err.contains('a'), "{err}");
    }

    #[test]
    fn examples_lists_all() {
        let (code, out, _) = run_args(&["examples"]);
        assert_eq!(code, 0);
        for id in ExampleId::ALL {
            assert!(out.contains(id.as_str()));
        }
    }

    #[test]
    fn orbit_of_fixed_point_is_constant() {
        let (code, out, _) = run_args(&["orbit", "--example", "ex4", "--start", "2,1", "--max-iter", "5"]);
        assert_eq!(code, 0);
        let rows: Vec<&str> = out.lines().filter(|l| !l.starts_with('#')).skip(1).collect();
        assert_eq!(rows.len(), 6);
        assert!(rows.iter().all(|r| r.ends_with(",2,1")));
    }

    #[test]
    fn ex4_analysis() {
        let (code, out, err) = run_args(&[
            "analyze", "--example", "ex4", "--param", "B1=1", "--param", "gamma2=1", "--param", "alpha2=1", "--param",
            "beta1=3",
        ]);
        assert_eq!(code, 0, "{err}");
        assert!(out.contains("fixed point (2, 1)"), "{out}");
        assert!(out.contains("classification: nonhyperbolic"));
        assert!(out.contains("even_se_negative (case iii)"), "{out}");
    }
}
