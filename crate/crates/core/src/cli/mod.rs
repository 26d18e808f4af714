//! The `predopt` command line. Exit codes: 0 success, 1 domain violation
//! (invalid instance, infeasible schedule, degenerate fit), 2 input error.

mod manifest;

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use crate::correction::{
    apply_correction, fit_gamma_epsilon, linear_correction, FitPair, LinearCorrection, Normalization,
    PerturbationSpec,
};
use crate::evaluator::{check_feasibility, total_cost, Schedule};
use crate::metrics::{pearson, ErrorReport};
use crate::ppoi::{parse_instance, validate_instance, Instance};
use crate::scheduler::{optimize, BatteryPolicy, OptimizerConfig, SchedulerError};
use crate::series::{
    descriptive_stats, expand_prices, load_price_csv, load_series_csv, net_load, read_rows, Calendar, NetLoadSeries,
    PriceSeries, RawSeries,
};

pub use manifest::{parse_month, CalendarSpec, CorrectionManifest, ForecastCost, RunManifest};

#[derive(Debug, Parser)]
#[command(name = "predopt", version, about = "Predict-and-optimise energy scheduling")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse and validate an instance file.
    Parse {
        #[arg(long)]
        instance: PathBuf,
    },
    /// Descriptive statistics of input series.
    Stats(StatsArgs),
    /// Forecast error report of a forecast against the actual series.
    Metrics(MetricsArgs),
    /// Scale every value of a series by (1 + factor).
    Perturb(PerturbArgs),
    /// Build a schedule for a forecast.
    Optimize(OptimizeArgs),
    /// Cost of a schedule against a base-load series.
    Evaluate(EvaluateArgs),
    /// Fit the asymmetric cost model to forecasts and their realised costs.
    FitCorrection(FitArgs),
    /// Apply a linear correction to a forecast.
    Correct(CorrectArgs),
    /// Correlate error metrics with cost across evaluated runs.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct CalendarArgs {
    /// Calendar month, YYYY-MM.
    #[arg(long, conflicts_with_all = ["start", "days"])]
    pub month: Option<String>,
    /// First day, YYYY-MM-DD (with --days).
    #[arg(long, requires = "days")]
    pub start: Option<chrono::NaiveDate>,
    #[arg(long, requires = "start")]
    pub days: Option<usize>,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[arg(long, num_args = 1..)]
    pub buildings: Vec<PathBuf>,
    #[arg(long, num_args = 1..)]
    pub solars: Vec<PathBuf>,
    #[arg(long)]
    pub actual: Option<PathBuf>,
    #[arg(long)]
    pub forecast: Option<PathBuf>,
    /// Half-hourly price series.
    #[arg(long)]
    pub prices: Option<PathBuf>,
    #[command(flatten)]
    pub calendar: CalendarArgs,
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    #[arg(long)]
    pub actual: PathBuf,
    #[arg(long)]
    pub forecast: PathBuf,
    /// History preceding the actual series, for MASE.
    #[arg(long)]
    pub train: Option<PathBuf>,
    #[arg(long, default_value_t = 2688)]
    pub season: usize,
    /// Also write metrics.json here.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub calendar: CalendarArgs,
}

#[derive(Debug, Args)]
pub struct PerturbArgs {
    #[arg(long)]
    pub actual: PathBuf,
    #[arg(long, allow_hyphen_values = true)]
    pub factor: f64,
    /// Largest allowed |factor|.
    #[arg(long, default_value_t = 0.5)]
    pub limit: f64,
    /// Output CSV file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OptimizeArgs {
    /// JSON run manifest; flags given alongside override its fields.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(long)]
    pub instance: Option<PathBuf>,
    #[arg(long, num_args = 1..)]
    pub buildings: Vec<PathBuf>,
    #[arg(long, num_args = 1..)]
    pub solars: Vec<PathBuf>,
    /// Net-load forecast, used instead of buildings minus solars.
    #[arg(long)]
    pub forecast: Option<PathBuf>,
    /// Realised net load; adds the actual cost to the run report.
    #[arg(long)]
    pub actual: Option<PathBuf>,
    #[arg(long)]
    pub prices: Option<PathBuf>,
    #[arg(long)]
    pub policy: Option<BatteryPolicy>,
    #[arg(long)]
    pub warm_starts: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub iters: Option<usize>,
    /// Directory for schedule.json and run_report.json.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub calendar: CalendarArgs,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub instance: PathBuf,
    #[arg(long)]
    pub schedule: PathBuf,
    /// Net load to evaluate against.
    #[arg(long)]
    pub actual: Option<PathBuf>,
    #[arg(long, num_args = 1..)]
    pub buildings: Vec<PathBuf>,
    #[arg(long, num_args = 1..)]
    pub solars: Vec<PathBuf>,
    #[arg(long)]
    pub prices: PathBuf,
    /// The forecast the schedule was built on; adds its error report.
    #[arg(long)]
    pub forecast: Option<PathBuf>,
    /// Also check the battery rules of this policy.
    #[arg(long)]
    pub policy: Option<BatteryPolicy>,
    /// Label stored in evaluation.json; defaults to the output directory name.
    #[arg(long)]
    pub name: Option<String>,
    /// Directory for evaluation.json.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub calendar: CalendarArgs,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Directory for correction.json.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CorrectArgs {
    #[arg(long)]
    pub forecast: PathBuf,
    /// JSON with `alpha` and `beta` (e.g. the output of fit-correction).
    #[arg(long, required_unless_present_any = ["alpha", "beta"])]
    pub params: Option<PathBuf>,
    #[arg(long, allow_hyphen_values = true, conflicts_with = "params")]
    pub alpha: Option<f64>,
    #[arg(long, allow_hyphen_values = true, conflicts_with = "params")]
    pub beta: Option<f64>,
    /// Output CSV file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Run directories, each holding an evaluation.json with a metrics entry.
    #[arg(long, num_args = 1.., required = true)]
    pub runs: Vec<PathBuf>,
    /// Directory for report.json and report.csv.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug)]
enum Failure {
    Input(anyhow::Error),
    Domain { message: String, detail: Option<serde_json::Value> },
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Input(e.into())
    }
}

fn domain(message: impl Into<String>, detail: Option<serde_json::Value>) -> Failure {
    Failure::Domain { message: message.into(), detail }
}

type CmdResult = Result<(), Failure>;

/// Runs the command line and returns the process exit code.
pub fn run<I, A>(args: I) -> i32
where
    I: IntoIterator<Item = A>,
    A: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(Failure::Input(e)) => {
            eprintln!("error: {e:#}");
            2
        }
        Err(Failure::Domain { message, detail }) => {
            if let Some(d) = detail {
                println!("{}", pretty(&d));
            }
            eprintln!("error: {message}");
            1
        }
    }
}

fn dispatch(cmd: Command) -> CmdResult {
    match cmd {
        Command::Parse { instance } => cmd_parse(&instance),
        Command::Stats(a) => cmd_stats(a),
        Command::Metrics(a) => cmd_metrics(a),
        Command::Perturb(a) => cmd_perturb(a),
        Command::Optimize(a) => cmd_optimize(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::FitCorrection(a) => cmd_fit_correction(a),
        Command::Correct(a) => cmd_correct(a),
        Command::Report(a) => cmd_report(a),
    }
}

fn pretty<S: Serialize>(v: &S) -> String {
    serde_json::to_string_pretty(v).expect("value serializes")
}

fn write_file(dir: &Path, name: &str, text: &str) -> anyhow::Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(name);
    fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
}

fn read_text(path: &Path) -> anyhow::Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load_instance(path: &Path) -> Result<Instance<f64>, Failure> {
    let text = read_text(path)?;
    let inst: Instance<f64> = parse_instance(&text).with_context(|| format!("parsing {}", path.display()))?;
    let v = validate_instance(&inst);
    if !v.is_empty() {
        return Err(domain(format!("{} is not a valid instance", path.display()), Some(json!({ "violations": v }))));
    }
    Ok(inst)
}

/// Days spanned by a CSV's timestamps.
fn infer_calendar(path: &Path) -> anyhow::Result<Calendar> {
    let rows = read_rows(fs::File::open(path).with_context(|| format!("opening {}", path.display()))?)
        .with_context(|| format!("reading {}", path.display()))?;
    let first = rows.first().ok_or_else(|| anyhow!("{} has no rows to infer a calendar from", path.display()))?;
    let last = rows.iter().map(|r| r.ts).max().expect("non-empty");
    let days = (last.date() - first.ts.date()).num_days() + 1;
    if days < 1 {
        return Err(anyhow!("{}: timestamps are not increasing", path.display()));
    }
    Ok(Calendar::new(first.ts.date(), days as usize)?)
}

fn resolve_calendar(args: &CalendarArgs, spec: Option<&CalendarSpec>, first: Option<&Path>) -> anyhow::Result<Calendar> {
    if let Some(m) = &args.month {
        return parse_month(m);
    }
    if let (Some(start), Some(days)) = (args.start, args.days) {
        return Ok(Calendar::new(start, days)?);
    }
    if let Some(s) = spec {
        return s.calendar();
    }
    let path = first.ok_or_else(|| anyhow!("no calendar given and no series to infer one from"))?;
    infer_calendar(path)
}

fn load_series(path: &Path, cal: &Calendar) -> anyhow::Result<RawSeries<f64>> {
    load_series_csv(path, cal).with_context(|| format!("reading {}", path.display()))
}

fn load_prices(path: &Path, cal: &Calendar) -> anyhow::Result<PriceSeries<f64>> {
    let half = load_price_csv(path, cal).with_context(|| format!("reading {}", path.display()))?;
    Ok(expand_prices(&half, cal)?)
}

/// A single net-load file, or buildings minus solars.
fn load_net(single: Option<&Path>, buildings: &[PathBuf], solars: &[PathBuf], cal: &Calendar) -> anyhow::Result<NetLoadSeries<f64>> {
    if let Some(p) = single {
        return Ok(net_load(&[load_series(p, cal)?], &[], cal)?);
    }
    if buildings.is_empty() {
        return Err(anyhow!("a net-load series or --buildings is required"));
    }
    let b = buildings.iter().map(|p| load_series(p, cal)).collect::<anyhow::Result<Vec<_>>>()?;
    let s = solars.iter().map(|p| load_series(p, cal)).collect::<anyhow::Result<Vec<_>>>()?;
    Ok(net_load(&b, &s, cal)?)
}

fn cmd_parse(path: &Path) -> CmdResult {
    let text = read_text(path)?;
    let inst: Instance<f64> = parse_instance(&text).with_context(|| format!("parsing {}", path.display()))?;
    let [buildings, solar, batteries, recurring, onceoff] = inst.counts();
    let violations = validate_instance(&inst);
    let report = json!({
        "valid": violations.is_empty(),
        "counts": {
            "buildings": buildings,
            "solar": solar,
            "batteries": batteries,
            "recurring": recurring,
            "onceoff": onceoff,
        },
        "violations": violations,
    });
    if violations.is_empty() {
        println!("{}", pretty(&report));
        Ok(())
    } else {
        Err(domain(format!("{} is not a valid instance", path.display()), Some(report)))
    }
}

fn cmd_stats(a: StatsArgs) -> CmdResult {
    let first = a
        .buildings
        .first()
        .or(a.solars.first())
        .or(a.actual.as_ref())
        .or(a.forecast.as_ref())
        .or(a.prices.as_ref());
    let cal = resolve_calendar(&a.calendar, None, first.map(PathBuf::as_path))?;
    let mut out = Vec::new();
    let mut add = |kind: &str, path: &Path, s: RawSeries<f64>| -> anyhow::Result<()> {
        let missing = s.values.iter().filter(|v| v.is_none()).count();
        let stats = descriptive_stats(&s).with_context(|| format!("{}", path.display()))?;
        out.push(json!({ "kind": kind, "path": path, "periods": s.len(), "missing": missing, "stats": stats }));
        Ok(())
    };
    for p in &a.buildings {
        add("building", p, load_series(p, &cal)?)?;
    }
    for p in &a.solars {
        add("solar", p, load_series(p, &cal)?)?;
    }
    if let Some(p) = &a.actual {
        add("actual", p, load_series(p, &cal)?)?;
    }
    if let Some(p) = &a.forecast {
        add("forecast", p, load_series(p, &cal)?)?;
    }
    if let Some(p) = &a.prices {
        let half = load_price_csv(p, &cal).with_context(|| format!("reading {}", p.display()))?;
        add("prices", p, RawSeries::from_values(half))?;
    }
    if out.is_empty() {
        return Err(anyhow!("no series given").into());
    }
    println!("{}", pretty(&json!({ "calendar": cal, "series": out })));
    Ok(())
}

fn cmd_metrics(a: MetricsArgs) -> CmdResult {
    let cal = resolve_calendar(&a.calendar, None, Some(&a.actual))?;
    let actual = load_series(&a.actual, &cal)?;
    let forecast = load_series(&a.forecast, &cal)?;
    // score only the periods where both values are present
    let (y, f): (Vec<f64>, Vec<f64>) =
        actual.values.iter().zip(&forecast.values).filter_map(|(y, f)| Some(((*y)?, (*f)?))).unzip();
    if y.is_empty() {
        return Err(anyhow!("actual and forecast share no present values").into());
    }
    let train = match &a.train {
        Some(p) => {
            let tcal = infer_calendar(p)?;
            let s = load_series(p, &tcal)?;
            if s.values.iter().any(Option::is_none) {
                return Err(anyhow!("{}: training history has missing values", p.display()).into());
            }
            Some(s.zero_filled())
        }
        None => None,
    };
    let report = ErrorReport::compute(&y, &f, train.as_deref().map(|t| (t, a.season)))?;
    let text = pretty(&report);
    if let Some(dir) = &a.out {
        write_file(dir, "metrics.json", &text)?;
    }
    println!("{text}");
    Ok(())
}

/// Header and `(timestamp, value)` text of a two-column CSV, untouched.
fn read_raw_csv(path: &Path) -> anyhow::Result<(csv::StringRecord, Vec<csv::StringRecord>)> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .with_context(|| format!("opening {}", path.display()))?;
    let headers = rdr.headers()?.clone();
    if headers.len() != 2 || headers[0].trim() != "timestamp" {
        return Err(anyhow!("{}: expected header `timestamp,<name>`", path.display()));
    }
    let rows = rdr.records().collect::<Result<Vec<_>, _>>()?;
    Ok((headers, rows))
}

/// Rewrites the value column with `f`, keeping the original text wherever
/// the value does not change. Empty values stay empty.
fn map_values(path: &Path, out: Option<&Path>, f: impl Fn(f64) -> f64) -> CmdResult {
    let (headers, rows) = read_raw_csv(path)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&headers)?;
    for (i, rec) in rows.iter().enumerate() {
        let text = rec.get(1).unwrap_or("");
        if text.trim().is_empty() {
            w.write_record([rec.get(0).unwrap_or(""), text])?;
            continue;
        }
        let v: f64 = text
            .trim()
            .parse()
            .map_err(|_| anyhow!("{} row {}: cannot parse value `{text}`", path.display(), i + 2))?;
        let nv = f(v);
        if nv == v {
            w.write_record([rec.get(0).unwrap_or(""), text])?;
        } else {
            w.write_record([rec.get(0).unwrap_or(""), &nv.to_string()])?;
        }
    }
    let bytes = w.into_inner().map_err(|e| anyhow!("{e}"))?;
    match out {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir)?;
            }
            fs::write(p, bytes).with_context(|| format!("writing {}", p.display()))?;
        }
        None => std::io::stdout().write_all(&bytes)?,
    }
    Ok(())
}

fn cmd_perturb(a: PerturbArgs) -> CmdResult {
    let spec = PerturbationSpec::with_limit(a.factor, a.limit)?;
    map_values(&a.actual, a.out.as_deref(), |y| crate::correction::perturb(&[y], spec)[0])
}

fn cmd_correct(a: CorrectArgs) -> CmdResult {
    let corr = match &a.params {
        Some(p) => {
            let v: serde_json::Value = serde_json::from_str(&read_text(p)?)?;
            let get = |k: &str| v.get(k).and_then(|x| x.as_f64()).ok_or_else(|| anyhow!("{}: missing `{k}`", p.display()));
            LinearCorrection { alpha: get("alpha")?, beta: get("beta")? }
        }
        None => LinearCorrection { alpha: a.alpha.unwrap_or(1.0), beta: a.beta.unwrap_or(0.0) },
    };
    map_values(&a.forecast, a.out.as_deref(), |p| apply_correction(&[p], corr)[0])
}

fn cmd_optimize(a: OptimizeArgs) -> CmdResult {
    let mut m = match &a.manifest {
        Some(p) => {
            let m: RunManifest =
                serde_json::from_str(&read_text(p)?).with_context(|| format!("parsing {}", p.display()))?;
            m.rebase(p.parent().unwrap_or(Path::new(".")))
        }
        None => RunManifest {
            instance: a.instance.clone().ok_or_else(|| anyhow!("--instance or --manifest is required"))?,
            buildings: Vec::new(),
            solars: Vec::new(),
            forecast: None,
            actual: None,
            prices: a.prices.clone().ok_or_else(|| anyhow!("--prices or --manifest is required"))?,
            calendar: None,
            policy: BatteryPolicy::VeryLiberal,
            optimizer: OptimizerConfig::default(),
            out: None,
        },
    };
    if let Some(v) = a.instance {
        m.instance = v;
    }
    if let Some(v) = a.prices {
        m.prices = v;
    }
    if !a.buildings.is_empty() {
        m.buildings = a.buildings;
    }
    if !a.solars.is_empty() {
        m.solars = a.solars;
    }
    m.forecast = a.forecast.or(m.forecast);
    m.actual = a.actual.or(m.actual);
    m.out = a.out.or(m.out);
    if let Some(v) = a.policy {
        m.policy = v;
    }
    if let Some(v) = a.warm_starts {
        m.optimizer.num_warm_starts = v;
    }
    if let Some(v) = a.seed {
        m.optimizer.seed = v;
    }
    if let Some(v) = a.iters {
        m.optimizer.iterations = v;
    }
    let out = m.out.clone().ok_or_else(|| anyhow!("--out is required"))?;

    let inst = load_instance(&m.instance)?;
    let first = m.forecast.as_ref().or(m.buildings.first()).map(PathBuf::as_path);
    let cal = resolve_calendar(&a.calendar, m.calendar.as_ref(), first)?;
    let forecast = load_net(m.forecast.as_deref(), &m.buildings, &m.solars, &cal)?;
    let prices = load_prices(&m.prices, &cal)?;
    let actual = m.actual.as_deref().map(|p| load_net(Some(p), &[], &[], &cal)).transpose()?;

    let result = optimize(&inst, &cal, &forecast, &prices, m.policy, &m.optimizer).map_err(|e| match e {
        SchedulerError::InvalidInstance(v) => domain("invalid instance", Some(json!({ "violations": v }))),
        SchedulerError::Infeasible(v) => domain("no feasible schedule found", Some(json!({ "violations": v }))),
        SchedulerError::NoFeasiblePlacement => domain(e.to_string(), None),
        other => Failure::Input(other.into()),
    })?;
    let actual_cost = match &actual {
        Some(y) => Some(total_cost(y, &prices, &inst, &cal, &result.schedule)?),
        None => None,
    };
    let report = json!({
        "manifest": m,
        "calendar": cal,
        "forecast_cost": result.cost,
        "actual_cost": actual_cost,
        "report": result.report,
    });
    write_file(&out, "schedule.json", &result.schedule.to_json())?;
    write_file(&out, "run_report.json", &pretty(&report))?;
    println!("{}", pretty(&json!({ "forecast_cost": result.cost, "actual_cost": actual_cost, "out": out })));
    Ok(())
}

fn cmd_evaluate(a: EvaluateArgs) -> CmdResult {
    let inst = load_instance(&a.instance)?;
    let first = a.actual.as_ref().or(a.buildings.first()).map(PathBuf::as_path);
    let cal = resolve_calendar(&a.calendar, None, first)?;
    let schedule = Schedule::from_json(&read_text(&a.schedule)?)
        .with_context(|| format!("parsing {}", a.schedule.display()))?;
    let base = load_net(a.actual.as_deref(), &a.buildings, &a.solars, &cal)?;
    let prices = load_prices(&a.prices, &cal)?;
    let violations = check_feasibility(&inst, &cal, &schedule, a.policy);
    if !violations.is_empty() {
        return Err(domain("schedule is infeasible", Some(json!({ "violations": violations }))));
    }
    let cost = total_cost(&base, &prices, &inst, &cal, &schedule)?;
    let metrics = match &a.forecast {
        Some(p) => {
            let f = load_series(p, &cal)?.zero_filled();
            Some(ErrorReport::compute(&base.0, &f, None)?)
        }
        None => None,
    };
    let name = a
        .name
        .clone()
        .or_else(|| a.out.as_ref().and_then(|d| d.file_name()).map(|n| n.to_string_lossy().into_owned()))
        .unwrap_or_else(|| a.schedule.display().to_string());
    let text = pretty(&json!({ "name": name, "cost": cost, "metrics": metrics }));
    if let Some(dir) = &a.out {
        write_file(dir, "evaluation.json", &text)?;
    }
    println!("{text}");
    Ok(())
}

fn cmd_fit_correction(a: FitArgs) -> CmdResult {
    let m: CorrectionManifest =
        serde_json::from_str(&read_text(&a.manifest)?).with_context(|| format!("parsing {}", a.manifest.display()))?;
    let m = m.rebase(a.manifest.parent().unwrap_or(Path::new(".")));
    let cal = resolve_calendar(&CalendarArgs::default(), m.calendar.as_ref(), Some(&m.actual_csv))?;
    let actual = load_series(&m.actual_csv, &cal)?;
    if actual.values.iter().any(Option::is_none) {
        return Err(anyhow!("{}: actual series has missing values", m.actual_csv.display()).into());
    }
    let y = actual.zero_filled();
    let forecasts = m
        .forecasts
        .iter()
        .map(|f| Ok(load_series(&f.forecast_csv, &cal)?.zero_filled()))
        .collect::<anyhow::Result<Vec<_>>>()?;
    let pairs: Vec<FitPair<f64>> =
        forecasts.iter().zip(&m.forecasts).map(|(p, f)| FitPair { actual: &y, predicted: p, cost: f.cost }).collect();
    let fit = fit_gamma_epsilon(&pairs).map_err(|e| domain(e.to_string(), None))?;

    // one correction for all forecasts, fitted on the normalised pooled data
    let norm = Normalization::of(&y).map_err(|e| domain(e.to_string(), None))?;
    let zy = norm.apply(&y);
    let mut pooled_y = Vec::with_capacity(y.len() * forecasts.len());
    let mut pooled_p = Vec::with_capacity(y.len() * forecasts.len());
    for p in &forecasts {
        pooled_y.extend_from_slice(&zy);
        pooled_p.extend(norm.apply(p));
    }
    let corr = linear_correction(&pooled_y, &pooled_p, fit.params).map_err(|e| domain(e.to_string(), None))?;
    let raw = norm.denormalize(corr);
    let text = pretty(&json!({
        "gamma": fit.params.gamma,
        "epsilon": fit.params.epsilon,
        "correlation": fit.correlation,
        "alpha": raw.alpha,
        "beta": raw.beta,
    }));
    if let Some(dir) = &a.out {
        write_file(dir, "correction.json", &text)?;
    }
    println!("{text}");
    Ok(())
}

const REPORT_METRICS: [&str; 4] = ["mase", "mae", "mean_under", "mean_over"];

fn cmd_report(a: ReportArgs) -> CmdResult {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["run", "cost", "mase", "mae", "mean_under", "mean_over"])?;
    let mut costs = Vec::new();
    let mut columns: Vec<Vec<Option<f64>>> = vec![Vec::new(); REPORT_METRICS.len()];
    let mut names = Vec::new();
    for dir in &a.runs {
        let path = dir.join("evaluation.json");
        let v: serde_json::Value = serde_json::from_str(&read_text(&path)?)?;
        let name = v.get("name").and_then(|n| n.as_str()).map(str::to_string).unwrap_or_else(|| dir.display().to_string());
        let cost = v.get("cost").and_then(|c| c.as_f64()).ok_or_else(|| anyhow!("{}: missing cost", path.display()))?;
        let metrics = v
            .get("metrics")
            .filter(|m| !m.is_null())
            .ok_or_else(|| anyhow!("{}: no metrics (evaluate with --forecast)", path.display()))?;
        let mut row = vec![name.clone(), cost.to_string()];
        for (k, col) in REPORT_METRICS.iter().zip(&mut columns) {
            let x = metrics.get(*k).and_then(|x| x.as_f64());
            row.push(x.map(|x| x.to_string()).unwrap_or_default());
            col.push(x);
        }
        w.write_record(&row)?;
        names.push(name);
        costs.push(cost);
    }
    let mut correlations = serde_json::Map::new();
    for (k, col) in REPORT_METRICS.iter().zip(&columns) {
        let xs: Option<Vec<f64>> = col.iter().copied().collect();
        let r = xs.and_then(|xs| pearson(&xs, &costs).ok());
        correlations.insert(k.to_string(), json!(r));
    }
    let text = pretty(&json!({ "runs": names, "correlations": correlations }));
    if let Some(dir) = &a.out {
        let bytes = w.into_inner().map_err(|e| anyhow!("{e}"))?;
        write_file(dir, "report.csv", std::str::from_utf8(&bytes)?)?;
        write_file(dir, "report.json", &text)?;
    }
    println!("{text}");
    Ok(())
}
