use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use efmetrics_core::dataset::{self, IngestReport, ServiceOrder};
use efmetrics_core::derivation::{derive_with, Bounding, CoefficientConfig, DeriveOptions};
use efmetrics_core::evaluation::{
    order_sizes, run_study, size_request, FpSource, RequestSizes, SizingContext, StudyConfig,
};
use efmetrics_core::governance::{compute_log, render_chart, ChartLayout, GovernanceLog, IndicatorValue};
use efmetrics_core::{CoefficientSet, FpaRules, FunctionType, RequestOperation};

const EXIT_IO: u8 = 1;
const EXIT_REJECTED: u8 = 2;
const EXIT_NOT_REPRODUCED: u8 = 3;
const EXIT_USAGE: u8 = 64;

#[derive(Parser)]
#[command(
    name = "efmetrics",
    version,
    about = "Functional size measurement with FP, EF and NESMA PM"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Size every request of a service-order CSV.
    Measure(MeasureArgs),
    /// Regenerate the EF coefficients from the complexity tables.
    Derive(DeriveArgs),
    /// Correlate each metric with effort per system.
    Evaluate(EvaluateArgs),
    /// Compute governance indicators from a period log.
    Indicators(IndicatorsArgs),
    /// Render the multi-indicator chart as SVG.
    Chart(ChartArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Clone, Copy, ValueEnum)]
enum FpSourceArg {
    Column,
    Recompute,
}

impl From<FpSourceArg> for FpSource {
    fn from(v: FpSourceArg) -> Self {
        match v {
            FpSourceArg::Column => FpSource::Column,
            FpSourceArg::Recompute => FpSource::Recompute,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum BoundingArg {
    WidestPrecedent,
    SumOfRanges,
}

#[derive(Args)]
struct CoefficientArgs {
    /// Coefficient JSON (output of `derive` or a bare type → coefficients map).
    #[arg(long, env = "EFMETRICS_COEFFS")]
    coefficients: Option<PathBuf>,
}

#[derive(Args)]
struct MeasureArgs {
    csv: PathBuf,
    #[command(flatten)]
    coeffs: CoefficientArgs,
    /// Complexity tables JSON replacing the built-in IFPUG tables.
    #[arg(long)]
    rules: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "column")]
    fp_source: FpSourceArg,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Exit with status 2 if any service order was rejected.
    #[arg(long)]
    strict: bool,
}

#[derive(Args)]
struct DeriveArgs {
    #[arg(long, value_enum, default_value = "widest-precedent")]
    bounding: BoundingArg,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct EvaluateArgs {
    csv: PathBuf,
    #[command(flatten)]
    coeffs: CoefficientArgs,
    #[arg(long)]
    rules: Option<PathBuf>,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, default_value_t = 15)]
    min_os: usize,
    #[arg(long, value_enum, default_value = "column")]
    fp_source: FpSourceArg,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct IndicatorsArgs {
    log: PathBuf,
    #[command(flatten)]
    coeffs: CoefficientArgs,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ChartArgs {
    log: PathBuf,
    #[command(flatten)]
    coeffs: CoefficientArgs,
    #[arg(long)]
    max_col_width: Option<f64>,
    #[arg(long)]
    row_height: Option<f64>,
    /// Layout JSON; individual flags override it.
    #[arg(long)]
    layout: Option<PathBuf>,
    /// Period to draw for every system (default: each system's last period).
    #[arg(long)]
    period: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Failure carrying its exit status.
#[derive(Debug)]
struct Exit(u8, String);

impl std::fmt::Display for Exit {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.1)
    }
}

impl std::error::Error for Exit {}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load_coefficients(path: Option<&Path>) -> Result<CoefficientSet> {
    let Some(path) = path else {
        return Ok(CoefficientSet::published());
    };
    let text = read(path)?;
    if let Ok(cfg) = serde_json::from_str::<CoefficientConfig>(&text) {
        cfg.coefficients.validate()?;
        return Ok(cfg.coefficients);
    }
    CoefficientSet::from_json(&text).with_context(|| format!("loading coefficients from {}", path.display()))
}

fn load_rules(path: Option<&Path>) -> Result<FpaRules> {
    match path {
        None => Ok(FpaRules::standard().clone()),
        Some(p) => FpaRules::from_json(&read(p)?).with_context(|| format!("loading tables from {}", p.display())),
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn write_file(dir: &Path, name: &str, text: &str) -> Result<()> {
    let p = dir.join(name);
    fs::write(&p, text).with_context(|| format!("writing {}", p.display()))
}

fn to_json<T: Serialize>(v: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    Ok(s)
}

#[derive(Serialize)]
struct RequestLine {
    os_id: String,
    system: String,
    function_id: String,
    ftype: FunctionType,
    op: RequestOperation,
    #[serde(flatten)]
    sizes: RequestSizes,
}

#[derive(Serialize)]
struct OrderLine {
    os_id: String,
    system: String,
    effort_mh: f64,
    #[serde(flatten)]
    sizes: RequestSizes,
}

#[derive(Serialize)]
struct SystemLine {
    system: String,
    n_os: usize,
    n_requests: usize,
    effort_mh: f64,
    #[serde(flatten)]
    sizes: RequestSizes,
}

#[derive(Serialize)]
struct MeasureReport {
    ingest: IngestReport,
    requests: Vec<RequestLine>,
    orders: Vec<OrderLine>,
    systems: Vec<SystemLine>,
}

fn add(a: RequestSizes, b: RequestSizes) -> RequestSizes {
    let (eft, efd) = (a.eft + b.eft, a.efd + b.efd);
    RequestSizes {
        fp: a.fp + b.fp,
        ef: eft + efd,
        eft,
        efd,
        pm: a.pm + b.pm,
    }
}

fn measure_report(orders: &[ServiceOrder], ingest: IngestReport, ctx: &SizingContext<'_>) -> Result<MeasureReport> {
    let mut requests = Vec::new();
    let mut lines = Vec::new();
    let mut systems: Vec<SystemLine> = Vec::new();
    for o in orders {
        for r in &o.requests {
            requests.push(RequestLine {
                os_id: r.os_id.clone(),
                system: r.system.clone(),
                function_id: r.function_id.clone(),
                ftype: r.ftype,
                op: r.op,
                sizes: size_request(r, ctx)?,
            });
        }
        let sizes = order_sizes(o, ctx)?;
        lines.push(OrderLine {
            os_id: o.os_id.clone(),
            system: o.system.clone(),
            effort_mh: o.effort_mh(),
            sizes,
        });
        match systems.iter_mut().find(|s| s.system == o.system) {
            Some(s) => {
                s.n_os += 1;
                s.n_requests += o.requests.len();
                s.effort_mh += o.effort_mh();
                s.sizes = add(s.sizes, sizes);
            }
            None => systems.push(SystemLine {
                system: o.system.clone(),
                n_os: 1,
                n_requests: o.requests.len(),
                effort_mh: o.effort_mh(),
                sizes,
            }),
        }
    }
    systems.sort_by(|a, b| a.system.cmp(&b.system));
    Ok(MeasureReport {
        ingest,
        requests,
        orders: lines,
        systems,
    })
}

fn size_cells(s: &RequestSizes) -> String {
    format!(
        "{:>8.2}{:>10.4}{:>10.4}{:>10.4}{:>10.2}",
        s.fp, s.ef, s.eft, s.efd, s.pm
    )
}

fn measure_text(r: &MeasureReport) -> String {
    use std::fmt::Write as _;
    let mut s = String::new();
    let head = format!("{:>8}{:>10}{:>10}{:>10}{:>10}", "FP", "EF", "EFt", "EFd", "PM");
    let _ = writeln!(s, "Requests");
    let _ = writeln!(
        s,
        "{:<10}{:<10}{:<14}{:<5}{:<3}{head}",
        "OS", "system", "function", "type", "op"
    );
    for q in &r.requests {
        let _ = writeln!(
            s,
            "{:<10}{:<10}{:<14}{:<5}{:<3}{}",
            q.os_id,
            q.system,
            q.function_id,
            q.ftype.as_str(),
            q.op.code(),
            size_cells(&q.sizes)
        );
    }
    let _ = writeln!(s, "\nService orders");
    let _ = writeln!(s, "{:<10}{:<10}{:>12}{head}", "OS", "system", "effort_mh");
    for o in &r.orders {
        let _ = writeln!(
            s,
            "{:<10}{:<10}{:>12.1}{}",
            o.os_id,
            o.system,
            o.effort_mh,
            size_cells(&o.sizes)
        );
    }
    let _ = writeln!(s, "\nSystems");
    let _ = writeln!(
        s,
        "{:<10}{:>6}{:>10}{:>12}{head}",
        "system", "OS", "requests", "effort_mh"
    );
    for y in &r.systems {
        let _ = writeln!(
            s,
            "{:<10}{:>6}{:>10}{:>12.1}{}",
            y.system,
            y.n_os,
            y.n_requests,
            y.effort_mh,
            size_cells(&y.sizes)
        );
    }
    let i = &r.ingest;
    let _ = writeln!(
        s,
        "\n{} of {} service orders accepted, {} rejected",
        i.accepted_orders, i.total_orders, i.rejected_orders
    );
    for rej in &i.reject_reasons {
        let _ = writeln!(s, "  rejected OS {} (line {}): {}", rej.os_id, rej.line, rej.reason);
    }
    for w in &i.warnings {
        let _ = writeln!(s, "  warning OS {} (line {}): {}", w.os_id, w.line, w.message);
    }
    s
}

fn cmd_measure(a: &MeasureArgs) -> Result<()> {
    let coefficients = load_coefficients(a.coeffs.coefficients.as_deref())?;
    let rules = load_rules(a.rules.as_deref())?;
    let file = fs::File::open(&a.csv).with_context(|| format!("opening {}", a.csv.display()))?;
    let (orders, ingest) = dataset::parse_reader(file, &rules)?;
    let ctx = SizingContext::new(&rules, &coefficients, a.fp_source.into());
    let report = measure_report(&orders, ingest, &ctx)?;
    let text = match a.format {
        Format::Json => to_json(&report)?,
        Format::Text => measure_text(&report),
    };
    emit(a.out.as_deref(), &text)?;
    if report.ingest.rejected_orders > 0 {
        eprintln!("{} service order(s) rejected", report.ingest.rejected_orders);
        if a.strict {
            return Err(Exit(EXIT_REJECTED, "rejections present and --strict given".into()).into());
        }
    }
    Ok(())
}

fn cmd_derive(a: &DeriveArgs) -> Result<()> {
    let bounding = match a.bounding {
        BoundingArg::WidestPrecedent => Bounding::WidestPrecedent,
        BoundingArg::SumOfRanges => Bounding::SumOfRanges,
    };
    let d = derive_with(
        FpaRules::standard(),
        DeriveOptions {
            bounding,
            ..DeriveOptions::default()
        },
    );
    fs::create_dir_all(&a.out_dir).with_context(|| format!("creating {}", a.out_dir.display()))?;
    write_file(&a.out_dir, "coefficients.json", &to_json(&d.config())?)?;
    write_file(&a.out_dir, "derivation_report.json", &to_json(&d.report)?)?;
    let text = d.report.to_text();
    write_file(&a.out_dir, "derivation_report.txt", &text)?;
    print!("{text}");
    if d.report.standard && !d.report.reproduced() {
        return Err(Exit(EXIT_NOT_REPRODUCED, "published coefficients were not reproduced".into()).into());
    }
    Ok(())
}

fn cmd_evaluate(a: &EvaluateArgs) -> Result<()> {
    if !(a.alpha > 0.0 && a.alpha < 1.0) {
        return Err(Exit(EXIT_USAGE, format!("--alpha must lie in (0, 1), got {}", a.alpha)).into());
    }
    if a.min_os == 0 {
        return Err(Exit(EXIT_USAGE, "--min-os must be at least 1".into()).into());
    }
    let coefficients = load_coefficients(a.coeffs.coefficients.as_deref())?;
    let rules = load_rules(a.rules.as_deref())?;
    let file = fs::File::open(&a.csv).with_context(|| format!("opening {}", a.csv.display()))?;
    let (orders, ingest) = dataset::parse_reader(file, &rules)?;
    if ingest.rejected_orders > 0 {
        eprintln!("{} service order(s) rejected during ingestion", ingest.rejected_orders);
    }
    let config = StudyConfig {
        alpha: a.alpha,
        min_os: a.min_os,
        fp_source: a.fp_source.into(),
        ..StudyConfig::default()
    };
    let study = run_study(&orders, &coefficients, &rules, config);
    for w in &study.warnings {
        eprintln!("warning: {w}");
    }
    fs::create_dir_all(&a.out_dir).with_context(|| format!("creating {}", a.out_dir.display()))?;
    write_file(&a.out_dir, "study.json", &to_json(&study)?)?;
    let text = study.to_text();
    write_file(&a.out_dir, "study.txt", &text)?;
    print!("{text}");
    Ok(())
}

fn load_log(path: &Path) -> Result<GovernanceLog> {
    GovernanceLog::from_json(&read(path)?).with_context(|| format!("loading {}", path.display()))
}

fn cmd_indicators(a: &IndicatorsArgs) -> Result<()> {
    let coefficients = load_coefficients(a.coeffs.coefficients.as_deref())?;
    let report = compute_log(&load_log(&a.log)?, &coefficients)?;
    let text = match a.format {
        Format::Json => to_json(&report)?,
        Format::Text => report.to_text(),
    };
    emit(a.out.as_deref(), &text)
}

fn cmd_chart(a: &ChartArgs) -> Result<()> {
    let coefficients = load_coefficients(a.coeffs.coefficients.as_deref())?;
    let report = compute_log(&load_log(&a.log)?, &coefficients)?;
    let mut layout = match &a.layout {
        Some(p) => {
            serde_json::from_str::<ChartLayout>(&read(p)?).with_context(|| format!("loading {}", p.display()))?
        }
        None => ChartLayout::default(),
    };
    if let Some(w) = a.max_col_width {
        layout.max_col_width = w;
    }
    if let Some(h) = a.row_height {
        layout.row_height = h;
    }
    let rows: Vec<(String, Vec<IndicatorValue>)> = match &a.period {
        None => report
            .latest()
            .into_iter()
            .map(|p| (p.system.clone(), p.indicators.clone()))
            .collect(),
        Some(label) => {
            let rows: Vec<_> = report
                .periods
                .iter()
                .filter(|p| &p.period == label)
                .map(|p| (p.system.clone(), p.indicators.clone()))
                .collect();
            if rows.is_empty() {
                bail!("no system has a period labelled `{label}`");
            }
            rows
        }
    };
    let svg = render_chart(&rows, &layout)?;
    emit(a.out.as_deref(), &svg)
}

fn run(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::Measure(a) => cmd_measure(a),
        Command::Derive(a) => cmd_derive(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Indicators(a) => cmd_indicators(a),
        Command::Chart(a) => cmd_chart(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => match e.downcast_ref::<Exit>() {
            Some(Exit(code, msg)) => {
                eprintln!("error: {msg}");
                ExitCode::from(*code)
            }
            None => {
                eprintln!("error: {e:#}");
                ExitCode::from(EXIT_IO)
            }
        },
    }
}
