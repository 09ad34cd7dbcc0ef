use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use lipp::verify::{self, Suite, VerifyConfig};
use lipp::workload::{self, AnyDataset, Dataset, Mix, Provenance, Report, SweepParam, WorkloadSpec};
use lipp::{Error, Key, KernelFn, Params, Result};

#[derive(Parser)]
#[command(name = "lipp", version, about = "Learned index benchmark and verification tool")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic key dataset
    Generate(GenerateArgs),
    /// Run a workload and print a JSON report
    Run(RunArgs),
    /// Run the self-check suites
    Verify(VerifyArgs),
    /// Run a workload once per value of alpha or beta
    Sweep(SweepArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Dist {
    Uniform,
    Lognormal,
    Pow2,
    Pow3,
    Pow4,
    Log,
    Exp,
}

impl Dist {
    fn provenance(self) -> Provenance {
        match self {
            Dist::Uniform => Provenance::Uniform,
            Dist::Lognormal => Provenance::Lognormal,
            Dist::Pow2 => Provenance::Pow2,
            Dist::Pow3 => Provenance::Pow3,
            Dist::Pow4 => Provenance::Pow4,
            Dist::Log => Provenance::Log,
            Dist::Exp => Provenance::Exp,
        }
    }
}

#[derive(Args)]
struct Common {
    /// Seed from which every random choice is derived
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Output file (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Indented JSON
    #[arg(long)]
    pretty: bool,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, value_enum)]
    dist: Dist,
    /// Number of keys
    #[arg(long, default_value_t = 1_000_000)]
    n: usize,
    /// Shape of the lognormal distribution
    #[arg(long, default_value_t = 2.0)]
    sigma: f64,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct WorkloadArgs {
    /// Dataset file
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_enum, default_value = "read-only")]
    workload: MixArg,
    /// Timed operations
    #[arg(long, default_value_t = 1_000_000)]
    ops: u64,
    /// Keys bulkloaded first; defaults to every key not needed for inserts
    #[arg(long)]
    bulkload: Option<usize>,
}

#[derive(Args)]
struct ParamArgs {
    #[arg(long, default_value_t = 0.1)]
    alpha: f64,
    #[arg(long, default_value_t = 2.0)]
    beta: f64,
    #[arg(long, default_value_t = 2.0)]
    delta: f64,
    #[arg(long, default_value_t = 256)]
    overflow_capacity: usize,
    /// linear, pow2, exp, log or poly:c0,c1,... (polynomials are checked
    /// for monotonicity over the dataset's key range)
    #[arg(long, default_value = "linear")]
    kernel: String,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    workload: WorkloadArgs,
    #[command(flatten)]
    params: ParamArgs,
    /// Also run the ordered-map baseline and report the throughput ratio
    #[arg(long)]
    baseline: bool,
    #[command(flatten)]
    common: Common,
}

#[derive(Clone, Copy, ValueEnum)]
enum MixArg {
    ReadOnly,
    ReadHeavy,
    WriteHeavy,
    WriteOnly,
}

impl From<MixArg> for Mix {
    fn from(m: MixArg) -> Mix {
        match m {
            MixArg::ReadOnly => Mix::ReadOnly,
            MixArg::ReadHeavy => Mix::ReadHeavy,
            MixArg::WriteHeavy => Mix::WriteHeavy,
            MixArg::WriteOnly => Mix::WriteOnly,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SuiteArg {
    All,
    Fmcd,
    Conflict,
    Positions,
    Oracle,
    Height,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, value_enum, default_value = "all")]
    suite: SuiteArg,
    /// Cases per suite (each suite has its own default)
    #[arg(long)]
    cases: Option<usize>,
    #[arg(long, hide = true)]
    inject_fault: bool,
    #[command(flatten)]
    common: Common,
}

#[derive(Clone, Copy, ValueEnum)]
enum ParamName {
    Alpha,
    Beta,
}

#[derive(Clone, Copy, ValueEnum)]
enum SweepFormat {
    Csv,
    Json,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, value_enum)]
    param: ParamName,
    /// Comma-separated values
    #[arg(long, value_delimiter = ',', required = true)]
    values: Vec<f64>,
    #[command(flatten)]
    workload: WorkloadArgs,
    #[command(flatten)]
    params: ParamArgs,
    #[arg(long, value_enum, default_value = "csv")]
    format: SweepFormat,
    #[command(flatten)]
    common: Common,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate(a) => generate(a),
        Command::Run(a) => run(a),
        Command::Verify(a) => verify(a),
        Command::Sweep(a) => sweep(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(io::BufWriter::new(File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn print_json(value: &serde_json::Value, pretty: bool) -> Result<()> {
    let text = if pretty { serde_json::to_string_pretty(value) } else { serde_json::to_string(value) };
    let mut out = io::stdout().lock();
    writeln!(out, "{}", text.expect("json value serializes"))?;
    Ok(())
}

fn generate(a: GenerateArgs) -> Result<ExitCode> {
    let Some(path) = a.common.out.as_deref() else {
        return Err(Error::InvalidParam("generate needs --out".into()));
    };
    let data = match a.dist {
        Dist::Lognormal if a.n > 0 => workload::gen_lognormal(a.n, a.sigma, a.common.seed)?,
        d => workload::generate(d.provenance(), a.n, a.common.seed)?,
    };
    data.save(path)?;
    let (min, max) = data.min_max().expect("non-empty dataset");
    let summary = serde_json::json!({
        "file": path.display().to_string(),
        "dist": data.provenance.name(),
        "seed": data.seed,
        "count": data.len(),
        "min": min,
        "max": max,
    });
    print_json(&summary, a.common.pretty)?;
    Ok(ExitCode::SUCCESS)
}

fn params_for<K: Key>(p: &ParamArgs, data: &Dataset<K>) -> Result<Params> {
    let domain = data.min_max().map(|(lo, hi)| (lo.to_f64(), hi.to_f64()));
    let params = Params {
        alpha: p.alpha,
        beta: p.beta,
        delta: p.delta,
        overflow_capacity: p.overflow_capacity,
        kernel: KernelFn::parse(&p.kernel, domain)?,
        ..Params::default()
    };
    params.validate()?;
    Ok(params)
}

fn spec_for<K: Key>(w: &WorkloadArgs, seed: u64, data: &Dataset<K>) -> Result<WorkloadSpec> {
    let mix: Mix = w.workload.into();
    let (inserts, _) = mix.split(w.ops);
    let bulkload_count = match w.bulkload {
        Some(b) => b,
        None => data.len().checked_sub(inserts as usize).ok_or_else(|| {
            Error::Workload(format!("{inserts} inserts requested but the dataset has {} keys", data.len()))
        })?,
    };
    Ok(WorkloadSpec { mix, ops: w.ops, bulkload_count, seed })
}

fn run(a: RunArgs) -> Result<ExitCode> {
    let report = match AnyDataset::load(&a.workload.data)? {
        AnyDataset::U64(d) => run_typed(&a, &d)?,
        AnyDataset::F64(d) => run_typed(&a, &d)?,
    };
    let mut out = output(a.common.out.as_deref())?;
    writeln!(out, "{}", report.to_json(a.common.pretty))?;
    out.flush()?;
    Ok(ExitCode::SUCCESS)
}

fn run_typed<K: Key>(a: &RunArgs, data: &Dataset<K>) -> Result<Report> {
    let params = params_for(&a.params, data)?;
    let spec = spec_for(&a.workload, a.common.seed, data)?;
    let mut report = workload::run_lipp(data, &spec, &params)?;
    report.dataset_path = Some(a.workload.data.display().to_string());
    if a.baseline {
        let base = workload::run_baseline(data, &spec)?;
        report.compare_with(&base);
    }
    Ok(report)
}

fn verify(a: VerifyArgs) -> Result<ExitCode> {
    let cfg = VerifyConfig { seed: a.common.seed, cases: a.cases, inject_fault: a.inject_fault };
    let suites: Vec<Suite> = match a.suite {
        SuiteArg::All => Suite::ALL.to_vec(),
        SuiteArg::Fmcd => vec![Suite::Fmcd],
        SuiteArg::Conflict => vec![Suite::Conflict],
        SuiteArg::Positions => vec![Suite::Positions],
        SuiteArg::Oracle => vec![Suite::Oracle],
        SuiteArg::Height => vec![Suite::Height],
    };
    let mut out = output(a.common.out.as_deref())?;
    let mut failed = 0;
    for suite in suites {
        let outcome = verify::run_suite(suite, &cfg);
        writeln!(out, "{outcome}")?;
        out.flush()?;
        failed += !outcome.passed() as usize;
    }
    writeln!(out, "{}", if failed == 0 { "all suites passed".to_string() } else { format!("{failed} suite(s) failed") })?;
    out.flush()?;
    Ok(if failed == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn sweep(a: SweepArgs) -> Result<ExitCode> {
    let reports = match AnyDataset::load(&a.workload.data)? {
        AnyDataset::U64(d) => sweep_typed(&a, &d)?,
        AnyDataset::F64(d) => sweep_typed(&a, &d)?,
    };
    match a.format {
        SweepFormat::Csv => {
            let mut w = csv::Writer::from_writer(output(a.common.out.as_deref())?);
            for r in &reports {
                w.serialize(r).map_err(|e| Error::Io(io::Error::other(e)))?;
            }
            w.flush()?;
        }
        SweepFormat::Json => {
            let mut out = output(a.common.out.as_deref())?;
            for r in &reports {
                writeln!(out, "{}", r.to_json(a.common.pretty))?;
            }
            out.flush()?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn sweep_typed<K: Key>(a: &SweepArgs, data: &Dataset<K>) -> Result<Vec<Report>> {
    let base = params_for(&a.params, data)?;
    let spec = spec_for(&a.workload, a.common.seed, data)?;
    let param = match a.param {
        ParamName::Alpha => SweepParam::Alpha,
        ParamName::Beta => SweepParam::Beta,
    };
    let mut reports = workload::sweep(param, &a.values, data, &spec, &base)?;
    for r in &mut reports {
        r.dataset_path = Some(a.workload.data.display().to_string());
    }
    Ok(reports)
}
