use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use lshmine::dataset::{generate_synthetic, load_transactions, Format};
use lshmine::engine::{compare_with_oracle, miss_rates, DEFAULT_SEED};
use lshmine::report::{write_bench_csv, BenchRow, Comparison, ReportDocument};
use lshmine::{lsh_apriori_mine, Error, MiningConfig, TransactionDatabase, Variant};

#[derive(Parser)]
#[command(name = "lshmine", version, about = "Frequent itemset mining with LSH-pruned Apriori")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Mine frequent itemsets and write a report.
    Mine(MineArgs),
    /// Mine and diff the result against a brute-force oracle.
    Compare(CompareArgs),
    /// Run several variants on one input and tabulate per-level costs.
    Bench(BenchArgs),
    /// Write a random FIMI database.
    Generate(GenerateArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum OutputFormat {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantArg {
    Exact,
    Hamming,
    Minhash,
    Covering,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Exact => Variant::Exact,
            VariantArg::Hamming => Variant::Hamming,
            VariantArg::Minhash => Variant::Minhash,
            VariantArg::Covering => Variant::Covering,
        }
    }
}

#[derive(Args)]
struct Common {
    /// FIMI file: one transaction per line, whitespace-separated item ids.
    #[arg(long)]
    input: PathBuf,
    /// Write here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Minimum support as a fraction of transactions.
    #[arg(long)]
    theta: f64,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long)]
    max_level: Option<usize>,
    #[arg(long, default_value_t = lshmine::covering_lsh::DEFAULT_MASK_DIM_CAP)]
    mask_dim_cap: u32,
    /// Stop covering queries after the inspection budget (may miss itemsets).
    #[arg(long)]
    covering_early_exit: bool,
    /// Worker threads; defaults to all cores.
    #[arg(long)]
    threads: Option<usize>,
    /// Include wall-clock timings (makes output run-dependent).
    #[arg(long)]
    timings: bool,
}

impl Common {
    fn config(&self, variant: Variant) -> MiningConfig {
        MiningConfig {
            theta: self.theta,
            epsilon: self.epsilon,
            delta: self.delta,
            variant,
            seed: self.seed,
            max_level: self.max_level,
            covering_early_exit: self.covering_early_exit,
            mask_dim_cap: self.mask_dim_cap,
        }
    }
}

#[derive(Args)]
struct MineArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_enum, default_value = "exact")]
    variant: VariantArg,
    #[arg(long, value_enum, default_value = "json")]
    format: OutputFormat,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_enum, default_value = "exact")]
    variant: VariantArg,
    /// Repeat with derived seeds and report per-level miss rates.
    #[arg(long)]
    trials: Option<usize>,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "exact,hamming,minhash,covering")]
    variants: Vec<VariantArg>,
    #[arg(long, value_enum, default_value = "csv")]
    format: OutputFormat,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    m: usize,
    #[arg(long)]
    density: f64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long)]
    output: Option<PathBuf>,
}

enum Failure {
    Usage(String),
    Data(String),
    Compare(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::OutOfRange { .. } | Error::Config(_) => Failure::Usage(e.to_string()),
            other => Failure::Data(other.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Mine(args) => with_threads(args.common.threads, || mine(&args)),
        Command::Compare(args) => with_threads(args.common.threads, || compare(&args)),
        Command::Bench(args) => with_threads(args.common.threads, || bench(&args)),
        Command::Generate(args) => generate(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Data(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Compare(msg)) => {
            eprintln!("compare failed: {msg}");
            ExitCode::from(3)
        }
    }
}

fn with_threads(threads: Option<usize>, f: impl FnOnce() -> Result<(), Failure> + Send) -> Result<(), Failure> {
    match threads {
        None => f(),
        Some(0) => Err(Failure::Usage("threads must be at least 1".into())),
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| Failure::Data(e.to_string()))?
            .install(f),
    }
}

/// Validates the config before touching the input so flag errors win.
fn prepare(common: &Common, variant: Variant) -> Result<(MiningConfig, TransactionDatabase), Failure> {
    let config = common.config(variant);
    config.validate()?;
    let db = load_transactions(&common.input, Format::Fimi)?;
    Ok((config, db))
}

fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| Failure::Data(format!("{}: {e}", p.display())))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

fn write_json(path: Option<&Path>, doc: &ReportDocument) -> Result<(), Failure> {
    let mut out = open_output(path)?;
    let json = doc.to_json()?;
    writeln!(out, "{json}")
        .and_then(|_| out.flush())
        .map_err(|e| Failure::Data(e.to_string()))
}

fn write_rows(path: Option<&Path>, rows: &[BenchRow], format: OutputFormat) -> Result<(), Failure> {
    let mut out = open_output(path)?;
    match format {
        OutputFormat::Csv => write_bench_csv(rows, &mut out)?,
        OutputFormat::Json => {
            let json = serde_json::to_string_pretty(rows).map_err(|e| Failure::Data(e.to_string()))?;
            writeln!(out, "{json}").map_err(|e| Failure::Data(e.to_string()))?;
        }
    }
    out.flush().map_err(|e| Failure::Data(e.to_string()))
}

fn mine(args: &MineArgs) -> Result<(), Failure> {
    let (config, db) = prepare(&args.common, args.variant.into())?;
    let report = lsh_apriori_mine(&db, &config)?;
    eprintln!(
        "{} frequent itemsets, {} transactions read",
        report.itemsets.len(),
        report.transactions_read()
    );
    let out = args.common.output.as_deref();
    match args.format {
        OutputFormat::Json => write_json(out, &ReportDocument::new(&report, args.common.timings)),
        OutputFormat::Csv => write_rows(out, &BenchRow::from_report(&report, args.common.timings), args.format),
    }
}

fn compare(args: &CompareArgs) -> Result<(), Failure> {
    let variant: Variant = args.variant.into();
    let (config, db) = prepare(&args.common, variant)?;
    if args.trials == Some(0) {
        return Err(Failure::Usage("trials must be at least 1".into()));
    }
    let (report, diff) = compare_with_oracle(&db, &config)?;
    let exact = lsh_apriori_mine(&db, &MiningConfig { variant: Variant::Exact, ..config.clone() })?;
    let rates = args.trials.map(|t| miss_rates(&db, &config, t)).transpose()?;
    if let Some(rates) = &rates {
        for r in rates {
            eprintln!(
                "level {}: mean miss rate {:.4}, max {:.4}, bound {:.4} ({} itemsets, {} trials)",
                r.level, r.mean_miss_rate, r.max_miss_rate, r.bound, r.itemsets, r.trials
            );
        }
    }
    eprintln!("missed {}, sub-threshold {}", diff.missed.len(), diff.sub_threshold.len());

    let failure = if !diff.sub_threshold.is_empty() {
        Some(format!("{} itemsets below threshold in output", diff.sub_threshold.len()))
    } else if variant == Variant::Covering && !diff.missed.is_empty() {
        Some(format!("covering variant missed {} itemsets", diff.missed.len()))
    } else {
        None
    };
    let mut doc = ReportDocument::new(&report, args.common.timings).with_accounting(&exact);
    doc.comparison = Some(Comparison { diff, miss_rates: rates });
    write_json(args.common.output.as_deref(), &doc)?;
    match failure {
        Some(msg) => Err(Failure::Compare(msg)),
        None => Ok(()),
    }
}

fn bench(args: &BenchArgs) -> Result<(), Failure> {
    let mut rows = Vec::new();
    let mut db = None;
    for &v in &args.variants {
        let config = args.common.config(v.into());
        config.validate()?;
        if db.is_none() {
            db = Some(load_transactions(&args.common.input, Format::Fimi)?);
        }
        let report = lsh_apriori_mine(db.as_ref().expect("loaded above"), &config)?;
        rows.extend(BenchRow::from_report(&report, args.common.timings));
    }
    write_rows(args.common.output.as_deref(), &rows, args.format)
}

fn generate(args: &GenerateArgs) -> Result<(), Failure> {
    let db = generate_synthetic(args.n, args.m, args.density, args.seed)?;
    let mut out = open_output(args.output.as_deref())?;
    db.write_fimi(&mut out)
        .and_then(|_| out.flush())
        .map_err(|e| Failure::Data(e.to_string()))
}
