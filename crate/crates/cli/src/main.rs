use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use bates_cva::bench::{
    format_table, run_table, write_table_csv, ConfigLabel, RunConfig, TableConfig,
};
use bates_cva::cva::{discretize, run_pipeline};
use bates_cva::{price_surface, Exercise, Method};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(
    name = "bates-cva",
    version,
    about = "CVA of vanilla options under the Bates model"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Risk-free price of the configured option.
    Price(RunArgs),
    /// CVA of the configured option with one or more estimators.
    Cva(RunArgs),
    /// Result table over a battery of spots, exercise styles and resolutions.
    Table(TableArgs),
    /// Write a starting configuration file.
    Init(InitArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Run configuration (TOML); defaults to resolution D, S0 = 100, European put.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Estimator; overrides the `methods` list of the configuration.
    #[arg(long, value_enum)]
    method: Option<MethodArg>,
    /// Monte Carlo seed.
    #[arg(long)]
    seed: Option<u64>,
    /// `price`: CSV of the t = 0 price slice. `cva`: exposure profile CSV.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TableArgs {
    /// Table configuration (TOML); defaults to the full benchmark battery.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Restrict the table to one estimator.
    #[arg(long, value_enum)]
    method: Option<MethodArg>,
    #[arg(long)]
    seed: Option<u64>,
    /// CSV output path.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct InitArgs {
    /// Write a table configuration instead of a single run.
    #[arg(long)]
    table: bool,
    #[arg(long, value_enum, default_value = "d")]
    label: LabelArg,
    #[arg(long, default_value_t = 100.0)]
    s0: f64,
    #[arg(long, value_enum, default_value = "european")]
    exercise: ExerciseArg,
    /// Output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    CHtfd,
    HtfdHtmc,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::CHtfd => Method::CHtfd,
            MethodArg::HtfdHtmc => Method::HtfdHtmc,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum LabelArg {
    A,
    B,
    C,
    D,
}

impl From<LabelArg> for ConfigLabel {
    fn from(l: LabelArg) -> Self {
        match l {
            LabelArg::A => ConfigLabel::A,
            LabelArg::B => ConfigLabel::B,
            LabelArg::C => ConfigLabel::C,
            LabelArg::D => ConfigLabel::D,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ExerciseArg {
    European,
    American,
}

impl From<ExerciseArg> for Exercise {
    fn from(e: ExerciseArg) -> Self {
        match e {
            ExerciseArg::European => Exercise::European,
            ExerciseArg::American => Exercise::American,
        }
    }
}

fn load_run_config(args: &RunArgs) -> Result<RunConfig> {
    let mut cfg = match &args.config {
        Some(path) => RunConfig::load(path)
            .with_context(|| format!("reading configuration {}", path.display()))?,
        None => RunConfig::preset(ConfigLabel::D, 100.0, Exercise::European)?,
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(method) = args.method {
        cfg.methods = vec![method.into()];
    }
    Ok(cfg)
}

fn price(args: RunArgs) -> Result<()> {
    let cfg = load_run_config(&args)?;
    let inputs = cfg.inputs();
    let d = discretize(&inputs)?;
    let surface = price_surface(&inputs.params, &inputs.spec, &d.tree, &d.grid, &d.quad)?;
    println!(
        "{} {} S0={} K={} T={} config={}: price {:.6}",
        inputs.spec.exercise,
        format!("{:?}", inputs.spec.kind).to_lowercase(),
        inputs.params.s0,
        inputs.spec.strike,
        inputs.spec.maturity,
        cfg.label,
        surface.price_at_origin()
    );
    if let Some(out) = &args.out {
        surface
            .write_t0_csv_file(out)
            .with_context(|| format!("writing {}", out.display()))?;
    }
    Ok(())
}

fn cva(args: RunArgs) -> Result<()> {
    let cfg = load_run_config(&args)?;
    if cfg.methods.is_empty() {
        bail!("no methods selected: set `methods` in the configuration or pass --method");
    }
    if args.out.is_some() && !cfg.methods.iter().any(|m| m.is_monte_carlo()) {
        bail!("--out writes the Monte Carlo exposure profile and needs --method htfd-htmc");
    }
    let inputs = cfg.inputs();
    for &method in &cfg.methods {
        let run = run_pipeline(method, &inputs)?;
        let r = &run.result;
        match r.ci_halfwidth {
            Some(ci) => println!(
                "{method} config={}: cva {:.6} ± {ci:.6} (price {:.6}, {:.3}s)",
                r.config_label, r.cva, run.price, r.runtime_secs
            ),
            None => println!(
                "{method} config={}: cva {:.6} (price {:.6}, {:.3}s)",
                r.config_label, r.cva, run.price, r.runtime_secs
            ),
        }
        if let (Some(out), Some(profile)) = (&args.out, &run.exposure) {
            profile
                .write_csv_file(out)
                .with_context(|| format!("writing {}", out.display()))?;
        }
    }
    Ok(())
}

fn table(args: TableArgs) -> Result<()> {
    let mut cfg = match &args.config {
        Some(path) => TableConfig::load(path)
            .with_context(|| format!("reading configuration {}", path.display()))?,
        None => TableConfig::benchmark_battery(),
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(method) = args.method {
        cfg.methods = vec![method.into()];
    }
    let rows = run_table(&cfg.expand()?)?;
    print!("{}", format_table(&rows));
    if let Some(out) = &args.out {
        let file =
            std::fs::File::create(out).with_context(|| format!("creating {}", out.display()))?;
        write_table_csv(&rows, std::io::BufWriter::new(file))?;
    }
    Ok(())
}

fn init(args: InitArgs) -> Result<()> {
    let text = if args.table {
        TableConfig::benchmark_battery().to_toml_string()?
    } else {
        RunConfig::preset(args.label.into(), args.s0, args.exercise.into())?.to_toml_string()?
    };
    match &args.out {
        Some(out) => {
            std::fs::write(out, text).with_context(|| format!("writing {}", out.display()))?
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Price(args) => price(args),
        Command::Cva(args) => cva(args),
        Command::Table(args) => table(args),
        Command::Init(args) => init(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
