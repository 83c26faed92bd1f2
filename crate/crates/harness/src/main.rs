use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use rsma_core::{
    evaluate_allocation, optimize, Allocation, ChannelSet, FeasibilitySet, Modes, NetworkConfig, ObjectiveKind,
    OptimizerOptions,
};
use rsma_harness::{
    benchmark_complexity, emit_results, grid, load_config, run_sweep, threads_from_env, write_csv, write_json,
    Format, Scenario, SweepParam, SweepReport, SweepSpec,
};

/// Exit status for any failed trial or audit.
const EXIT_TRIAL: u8 = 2;
/// Exit status for unusable configuration or arguments.
const EXIT_CONFIG: u8 = 3;

#[derive(Parser)]
#[command(name = "rsma", version, about = "Max-min rate / energy-efficiency experiments for RIS-aided RSMA")]
struct Cli {
    #[command(flatten)]
    common: CommonArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// JSON network configuration; takes precedence over --scenario.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, default_value = "scenario1")]
    scenario: Scenario,
    /// Master seed (sweeps) or trial seed (run, audit).
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Overrides the number of elements per RIS.
    #[arg(long, global = true)]
    ris_elements: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = Objective::Rate)]
    objective: Objective,
    #[arg(long, global = true, value_enum, default_value_t = RisSet::Modulus)]
    ris_set: RisSet,
    /// Record zero wall times so repeated runs are byte-identical.
    #[arg(long, global = true)]
    deterministic: bool,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, default_value = "csv")]
    format: Format,
}

#[derive(Clone, Copy, ValueEnum)]
enum Objective {
    Rate,
    Ee,
}

#[derive(Clone, Copy, ValueEnum)]
enum RisSet {
    Disc,
    Modulus,
}

#[derive(Subcommand)]
enum Command {
    /// Optimize one channel realization and print the result.
    Run {
        #[arg(long, default_value = "RSMA")]
        modes: Modes,
    },
    /// Paired Monte Carlo sweep over one parameter.
    Sweep {
        /// P_dB, n, eps, K, N_u or p_c; omit to repeat the base point.
        #[arg(long)]
        param: Option<SweepParam>,
        #[arg(long, value_delimiter = ',')]
        values: Vec<f64>,
        #[arg(long, default_value_t = 20)]
        trials: usize,
        /// Comma-separated modes such as RSMA,TIN,RSMA+NoRIS.
        #[arg(long, value_delimiter = ',', default_value = "RSMA,TIN")]
        modes: Vec<Modes>,
    },
    /// Time single precoder and RIS updates over a size grid.
    Bench {
        #[arg(long, value_delimiter = ',', default_value = "2,3")]
        users: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "2")]
        bs_antennas: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "4,8,16")]
        ris: Vec<usize>,
        #[arg(long, default_value_t = 3)]
        reps: usize,
    },
    /// Re-check an allocation written by `run --out`.
    Audit {
        #[arg(long)]
        alloc: PathBuf,
    },
}

enum Failure {
    Config(anyhow::Error),
    Trial(anyhow::Error),
}

fn config_err(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Config(e.into())
}

impl CommonArgs {
    fn network(&self) -> Result<NetworkConfig, Failure> {
        let mut cfg = match &self.config {
            Some(p) => load_config(p).map_err(config_err)?,
            None => self.scenario.config(),
        };
        if let Some(n) = self.ris_elements {
            cfg.ris_elements = n;
        }
        cfg.feasibility_set = self.feasibility_set();
        cfg.validate().map_err(config_err)?;
        Ok(cfg)
    }

    fn feasibility_set(&self) -> FeasibilitySet {
        match self.ris_set {
            RisSet::Disc => FeasibilitySet::UnitDisc,
            RisSet::Modulus => FeasibilitySet::UnitModulus,
        }
    }

    fn options(&self, modes: Modes) -> OptimizerOptions {
        OptimizerOptions {
            objective_kind: match self.objective {
                Objective::Rate => ObjectiveKind::MaxMinRate,
                Objective::Ee => ObjectiveKind::MaxMinEE,
            },
            ris_set: self.feasibility_set(),
            modes,
            deterministic: self.deterministic,
            ..OptimizerOptions::default()
        }
    }

    fn sink(&self) -> anyhow::Result<Box<dyn Write>> {
        Ok(match &self.out {
            Some(p) => Box::new(std::io::BufWriter::new(
                std::fs::File::create(p).with_context(|| format!("creating {}", p.display()))?,
            )),
            None => Box::new(std::io::stdout().lock()),
        })
    }
}

fn run(common: &CommonArgs, modes: Modes) -> Result<(), Failure> {
    let cfg = common.network()?;
    let opts = common.options(modes);
    let ch = ChannelSet::draw(&cfg, common.seed).map_err(config_err)?;
    let alloc = optimize(&cfg, &ch, &opts, common.seed).map_err(|e| Failure::Trial(e.into()))?;
    let report = evaluate_allocation(&cfg, &ch, &alloc).map_err(|e| Failure::Trial(e.into()))?;
    eprintln!(
        "{modes}: objective {:.6} ({:.6} bits), {} iterations, stop {:?}, {} violations",
        alloc.objective,
        alloc.objective / std::f64::consts::LN_2,
        alloc.trace.iterations(),
        alloc.trace.stop,
        report.violations.len()
    );
    let write = || -> anyhow::Result<()> {
        let mut out = common.sink()?;
        serde_json::to_writer_pretty(&mut out, &alloc)?;
        writeln!(out)?;
        Ok(())
    };
    write().map_err(Failure::Trial)?;
    if report.is_clean() {
        Ok(())
    } else {
        Err(Failure::Trial(anyhow::anyhow!("audit failed: {:?}", report.violations)))
    }
}

fn sweep(common: &CommonArgs, param: Option<SweepParam>, values: Vec<f64>, trials: usize, modes: Vec<Modes>) -> Result<(), Failure> {
    let spec = SweepSpec {
        param,
        values,
        trials,
        modes,
        base: common.network()?,
        master_seed: common.seed,
        options: common.options(Modes::default()),
    };
    spec.point_configs().map_err(config_err)?;
    let out = run_sweep(&spec, threads_from_env()).map_err(Failure::Trial)?;
    for g in &out.summary.gains {
        eprintln!(
            "{} = {}: {} vs {}: {:+.2}% over {} paired trials",
            spec.param.map_or("point", SweepParam::name),
            g.value,
            g.mode,
            g.baseline,
            g.gain_percent,
            g.paired_trials
        );
    }
    let failures = out.failures();
    let report = SweepReport::new(Some(spec), out.rows);
    let emitted = match &common.out {
        Some(p) => emit_results(&report, common.format, p),
        None => (|| {
            let sink = common.sink()?;
            match common.format {
                Format::Csv => write_csv(&report.rows, sink),
                Format::Json => write_json(&report, sink),
            }
        })(),
    };
    emitted.map_err(Failure::Trial)?;
    if failures > 0 {
        return Err(Failure::Trial(anyhow::anyhow!("{failures} trial(s) failed")));
    }
    Ok(())
}

fn bench(common: &CommonArgs, users: &[usize], nbs: &[usize], ris: &[usize], reps: usize) -> Result<(), Failure> {
    let cfg = common.network()?;
    let opts = common.options(Modes::default());
    let report = benchmark_complexity(&cfg, &grid(users, nbs, ris), reps, common.seed, &opts).map_err(Failure::Trial)?;
    let write = || -> anyhow::Result<()> {
        let mut out = common.sink()?;
        serde_json::to_writer_pretty(&mut out, &report)?;
        writeln!(out)?;
        Ok(())
    };
    write().map_err(Failure::Trial)
}

fn audit(common: &CommonArgs, path: &PathBuf) -> Result<(), Failure> {
    let cfg = common.network()?;
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(config_err)?;
    let alloc: Allocation = serde_json::from_str(&text)
        .with_context(|| format!("parsing {}", path.display()))
        .map_err(config_err)?;
    let ch = ChannelSet::draw(&cfg, common.seed).map_err(config_err)?;
    let report = evaluate_allocation(&cfg, &ch, &alloc).map_err(|e| Failure::Trial(e.into()))?;
    let write = || -> anyhow::Result<()> {
        let mut out = common.sink()?;
        serde_json::to_writer_pretty(&mut out, &report)?;
        writeln!(out)?;
        Ok(())
    };
    write().map_err(Failure::Trial)?;
    if report.is_clean() {
        Ok(())
    } else {
        Err(Failure::Trial(anyhow::anyhow!("{} violation(s)", report.violations.len())))
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let c = &cli.common;
    let result = match cli.command {
        Command::Run { modes } => run(c, modes),
        Command::Sweep { param, values, trials, modes } => sweep(c, param, values, trials, modes),
        Command::Bench { users, bs_antennas, ris, reps } => bench(c, &users, &bs_antennas, &ris, reps),
        Command::Audit { alloc } => audit(c, &alloc),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => {
            eprintln!("configuration error: {e:#}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Trial(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_TRIAL)
        }
    }
}
