use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use heatlqr::harness::{
    run_riccati_study, run_simulation, run_spde_study, ExperimentConfig, ExperimentPlan, SimulationPlan,
};
use heatlqr::Error;

#[derive(Parser)]
#[command(name = "heatlqr", version, about = "Convergence experiments for LQ control of the stochastic heat equation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Temporal or spatial convergence of the Riccati solution at t = 0.
    RiccatiConv(Common),
    /// Coupled strong-convergence study of controlled and uncontrolled paths.
    SpdeConv(Common),
    /// Independent paths at a single resolution.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Write every state of every path as binary records.
        #[arg(long)]
        dump_trajectory: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    paths: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, env = "SPDE_LQR_WORKERS")]
    workers: Option<usize>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

impl Common {
    fn load(&self) -> Result<ExperimentConfig, Error> {
        let mut cfg = ExperimentConfig::from_file(&self.config)?;
        cfg.paths = self.paths.or(cfg.paths);
        cfg.seed = self.seed.or(cfg.seed);
        cfg.workers = self.workers.or(cfg.workers);
        Ok(cfg)
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::RiccatiConv(common) => {
            let report = run_riccati_study(&ExperimentPlan::riccati(&common.load()?)?)?;
            report.summary_lines().iter().for_each(|l| println!("{l}"));
            println!("orders: error {:?}, secondary {:?}", report.order, report.secondary_order);
            report.write(&common.out)
        }
        Command::SpdeConv(common) => {
            let report = run_spde_study(&ExperimentPlan::spde(&common.load()?)?)?;
            report.summary_lines().iter().for_each(|l| println!("{l}"));
            println!("orders: controlled {:?}, uncontrolled {:?}", report.order, report.secondary_order);
            report.write(&common.out)
        }
        Command::Simulate { common, dump_trajectory } => {
            let plan = SimulationPlan::from_config(&common.load()?)?;
            let mut dump = dump_trajectory.map(|p| File::create(p).map(BufWriter::new)).transpose()?;
            let report = run_simulation(&plan, dump.as_mut().map(|w| w as &mut dyn std::io::Write))?;
            for r in &report.rows {
                println!("path {:>4}  |y(T)| {:.6e}  output energy {:.6e}", r.path, r.terminal_norm, r.output_energy);
            }
            report.write(&common.out)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() { 1 } else { 2 })
        }
    }
}
