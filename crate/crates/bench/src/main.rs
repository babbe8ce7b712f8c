use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use harmonia_bench::checks::quick_suite;
use harmonia_bench::run::scenario_oracle;
use harmonia_bench::{collect_runs, run, BenchError, Oracle, Preset, RunConfig, Scenario, ScenarioId, Table};
use harmonia_core::losses::Method;

#[derive(Parser)]
#[command(name = "harmonia", version, about = "Harmonic network benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one method on one scenario and score it against the oracle.
    Run(RunArgs),
    /// Summarise every run found under a directory.
    Table {
        #[arg(long)]
        out: PathBuf,
        /// Multiply printed values by 100.
        #[arg(long)]
        scale100: bool,
    },
    /// Solve a scenario's reference field and write it out.
    Oracle {
        #[arg(long)]
        scenario: String,
        /// Grid spacing; must divide the domain extents.
        #[arg(long)]
        h: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the quick invariant suite.
    Check,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, required_unless_present = "config")]
    scenario: Option<String>,
    #[arg(long, required_unless_present = "config")]
    method: Option<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, conflicts_with = "paper")]
    fast: bool,
    #[arg(long)]
    paper: bool,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON run configuration; command-line flags are ignored when given.
    #[arg(long)]
    config: Option<PathBuf>,
}

fn run_command(args: RunArgs) -> Result<(), BenchError> {
    let cfg = match &args.config {
        Some(path) => RunConfig::from_json(&std::fs::read_to_string(path)?)?,
        None => {
            let preset = if args.paper { Preset::Paper } else { Preset::Fast };
            let scenario: ScenarioId = args.scenario.as_deref().unwrap_or_default().parse()?;
            let method: Method = args.method.as_deref().unwrap_or_default().parse()?;
            let mut cfg = RunConfig::new(scenario, method, args.seed, preset);
            cfg.epochs = args.epochs;
            cfg.validate()?;
            cfg
        }
    };
    let r = run(&cfg, args.out.as_deref())?;
    println!(
        "{} {} seed {}: rmse {:.6e}  paper_mae {:.6e}  E|lap| {:.6e}  loss {:.6e}  ({:.1}s)",
        r.scenario, r.method, r.seed, r.rmse, r.paper_mae, r.mean_abs_laplacian, r.final_loss.total, r.wall_time_s
    );
    if let Some(j) = r.interface_jump {
        println!("max interface jump {j:.3e}");
    }
    for (k, p) in r.paths.iter().enumerate() {
        match (&p.path, &p.error) {
            (Some(path), _) => {
                let end = path.end();
                println!(
                    "path {k} from ({:.2}, {:.2}): {:?} at ({:.4}, {:.4}) after {} steps",
                    p.start[0],
                    p.start[1],
                    path.termination,
                    end[0],
                    end[1],
                    path.points.len() - 1
                );
            }
            (None, e) => println!("path {k}: {}", e.as_deref().unwrap_or("failed")),
        }
    }
    for f in &r.files {
        println!("wrote {}", f.display());
    }
    Ok(())
}

fn oracle_command(scenario: &str, h: f64, out: PathBuf) -> Result<(), BenchError> {
    let scenario = Scenario::build(scenario.parse()?, Preset::Fast)?;
    let (lo, hi) = scenario.problem.domain.bounding_box();
    let extent = (0..lo.len()).map(|k| hi[k] - lo[k]).fold(0.0, f64::max);
    if !(h > 0.0 && h < extent) {
        return Err(BenchError::Config(format!(
            "spacing must lie in (0, {extent}), got {h}"
        )));
    }
    let cells = (extent / h).round() as usize;
    let grid = match scenario_oracle(&scenario, Some(cells))?.as_ref() {
        Oracle::Grid(g) => g.clone(),
        Oracle::AnalyticBox => {
            let mut g =
                harmonia_core::oracle::FieldGrid::new(lo.clone(), extent / cells as f64, vec![cells + 1; lo.len()])?;
            for idx in 0..g.len() {
                let x = g.node(idx);
                g.values[idx] = harmonia_core::oracle::analytic_box(x[0], x[1]);
            }
            g
        }
    };
    std::fs::create_dir_all(&out)?;
    let text = out.join("oracle_fieldgrid.txt");
    std::fs::write(&text, grid.to_text())?;
    let csv = out.join("oracle_field.csv");
    std::fs::write(&csv, grid.to_csv())?;
    println!("wrote {} and {}", text.display(), csv.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run(args) => run_command(args),
        Command::Table { out, scale100 } => collect_runs(&out).and_then(|records| {
            if records.is_empty() {
                return Err(BenchError::Config(format!("no metrics.csv under {}", out.display())));
            }
            let table = Table::from_records(&records);
            print!("{}", table.render(scale100));
            let path = out.join("table.csv");
            std::fs::write(&path, table.to_csv())?;
            println!("wrote {}", path.display());
            Ok(())
        }),
        Command::Oracle { scenario, h, out } => oracle_command(&scenario, h, out),
        Command::Check => quick_suite().map(|outcomes| {
            let failed = outcomes.iter().filter(|o| !o.passed).count();
            for o in &outcomes {
                println!("{}", o.line());
            }
            if failed > 0 {
                eprintln!("{failed} check(s) failed");
                std::process::exit(1);
            }
        }),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
