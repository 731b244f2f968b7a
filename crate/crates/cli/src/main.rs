//! `rbffd` command line driver.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use rbffd::assembly::Discretization;
use rbffd::benchmarks::invariants::run_invariants;
use rbffd::benchmarks::{run_sweep, SWEEP_METRICS};
use rbffd::io::{create_dir, field_table, parse_config, read_text, write_text, RunConfig};
use rbffd::solver::Solver;

#[derive(Parser)]
#[command(name = "rbffd", version, about = "Strong-form RBF-FD elasticity and elasto-plasticity solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured case through its load program.
    Solve(RunArgs),
    /// Run the configured parameter grid.
    Sweep(RunArgs),
    /// Generate and write the node cloud only.
    GenNodes(RunArgs),
    /// Run the quick invariant suite.
    Check(CheckArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `out` in the config. Defaults to `out`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides `seed` in the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; 0 lets the runtime decide.
    #[arg(long, default_value_t = 0)]
    threads: usize,
}

#[derive(Args)]
struct CheckArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 0)]
    threads: usize,
}

type AnyResult<T> = Result<T, Box<dyn std::error::Error>>;

fn set_threads(n: usize) -> AnyResult<()> {
    if n > 0 {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

/// Loads the config, applies command line overrides, creates the output
/// directory and writes the effective config into it.
fn prepare(args: &RunArgs) -> AnyResult<(RunConfig, PathBuf)> {
    set_threads(args.threads)?;
    let mut cfg = parse_config(&read_text(&args.config)?)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    let out = args.out.clone().or_else(|| cfg.out.clone()).unwrap_or_else(|| PathBuf::from("out"));
    cfg.out = Some(out.clone());
    create_dir(&out)?;
    write_text(out.join("config.txt"), &cfg.echo())?;
    Ok((cfg, out))
}

fn solve(args: &RunArgs) -> AnyResult<bool> {
    let (cfg, out) = prepare(args)?;
    let problem = cfg.case.problem(cfg.h, cfg.seed)?;
    write_text(out.join("nodes.txt"), &problem.cloud.to_table())?;
    let disc = Discretization::build(&problem, &cfg.approach)?;
    let program = cfg.case.load_program()?;
    log::info!("{} nodes, {} dofs, {} load steps", disc.n_nodes(), disc.n_dofs(), program.len());
    let mut solver = Solver::new(&problem, &disc, cfg.settings.clone());
    let report = solver.run(&program, |rep, state| {
        log::info!("step {} load {} converged in {} iterations", rep.step, rep.load, rep.iterations);
        write_text(out.join(format!("field_{:04}.txt", rep.step)), &field_table(&disc, state))
    })?;
    write_text(out.join("report.csv"), &report.to_csv())?;
    write_text(out.join("residuals.txt"), &report.to_table())?;
    let ok = report.all_converged() && report.steps.len() == program.len();
    if !ok {
        if let Some(bad) = report.steps.iter().find(|s| !s.converged) {
            eprintln!(
                "step {} (load {}) did not converge after {} iterations{}",
                bad.step,
                bad.load,
                bad.iterations,
                bad.error.as_ref().map(|e| format!(": {e}")).unwrap_or_default()
            );
        }
    }
    println!("{}", out.display());
    Ok(ok)
}

fn sweep(args: &RunArgs) -> AnyResult<bool> {
    let (cfg, out) = prepare(args)?;
    let table = run_sweep(&cfg.sweep_spec())?;
    for metric in SWEEP_METRICS {
        write_text(out.join(format!("sweep_{metric}.csv")), &table.to_csv(metric)?)?;
    }
    write_text(out.join("sweep_slopes.csv"), &table.slopes_csv())?;
    let failed = table.cells.iter().filter(|c| c.error.is_some() || !c.converged).count();
    if failed > 0 {
        eprintln!("{failed} of {} sweep cells failed", table.cells.len());
    }
    println!("{}", out.display());
    Ok(failed == 0)
}

fn gen_nodes(args: &RunArgs) -> AnyResult<bool> {
    let (cfg, out) = prepare(args)?;
    let problem = cfg.case.problem(cfg.h, cfg.seed)?;
    let c = &problem.cloud;
    write_text(out.join("nodes.txt"), &c.to_table())?;
    println!(
        "{} nodes ({} boundary, {} inner boundary), min spacing {:.4e}",
        c.len(),
        c.n_boundary(),
        c.n_inner(),
        c.min_spacing()
    );
    Ok(true)
}

fn check(args: &CheckArgs) -> AnyResult<bool> {
    set_threads(args.threads)?;
    let mut seed = args.seed;
    if let Some(path) = &args.config {
        let cfg = parse_config(&read_text(path)?)?;
        seed = seed.or(Some(cfg.seed));
    }
    let results = run_invariants(seed.unwrap_or(1))?;
    let mut text = String::new();
    for r in &results {
        text.push_str(&format!("{} {}: {}\n", if r.pass { "PASS" } else { "FAIL" }, r.name, r.detail));
    }
    print!("{text}");
    if let Some(out) = &args.out {
        create_dir(out)?;
        write_text(Path::new(out).join("check.txt"), &text)?;
    }
    Ok(results.iter().all(|r| r.pass))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let res = match &cli.command {
        Command::Solve(a) => solve(a),
        Command::Sweep(a) => sweep(a),
        Command::GenNodes(a) => gen_nodes(a),
        Command::Check(a) => check(a),
    };
    match res {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
