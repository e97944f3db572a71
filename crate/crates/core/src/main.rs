use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use hydrolattice::harness::{
    run, validate_reductions, write_outputs, ComparisonReport, ExperimentSpec, Mode, SnapshotFormat,
};

#[derive(Parser)]
#[command(name = "hydrolattice", version, about = "Lattice fluid in an external potential: micro ensembles, continuum solves and their comparison")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Output directory (defaults to the spec's `output.dir`, then `out/<name>`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Master seed; overrides the spec.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for ensemble members (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a spec file.
    Run {
        spec: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Run a spec file as a micro against continuum comparison.
    Compare {
        spec: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Fit the scaling exponents of the remainder bounds.
    Bounds {
        #[command(flatten)]
        common: Common,
    },
    /// Check the zero-field and at-rest reductions on random smooth states.
    ReduceCheck {
        #[arg(long, default_value_t = 50)]
        trials: usize,
        #[command(flatten)]
        common: Common,
    },
}

fn init_threads(n: Option<usize>) -> Result<()> {
    if let Some(n) = n {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    Ok(())
}

fn print_report(r: &ComparisonReport, dir: &Path) {
    for c in &r.checks {
        let tag = if c.passed { "PASS" } else { "FAIL" };
        println!("{tag} {:<24} {:.3e} (tolerance {:.3e})", c.name, c.value, c.tolerance);
    }
    if let Some(rows) = &r.bounds {
        println!("{:<4} {:>7} {:>5} {:>11} {:>11} {:>6}", "", "order", "log", "slope", "slope(log)", "prefer");
        for b in rows {
            println!(
                "{:<4?} {:>7.1} {:>5} {:>11.4} {:>11.4} {:>6}",
                b.which,
                b.claimed_order,
                b.claimed_log,
                b.slope_plain,
                b.slope_log,
                if b.log_preferred { "log" } else { "plain" }
            );
        }
    }
    if let Some(c) = &r.comparison {
        for s in &c.sweep {
            println!("ensemble {:>6}: L2(rho) = {:.4}", s.ensemble, s.l2_rho);
        }
    }
    println!("{} -> {}", if r.passed { "passed" } else { "FAILED" }, dir.display());
}

fn run_spec(path: &Path, common: &Common, force_compare: bool) -> Result<bool> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut spec = ExperimentSpec::from_toml(&text)?;
    if force_compare {
        spec.mode = Mode::Compare;
    }
    if let Some(s) = common.seed {
        spec.seed = Some(s);
    }
    let dir = common
        .out
        .clone()
        .or_else(|| spec.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out").join(&spec.name));
    let output = run(&spec)?;
    write_outputs(&output, spec.snapshots, &dir)?;
    print_report(&output.report, &dir);
    Ok(output.report.passed)
}

fn execute(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Run { spec, common } => {
            init_threads(common.threads)?;
            run_spec(&spec, &common, false)
        }
        Command::Compare { spec, common } => {
            init_threads(common.threads)?;
            run_spec(&spec, &common, true)
        }
        Command::Bounds { common } => {
            init_threads(common.threads)?;
            let spec = ExperimentSpec::from_toml("name = \"bounds\"\nmode = \"bounds\"\n")?;
            let dir = common.out.unwrap_or_else(|| PathBuf::from("out/bounds"));
            let output = run(&spec)?;
            write_outputs(&output, SnapshotFormat::Both, &dir)?;
            print_report(&output.report, &dir);
            Ok(output.report.passed)
        }
        Command::ReduceCheck { trials, common } => {
            init_threads(common.threads)?;
            let r = validate_reductions(trials, common.seed.unwrap_or(0))?;
            let dir = common.out.unwrap_or_else(|| PathBuf::from("out/reduce-check"));
            fs::create_dir_all(&dir)?;
            fs::write(dir.join("report.json"), serde_json::to_string_pretty(&r)? + "\n")?;
            for (name, id) in [("zero field", r.zero_field), ("at rest", r.at_rest)] {
                println!(
                    "{} {name}: {}/{} exact, max |difference| {:e}",
                    if id.passed() { "PASS" } else { "FAIL" },
                    id.exact,
                    id.trials,
                    id.max_abs_difference
                );
            }
            Ok(r.passed)
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
