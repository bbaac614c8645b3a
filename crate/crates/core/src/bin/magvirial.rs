use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use magvirial::io::{self, config::RunConfigFile, scan};
use magvirial::verify::{self, SuiteReport, SUITES};
use magvirial::Error;

#[derive(Parser)]
#[command(name = "magvirial", version, about = "Magnetic NLS/NLW simulator with virial and blow-up diagnostics")]
struct Cli {
    /// Worker threads for scans (defaults to all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Overrides the seed in the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one configuration and write series.csv and summary.json.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (overrides output.dir of the config).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the hypothesis report of the configured potential as JSON.
    Hypotheses {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run an acceptance suite; exit status 0 iff every check passes.
    Verify {
        /// One of the suite names, or "all".
        suite: String,
        /// Also write the report as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run every point of the config's scan grid.
    Scan {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load(path: &PathBuf, seed: Option<u64>) -> Result<RunConfigFile, Error> {
    let mut cfg = io::load_config(path)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn fail(err: Error) -> ExitCode {
    eprintln!("error: {err}");
    ExitCode::from(io::exit_code(&err) as u8)
}

fn print_report(r: &SuiteReport) {
    println!("# suite {}", r.suite);
    println!("criterion\tcheck\tvalue\tlimit\tresult");
    for c in &r.checks {
        println!(
            "{}\t{}\t{:?}\t{:?}\t{}",
            c.criterion,
            c.name,
            c.value,
            c.limit,
            if c.passed { "pass" } else { "fail" }
        );
    }
    if !r.resolution_table.is_empty() {
        println!("points\tdt\twindow_end\tmax_residual\tmax_energy_form_gap");
        for row in &r.resolution_table {
            println!(
                "{}\t{:?}\t{:?}\t{:?}\t{:?}",
                row.points, row.dt, row.window_end, row.max_residual, row.max_energy_form_gap
            );
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(k) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(k).build_global() {
            return fail(Error::Config(format!("cannot configure {k} threads: {e}")));
        }
    }
    match cli.command {
        Command::Run { config, out } => {
            let cfg = match load(&config, cli.seed) {
                Ok(c) => c,
                Err(e) => return fail(e),
            };
            let dir = out.unwrap_or_else(|| cfg.output.dir.clone());
            match io::run_to_dir(&cfg, &dir) {
                Ok(art) => {
                    let s = &art.summary;
                    println!("termination: {}", s.termination);
                    if let Some(t) = s.t_detect {
                        println!("t_detect: {t:?} (uncertainty {:?})", s.report.uncertainty);
                    }
                    for w in &s.report.warnings {
                        eprintln!("warning: {w}");
                    }
                    println!("wrote {}", dir.display());
                    if s.termination == "diverged" {
                        ExitCode::from(1)
                    } else {
                        ExitCode::SUCCESS
                    }
                }
                Err(e) => fail(e),
            }
        }
        Command::Hypotheses { config } => {
            let report = load(&config, cli.seed).and_then(|cfg| io::hypotheses(&cfg));
            match report.and_then(|r| Ok(serde_json::to_string_pretty(&r)?)) {
                Ok(text) => {
                    println!("{text}");
                    ExitCode::SUCCESS
                }
                Err(e) => fail(e),
            }
        }
        Command::Verify { suite, out } => {
            let names: Vec<&str> = if suite == "all" { SUITES.to_vec() } else { vec![suite.as_str()] };
            let mut reports = Vec::new();
            for name in names {
                match verify::run_suite(name) {
                    Ok(r) => {
                        print_report(&r);
                        reports.push(r);
                    }
                    Err(e) => return fail(e),
                }
            }
            if let Some(path) = out {
                let written = serde_json::to_string_pretty(&reports)
                    .map_err(Error::from)
                    .and_then(|t| Ok(std::fs::write(&path, t + "\n")?));
                if let Err(e) = written {
                    return fail(e);
                }
            }
            let ok = reports.iter().all(SuiteReport::passed);
            println!("overall: {}", if ok { "pass" } else { "fail" });
            if ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Command::Scan { config, out } => {
            let cfg = match load(&config, cli.seed) {
                Ok(c) => c,
                Err(e) => return fail(e),
            };
            let dir = out.unwrap_or_else(|| cfg.output.dir.clone());
            match scan::run_scan(&cfg).and_then(|rows| {
                scan::write_scan(&rows, &dir)?;
                Ok(rows.len())
            }) {
                Ok(n) => {
                    println!("{n} grid points written to {}", dir.display());
                    ExitCode::SUCCESS
                }
                Err(e) => fail(e),
            }
        }
    }
}
