use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use opcgame::analysis;
use opcgame::experiment::{self, ExperimentFile, ExperimentSpec, Manifest, Preset, DEFAULT_POWER_BUDGET, DEFAULT_PRICE, DEFAULT_VARSIGMA};
use opcgame::{Error, Result, Scenario};

/// Game-theoretic power control experiments.
#[derive(Debug, Parser)]
#[command(name = "opcgame", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a preset (or a JSON experiment config) over a seed ensemble.
    ///
    /// Flags override config-file fields, which override preset defaults.
    Run {
        /// Preset name or path to a JSON config.
        target: String,
        /// First seed. Alone, runs only this seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Number of consecutive seeds starting at --seed (default 0).
        #[arg(long)]
        seeds: Option<usize>,
        /// Channel-scaling steps after step 0.
        #[arg(long)]
        steps: Option<usize>,
        /// Per-step factor on the target user's direct gains.
        #[arg(long)]
        step_factor: Option<f64>,
        /// Output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the condition matrices and verdicts for a scenario file as JSON.
    Analyze {
        scenario: PathBuf,
        /// Weighted-power bound used for every user.
        #[arg(long, default_value_t = DEFAULT_VARSIGMA)]
        varsigma: f64,
        /// Power budget used for every user.
        #[arg(long, default_value_t = DEFAULT_POWER_BUDGET)]
        budget: f64,
        /// Interference price used for every user.
        #[arg(long, default_value_t = DEFAULT_PRICE)]
        price: f64,
        /// Write the report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Signed per-step percentage differences of run A relative to run B.
    ///
    /// Both arguments are scheme CSVs written by `run`.
    Compare {
        run_a: PathBuf,
        run_b: PathBuf,
        /// Write the comparison CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn resolve_spec(target: &str, seed: Option<u64>, seeds: Option<usize>, steps: Option<usize>, step_factor: Option<f64>, out: Option<PathBuf>) -> Result<ExperimentSpec> {
    let path = Path::new(target);
    let mut spec = if target.ends_with(".json") || path.is_file() {
        let base = path.parent().unwrap_or(Path::new("."));
        ExperimentSpec::from_file(ExperimentFile::load(path)?, base)?
    } else {
        ExperimentSpec::preset(target.parse::<Preset>()?)
    };
    match (seed, seeds) {
        (Some(s), None) => spec.seeds = vec![s],
        (start, Some(k)) => {
            let start = start.unwrap_or(0);
            spec.seeds = (0..k as u64).map(|i| start + i).collect();
        }
        (None, None) => {}
    }
    if let Some(s) = steps {
        spec.steps = s;
    }
    if let Some(f) = step_factor {
        spec.step_factor = f;
    }
    if let Some(o) = out {
        spec.out = o;
    }
    Ok(spec)
}

fn print_summary(manifest: &Manifest) {
    let out = &manifest.config.out;
    println!("wrote {}", out.join("manifest.json").display());
    println!(
        "{} seeds, {}/{} runs converged",
        manifest.seeds.len(),
        manifest.converged_runs,
        manifest.runs
    );
    if let Some(f) = manifest.first_user_below_last_fraction {
        println!("first user below last user in power: {:.0}% of seeds", f * 100.0);
    }
    for s in &manifest.summaries {
        println!("{} vs {} (median [q1, q3] %):", s.a, s.b);
        for st in &s.steps {
            println!(
                "  step {:>2}: power {:+.2} [{:+.2}, {:+.2}]  rate {:+.2} [{:+.2}, {:+.2}]",
                st.step,
                st.power_gap_pct.median,
                st.power_gap_pct.q1,
                st.power_gap_pct.q3,
                st.rate_gap_pct.median,
                st.rate_gap_pct.q1,
                st.rate_gap_pct.q3
            );
        }
    }
}

fn write_output(out: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, bytes).map_err(|e| Error::Io {
            path: p.to_path_buf(),
            source: e,
        }),
        None => std::io::stdout().write_all(bytes).map_err(|e| Error::Io {
            path: PathBuf::from("<stdout>"),
            source: e,
        }),
    }
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run {
            target,
            seed,
            seeds,
            steps,
            step_factor,
            out,
        } => {
            let spec = resolve_spec(&target, seed, seeds, steps, step_factor, out)?;
            let manifest = experiment::run_experiment(&spec)?;
            print_summary(&manifest);
        }
        Command::Analyze {
            scenario,
            varsigma,
            budget,
            price,
            out,
        } => {
            let sc = Scenario::load(&scenario)?;
            let m = sc.users();
            let report = analysis::analyze(&sc, &vec![varsigma; m], &vec![budget; m], &vec![price; m])?;
            let mut text = serde_json::to_string_pretty(&report).expect("report serializes");
            text.push('\n');
            write_output(out.as_deref(), text.as_bytes())?;
        }
        Command::Compare { run_a, run_b, out } => {
            let a = experiment::step_totals(&experiment::read_csv(&run_a)?);
            let b = experiment::step_totals(&experiment::read_csv(&run_b)?);
            let rows = experiment::compare_schemes(&a, &b)?;
            let mut buf = Vec::new();
            experiment::write_comparison(&mut buf, &rows).map_err(|source| Error::Csv {
                path: PathBuf::from("<comparison>"),
                source,
            })?;
            write_output(out.as_deref(), &buf)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("opcgame: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
