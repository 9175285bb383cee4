use anyhow::Context;
use clap::{Parser, Subcommand};
use interact::config::{apply_override, config_tree, finish, load_config, load_json_file, merge_strict, Preset};
use interact::error::{CliError, CliResult};
use interact::plot::{load_series, render_svg, PlotKind};
use interact::sweep::{run_sweep, SweepSpec};
use interact::verify::{self, Report};
use interact::{output_root, runner};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use ulenv::turing::{binary_counter, TuringMachineSpec};

/// Interactivity-seeking agents and universal-local environments.
#[derive(Parser, Debug)]
#[command(name = "interact", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one experiment and write metrics.csv, checkpoint.json and manifest.json.
    Run {
        /// JSON config laid over the preset.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Preset::Desk)]
        preset: Preset,
        /// Output root; defaults to $INTERACT_OUT, then ./runs.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Run directory name under the output root.
        #[arg(long)]
        name: Option<String>,
        /// `dotted.key=value` config overrides.
        overrides: Vec<String>,
    },
    /// Run the Cartesian product of widths, depths, activations and seeds.
    Sweep {
        /// JSON sweep spec with `widths`, `depths`, `activations`, `seeds` and optional `base`.
        grid: PathBuf,
        #[arg(long, value_enum, default_value_t = Preset::Desk)]
        preset: Preset,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value = "sweep")]
        name: String,
        /// Worker threads.
        #[arg(long, default_value_t = 1)]
        workers: usize,
        overrides: Vec<String>,
    },
    /// Draw metrics CSVs as an SVG line plot.
    Plot {
        csvs: Vec<PathBuf>,
        #[arg(long, value_enum, default_value_t = PlotKind::Interactivity)]
        kind: PlotKind,
        /// Column plotted by the interactivity kind.
        #[arg(long, default_value = "smoothed")]
        column: String,
        #[arg(long, short)]
        output: PathBuf,
    },
    /// Compare the policy meta-gradient with central finite differences.
    GradCheck {
        #[arg(long, default_value_t = 100)]
        cases: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1e-4)]
        tolerance: f64,
        #[arg(long, default_value_t = 1e-5)]
        step: f64,
    },
    /// Replay the bundled reference glider frames, or step a pattern file.
    Life {
        /// Pattern file (coordinate list or RLE). Without it the stored frames are replayed.
        #[arg(long)]
        pattern: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        steps: usize,
        /// Print the result as RLE instead of coordinates.
        #[arg(long)]
        rle: bool,
    },
    /// Check a Turing machine's Markov encoding against direct simulation.
    Tm {
        /// JSON machine spec; defaults to the binary counter.
        #[arg(long)]
        spec: Option<PathBuf>,
        /// Input tape, one character per symbol.
        #[arg(long, default_value = "1011")]
        input: String,
        #[arg(long, default_value_t = 200)]
        steps: usize,
    },
    /// Randomised locality and automaton/POMDP equivalence checks.
    Verify {
        #[command(subcommand)]
        what: VerifyCommand,
    },
}

#[derive(Subcommand, Debug)]
enum VerifyCommand {
    Locality {
        /// Horizons to check.
        #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
        k: Vec<usize>,
        #[arg(long, default_value_t = 10_000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Withhold one cell from the claimed boundary.
        #[arg(long)]
        shrink: bool,
    },
    Pomdp {
        #[arg(long, default_value_t = 20)]
        automata: usize,
        #[arg(long, default_value_t = 100)]
        steps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Let every automaton read the hidden environment cell.
        #[arg(long)]
        secret_reader: bool,
    },
    /// Locality at k = 1..3 and POMDP equivalence with default sizes.
    All {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn print_reports(reports: &[Report]) -> CliResult<()> {
    let mut failed = Vec::new();
    for r in reports {
        println!("{}", r.line());
        if !r.passed {
            if !r.payload.is_null() {
                println!("{}", r.payload);
            }
            failed.push(r.check.clone());
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::verification(anyhow::anyhow!("failed: {}", failed.join(", "))))
    }
}

fn cmd_run(config: Option<&Path>, preset: Preset, out: Option<&Path>, name: Option<String>, overrides: &[String]) -> CliResult<()> {
    let cfg = load_config(preset, config, overrides).map_err(CliError::usage)?;
    let dir = output_root(out).join(name.unwrap_or_else(|| format!("run-s{}", cfg.seed)));
    let art = runner::run_to_dir(&cfg, &dir, &std::env::args().collect::<Vec<_>>().join(" "))?;
    println!("wrote {} records to {}", art.outcome.records.len(), dir.display());
    match art.outcome.error {
        Some(e) => Err(CliError::diverged(e)),
        None => Ok(()),
    }
}

fn cmd_sweep(grid: &Path, preset: Preset, out: Option<&Path>, name: &str, workers: usize, overrides: &[String]) -> CliResult<()> {
    let spec: SweepSpec = serde_json::from_value(load_json_file(grid).map_err(CliError::usage)?)
        .with_context(|| format!("reading sweep spec {}", grid.display()))?;
    let mut tree = config_tree(preset);
    if !spec.base.is_null() {
        merge_strict(&mut tree, &spec.base, "").map_err(CliError::usage)?;
    }
    for o in overrides {
        apply_override(&mut tree, o).map_err(CliError::usage)?;
    }
    let base = finish(tree).map_err(CliError::usage)?;
    let root = output_root(out).join(name);
    let report = run_sweep(&base, &spec, &root, workers)?;
    print!("{}", report.means);
    let bad = report.results.iter().filter(|r| r.final_window.is_none()).count();
    if bad > 0 {
        eprintln!("{bad} of {} cells did not finish; see {}", report.results.len(), root.join(interact::sweep::SUMMARY_FILE).display());
    }
    Ok(())
}

fn cmd_plot(csvs: &[PathBuf], kind: PlotKind, column: &str, output: &Path) -> CliResult<()> {
    if csvs.is_empty() {
        return Err(CliError::usage(anyhow::anyhow!("no CSV files given")));
    }
    let paths: Vec<&Path> = csvs.iter().map(PathBuf::as_path).collect();
    let series = load_series(&paths, kind, column).map_err(CliError::usage)?;
    let title = match kind {
        PlotKind::Interactivity => format!("interactivity ({column})"),
        PlotKind::Actions => "action components".to_string(),
    };
    std::fs::write(output, render_svg(&series, &title)).with_context(|| format!("writing {}", output.display()))?;
    println!("wrote {} series to {}", series.len(), output.display());
    Ok(())
}

fn cmd_life(pattern: Option<&Path>, steps: usize, rle: bool) -> CliResult<()> {
    let Some(path) = pattern else {
        return print_reports(&[verify::life_replay()]);
    };
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut state = ulenv::pattern::parse_pattern(&text).map_err(CliError::usage)?;
    for _ in 0..steps {
        state = ulenv::life_step(&state);
    }
    if rle {
        print!("{}", ulenv::pattern::write_rle(&state));
    } else {
        print!("{}", ulenv::pattern::write_coordinates(&state));
    }
    Ok(())
}

fn cmd_tm(spec: Option<&Path>, input: &str, steps: usize) -> CliResult<()> {
    let spec: TuringMachineSpec = match spec {
        None => binary_counter(),
        Some(p) => serde_json::from_value(load_json_file(p).map_err(CliError::usage)?)
            .with_context(|| format!("reading machine {}", p.display()))?,
    };
    let symbols: Vec<String> = input.chars().map(String::from).collect();
    let tape: Vec<&str> = symbols.iter().map(String::as_str).collect();
    print_reports(&[verify::tm_equivalence(spec, &tape, steps)])
}

fn dispatch(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Run { config, preset, out, name, overrides } => cmd_run(config.as_deref(), preset, out.as_deref(), name, &overrides),
        Command::Sweep { grid, preset, out, name, workers, overrides } => {
            cmd_sweep(&grid, preset, out.as_deref(), &name, workers, &overrides)
        }
        Command::Plot { csvs, kind, column, output } => cmd_plot(&csvs, kind, &column, &output),
        Command::GradCheck { cases, seed, tolerance, step } => print_reports(&[verify::grad_check(cases, seed, tolerance, step)]),
        Command::Life { pattern, steps, rle } => cmd_life(pattern.as_deref(), steps, rle),
        Command::Tm { spec, input, steps } => cmd_tm(spec.as_deref(), &input, steps),
        Command::Verify { what } => match what {
            VerifyCommand::Locality { k, trials, seed, shrink } => {
                print_reports(&k.iter().map(|&k| verify::locality(k, trials, seed + k as u64, shrink)).collect::<Vec<_>>())
            }
            VerifyCommand::Pomdp { automata, steps, seed, secret_reader } => {
                print_reports(&[verify::pomdp(automata, steps, seed, secret_reader)])
            }
            VerifyCommand::All { seed } => {
                let mut reports: Vec<Report> = (1..=3).map(|k| verify::locality(k, 10_000, seed + k as u64, false)).collect();
                reports.push(verify::pomdp(20, 100, seed, false));
                print_reports(&reports)
            }
        },
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
