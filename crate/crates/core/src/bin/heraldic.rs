use std::fs::{self, File, OpenOptions};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use heraldic::cascade::{
    corrected_metrics_with, run_chain_with, write_records_csv, ChainSpec, OutcomeRecord,
};
use heraldic::ga::{timed, GaConfig, GaEngine, GaState, SearchReport, Telemetry};
use heraldic::genome::Genome;
use heraldic::mesh::{descend_gate, DescentConfig};
use heraldic::render::render;
use heraldic::{
    builtin, DetectorModel, Error, Evaluator, MetricsReport, Scheme, Simulator, TargetGate,
    TargetKind,
};

#[derive(Parser, Debug)]
#[command(
    name = "heraldic",
    version,
    about = "Heralded linear-optical gate simulator and search tools"
)]
struct Cli {
    /// Seed for searches; overrides the seed in a config file.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output format (each command has its own default).
    #[arg(long, global = true, value_enum)]
    output: Option<Format>,

    /// Largest photon number a simulated state may hold.
    #[arg(long, global = true)]
    photon_cap: Option<usize>,

    /// Worker threads.
    #[arg(long, global = true, env = "HERALDIC_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Table,
    Csv,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print fidelity, actuation probability and herald quality of a scheme.
    Evaluate {
        /// Scheme file, or builtin:NAME.
        scheme: String,
        #[arg(long, default_value = "cz")]
        target: TargetKind,
        #[arg(long, default_value = "pnr")]
        detector: DetectorModel,
        /// Add the signal coincidence check to the herald.
        #[arg(long)]
        corrected: bool,
    },
    /// Run a genetic search.
    Search {
        /// GA config (.toml or .json).
        config: PathBuf,
        /// Resume from this file if it exists, and keep it updated.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Where the best scheme is written.
        #[arg(long, default_value = "best_scheme.json")]
        best: PathBuf,
        /// Append telemetry lines here instead of stdout.
        #[arg(long)]
        telemetry: Option<PathBuf>,
        /// Stop after this many generations in this invocation.
        #[arg(long)]
        pause_after: Option<usize>,
        /// Scheme (file or builtin:NAME) placed in the first population; repeatable.
        #[arg(long)]
        initial: Vec<String>,
    },
    /// Gradient descent over a universal mesh.
    Descent {
        config: PathBuf,
        /// Where the best scheme is written.
        #[arg(long)]
        best: Option<PathBuf>,
    },
    /// Propagate a logical input through a chain of gates.
    Chain { chain: PathBuf },
    /// Draw a scheme as text.
    Render { scheme: String },
}

struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            e if e.is_resource_limit() => 3,
            Error::Io(_) => 1,
            _ => 2,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure {
            code: 1,
            message: e.to_string(),
        }
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure {
            code: 1,
            message: e.to_string(),
        }
    }
}

type CliResult<T = ()> = Result<T, Failure>;

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| Failure {
        code: 2,
        message: format!("{}: {e}", path.display()),
    })
}

fn load_scheme(reference: &str) -> CliResult<Scheme> {
    match reference.strip_prefix("builtin:") {
        Some(name) => Ok(builtin(name)?),
        None => Ok(Scheme::from_json(&read(Path::new(reference))?)?),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: &Cli) -> CliResult {
    let sim = match cli.photon_cap {
        Some(cap) => Simulator::new(cap),
        None => Simulator::default(),
    };
    let stdout = io::stdout();
    let mut out = stdout.lock();
    match &cli.command {
        Command::Evaluate {
            scheme,
            target,
            detector,
            corrected,
        } => {
            let s = load_scheme(scheme)?;
            let eval = Evaluator::new(sim);
            let gate = TargetGate::of(*target);
            let report = if *corrected {
                corrected_metrics_with(&s, &gate, *detector, &eval)?
            } else {
                eval.metrics_report(&s, &gate, *detector)?
            };
            print_report(
                &mut out,
                cli.output.unwrap_or(Format::Table),
                s.name.as_deref().unwrap_or(scheme),
                *target,
                &report,
            )?;
        }
        Command::Search {
            config,
            checkpoint,
            best,
            telemetry,
            pause_after,
            initial,
        } => search(
            cli,
            &mut out,
            config,
            checkpoint.as_deref(),
            best,
            telemetry.as_deref(),
            *pause_after,
            initial,
        )?,
        Command::Descent { config, best } => {
            let mut cfg = DescentConfig::from_json(&read(config)?)?;
            if let Some(seed) = cli.seed {
                cfg.seed = seed;
            }
            let report = descend_gate(&cfg)?;
            let format = cli.output.unwrap_or(Format::Json);
            if format == Format::Csv {
                writeln!(out, "restart,iteration,loss,F,P")?;
            }
            for r in &report.restarts {
                for t in &r.trajectory {
                    match format {
                        Format::Json => {
                            #[derive(Serialize)]
                            struct Line<'a> {
                                restart: usize,
                                #[serde(flatten)]
                                point: &'a heraldic::mesh::TrajectoryPoint,
                            }
                            writeln!(
                                out,
                                "{}",
                                serde_json::to_string(&Line {
                                    restart: r.restart,
                                    point: t
                                })?
                            )?;
                        }
                        Format::Csv => writeln!(
                            out,
                            "{},{},{},{},{}",
                            r.restart, t.iteration, t.loss, t.fidelity, t.p
                        )?,
                        Format::Table => writeln!(
                            out,
                            "{:>4} {:>6}  L={:.6e}  F={:.9}  P={:.9}",
                            r.restart, t.iteration, t.loss, t.fidelity, t.p
                        )?,
                    }
                }
            }
            eprintln!(
                "best restart {}: L = {:.6e}, F = {:.9}, P = {:.9}",
                report.best.restart, report.best.loss, report.best.fidelity, report.best.p
            );
            if let Some(path) = best {
                fs::write(path, report.scheme.to_json() + "\n")?;
            }
        }
        Command::Chain { chain } => {
            let spec = ChainSpec::from_json(&read(chain)?)?;
            let records = run_chain_with(&spec, sim)?;
            print_records(&mut out, cli.output.unwrap_or(Format::Csv), &records)?;
        }
        Command::Render { scheme } => {
            let s = load_scheme(scheme)?;
            match cli.output.unwrap_or(Format::Table) {
                Format::Json => writeln!(out, "{}", s.to_json())?,
                _ => write!(out, "{}", render(&s))?,
            }
        }
    }
    out.flush()?;
    Ok(())
}

fn print_report(
    out: &mut impl Write,
    format: Format,
    name: &str,
    target: TargetKind,
    r: &MetricsReport,
) -> CliResult {
    const INPUTS: [&str; 4] = ["00", "01", "10", "11"];
    let opt = |v: Option<f64>| v.map_or_else(|| "undefined".to_string(), |v| format!("{v:.12}"));
    match format {
        Format::Json => writeln!(out, "{}", serde_json::to_string_pretty(r)?)?,
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            let mut header = vec!["fidelity".to_string(), "p".into()];
            header.extend(INPUTS.iter().map(|x| format!("pa_{x}")));
            header.extend(INPUTS.iter().map(|x| format!("pb_{x}")));
            header.extend(["pa_mean", "pb_mean", "detector", "corrected"].map(String::from));
            let mut row = vec![r.fidelity.to_string(), r.p.to_string()];
            row.extend(r.pa.iter().map(f64::to_string));
            row.extend(
                r.pb.iter()
                    .map(|v| v.map_or_else(String::new, |v| v.to_string())),
            );
            row.extend([
                r.pa_mean.to_string(),
                r.pb_mean.map_or_else(String::new, |v| v.to_string()),
                r.detector.to_string(),
                r.corrected.to_string(),
            ]);
            w.write_record(&header)
                .and_then(|_| w.write_record(&row))
                .map_err(io::Error::other)?;
            w.flush()?;
        }
        Format::Table => {
            writeln!(out, "scheme     {name}")?;
            writeln!(
                out,
                "target     {}",
                serde_json::to_value(target)?.as_str().unwrap_or("?")
            )?;
            writeln!(out, "detector   {}", r.detector)?;
            writeln!(out, "corrected  {}", r.corrected)?;
            writeln!(out, "F          {:.12}", r.fidelity)?;
            writeln!(out, "P          {:.12}", r.p)?;
            writeln!(out)?;
            writeln!(out, "input  {:<16} Pb", "Pa")?;
            for (i, x) in INPUTS.iter().enumerate() {
                writeln!(
                    out,
                    "|{x}>   {:<16} {}",
                    format!("{:.12}", r.pa[i]),
                    opt(r.pb[i])
                )?;
            }
            writeln!(
                out,
                "mean   {:<16} {}",
                format!("{:.12}", r.pa_mean),
                opt(r.pb_mean)
            )?;
        }
    }
    Ok(())
}

fn print_records(out: &mut impl Write, format: Format, records: &[OutcomeRecord]) -> CliResult {
    match format {
        Format::Csv => write_records_csv(records, out)?,
        Format::Json => writeln!(out, "{}", serde_json::to_string_pretty(records)?)?,
        Format::Table => {
            writeln!(
                out,
                "{:<24} {:<8} {:>14} {:>14}  flags",
                "ancilla counts", "signal", "probability", "nonlogical"
            )?;
            for r in records {
                let counts = r
                    .ancilla_counts
                    .iter()
                    .map(|c| c.iter().map(u8::to_string).collect::<String>())
                    .collect::<Vec<_>>()
                    .join(" ");
                let signal = r.signal.iter().map(u8::to_string).collect::<String>();
                let mut flags = Vec::new();
                if r.accepted {
                    flags.push("accepted");
                }
                if r.is_false_positive() {
                    flags.push("false-positive");
                }
                writeln!(
                    out,
                    "{counts:<24} {signal:<8} {:>14.6e} {:>14.6e}  {}",
                    r.probability(),
                    r.nonlogical_amplitude.norm_sqr(),
                    flags.join(",")
                )?;
            }
        }
    }
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    config: GaConfig,
    state: GaState,
}

fn load_config(path: &Path) -> CliResult<GaConfig> {
    let text = read(path)?;
    let cfg = match path.extension().and_then(|e| e.to_str()) {
        Some("json") => GaConfig::from_json(&text)?,
        _ => GaConfig::from_toml(&text)?,
    };
    Ok(cfg)
}

#[allow(clippy::too_many_arguments)]
fn search(
    cli: &Cli,
    out: &mut impl Write,
    config: &Path,
    checkpoint: Option<&Path>,
    best: &Path,
    telemetry: Option<&Path>,
    pause_after: Option<usize>,
    initial: &[String],
) -> CliResult {
    let mut cfg = load_config(config)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(cap) = cli.photon_cap {
        cfg.photon_cap = cap;
    }
    let engine = GaEngine::new(cfg)?;
    let mut state = match checkpoint.filter(|p| p.exists()) {
        Some(path) => {
            let saved: Checkpoint = serde_json::from_str(&read(path)?).map_err(|e| Failure {
                code: 2,
                message: format!("{}: {e}", path.display()),
            })?;
            if &saved.config != engine.config() {
                return Err(Failure {
                    code: 2,
                    message: format!(
                        "{}: checkpoint was written for a different configuration",
                        path.display()
                    ),
                });
            }
            saved.state
        }
        None if initial.is_empty() => engine.initial_state(),
        None => {
            let layout = &engine.config().layout;
            let seeds = initial
                .iter()
                .map(|r| Ok(Genome::embed(&load_scheme(r)?, layout)?))
                .collect::<CliResult<Vec<_>>>()?;
            engine.seeded_state(seeds)?
        }
    };

    let mut sink: Box<dyn Write> = match telemetry {
        Some(path) => Box::new(BufWriter::new(
            OpenOptions::new().create(true).append(true).open(path)?,
        )),
        None => Box::new(&mut *out),
    };
    let format = cli.output.unwrap_or(Format::Json);
    if format == Format::Csv && state.generation == 0 {
        writeln!(
            sink,
            "generation,best_fitness,best_fidelity,best_p,best_ever_fitness,wall_time_s"
        )?;
    }
    let mut write_error = None;
    let start = Instant::now();
    let mut emit = timed(start, |t: Telemetry<'_>| {
        let s = t.stats;
        let line = match format {
            Format::Json => serde_json::to_string(&t).expect("telemetry serializes"),
            Format::Csv => format!(
                "{},{},{},{},{},{}",
                s.generation,
                s.best_fitness,
                s.best_fidelity,
                s.best_p,
                s.best_ever_fitness,
                t.wall_time_s
            ),
            Format::Table => format!(
                "gen {:>5}  fitness {:>12.6}  F {:.9}  P {:.9}  {:>8.2}s",
                s.generation, s.best_fitness, s.best_fidelity, s.best_p, t.wall_time_s
            ),
        };
        if let Err(e) = writeln!(sink, "{line}") {
            write_error.get_or_insert(e);
        }
    });

    let mut ran = 0;
    loop {
        if pause_after.is_some_and(|n| ran >= n) {
            break;
        }
        let running = engine.step(&mut state, &mut emit);
        ran += 1;
        if let Some(path) = checkpoint {
            write_checkpoint(path, engine.config(), &state)?;
        }
        if !running {
            break;
        }
    }
    drop(emit);
    if let Some(e) = write_error {
        return Err(e.into());
    }
    sink.flush()?;
    drop(sink);

    let report: SearchReport = engine.report(&state);
    if state.stopped.is_none() {
        eprintln!("paused at generation {}", report.generations);
        return Ok(());
    }
    match &report.best_scheme {
        Some(scheme) => {
            fs::write(best, scheme.to_json() + "\n")?;
            let b = report
                .best
                .as_ref()
                .expect("scheme comes from the best specie");
            eprintln!(
                "{:?} after {} generations: F = {:.9}, P = {:.9}; best scheme written to {}",
                report.stop_reason,
                report.generations,
                b.fidelity,
                b.p,
                best.display()
            );
        }
        None => eprintln!(
            "{:?} after {} generations: no specie passed the fitness threshold",
            report.stop_reason, report.generations
        ),
    }
    Ok(())
}

fn write_checkpoint(path: &Path, config: &GaConfig, state: &GaState) -> CliResult {
    // write then rename, so an interrupted run never leaves a torn checkpoint
    let tmp = path.with_extension("tmp");
    {
        let mut f = BufWriter::new(File::create(&tmp)?);
        #[derive(Serialize)]
        struct CheckpointRef<'a> {
            config: &'a GaConfig,
            state: &'a GaState,
        }
        serde_json::to_writer(&mut f, &CheckpointRef { config, state })?;
        f.flush()?;
    }
    fs::rename(tmp, path)?;
    Ok(())
}
