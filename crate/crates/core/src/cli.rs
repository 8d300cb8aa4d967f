//! Command-line front end: resolves a scenario and plan, runs one
//! experiment, writes CSVs plus a manifest into the output directory.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::beamform::{write_pattern_csv, BeamMethod};
use crate::harness::{
    pooled_pilots, run_beampatterns, run_ber, run_neuron_sweep, run_scenarios, with_thread_pool, write_ber_csv,
    write_sweep_csv, write_table1_csv, Experiment, HarnessError, Manifest, Method, Table1Row, MANIFEST_FILE,
};
use crate::neuralnet::{train_bayesian_lm, write_model, Dataset, MlpParams};
use crate::sigmodel::{presets, ScenarioFile};

/// Exit status for bad flags, values or missing inputs.
pub const EXIT_USAGE: i32 = 2;
/// Exit status for failures while running or writing outputs.
pub const EXIT_RUNTIME: i32 = 1;

#[derive(Parser, Debug)]
#[command(name = "fdxsic", version, about = "Self-interference cancellation experiments for full-duplex arrays")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// BER against SNR for each receiver (ber.csv)
    Ber(Common),
    /// Beam patterns on a 1° grid (pattern.csv)
    Beampattern(Common),
    /// Validation MSE against hidden-layer width (sweep.csv)
    SweepNeurons {
        #[command(flatten)]
        common: Common,
        /// Widths as a range "1:10" or a list "1,2,4"
        #[arg(long, default_value = "1:10")]
        widths: String,
    },
    /// Train the equalizer once per scenario (table1.csv)
    Scenarios(Common),
    /// Train one equalizer and save it (model.txt, train_report.json)
    Train(Common),
    /// Repeat the run recorded in a manifest
    Replay {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

#[derive(Args, Debug)]
struct Common {
    /// Preset name (epa, s1 … s6) or scenario file; `scenarios` takes a
    /// comma list and defaults to every preset
    #[arg(long)]
    scenario: Option<String>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Per-antenna SNR points in dB: "a,b,c" or "start:stop:step"
    #[arg(long, allow_hyphen_values = true)]
    snr: Option<String>,
    #[arg(long)]
    blocks: Option<usize>,
    /// Comma list of receivers
    #[arg(long)]
    methods: Option<String>,
    /// Dotted override applied after the other flags, e.g. plan.restarts=3
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Runtime(String),
}

impl From<HarnessError> for CliError {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::InvalidPlan(m) => CliError::Usage(m),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

/// Parses `argv` (program name first), runs the command and returns the
/// process exit code.
pub fn parse_and_dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let recorded: Vec<String> = argv.iter().skip(1).map(|a| a.to_string_lossy().into_owned()).collect();
    let outcome = with_thread_pool(|| dispatch(cli.command, &recorded)).map_err(CliError::from).and_then(|r| r);
    match outcome {
        Ok(()) => 0,
        Err(CliError::Usage(m)) => {
            eprintln!("error: {m}");
            EXIT_USAGE
        }
        Err(CliError::Runtime(m)) => {
            eprintln!("error: {m}");
            EXIT_RUNTIME
        }
    }
}

/// What a resolved invocation runs; shared by fresh runs and replays.
struct Job {
    command: &'static str,
    config: Experiment,
    widths: Option<Vec<usize>>,
    scenarios: Option<Vec<ScenarioFile>>,
}

fn dispatch(command: Command, argv: &[String]) -> Result<(), CliError> {
    let (job, out) = match command {
        Command::Ber(c) => resolve("ber", c, None)?,
        Command::Beampattern(c) => resolve("beampattern", c, None)?,
        Command::SweepNeurons { common, widths } => {
            let widths = parse_widths(&widths)?;
            resolve("sweep-neurons", common, Some(widths))?
        }
        Command::Scenarios(c) => resolve("scenarios", c, None)?,
        Command::Train(c) => resolve("train", c, None)?,
        Command::Replay { manifest, out } => {
            let m = Manifest::read(&manifest).map_err(|e| CliError::Usage(format!("--manifest: {e}")))?;
            let command = ["ber", "beampattern", "sweep-neurons", "scenarios", "train"]
                .into_iter()
                .find(|c| *c == m.command)
                .ok_or_else(|| CliError::Usage(format!("--manifest: unknown command '{}'", m.command)))?;
            let job = Job {
                command,
                config: m.config,
                widths: m.widths,
                scenarios: m.scenarios,
            };
            (job, out)
        }
    };
    run(&job, &out, argv)
}

fn resolve(command: &'static str, c: Common, widths: Option<Vec<usize>>) -> Result<(Job, PathBuf), CliError> {
    let (first, scenarios) = if command == "scenarios" {
        let setups = match &c.scenario {
            None => presets(),
            Some(list) => list.split(',').map(|s| load_scenario(s.trim())).collect::<Result<_, _>>()?,
        };
        (setups[0].clone(), Some(setups))
    } else {
        let name = c
            .scenario
            .as_deref()
            .ok_or_else(|| CliError::Usage("missing required flag --scenario".into()))?;
        (load_scenario(name)?, None)
    };

    let mut config = Experiment::new(first);
    config.plan.seed = c.seed;
    if command == "beampattern" {
        config.plan.methods = BeamMethod::ALL.iter().map(|b| b.as_str().parse().expect("beam method")).collect();
    }
    if let Some(snr) = &c.snr {
        let points = parse_snr(snr)?;
        if command == "sweep-neurons" {
            match points.as_slice() {
                [one] => config.plan.sweep_snr_db = Some(*one),
                _ => return Err(CliError::Usage("--snr: sweep-neurons takes a single SNR".into())),
            }
        } else {
            config.plan.snr_db = points;
        }
    }
    if let Some(b) = c.blocks {
        config.plan.blocks = b;
    }
    if let Some(m) = &c.methods {
        config.plan.methods = m
            .split(',')
            .map(|s| s.trim().parse::<Method>().map_err(|e| CliError::Usage(format!("--methods: {e}"))))
            .collect::<Result<_, _>>()?;
    }
    for kv in &c.set {
        config = apply_override(&config, kv)?;
    }
    config.validate().map_err(|e| CliError::Usage(format!("invalid configuration: {e}")))?;
    if command == "beampattern" {
        beam_methods(&config)?;
    }
    Ok((
        Job {
            command,
            config,
            widths,
            scenarios,
        },
        c.out,
    ))
}

fn load_scenario(name: &str) -> Result<ScenarioFile, CliError> {
    ScenarioFile::resolve(name).map_err(|e| CliError::Usage(format!("--scenario {name}: {e}")))
}

fn beam_methods(config: &Experiment) -> Result<Vec<BeamMethod>, CliError> {
    config
        .plan
        .methods
        .iter()
        .map(|m| {
            m.beam_method()
                .ok_or_else(|| CliError::Usage(format!("--methods: '{m}' has no beam pattern")))
        })
        .collect()
}

fn parse_snr(text: &str) -> Result<Vec<f64>, CliError> {
    let bad = || CliError::Usage(format!("--snr: cannot parse '{text}'"));
    let nums = |sep: char| -> Result<Vec<f64>, CliError> {
        text.split(sep).map(|s| s.trim().parse::<f64>().map_err(|_| bad())).collect()
    };
    if text.contains(':') {
        let v = nums(':')?;
        let [start, stop, step] = v[..] else { return Err(bad()) };
        if !(step > 0.0) || stop < start {
            return Err(bad());
        }
        let n = ((stop - start) / step + 1e-9).floor() as usize;
        Ok((0..=n).map(|i| start + i as f64 * step).collect())
    } else {
        nums(',')
    }
}

fn parse_widths(text: &str) -> Result<Vec<usize>, CliError> {
    let bad = || CliError::Usage(format!("--widths: cannot parse '{text}'"));
    let int = |s: &str| s.trim().parse::<usize>().map_err(|_| bad());
    let widths: Vec<usize> = match text.split_once(':') {
        Some((a, b)) => {
            let (a, b) = (int(a)?, int(b)?);
            if a > b {
                return Err(bad());
            }
            (a..=b).collect()
        }
        None => text.split(',').map(int).collect::<Result<_, _>>()?,
    };
    if widths.is_empty() || widths.contains(&0) {
        return Err(CliError::Usage("--widths: widths must be positive".into()));
    }
    Ok(widths)
}

/// Applies `table.key=value` to the serialized configuration. The value is
/// read as a TOML literal, or as a bare string if it is not one.
fn apply_override(config: &Experiment, kv: &str) -> Result<Experiment, CliError> {
    let bad = |m: String| CliError::Usage(format!("--set {kv}: {m}"));
    let (key, raw) = kv.split_once('=').ok_or_else(|| bad("expected KEY=VALUE".into()))?;
    let value: toml::Value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));

    let mut root = toml::Value::try_from(config).expect("config serializes");
    let path: Vec<&str> = key.trim().split('.').collect();
    let (last, parents) = path.split_last().expect("split yields one item");
    let mut node = &mut root;
    for part in parents {
        node = node
            .get_mut(*part)
            .filter(|n| n.is_table())
            .ok_or_else(|| bad(format!("unknown section '{part}'")))?;
    }
    let table = node.as_table_mut().ok_or_else(|| bad("not a table".into()))?;
    table.insert((*last).to_string(), value);
    root.try_into::<Experiment>().map_err(|e| bad(e.message().to_string()))
}

fn create_out(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", dir.display())))
}

fn open_out(dir: &Path, name: &str) -> Result<fs::File, CliError> {
    let path = dir.join(name);
    fs::File::create(&path).map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))
}

fn run(job: &Job, out: &Path, argv: &[String]) -> Result<(), CliError> {
    let config = &job.config;
    create_out(out)?;
    let mut manifest = Manifest::new(job.command, argv, config);
    manifest.widths = job.widths.clone();
    manifest.scenarios = job.scenarios.clone();

    match job.command {
        "ber" => {
            let points = run_ber(config)?;
            write_ber_csv(open_out(out, "ber.csv")?, &points)?;
            manifest.outputs.push("ber.csv".into());
        }
        "beampattern" => {
            let rows = run_beampatterns(config, &beam_methods(config)?)?;
            write_pattern_csv(open_out(out, "pattern.csv")?, &rows).map_err(|e| CliError::Runtime(e.to_string()))?;
            manifest.outputs.push("pattern.csv".into());
        }
        "sweep-neurons" => {
            let widths = job.widths.as_deref().unwrap_or(&[1, 2, 3, 4, 5, 6, 7, 8, 9, 10]);
            let rows = run_neuron_sweep(config, widths)?;
            write_sweep_csv(open_out(out, "sweep.csv")?, &rows)?;
            manifest.outputs.push("sweep.csv".into());
        }
        "scenarios" => {
            let setups = job.scenarios.clone().unwrap_or_else(presets);
            let reports = run_scenarios(config, &setups)?;
            let rows: Vec<Table1Row> = reports
                .iter()
                .map(|r| Table1Row::from_report(r, config.plan.record_wall_time))
                .collect();
            write_table1_csv(open_out(out, "table1.csv")?, &rows)?;
            manifest.outputs.push("table1.csv".into());
        }
        "train" => {
            let scenario = match config.plan.snr_db.as_slice() {
                [one] => config.scenario.with_noise_db(-one),
                _ => config.scenario.clone(),
            };
            let (x, symbols) = pooled_pilots(config, &scenario, 0)?;
            let data = Dataset::from_snapshots(&x, &symbols).map_err(HarnessError::from)?;
            let layers = config.plan.layer_sizes(config.array.n_antennas, &config.plan.hidden);
            let mut train = config.train.clone();
            train.seed = config.plan.seed;
            let init =
                MlpParams::random(&layers, config.plan.activation, config.plan.seed).map_err(HarnessError::from)?;
            let (net, report) = train_bayesian_lm(&init, &data, &train).map_err(HarnessError::from)?;
            write_model(&out.join("model.txt"), &net).map_err(|e| CliError::Runtime(e.to_string()))?;
            let text = serde_json::to_string_pretty(&report).expect("report serializes");
            fs::write(out.join("train_report.json"), text + "\n")
                .map_err(|e| CliError::Runtime(format!("cannot write train_report.json: {e}")))?;
            manifest.outputs.extend(["model.txt".into(), "train_report.json".into()]);
            eprintln!(
                "{}: {} epochs, best {}, gamma {:.2}/{}, stopped by {}",
                config.scenario.label, report.epochs_run, report.best_epoch, report.gamma, report.n_params, report.stopping
            );
        }
        other => unreachable!("unknown command {other}"),
    }
    manifest.write(out)?;
    eprintln!("wrote {} and {MANIFEST_FILE} to {}", manifest.outputs.join(", "), out.display());
    Ok(())
}
