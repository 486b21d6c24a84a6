//! `bwave`: plan geometries, analyze frames, run and export simulations.
//!
//! Exit status: 0 on success, 2 for usage or config errors, 3 when `plan`
//! finds the geometry infeasible, 4 for runtime failures.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use bwave_core::config::{
    dump_document, parse_angle_value, parse_time, ConfigDocument, RunSettings,
};
use bwave_core::experiment::{Arm, EmissionLaw, SyncMode};
use bwave_core::lorentz::{far_switch_threshold, interval_class, own_switch_threshold};
use bwave_core::planner::plan;
use bwave_core::report::{self, FrameRow};
use bwave_core::sim::{self, estimate_chsh, scan_theta, theta_grid, ChshAngles};
use bwave_core::timeline::build_timeline;
use bwave_core::{Error, ExperimentConfig, Model, PolarizationAngle, RunOptions, SpacetimeEvent};
use clap::{Parser, Subcommand, ValueEnum};

const EXIT_USAGE: u8 = 2;
const EXIT_INFEASIBLE: u8 = 3;
const EXIT_RUNTIME: u8 = 4;

/// Arrival phases checked by the timeline oracle in `plan`.
const PLAN_ORACLE_GRID: usize = 1001;

#[derive(Parser, Debug)]
#[command(
    name = "bwave",
    version,
    about = "Moving-beam-splitter experiment planner and simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Experiment config file.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Where to write the CSV table. Without it the table goes to
    /// `$BWAVE_OUT_DIR/<command>.csv`, or to stdout when that is unset.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,

    /// Default directory for CSV output.
    #[arg(
        long,
        global = true,
        env = "BWAVE_OUT_DIR",
        value_name = "DIR",
        hide_env_values = true
    )]
    out_dir: Option<PathBuf>,

    /// RNG seed; overrides `[run] seed`.
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,

    /// Number of photon pairs; overrides `[run] trials`.
    #[arg(long, global = true, value_name = "N")]
    trials: Option<u64>,

    /// Correlation model; overrides `[model] kind`.
    #[arg(long, global = true, value_enum)]
    model: Option<ModelArg>,

    /// Print the fully resolved config and exit.
    #[arg(long, global = true)]
    dump_config: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check the detour window and feasibility of the timing scheme.
    Plan,
    /// Frame-velocity thresholds for detection versus switch changes.
    Frames {
        /// Arm-1 detection time, e.g. `12 ns`.
        #[arg(long, allow_hyphen_values = true)]
        t_bar: Option<String>,
        /// Switch change of the arm-1 cell.
        #[arg(long, allow_hyphen_values = true)]
        t_c1: Option<String>,
        /// Switch change of the arm-2 cell.
        #[arg(long, allow_hyphen_values = true)]
        t_c2: Option<String>,
    },
    /// Run the Monte Carlo and tabulate joint outcomes.
    Simulate,
    /// Sweep the arm-1 cell rotation and tabulate the TT probability.
    Scan {
        #[arg(long, default_value = "0", allow_hyphen_values = true)]
        theta_min: String,
        #[arg(long, default_value = "pi/2", allow_hyphen_values = true)]
        theta_max: String,
        #[arg(long, default_value_t = 13)]
        steps: usize,
    },
    /// Estimate the CHSH combination S over four polarizer settings.
    Chsh {
        /// Four angles `a,a',b,b'`; defaults to `0,pi/4,pi/8,3*pi/8`.
        #[arg(long, allow_hyphen_values = true)]
        angles: Option<String>,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModelArg {
    Qm,
    Bwave,
}

impl From<ModelArg> for Model {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Qm => Model::Qm,
            ModelArg::Bwave => Model::BWave,
        }
    }
}

#[derive(Debug)]
enum Failure {
    Usage(anyhow::Error),
    Infeasible,
    Runtime(anyhow::Error),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => EXIT_USAGE,
            Failure::Infeasible => EXIT_INFEASIBLE,
            Failure::Runtime(_) => EXIT_RUNTIME,
        }
    }
}

/// Config problems are the user's to fix; everything else is a runtime fault.
fn classify(e: Error) -> Failure {
    match e {
        Error::Config { .. } => Failure::Usage(e.into()),
        other => Failure::Runtime(other.into()),
    }
}

fn usage(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Usage(e.into())
}

struct Loaded {
    doc: ConfigDocument,
    run: RunSettings,
}

impl Cli {
    fn load(&self) -> Result<Loaded, Failure> {
        let path = self
            .config
            .as_ref()
            .ok_or_else(|| usage(anyhow!("--config PATH is required")))?;
        let text = fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))
            .map_err(usage)?;
        let doc = ConfigDocument::parse(&text)
            .with_context(|| format!("in {}", path.display()))
            .map_err(usage)?;
        let mut run = doc
            .run_settings()
            .with_context(|| format!("in {}", path.display()))
            .map_err(usage)?;
        if let Some(t) = self.trials {
            run.trials = t;
        }
        if let Some(s) = self.seed {
            run.seed = s;
        }
        Ok(Loaded { doc, run })
    }

    fn experiment(&self, doc: &ConfigDocument) -> Result<ExperimentConfig, Failure> {
        let mut cfg = doc.experiment().map_err(classify)?;
        if let Some(m) = self.model {
            cfg.model = m.into();
        }
        Ok(cfg)
    }

    fn csv_target(&self, command: &str) -> Option<PathBuf> {
        self.out.clone().or_else(|| {
            self.out_dir
                .as_ref()
                .map(|d| d.join(format!("{command}.csv")))
        })
    }

    /// Writes `csv` to the chosen target and the human report alongside it:
    /// on stdout when the table goes to a file, on stderr otherwise.
    fn emit(&self, command: &str, csv: &str, text: &str) -> Result<(), Failure> {
        match self.csv_target(command) {
            Some(path) => {
                write_file(&path, csv).map_err(Failure::Runtime)?;
                print!("{text}");
                println!("wrote {}", path.display());
            }
            None => {
                eprint!("{text}");
                std::io::stdout()
                    .write_all(csv.as_bytes())
                    .context("cannot write to stdout")
                    .map_err(Failure::Runtime)?;
            }
        }
        Ok(())
    }
}

fn write_file(path: &Path, contents: &str) -> anyhow::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    }
    fs::write(path, contents).with_context(|| format!("cannot write {}", path.display()))
}

fn time_flag(name: &str, value: &str) -> Result<f64, Failure> {
    parse_time(value).map_err(|_| {
        usage(anyhow!(
            "--{name}: `{value}` needs a time with a unit, e.g. `12 ns`"
        ))
    })
}

fn angle_flag(name: &str, value: &str) -> Result<f64, Failure> {
    parse_angle_value(value).map_err(|_| usage(anyhow!("--{name}: `{value}` is not an angle")))
}

fn cmd_plan(cli: &Cli) -> Result<(), Failure> {
    let Loaded { doc, run } = cli.load()?;
    if cli.dump_config {
        return dump(cli, &doc, &run);
    }
    let params = doc.timing_parameters().map_err(classify)?;
    let report = plan(&params, PLAN_ORACLE_GRID).map_err(classify)?;
    cli.emit(
        "plan",
        &report::plan_csv(&report),
        &report::plan_text(&report),
    )?;
    if report.feasible && report.y_in_window && report.oracle_ok() {
        Ok(())
    } else {
        Err(Failure::Infeasible)
    }
}

/// Detection and switch-change times from one pair synchronized to the
/// start of the reference cell's inactivated mode.
fn derived_frame_times(cfg: &ExperimentConfig) -> Result<(f64, f64, Option<f64>), Failure> {
    let mut c = cfg.clone();
    c.emission = EmissionLaw::Synchronized(SyncMode::Inactivated);
    c.discard_fraction = 0.0;
    let mut rng = sim::trial_rng(0, 0);
    let t0 = sim::sample_emission(&c, &mut rng);
    let trial = build_timeline(&c, t0).map_err(classify)?;
    let next_change = |arm: Arm| {
        trial.arm(arm).passages.iter().find_map(|p| {
            let cell = p.cell?;
            cell.schedule.next_change(p.event.t)
        })
    };
    let t_bar = trial.arm(Arm::One).detection().t;
    let t_c1 = next_change(Arm::One).ok_or_else(|| {
        usage(anyhow!(
            "arm 1 has no periodic cell; pass --t-bar, --t-c1 and --t-c2 explicitly"
        ))
    })?;
    Ok((t_bar, t_c1, next_change(Arm::Two)))
}

fn cmd_frames(
    cli: &Cli,
    t_bar: &Option<String>,
    t_c1: &Option<String>,
    t_c2: &Option<String>,
) -> Result<(), Failure> {
    let Loaded { doc, run } = cli.load()?;
    if cli.dump_config {
        return dump(cli, &doc, &run);
    }
    let g = doc.lab_geometry().map_err(classify)?;
    let explicit = (t_bar, t_c1);
    let (tb, tc1, tc2) = match explicit {
        (Some(tb), Some(tc1)) => {
            let tc2 = t_c2.as_deref().map(|v| time_flag("t-c2", v)).transpose()?;
            (time_flag("t-bar", tb)?, time_flag("t-c1", tc1)?, tc2)
        }
        (None, None) => {
            let cfg = cli.experiment(&doc)?;
            let (tb, tc1, tc2) = derived_frame_times(&cfg)?;
            let tc2 = match t_c2 {
                Some(v) => Some(time_flag("t-c2", v)?),
                None => tc2,
            };
            (tb, tc1, tc2)
        }
        _ => return Err(usage(anyhow!("give both --t-bar and --t-c1, or neither"))),
    };
    let detection = SpacetimeEvent::new(tb, g.x_bar());
    let mut rows = vec![FrameRow {
        pair: "detection1-switch1",
        class: interval_class(detection, SpacetimeEvent::new(tc1, g.x())),
        threshold: own_switch_threshold(tb, tc1, &g),
    }];
    if let Some(tc2) = tc2 {
        rows.push(FrameRow {
            pair: "detection1-switch2",
            class: interval_class(detection, SpacetimeEvent::new(tc2, -g.x())),
            threshold: far_switch_threshold(tb, tc2, &g),
        });
    }
    let text = format!(
        "t_bar {:.6} ns, t_C1 {:.6} ns{}\n{}",
        tb * 1e9,
        tc1 * 1e9,
        tc2.map(|t| format!(", t_C2 {:.6} ns", t * 1e9))
            .unwrap_or_default(),
        report::frames_text(&rows)
    );
    cli.emit("frames", &report::frames_csv(&rows), &text)
}

fn cmd_simulate(cli: &Cli) -> Result<(), Failure> {
    let Loaded { doc, run } = cli.load()?;
    let cfg = cli.experiment(&doc)?;
    if cli.dump_config {
        return dump_cfg(&cfg, &run);
    }
    let summary = sim::run(&cfg, run.trials, run.seed, RunOptions::default()).map_err(classify)?;
    cli.emit(
        "simulate",
        &report::simulate_csv(&summary),
        &report::summary_text(&summary),
    )
}

fn cmd_scan(cli: &Cli, theta_min: &str, theta_max: &str, steps: usize) -> Result<(), Failure> {
    if steps < 2 {
        return Err(usage(anyhow!("--steps must be at least 2")));
    }
    let lo = angle_flag("theta-min", theta_min)?;
    let hi = angle_flag("theta-max", theta_max)?;
    let Loaded { doc, run } = cli.load()?;
    let cfg = cli.experiment(&doc)?;
    if cli.dump_config {
        return dump_cfg(&cfg, &run);
    }
    let grid = theta_grid(lo, hi, steps).map_err(usage)?;
    let rows =
        scan_theta(&cfg, &grid, run.trials, run.seed, RunOptions::default()).map_err(classify)?;
    let text = format!(
        "{} theta values, {} pairs each, seed {}\n",
        rows.len(),
        run.trials,
        run.seed
    );
    cli.emit("scan", &report::scan_csv(&rows), &text)
}

fn parse_chsh_angles(s: &str) -> Result<ChshAngles, Failure> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let [a, ap, b, bp] = parts.as_slice() else {
        return Err(usage(anyhow!(
            "--angles takes four comma-separated values a,a',b,b'"
        )));
    };
    let angle = |v: &str| angle_flag("angles", v).map(PolarizationAngle::new);
    Ok(ChshAngles {
        a: angle(a)?,
        a_prime: angle(ap)?,
        b: angle(b)?,
        b_prime: angle(bp)?,
    })
}

fn cmd_chsh(cli: &Cli, angles: &Option<String>) -> Result<(), Failure> {
    let angles = match angles {
        Some(s) => parse_chsh_angles(s)?,
        None => ChshAngles::optimal(),
    };
    let Loaded { doc, run } = cli.load()?;
    let cfg = cli.experiment(&doc)?;
    if cli.dump_config {
        return dump_cfg(&cfg, &run);
    }
    let est = estimate_chsh(&cfg, &angles, run.trials, run.seed, RunOptions::default())
        .map_err(classify)?;
    cli.emit("chsh", &report::chsh_csv(&est), &report::chsh_text(&est))
}

fn dump(cli: &Cli, doc: &ConfigDocument, run: &RunSettings) -> Result<(), Failure> {
    let cfg = cli.experiment(doc)?;
    dump_cfg(&cfg, run)
}

fn dump_cfg(cfg: &ExperimentConfig, run: &RunSettings) -> Result<(), Failure> {
    print!("{}", dump_document(cfg, run));
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Plan => cmd_plan(&cli),
        Command::Frames { t_bar, t_c1, t_c2 } => cmd_frames(&cli, t_bar, t_c1, t_c2),
        Command::Simulate => cmd_simulate(&cli),
        Command::Scan {
            theta_min,
            theta_max,
            steps,
        } => cmd_scan(&cli, theta_min, theta_max, *steps),
        Command::Chsh { angles } => cmd_chsh(&cli, angles),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Usage(e) | Failure::Runtime(e) => eprintln!("error: {e:#}"),
                Failure::Infeasible => eprintln!("plan is infeasible"),
            }
            ExitCode::from(f.code())
        }
    }
}
