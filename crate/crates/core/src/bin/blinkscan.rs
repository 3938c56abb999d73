use std::fs;
use std::io::Write;
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use blinkscan::scanmetrics::{aggregate_printed, parse_counts, BUNDLED_COUNTS};
use blinkscan::session::serve::{serve, ClockMode};
use blinkscan::session::{
    run_session, write_task_log, InputSource, MemoryTransport, SessionConfig, TaskDef,
};
use blinkscan::simharness::{
    read_trace, run_script, sweep, target_for_trial, write_csv, write_trace, TrialSpec, UserModel,
};
use blinkscan::{Region, ScanConfig, SignalThresholds};

#[derive(Parser)]
#[command(
    name = "blinkscan",
    version,
    about = "Blink-driven block-scanning engine"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte-Carlo sweep over scan intervals, written as CSV.
    Simulate(SimulateArgs),
    /// Score a recorded trace or a .blk capture.
    Replay(ReplayArgs),
    /// Open the message-stream endpoint.
    Serve(ServeArgs),
    /// Recompute metrics from a per-user counts table and flag inconsistent rows.
    Metrics(MetricsArgs),
}

#[derive(Args, Clone)]
struct ScanArgs {
    /// Screen size as WxH.
    #[arg(long, default_value = "1920x1080", value_parser = parse_screen)]
    screen: Region,
    #[arg(long, default_value_t = 4)]
    depth: u32,
    #[arg(long, default_value_t = 8)]
    step_px: u32,
    #[arg(long, default_value_t = 3)]
    retry_cycles: u32,
}

impl ScanArgs {
    fn config(&self, interval_ms: u64) -> ScanConfig {
        ScanConfig::new(self.screen, interval_ms)
            .with_depth(self.depth)
            .with_step(self.step_px)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum UserKind {
    Ideal,
    Typical,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    scan: ScanArgs,
    /// Comma-separated scan intervals.
    #[arg(long, value_delimiter = ',', default_values_t = [500u64, 600, 700, 800, 900, 1000])]
    scan_interval_ms: Vec<u64>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 500)]
    trials: u32,
    #[arg(long, value_enum, default_value_t = UserKind::Typical)]
    user: UserKind,
    #[arg(long)]
    reaction_mean_ms: Option<f64>,
    #[arg(long)]
    reaction_sd_ms: Option<f64>,
    #[arg(long)]
    miss_prob: Option<f64>,
    #[arg(long)]
    premature_prob: Option<f64>,
    #[arg(long)]
    recovery_prob: Option<f64>,
    /// CSV destination; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also record a trace of `--trace-tasks` back-to-back trials at the first interval.
    #[arg(long)]
    trace_out: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    trace_tasks: u32,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum InputKind {
    Client,
    Samples,
    Trace,
    Capture,
}

#[derive(Args, Clone)]
struct SourceArgs {
    #[command(flatten)]
    scan: ScanArgs,
    #[arg(long, default_value_t = 500)]
    scan_interval_ms: u64,
    /// Target rectangle `x,y,w,h`; repeat for several tasks. Trace input
    /// takes its tasks from the trace instead.
    #[arg(long = "target", value_parser = parse_region)]
    targets: Vec<Region>,
    #[arg(long, default_value_t = 300)]
    blink_threshold: u16,
    #[arg(long, default_value_t = 600)]
    base_floor: u16,
    #[arg(long, default_value_t = 60)]
    min_blink_ms: u64,
    #[arg(long, default_value_t = 200)]
    refractory_ms: u64,
    /// Write the per-task log (CSV) here when the session ends.
    #[arg(long)]
    task_log: Option<PathBuf>,
}

impl SourceArgs {
    fn session_config(&self, input: InputSource) -> SessionConfig {
        let tasks = self
            .targets
            .iter()
            .enumerate()
            .map(|(i, &target)| TaskDef {
                task_id: i as u32 + 1,
                target,
            })
            .collect();
        let mut cfg = SessionConfig::new(self.scan.config(self.scan_interval_ms), input, tasks);
        cfg.thresholds = SignalThresholds::new(self.blink_threshold, self.base_floor)
            .with_timing(self.min_blink_ms, self.refractory_ms);
        cfg.retry_cycles = self.scan.retry_cycles;
        cfg.log_path = self.task_log.clone();
        cfg
    }
}

#[derive(Args)]
struct ReplayArgs {
    file: PathBuf,
    #[arg(long, value_enum)]
    input: Option<InputKind>,
    #[command(flatten)]
    source: SourceArgs,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1:7070")]
    addr: String,
    #[arg(long, value_enum, default_value_t = InputKind::Client)]
    input: InputKind,
    /// Trace or capture file for scripted inputs.
    #[arg(long)]
    file: Option<PathBuf>,
    /// Drive time from client timestamps and clock messages only.
    #[arg(long)]
    virtual_time: bool,
    /// Wall-clock tick period.
    #[arg(long, default_value_t = 20)]
    tick_ms: u64,
    /// Exit after this many sessions.
    #[arg(long)]
    sessions: Option<usize>,
    #[command(flatten)]
    source: SourceArgs,
}

#[derive(Args)]
struct MetricsArgs {
    /// Counts table (`user,tasks,tp,fp,fn,sa,far,sr[,time_s]`); the bundled table when omitted.
    counts: Option<PathBuf>,
}

fn parse_screen(s: &str) -> Result<Region, String> {
    let (w, h) = s.split_once(['x', 'X']).ok_or("expected WxH")?;
    let w: u32 = w.parse().map_err(|_| "bad width")?;
    let h: u32 = h.parse().map_err(|_| "bad height")?;
    if w == 0 || h == 0 {
        return Err("screen must be non-empty".into());
    }
    Ok(Region::screen(w, h))
}

fn parse_region(s: &str) -> Result<Region, String> {
    let nums: Vec<u32> = s
        .split(',')
        .map(|v| v.trim().parse())
        .collect::<Result<_, _>>()
        .map_err(|_| "expected x,y,w,h")?;
    match nums[..] {
        [x, y, w, h] => Ok(Region::new(x, y, w, h)),
        _ => Err("expected x,y,w,h".into()),
    }
}

fn simulate(args: &SimulateArgs) -> Result<()> {
    let mut user = match args.user {
        UserKind::Ideal => UserModel::ideal(args.seed),
        UserKind::Typical => UserModel::typical(args.seed),
    };
    user.reaction_mean_ms = args.reaction_mean_ms.unwrap_or(user.reaction_mean_ms);
    user.reaction_sd_ms = args.reaction_sd_ms.unwrap_or(user.reaction_sd_ms);
    user.miss_prob = args.miss_prob.unwrap_or(user.miss_prob);
    user.premature_prob = args.premature_prob.unwrap_or(user.premature_prob);
    user.recovery_prob = args.recovery_prob.unwrap_or(user.recovery_prob);
    if let Err(e) = user.validate() {
        bail!("invalid user model: {e}");
    }
    let base = args
        .scan
        .config(args.scan_interval_ms.first().copied().unwrap_or(500));
    base.validate()?;
    let rows = sweep(&base, &args.scan_interval_ms, &user, args.trials)?;
    match &args.out {
        Some(path) => write_csv(
            &rows,
            fs::File::create(path).with_context(|| format!("creating {}", path.display()))?,
        )?,
        None => write_csv(&rows, std::io::stdout().lock())?,
    }
    if let Some(path) = &args.trace_out {
        let specs: Vec<TrialSpec> = (0..args.trace_tasks)
            .map(|i| {
                let mut spec =
                    TrialSpec::new(i + 1, target_for_trial(&base, args.seed, i), base.clone());
                spec.retry_cycles = args.scan.retry_cycles;
                spec
            })
            .collect();
        let (_, trace) = run_script(&specs, &user);
        write_trace(path, &trace)?;
    }
    Ok(())
}

fn detect_kind(file: &Path, explicit: Option<InputKind>) -> InputKind {
    explicit.unwrap_or_else(|| match file.extension().and_then(|e| e.to_str()) {
        Some("blk") => InputKind::Capture,
        _ => InputKind::Trace,
    })
}

fn load_input(kind: InputKind, file: &PathBuf) -> Result<InputSource> {
    Ok(match kind {
        InputKind::Trace => InputSource::Trace(
            read_trace(file).with_context(|| format!("reading {}", file.display()))?,
        ),
        InputKind::Capture => InputSource::Capture(
            fs::read(file).with_context(|| format!("reading {}", file.display()))?,
        ),
        InputKind::Client | InputKind::Samples => {
            bail!("--input must be trace or capture for a file")
        }
    })
}

fn replay(args: &ReplayArgs) -> Result<()> {
    let input = load_input(detect_kind(&args.file, args.input), &args.file)?;
    let cfg = args.source.session_config(input);
    let report = run_session(&cfg, &mut MemoryTransport::default())?;
    let mut out = std::io::stdout().lock();
    writeln!(out, "{}", serde_json::to_string_pretty(&report)?)?;
    write_task_log(&report, &mut out)?;
    if let Some(s) = report.summary {
        writeln!(out, "{}", s.display())?;
    }
    Ok(())
}

fn serve_cmd(args: &ServeArgs) -> Result<()> {
    let input = match args.input {
        InputKind::Client => InputSource::Client,
        InputKind::Samples => InputSource::LiveSamples,
        kind => {
            let file = args
                .file
                .as_ref()
                .context("--file is required for trace or capture input")?;
            load_input(kind, file)?
        }
    };
    let cfg = args.source.session_config(input);
    cfg.validate()?;
    let mode = if args.virtual_time {
        ClockMode::Virtual
    } else {
        ClockMode::Wall {
            tick: Duration::from_millis(args.tick_ms.max(1)),
        }
    };
    let listener =
        TcpListener::bind(&args.addr).with_context(|| format!("binding {}", args.addr))?;
    eprintln!("listening on {}", listener.local_addr()?);
    serve(listener, cfg, mode, args.sessions)?;
    Ok(())
}

fn metrics(args: &MetricsArgs) -> Result<()> {
    let text = match &args.counts {
        Some(path) => {
            fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?
        }
        None => BUNDLED_COUNTS.to_string(),
    };
    let rows = parse_counts(&text)?;
    let mut out = std::io::stdout().lock();
    writeln!(
        out,
        "user  tasks  tp  fp  fn     SA     FAR      SR   check"
    )?;
    let mut flagged = Vec::new();
    for r in &rows {
        let issues = r.discrepancies();
        let note = if issues.is_empty() {
            "ok".to_string()
        } else {
            flagged.push(r.user);
            issues
                .iter()
                .map(|d| {
                    format!(
                        "{} printed {} recomputed {:.3}",
                        d.field, d.published, d.recomputed
                    )
                })
                .collect::<Vec<_>>()
                .join("; ")
        };
        writeln!(
            out,
            "{:>4}  {:>5}  {:>2}  {:>2}  {:>2}  {:>5}  {:>6}  {:>6}   {note}",
            r.user,
            r.tasks,
            r.tp,
            r.fp,
            r.fn_,
            r.sa.to_string(),
            r.far.to_string(),
            r.sr.to_string()
        )?;
    }
    let agg = aggregate_printed(&rows)?.display();
    writeln!(
        out,
        "aggregate: SA {:.0} / FAR {:.1} / SR {:.1}",
        agg.sa_pct, agg.far_pct, agg.sr_pct
    )?;
    let list: Vec<String> = flagged.iter().map(u32::to_string).collect();
    writeln!(
        out,
        "discrepant users: {}",
        if list.is_empty() {
            "none".into()
        } else {
            list.join(", ")
        }
    )?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Replay(a) => replay(a),
        Command::Serve(a) => serve_cmd(a),
        Command::Metrics(a) => metrics(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
