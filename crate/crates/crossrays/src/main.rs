use std::fs;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};
use crossrays::analysis::{analyze, describe_cell, AnalyzeError, AnalyzeOptions};
use crossrays::log::{read_log, write_log};
use crossrays::questionnaire::Questionnaire;
use crossrays::report::render_markdown;
use crossrays::service::{self, Hub, ServiceConfig, DEFAULT_MAX_SESSIONS};
use crossrays::simulate::simulate;
use crossrays_core::agent::AgentParams;
use crossrays_core::experiment::{ExperimentConfig, Measure};
use crossrays_core::stats::power::{achieved_power, required_sample_size, search_assumptions, PowerQuery};
use crossrays_core::tasks::TaskKind;
use crossrays_core::techniques::TechniqueConfig;

#[derive(Parser)]
#[command(name = "crossrays", version, about = "Crossing-ray selection experiments: simulate, analyze, plan, serve")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

fn parse_task(s: &str) -> Result<TaskKind, String> {
    TaskKind::parse(s).ok_or_else(|| format!("unknown task '{s}' (with_ref, without_ref)"))
}

fn parse_measure(s: &str) -> Result<Measure, String> {
    Measure::ALL
        .into_iter()
        .find(|m| m.as_str() == s)
        .ok_or_else(|| format!("unknown measure '{s}' (selection_time, error_distance, clicks)"))
}

fn parse_preset(s: &str) -> Result<AgentParams, String> {
    AgentParams::preset(s).ok_or_else(|| format!("unknown agent preset '{s}' (noisy, noiseless)"))
}

#[derive(Subcommand)]
enum Command {
    /// Run the scheduled experiment with the synthetic agent and write a JSONL log.
    Simulate {
        #[arg(long, default_value_t = 20)]
        participants: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Restrict to one or more tasks.
        #[arg(long, value_parser = parse_task)]
        task: Vec<TaskKind>,
        #[arg(long = "agent-preset", default_value = "noisy", value_parser = parse_preset)]
        agent_preset: AgentParams,
        /// Alternate task order between participants.
        #[arg(long)]
        counterbalance_tasks: bool,
    },
    /// Analyze a trial log and emit a markdown report.
    Analyze {
        log: PathBuf,
        #[arg(long, value_parser = parse_measure)]
        measure: Vec<Measure>,
        #[arg(long, value_parser = parse_task)]
        task: Vec<TaskKind>,
        /// Write the report here instead of standard output.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Drop participants with missing cells instead of failing.
        #[arg(long)]
        allow_incomplete: bool,
        /// CSV of per-dimension questionnaire scores.
        #[arg(long)]
        questionnaire: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        bootstrap_seed: u64,
    },
    /// Required sample size for a repeated-measures design.
    Power {
        #[arg(long, default_value_t = 0.4)]
        f: f64,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[arg(long, default_value_t = 0.9)]
        power: f64,
        #[arg(long, default_value_t = 5)]
        m: u32,
        #[arg(long, default_value_t = 0.5)]
        rho: f64,
        #[arg(long, default_value_t = 1.0)]
        epsilon: f64,
        /// Also list the assumption settings that yield this N.
        #[arg(long)]
        search_target: Option<u64>,
    },
    /// Serve interactive sessions over WebSocket.
    Serve {
        #[arg(long, default_value_t = 8765)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        /// Directory for the session log; overridden by CROSSRAYS_LOG_DIR.
        #[arg(long)]
        log_dir: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_MAX_SESSIONS)]
        max_sessions: usize,
    },
}

fn run_simulate(
    participants: u32,
    seed: u64,
    out: PathBuf,
    task: Vec<TaskKind>,
    agent: AgentParams,
    counterbalance_tasks: bool,
) -> anyhow::Result<()> {
    let mut cfg = ExperimentConfig {
        n_participants: participants,
        master_seed: seed,
        counterbalance_tasks,
        ..Default::default()
    };
    if !task.is_empty() {
        cfg.tasks = task;
    }
    let start = Instant::now();
    let records = simulate(&cfg, agent, TechniqueConfig::default());
    let sim = start.elapsed();
    write_log(&out, &records).with_context(|| format!("writing {}", out.display()))?;
    let timeouts = records.iter().filter(|r| r.timeout).count();
    println!(
        "{} records ({} participants x {} trials), {} timeouts",
        records.len(),
        participants,
        cfg.trials_per_participant(),
        timeouts
    );
    println!("simulated in {:.2} s, total {:.2} s", sim.as_secs_f64(), start.elapsed().as_secs_f64());
    Ok(())
}

fn run_analyze(
    log: PathBuf,
    measure: Vec<Measure>,
    task: Vec<TaskKind>,
    report: Option<PathBuf>,
    allow_incomplete: bool,
    questionnaire: Option<PathBuf>,
    bootstrap_seed: u64,
) -> anyhow::Result<()> {
    let records = read_log(&log).with_context(|| format!("reading {}", log.display()))?;
    let questionnaire = match questionnaire {
        Some(p) => Some(Questionnaire::read(fs::File::open(&p).with_context(|| format!("opening {}", p.display()))?)?),
        None => None,
    };
    let opts = AnalyzeOptions {
        tasks: task,
        measures: (!measure.is_empty()).then_some(measure),
        allow_incomplete,
        bootstrap_seed,
        questionnaire,
    };
    let result = match analyze(&records, &opts) {
        Ok(r) => r,
        Err(AnalyzeError::Incomplete { task, measure, missing }) => {
            eprintln!("incomplete cells for {task} / {measure}:");
            for k in &missing {
                eprintln!("  {}", describe_cell(k));
            }
            bail!("{} missing cells; rerun with --allow-incomplete to drop those participants", missing.len());
        }
        Err(e) => return Err(e.into()),
    };
    let text = render_markdown(&result);
    match report {
        Some(p) => {
            fs::write(&p, &text).with_context(|| format!("writing {}", p.display()))?;
            for m in &result.measures {
                let [a, b, ab] = [&m.anova.a, &m.anova.b, &m.anova.ab];
                println!(
                    "{} / {}: technique p = {:.4}, distance p = {:.4}, interaction p = {:.4}",
                    m.task.as_str(),
                    m.measure.as_str(),
                    a.p,
                    b.p,
                    ab.p
                );
            }
            println!("report written to {}", p.display());
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn run_power(q: PowerQuery, search_target: Option<u64>) -> anyhow::Result<ExitCode> {
    if q.validate().is_err() {
        eprintln!(
            "error: invalid power query (need f > 0, 0 < alpha < 1, 0 < power < 1, m >= 2, 0 <= rho < 1, 1/(m-1) <= epsilon <= 1)"
        );
        return Ok(ExitCode::from(2));
    }
    let n = required_sample_size(&q).map_err(|e| anyhow::anyhow!("{e}"))?;
    println!("N = {n}");
    println!("power at N = {n}: {:.4}", achieved_power(&q, n));
    if n > 2 {
        println!("power at N = {}: {:.4}", n - 1, achieved_power(&q, n - 1));
    }
    if let Some(target) = search_target {
        let s = search_assumptions(&q, target);
        println!("small grid (m, rho, epsilon -> N):");
        for a in &s.small {
            println!("  m = {}, rho = {}, epsilon = {} -> {}", a.m, a.rho, a.epsilon, a.n);
        }
        let hits = s.matches();
        if hits.is_empty() {
            println!("no setting yields N = {target}");
        } else {
            let grid = if s.wide.is_empty() { "small" } else { "wide" };
            println!("settings yielding N = {target} ({grid} grid):");
            for a in hits {
                println!("  m = {}, rho = {}, epsilon = {}", a.m, a.rho, a.epsilon);
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn run_serve(port: u16, host: String, log_dir: Option<PathBuf>, max_sessions: usize) -> anyhow::Result<()> {
    let addr: SocketAddr = format!("{host}:{port}").parse().with_context(|| format!("bad address {host}:{port}"))?;
    let cfg = ServiceConfig { max_sessions, log_dir, ..Default::default() }.with_env_log_dir();
    if let Some(d) = &cfg.log_dir {
        println!("logging trials to {}", d.join(service::LOG_FILE_NAME).display());
    }
    let hub = Hub::new(cfg).context("opening session log")?;
    let rt = tokio::runtime::Runtime::new()?;
    println!("listening on ws://{addr}");
    rt.block_on(service::serve(addr, hub))?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate { participants, seed, out, task, agent_preset, counterbalance_tasks } => {
            run_simulate(participants, seed, out, task, agent_preset, counterbalance_tasks).map(|_| ExitCode::SUCCESS)
        }
        Command::Analyze { log, measure, task, report, allow_incomplete, questionnaire, bootstrap_seed } => {
            run_analyze(log, measure, task, report, allow_incomplete, questionnaire, bootstrap_seed)
                .map(|_| ExitCode::SUCCESS)
        }
        Command::Power { f, alpha, power, m, rho, epsilon, search_target } => {
            run_power(PowerQuery { f, alpha, power, m, rho, epsilon }, search_target)
        }
        Command::Serve { port, host, log_dir, max_sessions } => {
            run_serve(port, host, log_dir, max_sessions).map(|_| ExitCode::SUCCESS)
        }
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
