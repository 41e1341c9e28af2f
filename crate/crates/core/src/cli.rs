//! Command-line driver.
//!
//! Exit codes: 0 success, 1 usage, 2 invalid input or configuration,
//! 3 no job could ever be placed, 4 some job unschedulable or incomplete
//! (or, for `log-scan`/`replay`, missing links or a diverged trace).

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{ArgGroup, Args, Parser, Subcommand};

use crate::catalog::{load_topology, network_app_set, server_app_set, similarity_networks, similarity_servers, NsMap};
use crate::dispatch::{load_workload, JobRequest};
use crate::failover::{find_missing_links, ActiveList, FailoverError, LogFile, DEFAULT_INTERVAL_2, DEFAULT_TIMEOUT_T};
use crate::ids::JobId;
use crate::protocol::{store_outputs, FileTransfer};
use crate::sim::{load_fault_plan, FaultPlan, SimParams, Simulation, TRACE_MAGIC};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_NO_CAPACITY: i32 = 3;
pub const EXIT_INCOMPLETE: i32 = 4;

pub const TRACE_FILE: &str = "trace.txt";
pub const METRICS_FILE: &str = "metrics.txt";
pub const LOG_FILE: &str = "log.txt";

#[derive(Debug, Parser)]
#[command(name = "nsroute", version, about = "Similarity-routed job dispatch simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a scenario and write trace, metrics, log and outputs.
    Run(RunConfig),
    /// Print the similarity of two networks or two servers.
    #[command(group(ArgGroup::new("pair").required(true).args(["networks", "servers"])))]
    Similarity {
        #[arg(long)]
        topology: PathBuf,
        /// Two network ids, e.g. `n1,n2`.
        #[arg(long)]
        networks: Option<String>,
        /// One network and two of its servers, e.g. `n1:s1,s2`.
        #[arg(long)]
        servers: Option<String>,
    },
    /// List timed-out incomplete entries of a log file.
    LogScan {
        log: PathBuf,
        #[arg(long)]
        now: u64,
        #[arg(long = "timeout-t", default_value_t = DEFAULT_TIMEOUT_T)]
        timeout_t: u64,
    },
    /// Re-run a scenario and compare against a recorded trace.
    Replay {
        #[arg(long)]
        trace: PathBuf,
        #[arg(long)]
        topology: PathBuf,
        #[arg(long)]
        workload: PathBuf,
        #[arg(long = "fault-plan")]
        fault_plan: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Args)]
pub struct RunConfig {
    #[arg(long)]
    pub topology: PathBuf,
    #[arg(long)]
    pub workload: PathBuf,
    #[arg(long = "fault-plan")]
    pub fault_plan: Option<PathBuf>,
    /// Overrides the fault plan's generator seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long = "timeout-t", default_value_t = DEFAULT_TIMEOUT_T)]
    pub timeout_t: u64,
    #[arg(long = "interval2", default_value_t = DEFAULT_INTERVAL_2)]
    pub interval_2: u64,
    #[arg(long)]
    pub out: PathBuf,
}

/// Parses `args` (program name first) and runs the command.
pub fn run_cli<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand
                    if e.exit_code() == 0 =>
                {
                    let _ = out.write_all(text.as_bytes());
                    EXIT_OK
                }
                _ => {
                    let _ = err.write_all(text.as_bytes());
                    EXIT_USAGE
                }
            };
        }
    };
    match cli.command {
        Command::Run(config) => cmd_run(&config, out, err),
        Command::Similarity { topology, networks, servers } => cmd_similarity(&topology, networks, servers, out, err),
        Command::LogScan { log, now, timeout_t } => cmd_log_scan(&log, now, timeout_t, out, err),
        Command::Replay { trace, topology, workload, fault_plan } => {
            cmd_replay(&trace, &topology, &workload, fault_plan.as_deref(), out, err)
        }
    }
}

struct Failure(i32, String);

fn invalid(msg: impl Into<String>) -> Failure {
    Failure(EXIT_INVALID, msg.into())
}

fn report(err: &mut dyn Write, f: Failure) -> i32 {
    let _ = writeln!(err, "nsroute: {}", f.1);
    f.0
}

fn read(path: &Path) -> Result<Vec<u8>, Failure> {
    fs::read(path).map_err(|e| invalid(format!("{}: {e}", path.display())))
}

fn read_topology(path: &Path) -> Result<NsMap, Failure> {
    load_topology(&read(path)?).map_err(|e| invalid(format!("{}: {e}", path.display())))
}

fn read_inputs(topology: &Path, workload: &Path, fault_plan: Option<&Path>) -> Result<(NsMap, Vec<JobRequest>, FaultPlan), Failure> {
    let map = read_topology(topology)?;
    let jobs = load_workload(&read(workload)?).map_err(|e| invalid(format!("{}: {e}", workload.display())))?;
    let plan = match fault_plan {
        Some(p) => load_fault_plan(&read(p)?).map_err(|e| invalid(format!("{}: {e}", p.display())))?,
        None => FaultPlan::none(),
    };
    Ok((map, jobs, plan))
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| invalid(format!("{}: {e}", path.display())))
}

pub fn cmd_run(config: &RunConfig, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    match run_inner(config, out) {
        Ok(code) => code,
        Err(f) => report(err, f),
    }
}

fn run_inner(config: &RunConfig, out: &mut dyn Write) -> Result<i32, Failure> {
    if config.timeout_t == 0 || config.interval_2 == 0 {
        return Err(invalid("--timeout-t and --interval2 must be positive"));
    }
    let (map, jobs, mut plan) = read_inputs(&config.topology, &config.workload, config.fault_plan.as_deref())?;
    if let Some(seed) = config.seed {
        plan.rng_seed = seed;
    }
    let params = SimParams { timeout_t: config.timeout_t, interval_2: config.interval_2, ..SimParams::default() };
    let mut sim = Simulation::new(map, jobs, plan, params).map_err(|e| invalid(e.to_string()))?;
    sim.run();
    fs::create_dir_all(&config.out).map_err(|e| invalid(format!("{}: {e}", config.out.display())))?;
    let m = sim.metrics();
    write_file(&config.out.join(TRACE_FILE), &m.trace.to_text())?;
    write_file(&config.out.join(METRICS_FILE), &m.to_text())?;
    write_file(&config.out.join(LOG_FILE), &sim.log().serialize())?;
    for (ip, files) in sim.outputs() {
        let files: Vec<FileTransfer> = files.iter().map(|(n, c)| FileTransfer { name: n.clone(), content: c.clone() }).collect();
        store_outputs(&config.out, ip, &files).map_err(|e| invalid(format!("storing outputs for {ip}: {e}")))?;
    }
    let _ = writeln!(
        out,
        "submitted={} completed={} unschedulable={} incomplete={} failovers={}",
        m.jobs_submitted,
        m.jobs_completed,
        m.jobs_unschedulable,
        m.incomplete(),
        m.failovers
    );
    Ok(if m.jobs_completed == m.jobs_submitted {
        EXIT_OK
    } else if m.jobs_unschedulable == m.jobs_submitted && m.dispatches == 0 {
        EXIT_NO_CAPACITY
    } else {
        EXIT_INCOMPLETE
    })
}

pub fn cmd_similarity(topology: &Path, networks: Option<String>, servers: Option<String>, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let result = (|| {
        let map = read_topology(topology)?;
        let ratio = match (networks, servers) {
            (Some(sel), None) => {
                let (a, b) = split_pair(&sel).ok_or_else(|| Failure(EXIT_USAGE, format!("--networks expects `a,b`, got `{sel}`")))?;
                let a = network_app_set(&map, a).map_err(|e| invalid(e.to_string()))?;
                let b = network_app_set(&map, b).map_err(|e| invalid(e.to_string()))?;
                similarity_networks(&a, &b)
            }
            (None, Some(sel)) => {
                let usage = || Failure(EXIT_USAGE, format!("--servers expects `net:s1,s2`, got `{sel}`"));
                let (net, pair) = sel.split_once(':').ok_or_else(usage)?;
                let (a, b) = split_pair(pair).ok_or_else(usage)?;
                let a = server_app_set(&map, net, a).map_err(|e| invalid(e.to_string()))?;
                let b = server_app_set(&map, net, b).map_err(|e| invalid(e.to_string()))?;
                similarity_servers(&a, &b)
            }
            _ => return Err(Failure(EXIT_USAGE, "give exactly one of --networks or --servers".into())),
        };
        let _ = writeln!(out, "{ratio} {:.6}", ratio.to_f64());
        Ok(EXIT_OK)
    })();
    result.unwrap_or_else(|f| report(err, f))
}

fn split_pair(s: &str) -> Option<(&str, &str)> {
    let (a, b) = s.split_once(',')?;
    (!a.is_empty() && !b.is_empty() && !b.contains(',')).then_some((a, b))
}

pub fn cmd_log_scan(path: &Path, now: u64, timeout_t: u64, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let result = (|| {
        if timeout_t == 0 {
            return Err(invalid("--timeout-t must be positive"));
        }
        let log = LogFile::parse(&read(path)?).map_err(|FailoverError::Parse { line, message }| {
            invalid(format!("{}: line {line}: {message}", path.display()))
        })?;
        let mut active = ActiveList::new();
        for (i, rec) in log.records.into_iter().enumerate() {
            active.track(JobId::new(format!("row{}", i + 1)).expect("valid token"), rec);
        }
        let missing = find_missing_links(&mut active, now, timeout_t);
        for link in &missing {
            let r = &link.record;
            let _ = writeln!(out, "MISSING {} {} {} {}/{}", r.external_ip, r.app, r.internal_ip, r.n_files_received, r.n_files_expected);
        }
        Ok(if missing.is_empty() { EXIT_OK } else { EXIT_INCOMPLETE })
    })();
    result.unwrap_or_else(|f| report(err, f))
}

/// Scenario parameters recorded in a trace header.
fn params_from_header(header: &str) -> Option<(SimParams, u64)> {
    let rest = header.strip_prefix(TRACE_MAGIC)?;
    let field = |key: &str| -> Option<u64> {
        rest.split(' ').find_map(|kv| kv.strip_prefix(key)?.strip_prefix('=')).and_then(|v| v.parse().ok())
    };
    let params = SimParams {
        timeout_t: field("timeout_t")?,
        interval_2: field("interval2")?,
        hop_latency: field("hop_latency")?,
        exec_ticks: field("exec_ticks")?,
        max_ticks: field("max_ticks")?,
    };
    Some((params, field("seed")?))
}

pub fn cmd_replay(trace: &Path, topology: &Path, workload: &Path, fault_plan: Option<&Path>, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let result = (|| {
        let recorded = String::from_utf8(read(trace)?).map_err(|_| invalid(format!("{}: not UTF-8", trace.display())))?;
        let header = recorded.lines().next().unwrap_or("");
        let (params, seed) = params_from_header(header).ok_or_else(|| invalid(format!("{}: unrecognised trace header", trace.display())))?;
        let (map, jobs, mut plan) = read_inputs(topology, workload, fault_plan)?;
        plan.rng_seed = seed;
        let mut sim = Simulation::new(map, jobs, plan, params).map_err(|e| invalid(e.to_string()))?;
        sim.run();
        let replayed = sim.metrics().trace.to_text();
        if replayed == recorded {
            let _ = writeln!(out, "identical {} events", sim.metrics().trace.lines.len());
            return Ok(EXIT_OK);
        }
        let line = recorded
            .split('\n')
            .zip(replayed.split('\n'))
            .position(|(a, b)| a != b)
            .unwrap_or_else(|| recorded.split('\n').count().min(replayed.split('\n').count()))
            + 1;
        let _ = writeln!(out, "diverged at line {line}");
        Ok(EXIT_INCOMPLETE)
    })();
    result.unwrap_or_else(|f| report(err, f))
}
