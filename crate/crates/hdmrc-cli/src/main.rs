//! `hdmrc`: decode-forward rates, cut-set bounds, and transmit/listen
//! scheduling for half-duplex relay channels described by TOML topology
//! files. See the repository README for the file grammar and examples.
//!
//! Exit codes are a stable contract: 0 success, 1 solver precondition
//! violated by the instance, 2 bad input (files, flags).

mod format;
mod sweeps;
mod topofile;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use hdmrc::{
    cutset_bound_opt, cutset_min, df_rate, four_node_closed_form, reception_rates, rsnr_violation,
    solve_algorithm2, solve_algorithm3, solve_grid, solve_maximin, ModelError, SchedError,
    Schedule, SolveReport, MAX_NODES,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use format::{fmt_sig, rates_table, schedule_table, state_labels};

#[derive(Debug)]
pub enum CliError {
    /// Bad user input (files, flag values): exit 2.
    Input(String),
    /// Instance violates a solver precondition: exit 1.
    Precondition(String),
}

/// Solver errors on a well-formed instance are precondition failures;
/// malformed data and bad flag values are input errors.
pub fn solver_err(e: SchedError) -> CliError {
    match &e {
        SchedError::BadStep { .. } => CliError::Input(e.to_string()),
        SchedError::Model(m) => match m {
            ModelError::TooManyNodes { .. } => CliError::Precondition(e.to_string()),
            _ => CliError::Input(e.to_string()),
        },
        _ => CliError::Precondition(e.to_string()),
    }
}

#[derive(Parser)]
#[command(
    name = "hdmrc",
    version,
    about = "Decode-forward rates, cut-set bounds, and transmit/listen scheduling\nfor half-duplex multiple-relay channels"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Reception rates, DF rate, and bottleneck for a topology
    Rate {
        /// Topology file (TOML)
        file: PathBuf,
        /// Evaluate this schedule (comma-separated state probabilities in
        /// canonical order) instead of solving for the optimum
        #[arg(long)]
        schedule: Option<String>,
    },
    /// Solve for an optimal transmit/listen schedule
    Schedule {
        /// Topology file (TOML)
        file: PathBuf,
        /// Solver to use
        #[arg(long, value_enum, default_value = "algo2")]
        method: Method,
        /// Lattice step for --method grid
        #[arg(long, default_value_t = 0.01)]
        step: f64,
    },
    /// Cut-set capacity upper bound, its schedule, and the gap to DF
    Bound {
        /// Topology file (TOML)
        file: PathBuf,
        /// Seed for the random-schedule dominance probe
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
    /// Write a CSV parameter sweep
    Sweep {
        #[command(subcommand)]
        kind: SweepCmd,
    },
    /// Topology diagnostics: size, link gains, SNR ordering
    Check {
        /// Topology file (TOML)
        file: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    /// Growing bottleneck-prefix search (any topology)
    Algo2,
    /// Single equality-constrained LP; needs SNR-degraded node order
    Algo3,
    /// Direct maximin LP
    Lp,
    /// Exhaustive simplex lattice at --step
    Grid,
    /// Four-node closed forms
    Closed4,
}

#[derive(Subcommand)]
enum SweepCmd {
    /// Move relay 3's y-coordinate across a range (4-node files)
    #[command(name = "relay-position-1d")]
    Relay1d {
        /// Topology file (TOML, 4 nodes, geometric form)
        file: PathBuf,
        /// Inclusive sweep range lo:hi for the y-coordinate
        #[arg(long, default_value = "0:100")]
        range: String,
        /// Sweep increment
        #[arg(long, default_value_t = 1.0)]
        step: f64,
        /// Output CSV path
        #[arg(long)]
        out: PathBuf,
        /// Worker threads (default: all cores)
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Move both relays' y-coordinates across a range (4-node files)
    #[command(name = "relay-position-2d")]
    Relay2d {
        /// Topology file (TOML, 4 nodes, geometric form)
        file: PathBuf,
        /// Inclusive sweep range lo:hi applied to both coordinates
        #[arg(long, default_value = "0:100")]
        range: String,
        /// Sweep increment
        #[arg(long, default_value_t = 5.0)]
        step: f64,
        /// Output CSV path
        #[arg(long)]
        out: PathBuf,
        /// Worker threads (default: all cores)
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Solve equispaced lines over a range of node counts
    #[command(name = "node-count")]
    NodeCount {
        /// Inclusive node-count range lo:hi
        #[arg(long, default_value = "2:16")]
        d_range: String,
        /// Which duplex modes to evaluate
        #[arg(long, value_enum, default_value = "both")]
        duplex: sweeps::Duplex,
        /// Distance between neighboring nodes (default 1)
        #[arg(long, conflicts_with = "span")]
        spacing: Option<f64>,
        /// Total source-to-destination distance, split evenly
        #[arg(long)]
        span: Option<f64>,
        /// Per-node transmit power
        #[arg(long, default_value_t = 10.0)]
        power: f64,
        /// Per-node receiver noise
        #[arg(long, default_value_t = 1.0)]
        noise: f64,
        /// Path-loss scale
        #[arg(long, default_value_t = 1.0)]
        kappa: f64,
        /// Path-loss exponent
        #[arg(long, default_value_t = 2.0)]
        eta: f64,
        /// Output CSV path
        #[arg(long)]
        out: PathBuf,
        /// Worker threads (default: all cores)
        #[arg(long)]
        threads: Option<usize>,
    },
}

fn main() -> ExitCode {
    // Die quietly when stdout closes early (`hdmrc ... | head`), like
    // other line-oriented tools, instead of panicking on the write.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Precondition(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn run(cmd: Command) -> Result<(), CliError> {
    match cmd {
        Command::Rate { file, schedule } => cmd_rate(&file, schedule.as_deref()),
        Command::Schedule { file, method, step } => cmd_schedule(&file, method, step),
        Command::Bound { file, seed } => cmd_bound(&file, seed),
        Command::Sweep { kind } => cmd_sweep(kind),
        Command::Check { file } => cmd_check(&file),
    }
}

fn parse_schedule_list(text: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .map(|t| {
            let t = t.trim();
            t.parse::<f64>()
                .map_err(|e| CliError::Input(format!("schedule entry {t:?}: {e}")))
        })
        .collect()
}

fn parse_f64_range(s: &str) -> Result<(f64, f64), CliError> {
    let err = || CliError::Input(format!("range must be lo:hi, got {s:?}"));
    let (a, b) = s.split_once(':').ok_or_else(err)?;
    let lo = a.trim().parse::<f64>().map_err(|_| err())?;
    let hi = b.trim().parse::<f64>().map_err(|_| err())?;
    Ok((lo, hi))
}

fn parse_usize_range(s: &str) -> Result<(usize, usize), CliError> {
    let err = || CliError::Input(format!("range must be lo:hi, got {s:?}"));
    let (a, b) = s.split_once(':').ok_or_else(err)?;
    let lo = a.trim().parse::<usize>().map_err(|_| err())?;
    let hi = b.trim().parse::<usize>().map_err(|_| err())?;
    Ok((lo, hi))
}

fn print_report_body(report: &SolveReport) {
    print!("{}", schedule_table(&report.schedule));
    print!("{}", rates_table(&report.reception_rates, &report.bottleneck));
    println!("df_rate: {}", fmt_sig(report.df_rate));
    println!(
        "bottleneck: {}",
        report
            .bottleneck
            .iter()
            .map(|n| n.to_string())
            .collect::<Vec<_>>()
            .join(",")
    );
    if let (Some(ub), Some(gap)) = (report.cutset_bound, report.gap) {
        println!("cutset_bound: {}", fmt_sig(ub));
        println!("gap: {}", fmt_sig(gap));
    }
}

fn report_json(command: &str, path: &Path, report: &SolveReport) -> serde_json::Value {
    let d = report.schedule.node_count();
    serde_json::json!({
        "command": command,
        "file": path.display().to_string(),
        "method": report.method.tag(),
        "df_rate": report.df_rate,
        "cutset_bound": report.cutset_bound,
        "gap": report.gap,
        "bottleneck": report.bottleneck,
        "nodes": (2..=d).collect::<Vec<_>>(),
        "reception_rates": report.reception_rates.values(),
        "states": state_labels(d),
        "schedule": report.schedule.probs(),
    })
}

fn cmd_rate(path: &Path, schedule: Option<&str>) -> Result<(), CliError> {
    let loaded = topofile::load(path)?;
    let (topo, g) = (&loaded.topo, &loaded.gains);
    println!("file: {}", path.display());
    println!("nodes: {}  states: {}", topo.node_count(), topo.state_count());

    match schedule {
        Some(text) => {
            let p = parse_schedule_list(text)?;
            let sched = Schedule::new(p, topo.node_count())
                .map_err(|e| CliError::Input(format!("schedule override: {e}")))?;
            let rv = reception_rates(&sched, g, topo);
            let (df, bottleneck) = df_rate(&sched, g, topo);
            println!("method: provided schedule");
            print!("{}", schedule_table(&sched));
            print!("{}", rates_table(&rv, &bottleneck));
            println!("df_rate: {}", fmt_sig(df));
            println!(
                "bottleneck: {}",
                bottleneck.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(",")
            );
            let json = serde_json::json!({
                "command": "rate",
                "file": path.display().to_string(),
                "method": "provided",
                "df_rate": df,
                "bottleneck": bottleneck,
                "nodes": (2..=topo.node_count()).collect::<Vec<_>>(),
                "reception_rates": rv.values(),
                "states": state_labels(topo.node_count()),
                "schedule": sched.probs(),
            });
            println!("RESULT {json}");
        }
        None => {
            let report = solve_algorithm2(topo, g).map_err(solver_err)?;
            println!("method: {} (optimal schedule)", report.method.tag());
            print_report_body(&report);
            println!("RESULT {}", report_json("rate", path, &report));
        }
    }
    Ok(())
}

fn cmd_schedule(path: &Path, method: Method, step: f64) -> Result<(), CliError> {
    let loaded = topofile::load(path)?;
    let (topo, g) = (&loaded.topo, &loaded.gains);
    let report = match method {
        Method::Algo2 => solve_algorithm2(topo, g),
        Method::Algo3 => solve_algorithm3(topo, g),
        Method::Lp => solve_maximin(topo, g),
        Method::Grid => {
            if !(step.is_finite() && step > 0.0 && step <= 1.0) {
                return Err(CliError::Input(format!("--step must be in (0, 1], got {step}")));
            }
            solve_grid(topo, g, step)
        }
        Method::Closed4 => four_node_closed_form(topo, g),
    }
    .map_err(solver_err)?;
    println!("file: {}", path.display());
    println!("nodes: {}  states: {}", topo.node_count(), topo.state_count());
    println!("method: {}", report.method.tag());
    print_report_body(&report);
    println!("RESULT {}", report_json("schedule", path, &report));
    Ok(())
}

fn cmd_bound(path: &Path, seed: u64) -> Result<(), CliError> {
    let loaded = topofile::load(path)?;
    let (topo, g) = (&loaded.topo, &loaded.gains);
    let (bound_sched, ub) = cutset_bound_opt(topo, g).map_err(solver_err)?;
    let df_report = solve_algorithm2(topo, g).map_err(solver_err)?;
    let gap = ub - df_report.df_rate;

    // Dominance probe: no random schedule's worst cut may beat the
    // reported maximin bound. Sample count shrinks with the quadratic
    // per-sample cost on large state spaces.
    let m = topo.state_count();
    let samples = ((1e9 / (m as f64 * m as f64)) as usize).clamp(100, 10_000);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_cut = f64::NEG_INFINITY;
    for _ in 0..samples {
        // Exponential spacings normalized: uniform on the simplex.
        let mut p: Vec<f64> = (0..m)
            .map(|_| -f64::ln(rng.random_range(1e-12..1.0)))
            .collect();
        let total: f64 = p.iter().sum();
        p.iter_mut().for_each(|v| *v /= total);
        let sched = Schedule::normalized(p, topo.node_count())
            .map_err(|e| CliError::Precondition(e.to_string()))?;
        let (cut, _) = cutset_min(&sched, g, topo);
        if cut > max_cut {
            max_cut = cut;
        }
    }
    let probe_ok = max_cut <= ub + 1e-9;

    println!("file: {}", path.display());
    println!("nodes: {}  states: {}", topo.node_count(), m);
    println!("cutset_bound: {}", fmt_sig(ub));
    print!("{}", schedule_table(&bound_sched));
    println!("df_rate: {}", fmt_sig(df_report.df_rate));
    println!("gap: {}", fmt_sig(gap));
    println!(
        "probe: {} ({} samples, seed {seed}, best sampled cut {})",
        if probe_ok { "ok" } else { "FAILED" },
        samples,
        fmt_sig(max_cut)
    );
    let json = serde_json::json!({
        "command": "bound",
        "file": path.display().to_string(),
        "cutset_bound": ub,
        "df_rate": df_report.df_rate,
        "gap": gap,
        "states": state_labels(topo.node_count()),
        "schedule": bound_sched.probs(),
        "probe": {"samples": samples, "seed": seed, "max_cut": max_cut, "ok": probe_ok},
    });
    println!("RESULT {json}");
    if !probe_ok {
        return Err(CliError::Precondition(format!(
            "dominance probe found a schedule with worst cut {max_cut} above the bound {ub}"
        )));
    }
    Ok(())
}

fn cmd_sweep(kind: SweepCmd) -> Result<(), CliError> {
    let (name, outcome) = match kind {
        SweepCmd::Relay1d { file, range, step, out, threads } => {
            let loaded = topofile::load(&file)?;
            let (lo, hi) = parse_f64_range(&range)?;
            (
                "relay-position-1d",
                sweeps::relay_position_1d(&loaded.file, lo, hi, step, &out, threads)?,
            )
        }
        SweepCmd::Relay2d { file, range, step, out, threads } => {
            let loaded = topofile::load(&file)?;
            let (lo, hi) = parse_f64_range(&range)?;
            (
                "relay-position-2d",
                sweeps::relay_position_2d(&loaded.file, lo, hi, step, &out, threads)?,
            )
        }
        SweepCmd::NodeCount {
            d_range,
            duplex,
            spacing,
            span,
            power,
            noise,
            kappa,
            eta,
            out,
            threads,
        } => {
            let (lo, hi) = parse_usize_range(&d_range)?;
            (
                "node-count",
                sweeps::node_count_sweep(
                    lo, hi, duplex, spacing, span, power, noise, kappa, eta, &out, threads,
                )?,
            )
        }
    };
    println!("wrote {} rows to {}", outcome.rows, outcome.out.display());
    let json = serde_json::json!({
        "command": "sweep",
        "kind": name,
        "rows": outcome.rows,
        "out": outcome.out.display().to_string(),
    });
    println!("RESULT {json}");
    Ok(())
}

fn cmd_check(path: &Path) -> Result<(), CliError> {
    let loaded = topofile::load(path)?;
    let (topo, g) = (&loaded.topo, &loaded.gains);
    let d = topo.node_count();
    println!("file: {}", path.display());
    println!("nodes: {d}");
    println!("relays: {}", topo.relay_count());
    if d <= MAX_NODES {
        println!("states: {}", topo.state_count());
    } else {
        println!(
            "states: 2^{} (beyond the D={MAX_NODES} scheduling cap; full-duplex rates only)",
            d - 2
        );
    }
    let violation = rsnr_violation(g, topo);
    match &violation {
        None if d == 2 => println!("rSNR-degraded: yes (vacuous)"),
        None => println!("rSNR-degraded: yes"),
        Some(v) => {
            println!("rSNR-degraded: no, triple ({},{},{})", v.i, v.j, v.k);
            println!(
                "  node {} reaches node {} at SNR {} but farther node {} at SNR {}",
                v.i,
                v.j,
                fmt_sig(v.snr_near),
                v.k,
                fmt_sig(v.snr_far)
            );
        }
    }
    println!("gains (transmitter -> receiver):");
    for i in 1..d {
        let mut parts = Vec::new();
        for k in 2..=d {
            if k != i {
                parts.push(format!("{i}->{k} {}", fmt_sig(g.lambda(i, k))));
            }
        }
        println!("  {}", parts.join("  "));
    }
    let json = serde_json::json!({
        "command": "check",
        "file": path.display().to_string(),
        "nodes": d,
        "relays": topo.relay_count(),
        "rsnr_degraded": violation.is_none(),
        "violation": violation.as_ref().map(|v| serde_json::json!({
            "i": v.i, "j": v.j, "k": v.k,
            "snr_near": v.snr_near, "snr_far": v.snr_far,
        })),
    });
    println!("RESULT {json}");
    Ok(())
}
