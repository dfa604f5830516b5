//! Parameter sweeps. Rows are computed in parallel and written in
//! deterministic sweep order, so re-running a sweep reproduces the CSV
//! byte for byte.

use std::path::{Path, PathBuf};

use hdmrc::{
    build_gain_matrix, full_duplex_df_rate, solve_algorithm2, solve_df_schedule, Topology,
};
use rayon::prelude::*;

use crate::topofile::TopologyFile;
use crate::CliError;
use crate::format::fmt_sig;

pub struct SweepOutcome {
    pub rows: usize,
    pub out: PathBuf,
}

/// Inclusive `lo + i*step` ticks; the endpoint is kept when it lands
/// within a relative hair of `hi`.
fn ticks(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
    (0..count).map(|i| lo + i as f64 * step).collect()
}

fn validate_range(lo: f64, hi: f64, step: f64) -> Result<(), CliError> {
    if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
        return Err(CliError::Input(format!("bad range {lo}:{hi}")));
    }
    if !(step.is_finite() && step > 0.0) {
        return Err(CliError::Input(format!("sweep step must be > 0, got {step}")));
    }
    Ok(())
}

fn run_pool<T: Send>(
    threads: Option<usize>,
    body: impl FnOnce() -> Result<Vec<T>, CliError> + Send,
) -> Result<Vec<T>, CliError> {
    match threads {
        None => body(),
        Some(n) => {
            if n == 0 {
                return Err(CliError::Input("--threads must be at least 1".into()));
            }
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Input(format!("thread pool: {e}")))?;
            pool.install(body)
        }
    }
}

fn write_csv(out: &Path, header: &str, rows: &[String]) -> Result<(), CliError> {
    let mut text = String::with_capacity(rows.len() * 64 + header.len() + 1);
    text.push_str(header);
    text.push('\n');
    for row in rows {
        text.push_str(row);
        text.push('\n');
    }
    std::fs::write(out, text)
        .map_err(|e| CliError::Input(format!("{}: {e}", out.display())))
}

/// Shared solve for the relay-position sweeps: moves relay y-coordinates
/// on the file's 4-node geometry and reports the optimum plus the bound.
fn position_row(file: &TopologyFile, y2: f64, y3: f64) -> Result<String, CliError> {
    let mut nodes = file.nodes.clone().expect("checked before dispatch");
    nodes[1][1] = y2;
    nodes[2][1] = y3;
    let topo = Topology::from_positions(
        nodes,
        file.powers.clone(),
        file.noises.clone(),
        file.kappa,
        file.eta,
    )
    .map_err(|e| CliError::Input(e.to_string()))?;
    let g = build_gain_matrix(&topo).map_err(|e| CliError::Input(e.to_string()))?;
    let report = solve_algorithm2(&topo, &g).map_err(crate::solver_err)?;
    let ub = report
        .cutset_bound
        .expect("4-node reports always carry the bound");
    let p = report.schedule.probs();
    Ok(format!(
        "{},{},{},{},{},{},{},{},{}",
        fmt_sig(y2),
        fmt_sig(y3),
        fmt_sig(report.df_rate),
        fmt_sig(ub),
        report.bottleneck.len(),
        fmt_sig(p[0]),
        fmt_sig(p[1]),
        fmt_sig(p[2]),
        fmt_sig(p[3]),
    ))
}

const POSITION_HEADER: &str = "y2,y3,df_rate,ub_rate,bottleneck_size,p0,p1,p2,p3";

fn check_four_node_positions(file: &TopologyFile) -> Result<(), CliError> {
    if file.nodes.is_none() {
        return Err(CliError::Precondition(
            "relay-position sweeps need node coordinates, not an explicit gain matrix".into(),
        ));
    }
    let d = file.powers.len() + 1;
    if d != 4 {
        return Err(CliError::Precondition(format!(
            "relay-position sweeps need a 4-node topology, got {d} nodes"
        )));
    }
    Ok(())
}

/// Sweeps the second relay's y-coordinate (node 3) over the range; the
/// first relay stays at its file position.
pub fn relay_position_1d(
    file: &TopologyFile,
    lo: f64,
    hi: f64,
    step: f64,
    out: &Path,
    threads: Option<usize>,
) -> Result<SweepOutcome, CliError> {
    check_four_node_positions(file)?;
    validate_range(lo, hi, step)?;
    let y2 = file.nodes.as_ref().unwrap()[1][1];
    let y3s = ticks(lo, hi, step);
    let rows = run_pool(threads, || {
        y3s.par_iter()
            .map(|&y3| position_row(file, y2, y3))
            .collect()
    })?;
    write_csv(out, POSITION_HEADER, &rows)?;
    Ok(SweepOutcome { rows: rows.len(), out: out.to_path_buf() })
}

/// Sweeps both relay y-coordinates over the same range, y2 outer, y3
/// inner (lexicographic row order).
pub fn relay_position_2d(
    file: &TopologyFile,
    lo: f64,
    hi: f64,
    step: f64,
    out: &Path,
    threads: Option<usize>,
) -> Result<SweepOutcome, CliError> {
    check_four_node_positions(file)?;
    validate_range(lo, hi, step)?;
    let axis = ticks(lo, hi, step);
    let mut points = Vec::with_capacity(axis.len() * axis.len());
    for &y2 in &axis {
        for &y3 in &axis {
            points.push((y2, y3));
        }
    }
    let rows = run_pool(threads, || {
        points
            .par_iter()
            .map(|&(y2, y3)| position_row(file, y2, y3))
            .collect()
    })?;
    write_csv(out, POSITION_HEADER, &rows)?;
    Ok(SweepOutcome { rows: rows.len(), out: out.to_path_buf() })
}

#[derive(Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Duplex {
    Full,
    Half,
    Both,
}

#[allow(clippy::too_many_arguments)]
pub fn node_count_sweep(
    d_lo: usize,
    d_hi: usize,
    duplex: Duplex,
    spacing: Option<f64>,
    span: Option<f64>,
    power: f64,
    noise: f64,
    kappa: f64,
    eta: f64,
    out: &Path,
    threads: Option<usize>,
) -> Result<SweepOutcome, CliError> {
    if d_lo < 2 || d_hi < d_lo {
        return Err(CliError::Input(format!("bad node-count range {d_lo}:{d_hi}")));
    }
    if let Some(s) = spacing.or(span) {
        if !(s.is_finite() && s > 0.0) {
            return Err(CliError::Input(format!("spacing/span must be > 0, got {s}")));
        }
    }
    let half_wanted = matches!(duplex, Duplex::Half | Duplex::Both);
    if half_wanted && d_hi > hdmrc::MAX_NODES {
        return Err(CliError::Precondition(format!(
            "half-duplex scheduling enumerates 2^(D-2) states and is capped at D = {}; \
             sweep full duplex separately for larger networks",
            hdmrc::MAX_NODES
        )));
    }

    // Equispaced line: node i at ((i-1) * gap, 0), gap from --spacing or
    // from dividing --span among the D-1 hops.
    let line = |d: usize| -> Result<(Topology, hdmrc::GainMatrix), CliError> {
        let gap = match (spacing, span) {
            (Some(s), None) => s,
            (None, Some(s)) => s / (d - 1) as f64,
            (None, None) => 1.0,
            (Some(_), Some(_)) => unreachable!("clap rejects the combination"),
        };
        let positions = (0..d).map(|i| [i as f64 * gap, 0.0]).collect();
        let topo = Topology::from_positions(
            positions,
            vec![power; d - 1],
            vec![noise; d - 1],
            kappa,
            eta,
        )
        .map_err(|e| CliError::Input(e.to_string()))?;
        let g = build_gain_matrix(&topo).map_err(|e| CliError::Input(e.to_string()))?;
        Ok((topo, g))
    };

    let mut specs = Vec::new();
    for d in d_lo..=d_hi {
        if matches!(duplex, Duplex::Full | Duplex::Both) {
            specs.push((d, "full"));
        }
        if matches!(duplex, Duplex::Half | Duplex::Both) {
            specs.push((d, "half"));
        }
    }
    let rows = run_pool(threads, || {
        specs
            .par_iter()
            .map(|&(d, mode)| {
                let (topo, g) = line(d)?;
                let df = match mode {
                    "full" => full_duplex_df_rate(&g, &topo).0,
                    _ => solve_df_schedule(&topo, &g).map_err(crate::solver_err)?.1,
                };
                Ok(format!("{d},{mode},{}", fmt_sig(df)))
            })
            .collect()
    })?;
    write_csv(out, "D,duplex,df_rate", &rows)?;
    Ok(SweepOutcome { rows: rows.len(), out: out.to_path_buf() })
}
