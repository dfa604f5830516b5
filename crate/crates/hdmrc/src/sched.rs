//! Schedule optimizers.
//!
//! The maximin schedule problem — pick state probabilities maximizing the
//! worst reception rate — always has an optimum where some *prefix* of the
//! reception rates (nodes `2..=B+1`) are all equal and every later node's
//! rate is strictly larger. The solvers here exploit that structure:
//!
//! * [`solve_algorithm2`]: grows the candidate bottleneck prefix `B = 1, 2,
//!   …` and, for each, maximizes the common prefix rate subject to the
//!   equalities. It accepts the first prefix whose *entire* optimal face
//!   contains a point keeping all later rates strictly above (checked by a
//!   second LP that maximizes the worst slack); otherwise it grows `B`.
//!   Boundary ties therefore land in the larger prefix, which cannot change
//!   the value.
//! * [`solve_algorithm3`]: when received SNRs strictly decay along the node
//!   order ([`is_rsnr_degraded`]), only the full prefix can win, so one
//!   equality-constrained LP suffices. Refuses other inputs.
//! * [`solve_algorithm1`]: the general subset search over all `2^K - 1`
//!   candidate bottleneck sets (not just prefixes), for raw rate rows.
//! * [`four_node_closed_form`]: for `D = 4`, the three bottleneck sizes
//!   reduce to interval checks and a tiny linear system; degenerate ties
//!   fall back to [`solve_algorithm2`].
//! * [`cutset_bound_opt`] maximizes the worst cut rate — the capacity upper
//!   bound — and [`grid_oracle`] brute-forces a simplex lattice as an
//!   independent check.

use crate::linprog::{
    equality_constrained_max, maximin_lp, solve_lp, LinProgError, LinearProgram, LpStatus,
    VarBound,
};
use crate::model::{build_gain_matrix, GainMatrix, ModelError, Schedule, Topology};
use crate::rates::{
    cut_coeffs, cutset_min, reception_coeffs, reception_rates, RateVector, RsnrViolation,
};
use thiserror::Error;

/// Strictness margin: a prefix/subset is accepted only when every outside
/// rate can exceed the bottleneck rate by more than this.
const STRICT_MARGIN: f64 = 1e-9;

/// Absolute tolerance for reading the bottleneck set off a rate vector.
const BOTTLENECK_ABS_TOL: f64 = 1e-9;

/// Largest simplex lattice the grid oracle will scan.
const GRID_POINT_LIMIT: f64 = 1e8;

/// Reports skip the cut-set bound above this many states; the dense cut
/// program needs a tableau quadratic in the state count.
const CUTSET_REPORT_MAX_STATES: usize = 4096;

#[derive(Debug, Error, PartialEq)]
pub enum SchedError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Lp(#[from] LinProgError),
    #[error(
        "not relay-SNR degraded: node {i}'s signal reaches node {j} at SNR {snr_near} \
         but node {k} at SNR {snr_far}"
    )]
    NotRsnrDegraded {
        i: usize,
        j: usize,
        k: usize,
        snr_near: f64,
        snr_far: f64,
    },
    #[error("solver needs a {expected}-node channel, got {got} nodes")]
    WrongNodeCount { expected: usize, got: usize },
    #[error("grid step must be in (0, 1], got {step}")]
    BadStep { step: f64 },
    #[error("simplex lattice has ~{points:.3e} points, over the {limit:.0e} limit")]
    LatticeTooLarge { points: f64, limit: f64 },
    #[error("rate rows must span a power-of-two state count, got {got}")]
    StatesNotPowerOfTwo { got: usize },
    #[error("decoding-order search supports at most {limit} relays, got {relays}")]
    TooManyRelays { relays: usize, limit: usize },
    #[error("internal: {0}")]
    Unsolvable(&'static str),
}

impl From<RsnrViolation> for SchedError {
    fn from(v: RsnrViolation) -> Self {
        SchedError::NotRsnrDegraded {
            i: v.i,
            j: v.j,
            k: v.k,
            snr_near: v.snr_near,
            snr_far: v.snr_far,
        }
    }
}

/// Which solver produced a report.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMethod {
    Algorithm1,
    Algorithm2,
    Algorithm3,
    ClosedForm4Node,
    LpOracle,
    GridOracle,
}

impl SolveMethod {
    /// Stable identifier used in machine-readable output.
    pub fn tag(&self) -> &'static str {
        match self {
            SolveMethod::Algorithm1 => "algorithm1",
            SolveMethod::Algorithm2 => "algorithm2",
            SolveMethod::Algorithm3 => "algorithm3",
            SolveMethod::ClosedForm4Node => "closed_form_4node",
            SolveMethod::LpOracle => "lp_oracle",
            SolveMethod::GridOracle => "grid_oracle",
        }
    }
}

/// Outcome of a schedule solve.
///
/// `df_rate` is always recomputed from `schedule` through the rate module
/// (never taken from an LP objective), so reports from different solvers
/// are directly comparable. `cutset_bound` and `gap` are filled by the
/// topology-aware solvers when the cut program is tractable
/// (`2^(D-2) <= 4096` states); the raw-row solver leaves them `None`.
#[derive(Debug, Clone)]
pub struct SolveReport {
    pub schedule: Schedule,
    pub df_rate: f64,
    /// Nodes attaining the worst reception rate, ascending. For the
    /// prefix-structured solvers this is `2..=B+1`.
    pub bottleneck: Vec<usize>,
    pub reception_rates: RateVector,
    pub method: SolveMethod,
    pub cutset_bound: Option<f64>,
    pub gap: Option<f64>,
}

enum BottleneckSpec {
    /// Trust the solver's structural bottleneck set.
    Nodes(Vec<usize>),
    /// Read it off the recomputed rates at `BOTTLENECK_ABS_TOL`.
    FromRates,
}

fn build_report(
    topo: &Topology,
    g: &GainMatrix,
    schedule: Schedule,
    spec: BottleneckSpec,
    method: SolveMethod,
) -> Result<SolveReport, SchedError> {
    let rv = reception_rates(&schedule, g, topo);
    let df = rv.values().iter().copied().fold(f64::INFINITY, f64::min);
    let bottleneck = match spec {
        BottleneckSpec::Nodes(nodes) => nodes,
        BottleneckSpec::FromRates => rv
            .iter()
            .filter(|(_, r)| r - df <= BOTTLENECK_ABS_TOL)
            .map(|(k, _)| k)
            .collect(),
    };
    let (cutset_bound, gap) = if topo.state_count() <= CUTSET_REPORT_MAX_STATES {
        let (_, ub) = cutset_bound_opt(topo, g)?;
        (Some(ub), Some(ub - df))
    } else {
        (None, None)
    };
    Ok(SolveReport {
        schedule,
        df_rate: df,
        bottleneck,
        reception_rates: rv,
        method,
        cutset_bound,
        gap,
    })
}

/// Maximizes, over the optimal face of the subset-equalized program, the
/// worst margin by which outside rates exceed the subset rate:
///
/// `max u` over schedules with the subset rates equal, the lead rate pinned
/// at its maximum `pinned`, and `u <= R_j - R_lead` for every outside row.
///
/// Returns the margin and its witness, or `None` when the pinned face is
/// (numerically) empty. Pinning is exact on purpose: relaxing it would let
/// exact rate ties masquerade as strict ones.
fn strictness_probe(
    rows: &[Vec<f64>],
    subset: &[usize],
    pinned: f64,
) -> Result<Option<(f64, Vec<f64>)>, LinProgError> {
    let k = rows.len();
    let m = rows[0].len();
    let lead = subset[0];
    let n = m + 1; // schedule plus the margin variable
    let mut objective = vec![0.0; n];
    objective[m] = 1.0;

    let mut simplex_row = vec![1.0; n];
    simplex_row[m] = 0.0;
    let mut eqs = vec![(simplex_row, 1.0)];
    for &j in &subset[1..] {
        let mut a = vec![0.0; n];
        for c in 0..m {
            a[c] = rows[lead][c] - rows[j][c];
        }
        eqs.push((a, 0.0));
    }

    let mut ineqs = Vec::new();
    let mut pin = vec![0.0; n];
    for c in 0..m {
        pin[c] = -rows[lead][c];
    }
    ineqs.push((pin, -pinned));
    let mut outside = vec![true; k];
    for &j in subset {
        outside[j] = false;
    }
    for (j, _) in outside.iter().enumerate().filter(|(_, &o)| o) {
        let mut a = vec![0.0; n];
        for c in 0..m {
            a[c] = rows[lead][c] - rows[j][c];
        }
        a[m] = 1.0;
        ineqs.push((a, 0.0));
    }

    let mut bounds = vec![VarBound::LowerBound(0.0); n];
    bounds[m] = VarBound::Free;
    let sol = solve_lp(&LinearProgram {
        objective,
        eq_constraints: eqs,
        ineq_constraints: ineqs,
        bounds,
    })?;
    match sol.status {
        LpStatus::Optimal => Ok(Some((sol.value, sol.x[..m].to_vec()))),
        LpStatus::Infeasible => Ok(None),
        // u is bounded above by the outside-rate gaps on a compact simplex.
        LpStatus::Unbounded => Err(LinProgError::BadStatus(LpStatus::Unbounded)),
    }
}

/// Prefix search shared by the half-duplex solvers: for `B = 1, 2, …`
/// maximize the common rate of the first `B` rows; accept the first `B`
/// whose optimal face keeps all later rows strictly larger (margin
/// `STRICT_MARGIN`), returning the max-margin witness. `B = K` needs no
/// strictness and terminates the search.
fn bottleneck_prefix_search(rows: &[Vec<f64>]) -> Result<(Vec<f64>, usize), SchedError> {
    let k = rows.len();
    for b in 1..=k {
        let subset: Vec<usize> = (0..b).collect();
        let sol = equality_constrained_max(rows, &subset)?;
        let Some((p, v)) = sol.optimal() else {
            continue; // empty equal-rate face; try a longer prefix
        };
        if b == k {
            return Ok((p.to_vec(), b));
        }
        if let Some((margin, witness)) = strictness_probe(rows, &subset, v)? {
            if margin > STRICT_MARGIN {
                return Ok((witness, b));
            }
        }
    }
    Err(SchedError::Unsolvable(
        "no bottleneck prefix admits a schedule",
    ))
}

/// Optimal half-duplex schedule via the growing-prefix search. Works for
/// any gain structure within the state-count cap.
pub fn solve_algorithm2(topo: &Topology, g: &GainMatrix) -> Result<SolveReport, SchedError> {
    let rows = reception_coeffs(g, topo)?;
    let (p, b) = bottleneck_prefix_search(&rows)?;
    let schedule = Schedule::normalized(p, topo.node_count())?;
    let nodes = (2..=b + 1).collect();
    build_report(topo, g, schedule, BottleneckSpec::Nodes(nodes), SolveMethod::Algorithm2)
}

/// The prefix search alone: optimal schedule, its DF rate, and the
/// bottleneck nodes, without the cut-set bound. For sweeps over many or
/// large instances where the bound's dense LP is unwanted.
pub fn solve_df_schedule(
    topo: &Topology,
    g: &GainMatrix,
) -> Result<(Schedule, f64, Vec<usize>), SchedError> {
    let rows = reception_coeffs(g, topo)?;
    let (p, b) = bottleneck_prefix_search(&rows)?;
    let schedule = Schedule::normalized(p, topo.node_count())?;
    let (df, _) = crate::rates::df_rate(&schedule, g, topo);
    Ok((schedule, df, (2..=b + 1).collect()))
}

/// Optimal schedule for relay-SNR-degraded channels: the bottleneck is
/// always every relay plus the destination, so a single
/// equality-constrained LP solves it. Refuses inputs that are not
/// relay-SNR degraded, naming the violating triple.
pub fn solve_algorithm3(topo: &Topology, g: &GainMatrix) -> Result<SolveReport, SchedError> {
    if let Some(v) = crate::rates::rsnr_violation(g, topo) {
        return Err(v.into());
    }
    let rows = reception_coeffs(g, topo)?;
    let k = rows.len();
    let subset: Vec<usize> = (0..k).collect();
    let sol = equality_constrained_max(rows.as_slice(), &subset)?;
    let Some((p, _)) = sol.optimal() else {
        return Err(SchedError::Unsolvable(
            "full equal-rate face is empty on a degraded channel",
        ));
    };
    let schedule = Schedule::normalized(p.to_vec(), topo.node_count())?;
    let nodes = (2..=topo.node_count()).collect();
    build_report(topo, g, schedule, BottleneckSpec::Nodes(nodes), SolveMethod::Algorithm3)
}

/// General bottleneck-subset search over raw rate rows: tries every
/// nonempty subset of rows (sizes ascending, lexicographic within a size),
/// keeps candidates whose outside rates can stay strictly larger, and
/// returns the best. Row `i` is interpreted as the reception rate of node
/// `i + 2` over `2^(D-2)` states, so the row length must be a power of
/// two within the size cap.
pub fn solve_algorithm1(rate_rows: &[Vec<f64>]) -> Result<SolveReport, SchedError> {
    let m = crate::linprog::validate_rows(rate_rows)?;
    if !m.is_power_of_two() || m > (1 << (crate::model::MAX_NODES - 2)) {
        return Err(SchedError::StatesNotPowerOfTwo { got: m });
    }
    let d = (m.trailing_zeros() as usize) + 2;
    let k = rate_rows.len();

    let mut best: Option<(f64, Vec<f64>, Vec<usize>)> = None;
    let mut consider = |value: f64, p: Vec<f64>, subset: &[usize]| {
        if best.as_ref().map_or(true, |(bv, _, _)| value > *bv) {
            best = Some((value, p, subset.to_vec()));
        }
    };

    for size in 1..=k {
        for subset in combinations(k, size) {
            let sol = equality_constrained_max(rate_rows, &subset)?;
            let Some((p, v)) = sol.optimal() else { continue };
            if size == k {
                let value = worst_row(rate_rows, p);
                consider(value, p.to_vec(), &subset);
                continue;
            }
            let Some((margin, witness)) = strictness_probe(rate_rows, &subset, v)? else {
                continue;
            };
            if margin > STRICT_MARGIN {
                let value = worst_row(rate_rows, &witness);
                consider(value, witness, &subset);
            }
        }
    }

    let Some((_, p, subset)) = best else {
        return Err(SchedError::Unsolvable("no subset yields a candidate"));
    };
    let schedule = Schedule::normalized(p, d)?;
    let rv = RateVector::from_values(
        rate_rows
            .iter()
            .map(|row| crate::linprog::dot(row, schedule.probs()))
            .collect(),
    );
    let df = rv.values().iter().copied().fold(f64::INFINITY, f64::min);
    Ok(SolveReport {
        schedule,
        df_rate: df,
        bottleneck: subset.iter().map(|i| i + 2).collect(),
        reception_rates: rv,
        method: SolveMethod::Algorithm1,
        cutset_bound: None,
        gap: None,
    })
}

fn worst_row(rows: &[Vec<f64>], p: &[f64]) -> f64 {
    rows.iter()
        .map(|row| crate::linprog::dot(row, p))
        .fold(f64::INFINITY, f64::min)
}

/// All `size`-subsets of `0..k` in lexicographic order.
fn combinations(k: usize, size: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(size);
    fn rec(start: usize, k: usize, size: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == size {
            out.push(cur.clone());
            return;
        }
        let remaining = size - cur.len();
        for i in start..=k - remaining {
            cur.push(i);
            rec(i + 1, k, size, cur, out);
            cur.pop();
        }
    }
    rec(0, k, size, &mut cur, &mut out);
    out
}

/// Closed forms for the 4-node channel. The three bottleneck sizes reduce
/// to, in order: a feasibility interval for `p0` (rate constant on it, so
/// the midpoint is returned), an explicit two-state schedule with a strict
/// side condition, and a 1-D box-constrained maximization along the line
/// where all three rates are equal. Degenerate geometries (equal first-hop
/// rates, singular equalization system, empty box) defer to
/// [`solve_algorithm2`], visible in the report's method tag.
pub fn four_node_closed_form(topo: &Topology, g: &GainMatrix) -> Result<SolveReport, SchedError> {
    let d = topo.node_count();
    if d != 4 {
        return Err(SchedError::WrongNodeCount { expected: 4, got: d });
    }
    let rows = reception_coeffs(g, topo)?;
    // Per-state rate scalars: node 2 listening (a2); node 3 with relay 2
    // silent (a3) or transmitting (b3); node 4 under the four transmit
    // patterns (a4; b4 with relay 3; c4 with relay 2; d4 with both).
    let a2 = rows[0][0];
    let a3 = rows[1][0];
    let b3 = rows[1][2];
    let a4 = rows[2][0];
    let b4 = rows[2][1];
    let c4 = rows[2][2];
    let d4 = rows[2][3];

    // Size-1 bottleneck: p2 = p3 = 0, rate a2 regardless of p0; feasible
    // iff some p0 in (0,1) keeps both other rates strictly above.
    let lo = if a3 > 0.0 { a2 / a3 } else { f64::INFINITY };
    let hi = {
        let den = b4 - a4;
        if den > 0.0 {
            (b4 - a2) / den
        } else if a2 < b4 {
            f64::INFINITY
        } else {
            f64::NEG_INFINITY
        }
    };
    let lo_eff = lo.max(0.0);
    let hi_eff = hi.min(1.0);
    if lo_eff < hi_eff {
        let p0 = 0.5 * (lo_eff + hi_eff);
        let schedule = Schedule::normalized(vec![p0, 1.0 - p0, 0.0, 0.0], 4)?;
        return build_report(
            topo,
            g,
            schedule,
            BottleneckSpec::Nodes(vec![2]),
            SolveMethod::ClosedForm4Node,
        );
    }

    // Equal first-hop rates make the size-2 denominator vanish; that
    // measure-zero tie is outside the closed forms.
    if a2 == a3 {
        return solve_algorithm2(topo, g);
    }

    // Size-2 bottleneck: p1 = p3 = 0 and rates 2, 3 equalized; valid when
    // the schedule is interior and node 4 stays strictly above.
    let den = b3 + a2 - a3;
    if den > 0.0 {
        let p0 = b3 / den;
        let p2 = (a2 - a3) / den;
        if p0 > 0.0 && p0 < 1.0 && b3 * (a2 - a4) < c4 * (a2 - a3) {
            let schedule = Schedule::normalized(vec![p0, 0.0, p2, 0.0], 4)?;
            return build_report(
                topo,
                g,
                schedule,
                BottleneckSpec::Nodes(vec![2, 3]),
                SolveMethod::ClosedForm4Node,
            );
        }
    }

    // Size-3 bottleneck: equalizing all three rates pins (p1,p2,p3) as an
    // affine function of p0; maximize r2 = a2 (p0 + p1(p0)) over the box.
    if let Some(p) = three_way_equalized(a2, a3, b3, a4, b4, c4, d4) {
        let schedule = Schedule::normalized(p.to_vec(), 4)?;
        return build_report(
            topo,
            g,
            schedule,
            BottleneckSpec::Nodes(vec![2, 3, 4]),
            SolveMethod::ClosedForm4Node,
        );
    }
    solve_algorithm2(topo, g)
}

/// Solves the all-rates-equal system for the 4-node channel: returns the
/// schedule `(p0, p1, p2, p3)` maximizing the common rate, or `None` when
/// the system is singular or the box-feasible segment is empty.
#[allow(clippy::too_many_arguments)]
fn three_way_equalized(
    a2: f64,
    a3: f64,
    b3: f64,
    a4: f64,
    b4: f64,
    c4: f64,
    d4: f64,
) -> Option<[f64; 4]> {
    // Rows: r2 = r3; r2 = r4; total probability. Unknowns (p1, p2, p3),
    // right-hand side affine in p0.
    let mat = [
        [a2, -b3, 0.0],
        [a2 - b4, -c4, -d4],
        [1.0, 1.0, 1.0],
    ];
    let u = solve3(mat, [0.0, 0.0, 1.0])?; // p0 = 0
    let w = solve3(mat, [a3 - a2, a4 - a2, 0.0])?; // p0 = 1
    let v = [w[0] - u[0], w[1] - u[1], w[2] - u[2]];

    // Box 0 <= u_i + v_i p0 <= 1 intersected with p0 in [0, 1].
    let mut lo = 0.0f64;
    let mut hi = 1.0f64;
    for i in 0..3 {
        if v[i].abs() <= 1e-14 {
            if !(-1e-9..=1.0 + 1e-9).contains(&u[i]) {
                return None;
            }
            continue;
        }
        let at0 = -u[i] / v[i];
        let at1 = (1.0 - u[i]) / v[i];
        if v[i] > 0.0 {
            lo = lo.max(at0);
            hi = hi.min(at1);
        } else {
            lo = lo.max(at1);
            hi = hi.min(at0);
        }
    }
    if lo > hi {
        return None;
    }
    // r2(p0) = a2 (p0 + p1(p0)) is linear; pick the favorable endpoint.
    let slope = a2 * (1.0 + v[0]);
    let p0 = if slope > 1e-15 {
        hi
    } else if slope < -1e-15 {
        lo
    } else {
        0.5 * (lo + hi)
    };
    Some([
        p0,
        u[0] + v[0] * p0,
        u[1] + v[1] * p0,
        u[2] + v[2] * p0,
    ])
}

/// 3x3 Gaussian elimination with partial pivoting; `None` when singular.
fn solve3(m: [[f64; 3]; 3], rhs: [f64; 3]) -> Option<[f64; 3]> {
    let mut a = [[0.0f64; 4]; 3];
    let mut scale = 0.0f64;
    for i in 0..3 {
        for j in 0..3 {
            a[i][j] = m[i][j];
            scale = scale.max(m[i][j].abs());
        }
        a[i][3] = rhs[i];
    }
    let tol = 1e-12 * scale.max(1.0);
    for col in 0..3 {
        let piv = (col..3).max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))?;
        if a[piv][col].abs() < tol {
            return None;
        }
        a.swap(col, piv);
        for i in 0..3 {
            if i != col {
                let f = a[i][col] / a[col][col];
                for j in col..4 {
                    a[i][j] -= f * a[col][j];
                }
            }
        }
    }
    Some([a[0][3] / a[0][0], a[1][3] / a[1][1], a[2][3] / a[2][2]])
}

/// Capacity upper bound: the schedule maximizing the worst cut rate, and
/// that worst cut rate recomputed at the returned schedule.
pub fn cutset_bound_opt(topo: &Topology, g: &GainMatrix) -> Result<(Schedule, f64), SchedError> {
    let rows = cut_coeffs(g, topo)?;
    let (p, _) = maximin_lp(&rows)?;
    let schedule = Schedule::normalized(p, topo.node_count())?;
    let (ub, _) = cutset_min(&schedule, g, topo);
    Ok((schedule, ub))
}

/// Exhaustive lattice search for the maximin schedule: evaluates
/// `min_i rate_rows[i] . p` at every point of the simplex lattice with
/// denominator `round(1/step)` and returns the best (first in
/// lexicographic order on ties).
pub fn grid_oracle(rate_rows: &[Vec<f64>], step: f64) -> Result<(Vec<f64>, f64), SchedError> {
    let m = crate::linprog::validate_rows(rate_rows)?;
    if !(step > 0.0 && step <= 1.0) || !step.is_finite() {
        return Err(SchedError::BadStep { step });
    }
    let n = (1.0 / step).round() as u64;
    if n == 0 {
        return Err(SchedError::BadStep { step });
    }
    // C(n + m - 1, m - 1) lattice points.
    let mut points = 1.0f64;
    for i in 1..m {
        points *= (n + i as u64) as f64 / i as f64;
    }
    if points > GRID_POINT_LIMIT {
        return Err(SchedError::LatticeTooLarge {
            points,
            limit: GRID_POINT_LIMIT,
        });
    }

    let k = rate_rows.len();
    let mut partial = vec![0.0f64; k]; // row dot counts, unscaled
    let mut counts = vec![0u64; m];
    let mut best_val = f64::NEG_INFINITY;
    let mut best = vec![0u64; m];

    fn scan(
        rows: &[Vec<f64>],
        col: usize,
        remaining: u64,
        partial: &mut Vec<f64>,
        counts: &mut Vec<u64>,
        best_val: &mut f64,
        best: &mut Vec<u64>,
    ) {
        let m = rows[0].len();
        if col == m - 1 {
            counts[col] = remaining;
            let rem = remaining as f64;
            let mut val = f64::INFINITY;
            for (i, row) in rows.iter().enumerate() {
                let v = partial[i] + row[col] * rem;
                if v < val {
                    val = v;
                }
            }
            if val > *best_val {
                *best_val = val;
                best.copy_from_slice(counts);
            }
            return;
        }
        let saved = partial.clone();
        for c in 0..=remaining {
            counts[col] = c;
            scan(rows, col + 1, remaining - c, partial, counts, best_val, best);
            for (i, row) in rows.iter().enumerate() {
                partial[i] += row[col];
            }
        }
        partial.copy_from_slice(&saved);
    }
    scan(
        rate_rows, 0, n, &mut partial, &mut counts, &mut best_val, &mut best,
    );

    let nf = n as f64;
    let p = best.iter().map(|&c| c as f64 / nf).collect();
    Ok((p, best_val / nf))
}

/// Maximin solve via the LP directly, reported like the other solvers
/// (bottleneck read off the recomputed rates). Useful as an oracle.
pub fn solve_maximin(topo: &Topology, g: &GainMatrix) -> Result<SolveReport, SchedError> {
    let rows = reception_coeffs(g, topo)?;
    let (p, _) = maximin_lp(&rows)?;
    let schedule = Schedule::normalized(p, topo.node_count())?;
    build_report(topo, g, schedule, BottleneckSpec::FromRates, SolveMethod::LpOracle)
}

/// Lattice-search solve at the given step, reported like the other
/// solvers. The value is only step-accurate; see [`grid_oracle`].
pub fn solve_grid(topo: &Topology, g: &GainMatrix, step: f64) -> Result<SolveReport, SchedError> {
    let rows = reception_coeffs(g, topo)?;
    let (p, _) = grid_oracle(&rows, step)?;
    let schedule = Schedule::normalized(p, topo.node_count())?;
    build_report(topo, g, schedule, BottleneckSpec::FromRates, SolveMethod::GridOracle)
}

/// Lexicographic next-permutation; `false` once `a` is the last one.
fn next_permutation(a: &mut [usize]) -> bool {
    if a.len() < 2 {
        return false;
    }
    let mut i = a.len() - 1;
    while i > 0 && a[i - 1] >= a[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = a.len() - 1;
    while a[j] <= a[i - 1] {
        j -= 1;
    }
    a.swap(i - 1, j);
    a[i..].reverse();
    true
}

/// Searches every relay decoding order (relabeling) for the best DF rate.
/// Returns the winning order — `order[s]` is the original id of the node
/// relabeled to `s + 2` — and the report for the relabeled topology. Ties
/// keep the lexicographically first order, so the identity wins when
/// nothing beats it.
pub fn best_decoding_order(
    topo: &Topology,
    g: &GainMatrix,
) -> Result<(Vec<usize>, SolveReport), SchedError> {
    let d = topo.node_count();
    let relays = d - 2;
    const LIMIT: usize = 8;
    if relays > LIMIT {
        return Err(SchedError::TooManyRelays {
            relays,
            limit: LIMIT,
        });
    }
    let identity: Vec<usize> = (2..d).collect();
    let mut order = identity.clone();
    let mut best: Option<(f64, Vec<usize>, Schedule, usize)> = None;
    loop {
        let topo_storage;
        let gain_storage;
        let (t, pg) = if order == identity {
            (topo, g)
        } else {
            topo_storage = topo.with_relay_order(&order)?;
            gain_storage = build_gain_matrix(&topo_storage)?;
            (&topo_storage, &gain_storage)
        };
        let rows = reception_coeffs(pg, t)?;
        let (p, b) = bottleneck_prefix_search(&rows)?;
        let schedule = Schedule::normalized(p, d)?;
        let (df, _) = crate::rates::df_rate(&schedule, pg, t);
        if best.as_ref().map_or(true, |(bv, _, _, _)| df > *bv) {
            best = Some((df, order.clone(), schedule, b));
        }
        if !next_permutation(&mut order) {
            break;
        }
    }
    let (_, order, schedule, b) = best.expect("at least the identity order is evaluated");
    let nodes: Vec<usize> = (2..=b + 1).collect();
    let report = if order == identity {
        build_report(topo, g, schedule, BottleneckSpec::Nodes(nodes), SolveMethod::Algorithm2)?
    } else {
        let permuted = topo.with_relay_order(&order)?;
        let pg = build_gain_matrix(&permuted)?;
        build_report(&permuted, &pg, schedule, BottleneckSpec::Nodes(nodes), SolveMethod::Algorithm2)?
    };
    Ok((order, report))
}
