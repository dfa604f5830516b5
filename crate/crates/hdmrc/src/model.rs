//! Channel model: node layout, link gains, transmit/listen states, schedules.
//!
//! Conventions used across the crate:
//!
//! * Nodes are numbered `1..=D`. Node 1 is the source (always transmitting),
//!   node `D` is the destination (always listening), nodes `2..=D-1` are the
//!   relays.
//! * Node `i` transmits with power `P_i` (`i` in `1..=D-1`); node `k`
//!   receives with noise power `N_k` (`k` in `2..=D`).
//! * The gain of link `i -> k` is `lambda(i, k) = kappa * d^(-eta)` for
//!   inter-node distance `d >= 1`, and `kappa` for `d < 1` (no near-field
//!   amplification).

use thiserror::Error;

/// Hard cap on the node count for any operation that enumerates
/// transmit/listen states (`2^(D-2)` of them). Full-duplex computations do
/// not enumerate states and accept larger networks.
pub const MAX_NODES: usize = 16;

/// Absolute tolerance for schedule validation: entries may undershoot zero
/// by at most this much, and the total probability must be within this of 1.
pub const SCHEDULE_TOL: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("need at least 2 nodes (source and destination), got {0}")]
    TooFewNodes(usize),
    #[error("state enumeration needs {got} nodes <= {MAX_NODES}")]
    TooManyNodes { got: usize },
    #[error("expected {expected} {what}, got {got}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("{what} must be finite and {constraint}, got {value}")]
    BadParameter {
        what: &'static str,
        constraint: &'static str,
        value: f64,
    },
    #[error("schedule entry {index} is {value}, below -{SCHEDULE_TOL:e}")]
    NegativeProbability { index: usize, value: f64 },
    #[error("schedule sums to {sum}, more than {SCHEDULE_TOL:e} away from 1")]
    BadTotalProbability { sum: f64 },
    #[error("gain override entry ({i},{k}) is {value}; gains must be finite and >= 0")]
    BadGain { i: usize, k: usize, value: f64 },
    #[error("state index {index} out of range for {count} states")]
    StateIndexOutOfRange { index: usize, count: usize },
}

/// How link gains are determined: from node positions through the path-loss
/// law, or supplied directly as a matrix.
#[derive(Debug, Clone, PartialEq)]
pub enum Geometry {
    /// One `[x, y]` per node, source first, destination last.
    Positions(Vec<[f64; 2]>),
    /// Row-major `(D-1) x (D-1)` matrix; entry `[i-1][k-2]` is the gain of
    /// link `i -> k`. Cells with `i == k` are ignored.
    Gains(Vec<f64>),
}

/// A channel instance: node count, geometry, transmit powers, receiver
/// noise powers, and the path-loss parameters `kappa` / `eta`.
#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    d: usize,
    geometry: Geometry,
    powers: Vec<f64>,
    noises: Vec<f64>,
    kappa: f64,
    eta: f64,
}

impl Topology {
    /// Builds a topology from planar node positions (source first,
    /// destination last). `powers[i-1]` is `P_i` for `i` in `1..=D-1`;
    /// `noises[k-2]` is `N_k` for `k` in `2..=D`.
    pub fn from_positions(
        positions: Vec<[f64; 2]>,
        powers: Vec<f64>,
        noises: Vec<f64>,
        kappa: f64,
        eta: f64,
    ) -> Result<Self, ModelError> {
        let d = positions.len();
        for &[x, y] in &positions {
            if !x.is_finite() || !y.is_finite() {
                return Err(ModelError::BadParameter {
                    what: "node position",
                    constraint: "a finite coordinate pair",
                    value: if x.is_finite() { y } else { x },
                });
            }
        }
        Self::validate_common(d, &powers, &noises, kappa, eta)?;
        Ok(Topology {
            d,
            geometry: Geometry::Positions(positions),
            powers,
            noises,
            kappa,
            eta,
        })
    }

    /// Builds a topology from an explicit gain matrix instead of positions.
    /// `gains[i-1][k-2]` is the gain of link `i -> k` (`i` in `1..=D-1`,
    /// `k` in `2..=D`); diagonal cells (`i == k`) are ignored. The node
    /// count is inferred as `powers.len() + 1`.
    pub fn from_gains(
        gains: Vec<Vec<f64>>,
        powers: Vec<f64>,
        noises: Vec<f64>,
        kappa: f64,
        eta: f64,
    ) -> Result<Self, ModelError> {
        let d = powers.len() + 1;
        Self::validate_common(d, &powers, &noises, kappa, eta)?;
        if gains.len() != d - 1 {
            return Err(ModelError::LengthMismatch {
                what: "gain matrix rows",
                expected: d - 1,
                got: gains.len(),
            });
        }
        let mut flat = vec![0.0; (d - 1) * (d - 1)];
        for (row, entries) in gains.iter().enumerate() {
            if entries.len() != d - 1 {
                return Err(ModelError::LengthMismatch {
                    what: "gain matrix columns",
                    expected: d - 1,
                    got: entries.len(),
                });
            }
            let i = row + 1;
            for (col, &g) in entries.iter().enumerate() {
                let k = col + 2;
                if i == k {
                    continue; // self-link, unused
                }
                if !g.is_finite() || g < 0.0 {
                    return Err(ModelError::BadGain { i, k, value: g });
                }
                flat[row * (d - 1) + col] = g;
            }
        }
        Ok(Topology {
            d,
            geometry: Geometry::Gains(flat),
            powers,
            noises,
            kappa,
            eta,
        })
    }

    fn validate_common(
        d: usize,
        powers: &[f64],
        noises: &[f64],
        kappa: f64,
        eta: f64,
    ) -> Result<(), ModelError> {
        if d < 2 {
            return Err(ModelError::TooFewNodes(d));
        }
        if powers.len() != d - 1 {
            return Err(ModelError::LengthMismatch {
                what: "transmit powers",
                expected: d - 1,
                got: powers.len(),
            });
        }
        if noises.len() != d - 1 {
            return Err(ModelError::LengthMismatch {
                what: "noise powers",
                expected: d - 1,
                got: noises.len(),
            });
        }
        for &p in powers {
            if !p.is_finite() || p < 0.0 {
                return Err(ModelError::BadParameter {
                    what: "transmit power",
                    constraint: ">= 0",
                    value: p,
                });
            }
        }
        for &n in noises {
            if !n.is_finite() || n <= 0.0 {
                return Err(ModelError::BadParameter {
                    what: "noise power",
                    constraint: "> 0",
                    value: n,
                });
            }
        }
        if !kappa.is_finite() || kappa <= 0.0 {
            return Err(ModelError::BadParameter {
                what: "kappa",
                constraint: "> 0",
                value: kappa,
            });
        }
        if !eta.is_finite() || eta < 2.0 {
            return Err(ModelError::BadParameter {
                what: "eta",
                constraint: ">= 2",
                value: eta,
            });
        }
        Ok(())
    }

    /// Total node count `D`.
    pub fn node_count(&self) -> usize {
        self.d
    }

    /// Number of relays, `D - 2`.
    pub fn relay_count(&self) -> usize {
        self.d - 2
    }

    /// Number of transmit/listen states, `2^(D-2)`.
    pub fn state_count(&self) -> usize {
        1usize << (self.d - 2)
    }

    /// Transmit power of node `i` (`1..=D-1`).
    pub fn power(&self, i: usize) -> f64 {
        assert!(
            (1..self.d).contains(&i),
            "power is defined for nodes 1..={}, got {i}",
            self.d - 1
        );
        self.powers[i - 1]
    }

    /// Receiver noise power of node `k` (`2..=D`).
    pub fn noise(&self, k: usize) -> f64 {
        assert!(
            (2..=self.d).contains(&k),
            "noise is defined for nodes 2..={}, got {k}",
            self.d
        );
        self.noises[k - 2]
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    /// Relabels the relays: `order[s]` is the current id of the node that
    /// becomes node `s + 2`. The source and destination stay fixed. `order`
    /// must be a permutation of `2..=D-1`.
    pub fn with_relay_order(&self, order: &[usize]) -> Result<Topology, ModelError> {
        let d = self.d;
        if order.len() != d - 2 {
            return Err(ModelError::LengthMismatch {
                what: "relay order entries",
                expected: d - 2,
                got: order.len(),
            });
        }
        let mut seen = vec![false; d - 2];
        for &r in order {
            if !(2..d).contains(&r) || seen[r - 2] {
                return Err(ModelError::BadParameter {
                    what: "relay order",
                    constraint: "a permutation of the relay ids",
                    value: r as f64,
                });
            }
            seen[r - 2] = true;
        }
        // sigma maps new id -> old id; identity on source and destination.
        let sigma = |node: usize| -> usize {
            if node == 1 || node == d {
                node
            } else {
                order[node - 2]
            }
        };
        let geometry = match &self.geometry {
            Geometry::Positions(pos) => {
                let new = (1..=d).map(|node| pos[sigma(node) - 1]).collect();
                Geometry::Positions(new)
            }
            Geometry::Gains(flat) => {
                let mut new = vec![0.0; (d - 1) * (d - 1)];
                for i in 1..d {
                    for k in 2..=d {
                        if i == k {
                            continue;
                        }
                        new[(i - 1) * (d - 1) + (k - 2)] =
                            flat[(sigma(i) - 1) * (d - 1) + (sigma(k) - 2)];
                    }
                }
                Geometry::Gains(new)
            }
        };
        let powers = (1..d).map(|i| self.powers[sigma(i) - 1]).collect();
        let noises = (2..=d).map(|k| self.noises[sigma(k) - 2]).collect();
        Ok(Topology {
            d,
            geometry,
            powers,
            noises,
            kappa: self.kappa,
            eta: self.eta,
        })
    }
}

/// Link gains `lambda(i, k)` for transmitter `i` in `1..=D-1` and receiver
/// `k` in `2..=D`, `i != k`.
#[derive(Debug, Clone, PartialEq)]
pub struct GainMatrix {
    d: usize,
    lam: Vec<f64>, // row-major (D-1) x (D-1), entry (i-1, k-2)
}

impl GainMatrix {
    /// Gain of link `i -> k`.
    pub fn lambda(&self, i: usize, k: usize) -> f64 {
        assert!(
            (1..self.d).contains(&i) && (2..=self.d).contains(&k) && i != k,
            "lambda is defined for transmitters 1..={} and receivers 2..={}, i != k; got ({i},{k})",
            self.d - 1,
            self.d
        );
        self.lam[(i - 1) * (self.d - 1) + (k - 2)]
    }

    pub fn node_count(&self) -> usize {
        self.d
    }
}

/// Computes every link gain for a topology. Positions go through the
/// path-loss law `kappa * d^(-eta)` with the gain capped at `kappa` for
/// distances below 1; explicit gain matrices are passed through.
pub fn build_gain_matrix(topo: &Topology) -> Result<GainMatrix, ModelError> {
    let d = topo.d;
    let lam = match &topo.geometry {
        Geometry::Gains(flat) => flat.clone(),
        Geometry::Positions(pos) => {
            let mut lam = vec![0.0; (d - 1) * (d - 1)];
            for i in 1..d {
                for k in 2..=d {
                    if i == k {
                        continue;
                    }
                    let dx = pos[i - 1][0] - pos[k - 1][0];
                    let dy = pos[i - 1][1] - pos[k - 1][1];
                    let dist = (dx * dx + dy * dy).sqrt();
                    lam[(i - 1) * (d - 1) + (k - 2)] = if dist >= 1.0 {
                        topo.kappa * dist.powf(-topo.eta)
                    } else {
                        topo.kappa
                    };
                }
            }
            lam
        }
    };
    Ok(GainMatrix { d, lam })
}

/// One transmit/listen state: which relays transmit and which listen.
///
/// States are indexed canonically: writing the relay flags as a bit string
/// `(s_2, ..., s_{D-1})` with `s_r = 1` when relay `r` transmits, relay 2's
/// flag is the most significant bit of the index. With `D = 4` the states
/// in index order are `(L,L), (L,T), (T,L), (T,T)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TransmitState {
    index: u16,
    relays: u8,
}

impl TransmitState {
    /// The state with the given canonical index for a `d`-node channel.
    pub fn from_index(index: usize, d: usize) -> Self {
        assert!((2..=MAX_NODES).contains(&d), "need 2 <= d <= {MAX_NODES}");
        let relays = (d - 2) as u8;
        assert!(index < (1usize << relays), "state index {index} out of range");
        TransmitState {
            index: index as u16,
            relays,
        }
    }

    /// Canonical index of this state.
    pub fn index(&self) -> usize {
        self.index as usize
    }

    fn bit(&self, node: usize) -> u16 {
        let d = self.relays as usize + 2;
        assert!(
            (2..d).contains(&node),
            "relay flags exist for nodes 2..={}, got {node}",
            d.saturating_sub(1)
        );
        // relay 2 owns the most significant of the `relays` bits
        (self.index >> (d - 1 - node)) & 1
    }

    /// Whether relay `node` transmits in this state.
    pub fn transmits(&self, node: usize) -> bool {
        self.bit(node) == 1
    }

    /// Whether relay `node` listens in this state.
    pub fn listens(&self, node: usize) -> bool {
        self.bit(node) == 0
    }

    /// Relay ids transmitting in this state, ascending.
    pub fn transmitting(&self) -> Vec<usize> {
        let d = self.relays as usize + 2;
        (2..d).filter(|&r| self.transmits(r)).collect()
    }

    /// Relay ids listening in this state, ascending.
    pub fn listening(&self) -> Vec<usize> {
        let d = self.relays as usize + 2;
        (2..d).filter(|&r| self.listens(r)).collect()
    }

    /// Human-readable label like `(T,L)`; `()` when there are no relays.
    pub fn label(&self) -> String {
        let d = self.relays as usize + 2;
        let flags: Vec<&str> = (2..d)
            .map(|r| if self.transmits(r) { "T" } else { "L" })
            .collect();
        format!("({})", flags.join(","))
    }
}

/// All `2^(d-2)` transmit/listen states in canonical index order.
///
/// Errors if `d < 2` or `d > MAX_NODES` (state blow-up guard).
pub fn enumerate_states(d: usize) -> Result<Vec<TransmitState>, ModelError> {
    if d < 2 {
        return Err(ModelError::TooFewNodes(d));
    }
    if d > MAX_NODES {
        return Err(ModelError::TooManyNodes { got: d });
    }
    Ok((0..1usize << (d - 2))
        .map(|j| TransmitState::from_index(j, d))
        .collect())
}

/// Neumaier-compensated sum; keeps schedule validation exact enough for
/// `2^14` entries at the 1e-12 tolerance.
fn compensated_sum(xs: &[f64]) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for &x in xs {
        let t = sum + x;
        comp += if sum.abs() >= x.abs() {
            (sum - t) + x
        } else {
            (x - t) + sum
        };
        sum = t;
    }
    sum + comp
}

/// Checks that `p` is a probability vector over the `2^(d-2)` states:
/// correct length, entries no lower than `-SCHEDULE_TOL` (values in
/// `[-SCHEDULE_TOL, 0)` count as zero), and total within `SCHEDULE_TOL`
/// of 1.
pub fn validate_schedule(p: &[f64], d: usize) -> Result<(), ModelError> {
    if d < 2 {
        return Err(ModelError::TooFewNodes(d));
    }
    if d > MAX_NODES {
        return Err(ModelError::TooManyNodes { got: d });
    }
    let m = 1usize << (d - 2);
    if p.len() != m {
        return Err(ModelError::LengthMismatch {
            what: "schedule entries",
            expected: m,
            got: p.len(),
        });
    }
    let mut clamped = Vec::with_capacity(m);
    for (index, &v) in p.iter().enumerate() {
        if !v.is_finite() || v < -SCHEDULE_TOL {
            return Err(ModelError::NegativeProbability { index, value: v });
        }
        clamped.push(v.max(0.0));
    }
    let sum = compensated_sum(&clamped);
    if (sum - 1.0).abs() > SCHEDULE_TOL {
        return Err(ModelError::BadTotalProbability { sum });
    }
    Ok(())
}

/// A validated probability vector over the transmit/listen states of a
/// `d`-node channel. Entry `j` is the fraction of time spent in the state
/// with canonical index `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    d: usize,
    p: Vec<f64>,
}

impl Schedule {
    /// Validates `p` (see [`validate_schedule`]) and stores it with tiny
    /// negative entries clamped to zero.
    pub fn new(p: Vec<f64>, d: usize) -> Result<Self, ModelError> {
        validate_schedule(&p, d)?;
        let p = p.into_iter().map(|v| v.max(0.0)).collect();
        Ok(Schedule { d, p })
    }

    /// Builds a schedule from a near-feasible vector (e.g. raw solver
    /// output): snaps pivot dust below 1e-12 to exact zero, clamps small
    /// negatives, rescales to total 1, and absorbs the residual rounding
    /// error into the largest entry. Snapping keeps support sets crisp;
    /// with the rate coefficients in play it moves no rate beyond ~1e-10.
    pub fn normalized(p: Vec<f64>, d: usize) -> Result<Self, ModelError> {
        if d < 2 {
            return Err(ModelError::TooFewNodes(d));
        }
        if d > MAX_NODES {
            return Err(ModelError::TooManyNodes { got: d });
        }
        let m = 1usize << (d - 2);
        if p.len() != m {
            return Err(ModelError::LengthMismatch {
                what: "schedule entries",
                expected: m,
                got: p.len(),
            });
        }
        let mut q = Vec::with_capacity(m);
        for (index, &v) in p.iter().enumerate() {
            if !v.is_finite() || v < -1e-7 {
                return Err(ModelError::NegativeProbability { index, value: v });
            }
            q.push(if v < 1e-12 { 0.0 } else { v });
        }
        let sum = compensated_sum(&q);
        if !(sum > 0.0) {
            return Err(ModelError::BadTotalProbability { sum });
        }
        for v in &mut q {
            *v /= sum;
        }
        // Absorb the division round-off so the compensated total is exact.
        let residual = 1.0 - compensated_sum(&q);
        let imax = q
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .unwrap();
        q[imax] += residual;
        Schedule::new(q, d)
    }

    /// The uniform schedule.
    pub fn uniform(d: usize) -> Result<Self, ModelError> {
        if d < 2 {
            return Err(ModelError::TooFewNodes(d));
        }
        if d > MAX_NODES {
            return Err(ModelError::TooManyNodes { got: d });
        }
        let m = 1usize << (d - 2);
        Schedule::normalized(vec![1.0; m], d)
    }

    /// A schedule concentrated on one state.
    pub fn point(index: usize, d: usize) -> Result<Self, ModelError> {
        if d < 2 {
            return Err(ModelError::TooFewNodes(d));
        }
        if d > MAX_NODES {
            return Err(ModelError::TooManyNodes { got: d });
        }
        let m = 1usize << (d - 2);
        if index >= m {
            return Err(ModelError::StateIndexOutOfRange { index, count: m });
        }
        let mut p = vec![0.0; m];
        p[index] = 1.0;
        Schedule::new(p, d)
    }

    pub fn node_count(&self) -> usize {
        self.d
    }

    /// Probability of the state with canonical index `j`.
    pub fn prob(&self, j: usize) -> f64 {
        self.p[j]
    }

    /// All state probabilities in canonical index order.
    pub fn probs(&self) -> &[f64] {
        &self.p
    }
}
