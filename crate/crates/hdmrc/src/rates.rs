//! Reception rates, decode-forward rates, and cut rates.
//!
//! With every node transmitting a codeword at power `P_i` over a flat
//! channel with link gains `lambda(i, k)` and receiver noise `N_k`, the
//! capacity of a point-to-point hop at SNR `x` is `gamma(x) = log2(1 + x)`
//! bits per channel use. Everything here averages such terms over a
//! schedule on the transmit/listen states.
//!
//! Decode-forward with the natural decoding order (node `i` decodes after
//! nodes `1..i`): while listening, node `i` hears the source plus every
//! *upstream* relay that is currently transmitting, so its reception rate
//! under schedule `p` is
//!
//! ```text
//! r_i(p) = sum over states s where i listens of
//!          p(s) * gamma( sum_{k in {1} + upstream transmitters} lambda(k,i) P_k / N_i )
//! ```
//!
//! and the achievable decode-forward rate is `min_i r_i(p)`.
//!
//! The cut-set side: for a relay subset `Q` (the relays grouped with the
//! source), the cut rate is a single `gamma` of the total SNR flowing from
//! `{1} + (Q transmitting)` to the listening nodes outside `Q` plus the
//! destination, averaged over states. The upper bound on any rate is the
//! minimum over all `2^(D-2)` cuts.

use crate::model::{GainMatrix, ModelError, Schedule, Topology, TransmitState};

/// `log2(1 + x)`, the rate of a unit-bandwidth channel at SNR `x`.
pub fn gamma(x: f64) -> f64 {
    debug_assert!(x >= 0.0, "SNR must be nonnegative, got {x}");
    x.ln_1p() * std::f64::consts::LOG2_E
}

/// Relative tolerance for grouping nodes (or cuts) that tie at a minimum.
const TIE_REL_TOL: f64 = 1e-9;

/// Reception rates for nodes `2..=D`, produced by [`reception_rates`].
#[derive(Debug, Clone, PartialEq)]
pub struct RateVector {
    r: Vec<f64>, // entry 0 is node 2
}

impl RateVector {
    /// Rate of node `k` (`2..=D`).
    pub fn get(&self, k: usize) -> f64 {
        assert!(
            (2..=self.r.len() + 1).contains(&k),
            "rates exist for nodes 2..={}, got {k}",
            self.r.len() + 1
        );
        self.r[k - 2]
    }

    /// `(node, rate)` pairs, ascending by node.
    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.r.iter().enumerate().map(|(i, &v)| (i + 2, v))
    }

    /// The smallest rate and the set of nodes attaining it (within a
    /// relative tolerance of the minimum).
    pub fn min_and_argmin(&self) -> (f64, Vec<usize>) {
        let min = self.r.iter().copied().fold(f64::INFINITY, f64::min);
        let nodes = self
            .iter()
            .filter(|(_, v)| v - min <= TIE_REL_TOL * min.abs())
            .map(|(k, _)| k)
            .collect();
        (min, nodes)
    }

    pub fn values(&self) -> &[f64] {
        &self.r
    }

    pub(crate) fn from_values(r: Vec<f64>) -> Self {
        RateVector { r }
    }
}

fn check_shapes(g: &GainMatrix, topo: &Topology) {
    assert_eq!(
        g.node_count(),
        topo.node_count(),
        "gain matrix and topology disagree on node count"
    );
}

/// SNR numerator at node `i` in `state`: transmissions from the source and
/// every transmitting relay upstream of `i` (ids below `i`).
fn upstream_snr_numerator(
    i: usize,
    state: TransmitState,
    g: &GainMatrix,
    topo: &Topology,
) -> f64 {
    let mut num = g.lambda(1, i) * topo.power(1);
    for k in 2..i {
        if state.transmits(k) {
            num += g.lambda(k, i) * topo.power(k);
        }
    }
    num
}

/// Reception rate of node `i` (`2..=D`) under schedule `p`: time spent
/// listening, weighted by the rate of the upstream-transmitter hop.
pub fn reception_rate(i: usize, p: &Schedule, g: &GainMatrix, topo: &Topology) -> f64 {
    check_shapes(g, topo);
    let d = topo.node_count();
    assert_eq!(p.node_count(), d, "schedule node count mismatch");
    assert!((2..=d).contains(&i), "reception is defined for nodes 2..={d}, got {i}");
    let noise = topo.noise(i);
    let mut rate = 0.0;
    for j in 0..p.probs().len() {
        let state = TransmitState::from_index(j, d);
        // The destination always listens; relays only while not transmitting.
        if i < d && state.transmits(i) {
            continue;
        }
        rate += p.prob(j) * gamma(upstream_snr_numerator(i, state, g, topo) / noise);
    }
    rate
}

/// Reception rates of every node `2..=D` under schedule `p`.
pub fn reception_rates(p: &Schedule, g: &GainMatrix, topo: &Topology) -> RateVector {
    let d = topo.node_count();
    RateVector::from_values((2..=d).map(|i| reception_rate(i, p, g, topo)).collect())
}

/// Per-state reception-rate coefficients: row `r` holds, for each state
/// index `j`, the rate node `r + 2` collects per unit of probability on
/// state `j`. `reception_rate` is then a dot product with the schedule.
pub fn reception_coeffs(g: &GainMatrix, topo: &Topology) -> Result<Vec<Vec<f64>>, ModelError> {
    check_shapes(g, topo);
    let d = topo.node_count();
    let states = crate::model::enumerate_states(d)?;
    let mut rows = Vec::with_capacity(d - 1);
    for i in 2..=d {
        let noise = topo.noise(i);
        let row = states
            .iter()
            .map(|&s| {
                if i < d && s.transmits(i) {
                    0.0
                } else {
                    gamma(upstream_snr_numerator(i, s, g, topo) / noise)
                }
            })
            .collect();
        rows.push(row);
    }
    Ok(rows)
}

/// Decode-forward rate under schedule `p`: the smallest reception rate,
/// with the set of nodes attaining it.
pub fn df_rate(p: &Schedule, g: &GainMatrix, topo: &Topology) -> (f64, Vec<usize>) {
    reception_rates(p, g, topo).min_and_argmin()
}

fn check_cut(q: &[usize], d: usize) {
    for w in q.windows(2) {
        assert!(w[0] < w[1], "cut must list relay ids strictly ascending");
    }
    for &r in q {
        assert!((2..d).contains(&r), "cut may only contain relay ids 2..={}", d - 1);
    }
}

/// Flow across one cut in one state: a single `gamma` of the total SNR
/// delivered by the source-side transmitters (`{1}` plus transmitting
/// relays in `q`) to the listening relays outside `q` and the destination.
fn cut_state_flow(q: &[usize], state: TransmitState, g: &GainMatrix, topo: &Topology) -> f64 {
    let d = topo.node_count();
    let mut total = 0.0;
    for k in 2..=d {
        // Receivers: the destination, or a relay outside q that listens.
        if k < d && (q.contains(&k) || state.transmits(k)) {
            continue;
        }
        let mut num = g.lambda(1, k) * topo.power(1);
        for &i in q {
            if i != k && state.transmits(i) {
                num += g.lambda(i, k) * topo.power(i);
            }
        }
        total += num / topo.noise(k);
    }
    gamma(total)
}

/// Rate across the cut separating `{1} + q` from the rest, averaged over
/// schedule `p`. `q` lists relay ids, strictly ascending (possibly empty).
pub fn cut_rate(q: &[usize], p: &Schedule, g: &GainMatrix, topo: &Topology) -> f64 {
    check_shapes(g, topo);
    let d = topo.node_count();
    assert_eq!(p.node_count(), d, "schedule node count mismatch");
    check_cut(q, d);
    let mut rate = 0.0;
    for j in 0..p.probs().len() {
        let state = TransmitState::from_index(j, d);
        rate += p.prob(j) * cut_state_flow(q, state, g, topo);
    }
    rate
}

/// Per-state cut-rate coefficients: row `m` corresponds to the cut whose
/// relay set matches the transmit pattern of state index `m` (relay 2 on
/// the most significant bit), and holds one coefficient per state `j`.
pub fn cut_coeffs(g: &GainMatrix, topo: &Topology) -> Result<Vec<Vec<f64>>, ModelError> {
    check_shapes(g, topo);
    let d = topo.node_count();
    let states = crate::model::enumerate_states(d)?;
    let mut rows = Vec::with_capacity(states.len());
    for &qs in &states {
        let q = qs.transmitting();
        let row = states
            .iter()
            .map(|&s| cut_state_flow(&q, s, g, topo))
            .collect();
        rows.push(row);
    }
    Ok(rows)
}

/// The tightest cut under schedule `p`: minimum cut rate over all relay
/// subsets, with the first minimizing subset in mask order.
pub fn cutset_min(p: &Schedule, g: &GainMatrix, topo: &Topology) -> (f64, Vec<usize>) {
    check_shapes(g, topo);
    let d = topo.node_count();
    assert_eq!(p.node_count(), d, "schedule node count mismatch");
    let mut best = f64::INFINITY;
    let mut best_q = Vec::new();
    for mask in 0..p.probs().len() {
        let q = TransmitState::from_index(mask, d).transmitting();
        let r = cut_rate(&q, p, g, topo);
        if r < best {
            best = r;
            best_q = q;
        }
    }
    (best, best_q)
}

/// Decode-forward rate if every node could transmit and listen at once:
/// each node hears all upstream nodes all the time. Returns the rate and
/// the first bottleneck node. Does not enumerate states, so it accepts
/// networks beyond the half-duplex size cap.
pub fn full_duplex_df_rate(g: &GainMatrix, topo: &Topology) -> (f64, usize) {
    check_shapes(g, topo);
    let d = topo.node_count();
    let mut best = f64::INFINITY;
    let mut best_node = 2;
    for i in 2..=d {
        let mut num = 0.0;
        for k in 1..i {
            num += g.lambda(k, i) * topo.power(k);
        }
        let r = gamma(num / topo.noise(i));
        if r < best {
            best = r;
            best_node = i;
        }
    }
    (best, best_node)
}

/// A witness that a topology is not relay-SNR degraded: node `i`'s signal
/// arrives at the nearer-in-order node `j` no stronger than at `k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RsnrViolation {
    pub i: usize,
    pub j: usize,
    pub k: usize,
    /// `lambda(i,j) P_i / N_j`
    pub snr_near: f64,
    /// `lambda(i,k) P_i / N_k`
    pub snr_far: f64,
}

/// Scans for the first triple `i < j < k` where the received SNR from `i`
/// fails to *strictly* decrease along the node order. Returns `None` when
/// the topology is relay-SNR degraded.
pub fn rsnr_violation(g: &GainMatrix, topo: &Topology) -> Option<RsnrViolation> {
    check_shapes(g, topo);
    let d = topo.node_count();
    for i in 1..d.saturating_sub(1) {
        let p_i = topo.power(i);
        for j in (i + 1).max(2)..d {
            let snr_near = g.lambda(i, j) * p_i / topo.noise(j);
            for k in (j + 1)..=d {
                let snr_far = g.lambda(i, k) * p_i / topo.noise(k);
                if !(snr_near > snr_far) {
                    return Some(RsnrViolation {
                        i,
                        j,
                        k,
                        snr_near,
                        snr_far,
                    });
                }
            }
        }
    }
    None
}

/// Whether every node's received SNR strictly decreases along the node
/// order (`i < j < k` implies node `j` hears `i` strictly better than `k`
/// does). Vacuously true for `D = 2`.
pub fn is_rsnr_degraded(g: &GainMatrix, topo: &Topology) -> bool {
    rsnr_violation(g, topo).is_none()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_gain_matrix, Schedule, Topology};
    use proptest::prelude::*;

    fn unit_line(d: usize) -> (Topology, GainMatrix) {
        let positions = (0..d).map(|i| [i as f64, 0.0]).collect();
        let topo =
            Topology::from_positions(positions, vec![10.0; d - 1], vec![1.0; d - 1], 1.0, 2.0)
                .unwrap();
        let g = build_gain_matrix(&topo).unwrap();
        (topo, g)
    }

    #[test]
    fn gamma_reference_points() {
        assert_eq!(gamma(0.0), 0.0);
        assert!((gamma(1.0) - 1.0).abs() < 1e-15);
        assert!((gamma(3.0) - 2.0).abs() < 1e-15);
        assert!((gamma(10.0) - 11f64.log2()).abs() < 1e-15);
    }

    #[test]
    fn reception_rates_three_node_line_by_hand() {
        let (topo, g) = unit_line(3);
        let p = Schedule::new(vec![0.3, 0.7], 3).unwrap();
        // Relay (node 2) listens only in state 0, hearing the source at SNR 10.
        let r2 = reception_rate(2, &p, &g, &topo);
        assert!((r2 - 0.3 * gamma(10.0)).abs() < 1e-15);
        // Destination hears the source at SNR 2.5, plus the relay at SNR 10
        // when it transmits.
        let r3 = reception_rate(3, &p, &g, &topo);
        assert!((r3 - (0.3 * gamma(2.5) + 0.7 * gamma(12.5))).abs() < 1e-15);

        let (df, bottleneck) = df_rate(&p, &g, &topo);
        assert_eq!(df, r2.min(r3));
        assert_eq!(bottleneck, vec![2]);
    }

    #[test]
    fn reception_matches_coefficient_rows() {
        let (topo, g) = unit_line(4);
        let rows = reception_coeffs(&g, &topo).unwrap();
        assert_eq!(rows.len(), 3);
        assert_eq!(rows[0].len(), 4);
        let p = Schedule::new(vec![0.1, 0.2, 0.3, 0.4], 4).unwrap();
        for (r, row) in rows.iter().enumerate() {
            let dot: f64 = row
                .iter()
                .zip(p.probs())
                .map(|(c, q)| q * c)
                .sum();
            let direct = reception_rate(r + 2, &p, &g, &topo);
            assert!((dot - direct).abs() < 1e-14, "row {r}: {dot} vs {direct}");
        }
        // A relay earns nothing in states where it transmits.
        assert_eq!(rows[0][2], 0.0);
        assert_eq!(rows[0][3], 0.0);
        assert_eq!(rows[1][1], 0.0);
        assert_eq!(rows[1][3], 0.0);
    }

    #[test]
    fn cut_rates_three_node_line_by_hand() {
        let (topo, g) = unit_line(3);
        let p = Schedule::new(vec![0.4, 0.6], 3).unwrap();
        // Empty cut: receivers are listening relay + destination, one gamma
        // of the summed SNR.
        let r_empty = cut_rate(&[], &p, &g, &topo);
        assert!((r_empty - (0.4 * gamma(12.5) + 0.6 * gamma(2.5))).abs() < 1e-15);
        // Cut {2}: relay joins the source side and contributes only while
        // transmitting.
        let r_relay = cut_rate(&[2], &p, &g, &topo);
        assert!((r_relay - (0.4 * gamma(2.5) + 0.6 * gamma(12.5))).abs() < 1e-15);

        let (min_rate, q) = cutset_min(&p, &g, &topo);
        assert!((min_rate - r_empty.min(r_relay)).abs() < 1e-15);
        assert_eq!(q, if r_empty <= r_relay { vec![] } else { vec![2] });
    }

    #[test]
    fn cut_uses_one_gamma_of_the_summed_snr() {
        // Distinct noises make gamma(a + b) differ measurably from
        // gamma(a) + gamma(b); pin the single-gamma form.
        let topo = Topology::from_positions(
            vec![[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]],
            vec![10.0, 10.0],
            vec![0.5, 2.0],
            1.0,
            2.0,
        )
        .unwrap();
        let g = build_gain_matrix(&topo).unwrap();
        let p = Schedule::point(0, 3).unwrap(); // relay always listens
        let expected = gamma(10.0 / 0.5 + 2.5 / 2.0);
        assert!((cut_rate(&[], &p, &g, &topo) - expected).abs() < 1e-15);
        let wrong = gamma(10.0 / 0.5) + gamma(2.5 / 2.0);
        assert!((cut_rate(&[], &p, &g, &topo) - wrong).abs() > 0.1);
    }

    #[test]
    fn full_duplex_unit_line_bottleneck_is_first_relay() {
        for d in [2, 3, 6, 12] {
            let (topo, g) = unit_line(d);
            let (r, node) = full_duplex_df_rate(&g, &topo);
            assert!(
                (r - 11f64.log2()).abs() < 1e-12,
                "d={d}: rate {r} != log2(11)"
            );
            assert_eq!(node, 2, "d={d}");
        }
    }

    #[test]
    fn rsnr_degraded_on_lines_violated_by_overrides() {
        let (topo, g) = unit_line(4);
        assert!(is_rsnr_degraded(&g, &topo));

        // Override: source reaches node 4 as strongly as node 3.
        let gains = vec![
            vec![0.5, 0.5, 0.5],
            vec![0.0, 0.5, 0.25],
            vec![0.5, 0.0, 0.5],
        ];
        let topo = Topology::from_gains(
            gains,
            vec![10.0, 10.0, 10.0],
            vec![1.0, 1.0, 1.0],
            1.0,
            2.0,
        )
        .unwrap();
        let g = build_gain_matrix(&topo).unwrap();
        let v = rsnr_violation(&g, &topo).expect("tie must violate strictness");
        assert_eq!((v.i, v.j, v.k), (1, 2, 3));
        assert_eq!(v.snr_near, v.snr_far);
        assert!(!is_rsnr_degraded(&g, &topo));
    }

    #[test]
    fn rsnr_vacuous_for_two_nodes() {
        let (topo, g) = unit_line(2);
        assert!(is_rsnr_degraded(&g, &topo));
    }

    #[test]
    fn all_transmit_schedule_starves_relays() {
        let (topo, g) = unit_line(4);
        let p = Schedule::point(3, 4).unwrap(); // both relays transmit always
        let (df, bottleneck) = df_rate(&p, &g, &topo);
        assert_eq!(df, 0.0);
        assert_eq!(bottleneck, vec![2, 3]);
    }

    proptest! {
        #[test]
        fn joint_power_noise_scaling_is_exact(
            seedp in proptest::collection::vec(0.0f64..1.0, 4),
            scale_exp in -2i32..=3,
        ) {
            let (topo, _) = unit_line(4);
            let raw: Vec<f64> = seedp.clone();
            let p = Schedule::normalized(raw, 4).unwrap_or(Schedule::uniform(4).unwrap());
            let c = (2.0f64).powi(scale_exp); // powers of two keep scaling exact
            let scaled = Topology::from_positions(
                (0..4).map(|i| [i as f64, 0.0]).collect(),
                vec![10.0 * c; 3],
                vec![c; 3],
                1.0,
                2.0,
            ).unwrap();
            let g0 = build_gain_matrix(&topo).unwrap();
            let g1 = build_gain_matrix(&scaled).unwrap();
            for i in 2..=4 {
                prop_assert_eq!(
                    reception_rate(i, &p, &g0, &topo),
                    reception_rate(i, &p, &g1, &scaled)
                );
            }
            let q = [2usize];
            prop_assert_eq!(cut_rate(&q, &p, &g0, &topo), cut_rate(&q, &p, &g1, &scaled));
        }

        #[test]
        fn any_schedule_stays_below_full_duplex(
            seedp in proptest::collection::vec(0.0f64..1.0, 4),
            y2 in 0.0f64..100.0,
            y3 in 0.0f64..100.0,
        ) {
            let topo = Topology::from_positions(
                vec![[0.0, 0.0], [y2, 35.0], [y3, 65.0], [0.0, 100.0]],
                vec![10.0; 3],
                vec![1.0; 3],
                1.0,
                2.0,
            ).unwrap();
            let g = build_gain_matrix(&topo).unwrap();
            let p = match Schedule::normalized(seedp, 4) {
                Ok(p) => p,
                Err(_) => return Ok(()),
            };
            let (hd, _) = df_rate(&p, &g, &topo);
            let (fd, _) = full_duplex_df_rate(&g, &topo);
            prop_assert!(hd <= fd + 1e-12, "hd {hd} > fd {fd}");
        }

        #[test]
        fn rates_are_nonnegative_and_min_is_min(
            seedp in proptest::collection::vec(0.0f64..1.0, 4),
        ) {
            let (topo, g) = unit_line(4);
            let p = match Schedule::normalized(seedp, 4) {
                Ok(p) => p,
                Err(_) => return Ok(()),
            };
            let rv = reception_rates(&p, &g, &topo);
            for (_, r) in rv.iter() {
                prop_assert!(r >= 0.0);
            }
            let (df, nodes) = df_rate(&p, &g, &topo);
            let direct_min = rv.values().iter().copied().fold(f64::INFINITY, f64::min);
            prop_assert_eq!(df, direct_min);
            prop_assert!(!nodes.is_empty());
            for k in nodes {
                prop_assert!(rv.get(k) - df <= 1e-9 * df.abs());
            }
        }
    }
}
