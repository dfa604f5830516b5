//! Rates and scheduling for half-duplex multiple-relay channels.
//!
//! A channel instance has `D` nodes: node 1 is the source, node `D` the
//! destination, and nodes `2..=D-1` are relays. The source always transmits
//! and the destination always listens; each relay is either transmitting or
//! listening at any given time, so the network cycles through up to
//! `2^(D-2)` transmit/listen states. A *schedule* assigns a probability to
//! each state.
//!
//! The crate is organized bottom-up:
//!
//! * [`model`]: topologies, link gains, transmit/listen states, schedules.
//! * [`rates`]: per-node reception rates, decode-forward rates, cut rates,
//!   and structural predicates (full-duplex rates, relay-SNR degradedness).
//! * [`linprog`]: a small dense two-phase simplex solver plus the maximin
//!   and equality-constrained programs built on it.
//! * [`sched`]: schedule optimizers — the general bottleneck-set search, the
//!   specialization for relay-SNR-degraded instances, a four-node closed
//!   form, a grid-search oracle, cut-set bound optimization, and decoding
//!   order search.
//!
//! All rates are in bits per channel use (base-2 logarithms). Node indices
//! in every public API are 1-based (`1..=D`).

pub mod linprog;
pub mod model;
pub mod rates;
pub mod sched;

pub use model::{
    build_gain_matrix, enumerate_states, validate_schedule, GainMatrix, ModelError, Schedule,
    Topology, TransmitState, MAX_NODES,
};
pub use rates::{
    cut_rate, cutset_min, df_rate, full_duplex_df_rate, gamma, is_rsnr_degraded, reception_rate,
    reception_rates, rsnr_violation, RateVector, RsnrViolation,
};
pub use sched::{
    best_decoding_order, cutset_bound_opt, four_node_closed_form, grid_oracle, solve_algorithm1,
    solve_algorithm2, solve_algorithm3, solve_df_schedule, solve_grid, solve_maximin, SchedError,
    SolveMethod, SolveReport,
};
