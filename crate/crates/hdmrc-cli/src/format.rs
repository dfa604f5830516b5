//! Output helpers: fixed-significance decimal formatting and the
//! human-readable tables shared by the subcommands.

use hdmrc::{validate_schedule, RateVector, Schedule, TransmitState};

/// Formats with 12 significant digits and trailing zeros trimmed
/// (printf `%.12g` for the decimal magnitudes that occur here), so CSV
/// output is compact and byte-stable.
pub fn fmt_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let mag = x.abs().log10().floor() as i32;
    let decimals = (11 - mag).clamp(0, 25) as usize;
    let mut s = format!("{x:.decimals$}");
    if s.contains('.') {
        while s.ends_with('0') {
            s.pop();
        }
        if s.ends_with('.') {
            s.pop();
        }
    }
    s
}

/// Per-state probability table with canonical indices and tuple labels.
/// Every printed schedule re-validates first; a failure here is a solver
/// bug, not user error.
pub fn schedule_table(sched: &Schedule) -> String {
    validate_schedule(sched.probs(), sched.node_count())
        .expect("solver returned an invalid schedule");
    let mut out = String::from("state  label       p\n");
    for (j, &p) in sched.probs().iter().enumerate() {
        let label = TransmitState::from_index(j, sched.node_count()).label();
        out.push_str(&format!("{j:>5}  {label:<10}  {}\n", fmt_sig(p)));
    }
    out
}

/// Per-node reception rates, marking the bottleneck nodes.
pub fn rates_table(rv: &RateVector, bottleneck: &[usize]) -> String {
    let mut out = String::from("node   reception_rate\n");
    for (k, r) in rv.iter() {
        let mark = if bottleneck.contains(&k) { "  <- bottleneck" } else { "" };
        out.push_str(&format!("{k:>4}   {}{mark}\n", fmt_sig(r)));
    }
    out
}

/// State tuple labels in canonical order, for machine-readable output.
pub fn state_labels(d: usize) -> Vec<String> {
    (0..(1usize << (d - 2)))
        .map(|j| TransmitState::from_index(j, d).label())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::fmt_sig;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(fmt_sig(0.0), "0");
        assert_eq!(fmt_sig(-0.0), "0");
        assert_eq!(fmt_sig(66.0), "66");
        assert_eq!(fmt_sig(0.001), "0.001");
        assert_eq!(fmt_sig(1000.0), "1000");
        assert_eq!(fmt_sig(0.2981520066074036), "0.298152006607");
        assert_eq!(fmt_sig(3.4594316186372973), "3.45943161864");
        assert_eq!(fmt_sig(-1.5), "-1.5");
        assert_eq!(fmt_sig(123456789012.34), "123456789012");
    }
}
