//! Run artifacts: trajectory, trigger and message logs, metrics reports.
//!
//! Floats are written with 9 significant digits. Agent ids are 1-based.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::analysis::Metrics;
use crate::engine::SimOutput;
use crate::protocol::AcceptOutcome;
use crate::scenario::Overrides;

pub const TRAJECTORY_FILE: &str = "trajectory.csv";
pub const TRIGGER_FILE: &str = "triggers.csv";
pub const MESSAGE_FILE: &str = "messages.csv";
pub const METRICS_FILE: &str = "metrics.txt";
pub const METRICS_KV_FILE: &str = "metrics.kv";

/// Formats like C's `%.9g`.
pub fn fmt_g9(x: f64) -> String {
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..9).contains(&exp) {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (8 - exp) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn outcome_name(o: AcceptOutcome) -> &'static str {
    match o {
        AcceptOutcome::Accepted => "accepted",
        AcceptOutcome::Rejected => "rejected",
        AcceptOutcome::UnknownSender => "unknown_sender",
    }
}

pub fn trajectory_csv(out: &SimOutput) -> String {
    let mut s = String::from("t,agent,q1,q2,dq1,dq2,eta1,eta2,W1,W2\n");
    for frame in &out.frames {
        let t = fmt_g9(frame.t);
        for (i, a) in frame.agents.iter().enumerate() {
            let _ = write!(s, "{t},{}", i + 1);
            for v in a.q.iter().chain(&a.dq).chain(&a.eta).chain(&a.w) {
                s.push(',');
                s.push_str(&fmt_g9(*v));
            }
            s.push('\n');
        }
    }
    s
}

pub fn trigger_csv(out: &SimOutput) -> String {
    let mut s = String::from("agent,t\n");
    for (i, events) in out.triggers.iter().enumerate() {
        for e in events {
            let _ = writeln!(s, "{},{}", i + 1, fmt_g9(e.t));
        }
    }
    s
}

pub fn message_csv(out: &SimOutput) -> String {
    let mut s = String::from("t,sender,receiver,outcome\n");
    for m in &out.messages {
        let _ = writeln!(s, "{},{},{},{}", fmt_g9(m.t), m.sender + 1, m.receiver + 1, outcome_name(m.outcome));
    }
    s
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| "undefined".into(), fmt_g9)
}

fn override_lines(o: &Overrides) -> Vec<String> {
    let mut lines = Vec::new();
    if let Some(dt) = o.dt {
        lines.push(format!("dt = {}", fmt_g9(dt)));
    }
    if let Some(h) = o.horizon {
        lines.push(format!("horizon = {}", fmt_g9(h)));
    }
    if let Some(seed) = o.seed {
        lines.push(format!("seed = {seed}"));
    }
    if let Some(f) = o.f {
        lines.push(format!("f = {f}"));
    }
    if let Some(d) = o.decimation {
        lines.push(format!("decimation = {d}"));
    }
    lines
}

/// Human-readable report. The header echoes the scenario source and every override.
pub fn metrics_report(source: &str, overrides: &Overrides, out: &SimOutput, m: &Metrics) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "scenario: {source}");
    let lines = override_lines(overrides);
    if lines.is_empty() {
        let _ = writeln!(s, "overrides: none");
    } else {
        let _ = writeln!(s, "overrides: {}", lines.join(", "));
    }
    for w in &out.warnings {
        let _ = writeln!(s, "warning: {w}");
    }
    let _ = writeln!(s);
    let _ = writeln!(s, "{:>6} {:>10} {:>14} {:>14} {:>14} {:>14}", "agent", "triggers", "min_interval", "settling", "initial_err", "final_err");
    for a in &m.agents {
        let _ = writeln!(
            s,
            "{:>6} {:>10} {:>14} {:>14} {:>14} {:>14}",
            a.agent + 1,
            a.trigger_count,
            opt(a.min_trigger_interval),
            opt(a.settling_time),
            fmt_g9(a.initial_error),
            fmt_g9(a.terminal_error),
        );
    }
    let _ = writeln!(s);
    if m.all_settled() {
        let _ = writeln!(s, "consensus: settled");
    } else {
        let unsettled: Vec<String> =
            m.agents.iter().filter(|a| a.settling_time.is_none()).map(|a| (a.agent + 1).to_string()).collect();
        let _ = writeln!(s, "consensus: NOT CONVERGED (undefined settling for agents {})", unsettled.join(" "));
    }
    let _ = writeln!(s, "terminal spread q: {}", fmt_g9(m.terminal_q_spread));
    let _ = writeln!(s, "terminal spread dq: {}", fmt_g9(m.terminal_dq_spread));
    let _ = writeln!(s, "terminal spread eta: {}", fmt_g9(m.terminal_eta_spread));
    let _ = writeln!(s, "terminal spread W: {}", fmt_g9(m.terminal_w_spread));
    let _ = writeln!(s, "messages: {} accepted, {} rejected", m.messages_accepted, m.messages_rejected);
    s
}

/// Flat `key = value` rendering of the metrics for scripts.
pub fn metrics_kv(m: &Metrics) -> String {
    let mut s = String::new();
    for a in &m.agents {
        let id = a.agent + 1;
        let _ = writeln!(s, "agent{id}.triggers = {}", a.trigger_count);
        let _ = writeln!(s, "agent{id}.min_interval = {}", opt(a.min_trigger_interval));
        let _ = writeln!(s, "agent{id}.settling = {}", opt(a.settling_time));
        let _ = writeln!(s, "agent{id}.fusion_runs = {}", a.fusion_runs);
    }
    let _ = writeln!(s, "spread.q = {}", fmt_g9(m.terminal_q_spread));
    let _ = writeln!(s, "spread.dq = {}", fmt_g9(m.terminal_dq_spread));
    let _ = writeln!(s, "spread.eta = {}", fmt_g9(m.terminal_eta_spread));
    let _ = writeln!(s, "spread.W = {}", fmt_g9(m.terminal_w_spread));
    let _ = writeln!(s, "converged = {}", m.all_settled());
    s
}

/// Writes every artifact into `dir`, creating it if needed.
pub fn write_run(dir: &Path, source: &str, overrides: &Overrides, out: &SimOutput, m: &Metrics) -> std::io::Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(TRAJECTORY_FILE), trajectory_csv(out))?;
    fs::write(dir.join(TRIGGER_FILE), trigger_csv(out))?;
    fs::write(dir.join(MESSAGE_FILE), message_csv(out))?;
    fs::write(dir.join(METRICS_FILE), metrics_report(source, overrides, out, m))?;
    fs::write(dir.join(METRICS_KV_FILE), metrics_kv(m))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn g9_matches_printf() {
        let cases = [
            (0.0, "0"),
            (1.0, "1"),
            (-2.5, "-2.5"),
            (0.1, "0.1"),
            (1.0 / 3.0, "0.333333333"),
            (123456789.0, "123456789"),
            (1234567890.0, "1.23456789e+09"),
            (1e-5, "1e-05"),
            (0.0001234, "0.0001234"),
            (std::f64::consts::PI, "3.14159265"),
            (9.9999999999, "10"),
            (1e-10, "1e-10"),
        ];
        for (x, want) in cases {
            assert_eq!(fmt_g9(x), want, "{x}");
        }
    }

    #[test]
    fn g9_round_trips_to_nine_digits() {
        for x in [1.0e-7, 0.123456789012, 98765.4321, -3.0e12] {
            let y: f64 = fmt_g9(x).parse().unwrap();
            assert!(((y - x) / x).abs() < 1e-8, "{x}");
        }
    }
}
