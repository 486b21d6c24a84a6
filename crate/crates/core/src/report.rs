//! CSV tables and human-readable reports.
//!
//! Every table has a header row, rows in a fixed order and floats written
//! with 12 significant digits, so output is byte-stable for a fixed config
//! and seed.

use std::fmt::Write as _;

use crate::lorentz::{FrameThreshold, IntervalClass, C};
use crate::planner::PlanReport;
use crate::polarization::JointOutcome;
use crate::sim::{ChshEstimate, RunSummary, ScanRow, CLASSICAL_CHSH_BOUND};

/// `x` in scientific notation with 12 significant digits.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.11e}")
}

pub fn simulate_csv(s: &RunSummary) -> String {
    let mut out = String::from("outcome,count,probability,stderr,model,seed\n");
    for o in JointOutcome::ALL {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            o.label(),
            s.count(o),
            fmt_float(s.probability(o)),
            fmt_float(s.stderr(o)),
            s.model.keyword(),
            s.seed
        );
    }
    out
}

pub fn summary_text(s: &RunSummary) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "model      {}", s.model.keyword());
    let _ = writeln!(out, "seed       {}", s.seed);
    let _ = writeln!(out, "config     {}", s.config_digest);
    let _ = writeln!(out, "trials     {}", s.trials);
    let _ = writeln!(out, "kept       {}", s.kept);
    let _ = writeln!(out, "discarded  {}", s.discarded);
    if s.tie_breaks > 0 {
        let _ = writeln!(
            out,
            "tie-breaks {} (simultaneous first detections)",
            s.tie_breaks
        );
    }
    if s.late_forcings > 0 {
        let _ = writeln!(
            out,
            "late       {} (partner already past its polarizer when forced)",
            s.late_forcings
        );
    }
    for o in JointOutcome::ALL {
        let _ = writeln!(
            out,
            "P({})      {:.6} ± {:.6}  ({} counts)",
            o.label(),
            s.probability(o),
            s.stderr(o),
            s.count(o)
        );
    }
    out
}

pub fn scan_csv(rows: &[ScanRow]) -> String {
    let mut out = String::from("theta_rad,p21_estimate,stderr,p21_analytic\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            fmt_float(r.theta),
            fmt_float(r.p21_estimate),
            fmt_float(r.stderr),
            fmt_float(r.p21_analytic)
        );
    }
    out
}

pub fn chsh_csv(est: &ChshEstimate) -> String {
    let mut out = String::from("setting,E_estimate,stderr\n");
    for s in &est.settings {
        let _ = writeln!(
            out,
            "{},{},{}",
            s.label,
            fmt_float(s.e),
            fmt_float(s.stderr)
        );
    }
    let _ = writeln!(out, "S,{},{}", fmt_float(est.s), fmt_float(est.s_stderr));
    out
}

pub fn chsh_text(est: &ChshEstimate) -> String {
    let mut out = String::new();
    for s in &est.settings {
        let _ = writeln!(
            out,
            "E({:.6}, {:.6}) = {:+.6} ± {:.6}",
            s.a.radians(),
            s.b.radians(),
            s.e,
            s.stderr
        );
    }
    let _ = writeln!(out, "S = {:.6} ± {:.6}", est.s, est.s_stderr);
    let _ = writeln!(
        out,
        "classical (local hidden-variable) bound: S <= {CLASSICAL_CHSH_BOUND}"
    );
    out
}

pub fn plan_csv(r: &PlanReport) -> String {
    let p = &r.params;
    let rows: [(&str, String); 12] = [
        ("delta_t_s", fmt_float(p.delta_t)),
        ("t_f_s", fmt_float(p.t_f)),
        ("y_m", fmt_float(p.y)),
        ("q", fmt_float(p.q)),
        ("y_lower_m", fmt_float(r.window.lower)),
        ("y_upper_m", fmt_float(r.window.upper)),
        ("window_empty", r.window.is_empty().to_string()),
        ("feasible", r.feasible.to_string()),
        (
            "max_cell_detector_m",
            fmt_float(r.max_cell_detector_distance),
        ),
        ("y_in_window", r.y_in_window.to_string()),
        ("oracle_samples", r.oracle_samples.to_string()),
        ("oracle_passes", r.oracle_passes.to_string()),
    ];
    let mut out = String::from("quantity,value\n");
    for (k, v) in rows {
        let _ = writeln!(out, "{k},{v}");
    }
    out
}

pub fn plan_text(r: &PlanReport) -> String {
    let p = &r.params;
    let mut out = String::new();
    let _ = writeln!(out, "mode duration      {:.6} ns", p.delta_t * 1e9);
    let _ = writeln!(out, "cell->detector t_f {:.6} ns", p.t_f * 1e9);
    let _ = writeln!(out, "discard fraction q {}", p.q);
    if r.window.is_empty() {
        let _ = writeln!(
            out,
            "y window           empty (lower {:.6} m >= upper {:.6} m)",
            r.window.lower, r.window.upper
        );
    } else {
        let _ = writeln!(
            out,
            "y window           ({:.6} m, {:.6} m)",
            r.window.lower, r.window.upper
        );
    }
    let _ = writeln!(
        out,
        "max cell-detector  < {:.6} m (t_f < {:.6} ns)",
        r.max_cell_detector_distance,
        r.max_cell_detector_distance / C * 1e9
    );
    let _ = writeln!(
        out,
        "feasible           {}",
        if r.feasible { "yes" } else { "no" }
    );
    let _ = writeln!(
        out,
        "configured y       {:.6} m ({})",
        p.y,
        if r.y_in_window {
            "inside window"
        } else {
            "outside window"
        }
    );
    let _ = writeln!(
        out,
        "timeline oracle    {}/{} kept arrival phases pass",
        r.oracle_passes, r.oracle_samples
    );
    out
}

/// One row of the `frames` report.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameRow {
    pub pair: &'static str,
    pub class: IntervalClass,
    pub threshold: FrameThreshold,
}

fn class_name(c: IntervalClass) -> &'static str {
    match c {
        IntervalClass::TimeLike => "time-like",
        IntervalClass::SpaceLike => "space-like",
        IntervalClass::LightLike => "light-like",
    }
}

/// Threshold that applies to the row; pairs that are not space-like keep
/// their order in every frame.
fn effective_threshold(r: &FrameRow) -> FrameThreshold {
    match r.class {
        IntervalClass::SpaceLike => r.threshold,
        IntervalClass::TimeLike | IntervalClass::LightLike => FrameThreshold::NoFrame,
    }
}

pub fn frames_csv(rows: &[FrameRow]) -> String {
    let mut out = String::from("pair,interval,threshold_beta\n");
    for r in rows {
        let beta = match effective_threshold(r).as_beta() {
            Some(b) => fmt_float(b),
            None => "none".to_string(),
        };
        let _ = writeln!(out, "{},{},{}", r.pair, class_name(r.class), beta);
    }
    out
}

pub fn frames_text(rows: &[FrameRow]) -> String {
    let mut out = String::new();
    for r in rows {
        let verdict = match effective_threshold(r) {
            FrameThreshold::Velocity(v) => format!(
                "detection precedes the switch in frames with v > {:.6} c",
                v / C
            ),
            FrameThreshold::NoFrame => "no frame exists; ordering absolute".to_string(),
        };
        let _ = writeln!(
            out,
            "{:<22} {:<11} {}",
            r.pair,
            class_name(r.class),
            verdict
        );
    }
    out
}
