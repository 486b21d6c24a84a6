//! Detour and cell-to-detector constraints for periodic switching.
//!
//! A photon reaches its cell with `r` seconds left in the current mode.
//! For the backward wave to meet the cell in the *other* mode, the
//! detection must be time-like after the mode change (`r + t_f < t̄_f`)
//! and time-like before the cell reverts (`t̄_f + t_f < r + Δt`), where
//! `t̄_f = t_f + 2y/c` is the transit through a detour of height `y`.
//! Accepting every `r` in `[r_min, r_max]` turns those into an open window
//! of detour heights.

use crate::error::{Error, Result};
use crate::lorentz::{interval_class, IntervalClass, SpacetimeEvent, C};

/// Window widths below this fraction of `c·Δt` count as empty.
const EDGE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimingParameters {
    /// Duration of each switch mode, s.
    pub delta_t: f64,
    /// Straight-line cell-to-detector transit, s.
    pub t_f: f64,
    /// Detour height, m.
    pub y: f64,
    /// Fraction of each mode whose late arrivals are discarded.
    pub q: f64,
}

impl TimingParameters {
    pub fn new(delta_t: f64, t_f: f64, y: f64, q: f64) -> Result<Self> {
        let p = TimingParameters { delta_t, t_f, y, q };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta_t.is_finite() && self.delta_t > 0.0) {
            return Err(Error::domain("delta_t must be positive"));
        }
        if !(self.t_f.is_finite() && self.t_f >= 0.0) {
            return Err(Error::domain("t_f must be non-negative"));
        }
        if !(self.y.is_finite() && self.y >= 0.0) {
            return Err(Error::domain("detour height must be non-negative"));
        }
        if !(0.0..=1.0).contains(&self.q) {
            return Err(Error::domain("discard fraction must lie in [0, 1]"));
        }
        Ok(())
    }

    pub fn detour_transit(&self) -> f64 {
        detour_transit_time(self.t_f, self.y)
    }
}

/// Open interval of admissible detour heights, in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct YWindow {
    pub lower: f64,
    pub upper: f64,
    scale: f64,
}

impl YWindow {
    pub fn is_empty(&self) -> bool {
        self.upper - self.lower <= EDGE_TOL * self.scale
    }

    pub fn contains(&self, y: f64) -> bool {
        !self.is_empty() && self.lower < y && y < self.upper
    }

    pub fn width(&self) -> f64 {
        (self.upper - self.lower).max(0.0)
    }
}

/// Cell-to-detector transit through a detour of height `y`.
pub fn detour_transit_time(t_f: f64, y: f64) -> f64 {
    t_f + 2.0 * y / C
}

/// Detour heights that work for every photon arriving with between `r_min`
/// and `r_max` seconds left in the cell's current mode.
pub fn y_window(delta_t: f64, t_f: f64, r_min: f64, r_max: f64) -> Result<YWindow> {
    if !(delta_t > 0.0 && delta_t.is_finite()) {
        return Err(Error::domain("delta_t must be positive"));
    }
    if !(0.0 <= r_min && r_min <= r_max && r_max <= delta_t) {
        return Err(Error::domain(format!(
            "need 0 <= r_min <= r_max <= delta_t, got r_min = {r_min}, r_max = {r_max}, delta_t = {delta_t}"
        )));
    }
    Ok(YWindow {
        lower: C * r_max / 2.0,
        upper: C * (r_min + delta_t) / 2.0 - C * t_f,
        scale: C * delta_t,
    })
}

/// Window for the compromise scheme that keeps arrivals with at least
/// `q·Δt` left in the mode.
pub fn compromise_window(delta_t: f64, t_f: f64, q: f64) -> Result<YWindow> {
    y_window(delta_t, t_f, q * delta_t, delta_t)
}

/// Whether some detour height serves every kept photon: `t_f < q·Δt/2`.
pub fn feasible(delta_t: f64, t_f: f64, q: f64) -> bool {
    q * delta_t / 2.0 - t_f > EDGE_TOL * delta_t
}

/// Open upper bound on the straight cell-to-detector distance, meters.
pub fn max_cell_detector_distance(delta_t: f64, q: f64) -> f64 {
    C * q * delta_t / 2.0
}

/// Independent check of a single arrival: walks an explicit square wave,
/// places the switch, revert and detection events in spacetime and asks
/// whether detection is time-like after the switch and time-like before
/// the revert.
pub fn brute_force_timeline_check(p: &TimingParameters, s_elapsed: f64) -> Result<bool> {
    p.validate()?;
    if !(0.0 <= s_elapsed && s_elapsed < p.delta_t) {
        return Err(Error::domain("s_elapsed must lie in [0, delta_t)"));
    }
    let mode_at = |t: f64| ((t / p.delta_t).floor() as i64).rem_euclid(2);

    // The current mode started at t = 0 on the cell's clock.
    let passage = s_elapsed;
    let current = mode_at(passage);
    let mut boundary = 0.0;
    while boundary <= passage {
        boundary += p.delta_t;
    }
    let switch_t = boundary;
    let revert_t = switch_t + p.delta_t;
    debug_assert_ne!(mode_at(switch_t + p.delta_t / 2.0), current);

    let cell_x = 0.0;
    let detector_x = C * p.t_f;
    let detection = SpacetimeEvent::new(passage + p.t_f + 2.0 * p.y / C, detector_x);
    let switch = SpacetimeEvent::new(switch_t, cell_x);
    let revert = SpacetimeEvent::new(revert_t, cell_x);

    let after_switch =
        detection.t > switch.t && interval_class(switch, detection) == IntervalClass::TimeLike;
    let before_revert =
        detection.t < revert.t && interval_class(detection, revert) == IntervalClass::TimeLike;
    Ok(after_switch && before_revert)
}

/// Everything `bwave plan` reports for one set of timing parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanReport {
    pub params: TimingParameters,
    pub window: YWindow,
    pub feasible: bool,
    pub max_cell_detector_distance: f64,
    pub y_in_window: bool,
    /// Arrival phases checked with the brute-force oracle.
    pub oracle_samples: usize,
    pub oracle_passes: usize,
}

impl PlanReport {
    pub fn oracle_ok(&self) -> bool {
        self.oracle_samples > 0 && self.oracle_passes == self.oracle_samples
    }
}

pub fn plan(p: &TimingParameters, grid: usize) -> Result<PlanReport> {
    p.validate()?;
    let window = compromise_window(p.delta_t, p.t_f, p.q)?;
    let grid = grid.max(2);
    // Kept arrivals have spent at most (1 - q)·Δt in the mode.
    let span = (1.0 - p.q) * p.delta_t;
    let mut samples = 0;
    let mut passes = 0;
    for k in 0..grid {
        let s = span * k as f64 / (grid - 1) as f64;
        if s >= p.delta_t {
            continue;
        }
        samples += 1;
        if brute_force_timeline_check(p, s)? {
            passes += 1;
        }
        if span == 0.0 {
            break;
        }
    }
    Ok(PlanReport {
        params: *p,
        window,
        feasible: feasible(p.delta_t, p.t_f, p.q),
        max_cell_detector_distance: max_cell_detector_distance(p.delta_t, p.q),
        y_in_window: window.contains(p.y),
        oracle_samples: samples,
        oracle_passes: passes,
    })
}
