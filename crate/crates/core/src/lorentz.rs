//! One-dimensional special-relativistic kinematics along the source axis.
//!
//! Arm 1 lies along `+x` and arm 2 along `-x`, with the source at the
//! origin and emission at `t = 0`. Boosts are in the standard
//! configuration: the primed frame moves with velocity `v` along `+x` and
//! the origins coincide.

use crate::error::{Error, Result};

/// Speed of light in vacuum, m/s (exact SI value).
pub const C: f64 = 299_792_458.0;

/// Two boosted event times closer than this are treated as simultaneous.
pub const SIMULTANEITY_TOL: f64 = 1e-18;

/// Relative tolerance under which an interval counts as light-like.
pub const LIGHTLIKE_REL_TOL: f64 = 1e-12;

/// A point in the lab frame: time in seconds, position in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpacetimeEvent {
    pub t: f64,
    pub x: f64,
}

impl SpacetimeEvent {
    pub const ORIGIN: SpacetimeEvent = SpacetimeEvent { t: 0.0, x: 0.0 };

    pub fn new(t: f64, x: f64) -> Self {
        SpacetimeEvent { t, x }
    }
}

/// Velocity of a primed frame relative to the lab, along `+x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameBoost {
    v: f64,
}

impl FrameBoost {
    pub const LAB: FrameBoost = FrameBoost { v: 0.0 };

    pub fn new(v: f64) -> Result<Self> {
        if !v.is_finite() || v.abs() >= C {
            return Err(Error::domain(format!(
                "boost velocity {v} m/s is not below the speed of light"
            )));
        }
        Ok(FrameBoost { v })
    }

    /// Boost given as a fraction of `c`.
    pub fn from_beta(beta: f64) -> Result<Self> {
        Self::new(beta * C)
    }

    pub fn velocity(&self) -> f64 {
        self.v
    }

    pub fn beta(&self) -> f64 {
        self.v / C
    }

    pub fn gamma(&self) -> f64 {
        let beta = self.beta();
        1.0 / ((1.0 - beta) * (1.0 + beta)).sqrt()
    }

    pub fn inverse(&self) -> FrameBoost {
        FrameBoost { v: -self.v }
    }

    /// Time coordinate of `e` in this frame.
    pub fn time_of(&self, e: SpacetimeEvent) -> f64 {
        self.gamma() * (e.t - self.v * e.x / (C * C))
    }
}

/// Lab positions of the cell and the detector on arm 1 (arm 2 is mirrored).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabGeometry {
    x: f64,
    x_bar: f64,
}

impl LabGeometry {
    /// `x` is the source-to-cell distance and `x_bar` the straight-line
    /// source-to-detector distance.
    pub fn new(x: f64, x_bar: f64) -> Result<Self> {
        if !(x.is_finite() && x_bar.is_finite()) || x <= 0.0 || x_bar <= x {
            return Err(Error::geometry(format!(
                "need 0 < x < x_bar, got x = {x} m, x_bar = {x_bar} m"
            )));
        }
        Ok(LabGeometry { x, x_bar })
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn x_bar(&self) -> f64 {
        self.x_bar
    }

    /// Straight-line transit from cell to detector on the same arm.
    pub fn t_f(&self) -> f64 {
        (self.x_bar - self.x) / C
    }

    /// Straight-line transit from the opposite arm's cell to this detector.
    pub fn far_t_f(&self) -> f64 {
        (self.x_bar + self.x) / C
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IntervalClass {
    TimeLike,
    SpaceLike,
    LightLike,
}

/// Temporal position of the first event relative to the second.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ordering {
    Before,
    After,
    Simultaneous,
}

/// Result of a velocity-threshold query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FrameThreshold {
    /// Frames moving faster than this (m/s, and below `c`) see the
    /// detection precede the switch change.
    Velocity(f64),
    /// The events are time-like or light-like; no frame reverses them.
    NoFrame,
}

impl FrameThreshold {
    pub fn as_beta(&self) -> Option<f64> {
        match self {
            FrameThreshold::Velocity(v) => Some(v / C),
            FrameThreshold::NoFrame => None,
        }
    }
}

pub fn boost(e: SpacetimeEvent, b: FrameBoost) -> SpacetimeEvent {
    let gamma = b.gamma();
    SpacetimeEvent {
        t: gamma * (e.t - b.v * e.x / (C * C)),
        x: gamma * (e.x - b.v * e.t),
    }
}

/// Invariant interval `c^2 dt^2 - dx^2` between two events.
pub fn interval_squared(e1: SpacetimeEvent, e2: SpacetimeEvent) -> f64 {
    let ct = C * (e2.t - e1.t);
    let dx = e2.x - e1.x;
    ct * ct - dx * dx
}

pub fn interval_class(e1: SpacetimeEvent, e2: SpacetimeEvent) -> IntervalClass {
    let ct = C * (e2.t - e1.t);
    let dx = e2.x - e1.x;
    let s2 = ct * ct - dx * dx;
    let scale = ct * ct + dx * dx;
    if s2.abs() <= LIGHTLIKE_REL_TOL * scale {
        IntervalClass::LightLike
    } else if s2 > 0.0 {
        IntervalClass::TimeLike
    } else {
        IntervalClass::SpaceLike
    }
}

fn threshold(gap: f64, transit: f64) -> FrameThreshold {
    if gap <= 0.0 {
        return FrameThreshold::Velocity(0.0);
    }
    let v = C * gap / transit;
    // light-like within rounding counts as no frame
    if v >= C * (1.0 - LIGHTLIKE_REL_TOL) {
        FrameThreshold::NoFrame
    } else {
        FrameThreshold::Velocity(v)
    }
}

/// Minimum frame velocity for which arm-1 detection at `t_bar` precedes the
/// completion of its own cell's switch at `t_switch`.
pub fn own_switch_threshold(t_bar: f64, t_switch: f64, g: &LabGeometry) -> FrameThreshold {
    threshold(t_bar - t_switch, g.t_f())
}

/// Same as [`own_switch_threshold`] against the opposite arm's cell.
pub fn far_switch_threshold(t_bar: f64, t_switch: f64, g: &LabGeometry) -> FrameThreshold {
    threshold(t_bar - t_switch, g.far_t_f())
}

pub fn ordering_in_frame(e1: SpacetimeEvent, e2: SpacetimeEvent, b: FrameBoost) -> Ordering {
    let dt = b.time_of(e1) - b.time_of(e2);
    if dt.abs() <= SIMULTANEITY_TOL {
        Ordering::Simultaneous
    } else if dt < 0.0 {
        Ordering::Before
    } else {
        Ordering::After
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn identity_boost() {
        let e = SpacetimeEvent::new(3.2e-8, -1.7);
        assert_eq!(boost(e, FrameBoost::LAB), e);
    }

    #[test]
    fn boost_examples() {
        let b = FrameBoost::from_beta(0.6).unwrap();
        assert_relative_eq!(b.gamma(), 1.25, max_relative = 1e-15);

        // t' = -gamma * 0.6 * (1 m) / c
        let e = boost(SpacetimeEvent::new(0.0, 1.0), b);
        assert_relative_eq!(e.t, -1.25 * 0.6 / C, max_relative = 1e-14);
        assert_relative_eq!(e.t, -2.5017e-9, max_relative = 1e-4);

        let e = boost(SpacetimeEvent::new(1.0, 0.0), b);
        assert_relative_eq!(e.t, 1.25, max_relative = 1e-14);

        assert_eq!(boost(SpacetimeEvent::ORIGIN, b), SpacetimeEvent::ORIGIN);
    }

    #[test]
    fn superluminal_boost_rejected() {
        assert!(FrameBoost::new(C).is_err());
        assert!(FrameBoost::new(-1.5 * C).is_err());
        assert!(FrameBoost::new(f64::NAN).is_err());
    }

    #[test]
    fn interval_examples() {
        let e = SpacetimeEvent::new(1e-9, 2.0);
        assert_eq!(interval_class(e, e), IntervalClass::LightLike);
        let a = SpacetimeEvent::ORIGIN;
        assert_eq!(
            interval_class(a, SpacetimeEvent::new(1.0, 0.0)),
            IntervalClass::TimeLike
        );
        assert_eq!(
            interval_class(a, SpacetimeEvent::new(1e-9, 1.0)),
            IntervalClass::SpaceLike
        );
        assert_eq!(
            interval_class(a, SpacetimeEvent::new(1.0 / C, 1.0)),
            IntervalClass::LightLike
        );
    }

    #[test]
    fn own_threshold_examples() {
        // t_f = 20 ns
        let g = LabGeometry::new(1.0, 1.0 + 20e-9 * C).unwrap();
        assert_eq!(
            own_switch_threshold(5e-8, 5e-8, &g),
            FrameThreshold::Velocity(0.0)
        );
        let v = own_switch_threshold(6e-8, 5e-8, &g).as_beta().unwrap();
        assert_relative_eq!(v, 0.5, max_relative = 1e-12);
        assert_eq!(
            own_switch_threshold(5e-8 + g.t_f(), 5e-8, &g),
            FrameThreshold::NoFrame
        );
        // already reversed in the lab
        assert_eq!(
            own_switch_threshold(4e-8, 5e-8, &g),
            FrameThreshold::Velocity(0.0)
        );
    }

    #[test]
    fn far_threshold_examples() {
        // T_f = 40 ns
        let x = 10e-9 * C;
        let g = LabGeometry::new(x, x + 20e-9 * C).unwrap();
        assert_relative_eq!(g.far_t_f(), 40e-9, max_relative = 1e-12);
        let v = far_switch_threshold(6e-8, 5e-8, &g).as_beta().unwrap();
        assert_relative_eq!(v, 0.25, max_relative = 1e-12);
        assert_eq!(
            far_switch_threshold(5e-8, 5e-8, &g),
            FrameThreshold::Velocity(0.0)
        );
    }

    #[test]
    fn ordering_flip_above_threshold() {
        let g = LabGeometry::new(1.0, 1.0 + 20e-9 * C).unwrap();
        let switch = SpacetimeEvent::new(5e-8, g.x());
        let detection = SpacetimeEvent::new(6e-8, g.x_bar());
        assert_eq!(
            ordering_in_frame(detection, switch, FrameBoost::LAB),
            Ordering::After
        );
        let fast = FrameBoost::from_beta(0.6).unwrap();
        assert_eq!(ordering_in_frame(detection, switch, fast), Ordering::Before);
        let slow = FrameBoost::from_beta(0.4).unwrap();
        assert_eq!(ordering_in_frame(detection, switch, slow), Ordering::After);
    }

    #[test]
    fn geometry_validation() {
        assert!(LabGeometry::new(0.0, 1.0).is_err());
        assert!(LabGeometry::new(2.0, 1.0).is_err());
        assert!(LabGeometry::new(1.0, 1.0).is_err());
        let g = LabGeometry::new(1.0, 1.3).unwrap();
        assert!(g.far_t_f() > g.t_f());
    }

    mod props {
        use super::super::*;
        use proptest::prelude::*;

        fn event() -> impl Strategy<Value = SpacetimeEvent> {
            (-1e-6f64..1e-6, -300.0f64..300.0).prop_map(|(t, x)| SpacetimeEvent::new(t, x))
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(2000))]

            #[test]
            fn interval_is_invariant(e1 in event(), e2 in event(), beta in -0.999f64..0.999) {
                let b = FrameBoost::from_beta(beta).unwrap();
                let (p1, p2) = (boost(e1, b), boost(e2, b));
                let s = interval_squared(e1, e2);
                let sp = interval_squared(p1, p2);
                let scale = |a: SpacetimeEvent, c: SpacetimeEvent| {
                    let ct = C * (c.t - a.t);
                    let dx = c.x - a.x;
                    ct * ct + dx * dx
                };
                let norm = scale(e1, e2).max(scale(p1, p2));
                prop_assume!(norm > 0.0);
                prop_assert!((s - sp).abs() <= 1e-12 * norm);
            }

            #[test]
            fn boost_round_trip(e in event(), beta in -0.999f64..0.999) {
                let b = FrameBoost::from_beta(beta).unwrap();
                let back = boost(boost(e, b), b.inverse());
                let scale = C * e.t.abs() + e.x.abs();
                prop_assert!((back.t - e.t).abs() * C <= 1e-12 * scale.max(1e-300));
                prop_assert!((back.x - e.x).abs() <= 1e-12 * scale.max(1e-300));
            }

            #[test]
            fn timelike_order_is_absolute(
                e1 in event(),
                dt in prop_oneof![-1e-6f64..-1e-9, 1e-9f64..1e-6],
                frac in -0.99f64..0.99,
                beta in -0.999f64..0.999,
            ) {
                let e2 = SpacetimeEvent::new(e1.t + dt, e1.x + frac * C * dt.abs());
                prop_assume!(interval_class(e1, e2) == IntervalClass::TimeLike);
                let b = FrameBoost::from_beta(beta).unwrap();
                prop_assert_eq!(ordering_in_frame(e1, e2, b), ordering_in_frame(e1, e2, FrameBoost::LAB));
            }

            #[test]
            fn flip_exactly_above_own_threshold(
                x in 0.1f64..10.0,
                tf_ns in 5.0f64..100.0,
                gap_frac in 0.4f64..0.95,
                t_switch_ns in 0.0f64..100.0,
            ) {
                let tf = tf_ns * 1e-9;
                let g = LabGeometry::new(x, x + tf * C).unwrap();
                let t_switch = t_switch_ns * 1e-9;
                let t_bar = t_switch + gap_frac * tf;
                let FrameThreshold::Velocity(v) = own_switch_threshold(t_bar, t_switch, &g) else {
                    panic!("space-like pair must have a threshold");
                };
                let det = SpacetimeEvent::new(t_bar, g.x_bar());
                let sw = SpacetimeEvent::new(t_switch, g.x());
                let above = FrameBoost::new(v * (1.0 + 1e-9)).unwrap();
                let below = FrameBoost::new(v * (1.0 - 1e-9)).unwrap();
                prop_assert_eq!(ordering_in_frame(det, sw, above), Ordering::Before);
                prop_assert_eq!(ordering_in_frame(det, sw, below), Ordering::After);
            }

            #[test]
            fn far_threshold_never_exceeds_own(
                x in 0.1f64..10.0,
                span in 0.01f64..10.0,
                gap_ns in 0.0f64..100.0,
            ) {
                let g = LabGeometry::new(x, x + span).unwrap();
                let t = 1e-7;
                let own = own_switch_threshold(t + gap_ns * 1e-9, t, &g);
                let far = far_switch_threshold(t + gap_ns * 1e-9, t, &g);
                match (own, far) {
                    (FrameThreshold::Velocity(o), FrameThreshold::Velocity(f)) => prop_assert!(f <= o),
                    (FrameThreshold::NoFrame, _) => {}
                    (FrameThreshold::Velocity(_), FrameThreshold::NoFrame) => prop_assert!(false),
                }
            }
        }
    }
}
