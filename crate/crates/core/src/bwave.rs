//! Nonlocal B-wave model.
//!
//! The photon detected first in the preferred frame emits a B-wave from
//! its polarizer, in the polarizer's axis for the transmitted port or the
//! orthogonal axis for the reflected port. The wave runs back through the
//! arm (an activated cell turns it by `+θ`, undoing the `−θ` it applies to
//! light going forward), leaves the source in the orthogonal state and
//! runs out along the partner's arm, where it crosses elements the partner
//! already passed with the ordinary forward rules. The partner photon is
//! forced into the resulting state, and the rest of its journey is
//! ordinary optics ending in Malus's law.
//!
//! Propagation is instantaneous in the preferred frame: the wave meets
//! each element at the lab event simultaneous, in that frame, with the
//! trigger.

use rand::Rng;

use crate::error::{Error, Result};
use crate::experiment::Arm;
use crate::lorentz::{ordering_in_frame, FrameBoost, Ordering, SpacetimeEvent, C};
use crate::polarization::{Channel, JointOutcome, Mode, PolarizationAngle};
use crate::qm::malus;
use crate::timeline::{ArmTimeline, TrialRecord};

/// Where the B-wave is unleashed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TriggerPoint {
    /// Absorption of the first photon at its detector.
    Detector,
    /// Splitting of the first photon at its polarizer.
    Polarizer,
}

impl TriggerPoint {
    pub fn keyword(self) -> &'static str {
        match self {
            TriggerPoint::Detector => "detector",
            TriggerPoint::Polarizer => "polarizer",
        }
    }
}

/// The frame in which detection order is taken to be physical.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PreferredFrame(pub FrameBoost);

impl PreferredFrame {
    pub const LAB: PreferredFrame = PreferredFrame(FrameBoost::LAB);

    pub fn new(v: f64) -> Result<Self> {
        FrameBoost::new(v).map(PreferredFrame)
    }

    pub fn boost(&self) -> FrameBoost {
        self.0
    }

    /// Lab time at position `x` simultaneous, in this frame, with `e`.
    pub fn simultaneous_time_at(&self, e: SpacetimeEvent, x: f64) -> f64 {
        e.t + self.0.velocity() * (x - e.x) / (C * C)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BWaveState(pub PolarizationAngle);

impl BWaveState {
    pub fn angle(self) -> PolarizationAngle {
        self.0
    }
}

/// First arm to detect in the preferred frame, and whether the tie-break
/// decided it.
pub fn first_detection(trial: &TrialRecord, pf: PreferredFrame, tie_break: Arm) -> (Arm, bool) {
    let d1 = trial.arm(Arm::One).detection();
    let d2 = trial.arm(Arm::Two).detection();
    match ordering_in_frame(d1, d2, pf.boost()) {
        Ordering::Before => (Arm::One, false),
        Ordering::After => (Arm::Two, false),
        Ordering::Simultaneous => (tie_break, true),
    }
}

/// Port taken by the first-detected photon: a fair coin, whatever the
/// settings.
pub fn first_photon_outcome<R: Rng + ?Sized>(rng: &mut R) -> Channel {
    if rng.random::<bool>() {
        Channel::Transmitted
    } else {
        Channel::Reflected
    }
}

pub fn emit_bwave(channel: Channel, polarizer: PolarizationAngle) -> BWaveState {
    match channel {
        Channel::Transmitted => BWaveState(polarizer),
        Channel::Reflected => BWaveState(polarizer.orthogonal()),
    }
}

pub fn backward_cell_action(w: BWaveState, mode: Mode, theta: f64) -> BWaveState {
    match mode {
        Mode::Inactivated => w,
        Mode::Activated => BWaveState(w.0.rotated(theta)),
    }
}

/// Ordinary forward action of a cell on light (or an outgoing B-wave).
pub fn forward_cell_action(state: PolarizationAngle, mode: Mode, theta: f64) -> PolarizationAngle {
    match mode {
        Mode::Inactivated => state,
        Mode::Activated => state.rotated(-theta),
    }
}

pub fn source_action(w: BWaveState) -> PolarizationAngle {
    w.0.orthogonal()
}

pub fn trigger_event(trial: &TrialRecord, arm: Arm, tp: TriggerPoint) -> SpacetimeEvent {
    let a = trial.arm(arm);
    match tp {
        TriggerPoint::Detector => a.detection(),
        TriggerPoint::Polarizer => a.polarizer_event(),
    }
}

/// Where the partner ends up after being forced.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForcedPartner {
    /// Polarization reaching the partner's polarizer.
    pub state_at_polarizer: PolarizationAngle,
    pub analyzer: PolarizationAngle,
    /// The partner had crossed its polarizer before the trigger.
    pub late: bool,
}

impl ForcedPartner {
    pub fn p_transmitted(&self) -> f64 {
        malus(self.state_at_polarizer, self.analyzer)
    }
}

/// Forces the partner on `arm` into `forced` at the preferred-frame
/// instant of `trigger`. Cells the partner already passed act on the
/// outgoing B-wave at that instant; cells still ahead act on the photon
/// when it gets there.
pub fn force_partner(
    partner: &ArmTimeline,
    forced: PolarizationAngle,
    trigger: SpacetimeEvent,
    pf: PreferredFrame,
) -> Result<ForcedPartner> {
    let frame = pf.boost();
    if ordering_in_frame(partner.detection(), trigger, frame) == Ordering::Before {
        return Err(Error::ModelConsistency(
            "partner photon was detected before the B-wave was triggered".into(),
        ));
    }
    let mut state = forced;
    for (p, cell) in partner.cells_before_polarizer() {
        let mode = if ordering_in_frame(p.event, trigger, frame) == Ordering::Before {
            cell.schedule
                .mode(pf.simultaneous_time_at(trigger, p.event.x))
        } else {
            cell.mode
        };
        state = forward_cell_action(state, mode, cell.schedule.theta);
    }
    let late = ordering_in_frame(partner.polarizer_event(), trigger, frame) == Ordering::Before;
    Ok(ForcedPartner {
        state_at_polarizer: state,
        analyzer: partner.polarizer_angle,
        late,
    })
}

/// Full B-wave chain for one outcome of the first photon: emission,
/// backward passage through the first arm, source, forcing.
pub fn propagate(
    trial: &TrialRecord,
    first: Arm,
    channel: Channel,
    tp: TriggerPoint,
    pf: PreferredFrame,
) -> Result<(SpacetimeEvent, PolarizationAngle, ForcedPartner)> {
    let trigger = trigger_event(trial, first, tp);
    let arm = trial.arm(first);
    let mut w = emit_bwave(channel, arm.polarizer_angle);
    for (p, cell) in arm.cells_before_polarizer().rev() {
        let t = pf.simultaneous_time_at(trigger, p.event.x);
        w = backward_cell_action(w, cell.schedule.mode(t), cell.schedule.theta);
    }
    let forced = source_action(w);
    let partner = force_partner(trial.arm(first.other()), forced, trigger, pf)?;
    Ok((trigger, forced, partner))
}

/// Exact joint distribution (TT, TR, RT, RR) the B-wave model assigns to
/// this timeline.
pub fn joint_distribution(
    trial: &TrialRecord,
    first: Arm,
    tp: TriggerPoint,
    pf: PreferredFrame,
) -> Result<[f64; 4]> {
    let mut dist = [0.0; 4];
    for ch in [Channel::Transmitted, Channel::Reflected] {
        let (_, _, partner) = propagate(trial, first, ch, tp, pf)?;
        let pt = partner.p_transmitted();
        for (partner_ch, p) in [(Channel::Transmitted, pt), (Channel::Reflected, 1.0 - pt)] {
            let o = match first {
                Arm::One => JointOutcome::new(ch, partner_ch),
                Arm::Two => JointOutcome::new(partner_ch, ch),
            };
            dist[o.index()] += 0.5 * p;
        }
    }
    Ok(dist)
}

/// Both-transmitted probability for vertical polarizers when the first
/// photon crosses its cell inactivated and the B-wave finds it activated.
pub fn signature_p21(theta: f64) -> f64 {
    0.5 * theta.sin().powi(2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::{
        ArmLayout, DetourPlacement, Element, ExperimentConfig, StandardLayout, SwitchSchedule,
        Topology,
    };
    use crate::qm;
    use crate::timeline::build_timeline;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_6, PI};

    const NS: f64 = 1e-9;

    fn pa(a: f64) -> PolarizationAngle {
        PolarizationAngle::new(a)
    }

    fn fig3(theta: f64, placement: DetourPlacement) -> ExperimentConfig {
        let layout = StandardLayout {
            x: 1.0,
            x_bar: 1.3,
            y: [4.0, 6.0],
            placement,
            polarizers: [PolarizationAngle::VERTICAL; 2],
            cells: [Some(SwitchSchedule::periodic(20.0 * NS, 0.0, theta)), None],
        };
        ExperimentConfig::new(
            Topology::Fig3Asymmetric,
            layout.build(Topology::Fig3Asymmetric).unwrap(),
        )
    }

    /// Emission offset that puts arm-1's photon on C1 exactly as it turns
    /// inactive.
    fn inactive_entry(cfg: &ExperimentConfig) -> f64 {
        let (_, path, schedule) = cfg.reference_cell().unwrap();
        schedule
            .next_mode_start(Mode::Inactivated, path / C)
            .unwrap()
            - path / C
    }

    fn symmetric(angles: [f64; 2]) -> ExperimentConfig {
        let arm = |a: f64| {
            ArmLayout::new(vec![
                Element::Polarizer {
                    position: 1.0,
                    angle: pa(a),
                },
                Element::Detector { position: 2.0 },
            ])
        };
        ExperimentConfig::new(Topology::Custom, [arm(angles[0]), arm(angles[1])])
    }

    #[test]
    fn fig3_arm1_always_first() {
        let cfg = fig3(0.3, DetourPlacement::BeforePolarizer);
        for k in 0..20 {
            let trial = build_timeline(&cfg, k as f64 * 2.0 * NS).unwrap();
            assert_eq!(
                first_detection(&trial, PreferredFrame::LAB, Arm::Two),
                (Arm::One, false)
            );
            for beta in [-0.99, 0.5, 0.99] {
                let pf = PreferredFrame(FrameBoost::from_beta(beta).unwrap());
                assert_eq!(first_detection(&trial, pf, Arm::Two).0, Arm::One);
            }
        }
    }

    #[test]
    fn symmetric_tie_and_moving_frames() {
        let trial = build_timeline(&symmetric([0.0, 0.0]), 0.0).unwrap();
        assert_eq!(
            first_detection(&trial, PreferredFrame::LAB, Arm::One),
            (Arm::One, true)
        );
        assert_eq!(
            first_detection(&trial, PreferredFrame::LAB, Arm::Two),
            (Arm::Two, true)
        );
        // A frame moving toward +x meets arm 1's detector first, one moving
        // toward -x meets arm 2's.
        let plus = PreferredFrame(FrameBoost::from_beta(0.1).unwrap());
        let minus = PreferredFrame(FrameBoost::from_beta(-0.1).unwrap());
        assert_eq!(first_detection(&trial, plus, Arm::Two), (Arm::One, false));
        assert_eq!(first_detection(&trial, minus, Arm::One), (Arm::Two, false));
    }

    #[test]
    fn fair_first_photon() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let n = 200_000;
        let t = (0..n)
            .filter(|_| first_photon_outcome(&mut rng) == Channel::Transmitted)
            .count() as f64;
        let sigma = (n as f64 * 0.25).sqrt();
        assert!((t - n as f64 / 2.0).abs() < 3.0 * sigma);

        let mut a = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let mut b = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            assert_eq!(first_photon_outcome(&mut a), first_photon_outcome(&mut b));
        }
    }

    #[test]
    fn emission_rules() {
        assert_eq!(
            emit_bwave(Channel::Transmitted, PolarizationAngle::VERTICAL).angle(),
            pa(0.0)
        );
        assert_eq!(
            emit_bwave(Channel::Reflected, PolarizationAngle::VERTICAL).angle(),
            pa(FRAC_PI_2)
        );
        assert_eq!(emit_bwave(Channel::Transmitted, pa(0.8)).angle(), pa(0.8));
    }

    #[test]
    fn cell_and_source_rules() {
        let theta = 0.37;
        let w = BWaveState(pa(0.0));
        assert_eq!(backward_cell_action(w, Mode::Inactivated, theta), w);
        assert_abs_diff_eq!(
            backward_cell_action(w, Mode::Activated, theta)
                .angle()
                .radians(),
            theta,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            backward_cell_action(BWaveState(pa(FRAC_PI_2)), Mode::Activated, theta)
                .angle()
                .radians(),
            FRAC_PI_2 + theta,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            source_action(BWaveState(pa(0.0))).radians(),
            FRAC_PI_2,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            source_action(BWaveState(pa(theta))).radians(),
            FRAC_PI_2 + theta,
            epsilon = 1e-15
        );
        let twice = source_action(BWaveState(source_action(BWaveState(pa(theta)))));
        assert_abs_diff_eq!(twice.radians(), theta, epsilon = 1e-15);
    }

    #[test]
    fn forcing_examples() {
        let theta = 0.6;
        let cfg = fig3(theta, DetourPlacement::BeforePolarizer);
        let trial = build_timeline(&cfg, inactive_entry(&cfg)).unwrap();
        let trigger = trial.arm(Arm::One).detection();
        let partner = trial.arm(Arm::Two);

        let f =
            force_partner(partner, pa(FRAC_PI_2 + theta), trigger, PreferredFrame::LAB).unwrap();
        assert_abs_diff_eq!(f.p_transmitted(), theta.sin().powi(2), epsilon = 1e-12);
        assert!(!f.late);

        let f = force_partner(
            partner,
            partner.polarizer_angle,
            trigger,
            PreferredFrame::LAB,
        )
        .unwrap();
        assert_abs_diff_eq!(f.p_transmitted(), 1.0, epsilon = 1e-15);

        // Forcing after the partner is already detected is a model error.
        let late = partner.detection();
        let later = SpacetimeEvent::new(late.t + 1e-6, late.x);
        assert!(matches!(
            force_partner(partner, pa(0.0), later, PreferredFrame::LAB),
            Err(Error::ModelConsistency(_))
        ));
    }

    #[test]
    fn forced_partner_crosses_activated_cell() {
        // Partner arm: static activated cell ahead of a vertical polarizer.
        let theta = 0.45;
        let arm2 = ArmLayout::new(vec![
            Element::Detour {
                position: 0.5,
                height: 10.0,
            },
            Element::Cell {
                position: 1.0,
                schedule: SwitchSchedule::fixed(Mode::Activated, theta),
            },
            Element::Polarizer {
                position: 1.2,
                angle: PolarizationAngle::VERTICAL,
            },
            Element::Detector { position: 1.3 },
        ]);
        let arm1 = symmetric([0.0, 0.0]).arms[0].clone();
        let cfg = ExperimentConfig::new(Topology::Custom, [arm1, arm2]);
        let trial = build_timeline(&cfg, 0.0).unwrap();
        let trigger = trial.arm(Arm::One).detection();
        let forced = pa(0.2);
        let f = force_partner(trial.arm(Arm::Two), forced, trigger, PreferredFrame::LAB).unwrap();
        assert_abs_diff_eq!(
            f.p_transmitted(),
            qm::malus(forced.rotated(-theta), PolarizationAngle::VERTICAL),
            epsilon = 1e-15
        );
    }

    #[test]
    fn signature_values() {
        assert_eq!(signature_p21(0.0), 0.0);
        assert_abs_diff_eq!(signature_p21(FRAC_PI_2), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(signature_p21(FRAC_PI_6), 0.125, epsilon = 1e-15);
    }

    #[test]
    fn signature_scenario_composition() {
        for theta in [0.1, FRAC_PI_6, 1.0, FRAC_PI_2] {
            let w = emit_bwave(Channel::Transmitted, PolarizationAngle::VERTICAL);
            let w = backward_cell_action(w, Mode::Activated, theta);
            let forced = source_action(w);
            let p = qm::malus(forced, PolarizationAngle::VERTICAL);
            assert_abs_diff_eq!(p, theta.sin().powi(2), epsilon = 1e-12);
            assert_abs_diff_eq!(0.5 * p, signature_p21(theta), epsilon = 1e-12);

            // Same thing through an actual fig3 timeline.
            let cfg = fig3(theta, DetourPlacement::BeforePolarizer);
            let trial = build_timeline(&cfg, inactive_entry(&cfg)).unwrap();
            let cell = trial
                .arm(Arm::One)
                .cells_before_polarizer()
                .next()
                .unwrap()
                .1;
            assert_eq!(cell.mode, Mode::Inactivated);
            let dist = joint_distribution(
                &trial,
                Arm::One,
                TriggerPoint::Detector,
                PreferredFrame::LAB,
            )
            .unwrap();
            assert_abs_diff_eq!(dist[0], signature_p21(theta), epsilon = 1e-12);
        }
    }

    #[test]
    fn trigger_points_differ_with_detour_after_polarizer() {
        let cfg = fig3(0.5, DetourPlacement::AfterPolarizer);
        let trial = build_timeline(&cfg, inactive_entry(&cfg)).unwrap();
        let det = trigger_event(&trial, Arm::One, TriggerPoint::Detector);
        let pol = trigger_event(&trial, Arm::One, TriggerPoint::Polarizer);
        assert_eq!(det, trial.arm(Arm::One).detection());
        assert_eq!(pol, trial.arm(Arm::One).polarizer_event());
        let (p, cell) = trial.arm(Arm::One).cells_before_polarizer().next().unwrap();
        let pf = PreferredFrame::LAB;
        let seen_det = cell.schedule.mode(pf.simultaneous_time_at(det, p.event.x));
        let seen_pol = cell.schedule.mode(pf.simultaneous_time_at(pol, p.event.x));
        assert_ne!(seen_det, seen_pol);
        assert_eq!(seen_pol, cell.mode);

        // Polarizer trigger sees the passage mode and reproduces QM.
        let d = joint_distribution(&trial, Arm::One, TriggerPoint::Polarizer, pf).unwrap();
        assert_abs_diff_eq!(d[0], 0.0, epsilon = 1e-15);
        let d = joint_distribution(&trial, Arm::One, TriggerPoint::Detector, pf).unwrap();
        assert_abs_diff_eq!(d[0], signature_p21(0.5), epsilon = 1e-12);
    }

    fn static_config(a: f64, b: f64, cells: [(f64, Mode); 2], y2: f64) -> ExperimentConfig {
        let layout = StandardLayout {
            x: 1.0,
            x_bar: 1.3,
            y: [0.0, y2],
            placement: DetourPlacement::BeforePolarizer,
            polarizers: [pa(a), pa(b)],
            cells: cells.map(|(theta, mode)| Some(SwitchSchedule::fixed(mode, theta))),
        };
        ExperimentConfig::new(
            Topology::Fig3Asymmetric,
            layout.build(Topology::Fig3Asymmetric).unwrap(),
        )
    }

    fn mode(b: bool) -> Mode {
        if b {
            Mode::Activated
        } else {
            Mode::Inactivated
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(2000))]

        #[test]
        fn static_equivalence_with_qm(
            a in 0.0f64..PI, b in 0.0f64..PI,
            t1 in -PI..PI, t2 in -PI..PI,
            m1: bool, m2: bool,
            y2 in 0.0f64..5.0,
            beta in -0.9f64..0.9,
            polarizer_trigger: bool,
        ) {
            let cfg = static_config(a, b, [(t1, mode(m1)), (t2, mode(m2))], y2);
            let trial = build_timeline(&cfg, 0.0).unwrap();
            let pf = PreferredFrame(FrameBoost::from_beta(beta).unwrap());
            let tp = if polarizer_trigger { TriggerPoint::Polarizer } else { TriggerPoint::Detector };
            let (first, _) = first_detection(&trial, pf, Arm::One);
            let bw = joint_distribution(&trial, first, tp, pf).unwrap();
            let rot = |t: f64, m: bool| if m { vec![-t] } else { vec![] };
            let qa = qm::effective_angle(pa(a), &rot(t1, m1));
            let qb = qm::effective_angle(pa(b), &rot(t2, m2));
            let q = qm::joint_distribution(qa, qb);
            for i in 0..4 {
                prop_assert!((bw[i] - q[i]).abs() <= 1e-12, "{bw:?} vs {q:?}");
            }
        }

        #[test]
        fn relabeling_invariance(
            y2 in 0.0f64..5.0,
            beta in -0.9f64..0.9,
        ) {
            let cfg = static_config(0.0, 0.0, [(0.0, Mode::Inactivated); 2], y2);
            let mirrored = ExperimentConfig::new(
                Topology::Custom,
                [cfg.arms[1].clone(), cfg.arms[0].clone()],
            );
            let pf = PreferredFrame(FrameBoost::from_beta(beta).unwrap());
            let pf_mirror = PreferredFrame(FrameBoost::from_beta(-beta).unwrap());
            let t = build_timeline(&cfg, 0.0).unwrap();
            let tm = build_timeline(&mirrored, 0.0).unwrap();
            let (f, tie) = first_detection(&t, pf, Arm::One);
            let (fm, tie_m) = first_detection(&tm, pf_mirror, Arm::One);
            prop_assume!(!tie && !tie_m);
            prop_assert_eq!(f.other(), fm);
        }

        #[test]
        fn rules_keep_angles_canonical(w in -10.0f64..10.0, theta in -10.0f64..10.0, act: bool) {
            let out = backward_cell_action(BWaveState(pa(w)), mode(act), theta).angle().radians();
            prop_assert!((0.0..PI).contains(&out));
            let s = source_action(BWaveState(pa(w))).radians();
            prop_assert!((0.0..PI).contains(&s));
            let f = forward_cell_action(pa(w), mode(act), theta).radians();
            prop_assert!((0.0..PI).contains(&f));
        }
    }
}
