//! Light-speed event timelines for one photon pair.

use crate::error::Result;
use crate::experiment::{Arm, Element, ExperimentConfig, SwitchSchedule};
use crate::lorentz::{SpacetimeEvent, C};
use crate::polarization::{Channel, JointOutcome, Mode, PolarizationAngle};

/// State of a cell as the photon crosses it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellPassage {
    pub schedule: SwitchSchedule,
    pub mode: Mode,
    /// Time already spent in `mode`; `None` for static cells.
    pub elapsed: Option<f64>,
    /// Mode of this cell at the lab time the arm's photon is detected.
    pub mode_at_detection: Mode,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Passage {
    /// Index into the arm's element list.
    pub element: usize,
    pub event: SpacetimeEvent,
    pub cell: Option<CellPassage>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArmTimeline {
    /// One passage per element, detector included, in order of travel.
    pub passages: Vec<Passage>,
    /// Index of the polarizer passage in `passages`.
    pub polarizer: usize,
    pub polarizer_angle: PolarizationAngle,
}

impl ArmTimeline {
    pub fn detection(&self) -> SpacetimeEvent {
        self.passages
            .last()
            .expect("validated arm has a detector")
            .event
    }

    pub fn polarizer_event(&self) -> SpacetimeEvent {
        self.passages[self.polarizer].event
    }

    /// Cell passages ahead of the polarizer, in order of travel.
    pub fn cells_before_polarizer(
        &self,
    ) -> impl DoubleEndedIterator<Item = (&Passage, &CellPassage)> {
        self.passages[..self.polarizer]
            .iter()
            .filter_map(|p| p.cell.as_ref().map(|c| (p, c)))
    }
}

/// Everything that happens to one pair.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub emission: SpacetimeEvent,
    pub arms: [ArmTimeline; 2],
    pub discarded: bool,
    pub outcome: Option<JointOutcome>,
    /// Arm detected first in the preferred frame (B-wave runs).
    pub first: Option<Arm>,
    pub tie_break_used: bool,
    pub trigger: Option<SpacetimeEvent>,
    /// Polarization the partner was forced into (B-wave runs).
    pub forced: Option<PolarizationAngle>,
    /// The partner had already crossed its polarizer when forced.
    pub late_forcing: bool,
}

impl TrialRecord {
    pub fn arm(&self, arm: Arm) -> &ArmTimeline {
        &self.arms[arm.index()]
    }

    pub fn channel(&self, arm: Arm) -> Option<Channel> {
        self.outcome.map(|o| match arm {
            Arm::One => o.arm1,
            Arm::Two => o.arm2,
        })
    }
}

/// Lays out all passage and detection events for a pair emitted at
/// `emission_offset` seconds.
pub fn build_timeline(cfg: &ExperimentConfig, emission_offset: f64) -> Result<TrialRecord> {
    cfg.validate()?;
    Ok(build_unchecked(cfg, emission_offset))
}

pub(crate) fn build_unchecked(cfg: &ExperimentConfig, emission_offset: f64) -> TrialRecord {
    let arms = Arm::BOTH.map(|arm| arm_timeline(cfg, arm, emission_offset));
    TrialRecord {
        emission: SpacetimeEvent::new(emission_offset, 0.0),
        arms,
        discarded: false,
        outcome: None,
        first: None,
        tie_break_used: false,
        trigger: None,
        forced: None,
        late_forcing: false,
    }
}

fn arm_timeline(cfg: &ExperimentConfig, arm: Arm, t0: f64) -> ArmTimeline {
    let layout = cfg.arm(arm);
    let sign = arm.sign();
    let mut passages = Vec::with_capacity(layout.elements.len());
    let mut path = 0.0;
    let mut prev = 0.0;
    let mut polarizer = 0;
    let mut polarizer_angle = PolarizationAngle::VERTICAL;
    for (i, el) in layout.elements.iter().enumerate() {
        path += el.position() - prev;
        prev = el.position();
        let event = SpacetimeEvent::new(t0 + path / C, sign * el.position());
        let cell = match el {
            Element::Cell { schedule, .. } => Some(CellPassage {
                schedule: *schedule,
                mode: schedule.mode(event.t),
                elapsed: schedule.elapsed_in_mode(event.t),
                // filled in once the detection time is known
                mode_at_detection: schedule.mode(event.t),
            }),
            Element::Detour { height, .. } => {
                path += 2.0 * height;
                None
            }
            Element::Polarizer { angle, .. } => {
                polarizer = passages.len();
                polarizer_angle = *angle;
                None
            }
            Element::Detector { .. } => None,
        };
        passages.push(Passage {
            element: i,
            event,
            cell,
        });
    }
    let detection_t = passages.last().map(|p| p.event.t).unwrap_or(t0);
    for p in &mut passages {
        if let Some(c) = &mut p.cell {
            c.mode_at_detection = c.schedule.mode(detection_t);
        }
    }
    ArmTimeline {
        passages,
        polarizer,
        polarizer_angle,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterVerdict {
    Keep,
    Discard,
}

/// Logic-circuit rule: drop the pair when any photon met its periodic cell
/// after more than `(1 − q)·Δt` of the current mode had elapsed.
pub fn logic_filter(trial: &TrialRecord, q: f64) -> FilterVerdict {
    let late = trial.arms.iter().flat_map(|a| a.passages.iter()).any(|p| {
        match (p.cell, p.cell.and_then(|c| c.schedule.delta_t())) {
            (
                Some(CellPassage {
                    elapsed: Some(e), ..
                }),
                Some(dt),
            ) => e > (1.0 - q) * dt,
            _ => false,
        }
    });
    if late {
        FilterVerdict::Discard
    } else {
        FilterVerdict::Keep
    }
}
