//! Optical layout and run settings of a two-arm experiment.

use crate::bwave::{PreferredFrame, TriggerPoint};
use crate::error::{Error, Result};
use crate::lorentz::SIMULTANEITY_TOL;
use crate::polarization::{Mode, PolarizationAngle};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Arm {
    One,
    Two,
}

impl Arm {
    pub const BOTH: [Arm; 2] = [Arm::One, Arm::Two];

    pub fn index(self) -> usize {
        match self {
            Arm::One => 0,
            Arm::Two => 1,
        }
    }

    /// Direction of the arm along the axis: `+1` for arm 1, `-1` for arm 2.
    pub fn sign(self) -> f64 {
        match self {
            Arm::One => 1.0,
            Arm::Two => -1.0,
        }
    }

    pub fn other(self) -> Arm {
        match self {
            Arm::One => Arm::Two,
            Arm::Two => Arm::One,
        }
    }

    pub fn number(self) -> u8 {
        self.index() as u8 + 1
    }
}

/// How a cell alternates between its two modes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModeTiming {
    /// Square wave: `Activated` on `[phase + 2kΔt, phase + (2k+1)Δt)`,
    /// `Inactivated` on the other half-period.
    Periodic { delta_t: f64, phase: f64 },
    /// Permanently in one mode (static experiments).
    Static(Mode),
}

/// Drive of a Pockels cell. An activated cell rotates the light's
/// polarization by `-theta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwitchSchedule {
    pub theta: f64,
    pub timing: ModeTiming,
}

impl SwitchSchedule {
    pub fn periodic(delta_t: f64, phase: f64, theta: f64) -> Self {
        SwitchSchedule {
            theta,
            timing: ModeTiming::Periodic { delta_t, phase },
        }
    }

    pub fn fixed(mode: Mode, theta: f64) -> Self {
        SwitchSchedule {
            theta,
            timing: ModeTiming::Static(mode),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.theta.is_finite() {
            return Err(Error::geometry("cell rotation angle must be finite"));
        }
        if let ModeTiming::Periodic { delta_t, phase } = self.timing {
            if !(delta_t.is_finite() && delta_t > 0.0) {
                return Err(Error::geometry("switch mode duration must be positive"));
            }
            if !phase.is_finite() {
                return Err(Error::geometry("switch phase must be finite"));
            }
        }
        Ok(())
    }

    pub fn delta_t(&self) -> Option<f64> {
        match self.timing {
            ModeTiming::Periodic { delta_t, .. } => Some(delta_t),
            ModeTiming::Static(_) => None,
        }
    }

    /// Position within the current period, in `[0, 2Δt)`, snapped onto a
    /// boundary when within [`SIMULTANEITY_TOL`] of it.
    fn period_offset(delta_t: f64, phase: f64, t: f64) -> f64 {
        let period = 2.0 * delta_t;
        let mut u = (t - phase).rem_euclid(period);
        if period - u <= SIMULTANEITY_TOL {
            u = 0.0;
        } else if (u - delta_t).abs() <= SIMULTANEITY_TOL {
            u = delta_t;
        }
        u
    }

    pub fn mode(&self, t: f64) -> Mode {
        match self.timing {
            ModeTiming::Static(m) => m,
            ModeTiming::Periodic { delta_t, phase } => {
                if Self::period_offset(delta_t, phase, t) < delta_t {
                    Mode::Activated
                } else {
                    Mode::Inactivated
                }
            }
        }
    }

    /// Time already spent in the current mode at `t`; `None` for static cells.
    pub fn elapsed_in_mode(&self, t: f64) -> Option<f64> {
        match self.timing {
            ModeTiming::Static(_) => None,
            ModeTiming::Periodic { delta_t, phase } => {
                let u = Self::period_offset(delta_t, phase, t);
                Some(if u < delta_t { u } else { u - delta_t })
            }
        }
    }

    /// First mode change strictly after `t`.
    pub fn next_change(&self, t: f64) -> Option<f64> {
        let delta_t = self.delta_t()?;
        let elapsed = self.elapsed_in_mode(t)?;
        Some(t + (delta_t - elapsed))
    }

    /// Earliest start of a `mode` interval at or after `t`.
    pub fn next_mode_start(&self, mode: Mode, t: f64) -> Option<f64> {
        let ModeTiming::Periodic { delta_t, phase } = self.timing else {
            return None;
        };
        let offset = match mode {
            Mode::Activated => 0.0,
            Mode::Inactivated => delta_t,
        };
        let period = 2.0 * delta_t;
        let first = phase + offset;
        let k = ((t - first) / period).ceil();
        let mut start = first + k * period;
        if start < t - SIMULTANEITY_TOL {
            start += period;
        }
        Some(start)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Element {
    /// Pockels cell at `position` meters from the source.
    Cell {
        position: f64,
        schedule: SwitchSchedule,
    },
    /// Folded path leaving the axis at `position` and returning after
    /// climbing `height`; adds `2·height/c` of transit.
    Detour { position: f64, height: f64 },
    /// Two-channel polarizer with its transmission axis at `angle`.
    Polarizer {
        position: f64,
        angle: PolarizationAngle,
    },
    /// Detector pair watching both polarizer ports.
    Detector { position: f64 },
}

impl Element {
    pub fn position(&self) -> f64 {
        match *self {
            Element::Cell { position, .. }
            | Element::Detour { position, .. }
            | Element::Polarizer { position, .. }
            | Element::Detector { position } => position,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Element::Cell { .. } => "cell",
            Element::Detour { .. } => "detour",
            Element::Polarizer { .. } => "polarizer",
            Element::Detector { .. } => "detector",
        }
    }
}

/// Elements of one arm, ordered outward from the source.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ArmLayout {
    pub elements: Vec<Element>,
}

impl ArmLayout {
    pub fn new(elements: Vec<Element>) -> Self {
        ArmLayout { elements }
    }

    pub fn validate(&self, arm: Arm) -> Result<()> {
        let n = arm.number();
        let mut last = 0.0;
        let mut polarizers = 0;
        for (i, el) in self.elements.iter().enumerate() {
            let p = el.position();
            if !(p.is_finite() && p > last) {
                return Err(Error::geometry(format!(
                    "arm {n}: {} #{i} at {p} m is not beyond the previous element at {last} m",
                    el.name()
                )));
            }
            last = p;
            match el {
                Element::Cell { schedule, .. } => schedule.validate()?,
                Element::Detour { height, .. } => {
                    if !(height.is_finite() && *height >= 0.0) {
                        return Err(Error::geometry(format!(
                            "arm {n}: detour height must be non-negative"
                        )));
                    }
                }
                Element::Polarizer { angle, .. } => {
                    if !angle.radians().is_finite() {
                        return Err(Error::geometry(format!("arm {n}: polarizer angle")));
                    }
                    polarizers += 1;
                }
                Element::Detector { .. } => {
                    if i + 1 != self.elements.len() {
                        return Err(Error::geometry(format!(
                            "arm {n}: the detector pair must be the last element"
                        )));
                    }
                }
            }
        }
        if !matches!(self.elements.last(), Some(Element::Detector { .. })) {
            return Err(Error::geometry(format!(
                "arm {n}: must terminate in a detector pair"
            )));
        }
        if polarizers != 1 {
            return Err(Error::geometry(format!(
                "arm {n}: expected exactly one polarizer, found {polarizers}"
            )));
        }
        Ok(())
    }

    pub fn polarizer_index(&self) -> Option<usize> {
        self.elements
            .iter()
            .position(|e| matches!(e, Element::Polarizer { .. }))
    }

    pub fn polarizer_angle(&self) -> Option<PolarizationAngle> {
        self.elements.iter().find_map(|e| match e {
            Element::Polarizer { angle, .. } => Some(*angle),
            _ => None,
        })
    }

    pub fn set_polarizer_angle(&mut self, new: PolarizationAngle) {
        for e in &mut self.elements {
            if let Element::Polarizer { angle, .. } = e {
                *angle = new;
            }
        }
    }

    /// Sets the rotation angle of every cell on the arm.
    pub fn set_cell_theta(&mut self, theta: f64) {
        for e in &mut self.elements {
            if let Element::Cell { schedule, .. } = e {
                schedule.theta = theta;
            }
        }
    }

    pub fn cells(&self) -> impl Iterator<Item = (f64, &SwitchSchedule)> {
        self.elements.iter().filter_map(|e| match e {
            Element::Cell { position, schedule } => Some((*position, schedule)),
            _ => None,
        })
    }

    /// Optical path from the source to element `index`, detours included.
    pub fn path_to(&self, index: usize) -> f64 {
        let mut path = 0.0;
        let mut prev = 0.0;
        for (i, el) in self.elements.iter().enumerate() {
            path += el.position() - prev;
            prev = el.position();
            if i == index {
                break;
            }
            if let Element::Detour { height, .. } = el {
                path += 2.0 * height;
            }
        }
        path
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Topology {
    /// Cell, polarizer and detectors on each arm, no detours.
    Fig1Symmetric,
    /// A detour between each cell and its detectors.
    Fig2SymmetricDetours,
    /// Arm-2 path lengthened before its optics so arm 1 is always detected
    /// first.
    Fig3Asymmetric,
    Custom,
}

impl Topology {
    pub fn keyword(self) -> &'static str {
        match self {
            Topology::Fig1Symmetric => "fig1",
            Topology::Fig2SymmetricDetours => "fig2",
            Topology::Fig3Asymmetric => "fig3",
            Topology::Custom => "custom",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Model {
    Qm,
    BWave,
}

impl Model {
    pub fn keyword(self) -> &'static str {
        match self {
            Model::Qm => "qm",
            Model::BWave => "bwave",
        }
    }
}

/// Which mode start a synchronized source aims its photons at.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SyncMode {
    /// Either mode, chosen by a fair coin per pair.
    Any,
    Inactivated,
    Activated,
}

/// When pairs are emitted relative to the reference cell's square wave.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmissionLaw {
    /// Uniform over one full switching period.
    Uniform,
    /// Timed so the photon reaches the reference cell exactly as a mode
    /// begins.
    Synchronized(SyncMode),
}

/// Where the detour of a generated `fig2`/`fig3` arm sits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DetourPlacement {
    BeforePolarizer,
    AfterPolarizer,
}

/// Inputs for the generated `fig1`/`fig2`/`fig3` layouts.
#[derive(Debug, Clone, PartialEq)]
pub struct StandardLayout {
    /// Source-to-cell distance, m.
    pub x: f64,
    /// Source-to-detector straight-line distance, m.
    pub x_bar: f64,
    /// Detour heights per arm, m.
    pub y: [f64; 2],
    pub placement: DetourPlacement,
    pub polarizers: [PolarizationAngle; 2],
    /// `None` leaves the arm without a cell.
    pub cells: [Option<SwitchSchedule>; 2],
}

impl StandardLayout {
    pub fn build(&self, topology: Topology) -> Result<[ArmLayout; 2]> {
        if !(self.x > 0.0 && self.x_bar > self.x) {
            return Err(Error::geometry("need 0 < x < x_bar"));
        }
        let span = self.x_bar - self.x;
        let arm = |i: usize, head_detour: Option<f64>, detour: Option<f64>| {
            let mut els = Vec::new();
            if let Some(h) = head_detour {
                els.push(Element::Detour {
                    position: self.x / 2.0,
                    height: h,
                });
            }
            if let Some(schedule) = self.cells[i] {
                els.push(Element::Cell {
                    position: self.x,
                    schedule,
                });
            }
            let polarizer = |position| Element::Polarizer {
                position,
                angle: self.polarizers[i],
            };
            match detour {
                None => els.push(polarizer(self.x + span / 2.0)),
                Some(height) => {
                    let near = self.x + span / 3.0;
                    let far = self.x + 2.0 * span / 3.0;
                    match self.placement {
                        DetourPlacement::BeforePolarizer => {
                            els.push(Element::Detour {
                                position: near,
                                height,
                            });
                            els.push(polarizer(far));
                        }
                        DetourPlacement::AfterPolarizer => {
                            els.push(polarizer(near));
                            els.push(Element::Detour {
                                position: far,
                                height,
                            });
                        }
                    }
                }
            }
            els.push(Element::Detector {
                position: self.x_bar,
            });
            ArmLayout::new(els)
        };
        Ok(match topology {
            Topology::Fig1Symmetric => [arm(0, None, None), arm(1, None, None)],
            Topology::Fig2SymmetricDetours => {
                [arm(0, None, Some(self.y[0])), arm(1, None, Some(self.y[1]))]
            }
            Topology::Fig3Asymmetric => {
                [arm(0, None, Some(self.y[0])), arm(1, Some(self.y[1]), None)]
            }
            Topology::Custom => {
                return Err(Error::geometry(
                    "custom topologies need explicit element lists",
                ))
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub topology: Topology,
    pub arms: [ArmLayout; 2],
    pub model: Model,
    pub trigger: TriggerPoint,
    pub preferred_frame: PreferredFrame,
    /// Arm reported first when both detections are simultaneous in the
    /// preferred frame.
    pub tie_break: Arm,
    /// Logic-circuit discard fraction `q`; 0 keeps every pair.
    pub discard_fraction: f64,
    pub emission: EmissionLaw,
}

impl ExperimentConfig {
    /// Lab-frame, detector-triggered, QM, uniform emission, no discard.
    pub fn new(topology: Topology, arms: [ArmLayout; 2]) -> Self {
        ExperimentConfig {
            topology,
            arms,
            model: Model::Qm,
            trigger: TriggerPoint::Detector,
            preferred_frame: PreferredFrame::LAB,
            tie_break: Arm::One,
            discard_fraction: 0.0,
            emission: EmissionLaw::Uniform,
        }
    }

    pub fn arm(&self, arm: Arm) -> &ArmLayout {
        &self.arms[arm.index()]
    }

    pub fn validate(&self) -> Result<()> {
        for arm in Arm::BOTH {
            self.arm(arm).validate(arm)?;
        }
        if !(0.0..=1.0).contains(&self.discard_fraction) {
            return Err(Error::geometry("discard fraction must lie in [0, 1]"));
        }
        if let EmissionLaw::Synchronized(_) = self.emission {
            if self.reference_cell().is_none() {
                return Err(Error::geometry(
                    "synchronized emission needs a periodically switched cell",
                ));
            }
        }
        Ok(())
    }

    /// The periodic cell emission is timed against: the first one on arm
    /// 1, else on arm 2. Returns the arm, the optical path to the cell and
    /// its schedule.
    pub fn reference_cell(&self) -> Option<(Arm, f64, SwitchSchedule)> {
        Arm::BOTH.into_iter().find_map(|arm| {
            let layout = self.arm(arm);
            layout
                .elements
                .iter()
                .enumerate()
                .find_map(|(i, e)| match e {
                    Element::Cell { schedule, .. } if schedule.delta_t().is_some() => {
                        Some((arm, layout.path_to(i), *schedule))
                    }
                    _ => None,
                })
        })
    }

    pub fn set_polarizers(&mut self, a: PolarizationAngle, b: PolarizationAngle) {
        self.arms[0].set_polarizer_angle(a);
        self.arms[1].set_polarizer_angle(b);
    }
}
