//! Sectioned plain-text experiment configs.
//!
//! ```text
//! # comment
//! [section]
//! key = value        # trailing comments are allowed
//! ```
//!
//! Sections and keys (unknown ones are rejected):
//!
//! | section        | keys |
//! |----------------|------|
//! | `[geometry]`   | `x`, `x_bar`, `y1`, `y2` (lengths), `detour_placement` = `before_polarizer` \| `after_polarizer` |
//! | `[switch]`     | `delta_t` (time), `phase1`, `phase2` (times), `theta1`, `theta2` (angles), `drive1`, `drive2` = `periodic` \| `activated` \| `inactivated` \| `none` |
//! | `[polarizers]` | `arm1`, `arm2` (angles) |
//! | `[model]`      | `kind` = `qm` \| `bwave`, `trigger_point` = `detector` \| `polarizer`, `preferred_frame_velocity` (velocity), `tie_break` = `arm1` \| `arm2` |
//! | `[run]`        | `trials`, `seed` (integers), `discard_fraction`, `emission` = `uniform` \| `synchronized`, `sync_mode` = `any` \| `inactivated` \| `activated` |
//! | `[topology]`   | `kind` = `fig1` \| `fig2` \| `fig3` \| `custom`, `arm1`, `arm2` (element lists) |
//!
//! Lengths take `m`, `cm` or `mm`; times `s`, `ms`, `us`, `ns` or `ps`;
//! velocities `m/s` or `c` (fraction of light speed). Units are mandatory
//! on all of these. Angles are radians, optionally written as multiples of
//! `pi` (`pi/6`, `5*pi/12`) or suffixed with `rad` or `deg`.
//!
//! An element list is a `;`-separated sequence of
//! `cell(x = .., theta = .., delta_t = .., phase = ..)`,
//! `cell(x = .., theta = .., static = activated|inactivated)`,
//! `detour(x = .., y = ..)`, `polarizer(x = .., angle = ..)` and
//! `detector(x = ..)`, ordered outward from the source. When both arm
//! lists are given they define the layout; otherwise `fig1`..`fig3` are
//! generated from `[geometry]`, `[switch]` and `[polarizers]`.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;

use crate::bwave::{PreferredFrame, TriggerPoint};
use crate::error::{Error, Result};
use crate::experiment::{
    Arm, ArmLayout, DetourPlacement, Element, EmissionLaw, ExperimentConfig, ModeTiming, Model,
    StandardLayout, SwitchSchedule, SyncMode, Topology,
};
use crate::lorentz::{LabGeometry, C};
use crate::planner::TimingParameters;
use crate::polarization::{Mode, PolarizationAngle};

const SECTIONS: &[(&str, &[&str])] = &[
    ("geometry", &["x", "x_bar", "y1", "y2", "detour_placement"]),
    (
        "switch",
        &[
            "delta_t", "phase1", "phase2", "theta1", "theta2", "drive1", "drive2",
        ],
    ),
    ("polarizers", &["arm1", "arm2"]),
    (
        "model",
        &[
            "kind",
            "trigger_point",
            "preferred_frame_velocity",
            "tie_break",
        ],
    ),
    (
        "run",
        &[
            "trials",
            "seed",
            "discard_fraction",
            "emission",
            "sync_mode",
        ],
    ),
    ("topology", &["kind", "arm1", "arm2"]),
];

#[derive(Debug, Clone, PartialEq)]
struct Entry {
    line: usize,
    value: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
struct Section {
    line: usize,
    entries: BTreeMap<String, Entry>,
}

/// A parsed config document.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConfigDocument {
    sections: BTreeMap<String, Section>,
}

/// Trial count and seed from `[run]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunSettings {
    pub trials: u64,
    pub seed: u64,
}

impl Default for RunSettings {
    fn default() -> Self {
        RunSettings {
            trials: 100_000,
            seed: 0,
        }
    }
}

#[derive(Clone, Copy)]
enum Dim {
    Length,
    Time,
    Velocity,
}

fn parse_number(s: &str, line: usize) -> Result<f64> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| Error::config(line, format!("`{s}` is not a number")))?;
    if !v.is_finite() {
        return Err(Error::config(line, format!("`{s}` is not finite")));
    }
    Ok(v)
}

fn parse_quantity(s: &str, dim: Dim, line: usize) -> Result<f64> {
    let mut parts = s.split_whitespace();
    let (Some(num), Some(unit), None) = (parts.next(), parts.next(), parts.next()) else {
        return Err(Error::config(
            line,
            format!("`{s}` needs a value and a unit, e.g. `20 ns` or `1.5 m`"),
        ));
    };
    let v = parse_number(num, line)?;
    let out = match (dim, unit) {
        (Dim::Length, "m") => v,
        (Dim::Length, "cm") => v / 100.0,
        (Dim::Length, "mm") => v / 1000.0,
        (Dim::Time, "s") => v,
        (Dim::Time, "ms") => v / 1e3,
        (Dim::Time, "us") => v / 1e6,
        (Dim::Time, "ns") => v / 1e9,
        (Dim::Time, "ps") => v / 1e12,
        (Dim::Velocity, "m/s") => v,
        (Dim::Velocity, "c") => v * C,
        _ => {
            let kind = match dim {
                Dim::Length => "length",
                Dim::Time => "time",
                Dim::Velocity => "velocity",
            };
            return Err(Error::config(line, format!("unknown {kind} unit `{unit}`")));
        }
    };
    Ok(out)
}

/// A time such as `20 ns`, in seconds; used for command-line values.
pub fn parse_time(s: &str) -> Result<f64> {
    parse_quantity(s, Dim::Time, 0)
}

/// An angle such as `pi/8` or `22.5 deg`, in radians.
pub fn parse_angle_value(s: &str) -> Result<f64> {
    parse_angle(s, 0)
}

/// Radians from `0.3`, `0.3 rad`, `30 deg`, `pi`, `-pi/4`, `5*pi/12`.
fn parse_angle(s: &str, line: usize) -> Result<f64> {
    let s = s.trim();
    if let Some(deg) = s.strip_suffix("deg") {
        return Ok(parse_number(deg, line)?.to_radians());
    }
    let s = s.strip_suffix("rad").unwrap_or(s).trim();
    if !s.contains("pi") {
        return parse_number(s, line);
    }
    let bad = || Error::config(line, format!("cannot read angle `{s}`"));
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), parse_number(d, line)?),
        None => (s, 1.0),
    };
    let (sign, num) = match num.strip_prefix('-') {
        Some(rest) => (-1.0, rest.trim()),
        None => (1.0, num),
    };
    let factor = match num.split_once('*') {
        Some((k, p)) if p.trim() == "pi" => parse_number(k, line)?,
        None if num == "pi" => 1.0,
        _ => return Err(bad()),
    };
    if den == 0.0 {
        return Err(bad());
    }
    Ok(sign * factor * PI / den)
}

fn parse_u64(s: &str, line: usize) -> Result<u64> {
    s.trim()
        .replace('_', "")
        .parse()
        .map_err(|_| Error::config(line, format!("`{s}` is not a non-negative integer")))
}

fn parse_choice<T: Copy>(s: &str, line: usize, options: &[(&str, T)]) -> Result<T> {
    options
        .iter()
        .find(|(k, _)| *k == s.trim())
        .map(|(_, v)| *v)
        .ok_or_else(|| {
            let names: Vec<_> = options.iter().map(|(k, _)| *k).collect();
            Error::config(line, format!("`{s}` is not one of {}", names.join(", ")))
        })
}

fn parse_element(s: &str, line: usize) -> Result<Element> {
    let s = s.trim();
    let (name, rest) = s.split_once('(').ok_or_else(|| {
        Error::config(
            line,
            format!("element `{s}` should look like name(key = value, ...)"),
        )
    })?;
    let body = rest
        .strip_suffix(')')
        .ok_or_else(|| Error::config(line, format!("element `{s}` is missing `)`")))?;
    let mut args = BTreeMap::new();
    for part in body.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| Error::config(line, format!("`{part}` should be key = value")))?;
        if args
            .insert(k.trim().to_string(), v.trim().to_string())
            .is_some()
        {
            return Err(Error::config(
                line,
                format!("duplicate argument `{}`", k.trim()),
            ));
        }
    }
    let name = name.trim();
    let allowed: &[&str] = match name {
        "cell" => &["x", "theta", "delta_t", "phase", "static"],
        "detour" => &["x", "y"],
        "polarizer" => &["x", "angle"],
        "detector" => &["x"],
        _ => return Err(Error::config(line, format!("unknown element `{name}`"))),
    };
    if let Some(k) = args.keys().find(|k| !allowed.contains(&k.as_str())) {
        return Err(Error::config(
            line,
            format!("`{name}` has no argument `{k}`"),
        ));
    }
    let get = |k: &str| {
        args.get(k)
            .map(String::as_str)
            .ok_or_else(|| Error::config(line, format!("`{name}` needs `{k}`")))
    };
    let position = parse_quantity(get("x")?, Dim::Length, line)?;
    Ok(match name {
        "cell" => {
            let theta = parse_angle(get("theta")?, line)?;
            let timing = match args.get("static") {
                Some(m) => {
                    if args.contains_key("delta_t") || args.contains_key("phase") {
                        return Err(Error::config(
                            line,
                            "a static cell takes no delta_t or phase",
                        ));
                    }
                    ModeTiming::Static(parse_choice(
                        m,
                        line,
                        &[
                            ("activated", Mode::Activated),
                            ("inactivated", Mode::Inactivated),
                        ],
                    )?)
                }
                None => ModeTiming::Periodic {
                    delta_t: parse_quantity(get("delta_t")?, Dim::Time, line)?,
                    phase: match args.get("phase") {
                        Some(p) => parse_quantity(p, Dim::Time, line)?,
                        None => 0.0,
                    },
                },
            };
            Element::Cell {
                position,
                schedule: SwitchSchedule { theta, timing },
            }
        }
        "detour" => Element::Detour {
            position,
            height: parse_quantity(get("y")?, Dim::Length, line)?,
        },
        "polarizer" => Element::Polarizer {
            position,
            angle: PolarizationAngle::new(parse_angle(get("angle")?, line)?),
        },
        _ => Element::Detector { position },
    })
}

fn parse_arm(s: &str, line: usize) -> Result<ArmLayout> {
    let elements = s
        .split(';')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| parse_element(p, line))
        .collect::<Result<Vec<_>>>()?;
    Ok(ArmLayout::new(elements))
}

impl ConfigDocument {
    pub fn parse(text: &str) -> Result<Self> {
        let mut doc = ConfigDocument::default();
        let mut current: Option<String> = None;
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            if let Some(name) = content.strip_prefix('[') {
                let name = name
                    .strip_suffix(']')
                    .ok_or_else(|| Error::config(line, "section header is missing `]`"))?
                    .trim();
                if !SECTIONS.iter().any(|(s, _)| *s == name) {
                    return Err(Error::config(line, format!("unknown section [{name}]")));
                }
                if doc.sections.contains_key(name) {
                    return Err(Error::config(
                        line,
                        format!("section [{name}] appears twice"),
                    ));
                }
                doc.sections.insert(
                    name.to_string(),
                    Section {
                        line,
                        entries: BTreeMap::new(),
                    },
                );
                current = Some(name.to_string());
                continue;
            }
            let Some(section) = current.as_ref() else {
                return Err(Error::config(line, "key outside of any [section]"));
            };
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| Error::config(line, "expected `key = value`"))?;
            let key = key.trim();
            let keys = SECTIONS.iter().find(|(s, _)| s == section).unwrap().1;
            if !keys.contains(&key) {
                return Err(Error::config(
                    line,
                    format!("unknown key `{key}` in [{section}]"),
                ));
            }
            let sec = doc.sections.get_mut(section).unwrap();
            let entry = Entry {
                line,
                value: value.trim().to_string(),
            };
            if sec.entries.insert(key.to_string(), entry).is_some() {
                return Err(Error::config(line, format!("duplicate key `{key}`")));
            }
        }
        // Surface value errors at load time, with their line numbers.
        doc.run_settings()?;
        doc.discard_fraction()?;
        if doc.has_section("topology") {
            doc.experiment()?;
        }
        Ok(doc)
    }

    fn entry(&self, section: &str, key: &str) -> Option<&Entry> {
        self.sections.get(section)?.entries.get(key)
    }

    fn section_line(&self, section: &str) -> usize {
        self.sections.get(section).map_or(0, |s| s.line)
    }

    fn require(&self, section: &str, key: &str) -> Result<&Entry> {
        self.entry(section, key).ok_or_else(|| {
            Error::config(
                self.section_line(section),
                format!("missing `{key}` in [{section}]"),
            )
        })
    }

    fn quantity(&self, section: &str, key: &str, dim: Dim) -> Result<Option<f64>> {
        self.entry(section, key)
            .map(|e| parse_quantity(&e.value, dim, e.line))
            .transpose()
    }

    fn required_quantity(&self, section: &str, key: &str, dim: Dim) -> Result<f64> {
        let e = self.require(section, key)?;
        parse_quantity(&e.value, dim, e.line)
    }

    fn angle(&self, section: &str, key: &str) -> Result<f64> {
        self.entry(section, key)
            .map_or(Ok(0.0), |e| parse_angle(&e.value, e.line))
    }

    fn choice<T: Copy>(
        &self,
        section: &str,
        key: &str,
        default: T,
        options: &[(&str, T)],
    ) -> Result<T> {
        self.entry(section, key)
            .map_or(Ok(default), |e| parse_choice(&e.value, e.line, options))
    }

    pub fn has_section(&self, section: &str) -> bool {
        self.sections.contains_key(section)
    }

    pub fn run_settings(&self) -> Result<RunSettings> {
        let d = RunSettings::default();
        let trials = self
            .entry("run", "trials")
            .map_or(Ok(d.trials), |e| parse_u64(&e.value, e.line))?;
        let seed = self
            .entry("run", "seed")
            .map_or(Ok(d.seed), |e| parse_u64(&e.value, e.line))?;
        if trials == 0 {
            let line = self.entry("run", "trials").map_or(0, |e| e.line);
            return Err(Error::config(line, "trials must be at least 1"));
        }
        Ok(RunSettings { trials, seed })
    }

    /// `q` as written, if any.
    pub fn discard_fraction(&self) -> Result<Option<f64>> {
        let Some(e) = self.entry("run", "discard_fraction") else {
            return Ok(None);
        };
        let q = parse_number(&e.value, e.line)?;
        if !(0.0..=1.0).contains(&q) {
            return Err(Error::config(e.line, "discard_fraction must lie in [0, 1]"));
        }
        Ok(Some(q))
    }

    pub fn lab_geometry(&self) -> Result<LabGeometry> {
        let x = self.required_quantity("geometry", "x", Dim::Length)?;
        let x_bar = self.required_quantity("geometry", "x_bar", Dim::Length)?;
        LabGeometry::new(x, x_bar)
            .map_err(|e| Error::config(self.section_line("geometry"), e.to_string()))
    }

    /// Planner inputs: arm-1 detour, `delta_t` and `q` (1 when omitted,
    /// i.e. the synchronized scheme).
    pub fn timing_parameters(&self) -> Result<TimingParameters> {
        let g = self.lab_geometry()?;
        let delta_t = self.required_quantity("switch", "delta_t", Dim::Time)?;
        let y = self.quantity("geometry", "y1", Dim::Length)?.unwrap_or(0.0);
        let q = self.discard_fraction()?.unwrap_or(1.0);
        TimingParameters::new(delta_t, g.t_f(), y, q)
            .map_err(|e| Error::config(self.section_line("switch"), e.to_string()))
    }

    fn standard_layout(&self) -> Result<StandardLayout> {
        let g = self.lab_geometry()?;
        let y1 = self.quantity("geometry", "y1", Dim::Length)?.unwrap_or(0.0);
        let y2 = self.quantity("geometry", "y2", Dim::Length)?.unwrap_or(0.0);
        let placement = self.choice(
            "geometry",
            "detour_placement",
            DetourPlacement::BeforePolarizer,
            &[
                ("before_polarizer", DetourPlacement::BeforePolarizer),
                ("after_polarizer", DetourPlacement::AfterPolarizer),
            ],
        )?;
        let polarizers = [
            PolarizationAngle::new(self.angle("polarizers", "arm1")?),
            PolarizationAngle::new(self.angle("polarizers", "arm2")?),
        ];
        #[derive(Clone, Copy)]
        enum Drive {
            Periodic,
            Static(Mode),
            Off,
        }
        let mut cells = [None, None];
        for (i, cell) in cells.iter_mut().enumerate() {
            let n = i + 1;
            let drive = self.choice(
                "switch",
                &format!("drive{n}"),
                Drive::Periodic,
                &[
                    ("periodic", Drive::Periodic),
                    ("activated", Drive::Static(Mode::Activated)),
                    ("inactivated", Drive::Static(Mode::Inactivated)),
                    ("none", Drive::Off),
                ],
            )?;
            let theta = self.angle("switch", &format!("theta{n}"))?;
            *cell = match drive {
                Drive::Off => None,
                Drive::Static(m) => Some(SwitchSchedule::fixed(m, theta)),
                Drive::Periodic => {
                    let delta_t = self.required_quantity("switch", "delta_t", Dim::Time)?;
                    let phase = self
                        .quantity("switch", &format!("phase{n}"), Dim::Time)?
                        .unwrap_or(0.0);
                    Some(SwitchSchedule::periodic(delta_t, phase, theta))
                }
            };
        }
        Ok(StandardLayout {
            x: g.x(),
            x_bar: g.x_bar(),
            y: [y1, y2],
            placement,
            polarizers,
            cells,
        })
    }

    pub fn experiment(&self) -> Result<ExperimentConfig> {
        let topo_line = self.section_line("topology");
        let topology = self.choice(
            "topology",
            "kind",
            Topology::Custom,
            &[
                ("fig1", Topology::Fig1Symmetric),
                ("fig2", Topology::Fig2SymmetricDetours),
                ("fig3", Topology::Fig3Asymmetric),
                ("custom", Topology::Custom),
            ],
        )?;
        if self.entry("topology", "kind").is_none() {
            return Err(Error::config(topo_line, "missing `kind` in [topology]"));
        }
        let lists = (
            self.entry("topology", "arm1"),
            self.entry("topology", "arm2"),
        );
        let arms =
            match lists {
                (Some(a1), Some(a2)) => [
                    parse_arm(&a1.value, a1.line)?,
                    parse_arm(&a2.value, a2.line)?,
                ],
                (None, None) if topology != Topology::Custom => self
                    .standard_layout()?
                    .build(topology)
                    .map_err(|e| Error::config(topo_line, e.to_string()))?,
                _ => return Err(Error::config(
                    topo_line,
                    "give element lists for both arm1 and arm2 (required for custom topologies)",
                )),
            };

        let mut cfg = ExperimentConfig::new(topology, arms);
        cfg.model = self.choice(
            "model",
            "kind",
            Model::Qm,
            &[("qm", Model::Qm), ("bwave", Model::BWave)],
        )?;
        cfg.trigger = self.choice(
            "model",
            "trigger_point",
            TriggerPoint::Detector,
            &[
                ("detector", TriggerPoint::Detector),
                ("polarizer", TriggerPoint::Polarizer),
            ],
        )?;
        if let Some(e) = self.entry("model", "preferred_frame_velocity") {
            let v = parse_quantity(&e.value, Dim::Velocity, e.line)?;
            cfg.preferred_frame =
                PreferredFrame::new(v).map_err(|err| Error::config(e.line, err.to_string()))?;
        }
        cfg.tie_break = self.choice(
            "model",
            "tie_break",
            Arm::One,
            &[("arm1", Arm::One), ("arm2", Arm::Two)],
        )?;
        cfg.discard_fraction = self.discard_fraction()?.unwrap_or(0.0);
        let emission = self.choice(
            "run",
            "emission",
            false,
            &[("uniform", false), ("synchronized", true)],
        )?;
        let sync = self.choice(
            "run",
            "sync_mode",
            SyncMode::Any,
            &[
                ("any", SyncMode::Any),
                ("inactivated", SyncMode::Inactivated),
                ("activated", SyncMode::Activated),
            ],
        )?;
        cfg.emission = if emission {
            EmissionLaw::Synchronized(sync)
        } else {
            EmissionLaw::Uniform
        };
        cfg.validate()
            .map_err(|e| Error::config(topo_line, e.to_string()))?;
        Ok(cfg)
    }
}

fn dump_element(e: &Element) -> String {
    match e {
        Element::Cell { position, schedule } => match schedule.timing {
            ModeTiming::Periodic { delta_t, phase } => format!(
                "cell(x = {position} m, theta = {}, delta_t = {delta_t} s, phase = {phase} s)",
                schedule.theta
            ),
            ModeTiming::Static(m) => format!(
                "cell(x = {position} m, theta = {}, static = {})",
                schedule.theta,
                match m {
                    Mode::Activated => "activated",
                    Mode::Inactivated => "inactivated",
                }
            ),
        },
        Element::Detour { position, height } => format!("detour(x = {position} m, y = {height} m)"),
        Element::Polarizer { position, angle } => {
            format!("polarizer(x = {position} m, angle = {})", angle.radians())
        }
        Element::Detector { position } => format!("detector(x = {position} m)"),
    }
}

/// Canonical text of an experiment; parses back to an identical config.
pub fn dump_experiment(cfg: &ExperimentConfig) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "[topology]");
    let _ = writeln!(out, "kind = {}", cfg.topology.keyword());
    for arm in Arm::BOTH {
        let list: Vec<String> = cfg.arm(arm).elements.iter().map(dump_element).collect();
        let _ = writeln!(out, "arm{} = {}", arm.number(), list.join("; "));
    }
    let _ = writeln!(out, "\n[model]");
    let _ = writeln!(out, "kind = {}", cfg.model.keyword());
    let _ = writeln!(out, "trigger_point = {}", cfg.trigger.keyword());
    let _ = writeln!(
        out,
        "preferred_frame_velocity = {} m/s",
        cfg.preferred_frame.boost().velocity()
    );
    let _ = writeln!(out, "tie_break = arm{}", cfg.tie_break.number());
    let _ = writeln!(out, "\n[run]");
    let _ = writeln!(out, "discard_fraction = {}", cfg.discard_fraction);
    match cfg.emission {
        EmissionLaw::Uniform => {
            let _ = writeln!(out, "emission = uniform");
        }
        EmissionLaw::Synchronized(s) => {
            let _ = writeln!(out, "emission = synchronized");
            let _ = writeln!(
                out,
                "sync_mode = {}",
                match s {
                    SyncMode::Any => "any",
                    SyncMode::Inactivated => "inactivated",
                    SyncMode::Activated => "activated",
                }
            );
        }
    }
    out
}

/// [`dump_experiment`] plus the trial count and seed.
pub fn dump_document(cfg: &ExperimentConfig, run: &RunSettings) -> String {
    let mut out = dump_experiment(cfg);
    let _ = writeln!(out, "trials = {}", run.trials);
    let _ = writeln!(out, "seed = {}", run.seed);
    out
}
