#![allow(dead_code)]

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use bwave_core::bwave::{PreferredFrame, TriggerPoint};
use bwave_core::config::ConfigDocument;
use bwave_core::experiment::{Arm, DetourPlacement, StandardLayout};
use bwave_core::{ExperimentConfig, Mode, Model, PolarizationAngle, SwitchSchedule, Topology, C};
use rand::Rng;

pub const NS: f64 = 1e-9;

pub fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

pub fn bundled(name: &str) -> ConfigDocument {
    let text = std::fs::read_to_string(configs_dir().join(name)).expect("bundled config exists");
    ConfigDocument::parse(&text).expect("bundled config parses")
}

/// Every bundled config that describes a runnable experiment.
pub fn bundled_experiments() -> Vec<(String, ConfigDocument)> {
    let mut names: Vec<String> = std::fs::read_dir(configs_dir())
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .filter(|n| n.ends_with(".ini"))
        .collect();
    names.sort();
    names
        .into_iter()
        .map(|n| {
            let doc = bundled(&n);
            (n, doc)
        })
        .filter(|(_, d)| d.has_section("topology"))
        .collect()
}

fn random_layout<R: Rng>(
    rng: &mut R,
    cells: [Option<SwitchSchedule>; 2],
) -> (Topology, StandardLayout) {
    let topology = [
        Topology::Fig1Symmetric,
        Topology::Fig2SymmetricDetours,
        Topology::Fig3Asymmetric,
    ][rng.random_range(0..3)];
    let x = rng.random_range(0.2..5.0);
    let layout = StandardLayout {
        x,
        x_bar: x + rng.random_range(0.05..3.0),
        y: [rng.random_range(0.0..6.0), rng.random_range(0.0..6.0)],
        placement: if rng.random() {
            DetourPlacement::BeforePolarizer
        } else {
            DetourPlacement::AfterPolarizer
        },
        polarizers: [
            PolarizationAngle::new(rng.random_range(0.0..PI)),
            PolarizationAngle::new(rng.random_range(0.0..PI)),
        ],
        cells,
    };
    (topology, layout)
}

fn randomize_model<R: Rng>(rng: &mut R, cfg: &mut ExperimentConfig) {
    cfg.preferred_frame = PreferredFrame::new(rng.random_range(-0.9..0.9) * C).unwrap();
    cfg.trigger = if rng.random() {
        TriggerPoint::Detector
    } else {
        TriggerPoint::Polarizer
    };
    cfg.tie_break = if rng.random() { Arm::One } else { Arm::Two };
}

/// Both arms carry a permanently activated cell with its own rotation.
pub fn random_static_config<R: Rng>(rng: &mut R) -> (ExperimentConfig, [f64; 2]) {
    let thetas = [
        rng.random_range(-PI / 2.0..PI / 2.0),
        rng.random_range(-PI / 2.0..PI / 2.0),
    ];
    let cells = thetas.map(|t| Some(SwitchSchedule::fixed(Mode::Activated, t)));
    let (topology, layout) = random_layout(rng, cells);
    let mut cfg = ExperimentConfig::new(topology, layout.build(topology).unwrap());
    randomize_model(rng, &mut cfg);
    cfg.validate().unwrap();
    (cfg, thetas)
}

/// Periodically switched cells with random phases, random model and a
/// random discard fraction.
pub fn random_periodic_config<R: Rng>(rng: &mut R) -> ExperimentConfig {
    let delta_t = rng.random_range(5.0..40.0) * NS;
    let mut cell = || {
        rng.random_bool(0.8).then(|| {
            SwitchSchedule::periodic(
                delta_t,
                rng.random_range(0.0..2.0) * delta_t,
                rng.random_range(-PI / 2.0..PI / 2.0),
            )
        })
    };
    let mut cells = [cell(), cell()];
    if cells.iter().all(Option::is_none) {
        cells[0] = Some(SwitchSchedule::periodic(delta_t, 0.0, PI / 5.0));
    }
    let (topology, layout) = random_layout(rng, cells);
    let mut cfg = ExperimentConfig::new(topology, layout.build(topology).unwrap());
    randomize_model(rng, &mut cfg);
    cfg.model = if rng.random() {
        Model::Qm
    } else {
        Model::BWave
    };
    cfg.discard_fraction = if rng.random() {
        0.0
    } else {
        rng.random_range(0.05..0.5)
    };
    cfg.validate().unwrap();
    cfg
}
