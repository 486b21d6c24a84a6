//! Seeded Monte Carlo over photon pairs.
//!
//! Trial `i` of a run draws from its own ChaCha stream (`seed`, stream
//! `i`), and trials are tallied into integer counts, so a run is
//! bit-identical whether it executes serially or on any number of threads.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::bwave::{self, signature_p21, first_detection, first_photon_outcome};
use crate::error::Result;
use crate::experiment::{Arm, EmissionLaw, ExperimentConfig, Model, SyncMode};
use crate::polarization::{Channel, JointOutcome, Mode, PolarizationAngle};
use crate::qm;
use crate::timeline::{build_unchecked, logic_filter, FilterVerdict, TrialRecord};

/// Trials per parallel work item; fixed so batching never affects results.
const CHUNK: u64 = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    pub parallel: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { parallel: true }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunSummary {
    pub model: Model,
    pub seed: u64,
    pub trials: u64,
    pub kept: u64,
    pub discarded: u64,
    /// Counts in [`JointOutcome::ALL`] order.
    pub counts: [u64; 4],
    /// Pairs whose first detection was decided by the tie-break.
    pub tie_breaks: u64,
    /// Pairs whose partner had already crossed its polarizer when forced.
    pub late_forcings: u64,
    pub config_digest: String,
}

impl RunSummary {
    pub fn count(&self, o: JointOutcome) -> u64 {
        self.counts[o.index()]
    }

    pub fn probability(&self, o: JointOutcome) -> f64 {
        if self.kept == 0 {
            return 0.0;
        }
        self.count(o) as f64 / self.kept as f64
    }

    /// `sqrt(p̂(1 − p̂)/N)` over kept pairs.
    pub fn stderr(&self, o: JointOutcome) -> f64 {
        if self.kept == 0 {
            return 0.0;
        }
        let p = self.probability(o);
        (p * (1.0 - p) / self.kept as f64).sqrt()
    }

    /// Correlation estimate `(N_TT + N_RR − N_TR − N_RT)/N` and its
    /// standard error.
    pub fn correlation(&self) -> (f64, f64) {
        if self.kept == 0 {
            return (0.0, 0.0);
        }
        let n = self.kept as f64;
        let e = JointOutcome::ALL
            .iter()
            .map(|o| o.parity() * self.count(*o) as f64)
            .sum::<f64>()
            / n;
        (e, ((1.0 - e * e).max(0.0) / n).sqrt())
    }
}

#[derive(Debug, Default, Clone, Copy)]
struct Tally {
    kept: u64,
    discarded: u64,
    counts: [u64; 4],
    tie_breaks: u64,
    late_forcings: u64,
}

impl Tally {
    fn merge(mut self, other: Tally) -> Tally {
        self.kept += other.kept;
        self.discarded += other.discarded;
        for i in 0..4 {
            self.counts[i] += other.counts[i];
        }
        self.tie_breaks += other.tie_breaks;
        self.late_forcings += other.late_forcings;
        self
    }

    fn add(&mut self, t: &TrialRecord) {
        if t.discarded {
            self.discarded += 1;
            return;
        }
        self.kept += 1;
        if let Some(o) = t.outcome {
            self.counts[o.index()] += 1;
        }
        self.tie_breaks += t.tie_break_used as u64;
        self.late_forcings += t.late_forcing as u64;
    }
}

/// SplitMix64 finalizer over `seed` and `k`, for independent sub-run seeds.
pub fn derive_seed(seed: u64, k: u64) -> u64 {
    let mut z = seed ^ k.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Short SHA-256 digest of the canonical config text.
pub fn config_digest(cfg: &ExperimentConfig) -> String {
    let text = crate::config::dump_experiment(cfg);
    let digest = Sha256::digest(text.as_bytes());
    hex::encode(&digest[..8])
}

/// Random stream of trial `index`.
pub fn trial_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Emission time of a pair under the configured law.
pub fn sample_emission<R: Rng + ?Sized>(cfg: &ExperimentConfig, rng: &mut R) -> f64 {
    let u: f64 = rng.random();
    let coin: bool = rng.random();
    let Some((_, path, schedule)) = cfg.reference_cell() else {
        return 0.0;
    };
    let delta_t = schedule.delta_t().expect("reference cell is periodic");
    let transit = path / crate::lorentz::C;
    match cfg.emission {
        EmissionLaw::Uniform => u * 2.0 * delta_t,
        EmissionLaw::Synchronized(sync) => {
            let mode = match sync {
                SyncMode::Activated => Mode::Activated,
                SyncMode::Inactivated => Mode::Inactivated,
                SyncMode::Any if coin => Mode::Activated,
                SyncMode::Any => Mode::Inactivated,
            };
            let start = schedule
                .next_mode_start(mode, transit)
                .expect("reference cell is periodic");
            start - transit
        }
    }
}

/// Runs one trial end to end: timeline, logic filter, physics.
pub fn simulate_trial<R: Rng + ?Sized>(cfg: &ExperimentConfig, rng: &mut R) -> Result<TrialRecord> {
    let t0 = sample_emission(cfg, rng);
    let mut trial = build_unchecked(cfg, t0);
    if logic_filter(&trial, cfg.discard_fraction) == FilterVerdict::Discard {
        trial.discarded = true;
        return Ok(trial);
    }
    match cfg.model {
        Model::Qm => {
            let [a, b] = qm_effective_angles(&trial);
            let dist = qm::joint_distribution(a, b);
            let u: f64 = rng.random();
            let mut acc = 0.0;
            let mut pick = JointOutcome::ALL[3];
            for (o, p) in JointOutcome::ALL.iter().zip(dist) {
                acc += p;
                if u < acc {
                    pick = *o;
                    break;
                }
            }
            trial.outcome = Some(pick);
        }
        Model::BWave => {
            let (first, tie) = first_detection(&trial, cfg.preferred_frame, cfg.tie_break);
            let ch = first_photon_outcome(rng);
            let (trigger, forced, partner) =
                bwave::propagate(&trial, first, ch, cfg.trigger, cfg.preferred_frame)?;
            let u: f64 = rng.random();
            let partner_ch = if u < partner.p_transmitted() {
                Channel::Transmitted
            } else {
                Channel::Reflected
            };
            trial.outcome = Some(match first {
                Arm::One => JointOutcome::new(ch, partner_ch),
                Arm::Two => JointOutcome::new(partner_ch, ch),
            });
            trial.first = Some(first);
            trial.tie_break_used = tie;
            trial.trigger = Some(trigger);
            trial.forced = Some(forced);
            trial.late_forcing = partner.late;
        }
    }
    Ok(trial)
}

/// Analyzer angles equivalent to each arm's polarizer plus the cells the
/// photon crossed activated on its way there.
pub fn qm_effective_angles(trial: &TrialRecord) -> [PolarizationAngle; 2] {
    Arm::BOTH.map(|arm| {
        let a = trial.arm(arm);
        let rotations: Vec<f64> = a
            .cells_before_polarizer()
            .filter(|(_, c)| c.mode == Mode::Activated)
            .map(|(_, c)| -c.schedule.theta)
            .collect();
        qm::effective_angle(a.polarizer_angle, &rotations)
    })
}

/// Exact outcome distribution of a built timeline under `cfg.model`.
pub fn outcome_distribution(cfg: &ExperimentConfig, trial: &TrialRecord) -> Result<[f64; 4]> {
    match cfg.model {
        Model::Qm => {
            let [a, b] = qm_effective_angles(trial);
            Ok(qm::joint_distribution(a, b))
        }
        Model::BWave => {
            let (first, _) = first_detection(trial, cfg.preferred_frame, cfg.tie_break);
            bwave::joint_distribution(trial, first, cfg.trigger, cfg.preferred_frame)
        }
    }
}

fn run_range(cfg: &ExperimentConfig, seed: u64, range: std::ops::Range<u64>) -> Result<Tally> {
    let mut tally = Tally::default();
    let mut base = ChaCha8Rng::seed_from_u64(seed);
    for i in range {
        base.set_stream(i);
        base.set_word_pos(0);
        let trial = simulate_trial(cfg, &mut base)?;
        tally.add(&trial);
    }
    Ok(tally)
}

pub fn run(cfg: &ExperimentConfig, trials: u64, seed: u64, opts: RunOptions) -> Result<RunSummary> {
    cfg.validate()?;
    if trials == 0 {
        return Err(crate::Error::domain("trial count must be at least 1"));
    }
    let chunks = trials.div_ceil(CHUNK);
    let chunk_range = |c: u64| c * CHUNK..((c + 1) * CHUNK).min(trials);
    let tally = if opts.parallel {
        (0..chunks)
            .into_par_iter()
            .map(|c| run_range(cfg, seed, chunk_range(c)))
            .try_reduce(Tally::default, |a, b| Ok(a.merge(b)))?
    } else {
        run_range(cfg, seed, 0..trials)?
    };
    Ok(RunSummary {
        model: cfg.model,
        seed,
        trials,
        kept: tally.kept,
        discarded: tally.discarded,
        counts: tally.counts,
        tie_breaks: tally.tie_breaks,
        late_forcings: tally.late_forcings,
        config_digest: config_digest(cfg),
    })
}

/// Analyzer settings of a CHSH test: arm 1 uses `a`/`a_prime`, arm 2
/// `b`/`b_prime`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChshAngles {
    pub a: PolarizationAngle,
    pub a_prime: PolarizationAngle,
    pub b: PolarizationAngle,
    pub b_prime: PolarizationAngle,
}

impl ChshAngles {
    pub fn optimal() -> Self {
        use std::f64::consts::{FRAC_PI_4, FRAC_PI_8};
        ChshAngles {
            a: PolarizationAngle::new(0.0),
            a_prime: PolarizationAngle::new(FRAC_PI_4),
            b: PolarizationAngle::new(FRAC_PI_8),
            b_prime: PolarizationAngle::new(3.0 * FRAC_PI_8),
        }
    }

    /// The four settings with their labels and CHSH signs.
    pub fn settings(&self) -> [(&'static str, PolarizationAngle, PolarizationAngle, f64); 4] {
        [
            ("a_b", self.a, self.b, 1.0),
            ("a_bp", self.a, self.b_prime, -1.0),
            ("ap_b", self.a_prime, self.b, 1.0),
            ("ap_bp", self.a_prime, self.b_prime, 1.0),
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SettingEstimate {
    pub label: &'static str,
    pub a: PolarizationAngle,
    pub b: PolarizationAngle,
    pub e: f64,
    pub stderr: f64,
    pub summary: RunSummary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChshEstimate {
    pub settings: Vec<SettingEstimate>,
    pub s: f64,
    pub s_stderr: f64,
}

/// Local hidden-variable bound on `S`.
pub const CLASSICAL_CHSH_BOUND: f64 = 2.0;

pub fn estimate_chsh(
    cfg: &ExperimentConfig,
    angles: &ChshAngles,
    trials_per_setting: u64,
    seed: u64,
    opts: RunOptions,
) -> Result<ChshEstimate> {
    let mut settings = Vec::with_capacity(4);
    let mut signed = 0.0;
    let mut var = 0.0;
    for (k, (label, a, b, sign)) in angles.settings().into_iter().enumerate() {
        let mut c = cfg.clone();
        c.set_polarizers(a, b);
        let summary = run(&c, trials_per_setting, derive_seed(seed, k as u64), opts)?;
        let (e, se) = summary.correlation();
        signed += sign * e;
        var += se * se;
        settings.push(SettingEstimate {
            label,
            a,
            b,
            e,
            stderr: se,
            summary,
        });
    }
    Ok(ChshEstimate {
        settings,
        s: signed.abs(),
        s_stderr: var.sqrt(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanRow {
    pub theta: f64,
    pub p21_estimate: f64,
    pub stderr: f64,
    pub p21_analytic: f64,
}

/// Both-transmitted probability as the arm-1 cell rotation sweeps `thetas`.
pub fn scan_theta(
    cfg: &ExperimentConfig,
    thetas: &[f64],
    trials: u64,
    seed: u64,
    opts: RunOptions,
) -> Result<Vec<ScanRow>> {
    let tt = JointOutcome::ALL[0];
    thetas
        .iter()
        .enumerate()
        .map(|(k, &theta)| {
            let mut c = cfg.clone();
            c.arms[0].set_cell_theta(theta);
            let s = run(&c, trials, derive_seed(seed, k as u64), opts)?;
            Ok(ScanRow {
                theta,
                p21_estimate: s.probability(tt),
                stderr: s.stderr(tt),
                p21_analytic: signature_p21(theta),
            })
        })
        .collect()
}

/// `steps` evenly spaced points from `min` to `max` inclusive.
pub fn theta_grid(min: f64, max: f64, steps: usize) -> Result<Vec<f64>> {
    if steps < 2 {
        return Err(crate::Error::domain("a theta scan needs at least 2 steps"));
    }
    Ok((0..steps)
        .map(|i| {
            if i + 1 == steps {
                max
            } else {
                min + (max - min) * i as f64 / (steps - 1) as f64
            }
        })
        .collect())
}
