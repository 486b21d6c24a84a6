//! Quantum predictions for the pair state `(|V⟩₂|H⟩₁ − |H⟩₂|V⟩₁)/√2`
//! measured by ideal two-channel polarizers.

use crate::polarization::{Channel, JointOutcome, PolarizationAngle};

/// Joint probability of `o` when arm 1 analyzes along `a_eff` and arm 2
/// along `b_eff`.
pub fn joint_prob(a_eff: PolarizationAngle, b_eff: PolarizationAngle, o: JointOutcome) -> f64 {
    let d = a_eff.radians() - b_eff.radians();
    if o.arm1 == o.arm2 {
        0.5 * d.sin().powi(2)
    } else {
        0.5 * d.cos().powi(2)
    }
}

/// All four joint probabilities in [`JointOutcome::ALL`] order.
pub fn joint_distribution(a_eff: PolarizationAngle, b_eff: PolarizationAngle) -> [f64; 4] {
    JointOutcome::ALL.map(|o| joint_prob(a_eff, b_eff, o))
}

/// Analyzer angle equivalent to a polarizer preceded by polarization
/// rotations. `forward_rotations` are the rotations applied to the light
/// (an activated cell contributes `-θ`); rotating the light by `-θ` is the
/// same as rotating the analyzer by `+θ`.
pub fn effective_angle(
    polarizer: PolarizationAngle,
    forward_rotations: &[f64],
) -> PolarizationAngle {
    let total: f64 = forward_rotations.iter().sum();
    polarizer.rotated(-total)
}

/// `E(a, b) = P(TT) + P(RR) − P(TR) − P(RT) = −cos 2(a − b)`.
pub fn correlation_e(a: PolarizationAngle, b: PolarizationAngle) -> f64 {
    -(2.0 * (a.radians() - b.radians())).cos()
}

pub fn chsh_s(
    a: PolarizationAngle,
    a_prime: PolarizationAngle,
    b: PolarizationAngle,
    b_prime: PolarizationAngle,
) -> f64 {
    (correlation_e(a, b) - correlation_e(a, b_prime)
        + correlation_e(a_prime, b)
        + correlation_e(a_prime, b_prime))
    .abs()
}

/// Probability that a photon of definite polarization `state` leaves an
/// analyzer at `analyzer` through the transmitted port.
pub fn malus(state: PolarizationAngle, analyzer: PolarizationAngle) -> f64 {
    (state.radians() - analyzer.radians()).cos().powi(2)
}

pub fn malus_channel(state: PolarizationAngle, analyzer: PolarizationAngle, ch: Channel) -> f64 {
    let t = malus(state, analyzer);
    match ch {
        Channel::Transmitted => t,
        Channel::Reflected => 1.0 - t,
    }
}
