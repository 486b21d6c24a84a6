use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;

/// Linear polarization (or analyzer axis) measured from vertical, modulo π.
///
/// `|a⟩ = cos a |V⟩ + sin a |H⟩`, so vertical is 0 and horizontal is π/2.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct PolarizationAngle(f64);

impl PolarizationAngle {
    pub const VERTICAL: PolarizationAngle = PolarizationAngle(0.0);
    pub const HORIZONTAL: PolarizationAngle = PolarizationAngle(FRAC_PI_2);

    pub fn new(radians: f64) -> Self {
        let mut a = radians.rem_euclid(PI);
        if a >= PI {
            a = 0.0;
        }
        PolarizationAngle(a)
    }

    pub fn radians(self) -> f64 {
        self.0
    }

    pub fn rotated(self, radians: f64) -> Self {
        Self::new(self.0 + radians)
    }

    pub fn orthogonal(self) -> Self {
        self.rotated(FRAC_PI_2)
    }
}

impl fmt::Display for PolarizationAngle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} rad", self.0)
    }
}

/// Output port of a two-channel polarizer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Channel {
    Transmitted,
    Reflected,
}

impl Channel {
    pub fn symbol(self) -> char {
        match self {
            Channel::Transmitted => 'T',
            Channel::Reflected => 'R',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct JointOutcome {
    pub arm1: Channel,
    pub arm2: Channel,
}

impl JointOutcome {
    /// Fixed reporting order: TT, TR, RT, RR.
    pub const ALL: [JointOutcome; 4] = [
        JointOutcome::new(Channel::Transmitted, Channel::Transmitted),
        JointOutcome::new(Channel::Transmitted, Channel::Reflected),
        JointOutcome::new(Channel::Reflected, Channel::Transmitted),
        JointOutcome::new(Channel::Reflected, Channel::Reflected),
    ];

    pub const fn new(arm1: Channel, arm2: Channel) -> Self {
        JointOutcome { arm1, arm2 }
    }

    pub fn index(self) -> usize {
        match (self.arm1, self.arm2) {
            (Channel::Transmitted, Channel::Transmitted) => 0,
            (Channel::Transmitted, Channel::Reflected) => 1,
            (Channel::Reflected, Channel::Transmitted) => 2,
            (Channel::Reflected, Channel::Reflected) => 3,
        }
    }

    pub fn label(self) -> String {
        format!("{}{}", self.arm1.symbol(), self.arm2.symbol())
    }

    /// +1 when both arms agree, -1 otherwise.
    pub fn parity(self) -> f64 {
        if self.arm1 == self.arm2 {
            1.0
        } else {
            -1.0
        }
    }
}

/// State of a Pockels cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    Inactivated,
    Activated,
}

impl Mode {
    pub fn flipped(self) -> Self {
        match self {
            Mode::Inactivated => Mode::Activated,
            Mode::Activated => Mode::Inactivated,
        }
    }
}
