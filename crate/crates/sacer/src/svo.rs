//! Social value orientation: interaction outcomes, the SVO-weighted utility,
//! and its closed-form maximizer.
//!
//! A party's outcome is its velocity over its remaining distance to the
//! conflict point. The final utility weighs own outcome by `cos(phi)` and the
//! other party's by `sin(phi)`, with the orientation angle `phi` restricted to
//! `[0, pi/2]`: 0 is an individualist, `pi/4` a cooperativist, `pi/2` an
//! altruist.

use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};
use thiserror::Error;

/// Remaining distances are floored here before dividing so outcomes stay
/// finite as a vehicle closes on its conflict point.
pub const DISTANCE_FLOOR_M: f64 = 0.1;

#[derive(Debug, Error, PartialEq)]
pub enum SvoError {
    #[error("velocity must be non-negative, got {0}")]
    NegativeVelocity(f64),
    #[error("orientation angle {0} rad outside [0, pi/2]")]
    PhiOutOfRange(f64),
}

/// Orientation angle in radians, guaranteed inside `[0, pi/2]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SvoAngle(f64);

impl SvoAngle {
    pub fn new(phi: f64) -> Result<Self, SvoError> {
        if (0.0..=FRAC_PI_2).contains(&phi) {
            Ok(Self(phi))
        } else {
            Err(SvoError::PhiOutOfRange(phi))
        }
    }

    pub fn radians(self) -> f64 {
        self.0
    }

    /// Neutral cooperativist orientation.
    pub fn neutral() -> Self {
        Self(FRAC_PI_4)
    }
}

/// Outcomes of both parties of an interaction, in 1/s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutcomePair {
    pub u_self: f64,
    pub u_other: f64,
}

/// One party's outcome: velocity over remaining distance to the conflict
/// point, with the distance floored at [`DISTANCE_FLOOR_M`].
pub fn outcome(velocity: f64, d_remaining: f64) -> Result<f64, SvoError> {
    if velocity < 0.0 {
        return Err(SvoError::NegativeVelocity(velocity));
    }
    Ok(velocity / d_remaining.max(DISTANCE_FLOOR_M))
}

/// Final utility: own outcome weighted by `cos(phi)`, the other's by
/// `sin(phi)`.
pub fn utility(u_self: f64, u_other: f64, phi: f64) -> Result<f64, SvoError> {
    if !(0.0..=FRAC_PI_2).contains(&phi) {
        return Err(SvoError::PhiOutOfRange(phi));
    }
    Ok(u_self * phi.cos() + u_other * phi.sin())
}

/// The orientation maximizing [`utility`] over `[0, pi/2]`, in closed form:
/// `atan2(u_other, u_self)`. The all-zero outcome pair has no preferred
/// direction and maps to the neutral `pi/4`.
pub fn optimal_svo(u_self: f64, u_other: f64) -> SvoAngle {
    debug_assert!(u_self >= 0.0 && u_other >= 0.0);
    if u_self == 0.0 && u_other == 0.0 {
        return SvoAngle::neutral();
    }
    SvoAngle(u_other.atan2(u_self))
}

/// Optimal orientations of both parties for a joint state, given each
/// vehicle's velocity and remaining distance to its own conflict point.
///
/// Returns `(phi_self, phi_other)`; the second angle is the same computation
/// with the roles swapped.
pub fn joint_optimal_svo(
    v_self: f64,
    d_self: f64,
    v_other: f64,
    d_other: f64,
) -> Result<(SvoAngle, SvoAngle), SvoError> {
    let u_self = outcome(v_self, d_self)?;
    let u_other = outcome(v_other, d_other)?;
    Ok((
        optimal_svo(u_self, u_other),
        optimal_svo(u_other, u_self),
    ))
}
