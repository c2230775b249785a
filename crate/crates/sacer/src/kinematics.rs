//! Longitudinal point-mass kinematics shared by the environment and the
//! ground-truth trajectory reconstruction.

/// Longitudinal acceleration bound, m/s².
pub const ACCEL_LIMIT: f64 = 3.0;

/// One integration step at acceleration `a` over `dt`.
///
/// Velocity clamps at zero (vehicles do not reverse); when the vehicle would
/// stop mid-step the displacement is the constant-deceleration stopping
/// distance v²/(2|a|) instead of the full second-order term.
///
/// Returns `(next_velocity, displacement)`.
pub fn advance(v: f64, a: f64, dt: f64) -> (f64, f64) {
    debug_assert!(v >= 0.0, "velocity must be non-negative");
    let v_next = v + a * dt;
    if v_next >= 0.0 {
        (v_next, v * dt + 0.5 * a * dt * dt)
    } else {
        // a < 0 and the vehicle stops inside the step.
        (0.0, v * v / (2.0 * a.abs()))
    }
}
