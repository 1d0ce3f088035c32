use serde::{Deserialize, Serialize};

use super::ControlError;

/// Discrete PID gains for a velocity-command loop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PidGains {
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
    /// Symmetric clamp on the command, rad/s.
    pub output_limit: f64,
    /// Symmetric clamp on the error integral, rad·s.
    pub integral_limit: f64,
}

impl Default for PidGains {
    fn default() -> Self {
        Self {
            kp: 8.0,
            ki: 0.5,
            kd: 0.2,
            output_limit: 3.0,
            integral_limit: 0.5,
        }
    }
}

impl PidGains {
    pub fn validate(&self) -> Result<(), ControlError> {
        let gains_ok = [self.kp, self.ki, self.kd]
            .iter()
            .all(|g| *g >= 0.0 && g.is_finite());
        let limits_ok = self.output_limit > 0.0 && self.integral_limit > 0.0;
        if gains_ok && limits_ok {
            Ok(())
        } else {
            Err(ControlError::InvalidGains(format!("{self:?}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PidState {
    pub integral: f64,
    pub previous_error: f64,
    pub initialized: bool,
}

/// One controller update.
///
/// The integral accumulates `error·dt` and is clamped before use; the
/// derivative is taken on the error and is zero on the first update.
pub fn pid_step(
    gains: &PidGains,
    state: &PidState,
    error: f64,
    dt: f64,
) -> Result<(f64, PidState), ControlError> {
    if !(dt > 0.0) {
        return Err(ControlError::NonPositiveDt(dt));
    }
    let integral = (state.integral + error * dt).clamp(-gains.integral_limit, gains.integral_limit);
    let derivative = if state.initialized {
        (error - state.previous_error) / dt
    } else {
        0.0
    };
    let command = (gains.kp * error + gains.ki * integral + gains.kd * derivative)
        .clamp(-gains.output_limit, gains.output_limit);
    Ok((
        command,
        PidState {
            integral,
            previous_error: error,
            initialized: true,
        },
    ))
}

/// A gain set bundled with its running state.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pid {
    pub gains: PidGains,
    pub state: PidState,
}

impl Pid {
    pub fn new(gains: PidGains) -> Self {
        Self {
            gains,
            state: PidState::default(),
        }
    }

    pub fn step(&mut self, error: f64, dt: f64) -> Result<f64, ControlError> {
        let (command, state) = pid_step(&self.gains, &self.state, error, dt)?;
        self.state = state;
        Ok(command)
    }

    pub fn reset(&mut self) {
        self.state = PidState::default();
    }
}
