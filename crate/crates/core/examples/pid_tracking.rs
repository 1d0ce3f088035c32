//! Tracks a cubic joint trajectory with feedforward plus PID through a
//! rate-limited actuator, printing the error as the arm settles.

use agrobot::control::{actuator_step, plan_trajectory, ArmControlConfig, JointTracker};
use agrobot::kinematics::{JointAngles, DEFAULT_LIMITS};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = ArmControlConfig::default();
    let start = JointAngles::new(0.0, 1.0, -1.4);
    let goal = JointAngles::new(0.8, 0.3, 0.6);
    let traj = plan_trajectory(&start, &goal, cfg.max_joint_speed);
    println!("duration {:.3} s for a {:.3} rad move", traj.duration, start.max_distance(&goal));

    // start 0.05 rad off the reference so the feedback has work to do
    let mut q = JointAngles::new(0.05, 0.95, -1.35);
    let mut tracker = JointTracker::new(cfg.gains());
    let steps = ((traj.duration + 1.0) / cfg.dt).ceil() as usize;
    for k in 0..=steps {
        let t = k as f64 * cfg.dt;
        if k % 25 == 0 {
            println!("t {t:5.2} s  tracking error {:.2e} rad", traj.position(t).max_distance(&q));
        }
        let u = tracker.command(&traj, t, &q, cfg.dt)?;
        q = actuator_step(&q, &u, cfg.dt, cfg.actuator_speed_limit, &DEFAULT_LIMITS)?;
    }
    println!("final error to goal {:.2e} rad", q.max_distance(&goal));
    Ok(())
}
