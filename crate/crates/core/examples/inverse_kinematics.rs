//! Closed-form inverse kinematics for the 3-DoF arm: both elbow branches,
//! FK verification, nearest-branch selection and workspace errors.

use agrobot::geometry::WorldPoint;
use agrobot::kinematics::{forward_kinematics, ik_all_solutions, select_solution, ArmGeometry, JointAngles};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let arm = ArmGeometry::new(0.15, 0.2, 0.2)?;
    let (inner, outer) = arm.reach_bounds();
    println!("planar reach [{inner:.2}, {outer:.2}] m from the shoulder at z = {}", arm.l1);

    let target = WorldPoint::new(0.24, 0.02, 0.04);
    let solutions = ik_all_solutions(&arm, &target);
    for s in &solutions {
        let q = s.joints.as_array();
        let fk = forward_kinematics(&arm, &s.joints);
        println!(
            "{:?}: [{:.4}, {:.4}, {:.4}] rad = [{:.2}, {:.2}, {:.2}] deg, FK error {:.1e} m",
            s.branch,
            q[0],
            q[1],
            q[2],
            q[0].to_degrees(),
            q[1].to_degrees(),
            q[2].to_degrees(),
            fk.distance(&target)
        );
    }
    let home = JointAngles::new(0.0, 1.0, -1.4);
    println!("nearest to home: {:?}", select_solution(&solutions, &home)?.branch);

    let far = WorldPoint::new(1.0, 0.0, 0.15);
    match agrobot::kinematics::inverse_kinematics(&arm, &far, agrobot::kinematics::ElbowBranch::ElbowA) {
        Ok(q) => println!("unexpected solution {q:?}"),
        Err(e) => println!("{}: {e}", e.name()),
    }
    Ok(())
}
