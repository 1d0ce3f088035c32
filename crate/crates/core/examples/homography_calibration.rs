//! Calibrates the camera pose from a planar target: fit the plane-to-image
//! homography by normalized DLT, then decompose it into a rotation and a
//! translation.

use agrobot::geometry::{
    estimate_homography, pose_from_homography, rotation_angle_between, CameraExtrinsics, CameraIntrinsics,
    CameraModel, PlanarCorrespondence, WorldPoint,
};
use nalgebra::Vector3;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let k = CameraIntrinsics::new(800.0, 800.0, 320.0, 240.0)?;
    let truth = CameraExtrinsics::look_at(
        WorldPoint::new(0.3, -0.2, 0.9),
        WorldPoint::new(0.0, 0.0, 0.0),
        Vector3::new(0.0, 0.0, 1.0),
    )?;
    let camera = CameraModel::new(k, truth);

    // a 6x6 checkerboard with 5 cm squares on the workbench
    let mut corners = Vec::new();
    for i in 0..6 {
        for j in 0..6 {
            let (x, y) = (-0.125 + 0.05 * i as f64, -0.125 + 0.05 * j as f64);
            corners.push(PlanarCorrespondence::new(x, y, camera.project(&WorldPoint::new(x, y, 0.0))?));
        }
    }
    let fit = estimate_homography(&corners)?;
    println!("H =\n{:.6}", fit.h);
    println!("mean transfer error {:.2e} px", fit.forward_error);

    let pose = pose_from_homography(&k, &fit.h)?;
    println!(
        "recovered camera center {:?}\nrotation error {:.2e} rad, translation error {:.2e} m",
        pose.camera_center(),
        rotation_angle_between(pose.rotation(), truth.rotation()),
        (pose.translation() - truth.translation()).norm()
    );
    Ok(())
}
