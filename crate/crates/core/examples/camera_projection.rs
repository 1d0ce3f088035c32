//! Projects workbench points through a downward-looking camera and
//! recovers them by back-projection onto the plane.

use agrobot::geometry::{CameraExtrinsics, CameraIntrinsics, CameraModel, WorldPoint};
use nalgebra::Vector3;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let camera = CameraModel::new(
        CameraIntrinsics::new(600.0, 600.0, 320.0, 240.0)?,
        CameraExtrinsics::look_at(
            WorldPoint::new(0.22, 0.0, 0.8),
            WorldPoint::new(0.22, 0.0, 0.0),
            Vector3::new(1.0, 0.0, 0.0),
        )?,
    );
    println!("camera center {:?}", camera.extrinsics.camera_center());
    for (x, y) in [(0.22, 0.0), (0.30, 0.10), (0.10, -0.15)] {
        let p = WorldPoint::new(x, y, 0.0);
        let px = camera.project(&p)?;
        let back = camera.backproject_to_plane(&px, 0.0)?;
        println!(
            "({x:.2}, {y:.2}) -> pixel ({:.2}, {:.2}) at depth {:.3} m -> ({:.6}, {:.6}), error {:.1e} m",
            px.u,
            px.v,
            camera.depth_of(&p),
            back.x,
            back.y,
            back.distance(&p)
        );
    }
    Ok(())
}
