//! Pinhole camera geometry: pixel, camera and world frames.
//!
//! Projection follows the 4-parameter pinhole model
//!
//! ```text
//! u = fx * xc / zc + cx
//! v = fy * yc / zc + cy
//! ```
//!
//! and [`CameraExtrinsics`] always stores the world→camera transform
//! `Xc = R * Xw + t`. The camera→world direction is its analytic inverse
//! `Xw = Rᵀ (Xc - t)`. There is no lens distortion model.

mod homography;

pub use homography::{estimate_homography, pose_from_homography, HomographyEstimate};

use nalgebra::{Matrix3, Rotation3, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Below this magnitude of the world-z component a pixel ray is treated as
/// parallel to a horizontal plane.
pub const PARALLEL_RAY_EPS: f64 = 1e-12;

const ROTATION_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("invalid intrinsics: {0}")]
    InvalidIntrinsics(String),
    #[error("invalid rotation: {0}")]
    InvalidRotation(String),
    #[error("point has non-positive camera depth {0}")]
    NonPositiveDepth(f64),
    #[error("pixel ray is parallel to the plane")]
    RayParallelToPlane,
    #[error("plane intersection lies behind the camera")]
    PlaneBehindCamera,
    #[error("need at least 4 correspondences, got {0}")]
    TooFewCorrespondences(usize),
    #[error("correspondence {0} is not on the plane zw = 0")]
    NonPlanarCorrespondence(usize),
    #[error("degenerate correspondence configuration (singular value ratio {0:.3e})")]
    DegenerateConfiguration(f64),
    #[error("homography is singular")]
    SingularHomography,
}

impl GeometryError {
    pub fn name(&self) -> &'static str {
        match self {
            Self::InvalidIntrinsics(_) => "InvalidIntrinsics",
            Self::InvalidRotation(_) => "InvalidRotation",
            Self::NonPositiveDepth(_) => "NonPositiveDepth",
            Self::RayParallelToPlane => "RayParallelToPlane",
            Self::PlaneBehindCamera => "PlaneBehindCamera",
            Self::TooFewCorrespondences(_) => "TooFewCorrespondences",
            Self::NonPlanarCorrespondence(_) => "NonPlanarCorrespondence",
            Self::DegenerateConfiguration(_) => "DegenerateConfiguration",
            Self::SingularHomography => "SingularHomography",
        }
    }
}

/// Image coordinates in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PixelPoint {
    pub u: f64,
    pub v: f64,
}

impl PixelPoint {
    pub fn new(u: f64, v: f64) -> Self {
        Self { u, v }
    }

    pub fn distance(&self, other: &PixelPoint) -> f64 {
        (self.u - other.u).hypot(self.v - other.v)
    }
}

/// A point in the camera frame (meters). +z looks out of the lens.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraPoint {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl CameraPoint {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn to_vector(self) -> Vector3<f64> {
        Vector3::new(self.x, self.y, self.z)
    }

    pub fn from_vector(v: &Vector3<f64>) -> Self {
        Self::new(v.x, v.y, v.z)
    }
}

/// A point in the world (workbench) frame, meters. The arm base sits at the
/// origin and +z points up.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct WorldPoint {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl WorldPoint {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn to_vector(self) -> Vector3<f64> {
        Vector3::new(self.x, self.y, self.z)
    }

    pub fn from_vector(v: &Vector3<f64>) -> Self {
        Self::new(v.x, v.y, v.z)
    }

    pub fn distance(&self, other: &WorldPoint) -> f64 {
        (self.to_vector() - other.to_vector()).norm()
    }

    pub fn horizontal_distance(&self, other: &WorldPoint) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// A world point on the calibration plane `zw = 0` paired with its image.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanarCorrespondence {
    pub world: WorldPoint,
    pub pixel: PixelPoint,
}

impl PlanarCorrespondence {
    pub fn new(x: f64, y: f64, pixel: PixelPoint) -> Self {
        Self {
            world: WorldPoint::new(x, y, 0.0),
            pixel,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
}

impl CameraIntrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64) -> Result<Self, GeometryError> {
        if !(fx > 0.0 && fy > 0.0) || !fx.is_finite() || !fy.is_finite() {
            return Err(GeometryError::InvalidIntrinsics(format!(
                "focal lengths must be positive, got fx={fx}, fy={fy}"
            )));
        }
        if !cx.is_finite() || !cy.is_finite() {
            return Err(GeometryError::InvalidIntrinsics(
                "principal point must be finite".into(),
            ));
        }
        Ok(Self { fx, fy, cx, cy })
    }

    /// The calibration matrix `K`.
    pub fn matrix(&self) -> Matrix3<f64> {
        Matrix3::new(self.fx, 0.0, self.cx, 0.0, self.fy, self.cy, 0.0, 0.0, 1.0)
    }

    /// `K⁻¹` in closed form.
    pub fn inverse_matrix(&self) -> Matrix3<f64> {
        Matrix3::new(
            1.0 / self.fx,
            0.0,
            -self.cx / self.fx,
            0.0,
            1.0 / self.fy,
            -self.cy / self.fy,
            0.0,
            0.0,
            1.0,
        )
    }
}

/// World→camera rigid transform.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraExtrinsics {
    rotation: Matrix3<f64>,
    translation: Vector3<f64>,
}

impl CameraExtrinsics {
    /// Validates `RᵀR = I` and `det R = 1` to within 1e-9.
    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self, GeometryError> {
        check_rotation(&rotation)?;
        if !translation.iter().all(|c| c.is_finite()) {
            return Err(GeometryError::InvalidRotation(
                "translation must be finite".into(),
            ));
        }
        Ok(Self {
            rotation,
            translation,
        })
    }

    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    /// Builds the pose of a camera sitting at `position` and looking at
    /// `target`, with `up` resolving the roll about the viewing axis.
    ///
    /// Camera axes in world coordinates are
    /// `z = normalize(target - position)`, `x = normalize(z × up)`,
    /// `y = z × x` (x right, y down in the image). The rows of `R` are those
    /// axes and `t = -R * position`.
    pub fn look_at(
        position: WorldPoint,
        target: WorldPoint,
        up: Vector3<f64>,
    ) -> Result<Self, GeometryError> {
        let forward = target.to_vector() - position.to_vector();
        let forward = forward
            .try_normalize(1e-12)
            .ok_or_else(|| GeometryError::InvalidRotation("look-at target equals position".into()))?;
        let right = forward.cross(&up).try_normalize(1e-12).ok_or_else(|| {
            GeometryError::InvalidRotation("up vector is parallel to the viewing direction".into())
        })?;
        let down = forward.cross(&right);
        let rotation = Matrix3::from_rows(&[right.transpose(), down.transpose(), forward.transpose()]);
        let translation = -(rotation * position.to_vector());
        Self::new(rotation, translation)
    }

    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.rotation
    }

    pub fn translation(&self) -> &Vector3<f64> {
        &self.translation
    }

    /// Camera optical center in world coordinates, `-Rᵀ t`.
    pub fn camera_center(&self) -> WorldPoint {
        WorldPoint::from_vector(&(-(self.rotation.transpose() * self.translation)))
    }
}

fn check_rotation(r: &Matrix3<f64>) -> Result<(), GeometryError> {
    if !r.iter().all(|c| c.is_finite()) {
        return Err(GeometryError::InvalidRotation("non-finite entry".into()));
    }
    let defect = (r.transpose() * r - Matrix3::identity()).abs().max();
    if defect > ROTATION_TOL {
        return Err(GeometryError::InvalidRotation(format!(
            "RᵀR deviates from identity by {defect:.3e}"
        )));
    }
    let det = r.determinant();
    if (det - 1.0).abs() > ROTATION_TOL {
        return Err(GeometryError::InvalidRotation(format!("det R = {det}")));
    }
    Ok(())
}

/// Geodesic angle between two rotations, radians.
pub fn rotation_angle_between(a: &Matrix3<f64>, b: &Matrix3<f64>) -> f64 {
    let rel = Rotation3::from_matrix_unchecked(a.transpose() * b);
    rel.angle()
}

pub fn camera_to_pixel(k: &CameraIntrinsics, p: &CameraPoint) -> Result<PixelPoint, GeometryError> {
    if !(p.z > 0.0) {
        return Err(GeometryError::NonPositiveDepth(p.z));
    }
    Ok(PixelPoint::new(
        k.fx * p.x / p.z + k.cx,
        k.fy * p.y / p.z + k.cy,
    ))
}

/// Unit viewing direction through a pixel, in the camera frame. Always has
/// positive z.
pub fn pixel_to_camera_ray(k: &CameraIntrinsics, px: &PixelPoint) -> Vector3<f64> {
    Vector3::new((px.u - k.cx) / k.fx, (px.v - k.cy) / k.fy, 1.0).normalize()
}

pub fn world_to_camera(e: &CameraExtrinsics, w: &WorldPoint) -> CameraPoint {
    CameraPoint::from_vector(&(e.rotation * w.to_vector() + e.translation))
}

pub fn camera_to_world(e: &CameraExtrinsics, c: &CameraPoint) -> WorldPoint {
    WorldPoint::from_vector(&(e.rotation.transpose() * (c.to_vector() - e.translation)))
}

/// Intersects the viewing ray of `px` with the horizontal plane
/// `zw = plane_height`.
pub fn backproject_to_plane(
    k: &CameraIntrinsics,
    e: &CameraExtrinsics,
    px: &PixelPoint,
    plane_height: f64,
) -> Result<WorldPoint, GeometryError> {
    let ray_world = e.rotation.transpose() * pixel_to_camera_ray(k, px);
    if ray_world.z.abs() < PARALLEL_RAY_EPS {
        return Err(GeometryError::RayParallelToPlane);
    }
    let center = e.camera_center().to_vector();
    // ray_world is unit length and has positive camera depth per unit of s
    let s = (plane_height - center.z) / ray_world.z;
    if !(s > 0.0) {
        return Err(GeometryError::PlaneBehindCamera);
    }
    let mut hit = center + ray_world * s;
    // pin the constrained coordinate exactly
    hit.z = plane_height;
    Ok(WorldPoint::from_vector(&hit))
}

/// Intrinsics plus pose: the full world↔pixel mapping.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraModel {
    pub intrinsics: CameraIntrinsics,
    pub extrinsics: CameraExtrinsics,
}

impl CameraModel {
    pub fn new(intrinsics: CameraIntrinsics, extrinsics: CameraExtrinsics) -> Self {
        Self {
            intrinsics,
            extrinsics,
        }
    }

    pub fn project(&self, w: &WorldPoint) -> Result<PixelPoint, GeometryError> {
        camera_to_pixel(&self.intrinsics, &world_to_camera(&self.extrinsics, w))
    }

    pub fn depth_of(&self, w: &WorldPoint) -> f64 {
        world_to_camera(&self.extrinsics, w).z
    }

    pub fn backproject_to_plane(
        &self,
        px: &PixelPoint,
        plane_height: f64,
    ) -> Result<WorldPoint, GeometryError> {
        backproject_to_plane(&self.intrinsics, &self.extrinsics, px, plane_height)
    }
}
