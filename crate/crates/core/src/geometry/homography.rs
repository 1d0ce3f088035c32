//! Plane-to-image homography (normalized DLT) and planar pose recovery.

use nalgebra::{DMatrix, Matrix3, Vector2, Vector3, SVD};

use super::{CameraExtrinsics, CameraIntrinsics, GeometryError, PlanarCorrespondence};

/// Two smallest singular values closer than this ratio (relative to the
/// largest) mean the null space is not one-dimensional.
const DEGENERACY_RATIO: f64 = 1e6;

#[derive(Debug, Clone, PartialEq)]
pub struct HomographyEstimate {
    /// Maps `(xw, yw, 1)` to `(u, v, 1)` up to scale. `h[(2, 2)] == 1` unless
    /// that entry vanishes, in which case the matrix has unit Frobenius norm.
    pub h: Matrix3<f64>,
    /// Mean forward transfer error, pixels.
    pub forward_error: f64,
    /// Mean of forward (pixels) and backward (plane units) transfer errors.
    pub symmetric_error: f64,
}

/// Similarity transform moving the centroid to the origin with RMS distance √2.
fn normalizing_transform(points: &[Vector2<f64>]) -> Matrix3<f64> {
    let n = points.len() as f64;
    let centroid = points.iter().fold(Vector2::zeros(), |acc, p| acc + p) / n;
    let rms = (points.iter().map(|p| (p - centroid).norm_squared()).sum::<f64>() / n).sqrt();
    let scale = if rms > 0.0 { std::f64::consts::SQRT_2 / rms } else { 1.0 };
    Matrix3::new(
        scale,
        0.0,
        -scale * centroid.x,
        0.0,
        scale,
        -scale * centroid.y,
        0.0,
        0.0,
        1.0,
    )
}

fn apply(h: &Matrix3<f64>, p: &Vector2<f64>) -> Option<Vector2<f64>> {
    let q = h * Vector3::new(p.x, p.y, 1.0);
    if q.z.abs() < f64::EPSILON * q.norm() {
        return None;
    }
    Some(Vector2::new(q.x / q.z, q.y / q.z))
}

/// Direct linear transform over at least four plane/image correspondences.
pub fn estimate_homography(
    correspondences: &[PlanarCorrespondence],
) -> Result<HomographyEstimate, GeometryError> {
    let n = correspondences.len();
    if n < 4 {
        return Err(GeometryError::TooFewCorrespondences(n));
    }
    if let Some(i) = correspondences.iter().position(|c| c.world.z != 0.0) {
        return Err(GeometryError::NonPlanarCorrespondence(i));
    }

    let world: Vec<Vector2<f64>> = correspondences
        .iter()
        .map(|c| Vector2::new(c.world.x, c.world.y))
        .collect();
    let image: Vec<Vector2<f64>> = correspondences
        .iter()
        .map(|c| Vector2::new(c.pixel.u, c.pixel.v))
        .collect();
    let tw = normalizing_transform(&world);
    let ti = normalizing_transform(&image);

    // zero-padded so the SVD always yields a full 9x9 V
    let rows = (2 * n).max(9);
    let mut a = DMatrix::<f64>::zeros(rows, 9);
    for (i, (w, p)) in world.iter().zip(&image).enumerate() {
        let w = tw * Vector3::new(w.x, w.y, 1.0);
        let p = ti * Vector3::new(p.x, p.y, 1.0);
        let (x, y) = (w.x, w.y);
        let (u, v) = (p.x, p.y);
        let r0 = 2 * i;
        let r1 = r0 + 1;
        for (j, val) in [-x, -y, -1.0, 0.0, 0.0, 0.0, u * x, u * y, u].into_iter().enumerate() {
            a[(r0, j)] = val;
        }
        for (j, val) in [0.0, 0.0, 0.0, -x, -y, -1.0, v * x, v * y, v].into_iter().enumerate() {
            a[(r1, j)] = val;
        }
    }

    let svd = SVD::new(a, false, true);
    let v_t = svd.v_t.expect("requested V");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[i].total_cmp(&svd.singular_values[j]));
    let smallest = order[0];
    let second = svd.singular_values[order[1]];
    let largest = svd.singular_values[order[order.len() - 1]];
    let ratio = if second > 0.0 { largest / second } else { f64::INFINITY };
    if ratio > DEGENERACY_RATIO {
        return Err(GeometryError::DegenerateConfiguration(ratio));
    }

    let null = v_t.row(smallest);
    let h_norm = Matrix3::from_row_slice(&[
        null[0], null[1], null[2], null[3], null[4], null[5], null[6], null[7], null[8],
    ]);
    let ti_inv = ti.try_inverse().ok_or(GeometryError::DegenerateConfiguration(ratio))?;
    let mut h = ti_inv * h_norm * tw;
    if h[(2, 2)].abs() > 1e-12 * h.norm() {
        h /= h[(2, 2)];
    } else {
        h /= h.norm();
    }

    let h_inv = h.try_inverse().ok_or(GeometryError::DegenerateConfiguration(ratio))?;
    let mut forward = 0.0;
    let mut backward = 0.0;
    for (w, p) in world.iter().zip(&image) {
        let fwd = apply(&h, w).ok_or(GeometryError::DegenerateConfiguration(ratio))?;
        let bwd = apply(&h_inv, p).ok_or(GeometryError::DegenerateConfiguration(ratio))?;
        forward += (fwd - p).norm();
        backward += (bwd - w).norm();
    }
    let n = n as f64;
    Ok(HomographyEstimate {
        h,
        forward_error: forward / n,
        symmetric_error: (forward + backward) / (2.0 * n),
    })
}

/// Recovers the world→camera pose of the plane `zw = 0` from its
/// homography, given intrinsics.
///
/// With `K⁻¹H = [a1 a2 a3]` and `λ = 2 / (|a1| + |a2|)`, the raw frame is
/// `r1 = λa1, r2 = λa2, r3 = r1 × r2, t = λa3`. The sign of `λ` puts the
/// plane origin in front of the camera, and the raw frame is projected onto
/// SO(3) by SVD with determinant correction.
pub fn pose_from_homography(
    k: &CameraIntrinsics,
    h: &Matrix3<f64>,
) -> Result<CameraExtrinsics, GeometryError> {
    if !h.iter().all(|c| c.is_finite()) {
        return Err(GeometryError::SingularHomography);
    }
    let m = k.inverse_matrix() * h;
    let a1: Vector3<f64> = m.column(0).into();
    let a2: Vector3<f64> = m.column(1).into();
    let a3: Vector3<f64> = m.column(2).into();
    let (n1, n2, n3) = (a1.norm(), a2.norm(), a3.norm());
    let scale = n1.max(n2).max(n3);
    if scale == 0.0
        || n1 < 1e-12 * scale
        || n2 < 1e-12 * scale
        || m.determinant().abs() < 1e-12 * n1 * n2 * n3.max(1e-300)
    {
        return Err(GeometryError::SingularHomography);
    }

    let mut lambda = 2.0 / (n1 + n2);
    if (lambda * a3).z < 0.0 {
        lambda = -lambda;
    }
    let r1 = a1 * lambda;
    let r2 = a2 * lambda;
    let r3 = r1.cross(&r2);
    let t = a3 * lambda;

    let raw = Matrix3::from_columns(&[r1, r2, r3]);
    let svd = raw.svd(true, true);
    let u = svd.u.expect("requested U");
    let v_t = svd.v_t.expect("requested V");
    let d = (u * v_t).determinant().signum();
    let rotation = u * Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, d)) * v_t;
    CameraExtrinsics::new(rotation, t)
}
