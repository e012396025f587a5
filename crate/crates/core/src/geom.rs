//! Planar rigid and similarity transforms, panorama ray geometry.
//!
//! Angles are counterclockwise-positive radians. Every [`Pose2`] keeps its
//! heading wrapped to `(-pi, pi]`.

use std::f64::consts::{PI, TAU};
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeomError {
    #[error("degenerate input: {0}")]
    Degenerate(&'static str),
    #[error("point sets differ in length ({src} vs {dst})")]
    LengthMismatch { src: usize, dst: usize },
}

/// Wraps an angle to `(-pi, pi]`.
pub fn wrap_angle(a: f64) -> f64 {
    let w = (a + PI).rem_euclid(TAU) - PI;
    if w <= -PI {
        w + TAU
    } else {
        w
    }
}

/// Reduces an angle modulo `period` to the representative in `(-period/2, period/2]`.
pub fn reduce_symmetric(a: f64, period: f64) -> f64 {
    let half = 0.5 * period;
    let w = (a + half).rem_euclid(period) - half;
    if w <= -half {
        w + period
    } else {
        w
    }
}

/// Planar point or vector in meters. Serialized as `[x, y]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn from_angle(a: f64) -> Self {
        let (s, c) = a.sin_cos();
        Self::new(c, s)
    }

    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the 3D cross product.
    pub fn cross(self, o: Vec2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn angle(self) -> f64 {
        self.y.atan2(self.x)
    }

    /// Signed angle rotating `self` onto `o`, in `(-pi, pi]`.
    pub fn angle_to(self, o: Vec2) -> f64 {
        self.cross(o).atan2(self.dot(o))
    }

    /// Rotated by +90 degrees.
    pub fn perp(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }

    pub fn rotate(self, a: f64) -> Vec2 {
        let (s, c) = a.sin_cos();
        Vec2::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    pub fn normalized(self) -> Vec2 {
        let n = self.norm();
        Vec2::new(self.x / n, self.y / n)
    }

    pub fn distance(self, o: Vec2) -> f64 {
        (self - o).norm()
    }

    pub fn lerp(self, o: Vec2, t: f64) -> Vec2 {
        self + (o - self) * t
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl From<[f64; 2]> for Vec2 {
    fn from(a: [f64; 2]) -> Self {
        Vec2::new(a[0], a[1])
    }
}

impl From<Vec2> for [f64; 2] {
    fn from(v: Vec2) -> Self {
        [v.x, v.y]
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl AddAssign for Vec2 {
    fn add_assign(&mut self, o: Vec2) {
        self.x += o.x;
        self.y += o.y;
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, s: f64) -> Vec2 {
        Vec2::new(self.x * s, self.y * s)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

/// Rigid planar pose. Also used for relative poses `i_T_j` (frame `j`
/// expressed in frame `i`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "PoseRepr", into = "PoseRepr")]
pub struct Pose2 {
    x: f64,
    y: f64,
    theta: f64,
}

#[derive(Serialize, Deserialize)]
struct PoseRepr {
    x: f64,
    y: f64,
    theta: f64,
}

impl From<PoseRepr> for Pose2 {
    fn from(r: PoseRepr) -> Self {
        Pose2::new(r.x, r.y, r.theta)
    }
}

impl From<Pose2> for PoseRepr {
    fn from(p: Pose2) -> Self {
        PoseRepr { x: p.x, y: p.y, theta: p.theta }
    }
}

impl Default for Pose2 {
    fn default() -> Self {
        Self::identity()
    }
}

impl Pose2 {
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Self { x, y, theta: wrap_angle(theta) }
    }

    pub fn from_parts(t: Vec2, theta: f64) -> Self {
        Self::new(t.x, t.y, theta)
    }

    pub const fn identity() -> Self {
        Self { x: 0.0, y: 0.0, theta: 0.0 }
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn y(&self) -> f64 {
        self.y
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn translation(&self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }

    pub fn compose(&self, b: &Pose2) -> Pose2 {
        let t = self.translation() + b.translation().rotate(self.theta);
        Pose2::new(t.x, t.y, self.theta + b.theta)
    }

    pub fn inverse(&self) -> Pose2 {
        let t = -self.translation().rotate(-self.theta);
        Pose2::new(t.x, t.y, -self.theta)
    }

    /// Relative pose `self^-1 * other`.
    pub fn between(&self, other: &Pose2) -> Pose2 {
        self.inverse().compose(other)
    }

    pub fn transform_point(&self, p: Vec2) -> Vec2 {
        p.rotate(self.theta) + self.translation()
    }

    pub fn inverse_transform_point(&self, p: Vec2) -> Vec2 {
        (p - self.translation()).rotate(-self.theta)
    }

    pub fn rotate_vector(&self, v: Vec2) -> Vec2 {
        v.rotate(self.theta)
    }

    /// Group exponential of a tangent vector.
    pub fn exp(xi: &Twist2) -> Pose2 {
        let w = xi.omega;
        let (a, b) = v_coeffs(w);
        // V = [[a, -b], [b, a]]
        let tx = a * xi.vx - b * xi.vy;
        let ty = b * xi.vx + a * xi.vy;
        Pose2::new(tx, ty, w)
    }

    /// Group logarithm; inverse of [`Pose2::exp`] for `|theta| < pi`.
    pub fn log(&self) -> Twist2 {
        let w = self.theta;
        let (a, b) = v_coeffs(w);
        let det = a * a + b * b;
        // V^-1 = [[a, b], [-b, a]] / det
        let vx = (a * self.x + b * self.y) / det;
        let vy = (-b * self.x + a * self.y) / det;
        Twist2 { vx, vy, omega: w }
    }

    /// Right-perturbation retraction `self * exp(xi)`.
    pub fn retract(&self, xi: &Twist2) -> Pose2 {
        self.compose(&Pose2::exp(xi))
    }

    /// Adjoint matrix acting on `(vx, vy, omega)` tangent vectors.
    pub fn adjoint(&self) -> [[f64; 3]; 3] {
        let (s, c) = self.theta.sin_cos();
        [[c, -s, self.y], [s, c, -self.x], [0.0, 0.0, 1.0]]
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.theta.is_finite()
    }
}

/// `(sin w / w, (1 - cos w) / w)` with series fallback near zero.
fn v_coeffs(w: f64) -> (f64, f64) {
    if w.abs() < 1e-6 {
        let w2 = w * w;
        (1.0 - w2 / 6.0, 0.5 * w - w * w2 / 24.0)
    } else {
        (w.sin() / w, (1.0 - w.cos()) / w)
    }
}

/// Tangent vector of SE(2): translational part first, then rotation.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Twist2 {
    pub vx: f64,
    pub vy: f64,
    pub omega: f64,
}

impl Twist2 {
    pub const fn new(vx: f64, vy: f64, omega: f64) -> Self {
        Self { vx, vy, omega }
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.vx, self.vy, self.omega]
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }
}

/// Inverse of the SE(2) right Jacobian at `xi`, row-major.
pub fn right_jacobian_inv(xi: &Twist2) -> [[f64; 3]; 3] {
    let j = right_jacobian(xi);
    invert3(&j).expect("SE(2) right Jacobian is invertible for |omega| < 2 pi")
}

/// SE(2) right Jacobian: `exp(xi + d) ~= exp(xi) * exp(Jr d)`.
pub fn right_jacobian(xi: &Twist2) -> [[f64; 3]; 3] {
    let (r1, r2, w) = (xi.vx, xi.vy, xi.omega);
    if w.abs() < 1e-6 {
        // first-order expansion
        return [[1.0, 0.5 * w, -0.5 * r2], [-0.5 * w, 1.0, 0.5 * r1], [0.0, 0.0, 1.0]];
    }
    let (s, c) = w.sin_cos();
    let w2 = w * w;
    [
        [s / w, (1.0 - c) / w, (w * r1 - r2 + r2 * c - r1 * s) / w2],
        [(c - 1.0) / w, s / w, (r1 + w * r2 - r1 * c - r2 * s) / w2],
        [0.0, 0.0, 1.0],
    ]
}

pub(crate) fn invert3(m: &[[f64; 3]; 3]) -> Option<[[f64; 3]; 3]> {
    let det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    if det.abs() < 1e-300 {
        return None;
    }
    let inv_det = 1.0 / det;
    let mut out = [[0.0; 3]; 3];
    for (r, row) in out.iter_mut().enumerate() {
        for (c, v) in row.iter_mut().enumerate() {
            let (r1, r2) = ((c + 1) % 3, (c + 2) % 3);
            let (c1, c2) = ((r + 1) % 3, (r + 2) % 3);
            *v = (m[r1][c1] * m[r2][c2] - m[r1][c2] * m[r2][c1]) * inv_det;
        }
    }
    Some(out)
}

/// Planar similarity: `p -> scale * R(rotation) * p + translation`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sim2 {
    pub scale: f64,
    pub rotation: f64,
    pub translation: Vec2,
}

impl Default for Sim2 {
    fn default() -> Self {
        Self::identity()
    }
}

impl Sim2 {
    pub fn new(scale: f64, rotation: f64, translation: Vec2) -> Self {
        debug_assert!(scale > 0.0);
        Self { scale, rotation: wrap_angle(rotation), translation }
    }

    pub const fn identity() -> Self {
        Self { scale: 1.0, rotation: 0.0, translation: Vec2::ZERO }
    }

    pub fn transform(&self, p: Vec2) -> Vec2 {
        p.rotate(self.rotation) * self.scale + self.translation
    }

    pub fn inverse(&self) -> Sim2 {
        let s = 1.0 / self.scale;
        let t = -self.translation.rotate(-self.rotation) * s;
        Sim2::new(s, -self.rotation, t)
    }

    /// `self * other` (apply `other` first).
    pub fn compose(&self, other: &Sim2) -> Sim2 {
        Sim2::new(
            self.scale * other.scale,
            self.rotation + other.rotation,
            self.transform(other.translation),
        )
    }

    /// Maps a pose into the target frame: position through the similarity,
    /// heading offset by the rotation.
    pub fn transform_pose(&self, p: &Pose2) -> Pose2 {
        Pose2::from_parts(self.transform(p.translation()), p.theta() + self.rotation)
    }
}

/// Least-squares similarity with `dst ~= S(src)`, closed form (centroid
/// demeaning + cross-covariance).
pub fn fit_sim2(src: &[Vec2], dst: &[Vec2]) -> Result<Sim2, GeomError> {
    let (mu_s, mu_d, sxx, dot, cross) = cross_moments(src, dst)?;
    let rotation = cross.atan2(dot);
    let scale = dot.hypot(cross) / sxx;
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(GeomError::Degenerate("destination points coincide"));
    }
    let translation = mu_d - mu_s.rotate(rotation) * scale;
    Ok(Sim2::new(scale, rotation, translation))
}

/// Least-squares rigid transform with `dst ~= T(src)`.
pub fn fit_se2(src: &[Vec2], dst: &[Vec2]) -> Result<Pose2, GeomError> {
    let (mu_s, mu_d, _, dot, cross) = cross_moments(src, dst)?;
    let rotation = cross.atan2(dot);
    let t = mu_d - mu_s.rotate(rotation);
    Ok(Pose2::from_parts(t, rotation))
}

fn cross_moments(src: &[Vec2], dst: &[Vec2]) -> Result<(Vec2, Vec2, f64, f64, f64), GeomError> {
    if src.len() != dst.len() {
        return Err(GeomError::LengthMismatch { src: src.len(), dst: dst.len() });
    }
    if src.len() < 2 {
        return Err(GeomError::Degenerate("need at least two point pairs"));
    }
    let n = src.len() as f64;
    let centroid = |pts: &[Vec2]| pts.iter().fold(Vec2::ZERO, |a, &p| a + p) * (1.0 / n);
    let (mu_s, mu_d) = (centroid(src), centroid(dst));
    let (mut sxx, mut dot, mut cross) = (0.0, 0.0, 0.0);
    for (&s, &d) in src.iter().zip(dst) {
        let (s, d) = (s - mu_s, d - mu_d);
        sxx += s.norm_sq();
        dot += s.dot(d);
        cross += s.cross(d);
    }
    let spread = src.iter().map(|p| p.distance(mu_s)).fold(0.0, f64::max);
    if sxx <= 1e-24 || spread <= 1e-12 * (1.0 + mu_s.norm()) {
        return Err(GeomError::Degenerate("source points coincide"));
    }
    Ok((mu_s, mu_d, sxx, dot, cross))
}

/// Pixel on an equirectangular panorama of `w x h` pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphericalPixel {
    pub u: f64,
    pub v: f64,
    pub w: u32,
    pub h: u32,
}

impl SphericalPixel {
    pub fn new(u: f64, v: f64, w: u32, h: u32) -> Self {
        debug_assert!(u >= 0.0 && u < w as f64 && v >= 0.0 && v < h as f64);
        Self { u, v, w, h }
    }

    /// Longitude in `[-pi, pi]` and latitude in `[-pi/2, pi/2]` (positive up).
    pub fn angles(&self) -> (f64, f64) {
        let lon = self.u * TAU / (self.w as f64 - 1.0) - PI;
        let lat = PI * (1.0 - self.v / (self.h as f64 - 1.0)) - 0.5 * PI;
        (lon, lat)
    }

    /// Unit ray `(x, y, z)` with `y` up.
    pub fn ray(&self) -> [f64; 3] {
        let (lon, lat) = self.angles();
        let (sl, cl) = lat.sin_cos();
        let (so, co) = lon.sin_cos();
        [cl * so, sl, cl * co]
    }
}

/// Intersection of a panorama ray with the floor plane `camera_height`
/// below the camera, as a room-frame point `(x, z)` in meters. `None` for
/// rays at or above the horizon.
pub fn pixel_to_floor_point(p: &SphericalPixel, camera_height: f64) -> Option<Vec2> {
    pixel_to_plane_point(p, -camera_height)
}

/// Intersection with the horizontal plane at signed height `plane_y`
/// relative to the camera (negative = below).
pub fn pixel_to_plane_point(p: &SphericalPixel, plane_y: f64) -> Option<Vec2> {
    let [x, y, z] = p.ray();
    if plane_y == 0.0 || y * plane_y <= 0.0 || y.abs() < 1e-12 {
        return None;
    }
    let s = plane_y / y;
    Some(Vec2::new(x * s, z * s))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_2;

    fn assert_pose_eq(a: &Pose2, b: &Pose2, tol: f64) {
        assert_abs_diff_eq!(a.x(), b.x(), epsilon = tol);
        assert_abs_diff_eq!(a.y(), b.y(), epsilon = tol);
        assert!(wrap_angle(a.theta() - b.theta()).abs() <= tol, "{a:?} vs {b:?}");
    }

    #[test]
    fn wrap_angle_range() {
        assert_eq!(wrap_angle(PI), PI);
        assert_eq!(wrap_angle(-PI), PI);
        assert_abs_diff_eq!(wrap_angle(3.0 * PI), PI, epsilon = 1e-12);
        assert_abs_diff_eq!(wrap_angle(-FRAC_PI_2), -FRAC_PI_2);
        assert_abs_diff_eq!(wrap_angle(TAU + 0.25), 0.25, epsilon = 1e-12);
    }

    #[test]
    fn reduce_symmetric_quarter_turn() {
        let q = FRAC_PI_2;
        assert_abs_diff_eq!(reduce_symmetric(0.1, q), 0.1, epsilon = 1e-15);
        assert_abs_diff_eq!(reduce_symmetric(q - 0.1, q), -0.1, epsilon = 1e-12);
        assert_abs_diff_eq!(reduce_symmetric(q / 2.0, q), q / 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(reduce_symmetric(-q / 2.0, q), q / 2.0, epsilon = 1e-15);
    }

    #[test]
    fn compose_examples() {
        let p = Pose2::new(0.3, -1.2, 2.0);
        assert_eq!(Pose2::identity().compose(&p), p);
        let q = Pose2::new(1.0, 0.0, FRAC_PI_2).compose(&Pose2::new(1.0, 0.0, 0.0));
        assert_pose_eq(&q, &Pose2::new(1.0, 1.0, FRAC_PI_2), 1e-12);
    }

    #[test]
    fn between_examples() {
        let p = Pose2::new(0.5, 2.0, -1.0);
        assert_pose_eq(&p.between(&p), &Pose2::identity(), 1e-12);
        assert_pose_eq(&Pose2::identity().between(&p), &p, 1e-12);
        // inverse of (2,0,0) is (-2,0,0); (-2,0,0)*(2,1,pi/2) = (0,1,pi/2)
        let r = Pose2::new(2.0, 0.0, 0.0).between(&Pose2::new(2.0, 1.0, FRAC_PI_2));
        assert_pose_eq(&r, &Pose2::new(0.0, 1.0, FRAC_PI_2), 1e-12);
    }

    #[test]
    fn floor_point_examples() {
        let (w, h) = (1025u32, 513u32);
        let nadir = SphericalPixel::new(100.0, (h - 1) as f64, w, h);
        let p = pixel_to_floor_point(&nadir, 1.7).unwrap();
        assert!(p.norm() < 1e-12);

        let horizon = SphericalPixel::new(100.0, (h - 1) as f64 / 2.0, w, h);
        assert!(pixel_to_floor_point(&horizon, 1.7).is_none());
        let above = SphericalPixel::new(100.0, 10.0, w, h);
        assert!(pixel_to_floor_point(&above, 1.7).is_none());

        // lat = -pi/4  <=>  v/(h-1) = 3/4
        let px = SphericalPixel::new(0.75 * (w - 1) as f64, 0.75 * (h - 1) as f64, w, h);
        let (lon, lat) = px.angles();
        assert_abs_diff_eq!(lon, FRAC_PI_2, epsilon = 1e-12);
        assert_abs_diff_eq!(lat, -PI / 4.0, epsilon = 1e-12);
        let p = pixel_to_floor_point(&px, 1.0).unwrap();
        assert_abs_diff_eq!(p.norm(), 1.0, epsilon = 1e-12);
        // lon = pi/2 lies along the ray x axis
        assert_abs_diff_eq!(p.x, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.y, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn ceiling_point_above_horizon() {
        let px = SphericalPixel::new(10.0, 20.0, 513, 257);
        assert!(pixel_to_plane_point(&px, 1.0).is_some());
        assert!(pixel_to_plane_point(&px, -1.0).is_none());
    }

    #[test]
    fn floor_distance_monotone_toward_horizon() {
        let (w, h) = (1024u32, 512u32);
        let mut last = -1.0;
        for v in ((h / 2)..h).rev() {
            let px = SphericalPixel::new(300.0, v as f64, w, h);
            if let Some(p) = pixel_to_floor_point(&px, 1.5) {
                let d = p.norm();
                assert!(d > last || (d == 0.0 && last < 0.0), "v={v}: {d} <= {last}");
                last = d;
            }
        }
    }

    #[test]
    fn fit_sim2_identity_and_planted() {
        let src = vec![Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.5), Vec2::new(-2.0, 3.0)];
        let s = fit_sim2(&src, &src).unwrap();
        assert_abs_diff_eq!(s.scale, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.rotation, 0.0, epsilon = 1e-12);
        assert!(s.translation.norm() < 1e-12);

        let planted = Sim2::new(2.0, 30f64.to_radians(), Vec2::new(1.0, 2.0));
        let dst: Vec<_> = src.iter().map(|&p| planted.transform(p)).collect();
        let s = fit_sim2(&src, &dst).unwrap();
        assert_abs_diff_eq!(s.scale, 2.0, epsilon = 1e-9);
        assert_abs_diff_eq!(s.rotation, 30f64.to_radians(), epsilon = 1e-9);
        assert_abs_diff_eq!(s.translation.x, 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(s.translation.y, 2.0, epsilon = 1e-9);
        let resid: f64 = src.iter().zip(&dst).map(|(&a, &b)| s.transform(a).distance(b)).sum();
        assert!(resid < 1e-9);
    }

    #[test]
    fn fit_sim2_degenerate() {
        let src = vec![Vec2::new(1.0, 1.0); 4];
        let dst = vec![Vec2::new(0.0, 1.0), Vec2::new(1.0, 1.0), Vec2::new(2.0, 0.0), Vec2::ZERO];
        assert!(matches!(fit_sim2(&src, &dst), Err(GeomError::Degenerate(_))));
        assert!(fit_sim2(&src[..1], &dst[..1]).is_err());
        assert!(matches!(fit_sim2(&src, &dst[..2]), Err(GeomError::LengthMismatch { .. })));
    }

    #[test]
    fn adjoint_matches_conjugation() {
        let t = Pose2::new(0.7, -1.3, 0.9);
        let xi = Twist2::new(0.02, -0.01, 0.015);
        let lhs = t.compose(&Pose2::exp(&xi)).compose(&t.inverse());
        let ad = t.adjoint();
        let a = xi.as_array();
        let mapped: Vec<f64> = (0..3).map(|r| (0..3).map(|c| ad[r][c] * a[c]).sum()).collect();
        let rhs = Pose2::exp(&Twist2::new(mapped[0], mapped[1], mapped[2]));
        assert_pose_eq(&lhs, &rhs, 1e-12);
    }

    #[test]
    fn right_jacobian_finite_difference() {
        let xi = Twist2::new(0.4, -0.7, 1.1);
        let jr = right_jacobian(&xi);
        let base = Pose2::exp(&xi);
        let eps = 1e-6;
        for c in 0..3 {
            let mut d = [0.0; 3];
            d[c] = eps;
            let a = xi.as_array();
            let plus = Pose2::exp(&Twist2::new(a[0] + d[0], a[1] + d[1], a[2] + d[2]));
            let col = base.between(&plus).log().as_array();
            for r in 0..3 {
                assert_abs_diff_eq!(col[r] / eps, jr[r][c], epsilon = 1e-5);
            }
        }
        let inv = right_jacobian_inv(&xi);
        for r in 0..3 {
            for c in 0..3 {
                let v: f64 = (0..3).map(|k| jr[r][k] * inv[k][c]).sum();
                assert_abs_diff_eq!(v, if r == c { 1.0 } else { 0.0 }, epsilon = 1e-12);
            }
        }
    }

    fn pose_strategy() -> impl Strategy<Value = Pose2> {
        (-50.0..50.0f64, -50.0..50.0f64, -PI..PI).prop_map(|(x, y, t)| Pose2::new(x, y, t))
    }

    proptest! {
        #[test]
        fn group_axioms(a in pose_strategy(), b in pose_strategy(), c in pose_strategy()) {
            let l = a.compose(&b).compose(&c);
            let r = a.compose(&b.compose(&c));
            prop_assert!((l.x() - r.x()).abs() < 1e-12 * 100.0);
            prop_assert!((l.y() - r.y()).abs() < 1e-12 * 100.0);
            prop_assert!(wrap_angle(l.theta() - r.theta()).abs() < 1e-12);
            let e = a.compose(&a.inverse());
            prop_assert!(e.translation().norm() < 1e-12 * 100.0);
            prop_assert!(e.theta().abs() < 1e-12);
            prop_assert!(a.theta() > -PI && a.theta() <= PI);
            prop_assert_eq!(Pose2::identity().compose(&a), a);
        }

        #[test]
        fn exp_log_roundtrip(x in -10.0..10.0f64, y in -10.0..10.0f64, t in (-PI + 1e-6)..(PI - 1e-6)) {
            let p = Pose2::new(x, y, t);
            let q = Pose2::exp(&p.log());
            prop_assert!((p.x() - q.x()).abs() < 1e-9);
            prop_assert!((p.y() - q.y()).abs() < 1e-9);
            prop_assert!(wrap_angle(p.theta() - q.theta()).abs() < 1e-9);
        }

        #[test]
        fn sim2_inverse_roundtrip(s in 0.1..10.0f64, r in -PI..PI, tx in -5.0..5.0f64, ty in -5.0..5.0f64,
                                 px in -20.0..20.0f64, py in -20.0..20.0f64) {
            let sim = Sim2::new(s, r, Vec2::new(tx, ty));
            let p = Vec2::new(px, py);
            prop_assert!(sim.inverse().transform(sim.transform(p)).distance(p) < 1e-9);
        }

        #[test]
        fn fit_sim2_recovers_planted(s in 0.2..5.0f64, r in -3.0..3.0f64, tx in -5.0..5.0f64, ty in -5.0..5.0f64,
                                     pts in prop::collection::vec((-10.0..10.0f64, -10.0..10.0f64), 3..20)) {
            let src: Vec<Vec2> = pts.iter().map(|&(x, y)| Vec2::new(x, y)).collect();
            let spread = src.iter().map(|p| p.distance(src[0])).fold(0.0, f64::max);
            prop_assume!(spread > 1e-3);
            let planted = Sim2::new(s, r, Vec2::new(tx, ty));
            let dst: Vec<Vec2> = src.iter().map(|&p| planted.transform(p)).collect();
            let fit = fit_sim2(&src, &dst).unwrap();
            for (&a, &b) in src.iter().zip(&dst) {
                prop_assert!(fit.transform(a).distance(b) < 1e-9 * (1.0 + b.norm()));
            }
        }
    }
}
