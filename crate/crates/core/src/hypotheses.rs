//! Pairwise relative-pose hypotheses from matched windows, doors and
//! openings, and their vanishing-angle axis alignment.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::geom::{fit_se2, reduce_symmetric, Pose2, Vec2};
use crate::par;
use crate::scene::{PanoId, PanoramaRecord, WdoDetection, WdoKind};

/// Which endpoint correspondence produced the hypothesis: `Identity` maps
/// `e1 -> e1`, `Rotated` maps `e1 -> e2` (the extra half turn).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Configuration {
    Identity,
    Rotated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentHypothesis {
    pub pano_i: PanoId,
    pub pano_j: PanoId,
    pub wdo_i: usize,
    pub wdo_j: usize,
    pub kind: WdoKind,
    pub configuration: Configuration,
    /// Pose of panorama `j` in panorama `i`'s frame.
    pub i_t_j: Pose2,
    pub axis_aligned: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HypothesisSet {
    pub pair: (PanoId, PanoId),
    pub hypotheses: Vec<AlignmentHypothesis>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HypothesisOptions {
    /// Accepted interval for `min(w1, w2) / max(w1, w2)`.
    pub width_ratio_min: f64,
    pub width_ratio_max: f64,
    /// Windows only pair in the configuration where both panoramas see the
    /// window from the same side (transformed interior normals agree). When
    /// false, only the opposite-side configuration is kept instead.
    pub window_same_room: bool,
    /// Poses closer than this in every component count as duplicates.
    pub dedup_tol: f64,
}

impl Default for HypothesisOptions {
    fn default() -> Self {
        Self { width_ratio_min: 0.65, width_ratio_max: 1.0, window_same_room: true, dedup_tol: 1e-6 }
    }
}

impl HypothesisOptions {
    pub fn widths_compatible(&self, w1: f64, w2: f64) -> bool {
        let ratio = w1.min(w2) / w1.max(w2);
        ratio >= self.width_ratio_min && ratio <= self.width_ratio_max
    }
}

/// Relative pose placing `src` onto `dst`: segment centers coincide and
/// the directions `src.e1 -> src.e2` and `dst` (possibly reversed) agree.
pub fn segment_alignment(dst: &WdoDetection, src: &WdoDetection, configuration: Configuration) -> Pose2 {
    let d_dst = dst.endpoints[1] - dst.endpoints[0];
    let d_dst = match configuration {
        Configuration::Identity => d_dst,
        Configuration::Rotated => -d_dst,
    };
    let d_src = src.endpoints[1] - src.endpoints[0];
    let alpha = d_dst.angle() - d_src.angle();
    let t = dst.midpoint() - src.midpoint().rotate(alpha);
    Pose2::from_parts(t, alpha)
}

fn same_pose(a: &Pose2, b: &Pose2, tol: f64) -> bool {
    (a.x() - b.x()).abs() <= tol
        && (a.y() - b.y()).abs() <= tol
        && crate::geom::wrap_angle(a.theta() - b.theta()).abs() <= tol
}

/// Enumerates hypotheses for the ordered pair `(a, b)`; poses are `a_T_b`.
pub fn generate_hypotheses(a: &PanoramaRecord, b: &PanoramaRecord, opts: &HypothesisOptions) -> HypothesisSet {
    let mut hypotheses: Vec<AlignmentHypothesis> = Vec::new();
    for (wi, da) in a.wdos.iter().enumerate() {
        for (wj, db) in b.wdos.iter().enumerate() {
            if da.kind != db.kind || !opts.widths_compatible(da.width(), db.width()) {
                continue;
            }
            for configuration in [Configuration::Identity, Configuration::Rotated] {
                let pose = segment_alignment(da, db, configuration);
                if da.kind == WdoKind::Window {
                    let agree = da.interior_normal.dot(pose.rotate_vector(db.interior_normal)) > 0.0;
                    if agree != opts.window_same_room {
                        continue;
                    }
                }
                if hypotheses.iter().any(|h| same_pose(&h.i_t_j, &pose, opts.dedup_tol)) {
                    continue;
                }
                hypotheses.push(AlignmentHypothesis {
                    pano_i: a.id,
                    pano_j: b.id,
                    wdo_i: wi,
                    wdo_j: wj,
                    kind: da.kind,
                    configuration,
                    i_t_j: pose,
                    axis_aligned: false,
                });
            }
        }
    }
    HypothesisSet { pair: (a.id, b.id), hypotheses }
}

/// Hypotheses for every unordered pair `(i, j)`, `i` before `j` in input
/// order. Pairs without hypotheses are omitted.
pub fn generate_all(panos: &[PanoramaRecord], opts: &HypothesisOptions) -> Vec<HypothesisSet> {
    let pairs: Vec<(usize, usize)> =
        (0..panos.len()).flat_map(|i| ((i + 1)..panos.len()).map(move |j| (i, j))).collect();
    par::map(&pairs, |&(i, j)| generate_hypotheses(&panos[i], &panos[j], opts))
        .into_iter()
        .filter(|s| !s.hypotheses.is_empty())
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AxisAlignOptions {
    pub max_correction_deg: f64,
}

impl Default for AxisAlignOptions {
    fn default() -> Self {
        Self { max_correction_deg: 15.0 }
    }
}

/// Rotation that would make the hypothesis agree with both panoramas'
/// vanishing angles, reduced to `(-45, 45]` degrees (in radians).
pub fn axis_correction(h: &AlignmentHypothesis, a: &PanoramaRecord, b: &PanoramaRecord) -> f64 {
    reduce_symmetric((b.vanishing_angle - a.vanishing_angle) - h.i_t_j.theta(), FRAC_PI_2)
}

/// Corrects the relative rotation of `h` (poses `a_T_b`) by the vanishing
/// angle difference when the correction is within the cap: `b`'s contour,
/// expressed in `a`'s frame, is rotated about the matched W/D/O midpoint
/// and the pose is re-fitted to the rotated points.
pub fn axis_align(
    h: &AlignmentHypothesis,
    a: &PanoramaRecord,
    b: &PanoramaRecord,
    opts: &AxisAlignOptions,
) -> AlignmentHypothesis {
    debug_assert_eq!((h.pano_i, h.pano_j), (a.id, b.id));
    let correction = axis_correction(h, a, b);
    if correction.abs() > opts.max_correction_deg.to_radians() {
        return AlignmentHypothesis { axis_aligned: false, ..h.clone() };
    }
    let pivot = a.wdos[h.wdo_i].midpoint();
    let mut src: Vec<Vec2> = b.contour.vertices.clone();
    src.extend_from_slice(&b.wdos[h.wdo_j].endpoints);
    let dst: Vec<Vec2> =
        src.iter().map(|&p| pivot + (h.i_t_j.transform_point(p) - pivot).rotate(correction)).collect();
    let pose = fit_se2(&src, &dst).expect("contour points are not coincident");
    AlignmentHypothesis { i_t_j: pose, axis_aligned: true, ..h.clone() }
}
