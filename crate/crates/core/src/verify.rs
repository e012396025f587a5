//! Hypothesis verification: a scorer maps an alignment hypothesis to a
//! plausibility score and a threshold turns it into accept/reject.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bev::{densify, render_bev, BevConfig, BevGrid, ProceduralTexture, ReliabilityMask, Surface};
use crate::geom::{wrap_angle, Pose2, Vec2};
use crate::hypotheses::{AlignmentHypothesis, HypothesisSet};
use crate::par;
use crate::scene::{PanoId, PanoramaRecord, WdoKind};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VerifyError {
    #[error("panorama {0} has no ground-truth pose")]
    MissingGroundTruth(PanoId),
    #[error("panorama {0} is unknown to the verifier")]
    UnknownPanorama(PanoId),
    #[error("invalid verifier config: {0}")]
    Config(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VerifierSource {
    Oracle,
    Xcorr,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerifierDecision {
    pub score: f64,
    pub accept: bool,
    pub source: VerifierSource,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VerifierConfig {
    /// Score threshold for the oracle verifier (and any learned scorer).
    pub accept_threshold: f64,
    /// Rotation tolerance for doors and windows, degrees.
    pub rot_tol_wd: f64,
    /// Rotation tolerance for openings, degrees.
    pub rot_tol_opening: f64,
    /// L-infinity translation tolerance in units of camera height.
    pub trans_tol_linf: f64,
    /// Score threshold for the cross-correlation verifier.
    pub xcorr_threshold: f64,
    /// Fewer jointly reliable cells than this counts as no overlap.
    pub xcorr_min_overlap: usize,
}

impl Default for VerifierConfig {
    fn default() -> Self {
        Self {
            accept_threshold: 0.93,
            rot_tol_wd: 7.0,
            rot_tol_opening: 9.0,
            trans_tol_linf: 0.35,
            xcorr_threshold: 0.8,
            xcorr_min_overlap: 50,
        }
    }
}

impl VerifierConfig {
    pub fn validate(&self) -> Result<(), VerifyError> {
        if !(self.rot_tol_wd > 0.0 && self.rot_tol_opening > 0.0 && self.trans_tol_linf > 0.0) {
            return Err(VerifyError::Config("tolerances must be positive"));
        }
        if self.accept_threshold.is_nan() || self.xcorr_threshold.is_nan() {
            return Err(VerifyError::Config("thresholds must be numbers"));
        }
        Ok(())
    }

    fn decide(&self, score: f64, source: VerifierSource) -> VerifierDecision {
        let threshold = match source {
            VerifierSource::Oracle => self.accept_threshold,
            VerifierSource::Xcorr => self.xcorr_threshold,
        };
        VerifierDecision { score, accept: score >= threshold, source }
    }
}

pub trait Verifier: Sync {
    fn verify(&self, h: &AlignmentHypothesis, cfg: &VerifierConfig) -> Result<VerifierDecision, VerifyError>;
}

/// Scores 1 when the hypothesis agrees with the ground-truth relative pose
/// within the rotation tolerance for its kind and the translation
/// tolerance (L-infinity, divided by the camera height), else 0.
pub fn oracle_verify(
    h: &AlignmentHypothesis,
    gt_i: &Pose2,
    gt_j: &Pose2,
    camera_height: f64,
    cfg: &VerifierConfig,
) -> VerifierDecision {
    let gt = gt_i.between(gt_j);
    let dtheta = wrap_angle(h.i_t_j.theta() - gt.theta()).abs().to_degrees();
    let rot_tol = match h.kind {
        WdoKind::Opening => cfg.rot_tol_opening,
        WdoKind::Door | WdoKind::Window => cfg.rot_tol_wd,
    };
    let dt = h.i_t_j.translation() - gt.translation();
    let linf = dt.x.abs().max(dt.y.abs()) / camera_height;
    let ok = dtheta < rot_tol && linf < cfg.trans_tol_linf;
    cfg.decide(if ok { 1.0 } else { 0.0 }, VerifierSource::Oracle)
}

/// Ground-truth poses and camera heights per panorama.
#[derive(Debug, Clone, Default)]
pub struct OracleVerifier {
    gt: BTreeMap<PanoId, (Option<Pose2>, f64)>,
}

impl OracleVerifier {
    pub fn new(panos: &[PanoramaRecord]) -> Self {
        Self { gt: panos.iter().map(|p| (p.id, (p.gt_pose, p.camera_height))).collect() }
    }

    fn lookup(&self, id: PanoId) -> Result<(Pose2, f64), VerifyError> {
        match self.gt.get(&id) {
            None => Err(VerifyError::UnknownPanorama(id)),
            Some((None, _)) => Err(VerifyError::MissingGroundTruth(id)),
            Some(&(Some(p), h)) => Ok((p, h)),
        }
    }
}

impl Verifier for OracleVerifier {
    fn verify(&self, h: &AlignmentHypothesis, cfg: &VerifierConfig) -> Result<VerifierDecision, VerifyError> {
        let (gi, height) = self.lookup(h.pano_i)?;
        let (gj, _) = self.lookup(h.pano_j)?;
        Ok(oracle_verify(h, &gi, &gj, height, cfg))
    }
}

/// Densified floor or ceiling raster with its reliability mask.
#[derive(Debug, Clone)]
pub struct MaskedBev {
    pub grid: BevGrid,
    pub mask: ReliabilityMask,
}

#[derive(Debug, Clone)]
pub struct PanoBev {
    pub floor: MaskedBev,
    pub ceiling: MaskedBev,
}

impl PanoBev {
    /// Renders and densifies both surfaces. `world` positions the camera
    /// for texture lookup; texture is a property of the scene, so the same
    /// world point looks the same from every camera.
    pub fn render(p: &PanoramaRecord, world: &Pose2, texture: &ProceduralTexture, cfg: &BevConfig, kernel: usize) -> Self {
        let ceiling_tex = ProceduralTexture::new(texture.seed ^ 0x5bd1_e995);
        let masked = |surface, tex: &ProceduralTexture| {
            let (grid, mask) = densify(&render_bev(p, world, surface, |q| tex.sample(q), cfg), kernel);
            MaskedBev { grid, mask }
        };
        Self { floor: masked(Surface::Floor, texture), ceiling: masked(Surface::Ceiling, &ceiling_tex) }
    }
}

/// Normalized cross-correlation between `a` and `b` warped into `a`'s frame
/// by `pose`, over cells reliable in both; `None` when the overlap is
/// smaller than `min_overlap` or either side is constant.
fn directed_ncc(a: &MaskedBev, b: &MaskedBev, pose: &Pose2, min_overlap: usize) -> Option<f64> {
    let (ga, gb) = (&a.grid, &b.grid);
    let mut pairs: Vec<(f64, f64)> = Vec::new();
    for r in 0..ga.size {
        for c in 0..ga.size {
            if !a.mask.get(c, r) {
                continue;
            }
            let q: Vec2 = pose.inverse_transform_point(ga.cell_center(c, r));
            if let Some((cb, rb)) = gb.cell_of(q) {
                if b.mask.get(cb, rb) {
                    pairs.push((ga.intensity[ga.index(c, r)] as f64, gb.intensity[gb.index(cb, rb)] as f64));
                }
            }
        }
    }
    if pairs.len() < min_overlap.max(1) {
        return None;
    }
    let n = pairs.len() as f64;
    let (ma, mb) = pairs.iter().fold((0.0, 0.0), |(x, y), &(p, q)| (x + p / n, y + q / n));
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for &(p, q) in &pairs {
        sab += (p - ma) * (q - mb);
        saa += (p - ma) * (p - ma);
        sbb += (q - mb) * (q - mb);
    }
    let denom = (saa * sbb).sqrt();
    (denom > 1e-12).then(|| sab / denom)
}

/// Symmetrized zero-offset cross-correlation score in `[0, 1]` for `b`
/// posed at `i_t_j` relative to `a`, averaged over floor and ceiling.
pub fn xcorr_score(a: &PanoBev, b: &PanoBev, i_t_j: &Pose2, min_overlap: usize) -> f64 {
    let inv = i_t_j.inverse();
    let surface = |sa: &MaskedBev, sb: &MaskedBev| {
        let fwd = directed_ncc(sa, sb, i_t_j, min_overlap).unwrap_or(0.0);
        let bwd = directed_ncc(sb, sa, &inv, min_overlap).unwrap_or(0.0);
        0.5 * (fwd + bwd)
    };
    let s = 0.5 * (surface(&a.floor, &b.floor) + surface(&a.ceiling, &b.ceiling));
    s.clamp(0.0, 1.0)
}

pub fn xcorr_verify(h: &AlignmentHypothesis, a: &PanoBev, b: &PanoBev, cfg: &VerifierConfig) -> VerifierDecision {
    cfg.decide(xcorr_score(a, b, &h.i_t_j, cfg.xcorr_min_overlap), VerifierSource::Xcorr)
}

/// Cross-correlation verifier over pre-rendered rasters.
#[derive(Debug, Clone, Default)]
pub struct XcorrVerifier {
    pub bevs: BTreeMap<PanoId, PanoBev>,
}

impl XcorrVerifier {
    /// Renders every panorama at its ground-truth placement (identity when
    /// absent) under a shared texture.
    pub fn render(panos: &[PanoramaRecord], texture_seed: u64, cfg: &BevConfig, kernel: usize) -> Self {
        let texture = ProceduralTexture::new(texture_seed);
        let bevs = par::map(panos, |p| {
            (p.id, PanoBev::render(p, &p.gt_pose.unwrap_or_else(Pose2::identity), &texture, cfg, kernel))
        });
        Self { bevs: bevs.into_iter().collect() }
    }
}

impl Verifier for XcorrVerifier {
    fn verify(&self, h: &AlignmentHypothesis, cfg: &VerifierConfig) -> Result<VerifierDecision, VerifyError> {
        let a = self.bevs.get(&h.pano_i).ok_or(VerifyError::UnknownPanorama(h.pano_i))?;
        let b = self.bevs.get(&h.pano_j).ok_or(VerifyError::UnknownPanorama(h.pano_j))?;
        Ok(xcorr_verify(h, a, b, cfg))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifiedHypothesis {
    pub hypothesis: AlignmentHypothesis,
    pub decision: VerifierDecision,
}

/// Scores every hypothesis; returns the accepted ones in input order.
pub fn verify_all(
    sets: &[HypothesisSet],
    verifier: &dyn Verifier,
    cfg: &VerifierConfig,
) -> Result<Vec<VerifiedHypothesis>, VerifyError> {
    cfg.validate()?;
    let flat: Vec<&AlignmentHypothesis> = sets.iter().flat_map(|s| &s.hypotheses).collect();
    let decisions = par::map(&flat, |h| verifier.verify(h, cfg));
    let mut out = Vec::new();
    for (h, d) in flat.into_iter().zip(decisions) {
        let decision = d?;
        if decision.accept {
            out.push(VerifiedHypothesis { hypothesis: h.clone(), decision });
        }
    }
    Ok(out)
}
