//! Evaluation: similarity alignment of estimated to ground-truth poses,
//! pose error statistics, localization rate and component distributions.

use std::collections::BTreeMap;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{fit_sim2, wrap_angle, Pose2, Sim2, Vec2};
use crate::par;
use crate::scene::PanoId;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("need at least 2 poses with ground truth, got {0}")]
    TooFewPoses(usize),
    #[error("no poses to evaluate")]
    Empty,
    #[error("invalid ransac config: {0}")]
    Config(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RansacConfig {
    pub n_hypotheses: usize,
    /// Fraction of the estimated poses drawn per hypothesis (rounded up).
    pub subset_frac: f64,
    /// Position residual in ground-truth meters below which a pose is an
    /// inlier.
    pub inlier_threshold: f64,
    pub seed: u64,
}

impl Default for RansacConfig {
    fn default() -> Self {
        Self { n_hypotheses: 1000, subset_frac: 2.0 / 3.0, inlier_threshold: 0.2, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RansacResult {
    pub transform: Sim2,
    pub inliers: Vec<PanoId>,
}

fn subset_size(m: usize, frac: f64) -> usize {
    ((m as f64 * frac).ceil() as usize).clamp(2, m)
}

/// RANSAC over similarity fits of estimated to ground-truth positions.
/// Hypothesis `k` draws its subset from its own stream seeded by
/// `(seed, k)`, so results do not depend on evaluation order. The best
/// hypothesis has the most inliers (ties: lowest index) and the final
/// transform is refitted on its inliers.
pub fn align_ransac(
    est: &BTreeMap<PanoId, Pose2>,
    gt: &BTreeMap<PanoId, Pose2>,
    cfg: &RansacConfig,
) -> Result<RansacResult, EvalError> {
    if cfg.n_hypotheses == 0 || !(cfg.subset_frac > 0.0 && cfg.subset_frac <= 1.0) {
        return Err(EvalError::Config("need at least one hypothesis and subset_frac in (0, 1]"));
    }
    let ids: Vec<PanoId> = est.keys().filter(|id| gt.contains_key(id)).copied().collect();
    let m = ids.len();
    if m < 2 {
        return Err(EvalError::TooFewPoses(m));
    }
    let src: Vec<Vec2> = ids.iter().map(|id| est[id].translation()).collect();
    let dst: Vec<Vec2> = ids.iter().map(|id| gt[id].translation()).collect();
    let k = subset_size(m, cfg.subset_frac);
    let inliers_of = |s: &Sim2| -> Vec<usize> {
        (0..m).filter(|&i| s.transform(src[i]).distance(dst[i]) < cfg.inlier_threshold).collect()
    };
    let counts = par::map_range(cfg.n_hypotheses, |h| {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ (h as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let mut idx = sample(&mut rng, m, k).into_vec();
        idx.sort_unstable();
        let s: Vec<Vec2> = idx.iter().map(|&i| src[i]).collect();
        let d: Vec<Vec2> = idx.iter().map(|&i| dst[i]).collect();
        fit_sim2(&s, &d).ok().map(|fit| (inliers_of(&fit).len(), fit))
    });
    let mut best: Option<(usize, Sim2)> = None;
    for (count, fit) in counts.into_iter().flatten() {
        if best.is_none_or(|(c, _)| count > c) {
            best = Some((count, fit));
        }
    }
    let Some((_, mut transform)) = best else {
        // every subset was degenerate; fall back to all points
        let fit = fit_sim2(&src, &dst).map_err(|_| EvalError::TooFewPoses(m))?;
        return Ok(RansacResult { inliers: inliers_of(&fit).iter().map(|&i| ids[i]).collect(), transform: fit });
    };
    let mut inl = inliers_of(&transform);
    if inl.len() >= 2 {
        let s: Vec<Vec2> = inl.iter().map(|&i| src[i]).collect();
        let d: Vec<Vec2> = inl.iter().map(|&i| dst[i]).collect();
        if let Ok(refit) = fit_sim2(&s, &d) {
            transform = refit;
            inl = inliers_of(&transform);
        }
    }
    Ok(RansacResult { transform, inliers: inl.into_iter().map(|i| ids[i]).collect() })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoseError {
    pub id: PanoId,
    pub rotation_deg: f64,
    pub translation_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoseErrorStats {
    pub per_pano: Vec<PoseError>,
    pub rotation_mean_deg: f64,
    pub rotation_median_deg: f64,
    pub translation_mean_m: f64,
    pub translation_median_m: f64,
}

/// Median; the mean of the two middle values for even counts.
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Per-panorama errors of `s`-aligned estimates against ground truth over
/// the panoramas present in both maps.
pub fn pose_errors(
    est: &BTreeMap<PanoId, Pose2>,
    gt: &BTreeMap<PanoId, Pose2>,
    s: &Sim2,
) -> Result<PoseErrorStats, EvalError> {
    let per_pano: Vec<PoseError> = est
        .iter()
        .filter_map(|(id, p)| {
            let g = gt.get(id)?;
            let a = s.transform_pose(p);
            Some(PoseError {
                id: *id,
                rotation_deg: wrap_angle(a.theta() - g.theta()).abs().to_degrees(),
                translation_m: a.translation().distance(g.translation()),
            })
        })
        .collect();
    if per_pano.is_empty() {
        return Err(EvalError::Empty);
    }
    let rot: Vec<f64> = per_pano.iter().map(|e| e.rotation_deg).collect();
    let tr: Vec<f64> = per_pano.iter().map(|e| e.translation_m).collect();
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    Ok(PoseErrorStats {
        rotation_mean_deg: mean(&rot),
        rotation_median_deg: median(&rot),
        translation_mean_m: mean(&tr),
        translation_median_m: median(&tr),
        per_pano,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CcDistribution {
    /// Fraction of all panoramas in the component of each rank.
    pub pdf: Vec<f64>,
    pub cdf: Vec<f64>,
}

/// Component size fractions, components given largest first.
pub fn cc_distribution(component_sizes: &[usize], total_panos: usize) -> CcDistribution {
    let pdf: Vec<f64> =
        component_sizes.iter().map(|&s| if total_panos == 0 { 0.0 } else { s as f64 / total_panos as f64 }).collect();
    let mut acc = 0.0;
    let cdf = pdf
        .iter()
        .map(|p| {
            acc += p;
            acc
        })
        .collect();
    CcDistribution { pdf, cdf }
}

/// Element-wise average of distributions, shorter ones padded: the PDF
/// with zeros, the CDF with its last value.
pub fn average_distributions(runs: &[CcDistribution]) -> CcDistribution {
    let len = runs.iter().map(|r| r.pdf.len()).max().unwrap_or(0);
    let n = runs.len().max(1) as f64;
    let mut pdf = vec![0.0; len];
    let mut cdf = vec![0.0; len];
    for r in runs {
        for k in 0..len {
            pdf[k] += r.pdf.get(k).copied().unwrap_or(0.0);
            cdf[k] += r.cdf.get(k).or(r.cdf.last()).copied().unwrap_or(0.0);
        }
    }
    pdf.iter_mut().chain(cdf.iter_mut()).for_each(|v| *v /= n);
    CcDistribution { pdf, cdf }
}

/// Percentage of panoramas in the largest component.
pub fn localization_pct(largest_component: usize, total_panos: usize) -> f64 {
    if total_panos == 0 {
        0.0
    } else {
        largest_component as f64 / total_panos as f64 * 100.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub n_panos: usize,
    pub n_localized: usize,
    pub localization_pct: f64,
    pub rotation_mean_deg: f64,
    pub rotation_median_deg: f64,
    pub translation_mean_m: f64,
    pub translation_median_m: f64,
    pub floorplan_iou: f64,
    pub cc_histogram: Vec<f64>,
    pub cc_cdf: Vec<f64>,
    pub alignment: Option<Sim2>,
    pub ransac_inliers: usize,
    pub per_pano: Vec<PoseError>,
}

impl EvalReport {
    /// Report for a run that localized nothing.
    pub fn empty(n_panos: usize, cc_sizes: &[usize]) -> Self {
        let cc = cc_distribution(cc_sizes, n_panos);
        Self {
            n_panos,
            n_localized: 0,
            localization_pct: 0.0,
            rotation_mean_deg: 0.0,
            rotation_median_deg: 0.0,
            translation_mean_m: 0.0,
            translation_median_m: 0.0,
            floorplan_iou: 0.0,
            cc_histogram: cc.pdf,
            cc_cdf: cc.cdf,
            alignment: None,
            ransac_inliers: 0,
            per_pano: vec![],
        }
    }
}

/// Aligns `est` to `gt` and fills a report. `cc_sizes` are the component
/// sizes of the verified-edge graph, largest first; `est` covers the
/// reconstructed (largest) component.
pub fn evaluate(
    est: &BTreeMap<PanoId, Pose2>,
    gt: &BTreeMap<PanoId, Pose2>,
    cc_sizes: &[usize],
    floorplan_iou: f64,
    cfg: &RansacConfig,
) -> Result<EvalReport, EvalError> {
    let n_panos = gt.len();
    let mut report = EvalReport::empty(n_panos, cc_sizes);
    report.floorplan_iou = floorplan_iou;
    let localized = est.keys().filter(|id| gt.contains_key(id)).count();
    if localized == 0 {
        return Ok(report);
    }
    report.n_localized = localized;
    report.localization_pct = localization_pct(localized, n_panos);
    let s = if localized >= 2 {
        let r = align_ransac(est, gt, cfg)?;
        report.ransac_inliers = r.inliers.len();
        r.transform
    } else {
        // a lone pose: align it onto its ground truth
        let (id, p) = est.iter().find(|(id, _)| gt.contains_key(id)).unwrap();
        let g = gt[id];
        let rot = g.theta() - p.theta();
        report.ransac_inliers = 1;
        Sim2::new(1.0, rot, g.translation() - p.translation().rotate(rot))
    };
    let stats = pose_errors(est, gt, &s)?;
    report.alignment = Some(s);
    report.rotation_mean_deg = stats.rotation_mean_deg;
    report.rotation_median_deg = stats.rotation_median_deg;
    report.translation_mean_m = stats.translation_mean_m;
    report.translation_median_m = stats.translation_median_m;
    report.per_pano = stats.per_pano;
    Ok(report)
}
