use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use image::ExtendedColorType;
use panoplan_core::bev::{BevGrid, ProceduralTexture};
use panoplan_core::eval::{evaluate, EvalReport};
use panoplan_core::floorplan::{floorplan_iou, floorplan_svg, rasterize_labeled, stitch, transform_groups, RoomGroup};
use panoplan_core::geom::Pose2;
use panoplan_core::pipeline::{reconstruct, RunStatus, StageTiming};
use panoplan_core::posegraph::dump_graph;
use panoplan_core::scene::{generate_synthetic_home, load_scene, perturb, save_scene, PanoId, Scene, WdoKind};
use panoplan_core::verify::MaskedBev;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::artifacts::{cc_histogram_png, floorplan_png, read_json, write_atomic, write_json, write_png};
use crate::config::{hex, Config};
use crate::error::CliError;

pub const POSES_FILE: &str = "poses.json";
pub const ROOMS_FILE: &str = "rooms.json";
pub const GRAPH_FILE: &str = "graph.txt";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const REPORT_FILE: &str = "report.json";

/// Pixels per floorplan cell in written images.
const PNG_SCALE: usize = 4;

#[derive(Debug, Serialize, Deserialize)]
pub struct PosesFile {
    pub status: RunStatus,
    /// Components of the verified-edge graph, largest first.
    pub components: Vec<Vec<PanoId>>,
    pub poses: BTreeMap<PanoId, Pose2>,
}

#[derive(Debug, Serialize)]
struct SceneRef {
    path: String,
    sha256: String,
}

#[derive(Debug, Serialize)]
struct Manifest {
    command: &'static str,
    tool_version: &'static str,
    config_hash: String,
    config: serde_json::Value,
    scene: SceneRef,
    status: RunStatus,
    n_panos: usize,
    n_hypotheses: usize,
    n_accepted: usize,
    component_sizes: Vec<usize>,
    spanning_tree_cost: f64,
    final_cost: f64,
    optimizer_iterations: usize,
    timings: Vec<StageTiming>,
    outputs: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ReportFile {
    pub config_hash: String,
    pub metrics: EvalReport,
}

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))
}

fn scene_ref(path: &Path) -> Result<SceneRef, CliError> {
    let bytes = std::fs::read(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    Ok(SceneRef { path: path.display().to_string(), sha256: hex(&Sha256::digest(&bytes)) })
}

pub fn generate(cfg: &Config, out: &Path) -> Result<String, CliError> {
    let mut scene = generate_synthetic_home(&cfg.generate)?;
    if !cfg.noise.is_zero() {
        let spec = cfg.noise.spec();
        spec.validate()?;
        scene = perturb(&scene, &spec);
    }
    save_scene(&scene, out)?;
    let rooms = scene.gt_floorplan.as_ref().map_or(0, Vec::len);
    Ok(format!(
        "wrote {}: {rooms} room outlines, {} panoramas, {} windows, {} doors, {} openings",
        out.display(),
        scene.panoramas.len(),
        scene.wdo_count(WdoKind::Window),
        scene.wdo_count(WdoKind::Door),
        scene.wdo_count(WdoKind::Opening),
    ))
}

pub fn reconstruct_cmd(cfg: &Config, scene_path: &Path, out_dir: &Path) -> Result<String, CliError> {
    let scene = load_scene(scene_path)?;
    let rec = reconstruct(&scene, &cfg.pipeline)?;
    ensure_dir(out_dir)?;

    let poses = PosesFile { status: rec.status, components: rec.components.clone(), poses: rec.poses.clone() };
    write_json(&out_dir.join(POSES_FILE), &poses)?;
    write_json(&out_dir.join(ROOMS_FILE), &rec.groups)?;
    write_atomic(&out_dir.join(GRAPH_FILE), dump_graph(&rec.graph, Some(&rec.poses)).as_bytes())?;
    write_atomic(&out_dir.join("floorplan.png"), &floorplan_png(&rec.raster, PNG_SCALE))?;
    write_atomic(&out_dir.join("floorplan.svg"), floorplan_svg(&rec.groups, &rec.poses, &scene.panoramas).as_bytes())?;

    let outputs = [POSES_FILE, ROOMS_FILE, GRAPH_FILE, "floorplan.png", "floorplan.svg"].map(String::from).to_vec();
    let manifest = Manifest {
        command: "reconstruct",
        tool_version: env!("CARGO_PKG_VERSION"),
        config_hash: cfg.hash(),
        config: serde_json::to_value(cfg).expect("config serializes"),
        scene: scene_ref(scene_path)?,
        status: rec.status,
        n_panos: scene.panoramas.len(),
        n_hypotheses: rec.n_hypotheses,
        n_accepted: rec.accepted.len(),
        component_sizes: rec.components.iter().map(Vec::len).collect(),
        spanning_tree_cost: rec.spanning_tree_cost,
        final_cost: rec.final_cost,
        optimizer_iterations: rec.optimizer_iterations,
        timings: rec.timings.clone(),
        outputs,
    };
    write_json(&out_dir.join(MANIFEST_FILE), &manifest)?;

    Ok(match rec.status {
        RunStatus::Ok => format!(
            "localized {}/{} panoramas in {} rooms; cost {:.6} -> {:.6}",
            rec.poses.len(),
            scene.panoramas.len(),
            rec.groups.len(),
            rec.spanning_tree_cost,
            rec.final_cost
        ),
        RunStatus::EmptyLargestComponent => {
            "warning: no two panoramas were connected by a verified edge; wrote an empty floorplan".to_string()
        }
    })
}

/// Ground-truth poses and room polygons.
type GroundTruth = (BTreeMap<PanoId, Pose2>, Vec<Vec<panoplan_core::Vec2>>);

fn require_gt(scene: &Scene) -> Result<GroundTruth, CliError> {
    let gt = scene.gt_poses();
    match &scene.gt_floorplan {
        Some(fp) if gt.len() == scene.panoramas.len() => Ok((gt, fp.clone())),
        _ => Err(CliError::Io("scene lacks ground-truth poses or floorplan".into())),
    }
}

pub fn evaluate_cmd(
    cfg: &Config,
    scene_path: &Path,
    recon_dir: &Path,
    out: Option<&Path>,
    histogram: Option<&Path>,
) -> Result<String, CliError> {
    let scene = load_scene(scene_path)?;
    let (gt, gt_rooms) = require_gt(&scene)?;
    let poses: PosesFile = read_json(&recon_dir.join(POSES_FILE))?;
    let groups: Vec<RoomGroup> = read_json(&recon_dir.join(ROOMS_FILE))?;
    let sizes: Vec<usize> = poses.components.iter().map(Vec::len).collect();

    let mut report = if poses.poses.is_empty() {
        EvalReport::empty(gt.len(), &sizes)
    } else {
        evaluate(&poses.poses, &gt, &sizes, 0.0, &cfg.evaluate)?
    };
    if let Some(s) = &report.alignment {
        let cell = cfg.pipeline.floorplan.cell_size;
        let est = stitch(&transform_groups(&groups, s), cell);
        let truth = rasterize_labeled(&[gt_rooms], cell);
        report.floorplan_iou = floorplan_iou(&est, &truth).map_err(|e| CliError::Numerical(e.to_string()))?;
    }

    let out = out.map(PathBuf::from).unwrap_or_else(|| recon_dir.join(REPORT_FILE));
    write_json(&out, &ReportFile { config_hash: cfg.hash(), metrics: report.clone() })?;
    if let Some(h) = histogram {
        write_atomic(h, &cc_histogram_png(&report.cc_histogram))?;
    }
    Ok(format!(
        "localized {:.1}%, median rotation {:.4} deg, median translation {:.4} m, floorplan IoU {:.4}",
        report.localization_pct, report.rotation_median_deg, report.translation_median_m, report.floorplan_iou
    ))
}

fn masked_gray(m: &MaskedBev) -> Vec<u8> {
    let g: &BevGrid = &m.grid;
    let mut px = g.to_gray8();
    // to_gray8 writes the top row first; the mask is stored bottom-up
    for r in 0..g.size {
        for c in 0..g.size {
            if !m.mask.get(c, r) {
                px[(g.size - 1 - r) * g.size + c] = 0;
            }
        }
    }
    px
}

pub fn render_cmd(
    cfg: &Config,
    scene_path: &Path,
    recon_dir: &Path,
    out_dir: &Path,
    scale: usize,
    bev_ids: &[PanoId],
) -> Result<String, CliError> {
    if scale == 0 {
        return Err(CliError::Config("scale must be positive".into()));
    }
    let scene = load_scene(scene_path)?;
    let poses: PosesFile = read_json(&recon_dir.join(POSES_FILE))?;
    let groups: Vec<RoomGroup> = read_json(&recon_dir.join(ROOMS_FILE))?;
    ensure_dir(out_dir)?;
    let mut written = vec!["floorplan.png", "floorplan.svg"].into_iter().map(String::from).collect::<Vec<_>>();

    let raster = stitch(&groups, cfg.pipeline.floorplan.cell_size);
    write_atomic(&out_dir.join("floorplan.png"), &floorplan_png(&raster, scale))?;
    write_atomic(&out_dir.join("floorplan.svg"), floorplan_svg(&groups, &poses.poses, &scene.panoramas).as_bytes())?;

    let report_path = recon_dir.join(REPORT_FILE);
    if report_path.exists() {
        let report: ReportFile = read_json(&report_path)?;
        write_atomic(&out_dir.join("cc_histogram.png"), &cc_histogram_png(&report.metrics.cc_histogram))?;
        written.push("cc_histogram.png".into());
    }

    let texture = ProceduralTexture::new(cfg.pipeline.seed);
    let by_id = scene.by_id();
    for id in bev_ids {
        let p = by_id.get(id).ok_or_else(|| CliError::Config(format!("no panorama with id {id}")))?;
        let world = poses.poses.get(id).or(p.gt_pose.as_ref()).copied().unwrap_or_default();
        let bev = panoplan_core::verify::PanoBev::render(p, &world, &texture, &cfg.pipeline.bev, cfg.pipeline.bev_kernel);
        let n = cfg.pipeline.bev.size as u32;
        for (name, m) in [("floor", &bev.floor), ("ceiling", &bev.ceiling)] {
            let file = format!("bev_{id}_{name}.png");
            write_png(&out_dir.join(&file), n, n, &masked_gray(m), ExtendedColorType::L8)?;
            written.push(file);
        }
    }
    Ok(format!("wrote {} to {}", written.join(", "), out_dir.display()))
}
