//! End-to-end reconstruction: hypotheses, verification, optional axis
//! alignment, pose graph over the largest component, aggregation and
//! floorplan stitching.

use std::collections::BTreeMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bev::BevConfig;
use crate::floorplan::{reconstruct_floorplan, FloorplanConfig, FloorplanError, FloorplanRaster, RoomGroup};
use crate::geom::Pose2;
use crate::hypotheses::{axis_align, generate_all, AxisAlignOptions, HypothesisOptions};
use crate::posegraph::{
    build_graph, connected_components, optimize, robust_cost, spanning_tree_init, GraphError, PoseGraph, PoseGraphEdge,
    RobustConfig, DEFAULT_EDGE_SIGMA,
};
use crate::scene::{PanoId, Scene};
use crate::verify::{verify_all, OracleVerifier, VerifiedHypothesis, Verifier, VerifierConfig, VerifyError, XcorrVerifier};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error(transparent)]
    Verify(#[from] VerifyError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Floorplan(#[from] FloorplanError),
}

impl PipelineError {
    pub fn is_numerical(&self) -> bool {
        matches!(self, PipelineError::Graph(GraphError::NonFinite { .. }))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerifierChoice {
    Oracle,
    Xcorr,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    SpanningTree,
    Pgo,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub verifier: VerifierChoice,
    pub verifier_config: VerifierConfig,
    pub hypotheses: HypothesisOptions,
    pub axis_align: bool,
    pub axis_align_options: AxisAlignOptions,
    pub aggregation: Aggregation,
    pub robust: RobustConfig,
    /// Noise std attached to every pose graph edge (m, m, rad).
    pub edge_sigma: [f64; 3],
    pub floorplan: FloorplanConfig,
    pub bev: BevConfig,
    pub bev_kernel: usize,
    /// Seed for procedural textures and evaluation sampling.
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            verifier: VerifierChoice::Oracle,
            verifier_config: VerifierConfig::default(),
            hypotheses: HypothesisOptions::default(),
            axis_align: true,
            axis_align_options: AxisAlignOptions::default(),
            aggregation: Aggregation::Pgo,
            robust: RobustConfig::default(),
            edge_sigma: DEFAULT_EDGE_SIGMA,
            floorplan: FloorplanConfig::default(),
            bev: BevConfig::default(),
            bev_kernel: 11,
            seed: 0,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        let cfg = |m: &str| Err(PipelineError::Config(m.to_string()));
        self.verifier_config.validate()?;
        self.robust.validate()?;
        let h = &self.hypotheses;
        if !(0.0 < h.width_ratio_min && h.width_ratio_min <= h.width_ratio_max && h.width_ratio_max <= 1.0) {
            return cfg("width ratio bounds must satisfy 0 < min <= max <= 1");
        }
        if !(self.axis_align_options.max_correction_deg >= 0.0) {
            return cfg("axis alignment cap must be non-negative");
        }
        if !self.edge_sigma.iter().all(|s| *s > 0.0 && s.is_finite()) {
            return cfg("edge sigmas must be positive");
        }
        if !(self.floorplan.cell_size > 0.0) || !(0.0..1.0).contains(&self.floorplan.grouping_iou) {
            return cfg("floorplan cell size must be positive and grouping IoU in [0, 1)");
        }
        if self.bev_kernel.is_multiple_of(2) || !(self.bev.resolution > 0.0) || self.bev.size == 0 {
            return cfg("bev kernel must be odd and the grid non-empty");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Ok,
    /// No component with at least two panoramas; nothing was localized.
    EmptyLargestComponent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub stage: String,
    pub seconds: f64,
}

#[derive(Debug, Clone)]
pub struct Reconstruction {
    pub status: RunStatus,
    pub n_hypotheses: usize,
    pub accepted: Vec<VerifiedHypothesis>,
    pub graph: PoseGraph,
    /// Components of the verified-edge graph, largest first.
    pub components: Vec<Vec<PanoId>>,
    pub init_poses: BTreeMap<PanoId, Pose2>,
    pub poses: BTreeMap<PanoId, Pose2>,
    /// Robust cost of the spanning-tree and final poses.
    pub spanning_tree_cost: f64,
    pub final_cost: f64,
    pub optimizer_iterations: usize,
    pub groups: Vec<RoomGroup>,
    pub raster: FloorplanRaster,
    pub timings: Vec<StageTiming>,
}

struct Timer(Vec<StageTiming>, Instant);

impl Timer {
    fn lap(&mut self, stage: &str) {
        let now = Instant::now();
        self.0.push(StageTiming { stage: stage.to_string(), seconds: (now - self.1).as_secs_f64() });
        self.1 = now;
    }
}

/// Runs the full reconstruction on `scene`.
pub fn reconstruct(scene: &Scene, cfg: &PipelineConfig) -> Result<Reconstruction, PipelineError> {
    cfg.validate()?;
    let panos = &scene.panoramas;
    let by_id = scene.by_id();
    let mut timer = Timer(Vec::new(), Instant::now());

    let sets = generate_all(panos, &cfg.hypotheses);
    let n_hypotheses = sets.iter().map(|s| s.hypotheses.len()).sum();
    timer.lap("hypotheses");

    let verifier: Box<dyn Verifier> = match cfg.verifier {
        VerifierChoice::Oracle => Box::new(OracleVerifier::new(panos)),
        VerifierChoice::Xcorr => Box::new(XcorrVerifier::render(panos, cfg.seed, &cfg.bev, cfg.bev_kernel)),
    };
    let mut accepted = verify_all(&sets, verifier.as_ref(), &cfg.verifier_config)?;
    timer.lap("verify");

    if cfg.axis_align {
        for v in &mut accepted {
            let h = &v.hypothesis;
            v.hypothesis = axis_align(h, by_id[&h.pano_i], by_id[&h.pano_j], &cfg.axis_align_options);
        }
    }
    timer.lap("axis_align");

    let edges = accepted.iter().map(|v| PoseGraphEdge {
        i: v.hypothesis.pano_i,
        j: v.hypothesis.pano_j,
        z_ij: v.hypothesis.i_t_j,
        sigma: cfg.edge_sigma,
        score: v.decision.score,
    });
    let graph = build_graph(panos.iter().map(|p| p.id), edges);
    let components = connected_components(&graph);
    timer.lap("graph");

    let largest = components.first().filter(|c| c.len() >= 2).cloned();
    let Some(largest) = largest else {
        return Ok(Reconstruction {
            status: RunStatus::EmptyLargestComponent,
            n_hypotheses,
            accepted,
            graph,
            components,
            init_poses: BTreeMap::new(),
            poses: BTreeMap::new(),
            spanning_tree_cost: 0.0,
            final_cost: 0.0,
            optimizer_iterations: 0,
            groups: vec![],
            raster: FloorplanRaster::empty(cfg.floorplan.cell_size),
            timings: timer.0,
        });
    };
    let init_poses = spanning_tree_init(&graph, &largest)?;
    let spanning_tree_cost = robust_cost(&graph, &init_poses, &cfg.robust.kernel);
    timer.lap("spanning_tree");

    let (poses, final_cost, optimizer_iterations) = match cfg.aggregation {
        Aggregation::SpanningTree => (init_poses.clone(), spanning_tree_cost, 0),
        Aggregation::Pgo => {
            let res = optimize(&graph, &init_poses, &cfg.robust)?;
            let cost = robust_cost(&graph, &res.poses, &cfg.robust.kernel);
            (res.poses, cost, res.iterations)
        }
    };
    timer.lap("aggregate");

    let (groups, raster) = reconstruct_floorplan(&poses, panos, &cfg.floorplan)?;
    timer.lap("floorplan");

    Ok(Reconstruction {
        status: RunStatus::Ok,
        n_hypotheses,
        accepted,
        graph,
        components,
        init_poses,
        poses,
        spanning_tree_cost,
        final_cost,
        optimizer_iterations,
        groups,
        raster,
        timings: timer.0,
    })
}
