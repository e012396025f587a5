//! Pose graph construction, connected components, spanning-tree
//! initialization and robust Levenberg-Marquardt optimization on SE(2).
//!
//! Edge residuals live on the manifold, `r_ij = Log(z_ij^-1 * T_i^-1 * T_j)`,
//! and updates use the right retraction `T <- T * exp(xi)`.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{right_jacobian_inv, Pose2, Twist2};
use crate::scene::PanoId;

/// Default per-edge noise std: 5 cm, 5 cm, 1 degree.
pub const DEFAULT_EDGE_SIGMA: [f64; 3] = [0.05, 0.05, 0.017_453_292_519_943_295];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("component is not connected in the graph (node {0} unreachable)")]
    Disconnected(PanoId),
    #[error("empty component")]
    EmptyComponent,
    #[error("no initial pose for node {0}")]
    MissingInit(PanoId),
    #[error("non-finite cost at iteration {iteration}")]
    NonFinite { iteration: usize },
    #[error("invalid robust config: {0}")]
    Config(&'static str),
    #[error("graph dump parse error on line {line}: {message}")]
    Dump { line: usize, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoseGraphEdge {
    pub i: PanoId,
    pub j: PanoId,
    /// Measured pose of `j` in `i`'s frame.
    pub z_ij: Pose2,
    pub sigma: [f64; 3],
    pub score: f64,
}

impl PoseGraphEdge {
    pub fn new(i: PanoId, j: PanoId, z_ij: Pose2) -> Self {
        Self { i, j, z_ij, sigma: DEFAULT_EDGE_SIGMA, score: 1.0 }
    }

    fn key(&self) -> (PanoId, PanoId) {
        (self.i.min(self.j), self.i.max(self.j))
    }

    /// The same constraint seen from `j`.
    pub fn reversed(&self) -> Self {
        Self { i: self.j, j: self.i, z_ij: self.z_ij.inverse(), ..*self }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PoseGraph {
    pub nodes: BTreeSet<PanoId>,
    pub edges: Vec<PoseGraphEdge>,
}

impl PoseGraph {
    fn adjacency(&self) -> BTreeMap<PanoId, Vec<(PanoId, usize)>> {
        let mut adj: BTreeMap<PanoId, Vec<(PanoId, usize)>> = self.nodes.iter().map(|&n| (n, Vec::new())).collect();
        for (k, e) in self.edges.iter().enumerate() {
            adj.entry(e.i).or_default().push((e.j, k));
            adj.entry(e.j).or_default().push((e.i, k));
        }
        for list in adj.values_mut() {
            list.sort_unstable();
        }
        adj
    }

    /// Edges with both endpoints in `nodes`.
    pub fn induced_edges<'a>(&'a self, nodes: &'a BTreeSet<PanoId>) -> impl Iterator<Item = &'a PoseGraphEdge> + 'a {
        self.edges.iter().filter(move |e| nodes.contains(&e.i) && nodes.contains(&e.j))
    }
}

/// Collapses a multigraph to at most one edge per unordered pair, keeping
/// the highest score (first wins on ties). Output edges are sorted by pair.
pub fn build_graph(nodes: impl IntoIterator<Item = PanoId>, edges: impl IntoIterator<Item = PoseGraphEdge>) -> PoseGraph {
    let mut node_set: BTreeSet<PanoId> = nodes.into_iter().collect();
    let mut best: BTreeMap<(PanoId, PanoId), PoseGraphEdge> = BTreeMap::new();
    for e in edges {
        if e.i == e.j {
            continue;
        }
        node_set.insert(e.i);
        node_set.insert(e.j);
        match best.get(&e.key()) {
            Some(cur) if cur.score >= e.score => {}
            _ => {
                best.insert(e.key(), e);
            }
        }
    }
    PoseGraph { nodes: node_set, edges: best.into_values().collect() }
}

/// Connected components, largest first; ties broken by smallest member id.
/// Members are sorted ascending.
pub fn connected_components(g: &PoseGraph) -> Vec<Vec<PanoId>> {
    let adj = g.adjacency();
    let mut seen = BTreeSet::new();
    let mut comps = Vec::new();
    for &start in &g.nodes {
        if !seen.insert(start) {
            continue;
        }
        let mut comp = vec![start];
        let mut stack = vec![start];
        while let Some(u) = stack.pop() {
            for &(v, _) in &adj[&u] {
                if seen.insert(v) {
                    comp.push(v);
                    stack.push(v);
                }
            }
        }
        comp.sort_unstable();
        comps.push(comp);
    }
    comps.sort_by(|a, b| b.len().cmp(&a.len()).then(a[0].cmp(&b[0])));
    comps
}

/// Chains edge measurements along BFS shortest paths from the smallest id,
/// which is placed at the identity.
pub fn spanning_tree_init(g: &PoseGraph, component: &[PanoId]) -> Result<BTreeMap<PanoId, Pose2>, GraphError> {
    let members: BTreeSet<PanoId> = component.iter().copied().collect();
    let root = *members.first().ok_or(GraphError::EmptyComponent)?;
    let adj = g.adjacency();
    let mut poses = BTreeMap::new();
    poses.insert(root, Pose2::identity());
    let mut queue = VecDeque::from([root]);
    while let Some(u) = queue.pop_front() {
        let pu = poses[&u];
        for &(v, k) in adj.get(&u).map(Vec::as_slice).unwrap_or(&[]) {
            if !members.contains(&v) || poses.contains_key(&v) {
                continue;
            }
            let e = &g.edges[k];
            let rel = if e.i == u { e.z_ij } else { e.z_ij.inverse() };
            poses.insert(v, pu.compose(&rel));
            queue.push_back(v);
        }
    }
    if let Some(&missing) = members.iter().find(|m| !poses.contains_key(m)) {
        return Err(GraphError::Disconnected(missing));
    }
    Ok(poses)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum RobustKernel {
    Quadratic,
    Huber { delta: f64 },
}

impl RobustKernel {
    /// Cost of a whitened residual with norm `s`.
    pub fn cost(&self, s: f64) -> f64 {
        match *self {
            RobustKernel::Quadratic => 0.5 * s * s,
            RobustKernel::Huber { delta } => {
                if s <= delta {
                    0.5 * s * s
                } else {
                    delta * (s - 0.5 * delta)
                }
            }
        }
    }

    /// Reweighting factor for iteratively reweighted least squares.
    pub fn weight(&self, s: f64) -> f64 {
        match *self {
            RobustKernel::Quadratic => 1.0,
            RobustKernel::Huber { delta } => {
                if s <= delta {
                    1.0
                } else {
                    delta / s
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RobustConfig {
    pub kernel: RobustKernel,
    pub max_iterations: usize,
    /// Stop when an accepted step lowers the cost by less than this fraction.
    pub convergence_tol: f64,
    pub lambda_init: f64,
    pub lambda_factor: f64,
    /// Std of the gauge prior on the root node (all three components).
    pub prior_sigma: f64,
}

impl Default for RobustConfig {
    fn default() -> Self {
        Self {
            kernel: RobustKernel::Huber { delta: 1.345 },
            max_iterations: 100,
            convergence_tol: 1e-10,
            lambda_init: 1e-4,
            lambda_factor: 10.0,
            prior_sigma: 1e-4,
        }
    }
}

impl RobustConfig {
    pub fn quadratic() -> Self {
        Self { kernel: RobustKernel::Quadratic, ..Self::default() }
    }

    pub fn validate(&self) -> Result<(), GraphError> {
        if let RobustKernel::Huber { delta } = self.kernel {
            if !(delta > 0.0) {
                return Err(GraphError::Config("huber delta must be positive"));
            }
        }
        if !(self.lambda_init > 0.0) || !(self.lambda_factor > 1.0) || !(self.prior_sigma > 0.0) {
            return Err(GraphError::Config("damping and prior parameters must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizeResult {
    pub poses: BTreeMap<PanoId, Pose2>,
    pub initial_cost: f64,
    pub final_cost: f64,
    pub iterations: usize,
    /// Cost after every accepted step, starting with the initial cost.
    pub cost_history: Vec<f64>,
}

/// Manifold residual of one edge and its Jacobians with respect to right
/// perturbations of `T_i` and `T_j`.
pub fn edge_linearization(ti: &Pose2, tj: &Pose2, z: &Pose2) -> (Twist2, [[f64; 3]; 3], [[f64; 3]; 3]) {
    let h = ti.between(tj);
    let r = z.between(&h).log();
    let jr_inv = right_jacobian_inv(&r);
    let ad = h.inverse().adjoint();
    let mut ji = [[0.0; 3]; 3];
    for (row, out) in ji.iter_mut().enumerate() {
        for (col, v) in out.iter_mut().enumerate() {
            *v = -(0..3).map(|k| jr_inv[row][k] * ad[k][col]).sum::<f64>();
        }
    }
    (r, ji, jr_inv)
}

fn whitened_norm(r: &Twist2, sigma: &[f64; 3]) -> f64 {
    let a = r.as_array();
    (0..3).map(|k| (a[k] / sigma[k]).powi(2)).sum::<f64>().sqrt()
}

/// Total robust cost of the edges among `poses`' nodes (no gauge prior).
pub fn robust_cost(g: &PoseGraph, poses: &BTreeMap<PanoId, Pose2>, kernel: &RobustKernel) -> f64 {
    g.edges
        .iter()
        .filter_map(|e| {
            let (ti, tj) = (poses.get(&e.i)?, poses.get(&e.j)?);
            let r = e.z_ij.between(&ti.between(tj)).log();
            Some(kernel.cost(whitened_norm(&r, &e.sigma)))
        })
        .sum()
}

struct Problem<'a> {
    ids: Vec<PanoId>,
    index: BTreeMap<PanoId, usize>,
    edges: Vec<&'a PoseGraphEdge>,
    root_prior: Pose2,
    cfg: &'a RobustConfig,
}

impl Problem<'_> {
    fn cost(&self, x: &[Pose2]) -> f64 {
        let mut c = 0.0;
        for e in &self.edges {
            let (ti, tj) = (&x[self.index[&e.i]], &x[self.index[&e.j]]);
            let r = e.z_ij.between(&ti.between(tj)).log();
            c += self.cfg.kernel.cost(whitened_norm(&r, &e.sigma));
        }
        let rp = self.root_prior.between(&x[0]).log();
        let s = self.cfg.prior_sigma;
        c + 0.5 * whitened_norm(&rp, &[s, s, s]).powi(2)
    }

    fn normal_equations(&self, x: &[Pose2]) -> (DMatrix<f64>, DVector<f64>) {
        let n = 3 * x.len();
        let mut hess = DMatrix::<f64>::zeros(n, n);
        let mut grad = DVector::<f64>::zeros(n);
        let mut add = |blocks: &[(usize, [[f64; 3]; 3])], r: [f64; 3], sigma: [f64; 3], w: f64| {
            // whitened J and r
            for &(bi, ji) in blocks {
                for &(bj, jj) in blocks {
                    for a in 0..3 {
                        for b in 0..3 {
                            let v: f64 = (0..3).map(|k| ji[k][a] * jj[k][b] / (sigma[k] * sigma[k])).sum();
                            hess[(3 * bi + a, 3 * bj + b)] += w * v;
                        }
                    }
                }
                for a in 0..3 {
                    let v: f64 = (0..3).map(|k| ji[k][a] * r[k] / (sigma[k] * sigma[k])).sum();
                    grad[3 * bi + a] += w * v;
                }
            }
        };
        for e in &self.edges {
            let (bi, bj) = (self.index[&e.i], self.index[&e.j]);
            let (r, ji, jj) = edge_linearization(&x[bi], &x[bj], &e.z_ij);
            let w = self.cfg.kernel.weight(whitened_norm(&r, &e.sigma));
            add(&[(bi, ji), (bj, jj)], r.as_array(), e.sigma, w);
        }
        let rp = self.root_prior.between(&x[0]).log();
        let s = self.cfg.prior_sigma;
        add(&[(0, right_jacobian_inv(&rp))], rp.as_array(), [s, s, s], 1.0);
        (hess, grad)
    }
}

/// Robust Levenberg-Marquardt over the nodes of `init`. The smallest id is
/// held near its initial pose by a strong prior. Only steps that lower the
/// robust cost are accepted.
pub fn optimize(g: &PoseGraph, init: &BTreeMap<PanoId, Pose2>, cfg: &RobustConfig) -> Result<OptimizeResult, GraphError> {
    cfg.validate()?;
    let ids: Vec<PanoId> = init.keys().copied().collect();
    if ids.is_empty() {
        return Err(GraphError::EmptyComponent);
    }
    let node_set: BTreeSet<PanoId> = ids.iter().copied().collect();
    let index: BTreeMap<PanoId, usize> = ids.iter().enumerate().map(|(k, &id)| (id, k)).collect();
    let problem = Problem {
        edges: g.induced_edges(&node_set).collect(),
        root_prior: init[&ids[0]],
        index,
        ids,
        cfg,
    };
    let mut x: Vec<Pose2> = problem.ids.iter().map(|id| init[id]).collect();
    let mut cost = problem.cost(&x);
    if !cost.is_finite() {
        return Err(GraphError::NonFinite { iteration: 0 });
    }
    let initial_cost = cost;
    let mut history = vec![cost];
    let mut lambda = cfg.lambda_init;
    let mut iterations = 0;
    while iterations < cfg.max_iterations && cost > 1e-28 {
        iterations += 1;
        let (hess, grad) = problem.normal_equations(&x);
        let mut accepted = false;
        while lambda < 1e16 {
            let mut damped = hess.clone();
            for k in 0..damped.nrows() {
                damped[(k, k)] += lambda;
            }
            let Some(chol) = damped.cholesky() else {
                lambda *= cfg.lambda_factor;
                continue;
            };
            let step = chol.solve(&(-&grad));
            let trial: Vec<Pose2> = x
                .iter()
                .enumerate()
                .map(|(k, p)| p.retract(&Twist2::new(step[3 * k], step[3 * k + 1], step[3 * k + 2])))
                .collect();
            let trial_cost = problem.cost(&trial);
            if !trial_cost.is_finite() {
                return Err(GraphError::NonFinite { iteration: iterations });
            }
            if trial_cost < cost {
                x = trial;
                accepted = true;
                let decrease = cost - trial_cost;
                cost = trial_cost;
                history.push(cost);
                lambda = (lambda / cfg.lambda_factor).max(1e-12);
                if decrease <= cfg.convergence_tol * cost.max(1e-300) {
                    iterations = cfg.max_iterations;
                }
                break;
            }
            lambda *= cfg.lambda_factor;
        }
        if !accepted {
            break;
        }
    }
    let poses = problem.ids.iter().copied().zip(x).collect();
    Ok(OptimizeResult { poses, initial_cost, final_cost: cost, iterations: history.len() - 1, cost_history: history })
}

/// Plain-text dump of a graph and an optional solution.
///
/// ```text
/// # panoplan pose graph v1
/// NODE <id> [<x> <y> <theta>]
/// EDGE <i> <j> <x> <y> <theta> <sigma_x> <sigma_y> <sigma_theta> <score>
/// ```
pub fn dump_graph(g: &PoseGraph, poses: Option<&BTreeMap<PanoId, Pose2>>) -> String {
    let mut out = String::from("# panoplan pose graph v1\n");
    for &n in &g.nodes {
        match poses.and_then(|p| p.get(&n)) {
            Some(p) => writeln!(out, "NODE {n} {} {} {}", p.x(), p.y(), p.theta()),
            None => writeln!(out, "NODE {n}"),
        }
        .unwrap();
    }
    for e in &g.edges {
        let z = &e.z_ij;
        writeln!(
            out,
            "EDGE {} {} {} {} {} {} {} {} {}",
            e.i,
            e.j,
            z.x(),
            z.y(),
            z.theta(),
            e.sigma[0],
            e.sigma[1],
            e.sigma[2],
            e.score
        )
        .unwrap();
    }
    out
}

/// Inverse of [`dump_graph`].
pub fn parse_graph_dump(text: &str) -> Result<(PoseGraph, BTreeMap<PanoId, Pose2>), GraphError> {
    let mut g = PoseGraph::default();
    let mut poses = BTreeMap::new();
    for (ln, line) in text.lines().enumerate() {
        let err = |message: String| GraphError::Dump { line: ln + 1, message };
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut it = line.split_whitespace();
        let tag = it.next().unwrap_or_default();
        let nums: Vec<&str> = it.collect();
        let f = |k: usize| nums[k].parse::<f64>().map_err(|e| err(format!("field {k}: {e}")));
        let id = |k: usize| nums[k].parse::<PanoId>().map_err(|e| err(format!("field {k}: {e}")));
        match (tag, nums.len()) {
            ("NODE", 1) => {
                g.nodes.insert(id(0)?);
            }
            ("NODE", 4) => {
                g.nodes.insert(id(0)?);
                poses.insert(id(0)?, Pose2::new(f(1)?, f(2)?, f(3)?));
            }
            ("EDGE", 9) => g.edges.push(PoseGraphEdge {
                i: id(0)?,
                j: id(1)?,
                z_ij: Pose2::new(f(2)?, f(3)?, f(4)?),
                sigma: [f(5)?, f(6)?, f(7)?],
                score: f(8)?,
            }),
            _ => return Err(err(format!("unrecognized record \"{line}\""))),
        }
    }
    Ok((g, poses))
}
