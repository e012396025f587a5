//! Scene data model, the versioned JSON scene file, a synthetic home
//! generator with exact ground truth, and detection-noise injection.
//!
//! Conventions: every length is in meters, every angle in radians. Room
//! contours and W/D/O detections are expressed in the panorama's own frame
//! (camera at the origin). W/D/O endpoints are ordered so that the room
//! interior lies to the left of `e1 -> e2`, which makes the interior normal
//! equal to `(e2 - e1).perp()` normalized. The vanishing angle is the
//! bearing of the dominant Manhattan axis measured clockwise from the
//! panorama's forward axis, reduced to `[0, pi/2)`.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::f64::consts::{FRAC_PI_2, PI};
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{Pose2, Vec2};
use crate::polygon;

pub type PanoId = u32;

pub const SCENE_FORMAT: &str = "panoplan-scene";
pub const SCENE_VERSION: u32 = 1;

/// Tolerance on the normal-perpendicularity invariant of detections.
const NORMAL_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("io error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("invalid scene: {0}")]
    Validation(String),
    #[error("invalid generator config: {0}")]
    Config(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WdoKind {
    Window,
    Door,
    Opening,
}

impl WdoKind {
    pub const ALL: [WdoKind; 3] = [WdoKind::Window, WdoKind::Door, WdoKind::Opening];

    pub fn as_str(self) -> &'static str {
        match self {
            WdoKind::Window => "window",
            WdoKind::Door => "door",
            WdoKind::Opening => "opening",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WdoDetection {
    pub kind: WdoKind,
    pub endpoints: [Vec2; 2],
    pub interior_normal: Vec2,
    pub confidence: f64,
}

impl WdoDetection {
    /// Builds a detection whose interior normal is the left normal of `e1 -> e2`.
    pub fn from_endpoints(kind: WdoKind, e1: Vec2, e2: Vec2) -> Self {
        Self { kind, endpoints: [e1, e2], interior_normal: (e2 - e1).perp().normalized(), confidence: 1.0 }
    }

    pub fn width(&self) -> f64 {
        self.endpoints[0].distance(self.endpoints[1])
    }

    pub fn midpoint(&self) -> Vec2 {
        self.endpoints[0].lerp(self.endpoints[1], 0.5)
    }

    pub fn transformed(&self, pose: &Pose2) -> WdoDetection {
        WdoDetection {
            kind: self.kind,
            endpoints: [pose.transform_point(self.endpoints[0]), pose.transform_point(self.endpoints[1])],
            interior_normal: pose.rotate_vector(self.interior_normal),
            confidence: self.confidence,
        }
    }

    fn validate(&self) -> Result<(), String> {
        let w = self.width();
        if !(w > 0.0) || !w.is_finite() {
            return Err("W/D/O width must be positive".into());
        }
        let n = self.interior_normal;
        if (n.norm() - 1.0).abs() > NORMAL_TOL {
            return Err("W/D/O interior normal must be unit length".into());
        }
        let d = (self.endpoints[1] - self.endpoints[0]) * (1.0 / w);
        if n.dot(d).abs() > NORMAL_TOL {
            return Err("W/D/O interior normal must be perpendicular to its segment".into());
        }
        if !(0.0..=1.0).contains(&self.confidence) {
            return Err("W/D/O confidence must lie in [0, 1]".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoomContour {
    pub vertices: Vec<Vec2>,
    pub confidence: Vec<f64>,
}

impl RoomContour {
    pub fn new(vertices: Vec<Vec2>, confidence: Vec<f64>) -> Self {
        Self { vertices, confidence }
    }

    pub fn with_uniform_confidence(vertices: Vec<Vec2>, c: f64) -> Self {
        let confidence = vec![c; vertices.len()];
        Self { vertices, confidence }
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn transformed(&self, pose: &Pose2) -> Vec<Vec2> {
        self.vertices.iter().map(|&v| pose.transform_point(v)).collect()
    }

    fn validate(&self) -> Result<(), String> {
        if self.vertices.len() < 3 {
            return Err("room contour needs at least 3 vertices".into());
        }
        if self.vertices.len() != self.confidence.len() {
            return Err("room contour needs one confidence per vertex".into());
        }
        if self.confidence.iter().any(|c| !(0.0..=1.0).contains(c)) {
            return Err("contour confidence must lie in [0, 1]".into());
        }
        if self.vertices.iter().any(|v| !v.is_finite()) {
            return Err("contour vertices must be finite".into());
        }
        if !polygon::is_simple(&self.vertices) {
            return Err("room contour must be a simple polygon".into());
        }
        if !polygon::contains(&self.vertices, Vec2::ZERO) {
            return Err("room contour must contain the camera (origin)".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PanoramaRecord {
    pub id: PanoId,
    pub contour: RoomContour,
    pub wdos: Vec<WdoDetection>,
    pub vanishing_angle: f64,
    pub camera_height: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gt_pose: Option<Pose2>,
}

impl PanoramaRecord {
    fn validate(&self) -> Result<(), String> {
        let ctx = |e: String| format!("panorama {}: {e}", self.id);
        if !(self.camera_height > 0.0) || !self.camera_height.is_finite() {
            return Err(ctx("camera_height must be positive".into()));
        }
        if !(0.0..FRAC_PI_2).contains(&self.vanishing_angle) {
            return Err(ctx("vanishing_angle must lie in [0, pi/2)".into()));
        }
        self.contour.validate().map_err(ctx)?;
        for (k, w) in self.wdos.iter().enumerate() {
            w.validate().map_err(|e| ctx(format!("wdo {k}: {e}")))?;
        }
        if let Some(p) = &self.gt_pose {
            if !p.is_finite() {
                return Err(ctx("gt_pose must be finite".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub panoramas: Vec<PanoramaRecord>,
    /// Ground-truth room polygons in the world frame.
    pub gt_floorplan: Option<Vec<Vec<Vec2>>>,
}

impl Scene {
    pub fn validate(&self) -> Result<(), SceneError> {
        if self.panoramas.is_empty() {
            return Err(SceneError::Validation("scene needs at least one panorama".into()));
        }
        let mut ids = HashSet::new();
        for p in &self.panoramas {
            if !ids.insert(p.id) {
                return Err(SceneError::Validation(format!("duplicate panorama id {}", p.id)));
            }
            p.validate().map_err(SceneError::Validation)?;
        }
        if let Some(rooms) = &self.gt_floorplan {
            for (k, r) in rooms.iter().enumerate() {
                if r.len() < 3 || !polygon::is_simple(r) {
                    return Err(SceneError::Validation(format!("gt_floorplan room {k} is not a simple polygon")));
                }
            }
        }
        Ok(())
    }

    pub fn panorama(&self, id: PanoId) -> Option<&PanoramaRecord> {
        self.panoramas.iter().find(|p| p.id == id)
    }

    pub fn by_id(&self) -> BTreeMap<PanoId, &PanoramaRecord> {
        self.panoramas.iter().map(|p| (p.id, p)).collect()
    }

    pub fn gt_poses(&self) -> BTreeMap<PanoId, Pose2> {
        self.panoramas.iter().filter_map(|p| p.gt_pose.map(|g| (p.id, g))).collect()
    }

    pub fn wdo_count(&self, kind: WdoKind) -> usize {
        self.panoramas.iter().flat_map(|p| &p.wdos).filter(|w| w.kind == kind).count()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Units {
    length: String,
    angle: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct SceneFile {
    format: String,
    version: u32,
    units: Units,
    panoramas: Vec<PanoramaRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    gt_floorplan: Option<Vec<Vec<Vec2>>>,
}

pub fn scene_to_string(scene: &Scene) -> String {
    let file = SceneFile {
        format: SCENE_FORMAT.into(),
        version: SCENE_VERSION,
        units: Units { length: "meters".into(), angle: "radians".into() },
        panoramas: scene.panoramas.clone(),
        gt_floorplan: scene.gt_floorplan.clone(),
    };
    let mut s = serde_json::to_string_pretty(&file).expect("scene serializes");
    s.push('\n');
    s
}

pub fn parse_scene(text: &str) -> Result<Scene, SceneError> {
    let file: SceneFile = serde_json::from_str(text).map_err(|e| SceneError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    if file.format != SCENE_FORMAT {
        return Err(SceneError::Validation(format!("format must be \"{SCENE_FORMAT}\", found \"{}\"", file.format)));
    }
    if file.version != SCENE_VERSION {
        return Err(SceneError::Validation(format!("unsupported scene version {}", file.version)));
    }
    if file.units.length != "meters" || file.units.angle != "radians" {
        return Err(SceneError::Validation("units must be meters and radians".into()));
    }
    let scene = Scene { panoramas: file.panoramas, gt_floorplan: file.gt_floorplan };
    scene.validate()?;
    Ok(scene)
}

pub fn load_scene(path: impl AsRef<Path>) -> Result<Scene, SceneError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| SceneError::Io { path: path.display().to_string(), source })?;
    parse_scene(&text)
}

/// Writes the scene through a temporary sibling file and a rename.
pub fn save_scene(scene: &Scene, path: impl AsRef<Path>) -> Result<(), SceneError> {
    let path = path.as_ref();
    let io = |source| SceneError::Io { path: path.display().to_string(), source };
    let tmp = path.with_extension("json.tmp");
    fs::write(&tmp, scene_to_string(scene)).map_err(io)?;
    fs::rename(&tmp, path).map_err(io)
}

/// Knobs of the synthetic home generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticHomeConfig {
    pub n_rooms: usize,
    pub min_panos_per_room: usize,
    pub max_panos_per_room: usize,
    pub seed: u64,
    /// Samples per contour, the analogue of panorama columns.
    pub contour_columns: usize,
    /// Rooms longer than this are split into two parts joined by an opening.
    pub opening_split_length: f64,
    /// Probability of chamfering each exterior corner of the home.
    pub chamfer_prob: f64,
}

impl Default for SyntheticHomeConfig {
    fn default() -> Self {
        Self {
            n_rooms: 6,
            min_panos_per_room: 1,
            max_panos_per_room: 3,
            seed: 0,
            contour_columns: 256,
            opening_split_length: 4.5,
            chamfer_prob: 0.3,
        }
    }
}

impl SyntheticHomeConfig {
    pub fn new(n_rooms: usize, panos_per_room: usize, seed: u64) -> Self {
        Self { n_rooms, min_panos_per_room: panos_per_room, max_panos_per_room: panos_per_room, seed, ..Self::default() }
    }

    fn validate(&self) -> Result<(), SceneError> {
        if self.n_rooms < 1 {
            return Err(SceneError::Config("n_rooms must be at least 1".into()));
        }
        if !(1..=3).contains(&self.min_panos_per_room)
            || !(1..=3).contains(&self.max_panos_per_room)
            || self.min_panos_per_room > self.max_panos_per_room
        {
            return Err(SceneError::Config("panos per room must satisfy 1 <= min <= max <= 3".into()));
        }
        if self.contour_columns < 16 {
            return Err(SceneError::Config("contour_columns must be at least 16".into()));
        }
        if !(self.opening_split_length >= 4.0) {
            return Err(SceneError::Config("opening_split_length must be at least 4 m".into()));
        }
        if !(0.0..=1.0).contains(&self.chamfer_prob) {
            return Err(SceneError::Config("chamfer_prob must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

pub const DOOR_WIDTH: (f64, f64) = (0.8, 1.1);
pub const WINDOW_WIDTH: (f64, f64) = (0.6, 1.8);
pub const OPENING_WIDTH: (f64, f64) = (1.2, 3.0);

const MIN_ROOM_DIM: f64 = 2.4;
const WALL_MARGIN: f64 = 0.3;
const WDO_GAP: f64 = 0.8;
const CAMERA_MARGIN: f64 = 0.5;
const MIN_CAMERA_SPACING: f64 = 0.8;

#[derive(Debug, Clone, Copy)]
struct Rect {
    x0: f64,
    y0: f64,
    x1: f64,
    y1: f64,
}

impl Rect {
    fn w(&self) -> f64 {
        self.x1 - self.x0
    }
    fn h(&self) -> f64 {
        self.y1 - self.y0
    }
    fn area(&self) -> f64 {
        self.w() * self.h()
    }
}

/// One convex room part in the home frame, CCW polygon.
#[derive(Debug, Clone)]
struct Unit {
    rect: Rect,
    poly: Vec<Vec2>,
    /// W/D/O in home frame with the interior of this unit on the left.
    wdos: Vec<WdoDetection>,
    /// occupied intervals per (axis-aligned) wall line key
    used: Vec<(WallKey, f64, f64)>,
}

/// Wall line identity: (is_vertical, coordinate rounded to micrometers).
type WallKey = (bool, i64);

fn wall_key(vertical: bool, c: f64) -> WallKey {
    (vertical, (c * 1e6).round() as i64)
}

impl Unit {
    fn new(rect: Rect) -> Self {
        let poly = vec![
            Vec2::new(rect.x0, rect.y0),
            Vec2::new(rect.x1, rect.y0),
            Vec2::new(rect.x1, rect.y1),
            Vec2::new(rect.x0, rect.y1),
        ];
        Self { rect, poly, wdos: Vec::new(), used: Vec::new() }
    }

    fn interval_free(&self, key: WallKey, a: f64, b: f64) -> bool {
        self.used.iter().filter(|(k, _, _)| *k == key).all(|&(_, u0, u1)| b + WDO_GAP <= u0 || a >= u1 + WDO_GAP)
    }

    /// Free span of the given wall line inside this unit's polygon, if the
    /// polygon has an axis-aligned edge there.
    fn edge_span(&self, key: WallKey) -> Option<(f64, f64)> {
        let n = self.poly.len();
        for i in 0..n {
            let (a, b) = (self.poly[i], self.poly[(i + 1) % n]);
            if key.0 && (a.x - b.x).abs() < 1e-12 && wall_key(true, a.x) == key {
                return Some((a.y.min(b.y), a.y.max(b.y)));
            }
            if !key.0 && (a.y - b.y).abs() < 1e-12 && wall_key(false, a.y) == key {
                return Some((a.x.min(b.x), a.x.max(b.x)));
            }
        }
        None
    }

    /// Adds a W/D/O on wall line `key` covering `[a, b]` along the line,
    /// oriented so that this unit's interior is on the left.
    fn add_wdo(&mut self, kind: WdoKind, key: WallKey, a: f64, b: f64) {
        let c = key.1 as f64 * 1e-6;
        let (p, q) = if key.0 { (Vec2::new(c, a), Vec2::new(c, b)) } else { (Vec2::new(a, c), Vec2::new(b, c)) };
        let mid = p.lerp(q, 0.5);
        let inward = polygon::centroid(&self.poly) - mid;
        let (e1, e2) = if (q - p).perp().dot(inward) > 0.0 { (p, q) } else { (q, p) };
        self.wdos.push(WdoDetection::from_endpoints(kind, e1, e2));
        self.used.push((key, a, b));
    }
}

/// Generates a synthetic home with exact ground truth.
///
/// Rooms tile a rectangular footprint by guillotine splits; rooms longer than
/// `opening_split_length` are divided in two parts joined by an opening;
/// every pair of adjacent rooms with enough shared wall gets a door; exterior
/// walls get windows. Some exterior corners are chamfered to produce
/// non-Manhattan (but convex) rooms. The whole home is then placed in the
/// world under a random rigid transform.
pub fn generate_synthetic_home(cfg: &SyntheticHomeConfig) -> Result<Scene, SceneError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    for _attempt in 0..256 {
        if let Some(scene) = try_generate(cfg, &mut rng) {
            return Ok(scene);
        }
    }
    Err(SceneError::Config(format!("could not lay out {} rooms", cfg.n_rooms)))
}

fn try_generate(cfg: &SyntheticHomeConfig, rng: &mut ChaCha8Rng) -> Option<Scene> {
    let total_area = cfg.n_rooms as f64 * rng.random_range(10.0..16.0);
    let aspect = rng.random_range(0.8..1.5);
    let fw = (total_area * aspect).sqrt();
    let fh = total_area / fw;
    let footprint = Rect { x0: 0.0, y0: 0.0, x1: fw, y1: fh };

    // guillotine tiling, always splitting the largest room
    let mut rooms = vec![footprint];
    while rooms.len() < cfg.n_rooms {
        let (idx, _) = rooms.iter().enumerate().max_by(|a, b| a.1.area().total_cmp(&b.1.area()))?;
        let r = rooms[idx];
        let vertical = r.w() >= r.h();
        let len = if vertical { r.w() } else { r.h() };
        let lo = (0.35 * len).max(MIN_ROOM_DIM);
        let hi = (0.65 * len).min(len - MIN_ROOM_DIM);
        if lo > hi {
            return None;
        }
        let cut = rng.random_range(lo..=hi);
        let (a, b) = if vertical {
            (Rect { x1: r.x0 + cut, ..r }, Rect { x0: r.x0 + cut, ..r })
        } else {
            (Rect { y1: r.y0 + cut, ..r }, Rect { y0: r.y0 + cut, ..r })
        };
        rooms[idx] = a;
        rooms.push(b);
    }

    // split long rooms into two parts joined by an opening
    let mut units: Vec<Unit> = Vec::new();
    let mut openings: Vec<(usize, usize)> = Vec::new();
    for r in &rooms {
        let vertical = r.w() >= r.h();
        let len = if vertical { r.w() } else { r.h() };
        if len > cfg.opening_split_length {
            let cut = len * rng.random_range(0.4..0.6);
            let (a, b) = if vertical {
                (Rect { x1: r.x0 + cut, ..*r }, Rect { x0: r.x0 + cut, ..*r })
            } else {
                (Rect { y1: r.y0 + cut, ..*r }, Rect { y0: r.y0 + cut, ..*r })
            };
            openings.push((units.len(), units.len() + 1));
            units.push(Unit::new(a));
            units.push(Unit::new(b));
        } else {
            units.push(Unit::new(*r));
        }
    }

    // chamfer exterior corners of the footprint
    for u in units.iter_mut() {
        let mut poly = Vec::new();
        let n = u.poly.len();
        let max_c = 0.3 * u.rect.w().min(u.rect.h());
        for i in 0..n {
            let v = u.poly[i];
            let at_corner = (v.x == footprint.x0 || v.x == footprint.x1) && (v.y == footprint.y0 || v.y == footprint.y1);
            if at_corner && rng.random_bool(cfg.chamfer_prob) {
                let c = rng.random_range(0.5..1.0f64).min(max_c);
                let prev = u.poly[(i + n - 1) % n];
                let next = u.poly[(i + 1) % n];
                poly.push(v + (prev - v).normalized() * c);
                poly.push(v + (next - v).normalized() * c);
            } else {
                poly.push(v);
            }
        }
        u.poly = poly;
    }

    // openings between split parts
    for &(a, b) in &openings {
        let (key, span) = shared_wall(&units[a], &units[b])?;
        let avail = span.1 - span.0 - 2.0 * WALL_MARGIN;
        if avail < OPENING_WIDTH.0 {
            return None;
        }
        let w = rng.random_range(OPENING_WIDTH.0..=OPENING_WIDTH.1.min(avail));
        let s = rng.random_range(span.0 + WALL_MARGIN..=span.1 - WALL_MARGIN - w);
        units[a].add_wdo(WdoKind::Opening, key, s, s + w);
        units[b].add_wdo(WdoKind::Opening, key, s, s + w);
    }

    // doors between every other adjacent pair with enough shared wall
    let mut links: Vec<(usize, usize)> = openings.clone();
    for a in 0..units.len() {
        for b in (a + 1)..units.len() {
            if openings.contains(&(a, b)) {
                continue;
            }
            let Some((key, span)) = shared_wall(&units[a], &units[b]) else { continue };
            let w = rng.random_range(DOOR_WIDTH.0..=DOOR_WIDTH.1);
            let lo = span.0 + WALL_MARGIN;
            let hi = span.1 - WALL_MARGIN - w;
            if hi < lo {
                continue;
            }
            let placed = (0..24).map(|_| rng.random_range(lo..=hi)).find(|&s| {
                units[a].interval_free(key, s, s + w) && units[b].interval_free(key, s, s + w)
            });
            if let Some(s) = placed {
                units[a].add_wdo(WdoKind::Door, key, s, s + w);
                units[b].add_wdo(WdoKind::Door, key, s, s + w);
                links.push((a, b));
            }
        }
    }
    if !is_connected(units.len(), &links) {
        return None;
    }

    // windows on exterior walls; each unit with exterior walls gets at least one
    for u in units.iter_mut() {
        let n = u.poly.len();
        let mut exterior: Vec<(WallKey, f64, f64)> = Vec::new();
        for i in 0..n {
            let (a, b) = (u.poly[i], u.poly[(i + 1) % n]);
            if a.x == b.x && (a.x == footprint.x0 || a.x == footprint.x1) {
                exterior.push((wall_key(true, a.x), a.y.min(b.y), a.y.max(b.y)));
            } else if a.y == b.y && (a.y == footprint.y0 || a.y == footprint.y1) {
                exterior.push((wall_key(false, a.y), a.x.min(b.x), a.x.max(b.x)));
            }
        }
        let forced = rng.random_range(0..exterior.len().max(1));
        for (k, &(key, s0, s1)) in exterior.iter().enumerate() {
            let want = k == forced || rng.random_bool(0.6);
            let avail = s1 - s0 - 2.0 * WALL_MARGIN;
            if !want || avail < WINDOW_WIDTH.0 {
                continue;
            }
            let w = rng.random_range(WINDOW_WIDTH.0..=WINDOW_WIDTH.1.min(avail));
            let placed = (0..24)
                .map(|_| rng.random_range(s0 + WALL_MARGIN..=s1 - WALL_MARGIN - w))
                .find(|&s| u.interval_free(key, s, s + w));
            if let Some(s) = placed {
                u.add_wdo(WdoKind::Window, key, s, s + w);
            }
        }
    }

    // world placement
    let world = Pose2::new(rng.random_range(-20.0..20.0), rng.random_range(-20.0..20.0), rng.random_range(-PI..PI));

    let mut panoramas = Vec::new();
    for u in &units {
        let k = rng.random_range(cfg.min_panos_per_room..=cfg.max_panos_per_room);
        let mut cams: Vec<Vec2> = Vec::new();
        let mut tries = 0;
        while cams.len() < k {
            tries += 1;
            if tries > 2000 {
                return None;
            }
            let p = Vec2::new(rng.random_range(u.rect.x0..u.rect.x1), rng.random_range(u.rect.y0..u.rect.y1));
            if !polygon::contains(&u.poly, p) || edge_distance(&u.poly, p) < CAMERA_MARGIN {
                continue;
            }
            if cams.iter().any(|c| c.distance(p) < MIN_CAMERA_SPACING) {
                continue;
            }
            cams.push(p);
        }
        for cam in cams {
            let heading = rng.random_range(-PI..PI);
            let home_pose = Pose2::from_parts(cam, heading);
            let gt_pose = world.compose(&home_pose);
            let contour = raycast_contour(&u.poly, &home_pose, cfg.contour_columns)?;
            let wdos = u.wdos.iter().map(|w| w.transformed(&home_pose.inverse())).collect();
            let camera_height = rng.random_range(1.3..1.7);
            panoramas.push(PanoramaRecord {
                id: panoramas.len() as PanoId,
                contour,
                wdos,
                vanishing_angle: quarter_turn_mod(home_pose.theta()),
                camera_height,
                gt_pose: Some(gt_pose),
            });
        }
    }

    let gt_floorplan = units.iter().map(|u| u.poly.iter().map(|&v| world.transform_point(v)).collect()).collect();
    Some(Scene { panoramas, gt_floorplan: Some(gt_floorplan) })
}

/// Reduces to `[0, pi/2)`.
pub fn quarter_turn_mod(a: f64) -> f64 {
    let r = a.rem_euclid(FRAC_PI_2);
    if r >= FRAC_PI_2 {
        0.0
    } else {
        r
    }
}

fn edge_distance(poly: &[Vec2], p: Vec2) -> f64 {
    let n = poly.len();
    (0..n)
        .map(|i| {
            let (a, b) = (poly[i], poly[(i + 1) % n]);
            let t = ((p - a).dot(b - a) / (b - a).norm_sq()).clamp(0.0, 1.0);
            p.distance(a.lerp(b, t))
        })
        .fold(f64::INFINITY, f64::min)
}

/// Longest shared axis-aligned wall between two units, with its span.
fn shared_wall(a: &Unit, b: &Unit) -> Option<(WallKey, (f64, f64))> {
    let mut best: Option<(WallKey, (f64, f64))> = None;
    let keys = [
        wall_key(true, a.rect.x0),
        wall_key(true, a.rect.x1),
        wall_key(false, a.rect.y0),
        wall_key(false, a.rect.y1),
    ];
    for key in keys {
        let (Some(sa), Some(sb)) = (a.edge_span(key), b.edge_span(key)) else { continue };
        let span = (sa.0.max(sb.0), sa.1.min(sb.1));
        if span.1 - span.0 > 1e-9 && best.is_none_or(|(_, s)| span.1 - span.0 > s.1 - s.0) {
            best = Some((key, span));
        }
    }
    best
}

fn is_connected(n: usize, links: &[(usize, usize)]) -> bool {
    let mut seen = vec![false; n];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(u) = stack.pop() {
        for &(a, b) in links {
            let v = if a == u { b } else if b == u { a } else { continue };
            if !seen[v] {
                seen[v] = true;
                stack.push(v);
            }
        }
    }
    seen.into_iter().all(|s| s)
}

/// Samples the room boundary visible from `pose` at `columns` evenly spaced
/// bearings, in the camera frame, with confidence decaying with distance.
fn raycast_contour(room: &[Vec2], pose: &Pose2, columns: usize) -> Option<RoomContour> {
    let local: Vec<Vec2> = room.iter().map(|&v| pose.inverse_transform_point(v)).collect();
    let mut vertices = Vec::with_capacity(columns);
    let mut confidence = Vec::with_capacity(columns);
    for k in 0..columns {
        let bearing = -PI + 2.0 * PI * (k as f64 + 0.5) / columns as f64;
        let dir = Vec2::from_angle(bearing);
        let d = polygon::ray_hit(Vec2::ZERO, dir, &local)?;
        vertices.push(dir * d);
        confidence.push(distance_confidence(d));
    }
    Some(RoomContour { vertices, confidence })
}

/// Confidence of a boundary point observed at distance `d` meters.
pub fn distance_confidence(d: f64) -> f64 {
    1.0 / (1.0 + (d / 4.0).powi(2))
}

/// Detection-noise model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    /// Std of contour error along each viewing ray (meters).
    pub sigma_vertex: f64,
    pub sigma_wdo_endpoint: f64,
    pub sigma_vanishing: f64,
    pub wdo_drop_prob: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn zero(seed: u64) -> Self {
        Self { sigma_vertex: 0.0, sigma_wdo_endpoint: 0.0, sigma_vanishing: 0.0, wdo_drop_prob: 0.0, seed }
    }

    pub fn validate(&self) -> Result<(), SceneError> {
        let sigmas = [self.sigma_vertex, self.sigma_wdo_endpoint, self.sigma_vanishing];
        if sigmas.iter().any(|s| !(*s >= 0.0) || !s.is_finite()) {
            return Err(SceneError::Config("noise sigmas must be finite and non-negative".into()));
        }
        if !(0.0..=1.0).contains(&self.wdo_drop_prob) {
            return Err(SceneError::Config("wdo_drop_prob must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

fn gauss(rng: &mut ChaCha8Rng, sigma: f64) -> f64 {
    if sigma == 0.0 {
        0.0
    } else {
        Normal::new(0.0, sigma).expect("finite sigma").sample(rng)
    }
}

/// Injects detection noise. Contour vertices move along their viewing ray
/// (which keeps the contour star-shaped around the camera, hence simple);
/// W/D/O endpoints get isotropic Gaussian noise and their normal is
/// recomputed on the original side; vanishing angles get wrapped Gaussian
/// noise; W/D/O are dropped independently. Ground truth is untouched.
pub fn perturb(scene: &Scene, spec: &NoiseSpec) -> Scene {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut out = scene.clone();
    for p in out.panoramas.iter_mut() {
        for v in p.contour.vertices.iter_mut() {
            let r = v.norm();
            if r > 0.0 && spec.sigma_vertex > 0.0 {
                let nr = (r + gauss(&mut rng, spec.sigma_vertex)).max(0.05);
                *v = *v * (nr / r);
            }
        }
        let mut kept = Vec::with_capacity(p.wdos.len());
        for w in &p.wdos {
            let drop = spec.wdo_drop_prob > 0.0 && rng.random_bool(spec.wdo_drop_prob);
            let mut w = w.clone();
            if spec.sigma_wdo_endpoint > 0.0 {
                for e in w.endpoints.iter_mut() {
                    *e += Vec2::new(gauss(&mut rng, spec.sigma_wdo_endpoint), gauss(&mut rng, spec.sigma_wdo_endpoint));
                }
                let d = w.endpoints[1] - w.endpoints[0];
                if d.norm() < 1e-6 {
                    // collapsed segment: keep the original geometry
                    w = w.clone();
                } else {
                    let n = d.perp().normalized();
                    w.interior_normal = if n.dot(w.interior_normal) >= 0.0 { n } else { -n };
                }
            }
            if !drop {
                kept.push(w);
            }
        }
        p.wdos = kept;
        if spec.sigma_vanishing > 0.0 {
            p.vanishing_angle = quarter_turn_mod(p.vanishing_angle + gauss(&mut rng, spec.sigma_vanishing));
        }
    }
    out
}

/// Pairs of panoramas whose rooms are linked by a door or opening they
/// both observe (same world segment under ground truth), plus pairs in the
/// same room. Used as the adjacency oracle in tests and tooling.
pub fn gt_adjacent_pairs(scene: &Scene, tol: f64) -> BTreeSet<(PanoId, PanoId)> {
    let mut out = BTreeSet::new();
    let world: Vec<(PanoId, Vec<(WdoKind, Vec2, Vec2)>)> = scene
        .panoramas
        .iter()
        .filter_map(|p| {
            let g = p.gt_pose?;
            let w = p
                .wdos
                .iter()
                .filter(|w| w.kind != WdoKind::Window)
                .map(|w| (w.kind, g.transform_point(w.endpoints[0]), g.transform_point(w.endpoints[1])))
                .collect();
            Some((p.id, w))
        })
        .collect();
    for (i, (a, wa)) in world.iter().enumerate() {
        for (b, wb) in &world[i + 1..] {
            let shares = wa.iter().any(|&(ka, a0, a1)| {
                wb.iter().any(|&(kb, b0, b1)| {
                    ka == kb
                        && ((a0.distance(b0) < tol && a1.distance(b1) < tol) || (a0.distance(b1) < tol && a1.distance(b0) < tol))
                })
            });
            if shares {
                out.insert((*a.min(b), *a.max(b)));
            }
        }
    }
    out
}
