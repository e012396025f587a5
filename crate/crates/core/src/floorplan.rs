//! Room grouping, confidence-voted contour extraction and raster stitching
//! of posed panoramas.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{Pose2, Sim2, Vec2};
use crate::par;
use crate::polygon;
use crate::scene::{PanoId, PanoramaRecord, WdoKind};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FloorplanError {
    #[error("room group is empty")]
    EmptyGroup,
    #[error("voted contour for panorama {0} has fewer than 3 distinct vertices")]
    Degenerate(PanoId),
    #[error("panorama {0} has no pose or record")]
    Missing(PanoId),
    #[error("raster cell sizes differ ({0} vs {1})")]
    CellMismatch(f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FloorplanConfig {
    /// Panoramas join a group when world-frame contour IoU exceeds this.
    pub grouping_iou: f64,
    /// Raster cell size in meters.
    pub cell_size: f64,
}

impl Default for FloorplanConfig {
    fn default() -> Self {
        Self { grouping_iou: 0.25, cell_size: 0.1 }
    }
}

/// Panoramas of one room and its shape: the union of `polygons`
/// (world frame, one voted contour per member).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoomGroup {
    pub members: Vec<PanoId>,
    pub polygons: Vec<Vec<Vec2>>,
}

fn world_contours<'a>(
    poses: &BTreeMap<PanoId, Pose2>,
    panos: &'a [PanoramaRecord],
) -> BTreeMap<PanoId, (&'a PanoramaRecord, Pose2, Vec<Vec2>)> {
    panos
        .iter()
        .filter_map(|p| poses.get(&p.id).map(|pose| (p.id, (p, *pose, p.contour.transformed(pose)))))
        .collect()
}

/// Connected components of the graph linking posed panoramas whose
/// world-frame contours overlap with IoU above `iou_threshold`. Groups are
/// ordered by smallest member; members ascend.
pub fn group_panoramas(poses: &BTreeMap<PanoId, Pose2>, panos: &[PanoramaRecord], iou_threshold: f64) -> Vec<Vec<PanoId>> {
    let world = world_contours(poses, panos);
    let ids: Vec<PanoId> = world.keys().copied().collect();
    let pairs: Vec<(usize, usize)> = (0..ids.len()).flat_map(|i| ((i + 1)..ids.len()).map(move |j| (i, j))).collect();
    let linked = par::map(&pairs, |&(i, j)| polygon::iou(&world[&ids[i]].2, &world[&ids[j]].2) > iou_threshold);
    let mut parent: Vec<usize> = (0..ids.len()).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for (&(i, j), &l) in pairs.iter().zip(&linked) {
        if l {
            let (a, b) = (find(&mut parent, i), find(&mut parent, j));
            parent[a.max(b)] = a.min(b);
        }
    }
    let mut groups: BTreeMap<usize, Vec<PanoId>> = BTreeMap::new();
    for k in 0..ids.len() {
        let root = find(&mut parent, k);
        groups.entry(root).or_default().push(ids[k]);
    }
    groups.into_values().collect()
}

/// Per-member voted contours of a room group, in world coordinates.
///
/// Each member casts one ray per vertex of its own contour. Along each ray,
/// every member's contour contributes its first wall crossing (anything
/// behind it is occluded), with confidence interpolated along the crossed
/// edge; edges spanning a depth discontinuity are not walls and are skipped. The ray keeps its most confident candidate (ties: nearest to the
/// casting camera).
pub fn extract_confident_contour(
    members: &[PanoId],
    poses: &BTreeMap<PanoId, Pose2>,
    panos: &[PanoramaRecord],
) -> Result<Vec<Vec<Vec2>>, FloorplanError> {
    if members.is_empty() {
        return Err(FloorplanError::EmptyGroup);
    }
    let by_id: BTreeMap<PanoId, &PanoramaRecord> = panos.iter().map(|p| (p.id, p)).collect();
    let mut items = Vec::with_capacity(members.len());
    for id in members {
        let p = *by_id.get(id).ok_or(FloorplanError::Missing(*id))?;
        let pose = *poses.get(id).ok_or(FloorplanError::Missing(*id))?;
        items.push((p, pose));
    }
    let mut out = Vec::with_capacity(items.len());
    for &(caster, cpose) in &items {
        let bearings: Vec<f64> = caster.contour.vertices.iter().map(|v| v.angle()).collect();
        // (confidence, range) of the best candidate per ray
        let mut best: Vec<(f64, f64)> =
            caster.contour.vertices.iter().zip(&caster.contour.confidence).map(|(v, &c)| (c, v.norm())).collect();
        for &(member, mpose) in &items {
            if member.id == caster.id {
                continue;
            }
            let to_caster = cpose.between(&mpose);
            let local: Vec<Vec2> = member.contour.vertices.iter().map(|&v| to_caster.transform_point(v)).collect();
            for (k, &a) in bearings.iter().enumerate() {
                let Some((range, conf)) = first_crossing(Vec2::from_angle(a), &local, &member.contour.confidence, to_caster.translation()) else {
                    continue;
                };
                let (bc, br) = best[k];
                if conf > bc || (conf == bc && range < br) {
                    best[k] = (conf, range);
                }
            }
        }
        let poly: Vec<Vec2> = bearings
            .iter()
            .zip(&best)
            .map(|(&a, &(_, r))| cpose.transform_point(Vec2::from_angle(a) * r))
            .collect();
        let mut distinct: Vec<Vec2> = Vec::new();
        for p in &poly {
            if !distinct.iter().any(|d| d.distance(*p) < 1e-9) {
                distinct.push(*p);
                if distinct.len() >= 3 {
                    break;
                }
            }
        }
        if distinct.len() < 3 || polygon::area(&poly) < 1e-12 {
            return Err(FloorplanError::Degenerate(caster.id));
        }
        out.push(poly);
    }
    Ok(out)
}

/// Contour edges whose range jump exceeds this multiple of the arc length
/// they subtend are treated as occlusion boundaries rather than walls
/// (a wall seen at less than about 6 degrees of grazing).
const DISCONTINUITY_RATIO: f64 = 10.0;

/// Nearest crossing of the ray from the origin along `dir` with the wall
/// edges of `poly` (a contour seen from `eye`), returning its range and the
/// confidence interpolated along the edge.
fn first_crossing(dir: Vec2, poly: &[Vec2], conf: &[f64], eye: Vec2) -> Option<(f64, f64)> {
    let n = poly.len();
    let mut best: Option<(f64, f64)> = None;
    for i in 0..n {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        let (ra, rb) = ((a - eye).norm(), (b - eye).norm());
        let arc = ra.min(rb) * (a - eye).angle_to(b - eye).abs();
        if (ra - rb).abs() > DISCONTINUITY_RATIO * arc {
            continue;
        }
        let e = b - a;
        let denom = dir.cross(e);
        if denom.abs() < 1e-15 {
            continue;
        }
        let t = a.cross(e) / denom;
        let s = a.cross(dir) / denom;
        if t > 1e-12 && (0.0..=1.0).contains(&s) && best.is_none_or(|(bt, _)| t < bt) {
            best = Some((t, conf[i] * (1.0 - s) + conf[(i + 1) % n] * s));
        }
    }
    best
}

/// Binary occupancy raster on the world lattice of spacing `cell`: the
/// cell `(c, r)` spans `[(ox + c) cell, (ox + c + 1) cell)` in x (same for
/// y with `oy + r`), so rasters with equal cell size align exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct FloorplanRaster {
    pub cell: f64,
    pub ox: i64,
    pub oy: i64,
    pub cols: usize,
    pub rows: usize,
    pub occupied: Vec<bool>,
    /// Index of the room group covering the cell.
    pub labels: Vec<Option<u32>>,
}

impl FloorplanRaster {
    pub fn empty(cell: f64) -> Self {
        Self { cell, ox: 0, oy: 0, cols: 0, rows: 0, occupied: vec![], labels: vec![] }
    }

    pub fn occupied_count(&self) -> usize {
        self.occupied.iter().filter(|&&o| o).count()
    }

    pub fn occupied_area(&self) -> f64 {
        self.occupied_count() as f64 * self.cell * self.cell
    }

    pub fn is_occupied(&self, gx: i64, gy: i64) -> bool {
        let (c, r) = (gx - self.ox, gy - self.oy);
        c >= 0 && r >= 0 && (c as usize) < self.cols && (r as usize) < self.rows && self.occupied[r as usize * self.cols + c as usize]
    }

    /// RGB rows, top row first: background white, labeled cells in a
    /// per-room color, unlabeled occupied cells gray.
    pub fn to_rgb8(&self) -> Vec<u8> {
        const PALETTE: [[u8; 3]; 8] = [
            [228, 26, 28],
            [55, 126, 184],
            [77, 175, 74],
            [152, 78, 163],
            [255, 127, 0],
            [166, 86, 40],
            [247, 129, 191],
            [153, 153, 153],
        ];
        let mut out = Vec::with_capacity(self.cols * self.rows * 3);
        for r in (0..self.rows).rev() {
            for c in 0..self.cols {
                let k = r * self.cols + c;
                let px = match (self.occupied[k], self.labels[k]) {
                    (_, Some(l)) => PALETTE[l as usize % PALETTE.len()],
                    (true, None) => [128, 128, 128],
                    (false, None) => [255, 255, 255],
                };
                out.extend_from_slice(&px);
            }
        }
        out
    }
}

/// Rasterizes polygon sets (one set per label) at cell centers. A cell
/// takes the label of the first set containing its center.
pub fn rasterize_labeled(sets: &[Vec<Vec<Vec2>>], cell: f64) -> FloorplanRaster {
    let all: Vec<&Vec2> = sets.iter().flatten().flatten().collect();
    if all.is_empty() {
        return FloorplanRaster::empty(cell);
    }
    let (mut lo, mut hi) = (Vec2::new(f64::INFINITY, f64::INFINITY), Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY));
    for p in all {
        lo = Vec2::new(lo.x.min(p.x), lo.y.min(p.y));
        hi = Vec2::new(hi.x.max(p.x), hi.y.max(p.y));
    }
    let (ox, oy) = ((lo.x / cell).floor() as i64 - 1, (lo.y / cell).floor() as i64 - 1);
    let cols = ((hi.x / cell).ceil() as i64 - ox + 1) as usize;
    let rows = ((hi.y / cell).ceil() as i64 - oy + 1) as usize;
    let mut raster = FloorplanRaster {
        cell,
        ox,
        oy,
        cols,
        rows,
        occupied: vec![false; cols * rows],
        labels: vec![None; cols * rows],
    };
    let origin = Vec2::new(ox as f64 * cell, oy as f64 * cell);
    for (label, polys) in sets.iter().enumerate() {
        for poly in polys {
            polygon::rasterize(poly, origin, cell, cols, rows, |c, r| {
                let k = r * cols + c;
                raster.occupied[k] = true;
                raster.labels[k].get_or_insert(label as u32);
            });
        }
    }
    raster
}

/// Union of all group shapes; each cell is labeled with the smallest group
/// index containing its center.
pub fn stitch(groups: &[RoomGroup], cell: f64) -> FloorplanRaster {
    let sets: Vec<Vec<Vec<Vec2>>> = groups.iter().map(|g| g.polygons.clone()).collect();
    rasterize_labeled(&sets, cell)
}

/// Room shapes mapped through a similarity, e.g. into the ground-truth
/// frame after evaluation alignment.
pub fn transform_groups(groups: &[RoomGroup], s: &Sim2) -> Vec<RoomGroup> {
    groups
        .iter()
        .map(|g| RoomGroup {
            members: g.members.clone(),
            polygons: g.polygons.iter().map(|poly| poly.iter().map(|&p| s.transform(p)).collect()).collect(),
        })
        .collect()
}

/// IoU of occupancy over the union of both rasters' extents.
pub fn floorplan_iou(a: &FloorplanRaster, b: &FloorplanRaster) -> Result<f64, FloorplanError> {
    if (a.cell - b.cell).abs() > 1e-12 {
        return Err(FloorplanError::CellMismatch(a.cell, b.cell));
    }
    let (mut inter, mut union) = (0usize, 0usize);
    let x0 = a.ox.min(b.ox);
    let y0 = a.oy.min(b.oy);
    let x1 = (a.ox + a.cols as i64).max(b.ox + b.cols as i64);
    let y1 = (a.oy + a.rows as i64).max(b.oy + b.rows as i64);
    for gy in y0..y1 {
        for gx in x0..x1 {
            let (p, q) = (a.is_occupied(gx, gy), b.is_occupied(gx, gy));
            inter += (p && q) as usize;
            union += (p || q) as usize;
        }
    }
    Ok(if union == 0 { 0.0 } else { inter as f64 / union as f64 })
}

/// Groups, voted contours and stitched raster for the posed panoramas.
pub fn reconstruct_floorplan(
    poses: &BTreeMap<PanoId, Pose2>,
    panos: &[PanoramaRecord],
    cfg: &FloorplanConfig,
) -> Result<(Vec<RoomGroup>, FloorplanRaster), FloorplanError> {
    let member_lists = group_panoramas(poses, panos, cfg.grouping_iou);
    let polygons = par::map(&member_lists, |m| extract_confident_contour(m, poses, panos));
    let mut groups = Vec::with_capacity(member_lists.len());
    for (members, polys) in member_lists.into_iter().zip(polygons) {
        groups.push(RoomGroup { members, polygons: polys? });
    }
    let raster = stitch(&groups, cfg.cell_size);
    Ok((groups, raster))
}

fn wdo_color(kind: WdoKind) -> &'static str {
    match kind {
        WdoKind::Window => "#1f77b4",
        WdoKind::Door => "#d62728",
        WdoKind::Opening => "#2ca02c",
    }
}

/// SVG drawing of room shapes, camera positions and W/D/O segments
/// (windows blue, doors red, openings green). World `+y` points up.
pub fn floorplan_svg(groups: &[RoomGroup], poses: &BTreeMap<PanoId, Pose2>, panos: &[PanoramaRecord]) -> String {
    let mut pts: Vec<Vec2> = groups.iter().flat_map(|g| g.polygons.iter().flatten().copied()).collect();
    pts.extend(poses.values().map(|p| p.translation()));
    let (lo, hi) = if pts.is_empty() { (Vec2::ZERO, Vec2::new(1.0, 1.0)) } else { polygon::bbox(&pts) };
    let (scale, pad) = (50.0, 20.0);
    let w = (hi.x - lo.x) * scale + 2.0 * pad;
    let h = (hi.y - lo.y) * scale + 2.0 * pad;
    let map = |p: Vec2| ((p.x - lo.x) * scale + pad, (hi.y - p.y) * scale + pad);
    let mut s = String::new();
    writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.2} {h:.2}">"#).unwrap();
    writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();
    for (gi, g) in groups.iter().enumerate() {
        for poly in &g.polygons {
            let d: Vec<String> = poly.iter().map(|&p| map(p)).map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
            writeln!(s, r##"<polygon class="room-{gi}" points="{}" fill="#e8e8e8" fill-opacity="0.5" stroke="#333" stroke-width="1"/>"##, d.join(" ")).unwrap();
        }
    }
    for p in panos {
        let Some(pose) = poses.get(&p.id) else { continue };
        for wdo in &p.wdos {
            let (a, b) = (map(pose.transform_point(wdo.endpoints[0])), map(pose.transform_point(wdo.endpoints[1])));
            writeln!(
                s,
                r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{}" stroke-width="3"/>"#,
                a.0,
                a.1,
                b.0,
                b.1,
                wdo_color(wdo.kind)
            )
            .unwrap();
        }
        let (cx, cy) = map(pose.translation());
        writeln!(s, r#"<circle cx="{cx:.2}" cy="{cy:.2}" r="3" fill="black"><title>{}</title></circle>"#, p.id).unwrap();
    }
    s.push_str("</svg>\n");
    s
}

/// Mean bearing spacing of a contour's ray fan, radians.
pub fn ray_step(vertex_count: usize) -> f64 {
    2.0 * PI / vertex_count.max(1) as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{generate_synthetic_home, RoomContour, SyntheticHomeConfig};
    use approx::assert_abs_diff_eq;

    fn rect(x0: f64, y0: f64, x1: f64, y1: f64) -> Vec<Vec2> {
        vec![Vec2::new(x0, y0), Vec2::new(x1, y0), Vec2::new(x1, y1), Vec2::new(x0, y1)]
    }

    /// Panorama at `cam` (world, zero heading) looking at `room` (world),
    /// with evenly spaced rays and the given confidence.
    fn pano(id: PanoId, room: &[Vec2], cam: Vec2, n: usize, conf: Option<f64>) -> (PanoramaRecord, Pose2) {
        let local: Vec<Vec2> = room.iter().map(|&v| v - cam).collect();
        let mut verts = Vec::new();
        let mut confs = Vec::new();
        for k in 0..n {
            let dir = Vec2::from_angle(-PI + 2.0 * PI * (k as f64 + 0.5) / n as f64);
            let d = polygon::ray_hit(Vec2::ZERO, dir, &local).unwrap();
            verts.push(dir * d);
            confs.push(conf.unwrap_or(crate::scene::distance_confidence(d)));
        }
        let rec = PanoramaRecord {
            id,
            contour: RoomContour::new(verts, confs),
            wdos: vec![],
            vanishing_angle: 0.0,
            camera_height: 1.5,
            gt_pose: Some(Pose2::from_parts(cam, 0.0)),
        };
        (rec, Pose2::from_parts(cam, 0.0))
    }

    fn setup(items: Vec<(PanoramaRecord, Pose2)>) -> (Vec<PanoramaRecord>, BTreeMap<PanoId, Pose2>) {
        let poses = items.iter().map(|(p, t)| (p.id, *t)).collect();
        (items.into_iter().map(|(p, _)| p).collect(), poses)
    }

    #[test]
    fn grouping_basic() {
        let a = rect(0.0, 0.0, 4.0, 4.0);
        let b = rect(4.0, 0.0, 8.0, 4.0);
        let (panos, poses) = setup(vec![
            pano(0, &a, Vec2::new(1.0, 1.0), 64, None),
            pano(1, &a, Vec2::new(3.0, 2.0), 64, None),
            pano(2, &b, Vec2::new(6.0, 2.0), 64, None),
        ]);
        assert_eq!(group_panoramas(&poses, &panos, 0.25), vec![vec![0, 1], vec![2]]);
        let mut rev = panos.clone();
        rev.reverse();
        assert_eq!(group_panoramas(&poses, &rev, 0.25), vec![vec![0, 1], vec![2]]);
    }

    #[test]
    fn grouping_is_transitive() {
        // L-shaped open space: A sees the west arm, C the north arm, B the corner
        let arm_w = rect(0.0, 0.0, 6.0, 3.0);
        let corner = rect(2.0, 0.0, 6.0, 6.0);
        let arm_n = rect(3.0, 2.0, 6.0, 9.0);
        let iou_ab = polygon::iou(&arm_w, &corner);
        let iou_bc = polygon::iou(&corner, &arm_n);
        let iou_ac = polygon::iou(&arm_w, &arm_n);
        assert!(iou_ab > 0.25 && iou_bc > 0.25 && iou_ac < 0.25, "{iou_ab} {iou_bc} {iou_ac}");
        let (panos, poses) = setup(vec![
            pano(0, &arm_w, Vec2::new(1.0, 1.5), 128, None),
            pano(1, &corner, Vec2::new(4.0, 3.0), 128, None),
            pano(2, &arm_n, Vec2::new(4.5, 7.0), 128, None),
        ]);
        assert_eq!(group_panoramas(&poses, &panos, 0.25), vec![vec![0, 1, 2]]);
    }

    #[test]
    fn single_member_keeps_contour() {
        let room = rect(0.0, 0.0, 4.0, 5.0);
        let (panos, poses) = setup(vec![pano(3, &room, Vec2::new(1.5, 2.0), 64, None)]);
        let polys = extract_confident_contour(&[3], &poses, &panos).unwrap();
        let expect = panos[0].contour.transformed(&poses[&3]);
        for (p, q) in polys[0].iter().zip(&expect) {
            assert!(p.distance(*q) < 1e-12);
        }
        assert_eq!(extract_confident_contour(&[], &poses, &panos), Err(FloorplanError::EmptyGroup));
    }

    #[test]
    fn confident_member_wins() {
        // the low-confidence panorama sees a bloated room; the confident
        // one sees the true room
        let room = rect(0.0, 0.0, 4.0, 5.0);
        let bloated = rect(-0.3, -0.3, 4.3, 5.3);
        let (panos, poses) = setup(vec![
            pano(0, &bloated, Vec2::new(1.0, 1.0), 256, Some(0.2)),
            pano(1, &room, Vec2::new(3.0, 3.5), 256, Some(0.9)),
        ]);
        let polys = extract_confident_contour(&[0, 1], &poses, &panos).unwrap();
        // each voted vertex of panorama 0 must lie within one ray step of the true walls
        for v in &polys[0] {
            let boundary_dist = [v.x.abs(), (v.x - 4.0).abs(), v.y.abs(), (v.y - 5.0).abs()]
                .into_iter()
                .fold(f64::INFINITY, f64::min);
            let reach = v.distance(Vec2::new(1.0, 1.0)) * ray_step(256) * 2.0;
            assert!(boundary_dist <= reach + 1e-9, "{v:?} off by {boundary_dist}");
        }
    }

    #[test]
    fn two_noiseless_panos_area() {
        let room = vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(5.0, 0.0),
            Vec2::new(5.0, 3.0),
            Vec2::new(3.0, 3.0),
            Vec2::new(3.0, 4.5),
            Vec2::new(0.0, 4.5),
        ];
        let (panos, poses) = setup(vec![
            pano(0, &room, Vec2::new(1.0, 1.0), 256, None),
            pano(1, &room, Vec2::new(4.0, 2.0), 256, None),
        ]);
        let polys = extract_confident_contour(&[0, 1], &poses, &panos).unwrap();
        let raster = rasterize_labeled(std::slice::from_ref(&polys), 0.01);
        let gt = polygon::area(&room);
        assert!((raster.occupied_area() - gt).abs() / gt < 0.01, "{} vs {gt}", raster.occupied_area());
        for (poly, id) in polys.iter().zip([0, 1]) {
            assert!(polygon::contains(poly, poses[&id].translation()));
        }
    }

    #[test]
    fn stitch_rect_area_and_monotone() {
        let g1 = RoomGroup { members: vec![0], polygons: vec![rect(0.0, 0.0, 4.0, 5.0)] };
        let r1 = stitch(std::slice::from_ref(&g1), 0.1);
        assert!((r1.occupied_area() - 20.0).abs() / 20.0 < 0.02);
        assert!(r1.labels.iter().zip(&r1.occupied).all(|(l, o)| l.is_none() || *o));
        let g2 = RoomGroup { members: vec![1], polygons: vec![rect(3.0, 0.0, 7.0, 2.0)] };
        let r2 = stitch(&[g1, g2], 0.1);
        for gy in r1.oy..r1.oy + r1.rows as i64 {
            for gx in r1.ox..r1.ox + r1.cols as i64 {
                if r1.is_occupied(gx, gy) {
                    assert!(r2.is_occupied(gx, gy));
                }
            }
        }
        // overlap cells keep the first group's label
        let c = ((3.5 / 0.1) as i64 - r2.ox) as usize;
        let r = ((1.0 / 0.1) as i64 - r2.oy) as usize;
        assert_eq!(r2.labels[r * r2.cols + c], Some(0));
        assert_eq!(stitch(&[], 0.1).occupied_count(), 0);
    }

    #[test]
    fn iou_against_brute_force() {
        let a = rasterize_labeled(&[vec![rect(0.0, 0.0, 2.0, 1.0)]], 0.1);
        assert_eq!(floorplan_iou(&a, &a).unwrap(), 1.0);
        let far = rasterize_labeled(&[vec![rect(10.0, 0.0, 12.0, 1.0)]], 0.1);
        assert_eq!(floorplan_iou(&a, &far).unwrap(), 0.0);
        let shifted = FloorplanRaster { ox: a.ox + 1, ..a.clone() };
        // brute force over explicit cell sets
        let cells = |r: &FloorplanRaster| -> std::collections::BTreeSet<(i64, i64)> {
            (0..r.rows)
                .flat_map(|y| (0..r.cols).map(move |x| (x, y)))
                .filter(|&(x, y)| r.occupied[y * r.cols + x])
                .map(|(x, y)| (x as i64 + r.ox, y as i64 + r.oy))
                .collect()
        };
        let (sa, sb) = (cells(&a), cells(&shifted));
        let expect = sa.intersection(&sb).count() as f64 / sa.union(&sb).count() as f64;
        assert_abs_diff_eq!(floorplan_iou(&a, &shifted).unwrap(), expect);
        let coarse = rasterize_labeled(&[vec![rect(0.0, 0.0, 2.0, 1.0)]], 0.2);
        assert!(matches!(floorplan_iou(&a, &coarse), Err(FloorplanError::CellMismatch(..))));
    }

    #[test]
    fn gt_poses_reproduce_gt_floorplan() {
        for seed in 0..4 {
            let scene = generate_synthetic_home(&SyntheticHomeConfig { seed, ..SyntheticHomeConfig::new(6, 2, seed) }).unwrap();
            let poses = scene.gt_poses();
            let (groups, raster) = reconstruct_floorplan(&poses, &scene.panoramas, &FloorplanConfig::default()).unwrap();
            let gt = rasterize_labeled(&[scene.gt_floorplan.clone().unwrap()], 0.1);
            let iou = floorplan_iou(&raster, &gt).unwrap();
            assert!(iou >= 0.98, "seed {seed}: iou {iou}");
            let total: usize = groups.iter().map(|g| g.members.len()).sum();
            assert_eq!(total, scene.panoramas.len());
        }
    }
}
