//! Bird's-eye-view rasters of floor and ceiling texture around a camera,
//! with triangulated sparse-to-dense interpolation and a box-filter
//! reliability mask.
//!
//! Grid frame: the camera sits at the grid center, `+x` right, `+y` up.
//! Cell `(c, r)` covers `[x0 + c*res, x0 + (c+1)*res) x [y0 + r*res, ...)`
//! with `x0 = y0 = -size*res/2`, so row 0 is the bottom row.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::geom::{Pose2, Vec2};
use crate::polygon;
use crate::scene::PanoramaRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Surface {
    Floor,
    Ceiling,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BevConfig {
    /// Meters per cell.
    pub resolution: f64,
    /// Cells per side.
    pub size: usize,
    /// Equirectangular sampling grid used for forward projection.
    pub pano_width: u32,
    pub pano_height: u32,
    /// Floor samples are kept only this far below the camera.
    pub floor_min_depth: f64,
    /// Ceiling samples are kept only this far above the camera.
    pub ceiling_min_height: f64,
    /// Height of the ceiling plane above the camera. Scenes carry no
    /// ceiling height, so this is a fixed knob.
    pub ceiling_offset: f64,
}

impl Default for BevConfig {
    fn default() -> Self {
        Self {
            resolution: 0.02,
            size: 500,
            pano_width: 4096,
            pano_height: 2048,
            floor_min_depth: 1.0,
            ceiling_min_height: 0.5,
            ceiling_offset: 1.1,
        }
    }
}

/// Square raster of intensities in `[0, 1]` plus per-cell occupancy.
#[derive(Debug, Clone, PartialEq)]
pub struct BevGrid {
    pub resolution: f64,
    pub size: usize,
    pub intensity: Vec<f32>,
    pub occupied: Vec<bool>,
}

impl BevGrid {
    pub fn new(resolution: f64, size: usize) -> Self {
        Self { resolution, size, intensity: vec![0.0; size * size], occupied: vec![false; size * size] }
    }

    pub fn origin(&self) -> Vec2 {
        let h = -0.5 * self.size as f64 * self.resolution;
        Vec2::new(h, h)
    }

    pub fn index(&self, c: usize, r: usize) -> usize {
        r * self.size + c
    }

    pub fn cell_center(&self, c: usize, r: usize) -> Vec2 {
        self.origin() + Vec2::new((c as f64 + 0.5) * self.resolution, (r as f64 + 0.5) * self.resolution)
    }

    pub fn cell_of(&self, p: Vec2) -> Option<(usize, usize)> {
        let o = self.origin();
        let c = ((p.x - o.x) / self.resolution).floor();
        let r = ((p.y - o.y) / self.resolution).floor();
        let n = self.size as f64;
        (c >= 0.0 && r >= 0.0 && c < n && r < n).then_some((c as usize, r as usize))
    }

    pub fn set(&mut self, c: usize, r: usize, v: f32) {
        let k = self.index(c, r);
        self.intensity[k] = v;
        self.occupied[k] = true;
    }

    pub fn occupied_count(&self) -> usize {
        self.occupied.iter().filter(|&&o| o).count()
    }

    /// 8-bit grayscale rows, top row first (image convention).
    pub fn to_gray8(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.size * self.size);
        for r in (0..self.size).rev() {
            for c in 0..self.size {
                out.push((self.intensity[self.index(c, r)].clamp(0.0, 1.0) * 255.0).round() as u8);
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReliabilityMask {
    pub kernel_size: usize,
    pub size: usize,
    pub cells: Vec<bool>,
}

impl ReliabilityMask {
    pub fn get(&self, c: usize, r: usize) -> bool {
        self.cells[r * self.size + c]
    }

    pub fn count(&self) -> usize {
        self.cells.iter().filter(|&&m| m).count()
    }
}

/// Deterministic procedural texture keyed to world coordinates: value noise
/// on a 0.15 m lattice blended with diagonal stripes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProceduralTexture {
    pub seed: u64,
}

impl ProceduralTexture {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    fn lattice(&self, i: i64, j: i64) -> f64 {
        let mut h = self.seed ^ (i as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ (j as u64).wrapping_mul(0xC2B2_AE3D_27D4_EB4F);
        h ^= h >> 31;
        h = h.wrapping_mul(0xBF58_476D_1CE4_E5B9);
        h ^= h >> 29;
        (h >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn sample(&self, p: Vec2) -> f64 {
        let cell = 0.15;
        let (gx, gy) = (p.x / cell, p.y / cell);
        let (i, j) = (gx.floor(), gy.floor());
        let (fx, fy) = (gx - i, gy - j);
        let (i, j) = (i as i64, j as i64);
        let top = self.lattice(i, j + 1) * (1.0 - fx) + self.lattice(i + 1, j + 1) * fx;
        let bot = self.lattice(i, j) * (1.0 - fx) + self.lattice(i + 1, j) * fx;
        let noise = bot * (1.0 - fy) + top * fy;
        let phase = (self.seed % 997) as f64 * 0.01;
        let stripes = 0.5 + 0.5 * (2.0 * PI * (p.x * 0.8 + p.y * 0.6) / 0.7 + phase).sin();
        (0.7 * noise + 0.3 * stripes).clamp(0.0, 1.0)
    }
}

/// Forward-projects the equirectangular sampling grid onto the floor (or
/// ceiling) plane of `p`'s room, keeps points inside the room contour and
/// writes `texture(world point)` into the camera-centered grid. `world`
/// places the camera for texture lookup only.
///
/// Rows are written starting at the bottom of the panorama and moving
/// toward the horizon (top of the panorama for the ceiling, moving down);
/// when several samples land in one cell the last one written wins.
pub fn render_bev(
    p: &PanoramaRecord,
    world: &Pose2,
    surface: Surface,
    texture: impl Fn(Vec2) -> f64,
    cfg: &BevConfig,
) -> BevGrid {
    let mut grid = BevGrid::new(cfg.resolution, cfg.size);
    let plane_dist = match surface {
        Surface::Floor if p.camera_height >= cfg.floor_min_depth => p.camera_height,
        Surface::Ceiling if cfg.ceiling_offset >= cfg.ceiling_min_height => cfg.ceiling_offset,
        _ => return grid,
    };
    let (w, h) = (cfg.pano_width.max(2), cfg.pano_height.max(2));
    let max_range = cfg.size as f64 * cfg.resolution * std::f64::consts::FRAC_1_SQRT_2 + cfg.resolution;
    let (lo, hi) = polygon::bbox(&p.contour.vertices);
    let sin_cos: Vec<(f64, f64)> = (0..w).map(|u| (u as f64 * 2.0 * PI / (w - 1) as f64 - PI).sin_cos()).collect();
    let rows: Box<dyn Iterator<Item = u32>> = match surface {
        Surface::Floor => Box::new((h / 2..h).rev()),
        Surface::Ceiling => Box::new(0..h.div_ceil(2)),
    };
    for v in rows {
        let lat = PI * (1.0 - v as f64 / (h - 1) as f64) - PI / 2.0;
        let t = lat.abs().tan();
        let facing = match surface {
            Surface::Floor => lat < 0.0,
            Surface::Ceiling => lat > 0.0,
        };
        if !facing || t < 1e-12 {
            continue;
        }
        let range = plane_dist / t;
        if range > max_range {
            continue;
        }
        for &(s, c) in &sin_cos {
            // ray (cos lat sin lon, ., cos lat cos lon) hits the plane at
            // horizontal distance `range` along (sin lon, cos lon)
            let q = Vec2::new(range * s, range * c);
            if q.x < lo.x || q.x > hi.x || q.y < lo.y || q.y > hi.y || !polygon::contains(&p.contour.vertices, q) {
                continue;
            }
            if let Some((cc, rr)) = grid.cell_of(q) {
                grid.set(cc, rr, texture(world.transform_point(q)).clamp(0.0, 1.0) as f32);
            }
        }
    }
    grid
}

/// Cells whose `k x k` neighborhood (clipped at the border) holds at least
/// one occupied cell, via a summed-area table.
pub fn reliability_mask(occupied: &[bool], size: usize, k: usize) -> ReliabilityMask {
    assert!(k % 2 == 1, "kernel size must be odd");
    let s = size + 1;
    let mut sat = vec![0u32; s * s];
    for r in 0..size {
        for c in 0..size {
            sat[(r + 1) * s + c + 1] =
                occupied[r * size + c] as u32 + sat[r * s + c + 1] + sat[(r + 1) * s + c] - sat[r * s + c];
        }
    }
    let half = k / 2;
    let mut cells = vec![false; size * size];
    for r in 0..size {
        let (r0, r1) = (r.saturating_sub(half), (r + half + 1).min(size));
        for c in 0..size {
            let (c0, c1) = (c.saturating_sub(half), (c + half + 1).min(size));
            let n = sat[r1 * s + c1] + sat[r0 * s + c0] - sat[r0 * s + c1] - sat[r1 * s + c0];
            cells[r * size + c] = n > 0;
        }
    }
    ReliabilityMask { kernel_size: k, size, cells }
}

/// Fills the grid by barycentric interpolation over a Delaunay
/// triangulation of the occupied cell centers, then zeroes every cell the
/// reliability mask rejects. Cells outside the hull of the samples stay
/// empty.
pub fn densify(g: &BevGrid, k: usize) -> (BevGrid, ReliabilityMask) {
    assert!(k % 2 == 1 && k >= 1, "kernel size must be odd and positive");
    let n = g.size;
    let mask = reliability_mask(&g.occupied, n, k);
    let mut out = g.clone();
    let samples: Vec<(usize, usize)> =
        (0..n * n).filter(|&i| g.occupied[i]).map(|i| (i % n, i / n)).collect();
    if samples.len() >= 3 && samples.len() < n * n {
        // integer cell coordinates triangulate exactly
        let pts: Vec<delaunator::Point> =
            samples.iter().map(|&(c, r)| delaunator::Point { x: c as f64, y: r as f64 }).collect();
        let tri = delaunator::triangulate(&pts);
        for t in tri.triangles.chunks_exact(3) {
            let [a, b, c] = [t[0], t[1], t[2]].map(|i| (pts[i].x, pts[i].y, g.intensity[g.index(samples[i].0, samples[i].1)] as f64));
            let det = (b.1 - c.1) * (a.0 - c.0) + (c.0 - b.0) * (a.1 - c.1);
            if det.abs() < 1e-12 {
                continue;
            }
            let (x0, x1) = (a.0.min(b.0).min(c.0) as usize, a.0.max(b.0).max(c.0) as usize);
            let (y0, y1) = (a.1.min(b.1).min(c.1) as usize, a.1.max(b.1).max(c.1) as usize);
            for y in y0..=y1 {
                for x in x0..=x1 {
                    let idx = y * n + x;
                    if out.occupied[idx] {
                        continue;
                    }
                    let (px, py) = (x as f64, y as f64);
                    let l1 = ((b.1 - c.1) * (px - c.0) + (c.0 - b.0) * (py - c.1)) / det;
                    let l2 = ((c.1 - a.1) * (px - c.0) + (a.0 - c.0) * (py - c.1)) / det;
                    let l3 = 1.0 - l1 - l2;
                    if l1 >= -1e-9 && l2 >= -1e-9 && l3 >= -1e-9 {
                        out.intensity[idx] = (l1 * a.2 + l2 * b.2 + l3 * c.2).clamp(0.0, 1.0) as f32;
                        out.occupied[idx] = true;
                    }
                }
            }
        }
    }
    for (i, &reliable) in mask.cells.iter().enumerate() {
        if !reliable {
            out.intensity[i] = 0.0;
            out.occupied[i] = false;
        }
    }
    (out, mask)
}

fn directed_overlap(a: &BevGrid, b: &BevGrid, map: impl Fn(Vec2) -> Vec2) -> (usize, usize) {
    let mut hit = vec![false; a.size * a.size];
    let mut mapped = 0;
    for r in 0..b.size {
        for c in 0..b.size {
            if !b.occupied[b.index(c, r)] {
                continue;
            }
            if let Some((ca, ra)) = a.cell_of(map(b.cell_center(c, r))) {
                let k = a.index(ca, ra);
                if !hit[k] {
                    hit[k] = true;
                    mapped += 1;
                }
            }
        }
    }
    let inter = hit.iter().zip(&a.occupied).filter(|(h, o)| **h && **o).count();
    (inter, a.occupied_count() + mapped - inter)
}

/// IoU of occupied cells with `b` placed by `i_t_j` in `a`'s frame. Both
/// mapping directions are evaluated and averaged, so swapping the grids and
/// inverting the pose gives the same value.
pub fn overlap_iou(a: &BevGrid, b: &BevGrid, i_t_j: &Pose2) -> f64 {
    assert!((a.resolution - b.resolution).abs() < 1e-12, "grids must share resolution");
    let ratio = |(i, u): (usize, usize)| if u == 0 { 0.0 } else { i as f64 / u as f64 };
    let fwd = ratio(directed_overlap(a, b, |p| i_t_j.transform_point(p)));
    let bwd = ratio(directed_overlap(b, a, |p| i_t_j.inverse_transform_point(p)));
    0.5 * (fwd + bwd)
}
