//! Simple-polygon helpers: area, containment, ray casting, overlap and
//! scanline rasterization at cell centers.

use geo::{Area, BooleanOps, Coord, LineString, Polygon};

use crate::geom::Vec2;

pub fn signed_area(poly: &[Vec2]) -> f64 {
    let n = poly.len();
    if n < 3 {
        return 0.0;
    }
    let mut acc = 0.0;
    for i in 0..n {
        acc += poly[i].cross(poly[(i + 1) % n]);
    }
    0.5 * acc
}

pub fn area(poly: &[Vec2]) -> f64 {
    signed_area(poly).abs()
}

pub fn centroid(poly: &[Vec2]) -> Vec2 {
    let n = poly.len();
    let a = signed_area(poly);
    if a.abs() < 1e-15 {
        return poly.iter().fold(Vec2::ZERO, |s, &p| s + p) * (1.0 / n.max(1) as f64);
    }
    let mut c = Vec2::ZERO;
    for i in 0..n {
        let (p, q) = (poly[i], poly[(i + 1) % n]);
        c += (p + q) * p.cross(q);
    }
    c * (1.0 / (6.0 * a))
}

/// Even-odd containment with the half-open crossing rule used by
/// [`rasterize`].
pub fn contains(poly: &[Vec2], p: Vec2) -> bool {
    let n = poly.len();
    let mut inside = false;
    let mut j = n.wrapping_sub(1);
    for i in 0..n {
        let (a, b) = (poly[i], poly[j]);
        if (a.y > p.y) != (b.y > p.y) {
            let x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if p.x < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

pub fn bbox(poly: &[Vec2]) -> (Vec2, Vec2) {
    let mut lo = Vec2::new(f64::INFINITY, f64::INFINITY);
    let mut hi = Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in poly {
        lo = Vec2::new(lo.x.min(p.x), lo.y.min(p.y));
        hi = Vec2::new(hi.x.max(p.x), hi.y.max(p.y));
    }
    (lo, hi)
}

fn orient(a: Vec2, b: Vec2, c: Vec2) -> f64 {
    (b - a).cross(c - a)
}

/// Closed-segment intersection test, including touching and collinear
/// overlap.
pub fn segments_intersect(a: Vec2, b: Vec2, c: Vec2, d: Vec2) -> bool {
    let (d1, d2) = (orient(c, d, a), orient(c, d, b));
    let (d3, d4) = (orient(a, b, c), orient(a, b, d));
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    let on = |p: Vec2, q: Vec2, r: Vec2, o: f64| {
        o == 0.0 && r.x >= p.x.min(q.x) && r.x <= p.x.max(q.x) && r.y >= p.y.min(q.y) && r.y <= p.y.max(q.y)
    };
    on(c, d, a, d1) || on(c, d, b, d2) || on(a, b, c, d3) || on(a, b, d, d4)
}

/// Proper crossing: the open segments cross at a single interior point.
pub fn segments_cross(a: Vec2, b: Vec2, c: Vec2, d: Vec2) -> bool {
    let (d1, d2) = (orient(c, d, a), orient(c, d, b));
    let (d3, d4) = (orient(a, b, c), orient(a, b, d));
    d1 * d2 < 0.0 && d3 * d4 < 0.0
}

/// True when no two non-adjacent edges touch and no vertex repeats.
pub fn is_simple(poly: &[Vec2]) -> bool {
    let n = poly.len();
    if n < 3 {
        return false;
    }
    for i in 0..n {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        if a == b {
            return false;
        }
        for j in (i + 1)..n {
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            if adjacent {
                continue;
            }
            let (c, d) = (poly[j], poly[(j + 1) % n]);
            if segments_intersect(a, b, c, d) {
                return false;
            }
        }
    }
    true
}

/// Distance along `dir` (unit) from `origin` to the nearest polygon edge,
/// if any edge is hit.
pub fn ray_hit(origin: Vec2, dir: Vec2, poly: &[Vec2]) -> Option<f64> {
    let n = poly.len();
    let mut best: Option<f64> = None;
    for i in 0..n {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        let e = b - a;
        let denom = dir.cross(e);
        if denom.abs() < 1e-15 {
            continue;
        }
        let w = a - origin;
        let t = w.cross(e) / denom;
        let s = w.cross(dir) / denom;
        if t > 1e-12 && (-1e-12..=1.0 + 1e-12).contains(&s) && best.is_none_or(|bt| t < bt) {
            best = Some(t);
        }
    }
    best
}

fn to_geo(poly: &[Vec2]) -> Polygon<f64> {
    let coords: Vec<Coord<f64>> = poly.iter().map(|p| Coord { x: p.x, y: p.y }).collect();
    Polygon::new(LineString::new(coords), vec![])
}

/// Exact area of the intersection of two simple polygons.
pub fn intersection_area(a: &[Vec2], b: &[Vec2]) -> f64 {
    let (alo, ahi) = bbox(a);
    let (blo, bhi) = bbox(b);
    if alo.x > bhi.x || blo.x > ahi.x || alo.y > bhi.y || blo.y > ahi.y {
        return 0.0;
    }
    to_geo(a).intersection(&to_geo(b)).unsigned_area()
}

/// Intersection over union of two simple polygons.
pub fn iou(a: &[Vec2], b: &[Vec2]) -> f64 {
    let inter = intersection_area(a, b);
    let union = area(a) + area(b) - inter;
    if union <= 0.0 {
        0.0
    } else {
        (inter / union).clamp(0.0, 1.0)
    }
}

/// Visits every cell `(col, row)` of the grid whose center lies inside
/// `poly`. Cell `(c, r)` has center `origin + ((c + 0.5) cell, (r + 0.5) cell)`;
/// rows grow along +y.
pub fn rasterize(poly: &[Vec2], origin: Vec2, cell: f64, cols: usize, rows: usize, mut visit: impl FnMut(usize, usize)) {
    let n = poly.len();
    if n < 3 || cols == 0 || rows == 0 {
        return;
    }
    let (lo, hi) = bbox(poly);
    let r0 = (((lo.y - origin.y) / cell - 0.5).floor().max(0.0)) as usize;
    let r1 = ((((hi.y - origin.y) / cell - 0.5).ceil()).max(0.0) as usize).min(rows - 1);
    let mut xs: Vec<f64> = Vec::new();
    for r in r0..=r1 {
        let y = origin.y + (r as f64 + 0.5) * cell;
        xs.clear();
        let mut j = n - 1;
        for i in 0..n {
            let (a, b) = (poly[i], poly[j]);
            if (a.y > y) != (b.y > y) {
                xs.push(a.x + (y - a.y) * (b.x - a.x) / (b.y - a.y));
            }
            j = i;
        }
        xs.sort_by(|p, q| p.total_cmp(q));
        for pair in xs.chunks_exact(2) {
            // centers x with pair[0] <= x < pair[1]
            let c0 = ((pair[0] - origin.x) / cell - 0.5).ceil().max(0.0);
            let c1 = ((pair[1] - origin.x) / cell - 0.5).ceil();
            if c1 <= 0.0 {
                continue;
            }
            let (c0, c1) = (c0 as usize, (c1 as usize + 1).min(cols));
            for c in c0.saturating_sub(1)..c1 {
                // the rounded range may be off by one; the exact predicate decides
                let x = origin.x + (c as f64 + 0.5) * cell;
                if x >= pair[0] && x < pair[1] {
                    visit(c, r);
                }
            }
        }
    }
}
