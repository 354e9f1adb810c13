use crate::error::GeoError;

/// Simple polygon with an exterior ring and zero or more interior rings
/// (holes), in map coordinates.
///
/// Rings are closed: at least 4 vertices with first == last. The exterior
/// ring is checked for self-intersection at construction. Holes are assumed
/// nested inside the exterior and mutually disjoint; there is no topology
/// repair.
#[derive(Debug, Clone, PartialEq)]
pub struct Polygon {
    exterior: Vec<(f64, f64)>,
    interiors: Vec<Vec<(f64, f64)>>,
}

impl Polygon {
    pub fn new(
        exterior: Vec<(f64, f64)>,
        interiors: Vec<Vec<(f64, f64)>>,
    ) -> Result<Self, GeoError> {
        validate_ring(&exterior)?;
        for ring in &interiors {
            validate_ring(ring)?;
        }
        if exterior_self_intersects(&exterior) {
            return Err(GeoError::InvalidRing(
                "exterior ring is self-intersecting".into(),
            ));
        }
        Ok(Polygon {
            exterior,
            interiors,
        })
    }

    /// Axis-aligned rectangle from two opposite corners.
    pub fn rect(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        let (xa, xb) = (x0.min(x1), x0.max(x1));
        let (ya, yb) = (y0.min(y1), y0.max(y1));
        Polygon {
            exterior: vec![(xa, ya), (xb, ya), (xb, yb), (xa, yb), (xa, ya)],
            interiors: Vec::new(),
        }
    }

    pub fn exterior(&self) -> &[(f64, f64)] {
        &self.exterior
    }

    pub fn interiors(&self) -> &[Vec<(f64, f64)>] {
        &self.interiors
    }

    /// Area in m^2: exterior minus holes.
    pub fn area(&self) -> f64 {
        let mut a = ring_signed_area(&self.exterior).abs();
        for ring in &self.interiors {
            a -= ring_signed_area(ring).abs();
        }
        a
    }

    /// `(min_x, min_y, max_x, max_y)` of the exterior ring.
    pub fn bbox(&self) -> (f64, f64, f64, f64) {
        let mut min_x = f64::INFINITY;
        let mut min_y = f64::INFINITY;
        let mut max_x = f64::NEG_INFINITY;
        let mut max_y = f64::NEG_INFINITY;
        for &(x, y) in &self.exterior {
            min_x = min_x.min(x);
            min_y = min_y.min(y);
            max_x = max_x.max(x);
            max_y = max_y.max(y);
        }
        (min_x, min_y, max_x, max_y)
    }

    /// Even-odd containment test over all rings, so points in holes are
    /// outside.
    pub fn contains_point(&self, x: f64, y: f64) -> bool {
        let mut crossings = 0usize;
        for ring in std::iter::once(&self.exterior).chain(self.interiors.iter()) {
            crossings += ray_crossings(ring, x, y);
        }
        crossings % 2 == 1
    }

    /// Area-weighted centroid via the shoelace formula, holes subtracted.
    pub fn centroid(&self) -> Result<(f64, f64), GeoError> {
        let (a_ext, (cx_ext, cy_ext)) = ring_area_centroid(&self.exterior);
        let mut area = a_ext;
        let mut cx = a_ext * cx_ext;
        let mut cy = a_ext * cy_ext;
        for ring in &self.interiors {
            let (a, (hx, hy)) = ring_area_centroid(ring);
            area -= a;
            cx -= a * hx;
            cy -= a * hy;
        }
        if area.abs() < 1e-12 {
            return Err(GeoError::DegeneratePolygon);
        }
        Ok((cx / area, cy / area))
    }
}

fn validate_ring(ring: &[(f64, f64)]) -> Result<(), GeoError> {
    if ring.len() < 4 {
        return Err(GeoError::InvalidRing(format!(
            "ring has {} vertices, need at least 4",
            ring.len()
        )));
    }
    if ring[0] != ring[ring.len() - 1] {
        return Err(GeoError::InvalidRing(
            "ring is not closed (first vertex != last)".into(),
        ));
    }
    if ring.iter().any(|&(x, y)| !x.is_finite() || !y.is_finite()) {
        return Err(GeoError::InvalidRing("ring has non-finite coordinates".into()));
    }
    Ok(())
}

/// Signed area of a closed ring (positive = counter-clockwise).
fn ring_signed_area(ring: &[(f64, f64)]) -> f64 {
    let mut sum = 0.0;
    for w in ring.windows(2) {
        let (x0, y0) = w[0];
        let (x1, y1) = w[1];
        sum += x0 * y1 - x1 * y0;
    }
    sum * 0.5
}

/// Unsigned area and centroid of a closed ring.
fn ring_area_centroid(ring: &[(f64, f64)]) -> (f64, (f64, f64)) {
    let mut a2 = 0.0;
    let mut cx = 0.0;
    let mut cy = 0.0;
    for w in ring.windows(2) {
        let (x0, y0) = w[0];
        let (x1, y1) = w[1];
        let cross = x0 * y1 - x1 * y0;
        a2 += cross;
        cx += (x0 + x1) * cross;
        cy += (y0 + y1) * cross;
    }
    if a2.abs() < f64::MIN_POSITIVE {
        // fall back to vertex mean for zero-area rings; callers reject them
        let n = (ring.len() - 1) as f64;
        let mx = ring[..ring.len() - 1].iter().map(|p| p.0).sum::<f64>() / n;
        let my = ring[..ring.len() - 1].iter().map(|p| p.1).sum::<f64>() / n;
        return (0.0, (mx, my));
    }
    let area = a2 * 0.5;
    (area.abs(), (cx / (3.0 * a2), cy / (3.0 * a2)))
}

/// Number of ring edges crossed by a leftward ray from `(x, y)`.
///
/// Half-open vertical rule: an edge counts iff exactly one endpoint is
/// strictly below the query y. Horizontal edges never count.
fn ray_crossings(ring: &[(f64, f64)], x: f64, y: f64) -> usize {
    let mut n = 0;
    for w in ring.windows(2) {
        let (x0, y0) = w[0];
        let (x1, y1) = w[1];
        if (y0 <= y) != (y1 <= y) {
            let t = (y - y0) / (y1 - y0);
            let xi = x0 + t * (x1 - x0);
            if xi < x {
                n += 1;
            }
        }
    }
    n
}

fn orient(a: (f64, f64), b: (f64, f64), c: (f64, f64)) -> f64 {
    (b.0 - a.0) * (c.1 - a.1) - (b.1 - a.1) * (c.0 - a.0)
}

fn segments_cross(p0: (f64, f64), p1: (f64, f64), q0: (f64, f64), q1: (f64, f64)) -> bool {
    let d0 = orient(p0, p1, q0);
    let d1 = orient(p0, p1, q1);
    let d2 = orient(q0, q1, p0);
    let d3 = orient(q0, q1, p1);
    if ((d0 > 0.0 && d1 < 0.0) || (d0 < 0.0 && d1 > 0.0))
        && ((d2 > 0.0 && d3 < 0.0) || (d2 < 0.0 && d3 > 0.0))
    {
        return true;
    }
    // collinear overlap between non-adjacent edges is also invalid
    let on = |a: (f64, f64), b: (f64, f64), c: (f64, f64)| {
        orient(a, b, c) == 0.0
            && c.0 >= a.0.min(b.0)
            && c.0 <= a.0.max(b.0)
            && c.1 >= a.1.min(b.1)
            && c.1 <= a.1.max(b.1)
    };
    on(p0, p1, q0) || on(p0, p1, q1) || on(q0, q1, p0) || on(q0, q1, p1)
}

fn exterior_self_intersects(ring: &[(f64, f64)]) -> bool {
    // edges i = 0..n-1 over the open ring of n vertices
    let n = ring.len() - 1;
    for i in 0..n {
        for j in (i + 1)..n {
            // skip adjacent edges (sharing a vertex), including the wrap pair
            if j == i + 1 || (i == 0 && j == n - 1) {
                continue;
            }
            if segments_cross(ring[i], ring[i + 1], ring[j], ring[j + 1]) {
                return true;
            }
        }
    }
    false
}

/// Fan-free ear-clipping triangulation of one closed ring.
fn triangulate_ring(ring: &[(f64, f64)]) -> Vec<[(f64, f64); 3]> {
    let mut pts: Vec<(f64, f64)> = ring[..ring.len() - 1].to_vec();
    if ring_signed_area(ring) < 0.0 {
        pts.reverse();
    }
    let mut tris = Vec::with_capacity(pts.len().saturating_sub(2));
    while pts.len() > 3 {
        let n = pts.len();
        let mut clipped = false;
        let mut best_fallback = 0usize;
        let mut best_cross = f64::NEG_INFINITY;
        for i in 0..n {
            let prev = pts[(i + n - 1) % n];
            let cur = pts[i];
            let next = pts[(i + 1) % n];
            let cross = orient(prev, cur, next);
            if cross > best_cross {
                best_cross = cross;
                best_fallback = i;
            }
            if cross <= 1e-20 {
                continue; // reflex or collinear
            }
            let mut is_ear = true;
            for (j, &p) in pts.iter().enumerate() {
                if j == (i + n - 1) % n || j == i || j == (i + 1) % n {
                    continue;
                }
                if point_in_triangle(p, prev, cur, next) {
                    is_ear = false;
                    break;
                }
            }
            if is_ear {
                tris.push([prev, cur, next]);
                pts.remove(i);
                clipped = true;
                break;
            }
        }
        if !clipped {
            // numerically degenerate input; clip the most convex corner to
            // guarantee progress
            let i = best_fallback;
            let prev = pts[(i + n - 1) % n];
            let next = pts[(i + 1) % n];
            tris.push([prev, pts[i], next]);
            pts.remove(i);
        }
    }
    tris.push([pts[0], pts[1], pts[2]]);
    tris
}

fn point_in_triangle(p: (f64, f64), a: (f64, f64), b: (f64, f64), c: (f64, f64)) -> bool {
    let d0 = orient(a, b, p);
    let d1 = orient(b, c, p);
    let d2 = orient(c, a, p);
    d0 >= 0.0 && d1 >= 0.0 && d2 >= 0.0
}

/// Clip a convex subject polygon against a convex CCW clip polygon
/// (Sutherland-Hodgman) and return the clipped vertex list.
fn clip_convex(subject: &[(f64, f64)], clip: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut out: Vec<(f64, f64)> = subject.to_vec();
    let m = clip.len();
    for e in 0..m {
        if out.is_empty() {
            return out;
        }
        let a = clip[e];
        let b = clip[(e + 1) % m];
        let input = std::mem::take(&mut out);
        let n = input.len();
        for i in 0..n {
            let cur = input[i];
            let prev = input[(i + n - 1) % n];
            let cur_in = orient(a, b, cur) >= 0.0;
            let prev_in = orient(a, b, prev) >= 0.0;
            if cur_in {
                if !prev_in {
                    out.push(line_intersection(a, b, prev, cur));
                }
                out.push(cur);
            } else if prev_in {
                out.push(line_intersection(a, b, prev, cur));
            }
        }
    }
    out
}

fn line_intersection(a: (f64, f64), b: (f64, f64), p: (f64, f64), q: (f64, f64)) -> (f64, f64) {
    let r = (b.0 - a.0, b.1 - a.1);
    let s = (q.0 - p.0, q.1 - p.1);
    let denom = r.0 * s.1 - r.1 * s.0;
    if denom == 0.0 {
        return p; // parallel; degenerate contact contributes no area
    }
    let t = ((p.0 - a.0) * s.1 - (p.1 - a.1) * s.0) / denom;
    (a.0 + t * r.0, a.1 + t * r.1)
}

fn open_vertices(tri: &[(f64, f64); 3]) -> Vec<(f64, f64)> {
    let mut v = tri.to_vec();
    // clip polygons must be CCW
    if orient(v[0], v[1], v[2]) < 0.0 {
        v.reverse();
    }
    v
}

fn convex_area(pts: &[(f64, f64)]) -> f64 {
    if pts.len() < 3 {
        return 0.0;
    }
    let mut sum = 0.0;
    let n = pts.len();
    for i in 0..n {
        let (x0, y0) = pts[i];
        let (x1, y1) = pts[(i + 1) % n];
        sum += x0 * y1 - x1 * y0;
    }
    (sum * 0.5).abs()
}

fn ring_intersection_area(ra: &[(f64, f64)], rb: &[(f64, f64)]) -> f64 {
    let tris_a = triangulate_ring(ra);
    let tris_b = triangulate_ring(rb);
    let mut total = 0.0;
    for ta in &tris_a {
        let (a_min_x, a_max_x) = minmax(ta.iter().map(|p| p.0));
        let (a_min_y, a_max_y) = minmax(ta.iter().map(|p| p.1));
        let ca = open_vertices(ta);
        for tb in &tris_b {
            let (b_min_x, b_max_x) = minmax(tb.iter().map(|p| p.0));
            if a_max_x < b_min_x || b_max_x < a_min_x {
                continue;
            }
            let (b_min_y, b_max_y) = minmax(tb.iter().map(|p| p.1));
            if a_max_y < b_min_y || b_max_y < a_min_y {
                continue;
            }
            let cb = open_vertices(tb);
            total += convex_area(&clip_convex(&ca, &cb));
        }
    }
    total
}

fn minmax(vals: impl Iterator<Item = f64>) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for v in vals {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    (lo, hi)
}

fn poly_cmp_key(p: &Polygon) -> (usize, &[(f64, f64)]) {
    (p.exterior.len(), &p.exterior)
}

/// Area of the geometric intersection of two polygons, in m^2.
///
/// Computed by triangulating each ring and clipping triangle pairs, with
/// hole contributions removed by inclusion-exclusion. Arguments are
/// canonically ordered first so the result is exactly symmetric. Slivers
/// below 1e-12 m^2 count as empty.
pub fn polygon_intersection_area(a: &Polygon, b: &Polygon) -> Result<f64, GeoError> {
    if a.area() < 1e-12 || b.area() < 1e-12 {
        return Err(GeoError::DegeneratePolygon);
    }
    let (a, b) = if poly_cmp_key(a) <= poly_cmp_key(b) {
        (a, b)
    } else {
        (b, a)
    };

    let (a0, a1, a2, a3) = a.bbox();
    let (b0, b1, b2, b3) = b.bbox();
    if a2 < b0 || b2 < a0 || a3 < b1 || b3 < a1 {
        return Ok(0.0);
    }

    let mut area = ring_intersection_area(&a.exterior, &b.exterior);
    for hb in &b.interiors {
        area -= ring_intersection_area(&a.exterior, hb);
    }
    for ha in &a.interiors {
        area -= ring_intersection_area(ha, &b.exterior);
        for hb in &b.interiors {
            area += ring_intersection_area(ha, hb);
        }
    }
    if area < 1e-12 {
        area = 0.0;
    }
    Ok(area)
}
