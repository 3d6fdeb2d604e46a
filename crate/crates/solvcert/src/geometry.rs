//! Planar geometry for slice analysis: convex hulls, alpha shapes over a
//! Delaunay triangulation, and detection of straight boundary segments.

use delaunator::{triangulate, Point, Triangulation};
use serde::{Deserialize, Serialize};

/// Alpha radius for concave-hull areas, in units of the median
/// nearest-neighbor distance. Calibrated on uniform random clouds: factor 2
/// covers only ~52% of the hull regardless of size, factor 4 reaches 0.99
/// around 80k points, factor 5 reads uniform clouds as >= 0.98 from a few
/// thousand points up while still resolving macroscopic cavities.
pub const ALPHA_NN_FACTOR: f64 = 5.0;

/// Candidate flat chords must span at least this fraction of the diameter.
pub const FLAT_MIN_EDGE_FRAC: f64 = 0.05;
/// Hull chords of a *smoothly curved* sampled boundary max out near
/// 2.7 x (D nn^2 ln m)^(1/3) (the longest chord whose circular segment is
/// empty of samples); a straight boundary stretch survives as a collinear
/// chord far above that. The threshold sits between the two regimes.
pub const FLAT_LEN_UNITS: f64 = 4.0;
/// Consecutive hull edges merge into one chord while every interior vertex
/// stays within this many nearest-neighbor distances of the chord.
pub const FLAT_MERGE_KINK_NN: f64 = 1.0;
/// A chord whose midpoint has no cloud point within this many
/// nearest-neighbor distances bridges a cavity and is rejected.
pub const FLAT_GAP_NN: f64 = 4.0;

/// A straight stretch of the slice boundary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlatSegment {
    pub start: [f64; 2],
    pub end: [f64; 2],
    pub length: f64,
    /// Distance from the edge midpoint to the nearest cloud point.
    pub support_gap: f64,
}

/// Removes exact duplicates (bitwise) while keeping first-seen order.
pub fn dedup_points(points: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::with_capacity(points.len());
    for p in points {
        if seen.insert((p[0].to_bits(), p[1].to_bits())) {
            out.push(*p);
        }
    }
    out
}

fn cross(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Convex hull by monotone chain, counter-clockwise, collinear points
/// dropped. Returns fewer than 3 vertices for degenerate inputs.
pub fn convex_hull(points: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let mut pts = dedup_points(points);
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    if pts.len() < 3 {
        return pts;
    }
    let mut lower: Vec<[f64; 2]> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<[f64; 2]> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Shoelace area of a simple polygon given in order (sign-free).
pub fn polygon_area(polygon: &[[f64; 2]]) -> f64 {
    if polygon.len() < 3 {
        return 0.0;
    }
    let mut twice = 0.0;
    for i in 0..polygon.len() {
        let a = polygon[i];
        let b = polygon[(i + 1) % polygon.len()];
        twice += a[0] * b[1] - b[0] * a[1];
    }
    twice.abs() / 2.0
}

pub fn hull_diameter(hull: &[[f64; 2]]) -> f64 {
    let mut best = 0.0f64;
    for i in 0..hull.len() {
        for k in i + 1..hull.len() {
            best = best.max(dist(hull[i], hull[k]));
        }
    }
    best
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

fn delaunay(points: &[[f64; 2]]) -> (Vec<Point>, Triangulation) {
    let pts: Vec<Point> = points.iter().map(|p| Point { x: p[0], y: p[1] }).collect();
    let tri = triangulate(&pts);
    (pts, tri)
}

fn circumradius(a: &Point, b: &Point, c: &Point) -> f64 {
    let la = ((b.x - c.x).powi(2) + (b.y - c.y).powi(2)).sqrt();
    let lb = ((a.x - c.x).powi(2) + (a.y - c.y).powi(2)).sqrt();
    let lc = ((a.x - b.x).powi(2) + (a.y - b.y).powi(2)).sqrt();
    let area2 = (cross([a.x, a.y], [b.x, b.y], [c.x, c.y])).abs();
    if area2 <= f64::MIN_POSITIVE {
        return f64::INFINITY;
    }
    la * lb * lc / (2.0 * area2)
}

/// Area of the alpha shape: the union of Delaunay triangles whose
/// circumradius is at most alpha. Input must be deduplicated.
pub fn alpha_shape_area(points: &[[f64; 2]], alpha: f64) -> f64 {
    let (pts, tri) = delaunay(points);
    let mut area = 0.0;
    for t in tri.triangles.chunks(3) {
        let (a, b, c) = (&pts[t[0]], &pts[t[1]], &pts[t[2]]);
        if circumradius(a, b, c) <= alpha {
            area += cross([a.x, a.y], [b.x, b.y], [c.x, c.y]).abs() / 2.0;
        }
    }
    area
}

/// Median over points of the nearest-neighbor distance, using Delaunay
/// adjacency (the true nearest neighbor is always a Delaunay neighbor).
/// Degenerate (collinear) inputs fall back to sorted-axis gaps.
pub fn median_nn_distance(points: &[[f64; 2]]) -> f64 {
    let (pts, tri) = delaunay(points);
    let mut nearest = vec![f64::INFINITY; pts.len()];
    for t in tri.triangles.chunks(3) {
        for (i, k) in [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])] {
            let d = dist([pts[i].x, pts[i].y], [pts[k].x, pts[k].y]);
            nearest[i] = nearest[i].min(d);
            nearest[k] = nearest[k].min(d);
        }
    }
    let mut finite: Vec<f64> = nearest.into_iter().filter(|d| d.is_finite()).collect();
    if finite.is_empty() {
        // No triangles: points are collinear or too few. Use gaps along
        // the sort order instead.
        let mut sorted = points.to_vec();
        sorted.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
        finite = sorted.windows(2).map(|w| dist(w[0], w[1])).collect();
        if finite.is_empty() {
            return 0.0;
        }
    }
    finite.sort_by(f64::total_cmp);
    finite[finite.len() / 2]
}

fn point_chord_distance(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let len = dist(a, b);
    if len <= f64::MIN_POSITIVE {
        return dist(p, a);
    }
    (cross(a, b, p)).abs() / len
}

/// Looks for a straight stretch of the sampled boundary. Runs of
/// consecutive hull edges are merged into a single chord while the interior
/// vertices stay collinear at the sampling-noise scale; a merged chord
/// qualifies when it is far longer than the longest chord a smooth boundary
/// produces at this density (see `FLAT_LEN_UNITS`) and its midpoint is
/// backed by cloud points (a midpoint gap means the chord bridges a cavity,
/// not a flat side). `cloud` should be deduplicated.
pub fn detect_flat_segment(cloud: &[[f64; 2]], hull: &[[f64; 2]]) -> Option<FlatSegment> {
    let h = hull.len();
    if h < 3 || cloud.is_empty() {
        return None;
    }
    let diameter = hull_diameter(hull);
    let nn = median_nn_distance(cloud);
    if diameter <= 0.0 || !(nn > 0.0) || !nn.is_finite() {
        return None;
    }
    let min_len = (FLAT_MIN_EDGE_FRAC * diameter)
        .max(FLAT_LEN_UNITS * (diameter * nn * nn * (cloud.len() as f64).ln()).cbrt());

    let mut best: Option<FlatSegment> = None;
    for i in 0..h {
        // Longest collinear run starting at vertex i.
        let mut k = i + 1;
        while k + 1 <= i + h - 1 {
            let chord_end = hull[(k + 1) % h];
            let kinked = (i + 1..=k)
                .any(|m| point_chord_distance(hull[m % h], hull[i], chord_end) > FLAT_MERGE_KINK_NN * nn);
            if kinked {
                break;
            }
            k += 1;
        }
        let (a, b) = (hull[i], hull[k % h]);
        let length = dist(a, b);
        if length < min_len {
            continue;
        }
        let mid = [(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0];
        let support_gap = cloud
            .iter()
            .map(|p| dist(*p, mid))
            .fold(f64::INFINITY, f64::min);
        if support_gap > FLAT_GAP_NN * nn {
            continue;
        }
        if best.as_ref().map_or(true, |f| length > f.length) {
            best = Some(FlatSegment {
                start: a,
                end: b,
                length,
                support_gap,
            });
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn hull_and_area_of_unit_square() {
        let pts = [
            [0.0, 0.0],
            [1.0, 0.0],
            [1.0, 1.0],
            [0.0, 1.0],
            [0.5, 0.5],
            [0.25, 0.75],
            [0.0, 0.0], // duplicate
        ];
        let hull = convex_hull(&pts);
        assert_eq!(hull.len(), 4);
        assert!((polygon_area(&hull) - 1.0).abs() < 1e-12);
        assert!((hull_diameter(&hull) - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn hull_degenerate_inputs() {
        assert!(convex_hull(&[]).is_empty());
        assert_eq!(convex_hull(&[[1.0, 2.0]]).len(), 1);
        // Collinear points: hull collapses, area zero.
        let line = [[0.0, 0.0], [1.0, 1.0], [2.0, 2.0], [3.0, 3.0]];
        assert!(polygon_area(&convex_hull(&line)) < 1e-12);
    }

    #[test]
    fn alpha_shape_matches_square_and_sees_cavity() {
        // Dense grid on the unit square, with and without a rectangular
        // bite removed from the right side.
        let mut full = Vec::new();
        let mut bitten = Vec::new();
        let m = 60;
        for i in 0..=m {
            for k in 0..=m {
                let p = [i as f64 / m as f64, k as f64 / m as f64];
                full.push(p);
                let in_bite = p[0] > 0.6 && p[1] > 0.25 && p[1] < 0.75;
                if !in_bite {
                    bitten.push(p);
                }
            }
        }
        let alpha = 2.0 * median_nn_distance(&full);
        let full_area = alpha_shape_area(&full, alpha);
        assert!((full_area - 1.0).abs() < 0.02, "full area {full_area}");

        let alpha_b = 2.0 * median_nn_distance(&bitten);
        let bitten_area = alpha_shape_area(&bitten, alpha_b);
        let expected = 1.0 - 0.4 * 0.5;
        assert!(
            (bitten_area - expected).abs() < 0.03,
            "bitten area {bitten_area} vs {expected}"
        );
        // The hull cannot see the bite.
        let hull_area = polygon_area(&convex_hull(&bitten));
        assert!((hull_area - 1.0).abs() < 0.02);
        assert!(bitten_area / hull_area < 0.85);
    }

    #[test]
    fn median_nn_on_grid_equals_spacing() {
        let mut pts = Vec::new();
        for i in 0..30 {
            for k in 0..30 {
                pts.push([i as f64 * 0.1, k as f64 * 0.1]);
            }
        }
        let d = median_nn_distance(&pts);
        assert!((d - 0.1).abs() < 1e-9, "median nn {d}");
    }

    #[test]
    fn flat_detector_fires_on_truncated_disk_not_on_disk_or_notch() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut disk = Vec::new();
        let mut truncated = Vec::new();
        let mut notched = Vec::new();
        while disk.len() < 12000 {
            let x: f64 = rng.gen_range(-1.0..1.0);
            let y: f64 = rng.gen_range(-1.0..1.0);
            if x * x + y * y > 1.0 {
                continue;
            }
            disk.push([x, y]);
            if x <= 0.4 {
                truncated.push([x, y]);
            }
            // Wedge notch: remove a sector around the +x axis.
            if !(x > 0.2 && y.abs() < 0.35 * (x - 0.2)) {
                notched.push([x, y]);
            }
        }

        let hull = convex_hull(&disk);
        assert!(detect_flat_segment(&disk, &hull).is_none(), "disk is round");

        let hull_t = convex_hull(&truncated);
        let flat = detect_flat_segment(&truncated, &hull_t).expect("truncation is flat");
        // The cut runs along x = 0.4 and spans most of the chord 2*sqrt(1-0.16).
        assert!((flat.start[0] - 0.4).abs() < 0.05);
        assert!((flat.end[0] - 0.4).abs() < 0.05);
        assert!(flat.length > 1.4, "merged chord length {}", flat.length);

        // The notch produces a long hull edge with nothing near its
        // midpoint: a cavity, not a flat boundary.
        let hull_n = convex_hull(&notched);
        assert!(detect_flat_segment(&notched, &hull_n).is_none(), "notch is a cavity");
    }

    #[test]
    fn flat_detector_is_stable_across_densities_and_seeds() {
        for seed in [3u64, 5, 9] {
            for n in [3000usize, 12000] {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let mut disk = Vec::new();
                let mut truncated = Vec::new();
                while disk.len() < n {
                    let x: f64 = rng.gen_range(-1.0..1.0);
                    let y: f64 = rng.gen_range(-1.0..1.0);
                    if x * x + y * y > 1.0 {
                        continue;
                    }
                    disk.push([x, y]);
                    if x <= 0.4 {
                        truncated.push([x, y]);
                    }
                }
                let hull = convex_hull(&disk);
                assert!(
                    detect_flat_segment(&disk, &hull).is_none(),
                    "false positive on disk (seed {seed}, n {n})"
                );
                let hull_t = convex_hull(&truncated);
                let flat = detect_flat_segment(&truncated, &hull_t);
                assert!(flat.is_some(), "missed facet (seed {seed}, n {n})");
                let flat = flat.unwrap();
                assert!(
                    (flat.start[0] - 0.4).abs() < 0.06 && (flat.end[0] - 0.4).abs() < 0.06,
                    "chord off the cut line (seed {seed}, n {n})"
                );
            }
        }
    }

    #[test]
    fn alpha_area_never_exceeds_hull_area() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let pts: Vec<[f64; 2]> = (0..400)
                .map(|_| [rng.gen_range(-1.0..1.0), rng.gen_range(-3.0..3.0)])
                .collect();
            let hull_area = polygon_area(&convex_hull(&pts));
            let alpha = 2.0 * median_nn_distance(&pts);
            let cloud_area = alpha_shape_area(&pts, alpha);
            assert!(cloud_area <= hull_area * (1.0 + 1e-9));
        }
    }
}
