//! Center update for one cluster.
//!
//! The altitude constraint always binds at the optimum, so the UAV flies at
//! `h = max(h_min, tan(theta_min) * r(p))` where `r(p)` is the largest ground
//! distance from `p` to a member. What remains is the 2D convex problem
//!
//! ```text
//! min_p  |p - centroid|^2 + max(h_min^2, tan^2(theta_min) * r(p)^2)
//! ```
//!
//! Fixing the radius `rho >= r(p)` turns the inner problem into projecting
//! the centroid onto an intersection of disks, and the resulting value is
//! convex in `rho`, so a golden-section search over `rho` finds the optimum.

use crate::geometry::{GroundPosition, UavPosition};

const GOLDEN: f64 = 0.618_033_988_749_894_8;

/// Optimal UAV position for a cluster under the elevation constraint.
///
/// Minimizes `sum_i (x - x_i)^2 + (y - y_i)^2 + h^2` subject to every member
/// seeing the UAV at elevation `>= theta_min_deg`, and `h >= h_min`.
///
/// # Panics
/// If `members` is empty.
pub fn update_center(members: &[GroundPosition], theta_min_deg: f64, h_min: f64) -> UavPosition {
    assert!(!members.is_empty(), "update_center needs at least one member");
    let tan = theta_min_deg.to_radians().tan();
    let centroid = centroid(members);
    let hull = convex_hull(members);
    if hull.len() == 1 {
        return UavPosition::new(hull[0].x, hull[0].y, h_min);
    }

    let (mec_center, mec_radius) = min_enclosing_circle(&hull);
    let far = max_dist(&hull, &centroid);
    let value = |rho: f64| -> (f64, GroundPosition) {
        let p = project_onto_disks(&centroid, &hull, rho).unwrap_or(mec_center);
        let h2 = (tan * rho).powi(2).max(h_min * h_min);
        (p.dist2(&centroid) + h2, p)
    };

    let (mut lo, mut hi) = (mec_radius, far.max(mec_radius));
    let scale = 1.0 + hi;
    let mut x1 = hi - GOLDEN * (hi - lo);
    let mut x2 = lo + GOLDEN * (hi - lo);
    let mut f1 = value(x1).0;
    let mut f2 = value(x2).0;
    while hi - lo > 1e-12 * scale {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - GOLDEN * (hi - lo);
            f1 = value(x1).0;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + GOLDEN * (hi - lo);
            f2 = value(x2).0;
        }
    }
    // compare the bracket midpoint against the endpoints; the optimum can
    // sit on either end of the search interval
    let best = [lo, 0.5 * (lo + hi), hi, mec_radius, far]
        .into_iter()
        .map(value)
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .expect("non-empty candidate list")
        .1;
    let r = max_dist(members, &best);
    UavPosition::new(best.x, best.y, h_min.max(tan * r))
}

/// `sum_i (x - x_i)^2 + (y - y_i)^2 + h^2`, the per-cluster objective.
pub fn cluster_objective(members: &[GroundPosition], center: &UavPosition) -> f64 {
    members.iter().map(|m| center.dist2_to_ground(m)).sum()
}

/// Smallest altitude at or above `h_min` that keeps every member at
/// elevation `>= theta_min_deg` from ground position `p`.
pub fn required_altitude(
    members: &[GroundPosition],
    p: &GroundPosition,
    theta_min_deg: f64,
    h_min: f64,
) -> f64 {
    h_min.max(theta_min_deg.to_radians().tan() * max_dist(members, p))
}

pub(crate) fn centroid(points: &[GroundPosition]) -> GroundPosition {
    let n = points.len() as f64;
    let (sx, sy) = points
        .iter()
        .fold((0.0, 0.0), |(sx, sy), p| (sx + p.x, sy + p.y));
    GroundPosition::new(sx / n, sy / n)
}

pub(crate) fn max_dist(points: &[GroundPosition], p: &GroundPosition) -> f64 {
    points.iter().map(|q| q.dist2(p)).fold(0.0, f64::max).sqrt()
}

/// Convex hull vertices (Andrew's monotone chain), duplicates removed.
/// Collinear inputs reduce to their two extreme points.
pub(crate) fn convex_hull(points: &[GroundPosition]) -> Vec<GroundPosition> {
    let mut pts: Vec<GroundPosition> = points.to_vec();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup();
    if pts.len() <= 2 {
        return pts;
    }
    let cross = |o: &GroundPosition, a: &GroundPosition, b: &GroundPosition| {
        (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
    };
    let chain = |iter: &mut dyn Iterator<Item = &GroundPosition>| {
        let mut out: Vec<GroundPosition> = Vec::new();
        for p in iter {
            while out.len() >= 2 && cross(&out[out.len() - 2], &out[out.len() - 1], p) <= 0.0 {
                out.pop();
            }
            out.push(*p);
        }
        out.pop();
        out
    };
    let mut hull = chain(&mut pts.iter());
    hull.extend(chain(&mut pts.iter().rev()));
    hull
}

/// Smallest circle containing every point (Welzl, iterative form).
pub(crate) fn min_enclosing_circle(points: &[GroundPosition]) -> (GroundPosition, f64) {
    let inside = |c: &GroundPosition, r: f64, p: &GroundPosition| c.dist(p) <= r * (1.0 + 1e-12) + 1e-12;
    let mut c = points[0];
    let mut r = 0.0;
    for i in 1..points.len() {
        if inside(&c, r, &points[i]) {
            continue;
        }
        c = points[i];
        r = 0.0;
        for j in 0..i {
            if inside(&c, r, &points[j]) {
                continue;
            }
            c = GroundPosition::new(
                0.5 * (points[i].x + points[j].x),
                0.5 * (points[i].y + points[j].y),
            );
            r = c.dist(&points[i]);
            for k in 0..j {
                if inside(&c, r, &points[k]) {
                    continue;
                }
                if let Some(cc) = circumcenter(&points[i], &points[j], &points[k]) {
                    c = cc;
                    r = c.dist(&points[i]);
                }
            }
        }
    }
    (c, r)
}

fn circumcenter(a: &GroundPosition, b: &GroundPosition, c: &GroundPosition) -> Option<GroundPosition> {
    let (bx, by) = (b.x - a.x, b.y - a.y);
    let (cx, cy) = (c.x - a.x, c.y - a.y);
    let d = 2.0 * (bx * cy - by * cx);
    if d.abs() < f64::EPSILON * (bx.abs() + by.abs() + cx.abs() + cy.abs()).powi(2) {
        return None;
    }
    let b2 = bx * bx + by * by;
    let c2 = cx * cx + cy * cy;
    Some(GroundPosition::new(
        a.x + (cy * b2 - by * c2) / d,
        a.y + (bx * c2 - cx * b2) / d,
    ))
}

/// Euclidean projection of `c` onto the intersection of the disks of radius
/// `rho` centered at `sites`. `None` when the intersection is empty up to
/// rounding.
pub(crate) fn project_onto_disks(
    c: &GroundPosition,
    sites: &[GroundPosition],
    rho: f64,
) -> Option<GroundPosition> {
    let slack = rho * 1e-12 + 1e-12;
    let feasible = |p: &GroundPosition| sites.iter().all(|s| s.dist(p) <= rho + slack);
    if feasible(c) {
        return Some(*c);
    }
    let mut best: Option<(f64, GroundPosition)> = None;
    let mut offer = |p: GroundPosition| {
        if feasible(&p) {
            let d = p.dist2(c);
            if best.is_none_or(|(bd, _)| d < bd) {
                best = Some((d, p));
            }
        }
    };
    for s in sites {
        let d = s.dist(c);
        if d > rho {
            let t = rho / d;
            offer(GroundPosition::new(s.x + t * (c.x - s.x), s.y + t * (c.y - s.y)));
        }
    }
    for (i, a) in sites.iter().enumerate() {
        for b in &sites[i + 1..] {
            let d = a.dist(b);
            if d == 0.0 || d > 2.0 * rho {
                continue;
            }
            let half = 0.5 * d;
            let off = (rho * rho - half * half).max(0.0).sqrt();
            let (ux, uy) = ((b.x - a.x) / d, (b.y - a.y) / d);
            let (mx, my) = (a.x + half * ux, a.y + half * uy);
            offer(GroundPosition::new(mx - off * uy, my + off * ux));
            offer(GroundPosition::new(mx + off * uy, my - off * ux));
        }
    }
    best.map(|(_, p)| p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{min_elevation_angle, ChannelParams};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Direct evaluation of the original objective at ground point `(x, y)`
    /// with the smallest admissible altitude.
    fn objective_at(members: &[GroundPosition], x: f64, y: f64, theta: f64, h_min: f64) -> f64 {
        let p = GroundPosition::new(x, y);
        let h = required_altitude(members, &p, theta, h_min);
        cluster_objective(members, &UavPosition::new(x, y, h))
    }

    fn golden_1d(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> (f64, f64) {
        for _ in 0..100 {
            let a = hi - GOLDEN * (hi - lo);
            let b = lo + GOLDEN * (hi - lo);
            if f(a) <= f(b) {
                hi = b;
            } else {
                lo = a;
            }
        }
        let x = 0.5 * (lo + hi);
        (x, f(x))
    }

    /// 1 m grid over the bounding box, then nested golden-section refinement
    /// in the neighbouring cells.
    pub(crate) fn grid_oracle(members: &[GroundPosition], theta: f64, h_min: f64) -> f64 {
        let (x0, x1) = members
            .iter()
            .fold((f64::MAX, f64::MIN), |(a, b), m| (a.min(m.x), b.max(m.x)));
        let (y0, y1) = members
            .iter()
            .fold((f64::MAX, f64::MIN), |(a, b), m| (a.min(m.y), b.max(m.y)));
        let mut best = (f64::MAX, x0, y0);
        let mut x = x0.floor();
        while x <= x1.ceil() {
            let mut y = y0.floor();
            while y <= y1.ceil() {
                let v = objective_at(members, x, y, theta, h_min);
                if v < best.0 {
                    best = (v, x, y);
                }
                y += 1.0;
            }
            x += 1.0;
        }
        let inner = |x: f64| golden_1d(y0, y1, |y| objective_at(members, x, y, theta, h_min)).1;
        golden_1d(x0, x1, inner).1.min(best.0)
    }

    #[test]
    fn single_member() {
        let c = update_center(&[GroundPosition::new(3.0, -4.0)], 50.0, 100.0);
        assert_eq!(c, UavPosition::new(3.0, -4.0, 100.0));
    }

    #[test]
    fn two_members_at_45_degrees() {
        let s = 120.0;
        let m = [GroundPosition::new(-s, 0.0), GroundPosition::new(s, 0.0)];
        let c = update_center(&m, 45.0, 0.0);
        assert!(c.x.abs() < 1e-4 && c.y.abs() < 1e-4, "{c:?}");
        assert!((c.h - s).abs() < 1e-4, "{c:?}");
    }

    #[test]
    fn matches_grid_oracle() {
        let theta = min_elevation_angle(&ChannelParams::urban()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let members: Vec<GroundPosition> = (0..10)
                .map(|_| GroundPosition::new(rng.random_range(0.0..150.0), rng.random_range(0.0..150.0)))
                .collect();
            let c = update_center(&members, theta, 0.0);
            let got = cluster_objective(&members, &c);
            let oracle = grid_oracle(&members, theta, 0.0);
            assert!(got <= oracle * (1.0 + 1e-3), "{got} vs {oracle}");
            assert!(got >= oracle * (1.0 - 1e-3), "{got} vs {oracle}");
        }
    }

    #[test]
    fn members_meet_elevation_constraint() {
        let theta = min_elevation_angle(&ChannelParams::urban()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..50 {
            let n = rng.random_range(1..30);
            let members: Vec<GroundPosition> = (0..n)
                .map(|_| GroundPosition::new(rng.random_range(-500.0..500.0), rng.random_range(-500.0..500.0)))
                .collect();
            let c = update_center(&members, theta, 100.0);
            assert!(c.h >= 100.0);
            for m in &members {
                assert!(c.elevation_deg(m) >= theta - 1e-6);
            }
        }
    }

    #[test]
    fn altitude_identity_with_zero_floor() {
        // sum of ground terms plus |C| h^2 equals the 3D objective
        let theta = 50.0;
        let members = [
            GroundPosition::new(0.0, 0.0),
            GroundPosition::new(40.0, 10.0),
            GroundPosition::new(15.0, 70.0),
        ];
        let c = update_center(&members, theta, 0.0);
        let ground: f64 = members.iter().map(|m| m.dist2(&c.ground())).sum();
        let tan2 = theta.to_radians().tan().powi(2);
        let r2 = max_dist(&members, &c.ground()).powi(2);
        let f = ground + members.len() as f64 * tan2 * r2;
        let direct = cluster_objective(&members, &c);
        assert!(((f - direct) / direct).abs() < 1e-9);
    }

    #[test]
    fn hull_and_circle() {
        let pts = [
            GroundPosition::new(0.0, 0.0),
            GroundPosition::new(2.0, 0.0),
            GroundPosition::new(2.0, 2.0),
            GroundPosition::new(0.0, 2.0),
            GroundPosition::new(1.0, 1.0),
            GroundPosition::new(1.0, 0.0),
        ];
        let hull = convex_hull(&pts);
        assert_eq!(hull.len(), 4);
        let (c, r) = min_enclosing_circle(&hull);
        assert!((c.x - 1.0).abs() < 1e-12 && (c.y - 1.0).abs() < 1e-12);
        assert!((r - 2f64.sqrt()).abs() < 1e-12);

        let line = [
            GroundPosition::new(0.0, 0.0),
            GroundPosition::new(1.0, 1.0),
            GroundPosition::new(2.0, 2.0),
        ];
        assert_eq!(convex_hull(&line).len(), 2);
    }
}
