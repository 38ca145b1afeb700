//! Lagrange-dual route to the center update.
//!
//! The update problem in QCQP form over `s = (x, y, h)`:
//!
//! ```text
//! min  1/2 s'P_o s + Q_o's + r_o
//! s.t. 1/2 s'P_i s + Q_i's + r_i <= 0      for every member i
//! ```
//!
//! For a fixed multiplier vector `lambda >= 0`, the Lagrangian is minimized
//! at `s = -P(lambda)^-1 Q(lambda)` and the dual function is
//! `g(lambda) = -1/2 Q'P^-1 Q + r`. `P(lambda)` is diagonal; its altitude
//! entry `2|C| + 2 omega sum(lambda)` is the only one that can vanish, so the
//! dual is maximized over `{lambda >= 0, sum(lambda) <= |C| tan^2(theta)}`,
//! the closure of the region where `P(lambda)` is positive definite.
//! `Q(lambda)` has no altitude component, so the altitude is recovered from
//! complementary slackness on the active constraints.

use super::update::{centroid, max_dist, update_center};
use crate::geometry::{GroundPosition, UavPosition};

/// Matrices of the update QCQP for one cluster. All `P` matrices are
/// diagonal and stored as their diagonals.
#[derive(Debug, Clone, PartialEq)]
pub struct QcqpData {
    pub p_o: [f64; 3],
    pub q_o: [f64; 3],
    pub r_o: f64,
    /// Diagonal of each constraint matrix `P_i`, identical for all members.
    pub p_i: [f64; 3],
    pub q_i: Vec<[f64; 3]>,
    pub r_i: Vec<f64>,
    /// `1 - 1/sin^2(theta_min)`, always `<= 0`.
    pub omega: f64,
}

impl QcqpData {
    pub fn new(members: &[GroundPosition], theta_min_deg: f64) -> Self {
        let n = members.len() as f64;
        let omega = 1.0 - 1.0 / theta_min_deg.to_radians().sin().powi(2);
        let (sx, sy, s2) = members.iter().fold((0.0, 0.0, 0.0), |(a, b, c), m| {
            (a + m.x, b + m.y, c + m.x * m.x + m.y * m.y)
        });
        Self {
            p_o: [2.0 * n; 3],
            q_o: [-2.0 * sx, -2.0 * sy, 0.0],
            r_o: s2,
            // the constraint is |p - v_i|^2 + omega h^2 <= 0, so the altitude
            // entry of 1/2 P_i is omega
            p_i: [2.0, 2.0, 2.0 * omega],
            q_i: members.iter().map(|m| [-2.0 * m.x, -2.0 * m.y, 0.0]).collect(),
            r_i: members.iter().map(|m| m.x * m.x + m.y * m.y).collect(),
            omega,
        }
    }

    pub fn len(&self) -> usize {
        self.r_i.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r_i.is_empty()
    }

    /// Objective `1/2 s'P_o s + Q_o's + r_o`.
    pub fn objective(&self, s: &[f64; 3]) -> f64 {
        quad(&self.p_o, &self.q_o, self.r_o, s)
    }

    /// Constraint value of member `i`; feasible when `<= 0`.
    pub fn constraint(&self, i: usize, s: &[f64; 3]) -> f64 {
        quad(&self.p_i, &self.q_i[i], self.r_i[i], s)
    }

    pub fn p_lambda(&self, lambda: &[f64]) -> [f64; 3] {
        let sum: f64 = lambda.iter().sum();
        std::array::from_fn(|k| self.p_o[k] + sum * self.p_i[k])
    }

    pub fn q_lambda(&self, lambda: &[f64]) -> [f64; 3] {
        let mut q = self.q_o;
        for (l, qi) in lambda.iter().zip(&self.q_i) {
            for k in 0..3 {
                q[k] += l * qi[k];
            }
        }
        q
    }

    pub fn r_lambda(&self, lambda: &[f64]) -> f64 {
        self.r_o + lambda.iter().zip(&self.r_i).map(|(l, r)| l * r).sum::<f64>()
    }

    /// Largest `sum(lambda)` keeping `P(lambda)` positive semidefinite.
    pub fn multiplier_cap(&self) -> f64 {
        if self.omega >= 0.0 {
            f64::INFINITY
        } else {
            -self.p_o[2] / self.p_i[2]
        }
    }

    /// Dual function `-1/2 Q'P^-1 Q + r`. Coordinates with a zero `Q`
    /// component contribute nothing even where `P` is singular there.
    pub fn dual_value(&self, lambda: &[f64]) -> f64 {
        let p = self.p_lambda(lambda);
        let q = self.q_lambda(lambda);
        let mut v = self.r_lambda(lambda);
        for k in 0..3 {
            if q[k] != 0.0 {
                v -= 0.5 * q[k] * q[k] / p[k];
            }
        }
        v
    }

    /// Lagrangian minimizer `-P(lambda)^-1 Q(lambda)`, with a zero altitude
    /// where `Q` has no altitude component.
    pub fn lagrangian_minimizer(&self, lambda: &[f64]) -> [f64; 3] {
        let p = self.p_lambda(lambda);
        let q = self.q_lambda(lambda);
        std::array::from_fn(|k| if q[k] == 0.0 { 0.0 } else { -q[k] / p[k] })
    }
}

fn quad(p: &[f64; 3], q: &[f64; 3], r: f64, s: &[f64; 3]) -> f64 {
    (0..3).map(|k| 0.5 * p[k] * s[k] * s[k] + q[k] * s[k]).sum::<f64>() + r
}

/// Outcome of the dual ascent.
#[derive(Debug, Clone, PartialEq)]
pub struct DualCenter {
    /// Recovered primal point, or the primal update's result when the ascent
    /// did not converge.
    pub position: UavPosition,
    pub lambda: Vec<f64>,
    /// Duality gap closed to tolerance within the iteration budget.
    pub converged: bool,
    /// The ascent ended on the face where `P(lambda)` is singular.
    pub on_boundary: bool,
    pub used_fallback: bool,
    pub iterations: usize,
    pub gap: f64,
}

/// Relative duality gap at which the ascent stops.
const GAP_TOL: f64 = 1e-6;
const MAX_ITERATIONS: usize = 50_000;

/// Center update through the Lagrange dual, by accelerated projected
/// gradient ascent. Ignores any altitude floor.
///
/// # Panics
/// If `members` is empty.
pub fn update_center_dual(members: &[GroundPosition], theta_min_deg: f64) -> DualCenter {
    assert!(!members.is_empty(), "update_center_dual needs at least one member");
    let n = members.len();
    let c = centroid(members);
    let scale = max_dist(members, &c);
    if scale == 0.0 {
        return DualCenter {
            position: UavPosition::new(c.x, c.y, 0.0),
            lambda: vec![0.0; n],
            converged: true,
            on_boundary: false,
            used_fallback: false,
            iterations: 0,
            gap: 0.0,
        };
    }

    // centered, unit-radius coordinates; multipliers are scale free
    let local: Vec<GroundPosition> = members
        .iter()
        .map(|m| GroundPosition::new((m.x - c.x) / scale, (m.y - c.y) / scale))
        .collect();
    let data = QcqpData::new(&local, theta_min_deg);
    let cap = data.multiplier_cap();
    let tan2 = theta_min_deg.to_radians().tan().powi(2);
    let primal = |p: &GroundPosition| {
        let ground: f64 = local.iter().map(|v| v.dist2(p)).sum();
        ground + n as f64 * tan2 * max_dist(&local, p).powi(2)
    };

    // |Hessian of g| <= 2 max|v_i - p|^2 <= 8 on the unit disk
    let step = 1.0 / 8.0;
    let mut lambda = vec![0.0; n];
    let mut prev = lambda.clone();
    let mut y = lambda.clone();
    let mut t = 1.0f64;
    let mut g_prev = f64::NEG_INFINITY;
    let mut iterations = 0;
    while iterations < MAX_ITERATIONS {
        iterations += 1;
        let s = data.lagrangian_minimizer(&y);
        let p = GroundPosition::new(s[0], s[1]);
        let mut next: Vec<f64> = local
            .iter()
            .zip(&y)
            .map(|(v, l)| l + step * v.dist2(&p))
            .collect();
        project_capped_simplex(&mut next, cap);

        let g = data.dual_value(&next);
        if g < g_prev {
            // adaptive restart of the momentum
            t = 1.0;
            y.clone_from(&lambda);
            continue;
        }
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let beta = (t - 1.0) / t_next;
        prev.clone_from(&lambda);
        lambda = next;
        y = lambda
            .iter()
            .zip(&prev)
            .map(|(l, q)| (l + beta * (l - q)).max(0.0))
            .collect();
        project_capped_simplex(&mut y, cap);
        t = t_next;
        g_prev = g;

        if iterations % 16 == 0 {
            let s = data.lagrangian_minimizer(&lambda);
            let upper = primal(&GroundPosition::new(s[0], s[1]));
            let gap = upper - g;
            if gap <= GAP_TOL * upper {
                break;
            }
        }
    }

    let s = data.lagrangian_minimizer(&lambda);
    let p_local = GroundPosition::new(s[0], s[1]);
    let upper = primal(&p_local);
    let gap = upper - data.dual_value(&lambda);
    let converged = gap <= GAP_TOL * upper;
    let on_boundary = lambda.iter().sum::<f64>() >= cap * (1.0 - 1e-9);
    if !converged {
        return DualCenter {
            position: update_center(members, theta_min_deg, 0.0),
            lambda,
            converged,
            on_boundary,
            used_fallback: true,
            iterations,
            gap,
        };
    }
    let p = GroundPosition::new(c.x + scale * p_local.x, c.y + scale * p_local.y);
    // active constraints hold with equality: h = tan(theta) * r(p)
    let h = tan2.sqrt() * max_dist(members, &p);
    DualCenter {
        position: UavPosition::new(p.x, p.y, h),
        lambda,
        converged,
        on_boundary,
        used_fallback: false,
        iterations,
        gap,
    }
}

/// Euclidean projection onto `{x >= 0, sum(x) <= cap}`.
pub(crate) fn project_capped_simplex(x: &mut [f64], cap: f64) {
    x.iter_mut().for_each(|v| *v = v.max(0.0));
    if x.iter().sum::<f64>() <= cap {
        return;
    }
    let mut sorted: Vec<f64> = x.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut acc = 0.0;
    let mut shift = 0.0;
    for (k, v) in sorted.iter().enumerate() {
        acc += v;
        let candidate = (acc - cap) / (k + 1) as f64;
        if v - candidate > 0.0 {
            shift = candidate;
        } else {
            break;
        }
    }
    x.iter_mut().for_each(|v| *v = (*v - shift).max(0.0));
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clustering::update::cluster_objective;

    #[test]
    fn qcqp_reproduces_objective_and_constraints() {
        let members = [
            GroundPosition::new(1.0, 2.0),
            GroundPosition::new(-3.0, 0.5),
            GroundPosition::new(4.0, -1.0),
        ];
        let theta = 50.0;
        let d = QcqpData::new(&members, theta);
        assert_eq!(d.p_o, [6.0; 3]);
        assert_eq!(d.p_i[..2], [2.0, 2.0]);
        let s = [0.7, -0.2, 3.0];
        let center = UavPosition::new(s[0], s[1], s[2]);
        let direct = cluster_objective(&members, &center);
        assert!((d.objective(&s) - direct).abs() < 1e-12);
        for (i, m) in members.iter().enumerate() {
            let expect = m.dist2(&center.ground()) + d.omega * s[2] * s[2];
            assert!((d.constraint(i, &s) - expect).abs() < 1e-12);
        }
        assert!(d.omega < 0.0);
    }

    #[test]
    fn capped_simplex_projection() {
        let mut x = vec![3.0, -1.0, 1.0];
        project_capped_simplex(&mut x, 2.0);
        assert!((x.iter().sum::<f64>() - 2.0).abs() < 1e-12);
        assert_eq!(x, vec![2.0, 0.0, 0.0]);
        let mut y = vec![0.2, 0.3];
        project_capped_simplex(&mut y, 2.0);
        assert_eq!(y, vec![0.2, 0.3]);
    }

    #[test]
    fn coincident_members_keep_zero_multipliers() {
        let m = vec![GroundPosition::new(5.0, 6.0); 3];
        let d = update_center_dual(&m, 50.0);
        assert!(d.lambda.iter().all(|&l| l == 0.0));
        assert_eq!(d.position, UavPosition::new(5.0, 6.0, 0.0));
    }

    #[test]
    fn symmetric_pair() {
        let m = [GroundPosition::new(-80.0, 0.0), GroundPosition::new(80.0, 0.0)];
        let d = update_center_dual(&m, 45.0);
        assert!(d.converged);
        assert!(d.position.x.abs() < 1e-2 && d.position.y.abs() < 1e-2);
        assert!((d.position.h - 80.0).abs() < 1e-2, "{d:?}");
    }

    #[test]
    fn dual_agrees_with_primal() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let members: Vec<GroundPosition> = (0..6)
                .map(|_| GroundPosition::new(rng.random_range(0.0..300.0), rng.random_range(0.0..300.0)))
                .collect();
            let d = update_center_dual(&members, 50.7);
            let p = update_center(&members, 50.7, 0.0);
            assert!(d.converged, "{d:?}");
            assert!(d.position.dist(&p) < 1e-2, "{:?} vs {p:?}", d.position);
        }
    }
}
