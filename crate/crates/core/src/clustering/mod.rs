//! Capacity- and radius-constrained K-means over IoT devices.
//!
//! Each iteration solves the capacitated assignment exactly (as a
//! transportation problem) for fixed UAV positions, then moves every UAV to
//! the optimal position for its members. Both half-steps can only lower the
//! total squared device-to-UAV distance, which is proportional to the total
//! device transmit power.

mod dual;
mod update;

pub use dual::{update_center_dual, DualCenter, QcqpData};
pub use update::{cluster_objective, required_altitude, update_center};

use rand::distr::{weighted::WeightedIndex, Distribution};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::channel::{self, max_ground_offset, ChannelParams, LinkParams};
use crate::error::{Error, Result};
use crate::geometry::{GroundPosition, UavPosition};
use crate::otsolve;

/// How initial centers are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Seeding {
    /// Random first center, then always the device farthest from all chosen
    /// centers.
    #[default]
    FarthestPoint,
    /// k-means++: each new center sampled with probability proportional to
    /// the squared distance to the nearest chosen one.
    KMeansPlusPlus,
}

impl Seeding {
    pub fn name(&self) -> &'static str {
        match self {
            Seeding::KMeansPlusPlus => "kmeans++",
            Seeding::FarthestPoint => "farthest",
        }
    }
}

impl std::str::FromStr for Seeding {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "kmeans++" => Ok(Seeding::KMeansPlusPlus),
            "farthest" => Ok(Seeding::FarthestPoint),
            other => Err(format!("unknown seeding rule `{other}` (kmeans++|farthest)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusteringConfig {
    pub num_uavs: usize,
    /// Maximum devices per UAV, one entry per UAV.
    pub capacities: Vec<u64>,
    pub theta_min_deg: f64,
    /// Altitude floor, meters.
    pub min_altitude: f64,
    /// Stop once no center moves farther than this, meters.
    pub tolerance: f64,
    pub max_iterations: usize,
    pub seeding: Seeding,
    pub seed: u64,
}

impl ClusteringConfig {
    /// `num_uavs` UAVs sharing `capacity` each, with the urban minimum
    /// elevation and default stopping rules.
    pub fn new(num_uavs: usize, capacity: u64, theta_min_deg: f64) -> Self {
        Self {
            num_uavs,
            capacities: vec![capacity; num_uavs],
            theta_min_deg,
            min_altitude: 100.0,
            tolerance: 0.1,
            max_iterations: 100,
            seeding: Seeding::default(),
            seed: 0,
        }
    }

    /// Uses the channel's LoS requirement for the minimum elevation.
    pub fn for_channel(num_uavs: usize, capacity: u64, ch: &ChannelParams) -> Result<Self> {
        Ok(Self::new(num_uavs, capacity, channel::min_elevation_angle(ch)?))
    }

    pub fn validate(&self, num_devices: usize) -> Result<()> {
        if self.num_uavs == 0 {
            return Err(Error::config("num_uavs", "need at least one UAV"));
        }
        if self.capacities.len() != self.num_uavs {
            return Err(Error::config(
                "capacity",
                format!("{} capacities for {} UAVs", self.capacities.len(), self.num_uavs),
            ));
        }
        let total: u64 = self.capacities.iter().sum();
        if total < num_devices as u64 {
            return Err(Error::config(
                "capacity",
                format!("total capacity {total} is below the {num_devices} devices"),
            ));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::config("tolerance", "must be > 0"));
        }
        if !(self.theta_min_deg > 0.0 && self.theta_min_deg < 90.0) {
            return Err(Error::config("theta_min", "must lie in (0, 90) degrees"));
        }
        if !(self.min_altitude >= 0.0 && self.min_altitude.is_finite()) {
            return Err(Error::config("h_min", "must be finite and >= 0"));
        }
        Ok(())
    }
}

/// Device-to-UAV mapping.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assignment {
    /// UAV index of each device.
    pub uav_of: Vec<usize>,
    pub num_uavs: usize,
}

impl Assignment {
    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![0; self.num_uavs];
        for &j in &self.uav_of {
            s[j] += 1;
        }
        s
    }

    pub fn members(&self, uav: usize) -> Vec<usize> {
        (0..self.uav_of.len())
            .filter(|&i| self.uav_of[i] == uav)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cluster {
    pub members: Vec<usize>,
    pub center: UavPosition,
}

/// Per-iteration objective values.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    /// Total squared distance after the assignment step.
    pub after_assignment: f64,
    /// Total squared distance after the center update.
    pub after_update: f64,
    pub max_displacement: f64,
    /// Altitudes had to be raised before the assignment was feasible.
    pub used_fallback: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusteringOutcome {
    pub clusters: Vec<Cluster>,
    pub assignment: Assignment,
    pub trace: Vec<IterationRecord>,
    pub converged: bool,
}

impl ClusteringOutcome {
    pub fn centers(&self) -> Vec<UavPosition> {
        self.clusters.iter().map(|c| c.center).collect()
    }

    /// Objective after each full iteration.
    pub fn objectives(&self) -> Vec<f64> {
        self.trace.iter().map(|r| r.after_update).collect()
    }

    pub fn objective(&self) -> f64 {
        self.trace.last().map_or(0.0, |r| r.after_update)
    }
}

/// Total squared 3D distance between devices and their UAVs.
pub fn assignment_objective(
    devices: &[GroundPosition],
    centers: &[UavPosition],
    assignment: &Assignment,
) -> f64 {
    devices
        .iter()
        .zip(&assignment.uav_of)
        .map(|(d, &j)| centers[j].dist2_to_ground(d))
        .sum()
}

/// Capacity-respecting assignment minimizing the total squared 3D distance,
/// with arcs outside a UAV's LoS radius removed.
pub fn assign_devices(
    devices: &[GroundPosition],
    centers: &[UavPosition],
    config: &ClusteringConfig,
) -> Result<Assignment> {
    if centers.is_empty() {
        return Err(Error::domain("no UAV centers to assign to"));
    }
    if config.capacities.len() != centers.len() {
        return Err(Error::Dimension(format!(
            "{} capacities for {} centers",
            config.capacities.len(),
            centers.len()
        )));
    }
    let costs: Vec<Vec<f64>> = devices
        .iter()
        .map(|d| centers.iter().map(|c| c.dist2_to_ground(d)).collect())
        .collect();
    let forbidden: Vec<Vec<bool>> = devices
        .iter()
        .map(|d| {
            centers
                .iter()
                .map(|c| !within_radius(c, d, config.theta_min_deg))
                .collect()
        })
        .collect();
    let semi = otsolve::solve_semi_assignment(&costs, &config.capacities, &forbidden)?;
    Ok(Assignment {
        uav_of: semi.columns,
        num_uavs: centers.len(),
    })
}

/// Whether `device` sees `center` at or above the minimum elevation, with a
/// relative slack of `1e-9` for centers placed exactly on the boundary.
fn within_radius(center: &UavPosition, device: &GroundPosition, theta_min_deg: f64) -> bool {
    let reach = max_ground_offset(center.h, theta_min_deg);
    center.ground().dist(device) <= reach * (1.0 + 1e-9) + 1e-9
}

/// Seeds centers with `config.seeding` and runs [`cluster_devices_from`].
pub fn cluster_devices(
    devices: &[GroundPosition],
    config: &ClusteringConfig,
) -> Result<ClusteringOutcome> {
    config.validate(devices.len())?;
    let seeds = seed_centers(devices, config);
    cluster_devices_from(devices, config, &seeds)
}

/// Initial centers at the altitude floor.
pub fn seed_centers(devices: &[GroundPosition], config: &ClusteringConfig) -> Vec<UavPosition> {
    let k = config.num_uavs;
    let h = config.min_altitude;
    if devices.is_empty() {
        return vec![UavPosition::new(0.0, 0.0, h); k];
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut chosen: Vec<GroundPosition> = vec![devices[rng.random_range(0..devices.len())]];
    let mut nearest: Vec<f64> = devices.iter().map(|d| d.dist2(&chosen[0])).collect();
    while chosen.len() < k {
        let next = match config.seeding {
            Seeding::KMeansPlusPlus => match WeightedIndex::new(&nearest) {
                Ok(w) => w.sample(&mut rng),
                // every device already coincides with a center
                Err(_) => rng.random_range(0..devices.len()),
            },
            Seeding::FarthestPoint => nearest
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(&a.0)))
                .map(|(i, _)| i)
                .expect("devices is not empty"),
        };
        let c = devices[next];
        for (d, best) in devices.iter().zip(nearest.iter_mut()) {
            *best = best.min(d.dist2(&c));
        }
        chosen.push(c);
    }
    chosen
        .into_iter()
        .map(|g| UavPosition::new(g.x, g.y, h))
        .collect()
}

/// Alternates assignment and center updates starting from `initial`
/// centers, until no center moves more than `config.tolerance`, the
/// assignment stops changing, or `config.max_iterations` is reached.
pub fn cluster_devices_from(
    devices: &[GroundPosition],
    config: &ClusteringConfig,
    initial: &[UavPosition],
) -> Result<ClusteringOutcome> {
    config.validate(devices.len())?;
    if initial.len() != config.num_uavs {
        return Err(Error::Dimension(format!(
            "{} initial centers for {} UAVs",
            initial.len(),
            config.num_uavs
        )));
    }
    let mut centers = initial.to_vec();
    let mut trace = Vec::new();
    let mut previous: Option<Assignment> = None;
    let mut converged = false;

    for _ in 0..config.max_iterations.max(1) {
        let (assignment, used_fallback) = assign_with_fallback(devices, &mut centers, config)?;
        let after_assignment = assignment_objective(devices, &centers, &assignment);

        let mut max_displacement: f64 = 0.0;
        for (j, center) in centers.iter_mut().enumerate() {
            let members: Vec<GroundPosition> =
                assignment.members(j).into_iter().map(|i| devices[i]).collect();
            if members.is_empty() {
                continue;
            }
            let candidate = update_center(&members, config.theta_min_deg, config.min_altitude);
            // accept only non-worsening moves so rounding in the update
            // cannot break monotonicity
            if cluster_objective(&members, &candidate) <= cluster_objective(&members, center) {
                max_displacement = max_displacement.max(candidate.dist(center));
                *center = candidate;
            }
        }
        let after_update = assignment_objective(devices, &centers, &assignment);
        trace.push(IterationRecord {
            after_assignment,
            after_update,
            max_displacement,
            used_fallback,
        });

        let unchanged = previous.as_ref() == Some(&assignment);
        previous = Some(assignment);
        if max_displacement < config.tolerance || unchanged {
            converged = true;
            break;
        }
    }

    let assignment = previous.expect("at least one iteration ran");
    let clusters = centers
        .iter()
        .enumerate()
        .map(|(j, &center)| Cluster {
            members: assignment.members(j),
            center,
        })
        .collect();
    Ok(ClusteringOutcome {
        clusters,
        assignment,
        trace,
        converged,
    })
}

/// Runs [`assign_devices`]; when some device is out of every radius or the
/// radii leave no capacity-feasible assignment, raises each UAV to the
/// lowest altitude that reaches the devices a radius-free capacitated
/// assignment gives it, and retries once.
fn assign_with_fallback(
    devices: &[GroundPosition],
    centers: &mut [UavPosition],
    config: &ClusteringConfig,
) -> Result<(Assignment, bool)> {
    match assign_devices(devices, centers, config) {
        Ok(a) => return Ok((a, false)),
        Err(Error::DeviceUnreachable { .. } | Error::Unroutable { .. }) => {}
        Err(e) => return Err(e),
    }
    let costs: Vec<Vec<f64>> = devices
        .iter()
        .map(|d| centers.iter().map(|c| c.dist2_to_ground(d)).collect())
        .collect();
    let open = vec![vec![false; centers.len()]; devices.len()];
    let relaxed = otsolve::solve_semi_assignment(&costs, &config.capacities, &open)?;
    let tan = config.theta_min_deg.to_radians().tan();
    for (i, &j) in relaxed.columns.iter().enumerate() {
        let need = tan * centers[j].ground().dist(&devices[i]);
        centers[j].h = centers[j].h.max(need);
    }
    assign_devices(devices, centers, config).map(|a| (a, true))
}

/// Total minimum transmit power, watts, of all devices to their UAVs.
pub fn total_power(
    devices: &[GroundPosition],
    clusters: &[Cluster],
    link: &LinkParams,
    ch: &ChannelParams,
) -> Result<f64> {
    let mut total = 0.0;
    for cluster in clusters {
        for &i in &cluster.members {
            let d = cluster.center.dist_to_ground(&devices[i]);
            if d > 0.0 {
                total += channel::min_transmit_power(d, link, ch)?;
            }
        }
    }
    Ok(total)
}
