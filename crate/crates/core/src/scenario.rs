//! Time-stepped simulation: device populations with Gaussian mobility,
//! per-epoch clustering and fleet matching, the fixed Voronoi baseline, and
//! sweeps over the number of UAVs.

use rand::distr::{weighted::WeightedIndex, Distribution};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;
use rayon::prelude::*;

use crate::channel::{self, ChannelParams, LinkParams};
use crate::clustering::{
    self, cluster_devices, cluster_devices_from, seed_centers, Cluster, ClusteringConfig, Seeding,
};
use crate::error::{Error, Result};
use crate::fleet::{evaluate_losses, step_fleet, EnergyModel, FleetState, LossOutcomes};
use crate::geometry::{GroundPosition, UavPosition};
use crate::otsolve;

/// Grid points per side used to discretize the area for the baseline layout.
const CVT_GRID: usize = 317;
const CVT_MAX_ITERATIONS: usize = 500;

/// Rectangle `[0, width] x [0, height]`, meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Area {
    pub width: f64,
    pub height: f64,
}

impl Area {
    pub fn center(&self) -> GroundPosition {
        GroundPosition::new(self.width / 2.0, self.height / 2.0)
    }

    pub fn contains(&self, p: &GroundPosition) -> bool {
        (0.0..=self.width).contains(&p.x) && (0.0..=self.height).contains(&p.y)
    }

    fn clamp(&self, p: GroundPosition) -> GroundPosition {
        GroundPosition::new(p.x.clamp(0.0, self.width), p.y.clamp(0.0, self.height))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub area: Area,
    pub num_devices: usize,
    pub num_uavs: usize,
    /// Devices per UAV; `None` means `ceil(L / K)`.
    pub capacity: Option<u64>,
    pub epochs: usize,
    /// Per-coordinate mobility standard deviation, meters.
    pub sigma: f64,
    pub channel: ChannelParams,
    pub link: LinkParams,
    pub energy: EnergyModel,
    pub min_altitude: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
    pub seeding: Seeding,
    /// Start each epoch's clustering from the current UAV positions instead
    /// of fresh seeds.
    pub warm_start: bool,
    pub seed: u64,
    /// Altitude of the fixed baseline UAVs, meters.
    pub baseline_altitude: f64,
    /// Enforce capacities in the baseline's nearest-UAV assignment.
    pub baseline_capacity: bool,
    /// Repetitions per sweep point.
    pub reps: usize,
    /// Initial UAV positions; seeded from the devices when absent.
    pub initial_uavs: Option<Vec<UavPosition>>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            area: Area {
                width: 1200.0,
                height: 1200.0,
            },
            num_devices: 100,
            num_uavs: 5,
            capacity: None,
            epochs: 10,
            sigma: 50.0,
            channel: ChannelParams::urban(),
            link: LinkParams::table_defaults(),
            energy: EnergyModel::default(),
            min_altitude: 100.0,
            tolerance: 0.1,
            max_iterations: 100,
            seeding: Seeding::default(),
            warm_start: true,
            seed: 0,
            baseline_altitude: 500.0,
            baseline_capacity: false,
            reps: 50,
            initial_uavs: None,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.area.width > 0.0 && self.area.width.is_finite()) {
            return Err(Error::config("width", "must be finite and > 0"));
        }
        if !(self.area.height > 0.0 && self.area.height.is_finite()) {
            return Err(Error::config("height", "must be finite and > 0"));
        }
        if self.num_devices == 0 {
            return Err(Error::config("devices", "need at least one device"));
        }
        if self.num_uavs == 0 {
            return Err(Error::config("uavs", "need at least one UAV"));
        }
        if self.epochs == 0 {
            return Err(Error::config("epochs", "need at least one epoch"));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::config("sigma", "must be finite and >= 0"));
        }
        if !(self.baseline_altitude >= 0.0 && self.baseline_altitude.is_finite()) {
            return Err(Error::config("baseline_altitude", "must be finite and >= 0"));
        }
        if self.reps == 0 {
            return Err(Error::config("reps", "need at least one repetition"));
        }
        self.channel.validate()?;
        self.link.validate()?;
        self.energy.validate()?;
        if let Some(init) = &self.initial_uavs {
            if init.len() != self.num_uavs {
                return Err(Error::config(
                    "initial_uavs",
                    format!("{} positions for {} UAVs", init.len(), self.num_uavs),
                ));
            }
            if !init.iter().all(UavPosition::is_valid) {
                return Err(Error::config("initial_uavs", "positions must be finite with h >= 0"));
            }
        }
        self.clustering_config(self.num_uavs, self.capacity_for(self.num_uavs), self.seed)?
            .validate(self.num_devices)
    }

    /// Configured capacity, or `ceil(L / k)`.
    pub fn capacity_for(&self, k: usize) -> u64 {
        self.capacity
            .unwrap_or_else(|| (self.num_devices as u64).div_ceil(k as u64))
    }

    pub fn theta_min(&self) -> Result<f64> {
        channel::min_elevation_angle(&self.channel)
    }

    pub fn clustering_config(&self, k: usize, capacity: u64, seed: u64) -> Result<ClusteringConfig> {
        Ok(ClusteringConfig {
            num_uavs: k,
            capacities: vec![capacity; k],
            theta_min_deg: self.theta_min()?,
            min_altitude: self.min_altitude,
            tolerance: self.tolerance,
            max_iterations: self.max_iterations,
            seeding: self.seeding,
            seed,
        })
    }
}

/// Seed of repetition `rep`, drawn from its own stream of the master seed.
pub fn rep_seed(master: u64, rep: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(rep + 1);
    rng.next_u64()
}

/// Seed for clustering and initial UAV placement, independent of the device
/// stream.
pub fn clustering_seed(master: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(u64::MAX);
    rng.next_u64()
}

/// Generator of device positions for a run with this master seed.
pub fn device_rng(master: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(master)
}

/// `count` devices i.i.d. uniform over the area.
pub fn spawn_devices<R: Rng>(area: &Area, count: usize, rng: &mut R) -> Vec<GroundPosition> {
    (0..count)
        .map(|_| {
            GroundPosition::new(
                rng.random_range(0.0..=area.width),
                rng.random_range(0.0..=area.height),
            )
        })
        .collect()
}

/// Adds `N(0, sigma^2)` to each coordinate and clamps to the area.
pub fn step_mobility<R: Rng>(
    positions: &[GroundPosition],
    sigma: f64,
    area: &Area,
    rng: &mut R,
) -> Result<Vec<GroundPosition>> {
    if sigma == 0.0 {
        return Ok(positions.to_vec());
    }
    let normal = Normal::new(0.0, sigma)
        .map_err(|e| Error::domain(format!("mobility sigma {sigma}: {e}")))?;
    Ok(positions
        .iter()
        .map(|p| {
            let dx = normal.sample(rng);
            let dy = normal.sample(rng);
            area.clamp(GroundPosition::new(p.x + dx, p.y + dy))
        })
        .collect())
}

/// Snapshot of one epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub t: usize,
    pub devices: Vec<GroundPosition>,
    /// UAV id serving each device.
    pub cluster_of: Vec<usize>,
    /// Position of every UAV id after this epoch's move.
    pub uavs: Vec<UavPosition>,
    /// Total device transmit power, watts.
    pub total_power_w: f64,
    /// Energy spent by each UAV id this epoch, joules.
    pub step_energy: Vec<f64>,
}

impl StepRecord {
    /// Clusters by UAV id, members in ascending device order.
    pub fn clusters(&self) -> Vec<Cluster> {
        let mut clusters: Vec<Cluster> = self
            .uavs
            .iter()
            .map(|&center| Cluster {
                members: Vec::new(),
                center,
            })
            .collect();
        for (i, &j) in self.cluster_of.iter().enumerate() {
            clusters[j].members.push(i);
        }
        clusters
    }

    pub fn total_step_energy(&self) -> f64 {
        self.step_energy.iter().sum()
    }
}

/// Outcome of [`simulate`]: records of the completed epochs, the fleet after
/// the last of them, and the error that stopped the run early, if any.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub records: Vec<StepRecord>,
    pub fleet: FleetState,
    /// Device positions of the last completed epoch.
    pub devices: Vec<GroundPosition>,
    /// Generator state after the last completed epoch.
    pub rng: ChaCha8Rng,
    pub error: Option<Error>,
}

/// Initial UAV positions: the configured override, or the clustering seeding
/// rule applied to the initial devices.
pub fn initial_uavs(config: &ScenarioConfig, devices: &[GroundPosition]) -> Result<Vec<UavPosition>> {
    if let Some(init) = &config.initial_uavs {
        return Ok(init.clone());
    }
    let cfg = config.clustering_config(
        config.num_uavs,
        config.capacity_for(config.num_uavs),
        clustering_seed(config.seed),
    )?;
    Ok(seed_centers(devices, &cfg))
}

/// Runs the proposed pipeline for `config.epochs` epochs. Epoch 0 clusters
/// the initial devices; every later epoch first moves the devices. An epoch
/// failure ends the run and is returned alongside the completed records.
pub fn simulate(config: &ScenarioConfig) -> Result<Simulation> {
    config.validate()?;
    let mut rng = device_rng(config.seed);
    let mut devices = spawn_devices(&config.area, config.num_devices, &mut rng);
    let k = config.num_uavs;
    let cseed = clustering_seed(config.seed);
    let cfg = config.clustering_config(k, config.capacity_for(k), cseed)?;
    let mut fleet = FleetState::new(initial_uavs(config, &devices)?);
    let mut records = Vec::with_capacity(config.epochs);
    let mut error = None;

    for t in 0..config.epochs {
        let mut next_rng = rng.clone();
        let moved = if t == 0 {
            devices.clone()
        } else {
            step_mobility(&devices, config.sigma, &config.area, &mut next_rng)?
        };
        match proposed_epoch(t, &moved, &mut fleet, &cfg, config) {
            Ok(rec) => {
                records.push(rec);
                devices = moved;
                rng = next_rng;
            }
            Err(e) => {
                error = Some(Error::Epoch {
                    epoch: t,
                    source: Box::new(e),
                });
                break;
            }
        }
    }
    Ok(Simulation {
        records,
        fleet,
        devices,
        rng,
        error,
    })
}

fn proposed_epoch(
    t: usize,
    devices: &[GroundPosition],
    fleet: &mut FleetState,
    cfg: &ClusteringConfig,
    config: &ScenarioConfig,
) -> Result<StepRecord> {
    let outcome = if config.warm_start {
        let start: Vec<UavPosition> = fleet.alive_ids().iter().map(|&k| fleet.positions[k]).collect();
        cluster_devices_from(devices, cfg, &start)?
    } else {
        let mut c = cfg.clone();
        c.seed = cfg.seed.wrapping_add(t as u64);
        cluster_devices(devices, &c)?
    };
    let mut trial = fleet.clone();
    let step = step_fleet(&mut trial, &outcome.centers(), &config.energy)?;
    let mut uav_of_target = vec![0; outcome.clusters.len()];
    for (k, target) in step.target_of.iter().enumerate() {
        if let Some(l) = target {
            uav_of_target[*l] = k;
        }
    }
    let mut rec = StepRecord {
        t,
        devices: devices.to_vec(),
        cluster_of: outcome
            .assignment
            .uav_of
            .iter()
            .map(|&l| uav_of_target[l])
            .collect(),
        uavs: trial.positions.clone(),
        total_power_w: 0.0,
        step_energy: step.energies,
    };
    rec.total_power_w = clustering::total_power(devices, &rec.clusters(), &config.link, &config.channel)?;
    *fleet = trial;
    Ok(rec)
}

/// [`simulate`], failing on the first epoch error.
pub fn run_proposed(config: &ScenarioConfig) -> Result<Vec<StepRecord>> {
    let sim = simulate(config)?;
    match sim.error {
        Some(e) => Err(e),
        None => Ok(sim.records),
    }
}

/// One static clustering of the initial devices.
pub fn snapshot(config: &ScenarioConfig) -> Result<(Vec<GroundPosition>, clustering::ClusteringOutcome)> {
    config.validate()?;
    let devices = spawn_devices(&config.area, config.num_devices, &mut device_rng(config.seed));
    let k = config.num_uavs;
    let cfg = config.clustering_config(k, config.capacity_for(k), clustering_seed(config.seed))?;
    let out = cluster_devices(&devices, &cfg)?;
    Ok((devices, out))
}

/// Battery-loss experiment: runs [`simulate`], moves the devices once more
/// and evaluates the loss of every `q`-subset of UAVs for `q = 0..=q_max`.
pub fn loss_experiment(config: &ScenarioConfig, q_max: usize) -> Result<Vec<LossOutcomes>> {
    if q_max >= config.num_uavs {
        return Err(Error::config(
            "q_max",
            format!("must be below the {} UAVs", config.num_uavs),
        ));
    }
    let mut sim = simulate(config)?;
    if let Some(e) = sim.error {
        return Err(e);
    }
    let devices = step_mobility(&sim.devices, config.sigma, &config.area, &mut sim.rng)?;
    let k = config.num_uavs;
    let cfg = config.clustering_config(k, config.capacity_for(k), clustering_seed(config.seed))?;
    (0..=q_max)
        .map(|q| evaluate_losses(&sim.fleet, &devices, q, &cfg, &config.energy))
        .collect()
}

/// Centroidal Voronoi layout of `k` sites for the uniform distribution on
/// the area, by Lloyd iterations on a fixed grid of cell midpoints.
pub fn cvt_layout(area: &Area, k: usize) -> Vec<GroundPosition> {
    let n = CVT_GRID;
    let (dx, dy) = (area.width / n as f64, area.height / n as f64);
    let samples: Vec<GroundPosition> = (0..n * n)
        .map(|i| GroundPosition::new((i % n) as f64 * dx + dx / 2.0, (i / n) as f64 * dy + dy / 2.0))
        .collect();

    // k-means++ start over the grid with a fixed generator
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut sites = vec![samples[rng.random_range(0..samples.len())]];
    let mut nearest: Vec<f64> = samples.iter().map(|s| s.dist2(&sites[0])).collect();
    while sites.len() < k {
        let next = match WeightedIndex::new(&nearest) {
            Ok(w) => samples[w.sample(&mut rng)],
            Err(_) => samples[rng.random_range(0..samples.len())],
        };
        for (s, d) in samples.iter().zip(nearest.iter_mut()) {
            *d = d.min(s.dist2(&next));
        }
        sites.push(next);
    }

    let stop = 1e-9 * area.width.max(area.height);
    for _ in 0..CVT_MAX_ITERATIONS {
        let mut sum = vec![(0.0, 0.0, 0usize); k];
        for s in &samples {
            let j = nearest_site(&sites, s);
            sum[j].0 += s.x;
            sum[j].1 += s.y;
            sum[j].2 += 1;
        }
        let mut shift: f64 = 0.0;
        for (site, &(sx, sy, c)) in sites.iter_mut().zip(&sum) {
            if c > 0 {
                let next = GroundPosition::new(sx / c as f64, sy / c as f64);
                shift = shift.max(next.dist(site));
                *site = next;
            }
        }
        if shift < stop {
            break;
        }
    }
    sites
}

/// Index of the nearest site, lowest index on ties.
fn nearest_site(sites: &[GroundPosition], p: &GroundPosition) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (j, s) in sites.iter().enumerate() {
        let d = s.dist2(p);
        if d < best_d {
            best = j;
            best_d = d;
        }
    }
    best
}

/// Baseline UAVs: the CVT layout at the baseline altitude.
pub fn baseline_uavs(config: &ScenarioConfig, k: usize) -> Vec<UavPosition> {
    cvt_layout(&config.area, k)
        .into_iter()
        .map(|g| UavPosition::new(g.x, g.y, config.baseline_altitude))
        .collect()
}

/// Nearest-UAV assignment, or the capacity-respecting assignment of least
/// total squared distance when `capacity` is given.
pub fn baseline_assignment(
    devices: &[GroundPosition],
    uavs: &[UavPosition],
    capacity: Option<u64>,
) -> Result<Vec<usize>> {
    let ground: Vec<GroundPosition> = uavs.iter().map(UavPosition::ground).collect();
    match capacity {
        None => Ok(devices.iter().map(|d| nearest_site(&ground, d)).collect()),
        Some(cap) => {
            let costs: Vec<Vec<f64>> = devices
                .iter()
                .map(|d| uavs.iter().map(|u| u.dist2_to_ground(d)).collect())
                .collect();
            let open = vec![vec![false; uavs.len()]; devices.len()];
            Ok(otsolve::solve_semi_assignment(&costs, &vec![cap; uavs.len()], &open)?.columns)
        }
    }
}

fn baseline_record(
    t: usize,
    devices: &[GroundPosition],
    uavs: &[UavPosition],
    config: &ScenarioConfig,
    capacity: Option<u64>,
) -> Result<StepRecord> {
    let mut rec = StepRecord {
        t,
        devices: devices.to_vec(),
        cluster_of: baseline_assignment(devices, uavs, capacity)?,
        uavs: uavs.to_vec(),
        total_power_w: 0.0,
        step_energy: vec![0.0; uavs.len()],
    };
    rec.total_power_w = clustering::total_power(devices, &rec.clusters(), &config.link, &config.channel)?;
    Ok(rec)
}

/// Fixed-layout baseline over the same device trajectory as
/// [`run_proposed`] with the same seed.
pub fn run_voronoi_baseline(config: &ScenarioConfig) -> Result<Vec<StepRecord>> {
    config.validate()?;
    let k = config.num_uavs;
    let uavs = baseline_uavs(config, k);
    let capacity = config.baseline_capacity.then(|| config.capacity_for(k));
    let mut rng = device_rng(config.seed);
    let mut devices = spawn_devices(&config.area, config.num_devices, &mut rng);
    let mut records = Vec::with_capacity(config.epochs);
    for t in 0..config.epochs {
        if t > 0 {
            devices = step_mobility(&devices, config.sigma, &config.area, &mut rng)?;
        }
        records.push(baseline_record(t, &devices, &uavs, config, capacity)?);
    }
    Ok(records)
}

/// Mean and standard error of the mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub mean: f64,
    pub stderr: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let stderr = if values.len() > 1 {
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
            (var / n).sqrt()
        } else {
            0.0
        };
        Self { mean, stderr }
    }
}

/// Powers in watts for one number of UAVs.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub k: usize,
    pub proposed: Summary,
    pub voronoi: Summary,
    /// Per-repetition proposed and baseline powers, in repetition order.
    pub samples: Vec<(f64, f64)>,
}

impl SweepPoint {
    /// `1 - proposed / baseline` on the means.
    pub fn reduction(&self) -> f64 {
        1.0 - self.proposed.mean / self.voronoi.mean
    }

    /// Repetitions in which the proposed power exceeds the baseline.
    pub fn baseline_wins(&self) -> usize {
        self.samples.iter().filter(|(p, b)| p > b).count()
    }
}

/// Static-snapshot comparison of both methods for every `k` in `ks`, over
/// `config.reps` repetitions with capacities `ceil(L / k)`. Each repetition
/// draws one device snapshot shared by all `k`.
pub fn sweep_num_uavs(
    config: &ScenarioConfig,
    ks: std::ops::RangeInclusive<usize>,
) -> Result<Vec<SweepPoint>> {
    config.validate()?;
    let ks: Vec<usize> = ks.collect();
    if ks.is_empty() || ks[0] == 0 {
        return Err(Error::config("k_min", "range of UAV counts must be nonempty and start at 1 or more"));
    }
    let layouts: Vec<Vec<UavPosition>> = ks.par_iter().map(|&k| baseline_uavs(config, k)).collect();

    let per_rep: Vec<Vec<(f64, f64)>> = (0..config.reps as u64)
        .into_par_iter()
        .map(|rep| {
            let seed = rep_seed(config.seed, rep);
            let devices = spawn_devices(&config.area, config.num_devices, &mut device_rng(seed));
            ks.iter()
                .zip(&layouts)
                .map(|(&k, uavs)| {
                    let cap = (config.num_devices as u64).div_ceil(k as u64);
                    let cfg = config.clustering_config(k, cap, clustering_seed(seed))?;
                    let out = cluster_devices(&devices, &cfg)?;
                    let p = clustering::total_power(&devices, &out.clusters, &config.link, &config.channel)?;
                    let b = baseline_record(0, &devices, uavs, config, config.baseline_capacity.then_some(cap))?
                        .total_power_w;
                    Ok((p, b))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;

    Ok(ks
        .iter()
        .enumerate()
        .map(|(i, &k)| {
            let samples: Vec<(f64, f64)> = per_rep.iter().map(|r| r[i]).collect();
            let p: Vec<f64> = samples.iter().map(|s| s.0).collect();
            let b: Vec<f64> = samples.iter().map(|s| s.1).collect();
            SweepPoint {
                k,
                proposed: Summary::of(&p),
                voronoi: Summary::of(&b),
                samples,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ScenarioConfig {
        ScenarioConfig {
            num_devices: 60,
            num_uavs: 4,
            epochs: 3,
            seed: 5,
            reps: 4,
            ..ScenarioConfig::default()
        }
    }

    #[test]
    fn spawn_in_bounds_and_centered() {
        let area = Area {
            width: 1200.0,
            height: 800.0,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let pts = spawn_devices(&area, 100_000, &mut rng);
        assert!(pts.iter().all(|p| area.contains(p)));
        let mx = pts.iter().map(|p| p.x).sum::<f64>() / pts.len() as f64;
        let my = pts.iter().map(|p| p.y).sum::<f64>() / pts.len() as f64;
        assert!((mx - 600.0).abs() < 6.0 && (my - 400.0).abs() < 4.0);
        assert_eq!(spawn_devices(&area, 1, &mut rng).len(), 1);
    }

    #[test]
    fn mobility_noise_and_clamping() {
        let area = Area {
            width: 1e6,
            height: 1e6,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let start = vec![GroundPosition::new(5e5, 5e5); 100_000];
        assert_eq!(step_mobility(&start, 0.0, &area, &mut rng).unwrap(), start);
        let moved = step_mobility(&start, 50.0, &area, &mut rng).unwrap();
        let n = moved.len() as f64;
        let mean = moved.iter().map(|p| p.x).sum::<f64>() / n;
        let sd = (moved.iter().map(|p| (p.x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        assert!((sd / 50.0 - 1.0).abs() < 0.02, "{sd}");

        let small = Area {
            width: 10.0,
            height: 10.0,
        };
        let edge = vec![GroundPosition::new(0.0, 10.0); 1000];
        let moved = step_mobility(&edge, 50.0, &small, &mut rng).unwrap();
        assert!(moved.iter().all(|p| small.contains(p)));
    }

    #[test]
    fn proposed_is_deterministic_and_accounted() {
        let cfg = small();
        let a = run_proposed(&cfg).unwrap();
        let b = run_proposed(&cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 3);
        let sim = simulate(&cfg).unwrap();
        let total: f64 = a.iter().map(StepRecord::total_step_energy).sum();
        assert!((sim.fleet.total_energy() - total).abs() <= 1e-9 * total);
        for rec in &a {
            let p = clustering::total_power(&rec.devices, &rec.clusters(), &cfg.link, &cfg.channel).unwrap();
            assert_eq!(p, rec.total_power_w);
            assert!(rec.cluster_of.iter().all(|&j| j < 4));
        }
    }

    #[test]
    fn static_devices_stop_moving() {
        let cfg = ScenarioConfig {
            sigma: 0.0,
            epochs: 5,
            ..small()
        };
        let recs = run_proposed(&cfg).unwrap();
        assert!(recs[0].total_step_energy() > 0.0);
        for r in &recs[1..] {
            assert!(r.total_step_energy() < 21.0 * 0.5, "{}", r.total_step_energy());
        }
    }

    #[test]
    fn single_uav_cvt_is_area_center() {
        let area = Area {
            width: 1200.0,
            height: 1200.0,
        };
        let c = cvt_layout(&area, 1)[0];
        assert!(c.dist(&area.center()) < 1e-6);
        let sites = cvt_layout(&area, 4);
        for s in &sites {
            // quadrant centers
            assert!((s.x - 300.0).abs() < 3.0 || (s.x - 900.0).abs() < 3.0, "{sites:?}");
        }
    }

    #[test]
    fn baseline_is_static() {
        let cfg = ScenarioConfig {
            sigma: 0.0,
            ..small()
        };
        let recs = run_voronoi_baseline(&cfg).unwrap();
        assert!(recs.iter().all(|r| r.total_power_w == recs[0].total_power_w));
        assert!(recs.iter().all(|r| r.total_step_energy() == 0.0));
        let one = ScenarioConfig {
            num_uavs: 1,
            ..cfg
        };
        let recs = run_voronoi_baseline(&one).unwrap();
        assert!(recs[0].cluster_of.iter().all(|&j| j == 0));
    }

    #[test]
    fn capacitated_baseline_respects_capacity() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let area = ScenarioConfig::default().area;
        let devices = spawn_devices(&area, 40, &mut rng);
        let uavs = vec![UavPosition::new(100.0, 100.0, 500.0), UavPosition::new(1100.0, 1100.0, 500.0)];
        let a = baseline_assignment(&devices, &uavs, Some(20)).unwrap();
        assert_eq!(a.iter().filter(|&&j| j == 0).count(), 20);
    }

    #[test]
    fn sweep_shapes_and_dominance() {
        let cfg = small();
        let pts = sweep_num_uavs(&cfg, 6..=8).unwrap();
        assert_eq!(pts.len(), 3);
        for p in &pts {
            assert_eq!(p.samples.len(), 4);
            assert!(p.proposed.mean < p.voronoi.mean);
        }
        assert_eq!(pts, sweep_num_uavs(&cfg, 6..=8).unwrap());
    }

    #[test]
    fn summary_stats() {
        let s = Summary::of(&[1.0, 2.0, 3.0]);
        assert_eq!(s.mean, 2.0);
        assert!((s.stderr - (1.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(Summary::of(&[4.0]).stderr, 0.0);
    }
}
