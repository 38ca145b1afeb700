//! UAV fleet movement: energy model, optimal matching of UAVs to new cluster
//! centers, trajectory bookkeeping and replanning after battery loss.

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::clustering::{cluster_devices_from, ClusteringConfig};
use crate::error::{Error, Result};
use crate::geometry::{GroundPosition, UavPosition};
use crate::otsolve::{self, TransportPlan, TransportProblem};

/// Subsets enumerated exhaustively up to this count, sampled beyond it.
pub const MAX_EXHAUSTIVE_SUBSETS: usize = 10_000;

/// Distance used for travel energy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TravelMetric {
    /// Straight-line 3D displacement, altitude changes included.
    #[default]
    Euclidean3d,
    /// Ground-plane displacement only.
    Horizontal,
}

impl TravelMetric {
    pub fn name(&self) -> &'static str {
        match self {
            TravelMetric::Euclidean3d => "3d",
            TravelMetric::Horizontal => "horizontal",
        }
    }
}

impl std::str::FromStr for TravelMetric {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "3d" => Ok(TravelMetric::Euclidean3d),
            "horizontal" => Ok(TravelMetric::Horizontal),
            other => Err(format!("unknown travel metric `{other}` (3d|horizontal)")),
        }
    }
}

/// Energy per meter `a v^2 + b v + c0` at constant cruise speed `v`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyModel {
    pub a: f64,
    pub b: f64,
    pub c0: f64,
    /// Cruise speed, m/s.
    pub speed: f64,
    pub metric: TravelMetric,
}

impl Default for EnergyModel {
    fn default() -> Self {
        Self {
            a: 0.95,
            b: -20.4,
            c0: 130.0,
            speed: 10.0,
            metric: TravelMetric::default(),
        }
    }
}

impl EnergyModel {
    /// Joules per meter flown at the cruise speed.
    pub fn energy_per_meter(&self) -> f64 {
        let v = self.speed;
        self.a * v * v + self.b * v + self.c0
    }

    /// Propulsion power in watts, `v` times the energy per meter.
    pub fn power(&self) -> f64 {
        self.speed * self.energy_per_meter()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.speed > 0.0 && self.speed.is_finite()) {
            return Err(Error::config("v", format!("must be finite and > 0, got {}", self.speed)));
        }
        let e = self.energy_per_meter();
        if !(e > 0.0 && e.is_finite()) {
            return Err(Error::config(
                "v",
                format!("energy per meter at this speed must be > 0, got {e}"),
            ));
        }
        Ok(())
    }

    /// Travel distance between two UAV positions under the configured metric.
    pub fn distance(&self, from: &UavPosition, to: &UavPosition) -> f64 {
        match self.metric {
            TravelMetric::Euclidean3d => from.dist(to),
            TravelMetric::Horizontal => from.ground().dist(&to.ground()),
        }
    }
}

/// Energy in joules to fly `distance` meters.
pub fn move_energy(distance: f64, model: &EnergyModel) -> Result<f64> {
    if !(distance >= 0.0) {
        return Err(Error::domain(format!("distance must be >= 0, got {distance}")));
    }
    Ok(distance * model.energy_per_meter())
}

/// Optimal one-to-one assignment of UAVs to targets.
#[derive(Debug, Clone, PartialEq)]
pub struct FleetMatch {
    /// Target index for each current UAV.
    pub target_of: Vec<usize>,
    /// Energy each UAV spends reaching its target.
    pub energies: Vec<f64>,
    pub total_energy: f64,
    pub plan: TransportPlan,
}

/// Minimum-energy matching of `current` UAV positions to `targets`.
pub fn match_fleet(
    current: &[UavPosition],
    targets: &[UavPosition],
    model: &EnergyModel,
) -> Result<FleetMatch> {
    if current.len() != targets.len() {
        return Err(Error::Dimension(format!(
            "{} UAVs for {} targets",
            current.len(),
            targets.len()
        )));
    }
    if current.is_empty() {
        return Err(Error::domain("no UAVs to match"));
    }
    let costs: Vec<Vec<f64>> = current
        .iter()
        .map(|u| {
            targets
                .iter()
                .map(|t| move_energy(model.distance(u, t), model))
                .collect::<Result<_>>()
        })
        .collect::<Result<_>>()?;
    let n = current.len();
    let problem = TransportProblem::new(costs, vec![1; n], vec![1; n])?;
    let plan = otsolve::solve_transportation(&problem)?;
    let target_of = plan
        .permutation()
        .ok_or_else(|| Error::Numerical("unit-mass plan is not a permutation".into()))?;
    let energies: Vec<f64> = target_of
        .iter()
        .enumerate()
        .map(|(k, &l)| problem.cost(k, l))
        .collect();
    Ok(FleetMatch {
        total_energy: energies.iter().sum(),
        target_of,
        energies,
        plan,
    })
}

/// Positions, energy and path history of every UAV.
#[derive(Debug, Clone, PartialEq)]
pub struct FleetState {
    pub positions: Vec<UavPosition>,
    /// Cumulative energy per UAV, joules.
    pub energy: Vec<f64>,
    pub alive: Vec<bool>,
    /// `(time index, position)` per UAV, starting with the initial position.
    pub history: Vec<Vec<(usize, UavPosition)>>,
    /// Number of steps taken.
    pub time: usize,
}

impl FleetState {
    pub fn new(positions: Vec<UavPosition>) -> Self {
        let n = positions.len();
        Self {
            history: positions.iter().map(|&p| vec![(0, p)]).collect(),
            positions,
            energy: vec![0.0; n],
            alive: vec![true; n],
            time: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn alive_ids(&self) -> Vec<usize> {
        (0..self.len()).filter(|&k| self.alive[k]).collect()
    }

    pub fn total_energy(&self) -> f64 {
        self.energy.iter().sum()
    }

    /// Marks a UAV as depleted; its position is frozen from now on.
    pub fn kill(&mut self, uav: usize) {
        self.alive[uav] = false;
    }
}

/// One step of [`step_fleet`].
#[derive(Debug, Clone, PartialEq)]
pub struct FleetStep {
    /// Energy spent this step, per UAV id (zero for dead UAVs).
    pub energies: Vec<f64>,
    /// Target index assigned to each UAV id; `None` for dead UAVs.
    pub target_of: Vec<Option<usize>>,
}

/// Moves the alive UAVs onto `targets` along the minimum-energy matching.
pub fn step_fleet(
    state: &mut FleetState,
    targets: &[UavPosition],
    model: &EnergyModel,
) -> Result<FleetStep> {
    let ids = state.alive_ids();
    let current: Vec<UavPosition> = ids.iter().map(|&k| state.positions[k]).collect();
    let m = match_fleet(&current, targets, model)?;
    state.time += 1;
    let mut energies = vec![0.0; state.len()];
    let mut target_of = vec![None; state.len()];
    for (slot, &k) in ids.iter().enumerate() {
        let l = m.target_of[slot];
        state.positions[k] = targets[l];
        state.energy[k] += m.energies[slot];
        state.history[k].push((state.time, targets[l]));
        energies[k] = m.energies[slot];
        target_of[k] = Some(l);
    }
    Ok(FleetStep { energies, target_of })
}

/// Aggregation over depleted subsets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossMode {
    Average,
    Worst,
}

impl LossMode {
    pub fn name(&self) -> &'static str {
        match self {
            LossMode::Average => "average",
            LossMode::Worst => "worst",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossReport {
    pub q: usize,
    pub mode: LossMode,
    /// Mean energy per surviving UAV, averaged (or maximized) over subsets.
    pub mean_energy_per_uav: f64,
    pub subsets_evaluated: usize,
    /// Subsets were sampled rather than enumerated.
    pub sampled: bool,
    /// Subset attaining the maximum, by UAV id.
    pub worst_subset: Vec<usize>,
}

/// Mean survivor energy for every evaluated `q`-subset of lost UAVs.
#[derive(Debug, Clone, PartialEq)]
pub struct LossOutcomes {
    pub q: usize,
    /// Lost UAV ids per subset.
    pub subsets: Vec<Vec<usize>>,
    /// Mean energy per surviving UAV, per subset.
    pub energies: Vec<f64>,
    pub sampled: bool,
}

impl LossOutcomes {
    pub fn report(&self, mode: LossMode) -> LossReport {
        let (worst_at, worst) = self
            .energies
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, e)| if e > best.1 { (i, e) } else { best });
        let value = match mode {
            LossMode::Average => self.energies.iter().sum::<f64>() / self.energies.len() as f64,
            LossMode::Worst => worst,
        };
        LossReport {
            q: self.q,
            mode,
            mean_energy_per_uav: value,
            subsets_evaluated: self.energies.len(),
            sampled: self.sampled,
            worst_subset: self.subsets[worst_at].clone(),
        }
    }
}

/// Evaluates the loss of each `q`-subset of the alive UAVs.
///
/// For every subset the survivors re-cluster `devices` into as many clusters
/// as remain, each with capacity `ceil(L / survivors)`, starting from their
/// own positions, and fly there along the optimal matching.
pub fn evaluate_losses(
    state: &FleetState,
    devices: &[GroundPosition],
    q: usize,
    config: &ClusteringConfig,
    model: &EnergyModel,
) -> Result<LossOutcomes> {
    let alive = state.alive_ids();
    if q >= alive.len() {
        return Err(Error::domain(format!(
            "cannot lose {q} of {} alive UAVs",
            alive.len()
        )));
    }
    let (subsets, sampled) = loss_subsets(alive.len(), q, config.seed);
    let energies: Vec<f64> = subsets
        .par_iter()
        .map(|lost| {
            let survivors: Vec<UavPosition> = (0..alive.len())
                .filter(|s| !lost.contains(s))
                .map(|s| state.positions[alive[s]])
                .collect();
            survivor_energy(&survivors, devices, config, model)
        })
        .collect::<Result<_>>()?;
    Ok(LossOutcomes {
        q,
        subsets: subsets
            .iter()
            .map(|lost| lost.iter().map(|&s| alive[s]).collect())
            .collect(),
        energies,
        sampled,
    })
}

/// [`evaluate_losses`] aggregated by `mode`: the mean over subsets, or the
/// subset with the highest energy.
pub fn replan_after_loss(
    state: &FleetState,
    devices: &[GroundPosition],
    q: usize,
    mode: LossMode,
    config: &ClusteringConfig,
    model: &EnergyModel,
) -> Result<LossReport> {
    Ok(evaluate_losses(state, devices, q, config, model)?.report(mode))
}

fn survivor_energy(
    survivors: &[UavPosition],
    devices: &[GroundPosition],
    config: &ClusteringConfig,
    model: &EnergyModel,
) -> Result<f64> {
    let k = survivors.len();
    let capacity = (devices.len() as u64).div_ceil(k as u64);
    let cfg = ClusteringConfig {
        num_uavs: k,
        capacities: vec![capacity; k],
        ..config.clone()
    };
    let out = cluster_devices_from(devices, &cfg, survivors)?;
    let m = match_fleet(survivors, &out.centers(), model)?;
    Ok(m.total_energy / k as f64)
}

/// `q`-subsets of `0..n` in lexicographic order, or a seeded sample of
/// [`MAX_EXHAUSTIVE_SUBSETS`] of them when there are more.
pub fn loss_subsets(n: usize, q: usize, seed: u64) -> (Vec<Vec<usize>>, bool) {
    if binomial(n, q) <= MAX_EXHAUSTIVE_SUBSETS as u128 {
        return (combinations(n, q), false);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let subsets = (0..MAX_EXHAUSTIVE_SUBSETS)
        .map(|_| {
            let mut s = index::sample(&mut rng, n, q).into_vec();
            s.sort_unstable();
            s
        })
        .collect();
    (subsets, true)
}

pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

fn combinations(n: usize, q: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..q).collect();
    loop {
        out.push(idx.clone());
        // advance the rightmost index that still has room
        let Some(i) = (0..q).rev().find(|&i| idx[i] < n - q + i) else {
            return out;
        };
        idx[i] += 1;
        for j in i + 1..q {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn model() -> EnergyModel {
        EnergyModel::default()
    }

    fn permutations(n: usize) -> Vec<Vec<usize>> {
        if n == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for p in permutations(n - 1) {
            for i in 0..=p.len() {
                let mut q = p.clone();
                q.insert(i, n - 1);
                out.push(q);
            }
        }
        out
    }

    #[test]
    fn energy_examples() {
        let m = model();
        assert_eq!(m.energy_per_meter(), 21.0);
        assert_eq!(move_energy(0.0, &m).unwrap(), 0.0);
        assert_eq!(move_energy(1000.0, &m).unwrap(), 21_000.0);
        assert_eq!(move_energy(2.0 * 123.4, &m).unwrap(), 2.0 * move_energy(123.4, &m).unwrap());
        assert!(move_energy(-1.0, &m).is_err());
    }

    #[test]
    fn identical_targets_give_identity() {
        let pos = vec![
            UavPosition::new(0.0, 0.0, 100.0),
            UavPosition::new(10.0, 0.0, 100.0),
            UavPosition::new(50.0, 80.0, 120.0),
        ];
        let m = match_fleet(&pos, &pos, &model()).unwrap();
        assert_eq!(m.target_of, vec![0, 1, 2]);
        assert_eq!(m.total_energy, 0.0);
    }

    #[test]
    fn swapped_targets_stay_put() {
        let cur = [UavPosition::new(0.0, 0.0, 100.0), UavPosition::new(10.0, 0.0, 100.0)];
        let tgt = [cur[1], cur[0]];
        let m = match_fleet(&cur, &tgt, &model()).unwrap();
        assert_eq!(m.target_of, vec![1, 0]);
        assert_eq!(m.total_energy, 0.0);
    }

    #[test]
    fn six_uavs_match_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = model();
        for _ in 0..20 {
            let pt = |rng: &mut ChaCha8Rng| {
                UavPosition::new(
                    rng.random_range(0.0..1200.0),
                    rng.random_range(0.0..1200.0),
                    rng.random_range(100.0..500.0),
                )
            };
            let cur: Vec<_> = (0..6).map(|_| pt(&mut rng)).collect();
            let tgt: Vec<_> = (0..6).map(|_| pt(&mut rng)).collect();
            let best = permutations(6)
                .iter()
                .map(|p| (0..6).map(|k| 21.0 * cur[k].dist(&tgt[p[k]])).sum::<f64>())
                .fold(f64::INFINITY, f64::min);
            let got = match_fleet(&cur, &tgt, &m).unwrap();
            assert!((got.total_energy - best).abs() <= 1e-9 * best);
            assert!(otsolve::verify_certificate(
                &got.plan,
                &TransportProblem::new(
                    cur.iter()
                        .map(|u| tgt.iter().map(|t| 21.0 * u.dist(t)).collect())
                        .collect(),
                    vec![1; 6],
                    vec![1; 6]
                )
                .unwrap()
            )
            .passed());
        }
    }

    #[test]
    fn size_mismatch_is_rejected() {
        let a = [UavPosition::new(0.0, 0.0, 1.0)];
        assert!(matches!(match_fleet(&a, &[], &model()), Err(Error::Dimension(_))));
    }

    #[test]
    fn step_bookkeeping() {
        let a = UavPosition::new(0.0, 0.0, 100.0);
        let b = UavPosition::new(100.0, 0.0, 100.0);
        let mut s = FleetState::new(vec![a]);
        let step = step_fleet(&mut s, &[b], &model()).unwrap();
        assert_eq!(step.energies, vec![2100.0]);
        step_fleet(&mut s, &[a], &model()).unwrap();
        assert_eq!(s.history[0].len(), 3);
        assert_eq!(s.energy[0], 4200.0);
        step_fleet(&mut s, &[a], &model()).unwrap();
        assert_eq!(s.energy[0], 4200.0);
    }

    #[test]
    fn dead_uavs_are_frozen() {
        let p = vec![UavPosition::new(0.0, 0.0, 100.0), UavPosition::new(500.0, 0.0, 100.0)];
        let mut s = FleetState::new(p.clone());
        s.kill(1);
        let step = step_fleet(&mut s, &[UavPosition::new(400.0, 0.0, 100.0)], &model()).unwrap();
        assert_eq!(s.positions[1], p[1]);
        assert_eq!(step.target_of, vec![Some(0), None]);
        assert_eq!(step.energies[1], 0.0);
    }

    #[test]
    fn horizontal_metric_ignores_altitude() {
        let m = EnergyModel {
            metric: TravelMetric::Horizontal,
            ..model()
        };
        let a = UavPosition::new(0.0, 0.0, 100.0);
        let b = UavPosition::new(3.0, 4.0, 400.0);
        assert_eq!(m.distance(&a, &b), 5.0);
        assert!(model().distance(&a, &b) > 300.0);
    }

    #[test]
    fn subsets_enumerate_and_sample() {
        let (s, sampled) = loss_subsets(5, 2, 0);
        assert!(!sampled);
        assert_eq!(s.len(), 10);
        assert_eq!(s[0], vec![0, 1]);
        assert_eq!(s[9], vec![3, 4]);
        assert_eq!(loss_subsets(4, 0, 0).0, vec![Vec::<usize>::new()]);
        let (big, sampled) = loss_subsets(30, 10, 1);
        assert!(sampled);
        assert_eq!(big.len(), MAX_EXHAUSTIVE_SUBSETS);
        assert_eq!(binomial(8, 3), 56);
    }

    #[test]
    fn loss_average_below_worst() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let devices: Vec<GroundPosition> = (0..60)
            .map(|_| GroundPosition::new(rng.random_range(0.0..1200.0), rng.random_range(0.0..1200.0)))
            .collect();
        let mut cfg = ClusteringConfig::new(4, 15, 50.7);
        cfg.seed = 2;
        let out = crate::clustering::cluster_devices(&devices, &cfg).unwrap();
        let state = FleetState::new(out.centers());
        let m = model();
        let zero = replan_after_loss(&state, &devices, 0, LossMode::Average, &cfg, &m).unwrap();
        assert!(zero.mean_energy_per_uav < 21.0);
        for q in 1..3 {
            let avg = replan_after_loss(&state, &devices, q, LossMode::Average, &cfg, &m).unwrap();
            let worst = replan_after_loss(&state, &devices, q, LossMode::Worst, &cfg, &m).unwrap();
            assert!(avg.mean_energy_per_uav <= worst.mean_energy_per_uav);
            assert_eq!(avg.subsets_evaluated as u128, binomial(4, q));
        }
        assert!(replan_after_loss(&state, &devices, 4, LossMode::Average, &cfg, &m).is_err());
    }
}
