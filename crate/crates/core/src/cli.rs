//! Config format and the batch commands behind the `uavdc` binary.
//!
//! Configs are flat text, one `key = value` per line, `#` starting a
//! comment. Unknown keys are rejected and missing keys keep their defaults.
//! Every command writes its CSV files plus `manifest.txt`, which is itself a
//! valid config reproducing the run.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use crate::channel;
use crate::error::{Error, Result};
use crate::fleet::LossMode;
use crate::geometry::UavPosition;
use crate::scenario::{self, ScenarioConfig};

pub const MANIFEST: &str = "manifest.txt";

/// Everything a command needs: the scenario plus sweep and loss ranges.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub scenario: ScenarioConfig,
    /// Noise spectral density as configured, dBm/Hz.
    pub noise_dbm_hz: f64,
    pub k_min: usize,
    pub k_max: usize,
    pub q_max: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        let noise_dbm_hz = -170.0;
        let mut scenario = ScenarioConfig::default();
        scenario.link.noise_psd = channel::dbm_per_hz_to_watts(noise_dbm_hz);
        Self {
            scenario,
            noise_dbm_hz,
            k_min: 4,
            k_max: 8,
            q_max: 4,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        if self.k_min == 0 || self.k_min > self.k_max {
            return Err(Error::config("k_min", "need 1 <= k_min <= k_max"));
        }
        Ok(())
    }

    /// Config text that parses back to `self`.
    pub fn to_config_string(&self) -> String {
        let s = &self.scenario;
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        kv("seed", s.seed.to_string());
        kv("width", s.area.width.to_string());
        kv("height", s.area.height.to_string());
        kv("devices", s.num_devices.to_string());
        kv("uavs", s.num_uavs.to_string());
        kv("capacity", s.capacity.map_or("auto".into(), |c| c.to_string()));
        kv("epochs", s.epochs.to_string());
        kv("sigma", s.sigma.to_string());
        kv("psi", s.channel.psi.to_string());
        kv("beta", s.channel.beta.to_string());
        kv("f_c", s.channel.f_c.to_string());
        kv("alpha", s.channel.alpha.to_string());
        kv("eta", s.channel.eta_db.to_string());
        kv("epsilon", s.channel.epsilon.to_string());
        kv("delta", s.link.delta.to_string());
        kv("r_b", s.link.bit_rate.to_string());
        kv("n_o", self.noise_dbm_hz.to_string());
        kv("bandwidth", s.link.bandwidth.to_string());
        kv("v", s.energy.speed.to_string());
        kv("energy_a", s.energy.a.to_string());
        kv("energy_b", s.energy.b.to_string());
        kv("energy_c0", s.energy.c0.to_string());
        kv("travel", s.energy.metric.name().into());
        kv("h_min", s.min_altitude.to_string());
        kv("tolerance", s.tolerance.to_string());
        kv("max_iterations", s.max_iterations.to_string());
        kv("seeding", s.seeding.name().into());
        kv("warm_start", s.warm_start.to_string());
        kv("baseline_altitude", s.baseline_altitude.to_string());
        kv("baseline_capacity", s.baseline_capacity.to_string());
        kv("reps", s.reps.to_string());
        kv("k_min", self.k_min.to_string());
        kv("k_max", self.k_max.to_string());
        kv("q_max", self.q_max.to_string());
        kv(
            "initial_uavs",
            match &s.initial_uavs {
                None => "none".into(),
                Some(v) => v
                    .iter()
                    .map(|u| format!("{},{},{}", u.x, u.y, u.h))
                    .collect::<Vec<_>>()
                    .join("; "),
            },
        );
        out
    }

    fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        let s = &mut self.scenario;
        match key {
            "seed" => s.seed = num(value)?,
            "width" => s.area.width = num(value)?,
            "height" => s.area.height = num(value)?,
            "devices" => s.num_devices = num(value)?,
            "uavs" => s.num_uavs = num(value)?,
            "capacity" => {
                s.capacity = match value {
                    "auto" => None,
                    v => Some(num(v)?),
                }
            }
            "epochs" => s.epochs = num(value)?,
            "sigma" => s.sigma = num(value)?,
            "psi" => s.channel.psi = num(value)?,
            "beta" => s.channel.beta = num(value)?,
            "f_c" => s.channel.f_c = num(value)?,
            "alpha" => s.channel.alpha = num(value)?,
            "eta" => s.channel.eta_db = num(value)?,
            "epsilon" => s.channel.epsilon = num(value)?,
            "delta" => s.link.delta = num(value)?,
            "r_b" => s.link.bit_rate = num(value)?,
            "n_o" => {
                self.noise_dbm_hz = num(value)?;
                s.link.noise_psd = channel::dbm_per_hz_to_watts(self.noise_dbm_hz);
            }
            "bandwidth" => s.link.bandwidth = num(value)?,
            "v" => s.energy.speed = num(value)?,
            "energy_a" => s.energy.a = num(value)?,
            "energy_b" => s.energy.b = num(value)?,
            "energy_c0" => s.energy.c0 = num(value)?,
            "travel" => s.energy.metric = value.parse()?,
            "h_min" => s.min_altitude = num(value)?,
            "tolerance" => s.tolerance = num(value)?,
            "max_iterations" => s.max_iterations = num(value)?,
            "seeding" => s.seeding = value.parse()?,
            "warm_start" => s.warm_start = num(value)?,
            "baseline_altitude" => s.baseline_altitude = num(value)?,
            "baseline_capacity" => s.baseline_capacity = num(value)?,
            "reps" => s.reps = num(value)?,
            "k_min" => self.k_min = num(value)?,
            "k_max" => self.k_max = num(value)?,
            "q_max" => self.q_max = num(value)?,
            "initial_uavs" => s.initial_uavs = parse_uavs(value)?,
            other => return Err(format!("unknown key `{other}`")),
        }
        Ok(())
    }
}

fn num<T: FromStr>(value: &str) -> std::result::Result<T, String>
where
    T::Err: std::fmt::Display,
{
    value.parse().map_err(|e| format!("bad value `{value}`: {e}"))
}

fn parse_uavs(value: &str) -> std::result::Result<Option<Vec<UavPosition>>, String> {
    if value == "none" {
        return Ok(None);
    }
    value
        .split(';')
        .map(|triple| {
            let parts: Vec<f64> = triple
                .split(',')
                .map(|p| num(p.trim()))
                .collect::<std::result::Result<_, _>>()?;
            match parts[..] {
                [x, y, h] => Ok(UavPosition::new(x, y, h)),
                _ => Err(format!("expected `x,y,h`, got `{}`", triple.trim())),
            }
        })
        .collect::<std::result::Result<Vec<_>, _>>()
        .map(Some)
}

/// Parses config text. Syntax errors carry their line number; invariant
/// violations name the offending key.
pub fn parse_config_str(text: &str) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    let mut seen: Vec<String> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::Parse {
                line: line_no,
                reason: format!("expected `key = value`, got `{line}`"),
            });
        };
        let (key, value) = (key.trim(), value.trim());
        if seen.iter().any(|k| k == key) {
            return Err(Error::Parse {
                line: line_no,
                reason: format!("duplicate key `{key}`"),
            });
        }
        cfg.set(key, value).map_err(|reason| Error::Parse {
            line: line_no,
            reason: format!("{key}: {reason}"),
        })?;
        seen.push(key.to_string());
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn parse_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Config {
        key: "config".into(),
        reason: format!("cannot read {}: {e}", path.display()),
    })?;
    parse_config_str(&text)
}

#[derive(Debug, Parser)]
#[command(name = "uavdc", version, about = "UAV data collection experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Config file; built-in defaults when absent.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the number of repetitions.
    #[arg(long)]
    reps: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// One static clustering snapshot.
    Cluster(Common),
    /// Total device power against the number of UAVs, with the Voronoi baseline.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        k_min: Option<usize>,
        #[arg(long)]
        k_max: Option<usize>,
    },
    /// Time-stepped run with device mobility.
    Simulate(Common),
    /// Energy per UAV after losing q UAVs.
    UavLoss {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        q_max: Option<usize>,
    },
}

/// Runs the CLI on `args` (program name first) and returns its exit code.
pub fn run<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            ExitCode::FAILURE
        }
    }
}

fn load(common: &Common) -> Result<RunConfig> {
    let mut cfg = match &common.config {
        Some(p) => parse_config(p)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.scenario.seed = seed;
    }
    if let Some(reps) = common.reps {
        cfg.scenario.reps = reps;
    }
    Ok(cfg)
}

fn dispatch(command: Command) -> Result<()> {
    let started = Instant::now();
    match command {
        Command::Cluster(common) => {
            let cfg = load(&common)?;
            cfg.validate()?;
            let files = cmd_cluster(&cfg, &common.out)?;
            write_manifest(&common.out, "cluster", &cfg, &files, &[], started)
        }
        Command::Sweep { common, k_min, k_max } => {
            let mut cfg = load(&common)?;
            cfg.k_min = k_min.unwrap_or(cfg.k_min);
            cfg.k_max = k_max.unwrap_or(cfg.k_max);
            cfg.validate()?;
            let files = cmd_sweep(&cfg, &common.out)?;
            write_manifest(&common.out, "sweep", &cfg, &files, &[], started)
        }
        Command::Simulate(common) => {
            let cfg = load(&common)?;
            cfg.validate()?;
            let (files, total, error) = cmd_simulate(&cfg, &common.out)?;
            let extra = [format!("total_energy_J = {total:.6}")];
            write_manifest(&common.out, "simulate", &cfg, &files, &extra, started)?;
            error.map_or(Ok(()), Err)
        }
        Command::UavLoss { common, q_max } => {
            let mut cfg = load(&common)?;
            cfg.q_max = q_max.unwrap_or(cfg.q_max);
            cfg.validate()?;
            let files = cmd_uav_loss(&cfg, &common.out)?;
            write_manifest(&common.out, "uav-loss", &cfg, &files, &[], started)
        }
    }
}

fn write_file(dir: &Path, name: &str, body: &str) -> Result<String> {
    std::fs::create_dir_all(dir)
        .and_then(|_| std::fs::write(dir.join(name), body))
        .map_err(|e| Error::Config {
            key: "out".into(),
            reason: format!("cannot write {}: {e}", dir.join(name).display()),
        })?;
    Ok(name.to_string())
}

fn write_manifest(
    dir: &Path,
    command: &str,
    cfg: &RunConfig,
    files: &[String],
    extra: &[String],
    started: Instant,
) -> Result<()> {
    let mut m = String::new();
    let _ = writeln!(m, "# uavdc {}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(m, "# command = {command}");
    let _ = writeln!(m, "# outputs = {}", files.join(", "));
    let _ = writeln!(m, "# energy_per_meter_J = {}", cfg.scenario.energy.energy_per_meter());
    if let Ok(theta) = cfg.scenario.theta_min() {
        let _ = writeln!(m, "# theta_min_deg = {theta:.9}");
    }
    for e in extra {
        let _ = writeln!(m, "# {e}");
    }
    let _ = writeln!(m, "# wall_clock_s = {:.3}", started.elapsed().as_secs_f64());
    m.push_str(&cfg.to_config_string());
    write_file(dir, MANIFEST, &m).map(|_| ())
}

/// Writes `devices.csv` and `uavs.csv`.
pub fn cmd_cluster(cfg: &RunConfig, out: &Path) -> Result<Vec<String>> {
    let (devices, outcome) = scenario::snapshot(&cfg.scenario)?;
    let mut d = String::from("device_id,x,y,cluster_id\n");
    for (i, (p, j)) in devices.iter().zip(&outcome.assignment.uav_of).enumerate() {
        let _ = writeln!(d, "{i},{:.6},{:.6},{j}", p.x, p.y);
    }
    let mut u = String::from("uav_id,x,y,h\n");
    for (j, c) in outcome.centers().iter().enumerate() {
        let _ = writeln!(u, "{j},{:.6},{:.6},{:.6}", c.x, c.y, c.h);
    }
    Ok(vec![write_file(out, "devices.csv", &d)?, write_file(out, "uavs.csv", &u)?])
}

/// Writes `sweep.csv`.
pub fn cmd_sweep(cfg: &RunConfig, out: &Path) -> Result<Vec<String>> {
    let points = scenario::sweep_num_uavs(&cfg.scenario, cfg.k_min..=cfg.k_max)?;
    let mut s = String::from("K,method,mean_power_mW,stderr_mW\n");
    for p in &points {
        for (method, stat) in [("proposed", p.proposed), ("voronoi", p.voronoi)] {
            let _ = writeln!(s, "{},{method},{:.9},{:.9}", p.k, stat.mean * 1e3, stat.stderr * 1e3);
        }
    }
    Ok(vec![write_file(out, "sweep.csv", &s)?])
}

/// Writes `trajectory.csv` and `power.csv` for the completed epochs. Returns
/// the files, the total fleet energy and the epoch error, if any.
pub fn cmd_simulate(cfg: &RunConfig, out: &Path) -> Result<(Vec<String>, f64, Option<Error>)> {
    let sim = scenario::simulate(&cfg.scenario)?;
    let mut traj = String::from("t,uav_id,x,y,h,step_energy_J\n");
    let mut power = String::from("t,total_power_mW\n");
    for rec in &sim.records {
        for (k, (u, e)) in rec.uavs.iter().zip(&rec.step_energy).enumerate() {
            let _ = writeln!(traj, "{},{k},{:.6},{:.6},{:.6},{:.6}", rec.t, u.x, u.y, u.h, e);
        }
        let _ = writeln!(power, "{},{:.9}", rec.t, rec.total_power_w * 1e3);
    }
    let files = vec![
        write_file(out, "trajectory.csv", &traj)?,
        write_file(out, "power.csv", &power)?,
    ];
    Ok((files, sim.fleet.total_energy(), sim.error))
}

/// Writes `uav_loss.csv`.
pub fn cmd_uav_loss(cfg: &RunConfig, out: &Path) -> Result<Vec<String>> {
    let outcomes = scenario::loss_experiment(&cfg.scenario, cfg.q_max)?;
    let mut s = String::from("q,mode,mean_energy_per_uav_J\n");
    for o in &outcomes {
        for mode in [LossMode::Average, LossMode::Worst] {
            let r = o.report(mode);
            let _ = writeln!(s, "{},{},{:.6}", r.q, mode.name(), r.mean_energy_per_uav);
        }
    }
    Ok(vec![write_file(out, "uav_loss.csv", &s)?])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_gives_defaults() {
        let cfg = parse_config_str("").unwrap();
        assert_eq!(cfg, RunConfig::default());
        let s = &cfg.scenario;
        assert_eq!(s.channel.f_c, 2e9);
        assert_eq!(s.energy.speed, 10.0);
        assert_eq!(s.link.delta, 1e-8);
        assert_eq!(s.channel.epsilon, 0.95);
        assert!((s.link.noise_psd - 1e-20).abs() < 1e-35);
        assert_eq!(s.link.bit_rate, 2e5);
        assert_eq!(s.link.bandwidth, 2e5);
        assert_eq!(s.channel.eta_db, 5.0);
        assert_eq!((s.channel.psi, s.channel.beta), (11.95, 0.14));
        assert_eq!((s.area.width, s.area.height), (1200.0, 1200.0));
    }

    #[test]
    fn invalid_epsilon_names_key() {
        match parse_config_str("epsilon = 1.5") {
            Err(Error::Config { key, .. }) => assert_eq!(key, "epsilon"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn syntax_errors_carry_line_numbers() {
        let text = "# comment\nseed = 3\n\nbogus = 1\n";
        assert!(matches!(parse_config_str(text), Err(Error::Parse { line: 4, .. })));
        assert!(matches!(parse_config_str("seed 3"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse_config_str("seed = x"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(
            parse_config_str("seed = 1\nseed = 2"),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn config_round_trips() {
        let text = "seed = 42\nv = 12.5\nn_o = -168.3\ncapacity = 30\nseeding = kmeans++\n\
                    travel = horizontal\ninitial_uavs = 1,2,100; 3.5,4,120; 0,0,0; 5,5,5; 9,9,9\n";
        let cfg = parse_config_str(text).unwrap();
        assert_eq!(cfg.scenario.initial_uavs.as_ref().unwrap()[1], UavPosition::new(3.5, 4.0, 120.0));
        let again = parse_config_str(&cfg.to_config_string()).unwrap();
        assert_eq!(cfg, again);
    }

    #[test]
    fn energy_per_meter_in_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = parse_config_str("v = 10\ndevices = 10\nuavs = 2").unwrap();
        write_manifest(dir.path(), "cluster", &cfg, &[], &[], Instant::now()).unwrap();
        let text = std::fs::read_to_string(dir.path().join(MANIFEST)).unwrap();
        assert!(text.contains("# energy_per_meter_J = 21\n"), "{text}");
        assert_eq!(parse_config_str(&text).unwrap(), cfg);
    }
}
