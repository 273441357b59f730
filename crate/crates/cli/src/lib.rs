//! Option handling and subcommands for the `zitter` binary.

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use thiserror::Error;
use zitter_core::config::{ParticleConfig, Scales, UnitSystem};
use zitter_core::dynamics::{expectation_series, Observable, TimeGrid, TimeSeries};
use zitter_core::io::{format_sig, series_csv, sweep_csv, Figure};
use zitter_core::spectral::Window;
use zitter_core::spectrum::{frequency_set, momentum_from_velocity, sweep, FrequencySet, Tone};
use zitter_core::verify::{self, VerifyConfig};
use zitter_core::wavepacket::{four_way_mix, gaussian_packet, Mix, Wavepacket};

/// Splitting used when neither Δ nor dipoles/fields are given (natural units only).
pub const DEFAULT_DELTA: f64 = 0.4;
pub const DEFAULT_P0: f64 = 0.5;
pub const DEFAULT_SIGMA_P: f64 = 0.05;
pub const DEFAULT_SAMPLES: usize = 1024;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("I/O error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Io(_) => 3,
        }
    }
}

fn invalid(e: impl ToString) -> CliError {
    CliError::Validation(e.to_string())
}

#[derive(Debug, Parser)]
#[command(name = "zitter", version, about = "Zitterbewegung of neutral Dirac particles in longitudinal fields")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Transition, beat and forbidden frequencies at one momentum.
    Frequencies(Options),
    /// Frequencies over a velocity grid (figure data).
    Sweep(Options),
    /// Oracle-evolved expectation values as time series.
    Evolve(Options),
    /// Spectral verification of all observables; exit 2 on failure.
    Verify(Options),
    /// Writes the wavepacket document used by `evolve --packet`.
    Packet(Options),
}

#[derive(Debug, Clone, Default, Args)]
pub struct Options {
    /// Momentum (mc in natural units, kg·m/s in SI).
    #[arg(long)]
    pub p: Option<f64>,
    /// Velocity: "0.6c", or a plain number (fraction of c in natural units, m/s in SI).
    #[arg(long)]
    pub v: Option<String>,
    /// Spin splitting Δ (mc² in natural units, J in SI).
    #[arg(long, allow_hyphen_values = true)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub mass: Option<f64>,
    /// Magnetic dipole moment.
    #[arg(long, allow_hyphen_values = true)]
    pub mu: Option<f64>,
    /// Electric dipole moment.
    #[arg(long, allow_hyphen_values = true)]
    pub dmom: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub bfield: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub efield: Option<f64>,
    /// natural | si
    #[arg(long)]
    pub units: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// csv | json
    #[arg(long)]
    pub format: Option<String>,
    /// fig1 | fig2 | fig3
    #[arg(long)]
    pub figure: Option<String>,
    /// Observable tags, comma separated (S_x … r_z).
    #[arg(long, value_delimiter = ',')]
    pub observable: Vec<String>,
    #[arg(long)]
    pub t_max: Option<f64>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub modes: Option<usize>,
    /// Random branch/spin phases from this seed instead of the fixed mix.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Momentum width of the Gaussian packet.
    #[arg(long)]
    pub sigma_p: Option<f64>,
    /// hann | rect
    #[arg(long)]
    pub window: Option<String>,
    /// Number of velocity points for a custom sweep.
    #[arg(long)]
    pub points: Option<usize>,
    /// Largest v/c of a custom sweep.
    #[arg(long)]
    pub v_max: Option<f64>,
    /// Wavepacket JSON to evolve.
    #[arg(long)]
    pub packet: Option<PathBuf>,
    /// Flat `key = value` file; flags win over its entries.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

fn parse_value<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, CliError> {
    value
        .parse()
        .map_err(|_| CliError::Validation(format!("config key '{key}': cannot parse '{value}'")))
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut map = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::Validation(format!("config line {}: expected key = value", n + 1)))?;
        let key = key.trim().replace('_', "-");
        map.insert(key, value.trim().to_string());
    }
    Ok(map)
}

impl Options {
    /// Fills every flag that was not given from the config file, if any.
    pub fn merged(mut self) -> Result<Options, CliError> {
        let Some(path) = self.config.clone() else {
            return Ok(self);
        };
        let text = std::fs::read_to_string(&path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        for (key, value) in parse_config_text(&text)? {
            let v = value.as_str();
            let k = key.as_str();
            match k {
                "p" => fill(&mut self.p, k, v)?,
                "v" => fill(&mut self.v, k, v)?,
                "delta" => fill(&mut self.delta, k, v)?,
                "mass" => fill(&mut self.mass, k, v)?,
                "mu" => fill(&mut self.mu, k, v)?,
                "dmom" => fill(&mut self.dmom, k, v)?,
                "bfield" => fill(&mut self.bfield, k, v)?,
                "efield" => fill(&mut self.efield, k, v)?,
                "units" => fill(&mut self.units, k, v)?,
                "out" => fill(&mut self.out, k, v)?,
                "format" => fill(&mut self.format, k, v)?,
                "figure" => fill(&mut self.figure, k, v)?,
                "observable" => {
                    if self.observable.is_empty() {
                        self.observable = v.split(',').map(|s| s.trim().to_string()).collect();
                    }
                }
                "t-max" => fill(&mut self.t_max, k, v)?,
                "samples" => fill(&mut self.samples, k, v)?,
                "modes" => fill(&mut self.modes, k, v)?,
                "seed" => fill(&mut self.seed, k, v)?,
                "sigma-p" => fill(&mut self.sigma_p, k, v)?,
                "window" => fill(&mut self.window, k, v)?,
                "points" => fill(&mut self.points, k, v)?,
                "v-max" => fill(&mut self.v_max, k, v)?,
                "packet" => fill(&mut self.packet, k, v)?,
                other => return Err(CliError::Validation(format!("unknown config key '{other}'"))),
            }
        }
        Ok(self)
    }
}

fn fill<T: std::str::FromStr>(slot: &mut Option<T>, key: &str, value: &str) -> Result<(), CliError> {
    if slot.is_none() {
        *slot = Some(parse_value(key, value)?);
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

/// Fully resolved run parameters, internally in natural units.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub particle: ParticleConfig,
    /// Momentum in `mc`, when given via `--p` or `--v`.
    pub p: Option<f64>,
    pub sigma_p: f64,
    pub n_modes: usize,
    pub mix: Mix,
    /// In `ħ/mc²`.
    pub t_max: Option<f64>,
    pub samples: Option<usize>,
    pub observables: Vec<Observable>,
    pub format: Option<Format>,
    pub figure: Option<Figure>,
    pub window: Window,
    pub points: usize,
    pub v_max: f64,
    pub packet: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

/// Velocity flag: `"0.6c"` is a fraction of c; a bare number is a fraction of
/// c in natural units and m/s in SI.
pub fn parse_velocity(text: &str, units: UnitSystem) -> Result<f64, CliError> {
    let t = text.trim();
    let (number, in_c) = match t.strip_suffix(['c', 'C']) {
        Some(rest) => (rest.trim(), true),
        None => (t, false),
    };
    let value: f64 = number
        .parse()
        .map_err(|_| CliError::Validation(format!("cannot parse velocity '{text}'")))?;
    Ok(if in_c || units == UnitSystem::Natural {
        value
    } else {
        value / zitter_core::config::SPEED_OF_LIGHT_SI
    })
}

fn positive(name: &str, value: f64) -> Result<f64, CliError> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(CliError::Validation(format!("{name} must be positive and finite, got {value}")))
    }
}

fn resolve_particle(o: &Options, units: UnitSystem) -> Result<ParticleConfig, CliError> {
    let dipole_given = o.mu.is_some() || o.dmom.is_some() || o.bfield.is_some() || o.efield.is_some();
    let mass = match (units, o.mass) {
        (UnitSystem::Natural, Some(m)) if m != 1.0 => {
            return Err(invalid("--mass must be 1 in natural units (mass is the unit)"));
        }
        (UnitSystem::Natural, _) => 1.0,
        (UnitSystem::Si, Some(m)) => positive("--mass", m)?,
        (UnitSystem::Si, None) => return Err(invalid("--mass is required with --units si")),
    };
    match (o.delta, dipole_given) {
        (Some(_), true) => Err(invalid("give either --delta or dipoles/fields (--mu, --dmom, --bfield, --efield), not both")),
        (Some(delta), false) => ParticleConfig::with_delta(units, mass, delta).map_err(invalid),
        (None, true) => ParticleConfig::from_dipoles(
            units,
            mass,
            o.mu.unwrap_or(0.0),
            o.dmom.unwrap_or(0.0),
            o.bfield.unwrap_or(0.0),
            o.efield.unwrap_or(0.0),
        )
        .map_err(invalid),
        (None, false) => match units {
            UnitSystem::Natural => ParticleConfig::natural(DEFAULT_DELTA).map_err(invalid),
            UnitSystem::Si => Err(invalid("give --delta or dipoles/fields with --units si")),
        },
    }
}

fn random_mix(seed: u64) -> Mix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    std::array::from_fn(|_| Complex64::from_polar(0.5, 2.0 * PI * rng.random::<f64>()))
}

impl RunConfig {
    pub fn from_options(o: Options) -> Result<RunConfig, CliError> {
        let o = o.merged()?;
        let units: UnitSystem = o.units.as_deref().unwrap_or("natural").parse().map_err(invalid)?;
        let particle = resolve_particle(&o, units)?;
        let scales = particle.scales();
        let p = match (o.p, o.v.as_deref()) {
            (Some(_), Some(_)) => return Err(invalid("give either --p or --v, not both")),
            (Some(p), None) if p.is_finite() => Some(p / scales.momentum),
            (Some(p), None) => return Err(invalid(format!("--p must be finite, got {p}"))),
            (None, Some(v)) => Some(momentum_from_velocity(parse_velocity(v, units)?).map_err(invalid)?.p),
            (None, None) => None,
        };
        let sigma_p = positive("--sigma-p", o.sigma_p.map(|s| s / scales.momentum).unwrap_or(DEFAULT_SIGMA_P))?;
        let t_max = o.t_max.map(|t| positive("--t-max", t).map(|t| t / scales.time)).transpose()?;
        let observables = if o.observable.is_empty() {
            Observable::ALL.to_vec()
        } else {
            o.observable
                .iter()
                .map(|s| s.parse::<Observable>().map_err(invalid))
                .collect::<Result<Vec<_>, _>>()?
        };
        let format = match o.format.as_deref().map(str::to_ascii_lowercase).as_deref() {
            None => None,
            Some("csv") => Some(Format::Csv),
            Some("json") => Some(Format::Json),
            Some(other) => return Err(invalid(format!("unknown format '{other}' (expected csv or json)"))),
        };
        let n_modes = o.modes.unwrap_or(1);
        if n_modes == 0 {
            return Err(invalid("--modes must be at least 1"));
        }
        let v_max = o.v_max.unwrap_or(0.99);
        if !(0.0..1.0).contains(&v_max) || v_max == 0.0 {
            return Err(invalid(format!("--v-max must lie in (0, 1), got {v_max}")));
        }
        let points = o.points.unwrap_or(100);
        if points < 2 {
            return Err(invalid("--points must be at least 2"));
        }
        Ok(RunConfig {
            particle,
            p,
            sigma_p,
            n_modes,
            mix: o.seed.map(random_mix).unwrap_or_else(four_way_mix),
            t_max,
            samples: o.samples,
            observables,
            format,
            figure: o.figure.as_deref().map(str::parse).transpose().map_err(invalid)?,
            window: o.window.as_deref().unwrap_or("hann").parse().map_err(invalid)?,
            points,
            v_max,
            packet: o.packet,
            out: o.out,
        })
    }

    fn scales(&self) -> Scales {
        self.particle.scales()
    }

    fn p0(&self) -> f64 {
        self.p.unwrap_or(DEFAULT_P0)
    }

    fn format_or(&self, default: Format) -> Format {
        self.format.unwrap_or(default)
    }

    fn wavepacket(&self) -> Result<Wavepacket, CliError> {
        match &self.packet {
            Some(path) => {
                let text = read(path)?;
                let wp = Wavepacket::from_json(&text).map_err(invalid)?;
                if wp.config() != &self.particle {
                    return Err(invalid("packet document was built for a different particle configuration"));
                }
                Ok(wp)
            }
            None => gaussian_packet(self.p0(), self.sigma_p, self.mix, self.n_modes, &self.particle).map_err(invalid),
        }
    }
}

pub fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

/// Result of a subcommand: the rendered output and whether it counts as success.
#[derive(Debug, Clone, PartialEq)]
pub struct Output {
    pub text: String,
    pub passed: bool,
}

impl Output {
    fn ok(text: String) -> Output {
        Output { text, passed: true }
    }
}

fn frequencies_in_units(f: &FrequencySet, cfg: &ParticleConfig) -> FrequencySet {
    let s = cfg.scales();
    FrequencySet {
        p: f.p * s.momentum,
        delta: f.delta * s.energy,
        ..f.scaled(s.angular_frequency)
    }
}

const FREQUENCY_HEADER: &str = "p,delta,omega_L,omega_zb1,omega_zb2,omega_zb3,omega_sb,omega_ob1,omega_ob2,omega_forbidden";

pub fn cmd_frequencies(run: &RunConfig) -> Result<Output, CliError> {
    let p = run.p.ok_or_else(|| invalid("frequencies needs --p or --v"))?;
    let f = frequencies_in_units(&frequency_set(p, &run.particle).map_err(invalid)?, &run.particle);
    let text = match run.format_or(Format::Csv) {
        Format::Csv => {
            let row = [
                f.p,
                f.delta,
                f.omega_l,
                f.omega_zb1,
                f.omega_zb2,
                f.omega_zb3,
                f.omega_sb,
                f.omega_ob1,
                f.omega_ob2,
                f.omega_forbidden,
            ]
            .map(format_sig)
            .join(",");
            format!("{FREQUENCY_HEADER}\n{row}\n")
        }
        Format::Json => serde_json::to_string_pretty(&f).expect("serializable") + "\n",
    };
    Ok(Output::ok(text))
}

pub fn cmd_sweep(run: &RunConfig) -> Result<Output, CliError> {
    let grid: Vec<f64> = match run.figure {
        Some(_) => zitter_core::spectrum::default_velocity_grid(),
        None => (0..run.points)
            .map(|k| run.v_max * k as f64 / (run.points - 1) as f64)
            .collect(),
    };
    let rows = sweep(&grid, &run.particle).map_err(invalid)?;
    let scale = run.scales().angular_frequency;
    let text = match run.format_or(Format::Csv) {
        Format::Csv => sweep_csv(&rows, run.figure, scale),
        Format::Json => {
            // same columns as the CSV, one object per row
            let csv = sweep_csv(&rows, run.figure, scale);
            let mut lines = csv.lines();
            let header: Vec<&str> = lines.next().unwrap_or("").split(',').collect();
            let objects: Vec<serde_json::Value> = lines
                .map(|line| {
                    let map = header
                        .iter()
                        .zip(line.split(','))
                        .map(|(k, v)| (k.to_string(), serde_json::json!(v.parse::<f64>().unwrap_or(f64::NAN))))
                        .collect::<serde_json::Map<_, _>>();
                    serde_json::Value::Object(map)
                })
                .collect();
            serde_json::to_string_pretty(&objects).expect("serializable") + "\n"
        }
    };
    Ok(Output::ok(text))
}

/// Default evolution window: 20 periods of the slowest nonzero tone.
fn default_t_max(f: &FrequencySet) -> f64 {
    let slowest = Tone::ALL
        .iter()
        .map(|&t| f.tone(t))
        .filter(|&w| w > 1e-9)
        .fold(f64::INFINITY, f64::min);
    20.0 * 2.0 * PI / slowest
}

fn value_scale(obs: Observable, s: &Scales) -> f64 {
    if obs.is_spin() {
        s.action
    } else if obs.is_position() {
        s.length
    } else {
        1.0
    }
}

pub fn cmd_evolve(run: &RunConfig) -> Result<Output, CliError> {
    let wp = run.wavepacket()?;
    let p0 = zitter_core::wavepacket::validate(&wp).mean_momentum;
    let f = frequency_set(p0, &run.particle).map_err(invalid)?;
    let t_max = run.t_max.unwrap_or_else(|| default_t_max(&f));
    let grid = TimeGrid::spanning(t_max, run.samples.unwrap_or(DEFAULT_SAMPLES)).map_err(invalid)?;
    let series: Vec<TimeSeries> = run
        .observables
        .iter()
        .map(|&o| expectation_series(&wp, o, &grid).map_err(invalid))
        .collect::<Result<_, _>>()?;
    let s = run.scales();
    let text = match run.format_or(Format::Csv) {
        Format::Csv => series_csv(&series, p0 * s.momentum, f.delta * s.energy, s.time, |ts| {
            value_scale(ts.observable, &s)
        }),
        Format::Json => {
            let scaled: Vec<TimeSeries> = series
                .iter()
                .map(|ts| {
                    let k = value_scale(ts.observable, &s);
                    TimeSeries {
                        times: ts.times.iter().map(|t| t * s.time).collect(),
                        values: ts.values.iter().map(|v| v * k).collect(),
                        observable: ts.observable,
                    }
                })
                .collect();
            serde_json::to_string_pretty(&scaled).expect("serializable") + "\n"
        }
    };
    Ok(Output::ok(text))
}

pub fn verify_config(run: &RunConfig) -> VerifyConfig {
    let defaults = VerifyConfig::default();
    VerifyConfig {
        particle: run.particle,
        p0: run.p0(),
        sigma_p: run.sigma_p,
        n_modes: run.n_modes,
        mix: run.mix,
        samples: run.samples.unwrap_or(defaults.samples),
        t_max: run.t_max,
        window: run.window,
        observables: run.observables.clone(),
        ..defaults
    }
}

/// JSON report (natural units); `passed` is false when any check fails.
pub fn cmd_verify(run: &RunConfig) -> Result<Output, CliError> {
    if run.format == Some(Format::Csv) {
        return Err(invalid("verify writes JSON only"));
    }
    if run.packet.is_some() {
        return Err(invalid("verify builds its own Gaussian packet; --packet is not accepted"));
    }
    let report = verify::run(&verify_config(run)).map_err(invalid)?;
    Ok(Output {
        text: report.to_json() + "\n",
        passed: report.passed,
    })
}

pub fn cmd_packet(run: &RunConfig) -> Result<Output, CliError> {
    if run.format == Some(Format::Csv) {
        return Err(invalid("packet writes JSON only"));
    }
    Ok(Output::ok(run.wavepacket()?.to_json() + "\n"))
}

type CommandFn = fn(&RunConfig) -> Result<Output, CliError>;

/// Parses, dispatches and returns the output plus the target path.
pub fn execute(cli: Cli) -> Result<(Output, Option<PathBuf>), CliError> {
    let (opts, cmd): (Options, CommandFn) = match cli.command {
        Command::Frequencies(o) => (o, cmd_frequencies),
        Command::Sweep(o) => (o, cmd_sweep),
        Command::Evolve(o) => (o, cmd_evolve),
        Command::Verify(o) => (o, cmd_verify),
        Command::Packet(o) => (o, cmd_packet),
    };
    let run = RunConfig::from_options(opts)?;
    let out = cmd(&run)?;
    Ok((out, run.out))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(args: &[&str]) -> Result<Output, CliError> {
        let mut argv = vec!["zitter"];
        argv.extend_from_slice(args);
        execute(Cli::try_parse_from(argv).unwrap()).map(|(o, _)| o)
    }

    #[test]
    fn rest_frame_row() {
        let out = run(&["frequencies", "--p", "0", "--delta", "0.4"]).unwrap();
        let row = out.text.lines().nth(1).unwrap();
        assert_eq!(row, "0,0.4,0.8,2.8,2,1.2,1.2,1.6,1.2,2");
    }

    #[test]
    fn degenerate_row() {
        let out = run(&["frequencies", "--p", "0", "--delta", "0"]).unwrap();
        assert_eq!(out.text.lines().nth(1).unwrap(), "0,0,0,2,2,2,2,0,2,2");
    }

    #[test]
    fn velocity_flag() {
        let a = run(&["frequencies", "--v", "0.6c", "--delta", "0.4"]).unwrap();
        let b = run(&["frequencies", "--p", "0.75", "--delta", "0.4"]).unwrap();
        assert_eq!(a, b);
        assert_eq!(parse_velocity("0.6", UnitSystem::Natural).unwrap(), 0.6);
        let si = parse_velocity("149896229", UnitSystem::Si).unwrap();
        assert!((si - 0.5).abs() < 1e-15);
    }

    #[test]
    fn exactly_one_splitting_source() {
        let e = run(&["frequencies", "--p", "0", "--delta", "0.4", "--mu", "1"]).unwrap_err();
        assert_eq!(e.exit_code(), 1);
        let dip = run(&["frequencies", "--p", "0", "--mu", "-0.2", "--bfield", "2"]).unwrap();
        assert_eq!(dip, run(&["frequencies", "--p", "0", "--delta", "0.4"]).unwrap());
        assert!(run(&["frequencies", "--p", "0", "--delta", "1.2"]).is_err());
        assert!(run(&["frequencies", "--p", "0", "--units", "si", "--delta", "1e-20"]).is_err());
    }

    #[test]
    fn si_units_scale_frequencies() {
        let mass = 1.674_927_498_04e-27;
        let rest = mass * zitter_core::config::SPEED_OF_LIGHT_SI.powi(2);
        let m = format!("{mass:e}");
        let d = format!("{:e}", 0.4 * rest);
        let out = run(&["frequencies", "--units", "si", "--mass", &m, "--delta", &d, "--v", "0c", "--format", "json"]).unwrap();
        let f: serde_json::Value = serde_json::from_str(&out.text).unwrap();
        let w = rest / zitter_core::config::HBAR_SI;
        assert!((f["omega_zb1"].as_f64().unwrap() / w - 2.8).abs() < 1e-12);
    }

    #[test]
    fn sweep_figures() {
        let out = run(&["sweep", "--figure", "fig2"]).unwrap();
        assert!(out.text.starts_with("v,omega_zb2,omega_L,omega_sb\n"));
        assert_eq!(out.text.lines().count(), 101);
        assert!(run(&["sweep", "--figure", "fig9"]).is_err());
        let custom = run(&["sweep", "--points", "3", "--v-max", "0.5", "--format", "json"]).unwrap();
        let rows: Vec<serde_json::Value> = serde_json::from_str(&custom.text).unwrap();
        assert_eq!(rows.len(), 3);
        assert_eq!(rows[2]["v"].as_f64(), Some(0.5));
    }

    #[test]
    fn evolve_csv_contract() {
        let out = run(&["evolve", "--observable", "S_y,r_x", "--samples", "8", "--t-max", "1"]).unwrap();
        let mut lines = out.text.lines();
        assert_eq!(lines.next(), Some("t,value,observable,p0,delta"));
        let first = lines.next().unwrap();
        assert!(first.starts_with("0,") && first.ends_with(",S_y,0.5,0.4"), "{first}");
        assert_eq!(out.text.lines().count(), 17);
        assert!(run(&["evolve", "--observable", "S_w"]).is_err());
    }

    #[test]
    fn config_file_and_flag_precedence() {
        let text = "# test\ndelta = 0.3\np=0.2 # inline\nformat = json\n";
        let map = parse_config_text(text).unwrap();
        assert_eq!(map["delta"], "0.3");
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        std::fs::write(&path, text).unwrap();
        let p = path.to_str().unwrap();
        let from_file = run(&["frequencies", "--config", p]).unwrap();
        let f: serde_json::Value = serde_json::from_str(&from_file.text).unwrap();
        assert_eq!(f["delta"].as_f64(), Some(0.3));
        let flag_wins = run(&["frequencies", "--config", p, "--delta", "0.4"]).unwrap();
        let f: serde_json::Value = serde_json::from_str(&flag_wins.text).unwrap();
        assert_eq!(f["delta"].as_f64(), Some(0.4));
        std::fs::write(&path, "colour = red\n").unwrap();
        assert!(run(&["frequencies", "--config", p]).is_err());
        let missing = run(&["frequencies", "--config", "/nonexistent/zz.cfg"]).unwrap_err();
        assert_eq!(missing.exit_code(), 3);
    }

    #[test]
    fn seeded_mix_is_reproducible() {
        assert_eq!(random_mix(7), random_mix(7));
        assert_ne!(random_mix(7), random_mix(8));
        for z in random_mix(3) {
            assert!((z.norm() - 0.5).abs() < 1e-15);
        }
    }
}
