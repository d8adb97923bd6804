//! Run settings: preset defaults, overridden by a flat TOML file, overridden
//! by command-line flags.
//!
//! Recognized keys (all optional):
//!
//! ```toml
//! ntx = 32            # array sizes; nty, nrx, nry likewise
//! nf = 1              # number of frequencies
//! df = 5e-4           # fractional frequency step
//! fc = 30e9           # carrier, Hz
//! spacing = 0.005     # all four spacings at once; dtx, dty, drx, dry individually
//! amplitude = "unit"  # or "exact"
//! x = 0.0             # receive-array centre, m; y, z likewise
//! euler_x = 0.0       # receive-array rotation, rad; euler_y, euler_z likewise
//! random_pose = false # draw the pose from the shell instead
//! rmin = 5.0          # shell for random poses
//! rmax = 15.0
//! shell_measure = "volume"  # or "radius"
//! seed = 1
//! snr_db = 20.0       # estimate and mle
//! snr_grid = [0.0, 10.0, 20.0]  # mse
//! degrees = [1, 2, 3] # mse
//! degree = 2          # estimate
//! pilots = false      # estimate from the pilot sublattice only
//! trials = 100
//! cost = "complex_beta"  # plain, complex_beta, unit_beta
//! learning_rate = 0.01
//! iterations = 500
//! starts = 128
//! fd_step = 1e-6
//! true_distance = 5.0 # landscape
//! range_lo = 4.6
//! range_hi = 5.4
//! step = 5e-4
//! ```

use std::path::Path;

use serde::Deserialize;

use nearfield_core::geometry::{AmplitudeMode, ArraySpec, ShellMeasure};
use nearfield_core::mle::CostVariant;
use nearfield_core::presets::{self, Preset, CARRIER_HZ};
use nearfield_core::Shell;

use crate::CliError;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub ntx: Option<usize>,
    pub nty: Option<usize>,
    pub nrx: Option<usize>,
    pub nry: Option<usize>,
    pub nf: Option<usize>,
    pub df: Option<f64>,
    pub fc: Option<f64>,
    pub spacing: Option<f64>,
    pub dtx: Option<f64>,
    pub dty: Option<f64>,
    pub drx: Option<f64>,
    pub dry: Option<f64>,
    pub amplitude: Option<String>,
    pub x: Option<f64>,
    pub y: Option<f64>,
    pub z: Option<f64>,
    pub euler_x: Option<f64>,
    pub euler_y: Option<f64>,
    pub euler_z: Option<f64>,
    pub random_pose: Option<bool>,
    pub rmin: Option<f64>,
    pub rmax: Option<f64>,
    pub shell_measure: Option<String>,
    pub seed: Option<u64>,
    pub snr_db: Option<f64>,
    pub snr_grid: Option<Vec<f64>>,
    pub degrees: Option<Vec<usize>>,
    pub degree: Option<usize>,
    pub pilots: Option<bool>,
    pub trials: Option<usize>,
    pub cost: Option<String>,
    pub learning_rate: Option<f64>,
    pub iterations: Option<usize>,
    pub starts: Option<usize>,
    pub fd_step: Option<f64>,
    pub true_distance: Option<f64>,
    pub range_lo: Option<f64>,
    pub range_hi: Option<f64>,
    pub step: Option<f64>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("reading {}: {e}", path.display())))?;
        Self::parse(&text)
    }
}

/// Every knob any subcommand reads.
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub spec: ArraySpec,
    pub amplitude: AmplitudeMode,
    pub position: [f64; 3],
    pub euler: [f64; 3],
    pub random_pose: bool,
    pub shell: Shell,
    pub seed: u64,
    pub snr_db: f64,
    pub snr_grid: Vec<f64>,
    pub degrees: Vec<usize>,
    pub degree: usize,
    pub pilots: bool,
    pub trials: usize,
    pub cost: CostVariant,
    pub learning_rate: f64,
    pub iterations: usize,
    pub starts: usize,
    pub fd_step: f64,
    pub true_distance: f64,
    pub range: (f64, f64),
    pub step: f64,
}

impl Default for Settings {
    fn default() -> Self {
        let mle = nearfield_core::mle::MleConfig::default();
        Self {
            spec: ArraySpec::half_wavelength((32, 1), (1, 1), 1, 0.0, CARRIER_HZ),
            amplitude: AmplitudeMode::Unit,
            position: [0.0, 0.0, 10.0],
            euler: [0.0; 3],
            random_pose: false,
            shell: Shell::default(),
            seed: 1,
            snr_db: 20.0,
            snr_grid: presets::default_snr_grid(),
            degrees: vec![1, 2, 3],
            degree: 2,
            pilots: false,
            trials: 100,
            cost: mle.cost_variant,
            learning_rate: mle.learning_rate,
            iterations: mle.iterations,
            starts: mle.num_starts,
            fd_step: mle.fd_step,
            true_distance: 5.0,
            range: (4.6, 5.4),
            step: 5e-4,
        }
    }
}

impl Settings {
    /// Defaults with a preset applied.
    pub fn from_preset(preset: &Preset, full: bool) -> Self {
        let mut s = Self::default();
        match preset {
            Preset::Synth(p) => {
                s.spec = p.spec;
                s.amplitude = p.amplitude;
            }
            Preset::Sweep(p) => {
                let c = p.config(full, s.seed);
                s.spec = c.spec;
                s.amplitude = c.amplitude;
                s.snr_grid = c.snr_grid_db;
                s.degrees = c.degrees;
                s.trials = c.trials;
                s.shell = c.shell;
            }
            Preset::Trajectory(p) => {
                s.spec = p.spec(full);
                s.amplitude = AmplitudeMode::Exact;
                s.starts = p.config(full).num_starts;
                s.snr_db = p.snr_db;
            }
            Preset::Landscape(p) => {
                s.spec = p.spec;
                s.amplitude = p.amplitude;
                s.true_distance = p.true_distance;
                s.range = p.range;
                s.step = p.step;
            }
        }
        s
    }

    pub fn apply(&mut self, file: &ConfigFile) -> Result<(), CliError> {
        let spec = &mut self.spec;
        macro_rules! set {
            ($dst:expr, $src:expr) => {
                if let Some(v) = $src.clone() {
                    $dst = v;
                }
            };
        }
        set!(spec.ntx, file.ntx);
        set!(spec.nty, file.nty);
        set!(spec.nrx, file.nrx);
        set!(spec.nry, file.nry);
        set!(spec.nf, file.nf);
        set!(spec.df, file.df);
        if let Some(fc) = file.fc {
            // Spacings follow the carrier unless given explicitly.
            let d = nearfield_core::geometry::SPEED_OF_LIGHT / fc / 2.0;
            spec.fc = fc;
            (spec.dtx, spec.dty, spec.drx, spec.dry) = (d, d, d, d);
        }
        if let Some(d) = file.spacing {
            (spec.dtx, spec.dty, spec.drx, spec.dry) = (d, d, d, d);
        }
        set!(spec.dtx, file.dtx);
        set!(spec.dty, file.dty);
        set!(spec.drx, file.drx);
        set!(spec.dry, file.dry);
        if spec.nf > 1 && file.df.is_none() && spec.df == 0.0 {
            spec.df = presets::MULTI_FREQUENCY_DF;
        }
        if let Some(a) = &file.amplitude {
            self.amplitude = parse_amplitude(a)?;
        }
        set!(self.position[0], file.x);
        set!(self.position[1], file.y);
        set!(self.position[2], file.z);
        set!(self.euler[0], file.euler_x);
        set!(self.euler[1], file.euler_y);
        set!(self.euler[2], file.euler_z);
        set!(self.random_pose, file.random_pose);
        set!(self.shell.rmin, file.rmin);
        set!(self.shell.rmax, file.rmax);
        if let Some(m) = &file.shell_measure {
            self.shell.measure = match m.as_str() {
                "volume" => ShellMeasure::Volume,
                "radius" => ShellMeasure::Radius,
                other => return Err(CliError::Config(format!("unknown shell_measure {other:?}"))),
            };
        }
        set!(self.seed, file.seed);
        set!(self.snr_db, file.snr_db);
        set!(self.snr_grid, file.snr_grid);
        set!(self.degrees, file.degrees);
        set!(self.degree, file.degree);
        set!(self.pilots, file.pilots);
        set!(self.trials, file.trials);
        if let Some(c) = &file.cost {
            self.cost = CostVariant::parse(c)?;
        }
        set!(self.learning_rate, file.learning_rate);
        set!(self.iterations, file.iterations);
        set!(self.starts, file.starts);
        set!(self.fd_step, file.fd_step);
        set!(self.true_distance, file.true_distance);
        set!(self.range.0, file.range_lo);
        set!(self.range.1, file.range_hi);
        set!(self.step, file.step);
        self.spec.validate()?;
        self.shell.validate()?;
        Ok(())
    }
}

pub fn parse_amplitude(s: &str) -> Result<AmplitudeMode, CliError> {
    match s {
        "unit" => Ok(AmplitudeMode::Unit),
        "exact" => Ok(AmplitudeMode::Exact),
        other => Err(CliError::Config(format!(
            "unknown amplitude {other:?} (unit, exact)"
        ))),
    }
}

pub fn amplitude_name(a: AmplitudeMode) -> &'static str {
    match a {
        AmplitudeMode::Unit => "unit",
        AmplitudeMode::Exact => "exact",
    }
}
