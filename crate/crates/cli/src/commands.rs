use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use nalgebra::Vector3;
use nearfield_core::geometry::{
    rotation_from_euler, sample_pose_in, synth as synth_channel, ArraySpec, Pose,
};
use nearfield_core::mle::{landscape_scan, write_landscape_csv, MleConfig};
use nearfield_core::ppe::{estimate_on_sublattice, reconstruct};
use nearfield_core::presets;
use nearfield_core::sim::{
    add_noise, crb_asymptote, per_entry_mse, pilot_subsample, run_mse_sweep,
    run_trajectory_experiment, text_digest, trial_rng, ExperimentConfig,
};
use nearfield_core::{ppe, to_db, DegreeSet, PolyPhaseModel};

use crate::channel_io::{read_channel, write_channel};
use crate::config::{amplitude_name, ConfigFile, Settings};
use crate::{CliError, CommonArgs, EstimateArgs, SCHEMA_VERSION};

/// What was asked for, echoed into every sidecar.
#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub subcommand: &'static str,
    pub config: Option<PathBuf>,
    pub out: PathBuf,
    pub seed: Option<u64>,
    pub preset: String,
    pub full: bool,
}

impl RunManifest {
    fn new(subcommand: &'static str, args: &CommonArgs, preset: &str) -> Self {
        Self {
            subcommand,
            config: args.config.clone(),
            out: args.out.clone(),
            seed: args.seed,
            preset: preset.to_string(),
            full: args.full,
        }
    }
}

fn resolve(
    subcommand: &'static str,
    default_preset: &str,
    args: &CommonArgs,
) -> Result<(RunManifest, Settings), CliError> {
    if !args.out.is_dir() {
        return Err(CliError::Io(format!(
            "output directory {} does not exist",
            args.out.display()
        )));
    }
    let name = args.preset.as_deref().unwrap_or(default_preset);
    let preset = presets::find(name).ok_or_else(|| {
        CliError::Config(format!(
            "unknown preset {name:?}; available: {}",
            presets::names().join(", ")
        ))
    })?;
    let mut settings = Settings::from_preset(&preset, args.full);
    if let Some(path) = &args.config {
        settings.apply(&ConfigFile::load(path)?)?;
    }
    if let Some(seed) = args.seed {
        settings.seed = seed;
    }
    if let Some(trials) = args.trials {
        settings.trials = trials;
    }
    if let Some(starts) = args.starts {
        settings.starts = starts;
    }
    Ok((RunManifest::new(subcommand, args, name), settings))
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Io(format!("creating {}: {e}", path.display())))
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |e| CliError::Io(format!("writing {}: {e}", path.display()))
}

fn spec_lines(spec: &ArraySpec) -> String {
    format!(
        "tx = {}x{}\nrx = {}x{}\nnf = {}\ndf = {}\nfc_hz = {}\nspacing_tx_m = {} {}\nspacing_rx_m = {} {}\n",
        spec.ntx, spec.nty, spec.nrx, spec.nry, spec.nf, spec.df, spec.fc, spec.dtx, spec.dty, spec.drx, spec.dry
    )
}

/// Writes `<path>.meta.txt` with the manifest, resolved settings and `extra`.
fn write_sidecar(
    path: &Path,
    manifest: &RunManifest,
    settings: &Settings,
    extra: &str,
) -> Result<(), CliError> {
    let mut meta = PathBuf::from(path);
    meta.set_extension("meta.txt");
    let mut text = String::new();
    let _ = writeln!(text, "schema_version = {SCHEMA_VERSION}");
    let _ = writeln!(text, "command = {}", manifest.subcommand);
    let _ = writeln!(text, "preset = {}", manifest.preset);
    let _ = writeln!(text, "full = {}", manifest.full);
    let _ = writeln!(
        text,
        "config = {}",
        manifest
            .config
            .as_ref()
            .map_or("-".into(), |p| p.display().to_string())
    );
    let _ = writeln!(text, "seed = {}", settings.seed);
    text.push_str(&spec_lines(&settings.spec));
    let _ = writeln!(text, "amplitude = {}", amplitude_name(settings.amplitude));
    let _ = writeln!(
        text,
        "settings_digest = {}",
        text_digest(&format!("{settings:?}"))
    );
    text.push_str(extra);
    std::fs::write(&meta, text).map_err(io_err(&meta))
}

fn pose_of(settings: &Settings) -> Result<Pose, CliError> {
    if settings.random_pose {
        let mut rng = trial_rng(settings.seed, 0);
        return Ok(sample_pose_in(&mut rng, &settings.shell));
    }
    let [x, y, z] = settings.position;
    let [ex, ey, ez] = settings.euler;
    Ok(Pose::new(
        Vector3::new(x, y, z),
        rotation_from_euler(ex, ey, ez),
    )?)
}

fn pose_lines(pose: &Pose) -> String {
    let t = pose.translation;
    let r = pose.rotation;
    format!(
        "translation_m = {} {} {}\nrotation = {} {} {} / {} {} {} / {} {} {}\n",
        t.x,
        t.y,
        t.z,
        r[(0, 0)],
        r[(0, 1)],
        r[(0, 2)],
        r[(1, 0)],
        r[(1, 1)],
        r[(1, 2)],
        r[(2, 0)],
        r[(2, 1)],
        r[(2, 2)]
    )
}

pub fn synth(args: &CommonArgs) -> Result<(), CliError> {
    let (manifest, settings) = resolve("synth", "ula32-single", args)?;
    let pose = pose_of(&settings)?;
    let h = synth_channel(&settings.spec, &pose, settings.amplitude);
    let path = args.out.join("channel.bin");
    write_channel(&path, &h)?;
    let extra = format!(
        "{}layout = u64 le shape (n_rx, n_ry, n_tx, n_ty, n_f), then f64 le (re, im) row-major\n",
        pose_lines(&pose)
    );
    write_sidecar(&path, &manifest, &settings, &extra)
}

pub fn estimate(args: &EstimateArgs) -> Result<(), CliError> {
    let (manifest, mut settings) = resolve("estimate", "ula32-single", &args.common)?;
    if let Some(l) = args.degree {
        settings.degree = l;
    }
    let mut extra = String::new();
    let (y, truth) = match &args.input {
        Some(path) => {
            let _ = writeln!(extra, "input = {}", path.display());
            (read_channel(path)?, None)
        }
        None => {
            let pose = pose_of(&settings)?;
            let h = synth_channel(&settings.spec, &pose, settings.amplitude);
            let mut rng = trial_rng(settings.seed, 1);
            let y = add_noise(&h, settings.snr_db, &mut rng);
            extra.push_str(&pose_lines(&pose));
            let _ = writeln!(extra, "snr_db = {}", settings.snr_db);
            (y, Some(h))
        }
    };
    let model: PolyPhaseModel = if settings.pilots {
        if y.shape() != settings.spec.shape() {
            return Err(CliError::Config(format!(
                "pilot estimation needs the configured array shape {:?}, input is {:?}",
                settings.spec.shape(),
                y.shape()
            )));
        }
        let (sub, obs) = pilot_subsample(&y, &settings.spec, settings.degree)?;
        let _ = writeln!(extra, "pilots = {}", obs.len());
        estimate_on_sublattice(&obs, &sub, settings.degree)?
    } else {
        ppe::estimate(&y, &DegreeSet::for_shape(settings.degree, y.shape())?)?
    };
    let estimate = reconstruct(&model);
    let _ = writeln!(extra, "degree = {}", settings.degree);
    let _ = writeln!(extra, "coefficients = {}", model.degrees().len());
    if let Some(h) = &truth {
        let mse = per_entry_mse(&estimate, h)?;
        let _ = writeln!(extra, "mse_db = {:.6}", to_db(mse));
        let _ = writeln!(
            extra,
            "crb_db = {:.6}",
            crb_asymptote(model.degrees().len(), h.len(), settings.snr_db)
        );
    }

    let coeff_path = args.common.out.join("coefficients.csv");
    let mut out = create(&coeff_path)?;
    let err = io_err(&coeff_path);
    writeln!(out, "m_rx,m_ry,m_tx,m_ty,m_f,coefficient").map_err(&err)?;
    for (m, a) in model.terms() {
        writeln!(out, "{},{},{},{},{},{a:.17e}", m[0], m[1], m[2], m[3], m[4]).map_err(&err)?;
    }
    out.flush().map_err(&err)?;
    write_channel(&args.common.out.join("estimate.bin"), &estimate)?;
    write_sidecar(&coeff_path, &manifest, &settings, &extra)
}

pub fn mse(args: &CommonArgs) -> Result<(), CliError> {
    let (manifest, settings) = resolve("mse", "fig5a", args)?;
    if settings.trials < 2 {
        eprintln!(
            "warning: {} trial(s); MSE estimates will have high variance",
            settings.trials
        );
    }
    let config = ExperimentConfig {
        spec: settings.spec,
        snr_grid_db: settings.snr_grid.clone(),
        degrees: settings.degrees.clone(),
        trials: settings.trials,
        amplitude: settings.amplitude,
        shell: settings.shell,
        seed: settings.seed,
    };
    let report = run_mse_sweep(&config)?;
    let mse_path = args.out.join("mse.csv");
    let mut out = create(&mse_path)?;
    report.write_mse_csv(&mut out).map_err(io_err(&mse_path))?;
    out.flush().map_err(io_err(&mse_path))?;
    let crb_path = args.out.join("crb.csv");
    let mut out = create(&crb_path)?;
    report.write_crb_csv(&mut out).map_err(io_err(&crb_path))?;
    out.flush().map_err(io_err(&crb_path))?;

    let mut extra = String::new();
    let _ = writeln!(extra, "trials = {}", report.trials);
    let _ = writeln!(extra, "config_hash = {}", report.config_hash);
    let _ = writeln!(
        extra,
        "shell_m = {} {}",
        config.shell.rmin, config.shell.rmax
    );
    for (l, m) in report.degrees.iter().zip(&report.parameter_counts) {
        let _ = writeln!(extra, "parameters_L{l} = {m}");
    }
    let slips = report.cycle_slip_cells();
    let _ = writeln!(
        extra,
        "cycle_slip_cells = {}",
        if slips.is_empty() {
            "none".to_string()
        } else {
            slips
                .iter()
                .map(|(snr, l)| format!("snr{snr}/L{l}"))
                .collect::<Vec<_>>()
                .join(" ")
        }
    );
    write_sidecar(&mse_path, &manifest, &settings, &extra)
}

pub fn mle(args: &CommonArgs) -> Result<(), CliError> {
    let (manifest, settings) = resolve("mle", "fig3a", args)?;
    let config = MleConfig {
        cost_variant: settings.cost,
        learning_rate: settings.learning_rate,
        iterations: settings.iterations,
        num_starts: settings.starts,
        init_shell: settings.shell,
        genie_init: None,
        fd_step: settings.fd_step,
        ..MleConfig::default()
    };
    let outcome =
        run_trajectory_experiment(&settings.spec, &config, settings.snr_db, settings.seed)?;
    let path = args.out.join("trajectories.csv");
    let mut out = create(&path)?;
    outcome.write_csv(&mut out).map_err(io_err(&path))?;
    out.flush().map_err(io_err(&path))?;

    let mut extra = String::new();
    let _ = writeln!(extra, "snr_db = {}", settings.snr_db);
    let _ = writeln!(extra, "cost = {}", settings.cost.name());
    let _ = writeln!(extra, "iterations = {}", settings.iterations);
    let _ = writeln!(extra, "starts = {}", settings.starts);
    let _ = writeln!(extra, "learning_rate = {}", settings.learning_rate);
    let _ = writeln!(
        extra,
        "columns = Best_k is the start with the k-th lowest final cost"
    );
    if let Some(g) = &outcome.genie {
        let _ = writeln!(extra, "genie_final_db = {:.6}", g.final_cost_db());
    }
    let _ = writeln!(
        extra,
        "converged_fraction = {:.6}",
        outcome.converged_fraction()
    );
    if let Some(best) = outcome.best_pose() {
        extra.push_str(
            &pose_lines(&best)
                .replace("translation_m", "best_translation_m")
                .replace("rotation", "best_rotation"),
        );
    }
    write_sidecar(&path, &manifest, &settings, &extra)
}

pub fn landscape(args: &CommonArgs) -> Result<(), CliError> {
    let (manifest, settings) = resolve("landscape", "fig9", args)?;
    let points = landscape_scan(
        &settings.spec,
        settings.amplitude,
        settings.true_distance,
        settings.range,
        settings.step,
    )?;
    let path = args.out.join("landscape.csv");
    let mut out = create(&path)?;
    write_landscape_csv(&points, &mut out).map_err(io_err(&path))?;
    out.flush().map_err(io_err(&path))?;
    let extra = format!(
        "true_distance_m = {}\nrange_m = {} {}\nstep_m = {}\nvalues = square roots of the summed objectives, not normalized\n",
        settings.true_distance, settings.range.0, settings.range.1, settings.step
    );
    write_sidecar(&path, &manifest, &settings, &extra)
}
