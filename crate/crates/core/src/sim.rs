//! Monte Carlo drivers: noisy observations, MSE and CRB figures, the
//! multi-start MLE experiment and pilot subsampling.

use std::fmt::Write as _;
use std::io::Write;

use nalgebra::Vector3;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::geometry::{sample_pose_in, synth, AmplitudeMode, ArraySpec, Pose, Shell};
use crate::lattice::{ChannelTensor, RANK};
use crate::mle::{optimize, ChannelModel, MleConfig, MleOutcome};
use crate::ppe::{estimate, reconstruct, Sublattice};
use crate::wavefront::DegreeSet;
use crate::{from_db, to_db, Error, Result};

/// `y = h + w` with `w` circularly-symmetric Gaussian of variance `1/SNR`.
pub fn add_noise<R: Rng + ?Sized>(h: &ChannelTensor, snr_db: f64, rng: &mut R) -> ChannelTensor {
    let sigma = (0.5 / from_db(snr_db)).sqrt();
    let mut y = h.clone();
    for v in y.values_mut() {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        *v += Complex64::new(re, im) * sigma;
    }
    y
}

/// `(1/|N|)·Σ|ĥ − h|²`.
pub fn per_entry_mse(h_hat: &ChannelTensor, h: &ChannelTensor) -> Result<f64> {
    crate::mle::cost_plain(h_hat, h)
}

/// `10·log10(M / (2·N·SNR))` in dB.
pub fn crb_asymptote(params: usize, samples: usize, snr_db: f64) -> f64 {
    to_db(params as f64 / (2.0 * samples as f64 * from_db(snr_db)))
}

/// Hex-encoded SHA-256 of `text`.
pub fn text_digest(text: &str) -> String {
    Sha256::digest(text.as_bytes())
        .iter()
        .fold(String::new(), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
}

/// Per-trial generator: stream `trial` of a ChaCha8 keyed by `seed`.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub spec: ArraySpec,
    pub snr_grid_db: Vec<f64>,
    /// Model degrees `L`, one MSE column each.
    pub degrees: Vec<usize>,
    pub trials: usize,
    pub amplitude: AmplitudeMode,
    pub shell: Shell,
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.spec.validate()?;
        self.shell.validate()?;
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if let Some(bad) = self.snr_grid_db.iter().find(|s| !s.is_finite()) {
            return Err(Error::Config(format!("non-finite SNR {bad}")));
        }
        for &l in &self.degrees {
            DegreeSet::build(l, &self.spec)?;
        }
        Ok(())
    }

    /// Digest of the configuration's canonical text.
    pub fn hash(&self) -> String {
        text_digest(&format!("{self:?}"))
    }
}

/// One SNR row of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub snr_db: f64,
    /// Mean per-entry MSE in dB, one per configured degree.
    pub mse_db: Vec<f64>,
    /// CRB asymptote in dB with `M = |𝓜|`, one per configured degree.
    pub crb_db: Vec<f64>,
    /// Per-entry MSE of the raw observation.
    pub ls_db: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub degrees: Vec<usize>,
    /// `|𝓜|` for each degree.
    pub parameter_counts: Vec<usize>,
    pub rows: Vec<ReportRow>,
    pub seed: u64,
    pub trials: usize,
    pub config_hash: String,
}

/// Cells whose MSE exceeds ten times the CRB at high SNR suggest phase
/// wrapping beyond the estimator's unambiguous range.
pub const SLIP_SNR_DB: f64 = 20.0;
pub const SLIP_FACTOR_DB: f64 = 10.0;

impl ExperimentReport {
    /// `(snr_db, L)` cells flagged as probable cycle slips.
    pub fn cycle_slip_cells(&self) -> Vec<(f64, usize)> {
        let mut out = Vec::new();
        for row in &self.rows {
            if row.snr_db < SLIP_SNR_DB {
                continue;
            }
            for (i, &l) in self.degrees.iter().enumerate() {
                if row.mse_db[i] > row.crb_db[i] + SLIP_FACTOR_DB {
                    out.push((row.snr_db, l));
                }
            }
        }
        out
    }

    /// `snr_db,mse_db_<L>...`, one column per configured degree.
    pub fn write_mse_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let mut header = String::from("snr_db");
        for l in &self.degrees {
            header.push_str(&format!(",mse_db_{l}"));
        }
        writeln!(out, "{header}")?;
        for row in &self.rows {
            let mut line = format!("{}", row.snr_db);
            for v in &row.mse_db {
                line.push_str(&format!(",{v:.6}"));
            }
            writeln!(out, "{line}")?;
        }
        Ok(())
    }

    /// `snr_db,crb_db_<L>...,ls_db`.
    pub fn write_crb_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let mut header = String::from("snr_db");
        for l in &self.degrees {
            header.push_str(&format!(",crb_db_{l}"));
        }
        header.push_str(",ls_db");
        writeln!(out, "{header}")?;
        for row in &self.rows {
            let mut line = format!("{}", row.snr_db);
            for v in &row.crb_db {
                line.push_str(&format!(",{v:.6}"));
            }
            line.push_str(&format!(",{:.6}", row.ls_db));
            writeln!(out, "{line}")?;
        }
        Ok(())
    }
}

/// Runs the MSE sweep.
///
/// Every trial draws a pose from the shell, synthesizes the channel and, for
/// each SNR, one noise realization shared by all degrees. Trial results are
/// gathered in trial order and summed sequentially, so the report does not
/// depend on thread scheduling.
pub fn run_mse_sweep(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let sets: Vec<DegreeSet> = config
        .degrees
        .iter()
        .map(|&l| DegreeSet::build(l, &config.spec))
        .collect::<Result<_>>()?;
    let n_snr = config.snr_grid_db.len();
    let width = sets.len() + 1;
    let per_trial: Vec<Vec<f64>> = (0..config.trials as u64)
        .into_par_iter()
        .map(|trial| {
            let mut rng = trial_rng(config.seed, trial);
            let pose = sample_pose_in(&mut rng, &config.shell);
            let h = synth(&config.spec, &pose, config.amplitude);
            let mut cells = vec![0.0; n_snr * width];
            for (s, &snr) in config.snr_grid_db.iter().enumerate() {
                let y = add_noise(&h, snr, &mut rng);
                cells[s * width] = per_entry_mse(&y, &h)?;
                for (k, set) in sets.iter().enumerate() {
                    let model = estimate(&y, set)?;
                    cells[s * width + k + 1] = per_entry_mse(&reconstruct(&model), &h)?;
                }
            }
            Ok(cells)
        })
        .collect::<Result<_>>()?;
    let mut totals = vec![0.0; n_snr * width];
    for cells in &per_trial {
        for (t, c) in totals.iter_mut().zip(cells) {
            *t += c;
        }
    }
    let trials = config.trials as f64;
    let samples = config.spec.len();
    let rows = config
        .snr_grid_db
        .iter()
        .enumerate()
        .map(|(s, &snr)| ReportRow {
            snr_db: snr,
            ls_db: to_db(totals[s * width] / trials),
            mse_db: (0..sets.len())
                .map(|k| to_db(totals[s * width + k + 1] / trials))
                .collect(),
            crb_db: sets
                .iter()
                .map(|set| crb_asymptote(set.len(), samples, snr))
                .collect(),
        })
        .collect();
    Ok(ExperimentReport {
        degrees: config.degrees.clone(),
        parameter_counts: sets.iter().map(DegreeSet::len).collect(),
        rows,
        seed: config.seed,
        trials: config.trials,
        config_hash: config.hash(),
    })
}

/// True pose of the multi-start experiment.
pub fn trajectory_truth() -> Pose {
    Pose::facing(Vector3::new(0.0, 0.0, 10.0))
}

/// Multi-start MLE on one noisy observation of the exact channel at
/// [`trajectory_truth`], with a genie run from the truth as the reference.
pub fn run_trajectory_experiment(
    spec: &ArraySpec,
    config: &MleConfig,
    snr_db: f64,
    seed: u64,
) -> Result<MleOutcome> {
    let truth = trajectory_truth();
    let model = ChannelModel::new(*spec, AmplitudeMode::Exact)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let y = add_noise(&model.channel(&truth), snr_db, &mut rng);
    let config = MleConfig {
        genie_init: Some(truth),
        ..*config
    };
    optimize(&model, &y, &config, &mut rng)
}

/// Pilot layout for a degree-`L` fit: `L + 1` transmit indices per
/// non-singleton transmit dimension, all receive indices, and the two band
/// edges when there are several frequencies.
///
/// Transmit pilots start at index 0 with stride `⌊(N − 1)/L⌋`, which lands
/// on the last element exactly when `L` divides `N − 1`.
pub fn pilot_sublattice(spec: &ArraySpec, degree: usize) -> Result<Sublattice> {
    let full = spec.shape();
    let mut strides = [1; RANK];
    let mut shape = full;
    for d in [2, 3] {
        if full[d] > 1 {
            if full[d] <= degree || degree == 0 {
                return Err(Error::DegreeTooHigh {
                    degree,
                    dim: d,
                    needed: degree + 1,
                    available: full[d],
                });
            }
            strides[d] = (full[d] - 1) / degree;
            shape[d] = degree + 1;
        }
    }
    if full[4] > 1 {
        strides[4] = full[4] - 1;
        shape[4] = 2;
    }
    Sublattice::new(full, [0; RANK], strides, shape)
}

/// Pilot sublattice and the observation restricted to it.
pub fn pilot_subsample(
    y: &ChannelTensor,
    spec: &ArraySpec,
    degree: usize,
) -> Result<(Sublattice, ChannelTensor)> {
    let sub = pilot_sublattice(spec, degree)?;
    let obs = sub.extract(y)?;
    Ok((sub, obs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ppe::{estimate_on_sublattice, rebase_model};
    use crate::wavefront::PolyPhaseModel;
    use approx::assert_abs_diff_eq;

    fn ula32() -> ArraySpec {
        ArraySpec::half_wavelength((32, 1), (1, 1), 1, 0.0, 30e9)
    }

    #[test]
    fn noise_statistics() {
        let h = ChannelTensor::filled([1, 1, 1000, 1, 1000], Complex64::new(1.0, 0.0));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let snr_db = 7.0;
        let y = add_noise(&h, snr_db, &mut rng);
        let n = y.len() as f64;
        let (mut re, mut im) = (0.0, 0.0);
        for (a, b) in y.values().iter().zip(h.values()) {
            let w = a - b;
            re += w.re * w.re;
            im += w.im * w.im;
        }
        let target = 1.0 / from_db(snr_db);
        assert!(((re + im) / n / target - 1.0).abs() < 0.02);
        assert!((re / n / (target / 2.0) - 1.0).abs() < 0.02);
        assert!((im / n / (target / 2.0) - 1.0).abs() < 0.02);
        let quiet = add_noise(&h, 300.0, &mut rng);
        assert!(per_entry_mse(&quiet, &h).unwrap() < 1e-24);
    }

    #[test]
    fn mse_examples() {
        let h = synth(&ula32(), &trajectory_truth(), AmplitudeMode::Unit);
        assert_eq!(per_entry_mse(&h, &h).unwrap(), 0.0);
        let zero = ChannelTensor::filled(h.shape(), Complex64::new(0.0, 0.0));
        assert_abs_diff_eq!(per_entry_mse(&zero, &h).unwrap(), 1.0, epsilon = 1e-12);
        let other = ChannelTensor::filled([1, 1, 31, 1, 1], Complex64::new(0.0, 0.0));
        assert!(matches!(
            per_entry_mse(&other, &h),
            Err(Error::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn crb_examples() {
        assert_abs_diff_eq!(crb_asymptote(2 * 32, 32, 13.0), -13.0, epsilon = 1e-12);
        assert_abs_diff_eq!(crb_asymptote(3, 32, 20.0), -33.2906, epsilon = 1e-4);
        // Planar to planar with 32 frequencies, L = 2: |𝓜| = 2·15.
        let n = 32usize.pow(4) * 32;
        let expected = 10.0 * (30.0 / (2.0 * n as f64 * from_db(12.0))).log10();
        assert_abs_diff_eq!(crb_asymptote(30, n, 12.0), expected, epsilon = 1e-12);
    }

    #[test]
    fn sweep_is_deterministic_and_ls_tracks_snr() {
        let config = ExperimentConfig {
            spec: ula32(),
            snr_grid_db: vec![0.0, 10.0, 20.0],
            degrees: vec![1, 2],
            trials: 40,
            amplitude: AmplitudeMode::Unit,
            shell: Shell::default(),
            seed: 7,
        };
        let a = run_mse_sweep(&config).unwrap();
        let b = run_mse_sweep(&config).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.parameter_counts, vec![2, 3]);
        for row in &a.rows {
            assert!((row.ls_db + row.snr_db).abs() < 0.5);
            assert_abs_diff_eq!(
                row.crb_db[1],
                crb_asymptote(3, 32, row.snr_db),
                epsilon = 1e-12
            );
        }
        let mut csv = Vec::new();
        a.write_mse_csv(&mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert!(text.starts_with("snr_db,mse_db_1,mse_db_2\n"));
        assert_eq!(text.lines().count(), 4);
        let mut crb = Vec::new();
        a.write_crb_csv(&mut crb).unwrap();
        assert!(String::from_utf8(crb)
            .unwrap()
            .starts_with("snr_db,crb_db_1,crb_db_2,ls_db\n"));
        assert_eq!(a.config_hash.len(), 64);
        let other = ExperimentConfig { seed: 8, ..config };
        assert_ne!(other.hash(), a.config_hash);
    }

    #[test]
    fn sweep_rejects_infeasible_degree() {
        let config = ExperimentConfig {
            spec: ArraySpec::half_wavelength((2, 1), (1, 1), 1, 0.0, 30e9),
            snr_grid_db: vec![10.0],
            degrees: vec![2],
            trials: 1,
            amplitude: AmplitudeMode::Unit,
            shell: Shell::default(),
            seed: 0,
        };
        assert!(matches!(
            run_mse_sweep(&config),
            Err(Error::DegreeTooHigh { .. })
        ));
    }

    #[test]
    fn low_snr_ordering() {
        // A richer model has more coefficients to corrupt when the noise dominates.
        let config = ExperimentConfig {
            spec: ula32(),
            snr_grid_db: vec![0.0],
            degrees: vec![2, 3],
            trials: 200,
            amplitude: AmplitudeMode::Unit,
            shell: Shell::default(),
            seed: 3,
        };
        let report = run_mse_sweep(&config).unwrap();
        assert!(report.rows[0].mse_db[1] >= report.rows[0].mse_db[0]);
    }

    #[test]
    fn pilot_layouts() {
        let planar = ArraySpec::half_wavelength((5, 5), (2, 1), 1, 0.0, 30e9);
        let sub = pilot_sublattice(&planar, 2).unwrap();
        assert_eq!(sub.shape[2] * sub.shape[3], 9);
        assert_eq!(sub.strides, [1, 1, 2, 2, 1]);
        let linear = ula32();
        let sub = pilot_sublattice(&linear, 2).unwrap();
        assert_eq!(sub.shape, [1, 1, 3, 1, 1]);
        assert_eq!(sub.strides[2], 15);
        let wide = ArraySpec::half_wavelength((4, 1), (1, 1), 8, 5e-4, 30e9);
        let sub = pilot_sublattice(&wide, 1).unwrap();
        assert_eq!(sub.shape, [1, 1, 2, 1, 2]);
        assert_eq!(sub.full_index(&[0, 0, 1, 0, 1]), [0, 0, 3, 0, 7]);
        assert!(
            pilot_sublattice(&ArraySpec::half_wavelength((2, 1), (1, 1), 1, 0.0, 30e9), 2).is_err()
        );
    }

    #[test]
    fn pilot_extrapolation_noiseless() {
        let spec = ArraySpec::half_wavelength((9, 7), (3, 1), 1, 0.0, 30e9);
        let sub = pilot_sublattice(&spec, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let local_set = DegreeSet::for_shape(2, sub.shape).unwrap();
        let coefficients = (0..local_set.len())
            .map(|_| rng.random_range(-0.4..0.4))
            .collect();
        let local = PolyPhaseModel::new(local_set, coefficients).unwrap();
        let truth = reconstruct(&rebase_model(&local, &sub).unwrap());
        let (sub, obs) = pilot_subsample(&truth, &spec, 2).unwrap();
        let est = estimate_on_sublattice(&obs, &sub, 2).unwrap();
        assert!(per_entry_mse(&reconstruct(&est), &truth).unwrap() < 1e-18);
    }

    #[test]
    fn trajectory_experiment_small() {
        let spec = ArraySpec::half_wavelength((2, 1), (1, 1), 1, 0.0, 30e9);
        let config = MleConfig {
            iterations: 50,
            num_starts: 4,
            ..MleConfig::default()
        };
        let out = run_trajectory_experiment(&spec, &config, 10.0, 3).unwrap();
        assert!(out.genie.is_some());
        assert_eq!(out.trajectories.len(), 4);
        assert_eq!(
            out,
            run_trajectory_experiment(&spec, &config, 10.0, 3).unwrap()
        );
    }
}
