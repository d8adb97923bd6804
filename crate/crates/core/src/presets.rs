//! Named experiment setups.
//!
//! Each preset has a desk-scale form that runs in seconds to minutes and a
//! full form with the original array sizes and trial counts.
//!
//! | name            | kind        | desk                       | full                          |
//! |-----------------|-------------|----------------------------|-------------------------------|
//! | `ula32-single`  | synth       | 32×1 → 1×1, 1 freq         | same                          |
//! | `fig5a`…`fig5f` | mse sweep   | unit amplitude, see below  | 32-element arrays             |
//! | `fig6a`…`fig6f` | mse sweep   | exact amplitude            | 32-element arrays             |
//! | `fig3a`…`fig3i` | multi-start | 128 starts (16–32 for h, i)| 1024 starts                   |
//! | `fig9`          | landscape   | 256×1 → 1×1, D = 5 m       | same                          |
//!
//! Sweep setups, as `tx → rx × frequencies` (desk / full):
//! `a` 32×1→1×1×1 / same, `b` 32×1→32×1×1 / same, `c` 8×8→8×8×1 / 32×32→32×32×1,
//! `d` 32×1→1×1×8 / ×32, `e` 8×1→8×1×8 / 32×1→32×1×32, `f` 8×8→8×8×8 / 32×32→32×32×32.

use crate::geometry::{AmplitudeMode, ArraySpec, Shell};
use crate::mle::MleConfig;
use crate::sim::ExperimentConfig;

pub const CARRIER_HZ: f64 = 30e9;
/// Fractional subcarrier step for multi-frequency setups.
pub const MULTI_FREQUENCY_DF: f64 = 5e-4;

fn spec(tx: (usize, usize), rx: (usize, usize), nf: usize) -> ArraySpec {
    let df = if nf > 1 { MULTI_FREQUENCY_DF } else { 0.0 };
    ArraySpec::half_wavelength(tx, rx, nf, df, CARRIER_HZ)
}

/// SNR grid `0, 1, …, 20` dB.
pub fn default_snr_grid() -> Vec<f64> {
    (0..=20).map(f64::from).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPreset {
    pub name: String,
    pub desk: ArraySpec,
    pub full: ArraySpec,
    pub amplitude: AmplitudeMode,
    pub desk_trials: usize,
    pub full_trials: usize,
}

impl SweepPreset {
    pub fn config(&self, full: bool, seed: u64) -> ExperimentConfig {
        ExperimentConfig {
            spec: if full { self.full } else { self.desk },
            snr_grid_db: default_snr_grid(),
            degrees: vec![1, 2, 3],
            trials: if full {
                self.full_trials
            } else {
                self.desk_trials
            },
            amplitude: self.amplitude,
            shell: Shell::default(),
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryPreset {
    pub name: String,
    pub desk: ArraySpec,
    pub full: ArraySpec,
    pub desk_starts: usize,
    pub full_starts: usize,
    pub snr_db: f64,
}

impl TrajectoryPreset {
    pub fn spec(&self, full: bool) -> ArraySpec {
        if full {
            self.full
        } else {
            self.desk
        }
    }

    pub fn config(&self, full: bool) -> MleConfig {
        MleConfig {
            num_starts: if full {
                self.full_starts
            } else {
                self.desk_starts
            },
            ..MleConfig::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LandscapePreset {
    pub name: String,
    pub spec: ArraySpec,
    pub amplitude: AmplitudeMode,
    pub true_distance: f64,
    pub range: (f64, f64),
    pub step: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthPreset {
    pub name: String,
    pub spec: ArraySpec,
    pub amplitude: AmplitudeMode,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Preset {
    Synth(SynthPreset),
    Sweep(SweepPreset),
    Trajectory(TrajectoryPreset),
    Landscape(LandscapePreset),
}

impl Preset {
    pub fn name(&self) -> &str {
        match self {
            Preset::Synth(p) => &p.name,
            Preset::Sweep(p) => &p.name,
            Preset::Trajectory(p) => &p.name,
            Preset::Landscape(p) => &p.name,
        }
    }

    /// Array layout used by the desk-scale form.
    pub fn spec(&self) -> ArraySpec {
        match self {
            Preset::Synth(p) => p.spec,
            Preset::Sweep(p) => p.desk,
            Preset::Trajectory(p) => p.desk,
            Preset::Landscape(p) => p.spec,
        }
    }
}

const SWEEP_SETUPS: [(
    char,
    (usize, usize),
    (usize, usize),
    usize,
    (usize, usize),
    (usize, usize),
    usize,
); 6] = [
    ('a', (32, 1), (1, 1), 1, (32, 1), (1, 1), 1),
    ('b', (32, 1), (32, 1), 1, (32, 1), (32, 1), 1),
    ('c', (8, 8), (8, 8), 1, (32, 32), (32, 32), 1),
    ('d', (32, 1), (1, 1), 8, (32, 1), (1, 1), 32),
    ('e', (8, 1), (8, 1), 8, (32, 1), (32, 1), 32),
    ('f', (8, 8), (8, 8), 8, (32, 32), (32, 32), 32),
];

const TRAJECTORY_SETUPS: [(char, (usize, usize), (usize, usize), (usize, usize), usize); 9] = [
    ('a', (2, 1), (1, 1), (2, 1), 128),
    ('b', (8, 1), (1, 1), (8, 1), 128),
    ('c', (32, 1), (1, 1), (32, 1), 128),
    ('d', (2, 1), (2, 1), (2, 1), 128),
    ('e', (8, 1), (8, 1), (8, 1), 128),
    ('f', (32, 1), (32, 1), (32, 1), 128),
    ('g', (2, 2), (2, 2), (2, 2), 128),
    ('h', (8, 8), (8, 8), (8, 8), 32),
    // Desk form shrinks the 32×32 arrays; the cost is evaluated a few
    // thousand times per start.
    ('i', (32, 32), (8, 8), (8, 8), 16),
];

/// Every registered preset.
pub fn all() -> Vec<Preset> {
    let mut out = vec![Preset::Synth(SynthPreset {
        name: "ula32-single".into(),
        spec: spec((32, 1), (1, 1), 1),
        amplitude: AmplitudeMode::Unit,
    })];
    for (fig, amplitude) in [
        ("fig5", AmplitudeMode::Unit),
        ("fig6", AmplitudeMode::Exact),
    ] {
        for (tag, dtx, drx, dnf, ftx, frx, fnf) in SWEEP_SETUPS {
            out.push(Preset::Sweep(SweepPreset {
                name: format!("{fig}{tag}"),
                desk: spec(dtx, drx, dnf),
                full: spec(ftx, frx, fnf),
                amplitude,
                desk_trials: 100,
                full_trials: if tag == 'f' { 100 } else { 1000 },
            }));
        }
    }
    for (tag, full_arr, desk_tx, desk_rx, desk_starts) in TRAJECTORY_SETUPS {
        let full_rx = if tag <= 'c' { (1, 1) } else { full_arr };
        out.push(Preset::Trajectory(TrajectoryPreset {
            name: format!("fig3{tag}"),
            desk: spec(desk_tx, desk_rx, 1),
            full: spec(full_arr, full_rx, 1),
            desk_starts,
            full_starts: 1024,
            snr_db: 10.0,
        }));
    }
    out.push(Preset::Landscape(LandscapePreset {
        name: "fig9".into(),
        spec: spec((256, 1), (1, 1), 1),
        amplitude: AmplitudeMode::Exact,
        true_distance: 5.0,
        range: (4.6, 5.4),
        step: 5e-4,
    }));
    out
}

pub fn find(name: &str) -> Option<Preset> {
    all().into_iter().find(|p| p.name() == name)
}

pub fn names() -> Vec<String> {
    all().iter().map(|p| p.name().to_string()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wavefront::DegreeSet;

    #[test]
    fn registry_contents() {
        let names = names();
        assert_eq!(names.len(), 1 + 12 + 9 + 1);
        for n in ["ula32-single", "fig5a", "fig6f", "fig3a", "fig3i", "fig9"] {
            assert!(names.iter().any(|x| x == n), "{n}");
        }
        let mut sorted = names.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), names.len());
        assert_eq!(
            find("ula32-single").unwrap().spec().shape(),
            [1, 1, 32, 1, 1]
        );
        assert!(find("nope").is_none());
    }

    #[test]
    fn sweep_presets_are_feasible() {
        for p in all() {
            if let Preset::Sweep(s) = p {
                for full in [false, true] {
                    let c = s.config(full, 1);
                    assert_eq!(c.snr_grid_db.len(), 21);
                    for &l in &c.degrees {
                        DegreeSet::build(l, &c.spec).unwrap();
                    }
                }
                assert!(s.desk.len() <= 8 * 8 * 8 * 8 * 8);
            }
        }
        match find("fig5d").unwrap() {
            Preset::Sweep(s) => assert_eq!(s.full.df, MULTI_FREQUENCY_DF),
            _ => unreachable!(),
        }
    }

    #[test]
    fn trajectory_full_sizes() {
        match find("fig3c").unwrap() {
            Preset::Trajectory(t) => {
                assert_eq!(t.full.shape(), [1, 1, 32, 1, 1]);
                assert_eq!(t.config(true).num_starts, 1024);
            }
            _ => unreachable!(),
        }
        match find("fig3i").unwrap() {
            Preset::Trajectory(t) => assert_eq!(t.full.shape(), [32, 32, 32, 32, 1]),
            _ => unreachable!(),
        }
    }
}
