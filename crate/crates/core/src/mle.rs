//! Geometric-parameter maximum-likelihood baseline.
//!
//! The pose `(r, R)` is fitted directly to the observation by first-order
//! descent from many random initializations. Rotations are parameterized
//! around each start's initial rotation as `R = R₀·exp(skew(ω))`.

use std::f64::consts::PI;
use std::io::Write;

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::geometry::{
    antenna_positions, rotation_from_tangent_at, sample_pose_in, AmplitudeMode, ArraySpec, Pose,
    Shell,
};
use crate::lattice::{ChannelTensor, Shape};
use crate::{to_db, Error, Result};

/// Which attenuation, if any, the cost profiles out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CostVariant {
    /// `Σ|y − h|²`, no attenuation.
    Plain,
    /// Complex attenuation `β` minimized in closed form.
    #[default]
    ComplexBeta,
    /// Attenuation restricted to the unit circle.
    UnitBeta,
}

impl CostVariant {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Plain => "plain",
            Self::ComplexBeta => "complex_beta",
            Self::UnitBeta => "unit_beta",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "plain" => Ok(Self::Plain),
            "complex_beta" | "beta" => Ok(Self::ComplexBeta),
            "unit_beta" => Ok(Self::UnitBeta),
            other => Err(Error::Config(format!(
                "unknown cost variant {other:?} (plain, complex_beta, unit_beta)"
            ))),
        }
    }
}

/// Sufficient statistics of a `(y, h)` pair for every cost variant.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
struct Moments {
    yy: f64,
    hh: f64,
    yh: Complex64,
    n: usize,
}

impl Moments {
    fn accumulate(&mut self, y: Complex64, h: Complex64) {
        self.yy += y.norm_sqr();
        self.hh += h.norm_sqr();
        self.yh += y * h.conj();
        self.n += 1;
    }

    fn of(y: &ChannelTensor, h: &ChannelTensor) -> Result<Self> {
        check_shapes(y.shape(), h.shape())?;
        let mut m = Self::default();
        for (a, b) in y.values().iter().zip(h.values()) {
            m.accumulate(*a, *b);
        }
        Ok(m)
    }

    fn cost(&self, variant: CostVariant) -> f64 {
        let raw = match variant {
            CostVariant::Plain => self.yy + self.hh - 2.0 * self.yh.re,
            CostVariant::ComplexBeta => {
                if self.hh > 0.0 {
                    self.yy - self.yh.norm_sqr() / self.hh
                } else {
                    self.yy
                }
            }
            CostVariant::UnitBeta => self.yy + self.hh - 2.0 * self.yh.norm(),
        };
        // Cancellation can leave a tiny negative residue.
        raw.max(0.0) / self.n as f64
    }
}

fn check_shapes(left: Shape, right: Shape) -> Result<()> {
    if left != right {
        return Err(Error::ShapeMismatch { left, right });
    }
    Ok(())
}

/// `(1/|N|)·Σ|y − h|²`.
pub fn cost_plain(y: &ChannelTensor, h: &ChannelTensor) -> Result<f64> {
    check_shapes(y.shape(), h.shape())?;
    let sum: f64 = y
        .values()
        .iter()
        .zip(h.values())
        .map(|(a, b)| (a - b).norm_sqr())
        .sum();
    Ok(sum / y.len() as f64)
}

/// `(1/|N|)·(Σ|y|² − |Σ y·h̄|²/Σ|h|²)`, the plain cost at the best complex `β`.
pub fn cost_beta(y: &ChannelTensor, h: &ChannelTensor) -> Result<f64> {
    Ok(Moments::of(y, h)?.cost(CostVariant::ComplexBeta))
}

/// `(1/|N|)·(Σ(|y|² + |h|²) − 2|Σ y·h̄|)`, the plain cost at the best unit `β`.
pub fn cost_unit_beta(y: &ChannelTensor, h: &ChannelTensor) -> Result<f64> {
    Ok(Moments::of(y, h)?.cost(CostVariant::UnitBeta))
}

pub fn cost(variant: CostVariant, y: &ChannelTensor, h: &ChannelTensor) -> Result<f64> {
    match variant {
        CostVariant::Plain => cost_plain(y, h),
        other => Ok(Moments::of(y, h)?.cost(other)),
    }
}

/// Closed-form attenuation for the given cost variant.
pub fn beta_hat(y: &ChannelTensor, h: &ChannelTensor, variant: CostVariant) -> Result<Complex64> {
    let m = Moments::of(y, h)?;
    match variant {
        CostVariant::Plain => Ok(Complex64::new(1.0, 0.0)),
        CostVariant::ComplexBeta => {
            if m.hh == 0.0 {
                return Err(Error::ZeroSignal);
            }
            Ok(m.yh / m.hh)
        }
        CostVariant::UnitBeta => {
            let r = m.yh.norm();
            if r == 0.0 {
                return Err(Error::ZeroSignal);
            }
            Ok(m.yh / r)
        }
    }
}

/// Channel model `h(·; pose)` evaluated against a fixed observation.
///
/// Holds the antenna layout so that cost evaluations avoid building the
/// channel tensor.
#[derive(Debug, Clone)]
pub struct ChannelModel {
    spec: ArraySpec,
    amplitude: AmplitudeMode,
    tx: Vec<Vector3<f64>>,
    rx_local: Vec<Vector3<f64>>,
    scales: Vec<f64>,
}

impl ChannelModel {
    pub fn new(spec: ArraySpec, amplitude: AmplitudeMode) -> Result<Self> {
        spec.validate()?;
        let (tx, rx_local) = antenna_positions(&spec, &Pose::facing(Vector3::zeros()));
        let scales = (0..spec.nf).map(|f| spec.frequency_scale(f)).collect();
        Ok(Self {
            spec,
            amplitude,
            tx,
            rx_local,
            scales,
        })
    }

    pub fn spec(&self) -> &ArraySpec {
        &self.spec
    }

    pub fn amplitude(&self) -> AmplitudeMode {
        self.amplitude
    }

    pub fn channel(&self, pose: &Pose) -> ChannelTensor {
        crate::geometry::synth(&self.spec, pose, self.amplitude)
    }

    fn moments(&self, y: &ChannelTensor, pose: &Pose) -> Moments {
        let k = 2.0 * PI / self.spec.wavelength();
        let d0 = pose.distance();
        let ys = y.values();
        let mut m = Moments::default();
        let mut at = 0;
        for local in &self.rx_local {
            let r = pose.translation + pose.rotation * local;
            for t in &self.tx {
                let dist = (r - t).norm();
                let amp = match self.amplitude {
                    AmplitudeMode::Unit => 1.0,
                    AmplitudeMode::Exact => d0 / dist,
                };
                for s in &self.scales {
                    m.accumulate(ys[at], Complex64::from_polar(amp, -k * dist * s));
                    at += 1;
                }
            }
        }
        m
    }

    /// Cost of `pose` against `y`; `y` must have the model's shape.
    pub fn cost(&self, y: &ChannelTensor, pose: &Pose, variant: CostVariant) -> Result<f64> {
        check_shapes(y.shape(), self.spec.shape())?;
        Ok(self.moments(y, pose).cost(variant))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MleConfig {
    pub cost_variant: CostVariant,
    pub learning_rate: f64,
    pub iterations: usize,
    pub num_starts: usize,
    pub init_shell: Shell,
    /// When set, an extra run starts here and serves as the reference for
    /// convergence.
    pub genie_init: Option<Pose>,
    /// Relative central-difference step.
    pub fd_step: f64,
    /// A start is converged when its final cost is within this many dB of
    /// the genie run's.
    pub converged_within_db: f64,
}

impl Default for MleConfig {
    fn default() -> Self {
        Self {
            cost_variant: CostVariant::ComplexBeta,
            learning_rate: 0.01,
            iterations: 500,
            num_starts: 128,
            init_shell: Shell::default(),
            genie_init: None,
            fd_step: 1e-6,
            converged_within_db: 1.0,
        }
    }
}

impl MleConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config("learning_rate must be positive".into()));
        }
        if self.iterations == 0 {
            return Err(Error::Config("iterations must be at least 1".into()));
        }
        if self.num_starts == 0 {
            return Err(Error::Config("num_starts must be at least 1".into()));
        }
        if !(self.fd_step > 0.0) {
            return Err(Error::Config("fd_step must be positive".into()));
        }
        self.init_shell.validate()
    }
}

/// Adam with the usual `(0.9, 0.999, 1e-8)` constants.
#[derive(Debug, Clone)]
pub struct Adam {
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    t: i32,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl Adam {
    pub fn new(lr: f64, dim: usize) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            t: 0,
            m: vec![0.0; dim],
            v: vec![0.0; dim],
        }
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        for i in 0..params.len() {
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * grad[i];
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * grad[i] * grad[i];
            let m_hat = self.m[i] / c1;
            let v_hat = self.v[i] / c2;
            params[i] -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
        }
    }
}

/// Cost history of one start.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// Cost in dB before the first step and after each step; NaN after divergence.
    pub costs_db: Vec<f64>,
    pub initial_pose: Pose,
    pub final_pose: Pose,
    /// Linear final cost; infinite when diverged.
    pub final_cost: f64,
    pub converged: bool,
    pub diverged: bool,
}

impl Trajectory {
    pub fn final_cost_db(&self) -> f64 {
        to_db(self.final_cost)
    }
}

fn pose_from(base: &Matrix3<f64>, theta: &[f64; 6]) -> Pose {
    Pose {
        translation: Vector3::new(theta[0], theta[1], theta[2]),
        rotation: rotation_from_tangent_at(base, &Vector3::new(theta[3], theta[4], theta[5])),
    }
}

/// Runs the optimizer from a single initial pose.
pub fn descend(
    model: &ChannelModel,
    y: &ChannelTensor,
    config: &MleConfig,
    init: &Pose,
) -> Result<Trajectory> {
    check_shapes(y.shape(), model.spec().shape())?;
    let base = init.rotation;
    let t0 = init.translation;
    let mut theta = [t0.x, t0.y, t0.z, 0.0, 0.0, 0.0];
    let eval = |th: &[f64; 6]| {
        let pose = pose_from(&base, th);
        if pose.distance() > 0.0 {
            model.moments(y, &pose).cost(config.cost_variant)
        } else {
            f64::NAN
        }
    };
    let mut adam = Adam::new(config.learning_rate, 6);
    let mut costs_db = Vec::with_capacity(config.iterations + 1);
    let mut current = eval(&theta);
    let mut diverged = !current.is_finite();
    costs_db.push(to_db(current));
    let mut grad = [0.0; 6];
    for _ in 0..config.iterations {
        if diverged {
            costs_db.push(f64::NAN);
            continue;
        }
        for i in 0..6 {
            let h = config.fd_step * theta[i].abs().max(1.0);
            let mut plus = theta;
            let mut minus = theta;
            plus[i] += h;
            minus[i] -= h;
            grad[i] = (eval(&plus) - eval(&minus)) / (2.0 * h);
        }
        if grad.iter().any(|g| !g.is_finite()) {
            diverged = true;
            costs_db.push(f64::NAN);
            continue;
        }
        adam.step(&mut theta, &grad);
        current = eval(&theta);
        diverged = !current.is_finite();
        costs_db.push(if diverged { f64::NAN } else { to_db(current) });
    }
    Ok(Trajectory {
        costs_db,
        initial_pose: *init,
        final_pose: pose_from(&base, &theta),
        final_cost: if diverged { f64::INFINITY } else { current },
        converged: false,
        diverged,
    })
}

/// Result of a multi-start run.
#[derive(Debug, Clone, PartialEq)]
pub struct MleOutcome {
    /// Random-start trajectories in start order.
    pub trajectories: Vec<Trajectory>,
    pub genie: Option<Trajectory>,
    /// Index of the start with the smallest final cost.
    pub best: Option<usize>,
}

impl MleOutcome {
    pub fn best_pose(&self) -> Option<Pose> {
        self.best.map(|i| self.trajectories[i].final_pose)
    }

    /// Start indices ordered by final cost, diverged starts last.
    pub fn ranking(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.trajectories.len()).collect();
        order.sort_by(|&a, &b| {
            self.trajectories[a]
                .final_cost
                .total_cmp(&self.trajectories[b].final_cost)
                .then(a.cmp(&b))
        });
        order
    }

    pub fn converged_fraction(&self) -> f64 {
        let hits = self.trajectories.iter().filter(|t| t.converged).count();
        hits as f64 / self.trajectories.len().max(1) as f64
    }

    /// Writes `Iteration,Best_1_Cost_dB,...,Best_K_Cost_dB,Proxy_Cost_dB`,
    /// with `Best_k` the start with the k-th smallest final cost. The proxy
    /// column is left empty when no genie run was made.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let order = self.ranking();
        let mut header = String::from("Iteration");
        for k in 1..=order.len() {
            header.push_str(&format!(",Best_{k}_Cost_dB"));
        }
        header.push_str(",Proxy_Cost_dB");
        writeln!(out, "{header}")?;
        let rows = self
            .trajectories
            .first()
            .map(|t| t.costs_db.len())
            .or(self.genie.as_ref().map(|g| g.costs_db.len()))
            .unwrap_or(0);
        for it in 0..rows {
            let mut line = it.to_string();
            for &i in &order {
                line.push(',');
                line.push_str(&fmt_db(self.trajectories[i].costs_db[it]));
            }
            line.push(',');
            if let Some(g) = &self.genie {
                line.push_str(&fmt_db(g.costs_db[it]));
            }
            writeln!(out, "{line}")?;
        }
        Ok(())
    }
}

fn fmt_db(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.6}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// Multi-start descent. Starts are drawn from `config.init_shell` and a
/// Haar rotation; start `i` uses stream `i` of a generator seeded from `rng`,
/// so results do not depend on scheduling.
pub fn optimize<R: Rng + ?Sized>(
    model: &ChannelModel,
    y: &ChannelTensor,
    config: &MleConfig,
    rng: &mut R,
) -> Result<MleOutcome> {
    config.validate()?;
    check_shapes(y.shape(), model.spec().shape())?;
    let base_seed: u64 = rng.random();
    let inits: Vec<Pose> = (0..config.num_starts)
        .map(|i| {
            let mut stream = ChaCha8Rng::seed_from_u64(base_seed);
            stream.set_stream(i as u64);
            sample_pose_in(&mut stream, &config.init_shell)
        })
        .collect();
    let mut trajectories = inits
        .par_iter()
        .map(|init| descend(model, y, config, init))
        .collect::<Result<Vec<_>>>()?;
    let genie = config
        .genie_init
        .map(|pose| descend(model, y, config, &pose))
        .transpose()?;
    if let Some(g) = &genie {
        let reference = g.final_cost_db();
        for t in &mut trajectories {
            t.converged =
                !t.diverged && t.final_cost_db() <= reference + config.converged_within_db;
        }
    }
    let best = trajectories
        .iter()
        .enumerate()
        .filter(|(_, t)| !t.diverged)
        .min_by(|a, b| a.1.final_cost.total_cmp(&b.1.final_cost))
        .map(|(i, _)| i);
    Ok(MleOutcome {
        trajectories,
        genie,
        best,
    })
}

/// One row of a distance sweep: square roots of the summed objectives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LandscapePoint {
    pub distance: f64,
    /// `sqrt(Σ|y − h|²)`.
    pub point: f64,
    /// `sqrt(Σ|y|² − |Σ y·h̄|²/Σ|h|²)`.
    pub plane: f64,
}

/// Noiseless sweep of the receiver along the broadside axis.
///
/// The observation is the exact channel with the receiver at
/// `(0, 0, true_distance)`; each candidate `D′` in `[lo, hi]` (step `step`)
/// is scored by both objectives. Values are not normalized by the sample
/// count.
pub fn landscape_scan(
    spec: &ArraySpec,
    amplitude: AmplitudeMode,
    true_distance: f64,
    range: (f64, f64),
    step: f64,
) -> Result<Vec<LandscapePoint>> {
    let (lo, hi) = range;
    if !(step > 0.0 && hi >= lo && lo > 0.0) {
        return Err(Error::Config(format!(
            "landscape range [{lo}, {hi}] with step {step} is empty"
        )));
    }
    let model = ChannelModel::new(*spec, amplitude)?;
    let y = model.channel(&Pose::facing(Vector3::new(0.0, 0.0, true_distance)));
    let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
    let points = (0..count)
        .map(|i| {
            let distance = lo + step * i as f64;
            let m = model.moments(&y, &Pose::facing(Vector3::new(0.0, 0.0, distance)));
            let n = m.n as f64;
            LandscapePoint {
                distance,
                point: (m.cost(CostVariant::Plain) * n).sqrt(),
                plane: (m.cost(CostVariant::ComplexBeta) * n).sqrt(),
            }
        })
        .collect();
    Ok(points)
}

/// Writes `z,point,plane`.
pub fn write_landscape_csv<W: Write>(points: &[LandscapePoint], mut out: W) -> std::io::Result<()> {
    writeln!(out, "z,point,plane")?;
    for p in points {
        writeln!(out, "{:.6},{:.9},{:.9}", p.distance, p.point, p.plane)?;
    }
    Ok(())
}

/// Interior samples strictly below both neighbours.
pub fn count_local_minima(values: &[f64]) -> usize {
    values
        .windows(3)
        .filter(|w| w[1] < w[0] && w[1] < w[2])
        .count()
}

/// Sign changes of the discrete derivative, ignoring zero differences.
pub fn derivative_sign_changes(values: &[f64]) -> usize {
    let signs: Vec<f64> = values
        .windows(2)
        .map(|w| w[1] - w[0])
        .filter(|d| *d != 0.0)
        .map(f64::signum)
        .collect();
    signs.windows(2).filter(|w| w[0] != w[1]).count()
}
