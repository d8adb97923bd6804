//! Array geometry and exact near-field LOS channel synthesis.
//!
//! The transmit array lies in the `xy`-plane centred at the origin. The
//! receive array is placed by a [`Pose`]: its local grid (also in a local
//! `xy`-plane) is rotated by `R` and translated to `r`.

use std::f64::consts::PI;

use nalgebra::{Matrix3, Quaternion, UnitQuaternion, Vector3};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::lattice::{ChannelTensor, Shape};
use crate::{Error, Result};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Dimensions of the two uniform planar arrays and the frequency grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArraySpec {
    pub ntx: usize,
    pub nty: usize,
    pub nrx: usize,
    pub nry: usize,
    /// Transmit spacing along x, meters.
    pub dtx: f64,
    pub dty: f64,
    pub drx: f64,
    pub dry: f64,
    pub nf: usize,
    /// Fractional frequency step.
    pub df: f64,
    /// Carrier frequency, Hz.
    pub fc: f64,
}

impl ArraySpec {
    /// Arrays with half-wavelength spacing at `fc` on both ends.
    pub fn half_wavelength(
        tx: (usize, usize),
        rx: (usize, usize),
        nf: usize,
        df: f64,
        fc: f64,
    ) -> Self {
        let d = SPEED_OF_LIGHT / fc / 2.0;
        Self {
            ntx: tx.0,
            nty: tx.1,
            nrx: rx.0,
            nry: rx.1,
            dtx: d,
            dty: d,
            drx: d,
            dry: d,
            nf,
            df,
            fc,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("ntx", self.ntx),
            ("nty", self.nty),
            ("nrx", self.nrx),
            ("nry", self.nry),
            ("nf", self.nf),
        ];
        for (name, n) in counts {
            if n == 0 {
                return Err(Error::InvalidSpec(format!("{name} must be at least 1")));
            }
        }
        let spacings = [
            ("dtx", self.dtx, self.ntx),
            ("dty", self.dty, self.nty),
            ("drx", self.drx, self.nrx),
            ("dry", self.dry, self.nry),
        ];
        for (name, d, n) in spacings {
            if !d.is_finite() || (n > 1 && d <= 0.0) {
                return Err(Error::InvalidSpec(format!(
                    "{name} must be positive for a {n}-element dimension"
                )));
            }
        }
        if !(self.df >= 0.0 && self.df.is_finite()) {
            return Err(Error::InvalidSpec("df must be non-negative".into()));
        }
        if !(self.fc > 0.0 && self.fc.is_finite()) {
            return Err(Error::InvalidSpec("fc must be positive".into()));
        }
        Ok(())
    }

    /// Carrier wavelength `c / fc`, meters.
    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.fc
    }

    /// Tensor shape `(nrx, nry, ntx, nty, nf)`.
    pub fn shape(&self) -> Shape {
        [self.nrx, self.nry, self.ntx, self.nty, self.nf]
    }

    pub fn len(&self) -> usize {
        self.shape().iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn tx_topology(&self) -> ArrayTopology {
        ArrayTopology::from_counts(self.ntx, self.nty)
    }

    pub fn rx_topology(&self) -> ArrayTopology {
        ArrayTopology::from_counts(self.nrx, self.nry)
    }

    /// Largest transmit dimension (the diagonal for planar arrays), meters.
    pub fn tx_aperture(&self) -> f64 {
        ((self.ntx - 1) as f64 * self.dtx).hypot((self.nty - 1) as f64 * self.dty)
    }

    pub fn rx_aperture(&self) -> f64 {
        ((self.nrx - 1) as f64 * self.drx).hypot((self.nry - 1) as f64 * self.dry)
    }

    /// `1 + df·(n_f − (N_f − 1)/2)`.
    pub fn frequency_scale(&self, nf: usize) -> f64 {
        1.0 + self.df * (nf as f64 - (self.nf as f64 - 1.0) / 2.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ArrayTopology {
    Single,
    Linear,
    Planar,
}

impl ArrayTopology {
    pub fn from_counts(nx: usize, ny: usize) -> Self {
        match (nx > 1, ny > 1) {
            (false, false) => Self::Single,
            (true, true) => Self::Planar,
            _ => Self::Linear,
        }
    }
}

/// Minimal number of geometric parameters (translation + rotation) for the
/// relative placement of two arrays.
///
/// Symmetric in its arguments; two single antennas need only their distance.
pub fn geometric_parameter_count(tx: ArrayTopology, rx: ArrayTopology) -> usize {
    use ArrayTopology::*;
    let (hi, lo) = if tx >= rx { (tx, rx) } else { (rx, tx) };
    match (hi, lo) {
        (Single, Single) => 1,
        (Linear, Single) => 2,
        (Planar, Single) => 3,
        (Linear, Linear) => 4,
        (Planar, Linear) => 5,
        (Planar, Planar) => 6,
        _ => unreachable!("ordered pair"),
    }
}

/// Placement of the receive array: translation `r` and rotation `R`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub translation: Vector3<f64>,
    pub rotation: Matrix3<f64>,
}

impl Pose {
    /// Validates orthonormality (`1e-12`), `det R = +1` and `‖r‖ > 0`.
    pub fn new(translation: Vector3<f64>, rotation: Matrix3<f64>) -> Result<Self> {
        let ortho = rotation.transpose() * rotation - Matrix3::identity();
        if ortho.iter().any(|v| v.abs() > 1e-12) {
            return Err(Error::InvalidPose("rotation is not orthonormal".into()));
        }
        let det = rotation.determinant();
        if (det - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidPose(format!("rotation determinant {det}")));
        }
        if !(translation.norm() > 0.0) || translation.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidPose(
                "translation must be finite and nonzero".into(),
            ));
        }
        Ok(Self {
            translation,
            rotation,
        })
    }

    /// Receive array at `translation`, aligned with the transmit array.
    pub fn facing(translation: Vector3<f64>) -> Self {
        Self {
            translation,
            rotation: Matrix3::identity(),
        }
    }

    /// Distance `D` between the array centres.
    pub fn distance(&self) -> f64 {
        self.translation.norm()
    }

    /// Unit direction `r / D`.
    pub fn direction(&self) -> Vector3<f64> {
        self.translation / self.distance()
    }
}

/// `R_z(φz)·R_y(φy)·R_x(φx)`.
pub fn rotation_from_euler(phi_x: f64, phi_y: f64, phi_z: f64) -> Matrix3<f64> {
    let (sx, cx) = phi_x.sin_cos();
    let (sy, cy) = phi_y.sin_cos();
    let (sz, cz) = phi_z.sin_cos();
    let rx = Matrix3::new(1.0, 0.0, 0.0, 0.0, cx, -sx, 0.0, sx, cx);
    let ry = Matrix3::new(cy, 0.0, sy, 0.0, 1.0, 0.0, -sy, 0.0, cy);
    let rz = Matrix3::new(cz, -sz, 0.0, sz, cz, 0.0, 0.0, 0.0, 1.0);
    rz * ry * rx
}

pub fn skew(omega: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(
        0.0, -omega.z, omega.y, //
        omega.z, 0.0, -omega.x, //
        -omega.y, omega.x, 0.0,
    )
}

/// `exp(skew(ω))` by Rodrigues' formula.
pub fn rotation_from_tangent(omega: &Vector3<f64>) -> Matrix3<f64> {
    let theta2 = omega.norm_squared();
    let k = skew(omega);
    let (a, b) = if theta2 < 1e-8 {
        // Taylor expansions of sinθ/θ and (1−cosθ)/θ².
        (1.0 - theta2 / 6.0, 0.5 - theta2 / 24.0)
    } else {
        let theta = theta2.sqrt();
        (theta.sin() / theta, (1.0 - theta.cos()) / theta2)
    };
    Matrix3::identity() + k * a + k * k * b
}

/// `R₀·exp(skew(ω))`.
pub fn rotation_from_tangent_at(base: &Matrix3<f64>, omega: &Vector3<f64>) -> Matrix3<f64> {
    base * rotation_from_tangent(omega)
}

/// Inverse of [`rotation_from_tangent`], returning `ω` with `‖ω‖ ≤ π`.
pub fn rotation_log(rotation: &Matrix3<f64>) -> Vector3<f64> {
    let q = UnitQuaternion::from_matrix(rotation);
    q.scaled_axis()
}

fn local_grid(nx: usize, ny: usize, dx: f64, dy: f64) -> Vec<Vector3<f64>> {
    let cx = (nx as f64 - 1.0) / 2.0;
    let cy = (ny as f64 - 1.0) / 2.0;
    let mut out = Vec::with_capacity(nx * ny);
    for ix in 0..nx {
        for iy in 0..ny {
            out.push(Vector3::new(
                dx * (ix as f64 - cx),
                dy * (iy as f64 - cy),
                0.0,
            ));
        }
    }
    out
}

/// Transmit and receive antenna positions, each flattened as `ix·ny + iy`.
pub fn antenna_positions(spec: &ArraySpec, pose: &Pose) -> (Vec<Vector3<f64>>, Vec<Vector3<f64>>) {
    let tx = local_grid(spec.ntx, spec.nty, spec.dtx, spec.dty);
    let rx = local_grid(spec.nrx, spec.nry, spec.drx, spec.dry)
        .into_iter()
        .map(|p| pose.translation + pose.rotation * p)
        .collect();
    (tx, rx)
}

/// Alternate parameterization: both arrays rotated about their own centres,
/// transmit centred at the origin and receive centred at `(0, 0, D)`.
///
/// Euler angles are `(φx, φy, φz)` for each end.
pub fn antenna_positions_alt(
    spec: &ArraySpec,
    distance: f64,
    tx_euler: [f64; 3],
    rx_euler: [f64; 3],
) -> (Vec<Vector3<f64>>, Vec<Vector3<f64>>) {
    let rt = rotation_from_euler(tx_euler[0], tx_euler[1], tx_euler[2]);
    let rr = rotation_from_euler(rx_euler[0], rx_euler[1], rx_euler[2]);
    let centre = Vector3::new(0.0, 0.0, distance);
    let tx = local_grid(spec.ntx, spec.nty, spec.dtx, spec.dty)
        .into_iter()
        .map(|p| rt * p)
        .collect();
    let rx = local_grid(spec.nrx, spec.nry, spec.drx, spec.dry)
        .into_iter()
        .map(|p| centre + rr * p)
        .collect();
    (tx, rx)
}

/// Distance between transmit antenna `n_t = (x, y)` and receive antenna `n_r = (x, y)`.
pub fn pairwise_distance(spec: &ArraySpec, pose: &Pose, n_t: [usize; 2], n_r: [usize; 2]) -> f64 {
    let t = Vector3::new(
        spec.dtx * (n_t[0] as f64 - (spec.ntx as f64 - 1.0) / 2.0),
        spec.dty * (n_t[1] as f64 - (spec.nty as f64 - 1.0) / 2.0),
        0.0,
    );
    let local = Vector3::new(
        spec.drx * (n_r[0] as f64 - (spec.nrx as f64 - 1.0) / 2.0),
        spec.dry * (n_r[1] as f64 - (spec.nry as f64 - 1.0) / 2.0),
        0.0,
    );
    (pose.translation + pose.rotation * local - t).norm()
}

/// Whether the `D / D_{nr,nt}` amplitude factor is kept or forced to one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AmplitudeMode {
    #[default]
    Unit,
    Exact,
}

/// Exact near-field LOS channel
/// `h(n) = (D/D_{nr,nt})·exp(−j(2π/λc)·D_{nr,nt}·(1 + df(n_f − (N_f−1)/2)))`.
pub fn synth(spec: &ArraySpec, pose: &Pose, amplitude: AmplitudeMode) -> ChannelTensor {
    let (tx, rx) = antenna_positions(spec, pose);
    let k = 2.0 * PI / spec.wavelength();
    let d0 = pose.distance();
    let scales: Vec<f64> = (0..spec.nf).map(|f| spec.frequency_scale(f)).collect();
    let mut values = Vec::with_capacity(spec.len());
    for r in &rx {
        for t in &tx {
            let dist = (r - t).norm();
            let amp = match amplitude {
                AmplitudeMode::Unit => 1.0,
                AmplitudeMode::Exact => d0 / dist,
            };
            for s in &scales {
                values.push(Complex64::from_polar(amp, -k * dist * s));
            }
        }
    }
    ChannelTensor::new(spec.shape(), values).expect("shape built from spec")
}

/// How translations are drawn from the shell `rmin ≤ ‖r‖ ≤ rmax`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ShellMeasure {
    /// Uniform over the shell's volume.
    #[default]
    Volume,
    /// Radius uniform on `[rmin, rmax]`.
    Radius,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Shell {
    pub rmin: f64,
    pub rmax: f64,
    pub measure: ShellMeasure,
}

impl Shell {
    pub fn new(rmin: f64, rmax: f64) -> Self {
        Self {
            rmin,
            rmax,
            measure: ShellMeasure::Volume,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rmin > 0.0 && self.rmax > self.rmin && self.rmax.is_finite()) {
            return Err(Error::Config(format!(
                "shell needs 0 < rmin < rmax, got [{}, {}]",
                self.rmin, self.rmax
            )));
        }
        Ok(())
    }
}

impl Default for Shell {
    fn default() -> Self {
        Self::new(5.0, 15.0)
    }
}

/// Haar-uniform rotation from a normalized quaternion of four standard Gaussians.
pub fn sample_rotation<R: Rng + ?Sized>(rng: &mut R) -> Matrix3<f64> {
    loop {
        let q = Quaternion::new(
            rng.sample::<f64, _>(StandardNormal),
            rng.sample::<f64, _>(StandardNormal),
            rng.sample::<f64, _>(StandardNormal),
            rng.sample::<f64, _>(StandardNormal),
        );
        if q.norm() > 1e-12 {
            return UnitQuaternion::from_quaternion(q)
                .to_rotation_matrix()
                .into_inner();
        }
    }
}

fn sample_direction<R: Rng + ?Sized>(rng: &mut R) -> Vector3<f64> {
    loop {
        let v = Vector3::new(
            rng.sample::<f64, _>(StandardNormal),
            rng.sample::<f64, _>(StandardNormal),
            rng.sample::<f64, _>(StandardNormal),
        );
        let n = v.norm();
        if n > 1e-12 {
            return v / n;
        }
    }
}

/// Random pose: translation in `shell`, rotation Haar-uniform on SO(3).
pub fn sample_pose_in<R: Rng + ?Sized>(rng: &mut R, shell: &Shell) -> Pose {
    let u: f64 = rng.random();
    let radius = match shell.measure {
        ShellMeasure::Volume => {
            let (a, b) = (shell.rmin.powi(3), shell.rmax.powi(3));
            (a + u * (b - a)).cbrt()
        }
        ShellMeasure::Radius => shell.rmin + u * (shell.rmax - shell.rmin),
    };
    let translation = sample_direction(rng) * radius;
    Pose {
        translation,
        rotation: sample_rotation(rng),
    }
}

/// Volume-uniform translation in `rmin ≤ ‖r‖ ≤ rmax` and Haar rotation.
pub fn sample_pose<R: Rng + ?Sized>(rng: &mut R, rmin: f64, rmax: f64) -> Pose {
    sample_pose_in(rng, &Shell::new(rmin, rmax))
}
