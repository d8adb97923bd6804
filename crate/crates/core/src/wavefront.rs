//! Polynomial expansion of the spherical wavefront.
//!
//! With `δ = ((r_{nr} − r) − t_{nt})/D` the antenna-pair distance is
//! `D·‖r̂ + δ‖`. Expanding the norm in powers of `‖δ‖` (the coefficients are
//! Legendre differences) and truncating at degree `L` gives a phase that is a
//! polynomial in the five lattice indices, which [`PolyPhaseModel`] stores in
//! the binomial basis of [`crate::basis`].

use std::f64::consts::PI;

use nalgebra::Vector3;
use num_complex::Complex64;

use crate::basis::binom_general;
use crate::geometry::{ArraySpec, Pose};
use crate::lattice::{contained, indices, total_degree, ChannelTensor, MultiIndex, Shape, RANK};
use crate::{Error, Result};

/// Legendre polynomial `P_ℓ(x)` by the three-term recurrence.
pub fn legendre(ell: usize, x: f64) -> f64 {
    let (mut prev, mut cur) = (1.0, x);
    if ell == 0 {
        return prev;
    }
    for k in 1..ell {
        let next = ((2 * k + 1) as f64 * x * cur - k as f64 * prev) / (k + 1) as f64;
        prev = cur;
        cur = next;
    }
    cur
}

/// Coefficient of `(−t)^ℓ` in `√(1 + 2xt + t²)` for `ℓ ≥ 2`:
/// `(P_{ℓ−2}(x) − P_ℓ(x)) / (2ℓ − 1)`.
pub fn sqrt_series_coeff(ell: usize, x: f64) -> f64 {
    assert!(ell >= 2, "series coefficient defined for ell >= 2");
    (legendre(ell - 2, x) - legendre(ell, x)) / (2 * ell - 1) as f64
}

/// Degree-`ℓ` term of the expansion of `‖r̂ + δ‖`, given `x = r̂ᵀδ̂` and `t = ‖δ‖`.
fn series_term(ell: usize, x: f64, t: f64) -> f64 {
    match ell {
        0 => 1.0,
        1 => x * t,
        _ => {
            let sign = if ell.is_multiple_of(2) { 1.0 } else { -1.0 };
            sign * sqrt_series_coeff(ell, x) * t.powi(ell as i32)
        }
    }
}

fn cosine_and_norm(r_hat: &Vector3<f64>, delta: &Vector3<f64>) -> (f64, f64) {
    let t = delta.norm();
    if t == 0.0 {
        (0.0, 0.0)
    } else {
        ((r_hat.dot(delta) / t).clamp(-1.0, 1.0), t)
    }
}

/// Degree-`L` Taylor polynomial `g_L(δ)` of `g(δ) = ‖r̂ + δ‖`.
pub fn g_taylor(degree: usize, r_hat: &Vector3<f64>, delta: &Vector3<f64>) -> f64 {
    let (x, t) = cosine_and_norm(r_hat, delta);
    if t == 0.0 {
        return 1.0;
    }
    (0..=degree).map(|ell| series_term(ell, x, t)).sum()
}

/// Normalized offset `δ` between transmit antenna `n_t` and receive antenna `n_r`.
pub fn delta(spec: &ArraySpec, pose: &Pose, n_t: [usize; 2], n_r: [usize; 2]) -> Vector3<f64> {
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
    (pose.rotation * local - t) / pose.distance()
}

/// Phase of the degree-`L` wavefront model at lattice index `n`, in cycles:
/// `−(D/λc)·g_L(δ(n))·(1 + df(n_f − (N_f−1)/2))`.
pub fn taylor_phase_cycles(spec: &ArraySpec, pose: &Pose, degree: usize, n: &MultiIndex) -> f64 {
    let d = delta(spec, pose, [n[2], n[3]], [n[0], n[1]]);
    -pose.distance() / spec.wavelength()
        * g_taylor(degree, &pose.direction(), &d)
        * spec.frequency_scale(n[4])
}

/// The multi-indices kept in a polynomial-phase model.
///
/// Spatial components (dimensions 0..4) have total degree at most `L`, with
/// zeros on singleton dimensions; the frequency component is `{0, 1}` when the
/// lattice has more than one frequency. Degrees are stored in descending
/// order: total degree first, then lexicographically.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DegreeSet {
    max_degree: usize,
    shape: Shape,
    degrees: Vec<MultiIndex>,
    spatial_cardinality: usize,
}

impl DegreeSet {
    pub fn build(max_degree: usize, spec: &ArraySpec) -> Result<Self> {
        Self::for_shape(max_degree, spec.shape())
    }

    /// Degree set for an arbitrary lattice shape.
    ///
    /// Fails when a non-singleton spatial dimension has fewer than `L + 1`
    /// samples, since the basis would then be overloaded.
    pub fn for_shape(max_degree: usize, shape: Shape) -> Result<Self> {
        if shape.contains(&0) {
            return Err(Error::InvalidSpec(format!("empty lattice {shape:?}")));
        }
        for (dim, &n) in shape.iter().enumerate().take(4) {
            if n > 1 && n <= max_degree {
                return Err(Error::DegreeTooHigh {
                    degree: max_degree,
                    dim,
                    needed: max_degree + 1,
                    available: n,
                });
            }
        }
        let caps: [usize; 4] = std::array::from_fn(|d| if shape[d] > 1 { max_degree } else { 0 });
        let mut spatial = Vec::new();
        for a in 0..=caps[0] {
            for b in 0..=caps[1].min(max_degree - a) {
                for c in 0..=caps[2].min(max_degree - a - b) {
                    for e in 0..=caps[3].min(max_degree - a - b - c) {
                        spatial.push([a, b, c, e]);
                    }
                }
            }
        }
        let freq_max = usize::from(shape[4] > 1);
        let mut degrees: Vec<MultiIndex> = spatial
            .iter()
            .flat_map(|s| (0..=freq_max).map(move |f| [s[0], s[1], s[2], s[3], f]))
            .collect();
        degrees.sort_by(|a, b| (total_degree(b), b).cmp(&(total_degree(a), a)));
        Ok(Self {
            max_degree,
            shape,
            spatial_cardinality: spatial.len(),
            degrees,
        })
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    /// Multi-indices in descending order.
    pub fn degrees(&self) -> &[MultiIndex] {
        &self.degrees
    }

    pub fn len(&self) -> usize {
        self.degrees.len()
    }

    pub fn is_empty(&self) -> bool {
        self.degrees.is_empty()
    }

    /// `|𝓛|`, the number of spatial multi-indices.
    pub fn spatial_cardinality(&self) -> usize {
        self.spatial_cardinality
    }

    pub fn position(&self, m: &MultiIndex) -> Option<usize> {
        self.degrees.iter().position(|d| d == m)
    }

    /// Largest degree used along each dimension.
    pub fn max_per_dimension(&self) -> [usize; RANK] {
        let mut out = [0; RANK];
        for m in &self.degrees {
            for d in 0..RANK {
                out[d] = out[d].max(m[d]);
            }
        }
        out
    }
}

/// Multivariate polynomial phase `x(n) = Σ_m a_m p_m(n)` in cycles.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyPhaseModel {
    degrees: DegreeSet,
    coefficients: Vec<f64>,
}

impl PolyPhaseModel {
    /// `coefficients[i]` belongs to `degrees.degrees()[i]`.
    pub fn new(degrees: DegreeSet, coefficients: Vec<f64>) -> Result<Self> {
        if coefficients.len() != degrees.len() {
            return Err(Error::Config(format!(
                "{} coefficients for {} degrees",
                coefficients.len(),
                degrees.len()
            )));
        }
        for m in degrees.degrees() {
            if !contained(m, &degrees.shape()) {
                return Err(Error::NotContained {
                    m: *m,
                    shape: degrees.shape(),
                });
            }
        }
        Ok(Self {
            degrees,
            coefficients,
        })
    }

    pub fn zeros(degrees: DegreeSet) -> Self {
        let coefficients = vec![0.0; degrees.len()];
        Self {
            degrees,
            coefficients,
        }
    }

    pub fn degrees(&self) -> &DegreeSet {
        &self.degrees
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn shape(&self) -> Shape {
        self.degrees.shape()
    }

    /// Coefficient of `p_m`; zero outside the degree set.
    pub fn coefficient(&self, m: &MultiIndex) -> f64 {
        self.degrees
            .position(m)
            .map_or(0.0, |i| self.coefficients[i])
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, f64)> + '_ {
        self.degrees
            .degrees()
            .iter()
            .zip(self.coefficients.iter().copied())
    }

    /// `x(n)` in cycles.
    pub fn phase_cycles(&self, n: &MultiIndex) -> f64 {
        self.terms()
            .map(|(m, a)| a * crate::basis::basis_value(m, n))
            .sum()
    }

    /// Phase in cycles at every lattice point, in storage order.
    pub fn phase_field(&self) -> Vec<f64> {
        let shape = self.shape();
        let tables = BinomialTables::new(&self.degrees.max_per_dimension(), &shape);
        indices(shape)
            .map(|n| {
                self.terms()
                    .map(|(m, a)| a * tables.eval(m, &n))
                    .sum::<f64>()
            })
            .collect()
    }

    /// `exp(j2π·x(n))` over the full lattice.
    pub fn synthesize(&self) -> ChannelTensor {
        let values = self
            .phase_field()
            .into_iter()
            .map(|x| Complex64::from_polar(1.0, 2.0 * PI * x.rem_euclid(1.0)))
            .collect();
        ChannelTensor::new(self.shape(), values).expect("shape from degree set")
    }
}

/// Cached `C(n, k)` for `n` below the lattice extent and `k` up to the model degree.
pub(crate) struct BinomialTables {
    // tables[d][k][n]
    tables: [Vec<Vec<f64>>; RANK],
}

impl BinomialTables {
    pub(crate) fn new(max_degree: &[usize; RANK], shape: &Shape) -> Self {
        Self {
            tables: std::array::from_fn(|d| {
                (0..=max_degree[d])
                    .map(|k| {
                        (0..shape[d])
                            .map(|n| binom_general(n as i64, k as i64))
                            .collect()
                    })
                    .collect()
            }),
        }
    }

    pub(crate) fn eval(&self, m: &MultiIndex, n: &MultiIndex) -> f64 {
        (0..RANK).map(|d| self.tables[d][m[d]][n[d]]).product()
    }
}

/// Ground-truth polynomial coefficients of the degree-`L` wavefront model.
///
/// The phase polynomial is sampled on the box `Π_d [m_max_d + 1]` and the
/// binomial-basis coefficients are read off as forward differences at the
/// origin, which is an exact triangular solve of the basis system.
pub fn coefficients_from_geometry(
    spec: &ArraySpec,
    pose: &Pose,
    degree: usize,
) -> Result<PolyPhaseModel> {
    spec.validate()?;
    let degrees = DegreeSet::build(degree, spec)?;
    let extent: Shape = degrees.max_per_dimension().map(|m| m + 1);
    let samples: Vec<f64> = indices(extent)
        .map(|n| taylor_phase_cycles(spec, pose, degree, &n))
        .collect();
    let coefficients = degrees
        .degrees()
        .iter()
        .map(|m| mixed_forward_difference(&samples, &extent, m))
        .collect();
    PolyPhaseModel::new(degrees, coefficients)
}

/// `Δ^m f(0)` for samples of `f` on the box `[extent]`.
fn mixed_forward_difference(samples: &[f64], extent: &Shape, m: &MultiIndex) -> f64 {
    // Δ^m f(0) = Σ_{k ≤ m} Π_d (−1)^{m_d − k_d} C(m_d, k_d) f(k)
    let sub: Shape = m.map(|x| x + 1);
    indices(sub)
        .map(|k| {
            let weight: f64 = (0..RANK)
                .map(|d| {
                    let sign = if (m[d] - k[d]).is_multiple_of(2) { 1.0 } else { -1.0 };
                    sign * binom_general(m[d] as i64, k[d] as i64)
                })
                .product();
            weight * samples[crate::lattice::offset(extent, &k)]
        })
        .sum()
}

/// Approximate channel `h̃(n) = exp(j2π·Σ a_m p_m(n))`.
pub fn approx_channel(model: &PolyPhaseModel) -> ChannelTensor {
    model.synthesize()
}

/// Worst-case phase error (radians) of the dominant truncated term for a
/// degree-`L` model, `L ∈ {1, 2, 3}`.
pub fn truncation_bound(
    degree: usize,
    distance: f64,
    wavelength: f64,
    delta_norm: f64,
) -> Result<f64> {
    let scale = distance / wavelength;
    match degree {
        1 => Ok(PI * scale * delta_norm.powi(2)),
        2 => Ok(2.0 * PI / (3.0 * 3f64.sqrt()) * scale * delta_norm.powi(3)),
        3 => Ok(PI / 4.0 * scale * delta_norm.powi(4)),
        other => Err(Error::UnsupportedDegree(other)),
    }
}

/// Phase (radians) of the lowest-degree term dropped by a degree-`L` model.
pub fn dominant_truncation_error(
    degree: usize,
    distance: f64,
    wavelength: f64,
    r_hat: &Vector3<f64>,
    delta: &Vector3<f64>,
) -> f64 {
    let (x, t) = cosine_and_norm(r_hat, delta);
    2.0 * PI * distance / wavelength * series_term(degree + 1, x, t).abs()
}

/// `2(L_t + L_r)²/λ`.
pub fn fraunhofer_distance(tx_aperture: f64, rx_aperture: f64, wavelength: f64) -> f64 {
    2.0 * (tx_aperture + rx_aperture).powi(2) / wavelength
}
