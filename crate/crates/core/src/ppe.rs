//! Multidimensional polynomial phase estimation.
//!
//! Coefficients are estimated one multi-index at a time, highest degree
//! first. For each `m` the working signal is differenced `m_d` times along
//! every dimension `d`, which turns the `p_m` component into a constant phase
//! `2π·a_m` and removes every basis member not dominating `m`. A weighted
//! circular average of the differenced lattice gives `â_m`, and the estimated
//! component is then peeled off before moving to the next degree.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::basis::rebase_coefficients;
use crate::lattice::{
    contained, indices, strides, volume, ChannelTensor, LatticeSignal, MultiIndex, Shape, RANK,
};
use crate::wavefront::{BinomialTables, DegreeSet, PolyPhaseModel};
use crate::{Error, Result};

pub use crate::basis::binom_general;

/// First-order phase difference `s(n + e_d)·conj(s(n))` along dimension `d`.
pub fn diff(signal: &LatticeSignal, d: usize) -> Result<LatticeSignal> {
    let shape = signal.shape();
    if shape[d] < 2 {
        return Err(Error::DimensionExhausted { dim: d });
    }
    let mut out_shape = shape;
    out_shape[d] -= 1;
    let in_strides = strides(&shape);
    let step = in_strides[d];
    let src = signal.values();
    let values = indices(out_shape)
        .map(|n| {
            let at: usize = n.iter().zip(in_strides).map(|(i, s)| i * s).sum();
            src[at + step] * src[at].conj()
        })
        .collect();
    ChannelTensor::new(out_shape, values)
}

/// `𝒟^m = 𝒟_0^{m_0} ··· 𝒟_4^{m_4}`.
pub fn diff_multi(signal: &LatticeSignal, m: &MultiIndex) -> Result<LatticeSignal> {
    if !contained(m, &signal.shape()) {
        return Err(Error::NotContained {
            m: *m,
            shape: signal.shape(),
        });
    }
    let mut out = signal.clone();
    for (d, &times) in m.iter().enumerate() {
        for _ in 0..times {
            out = diff(&out, d)?;
        }
    }
    Ok(out)
}

/// Averaging weights `u_m(n)` over the differenced lattice `[N − m]`.
///
/// Separable: `u_m(n) = Π_d C(n_d+m_d, m_d)·C(N_d−n_d−1, m_d) / C(N_d+m_d, 2m_d+1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightTable {
    m: MultiIndex,
    shape: Shape,
    factors: [Vec<f64>; RANK],
}

impl WeightTable {
    pub fn degree(&self) -> MultiIndex {
        self.m
    }

    /// Shape of the differenced lattice, `N − m`.
    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn get(&self, n: &MultiIndex) -> f64 {
        (0..RANK).map(|d| self.factors[d][n[d]]).product()
    }

    /// All weights in storage order.
    pub fn to_vec(&self) -> Vec<f64> {
        indices(self.shape).map(|n| self.get(&n)).collect()
    }
}

pub fn weights(m: &MultiIndex, shape: &Shape) -> Result<WeightTable> {
    if !contained(m, shape) {
        return Err(Error::NotContained {
            m: *m,
            shape: *shape,
        });
    }
    let out: Shape = std::array::from_fn(|d| shape[d] - m[d]);
    let factors = std::array::from_fn(|d| {
        let (n_d, m_d) = (shape[d] as i64, m[d] as i64);
        let denom = binom_general(n_d + m_d, 2 * m_d + 1);
        (0..out[d] as i64)
            .map(|n| binom_general(n + m_d, m_d) * binom_general(n_d - n - 1, m_d) / denom)
            .collect()
    });
    Ok(WeightTable {
        m: *m,
        shape: out,
        factors,
    })
}

fn unit(z: Complex64) -> Complex64 {
    let r = z.norm();
    if r == 0.0 {
        Complex64::new(0.0, 0.0)
    } else {
        z / r
    }
}

/// Weighted circular average `μ_m(s)` of a signal already differenced by `m`.
///
/// The plain sum of unit-modulus samples fixes a reference direction; the
/// `u_m`-weighted mean of each sample's wrapped phase around that reference
/// then refines it.
pub fn circ_avg(signal: &LatticeSignal, m: &MultiIndex) -> Result<Complex64> {
    let full: Shape = std::array::from_fn(|d| signal.shape()[d] + m[d]);
    let table = weights(m, &full)?;
    circ_avg_with(signal, &table)
}

pub fn circ_avg_with(signal: &LatticeSignal, table: &WeightTable) -> Result<Complex64> {
    if signal.shape() != table.shape() {
        return Err(Error::ShapeMismatch {
            left: signal.shape(),
            right: table.shape(),
        });
    }
    let pilot: Complex64 = signal.values().iter().map(|&s| unit(s)).sum();
    if pilot.norm() == 0.0 || !pilot.norm().is_finite() {
        return Err(Error::ZeroSignal);
    }
    let reference = pilot.conj();
    let correction: f64 = signal
        .indexed()
        .map(|(n, s)| table.get(&n) * (s * reference).arg())
        .sum();
    Ok(unit(pilot) * Complex64::from_polar(1.0, correction))
}

/// Estimates the coefficients of `degrees` from `y`.
///
/// Each `â_m` lies in `(−1/2, 1/2]`: coefficients are identified modulo one
/// cycle, which is harmless for the reconstructed channel since every `p_m`
/// is integer-valued on the lattice.
pub fn estimate(y: &LatticeSignal, degrees: &DegreeSet) -> Result<PolyPhaseModel> {
    estimate_with(y, degrees, |_, _, _| {})
}

/// As [`estimate`], calling `observe(m, â_m, working_signal)` after each peel.
pub fn estimate_with(
    y: &LatticeSignal,
    degrees: &DegreeSet,
    mut observe: impl FnMut(&MultiIndex, f64, &LatticeSignal),
) -> Result<PolyPhaseModel> {
    if degrees.shape() != y.shape() {
        return Err(Error::ShapeMismatch {
            left: degrees.shape(),
            right: y.shape(),
        });
    }
    let shape = y.shape();
    let tables = BinomialTables::new(&degrees.max_per_dimension(), &shape);
    let mut work = y.clone();
    let mut coefficients = Vec::with_capacity(degrees.len());
    for m in degrees.degrees() {
        let differenced = diff_multi(&work, m)?;
        let mu = circ_avg(&differenced, m)?;
        let a = mu.arg() / (2.0 * PI);
        coefficients.push(a);
        if a != 0.0 {
            for (n, v) in indices(shape).zip(work.values_mut()) {
                let turns = (a * tables.eval(m, &n)).rem_euclid(1.0);
                *v *= Complex64::from_polar(1.0, -2.0 * PI * turns);
            }
        }
        observe(m, a, &work);
    }
    PolyPhaseModel::new(degrees.clone(), coefficients)
}

/// Channel estimate `exp(j2π·Σ â_m p_m(n))` over the model's full lattice.
pub fn reconstruct(model: &PolyPhaseModel) -> ChannelTensor {
    model.synthesize()
}

/// A strided sublattice `n = offset + stride·k` of a larger lattice.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Sublattice {
    pub full_shape: Shape,
    pub offsets: [usize; RANK],
    pub strides: [usize; RANK],
    pub shape: Shape,
}

impl Sublattice {
    pub fn new(
        full_shape: Shape,
        offsets: [usize; RANK],
        strides: [usize; RANK],
        shape: Shape,
    ) -> Result<Self> {
        for d in 0..RANK {
            if shape[d] == 0
                || strides[d] == 0
                || offsets[d] + strides[d] * (shape[d] - 1) >= full_shape[d]
            {
                return Err(Error::Config(format!(
                    "sublattice dimension {d} (offset {}, stride {}, {} samples) exceeds extent {}",
                    offsets[d], strides[d], shape[d], full_shape[d]
                )));
            }
        }
        Ok(Self {
            full_shape,
            offsets,
            strides,
            shape,
        })
    }

    pub fn full_index(&self, k: &MultiIndex) -> MultiIndex {
        std::array::from_fn(|d| self.offsets[d] + self.strides[d] * k[d])
    }

    /// Samples of `y` on the sublattice.
    pub fn extract(&self, y: &ChannelTensor) -> Result<ChannelTensor> {
        if y.shape() != self.full_shape {
            return Err(Error::ShapeMismatch {
                left: y.shape(),
                right: self.full_shape,
            });
        }
        Ok(ChannelTensor::from_fn(self.shape, |k| {
            y.get(self.full_index(&k))
        }))
    }

    pub fn len(&self) -> usize {
        volume(&self.shape)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Re-expresses a model fitted in sublattice coordinates on the full lattice.
///
/// Each `C(k_d, m_d)` with `k_d = (n_d − o_d)/s_d` is expanded exactly in the
/// binomial basis of `n_d`, so the result agrees with the fitted phase on the
/// sublattice and interpolates it elsewhere.
pub fn rebase_model(model: &PolyPhaseModel, sub: &Sublattice) -> Result<PolyPhaseModel> {
    if model.shape() != sub.shape {
        return Err(Error::ShapeMismatch {
            left: model.shape(),
            right: sub.shape,
        });
    }
    let full = DegreeSet::for_shape(model.degrees().max_degree(), sub.full_shape)?;
    let mut coefficients = vec![0.0; full.len()];
    for (m, b) in model.terms() {
        let conv: [Vec<f64>; RANK] =
            std::array::from_fn(|d| rebase_coefficients(m[d], sub.offsets[d], sub.strides[d]));
        let box_shape: Shape = m.map(|x| x + 1);
        for lower in indices(box_shape) {
            let weight: f64 = (0..RANK).map(|d| conv[d][lower[d]]).product();
            if weight == 0.0 {
                continue;
            }
            let slot = full.position(&lower).ok_or(Error::NotContained {
                m: lower,
                shape: sub.full_shape,
            })?;
            coefficients[slot] += b * weight;
        }
    }
    PolyPhaseModel::new(full, coefficients)
}

/// Estimates a degree-`L` model from sublattice samples and returns it on the
/// full lattice.
pub fn estimate_on_sublattice(
    obs: &ChannelTensor,
    sub: &Sublattice,
    max_degree: usize,
) -> Result<PolyPhaseModel> {
    if obs.shape() != sub.shape {
        return Err(Error::ShapeMismatch {
            left: obs.shape(),
            right: sub.shape,
        });
    }
    let degrees = DegreeSet::for_shape(max_degree, sub.shape)?;
    let local = estimate(obs, &degrees)?;
    rebase_model(&local, sub)
}
