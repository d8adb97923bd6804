//! Five-dimensional complex lattices.
//!
//! Dimension order is `(n_rx, n_ry, n_tx, n_ty, n_f)` and storage is
//! row-major in that order, so the frequency index varies fastest.

use num_complex::Complex64;

use crate::{Error, Result};

pub const RANK: usize = 5;

/// Extent of each lattice dimension.
pub type Shape = [usize; RANK];

/// A lattice position, or a degree multi-index.
pub type MultiIndex = [usize; RANK];

/// Complex samples on a 5-D integer lattice.
///
/// Used both for channels and for the intermediate signals of the
/// polynomial-phase estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelTensor {
    shape: Shape,
    values: Vec<Complex64>,
}

/// Alias used where the tensor is a generic lattice signal rather than a channel.
pub type LatticeSignal = ChannelTensor;

impl ChannelTensor {
    pub fn new(shape: Shape, values: Vec<Complex64>) -> Result<Self> {
        let expected = volume(&shape);
        if shape.contains(&0) || values.len() != expected {
            return Err(Error::ShapeLength {
                shape,
                expected,
                got: values.len(),
            });
        }
        Ok(Self { shape, values })
    }

    pub fn filled(shape: Shape, value: Complex64) -> Self {
        assert!(shape.iter().all(|&n| n > 0), "empty lattice {shape:?}");
        Self {
            shape,
            values: vec![value; volume(&shape)],
        }
    }

    pub fn from_fn(shape: Shape, mut f: impl FnMut(MultiIndex) -> Complex64) -> Self {
        assert!(shape.iter().all(|&n| n > 0), "empty lattice {shape:?}");
        let values = indices(shape).map(&mut f).collect();
        Self { shape, values }
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn get(&self, index: MultiIndex) -> Complex64 {
        self.values[offset(&self.shape, &index)]
    }

    pub fn set(&mut self, index: MultiIndex, value: Complex64) {
        let at = offset(&self.shape, &index);
        self.values[at] = value;
    }

    /// Pairs each sample with its multi-index, in storage order.
    pub fn indexed(&self) -> impl Iterator<Item = (MultiIndex, Complex64)> + '_ {
        indices(self.shape).zip(self.values.iter().copied())
    }

    /// Sum of squared magnitudes.
    pub fn energy(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum()
    }

    /// Multiplies every sample by `scale`.
    pub fn scaled(&self, scale: Complex64) -> Self {
        Self {
            shape: self.shape,
            values: self.values.iter().map(|v| v * scale).collect(),
        }
    }
}

/// Number of lattice points.
pub fn volume(shape: &Shape) -> usize {
    shape.iter().product()
}

/// Row-major strides.
pub fn strides(shape: &Shape) -> [usize; RANK] {
    let mut s = [1; RANK];
    for d in (0..RANK - 1).rev() {
        s[d] = s[d + 1] * shape[d + 1];
    }
    s
}

pub fn offset(shape: &Shape, index: &MultiIndex) -> usize {
    debug_assert!(
        index.iter().zip(shape).all(|(i, n)| i < n),
        "index {index:?} out of {shape:?}"
    );
    let s = strides(shape);
    index.iter().zip(s).map(|(i, s)| i * s).sum()
}

/// True when `m_d < n_d` for every dimension, i.e. `m ⊂ [N]`.
pub fn contained(m: &MultiIndex, shape: &Shape) -> bool {
    m.iter().zip(shape).all(|(m, n)| m < n)
}

pub fn total_degree(m: &MultiIndex) -> usize {
    m.iter().sum()
}

/// Iterates every multi-index of `[shape]` in row-major order.
pub fn indices(shape: Shape) -> Indices {
    Indices {
        shape,
        next: if shape.iter().all(|&n| n > 0) {
            Some([0; RANK])
        } else {
            None
        },
    }
}

#[derive(Debug, Clone)]
pub struct Indices {
    shape: Shape,
    next: Option<MultiIndex>,
}

impl Iterator for Indices {
    type Item = MultiIndex;

    fn next(&mut self) -> Option<MultiIndex> {
        let current = self.next?;
        let mut idx = current;
        let mut d = RANK;
        self.next = loop {
            if d == 0 {
                break None;
            }
            d -= 1;
            idx[d] += 1;
            if idx[d] < self.shape[d] {
                break Some(idx);
            }
            idx[d] = 0;
        };
        Some(current)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn indices_are_row_major() {
        let shape = [2, 1, 3, 1, 2];
        let all: Vec<_> = indices(shape).collect();
        assert_eq!(all.len(), 12);
        for (k, idx) in all.iter().enumerate() {
            assert_eq!(offset(&shape, idx), k);
        }
        assert_eq!(all[1], [0, 0, 0, 0, 1]);
        assert_eq!(all[2], [0, 0, 1, 0, 0]);
    }

    #[test]
    fn rejects_wrong_length() {
        let err = ChannelTensor::new([2, 1, 1, 1, 1], vec![Complex64::new(1.0, 0.0)]);
        assert!(matches!(err, Err(Error::ShapeLength { expected: 2, .. })));
    }

    #[test]
    fn containment() {
        assert!(contained(&[0, 0, 2, 0, 1], &[1, 1, 3, 1, 2]));
        assert!(!contained(&[0, 0, 3, 0, 0], &[1, 1, 3, 1, 2]));
    }
}
