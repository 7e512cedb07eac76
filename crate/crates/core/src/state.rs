//! Dense complex amplitude vectors over a composite `|x, y, z>` register.
//!
//! Basis indices are big-endian concatenations `x ‖ y ‖ z`, so `z` occupies
//! the least significant bits.

pub use num_complex::Complex64;
use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;

use crate::error::{Error, Result};

/// Dense simulation refuses registers wider than this.
pub const MAX_QUBITS: u32 = 22;

pub const NORM_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RegisterLayout {
    pub x_bits: u32,
    pub y_bits: u32,
    pub z_bits: u32,
}

impl RegisterLayout {
    pub fn new(x_bits: u32, y_bits: u32, z_bits: u32) -> Result<Self> {
        let layout = RegisterLayout { x_bits, y_bits, z_bits };
        if layout.total_bits() > MAX_QUBITS {
            return Err(Error::TooManyQubits {
                qubits: layout.total_bits(),
                limit: MAX_QUBITS,
            });
        }
        Ok(layout)
    }

    /// A single register of `bits` qubits.
    pub fn flat(bits: u32) -> Result<Self> {
        RegisterLayout::new(bits, 0, 0)
    }

    pub fn total_bits(&self) -> u32 {
        self.x_bits + self.y_bits + self.z_bits
    }

    pub fn dim(&self) -> usize {
        1usize << self.total_bits()
    }

    pub fn index(&self, x: usize, y: usize, z: usize) -> usize {
        debug_assert!(x < 1 << self.x_bits && y < 1 << self.y_bits && z < 1 << self.z_bits);
        (x << (self.y_bits + self.z_bits)) | (y << self.z_bits) | z
    }

    pub fn split(&self, index: usize) -> (usize, usize, usize) {
        let z = index & ((1 << self.z_bits) - 1);
        let y = (index >> self.z_bits) & ((1 << self.y_bits) - 1);
        let x = index >> (self.y_bits + self.z_bits);
        (x, y, z)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    layout: RegisterLayout,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    pub fn zero(layout: RegisterLayout) -> Self {
        StateVector {
            layout,
            amplitudes: vec![Complex64::new(0.0, 0.0); layout.dim()],
        }
    }

    pub fn basis(layout: RegisterLayout, index: usize) -> Result<Self> {
        if index >= layout.dim() {
            return Err(Error::DimensionMismatch {
                expected: layout.dim(),
                actual: index + 1,
            });
        }
        let mut v = StateVector::zero(layout);
        v.amplitudes[index] = Complex64::new(1.0, 0.0);
        Ok(v)
    }

    pub fn from_amplitudes(layout: RegisterLayout, amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != layout.dim() {
            return Err(Error::DimensionMismatch {
                expected: layout.dim(),
                actual: amplitudes.len(),
            });
        }
        Ok(StateVector { layout, amplitudes })
    }

    pub fn layout(&self) -> RegisterLayout {
        self.layout
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amplitudes
    }

    pub fn amplitude(&self, index: usize) -> Complex64 {
        self.amplitudes[index]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm_sqr() - 1.0).abs() <= NORM_TOLERANCE
    }

    /// Total probability of the basis states selected by `keep`.
    pub fn probability_where(&self, mut keep: impl FnMut(usize) -> bool) -> f64 {
        self.amplitudes
            .iter()
            .enumerate()
            .filter(|(i, _)| keep(*i))
            .map(|(_, a)| a.norm_sqr())
            .sum()
    }

    /// Draws a basis index with probability `|amp|^2`.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> usize {
        let dist = WeightedIndex::new(self.amplitudes.iter().map(|a| a.norm_sqr())).expect("state has nonzero norm");
        dist.sample(rng)
    }

    pub fn max_abs_diff(&self, other: &StateVector) -> f64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_split_round_trip() {
        let l = RegisterLayout::new(3, 1, 4).unwrap();
        for i in 0..l.dim() {
            let (x, y, z) = l.split(i);
            assert_eq!(l.index(x, y, z), i);
        }
        assert_eq!(l.index(1, 0, 0), 1 << 5);
        assert_eq!(l.index(0, 1, 0), 1 << 4);
    }

    #[test]
    fn qubit_cap() {
        assert!(RegisterLayout::new(20, 1, 1).is_ok());
        assert_eq!(
            RegisterLayout::new(20, 1, 2).unwrap_err(),
            Error::TooManyQubits { qubits: 23, limit: 22 }
        );
    }

    #[test]
    fn dimension_checks() {
        let l = RegisterLayout::flat(2).unwrap();
        assert!(StateVector::from_amplitudes(l, vec![Complex64::new(1.0, 0.0); 3]).is_err());
        assert!(StateVector::basis(l, 4).is_err());
        assert!(StateVector::basis(l, 3).unwrap().is_normalized());
    }
}
