//! Classical vs quantum iteration counts.
//!
//! A sequential search over `s_i` initial states of depth `d` costs
//! `C = s_i · d` rule applications; amplitude amplification over an `m`-qubit
//! register costs `Q = √(2^m) · d` oracle steps. Their ratio `s_i / √(2^m)`
//! favours the quantum search exactly when `m < log₂ s_i²`.

use std::ops::RangeInclusive;

use num_bigint::BigUint;
use rayon::prelude::*;

use crate::csvutil::{field, read_rows, write_rows};
use crate::error::Result;
use crate::operator::ceil_log2;

/// `C = s_i · d`.
pub fn classical_iterations(s_i: u64, d: u64) -> u64 {
    s_i * d
}

/// `Q = √(2^m) · d`.
pub fn quantum_iterations(m: u32, d: u64) -> f64 {
    sqrt_pow2(m) * d as f64
}

fn sqrt_pow2(m: u32) -> f64 {
    2f64.powi(m as i32).sqrt()
}

/// `C / Q` with the depth cancelled: `s_i / √(2^m)`.
pub fn ratio(s_i: u64, m: u32) -> f64 {
    s_i as f64 / sqrt_pow2(m)
}

/// `C / Q` when the classical and quantum runs need different depths.
pub fn ratio_with_depths(s_i: u64, d_classical: u64, m: u32, d_quantum: u64) -> f64 {
    classical_iterations(s_i, d_classical) as f64 / quantum_iterations(m, d_quantum)
}

/// Inclusive range of register widths worth using:
/// `⌈log₂ s_i⌉ ≤ m ≤ ⌊log₂ s_i²⌋`.
pub fn bounds_for_m(s_i: u64) -> (u32, u32) {
    assert!(s_i >= 1, "s_i must be positive");
    let sq = s_i as u128 * s_i as u128;
    (ceil_log2(s_i), 127 - sq.leading_zeros())
}

/// `⌈log₂ |R|^d⌉`: bits needed to tell apart every rule sequence of length
/// `d`.
pub fn trace_register_bits(r_count: u64, d: u32) -> u64 {
    let paths = BigUint::from(r_count).pow(d);
    if paths <= BigUint::from(1u32) {
        0
    } else {
        (paths - 1u32).bits()
    }
}

/// Cost of the hierarchical search relative to ours,
/// `√(2^p) / √(2^(n+p+1))`, which reduces to `√(1 / 2^(n+1))`.
pub fn hierarchical_comparison(n: u32) -> f64 {
    (1.0 / 2f64.powi(n as i32 + 1)).sqrt()
}

/// The unreduced form of [`hierarchical_comparison`].
pub fn hierarchical_comparison_with(n: u32, p: u32) -> f64 {
    sqrt_pow2(p) / sqrt_pow2(n + p + 1)
}

/// Whether the phase qubit `y` counts towards `m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BitConvention {
    /// `m = n + p`.
    #[default]
    ExcludeY,
    /// `m = n + p + 1`.
    IncludeY,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RatioModel {
    pub s_i: u64,
    pub d: u64,
    /// Bits encoding the initial states.
    pub n: u32,
    /// Bits of the trace register.
    pub p: u32,
}

impl RatioModel {
    /// `n = ⌈log₂ s_i⌉` and `p` sized for `r_count` rules at depth `d`.
    pub fn derived(s_i: u64, d: u64, r_count: u64) -> Self {
        RatioModel {
            s_i,
            d,
            n: ceil_log2(s_i),
            p: trace_register_bits(r_count, d as u32) as u32,
        }
    }

    pub fn m(&self, convention: BitConvention) -> u32 {
        match convention {
            BitConvention::ExcludeY => self.n + self.p,
            BitConvention::IncludeY => self.n + self.p + 1,
        }
    }

    pub fn classical(&self) -> u64 {
        classical_iterations(self.s_i, self.d)
    }

    pub fn quantum(&self, convention: BitConvention) -> f64 {
        quantum_iterations(self.m(convention), self.d)
    }

    pub fn ratio(&self, convention: BitConvention) -> f64 {
        ratio(self.s_i, self.m(convention))
    }

    pub fn within_bounds(&self, convention: BitConvention) -> bool {
        let (lo, hi) = bounds_for_m(self.s_i);
        (lo..=hi).contains(&self.m(convention))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceRow {
    pub s_i: u64,
    pub m: u32,
    pub classical: u64,
    pub quantum: f64,
    pub ratio: f64,
}

/// One row for each `s_i` in `range` and each `m` within its bounds.
pub fn ratio_surface(range: RangeInclusive<u64>, d: u64) -> Vec<SurfaceRow> {
    let s: Vec<u64> = range.collect();
    s.par_iter()
        .flat_map_iter(|&s_i| {
            let (lo, hi) = bounds_for_m(s_i);
            (lo..=hi).map(move |m| SurfaceRow {
                s_i,
                m,
                classical: classical_iterations(s_i, d),
                quantum: quantum_iterations(m, d),
                ratio: ratio(s_i, m),
            })
        })
        .collect()
}

const SURFACE_HEADER: [&str; 5] = ["s_i", "m", "C", "Q", "ratio"];

pub fn surface_to_csv(rows: &[SurfaceRow]) -> String {
    write_rows(
        &SURFACE_HEADER,
        rows.iter().map(|r| {
            [
                r.s_i.to_string(),
                r.m.to_string(),
                r.classical.to_string(),
                r.quantum.to_string(),
                r.ratio.to_string(),
            ]
        }),
    )
}

pub fn surface_from_csv(text: &str) -> Result<Vec<SurfaceRow>> {
    const WHAT: &str = "ratio surface";
    read_rows(WHAT, text, &SURFACE_HEADER)?
        .iter()
        .map(|rec| {
            Ok(SurfaceRow {
                s_i: field(WHAT, rec, 0)?,
                m: field(WHAT, rec, 1)?,
                classical: field(WHAT, rec, 2)?,
                quantum: field(WHAT, rec, 3)?,
                ratio: field(WHAT, rec, 4)?,
            })
        })
        .collect()
}
