//! A closed-form benchmark state with every measure known exactly.
//!
//! Six orbitals, three electrons of each spin, and the β occupation forced
//! to be the complement of the α occupation in every determinant. With the
//! right relative phases the twenty determinants add up to the maximum-spin
//! S = 3, M = 0 state: one-body occupations all one half, flat pair
//! spectra, and both subadditivity gaps exactly zero. The `kappa7` tag is
//! the interface name this reference goes by.

use std::sync::Arc;

use num_complex::Complex64;

use crate::detspace::DetSpace;
use crate::error::Result;
use crate::solver::CIVector;

/// Sign of the permutation that sorts the concatenation of two disjoint
/// ascending orbital lists.
fn merge_parity(a: &[usize], b: &[usize]) -> f64 {
    let mut inversions = 0usize;
    for &x in a {
        for &y in b {
            if x > y {
                inversions += 1;
            }
        }
    }
    if inversions % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// The complement-occupation superposition on (6 orbitals, 3α, 3β).
///
/// Each determinant pairs an α string with the β string occupying exactly
/// the other three orbitals; the amplitude is the merge parity over √20.
/// That phase choice is what lines the determinants up into a single spin
/// multiplet instead of an S-mixed superposition.
pub fn build_kappa7_state() -> Result<CIVector> {
    let space = Arc::new(DetSpace::new(6, 3, 3)?);
    let mut c = CIVector::zero(space.clone());
    let full = (1u64 << 6) - 1;
    let w = 1.0 / 20.0f64.sqrt();
    for (ia, sa) in space.astrings.iter().enumerate() {
        let sb = crate::detspace::SpinString { bits: full & !sa.bits };
        let ib = space.b_address(sb)?;
        let sign = merge_parity(&sa.occ(), &sb.occ());
        let at = c.idx(ia, ib);
        c.amp[at] = Complex64::new(sign * w, 0.0);
    }
    debug_assert!((c.norm() - 1.0).abs() < 1e-14);
    Ok(c)
}

/// Exact values every pipeline stage must reproduce on the benchmark state.
#[derive(Debug, Clone, Copy)]
pub struct Kappa7Reference {
    pub s1: f64,
    pub purity: f64,
    pub s_aa: f64,
    pub s_ab: f64,
    pub s0_aa: f64,
    pub s0_ab: f64,
    pub gap1: f64,
    pub gap2: f64,
    pub spin_squared: f64,
    pub cumulant_norm_aa: f64,
    pub cumulant_norm_ab: f64,
    /// Number of nonzero pair eigenvalues in each block.
    pub pair_rank: usize,
    /// The flat raw αα pair eigenvalue (trace 6 spread over 15 states).
    pub raw_eigenvalue_aa: f64,
    /// The flat raw αβ pair eigenvalue (trace 9 spread over 15 states).
    pub raw_eigenvalue_ab: f64,
}

pub fn kappa7_reference() -> Kappa7Reference {
    Kappa7Reference {
        s1: 6.0f64.ln(),
        purity: 1.0 / 6.0,
        s_aa: 15.0f64.ln(),
        s_ab: 15.0f64.ln(),
        s0_aa: 3.0f64.ln(),
        s0_ab: 9.0f64.ln(),
        gap1: 0.0,
        gap2: 0.0,
        spin_squared: 12.0,
        cumulant_norm_aa: 15.0f64.sqrt() / 20.0,
        cumulant_norm_ab: 315.0f64.sqrt() / 20.0,
        pair_rank: 15,
        raw_eigenvalue_aa: 0.4,
        raw_eigenvalue_ab: 0.6,
    }
}
