//! Correlation measures built on the density-matrix layer: cumulant blocks,
//! von Neumann entropies of normalized spectra, and the two-sided
//! subadditivity gap between one- and two-particle entropies.
//!
//! Entropies use the natural logarithm. Spectra are normalized by their
//! trace before weighing, so the reported numbers are entropies of unit
//! probability distributions regardless of particle-number prefactors.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::rdm::{one_rdm, one_rdm_channel, two_rdm_blocks, PairKind, SpinChannel, TwoRDMBlock};
use crate::solver::CIVector;

/// Weights at or below this are treated as exact zeros inside entropies.
pub const EIG_FLOOR: f64 = 1e-14;

/// Maximum negative eigenvalue tolerated before a spectrum is rejected.
const NEG_EIG_TOL: f64 = -1e-8;

/// Connected part of a two-particle block, with the ½ pair-normalization
/// folded in: the αα cumulant subtracts the antisymmetrized density product,
/// the αβ cumulant the plain product.
#[derive(Debug, Clone)]
pub struct CumulantBlock {
    pub kind: PairKind,
    pub norb: usize,
    pub t: DMatrix<f64>,
}

impl CumulantBlock {
    pub fn get(&self, i: usize, k: usize, j: usize, l: usize) -> f64 {
        self.t[(i * self.norb + k, j * self.norb + l)]
    }
}

/// αα and αβ cumulants of a normalized real-amplitude state.
pub fn cumulant_blocks(c: &CIVector) -> Result<(CumulantBlock, CumulantBlock)> {
    let da = one_rdm_channel(c, SpinChannel::Alpha)?;
    let db = one_rdm_channel(c, SpinChannel::Beta)?;
    let (aa, ab) = two_rdm_blocks(c)?;
    let n = aa.norb;
    let mut taa = DMatrix::zeros(n * n, n * n);
    let mut tab = DMatrix::zeros(n * n, n * n);
    for i in 0..n {
        for k in 0..n {
            for j in 0..n {
                for l in 0..n {
                    let wedge = da[(i, j)] * da[(k, l)] - da[(i, l)] * da[(k, j)];
                    taa[(i * n + k, j * n + l)] = 0.5 * aa.get(i, k, j, l) - 0.5 * wedge;
                    tab[(i * n + k, j * n + l)] =
                        0.5 * ab.get(i, k, j, l) - 0.5 * da[(i, j)] * db[(k, l)];
                }
            }
        }
    }
    Ok((
        CumulantBlock { kind: PairKind::AlphaAlpha, norb: n, t: taa },
        CumulantBlock { kind: PairKind::AlphaBeta, norb: n, t: tab },
    ))
}

pub fn frobenius_norm(block: &CumulantBlock) -> f64 {
    block.t.norm()
}

fn spectrum_entropy(evals: &[f64]) -> Result<(f64, f64)> {
    let mut tr = 0.0;
    for &w in evals {
        if w < NEG_EIG_TOL {
            return Err(Error::InvalidInput(format!(
                "spectrum has a negative eigenvalue {w:.3e}"
            )));
        }
        tr += w.max(0.0);
    }
    if tr <= EIG_FLOOR {
        return Err(Error::InvalidInput("spectrum has vanishing trace".into()));
    }
    let mut s = 0.0;
    let mut purity = 0.0;
    for &w in evals {
        let p = w.max(0.0) / tr;
        purity += p * p;
        if p > EIG_FLOOR {
            s -= p * p.ln();
        }
    }
    Ok((s, purity))
}

/// Entropy of the trace-normalized pair spectrum of a two-particle block.
pub fn pair_entropy(block: &TwoRDMBlock) -> Result<f64> {
    let evals: Vec<f64> = block.t.clone().symmetric_eigenvalues().iter().copied().collect();
    Ok(spectrum_entropy(&evals)?.0)
}

/// Entropy and purity of the occupation distribution f/Nα of a one-body
/// density.
pub fn one_body_entropy(d: &DMatrix<f64>) -> Result<(f64, f64)> {
    let n = d.nrows();
    if d.ncols() != n {
        return Err(Error::DimensionMismatch("density matrix must be square".into()));
    }
    let sym = DMatrix::from_fn(n, n, |i, j| 0.5 * (d[(i, j)] + d[(j, i)]));
    let evals: Vec<f64> = sym.symmetric_eigenvalues().iter().copied().collect();
    spectrum_entropy(&evals)
}

/// Both forms of the entropy inequality 2S¹ − S¹² ≥ ln(2/(1−x)), with
/// x the purity (first slot) and x = e^{−S¹} (second, always the looser
/// floor). Positive gaps mean the inequality holds with room to spare.
pub fn carlen_lieb_check(s1: f64, s12: f64, purity: f64) -> (f64, f64) {
    let lhs = 2.0 * s1 - s12;
    let gap1 = lhs - (2.0 / (1.0 - purity)).ln();
    let gap2 = lhs - (2.0 / (1.0 - (-s1).exp())).ln();
    (gap1, gap2)
}

/// Entropy summary of a state. Channels that carry no pairs stay `None`:
/// the αα entries need at least two α electrons, the αβ entries at least
/// one electron of each spin.
#[derive(Debug, Clone)]
pub struct EntropyReport {
    pub s1: f64,
    pub purity: f64,
    pub s_aa: Option<f64>,
    pub s_ab: Option<f64>,
    /// Single-determinant baseline ln(Nα(Nα−1)/2).
    pub s0_aa: Option<f64>,
    /// Single-determinant baseline ln(NαNβ).
    pub s0_ab: Option<f64>,
    pub gap1: Option<f64>,
    pub gap2: Option<f64>,
}

pub fn entropy_report(c: &CIVector) -> Result<EntropyReport> {
    let d = one_rdm(c)?;
    let (s1, purity) = one_body_entropy(&d)?;
    let (aa, ab) = two_rdm_blocks(c)?;
    let (na, nb) = (c.space.na, c.space.nb);
    let s_aa = if na >= 2 { Some(pair_entropy(&aa)?) } else { None };
    let s_ab = if na >= 1 && nb >= 1 { Some(pair_entropy(&ab)?) } else { None };
    let s0_aa = if na >= 2 { Some(((na * (na - 1) / 2) as f64).ln()) } else { None };
    let s0_ab = if na >= 1 && nb >= 1 { Some(((na * nb) as f64).ln()) } else { None };
    let (gap1, gap2) = match s_aa {
        Some(s12) => {
            let (g1, g2) = carlen_lieb_check(s1, s12, purity);
            (Some(g1), Some(g2))
        }
        None => (None, None),
    };
    Ok(EntropyReport { s1, purity, s_aa, s_ab, s0_aa, s0_ab, gap1, gap2 })
}
