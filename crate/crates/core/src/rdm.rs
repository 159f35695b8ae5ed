//! Reduced density matrices assembled from annihilated copies of the state.
//!
//! The two-particle blocks are built as Gram matrices: annihilating a pair
//! of orbitals maps the state into a smaller determinant space, and the
//! overlap of two such images is exactly the corresponding 2-RDM element.
//! That construction is manifestly positive semidefinite, which the pair
//! entropies downstream rely on.
//!
//! All entry points insist on normalized, real-amplitude states. Kicked
//! states are complex and only ever enter through overlaps, never through
//! density matrices.

use nalgebra::DMatrix;

use crate::detspace::{DetSpace, SpinString};
use crate::error::{Error, Result};
use crate::solver::CIVector;

/// Spin channel selector for one-body densities.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpinChannel {
    Alpha,
    Beta,
}

/// Which spin pair a two-particle block describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairKind {
    AlphaAlpha,
    AlphaBeta,
}

/// Two-particle density block over ordered orbital pairs.
///
/// Element (i,k,j,l) is ⟨c†_i c†_k c_l c_j⟩ with (i,j) in the first spin of
/// `kind` and (k,l) in the second; pairs are flattened row-major as i·n+k.
#[derive(Debug, Clone)]
pub struct TwoRDMBlock {
    pub kind: PairKind,
    pub norb: usize,
    pub na: usize,
    pub nb: usize,
    pub t: DMatrix<f64>,
}

impl TwoRDMBlock {
    pub fn get(&self, i: usize, k: usize, j: usize, l: usize) -> f64 {
        self.t[(i * self.norb + k, j * self.norb + l)]
    }

    pub fn trace(&self) -> f64 {
        self.t.trace()
    }

    /// Pair count the trace must reproduce: Nα(Nα−1) or NαNβ.
    pub fn expected_trace(&self) -> f64 {
        match self.kind {
            PairKind::AlphaAlpha => (self.na * self.na.saturating_sub(1)) as f64,
            PairKind::AlphaBeta => (self.na * self.nb) as f64,
        }
    }
}

/// Occupations (descending) and the orthogonal column basis that carries
/// the one-body density to diagonal form.
#[derive(Debug, Clone)]
pub struct NaturalOrbitals {
    pub f: Vec<f64>,
    pub u: DMatrix<f64>,
}

fn real_amplitudes(c: &CIVector) -> Result<Vec<f64>> {
    let norm = c.norm();
    if (norm - 1.0).abs() > 1e-8 {
        return Err(Error::InvalidInput(format!(
            "state must be normalized for density matrices (norm {norm:.3e})"
        )));
    }
    let im = c.max_abs_imag();
    if im > 1e-10 {
        return Err(Error::InvalidInput(format!(
            "density matrices are defined here for real amplitudes only (max |Im| {im:.3e})"
        )));
    }
    Ok(c.amp.iter().map(|a| a.re).collect())
}

/// ⟨c†_pσ c_qσ⟩ for one spin channel.
pub fn one_rdm_channel(c: &CIVector, channel: SpinChannel) -> Result<DMatrix<f64>> {
    let v = real_amplitudes(c)?;
    let space = &c.space;
    let n = space.norb;
    let nb_str = space.bstrings.len();
    let na_str = space.astrings.len();
    let mut d = DMatrix::zeros(n, n);
    match channel {
        SpinChannel::Alpha => {
            for (ja, sa) in space.astrings.iter().enumerate() {
                for e in crate::detspace::single_excitations(*sa, n) {
                    let ta = space.a_address(e.target)?;
                    let mut acc = 0.0;
                    for ib in 0..nb_str {
                        acc += v[ta * nb_str + ib] * v[ja * nb_str + ib];
                    }
                    d[(e.p, e.q)] += e.sign * acc;
                }
            }
        }
        SpinChannel::Beta => {
            for (jb, sb) in space.bstrings.iter().enumerate() {
                for e in crate::detspace::single_excitations(*sb, n) {
                    let tb = space.b_address(e.target)?;
                    let mut acc = 0.0;
                    for ia in 0..na_str {
                        acc += v[ia * nb_str + tb] * v[ia * nb_str + jb];
                    }
                    d[(e.p, e.q)] += e.sign * acc;
                }
            }
        }
    }
    Ok(d)
}

/// α-channel one-body density ⟨c†_p c_q⟩, trace Nα.
pub fn one_rdm(c: &CIVector) -> Result<DMatrix<f64>> {
    one_rdm_channel(c, SpinChannel::Alpha)
}

fn ann_alpha(from: &DetSpace, to: &DetSpace, v: &[f64], orb: usize) -> Result<Vec<f64>> {
    let nb_str = from.bstrings.len();
    let mut out = vec![0.0; to.dim()];
    for (ia, sa) in from.astrings.iter().enumerate() {
        if !sa.is_occ(orb) {
            continue;
        }
        let sign = sa.ann_sign(orb);
        let tgt = SpinString { bits: sa.bits & !(1u64 << orb) };
        let ta = to.a_address(tgt)?;
        for ib in 0..nb_str {
            out[ta * nb_str + ib] += sign * v[ia * nb_str + ib];
        }
    }
    Ok(out)
}

// β annihilation carries an extra (−1)^Nα from commuting past the whole α
// block; it is the same constant for every amplitude and cancels in every
// Gram product below, so it is dropped.
fn ann_beta(from: &DetSpace, to: &DetSpace, v: &[f64], orb: usize) -> Result<Vec<f64>> {
    let nb_from = from.bstrings.len();
    let nb_to = to.bstrings.len();
    let na_str = from.astrings.len();
    let mut out = vec![0.0; to.dim()];
    for (ib, sb) in from.bstrings.iter().enumerate() {
        if !sb.is_occ(orb) {
            continue;
        }
        let sign = sb.ann_sign(orb);
        let tgt = SpinString { bits: sb.bits & !(1u64 << orb) };
        let tb = to.b_address(tgt)?;
        for ia in 0..na_str {
            out[ia * nb_to + tb] += sign * v[ia * nb_from + ib];
        }
    }
    Ok(out)
}

/// Same-spin (αα) and opposite-spin (αβ) two-particle blocks.
pub fn two_rdm_blocks(c: &CIVector) -> Result<(TwoRDMBlock, TwoRDMBlock)> {
    let v = real_amplitudes(c)?;
    let space = &c.space;
    let n = space.norb;
    let (na, nb) = (space.na, space.nb);
    let npair = n * n;

    let aa_t = if na >= 2 {
        let mid = DetSpace::new(n, na - 1, nb)?;
        let sub = DetSpace::new(n, na - 2, nb)?;
        let mut rows = DMatrix::zeros(npair, sub.dim());
        for j in 0..n {
            let cj = ann_alpha(space, &mid, &v, j)?;
            for l in 0..n {
                if l == j {
                    continue;
                }
                let vjl = ann_alpha(&mid, &sub, &cj, l)?;
                for (col, val) in vjl.into_iter().enumerate() {
                    rows[(j * n + l, col)] = val;
                }
            }
        }
        &rows * rows.transpose()
    } else {
        DMatrix::zeros(npair, npair)
    };

    let ab_t = if na >= 1 && nb >= 1 {
        let mid = DetSpace::new(n, na - 1, nb)?;
        let sub = DetSpace::new(n, na - 1, nb - 1)?;
        let mut rows = DMatrix::zeros(npair, sub.dim());
        for j in 0..n {
            let cj = ann_alpha(space, &mid, &v, j)?;
            for l in 0..n {
                let vjl = ann_beta(&mid, &sub, &cj, l)?;
                for (col, val) in vjl.into_iter().enumerate() {
                    rows[(j * n + l, col)] = val;
                }
            }
        }
        &rows * rows.transpose()
    } else {
        DMatrix::zeros(npair, npair)
    };

    Ok((
        TwoRDMBlock { kind: PairKind::AlphaAlpha, norb: n, na, nb, t: aa_t },
        TwoRDMBlock { kind: PairKind::AlphaBeta, norb: n, na, nb, t: ab_t },
    ))
}

/// Diagonalizes a symmetric one-body density. Occupations come out in
/// descending order; each column's largest-magnitude entry is made positive
/// so repeated runs agree to the bit.
pub fn natural_orbitals(d: &DMatrix<f64>) -> Result<NaturalOrbitals> {
    let n = d.nrows();
    if d.ncols() != n {
        return Err(Error::DimensionMismatch("density matrix must be square".into()));
    }
    for i in 0..n {
        for j in 0..i {
            if (d[(i, j)] - d[(j, i)]).abs() > 1e-8 {
                return Err(Error::InvalidInput("density matrix is not symmetric".into()));
            }
        }
    }
    let sym = DMatrix::from_fn(n, n, |i, j| 0.5 * (d[(i, j)] + d[(j, i)]));
    let eig = nalgebra::SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap().then(a.cmp(&b))
    });
    let mut f = Vec::with_capacity(n);
    let mut u = DMatrix::zeros(n, n);
    for (col, &src) in order.iter().enumerate() {
        f.push(eig.eigenvalues[src]);
        let mut imax = 0;
        let mut best = -1.0;
        for r in 0..n {
            let m = eig.eigenvectors[(r, src)].abs();
            if m > best {
                best = m;
                imax = r;
            }
        }
        let s = if eig.eigenvectors[(imax, src)] < 0.0 { -1.0 } else { 1.0 };
        for r in 0..n {
            u[(r, col)] = s * eig.eigenvectors[(r, src)];
        }
    }
    Ok(NaturalOrbitals { f, u })
}

/// ⟨Ŝ²⟩ for an S_z = 0 sector state: Nβ minus the spin-ladder contraction
/// of the opposite-spin block.
pub fn spin_squared(ab: &TwoRDMBlock, nb: usize) -> Result<f64> {
    if ab.kind != PairKind::AlphaBeta {
        return Err(Error::InvalidInput("spin contraction needs the αβ block".into()));
    }
    let n = ab.norb;
    let mut ladder = 0.0;
    for i in 0..n {
        for j in 0..n {
            ladder += ab.get(i, j, j, i);
        }
    }
    Ok(nb as f64 - ladder)
}

/// Contracts one particle out of a pair block; returns the α one-body
/// density either route, which makes it a cheap consistency oracle.
pub fn trace_down(block: &TwoRDMBlock) -> Result<DMatrix<f64>> {
    let n = block.norb;
    let denom = match block.kind {
        PairKind::AlphaAlpha => {
            if block.na < 2 {
                return Err(Error::InvalidInput(
                    "αα block carries no pairs below two α electrons".into(),
                ));
            }
            (block.na - 1) as f64
        }
        PairKind::AlphaBeta => {
            if block.nb == 0 {
                return Err(Error::InvalidInput("αβ block is empty without β electrons".into()));
            }
            block.nb as f64
        }
    };
    let mut d = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let mut acc = 0.0;
            for k in 0..n {
                acc += block.get(i, k, j, k);
            }
            d[(i, j)] = acc / denom;
        }
    }
    Ok(d)
}

/// Builds the spin-flipped copy c[ib,ia] of an amplitude grid; states equal
/// to their flip have identical α and β densities.
pub fn spin_flip(c: &CIVector) -> Result<CIVector> {
    let space = &c.space;
    if space.na != space.nb {
        return Err(Error::InvalidInput("spin flip needs Nα = Nβ".into()));
    }
    let nstr = space.astrings.len();
    let mut out = CIVector::zero(space.clone());
    for ia in 0..nstr {
        for ib in 0..nstr {
            out.amp[ia * nstr + ib] = c.amp[ib * nstr + ia];
        }
    }
    Ok(out)
}
