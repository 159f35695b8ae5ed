//! Occupation strings and their addressing.
//!
//! A determinant is a pair of spin strings: one bit pattern per spin channel,
//! bit `p` set when spatial orbital `p` is occupied. Strings are ordered
//! lexicographically by their ascending occupation lists, and ranks are
//! computed combinatorially so a string can be addressed without enumerating
//! the space. Single-excitation lists carry the fermionic phases that every
//! Hamiltonian and density-matrix contraction downstream is built from.

use crate::error::{Error, Result};

/// One spin channel of a determinant, at most 64 spatial orbitals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SpinString {
    pub bits: u64,
}

impl SpinString {
    pub fn from_occ(occ: &[usize]) -> SpinString {
        let mut bits = 0u64;
        for &p in occ {
            bits |= 1 << p;
        }
        SpinString { bits }
    }

    pub fn occ(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.bits.count_ones() as usize);
        let mut b = self.bits;
        while b != 0 {
            let p = b.trailing_zeros() as usize;
            out.push(p);
            b &= b - 1;
        }
        out
    }

    pub fn count(&self) -> usize {
        self.bits.count_ones() as usize
    }

    pub fn is_occ(&self, p: usize) -> bool {
        self.bits >> p & 1 == 1
    }

    /// Phase (-1)^k, k = number of occupied orbitals strictly below `p`.
    pub fn ann_sign(&self, p: usize) -> f64 {
        let below = (self.bits & ((1u64 << p) - 1)).count_ones();
        if below % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }
}

/// A single excitation c†_p c_q applied to a string: `q` occupied in the
/// source, `p` empty (or `p == q` for the diagonal number operator).
#[derive(Debug, Clone, Copy)]
pub struct Excitation {
    pub p: usize,
    pub q: usize,
    pub sign: f64,
    pub target: SpinString,
}

pub fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // exact at every step: acc holds C(n, i) entering iteration i
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc as u64
}

/// All C(norb, ne) strings in lexicographic order of their occupation lists.
pub fn enumerate_strings(norb: usize, ne: usize) -> Vec<SpinString> {
    assert!(norb <= 64, "strings are 64-bit patterns");
    assert!(ne <= norb);
    let total = binomial(norb, ne) as usize;
    let mut out = Vec::with_capacity(total);
    let mut occ: Vec<usize> = (0..ne).collect();
    loop {
        out.push(SpinString::from_occ(&occ));
        // next combination in lexicographic order
        let mut i = ne;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if occ[i] != i + norb - ne {
                break;
            }
            if i == 0 {
                return out;
            }
        }
        occ[i] += 1;
        for j in i + 1..ne {
            occ[j] = occ[j - 1] + 1;
        }
    }
}

/// Lexicographic rank of `s` among all C(norb, ne) strings, as a sum of
/// binomial weights; inverse of indexing into `enumerate_strings`.
pub fn string_address(s: SpinString, norb: usize, ne: usize) -> Result<usize> {
    if s.count() != ne {
        return Err(Error::InvalidInput(format!(
            "string occupies {} orbitals, channel holds {ne}",
            s.count()
        )));
    }
    if norb < 64 && s.bits >> norb != 0 {
        return Err(Error::InvalidInput(format!(
            "string occupies an orbital beyond norb = {norb}"
        )));
    }
    let mut rank: u64 = 0;
    let mut prev: isize = -1;
    for (i, o) in s.occ().into_iter().enumerate() {
        for j in (prev + 1) as usize..o {
            rank += binomial(norb - 1 - j, ne - 1 - i);
        }
        prev = o as isize;
    }
    Ok(rank as usize)
}

/// Every c†_p c_q with nonzero action on `s`, diagonal entries included.
/// Off-diagonal signs are (-1)^k with k the count of occupied orbitals
/// strictly between p and q; diagonals carry +1.
pub fn single_excitations(s: SpinString, norb: usize) -> Vec<Excitation> {
    let ne = s.count();
    let mut out = Vec::with_capacity(ne * (norb - ne) + ne);
    for q in s.occ() {
        for p in 0..norb {
            if p == q {
                out.push(Excitation { p, q, sign: 1.0, target: s });
            } else if !s.is_occ(p) {
                let (lo, hi) = if p < q { (p, q) } else { (q, p) };
                let mask = ((1u64 << hi) - 1) & !((1u64 << (lo + 1)) - 1);
                let sign = if (s.bits & mask).count_ones() % 2 == 0 {
                    1.0
                } else {
                    -1.0
                };
                let target = SpinString { bits: s.bits & !(1 << q) | 1 << p };
                out.push(Excitation { p, q, sign, target });
            }
        }
    }
    out
}

/// The full CI basis: every α string paired with every β string.
#[derive(Debug, Clone)]
pub struct DetSpace {
    pub norb: usize,
    pub na: usize,
    pub nb: usize,
    pub astrings: Vec<SpinString>,
    pub bstrings: Vec<SpinString>,
}

impl DetSpace {
    pub fn new(norb: usize, na: usize, nb: usize) -> Result<DetSpace> {
        if norb == 0 || norb > 64 {
            return Err(Error::InvalidInput(format!(
                "norb = {norb} outside the supported range 1..=64"
            )));
        }
        if na > norb || nb > norb {
            return Err(Error::InvalidInput(format!(
                "cannot place {na} alpha / {nb} beta electrons in {norb} orbitals"
            )));
        }
        let dim = binomial(norb, na) as u128 * binomial(norb, nb) as u128;
        if dim > usize::MAX as u128 {
            return Err(Error::InvalidInput("CI dimension overflows usize".into()));
        }
        Ok(DetSpace {
            norb,
            na,
            nb,
            astrings: enumerate_strings(norb, na),
            bstrings: enumerate_strings(norb, nb),
        })
    }

    pub fn dim(&self) -> usize {
        self.astrings.len() * self.bstrings.len()
    }

    pub fn a_address(&self, s: SpinString) -> Result<usize> {
        string_address(s, self.norb, self.na)
    }

    pub fn b_address(&self, s: SpinString) -> Result<usize> {
        string_address(s, self.norb, self.nb)
    }
}
