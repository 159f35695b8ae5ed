//! Second-quantized Hamiltonian data and the text formats that carry it.
//!
//! An `IntegralSet` holds the core energy, the symmetric one-electron matrix
//! h_pq and the two-electron integrals (pq|rs) in chemist notation. Real
//! orbitals give the full 8-fold permutational symmetry, so the ERI tensor is
//! stored once per canonical index quadruple; every accessor sees all eight
//! images automatically.
//!
//! Two text formats are understood: the FCIDUMP namelist interchange format
//! (`&FCI ... &END` header followed by `value i j k l` records, 1-based), and
//! a one-body dialect with an `&OPER` header restricted to `value i j 0 0`
//! records for dipole-like operators.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Matching tolerance for records that address the same symmetry slot twice.
pub const ERI_CONFLICT_TOL: f64 = 1e-12;

fn tri(a: usize, b: usize) -> usize {
    debug_assert!(a >= b);
    a * (a + 1) / 2 + b
}

fn pair_index(p: usize, q: usize) -> usize {
    if p >= q {
        tri(p, q)
    } else {
        tri(q, p)
    }
}

fn quad_index(p: usize, q: usize, r: usize, s: usize) -> usize {
    let pq = pair_index(p, q);
    let rs = pair_index(r, s);
    if pq >= rs {
        tri(pq, rs)
    } else {
        tri(rs, pq)
    }
}

#[derive(Debug, Clone)]
pub struct IntegralSet {
    pub norb: usize,
    pub nelec: usize,
    /// Twice the spin projection; same parity as `nelec`.
    pub ms2: i32,
    pub e_core: f64,
    pub orbsym: Option<Vec<u32>>,
    pub isym: Option<u32>,
    h: DMatrix<f64>,
    eri: Vec<f64>,
}

impl IntegralSet {
    pub fn new(norb: usize, nelec: usize, ms2: i32) -> Result<IntegralSet> {
        if norb == 0 {
            return Err(Error::InvalidInput("norb must be at least 1".into()));
        }
        if nelec > 2 * norb {
            return Err(Error::InvalidInput(format!(
                "{nelec} electrons do not fit in {norb} spatial orbitals"
            )));
        }
        if (nelec as i64 - ms2 as i64) % 2 != 0 {
            return Err(Error::InvalidInput(format!(
                "NELEC = {nelec} and MS2 = {ms2} differ in parity"
            )));
        }
        if ms2.unsigned_abs() as usize > nelec {
            return Err(Error::InvalidInput(format!(
                "|MS2| = {} exceeds NELEC = {nelec}",
                ms2.unsigned_abs()
            )));
        }
        let npair = norb * (norb + 1) / 2;
        Ok(IntegralSet {
            norb,
            nelec,
            ms2,
            e_core: 0.0,
            orbsym: None,
            isym: None,
            h: DMatrix::zeros(norb, norb),
            eri: vec![0.0; npair * (npair + 1) / 2],
        })
    }

    /// Electron counts per spin channel implied by NELEC and MS2.
    pub fn na_nb(&self) -> (usize, usize) {
        let na = (self.nelec as i64 + self.ms2 as i64) / 2;
        let nb = (self.nelec as i64 - self.ms2 as i64) / 2;
        (na as usize, nb as usize)
    }

    /// Same integrals with a different electron count, revalidated.
    pub fn with_electrons(mut self, nelec: usize, ms2: i32) -> Result<IntegralSet> {
        let check = IntegralSet::new(self.norb, nelec, ms2)?;
        self.nelec = check.nelec;
        self.ms2 = check.ms2;
        Ok(self)
    }

    pub fn h(&self, p: usize, q: usize) -> f64 {
        self.h[(p, q)]
    }

    pub fn set_h(&mut self, p: usize, q: usize, v: f64) {
        self.h[(p, q)] = v;
        self.h[(q, p)] = v;
    }

    pub fn eri(&self, p: usize, q: usize, r: usize, s: usize) -> f64 {
        self.eri[quad_index(p, q, r, s)]
    }

    pub fn set_eri(&mut self, p: usize, q: usize, r: usize, s: usize, v: f64) {
        self.eri[quad_index(p, q, r, s)] = v;
    }

    pub fn one_body(&self) -> &DMatrix<f64> {
        &self.h
    }

    /// Records in canonical order, for emitting the same file formats we
    /// parse: every nonzero canonical ERI quadruple, then every nonzero
    /// upper-triangle h element (1-based indices in the output tuples).
    pub fn records(&self) -> Vec<(f64, usize, usize, usize, usize)> {
        let mut out = Vec::new();
        for p in 0..self.norb {
            for q in 0..=p {
                for r in 0..=p {
                    let s_max = if r == p { q } else { r };
                    for s in 0..=s_max {
                        let v = self.eri(p, q, r, s);
                        if v != 0.0 {
                            out.push((v, p + 1, q + 1, r + 1, s + 1));
                        }
                    }
                }
            }
        }
        for p in 0..self.norb {
            for q in 0..=p {
                let v = self.h(p, q);
                if v != 0.0 {
                    out.push((v, p + 1, q + 1, 0, 0));
                }
            }
        }
        out
    }
}

/// A labelled Hermitian one-body operator in the same orbital basis.
#[derive(Debug, Clone)]
pub struct OneBodyOperator {
    pub label: String,
    pub matrix: DMatrix<f64>,
}

impl OneBodyOperator {
    pub fn new(label: impl Into<String>, matrix: DMatrix<f64>) -> Result<OneBodyOperator> {
        let n = matrix.nrows();
        if matrix.ncols() != n {
            return Err(Error::DimensionMismatch(format!(
                "operator matrix is {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        for p in 0..n {
            for q in 0..p {
                if (matrix[(p, q)] - matrix[(q, p)]).abs() > 1e-10 {
                    return Err(Error::InvalidInput(format!(
                        "operator not Hermitian at ({p},{q})"
                    )));
                }
            }
        }
        Ok(OneBodyOperator { label: label.into(), matrix })
    }
}

struct Record {
    value: f64,
    idx: [usize; 4],
    line: usize,
}

/// Splits a namelist-style stream into header pairs and body records.
/// The header runs from the opening `&NAME` through `&END`.
fn split_namelist(text: &str, name: &str) -> Result<(Vec<(String, String)>, Vec<Record>)> {
    let mut header = String::new();
    let mut body_start = 0;
    let mut lines = 0;
    let mut found_end = false;
    let mut rest = text;
    while let Some(nl) = rest.find('\n').map(|i| i + 1).or_else(|| {
        if rest.is_empty() {
            None
        } else {
            Some(rest.len())
        }
    }) {
        let line = &rest[..nl];
        lines += 1;
        header.push_str(line);
        body_start += nl;
        rest = &rest[nl..];
        if let Some(endpos) = header.find("&END") {
            // anything after &END on the same line belongs to the body
            let after = header.len() - (endpos + 4);
            body_start -= after;
            header.truncate(endpos);
            found_end = true;
            break;
        }
    }
    if !found_end {
        return Err(Error::Parse { line: lines, msg: "missing &END header terminator".into() });
    }
    let header = header.trim();
    let tag = format!("&{name}");
    if !header.to_ascii_uppercase().starts_with(&tag) {
        return Err(Error::Parse { line: 1, msg: format!("expected a {tag} header") });
    }
    let mut pairs = Vec::new();
    for chunk in header[tag.len()..].split(|c: char| c == ',' || c.is_whitespace()) {
        if chunk.is_empty() {
            continue;
        }
        match chunk.split_once('=') {
            Some((k, v)) => pairs.push((k.trim().to_ascii_uppercase(), v.trim().to_string())),
            None => {
                // continuation of a comma-separated list value (ORBSYM=1,1,1,)
                match pairs.last_mut() {
                    Some((_, v)) => {
                        v.push(',');
                        v.push_str(chunk);
                    }
                    None => {
                        return Err(Error::Parse {
                            line: 1,
                            msg: format!("stray header token {chunk:?}"),
                        })
                    }
                }
            }
        }
    }
    let mut records = Vec::new();
    for (off, line) in text[body_start..].lines().enumerate() {
        let line_no = lines + off;
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.is_empty() {
            continue;
        }
        if toks.len() != 5 {
            return Err(Error::Parse {
                line: line_no + 1,
                msg: format!("expected `value i j k l`, found {} fields", toks.len()),
            });
        }
        let value: f64 = toks[0].parse().map_err(|_| Error::Parse {
            line: line_no + 1,
            msg: format!("bad value {:?}", toks[0]),
        })?;
        let mut idx = [0usize; 4];
        for (slot, t) in idx.iter_mut().zip(&toks[1..]) {
            *slot = t.parse().map_err(|_| Error::Parse {
                line: line_no + 1,
                msg: format!("bad index {t:?}"),
            })?;
        }
        records.push(Record { value, idx, line: line_no + 1 });
    }
    Ok((pairs, records))
}

fn header_usize(pairs: &[(String, String)], key: &str) -> Result<usize> {
    let v = pairs
        .iter()
        .find(|(k, _)| k == key)
        .ok_or_else(|| Error::Parse { line: 1, msg: format!("header is missing {key}") })?;
    v.1.trim_end_matches(',')
        .parse()
        .map_err(|_| Error::Parse { line: 1, msg: format!("bad {key} value {:?}", v.1) })
}

fn header_i32(pairs: &[(String, String)], key: &str) -> Result<i32> {
    let v = pairs
        .iter()
        .find(|(k, _)| k == key)
        .ok_or_else(|| Error::Parse { line: 1, msg: format!("header is missing {key}") })?;
    v.1.trim_end_matches(',')
        .parse()
        .map_err(|_| Error::Parse { line: 1, msg: format!("bad {key} value {:?}", v.1) })
}

fn check_conflict(seen: &mut [bool], slot: usize, old: f64, new: f64, line: usize) -> Result<()> {
    if seen[slot] && (old - new).abs() > ERI_CONFLICT_TOL {
        return Err(Error::Parse {
            line,
            msg: format!("conflicting values {old:.15e} and {new:.15e} for one symmetry slot"),
        });
    }
    seen[slot] = true;
    Ok(())
}

/// Parses the FCIDUMP interchange format: 1-based `value i j k l` records,
/// `(i j 0 0)` one-electron, all-zero index core energy, chemist (ij|kl)
/// otherwise. Symmetry-equivalent duplicates must agree within 1e-12.
pub fn parse_fcidump(text: &str) -> Result<IntegralSet> {
    let (pairs, records) = split_namelist(text, "FCI")?;
    let norb = header_usize(&pairs, "NORB")?;
    let nelec = header_usize(&pairs, "NELEC")?;
    let ms2 = header_i32(&pairs, "MS2")?;
    let mut ints = IntegralSet::new(norb, nelec, ms2)?;
    if let Some((_, v)) = pairs.iter().find(|(k, _)| k == "ORBSYM") {
        let syms: Vec<u32> = v
            .split(',')
            .filter(|s| !s.trim().is_empty())
            .map(|s| {
                s.trim()
                    .parse()
                    .map_err(|_| Error::Parse { line: 1, msg: format!("bad ORBSYM entry {s:?}") })
            })
            .collect::<Result<_>>()?;
        if syms.len() != norb {
            return Err(Error::Parse {
                line: 1,
                msg: format!("ORBSYM lists {} labels for {norb} orbitals", syms.len()),
            });
        }
        ints.orbsym = Some(syms);
    }
    if pairs.iter().any(|(k, _)| k == "ISYM") {
        ints.isym = Some(header_i32(&pairs, "ISYM")? as u32);
    }

    let npair = norb * (norb + 1) / 2;
    let mut seen_eri = vec![false; npair * (npair + 1) / 2];
    let mut seen_h = vec![false; npair];
    let mut seen_core = false;
    for rec in records {
        let [i, j, k, l] = rec.idx;
        if [i, j, k, l].iter().any(|&x| x > norb) {
            return Err(Error::Parse {
                line: rec.line,
                msg: format!("index out of range 0..={norb}"),
            });
        }
        match (i, j, k, l) {
            (0, 0, 0, 0) => {
                if seen_core && (ints.e_core - rec.value).abs() > ERI_CONFLICT_TOL {
                    return Err(Error::Parse {
                        line: rec.line,
                        msg: "conflicting core energy records".into(),
                    });
                }
                seen_core = true;
                ints.e_core = rec.value;
            }
            (i, j, 0, 0) if i > 0 && j > 0 => {
                let slot = pair_index(i - 1, j - 1);
                check_conflict(&mut seen_h, slot, ints.h(i - 1, j - 1), rec.value, rec.line)?;
                ints.set_h(i - 1, j - 1, rec.value);
            }
            (i, j, k, l) if i > 0 && j > 0 && k > 0 && l > 0 => {
                let slot = quad_index(i - 1, j - 1, k - 1, l - 1);
                check_conflict(
                    &mut seen_eri,
                    slot,
                    ints.eri(i - 1, j - 1, k - 1, l - 1),
                    rec.value,
                    rec.line,
                )?;
                ints.set_eri(i - 1, j - 1, k - 1, l - 1, rec.value);
            }
            _ => {
                return Err(Error::Parse {
                    line: rec.line,
                    msg: format!("malformed index pattern ({i} {j} {k} {l})"),
                })
            }
        }
    }
    Ok(ints)
}

/// Parses the one-body `&OPER` dialect: same record grammar as FCIDUMP but
/// only `value i j 0 0` entries are legal; the matrix is filled symmetrically.
pub fn parse_operator_file(text: &str) -> Result<OneBodyOperator> {
    let (pairs, records) = split_namelist(text, "OPER")?;
    let norb = header_usize(&pairs, "NORB")?;
    if norb == 0 {
        return Err(Error::Parse { line: 1, msg: "NORB must be at least 1".into() });
    }
    let label = pairs
        .iter()
        .find(|(k, _)| k == "LABEL")
        .map(|(_, v)| v.clone())
        .unwrap_or_default();
    let mut m = DMatrix::zeros(norb, norb);
    let mut seen = vec![false; norb * (norb + 1) / 2];
    for rec in records {
        let [i, j, k, l] = rec.idx;
        if k != 0 || l != 0 {
            return Err(Error::Parse {
                line: rec.line,
                msg: "two-electron record in a one-body operator file".into(),
            });
        }
        if i == 0 || j == 0 || i > norb || j > norb {
            return Err(Error::Parse {
                line: rec.line,
                msg: format!("index out of range 1..={norb}"),
            });
        }
        let slot = pair_index(i - 1, j - 1);
        check_conflict(&mut seen, slot, m[(i - 1, j - 1)], rec.value, rec.line)?;
        m[(i - 1, j - 1)] = rec.value;
        m[(j - 1, i - 1)] = rec.value;
    }
    OneBodyOperator::new(label, m)
}

/// On-site-repulsion lattice chain: h_{p,p±1} = -t, (pp|pp) = U, half filling
/// by default. The wraparound bond needs `periodic` and more than two sites
/// (on two sites it would double the existing bond).
pub fn make_hubbard_model(nsites: usize, t: f64, u: f64, periodic: bool) -> Result<IntegralSet> {
    let mut ints = IntegralSet::new(nsites, nsites, (nsites % 2) as i32)?;
    for p in 0..nsites.saturating_sub(1) {
        ints.set_h(p, p + 1, -t);
    }
    if periodic && nsites > 2 {
        ints.set_h(0, nsites - 1, -t);
    }
    for p in 0..nsites {
        ints.set_eri(p, p, p, p, u);
    }
    Ok(ints)
}
