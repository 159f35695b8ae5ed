//! Impulsive one-body kick: exact propagation of e^{iλŜ}, operator
//! cumulants of Ŝ in the reference state, and the second-order survival
//! probability assembled two independent ways.
//!
//! Route one contracts the bare two-particle blocks with the kick matrix.
//! Route two works in the natural-orbital basis and splits the same number
//! into a mean-field golden-rule part plus cumulant corrections. Both match
//! the variance from operator moments whenever the α and β one-body
//! densities coincide; that equivalence is what makes the survival decay a
//! correlation probe rather than a generic overlap.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::measures::cumulant_blocks;
use crate::rdm::{natural_orbitals, one_rdm, two_rdm_blocks};
use crate::solver::{apply_one_body, CIVector};

/// Per-term convergence threshold for the exponential series.
pub const SERIES_TOL: f64 = 1e-13;
const SERIES_MAX_TERMS: usize = 200;

/// One-body kick generator Ŝ = −Σ_a q_a d̂_a, kept together with the
/// component operators it was assembled from.
#[derive(Debug, Clone)]
pub struct KickSpec {
    pub components: Vec<(f64, DMatrix<f64>)>,
    pub s: DMatrix<f64>,
}

/// Combines weighted symmetric one-body operators into a kick generator.
pub fn build_kick(components: Vec<(f64, DMatrix<f64>)>) -> Result<KickSpec> {
    let n = match components.first() {
        Some((_, d)) => d.nrows(),
        None => return Err(Error::InvalidInput("kick needs at least one component".into())),
    };
    let mut s = DMatrix::zeros(n, n);
    for (q, d) in &components {
        if d.nrows() != n || d.ncols() != n {
            return Err(Error::DimensionMismatch(format!(
                "kick component is {}x{}, expected {n}x{n}",
                d.nrows(),
                d.ncols()
            )));
        }
        for i in 0..n {
            for j in 0..i {
                if (d[(i, j)] - d[(j, i)]).abs() > 1e-10 {
                    return Err(Error::InvalidInput("kick component is not symmetric".into()));
                }
            }
        }
        s += d * (-*q);
    }
    Ok(KickSpec { components, s })
}

/// First three cumulants of the kick generator in a given state.
#[derive(Debug, Clone, Copy)]
pub struct Cumulants {
    pub s1: f64,
    pub s2: f64,
    pub s3: f64,
}

/// κ₁, κ₂, κ₃ of Ŝ from the first three operator moments.
pub fn moments_and_cumulants(s: &DMatrix<f64>, c: &CIVector) -> Result<Cumulants> {
    let norm = c.norm();
    if (norm - 1.0).abs() > 1e-8 {
        return Err(Error::InvalidInput(format!(
            "cumulants need a normalized state (norm {norm:.3e})"
        )));
    }
    let sc = apply_one_body(s, c)?;
    let ssc = apply_one_body(s, &sc)?;
    let m1 = c.dot(&sc).re;
    let m2 = sc.dot(&sc).re;
    let m3 = sc.dot(&ssc).re;
    Ok(Cumulants {
        s1: m1,
        s2: m2 - m1 * m1,
        s3: m3 - 3.0 * m2 * m1 + 2.0 * m1 * m1 * m1,
    })
}

/// e^{iλŜ}·c by a scaled-and-squared Taylor series. The generator norm sets
/// the substep count so each partial sum converges fast; the result must
/// come back unitary to 1e-10 or the call fails.
pub fn kicked_state(spec: &KickSpec, c: &CIVector, lambda: f64) -> Result<CIVector> {
    let nelec = (c.space.na + c.space.nb) as f64;
    let scale = lambda.abs() * spec.s.norm() * nelec.max(1.0);
    let mut steps = 1usize;
    while (steps as f64) < scale && steps < (1 << 20) {
        steps <<= 1;
    }
    let sub = Complex64::new(0.0, lambda / steps as f64);
    let mut psi = c.clone();
    for _ in 0..steps {
        let mut term = psi.clone();
        let mut out = psi.clone();
        let mut converged = false;
        for k in 1..=SERIES_MAX_TERMS {
            term = apply_one_body(&spec.s, &term)?;
            let f = sub / k as f64;
            for a in &mut term.amp {
                *a *= f;
            }
            for (o, t) in out.amp.iter_mut().zip(&term.amp) {
                *o += t;
            }
            if term.norm() < SERIES_TOL {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::SeriesDiverged { terms: SERIES_MAX_TERMS });
        }
        psi = out;
    }
    let drift = (psi.norm() - c.norm()).abs();
    if drift > 1e-10 {
        return Err(Error::InvalidInput(format!(
            "kick propagation lost unitarity by {drift:.3e}"
        )));
    }
    Ok(psi)
}

/// ⟨c| e^{iλŜ} |c⟩.
pub fn overlap_after_kick(spec: &KickSpec, c: &CIVector, lambda: f64) -> Result<Complex64> {
    let kicked = kicked_state(spec, c, lambda)?;
    Ok(c.dot(&kicked))
}

/// Survival probability |⟨c|e^{iλŜ}|c⟩|².
pub fn survival_exact(spec: &KickSpec, c: &CIVector, lambda: f64) -> Result<f64> {
    Ok(overlap_after_kick(spec, c, lambda)?.norm_sqr())
}

/// The variance of Ŝ assembled from reduced densities, both as a direct
/// pair-block contraction and as natural-orbital golden rule plus cumulant
/// corrections.
#[derive(Debug, Clone, Copy)]
pub struct SecondOrder {
    pub s2_rdm: f64,
    pub s2_no: f64,
    pub zz_aa: f64,
    pub zz_ab: f64,
    pub sigma2_s: f64,
}

pub fn survival_second_order(spec: &KickSpec, c: &CIVector) -> Result<SecondOrder> {
    let s = &spec.s;
    let n = s.nrows();
    if n != c.space.norb {
        return Err(Error::DimensionMismatch(format!(
            "kick spans {n} orbitals, space {}",
            c.space.norb
        )));
    }
    let d = one_rdm(c)?;
    let (aa, ab) = two_rdm_blocks(c)?;
    let (daa, dab) = cumulant_blocks(c)?;

    let mut pair = 0.0;
    let mut zz_aa = 0.0;
    let mut zz_ab = 0.0;
    for i in 0..n {
        for j in 0..n {
            let sij = s[(i, j)];
            if sij == 0.0 {
                continue;
            }
            for k in 0..n {
                for l in 0..n {
                    let w = sij * s[(k, l)];
                    pair += w * (aa.get(i, k, j, l) + ab.get(i, k, j, l));
                    zz_aa += w * daa.get(i, k, j, l);
                    zz_ab += w * dab.get(i, k, j, l);
                }
            }
        }
    }
    let sd = s * &d;
    let ssd = s * &sd;
    let sigma2_s = 2.0 * ssd.trace() - (2.0 * sd.trace()).powi(2);
    let s2_rdm = 2.0 * pair + sigma2_s;

    let no = natural_orbitals(&d)?;
    let sp = no.u.transpose() * s * &no.u;
    let mut golden = 0.0;
    for i in 0..n {
        for m in 0..n {
            golden += sp[(i, m)].powi(2) * no.f[i] * (1.0 - no.f[m]);
        }
    }
    let s2_no = 4.0 * (zz_aa + zz_ab) + 2.0 * golden;

    Ok(SecondOrder { s2_rdm, s2_no, zz_aa, zz_ab, sigma2_s })
}

/// One strength sample of the survival scan.
#[derive(Debug, Clone, Copy)]
pub struct ScanRow {
    pub lambda: f64,
    pub p_exact: f64,
    pub p_order2: f64,
    pub p_exp: f64,
    pub residual: f64,
}

/// Samples the survival probability over kick strengths and fits the
/// log-log slope of the deviation from the quadratic law. Points with
/// residuals at the numerical floor are left out of the fit; the slope is
/// `None` with fewer than two usable points.
pub fn scaling_probe(
    spec: &KickSpec,
    c: &CIVector,
    lambdas: &[f64],
) -> Result<(Vec<ScanRow>, Option<f64>)> {
    let cum = moments_and_cumulants(&spec.s, c)?;
    let mut rows = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        if lambda <= 0.0 {
            return Err(Error::InvalidInput("scan strengths must be positive".into()));
        }
        let p_exact = survival_exact(spec, c, lambda)?;
        let p_order2 = 1.0 - lambda * lambda * cum.s2;
        let p_exp = (-lambda * lambda * cum.s2).exp();
        rows.push(ScanRow {
            lambda,
            p_exact,
            p_order2,
            p_exp,
            residual: (p_exact - p_order2).abs(),
        });
    }
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.residual > 1e-14)
        .map(|r| (r.lambda.ln(), r.residual.ln()))
        .collect();
    let slope = if pts.len() >= 2 {
        let nf = pts.len() as f64;
        let xm = pts.iter().map(|p| p.0).sum::<f64>() / nf;
        let ym = pts.iter().map(|p| p.1).sum::<f64>() / nf;
        let sxx: f64 = pts.iter().map(|p| (p.0 - xm).powi(2)).sum();
        let sxy: f64 = pts.iter().map(|p| (p.0 - xm) * (p.1 - ym)).sum();
        if sxx > 0.0 {
            Some(sxy / sxx)
        } else {
            None
        }
    } else {
        None
    };
    Ok((rows, slope))
}

/// Everything the kick probe knows about one state and one strength.
#[derive(Debug, Clone, Copy)]
pub struct KickReport {
    pub s1m: f64,
    pub s2m: f64,
    pub s3m: f64,
    pub sigma2_s: f64,
    pub s2_rdm: f64,
    pub s2_no: f64,
    pub zz_aa: f64,
    pub zz_ab: f64,
    pub p_exact: f64,
    pub p_order2: f64,
    pub p_exp: f64,
    /// ⟨Ŝ⟩, repeated from `s1m` as the zero-mean gauge diagnostic.
    pub mean_s: f64,
}

pub fn kick_report(spec: &KickSpec, c: &CIVector, lambda: f64) -> Result<KickReport> {
    let cum = moments_and_cumulants(&spec.s, c)?;
    let so = survival_second_order(spec, c)?;
    let p_exact = survival_exact(spec, c, lambda)?;
    Ok(KickReport {
        s1m: cum.s1,
        s2m: cum.s2,
        s3m: cum.s3,
        sigma2_s: so.sigma2_s,
        s2_rdm: so.s2_rdm,
        s2_no: so.s2_no,
        zz_aa: so.zz_aa,
        zz_ab: so.zz_ab,
        p_exact,
        p_order2: 1.0 - lambda * lambda * cum.s2,
        p_exp: (-lambda * lambda * cum.s2).exp(),
        mean_s: cum.s1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detspace::DetSpace;
    use crate::integrals::make_hubbard_model;
    use crate::solver::{dense_hamiltonian, solve_ground, SolveOptions};
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    fn space(norb: usize, na: usize, nb: usize) -> Arc<DetSpace> {
        Arc::new(DetSpace::new(norb, na, nb).unwrap())
    }

    fn random_symmetric(n: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let v = rng.gen_range(-1.0..1.0);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        m
    }

    fn random_real_state(sp: &Arc<DetSpace>, seed: u64) -> CIVector {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut v = CIVector::zero(sp.clone());
        for a in &mut v.amp {
            *a = Complex64::new(rng.gen_range(-1.0..1.0), 0.0);
        }
        v.normalize();
        v
    }

    #[test]
    fn build_kick_combines_and_validates() {
        let d1 = DMatrix::identity(2, 2);
        let d2 = random_symmetric(2, 1);
        let spec = build_kick(vec![(2.0, d1.clone()), (-1.0, d2.clone())]).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let expect = -2.0 * d1[(i, j)] + d2[(i, j)];
                assert_abs_diff_eq!(spec.s[(i, j)], expect, epsilon = 1e-15);
            }
        }
        let mut skew = DMatrix::zeros(2, 2);
        skew[(0, 1)] = 1.0;
        assert!(build_kick(vec![(1.0, skew)]).is_err());
        assert!(build_kick(vec![]).is_err());
        assert!(build_kick(vec![(1.0, DMatrix::identity(2, 2)), (1.0, DMatrix::identity(3, 3))])
            .is_err());
    }

    #[test]
    fn identity_kick_is_a_pure_phase() {
        let ints = make_hubbard_model(4, 1.0, 2.0, true).unwrap();
        let sp = space(4, 2, 2);
        let sol = solve_ground(&ints, &sp, &SolveOptions::default()).unwrap();
        let spec = build_kick(vec![(0.7, DMatrix::identity(4, 4))]).unwrap();
        let lambda = 0.9;
        let ov = overlap_after_kick(&spec, &sol.vector, lambda).unwrap();
        // Ŝ = −0.7·N̂ on a 4-electron state
        let expect = Complex64::new(0.0, -lambda * 0.7 * 4.0).exp();
        assert!((ov - expect).norm() < 1e-10);
        assert_abs_diff_eq!(survival_exact(&spec, &sol.vector, lambda).unwrap(), 1.0, epsilon = 1e-10);
    }

    #[test]
    fn eigenstate_of_the_kick_has_no_spread() {
        let sp = space(3, 2, 1);
        let det = CIVector::basis_state(sp, 0, 0);
        let mut d = DMatrix::zeros(3, 3);
        d[(0, 0)] = 0.3;
        d[(1, 1)] = -0.4;
        d[(2, 2)] = 1.1;
        let spec = build_kick(vec![(1.0, d)]).unwrap();
        let cum = moments_and_cumulants(&spec.s, &det).unwrap();
        assert_abs_diff_eq!(cum.s2, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(cum.s3, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(survival_exact(&spec, &det, 2.5).unwrap(), 1.0, epsilon = 1e-10);
    }

    #[test]
    fn cumulants_match_dense_moments() {
        let sp = space(4, 2, 1);
        let c = random_real_state(&sp, 9);
        let s = random_symmetric(4, 10);
        // dense oracle: the kick generator as a one-body "Hamiltonian"
        let mut op = crate::integrals::IntegralSet::new(4, 3, 1).unwrap();
        for p in 0..4 {
            for q in 0..4 {
                op.set_h(p, q, s[(p, q)]);
            }
        }
        let m = dense_hamiltonian(&op, &sp).unwrap();
        let x = nalgebra::DVector::from_iterator(sp.dim(), c.amp.iter().map(|a| a.re));
        let mx = &m * &x;
        let mmx = &m * &mx;
        let m1 = x.dot(&mx);
        let m2 = mx.dot(&mx);
        let m3 = mx.dot(&mmx);
        let cum = moments_and_cumulants(&s, &c).unwrap();
        assert_abs_diff_eq!(cum.s1, m1, epsilon = 1e-10);
        assert_abs_diff_eq!(cum.s2, m2 - m1 * m1, epsilon = 1e-10);
        assert_abs_diff_eq!(cum.s3, m3 - 3.0 * m2 * m1 + 2.0 * m1.powi(3), epsilon = 1e-10);
    }

    #[test]
    fn variance_routes_agree_on_a_symmetric_ground_state() {
        let ints = make_hubbard_model(4, 1.0, 3.0, true).unwrap();
        let sp = space(4, 2, 2);
        let sol = solve_ground(&ints, &sp, &SolveOptions::default()).unwrap();
        let spec = build_kick(vec![(1.0, random_symmetric(4, 20))]).unwrap();
        let cum = moments_and_cumulants(&spec.s, &sol.vector).unwrap();
        let so = survival_second_order(&spec, &sol.vector).unwrap();
        assert_abs_diff_eq!(so.s2_rdm, cum.s2, epsilon = 1e-10);
        assert_abs_diff_eq!(so.s2_no, cum.s2, epsilon = 1e-10);
    }

    #[test]
    fn quadratic_residual_scales_as_fourth_power() {
        let ints = make_hubbard_model(2, 1.0, 4.0, false).unwrap();
        let sp = space(2, 1, 1);
        let sol = solve_ground(&ints, &sp, &SolveOptions::default()).unwrap();
        let mut d = DMatrix::zeros(2, 2);
        d[(0, 0)] = 1.0;
        d[(1, 1)] = -1.0;
        let spec = build_kick(vec![(1.0, d)]).unwrap();
        let cum = moments_and_cumulants(&spec.s, &sol.vector).unwrap();
        assert_abs_diff_eq!(cum.s1, 0.0, epsilon = 1e-10);
        let (rows, slope) = scaling_probe(&spec, &sol.vector, &[0.02, 0.04, 0.08]).unwrap();
        assert_eq!(rows.len(), 3);
        for r in &rows {
            assert!(r.p_exact <= 1.0 + 1e-12);
            assert!(r.residual > 1e-14);
        }
        let slope = slope.unwrap();
        assert!((3.5..4.5).contains(&slope), "slope {slope}");
    }

    #[test]
    fn report_is_internally_consistent() {
        let ints = make_hubbard_model(4, 1.0, 2.0, true).unwrap();
        let sp = space(4, 2, 2);
        let sol = solve_ground(&ints, &sp, &SolveOptions::default()).unwrap();
        let spec = build_kick(vec![(0.5, random_symmetric(4, 33))]).unwrap();
        let rep = kick_report(&spec, &sol.vector, 0.1).unwrap();
        assert_eq!(rep.s1m, rep.mean_s);
        assert_abs_diff_eq!(rep.p_order2, 1.0 - 0.01 * rep.s2m, epsilon = 1e-14);
        assert_abs_diff_eq!(rep.p_exp, (-0.01 * rep.s2m).exp(), epsilon = 1e-14);
        assert_abs_diff_eq!(rep.s2_rdm, rep.s2m, epsilon = 1e-9);
        assert_abs_diff_eq!(rep.s2_no, rep.s2m, epsilon = 1e-9);
        assert!((rep.p_exact - rep.p_order2).abs() < 1e-2);
    }

    #[test]
    fn large_strength_propagation_stays_unitary() {
        let sp = space(3, 2, 1);
        let c = random_real_state(&sp, 41);
        let spec = build_kick(vec![(3.0, random_symmetric(3, 42))]).unwrap();
        let kicked = kicked_state(&spec, &c, 5.0).unwrap();
        assert_abs_diff_eq!(kicked.norm(), 1.0, epsilon = 1e-10);
        // a kick is invertible: kicking back recovers the original state
        let back = kicked_state(&spec, &kicked, -5.0).unwrap();
        let mut diff = back.clone();
        diff.axpy(Complex64::new(-1.0, 0.0), &c);
        assert!(diff.norm() < 1e-9);
    }
}
