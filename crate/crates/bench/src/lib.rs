//! Shared fixtures for the benchmark targets: a correlated ring at half
//! filling, its solved ground state, and a zero-mean site kick.

use std::sync::Arc;

use nalgebra::DMatrix;

use kickci::{
    make_hubbard_model, solve_ground, CIVector, DetSpace, IntegralSet, KickSpec, SolveOptions,
};

pub fn ring(nsites: usize, u: f64) -> (IntegralSet, Arc<DetSpace>) {
    let ints = make_hubbard_model(nsites, 1.0, u, true).unwrap();
    let (na, nb) = ints.na_nb();
    let space = Arc::new(DetSpace::new(nsites, na, nb).unwrap());
    (ints, space)
}

pub fn solved_ring(nsites: usize, u: f64) -> (IntegralSet, CIVector) {
    let (ints, space) = ring(nsites, u);
    let sol = solve_ground(&ints, &space, &SolveOptions::default()).unwrap();
    (ints, sol.vector)
}

/// Site potential with the mean lattice position subtracted, so its
/// ground-state expectation vanishes on any translation-symmetric ring.
pub fn site_kick(nsites: usize) -> KickSpec {
    let shift = (nsites as f64 - 1.0) / 2.0;
    let s = DMatrix::from_fn(nsites, nsites, |i, j| {
        if i == j {
            i as f64 - shift
        } else {
            0.0
        }
    });
    kickci::build_kick(vec![(1.0, s)]).unwrap()
}
