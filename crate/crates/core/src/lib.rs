//! Determinant full CI for small orbital spaces, with the reduced-density
//! machinery needed to treat the decay of a survival probability after an
//! impulsive one-body kick as a measurable electron-correlation gauge.
//!
//! The layers, bottom up:
//!
//! - [`detspace`]: occupation bit strings, lexicographic addressing and
//!   signed single excitations.
//! - [`integrals`]: one- and two-electron integral storage, the interchange
//!   file format, and a lattice-model builder.
//! - [`solver`]: H·c products, a dense pair-rule oracle, and the Davidson
//!   ground-state solve.
//! - [`rdm`]: one-body densities and Gram-assembled two-particle blocks.
//! - [`measures`]: cumulants, entropies and the subadditivity gap checks.
//! - [`kick`]: exact kick propagation, operator cumulants, and the
//!   second-order survival assembled from densities two independent ways.
//! - [`asymptotics`]: a closed-form benchmark state with every measure
//!   known exactly.

pub mod asymptotics;
pub mod detspace;
pub mod error;
pub mod integrals;
pub mod kick;
pub mod measures;
pub mod rdm;
pub mod solver;

pub use asymptotics::{build_kappa7_state, kappa7_reference, Kappa7Reference};
pub use detspace::{DetSpace, Excitation, SpinString};
pub use error::{Error, Result};
pub use integrals::{
    make_hubbard_model, parse_fcidump, parse_operator_file, IntegralSet, OneBodyOperator,
};
pub use kick::{
    build_kick, kick_report, kicked_state, moments_and_cumulants, overlap_after_kick,
    scaling_probe, survival_exact, survival_second_order, Cumulants, KickReport, KickSpec,
    ScanRow, SecondOrder,
};
pub use measures::{
    carlen_lieb_check, cumulant_blocks, entropy_report, frobenius_norm, one_body_entropy,
    pair_entropy, CumulantBlock, EntropyReport,
};
pub use rdm::{
    natural_orbitals, one_rdm, one_rdm_channel, spin_flip, spin_squared, trace_down,
    two_rdm_blocks, NaturalOrbitals, PairKind, SpinChannel, TwoRDMBlock,
};
pub use solver::{
    apply_one_body, dense_hamiltonian, diagonal, sigma, solve_ground, solve_lowest, CIVector,
    GroundSolution, SolveOptions, DENSE_CAP,
};
