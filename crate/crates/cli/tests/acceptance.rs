//! The acceptance gate. Eight criteria, one test each, every tolerance
//! pinned right here; each prints its own pass/fail line (visible with
//! `--nocapture`, or in the failure report otherwise).

use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use kickci::*;
use kickci_cli::{write_fcidump, MeasureReport};

/// Closed-form and cross-route agreement (criteria 1, 2, 4, 6).
const TOL_ORACLE: f64 = 1e-10;
/// Iterative vs dense ground energies (criterion 5).
const TOL_EIGEN: f64 = 1e-9;
/// Allowed deviation of the residual scaling exponent from 4 (criterion 3).
const SLOPE_BAND: f64 = 0.3;
/// Pair-matrix eigenvalues may dip this far below zero (criterion 6).
const PSD_FLOOR: f64 = -1e-10;
/// Wall-clock budgets (criteria 1 and 3).
const BUDGET_ORACLE: Duration = Duration::from_secs(1);
const BUDGET_SCALING: Duration = Duration::from_secs(10);
/// Frozen strong-coupling endpoints of the dimer scan (criterion 7).
const DIMER_U8_NORM_TOTAL: f64 = 0.424264068712;
const DIMER_U8_S1_REL: f64 = 0.589514485735;
const TOL_ENDPOINT: f64 = 1e-6;

fn criterion<F>(label: &str, body: F)
where
    F: FnOnce() + std::panic::UnwindSafe,
{
    let start = Instant::now();
    match std::panic::catch_unwind(body) {
        Ok(()) => println!("criterion {label}: pass ({:.2?})", start.elapsed()),
        Err(e) => {
            println!("criterion {label}: FAIL");
            std::panic::resume_unwind(e);
        }
    }
}

fn close(x: f64, want: f64, tol: f64, what: &str) {
    assert!((x - want).abs() <= tol, "{what}: {x} vs {want} (tol {tol})");
}

#[test]
fn criterion_1_reference_state_oracle_suite() {
    criterion("1 (closed-form reference state)", || {
        let start = Instant::now();
        let c = build_kappa7_state().unwrap();
        assert_eq!(c.dim(), 400);

        let (_, ab) = two_rdm_blocks(&c).unwrap();
        close(spin_squared(&ab, 3).unwrap(), 12.0, TOL_ORACLE, "total spin");

        let d = one_rdm(&c).unwrap();
        for i in 0..6 {
            for j in 0..6 {
                let want = if i == j { 0.5 } else { 0.0 };
                close(d[(i, j)], want, TOL_ORACLE, "one-body density");
            }
        }

        let (daa, dab) = cumulant_blocks(&c).unwrap();
        close(frobenius_norm(&daa), 15.0f64.sqrt() / 20.0, TOL_ORACLE, "same-spin cumulant");
        close(frobenius_norm(&dab), 315.0f64.sqrt() / 20.0, TOL_ORACLE, "cross-spin cumulant");

        let rep = entropy_report(&c).unwrap();
        close(rep.s_aa.unwrap(), 15.0f64.ln(), TOL_ORACLE, "same-spin pair entropy");
        close(rep.s_ab.unwrap(), 15.0f64.ln(), TOL_ORACLE, "cross-spin pair entropy");
        close(rep.s1, 6.0f64.ln(), TOL_ORACLE, "one-body entropy");
        close(rep.gap1.unwrap(), 0.0, TOL_ORACLE, "entropy gap");

        assert!(start.elapsed() < BUDGET_ORACLE, "took {:?}", start.elapsed());
    });
}

#[test]
fn criterion_2_single_determinant_saturation() {
    criterion("2 (single-determinant saturation)", || {
        let mut states = Vec::new();
        for n in [2usize, 3, 4] {
            // every orbital filled with both spins: a one-determinant space
            let sp = Arc::new(DetSpace::new(n, n, n).unwrap());
            states.push((n, CIVector::basis_state(sp, 0, 0)));
        }
        // and one produced the honest way, as the ground state of a gapped
        // one-body hamiltonian
        let mut ints = IntegralSet::new(4, 4, 0).unwrap();
        for p in 0..4 {
            ints.set_h(p, p, p as f64);
        }
        let sp = Arc::new(DetSpace::new(4, 2, 2).unwrap());
        let sol = solve_ground(&ints, &sp, &SolveOptions::default()).unwrap();
        states.push((2, sol.vector));

        for (na, c) in states {
            let (daa, dab) = cumulant_blocks(&c).unwrap();
            assert!(daa.t.amax() <= TOL_ORACLE, "same-spin cumulant element {}", daa.t.amax());
            assert!(dab.t.amax() <= TOL_ORACLE, "cross-spin cumulant element {}", dab.t.amax());
            let rep = entropy_report(&c).unwrap();
            let pairs = (na * (na - 1) / 2) as f64;
            close(rep.s_aa.unwrap(), pairs.ln(), TOL_ORACLE, "same-spin entropy floor");
            close(rep.s_ab.unwrap(), ((na * na) as f64).ln(), TOL_ORACLE, "cross-spin entropy floor");
            close(rep.gap1.unwrap(), 0.0, TOL_ORACLE, "gap1 saturation");
            close(rep.gap2.unwrap(), 0.0, TOL_ORACLE, "gap2 saturation");
        }
    });
}

#[test]
fn criterion_3_survival_residual_scaling() {
    criterion("3 (survival-probability order)", || {
        let start = Instant::now();
        let ints = make_hubbard_model(6, 1.0, 4.0, true).unwrap();
        let sp = Arc::new(DetSpace::new(6, 3, 3).unwrap());
        assert_eq!(sp.dim(), 400);
        let sol = solve_ground(&ints, &sp, &SolveOptions::default()).unwrap();

        let s = DMatrix::from_fn(6, 6, |i, j| if i == j { i as f64 - 2.5 } else { 0.0 });
        let spec = build_kick(vec![(1.0, s)]).unwrap();
        let report = kick_report(&spec, &sol.vector, 0.1).unwrap();
        assert!(report.mean_s.abs() <= TOL_ORACLE, "kick mean {}", report.mean_s);

        let lambdas: Vec<f64> = (0..9).map(|k| 10f64.powf(-3.0 + k as f64 / 4.0)).collect();
        let (rows, slope) = scaling_probe(&spec, &sol.vector, &lambdas).unwrap();
        assert!(rows.len() >= 5, "only {} usable scan points", rows.len());
        let slope = slope.expect("slope fit");
        close(slope, 4.0, SLOPE_BAND, "residual exponent");

        assert!(start.elapsed() < BUDGET_SCALING, "took {:?}", start.elapsed());
    });
}

fn random_flip_symmetric_state(sp: &Arc<DetSpace>, rng: &mut ChaCha8Rng) -> CIVector {
    let n = sp.astrings.len();
    let mut c = CIVector::zero(sp.clone());
    for ia in 0..n {
        for ib in 0..=ia {
            let v = Complex64::new(rng.gen_range(-1.0..1.0), 0.0);
            c.amp[ia * n + ib] = v;
            c.amp[ib * n + ia] = v;
        }
    }
    c.normalize();
    c
}

#[test]
fn criterion_4_variance_route_equivalence() {
    criterion("4 (three-route variance agreement)", || {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let mut checked = 0;
        for (norb, ne) in [(4usize, 2usize), (5, 2), (6, 2), (6, 3)] {
            let sp = Arc::new(DetSpace::new(norb, ne, ne).unwrap());
            assert!(sp.dim() <= 400);
            for _ in 0..5 {
                let c = random_flip_symmetric_state(&sp, &mut rng);
                let mut s = DMatrix::zeros(norb, norb);
                for i in 0..norb {
                    for j in 0..=i {
                        let v = rng.gen_range(-1.0..1.0);
                        s[(i, j)] = v;
                        s[(j, i)] = v;
                    }
                }
                let spec = build_kick(vec![(1.0, s.clone())]).unwrap();
                let cum = moments_and_cumulants(&s, &c).unwrap();
                let so = survival_second_order(&spec, &c).unwrap();
                close(so.s2_rdm, cum.s2, TOL_ORACLE, "pair-block route vs moments");
                close(so.s2_no, cum.s2, TOL_ORACLE, "natural-orbital route vs moments");
                close(so.s2_rdm, so.s2_no, TOL_ORACLE, "pair-block vs natural-orbital");
                checked += 1;
            }
        }
        assert!(checked >= 20, "only {checked} vectors checked");
    });
}

struct SuiteSystem {
    name: &'static str,
    ints: IntegralSet,
    na: usize,
    nb: usize,
    closed_form: Option<f64>,
}

fn suite_systems() -> Vec<SuiteSystem> {
    let sys = |name, ints: IntegralSet, closed_form| {
        let (na, nb) = ints.na_nb();
        SuiteSystem { name, ints, na, nb, closed_form }
    };
    vec![
        sys(
            "dimer U=4",
            make_hubbard_model(2, 1.0, 4.0, false).unwrap(),
            Some(2.0 - 8.0f64.sqrt()),
        ),
        sys("4-ring U=4", make_hubbard_model(4, 1.0, 4.0, true).unwrap(), None),
        sys("5-chain U=3, one up", {
            make_hubbard_model(5, 1.0, 3.0, false).unwrap().with_electrons(5, 1).unwrap()
        }, None),
        sys("6-ring U=0", make_hubbard_model(6, 1.0, 0.0, true).unwrap(), Some(-8.0)),
        sys("6-ring U=4", make_hubbard_model(6, 1.0, 4.0, true).unwrap(), None),
        sys("6-chain U=4, ms=2", {
            make_hubbard_model(6, 1.0, 4.0, false).unwrap().with_electrons(6, 2).unwrap()
        }, None),
        sys("7-chain U=3, one up", {
            make_hubbard_model(7, 1.0, 3.0, false).unwrap().with_electrons(7, 1).unwrap()
        }, None),
    ]
}

#[test]
fn criterion_5_iterative_matches_dense() {
    criterion("5 (iterative vs dense eigenvalues)", || {
        for sys in suite_systems() {
            let sp = Arc::new(DetSpace::new(sys.ints.norb, sys.na, sys.nb).unwrap());
            assert!(sp.dim() <= 2000, "{}: dimension {}", sys.name, sp.dim());
            let sol = solve_ground(&sys.ints, &sp, &SolveOptions::default()).unwrap();
            let h = dense_hamiltonian(&sys.ints, &sp).unwrap();
            let dense = h
                .symmetric_eigenvalues()
                .iter()
                .copied()
                .fold(f64::INFINITY, f64::min);
            close(sol.energy, dense, TOL_EIGEN, sys.name);
            if let Some(e) = sys.closed_form {
                close(sol.energy, e, TOL_EIGEN, sys.name);
            }
        }
    });
}

#[test]
fn criterion_6_density_sum_rules() {
    criterion("6 (reduced-density sum rules)", || {
        let mut states: Vec<(String, CIVector)> = Vec::new();
        for sys in suite_systems() {
            let sp = Arc::new(DetSpace::new(sys.ints.norb, sys.na, sys.nb).unwrap());
            let sol = solve_ground(&sys.ints, &sp, &SolveOptions::default()).unwrap();
            states.push((sys.name.to_string(), sol.vector));
        }
        states.push(("reference state".into(), build_kappa7_state().unwrap()));
        for n in [2usize, 3, 4] {
            let sp = Arc::new(DetSpace::new(n, n, n).unwrap());
            states.push((format!("filled {n}-orbital determinant"), CIVector::basis_state(sp, 0, 0)));
        }

        for (name, c) in &states {
            let (na, nb) = (c.space.na, c.space.nb);
            let d = one_rdm(c).unwrap();
            close(d.trace(), na as f64, TOL_ORACLE, &format!("{name}: one-body trace"));

            let (aa, ab) = two_rdm_blocks(c).unwrap();
            close(aa.trace(), (na * (na - 1)) as f64, TOL_ORACLE, &format!("{name}: aa trace"));
            close(ab.trace(), (na * nb) as f64, TOL_ORACLE, &format!("{name}: ab trace"));

            // a pair block exposes a trace-down route only when its pair
            // count is nonzero
            let mut routes = vec![&ab];
            if na >= 2 {
                routes.push(&aa);
            }
            for block in routes {
                let dd = trace_down(block).unwrap();
                assert!(
                    (&dd - &d).amax() <= TOL_ORACLE,
                    "{name}: trace-down departs by {}",
                    (&dd - &d).amax()
                );
            }

            for (label, block) in [("aa", &aa), ("ab", &ab)] {
                let min = block
                    .t
                    .clone()
                    .symmetric_eigenvalues()
                    .iter()
                    .copied()
                    .fold(f64::INFINITY, f64::min);
                assert!(min >= PSD_FLOOR, "{name}: {label} eigenvalue {min}");
            }
        }
    });
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_kickci"))
}

fn run_ok(cmd: &mut Command) -> String {
    let out = cmd.output().expect("binary runs");
    assert!(
        out.status.success(),
        "exit {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

/// Writes one integral file per repulsion strength plus a manifest binding
/// them in scan order; returns the manifest path.
fn dimer_scan_fixture(dir: &Path) -> PathBuf {
    let mut manifest = String::new();
    for u in 0..=8 {
        let ints = make_hubbard_model(2, 1.0, u as f64, false).unwrap();
        let name = format!("dimer_u{u}.fcidump");
        std::fs::write(dir.join(&name), write_fcidump(&ints)).unwrap();
        manifest.push_str(&format!("[[entries]]\ntag = \"U{u}\"\nfcidump = \"{name}\"\n\n"));
    }
    let path = dir.join("dimers.toml");
    std::fs::write(&path, manifest).unwrap();
    path
}

fn csv_column(out: &str, col: &str) -> Vec<f64> {
    let mut lines = out.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let idx = header.iter().position(|h| *h == col).unwrap_or_else(|| panic!("no column {col}"));
    lines.map(|row| row.split(',').nth(idx).unwrap().parse().unwrap()).collect()
}

#[test]
fn criterion_7_monotone_correlation_growth() {
    criterion("7 (monotone correlation growth)", || {
        let dir = tempfile::tempdir().unwrap();
        let manifest = dimer_scan_fixture(dir.path());
        let out = run_ok(bin().args(["scan", "--manifest", manifest.to_str().unwrap(), "--csv"]));

        let norms = csv_column(&out, "norm_total");
        let s1_rel = csv_column(&out, "s1_rel");
        assert_eq!(norms.len(), 9);
        for (series, name) in [(&norms, "cumulant norm"), (&s1_rel, "relative entropy")] {
            for w in series.windows(2) {
                assert!(w[1] > w[0], "{name} fell from {} to {}", w[0], w[1]);
            }
        }
        close(norms[8], DIMER_U8_NORM_TOTAL, TOL_ENDPOINT, "strong-coupling norm endpoint");
        close(s1_rel[8], DIMER_U8_S1_REL, TOL_ENDPOINT, "strong-coupling entropy endpoint");

        // externally generated integral files join the same check when a
        // fixtures directory is present next to the workspace manifest
        let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/lih");
        if fixtures.is_dir() {
            let mut files: Vec<PathBuf> = std::fs::read_dir(&fixtures)
                .unwrap()
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|x| x == "fcidump"))
                .collect();
            files.sort();
            assert!(files.len() >= 2, "need at least two bond-length fixtures");
            let mut manifest = String::new();
            for f in &files {
                manifest.push_str(&format!(
                    "[[entries]]\ntag = \"{}\"\nfcidump = \"{}\"\n\n",
                    f.file_stem().unwrap().to_string_lossy(),
                    f.display()
                ));
            }
            let mpath = dir.path().join("fixtures.toml");
            std::fs::write(&mpath, manifest).unwrap();
            let out = run_ok(bin().args(["scan", "--manifest", mpath.to_str().unwrap(), "--csv"]));
            let norms = csv_column(&out, "norm_total");
            for w in norms.windows(2) {
                assert!(w[1] >= w[0], "fixture norm fell from {} to {}", w[0], w[1]);
            }
            println!("  fixture scan: {} files, monotone", files.len());
        } else {
            println!("  no external integral fixtures; model scan only");
        }
    });
}

#[test]
fn criterion_8_byte_identical_reports() {
    criterion("8 (byte-identical reruns)", || {
        let dir = tempfile::tempdir().unwrap();
        let manifest = dimer_scan_fixture(dir.path());
        let oper = dir.path().join("site.oper");
        let s = DMatrix::from_fn(6, 6, |i, j| if i == j { i as f64 - 2.5 } else { 0.0 });
        std::fs::write(
            &oper,
            kickci_cli::write_operator(&OneBodyOperator::new("site", s).unwrap()),
        )
        .unwrap();

        let full_suite = || {
            let mut bytes = String::new();
            bytes += &run_ok(bin().args(["measures", "--analytic", "kappa7", "--json"]));
            bytes += &run_ok(bin().args(["solve", "--model", "hubbard:4,1,4,periodic", "--json"]));
            bytes += &run_ok(bin().args(["measures", "--model", "hubbard:6,1,4,periodic", "--json"]));
            bytes += &run_ok(bin().args([
                "kick",
                "--model",
                "hubbard:6,1,4,periodic",
                "--oper",
                oper.to_str().unwrap(),
                "--q",
                "1.0",
                "--lambda-scan",
                "0.001,0.01,0.1",
                "--require-zero-mean",
                "--json",
            ]));
            bytes += &run_ok(bin().args([
                "scan",
                "--manifest",
                manifest.to_str().unwrap(),
                "--json",
            ]));
            bytes
        };
        let first = full_suite();
        let second = full_suite();
        assert!(!first.is_empty());
        assert_eq!(first, second, "reruns differ");
        // spot-check the stream is the documented shape
        assert!(first.contains(&format!("\"schema\": \"{}\"", kickci_cli::SCHEMA)));
        let _ = MeasureReport::csv_header();
    });
}
