use std::f64::consts::{FRAC_PI_2, LN_2};

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::checkpoint::Checkpoint;
use super::*;
use crate::coupling::{block_restrict, build_hamiltonian, rescaled_coupling, Basis, MTotalBlock};
use crate::spinspace::oracle::DensePropagator;
use crate::spinspace::{collective_op, Beam, DickeIndex, OpKind};

fn beam(n: usize) -> BeamSize {
    BeamSize::new(n).unwrap()
}

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// `(|k_a, k_b> + |k_a', k_b'>) / sqrt 2`.
fn two_term(n: usize, first: (usize, usize), second: (usize, usize)) -> QuantumState {
    let b = beam(n);
    let mut amps = vec![c(0.0); b.dim() * b.dim()];
    amps[first.0 * b.dim() + first.1] = c(1.0);
    amps[second.0 * b.dim() + second.1] = c(1.0);
    QuantumState::normalized(b, b, amps).unwrap()
}

fn circular(n: usize, theta: f64) -> TwoBeamHamiltonian {
    build_hamiltonian(Basis::Circular, theta, beam(n), beam(n), rescaled_coupling(beam(n), beam(n))).unwrap()
}

fn plane(n: usize, theta: f64) -> TwoBeamHamiltonian {
    build_hamiltonian(Basis::Plane, theta, beam(n), beam(n), rescaled_coupling(beam(n), beam(n))).unwrap()
}

#[test]
fn zero_hamiltonian_keeps_state() {
    let b = beam(3);
    let h = circular(3, 0.0);
    let mut block = block_restrict(&h, 0).unwrap();
    block.matrix = crate::sparse::CsrMatrix::zeros(block.dim(), block.dim());
    let start = QuantumState::opposed(b, b);
    let plan = EvolutionPlan::uniform(Generator::Block(&block), 3.0, 0.5, 1e-10).unwrap();
    let states = evolve(&start, &plan).unwrap();
    assert_eq!(states.len(), 7);
    assert!(states.iter().all(|s| *s == start));
}

#[test]
fn single_photon_rabi_flop() {
    // block {(0,1), (1,0)} with off-diagonal 4 g = 4, so <σ3> = cos 8t
    let h = circular(1, 0.0);
    let block = block_restrict(&h, 0).unwrap();
    assert_eq!(block.matrix.to_dense(), DMatrix::from_row_slice(2, 2, &[c(0.0), c(4.0), c(4.0), c(0.0)]));
    let start = QuantumState::opposed(beam(1), beam(1));
    for generator in [Generator::Block(&block), Generator::Full(&h)] {
        let plan = EvolutionPlan::uniform(generator, 2.0, 0.01, 1e-12).unwrap();
        let series = observe(&start, &plan).unwrap();
        for (t, s) in series.t.iter().zip(&series.sigma3) {
            assert!((s - (8.0 * t).cos()).abs() < 1e-10, "t = {t}: {s}");
        }
    }
}

#[test]
fn matches_dense_exponential_n4() {
    let b = beam(4);
    let hams = [plane(4, 0.7), circular(4, 0.3), plane(4, 0.0)];
    let mut amps: Vec<C64> = (0..25).map(|k| C64::new((k as f64 * 0.37).sin(), (k as f64 * 0.91).cos())).collect();
    let n = crate::spinspace::vec_norm(&amps);
    amps.iter_mut().for_each(|a| *a /= n);
    let start = QuantumState::new(b, b, amps).unwrap();
    for h in &hams {
        let mut plan = EvolutionPlan::uniform(Generator::Full(h), 5.0, 0.25, 1e-12).unwrap();
        plan.krylov_dim = 12;
        let states = evolve(&start, &plan).unwrap();
        let dense = DensePropagator::new(&h.matrix().to_dense());
        let psi0 = DVector::from_column_slice(start.amplitudes());
        for (t, s) in plan.t_grid.iter().zip(&states) {
            let want = dense.apply(&psi0, *t);
            let err = s.amplitudes().iter().zip(want.iter()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            assert!(err < 1e-9, "t = {t}: amplitude error {err}");
        }
    }
}

#[test]
fn block_and_full_runs_agree() {
    let h = circular(4, 0.0);
    let block = block_restrict(&h, 0).unwrap();
    let start = QuantumState::opposed(beam(4), beam(4));
    let full = observe(&start, &EvolutionPlan::uniform(Generator::Full(&h), 3.0, 0.05, 1e-12).unwrap()).unwrap();
    let part = observe(&start, &EvolutionPlan::uniform(Generator::Block(&block), 3.0, 0.05, 1e-12).unwrap()).unwrap();
    let fields = |s: &ObservableSeries| [s.sigma3.clone(), s.tau3.clone(), s.zeta.clone(), s.zeta_rot.clone(), s.s_ent.clone(), s.var_ndiff.clone()];
    for (x, y) in fields(&full).iter().zip(fields(&part).iter()) {
        for (a, b) in x.iter().zip(y) {
            assert!((a - b).abs() < 1e-10);
        }
    }
    // and the block states embed back to the full ones
    let plan_f = EvolutionPlan::uniform(Generator::Full(&h), 1.0, 0.5, 1e-12).unwrap();
    let plan_b = EvolutionPlan::uniform(Generator::Block(&block), 1.0, 0.5, 1e-12).unwrap();
    for (f, b) in evolve(&start, &plan_f).unwrap().iter().zip(evolve(&start, &plan_b).unwrap()) {
        let err = f.amplitudes().iter().zip(b.amplitudes()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
        assert!(err < 1e-10);
    }
}

#[test]
fn oracle_equivalence_small_beams() {
    for n in 1..=3 {
        for basis in [Basis::Plane, Basis::Circular] {
            for theta in [0.0, 0.2, FRAC_PI_2] {
                let dev = oracle_deviation(n, n, basis, theta, 5.0, 0.1).unwrap();
                assert!(dev < 1e-8, "N = {n}, {basis}, theta = {theta}: {dev}");
            }
        }
    }
    // unequal beams
    assert!(oracle_deviation(2, 3, Basis::Plane, 0.4, 2.0, 0.1).unwrap() < 1e-8);
}

#[test]
fn product_states_are_uncorrelated() {
    for (ka, kb) in [(0, 0), (3, 1), (4, 4), (2, 0)] {
        let s = QuantumState::product(beam(4), DickeIndex::from_index(beam(4), ka).unwrap(), beam(4), DickeIndex::from_index(beam(4), kb).unwrap());
        let (s3, t3, zeta) = expectations(&s);
        assert_eq!(s3, (2.0 * ka as f64 - 4.0) / 4.0);
        assert_eq!(t3, (2.0 * kb as f64 - 4.0) / 4.0);
        assert_eq!(zeta, 0.0);
        assert_eq!(variance_ndiff(&s, Beam::A), 0.0);
        assert_eq!(variance_ndiff(&s, Beam::B), 0.0);
    }
    let opposed = QuantumState::opposed(beam(5), beam(5));
    assert!(zeta_rotated(&opposed).abs() < 1e-15);
}

#[test]
fn cat_states() {
    let n = 6;
    let anti = two_term(n, (n, 0), (0, n));
    let (s3, t3, zeta) = expectations(&anti);
    assert!(s3.abs() < 1e-15 && t3.abs() < 1e-15);
    assert!((zeta + 1.0).abs() < 1e-15);
    assert!((variance_ndiff(&anti, Beam::A) - (n * n) as f64).abs() < 1e-12);
    let aligned = two_term(n, (n, n), (0, 0));
    assert!((expectations(&aligned).2 - 1.0).abs() < 1e-15);

    let rho = reduced_density(&anti, Beam::A);
    let eig = SymmetricEigen::new(rho.clone()).eigenvalues;
    let mut nonzero: Vec<f64> = eig.iter().copied().filter(|l| l.abs() > 1e-14).collect();
    nonzero.sort_by(f64::total_cmp);
    assert_eq!(nonzero.len(), 2);
    assert!(nonzero.iter().all(|l| (l - 0.5).abs() < 1e-14));
    assert_eq!(entanglement_entropy(&rho), LN_2);
    assert_eq!(measure(&anti).s_ent, LN_2);

    let block = block_restrict(&circular(n, 0.0), 0).unwrap();
    let bs = BlockState::from_state(&anti, &block).unwrap();
    assert_eq!(measure_block(&bs).s_ent, LN_2);
}

#[test]
fn rotated_cat_has_unit_zeta_rot() {
    let b = beam(3);
    let s1 = collective_op(b, OpKind::S1).matrix.to_dense();
    let eig = SymmetricEigen::new(s1);
    let top = eig.eigenvalues.imax();
    let bottom = eig.eigenvalues.imin();
    let u = eig.eigenvectors.column(top).into_owned();
    let v = eig.eigenvectors.column(bottom).into_owned();
    let uu = u.kronecker(&u);
    let vv = v.kronecker(&v);
    let cat = QuantumState::normalized(b, b, (uu + vv).iter().copied().collect()).unwrap();
    assert!((zeta_rotated(&cat) - 1.0).abs() < 1e-12);
}

#[test]
fn reduced_density_properties() {
    let prod = QuantumState::opposed(beam(4), beam(3));
    for keep in [Beam::A, Beam::B] {
        let rho = reduced_density(&prod, keep);
        assert!((&rho * &rho - &rho).norm() < 1e-15);
        assert_eq!(entanglement_entropy(&rho), 0.0);
    }
    let h = plane(4, 0.6);
    let plan = EvolutionPlan::new(Generator::Full(&h), vec![0.0, 1.3], 1e-12).unwrap();
    let mid = evolve(&QuantumState::opposed(beam(4), beam(4)), &plan).unwrap().pop().unwrap();
    let rho_a = reduced_density(&mid, Beam::A);
    let rho_b = reduced_density(&mid, Beam::B);
    for rho in [&rho_a, &rho_b] {
        assert!((rho.trace() - c(1.0)).norm() < 1e-12);
        assert!((rho - rho.adjoint()).norm() < 1e-14);
        let eig = SymmetricEigen::new(rho.clone()).eigenvalues;
        assert!(eig.min() >= -1e-12);
    }
    assert!((entanglement_entropy(&rho_a) - entanglement_entropy(&rho_b)).abs() < 1e-10);
    assert!(entanglement_entropy(&rho_a) > 0.01);
}

#[test]
fn maximally_mixed_entropy() {
    for n in [1usize, 4, 10] {
        let rho = DMatrix::<C64>::identity(n + 1, n + 1) / c((n + 1) as f64);
        assert!((entanglement_entropy(&rho) - ((n + 1) as f64).ln()).abs() < 1e-12);
    }
}

#[test]
fn charge_conservation_in_full_space() {
    let h = circular(3, 0.0);
    let b = beam(3);
    let start = QuantumState::product(b, DickeIndex::from_index(b, 3).unwrap(), b, DickeIndex::from_index(b, 1).unwrap());
    let plan = EvolutionPlan::uniform(Generator::Full(&h), 5.0, 0.1, 1e-12).unwrap();
    for s in evolve(&start, &plan).unwrap() {
        let (s3, t3, _) = expectations(&s);
        assert!((3.0 * s3 + 3.0 * t3 - 2.0).abs() < 1e-10);
    }
}

#[test]
fn fig3_exchange_antisymmetry_and_budgets() {
    let series = fig3_series(40, 3.0, 0.01, 1e-10).unwrap();
    for (s, t) in series.sigma3.iter().zip(&series.tau3) {
        assert!((s + t).abs() < 1e-8);
    }
    assert!(series.norm_drift() <= 1e-10);
    assert!(series.energy_drift() <= 1e-8);
    assert_eq!(series.zeta[0], 0.0);
    assert_eq!(series.s_ent[0], 0.0);
    let bound = 41f64.ln();
    assert!(series.s_ent.iter().all(|&s| (0.0..=bound).contains(&s)));
    assert!(series.sigma3.iter().all(|s| s.abs() <= 1.0 + 1e-12));
}

#[test]
fn plane_run_budgets() {
    let h = plane(10, 0.3);
    let plan = EvolutionPlan::uniform(Generator::Full(&h), 10.0, 0.05, 1e-10).unwrap();
    let series = observe(&QuantumState::opposed(beam(10), beam(10)), &plan).unwrap();
    assert!(series.norm_drift() <= 1e-10);
    assert!(series.energy_drift() <= 1e-8);
    assert!(series.s_ent.iter().all(|&s| s >= 0.0 && s <= 11f64.ln() + 1e-12));
}

#[test]
fn deterministic_reruns() {
    let a = fig3_series(30, 2.0, 0.01, 1e-10).unwrap();
    let b = fig3_series(30, 2.0, 0.01, 1e-10).unwrap();
    assert_eq!(a, b);
    let h = plane(6, 0.5);
    let plan = EvolutionPlan::uniform(Generator::Full(&h), 2.0, 0.1, 1e-10).unwrap();
    let start = QuantumState::opposed(beam(6), beam(6));
    assert_eq!(observe(&start, &plan).unwrap(), observe(&start, &plan).unwrap());
}

#[test]
fn plan_validation() {
    let h = plane(2, 0.1);
    assert!(EvolutionPlan::new(Generator::Full(&h), vec![0.0, 1.0], 0.0).is_err());
    assert!(EvolutionPlan::new(Generator::Full(&h), vec![0.0, 1.0], 1e-5).is_err());
    assert!(EvolutionPlan::new(Generator::Full(&h), vec![0.0, 1.0, 1.0], 1e-8).is_err());
    assert!(EvolutionPlan::new(Generator::Full(&h), vec![], 1e-8).is_err());
    assert!(EvolutionPlan::uniform(Generator::Full(&h), -1.0, 0.1, 1e-8).is_err());
    let plan = EvolutionPlan::uniform(Generator::Full(&h), 1.0, 0.3, 1e-8).unwrap();
    assert_eq!(plan.t_grid.len(), 4);
    assert_eq!(*plan.t_grid.last().unwrap(), 1.0);
}

#[test]
fn mismatched_inputs_are_rejected() {
    let h = plane(2, 0.1);
    let plan = EvolutionPlan::uniform(Generator::Full(&h), 1.0, 0.5, 1e-8).unwrap();
    assert!(evolve(&QuantumState::opposed(beam(3), beam(2)), &plan).is_err());
    let block = block_restrict(&circular(2, 0.0), 0).unwrap();
    let off_block = QuantumState::product(beam(2), DickeIndex::top(beam(2)), beam(2), DickeIndex::top(beam(2)));
    let plan = EvolutionPlan::uniform(Generator::Block(&block), 1.0, 0.5, 1e-8).unwrap();
    assert!(matches!(evolve(&off_block, &plan), Err(Error::InvalidParameter(_))));
}

#[test]
fn unreachable_tolerance_is_reported() {
    let h = plane(6, 0.4);
    let mut plan = EvolutionPlan::uniform(Generator::Full(&h), 1.0, 0.5, 1e-300).unwrap();
    plan.krylov_dim = 2;
    let err = observe(&QuantumState::opposed(beam(6), beam(6)), &plan).unwrap_err();
    assert!(matches!(err, Error::ToleranceNotAchievable { .. }), "{err}");
}

#[test]
fn checkpoint_resume_matches_continuous_run() {
    let h = plane(5, 0.8);
    let start = QuantumState::opposed(beam(5), beam(5));
    let whole = evolve(&start, &EvolutionPlan::new(Generator::Full(&h), vec![0.0, 1.0, 2.0], 1e-12).unwrap()).unwrap();
    let mid = &whole[1];
    let ckpt = Checkpoint {
        n_a: beam(5),
        n_b: beam(5),
        basis: Basis::Plane,
        theta: 0.8,
        t: 1.0,
        block: None,
        amplitudes: mid.amplitudes().to_vec(),
    };
    let mut buf = Vec::new();
    ckpt.write_to(&mut buf).unwrap();
    let back = Checkpoint::read_from(&buf[..]).unwrap();
    let resumed_start = QuantumState::new(back.n_a, back.n_b, back.amplitudes).unwrap();
    let resumed = evolve(&resumed_start, &EvolutionPlan::new(Generator::Full(&h), vec![back.t, 2.0], 1e-12).unwrap()).unwrap();
    let err = resumed[1].amplitudes().iter().zip(whole[2].amplitudes()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    assert!(err < 1e-10);
}

#[test]
fn break_time_grows_with_n() {
    let config = BreakTimeConfig { t_end: 3.0, dt: 0.005, ..Default::default() };
    let report = break_time_analysis(&[8, 16], &config).unwrap();
    assert!(report.runs[1].first_crossing > report.runs[0].first_crossing);
    assert!(report.slope > 0.0);
    assert_eq!(report.increments.len(), 1);
}

#[test]
fn block_state_round_trip() {
    let block: MTotalBlock = block_restrict(&circular(3, 0.0), 0).unwrap();
    let s = two_term(3, (3, 0), (1, 2));
    let bs = BlockState::from_state(&s, &block).unwrap();
    assert_eq!(bs.amplitudes.len(), 4);
    assert_eq!(bs.to_state().unwrap(), s);
}

#[test]
fn csv_layout() {
    let series = fig3_series(4, 0.2, 0.1, 1e-10).unwrap();
    let mut buf = Vec::new();
    series.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "# s_ent in nats");
    assert_eq!(lines[1], "t,sigma3,tau3,zeta,zeta_rot,s_ent,var_ndiff,norm,energy");
    assert_eq!(lines.len(), 2 + 3);
    assert!(lines[2].starts_with("0.00000000000000000e0,1.00000000000000000e0,-1.00000000000000000e0,"));
}
