//! Per-photon polarization means, correlation defects, reduced densities and
//! entanglement entropy of two-beam states.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64 as C64;

use crate::spinspace::{collective_op, inner, raise_coefficient, Beam, OpKind, QuantumState};

use super::BlockState;

/// Everything recorded per sample.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Observables {
    pub sigma3: f64,
    pub tau3: f64,
    pub zeta: f64,
    /// `<σ1>`, i.e. `σ3'` of the 45° rotated basis.
    pub sigma1: f64,
    pub tau1: f64,
    pub zeta_rot: f64,
    /// Entanglement entropy in nats.
    pub s_ent: f64,
    /// `Var(N↑ - N↓)` of beam A, unnormalized.
    pub var_ndiff: f64,
}

/// Marginal `S3` statistics of both beams from Dicke-index probabilities.
struct S3Moments {
    sigma3: f64,
    tau3: f64,
    zeta: f64,
    var_a: f64,
    var_b: f64,
}

fn s3_moments(na: usize, nb: usize, weighted: impl Iterator<Item = ((usize, usize), f64)>) -> S3Moments {
    let (mut a, mut b, mut ab, mut aa, mut bb) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for ((ka, kb), p) in weighted {
        let sa = 2.0 * ka as f64 - na as f64;
        let sb = 2.0 * kb as f64 - nb as f64;
        a += p * sa;
        b += p * sb;
        ab += p * sa * sb;
        aa += p * sa * sa;
        bb += p * sb * sb;
    }
    let (fa, fb) = (na as f64, nb as f64);
    S3Moments {
        sigma3: a / fa,
        tau3: b / fb,
        zeta: ab / (fa * fb) - (a / fa) * (b / fb),
        var_a: aa - a * a,
        var_b: bb - b * b,
    }
}

fn full_moments(state: &QuantumState) -> S3Moments {
    let (na, nb) = (state.n_a().photons(), state.n_b().photons());
    let db = nb + 1;
    let amps = state.amplitudes();
    s3_moments(na, nb, amps.iter().enumerate().map(|(i, a)| ((i / db, i % db), a.norm_sqr())))
}

/// `(<σ3>, <τ3>, ζ)` with `ζ = <σ3 τ3> - <σ3><τ3>`.
pub fn expectations(state: &QuantumState) -> (f64, f64, f64) {
    let m = full_moments(state);
    (m.sigma3, m.tau3, m.zeta)
}

/// `(<σ1>, <τ1>, <σ1 τ1>)`.
fn rotated_moments(state: &QuantumState) -> (f64, f64, f64) {
    let (na, nb) = (state.n_a(), state.n_b());
    let s1 = collective_op(na, OpKind::S1).matrix;
    let t1 = collective_op(nb, OpKind::S1).matrix;
    let psi_a = state.apply_beam_op(&s1, Beam::A);
    let psi_b = state.apply_beam_op(&t1, Beam::B);
    let (fa, fb) = (na.photons() as f64, nb.photons() as f64);
    let sigma1 = inner(state.amplitudes(), &psi_a).re / fa;
    let tau1 = inner(state.amplitudes(), &psi_b).re / fb;
    // <ψ| S1 T1 |ψ> = <S1 ψ | T1 ψ> since S1 is Hermitian and commutes with T1
    let corr = inner(&psi_a, &psi_b).re / (fa * fb);
    (sigma1, tau1, corr)
}

/// `ζ' = <σ1 τ1> - <σ1><τ1>`: the correlation defect in the 45° rotated basis.
pub fn zeta_rotated(state: &QuantumState) -> f64 {
    let (s, t, st) = rotated_moments(state);
    st - s * t
}

/// Reduced density matrix of the kept beam, indexed by Dicke index `k`.
pub fn reduced_density(state: &QuantumState, keep: Beam) -> DMatrix<C64> {
    let (da, db) = (state.n_a().dim(), state.n_b().dim());
    let m = DMatrix::from_row_slice(da, db, state.amplitudes());
    match keep {
        Beam::A => &m * m.adjoint(),
        Beam::B => m.transpose() * m.conjugate(),
    }
}

/// Entropy `-Σ λ ln λ` of a von Neumann spectrum, with `0 ln 0 = 0`.
/// Negative round-off eigenvalues are dropped and the rest rescaled to unit
/// trace.
pub fn spectrum_entropy(eigenvalues: impl IntoIterator<Item = f64>) -> f64 {
    let positive: Vec<f64> = eigenvalues.into_iter().filter(|&l| l > 0.0).collect();
    let trace: f64 = positive.iter().sum();
    positive.iter().map(|l| l / trace).map(|l| -l * l.ln()).sum()
}

/// `S = -Tr ρ ln ρ` in nats.
pub fn entanglement_entropy(rho: &DMatrix<C64>) -> f64 {
    spectrum_entropy(SymmetricEigen::new(rho.clone()).eigenvalues.iter().copied())
}

/// `<S3²> - <S3>²` of one beam, unnormalized.
pub fn variance_ndiff(state: &QuantumState, beam: Beam) -> f64 {
    let m = full_moments(state);
    match beam {
        Beam::A => m.var_a,
        Beam::B => m.var_b,
    }
}

/// All observables of a general state. The entropy uses the smaller beam's
/// reduced density (both have the same nonzero spectrum).
pub fn measure(state: &QuantumState) -> Observables {
    let m = full_moments(state);
    let (sigma1, tau1, corr) = rotated_moments(state);
    let keep = if state.n_a().dim() <= state.n_b().dim() { Beam::A } else { Beam::B };
    Observables {
        sigma3: m.sigma3,
        tau3: m.tau3,
        zeta: m.zeta,
        sigma1,
        tau1,
        zeta_rot: corr - sigma1 * tau1,
        s_ent: entanglement_entropy(&reduced_density(state, keep)),
        var_ndiff: m.var_a,
    }
}

/// Observables of a state confined to a fixed-`m_a + m_b` block.
///
/// Each `k_a` appears at most once, so the reduced densities are diagonal and
/// `σ1`, `τ1` vanish; `<S1 T1>` reduces to `2 Re <S+ T->`.
pub fn measure_block(state: &BlockState) -> Observables {
    let (na, nb) = (state.n_a.photons(), state.n_b.photons());
    let amps = &state.amplitudes;
    let map = &state.index_map;
    let m = s3_moments(na, nb, map.iter().zip(amps).map(|(&k, a)| (k, a.norm_sqr())));
    // map is ordered by ascending k_a, so (k_a + 1, k_b - 1) is the next entry
    let mut raise_lower = C64::new(0.0, 0.0);
    for i in 0..map.len().saturating_sub(1) {
        let (ka, kb) = map[i];
        let c = raise_coefficient(na, ka) * raise_coefficient(nb, kb - 1);
        raise_lower += amps[i + 1].conj() * amps[i] * c;
    }
    let s_ent = spectrum_entropy(amps.iter().map(|a| a.norm_sqr()));
    Observables {
        sigma3: m.sigma3,
        tau3: m.tau3,
        zeta: m.zeta,
        sigma1: 0.0,
        tau1: 0.0,
        zeta_rot: 2.0 * raise_lower.re / (na as f64 * nb as f64),
        s_ent,
        var_ndiff: m.var_a,
    }
}
