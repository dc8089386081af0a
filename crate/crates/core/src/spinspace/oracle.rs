//! Brute-force reference on the full `2^(N_a + N_b)` photon space.
//!
//! Every photon is its own two-level system. The Hamiltonian is the
//! two-photon interaction summed over all cross-beam pairs, and observables
//! are computed from single-photon operators without reference to the Dicke
//! reduction, so this path is independent of the collective operators it
//! checks.
//!
//! Photon `p` occupies bit `n - 1 - p` of the register index (beam A photons
//! first); bit value 1 means `s3 = +1`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64 as C64;

use super::{BeamSize, QuantumState};
use crate::coupling::{Basis, PairCoefficients};
use crate::error::{Error, Result};
use crate::spinspace::OpKind;

/// Largest `N_a + N_b` accepted by [`brute_force_embed`].
pub const MAX_BRUTE_FORCE_PHOTONS: usize = 8;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Single-photon operator in the `(s3 = -1, s3 = +1)` basis.
pub fn single_photon(kind: OpKind) -> DMatrix<C64> {
    let z = c(0.0, 0.0);
    let one = c(1.0, 0.0);
    match kind {
        OpKind::Identity => DMatrix::identity(2, 2),
        OpKind::S3 => DMatrix::from_row_slice(2, 2, &[-one, z, z, one]),
        OpKind::Splus => DMatrix::from_row_slice(2, 2, &[z, z, one, z]),
        OpKind::Sminus => DMatrix::from_row_slice(2, 2, &[z, one, z, z]),
        OpKind::S1 => DMatrix::from_row_slice(2, 2, &[z, one, one, z]),
        OpKind::S2 => DMatrix::from_row_slice(2, 2, &[z, c(0.0, 1.0), c(0.0, -1.0), z]),
    }
}

/// The 4 × 4 interaction of one photon from each beam (beam A photon is the
/// outer factor).
pub fn two_photon_hamiltonian(basis: Basis, theta: f64) -> DMatrix<C64> {
    let k = PairCoefficients::new(basis, theta);
    let id = single_photon(OpKind::Identity);
    let sk = single_photon(k.axis);
    let s1 = single_photon(OpKind::S1);
    let r = |x: f64| c(x, 0.0);
    (sk.kronecker(&id) + id.kronecker(&sk)) * r(k.single) + s1.kronecker(&s1) * r(k.cross11) + sk.kronecker(&sk) * r(k.cross_kk)
}

fn check_size(n_a: BeamSize, n_b: BeamSize) -> Result<usize> {
    let n = n_a.photons() + n_b.photons();
    if n > MAX_BRUTE_FORCE_PHOTONS {
        return Err(Error::SizeLimit { got: n, max: MAX_BRUTE_FORCE_PHOTONS });
    }
    Ok(n)
}

/// Dense Hamiltonian on the full product space with unit coupling:
/// `Σ_{i ∈ A, j ∈ B} h_ij`.
pub fn brute_force_embed(n_a: BeamSize, n_b: BeamSize, theta: f64, basis: Basis) -> Result<DMatrix<C64>> {
    let n = check_size(n_a, n_b)?;
    let pair = two_photon_hamiltonian(basis, theta);
    let dim = 1usize << n;
    let mut h = DMatrix::<C64>::zeros(dim, dim);
    for i in 0..n_a.photons() {
        for j in 0..n_b.photons() {
            add_two_site(&mut h, &pair, n, i, n_a.photons() + j);
        }
    }
    Ok(h)
}

fn bit(x: usize, n: usize, p: usize) -> usize {
    (x >> (n - 1 - p)) & 1
}

/// Add `op` acting on photons `p` (outer) and `q` into `h`.
fn add_two_site(h: &mut DMatrix<C64>, op: &DMatrix<C64>, n: usize, p: usize, q: usize) {
    let dim = 1usize << n;
    let mask = (1usize << (n - 1 - p)) | (1usize << (n - 1 - q));
    for x in 0..dim {
        let rx = 2 * bit(x, n, p) + bit(x, n, q);
        for ry in 0..4 {
            let v = op[(rx, ry)];
            if v == c(0.0, 0.0) {
                continue;
            }
            let y = (x & !mask) | ((ry >> 1) << (n - 1 - p)) | ((ry & 1) << (n - 1 - q));
            h[(x, y)] += v;
        }
    }
}

fn add_one_site(h: &mut DMatrix<C64>, op: &DMatrix<C64>, n: usize, p: usize) {
    let dim = 1usize << n;
    let mask = 1usize << (n - 1 - p);
    for x in 0..dim {
        let rx = bit(x, n, p);
        for ry in 0..2 {
            let v = op[(rx, ry)];
            if v == c(0.0, 0.0) {
                continue;
            }
            let y = (x & !mask) | (ry << (n - 1 - p));
            h[(x, y)] += v;
        }
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Observables of a full-space state, per-photon normalized like the
/// Dicke-space ones.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FullObservables {
    pub sigma3: f64,
    pub tau3: f64,
    pub zeta: f64,
    pub zeta_rot: f64,
    pub s_ent: f64,
    pub var_ndiff: f64,
}

/// Helper for states and operators on the full photon register.
#[derive(Clone, Debug)]
pub struct FullSpace {
    pub n_a: BeamSize,
    pub n_b: BeamSize,
    n: usize,
}

impl FullSpace {
    pub fn new(n_a: BeamSize, n_b: BeamSize) -> Result<Self> {
        let n = check_size(n_a, n_b)?;
        Ok(Self { n_a, n_b, n })
    }

    pub fn dim(&self) -> usize {
        1 << self.n
    }

    /// Sum of a single-photon operator over the photons of one beam.
    pub fn collective(&self, beam: super::Beam, kind: OpKind) -> DMatrix<C64> {
        let op = single_photon(kind);
        let photons = match beam {
            super::Beam::A => 0..self.n_a.photons(),
            super::Beam::B => self.n_a.photons()..self.n,
        };
        let mut m = DMatrix::zeros(self.dim(), self.dim());
        for p in photons {
            add_one_site(&mut m, &op, self.n, p);
        }
        m
    }

    /// Map a symmetric (Dicke) state into the register: each `|k_a, k_b>`
    /// becomes the normalized sum of bit strings with `k_a` up-photons in
    /// beam A and `k_b` in beam B.
    pub fn embed(&self, state: &QuantumState) -> DVector<C64> {
        let (na, nb) = (self.n_a.photons(), self.n_b.photons());
        let mut v = DVector::zeros(self.dim());
        for x in 0..self.dim() {
            let ka = (x >> nb).count_ones() as usize;
            let kb = (x & ((1 << nb) - 1)).count_ones() as usize;
            v[x] = state.amplitude(ka, kb) / (binomial(na, ka) * binomial(nb, kb)).sqrt();
        }
        v
    }

    /// Reduced density matrix of beam A (trace over beam B photons).
    pub fn reduced_density_a(&self, psi: &DVector<C64>) -> DMatrix<C64> {
        let (da, db) = (1usize << self.n_a.photons(), 1usize << self.n_b.photons());
        let m = DMatrix::from_fn(da, db, |a, b| psi[a * db + b]);
        &m * m.adjoint()
    }

    pub fn observables(&self, psi: &DVector<C64>) -> FullObservables {
        use super::Beam::{A, B};
        let (na, nb) = (self.n_a.photons() as f64, self.n_b.photons() as f64);
        let ev = |m: &DMatrix<C64>| psi.dotc(&(m * psi)).re;
        let s3a = self.collective(A, OpKind::S3);
        let s3b = self.collective(B, OpKind::S3);
        let s1a = self.collective(A, OpKind::S1);
        let s1b = self.collective(B, OpKind::S1);
        let sigma3 = ev(&s3a) / na;
        let tau3 = ev(&s3b) / nb;
        let zeta = ev(&(&s3a * &s3b)) / (na * nb) - sigma3 * tau3;
        let zeta_rot = ev(&(&s1a * &s1b)) / (na * nb) - (ev(&s1a) / na) * (ev(&s1b) / nb);
        let var_ndiff = ev(&(&s3a * &s3a)) - ev(&s3a).powi(2);
        let rho = self.reduced_density_a(psi);
        let s_ent = SymmetricEigen::new(rho)
            .eigenvalues
            .iter()
            .filter(|&&l| l > 0.0)
            .map(|&l| -l * l.ln())
            .sum();
        FullObservables { sigma3, tau3, zeta, zeta_rot, s_ent, var_ndiff }
    }
}

/// Exact propagator `exp(-i H t)` of a dense Hermitian matrix via its
/// eigendecomposition.
pub struct DensePropagator {
    eigenvalues: DVector<f64>,
    eigenvectors: DMatrix<C64>,
}

impl DensePropagator {
    pub fn new(h: &DMatrix<C64>) -> Self {
        let eig = SymmetricEigen::new(h.clone());
        Self { eigenvalues: eig.eigenvalues, eigenvectors: eig.eigenvectors }
    }

    pub fn apply(&self, psi0: &DVector<C64>, t: f64) -> DVector<C64> {
        let coeffs = self.eigenvectors.adjoint() * psi0;
        let phased = DVector::from_iterator(
            coeffs.len(),
            coeffs.iter().zip(self.eigenvalues.iter()).map(|(c, &e)| c * C64::new(0.0, -e * t).exp()),
        );
        &self.eigenvectors * phased
    }
}
