//! Collective polarization operators of a photon beam in the Dicke basis.
//!
//! A beam of `N` photons, each a two-mode (Schwinger boson) system, is
//! represented in its permutation-symmetric sector: spin `j = N/2` with basis
//! `|j, m>`, `m = -j..=j`. Basis index `k = m + j` counts photons in the
//! second polarization mode, so `k = 0` is the all-`s3 = -1` state.
//!
//! Operators are stored unnormalized (`S = Σ_i s^i`, so `S3 |j,m> = 2m |j,m>`);
//! the per-photon means `σ = S / N` are formed at observation time.

pub mod oracle;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

pub use oracle::{brute_force_embed, FullSpace, MAX_BRUTE_FORCE_PHOTONS};

/// Tolerance on `‖ψ‖ - 1` accepted by state constructors.
pub const NORM_TOL: f64 = 1e-10;

/// Number of photons in one beam.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BeamSize(usize);

impl BeamSize {
    pub fn new(n_photons: usize) -> Result<Self> {
        if n_photons == 0 {
            return Err(Error::InvalidBeamSize(n_photons));
        }
        Ok(Self(n_photons))
    }

    pub fn photons(self) -> usize {
        self.0
    }

    /// Dicke dimension `N + 1`.
    pub fn dim(self) -> usize {
        self.0 + 1
    }

    pub fn spin(self) -> f64 {
        self.0 as f64 / 2.0
    }
}

/// A Dicke label `|j, m>` stored as the integers `2j` and `2m`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DickeIndex {
    two_j: u32,
    two_m: i32,
}

impl DickeIndex {
    pub fn new(beam: BeamSize, two_m: i32) -> Result<Self> {
        let two_j = beam.photons() as i64;
        let m = two_m as i64;
        if m.abs() > two_j || (two_j - m) % 2 != 0 {
            return Err(Error::InvalidParameter(format!("2m = {two_m} is not a valid projection for 2j = {two_j}")));
        }
        Ok(Self { two_j: two_j as u32, two_m })
    }

    pub fn from_index(beam: BeamSize, k: usize) -> Result<Self> {
        if k > beam.photons() {
            return Err(Error::InvalidParameter(format!("Dicke index {k} out of range for N = {}", beam.photons())));
        }
        Self::new(beam, 2 * k as i32 - beam.photons() as i32)
    }

    /// Highest-weight state `m = +j` (every photon with `s3 = +1`).
    pub fn top(beam: BeamSize) -> Self {
        Self { two_j: beam.photons() as u32, two_m: beam.photons() as i32 }
    }

    /// Lowest-weight state `m = -j`.
    pub fn bottom(beam: BeamSize) -> Self {
        Self { two_j: beam.photons() as u32, two_m: -(beam.photons() as i32) }
    }

    pub fn j(self) -> f64 {
        self.two_j as f64 / 2.0
    }

    pub fn m(self) -> f64 {
        self.two_m as f64 / 2.0
    }

    pub fn two_m(self) -> i32 {
        self.two_m
    }

    pub fn index(self) -> usize {
        ((self.two_m + self.two_j as i32) / 2) as usize
    }

    /// Eigenvalue of the unnormalized `S3`, i.e. `2m`.
    pub fn s3_eigenvalue(self) -> i32 {
        self.two_m
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum OpKind {
    S1,
    S2,
    S3,
    Splus,
    Sminus,
    Identity,
}

/// A collective operator of one beam as a sparse `(N+1) × (N+1)` matrix.
#[derive(Clone, Debug)]
pub struct CollectiveOp {
    pub beam: BeamSize,
    pub kind: OpKind,
    pub matrix: CsrMatrix,
}

/// `<k+1| S+ |k>` with `k` photons in the upper mode.
#[inline]
pub fn raise_coefficient(n: usize, k: usize) -> f64 {
    (((n - k) * (k + 1)) as f64).sqrt()
}

pub fn collective_op(beam: BeamSize, kind: OpKind) -> CollectiveOp {
    let n = beam.photons();
    let dim = beam.dim();
    let re = |x: f64| C64::new(x, 0.0);
    let raise = (0..n).map(|k| (k + 1, k, raise_coefficient(n, k)));
    let matrix = match kind {
        OpKind::Identity => CsrMatrix::identity(dim),
        OpKind::S3 => CsrMatrix::from_triplets(dim, dim, (0..dim).map(|k| (k, k, re(2.0 * k as f64 - n as f64)))),
        OpKind::Splus => CsrMatrix::from_triplets(dim, dim, raise.map(|(r, c, v)| (r, c, re(v)))),
        OpKind::Sminus => CsrMatrix::from_triplets(dim, dim, raise.map(|(r, c, v)| (c, r, re(v)))),
        // S1 = S+ + S-
        OpKind::S1 => CsrMatrix::from_triplets(dim, dim, raise.flat_map(|(r, c, v)| [(r, c, re(v)), (c, r, re(v))])),
        // S2 = (S+ - S-) / i = -i S+ + i S-
        OpKind::S2 => CsrMatrix::from_triplets(
            dim,
            dim,
            raise.flat_map(|(r, c, v)| [(r, c, C64::new(0.0, -v)), (c, r, C64::new(0.0, v))]),
        ),
    };
    CollectiveOp { beam, kind, matrix }
}

/// The observable `σ3'` measured in plane-polarization axes turned by 45°.
///
/// On the Poincaré sphere this is a quarter turn taking the `S3` axis onto
/// `S1`; the handedness is fixed as `σ3' = +σ1` for both beams.
pub fn rotate_basis_45(op: &CollectiveOp) -> Result<CollectiveOp> {
    match op.kind {
        OpKind::S3 => Ok(collective_op(op.beam, OpKind::S1)),
        other => Err(Error::UnsupportedKind(other)),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Beam {
    A,
    B,
}

/// Stokes description of one beam: photon count and normalized `Q, U, V`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StokesVector {
    pub s0: f64,
    pub q: f64,
    pub u: f64,
    pub v: f64,
}

impl StokesVector {
    pub fn degree_of_polarization(&self) -> f64 {
        (self.q * self.q + self.u * self.u + self.v * self.v).sqrt()
    }
}

/// A pure two-beam polarization state over the product Dicke basis.
///
/// Amplitudes are laid out row-major with beam A outer: index
/// `k_a * (N_b + 1) + k_b`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuantumState {
    n_a: BeamSize,
    n_b: BeamSize,
    amplitudes: Vec<C64>,
}

impl QuantumState {
    pub fn new(n_a: BeamSize, n_b: BeamSize, amplitudes: Vec<C64>) -> Result<Self> {
        if amplitudes.len() != n_a.dim() * n_b.dim() {
            return Err(Error::InvalidParameter(format!(
                "amplitude vector has length {}, expected {}",
                amplitudes.len(),
                n_a.dim() * n_b.dim()
            )));
        }
        let norm = vec_norm(&amplitudes);
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized(norm));
        }
        Ok(Self { n_a, n_b, amplitudes })
    }

    /// Normalize `amplitudes` and wrap them.
    pub fn normalized(n_a: BeamSize, n_b: BeamSize, mut amplitudes: Vec<C64>) -> Result<Self> {
        let norm = vec_norm(&amplitudes);
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::NotNormalized(norm));
        }
        amplitudes.iter_mut().for_each(|a| *a /= norm);
        Self::new(n_a, n_b, amplitudes)
    }

    /// Product Dicke state `|m_a> ⊗ |m_b>`.
    pub fn product(n_a: BeamSize, a: DickeIndex, n_b: BeamSize, b: DickeIndex) -> Self {
        let mut amplitudes = vec![C64::new(0.0, 0.0); n_a.dim() * n_b.dim()];
        amplitudes[a.index() * n_b.dim() + b.index()] = C64::new(1.0, 0.0);
        Self { n_a, n_b, amplitudes }
    }

    /// `σ3 = +1` on beam A and `τ3 = -1` on beam B: the opposite-polarization
    /// initial condition used throughout.
    pub fn opposed(n_a: BeamSize, n_b: BeamSize) -> Self {
        Self::product(n_a, DickeIndex::top(n_a), n_b, DickeIndex::bottom(n_b))
    }

    pub fn n_a(&self) -> BeamSize {
        self.n_a
    }

    pub fn n_b(&self) -> BeamSize {
        self.n_b
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amplitudes
    }

    pub fn index(&self, k_a: usize, k_b: usize) -> usize {
        k_a * self.n_b.dim() + k_b
    }

    pub fn amplitude(&self, k_a: usize, k_b: usize) -> C64 {
        self.amplitudes[self.index(k_a, k_b)]
    }

    pub fn norm(&self) -> f64 {
        vec_norm(&self.amplitudes)
    }

    /// Apply a single-beam operator (`op ⊗ 1` or `1 ⊗ op`).
    pub fn apply_beam_op(&self, op: &CsrMatrix, beam: Beam) -> Vec<C64> {
        apply_beam_op(op, beam, self.n_a.dim(), self.n_b.dim(), &self.amplitudes)
    }

    /// `<ψ| op |ψ>` for an operator acting on one beam.
    pub fn beam_expectation(&self, op: &CsrMatrix, beam: Beam) -> C64 {
        inner(&self.amplitudes, &self.apply_beam_op(op, beam))
    }
}

/// Apply `op` to one factor of a row-major `(dim_a × dim_b)` product vector.
pub fn apply_beam_op(op: &CsrMatrix, beam: Beam, dim_a: usize, dim_b: usize, psi: &[C64]) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); psi.len()];
    match beam {
        Beam::A => {
            for ka in 0..dim_a {
                for (kc, v) in op.row(ka) {
                    let src = &psi[kc * dim_b..(kc + 1) * dim_b];
                    let dst = &mut out[ka * dim_b..(ka + 1) * dim_b];
                    dst.iter_mut().zip(src).for_each(|(d, s)| *d += v * s);
                }
            }
        }
        Beam::B => {
            for ka in 0..dim_a {
                let src = &psi[ka * dim_b..(ka + 1) * dim_b];
                let dst = &mut out[ka * dim_b..(ka + 1) * dim_b];
                for (kb, d) in dst.iter_mut().enumerate() {
                    for (kc, v) in op.row(kb) {
                        *d += v * src[kc];
                    }
                }
            }
        }
    }
    out
}

/// `<x|y>` summed in index order.
pub fn inner(x: &[C64], y: &[C64]) -> C64 {
    x.iter().zip(y).fold(C64::new(0.0, 0.0), |acc, (a, b)| acc + a.conj() * b)
}

pub fn vec_norm(x: &[C64]) -> f64 {
    x.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
}

/// Stokes parameters of one beam: `Q = <S3>/N`, `U = <S1>/N`, `V = <S2>/N`.
pub fn stokes_of(state: &QuantumState, beam: Beam) -> StokesVector {
    let size = match beam {
        Beam::A => state.n_a,
        Beam::B => state.n_b,
    };
    let n = size.photons() as f64;
    let mean = |kind| state.beam_expectation(&collective_op(size, kind).matrix, beam).re / n;
    StokesVector { s0: n, q: mean(OpKind::S3), u: mean(OpKind::S1), v: mean(OpKind::S2) }
}
