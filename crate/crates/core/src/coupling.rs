//! Coupling constants and two-beam effective Hamiltonians.
//!
//! Physical constants (CODATA 2018):
//!
//! | quantity | value |
//! |---|---|
//! | fine-structure constant α | 7.2973525693e-3 |
//! | electron rest energy m_e c² | 510 998.950 00 eV |
//! | Rydberg energy | 13.605 693 122 994 eV |
//! | ħc | 1.973 269 804e-5 eV·cm |
//! | speed of light c | 2.997 924 58e10 cm/s |
//! | elementary charge | 1.602 176 634e-19 J/eV |
//! | hydrogen atom mass | 1.007 825 032 07 u × 1.660 539 066 60e-24 g |
//!
//! The hydrogen coupling is evaluated in natural units (ħ = c = 1, Gaussian
//! `e² = α`), where `R` has dimension energy⁻². Multiplying by `(ħc)³`
//! converts it to eV·cm³, and `n_γ R / ħc` is an inverse length in cm⁻¹.

use std::sync::OnceLock;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::spinspace::{collective_op, BeamSize, OpKind};
use crate::sparse::CsrMatrix;

pub const FINE_STRUCTURE: f64 = 7.297_352_569_3e-3;
pub const ELECTRON_MASS_EV: f64 = 510_998.950_00;
pub const RYDBERG_EV: f64 = 13.605_693_122_994;
pub const HBAR_C_EV_CM: f64 = 1.973_269_804e-5;
pub const SPEED_OF_LIGHT_CM_S: f64 = 2.997_924_58e10;
pub const JOULE_PER_EV: f64 = 1.602_176_634e-19;
pub const HYDROGEN_MASS_G: f64 = 1.007_825_032_07 * 1.660_539_066_60e-24;

/// Prefactor of the exchange-length scaling law, cm⁻¹.
pub const EXCHANGE_PREFACTOR_PER_CM: f64 = 1.8e-7;

/// Photon energy above which the dipole-regime treatment is suspect.
pub const DIPOLE_WARN_EV: f64 = 10.0;

/// Beam and medium parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhysicalInputs {
    /// Photon energies, eV.
    pub omega1: f64,
    pub omega2: f64,
    /// Electron density, cm⁻³.
    pub n_e: f64,
    /// Mass density, g·cm⁻³.
    pub rho: f64,
    /// Beam intensities, W·cm⁻².
    pub i1: f64,
    pub i2: f64,
}

impl PhysicalInputs {
    /// Hydrogen gas of mass density `rho`: one electron per atom.
    pub fn hydrogen(omega1: f64, omega2: f64, rho: f64, i1: f64, i2: f64) -> Self {
        Self { omega1, omega2, n_e: rho / HYDROGEN_MASS_G, rho, i1, i2 }
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("omega1", self.omega1),
            ("omega2", self.omega2),
            ("n_e", self.n_e),
            ("rho", self.rho),
            ("I1", self.i1),
            ("I2", self.i2),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidParameter(format!("{name} must be finite and nonnegative, got {v}")));
            }
        }
        Ok(())
    }

    /// Human-readable warnings for inputs outside the dipole regime.
    pub fn warnings(&self) -> Vec<String> {
        [("omega1", self.omega1), ("omega2", self.omega2)]
            .into_iter()
            .filter(|(_, w)| *w > DIPOLE_WARN_EV)
            .map(|(name, w)| format!("{name} = {w} eV is above {DIPOLE_WARN_EV} eV; dipole approximation is unreliable"))
            .collect()
    }
}

/// Hydrogen coupling `R = 2529 π² e⁴ ω² n_e / (8 m_e² Ry⁵)` in eV·cm³.
pub fn hydrogen_r(omega_ev: f64, n_e_per_cm3: f64) -> f64 {
    let pi2 = std::f64::consts::PI * std::f64::consts::PI;
    let natural = 2529.0 * pi2 * FINE_STRUCTURE * FINE_STRUCTURE * omega_ev * omega_ev
        / (8.0 * ELECTRON_MASS_EV * ELECTRON_MASS_EV * RYDBERG_EV.powi(5));
    // n_e (cm⁻³) → eV³ and R (eV⁻²) → eV·cm³ each contribute (ħc)³.
    natural * n_e_per_cm3 * HBAR_C_EV_CM.powi(6)
}

/// Inverse exchange length `L⁻¹` in cm⁻¹ from the scaling law
/// `1.8e-7 · √(ω1 ω2)/eV · ρ/(g cm⁻³) · √(I1 I2)/(W cm⁻²)`.
pub fn exchange_length(inputs: &PhysicalInputs) -> f64 {
    EXCHANGE_PREFACTOR_PER_CM * (inputs.omega1 * inputs.omega2).sqrt() * inputs.rho * (inputs.i1 * inputs.i2).sqrt()
}

/// Photon number density (cm⁻³) of a beam with intensity in W·cm⁻² and
/// photon energy in eV.
pub fn photon_density(intensity: f64, omega_ev: f64) -> f64 {
    intensity / (omega_ev * JOULE_PER_EV * SPEED_OF_LIGHT_CM_S)
}

/// Seconds corresponding to `t` dimensionless time units `[n_γ R]⁻¹`.
pub fn physical_time_s(t: f64, inverse_length_per_cm: f64) -> f64 {
    t / (inverse_length_per_cm * SPEED_OF_LIGHT_CM_S)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CouplingConstants {
    /// Hydrogen coupling, eV·cm³.
    pub r: f64,
    /// `R / V`, eV.
    pub g: f64,
    /// Photon densities, cm⁻³.
    pub n1: f64,
    pub n2: f64,
    /// `√(n1 n2) R / ħc`, cm⁻¹.
    pub inverse_length: f64,
}

impl CouplingConstants {
    /// Evaluate the hydrogen coupling at `ω = √(ω1 ω2)` for a quantization
    /// volume `volume_cm3`.
    pub fn from_inputs(inputs: &PhysicalInputs, volume_cm3: f64) -> Result<Self> {
        inputs.validate()?;
        if !(volume_cm3 > 0.0) {
            return Err(Error::InvalidParameter(format!("volume must be positive, got {volume_cm3}")));
        }
        let omega = (inputs.omega1 * inputs.omega2).sqrt();
        let r = hydrogen_r(omega, inputs.n_e);
        let n1 = photon_density(inputs.i1, inputs.omega1);
        let n2 = photon_density(inputs.i2, inputs.omega2);
        Ok(Self { r, g: r / volume_cm3, n1, n2, inverse_length: (n1 * n2).sqrt() * r / HBAR_C_EV_CM })
    }

    /// Ratio of the microscopic `n_γ R` to the scaling-law value.
    pub fn scaling_law_ratio(&self, inputs: &PhysicalInputs) -> f64 {
        self.inverse_length / exchange_length(inputs)
    }
}

/// Polarization basis the two-beam Hamiltonian is written in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Basis {
    Plane,
    Circular,
}

impl std::str::FromStr for Basis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "plane" => Ok(Self::Plane),
            "circular" => Ok(Self::Circular),
            other => Err(Error::InvalidParameter(format!("unknown basis '{other}'"))),
        }
    }
}

impl std::fmt::Display for Basis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Plane => "plane",
            Self::Circular => "circular",
        })
    }
}

/// Coefficients of the two-photon interaction
/// `h = single (s_k + t_k) + cross11 s1 t1 + cross_kk s_k t_k`,
/// where `k` is 3 in the plane basis and 2 in the circular basis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairCoefficients {
    pub axis: OpKind,
    pub single: f64,
    pub cross11: f64,
    pub cross_kk: f64,
}

impl PairCoefficients {
    pub fn new(basis: Basis, theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        let sin2 = s * s;
        let (axis, single) = match basis {
            Basis::Plane => (OpKind::S3, -sin2),
            Basis::Circular => (OpKind::S2, sin2),
        };
        Self { axis, single, cross11: 2.0 * c, cross_kk: 1.0 + c * c }
    }
}

/// Coupling that makes one time unit equal `[n_γ R]⁻¹` for a run with
/// beam sizes `n_a`, `n_b`; reduces to `1/N` for equal beams.
pub fn rescaled_coupling(n_a: BeamSize, n_b: BeamSize) -> f64 {
    1.0 / ((n_a.photons() * n_b.photons()) as f64).sqrt()
}

/// Sparse Hermitian operator on the product Dicke space
/// `H = g [single (N_b S_k ⊗ 1 + N_a 1 ⊗ T_k) + cross11 S1 ⊗ T1 + cross_kk S_k ⊗ T_k]`.
///
/// The full matrix is assembled on first use; block restrictions are built
/// straight from the stencil.
#[derive(Debug)]
pub struct TwoBeamHamiltonian {
    pub basis: Basis,
    pub theta: f64,
    pub n_a: BeamSize,
    pub n_b: BeamSize,
    pub g: f64,
    pub conserves_total_m: bool,
    coefficients: PairCoefficients,
    // per-beam operators: [S1, S_k, identity]
    ops_a: [CsrMatrix; 3],
    ops_b: [CsrMatrix; 3],
    matrix: OnceLock<CsrMatrix>,
}

/// Term list entry: coefficient and per-beam operator slots.
type Term = (f64, usize, usize);

const IDX_S1: usize = 0;
const IDX_SK: usize = 1;
const IDX_ID: usize = 2;

pub fn build_hamiltonian(basis: Basis, theta: f64, n_a: BeamSize, n_b: BeamSize, g: f64) -> Result<TwoBeamHamiltonian> {
    if !(0.0..=std::f64::consts::PI).contains(&theta) {
        return Err(Error::InvalidParameter(format!("theta = {theta} outside [0, π]")));
    }
    if !(g > 0.0 && g.is_finite()) {
        return Err(Error::InvalidParameter(format!("coupling g must be positive, got {g}")));
    }
    let coefficients = PairCoefficients::new(basis, theta);
    let ops = |beam: BeamSize| {
        [
            collective_op(beam, OpKind::S1).matrix,
            collective_op(beam, coefficients.axis).matrix,
            collective_op(beam, OpKind::Identity).matrix,
        ]
    };
    Ok(TwoBeamHamiltonian {
        basis,
        theta,
        n_a,
        n_b,
        g,
        conserves_total_m: basis == Basis::Circular && theta == 0.0,
        coefficients,
        ops_a: ops(n_a),
        ops_b: ops(n_b),
        matrix: OnceLock::new(),
    })
}

impl TwoBeamHamiltonian {
    pub fn coefficients(&self) -> PairCoefficients {
        self.coefficients
    }

    pub fn dim(&self) -> usize {
        self.n_a.dim() * self.n_b.dim()
    }

    fn terms(&self) -> [Term; 4] {
        let c = &self.coefficients;
        let g = self.g;
        [
            (g * c.single * self.n_b.photons() as f64, IDX_SK, IDX_ID),
            (g * c.single * self.n_a.photons() as f64, IDX_ID, IDX_SK),
            (g * c.cross11, IDX_S1, IDX_S1),
            (g * c.cross_kk, IDX_SK, IDX_SK),
        ]
    }

    /// Entries `H[(ka, kb), (ka', kb')]` of one row, in ascending column
    /// order. Columns come from the 3 × 3 neighbourhood of `(ka, kb)`.
    pub fn row_entries(&self, ka: usize, kb: usize) -> Vec<((usize, usize), C64)> {
        let mut acc: [[C64; 3]; 3] = [[C64::new(0.0, 0.0); 3]; 3];
        let mut hit = [[false; 3]; 3];
        for (coef, ia, ib) in self.terms() {
            if coef == 0.0 {
                continue;
            }
            for (ca, va) in self.ops_a[ia].row(ka) {
                for (cb, vb) in self.ops_b[ib].row(kb) {
                    let da = ca + 1 - ka;
                    let db = cb + 1 - kb;
                    acc[da][db] += C64::new(coef, 0.0) * va * vb;
                    hit[da][db] = true;
                }
            }
        }
        let mut out = Vec::with_capacity(9);
        for da in 0..3 {
            for db in 0..3 {
                let v = acc[da][db];
                if hit[da][db] && (v.re != 0.0 || v.im != 0.0) {
                    out.push(((ka + da - 1, kb + db - 1), v));
                }
            }
        }
        out
    }

    /// The full `(N_a+1)(N_b+1)` sparse matrix, row-major over `(k_a, k_b)`.
    pub fn matrix(&self) -> &CsrMatrix {
        self.matrix.get_or_init(|| {
            let db = self.n_b.dim();
            let n = self.dim();
            let triplets = (0..self.n_a.dim()).flat_map(|ka| {
                (0..db).flat_map(move |kb| {
                    self.row_entries(ka, kb).into_iter().map(move |((ca, cb), v)| (ka * db + kb, ca * db + cb, v))
                })
            });
            CsrMatrix::from_triplets(n, n, triplets)
        })
    }
}

/// Invariant subspace of fixed `m_a + m_b` for a charge-conserving Hamiltonian.
#[derive(Clone, Debug)]
pub struct MTotalBlock {
    /// `2 (m_a + m_b)`.
    pub total_two_m: i64,
    pub n_a: BeamSize,
    pub n_b: BeamSize,
    /// Dicke indices `(k_a, k_b)` of each block basis state, `k_a` ascending.
    pub index_map: Vec<(usize, usize)>,
    pub matrix: CsrMatrix,
}

impl MTotalBlock {
    pub fn dim(&self) -> usize {
        self.index_map.len()
    }

    /// Position of `(k_a, k_b)` in the block, if it belongs to it.
    pub fn position(&self, ka: usize, kb: usize) -> Option<usize> {
        let first = self.index_map.first()?.0;
        let pos = ka.checked_sub(first)?;
        (self.index_map.get(pos) == Some(&(ka, kb))).then_some(pos)
    }
}

/// Restrict a charge-conserving Hamiltonian to the block with
/// `2 (m_a + m_b) = total_two_m`.
pub fn block_restrict(h: &TwoBeamHamiltonian, total_two_m: i64) -> Result<MTotalBlock> {
    if !h.conserves_total_m {
        return Err(Error::NotConserving);
    }
    let (na, nb) = (h.n_a.photons() as i64, h.n_b.photons() as i64);
    let twice_k = total_two_m + na + nb;
    if twice_k < 0 || twice_k % 2 != 0 || twice_k / 2 > na + nb {
        return Err(Error::InvalidParameter(format!("2 m_total = {total_two_m} not reachable for N_a = {na}, N_b = {nb}")));
    }
    let k_total = (twice_k / 2) as usize;
    let index_map: Vec<(usize, usize)> = (0..=h.n_a.photons())
        .filter_map(|ka| k_total.checked_sub(ka).filter(|kb| *kb <= h.n_b.photons()).map(|kb| (ka, kb)))
        .collect();
    let first = index_map[0].0;
    let dim = index_map.len();
    let triplets = index_map.iter().enumerate().flat_map(|(r, &(ka, kb))| {
        h.row_entries(ka, kb).into_iter().map(move |((ca, cb), v)| {
            debug_assert_eq!(ca + cb, ka + kb, "entry leaves the conserved block");
            (r, ca - first, v)
        })
    });
    let matrix = CsrMatrix::from_triplets(dim, dim, triplets);
    Ok(MTotalBlock { total_two_m, n_a: h.n_a, n_b: h.n_b, index_map, matrix })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spinspace::apply_beam_op;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn beam(n: usize) -> BeamSize {
        BeamSize::new(n).unwrap()
    }

    #[test]
    fn r_vanishes_without_electrons() {
        assert_eq!(hydrogen_r(1.0, 0.0), 0.0);
    }

    #[test]
    fn r_at_unit_frequency_and_loschmidt_density() {
        // 40-digit evaluation of the same expression and constants
        let want = 2.167_289_745_669_183e-27;
        let got = hydrogen_r(1.0, 2.69e19);
        assert!((got / want - 1.0).abs() < 1e-13, "{got:e}");
    }

    #[test]
    fn r_scales_as_omega_squared() {
        for n_e in [1.0, 2.69e19, 5e23] {
            let ratio = hydrogen_r(2.0, n_e) / hydrogen_r(1.0, n_e);
            assert!((ratio - 4.0).abs() < 1e-12);
        }
    }

    #[test]
    fn exchange_length_unit_ratios() {
        let inputs = PhysicalInputs { omega1: 1.0, omega2: 1.0, n_e: 0.0, rho: 1.0, i1: 1.0, i2: 1.0 };
        assert_eq!(exchange_length(&inputs), 1.8e-7);
    }

    #[test]
    fn exchange_length_scalings() {
        let base = PhysicalInputs { omega1: 1.0, omega2: 1.0, n_e: 0.0, rho: 1.0, i1: 1.0, i2: 1.0 };
        let bright = PhysicalInputs { i1: 4.0, i2: 4.0, ..base };
        assert!((exchange_length(&bright) / exchange_length(&base) - 4.0).abs() < 1e-12);
        let blue = PhysicalInputs { omega1: 4.0, ..base };
        assert!((exchange_length(&blue) - 3.6e-7).abs() < 1e-12 * 3.6e-7);
    }

    #[test]
    fn inputs_validation_and_warnings() {
        let bad = PhysicalInputs { omega1: -1.0, omega2: 1.0, n_e: 0.0, rho: 1.0, i1: 1.0, i2: 1.0 };
        assert!(bad.validate().is_err());
        let hot = PhysicalInputs::hydrogen(12.0, 1.0, 1.0, 1.0, 1.0);
        assert!(hot.validate().is_ok());
        assert_eq!(hot.warnings().len(), 1);
    }

    #[test]
    fn hamiltonian_rejects_bad_inputs() {
        assert!(build_hamiltonian(Basis::Plane, -0.1, beam(2), beam(2), 1.0).is_err());
        assert!(build_hamiltonian(Basis::Plane, 0.1, beam(2), beam(2), 0.0).is_err());
    }

    #[test]
    fn hermitian_exactly() {
        for basis in [Basis::Plane, Basis::Circular] {
            for theta in [0.0, 0.3, FRAC_PI_2, 2.0, PI] {
                let h = build_hamiltonian(basis, theta, beam(4), beam(3), 0.7).unwrap();
                assert_eq!(h.matrix().hermiticity_defect(), 0.0);
            }
        }
    }

    #[test]
    fn nine_point_stencil() {
        let h = build_hamiltonian(Basis::Plane, 0.4, beam(5), beam(4), 1.0).unwrap();
        let db = 5;
        for (r, c, _) in h.matrix().triplets() {
            let (ra, rb) = (r / db, r % db);
            let (ca, cb) = (c / db, c % db);
            assert!(ra.abs_diff(ca) <= 1 && rb.abs_diff(cb) <= 1);
        }
    }

    #[test]
    fn conservation_flag() {
        let flag = |basis, theta| build_hamiltonian(basis, theta, beam(2), beam(2), 1.0).unwrap().conserves_total_m;
        assert!(flag(Basis::Circular, 0.0));
        assert!(!flag(Basis::Circular, 0.1));
        assert!(!flag(Basis::Plane, 0.0));
    }

    fn commutator_with_total_s3(h: &TwoBeamHamiltonian) -> f64 {
        let (na, nb) = (h.n_a, h.n_b);
        let s3a = collective_op(na, OpKind::S3).matrix.kron(&CsrMatrix::identity(nb.dim()));
        let s3b = CsrMatrix::identity(na.dim()).kron(&collective_op(nb, OpKind::S3).matrix);
        let q = CsrMatrix::linear_combination(&[(C64::new(1.0, 0.0), &s3a), (C64::new(1.0, 0.0), &s3b)]);
        let m = h.matrix();
        m.mul(&q).max_abs_diff(&q.mul(m))
    }

    #[test]
    fn circular_head_on_conserves_charge() {
        let h = build_hamiltonian(Basis::Circular, 0.0, beam(5), beam(5), 1.0).unwrap();
        assert_eq!(commutator_with_total_s3(&h), 0.0);
        let tilted = build_hamiltonian(Basis::Circular, 0.2, beam(5), beam(5), 1.0).unwrap();
        assert!(commutator_with_total_s3(&tilted) > 1e-3);
    }

    #[test]
    fn circular_head_on_is_ladder_exchange() {
        // 2g(S1T1 + S2T2) = 4g(S+T- + S-T+)
        let (na, nb) = (beam(3), beam(2));
        let h = build_hamiltonian(Basis::Circular, 0.0, na, nb, 0.5).unwrap();
        let sp = |b| collective_op(b, OpKind::Splus).matrix;
        let sm = |b| collective_op(b, OpKind::Sminus).matrix;
        let x = sp(na).kron(&sm(nb));
        let y = sm(na).kron(&sp(nb));
        let expected = CsrMatrix::linear_combination(&[(C64::new(2.0, 0.0), &x), (C64::new(2.0, 0.0), &y)]);
        assert!(h.matrix().max_abs_diff(&expected) < 1e-14);
    }

    #[test]
    fn plane_perpendicular_has_no_s1t1() {
        let (na, nb) = (beam(2), beam(2));
        let h = build_hamiltonian(Basis::Plane, FRAC_PI_2, na, nb, 1.0).unwrap();
        let c = h.coefficients();
        assert_eq!(c.single, -1.0);
        assert!(c.cross11.abs() < 1e-15);
        // with the vanishing S1T1 term the plane Hamiltonian is diagonal
        for (r, col, v) in h.matrix().triplets() {
            assert!(r == col || v.norm() < 1e-14);
        }
    }

    #[test]
    fn block_of_zero_total_m() {
        let n = beam(6);
        let h = build_hamiltonian(Basis::Circular, 0.0, n, n, 1.0).unwrap();
        let block = block_restrict(&h, 0).unwrap();
        assert_eq!(block.dim(), 7);
        assert_eq!(block.position(6, 0), Some(6));
        assert_eq!(block.position(6, 1), None);
        assert_eq!(block.matrix.hermiticity_defect(), 0.0);
    }

    #[test]
    fn blocks_reconstruct_full_matrix() {
        let (na, nb) = (beam(3), beam(4));
        let h = build_hamiltonian(Basis::Circular, 0.0, na, nb, 1.3).unwrap();
        let db = nb.dim();
        let mut triplets = Vec::new();
        let mut dims = 0;
        for two_m in (-(7i64)..=7).step_by(2) {
            let block = block_restrict(&h, two_m).unwrap();
            assert!(block.dim() <= 4);
            dims += block.dim();
            for (r, c, v) in block.matrix.triplets() {
                let (ra, rb) = block.index_map[r];
                let (ca, cb) = block.index_map[c];
                triplets.push((ra * db + rb, ca * db + cb, v));
            }
        }
        assert_eq!(dims, h.dim());
        let rebuilt = CsrMatrix::from_triplets(h.dim(), h.dim(), triplets);
        assert_eq!(rebuilt.max_abs_diff(h.matrix()), 0.0);
    }

    #[test]
    fn block_requires_conservation() {
        let h = build_hamiltonian(Basis::Plane, 0.0, beam(2), beam(2), 1.0).unwrap();
        assert!(matches!(block_restrict(&h, 0), Err(Error::NotConserving)));
        let c = build_hamiltonian(Basis::Circular, 0.0, beam(2), beam(2), 1.0).unwrap();
        assert!(block_restrict(&c, 1).is_err());
        assert!(block_restrict(&c, 6).is_err());
    }

    #[test]
    fn row_entries_agree_with_beam_operator_application() {
        let (na, nb) = (beam(3), beam(2));
        let h = build_hamiltonian(Basis::Plane, 0.9, na, nb, 1.0).unwrap();
        let c = h.coefficients();
        let mut psi = vec![C64::new(0.0, 0.0); h.dim()];
        for (i, p) in psi.iter_mut().enumerate() {
            *p = C64::new((i as f64).sin(), (i as f64 * 0.7).cos());
        }
        let op = |b, k| collective_op(b, k).matrix;
        let (da, db) = (na.dim(), nb.dim());
        let s3a = apply_beam_op(&op(na, OpKind::S3), crate::spinspace::Beam::A, da, db, &psi);
        let s3b = apply_beam_op(&op(nb, OpKind::S3), crate::spinspace::Beam::B, da, db, &psi);
        let s1b = apply_beam_op(&op(nb, OpKind::S1), crate::spinspace::Beam::B, da, db, &psi);
        let s1a_s1b = apply_beam_op(&op(na, OpKind::S1), crate::spinspace::Beam::A, da, db, &s1b);
        let s3a_s3b = apply_beam_op(&op(na, OpKind::S3), crate::spinspace::Beam::A, da, db, &s3b);
        let hpsi = h.matrix().matvec(&psi);
        for i in 0..psi.len() {
            let want = c.single * (2.0 * s3a[i] + 3.0 * s3b[i]) + c.cross11 * s1a_s1b[i] + c.cross_kk * s3a_s3b[i];
            assert!((hpsi[i] - want).norm() < 1e-12);
        }
    }
}
