//! Lanczos short-time propagation of `exp(-i H t) ψ` for sparse Hermitian `H`.
//!
//! Each step builds an orthonormal Krylov basis `V` (with full
//! reorthogonalization) and the real tridiagonal projection `T = V† H V`,
//! then evaluates `V exp(-i T dt) e1`. The usual a posteriori estimate
//! `β_m |[exp(-i T dt) e1]_m|` bounds the step error; the step length is the
//! largest one whose estimate stays under `tol · dt`. Every output time that
//! falls inside an accepted step is produced from the same basis.
//!
//! All reductions run sequentially in index order, so results do not depend
//! on the thread count used by the matrix-vector product.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;
use crate::spinspace::{inner, vec_norm};

/// Default Krylov subspace dimension.
pub const DEFAULT_KRYLOV_DIM: usize = 30;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KrylovSettings {
    /// Local error budget per unit time.
    pub tol: f64,
    pub krylov_dim: usize,
}

struct KrylovStep {
    /// Basis vectors, each of the full dimension.
    basis: Vec<Vec<C64>>,
    eigenvalues: DVector<f64>,
    eigenvectors: DMatrix<f64>,
    /// `β_m` coupling to the first discarded direction; zero on breakdown.
    beta_last: f64,
    norm: f64,
}

impl KrylovStep {
    fn build(h: &CsrMatrix, psi: &[C64], m_max: usize) -> Self {
        let n = psi.len();
        let norm = vec_norm(psi);
        let mut basis: Vec<Vec<C64>> = Vec::with_capacity(m_max);
        let mut alpha = Vec::with_capacity(m_max);
        let mut beta: Vec<f64> = Vec::with_capacity(m_max);
        basis.push(psi.iter().map(|a| a / norm).collect());
        let mut w = vec![C64::new(0.0, 0.0); n];
        let mut beta_last = 0.0;
        let m_max = m_max.min(n);
        for j in 0..m_max {
            h.matvec_into(&basis[j], &mut w);
            let a = inner(&basis[j], &w).re;
            alpha.push(a);
            // two passes of classical Gram-Schmidt against the whole basis
            for _ in 0..2 {
                for v in &basis {
                    let c = inner(v, &w);
                    w.iter_mut().zip(v).for_each(|(x, y)| *x -= c * y);
                }
            }
            let b = vec_norm(&w);
            let scale = alpha.iter().map(|x| x.abs()).chain(beta.iter().copied()).fold(1.0, f64::max);
            if b <= 1e-13 * scale {
                beta_last = 0.0;
                break;
            }
            if j + 1 == m_max {
                beta_last = b;
                break;
            }
            beta.push(b);
            basis.push(w.iter().map(|x| x / b).collect());
        }
        let m = alpha.len();
        basis.truncate(m);
        let mut t = DMatrix::<f64>::zeros(m, m);
        for i in 0..m {
            t[(i, i)] = alpha[i];
            if i + 1 < m {
                t[(i, i + 1)] = beta[i];
                t[(i + 1, i)] = beta[i];
            }
        }
        let eig = SymmetricEigen::new(t);
        Self { basis, eigenvalues: eig.eigenvalues, eigenvectors: eig.eigenvectors, beta_last, norm }
    }

    /// Coefficients `exp(-i T dt) e1` in the Krylov basis.
    fn coefficients(&self, dt: f64) -> Vec<C64> {
        let m = self.eigenvalues.len();
        let phased: Vec<C64> = (0..m)
            .map(|k| C64::new(0.0, -self.eigenvalues[k] * dt).exp() * self.eigenvectors[(0, k)])
            .collect();
        (0..m)
            .map(|i| (0..m).fold(C64::new(0.0, 0.0), |acc, k| acc + self.eigenvectors[(i, k)] * phased[k]))
            .collect()
    }

    fn error_estimate(&self, dt: f64) -> f64 {
        if self.beta_last == 0.0 {
            return 0.0;
        }
        let c = self.coefficients(dt);
        self.norm * self.beta_last * c.last().map_or(0.0, |x| x.norm())
    }

    fn state(&self, dt: f64) -> Vec<C64> {
        let c = self.coefficients(dt);
        let n = self.basis[0].len();
        let mut out = vec![C64::new(0.0, 0.0); n];
        for (v, ck) in self.basis.iter().zip(&c) {
            let s = ck * self.norm;
            out.iter_mut().zip(v).for_each(|(o, x)| *o += s * x);
        }
        out
    }
}

/// Propagate `psi0` (given at `t_grid[0]`) and call `on_sample(t, ψ(t))` at
/// every grid time, including the first.
pub fn propagate<F>(h: &CsrMatrix, psi0: Vec<C64>, t_grid: &[f64], settings: KrylovSettings, mut on_sample: F) -> Result<()>
where
    F: FnMut(f64, &[C64]) -> Result<()>,
{
    if t_grid.is_empty() {
        return Ok(());
    }
    if settings.krylov_dim < 2 {
        return Err(Error::InvalidParameter("Krylov dimension must be at least 2".into()));
    }
    let mut t = t_grid[0];
    let mut psi = psi0;
    on_sample(t, &psi)?;
    let t_final = *t_grid.last().unwrap();
    let mut next = 1;
    let h_norm = h.norm_inf().max(f64::MIN_POSITIVE);
    let mut dt_guess = (settings.krylov_dim as f64 / h_norm).min(t_final - t).max(0.0);
    while next < t_grid.len() {
        let remaining = t_final - t;
        let step = KrylovStep::build(h, &psi, settings.krylov_dim);
        let mut dt = if step.beta_last == 0.0 { remaining } else { dt_guess.min(remaining) };
        let floor = 1e-13 * t.abs().max(1.0);
        loop {
            if step.error_estimate(dt) <= settings.tol * dt {
                break;
            }
            dt *= 0.7;
            if dt < floor {
                return Err(Error::ToleranceNotAchievable { t, dt });
            }
        }
        // grow the next attempt when this one was accepted on the first try
        dt_guess = if dt >= dt_guess.min(remaining) { dt * 1.5 } else { dt };
        let t_new = if remaining - dt <= floor { t_final } else { t + dt };
        while next < t_grid.len() && t_grid[next] <= t_new {
            let tk = t_grid[next];
            on_sample(tk, &step.state(tk - t))?;
            next += 1;
        }
        psi = step.state(t_new - t);
        t = t_new;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spinspace::oracle::DensePropagator;

    fn random_hermitian(n: usize, seed: u64) -> CsrMatrix {
        let mut s = seed;
        let mut rnd = || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let mut trip = Vec::new();
        for i in 0..n {
            trip.push((i, i, C64::new(3.0 * rnd(), 0.0)));
            for j in (i + 1)..(i + 3).min(n) {
                let v = C64::new(rnd(), rnd());
                trip.push((i, j, v));
                trip.push((j, i, v.conj()));
            }
        }
        CsrMatrix::from_triplets(n, n, trip)
    }

    #[test]
    fn matches_dense_exponential() {
        let h = random_hermitian(40, 7);
        let mut psi0 = vec![C64::new(0.0, 0.0); 40];
        psi0[3] = C64::new(0.6, 0.0);
        psi0[17] = C64::new(0.0, 0.8);
        let grid: Vec<f64> = (0..=20).map(|k| k as f64 * 0.25).collect();
        let dense = DensePropagator::new(&h.to_dense());
        let mut worst: f64 = 0.0;
        let settings = KrylovSettings { tol: 1e-12, krylov_dim: 12 };
        propagate(&h, psi0.clone(), &grid, settings, |t, psi| {
            let want = dense.apply(&DVector::from_vec(psi0.clone()), t);
            for (a, b) in psi.iter().zip(want.iter()) {
                worst = worst.max((a - b).norm());
            }
            Ok(())
        })
        .unwrap();
        assert!(worst < 1e-10, "max amplitude error {worst}");
    }

    #[test]
    fn zero_hamiltonian_leaves_state_alone() {
        let h = CsrMatrix::zeros(5, 5);
        let psi0 = vec![C64::new(0.5, 0.5); 4].into_iter().chain([C64::new(0.0, 0.0)]).collect::<Vec<_>>();
        let mut count = 0;
        propagate(&h, psi0.clone(), &[0.0, 1.0, 5.0], KrylovSettings { tol: 1e-12, krylov_dim: 10 }, |_, psi| {
            assert_eq!(psi, &psi0[..]);
            count += 1;
            Ok(())
        })
        .unwrap();
        assert_eq!(count, 3);
    }

    #[test]
    fn invariant_subspace_breakdown_is_exact() {
        // two-level Rabi problem inside a larger space
        let h = CsrMatrix::from_triplets(6, 6, [(1, 2, C64::new(1.0, 0.0)), (2, 1, C64::new(1.0, 0.0))]);
        let mut psi0 = vec![C64::new(0.0, 0.0); 6];
        psi0[1] = C64::new(1.0, 0.0);
        propagate(&h, psi0, &[0.0, 0.3, 2.0], KrylovSettings { tol: 1e-14, krylov_dim: 5 }, |t, psi| {
            assert!((psi[1].re - t.cos()).abs() < 1e-14);
            assert!((psi[2].im + t.sin()).abs() < 1e-14);
            Ok(())
        })
        .unwrap();
    }
}
