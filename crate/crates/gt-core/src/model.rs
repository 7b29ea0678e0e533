//! Lattice model: parameters, Hamiltonian builders, and the glide operator.
//!
//! Unit cell holds four sites in fixed order (a, b, c, d).  Real-space
//! matrices are cell-major: site index = 4 * cell + sublattice.  Couplings:
//! `t2` joins a–c and (inter-cell) b–d within the reciprocal SSH pattern,
//! `t1` joins b–d and (inter-cell) a–c, while the rungs are non-reciprocal:
//! a←b carries `t4`, b←a carries `t3`, c←d carries `t3`, d←c carries `t4`.
//! The lattice is Hermitian exactly when `t3 == t4`.

use ndarray::Array2;
use num_complex::Complex64 as C64;

use crate::{GtError, Result};

/// Sublattice labels in cell-major order.
pub const SUBLATTICES: [&str; 4] = ["a", "b", "c", "d"];

/// The four real couplings plus the lattice size; the single source of truth
/// for every Hamiltonian builder.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelParams {
    pub t1: f64,
    pub t2: f64,
    pub t3: f64,
    pub t4: f64,
    pub n_cells: usize,
}

impl ModelParams {
    pub fn new(t1: f64, t2: f64, t3: f64, t4: f64, n_cells: usize) -> Result<Self> {
        if n_cells < 2 {
            return Err(GtError::InvalidArgument("n_cells must be at least 2".into()));
        }
        for (name, v) in [("t1", t1), ("t2", t2), ("t3", t3), ("t4", t4)] {
            if !v.is_finite() {
                return Err(GtError::InvalidArgument(format!("{name} must be finite")));
            }
        }
        Ok(ModelParams { t1, t2, t3, t4, n_cells })
    }

    /// Default reciprocal couplings t1 = 1, t2 = 2 with chosen rungs.
    pub fn with_rungs(t3: f64, t4: f64, n_cells: usize) -> Result<Self> {
        ModelParams::new(1.0, 2.0, t3, t4, n_cells)
    }

    pub fn is_hermitian(&self) -> bool {
        self.t3 == self.t4
    }

    /// Total number of sites (four per cell).
    pub fn site_count(&self) -> usize {
        4 * self.n_cells
    }

    /// Crude spectral-radius bound used to scale tolerances.
    pub fn coupling_scale(&self) -> f64 {
        self.t1.abs() + self.t2.abs() + self.t3.abs() + self.t4.abs()
    }

    /// Same couplings at a different chain length.
    pub fn with_cells(&self, n_cells: usize) -> Self {
        ModelParams { n_cells, ..*self }
    }
}

/// Boundary condition for real-space builders.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Boundary {
    Open,
    Periodic,
}

/// Flattened site index for (cell, sublattice).
pub fn site_index(cell: usize, sub: usize) -> usize {
    4 * cell + sub
}

/// The exact middle site of the chain, used as the default excitation point.
pub fn middle_site(n_cells: usize) -> usize {
    2 * n_cells
}

/// Bloch Hamiltonian H(k) in the (a, b, c, d) basis.
///
/// Convention: the inter-cell bond entering row `a` carries `e^{-ik}`, so a
/// spatial profile `psi_m ∝ beta^m` maps onto the analytic continuation
/// `e^{ik} → beta` of [`non_bloch_hamiltonian`], and skin modes localized at
/// the left boundary correspond to |beta| < 1.
pub fn bloch_hamiltonian(p: &ModelParams, k: f64) -> Array2<C64> {
    non_bloch_hamiltonian(p, C64::from_polar(1.0, k)).expect("|beta| = 1 is nonzero")
}

/// Non-Bloch Hamiltonian H(beta): the Bloch matrix with e^{ik} continued to
/// an arbitrary nonzero complex `beta`.
pub fn non_bloch_hamiltonian(p: &ModelParams, beta: C64) -> crate::Result<Array2<C64>> {
    if beta.norm() == 0.0 {
        return Err(crate::GtError::InvalidArgument(
            "beta = 0 has no inverse power".into(),
        ));
    }
    let z = C64::new(0.0, 0.0);
    let t1 = C64::new(p.t1, 0.0);
    let t2 = C64::new(p.t2, 0.0);
    let t3 = C64::new(p.t3, 0.0);
    let t4 = C64::new(p.t4, 0.0);
    let binv = 1.0 / beta;
    let mut h = Array2::<C64>::zeros((4, 4));
    // row a
    h[[0, 1]] = t4;
    h[[0, 2]] = t2 + t1 * binv;
    // row b
    h[[1, 0]] = t3;
    h[[1, 3]] = t1 + t2 * binv;
    // row c
    h[[2, 0]] = t2 + t1 * beta;
    h[[2, 3]] = t3;
    // row d
    h[[3, 1]] = t1 + t2 * beta;
    h[[3, 2]] = t4;
    let _ = z;
    Ok(h)
}

/// Real-space Hamiltonian at the requested boundary condition,
/// cell-major (a, b, c, d).
pub fn real_space_hamiltonian(p: &ModelParams, bc: Boundary) -> Array2<f64> {
    let n = p.n_cells;
    let nn = 4 * n;
    let mut h = Array2::<f64>::zeros((nn, nn));
    let (a, b, c, d) = (0usize, 1usize, 2usize, 3usize);
    for m in 0..n {
        // reciprocal intra-cell bonds
        h[[site_index(m, a), site_index(m, c)]] += p.t2;
        h[[site_index(m, c), site_index(m, a)]] += p.t2;
        h[[site_index(m, b), site_index(m, d)]] += p.t1;
        h[[site_index(m, d), site_index(m, b)]] += p.t1;
        // non-reciprocal rungs
        h[[site_index(m, a), site_index(m, b)]] += p.t4;
        h[[site_index(m, b), site_index(m, a)]] += p.t3;
        h[[site_index(m, c), site_index(m, d)]] += p.t3;
        h[[site_index(m, d), site_index(m, c)]] += p.t4;
        // reciprocal inter-cell bonds
        let next = if m + 1 < n {
            Some(m + 1)
        } else if bc == Boundary::Periodic {
            Some(0)
        } else {
            None
        };
        if let Some(mu) = next {
            h[[site_index(mu, a), site_index(m, c)]] += p.t1;
            h[[site_index(m, c), site_index(mu, a)]] += p.t1;
            h[[site_index(mu, b), site_index(m, d)]] += p.t2;
            h[[site_index(m, d), site_index(mu, b)]] += p.t2;
        }
    }
    h
}

/// Real-space Hamiltonian as a complex matrix (convenience for eig calls).
pub fn real_space_hamiltonian_c(p: &ModelParams, bc: Boundary) -> Array2<C64> {
    real_space_hamiltonian(p, bc).mapv(|x| C64::new(x, 0.0))
}

/// Glide operator S(k) in the (a, b, c, d) basis: a → d, b → c,
/// c → e^{−ik} b, d → e^{−ik} a.  Satisfies S H(k) S^{-1} = H(k) and
/// S(k)^2 = e^{−ik} I, so the combined glide-time operation squares to
/// e^{−ik} under this crate's Fourier convention (in particular to −1 at
/// k = ±π, forcing the Kramers-like degeneracy there).
pub fn glide_operator(k: f64) -> Array2<C64> {
    let ph = C64::from_polar(1.0, -k);
    let one = C64::new(1.0, 0.0);
    let mut s = Array2::<C64>::zeros((4, 4));
    s[[3, 0]] = one; // S e_a = e_d
    s[[2, 1]] = one; // S e_b = e_c
    s[[1, 2]] = ph; // S e_c = e^{−ik} e_b
    s[[0, 3]] = ph; // S e_d = e^{−ik} e_a
    s
}

/// Pauli-product matrix sigma_i ⊗ tau_j (sigma acts on the chain index,
/// tau on the intra-dimer index), used by glide-structure tests.
pub fn pauli_product(i: usize, j: usize) -> Array2<C64> {
    fn pauli(n: usize) -> [[C64; 2]; 2] {
        let z = C64::new(0.0, 0.0);
        let one = C64::new(1.0, 0.0);
        let im = C64::new(0.0, 1.0);
        match n {
            0 => [[one, z], [z, one]],
            1 => [[z, one], [one, z]],
            2 => [[z, -im], [im, z]],
            3 => [[one, z], [z, -one]],
            _ => panic!("pauli index out of range"),
        }
    }
    let s = pauli(i);
    let t = pauli(j);
    let mut out = Array2::<C64>::zeros((4, 4));
    for r in 0..2 {
        for c in 0..2 {
            for rr in 0..2 {
                for cc in 0..2 {
                    out[[2 * r + rr, 2 * c + cc]] = s[r][c] * t[rr][cc];
                }
            }
        }
    }
    out
}

/// Residual ‖S H(k) - H(k) S‖_max of the glide commutation relation.
pub fn glide_residual(p: &ModelParams, k: f64) -> f64 {
    let h = bloch_hamiltonian(p, k);
    let s = glide_operator(k);
    let lhs = s.dot(&h);
    let rhs = h.dot(&s);
    lhs.iter()
        .zip(rhs.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Residuals of the model's defining symmetries at momentum `k`.
#[derive(Clone, Copy, Debug)]
pub struct SymmetryResiduals {
    /// ‖S(k) H(k) − H(k) S(k)‖_max (glide commutation).
    pub glide: f64,
    /// ‖conj(H(k)) − H(−k)‖_max (time reversal T = K).
    pub trs: f64,
    /// max over Bloch eigenvectors ψ of ‖θ²ψ − e^{−ik}ψ‖, where the
    /// glide-time operation θ = S·K squares to S(k)·conj(S(−k)) = S(k)²
    /// = e^{−ik}·I, because time reversal flips the momentum before the
    /// second glide acts.  The phase sign follows this crate's Fourier
    /// convention; at k = ±π it equals −1 regardless of convention.
    pub theta_sq: f64,
}

/// Evaluate all three symmetry residuals of `H(k)`.
pub fn symmetry_residuals(p: &ModelParams, k: f64) -> crate::Result<SymmetryResiduals> {
    use ndarray_linalg::Eig;

    let h = bloch_hamiltonian(p, k);
    let glide = glide_residual(p, k);
    let hm = bloch_hamiltonian(p, -k);
    let trs = h
        .iter()
        .zip(hm.iter())
        .map(|(x, y)| (x.conj() - y).norm())
        .fold(0.0, f64::max);
    let theta2 = glide_operator(k).dot(&glide_operator(-k).mapv(|z| z.conj()));
    let phase = C64::from_polar(1.0, -k);
    let (_, vecs) = h.eig()?;
    let mut theta_sq = 0.0f64;
    for j in 0..4 {
        let v = vecs.column(j);
        let w = theta2.dot(&v);
        let dev: f64 =
            w.iter().zip(v.iter()).map(|(a, b)| (a - phase * b).norm_sqr()).sum::<f64>().sqrt();
        theta_sq = theta_sq.max(dev);
    }
    Ok(SymmetryResiduals { glide, trs, theta_sq })
}
