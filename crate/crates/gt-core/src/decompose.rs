//! Mode decompositions of evolving states: OBC eigenmode weights, non-Bloch
//! (GBZ) weights via the Z-transform, Bloch (BZ Fourier) weights, and group
//! velocities.

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;

use crate::dynamics::EvolutionGrid;
use crate::gbz::GbzCurve;
use crate::model::{non_bloch_hamiltonian, ModelParams};
use crate::spectral::{BandStructure, BiorthogonalEigensystem};
use crate::{GtError, Result};

/// Which coordinate set a weight field is indexed by.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WeightAxis {
    ObcMode,
    GbzBeta,
    BzK,
}

/// Weights of an evolving state against a family of modes: one row per time
/// instant, one column per coordinate (mode index, β point, or (k, band)).
#[derive(Clone, Debug)]
pub struct WeightField {
    pub axis: WeightAxis,
    /// Complex coordinate tags: mode index (as real), β, or k + i·band.
    pub coordinates: Vec<C64>,
    /// |times| × |coordinates| complex weights.
    pub weights: Array2<C64>,
    pub normalized_per_instant: bool,
    /// Columns excluded from normalization (e.g. unmatched GBZ points).
    pub flagged: Vec<bool>,
}

impl WeightField {
    /// Normalize each time row to unit Euclidean norm over unflagged columns.
    pub fn normalize_per_instant(&mut self) {
        for mut row in self.weights.rows_mut() {
            let n2: f64 = row
                .iter()
                .zip(self.flagged.iter())
                .filter(|(_, &f)| !f)
                .map(|(w, _)| w.norm_sqr())
                .sum();
            if n2 > 0.0 {
                let n = n2.sqrt();
                row.mapv_inplace(|w| w / n);
            }
        }
        self.normalized_per_instant = true;
    }

    /// Column index of the largest |weight| in a given time row.
    pub fn argmax(&self, row: usize) -> usize {
        let mut best = (0usize, -1.0f64);
        for (j, w) in self.weights.row(row).iter().enumerate() {
            if !self.flagged[j] && w.norm() > best.1 {
                best = (j, w.norm());
            }
        }
        best.0
    }
}

/// OBC eigenmode weights D_j(t) = ⟨L_j|ψ(t)⟩.
///
/// States are taken in their per-instant rescaled form, so rows are
/// comparable in shape but not absolute magnitude; use
/// [`WeightField::normalize_per_instant`] before cross-time comparison.
pub fn obc_mode_weights(grid: &EvolutionGrid, sys: &BiorthogonalEigensystem) -> Result<WeightField> {
    let nt = grid.times.len();
    let nm = sys.dim();
    if grid.states[0].len() != nm {
        return Err(GtError::InvalidArgument("state/eigensystem dimension mismatch".into()));
    }
    let mut weights = Array2::<C64>::zeros((nt, nm));
    for (i, psi) in grid.states.iter().enumerate() {
        let d = sys.left_project(psi);
        weights.row_mut(i).assign(&d);
    }
    let coordinates = (0..nm).map(|j| C64::new(j as f64, 0.0)).collect();
    Ok(WeightField {
        axis: WeightAxis::ObcMode,
        coordinates,
        weights,
        normalized_per_instant: false,
        flagged: vec![false; nm],
    })
}

/// Reconstruction residual ‖Σ_j D_j |R_j⟩ − ψ‖ / ‖ψ‖ for one grid row.
pub fn reconstruction_residual(
    grid: &EvolutionGrid,
    sys: &BiorthogonalEigensystem,
    field: &WeightField,
    row: usize,
) -> f64 {
    let psi = &grid.states[row];
    let mut rec = Array1::<C64>::zeros(psi.len());
    for (j, &d) in field.weights.row(row).iter().enumerate() {
        let col = sys.right_physical(j);
        for (x, &r) in col.iter().enumerate() {
            rec[x] += d * r;
        }
    }
    let num: f64 = rec.iter().zip(psi.iter()).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>();
    let den: f64 = psi.iter().map(|c| c.norm_sqr()).sum::<f64>().max(1e-300);
    (num / den).sqrt()
}

/// Z-transform of a chain state: Ψ(β) = Σ_n ψ(n) β^{−(x_n − origin)} with
/// x_n the cell coordinate of site n and `origin` in cells (default: the
/// middle of the chain).  All four sublattices are summed coherently.
pub fn z_transform(state: &Array1<C64>, betas: &[C64], origin: f64) -> Result<Vec<C64>> {
    if betas.iter().any(|b| b.norm() == 0.0) {
        return Err(GtError::InvalidArgument("β = 0 is not invertible".into()));
    }
    let spinors: Vec<[C64; 4]> =
        betas.iter().map(|&b| z_transform_spinor(state, b, origin)).collect::<Result<_>>()?;
    Ok(spinors.iter().map(|s| s[0] + s[1] + s[2] + s[3]).collect())
}

/// Sublattice-resolved Z-transform: Ψ_s(β) = Σ_m ψ(m, s) β^{−(m − origin)}.
pub fn z_transform_spinor(state: &Array1<C64>, beta: C64, origin: f64) -> Result<[C64; 4]> {
    if beta.norm() == 0.0 {
        return Err(GtError::InvalidArgument("β = 0 is not invertible".into()));
    }
    if state.len() % 4 != 0 {
        return Err(GtError::InvalidArgument("state length must be a multiple of 4".into()));
    }
    let n_cells = state.len() / 4;
    // β^{-(m - origin)} accumulated in the log domain to survive large chains.
    let (lr, th) = beta.to_polar();
    let llr = lr.ln();
    let mut out = [C64::new(0.0, 0.0); 4];
    for m in 0..n_cells {
        let x = m as f64 - origin;
        let w = C64::from_polar((-x * llr).exp(), -x * th);
        for s in 0..4 {
            out[s] += state[4 * m + s] * w;
        }
    }
    Ok(out)
}

/// Z-transform of a plain scalar sequence with integer coordinates 0..len:
/// Σ_n ξ(n) β^{−(n − origin)} (the form used by the shift-property tests).
pub fn z_transform_seq(xi: &[C64], betas: &[C64], origin: f64) -> Result<Vec<C64>> {
    if betas.iter().any(|b| b.norm() == 0.0) {
        return Err(GtError::InvalidArgument("β = 0 is not invertible".into()));
    }
    Ok(betas
        .iter()
        .map(|&b| {
            let (lr, th) = b.to_polar();
            let llr = lr.ln();
            xi.iter()
                .enumerate()
                .map(|(n, &v)| {
                    let x = n as f64 - origin;
                    v * C64::from_polar((-x * llr).exp(), -x * th)
                })
                .sum()
        })
        .collect())
}

/// Non-Bloch weights over a GBZ curve: for each GBZ point (β, E) the state's
/// Z-transform spinor is projected onto the left eigenvector of H(β) whose
/// eigenvalue matches E within 1e-4 of the spectral radius.  Points whose
/// match fails are flagged and excluded from normalized totals.
///
/// `origin` is the Z-transform origin in cells.  Weights for the negative-
/// and positive-Re(E) branches can be separated via [`branch_signs`].
pub fn nonbloch_weights(
    p: &ModelParams,
    grid: &EvolutionGrid,
    curve: &GbzCurve,
    origin: f64,
) -> Result<WeightField> {
    let nt = grid.times.len();
    let np = curve.points.len();
    let rho = curve.points.iter().map(|pt| pt.energy.norm()).fold(0.0, f64::max);
    let mut weights = Array2::<C64>::zeros((nt, np));
    let mut flagged = vec![false; np];
    // Per-point left eigenvector of H(β) matched to the point's energy.
    let mut left_vecs: Vec<Option<Array1<C64>>> = Vec::with_capacity(np);
    for pt in &curve.points {
        let h = non_bloch_hamiltonian(p, pt.beta)?;
        let sys = BiorthogonalEigensystem::from_matrix(&h)?;
        let mut best = (f64::INFINITY, usize::MAX);
        for (j, &e) in sys.eigenvalues.iter().enumerate() {
            let d = (e - pt.energy).norm();
            if d < best.0 {
                best = (d, j);
            }
        }
        if best.0 < 1e-4 * rho {
            left_vecs.push(Some(sys.left.column(best.1).to_owned()));
        } else {
            left_vecs.push(None);
        }
    }
    for (i, psi) in grid.states.iter().enumerate() {
        for (j, pt) in curve.points.iter().enumerate() {
            match &left_vecs[j] {
                Some(l) => {
                    let spin = z_transform_spinor(psi, pt.beta, origin)?;
                    let mut w = C64::new(0.0, 0.0);
                    for s in 0..4 {
                        w += l[s].conj() * spin[s];
                    }
                    weights[[i, j]] = w;
                }
                None => {
                    flagged[j] = true;
                }
            }
        }
    }
    let coordinates = curve.points.iter().map(|pt| pt.beta).collect();
    Ok(WeightField {
        axis: WeightAxis::GbzBeta,
        coordinates,
        weights,
        normalized_per_instant: false,
        flagged,
    })
}

/// Sign of Re(E) per GBZ point, splitting a non-Bloch weight field into the
/// negative- and positive-eigenvalue branches.
pub fn branch_signs(curve: &GbzCurve) -> Vec<i8> {
    curve.points.iter().map(|pt| if pt.energy.re < 0.0 { -1 } else { 1 }).collect()
}

/// Bloch-mode weights |K|: discrete Fourier transform of ψ(t) per cell,
/// projected onto the biorthogonal Bloch eigenvectors of each band;
/// normalized jointly across all (k, band) per instant.
///
/// The band structure must be computed on a k-grid matching the chain length
/// (`nk == n_cells`) so the DFT is commensurate.
pub fn bz_fourier_weights(grid: &EvolutionGrid, bands: &BandStructure) -> Result<WeightField> {
    let nt = grid.times.len();
    let nk = bands.ks.len();
    let n_sites = grid.states[0].len();
    let n_cells = n_sites / 4;
    if nk != n_cells {
        return Err(GtError::InvalidArgument(format!(
            "band k-grid ({nk}) must match the chain length in cells ({n_cells})"
        )));
    }
    let mut weights = Array2::<C64>::zeros((nt, nk * 4));
    for (i, psi) in grid.states.iter().enumerate() {
        for (ik, &k) in bands.ks.iter().enumerate() {
            // Fourier component of the state at this k, per sublattice.
            let mut ft = [C64::new(0.0, 0.0); 4];
            for m in 0..n_cells {
                let phase = C64::from_polar(1.0, -k * m as f64);
                for s in 0..4 {
                    ft[s] += psi[4 * m + s] * phase;
                }
            }
            // Project onto each band's left Bloch vector.
            let left = &bands.left[ik];
            for b in 0..4 {
                let mut w = C64::new(0.0, 0.0);
                for s in 0..4 {
                    w += left[[s, b]].conj() * ft[s];
                }
                weights[[i, ik * 4 + b]] = w;
            }
        }
    }
    let coordinates = (0..nk * 4)
        .map(|j| C64::new(bands.ks[j / 4], (j % 4) as f64))
        .collect();
    let mut field = WeightField {
        axis: WeightAxis::BzK,
        coordinates,
        weights,
        normalized_per_instant: false,
        flagged: vec![false; nk * 4],
    };
    field.normalize_per_instant();
    Ok(field)
}

/// Time-averaged |K| per (k, band) from a BZ weight field: (nk × 4) matrix.
pub fn time_averaged_k(field: &WeightField, nk: usize) -> Array2<f64> {
    let nt = field.weights.nrows();
    let mut avg = Array2::<f64>::zeros((nk, 4));
    for i in 0..nt {
        for ik in 0..nk {
            for b in 0..4 {
                avg[[ik, b]] += field.weights[[i, ik * 4 + b]].norm();
            }
        }
    }
    avg / nt as f64
}

/// Group velocity v_g(k) = dRe E/dk per band: central finite differences,
/// one-sided at the endpoints.  Returns an (nk × 4) matrix.
pub fn group_velocity(bands: &BandStructure) -> Array2<f64> {
    let nk = bands.ks.len();
    let mut v = Array2::<f64>::zeros((nk, 4));
    for b in 0..4 {
        for i in 0..nk {
            let (i0, i1) = if i == 0 {
                (0, 1)
            } else if i == nk - 1 {
                (nk - 2, nk - 1)
            } else {
                (i - 1, i + 1)
            };
            let de = bands.energies[[i1, b]].re - bands.energies[[i0, b]].re;
            let dk = bands.ks[i1] - bands.ks[i0];
            v[[i, b]] = de / dk;
        }
    }
    v
}

/// Default Z-transform origin (middle of the chain, in cells).
pub fn default_origin(p: &ModelParams) -> f64 {
    p.n_cells as f64 / 2.0
}

/// Z-transform origin at the skin boundary: the left end for leftward NHSE,
/// the right end for rightward.  Removes the kinematic β^{x₀} bias when
/// reading off which GBZ modes dominate the late-time state.
pub fn skin_origin(p: &ModelParams, direction: crate::gbz::NhseDirection) -> f64 {
    match direction {
        crate::gbz::NhseDirection::Left => 0.0,
        crate::gbz::NhseDirection::Right => (p.n_cells.max(1) - 1) as f64,
        crate::gbz::NhseDirection::None => p.n_cells as f64 / 2.0,
    }
}
