//! Time evolution on the open chain: spectral and stepped propagators,
//! norm traces, amplification diagnostics, and wavepacket observables.

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;

use crate::model::{middle_site, real_space_hamiltonian_c, Boundary, ModelParams};
use crate::spectral::BiorthogonalEigensystem;
use crate::{GtError, Result};

/// δ-excitation on one site (default: site 2n of the 4n-site chain).
pub fn delta_state(n_sites: usize, site: usize) -> Result<Array1<C64>> {
    if site >= n_sites {
        return Err(GtError::InvalidArgument(format!(
            "site {site} out of range for {n_sites} sites"
        )));
    }
    let mut psi = Array1::<C64>::zeros(n_sites);
    psi[site] = C64::new(1.0, 0.0);
    Ok(psi)
}

/// Default excitation site for `n_cells` cells (the middle of the chain).
pub fn default_site(n_cells: usize) -> usize {
    middle_site(n_cells)
}

/// Propagation scheme.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Propagator {
    /// Biorthogonal spectral decomposition (exact up to eigensolve error).
    Spectral,
    /// Scaled Taylor stepping with substeps keeping ‖H‖ Δt ≤ 0.5.
    Stepped,
}

/// States of ψ(t) on a time grid, stored with per-instant rescaling so that
/// strongly amplified evolutions do not overflow.
#[derive(Clone, Debug)]
pub struct EvolutionGrid {
    pub times: Vec<f64>,
    /// Rescaled states: the physical state is `states[i] * scale[i].exp()`.
    pub states: Vec<Array1<C64>>,
    /// Natural log of the factor taken out of each stored state.
    pub log_scale: Vec<f64>,
}

impl EvolutionGrid {
    /// Natural log of ‖ψ(t)‖ at instant `i`.
    pub fn log_norm(&self, i: usize) -> f64 {
        let n2: f64 = self.states[i].iter().map(|c| c.norm_sqr()).sum();
        0.5 * n2.ln() + self.log_scale[i]
    }

    /// Physical state at instant `i`; errors if the scale factor overflows.
    pub fn state(&self, i: usize) -> Result<Array1<C64>> {
        let s = self.log_scale[i];
        if s > 700.0 {
            return Err(GtError::NumericalFailure(format!(
                "state norm exp({s:.1}) overflows f64"
            )));
        }
        Ok(self.states[i].mapv(|c| c * s.exp()))
    }

    /// Site-probability distribution |ψ_x|² normalized to 1 at instant `i`.
    pub fn probability(&self, i: usize) -> Array1<f64> {
        let p = self.states[i].mapv(|c| c.norm_sqr());
        let tot: f64 = p.sum();
        if tot > 0.0 {
            p / tot
        } else {
            p
        }
    }
}

fn renormalize(psi: &mut Array1<C64>, log_scale: &mut f64) {
    let n2: f64 = psi.iter().map(|c| c.norm_sqr()).sum();
    if n2 > 1e100 || (n2 < 1e-100 && n2 > 0.0) {
        let n = n2.sqrt();
        psi.mapv_inplace(|c| c / n);
        *log_scale += n.ln();
    }
}

/// Evolve ψ(0) under H_OBC to every instant of `times` (must be ascending,
/// starting at t ≥ 0).
pub fn evolve(
    p: &ModelParams,
    psi0: &Array1<C64>,
    times: &[f64],
    scheme: Propagator,
) -> Result<EvolutionGrid> {
    let n = p.site_count();
    if psi0.len() != n {
        return Err(GtError::InvalidArgument(format!(
            "state length {} does not match {} sites",
            psi0.len(),
            n
        )));
    }
    if times.is_empty() || times[0] < 0.0 || times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(GtError::InvalidArgument("times must be ascending and non-negative".into()));
    }
    match scheme {
        Propagator::Spectral => evolve_spectral(p, psi0, times),
        Propagator::Stepped => evolve_stepped(p, psi0, times),
    }
}

fn evolve_spectral(p: &ModelParams, psi0: &Array1<C64>, times: &[f64]) -> Result<EvolutionGrid> {
    let sys = BiorthogonalEigensystem::from_obc(p)?;
    evolve_spectral_with(&sys, psi0, times)
}

/// Spectral propagation using a pre-built eigensystem.
pub fn evolve_spectral_with(
    sys: &BiorthogonalEigensystem,
    psi0: &Array1<C64>,
    times: &[f64],
) -> Result<EvolutionGrid> {
    let d = sys.left_project(psi0); // D_j = <L_j | psi0>
    let n = psi0.len();
    let mut states = Vec::with_capacity(times.len());
    let mut log_scale = Vec::with_capacity(times.len());
    for &t in times {
        // Factor out the largest modal growth to avoid overflow.
        let gmax = sys.eigenvalues.iter().map(|e| e.im * t).fold(f64::NEG_INFINITY, f64::max);
        let shift = gmax.max(0.0);
        let mut psi = Array1::<C64>::zeros(n);
        for (j, &dj) in d.iter().enumerate() {
            let e = sys.eigenvalues[j];
            // e^{-iEt} = e^{-i Re(E) t} e^{Im(E) t}; pull out e^{shift}.
            let amp = C64::from_polar((e.im * t - shift).exp(), -e.re * t) * dj;
            if amp.norm() == 0.0 {
                continue;
            }
            let col = sys.right.column(j);
            for (x, &r) in col.iter().enumerate() {
                psi[x] += amp * r;
            }
        }
        // Undo the eigensystem's similarity gauge.
        for (x, g) in sys.log_gauge.iter().enumerate() {
            psi[x] *= g.exp();
        }
        let mut ls = shift;
        renormalize(&mut psi, &mut ls);
        states.push(psi);
        log_scale.push(ls);
    }
    Ok(EvolutionGrid { times: times.to_vec(), states, log_scale })
}

fn evolve_stepped(p: &ModelParams, psi0: &Array1<C64>, times: &[f64]) -> Result<EvolutionGrid> {
    let h = real_space_hamiltonian_c(p, Boundary::Open);
    // Row-sum bound on ‖H‖.
    let hnorm = (0..h.nrows())
        .map(|i| h.row(i).iter().map(|c| c.norm()).sum::<f64>())
        .fold(0.0f64, f64::max)
        .max(1e-12);
    let mut psi = psi0.to_owned();
    let mut log_scale = 0.0f64;
    let mut t_cur = 0.0f64;
    let mut states = Vec::with_capacity(times.len());
    let mut scales = Vec::with_capacity(times.len());
    for &t in times {
        let span = t - t_cur;
        let nsub = ((span * hnorm) / 0.5).ceil().max(1.0) as usize;
        let dt = span / nsub as f64;
        for _ in 0..nsub {
            psi = taylor_step(&h, &psi, dt);
            renormalize(&mut psi, &mut log_scale);
        }
        t_cur = t;
        states.push(psi.clone());
        scales.push(log_scale);
    }
    Ok(EvolutionGrid { times: times.to_vec(), states, log_scale: scales })
}

/// One Taylor step of e^{-iH dt} ψ, summed until machine-precision stagnation.
fn taylor_step(h: &Array2<C64>, psi: &Array1<C64>, dt: f64) -> Array1<C64> {
    let mut acc = psi.to_owned();
    let mut term = psi.to_owned();
    let fac = C64::new(0.0, -dt);
    let base: f64 = psi.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt().max(1e-300);
    for k in 1..64usize {
        term = h.dot(&term) * (fac / k as f64);
        acc = acc + &term;
        let tn: f64 = term.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if tn < 1e-16 * base {
            break;
        }
    }
    acc
}

/// ln ‖ψ(t)‖ over the grid.
pub fn norm_trace(grid: &EvolutionGrid) -> Vec<f64> {
    (0..grid.times.len()).map(|i| grid.log_norm(i)).collect()
}

/// Residual of the amplification identity: ⟨ψ(t)|ψ(t)⟩ from the evolved
/// grid must equal the squared norm of the biorthogonal eigen-expansion
/// Σ_j e^{−iE_j t} ⟨L_j|ψ(0)⟩ |R_j⟩ at every instant.  Compared in the log
/// domain so growing phases do not overflow; returns the worst relative
/// disagreement of ⟨ψ|ψ⟩ over the grid.
pub fn amplification_identity_residual(
    grid: &EvolutionGrid,
    sys: &BiorthogonalEigensystem,
) -> Result<f64> {
    let psi0 = grid.state(0)?;
    if psi0.len() != sys.dim() {
        return Err(GtError::InvalidArgument(
            "evolution grid and eigensystem dimensions differ".into(),
        ));
    }
    let expansion = evolve_spectral_with(sys, &psi0, &grid.times)?;
    let mut worst = 0.0f64;
    for i in 0..grid.times.len() {
        let lhs = 2.0 * grid.log_norm(i);
        let rhs = 2.0 * expansion.log_norm(i);
        worst = worst.max((1.0 - (rhs - lhs).exp()).abs());
    }
    Ok(worst)
}

/// Center-of-mass trajectory ⟨x⟩(t) in units of cells (site index / 4).
pub fn com_trajectory(grid: &EvolutionGrid) -> Vec<f64> {
    (0..grid.times.len())
        .map(|i| {
            let prob = grid.probability(i);
            prob.iter().enumerate().map(|(x, &w)| w * (x as f64 / 4.0)).sum()
        })
        .collect()
}

/// Fraction of probability within the leftmost / rightmost `edge_cells`
/// cells, per instant: (left, right).
pub fn boundary_weight(grid: &EvolutionGrid, edge_cells: usize) -> Vec<(f64, f64)> {
    (0..grid.times.len())
        .map(|i| {
            let prob = grid.probability(i);
            let n = prob.len();
            let edge = (edge_cells * 4).min(n);
            let left: f64 = prob.iter().take(edge).sum();
            let right: f64 = prob.iter().skip(n - edge).sum();
            (left, right)
        })
        .collect()
}

/// Beating amplitude of a scalar trace: standard deviation of the residual
/// after removing a centered moving average (window `2k+1`).
pub fn beating_amplitude(trace: &[f64], k: usize) -> f64 {
    let n = trace.len();
    if n < 2 * k + 1 {
        return 0.0;
    }
    let mut resid = Vec::with_capacity(n - 2 * k);
    for i in k..(n - k) {
        let mean: f64 = trace[i - k..=i + k].iter().sum::<f64>() / (2 * k + 1) as f64;
        resid.push(trace[i] - mean);
    }
    let m = resid.iter().sum::<f64>() / resid.len() as f64;
    (resid.iter().map(|r| (r - m).powi(2)).sum::<f64>() / resid.len() as f64).sqrt()
}

/// Least-squares slope of `ys` against `ts` (used for growth-rate fits of
/// ln ‖ψ(t)‖ over a late-time window).
pub fn linear_slope(ts: &[f64], ys: &[f64]) -> f64 {
    let n = ts.len() as f64;
    let tm = ts.iter().sum::<f64>() / n;
    let ym = ys.iter().sum::<f64>() / n;
    let sxy: f64 = ts.iter().zip(ys).map(|(&t, &y)| (t - tm) * (y - ym)).sum();
    let sxx: f64 = ts.iter().map(|&t| (t - tm).powi(2)).sum();
    if sxx > 0.0 {
        sxy / sxx
    } else {
        0.0
    }
}

/// Rough ballistic transit time to the boundary: 3·(n/2)/v with v the
/// largest group speed |dRe E/dk| over the Bloch bands.
pub fn transit_time(p: &ModelParams, nk: usize) -> Result<f64> {
    let bs = crate::spectral::band_structure(p, nk)?;
    let mut vmax = 0.0f64;
    for b in 0..4 {
        for i in 1..bs.ks.len() {
            let dk = bs.ks[i] - bs.ks[i - 1];
            let de = bs.energies[[i, b]].re - bs.energies[[i - 1, b]].re;
            vmax = vmax.max((de / dk).abs()); // cells per unit time
        }
    }
    if vmax <= 0.0 {
        return Err(GtError::NumericalFailure("zero group velocity".into()));
    }
    Ok(3.0 * (p.n_cells as f64 / 2.0) / vmax)
}
