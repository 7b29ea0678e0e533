//! Generalized Brillouin zone: characteristic-polynomial machinery, the GBZ
//! curve built from OBC eigenvalues, saddle points of the non-Bloch
//! dispersion, the zero-drift Lyapunov exponent, and GBZ-contour Green's
//! function elements.
//!
//! The characteristic object is f(β, E) = β² · det(H(β) − E), a quartic in β
//! whose coefficients are polynomials in E (degree ≤ 4).  For fixed E the
//! four β-roots sorted by modulus satisfy |β1| ≤ |β2| ≤ |β3| ≤ |β4|; E
//! belongs to the OBC spectral region when the middle pair shares a modulus,
//! and the set of middle-pair roots over the OBC spectrum traces the GBZ.

use ndarray::Array1;
use ndarray_linalg::{Eig, Solve};
use num_complex::Complex64 as C64;
use std::f64::consts::PI;

use crate::model::{non_bloch_hamiltonian, real_space_hamiltonian_c, Boundary, ModelParams};
use crate::numeric::{poly_roots, polygon_winding, vandermonde_fit};
use crate::spectral::obc_spectrum;
use crate::{GtError, Result};

/// Bivariate coefficient table of f(β, E) = β² det(H(β) − E):
/// `c[k][m]` multiplies β^k E^m (k ≤ 4, m ≤ 4).
#[derive(Clone, Debug)]
pub struct CharPoly {
    pub c: [[C64; 5]; 5],
}

impl CharPoly {
    /// Fit the table by double interpolation: five β nodes on a circle of
    /// radius 1.3, with the E-polynomial at each node expanded from the
    /// eigenvalues of H(β).
    pub fn new(p: &ModelParams) -> Result<Self> {
        let nb = 5usize;
        let betas: Vec<C64> =
            (0..nb).map(|i| C64::from_polar(1.3, 2.0 * PI * i as f64 / nb as f64)).collect();
        // rows: per beta node, the 5 E-coefficients of beta^2 det(H(beta) - E)
        let mut rows: Vec<[C64; 5]> = Vec::with_capacity(nb);
        for &b in &betas {
            let h = non_bloch_hamiltonian(p, b)?;
            let (lam, _) = h.eig()?;
            // det(H - E) = Π (λ_i - E): expand into E-coefficients.
            let mut coeff = [C64::new(0.0, 0.0); 5];
            coeff[0] = C64::new(1.0, 0.0);
            let mut deg = 0usize;
            for &l in lam.iter() {
                deg += 1;
                for m in (1..=deg).rev() {
                    let prev = coeff[m - 1];
                    coeff[m] = coeff[m] * l - prev;
                }
                coeff[0] *= l;
            }
            let b2 = b * b;
            for c in coeff.iter_mut() {
                *c *= b2;
            }
            rows.push(coeff);
        }
        let mut c = [[C64::new(0.0, 0.0); 5]; 5];
        for m in 0..5 {
            let ys: Vec<C64> = rows.iter().map(|r| r[m]).collect();
            let fit = vandermonde_fit(&betas, &ys);
            for (k, &v) in fit.iter().enumerate() {
                c[k][m] = v;
            }
        }
        Ok(CharPoly { c })
    }

    /// β-coefficients of f(·, E) (quartic): index = β power.
    pub fn beta_coeffs(&self, e: C64) -> [C64; 5] {
        let mut out = [C64::new(0.0, 0.0); 5];
        for k in 0..5 {
            let mut acc = C64::new(0.0, 0.0);
            for m in (0..5).rev() {
                acc = acc * e + self.c[k][m];
            }
            out[k] = acc;
        }
        out
    }

    /// Value and the partial derivatives needed by the saddle Newton solver:
    /// (f, f_β, f_E, f_ββ, f_βE) at (β, E).
    pub fn derivatives(&self, beta: C64, e: C64) -> (C64, C64, C64, C64, C64) {
        let mut pow_b = [C64::new(1.0, 0.0); 5];
        let mut pow_e = [C64::new(1.0, 0.0); 5];
        for i in 1..5 {
            pow_b[i] = pow_b[i - 1] * beta;
            pow_e[i] = pow_e[i - 1] * e;
        }
        let mut f = C64::new(0.0, 0.0);
        let mut fb = C64::new(0.0, 0.0);
        let mut fe = C64::new(0.0, 0.0);
        let mut fbb = C64::new(0.0, 0.0);
        let mut fbe = C64::new(0.0, 0.0);
        for k in 0..5 {
            for m in 0..5 {
                let c = self.c[k][m];
                if c.norm() == 0.0 {
                    continue;
                }
                f += c * pow_b[k] * pow_e[m];
                if k >= 1 {
                    fb += c * (k as f64) * pow_b[k - 1] * pow_e[m];
                }
                if m >= 1 {
                    fe += c * (m as f64) * pow_b[k] * pow_e[m - 1];
                }
                if k >= 2 {
                    fbb += c * ((k * (k - 1)) as f64) * pow_b[k - 2] * pow_e[m];
                }
                if k >= 1 && m >= 1 {
                    fbe += c * ((k * m) as f64) * pow_b[k - 1] * pow_e[m - 1];
                }
            }
        }
        (f, fb, fe, fbb, fbe)
    }

    /// The four β-roots at energy E, sorted by modulus.
    pub fn beta_roots(&self, e: C64) -> Result<[C64; 4]> {
        let coeffs = self.beta_coeffs(e);
        let roots = poly_roots(&coeffs, 0.0)?;
        if roots.len() != 4 {
            return Err(GtError::NumericalFailure(format!(
                "characteristic quartic degenerated to degree {} at E = {e}",
                roots.len()
            )));
        }
        let mut r: [C64; 4] = [roots[0], roots[1], roots[2], roots[3]];
        r.sort_by(|a, b| a.norm().partial_cmp(&b.norm()).unwrap());
        Ok(r)
    }
}

/// Mismatch of the middle-pair moduli, g(E) = log|β3/β2| ≥ 0 up to ordering.
fn modulus_gap(cp: &CharPoly, e: C64) -> Result<f64> {
    let r = cp.beta_roots(e)?;
    Ok((r[2].norm() / r[1].norm()).ln())
}

/// Project an OBC eigenvalue onto the equal-middle-modulus locus by a damped
/// Newton iteration on g(E) = log|β3(E)/β2(E)| with root tracking between
/// finite-difference evaluations.  Returns the polished energy and the
/// residual |g|.
pub fn polish_energy(cp: &CharPoly, e0: C64) -> Result<(C64, f64)> {
    let mut e = e0;
    let mut best = (f64::INFINITY, e0);
    let tol = 1e-12;
    for _ in 0..60 {
        let roots = cp.beta_roots(e)?;
        let g = (roots[2].norm() / roots[1].norm()).ln();
        if g.abs() < best.0 {
            best = (g.abs(), e);
        }
        if g.abs() < tol {
            return Ok((e, g.abs()));
        }
        // Gradient of g w.r.t. (Re E, Im E) by tracked finite differences:
        // roots at the displaced energy are matched to the current roots by
        // proximity so the middle pair keeps its identity.
        let h = 1e-7 * e.norm().max(1.0);
        let mut grad = [0.0f64; 2];
        for (gi, de) in [(0usize, C64::new(h, 0.0)), (1usize, C64::new(0.0, h))] {
            let shifted = cp.beta_roots(e + de)?;
            let mut matched = [C64::new(0.0, 0.0); 4];
            let mut used = [false; 4];
            for (i, &b) in roots.iter().enumerate() {
                let mut bestd = f64::INFINITY;
                let mut bj = usize::MAX;
                for (j, &s) in shifted.iter().enumerate() {
                    if used[j] {
                        continue;
                    }
                    let d = (s - b).norm();
                    if d < bestd {
                        bestd = d;
                        bj = j;
                    }
                }
                used[bj] = true;
                matched[i] = shifted[bj];
            }
            let gs = (matched[2].norm() / matched[1].norm()).ln();
            grad[gi] = (gs - g) / h;
        }
        let u = C64::new(grad[0], grad[1]);
        if u.norm() < 1e-30 {
            break;
        }
        // minimal-norm step solving g + <u, dE> = 0
        let full = -g * u / u.norm_sqr();
        let mut lambda = 1.0f64;
        let mut next = e;
        for _ in 0..8 {
            let trial = e + lambda * full;
            let gt = modulus_gap(cp, trial)?;
            if gt.abs() < g.abs() {
                next = trial;
                break;
            }
            lambda *= 0.5;
            next = trial;
        }
        e = next;
    }
    Ok((best.1, best.0))
}

/// NHSE direction deduced from the GBZ moduli.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NhseDirection {
    Left,
    Right,
    None,
}

impl std::fmt::Display for NhseDirection {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            NhseDirection::Left => write!(f, "left"),
            NhseDirection::Right => write!(f, "right"),
            NhseDirection::None => write!(f, "none"),
        }
    }
}

/// One GBZ point: a middle-pair β root together with the (polished) energy
/// it came from and the index of the source OBC eigenvalue.
#[derive(Clone, Copy, Debug)]
pub struct GbzPoint {
    pub beta: C64,
    pub energy: C64,
    pub source_mode: usize,
}

/// The GBZ as an ordered point set (by arg β) split into two loops, with the
/// GT-forced self-intersection candidates on the negative real axis.
#[derive(Clone, Debug)]
pub struct GbzCurve {
    /// Points ordered by arg(β) over [-π, π).
    pub points: Vec<GbzPoint>,
    /// Loop membership (0 or 1) per point, from modulus-continuity tracking.
    pub loop_id: Vec<u8>,
    /// Self-intersection β values (on the negative real axis).
    pub self_intersections: Vec<C64>,
    /// Worst polish residual |log |β3/β2|| over the curve.
    pub max_residual: f64,
    /// Set when the construction looks unreliable (bipolar/critical cases).
    pub flagged: bool,
}

impl GbzCurve {
    pub fn moduli(&self) -> Vec<f64> {
        self.points.iter().map(|pt| pt.beta.norm()).collect()
    }

    pub fn min_modulus(&self) -> f64 {
        self.moduli().into_iter().fold(f64::INFINITY, f64::min)
    }

    pub fn max_modulus(&self) -> f64 {
        self.moduli().into_iter().fold(0.0, f64::max)
    }

    /// β points of one loop, in arg order.
    pub fn loop_points(&self, id: u8) -> Vec<C64> {
        self.points
            .iter()
            .zip(self.loop_id.iter())
            .filter(|(_, &l)| l == id)
            .map(|(pt, _)| pt.beta)
            .collect()
    }
}

/// Construct the GBZ curve of `p` from the OBC spectrum at `p.n_cells`.
///
/// Topological edge modes (|E| below 1e-8 of the spectral radius) are
/// excluded; every bulk eigenvalue contributes its two middle-pair roots
/// after polishing onto the equal-modulus locus.
pub fn gbz_curve(p: &ModelParams) -> Result<GbzCurve> {
    let cp = CharPoly::new(p)?;
    let ev = obc_spectrum(p)?;
    let rho = ev.iter().map(|e| e.norm()).fold(0.0, f64::max);
    let mut raw: Vec<GbzPoint> = Vec::new();
    let mut max_residual = 0.0f64;
    for (idx, &e) in ev.iter().enumerate() {
        if e.norm() < 1e-8 * rho {
            continue; // topological edge mode
        }
        let (ep, res) = polish_energy(&cp, e)?;
        max_residual = max_residual.max(res);
        let roots = cp.beta_roots(ep)?;
        raw.push(GbzPoint { beta: roots[1], energy: ep, source_mode: idx });
        raw.push(GbzPoint { beta: roots[2], energy: ep, source_mode: idx });
    }
    if raw.len() < 8 {
        return Err(GtError::NumericalFailure("too few GBZ points".into()));
    }
    raw.sort_by(|a, b| a.beta.arg().partial_cmp(&b.beta.arg()).unwrap());
    // Two-loop separation: walk in arg order and 2-color by log-modulus
    // continuity against per-loop trackers seeded from the first few points.
    let n = raw.len();
    let mut loop_id = vec![0u8; n];
    let seed = 8.min(n);
    let mut lm: Vec<f64> = raw[..seed].iter().map(|pt| pt.beta.norm().ln()).collect();
    lm.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut tracker = [
        lm[..seed / 2].iter().sum::<f64>() / (seed / 2) as f64,
        lm[seed / 2..].iter().sum::<f64>() / (seed - seed / 2) as f64,
    ];
    for (i, pt) in raw.iter().enumerate() {
        let x = pt.beta.norm().ln();
        let c = if (x - tracker[0]).abs() <= (x - tracker[1]).abs() { 0 } else { 1 };
        loop_id[i] = c as u8;
        tracker[c] = x;
    }
    let n0 = loop_id.iter().filter(|&&c| c == 0).count();
    let n1 = n - n0;
    // Self-intersection: interpolate each loop's modulus at arg = π (the
    // wrap-around edge of the ordering) and report the shared real-axis
    // crossing when the loops meet there.
    let mut self_intersections = Vec::new();
    let mut meet_gap = f64::INFINITY;
    if n0 >= 4 && n1 >= 4 {
        let edge_mod = |id: u8| -> Option<f64> {
            // last point of the loop before +π and first after -π
            let mut lo: Option<&GbzPoint> = None;
            let mut hi: Option<&GbzPoint> = None;
            for (pt, &l) in raw.iter().zip(loop_id.iter()) {
                if l != id {
                    continue;
                }
                if hi.is_none() {
                    hi = Some(pt); // smallest arg (just above -π)
                }
                lo = Some(pt); // ends at largest arg (just below +π)
            }
            match (lo, hi) {
                (Some(a), Some(b)) => {
                    // linear interpolation of log-modulus in arg across ±π
                    let ta = PI - a.beta.arg();
                    let tb = b.beta.arg() + PI;
                    let wa = tb / (ta + tb);
                    Some((a.beta.norm().ln() * wa + b.beta.norm().ln() * (1.0 - wa)).exp())
                }
                _ => None,
            }
        };
        if let (Some(r0), Some(r1)) = (edge_mod(0), edge_mod(1)) {
            meet_gap = (r0.ln() - r1.ln()).abs();
            if meet_gap < 2e-2 {
                let r = 0.5 * (r0 + r1);
                self_intersections.push(C64::new(-r, 0.0));
            }
        }
    }
    let hermitian = p.is_hermitian();
    // Hermitian curves collapse onto the unit circle; the two "loops" are
    // then a tracking artifact and the intersection notion does not apply.
    let flagged = !hermitian
        && (max_residual > 1e-6 || n0 < n / 4 || n1 < n / 4 || !meet_gap.is_finite());
    Ok(GbzCurve { points: raw, loop_id, self_intersections, max_residual, flagged })
}

/// Direction of the non-Hermitian skin effect read off the GBZ moduli.
pub fn nhse_direction(p: &ModelParams, curve: &GbzCurve) -> Result<NhseDirection> {
    let tol = 1e-6;
    if p.is_hermitian() {
        return Ok(NhseDirection::None);
    }
    if curve.max_modulus() < 1.0 - tol {
        Ok(NhseDirection::Left)
    } else if curve.min_modulus() > 1.0 + tol {
        Ok(NhseDirection::Right)
    } else {
        Err(GtError::NumericalFailure(
            "GBZ straddles the unit circle (bipolar/critical case rejected)".into(),
        ))
    }
}

/// A saddle point of the non-Bloch dispersion: a double β-root of f(·, E).
#[derive(Clone, Copy, Debug)]
pub struct SaddlePoint {
    pub beta: C64,
    pub energy: C64,
    /// True when the double root sits on the middle-modulus pair, i.e. the
    /// saddle lies on the GBZ and feeds the zero-drift Lyapunov exponent.
    pub on_gbz: bool,
}

/// All saddle points (f = f_β = 0), found from the roots of the discriminant
/// of f(·, E) sampled on a circle and refined by a bivariate Newton solve.
///
/// The discriminant values are interpolated trigonometrically from 64 samples
/// on a circle of radius 1.5 · (coupling scale); spurious high-order
/// coefficients below 1e-9 (relative) are trimmed before root extraction.
pub fn saddle_points(p: &ModelParams) -> Result<Vec<SaddlePoint>> {
    let cp = CharPoly::new(p)?;
    let m = 64usize;
    let radius = 1.5 * p.coupling_scale().max(1.0);
    // Discriminant-proportional samples: Π_i f_β(β_i(E), E).
    let mut samples = Vec::with_capacity(m);
    for s in 0..m {
        let e = C64::from_polar(radius, 2.0 * PI * s as f64 / m as f64);
        let roots = cp.beta_roots(e)?;
        let mut prod = C64::new(1.0, 0.0);
        for &b in roots.iter() {
            let (_, fb, _, _, _) = cp.derivatives(b, e);
            prod *= fb;
        }
        samples.push(prod);
    }
    // DFT: coefficient of E^d is (1/M) Σ_s y_s e^{-2πi d s / M} / r^d.
    let mut coeffs = Vec::with_capacity(m);
    let mut maxc = 0.0f64;
    for d in 0..m {
        let mut acc = C64::new(0.0, 0.0);
        for (s, &y) in samples.iter().enumerate() {
            acc += y * C64::from_polar(1.0, -2.0 * PI * (d * s) as f64 / m as f64);
        }
        let c = acc / m as f64 / radius.powi(d as i32);
        maxc = maxc.max(c.norm());
        coeffs.push(c);
    }
    let seeds = poly_roots(&coeffs, 1e-9)?;
    // Newton refinement on (f, f_β) = 0.  The seed energies from the
    // discriminant can be off enough that the double root has not visibly
    // formed, so every root-pair midpoint is tried as a β seed rather than
    // just the closest pair.
    let scale = p.coupling_scale().max(1.0);
    let fscale = scale.powi(4);
    let polish = |beta0: C64, e0: C64| -> Option<(C64, C64)> {
        let (mut beta, mut e) = (beta0, e0);
        // Newton converges quadratically down to the evaluation noise floor
        // (~1e-14 of the polynomial scale); keep the best iterate seen.
        let mut best_it = (f64::INFINITY, beta, e);
        for _ in 0..80 {
            let (f, fb, fe, fbb, fbe) = cp.derivatives(beta, e);
            let res = f.norm() + fb.norm() * beta.norm().max(1e-3);
            if res < best_it.0 {
                best_it = (res, beta, e);
            }
            if res < 1e-14 * fscale {
                break;
            }
            // Solve [[fb, fe], [fbb, fbe]] (dβ, dE)ᵀ = -(f, f_β)ᵀ.
            let det = fb * fbe - fe * fbb;
            if det.norm() < 1e-30 {
                break;
            }
            let db = (-f * fbe + fb * fe) / det;
            let de = (-fb * fb + fbb * f) / det;
            beta += db;
            e += de;
            if !beta.is_finite() || !e.is_finite() {
                break;
            }
        }
        (best_it.0 <= 1e-8 * fscale).then_some((best_it.1, best_it.2))
    };
    let mut found: Vec<SaddlePoint> = Vec::new();
    let push = |beta: C64, e: C64, found: &mut Vec<SaddlePoint>| -> Result<()> {
        if found.iter().any(|sp| (sp.energy - e).norm() < 1e-6 && (sp.beta - beta).norm() < 1e-6) {
            return Ok(());
        }
        // GBZ membership: among the quartic roots at the polished energy the
        // double root must occupy the middle-modulus pair.
        let r = cp.beta_roots(e)?;
        let bm = beta.norm();
        let below = r.iter().filter(|b| b.norm() < bm * (1.0 - 1e-4)).count();
        let above = r.iter().filter(|b| b.norm() > bm * (1.0 + 1e-4)).count();
        let on_gbz = below <= 1 && above <= 1;
        found.push(SaddlePoint { beta, energy: e, on_gbz });
        Ok(())
    };
    for e_seed in seeds {
        if !e_seed.is_finite() || e_seed.norm() > 4.0 * radius {
            continue;
        }
        let roots = match cp.beta_roots(e_seed) {
            Ok(r) => r,
            Err(_) => continue,
        };
        for i in 0..4 {
            for j in (i + 1)..4 {
                if let Some((beta, e)) = polish(0.5 * (roots[i] + roots[j]), e_seed) {
                    push(beta, e, &mut found)?;
                }
            }
        }
    }
    // The couplings are real, so f has real coefficients and the saddle set
    // is closed under complex conjugation; it is also closed under E → −E
    // (sublattice symmetry of the four-site cell).  Complete any partners the
    // seed sweep missed.
    let snapshot: Vec<(C64, C64)> = found.iter().map(|sp| (sp.beta, sp.energy)).collect();
    for (b0, e0) in snapshot {
        for (bs, es) in [(b0.conj(), e0.conj()), (b0, -e0), (b0.conj(), -e0.conj())] {
            if let Some((beta, e)) = polish(bs, es) {
                push(beta, e, &mut found)?;
            }
        }
    }
    if found.is_empty() {
        return Err(GtError::NumericalFailure("no saddle points found".into()));
    }
    Ok(found)
}

/// Zero-drift Lyapunov exponent λ(0): the largest Im(E) over saddle points
/// that lie on the GBZ (the long-time growth rate at a fixed site).
pub fn lyapunov_zero_drift(p: &ModelParams) -> Result<f64> {
    let saddles = saddle_points(p)?;
    let lam = saddles
        .iter()
        .filter(|sp| sp.on_gbz)
        .map(|sp| sp.energy.im)
        .fold(f64::NEG_INFINITY, f64::max);
    if lam == f64::NEG_INFINITY {
        return Err(GtError::NumericalFailure("no GBZ saddle points".into()));
    }
    Ok(lam)
}

/// Evaluation method for [`green_element`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GreenMethod {
    Contour,
    Resolvent,
}

/// Green's function element G_ij(ω) for the OBC chain with `n_cells` cells.
///
/// * `Resolvent`: entry (i, j) of (ω − H_OBC)^{-1}.
/// * `Contour`: the GBZ integral ∮ dβ/(2πiβ) β^{x_i − x_j} [(ω − H(β))^{-1}]
///   over the ordered curve.  Each loop is validated by winding numbers (it
///   must enclose the two smallest β-roots of f(·, ω) exactly once and the
///   others not at all); the quadrature applies a 4-point Gauss-Legendre rule
///   on every polygon edge, and valid loops are averaged.
pub fn green_element(
    p: &ModelParams,
    omega: C64,
    i: usize,
    j: usize,
    n_cells: usize,
    method: GreenMethod,
) -> Result<C64> {
    let pn = p.with_cells(n_cells);
    let nn = pn.site_count();
    if i >= nn || j >= nn {
        return Err(GtError::InvalidArgument("site index out of range".into()));
    }
    let ev = obc_spectrum(&pn)?;
    let dist = ev.iter().map(|&e| (e - omega).norm()).fold(f64::INFINITY, f64::min);
    if dist < 1e-8 * pn.coupling_scale() {
        return Err(GtError::InvalidArgument("omega lies on the OBC spectrum".into()));
    }
    match method {
        GreenMethod::Resolvent => {
            let h = real_space_hamiltonian_c(&pn, Boundary::Open);
            let mut a = -h;
            for d in 0..nn {
                a[[d, d]] += omega;
            }
            let mut rhs = Array1::<C64>::zeros(nn);
            rhs[j] = C64::new(1.0, 0.0);
            let x = a.solve(&rhs)?;
            Ok(x[i])
        }
        GreenMethod::Contour => {
            let curve = gbz_curve(&pn)?;
            if curve.flagged {
                return Err(GtError::NumericalFailure("GBZ curve flagged; contour refused".into()));
            }
            let cp = CharPoly::new(&pn)?;
            let roots = cp.beta_roots(omega)?;
            let (xi, si) = (i / 4, i % 4);
            let (xj, sj) = (j / 4, j % 4);
            let integrand = |b: C64| -> Result<C64> {
                let mut a = -non_bloch_hamiltonian(&pn, b)?;
                for d in 0..4 {
                    a[[d, d]] += omega;
                }
                let mut rhs = Array1::<C64>::zeros(4);
                rhs[sj] = C64::new(1.0, 0.0);
                let x = a.solve(&rhs)?;
                let power = b.powi(xi as i32 - xj as i32);
                Ok(power * x[si] / (C64::new(0.0, 2.0 * PI) * b))
            };
            // 4-point Gauss-Legendre nodes/weights on [0, 1].
            let gl_x = [0.069431844202973712, 0.33000947820757187, 0.66999052179242813, 0.93056815579702623];
            let gl_w = [0.17392742256872693, 0.32607257743127307, 0.32607257743127307, 0.17392742256872693];
            let mut acc = C64::new(0.0, 0.0);
            let mut valid = 0usize;
            for id in 0..2u8 {
                let poly = curve.loop_points(id);
                if poly.len() < 8 {
                    continue;
                }
                // orientation + separation check
                let winds: Vec<f64> = roots.iter().map(|&r| polygon_winding(&poly, r)).collect();
                let sgn = if winds[0] > 0.5 { 1.0 } else { -1.0 };
                let ok = (winds[0] * sgn - 1.0).abs() < 0.01
                    && (winds[1] * sgn - 1.0).abs() < 0.01
                    && (winds[2] * sgn).abs() < 0.01
                    && (winds[3] * sgn).abs() < 0.01;
                if !ok {
                    continue;
                }
                let mut loop_int = C64::new(0.0, 0.0);
                let m = poly.len();
                for q in 0..m {
                    let a = poly[q];
                    let b = poly[(q + 1) % m];
                    let seg = b - a;
                    for g in 0..4 {
                        let node = a + seg * gl_x[g];
                        loop_int += integrand(node)? * seg * gl_w[g];
                    }
                }
                acc += loop_int * sgn;
                valid += 1;
            }
            if valid == 0 {
                return Err(GtError::NumericalFailure(
                    "no GBZ loop separates the β-roots of ω; contour integral undefined".into(),
                ));
            }
            Ok(acc / valid as f64)
        }
    }
}
