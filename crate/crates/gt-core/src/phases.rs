//! Phase classification: eigenmode phases (topology + NHSE direction) and
//! dynamic phases (dominant-frequency structure of the OBC spectrum), grid
//! scans for both diagrams, and the Lyapunov path scans.

use rayon::prelude::*;
use std::f64::consts::PI;

use crate::dynamics::{self, delta_state};
use crate::gbz::lyapunov_zero_drift;
use crate::model::{middle_site, ModelParams};
use crate::spectral::{
    complex_zak_phase, energy_winding, is_gapless, obc_spectrum, pbc_loop_centroids,
    BiorthogonalEigensystem,
};
use crate::{GtError, Result};

/// Band topology read off the complex Zak phase and the line gap.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Topology {
    Nontrivial,
    Trivial,
    Gapless,
}

impl std::fmt::Display for Topology {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Topology::Nontrivial => write!(f, "nontrivial"),
            Topology::Trivial => write!(f, "trivial"),
            Topology::Gapless => write!(f, "gapless"),
        }
    }
}

pub use crate::gbz::NhseDirection;

/// Eigenmode phase label: topology, skin direction, region tag.
#[derive(Clone, Debug)]
pub struct EigenmodePhaseLabel {
    pub topology: Topology,
    pub nhse: NhseDirection,
    /// Derived tag: I/I′/II/II′/III/III′ or Hermitian.
    pub region: String,
    /// Total complex Zak phase over the lower bands, folded to [0, 2π).
    pub zak: f64,
    /// Energy winding numbers at the two PBC loop centroids.
    pub winding: (i32, i32),
}

const NK_CLASSIFY: usize = 256;

/// Classify the eigenmode phase of `p` from the complex Zak phase, the
/// line-gap test, and the energy winding at the PBC loop centroids.
pub fn eigenmode_phase(p: &ModelParams) -> Result<EigenmodePhaseLabel> {
    let gapless = is_gapless(p, NK_CLASSIFY)?;
    let zak = complex_zak_phase(p, NK_CLASSIFY)?;
    let (c_neg, c_pos) = pbc_loop_centroids(p, NK_CLASSIFY)?;
    let w1 = energy_winding(p, c_neg, 4 * NK_CLASSIFY)?;
    let w2 = energy_winding(p, c_pos, 4 * NK_CLASSIFY)?;
    let nhse = if p.is_hermitian() || (w1 == 0 && w2 == 0) {
        NhseDirection::None
    } else if w1 <= 0 && w2 <= 0 {
        NhseDirection::Left
    } else if w1 >= 0 && w2 >= 0 {
        NhseDirection::Right
    } else {
        return Err(GtError::NumericalFailure(format!(
            "loop windings disagree in sign: {w1}, {w2}"
        )));
    };
    let topology = if gapless {
        Topology::Gapless
    } else {
        // Zak totals are quantized to {0, π} in the symmetric gapped phases.
        let d0 = zak.min(2.0 * PI - zak);
        let dpi = (zak - PI).abs();
        if dpi < d0 {
            Topology::Nontrivial
        } else {
            Topology::Trivial
        }
    };
    let region = if p.is_hermitian() {
        "Hermitian".to_string()
    } else {
        let base = match topology {
            Topology::Nontrivial => "I",
            Topology::Gapless => "II",
            Topology::Trivial => "III",
        };
        let prime = if nhse == NhseDirection::Right { "′" } else { "" };
        format!("{base}{prime}")
    };
    Ok(EigenmodePhaseLabel { topology, nhse, region, zak, winding: (w1, w2) })
}

/// Dominant-frequency structure of the long-time dynamics.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FrequencyStructure {
    Dual,
    Single,
    AllReal,
}

impl std::fmt::Display for FrequencyStructure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FrequencyStructure::Dual => write!(f, "dual"),
            FrequencyStructure::Single => write!(f, "single"),
            FrequencyStructure::AllReal => write!(f, "all_real"),
        }
    }
}

/// Dynamic phase label from the OBC spectrum.
#[derive(Clone, Debug)]
pub struct DynamicPhaseLabel {
    /// Hermitian, A, A′, B, B′, C, or C′.
    pub class: String,
    pub dominant_frequencies: FrequencyStructure,
    pub direction: NhseDirection,
    /// Dominant oscillation frequency |Re E| of the top-Im modes (0 for
    /// single/all-real structure).
    pub frequency: f64,
    /// Largest imaginary part of the OBC spectrum.
    pub max_im: f64,
}

/// Classify the dynamic phase of `p` from its OBC spectrum at `n_cells`.
///
/// Hermitian couplings are their own class; otherwise a real spectrum (up to
/// ε_real = 1e-8 · spectral radius) is class C/C′, and complex spectra are
/// split by the Re-E structure of the modes whose Im E lies within
/// ε_dom = 1e-3 · max Im of the maximum: a cluster at ±f ≠ 0 is A/A′ (dual
/// frequencies, beating), a single cluster at Re ≈ 0 is B/B′.  The prime
/// marks t3 < t4 (rightward amplification).
pub fn dynamic_phase(p: &ModelParams, n_cells: usize) -> Result<DynamicPhaseLabel> {
    if n_cells < 40 {
        return Err(GtError::InvalidArgument("dynamic_phase requires n_cells >= 40".into()));
    }
    let pn = p.with_cells(n_cells);
    let prime = if p.t3 < p.t4 { "′" } else { "" };
    let direction = if p.t3 > p.t4 {
        NhseDirection::Left
    } else if p.t3 < p.t4 {
        NhseDirection::Right
    } else {
        NhseDirection::None
    };
    if p.is_hermitian() {
        return Ok(DynamicPhaseLabel {
            class: "Hermitian".into(),
            dominant_frequencies: FrequencyStructure::AllReal,
            direction,
            frequency: 0.0,
            max_im: 0.0,
        });
    }
    let ev = obc_spectrum(&pn)?;
    let rho = ev.iter().map(|e| e.norm()).fold(0.0, f64::max);
    let max_im = ev.iter().map(|e| e.im).fold(f64::NEG_INFINITY, f64::max);
    let eps_real = 1e-8 * rho;
    if max_im.abs() < eps_real && ev.iter().all(|e| e.im.abs() < eps_real) {
        return Ok(DynamicPhaseLabel {
            class: format!("C{prime}"),
            dominant_frequencies: FrequencyStructure::AllReal,
            direction,
            frequency: 0.0,
            max_im,
        });
    }
    let eps_dom = 1e-3 * max_im;
    let mut freqs: Vec<f64> = ev
        .iter()
        .filter(|e| e.im > max_im - eps_dom)
        .map(|e| e.re.abs())
        .collect();
    freqs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    // Cluster sorted |Re E| by gaps larger than 10 ε_dom.
    let mut clusters: Vec<(f64, usize)> = Vec::new(); // (mean, count)
    let mut start = 0usize;
    for i in 1..=freqs.len() {
        if i == freqs.len() || freqs[i] - freqs[i - 1] > 10.0 * eps_dom {
            let seg = &freqs[start..i];
            clusters.push((seg.iter().sum::<f64>() / seg.len() as f64, seg.len()));
            start = i;
        }
    }
    if clusters.len() >= 3 {
        return Err(GtError::ClassificationAmbiguous(format!(
            "{} dominant-frequency clusters at {:?}",
            clusters.len(),
            clusters.iter().map(|c| c.0).collect::<Vec<_>>()
        )));
    }
    if clusters.len() == 2 {
        return Err(GtError::ClassificationAmbiguous(format!(
            "two dominant-frequency clusters at {:.6} and {:.6}",
            clusters[0].0, clusters[1].0
        )));
    }
    let f = clusters[0].0;
    if f > 10.0 * eps_dom {
        Ok(DynamicPhaseLabel {
            class: format!("A{prime}"),
            dominant_frequencies: FrequencyStructure::Dual,
            direction,
            frequency: f,
            max_im,
        })
    } else {
        Ok(DynamicPhaseLabel {
            class: format!("B{prime}"),
            dominant_frequencies: FrequencyStructure::Single,
            direction,
            frequency: 0.0,
            max_im,
        })
    }
}

/// Which diagram a grid scan produces.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DiagramKind {
    Eigenmode,
    Dynamic,
}

/// One classified grid point; errors are recorded, not fatal.
#[derive(Clone, Debug)]
pub struct GridPoint {
    pub t3: f64,
    pub t4: f64,
    /// Primary class tag (region for eigenmode, class for dynamic).
    pub label: std::result::Result<String, String>,
    pub direction: String,
    pub frequency: f64,
}

/// A classified (t3, t4) grid with label-change boundary midpoints.
#[derive(Clone, Debug)]
pub struct PhaseDiagram {
    pub kind: DiagramKind,
    pub t3s: Vec<f64>,
    pub t4s: Vec<f64>,
    /// Row-major over (t3 index, t4 index).
    pub points: Vec<GridPoint>,
    /// Midpoints of grid edges where the label changes.
    pub boundaries: Vec<(f64, f64)>,
}

/// Scan a (t3, t4) grid and classify every point.  Points are computed in
/// parallel and merged in grid order, so the result is deterministic.
pub fn phase_diagram(
    kind: DiagramKind,
    t3_range: (f64, f64),
    t4_range: (f64, f64),
    resolution: usize,
    base: &ModelParams,
) -> Result<PhaseDiagram> {
    if resolution < 16 {
        return Err(GtError::InvalidArgument("resolution must be >= 16".into()));
    }
    let lin = |r: (f64, f64)| -> Vec<f64> {
        (0..resolution)
            .map(|i| r.0 + (r.1 - r.0) * i as f64 / (resolution - 1) as f64)
            .collect()
    };
    let t3s = lin(t3_range);
    let t4s = lin(t4_range);
    let coords: Vec<(f64, f64)> =
        t3s.iter().flat_map(|&a| t4s.iter().map(move |&b| (a, b))).collect();
    let points: Vec<GridPoint> = coords
        .par_iter()
        .map(|&(t3, t4)| {
            let p = match ModelParams::new(base.t1, base.t2, t3, t4, base.n_cells) {
                Ok(p) => p,
                Err(e) => {
                    return GridPoint {
                        t3,
                        t4,
                        label: Err(e.to_string()),
                        direction: "none".into(),
                        frequency: 0.0,
                    }
                }
            };
            match kind {
                DiagramKind::Eigenmode => match eigenmode_phase(&p) {
                    Ok(l) => GridPoint {
                        t3,
                        t4,
                        label: Ok(l.region.clone()),
                        direction: l.nhse.to_string(),
                        frequency: 0.0,
                    },
                    Err(e) => GridPoint {
                        t3,
                        t4,
                        label: Err(e.to_string()),
                        direction: "none".into(),
                        frequency: 0.0,
                    },
                },
                DiagramKind::Dynamic => match dynamic_phase(&p, p.n_cells.max(40)) {
                    Ok(l) => GridPoint {
                        t3,
                        t4,
                        label: Ok(l.class.clone()),
                        direction: l.direction.to_string(),
                        frequency: l.frequency,
                    },
                    Err(e) => GridPoint {
                        t3,
                        t4,
                        label: Err(e.to_string()),
                        direction: "none".into(),
                        frequency: 0.0,
                    },
                },
            }
        })
        .collect();
    // Boundary extraction: midpoints of axis-parallel edges whose endpoint
    // labels differ (errors never contribute edges).
    let idx = |i: usize, j: usize| i * resolution + j;
    let mut boundaries = Vec::new();
    for i in 0..resolution {
        for j in 0..resolution {
            if let Ok(here) = &points[idx(i, j)].label {
                if i + 1 < resolution {
                    if let Ok(right) = &points[idx(i + 1, j)].label {
                        if here != right {
                            boundaries.push((0.5 * (t3s[i] + t3s[i + 1]), t4s[j]));
                        }
                    }
                }
                if j + 1 < resolution {
                    if let Ok(up) = &points[idx(i, j + 1)].label {
                        if here != up {
                            boundaries.push((t3s[i], 0.5 * (t4s[j] + t4s[j + 1])));
                        }
                    }
                }
            }
        }
    }
    Ok(PhaseDiagram { kind, t3s, t4s, points, boundaries })
}

/// Bisect a gap-closing transition along an axis-parallel cut.  `vary_t3`
/// selects which coupling moves; the other stays at `fixed`.  The bracket
/// `(lo, hi)` must straddle the gapped/gapless transition.
pub fn gap_closing_bisection(
    base: &ModelParams,
    vary_t3: bool,
    fixed: f64,
    mut lo: f64,
    mut hi: f64,
) -> Result<f64> {
    let gapless_at = |v: f64| -> Result<bool> {
        let p = if vary_t3 {
            ModelParams::new(base.t1, base.t2, v, fixed, base.n_cells)?
        } else {
            ModelParams::new(base.t1, base.t2, fixed, v, base.n_cells)?
        };
        is_gapless(&p, NK_CLASSIFY)
    };
    let glo = gapless_at(lo)?;
    let ghi = gapless_at(hi)?;
    if glo == ghi {
        return Err(GtError::InvalidArgument(
            "bisection bracket does not straddle a gap closing".into(),
        ));
    }
    for _ in 0..48 {
        let mid = 0.5 * (lo + hi);
        if gapless_at(mid)? == glo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// One sample of a Lyapunov path scan.
#[derive(Clone, Debug)]
pub struct LyapunovSample {
    pub m: f64,
    pub lambda: std::result::Result<f64, String>,
    pub growth_fit: std::result::Result<f64, String>,
}

/// Which Fig.-4 path to scan: path 1 moves t3 = 2 + m at t4 = 2; path 2
/// moves t4 = 2 + m at t3 = 10.  m runs over [0, 8].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LyapunovPath {
    Path1,
    Path2,
}

/// λ(0) and a direct-evolution growth-rate fit along one path.
pub fn lyapunov_path_scan(path: LyapunovPath, samples: usize) -> Result<Vec<LyapunovSample>> {
    if samples < 16 {
        return Err(GtError::InvalidArgument("samples must be >= 16".into()));
    }
    let ms: Vec<f64> =
        (0..samples).map(|i| 8.0 * i as f64 / (samples - 1) as f64).collect();
    let out: Vec<LyapunovSample> = ms
        .par_iter()
        .map(|&m| {
            let (t3, t4) = match path {
                LyapunovPath::Path1 => (2.0 + m, 2.0),
                LyapunovPath::Path2 => (10.0, 2.0 + m),
            };
            let p = match ModelParams::new(1.0, 2.0, t3, t4, 100) {
                Ok(p) => p,
                Err(e) => {
                    return LyapunovSample {
                        m,
                        lambda: Err(e.to_string()),
                        growth_fit: Err("invalid parameters".to_string().into()),
                    }
                }
            };
            let lambda = lyapunov_zero_drift(&p).map_err(|e| e.to_string());
            let growth_fit = growth_rate_fit(&p).map_err(|e| e.to_string());
            LyapunovSample { m, lambda, growth_fit }
        })
        .collect();
    Ok(out)
}

/// Direct fit of the fixed-site growth rate: evolve a middle δ-excitation
/// and regress ln |ψ_mid(t)| over a window chosen from the spectrum.
///
/// For real OBC spectra (no growth) the window can be arbitrarily late, so a
/// long quiet window averages the quasi-periodic oscillation away.  For
/// complex spectra the fixed-site rate equals λ(0) only in the intermediate
/// regime before edge-localized fast modes feed back, so the window is tied
/// to the ballistic round-trip time.
pub fn growth_rate_fit(p: &ModelParams) -> Result<f64> {
    let pn = p.with_cells(100);
    // Use the gauged eigensystem for the realness test: at this size the raw
    // open-chain matrix is non-normal enough that plain eigenvalues pick up
    // O(1e-2) spurious imaginary parts.  Built once and reused for the
    // propagation below — the eigensolve dominates the cost.
    let sys = BiorthogonalEigensystem::from_obc(&pn)?;
    let ev = &sys.eigenvalues;
    let rho = ev.iter().map(|e| e.norm()).fold(0.0, f64::max);
    let max_im = ev.iter().map(|e| e.im.abs()).fold(0.0, f64::max);
    let real_spectrum = max_im < 1e-6 * rho;
    let (t_lo, t_hi) = if real_spectrum {
        (500.0, 8000.0)
    } else {
        let t_rt = 2.0 * crate::dynamics::transit_time(&pn, 256)? / 3.0; // round trip
        (0.30 * t_rt, 0.85 * t_rt)
    };
    let nt = if real_spectrum { 640 } else { 160 };
    let times: Vec<f64> =
        (0..nt).map(|i| t_lo + (t_hi - t_lo) * i as f64 / (nt - 1) as f64).collect();
    let site = middle_site(pn.n_cells);
    let psi0 = delta_state(pn.site_count(), site)?;
    let grid = dynamics::evolve_spectral_with(&sys, &psi0, &times)?;
    let mut ts = Vec::with_capacity(nt);
    let mut ys = Vec::with_capacity(nt);
    for i in 0..nt {
        let amp = grid.states[i][site].norm();
        if amp > 0.0 {
            ts.push(times[i]);
            ys.push(amp.ln() + grid.log_scale[i]);
        }
    }
    if ts.len() < nt / 2 {
        return Err(GtError::NumericalFailure("middle-site amplitude vanished".into()));
    }
    Ok(dynamics::linear_slope(&ts, &ys))
}

/// Largest |second difference| of λ over a path scan and the m at which it
/// occurs (the kink detector for the non-Bloch PT transition).
pub fn second_difference_spike(samples: &[LyapunovSample]) -> Option<(f64, f64)> {
    let vals: Vec<Option<f64>> =
        samples.iter().map(|s| s.lambda.as_ref().ok().copied()).collect();
    let mut best: Option<(f64, f64)> = None;
    for i in 1..samples.len().saturating_sub(1) {
        if let (Some(a), Some(b), Some(c)) = (vals[i - 1], vals[i], vals[i + 1]) {
            let d2 = (a - 2.0 * b + c).abs();
            if best.map_or(true, |(_, m)| d2 > m) {
                best = Some((samples[i].m, d2));
            }
        }
    }
    best.map(|(m, d2)| (m, d2))
}
