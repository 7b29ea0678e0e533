use gt_core::gbz::{
    gbz_curve, green_element, lyapunov_zero_drift, nhse_direction, saddle_points, CharPoly,
    GreenMethod, NhseDirection,
};
use gt_core::model::{non_bloch_hamiltonian, ModelParams};
use gt_core::numeric::SplitMix64;
use ndarray_linalg::Eig;
use num_complex::Complex64 as C64;

#[test]
fn char_poly_roots_contain_construction_beta() {
    // E an eigenvalue of H(beta0) -> beta0 among the roots of f(., E).
    let p = ModelParams::with_rungs(2.0, 0.5, 4).unwrap();
    let cp = CharPoly::new(&p).unwrap();
    let beta0 = C64::new(0.4, 0.3);
    let h = non_bloch_hamiltonian(&p, beta0).unwrap();
    let (ev, _) = h.eig().unwrap();
    for &e in ev.iter() {
        let roots = cp.beta_roots(e).unwrap();
        let best = roots.iter().map(|b| (b - beta0).norm()).fold(f64::INFINITY, f64::min);
        assert!(best < 1e-8, "beta0 missing from roots at E={e}");
    }
}

#[test]
fn hermitian_roots_pair_on_unit_circle() {
    let p = ModelParams::with_rungs(2.5, 2.5, 4).unwrap();
    let cp = CharPoly::new(&p).unwrap();
    // E inside a band: take a PBC energy.
    let e = gt_core::spectral::pbc_spectrum(&p.with_cells(16)).unwrap()[10];
    let roots = cp.beta_roots(e).unwrap();
    let on_circle = roots.iter().filter(|b| (b.norm() - 1.0).abs() < 1e-8).count();
    assert!(on_circle >= 2, "roots {roots:?}");
}

#[test]
fn gbz_magnitude_oracles() {
    // Frozen mid-pair modulus ranges at 40 cells.
    let cases = [
        (2.0, 0.5, 0.7318, 0.8961),
        (5.0, 4.0, 0.8326, 0.9545),
        (2.0, 4.0, 1.1249, 2.2363),
    ];
    for &(t3, t4, lo, hi) in &cases {
        let p = ModelParams::with_rungs(t3, t4, 40).unwrap();
        let c = gbz_curve(&p).unwrap();
        assert!(!c.flagged);
        assert!((c.min_modulus() - lo).abs() < 2e-3, "({t3},{t4}) min {}", c.min_modulus());
        assert!((c.max_modulus() - hi).abs() < 2e-3, "({t3},{t4}) max {}", c.max_modulus());
        assert!(c.max_residual < 1e-6);
    }
}

#[test]
fn hermitian_gbz_is_unit_circle() {
    let p = ModelParams::with_rungs(2.5, 2.5, 40).unwrap();
    let c = gbz_curve(&p).unwrap();
    for m in c.moduli() {
        assert!((m - 1.0).abs() < 1e-6);
    }
}

#[test]
fn gbz_self_intersection_on_negative_real_axis() {
    for &(t3, t4) in &[(2.0, 0.5), (5.0, 4.0), (2.0, 4.0)] {
        let p = ModelParams::with_rungs(t3, t4, 40).unwrap();
        let c = gbz_curve(&p).unwrap();
        assert!(!c.self_intersections.is_empty(), "({t3},{t4}) no intersection");
        for x in &c.self_intersections {
            assert!(x.re < 0.0, "({t3},{t4}) intersection {x}");
            assert!(x.im.abs() < 1e-4, "({t3},{t4}) intersection {x}");
        }
    }
}

#[test]
fn gbz_points_solve_characteristic_equation() {
    let p = ModelParams::with_rungs(2.0, 0.5, 40).unwrap();
    let cp = CharPoly::new(&p).unwrap();
    let c = gbz_curve(&p).unwrap();
    for pt in &c.points {
        let (f, _, _, _, _) = cp.derivatives(pt.beta, pt.energy);
        assert!(f.norm() < 1e-6 * p.coupling_scale().powi(4));
    }
}

#[test]
fn gbz_beta_reproduces_obc_energy_in_non_bloch_spectrum() {
    let p = ModelParams::with_rungs(5.0, 4.0, 40).unwrap();
    let c = gbz_curve(&p).unwrap();
    let mut rng = SplitMix64::new(7);
    for _ in 0..20 {
        let pt = &c.points[(rng.next_u64() % c.points.len() as u64) as usize];
        let h = non_bloch_hamiltonian(&p, pt.beta).unwrap();
        let (ev, _) = h.eig().unwrap();
        let best = ev.iter().map(|e| (e - pt.energy).norm()).fold(f64::INFINITY, f64::min);
        assert!(best < 1e-6, "GBZ point energy {} missing from H(beta)", pt.energy);
    }
}

#[test]
fn nhse_direction_oracles() {
    let cases = [
        (5.0, 4.0, NhseDirection::Left),
        (2.0, 4.0, NhseDirection::Right),
        (2.5, 2.5, NhseDirection::None),
    ];
    for &(t3, t4, want) in &cases {
        let p = ModelParams::with_rungs(t3, t4, 40).unwrap();
        let c = gbz_curve(&p).unwrap();
        assert_eq!(nhse_direction(&p, &c).unwrap(), want, "({t3},{t4})");
    }
}

#[test]
fn direction_winding_consistency() {
    // nhse_direction == left iff winding at the loop centroids is -1.
    for &(t3, t4) in &[(2.0, 0.5), (5.0, 4.0), (2.0, 4.0)] {
        let p = ModelParams::with_rungs(t3, t4, 40).unwrap();
        let c = gbz_curve(&p).unwrap();
        let dir = nhse_direction(&p, &c).unwrap();
        let (c1, _) = gt_core::spectral::pbc_loop_centroids(&p, 256).unwrap();
        let w = gt_core::spectral::energy_winding(&p, c1, 512).unwrap();
        match dir {
            NhseDirection::Left => assert_eq!(w, -1),
            NhseDirection::Right => assert_eq!(w, 1),
            NhseDirection::None => assert_eq!(w, 0),
        }
    }
}

#[test]
fn saddles_satisfy_stationarity() {
    let p = ModelParams::with_rungs(4.0, 2.0, 40).unwrap();
    let cp = CharPoly::new(&p).unwrap();
    let scale4 = p.coupling_scale().powi(4);
    let saddles = saddle_points(&p).unwrap();
    assert!(!saddles.is_empty());
    for s in &saddles {
        let (f, fb, _, _, _) = cp.derivatives(s.beta, s.energy);
        assert!(f.norm() < 1e-7 * scale4, "f = {}", f.norm());
        assert!(fb.norm() < 1e-7 * scale4, "f_beta = {}", fb.norm());
    }
}

#[test]
fn hermitian_saddle_energies_real() {
    let p = ModelParams::with_rungs(2.5, 2.5, 40).unwrap();
    for s in saddle_points(&p).unwrap() {
        if s.on_gbz {
            assert!(s.energy.im.abs() < 1e-6, "Im E = {}", s.energy.im);
        }
    }
}

#[test]
fn lyapunov_oracles() {
    // Frozen to 6 decimals from converged runs.
    let cases = [
        (4.0, 2.0, 0.749495),
        (2.0, 9.0, 2.095498),
        (10.0, 2.2, 2.001254),
    ];
    for &(t3, t4, want) in &cases {
        let p = ModelParams::with_rungs(t3, t4, 40).unwrap();
        let l = lyapunov_zero_drift(&p).unwrap();
        assert!((l - want).abs() < 1e-5, "lambda({t3},{t4}) = {l}, want {want}");
    }
    // Real-spectrum points: lambda(0) = 0.
    for &(t3, t4) in &[(10.0, 4.0), (9.0, 6.0), (2.5, 2.5)] {
        let p = ModelParams::with_rungs(t3, t4, 40).unwrap();
        let l = lyapunov_zero_drift(&p).unwrap();
        assert!(l.abs() < 1e-4, "lambda({t3},{t4}) = {l}");
    }
}

#[test]
fn saddle_existence_flips_across_path2_boundary() {
    // On-GBZ saddles with Im E > 0 exist at (10,2.2) (phase B side) and not
    // at (10,4) (real-spectrum side).
    let b_side = ModelParams::with_rungs(10.0, 2.2, 40).unwrap();
    let grow: Vec<_> = saddle_points(&b_side)
        .unwrap()
        .into_iter()
        .filter(|s| s.on_gbz && s.energy.im > 1e-3)
        .collect();
    assert!(!grow.is_empty());
    let c_side = ModelParams::with_rungs(10.0, 4.0, 40).unwrap();
    let grow: Vec<_> = saddle_points(&c_side)
        .unwrap()
        .into_iter()
        .filter(|s| s.on_gbz && s.energy.im > 1e-3)
        .collect();
    assert!(grow.is_empty());
}

#[test]
fn green_contour_matches_resolvent() {
    // Separations up to 12 cells in both directions; longer-range elements
    // are exponentially small and fall below the quadrature's absolute
    // accuracy, so relative agreement is meaningless there.
    let p = ModelParams::with_rungs(4.0, 2.0, 60).unwrap();
    let mut rng = SplitMix64::new(42);
    for &(i, j) in &[(120usize, 108usize), (108, 120), (121, 120), (120, 120)] {
        for _ in 0..3 {
            let omega = C64::new(rng.uniform(-6.0, 6.0), rng.uniform(1.0, 3.0));
            let gc = green_element(&p, omega, i, j, 60, GreenMethod::Contour).unwrap();
            let gr = green_element(&p, omega, i, j, 60, GreenMethod::Resolvent).unwrap();
            let rel = (gc - gr).norm() / gr.norm().max(1e-300);
            assert!(rel < 1e-6, "G[{i},{j}] omega={omega}: contour {gc} vs resolvent {gr}");
        }
    }
}

#[test]
fn green_amplified_towards_skin_boundary() {
    // Leftward amplification at (4,2): |G_{i,j}| >> 1 for i far left of j
    // when omega sits near the max-Im spectral region.
    let p = ModelParams::with_rungs(4.0, 2.0, 60).unwrap();
    let omega = C64::new(0.334, 0.80);
    let g = green_element(&p, omega, 4, 120, 60, GreenMethod::Resolvent).unwrap();
    assert!(g.norm() > 1e3, "|G| = {}", g.norm());
}

#[test]
fn green_hermitian_symmetric() {
    let p = ModelParams::with_rungs(2.5, 2.5, 20).unwrap();
    let omega = C64::new(0.3, 0.9);
    let gij = green_element(&p, omega, 3, 50, 20, GreenMethod::Resolvent).unwrap();
    let gji = green_element(&p, omega, 50, 3, 20, GreenMethod::Resolvent).unwrap();
    assert!((gij - gji).norm() < 1e-10);
}

#[test]
fn green_rejects_on_spectrum_omega() {
    let p = ModelParams::with_rungs(4.0, 2.0, 20).unwrap();
    let e = gt_core::spectral::obc_spectrum(&p).unwrap()[5];
    assert!(green_element(&p, e, 0, 1, 20, GreenMethod::Resolvent).is_err());
}
