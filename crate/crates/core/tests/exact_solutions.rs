use rsl_core::exact_solutions::{
    cylinder_solutions, cylinder_solutions_with, flat_gaussian, gradient_inequality_check, schouten_shrinker_local, ExactError,
    SchoutenLocal,
};
use rsl_core::warped_geometry::{curvature, hessian_laplacian, identity_checks, level_set_geometry, soliton_residual};
use rsl_core::Profile;

fn canonical_profiles() -> Vec<(String, Profile)> {
    let mut out = Vec::new();
    for &(n, rho, lambda) in &[
        (3u32, 0.25, 1.0),
        (3, 0.1, -1.0),
        (3, 1.0, 1.0),
        (4, 0.5, -2.0),
        (5, -0.3, 0.7),
        (3, 0.5, 0.0),
        (4, 1.0 / 3.0, 0.0),
        (3, 0.2, 0.0),
    ] {
        for (k, cyl) in cylinder_solutions::<f64>(n, rho, lambda).unwrap().into_iter().enumerate() {
            let prof = cyl.profile(n, rho, lambda, 0.3, -0.2, 6.0, 61).unwrap();
            out.push((format!("cylinder n={n} rho={rho} lambda={lambda} #{k}"), prof));
        }
    }
    for &(n, rho, lambda, a0) in &[(3u32, 0.25, 1.0, 0.0), (4, -1.0, -1.0, -0.5), (3, 0.7, 0.0, 0.0), (5, 0.1, 2.0, 1.0)] {
        out.push((format!("flat n={n} rho={rho} lambda={lambda}"), flat_gaussian::<f64>(n, rho, lambda, a0, 5.0, 51).unwrap()));
    }
    out.push(("schouten a=0".into(), schouten_shrinker_local(&SchoutenLocal::<f64>::new(0.0, 1.0, 0.5), 4.0, 41).unwrap()));
    let mut s = SchoutenLocal::<f64>::new(0.0, 2.0, 0.125);
    s.c = 0.3;
    s.d = 1.0;
    out.push(("schouten a=0 shifted".into(), schouten_shrinker_local(&s, 4.0, 41).unwrap()));
    out.push(("schouten a=1".into(), schouten_shrinker_local(&SchoutenLocal::<f64>::new(1.0, 1.0, 2.0), 4.0, 41).unwrap()));
    out
}

#[test]
fn every_closed_form_profile_has_machine_level_residuals() {
    let profs = canonical_profiles();
    assert!(profs.len() >= 8);
    for (name, p) in &profs {
        p.validate().unwrap();
        let rep = soliton_residual(p);
        assert!(rep.sup_rel < 1e-12, "{name}: {}", rep.sup_rel);
        let abs = rep.res1.iter().chain(&rep.res2).fold(0.0f64, |a, b| a.max(b.abs()));
        assert!(abs < 1e-12, "{name}: {abs}");
    }
}

#[test]
fn identities_hold_on_closed_forms() {
    for (name, p) in canonical_profiles() {
        let rep = identity_checks(&p).unwrap();
        assert!(rep.max_deviation() < 1e-10, "{name}: {rep:?}");
        if let Some(s) = rep.schouten_ric_grad_f_sup {
            assert!(s < 1e-12, "{name}");
        }
    }
}

#[test]
fn cylinder_enumeration_examples() {
    let c = cylinder_solutions::<f64>(3, 0.25, 1.0).unwrap();
    assert_eq!(c.len(), 1);
    assert_eq!(c[0].kappa, 1);
    assert!((c[0].omega0_sq - 0.5).abs() < 1e-15);
    assert!((c[0].f_coefficient - 1.0).abs() < 1e-15);

    let c = cylinder_solutions::<f64>(3, 0.5, 0.0).unwrap();
    assert_eq!(c.iter().map(|s| s.kappa).collect::<Vec<_>>(), vec![1, 0, -1]);
    let c = cylinder_solutions_with::<f64>(3, 0.5, 0.0, 2.0).unwrap();
    for s in &c {
        assert!(s.omega0_free);
        assert!((s.f_coefficient - s.kappa as f64 / 8.0).abs() < 1e-15);
    }
    assert!(cylinder_solutions::<f64>(3, 0.5, 1.0).unwrap().is_empty());

    let c = cylinder_solutions::<f64>(3, 1.0, 1.0).unwrap();
    assert_eq!(c.len(), 1);
    assert_eq!((c[0].kappa, c[0].geometry), (-1, "hyperbolic_cylinder"));
    assert!((c[0].omega0_sq - 1.0).abs() < 1e-15);

    let c = cylinder_solutions::<f64>(3, 0.1, -1.0).unwrap();
    assert_eq!(c[0].kappa, -1);
    assert!((c[0].omega0_sq - 0.8).abs() < 1e-15);

    let c = cylinder_solutions::<f64>(3, 0.1, 0.0).unwrap();
    assert_eq!(c.len(), 1);
    assert!(c[0].trivial && c[0].kappa == 0);

    let c = cylinder_solutions::<f64>(4, 1.0, -1.0).unwrap();
    assert_eq!(c[0].kappa, 1);
    assert!((c[0].omega0_sq - 4.0).abs() < 1e-15);
}

#[test]
fn cylinder_laplacian_matches_trace_identity() {
    for &(n, rho, lambda) in &[(3u32, 0.25, 1.0), (4, 0.1, -1.0), (5, 2.0, 1.0), (3, 0.5, 0.0)] {
        for cyl in cylinder_solutions::<f64>(n, rho, lambda).unwrap() {
            let m = (n - 1) as f64;
            let scal = m * (m - 1.0) * cyl.kappa as f64 / cyl.omega0_sq;
            let lap = (n as f64 * rho - 1.0) * scal + n as f64 * lambda;
            assert!((lap - 2.0 * cyl.f_coefficient).abs() < 1e-13 * (1.0 + lap.abs()));
            let prof = cyl.profile(n, rho, lambda, 0.0, 0.0, 3.0, 31).unwrap();
            for h in hessian_laplacian(&prof).unwrap() {
                assert_eq!(h.laplacian, h.f_pp);
            }
        }
    }
}

#[test]
fn homothety_maps_solutions_to_solutions() {
    for (name, p) in canonical_profiles() {
        let q = p.scaled(2.0);
        assert_eq!(q.params.lambda, p.params.lambda / 4.0);
        assert!(soliton_residual(&q).sup_rel < 1e-12, "{name}");
    }
}

#[test]
fn perturbation_is_detected() {
    let cyl = cylinder_solutions::<f64>(3, 0.25, 1.0).unwrap()[0];
    let mut p = cyl.profile(3, 0.25, 1.0, 0.0, 0.0, 6.0, 121).unwrap();
    for i in 0..p.len() {
        let r = p.r[i];
        p.omega[i] += 1e-3 * r.sin();
        p.omega_p[i] += 1e-3 * r.cos();
        p.omega_pp[i] -= 1e-3 * r.sin();
    }
    assert!(soliton_residual(&p).sup_rel > 1e-4);
}

#[test]
fn flat_gaussian_cases() {
    let p = flat_gaussian::<f64>(3, 0.2, 0.0, 0.0, 2.0, 21).unwrap();
    assert!(p.f.iter().all(|v| *v == 0.0));
    let p = flat_gaussian::<f64>(3, 0.25, 1.0, 0.0, 2.0, 21).unwrap();
    let rep = identity_checks(&p).unwrap();
    assert!(rep.equ1_sup < 1e-14);
    for h in hessian_laplacian(&p).unwrap() {
        assert!((h.laplacian - 3.0).abs() < 1e-14);
    }
    assert!(curvature(&p).unwrap().samples.iter().all(|s| s.scalar == 0.0));
    assert!(flat_gaussian::<f64>(3, 0.2, 0.0, 1.0, 2.0, 21).is_err());
    assert!(flat_gaussian::<f64>(3, 0.2, 1.0, -1.0, 2.0, 21).is_err());
}

#[test]
fn schouten_local_solutions() {
    let s = SchoutenLocal::<f64>::new(0.0, 1.0, 0.5);
    let p = schouten_shrinker_local(&s, 3.0, 31).unwrap();
    let ls = level_set_geometry(&p).unwrap();
    for x in &ls.samples {
        assert!((x.r_sigma_direct - 2.0).abs() < 1e-15);
    }
    // Ric(∇f, ∂r) = Ric_rr f' vanishes on the cylinder.
    for c in curvature(&p).unwrap().samples {
        assert_eq!(c.ric_rr * p.f_p[c.index], 0.0);
    }
    let p = schouten_shrinker_local(&SchoutenLocal::<f64>::new(1.0, 1.0, 0.5), 3.0, 31).unwrap();
    let ls = level_set_geometry(&p).unwrap();
    for x in &ls.samples {
        let expected = 2.0 / (x.r + 1.0).powi(2);
        assert!((x.r_sigma_direct - expected).abs() < 1e-15);
        assert!((x.r_sigma_gauss - expected).abs() < 1e-14);
    }
    assert!(matches!(schouten_shrinker_local(&SchoutenLocal::<f64>::new(-1.0, 1.0, 0.5), 3.0, 31), Err(ExactError::InvalidParameters(_))));
    assert!(matches!(schouten_shrinker_local(&SchoutenLocal::<f64>::new(0.0, 0.0, 0.5), 3.0, 31), Err(ExactError::InvalidParameters(_))));
    assert!(matches!(schouten_shrinker_local(&SchoutenLocal::<f64>::new(0.0, 1.0, 0.3), 3.0, 31), Err(ExactError::InvalidParameters(_))));
    assert!(matches!(schouten_shrinker_local(&SchoutenLocal::<f64>::new(2.0, 1.0, 0.5), 3.0, 31), Err(ExactError::InvalidParameters(_))));
}

#[test]
fn gradient_inequality_on_schouten_shrinkers() {
    let lam = 1.0;
    // Flat ℝ³ shrinker f = λr²/2 + a0 r: lower bound is an identity.
    let flat = flat_gaussian::<f64>(3, 0.25, lam, 0.4, 5.0, 101).unwrap();
    let rep = gradient_inequality_check(&flat, None).unwrap();
    assert!(rep.lower_holds && rep.upper_holds && rep.sufficient_holds);
    assert!(rep.lower_margin.abs() < 1e-12);

    // ℝ × S² with a = 2λ + max R = 6λ: both strict away from r = 0.
    let cyl = schouten_shrinker_local(&SchoutenLocal::<f64>::new(0.0, (0.5f64 / lam).sqrt(), lam), 5.0, 101).unwrap();
    let rep = gradient_inequality_check(&cyl, Some(6.0 * lam)).unwrap();
    assert!(rep.lower_holds && rep.upper_holds && rep.sufficient_holds);
    let interior = cyl.slice(1..cyl.len());
    let fp0 = cyl.f_p[0].powi(2);
    for i in 0..interior.len() {
        let g = interior.f_p[i].powi(2);
        assert!(g > 2.0 * lam * interior.f[i] + fp0);
        assert!(g < 6.0 * lam * interior.f[i] + fp0);
    }
    let rep = gradient_inequality_check(&cyl, None).unwrap();
    assert!(rep.lower_holds && rep.upper_holds && rep.sufficient_holds);

    let steady = flat_gaussian::<f64>(3, 0.25, 0.0, 0.0, 5.0, 11).unwrap();
    assert!(matches!(gradient_inequality_check(&steady, None), Err(ExactError::NotShrinking(_))));
    let mut s = SchoutenLocal::<f64>::new(0.0, (0.5f64 / lam).sqrt(), lam);
    s.d = 1.0;
    let shifted = schouten_shrinker_local(&s, 5.0, 11).unwrap();
    assert!(matches!(gradient_inequality_check(&shifted, None), Err(ExactError::GaugeViolation(_))));
}
