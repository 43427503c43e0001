//! The twelve acceptance criteria, one PASS/FAIL line each (run with `--nocapture` to see them).
//!
//! Criterion 10 asks for nondegeneracy of the two scalar-tensor families at 95% of random
//! samples. With the coefficients as stated, family 5 has nd3 ≡ 0 and family 5-bis is
//! degenerate in dimension four, so that criterion is reported as FAIL. The test asserts that
//! exactly the criteria in `KNOWN_UNATTAINABLE` fail, so a regression elsewhere (or a change
//! that makes criterion 10 pass) is caught.

use rsl_core::asymptotics::{cigar_checks, profile_exponents, DEFAULT_TAIL_FRACTION};
use rsl_core::exact_solutions::{cylinder_solutions, flat_gaussian, gradient_inequality_check, schouten_shrinker_local, SchoutenLocal};
use rsl_core::phase_system::{nullcline_h, nullcline_k, scalar_field_f, scalar_field_g, vector_field, PhaseState, SolitonParams};
use rsl_core::potential_theory::{
    family_registry, nondegeneracy_check, probe_family, FamilyKind, Verdict, DEFAULT_PROBE_SAMPLES, DEFAULT_PROBE_SEED,
    GENERIC_FRACTION,
};
use rsl_core::shooting::{
    build_family, construct, geomspace, verify_nonexistence, ConstructConfig, FailureMode, FamilyConfig, ORDERING_NOISE_ABS,
    ORDERING_NOISE_REL,
};
use rsl_core::warped_geometry::{identity_checks, level_set_geometry, soliton_residual};
use rsl_core::Profile;
use std::process::Command;

const KNOWN_UNATTAINABLE: &[usize] = &[10];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn steady(n: u32, rho: f64) -> SolitonParams<f64> {
    SolitonParams::steady(n, rho).unwrap()
}

fn normalized(n: u32, rho: f64) -> Profile {
    construct(&steady(n, rho), &ConstructConfig { normalize: true, ..ConstructConfig::default() }).unwrap().profile
}

fn exact_profiles() -> Vec<(String, Profile)> {
    let mut out = Vec::new();
    for &(n, rho, lambda) in &[(3u32, 0.25, 1.0), (3, 0.1, -1.0), (3, 1.0, 1.0), (4, 0.5, -2.0), (5, -0.3, 0.7), (3, 0.5, 0.0)] {
        for (k, cyl) in cylinder_solutions::<f64>(n, rho, lambda).unwrap().into_iter().enumerate() {
            out.push((format!("cylinder({n},{rho},{lambda})#{k}"), cyl.profile(n, rho, lambda, 0.3, -0.2, 6.0, 61).unwrap()));
        }
    }
    for &(n, rho, lambda, a0) in &[(3u32, 0.25, 1.0, 0.0), (4, -1.0, -1.0, -0.5), (5, 0.1, 2.0, 1.0)] {
        out.push((format!("flat({n},{rho},{lambda})"), flat_gaussian::<f64>(n, rho, lambda, a0, 5.0, 51).unwrap()));
    }
    out.push(("schouten(a=0)".into(), schouten_shrinker_local(&SchoutenLocal::<f64>::new(0.0, 1.0, 0.5), 4.0, 41).unwrap()));
    out.push(("schouten(a=1)".into(), schouten_shrinker_local(&SchoutenLocal::<f64>::new(1.0, 1.0, 2.0), 4.0, 41).unwrap()));
    out
}

fn exact_oracle() -> Outcome {
    let profs = exact_profiles();
    let worst = profs
        .iter()
        .map(|(name, p)| {
            let rep = soliton_residual(p);
            let abs = rep.res1.iter().chain(&rep.res2).fold(0.0f64, |a, b| a.max(b.abs()));
            (name.clone(), rep.sup_rel.max(abs))
        })
        .fold((String::new(), 0.0f64), |a, b| if b.1 > a.1 { b } else { a });
    outcome(profs.len() >= 8 && worst.1 < 1e-12, format!("{} profiles, worst residual {:.3e} ({})", profs.len(), worst.1, worst.0))
}

fn equilibria() -> Outcome {
    let mut worst = 0.0f64;
    for n in [3u32, 4, 5] {
        for rho in [-1.0, 0.1, 0.6] {
            let p = SolitonParams::<f64>::new(n, rho, 0.0, 1).unwrap();
            for x in [1.0, -1.0] {
                let v = vector_field(&p, &PhaseState::new(x, 0.0, 0.0)).unwrap();
                worst = v.iter().fold(worst, |a, b| a.max(b.abs()));
            }
        }
    }
    outcome(worst < 1e-14, format!("max |field| at P, Q = {worst:.3e}"))
}

fn nullclines() -> Outcome {
    let grid = geomspace(1e-2, 1e2, 81);
    let mut worst = 0.0f64;
    for (n, rho) in [(3u32, 0.0), (3, -1.0), (4, 0.1), (5, -0.5)] {
        let p = steady(n, rho);
        for &y in &grid {
            worst = worst.max(scalar_field_f(&p, nullcline_h(&p, y).unwrap(), y).unwrap().abs());
        }
    }
    for (n, rho) in [(3u32, 0.5), (3, 1.0), (4, 1.0 / 3.0), (5, 2.0)] {
        let p = steady(n, rho);
        for &z in &grid {
            worst = worst.max(scalar_field_g(&p, nullcline_k(&p, z).unwrap(), z).unwrap().abs());
        }
    }
    outcome(worst < 1e-12, format!("max |F(h(y),y)|, |G(k(z),z)| = {worst:.3e}"))
}

fn exponents(prof: &Profile, want: [f64; 3]) -> Outcome {
    let rep = profile_exponents(prof, DEFAULT_TAIL_FRACTION).unwrap();
    let got = [rep.omega.fit.exponent, rep.f.fit.exponent, rep.volume.fit.exponent];
    let tol = [0.02, 0.05, 0.05];
    let pass = (0..3).all(|i| (got[i] - want[i]).abs() < tol[i]);
    outcome(pass, format!("omega {:.4}, f {:.4}, vol {:.4} (want {:?})", got[0], got[1], got[2], want))
}

fn cigar() -> Outcome {
    let prof = normalized(3, 0.5);
    let rep = cigar_checks(&prof, DEFAULT_TAIL_FRACTION).unwrap();
    let (f, v) = (rep.f.fit.exponent, rep.volume.fit.exponent);
    let pass = rep.omega_flat && (f - 2.0).abs() < 0.05 && (v - 1.0).abs() < 0.05;
    outcome(pass, format!("omega tail oscillation {:.3e}, f {f:.4}, vol {v:.4}", rep.omega_tail_oscillation))
}

fn nonexistence() -> Outcome {
    let mut modes = Vec::new();
    let rep = verify_nonexistence(&steady(3, 0.25), 1e-6, 100.0).unwrap();
    let mut pass = rep.mode == FailureMode::SchoutenConstraint && !rep.integrated;
    modes.push(format!("0.25:{:?}", rep.mode));
    for (rho, want) in [(0.26, FailureMode::XZeroCrossing), (0.3, FailureMode::XZeroCrossing), (0.4, FailureMode::XZeroCrossing)] {
        let rep = verify_nonexistence(&steady(3, rho), 1e-6, 200.0).unwrap();
        pass &= rep.mode == want;
        modes.push(format!("{rho}:{:?}", rep.mode));
    }
    let rep = verify_nonexistence(&steady(3, 1.0 / 3.0), 1e-3, 50.0).unwrap();
    pass &= rep.mode == FailureMode::YSign;
    modes.push(format!("1/3:{:?}", rep.mode));
    outcome(pass, modes.join(", "))
}

fn ordering() -> Outcome {
    let cfg = FamilyConfig { epsilons: vec![1e-2, 1e-3, 1e-4], ..FamilyConfig::default() };
    let mut pass = true;
    let mut parts = Vec::new();
    for rho in [0.0, -1.0, 0.5, 1.0] {
        let rep = build_family(&steady(3, rho), &cfg).unwrap().ordering(ORDERING_NOISE_REL, ORDERING_NOISE_ABS);
        pass &= rep.holds();
        parts.push(format!("rho={rho}: {} pairs, {} violations", rep.pairs_checked, rep.violations + rep.bound_violations));
    }
    outcome(pass, parts.join("; "))
}

fn identities(profiles: &[(String, &Profile)]) -> Outcome {
    let (mut id_worst, mut gauss_worst) = (0.0f64, 0.0f64);
    for (_, p) in profiles {
        id_worst = id_worst.max(identity_checks(p).unwrap().max_deviation());
        gauss_worst = gauss_worst.max(level_set_geometry(p).unwrap().gauss_sup);
    }
    outcome(
        id_worst < 1e-5 && gauss_worst < 1e-8,
        format!("{} solitons, identities {id_worst:.3e}, Gauss/Riccati {gauss_worst:.3e}", profiles.len()),
    )
}

fn classification() -> Outcome {
    let reg = family_registry::<f64>();
    let verdict = |i: usize| nondegeneracy_check(&reg[i], 3, 1.5).unwrap();
    let degenerate = [0, 2, 3].iter().all(|&i| verdict(i).verdict == Verdict::Degenerate);
    let rho = reg[1].params[0].1;
    let r = verdict(1);
    let triple = r.verdict == Verdict::Nondegenerate && [r.nd1, r.nd2, r.nd3] == [1.0, 1.0, -rho];
    let mut generic = true;
    let mut fractions = Vec::new();
    for kind in [FamilyKind::ScalarTensor, FamilyKind::BergmannWagonerNordtvedt] {
        let s = probe_family(kind, DEFAULT_PROBE_SAMPLES, DEFAULT_PROBE_SEED).unwrap();
        generic &= s.nondegenerate_fraction >= GENERIC_FRACTION;
        fractions.push(format!("({}) {:.3}", s.label, s.nondegenerate_fraction));
    }
    outcome(
        degenerate && triple && generic,
        format!(
            "(1),(3),(4) degenerate: {degenerate}; (2) triple (1,1,-rho): {triple}; nondegenerate fractions {}; \
             family 5 has nd3 = 0 identically and 5-bis degenerates at n = 4 with the stated coefficients",
            fractions.join(", ")
        ),
    )
}

fn gradient_inequality() -> Outcome {
    let lam = 1.0;
    let flat = gradient_inequality_check(&flat_gaussian::<f64>(3, 0.25, lam, 0.4, 5.0, 101).unwrap(), None).unwrap();
    let cyl_prof = schouten_shrinker_local(&SchoutenLocal::<f64>::new(0.0, (0.5f64 / lam).sqrt(), lam), 5.0, 101).unwrap();
    let cyl = gradient_inequality_check(&cyl_prof, None).unwrap();
    let holds = |r: &rsl_core::exact_solutions::GradientInequalityReport<f64>| r.lower_holds && r.upper_holds && r.sufficient_holds;
    let pass = holds(&flat) && holds(&cyl) && flat.lower_margin.abs() < 1e-12;
    outcome(pass, format!("flat lower margin {:.3e}, cylinder margins ({:.3e}, {:.3e})", flat.lower_margin, cyl.lower_margin, cyl.upper_margin))
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let bin = env!("CARGO_BIN_EXE_rsl");
    let runs: [&[&str]; 4] = [
        &["construct", "--n", "3", "--rho", "0", "--normalize", "--output"],
        &["classify", "families", "--output"],
        &["phase-portrait", "--n", "3", "--rho", "0", "--output"],
        &["exact", "schouten", "--a", "1", "--b", "1", "--lambda", "2", "--output"],
    ];
    let mut identical = 0;
    for (i, args) in runs.iter().enumerate() {
        let mut outputs = Vec::new();
        for rep in 0..2 {
            let path = dir.path().join(format!("{i}-{rep}.out"));
            let out = Command::new(bin).args(*args).arg(&path).output().unwrap();
            assert!(out.status.success(), "{args:?}");
            outputs.push(std::fs::read(&path).unwrap());
        }
        identical += usize::from(outputs[0] == outputs[1]);
    }
    outcome(identical == runs.len(), format!("{identical}/{} commands byte-identical across runs", runs.len()))
}

#[test]
fn acceptance_criteria() {
    let bryant = normalized(3, 0.0);
    let negative = normalized(3, -1.0);
    let cigar3 = normalized(3, 0.5);
    let extra = [normalized(4, 0.0), normalized(4, 1.0 / 3.0), normalized(3, 1.0)];
    let mut constructed = vec![("n=3 rho=0".to_string(), &bryant), ("n=3 rho=-1".into(), &negative), ("n=3 rho=1/2".into(), &cigar3)];
    constructed.extend(extra.iter().map(|p| (format!("n={} rho={}", p.params.n, p.params.rho), p)));

    let results = [
        ("exact-solution oracle", exact_oracle()),
        ("equilibrium contract", equilibria()),
        ("nullcline contract", nullclines()),
        ("Bryant-limit asymptotics", exponents(&bryant, [0.5, 1.0, 2.0])),
        ("negative-rho asymptotics", exponents(&negative, [0.375, 1.25, 1.75])),
        ("Einstein's cigar", cigar()),
        ("non-existence regime", nonexistence()),
        ("epsilon-family monotonicity", ordering()),
        ("identity suite", identities(&constructed)),
        ("nondegeneracy classification", classification()),
        ("gradient inequality", gradient_inequality()),
        ("determinism", determinism()),
    ];
    let mut failed = Vec::new();
    for (i, (name, o)) in results.iter().enumerate() {
        let k = i + 1;
        println!("{} criterion {k:>2} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        if !o.pass {
            failed.push(k);
        }
    }
    assert_eq!(failed, KNOWN_UNATTAINABLE, "failing criteria differ from the documented set");
}
