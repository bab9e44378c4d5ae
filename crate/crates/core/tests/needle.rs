use std::f64::consts::FRAC_PI_2;

use hopmp::builtin::{build, optimal_reference, pendulum_classical_problem, BuiltinId, BuiltinParams};
use hopmp::classical::{classical_pmp_check, mth_order_bang_bang};
use hopmp::control::ControlCurve;
use hopmp::dynamics::{Tolerance, Trajectory};
use hopmp::needle::{
    corrective_term, default_eps_sequence, delta_mu_pair, enforce_sigma, gpmp_verdict, pmp_scan, NeedleSpec,
    SigmaPolicy,
};
use hopmp::problem::DefiningTriple;
use proptest::prelude::*;

fn r2_tight() -> DefiningTriple {
    build(&BuiltinId::PendulumR2, &BuiltinParams::default())
        .unwrap()
        .with_tolerance(Tolerance::tight())
}

fn gamma(triple: &DefiningTriple, level: f64, y0: &[f64]) -> Trajectory {
    triple
        .trajectory(&ControlCurve::constant(triple.horizon, vec![level]), y0)
        .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn closed_form_and_direct_delta_mu_agree(
        tau in 0.3..1.45f64,
        omega in -1.0..1.0f64,
        level in -1.0..1.0f64,
        p0 in -1.0..1.0f64,
        eps in 0.02..0.1f64,
    ) {
        prop_assume!((omega - level).abs() > 0.05);
        let triple = r2_tight();
        let g0 = gamma(&triple, level, &[0.0, p0, 0.5, 0.3]);
        let spec = NeedleSpec::new(tau, vec![omega], 0.1, SigmaPolicy::Frozen);
        let pair = delta_mu_pair(&triple, &g0, &spec, eps).unwrap();
        let size = pair.closed_form.abs().max(pair.direct.abs());
        prop_assert!((pair.closed_form - pair.direct).abs() <= 1e-4 * size + 1e-10, "{pair:?}");
    }
}

#[test]
fn lemma_limits_shrink_monotonically() {
    let triple = r2_tight();
    let g0 = gamma(&triple, 0.3, &[0.0, 0.4, 0.2, -0.1]);
    for (tau, omega) in [(0.5, -1.0), (1.2, 1.0)] {
        let spec = NeedleSpec::new(tau, vec![omega], 0.1, SigmaPolicy::Frozen);
        let c = corrective_term(&triple, &g0, &spec, &default_eps_sequence(0.1, 6)).unwrap();
        assert!(c.lemma_limits.windows(2).all(|w| w[1] < w[0]), "{:?}", c.lemma_limits);
    }
}

#[test]
fn enforcing_sigma_gives_goodn_and_vanishing_corrective() {
    let p = BuiltinParams::default();
    let triple = r2_tight();
    let opt = optimal_reference(&BuiltinId::PendulumR2, &p).unwrap();
    let g0 = triple.trajectory(&opt.control, &opt.initial).unwrap();
    let spec = NeedleSpec::new(0.8, vec![-0.5], 0.1, SigmaPolicy::TerminalEnforcing);
    let eps = default_eps_sequence(0.1, 5);
    let c = corrective_term(&triple, &g0, &spec, &eps).unwrap();
    let scale = 1.0 + opt.cost.abs();
    assert!(c.goodn.iter().all(|g| g.residual.abs() <= 1e-6 * scale), "{:?}", c.goodn);
    assert!(c.goodn_all());
    for (e, est) in eps.iter().zip(&c.estimates) {
        assert!(est.abs() <= *e, "estimate {est:e} not O(ε) at ε = {e}");
    }
    assert_eq!(c.value, 0.0);
}

#[test]
fn frozen_sigma_with_mismatched_momenta_leaves_a_signed_residual() {
    let triple = r2_tight();
    let g0 = gamma(&triple, 1.0, &[0.0, 0.3, 1.0, -0.2]);
    let spec = NeedleSpec::new(0.7, vec![-1.0], 0.1, SigmaPolicy::Frozen);
    let c = corrective_term(&triple, &g0, &spec, &default_eps_sequence(0.1, 5)).unwrap();
    assert!(!c.goodn_all());
    assert!(c.value > 0.0 && c.value.is_finite());
}

#[test]
fn higher_order_verdicts_match_the_classical_check() {
    let p = BuiltinParams::default();
    let triple = build(&BuiltinId::PendulumClassical, &p).unwrap();
    let cp = pendulum_classical_problem(&p).unwrap();
    let taus: Vec<f64> = (0..8).map(|k| 0.25 + 0.17 * k as f64).collect();
    let omegas: Vec<Vec<f64>> = (0..5).map(|k| vec![-1.0 + 0.5 * k as f64]).collect();
    let eps = default_eps_sequence(0.1, 5);
    for level in [1.0, -1.0, 0.0] {
        let u = ControlCurve::constant(p.horizon, vec![level]);
        let y0 = enforce_sigma(&triple, &u, &[0.0, p.v_max, 0.0, 0.0]).unwrap();
        let g0 = triple.trajectory(&u, &y0).unwrap();
        let classical = classical_pmp_check(&cp, &u, &y0[..2], &taus, &omegas).unwrap();
        for &tau in &taus {
            for w in &omegas {
                let spec = NeedleSpec::new(tau, w.clone(), 0.1, SigmaPolicy::TerminalEnforcing);
                let v = gpmp_verdict(&triple, &g0, &spec, &eps).unwrap();
                let flagged = classical.violations.iter().any(|x| x.tau == tau && x.omega == *w);
                assert_eq!(!v.satisfied, flagged, "level {level}, τ {tau}, ω {w:?}: margin {}", v.margin);
            }
        }
    }
}

#[test]
fn optimal_references_pass_both_checks() {
    let p = BuiltinParams::default();
    let taus: Vec<f64> = (0..6).map(|k| 0.2 + 0.25 * k as f64).collect();
    let omegas: Vec<Vec<f64>> = (0..5).map(|k| vec![-1.0 + 0.5 * k as f64]).collect();
    let eps = default_eps_sequence(0.1, 5);
    for id in [BuiltinId::PendulumClassical, BuiltinId::PendulumR2] {
        let triple = build(&id, &p).unwrap();
        let opt = optimal_reference(&id, &p).unwrap();
        let g0 = triple.trajectory(&opt.control, &opt.initial).unwrap();
        let scan = pmp_scan(&triple, &g0, &taus, &omegas, &eps, SigmaPolicy::TerminalEnforcing).unwrap();
        assert!(scan.violations.is_empty(), "{id}: {:?}", scan.violations);
    }
    let cp = pendulum_classical_problem(&p).unwrap();
    let u = ControlCurve::constant(FRAC_PI_2, vec![1.0]);
    let check = classical_pmp_check(&cp, &u, &[0.0, p.v_max], &taus, &omegas).unwrap();
    assert!(check.violations.is_empty());
}

#[test]
fn first_order_bang_bang_never_switches() {
    let bb = mth_order_bang_bang(&[0.0, 1.0], 2.0, Tolerance::tight()).unwrap();
    assert!(bb.switches.is_empty());
    assert_eq!(bb.control.value(1.3), vec![1.0]);
}
