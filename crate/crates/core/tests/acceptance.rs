//! Acceptance criteria: one `PASS`/`FAIL` line per criterion, tolerances
//! pinned below. Run with `cargo test -p hopmp --test acceptance -- --nocapture`.

use std::f64::consts::{FRAC_PI_2, PI};
use std::time::Instant;

use hopmp::auxiliary::{boundary_matrix, lift_integral, solve_h, BetaRange, ExtendedCurve};
use hopmp::builtin::{build, optimal_reference, pendulum_classical_problem, BuiltinId, BuiltinParams, ThirdOrderRhs};
use hopmp::classical::{adjoint_integrate, hamiltonian, phi_surjectivity_probe, ClassicalDynamics, ClassicalProblem, TerminalCost};
use hopmp::control::{ControlCurve, ControlFn, ControlSet};
use hopmp::dynamics::{lipschitz_probe, Tolerance};
use hopmp::homotopy::{build_surface, homotopy_lhs, homotopy_rhs_with, select_beta_range, ControlHomotopy};
use hopmp::needle::{
    corrective_term, default_eps_sequence, delta_mu_pair, enforce_sigma, gpmp_verdict, pmp_scan,
    transversality_synthesize, NeedleSpec, SigmaPolicy,
};
use hopmp::problem::{optimize_range_slot, DefiningTriple, InitSlot};
use hopmp::scalar::Scalar;
use hopmp::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const ADJOINT_TOL: f64 = 1e-8;
const SCAN_MARGIN_TOL: f64 = 1e-6;
const COST_TOL: f64 = 1e-8;
const HOMOTOPY_REL_TOL: f64 = 1e-3;
const H_BOUNDARY_TOL: f64 = 1e-9;
const H_ODE_TOL: f64 = 1e-10;
const LIFT_TOL: f64 = 1e-6;
const VERTICAL_TOL: f64 = 1e-8;
const CORRECTIVE_FINAL_TOL: f64 = 1e-3;
/// Estimates below this magnitude are integrator noise (the corrective term
/// vanishes identically under terminal-enforcing initial data).
const CORRECTIVE_NOISE_FLOOR: f64 = 1e-9;
const TWO_METHOD_REL_TOL: f64 = 1e-4;
const PHI_TOL: f64 = 1e-9;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Result<Outcome> {
    Ok(Outcome { passed, detail })
}

fn params() -> BuiltinParams {
    BuiltinParams::default()
}

fn tight(id: &BuiltinId, p: &BuiltinParams) -> Result<DefiningTriple> {
    Ok(build(id, p)?.with_tolerance(Tolerance::tight()))
}

fn c1_pendulum_adjoint() -> Result<Outcome> {
    let start = Instant::now();
    let p = params();
    let t_end = p.horizon;
    let cp = pendulum_classical_problem(&p)?;
    let triple = tight(&BuiltinId::PendulumClassical, &p)?;
    let opt = optimal_reference(&BuiltinId::PendulumClassical, &p)?;
    let traj = triple.trajectory(&opt.control, &opt.initial)?;
    let adj = adjoint_integrate(&cp, &traj, &opt.control, &[1.0, 0.0], Tolerance::tight())?;
    let mut worst: f64 = 0.0;
    for k in 0..=200 {
        let t = t_end * k as f64 / 200.0;
        let y = adj.state(t)?;
        worst = worst.max((y[0] - (t_end - t).cos()).abs()).max((y[1] - (t_end - t).sin()).abs());
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        worst <= ADJOINT_TOL && secs < 1.0,
        format!("max |p − (cos, sin)(T−t)| = {worst:.2e} (tol {ADJOINT_TOL:e}), {secs:.3}s"),
    )
}

fn c2_higher_order_adjoint() -> Result<Outcome> {
    let start = Instant::now();
    let p = params();
    let t_end = p.horizon;
    let triple = tight(&BuiltinId::PendulumR2, &p)?;
    let u = ControlCurve::constant(t_end, vec![1.0]);
    let probe = triple.trajectory(&u, &[0.0, 0.0, 1.0, 0.0])?;
    let jet = probe.jet(t_end, triple.working_order())?;
    let tc = transversality_synthesize(&triple, &jet, &[1.0])?;
    let cond_gap = tc.value(0, 0).abs().max((tc.value(0, 1) + 1.0).abs());
    let y0 = enforce_sigma(&triple, &u, &[0.0, 0.0, 1.0, 0.0])?;
    let traj = triple.trajectory(&u, &y0)?;
    let mut worst: f64 = 0.0;
    for k in 0..=200 {
        let t = t_end * k as f64 / 200.0;
        worst = worst.max((traj.state(t)?[1] - (t_end - t).sin()).abs());
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        cond_gap <= 1e-12 && worst <= ADJOINT_TOL && secs < 1.0,
        format!(
            "synthesized p(T) = {:.3e}, ṗ(T) = {:.12}; max |p − sin(T−t)| = {worst:.2e}; {secs:.3}s",
            tc.value(0, 0),
            tc.value(0, 1)
        ),
    )
}

fn c3_bang_bang_recovery() -> Result<Outcome> {
    let start = Instant::now();
    let p = params();
    let t_end = p.horizon;
    let triple = build(&BuiltinId::PendulumR2, &p)?;
    let taus: Vec<f64> = (0..32).map(|k| 0.2 + (t_end - 0.05 - 0.2) * k as f64 / 31.0).collect();
    let omegas: Vec<Vec<f64>> = (0..17).map(|k| vec![-1.0 + k as f64 / 8.0]).collect();
    let eps = default_eps_sequence(0.1, 7);
    let opt = optimal_reference(&BuiltinId::PendulumR2, &p)?;
    let g_opt = triple.trajectory(&opt.control, &opt.initial)?;
    let good = pmp_scan(&triple, &g_opt, &taus, &omegas, &eps, SigmaPolicy::TerminalEnforcing)?;
    let bad_u = ControlCurve::constant(t_end, vec![-1.0]);
    let y_bad = enforce_sigma(&triple, &bad_u, &[0.0, 0.0, p.v_max, 0.0])?;
    let g_bad = triple.trajectory(&bad_u, &y_bad)?;
    let bad = pmp_scan(&triple, &g_bad, &taus, &omegas, &eps, SigmaPolicy::TerminalEnforcing)?;
    let mut worst: f64 = 0.0;
    let mut missing = 0;
    for &tau in &taus {
        let best = bad
            .violations
            .iter()
            .filter(|v| v.tau == tau)
            .map(|v| v.margin)
            .fold(f64::NEG_INFINITY, f64::max);
        if best == f64::NEG_INFINITY {
            missing += 1;
        } else {
            worst = worst.max((best - 2.0 * (t_end - tau).sin()).abs());
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        good.violations.is_empty() && missing == 0 && worst <= SCAN_MARGIN_TOL && secs < 30.0,
        format!(
            "optimal: {} violations of {} pairs; u₀≡−1: {} violations, τ without violation {missing}, \
             max |margin − 2sin(T−τ)| = {worst:.2e}; {secs:.1}s",
            good.violations.len(),
            good.checked,
            bad.violations.len()
        ),
    )
}

fn c4_optimal_cost() -> Result<Outcome> {
    let p = params();
    let triple = tight(&BuiltinId::PendulumR2, &p)?;
    let u = ControlCurve::constant(p.horizon, vec![1.0]);
    let (v, cost) = optimize_range_slot(&triple, &u, &[0.0, 1.0, 0.0, 0.0], 2)?;
    let target = -(1.0 + p.v_max);
    outcome(
        (cost - target).abs() <= COST_TOL,
        format!("v* = {v:.12}, cost = {cost:.12} vs {target} (tol {COST_TOL:e})"),
    )
}

fn c5_homotopy_identity() -> Result<Outcome> {
    let start = Instant::now();
    let p = params();
    let triple = tight(&BuiltinId::PendulumR2, &p)?;
    let u0 = ControlCurve::constant(p.horizon, vec![0.0]);
    let u1 = ControlCurve::constant(p.horizon, vec![1.0]);
    let sigma = vec![0.0, p.horizon.sin(), 0.0, -p.horizon.cos()];
    let mut gaps = Vec::new();
    let mut lhs = 0.0;
    let mut detail = String::new();
    let mut full_selected = false;
    for (nt, ns) in [(100, 16), (200, 32), (400, 64)] {
        let hom = ControlHomotopy::blend(&u0, &u1, sigma.clone(), ns)?;
        let surface = build_surface(&triple, &hom, BetaRange::Full)?;
        lhs = homotopy_lhs(&surface);
        let rhs = homotopy_rhs_with(&surface, nt)?;
        gaps.push((lhs - rhs).abs());
        if ns == 64 {
            let sel = select_beta_range(&surface, nt)?;
            full_selected = sel.selected == BetaRange::Full;
            detail = format!(
                "β-range {} (gap full {:.2e}, from-one {:.2e})",
                sel.selected.label(),
                sel.gap(BetaRange::Full),
                sel.gap(BetaRange::FromOne)
            );
        }
    }
    let final_gap = gaps[2];
    let shrinking = gaps.windows(2).all(|w| w[1] <= w[0] / 8.0 || w[1] <= 1e-13);
    let secs = start.elapsed().as_secs_f64();
    outcome(
        (lhs + 1.0).abs() <= 1e-8
            && final_gap <= HOMOTOPY_REL_TOL * (lhs.abs() + 1.0)
            && shrinking
            && full_selected
            && secs < 60.0,
        format!(
            "lhs = {lhs:.12}; gaps 100×16/200×32/400×64 = {:.2e}/{:.2e}/{:.2e}; {detail}; {secs:.1}s",
            gaps[0], gaps[1], gaps[2]
        ),
    )
}

struct Wave {
    amp: f64,
    freq: f64,
    phase: f64,
    bias: f64,
}

impl ControlFn for Wave {
    fn eval<S: Scalar>(&self, t: S, out: &mut [S]) {
        out[0] = (t * self.freq + self.phase).sin() * self.amp + self.bias;
    }
}

fn c6_h_bvp_audit() -> Result<Outcome> {
    let p = params();
    let triple = build(&BuiltinId::PendulumR2, &p)?;
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (mut bnd, mut ode): (f64, f64) = (0.0, 0.0);
    for _ in 0..50 {
        let amp = rng.random_range(0.0..0.5);
        let u = ControlCurve::analytic(
            p.horizon,
            1,
            Wave {
                amp,
                freq: rng.random_range(0.5..4.0),
                phase: rng.random_range(0.0..2.0 * PI),
                bias: rng.random_range(-0.5..0.5),
            },
        );
        let y0 = triple.initial.sample(&mut rng);
        let traj = triple.trajectory(&u, &y0)?;
        let coeffs = solve_h(&traj, &triple)?;
        bnd = bnd.max(coeffs.boundary_residual());
        for _ in 0..5 {
            ode = ode.max(coeffs.ode_residual(rng.random_range(0.0..p.horizon)));
        }
    }
    let dets: Vec<f64> = [0.1, 1.0, FRAC_PI_2, 10.0]
        .iter()
        .map(|&t| boundary_matrix(t).determinant())
        .collect();
    let dets_ok = dets.iter().all(|d| d.is_finite() && d.abs() > 1e-12);
    outcome(
        bnd <= H_BOUNDARY_TOL && ode <= H_ODE_TOL && dets_ok,
        format!("max boundary residual {bnd:.2e}, max ODE residual {ode:.2e}, det 𝒜 = {dets:?}"),
    )
}

fn c7_lift_identity() -> Result<Outcome> {
    let p = params();
    let p3 = BuiltinParams {
        horizon: 1.0,
        v_max: 1.0,
        coeffs: vec![0.5, -0.3, 0.2, 1.0],
    };
    let problems = [
        (BuiltinId::PendulumClassical, p.clone()),
        (BuiltinId::PendulumR2, p.clone()),
        (BuiltinId::PendulumDirect, p.clone()),
        (BuiltinId::MthOrder, p3.clone()),
        (BuiltinId::ThirdOrder(ThirdOrderRhs::ControlOnly), p3.clone()),
        (BuiltinId::ThirdOrder(ThirdOrderRhs::Linear([0.3, -0.2, 0.1])), p3.clone()),
        (BuiltinId::ThirdOrder(ThirdOrderRhs::SinX), p3.clone()),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut lift, mut vertical): (f64, f64) = (0.0, 0.0);
    for (id, pp) in &problems {
        let triple = build(id, pp)?;
        let wave = |rng: &mut ChaCha8Rng| {
            ControlCurve::analytic(
                pp.horizon,
                1,
                Wave {
                    amp: 0.4,
                    freq: rng.random_range(0.5..3.0),
                    phase: rng.random_range(0.0..PI),
                    bias: rng.random_range(-0.4..0.4),
                },
            )
        };
        let u = wave(&mut rng);
        let y0 = triple.initial.sample(&mut rng);
        let traj = triple.trajectory(&u, &y0)?;
        let ext = ExtendedCurve::new(&triple, &traj)?;
        let cost = triple.terminal_cost(&traj)?;
        lift = lift.max((lift_integral(&triple, &ext, BetaRange::Full)? - cost).abs());

        let u1 = wave(&mut rng);
        let y1 = triple.initial.sample(&mut rng);
        let y_end = y1.clone();
        let y_start = y0.clone();
        let (a, b) = (u.clone(), u1.clone());
        let hom = ControlHomotopy::new(
            pp.horizon,
            4,
            move |s| ControlCurve::blend(&a, &b, s),
            move |s, _| Ok(y_start.iter().zip(&y_end).map(|(x, y)| x * (1.0 - s) + y * s).collect()),
        )?;
        let surface = build_surface(&triple, &hom, BetaRange::Full)?;
        for j in 0..surface.s_nodes().len() {
            vertical = vertical.max(surface.vertical_pairing(0.0, j)?.abs());
        }
    }
    outcome(
        lift <= LIFT_TOL && vertical <= VERTICAL_TOL,
        format!(
            "{} builtins: max |∫α^PC − C| = {lift:.2e} (tol {LIFT_TOL:e}), max |α^PC(Y)|_(t=0)| = {vertical:.2e} (tol {VERTICAL_TOL:e})",
            problems.len()
        ),
    )
}

fn c8_corrective_decay() -> Result<Outcome> {
    let p = params();
    let eps = default_eps_sequence(0.1, 7);
    let mut ok = true;
    let mut detail = Vec::new();
    for id in [BuiltinId::PendulumClassical, BuiltinId::PendulumR2] {
        let triple = tight(&id, &p)?;
        let opt = optimal_reference(&id, &p)?;
        let g0 = triple.trajectory(&opt.control, &opt.initial)?;
        for (tau, omega) in [(0.5, -1.0), (1.1, 0.0)] {
            let spec = NeedleSpec::new(tau, vec![omega], 0.1, SigmaPolicy::TerminalEnforcing);
            let c = corrective_term(&triple, &g0, &spec, &eps)?;
            let decreasing = c
                .estimates
                .windows(2)
                .all(|w| w[1].abs() <= w[0].abs() || w[1].abs() <= CORRECTIVE_NOISE_FLOOR);
            let last = c.estimates.last().unwrap().abs();
            let max = c.estimates.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
            ok &= decreasing && last <= CORRECTIVE_FINAL_TOL;
            detail.push(format!("{id} τ={tau}: max |est| {max:.1e}, final {last:.1e}"));
        }
    }
    outcome(ok, detail.join("; "))
}

fn c9_two_method_agreement() -> Result<Outcome> {
    let p = params();
    let t_end = p.horizon;
    let frozen = |tau: f64, omega: f64| NeedleSpec::new(tau, vec![omega], 0.1, SigmaPolicy::Frozen);
    let mut worst: f64 = 0.0;
    let mut count = 0;
    let mut min_size = f64::INFINITY;
    let probes: Vec<(BuiltinId, Vec<f64>, f64)> = vec![
        (BuiltinId::PendulumR2, vec![0.0, 0.3, 1.0, -0.2], 1.0),
        (BuiltinId::PendulumDirect, vec![0.0, 0.4], 0.5),
        (BuiltinId::PendulumClassical, vec![0.0, 1.0, 0.5, 0.2], 1.0),
    ];
    for (id, y0, level) in &probes {
        let triple = tight(id, &p)?;
        let g0 = triple.trajectory(&ControlCurve::constant(t_end, vec![*level]), y0)?;
        for (tau, omega) in [(0.4, -1.0), (0.9, 0.25), (1.3, -0.6)] {
            for e in [0.1, 0.025] {
                let pair = delta_mu_pair(&triple, &g0, &frozen(tau, omega), e)?;
                let size = pair.closed_form.abs().max(pair.direct.abs());
                min_size = min_size.min(size);
                worst = worst.max((pair.closed_form - pair.direct).abs() / size);
                count += 1;
            }
        }
    }
    outcome(
        worst <= TWO_METHOD_REL_TOL && min_size > 0.0,
        format!("{count} probe needles: max relative gap {worst:.2e} (tol {TWO_METHOD_REL_TOL:e}), min |Δμ′| {min_size:.2e}"),
    )
}

struct TripleIntegrator;

impl ClassicalDynamics for TripleIntegrator {
    fn f<S: Scalar>(&self, _t: S, x: &[S], u: &[S], out: &mut [S]) {
        out[0] = x[1];
        out[1] = x[2];
        out[2] = u[0];
    }
}

struct NegX;

impl TerminalCost for NegX {
    fn c<S: Scalar>(&self, x: &[S]) -> S {
        -x[0]
    }
}

fn c10_third_order_oracle() -> Result<Outcome> {
    let t_end = 1.0;
    let cp = ClassicalProblem::new(
        "x‴ = u",
        TripleIntegrator,
        NegX,
        vec![InitSlot::Fixed(0.0); 3],
        ControlSet::symmetric(1, 1.0),
        t_end,
    )?;
    let plus = ControlCurve::constant(t_end, vec![1.0]);
    let xt = cp.state_trajectory(&plus, &[0.0; 3], Tolerance::tight())?;
    let big_p = adjoint_integrate(&cp, &xt, &plus, &[1.0, 0.0, 0.0], Tolerance::tight())?;
    let mut p3_gap: f64 = 0.0;
    for k in 0..=50 {
        let t = t_end * k as f64 / 50.0;
        p3_gap = p3_gap.max((big_p.state(t)?[2] - 0.5 * (t_end - t).powi(2)).abs());
    }
    // brute force over ±1 controls on 8 equal pieces
    let mut best = (f64::NEG_INFINITY, 0u32);
    for mask in 0..256u32 {
        let values: Vec<Vec<f64>> = (0..8).map(|k| vec![if mask >> k & 1 == 1 { 1.0 } else { -1.0 }]).collect();
        let breaks: Vec<f64> = (1..8).map(|k| t_end * k as f64 / 8.0).collect();
        let u = ControlCurve::piecewise_constant(t_end, breaks, values)?;
        let x_t = cp.state_trajectory(&u, &[0.0; 3], Tolerance::tight())?.final_state()[0];
        if x_t > best.0 {
            best = (x_t, mask);
        }
    }
    let brute_ok = best.1 == 255 && (best.0 - t_end.powi(3) / 6.0).abs() <= 1e-10;

    let id = BuiltinId::ThirdOrder(ThirdOrderRhs::ControlOnly);
    let bp = BuiltinParams {
        horizon: t_end,
        ..params()
    };
    let triple = tight(&id, &bp)?;
    let y0 = enforce_sigma(&triple, &plus, &[0.0; 6])?;
    let g0 = triple.trajectory(&plus, &y0)?;
    let jet = g0.jet(t_end, triple.working_order())?;
    let tc = transversality_synthesize(&triple, &jet, &[1.0])?;
    let naive_pdd = -1.0; // p̈(T) = ∂C/∂x with C = −x
    let eps = default_eps_sequence(0.1, 4);
    let mut disagreements = 0;
    let taus: Vec<f64> = (0..16).map(|k| 0.15 + 0.8 * k as f64 / 15.0).collect();
    for &tau in &taus {
        let spec = NeedleSpec::new(tau, vec![-1.0], 0.1, SigmaPolicy::TerminalEnforcing);
        let v = gpmp_verdict(&triple, &g0, &spec, &eps)?;
        let argmax_p = if v.p_at_uo >= v.p_at_omega { 1.0 } else { -1.0 };
        let x = xt.state(tau)?;
        let pp = big_p.state(tau)?;
        let h = hamiltonian(&cp, tau, &x, &pp);
        let argmax_h = if h(&[1.0]) >= h(&[-1.0]) { 1.0 } else { -1.0 };
        if argmax_p != argmax_h || !v.satisfied {
            disagreements += 1;
        }
    }
    let synthesized = (tc.value(0, 0), tc.value(0, 1), tc.value(0, 2));
    let terminal_ok = synthesized.0.abs() <= 1e-10 && synthesized.1.abs() <= 1e-10 && (synthesized.2 - 1.0).abs() <= 1e-10;
    outcome(
        p3_gap <= 1e-10 && brute_ok && terminal_ok && disagreements == 0,
        format!(
            "max |P₃ − (T−t)²/2| = {p3_gap:.1e}; brute-force max x(T) = {:.12} (u≡+1: {}); synthesized (p, ṗ, p̈)(T) = \
             ({:.1e}, {:.1e}, {:.12}); argmax disagreements {disagreements}/{}; note: the naive choice p̈(T) = ∂C/∂x = {naive_pdd} \
             has the opposite sign and would select u = −1",
            best.0,
            best.1 == 255,
            synthesized.0,
            synthesized.1,
            synthesized.2,
            taus.len()
        ),
    )
}

fn c11_lipschitz() -> Result<Outcome> {
    let triple = build(&BuiltinId::PendulumR2, &params())?;
    let a = lipschitz_probe(&triple, 100, 11)?;
    let b = lipschitz_probe(&triple, 100, 11)?;
    let same = (a.pairs, a.skipped, a.max_ratio.to_bits(), a.mean_ratio.to_bits())
        == (b.pairs, b.skipped, b.max_ratio.to_bits(), b.mean_ratio.to_bits());
    outcome(
        a.max_ratio.is_finite() && a.pairs > 0 && same,
        format!(
            "{} pairs ({} skipped), max ratio {:.4}, mean {:.4}, deterministic {}",
            a.pairs,
            a.skipped,
            a.max_ratio,
            a.mean_ratio,
            same
        ),
    )
}

fn c12_phi_probe() -> Result<Outcome> {
    let u = ControlCurve::constant(FRAC_PI_2, vec![0.0]);
    let grid: Vec<f64> = (0..=10).map(|k| -1.0 + 0.2 * k as f64).collect();
    let rep = phi_surjectivity_probe(FRAC_PI_2, &u, &grid)?;
    let degenerate = matches!(
        phi_surjectivity_probe(PI, &ControlCurve::constant(PI, vec![0.0]), &grid),
        Err(Error::DegenerateHorizon { .. })
    );
    outcome(
        (rep.slope - 1.0).abs() <= PHI_TOL && rep.residual <= PHI_TOL && degenerate,
        format!(
            "slope {:.12}, affinity residual {:.2e}, T = π rejected {degenerate}",
            rep.slope, rep.residual
        ),
    )
}

#[test]
fn acceptance() {
    type Criterion = (&'static str, fn() -> Result<Outcome>);
    let criteria: [Criterion; 12] = [
        ("pendulum adjoint closed form", c1_pendulum_adjoint),
        ("higher-order adjoint from synthesized transversality", c2_higher_order_adjoint),
        ("bang-bang recovery by needle scan", c3_bang_bang_recovery),
        ("optimal pendulum cost", c4_optimal_cost),
        ("homotopy formula identity", c5_homotopy_identity),
        ("h-function boundary-value audit", c6_h_bvp_audit),
        ("Poincaré-Cartan lift identity", c7_lift_identity),
        ("corrective-term decay", c8_corrective_decay),
        ("two-method Δμ′ agreement", c9_two_method_agreement),
        ("third-order oracle cross-check", c10_third_order_oracle),
        ("Lipschitz probe", c11_lipschitz),
        ("terminal-map surjectivity probe", c12_phi_probe),
    ];
    let mut failed = Vec::new();
    for (k, (name, run)) in criteria.iter().enumerate() {
        let (passed, detail) = match run() {
            Ok(o) => (o.passed, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        println!("{} [{:>2}] {name}: {detail}", if passed { "PASS" } else { "FAIL" }, k + 1);
        if !passed {
            failed.push(k + 1);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
