use hopmp::auxiliary::{BetaRange, ExtendedCurve};
use hopmp::builtin::{build, optimal_reference, BuiltinId, BuiltinParams, ThirdOrderRhs};
use hopmp::control::{ControlCurve, ControlFn};
use hopmp::homotopy::{
    build_surface, conservation_residual, homotopy_lhs, homotopy_rhs_with, minimal_labour_w, ControlHomotopy,
    VariationSurface,
};
use hopmp::problem::DefiningTriple;
use hopmp::scalar::Scalar;

struct Wave {
    amp: f64,
    freq: f64,
    bias: f64,
}

impl ControlFn for Wave {
    fn eval<S: Scalar>(&self, t: S, out: &mut [S]) {
        out[0] = (t * self.freq).sin() * self.amp + self.bias;
    }
}

fn wave(horizon: f64, amp: f64, freq: f64, bias: f64) -> ControlCurve {
    ControlCurve::analytic(horizon, 1, Wave { amp, freq, bias })
}

fn probe_surface(triple: &DefiningTriple, y0: Vec<f64>, y1: Vec<f64>, s_intervals: usize) -> VariationSurface {
    let t = triple.horizon;
    let (a, b) = (wave(t, 0.5, 1.3, 0.1), wave(t, 0.3, 2.9, -0.4));
    let hom = ControlHomotopy::new(
        t,
        s_intervals,
        move |s| ControlCurve::blend(&a, &b, s),
        move |s, _| Ok(y0.iter().zip(&y1).map(|(p, q)| p * (1.0 - s) + q * s).collect()),
    )
    .unwrap();
    build_surface(triple, &hom, BetaRange::Full).unwrap()
}

fn third_order_sin() -> DefiningTriple {
    let params = BuiltinParams {
        horizon: 1.0,
        ..BuiltinParams::default()
    };
    build(&BuiltinId::ThirdOrder(ThirdOrderRhs::SinX), &params).unwrap()
}

#[test]
fn homotopy_identity_holds_on_probe_homotopies() {
    let p = BuiltinParams::default();
    let cases: Vec<(DefiningTriple, Vec<f64>, Vec<f64>)> = vec![
        (
            build(&BuiltinId::PendulumR2, &p).unwrap(),
            vec![0.0, 0.3, 0.5, -0.2],
            vec![0.0, -0.1, -0.4, 0.6],
        ),
        (
            build(&BuiltinId::PendulumClassical, &p).unwrap(),
            vec![0.0, 0.2, 1.0, 0.5],
            vec![0.0, -0.7, 0.1, -0.3],
        ),
        (build(&BuiltinId::PendulumDirect, &p).unwrap(), vec![0.0, 0.8], vec![0.0, -0.5]),
        (
            third_order_sin(),
            vec![0.0, 0.2, 0.0, -0.3, 0.0, 0.4],
            vec![0.0, -0.5, 0.0, 0.1, 0.0, 0.9],
        ),
    ];
    for (triple, y0, y1) in cases {
        let mut gaps = Vec::new();
        let mut lhs = 0.0;
        for (nt, ns) in [(100, 8), (200, 16)] {
            let surface = probe_surface(&triple, y0.clone(), y1.clone(), ns);
            lhs = homotopy_lhs(&surface);
            gaps.push((lhs - homotopy_rhs_with(&surface, nt).unwrap()).abs());
        }
        assert!(gaps[1] <= 1e-3 * (lhs.abs() + 1.0), "{}: gaps {gaps:?}", triple.name);
        assert!(gaps[1] <= gaps[0] || gaps[1] <= 1e-9, "{}: refinement must not grow the gap {gaps:?}", triple.name);
    }
}

#[test]
fn conservation_identity_holds_per_slice() {
    let triple = third_order_sin();
    let surface = probe_surface(&triple, vec![0.0, 0.2, 0.0, -0.3, 0.0, 0.4], vec![0.0, -0.5, 0.0, 0.1, 0.0, 0.9], 16);
    let grid = surface.integrand_grid(400).unwrap();
    for j in [0, 5, 8, 16] {
        let r = conservation_residual(&surface, &grid, j).unwrap();
        assert!(r.abs() <= 1e-6, "slice {j}: residual {r:e}");
    }
}

#[test]
fn vertical_pairing_vanishes_at_the_initial_time() {
    let triple = build(&BuiltinId::PendulumR2, &BuiltinParams::default()).unwrap();
    let surface = probe_surface(&triple, vec![0.0, 0.3, 0.5, -0.2], vec![0.0, -0.1, -0.4, 0.6], 8);
    for j in 0..surface.s_nodes().len() {
        assert!(surface.vertical_pairing(0.0, j).unwrap().abs() <= 1e-8);
    }
}

#[test]
fn jacobi_fields_converge_at_second_order_in_s() {
    let triple = third_order_sin();
    let (y0, y1) = (vec![0.0, 0.2, 0.0, -0.3, 0.0, 0.4], vec![0.0, -0.5, 0.0, 0.1, 0.0, 0.9]);
    let order = triple.working_order();
    let t = 0.7;
    let mid: Vec<Vec<f64>> = [4, 8, 16]
        .iter()
        .map(|&ns| {
            let surface = probe_surface(&triple, y0.clone(), y1.clone(), ns);
            surface.jacobi(t, order).unwrap().q[ns / 2].clone()
        })
        .collect();
    let dist = |a: &[f64], b: &[f64]| a.iter().zip(b).fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()));
    let (d1, d2) = (dist(&mid[0], &mid[1]), dist(&mid[1], &mid[2]));
    assert!(d1 > 0.0);
    assert!(d2 <= d1 / 3.0 || d2 <= 1e-9, "Δs → Δs/2 differences {d1:e}, {d2:e}");
}

#[test]
fn mu_solves_the_last_euler_lagrange_equation() {
    let triple = third_order_sin();
    let traj = triple
        .trajectory(&wave(1.0, 0.5, 1.3, 0.1), &[0.0, 0.2, 0.0, -0.3, 0.0, 0.4])
        .unwrap();
    let ext = ExtendedCurve::new(&triple, &traj).unwrap();
    let h = 1e-3;
    for k in 1..10 {
        let t = k as f64 / 10.0;
        let dmu = (ext.mu(t + h).unwrap() - ext.mu(t - h).unwrap()) / (2.0 * h);
        let lt = ext.ltilde(t).unwrap();
        assert!((dmu + lt).abs() <= 1e-6 * (1.0 + lt.abs()), "t = {t}: μ′ = {dmu}, L̃ = {lt}");
    }
}

#[test]
fn minimal_labour_at_full_strength_is_the_cost_drop() {
    let p = BuiltinParams::default();
    let triple = build(&BuiltinId::PendulumR2, &p).unwrap();
    let opt = optimal_reference(&BuiltinId::PendulumR2, &p).unwrap();
    let hom = ControlHomotopy::blend(
        &ControlCurve::constant(p.horizon, vec![0.0]),
        &opt.control,
        opt.initial.clone(),
        16,
    )
    .unwrap();
    let surface = build_surface(&triple, &hom, BetaRange::Full).unwrap();
    let costs = surface.costs();
    let w = minimal_labour_w(&surface, 1.0).unwrap();
    let drop = costs[0] - costs[costs.len() - 1];
    assert!((w - drop).abs() <= 1e-6 * (1.0 + drop.abs()), "W(1) = {w}, C₀ − C₁ = {drop}");
}
