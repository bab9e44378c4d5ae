use hopmp::builtin::{build, BuiltinId, BuiltinParams};
use hopmp::control::{ControlCurve, ControlFn};
use hopmp::jetspace::{total_derivative, JetArgs, JetFn, JetPoint, ScalarJetField};
use hopmp::scalar::Scalar;
use proptest::prelude::*;

struct Coordinate {
    i: usize,
    beta: usize,
}

impl JetFn for Coordinate {
    fn eval<S: Scalar>(&self, _t: S, q: JetArgs<'_, S>, _u: &[S]) -> S {
        q.q(self.i, self.beta)
    }
}

/// `sin(q⁰)·q¹_(1) + t·(q⁰_(1))²`.
struct FieldF;

impl JetFn for FieldF {
    fn eval<S: Scalar>(&self, t: S, q: JetArgs<'_, S>, _u: &[S]) -> S {
        q.q(0, 0).sin() * q.q(1, 1) + t * q.q(0, 1) * q.q(0, 1)
    }
}

/// `exp(q¹)·u + q⁰_(2)`.
struct FieldG;

impl JetFn for FieldG {
    fn eval<S: Scalar>(&self, _t: S, q: JetArgs<'_, S>, u: &[S]) -> S {
        q.q(1, 0).exp() * u[0] + q.q(0, 2)
    }
}

fn jet_strategy(dim: usize, order: usize) -> impl Strategy<Value = (f64, Vec<f64>)> {
    (0.0..2.0f64, prop::collection::vec(-1.5..1.5f64, dim * (order + 1)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn total_derivative_of_a_coordinate_is_the_next_coordinate(
        (t, data) in jet_strategy(2, 4),
        i in 0usize..2,
        beta in 0usize..4,
        u in -1.0..1.0f64,
    ) {
        let jet = JetPoint::from_flat(t, 2, data).unwrap();
        let f = ScalarJetField::new("coordinate", 2, beta, Coordinate { i, beta });
        let d = total_derivative(&f, &jet, &[u]).unwrap();
        prop_assert_eq!(d, jet.get(i, beta + 1));
    }

    #[test]
    fn total_derivative_is_linear(
        (t, data) in jet_strategy(2, 4),
        a in -3.0..3.0f64,
        b in -3.0..3.0f64,
        u in -1.0..1.0f64,
    ) {
        let jet = JetPoint::from_flat(t, 2, data).unwrap();
        let f = ScalarJetField::new("f", 2, 1, FieldF);
        let g = ScalarJetField::new("g", 2, 2, FieldG);
        let combo = f.linear_combination(a, &g, b);
        let lhs = total_derivative(&combo, &jet, &[u]).unwrap();
        let df = total_derivative(&f, &jet, &[u]).unwrap();
        let dg = total_derivative(&g, &jet, &[u]).unwrap();
        let rhs = a * df + b * dg;
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs() + (a * df).abs() + (b * dg).abs()));
    }
}

struct Wave;

impl ControlFn for Wave {
    fn eval<S: Scalar>(&self, t: S, out: &mut [S]) {
        out[0] = (t * 1.7).sin() * 0.6 + 0.2;
    }
}

#[test]
fn total_derivative_matches_time_derivative_along_trajectories() {
    let p = BuiltinParams::default();
    let triple = build(&BuiltinId::PendulumR2, &p).unwrap();
    let u = ControlCurve::analytic(p.horizon, 1, Wave);
    let traj = triple.trajectory(&u, &[0.0, 0.4, 0.7, -0.3]).unwrap();
    let f = ScalarJetField::new("f", 2, 1, FieldF);
    let order = triple.working_order();
    let value = |t: f64| f.eval(&traj.jet(t, order).unwrap(), &traj.control_value(t));
    let mut errors = Vec::new();
    for h in [1e-2, 5e-3] {
        let mut worst: f64 = 0.0;
        for k in 1..10 {
            let t = p.horizon * k as f64 / 10.0;
            let fd = (value(t + h) - value(t - h)) / (2.0 * h);
            let exact = total_derivative(&f, &traj.jet(t, order).unwrap(), &traj.control_value(t)).unwrap();
            worst = worst.max((fd - exact).abs());
        }
        errors.push(worst);
    }
    assert!(errors[0] < 1e-3, "{errors:?}");
    // O(h²): halving the step quarters the error (up to integrator noise)
    assert!(errors[1] < errors[0] / 3.0 || errors[1] < 1e-8, "{errors:?}");
}
