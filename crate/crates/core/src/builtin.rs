//! Worked problems in each of their formulations: the controlled pendulum
//! `ẍ + x = u` (classical embedding, second-order Lagrangian with a
//! multiplier, direct Lagrangian), the scalar `m`-th order family
//! `Σ a_ℓ x^{(ℓ)} = u`, and third-order equations `x‴ = f(x, ẋ, ẍ) + u`.
//! Every problem minimizes `C = −x(T)` over `|u| ≤ 1`.

use std::fmt;
use std::str::FromStr;

use crate::classical::{embed_classical, ClassicalDynamics, ClassicalProblem, TerminalCost};
use crate::control::{ControlCurve, ControlSet};
use crate::dynamics::{reduce_to_first_order, HigherOrderRhs};
use crate::error::{Error, Result};
use crate::jetspace::{JetArgs, JetFn, ScalarJetField};
use crate::problem::{AdjointBlock, ControlledLagrangian, CostFunction, DefiningTriple, InitSlot, InitialData};
use crate::scalar::Scalar;

/// Right-hand side family of the third-order problems.
#[derive(Clone, Debug, PartialEq)]
pub enum ThirdOrderRhs {
    /// `x‴ = u`.
    ControlOnly,
    /// `x‴ = c₀x + c₁ẋ + c₂ẍ + u`.
    Linear([f64; 3]),
    /// `x‴ = sin x + u`.
    SinX,
}

/// Identifier of a builtin problem.
#[derive(Clone, Debug, PartialEq)]
pub enum BuiltinId {
    PendulumClassical,
    PendulumR2,
    PendulumDirect,
    /// `Σ_{ℓ=0}^m a_ℓ x^{(ℓ)} = u` with `a` from [`BuiltinParams::coeffs`].
    MthOrder,
    ThirdOrder(ThirdOrderRhs),
}

impl fmt::Display for BuiltinId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::PendulumClassical => write!(f, "pendulum-classical"),
            Self::PendulumR2 => write!(f, "pendulum-r2"),
            Self::PendulumDirect => write!(f, "pendulum-direct"),
            Self::MthOrder => write!(f, "mth-order"),
            Self::ThirdOrder(ThirdOrderRhs::ControlOnly) => write!(f, "third-order"),
            Self::ThirdOrder(ThirdOrderRhs::Linear(_)) => write!(f, "third-order-linear"),
            Self::ThirdOrder(ThirdOrderRhs::SinX) => write!(f, "third-order-sin"),
        }
    }
}

impl FromStr for BuiltinId {
    type Err = Error;

    /// Parses the display names; `third-order-linear` takes its coefficients
    /// from [`BuiltinParams::coeffs`] at build time.
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "pendulum-classical" => Self::PendulumClassical,
            "pendulum-r2" => Self::PendulumR2,
            "pendulum-direct" => Self::PendulumDirect,
            "mth-order" => Self::MthOrder,
            "third-order" => Self::ThirdOrder(ThirdOrderRhs::ControlOnly),
            "third-order-linear" => Self::ThirdOrder(ThirdOrderRhs::Linear([0.0; 3])),
            "third-order-sin" => Self::ThirdOrder(ThirdOrderRhs::SinX),
            other => return Err(Error::BadParams(format!("unknown builtin problem `{other}`"))),
        })
    }
}

/// Parameters shared by the builtins.
#[derive(Clone, Debug, PartialEq)]
pub struct BuiltinParams {
    pub horizon: f64,
    /// Bound on the free initial velocity `|ẋ(0)| ≤ v_max` (pendulum and
    /// `m ≥ 2`).
    pub v_max: f64,
    /// `a₀..a_m` for [`BuiltinId::MthOrder`]; `c₀..c₂` for a linear
    /// third-order problem parsed from its name.
    pub coeffs: Vec<f64>,
}

impl Default for BuiltinParams {
    fn default() -> Self {
        Self {
            horizon: std::f64::consts::FRAC_PI_2,
            v_max: 1.0,
            coeffs: vec![1.0, 0.0, 1.0],
        }
    }
}

/// Threshold on `|sin T|` for the direct pendulum formulation.
const DIRECT_DEGENERACY: f64 = 1e-6;

/// `−(t/T)·x` on coordinate 0.
struct NegX {
    horizon: f64,
}

impl JetFn for NegX {
    fn eval<S: Scalar>(&self, t: S, q: JetArgs<'_, S>, _u: &[S]) -> S {
        -(q.q(0, 0) * t) / self.horizon
    }
}

fn neg_x_cost(dim: usize, horizon: f64) -> CostFunction {
    CostFunction::new(ScalarJetField::new("−(t/T)·x", dim, 0, NegX { horizon }))
}

/// Pendulum `ẋ¹ = x², ẋ² = −x¹ + u`.
pub struct PendulumRhs;

impl ClassicalDynamics for PendulumRhs {
    fn f<S: Scalar>(&self, _t: S, x: &[S], u: &[S], out: &mut [S]) {
        out[0] = x[1];
        out[1] = -x[0] + u[0];
    }
}

/// `C(x) = −x¹`.
pub struct NegFirstComponent;

impl TerminalCost for NegFirstComponent {
    fn c<S: Scalar>(&self, x: &[S]) -> S {
        -x[0]
    }
}

/// The pendulum as a classical Mayer problem, `x(0) = (0, v)`, `|v| ≤ v_max`.
pub fn pendulum_classical_problem(params: &BuiltinParams) -> Result<ClassicalProblem<PendulumRhs, NegFirstComponent>> {
    ClassicalProblem::new(
        "pendulum-classical",
        PendulumRhs,
        NegFirstComponent,
        vec![InitSlot::Fixed(0.0), InitSlot::Range(-params.v_max, params.v_max)],
        ControlSet::symmetric(1, 1.0),
        params.horizon,
    )
}

/// `ẍ = −x + u`, `p̈ = −p` on `q = (x, p)`.
struct PendulumR2Rhs;

impl HigherOrderRhs for PendulumR2Rhs {
    fn eval<S: Scalar>(&self, _t: S, q: JetArgs<'_, S>, u: &[S], out: &mut [S]) {
        out[0] = -q.q(0, 0) + u[0];
        out[1] = -q.q(1, 0);
    }
}

/// `p(ẍ + x − u)`.
struct PendulumR2Lagrangian;

impl JetFn for PendulumR2Lagrangian {
    fn eval<S: Scalar>(&self, _t: S, q: JetArgs<'_, S>, u: &[S]) -> S {
        q.q(1, 0) * (q.q(0, 2) + q.q(0, 0) - u[0])
    }
}

/// `ẍ = −x + u` on `q = x`.
struct PendulumDirectRhs;

impl HigherOrderRhs for PendulumDirectRhs {
    fn eval<S: Scalar>(&self, _t: S, q: JetArgs<'_, S>, u: &[S], out: &mut [S]) {
        out[0] = -q.q(0, 0) + u[0];
    }
}

/// `½ẋ² − ½x² + ux`.
struct PendulumDirectLagrangian;

impl JetFn for PendulumDirectLagrangian {
    fn eval<S: Scalar>(&self, _t: S, q: JetArgs<'_, S>, u: &[S]) -> S {
        let (x, v) = (q.q(0, 0), q.q(0, 1));
        v * v * 0.5 - x * x * 0.5 + u[0] * x
    }
}

/// `x^{(m)} = (u − Σ_{ℓ<m} a_ℓ x^{(ℓ)})/a_m` and
/// `p^{(m)} = −Σ_{ℓ<m} (−1)^{ℓ−m} a_ℓ p^{(ℓ)}/a_m`.
struct MthOrderRhs {
    a: Vec<f64>,
}

impl HigherOrderRhs for MthOrderRhs {
    fn eval<S: Scalar>(&self, _t: S, q: JetArgs<'_, S>, u: &[S], out: &mut [S]) {
        let m = self.a.len() - 1;
        let mut x = u[0];
        let mut p = S::zero();
        for l in 0..m {
            x -= q.q(0, l) * self.a[l];
            let sign = if (m - l).is_multiple_of(2) { 1.0 } else { -1.0 };
            p -= q.q(1, l) * (self.a[l] * sign);
        }
        out[0] = x / self.a[m];
        out[1] = p / self.a[m];
    }
}

/// `p·(Σ a_ℓ x^{(ℓ)} − u)`.
struct MthOrderLagrangian {
    a: Vec<f64>,
}

impl JetFn for MthOrderLagrangian {
    fn eval<S: Scalar>(&self, _t: S, q: JetArgs<'_, S>, u: &[S]) -> S {
        let mut acc = -u[0];
        for (l, a) in self.a.iter().enumerate() {
            if *a != 0.0 {
                acc += q.q(0, l) * *a;
            }
        }
        q.q(1, 0) * acc
    }
}

fn third_f<S: Scalar>(rhs: &ThirdOrderRhs, x: S, v: S, w: S, u: S) -> S {
    match rhs {
        ThirdOrderRhs::ControlOnly => u,
        ThirdOrderRhs::Linear(c) => x * c[0] + v * c[1] + w * c[2] + u,
        ThirdOrderRhs::SinX => x.sin() + u,
    }
}

/// `x‴ = f`, with the adjoint equation `E_x(L) = 0` solved for `p‴`.
struct ThirdOrderDyn {
    rhs: ThirdOrderRhs,
}

impl HigherOrderRhs for ThirdOrderDyn {
    fn eval<S: Scalar>(&self, _t: S, q: JetArgs<'_, S>, u: &[S], out: &mut [S]) {
        let (x, v, w) = (q.q(0, 0), q.q(0, 1), q.q(0, 2));
        let (p, pd, pdd) = (q.q(1, 0), q.q(1, 1), q.q(1, 2));
        out[0] = third_f(&self.rhs, x, v, w, u[0]);
        out[1] = match &self.rhs {
            ThirdOrderRhs::ControlOnly => S::zero(),
            ThirdOrderRhs::Linear(c) => -(p * c[0]) + pd * c[1] - pdd * c[2],
            ThirdOrderRhs::SinX => -(p * x.cos()),
        };
    }
}

/// `p·(x‴ − f)`.
struct ThirdOrderLagrangian {
    rhs: ThirdOrderRhs,
}

impl JetFn for ThirdOrderLagrangian {
    fn eval<S: Scalar>(&self, _t: S, q: JetArgs<'_, S>, u: &[S]) -> S {
        let f = third_f(&self.rhs, q.q(0, 0), q.q(0, 1), q.q(0, 2), u[0]);
        q.q(1, 0) * (q.q(0, 3) - f)
    }
}

fn check_horizon(params: &BuiltinParams) -> Result<()> {
    if !(params.horizon > 0.0 && params.horizon.is_finite()) {
        return Err(Error::BadParams(format!("horizon must be positive, got {}", params.horizon)));
    }
    if !(params.v_max >= 0.0 && params.v_max.is_finite()) {
        return Err(Error::BadParams(format!("v_max must be non-negative, got {}", params.v_max)));
    }
    Ok(())
}

fn xp_adjoint() -> AdjointBlock {
    AdjointBlock { x: vec![0], p: vec![1] }
}

/// Build the triple of a builtin problem.
pub fn build(id: &BuiltinId, params: &BuiltinParams) -> Result<DefiningTriple> {
    check_horizon(params)?;
    let t_end = params.horizon;
    let box1 = ControlSet::symmetric(1, 1.0);
    match id {
        BuiltinId::PendulumClassical => embed_classical(&pendulum_classical_problem(params)?),
        BuiltinId::PendulumR2 => {
            let dynamics = reduce_to_first_order(PendulumR2Rhs, 2, 2, 1);
            let lagrangian = ControlledLagrangian::new(ScalarJetField::new("p(ẍ + x − u)", 2, 2, PendulumR2Lagrangian));
            let initial = InitialData::new(vec![
                InitSlot::Fixed(0.0),
                InitSlot::Free,
                InitSlot::Range(-params.v_max, params.v_max),
                InitSlot::Free,
            ]);
            Ok(DefiningTriple::new(
                id.to_string(),
                box1,
                lagrangian,
                neg_x_cost(2, t_end),
                dynamics,
                initial,
                t_end,
                5,
            )?
            .with_adjoint(xp_adjoint()))
        }
        BuiltinId::PendulumDirect => {
            let sin_t = t_end.sin();
            if sin_t.abs() < DIRECT_DEGENERACY {
                return Err(Error::BadParams(format!(
                    "direct pendulum needs T ≠ kπ (sin T = {sin_t:e})"
                )));
            }
            let dynamics = reduce_to_first_order(PendulumDirectRhs, 2, 1, 1);
            let lagrangian =
                ControlledLagrangian::new(ScalarJetField::new("½ẋ² − ½x² + ux", 1, 1, PendulumDirectLagrangian));
            let initial = InitialData::new(vec![InitSlot::Fixed(0.0), InitSlot::Range(-params.v_max, params.v_max)]);
            DefiningTriple::new(id.to_string(), box1, lagrangian, neg_x_cost(1, t_end), dynamics, initial, t_end, 3)
        }
        BuiltinId::MthOrder => {
            let a = params.coeffs.clone();
            let m = a.len().checked_sub(1).filter(|&m| m >= 1).ok_or_else(|| {
                Error::BadParams("mth-order needs coefficients a₀..a_m with m ≥ 1".into())
            })?;
            if a[m] == 0.0 || a.iter().any(|c| !c.is_finite()) {
                return Err(Error::BadParams("a_m must be nonzero and all coefficients finite".into()));
            }
            let dynamics = reduce_to_first_order(MthOrderRhs { a: a.clone() }, m, 2, 1);
            let lagrangian = ControlledLagrangian::new(ScalarJetField::new(
                format!("p·(Σ a_ℓ x^(ℓ) − u), a = {a:?}"),
                2,
                m,
                MthOrderLagrangian { a },
            ));
            let mut slots = Vec::with_capacity(2 * m);
            for beta in 0..m {
                slots.push(if beta == 1 {
                    InitSlot::Range(-params.v_max, params.v_max)
                } else {
                    InitSlot::Fixed(0.0)
                });
                slots.push(InitSlot::Free);
            }
            Ok(DefiningTriple::new(
                format!("mth-order(m={m})"),
                box1,
                lagrangian,
                neg_x_cost(2, t_end),
                dynamics,
                InitialData::new(slots),
                t_end,
                2 * m + 1,
            )?
            .with_adjoint(xp_adjoint()))
        }
        BuiltinId::ThirdOrder(rhs) => {
            let rhs = match rhs {
                ThirdOrderRhs::Linear(c) if *c == [0.0; 3] && params.coeffs.len() == 3 => {
                    ThirdOrderRhs::Linear([params.coeffs[0], params.coeffs[1], params.coeffs[2]])
                }
                other => other.clone(),
            };
            let dynamics = reduce_to_first_order(ThirdOrderDyn { rhs: rhs.clone() }, 3, 2, 1);
            let lagrangian = ControlledLagrangian::new(ScalarJetField::new(
                format!("p·(x‴ − f), f = {rhs:?}"),
                2,
                3,
                ThirdOrderLagrangian { rhs },
            ));
            let initial = InitialData::new(vec![
                InitSlot::Fixed(0.0),
                InitSlot::Free,
                InitSlot::Fixed(0.0),
                InitSlot::Free,
                InitSlot::Fixed(0.0),
                InitSlot::Free,
            ]);
            Ok(DefiningTriple::new(
                id.to_string(),
                box1,
                lagrangian,
                neg_x_cost(2, t_end),
                dynamics,
                initial,
                t_end,
                7,
            )?
            .with_adjoint(xp_adjoint()))
        }
    }
}

/// Closed-form optimum of a builtin problem.
#[derive(Clone, Debug)]
pub struct OptimalReference {
    pub control: ControlCurve,
    /// Initial normal-form state (adjoint slots satisfy the terminal
    /// conditions).
    pub initial: Vec<f64>,
    pub cost: f64,
}

/// Optimal pair and cost where known in closed form.
///
/// Pendulum (all formulations, `T ≤ π`): `u ≡ 1`, `ẋ(0) = v_max`,
/// cost `−(v_max sin T + 1 − cos T)`; `ẋ = u`: cost `−T`; `x‴ = u`:
/// cost `−T³/6`.
pub fn optimal_reference(id: &BuiltinId, params: &BuiltinParams) -> Result<OptimalReference> {
    check_horizon(params)?;
    let t_end = params.horizon;
    let v = params.v_max;
    let one = ControlCurve::constant(t_end, vec![1.0]);
    let pendulum_cost = -(v * t_end.sin() + 1.0 - t_end.cos());
    let no_closed_form = || Error::NoClosedForm(format!("{id} with {params:?}"));
    let pendulum_ok = t_end <= std::f64::consts::PI;
    let (initial, cost) = match id {
        BuiltinId::PendulumClassical if pendulum_ok => (vec![0.0, v, t_end.cos(), t_end.sin()], pendulum_cost),
        BuiltinId::PendulumR2 if pendulum_ok => (vec![0.0, t_end.sin(), v, -t_end.cos()], pendulum_cost),
        BuiltinId::PendulumDirect if pendulum_ok => {
            build(id, params)?;
            (vec![0.0, v], pendulum_cost)
        }
        BuiltinId::MthOrder => match params.coeffs.as_slice() {
            [a0, a1] if *a0 == 0.0 && *a1 == 1.0 => (vec![0.0, 1.0], -t_end),
            [a0, a1, a2] if *a0 == 1.0 && *a1 == 0.0 && *a2 == 1.0 && pendulum_ok => {
                (vec![0.0, t_end.sin(), v, -t_end.cos()], pendulum_cost)
            }
            _ => return Err(no_closed_form()),
        },
        BuiltinId::ThirdOrder(ThirdOrderRhs::ControlOnly) => (
            vec![0.0, 0.5 * t_end * t_end, 0.0, -t_end, 0.0, 1.0],
            -t_end.powi(3) / 6.0,
        ),
        _ => return Err(no_closed_form()),
    };
    Ok(OptimalReference {
        control: one,
        initial,
        cost,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::Tolerance;
    use crate::problem::{el_residual, validate_triple};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::FRAC_PI_2;

    fn params() -> BuiltinParams {
        BuiltinParams::default()
    }

    #[test]
    fn names_round_trip() {
        for id in [
            BuiltinId::PendulumClassical,
            BuiltinId::PendulumR2,
            BuiltinId::PendulumDirect,
            BuiltinId::MthOrder,
            BuiltinId::ThirdOrder(ThirdOrderRhs::ControlOnly),
            BuiltinId::ThirdOrder(ThirdOrderRhs::SinX),
        ] {
            assert_eq!(id.to_string().parse::<BuiltinId>().unwrap(), id);
        }
        assert!("nope".parse::<BuiltinId>().is_err());
    }

    #[test]
    fn pendulum_r2_validates() {
        let triple = build(&BuiltinId::PendulumR2, &params()).unwrap();
        let rep = validate_triple(&triple, 7);
        assert!(rep.passed(), "{rep}");
    }

    #[test]
    fn optimal_costs_match_trajectories() {
        let p = params();
        for id in [BuiltinId::PendulumClassical, BuiltinId::PendulumR2, BuiltinId::PendulumDirect] {
            let triple = build(&id, &p).unwrap().with_tolerance(Tolerance::tight());
            let opt = optimal_reference(&id, &p).unwrap();
            let traj = triple.trajectory(&opt.control, &opt.initial).unwrap();
            assert_abs_diff_eq!(triple.terminal_cost(&traj).unwrap(), -2.0, epsilon = 1e-10);
        }
        let third = BuiltinId::ThirdOrder(ThirdOrderRhs::ControlOnly);
        let p3 = BuiltinParams { horizon: 1.0, ..p };
        let triple = build(&third, &p3).unwrap().with_tolerance(Tolerance::tight());
        let opt = optimal_reference(&third, &p3).unwrap();
        let traj = triple.trajectory(&opt.control, &opt.initial).unwrap();
        assert_abs_diff_eq!(triple.terminal_cost(&traj).unwrap(), -1.0 / 6.0, epsilon = 1e-12);
        assert!(optimal_reference(&BuiltinId::ThirdOrder(ThirdOrderRhs::SinX), &p3).is_err());
    }

    #[test]
    fn direct_pendulum_el_reproduces_constraint() {
        let triple = build(&BuiltinId::PendulumDirect, &params()).unwrap();
        let u = ControlCurve::constant(FRAC_PI_2, vec![0.4]);
        let traj = triple.trajectory(&u, &[0.0, 0.3]).unwrap();
        let res = el_residual(&triple, &traj, 0.7).unwrap();
        assert!(res[0].abs() < 1e-7);
        let bad = BuiltinParams {
            horizon: std::f64::consts::PI,
            ..params()
        };
        assert!(matches!(build(&BuiltinId::PendulumDirect, &bad), Err(Error::BadParams(_))));
    }

    #[test]
    fn mth_order_matches_pendulum_r2() {
        let p = params();
        let a = build(&BuiltinId::MthOrder, &p).unwrap().with_tolerance(Tolerance::tight());
        let b = build(&BuiltinId::PendulumR2, &p).unwrap().with_tolerance(Tolerance::tight());
        let u = ControlCurve::constant(FRAC_PI_2, vec![-0.6]);
        let y0 = [0.0, 0.2, 0.5, -0.1];
        let ta = a.trajectory(&u, &y0).unwrap();
        let tb = b.trajectory(&u, &y0).unwrap();
        for k in 0..=10 {
            let t = FRAC_PI_2 * k as f64 / 10.0;
            let (ya, yb) = (ta.state(t).unwrap(), tb.state(t).unwrap());
            for (x, y) in ya.iter().zip(&yb) {
                assert_abs_diff_eq!(x, y, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn third_order_adjoint_is_el_consistent() {
        for rhs in [
            ThirdOrderRhs::ControlOnly,
            ThirdOrderRhs::Linear([0.3, -0.2, 0.1]),
            ThirdOrderRhs::SinX,
        ] {
            let p = BuiltinParams {
                horizon: 1.0,
                ..params()
            };
            let triple = build(&BuiltinId::ThirdOrder(rhs), &p).unwrap();
            let rep = validate_triple(&triple, 3);
            assert!(rep.passed(), "{rep}");
        }
    }
}
