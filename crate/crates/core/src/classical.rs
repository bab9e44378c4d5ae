//! First-order Mayer problems `ẋ = f(t, x, u)`, `min C(x(T))`: embedding as
//! a defining triple with Pontryagin multipliers, backward adjoint
//! integration, the Pontryagin function `ℋ = Σ pᵢ fⁱ`, bang-bang synthesis
//! for scalar `m`-th order equations, and the terminal-map surjectivity probe.
//!
//! These routines double as the oracle against which higher-order results
//! are cross-checked.

use std::sync::Arc;

use crate::builtin::{self, BuiltinId, BuiltinParams};
use crate::control::{ControlCurve, ControlSet, Side};
use crate::dynamics::{integrate, reduce_to_first_order, HigherOrderRhs, NormalFormDynamics, Tolerance, Trajectory, VectorField};
use crate::error::{Error, Result};
use crate::jetspace::{JetArgs, JetFn, ScalarJetField};
use crate::needle::transversality_synthesize;
use crate::problem::{AdjointBlock, ControlledLagrangian, CostFunction, DefiningTriple, InitSlot, InitialData};
use crate::scalar::{Dual, Scalar};

/// Right-hand side `f(t, x, u)` written generically over [`Scalar`].
pub trait ClassicalDynamics: Send + Sync + 'static {
    fn f<S: Scalar>(&self, t: S, x: &[S], u: &[S], out: &mut [S]);
}

/// Terminal cost `C(x)` written generically over [`Scalar`].
pub trait TerminalCost: Send + Sync + 'static {
    fn c<S: Scalar>(&self, x: &[S]) -> S;
}

/// Mayer problem with initial constraint slots on `x(0)`.
pub struct ClassicalProblem<F, C> {
    pub name: String,
    pub dim: usize,
    pub f: Arc<F>,
    pub cost: Arc<C>,
    pub x0: Vec<InitSlot>,
    pub controls: ControlSet,
    pub horizon: f64,
}

impl<F, C> Clone for ClassicalProblem<F, C> {
    fn clone(&self) -> Self {
        Self {
            name: self.name.clone(),
            dim: self.dim,
            f: self.f.clone(),
            cost: self.cost.clone(),
            x0: self.x0.clone(),
            controls: self.controls.clone(),
            horizon: self.horizon,
        }
    }
}

/// A `(τ, ω)` pair at which the maximum condition fails.
#[derive(Clone, Debug, PartialEq)]
pub struct Violation {
    pub tau: f64,
    pub omega: Vec<f64>,
    /// Amount by which the inequality fails (positive).
    pub margin: f64,
}

/// Sort violations by decreasing margin, ties by `τ`.
pub fn sort_violations(v: &mut [Violation]) {
    v.sort_by(|a, b| b.margin.total_cmp(&a.margin).then(a.tau.total_cmp(&b.tau)));
}

impl<F: ClassicalDynamics, C: TerminalCost> ClassicalProblem<F, C> {
    pub fn new(
        name: impl Into<String>,
        f: F,
        cost: C,
        x0: Vec<InitSlot>,
        controls: ControlSet,
        horizon: f64,
    ) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::BadParams(format!("horizon must be positive, got {horizon}")));
        }
        Ok(Self {
            name: name.into(),
            dim: x0.len(),
            f: Arc::new(f),
            cost: Arc::new(cost),
            x0,
            controls,
            horizon,
        })
    }

    /// `f` evaluated in `f64`.
    pub fn rhs(&self, t: f64, x: &[f64], u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.f.f(t, x, u, &mut out);
        out
    }

    /// `∂fⁱ/∂xʲ`, row-major `[i][j]`.
    pub fn jacobian(&self, t: f64, x: &[f64], u: &[f64]) -> Vec<Vec<f64>> {
        jacobian_generic(&*self.f, self.dim, t, x, u)
    }

    /// `∂C/∂x`.
    pub fn cost_gradient(&self, x: &[f64]) -> Vec<f64> {
        (0..self.dim)
            .map(|j| {
                let xd: Vec<Dual<f64>> = x
                    .iter()
                    .enumerate()
                    .map(|(k, &v)| Dual::new(v, if k == j { 1.0 } else { 0.0 }))
                    .collect();
                self.cost.c(&xd).d
            })
            .collect()
    }

    /// `x`-only dynamics.
    pub fn state_dynamics(&self) -> NormalFormDynamics {
        struct X<F> {
            f: Arc<F>,
        }
        impl<F: ClassicalDynamics> VectorField for X<F> {
            fn eval<S: Scalar>(&self, t: S, y: &[S], u: &[S], out: &mut [S]) {
                self.f.f(t, y, u, out);
            }
        }
        let chains = (0..self.dim).map(|k| vec![k]).collect();
        NormalFormDynamics::new(self.dim, self.controls.dim(), 1, chains, X { f: self.f.clone() })
            .expect("state chains are valid")
    }

    /// Integrate `ẋ = f` from `x0` over `[0, T]`.
    pub fn state_trajectory(&self, u: &ControlCurve, x0: &[f64], tol: Tolerance) -> Result<Trajectory> {
        InitialData::new(self.x0.clone()).admissible(x0)?;
        integrate(&self.state_dynamics(), u, x0, 0.0, self.horizon, tol)
    }
}

fn jacobian_generic<F: ClassicalDynamics, S: Scalar>(f: &F, n: usize, t: S, x: &[S], u: &[S]) -> Vec<Vec<S>> {
    let mut jac = vec![vec![S::zero(); n]; n];
    let td = Dual::constant(t);
    let ud: Vec<Dual<S>> = u.iter().map(|&v| Dual::constant(v)).collect();
    let mut out = vec![Dual::constant(S::zero()); n];
    for j in 0..n {
        let xd: Vec<Dual<S>> = x
            .iter()
            .enumerate()
            .map(|(k, &v)| Dual::new(v, if k == j { S::one() } else { S::zero() }))
            .collect();
        f.f(td, &xd, &ud, &mut out);
        for i in 0..n {
            jac[i][j] = out[i].d;
        }
    }
    jac
}

struct Embedded<F> {
    f: Arc<F>,
    n: usize,
}

impl<F: ClassicalDynamics> VectorField for Embedded<F> {
    fn eval<S: Scalar>(&self, t: S, y: &[S], u: &[S], out: &mut [S]) {
        let n = self.n;
        let (x, p) = y.split_at(n);
        self.f.f(t, x, u, &mut out[..n]);
        let jac = jacobian_generic(&*self.f, n, t, x, u);
        for j in 0..n {
            let mut acc = S::zero();
            for i in 0..n {
                acc += p[i] * jac[i][j];
            }
            out[n + j] = -acc;
        }
    }
}

struct EmbeddedLagrangian<F> {
    f: Arc<F>,
    n: usize,
}

impl<F: ClassicalDynamics> JetFn for EmbeddedLagrangian<F> {
    fn eval<S: Scalar>(&self, t: S, q: JetArgs<'_, S>, u: &[S]) -> S {
        let n = self.n;
        let x: Vec<S> = (0..n).map(|i| q.q(i, 0)).collect();
        let mut fx = vec![S::zero(); n];
        self.f.f(t, &x, u, &mut fx);
        let mut acc = S::zero();
        for i in 0..n {
            acc += q.q(n + i, 0) * (q.q(i, 1) - fx[i]);
        }
        acc
    }
}

struct GatedCost<C> {
    c: Arc<C>,
    n: usize,
    horizon: f64,
}

impl<C: TerminalCost> JetFn for GatedCost<C> {
    fn eval<S: Scalar>(&self, t: S, q: JetArgs<'_, S>, _u: &[S]) -> S {
        let x: Vec<S> = (0..self.n).map(|i| q.q(i, 0)).collect();
        self.c.c(&x) * t / self.horizon
    }
}

/// Triple on `q = (x, p)` with `L = p·(ẋ − f)`, `r = 1`, `n = 3`, cost
/// `(t/T)·C(x)`, and dynamics `ẋ = f`, `ṗ = −(∂f/∂x)ᵀp`.
pub fn embed_classical<F: ClassicalDynamics, C: TerminalCost>(cp: &ClassicalProblem<F, C>) -> Result<DefiningTriple> {
    let n = cp.dim;
    let dynamics = NormalFormDynamics::new(
        2 * n,
        cp.controls.dim(),
        1,
        (0..2 * n).map(|k| vec![k]).collect(),
        Embedded { f: cp.f.clone(), n },
    )?;
    let lagrangian = ControlledLagrangian::new(ScalarJetField::new(
        format!("{}: p·(ẋ − f)", cp.name),
        2 * n,
        1,
        EmbeddedLagrangian { f: cp.f.clone(), n },
    ));
    let cost = CostFunction::new(ScalarJetField::new(
        format!("{}: (t/T)·C(x)", cp.name),
        2 * n,
        0,
        GatedCost {
            c: cp.cost.clone(),
            n,
            horizon: cp.horizon,
        },
    ));
    let mut slots = cp.x0.clone();
    slots.extend(std::iter::repeat_n(InitSlot::Free, n));
    Ok(DefiningTriple::new(
        cp.name.clone(),
        cp.controls.clone(),
        lagrangian,
        cost,
        dynamics,
        InitialData::new(slots),
        cp.horizon,
        3,
    )?
    .with_adjoint(AdjointBlock {
        x: (0..n).collect(),
        p: (n..2 * n).collect(),
    }))
}

/// Integrate `ṗ_j = −Σᵢ pᵢ ∂fⁱ/∂xʲ` backward from `p(T) = p_terminal`, with
/// `x` read from the first `N′` components of `x_traj`.
pub fn adjoint_integrate<F: ClassicalDynamics, C: TerminalCost>(
    cp: &ClassicalProblem<F, C>,
    x_traj: &Trajectory,
    u: &ControlCurve,
    p_terminal: &[f64],
    tol: Tolerance,
) -> Result<Trajectory> {
    let n = cp.dim;
    if p_terminal.len() != n || x_traj.dynamics().state_dim() < n {
        return Err(Error::Dimension("adjoint terminal value or state trajectory has the wrong size".into()));
    }
    let (lo, hi) = x_traj.range();
    if lo > 1e-12 || hi < cp.horizon - 1e-12 {
        return Err(Error::TimeOutOfRange {
            t: cp.horizon,
            lo,
            hi,
        });
    }
    let traj = x_traj.clone();
    let f = cp.f.clone();
    let dynamics = NormalFormDynamics::from_f64(n, cp.controls.dim(), 1, (0..n).map(|k| vec![k]).collect(), move |t, p, u, out| {
        let x = traj.state(t).unwrap_or_else(|_| traj.final_state().to_vec());
        let jac = jacobian_generic(&*f, n, t, &x[..n], u);
        for j in 0..n {
            out[j] = -(0..n).map(|i| p[i] * jac[i][j]).sum::<f64>();
        }
    })?;
    integrate(&dynamics, u, p_terminal, cp.horizon, 0.0, tol)
}

/// `u ↦ ℋ(t, x, p, u) = Σ pᵢ fⁱ(t, x, u)`.
pub fn hamiltonian<'a, F: ClassicalDynamics, C: TerminalCost>(
    cp: &'a ClassicalProblem<F, C>,
    t: f64,
    x: &'a [f64],
    p: &'a [f64],
) -> impl Fn(&[f64]) -> f64 + 'a {
    move |u| cp.rhs(t, x, u).iter().zip(p).map(|(f, q)| f * q).sum()
}

/// Outcome of [`classical_pmp_check`].
#[derive(Clone, Debug)]
pub struct ClassicalPmpReport {
    pub violations: Vec<Violation>,
    /// `p(T) = −∂C/∂x(x(T))`.
    pub p_terminal: Vec<f64>,
    pub checked: usize,
}

/// Compare `ℋ(ω)` with `ℋ(u₀(τ))` on a grid, using the adjoint with
/// `p(T) = −∂C/∂x`.
pub fn classical_pmp_check<F: ClassicalDynamics, C: TerminalCost>(
    cp: &ClassicalProblem<F, C>,
    u0: &ControlCurve,
    x0: &[f64],
    tau_grid: &[f64],
    omega_grid: &[Vec<f64>],
) -> Result<ClassicalPmpReport> {
    let tol = Tolerance::tight();
    let xt = cp.state_trajectory(u0, x0, tol)?;
    let p_terminal: Vec<f64> = cp.cost_gradient(xt.final_state()).iter().map(|g| -g).collect();
    let pt = adjoint_integrate(cp, &xt, u0, &p_terminal, tol)?;
    let mut violations = Vec::new();
    let mut checked = 0;
    for &tau in tau_grid {
        let x = xt.state(tau)?;
        let p = pt.state(tau)?;
        let h = hamiltonian(cp, tau, &x, &p);
        let u_tau = u0.value_side(tau, Side::Right);
        let h0 = h(&u_tau);
        for omega in omega_grid {
            checked += 1;
            let margin = h(omega) - h0;
            if margin > 1e-6 * (1.0 + h0.abs()) {
                violations.push(Violation {
                    tau,
                    omega: omega.clone(),
                    margin,
                });
            }
        }
    }
    sort_violations(&mut violations);
    Ok(ClassicalPmpReport {
        violations,
        p_terminal,
        checked,
    })
}

/// Bang-bang synthesis result of [`mth_order_bang_bang`].
#[derive(Clone, Debug)]
pub struct BangBang {
    pub control: ControlCurve,
    /// Scalar adjoint in chain form `(p, ṗ, …, p^{(m−1)})`, integrated
    /// backward from `T`.
    pub adjoint: Trajectory,
    pub switches: Vec<f64>,
    /// `p, ṗ, …, p^{(m−1)}` at `T`.
    pub terminal: Vec<f64>,
}

struct AdjointChain {
    a: Vec<f64>,
}

impl HigherOrderRhs for AdjointChain {
    fn eval<S: Scalar>(&self, _t: S, q: JetArgs<'_, S>, _u: &[S], out: &mut [S]) {
        let m = self.a.len() - 1;
        let mut acc = S::zero();
        for l in 0..m {
            let sign = if (m - l).is_multiple_of(2) { 1.0 } else { -1.0 };
            acc += q.q(0, l) * (self.a[l] * sign);
        }
        out[0] = -acc / self.a[m];
    }
}

/// Chain reduction of `Σ a_ℓ x^{(ℓ)} = u` with `C = −x(T)`.
struct ChainRhs {
    a: Vec<f64>,
}

impl ClassicalDynamics for ChainRhs {
    fn f<S: Scalar>(&self, _t: S, x: &[S], u: &[S], out: &mut [S]) {
        let m = self.a.len() - 1;
        out[..m - 1].copy_from_slice(&x[1..m]);
        let mut acc = u[0];
        for l in 0..m {
            acc -= x[l] * self.a[l];
        }
        out[m - 1] = acc / self.a[m];
    }
}

struct NegFirst;

impl TerminalCost for NegFirst {
    fn c<S: Scalar>(&self, x: &[S]) -> S {
        -x[0]
    }
}

/// Number of samples scanned for adjoint sign changes.
const SWITCH_SAMPLES: usize = 2000;

/// Optimal control `u = sign p` for `Σ a_ℓ x^{(ℓ)} = u`, `|u| ≤ 1`,
/// `C = −x(T)`: terminal adjoint conditions are synthesized from the
/// `m`-th order triple, checked against the chain-reduction adjoint, and the
/// adjoint `Σ (−1)^ℓ a_ℓ p^{(ℓ)} = 0` is integrated backward. Switch times
/// are located by bisection to `1e−10`.
pub fn mth_order_bang_bang(a: &[f64], horizon: f64, tol: Tolerance) -> Result<BangBang> {
    let m = a.len().checked_sub(1).filter(|&m| m >= 1).ok_or_else(|| Error::BadParams("need m ≥ 1".into()))?;
    if a[m] == 0.0 {
        return Err(Error::BadParams("leading coefficient a_m must be nonzero".into()));
    }
    let params = BuiltinParams {
        horizon,
        v_max: 0.0,
        coeffs: a.to_vec(),
    };
    let triple = builtin::build(&BuiltinId::MthOrder, &params)?;
    let zero_u = ControlCurve::constant(horizon, vec![0.0]);
    let probe = triple.trajectory(&zero_u, &vec![0.0; triple.dynamics.state_dim()])?;
    let jet_t = probe.jet(horizon, triple.working_order())?;
    let terminal = transversality_synthesize(&triple, &jet_t, &[0.0])?;
    let p_t: Vec<f64> = (0..m).map(|beta| terminal.value(0, beta)).collect();

    let dynamics = reduce_to_first_order(AdjointChain { a: a.to_vec() }, m, 1, 1);
    let adjoint = integrate(&dynamics, &zero_u, &p_t, horizon, 0.0, tol)?;

    // classical oracle: P_last/a_m of the chain reduction must reproduce p
    let cp = ClassicalProblem::new(
        "chain",
        ChainRhs { a: a.to_vec() },
        NegFirst,
        vec![InitSlot::Fixed(0.0); m],
        ControlSet::symmetric(1, 1.0),
        horizon,
    )?;
    let xt = cp.state_trajectory(&zero_u, &vec![0.0; m], tol)?;
    let mut big_p = vec![0.0; m];
    big_p[0] = 1.0;
    let oracle = adjoint_integrate(&cp, &xt, &zero_u, &big_p, tol)?;
    let mut scale: f64 = 1.0;
    let mut worst: f64 = 0.0;
    for k in 0..=16 {
        let t = horizon * k as f64 / 16.0;
        let p = adjoint.state(t)?[0];
        let q = oracle.state(t)?[m - 1] / a[m];
        scale = scale.max(q.abs());
        worst = worst.max((p - q).abs());
    }
    if worst > 1e-5 * scale {
        return Err(Error::NonSolvableForm(format!(
            "synthesized terminal conditions disagree with the chain-reduction adjoint (max gap {worst:e})"
        )));
    }

    let samples: Vec<(f64, f64)> = (0..=SWITCH_SAMPLES)
        .map(|k| {
            let t = horizon * k as f64 / SWITCH_SAMPLES as f64;
            adjoint.state(t).map(|y| (t, y[0]))
        })
        .collect::<Result<_>>()?;
    let pscale = samples.iter().fold(0.0_f64, |acc, s| acc.max(s.1.abs()));
    let flat = 1e-9 * pscale.max(1e-300);
    let mut run = 0;
    for (k, s) in samples.iter().enumerate() {
        if s.1.abs() <= flat {
            run += 1;
            if run >= 3 {
                return Err(Error::DegenerateAdjoint { t: samples[k - 1].0 });
            }
        } else {
            run = 0;
        }
    }
    let mut switches = Vec::new();
    for w in samples.windows(2) {
        let ((t0, p0), (t1, p1)) = (w[0], w[1]);
        if p0 == 0.0 || p0.signum() == p1.signum() || p1 == 0.0 {
            continue;
        }
        let (mut lo, mut hi) = (t0, t1);
        while hi - lo > 1e-10 {
            let mid = 0.5 * (lo + hi);
            if adjoint.state(mid)?[0].signum() == p0.signum() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        switches.push(0.5 * (lo + hi));
    }
    let sign_at = |t: f64| -> Result<f64> { Ok(if adjoint.state(t)?[0] >= 0.0 { 1.0 } else { -1.0 }) };
    let mut edges = vec![0.0];
    edges.extend(&switches);
    edges.push(horizon);
    let values = edges
        .windows(2)
        .map(|w| sign_at(0.5 * (w[0] + w[1])).map(|s| vec![s]))
        .collect::<Result<Vec<_>>>()?;
    let control = ControlCurve::piecewise_constant(horizon, switches.clone(), values)?;
    Ok(BangBang {
        control,
        adjoint,
        switches,
        terminal: p_t,
    })
}

/// Affine fit of `v ↦ x(T)` from [`phi_surjectivity_probe`].
#[derive(Clone, Debug, PartialEq)]
pub struct PhiReport {
    pub slope: f64,
    pub intercept: f64,
    /// Max deviation of the samples from the fitted line.
    pub residual: f64,
    pub samples: Vec<(f64, f64)>,
}

/// Threshold on `|sin T|` below which the terminal map is degenerate.
pub const DEGENERATE_SIN: f64 = 1e-6;

/// Sample `v ↦ x(T)` on the direct pendulum formulation (`x(0) = 0`,
/// `ẋ(0) = v`) under a fixed control and fit a line.
pub fn phi_surjectivity_probe(horizon: f64, u: &ControlCurve, v_grid: &[f64]) -> Result<PhiReport> {
    let sin_t = horizon.sin();
    if sin_t.abs() < DEGENERATE_SIN {
        return Err(Error::DegenerateHorizon { horizon, sin_t });
    }
    if v_grid.len() < 2 {
        return Err(Error::BadParams("need at least two v samples".into()));
    }
    let v_max = v_grid.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    let params = BuiltinParams {
        horizon,
        v_max,
        coeffs: Vec::new(),
    };
    let triple = builtin::build(&BuiltinId::PendulumDirect, &params)?.with_tolerance(Tolerance::tight());
    let samples: Vec<(f64, f64)> = v_grid
        .iter()
        .map(|&v| {
            let traj = triple.trajectory(u, &[0.0, v])?;
            Ok((v, traj.final_state()[0]))
        })
        .collect::<Result<_>>()?;
    let k = samples.len() as f64;
    let mv = samples.iter().map(|s| s.0).sum::<f64>() / k;
    let mx = samples.iter().map(|s| s.1).sum::<f64>() / k;
    let sxx: f64 = samples.iter().map(|s| (s.0 - mv) * (s.0 - mv)).sum();
    let sxy: f64 = samples.iter().map(|s| (s.0 - mv) * (s.1 - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::BadParams("v samples must not all coincide".into()));
    }
    let slope = sxy / sxx;
    let intercept = mx - slope * mv;
    let residual = samples
        .iter()
        .map(|s| (s.1 - intercept - slope * s.0).abs())
        .fold(0.0, f64::max);
    Ok(PhiReport {
        slope,
        intercept,
        residual,
        samples,
    })
}
