//! Defining triples `(𝒦, L, C)`: control boxes, controlled Lagrangians,
//! extended terminal costs and admissible initial data, together with the
//! Euler–Lagrange operator, momentum sums and the function `𝒫 = −L`.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::control::{ControlCurve, ControlFn, ControlSet};
use crate::dynamics::{integrate, NormalFormDynamics, Tolerance, Trajectory};
use crate::error::{Error, Result};
use crate::jetspace::{actual_order_audit, iterated_total_derivatives, partial, Coord, JetPoint, ScalarJetField};
use crate::scalar::Scalar;

/// Constraint on one component of the initial normal-form state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum InitSlot {
    /// Prescribed value.
    Fixed(f64),
    /// Free within `[lo, hi]` (optimized over by the problem).
    Range(f64, f64),
    /// Unconstrained (initial values of adjoint-type variables).
    Free,
}

/// Admissible initial data: one slot per state component.
#[derive(Clone, Debug, PartialEq)]
pub struct InitialData {
    slots: Vec<InitSlot>,
}

impl InitialData {
    pub fn new(slots: Vec<InitSlot>) -> Self {
        Self { slots }
    }

    pub fn slots(&self) -> &[InitSlot] {
        &self.slots
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    /// Indices of [`InitSlot::Free`] components.
    pub fn free_indices(&self) -> Vec<usize> {
        self.indices(|s| matches!(s, InitSlot::Free))
    }

    /// Indices of [`InitSlot::Range`] components.
    pub fn range_indices(&self) -> Vec<usize> {
        self.indices(|s| matches!(s, InitSlot::Range(..)))
    }

    fn indices(&self, pred: impl Fn(&InitSlot) -> bool) -> Vec<usize> {
        self.slots.iter().enumerate().filter(|(_, s)| pred(s)).map(|(k, _)| k).collect()
    }

    /// Check membership; `ConstraintViolation` names the first offending slot.
    pub fn admissible(&self, y0: &[f64]) -> Result<()> {
        if y0.len() != self.slots.len() {
            return Err(Error::Dimension(format!(
                "initial state has length {}, constraint expects {}",
                y0.len(),
                self.slots.len()
            )));
        }
        for (k, (v, s)) in y0.iter().zip(&self.slots).enumerate() {
            let ok = match *s {
                InitSlot::Fixed(c) => (v - c).abs() <= 1e-12 * (1.0 + c.abs()),
                InitSlot::Range(lo, hi) => *v >= lo - 1e-12 && *v <= hi + 1e-12,
                InitSlot::Free => v.is_finite(),
            };
            if !ok {
                return Err(Error::ConstraintViolation(format!("component {k} = {v} violates {s:?}")));
            }
        }
        Ok(())
    }

    /// Random admissible state (free slots uniform in `[-1, 1]`).
    pub fn sample<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        self.slots
            .iter()
            .map(|s| match *s {
                InitSlot::Fixed(c) => c,
                InitSlot::Range(lo, hi) if hi > lo => rng.random_range(lo..=hi),
                InitSlot::Range(lo, _) => lo,
                InitSlot::Free => rng.random_range(-1.0..=1.0),
            })
            .collect()
    }

    /// Largest magnitude among the declared bounds (free slots count as 1).
    pub fn scale(&self) -> f64 {
        self.slots
            .iter()
            .map(|s| match *s {
                InitSlot::Fixed(c) => c.abs(),
                InitSlot::Range(lo, hi) => lo.abs().max(hi.abs()),
                InitSlot::Free => 1.0,
            })
            .fold(0.0, f64::max)
    }
}

/// `L(t, q_(0..r), u)` with actual order `r ≥ 1`.
#[derive(Clone, Debug)]
pub struct ControlledLagrangian {
    pub field: ScalarJetField,
}

impl ControlledLagrangian {
    pub fn new(field: ScalarJetField) -> Self {
        Self { field }
    }

    /// Actual order `r`.
    pub fn order(&self) -> usize {
        self.field.actual_order()
    }
}

/// Extended terminal cost `C(t, q_(0..r̃))`, vanishing on jets at `t = 0`.
#[derive(Clone, Debug)]
pub struct CostFunction {
    pub field: ScalarJetField,
}

impl CostFunction {
    pub fn new(field: ScalarJetField) -> Self {
        Self { field }
    }

    /// Actual order `r̃`.
    pub fn order(&self) -> usize {
        self.field.actual_order()
    }
}

/// Split of the coordinates `q` into state-type and adjoint-type blocks for
/// Lagrangians of the form `p·(x_(r) − f)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AdjointBlock {
    pub x: Vec<usize>,
    pub p: Vec<usize>,
}

/// Defining triple with its declared normal-form dynamics.
#[derive(Clone)]
pub struct DefiningTriple {
    pub name: String,
    pub controls: ControlSet,
    pub lagrangian: ControlledLagrangian,
    pub cost: CostFunction,
    pub dynamics: NormalFormDynamics,
    pub initial: InitialData,
    pub horizon: f64,
    pub jet_order: usize,
    pub adjoint: Option<AdjointBlock>,
    pub tol: Tolerance,
    cost_rate: ScalarJetField,
    boundary_lagrangian: ScalarJetField,
}

impl fmt::Debug for DefiningTriple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DefiningTriple")
            .field("name", &self.name)
            .field("r", &self.lagrangian.order())
            .field("n", &self.jet_order)
            .field("T", &self.horizon)
            .finish()
    }
}

impl DefiningTriple {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        name: impl Into<String>,
        controls: ControlSet,
        lagrangian: ControlledLagrangian,
        cost: CostFunction,
        dynamics: NormalFormDynamics,
        initial: InitialData,
        horizon: f64,
        jet_order: usize,
    ) -> Result<Self> {
        let n = dynamics.q_dim();
        if lagrangian.field.dim() != n || cost.field.dim() != n {
            return Err(Error::Dimension(format!(
                "Lagrangian/cost live on ℝ^{}/ℝ^{} but dynamics on ℝ^{n}",
                lagrangian.field.dim(),
                cost.field.dim()
            )));
        }
        if initial.len() != dynamics.state_dim() {
            return Err(Error::Dimension("initial-data slots do not match the state dimension".into()));
        }
        if controls.dim() != dynamics.n_controls() {
            return Err(Error::Dimension("control box does not match the dynamics".into()));
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::BadParams(format!("horizon must be positive, got {horizon}")));
        }
        let cost_rate = cost.field.total_derivative_field();
        let boundary_lagrangian = lagrangian.field.linear_combination(1.0, &cost_rate, 1.0);
        Ok(Self {
            name: name.into(),
            controls,
            lagrangian,
            cost,
            dynamics,
            initial,
            horizon,
            jet_order,
            adjoint: None,
            tol: Tolerance::default(),
            cost_rate,
            boundary_lagrangian,
        })
    }

    pub fn with_adjoint(mut self, block: AdjointBlock) -> Self {
        self.adjoint = Some(block);
        self
    }

    pub fn with_tolerance(mut self, tol: Tolerance) -> Self {
        self.tol = tol;
        self
    }

    /// `N`.
    pub fn q_dim(&self) -> usize {
        self.dynamics.q_dim()
    }

    /// `r`.
    pub fn order(&self) -> usize {
        self.lagrangian.order()
    }

    /// `dC/dt` as a field.
    pub fn cost_rate(&self) -> &ScalarJetField {
        &self.cost_rate
    }

    /// `L + dC/dt`.
    pub fn boundary_lagrangian(&self) -> &ScalarJetField {
        &self.boundary_lagrangian
    }

    /// Effective order of `L + dC/dt`: `max(r, r̃ + 1)`.
    pub fn boundary_order(&self) -> usize {
        self.boundary_lagrangian.actual_order()
    }

    /// Jet order needed to evaluate every boundary quantity.
    pub fn working_order(&self) -> usize {
        let r = self.order();
        (2 * r).max(2 * self.boundary_order()).max(self.cost.order() + 1)
    }

    /// Integrate the constraints from `y0` under `u` over `[0, T]`.
    pub fn trajectory(&self, u: &ControlCurve, y0: &[f64]) -> Result<Trajectory> {
        self.initial.admissible(y0)?;
        integrate(&self.dynamics, u, y0, 0.0, self.horizon, self.tol)
    }

    /// `C(j_T γ)`.
    pub fn terminal_cost(&self, traj: &Trajectory) -> Result<f64> {
        let jet = traj.jet(self.horizon, self.cost.order())?;
        Ok(self.cost.field.eval(&jet, &traj.control_value(self.horizon)))
    }
}

/// Controlled Euler–Lagrange operator
/// `E_i = Σ_{β=0..r} (−1)^β (d/dt)^β ∂L/∂q^i_(β)` at a jet of order `≥ 2r`.
pub fn el_operator(field: &ScalarJetField, jet: &JetPoint, u: &[f64]) -> Result<Vec<f64>> {
    let r = field.actual_order();
    (0..jet.dim())
        .map(|i| {
            let mut acc = 0.0;
            for beta in 0..=r {
                let d = iterated_total_derivatives(field, jet, u, Some(Coord::Q { i, beta }), beta)?;
                let sign = if beta % 2 == 0 { 1.0 } else { -1.0 };
                acc += sign * d[beta];
            }
            Ok(acc)
        })
        .collect()
}

/// Euler–Lagrange residual of the triple's Lagrangian along `traj` at `t`.
pub fn el_residual(triple: &DefiningTriple, traj: &Trajectory, t: f64) -> Result<Vec<f64>> {
    let jet = traj.jet(t, 2 * triple.order())?;
    el_operator(&triple.lagrangian.field, &jet, &traj.control_value(t))
}

/// Momentum sums
/// `M^i_β = Σ_{ε=0}^{r_eff−1−β} (−1)^ε (d/dt)^ε ∂F/∂q^i_(β+1+ε)`
/// for `β < r_eff`, returned block-major (`β·N + i`).
pub fn momenta(field: &ScalarJetField, r_eff: usize, jet: &JetPoint, u: &[f64]) -> Result<Vec<f64>> {
    let n = jet.dim();
    let mut out = vec![0.0; n * r_eff];
    for i in 0..n {
        for delta in 1..=r_eff {
            let d = iterated_total_derivatives(field, jet, u, Some(Coord::Q { i, beta: delta }), delta - 1)?;
            for (eps, val) in d.iter().enumerate() {
                let beta = delta - 1 - eps;
                let sign = if eps % 2 == 0 { 1.0 } else { -1.0 };
                out[beta * n + i] += sign * val;
            }
        }
    }
    Ok(out)
}

/// `u ↦ 𝒫(u) = −L(jet, u)` at a fixed jet.
#[derive(Clone, Debug)]
pub struct PontryaginFn {
    field: ScalarJetField,
    jet: JetPoint,
}

impl PontryaginFn {
    pub fn eval(&self, u: &[f64]) -> f64 {
        -self.field.eval(&self.jet, u)
    }

    /// `∂𝒫/∂u^a`.
    pub fn gradient(&self, u: &[f64]) -> Vec<f64> {
        (0..u.len()).map(|a| -partial(&self.field, &self.jet, u, Coord::U(a))).collect()
    }

    pub fn jet(&self) -> &JetPoint {
        &self.jet
    }
}

/// The function `𝒫` of the triple at `jet`.
pub fn pontryagin_p(triple: &DefiningTriple, jet: &JetPoint) -> PontryaginFn {
    PontryaginFn {
        field: triple.lagrangian.field.clone(),
        jet: jet.clone(),
    }
}

/// Number of uniform midpoint samples used by [`control_distance`].
pub const DISTANCE_SAMPLES: usize = 10_000;
/// Sup-norm threshold below which two control values count as equal.
pub const DISTANCE_THRESHOLD: f64 = 1e-12;

/// Measure of `{t : u1(t) ≠ u2(t)}` estimated on a uniform midpoint grid.
pub fn control_distance(u1: &ControlCurve, u2: &ControlCurve) -> f64 {
    let t_end = u1.horizon();
    let h = t_end / DISTANCE_SAMPLES as f64;
    let mut a = vec![0.0; u1.dim()];
    let mut b = vec![0.0; u2.dim()];
    let mut count = 0usize;
    for k in 0..DISTANCE_SAMPLES {
        let t = (k as f64 + 0.5) * h;
        u1.value_into(t, crate::control::Side::Right, &mut a);
        u2.value_into(t, crate::control::Side::Right, &mut b);
        let d = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        if d > DISTANCE_THRESHOLD {
            count += 1;
        }
    }
    count as f64 * h
}

/// One named pass/fail entry of a [`ValidationReport`].
#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// Diagnostics returned by [`validate_triple`].
#[derive(Clone, Debug, PartialEq)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(f, "{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail)?;
        }
        Ok(())
    }
}

struct ProbeControl {
    center: Vec<f64>,
    half: Vec<f64>,
}

impl ControlFn for ProbeControl {
    fn eval<S: Scalar>(&self, t: S, out: &mut [S]) {
        for (a, o) in out.iter_mut().enumerate() {
            *o = (t * (1.3 + 0.7 * a as f64)).sin() * (0.5 * self.half[a]) + self.center[a];
        }
    }
}

/// Audit a defining triple: order inequality, cost vanishing at `t = 0`,
/// actual-order declarations, dynamics/Euler–Lagrange consistency, and box
/// sanity. Failures are reported, never raised.
pub fn validate_triple(triple: &DefiningTriple, seed: u64) -> ValidationReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checks = Vec::new();
    let r = triple.order();
    let n = triple.jet_order;
    let mut push = |name: &str, passed: bool, detail: String| {
        checks.push(Check {
            name: name.into(),
            passed,
            detail,
        })
    };

    push(
        "order-inequality",
        2 * r < n,
        format!("2r+1 = {} vs n = {n}", 2 * r + 1),
    );

    let lower = triple.controls.lower();
    let upper = triple.controls.upper();
    let box_ok = lower.iter().zip(upper).all(|(l, u)| l < u);
    push("control-box", box_ok, format!("lower {lower:?}, upper {upper:?}"));

    let order = n.max(triple.cost.order());
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let mut p = JetPoint::zeros(0.0, triple.q_dim(), order);
        for x in p.flat_mut() {
            *x = rng.random_range(-2.0..2.0);
        }
        worst = worst.max(triple.cost.field.eval(&p, &triple.controls.center()).abs());
    }
    push("cost-vanishes-at-t0", worst <= 1e-12, format!("max |C| on random t=0 jets = {worst:e}"));

    let m = triple.controls.dim();
    let dl = actual_order_audit(&triple.lagrangian.field, order, m, &mut rng, 20);
    let dc = actual_order_audit(&triple.cost.field, order, m, &mut rng, 20);
    push(
        "actual-order-audit",
        dl == 0.0 && dc == 0.0,
        format!("max deviation L {dl:e}, C {dc:e}"),
    );

    let dyn_check = (|| -> Result<(f64, f64)> {
        let u = ControlCurve::analytic(
            triple.horizon,
            m,
            ProbeControl {
                center: triple.controls.center(),
                half: lower.iter().zip(upper).map(|(l, u)| 0.5 * (u - l)).collect(),
            },
        );
        let y0 = triple.initial.sample(&mut rng);
        let traj = triple.trajectory(&u, &y0)?;
        let scale = 1.0
            + traj
                .node_states()
                .iter()
                .flat_map(|y| y.iter())
                .fold(0.0_f64, |a, v| a.max(v.abs()));
        let nodes = traj.nodes();
        let stride = (nodes.len() / 20).max(1);
        let mut worst: f64 = 0.0;
        for w in nodes.windows(2).step_by(stride) {
            let res = el_residual(triple, &traj, 0.5 * (w[0] + w[1]))?;
            worst = worst.max(res.iter().fold(0.0, |a, v| a.max(v.abs())));
        }
        Ok((worst, 10.0 * triple.tol.rtol * scale))
    })();
    match dyn_check {
        Ok((res, bound)) => push(
            "dynamics-consistency",
            res <= bound,
            format!("max EL residual {res:e} (bound {bound:e})"),
        ),
        Err(e) => push("dynamics-consistency", false, format!("probe failed: {e}")),
    }

    ValidationReport { checks }
}

/// Minimize the terminal cost over one [`InitSlot::Range`] component of the
/// initial state: a 21-point scan followed by golden-section refinement.
/// Returns `(optimal value, optimal cost)`.
pub fn optimize_range_slot(
    triple: &DefiningTriple,
    u: &ControlCurve,
    base: &[f64],
    slot: usize,
) -> Result<(f64, f64)> {
    let (lo, hi) = match triple.initial.slots().get(slot) {
        Some(InitSlot::Range(lo, hi)) => (*lo, *hi),
        _ => return Err(Error::BadParams(format!("slot {slot} is not a range slot"))),
    };
    let cost = |v: f64| -> Result<f64> {
        let mut y = base.to_vec();
        y[slot] = v;
        triple.terminal_cost(&triple.trajectory(u, &y)?)
    };
    if hi <= lo {
        return Ok((lo, cost(lo)?));
    }
    let n = 20;
    let grid: Vec<f64> = (0..=n).map(|k| lo + (hi - lo) * k as f64 / n as f64).collect();
    let vals: Vec<f64> = grid.iter().map(|&v| cost(v)).collect::<Result<_>>()?;
    let k = vals
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .map(|(k, _)| k)
        .unwrap();
    let (mut a, mut b) = (grid[k.saturating_sub(1)], grid[(k + 1).min(n)]);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (cost(c)?, cost(d)?);
    while (b - a).abs() > 1e-13 * (1.0 + a.abs().max(b.abs())) {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = cost(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = cost(d)?;
        }
    }
    let mut best = (0.5 * (a + b), cost(0.5 * (a + b))?);
    for (v, f) in grid.iter().zip(&vals) {
        if *f < best.1 {
            best = (*v, *f);
        }
    }
    Ok(best)
}
