//! Normal-form realizations `ẏ = g(t, y, u)`, adaptive Dormand–Prince 5(4)
//! integration with dense output, jet reconstruction along trajectories, and
//! an empirical Lipschitz probe for the control-to-trajectory map.
//!
//! Jets of the original variables are read from the state through per
//! coordinate *chains* of state indices (`q`, `q̇`, …), extended by one
//! right-hand-side evaluation and, beyond that, by Taylor-mode
//! differentiation of the right-hand side along the flow. Sampled states are
//! never differenced.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::control::{ControlCurve, Side};
use crate::error::{Error, Result};
use crate::jetspace::{JetArgs, JetPoint};
use crate::problem::{control_distance, DefiningTriple};
use crate::scalar::{factorial, Scalar, Taylor, Tf, TAYLOR_CAPACITY};

/// A vector field written generically over [`Scalar`].
pub trait VectorField: Send + Sync + 'static {
    fn eval<S: Scalar>(&self, t: S, y: &[S], u: &[S], out: &mut [S]);
}

/// Solved highest-order equations `q_(m) = f(t, q_(0..m−1), u)`.
pub trait HigherOrderRhs: Send + Sync + 'static {
    fn eval<S: Scalar>(&self, t: S, q: JetArgs<'_, S>, u: &[S], out: &mut [S]);
}

type RhsF64 = Arc<dyn Fn(f64, &[f64], &[f64], &mut [f64]) + Send + Sync>;
type RhsTf = Arc<dyn Fn(Tf, &[Tf], &[Tf], &mut [Tf]) + Send + Sync>;

/// Relative/absolute local error tolerances.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerance {
    pub rtol: f64,
    pub atol: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            rtol: 1e-8,
            atol: 1e-10,
        }
    }
}

impl Tolerance {
    pub fn new(rtol: f64, atol: f64) -> Self {
        Self { rtol, atol }
    }

    /// `rtol = 1e-12`, `atol = 1e-14`.
    pub fn tight() -> Self {
        Self::new(1e-12, 1e-14)
    }
}

/// First-order realization of a system of controlled differential equations.
#[derive(Clone)]
pub struct NormalFormDynamics {
    state_dim: usize,
    n_controls: usize,
    order: usize,
    chains: Vec<Vec<usize>>,
    rhs: RhsF64,
    rhs_tf: Option<RhsTf>,
    clamp_radius: Option<f64>,
}

impl fmt::Debug for NormalFormDynamics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NormalFormDynamics")
            .field("state_dim", &self.state_dim)
            .field("order", &self.order)
            .field("chains", &self.chains)
            .field("taylor", &self.rhs_tf.is_some())
            .field("clamp_radius", &self.clamp_radius)
            .finish()
    }
}

impl NormalFormDynamics {
    /// Realization from a generic vector field (jets of any order available).
    ///
    /// `chains[i]` lists the state indices holding `q^i, q̇^i, …`.
    pub fn new<F: VectorField>(
        state_dim: usize,
        n_controls: usize,
        order: usize,
        chains: Vec<Vec<usize>>,
        f: F,
    ) -> Result<Self> {
        let f = Arc::new(f);
        let g = f.clone();
        Self::assemble(
            state_dim,
            n_controls,
            order,
            chains,
            Arc::new(move |t, y, u, out| f.eval(t, y, u, out)),
            Some(Arc::new(move |t, y, u, out| g.eval(t, y, u, out))),
        )
    }

    /// Realization from a plain closure; jets beyond the chains plus one
    /// derivative are unavailable.
    pub fn from_f64<F>(state_dim: usize, n_controls: usize, order: usize, chains: Vec<Vec<usize>>, f: F) -> Result<Self>
    where
        F: Fn(f64, &[f64], &[f64], &mut [f64]) + Send + Sync + 'static,
    {
        Self::assemble(state_dim, n_controls, order, chains, Arc::new(f), None)
    }

    fn assemble(
        state_dim: usize,
        n_controls: usize,
        order: usize,
        chains: Vec<Vec<usize>>,
        rhs: RhsF64,
        rhs_tf: Option<RhsTf>,
    ) -> Result<Self> {
        if chains.is_empty() || chains.iter().any(|c| c.is_empty() || c.iter().any(|&k| k >= state_dim)) {
            return Err(Error::Dimension("jet chains must be nonempty and index the state".into()));
        }
        Ok(Self {
            state_dim,
            n_controls,
            order,
            chains,
            rhs,
            rhs_tf,
            clamp_radius: None,
        })
    }

    /// Same dynamics with the right-hand side frozen outside a ball of the
    /// given radius (bounded normal type for probes; `f64` path only).
    pub fn with_clamp(mut self, radius: f64) -> Self {
        self.clamp_radius = Some(radius);
        self
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn n_controls(&self) -> usize {
        self.n_controls
    }

    /// Order of the realized constraint system.
    pub fn order(&self) -> usize {
        self.order
    }

    /// Dimension `N` of the original variables.
    pub fn q_dim(&self) -> usize {
        self.chains.len()
    }

    pub fn chains(&self) -> &[Vec<usize>] {
        &self.chains
    }

    /// `true` when Taylor-mode jet reconstruction is available.
    pub fn has_taylor(&self) -> bool {
        self.rhs_tf.is_some()
    }

    /// Deepest jet order reconstructible without a Taylor-mode right-hand side.
    pub fn direct_depth(&self) -> usize {
        self.chains.iter().map(Vec::len).min().unwrap_or(0)
    }

    /// Right-hand side (with clamping when configured).
    pub fn eval(&self, t: f64, y: &[f64], u: &[f64], out: &mut [f64]) {
        match self.clamp_radius {
            Some(r) => {
                let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
                if norm > r {
                    let z: Vec<f64> = y.iter().map(|v| v * r / norm).collect();
                    (self.rhs)(t, &z, u, out);
                } else {
                    (self.rhs)(t, y, u, out);
                }
            }
            None => (self.rhs)(t, y, u, out),
        }
    }

    /// Reconstruct the jet of order `order` of the original variables from a
    /// state `y` at time `t`, with the control taken from `side`.
    pub fn jet_from_state(&self, t: f64, y: &[f64], control: &ControlCurve, side: Side, order: usize) -> Result<JetPoint> {
        let n = self.q_dim();
        let mut jet = JetPoint::zeros(t, n, order);
        if order <= self.direct_depth() {
            let mut f = vec![0.0; self.state_dim];
            if order == self.direct_depth() {
                let u = control.value_side(t, side);
                self.eval(t, y, &u, &mut f);
            }
            for (i, chain) in self.chains.iter().enumerate() {
                for beta in 0..=order {
                    let v = if beta < chain.len() {
                        y[chain[beta]]
                    } else {
                        f[chain[beta - 1]]
                    };
                    jet.set(i, beta, v);
                }
            }
            return Ok(jet);
        }
        let available = if self.rhs_tf.is_some() && control.has_taylor() {
            TAYLOR_CAPACITY - 1
        } else {
            self.direct_depth()
        };
        if order > available {
            return Err(Error::OrderUnavailable {
                requested: order,
                available,
            });
        }
        let tf = self.rhs_tf.as_ref().expect("checked above");
        let len = order + 1;
        let uc = control.taylor(t, side, len).expect("checked above");
        // coefficients[j][k] = k-th Taylor coefficient of y_j
        let mut coeffs: Vec<Vec<f64>> = y.iter().map(|&v| vec![v]).collect();
        let mut out = vec![Tf::cst(0.0); self.state_dim];
        for k in 0..order {
            let ys: Vec<Tf> = coeffs.iter().map(|c| Taylor::from_coeffs(c)).collect();
            let ts = Tf::linear(t, 1.0, k + 1);
            let us: Vec<Tf> = uc.iter().map(|s| Taylor::from_coeffs(&s.coeffs()[..(k + 1).min(s.len())])).collect();
            tf(ts, &ys, &us, &mut out);
            for (c, o) in coeffs.iter_mut().zip(&out) {
                c.push(o.coeff(k) / (k as f64 + 1.0));
            }
        }
        for (i, chain) in self.chains.iter().enumerate() {
            for beta in 0..=order {
                jet.set(i, beta, coeffs[chain[0]][beta] * factorial(beta));
            }
        }
        Ok(jet)
    }
}

/// Chain reduction of `q_(m) = f(t, q_(0..m−1), u)` for `q ∈ ℝ^N`.
///
/// State layout is block-major `[q_(0), q_(1), …, q_(m−1)]`.
pub fn reduce_to_first_order<F: HigherOrderRhs>(
    highest: F,
    order: usize,
    state_dim: usize,
    n_controls: usize,
) -> NormalFormDynamics {
    struct Chain<F> {
        f: F,
        m: usize,
        n: usize,
    }
    impl<F: HigherOrderRhs> VectorField for Chain<F> {
        fn eval<S: Scalar>(&self, t: S, y: &[S], u: &[S], out: &mut [S]) {
            let (m, n) = (self.m, self.n);
            out[..(m - 1) * n].copy_from_slice(&y[n..m * n]);
            self.f.eval(t, JetArgs::new(n, &y[..m * n]), u, &mut out[(m - 1) * n..]);
        }
    }
    assert!(order >= 1 && state_dim >= 1);
    let chains = (0..state_dim)
        .map(|i| (0..order).map(|b| b * state_dim + i).collect())
        .collect();
    NormalFormDynamics::new(
        state_dim * order,
        n_controls,
        order,
        chains,
        Chain {
            f: highest,
            m: order,
            n: state_dim,
        },
    )
    .expect("chain layout is valid")
}

#[derive(Clone, Debug)]
struct Step {
    /// Origin of the step in integration direction.
    t0: f64,
    /// Signed step size.
    h: f64,
    /// Dense-output coefficients, five blocks of `state_dim`.
    rcont: Vec<f64>,
}

/// Solution of a normal-form system with dense output on `[lo, hi]`.
#[derive(Clone)]
pub struct Trajectory {
    dynamics: NormalFormDynamics,
    control: ControlCurve,
    y_start: Vec<f64>,
    t_start: f64,
    t_end: f64,
    ts: Vec<f64>,
    ys: Vec<Vec<f64>>,
    steps: Vec<Step>,
}

impl fmt::Debug for Trajectory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "Trajectory([{}, {}], {} steps, control {:?})",
            self.t_start,
            self.t_end,
            self.steps.len(),
            self.control
        )
    }
}

// Dormand–Prince 5(4) tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const MAX_STEPS: usize = 1_000_000;

/// Integrate `dyn` from `(t0, y0)` to `t1` (either direction) under control
/// `u`, stopping exactly at every control breakpoint in between.
pub fn integrate(
    dynamics: &NormalFormDynamics,
    u: &ControlCurve,
    y0: &[f64],
    t0: f64,
    t1: f64,
    tol: Tolerance,
) -> Result<Trajectory> {
    let n = dynamics.state_dim;
    if y0.len() != n {
        return Err(Error::Dimension(format!("initial state has length {}, expected {n}", y0.len())));
    }
    if u.dim() != dynamics.n_controls {
        return Err(Error::Dimension(format!(
            "control has dimension {}, dynamics expects {}",
            u.dim(),
            dynamics.n_controls
        )));
    }
    if y0.iter().any(|v| !v.is_finite()) {
        return Err(Error::ConstraintViolation("initial state is not finite".into()));
    }
    let dir = if t1 >= t0 { 1.0 } else { -1.0 };
    let (lo, hi) = if dir > 0.0 { (t0, t1) } else { (t1, t0) };
    let mut knots: Vec<f64> = u.breakpoints().into_iter().filter(|b| *b > lo && *b < hi).collect();
    if dir < 0.0 {
        knots.reverse();
    }
    knots.push(t1);

    let mut ts = vec![t0];
    let mut ys = vec![y0.to_vec()];
    let mut steps: Vec<Step> = Vec::new();
    let mut t = t0;
    let mut y = y0.to_vec();
    let mut h_guess: Option<f64> = None;
    let mut ubuf = vec![0.0; u.dim()];
    let (mut k1, mut k2, mut k3, mut k4) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let (mut k5, mut k6, mut k7) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let mut ytmp = vec![0.0; n];
    let mut ynew = vec![0.0; n];
    let mut count = 0usize;

    for &b in &knots {
        if (b - t) * dir <= 0.0 {
            continue;
        }
        let seg_hi = t.max(b);
        let f = |tt: f64, yy: &[f64], out: &mut [f64], ub: &mut [f64]| {
            let side = if tt >= seg_hi { Side::Left } else { Side::Right };
            u.value_into(tt, side, ub);
            dynamics.eval(tt, yy, ub, out);
        };
        f(t, &y, &mut k1, &mut ubuf);
        let seg_len = (b - t).abs();
        let mut h = match h_guess {
            Some(g) => g.min(seg_len),
            None => initial_step(&f, t, &y, &k1, dir, seg_len, tol, &mut ubuf),
        } * dir;
        let mut last_rejected = false;
        loop {
            count += 1;
            if count > MAX_STEPS || h.abs() < 1e-14 * t.abs().max(1.0) {
                return Err(Error::StepSizeUnderflow { t, h });
            }
            let remaining = b - t;
            let hit_end = h.abs() >= remaining.abs() * (1.0 - 1e-12);
            if hit_end {
                h = remaining;
            }
            let t_new = if hit_end { b } else { t + h };
            for i in 0..n {
                ytmp[i] = y[i] + h * A21 * k1[i];
            }
            f(t + C2 * h, &ytmp, &mut k2, &mut ubuf);
            for i in 0..n {
                ytmp[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
            }
            f(t + C3 * h, &ytmp, &mut k3, &mut ubuf);
            for i in 0..n {
                ytmp[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
            }
            f(t + C4 * h, &ytmp, &mut k4, &mut ubuf);
            for i in 0..n {
                ytmp[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
            }
            f(t + C5 * h, &ytmp, &mut k5, &mut ubuf);
            for i in 0..n {
                ytmp[i] = y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
            }
            f(t_new, &ytmp, &mut k6, &mut ubuf);
            for i in 0..n {
                ynew[i] = y[i] + h * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
            }
            f(t_new, &ynew, &mut k7, &mut ubuf);
            let mut err = 0.0;
            for i in 0..n {
                let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
                let sk = tol.atol + tol.rtol * y[i].abs().max(ynew[i].abs());
                err += (e / sk) * (e / sk);
            }
            err = (err / n.max(1) as f64).sqrt();
            if !err.is_finite() {
                h *= 0.2;
                last_rejected = true;
                continue;
            }
            let fac = (0.9 * err.powf(-0.2)).clamp(0.2, 5.0);
            if err <= 1.0 {
                let mut rcont = vec![0.0; 5 * n];
                for i in 0..n {
                    let ydiff = ynew[i] - y[i];
                    let bspl = h * k1[i] - ydiff;
                    rcont[i] = y[i];
                    rcont[n + i] = ydiff;
                    rcont[2 * n + i] = bspl;
                    rcont[3 * n + i] = ydiff - h * k7[i] - bspl;
                    rcont[4 * n + i] =
                        h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
                }
                steps.push(Step { t0: t, h, rcont });
                std::mem::swap(&mut k1, &mut k7);
                t = t_new;
                y.copy_from_slice(&ynew);
                ts.push(t);
                ys.push(y.clone());
                let grow = if last_rejected { fac.min(1.0) } else { fac };
                h_guess = Some((h * grow).abs());
                h *= grow;
                last_rejected = false;
                if hit_end {
                    break;
                }
            } else {
                h *= fac.min(1.0);
                last_rejected = true;
            }
        }
    }
    if dir < 0.0 {
        ts.reverse();
        ys.reverse();
        steps.reverse();
    }
    Ok(Trajectory {
        dynamics: dynamics.clone(),
        control: u.clone(),
        y_start: y0.to_vec(),
        t_start: t0,
        t_end: t1,
        ts,
        ys,
        steps,
    })
}

#[allow(clippy::too_many_arguments)]
fn initial_step<F>(f: &F, t: f64, y: &[f64], f0: &[f64], dir: f64, seg_len: f64, tol: Tolerance, ub: &mut [f64]) -> f64
where
    F: Fn(f64, &[f64], &mut [f64], &mut [f64]),
{
    let n = y.len().max(1) as f64;
    let sk: Vec<f64> = y.iter().map(|v| tol.atol + tol.rtol * v.abs()).collect();
    let norm = |v: &[f64]| (v.iter().zip(&sk).map(|(a, s)| (a / s) * (a / s)).sum::<f64>() / n).sqrt();
    let d0 = norm(y);
    let d1 = norm(f0);
    let mut h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h0 = h0.min(seg_len);
    let y1: Vec<f64> = y.iter().zip(f0).map(|(a, b)| a + dir * h0 * b).collect();
    let mut f1 = vec![0.0; y.len()];
    f(t + dir * h0, &y1, &mut f1, ub);
    let diff: Vec<f64> = f1.iter().zip(f0).map(|(a, b)| a - b).collect();
    let d2 = norm(&diff) / h0;
    let dm = d1.max(d2);
    let h1 = if dm <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / dm).powf(0.2)
    };
    (100.0 * h0).min(h1).min(seg_len)
}

impl Trajectory {
    pub fn dynamics(&self) -> &NormalFormDynamics {
        &self.dynamics
    }

    pub fn control(&self) -> &ControlCurve {
        &self.control
    }

    /// State at the integration start.
    pub fn initial_state(&self) -> &[f64] {
        &self.y_start
    }

    /// Time where integration started (0 for forward runs, `T` for backward).
    pub fn start_time(&self) -> f64 {
        self.t_start
    }

    /// Ascending covered interval.
    pub fn range(&self) -> (f64, f64) {
        (self.ts[0], *self.ts.last().unwrap())
    }

    /// Ascending mesh nodes (every control breakpoint is among them).
    pub fn nodes(&self) -> &[f64] {
        &self.ts
    }

    /// States at [`Trajectory::nodes`].
    pub fn node_states(&self) -> &[Vec<f64>] {
        &self.ys
    }

    /// State at the integration end.
    pub fn final_state(&self) -> &[f64] {
        if self.t_end >= self.t_start {
            self.ys.last().unwrap()
        } else {
            &self.ys[0]
        }
    }

    fn check_time(&self, t: f64) -> Result<f64> {
        let (lo, hi) = self.range();
        let slack = 1e-12 * (hi - lo).abs().max(1.0);
        if t < lo - slack || t > hi + slack || t.is_nan() {
            return Err(Error::TimeOutOfRange { t, lo, hi });
        }
        Ok(t.clamp(lo, hi))
    }

    /// Dense-output state at `t`.
    pub fn state(&self, t: f64) -> Result<Vec<f64>> {
        let t = self.check_time(t)?;
        let k = self.ts.partition_point(|x| *x <= t);
        if k > 0 && self.ts[k - 1] == t {
            return Ok(self.ys[k - 1].clone());
        }
        let s = &self.steps[(k - 1).min(self.steps.len() - 1)];
        let n = self.dynamics.state_dim;
        let th = (t - s.t0) / s.h;
        let th1 = 1.0 - th;
        Ok((0..n)
            .map(|i| {
                let r = |j: usize| s.rcont[j * n + i];
                r(0) + th * (r(1) + th1 * (r(2) + th * (r(3) + th1 * r(4))))
            })
            .collect())
    }

    /// Jet of the original variables at `t` (control side by default
    /// convention: right limit, left limit at the horizon end).
    pub fn jet(&self, t: f64, order: usize) -> Result<JetPoint> {
        let side = if t >= self.range().1 { Side::Left } else { Side::Right };
        self.jet_side(t, order, side)
    }

    /// Jet at `t` with an explicit control side.
    pub fn jet_side(&self, t: f64, order: usize, side: Side) -> Result<JetPoint> {
        let y = self.state(t)?;
        self.dynamics.jet_from_state(t, &y, &self.control, side, order)
    }

    /// Control value used at `t` under the default side convention.
    pub fn control_value(&self, t: f64) -> Vec<f64> {
        let side = if t >= self.range().1 { Side::Left } else { Side::Right };
        self.control.value_side(t, side)
    }

    /// Step intervals `(a, b)` in ascending order.
    pub fn intervals(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.ts.windows(2).map(|w| (w[0], w[1]))
    }
}

/// Jet of a trajectory at `t`; see [`Trajectory::jet`].
pub fn jet_of_trajectory(traj: &Trajectory, t: f64, order: usize) -> Result<JetPoint> {
    traj.jet(t, order)
}

/// Outcome of [`lipschitz_probe`].
#[derive(Clone, Debug, PartialEq)]
pub struct LipschitzReport {
    pub pairs: usize,
    pub skipped: usize,
    pub max_ratio: f64,
    pub mean_ratio: f64,
    /// Description of the metric on initial data.
    pub metric: String,
}

/// Empirical ratios `‖γ − γ′‖ / (dist(u, u′) + ρ(σ, σ′))` over seeded random
/// pairs of initial data and needle-perturbed controls.
///
/// The trajectory norm is the sup over a uniform 400-point grid of the
/// Euclidean distance between normal-form states; `ρ` is Euclidean on the
/// initial states. Dynamics are clamped outside a ball of radius
/// `10·(1 + scale of the initial-data box)`.
pub fn lipschitz_probe(triple: &DefiningTriple, n_pairs: usize, seed: u64) -> Result<LipschitzReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let t_end = triple.horizon;
    let radius = 10.0 * (1.0 + triple.initial.scale());
    let dynamics = triple.dynamics.clone().with_clamp(radius);
    let controls = &triple.controls;
    let mut ratios = Vec::with_capacity(n_pairs);
    let mut skipped = 0;
    for _ in 0..n_pairs {
        let s1 = triple.initial.sample(&mut rng);
        let s2 = triple.initial.sample(&mut rng);
        let level: Vec<f64> = (0..controls.dim())
            .map(|a| rng.random_range(controls.lower()[a]..=controls.upper()[a]))
            .collect();
        let omega: Vec<f64> = (0..controls.dim())
            .map(|a| rng.random_range(controls.lower()[a]..=controls.upper()[a]))
            .collect();
        let width = rng.random_range(0.01..=0.2_f64).min(0.5 * t_end);
        let tau = rng.random_range(width..=t_end);
        let u1 = ControlCurve::constant(t_end, level);
        let u2 = ControlCurve::needle(&u1, tau, width, omega, 0.0, false);
        let g1 = integrate(&dynamics, &u1, &s1, 0.0, t_end, triple.tol)?;
        let g2 = integrate(&dynamics, &u2, &s2, 0.0, t_end, triple.tol)?;
        let rho = s1.iter().zip(&s2).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        let denom = control_distance(&u1, &u2) + rho;
        if denom <= 0.0 {
            skipped += 1;
            continue;
        }
        let mut sup: f64 = 0.0;
        for k in 0..=400 {
            let t = t_end * k as f64 / 400.0;
            let a = g1.state(t)?;
            let b = g2.state(t)?;
            sup = sup.max(a.iter().zip(&b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt());
        }
        ratios.push(sup / denom);
    }
    let max_ratio = ratios.iter().cloned().fold(0.0, f64::max);
    let mean_ratio = if ratios.is_empty() {
        0.0
    } else {
        ratios.iter().sum::<f64>() / ratios.len() as f64
    };
    Ok(LipschitzReport {
        pairs: ratios.len(),
        skipped,
        max_ratio,
        mean_ratio,
        metric: "euclidean on initial states; sup-euclidean on normal-form states".into(),
    })
}
