//! Control boxes `K` and control curves `u(t)`.
//!
//! Control curves are right-continuous on `[0, T)` with a left limit at `T`.
//! Every curve exposes its breakpoints (points where it, or one of its first
//! derivatives, may jump); integrators stop exactly on them and evaluate the
//! control from the inside of the current segment via [`Side`].

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::scalar::{Scalar, Tf};

/// Box `K = Π [lowerₐ, upperₐ]` with an inflation margin defining `Ǩ`.
#[derive(Clone, Debug, PartialEq)]
pub struct ControlSet {
    lower: Vec<f64>,
    upper: Vec<f64>,
    margin: f64,
}

impl ControlSet {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>, margin: f64) -> Result<Self> {
        if lower.len() != upper.len() || lower.is_empty() {
            return Err(Error::Dimension("control box bounds must be nonempty and equal-length".into()));
        }
        if lower.iter().zip(&upper).any(|(l, u)| !(l.is_finite() && u.is_finite() && l <= u)) {
            return Err(Error::BadParams("control box needs finite lower ≤ upper".into()));
        }
        if !(margin >= 0.0) {
            return Err(Error::BadParams("control box margin must be nonnegative".into()));
        }
        Ok(Self { lower, upper, margin })
    }

    /// `[-b, b]^m`.
    pub fn symmetric(m: usize, b: f64) -> Self {
        Self::new(vec![-b; m], vec![b; m], 0.0).expect("symmetric box is valid")
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn margin(&self) -> f64 {
        self.margin
    }

    /// Membership in `K` up to `tol`.
    pub fn contains(&self, u: &[f64], tol: f64) -> bool {
        u.len() == self.dim()
            && u.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(x, (l, h))| *x >= l - tol && *x <= h + tol)
    }

    /// Membership in the inflated hull `Ǩ`.
    pub fn contains_hull(&self, u: &[f64]) -> bool {
        self.contains(u, self.margin + 1e-12)
    }

    /// Box centre.
    pub fn center(&self) -> Vec<f64> {
        self.lower.iter().zip(&self.upper).map(|(l, h)| 0.5 * (l + h)).collect()
    }

    /// Tensor grid with `per_axis` equispaced points per component.
    pub fn grid(&self, per_axis: usize) -> Vec<Vec<f64>> {
        let per_axis = per_axis.max(1);
        let axis = |a: usize| -> Vec<f64> {
            if per_axis == 1 {
                return vec![0.5 * (self.lower[a] + self.upper[a])];
            }
            (0..per_axis)
                .map(|k| {
                    self.lower[a] + (self.upper[a] - self.lower[a]) * k as f64 / (per_axis - 1) as f64
                })
                .collect()
        };
        let mut out = vec![Vec::new()];
        for a in 0..self.dim() {
            let vals = axis(a);
            out = out
                .into_iter()
                .flat_map(|p| {
                    vals.iter().map(move |v| {
                        let mut q = p.clone();
                        q.push(*v);
                        q
                    })
                })
                .collect();
        }
        out
    }
}

/// Which one-sided limit to take at a breakpoint.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// A control written generically so that its Taylor expansion is available.
pub trait ControlFn: Send + Sync + 'static {
    fn eval<S: Scalar>(&self, t: S, out: &mut [S]);
}

type CtrlF64 = Arc<dyn Fn(f64, &mut [f64]) + Send + Sync>;
type CtrlTf = Arc<dyn Fn(Tf, &mut [Tf]) + Send + Sync>;

#[derive(Clone)]
enum Kind {
    Constant(Vec<f64>),
    Analytic {
        f: CtrlF64,
        tf: Option<CtrlTf>,
    },
    Piecewise {
        breaks: Vec<f64>,
        values: Vec<Vec<f64>>,
    },
    Interpolated {
        times: Vec<f64>,
        values: Vec<Vec<f64>>,
    },
    Needle {
        base: Arc<ControlCurve>,
        tau: f64,
        eps: f64,
        omega: Vec<f64>,
        ramp: f64,
        smooth: bool,
    },
    Blend {
        a: Arc<ControlCurve>,
        b: Arc<ControlCurve>,
        s: f64,
    },
}

/// Control curve `u : [0, T] → ℝ^M`.
#[derive(Clone)]
pub struct ControlCurve {
    horizon: f64,
    dim: usize,
    kind: Kind,
}

impl fmt::Debug for ControlCurve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ControlCurve({}, T={}, M={})", self.kind_name(), self.horizon, self.dim)
    }
}

/// Quintic smoothstep `6x⁵ − 15x⁴ + 10x³` (C², monotone on `[0, 1]`).
pub fn smoothstep<S: Scalar>(x: S) -> S {
    let x2 = x * x;
    let x3 = x2 * x;
    x3 * (x * (x * 6.0 - 15.0) + 10.0)
}

impl ControlCurve {
    /// `u ≡ value`.
    pub fn constant(horizon: f64, value: Vec<f64>) -> Self {
        Self {
            horizon,
            dim: value.len(),
            kind: Kind::Constant(value),
        }
    }

    /// Smooth analytic control with exact Taylor expansions.
    pub fn analytic<F: ControlFn>(horizon: f64, dim: usize, f: F) -> Self {
        let f = Arc::new(f);
        let g = f.clone();
        Self {
            horizon,
            dim,
            kind: Kind::Analytic {
                f: Arc::new(move |t, out| f.eval(t, out)),
                tf: Some(Arc::new(move |t, out| g.eval(t, out))),
            },
        }
    }

    /// Smooth control from a plain closure (value only; no Taylor expansion).
    pub fn from_fn<F>(horizon: f64, dim: usize, f: F) -> Self
    where
        F: Fn(f64, &mut [f64]) + Send + Sync + 'static,
    {
        Self {
            horizon,
            dim,
            kind: Kind::Analytic {
                f: Arc::new(f),
                tf: None,
            },
        }
    }

    /// Piecewise-constant control: `values[k]` on `[breaks[k−1], breaks[k])`.
    pub fn piecewise_constant(horizon: f64, breaks: Vec<f64>, values: Vec<Vec<f64>>) -> Result<Self> {
        if values.len() != breaks.len() + 1 {
            return Err(Error::Dimension("piecewise control needs one more value than breaks".into()));
        }
        if breaks.windows(2).any(|w| w[0] >= w[1]) || breaks.iter().any(|b| *b <= 0.0 || *b >= horizon) {
            return Err(Error::BadParams("breaks must be strictly increasing inside (0, T)".into()));
        }
        let dim = values[0].len();
        if values.iter().any(|v| v.len() != dim) {
            return Err(Error::Dimension("piecewise values must share a dimension".into()));
        }
        Ok(Self {
            horizon,
            dim,
            kind: Kind::Piecewise { breaks, values },
        })
    }

    /// Piecewise-linear interpolation of samples (`times` must span `[0, T]`).
    pub fn interpolated(times: Vec<f64>, values: Vec<Vec<f64>>) -> Result<Self> {
        if times.len() < 2 || times.len() != values.len() {
            return Err(Error::Dimension("interpolated control needs ≥ 2 matching samples".into()));
        }
        if times.windows(2).any(|w| w[0] >= w[1]) || times[0] != 0.0 {
            return Err(Error::BadParams("sample times must start at 0 and increase".into()));
        }
        let dim = values[0].len();
        Ok(Self {
            horizon: *times.last().unwrap(),
            dim,
            kind: Kind::Interpolated { times, values },
        })
    }

    /// Needle overlay: `ω` on `[τ−ε, τ)`, the base curve elsewhere; with
    /// `smooth`, jumps are replaced by quintic ramps of width `ramp·ε²`
    /// on `[τ−ε−ramp·ε², τ−ε]` and `[τ, τ+ramp·ε²]`.
    pub fn needle(base: &ControlCurve, tau: f64, eps: f64, omega: Vec<f64>, ramp: f64, smooth: bool) -> Self {
        assert_eq!(omega.len(), base.dim, "needle ceiling has wrong dimension");
        Self {
            horizon: base.horizon,
            dim: base.dim,
            kind: Kind::Needle {
                base: Arc::new(base.clone()),
                tau,
                eps,
                omega,
                ramp,
                smooth,
            },
        }
    }

    /// `(1 − s)·a + s·b`.
    pub fn blend(a: &ControlCurve, b: &ControlCurve, s: f64) -> Self {
        assert_eq!(a.dim, b.dim, "blended controls differ in dimension");
        if s == 0.0 {
            return a.clone();
        }
        Self {
            horizon: a.horizon,
            dim: a.dim,
            kind: Kind::Blend {
                a: Arc::new(a.clone()),
                b: Arc::new(b.clone()),
                s,
            },
        }
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind_name(&self) -> &'static str {
        match &self.kind {
            Kind::Constant(_) => "constant",
            Kind::Analytic { .. } => "analytic",
            Kind::Piecewise { .. } => "piecewise-constant",
            Kind::Interpolated { .. } => "interpolated",
            Kind::Needle { smooth: false, .. } => "needle",
            Kind::Needle { smooth: true, .. } => "smoothed-needle",
            Kind::Blend { .. } => "blend",
        }
    }

    /// Default side at `t`: right limit, except the left limit at `T`.
    pub fn default_side(&self, t: f64) -> Side {
        if t >= self.horizon {
            Side::Left
        } else {
            Side::Right
        }
    }

    /// `u(t)` with the default side convention.
    pub fn value(&self, t: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.value_into(t, self.default_side(t), &mut out);
        out
    }

    /// One-sided value.
    pub fn value_side(&self, t: f64, side: Side) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.value_into(t, side, &mut out);
        out
    }

    /// One-sided value written into `out`.
    pub fn value_into(&self, t: f64, side: Side, out: &mut [f64]) {
        match &self.kind {
            Kind::Constant(v) => out.copy_from_slice(v),
            Kind::Analytic { f, .. } => f(t, out),
            Kind::Piecewise { breaks, values } => {
                out.copy_from_slice(&values[piece_index(breaks, t, side)]);
            }
            Kind::Interpolated { times, values } => {
                let k = segment_index(times, t, side);
                let w = ((t - times[k]) / (times[k + 1] - times[k])).clamp(0.0, 1.0);
                for (a, o) in out.iter_mut().enumerate() {
                    *o = values[k][a] * (1.0 - w) + values[k + 1][a] * w;
                }
            }
            Kind::Needle {
                base,
                tau,
                eps,
                omega,
                ramp,
                smooth,
            } => {
                base.value_into(t, side, out);
                let w = needle_weight(t, side, *tau, *eps, *ramp, *smooth);
                if w != 0.0 {
                    for (o, om) in out.iter_mut().zip(omega) {
                        *o = *o * (1.0 - w) + om * w;
                    }
                }
            }
            Kind::Blend { a, b, s } => {
                a.value_into(t, side, out);
                let mut tmp = vec![0.0; self.dim];
                b.value_into(t, side, &mut tmp);
                for (o, v) in out.iter_mut().zip(&tmp) {
                    *o = *o * (1.0 - s) + v * s;
                }
            }
        }
    }

    /// Taylor expansion `u(t + τ)` with `len` coefficients, taken from the
    /// given side. `None` when the curve carries no expansion beyond its value.
    pub fn taylor(&self, t: f64, side: Side, len: usize) -> Option<Vec<Tf>> {
        let len = len.max(1);
        match &self.kind {
            Kind::Constant(v) => Some(v.iter().map(|&x| Tf::cst(x)).collect()),
            Kind::Analytic { tf, .. } => {
                let tf = tf.as_ref();
                if len == 1 {
                    return Some(self.value_side(t, side).into_iter().map(Tf::cst).collect());
                }
                let tf = tf?;
                let mut out = vec![Tf::cst(0.0); self.dim];
                tf(Tf::linear(t, 1.0, len), &mut out);
                Some(out)
            }
            Kind::Piecewise { breaks, values } => Some(
                values[piece_index(breaks, t, side)]
                    .iter()
                    .map(|&x| Tf::cst(x))
                    .collect(),
            ),
            Kind::Interpolated { times, values } => {
                let k = segment_index(times, t, side);
                let dt = times[k + 1] - times[k];
                let w = (t - times[k]) / dt;
                Some(
                    (0..self.dim)
                        .map(|a| {
                            let v = values[k][a] * (1.0 - w) + values[k + 1][a] * w;
                            Tf::linear(v, (values[k + 1][a] - values[k][a]) / dt, len)
                        })
                        .collect(),
                )
            }
            Kind::Needle {
                base,
                tau,
                eps,
                omega,
                ramp,
                smooth,
            } => {
                let b = base.taylor(t, side, len)?;
                let w = needle_weight_series(t, side, *tau, *eps, *ramp, *smooth, len);
                Some(
                    b.into_iter()
                        .zip(omega)
                        .map(|(bv, om)| bv * (Tf::cst(1.0) - w) + w * *om)
                        .collect(),
                )
            }
            Kind::Blend { a, b, s } => {
                let x = a.taylor(t, side, len)?;
                let y = b.taylor(t, side, len)?;
                Some(x.into_iter().zip(y).map(|(p, q)| p * (1.0 - s) + q * *s).collect())
            }
        }
    }

    /// `true` when [`ControlCurve::taylor`] can supply derivatives.
    pub fn has_taylor(&self) -> bool {
        match &self.kind {
            Kind::Analytic { tf, .. } => tf.is_some(),
            Kind::Needle { base, .. } => base.has_taylor(),
            Kind::Blend { a, b, .. } => a.has_taylor() && b.has_taylor(),
            _ => true,
        }
    }

    /// Sorted breakpoints strictly inside `(0, T)`.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut out = match &self.kind {
            Kind::Constant(_) | Kind::Analytic { .. } => Vec::new(),
            Kind::Piecewise { breaks, .. } => breaks.clone(),
            Kind::Interpolated { times, .. } => times[1..times.len() - 1].to_vec(),
            Kind::Needle {
                base,
                tau,
                eps,
                ramp,
                smooth,
                ..
            } => {
                let mut b = base.breakpoints();
                b.extend([tau - eps, *tau]);
                if *smooth {
                    let w = ramp * eps * eps;
                    b.extend([tau - eps - w, tau + w]);
                }
                b
            }
            Kind::Blend { a, b, .. } => {
                let mut v = a.breakpoints();
                v.extend(b.breakpoints());
                v
            }
        };
        out.retain(|x| *x > 0.0 && *x < self.horizon);
        out.sort_by(|a, b| a.partial_cmp(b).unwrap());
        out.dedup_by(|a, b| (*a - *b).abs() <= 1e-15 * self.horizon.max(1.0));
        out
    }

    /// Range check on a sampling grid plus all breakpoint limits.
    pub fn ranges_in(&self, set: &ControlSet, hull: bool, samples: usize) -> bool {
        let tol = if hull { set.margin() + 1e-12 } else { 1e-12 };
        let mut ts: Vec<(f64, Side)> = (0..=samples)
            .map(|k| {
                let t = self.horizon * k as f64 / samples.max(1) as f64;
                (t, self.default_side(t))
            })
            .collect();
        for b in self.breakpoints() {
            ts.push((b, Side::Left));
            ts.push((b, Side::Right));
        }
        ts.into_iter().all(|(t, side)| set.contains(&self.value_side(t, side), tol))
    }
}

fn piece_index(breaks: &[f64], t: f64, side: Side) -> usize {
    match side {
        Side::Right => breaks.partition_point(|b| *b <= t),
        Side::Left => breaks.partition_point(|b| *b < t),
    }
}

fn segment_index(times: &[f64], t: f64, side: Side) -> usize {
    let k = piece_index(&times[1..times.len() - 1], t, side);
    k.min(times.len() - 2)
}

/// Weight of the ceiling value `ω` at `t` (0 outside the needle).
fn needle_weight(t: f64, side: Side, tau: f64, eps: f64, ramp: f64, smooth: bool) -> f64 {
    let a = tau - eps;
    let inside = |lo: f64, hi: f64| match side {
        Side::Right => t >= lo && t < hi,
        Side::Left => t > lo && t <= hi,
    };
    if inside(a, tau) {
        return 1.0;
    }
    if !smooth {
        return 0.0;
    }
    let w = ramp * eps * eps;
    if inside(a - w, a) {
        smoothstep((t - (a - w)) / w)
    } else if inside(tau, tau + w) {
        1.0 - smoothstep((t - tau) / w)
    } else {
        0.0
    }
}

fn needle_weight_series(
    t: f64,
    side: Side,
    tau: f64,
    eps: f64,
    ramp: f64,
    smooth: bool,
    len: usize,
) -> Tf {
    let a = tau - eps;
    let inside = |lo: f64, hi: f64| match side {
        Side::Right => t >= lo && t < hi,
        Side::Left => t > lo && t <= hi,
    };
    if inside(a, tau) {
        return Tf::cst(1.0);
    }
    if !smooth {
        return Tf::cst(0.0);
    }
    let w = ramp * eps * eps;
    if inside(a - w, a) {
        smoothstep(Tf::linear((t - (a - w)) / w, 1.0 / w, len))
    } else if inside(tau, tau + w) {
        Tf::cst(1.0) - smoothstep(Tf::linear((t - tau) / w, 1.0 / w, len))
    } else {
        Tf::cst(0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn needle_overlay_values() {
        let u0 = ControlCurve::constant(1.0, vec![1.0]);
        let n = ControlCurve::needle(&u0, 0.5, 0.1, vec![-1.0], 0.05, false);
        assert_eq!(n.value(0.4)[0], -1.0);
        assert_eq!(n.value(0.45)[0], -1.0);
        assert_eq!(n.value(0.5)[0], 1.0);
        assert_eq!(n.value(0.39999)[0], 1.0);
        assert_eq!(n.value_side(0.5, Side::Left)[0], -1.0);
        assert_eq!(n.breakpoints(), vec![0.4, 0.5]);
    }

    #[test]
    fn smoothed_needle_ramps_hit_endpoints() {
        let u0 = ControlCurve::constant(1.0, vec![1.0]);
        let (tau, eps, k) = (0.5, 0.1, 0.05);
        let n = ControlCurve::needle(&u0, tau, eps, vec![-1.0], k, true);
        let w = k * eps * eps;
        assert_eq!(n.value(tau - eps - w)[0], 1.0);
        assert_eq!(n.value(tau - eps)[0], -1.0);
        assert_eq!(n.value(tau + w)[0], 1.0);
        let mid = n.value(tau - eps - 0.5 * w)[0];
        assert!((mid - 0.0).abs() < 1e-12);
        // ramp derivatives vanish at the ends (C² joins)
        let s = n.taylor(tau - eps - w, Side::Right, 3).unwrap();
        assert!(s[0].coeff(1).abs() < 1e-9 && s[0].coeff(2).abs() < 1e-6);
    }

    #[test]
    fn piecewise_sides() {
        let u = ControlCurve::piecewise_constant(2.0, vec![1.0], vec![vec![3.0], vec![4.0]]).unwrap();
        assert_eq!(u.value(1.0)[0], 4.0);
        assert_eq!(u.value_side(1.0, Side::Left)[0], 3.0);
        assert_eq!(u.value(2.0)[0], 4.0);
        assert_eq!(u.value(0.0)[0], 3.0);
    }

    #[test]
    fn interpolated_is_linear() {
        let u = ControlCurve::interpolated(vec![0.0, 1.0, 2.0], vec![vec![0.0], vec![2.0], vec![0.0]]).unwrap();
        assert_eq!(u.value(0.5)[0], 1.0);
        assert_eq!(u.value(1.5)[0], 1.0);
        let s = u.taylor(0.5, Side::Right, 2).unwrap();
        assert_eq!(s[0].coeff(1), 2.0);
        let s = u.taylor(1.0, Side::Left, 2).unwrap();
        assert_eq!(s[0].coeff(1), 2.0);
        let s = u.taylor(1.0, Side::Right, 2).unwrap();
        assert_eq!(s[0].coeff(1), -2.0);
    }

    #[test]
    fn blend_and_box() {
        let a = ControlCurve::constant(1.0, vec![-1.0]);
        let b = ControlCurve::constant(1.0, vec![1.0]);
        let m = ControlCurve::blend(&a, &b, 0.25);
        assert_eq!(m.value(0.3)[0], -0.5);
        let k = ControlSet::symmetric(1, 1.0);
        assert!(m.ranges_in(&k, false, 10));
        let big = ControlCurve::constant(1.0, vec![2.0]);
        assert!(!big.ranges_in(&k, false, 10));
        assert_eq!(k.grid(3), vec![vec![-1.0], vec![0.0], vec![1.0]]);
    }

    #[test]
    fn analytic_taylor() {
        struct Sin;
        impl ControlFn for Sin {
            fn eval<S: Scalar>(&self, t: S, out: &mut [S]) {
                out[0] = t.sin();
            }
        }
        let u = ControlCurve::analytic(3.0, 1, Sin);
        let s = u.taylor(0.0, Side::Right, 4).unwrap();
        assert!((s[0].derivative(1) - 1.0).abs() < 1e-15);
        assert!((s[0].derivative(3) + 1.0).abs() < 1e-15);
        assert!(ControlCurve::from_fn(1.0, 1, |t, o| o[0] = t).taylor(0.2, Side::Right, 2).is_none());
    }
}
