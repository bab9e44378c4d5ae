//! Finite-order jet coordinates of curves in `ℝ^N`, scalar fields over jets,
//! and the total derivative operator.
//!
//! A jet of order `n` at time `t` is the list of derivative blocks
//! `q_(0), …, q_(n)`, each an `N`-vector. The total derivative of a field
//! `f(t, q_(0..r′), u)` is
//!
//! ```text
//! df/dt = ∂f/∂t + Σ_{j, δ ≤ r′} ∂f/∂q^j_(δ) · q^j_(δ+1)
//! ```
//!
//! with the control `u` held fixed. It coincides with the ordinary time
//! derivative along jet prolongations of curves (for frozen controls).
//!
//! Fields built from a generic [`JetFn`] carry exact derivative evaluators
//! (series arithmetic, see [`crate::scalar`]); fields built from plain `f64`
//! closures fall back on symmetric finite differences with step
//! `cbrt(ε_mach)·max(1, |x|)`.

use std::fmt;
use std::sync::Arc;

use rand::Rng;

use crate::error::{Error, Result};
use crate::scalar::{factorial, Ad, Ad2, Dual, Scalar, Taylor, TAYLOR_CAPACITY};

/// Point in the jet space: time plus `n + 1` derivative blocks of dimension `N`.
#[derive(Clone, Debug, PartialEq)]
pub struct JetPoint {
    pub t: f64,
    dim: usize,
    order: usize,
    /// Block-major storage: entry `β·N + i` is `q^i_(β)`.
    data: Vec<f64>,
}

impl JetPoint {
    /// Jet with all blocks zero.
    pub fn zeros(t: f64, dim: usize, order: usize) -> Self {
        Self {
            t,
            dim,
            order,
            data: vec![0.0; dim * (order + 1)],
        }
    }

    /// Build from explicit blocks; every block must have the same length.
    pub fn from_blocks(t: f64, blocks: &[Vec<f64>]) -> Result<Self> {
        let dim = blocks.first().map_or(0, Vec::len);
        if blocks.is_empty() || blocks.iter().any(|b| b.len() != dim) {
            return Err(Error::Dimension("jet blocks must be nonempty and equal-length".into()));
        }
        Ok(Self {
            t,
            dim,
            order: blocks.len() - 1,
            data: blocks.concat(),
        })
    }

    /// Build from block-major flat storage.
    pub fn from_flat(t: f64, dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 || !data.len().is_multiple_of(dim) || data.is_empty() {
            return Err(Error::Dimension(format!(
                "flat jet of length {} is not a multiple of N = {dim}",
                data.len()
            )));
        }
        let order = data.len() / dim - 1;
        Ok(Self { t, dim, order, data })
    }

    /// State dimension `N`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Jet order `n`.
    pub fn order(&self) -> usize {
        self.order
    }

    /// `q^i_(β)`.
    pub fn get(&self, i: usize, beta: usize) -> f64 {
        self.data[beta * self.dim + i]
    }

    pub fn set(&mut self, i: usize, beta: usize, v: f64) {
        self.data[beta * self.dim + i] = v;
    }

    /// Block `q_(β)`.
    pub fn block(&self, beta: usize) -> &[f64] {
        &self.data[beta * self.dim..(beta + 1) * self.dim]
    }

    /// Flat block-major coordinates.
    pub fn flat(&self) -> &[f64] {
        &self.data
    }

    pub fn flat_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Copy restricted (or zero-extended) to another order.
    pub fn with_order(&self, order: usize) -> Self {
        let mut out = Self::zeros(self.t, self.dim, order);
        let n = (order.min(self.order) + 1) * self.dim;
        out.data[..n].copy_from_slice(&self.data[..n]);
        out
    }
}

impl fmt::Display for JetPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "t={}", self.t)?;
        for b in 0..=self.order {
            write!(f, " q({b})={:?}", self.block(b))?;
        }
        Ok(())
    }
}

/// Read-only view of jet coordinates handed to field evaluators.
#[derive(Clone, Copy, Debug)]
pub struct JetArgs<'a, S> {
    dim: usize,
    data: &'a [S],
}

impl<'a, S: Scalar> JetArgs<'a, S> {
    pub fn new(dim: usize, data: &'a [S]) -> Self {
        debug_assert!(dim > 0 && data.len().is_multiple_of(dim));
        Self { dim, data }
    }

    /// `q^i_(β)`.
    #[inline]
    pub fn q(&self, i: usize, beta: usize) -> S {
        self.data[beta * self.dim + i]
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Highest available block index.
    pub fn order(&self) -> usize {
        self.data.len() / self.dim - 1
    }

    pub fn raw(&self) -> &'a [S] {
        self.data
    }
}

/// A scalar function of `(t, jet, u)` written generically over [`Scalar`].
///
/// Implementors should read only blocks up to their declared actual order.
pub trait JetFn: Send + Sync + 'static {
    fn eval<S: Scalar>(&self, t: S, q: JetArgs<'_, S>, u: &[S]) -> S;
}

type EvalF64 = Arc<dyn Fn(f64, JetArgs<'_, f64>, &[f64]) -> f64 + Send + Sync>;
type EvalAd = Arc<dyn Fn(Ad, JetArgs<'_, Ad>, &[Ad]) -> Ad + Send + Sync>;
type EvalAd2 = Arc<dyn Fn(Ad2, JetArgs<'_, Ad2>, &[Ad2]) -> Ad2 + Send + Sync>;

/// Coordinate on `ℝ × J^n × K` used to name partial derivatives.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Coord {
    Time,
    Q { i: usize, beta: usize },
    U(usize),
}

/// Scalar field over jets and controls with a declared actual order.
#[derive(Clone)]
pub struct ScalarJetField {
    name: String,
    dim: usize,
    actual_order: usize,
    eval_f64: EvalF64,
    eval_ad: Option<EvalAd>,
    eval_ad2: Option<EvalAd2>,
}

impl fmt::Debug for ScalarJetField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarJetField")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("actual_order", &self.actual_order)
            .field("exact_partials", &self.eval_ad.is_some())
            .finish()
    }
}

impl ScalarJetField {
    /// Field from a generic function: exact partials and total derivatives.
    pub fn new<F: JetFn>(name: impl Into<String>, dim: usize, actual_order: usize, f: F) -> Self {
        let f = Arc::new(f);
        let (f1, f2, f3) = (f.clone(), f.clone(), f);
        Self {
            name: name.into(),
            dim,
            actual_order,
            eval_f64: Arc::new(move |t, q, u| f1.eval(t, q, u)),
            eval_ad: Some(Arc::new(move |t, q, u| f2.eval(t, q, u))),
            eval_ad2: Some(Arc::new(move |t, q, u| f3.eval(t, q, u))),
        }
    }

    /// Field from a plain closure: partials by finite differences only.
    pub fn from_f64<F>(name: impl Into<String>, dim: usize, actual_order: usize, f: F) -> Self
    where
        F: Fn(f64, JetArgs<'_, f64>, &[f64]) -> f64 + Send + Sync + 'static,
    {
        Self {
            name: name.into(),
            dim,
            actual_order,
            eval_f64: Arc::new(f),
            eval_ad: None,
            eval_ad2: None,
        }
    }

    /// The identically zero field.
    pub fn zero(dim: usize) -> Self {
        struct Zero;
        impl JetFn for Zero {
            fn eval<S: Scalar>(&self, _t: S, _q: JetArgs<'_, S>, _u: &[S]) -> S {
                S::zero()
            }
        }
        Self::new("0", dim, 0, Zero)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Declared actual order `r′`.
    pub fn actual_order(&self) -> usize {
        self.actual_order
    }

    /// `true` when partials are computed exactly rather than by differences.
    pub fn has_exact_partials(&self) -> bool {
        self.eval_ad.is_some()
    }

    /// Evaluate at `(p, u)`.
    pub fn eval(&self, p: &JetPoint, u: &[f64]) -> f64 {
        (self.eval_f64)(p.t, JetArgs::new(p.dim, &p.data), u)
    }

    /// Evaluate at raw coordinates.
    pub fn eval_raw(&self, t: f64, q: JetArgs<'_, f64>, u: &[f64]) -> f64 {
        (self.eval_f64)(t, q, u)
    }

    /// `a·self + b·other` (both fields on the same jet space).
    pub fn linear_combination(&self, a: f64, other: &ScalarJetField, b: f64) -> ScalarJetField {
        assert_eq!(self.dim, other.dim, "fields live on different jet spaces");
        let (x, y) = (self.clone(), other.clone());
        let eval_f64: EvalF64 = Arc::new(move |t, q, u| {
            (x.eval_f64)(t, q, u) * a + (y.eval_f64)(t, q, u) * b
        });
        let eval_ad = match (&self.eval_ad, &other.eval_ad) {
            (Some(fx), Some(fy)) => {
                let (fx, fy) = (fx.clone(), fy.clone());
                Some(Arc::new(move |t: Ad, q: JetArgs<'_, Ad>, u: &[Ad]| {
                    fx(t, q, u) * a + fy(t, q, u) * b
                }) as EvalAd)
            }
            _ => None,
        };
        let eval_ad2 = match (&self.eval_ad2, &other.eval_ad2) {
            (Some(fx), Some(fy)) => {
                let (fx, fy) = (fx.clone(), fy.clone());
                Some(Arc::new(move |t: Ad2, q: JetArgs<'_, Ad2>, u: &[Ad2]| {
                    fx(t, q, u) * a + fy(t, q, u) * b
                }) as EvalAd2)
            }
            _ => None,
        };
        ScalarJetField {
            name: format!("{a}·({}) + {b}·({})", self.name, other.name),
            dim: self.dim,
            actual_order: self.actual_order.max(other.actual_order),
            eval_f64,
            eval_ad,
            eval_ad2,
        }
    }

    /// The field `df/dt` (total derivative, control frozen) as a new field of
    /// actual order `r′ + 1`.
    ///
    /// With exact partials available, the new field again has exact partials
    /// (one level less of nesting); otherwise it is a finite-difference field.
    pub fn total_derivative_field(&self) -> ScalarJetField {
        let name = format!("d/dt[{}]", self.name);
        let order = self.actual_order + 1;
        match (&self.eval_ad, &self.eval_ad2) {
            (Some(ad), Some(ad2)) => {
                let (ad, ad2) = (ad.clone(), ad2.clone());
                let eval_f64: EvalF64 = Arc::new(move |t, q, u| {
                    let ts = Ad::linear(Dual::cst(t), Dual::cst(1.0), 2);
                    let qs: Vec<Ad> = shifted_series(q, 2, Dual::cst);
                    let us: Vec<Ad> = u.iter().map(|&x| Ad::cst(x)).collect();
                    ad(ts, JetArgs::new(q.dim(), &qs), &us).coeff(1).v
                });
                let eval_ad: EvalAd = Arc::new(move |t, q, u| {
                    let ts = Ad2::linear(t, Ad::cst(1.0), 2);
                    let qs: Vec<Ad2> = shifted_series(q, 2, |x| x);
                    let us: Vec<Ad2> = u.iter().map(|&x| Ad2::from_coeffs(&[x])).collect();
                    ad2(ts, JetArgs::new(q.dim(), &qs), &us).coeff(1)
                });
                ScalarJetField {
                    name,
                    dim: self.dim,
                    actual_order: order,
                    eval_f64,
                    eval_ad: Some(eval_ad),
                    eval_ad2: None,
                }
            }
            _ => {
                let base = self.clone();
                ScalarJetField::from_f64(name, self.dim, order, move |t, q, u| {
                    let p = JetPoint::from_flat(t, q.dim(), q.raw().to_vec())
                        .expect("valid jet layout");
                    total_derivative_fd(&base, &p, u)
                })
            }
        }
    }
}

/// Series `q_(β)(τ) = q_(β) + q_(β+1)·τ` (top block frozen) for every block.
fn shifted_series<S: Scalar, T: Scalar>(
    q: JetArgs<'_, S>,
    len: usize,
    lift: impl Fn(S) -> T,
) -> Vec<Taylor<T>> {
    let dim = q.dim();
    let n = q.order();
    let mut out = Vec::with_capacity(dim * (n + 1));
    for beta in 0..=n {
        for i in 0..dim {
            let v = lift(q.q(i, beta));
            let slope = if beta < n { lift(q.q(i, beta + 1)) } else { T::zero() };
            out.push(Taylor::linear(v, slope, len));
        }
    }
    out
}

/// Symmetric finite-difference step `cbrt(ε)·max(1, |x|)`.
pub fn fd_step(x: f64) -> f64 {
    f64::EPSILON.cbrt() * x.abs().max(1.0)
}

fn perturbed(p: &JetPoint, u: &[f64], coord: Coord, delta: f64) -> (JetPoint, Vec<f64>) {
    let mut q = p.clone();
    let mut v = u.to_vec();
    match coord {
        Coord::Time => q.t += delta,
        Coord::Q { i, beta } => q.data[beta * q.dim + i] += delta,
        Coord::U(a) => v[a] += delta,
    }
    (q, v)
}

fn coord_value(p: &JetPoint, u: &[f64], coord: Coord) -> f64 {
    match coord {
        Coord::Time => p.t,
        Coord::Q { i, beta } => p.get(i, beta),
        Coord::U(a) => u[a],
    }
}

/// Symmetric difference quotient `(f(x+h) − f(x−h)) / 2h` along `direction`.
pub fn finite_diff_partial(
    f: &ScalarJetField,
    p: &JetPoint,
    u: &[f64],
    direction: Coord,
    step: f64,
) -> f64 {
    assert!(step > 0.0, "finite-difference step must be positive");
    let (pp, up) = perturbed(p, u, direction, step);
    let (pm, um) = perturbed(p, u, direction, -step);
    (f.eval(&pp, &up) - f.eval(&pm, &um)) / (2.0 * step)
}

/// Build the Taylor series of the formal prolongation through `p`, truncated
/// to `len` coefficients, with an optional unit dual seed on one coordinate.
fn formal_series(p: &JetPoint, len: usize, seed: Option<Coord>) -> (Ad, Vec<Ad>) {
    let dim = p.dim;
    let n = p.order;
    let seeded = |c: Coord| seed == Some(c);
    let mut tc = vec![Dual::cst(0.0); len];
    tc[0] = Dual::new(p.t, if seeded(Coord::Time) { 1.0 } else { 0.0 });
    if len > 1 {
        tc[1] = Dual::cst(1.0);
    }
    let t = Ad::from_coeffs(&tc);
    let mut qs = Vec::with_capacity(dim * (n + 1));
    let mut buf = vec![Dual::cst(0.0); len];
    for beta in 0..=n {
        for i in 0..dim {
            for (j, slot) in buf.iter_mut().enumerate() {
                *slot = if beta + j <= n {
                    Dual::cst(p.get(i, beta + j) / factorial(j))
                } else {
                    Dual::cst(0.0)
                };
            }
            if seeded(Coord::Q { i, beta }) {
                buf[0].d = 1.0;
            }
            qs.push(Ad::from_coeffs(&buf));
        }
    }
    (t, qs)
}

fn control_series(u: &[f64], seed: Option<Coord>) -> Vec<Ad> {
    u.iter()
        .enumerate()
        .map(|(a, &x)| {
            let d = if seed == Some(Coord::U(a)) { 1.0 } else { 0.0 };
            Ad::from_coeffs(&[Dual::new(x, d)])
        })
        .collect()
}

fn check_order(f: &ScalarJetField, p: &JetPoint, k: usize) -> Result<()> {
    let need = f.actual_order + k;
    if p.order < need {
        return Err(Error::InsufficientJetOrder {
            have: p.order,
            need,
        });
    }
    if k + 1 > TAYLOR_CAPACITY {
        return Err(Error::InsufficientJetOrder {
            have: TAYLOR_CAPACITY - 1,
            need: k,
        });
    }
    Ok(())
}

/// Iterated total derivatives `(d/dt)^ε (∂f/∂coord)` for `ε = 0..=k`, or of
/// `f` itself when `seed` is `None`.
///
/// Exact (series arithmetic) when the field carries exact partials, finite
/// differences otherwise.
pub fn iterated_total_derivatives(
    f: &ScalarJetField,
    p: &JetPoint,
    u: &[f64],
    seed: Option<Coord>,
    k: usize,
) -> Result<Vec<f64>> {
    check_order(f, p, k)?;
    if let Some(ad) = &f.eval_ad {
        let (t, qs) = formal_series(p, k + 1, seed);
        let us = control_series(u, seed);
        let val = ad(t, JetArgs::new(p.dim, &qs), &us);
        Ok((0..=k)
            .map(|e| {
                let c = val.coeff(e);
                let x = if seed.is_some() { c.d } else { c.v };
                x * factorial(e)
            })
            .collect())
    } else {
        let g = |q: &JetPoint| match seed {
            None => f.eval(q, u),
            Some(c) => finite_diff_partial(f, q, u, c, fd_step(coord_value(q, u, c))),
        };
        Ok((0..=k).map(|e| formal_fd_derivative(p, e, &g)).collect())
    }
}

/// `e`-th derivative of `g` along the formal prolongation through `p`, by a
/// central difference stencil in the shift parameter.
fn formal_fd_derivative(p: &JetPoint, e: usize, g: &dyn Fn(&JetPoint) -> f64) -> f64 {
    if e == 0 {
        return g(p);
    }
    let h = f64::EPSILON.powf(1.0 / (e as f64 + 2.0)) * p.t.abs().max(1.0);
    let shift = |tau: f64| {
        let mut q = JetPoint::zeros(p.t + tau, p.dim, p.order);
        for beta in 0..=p.order {
            for i in 0..p.dim {
                let mut acc = 0.0;
                for j in 0..=(p.order - beta) {
                    acc += p.get(i, beta + j) * tau.powi(j as i32) / factorial(j);
                }
                q.set(i, beta, acc);
            }
        }
        q
    };
    let mut acc = 0.0;
    for j in 0..=e {
        let binom = factorial(e) / (factorial(j) * factorial(e - j));
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        acc += sign * binom * g(&shift((e as f64 / 2.0 - j as f64) * h));
    }
    acc / h.powi(e as i32)
}

fn total_derivative_fd(f: &ScalarJetField, p: &JetPoint, u: &[f64]) -> f64 {
    let r = f.actual_order.min(p.order.saturating_sub(1));
    let mut acc = finite_diff_partial(f, p, u, Coord::Time, fd_step(p.t));
    for delta in 0..=r {
        for i in 0..p.dim {
            let c = Coord::Q { i, beta: delta };
            let slope = p.get(i, delta + 1);
            if slope != 0.0 {
                acc += finite_diff_partial(f, p, u, c, fd_step(p.get(i, delta))) * slope;
            }
        }
    }
    acc
}

/// Total derivative `df/dt` at `(p, u)`; requires `p.n ≥ r′ + 1`.
pub fn total_derivative(f: &ScalarJetField, p: &JetPoint, u: &[f64]) -> Result<f64> {
    check_order(f, p, 1)?;
    if f.eval_ad.is_some() {
        Ok(iterated_total_derivatives(f, p, u, None, 1)?[1])
    } else {
        Ok(total_derivative_fd(f, p, u))
    }
}

/// Partial derivative `∂f/∂coord` at `(p, u)` (exact when available).
pub fn partial(f: &ScalarJetField, p: &JetPoint, u: &[f64], coord: Coord) -> f64 {
    if let Some(ad) = &f.eval_ad {
        let (t, qs) = formal_series(p, 1, Some(coord));
        let us = control_series(u, Some(coord));
        ad(t, JetArgs::new(p.dim, &qs), &us).coeff(0).d
    } else {
        finite_diff_partial(f, p, u, coord, fd_step(coord_value(p, u, coord)))
    }
}

/// Random-perturbation audit of the declared actual order: perturbing blocks
/// above it must leave the value unchanged. Returns the largest deviation.
pub fn actual_order_audit<R: Rng>(
    f: &ScalarJetField,
    order: usize,
    n_controls: usize,
    rng: &mut R,
    samples: usize,
) -> f64 {
    let mut worst: f64 = 0.0;
    if f.actual_order >= order {
        return 0.0;
    }
    for _ in 0..samples {
        let t = rng.random_range(0.0..1.0);
        let mut p = JetPoint::zeros(t, f.dim, order);
        for x in p.data.iter_mut() {
            *x = rng.random_range(-1.0..1.0);
        }
        let u: Vec<f64> = (0..n_controls).map(|_| rng.random_range(-1.0..1.0)).collect();
        let base = f.eval(&p, &u);
        let mut q = p.clone();
        for beta in (f.actual_order + 1)..=order {
            for i in 0..f.dim {
                q.set(i, beta, rng.random_range(-10.0..10.0));
            }
        }
        worst = worst.max((f.eval(&q, &u) - base).abs());
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Square;
    impl JetFn for Square {
        fn eval<S: Scalar>(&self, _t: S, q: JetArgs<'_, S>, _u: &[S]) -> S {
            q.q(0, 0) * q.q(0, 0)
        }
    }

    struct TimeCoord;
    impl JetFn for TimeCoord {
        fn eval<S: Scalar>(&self, t: S, _q: JetArgs<'_, S>, _u: &[S]) -> S {
            t
        }
    }

    struct Coordinate(usize, usize);
    impl JetFn for Coordinate {
        fn eval<S: Scalar>(&self, _t: S, q: JetArgs<'_, S>, _u: &[S]) -> S {
            q.q(self.0, self.1)
        }
    }

    fn jet(t: f64, blocks: &[&[f64]]) -> JetPoint {
        JetPoint::from_blocks(t, &blocks.iter().map(|b| b.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn coordinate_function_total_derivative_is_next_block() {
        let f = ScalarJetField::new("q", 1, 0, Coordinate(0, 0));
        let p = jet(0.3, &[&[1.0], &[2.5], &[-4.0]]);
        assert_eq!(total_derivative(&f, &p, &[]).unwrap(), 2.5);
    }

    #[test]
    fn time_total_derivative_is_one() {
        let f = ScalarJetField::new("t", 1, 0, TimeCoord);
        let p = jet(0.3, &[&[1.0], &[2.5]]);
        assert_eq!(total_derivative(&f, &p, &[]).unwrap(), 1.0);
    }

    #[test]
    fn square_chain_rule() {
        let f = ScalarJetField::new("q²", 1, 0, Square);
        let p = jet(0.0, &[&[3.0], &[2.0]]);
        assert!((total_derivative(&f, &p, &[]).unwrap() - 12.0).abs() < 1e-14);
    }

    #[test]
    fn fd_partials_match_examples() {
        let lin = ScalarJetField::from_f64("q", 1, 0, |_t, q, _u| q.q(0, 0));
        let p = jet(0.0, &[&[0.7], &[0.0]]);
        let c = Coord::Q { i: 0, beta: 0 };
        assert!((finite_diff_partial(&lin, &p, &[], c, 0.1) - 1.0).abs() < 1e-14);
        let sq = ScalarJetField::from_f64("q²", 1, 0, |_t, q, _u| q.q(0, 0) * q.q(0, 0));
        let p1 = jet(0.0, &[&[1.0], &[0.0]]);
        assert!((finite_diff_partial(&sq, &p1, &[], c, 1e-5) - 2.0).abs() < 1e-9);
        let s = ScalarJetField::from_f64("sin q", 1, 0, |_t, q, _u| q.q(0, 0).sin());
        let p0 = jet(0.0, &[&[0.0], &[0.0]]);
        assert!((finite_diff_partial(&s, &p0, &[], c, 1e-5) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn insufficient_order_is_reported() {
        let f = ScalarJetField::new("q1", 1, 1, Coordinate(0, 1));
        let p = jet(0.0, &[&[1.0], &[2.0]]);
        assert!(matches!(
            total_derivative(&f, &p, &[]),
            Err(Error::InsufficientJetOrder { have: 1, need: 2 })
        ));
    }

    #[test]
    fn iterated_derivatives_of_partial() {
        // f = q0² · q1; ∂f/∂q1 = q0²; d/dt = 2 q0 q1; d²/dt² = 2 q1² + 2 q0 q2.
        struct F;
        impl JetFn for F {
            fn eval<S: Scalar>(&self, _t: S, q: JetArgs<'_, S>, _u: &[S]) -> S {
                q.q(0, 0) * q.q(0, 0) * q.q(0, 1)
            }
        }
        let f = ScalarJetField::new("f", 1, 1, F);
        let p = jet(0.0, &[&[1.5], &[-0.5], &[2.0], &[0.3]]);
        let d = iterated_total_derivatives(&f, &p, &[], Some(Coord::Q { i: 0, beta: 1 }), 2).unwrap();
        assert!((d[0] - 2.25).abs() < 1e-14);
        assert!((d[1] - 2.0 * 1.5 * -0.5).abs() < 1e-14);
        assert!((d[2] - (2.0 * 0.25 + 2.0 * 1.5 * 2.0)).abs() < 1e-13);
    }

    #[test]
    fn fd_fallback_agrees_with_exact_total_derivative() {
        struct G;
        impl JetFn for G {
            fn eval<S: Scalar>(&self, t: S, q: JetArgs<'_, S>, u: &[S]) -> S {
                (q.q(0, 0) * t).sin() + q.q(1, 1) * q.q(0, 1) * u[0]
            }
        }
        let exact = ScalarJetField::new("g", 2, 1, G);
        let fd = ScalarJetField::from_f64("g", 2, 1, |t, q, u| G.eval(t, q, u));
        let p = jet(0.4, &[&[0.2, -1.0], &[0.7, 0.1], &[1.1, -0.3]]);
        let a = total_derivative(&exact, &p, &[0.5]).unwrap();
        let b = total_derivative(&fd, &p, &[0.5]).unwrap();
        assert!((a - b).abs() < 1e-8, "{a} vs {b}");
    }

    #[test]
    fn total_derivative_field_matches_operator() {
        struct G;
        impl JetFn for G {
            fn eval<S: Scalar>(&self, t: S, q: JetArgs<'_, S>, _u: &[S]) -> S {
                q.q(0, 0) * q.q(0, 1) * t + q.q(0, 0).exp()
            }
        }
        let f = ScalarJetField::new("g", 1, 1, G);
        let df = f.total_derivative_field();
        assert_eq!(df.actual_order(), 2);
        let p = jet(0.7, &[&[0.3], &[-0.4], &[0.9], &[0.2]]);
        let direct = total_derivative(&f, &p, &[]).unwrap();
        assert!((df.eval(&p, &[]) - direct).abs() < 1e-14);
        // and its own total derivative equals the second iterated derivative
        let second = iterated_total_derivatives(&f, &p, &[], None, 2).unwrap()[2];
        assert!((total_derivative(&df, &p, &[]).unwrap() - second).abs() < 1e-13);
    }

    #[test]
    fn audit_detects_undeclared_dependence() {
        let honest = ScalarJetField::new("q1", 1, 1, Coordinate(0, 1));
        let liar = ScalarJetField::new("q2", 1, 1, Coordinate(0, 2));
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        use rand::SeedableRng;
        assert_eq!(actual_order_audit(&honest, 4, 0, &mut rng, 10), 0.0);
        assert!(actual_order_audit(&liar, 4, 0, &mut rng, 10) > 0.0);
    }
}
