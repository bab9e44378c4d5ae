//! Auxiliary boundary-value functions `h, h′, h″`, the bookkeeping function
//! `μ`, and the controlled Poincaré–Cartan form of the extended Lagrangian.
//!
//! With `ω = π/2T` and every index `(i, β)`, `0 ≤ β ≤ r−1`:
//!
//! * `h = A eᵗ + B e⁻ᵗ` with `h(0) = q_(β)(0)` and `ḣ(0) = −M^L_β(0)`,
//! * `h′ = A′e^{ωt} + B′e^{−ωt} + C′cos ωt + D′sin ωt` with
//!   `h′(0) = ḣ′(0) = 0`, `ḣ′(T) = q_(β)(T)`, `ḧ′(T) = P_β(T)`,
//! * `h″` of the same shape with `h″(0) = ḣ″(0) = 0`, `ḣ″(T) = h(T)`,
//!   `ḧ″(T) = ḣ(T)`,
//!
//! where `M^F_β` are the momentum sums of a field `F`
//! ([`crate::problem::momenta`]) and `P_β = M^{L + dC/dt}_β`.
//!
//! `λ ≡ 1`, and `μ(t) = −∫₀ᵗ L̃` with the extended Lagrangian
//!
//! ```text
//! L̃ = L + Σ ½(ḣ² − ḧ′² − ḧ″²) + ½h² + ½ω⁴(h′² + h″²).
//! ```

use std::f64::consts::PI;

use nalgebra::{Matrix4, Vector4};

use crate::dynamics::Trajectory;
use crate::error::{Error, Result};
use crate::jetspace::JetPoint;
use crate::problem::{momenta, DefiningTriple};
use crate::quadrature::gauss_legendre_8;

pub use crate::homotopy::mu_prime_correction;

/// Which `β` indices enter the `h`-contact terms of the Poincaré–Cartan
/// pairing and the `μ′` correction: all `0..r−1`, or `1..r−1` only.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BetaRange {
    Full,
    FromOne,
}

impl BetaRange {
    pub fn includes(self, beta: usize) -> bool {
        match self {
            BetaRange::Full => true,
            BetaRange::FromOne => beta >= 1,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            BetaRange::Full => "beta in 0..r-1",
            BetaRange::FromOne => "beta in 1..r-1",
        }
    }
}

/// `ω = π / 2T`.
pub fn boundary_frequency(horizon: f64) -> f64 {
    PI / (2.0 * horizon)
}

/// Derivatives of order `k` of the basis `(e^{ωt}, e^{−ωt}, cos ωt, sin ωt)`.
pub fn basis(omega: f64, t: f64, k: usize) -> [f64; 4] {
    let wk = omega.powi(k as i32);
    let sgn = if k.is_multiple_of(2) { 1.0 } else { -1.0 };
    let phase = omega * t + k as f64 * PI / 2.0;
    // exact quarter-turn phases avoid cos(π/2) ≈ 6e-17 noise
    let (s, c) = match k % 4 {
        0 => ((omega * t).sin(), (omega * t).cos()),
        1 => ((omega * t).cos(), -(omega * t).sin()),
        2 => (-(omega * t).sin(), -(omega * t).cos()),
        _ => (-(omega * t).cos(), (omega * t).sin()),
    };
    debug_assert!((s - phase.sin()).abs() < 1e-9 && (c - phase.cos()).abs() < 1e-9);
    [wk * (omega * t).exp(), sgn * wk * (-omega * t).exp(), wk * c, wk * s]
}

/// The boundary matrix `𝒜`: rows are value at 0, first derivative at 0,
/// first derivative at `T`, second derivative at `T` of the basis.
pub fn boundary_matrix(horizon: f64) -> Matrix4<f64> {
    let w = boundary_frequency(horizon);
    let r0 = basis(w, 0.0, 0);
    let r1 = basis(w, 0.0, 1);
    let r2 = basis(w, horizon, 1);
    let r3 = basis(w, horizon, 2);
    Matrix4::from_row_slice(&[
        r0[0], r0[1], r0[2], r0[3], r1[0], r1[1], r1[2], r1[3], r2[0], r2[1], r2[2], r2[3], r3[0], r3[1], r3[2],
        r3[3],
    ])
}

/// Boundary data entering the coefficient equations, block-major over
/// `(i, β)` with `β < r`.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryData {
    pub q0: Vec<f64>,
    pub m0: Vec<f64>,
    pub q_t: Vec<f64>,
    pub p_t: Vec<f64>,
}

/// Coefficients of `h, h′, h″` for every `(i, β)`; index `β·N + i`.
#[derive(Clone, Debug, PartialEq)]
pub struct HCoefficients {
    pub horizon: f64,
    pub omega: f64,
    pub dim: usize,
    pub r: usize,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub hp: Vec<[f64; 4]>,
    pub hpp: Vec<[f64; 4]>,
    /// 1-norm condition number of `𝒜`.
    pub condition: f64,
    pub data: BoundaryData,
}

/// Values of `h, h′, h″` and their derivatives (orders 0..=4) at one time.
#[derive(Clone, Debug, PartialEq)]
pub struct HValues {
    pub h: Vec<[f64; 5]>,
    pub hp: Vec<[f64; 5]>,
    pub hpp: Vec<[f64; 5]>,
}

impl HCoefficients {
    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    /// `β` of flat index `k`.
    pub fn beta_of(&self, k: usize) -> usize {
        k / self.dim
    }

    /// `d^k h/dt^k` at `t` for flat index `idx`.
    pub fn h(&self, idx: usize, t: f64, k: usize) -> f64 {
        let sgn = if k.is_multiple_of(2) { 1.0 } else { -1.0 };
        self.a[idx] * t.exp() + sgn * self.b[idx] * (-t).exp()
    }

    /// `d^k h′/dt^k`.
    pub fn hp(&self, idx: usize, t: f64, k: usize) -> f64 {
        dot4(&self.hp[idx], &basis(self.omega, t, k))
    }

    /// `d^k h″/dt^k`.
    pub fn hpp(&self, idx: usize, t: f64, k: usize) -> f64 {
        dot4(&self.hpp[idx], &basis(self.omega, t, k))
    }

    /// All derivatives of orders 0..=4 at `t`.
    pub fn values(&self, t: f64) -> HValues {
        let b: Vec<[f64; 4]> = (0..5).map(|k| basis(self.omega, t, k)).collect();
        let (et, emt) = (t.exp(), (-t).exp());
        let n = self.len();
        let mut out = HValues {
            h: vec![[0.0; 5]; n],
            hp: vec![[0.0; 5]; n],
            hpp: vec![[0.0; 5]; n],
        };
        for idx in 0..n {
            for k in 0..5 {
                let sgn = if k % 2 == 0 { 1.0 } else { -1.0 };
                out.h[idx][k] = self.a[idx] * et + sgn * self.b[idx] * emt;
                out.hp[idx][k] = dot4(&self.hp[idx], &b[k]);
                out.hpp[idx][k] = dot4(&self.hpp[idx], &b[k]);
            }
        }
        out
    }

    /// Largest relative residual of all boundary conditions.
    pub fn boundary_residual(&self) -> f64 {
        let t_end = self.horizon;
        let d = &self.data;
        let rel = |x: f64, target: f64| (x - target).abs() / (1.0 + target.abs());
        let mut worst: f64 = 0.0;
        for idx in 0..self.len() {
            let ht = self.h(idx, t_end, 0);
            let hdt = self.h(idx, t_end, 1);
            for r in [
                rel(self.h(idx, 0.0, 0), d.q0[idx]),
                rel(self.h(idx, 0.0, 1), -d.m0[idx]),
                rel(self.hp(idx, 0.0, 0), 0.0),
                rel(self.hp(idx, 0.0, 1), 0.0),
                rel(self.hp(idx, t_end, 1), d.q_t[idx]),
                rel(self.hp(idx, t_end, 2), d.p_t[idx]),
                rel(self.hpp(idx, 0.0, 0), 0.0),
                rel(self.hpp(idx, 0.0, 1), 0.0),
                rel(self.hpp(idx, t_end, 1), ht),
                rel(self.hpp(idx, t_end, 2), hdt),
            ] {
                worst = worst.max(r);
            }
        }
        worst
    }

    /// Largest residual of `ḧ − h = 0` and `d⁴h′/dt⁴ − ω⁴h′ = 0` (same for
    /// `h″`) at `t`, relative to the size of the terms.
    pub fn ode_residual(&self, t: f64) -> f64 {
        let w4 = self.omega.powi(4);
        let mut worst: f64 = 0.0;
        for idx in 0..self.len() {
            let (h0, h2) = (self.h(idx, t, 0), self.h(idx, t, 2));
            worst = worst.max((h2 - h0).abs() / (1.0 + h0.abs()));
            for (x4, x0) in [
                (self.hp(idx, t, 4), self.hp(idx, t, 0)),
                (self.hpp(idx, t, 4), self.hpp(idx, t, 0)),
            ] {
                worst = worst.max((x4 - w4 * x0).abs() / (1.0 + (w4 * x0).abs()));
            }
        }
        worst
    }
}

fn dot4(a: &[f64; 4], b: &[f64; 4]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3]
}

/// Solve the coefficient equations from explicit boundary data.
pub fn solve_h_from_data(horizon: f64, dim: usize, r: usize, data: BoundaryData) -> Result<HCoefficients> {
    let n = dim * r;
    if [data.q0.len(), data.m0.len(), data.q_t.len(), data.p_t.len()].iter().any(|l| *l != n) {
        return Err(Error::Dimension(format!("boundary data must have {n} entries per family")));
    }
    let m = boundary_matrix(horizon);
    let lu = m.lu();
    let inv = lu
        .try_inverse()
        .filter(|i| i.iter().all(|v| v.is_finite()))
        .ok_or(Error::SingularBoundaryMatrix { horizon })?;
    let condition = norm1(&m) * norm1(&inv);
    if !condition.is_finite() || condition > 1e14 {
        return Err(Error::SingularBoundaryMatrix { horizon });
    }
    let mut a = vec![0.0; n];
    let mut b = vec![0.0; n];
    let mut hp = vec![[0.0; 4]; n];
    let mut hpp = vec![[0.0; 4]; n];
    for k in 0..n {
        a[k] = 0.5 * (data.q0[k] - data.m0[k]);
        b[k] = 0.5 * (data.q0[k] + data.m0[k]);
        let c1 = inv * Vector4::new(0.0, 0.0, data.q_t[k], data.p_t[k]);
        hp[k] = [c1[0], c1[1], c1[2], c1[3]];
        let ht = a[k] * horizon.exp() + b[k] * (-horizon).exp();
        let hdt = a[k] * horizon.exp() - b[k] * (-horizon).exp();
        let c2 = inv * Vector4::new(0.0, 0.0, ht, hdt);
        hpp[k] = [c2[0], c2[1], c2[2], c2[3]];
    }
    Ok(HCoefficients {
        horizon,
        omega: boundary_frequency(horizon),
        dim,
        r,
        a,
        b,
        hp,
        hpp,
        condition,
        data,
    })
}

fn norm1(m: &Matrix4<f64>) -> f64 {
    (0..4).map(|j| (0..4).map(|i| m[(i, j)].abs()).sum::<f64>()).fold(0.0, f64::max)
}

/// Boundary data of a trajectory: jets at `0` and `T` from dynamics-based
/// reconstruction.
pub fn boundary_data(traj: &Trajectory, triple: &DefiningTriple) -> Result<BoundaryData> {
    let r = triple.order();
    let n = triple.q_dim();
    let wo = triple.working_order();
    let t_end = triple.horizon;
    let j0 = traj.jet(0.0, wo)?;
    let u0 = traj.control_value(0.0);
    let jt = traj.jet(t_end, wo)?;
    let ut = traj.control_value(t_end);
    let blocks = |j: &JetPoint| j.flat()[..n * r].to_vec();
    let m0 = momenta(&triple.lagrangian.field, r, &j0, &u0)?;
    let mut p_t = momenta(triple.boundary_lagrangian(), triple.boundary_order(), &jt, &ut)?;
    p_t.resize(n * r, 0.0);
    Ok(BoundaryData {
        q0: blocks(&j0),
        m0,
        q_t: blocks(&jt),
        p_t,
    })
}

/// Coefficients of `h, h′, h″` for a trajectory of the triple.
pub fn solve_h(traj: &Trajectory, triple: &DefiningTriple) -> Result<HCoefficients> {
    let data = boundary_data(traj, triple)?;
    solve_h_from_data(triple.horizon, triple.q_dim(), triple.order(), data)
}

/// Closed-form `h`-family values; `deriv ≤ 4`.
pub fn eval_h(coeffs: &HCoefficients, t: f64, deriv: usize) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let n = coeffs.len();
    (
        (0..n).map(|k| coeffs.h(k, t, deriv)).collect(),
        (0..n).map(|k| coeffs.hp(k, t, deriv)).collect(),
        (0..n).map(|k| coeffs.hpp(k, t, deriv)).collect(),
    )
}

/// `L̃ − L`: the `h`-family part of the extended Lagrangian (all `β`).
pub fn h_energy(coeffs: &HCoefficients, hv: &HValues) -> f64 {
    let w4 = coeffs.omega.powi(4);
    (0..coeffs.len())
        .map(|k| {
            let (h, hp, hpp) = (&hv.h[k], &hv.hp[k], &hv.hpp[k]);
            0.5 * (h[1] * h[1] - hp[2] * hp[2] - hpp[2] * hpp[2]) + 0.5 * h[0] * h[0]
                + 0.5 * w4 * (hp[0] * hp[0] + hpp[0] * hpp[0])
        })
        .sum()
}

/// A trajectory extended by its `h`-family, `λ ≡ 1`, and `μ`.
#[derive(Clone, Debug)]
pub struct ExtendedCurve {
    pub base: Trajectory,
    pub coeffs: HCoefficients,
    triple_order: usize,
    knots: Vec<f64>,
    mu_knots: Vec<f64>,
    lagrangian: crate::jetspace::ScalarJetField,
}

/// Extended data at one time of an [`ExtendedCurve`].
#[derive(Clone, Debug)]
pub struct ExtendedPoint {
    pub jet: JetPoint,
    pub u: Vec<f64>,
    pub hv: HValues,
    pub mu: f64,
    /// `μ_(1) = −L̃`.
    pub mu_rate: f64,
    pub ltilde: f64,
}

/// Tangent vector over `(t, q, u, h, h′, h″, μ)`; each `h`-family entry holds
/// the `(dh_(0), dh_(1))` components.
#[derive(Clone, Debug, PartialEq)]
pub struct ExtendedTangent {
    pub dt: f64,
    pub dq: Vec<f64>,
    pub du: Vec<f64>,
    pub dh: Vec<[f64; 2]>,
    pub dhp: Vec<[f64; 2]>,
    pub dhpp: Vec<[f64; 2]>,
    pub dmu: f64,
}

impl ExtendedTangent {
    /// Tangent of the extended lift of the curve through `p` (`dt = 1`).
    pub fn lift(p: &ExtendedPoint) -> Self {
        let n = p.jet.dim();
        let order = p.jet.order();
        let mut dq = vec![0.0; n * order];
        for beta in 0..order {
            for i in 0..n {
                dq[beta * n + i] = p.jet.get(i, beta + 1);
            }
        }
        Self {
            dt: 1.0,
            dq,
            du: vec![0.0; p.u.len()],
            dh: p.hv.h.iter().map(|h| [h[1], h[2]]).collect(),
            dhp: p.hv.hp.iter().map(|h| [h[1], h[2]]).collect(),
            dhpp: p.hv.hpp.iter().map(|h| [h[1], h[2]]).collect(),
            dmu: p.mu_rate,
        }
    }
}

impl ExtendedCurve {
    /// Solve the `h`-family and tabulate `μ` on the trajectory mesh.
    pub fn new(triple: &DefiningTriple, traj: &Trajectory) -> Result<Self> {
        let coeffs = solve_h(traj, triple)?;
        let knots = traj.nodes().to_vec();
        let mut this = Self {
            base: traj.clone(),
            coeffs,
            triple_order: triple.order(),
            knots,
            mu_knots: Vec::new(),
            lagrangian: triple.lagrangian.field.clone(),
        };
        let mut acc = 0.0;
        let mut mu = vec![0.0];
        for w in this.knots.windows(2) {
            let mut err = None;
            acc -= gauss_legendre_8(
                |t| match this.ltilde(t) {
                    Ok(v) => v,
                    Err(e) => {
                        err = Some(e);
                        0.0
                    }
                },
                w[0],
                w[1],
            );
            if let Some(e) = err {
                return Err(e);
            }
            mu.push(acc);
        }
        this.mu_knots = mu;
        Ok(this)
    }

    /// `λ`, identically one.
    pub fn lambda(&self) -> f64 {
        1.0
    }

    /// Extended Lagrangian `L̃` at `t`.
    pub fn ltilde(&self, t: f64) -> Result<f64> {
        let jet = self.base.jet(t, self.triple_order)?;
        let u = self.base.control_value(t);
        let hv = self.coeffs.values(t);
        Ok(self.lagrangian.eval(&jet, &u) + h_energy(&self.coeffs, &hv))
    }

    /// `μ(t) = −∫₀ᵗ L̃`.
    pub fn mu(&self, t: f64) -> Result<f64> {
        let (lo, hi) = self.base.range();
        if t < lo - 1e-12 || t > hi + 1e-12 {
            return Err(Error::TimeOutOfRange { t, lo, hi });
        }
        let k = self.knots.partition_point(|x| *x <= t).saturating_sub(1);
        if self.knots[k] == t {
            return Ok(self.mu_knots[k]);
        }
        let mut err = None;
        let tail = gauss_legendre_8(
            |s| match self.ltilde(s) {
                Ok(v) => v,
                Err(e) => {
                    err = Some(e);
                    0.0
                }
            },
            self.knots[k],
            t,
        );
        match err {
            Some(e) => Err(e),
            None => Ok(self.mu_knots[k] - tail),
        }
    }

    /// `μ(T)`.
    pub fn mu_end(&self) -> f64 {
        *self.mu_knots.last().unwrap()
    }

    /// Full extended point at `t` with jets of order `order`.
    pub fn point(&self, t: f64, order: usize) -> Result<ExtendedPoint> {
        let jet = self.base.jet(t, order)?;
        let u = self.base.control_value(t);
        let hv = self.coeffs.values(t);
        let ltilde = self.lagrangian.eval(&jet, &u) + h_energy(&self.coeffs, &hv);
        Ok(ExtendedPoint {
            jet,
            u,
            hv,
            mu: self.mu(t)?,
            mu_rate: -ltilde,
            ltilde,
        })
    }
}

/// Controlled Poincaré–Cartan form of `L̂ = μ_(1) + L̃ + dC/dt` paired with a
/// tangent vector.
///
/// The `h`-contact terms are restricted to `range`; the momentum part uses
/// `L + dC/dt` with `δ` up to `max(r, r̃+1)`.
pub fn pc_form_pairing(
    triple: &DefiningTriple,
    point: &ExtendedPoint,
    tangent: &ExtendedTangent,
    range: BetaRange,
) -> Result<f64> {
    let n = triple.q_dim();
    let r_f = triple.boundary_order();
    let jet = &point.jet;
    let need = 2 * r_f - 1;
    if jet.order() < need.max(1) || tangent.dq.len() < n * r_f {
        return Err(Error::InsufficientJetOrder {
            have: jet.order(),
            need: need.max(1),
        });
    }
    let cdot = triple.cost_rate().eval(jet, &point.u);
    let l_hat = point.mu_rate + point.ltilde + cdot;
    let mut acc = l_hat * tangent.dt;
    let m = momenta(triple.boundary_lagrangian(), r_f, jet, &point.u)?;
    for beta in 0..r_f {
        for i in 0..n {
            let contact = tangent.dq[beta * n + i] - jet.get(i, beta + 1) * tangent.dt;
            acc += m[beta * n + i] * contact;
        }
    }
    let hv = &point.hv;
    for k in 0..hv.h.len() {
        if !range.includes(k / n) {
            continue;
        }
        let (h, hp, hpp) = (&hv.h[k], &hv.hp[k], &hv.hpp[k]);
        let dt = tangent.dt;
        acc += h[1] * (tangent.dh[k][0] - h[1] * dt);
        acc -= hp[2] * (tangent.dhp[k][1] - hp[2] * dt);
        acc -= hpp[2] * (tangent.dhpp[k][1] - hpp[2] * dt);
        acc += hp[3] * (tangent.dhp[k][0] - hp[1] * dt);
        acc += hpp[3] * (tangent.dhpp[k][0] - hpp[1] * dt);
    }
    acc += tangent.dmu - point.mu_rate * tangent.dt;
    Ok(acc)
}

/// `∫₀ᵀ α^PC(lift)` along the extended lift of `ext` (Gauss–Legendre per step).
pub fn lift_integral(triple: &DefiningTriple, ext: &ExtendedCurve, range: BetaRange) -> Result<f64> {
    let order = triple.working_order();
    let mut err = None;
    let mut total = 0.0;
    for (a, b) in ext.base.intervals() {
        total += gauss_legendre_8(
            |t| {
                let v = ext.point(t, order).and_then(|p| {
                    let tan = ExtendedTangent::lift(&p);
                    pc_form_pairing(triple, &p, &tan, range)
                });
                match v {
                    Ok(v) => v,
                    Err(e) => {
                        err = Some(e);
                        0.0
                    }
                }
            },
            a,
            b,
        );
    }
    match err {
        Some(e) => Err(e),
        None => Ok(total),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{E, FRAC_PI_2};

    #[test]
    fn matrix_at_quarter_period() {
        let m = boundary_matrix(FRAC_PI_2);
        let ep = E.powf(FRAC_PI_2);
        let expected = Matrix4::from_row_slice(&[
            1.0, 1.0, 1.0, 0.0, 1.0, -1.0, 0.0, 1.0, ep, -1.0 / ep, -1.0, 0.0, ep, 1.0 / ep, 0.0, -1.0,
        ]);
        assert!((m - expected).abs().max() < 1e-14);
        for t in [0.1, 1.0, FRAC_PI_2, 10.0] {
            let m = boundary_matrix(t);
            assert_eq!(m.row(0).iter().copied().collect::<Vec<_>>(), vec![1.0, 1.0, 1.0, 0.0]);
            assert!(m.determinant().abs() > 1e-12, "T = {t}");
        }
    }

    fn data(q0: f64, m0: f64, qt: f64, pt: f64) -> BoundaryData {
        BoundaryData {
            q0: vec![q0],
            m0: vec![m0],
            q_t: vec![qt],
            p_t: vec![pt],
        }
    }

    #[test]
    fn zero_data_gives_zero_h() {
        let c = solve_h_from_data(1.0, 1, 1, data(0.0, 0.0, 0.0, 0.0)).unwrap();
        assert_eq!((c.a[0], c.b[0]), (0.0, 0.0));
        assert!(c.hp[0].iter().all(|v| *v == 0.0));
    }

    #[test]
    fn decaying_exponential() {
        let c = solve_h_from_data(1.0, 1, 1, data(1.0, 1.0, 0.3, -0.2)).unwrap();
        assert_eq!((c.a[0], c.b[0]), (0.0, 1.0));
        assert!((c.h(0, 0.7, 0) - (-0.7f64).exp()).abs() < 1e-15);
        assert!(c.boundary_residual() < 1e-12);
        let t = c.horizon;
        assert!((c.hpp(0, t, 1) - c.h(0, t, 0)).abs() < 1e-12);
        assert!((c.hpp(0, t, 2) - c.h(0, t, 1)).abs() < 1e-12);
    }

    #[test]
    fn quartic_identity_for_generic_coefficients() {
        let mut c = solve_h_from_data(2.0, 1, 1, data(0.5, -0.25, 1.5, 2.0)).unwrap();
        c.hp[0] = [0.3, -1.2, 0.7, 2.2];
        for k in 0..20 {
            let t = 2.0 * k as f64 / 19.0;
            assert!(c.ode_residual(t) < 1e-10);
        }
        c.a[0] = 0.5;
        c.b[0] = 0.5;
        assert!((c.h(0, 0.3, 0) - 0.3f64.cosh()).abs() < 1e-15);
    }
}
