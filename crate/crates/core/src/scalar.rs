//! Scalar types for exact (non-finite-difference) differentiation.
//!
//! Every problem-defining function in this crate (Lagrangians, costs,
//! normal-form right-hand sides, control curves) is written once, generically
//! over [`Scalar`], and then instantiated with
//!
//! * `f64` — plain evaluation (the hot path inside the integrator),
//! * [`Dual<S>`] — one forward-mode directional derivative,
//! * [`Taylor<S>`] — a truncated Taylor series in an auxiliary time offset `τ`.
//!
//! Nesting the two wrappers (`Taylor<Dual<f64>>`) yields iterated total
//! derivatives of partial derivatives — exactly the objects that appear in the
//! momentum sums of higher-order variational calculus — to roundoff accuracy.

use std::fmt::Debug;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

/// Number of stored Taylor coefficients (maximum series degree is one less).
pub const TAYLOR_CAPACITY: usize = 10;

/// Arithmetic required by generic problem definitions.
pub trait Scalar:
    Copy
    + Debug
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
{
    /// Lift a real constant.
    fn cst(v: f64) -> Self;
    /// Primal (real) value, used for branching decisions.
    fn re(&self) -> f64;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn sqrt(self) -> Self;

    fn zero() -> Self {
        Self::cst(0.0)
    }

    fn one() -> Self {
        Self::cst(1.0)
    }

    /// Integer power by repeated squaring.
    fn powi(self, n: i32) -> Self {
        if n < 0 {
            return Self::one() / self.powi(-n);
        }
        let mut base = self;
        let mut acc = Self::one();
        let mut k = n as u32;
        while k > 0 {
            if k & 1 == 1 {
                acc *= base;
            }
            base *= base;
            k >>= 1;
        }
        acc
    }

    fn tanh(self) -> Self {
        let e2 = (self * 2.0).exp();
        (e2 - 1.0) / (e2 + 1.0)
    }
}

impl Scalar for f64 {
    #[inline]
    fn cst(v: f64) -> Self {
        v
    }
    #[inline]
    fn re(&self) -> f64 {
        *self
    }
    #[inline]
    fn sin(self) -> Self {
        f64::sin(self)
    }
    #[inline]
    fn cos(self) -> Self {
        f64::cos(self)
    }
    #[inline]
    fn exp(self) -> Self {
        f64::exp(self)
    }
    #[inline]
    fn ln(self) -> Self {
        f64::ln(self)
    }
    #[inline]
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    #[inline]
    fn powi(self, n: i32) -> Self {
        f64::powi(self, n)
    }
    #[inline]
    fn tanh(self) -> Self {
        f64::tanh(self)
    }
}

// ---------------------------------------------------------------------------
// Dual numbers
// ---------------------------------------------------------------------------

/// Forward-mode dual number `v + d·e` with `e² = 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dual<S> {
    pub v: S,
    pub d: S,
}

impl<S: Scalar> Dual<S> {
    pub fn new(v: S, d: S) -> Self {
        Self { v, d }
    }

    /// A variable with unit seed.
    pub fn var(v: S) -> Self {
        Self { v, d: S::one() }
    }

    pub fn constant(v: S) -> Self {
        Self { v, d: S::zero() }
    }
}

impl<S: Scalar> Add for Dual<S> {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        Self::new(self.v + o.v, self.d + o.d)
    }
}
impl<S: Scalar> Sub for Dual<S> {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        Self::new(self.v - o.v, self.d - o.d)
    }
}
impl<S: Scalar> Mul for Dual<S> {
    type Output = Self;
    #[inline]
    fn mul(self, o: Self) -> Self {
        Self::new(self.v * o.v, self.v * o.d + self.d * o.v)
    }
}
impl<S: Scalar> Div for Dual<S> {
    type Output = Self;
    #[inline]
    fn div(self, o: Self) -> Self {
        let q = self.v / o.v;
        Self::new(q, (self.d - q * o.d) / o.v)
    }
}
impl<S: Scalar> Neg for Dual<S> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Self::new(-self.v, -self.d)
    }
}
impl<S: Scalar> Add<f64> for Dual<S> {
    type Output = Self;
    #[inline]
    fn add(self, o: f64) -> Self {
        Self::new(self.v + o, self.d)
    }
}
impl<S: Scalar> Sub<f64> for Dual<S> {
    type Output = Self;
    #[inline]
    fn sub(self, o: f64) -> Self {
        Self::new(self.v - o, self.d)
    }
}
impl<S: Scalar> Mul<f64> for Dual<S> {
    type Output = Self;
    #[inline]
    fn mul(self, o: f64) -> Self {
        Self::new(self.v * o, self.d * o)
    }
}
impl<S: Scalar> Div<f64> for Dual<S> {
    type Output = Self;
    #[inline]
    fn div(self, o: f64) -> Self {
        Self::new(self.v / o, self.d / o)
    }
}
impl<S: Scalar> AddAssign for Dual<S> {
    #[inline]
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}
impl<S: Scalar> SubAssign for Dual<S> {
    #[inline]
    fn sub_assign(&mut self, o: Self) {
        *self = *self - o;
    }
}
impl<S: Scalar> MulAssign for Dual<S> {
    #[inline]
    fn mul_assign(&mut self, o: Self) {
        *self = *self * o;
    }
}

impl<S: Scalar> Scalar for Dual<S> {
    fn cst(v: f64) -> Self {
        Self::constant(S::cst(v))
    }
    fn re(&self) -> f64 {
        self.v.re()
    }
    fn sin(self) -> Self {
        Self::new(self.v.sin(), self.d * self.v.cos())
    }
    fn cos(self) -> Self {
        Self::new(self.v.cos(), -(self.d * self.v.sin()))
    }
    fn exp(self) -> Self {
        let e = self.v.exp();
        Self::new(e, self.d * e)
    }
    fn ln(self) -> Self {
        Self::new(self.v.ln(), self.d / self.v)
    }
    fn sqrt(self) -> Self {
        let r = self.v.sqrt();
        Self::new(r, self.d / (r * 2.0))
    }
}

// ---------------------------------------------------------------------------
// Truncated Taylor series
// ---------------------------------------------------------------------------

/// Truncated Taylor series `Σ_{k<len} c_k τ^k` with coefficients in `S`.
///
/// `len == 1` marks an exact constant; every non-constant series taking part
/// in one computation must be created with the same `len` (the truncation
/// order of that computation). Binary operations then produce
/// `max(len_a, len_b)` coefficients, which is exact for constants and the
/// correct truncation otherwise.
#[derive(Clone, Copy, Debug)]
pub struct Taylor<S> {
    len: usize,
    c: [S; TAYLOR_CAPACITY],
}

impl<S: Scalar> Taylor<S> {
    /// Series with the given coefficients (at most [`TAYLOR_CAPACITY`]).
    pub fn from_coeffs(coeffs: &[S]) -> Self {
        assert!(
            !coeffs.is_empty() && coeffs.len() <= TAYLOR_CAPACITY,
            "Taylor series length {} outside 1..={}",
            coeffs.len(),
            TAYLOR_CAPACITY
        );
        let mut c = [S::zero(); TAYLOR_CAPACITY];
        c[..coeffs.len()].copy_from_slice(coeffs);
        Self { len: coeffs.len(), c }
    }

    /// Series of length `len` holding `v + slope·τ` (higher coefficients zero).
    pub fn linear(v: S, slope: S, len: usize) -> Self {
        assert!((1..=TAYLOR_CAPACITY).contains(&len));
        let mut c = [S::zero(); TAYLOR_CAPACITY];
        c[0] = v;
        if len > 1 {
            c[1] = slope;
        }
        Self { len, c }
    }

    /// Constant padded to `len` coefficients.
    pub fn padded(v: S, len: usize) -> Self {
        Self::linear(v, S::zero(), len)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Coefficient `k` (zero beyond the stored length).
    pub fn coeff(&self, k: usize) -> S {
        if k < self.len {
            self.c[k]
        } else {
            S::zero()
        }
    }

    pub fn coeffs(&self) -> &[S] {
        &self.c[..self.len]
    }

    /// `k`-th derivative with respect to `τ` at `τ = 0`, i.e. `k!·c_k`.
    pub fn derivative(&self, k: usize) -> S {
        self.coeff(k) * factorial(k)
    }

    /// Multiply every coefficient by a scalar of the coefficient type.
    pub fn scale(self, o: S) -> Self {
        let mut r = self;
        for k in 0..r.len {
            r.c[k] *= o;
        }
        r
    }

    fn zeros(len: usize) -> Self {
        Self {
            len,
            c: [S::zero(); TAYLOR_CAPACITY],
        }
    }
}

/// `k!` as a float.
pub fn factorial(k: usize) -> f64 {
    (1..=k).fold(1.0, |acc, j| acc * j as f64)
}

impl<S: Scalar> Add for Taylor<S> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        let len = self.len.max(o.len);
        let mut r = Self::zeros(len);
        for k in 0..len {
            r.c[k] = self.coeff(k) + o.coeff(k);
        }
        r
    }
}
impl<S: Scalar> Sub for Taylor<S> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        let len = self.len.max(o.len);
        let mut r = Self::zeros(len);
        for k in 0..len {
            r.c[k] = self.coeff(k) - o.coeff(k);
        }
        r
    }
}
impl<S: Scalar> Mul for Taylor<S> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        if self.len == 1 {
            return o.scale(self.c[0]);
        }
        if o.len == 1 {
            return self.scale(o.c[0]);
        }
        let len = self.len.max(o.len);
        let mut r = Self::zeros(len);
        for k in 0..len {
            let mut acc = S::zero();
            for j in 0..=k {
                if j < self.len && k - j < o.len {
                    acc += self.c[j] * o.c[k - j];
                }
            }
            r.c[k] = acc;
        }
        r
    }
}
impl<S: Scalar> Div for Taylor<S> {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        if o.len == 1 {
            let mut r = self;
            for k in 0..r.len {
                r.c[k] = r.c[k] / o.c[0];
            }
            return r;
        }
        let len = self.len.max(o.len);
        let mut q = Self::zeros(len);
        for k in 0..len {
            let mut acc = self.coeff(k);
            for j in 1..=k {
                acc -= o.coeff(j) * q.c[k - j];
            }
            q.c[k] = acc / o.c[0];
        }
        q
    }
}
impl<S: Scalar> Neg for Taylor<S> {
    type Output = Self;
    fn neg(self) -> Self {
        let mut r = self;
        for k in 0..r.len {
            r.c[k] = -r.c[k];
        }
        r
    }
}
impl<S: Scalar> Add<f64> for Taylor<S> {
    type Output = Self;
    fn add(self, o: f64) -> Self {
        let mut r = self;
        r.c[0] = r.c[0] + o;
        r
    }
}
impl<S: Scalar> Sub<f64> for Taylor<S> {
    type Output = Self;
    fn sub(self, o: f64) -> Self {
        let mut r = self;
        r.c[0] = r.c[0] - o;
        r
    }
}
impl<S: Scalar> Mul<f64> for Taylor<S> {
    type Output = Self;
    fn mul(self, o: f64) -> Self {
        let mut r = self;
        for k in 0..r.len {
            r.c[k] = r.c[k] * o;
        }
        r
    }
}
impl<S: Scalar> Div<f64> for Taylor<S> {
    type Output = Self;
    fn div(self, o: f64) -> Self {
        let mut r = self;
        for k in 0..r.len {
            r.c[k] = r.c[k] / o;
        }
        r
    }
}
impl<S: Scalar> AddAssign for Taylor<S> {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}
impl<S: Scalar> SubAssign for Taylor<S> {
    fn sub_assign(&mut self, o: Self) {
        *self = *self - o;
    }
}
impl<S: Scalar> MulAssign for Taylor<S> {
    fn mul_assign(&mut self, o: Self) {
        *self = *self * o;
    }
}

impl<S: Scalar> Scalar for Taylor<S> {
    fn cst(v: f64) -> Self {
        Self::from_coeffs(&[S::cst(v)])
    }

    fn re(&self) -> f64 {
        self.c[0].re()
    }

    fn sin(self) -> Self {
        sin_cos(self).0
    }

    fn cos(self) -> Self {
        sin_cos(self).1
    }

    fn exp(self) -> Self {
        let mut e = Self::zeros(self.len);
        e.c[0] = self.c[0].exp();
        for k in 1..self.len {
            let mut acc = S::zero();
            for j in 1..=k {
                acc += self.c[j] * e.c[k - j] * j as f64;
            }
            e.c[k] = acc / k as f64;
        }
        e
    }

    fn ln(self) -> Self {
        let mut l = Self::zeros(self.len);
        l.c[0] = self.c[0].ln();
        for k in 1..self.len {
            let mut acc = self.c[k];
            for j in 1..k {
                acc -= l.c[j] * self.c[k - j] * (j as f64 / k as f64);
            }
            l.c[k] = acc / self.c[0];
        }
        l
    }

    fn sqrt(self) -> Self {
        let mut r = Self::zeros(self.len);
        r.c[0] = self.c[0].sqrt();
        for k in 1..self.len {
            let mut acc = self.c[k];
            for j in 1..k {
                acc -= r.c[j] * r.c[k - j];
            }
            r.c[k] = acc / (r.c[0] * 2.0);
        }
        r
    }
}

fn sin_cos<S: Scalar>(a: Taylor<S>) -> (Taylor<S>, Taylor<S>) {
    let mut s = Taylor::zeros(a.len);
    let mut c = Taylor::zeros(a.len);
    s.c[0] = a.c[0].sin();
    c.c[0] = a.c[0].cos();
    for k in 1..a.len {
        let mut sa = S::zero();
        let mut ca = S::zero();
        for j in 1..=k {
            let w = a.c[j] * j as f64;
            sa += w * c.c[k - j];
            ca += w * s.c[k - j];
        }
        s.c[k] = sa / k as f64;
        c.c[k] = -(ca / k as f64);
    }
    (s, c)
}

/// Series arithmetic used for iterated total derivatives of partials.
pub type Ad = Taylor<Dual<f64>>;
/// One more series level, used to build total-derivative fields (e.g. `dC/dt`).
pub type Ad2 = Taylor<Ad>;
/// Plain series arithmetic used for jet reconstruction along trajectories.
pub type Tf = Taylor<f64>;
