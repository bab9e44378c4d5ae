//! Needle modifications and their smoothed versions, needle variations led
//! by an initial-data family `Σ(ε, s)`, the corrective term
//! `liminf (μ′(T,1) − μ′(T,0))/ε`, the GoodN sign test, terminal adjoint
//! conditions, and the generalized maximum-principle verdict.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::auxiliary::BetaRange;
pub use crate::classical::{sort_violations, Violation};
use crate::control::{ControlCurve, Side};
use crate::dynamics::Trajectory;
use crate::error::{Error, Result};
use crate::homotopy::{
    build_boundary_surface, build_surface, delta_mu_prime_closed_form, delta_mu_prime_direct, goodn_residual,
    ControlHomotopy, VariationSurface,
};
use crate::jetspace::{partial, Coord, JetPoint};
use crate::problem::{momenta, pontryagin_p, DefiningTriple};

/// Default ramp fraction `k` (ramps have width `k·ε²`).
pub const DEFAULT_RAMP: f64 = 0.05;
/// Default number of `s`-intervals of a needle variation.
pub const NEEDLE_S_INTERVALS: usize = 4;
/// Default number of widths in an `ε`-sequence.
pub const DEFAULT_EPS_COUNT: usize = 7;

/// `ε₀·2^{−j}`, `j = 0..count`.
pub fn default_eps_sequence(eps0: f64, count: usize) -> Vec<f64> {
    (0..count).map(|j| eps0 * 0.5_f64.powi(j as i32)).collect()
}

type CustomSigma = Arc<dyn Fn(f64, f64) -> Vec<f64> + Send + Sync>;

/// How the initial data of a needle variation depend on `(ε, s)`.
#[derive(Clone)]
pub enum SigmaPolicy {
    /// `Σ(ε, s) = σ₀`.
    Frozen,
    /// Free initial slots chosen per slice so that the terminal adjoint
    /// conditions hold.
    TerminalEnforcing,
    /// User family `(ε, s) ↦ σ`.
    Custom(CustomSigma),
}

impl fmt::Debug for SigmaPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Frozen => "Frozen",
            Self::TerminalEnforcing => "TerminalEnforcing",
            Self::Custom(_) => "Custom",
        })
    }
}

/// Parameters of a needle variation.
#[derive(Clone, Debug)]
pub struct NeedleSpec {
    pub tau: f64,
    pub omega: Vec<f64>,
    pub eps0: f64,
    pub k: f64,
    pub sigma: SigmaPolicy,
}

impl NeedleSpec {
    pub fn new(tau: f64, omega: Vec<f64>, eps0: f64, sigma: SigmaPolicy) -> Self {
        Self {
            tau,
            omega,
            eps0,
            k: DEFAULT_RAMP,
            sigma,
        }
    }

    /// Check `[τ − ε₀ − kε₀², τ + kε₀²] ⊂ (0, T)` and `k ∈ (0, 1)`.
    pub fn validate(&self, horizon: f64) -> Result<()> {
        let w = self.k * self.eps0 * self.eps0;
        if !(self.eps0 > 0.0 && self.k > 0.0 && self.k < 1.0) {
            return Err(Error::BadParams(format!("needle needs ε₀ > 0 and k ∈ (0,1): {self:?}")));
        }
        if self.tau - self.eps0 - w <= 0.0 || self.tau + w >= horizon {
            return Err(Error::BadParams(format!(
                "needle support [{}, {}] leaves (0, {horizon})",
                self.tau - self.eps0 - w,
                self.tau + w
            )));
        }
        Ok(())
    }
}

/// `ω` on `[τ−ε, τ)`, `u₀` elsewhere.
pub fn needle_modification(u0: &ControlCurve, spec: &NeedleSpec, eps: f64) -> ControlCurve {
    ControlCurve::needle(u0, spec.tau, eps, spec.omega.clone(), 0.0, false)
}

/// Needle with quintic ramps on `[τ−ε−kε², τ−ε]` and `[τ, τ+kε²]`.
pub fn smooth_needle(u0: &ControlCurve, spec: &NeedleSpec, eps: f64) -> ControlCurve {
    ControlCurve::needle(u0, spec.tau, eps, spec.omega.clone(), spec.k, true)
}

/// `∂C/∂q^i_(β) + M^L_{i,β}` at a terminal jet for the state-type
/// coordinates `i` and `β < r`, ordered `β`-major.
pub fn terminal_residual(triple: &DefiningTriple, jet: &JetPoint, u: &[f64]) -> Result<Vec<f64>> {
    let r = triple.order();
    let n = triple.q_dim();
    let xs: Vec<usize> = match &triple.adjoint {
        Some(b) => b.x.clone(),
        None => (0..n).collect(),
    };
    let m = momenta(&triple.lagrangian.field, r, jet, u)?;
    let mut out = Vec::with_capacity(r * xs.len());
    for beta in 0..r {
        for &i in &xs {
            let dc = if beta <= triple.cost.order() {
                partial(&triple.cost.field, jet, u, Coord::Q { i, beta })
            } else {
                0.0
            };
            out.push(dc + m[beta * n + i]);
        }
    }
    Ok(out)
}

/// [`terminal_residual`] at the end of a trajectory.
pub fn terminal_residual_of(triple: &DefiningTriple, traj: &Trajectory) -> Result<Vec<f64>> {
    let t_end = triple.horizon;
    let jet = traj.jet(t_end, triple.working_order())?;
    terminal_residual(triple, &jet, &traj.control_value(t_end))
}

/// Terminal values `p^k_(β)(T)` for the adjoint-type coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct TerminalConditions {
    /// Adjoint coordinate indices.
    pub p: Vec<usize>,
    pub r: usize,
    /// `values[β·|p| + k]`.
    pub values: Vec<f64>,
}

impl TerminalConditions {
    /// `p^{p[k]}_(β)(T)`.
    pub fn value(&self, k: usize, beta: usize) -> f64 {
        self.values[beta * self.p.len() + k]
    }

    /// Overwrite the adjoint blocks `β < r` of a jet.
    pub fn apply(&self, jet: &mut JetPoint) {
        for beta in 0..self.r.min(jet.order() + 1) {
            for (k, &i) in self.p.iter().enumerate() {
                jet.set(i, beta, self.value(k, beta));
            }
        }
    }
}

impl fmt::Display for TerminalConditions {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for beta in 0..self.r {
            for (k, i) in self.p.iter().enumerate() {
                writeln!(f, "q{i}_({beta})(T) = {}", self.value(k, beta))?;
            }
        }
        Ok(())
    }
}

/// Solve `∂C/∂q^i_(β) + Σ (−1)^ε (d/dt)^ε ∂L/∂q^i_(β+1+ε) = 0` at `T`
/// (state-type `i`, `β < r`) for the adjoint blocks `p_(0..r−1)(T)`.
///
/// The remaining jet entries are taken from `jet`. The residual must be
/// affine in the adjoint blocks (`NonSolvableForm` otherwise, or when the
/// linear system is singular).
pub fn transversality_synthesize(triple: &DefiningTriple, jet: &JetPoint, u: &[f64]) -> Result<TerminalConditions> {
    let block = triple
        .adjoint
        .clone()
        .ok_or_else(|| Error::NonSolvableForm("triple declares no adjoint block".into()))?;
    let r = triple.order();
    if jet.order() + 1 < 2 * r {
        return Err(Error::InsufficientJetOrder {
            have: jet.order(),
            need: 2 * r - 1,
        });
    }
    let np = block.p.len();
    let unknowns = np * r;
    let eval = |z: &[f64]| -> Result<Vec<f64>> {
        let mut j = jet.clone();
        for beta in 0..r {
            for (k, &i) in block.p.iter().enumerate() {
                j.set(i, beta, z[beta * np + k]);
            }
        }
        terminal_residual(triple, &j, u)
    };
    let zero = vec![0.0; unknowns];
    let r0 = eval(&zero)?;
    if r0.len() != unknowns {
        return Err(Error::NonSolvableForm(format!(
            "{} conditions for {unknowns} adjoint unknowns",
            r0.len()
        )));
    }
    let mut a = DMatrix::zeros(unknowns, unknowns);
    for c in 0..unknowns {
        let mut e = zero.clone();
        e[c] = 1.0;
        let rc = eval(&e)?;
        for row in 0..unknowns {
            a[(row, c)] = rc[row] - r0[row];
        }
    }
    let probe: Vec<f64> = (0..unknowns).map(|k| 0.37 + 0.61 * k as f64 - 0.13 * (k * k) as f64).collect();
    let rp = eval(&probe)?;
    let pred = &a * DVector::from_column_slice(&probe);
    let scale = 1.0 + a.amax() * probe.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    for row in 0..unknowns {
        if (rp[row] - r0[row] - pred[row]).abs() > 1e-7 * scale {
            return Err(Error::NonSolvableForm(
                "terminal conditions are not affine in the adjoint block".into(),
            ));
        }
    }
    let rhs = -DVector::from_column_slice(&r0);
    let sol = a
        .clone()
        .lu()
        .solve(&rhs)
        .filter(|s| s.iter().all(|v| v.is_finite()))
        .ok_or_else(|| Error::NonSolvableForm("terminal conditions do not determine the adjoint".into()))?;
    Ok(TerminalConditions {
        p: block.p,
        r,
        values: sol.iter().copied().collect(),
    })
}

/// Choose the free initial slots so that the terminal conditions hold under
/// control `u`; fixed and range slots are taken from `base`.
///
/// Linear shooting with up to three Newton refinements;
/// `ConstraintViolation` if the residual cannot be annihilated.
pub fn enforce_sigma(triple: &DefiningTriple, u: &ControlCurve, base: &[f64]) -> Result<Vec<f64>> {
    let free = triple.initial.free_indices();
    let residual = |z: &[f64]| -> Result<Vec<f64>> {
        let mut y = base.to_vec();
        for (k, &i) in free.iter().enumerate() {
            y[i] = z[k];
        }
        terminal_residual_of(triple, &triple.trajectory(u, &y)?)
    };
    let nf = free.len();
    let mut z: Vec<f64> = free.iter().map(|&i| base[i]).collect();
    let r0 = residual(&z)?;
    if nf == 0 {
        return check_enforced(&r0, base.to_vec());
    }
    let mut jac = DMatrix::zeros(r0.len(), nf);
    for c in 0..nf {
        let mut zc = z.clone();
        zc[c] += 1.0;
        let rc = residual(&zc)?;
        for row in 0..r0.len() {
            jac[(row, c)] = rc[row] - r0[row];
        }
    }
    let svd = jac.clone().svd(true, true);
    let mut res = r0;
    for _ in 0..3 {
        let norm = res.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if norm <= 1e-11 * (1.0 + z.iter().fold(0.0_f64, |m, v| m.max(v.abs()))) {
            break;
        }
        let step = if jac.is_square() {
            jac.clone().lu().solve(&DVector::from_column_slice(&res))
        } else {
            svd.solve(&DVector::from_column_slice(&res), 1e-12).ok()
        }
        .ok_or_else(|| Error::ConstraintViolation("terminal conditions cannot be reached from the free slots".into()))?;
        for (zk, dk) in z.iter_mut().zip(step.iter()) {
            *zk -= dk;
        }
        res = residual(&z)?;
    }
    let mut y = base.to_vec();
    for (k, &i) in free.iter().enumerate() {
        y[i] = z[k];
    }
    check_enforced(&res, y)
}

fn check_enforced(res: &[f64], y: Vec<f64>) -> Result<Vec<f64>> {
    let scale = 1.0 + y.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let norm = res.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if norm > 1e-7 * scale {
        return Err(Error::ConstraintViolation(format!(
            "terminal conditions violated after shooting (residual {norm:e})"
        )));
    }
    Ok(y)
}

fn needle_homotopy(
    triple: &DefiningTriple,
    gamma0: &Trajectory,
    spec: &NeedleSpec,
    eps: f64,
    s_intervals: usize,
) -> Result<ControlHomotopy> {
    spec.validate(triple.horizon)?;
    if !(eps > 0.0 && eps <= spec.eps0 * (1.0 + 1e-12)) {
        return Err(Error::BadParams(format!("ε = {eps} outside (0, ε₀ = {}]", spec.eps0)));
    }
    let u0 = gamma0.control().clone();
    let needle = smooth_needle(&u0, spec, eps);
    let sigma0 = gamma0.initial_state().to_vec();
    let policy = spec.sigma.clone();
    let tr = triple.clone();
    let s0 = sigma0.clone();
    let sigma = move |s: f64, u: &ControlCurve| -> Result<Vec<f64>> {
        match &policy {
            SigmaPolicy::Frozen => Ok(s0.clone()),
            SigmaPolicy::TerminalEnforcing => enforce_sigma(&tr, u, &s0),
            SigmaPolicy::Custom(f) => Ok(f(eps, s)),
        }
    };
    let at_zero = sigma(0.0, &u0)?;
    let scale = 1.0 + sigma0.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let gap = at_zero
        .iter()
        .zip(&sigma0)
        .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
    if at_zero.len() != sigma0.len() || gap > 1e-8 * scale {
        return Err(Error::ConstraintViolation(format!(
            "Σ(ε, 0) differs from σ₀ by {gap:e}"
        )));
    }
    let (a, b) = (u0.clone(), needle);
    ControlHomotopy::new(
        triple.horizon,
        s_intervals,
        move |s| ControlCurve::blend(&a, &b, s),
        sigma,
    )
}

/// Variation `u = (1−s)u₀ + s·ǔ_ε`, `σ(s) = Σ(ε, s)`, with full extended data.
pub fn needle_variation(
    triple: &DefiningTriple,
    gamma0: &Trajectory,
    spec: &NeedleSpec,
    eps: f64,
    s_intervals: usize,
) -> Result<VariationSurface> {
    let hom = needle_homotopy(triple, gamma0, spec, eps, s_intervals)?;
    build_surface(triple, &hom, BetaRange::Full)
}

/// As [`needle_variation`], keeping only boundary data.
pub fn needle_boundary_variation(
    triple: &DefiningTriple,
    gamma0: &Trajectory,
    spec: &NeedleSpec,
    eps: f64,
    s_intervals: usize,
) -> Result<VariationSurface> {
    let hom = needle_homotopy(triple, gamma0, spec, eps, s_intervals)?;
    build_boundary_surface(triple, &hom)
}

/// Both evaluations of `μ′(T,1) − μ′(T,0)` on one needle variation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DeltaMuPair {
    pub closed_form: f64,
    pub direct: f64,
}

/// Closed-form and direct `Δμ′` on the needle variation of width `eps`.
pub fn delta_mu_pair(triple: &DefiningTriple, gamma0: &Trajectory, spec: &NeedleSpec, eps: f64) -> Result<DeltaMuPair> {
    let surface = needle_variation(triple, gamma0, spec, eps, NEEDLE_S_INTERVALS)?;
    Ok(DeltaMuPair {
        closed_form: delta_mu_prime_closed_form(&surface),
        direct: delta_mu_prime_direct(&surface)?,
    })
}

/// Tolerance of the GoodN sign test relative to `1 + |C₀|`.
pub const GOODN_TOL: f64 = 1e-7;

/// GoodN residual and sign test on a needle surface.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GoodN {
    pub residual: f64,
    pub passed: bool,
}

/// Evaluate the GoodN inequality (residual `≥ −tolerance`).
pub fn goodn_check(surface: &VariationSurface) -> GoodN {
    let residual = goodn_residual(surface);
    let c0 = surface.costs()[0];
    GoodN {
        residual,
        passed: residual >= -GOODN_TOL * (1.0 + c0.abs()),
    }
}

/// Evidence for the corrective term of one needle.
#[derive(Clone, Debug, PartialEq)]
pub struct CorrectiveEstimate {
    pub eps: Vec<f64>,
    pub delta_mu: Vec<f64>,
    /// `Δμ′/ε`.
    pub estimates: Vec<f64>,
    pub goodn: Vec<GoodN>,
    /// Minimum over the last half of the sequence.
    pub liminf_proxy: f64,
    /// Linear extrapolation of the last two estimates to `ε = 0`.
    pub richardson: f64,
    /// `false` when the tail shows no detectable trend.
    pub consistent: bool,
    /// `|𝒫_{jet of slice s=1 after the needle}(ω) − 𝒫_{j_τ γ₀}(ω)|` per `ε`.
    pub lemma_limits: Vec<f64>,
    /// Value used in the verdict: `0` when every width passes GoodN,
    /// otherwise the liminf proxy.
    pub value: f64,
}

impl CorrectiveEstimate {
    pub fn goodn_all(&self) -> bool {
        self.goodn.iter().all(|g| g.passed)
    }
}

/// Estimate `liminf_{ε→0⁺} (μ′(T,1) − μ′(T,0))/ε` along `eps_sequence`
/// with the closed form of `Δμ′`.
pub fn corrective_term(
    triple: &DefiningTriple,
    gamma0: &Trajectory,
    spec: &NeedleSpec,
    eps_sequence: &[f64],
) -> Result<CorrectiveEstimate> {
    if eps_sequence.len() < 3 || eps_sequence.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::BadParams("ε-sequence must be strictly decreasing with ≥ 3 entries".into()));
    }
    let r = triple.order();
    let tau = spec.tau;
    let base_jet = gamma0.jet_side(tau, r, Side::Right)?;
    let p_base = pontryagin_p(triple, &base_jet).eval(&spec.omega);
    let rows: Vec<(f64, GoodN, f64)> = eps_sequence
        .iter()
        .map(|&eps| -> Result<_> {
            let surface = needle_boundary_variation(triple, gamma0, spec, eps, NEEDLE_S_INTERVALS)?;
            let dmu = delta_mu_prime_closed_form(&surface);
            let g = goodn_check(&surface);
            let t_after = tau + spec.k * eps * eps;
            let last = surface.trajectories().last().unwrap();
            let jet = last.jet_side(t_after, r, Side::Right)?;
            let lim = (pontryagin_p(triple, &jet).eval(&spec.omega) - p_base).abs();
            Ok((dmu, g, lim))
        })
        .collect::<Result<_>>()?;
    let delta_mu: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let estimates: Vec<f64> = delta_mu.iter().zip(eps_sequence).map(|(d, e)| d / e).collect();
    let goodn: Vec<GoodN> = rows.iter().map(|r| r.1).collect();
    let lemma_limits = rows.iter().map(|r| r.2).collect();
    let n = estimates.len();
    let tail = &estimates[n / 2..];
    let liminf_proxy = tail.iter().copied().fold(f64::INFINITY, f64::min);
    let (e1, e2) = (eps_sequence[n - 2], eps_sequence[n - 1]);
    let (q1, q2) = (estimates[n - 2], estimates[n - 1]);
    let richardson = q2 + (q2 - q1) * e2 / (e1 - e2);
    let diffs: Vec<f64> = tail.windows(2).map(|w| w[1] - w[0]).collect();
    let spread = tail.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let sign_changes = diffs.windows(2).filter(|w| w[0] * w[1] < 0.0).count();
    let consistent = sign_changes <= 1 || spread <= 1e-6;
    let goodn_all = goodn.iter().all(|g| g.passed);
    Ok(CorrectiveEstimate {
        eps: eps_sequence.to_vec(),
        delta_mu,
        estimates,
        goodn,
        liminf_proxy,
        richardson,
        consistent,
        lemma_limits,
        value: if goodn_all { 0.0 } else { liminf_proxy },
    })
}

/// Outcome of the generalized maximum principle at one `(τ, ω)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PMPVerdict {
    pub tau: f64,
    pub omega: Vec<f64>,
    pub p_at_omega: f64,
    pub p_at_uo: f64,
    /// `None` when `ω = u₀(τ)` (nothing to estimate).
    pub corrective: Option<CorrectiveEstimate>,
    pub satisfied: bool,
    /// `𝒫(ω) − corrective − 𝒫(u₀(τ))`.
    pub margin: f64,
}

/// Verdict tolerance relative to `1 + |𝒫(u₀(τ))|`.
pub const VERDICT_TOL: f64 = 1e-6;

/// Check `𝒫(ω) − corrective ≤ 𝒫(u₀(τ))` at `τ` along `γ₀`.
pub fn gpmp_verdict(
    triple: &DefiningTriple,
    gamma0: &Trajectory,
    spec: &NeedleSpec,
    eps_sequence: &[f64],
) -> Result<PMPVerdict> {
    let jet = gamma0.jet_side(spec.tau, triple.order(), Side::Right)?;
    let pf = pontryagin_p(triple, &jet);
    let u_tau = gamma0.control().value_side(spec.tau, Side::Right);
    let p_at_omega = pf.eval(&spec.omega);
    let p_at_uo = pf.eval(&u_tau);
    let same = u_tau.iter().zip(&spec.omega).all(|(a, b)| (a - b).abs() <= 1e-15);
    if same {
        return Ok(PMPVerdict {
            tau: spec.tau,
            omega: spec.omega.clone(),
            p_at_omega,
            p_at_uo,
            corrective: None,
            satisfied: true,
            margin: 0.0,
        });
    }
    let corrective = corrective_term(triple, gamma0, spec, eps_sequence)?;
    let margin = p_at_omega - corrective.value - p_at_uo;
    Ok(PMPVerdict {
        tau: spec.tau,
        omega: spec.omega.clone(),
        p_at_omega,
        p_at_uo,
        satisfied: margin <= VERDICT_TOL * (1.0 + p_at_uo.abs()),
        corrective: Some(corrective),
        margin,
    })
}

/// Result of [`pmp_scan`].
#[derive(Clone, Debug, PartialEq)]
pub struct ScanReport {
    /// Violations sorted by decreasing margin.
    pub violations: Vec<Violation>,
    pub checked: usize,
    /// Pairs with `ω = u₀(τ)`.
    pub trivial: usize,
    /// Pairs where every width passed GoodN.
    pub goodn_pairs: usize,
}

/// Run [`gpmp_verdict`] over a `(τ, ω)` grid.
pub fn pmp_scan(
    triple: &DefiningTriple,
    gamma0: &Trajectory,
    tau_grid: &[f64],
    omega_grid: &[Vec<f64>],
    eps_sequence: &[f64],
    sigma: SigmaPolicy,
) -> Result<ScanReport> {
    if tau_grid.is_empty() || omega_grid.is_empty() || eps_sequence.is_empty() {
        return Err(Error::BadParams("scan grids must be nonempty".into()));
    }
    let eps0 = eps_sequence[0];
    let pairs: Vec<(f64, &Vec<f64>)> = tau_grid
        .iter()
        .flat_map(|&t| omega_grid.iter().map(move |w| (t, w)))
        .collect();
    let verdicts: Vec<PMPVerdict> = pairs
        .par_iter()
        .map(|(tau, omega)| {
            let spec = NeedleSpec::new(*tau, (*omega).clone(), eps0, sigma.clone());
            gpmp_verdict(triple, gamma0, &spec, eps_sequence)
        })
        .collect::<Result<_>>()?;
    let mut violations: Vec<Violation> = verdicts
        .iter()
        .filter(|v| !v.satisfied)
        .map(|v| Violation {
            tau: v.tau,
            omega: v.omega.clone(),
            margin: v.margin,
        })
        .collect();
    sort_violations(&mut violations);
    Ok(ScanReport {
        violations,
        checked: verdicts.len(),
        trivial: verdicts.iter().filter(|v| v.corrective.is_none()).count(),
        goodn_pairs: verdicts
            .iter()
            .filter(|v| v.corrective.as_ref().is_some_and(|c| c.goodn_all()))
            .count(),
    })
}
