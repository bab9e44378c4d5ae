//! Verification suites. Each returns an ordered list of report lines and a
//! status; nothing here touches the filesystem.

use hopmp::auxiliary::{solve_h, BetaRange};
use hopmp::builtin::{build, optimal_reference, pendulum_classical_problem, BuiltinId, BuiltinParams};
use hopmp::classical::{classical_pmp_check, mth_order_bang_bang, phi_surjectivity_probe};
use hopmp::control::ControlCurve;
use hopmp::dynamics::{lipschitz_probe, Tolerance, Trajectory};
use hopmp::homotopy::{build_surface, mu_prime_grid, select_beta_range, ControlHomotopy};
use hopmp::needle::{corrective_term, delta_mu_pair, enforce_sigma, pmp_scan, NeedleSpec};
use hopmp::problem::{validate_triple, InitSlot};
use hopmp::Error;

use crate::config::Resolved;

/// Gap tolerance of the homotopy identity relative to `1 + |lhs|`.
pub const HOMOTOPY_TOL: f64 = 1e-3;
/// Relative residual of the h-function boundary conditions.
pub const H_BOUNDARY_TOL: f64 = 1e-9;
/// Residual of the h-function ODE on the output grid.
pub const H_ODE_TOL: f64 = 1e-8;
/// Agreement of the two `Δμ′` evaluations:
/// `|a − b| ≤ REL·max(|a|, |b|) + NOISE·rtol·(1 + |C₀|)`; the second term
/// covers needles whose `Δμ′` vanishes up to integrator error.
pub const TWO_METHOD_REL: f64 = 1e-4;
pub const TWO_METHOD_NOISE: f64 = 10.0;
/// Terminal-cost agreement across the pendulum formulations.
pub const CROSS_COST_TOL: f64 = 1e-8;
/// Slope and affinity tolerance of the terminal-map probe.
pub const PHI_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Status {
    Pass,
    Skipped,
    Fail,
    NumericalFailure,
    ConfigError,
}

impl Status {
    pub fn label(self) -> &'static str {
        match self {
            Status::Pass => "PASS",
            Status::Skipped => "SKIPPED",
            Status::Fail => "FAIL",
            Status::NumericalFailure => "NUMERICAL-FAILURE",
            Status::ConfigError => "CONFIG-ERROR",
        }
    }

    pub fn of_error(e: &Error) -> Self {
        match e {
            Error::BadParams(_) | Error::Dimension(_) | Error::DegenerateHorizon { .. } | Error::NoClosedForm(_) => {
                Status::ConfigError
            }
            _ => Status::NumericalFailure,
        }
    }
}

pub struct SuiteResult {
    pub name: &'static str,
    pub status: Status,
    pub lines: Vec<String>,
    /// `(t, s, μ′)` rows of the finest homotopy surface.
    pub mu_grid: Option<Vec<(f64, f64, f64)>>,
}

impl SuiteResult {
    fn new(name: &'static str) -> Self {
        Self {
            name,
            status: Status::Pass,
            lines: Vec::new(),
            mu_grid: None,
        }
    }

    fn line(&mut self, s: impl Into<String>) {
        self.lines.push(s.into());
    }

    fn require(&mut self, ok: bool) {
        if !ok && self.status < Status::Fail {
            self.status = Status::Fail;
        }
    }

    fn skip(mut self, why: &str) -> Self {
        self.status = Status::Skipped;
        self.line(format!("reason = {why}"));
        self
    }
}

/// Reference pair `(u₀, σ₀)` and its trajectory.
pub struct Reference {
    pub control: ControlCurve,
    pub initial: Vec<f64>,
    pub trajectory: Trajectory,
    pub cost: f64,
    pub source: &'static str,
}

pub fn reference(run: &Resolved) -> hopmp::Result<Reference> {
    let triple = &run.triple;
    let opt = optimal_reference(&run.id, &run.params);
    let (control, source) = match (&run.reference_control, &opt) {
        (Some(v), _) => (ControlCurve::constant(run.params.horizon, v.clone()), "configured constant"),
        (None, Ok(o)) => (o.control.clone(), "closed-form optimum"),
        (None, Err(e)) => return Err(e.clone()),
    };
    let base = match (&run.reference_initial, &opt) {
        (Some(y), _) => y.clone(),
        (None, Ok(o)) => o.initial.clone(),
        (None, Err(_)) => triple
            .initial
            .slots()
            .iter()
            .map(|s| match s {
                InitSlot::Fixed(v) => *v,
                InitSlot::Range(lo, hi) => 0.5 * (lo + hi),
                InitSlot::Free => 0.0,
            })
            .collect(),
    };
    let initial = if run.enforce_terminal && !triple.initial.free_indices().is_empty() {
        enforce_sigma(triple, &control, &base)?
    } else {
        base
    };
    let trajectory = triple.trajectory(&control, &initial)?;
    let cost = triple.terminal_cost(&trajectory)?;
    Ok(Reference {
        control,
        initial,
        trajectory,
        cost,
        source,
    })
}

pub fn run_suite(name: &'static str, run: &Resolved, reference: &Reference) -> SuiteResult {
    let mut res = SuiteResult::new(name);
    let outcome = match name {
        "validate" => validate(run, &mut res),
        "homotopy" => homotopy(run, reference, &mut res),
        "needle" => needle(run, reference, &mut res),
        "pmp-scan" => scan(run, reference, &mut res),
        "classical-cross" => return classical_cross(run, reference, res),
        "lipschitz" => lipschitz(run, &mut res),
        "phi-probe" => return phi_probe(run, reference, res),
        other => unreachable!("suite `{other}` passed validation"),
    };
    if let Err(e) = outcome {
        res.status = Status::of_error(&e);
        res.line(format!("error = {e}"));
    }
    res
}

fn validate(run: &Resolved, res: &mut SuiteResult) -> hopmp::Result<()> {
    let report = validate_triple(&run.triple, run.seed);
    for c in &report.checks {
        res.line(format!("check.{} = {} ; {}", c.name, if c.passed { "PASS" } else { "FAIL" }, c.detail));
    }
    res.require(report.passed());
    Ok(())
}

fn homotopy(run: &Resolved, reference: &Reference, res: &mut SuiteResult) -> hopmp::Result<()> {
    let triple = &run.triple;
    let coeffs = solve_h(&reference.trajectory, triple)?;
    let boundary = coeffs.boundary_residual();
    let steps = run.t_intervals / 8;
    let ode = (0..=steps)
        .map(|k| coeffs.ode_residual(run.params.horizon * k as f64 / steps as f64))
        .fold(0.0_f64, f64::max);
    res.line(format!("h.boundary_residual = {boundary:e} (tol {H_BOUNDARY_TOL:e})"));
    res.line(format!("h.ode_residual = {ode:e} (tol {H_ODE_TOL:e})"));
    res.require(boundary <= H_BOUNDARY_TOL && ode <= H_ODE_TOL);

    let target = ControlCurve::constant(run.params.horizon, run.homotopy_target.clone());
    res.line(format!("target = {:?}", run.homotopy_target));
    res.line("table = t_intervals s_intervals lhs rhs gap".to_string());
    let mut last = None;
    for div in [4, 2, 1] {
        let (nt, ns) = (run.t_intervals / div, run.s_intervals / div);
        let hom = ControlHomotopy::blend(&reference.control, &target, reference.initial.clone(), ns)?;
        let surface = build_surface(triple, &hom, BetaRange::Full)?;
        let sel = select_beta_range(&surface, nt)?;
        let rhs = match sel.selected {
            BetaRange::Full => sel.rhs_full,
            BetaRange::FromOne => sel.rhs_from_one,
        };
        let gap = sel.gap(sel.selected);
        res.line(format!("row = {nt} {ns} {:.12e} {:.12e} {:.3e}", sel.lhs, rhs, gap));
        last = Some((surface, sel, nt));
    }
    let (surface, sel, nt) = last.expect("three refinement levels");
    res.line(format!("beta_range = {}", sel.selected.label()));
    res.line(format!(
        "gap.full = {:.3e} ; gap.from_one = {:.3e}",
        sel.gap(BetaRange::Full),
        sel.gap(BetaRange::FromOne)
    ));
    let gap = sel.gap(sel.selected);
    res.line(format!("final_gap = {gap:e} (tol {HOMOTOPY_TOL:e}·(1+|lhs|))"));
    res.require(gap <= HOMOTOPY_TOL * (1.0 + sel.lhs.abs()));
    if run.mu_prime_name.is_some() {
        res.mu_grid = Some(mu_prime_grid(&surface.with_range(sel.selected), nt)?);
    }
    Ok(())
}

fn needle(run: &Resolved, reference: &Reference, res: &mut SuiteResult) -> hopmp::Result<()> {
    let triple = &run.triple;
    res.line(format!("sigma_policy = {}", run.sigma_label));
    for (k, (tau, omega)) in run.needle_points.iter().enumerate() {
        let spec = NeedleSpec::new(*tau, omega.clone(), run.eps[0], run.sigma_policy());
        let c = corrective_term(triple, &reference.trajectory, &spec, &run.eps)?;
        let pair = delta_mu_pair(triple, &reference.trajectory, &spec, run.eps[0])?;
        res.line(format!("needle.{k} = tau {tau} omega {omega:?}"));
        res.line(format!("needle.{k}.table = eps delta_mu estimate goodn_residual goodn lemma_limit"));
        for j in 0..c.eps.len() {
            res.line(format!(
                "needle.{k}.row = {:e} {:.6e} {:.6e} {:.3e} {} {:.3e}",
                c.eps[j],
                c.delta_mu[j],
                c.estimates[j],
                c.goodn[j].residual,
                if c.goodn[j].passed { "pass" } else { "fail" },
                c.lemma_limits[j]
            ));
        }
        res.line(format!(
            "needle.{k}.liminf_proxy = {:.6e} ; richardson = {:.6e} ; consistent = {} ; value = {:.6e}",
            c.liminf_proxy, c.richardson, c.consistent, c.value
        ));
        let gap = (pair.closed_form - pair.direct).abs();
        let ok = gap <= TWO_METHOD_REL * pair.closed_form.abs().max(pair.direct.abs()) 
            + TWO_METHOD_NOISE * triple.tol.rtol * (1.0 + reference.cost.abs());
        res.line(format!(
            "needle.{k}.two_method = closed {:.12e} direct {:.12e} gap {gap:.3e} {}",
            pair.closed_form,
            pair.direct,
            if ok { "agree" } else { "DISAGREE" }
        ));
        res.require(ok);
    }
    Ok(())
}

fn scan(run: &Resolved, reference: &Reference, res: &mut SuiteResult) -> hopmp::Result<()> {
    let report = pmp_scan(
        &run.triple,
        &reference.trajectory,
        &run.taus,
        &run.omegas,
        &run.eps,
        run.sigma_policy(),
    )?;
    res.line(format!("sigma_policy = {}", run.sigma_label));
    res.line(format!("grid = {} tau x {} omega", run.taus.len(), run.omegas.len()));
    res.line(format!("checked = {}", report.checked));
    res.line(format!("trivial = {}", report.trivial));
    res.line(format!("goodn_pairs = {}", report.goodn_pairs));
    res.line(format!("violations = {}", report.violations.len()));
    for v in &report.violations {
        res.line(format!("violation = tau {} omega {:?} margin {:.9e}", v.tau, v.omega, v.margin));
    }
    res.require(report.violations.is_empty());
    Ok(())
}

/// `(x(0), ẋ(0))` of a pendulum-family initial state.
fn pendulum_x_data(id: &BuiltinId, params: &BuiltinParams, y: &[f64]) -> Option<(f64, f64)> {
    match id {
        BuiltinId::PendulumClassical | BuiltinId::PendulumDirect => Some((y[0], y[1])),
        BuiltinId::PendulumR2 => Some((y[0], y[2])),
        BuiltinId::MthOrder if params.coeffs == [1.0, 0.0, 1.0] => Some((y[0], y[2])),
        _ => None,
    }
}

fn classical_cross(run: &Resolved, reference: &Reference, mut res: SuiteResult) -> SuiteResult {
    let body = |res: &mut SuiteResult| -> hopmp::Result<bool> {
        if let Some((x0, v)) = pendulum_x_data(&run.id, &run.params, &reference.initial) {
            let t = run.params.horizon;
            let formulations = [
                (BuiltinId::PendulumClassical, vec![x0, v, t.cos(), t.sin()]),
                (BuiltinId::PendulumR2, vec![x0, t.sin(), v, -t.cos()]),
                (BuiltinId::PendulumDirect, vec![x0, v]),
            ];
            let mut costs = Vec::new();
            for (id, y0) in &formulations {
                let triple = build(id, &run.params)?.with_tolerance(Tolerance::tight());
                let cost = triple.terminal_cost(&triple.trajectory(&reference.control, y0)?)?;
                res.line(format!("cost.{id} = {cost:.15e}"));
                costs.push(cost);
            }
            let spread = costs.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b))
                - costs.iter().fold(f64::INFINITY, |a, &b| a.min(b));
            res.line(format!("cost_spread = {spread:.3e} (tol {CROSS_COST_TOL:e})"));
            let cp = pendulum_classical_problem(&run.params)?;
            let check = classical_pmp_check(&cp, &reference.control, &[x0, v], &run.taus, &run.omegas)?;
            res.line(format!("classical.p_terminal = {:?}", check.p_terminal));
            res.line(format!("classical.checked = {}", check.checked));
            res.line(format!("classical.violations = {}", check.violations.len()));
            for viol in &check.violations {
                res.line(format!("violation = tau {} omega {:?} margin {:.9e}", viol.tau, viol.omega, viol.margin));
            }
            res.require(spread <= CROSS_COST_TOL && check.violations.is_empty());
            Ok(true)
        } else if run.id == BuiltinId::MthOrder {
            let bb = mth_order_bang_bang(&run.params.coeffs, run.params.horizon, Tolerance::tight())?;
            res.line("chain_reduction_oracle = agree".to_string());
            res.line(format!("bang_bang.switches = {:?}", bb.switches));
            res.line(format!("bang_bang.adjoint_terminal = {:?}", bb.terminal));
            Ok(true)
        } else {
            Ok(false)
        }
    };
    match body(&mut res) {
        Ok(true) => res,
        Ok(false) => res.skip("no classical counterpart for this problem"),
        Err(e) => {
            res.status = Status::of_error(&e);
            res.line(format!("error = {e}"));
            res
        }
    }
}

fn lipschitz(run: &Resolved, res: &mut SuiteResult) -> hopmp::Result<()> {
    let rep = lipschitz_probe(&run.triple, run.lipschitz_pairs, run.seed)?;
    res.line(format!("pairs = {}", rep.pairs));
    res.line(format!("skipped = {}", rep.skipped));
    res.line(format!("max_ratio = {:.9e}", rep.max_ratio));
    res.line(format!("mean_ratio = {:.9e}", rep.mean_ratio));
    res.line(format!("metric = {}", rep.metric));
    res.require(rep.max_ratio.is_finite() && rep.pairs > 0);
    Ok(())
}

fn phi_probe(run: &Resolved, reference: &Reference, mut res: SuiteResult) -> SuiteResult {
    if pendulum_x_data(&run.id, &run.params, &reference.initial).is_none() {
        return res.skip("the terminal-map probe is defined for the pendulum family");
    }
    let t = run.params.horizon;
    match phi_surjectivity_probe(t, &reference.control, &run.v_grid) {
        Ok(rep) => {
            let expected = t.sin();
            res.line(format!("slope = {:.15e} (expected sin T = {expected:.15e})", rep.slope));
            res.line(format!("intercept = {:.15e}", rep.intercept));
            res.line(format!("affinity_residual = {:.3e} (tol {PHI_TOL:e})", rep.residual));
            res.require((rep.slope - expected).abs() <= PHI_TOL && rep.residual <= PHI_TOL);
        }
        Err(e) => {
            res.status = Status::of_error(&e);
            res.line(format!("error = {e}"));
        }
    }
    res
}
