//! Run configuration: TOML schema, defaults and validation.

use std::fmt;
use std::path::{Path, PathBuf};

use hopmp::builtin::{build, BuiltinId, BuiltinParams};
use hopmp::dynamics::Tolerance;
use hopmp::needle::{default_eps_sequence, NeedleSpec, SigmaPolicy};
use hopmp::problem::DefiningTriple;
use serde::Deserialize;

/// Suites in execution order.
pub const SUITES: [&str; 7] = [
    "validate",
    "homotopy",
    "needle",
    "pmp-scan",
    "classical-cross",
    "lipschitz",
    "phi-probe",
];

/// Invalid or inconsistent configuration (exit code 2).
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn bad<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    pub suites: Option<Vec<String>>,
    pub problem: ProblemConfig,
    #[serde(default)]
    pub reference: ReferenceConfig,
    #[serde(default)]
    pub tolerance: ToleranceConfig,
    #[serde(default)]
    pub grids: GridConfig,
    #[serde(default)]
    pub needle: NeedleConfig,
    #[serde(default)]
    pub homotopy: HomotopyConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

/// A builtin problem; parametric families (`mth-order`,
/// `third-order-linear`) take their coefficients inline.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub builtin: String,
    pub horizon: Option<f64>,
    pub v_max: Option<f64>,
    pub coeffs: Option<Vec<f64>>,
    /// Jet order `n`; must satisfy `n ≥ 2r + 1`.
    pub jet_order: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceConfig {
    /// Constant control value; the closed-form optimum when absent.
    pub control: Option<Vec<f64>>,
    /// Initial state; defaults to the optimum's or the slot midpoints.
    pub initial: Option<Vec<f64>>,
    /// Re-solve the free initial slots so the terminal adjoint conditions
    /// hold (default `true`).
    pub enforce_terminal: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceConfig {
    /// `default` or `tight`.
    pub preset: Option<String>,
    pub rtol: Option<f64>,
    pub atol: Option<f64>,
}

/// Either an explicit list or `{ from, to, count }`.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Grid1 {
    List(Vec<f64>),
    Range { from: f64, to: f64, count: usize },
}

impl Grid1 {
    fn nodes(&self) -> Vec<f64> {
        match self {
            Grid1::List(v) => v.clone(),
            Grid1::Range { from, to, count } => match count {
                0 => Vec::new(),
                1 => vec![*from],
                c => (0..*c).map(|k| from + (to - from) * k as f64 / (*c - 1) as f64).collect(),
            },
        }
    }
}

/// Control grid: explicit points or a per-axis count over the control box.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum ControlGrid {
    Points(Vec<Vec<f64>>),
    PerAxis { per_axis: usize },
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub t_intervals: Option<usize>,
    pub s_intervals: Option<usize>,
    pub tau: Option<Grid1>,
    pub omega: Option<ControlGrid>,
    pub eps0: Option<f64>,
    pub eps_count: Option<usize>,
    pub lipschitz_pairs: Option<usize>,
    pub v_grid: Option<Grid1>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NeedleConfig {
    /// `terminal-enforcing` (default) or `frozen`.
    pub sigma: Option<String>,
    /// `[τ, ω₁, …, ω_m]` rows for the needle suite.
    pub points: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HomotopyConfig {
    /// Constant end control; the centre of the control box by default.
    pub target: Option<Vec<f64>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: Option<PathBuf>,
    pub report: Option<String>,
    pub trajectory: Option<String>,
    /// File name of the `t,s,value` dump of `μ′` on the finest homotopy
    /// surface; omitted when absent.
    pub mu_prime_grid: Option<String>,
}

/// Command-line overrides.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub suites: Vec<String>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
}

/// Fully resolved and validated run.
pub struct Resolved {
    pub id: BuiltinId,
    pub params: BuiltinParams,
    pub triple: DefiningTriple,
    pub seed: u64,
    pub suites: Vec<&'static str>,
    pub tolerance_label: String,
    pub reference_control: Option<Vec<f64>>,
    pub reference_initial: Option<Vec<f64>>,
    pub enforce_terminal: bool,
    pub t_intervals: usize,
    pub s_intervals: usize,
    pub taus: Vec<f64>,
    pub omegas: Vec<Vec<f64>>,
    pub eps: Vec<f64>,
    pub sigma_label: &'static str,
    pub needle_points: Vec<(f64, Vec<f64>)>,
    pub homotopy_target: Vec<f64>,
    pub lipschitz_pairs: usize,
    pub v_grid: Vec<f64>,
    pub out_dir: PathBuf,
    pub report_name: String,
    pub trajectory_name: String,
    pub mu_prime_name: Option<String>,
}

impl Resolved {
    pub fn sigma_policy(&self) -> SigmaPolicy {
        match self.sigma_label {
            "frozen" => SigmaPolicy::Frozen,
            _ => SigmaPolicy::TerminalEnforcing,
        }
    }
}

pub fn load(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
    parse(&text)
}

pub fn parse(text: &str) -> Result<RunConfig, ConfigError> {
    toml::from_str(text).map_err(|e| ConfigError(format!("invalid config: {e}")))
}

fn positive(name: &str, v: f64) -> Result<f64, ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        bad(format!("{name} must be positive and finite, got {v}"))
    }
}

pub fn resolve(cfg: RunConfig, ov: &Overrides) -> Result<Resolved, ConfigError> {
    let id: BuiltinId = cfg.problem.builtin.parse().map_err(|e: hopmp::Error| ConfigError(e.to_string()))?;
    let mut params = BuiltinParams::default();
    if let Some(t) = cfg.problem.horizon {
        params.horizon = positive("problem.horizon", t)?;
    }
    if let Some(v) = cfg.problem.v_max {
        if !(v >= 0.0 && v.is_finite()) {
            return bad(format!("problem.v_max must be nonnegative, got {v}"));
        }
        params.v_max = v;
    }
    if let Some(c) = cfg.problem.coeffs.clone() {
        params.coeffs = c;
    }
    let tol = match cfg.tolerance.preset.as_deref().unwrap_or("default") {
        "default" => Tolerance::default(),
        "tight" => Tolerance::tight(),
        other => return bad(format!("unknown tolerance preset `{other}` (default, tight)")),
    };
    let rtol = cfg.tolerance.rtol.map(|v| positive("tolerance.rtol", v)).transpose()?;
    let atol = cfg.tolerance.atol.map(|v| positive("tolerance.atol", v)).transpose()?;
    let tol = Tolerance::new(rtol.unwrap_or(tol.rtol), atol.unwrap_or(tol.atol));
    let tolerance_label = format!("rtol={:e} atol={:e}", tol.rtol, tol.atol);
    let mut triple = build(&id, &params).map_err(|e| ConfigError(e.to_string()))?.with_tolerance(tol);
    let r = triple.order();
    if let Some(n) = cfg.problem.jet_order {
        if n < 2 * r + 1 {
            return bad(format!("problem.jet_order = {n} violates n ≥ 2r + 1 = {}", 2 * r + 1));
        }
        triple.jet_order = n;
    }
    let horizon = params.horizon;
    let m = triple.controls.dim();

    let suites: Vec<&'static str> = {
        let requested: Vec<String> = if !ov.suites.is_empty() {
            ov.suites.clone()
        } else {
            cfg.suites.clone().unwrap_or_else(|| SUITES.iter().map(|s| s.to_string()).collect())
        };
        for s in &requested {
            if !SUITES.contains(&s.as_str()) {
                return bad(format!("unknown suite `{s}` (one of {})", SUITES.join(", ")));
            }
        }
        SUITES.iter().copied().filter(|s| requested.iter().any(|r| r == s)).collect()
    };
    if suites.is_empty() {
        return bad("no suites requested");
    }
    let wants = |name: &str| suites.contains(&name);

    if let Some(u) = &cfg.reference.control {
        if u.len() != m {
            return bad(format!("reference.control has {} entries, the problem has {m} controls", u.len()));
        }
        if !triple.controls.contains(u, 1e-12) {
            return bad(format!("reference.control {u:?} lies outside the control box"));
        }
    }
    if let Some(y) = &cfg.reference.initial {
        if y.len() != triple.initial.len() {
            return bad(format!(
                "reference.initial has {} entries, the state has {}",
                y.len(),
                triple.initial.len()
            ));
        }
        triple.initial.admissible(y).map_err(|e| ConfigError(format!("reference.initial: {e}")))?;
    }

    let t_intervals = cfg.grids.t_intervals.unwrap_or(400);
    let s_intervals = cfg.grids.s_intervals.unwrap_or(64);
    if t_intervals < 8 || !t_intervals.is_multiple_of(8) {
        return bad(format!("grids.t_intervals must be a positive multiple of 8, got {t_intervals}"));
    }
    if s_intervals < 8 || !s_intervals.is_multiple_of(8) {
        return bad(format!("grids.s_intervals must be a positive multiple of 8, got {s_intervals}"));
    }
    let eps0 = positive("grids.eps0", cfg.grids.eps0.unwrap_or(0.1))?;
    let eps_count = cfg.grids.eps_count.unwrap_or(7);
    if eps_count < 2 {
        return bad("grids.eps_count must be at least 2");
    }
    let eps = default_eps_sequence(eps0, eps_count);

    let taus = cfg
        .grids
        .tau
        .as_ref()
        .map(Grid1::nodes)
        .unwrap_or_else(|| Grid1::Range { from: 2.0 * eps0, to: horizon - 0.5 * eps0, count: 16 }.nodes());
    let omegas = match &cfg.grids.omega {
        Some(ControlGrid::Points(p)) => p.clone(),
        Some(ControlGrid::PerAxis { per_axis }) => triple.controls.grid(*per_axis),
        None => triple.controls.grid(9),
    };
    let has_free = !triple.initial.free_indices().is_empty();
    let sigma_label = match cfg.needle.sigma.as_deref() {
        None if has_free => "terminal-enforcing",
        None => "frozen",
        Some("terminal-enforcing") if has_free => "terminal-enforcing",
        Some("terminal-enforcing") => {
            return bad(format!(
                "needle.sigma = \"terminal-enforcing\" needs free initial slots, {} has none; use \"frozen\"",
                id
            ))
        }
        Some("frozen") => "frozen",
        Some(other) => return bad(format!("unknown needle.sigma `{other}` (terminal-enforcing, frozen)")),
    };
    let check_omega = |w: &Vec<f64>| -> Result<(), ConfigError> {
        if w.len() != m || !triple.controls.contains(w, 1e-12) {
            return bad(format!("ω = {w:?} is not an admissible control value"));
        }
        Ok(())
    };
    let check_tau = |tau: f64| -> Result<(), ConfigError> {
        NeedleSpec::new(tau, vec![0.0; m], eps0, SigmaPolicy::Frozen)
            .validate(horizon)
            .map_err(|e| ConfigError(format!("τ = {tau}: {e}")))
    };
    if wants("pmp-scan") || wants("classical-cross") {
        if taus.is_empty() || omegas.is_empty() {
            return bad("grids.tau and grids.omega must be nonempty for pmp-scan/classical-cross");
        }
        for w in &omegas {
            check_omega(w)?;
        }
    }
    if wants("pmp-scan") {
        for &t in &taus {
            check_tau(t)?;
        }
    }
    let needle_points: Vec<(f64, Vec<f64>)> = match &cfg.needle.points {
        Some(rows) => rows
            .iter()
            .map(|row| match row.split_first() {
                Some((tau, w)) => Ok((*tau, w.to_vec())),
                None => bad("needle.points rows must be [τ, ω…]"),
            })
            .collect::<Result<_, _>>()?,
        None => vec![(0.5 * horizon, triple.controls.lower().to_vec())],
    };
    if wants("needle") {
        if needle_points.is_empty() {
            return bad("needle.points must be nonempty for the needle suite");
        }
        for (t, w) in &needle_points {
            check_tau(*t)?;
            check_omega(w)?;
        }
    }
    let homotopy_target = cfg.homotopy.target.clone().unwrap_or_else(|| triple.controls.center());
    if homotopy_target.len() != m || !triple.controls.contains(&homotopy_target, 1e-12) {
        return bad(format!("homotopy.target {homotopy_target:?} is not an admissible control value"));
    }
    let lipschitz_pairs = cfg.grids.lipschitz_pairs.unwrap_or(100);
    if wants("lipschitz") && lipschitz_pairs == 0 {
        return bad("grids.lipschitz_pairs must be positive");
    }
    let v_grid = cfg
        .grids
        .v_grid
        .as_ref()
        .map(Grid1::nodes)
        .unwrap_or_else(|| Grid1::Range { from: -params.v_max.max(1.0), to: params.v_max.max(1.0), count: 11 }.nodes());
    if wants("phi-probe") && v_grid.len() < 2 {
        return bad("grids.v_grid needs at least two nodes");
    }

    Ok(Resolved {
        id,
        params,
        triple,
        seed: ov.seed.unwrap_or(cfg.seed),
        suites,
        tolerance_label,
        reference_control: cfg.reference.control,
        reference_initial: cfg.reference.initial,
        enforce_terminal: cfg.reference.enforce_terminal.unwrap_or(true),
        t_intervals,
        s_intervals,
        taus,
        omegas,
        eps,
        sigma_label,
        needle_points,
        homotopy_target,
        lipschitz_pairs,
        v_grid,
        out_dir: ov.out.clone().or(cfg.output.dir).unwrap_or_else(|| PathBuf::from("hopmp-out")),
        report_name: cfg.output.report.unwrap_or_else(|| "report.txt".into()),
        trajectory_name: cfg.output.trajectory.unwrap_or_else(|| "trajectory.csv".into()),
        mu_prime_name: cfg.output.mu_prime_grid,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn resolve_str(text: &str) -> Result<Resolved, ConfigError> {
        resolve(parse(text)?, &Overrides::default())
    }

    #[test]
    fn minimal_config_gets_defaults() {
        let r = resolve_str("[problem]\nbuiltin = \"pendulum-r2\"\n").unwrap();
        assert_eq!(r.suites, SUITES.to_vec());
        assert_eq!(r.taus.len(), 16);
        assert_eq!(r.omegas.len(), 9);
        assert_eq!(r.eps.len(), 7);
        assert_eq!(r.sigma_label, "terminal-enforcing");
        assert_eq!(r.homotopy_target, vec![0.0]);
    }

    #[test]
    fn grids_accept_lists_and_ranges() {
        let r = resolve_str(
            "[problem]\nbuiltin = \"pendulum-r2\"\n[grids]\ntau = [0.3, 0.6]\nomega = { per_axis = 3 }\n",
        )
        .unwrap();
        assert_eq!(r.taus, vec![0.3, 0.6]);
        assert_eq!(r.omegas, vec![vec![-1.0], vec![0.0], vec![1.0]]);
        let r = resolve_str(
            "[problem]\nbuiltin = \"pendulum-r2\"\n[grids]\ntau = { from = 0.2, to = 1.0, count = 5 }\nomega = [[1.0]]\n",
        )
        .unwrap();
        assert_eq!(r.taus.len(), 5);
        assert!((r.taus[4] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn sigma_policy_defaults_to_frozen_without_free_slots() {
        let r = resolve_str("[problem]\nbuiltin = \"pendulum-direct\"\n").unwrap();
        assert_eq!(r.sigma_label, "frozen");
        let e = resolve_str("[problem]\nbuiltin = \"pendulum-direct\"\n[needle]\nsigma = \"terminal-enforcing\"\n");
        assert!(e.is_err());
    }

    #[test]
    fn jet_order_below_bound_is_rejected() {
        let e = resolve_str("[problem]\nbuiltin = \"pendulum-r2\"\njet_order = 4\n").err().unwrap();
        assert!(e.0.contains("2r + 1"), "{e}");
    }

    #[test]
    fn unknown_names_are_rejected() {
        assert!(resolve_str("[problem]\nbuiltin = \"pendulum-r9\"\n").is_err());
        assert!(resolve_str("suites = [\"bogus\"]\n[problem]\nbuiltin = \"pendulum-r2\"\n").is_err());
        assert!(parse("[problem]\nbuiltin = \"pendulum-r2\"\nextra = 1\n").is_err());
    }

    #[test]
    fn inadmissible_values_are_rejected() {
        assert!(resolve_str("[problem]\nbuiltin = \"pendulum-r2\"\n[reference]\ncontrol = [2.0]\n").is_err());
        assert!(resolve_str("[problem]\nbuiltin = \"pendulum-r2\"\n[grids]\ntau = [0.01]\n").is_err());
        assert!(resolve_str("[problem]\nbuiltin = \"pendulum-r2\"\n[grids]\nt_intervals = 10\n").is_err());
    }

    #[test]
    fn overrides_win() {
        let cfg = parse("seed = 3\nsuites = [\"validate\"]\n[problem]\nbuiltin = \"pendulum-r2\"\n").unwrap();
        let ov = Overrides {
            suites: vec!["lipschitz".into(), "validate".into()],
            out: Some("x".into()),
            seed: Some(9),
        };
        let r = resolve(cfg, &ov).unwrap();
        assert_eq!(r.suites, vec!["validate", "lipschitz"]);
        assert_eq!(r.seed, 9);
        assert_eq!(r.out_dir, PathBuf::from("x"));
    }
}
