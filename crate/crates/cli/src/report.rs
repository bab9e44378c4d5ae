//! Report document and CSV output.

use std::fmt::Write as _;

use hopmp::dynamics::Trajectory;
use hopmp::problem::DefiningTriple;

use crate::config::Resolved;
use crate::suites::{Reference, Status, SuiteResult};

/// Exit code for a set of suite outcomes: config error (2) over numerical
/// failure (3) over violation (1).
pub fn exit_code(results: &[SuiteResult]) -> i32 {
    let worst = results.iter().map(|r| r.status).max().unwrap_or(Status::Pass);
    match worst {
        Status::Pass | Status::Skipped => 0,
        Status::Fail => 1,
        Status::NumericalFailure => 3,
        Status::ConfigError => 2,
    }
}

/// Render the report. Everything after the first line depends only on the
/// configuration and seed.
pub fn render(run: &Resolved, reference: &Reference, results: &[SuiteResult], generated: u64) -> String {
    let mut out = String::new();
    let t = &run.triple;
    let _ = writeln!(out, "# hopmp report; generated at unix time {generated}");
    let _ = writeln!(out, "[run]");
    let _ = writeln!(out, "problem = {}", run.id);
    let _ = writeln!(out, "triple = {}", t.name);
    let _ = writeln!(out, "horizon = {}", run.params.horizon);
    let _ = writeln!(out, "v_max = {}", run.params.v_max);
    let _ = writeln!(out, "coeffs = {:?}", run.params.coeffs);
    let _ = writeln!(out, "r = {}", t.order());
    let _ = writeln!(out, "n = {}", t.jet_order);
    let _ = writeln!(out, "tolerance = {}", run.tolerance_label);
    let _ = writeln!(out, "seed = {}", run.seed);
    let _ = writeln!(out, "suites = {}", run.suites.join(", "));
    let _ = writeln!(out, "eps = {:?}", run.eps);
    let _ = writeln!(out);
    let _ = writeln!(out, "[reference]");
    let _ = writeln!(out, "source = {}", reference.source);
    let _ = writeln!(out, "control = {}", reference.control.kind_name());
    let _ = writeln!(out, "control.at_0 = {:?}", reference.control.value(0.0));
    let _ = writeln!(out, "initial = {:?}", reference.initial);
    let _ = writeln!(out, "cost = {}", reference.cost);
    for r in results {
        let _ = writeln!(out);
        let _ = writeln!(out, "[suite.{}]", r.name);
        let _ = writeln!(out, "status = {}", r.status.label());
        for line in &r.lines {
            let _ = writeln!(out, "{line}");
        }
    }
    let _ = writeln!(out);
    let _ = writeln!(out, "[summary]");
    for r in results {
        let _ = writeln!(out, "{} = {}", r.name, r.status.label());
    }
    let _ = writeln!(out, "exit_code = {}", exit_code(results));
    out
}

fn derivative_suffix(k: usize) -> String {
    match k {
        0 => String::new(),
        1 => "_t".into(),
        2 => "_tt".into(),
        k => format!("_t{k}"),
    }
}

/// Column names and state indices: state-type coordinates first, then
/// adjoint-type coordinates. The normal-form state is block-major,
/// `y[k·N + i] = q_i^{(k)}`.
pub fn trajectory_columns(triple: &DefiningTriple) -> Vec<(String, usize)> {
    let n = triple.q_dim();
    let blocks = triple.dynamics.state_dim() / n;
    let (state, adjoint): (Vec<usize>, Vec<usize>) = match &triple.adjoint {
        Some(a) => (a.x.clone(), a.p.clone()),
        None => ((0..n).collect(), Vec::new()),
    };
    let name = |prefix: &str, j: usize, len: usize| {
        if len == 1 {
            prefix.to_string()
        } else {
            format!("{prefix}{j}")
        }
    };
    let mut cols = Vec::new();
    let prefix = if triple.adjoint.is_some() { "x" } else { "q" };
    for (group, pfx) in [(&state, prefix), (&adjoint, "p")] {
        for (j, &i) in group.iter().enumerate() {
            for k in 0..blocks {
                cols.push((format!("{}{}", name(pfx, j, group.len()), derivative_suffix(k)), k * n + i));
            }
        }
    }
    cols
}

/// `t,` state columns, adjoint columns, control columns; one row per node
/// of a uniform grid with `intervals` intervals.
pub fn trajectory_csv(triple: &DefiningTriple, traj: &Trajectory, intervals: usize) -> hopmp::Result<String> {
    let cols = trajectory_columns(triple);
    let m = triple.controls.dim();
    let mut out = String::from("t");
    for (name, _) in &cols {
        out.push(',');
        out.push_str(name);
    }
    for j in 0..m {
        out.push(',');
        if m == 1 {
            out.push('u');
        } else {
            let _ = write!(out, "u{j}");
        }
    }
    out.push('\n');
    let horizon = triple.horizon;
    for k in 0..=intervals {
        let t = if k == intervals { horizon } else { horizon * k as f64 / intervals as f64 };
        let y = traj.state(t)?;
        let _ = write!(out, "{t}");
        for (_, i) in &cols {
            let _ = write!(out, ",{}", y[*i]);
        }
        for v in traj.control_value(t) {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    Ok(out)
}

/// `t,s,value` rows.
pub fn mu_grid_csv(rows: &[(f64, f64, f64)]) -> String {
    let mut out = String::from("t,s,value\n");
    for (t, s, v) in rows {
        let _ = writeln!(out, "{t},{s},{v}");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use hopmp::builtin::{build, BuiltinId, BuiltinParams};

    #[test]
    fn columns_follow_the_adjoint_split() {
        let p = BuiltinParams::default();
        let names = |id| -> Vec<String> {
            trajectory_columns(&build(&id, &p).unwrap())
                .into_iter()
                .map(|(n, _)| n)
                .collect()
        };
        assert_eq!(names(BuiltinId::PendulumR2), ["x", "x_t", "p", "p_t"]);
        assert_eq!(names(BuiltinId::PendulumDirect), ["q", "q_t"]);
        assert_eq!(names(BuiltinId::PendulumClassical), ["x0", "x1", "p0", "p1"]);
    }

    #[test]
    fn r2_columns_index_the_state() {
        let t = build(&BuiltinId::PendulumR2, &BuiltinParams::default()).unwrap();
        let idx: Vec<usize> = trajectory_columns(&t).into_iter().map(|(_, i)| i).collect();
        assert_eq!(idx, [0, 2, 1, 3]);
    }

    #[test]
    fn exit_code_precedence() {
        let r = |status| SuiteResult {
            name: "x",
            status,
            lines: vec![],
            mu_grid: None,
        };
        assert_eq!(exit_code(&[r(Status::Pass), r(Status::Skipped)]), 0);
        assert_eq!(exit_code(&[r(Status::Pass), r(Status::Fail)]), 1);
        assert_eq!(exit_code(&[r(Status::Fail), r(Status::NumericalFailure)]), 3);
        assert_eq!(exit_code(&[r(Status::NumericalFailure), r(Status::ConfigError)]), 2);
    }
}
