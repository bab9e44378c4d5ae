//! Controlled variations `F(t, s)`, Jacobi fields by differences in `s`, and
//! both sides of the homotopy formula
//!
//! ```text
//! C₁ − C₀ = −∫₀ᵀ∫₀¹ [ Y^a ∂𝒫/∂u^a − ∂²μ′/∂t∂s ] ds dt,
//! μ′(t, s) = μ(t, s) + ∫₀ˢ G(t, v) dv,   G = Σ h′_(3) Y′_(0) + h″_(3) Y″_(0),
//! ```
//!
//! together with the minimal-labour functional, the infinitesimal
//! conditions, and the two evaluations of `μ′(T,1) − μ′(T,0)`: directly from
//! the definition, and in closed form from boundary momenta and Lagrangian
//! integrals.

use std::sync::Arc;

use rayon::prelude::*;

use crate::auxiliary::{pc_form_pairing, BetaRange, ExtendedCurve, ExtendedTangent, HValues};
use crate::control::ControlCurve;
use crate::dynamics::Trajectory;
use crate::error::{Error, Result};
use crate::jetspace::{partial, Coord, JetPoint};
use crate::problem::{momenta, pontryagin_p, DefiningTriple};
use crate::quadrature::{cumulative_simpson, fd_derivative, gauss_legendre_8, simpson, simpson_2d, uniform_grid};

type ControlFamily = Arc<dyn Fn(f64) -> ControlCurve + Send + Sync>;
type SigmaFamily = Arc<dyn Fn(f64, &ControlCurve) -> Result<Vec<f64>> + Send + Sync>;

/// Two-parameter control family `u(t, s)` with initial data `σ(s)` on a
/// uniform `s`-grid over `[0, 1]`.
#[derive(Clone)]
pub struct ControlHomotopy {
    u: ControlFamily,
    sigma: SigmaFamily,
    s_nodes: Vec<f64>,
    horizon: f64,
}

impl ControlHomotopy {
    /// General family; `sigma` may depend on the slice control (used for
    /// terminal-enforcing initial data). `s_intervals` must be even.
    pub fn new(
        horizon: f64,
        s_intervals: usize,
        u: impl Fn(f64) -> ControlCurve + Send + Sync + 'static,
        sigma: impl Fn(f64, &ControlCurve) -> Result<Vec<f64>> + Send + Sync + 'static,
    ) -> Result<Self> {
        if s_intervals < 2 || !s_intervals.is_multiple_of(2) {
            return Err(Error::BadParams(format!(
                "s-grid needs an even number (≥ 2) of intervals, got {s_intervals}"
            )));
        }
        Ok(Self {
            u: Arc::new(u),
            sigma: Arc::new(sigma),
            s_nodes: uniform_grid(0.0, 1.0, s_intervals),
            horizon,
        })
    }

    /// `u(t, s) = (1−s)u₀ + s·u₁` with fixed initial state.
    pub fn blend(u0: &ControlCurve, u1: &ControlCurve, y0: Vec<f64>, s_intervals: usize) -> Result<Self> {
        let (a, b) = (u0.clone(), u1.clone());
        Self::new(
            u0.horizon(),
            s_intervals,
            move |s| ControlCurve::blend(&a, &b, s),
            move |_, _| Ok(y0.clone()),
        )
    }

    /// Fixed control with an initial-data path `σ(s)`.
    pub fn sigma_path(
        u0: &ControlCurve,
        s_intervals: usize,
        sigma: impl Fn(f64) -> Vec<f64> + Send + Sync + 'static,
    ) -> Result<Self> {
        let a = u0.clone();
        Self::new(u0.horizon(), s_intervals, move |_| a.clone(), move |s, _| Ok(sigma(s)))
    }

    pub fn s_nodes(&self) -> &[f64] {
        &self.s_nodes
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn control(&self, s: f64) -> ControlCurve {
        (self.u)(s)
    }

    pub fn sigma(&self, s: f64, u: &ControlCurve) -> Result<Vec<f64>> {
        (self.sigma)(s, u)
    }
}

/// Boundary quantities of one slice.
#[derive(Clone, Debug)]
struct SliceBoundary {
    jet0: JetPoint,
    jet_t: JetPoint,
    /// `M^L_β` at 0 and `T`, block-major for `β < r`.
    m0: Vec<f64>,
    m_t: Vec<f64>,
    /// `∂C/∂q^i_(β)` at `T`, block-major for `β ≤ r̃`.
    dc_t: Vec<f64>,
    cost: f64,
    int_l: f64,
}

/// Integrated slices of a controlled variation with their extended data.
#[derive(Clone)]
pub struct VariationSurface {
    triple: DefiningTriple,
    s_nodes: Vec<f64>,
    trajs: Vec<Trajectory>,
    slices: Option<Vec<ExtendedCurve>>,
    bounds: Vec<SliceBoundary>,
    range: BetaRange,
}

/// Integrate every slice of `hom` and solve its extended data.
pub fn build_surface(triple: &DefiningTriple, hom: &ControlHomotopy, range: BetaRange) -> Result<VariationSurface> {
    build_surface_impl(triple, hom, range, true)
}

/// Integrate every slice of `hom`, keeping only boundary data (enough for
/// costs, `Θ_L`, the closed form of `Δμ′` and the GoodN residual).
pub fn build_boundary_surface(triple: &DefiningTriple, hom: &ControlHomotopy) -> Result<VariationSurface> {
    build_surface_impl(triple, hom, BetaRange::Full, false)
}

fn build_surface_impl(
    triple: &DefiningTriple,
    hom: &ControlHomotopy,
    range: BetaRange,
    extended: bool,
) -> Result<VariationSurface> {
    let t_end = triple.horizon;
    if (hom.horizon - t_end).abs() > 1e-12 * t_end {
        return Err(Error::BadParams("homotopy and triple horizons differ".into()));
    }
    let r = triple.order();
    let n = triple.q_dim();
    let wo = triple.working_order();
    let built: Vec<(Trajectory, Option<ExtendedCurve>, SliceBoundary)> = hom
        .s_nodes
        .par_iter()
        .map(|&s| -> Result<_> {
            let u = hom.control(s);
            let y0 = hom.sigma(s, &u)?;
            let traj = triple.trajectory(&u, &y0)?;
            let ext = if extended { Some(ExtendedCurve::new(triple, &traj)?) } else { None };
            let jet0 = traj.jet(0.0, wo)?;
            let jet_t = traj.jet(t_end, wo)?;
            let u0 = traj.control_value(0.0);
            let ut = traj.control_value(t_end);
            let m0 = momenta(&triple.lagrangian.field, r, &jet0, &u0)?;
            let m_t = momenta(&triple.lagrangian.field, r, &jet_t, &ut)?;
            let rc = triple.cost.order();
            let mut dc_t = vec![0.0; n * (rc + 1)];
            for beta in 0..=rc {
                for i in 0..n {
                    dc_t[beta * n + i] = partial(&triple.cost.field, &jet_t, &ut, Coord::Q { i, beta });
                }
            }
            let cost = triple.cost.field.eval(&jet_t, &ut);
            let int_l = integrate_lagrangian(triple, &traj)?;
            Ok((
                traj,
                ext,
                SliceBoundary {
                    jet0,
                    jet_t,
                    m0,
                    m_t,
                    dc_t,
                    cost,
                    int_l,
                },
            ))
        })
        .collect::<Result<_>>()?;
    let mut trajs = Vec::with_capacity(built.len());
    let mut slices = Vec::with_capacity(built.len());
    let mut bounds = Vec::with_capacity(built.len());
    for (tr, ext, b) in built {
        trajs.push(tr);
        if let Some(e) = ext {
            slices.push(e);
        }
        bounds.push(b);
    }
    Ok(VariationSurface {
        triple: triple.clone(),
        s_nodes: hom.s_nodes.clone(),
        trajs,
        slices: extended.then_some(slices),
        bounds,
        range,
    })
}

/// `∫₀ᵀ L` along a trajectory, one Gauss–Legendre panel per integrator step.
pub fn integrate_lagrangian(triple: &DefiningTriple, traj: &Trajectory) -> Result<f64> {
    let r = triple.order();
    let mut err = None;
    let mut acc = 0.0;
    for (a, b) in traj.intervals() {
        acc += gauss_legendre_8(
            |t| match traj.jet(t, r) {
                Ok(j) => triple.lagrangian.field.eval(&j, &traj.control_value(t)),
                Err(e) => {
                    err = Some(e);
                    0.0
                }
            },
            a,
            b,
        );
    }
    err.map_or(Ok(acc), Err)
}

/// Jacobi components at one time for every slice.
#[derive(Clone, Debug)]
pub struct JacobiField {
    pub t: f64,
    /// `Y^i_(β)` block-major, per slice.
    pub q: Vec<Vec<f64>>,
    /// `Y^a`, per slice.
    pub u: Vec<Vec<f64>>,
    /// `∂_s` of the `h`-family values (orders 0..=4), per slice.
    pub h: Vec<HValues>,
    /// `∂_s μ`, per slice.
    pub mu: Vec<f64>,
}

fn fd_columns(rows: &[Vec<f64>], ds: f64) -> Vec<Vec<f64>> {
    let m = rows.first().map_or(0, Vec::len);
    let mut out = vec![vec![0.0; m]; rows.len()];
    for c in 0..m {
        let col: Vec<f64> = rows.iter().map(|r| r[c]).collect();
        for (j, d) in fd_derivative(&col, ds).into_iter().enumerate() {
            out[j][c] = d;
        }
    }
    out
}

fn flatten_h(hv: &HValues) -> Vec<f64> {
    hv.h.iter()
        .chain(&hv.hp)
        .chain(&hv.hpp)
        .flat_map(|a| a.iter().copied())
        .collect()
}

fn unflatten_h(v: &[f64], len: usize) -> HValues {
    let block = |off: usize| -> Vec<[f64; 5]> {
        (0..len)
            .map(|k| {
                let mut a = [0.0; 5];
                a.copy_from_slice(&v[off + 5 * k..off + 5 * k + 5]);
                a
            })
            .collect()
    };
    HValues {
        h: block(0),
        hp: block(5 * len),
        hpp: block(10 * len),
    }
}

impl VariationSurface {
    pub fn triple(&self) -> &DefiningTriple {
        &self.triple
    }

    pub fn s_nodes(&self) -> &[f64] {
        &self.s_nodes
    }

    pub fn ds(&self) -> f64 {
        self.s_nodes[1] - self.s_nodes[0]
    }

    /// Slice trajectories.
    pub fn trajectories(&self) -> &[Trajectory] {
        &self.trajs
    }

    /// Extended slices; `BadParams` for boundary-only surfaces.
    pub fn slices(&self) -> Result<&[ExtendedCurve]> {
        self.slices
            .as_deref()
            .ok_or_else(|| Error::BadParams("surface was built without extended data".into()))
    }

    pub fn range(&self) -> BetaRange {
        self.range
    }

    /// Same slices, different `β` convention for the `h`-contact terms.
    pub fn with_range(&self, range: BetaRange) -> Self {
        let mut s = self.clone();
        s.range = range;
        s
    }

    /// Terminal costs of all slices.
    pub fn costs(&self) -> Vec<f64> {
        self.bounds.iter().map(|b| b.cost).collect()
    }

    /// `∫₀ᵀ L` along every slice.
    pub fn lagrangian_integrals(&self) -> Vec<f64> {
        self.bounds.iter().map(|b| b.int_l).collect()
    }

    /// Jacobi fields at `t` (jets of order `order`).
    pub fn jacobi(&self, t: f64, order: usize) -> Result<JacobiField> {
        let ds = self.ds();
        let slices = self.slices()?;
        let per: Vec<(Vec<f64>, Vec<f64>, HValues, f64)> = slices
            .iter()
            .map(|e| -> Result<_> {
                let j = e.base.jet(t, order)?;
                Ok((j.flat().to_vec(), e.base.control_value(t), e.coeffs.values(t), e.mu(t)?))
            })
            .collect::<Result<_>>()?;
        let len = slices[0].coeffs.len();
        let q = fd_columns(&per.iter().map(|p| p.0.clone()).collect::<Vec<_>>(), ds);
        let u = fd_columns(&per.iter().map(|p| p.1.clone()).collect::<Vec<_>>(), ds);
        let h = fd_columns(&per.iter().map(|p| flatten_h(&p.2)).collect::<Vec<_>>(), ds)
            .into_iter()
            .map(|v| unflatten_h(&v, len))
            .collect();
        let mu = fd_derivative(&per.iter().map(|p| p.3).collect::<Vec<_>>(), ds);
        Ok(JacobiField { t, q, u, h, mu })
    }

    /// `G(t, s_j) = Σ_{β ∈ range} h′_(3)Y′_(0) + h″_(3)Y″_(0)` for all slices.
    pub fn g_values(&self, t: f64) -> Result<Vec<f64>> {
        let jac = self.jacobi(t, 0)?;
        let n = self.triple.q_dim();
        Ok(self
            .slices()?
            .iter()
            .zip(&jac.h)
            .map(|(e, y)| {
                let hv = e.coeffs.values(t);
                (0..hv.h.len())
                    .filter(|k| self.range.includes(k / n))
                    .map(|k| hv.hp[k][3] * y.hp[k][0] + hv.hpp[k][3] * y.hpp[k][0])
                    .sum()
            })
            .collect())
    }

    /// `α^PC` paired with the Jacobi tangent at `(t, s_j)`.
    pub fn vertical_pairing(&self, t: f64, j: usize) -> Result<f64> {
        let order = self.triple.working_order();
        let jac = self.jacobi(t, order)?;
        let point = self.slices()?[j].point(t, order)?;
        let y = &jac.h[j];
        let tangent = ExtendedTangent {
            dt: 0.0,
            dq: jac.q[j].clone(),
            du: jac.u[j].clone(),
            dh: y.h.iter().map(|a| [a[0], a[1]]).collect(),
            dhp: y.hp.iter().map(|a| [a[0], a[1]]).collect(),
            dhpp: y.hpp.iter().map(|a| [a[0], a[1]]).collect(),
            dmu: jac.mu[j],
        };
        pc_form_pairing(&self.triple, &point, &tangent, self.range)
    }

    /// Integrand `Y^a ∂𝒫/∂u^a − ∂²μ′/∂t∂s` on the tensor grid with
    /// `t_intervals` (even) subintervals in `t`; rows are `s`-slices.
    pub fn integrand_grid(&self, t_intervals: usize) -> Result<SurfaceGrid> {
        if t_intervals < 2 || !t_intervals.is_multiple_of(2) {
            return Err(Error::BadParams("t-grid needs an even number of intervals".into()));
        }
        let t_end = self.triple.horizon;
        let ts = uniform_grid(0.0, t_end, t_intervals);
        let ds = self.ds();
        let r = self.triple.order();
        let n = self.triple.q_dim();
        struct Cell {
            ltilde: f64,
            u: Vec<f64>,
            grad: Vec<f64>,
            hp: Vec<[f64; 5]>,
            hpp: Vec<[f64; 5]>,
        }
        let cells: Vec<Vec<Cell>> = self
            .slices()?
            .par_iter()
            .map(|e| {
                ts.iter()
                    .map(|&t| -> Result<Cell> {
                        let jet = e.base.jet(t, r)?;
                        let u = e.base.control_value(t);
                        let hv = e.coeffs.values(t);
                        let lval = self.triple.lagrangian.field.eval(&jet, &u);
                        let grad = pontryagin_p(&self.triple, &jet).gradient(&u);
                        Ok(Cell {
                            ltilde: lval + crate::auxiliary::h_energy(&e.coeffs, &hv),
                            u,
                            grad,
                            hp: hv.hp,
                            hpp: hv.hpp,
                        })
                    })
                    .collect()
            })
            .collect::<Result<_>>()?;
        let ns = cells.len();
        let nt = ts.len();
        let len = cells[0][0].hp.len();
        let mut integrand = vec![vec![0.0; nt]; ns];
        let mut dmu = vec![vec![0.0; nt]; ns];
        for ti in 0..nt {
            let lt: Vec<f64> = cells.iter().map(|c| c[ti].ltilde).collect();
            let d_lt = fd_derivative(&lt, ds);
            let ya = fd_columns(&cells.iter().map(|c| c[ti].u.clone()).collect::<Vec<_>>(), ds);
            let yh = fd_columns(
                &cells
                    .iter()
                    .map(|c| {
                        c[ti].hp
                            .iter()
                            .chain(&c[ti].hpp)
                            .flat_map(|a| [a[0], a[1]])
                            .collect::<Vec<f64>>()
                    })
                    .collect::<Vec<_>>(),
                ds,
            );
            for j in 0..ns {
                let c = &cells[j][ti];
                let work: f64 = ya[j].iter().zip(&c.grad).map(|(y, g)| y * g).sum();
                let mut dt_g = 0.0;
                for k in 0..len {
                    if !self.range.includes(k / n) {
                        continue;
                    }
                    let (yp0, yp1) = (yh[j][2 * k], yh[j][2 * k + 1]);
                    let (ypp0, ypp1) = (yh[j][2 * (len + k)], yh[j][2 * (len + k) + 1]);
                    dt_g += c.hp[k][4] * yp0 + c.hp[k][3] * yp1 + c.hpp[k][4] * ypp0 + c.hpp[k][3] * ypp1;
                }
                let mixed = -d_lt[j] + dt_g;
                dmu[j][ti] = mixed;
                integrand[j][ti] = work - mixed;
            }
        }
        Ok(SurfaceGrid {
            t: ts,
            s: self.s_nodes.clone(),
            integrand,
            mixed: dmu,
        })
    }

    /// `Σ ∂C/∂q^i_(β) Y^i_(β)` at `(T, s_j)`.
    pub fn cost_pairing(&self, j: usize) -> f64 {
        let y = self.boundary_jacobi(true);
        self.bounds[j].dc_t.iter().zip(&y[j]).map(|(a, b)| a * b).sum()
    }

    /// Jacobi of jets at `t = 0` (`terminal = false`) or `t = T`, from the
    /// stored boundary jets.
    fn boundary_jacobi(&self, terminal: bool) -> Vec<Vec<f64>> {
        let rows: Vec<Vec<f64>> = self
            .bounds
            .iter()
            .map(|b| if terminal { b.jet_t.flat().to_vec() } else { b.jet0.flat().to_vec() })
            .collect();
        fd_columns(&rows, self.ds())
    }

    /// `Θ_L(Y) = Σ_{β<r} M^L_β Y_(β)` at `t = 0` or `T` for every slice.
    pub fn theta(&self, terminal: bool) -> Vec<f64> {
        let y = self.boundary_jacobi(terminal);
        self.bounds
            .iter()
            .zip(&y)
            .map(|(b, yj)| {
                let m = if terminal { &b.m_t } else { &b.m0 };
                m.iter().zip(yj).map(|(a, c)| a * c).sum()
            })
            .collect()
    }
}

/// Tabulated homotopy integrand; `integrand[j][k]` at `(s_j, t_k)`.
#[derive(Clone, Debug)]
pub struct SurfaceGrid {
    pub t: Vec<f64>,
    pub s: Vec<f64>,
    pub integrand: Vec<Vec<f64>>,
    /// `∂²μ′/∂t∂s` on the same grid.
    pub mixed: Vec<Vec<f64>>,
}

impl SurfaceGrid {
    pub fn dt(&self) -> f64 {
        self.t[1] - self.t[0]
    }

    pub fn ds(&self) -> f64 {
        self.s[1] - self.s[0]
    }

    /// `−∬ integrand`.
    pub fn rhs(&self) -> f64 {
        -simpson_2d(&self.integrand, self.ds(), self.dt())
    }

    /// `∫₀ᵀ integrand(t, s_j) dt` for every slice.
    pub fn columns(&self) -> Vec<f64> {
        self.integrand.iter().map(|row| simpson(row, self.dt())).collect()
    }
}

/// Default number of `t`-intervals for the homotopy double integral.
pub const DEFAULT_T_INTERVALS: usize = 400;

/// `C₁ − C₀`.
pub fn homotopy_lhs(surface: &VariationSurface) -> f64 {
    let c = surface.costs();
    c[c.len() - 1] - c[0]
}

/// `−∬ [Y^a ∂𝒫/∂u^a − ∂²μ′/∂t∂s] ds dt` on the default grid.
pub fn homotopy_rhs(surface: &VariationSurface) -> Result<f64> {
    homotopy_rhs_with(surface, DEFAULT_T_INTERVALS)
}

/// [`homotopy_rhs`] with an explicit number of `t`-intervals.
pub fn homotopy_rhs_with(surface: &VariationSurface, t_intervals: usize) -> Result<f64> {
    Ok(surface.integrand_grid(t_intervals)?.rhs())
}

/// `𝒲^F(δ) = ∫₀ᵀ∫₀^δ [Y^a ∂𝒫/∂u^a − ∂²μ′/∂t∂s] ds dt`.
pub fn minimal_labour_w(surface: &VariationSurface, delta: f64) -> Result<f64> {
    let grid = surface.integrand_grid(DEFAULT_T_INTERVALS)?;
    Ok(minimal_labour_from_grid(&grid, delta))
}

/// [`minimal_labour_w`] on a precomputed grid.
pub fn minimal_labour_from_grid(grid: &SurfaceGrid, delta: f64) -> f64 {
    let cum = cumulative_simpson(&grid.columns(), grid.ds());
    let delta = delta.clamp(0.0, 1.0);
    let x = delta / grid.ds();
    let k = (x.floor() as usize).min(cum.len() - 1);
    if k + 1 >= cum.len() {
        return cum[k];
    }
    let w = x - k as f64;
    cum[k] * (1.0 - w) + cum[k + 1] * w
}

/// `(dC(V)|_T at s = 0, ∫₀ᵀ integrand(t, 0) dt)`; candidate optima need the
/// first `≥ 0` and the second `≤ 0`.
pub fn infinitesimal_conditions(surface: &VariationSurface) -> Result<(f64, f64)> {
    let grid = surface.integrand_grid(DEFAULT_T_INTERVALS)?;
    Ok((surface.cost_pairing(0), grid.columns()[0]))
}

/// `μ′(t, s_j) = μ(t, s_j) + ∫₀^{s_j} G(t, v) dv` for slice index `j`.
pub fn mu_prime_correction(surface: &VariationSurface, t: f64, j: usize) -> Result<f64> {
    let g = surface.g_values(t)?;
    let cum = cumulative_simpson(&g, surface.ds());
    Ok(surface.slices()?[j].mu(t)? + cum[j])
}

/// `μ′` on the grid `t_intervals × s-nodes`, rows `(t, s, value)`.
pub fn mu_prime_grid(surface: &VariationSurface, t_intervals: usize) -> Result<Vec<(f64, f64, f64)>> {
    let slices = surface.slices()?;
    let ts = uniform_grid(0.0, surface.triple.horizon, t_intervals.max(1));
    let mut out = Vec::with_capacity(ts.len() * surface.s_nodes.len());
    for t in ts {
        let g = surface.g_values(t)?;
        let cum = cumulative_simpson(&g, surface.ds());
        for (j, s) in surface.s_nodes.iter().enumerate() {
            out.push((t, *s, slices[j].mu(t)? + cum[j]));
        }
    }
    Ok(out)
}

/// `μ′(T,1) − μ′(T,0) = μ(T,1) − μ(T,0) + ∫₀¹ G(T, v) dv`.
pub fn delta_mu_prime_direct(surface: &VariationSurface) -> Result<f64> {
    let t_end = surface.triple.horizon;
    let g = surface.g_values(t_end)?;
    let slices = surface.slices()?;
    let last = slices.len() - 1;
    Ok(slices[last].mu_end() - slices[0].mu_end() + simpson(&g, surface.ds()))
}

/// `μ′(T,1) − μ′(T,0)` in closed form:
/// `C₁ − C₀ − ∫L₁ + ∫L₀ + ∫₀¹ Θ_L(Y)|_T ds − ∫₀¹ Θ_L(Y)|_0 ds`.
pub fn delta_mu_prime_closed_form(surface: &VariationSurface) -> f64 {
    let ds = surface.ds();
    let il = surface.lagrangian_integrals();
    let last = il.len() - 1;
    homotopy_lhs(surface) - il[last] + il[0] + simpson(&surface.theta(true), ds)
        - simpson(&surface.theta(false), ds)
}

/// Residual `∫(L₁ − L₀) − ∫₀¹(∂C/∂q·Y + Θ_L(Y))|_T ds + ∫₀¹ Θ_L(Y)|_0 ds`.
pub fn goodn_residual(surface: &VariationSurface) -> f64 {
    let ds = surface.ds();
    let il = surface.lagrangian_integrals();
    let last = il.len() - 1;
    let theta_t = surface.theta(true);
    let terminal: Vec<f64> = (0..theta_t.len()).map(|j| surface.cost_pairing(j) + theta_t[j]).collect();
    il[last] - il[0] - simpson(&terminal, ds) + simpson(&surface.theta(false), ds)
}

/// `α^PC(Y)|_T − α^PC(Y)|_0 − ∫₀ᵀ ∂²μ′/∂t∂s dt` at slice `j`.
pub fn conservation_residual(surface: &VariationSurface, grid: &SurfaceGrid, j: usize) -> Result<f64> {
    let t_end = surface.triple.horizon;
    let a_t = surface.vertical_pairing(t_end, j)?;
    let a_0 = surface.vertical_pairing(0.0, j)?;
    Ok(a_t - a_0 - simpson(&grid.mixed[j], grid.dt()))
}

/// Gap `|lhs − rhs|` under both `β` conventions; the smaller one is selected.
#[derive(Clone, Debug, PartialEq)]
pub struct RangeSelection {
    pub lhs: f64,
    pub rhs_full: f64,
    pub rhs_from_one: f64,
    pub selected: BetaRange,
}

impl RangeSelection {
    pub fn gap(&self, range: BetaRange) -> f64 {
        match range {
            BetaRange::Full => (self.lhs - self.rhs_full).abs(),
            BetaRange::FromOne => (self.lhs - self.rhs_from_one).abs(),
        }
    }
}

/// Adjudicate the `β` summation convention with the homotopy identity.
pub fn select_beta_range(surface: &VariationSurface, t_intervals: usize) -> Result<RangeSelection> {
    let lhs = homotopy_lhs(surface);
    let rhs_full = homotopy_rhs_with(&surface.with_range(BetaRange::Full), t_intervals)?;
    let rhs_from_one = homotopy_rhs_with(&surface.with_range(BetaRange::FromOne), t_intervals)?;
    let selected = if (lhs - rhs_full).abs() <= (lhs - rhs_from_one).abs() {
        BetaRange::Full
    } else {
        BetaRange::FromOne
    };
    Ok(RangeSelection {
        lhs,
        rhs_full,
        rhs_from_one,
        selected,
    })
}
