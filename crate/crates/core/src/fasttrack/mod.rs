//! Minimizer selections `v(u)`, the chart `G(u) = xbar + U u + V v(u)` and the
//! smoothness batteries run along it.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::certify::{regularity_gap, witness, CertKind, Certificate, Tally, Witness, REGULARITY_TOL};
use crate::error::{Error, Result};
use crate::funcmodel::Problem;
use crate::polytope::Subspace;
use crate::sampling::cube_grid;
use crate::ulag::{fd_gradient, inner_minimize, inner_objective, FD_STEP};
use crate::uvframe::UVFrame;

/// Value tolerance for membership of `v(u)` in `W(u; g_v)`.
pub const MEMBERSHIP_TOL: f64 = 1e-6;

/// Step of the finite-difference Jacobian of the chart.
pub const CHART_STEP: f64 = 1e-5;

/// Step of the finite-difference Jacobian of the selection.
pub const SELECTION_STEP: f64 = 1e-4;

/// Angle tolerance for tangent and normal spaces.
pub const ANGLE_TOL: f64 = 1e-4;

/// Residual tolerance of the polynomial fit of `f o G`.
pub const FIT_TOL: f64 = 1e-8;

/// Final-distance tolerance of the inner-semicontinuity sequence.
pub const ISC_TOL: f64 = 1e-4;

/// Index after which inner-semicontinuity distances must not increase.
pub const ISC_MONOTONE_FROM: usize = 3;

/// Sampling radii for batteries along a chart.
#[derive(Debug, Clone, PartialEq)]
pub struct Radii {
    /// Half-width of the symmetric U-grid.
    pub grid_radius: f64,
    /// Grid points per U-dimension (one-dimensional U); higher dimensions use 9.
    pub grid_n: usize,
    /// `u0 = u0_scale * e_1` starts the sequence `u_k = 2^-k u0`.
    pub u0_scale: f64,
    /// Last index of the sequence.
    pub k_max: usize,
}

impl Default for Radii {
    fn default() -> Self {
        Self { grid_radius: 0.2, grid_n: 41, u0_scale: 0.2, k_max: 14 }
    }
}

impl Radii {
    pub fn grid(&self, m: usize) -> Vec<DVector<f64>> {
        let per_dim = if m <= 1 { self.grid_n } else { 9 };
        cube_grid(m, self.grid_radius, per_dim)
    }

    pub fn u0(&self, m: usize) -> DVector<f64> {
        let mut u0 = DVector::zeros(m);
        if m > 0 {
            u0[0] = self.u0_scale;
        }
        u0
    }
}

/// The minimizer selection defining a chart.
#[derive(Clone)]
pub enum Selection {
    /// `v(u)` = the single cluster of `W(u; g_v)`.
    Traced { gbar: DVector<f64> },
    /// A prescribed map `u -> v`, e.g. to test a candidate manifold.
    Explicit(Arc<dyn Fn(&DVector<f64>) -> DVector<f64> + Send + Sync>),
}

impl fmt::Debug for Selection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Selection::Traced { gbar } => f.debug_struct("Traced").field("gbar", &gbar.as_slice()).finish(),
            Selection::Explicit(_) => f.write_str("Explicit(..)"),
        }
    }
}

/// Single-chart manifold `M = {G(u)}` near `xbar`.
#[derive(Debug, Clone)]
pub struct ManifoldModel {
    pub label: String,
    pub problem: Problem,
    pub frame: UVFrame,
    pub eps: f64,
    pub selection: Selection,
    /// Finite-difference `grad G(0)`, `n x m`.
    pub jacobian: DMatrix<f64>,
    pub tangent: Subspace,
    pub normal: Subspace,
    /// Chart radius `delta`.
    pub radius: f64,
}

impl ManifoldModel {
    /// Chart of the traced selection for `gbar`.
    pub fn traced(
        label: &str,
        problem: &Problem,
        frame: &UVFrame,
        eps: f64,
        gbar: &DVector<f64>,
        radius: f64,
    ) -> Result<Self> {
        Self::build(label, problem, frame, eps, Selection::Traced { gbar: gbar.clone() }, radius)
    }

    /// Chart of a prescribed selection `u -> v`.
    pub fn explicit<F>(label: &str, problem: &Problem, frame: &UVFrame, eps: f64, v: F, radius: f64) -> Result<Self>
    where
        F: Fn(&DVector<f64>) -> DVector<f64> + Send + Sync + 'static,
    {
        Self::build(label, problem, frame, eps, Selection::Explicit(Arc::new(v)), radius)
    }

    fn build(
        label: &str,
        problem: &Problem,
        frame: &UVFrame,
        eps: f64,
        selection: Selection,
        radius: f64,
    ) -> Result<Self> {
        let mut model = Self {
            label: label.to_string(),
            problem: problem.clone(),
            frame: frame.clone(),
            eps,
            selection,
            jacobian: DMatrix::zeros(frame.ambient(), frame.dim_u()),
            tangent: Subspace::zero(frame.ambient()),
            normal: Subspace::full(frame.ambient()),
            radius,
        };
        let m = frame.dim_u();
        let n = frame.ambient();
        let mut jac = DMatrix::zeros(n, m);
        for i in 0..m {
            let mut up = DVector::zeros(m);
            up[i] = CHART_STEP;
            let col = (model.point(&up)? - model.point(&-&up)?) / (2.0 * CHART_STEP);
            jac.set_column(i, &col);
        }
        if m > 0 {
            let sv = jac.clone().svd(false, false).singular_values;
            let rank = sv.iter().filter(|&&s| s > 1e-8).count();
            if rank < m {
                return Err(Error::RankDeficient { rank, expected: m });
            }
        }
        let cols: Vec<DVector<f64>> = jac.column_iter().map(|c| c.into_owned()).collect();
        model.tangent = Subspace::span(n, &cols);
        model.normal = model.tangent.complement();
        model.jacobian = jac;
        Ok(model)
    }

    pub fn v_of(&self, u: &DVector<f64>) -> Result<DVector<f64>> {
        match &self.selection {
            Selection::Traced { gbar } => {
                let e = inner_minimize(&self.problem, &self.frame, u, gbar, self.eps)?;
                e.unique_minimizer().cloned()
            }
            Selection::Explicit(f) => Ok(f(u)),
        }
    }

    /// `G(u) = xbar + U u + V v(u)`.
    pub fn point(&self, u: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(self.frame.point(u, &self.v_of(u)?))
    }

    /// `(u_k, G(u_k))` for `u_k = 2^-k u0`, `k = 1..=k_max`.
    pub fn sequence(&self, u0: &DVector<f64>, k_max: usize) -> Result<Vec<(DVector<f64>, DVector<f64>)>> {
        (1..=k_max)
            .map(|k| {
                let u = u0 * 0.5f64.powi(k as i32);
                let x = self.point(&u)?;
                Ok((u, x))
            })
            .collect()
    }
}

/// `v(u)` on a U-grid, checked against several `gbar`.
#[derive(Debug, Clone)]
pub struct TrajectoryTrace {
    pub problem: Problem,
    pub frame: UVFrame,
    pub eps: f64,
    pub u_grid: Vec<DVector<f64>>,
    pub v_of_u: Vec<DVector<f64>>,
    pub gbars: Vec<DVector<f64>>,
    /// `l_values[i][j] = L_eps(u_i; gbar_j)`.
    pub l_values: Vec<Vec<f64>>,
    /// Per grid point, the largest `objective(v(u); gbar_j) - L_eps(u; gbar_j)`.
    pub membership_gap: Vec<f64>,
    /// Per grid point, whether `v(u)` lies in every `W(u; gbar_j)`.
    pub intersection: Vec<bool>,
    /// Largest distance between the selections made for different `gbar`.
    pub selection_spread: f64,
}

impl TrajectoryTrace {
    /// Fresh evaluation of the selection (first `gbar`) off the grid.
    pub fn v_at(&self, u: &DVector<f64>) -> Result<DVector<f64>> {
        let e = inner_minimize(&self.problem, &self.frame, u, &self.gbars[0], self.eps)?;
        e.unique_minimizer().cloned()
    }
}

/// Traces `v(u)` as the single minimizer cluster for the first `gbar` and
/// verifies that it minimizes for every other sampled `gbar` too.
pub fn trace_fast_track(
    problem: &Problem,
    frame: &UVFrame,
    eps: f64,
    u_grid: &[DVector<f64>],
    gbar_samples: &[DVector<f64>],
) -> Result<TrajectoryTrace> {
    if gbar_samples.is_empty() {
        return Err(Error::Precondition("at least one gbar sample is required".into()));
    }
    let mut trace = TrajectoryTrace {
        problem: problem.clone(),
        frame: frame.clone(),
        eps,
        u_grid: u_grid.to_vec(),
        v_of_u: Vec::with_capacity(u_grid.len()),
        gbars: gbar_samples.to_vec(),
        l_values: Vec::with_capacity(u_grid.len()),
        membership_gap: Vec::with_capacity(u_grid.len()),
        intersection: Vec::with_capacity(u_grid.len()),
        selection_spread: 0.0,
    };
    for u in u_grid {
        let evals = gbar_samples
            .iter()
            .map(|g| inner_minimize(problem, frame, u, g, eps))
            .collect::<Result<Vec<_>>>()?;
        let v = evals[0].unique_minimizer()?.clone();
        let mut gap: f64 = 0.0;
        for (g, e) in gbar_samples.iter().zip(&evals).skip(1) {
            let g_gap = inner_objective(problem, frame, u, g, &v) - e.value;
            if g_gap > MEMBERSHIP_TOL {
                return Err(Error::SelectionMismatch {
                    u: u.as_slice().to_vec(),
                    v: v.as_slice().to_vec(),
                    gbar: g.as_slice().to_vec(),
                    gap: g_gap,
                });
            }
            gap = gap.max(g_gap);
            let other = e.unique_minimizer()?;
            trace.selection_spread = trace.selection_spread.max((other - &v).norm());
        }
        trace.l_values.push(evals.iter().map(|e| e.value).collect());
        trace.membership_gap.push(gap);
        trace.intersection.push(gap <= MEMBERSHIP_TOL);
        trace.v_of_u.push(v);
    }
    Ok(trace)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionDiagnostics {
    /// Central-difference `grad v(0)`, `p x m`.
    pub jacobian: DMatrix<f64>,
    pub jacobian_norm: f64,
    /// `(||u||, ||v(u)|| / ||u||)` at the two probe radii.
    pub ratios: Vec<(f64, f64)>,
    pub passed: bool,
}

/// `grad v(0) = 0` and `v(u) = o(||u||)` through finite differences and ratios.
pub fn check_smooth_selection(trace: &TrajectoryTrace) -> Result<SelectionDiagnostics> {
    let m = trace.frame.dim_u();
    let p = trace.frame.dim_v();
    let mut jac = DMatrix::zeros(p, m);
    for i in 0..m {
        let mut h = DVector::zeros(m);
        h[i] = SELECTION_STEP;
        let col = (trace.v_at(&h)? - trace.v_at(&-&h)?) / (2.0 * SELECTION_STEP);
        jac.set_column(i, &col);
    }
    let jacobian_norm = if m > 0 && p > 0 { jac.norm() } else { 0.0 };
    let mut ratios = Vec::new();
    if m > 0 {
        for radius in [1e-2, 1e-3] {
            let mut u = DVector::zeros(m);
            u[0] = radius;
            ratios.push((radius, trace.v_at(&u)?.norm() / radius));
        }
    }
    let ratios_ok = ratios.len() < 2 || (ratios[1].1 <= ratios[0].1 && ratios[1].1 <= 1e-2);
    Ok(SelectionDiagnostics { jacobian: jac, jacobian_norm, ratios, passed: jacobian_norm <= 1e-4 && ratios_ok })
}

/// `T_M(xbar)`, the column space of `grad G(0)`.
pub fn tangent_space(model: &ManifoldModel) -> Subspace {
    model.tangent.clone()
}

/// One part of the partial-smoothness battery.
#[derive(Debug, Clone)]
pub struct PartResult {
    pub part: &'static str,
    pub passed: bool,
    pub measure: f64,
    pub tolerance: f64,
    pub witness: Option<Witness>,
    pub note: String,
}

#[derive(Debug, Clone)]
pub struct PartialSmoothnessVerdict {
    pub manifold: String,
    pub parts: Vec<PartResult>,
}

impl PartialSmoothnessVerdict {
    pub fn passed(&self) -> bool {
        self.parts.iter().all(|p| p.passed)
    }

    pub fn failing_parts(&self) -> Vec<&'static str> {
        self.parts.iter().filter(|p| !p.passed).map(|p| p.part).collect()
    }
}

/// Exponent tuples of total degree at most `deg` in `m` variables.
fn monomials(m: usize, deg: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for _ in 0..m {
        out = out
            .into_iter()
            .flat_map(|e: Vec<usize>| {
                let used: usize = e.iter().sum();
                (0..=deg - used).map(move |k| {
                    let mut e = e.clone();
                    e.push(k);
                    e
                })
            })
            .collect();
    }
    out
}

/// Max residual of the least-squares fit of a degree-4 polynomial to `f o G`.
pub fn polynomial_fit_residual(model: &ManifoldModel, grid: &[DVector<f64>]) -> Result<f64> {
    let m = model.frame.dim_u();
    let values = grid
        .iter()
        .map(|u| Ok(model.problem.eval(&model.point(u)?)))
        .collect::<Result<Vec<f64>>>()?;
    let basis = monomials(m, 4);
    let a = DMatrix::from_fn(grid.len(), basis.len(), |r, c| {
        basis[c].iter().enumerate().map(|(d, &k)| grid[r][d].powi(k as i32)).product::<f64>()
    });
    let y = DVector::from_vec(values);
    let coef = a
        .clone()
        .svd(true, true)
        .solve(&y, 1e-12)
        .map_err(|e| Error::Precondition(format!("polynomial fit failed: {e}")))?;
    Ok((a * coef - y).amax())
}

/// Targets for inner semicontinuity: generators of `df(xbar)` and the centroid of `D_eps f`.
pub fn default_isc_targets(model: &ManifoldModel) -> Result<Vec<DVector<f64>>> {
    let mut targets = model.frame.subdiff.generators().to_vec();
    targets.push(model.frame.default_gbar(model.eps)?);
    Ok(targets)
}

/// For each target `g` in `df(xbar)`, the distance from `g` to `df(x^k)` along
/// `x^k = G(2^-k u0)`. Passes iff every distance sequence is nonincreasing
/// from `k = 3` on and ends at most `1e-4`.
pub fn inner_semicontinuity_check(
    problem: &Problem,
    model: &ManifoldModel,
    targets: &[DVector<f64>],
    u0: &DVector<f64>,
    k_max: usize,
) -> Result<Certificate> {
    let seq = model.sequence(u0, k_max)?;
    let mut tally = Tally::new(CertKind::InnerSemicontinuity, 0.0)
        .param("k_max", k_max as f64)
        .param("targets", targets.len() as f64);
    let mut worst_final: f64 = 0.0;
    for g in targets {
        let mut dists = Vec::with_capacity(seq.len());
        let mut last = g.clone();
        for (_, x) in &seq {
            let sub = problem.limiting_subdifferential(x)?.polytope;
            let (near, _) = sub.nearest_point(g);
            dists.push((&near - g).norm());
            last = near;
        }
        let final_d = dists.last().copied().unwrap_or(0.0);
        worst_final = worst_final.max(final_d);
        let mut violation = final_d - ISC_TOL;
        for k in ISC_MONOTONE_FROM..dists.len() {
            // dists[k - 1] is index k; compare with index k + 1.
            violation = violation.max(dists[k] - dists[k - 1] - 1e-12);
        }
        tally.record(violation, || {
            let mut w = witness(&[("target", g), ("limit", &last)]);
            w.insert("distances".into(), dists.clone());
            w
        });
    }
    tally.set_param("final_distance", worst_final);
    Ok(tally.finish())
}

/// The four-part check of partial smoothness of `f` relative to the chart.
pub fn partial_smoothness_battery(
    problem: &Problem,
    model: &ManifoldModel,
    radii: &Radii,
) -> Result<PartialSmoothnessVerdict> {
    let m = model.frame.dim_u();
    let grid = radii.grid(m);
    let mut parts = Vec::with_capacity(4);

    let residual = polynomial_fit_residual(model, &grid)?;
    parts.push(PartResult {
        part: "i",
        passed: residual <= FIT_TOL,
        measure: residual,
        tolerance: FIT_TOL,
        witness: None,
        note: "max residual of a degree-4 fit of f o G on the grid".into(),
    });

    let mut gap_max: f64 = 0.0;
    let mut gap_witness = None;
    for u in &grid {
        let x = model.point(u)?;
        let gap = regularity_gap(problem, &x, 17)?;
        if gap > gap_max {
            gap_max = gap;
            if gap > REGULARITY_TOL && gap_witness.is_none() {
                gap_witness = Some(witness(&[("u", u), ("x", &x)]));
            }
        }
    }
    parts.push(PartResult {
        part: "ii",
        passed: gap_max <= REGULARITY_TOL,
        measure: gap_max,
        tolerance: REGULARITY_TOL,
        witness: gap_witness,
        note: "regular versus limiting subdifferential on the chart".into(),
    });

    let angle = model.normal.max_principal_angle(&model.frame.v);
    parts.push(PartResult {
        part: "iii",
        passed: angle <= ANGLE_TOL,
        measure: angle,
        tolerance: ANGLE_TOL,
        witness: (angle > ANGLE_TOL).then(|| {
            let mut w = Witness::new();
            w.insert("normal".into(), model.normal.columns().concat());
            w.insert("v".into(), model.frame.v.columns().concat());
            w
        }),
        note: "principal angle between the chart normal space and V".into(),
    });

    let targets = default_isc_targets(model)?;
    let isc = inner_semicontinuity_check(problem, model, &targets, &radii.u0(m), radii.k_max)?;
    parts.push(PartResult {
        part: "iv",
        passed: isc.passed(),
        measure: isc.max_violation,
        tolerance: 0.0,
        witness: isc.witness.clone(),
        note: format!("inner semicontinuity along u_k = 2^-k u0, k <= {}", radii.k_max),
    });
    Ok(PartialSmoothnessVerdict { manifold: model.label.clone(), parts })
}

#[derive(Debug, Clone)]
pub struct C1Verdict {
    pub max_jump: f64,
    /// Largest `jump - 100 * spacing` over adjacent grid points.
    pub jump_excess: f64,
    pub identity_violation: f64,
    pub witness: Option<Witness>,
    pub passed: bool,
}

/// Continuity modulus of the gradients of `L_eps(.; gbar)` along the grid, and
/// the affine relation `L(u; gbar) = L(u; ghat) - <gbar_v - ghat_v, v(u)>`.
pub fn c1_fast_track_battery(
    problem: &Problem,
    frame: &UVFrame,
    eps: f64,
    trace: &TrajectoryTrace,
) -> Result<C1Verdict> {
    let mut max_jump: f64 = 0.0;
    let mut jump_excess = f64::NEG_INFINITY;
    let mut witness_out: Option<Witness> = None;
    if frame.dim_u() > 0 {
        for g in &trace.gbars {
            let grads = trace
                .u_grid
                .iter()
                .map(|u| fd_gradient(problem, frame, u, g, eps, FD_STEP))
                .collect::<Result<Vec<_>>>()?;
            for i in 1..grads.len() {
                let jump = (&grads[i] - &grads[i - 1]).norm();
                let spacing = (&trace.u_grid[i] - &trace.u_grid[i - 1]).norm();
                max_jump = max_jump.max(jump);
                let excess = jump - 10.0 * spacing * 10.0;
                jump_excess = jump_excess.max(excess);
                if excess > 0.0 && witness_out.is_none() {
                    witness_out = Some(witness(&[("u0", &trace.u_grid[i - 1]), ("u1", &trace.u_grid[i]), ("gbar", g)]));
                }
            }
        }
    }
    let jump_excess = if jump_excess.is_finite() { jump_excess } else { 0.0 };
    let mut identity_violation: f64 = 0.0;
    for (i, u) in trace.u_grid.iter().enumerate() {
        let v = &trace.v_of_u[i];
        for a in 0..trace.gbars.len() {
            for b in 0..trace.gbars.len() {
                let shift = frame.v_coords(&(&trace.gbars[a] - &trace.gbars[b])).dot(v);
                let err = (trace.l_values[i][a] - (trace.l_values[i][b] - shift)).abs();
                if err > identity_violation {
                    identity_violation = err;
                    if err > 1e-8 && witness_out.is_none() {
                        witness_out =
                            Some(witness(&[("u", u), ("gbar", &trace.gbars[a]), ("ghat", &trace.gbars[b])]));
                    }
                }
            }
        }
    }
    Ok(C1Verdict {
        max_jump,
        jump_excess,
        identity_violation,
        witness: witness_out,
        passed: jump_excess <= 0.0 && identity_violation <= 1e-8,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::uvframe::build_frame;

    fn setup(name: &str) -> (Problem, UVFrame, f64, Vec<DVector<f64>>) {
        let p = catalog::problem(name).unwrap();
        let f = build_frame(&p, None).unwrap();
        let eps = f.default_eps().unwrap();
        let gbars = f.sample_gbars(eps, 3, 0).unwrap();
        (p, f, eps, gbars)
    }

    #[test]
    fn monomial_counts() {
        assert_eq!(monomials(0, 4).len(), 1);
        assert_eq!(monomials(1, 4).len(), 5);
        assert_eq!(monomials(2, 4).len(), 15);
    }

    #[test]
    fn parabola_trace_follows_u_squared() {
        let (p, f, eps, gbars) = setup("P6");
        let grid = cube_grid(1, 0.2, 41);
        let t = trace_fast_track(&p, &f, eps, &grid, &gbars).unwrap();
        let dev = grid.iter().zip(&t.v_of_u).map(|(u, v)| (v[0] - u[0] * u[0]).abs()).fold(0.0, f64::max);
        assert!(dev <= 1e-6, "{dev}");
        assert!(t.selection_spread <= 1e-6);
        let d = check_smooth_selection(&t).unwrap();
        assert!(d.passed, "{d:?}");
        let c1 = c1_fast_track_battery(&p, &f, eps, &t).unwrap();
        assert!(c1.passed, "{c1:?}");
    }

    #[test]
    fn abs_quad_selection_is_zero() {
        let (p, f, eps, gbars) = setup("P1");
        let t = trace_fast_track(&p, &f, eps, &cube_grid(1, 0.2, 11), &gbars).unwrap();
        assert!(t.v_of_u.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn tangent_spaces() {
        let (p, f, eps, gbars) = setup("P6");
        let model = ManifoldModel::traced("parabola", &p, &f, eps, &gbars[0], 0.2).unwrap();
        assert!(tangent_space(&model).max_principal_angle(&f.u) <= 1e-4);
        let (p, f, eps, gbars) = setup("P4");
        let model = ManifoldModel::traced("plane", &p, &f, eps, &gbars[0], 0.2).unwrap();
        assert_eq!(tangent_space(&model).dim(), 2);
    }

    #[test]
    fn partial_smoothness_true_negative() {
        let (p, f, eps, gbars) = setup("P6");
        let radii = Radii::default();
        let good = ManifoldModel::traced("parabola", &p, &f, eps, &gbars[0], 0.2).unwrap();
        let v = partial_smoothness_battery(&p, &good, &radii).unwrap();
        assert!(v.passed(), "{:?}", v.parts);
        let axis = ManifoldModel::explicit("x1-axis", &p, &f, eps, |_u| DVector::zeros(1), 0.2).unwrap();
        let v = partial_smoothness_battery(&p, &axis, &radii).unwrap();
        assert_eq!(v.failing_parts(), vec!["iv"]);
        let w = v.parts[3].witness.as_ref().unwrap();
        assert!((w["limit"][0]).abs() < 1e-4 && (w["limit"][1] + 1.0).abs() < 1e-12);
    }
}
