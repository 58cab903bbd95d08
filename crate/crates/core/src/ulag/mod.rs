//! The localized U-Lagrangian
//! `L_eps(u; g_v) = min_{||v|| <= eps} f(xbar + U u + V v) - <gbar, V v>`
//! and the claims about it at `u = 0`.

mod solver;

use nalgebra::DVector;

pub use solver::{Cluster, SolverConfig, SolverLog};

use crate::certify::{witness, CertKind, Certificate, Tally};
use crate::error::{Error, Result};
use crate::funcmodel::Problem;
use crate::sampling::BallSampler;
use crate::uvframe::UVFrame;
use solver::InnerObjective;

/// Largest V-dimension the grid solver accepts.
pub const MAX_DIM_V: usize = 3;

/// Central-difference step for gradients of `L_eps`.
pub const FD_STEP: f64 = 1e-5;

/// Tolerance for the lower-bound style certificates.
pub const BOUND_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct ULagEval {
    pub u: DVector<f64>,
    pub gbar: DVector<f64>,
    pub eps: f64,
    pub value: f64,
    pub minimizers: Vec<Cluster>,
    pub solver_log: SolverLog,
}

impl ULagEval {
    /// The representative of the only cluster, or a multi-cluster error.
    pub fn unique_minimizer(&self) -> Result<&DVector<f64>> {
        match self.minimizers.as_slice() {
            [c] => Ok(&c.representative),
            _ => Err(Error::MultiCluster { u: self.u.as_slice().to_vec(), clusters: self.minimizers.len() }),
        }
    }
}

/// `r = sqrt(eps_bar^2 - eps^2)`, the U-radius on which the bounds at 0 hold.
pub fn lower_bound_radius(eps_bar: f64, eps: f64) -> f64 {
    (eps_bar * eps_bar - eps * eps).max(0.0).sqrt()
}

pub fn inner_minimize(
    problem: &Problem,
    frame: &UVFrame,
    u: &DVector<f64>,
    gbar: &DVector<f64>,
    eps: f64,
) -> Result<ULagEval> {
    inner_minimize_with(problem, frame, u, gbar, eps, &frame.solver)
}

pub fn inner_minimize_with(
    problem: &Problem,
    frame: &UVFrame,
    u: &DVector<f64>,
    gbar: &DVector<f64>,
    eps: f64,
    cfg: &SolverConfig,
) -> Result<ULagEval> {
    let p = frame.dim_v();
    if p > MAX_DIM_V {
        return Err(Error::DimensionTooLarge { dim_v: p });
    }
    if u.len() != frame.dim_u() {
        return Err(Error::DimensionMismatch { expected: frame.dim_u(), got: u.len() });
    }
    if gbar.len() != frame.ambient() {
        return Err(Error::DimensionMismatch { expected: frame.ambient(), got: gbar.len() });
    }
    if !(eps > 0.0) {
        return Err(Error::Precondition(format!("eps must be positive, got {eps}")));
    }
    if eps >= problem.known_eps_bar {
        return Err(Error::EpsilonNotBelowRadius { eps, eps_bar: problem.known_eps_bar });
    }
    let base = &frame.origin + frame.u.embed(u);
    if p == 0 {
        let value = problem.eval(&base);
        return Ok(ULagEval {
            u: u.clone(),
            gbar: gbar.clone(),
            eps,
            value,
            minimizers: vec![Cluster { representative: DVector::zeros(0), diameter: 0.0, value, size: 1 }],
            solver_log: SolverLog { grid_n: 0, grid_points: 1, ..Default::default() },
        });
    }
    let obj = InnerObjective { problem, base, vbasis: frame.v.basis(), gv: frame.v_coords(gbar), eps };
    let raw = solver::solve(&obj, cfg);
    Ok(ULagEval {
        u: u.clone(),
        gbar: gbar.clone(),
        eps,
        value: raw.best,
        minimizers: raw.clusters,
        solver_log: raw.log,
    })
}

/// `f(xbar + U u + V v) - <gbar, V v>` at a given `v`.
pub fn inner_objective(
    problem: &Problem,
    frame: &UVFrame,
    u: &DVector<f64>,
    gbar: &DVector<f64>,
    v: &DVector<f64>,
) -> f64 {
    problem.eval(&frame.point(u, v)) - frame.v_coords(gbar).dot(v)
}

/// Central-difference gradient of `u -> L_eps(u; g_v)`.
pub fn fd_gradient(
    problem: &Problem,
    frame: &UVFrame,
    u: &DVector<f64>,
    gbar: &DVector<f64>,
    eps: f64,
    h: f64,
) -> Result<DVector<f64>> {
    let m = frame.dim_u();
    let mut grad = DVector::zeros(m);
    for i in 0..m {
        let mut up = u.clone();
        let mut um = u.clone();
        up[i] += h;
        um[i] -= h;
        let lp = inner_minimize(problem, frame, &up, gbar, eps)?.value;
        let lm = inner_minimize(problem, frame, &um, gbar, eps)?.value;
        grad[i] = (lp - lm) / (2.0 * h);
    }
    Ok(grad)
}

/// Finite-difference `grad L_eps(0; g_v)`; expected to equal `U^T gbar`.
pub fn grad_l_at_zero(problem: &Problem, frame: &UVFrame, gbar: &DVector<f64>, eps: f64) -> Result<DVector<f64>> {
    fd_gradient(problem, frame, &DVector::zeros(frame.dim_u()), gbar, eps, FD_STEP)
}

/// Which inequality on `B_U(0, r)` a bound check verifies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundKind {
    /// `L(u) >= f(xbar) + <g_u, u> - rho/2 ||u||^2`.
    QuadraticLower,
    /// `L(u) >= L(0) + <g_u, u> - rho/2 ||u||^2`.
    ProximalSubgradient,
    /// Lower bound plus `L(u) <= f(xbar + U u)`.
    Sandwich,
}

/// Samples `u = 0` then `samples - 1` seeded points of `B_U(0, r)`.
fn u_samples(m: usize, r: f64, samples: usize, seed: u64) -> Vec<DVector<f64>> {
    let mut out = vec![DVector::zeros(m)];
    if m > 0 && r > 0.0 {
        let mut sampler = BallSampler::new(DVector::zeros(m), r, seed);
        out.extend(sampler.take(samples.saturating_sub(1)));
    }
    out
}

#[allow(clippy::too_many_arguments)]
pub fn bound_check(
    kind: BoundKind,
    problem: &Problem,
    frame: &UVFrame,
    gbar: &DVector<f64>,
    eps: f64,
    rho: f64,
    samples: usize,
    seed: u64,
) -> Result<Certificate> {
    let r = lower_bound_radius(problem.known_eps_bar, eps);
    let cert_kind = match kind {
        BoundKind::QuadraticLower => CertKind::QuadraticLowerBound,
        BoundKind::ProximalSubgradient => CertKind::ProximalSubgradient,
        BoundKind::Sandwich => CertKind::Sandwich,
    };
    let mut tally = Tally::new(cert_kind, BOUND_TOL)
        .param("eps", eps)
        .param("eps_bar", problem.known_eps_bar)
        .param("rho", rho)
        .param("radius", r)
        .param("samples", samples as f64)
        .param("seed", seed as f64);
    let gu = frame.u_coords(gbar);
    let anchor = match kind {
        BoundKind::ProximalSubgradient => inner_minimize(problem, frame, &DVector::zeros(frame.dim_u()), gbar, eps)?.value,
        _ => problem.base_value(),
    };
    let mut min_slack = f64::INFINITY;
    for u in u_samples(frame.dim_u(), r, samples, seed) {
        let l = inner_minimize(problem, frame, &u, gbar, eps)?.value;
        let lower = anchor + gu.dot(&u) - 0.5 * rho * u.norm_squared();
        let mut violation = lower - l;
        min_slack = min_slack.min(l - lower);
        if kind == BoundKind::Sandwich {
            let upper = problem.eval(&(&frame.origin + frame.u.embed(&u)));
            violation = violation.max(l - upper);
        }
        tally.record(violation, || {
            let mut w = witness(&[("u", &u)]);
            w.insert("l_value".into(), vec![l]);
            w.insert("lower".into(), vec![lower]);
            w
        });
    }
    tally.set_param("min_slack", min_slack);
    Ok(tally.finish())
}

/// `L_eps(u) - [f(xbar) + <g_u, u> - rho/2 ||u||^2] >= -1e-8` on sampled `B_U(0, r)`.
pub fn quadratic_lower_bound_check(
    problem: &Problem,
    frame: &UVFrame,
    gbar: &DVector<f64>,
    eps: f64,
    rho: f64,
    samples: usize,
    seed: u64,
) -> Result<Certificate> {
    bound_check(BoundKind::QuadraticLower, problem, frame, gbar, eps, rho, samples, seed)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TiltSample {
    pub s: DVector<f64>,
    pub minimizers: Vec<Cluster>,
}

impl TiltSample {
    pub fn is_single_cluster(&self) -> bool {
        self.minimizers.len() == 1
    }

    pub fn diameter(&self) -> f64 {
        self.minimizers.iter().map(|c| c.diameter).fold(0.0, f64::max)
    }

    /// Whether the only cluster sits at `0` (within `tol`).
    pub fn is_zero(&self, tol: f64) -> bool {
        self.is_single_cluster() && self.minimizers[0].representative.norm() <= tol
    }
}

/// Whether `g_v + s` lies in the V-coordinate image of `D_eps f`.
pub fn tilt_admissible(frame: &UVFrame, gbar: &DVector<f64>, eps: f64, s: &DVector<f64>) -> Result<bool> {
    let ri_v = frame.eps_ri(eps)?.coords_in(&frame.v);
    Ok(ri_v.contains(&(frame.v_coords(gbar) + s), 1e-10))
}

/// `M(s) = argmin_{||v|| <= eps} f(xbar + V v) - <gbar + V s, V v>`.
pub fn tilt_map(
    problem: &Problem,
    frame: &UVFrame,
    gbar: &DVector<f64>,
    eps: f64,
    s: &DVector<f64>,
) -> Result<TiltSample> {
    if s.len() != frame.dim_v() {
        return Err(Error::DimensionMismatch { expected: frame.dim_v(), got: s.len() });
    }
    if !tilt_admissible(frame, gbar, eps, s)? {
        return Err(Error::Precondition(format!(
            "tilt {:?} moves g_v outside the V-image of D_eps f",
            s.as_slice()
        )));
    }
    let tilted = gbar + frame.v.embed(s);
    let eval = inner_minimize(problem, frame, &DVector::zeros(frame.dim_u()), &tilted, eps)?;
    Ok(TiltSample { s: s.clone(), minimizers: eval.minimizers })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkCheck {
    pub u: DVector<f64>,
    /// Finite-difference gradient of `L_eps` at `u`.
    pub s: DVector<f64>,
    /// The minimizer achieving the smallest membership distance.
    pub vhat: DVector<f64>,
    /// Distance from `(s, 0)` to `{(g_u, g_v - gbar_v) : g in df(x)}`.
    pub distance: f64,
    pub passed: bool,
}

/// Membership tolerance for the marginal-subgradient link.
pub const LINK_TOL: f64 = 1e-5;

/// Checks that `(grad L_eps(u), 0)` lies in `{(g_u, g_v - gbar_v)}` over
/// `df` at some minimizer `xbar + U u + V vhat`.
pub fn marginal_subgradient_link(
    problem: &Problem,
    frame: &UVFrame,
    gbar: &DVector<f64>,
    eps: f64,
    u: &DVector<f64>,
) -> Result<LinkCheck> {
    let s = fd_gradient(problem, frame, u, gbar, eps, FD_STEP)?;
    let eval = inner_minimize(problem, frame, u, gbar, eps)?;
    let gv_bar = frame.v_coords(gbar);
    let m = frame.dim_u();
    let p = frame.dim_v();
    let mut target = DVector::zeros(m + p);
    target.rows_mut(0, m).copy_from(&s);
    let mut best: Option<(DVector<f64>, f64)> = None;
    for c in &eval.minimizers {
        let x = frame.point(u, &c.representative);
        let sub = problem.limiting_subdifferential(&x)?;
        let gens = sub
            .polytope
            .generators()
            .iter()
            .map(|g| {
                let mut z = DVector::zeros(m + p);
                z.rows_mut(0, m).copy_from(&frame.u_coords(g));
                z.rows_mut(m, p).copy_from(&(frame.v_coords(g) - &gv_bar));
                z
            })
            .collect();
        let d = crate::polytope::Polytope::from_generators(gens).distance(&target);
        if best.as_ref().is_none_or(|b| d < b.1) {
            best = Some((c.representative.clone(), d));
        }
    }
    let (vhat, distance) = best.expect("inner_minimize returns at least one cluster");
    Ok(LinkCheck { u: u.clone(), s, vhat, distance, passed: distance <= LINK_TOL })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::uvframe::build_frame;

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(xs)
    }

    fn setup(name: &str) -> (Problem, UVFrame) {
        let p = catalog::problem(name).unwrap();
        let f = build_frame(&p, None).unwrap();
        (p, f)
    }

    #[test]
    fn abs_quad_value_off_base() {
        let (p, f) = setup("P1");
        let e = inner_minimize(&p, &f, &v(&[0.3]), &v(&[0.0, 0.0]), 0.5).unwrap();
        assert!((e.value - 0.09).abs() < 1e-12);
        assert_eq!(e.minimizers.len(), 1);
        assert!(e.minimizers[0].representative.norm() < 1e-12);
    }

    #[test]
    fn parabola_minimizer_is_u_squared() {
        let (p, f) = setup("P6");
        let e = inner_minimize(&p, &f, &v(&[0.1]), &v(&[0.0, 0.0]), 0.5).unwrap();
        assert!(e.value.abs() < 1e-12);
        let w = e.unique_minimizer().unwrap();
        assert!((w[0] - 0.01).abs() < 1e-12);
    }

    #[test]
    fn base_point_identity_on_catalog() {
        for p in catalog::all() {
            let f = build_frame(&p, None).unwrap();
            let eps = f.default_eps().unwrap();
            let g = f.default_gbar(eps).unwrap();
            let e = inner_minimize(&p, &f, &DVector::zeros(f.dim_u()), &g, eps).unwrap();
            assert!((e.value - p.base_value()).abs() <= 1e-9, "{}", p.name);
            assert_eq!(e.minimizers.len(), 1, "{}", p.name);
            assert!(e.minimizers[0].representative.norm() <= 1e-9);
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        let (p, f) = setup("P1");
        let g = v(&[0.0, 0.0]);
        assert!(matches!(
            inner_minimize(&p, &f, &v(&[0.0]), &g, 1.0),
            Err(Error::EpsilonNotBelowRadius { .. })
        ));
        assert!(matches!(
            inner_minimize(&p, &f, &v(&[0.0, 1.0]), &g, 0.5),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn gradient_at_zero_examples() {
        let (p, f) = setup("P1");
        assert!(grad_l_at_zero(&p, &f, &v(&[0.0, 0.0]), 0.5).unwrap().norm() < 1e-8);
        let (p, f) = setup("P4");
        let g = grad_l_at_zero(&p, &f, &v(&[2.0, 0.0]), 0.5).unwrap();
        let expected = f.u_coords(&v(&[2.0, 0.0]));
        assert!((g - expected).norm() < 1e-8);
        let (p, f) = setup("P5");
        assert!(grad_l_at_zero(&p, &f, &v(&[0.0, 0.5]), 0.75).unwrap().norm() < 1e-8);
    }

    #[test]
    fn radius_follows_the_pythagorean_form() {
        assert!((lower_bound_radius(1.0, 0.6) - 0.8).abs() < 1e-15);
        assert_eq!(lower_bound_radius(1.0, 1.0), 0.0);
    }

    #[test]
    fn lower_bound_equality_case() {
        let (p, f) = setup("P2");
        let c = quadratic_lower_bound_check(&p, &f, &v(&[0.0, 0.0]), 0.5, 1.0, 200, 0).unwrap();
        assert!(c.passed());
        assert!(c.param("min_slack").unwrap().abs() <= 1e-8);
        assert!(c.max_violation.abs() <= 1e-8);
    }

    #[test]
    fn lower_bound_strict_case() {
        let (p, f) = setup("P1");
        let c = quadratic_lower_bound_check(&p, &f, &v(&[0.0, 0.0]), 0.5, 0.1, 200, 0).unwrap();
        assert!(c.passed());
        assert_eq!(c.param("min_slack").unwrap(), 0.0);
    }

    #[test]
    fn sandwich_and_proximal_bounds_hold() {
        for name in ["P1", "P2", "P5", "P6"] {
            let (p, f) = setup(name);
            let eps = f.default_eps().unwrap();
            let g = f.default_gbar(eps).unwrap();
            for kind in [BoundKind::ProximalSubgradient, BoundKind::Sandwich] {
                let c = bound_check(kind, &p, &f, &g, eps, p.bound_rho(), 100, 3).unwrap();
                assert!(c.passed(), "{name} {kind:?}: {:?}", c.witness);
            }
        }
    }

    #[test]
    fn tilt_examples() {
        let (p, f) = setup("P1");
        let t = tilt_map(&p, &f, &v(&[0.0, 0.0]), 0.5, &v(&[0.3])).unwrap();
        assert!(t.is_zero(1e-9));
        let (p, f) = setup("P5");
        let t = tilt_map(&p, &f, &v(&[0.0, 0.5]), 0.5, &v(&[0.9])).unwrap();
        assert!(t.is_zero(1e-9));
        assert!(matches!(
            tilt_map(&p, &f, &v(&[0.0, 0.5]), 0.5, &v(&[1.2])),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn marginal_link_examples() {
        let (p, f) = setup("P6");
        let l = marginal_subgradient_link(&p, &f, &v(&[0.0, 0.0]), 0.5, &v(&[0.1])).unwrap();
        assert!(l.passed, "{l:?}");
        assert!((l.vhat[0] - 0.01).abs() < 1e-9);
        let (p, f) = setup("P1");
        let l = marginal_subgradient_link(&p, &f, &v(&[0.0, 0.0]), 0.5, &v(&[0.3])).unwrap();
        assert!(l.passed);
        assert!((l.s[0] - 0.6).abs() < 1e-6);
    }
}
