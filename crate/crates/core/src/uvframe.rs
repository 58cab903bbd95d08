//! The U/V splitting of `R^n` at the base point and its coordinate maps.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::funcmodel::Problem;
use crate::polytope::{self, NormalCone, Polytope, Subspace};
use crate::sampling::{unit_directions, Halton};
use crate::ulag::SolverConfig;

/// Principal-angle tolerance for subspace identities.
pub const SUBSPACE_TOL: f64 = 1e-8;

/// `V = span(df(xbar) - gtilde)`, `U = V^perp`, with orthonormal bases.
#[derive(Debug, Clone)]
pub struct UVFrame {
    pub u: Subspace,
    pub v: Subspace,
    pub origin: DVector<f64>,
    pub subdiff: Polytope,
    pub gtilde: DVector<f64>,
    /// Inner-solver settings used by every U-Lagrangian evaluation on this frame.
    pub solver: SolverConfig,
}

impl UVFrame {
    pub fn with_solver(mut self, solver: SolverConfig) -> Self {
        self.solver = solver;
        self
    }

    pub fn dim_u(&self) -> usize {
        self.u.dim()
    }

    pub fn dim_v(&self) -> usize {
        self.v.dim()
    }

    pub fn ambient(&self) -> usize {
        self.origin.len()
    }

    /// `x_u = Ubar^+ x`.
    pub fn u_coords(&self, x: &DVector<f64>) -> DVector<f64> {
        self.u.coords(x)
    }

    /// `x_v = Vbar^+ x`.
    pub fn v_coords(&self, x: &DVector<f64>) -> DVector<f64> {
        self.v.coords(x)
    }

    /// `Ubar x_u + Vbar x_v`.
    pub fn compose(&self, xu: &DVector<f64>, xv: &DVector<f64>) -> DVector<f64> {
        self.u.embed(xu) + self.v.embed(xv)
    }

    /// `xbar + Ubar u + Vbar v`.
    pub fn point(&self, u: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        &self.origin + self.compose(u, v)
    }

    pub fn reconstruction_error(&self, x: &DVector<f64>) -> f64 {
        (self.compose(&self.u_coords(x), &self.v_coords(x)) - x).norm()
    }

    /// Largest eps with a nonempty epsilon-relative interior (`INFINITY` when `V = {0}`).
    pub fn max_feasible_eps(&self) -> Result<f64> {
        polytope::max_feasible_eps(&self.subdiff, &self.v)
    }

    /// Half the largest feasible eps, or `0.5` when every eps is feasible.
    pub fn default_eps(&self) -> Result<f64> {
        let m = self.max_feasible_eps()?;
        Ok(if m.is_finite() { 0.5 * m } else { 0.5 })
    }

    /// The epsilon-relative interior `D_eps f` of the subdifferential.
    pub fn eps_ri(&self, eps: f64) -> Result<Polytope> {
        polytope::epsilon_relative_interior(&self.subdiff, &self.v, eps)
    }

    /// Centroid of the vertices of `D_eps f`.
    pub fn default_gbar(&self, eps: f64) -> Result<DVector<f64>> {
        Ok(self.eps_ri(eps)?.centroid())
    }

    /// `count` members of `D_eps f`: the centroid, then points pulled 80% of the
    /// way toward each vertex, then seeded convex combinations.
    pub fn sample_gbars(&self, eps: f64, count: usize, seed: u64) -> Result<Vec<DVector<f64>>> {
        let ri = self.eps_ri(eps)?;
        let c = ri.centroid();
        let mut out = vec![c.clone()];
        for g in ri.generators() {
            if out.len() >= count {
                break;
            }
            let p = &c + (g - &c) * 0.8;
            if !out.iter().any(|q| (q - &p).norm() < 1e-12) {
                out.push(p);
            }
        }
        let k = ri.generators().len();
        let mut halton = Halton::new(k.max(1), seed);
        while out.len() < count {
            let w = crate::sampling::simplex_weights(&halton.next_point(), k);
            let p = ri
                .generators()
                .iter()
                .zip(&w)
                .fold(DVector::zeros(self.ambient()), |acc, (g, wi)| acc + g * *wi);
            out.push(p);
        }
        Ok(out)
    }
}

/// Builds the frame at the problem's base point; `gtilde` defaults to the first generator.
pub fn build_frame(problem: &Problem, gtilde: Option<&DVector<f64>>) -> Result<UVFrame> {
    let sub = problem.limiting_subdifferential(&problem.base_point)?;
    let subdiff = sub.polytope;
    let gtilde = gtilde.cloned().unwrap_or_else(|| subdiff.generators()[0].clone());
    let v = polytope::span_of_differences(&subdiff, &gtilde)?;
    let u = v.complement();
    Ok(UVFrame { u, v, origin: problem.base_point.clone(), subdiff, gtilde, solver: SolverConfig::default() })
}

fn width(problem: &Problem, w: &DVector<f64>) -> Result<f64> {
    let x = &problem.base_point;
    Ok(problem.directional_derivative(x, w)? + problem.directional_derivative(x, &-w)?)
}

/// `U' = {w : f'(xbar; -w) = -f'(xbar; w)}`, cross-checked against the frame's
/// `U` and against the normal cone of `df(xbar)` at a point of `D_eps f`.
///
/// `U'` is computed from all pairwise generator differences (sup equals inf of
/// `<w, g>` exactly when `w` is orthogonal to every difference) and then
/// tested through the directional-derivative oracle on its basis and on
/// sampled directions.
pub fn u_prime_crosscheck(problem: &Problem) -> Result<Subspace> {
    let frame = build_frame(problem, None)?;
    let gens = frame.subdiff.generators();
    let n = problem.dim;
    let mut diffs = Vec::new();
    for i in 0..gens.len() {
        for j in (i + 1)..gens.len() {
            diffs.push(&gens[i] - &gens[j]);
        }
    }
    let u_prime = Subspace::span(n, &diffs).complement();

    let mut probes: Vec<DVector<f64>> = u_prime.basis().column_iter().map(|c| c.into_owned()).collect();
    for d in unit_directions(u_prime.dim(), 16, 5) {
        probes.push(u_prime.embed(&d));
    }
    for w in &probes {
        let gap = width(problem, w)?;
        if gap.abs() > 1e-10 {
            return Err(Error::InvariantViolation {
                what: format!("direction {:?} in U' has width {gap:e}", w.as_slice()),
                subspaces: vec![u_prime.columns()],
            });
        }
    }
    let ortho = u_prime.complement();
    for d in unit_directions(ortho.dim(), 16, 6) {
        let w = ortho.embed(&d);
        let gap = width(problem, &w)?;
        if gap <= 1e-10 {
            return Err(Error::InvariantViolation {
                what: format!("direction {:?} outside U' has zero width", w.as_slice()),
                subspaces: vec![u_prime.columns()],
            });
        }
    }

    let eps = frame.default_eps()?;
    let g0 = frame.default_gbar(eps)?;
    let normal = match polytope::normal_cone(&frame.subdiff, &g0)? {
        NormalCone::Subspace(s) => s,
        NormalCone::Cone { .. } => {
            return Err(Error::InvariantViolation {
                what: "normal cone at a point of D_eps f is not a subspace".into(),
                subspaces: vec![frame.u.columns(), u_prime.columns()],
            })
        }
    };
    let a1 = frame.u.max_principal_angle(&u_prime);
    let a2 = frame.u.max_principal_angle(&normal);
    let a3 = u_prime.max_principal_angle(&normal);
    if a1.max(a2).max(a3) > SUBSPACE_TOL {
        return Err(Error::InvariantViolation {
            what: format!("U, U' and the normal cone disagree (angles {a1:e}, {a2:e}, {a3:e})"),
            subspaces: vec![frame.u.columns(), u_prime.columns(), normal.columns()],
        });
    }
    Ok(u_prime)
}

/// `max ||P_U g - P_U g'||` over pairs of generators of `df(xbar)`.
pub fn gu_constancy(_problem: &Problem, frame: &UVFrame) -> f64 {
    let proj: Vec<DVector<f64>> = frame.subdiff.generators().iter().map(|g| frame.u.project(g)).collect();
    let mut spread: f64 = 0.0;
    for i in 0..proj.len() {
        for j in (i + 1)..proj.len() {
            spread = spread.max((&proj[i] - &proj[j]).norm());
        }
    }
    spread
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(xs)
    }

    fn axis(i: usize) -> Subspace {
        let mut e = DVector::zeros(2);
        e[i] = 1.0;
        Subspace::span(2, &[e])
    }

    #[test]
    fn abs_quad_frame() {
        let f = build_frame(&catalog::problem("P1").unwrap(), None).unwrap();
        assert!(f.u.max_principal_angle(&axis(0)) < 1e-14);
        assert!(f.v.max_principal_angle(&axis(1)) < 1e-14);
    }

    #[test]
    fn smooth_frame_has_no_v() {
        let f = build_frame(&catalog::problem("P4").unwrap(), None).unwrap();
        assert_eq!(f.dim_u(), 2);
        assert_eq!(f.dim_v(), 0);
    }

    #[test]
    fn l1_frame_has_no_u() {
        let f = build_frame(&catalog::problem("P3").unwrap(), None).unwrap();
        assert_eq!(f.dim_u(), 0);
        assert_eq!(f.dim_v(), 2);
    }

    #[test]
    fn frame_invariants_hold_on_catalog() {
        for p in catalog::all() {
            let f = build_frame(&p, None).unwrap();
            assert_eq!(f.dim_u() + f.dim_v(), p.dim);
            let cross = f.u.basis().transpose() * f.v.basis();
            assert!(cross.iter().all(|c| c.abs() <= 1e-12));
            for x in [v(&[0.3, -1.7]), v(&[2.0, 0.5])] {
                assert!(f.reconstruction_error(&x) <= 1e-12);
            }
        }
    }

    #[test]
    fn u_prime_examples() {
        let u1 = u_prime_crosscheck(&catalog::problem("P1").unwrap()).unwrap();
        assert!(u1.max_principal_angle(&axis(0)) < 1e-14);
        assert_eq!(u_prime_crosscheck(&catalog::problem("P3").unwrap()).unwrap().dim(), 0);
        assert_eq!(u_prime_crosscheck(&catalog::problem("P4").unwrap()).unwrap().dim(), 2);
    }

    #[test]
    fn gu_spread_examples() {
        for name in ["P1", "P5", "P4"] {
            let p = catalog::problem(name).unwrap();
            let f = build_frame(&p, None).unwrap();
            assert_eq!(gu_constancy(&p, &f), 0.0, "{name}");
        }
    }

    #[test]
    fn default_localization_values() {
        let f5 = build_frame(&catalog::problem("P5").unwrap(), None).unwrap();
        assert!((f5.max_feasible_eps().unwrap() - 1.5).abs() < 1e-12);
        let eps = f5.default_eps().unwrap();
        assert!((eps - 0.75).abs() < 1e-12);
        assert!((f5.default_gbar(eps).unwrap() - v(&[0.0, 0.5])).norm() < 1e-12);
        let f4 = build_frame(&catalog::problem("P4").unwrap(), None).unwrap();
        assert_eq!(f4.default_eps().unwrap(), 0.5);
        assert_eq!(f4.default_gbar(0.5).unwrap(), v(&[2.0, 0.0]));
    }

    #[test]
    fn gbar_samples_lie_in_eps_ri() {
        for p in catalog::all() {
            let f = build_frame(&p, None).unwrap();
            let eps = f.default_eps().unwrap();
            let ri = f.eps_ri(eps).unwrap();
            for g in f.sample_gbars(eps, 6, 0).unwrap() {
                assert!(ri.contains(&g, 1e-12), "{}", p.name);
            }
        }
    }
}
