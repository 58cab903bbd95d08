//! Structured nonsmooth functions with exact value, directional-derivative and
//! limiting-subdifferential oracles.

pub mod catalog;
mod smooth;

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::polytope::{Facet, Polytope};

pub use smooth::{Quadratic, SmoothPiece};

/// Pieces whose values are within this gap of the maximum count as active.
pub const ACTIVE_TOL: f64 = 1e-10;

/// Largest ambient dimension handled by the oracles.
pub const MAX_DIM: usize = 8;

/// Polyhedral convex set `{x : a_i . x <= b_i}`.
#[derive(Debug, Clone)]
pub struct ConvexSet {
    pub halfspaces: Vec<Facet>,
}

impl ConvexSet {
    pub fn contains(&self, x: &DVector<f64>) -> bool {
        self.halfspaces.iter().all(|h| h.normal.dot(x) <= h.offset + 1e-12)
    }

    fn min_slack(&self, x: &DVector<f64>) -> f64 {
        self.halfspaces
            .iter()
            .map(|h| h.offset - h.normal.dot(x))
            .fold(f64::INFINITY, f64::min)
    }
}

/// How the function is assembled from smooth pieces.
#[derive(Debug, Clone)]
pub enum Structure {
    /// `f(x) = max_i f_i(x)`.
    FiniteMax(Vec<Arc<dyn SmoothPiece>>),
    /// `f(x) = s(x) + sum_{i in coords} |x_i|`.
    SmoothPlusAbs { smooth: Arc<dyn SmoothPiece>, abs_coords: Vec<usize> },
    /// `f(x) = s(x) + indicator_C(x)`.
    SmoothPlusIndicator { smooth: Arc<dyn SmoothPiece>, set: ConvexSet },
}

/// A structured function together with its base point and prox-regularity data.
#[derive(Debug, Clone)]
pub struct Problem {
    pub name: String,
    pub description: String,
    pub dim: usize,
    pub structure: Structure,
    pub base_point: DVector<f64>,
    /// Radius of the prox-regularity window.
    pub known_eps_bar: f64,
    /// Prox-regularity modulus on that window.
    pub known_rho: f64,
    /// Whether `known_rho` is the smallest modulus that works.
    pub rho_is_sharp: bool,
}

/// Limiting subdifferential at a point.
#[derive(Debug, Clone)]
pub struct SubdiffResult {
    pub point: DVector<f64>,
    pub polytope: Polytope,
    pub regular_equals_limiting: bool,
}

impl Problem {
    pub fn new(
        name: impl Into<String>,
        description: impl Into<String>,
        structure: Structure,
        base_point: DVector<f64>,
        known_eps_bar: f64,
        known_rho: f64,
        rho_is_sharp: bool,
    ) -> Result<Self> {
        let dim = base_point.len();
        let p = Self {
            name: name.into(),
            description: description.into(),
            dim,
            structure,
            base_point,
            known_eps_bar,
            known_rho,
            rho_is_sharp,
        };
        p.validate()?;
        Ok(p)
    }

    fn validate(&self) -> Result<()> {
        if self.dim == 0 || self.dim > MAX_DIM {
            return Err(Error::InvalidProblem(format!("dimension {} outside 1..={MAX_DIM}", self.dim)));
        }
        if !(self.known_eps_bar > 0.0) {
            return Err(Error::InvalidProblem("prox-regularity radius must be positive".into()));
        }
        if !(0.0..=2.0).contains(&self.known_rho) {
            return Err(Error::InvalidProblem(format!("modulus {} outside [0, 2]", self.known_rho)));
        }
        if let Structure::SmoothPlusAbs { abs_coords, .. } = &self.structure {
            if abs_coords.iter().any(|&i| i >= self.dim) {
                return Err(Error::InvalidProblem("absolute-value coordinate out of range".into()));
            }
        }
        if !self.eval(&self.base_point).is_finite() {
            return Err(Error::InvalidProblem("value at the base point is not finite".into()));
        }
        Ok(())
    }

    /// Modulus to use where strict positivity is required: convex entries carry
    /// zero and are given `0.1` instead.
    pub fn bound_rho(&self) -> f64 {
        if self.known_rho > 0.0 { self.known_rho } else { 0.1 }
    }

    pub fn base_value(&self) -> f64 {
        self.eval(&self.base_point)
    }

    /// Function value; `+inf` outside the domain.
    pub fn eval(&self, x: &DVector<f64>) -> f64 {
        match &self.structure {
            Structure::FiniteMax(pieces) => {
                pieces.iter().map(|p| p.value(x)).fold(f64::NEG_INFINITY, f64::max)
            }
            Structure::SmoothPlusAbs { smooth, abs_coords } => {
                smooth.value(x) + abs_coords.iter().map(|&i| x[i].abs()).sum::<f64>()
            }
            Structure::SmoothPlusIndicator { smooth, set } => {
                if set.contains(x) { smooth.value(x) } else { f64::INFINITY }
            }
        }
    }

    fn check_dim(&self, x: &DVector<f64>) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: x.len() });
        }
        Ok(())
    }

    fn active_pieces(pieces: &[Arc<dyn SmoothPiece>], x: &DVector<f64>, tol: f64) -> Vec<usize> {
        let values: Vec<f64> = pieces.iter().map(|p| p.value(x)).collect();
        let top = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        (0..values.len()).filter(|&i| top - values[i] <= tol).collect()
    }

    /// Limiting subdifferential via the max rule or the sum rule.
    pub fn limiting_subdifferential(&self, x: &DVector<f64>) -> Result<SubdiffResult> {
        self.check_dim(x)?;
        let polytope = match &self.structure {
            Structure::FiniteMax(pieces) => {
                let active = Self::active_pieces(pieces, x, ACTIVE_TOL);
                let grads: Vec<DVector<f64>> = active.iter().map(|&i| pieces[i].gradient(x)).collect();
                Polytope::with_hull_facets(grads)?
            }
            Structure::SmoothPlusAbs { smooth, abs_coords } => {
                abs_box(smooth.gradient(x), abs_coords, x, ACTIVE_TOL)?
            }
            Structure::SmoothPlusIndicator { smooth, set } => {
                if !set.contains(x) {
                    return Err(Error::OracleUnavailable {
                        point: x.as_slice().to_vec(),
                        reason: "point outside the domain".into(),
                    });
                }
                if set.min_slack(x) <= ACTIVE_TOL {
                    return Err(Error::OracleUnavailable {
                        point: x.as_slice().to_vec(),
                        reason: "boundary of the indicator set; the normal cone is not a polytope".into(),
                    });
                }
                Polytope::singleton(smooth.gradient(x))
            }
        };
        Ok(SubdiffResult { point: x.clone(), polytope, regular_equals_limiting: true })
    }

    /// Regular (Frechet) subdifferential: subgradients `g` with
    /// `<g, w> <= f'(x; w)` for every direction.
    ///
    /// For a max of smooth pieces `f'(x; w) = max_{i active} <grad f_i, w>`,
    /// and `|t|` contributes `|w_i|` at a kink, so the set is the hull of the
    /// vectors attaining those maxima.
    pub fn regular_subdifferential(&self, x: &DVector<f64>) -> Result<Polytope> {
        self.check_dim(x)?;
        match &self.structure {
            Structure::FiniteMax(pieces) => {
                let values: Vec<f64> = pieces.iter().map(|p| p.value(x)).collect();
                let top = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let grads: Vec<DVector<f64>> = pieces
                    .iter()
                    .zip(&values)
                    .filter(|(_, &v)| top - v <= ACTIVE_TOL)
                    .map(|(p, _)| p.gradient(x))
                    .collect();
                Polytope::with_hull_facets(grads)
            }
            Structure::SmoothPlusAbs { smooth, abs_coords } => {
                let g = smooth.gradient(x);
                let mut gens = vec![g];
                for &i in abs_coords {
                    if x[i].abs() <= ACTIVE_TOL {
                        gens = gens
                            .into_iter()
                            .flat_map(|h| {
                                let mut lo = h.clone();
                                let mut hi = h;
                                lo[i] -= 1.0;
                                hi[i] += 1.0;
                                [lo, hi]
                            })
                            .collect();
                    } else {
                        for h in gens.iter_mut() {
                            h[i] += x[i].signum();
                        }
                    }
                }
                Polytope::with_hull_facets(gens)
            }
            Structure::SmoothPlusIndicator { .. } => {
                // Same availability as the limiting oracle: interior points only.
                self.limiting_subdifferential(x).map(|r| r.polytope)
            }
        }
    }

    /// `f'(x; w) = max_{g in df(x)} <g, w>` for regular points.
    pub fn directional_derivative(&self, x: &DVector<f64>, w: &DVector<f64>) -> Result<f64> {
        if w.iter().all(|&t| t == 0.0) {
            return Ok(0.0);
        }
        let sub = self.limiting_subdifferential(x)?;
        Ok(sub.polytope.support(w))
    }

    /// Moves `base + basis z` onto the stratum of pieces that are nearly active
    /// (within `tol`) at that point, by Gauss-Newton steps in `z`.
    ///
    /// Returns `None` when no kink is within reach or the solve fails; callers
    /// then keep the unsnapped point.
    pub fn snap_to_stratum(
        &self,
        base: &DVector<f64>,
        basis: &DMatrix<f64>,
        z: &DVector<f64>,
        tol: f64,
    ) -> Option<DVector<f64>> {
        if basis.ncols() == 0 {
            return None;
        }
        let point = |z: &DVector<f64>| base + basis * z;
        let x0 = point(z);
        // Constraint rows: (value, gradient) pairs that must vanish.
        type Constraints = Box<dyn Fn(&DVector<f64>) -> Vec<(f64, DVector<f64>)>>;
        let constraints: Constraints = match &self.structure {
            Structure::FiniteMax(pieces) => {
                let active = Self::active_pieces(pieces, &x0, tol);
                if active.len() < 2 {
                    return None;
                }
                let pieces = pieces.clone();
                Box::new(move |x: &DVector<f64>| {
                    let lead = &pieces[active[0]];
                    let (f0, g0) = (lead.value(x), lead.gradient(x));
                    active[1..]
                        .iter()
                        .map(|&i| (pieces[i].value(x) - f0, pieces[i].gradient(x) - &g0))
                        .collect()
                })
            }
            Structure::SmoothPlusAbs { abs_coords, .. } => {
                let near: Vec<usize> =
                    abs_coords.iter().cloned().filter(|&i| x0[i].abs() <= tol).collect();
                if near.is_empty() {
                    return None;
                }
                let n = self.dim;
                Box::new(move |x: &DVector<f64>| {
                    near.iter()
                        .map(|&i| {
                            let mut e = DVector::zeros(n);
                            e[i] = 1.0;
                            (x[i], e)
                        })
                        .collect()
                })
            }
            Structure::SmoothPlusIndicator { .. } => return None,
        };
        let mut z = z.clone();
        for _ in 0..30 {
            let x = point(&z);
            let rows = constraints(&x);
            let residual = DVector::from_iterator(rows.len(), rows.iter().map(|r| r.0));
            if residual.amax() <= 1e-15 {
                break;
            }
            let jac = DMatrix::from_fn(rows.len(), basis.ncols(), |r, c| {
                rows[r].1.dot(&basis.column(c))
            });
            let step = jac.svd(true, true).solve(&residual, 1e-12).ok()?;
            z -= step;
        }
        let x = point(&z);
        let residual = constraints(&x).iter().map(|r| r.0.abs()).fold(0.0, f64::max);
        (residual <= 1e-13 && z.iter().all(|t| t.is_finite())).then_some(z)
    }
}

/// `grad + box` over active absolute-value coordinates, with both descriptions.
fn abs_box(grad: DVector<f64>, abs_coords: &[usize], x: &DVector<f64>, tol: f64) -> Result<Polytope> {
    let n = grad.len();
    let mut center = grad;
    let mut active: Vec<usize> = Vec::new();
    for &i in abs_coords {
        if x[i].abs() <= tol {
            active.push(i);
        } else {
            center[i] += x[i].signum();
        }
    }
    let mut gens = vec![center.clone()];
    for &i in &active {
        gens = gens
            .into_iter()
            .flat_map(|h| {
                let mut lo = h.clone();
                let mut hi = h;
                lo[i] -= 1.0;
                hi[i] += 1.0;
                [lo, hi]
            })
            .collect();
    }
    let mut facets = Vec::with_capacity(2 * n);
    for j in 0..n {
        let mut e = DVector::zeros(n);
        e[j] = 1.0;
        let half = if active.contains(&j) { 1.0 } else { 0.0 };
        facets.push(Facet { normal: e.clone(), offset: center[j] + half });
        facets.push(Facet { normal: -e, offset: -center[j] + half });
    }
    Polytope::with_facets(gens, facets)
}

/// `f` restricted to an affine slice `base + basis w`.
#[derive(Debug, Clone)]
pub struct Restriction<'a> {
    pub problem: &'a Problem,
    pub base: DVector<f64>,
    pub basis: DMatrix<f64>,
}

impl<'a> Restriction<'a> {
    pub fn new(problem: &'a Problem, base: DVector<f64>, basis: DMatrix<f64>) -> Self {
        Self { problem, base, basis }
    }

    pub fn point(&self, w: &DVector<f64>) -> DVector<f64> {
        &self.base + &self.basis * w
    }

    pub fn eval(&self, w: &DVector<f64>) -> f64 {
        self.problem.eval(&self.point(w))
    }

    /// `B^T df(base + B w)`, the chain rule for regular functions.
    pub fn subdifferential(&self, w: &DVector<f64>) -> Result<Polytope> {
        let sub = self.problem.limiting_subdifferential(&self.point(w))?;
        let gens = sub.polytope.generators().iter().map(|g| self.basis.transpose() * g).collect();
        Ok(Polytope::from_generators(gens))
    }
}
