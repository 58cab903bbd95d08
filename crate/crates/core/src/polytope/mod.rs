//! Geometry of convex subdifferential polytopes: spans, epsilon-relative
//! interiors, normal cones and projections.

pub mod hull;
mod subspace;

use nalgebra::DVector;

use crate::error::{Error, Result};

pub use subspace::{Subspace, RANK_RTOL};

/// Membership slack for points that should lie in a polytope.
pub const MEMBERSHIP_TOL: f64 = 1e-10;

/// Half-space `normal . g <= offset`.
#[derive(Debug, Clone, PartialEq)]
pub struct Facet {
    pub normal: DVector<f64>,
    pub offset: f64,
}

/// A convex polytope given by generators, optionally paired with facets.
#[derive(Debug, Clone)]
pub struct Polytope {
    generators: Vec<DVector<f64>>,
    facets: Option<Vec<Facet>>,
}

impl Polytope {
    /// Polytope from generators alone. Panics on an empty list.
    pub fn from_generators(generators: Vec<DVector<f64>>) -> Self {
        assert!(!generators.is_empty(), "a polytope needs at least one generator");
        let mut unique: Vec<DVector<f64>> = Vec::with_capacity(generators.len());
        for g in generators {
            if !unique.iter().any(|u| (u - &g).norm() <= 1e-14) {
                unique.push(g);
            }
        }
        Self { generators: unique, facets: None }
    }

    /// Polytope from generators, with facets derived from the convex hull.
    pub fn with_hull_facets(generators: Vec<DVector<f64>>) -> Result<Self> {
        let mut p = Self::from_generators(generators);
        p.facets = Some(hull::facets_of_hull(&p.generators)?);
        Ok(p)
    }

    /// Polytope with both descriptions supplied by the caller.
    pub fn with_facets(generators: Vec<DVector<f64>>, facets: Vec<Facet>) -> Result<Self> {
        let p = Self::from_generators(generators);
        for g in &p.generators {
            for f in &facets {
                if f.normal.dot(g) > f.offset + 1e-12 {
                    return Err(Error::Precondition(format!(
                        "generator {:?} violates facet {:?} <= {}",
                        g.as_slice(),
                        f.normal.as_slice(),
                        f.offset
                    )));
                }
            }
        }
        Ok(Self { facets: Some(facets), ..p })
    }

    pub fn singleton(point: DVector<f64>) -> Self {
        Self::with_hull_facets(vec![point]).expect("a point always has a hull")
    }

    pub fn dim(&self) -> usize {
        self.generators[0].len()
    }

    pub fn generators(&self) -> &[DVector<f64>] {
        &self.generators
    }

    pub fn facets(&self) -> Option<&[Facet]> {
        self.facets.as_deref()
    }

    /// Facets, computing them from the hull when they were not supplied.
    pub fn facets_or_hull(&self) -> Result<Vec<Facet>> {
        match &self.facets {
            Some(f) => Ok(f.clone()),
            None => hull::facets_of_hull(&self.generators),
        }
    }

    pub fn is_singleton(&self) -> bool {
        self.generators.len() == 1
    }

    pub fn centroid(&self) -> DVector<f64> {
        let n = self.generators.len() as f64;
        self.generators.iter().fold(DVector::zeros(self.dim()), |acc, g| acc + g) / n
    }

    /// Support function `max_g <g, w>`.
    pub fn support(&self, w: &DVector<f64>) -> f64 {
        self.generators.iter().map(|g| g.dot(w)).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Nearest point of the convex hull to `x`.
    ///
    /// Enumerates subsets of generators, projects onto each affine hull and
    /// keeps the closest projection with nonnegative barycentric weights.
    /// Exact for the small generator counts seen in subdifferentials.
    pub fn nearest_point(&self, x: &DVector<f64>) -> (DVector<f64>, Vec<f64>) {
        let k = self.generators.len();
        assert!(k <= 16, "nearest_point supports at most 16 generators");
        let mut best: Option<(f64, DVector<f64>, Vec<f64>)> = None;
        for mask in 1u32..(1u32 << k) {
            let idx: Vec<usize> = (0..k).filter(|i| mask & (1 << i) != 0).collect();
            let g0 = &self.generators[idx[0]];
            let (point, weights) = if idx.len() == 1 {
                (g0.clone(), vec![1.0])
            } else {
                let cols: Vec<DVector<f64>> =
                    idx[1..].iter().map(|&i| &self.generators[i] - g0).collect();
                let d = nalgebra::DMatrix::from_columns(&cols);
                let svd = d.clone().svd(true, true);
                let Ok(mu) = svd.solve(&(x - g0), 1e-12) else { continue };
                let lambda0 = 1.0 - mu.sum();
                let mut w = vec![lambda0];
                w.extend(mu.iter().cloned());
                if w.iter().any(|&l| l < -1e-12) {
                    continue;
                }
                (g0 + d * mu, w)
            };
            let dist = (&point - x).norm();
            if best.as_ref().is_none_or(|(bd, _, _)| dist < *bd - 1e-15) {
                let mut full = vec![0.0; k];
                for (slot, &i) in idx.iter().enumerate() {
                    full[i] = weights[slot].max(0.0);
                }
                best = Some((dist, point, full));
            }
        }
        let (_, point, weights) = best.expect("the single-generator subsets always qualify");
        (point, weights)
    }

    pub fn distance(&self, x: &DVector<f64>) -> f64 {
        (self.nearest_point(x).0 - x).norm()
    }

    pub fn contains(&self, x: &DVector<f64>, tol: f64) -> bool {
        if let Some(facets) = &self.facets {
            facets.iter().all(|f| f.normal.dot(x) <= f.offset + tol)
        } else {
            self.distance(x) <= tol
        }
    }

    /// Image of the polytope under `x -> B^T x` for an orthonormal basis `B`.
    pub fn coords_in(&self, s: &Subspace) -> Polytope {
        Polytope::from_generators(self.generators.iter().map(|g| s.coords(g)).collect())
    }

    /// Hausdorff distance estimated through support functions on unit directions.
    pub fn hausdorff_estimate(&self, other: &Polytope, directions: &[DVector<f64>]) -> f64 {
        directions
            .iter()
            .map(|w| (self.support(w) - other.support(w)).abs())
            .fold(0.0, f64::max)
    }
}

/// `span{g - gtilde : g a generator of P}`.
pub fn span_of_differences(p: &Polytope, gtilde: &DVector<f64>) -> Result<Subspace> {
    let dist = p.distance(gtilde);
    if dist > MEMBERSHIP_TOL {
        return Err(Error::NotInPolytope { point: gtilde.as_slice().to_vec(), distance: dist });
    }
    let diffs: Vec<DVector<f64>> = p.generators().iter().map(|g| g - gtilde).collect();
    Ok(Subspace::span(p.dim(), &diffs))
}

/// Largest `eps` for which the epsilon-relative interior relative to `v` is nonempty.
///
/// `INFINITY` when `v` is the zero subspace: the ball in `V` is then `{0}`.
pub fn max_feasible_eps(p: &Polytope, v: &Subspace) -> Result<f64> {
    let facets = p.facets_or_hull()?;
    let weights: Vec<f64> = facets.iter().map(|f| v.project(&f.normal).norm()).collect();
    Ok(hull::max_uniform_shrink(&facets, &weights, p.dim()).unwrap_or(f64::INFINITY))
}

/// `{g : a_i . g + eps ||P_V a_i|| <= b_i}`, the set of `g` whose closed
/// `eps`-ball in `V` stays inside `P`.
pub fn epsilon_relative_interior(p: &Polytope, v: &Subspace, eps: f64) -> Result<Polytope> {
    if eps <= 0.0 {
        return Err(Error::Precondition(format!("eps must be positive, got {eps}")));
    }
    if v.dim() == 0 {
        return Ok(p.clone());
    }
    let facets = p.facets_or_hull()?;
    let shrunk: Vec<Facet> = facets
        .iter()
        .map(|f| Facet {
            normal: f.normal.clone(),
            offset: f.offset - eps * v.project(&f.normal).norm(),
        })
        .collect();
    let max_feasible = max_feasible_eps(p, v)?;
    if eps > max_feasible + 1e-12 {
        return Err(Error::EpsilonTooLarge { eps, max_feasible });
    }
    let verts = hull::vertices_of_facets(&shrunk, p.dim(), 1e-10);
    if verts.is_empty() {
        return Err(Error::EpsilonTooLarge { eps, max_feasible });
    }
    let mut out = Polytope::from_generators(verts);
    out.facets = Some(shrunk);
    Ok(out)
}

/// Normal cone of a polytope at one of its points.
#[derive(Debug, Clone)]
pub enum NormalCone {
    /// The point is in the relative interior; the cone is a linear subspace.
    Subspace(Subspace),
    /// Boundary point: lineality space plus extreme rays.
    Cone { lineality: Subspace, rays: Vec<DVector<f64>> },
}

impl NormalCone {
    pub fn as_subspace(&self) -> Option<&Subspace> {
        match self {
            NormalCone::Subspace(s) => Some(s),
            NormalCone::Cone { .. } => None,
        }
    }
}

/// `N_P(g0) = {w : <w, g - g0> <= 0 for all g in P}`.
pub fn normal_cone(p: &Polytope, g0: &DVector<f64>) -> Result<NormalCone> {
    let dist = p.distance(g0);
    if dist > MEMBERSHIP_TOL {
        return Err(Error::NotInPolytope { point: g0.as_slice().to_vec(), distance: dist });
    }
    let diffs: Vec<DVector<f64>> = p.generators().iter().map(|g| g - g0).collect();
    let aff = Subspace::span(p.dim(), &diffs);
    let lineality = aff.complement();
    let facets = p.facets_or_hull()?;
    let rays: Vec<DVector<f64>> = facets
        .iter()
        .filter_map(|f| {
            let along = aff.project(&f.normal);
            let tight = f.offset - f.normal.dot(g0) <= MEMBERSHIP_TOL;
            (along.norm() > 1e-12 && tight).then_some(along)
        })
        .collect();
    if rays.is_empty() {
        Ok(NormalCone::Subspace(lineality))
    } else {
        Ok(NormalCone::Cone { lineality, rays })
    }
}

/// Orthogonal projection onto `s`.
pub fn project(s: &Subspace, x: &DVector<f64>) -> DVector<f64> {
    s.project(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(xs)
    }

    fn segment(lo: f64, hi: f64) -> Polytope {
        Polytope::with_hull_facets(vec![v(&[0.0, lo]), v(&[0.0, hi])]).unwrap()
    }

    fn square() -> Polytope {
        Polytope::with_hull_facets(vec![
            v(&[-1.0, -1.0]),
            v(&[-1.0, 1.0]),
            v(&[1.0, -1.0]),
            v(&[1.0, 1.0]),
        ])
        .unwrap()
    }

    #[test]
    fn span_of_segment_is_second_axis() {
        let s = span_of_differences(&segment(-1.0, 1.0), &v(&[0.0, 1.0])).unwrap();
        assert_eq!(s.dim(), 1);
        assert!(s.max_principal_angle(&Subspace::span(2, &[v(&[0.0, 1.0])])) < 1e-14);
    }

    #[test]
    fn span_of_singleton_is_zero() {
        let p = Polytope::singleton(v(&[2.0, 0.0]));
        assert_eq!(span_of_differences(&p, &v(&[2.0, 0.0])).unwrap().dim(), 0);
    }

    #[test]
    fn span_of_box_is_everything() {
        assert_eq!(span_of_differences(&square(), &v(&[1.0, 1.0])).unwrap().dim(), 2);
    }

    #[test]
    fn span_rejects_outside_point() {
        let err = span_of_differences(&segment(-1.0, 1.0), &v(&[0.5, 0.0])).unwrap_err();
        assert!(matches!(err, Error::NotInPolytope { .. }));
    }

    #[test]
    fn eps_ri_of_unit_segment() {
        let p = segment(-1.0, 1.0);
        let vs = span_of_differences(&p, &v(&[0.0, -1.0])).unwrap();
        let ri = epsilon_relative_interior(&p, &vs, 0.5).unwrap();
        let mut ys: Vec<f64> = ri.generators().iter().map(|g| g[1]).collect();
        ys.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(ri.generators().len(), 2);
        assert!((ys[0] + 0.5).abs() < 1e-14 && (ys[1] - 0.5).abs() < 1e-14);
        assert!(ri.generators().iter().all(|g| g[0].abs() < 1e-14));
    }

    #[test]
    fn eps_ri_of_asymmetric_segment() {
        let p = segment(-1.0, 2.0);
        let vs = span_of_differences(&p, &v(&[0.0, 2.0])).unwrap();
        let ri = epsilon_relative_interior(&p, &vs, 0.5).unwrap();
        let mut ys: Vec<f64> = ri.generators().iter().map(|g| g[1]).collect();
        ys.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((ys[0] + 0.5).abs() < 1e-14 && (ys[1] - 1.5).abs() < 1e-14);
        assert!((max_feasible_eps(&p, &vs).unwrap() - 1.5).abs() < 1e-12);
    }

    #[test]
    fn eps_ri_with_zero_v_is_identity() {
        let p = Polytope::singleton(v(&[2.0, 0.0]));
        let ri = epsilon_relative_interior(&p, &Subspace::zero(2), 0.3).unwrap();
        assert_eq!(ri.generators(), p.generators());
        assert_eq!(max_feasible_eps(&p, &Subspace::zero(2)).unwrap(), f64::INFINITY);
    }

    #[test]
    fn eps_ri_too_large_reports_max() {
        let p = segment(-1.0, 1.0);
        let vs = span_of_differences(&p, &v(&[0.0, 1.0])).unwrap();
        match epsilon_relative_interior(&p, &vs, 1.5) {
            Err(Error::EpsilonTooLarge { max_feasible, .. }) => {
                assert!((max_feasible - 1.0).abs() < 1e-12)
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn normal_cone_at_segment_midpoint() {
        let cone = normal_cone(&segment(-1.0, 1.0), &v(&[0.0, 0.0])).unwrap();
        let s = cone.as_subspace().expect("relative interior point");
        assert!(s.max_principal_angle(&Subspace::span(2, &[v(&[1.0, 0.0])])) < 1e-14);
    }

    #[test]
    fn normal_cone_at_box_center_is_zero() {
        let cone = normal_cone(&square(), &v(&[0.0, 0.0])).unwrap();
        assert_eq!(cone.as_subspace().unwrap().dim(), 0);
    }

    #[test]
    fn normal_cone_of_singleton_is_everything() {
        let p = Polytope::singleton(v(&[2.0, 0.0]));
        let cone = normal_cone(&p, &v(&[2.0, 0.0])).unwrap();
        assert_eq!(cone.as_subspace().unwrap().dim(), 2);
    }

    #[test]
    fn normal_cone_at_corner_has_rays() {
        match normal_cone(&square(), &v(&[1.0, 1.0])).unwrap() {
            NormalCone::Cone { lineality, rays } => {
                assert_eq!(lineality.dim(), 0);
                assert_eq!(rays.len(), 2);
            }
            other => panic!("expected a cone, got {other:?}"),
        }
    }

    #[test]
    fn nearest_point_on_segment() {
        let p = Polytope::from_generators(vec![v(&[-0.2, 1.0]), v(&[0.2, -1.0])]);
        let (q, w) = p.nearest_point(&v(&[0.0, 0.0]));
        assert!(q.norm() < 1e-15);
        assert!((w[0] - 0.5).abs() < 1e-12 && (w[1] - 0.5).abs() < 1e-12);
        let (q, _) = p.nearest_point(&v(&[0.0, 3.0]));
        assert!((q - v(&[-0.2, 1.0])).norm() < 1e-15);
    }

    #[test]
    fn facet_and_generator_supports_agree() {
        let p = square();
        let dirs = crate::sampling::unit_directions(2, 64, 3);
        let verts = hull::vertices_of_facets(p.facets().unwrap(), 2, 1e-12);
        let q = Polytope::from_generators(verts);
        assert!(p.hausdorff_estimate(&q, &dirs) <= 1e-10);
    }
}
