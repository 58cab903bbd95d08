//! Closed sets with exact normal cones, for the set-level certificates.

use nalgebra::DVector;

/// Slack under which a point counts as on the boundary.
pub const BOUNDARY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum SetDescr {
    /// `{x : <a, x> <= b}`.
    HalfSpace { normal: DVector<f64>, offset: f64 },
    /// `{x : lo <= x <= hi}` componentwise.
    Box { lo: DVector<f64>, hi: DVector<f64> },
    /// `{x : ||x - c|| >= r}`, the complement of an open ball.
    DiskComplement { center: DVector<f64>, radius: f64 },
    /// `{(x1, x2) : x2 >= x1^2}`.
    ParabolaEpigraph,
    /// `D x E` with coordinates of `D` first.
    Product(Box<SetDescr>, Box<SetDescr>),
}

impl SetDescr {
    pub fn half_space(normal: &[f64], offset: f64) -> Self {
        SetDescr::HalfSpace { normal: DVector::from_column_slice(normal), offset }
    }

    pub fn unit_box(lo: &[f64], hi: &[f64]) -> Self {
        SetDescr::Box { lo: DVector::from_column_slice(lo), hi: DVector::from_column_slice(hi) }
    }

    pub fn unit_disk_complement() -> Self {
        SetDescr::DiskComplement { center: DVector::zeros(2), radius: 1.0 }
    }

    pub fn product(d: SetDescr, e: SetDescr) -> Self {
        SetDescr::Product(Box::new(d), Box::new(e))
    }

    pub fn label(&self) -> String {
        match self {
            SetDescr::HalfSpace { .. } => "half-space".into(),
            SetDescr::Box { .. } => "box".into(),
            SetDescr::DiskComplement { .. } => "disk-complement".into(),
            SetDescr::ParabolaEpigraph => "parabola-epigraph".into(),
            SetDescr::Product(d, e) => format!("{} x {}", d.label(), e.label()),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            SetDescr::HalfSpace { normal, .. } => normal.len(),
            SetDescr::Box { lo, .. } => lo.len(),
            SetDescr::DiskComplement { center, .. } => center.len(),
            SetDescr::ParabolaEpigraph => 2,
            SetDescr::Product(d, e) => d.dim() + e.dim(),
        }
    }

    fn split(&self, x: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
        let SetDescr::Product(d, _) = self else { unreachable!("split on a non-product set") };
        let k = d.dim();
        (x.rows(0, k).into_owned(), x.rows(k, x.len() - k).into_owned())
    }

    fn join(a: &DVector<f64>, b: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(a.len() + b.len(), a.iter().chain(b.iter()).cloned())
    }

    pub fn contains(&self, x: &DVector<f64>, tol: f64) -> bool {
        match self {
            SetDescr::HalfSpace { normal, offset } => normal.dot(x) <= offset + tol,
            SetDescr::Box { lo, hi } => (0..lo.len()).all(|i| x[i] >= lo[i] - tol && x[i] <= hi[i] + tol),
            SetDescr::DiskComplement { center, radius } => (x - center).norm() >= radius - tol,
            SetDescr::ParabolaEpigraph => x[1] >= x[0] * x[0] - tol,
            SetDescr::Product(d, e) => {
                let (a, b) = self.split(x);
                d.contains(&a, tol) && e.contains(&b, tol)
            }
        }
    }

    /// Extreme rays generating `N_C(x)` for `x` in `C`; empty means `{0}`.
    pub fn normal_rays(&self, x: &DVector<f64>) -> Vec<DVector<f64>> {
        match self {
            SetDescr::HalfSpace { normal, offset } => {
                if (normal.dot(x) - offset).abs() <= BOUNDARY_TOL * (1.0 + offset.abs()) {
                    vec![normal.normalize()]
                } else {
                    Vec::new()
                }
            }
            SetDescr::Box { lo, hi } => {
                let n = lo.len();
                let mut rays = Vec::new();
                for i in 0..n {
                    if (x[i] - lo[i]).abs() <= BOUNDARY_TOL {
                        let mut e = DVector::zeros(n);
                        e[i] = -1.0;
                        rays.push(e);
                    }
                    if (x[i] - hi[i]).abs() <= BOUNDARY_TOL {
                        let mut e = DVector::zeros(n);
                        e[i] = 1.0;
                        rays.push(e);
                    }
                }
                rays
            }
            SetDescr::DiskComplement { center, radius } => {
                let d = x - center;
                if (d.norm() - radius).abs() <= BOUNDARY_TOL * radius.max(1.0) {
                    vec![-d.normalize()]
                } else {
                    Vec::new()
                }
            }
            SetDescr::ParabolaEpigraph => {
                if (x[1] - x[0] * x[0]).abs() <= BOUNDARY_TOL {
                    vec![DVector::from_vec(vec![2.0 * x[0], -1.0]).normalize()]
                } else {
                    Vec::new()
                }
            }
            SetDescr::Product(d, e) => {
                let (a, b) = self.split(x);
                let za = DVector::zeros(a.len());
                let zb = DVector::zeros(b.len());
                let mut rays: Vec<DVector<f64>> = d.normal_rays(&a).iter().map(|r| Self::join(r, &zb)).collect();
                rays.extend(e.normal_rays(&b).iter().map(|r| Self::join(&za, r)));
                rays
            }
        }
    }

    /// A point of `C` near `x` (the nearest point for every set but the parabola,
    /// where the vertical projection is used).
    pub fn retract(&self, x: &DVector<f64>) -> DVector<f64> {
        if self.contains(x, 0.0) {
            return x.clone();
        }
        match self {
            SetDescr::Box { lo, hi } => DVector::from_iterator(lo.len(), (0..lo.len()).map(|i| x[i].clamp(lo[i], hi[i]))),
            SetDescr::Product(d, e) => {
                let (a, b) = self.split(x);
                Self::join(&d.retract(&a), &e.retract(&b))
            }
            _ => self.to_boundary(x, 0),
        }
    }

    /// A boundary point near `x`. For products, `parity` picks which factor's
    /// boundary is used.
    pub fn to_boundary(&self, x: &DVector<f64>, parity: usize) -> DVector<f64> {
        match self {
            SetDescr::HalfSpace { normal, offset } => x - normal * ((normal.dot(x) - offset) / normal.norm_squared()),
            SetDescr::Box { lo, hi } => {
                let mut y = DVector::from_iterator(lo.len(), (0..lo.len()).map(|i| x[i].clamp(lo[i], hi[i])));
                let mut best = (f64::INFINITY, 0, 0.0);
                for i in 0..lo.len() {
                    for b in [lo[i], hi[i]] {
                        let gap = (y[i] - b).abs();
                        if gap < best.0 {
                            best = (gap, i, b);
                        }
                    }
                }
                y[best.1] = best.2;
                y
            }
            SetDescr::DiskComplement { center, radius } => {
                let d = x - center;
                let n = d.norm();
                if n < 1e-12 {
                    let mut e = DVector::zeros(d.len());
                    e[0] = *radius;
                    center + e
                } else {
                    center + d * (radius / n)
                }
            }
            SetDescr::ParabolaEpigraph => DVector::from_vec(vec![x[0], x[0] * x[0]]),
            SetDescr::Product(d, e) => {
                let (a, b) = self.split(x);
                if parity % 2 == 0 {
                    Self::join(&d.to_boundary(&a, parity / 2), &e.retract(&b))
                } else {
                    Self::join(&d.retract(&a), &e.to_boundary(&b, parity / 2))
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(xs)
    }

    #[test]
    fn disk_normal_points_inward() {
        let s = SetDescr::unit_disk_complement();
        assert_eq!(s.normal_rays(&v(&[1.0, 0.0])), vec![v(&[-1.0, 0.0])]);
        assert!(s.normal_rays(&v(&[2.0, 0.0])).is_empty());
        assert!(s.contains(&s.to_boundary(&v(&[0.3, 0.4]), 0), 1e-12));
    }

    #[test]
    fn box_corner_has_two_rays() {
        let s = SetDescr::unit_box(&[0.0, 0.0], &[1.0, 1.0]);
        assert_eq!(s.normal_rays(&v(&[0.0, 0.0])).len(), 2);
        assert_eq!(s.retract(&v(&[2.0, -1.0])), v(&[1.0, 0.0]));
    }

    #[test]
    fn product_rays_are_embedded() {
        let s = SetDescr::product(SetDescr::unit_disk_complement(), SetDescr::unit_box(&[0.0], &[0.0]));
        let rays = s.normal_rays(&v(&[1.0, 0.0, 0.0]));
        assert_eq!(rays, vec![v(&[-1.0, 0.0, 0.0]), v(&[0.0, 0.0, -1.0]), v(&[0.0, 0.0, 1.0])]);
    }

    #[test]
    fn parabola_boundary_and_normal() {
        let s = SetDescr::ParabolaEpigraph;
        let b = s.to_boundary(&v(&[0.5, 3.0]), 0);
        assert_eq!(b, v(&[0.5, 0.25]));
        let r = &s.normal_rays(&b)[0];
        assert!((r - v(&[1.0, -1.0]).normalize()).norm() < 1e-15);
    }
}
