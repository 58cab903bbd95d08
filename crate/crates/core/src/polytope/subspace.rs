use nalgebra::{DMatrix, DVector};
use serde::Serialize;

/// Singular values below `RANK_RTOL * max(sigma_max, 1)` count as zero.
pub const RANK_RTOL: f64 = 1e-10;

/// A linear subspace of `R^n` held through an orthonormal basis.
#[derive(Debug, Clone, PartialEq)]
pub struct Subspace {
    basis: DMatrix<f64>,
}

impl Subspace {
    pub fn zero(ambient: usize) -> Self {
        Self { basis: DMatrix::zeros(ambient, 0) }
    }

    pub fn full(ambient: usize) -> Self {
        Self { basis: DMatrix::identity(ambient, ambient) }
    }

    /// Span of the given vectors, with a deterministic orthonormal basis.
    ///
    /// The numerical rank comes from an SVD; the basis itself is produced by
    /// Gram-Schmidt on the projected canonical vectors `P e_1, P e_2, ...`, so
    /// it does not depend on the sign conventions of the SVD.
    pub fn span(ambient: usize, vectors: &[DVector<f64>]) -> Self {
        if vectors.is_empty() || ambient == 0 {
            return Self::zero(ambient);
        }
        let m = DMatrix::from_columns(vectors);
        let svd = m.svd(true, false);
        let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
        let cutoff = RANK_RTOL * smax.max(1.0);
        let u = svd.u.expect("left singular vectors requested");
        let cols: Vec<DVector<f64>> = svd
            .singular_values
            .iter()
            .enumerate()
            .filter(|(_, &s)| s > cutoff)
            .map(|(i, _)| u.column(i).into_owned())
            .collect();
        let rank = cols.len();
        let mut projector = DMatrix::zeros(ambient, ambient);
        for c in &cols {
            projector += c * c.transpose();
        }
        Self::from_projector(&projector, rank)
    }

    /// Orthonormal basis for the range of an orthogonal projector of known rank.
    pub(crate) fn from_projector(projector: &DMatrix<f64>, rank: usize) -> Self {
        let n = projector.nrows();
        // Round off SVD noise so axis-aligned subspaces get exact canonical bases.
        let projector = projector.map(|t| {
            if t.abs() <= 1e-14 {
                0.0
            } else if (t - 1.0).abs() <= 1e-14 {
                1.0
            } else {
                t
            }
        });
        let mut basis: Vec<DVector<f64>> = Vec::with_capacity(rank);
        // Visit seeds by decreasing projected norm so the picks are well conditioned,
        // ties broken by index.
        let mut seeds: Vec<(usize, f64)> =
            (0..n).map(|j| (j, projector.column(j).norm())).collect();
        seeds.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
        let mut order: Vec<usize> = Vec::new();
        for &(j, _) in &seeds {
            if basis.len() == rank {
                break;
            }
            let mut v = projector.column(j).into_owned();
            for _ in 0..2 {
                for q in &basis {
                    let c = q.dot(&v);
                    v -= q * c;
                }
            }
            let norm = v.norm();
            if norm > 1e-6 {
                basis.push(v / norm);
                order.push(j);
            }
        }
        // Present the basis in canonical-index order of the seeds that produced it.
        let mut paired: Vec<(usize, DVector<f64>)> = order.into_iter().zip(basis).collect();
        paired.sort_by_key(|(j, _)| *j);
        let cols: Vec<DVector<f64>> = paired.into_iter().map(|(_, v)| v).collect();
        if cols.is_empty() {
            return Self::zero(n);
        }
        // Re-orthonormalize in the final order for bitwise reproducible columns.
        let mut out: Vec<DVector<f64>> = Vec::with_capacity(cols.len());
        for mut v in cols {
            for _ in 0..2 {
                for q in &out {
                    let c = q.dot(&v);
                    v -= q * c;
                }
            }
            let norm = v.norm();
            out.push(v / norm);
        }
        Self { basis: DMatrix::from_columns(&out) }
    }

    pub fn ambient(&self) -> usize {
        self.basis.nrows()
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn projector(&self) -> DMatrix<f64> {
        &self.basis * self.basis.transpose()
    }

    /// Orthogonal projection `B (B^T x)`.
    pub fn project(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.basis * (self.basis.transpose() * x)
    }

    /// Coordinates of `x` in this basis, `B^T x` (the pseudo-inverse for orthonormal `B`).
    pub fn coords(&self, x: &DVector<f64>) -> DVector<f64> {
        self.basis.transpose() * x
    }

    pub fn embed(&self, coords: &DVector<f64>) -> DVector<f64> {
        &self.basis * coords
    }

    pub fn complement(&self) -> Self {
        let n = self.ambient();
        let p = DMatrix::identity(n, n) - self.projector();
        Self::from_projector(&p, n - self.dim())
    }

    /// Largest principal angle to `other`, in radians.
    ///
    /// Computed as `asin ||P_A - P_B||_2`, which is accurate for small angles.
    /// Subspaces of different dimension are at angle `pi/2`.
    pub fn max_principal_angle(&self, other: &Subspace) -> f64 {
        assert_eq!(self.ambient(), other.ambient(), "ambient dimensions differ");
        if self.dim() != other.dim() {
            return std::f64::consts::FRAC_PI_2;
        }
        if self.dim() == 0 || self.dim() == self.ambient() {
            return 0.0;
        }
        let diff = self.projector() - other.projector();
        let s = diff
            .svd(false, false)
            .singular_values
            .iter()
            .cloned()
            .fold(0.0, f64::max);
        s.min(1.0).asin()
    }

    /// Max deviation of `B^T B` from the identity.
    pub fn orthonormality_error(&self) -> f64 {
        let g = self.basis.transpose() * &self.basis;
        let k = self.dim();
        (g - DMatrix::identity(k, k)).abs().max()
    }

    pub fn contains(&self, x: &DVector<f64>, tol: f64) -> bool {
        (x - self.project(x)).norm() <= tol
    }

    pub fn columns(&self) -> Vec<Vec<f64>> {
        self.basis.column_iter().map(|c| c.iter().cloned().collect()).collect()
    }
}

impl Serialize for Subspace {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.columns().serialize(serializer)
    }
}
